//! Zero-temperature damped oscillator:
//! ρ̇ = (−iω − γ/2) a†a ρ + (iω − γ/2) ρ a†a + γ a ρ a†.

use log::debug;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::fock::{coherent_overlap, coherent_state, FockSpace};
use crate::error::{PsdError, Result};

/// Population allowed in the two highest Fock levels.
pub const LEAKAGE_LIMIT: f64 = 1e-6;
pub const TRACE_DRIFT_LIMIT: f64 = 1e-8;
const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LindbladParams {
    pub omega: f64,
    pub gamma: f64,
}

impl LindbladParams {
    pub fn new(omega: f64, gamma: f64) -> Result<Self> {
        let p = Self { omega, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.omega.is_finite() || !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(PsdError::InvalidArgument(format!(
                "need finite omega and gamma > 0, got omega = {}, gamma = {}",
                self.omega, self.gamma
            )));
        }
        Ok(())
    }

    /// Largest step the integrator accepts.
    pub fn max_dt(&self) -> f64 {
        0.01 / self.omega.abs().max(self.gamma)
    }

    /// α_t = α e^{(−iω − γ/2)t}.
    pub fn evolve_amplitude(&self, alpha: C64, t: f64) -> C64 {
        alpha * (C64::new(-self.gamma / 2.0, -self.omega) * t).exp()
    }

    /// f(t) = ⟨β|α⟩^{1 − e^{−γt}}, with the power taken through the exponent
    /// −|α|²/2 − |β|²/2 + β*α rather than a principal logarithm.
    pub fn coherence_factor(&self, alpha: C64, beta: C64, t: f64) -> C64 {
        let z = -(alpha.norm_sqr() + beta.norm_sqr()) / 2.0 + beta.conj() * alpha;
        (z * (1.0 - (-self.gamma * t).exp())).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorDensityMatrix {
    pub entries: DMatrix<C64>,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrixRecord {
    pub dim: usize,
    pub time: f64,
    /// Row-major.
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl OscillatorDensityMatrix {
    pub fn new(entries: DMatrix<C64>, time: f64) -> Result<Self> {
        if !entries.is_square() {
            return Err(PsdError::InvalidArgument("density matrix must be square".into()));
        }
        Ok(Self { entries, time })
    }

    /// |u⟩⟨v|.
    pub fn outer(u: &DVector<C64>, v: &DVector<C64>, time: f64) -> Self {
        Self { entries: u * v.adjoint(), time }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        (&self.entries - self.entries.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.entries + self.entries.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Tr(a†a ρ).
    pub fn mean_number(&self) -> C64 {
        (0..self.dim()).map(|n| self.entries[(n, n)] * n as f64).sum()
    }

    pub fn max_entry_deviation(&self, other: &Self) -> f64 {
        (&self.entries - &other.entries).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Σ|λ| over the eigenvalues; for Hermitian matrices only.
    pub fn trace_norm_hermitian(&self) -> f64 {
        self.entries.clone().symmetric_eigenvalues().iter().map(|l| l.abs()).sum()
    }

    pub fn to_record(&self) -> DensityMatrixRecord {
        let n = self.dim();
        let mut re = Vec::with_capacity(n * n);
        let mut im = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                re.push(self.entries[(r, c)].re);
                im.push(self.entries[(r, c)].im);
            }
        }
        DensityMatrixRecord { dim: n, time: self.time, re, im }
    }

    pub fn from_record(rec: &DensityMatrixRecord) -> Result<Self> {
        let n = rec.dim;
        if rec.re.len() != n * n || rec.im.len() != n * n {
            return Err(PsdError::InvalidArgument("density matrix record has the wrong entry count".into()));
        }
        let entries = DMatrix::from_fn(n, n, |r, c| C64::new(rec.re[r * n + c], rec.im[r * n + c]));
        Ok(Self { entries, time: rec.time })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LindbladRun {
    pub rho: OscillatorDensityMatrix,
    pub steps: usize,
    pub dt: f64,
    pub trace_drift: f64,
    /// Largest anti-Hermitian part removed by symmetrization (0 for
    /// non-Hermitian seeds, which are evolved as general matrices).
    pub max_symmetrization: f64,
    pub max_top_population: f64,
}

fn rhs(rho: &DMatrix<C64>, p: &LindbladParams, out: &mut DMatrix<C64>) {
    let n = rho.nrows();
    let left = C64::new(-p.gamma / 2.0, -p.omega);
    let right = C64::new(-p.gamma / 2.0, p.omega);
    for c in 0..n {
        for r in 0..n {
            let mut v = (left * r as f64 + right * c as f64) * rho[(r, c)];
            if r + 1 < n && c + 1 < n {
                v += rho[(r + 1, c + 1)] * (p.gamma * (((r + 1) * (c + 1)) as f64).sqrt());
            }
            out[(r, c)] = v;
        }
    }
}

fn top_population(rho: &DMatrix<C64>) -> f64 {
    let n = rho.nrows();
    (n.saturating_sub(2)..n).map(|k| rho[(k, k)].norm()).sum()
}

/// Fixed-step RK4 from ρ₀ (at its own time) to ρ₀.time + t. The step is
/// shrunk so that a whole number of steps lands exactly on t.
pub fn lindblad_evolve(
    rho0: &OscillatorDensityMatrix,
    params: &LindbladParams,
    t: f64,
    dt: f64,
) -> Result<LindbladRun> {
    params.validate()?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(PsdError::InvalidArgument(format!("evolution time must be non-negative, got {t}")));
    }
    if !(dt > 0.0) || dt > params.max_dt() * (1.0 + 1e-12) {
        return Err(PsdError::InvalidArgument(format!(
            "step {dt} must lie in (0, 0.01/max(omega, gamma)] = (0, {}]",
            params.max_dt()
        )));
    }
    let steps = (t / dt).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { t / steps as f64 };
    let hermitian = rho0.hermiticity_deviation() <= HERMITIAN_TOL;
    let tr0 = rho0.trace();
    let n = rho0.dim();

    let mut rho = rho0.entries.clone();
    let zero = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    let (mut k1, mut k2, mut k3, mut k4) = (zero.clone(), zero.clone(), zero.clone(), zero.clone());
    let mut max_sym: f64 = 0.0;
    let mut max_top = top_population(&rho);
    let half = C64::new(h / 2.0, 0.0);
    let full = C64::new(h, 0.0);
    for _ in 0..steps {
        rhs(&rho, params, &mut k1);
        rhs(&(&rho + &k1 * half), params, &mut k2);
        rhs(&(&rho + &k2 * half), params, &mut k3);
        rhs(&(&rho + &k3 * full), params, &mut k4);
        rho += (&k1 + &k2 * C64::new(2.0, 0.0) + &k3 * C64::new(2.0, 0.0) + &k4) * C64::new(h / 6.0, 0.0);
        if hermitian {
            let adj = rho.adjoint();
            max_sym = max_sym.max((&rho - &adj).iter().map(|z| z.norm()).fold(0.0, f64::max) / 2.0);
            rho = (&rho + adj) * C64::new(0.5, 0.0);
        }
        let top = top_population(&rho);
        max_top = max_top.max(top);
        if top > LEAKAGE_LIMIT {
            return Err(PsdError::TruncationLeakage { population: top });
        }
        if !rho.iter().all(|z| z.is_finite()) {
            return Err(PsdError::Numerical("density matrix became non-finite".into()));
        }
    }
    if max_top > LEAKAGE_LIMIT {
        return Err(PsdError::TruncationLeakage { population: max_top });
    }
    if max_sym > 0.0 {
        debug!("symmetrization removed at most {max_sym:.3e} per entry");
    }
    let trace_drift = (rho.trace() - tr0).norm();
    if trace_drift > TRACE_DRIFT_LIMIT * tr0.norm().max(1.0) {
        return Err(PsdError::Numerical(format!("trace drifted by {trace_drift:.3e}")));
    }
    Ok(LindbladRun {
        rho: OscillatorDensityMatrix { entries: rho, time: rho0.time + t },
        steps,
        dt: h,
        trace_drift,
        max_symmetrization: max_sym,
        max_top_population: max_top,
    })
}

/// f(t)|α_t⟩⟨β_t|, the evolution of ρ(0) = |α⟩⟨β|.
pub fn analytic_solution(
    alpha: C64,
    beta: C64,
    params: &LindbladParams,
    t: f64,
    space: &FockSpace,
) -> Result<OscillatorDensityMatrix> {
    params.validate()?;
    space.check_amplitude(alpha)?;
    space.check_amplitude(beta)?;
    let a_t = coherent_state(params.evolve_amplitude(alpha, t), space)?;
    let b_t = coherent_state(params.evolve_amplitude(beta, t), space)?;
    let f = params.coherence_factor(alpha, beta, t);
    Ok(OscillatorDensityMatrix { entries: (a_t * b_t.adjoint()) * f, time: t })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperpositionReport {
    pub rho: OscillatorDensityMatrix,
    pub f: C64,
    /// Trace norm of the two interference terms.
    pub coherence: f64,
    pub coherence_initial: f64,
    /// ⟨a†a⟩ at t and at 0.
    pub mean_number: f64,
    pub mean_number_initial: f64,
    /// Max-entry distance to the integrated master equation, when requested.
    pub integrator_deviation: Option<f64>,
}

const NORMALIZATION_TOL: f64 = 1e-8;

fn cross_terms(c1: C64, a: &DVector<C64>, c2: C64, b: &DVector<C64>, f: C64) -> DMatrix<C64> {
    let x = (a * b.adjoint()) * (c1 * c2.conj() * f);
    let y = x.adjoint();
    x + y
}

/// ρ(t) for ρ(0) = |S⟩⟨S|, |S⟩ = c₁|α⟩ + c₂|β⟩, assembled from the four
/// analytic terms.
#[allow(clippy::too_many_arguments)]
pub fn superposition_decoherence(
    c1: C64,
    alpha: C64,
    c2: C64,
    beta: C64,
    params: &LindbladParams,
    t: f64,
    space: &FockSpace,
    cross_check: bool,
) -> Result<SuperpositionReport> {
    params.validate()?;
    if alpha == beta {
        return Err(PsdError::InvalidArgument("alpha = beta makes the two branches linearly dependent".into()));
    }
    let norm = c1.norm_sqr() + c2.norm_sqr() + 2.0 * (c1.conj() * c2 * coherent_overlap(alpha, beta)).re;
    if (norm - 1.0).abs() > NORMALIZATION_TOL {
        return Err(PsdError::InvalidArgument(format!("superposition is not normalized: <S|S> = {norm}")));
    }
    let (a0, b0) = (coherent_state(alpha, space)?, coherent_state(beta, space)?);
    let a_t = coherent_state(params.evolve_amplitude(alpha, t), space)?;
    let b_t = coherent_state(params.evolve_amplitude(beta, t), space)?;
    let f = params.coherence_factor(alpha, beta, t);

    let diag =
        (&a_t * a_t.adjoint()) * C64::new(c1.norm_sqr(), 0.0) + (&b_t * b_t.adjoint()) * C64::new(c2.norm_sqr(), 0.0);
    let cross = cross_terms(c1, &a_t, c2, &b_t, f);
    let cross0 = cross_terms(c1, &a0, c2, &b0, C64::new(1.0, 0.0));
    let rho = OscillatorDensityMatrix { entries: diag + &cross, time: t };
    let coherence = OscillatorDensityMatrix { entries: cross, time: t }.trace_norm_hermitian();
    let coherence_initial = OscillatorDensityMatrix { entries: cross0, time: 0.0 }.trace_norm_hermitian();

    let s0 = &a0 * c1 + &b0 * c2;
    let rho0 = OscillatorDensityMatrix::outer(&s0, &s0, 0.0);
    let integrator_deviation = if cross_check {
        let run = lindblad_evolve(&rho0, params, t, params.max_dt())?;
        Some(run.rho.max_entry_deviation(&rho))
    } else {
        None
    };
    Ok(SuperpositionReport {
        mean_number: rho.mean_number().re,
        mean_number_initial: rho0.mean_number().re,
        rho,
        f,
        coherence,
        coherence_initial,
        integrator_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> LindbladParams {
        LindbladParams::new(1.0, 0.5).unwrap()
    }

    #[test]
    fn vacuum_is_fixed() {
        let s = FockSpace::default();
        let v = coherent_state(C64::new(0.0, 0.0), &s).unwrap();
        let rho0 = OscillatorDensityMatrix::outer(&v, &v, 0.0);
        let run = lindblad_evolve(&rho0, &params(), 2.0, 0.005).unwrap();
        assert!(run.rho.max_entry_deviation(&rho0) < 1e-14);
    }

    #[test]
    fn step_precondition() {
        let s = FockSpace::default();
        let v = coherent_state(C64::new(0.5, 0.0), &s).unwrap();
        let rho0 = OscillatorDensityMatrix::outer(&v, &v, 0.0);
        assert!(lindblad_evolve(&rho0, &params(), 1.0, 0.02).is_err());
        assert!(lindblad_evolve(&rho0, &params(), -1.0, 0.01).is_err());
    }

    #[test]
    fn analytic_at_zero_is_seed() {
        let s = FockSpace::default();
        let (a, b) = (C64::new(1.0, 0.5), C64::new(-0.5, 1.0));
        let rho = analytic_solution(a, b, &params(), 0.0, &s).unwrap();
        let seed =
            OscillatorDensityMatrix::outer(&coherent_state(a, &s).unwrap(), &coherent_state(b, &s).unwrap(), 0.0);
        assert!(rho.max_entry_deviation(&seed) < 1e-15);
    }

    #[test]
    fn long_time_limit() {
        let s = FockSpace::default();
        let (a, b) = (C64::new(1.0, 0.5), C64::new(-0.5, 1.0));
        let p = params();
        let t = 20.0 / p.gamma;
        let f = p.coherence_factor(a, b, t);
        let ov = coherent_overlap(b, a);
        assert!((f - ov).norm() < 1e-8);
        let rho = analytic_solution(a, b, &p, t, &s).unwrap();
        assert!((rho.entries[(0, 0)] - ov).norm() < 1e-8);
    }

    #[test]
    fn leakage_is_reported() {
        let s = FockSpace::new(12).unwrap();
        let v = coherent_state(C64::new(1.7, 0.0), &s).unwrap();
        let rho0 = OscillatorDensityMatrix::outer(&v, &v, 0.0);
        assert!(matches!(lindblad_evolve(&rho0, &params(), 0.1, 0.01), Err(PsdError::TruncationLeakage { .. })));
    }

    #[test]
    fn record_roundtrip() {
        let s = FockSpace::new(5).unwrap();
        let rho = analytic_solution(C64::new(0.3, 0.1), C64::new(0.0, -0.4), &params(), 0.7, &s).unwrap();
        let back = OscillatorDensityMatrix::from_record(&rho.to_record()).unwrap();
        assert_eq!(back, rho);
    }

    #[test]
    fn superposition_rejects_equal_branches_and_bad_norm() {
        let s = FockSpace::default();
        let a = C64::new(1.0, 0.0);
        let h = C64::new(0.5f64.sqrt(), 0.0);
        assert!(superposition_decoherence(h, a, h, a, &params(), 1.0, &s, false).is_err());
        assert!(superposition_decoherence(h, a, h, -a, &params(), 1.0, &s, false).is_err());
    }
}
