//! Environment registers and branch states on grid ⊗ register.
//!
//! A register is K identical qubits in a product state, so the amplitude of
//! a basis string depends only on its Hamming weight m. Register basis
//! strings are treated as discrete environment configurations: two branches
//! whose registers have disjoint support do not overlap, even where their
//! grid factors do.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{PsdError, Result};
use crate::evolution::EvolutionEngine;
use crate::grid::Region;
use crate::wavefunction::{inner, project, WaveFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Register {
    /// Amplitudes of |0⟩ and |1⟩ shared by every qubit.
    pub qubit: [C64; 2],
    pub count: usize,
}

impl Register {
    pub fn zeros(count: usize) -> Self {
        Self { qubit: [C64::new(1.0, 0.0), C64::new(0.0, 0.0)], count }
    }

    /// |+⟩ on every qubit, R(π/4)|0⟩ with the real rotation below.
    pub fn plus(count: usize) -> Self {
        Self::zeros(count).rotated(std::f64::consts::FRAC_PI_4)
    }

    /// Applies R(θ): |0⟩ → cos θ|0⟩ + sin θ|1⟩, |1⟩ → −sin θ|0⟩ + cos θ|1⟩
    /// to every qubit.
    pub fn rotated(&self, theta: f64) -> Self {
        let (c, s) = (theta.cos(), theta.sin());
        let [a, b] = self.qubit;
        Self { qubit: [a * c - b * s, a * s + b * c], count: self.count }
    }

    /// ⟨self|other⟩ = (q*·q′)^K.
    pub fn overlap(&self, other: &Self) -> Result<C64> {
        if self.count != other.count {
            return Err(PsdError::InvalidArgument(format!("registers of {} and {} qubits", self.count, other.count)));
        }
        let q = self.qubit[0].conj() * other.qubit[0] + self.qubit[1].conj() * other.qubit[1];
        Ok(q.powu(self.count as u32))
    }

    /// Amplitude of any basis string with m ones.
    pub fn weight_amplitude(&self, m: usize) -> C64 {
        self.qubit[0].powu((self.count - m) as u32) * self.qubit[1].powu(m as u32)
    }
}

/// C(K, m) for m = 0..=K, as reals.
pub fn binomials(k: usize) -> Vec<f64> {
    let mut row = vec![1.0; k + 1];
    for m in 1..k {
        row[m] = row[m - 1] * (k + 1 - m) as f64 / m as f64;
    }
    row
}

/// Σ_t ψ_t ⊗ r_t with every register of the same size.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchState {
    terms: Vec<(WaveFunction, Register)>,
}

impl BranchState {
    pub fn new(terms: Vec<(WaveFunction, Register)>) -> Result<Self> {
        let Some((first, reg)) = terms.first() else {
            return Err(PsdError::InvalidArgument("a branch needs at least one term".into()));
        };
        for (psi, r) in &terms {
            first.grid().check_same(psi.grid())?;
            if r.count != reg.count {
                return Err(PsdError::InvalidArgument("all registers of a branch must have the same size".into()));
            }
        }
        Ok(Self { terms })
    }

    pub fn product(psi: WaveFunction, register: Register) -> Self {
        Self { terms: vec![(psi, register)] }
    }

    pub fn terms(&self) -> &[(WaveFunction, Register)] {
        &self.terms
    }

    pub fn qubits(&self) -> usize {
        self.terms[0].1.count
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for (a, ra) in &self.terms {
            for (b, rb) in &other.terms {
                acc += inner(a, b)? * ra.overlap(rb)?;
            }
        }
        Ok(acc)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.inner(self).map(|z| z.re).unwrap_or(f64::NAN)
    }

    /// Grid amplitudes of the register sector with Hamming weight m.
    pub fn weight_field(&self, m: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.terms[0].0.grid().len()];
        for (psi, r) in &self.terms {
            let a = r.weight_amplitude(m);
            if a.norm() == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(psi.amplitudes()) {
                *o += p * a;
            }
        }
        out
    }

    /// Evolves the grid factors; registers are idle.
    pub fn evolve_steps(&self, engine: &EvolutionEngine, steps: usize) -> Result<Self> {
        let terms =
            self.terms.iter().map(|(psi, r)| Ok((engine.evolve_steps(psi, steps)?, *r))).collect::<Result<_>>()?;
        Ok(Self { terms })
    }

    pub fn map_grid(&self, f: impl Fn(&WaveFunction) -> Result<WaveFunction>) -> Result<Self> {
        let terms = self.terms.iter().map(|(psi, r)| Ok((f(psi)?, *r))).collect::<Result<_>>()?;
        Ok(Self { terms })
    }

    /// Impulsive coupling P_Δ ⊗ R(θ) + P_{Δᶜ} ⊗ R(−θ): every term splits by
    /// the region and its register turns one way or the other.
    pub fn conditional_rotation(&self, region: &Region, theta: f64) -> Result<Self> {
        let outside = region.complement();
        let mut terms = Vec::with_capacity(2 * self.terms.len());
        for (psi, r) in &self.terms {
            let inside = project(psi, region)?;
            let rest = project(psi, &outside)?;
            if inside.norm_sqr() > 0.0 {
                terms.push((inside, r.rotated(theta)));
            }
            if rest.norm_sqr() > 0.0 {
                terms.push((rest, r.rotated(-theta)));
            }
        }
        if terms.is_empty() {
            return Err(PsdError::InvalidArgument("conditional rotation of a null branch".into()));
        }
        Ok(Self { terms })
    }
}

/// The pair overlap functional over grid cells × register strings:
/// sqrt(Σ min(|Ψ₁|², |Ψ₂|²)) / min(‖Ψ₁‖, ‖Ψ₂‖), grouping strings by weight.
pub fn joint_pair_w(a: &BranchState, b: &BranchState) -> Result<f64> {
    a.terms[0].0.grid().check_same(b.terms[0].0.grid())?;
    if a.qubits() != b.qubits() {
        return Err(PsdError::InvalidArgument("branches carry registers of different size".into()));
    }
    let k = a.qubits();
    let vol = a.terms[0].0.grid().cell_volume();
    let binom = binomials(k);
    let (mut min_sum, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (m, &mult) in binom.iter().enumerate() {
        let (fa, fb) = (a.weight_field(m), b.weight_field(m));
        let (mut s, mut sa, mut sb) = (0.0, 0.0, 0.0);
        for (x, y) in fa.iter().zip(&fb) {
            let (pa, pb) = (x.norm_sqr(), y.norm_sqr());
            s += pa.min(pb);
            sa += pa;
            sb += pb;
        }
        min_sum += mult * s;
        na += mult * sa;
        nb += mult * sb;
    }
    let denom = (na.min(nb) * vol).sqrt();
    if !(denom > 0.0) {
        return Err(PsdError::InvalidArgument("a branch has zero norm".into()));
    }
    Ok((min_sum * vol).sqrt() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::wavefunction::{gaussian_packet, PacketParams};

    #[test]
    fn per_qubit_overlap_of_opposite_rotations() {
        let r = Register::plus(5);
        for theta in [0.0, 0.3, 1.0, std::f64::consts::FRAC_PI_2] {
            let ov = r.rotated(theta / 2.0).overlap(&r.rotated(-theta / 2.0)).unwrap();
            assert!((ov - C64::new(theta.cos().powi(5), 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn weight_amplitudes_are_normalized() {
        let r = Register::plus(7).rotated(0.2);
        let total: f64 = binomials(7).iter().enumerate().map(|(m, c)| c * r.weight_amplitude(m).norm_sqr()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(binomials(4), vec![1.0, 4.0, 6.0, 4.0, 1.0]);
    }

    #[test]
    fn disjoint_registers_do_not_overlap() {
        let g = Grid::line(40.0, 256).unwrap();
        let psi = gaussian_packet(&g, &PacketParams::line(0.0, 0.0, 2.0)).unwrap().scaled(C64::new(0.5f64.sqrt(), 0.0));
        let r = Register::plus(3);
        let half = std::f64::consts::FRAC_PI_4;
        let a = BranchState::product(psi.clone(), r.rotated(half));
        let b = BranchState::product(psi.clone(), r.rotated(-half));
        assert!(joint_pair_w(&a, &b).unwrap() < 1e-7);
        let c = BranchState::product(psi, r);
        assert!((joint_pair_w(&c, &c).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_register_reduces_to_grid_pair() {
        let g = Grid::line(40.0, 256).unwrap();
        let a = gaussian_packet(&g, &PacketParams::line(-2.0, 0.0, 2.0)).unwrap();
        let b = gaussian_packet(&g, &PacketParams::line(3.0, 0.0, 2.0)).unwrap();
        let d = crate::decomposition::Decomposition::from_components(vec![a.clone(), b.clone()]).unwrap();
        let w = crate::overlap::w_exact_pair(&d).unwrap().value;
        let jw =
            joint_pair_w(&BranchState::product(a, Register::zeros(0)), &BranchState::product(b, Register::zeros(0)))
                .unwrap();
        assert!((w - jw).abs() < 1e-12);
    }
}
