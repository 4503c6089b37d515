//! Time-series runs of the decoherence models, shaped like the spatial
//! scenarios so the runner can treat them alike.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{positive, ScenarioResult, TimeSeries, Verdict};
use crate::error::{PsdError, Result};
use crate::oscillator::{
    coherent_overlap, ideal_model_evolve, superposition_decoherence, FockSpace, IdealModelConfig, LindbladParams,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OscillatorSuperpositionSpec {
    pub n_max: usize,
    pub alpha: C64,
    pub beta: C64,
    /// Weights of |α⟩ and |β⟩; `None` picks equal real weights.
    pub amplitudes: Option<[C64; 2]>,
    pub omega: f64,
    pub gamma: f64,
    pub horizon: f64,
    pub sample_dt: f64,
    /// Also integrate the master equation and compare.
    pub cross_check: bool,
}

impl Default for OscillatorSuperpositionSpec {
    fn default() -> Self {
        Self {
            n_max: 40,
            alpha: C64::new(2.0, 0.0),
            beta: C64::new(-2.0, 0.0),
            amplitudes: None,
            omega: 1.0,
            gamma: 0.1,
            horizon: 10.0,
            sample_dt: 1.0,
            cross_check: false,
        }
    }
}

/// Largest allowed distance between the integrated and closed-form states.
pub const INTEGRATOR_TOLERANCE: f64 = 1e-6;

impl OscillatorSuperpositionSpec {
    pub fn weights(&self) -> [C64; 2] {
        self.amplitudes.unwrap_or_else(|| {
            let c = 1.0 / (2.0 + 2.0 * coherent_overlap(self.alpha, self.beta).re).sqrt();
            [C64::new(c, 0.0); 2]
        })
    }
}

pub fn run_oscillator_superposition(spec: &OscillatorSuperpositionSpec) -> Result<ScenarioResult> {
    positive("horizon", spec.horizon)?;
    positive("sample interval", spec.sample_dt)?;
    let space = FockSpace::new(spec.n_max)?;
    let params = LindbladParams::new(spec.omega, spec.gamma)?;
    let [c1, c2] = spec.weights();
    let samples = (spec.horizon / spec.sample_dt * (1.0 + 1e-12)).floor() as usize;
    let d2 = (spec.alpha - spec.beta).norm_sqr();

    let mut series = TimeSeries::new(&[
        "t",
        "coherence",
        "coherence_ratio",
        "f_abs",
        "f_oracle",
        "mean_number",
        "integrator_deviation",
    ]);
    let (mut f_residual, mut trace_residual, mut integrator): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let (mut coherence_final, mut ratio_final) = (0.0, 0.0);
    for s in 0..=samples {
        let t = s as f64 * spec.sample_dt;
        let rep =
            superposition_decoherence(c1, spec.alpha, c2, spec.beta, &params, t, &space, spec.cross_check && s > 0)?;
        let oracle = (-d2 * (1.0 - (-spec.gamma * t).exp()) / 2.0).exp();
        f_residual = f_residual.max((rep.f.norm() - oracle).abs());
        trace_residual = trace_residual.max((rep.rho.trace().re - 1.0).abs());
        let dev = rep.integrator_deviation.unwrap_or(0.0);
        integrator = integrator.max(dev);
        ratio_final = rep.coherence / rep.coherence_initial;
        coherence_final = rep.coherence;
        series.push(vec![t, rep.coherence, ratio_final, rep.f.norm(), oracle, rep.mean_number, dev]);
    }
    let mut result = ScenarioResult::new("oscillator-superposition");
    result.observe("coherence_final", coherence_final);
    result.observe("coherence_ratio_final", ratio_final);
    result.observe("f_residual", f_residual);
    result.observe("trace_residual", trace_residual);
    result.verdicts.push(Verdict::at_most("f_vs_exponent", f_residual, 1e-12));
    result.verdicts.push(Verdict::at_most("trace", trace_residual, 1e-8));
    if spec.cross_check {
        result.observe("integrator_deviation", integrator);
        result.verdicts.push(Verdict::at_most("integrator_deviation", integrator, INTEGRATOR_TOLERANCE));
    }
    result.series = Some(series);
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdealModelSpec {
    pub system_dim: usize,
    pub pointer: Option<Vec<Vec<C64>>>,
    pub qubits: usize,
    pub kappa_dt: f64,
    pub steps: usize,
    /// Coefficients in the pointer basis; `None` picks equal real weights.
    pub amplitudes: Option<Vec<C64>>,
}

impl Default for IdealModelSpec {
    fn default() -> Self {
        Self { system_dim: 2, pointer: None, qubits: 8, kappa_dt: 0.05, steps: 40, amplitudes: None }
    }
}

pub const IDEAL_TOLERANCE: f64 = 1e-10;

pub fn run_ideal_model(spec: &IdealModelSpec) -> Result<ScenarioResult> {
    let config = IdealModelConfig {
        pointer: spec.pointer.clone(),
        ..IdealModelConfig::new(spec.system_dim, spec.qubits, spec.kappa_dt)
    };
    let n = spec.system_dim;
    if n == 0 {
        return Err(PsdError::InvalidArgument("system dimension must be positive".into()));
    }
    let c = spec.amplitudes.clone().unwrap_or_else(|| vec![C64::new(1.0 / (n as f64).sqrt(), 0.0); n]);
    let k = spec.qubits as i32;

    let mut series = TimeSeries::new(&["step", "kappa_t", "coherence_01", "oracle_01", "purity"]);
    let (mut decay, mut diagonal, mut product): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for step in 0..=spec.steps {
        let st = ideal_model_evolve(&config, &c, step)?;
        for i in 0..n {
            diagonal = diagonal.max((st.rho_pointer[(i, i)].re - c[i].norm_sqr()).abs());
            for j in 0..n {
                let oracle = (c[i] * c[j].conj()).norm() * (((i as f64 - j as f64) * st.kappa_t).cos().powi(k)).abs();
                decay = decay.max((st.rho_pointer[(i, j)].norm() - oracle).abs());
            }
        }
        // a single pointer state never entangles
        for i in 0..n {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[i] = C64::new(1.0, 0.0);
            product = product.max((ideal_model_evolve(&config, &e, step)?.purity() - 1.0).abs());
        }
        let (coh, oracle) = if n >= 2 {
            (st.rho_pointer[(0, 1)].norm(), (c[0] * c[1].conj()).norm() * st.kappa_t.cos().powi(k).abs())
        } else {
            (0.0, 0.0)
        };
        series.push(vec![step as f64, st.kappa_t, coh, oracle, st.purity()]);
    }
    let mut result = ScenarioResult::new("ideal-model");
    result.observe("decay_residual", decay);
    result.observe("diagonal_residual", diagonal);
    result.observe("pointer_purity_residual", product);
    result.verdicts.push(Verdict::at_most("pointer_states_stay_product", product, IDEAL_TOLERANCE));
    result.verdicts.push(Verdict::at_most("decay_vs_cos_power", decay, IDEAL_TOLERANCE));
    result.verdicts.push(Verdict::at_most("diagonal_constant", diagonal, IDEAL_TOLERANCE));
    result.series = Some(series);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_defaults_pass() {
        let r = run_ideal_model(&IdealModelSpec::default()).unwrap();
        assert!(r.passed(), "{:?}", r.verdicts);
    }

    #[test]
    fn coherence_falls_with_gamma() {
        let run = |gamma| {
            let spec = OscillatorSuperpositionSpec { gamma, horizon: 2.0, ..Default::default() };
            run_oscillator_superposition(&spec).unwrap().observable("coherence_final").unwrap()
        };
        assert!(run(0.05) > run(0.1));
        assert!(run(0.1) > run(0.2));
    }
}
