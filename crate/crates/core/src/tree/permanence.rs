//! Permanence: w⁺(𝒟) = sup over t ≥ 0 of w[U(t)𝒟], approximated on a
//! finite horizon, and the partition criterion for E(𝒴)ψ being permanent.

use serde::{Deserialize, Serialize};

use crate::decomposition::{decompose_by_partition, Decomposition};
use crate::error::{PsdError, Result};
use crate::evolution::EvolutionEngine;
use crate::grid::Partition;
use crate::overlap::{w_optimize, WConfig};
use crate::wavefunction::WaveFunction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermanenceReport {
    pub w_plus: f64,
    /// The supremum is only taken over [0, horizon].
    pub horizon: f64,
    pub sample_times: Vec<f64>,
    pub w_values: Vec<f64>,
    pub worst_time: f64,
}

/// Sampling clock shared by the trajectory scans: whole steps per sample
/// and the number of samples after t = 0.
pub(crate) fn sampling(engine: &EvolutionEngine, horizon: f64, sample_dt: f64) -> Result<(usize, usize)> {
    if !(horizon > 0.0) {
        return Err(PsdError::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    if !(sample_dt >= engine.dt() * (1.0 - 1e-12)) {
        return Err(PsdError::InvalidArgument(format!(
            "sample interval {sample_dt} is shorter than the engine step {}",
            engine.dt()
        )));
    }
    let per = (sample_dt / engine.dt()).round().max(1.0) as usize;
    let total = engine.steps_for(horizon);
    Ok((per, total / per))
}

pub(crate) fn evolve_decomposition(d: &Decomposition, engine: &EvolutionEngine, steps: usize) -> Result<Decomposition> {
    d.map(|c| engine.evolve_steps(c, steps))
}

/// Evolves every component independently and records w at each sample.
pub fn w_plus(
    d: &Decomposition,
    engine: &EvolutionEngine,
    horizon: f64,
    sample_dt: f64,
    config: &WConfig,
) -> Result<PermanenceReport> {
    let (per, samples) = sampling(engine, horizon, sample_dt)?;
    let mut current = d.clone();
    let mut sample_times = Vec::with_capacity(samples + 1);
    let mut w_values = Vec::with_capacity(samples + 1);
    for s in 0..=samples {
        if s > 0 {
            current = evolve_decomposition(&current, engine, per)?;
        }
        sample_times.push((s * per) as f64 * engine.dt());
        w_values.push(w_optimize(&current, config)?.value);
    }
    let (worst, &w_plus) =
        w_values.iter().enumerate().fold((0, &f64::NEG_INFINITY), |acc, (i, w)| if *w > *acc.1 { (i, w) } else { acc });
    Ok(PermanenceReport {
        w_plus,
        horizon: (samples * per) as f64 * engine.dt(),
        worst_time: sample_times[worst],
        sample_times,
        w_values,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdCheckReport {
    pub passed: bool,
    pub tol: f64,
    pub worst_residual: f64,
    pub horizon: f64,
    pub sample_times: Vec<f64>,
    /// Worst subset residual at each sample under the witnessing partition.
    pub residuals: Vec<f64>,
    /// Witnessing partitions 𝔛_t, one per sample.
    pub witnesses: Vec<Partition>,
}

/// Checks whether E(𝒴)ψ stays a spatial decomposition over the horizon:
/// at each sample a partition must exist whose subset residuals are all
/// within `tol`.
pub fn check_psd_partition(
    part: &Partition,
    psi: &WaveFunction,
    engine: &EvolutionEngine,
    horizon: f64,
    sample_dt: f64,
    tol: f64,
    config: &WConfig,
) -> Result<PsdCheckReport> {
    let (per, samples) = sampling(engine, horizon, sample_dt)?;
    let mut current = decompose_by_partition(psi, part)?;
    let mut report = PsdCheckReport {
        passed: true,
        tol,
        worst_residual: 0.0,
        horizon: (samples * per) as f64 * engine.dt(),
        sample_times: Vec::new(),
        residuals: Vec::new(),
        witnesses: Vec::new(),
    };
    for s in 0..=samples {
        if s > 0 {
            current = evolve_decomposition(&current, engine, per)?;
        }
        let w = w_optimize(&current, config)?;
        report.sample_times.push((s * per) as f64 * engine.dt());
        report.residuals.push(w.value);
        report.worst_residual = report.worst_residual.max(w.value);
        report.witnesses.push(w.partition);
    }
    report.passed = report.worst_residual <= tol;
    Ok(report)
}
