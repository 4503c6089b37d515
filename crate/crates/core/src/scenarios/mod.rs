//! Executable scenarios: barrier scattering, a beam splitter with
//! amplification and environment, an idealized measurement, and a double
//! slit whose which-path record is a freely spreading photon, plus
//! time-series runs of the oscillator and ideal decoherence models.

pub mod barrier;
pub mod beam_splitter;
pub mod double_slit;
pub mod measurement;
pub mod oscillator;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{PsdError, Result};
use crate::grid::Grid;
use crate::overlap::WConfig;
use crate::tree::{TreeParams, TreeRecord};
use crate::wavefunction::{boundary_clearance, PacketParams};

pub use barrier::{run_barrier_scattering, BarrierSpec};
pub use beam_splitter::{run_beam_splitter, BeamSplitterSpec};
pub use double_slit::{run_double_slit_photon, DoubleSlitSpec};
pub use measurement::{run_measurement_toy, MeasurementSpec};
pub use oscillator::{run_ideal_model, run_oscillator_superposition, IdealModelSpec, OscillatorSuperpositionSpec};

/// Settings shared by every scenario run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub epsilon_w: f64,
    /// Seeds the cell order of the partition local search.
    pub seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Self { epsilon_w: 0.05, seed: 0 }
    }
}

impl Settings {
    pub fn w_config(&self) -> WConfig {
        WConfig { seed: self.seed, ..WConfig::default() }
    }
}

/// Free parameters of the channel detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSpec {
    pub theta: f64,
    pub d_min: f64,
    pub confirmation: usize,
    pub mass_floor: f64,
}

impl Default for DetectorSpec {
    fn default() -> Self {
        Self { theta: 0.01, d_min: 1.0, confirmation: 3, mass_floor: 1e-3 }
    }
}

impl DetectorSpec {
    pub(crate) fn tree_params(&self, horizon: f64, sample_dt: f64, settings: &Settings) -> TreeParams {
        TreeParams {
            horizon,
            sample_dt,
            theta: self.theta,
            d_min: self.d_min,
            epsilon_w: settings.epsilon_w,
            confirmation: self.confirmation,
            mass_floor: self.mass_floor,
            w: settings.w_config(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub relation: String,
    pub threshold: f64,
}

impl Verdict {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), passed: value <= threshold, value, relation: "<=".into(), threshold }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), passed: value >= threshold, value, relation: ">=".into(), threshold }
    }

    pub fn equals(name: &str, value: usize, expected: usize) -> Self {
        Self {
            name: name.into(),
            passed: value == expected,
            value: value as f64,
            relation: "==".into(),
            threshold: expected as f64,
        }
    }

    pub fn summary(&self) -> String {
        format!(
            "{} {}: {:.4e} {} {:e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.relation,
            self.threshold
        )
    }
}

/// Columns sampled on one clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: String,
    #[serde(skip)]
    pub series: Option<TimeSeries>,
    pub tree: Option<TreeRecord>,
    pub verdicts: Vec<Verdict>,
    pub observables: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl ScenarioResult {
    pub(crate) fn new(scenario: &str) -> Self {
        Self {
            scenario: scenario.into(),
            series: None,
            tree: None,
            verdicts: Vec::new(),
            observables: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn observable(&self, name: &str) -> Option<f64> {
        self.observables.get(name).copied()
    }

    pub(crate) fn observe(&mut self, name: &str, value: f64) {
        self.observables.insert(name.into(), value);
    }
}

pub const MIN_WIDTH_CELLS: f64 = 4.0;
pub const MIN_CLEARANCE_WIDTHS: f64 = 6.0;

/// Packets must span at least four cells per axis and sit at least six
/// widths from every boundary.
pub(crate) fn check_packet(grid: &Grid, p: &PacketParams) -> Result<()> {
    for (i, a) in grid.axes().iter().enumerate() {
        if p.width[i] < MIN_WIDTH_CELLS * a.spacing() {
            return Err(PsdError::Resolvability {
                constraint: "packet width >= 4 cells",
                detail: format!("width {} on axis {i}, spacing {}", p.width[i], a.spacing()),
            });
        }
    }
    let c = boundary_clearance(grid, p);
    if c < MIN_CLEARANCE_WIDTHS {
        return Err(PsdError::Resolvability {
            constraint: "packet >= 6 widths from the boundary",
            detail: format!("packet at {:?} is {c:.2} widths from the boundary", p.center),
        });
    }
    Ok(())
}

pub(crate) fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(PsdError::InvalidArgument(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// Width of a free Gaussian after time t (position standard deviation).
pub fn free_width(width: f64, mass: f64, t: f64) -> f64 {
    width * (1.0 + (t / (2.0 * mass * width * width)).powi(2)).sqrt()
}
