//! A 1D packet hitting a rectangular barrier splits into a transmitted and
//! a reflected packet.

use serde::{Deserialize, Serialize};

use super::{check_packet, positive, DetectorSpec, ScenarioResult, Settings, TimeSeries, Verdict};
use crate::error::{PsdError, Result};
use crate::evolution::EvolutionEngine;
use crate::grid::{Grid, Region};
use crate::stationary::packet_transmission;
use crate::tree::{build_tree, verify_tree};
use crate::wavefunction::{gaussian_packet, PacketParams, WaveFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierSpec {
    pub cells: usize,
    pub extent: f64,
    pub mass: f64,
    pub packet_center: f64,
    pub momentum: f64,
    pub width: f64,
    pub barrier_center: f64,
    pub barrier_width: f64,
    pub barrier_height: f64,
    pub dt: f64,
    pub horizon: f64,
    pub sample_dt: f64,
    pub detector: DetectorSpec,
    /// Outer fraction of the grid (per side) that must stay empty.
    pub edge_fraction: f64,
}

impl Default for BarrierSpec {
    fn default() -> Self {
        Self {
            cells: 1024,
            extent: 400.0,
            mass: 1.0,
            packet_center: -60.0,
            momentum: 1.5,
            width: 5.0,
            barrier_center: 0.0,
            barrier_width: 1.0,
            barrier_height: 1.5,
            dt: 0.05,
            horizon: 90.0,
            sample_dt: 1.0,
            detector: DetectorSpec::default(),
            edge_fraction: 0.05,
        }
    }
}

/// Mass allowed inside the edge bands at the horizon.
pub const EDGE_MASS_LIMIT: f64 = 1e-6;

impl BarrierSpec {
    pub fn grid(&self) -> Result<Grid> {
        Grid::line(self.extent, self.cells)
    }

    pub fn potential(&self, grid: &Grid) -> Vec<f64> {
        grid.positions()
            .map(
                |x| {
                    if (x[0] - self.barrier_center).abs() < self.barrier_width / 2.0 {
                        self.barrier_height
                    } else {
                        0.0
                    }
                },
            )
            .collect()
    }

    pub fn packet(&self) -> PacketParams {
        PacketParams::line(self.packet_center, self.momentum, self.width)
    }

    fn validate(&self, grid: &Grid) -> Result<()> {
        positive("mass", self.mass)?;
        positive("horizon", self.horizon)?;
        positive("barrier width", self.barrier_width)?;
        if !(self.barrier_height >= 0.0) {
            return Err(PsdError::InvalidArgument("barrier height must be non-negative".into()));
        }
        check_packet(grid, &self.packet())?;
        let axis = grid.axis(0);
        let (lo, hi) = (self.barrier_center - self.barrier_width / 2.0, self.barrier_center + self.barrier_width / 2.0);
        if lo <= axis.min || hi >= axis.max() {
            return Err(PsdError::InvalidArgument("barrier must lie inside the grid".into()));
        }
        if !(self.momentum > 0.0) || self.packet_center + 6.0 * self.width > lo {
            return Err(PsdError::InvalidArgument(
                "packet must start at least six widths left of the barrier with rightward momentum".into(),
            ));
        }
        Ok(())
    }

    /// The engine used for every evolution of this scenario.
    pub fn engine(&self) -> Result<EvolutionEngine> {
        let grid = self.grid()?;
        EvolutionEngine::new(grid, self.potential(&grid), self.mass, self.dt)
    }
}

pub fn run_barrier_scattering(spec: &BarrierSpec, settings: &Settings) -> Result<ScenarioResult> {
    let grid = spec.grid()?;
    spec.validate(&grid)?;
    let engine = spec.engine()?;
    let psi0 = gaussian_packet(&grid, &spec.packet())?;
    let t_oracle = packet_transmission(&grid, engine.potential(), spec.mass, spec.momentum, spec.width)?;

    let params = spec.detector.tree_params(spec.horizon, spec.sample_dt, settings);
    let tree = build_tree(&psi0, &engine, &params)?;

    // transmitted mass on the tree's clock
    let right = Region::from_fn(grid, |x| x[0] > spec.barrier_center);
    let per = (spec.sample_dt / spec.dt).round().max(1.0) as usize;
    let mut psi = psi0.clone();
    let mut series = TimeSeries::new(&["t", "channels", "w", "w_plus_to_date", "transmitted", "norm"]);
    let mut w_plus: f64 = 0.0;
    for (s, row) in tree.series.iter().enumerate() {
        if s > 0 {
            psi = engine.evolve_steps(&psi, per)?;
        }
        w_plus = w_plus.max(row.w);
        series.push(vec![row.t, row.channels as f64, row.w, w_plus, psi.mass_in(&right)?, psi.norm_sqr()]);
    }
    check_edges(&psi, spec.edge_fraction)?;

    let t_final = psi.mass_in(&right)?;
    let r_final = psi.mass_in(&right.complement())?;
    let norm_drift = (psi.norm_sqr() - psi0.norm_sqr()).abs();
    let expected_branches = usize::from(t_final.min(r_final) > spec.detector.mass_floor);

    let verdict = verify_tree(&tree, &engine, settings.epsilon_w)?;
    let mut result = ScenarioResult::new("barrier-scattering");
    result.observe("transmission", t_final);
    result.observe("reflection", r_final);
    result.observe("transmission_oracle", t_oracle);
    result.observe("transmission_relative_error", (t_final - t_oracle).abs() / t_oracle);
    result.observe("branch_events", tree.branch_events.len() as f64);
    if let Some(&t) = tree.branch_events.first() {
        result.observe("first_branch_time", t);
    }
    result.observe("retractions", tree.retractions as f64);
    result.observe("w_final", tree.series.last().map_or(0.0, |r| r.w));
    result.observe("w_plus", w_plus);
    result.observe("norm_drift", norm_drift);
    result.observe("verify_sum_residual", verdict.sum_residual);
    result.observe("verify_refinement_residual", verdict.refinement_residual);
    result.observe("verify_worst_w", verdict.worst_w);

    result.verdicts.push(Verdict::at_most("transmission_vs_oracle", (t_final - t_oracle).abs() / t_oracle, 0.1));
    result.verdicts.push(Verdict::at_most("t_plus_r", (t_final + r_final - 1.0).abs(), 1e-6));
    result.verdicts.push(Verdict::at_most("norm_drift", norm_drift, 1e-8));
    result.verdicts.push(Verdict::equals("branch_events", tree.branch_events.len(), expected_branches));
    result.verdicts.push(Verdict::at_most("tree_sum", verdict.sum_residual, 1e-8));
    result.verdicts.push(Verdict::at_most("tree_refinement", verdict.refinement_residual, settings.epsilon_w));
    result.verdicts.push(Verdict::at_most("tree_w", verdict.worst_w, settings.epsilon_w));
    result.notes.push(format!("permanence evaluated on the finite horizon t <= {}", spec.horizon));
    result.tree = Some(tree.to_record());
    result.series = Some(series);
    Ok(result)
}

/// Rejects runs whose packet reached the outer bands of the grid.
pub(crate) fn check_edges(psi: &WaveFunction, fraction: f64) -> Result<()> {
    let grid = *psi.grid();
    let edge = Region::from_fn(grid, |x| {
        grid.axes().iter().enumerate().any(|(i, a)| {
            let band = fraction * a.extent;
            x[i] < a.min + band || x[i] > a.max() - band
        })
    });
    let m = psi.mass_in(&edge)?;
    if m > EDGE_MASS_LIMIT {
        return Err(PsdError::Resolvability {
            constraint: "packet stays clear of the boundary until the horizon",
            detail: format!("mass {m:.3e} reached the outer {:.0}% of the grid", fraction * 100.0),
        });
    }
    Ok(())
}
