//! Double slit whose which-path record is a scattered photon.
//!
//! The joint grid is (particle transverse coordinate x, photon coordinate
//! y). Behind the slits the state is (φ₁γ₁ + φ₂γ₂)/√2: the photon packets
//! start nearly orthogonal and far apart, then spread freely. Their overlap
//! is fixed by unitarity, so the particle's fringes stay washed out, while
//! the two branches' supports in configuration space merge.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{check_packet, free_width, positive, ScenarioResult, Settings, TimeSeries, Verdict};
use crate::decomposition::Decomposition;
use crate::error::{PsdError, Result};
use crate::evolution::EvolutionEngine;
use crate::grid::Grid;
use crate::overlap::w_exact_pair_with;
use crate::wavefunction::{gaussian_packet, inner, PacketParams, WaveFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoubleSlitSpec {
    pub cells: [usize; 2],
    pub extent: [f64; 2],
    pub particle_mass: f64,
    pub photon_mass: f64,
    pub particle_width: f64,
    /// Distance between the two slit packets.
    pub slit_separation: f64,
    pub photon_width: f64,
    /// Distance between the two photon packets; ignored by the control run.
    pub photon_separation: f64,
    pub horizon: f64,
    pub dt: f64,
    pub sample_dt: f64,
    /// Control run: one photon packet shared by both paths.
    pub control: bool,
    /// Widths of clearance every packet keeps from the boundary at the horizon.
    pub clearance: f64,
}

impl Default for DoubleSlitSpec {
    fn default() -> Self {
        Self {
            cells: [256, 256],
            extent: [112.0, 112.0],
            particle_mass: 1.0,
            photon_mass: 1.0,
            particle_width: 1.8,
            slit_separation: 10.0,
            photon_width: 1.8,
            photon_separation: 10.0,
            horizon: 35.0,
            dt: 0.5,
            sample_dt: 1.0,
            control: false,
            clearance: 5.0,
        }
    }
}

/// Screen cells count toward the contrast when the incoherent density
/// there is at least this fraction of its peak.
pub const SCREEN_FRACTION: f64 = 0.5;

impl DoubleSlitSpec {
    pub fn grid(&self) -> Result<Grid> {
        Grid::plane(self.extent, self.cells)
    }

    fn photon_centers(&self) -> [f64; 2] {
        if self.control {
            [0.0, 0.0]
        } else {
            [-self.photon_separation / 2.0, self.photon_separation / 2.0]
        }
    }

    fn branch(&self, i: usize) -> PacketParams {
        let x = [-self.slit_separation / 2.0, self.slit_separation / 2.0][i];
        PacketParams {
            center: [x, self.photon_centers()[i]],
            momentum: [0.0, 0.0],
            width: [self.particle_width, self.photon_width],
            phase: 0.0,
        }
    }

    fn validate(&self, grid: &Grid) -> Result<()> {
        for (name, v) in [
            ("particle mass", self.particle_mass),
            ("photon mass", self.photon_mass),
            ("slit separation", self.slit_separation),
            ("horizon", self.horizon),
            ("clearance", self.clearance),
        ] {
            positive(name, v)?;
        }
        if !self.control {
            positive("photon separation", self.photon_separation)?;
        }
        for i in 0..2 {
            check_packet(grid, &self.branch(i))?;
        }
        let spread = [
            free_width(self.particle_width, self.particle_mass, self.horizon),
            free_width(self.photon_width, self.photon_mass, self.horizon),
        ];
        let reach = [self.slit_separation / 2.0, self.photon_centers()[1].abs()];
        for axis in 0..2 {
            let a = grid.axis(axis);
            let edge = (a.max()).min(-a.min);
            if reach[axis] + self.clearance * spread[axis] > edge {
                return Err(PsdError::Resolvability {
                    constraint: "spreading packets stay inside the grid until the horizon",
                    detail: format!(
                        "axis {axis}: width {:.2} at t = {} needs {:.1} of {:.1}",
                        spread[axis],
                        self.horizon,
                        reach[axis] + self.clearance * spread[axis],
                        edge
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Particle marginal Σ_y |ψ(x, y)|² dy.
fn marginal(psi: &WaveFunction) -> Vec<f64> {
    let [n0, n1] = psi.grid().shape();
    let dy = psi.grid().axis(1).spacing();
    (0..n0).map(|i| psi.amplitudes()[i * n1..(i + 1) * n1].iter().map(|z| z.norm_sqr()).sum::<f64>() * dy).collect()
}

/// Largest relative deviation of the coherent marginal from the incoherent
/// one, over screen cells where the incoherent density is substantial.
pub fn fringe_contrast(coherent: &[f64], incoherent: &[f64]) -> f64 {
    let peak = incoherent.iter().cloned().fold(0.0, f64::max);
    coherent
        .iter()
        .zip(incoherent)
        .filter(|(_, &q)| q >= SCREEN_FRACTION * peak)
        .map(|(p, q)| (p - q).abs() / q)
        .fold(0.0, f64::max)
}

pub fn run_double_slit_photon(spec: &DoubleSlitSpec, settings: &Settings) -> Result<ScenarioResult> {
    let grid = spec.grid()?;
    spec.validate(&grid)?;
    let engine =
        EvolutionEngine::with_masses(grid, vec![0.0; grid.len()], [spec.particle_mass, spec.photon_mass], spec.dt)?;
    let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut b1 = gaussian_packet(&grid, &spec.branch(0))?.scaled(amp);
    let mut b2 = gaussian_packet(&grid, &spec.branch(1))?.scaled(amp);

    // photon factors on their own line
    let line = Grid::one_d(*grid.axis(1));
    let photon_engine = EvolutionEngine::free(line, spec.photon_mass, spec.dt)?;
    let centers = spec.photon_centers();
    let mut g1 = gaussian_packet(&line, &PacketParams::line(centers[0], 0.0, spec.photon_width))?;
    let mut g2 = gaussian_packet(&line, &PacketParams::line(centers[1], 0.0, spec.photon_width))?;
    let gamma0 = inner(&g1, &g2)?;

    let per = (spec.sample_dt / spec.dt).round().max(1.0) as usize;
    let samples = engine.steps_for(spec.horizon) / per;
    let config = settings.w_config();
    let mut series = TimeSeries::new(&["t", "w", "photon_overlap", "contrast", "norm"]);
    let (mut drift, mut max_contrast): (f64, f64) = (0.0, 0.0);
    let (mut w0, mut w_end, mut contrast_end, mut norm_end) = (0.0, 0.0, 0.0, 1.0);
    let mut w_max: f64 = 0.0;
    for s in 0..=samples {
        if s > 0 {
            b1 = engine.evolve_steps(&b1, per)?;
            b2 = engine.evolve_steps(&b2, per)?;
            g1 = photon_engine.evolve_steps(&g1, per)?;
            g2 = photon_engine.evolve_steps(&g2, per)?;
        }
        let t = (s * per) as f64 * spec.dt;
        let gamma = inner(&g1, &g2)?;
        drift = drift.max((gamma - gamma0).norm());
        let psi = b1.add(&b2)?;
        let (m1, m2) = (marginal(&b1), marginal(&b2));
        let incoherent: Vec<f64> = m1.iter().zip(&m2).map(|(a, b)| a + b).collect();
        let contrast = fringe_contrast(&marginal(&psi), &incoherent);
        max_contrast = max_contrast.max(contrast);
        let w = if spec.control {
            f64::NAN
        } else {
            let d = Decomposition::new(vec![b1.clone(), b2.clone()], psi.clone())?;
            w_exact_pair_with(&d, &config)?.value
        };
        if s == 0 {
            w0 = w;
        }
        w_max = w_max.max(w);
        (w_end, contrast_end, norm_end) = (w, contrast, psi.norm_sqr());
        series.push(vec![t, w, gamma.norm(), contrast, norm_end]);
    }

    let mut result = ScenarioResult::new("double-slit-photon");
    let norm_drift = (norm_end - (1.0 + 2.0 * amp.norm_sqr() * gamma0.re * overlap_particle(spec, &grid)?)).abs();
    result.observe("photon_overlap_initial", gamma0.norm());
    result.observe("photon_overlap_drift", drift);
    result.observe("contrast_max", max_contrast);
    result.observe("contrast_final", contrast_end);
    result.observe("norm_drift", norm_drift);
    result.verdicts.push(Verdict::at_most("norm_drift", norm_drift, 1e-8));
    result.verdicts.push(Verdict::at_most("photon_overlap_drift", drift, 1e-8));
    if spec.control {
        result.verdicts.push(Verdict::at_least("contrast_control", contrast_end, 0.8));
    } else {
        result.observe("w_initial", w0);
        result.observe("w_final", w_end);
        result.observe("w_max", w_max);
        result.verdicts.push(Verdict::at_most("w_initial", w0, 0.05));
        result.verdicts.push(Verdict::at_least("w_reoverlap", w_max, 0.5));
        result.verdicts.push(Verdict::at_most("contrast_with_photon", max_contrast, 0.1));
    }
    result.notes.push(format!("w evaluated on the finite horizon t <= {}", spec.horizon));
    result.series = Some(series);
    Ok(result)
}

/// ⟨φ₁|φ₂⟩ of the two slit packets at t = 0; they carry no momentum, so it
/// is real.
fn overlap_particle(spec: &DoubleSlitSpec, grid: &Grid) -> Result<f64> {
    let line = Grid::one_d(*grid.axis(0));
    let p1 = gaussian_packet(&line, &PacketParams::line(-spec.slit_separation / 2.0, 0.0, spec.particle_width))?;
    let p2 = gaussian_packet(&line, &PacketParams::line(spec.slit_separation / 2.0, 0.0, spec.particle_width))?;
    Ok(inner(&p1, &p2)?.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contrast_of_identical_marginals_is_zero() {
        let p = vec![0.1, 0.5, 1.0, 0.5, 0.1];
        assert_eq!(fringe_contrast(&p, &p), 0.0);
        let q = vec![0.1, 0.5, 2.0, 0.5, 0.1];
        assert!((fringe_contrast(&q, &p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_packets_that_spread_off_the_grid() {
        let spec = DoubleSlitSpec { horizon: 200.0, ..Default::default() };
        assert!(matches!(run_double_slit_photon(&spec, &Settings::default()), Err(PsdError::Resolvability { .. })));
    }
}
