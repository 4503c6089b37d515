//! Browser bindings for three interactive views: barrier scattering frames,
//! the overlap functional of two packets, and the decay of oscillator
//! coherence. The plain functions are usable natively; the `#[wasm_bindgen]`
//! items wrap them for JavaScript.

use num_complex::Complex64 as C64;
use psd_core::oscillator::LindbladParams;
use psd_core::scenarios::BarrierSpec;
use psd_core::{gaussian_packet, w_exact_pair, Decomposition, EvolutionEngine, Grid, PacketParams, PsdError};
use wasm_bindgen::prelude::*;

/// Densities of a packet scattering off a barrier, one frame per time unit.
#[wasm_bindgen]
pub struct BarrierRun {
    cells: usize,
    x: Vec<f64>,
    potential: Vec<f64>,
    frames: Vec<Vec<f64>>,
    transmission: f64,
}

impl BarrierRun {
    pub fn simulate(height: f64, momentum: f64) -> Result<Self, PsdError> {
        let spec = BarrierSpec { barrier_height: height, momentum, ..Default::default() };
        let grid = spec.grid()?;
        let potential = spec.potential(&grid);
        let engine = EvolutionEngine::new(grid, potential.clone(), spec.mass, spec.dt)?;
        let per = (spec.sample_dt / spec.dt).round() as usize;
        let samples = engine.steps_for(spec.horizon) / per;
        let mut psi = gaussian_packet(&grid, &spec.packet())?;
        let mut frames = vec![psi.density()];
        for _ in 0..samples {
            psi = engine.evolve_steps(&psi, per)?;
            frames.push(psi.density());
        }
        let x: Vec<f64> = grid.positions().map(|p| p[0]).collect();
        let dx = grid.cell_volume();
        let transmission = frames[samples]
            .iter()
            .zip(&x)
            .filter(|(_, &xi)| xi > spec.barrier_center + spec.barrier_width / 2.0)
            .map(|(rho, _)| rho * dx)
            .sum();
        Ok(Self { cells: grid.len(), x, potential, frames, transmission })
    }
}

#[wasm_bindgen]
impl BarrierRun {
    #[wasm_bindgen(constructor)]
    pub fn new(height: f64, momentum: f64) -> Result<BarrierRun, JsError> {
        Self::simulate(height, momentum).map_err(|e| JsError::new(&e.to_string()))
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn frame(&self, i: usize) -> Vec<f64> {
        self.frames.get(i).cloned().unwrap_or_default()
    }

    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }

    pub fn potential(&self) -> Vec<f64> {
        self.potential.clone()
    }

    /// Mass beyond the barrier in the last frame.
    pub fn transmission(&self) -> f64 {
        self.transmission
    }
}

/// Two packets on a line and the overlap functional w of the pair.
#[wasm_bindgen]
pub struct PairView {
    w: f64,
    x: Vec<f64>,
    density_a: Vec<f64>,
    density_b: Vec<f64>,
    labels: Vec<u8>,
}

impl PairView {
    pub fn compute(separation: f64, width_a: f64, width_b: f64, relative_phase: f64) -> Result<Self, PsdError> {
        let grid = Grid::line(40.0, 400)?;
        let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let a = gaussian_packet(&grid, &PacketParams::line(-separation / 2.0, 0.0, width_a))?.scaled(amp);
        let mut pb = PacketParams::line(separation / 2.0, 0.0, width_b);
        pb.phase = relative_phase;
        let b = gaussian_packet(&grid, &pb)?.scaled(amp);
        let report = w_exact_pair(&Decomposition::from_components(vec![a.clone(), b.clone()])?)?;
        Ok(Self {
            w: report.value,
            x: grid.positions().map(|p| p[0]).collect(),
            density_a: a.density(),
            density_b: b.density(),
            labels: report.partition.labels().iter().map(|&l| l as u8).collect(),
        })
    }
}

#[wasm_bindgen]
impl PairView {
    #[wasm_bindgen(constructor)]
    pub fn new(separation: f64, width_a: f64, width_b: f64, relative_phase: f64) -> Result<PairView, JsError> {
        Self::compute(separation, width_a, width_b, relative_phase).map_err(|e| JsError::new(&e.to_string()))
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }

    pub fn density_a(&self) -> Vec<f64> {
        self.density_a.clone()
    }

    pub fn density_b(&self) -> Vec<f64> {
        self.density_b.clone()
    }

    /// Block of each cell in the optimal partition.
    pub fn labels(&self) -> Vec<u8> {
        self.labels.clone()
    }
}

/// |f(t)| for ρ(0) = |α⟩⟨β| with real α, β, at `samples` + 1 evenly spaced
/// times on [0, horizon].
pub fn coherence_curve(alpha: f64, beta: f64, gamma: f64, horizon: f64, samples: usize) -> Result<Vec<f64>, PsdError> {
    if samples == 0 || horizon.is_nan() || horizon <= 0.0 {
        return Err(PsdError::InvalidArgument("need a positive horizon and at least one sample".into()));
    }
    let params = LindbladParams::new(1.0, gamma)?;
    let (a, b) = (C64::new(alpha, 0.0), C64::new(beta, 0.0));
    Ok((0..=samples).map(|s| params.coherence_factor(a, b, horizon * s as f64 / samples as f64).norm()).collect())
}

#[wasm_bindgen]
pub fn oscillator_coherence(
    alpha: f64,
    beta: f64,
    gamma: f64,
    horizon: f64,
    samples: usize,
) -> Result<Vec<f64>, JsError> {
    coherence_curve(alpha, beta, gamma, horizon, samples).map_err(|e| JsError::new(&e.to_string()))
}
