//! Unitary Schrödinger evolution by the spectral split-step method
//! (Strang ordering, periodic boundaries, ħ = 1).

use num_complex::Complex64 as C64;

use crate::error::{PsdError, Result};
use crate::fft::GridFft;
use crate::grid::Grid;
use crate::wavefunction::WaveFunction;

pub const METHOD_TAG: &str = "spectral-split-step";

/// A time-independent Hamiltonian H = Σ p²/(2mᵢ) + V(x) together with
/// its fixed time step. Precomputes the phase factors of both half-steps.
pub struct EvolutionEngine {
    grid: Grid,
    potential: Vec<f64>,
    masses: [f64; 2],
    dt: f64,
    potential_half: Vec<C64>,
    potential_full: Vec<C64>,
    kinetic: Vec<C64>,
    fft: GridFft,
}

/// Result of an evolution: the state plus the time actually elapsed
/// (t rounded down to a whole number of steps).
#[derive(Debug, Clone)]
pub struct Evolved {
    pub psi: WaveFunction,
    pub t_effective: f64,
    pub steps: usize,
}

impl EvolutionEngine {
    pub fn new(grid: Grid, potential: Vec<f64>, mass: f64, dt: f64) -> Result<Self> {
        Self::with_masses(grid, potential, [mass, mass], dt)
    }

    /// Free evolution (V = 0).
    pub fn free(grid: Grid, mass: f64, dt: f64) -> Result<Self> {
        Self::new(grid, vec![0.0; grid.len()], mass, dt)
    }

    pub fn from_potential_fn(grid: Grid, mass: f64, dt: f64, v: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let pot = grid.positions().map(v).collect();
        Self::new(grid, pot, mass, dt)
    }

    /// Separate masses per axis; the second entry is ignored on 1D grids.
    pub fn with_masses(grid: Grid, potential: Vec<f64>, masses: [f64; 2], dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(PsdError::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        if masses[..grid.dim()].iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(PsdError::InvalidArgument("masses must be positive".into()));
        }
        if potential.len() != grid.len() {
            return Err(PsdError::InvalidArgument(format!(
                "potential has {} cells, grid has {}",
                potential.len(),
                grid.len()
            )));
        }
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(PsdError::InvalidArgument("potential must be finite".into()));
        }
        let potential_half = potential.iter().map(|v| C64::from_polar(1.0, -0.5 * v * dt)).collect();
        let potential_full = potential.iter().map(|v| C64::from_polar(1.0, -v * dt)).collect();

        let k0 = grid.axis(0).wave_numbers();
        let k1 = if grid.dim() == 2 { grid.axis(1).wave_numbers() } else { vec![0.0] };
        let mut kinetic = Vec::with_capacity(grid.len());
        for &ka in &k0 {
            for &kb in &k1 {
                let mut e = ka * ka / (2.0 * masses[0]);
                if grid.dim() == 2 {
                    e += kb * kb / (2.0 * masses[1]);
                }
                kinetic.push(C64::from_polar(1.0, -e * dt));
            }
        }
        Ok(Self { grid, potential, masses, dt, potential_half, potential_full, kinetic, fft: GridFft::new(&grid) })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn masses(&self) -> [f64; 2] {
        self.masses
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn method(&self) -> &'static str {
        METHOD_TAG
    }

    /// Number of whole steps in `t`, rounding down (with a small allowance
    /// for `t` that is a multiple of dt up to round-off).
    pub fn steps_for(&self, t: f64) -> usize {
        ((t / self.dt) * (1.0 + 1e-12)).floor() as usize
    }

    pub fn evolve(&self, psi: &WaveFunction, t: f64) -> Result<Evolved> {
        if !(t >= 0.0) {
            return Err(PsdError::InvalidArgument(format!("evolution time must be non-negative, got {t}")));
        }
        let steps = self.steps_for(t);
        let psi = self.evolve_steps(psi, steps)?;
        Ok(Evolved { psi, t_effective: steps as f64 * self.dt, steps })
    }

    pub fn evolve_steps(&self, psi: &WaveFunction, steps: usize) -> Result<WaveFunction> {
        self.grid.check_same(psi.grid())?;
        let mut out = psi.clone();
        if steps == 0 {
            return Ok(out);
        }
        let amps = out.amplitudes_mut();
        mul_assign(amps, &self.potential_half);
        for s in 0..steps {
            self.fft.forward(amps);
            mul_assign(amps, &self.kinetic);
            self.fft.inverse(amps);
            if s + 1 < steps {
                mul_assign(amps, &self.potential_full);
            } else {
                mul_assign(amps, &self.potential_half);
            }
        }
        if !out.is_finite() {
            return Err(PsdError::Numerical(format!("non-finite amplitudes after {steps} split-step iterations")));
        }
        Ok(out)
    }
}

fn mul_assign(a: &mut [C64], b: &[C64]) {
    a.iter_mut().zip(b).for_each(|(x, y)| *x *= y);
}

/// Exact conditional translation along axis 1: the row at axis-0
/// coordinate x is shifted by `shift(x)`, i.e. ψ(x, y) → ψ(x, y − shift(x)).
/// Applied spectrally, so it is unitary on the periodic grid.
pub fn conditional_displacement(psi: &WaveFunction, shift: impl Fn(f64) -> f64) -> Result<WaveFunction> {
    let grid = *psi.grid();
    if grid.dim() != 2 {
        return Err(PsdError::InvalidArgument("conditional displacement needs a 2D grid".into()));
    }
    let [n0, n1] = grid.shape();
    let ks = grid.axis(1).wave_numbers();
    let fft = GridFft::new(&grid);
    let mut out = psi.clone();
    let amps = out.amplitudes_mut();
    for i in 0..n0 {
        let s = shift(grid.axis(0).center(i));
        if s == 0.0 {
            continue;
        }
        let row = &mut amps[i * n1..(i + 1) * n1];
        fft.forward_axis1(row);
        for (z, k) in row.iter_mut().zip(&ks) {
            *z *= C64::from_polar(1.0, -k * s);
        }
        fft.inverse_axis1(row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefunction::{gaussian_packet, inner, PacketParams};

    #[test]
    fn zero_time_is_identity() {
        let g = Grid::line(40.0, 256).unwrap();
        let psi = gaussian_packet(&g, &PacketParams::line(0.0, 1.0, 1.5)).unwrap();
        let e = EvolutionEngine::free(g, 1.0, 0.01).unwrap();
        let out = e.evolve(&psi, 0.0).unwrap();
        assert_eq!(out.psi, psi);
        assert_eq!(out.steps, 0);
    }

    #[test]
    fn rounds_down_to_whole_steps() {
        let g = Grid::line(40.0, 64).unwrap();
        let e = EvolutionEngine::free(g, 1.0, 0.1).unwrap();
        assert_eq!(e.steps_for(0.3), 3);
        assert_eq!(e.steps_for(0.35), 3);
        let psi = gaussian_packet(&g, &PacketParams::line(0.0, 0.0, 2.0)).unwrap();
        assert!((e.evolve(&psi, 0.35).unwrap().t_effective - 0.3).abs() < 1e-12);
        assert!(e.evolve(&psi, -1.0).is_err());
    }

    #[test]
    fn rejects_bad_engines() {
        let g = Grid::line(40.0, 64).unwrap();
        assert!(EvolutionEngine::free(g, 1.0, 0.0).is_err());
        assert!(EvolutionEngine::free(g, -1.0, 0.1).is_err());
        assert!(EvolutionEngine::new(g, vec![0.0; 3], 1.0, 0.1).is_err());
        assert!(EvolutionEngine::new(g, vec![f64::NAN; 64], 1.0, 0.1).is_err());
    }

    #[test]
    fn conditional_displacement_moves_rows() {
        let g = Grid::plane([20.0, 40.0], [16, 128]).unwrap();
        let p = PacketParams { center: [0.0, 0.0], momentum: [0.0, 0.0], width: [3.0, 1.5], phase: 0.0 };
        let psi = gaussian_packet(&g, &p).unwrap();
        let out = conditional_displacement(&psi, |x| if x > 0.0 { 5.0 } else { -5.0 }).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        let up = crate::grid::Region::from_fn(g, |x| x[0] > 0.0);
        let shifted = crate::wavefunction::project(&out, &up).unwrap();
        assert!((shifted.mean_position(1) - 5.0).abs() < 1e-6);
        // unitary: inner products preserved
        let q = gaussian_packet(&g, &PacketParams { center: [1.0, 2.0], ..p }).unwrap();
        let q2 = conditional_displacement(&q, |x| if x > 0.0 { 5.0 } else { -5.0 }).unwrap();
        let before = inner(&psi, &q).unwrap();
        let after = inner(&out, &q2).unwrap();
        assert!((before - after).norm() < 1e-12);
    }
}
