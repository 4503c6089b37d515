//! Truncated Fock space and coherent states.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{PsdError, Result};

pub const DEFAULT_N_MAX: usize = 40;

/// Span of |0⟩ … |n_max − 1⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockSpace {
    n_max: usize,
}

impl Default for FockSpace {
    fn default() -> Self {
        Self { n_max: DEFAULT_N_MAX }
    }
}

impl FockSpace {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(PsdError::InvalidArgument(format!("Fock truncation must be at least 2, got {n_max}")));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// a|n⟩ = √n |n − 1⟩.
    pub fn annihilation(&self) -> DMatrix<C64> {
        let n = self.n_max;
        DMatrix::from_fn(n, n, |r, c| if c == r + 1 { C64::new((c as f64).sqrt(), 0.0) } else { C64::new(0.0, 0.0) })
    }

    pub fn creation(&self) -> DMatrix<C64> {
        self.annihilation().adjoint()
    }

    pub fn number(&self) -> DMatrix<C64> {
        DMatrix::from_fn(
            self.n_max,
            self.n_max,
            |r, c| if r == c { C64::new(r as f64, 0.0) } else { C64::new(0.0, 0.0) },
        )
    }

    /// Largest |α|² a coherent state may carry in this truncation.
    pub fn max_amplitude_sqr(&self) -> f64 {
        self.n_max as f64 / 4.0
    }

    pub(crate) fn check_amplitude(&self, alpha: C64) -> Result<()> {
        if !alpha.is_finite() || alpha.norm_sqr() > self.max_amplitude_sqr() {
            return Err(PsdError::InvalidArgument(format!(
                "|alpha|^2 = {} exceeds n_max/4 = {} for this truncation",
                alpha.norm_sqr(),
                self.max_amplitude_sqr()
            )));
        }
        Ok(())
    }
}

/// |α⟩ truncated to the space; coefficients e^{−|α|²/2} αⁿ/√n! are exact
/// and not renormalized, so the missing tail shows up as a norm deficit.
pub fn coherent_state(alpha: C64, space: &FockSpace) -> Result<DVector<C64>> {
    space.check_amplitude(alpha)?;
    let mut v = DVector::from_element(space.n_max(), C64::new(0.0, 0.0));
    let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    v[0] = c;
    for n in 1..space.n_max() {
        c = c * alpha / (n as f64).sqrt();
        v[n] = c;
    }
    Ok(v)
}

/// ⟨α|β⟩ = exp(−|α|²/2 − |β|²/2 + α*β).
pub fn coherent_overlap(alpha: C64, beta: C64) -> C64 {
    (-(alpha.norm_sqr() + beta.norm_sqr()) / 2.0 + alpha.conj() * beta).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub radius: f64,
    pub samples: usize,
    /// Checked sector: n ≤ sector_max.
    pub sector_max: usize,
    /// max |⟨m|Π|n⟩ − δ_mn| over the sector.
    pub max_deviation: f64,
    pub diagonal: Vec<f64>,
    pub max_off_diagonal: f64,
}

pub const MIN_COMPLETENESS_SAMPLES: usize = 10_000;
const ANGULAR_SAMPLES: usize = 64;

/// Midpoint-rule value of (1/π)∫_{|α|≤R} |α⟩⟨α| d²α on the Fock sector
/// n ≤ R²/4, compared with the identity.
pub fn completeness_check(space: &FockSpace, radius: f64, samples: usize) -> Result<CompletenessReport> {
    let r2 = radius * radius;
    if !(radius > 0.0) || r2 > space.n_max() as f64 {
        return Err(PsdError::InvalidArgument(format!(
            "radius^2 = {r2} must be positive and at most n_max = {} (the tail dominates beyond)",
            space.n_max()
        )));
    }
    if samples < MIN_COMPLETENESS_SAMPLES {
        return Err(PsdError::InvalidArgument(format!(
            "{samples} samples are too few for the oscillatory integrand (need at least {MIN_COMPLETENESS_SAMPLES})"
        )));
    }
    let sector = (r2 / 4.0).floor() as usize;
    let dim = sector + 1;
    let n_phi = ANGULAR_SAMPLES;
    let n_r = samples.div_ceil(n_phi);
    let (dr, dphi) = (radius / n_r as f64, std::f64::consts::TAU / n_phi as f64);

    let mut acc = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    let mut v = vec![C64::new(0.0, 0.0); dim];
    for ir in 0..n_r {
        let r = (ir as f64 + 0.5) * dr;
        for ip in 0..n_phi {
            let alpha = C64::from_polar(r, (ip as f64 + 0.5) * dphi);
            let mut c = C64::new((-r * r / 2.0).exp(), 0.0);
            v[0] = c;
            for (n, slot) in v.iter_mut().enumerate().skip(1) {
                c = c * alpha / (n as f64).sqrt();
                *slot = c;
            }
            let weight = r * dr * dphi / std::f64::consts::PI;
            for m in 0..dim {
                for n in 0..dim {
                    acc[(m, n)] += v[m] * v[n].conj() * weight;
                }
            }
        }
    }
    let mut max_deviation: f64 = 0.0;
    let mut max_off: f64 = 0.0;
    for m in 0..dim {
        for n in 0..dim {
            let target = if m == n { 1.0 } else { 0.0 };
            let d = (acc[(m, n)] - target).norm();
            max_deviation = max_deviation.max(d);
            if m != n {
                max_off = max_off.max(d);
            }
        }
    }
    Ok(CompletenessReport {
        radius,
        samples: n_r * n_phi,
        sector_max: sector,
        max_deviation,
        diagonal: (0..dim).map(|n| acc[(n, n)].re).collect(),
        max_off_diagonal: max_off,
    })
}
