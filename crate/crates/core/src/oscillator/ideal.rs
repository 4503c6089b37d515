//! Ideal decoherence toy: a system with pointer basis {|Sᵢ⟩} coupled to K
//! environment qubits by U(t) = Σᵢ |Sᵢ⟩⟨Sᵢ| ⊗ Uᵢ(t), where Uᵢ(t) rotates
//! every qubit by i·κt. Then ⟨Eᵢ(t)|Eⱼ(t)⟩ = cos((i − j)κt)^K.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{PsdError, Result};

pub const DEFAULT_DIMENSION_CAP: usize = 1 << 24;
const ORTHONORMAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealModelConfig {
    pub system_dim: usize,
    /// Pointer vectors in the computational basis; `None` means the
    /// computational basis itself.
    #[serde(default)]
    pub pointer: Option<Vec<Vec<C64>>>,
    pub qubits: usize,
    /// Rotation angle per step for pointer index 1.
    pub kappa_dt: f64,
    #[serde(default = "default_cap")]
    pub dimension_cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_DIMENSION_CAP
}

impl IdealModelConfig {
    pub fn new(system_dim: usize, qubits: usize, kappa_dt: f64) -> Self {
        Self { system_dim, pointer: None, qubits, kappa_dt, dimension_cap: DEFAULT_DIMENSION_CAP }
    }

    fn pointer_basis(&self) -> Result<Vec<Vec<C64>>> {
        let n = self.system_dim;
        let basis = match &self.pointer {
            None => (0..n).map(|i| (0..n).map(|k| C64::new(if k == i { 1.0 } else { 0.0 }, 0.0)).collect()).collect(),
            Some(p) => p.clone(),
        };
        if basis.len() != n || basis.iter().any(|v| v.len() != n) {
            return Err(PsdError::InvalidArgument(format!("need {n} pointer vectors of length {n}")));
        }
        for i in 0..n {
            for j in 0..n {
                let ip: C64 = basis[i].iter().zip(&basis[j]).map(|(a, b)| a.conj() * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                if (ip - target).norm() > ORTHONORMAL_TOL {
                    return Err(PsdError::InvalidArgument("pointer vectors are not orthonormal".into()));
                }
            }
        }
        Ok(basis)
    }

    pub fn validate(&self) -> Result<()> {
        if self.system_dim == 0 || self.qubits == 0 {
            return Err(PsdError::InvalidArgument("system dimension and qubit count must be at least 1".into()));
        }
        if !self.kappa_dt.is_finite() {
            return Err(PsdError::InvalidArgument("coupling angle must be finite".into()));
        }
        let dim = self
            .qubits
            .try_into()
            .ok()
            .and_then(|k: u32| 2usize.checked_pow(k))
            .and_then(|e| e.checked_mul(self.system_dim));
        match dim {
            Some(d) if d <= self.dimension_cap => Ok(()),
            _ => Err(PsdError::DimensionOverflow { dim: dim.unwrap_or(usize::MAX), cap: self.dimension_cap }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdealModelState {
    /// Row-major over (system index, environment basis index).
    pub joint: Vec<C64>,
    pub env_dim: usize,
    /// ⟨Eᵢ(t)|Eⱼ(t)⟩.
    pub env_overlaps: DMatrix<C64>,
    /// Reduced state in the computational basis.
    pub rho_s: DMatrix<C64>,
    /// Reduced state in the pointer basis: ρᵢⱼ = cᵢcⱼ*⟨Eⱼ|Eᵢ⟩.
    pub rho_pointer: DMatrix<C64>,
    pub kappa_t: f64,
}

impl IdealModelState {
    pub fn purity(&self) -> f64 {
        (&self.rho_s * &self.rho_s).trace().re
    }
}

/// Applies the same real rotation to every qubit of `env` in place.
fn rotate_all(env: &mut [C64], qubits: usize, angle: f64) {
    let (c, s) = (angle.cos(), angle.sin());
    for q in 0..qubits {
        let bit = 1usize << q;
        for idx in 0..env.len() {
            if idx & bit == 0 {
                let (a, b) = (env[idx], env[idx | bit]);
                env[idx] = a * c - b * s;
                env[idx | bit] = a * s + b * c;
            }
        }
    }
}

/// Evolves c-weighted pointer states (coefficients in the pointer basis)
/// with the environment starting in |0…0⟩.
pub fn ideal_model_evolve(config: &IdealModelConfig, c: &[C64], steps: usize) -> Result<IdealModelState> {
    config.validate()?;
    let basis = config.pointer_basis()?;
    let n = config.system_dim;
    if c.len() != n {
        return Err(PsdError::InvalidArgument(format!("expected {n} coefficients, got {}", c.len())));
    }
    let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(PsdError::InvalidArgument(format!("coefficients must be normalized, sum |c|^2 = {norm}")));
    }
    let env_dim = 1usize << config.qubits;
    let kappa_t = config.kappa_dt * steps as f64;

    let envs: Vec<Vec<C64>> = (0..n)
        .map(|i| {
            let mut e = vec![C64::new(0.0, 0.0); env_dim];
            e[0] = C64::new(1.0, 0.0);
            rotate_all(&mut e, config.qubits, i as f64 * kappa_t);
            e
        })
        .collect();

    let mut joint = vec![C64::new(0.0, 0.0); n * env_dim];
    for (i, (ci, env)) in c.iter().zip(&envs).enumerate() {
        if ci.norm() == 0.0 {
            continue;
        }
        for (s, &si) in basis[i].iter().enumerate() {
            let w = ci * si;
            if w.norm() == 0.0 {
                continue;
            }
            for (j, e) in joint[s * env_dim..(s + 1) * env_dim].iter_mut().zip(env) {
                *j += w * e;
            }
        }
    }

    let env_overlaps = DMatrix::from_fn(n, n, |i, j| envs[i].iter().zip(&envs[j]).map(|(a, b)| a.conj() * b).sum());
    let rho_s = DMatrix::from_fn(n, n, |s, r| {
        let (a, b) = (&joint[s * env_dim..(s + 1) * env_dim], &joint[r * env_dim..(r + 1) * env_dim]);
        a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
    });
    let p = DMatrix::from_fn(n, n, |s, i| basis[i][s]);
    let rho_pointer = p.adjoint() * &rho_s * &p;
    Ok(IdealModelState { joint, env_dim, env_overlaps, rho_s, rho_pointer, kappa_t })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_state_is_pure() {
        let cfg = IdealModelConfig::new(2, 4, 0.1);
        let h = C64::new(0.5f64.sqrt(), 0.0);
        let st = ideal_model_evolve(&cfg, &[h, h], 0).unwrap();
        assert!((st.purity() - 1.0).abs() < 1e-12);
        assert!(st.env_overlaps.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn overflow_is_reported() {
        let mut cfg = IdealModelConfig::new(2, 30, 0.1);
        cfg.dimension_cap = 1 << 20;
        let h = C64::new(0.5f64.sqrt(), 0.0);
        assert!(matches!(ideal_model_evolve(&cfg, &[h, h], 1), Err(PsdError::DimensionOverflow { .. })));
    }

    #[test]
    fn non_orthonormal_pointer_rejected() {
        let mut cfg = IdealModelConfig::new(2, 2, 0.1);
        cfg.pointer =
            Some(vec![vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)], vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]]);
        let h = C64::new(0.5f64.sqrt(), 0.0);
        assert!(ideal_model_evolve(&cfg, &[h, h], 1).is_err());
    }

    #[test]
    fn rotated_pointer_basis() {
        let r = 0.5f64.sqrt();
        let mut cfg = IdealModelConfig::new(2, 6, 0.2);
        cfg.pointer = Some(vec![vec![C64::new(r, 0.0), C64::new(r, 0.0)], vec![C64::new(r, 0.0), C64::new(-r, 0.0)]]);
        let c = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let st = ideal_model_evolve(&cfg, &c, 3).unwrap();
        assert!((st.rho_pointer[(0, 0)].re - 0.36).abs() < 1e-12);
        let expected = c[0] * c[1].conj() * (0.6f64).cos().powi(6);
        assert!((st.rho_pointer[(0, 1)] - expected).norm() < 1e-12);
    }
}
