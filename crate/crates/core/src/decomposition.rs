//! Decompositions of a wave function into finitely many linearly
//! independent components, and exact spatial decompositions E(𝔛)ψ.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{PsdError, Result};
use crate::grid::{Grid, Partition};
use crate::wavefunction::{inner, project, WaveFunction};

/// Tolerances used to validate decompositions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionTolerances {
    /// Relative residual ‖Σ components − parent‖ / ‖parent‖.
    pub sum_residual: f64,
    /// Smallest admissible eigenvalue of the Gram matrix of normalized components.
    pub gram_min_eigenvalue: f64,
    /// Smallest admissible component norm.
    pub min_component_norm: f64,
}

impl Default for DecompositionTolerances {
    fn default() -> Self {
        Self { sum_residual: 1e-8, gram_min_eigenvalue: 1e-6, min_component_norm: 1e-12 }
    }
}

/// An ordered list of components with a declared parent (their intended sum).
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    components: Vec<WaveFunction>,
    parent: WaveFunction,
}

impl Decomposition {
    /// Builds a decomposition with an explicitly declared parent. No
    /// validation beyond shape is done here; see [`validate`].
    pub fn new(components: Vec<WaveFunction>, parent: WaveFunction) -> Result<Self> {
        if components.is_empty() {
            return Err(PsdError::InvalidArgument("a decomposition needs at least one component".into()));
        }
        for c in &components {
            parent.grid().check_same(c.grid())?;
        }
        Ok(Self { components, parent })
    }

    /// Decomposition whose parent is the sum of its components.
    pub fn from_components(components: Vec<WaveFunction>) -> Result<Self> {
        let parent = WaveFunction::sum(&components)?;
        Self::new(components, parent)
    }

    pub fn trivial(psi: WaveFunction) -> Self {
        Self { components: vec![psi.clone()], parent: psi }
    }

    pub fn components(&self) -> &[WaveFunction] {
        &self.components
    }

    pub fn into_components(self) -> Vec<WaveFunction> {
        self.components
    }

    pub fn parent(&self) -> &WaveFunction {
        &self.parent
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn grid(&self) -> &Grid {
        self.parent.grid()
    }

    /// Σ components (recomputed, not the declared parent).
    pub fn sum(&self) -> WaveFunction {
        WaveFunction::sum(&self.components).expect("components share a grid")
    }

    /// Ψ_I for a subset given as a bitmask over component indices.
    pub fn subset_sum(&self, mask: u64) -> WaveFunction {
        let mut acc = WaveFunction::zeros(*self.grid());
        for (i, c) in self.components.iter().enumerate() {
            if mask >> i & 1 == 1 {
                acc = acc.add(c).expect("components share a grid");
            }
        }
        acc
    }

    pub fn norms_sqr(&self) -> Vec<f64> {
        self.components.iter().map(WaveFunction::norm_sqr).collect()
    }

    /// Applies the same map to every component and to the parent.
    pub fn map(&self, mut f: impl FnMut(&WaveFunction) -> Result<WaveFunction>) -> Result<Self> {
        let components = self.components.iter().map(&mut f).collect::<Result<Vec<_>>>()?;
        let parent = f(&self.parent)?;
        Self::new(components, parent)
    }
}

/// Outcome of [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub sum_residual: f64,
    pub gram_min_eigenvalue: f64,
    pub min_component_norm: f64,
    pub sum_ok: bool,
    pub independent: bool,
    pub norms_ok: bool,
    pub tolerances: DecompositionTolerances,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.sum_ok && self.independent && self.norms_ok
    }
}

/// Gram matrix of the given vectors.
pub fn gram_matrix(vectors: &[WaveFunction]) -> Result<DMatrix<C64>> {
    let n = vectors.len();
    let mut g = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for i in 0..n {
        for j in i..n {
            let v = inner(&vectors[i], &vectors[j])?;
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    Ok(g)
}

pub fn validate(d: &Decomposition) -> ValidationReport {
    validate_with(d, &DecompositionTolerances::default())
}

pub fn validate_with(d: &Decomposition, tol: &DecompositionTolerances) -> ValidationReport {
    let parent_norm = d.parent.norm();
    let residual = d.sum().sub(&d.parent).expect("shared grid").norm();
    let sum_residual = if parent_norm > 0.0 { residual / parent_norm } else { residual };

    let norms: Vec<f64> = d.components.iter().map(WaveFunction::norm).collect();
    let min_component_norm = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let norms_ok = min_component_norm >= tol.min_component_norm;

    let gram_min_eigenvalue = if norms_ok {
        let unit: Vec<WaveFunction> =
            d.components.iter().zip(&norms).map(|(c, &n)| c.scaled(C64::new(1.0 / n, 0.0))).collect();
        let g = gram_matrix(&unit).expect("shared grid");
        SymmetricEigen::new(g).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };

    ValidationReport {
        sum_residual,
        gram_min_eigenvalue,
        min_component_norm,
        sum_ok: sum_residual <= tol.sum_residual,
        independent: gram_min_eigenvalue > tol.gram_min_eigenvalue,
        norms_ok,
        tolerances: *tol,
    }
}

/// E(𝔛)ψ = {E(Δ₁)ψ, …, E(Δₙ)ψ}. Every block must carry amplitude mass.
pub fn decompose_by_partition(psi: &WaveFunction, part: &Partition) -> Result<Decomposition> {
    psi.grid().check_same(part.grid())?;
    let components = (0..part.n_blocks())
        .map(|b| {
            let c = project(psi, &part.block(b))?;
            if c.norm_sqr() == 0.0 {
                Err(PsdError::EmptyBlock { block: b })
            } else {
                Ok(c)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Decomposition::new(components, psi.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::wavefunction::{gaussian_packet, PacketParams};

    fn two_bumps() -> (Grid, WaveFunction) {
        let g = Grid::line(60.0, 512).unwrap();
        let a = gaussian_packet(&g, &PacketParams::line(-10.0, 0.0, 1.5)).unwrap();
        let b = gaussian_packet(&g, &PacketParams::line(10.0, 0.0, 1.5)).unwrap();
        (g, a.add(&b).unwrap())
    }

    #[test]
    fn split_of_symmetric_two_bump_state() {
        let (g, psi) = two_bumps();
        let d = decompose_by_partition(&psi, &Partition::split_axis0(g, 0.0)).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.sum(), psi);
        assert_eq!(inner(&d.components()[0], &d.components()[1]).unwrap(), C64::new(0.0, 0.0));
        assert!((d.components()[0].norm_sqr() - d.components()[1].norm_sqr()).abs() < 1e-12);
        assert!(validate(&d).passed());
    }

    #[test]
    fn single_block_is_identity() {
        let (g, psi) = two_bumps();
        let d = decompose_by_partition(&psi, &Partition::trivial(g)).unwrap();
        assert_eq!(d.components(), &[psi]);
    }

    #[test]
    fn empty_block_rejected() {
        let g = Grid::line(8.0, 8).unwrap();
        let psi = WaveFunction::from_fn(g, |x| if x[0] < 0.0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        let err = decompose_by_partition(&psi, &Partition::split_axis0(g, 0.0)).unwrap_err();
        assert!(matches!(err, PsdError::EmptyBlock { block: 1 }));
    }

    #[test]
    fn linear_dependence_fails() {
        let (_, psi) = two_bumps();
        let d = Decomposition::new(vec![psi.clone(), psi.scaled(C64::new(2.0, 0.0))], psi.scaled(C64::new(3.0, 0.0)))
            .unwrap();
        let r = validate(&d);
        assert!(r.sum_ok);
        assert!(!r.independent);
        assert!(!r.passed());
    }

    #[test]
    fn sum_residual_fails() {
        let g = Grid::line(60.0, 512).unwrap();
        let a = gaussian_packet(&g, &PacketParams::line(-10.0, 0.0, 1.5)).unwrap();
        let b = gaussian_packet(&g, &PacketParams::line(10.0, 0.0, 1.5)).unwrap();
        let c = gaussian_packet(&g, &PacketParams::line(0.0, 0.0, 1.5)).unwrap();
        let parent = a.add(&b).unwrap().add(&c.scaled(C64::new(0.1, 0.0))).unwrap();
        let r = validate(&Decomposition::new(vec![a, b], parent).unwrap());
        assert!(!r.sum_ok);
        assert!(r.independent);
    }
}
