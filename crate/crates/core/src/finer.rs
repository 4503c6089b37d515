//! The refinement relation 𝒟′ ≼ 𝒟: every component of 𝒟 is the sum of a
//! distinct, non-empty group of components of 𝒟′ through a map h: 𝒟′ → 𝒟.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::decomposition::Decomposition;
use crate::error::{PsdError, Result};
use crate::wavefunction::{inner, WaveFunction};

/// Exhaustive search is attempted up to this many finer components.
pub const EXHAUSTIVE_MAX_COMPONENTS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "outcome", content = "map")]
pub enum FinerOutcome {
    /// `map[j]` is the index in 𝒟 that component j of 𝒟′ is assigned to.
    Finer(Vec<usize>),
    NotFiner,
    /// Greedy matching failed and the instance is too large to enumerate.
    Inconclusive,
}

impl FinerOutcome {
    pub fn map(&self) -> Option<&[usize]> {
        match self {
            FinerOutcome::Finer(h) => Some(h),
            _ => None,
        }
    }
}

/// Worst relative group residual max_i ‖Ψᵢ − Σ_{h(j)=i} Ψ′ⱼ‖ / ‖Ψᵢ‖ of a
/// candidate map, or `None` if the map is not surjective.
pub fn map_residual(finer: &Decomposition, coarse: &Decomposition, h: &[usize]) -> Result<Option<f64>> {
    if h.len() != finer.len() || h.iter().any(|&i| i >= coarse.len()) {
        return Err(PsdError::InvalidArgument("map does not fit the decompositions".into()));
    }
    let mut groups: Vec<Option<WaveFunction>> = vec![None; coarse.len()];
    for (j, &i) in h.iter().enumerate() {
        let c = &finer.components()[j];
        groups[i] = Some(match groups[i].take() {
            None => c.clone(),
            Some(acc) => acc.add(c)?,
        });
    }
    let mut worst: f64 = 0.0;
    for (i, g) in groups.into_iter().enumerate() {
        let Some(g) = g else { return Ok(None) };
        let target = &coarse.components()[i];
        worst = worst.max(target.sub(&g)?.norm() / target.norm());
    }
    Ok(Some(worst))
}

/// Searches for h: 𝒟′ → 𝒟 with group sums matching within `tol`
/// (relative to each coarse component's norm).
pub fn is_finer(finer: &Decomposition, coarse: &Decomposition, tol: f64) -> Result<FinerOutcome> {
    finer.grid().check_same(coarse.grid())?;
    let parent_norm = coarse.parent().norm().max(f64::MIN_POSITIVE);
    let parent_residual = finer.parent().sub(coarse.parent())?.norm() / parent_norm;
    if parent_residual > tol {
        return Err(PsdError::ParentMismatch { residual: parent_residual, tol });
    }
    let (m, n) = (finer.len(), coarse.len());
    if m < n {
        return Ok(FinerOutcome::NotFiner);
    }

    // greedy: each finer component goes to the coarse component with the
    // largest normalized overlap
    let greedy: Vec<usize> = finer
        .components()
        .iter()
        .map(|fj| {
            let fj_norm = fj.norm();
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (i, ci) in coarse.components().iter().enumerate() {
                let s = inner(ci, fj).map(|z| z.norm()).unwrap_or(0.0) / (ci.norm() * fj_norm);
                if s > best_score {
                    best_score = s;
                    best = i;
                }
            }
            best
        })
        .collect();
    if let Some(r) = map_residual(finer, coarse, &greedy)? {
        if r <= tol {
            return Ok(FinerOutcome::Finer(greedy));
        }
    }

    if m > EXHAUSTIVE_MAX_COMPONENTS {
        return Ok(FinerOutcome::Inconclusive);
    }
    exhaustive(finer, coarse, tol)
}

fn exhaustive(finer: &Decomposition, coarse: &Decomposition, tol: f64) -> Result<FinerOutcome> {
    let (m, n) = (finer.len(), coarse.len());
    // Gram-based residuals: ‖cᵢ − Σ f‖² = ‖cᵢ‖² − 2 Re Σ⟨cᵢ, fⱼ⟩ + Σ⟨fⱼ, fₖ⟩
    let mut cf = vec![C64::new(0.0, 0.0); n * m];
    for i in 0..n {
        for j in 0..m {
            cf[i * m + j] = inner(&coarse.components()[i], &finer.components()[j])?;
        }
    }
    let mut ff = vec![C64::new(0.0, 0.0); m * m];
    for j in 0..m {
        for k in j..m {
            let v = inner(&finer.components()[j], &finer.components()[k])?;
            ff[j * m + k] = v;
            ff[k * m + j] = v.conj();
        }
    }
    let cn: Vec<f64> = coarse.components().iter().map(WaveFunction::norm_sqr).collect();
    let search = GroupSearch { m, n, cf, ff, cn, tol, slack: 1e-10 };
    let mut groups = vec![0u32; n];
    let full = (1u32 << m) - 1;
    if !search.assign(0, full, &mut groups) {
        return Ok(FinerOutcome::NotFiner);
    }
    let mut h = vec![0usize; m];
    for (i, g) in groups.iter().enumerate() {
        (0..m).filter(|j| g >> j & 1 == 1).for_each(|j| h[j] = i);
    }
    match map_residual(finer, coarse, &h)? {
        Some(r) if r <= tol => Ok(FinerOutcome::Finer(h)),
        _ => Ok(FinerOutcome::NotFiner),
    }
}

/// Depth-first search over the group of each coarse component in turn,
/// drawing from the finer components not yet used.
struct GroupSearch {
    m: usize,
    n: usize,
    cf: Vec<C64>,
    ff: Vec<C64>,
    cn: Vec<f64>,
    tol: f64,
    /// round-off floor of the Gram formula, relative to ‖cᵢ‖²
    slack: f64,
}

impl GroupSearch {
    fn matches(&self, i: usize, group: u32) -> bool {
        let members: Vec<usize> = (0..self.m).filter(|j| group >> j & 1 == 1).collect();
        let mut r2 = self.cn[i];
        for &j in &members {
            r2 -= 2.0 * self.cf[i * self.m + j].re;
            for &k in &members {
                r2 += self.ff[j * self.m + k].re;
            }
        }
        r2 <= (self.tol * self.tol + self.slack) * self.cn[i]
    }

    fn assign(&self, i: usize, remaining: u32, groups: &mut [u32]) -> bool {
        if i + 1 == self.n {
            groups[i] = remaining;
            return remaining != 0 && self.matches(i, remaining);
        }
        let left_for_rest = self.n - 1 - i;
        // nonempty submasks of `remaining`
        let mut sub = remaining;
        while sub != 0 {
            if (remaining & !sub).count_ones() as usize >= left_for_rest && self.matches(i, sub) {
                groups[i] = sub;
                if self.assign(i + 1, remaining & !sub, groups) {
                    return true;
                }
            }
            sub = (sub - 1) & remaining;
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn vecs() -> (WaveFunction, WaveFunction, WaveFunction) {
        let g = Grid::line(12.0, 12).unwrap();
        let a = WaveFunction::from_fn(g, |x| C64::new((x[0] * 0.7).sin() + 0.3, 0.2 * x[0]));
        let b = WaveFunction::from_fn(g, |x| C64::new((x[0] * 0.3).cos(), -0.1 * x[0] * x[0]));
        let c = WaveFunction::from_fn(g, |x| C64::new(0.05 * x[0], (x[0] * 1.3).cos()));
        (a, b, c)
    }

    #[test]
    fn groups_are_recovered() {
        let (a, b, c) = vecs();
        let dp = Decomposition::from_components(vec![a.clone(), b.clone(), c.clone()]).unwrap();
        let d = Decomposition::from_components(vec![a.add(&b).unwrap(), c]).unwrap();
        assert_eq!(is_finer(&dp, &d, 1e-9).unwrap(), FinerOutcome::Finer(vec![0, 0, 1]));
    }

    #[test]
    fn reflexive() {
        let (a, b, c) = vecs();
        let d = Decomposition::from_components(vec![a, b, c]).unwrap();
        assert_eq!(is_finer(&d, &d, 1e-9).unwrap(), FinerOutcome::Finer(vec![0, 1, 2]));
    }

    #[test]
    fn different_parents_are_rejected() {
        let (a, b, _) = vecs();
        let dp = Decomposition::from_components(vec![a.clone(), b.clone()]).unwrap();
        let d = Decomposition::from_components(vec![a.add(&b.scaled(C64::new(2.0, 0.0))).unwrap()]).unwrap();
        let out = is_finer(&dp, &d, 1e-6);
        assert!(matches!(out, Err(PsdError::ParentMismatch { .. })));
    }

    #[test]
    fn coarser_is_not_finer() {
        let (a, b, c) = vecs();
        let dp = Decomposition::from_components(vec![a.clone(), b.clone(), c.clone()]).unwrap();
        let d = Decomposition::from_components(vec![a.add(&b).unwrap(), c]).unwrap();
        assert_eq!(is_finer(&d, &dp, 1e-9).unwrap(), FinerOutcome::NotFiner);
    }
}
