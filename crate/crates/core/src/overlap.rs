//! The overlap functional w(𝒟): the infimum over n-block partitions of the
//! worst subset residual ‖Ψ_I − E(Δ_I)Ψ‖ / ‖Ψ_I‖.
//!
//! For two components the infimum has a closed form and is attained by the
//! pointwise-argmax partition. For more components the infimum is searched:
//! exhaustively on tiny grids, otherwise by single-cell local search seeded
//! with the argmax partition (an upper bound).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decomposition::Decomposition;
use crate::error::{PsdError, Result};
use crate::grid::Partition;

/// Largest component count for which all 2ⁿ − 2 subsets are enumerated.
pub const MAX_COMPONENTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WMode {
    ExactPair,
    BruteForce,
    HeuristicUpperBound,
}

/// Search settings for [`w_optimize`]. Recorded in every report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WConfig {
    /// Maximum number of candidate relabelings evaluated by local search.
    pub budget: u64,
    /// Exhaustive enumeration is used when nᶜᵉˡˡˢ does not exceed this.
    pub brute_force_limit: u64,
    /// Exhaustive enumeration is only considered up to this many cells.
    pub brute_force_max_cells: usize,
    /// Seeds the cell visiting order of the local search.
    pub seed: u64,
}

impl Default for WConfig {
    fn default() -> Self {
        Self { budget: 2_000_000, brute_force_limit: 1 << 24, brute_force_max_cells: 16, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WReport {
    pub value: f64,
    pub partition: Partition,
    pub mode: WMode,
    /// Component indices of the subset attaining the inner max (empty when
    /// there is no proper subset, i.e. n = 1).
    pub subset_argmax: Vec<usize>,
    pub config: WConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WReportRecord {
    pub value: f64,
    pub mode: WMode,
    pub n_blocks: usize,
    /// `(label, run length)` pairs in row-major cell order.
    pub partition_rle: Vec<(usize, usize)>,
    pub subset_argmax: Vec<usize>,
    pub config: WConfig,
}

impl WReport {
    pub fn to_record(&self) -> WReportRecord {
        WReportRecord {
            value: self.value,
            mode: self.mode,
            n_blocks: self.partition.n_blocks(),
            partition_rle: self.partition.run_length(),
            subset_argmax: self.subset_argmax.clone(),
            config: self.config,
        }
    }
}

fn mask_to_indices(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

/// Per-cell densities |Ψ_S(c)|² for every subset mask S, plus ‖Ψ_S‖².
struct SubsetTable {
    n: usize,
    cells: usize,
    full: u64,
    volume: f64,
    /// density[S * cells + c]
    density: Vec<f64>,
    norm_sqr: Vec<f64>,
}

impl SubsetTable {
    fn new(d: &Decomposition) -> Result<Self> {
        let n = d.len();
        if n > MAX_COMPONENTS {
            return Err(PsdError::InvalidArgument(format!(
                "{n} components exceed the subset-enumeration limit of {MAX_COMPONENTS}"
            )));
        }
        let cells = d.grid().len();
        let subsets = 1usize << n;
        let mut density = vec![0.0; subsets * cells];
        let mut sums = vec![num_complex::Complex64::new(0.0, 0.0); subsets];
        for c in 0..cells {
            for s in 1..subsets {
                let low = s.trailing_zeros() as usize;
                sums[s] = sums[s & (s - 1)] + d.components()[low].amplitudes()[c];
                density[s * cells + c] = sums[s].norm_sqr();
            }
        }
        let volume = d.grid().cell_volume();
        let norm_sqr = (0..subsets).map(|s| density[s * cells..(s + 1) * cells].iter().sum::<f64>() * volume).collect();
        Ok(Self { n, cells, full: (subsets - 1) as u64, volume, density, norm_sqr })
    }

    fn proper_subsets(&self) -> impl Iterator<Item = u64> {
        1..self.full
    }

    /// Residual density contributed by cell `c` with label `l` to subset `s`.
    #[inline]
    fn cost(&self, s: u64, c: usize, l: usize) -> f64 {
        let t = if s >> l & 1 == 1 { self.full ^ s } else { s };
        self.density[t as usize * self.cells + c]
    }

    fn sums_for(&self, labels: &[usize]) -> Vec<f64> {
        let mut sums = vec![0.0; self.full as usize + 1];
        for s in self.proper_subsets() {
            sums[s as usize] = labels.iter().enumerate().map(|(c, &l)| self.cost(s, c, l)).sum();
        }
        sums
    }

    /// (max ratio², total ratio², argmax subset); ties keep the lowest mask.
    fn objective(&self, sums: &[f64]) -> (f64, f64, u64) {
        let mut best = (f64::NEG_INFINITY, 0.0, 0u64);
        for s in self.proper_subsets() {
            let r = sums[s as usize].max(0.0) * self.volume / self.norm_sqr[s as usize];
            best.1 += r;
            if r > best.0 {
                best.0 = r;
                best.2 = s;
            }
        }
        if self.full <= 1 {
            return (0.0, 0.0, 0);
        }
        best
    }

    fn argmax_labels(&self) -> Vec<usize> {
        (0..self.cells)
            .map(|c| {
                let mut best = 0;
                let mut best_d = f64::NEG_INFINITY;
                for i in 0..self.n {
                    let d = self.density[(1usize << i) * self.cells + c];
                    if d > best_d {
                        best_d = d;
                        best = i;
                    }
                }
                best
            })
            .collect()
    }
}

/// max over proper non-empty subsets I of ‖Ψ_I − E(Δ_I)Ψ‖ / ‖Ψ_I‖ for a
/// fixed partition whose blocks align index-wise with the components.
/// Returns the value and the maximizing subset. For n = 1 the value is 0.
pub fn w_given_partition(d: &Decomposition, part: &Partition) -> Result<(f64, Vec<usize>)> {
    d.grid().check_same(part.grid())?;
    if part.n_blocks() != d.len() {
        return Err(PsdError::BlockCountMismatch { blocks: part.n_blocks(), components: d.len() });
    }
    let table = SubsetTable::new(d)?;
    let (max_r2, _, arg) = table.objective(&table.sums_for(part.labels()));
    Ok((max_r2.sqrt(), mask_to_indices(arg, d.len())))
}

/// Diagnostic variant restricted to singleton subsets:
/// max_i ‖Ψᵢ − E(Δᵢ)Ψ‖ / ‖Ψᵢ‖ for a fixed partition.
pub fn w_tentative_given_partition(d: &Decomposition, part: &Partition) -> Result<f64> {
    d.grid().check_same(part.grid())?;
    if part.n_blocks() != d.len() {
        return Err(PsdError::BlockCountMismatch { blocks: part.n_blocks(), components: d.len() });
    }
    let table = SubsetTable::new(d)?;
    let sums = table.sums_for(part.labels());
    let n = d.len();
    if n == 1 {
        return Ok(0.0);
    }
    Ok((0..n)
        .map(|i| {
            let s = 1usize << i;
            (sums[s] * table.volume / table.norm_sqr[s]).sqrt()
        })
        .fold(0.0, f64::max))
}

/// Closed form for two components:
/// w = (∫ min{|Ψ₁|², |Ψ₂|²})^{1/2} / min{‖Ψ₁‖, ‖Ψ₂‖},
/// attained by assigning each cell to the component with the larger density
/// (ties to the first).
pub fn w_exact_pair(d: &Decomposition) -> Result<WReport> {
    w_exact_pair_with(d, &WConfig::default())
}

pub fn w_exact_pair_with(d: &Decomposition, config: &WConfig) -> Result<WReport> {
    if d.len() != 2 {
        return Err(PsdError::InvalidArgument(format!("exact pair formula needs 2 components, got {}", d.len())));
    }
    let a = d.components()[0].amplitudes();
    let b = d.components()[1].amplitudes();
    let mut min_integral = 0.0;
    let mut labels = Vec::with_capacity(a.len());
    for (x, y) in a.iter().zip(b) {
        let (p, q) = (x.norm_sqr(), y.norm_sqr());
        min_integral += p.min(q);
        labels.push(usize::from(q > p));
    }
    let vol = d.grid().cell_volume();
    let (n1, n2) = (d.components()[0].norm(), d.components()[1].norm());
    if n1 == 0.0 || n2 == 0.0 {
        return Err(PsdError::InvalidArgument("zero-norm component".into()));
    }
    let value = (min_integral * vol).sqrt() / n1.min(n2);
    let subset_argmax = if n1 <= n2 { vec![0] } else { vec![1] };
    Ok(WReport {
        value,
        partition: Partition::new(*d.grid(), labels, 2)?,
        mode: WMode::ExactPair,
        subset_argmax,
        config: *config,
    })
}

/// Approximates the infimum over partitions.
pub fn w_optimize(d: &Decomposition, config: &WConfig) -> Result<WReport> {
    if config.budget == 0 {
        return Err(PsdError::InvalidArgument("search budget must be positive".into()));
    }
    let n = d.len();
    if n == 1 {
        return Ok(WReport {
            value: 0.0,
            partition: Partition::trivial(*d.grid()),
            mode: WMode::BruteForce,
            subset_argmax: vec![],
            config: *config,
        });
    }
    if n == 2 {
        return w_exact_pair_with(d, config);
    }
    let table = SubsetTable::new(d)?;
    let cells = table.cells;
    let exhaustive =
        cells <= config.brute_force_max_cells && (n as f64).powi(cells as i32) <= config.brute_force_limit as f64;
    let (labels, mode) = if exhaustive {
        (brute_force(&table), WMode::BruteForce)
    } else {
        (local_search(&table, config), WMode::HeuristicUpperBound)
    };
    let (max_r2, _, arg) = table.objective(&table.sums_for(&labels));
    Ok(WReport {
        value: max_r2.sqrt(),
        partition: Partition::new(*d.grid(), labels, n)?,
        mode,
        subset_argmax: mask_to_indices(arg, n),
        config: *config,
    })
}

/// Local search alone, for any n ≥ 2: an upper bound on the infimum even
/// where a closed form or enumeration exists.
pub fn w_local_search(d: &Decomposition, config: &WConfig) -> Result<WReport> {
    if config.budget == 0 {
        return Err(PsdError::InvalidArgument("search budget must be positive".into()));
    }
    if d.len() < 2 {
        return Err(PsdError::InvalidArgument("local search needs at least two components".into()));
    }
    let table = SubsetTable::new(d)?;
    let labels = local_search(&table, config);
    let (max_r2, _, arg) = table.objective(&table.sums_for(&labels));
    Ok(WReport {
        value: max_r2.sqrt(),
        partition: Partition::new(*d.grid(), labels, d.len())?,
        mode: WMode::HeuristicUpperBound,
        subset_argmax: mask_to_indices(arg, d.len()),
        config: *config,
    })
}

/// The seed used by the local search: pointwise argmax of |Ψᵢ|², ties to
/// the lower index.
pub fn argmax_partition(d: &Decomposition) -> Result<Partition> {
    let table = SubsetTable::new(d)?;
    Partition::new(*d.grid(), table.argmax_labels(), d.len())
}

fn brute_force(table: &SubsetTable) -> Vec<usize> {
    let n = table.n;
    let cells = table.cells;
    let mut labels = vec![0usize; cells];
    let mut sums = table.sums_for(&labels);
    let mut best = labels.clone();
    let mut best_obj = table.objective(&sums).0;
    loop {
        // odometer increment, updating sums for the cells that change
        let mut c = 0;
        loop {
            if c == cells {
                return best;
            }
            let old = labels[c];
            let new = if old + 1 == n { 0 } else { old + 1 };
            for s in table.proper_subsets() {
                sums[s as usize] += table.cost(s, c, new) - table.cost(s, c, old);
            }
            labels[c] = new;
            if new != 0 {
                break;
            }
            c += 1;
        }
        let obj = table.objective(&sums).0;
        if obj < best_obj {
            // recompute exactly to shed accumulated round-off before comparing further
            let exact = table.objective(&table.sums_for(&labels)).0;
            if exact < best_obj {
                best_obj = exact;
                best.copy_from_slice(&labels);
            }
        }
    }
}

fn local_search(table: &SubsetTable, config: &WConfig) -> Vec<usize> {
    let n = table.n;
    let mut labels = table.argmax_labels();
    let mut sums = table.sums_for(&labels);
    let (mut cur_max, mut cur_total, _) = table.objective(&sums);
    let mut order: Vec<usize> = (0..table.cells).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));

    let subsets: Vec<u64> = table.proper_subsets().collect();
    let mut trial = sums.clone();
    let mut evaluations = 0u64;
    'sweeps: loop {
        let mut improved = false;
        for &c in &order {
            let old = labels[c];
            for new in 0..n {
                if new == old {
                    continue;
                }
                if evaluations >= config.budget {
                    break 'sweeps;
                }
                evaluations += 1;
                for &s in &subsets {
                    trial[s as usize] = sums[s as usize] + table.cost(s, c, new) - table.cost(s, c, old);
                }
                let (m, t, _) = table.objective(&trial);
                let better = m < cur_max * (1.0 - 1e-12) || (m <= cur_max && t < cur_total * (1.0 - 1e-12));
                if better {
                    labels[c] = new;
                    std::mem::swap(&mut sums, &mut trial);
                    cur_max = m;
                    cur_total = t;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            break;
        }
        sums = table.sums_for(&labels);
        (cur_max, cur_total, _) = table.objective(&sums);
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::decompose_by_partition;
    use crate::grid::Grid;
    use crate::wavefunction::{gaussian_packet, PacketParams, WaveFunction};
    use num_complex::Complex64 as C64;

    #[test]
    fn disjoint_pair_is_zero() {
        let g = Grid::line(8.0, 8).unwrap();
        let a = WaveFunction::from_fn(g, |x| if x[0] < 0.0 { C64::new(1.0, 0.5) } else { C64::new(0.0, 0.0) });
        let b = WaveFunction::from_fn(g, |x| if x[0] >= 0.0 { C64::new(0.3, 0.0) } else { C64::new(0.0, 0.0) });
        let d = Decomposition::from_components(vec![a, b]).unwrap();
        let r = w_exact_pair(&d).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.mode, WMode::ExactPair);
        assert_eq!(w_given_partition(&d, &r.partition).unwrap().0, 0.0);
    }

    #[test]
    fn identical_profiles_give_one() {
        let g = Grid::line(80.0, 1024).unwrap();
        let a = gaussian_packet(&g, &PacketParams::line(0.0, 2.0, 2.0)).unwrap();
        let b = gaussian_packet(&g, &PacketParams::line(0.0, -2.0, 2.0)).unwrap();
        let d = Decomposition::from_components(vec![a, b]).unwrap();
        assert!((w_exact_pair(&d).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn block_count_mismatch() {
        let g = Grid::line(8.0, 8).unwrap();
        let psi = WaveFunction::from_fn(g, |x| C64::new(1.0 + x[0].abs(), 0.0));
        let d = decompose_by_partition(&psi, &Partition::split_axis0(g, 0.0)).unwrap();
        let err = w_given_partition(&d, &Partition::trivial(g)).unwrap_err();
        assert!(matches!(err, PsdError::BlockCountMismatch { blocks: 1, components: 2 }));
    }

    #[test]
    fn zero_budget_rejected() {
        let g = Grid::line(8.0, 8).unwrap();
        let psi = WaveFunction::from_fn(g, |_| C64::new(1.0, 0.0));
        let d = Decomposition::trivial(psi);
        let cfg = WConfig { budget: 0, ..WConfig::default() };
        assert!(w_optimize(&d, &cfg).is_err());
    }

    #[test]
    fn exact_three_way_split_recovered() {
        let g = Grid::line(90.0, 600).unwrap();
        let psi = [-25.0, 0.0, 25.0]
            .iter()
            .map(|&c| gaussian_packet(&g, &PacketParams::line(c, 0.0, 2.0)).unwrap())
            .reduce(|a, b| a.add(&b).unwrap())
            .unwrap();
        let part = Partition::from_fn(g, 3, |x| {
            if x[0] < -12.5 {
                0
            } else if x[0] < 12.5 {
                1
            } else {
                2
            }
        })
        .unwrap();
        let d = decompose_by_partition(&psi, &part).unwrap();
        let r = w_optimize(&d, &WConfig::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.mode, WMode::HeuristicUpperBound);
        assert_eq!(r.partition, part);
    }

    #[test]
    fn tentative_is_bounded_by_general() {
        let g = Grid::line(8.0, 8).unwrap();
        let comps: Vec<WaveFunction> = (0..3)
            .map(|k| WaveFunction::from_fn(g, |x| C64::new((x[0] * (k as f64 + 1.0)).cos() + 1.2, 0.1 * k as f64)))
            .collect();
        let d = Decomposition::from_components(comps).unwrap();
        let p = argmax_partition(&d).unwrap();
        assert!(w_tentative_given_partition(&d, &p).unwrap() <= w_given_partition(&d, &p).unwrap().0 + 1e-15);
    }
}
