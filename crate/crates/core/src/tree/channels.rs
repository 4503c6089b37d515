//! Channel detection: threshold the density, cluster super-threshold cells
//! by grid connectivity, merge clusters closer than a minimum gap, then
//! hand every remaining cell to the nearest cluster.

use crate::error::{PsdError, Result};
use crate::grid::{Grid, Partition};
use crate::wavefunction::WaveFunction;

/// Detects channels of `psi`. `theta` is the density threshold as a
/// fraction of the peak density; clusters whose nearest cell centers are
/// closer than `d_min` (length units) are merged.
pub fn detect_channels(psi: &WaveFunction, theta: f64, d_min: f64) -> Result<Partition> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(PsdError::InvalidArgument(format!("threshold fraction must lie in (0, 1), got {theta}")));
    }
    let grid = *psi.grid();
    let density = psi.density();
    let peak = density.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(PsdError::InvalidArgument("null state: no cell above threshold".into()));
    }
    let cut = theta * peak;
    let above: Vec<bool> = density.iter().map(|&p| p >= cut).collect();

    let (mut comp, count) = connected_components(&grid, &above);
    let boundaries = boundary_cells(&grid, &comp, count);

    // single-linkage merge of clusters closer than d_min
    let mut parent: Vec<usize> = (0..count).collect();
    for a in 0..count {
        for b in a + 1..count {
            if min_distance(&grid, &boundaries[a], &boundaries[b]) < d_min {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    // relabel merged groups in order of their first cell
    let mut group_id = vec![usize::MAX; count];
    let mut n_groups = 0;
    for c in comp.iter_mut().filter(|c| **c != usize::MAX) {
        let root = find(&mut parent, *c);
        if group_id[root] == usize::MAX {
            group_id[root] = n_groups;
            n_groups += 1;
        }
        *c = group_id[root];
    }
    let mut group_boundaries: Vec<Vec<usize>> = vec![Vec::new(); n_groups];
    for (k, b) in boundaries.into_iter().enumerate() {
        let g = group_id[find(&mut parent, k)];
        group_boundaries[g].extend(b);
    }

    // nearest-cluster assignment for sub-threshold cells
    let labels: Vec<usize> = (0..grid.len())
        .map(|idx| {
            if comp[idx] != usize::MAX {
                return comp[idx];
            }
            let p = grid.position(idx);
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (g, cells) in group_boundaries.iter().enumerate() {
                let d = cells.iter().map(|&c| dist2(p, grid.position(c))).fold(f64::INFINITY, f64::min);
                if d < best_d {
                    best_d = d;
                    best = g;
                }
            }
            best
        })
        .collect();
    Partition::new(grid, labels, n_groups)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn min_distance(grid: &Grid, a: &[usize], b: &[usize]) -> f64 {
    let mut best = f64::INFINITY;
    for &i in a {
        let p = grid.position(i);
        for &j in b {
            best = best.min(dist2(p, grid.position(j)));
        }
    }
    best.sqrt()
}

fn neighbors(grid: &Grid, idx: usize) -> impl Iterator<Item = usize> {
    let [n0, n1] = grid.shape();
    let (i0, i1) = grid.unravel(idx);
    let mut out = [usize::MAX; 4];
    if i0 > 0 {
        out[0] = idx - n1;
    }
    if i0 + 1 < n0 {
        out[1] = idx + n1;
    }
    if i1 > 0 {
        out[2] = idx - 1;
    }
    if i1 + 1 < n1 {
        out[3] = idx + 1;
    }
    out.into_iter().filter(|&n| n != usize::MAX)
}

/// 4-connected labeling of the marked cells, in order of first cell.
/// Unmarked cells get `usize::MAX`.
fn connected_components(grid: &Grid, marked: &[bool]) -> (Vec<usize>, usize) {
    let mut comp = vec![usize::MAX; marked.len()];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..marked.len() {
        if !marked[start] || comp[start] != usize::MAX {
            continue;
        }
        comp[start] = count;
        stack.push(start);
        while let Some(c) = stack.pop() {
            for nb in neighbors(grid, c) {
                if marked[nb] && comp[nb] == usize::MAX {
                    comp[nb] = count;
                    stack.push(nb);
                }
            }
        }
        count += 1;
    }
    (comp, count)
}

/// Cells of each component with at least one 4-neighbor outside it. The
/// nearest cell of a component to any outside point is one of these.
fn boundary_cells(grid: &Grid, comp: &[usize], count: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); count];
    for (idx, &c) in comp.iter().enumerate() {
        if c == usize::MAX {
            continue;
        }
        let interior = neighbors(grid, idx).count() == 2 * grid.dim() && neighbors(grid, idx).all(|nb| comp[nb] == c);
        if !interior {
            out[c].push(idx);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefunction::{gaussian_packet, PacketParams};
    use num_complex::Complex64 as C64;

    fn pair(sep_in_widths: f64) -> WaveFunction {
        let g = Grid::line(120.0, 1024).unwrap();
        let s = 2.0;
        let a = gaussian_packet(&g, &PacketParams::line(-0.5 * sep_in_widths * s, 0.0, s)).unwrap();
        let b = gaussian_packet(&g, &PacketParams::line(0.5 * sep_in_widths * s, 0.0, s)).unwrap();
        a.add(&b).unwrap()
    }

    #[test]
    fn single_packet_single_channel() {
        let g = Grid::line(120.0, 1024).unwrap();
        let psi = gaussian_packet(&g, &PacketParams::line(5.0, 1.0, 2.0)).unwrap();
        assert_eq!(detect_channels(&psi, 0.01, 1.0).unwrap().n_blocks(), 1);
    }

    #[test]
    fn well_separated_pair_gives_two_channels() {
        let psi = pair(10.0);
        let p = detect_channels(&psi, 0.01, 1.0).unwrap();
        assert_eq!(p.n_blocks(), 2);
        // the boundary sits between the packets
        let g = psi.grid();
        for (idx, &l) in p.labels().iter().enumerate() {
            let x = g.position(idx)[0];
            if x < -1.0 {
                assert_eq!(l, 0);
            } else if x > 1.0 {
                assert_eq!(l, 1);
            }
        }
    }

    #[test]
    fn close_pair_is_one_channel() {
        assert_eq!(detect_channels(&pair(1.0), 0.01, 1.0).unwrap().n_blocks(), 1);
    }

    #[test]
    fn merge_distance_joins_clusters() {
        assert_eq!(detect_channels(&pair(10.0), 0.01, 100.0).unwrap().n_blocks(), 1);
    }

    #[test]
    fn rejects_null_state_and_bad_threshold() {
        let g = Grid::line(10.0, 10).unwrap();
        let zero = WaveFunction::zeros(g);
        assert!(detect_channels(&zero, 0.1, 1.0).is_err());
        let one = WaveFunction::from_fn(g, |_| C64::new(1.0, 0.0));
        assert!(detect_channels(&one, 1.0, 1.0).is_err());
        assert!(detect_channels(&one, 0.0, 1.0).is_err());
    }

    #[test]
    fn transposed_grid_permutes_blocks() {
        let g = Grid::plane([40.0, 30.0], [48, 36]).unwrap();
        let gt = Grid::plane([30.0, 40.0], [36, 48]).unwrap();
        let bump = |c: [f64; 2], x: [f64; 2]| (-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) / 4.0).exp();
        let f = |x: [f64; 2]| C64::new(bump([-8.0, 5.0], x) + bump([9.0, -6.0], x) + 0.7 * bump([8.0, 8.0], x), 0.0);
        let psi = WaveFunction::from_fn(g, f);
        let psit = WaveFunction::from_fn(gt, |x| f([x[1], x[0]]));
        let p = detect_channels(&psi, 0.05, 1.0).unwrap();
        let pt = detect_channels(&psit, 0.05, 1.0).unwrap();
        assert_eq!(p.n_blocks(), 3);
        assert_eq!(pt.n_blocks(), 3);
        // same block structure up to a relabeling, away from exact distance
        // ties (those resolve by block id, which depends on axis order)
        let dens = psi.density();
        let peak = dens.iter().copied().fold(0.0, f64::max);
        let seeds: Vec<(usize, [f64; 2])> =
            (0..g.len()).filter(|&i| dens[i] >= 0.05 * peak).map(|i| (p.labels()[i], g.position(i))).collect();
        let tied = |idx: usize| {
            let x = g.position(idx);
            let mut best = [f64::INFINITY; 3];
            for &(l, s) in &seeds {
                best[l] = best[l].min(dist2(x, s));
            }
            best.sort_by(f64::total_cmp);
            best[1] - best[0] < 1e-9
        };
        let mut map = [usize::MAX; 3];
        for i0 in 0..48 {
            for i1 in 0..36 {
                if tied(g.index(i0, i1)) {
                    continue;
                }
                let a = p.labels()[g.index(i0, i1)];
                let b = pt.labels()[gt.index(i1, i0)];
                if map[a] == usize::MAX {
                    map[a] = b;
                }
                assert_eq!(map[a], b);
            }
        }
    }
}
