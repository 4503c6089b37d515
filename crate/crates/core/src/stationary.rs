//! Stationary scattering off a 1D potential that is constant on each grid
//! cell, by transfer matrices. Used as the reference for time-dependent
//! barrier runs.

use num_complex::Complex64 as C64;

use crate::error::{PsdError, Result};
use crate::grid::Grid;

/// Transmission probability at wave number k > 0 through `potential`
/// (one value per cell of width `dx`), zero potential on both sides.
pub fn transmission(potential: &[f64], dx: f64, mass: f64, k: f64) -> f64 {
    if !(k > 0.0) {
        return 0.0;
    }
    let first = potential.iter().position(|&v| v != 0.0);
    let last = potential.iter().rposition(|&v| v != 0.0);
    let (Some(first), Some(last)) = (first, last) else {
        return 1.0;
    };
    let energy = k * k / (2.0 * mass);
    // (ψ, ψ′) across each cell
    let one = C64::new(1.0, 0.0);
    let mut m = [[one, C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), one]];
    for &v in &potential[first..=last] {
        let q = (C64::new(2.0 * mass * (energy - v), 0.0)).sqrt();
        let qd = q * dx;
        let (c, s) = (qd.cos(), qd.sin());
        let s_over_q = if q.norm() < 1e-12 { C64::new(dx, 0.0) } else { s / q };
        let cell = [[c, s_over_q], [-q * s, c]];
        m = [
            [cell[0][0] * m[0][0] + cell[0][1] * m[1][0], cell[0][0] * m[0][1] + cell[0][1] * m[1][1]],
            [cell[1][0] * m[0][0] + cell[1][1] * m[1][0], cell[1][0] * m[0][1] + cell[1][1] * m[1][1]],
        ];
    }
    // left: 1 + r, ik(1 − r); right: τ, ikτ
    let ik = C64::new(0.0, k);
    let a = [one, -(m[0][0] - ik * m[0][1])];
    let b = [ik, -(m[1][0] - ik * m[1][1])];
    let (ra, rb) = (m[0][0] + ik * m[0][1], m[1][0] + ik * m[1][1]);
    let det = a[0] * b[1] - a[1] * b[0];
    let tau = (ra * b[1] - a[1] * rb) / det;
    tau.norm_sqr()
}

/// Transmission of a Gaussian packet with mean wave number `k0` and
/// position width `sigma` (momentum width 1/(2σ)), averaging the stationary
/// result over the packet's momentum distribution.
pub fn packet_transmission(grid: &Grid, potential: &[f64], mass: f64, k0: f64, sigma: f64) -> Result<f64> {
    if grid.dim() != 1 || potential.len() != grid.len() {
        return Err(PsdError::InvalidArgument("stationary transmission needs a 1D grid potential".into()));
    }
    if !(sigma > 0.0) {
        return Err(PsdError::InvalidArgument("packet width must be positive".into()));
    }
    let dx = grid.axis(0).spacing();
    let sk = 1.0 / (2.0 * sigma);
    let n = 4001;
    let (lo, hi) = (k0 - 8.0 * sk, k0 + 8.0 * sk);
    let h = (hi - lo) / (n - 1) as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        let k = lo + i as f64 * h;
        let w = (-(k - k0).powi(2) / (2.0 * sk * sk)).exp() * if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        num += w * transmission(potential, dx, mass, k);
        den += w;
    }
    Ok(num / den)
}

/// Bisects a height scale s in [0, s_max] so that the packet transmission
/// through s·shape hits `target`. Transmission must fall monotonically with s.
pub fn tune_height(grid: &Grid, shape: &[f64], mass: f64, k0: f64, sigma: f64, target: f64, s_max: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(PsdError::InvalidArgument(format!("target transmission must lie in (0, 1), got {target}")));
    }
    let t_of = |s: f64| -> Result<f64> {
        let v: Vec<f64> = shape.iter().map(|x| x * s).collect();
        packet_transmission(grid, &v, mass, k0, sigma)
    };
    let (mut lo, mut hi) = (0.0, s_max);
    if t_of(hi)? > target {
        return Err(PsdError::InvalidArgument("barrier cannot be made opaque enough within the height bound".into()));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if t_of(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Textbook rectangular barrier, E < V₀.
    fn rect_below(v0: f64, a: f64, m: f64, k: f64) -> f64 {
        let e = k * k / (2.0 * m);
        let kappa = (2.0 * m * (v0 - e)).sqrt();
        1.0 / (1.0 + v0 * v0 * (kappa * a).sinh().powi(2) / (4.0 * e * (v0 - e)))
    }

    /// E > V₀.
    fn rect_above(v0: f64, a: f64, m: f64, k: f64) -> f64 {
        let e = k * k / (2.0 * m);
        let q = (2.0 * m * (e - v0)).sqrt();
        1.0 / (1.0 + v0 * v0 * (q * a).sin().powi(2) / (4.0 * e * (e - v0)))
    }

    #[test]
    fn rectangular_barrier_closed_forms() {
        let dx = 0.01;
        let cells = 150;
        let v = vec![1.3; cells];
        let a = dx * cells as f64;
        for k in [0.4, 1.0, 1.5] {
            let t = transmission(&v, dx, 1.0, k);
            assert!((t - rect_below(1.3, a, 1.0, k)).abs() < 1e-10, "k = {k}");
        }
        for k in [1.7, 2.5] {
            let t = transmission(&v, dx, 1.0, k);
            assert!((t - rect_above(1.3, a, 1.0, k)).abs() < 1e-10, "k = {k}");
        }
    }

    #[test]
    fn free_space_transmits() {
        assert_eq!(transmission(&[0.0; 10], 0.1, 1.0, 1.0), 1.0);
        assert_eq!(transmission(&[1.0; 10], 0.1, 1.0, -1.0), 0.0);
    }

    #[test]
    fn well_conserves_flux_and_tuning_hits_target() {
        let g = Grid::line(100.0, 1000).unwrap();
        let shape: Vec<f64> = g.positions().map(|x| (-x[0] * x[0] / 0.5).exp()).collect();
        let s = tune_height(&g, &shape, 1.0, 1.5, 5.0, 0.5, 50.0).unwrap();
        let v: Vec<f64> = shape.iter().map(|x| x * s).collect();
        assert!((packet_transmission(&g, &v, 1.0, 1.5, 5.0).unwrap() - 0.5).abs() < 1e-9);
        let well: Vec<f64> = v.iter().map(|x| -x).collect();
        let t = transmission(&well, 0.1, 1.0, 1.5);
        assert!(t > 0.0 && t <= 1.0 + 1e-12);
    }
}
