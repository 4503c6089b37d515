//! Randomized invariants of the core operations.

use approx::assert_relative_eq;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

use psd_core::grid::{Grid, Partition};
use psd_core::oscillator::{coherent_overlap, coherent_state, FockSpace, LindbladParams};
use psd_core::overlap::{w_exact_pair, w_given_partition, w_optimize, WConfig, WMode};
use psd_core::{
    decompose_by_partition, gaussian_packet, inner, is_finer, Decomposition, EvolutionEngine, FinerOutcome,
    PacketParams, WaveFunction,
};

fn small_wave(len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len)
}

fn wave(grid: &Grid, parts: &[(f64, f64)]) -> WaveFunction {
    WaveFunction::new(*grid, parts.iter().map(|&(re, im)| C64::new(re, im)).collect()).unwrap()
}

fn nonzero(v: &[(f64, f64)]) -> bool {
    v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3
}

/// w over every two-block partition of the cells.
fn brute_pair(d: &Decomposition) -> f64 {
    let grid = *d.grid();
    let n = grid.len();
    (0u32..1 << n)
        .map(|mask| {
            let labels = (0..n).map(|i| (mask >> i & 1) as usize).collect();
            let part = Partition::new(grid, labels, 2).unwrap();
            w_given_partition(d, &part).unwrap().0
        })
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evolution_preserves_norm(center in -5.0..5.0f64, k in -2.0..2.0f64, width in 0.8..3.0f64, steps in 1usize..80) {
        let grid = Grid::line(64.0, 256).unwrap();
        let psi = gaussian_packet(&grid, &PacketParams::line(center, k, width)).unwrap();
        let engine = EvolutionEngine::from_potential_fn(grid, 1.0, 0.05, |x| 0.05 * x[0] * x[0]).unwrap();
        let out = engine.evolve_steps(&psi, steps).unwrap();
        assert_relative_eq!(out.norm_sqr(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn evolution_preserves_inner_products(a in small_wave(32), b in small_wave(32), steps in 1usize..20) {
        let grid = Grid::line(16.0, 32).unwrap();
        let engine = EvolutionEngine::free(grid, 1.0, 0.1).unwrap();
        let (u, v) = (wave(&grid, &a), wave(&grid, &b));
        let before = inner(&u, &v).unwrap();
        let after = inner(&engine.evolve_steps(&u, steps).unwrap(), &engine.evolve_steps(&v, steps).unwrap()).unwrap();
        prop_assert!((before - after).norm() <= 1e-10 * (1.0 + before.norm()));
    }

    #[test]
    fn pair_w_is_bounded_symmetric_and_exact(a in small_wave(8), b in small_wave(8)) {
        prop_assume!(nonzero(&a) && nonzero(&b));
        let grid = Grid::line(8.0, 8).unwrap();
        let (u, v) = (wave(&grid, &a), wave(&grid, &b));
        let w = w_exact_pair(&Decomposition::from_components(vec![u.clone(), v.clone()]).unwrap()).unwrap();
        let swapped = w_exact_pair(&Decomposition::from_components(vec![v, u]).unwrap()).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&w.value));
        prop_assert!((w.value - swapped.value).abs() <= 1e-12);
        prop_assert!((w.value - brute_pair(&Decomposition::from_components(
            vec![wave(&grid, &a), wave(&grid, &b)]).unwrap())).abs() <= 1e-10);
        prop_assert_eq!(w.mode, WMode::ExactPair);
    }

    #[test]
    fn disjoint_supports_give_zero_w(a in small_wave(8), cut in 1usize..7) {
        prop_assume!(nonzero(&a[..cut]) && nonzero(&a[cut..]));
        let grid = Grid::line(8.0, 8).unwrap();
        let mut left = a.clone();
        let mut right = a.clone();
        left[cut..].iter_mut().for_each(|z| *z = (0.0, 0.0));
        right[..cut].iter_mut().for_each(|z| *z = (0.0, 0.0));
        prop_assume!(nonzero(&left) && nonzero(&right));
        let d = Decomposition::from_components(vec![wave(&grid, &left), wave(&grid, &right)]).unwrap();
        prop_assert!(w_optimize(&d, &WConfig::default()).unwrap().value <= 1e-12);
    }

    #[test]
    fn partition_decomposition_sums_to_parent(a in small_wave(16), labels in prop::collection::vec(0usize..3, 16)) {
        let grid = Grid::line(16.0, 16).unwrap();
        let psi = wave(&grid, &a);
        let part = Partition::new(grid, labels, 3).unwrap();
        let d = decompose_by_partition(&psi, &part).unwrap();
        prop_assert!(d.sum().sub(&psi).unwrap().norm() <= 1e-14);
        prop_assert!(w_given_partition(&d, &part).unwrap().0 <= 1e-12);
    }

    #[test]
    fn refinement_is_reflexive(a in small_wave(8), b in small_wave(8), c in small_wave(8)) {
        prop_assume!(nonzero(&a) && nonzero(&b) && nonzero(&c));
        let grid = Grid::line(8.0, 8).unwrap();
        let d = Decomposition::from_components(vec![wave(&grid, &a), wave(&grid, &b), wave(&grid, &c)]).unwrap();
        match is_finer(&d, &d, 1e-8).unwrap() {
            FinerOutcome::Finer(h) => prop_assert_eq!(h, vec![0, 1, 2]),
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn coherent_overlap_modulus(ar in -2.0..2.0f64, ai in -2.0..2.0f64, br in -2.0..2.0f64, bi in -2.0..2.0f64) {
        let (alpha, beta) = (C64::new(ar, ai), C64::new(br, bi));
        let ov = coherent_overlap(alpha, beta);
        assert_relative_eq!(ov.norm_sqr(), (-(alpha - beta).norm_sqr()).exp(), max_relative = 1e-12);
        let space = FockSpace::new(60).unwrap();
        let fock = coherent_state(alpha, &space).unwrap().dotc(&coherent_state(beta, &space).unwrap());
        prop_assert!((fock - ov).norm() <= 1e-10);
    }

    #[test]
    fn coherence_factor_never_grows(ar in -2.0..2.0f64, br in -2.0..2.0f64, gamma in 0.01..1.0f64, t1 in 0.0..5.0f64, dt in 0.0..5.0f64) {
        let params = LindbladParams::new(1.0, gamma).unwrap();
        let (alpha, beta) = (C64::new(ar, 0.0), C64::new(br, 0.0));
        let f1 = params.coherence_factor(alpha, beta, t1).norm();
        let f2 = params.coherence_factor(alpha, beta, t1 + dt).norm();
        prop_assert!(f1 <= 1.0 + 1e-12);
        prop_assert!(f2 <= f1 + 1e-12);
    }

    #[test]
    fn wave_bytes_round_trip(a in small_wave(12)) {
        let grid = Grid::line(6.0, 12).unwrap();
        let psi = wave(&grid, &a);
        prop_assert_eq!(WaveFunction::from_bytes(&psi.to_bytes()).unwrap(), psi);
    }
}
