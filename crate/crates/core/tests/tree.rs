//! Permanence and branching-tree checks on one-dimensional packets.

use num_complex::Complex64 as C64;

use psd_core::grid::{Grid, Partition};
use psd_core::overlap::WConfig;
use psd_core::tree::{check_psd_partition, verify_tree, w_plus, ChannelSnapshot, TreeParams, TreeStructure};
use psd_core::{gaussian_packet, Decomposition, EvolutionEngine, PacketParams, WaveFunction};

const EPS: f64 = 0.05;

fn line() -> Grid {
    Grid::line(160.0, 1024).unwrap()
}

fn engine() -> EvolutionEngine {
    EvolutionEngine::free(line(), 1.0, 0.05).unwrap()
}

fn packet(center: f64, momentum: f64) -> WaveFunction {
    gaussian_packet(&line(), &PacketParams::line(center, momentum, 1.0))
        .unwrap()
        .scaled(C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0))
}

fn pair(k: f64) -> Decomposition {
    Decomposition::from_components(vec![packet(-15.0, k), packet(15.0, -k)]).unwrap()
}

#[test]
fn receding_packets_are_permanent() {
    let rep = w_plus(&pair(-2.0), &engine(), 10.0, 0.5, &WConfig::default()).unwrap();
    assert!(rep.w_plus <= 1e-4, "w+ = {}", rep.w_plus);
    assert_eq!(rep.sample_times.len(), rep.w_values.len());
}

#[test]
fn colliding_packets_are_not_permanent() {
    let rep = w_plus(&pair(2.0), &engine(), 10.0, 0.5, &WConfig::default()).unwrap();
    assert!(rep.w_values[0] <= 1e-6);
    assert!(rep.w_plus >= 0.5, "w+ = {}", rep.w_plus);
    assert!((rep.worst_time - 7.5).abs() <= 1.0, "worst at {}", rep.worst_time);
}

#[test]
fn bisected_packet_is_not_a_permanent_decomposition() {
    let psi = packet(0.0, 1.0).normalized().unwrap();
    let part = Partition::split_axis0(line(), 0.0);
    let rep = check_psd_partition(&part, &psi, &engine(), 6.0, 0.5, EPS, &WConfig::default()).unwrap();
    assert!(rep.residuals[0] <= 1e-12);
    assert!(!rep.passed, "worst residual {}", rep.worst_residual);
}

#[test]
fn separated_halves_pass_the_partition_check() {
    let psi = pair(-2.0).sum();
    let part = Partition::split_axis0(line(), 0.0);
    let rep = check_psd_partition(&part, &psi, &engine(), 6.0, 0.5, EPS, &WConfig::default()).unwrap();
    assert!(rep.passed, "worst residual {}", rep.worst_residual);
}

fn snapshot(time: f64, d: Decomposition) -> ChannelSnapshot {
    let n = d.len();
    let grid = *d.grid();
    let partition = if n == 1 { Partition::trivial(grid) } else { Partition::split_axis0(grid, 0.0) };
    ChannelSnapshot { time, decomposition: d, partition, w_value: 0.0 }
}

#[test]
fn single_node_tree_passes() {
    let psi = packet(0.0, 0.0).normalized().unwrap();
    let tree =
        TreeStructure::from_snapshots(vec![snapshot(0.0, Decomposition::trivial(psi))], TreeParams::new(4.0, 0.5))
            .unwrap();
    let verdict = verify_tree(&tree, &engine(), EPS).unwrap();
    assert!(verdict.passed(), "{verdict:?}");
    assert!(verdict.pairs_checked.is_empty());
}

#[test]
fn branching_tree_passes() {
    let d = pair(-2.0);
    let psi = d.sum();
    let e = engine();
    let later = d.map(|c| e.evolve_steps(c, 20)).unwrap();
    let tree = TreeStructure::from_snapshots(
        vec![snapshot(0.0, Decomposition::trivial(psi)), snapshot(1.0, later)],
        TreeParams::new(4.0, 0.5),
    )
    .unwrap();
    let verdict = verify_tree(&tree, &e, EPS).unwrap();
    assert!(verdict.passed(), "{verdict:?}");
    assert_eq!(tree.branch_events, vec![1.0]);
}

#[test]
fn merged_tree_fails_refinement() {
    let d = pair(-2.0);
    let e = engine();
    let later = e.evolve_steps(&d.sum(), 20).unwrap();
    let tree = TreeStructure::from_snapshots(
        vec![snapshot(0.0, d), snapshot(1.0, Decomposition::trivial(later))],
        TreeParams::new(4.0, 0.5),
    )
    .unwrap();
    let verdict = verify_tree(&tree, &e, EPS).unwrap();
    assert!(verdict.sum_ok && verdict.w_ok);
    assert!(!verdict.refinement_ok, "{verdict:?}");
    assert!(!verdict.passed());
}

#[test]
fn wrong_root_fails_the_sum_condition() {
    let d = pair(-2.0);
    let psi = d.sum();
    let root = Decomposition::new(vec![d.components()[0].clone()], psi).unwrap();
    let tree = TreeStructure::from_snapshots(vec![snapshot(0.0, root)], TreeParams::new(2.0, 0.5)).unwrap();
    let verdict = verify_tree(&tree, &engine(), EPS).unwrap();
    assert!(!verdict.sum_ok);
}

#[test]
fn snapshot_times_must_increase() {
    let psi = packet(0.0, 0.0);
    let s = || snapshot(1.0, Decomposition::trivial(psi.clone()));
    assert!(TreeStructure::from_snapshots(vec![s(), s()], TreeParams::new(2.0, 0.5)).is_err());
    assert!(TreeStructure::from_snapshots(vec![], TreeParams::new(2.0, 0.5)).is_err());
}
