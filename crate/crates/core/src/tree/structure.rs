//! Branching trees: time-indexed decompositions {𝒟_t} with
//! (1) Σ𝒟₀ = ψ₀, (2) 𝒟_{t₂} ≼ U(t₂ − t₁)𝒟_{t₁}, (3) w(𝒟_t) ≈ 0.
//!
//! Between snapshots 𝒟_t is the last committed snapshot evolved forward,
//! so condition (3) is checked along the whole sampled trajectory.

use serde::{Deserialize, Serialize};

use super::channels::detect_channels;
use super::permanence::{evolve_decomposition, sampling};
use crate::decomposition::{decompose_by_partition, Decomposition};
use crate::error::{PsdError, Result};
use crate::evolution::EvolutionEngine;
use crate::finer::{is_finer, map_residual, FinerOutcome};
use crate::grid::Partition;
use crate::overlap::{w_optimize, WConfig};
use crate::wavefunction::WaveFunction;

/// Free parameters of tree extraction. None of these are fixed by theory;
/// they make the channel detector explicit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub horizon: f64,
    pub sample_dt: f64,
    /// Density threshold as a fraction of the peak.
    pub theta: f64,
    /// Clusters closer than this are one channel.
    pub d_min: f64,
    pub epsilon_w: f64,
    /// Consecutive samples a larger channel count must persist.
    pub confirmation: usize,
    /// Channels lighter than this (norm²) are folded into the heaviest one.
    pub mass_floor: f64,
    pub w: WConfig,
}

impl TreeParams {
    pub fn new(horizon: f64, sample_dt: f64) -> Self {
        Self {
            horizon,
            sample_dt,
            theta: 0.01,
            d_min: 1.0,
            epsilon_w: 0.05,
            confirmation: 3,
            mass_floor: 1e-3,
            w: WConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSnapshot {
    pub time: f64,
    pub decomposition: Decomposition,
    pub partition: Partition,
    pub w_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeSample {
    pub t: f64,
    pub channels: usize,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeStructure {
    pub snapshots: Vec<ChannelSnapshot>,
    /// `edges[k][j]`: component of snapshot k that component j of snapshot
    /// k + 1 refines.
    pub edges: Vec<Vec<usize>>,
    pub branch_events: Vec<f64>,
    pub series: Vec<TreeSample>,
    pub params: TreeParams,
    /// Committed snapshots later withdrawn because w exceeded ε_w.
    pub retractions: usize,
    /// The last snapshot evolved to the end of the sampled horizon; absent
    /// for hand-built trees.
    pub final_decomposition: Option<Decomposition>,
}

impl TreeStructure {
    /// A tree from given snapshots; edges are recomputed by
    /// [`verify_tree`] and are left empty here.
    pub fn from_snapshots(snapshots: Vec<ChannelSnapshot>, params: TreeParams) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(PsdError::InvalidArgument("a tree needs at least one snapshot".into()));
        }
        if snapshots.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(PsdError::InvalidArgument("snapshot times must increase strictly".into()));
        }
        let branch_events = snapshots
            .windows(2)
            .filter(|w| w[1].decomposition.len() > w[0].decomposition.len())
            .map(|w| w[1].time)
            .collect();
        Ok(Self {
            snapshots,
            edges: Vec::new(),
            branch_events,
            series: Vec::new(),
            params,
            retractions: 0,
            final_decomposition: None,
        })
    }

    pub fn to_record(&self) -> TreeRecord {
        TreeRecord {
            nodes: self
                .snapshots
                .iter()
                .map(|s| NodeRecord { time: s.time, norms_sqr: s.decomposition.norms_sqr(), w_value: s.w_value })
                .collect(),
            edges: self
                .edges
                .iter()
                .enumerate()
                .map(|(k, h)| EdgeRecord { from: k + 1, to: k, map: h.clone() })
                .collect(),
            branch_events: self.branch_events.clone(),
            retractions: self.retractions,
            params: self.params,
        }
    }

    /// `t,channels,w` time series.
    pub fn series_csv(&self) -> String {
        let mut out = String::from("t,channels,w\n");
        for s in &self.series {
            out.push_str(&format!("{},{},{}\n", s.t, s.channels, s.w));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub time: f64,
    pub norms_sqr: Vec<f64>,
    pub w_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub from: usize,
    pub to: usize,
    pub map: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeRecord {
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
    pub branch_events: Vec<f64>,
    pub retractions: usize,
    pub params: TreeParams,
}

/// Channels of `psi` with light channels folded into the heaviest one.
pub fn detect_massive_channels(psi: &WaveFunction, params: &TreeParams) -> Result<Partition> {
    let part = detect_channels(psi, params.theta, params.d_min)?;
    if part.n_blocks() == 1 {
        return Ok(part);
    }
    let vol = psi.grid().cell_volume();
    let mut mass = vec![0.0; part.n_blocks()];
    for (a, &l) in psi.amplitudes().iter().zip(part.labels()) {
        mass[l] += a.norm_sqr() * vol;
    }
    let total: f64 = mass.iter().sum();
    let heaviest = (0..mass.len()).fold(0, |b, i| if mass[i] > mass[b] { i } else { b });
    let labels =
        part.labels().iter().map(|&l| if mass[l] < params.mass_floor * total { heaviest } else { l }).collect();
    Ok(Partition::new(*psi.grid(), labels, part.n_blocks())?.canonical())
}

struct Candidate {
    time: f64,
    decomposition: Decomposition,
    partition: Partition,
    evolved: Decomposition,
    map: Vec<usize>,
    seen: usize,
    w_max: f64,
}

fn w_of(d: &Decomposition, config: &WConfig) -> Result<f64> {
    Ok(if d.len() == 1 { 0.0 } else { w_optimize(d, config)?.value })
}

/// Extracts a branching tree by sampling the evolution of `psi0`.
pub fn build_tree(psi0: &WaveFunction, engine: &EvolutionEngine, params: &TreeParams) -> Result<TreeStructure> {
    let norm = psi0.norm();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(PsdError::InvalidArgument(format!("initial state must be normalized, norm = {norm}")));
    }
    let (per, samples) = sampling(engine, params.horizon, params.sample_dt)?;
    let dt = engine.dt();
    let eps = params.epsilon_w;

    let mut psi = psi0.clone();
    let mut snapshots = vec![ChannelSnapshot {
        time: 0.0,
        decomposition: Decomposition::trivial(psi0.clone()),
        partition: Partition::trivial(*psi0.grid()),
        w_value: 0.0,
    }];
    // tracked[k]: snapshot k evolved to the current time
    let mut tracked = vec![snapshots[0].decomposition.clone()];
    let mut edges: Vec<Vec<usize>> = Vec::new();
    let mut pending: Option<Candidate> = None;
    let mut series = Vec::with_capacity(samples + 1);
    let mut retractions = 0;

    for s in 0..=samples {
        let t = (s * per) as f64 * dt;
        if s > 0 {
            psi = engine.evolve_steps(&psi, per)?;
            for d in tracked.iter_mut().skip(1) {
                *d = evolve_decomposition(d, engine, per)?;
            }
            tracked[0] = Decomposition::trivial(psi.clone());
            if let Some(c) = pending.as_mut() {
                c.evolved = evolve_decomposition(&c.evolved, engine, per)?;
            }
        }

        // condition (3) along the committed branch; withdraw snapshots that break it
        let mut w_top = w_of(tracked.last().unwrap(), &params.w)?;
        while w_top > eps && snapshots.len() > 1 {
            snapshots.pop();
            tracked.pop();
            edges.pop();
            retractions += 1;
            pending = None;
            w_top = w_of(tracked.last().unwrap(), &params.w)?;
        }

        let part = detect_massive_channels(&psi, params)?;
        let count = part.n_blocks();

        if let Some(mut c) = pending.take() {
            if count == c.decomposition.len() {
                c.seen += 1;
                c.w_max = c.w_max.max(w_of(&c.evolved, &params.w)?);
                if c.seen >= params.confirmation {
                    if c.w_max <= eps {
                        tracked.push(c.evolved);
                        edges.push(c.map);
                        snapshots.push(ChannelSnapshot {
                            time: c.time,
                            decomposition: c.decomposition,
                            partition: c.partition,
                            w_value: c.w_max,
                        });
                        w_top = c.w_max;
                    }
                } else {
                    pending = Some(c);
                }
            }
        }

        let last_count = snapshots.last().unwrap().decomposition.len();
        if pending.is_none() && count > last_count {
            let d = decompose_by_partition(&psi, &part)?;
            if let FinerOutcome::Finer(map) = is_finer(&d, tracked.last().unwrap(), eps)? {
                pending = Some(Candidate {
                    time: t,
                    evolved: d.clone(),
                    decomposition: d,
                    partition: part,
                    map,
                    seen: 1,
                    w_max: 0.0,
                });
            }
        }

        series.push(TreeSample { t, channels: snapshots.last().unwrap().decomposition.len(), w: w_top });
    }

    let branch_events = snapshots[1..].iter().map(|s| s.time).collect();
    Ok(TreeStructure {
        snapshots,
        edges,
        branch_events,
        series,
        params: *params,
        retractions,
        final_decomposition: tracked.pop(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeVerdict {
    /// ‖Σ𝒟₀ − ψ₀‖ / ‖ψ₀‖.
    pub sum_residual: f64,
    pub sum_ok: bool,
    /// Worst group residual over the checked refinement pairs
    /// (infinite when some pair admits no map).
    pub refinement_residual: f64,
    pub refinement_ok: bool,
    pub pairs_checked: Vec<(usize, usize)>,
    pub worst_w: f64,
    pub worst_w_time: f64,
    pub w_ok: bool,
    pub epsilon_w: f64,
}

impl TreeVerdict {
    pub fn passed(&self) -> bool {
        self.sum_ok && self.refinement_ok && self.w_ok
    }
}

fn refinement_residual(finer: &Decomposition, coarse: &Decomposition, tol: f64) -> Result<f64> {
    match is_finer(finer, coarse, tol) {
        Ok(FinerOutcome::Finer(h)) => Ok(map_residual(finer, coarse, &h)?.unwrap_or(f64::INFINITY)),
        Ok(_) | Err(PsdError::ParentMismatch { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Re-checks the three tree conditions by re-evolving the stored snapshots.
pub fn verify_tree(tree: &TreeStructure, engine: &EvolutionEngine, epsilon_w: f64) -> Result<TreeVerdict> {
    let p = &tree.params;
    let (per, samples) = sampling(engine, p.horizon, p.sample_dt)?;
    let dt = engine.dt();
    let snaps = &tree.snapshots;
    let step_of = |t: f64| (t / dt).round() as usize;
    let end_step = samples * per;

    let root = &snaps[0].decomposition;
    let psi0 = root.parent();
    let sum_residual = root.sum().sub(psi0)?.norm() / psi0.norm();

    let mut refinement = 0.0f64;
    let mut pairs = Vec::new();
    let mut worst_w = 0.0f64;
    let mut worst_w_time = snaps[0].time;
    for (k, snap) in snaps.iter().enumerate() {
        let start = step_of(snap.time);
        let stop = snaps.get(k + 1).map_or(end_step, |n| step_of(n.time));
        let mut current = snap.decomposition.clone();
        let mut step = start;
        loop {
            let w = w_of(&current, &p.w)?;
            if w > worst_w {
                worst_w = w;
                worst_w_time = step as f64 * dt;
            }
            if step >= stop {
                break;
            }
            let chunk = per.min(stop - step);
            current = evolve_decomposition(&current, engine, chunk)?;
            step += chunk;
        }
        if let Some(next) = snaps.get(k + 1) {
            refinement = refinement.max(refinement_residual(&next.decomposition, &current, epsilon_w)?);
            pairs.push((k + 1, k));
        }
    }
    // one non-adjacent spot check; transitivity covers the rest
    if snaps.len() >= 3 {
        let last = snaps.len() - 1;
        let steps = step_of(snaps[last].time) - step_of(snaps[0].time);
        let evolved = evolve_decomposition(&snaps[0].decomposition, engine, steps)?;
        refinement = refinement.max(refinement_residual(&snaps[last].decomposition, &evolved, epsilon_w)?);
        pairs.push((last, 0));
    }

    Ok(TreeVerdict {
        sum_residual,
        sum_ok: sum_residual <= 1e-8,
        refinement_residual: refinement,
        refinement_ok: refinement <= epsilon_w,
        pairs_checked: pairs,
        worst_w,
        worst_w_time,
        w_ok: worst_w <= epsilon_w,
        epsilon_w,
    })
}
