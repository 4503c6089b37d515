//! Configuration, deterministic execution and artifact emission for the
//! command line.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{PsdError, Result};
use crate::evolution::EvolutionEngine;
use crate::scenarios::{
    run_barrier_scattering, run_beam_splitter, run_double_slit_photon, run_ideal_model, run_measurement_toy,
    run_oscillator_superposition, BarrierSpec, BeamSplitterSpec, DoubleSlitSpec, IdealModelSpec, MeasurementSpec,
    OscillatorSuperpositionSpec, ScenarioResult, Settings,
};
use crate::tree::TreeParams;
use crate::wavefunction::{gaussian_packet, WaveFunction};

/// Largest number of points a sweep accepts.
pub const MAX_SWEEP_POINTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScenarioSpec {
    BarrierScattering(BarrierSpec),
    BeamSplitter(BeamSplitterSpec),
    MeasurementToy(MeasurementSpec),
    DoubleSlitPhoton(DoubleSlitSpec),
    OscillatorSuperposition(OscillatorSuperpositionSpec),
    IdealModel(IdealModelSpec),
}

impl ScenarioSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::BarrierScattering(_) => "barrier-scattering",
            Self::BeamSplitter(_) => "beam-splitter",
            Self::MeasurementToy(_) => "measurement-toy",
            Self::DoubleSlitPhoton(_) => "double-slit-photon",
            Self::OscillatorSuperposition(_) => "oscillator-superposition",
            Self::IdealModel(_) => "ideal-model",
        }
    }

    /// Replaces the scenario's end time.
    pub fn set_horizon(&mut self, h: f64) -> Result<()> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(PsdError::InvalidArgument(format!("horizon must be positive, got {h}")));
        }
        match self {
            Self::BarrierScattering(s) => s.horizon = h,
            Self::DoubleSlitPhoton(s) => s.horizon = h,
            Self::OscillatorSuperposition(s) => s.horizon = h,
            Self::BeamSplitter(s) => {
                let tail = h - s.split_time - s.reversal_time;
                if tail < 0.0 {
                    return Err(PsdError::InvalidArgument(format!(
                        "horizon {h} ends before the split ({}) plus reversal time ({})",
                        s.split_time, s.reversal_time
                    )));
                }
                s.tail = tail;
            }
            Self::IdealModel(s) => s.steps = (h / s.kappa_dt * (1.0 + 1e-12)).floor() as usize,
            Self::MeasurementToy(_) => {
                return Err(PsdError::InvalidArgument("the measurement toy has no horizon".into()));
            }
        }
        Ok(())
    }

    pub fn execute(&self, settings: &Settings) -> Result<ScenarioResult> {
        match self {
            Self::BarrierScattering(s) => run_barrier_scattering(s, settings),
            Self::BeamSplitter(s) => run_beam_splitter(s, settings),
            Self::MeasurementToy(s) => run_measurement_toy(s, settings),
            Self::DoubleSlitPhoton(s) => run_double_slit_photon(s, settings),
            Self::OscillatorSuperposition(s) => run_oscillator_superposition(s),
            Self::IdealModel(s) => run_ideal_model(s),
        }
    }

    /// Initial state, engine and tree parameters of the scenario's branching
    /// phase, for rebuilding and verifying its tree.
    pub fn tree_setup(&self, settings: &Settings) -> Result<(WaveFunction, EvolutionEngine, TreeParams)> {
        match self {
            Self::BarrierScattering(s) => {
                let engine = s.engine()?;
                let psi = gaussian_packet(engine.grid(), &s.packet())?;
                Ok((psi, engine, s.detector.tree_params(s.horizon, s.sample_dt, settings)))
            }
            Self::BeamSplitter(s) => {
                let (psi, engine) = s.phase_one()?;
                Ok((psi, engine, s.detector.tree_params(s.split_time, s.sample_dt, settings)))
            }
            other => Err(PsdError::InvalidArgument(format!("{} builds no branching tree", other.name()))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub epsilon_w: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { epsilon_w: Settings::default().epsilon_w }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct Emit {
    pub csv: bool,
    pub json: bool,
    /// Observables as a name,value CSV.
    pub plot_data: bool,
}

impl Default for Emit {
    fn default() -> Self {
        Self { csv: true, json: true, plot_data: false }
    }
}

/// Where the scenario comes from: a path (relative to the config file) or
/// an inline spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSource {
    Path(PathBuf),
    Inline(ScenarioSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSource,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub emit: Emit,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfigRest {
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    out: Option<PathBuf>,
    #[serde(default)]
    emit: Emit,
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub epsilon_w: Option<f64>,
    pub horizon: Option<f64>,
    pub out: Option<PathBuf>,
}

/// A config with every default materialized. This is what output files
/// embed and what their names hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedRun {
    pub scenario: ScenarioSpec,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub emit: Emit,
}

impl ResolvedRun {
    pub fn settings(&self) -> Settings {
        Settings { epsilon_w: self.tolerances.epsilon_w, seed: self.seed }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("resolved configs serialize")
    }

    /// First 12 hex digits of the SHA-256 of the compact JSON.
    pub fn hash(&self) -> String {
        short_hash(self.to_json().as_bytes())
    }

    pub fn stem(&self) -> String {
        format!("{}-{}", self.scenario.name(), self.hash())
    }
}

fn short_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))[..12].to_string()
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| PsdError::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Reads a run config. A file whose top level carries `kind` is taken as a
/// bare scenario spec with default run settings.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let value = read_json(path)?;
    let mut config = if value.get("kind").is_some() {
        RunConfig {
            scenario: ScenarioSource::Inline(serde_json::from_value(value)?),
            tolerances: Tolerances::default(),
            seed: 0,
            out: None,
            emit: Emit::default(),
        }
    } else {
        // parsed on its own so that errors inside the scenario keep their detail
        let mut value = value;
        let scenario = match value.as_object_mut().and_then(|o| o.remove("scenario")) {
            Some(serde_json::Value::String(p)) => ScenarioSource::Path(p.into()),
            Some(v) => ScenarioSource::Inline(serde_json::from_value(v)?),
            None => return Err(PsdError::InvalidArgument("config needs a `scenario` or a top-level `kind`".into())),
        };
        let rest: RunConfigRest = serde_json::from_value(value)?;
        RunConfig { scenario, tolerances: rest.tolerances, seed: rest.seed, out: rest.out, emit: rest.emit }
    };
    if let ScenarioSource::Path(p) = &config.scenario {
        let full = path.parent().map_or_else(|| p.clone(), |d| d.join(p));
        config.scenario = ScenarioSource::Inline(serde_json::from_value(read_json(&full)?)?);
    }
    Ok(config)
}

/// Applies overrides. Returns the resolved run and the output directory.
pub fn resolve(config: RunConfig, overrides: &Overrides) -> Result<(ResolvedRun, PathBuf)> {
    let ScenarioSource::Inline(mut scenario) = config.scenario else {
        return Err(PsdError::InvalidArgument("scenario path was not loaded".into()));
    };
    if let Some(h) = overrides.horizon {
        scenario.set_horizon(h)?;
    }
    let mut tolerances = config.tolerances;
    if let Some(e) = overrides.epsilon_w {
        tolerances.epsilon_w = e;
    }
    if !(tolerances.epsilon_w > 0.0 && tolerances.epsilon_w < 1.0) {
        return Err(PsdError::InvalidArgument(format!("epsilon_w must lie in (0, 1), got {}", tolerances.epsilon_w)));
    }
    let out = overrides.out.clone().or(config.out).unwrap_or_else(|| PathBuf::from("out"));
    let resolved = ResolvedRun { scenario, tolerances, seed: overrides.seed.unwrap_or(config.seed), emit: config.emit };
    Ok((resolved, out))
}

#[derive(Debug, Clone, Serialize)]
struct ResultFile<'a> {
    config: &'a ResolvedRun,
    passed: bool,
    result: &'a ScenarioResult,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub result: ScenarioResult,
    pub files: Vec<PathBuf>,
}

/// Runs the scenario and writes the requested artifacts into `out`.
pub fn run(resolved: &ResolvedRun, out: &Path) -> Result<RunOutcome> {
    let result = resolved.scenario.execute(&resolved.settings())?;
    let files = write_outputs(resolved, &result, out)?;
    Ok(RunOutcome { result, files })
}

pub fn write_outputs(resolved: &ResolvedRun, result: &ScenarioResult, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let stem = resolved.stem();
    let header = format!("# config={}\n", resolved.to_json());
    let mut files = Vec::new();
    if resolved.emit.csv {
        let path = out.join(format!("{stem}.csv"));
        let body = result.series.as_ref().map(|s| s.to_csv()).unwrap_or_default();
        fs::write(&path, format!("{header}{body}"))?;
        files.push(path);
    }
    if resolved.emit.json {
        let path = out.join(format!("{stem}.json"));
        let doc = ResultFile { config: resolved, passed: result.passed(), result };
        fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")?;
        files.push(path);
    }
    if resolved.emit.plot_data {
        let path = out.join(format!("{stem}-observables.csv"));
        let mut body = header.clone();
        body.push_str("name,value\n");
        for (k, v) in &result.observables {
            body.push_str(&format!("{k},{v}\n"));
        }
        fs::write(&path, body)?;
        files.push(path);
    }
    Ok(files)
}

/// Dotted paths into the resolved config, each with the values to try.
pub type SweepGrid = BTreeMap<String, Vec<Value>>;

#[derive(Debug, Clone, PartialEq)]
pub enum PointStatus {
    Pass,
    Fail,
    Error(String),
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub point: Vec<Value>,
    pub status: PointStatus,
    pub observables: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub parameters: Vec<String>,
    pub rows: Vec<SweepRow>,
    pub file: PathBuf,
}

impl SweepOutcome {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.status == PointStatus::Pass)
    }
}

pub fn load_grid(path: &Path) -> Result<SweepGrid> {
    Ok(serde_json::from_value(read_json(path)?)?)
}

fn compare_values(a: &Value, b: &Value) -> std::cmp::Ordering {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        _ => a.to_string().cmp(&b.to_string()),
    }
}

/// Grid points in lexicographic order: parameters sorted by path, values
/// sorted within each parameter, the first parameter varying slowest.
pub fn sweep_points(grid: &SweepGrid) -> Result<Vec<Vec<Value>>> {
    if grid.is_empty() || grid.values().any(|v| v.is_empty()) {
        return Err(PsdError::InvalidArgument("sweep grid is empty".into()));
    }
    let total = grid.values().try_fold(1usize, |acc, v| acc.checked_mul(v.len()));
    match total {
        Some(n) if n <= MAX_SWEEP_POINTS => {}
        _ => {
            return Err(PsdError::InvalidArgument(format!("sweep grid exceeds {MAX_SWEEP_POINTS} points")));
        }
    }
    let axes: Vec<Vec<Value>> = grid
        .values()
        .map(|v| {
            let mut v = v.clone();
            v.sort_by(compare_values);
            v
        })
        .collect();
    let mut points = vec![Vec::new()];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(v.clone());
                    q
                })
            })
            .collect();
    }
    Ok(points)
}

fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| PsdError::InvalidArgument(format!("sweep path {path} does not name a config field")))?;
        if i + 1 == parts.len() {
            if !obj.contains_key(*part) {
                return Err(PsdError::InvalidArgument(format!("sweep path {path} does not name a config field")));
            }
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .get_mut(*part)
            .ok_or_else(|| PsdError::InvalidArgument(format!("sweep path {path} does not name a config field")))?;
    }
    unreachable!("paths have at least one part")
}

/// Runs every grid point concurrently and writes one CSV row per point.
/// A failing point is marked in its row; only config problems in the grid
/// itself abort the sweep.
pub fn sweep(base: &ResolvedRun, grid: &SweepGrid, out: &Path) -> Result<SweepOutcome> {
    let points = sweep_points(grid)?;
    let parameters: Vec<String> = grid.keys().cloned().collect();
    let base_value = serde_json::to_value(base)?;
    // every path must exist in the resolved config
    for p in &parameters {
        set_path(&mut base_value.clone(), p, Value::Null)?;
    }
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|point| {
            let outcome = (|| -> Result<ScenarioResult> {
                let mut v = base_value.clone();
                for (p, x) in parameters.iter().zip(point) {
                    set_path(&mut v, p, x.clone())?;
                }
                let run: ResolvedRun = serde_json::from_value(v)?;
                run.scenario.execute(&run.settings())
            })();
            match outcome {
                Ok(r) => SweepRow {
                    point: point.clone(),
                    status: if r.passed() { PointStatus::Pass } else { PointStatus::Fail },
                    observables: r.observables,
                },
                Err(e) => SweepRow {
                    point: point.clone(),
                    status: PointStatus::Error(e.to_string()),
                    observables: BTreeMap::new(),
                },
            }
        })
        .collect();

    let names: BTreeSet<&String> = rows.iter().flat_map(|r| r.observables.keys()).collect();
    let grid_json = serde_json::to_string(grid)?;
    let mut body = format!("# config={}\n# grid={grid_json}\n", base.to_json());
    let mut header: Vec<String> = parameters.clone();
    header.push("status".into());
    header.extend(names.iter().map(|n| n.to_string()));
    body.push_str(&header.join(","));
    body.push('\n');
    for r in &rows {
        let mut cells: Vec<String> = r.point.iter().map(csv_value).collect();
        cells.push(match &r.status {
            PointStatus::Pass => "pass".into(),
            PointStatus::Fail => "fail".into(),
            PointStatus::Error(e) => format!("error: {}", e.replace([',', '\n', '"'], " ")),
        });
        cells.extend(names.iter().map(|n| r.observables.get(*n).map_or(String::new(), |v| v.to_string())));
        body.push_str(&cells.join(","));
        body.push('\n');
    }
    fs::create_dir_all(out)?;
    let file = out.join(format!(
        "sweep-{}-{}.csv",
        base.scenario.name(),
        short_hash(format!("{}{grid_json}", base.to_json()).as_bytes())
    ));
    fs::write(&file, body)?;
    Ok(SweepOutcome { parameters, rows, file })
}

fn csv_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.replace(',', ";"),
        other => other.to_string().replace(',', ";"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn points_are_lexicographic() {
        let mut g = SweepGrid::new();
        g.insert("b".into(), vec![json!(2), json!(1)]);
        g.insert("a".into(), vec![json!("y"), json!("x")]);
        let p = sweep_points(&g).unwrap();
        assert_eq!(
            p,
            vec![
                vec![json!("x"), json!(1)],
                vec![json!("x"), json!(2)],
                vec![json!("y"), json!(1)],
                vec![json!("y"), json!(2)]
            ]
        );
        assert!(sweep_points(&SweepGrid::new()).is_err());
        let mut big = SweepGrid::new();
        big.insert("a".into(), (0..101).map(|i| json!(i)).collect());
        big.insert("b".into(), (0..100).map(|i| json!(i)).collect());
        assert!(sweep_points(&big).is_err());
    }

    #[test]
    fn set_path_rejects_unknown_fields() {
        let mut v = json!({"scenario": {"kind": "ideal-model", "qubits": 3}});
        set_path(&mut v, "scenario.qubits", json!(4)).unwrap();
        assert_eq!(v["scenario"]["qubits"], json!(4));
        assert!(set_path(&mut v, "scenario.nope", json!(1)).is_err());
        assert!(set_path(&mut v, "scenario.qubits.x", json!(1)).is_err());
    }

    #[test]
    fn bare_specs_round_trip_with_defaults() {
        let spec: ScenarioSpec =
            serde_json::from_str(r#"{"kind": "barrier-scattering", "barrier_height": 2.0}"#).unwrap();
        let ScenarioSpec::BarrierScattering(b) = &spec else { panic!("wrong kind") };
        assert_eq!(b.barrier_height, 2.0);
        assert_eq!(b.cells, BarrierSpec::default().cells);
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.starts_with(r#"{"kind":"barrier-scattering""#));
        assert_eq!(serde_json::from_str::<ScenarioSpec>(&text).unwrap(), spec);
    }
}
