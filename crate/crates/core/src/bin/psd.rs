use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;
use serde_json::json;

use psd_core::error::PsdError;
use psd_core::oscillator::{
    analytic_solution, coherent_overlap, coherent_state, completeness_check, lindblad_evolve, FockSpace,
    LindbladParams, OscillatorDensityMatrix,
};
use psd_core::runner::{self, Overrides, PointStatus};
use psd_core::scenarios::{run_ideal_model, IdealModelSpec, ScenarioResult};
use psd_core::tree::{build_tree, verify_tree};

#[derive(Parser)]
#[command(name = "psd", version, about = "Spatial decomposition, permanence and decoherence runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Run config or bare scenario spec (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's `out`, else ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Permanence tolerance ε_w.
    #[arg(long = "tol-w")]
    tol_w: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, epsilon_w: self.tol_w, horizon: self.horizon, out: self.out.clone() }
    }

    fn resolve(&self) -> Result<(runner::ResolvedRun, PathBuf), PsdError> {
        runner::resolve(runner::load_config(&self.config)?, &self.overrides())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its artifacts.
    Run {
        /// Same as --config.
        #[arg(conflicts_with = "config")]
        file: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "tol-w")]
        tol_w: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Run a scenario over a parameter grid and merge one CSV row per point.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// JSON object mapping dotted config paths to value lists.
        #[arg(long)]
        grid: PathBuf,
    },
    /// Rebuild a scenario's branching tree and check it.
    VerifyTree {
        #[command(flatten)]
        common: Common,
    },
    /// Oscillator and ideal-model utilities.
    #[command(subcommand)]
    Oscillator(OscillatorCommand),
}

#[derive(Subcommand)]
enum OscillatorCommand {
    /// Fock amplitudes of a coherent state.
    Coherent {
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        alpha: C64,
        #[arg(long, default_value_t = 40)]
        n_max: usize,
    },
    /// ⟨α|β⟩ in closed form and by Fock summation.
    Overlap {
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        alpha: C64,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        beta: C64,
        #[arg(long, default_value_t = 40)]
        n_max: usize,
    },
    /// Integrates ρ(0) = |α⟩⟨β| and compares with the closed form.
    Evolve {
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        alpha: C64,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        beta: C64,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long, default_value_t = 0.1)]
        gamma: f64,
        #[arg(long)]
        t: f64,
        /// Defaults to the largest allowed step.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 40)]
        n_max: usize,
        /// Write the final density matrix here (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ideal pointer/environment model against cos(κt)^K.
    Ideal {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 8)]
        qubits: usize,
        #[arg(long, default_value_t = 0.05)]
        kappa_dt: f64,
        #[arg(long, default_value_t = 40)]
        steps: usize,
    },
    /// Resolution of the identity from a sampled disk of coherent states.
    Completeness {
        #[arg(long, default_value_t = 40)]
        n_max: usize,
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
    },
}

fn parse_complex(s: &str) -> Result<C64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
    match parts.as_slice() {
        [re] => Ok(C64::new(num(re)?, 0.0)),
        [re, im] => Ok(C64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected `re` or `re,im`, got `{s}`")),
    }
}

fn exit_for(e: &PsdError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_config_error() { 2 } else { 3 })
}

fn report(result: &ScenarioResult) -> ExitCode {
    for v in &result.verdicts {
        println!("{}", v.summary());
    }
    for n in &result.notes {
        println!("note: {n}");
    }
    ExitCode::from(if result.passed() { 0 } else { 1 })
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => exit_for(&e),
    }
}

fn run(command: Command) -> Result<ExitCode, PsdError> {
    match command {
        Command::Run { file, config, out, seed, tol_w, horizon } => {
            let Some(config) = file.or(config) else {
                return Err(PsdError::InvalidArgument("run needs a config file".into()));
            };
            let common = Common { config, out, seed, tol_w, horizon };
            let (resolved, out) = common.resolve()?;
            let outcome = runner::run(&resolved, &out)?;
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            Ok(report(&outcome.result))
        }
        Command::Sweep { common, grid } => {
            let (resolved, out) = common.resolve()?;
            let grid = runner::load_grid(&grid)?;
            let outcome = runner::sweep(&resolved, &grid, &out)?;
            for row in &outcome.rows {
                let point: Vec<String> =
                    outcome.parameters.iter().zip(&row.point).map(|(p, v)| format!("{p}={v}")).collect();
                let status = match &row.status {
                    PointStatus::Pass => "PASS".to_string(),
                    PointStatus::Fail => "FAIL".to_string(),
                    PointStatus::Error(e) => format!("ERROR {e}"),
                };
                println!("{status} {}", point.join(" "));
            }
            println!("wrote {}", outcome.file.display());
            Ok(ExitCode::from(if outcome.all_passed() { 0 } else { 1 }))
        }
        Command::VerifyTree { common } => {
            let (resolved, out) = common.resolve()?;
            let settings = resolved.settings();
            let (psi, engine, params) = resolved.scenario.tree_setup(&settings)?;
            let tree = build_tree(&psi, &engine, &params)?;
            let verdict = verify_tree(&tree, &engine, settings.epsilon_w)?;
            std::fs::create_dir_all(&out)?;
            let path = out.join(format!("{}-tree.json", resolved.stem()));
            let doc = json!({ "config": resolved, "tree": tree.to_record(), "verdict": verdict });
            std::fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")?;
            println!("wrote {}", path.display());
            let mark = |ok: bool| if ok { "PASS" } else { "FAIL" };
            println!("{} tree_sum: {:.4e} <= 1e-8", mark(verdict.sum_ok), verdict.sum_residual);
            println!(
                "{} tree_refinement: {:.4e} <= {:e}",
                mark(verdict.refinement_ok),
                verdict.refinement_residual,
                verdict.epsilon_w
            );
            println!(
                "{} tree_w: {:.4e} <= {:e} (worst at t = {})",
                mark(verdict.w_ok),
                verdict.worst_w,
                verdict.epsilon_w,
                verdict.worst_w_time
            );
            println!("branch events: {:?}", tree.branch_events);
            Ok(ExitCode::from(if verdict.passed() { 0 } else { 1 }))
        }
        Command::Oscillator(cmd) => oscillator(cmd),
    }
}

fn oscillator(cmd: OscillatorCommand) -> Result<ExitCode, PsdError> {
    match cmd {
        OscillatorCommand::Coherent { alpha, n_max } => {
            let v = coherent_state(alpha, &FockSpace::new(n_max)?)?;
            let doc = json!({
                "alpha": [alpha.re, alpha.im],
                "re": v.iter().map(|z| z.re).collect::<Vec<_>>(),
                "im": v.iter().map(|z| z.im).collect::<Vec<_>>(),
                "norm_sqr": v.norm_squared(),
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        OscillatorCommand::Overlap { alpha, beta, n_max } => {
            let space = FockSpace::new(n_max)?;
            let closed = coherent_overlap(alpha, beta);
            let fock = coherent_state(alpha, &space)?.dotc(&coherent_state(beta, &space)?);
            println!("closed_form {} {}", closed.re, closed.im);
            println!("fock_sum {} {}", fock.re, fock.im);
            println!("difference {:e}", (closed - fock).norm());
        }
        OscillatorCommand::Evolve { alpha, beta, omega, gamma, t, dt, n_max, out } => {
            let space = FockSpace::new(n_max)?;
            let params = LindbladParams::new(omega, gamma)?;
            let rho0 =
                OscillatorDensityMatrix::outer(&coherent_state(alpha, &space)?, &coherent_state(beta, &space)?, 0.0);
            let run = lindblad_evolve(&rho0, &params, t, dt.unwrap_or(params.max_dt()))?;
            let exact = analytic_solution(alpha, beta, &params, t, &space)?;
            let f = params.coherence_factor(alpha, beta, t);
            println!("steps {} dt {:e}", run.steps, run.dt);
            println!("f {} {} |f| {}", f.re, f.im, f.norm());
            println!("max_entry_deviation {:e}", run.rho.max_entry_deviation(&exact));
            println!("trace_drift {:e}", run.trace_drift);
            if let Some(path) = out {
                std::fs::write(&path, serde_json::to_string_pretty(&run.rho.to_record())? + "\n")?;
                println!("wrote {}", path.display());
            }
        }
        OscillatorCommand::Ideal { dim, qubits, kappa_dt, steps } => {
            let spec = IdealModelSpec { system_dim: dim, qubits, kappa_dt, steps, ..Default::default() };
            return Ok(report(&run_ideal_model(&spec)?));
        }
        OscillatorCommand::Completeness { n_max, radius, samples } => {
            let rep = completeness_check(&FockSpace::new(n_max)?, radius, samples)?;
            println!("sector n <= {}", rep.sector_max);
            println!("max_deviation {:e}", rep.max_deviation);
            println!("max_off_diagonal {:e}", rep.max_off_diagonal);
        }
    }
    Ok(ExitCode::SUCCESS)
}
