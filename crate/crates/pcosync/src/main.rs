use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pcosync::config::{ScenarioConfig, SweepConfig, SweepOptions};
use pcosync::output::{write_run, Conditions};
use pcosync::sweep::{run_one, run_sweep, RunError};
use serde_json::{json, Value};

// plain `println!` panics when the reader goes away, e.g. under `| head`
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

const USAGE: u8 = 1;
const VALIDATION: u8 = 2;
const RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "pcosync",
    version,
    about = "Pulse-coupled oscillator synchronization under Byzantine attacks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Check the synchronization conditions for a scenario.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Run one scenario and write its traces.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        /// Horizon in ticks.
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run many seeded copies of a scenario and aggregate them.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// First seed; run k uses seed + k.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        runs: Option<u64>,
        /// Worker threads; 0 uses every core.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print the adjacency and degrees of a scenario's network.
    Topology {
        #[command(flatten)]
        common: Common,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl ToString) -> Failure {
    Failure {
        code,
        message: message.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(path: &Path) -> Result<ScenarioConfig, Failure> {
    let config = ScenarioConfig::load(path).map_err(|e| fail(USAGE, e))?;
    // surfaces inconsistent settings before any work starts
    config.prepare(config.seed).map_err(|e| fail(USAGE, e))?;
    Ok(config)
}

fn run_failure(e: RunError) -> Failure {
    match e {
        RunError::Config(c) => fail(USAGE, c),
        RunError::Sim(s) => fail(RUNTIME, s),
    }
}

fn print_pairs(format: Format, pairs: &[(&str, Value)]) {
    match format {
        Format::Json => {
            let map: serde_json::Map<String, Value> = pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
            out!("{}", serde_json::to_string_pretty(&Value::Object(map)).expect("json"));
        }
        Format::Csv => {
            out!("key,value");
            for (k, v) in pairs {
                match v {
                    Value::String(s) => out!("{k},{s}"),
                    other => out!("{k},{other}"),
                }
            }
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate { common } => validate(&common),
        Command::Run {
            common,
            seed,
            horizon,
            out_dir,
        } => run(&common, seed, horizon, out_dir),
        Command::Sweep {
            common,
            seed,
            horizon,
            out_dir,
            runs,
            workers,
        } => sweep(&common, seed, horizon, out_dir, runs, workers),
        Command::Topology { common } => topology(&common),
    }
}

fn validate(common: &Common) -> Result<(), Failure> {
    let config = load(&common.config)?;
    let Some(report) = config.conditions().map_err(|e| fail(USAGE, e))? else {
        print_pairs(
            common.format,
            &[
                ("mechanism", json!("conventional")),
                (
                    "note",
                    json!("no synchronization conditions apply to the conventional mechanism"),
                ),
            ],
        );
        return Ok(());
    };
    let c = Conditions::from(&report);
    let bound_name = if c.mechanism == "mechanism1" {
        "floor_2n_3"
    } else {
        "floor_3n_4"
    };
    print_pairs(
        common.format,
        &[
            ("mechanism", json!(c.mechanism)),
            ("n", json!(c.n)),
            ("degree", json!(c.d)),
            (bound_name, json!(c.degree_bound)),
            ("degree_ok", json!(c.degree_ok)),
            ("attackers", json!(c.m)),
            ("max_allowed_attackers", json!(c.max_allowed_attackers)),
            ("attacker_bound_ok", json!(c.attacker_bound_ok)),
            ("satisfied", json!(c.satisfied)),
        ],
    );
    if c.satisfied {
        Ok(())
    } else {
        Err(fail(
            VALIDATION,
            "synchronization conditions not met; synchronization not guaranteed (running is still permitted)",
        ))
    }
}

fn apply_horizon(config: &mut ScenarioConfig, horizon: Option<u64>) {
    if horizon.is_some() {
        config.horizon_ticks = horizon;
    }
}

fn run(common: &Common, seed: Option<u64>, horizon: Option<u64>, out_dir: Option<PathBuf>) -> Result<(), Failure> {
    let mut config = load(&common.config)?;
    apply_horizon(&mut config, horizon);
    let seed = seed.unwrap_or(config.seed);
    let dir = out_dir.unwrap_or_else(|| PathBuf::from(&config.output.dir));
    let (prepared, output) = run_one(&config, seed).map_err(run_failure)?;
    if let Some(report) = &prepared.conditions {
        if !report.is_satisfied() {
            eprintln!("warning: synchronization conditions not met; synchronization not guaranteed");
        }
    }
    let summary = write_run(&dir, &prepared, &output, config.output.events, config.output.phases)
        .map_err(|e| fail(RUNTIME, format!("writing {}: {e}", dir.display())))?;
    print_pairs(
        common.format,
        &[
            ("seed", json!(summary.seed)),
            ("sync_tick", json!(summary.sync_tick)),
            ("final_arc_rad", json!(summary.final_arc_rad)),
            ("out_dir", json!(dir.display().to_string())),
        ],
    );
    Ok(())
}

fn sweep(
    common: &Common,
    seed: Option<u64>,
    horizon: Option<u64>,
    out_dir: Option<PathBuf>,
    runs: Option<u64>,
    workers: Option<usize>,
) -> Result<(), Failure> {
    let mut config = load(&common.config)?;
    apply_horizon(&mut config, horizon);
    let opts = config.sweep.get_or_insert(SweepOptions {
        runs: 1,
        seed_base: None,
        workers: 0,
        per_run: false,
    });
    if let Some(r) = runs {
        opts.runs = r;
    }
    if let Some(w) = workers {
        opts.workers = w;
    }
    if seed.is_some() {
        opts.seed_base = seed;
    }
    let dir = out_dir.unwrap_or_else(|| PathBuf::from(&config.output.dir));
    let cfg = SweepConfig::from_scenario(config).map_err(|e| fail(USAGE, e))?;
    let result = run_sweep(&cfg).map_err(|e| {
        let code = run_failure(e.source).code;
        fail(code, format!("run with seed {} failed", e.seed))
    })?;
    let write = |name: &Path, body: String| {
        fs::write(name, body).map_err(|e| fail(RUNTIME, format!("writing {}: {e}", name.display())))
    };
    fs::create_dir_all(&dir).map_err(|e| fail(RUNTIME, format!("creating {}: {e}", dir.display())))?;
    write(&dir.join("aggregate.json"), result.aggregate.to_json())?;
    if cfg.per_run {
        let runs_dir = dir.join("runs");
        fs::create_dir_all(&runs_dir).map_err(|e| fail(RUNTIME, e))?;
        for s in &result.summaries {
            write(&runs_dir.join(format!("seed-{}.json", s.seed)), s.to_json())?;
        }
    }
    let a = &result.aggregate;
    print_pairs(
        common.format,
        &[
            ("runs", json!(a.runs)),
            ("synced", json!(a.synced)),
            ("synced_fraction", json!(a.synced_fraction)),
            ("sync_tick_max", json!(a.sync_tick.map(|s| s.max))),
            ("condition_violation", json!(a.condition_violation)),
            ("unsynced_seeds", json!(a.unsynced_seeds.len())),
            ("aggregate", json!(dir.join("aggregate.json").display().to_string())),
        ],
    );
    Ok(())
}

fn topology(common: &Common) -> Result<(), Failure> {
    let config = ScenarioConfig::load(&common.config).map_err(|e| fail(USAGE, e))?;
    let topo = config.topology.build().map_err(|e| fail(USAGE, e))?;
    match common.format {
        Format::Json => {
            let nodes: Vec<Value> = (0..topo.len())
                .map(|i| {
                    json!({
                        "id": i,
                        "in_degree": topo.in_degree(i),
                        "out_degree": topo.out_degree(i),
                        "degree": topo.degree(i),
                        "out_neighbors": topo.adjacency()[i],
                    })
                })
                .collect();
            let body = json!({
                "n": topo.len(),
                "network_degree": topo.network_degree(),
                "strongly_connected": topo.is_strongly_connected(),
                "nodes": nodes,
            });
            out!("{}", serde_json::to_string_pretty(&body).expect("json"));
        }
        Format::Csv => {
            out!("id,in_degree,out_degree,degree,out_neighbors");
            for i in 0..topo.len() {
                let neighbors: Vec<String> = topo.adjacency()[i].iter().map(|j| j.to_string()).collect();
                out!(
                    "{i},{},{},{},{}",
                    topo.in_degree(i),
                    topo.out_degree(i),
                    topo.degree(i),
                    neighbors.join(" ")
                );
            }
            eprintln!("n={} network_degree={}", topo.len(), topo.network_degree());
        }
    }
    Ok(())
}
