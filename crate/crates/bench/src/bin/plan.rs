//! Runs planning strategies on instance files and reports the metrics.
//!
//! Exit status: 0 on success, 2 when an instance or catalog fails to parse,
//! 3 when any run timed out, 1 on any other error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use perceplan::format::{load_instance, LoadError};
use perceplan::{bundled, render_plan, Horizon, LoadedInstance, Strategy, Task};
use perceplan_bench::{emit_report, run_experiment, ReportFormat};

#[derive(Parser, Debug)]
#[command(name = "plan", version, about = "Compare perception/planning integration strategies")]
struct Args {
    /// Instance file; repeat for several. Defaults to the three bundled instances.
    #[arg(long = "instance", value_name = "FILE")]
    instances: Vec<PathBuf>,

    /// Shape catalog. Defaults to the bundled catalog.
    #[arg(long, value_name = "FILE")]
    catalog: Option<PathBuf>,

    /// Strategies to run: none, pre, filt, repl, or all.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    strategy: Vec<String>,

    /// Tasks: `first` or `count:<N>`.
    #[arg(long, value_delimiter = ',', default_value = "first")]
    task: Vec<Task>,

    /// Overrides the horizon given in the instance files.
    #[arg(long)]
    maxstep: Option<usize>,

    /// Time budget per run, in seconds.
    #[arg(long, default_value_t = 2000.0)]
    budget_secs: f64,

    /// Repetitions per cell.
    #[arg(long, default_value_t = 5)]
    runs: usize,

    #[arg(long, default_value = "table")]
    report: ReportFormat,

    /// Write the report here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Also print the feasible plans found by the first run of each cell.
    #[arg(long)]
    emit_plans: bool,
}

enum Failure {
    Parse(String),
    Other(String),
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))
}

fn strategies(names: &[String]) -> Result<Vec<Strategy>, Failure> {
    let mut out = Vec::new();
    for name in names {
        let chosen = if name == "all" {
            Strategy::ALL.to_vec()
        } else {
            vec![name.parse::<Strategy>().map_err(|e| Failure::Other(e.to_string()))?]
        };
        for s in chosen {
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn load(args: &Args) -> Result<Vec<(String, LoadedInstance)>, Failure> {
    let catalog = match &args.catalog {
        Some(path) => read(path)?,
        None => bundled::CATALOG.to_string(),
    };
    let sources: Vec<(String, String, String)> = if args.instances.is_empty() {
        bundled::INSTANCES
            .iter()
            .map(|(id, text)| (id.to_string(), format!("bundled instance {id}"), text.to_string()))
            .collect()
    } else {
        let mut v = Vec::new();
        for path in &args.instances {
            let id = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
            v.push((id, path.display().to_string(), read(path)?));
        }
        v
    };
    let mut out = Vec::new();
    for (id, origin, text) in sources {
        let mut instance = load_instance(&text, &catalog).map_err(|e| match e {
            LoadError::Instance(_) => Failure::Parse(format!("{origin}: {e}")),
            LoadError::Catalog(_) => Failure::Parse(format!("catalog: {e}")),
            LoadError::Invalid(_) => Failure::Other(format!("{origin}: {e}")),
        })?;
        if let Some(n) = args.maxstep {
            instance = instance.with_horizon(Horizon::new(n).map_err(|e| Failure::Other(e.to_string()))?);
        }
        out.push((id, instance));
    }
    Ok(out)
}

fn run(args: Args) -> Result<bool, Failure> {
    if !(args.budget_secs.is_finite() && args.budget_secs >= 0.0) {
        return Err(Failure::Other(format!("invalid budget {}", args.budget_secs)));
    }
    let budget = Duration::from_secs_f64(args.budget_secs);
    let strategies = strategies(&args.strategy)?;
    let instances = load(&args)?;

    let mut rows = Vec::new();
    let mut failed = 0;
    for (id, instance) in &instances {
        for &task in &args.task {
            for &s in &strategies {
                match run_experiment(instance, id, s, task, budget, args.runs) {
                    Ok(m) => rows.push(m),
                    Err(e) => {
                        eprintln!("plan: instance {id} {s} {task}: {e}");
                        failed += 1;
                    }
                }
            }
        }
    }

    let mut report = emit_report(&rows, args.report);
    match &args.out {
        Some(path) => fs::write(path, &report).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))?,
        None => {
            if args.emit_plans {
                report.push('\n');
            }
            print!("{report}");
        }
    }
    if args.emit_plans {
        for m in &rows {
            for (i, plan) in m.plans.iter().enumerate() {
                println!("# instance {} {} {} plan {}", m.instance, m.strategy, m.task, i + 1);
                print!("{}", render_plan(plan));
            }
        }
    }
    if failed > 0 {
        return Err(Failure::Other(format!("{failed} cells failed")));
    }
    Ok(rows.iter().any(|m| m.timed_out()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PLAN_LOG", "warn")).init();
    match run(Args::parse()) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("plan: some runs exceeded the time budget");
            ExitCode::from(3)
        }
        Err(Failure::Parse(msg)) => {
            eprintln!("plan: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("plan: {msg}");
            ExitCode::from(1)
        }
    }
}
