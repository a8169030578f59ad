use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Parser, Subcommand};

use anthracnose_cli::{output_dir, run_scenario, scenarios, CliError, ScenarioConfig, OUT_ENV};

#[derive(Parser)]
#[command(name = "anthracnose", version, about = "Within-host and spatial anthracnose control solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file or bundled scenario name.
    Run {
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate without running.
    Validate { config: String },
    /// Print bundled scenario names.
    ListScenarios,
    /// Print the TOML of a bundled scenario.
    Show { name: String },
    /// Run several scenarios in parallel, each into `<out>/<name>`.
    Batch {
        configs: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        threads: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn env_root() -> Option<PathBuf> {
    std::env::var_os(OUT_ENV).map(PathBuf::from)
}

fn load(arg: &str, seed: Option<u64>) -> Result<ScenarioConfig, CliError> {
    let mut cfg = scenarios::resolve(arg)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run_one(arg: &str, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), CliError> {
    let cfg = load(arg, seed)?;
    let dir = output_dir(out.as_deref(), &cfg, env_root().as_deref());
    let report = run_scenario(&cfg, &dir)?;
    println!(
        "{}: controlled {:.10e}, u0 {:.10e}, u1 {:.10e} -> {}",
        cfg.name,
        report.costs.controlled,
        report.costs.u0,
        report.costs.u1,
        dir.display()
    );
    Ok(())
}

fn batch(configs: &[String], out: Option<PathBuf>, threads: usize, seed: Option<u64>) -> Result<(), CliError> {
    let jobs: Vec<ScenarioConfig> = configs.iter().map(|c| load(c, seed)).collect::<Result<_, _>>()?;
    let root = out.or_else(env_root).unwrap_or_else(|| PathBuf::from("anthracnose-out"));
    let next = Mutex::new(0usize);
    let failures = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, jobs.len().max(1)) {
            s.spawn(|| loop {
                let i = {
                    let mut n = next.lock().expect("poisoned");
                    let i = *n;
                    *n += 1;
                    i
                };
                let Some(cfg) = jobs.get(i) else { break };
                let dir = root.join(&cfg.name);
                match run_scenario(cfg, &dir) {
                    Ok(_) => println!("{}: ok -> {}", cfg.name, dir.display()),
                    Err(e) => failures.lock().expect("poisoned").push((cfg.name.clone(), e)),
                }
            });
        }
    });
    let mut failures = failures.into_inner().expect("poisoned");
    failures.sort_by(|a, b| a.0.cmp(&b.0));
    for (name, e) in &failures {
        eprintln!("{name}: {e}");
    }
    match failures.into_iter().next() {
        Some((_, e)) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, seed } => run_one(&config, out, seed),
        Command::Validate { config } => load(&config, None).and_then(|c| {
            c.prepare()?;
            println!("{}: valid ({:?})", c.name, c.mode);
            Ok(())
        }),
        Command::ListScenarios => {
            for (name, _) in scenarios::BUNDLED {
                println!("{name}");
            }
            Ok(())
        }
        Command::Show { name } => match scenarios::source(&name) {
            Some(text) => {
                print!("{text}");
                Ok(())
            }
            None => Err(CliError::Config(format!("no bundled scenario named `{name}`"))),
        },
        Command::Batch {
            configs,
            out,
            threads,
            seed,
        } => batch(&configs, out, threads, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
