use boltzlab_cli::bench::{format_table, gain_timings};
use boltzlab_cli::{run_config, CliError, Config, Manifest, RunOptions, Scenario, ScenarioKind};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "boltzlab", version, about = "Deterministic numerical lab for the cutoff Boltzmann equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Top-level seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "boltzlab-out")]
    out: PathBuf,
    /// Extra grid refinements before the one-step refinement study.
    #[arg(long)]
    refine: Option<u32>,
    /// Samples per estimate.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario of a config.
    Run(Common),
    /// Run one estimate of the verification harness.
    Verify {
        /// convolution, strichartz, bilinear-noregularity, scaling-family or fractional-leibniz
        estimate: String,
        #[command(flatten)]
        common: Common,
    },
    /// Amplitude sweep of the gain-only iteration.
    Sweep {
        /// Ascending amplitudes; ignored when the config has sweep scenarios.
        #[arg(long, value_delimiter = ',', default_value = "0.001,0.01,0.1,1")]
        amplitudes: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Timing table of the direct and Fourier-side gain evaluators.
    Bench {
        #[arg(long, default_value_t = 16)]
        nv: usize,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn options(c: &Common) -> RunOptions {
    RunOptions { out: c.out.clone(), seed: c.seed, samples: c.samples, refine: c.refine }
}

fn load(c: &Common) -> Result<Config, CliError> {
    match &c.config {
        Some(p) => Ok(Config::load(p)?),
        None => Ok(Config { seed: 0, scenarios: Vec::new() }),
    }
}

fn bare(name: &str, kind: ScenarioKind) -> Scenario {
    let toml = format!("name = {name:?}\nkind = {:?}\n", serde_json::to_value(kind).unwrap().as_str().unwrap());
    toml::from_str(&toml).expect("minimal scenario")
}

fn finish(m: Manifest) -> Result<(), CliError> {
    for s in &m.scenarios {
        for c in &s.certificates {
            println!("{:<24} {:<40} {:>12.4e} {}", s.name, c.name, c.value, if c.pass { "ok" } else { "FAILED" });
        }
    }
    if m.pass {
        Ok(())
    } else {
        Err(CliError::Certificates(m.failed))
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run(c) => finish(run_config(&load(&c)?, &options(&c))?),
        Command::Verify { estimate, common } => {
            let mut cfg = load(&common)?;
            let mut sc = bare(&estimate, ScenarioKind::VerifyEstimate);
            sc.estimate = Some(estimate.clone());
            sc.validate().map_err(|m| boltzlab_cli::ConfigError::Schema { path: "<command line>".into(), line: 1, message: m })?;
            cfg.scenarios = vec![sc];
            finish(run_config(&cfg, &options(&common))?)
        }
        Command::Sweep { amplitudes, common } => {
            let mut cfg = load(&common)?;
            cfg.scenarios.retain(|s| s.kind == ScenarioKind::Sweep);
            if cfg.scenarios.is_empty() {
                let mut sc = bare("sweep", ScenarioKind::Sweep);
                sc.amplitudes = Some(amplitudes);
                sc.validate().map_err(|m| boltzlab_cli::ConfigError::Schema { path: "<command line>".into(), line: 1, message: m })?;
                cfg.scenarios.push(sc);
            }
            let m = run_config(&cfg, &options(&common))?;
            for s in &m.scenarios {
                println!("{}\n{}", s.name, serde_json::to_string_pretty(&s.summary).unwrap());
            }
            finish(m)
        }
        Command::Bench { nv, reps, common } => {
            let rows = gain_timings(nv, (8, 16), reps).map_err(|e| CliError::Lab { scenario: "bench".into(), source: e })?;
            print!("{}", format_table(&rows));
            std::fs::create_dir_all(&common.out).map_err(|e| CliError::Io { path: common.out.display().to_string(), source: e })?;
            let mut w = csv::Writer::from_path(common.out.join("bench.csv"))
                .map_err(|e| CliError::Io { path: "bench.csv".into(), source: e.into() })?;
            for r in &rows {
                w.serialize(r).map_err(|e| CliError::Io { path: "bench.csv".into(), source: e.into() })?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("boltzlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
