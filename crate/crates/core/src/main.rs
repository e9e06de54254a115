use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use paracoh::harness::{self, io, ExperimentConfig, Report};
use paracoh::{Error, Result};

#[derive(Parser)]
#[command(name = "paracoh", version, about = "Coboundary solvers for products of horocycle actions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config; the built-in default grid when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for report.json, sweep.csv and generated inputs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long = "k-per-axis", global = true)]
    k_per_axis: Option<usize>,
    /// Comma-separated Sobolev orders, e.g. "1,2".
    #[arg(long, global = true)]
    t: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Invariance, unitarity, duality, projection inequalities and d∘d = 0.
    VerifyInvariants,
    /// Top-degree coboundary equation per component.
    SolveTop {
        /// Tensor file written by `gen`; random kernel inputs otherwise.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Primitives of closed leafwise forms.
    SolveForm {
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Distribution-sum, φ and regularity sweeps.
    SweepBounds,
    /// Write random inputs, one file per component.
    Gen {
        /// Generate closed forms of this degree instead of kernel tensors.
        #[arg(long)]
        degree: Option<usize>,
    },
}

fn parse_t_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad Sobolev order {v:?}"))))
        .collect()
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default_grid(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(k) = cli.k_per_axis {
        cfg.k_per_axis = k;
    }
    if let Some(t) = &cli.t {
        cfg.t_list = parse_t_list(t)?;
    }
    if let Some(o) = &cli.out {
        cfg.output = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Report> {
    harness::init_threads()?;
    let mut cfg = load_config(cli)?;
    let out = cfg.output.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out)?;
    let report = match &cli.command {
        Command::VerifyInvariants => harness::cmd_verify_invariants(&cfg)?,
        Command::SolveTop { input } => {
            let f = input.as_deref().map(|p| io::load_tensor(p, cfg.eps0, cfg.nu0)).transpose()?;
            harness::cmd_solve_top(&cfg, f.as_ref())?
        }
        Command::SolveForm { degree, input } => {
            let w = input.as_deref().map(|p| io::load_form(p, cfg.eps0, cfg.nu0)).transpose()?;
            harness::cmd_solve_form(&cfg, *degree, w.as_ref())?
        }
        Command::SweepBounds => harness::cmd_sweep_bounds(&cfg)?,
        Command::Gen { degree } => {
            if degree.is_some() {
                cfg.form_degree = *degree;
            }
            harness::cmd_gen(&cfg, &out)?
        }
    };
    report.write(&out)?;
    Ok(report)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(report) => {
            for c in report.checks.iter().filter(|c| !c.passed) {
                eprintln!("FAIL {} [{}]: {:e} > {:e}", c.name, c.subject, c.value, c.threshold);
            }
            for c in &report.components {
                eprintln!("{}: {}", c.label, c.status);
            }
            for (k, v) in &report.summary {
                println!("{k} = {v:e}");
            }
            for f in &report.fits {
                println!("fit {}: slope {:.4} (expected {})", f.name, f.slope, f.expected);
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
