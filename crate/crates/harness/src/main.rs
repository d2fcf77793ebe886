use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use hyperflow_harness::{run_command, ExperimentConfig, RunManifest, Scenario};

#[derive(Parser)]
#[command(name = "hyperflow", version, about = "Ricci flow experiments near hyperbolic space")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Start from this config file instead of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run directory; defaults to runs/<command>.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evolve a perturbed (or exact, with --eps 0) hyperbolic metric and export the trace.
    FlowRun {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        r_max: Option<f64>,
        #[arg(long)]
        dr: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        /// Write every snapshot metric.
        #[arg(long)]
        snapshots: bool,
    },
    /// Function and tensor spectrum checks on hyperbolic balls.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Convolution integral sweep over the centre distance.
    Convolution {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        d_max: Option<f64>,
    },
    /// Comparison-lemma threshold search.
    Comparison {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        r_max_scan: Option<f64>,
    },
    /// Run a config file.
    Scenario {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Option<PathBuf>, preset: Scenario) -> anyhow::Result<ExperimentConfig> {
    match path {
        None => Ok(ExperimentConfig::preset(preset)),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(ExperimentConfig::from_toml(&text)?)
        }
    }
}

fn apply(cfg: &mut ExperimentConfig, c: &Common, command: &str) {
    if let Some(n) = c.n {
        cfg.n = n;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.output_dir = Some(o.clone());
    }
    if cfg.output_dir.is_none() {
        cfg.output_dir = Some(PathBuf::from("runs").join(command));
    }
}

fn build(cmd: Cmd) -> anyhow::Result<(&'static str, ExperimentConfig)> {
    Ok(match cmd {
        Cmd::FlowRun { common, eps, delta, r_max, dr, t_end, snapshots } => {
            let mut cfg = load(&common.config, Scenario::Theorem1)?;
            apply(&mut cfg, &common, "flow-run");
            cfg.eps = eps.unwrap_or(cfg.eps);
            cfg.delta = delta.or(cfg.delta);
            cfg.grid.r_max = r_max.unwrap_or(cfg.grid.r_max);
            cfg.grid.dr = dr.unwrap_or(cfg.grid.dr);
            cfg.flow.t_end = t_end.unwrap_or(cfg.flow.t_end);
            cfg.write_snapshots |= snapshots;
            if cfg.eps == 0.0 {
                cfg.scenario = Scenario::FixedPoint;
            }
            ("flow-run", cfg)
        }
        Cmd::Spectrum { common } => {
            let mut cfg = load(&common.config, Scenario::SpectralSuite)?;
            apply(&mut cfg, &common, "spectrum");
            cfg.scenario = Scenario::SpectralSuite;
            ("spectrum", cfg)
        }
        Cmd::Convolution { common, a, b, d_max } => {
            let mut cfg = load(&common.config, Scenario::ConvolutionSuite)?;
            apply(&mut cfg, &common, "convolution");
            cfg.scenario = Scenario::ConvolutionSuite;
            cfg.convolution.a = a.unwrap_or(cfg.convolution.a);
            cfg.convolution.b = b.unwrap_or(cfg.convolution.b);
            cfg.convolution.d_max = d_max.unwrap_or(cfg.convolution.d_max);
            ("convolution", cfg)
        }
        Cmd::Comparison { common, delta, r_max_scan } => {
            let mut cfg = load(&common.config, Scenario::ComparisonSuite)?;
            apply(&mut cfg, &common, "comparison");
            cfg.scenario = Scenario::ComparisonSuite;
            cfg.delta = delta.or(cfg.delta);
            cfg.comparison.r_max_scan = r_max_scan.unwrap_or(cfg.comparison.r_max_scan);
            ("comparison", cfg)
        }
        Cmd::Scenario { config, out } => {
            let mut cfg = load(&Some(config), Scenario::FixedPoint)?;
            if let Some(o) = out {
                cfg.output_dir = Some(o);
            }
            let name = cfg.scenario.name();
            cfg.output_dir.get_or_insert_with(|| PathBuf::from("runs").join(name));
            ("scenario", cfg)
        }
    })
}

fn report(man: &RunManifest) {
    for c in &man.criteria {
        let v = c.measured.map_or("non-finite".to_string(), |v| format!("{v:.6e}"));
        println!("{} {:<32} {v:>14}  (expect {})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.expect);
    }
    if let Some(e) = &man.error {
        println!("ERROR {e}");
    }
    if let Some(dir) = &man.config.output_dir {
        println!("artifacts in {}", dir.display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build(cli.cmd).and_then(|(cmd, cfg)| Ok(run_command(cmd, &cfg)?));
    match result {
        Ok(man) => {
            report(&man);
            if man.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
