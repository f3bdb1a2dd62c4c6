//! Command-line front end: parse an experiment file, run it (single
//! scenario, sweep grid, or paired scheme comparison), and export metrics.
//!
//! Exit code is 0 only when every simulation cell completed; otherwise a
//! per-row error manifest goes to stderr.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use twinsim::harness::{
    export_metrics, paired_comparisons, parse_config, run_experiment, ExperimentSpec,
    ExportFormat, SweepReport,
};
use twinsim::msvs::Scheme;

#[derive(Parser)]
#[command(name = "twinsim", version, about = "Digital-twin network experiment runner")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the base scenario (first sweep value only).
    Run(Common),
    /// Run the full (value, seed, scheme) grid.
    Sweep(Common),
    /// Paired same-seed comparison across the configured schemes.
    Compare(Common),
    /// Parse and validate a config, reporting the first problem found.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to $TWINSIM_OUT, then the config value.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds overriding the config.
    #[arg(long)]
    seeds: Option<String>,
    /// Restrict the run to one scheme.
    #[arg(long)]
    scheme: Option<String>,
    /// Sweep-cell worker threads; 0 means the rayon default.
    #[arg(long)]
    parallel: Option<usize>,
    /// Export format (csv or jsonl); repeat for several.
    #[arg(long)]
    format: Vec<String>,
}

fn apply_overrides(spec: &mut ExperimentSpec, c: &Common) -> twinsim::Result<()> {
    if let Some(seeds) = &c.seeds {
        spec.seeds = seeds
            .split(',')
            .map(|s| {
                s.trim().parse::<u64>().map_err(|_| {
                    twinsim::SimError::InvalidConfig(format!("bad seed: {s}"))
                })
            })
            .collect::<twinsim::Result<_>>()?;
    }
    if let Some(scheme) = &c.scheme {
        spec.schemes = vec![scheme.parse::<Scheme>()?];
    }
    if let Some(parallel) = c.parallel {
        spec.parallel = parallel;
    }
    if !c.format.is_empty() {
        spec.formats = c
            .format
            .iter()
            .map(|f| f.parse::<ExportFormat>())
            .collect::<twinsim::Result<_>>()?;
    }
    if let Some(out) = &c.out {
        spec.output_dir = out.clone();
    } else if let Ok(out) = std::env::var("TWINSIM_OUT") {
        spec.output_dir = PathBuf::from(out);
    }
    spec.validate()
}

/// Print the failure manifest; true when every cell completed.
fn report_outcome(report: &SweepReport) -> bool {
    let failed = report.failed();
    for row in &failed {
        eprintln!(
            "failed: value={} seed={} scheme={}: {}",
            row.value,
            row.seed,
            row.scheme,
            row.error.as_deref().unwrap_or("unknown")
        );
    }
    println!(
        "{} of {} runs completed",
        report.rows.len() - failed.len(),
        report.rows.len()
    );
    failed.is_empty()
}

fn execute(spec: &ExperimentSpec, compare: bool) -> twinsim::Result<bool> {
    let report = run_experiment(spec)?;
    let written = export_metrics(&report, &spec.output_dir, &spec.formats)?;
    if compare {
        let mut body = String::from("value,scheme_a,scheme_b,pairs,wins_a,mean_gap\n");
        for p in paired_comparisons(&report) {
            body.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.value, p.scheme_a, p.scheme_b, p.pairs, p.wins_a, p.mean_gap
            ));
            println!(
                "value {}: {} beats {} in {}/{} seeds (mean gap {:.4})",
                p.value, p.scheme_a, p.scheme_b, p.wins_a, p.pairs, p.mean_gap
            );
        }
        let path = spec.output_dir.join("compare.csv");
        std::fs::write(&path, body)?;
        println!("wrote {}", path.display());
    }
    for path in &written {
        println!("wrote {}", path.display());
    }
    Ok(report_outcome(&report))
}

fn run_cmd(cmd: &Cmd) -> twinsim::Result<bool> {
    match cmd {
        Cmd::ValidateConfig { config } => {
            parse_config(config)?;
            println!("ok: {}", config.display());
            Ok(true)
        }
        Cmd::Run(c) => {
            let mut spec = parse_config(&c.config)?;
            apply_overrides(&mut spec, c)?;
            spec.sweep.values.truncate(1);
            execute(&spec, false)
        }
        Cmd::Sweep(c) => {
            let mut spec = parse_config(&c.config)?;
            apply_overrides(&mut spec, c)?;
            execute(&spec, false)
        }
        Cmd::Compare(c) => {
            let mut spec = parse_config(&c.config)?;
            apply_overrides(&mut spec, c)?;
            execute(&spec, true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_cmd(&cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
