use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use fal::dataset::{FeatureKind, FeatureSpec, Schema};
use fal::harness::synth::{make_biased_dataset, make_synthetic_scenario, BiasedParams};
use fal::harness::{
    compare, read_metrics_csv, run_experiment, write_run_outputs, ExperimentConfig, MetricsRecord,
};
use fal::measure_disagreement_fixture;

#[derive(Parser)]
#[command(
    name = "fal",
    version,
    about = "Budget-constrained active learning with fairness-aware selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a JSON config and write metrics to a directory.
    Run {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for raw_split<i>.csv and summary.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare two runs iteration by iteration (deltas are A minus B).
    Compare {
        /// Metrics CSV, or a run directory holding raw_split<i>.csv files.
        a: PathBuf,
        /// Same, for the other side.
        b: PathBuf,
    },
    /// Print the table pair on which the two gap measures disagree.
    Fixture {
        /// Share of the population in the S = 1 group.
        #[arg(long, default_value_t = 0.75)]
        p: f64,
        /// Size of the rate perturbation.
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
    },
    /// Generate a synthetic dataset as CSV plus a sibling schema file.
    Synth {
        /// Output CSV path; the schema lands next to it as <stem>.schema.json.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = SynthKind::Biased)]
        kind: SynthKind,
        /// Row count (per group for the scenario).
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SynthKind {
    /// Tabular rows whose first feature is a noisy sensitive proxy.
    Biased,
    /// Two planar groups sharing one true decision boundary.
    Scenario,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(threads) = std::env::var("FAL_THREADS") {
        let threads: usize = threads
            .parse()
            .with_context(|| format!("FAL_THREADS must be a positive integer, got {threads:?}"))?;
        if threads == 0 {
            bail!("FAL_THREADS must be a positive integer, got 0");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("rayon thread pool was already initialized")?;
    }

    match Cli::parse().command {
        Command::Run { config, out } => cmd_run(&config, &out),
        Command::Compare { a, b } => cmd_compare(&a, &b),
        Command::Fixture { p, eps } => cmd_fixture(p, eps),
        Command::Synth { out, kind, n, seed } => cmd_synth(&out, kind, n, seed),
    }
}

fn cmd_run(config_path: &Path, out: &Path) -> Result<()> {
    let cfg = ExperimentConfig::from_json_file(config_path)
        .with_context(|| format!("reading config {}", config_path.display()))?;
    let result = run_experiment(&cfg)?;
    write_run_outputs(&cfg, &result, out)?;
    println!(
        "wrote {} records over {} splits to {}",
        result.records.len(),
        cfg.n_splits,
        out.display()
    );
    if let Some(last) = result.per_iteration.last() {
        println!(
            "final iteration: accuracy {:.4} +- {:.4}, {} {:.6} +- {:.6}",
            last.accuracy.mean,
            last.accuracy.std,
            cfg.measure.name(),
            last.disparity.mean,
            last.disparity.std
        );
    }
    Ok(())
}

fn read_side(path: &Path) -> Result<Vec<MetricsRecord>> {
    if !path.is_dir() {
        return Ok(read_metrics_csv(path)?);
    }
    let mut csvs: Vec<PathBuf> = fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("raw_split") && n.ends_with(".csv"))
        })
        .collect();
    if csvs.is_empty() {
        bail!("{} contains no raw_split<i>.csv files", path.display());
    }
    csvs.sort();
    let mut records = Vec::new();
    for p in csvs {
        records.extend(read_metrics_csv(&p)?);
    }
    Ok(records)
}

fn cmd_compare(a: &Path, b: &Path) -> Result<()> {
    let rows = compare(&read_side(a)?, &read_side(b)?)?;
    println!(
        "{:>9}  {:>8} {:>8} {:>9}  {:>10} {:>10} {:>11}",
        "iteration", "acc_a", "acc_b", "acc_delta", "disp_a", "disp_b", "disp_delta"
    );
    for r in &rows {
        println!(
            "{:>9}  {:>8.4} {:>8.4} {:>+9.4}  {:>10.6} {:>10.6} {:>+11.6}",
            r.iteration,
            r.accuracy_a,
            r.accuracy_b,
            r.accuracy_delta,
            r.disparity_a,
            r.disparity_b,
            r.disparity_delta
        );
    }
    Ok(())
}

fn cmd_fixture(p: f64, eps: f64) -> Result<()> {
    let v = measure_disagreement_fixture(p, eps)?;
    println!("p = {p}, eps = {eps}");
    println!("f1_c = {}", v.f1_c);
    println!("f1_c_prime = {}", v.f1_c_prime);
    println!("f2_c = {}", v.f2_c);
    println!("f2_c_prime = {}", v.f2_c_prime);
    let pick = |x: f64, y: f64| if x < y { "C" } else { "C'" };
    println!("acceptance-rate gap prefers {}", pick(v.f1_c, v.f1_c_prime));
    println!("composition gap prefers {}", pick(v.f2_c, v.f2_c_prime));
    Ok(())
}

fn cmd_synth(out: &Path, kind: SynthKind, n: usize, seed: u64) -> Result<()> {
    let (ds, sensitive_name, sensitive_values, label_name) = match kind {
        SynthKind::Biased => {
            let ds = make_biased_dataset(&BiasedParams { n, ..Default::default() }, seed)?;
            (ds, "group", ["0", "1"], "outcome")
        }
        SynthKind::Scenario => {
            let ds = make_synthetic_scenario(n, seed)?;
            (ds, "color", ["blue", "red"], "accepted")
        }
    };

    let mut w = csv::Writer::from_path(out)
        .with_context(|| format!("creating {}", out.display()))?;
    let mut header: Vec<&str> = ds.feature_names.iter().map(String::as_str).collect();
    header.push(sensitive_name);
    header.push(label_name);
    w.write_record(&header)?;
    for p in &ds.points {
        let mut row: Vec<String> = p.features.iter().map(|x| x.to_string()).collect();
        row.push(sensitive_values[p.sensitive as usize].to_string());
        row.push(p.label.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;

    let schema = Schema {
        features: ds
            .feature_names
            .iter()
            .map(|name| FeatureSpec {
                name: name.clone(),
                kind: FeatureKind::Numeric,
            })
            .collect(),
        sensitive: sensitive_name.to_string(),
        label: label_name.to_string(),
    };
    let schema_path = out.with_extension("schema.json");
    fs::write(&schema_path, serde_json::to_string_pretty(&schema)? + "\n")?;
    println!(
        "wrote {} rows to {} (schema: {})",
        ds.n(),
        out.display(),
        schema_path.display()
    );
    Ok(())
}
