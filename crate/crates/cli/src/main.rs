use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use heavy_ollga::engine::rng_for_seed;
use heavy_ollga::harness::{
    group_summary, read_csv, records_to_csv, run_experiment, summary_to_csv, sweep, ExperimentConfig,
    GroupKey, GroupSummary, RunRecord, SweepConfig,
};
use heavy_ollga::problems::{gen_random_mst_instance, gen_random_partition_instance, load_instance, save_instance, Instance};
use heavy_ollga::stats::{t_test_two_sample, wilcoxon_rank_sum, TestResult};
use heavy_ollga::verify::{run_suite, Fault, Suite, VerifyOptions};

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_VERIFY: u8 = 3;

/// Heavy-tailed (1+(λ,λ)) GA experiments.
#[derive(Debug, Parser)]
#[command(name = "ollga", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment configuration and write a CSV of runs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's `output`.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Overrides the config's `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to the number of logical cores.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run every cell of a parameter grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the base experiment's `output`.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Summary CSV; defaults to `<output>.summary.csv`.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Divide evaluations by n ln n in the summary.
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Compare two run CSVs with two-sample tests (successful runs only).
    Stats {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = Metric::Evaluations)]
        metric: Metric,
        #[arg(long, value_enum, default_value_t = TestChoice::Both)]
        test: TestChoice,
    },
    /// Run the built-in verification suites.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteChoice::All)]
        suite: SuiteChoice,
        /// Draws per sampler configuration and equivalence iterations.
        #[arg(long, default_value_t = 1_000_000)]
        draws: u64,
        #[arg(long, default_value_t = VerifyOptions::default().seed)]
        seed: u64,
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
    /// Generate a random MST or partition instance file.
    GenInstance {
        #[arg(long = "type", value_enum)]
        kind: InstanceKind,
        /// Vertices (MST) or objects (partition).
        #[arg(long)]
        n: usize,
        /// Edges (MST only).
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        max_weight: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Metric {
    Evaluations,
    Iterations,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum TestChoice {
    Wilcoxon,
    Ttest,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuiteChoice {
    Powerlaw,
    Equivalence,
    Oracles,
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InstanceKind {
    Mst,
    Partition,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

fn input_error(e: impl Display) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: e.to_string(),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| input_error(format!("cannot write {}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            output,
            seed,
            threads,
        } => cmd_run(&config, output, seed, threads),
        Command::Sweep {
            config,
            output,
            summary,
            normalize,
            seed,
            threads,
        } => cmd_sweep(&config, output, summary, normalize, seed, threads),
        Command::Stats { a, b, metric, test } => cmd_stats(&a, &b, metric, test),
        Command::Verify {
            suite,
            draws,
            seed,
            inject_fault,
        } => cmd_verify(suite, draws, seed, inject_fault.as_deref()),
        Command::GenInstance {
            kind,
            n,
            m,
            max_weight,
            seed,
            out,
        } => cmd_gen_instance(kind, n, m, max_weight, seed, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn print_summary(groups: &[GroupSummary], keys: &[GroupKey]) {
    for g in groups {
        let label: Vec<String> = keys
            .iter()
            .zip(&g.key)
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, v)| format!("{}={v}", k.name()))
            .collect();
        match &g.summary {
            Some(s) => println!(
                "{}: runs={} failures={} mean={:.6} std={:.6} min={} max={}",
                label.join(" "),
                g.runs,
                g.failures,
                s.mean,
                s.std,
                s.min,
                s.max
            ),
            None => println!("{}: runs={} failures={} (no successful runs)", label.join(" "), g.runs, g.failures),
        }
    }
}

fn cmd_run(config: &Path, output: Option<PathBuf>, seed: Option<u64>, threads: Option<usize>) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::load(config).map_err(input_error)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let output = output
        .or(cfg.output.clone())
        .ok_or_else(|| input_error("no output path: set `output` in the config or pass --output"))?;
    let records = run_experiment(&cfg, threads).map_err(input_error)?;
    write_file(&output, &records_to_csv(&records))?;
    let keys = GroupKey::configuration();
    print_summary(&group_summary(&records, &keys, false), &keys);
    Ok(())
}

fn cmd_sweep(
    config: &Path,
    output: Option<PathBuf>,
    summary: Option<PathBuf>,
    normalize: bool,
    seed: Option<u64>,
    threads: Option<usize>,
) -> Result<(), Failure> {
    let mut cfg = SweepConfig::load(config).map_err(input_error)?;
    if let Some(s) = seed {
        cfg.experiment.seed = s;
    }
    let output = output
        .or(cfg.experiment.output.clone())
        .ok_or_else(|| input_error("no output path: set `experiment.output` in the config or pass --output"))?;
    let summary = summary.unwrap_or_else(|| {
        let mut name = output.clone().into_os_string();
        name.push(".summary.csv");
        PathBuf::from(name)
    });
    let records = sweep(&cfg, threads).map_err(input_error)?;
    write_file(&output, &records_to_csv(&records))?;
    let keys = GroupKey::configuration();
    let groups = group_summary(&records, &keys, normalize);
    write_file(&summary, &summary_to_csv(&groups, &keys, normalize))?;
    print_summary(&groups, &keys);
    Ok(())
}

fn metric_values(records: &[RunRecord], metric: Metric) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.success)
        .map(|r| match metric {
            Metric::Evaluations => r.evaluations as f64,
            Metric::Iterations => r.iterations as f64,
        })
        .collect()
}

fn format_p(p: f64) -> String {
    if p < 1e-300 {
        "<1e-300".to_string()
    } else {
        format!("{p:e}")
    }
}

fn cmd_stats(a: &Path, b: &Path, metric: Metric, test: TestChoice) -> Result<(), Failure> {
    let load = |path: &Path| -> Result<Vec<f64>, Failure> {
        let values = metric_values(&read_csv(path).map_err(input_error)?, metric);
        if values.is_empty() {
            return Err(input_error(format!("{} has no successful runs", path.display())));
        }
        Ok(values)
    };
    let (xa, xb) = (load(a)?, load(b)?);
    let mut results: Vec<(&str, TestResult)> = Vec::new();
    if test != TestChoice::Ttest {
        results.push(("wilcoxon", wilcoxon_rank_sum(&xa, &xb).map_err(input_error)?));
    }
    if test != TestChoice::Wilcoxon {
        results.push(("ttest", t_test_two_sample(&xa, &xb).map_err(input_error)?));
    }
    println!("a: {} successful runs, b: {} successful runs", xa.len(), xb.len());
    for (name, r) in &results {
        println!(
            "{name}: method={} statistic={} p={}{}",
            r.method,
            r.statistic,
            format_p(r.p_value),
            if r.degenerate { " (degenerate)" } else { "" }
        );
    }
    // With both tests the reported p-value is the larger, i.e. more cautious, one.
    let p = results.iter().map(|(_, r)| r.p_value).fold(0.0, f64::max);
    println!("p={}", format_p(p));
    Ok(())
}

fn cmd_verify(suite: SuiteChoice, draws: u64, seed: u64, fault: Option<&str>) -> Result<(), Failure> {
    let fault = fault
        .map(str::parse::<Fault>)
        .transpose()
        .map_err(|e| Failure {
            code: EXIT_USAGE,
            message: e,
        })?;
    let suite = match suite {
        SuiteChoice::Powerlaw => Suite::PowerLaw,
        SuiteChoice::Equivalence => Suite::Equivalence,
        SuiteChoice::Oracles => Suite::Oracles,
        SuiteChoice::All => Suite::All,
    };
    let checks = run_suite(suite, &VerifyOptions { draws, seed, fault });
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Failure {
            code: EXIT_VERIFY,
            message: format!("{failed} of {} checks failed", checks.len()),
        });
    }
    println!("all {} checks passed", checks.len());
    Ok(())
}

fn cmd_gen_instance(
    kind: InstanceKind,
    n: usize,
    m: Option<usize>,
    max_weight: u64,
    seed: u64,
    out: &Path,
) -> Result<(), Failure> {
    let mut rng = rng_for_seed(seed);
    let instance = match kind {
        InstanceKind::Mst => {
            let m = m.ok_or_else(|| input_error("--m is required for MST instances"))?;
            Instance::Mst(gen_random_mst_instance(n, m, max_weight, &mut rng).map_err(input_error)?)
        }
        InstanceKind::Partition => {
            if m.is_some() {
                return Err(input_error("--m only applies to MST instances"));
            }
            Instance::Partition(gen_random_partition_instance(n, max_weight, &mut rng).map_err(input_error)?)
        }
    };
    save_instance(&instance, out).map_err(input_error)?;
    let reloaded = load_instance(out).map_err(input_error)?;
    if reloaded != instance {
        return Err(input_error(format!("{} did not reload to the same instance", out.display())));
    }
    println!("wrote {}", out.display());
    Ok(())
}
