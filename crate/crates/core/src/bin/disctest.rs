use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use disctest::bounds::{length_ratio, BoundsReport, SeparationPair};
use disctest::config::{
    config_hash, parse_config, parse_models, preset_source, ConfigError, PRESETS,
};
use disctest::report::{
    bound_curves, bounds_csv, errors_csv, exponents_csv, fmt_float, timestamp, write_atomic,
    RunManifest,
};
use disctest::seqio::{load_training_dir, read_sequence, SeqError};
use disctest::simulate::{run_experiment_with_workers, ExperimentConfig, ExponentEstimate};
use disctest::{classify_ks, classify_likelihood, classify_mmd, Kernel};

const EXIT_INVALID: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "disctest",
    version,
    about = "Distance-based multi-hypothesis testing experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment and write errors.csv, exponents.csv and manifest.json.
    Run(RunArgs),
    /// Print population separations, rates, Fano ceiling and error-bound curves.
    Bounds(BoundsArgs),
    /// Classify one test sequence against training data on disk.
    Classify(ClassifyArgs),
    /// List the bundled presets.
    Presets,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Experiment config file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bundled preset name (see `disctest presets`).
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads; 0 uses every core. Does not affect output bytes.
    #[arg(long, env = "DISCTEST_WORKERS", default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    source: Source,
    /// Also write bounds.json and bounds.csv here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifyTest {
    Mmd,
    Ks,
    Likelihood,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Training data: one file per singleton cluster, or one subdirectory per
    /// cluster holding one file per member.
    #[arg(long)]
    train_dir: Option<PathBuf>,
    #[arg(long)]
    test_file: PathBuf,
    #[arg(long, value_enum)]
    test: ClassifyTest,
    #[arg(long, default_value_t = 1.0)]
    kernel_bandwidth: f64,
    /// Model spec (TOML with one [[models]] table per cluster), required by
    /// the likelihood test.
    #[arg(long)]
    models: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl ToString) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.to_string(),
        }
    }

    fn io(message: impl ToString) -> Self {
        Self {
            code: EXIT_IO,
            message: message.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::invalid(e)
    }
}

impl From<SeqError> for Failure {
    fn from(e: SeqError) -> Self {
        if e.is_io() {
            Failure::io(e)
        } else {
            Failure::invalid(e)
        }
    }
}

impl From<disctest::Error> for Failure {
    fn from(e: disctest::Error) -> Self {
        Failure::invalid(e)
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))
}

fn load_config(source: &Source) -> Result<ExperimentConfig, Failure> {
    let text = match (&source.config, &source.preset) {
        (Some(path), _) => read_text(path)?,
        (None, Some(name)) => preset_source(name)?.to_string(),
        (None, None) => unreachable!("clap enforces one source"),
    };
    Ok(parse_config(&text)?)
}

fn prepare_out_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::io(format!("cannot create {}: {e}", dir.display())))
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<String, Failure> {
    write_atomic(dir, name, contents)
        .map(|p| p.display().to_string())
        .map_err(|e| Failure::io(format!("cannot write {}: {e}", dir.join(name).display())))
}

fn invocation() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let mut cfg = load_config(&args.source)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        if trials == 0 {
            return Err(Failure::invalid(
                "invalid value for `trials`: need trials ≥ 1",
            ));
        }
        cfg.trials = trials;
    }
    prepare_out_dir(&args.out)?;
    let started_at = timestamp();
    eprintln!(
        "running `{}`: {} tests, {} grid points, {} trials",
        cfg.name,
        cfg.tests.len(),
        cfg.n_grid.len(),
        cfg.trials
    );
    let result = run_experiment_with_workers(&cfg, args.workers)?;

    let mut outputs = vec![
        write_output(&args.out, "errors.csv", &errors_csv(&result))?,
        write_output(&args.out, "exponents.csv", &exponents_csv(&result))?,
    ];
    outputs.push(args.out.join("manifest.json").display().to_string());
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: invocation(),
        config_name: cfg.name.clone(),
        config_hash: config_hash(&cfg),
        seed: cfg.seed,
        trials: cfg.trials,
        started_at,
        finished_at: timestamp(),
        outputs,
    };
    write_output(&args.out, "manifest.json", &manifest.to_json())?;

    for curve in &result.curves {
        match curve.exponent {
            ExponentEstimate::Fitted(f) => {
                println!(
                    "{:<10} exponent {:.4} bits/sample (r2 {:.3})",
                    curve.test.name(),
                    f.exponent,
                    f.r2
                )
            }
            ExponentEstimate::LowerBound { exponent } => {
                println!(
                    "{:<10} exponent >= {:.4} bits/sample (too few errors to fit)",
                    curve.test.name(),
                    exponent
                )
            }
        }
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

/// Smallest `min(1, γ/n)` over the grid.
fn grid_length_ratio(cfg: &ExperimentConfig) -> f64 {
    cfg.n_grid
        .iter()
        .map(|&n| length_ratio(cfg.train_lengths.length(n), n))
        .fold(1.0, f64::min)
}

fn print_separation(label: &str, sep: &SeparationPair) {
    println!(
        "{label:<5} D_I {:.6}  D_O {:.6}  premise {}",
        sep.d_inner,
        sep.d_outer,
        if sep.premise_holds() {
            "ok"
        } else {
            "VIOLATED (D_I >= D_O, rate 0)"
        }
    );
}

#[derive(Serialize)]
struct BoundsDocument<'a> {
    config_name: &'a str,
    config_hash: String,
    report: &'a BoundsReport,
    error_bounds: Vec<BoundRow>,
}

#[derive(Serialize)]
struct BoundRow {
    test: &'static str,
    n: usize,
    bound: f64,
}

fn cmd_bounds(args: BoundsArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.source)?;
    let report = BoundsReport::compute(&cfg.clusters, &cfg.kernel, grid_length_ratio(&cfg))?;
    let rows = bound_curves(&cfg, &report);

    println!(
        "config {}  (length ratio r = {:.4})",
        cfg.name, report.length_ratio
    );
    print_separation("mmd", &report.separation_mmd);
    if let Some(sep) = &report.separation_ks {
        print_separation("ks", sep);
    }
    let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"));
    println!("rate_mmd          {:.6} bits/sample", report.rate_mmd);
    println!("rate_ks           {} bits/sample", opt(report.rate_ks));
    println!(
        "rate_parametric   {} bits/sample",
        opt(report.rate_parametric)
    );
    println!("chernoff_min      {} nats", opt(report.chernoff_min));
    println!("fano_ceiling      {} bits/sample", opt(report.fano_ceiling));
    println!("error bounds (D = 0):");
    println!("  test      n  bound");
    for (t, n, b) in &rows {
        println!("  {t:<5} {n:>5}  {}", fmt_float(*b));
    }

    if let Some(out) = &args.out {
        prepare_out_dir(out)?;
        let doc = BoundsDocument {
            config_name: &cfg.name,
            config_hash: config_hash(&cfg),
            report: &report,
            error_bounds: rows
                .iter()
                .map(|&(test, n, bound)| BoundRow { test, n, bound })
                .collect(),
        };
        let json = serde_json::to_string_pretty(&doc).expect("bounds serialise") + "\n";
        write_output(out, "bounds.json", &json)?;
        write_output(out, "bounds.csv", &bounds_csv(&rows))?;
    }
    Ok(())
}

fn cmd_classify(args: ClassifyArgs) -> Result<(), Failure> {
    if args.test_file.is_dir() {
        return Err(Failure::invalid(format!(
            "{} is a directory",
            args.test_file.display()
        )));
    }
    let y = read_sequence(&args.test_file)?;
    let (verdict, labels) = match args.test {
        ClassifyTest::Likelihood => {
            let Some(models_path) = &args.models else {
                return Err(Failure::invalid(
                    "likelihood requires model spec (--models)",
                ));
            };
            let models = parse_models(&read_text(models_path)?)?;
            let labels = match &args.train_dir {
                Some(dir) => {
                    let loaded = load_training_dir(dir)?;
                    if loaded.labels.len() != models.len() {
                        return Err(Failure::invalid(format!(
                            "model spec has {} models but {} has {} clusters",
                            models.len(),
                            dir.display(),
                            loaded.labels.len()
                        )));
                    }
                    Some(loaded.labels)
                }
                None => None,
            };
            (classify_likelihood(&models, &y)?, labels)
        }
        test => {
            let Some(dir) = &args.train_dir else {
                return Err(Failure::invalid("--train-dir is required for mmd and ks"));
            };
            let loaded = load_training_dir(dir)?;
            let verdict = match test {
                ClassifyTest::Mmd => {
                    let kernel = Kernel::GaussianRbf {
                        bandwidth: args.kernel_bandwidth,
                    };
                    kernel.validate()?;
                    classify_mmd(&loaded.train, &y, &kernel)?
                }
                _ => classify_ks(&loaded.train, &y)?,
            };
            (verdict, Some(loaded.labels))
        }
    };

    let (cluster_name, member_name) = match &labels {
        Some(l) => {
            let (c, members) = &l[verdict.cluster];
            (format!(" ({c})"), format!(" ({})", members[verdict.member]))
        }
        None => (String::new(), String::new()),
    };
    println!("cluster {}{cluster_name}", verdict.cluster + 1);
    println!("member {}{member_name}", verdict.member + 1);
    println!("score {}", fmt_float(verdict.score));
    Ok(())
}

fn main() -> ExitCode {
    // a closed stdout (e.g. `| head`) ends the program quietly
    std::panic::set_hook(Box::new(|info| {
        let msg = info.to_string();
        if msg.contains("Broken pipe") {
            std::process::exit(0);
        }
        eprintln!("{msg}");
    }));
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Presets => {
            for (name, _) in PRESETS {
                println!("{name}");
            }
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
