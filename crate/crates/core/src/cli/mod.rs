//! The `tripdp` command line.
//!
//! Exit codes: 0 success, 1 anchor check failure, 2 usage or validation
//! error, 3 budget cap exceeded, 4 no released data.

mod anchors;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use anchors::{gender_trials, run_anchor_checks, AnchorCheck, GenderTrialStats};

use crate::accountant::{compose, BudgetLedger};
use crate::auditor::{audit, DomainListing};
use crate::datagen::{generate, GeneratorSpec};
use crate::dataset::ingest;
use crate::error::Error;
use crate::mechanisms::{group_release_probability, sbh_threshold, singleton_release_probability, PrivacyParams};
use crate::pipeline::{release_pipeline_with_diagnostics, sha256_hex, AggregationMap, Manifest, ReleaseBundle, ReleaseConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ANCHOR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_NO_DATA: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        Error::NoData(_) => EXIT_NO_DATA,
        _ => EXIT_USAGE,
    }
}

#[derive(Parser, Debug)]
#[command(name = "tripdp", version, about = "Differentially private trip histogram release and audit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic trip dataset with a matching stop list, stop map and release config.
    Generate(GenerateArgs),
    /// Run the release pipeline and write a bundle directory.
    Release(ReleaseArgs),
    /// Attack a released bundle and write an audit report.
    Audit(AuditArgs),
    /// Print the SBH threshold and release probabilities for (epsilon, delta).
    Threshold(ThresholdArgs),
    /// Compose budgets from a manifest or from explicit charges.
    Compose(ComposeArgs),
    /// Re-run the worked examples and check them against their published values.
    PaperExamples(PaperArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 200)]
    stops_per_mode: usize,
    #[arg(long, default_value_t = 1.1)]
    skew: f64,
    /// Consecutive stops merged into one aggregate in the generated stop map.
    #[arg(long, default_value_t = 4)]
    aggregate_group: usize,
}

#[derive(Args, Debug)]
struct ReleaseArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Master seed; overrides the config. Drawn and printed when absent everywhere.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    assume_delta: f64,
    /// JSON object mapping partition labels to lists of feasible points.
    #[arg(long)]
    domain_listing: Option<PathBuf>,
    /// Report path; defaults to `<bundle>/audit.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ThresholdArgs {
    #[arg(long, allow_negative_numbers = true)]
    epsilon: f64,
    #[arg(long, allow_negative_numbers = true)]
    delta: f64,
}

#[derive(Args, Debug)]
struct ComposeArgs {
    /// Recompose the ledger of a release manifest.
    #[arg(long, conflicts_with = "charge")]
    manifest: Option<PathBuf>,
    /// `epsilon,delta` pair; repeatable.
    #[arg(long)]
    charge: Vec<String>,
}

#[derive(Args, Debug)]
struct PaperArgs {
    #[arg(long, default_value_t = 20_000)]
    trials: u64,
    #[arg(long)]
    seed: Option<u64>,
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

/// Parse `args` and run the command, writing to the given streams.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a, out),
        Command::Release(a) => cmd_release(a, out, err),
        Command::Audit(a) => cmd_audit(a, out),
        Command::Threshold(a) => cmd_threshold(a, out),
        Command::Compose(a) => cmd_compose(a, out),
        Command::PaperExamples(a) => return cmd_paper_examples(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

type CmdResult = crate::Result<()>;

fn io_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn fresh_seed() -> u64 {
    use std::hash::{BuildHasher, RandomState};
    RandomState::new().hash_one(std::time::SystemTime::now())
}

fn cmd_generate(a: GenerateArgs, out: &mut dyn Write) -> CmdResult {
    let seed = a.seed.unwrap_or_else(fresh_seed);
    let spec = GeneratorSpec {
        stops_per_mode: a.stops_per_mode,
        stop_popularity: a.skew,
        ..GeneratorSpec::commuter(a.n, seed)
    };
    let ds = generate(&spec)?;
    if a.aggregate_group == 0 {
        return Err(Error::param("aggregate-group must be positive"));
    }
    let dir = &a.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    ds.write_csv_file(&dir.join("trips.csv"))?;
    let stops = spec.stops();
    let write = |name: &str, bytes: Vec<u8>| {
        let p = dir.join(name);
        std::fs::write(&p, bytes).map_err(|e| Error::io(&p, e))
    };
    write("stops.txt", format!("{}\n", stops.join("\n")).into_bytes())?;
    let mut map = Vec::new();
    AggregationMap::blocks(&stops, a.aggregate_group, "agg-").write_csv(&mut map)?;
    write("stop_map.csv", map)?;
    let modes: Vec<String> = spec.modes.iter().map(|(m, _)| format!("\"{m}\"")).collect();
    write(
        "release.toml",
        anchors::trip_config_toml(&spec.dates, &modes.join(", ")).into_bytes(),
    )?;
    writeln!(out, "wrote {} trips to {} (seed {seed})", ds.len(), dir.display()).map_err(io_err)?;
    Ok(())
}

fn cmd_release(a: ReleaseArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let config_bytes = std::fs::read(&a.config).map_err(|e| Error::io(&a.config, e))?;
    let input_bytes = std::fs::read(&a.input).map_err(|e| Error::io(&a.input, e))?;
    let mut config = ReleaseConfig::load(&a.config)?;
    if let Some(seed) = a.seed {
        config.seed = Some(seed);
    }
    if config.seed.is_none() {
        let seed = fresh_seed();
        writeln!(out, "no seed given; using --seed {seed}").map_err(io_err)?;
        config.seed = Some(seed);
    }
    let ds = ingest(&a.input, config.schema.clone())?;
    let outcome = release_pipeline_with_diagnostics(&ds, &config)?;
    for w in &outcome.warnings {
        writeln!(err, "warning: {w}").map_err(io_err)?;
    }
    let mut bundle = outcome.bundle;
    bundle.manifest.config_digest = Some(sha256_hex(&config_bytes));
    bundle.manifest.input_digest = Some(sha256_hex(&input_bytes));
    bundle.manifest.source_date_epoch = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.parse().ok());
    bundle.write_dir(&a.out)?;
    let m = &bundle.manifest;
    writeln!(out, "{:<56} {:>8} {:>12} {:>9} {:>8}", "partition", "epsilon", "delta", "threshold", "released")
        .map_err(io_err)?;
    for p in &m.partitions {
        writeln!(
            out,
            "{:<56} {:>8.4} {:>12.4e} {:>9.2} {:>8}",
            p.label, p.epsilon, p.delta, p.threshold, p.released_points
        )
        .map_err(io_err)?;
    }
    writeln!(
        out,
        "composed: epsilon = {}, delta = {:e}; seed {}; bundle at {}",
        m.composed.epsilon,
        m.composed.delta,
        m.master_seed,
        a.out.display()
    )
    .map_err(io_err)?;
    Ok(())
}

fn cmd_audit(a: AuditArgs, out: &mut dyn Write) -> CmdResult {
    if !a.bundle.join(crate::pipeline::MANIFEST_FILE).is_file() {
        return Err(Error::MalformedBundle(format!("{} has no manifest", a.bundle.display())));
    }
    let bundle = ReleaseBundle::read_dir(&a.bundle).map_err(|e| match e {
        Error::Io { .. } | Error::Csv(_) | Error::Json(_) => Error::MalformedBundle(e.to_string()),
        other => other,
    })?;
    let listing = a.domain_listing.as_deref().map(DomainListing::read_file).transpose()?;
    let report = audit(&bundle, a.assume_delta, listing.as_ref())?;
    let path = a.out.unwrap_or_else(|| a.bundle.join("audit.json"));
    std::fs::write(&path, report.to_json()?).map_err(|e| Error::io(&path, e))?;
    write!(out, "{}", report.to_table()).map_err(io_err)?;
    writeln!(out, "report written to {}", path.display()).map_err(io_err)?;
    Ok(())
}

fn cmd_threshold(a: ThresholdArgs, out: &mut dyn Write) -> CmdResult {
    let params = PrivacyParams::calibration(a.epsilon, a.delta)?;
    let t = sbh_threshold(&params);
    let single = singleton_release_probability(&params);
    writeln!(out, "epsilon = {}, delta = {:e}", a.epsilon, a.delta).map_err(io_err)?;
    writeln!(out, "threshold T = {t:.4}").map_err(io_err)?;
    writeln!(
        out,
        "singleton release probability = {single:e} (2^{:.3}; delta/4 = {:e})",
        single.log2(),
        a.delta / 4.0
    )
    .map_err(io_err)?;
    writeln!(out, "group size  release probability").map_err(io_err)?;
    for g in 1..=10 {
        let p = group_release_probability(g, &params)?;
        writeln!(out, "{g:>10}  {p:e}").map_err(io_err)?;
    }
    Ok(())
}

fn parse_charge(s: &str) -> crate::Result<PrivacyParams> {
    let (e, d) = s
        .split_once(',')
        .ok_or_else(|| Error::param(format!("charge `{s}` is not `epsilon,delta`")))?;
    let parse = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|_| Error::param(format!("`{x}` is not a number")))
    };
    PrivacyParams::new(parse(e)?, parse(d)?)
}

fn cmd_compose(a: ComposeArgs, out: &mut dyn Write) -> CmdResult {
    let ledger = match &a.manifest {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let m: Manifest = serde_json::from_str(&text)?;
            let recomposed = compose(&m.ledger);
            if recomposed != m.composed {
                return Err(Error::MalformedBundle(format!(
                    "manifest claims {:?} but its ledger composes to {recomposed:?}",
                    m.composed
                )));
            }
            m.ledger
        }
        None => {
            let mut ledger = BudgetLedger::new();
            for (i, c) in a.charge.iter().enumerate() {
                ledger = ledger.charge(&format!("charge {}", i + 1), parse_charge(c)?)?;
            }
            ledger
        }
    };
    for e in ledger.entries() {
        writeln!(out, "{:<56} {:>10} {:>14e}", e.label, e.epsilon, e.delta).map_err(io_err)?;
    }
    let t = compose(&ledger);
    writeln!(out, "composed: epsilon = {}, delta = {:e} (2^{:.4})", t.epsilon, t.delta, t.delta.log2())
        .map_err(io_err)?;
    Ok(())
}

fn cmd_paper_examples(a: PaperArgs, out: &mut dyn Write) -> i32 {
    let seed = a.seed.unwrap_or_else(fresh_seed);
    let _ = writeln!(out, "seed {seed}, {} gender trials", a.trials);
    match run_anchor_checks(a.trials, seed) {
        Ok(checks) => {
            let mut failed = Vec::new();
            for c in &checks {
                let _ = writeln!(out, "[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                if !c.passed {
                    failed.push(c.name.clone());
                }
            }
            if failed.is_empty() {
                let _ = writeln!(out, "all {} anchors pass", checks.len());
                EXIT_OK
            } else {
                let _ = writeln!(out, "failed anchors: {}", failed.join(", "));
                EXIT_ANCHOR
            }
        }
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            EXIT_ANCHOR
        }
    }
}

