//! `diamag`: batch runs of the spectral and critical-field computations.
//! Each run writes its tables plus `manifest.json` into the output directory.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

use commands::Run;
use config::{ConfigError, RunConfig};
use diamag_core::ErrorCategory;

/// Overrides the output directory when `--out` is absent.
const OUT_ENV: &str = "DIAMAG_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "diamag", version, about = "Magnetic Neumann Laplacian ground states and surface critical fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for independent grid points.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed of all randomized initial vectors; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// De Gennes constant and the fiber-energy scan.
    Degennes,
    /// Branch diagram of the disc.
    DiscSpectrum,
    /// One ground state and its field dump.
    Eig2d,
    /// Ground energy over a field grid with fit and localization diagnostics.
    Sweep,
    /// Local critical field for each coupling constant.
    Hc3,
    /// Ginzburg–Landau bifurcation scan.
    GlScan,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Degennes => "degennes",
            Command::DiscSpectrum => "disc-spectrum",
            Command::Eig2d => "eig2d",
            Command::Sweep => "sweep",
            Command::Hc3 => "hc3",
            Command::GlScan => "gl-scan",
        }
    }
}

/// Exit status and category for an error escaping a run.
fn classify(err: &anyhow::Error) -> (u8, &'static str) {
    if err.downcast_ref::<ConfigError>().is_some() {
        return (2, "config");
    }
    match err.downcast_ref::<diamag_core::Error>().map(|e| e.category()) {
        Some(ErrorCategory::Numeric) => (3, "numeric"),
        Some(ErrorCategory::Precondition) => (4, "precondition"),
        Some(ErrorCategory::Input) => (2, "input"),
        None if err.downcast_ref::<std::io::Error>().is_some() => (2, "input"),
        None => (3, "numeric"),
    }
}

fn report(code: u8, category: &str, message: String) -> ExitCode {
    eprintln!("{}", json!({ "error": { "category": category, "exit_code": code, "message": message } }));
    ExitCode::from(code)
}

fn config_hash(cfg: &RunConfig) -> anyhow::Result<String> {
    // serde_json maps are ordered, so the serialization is canonical
    let mut hashed = cfg.clone();
    hashed.out = None;
    let bytes = serde_json::to_vec(&hashed)?;
    Ok(format!("sha256:{}", hex::encode(Sha256::digest(&bytes))))
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    let start = Instant::now();
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(ConfigError("--jobs must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    cfg.seed = Some(seed);
    cfg.eigen.seed = seed;
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("diamag-out").join(cli.command.name()));
    std::fs::create_dir_all(&out).map_err(|e| ConfigError(format!("cannot create output directory {}: {e}", out.display())))?;

    let hash = config_hash(&cfg)?;
    let mut run = Run { cfg, seed, out, timings: Vec::new(), outputs: Vec::new() };
    let results = match cli.command {
        Command::Degennes => commands::degennes(&mut run)?,
        Command::DiscSpectrum => commands::disc_spectrum(&mut run)?,
        Command::Eig2d => commands::eig2d(&mut run)?,
        Command::Sweep => commands::sweep_cmd(&mut run)?,
        Command::Hc3 => commands::hc3(&mut run)?,
        Command::GlScan => commands::gl_scan(&mut run)?,
    };

    let mut timings: serde_json::Map<String, serde_json::Value> = run.timings.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    timings.insert("total".into(), json!(start.elapsed().as_secs_f64()));
    let manifest = json!({
        "subcommand": cli.command.name(),
        "config_hash": hash,
        "config": run.cfg,
        "seed": seed,
        "versions": { "diamag": env!("CARGO_PKG_VERSION"), "diamag_core": diamag_core::VERSION },
        "jobs": rayon::current_num_threads(),
        "timings_s": timings,
        "results": results,
        "outputs": run.outputs,
    });
    let path = run.out.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    println!("{}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return report(2, "config", e.to_string().trim_end().to_string()),
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, category) = classify(&err);
            report(code, category, format!("{err:#}"))
        }
    }
}
