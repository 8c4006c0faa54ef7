use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use smcm::experiments::{parse_config_text, shot_gap};
use smcm::{
    run_simulation, scaling_scan, EnvParams, Error, ExperimentConfig, Mode, Result, ScalingResult,
    Shots,
};

#[derive(Parser)]
#[command(name = "smcm", version, about = "Stochastic multicloud model experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one mode and write the fraction time series as CSV.
    Run(RunArgs),
    /// Sweep lattice size or shot number and write seed-averaged RMS as CSV.
    Scan(ScanArgs),
    /// Fit scan outputs and print exponents and the shot-gap ratio.
    Report(ReportArgs),
}

#[derive(Args, Default)]
struct CommonArgs {
    /// key = value file with defaults for any of the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// deterministic, montecarlo or quantum.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    cape: Option<f64>,
    #[arg(long)]
    dryness: Option<f64>,
    /// Step in hours.
    #[arg(long)]
    dt: Option<f64>,
    /// End time in hours.
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Lattice sites (montecarlo).
    #[arg(long)]
    sites: Option<usize>,
    /// Shots per step (quantum), or `exact` for the infinite-shot limit.
    #[arg(long)]
    shots: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<u64>>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Start of the RMS window in hours.
    #[arg(long)]
    spinup: Option<f64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Scan CSV from the montecarlo mode.
    #[arg(long)]
    mc: PathBuf,
    /// Scan CSV from the quantum mode.
    #[arg(long)]
    quantum: PathBuf,
}

/// Flag values layered over an optional config file.
struct Settings {
    file: HashMap<String, String>,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self> {
        let file = match path {
            Some(p) => parse_config_text(&std::fs::read_to_string(p)?)?
                .into_iter()
                .collect(),
            None => HashMap::new(),
        };
        Ok(Self { file })
    }

    fn pick<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.file
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::InvalidParameter(format!("config {key} = {v:?} is invalid")))
            })
            .transpose()
    }
}

fn build_config(c: &CommonArgs, s: &Settings, spinup: Option<f64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(m) = s.pick(c.mode.clone(), "mode")? {
        cfg.mode = m.parse::<Mode>()?;
    }
    let cape = s.pick(c.cape, "cape")?.unwrap_or(cfg.env.cape());
    let dryness = s.pick(c.dryness, "dryness")?.unwrap_or(cfg.env.dryness());
    cfg.env = EnvParams::new(cape, dryness)?;
    if let Some(v) = s.pick(c.dt, "dt")? {
        cfg.dt = v;
    }
    if let Some(v) = s.pick(c.t_end, "t-end")? {
        cfg.t_end = v;
    }
    if let Some(v) = s.pick(c.sites, "sites")? {
        cfg.n_sites = v;
    }
    if let Some(v) = s.pick(c.shots.clone(), "shots")? {
        cfg.shots = v.parse::<Shots>()?;
    }
    if let Some(v) = s.pick(c.seed, "seed")? {
        cfg.seed = v;
    }
    if let Some(v) = s.pick(spinup, "spinup")? {
        cfg.spinup = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(args: &RunArgs) -> Result<()> {
    let settings = Settings::load(args.common.config.as_deref())?;
    let cfg = build_config(&args.common, &settings, None)?;
    let series = run_simulation(&cfg)?;
    let out_path = settings.pick(args.common.out.clone().map(|p| p.display().to_string()), "out")?;
    series.write_csv(output(out_path.as_deref().map(Path::new))?)
}

fn scan(args: &ScanArgs) -> Result<()> {
    let settings = Settings::load(args.common.config.as_deref())?;
    let cfg = build_config(&args.common, &settings, args.spinup)?;
    let values = match &args.values {
        Some(v) => v.clone(),
        None => match settings.file.get("values") {
            Some(text) => text
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<u64>()
                        .map_err(|_| Error::InvalidParameter(format!("bad sweep value {v:?}")))
                })
                .collect::<Result<_>>()?,
            None => match cfg.mode {
                Mode::MonteCarlo => vec![100, 400, 1600, 6400],
                _ => vec![1_000, 10_000, 100_000],
            },
        },
    };
    let repeats = settings.pick(args.repeats, "repeats")?.unwrap_or(5);
    let result = scaling_scan(&cfg, &values, repeats)?;
    eprintln!(
        "{} exponent {:.4}, prefactor {:.6}",
        cfg.mode, result.exponent, result.prefactor
    );
    let out_path = settings.pick(args.common.out.clone().map(|p| p.display().to_string()), "out")?;
    result.write_csv(output(out_path.as_deref().map(Path::new))?)
}

fn report(args: &ReportArgs) -> Result<()> {
    let mc = ScalingResult::read_csv(File::open(&args.mc)?)?;
    let q = ScalingResult::read_csv(File::open(&args.quantum)?)?;
    let gap = shot_gap(&mc, &q);
    println!("montecarlo exponent {:.4} prefactor C_MC {:.6}", mc.exponent, mc.prefactor);
    println!("quantum    exponent {:.4} prefactor C_Q  {:.6}", q.exponent, q.prefactor);
    println!("shot gap C_Q/C_MC {:.4}", gap.ratio);
    if let Some(w) = gap.warning {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Scan(a) => scan(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
