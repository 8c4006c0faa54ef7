//! Experiment harness: time integration in the three modes, fluctuation
//! statistics, sweeps over lattice size or shot number, and power-law fits.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{
    deterministic_step, transition_matrix, transition_rates, EnvParams, FractionVector,
    TimescaleTable, DEFAULT_DT, SIMPLEX_TOL,
};
use crate::error::{Error, Result};
use crate::lcu::decompose_transition;
use crate::montecarlo::{fractions, init_lattice, mc_step, SiteStreams};
use crate::qsim::{quantum_step, quantum_step_exact};

pub const DEFAULT_T_END: f64 = 100.0;
pub const DEFAULT_SPINUP: f64 = 20.0;
pub const DEFAULT_SITES: usize = 400;
pub const DEFAULT_SHOTS: u64 = 40_000;
/// Largest tolerated distance of a fitted exponent from -1/2 before the
/// shot-gap ratio is flagged.
pub const EXPONENT_WARN: f64 = 0.15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    #[default]
    Deterministic,
    MonteCarlo,
    Quantum,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "deterministic" | "det" => Ok(Mode::Deterministic),
            "montecarlo" | "mc" => Ok(Mode::MonteCarlo),
            "quantum" | "q" => Ok(Mode::Quantum),
            other => Err(Error::InvalidParameter(format!("unknown mode {other:?}"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Deterministic => "deterministic",
            Mode::MonteCarlo => "montecarlo",
            Mode::Quantum => "quantum",
        })
    }
}

/// Measurements per quantum step; `Exact` decodes the Born probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shots {
    Finite(u64),
    Exact,
}

impl FromStr for Shots {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("exact") {
            return Ok(Shots::Exact);
        }
        s.parse::<u64>()
            .map(Shots::Finite)
            .map_err(|_| Error::InvalidParameter(format!("invalid shot count {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub env: EnvParams,
    pub taus: TimescaleTable,
    pub dt: f64,
    pub t_end: f64,
    pub n_sites: usize,
    pub shots: Shots,
    pub seed: u64,
    pub spinup: f64,
    pub sigma0: FractionVector,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Deterministic,
            env: EnvParams::reference(),
            taus: TimescaleTable::reference(),
            dt: DEFAULT_DT,
            t_end: DEFAULT_T_END,
            n_sites: DEFAULT_SITES,
            shots: Shots::Finite(DEFAULT_SHOTS),
            seed: 0,
            spinup: DEFAULT_SPINUP,
            sigma0: FractionVector::uniform(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt = {} must be > 0", self.dt));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return bad(format!("t_end = {} must be >= dt = {}", self.t_end, self.dt));
        }
        if !(self.spinup.is_finite() && self.spinup >= 0.0) {
            return bad(format!("spinup = {} must be >= 0", self.spinup));
        }
        if self.n_sites == 0 {
            return bad("sites must be >= 1".into());
        }
        if self.shots == Shots::Finite(0) {
            return bad("shots must be >= 1".into());
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Sweep value for this config's stochastic mode.
    pub fn with_count(&self, n: u64) -> Self {
        let mut cfg = self.clone();
        match cfg.mode {
            Mode::MonteCarlo => cfg.n_sites = n as usize,
            Mode::Quantum => cfg.shots = Shots::Finite(n),
            Mode::Deterministic => {}
        }
        cfg
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub records: Vec<FractionVector>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, t: f64, sigma: FractionVector) {
        debug_assert!((sigma.sum() - 1.0).abs() < 1e3 * SIMPLEX_TOL);
        self.times.push(t);
        self.records.push(sigma);
    }

    pub fn last(&self) -> Option<&FractionVector> {
        self.records.last()
    }

    /// Record nearest to time `t`.
    pub fn at(&self, t: f64) -> Option<&FractionVector> {
        let idx = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))?
            .0;
        self.records.get(idx)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time_h", "sigma_cs", "sigma_c", "sigma_d", "sigma_s"])?;
        for (t, s) in self.times.iter().zip(&self.records) {
            let a = s.as_array();
            w.write_record([
                format!("{t:.12}"),
                format!("{:.16e}", a[0]),
                format!("{:.16e}", a[1]),
                format!("{:.16e}", a[2]),
                format!("{:.16e}", a[3]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut series = TimeSeries::default();
        for row in csv::Reader::from_reader(input).deserialize() {
            let (t, cs, c, d, s): (f64, f64, f64, f64, f64) = row?;
            series.push(t, FractionVector::new([cs, c, d, s])?);
        }
        Ok(series)
    }
}

/// Integrates the configured mode from `t = 0` to `t_end`, recording every step
/// (including the initial state).
pub fn run_simulation(cfg: &ExperimentConfig) -> Result<TimeSeries> {
    cfg.validate()?;
    let rates = transition_rates(&cfg.env, &cfg.taus);
    let p = transition_matrix(&rates, cfg.dt)?;
    let steps = cfg.n_steps();
    let mut series = TimeSeries {
        times: Vec::with_capacity(steps + 1),
        records: Vec::with_capacity(steps + 1),
    };

    match cfg.mode {
        Mode::Deterministic => {
            let mut sigma = cfg.sigma0;
            series.push(0.0, sigma);
            for i in 1..=steps {
                sigma = deterministic_step(&p, &sigma);
                series.push(i as f64 * cfg.dt, sigma);
            }
        }
        Mode::MonteCarlo => {
            // Stream u64::MAX shuffles the initial lattice; streams 0..n drive sites.
            let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            init_rng.set_stream(u64::MAX);
            let mut lattice = init_lattice(cfg.n_sites, &cfg.sigma0, &mut init_rng)?;
            let mut streams = SiteStreams::new(cfg.seed, cfg.n_sites);
            series.push(0.0, fractions(&lattice));
            for i in 1..=steps {
                mc_step(&mut lattice, &p, &mut streams);
                series.push(i as f64 * cfg.dt, fractions(&lattice));
            }
        }
        Mode::Quantum => {
            let lcu = decompose_transition(&p)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut sigma = cfg.sigma0;
            series.push(0.0, sigma);
            for i in 1..=steps {
                sigma = match cfg.shots {
                    Shots::Finite(n) => quantum_step(&sigma, &lcu, n, &mut rng)?.sigma,
                    Shots::Exact => quantum_step_exact(&sigma, &lcu)?.sigma,
                };
                series.push(i as f64 * cfg.dt, sigma);
            }
        }
    }
    Ok(series)
}

/// Root-mean-square of `stoch - det` over records with `t > spinup`, pooled
/// over the four components.
pub fn fluctuation_rms(stoch: &TimeSeries, det: &TimeSeries, spinup: f64) -> Result<f64> {
    if stoch.len() != det.len() {
        return Err(Error::Misaligned(format!(
            "{} records vs {} records",
            stoch.len(),
            det.len()
        )));
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for ((ts, td), (s, d)) in stoch
        .times
        .iter()
        .zip(&det.times)
        .zip(stoch.records.iter().zip(&det.records))
    {
        if (ts - td).abs() > 1e-9 * ts.abs().max(1.0) {
            return Err(Error::Misaligned(format!("time {ts} vs {td}")));
        }
        if *ts > spinup {
            for (a, b) in s.as_array().iter().zip(d.as_array()) {
                sum += (a - b) * (a - b);
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(Error::Misaligned(format!("no records after spin-up {spinup} h")));
    }
    Ok((sum / n as f64).sqrt())
}

/// Least-squares fit of `log y = log prefactor + exponent * log x`.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter(
            "power-law fit needs at least two (x, y) pairs".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidParameter(
            "power-law fit needs positive finite data".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("all sweep values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    Ok((slope, intercept.exp()))
}

/// One sweep point: seed-averaged fluctuation RMS.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub n: u64,
    pub rms_mean: f64,
    pub rms_std: f64,
    pub repeats: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingResult {
    pub points: Vec<ScanPoint>,
    pub exponent: f64,
    pub prefactor: f64,
}

impl ScalingResult {
    pub fn from_points(mut points: Vec<ScanPoint>) -> Result<Self> {
        points.sort_by_key(|p| p.n);
        if points.windows(2).any(|w| w[0].n == w[1].n) {
            return Err(Error::InvalidParameter("duplicate sweep values".into()));
        }
        let x: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
        let y: Vec<f64> = points.iter().map(|p| p.rms_mean).collect();
        let (exponent, prefactor) = fit_power_law(&x, &y)?;
        Ok(Self {
            points,
            exponent,
            prefactor,
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.points {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let points = csv::Reader::from_reader(input)
            .deserialize()
            .collect::<std::result::Result<Vec<ScanPoint>, _>>()?;
        Self::from_points(points)
    }
}

/// Sweeps the lattice size (Monte Carlo) or shot number (quantum) of `base`,
/// averaging the fluctuation RMS over `repeats` seeds `base.seed + r`.
///
/// Runs execute in parallel; results are gathered in (value, seed) order, so
/// the output does not depend on scheduling.
pub fn scaling_scan(base: &ExperimentConfig, values: &[u64], repeats: usize) -> Result<ScalingResult> {
    if base.mode == Mode::Deterministic {
        return Err(Error::InvalidParameter(
            "scans need a stochastic mode (montecarlo or quantum)".into(),
        ));
    }
    if values.len() < 2 {
        return Err(Error::InvalidParameter("scan needs at least two values".into()));
    }
    if repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be >= 1".into()));
    }
    if base.spinup >= base.t_end {
        return Err(Error::InvalidParameter(format!(
            "spinup = {} must be < t_end = {}",
            base.spinup, base.t_end
        )));
    }
    let det = run_simulation(&ExperimentConfig {
        mode: Mode::Deterministic,
        ..base.clone()
    })?;

    let jobs: Vec<(u64, u64)> = values
        .iter()
        .flat_map(|&n| (0..repeats as u64).map(move |r| (n, r)))
        .collect();
    let rms: Vec<f64> = jobs
        .par_iter()
        .map(|&(n, r)| {
            let mut cfg = base.with_count(n);
            cfg.seed = base.seed.wrapping_add(r);
            let series = run_simulation(&cfg)?;
            fluctuation_rms(&series, &det, base.spinup)
        })
        .collect::<Result<_>>()?;

    let points = values
        .iter()
        .zip(rms.chunks(repeats))
        .map(|(&n, chunk)| {
            let k = chunk.len() as f64;
            let mean = chunk.iter().sum::<f64>() / k;
            let var = if chunk.len() > 1 {
                chunk.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0)
            } else {
                0.0
            };
            ScanPoint {
                n,
                rms_mean: mean,
                rms_std: var.sqrt(),
                repeats,
            }
        })
        .collect();
    ScalingResult::from_points(points)
}

/// Ratio of fitted prefactors `C_Q / C_MC`, with a warning when either fit
/// strays from the -1/2 law.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotGap {
    pub ratio: f64,
    pub warning: Option<String>,
}

pub fn shot_gap(mc: &ScalingResult, quantum: &ScalingResult) -> ShotGap {
    let mut notes = Vec::new();
    for (name, r) in [("montecarlo", mc), ("quantum", quantum)] {
        if (r.exponent + 0.5).abs() > EXPONENT_WARN {
            notes.push(format!(
                "{name} exponent {:.3} is far from -0.5; prefactor ratio is unreliable",
                r.exponent
            ));
        }
    }
    ShotGap {
        ratio: quantum.prefactor / mc.prefactor,
        warning: (!notes.is_empty()).then(|| notes.join("; ")),
    }
}

/// Parses `key = value` lines; `#` starts a comment. Keys use the long flag
/// names without dashes (`t-end` or `t_end`).
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::InvalidParameter(format!("config line {}: expected key = value", lineno + 1))
        })?;
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}
