//! Four-state cloud taxonomy, environment-driven transition rates and the
//! one-step stochastic matrix acting on the area-fraction vector.
//!
//! Matrices follow the column-vector convention: `p[k][l]` is the probability
//! of a site moving from state `l` to state `k`, so the deterministic update is
//! `sigma_next = P * sigma`. Rate matrices are stored the other way round,
//! `r[l][k]` being the rate of `l -> k`.

use std::fmt;

use crate::error::{ensure_finite, Error, Result};
use crate::linalg::ComplexMatrix;

/// Tolerance on the unit sum of a fraction vector or of a stochastic column.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Default time step in hours.
pub const DEFAULT_DT: f64 = 0.1;

/// Sky state of a single lattice site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum CloudState {
    ClearSky = 0,
    Congestus = 1,
    Deep = 2,
    Stratiform = 3,
}

impl CloudState {
    pub const ALL: [CloudState; 4] = [
        CloudState::ClearSky,
        CloudState::Congestus,
        CloudState::Deep,
        CloudState::Stratiform,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn code(self) -> u8 {
        self as u8
    }

    /// Transitions that the model never allows in a single step.
    pub fn is_forbidden(from: CloudState, to: CloudState) -> bool {
        use CloudState::*;
        matches!(
            (from, to),
            (ClearSky, Stratiform)
                | (Congestus, Stratiform)
                | (Deep, Congestus)
                | (Stratiform, Congestus)
                | (Stratiform, Deep)
        )
    }
}

impl TryFrom<u8> for CloudState {
    type Error = Error;

    fn try_from(code: u8) -> Result<Self> {
        CloudState::ALL
            .get(code as usize)
            .copied()
            .ok_or_else(|| Error::InvalidParameter(format!("cloud state code {code} not in 0..=3")))
    }
}

impl fmt::Display for CloudState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            CloudState::ClearSky => "clear sky",
            CloudState::Congestus => "congestus",
            CloudState::Deep => "deep",
            CloudState::Stratiform => "stratiform",
        };
        f.write_str(name)
    }
}

/// Large-scale environment seen by every site: CAPE and mid-level dryness.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvParams {
    cape: f64,
    dryness: f64,
}

impl EnvParams {
    pub fn new(cape: f64, dryness: f64) -> Result<Self> {
        ensure_finite("cape", cape)?;
        ensure_finite("dryness", dryness)?;
        if cape < 0.0 || dryness < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "cape ({cape}) and dryness ({dryness}) must be non-negative"
            )));
        }
        Ok(Self { cape, dryness })
    }

    /// C = 0.25, D = 0.75.
    pub fn reference() -> Self {
        Self {
            cape: 0.25,
            dryness: 0.75,
        }
    }

    pub fn cape(&self) -> f64 {
        self.cape
    }

    pub fn dryness(&self) -> f64 {
        self.dryness
    }
}

impl Default for EnvParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// Formation, decay and conversion timescales in hours.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimescaleTable {
    tau_01: f64,
    tau_10: f64,
    tau_12: f64,
    tau_02: f64,
    tau_23: f64,
    tau_20: f64,
    tau_30: f64,
}

impl TimescaleTable {
    pub fn new(
        tau_01: f64,
        tau_10: f64,
        tau_12: f64,
        tau_02: f64,
        tau_23: f64,
        tau_20: f64,
        tau_30: f64,
    ) -> Result<Self> {
        let table = Self {
            tau_01,
            tau_10,
            tau_12,
            tau_02,
            tau_23,
            tau_20,
            tau_30,
        };
        for (name, tau) in table.named() {
            ensure_finite(name, tau)?;
            if tau <= 0.0 {
                return Err(Error::InvalidParameter(format!("{name} = {tau} must be > 0")));
            }
        }
        Ok(table)
    }

    /// Reference timescales (Khouider et al. 2010, case 1).
    pub fn reference() -> Self {
        Self {
            tau_01: 1.0,
            tau_10: 5.0,
            tau_12: 1.0,
            tau_02: 2.0,
            tau_23: 3.0,
            tau_20: 5.0,
            tau_30: 5.0,
        }
    }

    pub fn named(&self) -> [(&'static str, f64); 7] {
        [
            ("tau_01", self.tau_01),
            ("tau_10", self.tau_10),
            ("tau_12", self.tau_12),
            ("tau_02", self.tau_02),
            ("tau_23", self.tau_23),
            ("tau_20", self.tau_20),
            ("tau_30", self.tau_30),
        ]
    }
}

impl Default for TimescaleTable {
    fn default() -> Self {
        Self::reference()
    }
}

/// `1 - exp(-x)` for positive `x`, zero otherwise.
pub fn gamma(x: f64) -> Result<f64> {
    ensure_finite("gamma argument", x)?;
    Ok(if x > 0.0 { -(-x).exp_m1() } else { 0.0 })
}

/// Area fractions `(sigma_cs, sigma_c, sigma_d, sigma_s)` on the unit simplex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FractionVector([f64; 4]);

impl FractionVector {
    pub fn new(values: [f64; 4]) -> Result<Self> {
        for v in values {
            ensure_finite("fraction", v)?;
            if v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "fraction {v} is negative in {values:?}"
                )));
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidParameter(format!(
                "fractions {values:?} sum to {sum}, not 1"
            )));
        }
        Ok(Self(values))
    }

    /// Rescales non-negative weights onto the simplex.
    pub fn from_weights(weights: [f64; 4]) -> Result<Self> {
        let mut total = 0.0;
        for w in weights {
            ensure_finite("weight", w)?;
            if w < 0.0 {
                return Err(Error::InvalidParameter(format!("weight {w} is negative")));
            }
            total += w;
        }
        if total <= 0.0 {
            return Err(Error::InvalidParameter("all weights are zero".into()));
        }
        Ok(Self(weights.map(|w| w / total)))
    }

    pub fn uniform() -> Self {
        Self([0.25; 4])
    }

    pub fn vertex(state: CloudState) -> Self {
        let mut v = [0.0; 4];
        v[state.index()] = 1.0;
        Self(v)
    }

    pub(crate) fn from_raw(values: [f64; 4]) -> Self {
        Self(values)
    }

    #[inline]
    pub fn get(&self, state: CloudState) -> f64 {
        self.0[state.index()]
    }

    #[inline]
    pub fn as_array(&self) -> &[f64; 4] {
        &self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// The same direction scaled to unit Euclidean length, as loaded into
    /// a quantum register.
    pub fn unit_amplitudes(&self) -> [f64; 4] {
        let n = self.l2_norm();
        self.0.map(|v| v / n)
    }

    pub fn max_abs_diff(&self, other: &FractionVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Default for FractionVector {
    fn default() -> Self {
        Self::uniform()
    }
}

/// Per-hour transition rates, `r[l][k]` for `l -> k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateMatrix([[f64; 4]; 4]);

impl RateMatrix {
    /// Accepts an arbitrary rate table provided it respects the model's
    /// zero pattern and has non-negative finite off-diagonal entries.
    pub fn new(mut r: [[f64; 4]; 4]) -> Result<Self> {
        for from in CloudState::ALL {
            for to in CloudState::ALL {
                let v = r[from.index()][to.index()];
                if from == to {
                    continue;
                }
                ensure_finite("rate", v)?;
                if v < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "rate {from} -> {to} is negative ({v})"
                    )));
                }
                if CloudState::is_forbidden(from, to) && v != 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "transition {from} -> {to} is forbidden but has rate {v}"
                    )));
                }
            }
            r[from.index()][from.index()] = 0.0;
        }
        Ok(Self(r))
    }

    #[inline]
    pub fn rate(&self, from: CloudState, to: CloudState) -> f64 {
        self.0[from.index()][to.index()]
    }

    pub fn as_array(&self) -> &[[f64; 4]; 4] {
        &self.0
    }

    /// Total exit rate of a state.
    pub fn exit_rate(&self, from: CloudState) -> f64 {
        self.0[from.index()].iter().sum()
    }
}

/// Transition rates for a uniform environment.
pub fn transition_rates(env: &EnvParams, taus: &TimescaleTable) -> RateMatrix {
    // Arguments are already validated finite, so gamma cannot fail here.
    let gc = gamma(env.cape).unwrap_or(0.0);
    let gd = gamma(env.dryness).unwrap_or(0.0);
    let mut r = [[0.0; 4]; 4];
    r[0][1] = gc * gd / taus.tau_01;
    r[0][2] = gc * (1.0 - gd) / taus.tau_02;
    r[1][0] = gd / taus.tau_10;
    r[1][2] = gc * (1.0 - gd) / taus.tau_12;
    r[2][0] = (1.0 - gc) / taus.tau_20;
    r[2][3] = 1.0 / taus.tau_23;
    r[3][0] = 1.0 / taus.tau_30;
    RateMatrix(r)
}

/// Column-stochastic one-step matrix, `p[k][l] = Prob{l -> k}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StochasticMatrix([[f64; 4]; 4]);

impl StochasticMatrix {
    pub fn new(p: [[f64; 4]; 4]) -> Result<Self> {
        for l in 0..4 {
            let mut col = 0.0;
            for row in &p {
                let v = ensure_finite("probability", row[l])?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidParameter(format!(
                        "probability {v} in column {l} outside [0, 1]"
                    )));
                }
                col += v;
            }
            if (col - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::InvalidParameter(format!(
                    "column {l} sums to {col}, not 1"
                )));
            }
        }
        Ok(Self(p))
    }

    pub fn identity() -> Self {
        let mut p = [[0.0; 4]; 4];
        for (i, row) in p.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self(p)
    }

    /// Probability of `from -> to` within one step.
    #[inline]
    pub fn prob(&self, from: CloudState, to: CloudState) -> f64 {
        self.0[to.index()][from.index()]
    }

    pub fn as_array(&self) -> &[[f64; 4]; 4] {
        &self.0
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&self.0.map(|row| row.to_vec()))
    }

    pub fn apply(&self, sigma: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (o, row) in out.iter_mut().zip(self.0.iter()) {
            *o = row.iter().zip(sigma.iter()).map(|(p, s)| p * s).sum();
        }
        out
    }
}

/// First-order transition matrix over a step of `dt` hours.
pub fn transition_matrix(rates: &RateMatrix, dt: f64) -> Result<StochasticMatrix> {
    ensure_finite("dt", dt)?;
    if dt < 0.0 {
        return Err(Error::InvalidParameter(format!("dt = {dt} must be >= 0")));
    }
    let mut p = [[0.0; 4]; 4];
    for from in CloudState::ALL {
        let l = from.index();
        let mut leave = 0.0;
        for to in CloudState::ALL {
            let k = to.index();
            if k != l {
                let prob = rates.0[l][k] * dt;
                p[k][l] = prob;
                leave += prob;
            }
        }
        let stay = 1.0 - leave;
        if stay < 0.0 {
            return Err(Error::StepTooLarge {
                dt,
                state: from,
                diagonal: stay,
            });
        }
        p[l][l] = stay;
    }
    Ok(StochasticMatrix(p))
}

/// `P * sigma`. The environment is uniform over sites, so the site average
/// of the per-site matrices is the matrix itself.
pub fn deterministic_step(p: &StochasticMatrix, sigma: &FractionVector) -> FractionVector {
    FractionVector(p.apply(&sigma.0))
}

/// Stationary fractions of the rate generator, normalized to the simplex.
pub fn stationary_fractions(rates: &RateMatrix) -> Result<FractionVector> {
    // Generator Q with Q[k][l] = r[l][k] off the diagonal and -exit(l) on it;
    // the last balance equation is replaced by the normalization row.
    let mut q = [[0.0; 5]; 4];
    for l in 0..4 {
        for k in 0..4 {
            q[k][l] = if k == l {
                -rates.0[l].iter().sum::<f64>()
            } else {
                rates.0[l][k]
            };
        }
    }
    q[3] = [1.0, 1.0, 1.0, 1.0, 1.0];

    let scale = rates
        .0
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&a, &b| q[a][col].abs().total_cmp(&q[b][col].abs()))
            .unwrap_or(col);
        if q[pivot][col].abs() < 1e-12 * scale {
            return Err(Error::NoUniqueEquilibrium);
        }
        q.swap(col, pivot);
        for row in 0..4 {
            if row != col {
                let f = q[row][col] / q[col][col];
                for c in col..5 {
                    q[row][c] -= f * q[col][c];
                }
            }
        }
    }
    let mut x = [0.0; 4];
    for (i, xi) in x.iter_mut().enumerate() {
        // Round-off can leave tiny negative components.
        *xi = (q[i][4] / q[i][i]).max(0.0);
    }
    FractionVector::from_weights(x)
}
