//! Exact statevector simulation of the four-qubit SMCM circuit.
//!
//! Register layout is `|a0 a1 q0 q1>` with `a0` the most significant bit, so
//! basis index = `8*a0 + 4*a1 + 2*q0 + q1`. The ancilla-00 block (indices 0..4)
//! carries `(1/2) * A_enc * sigma_hat`, where `sigma_hat` is the unit-length
//! fraction vector and `A_enc` the matrix realized by the LCU.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;

use crate::cloud::{deterministic_step, FractionVector, StochasticMatrix};
use crate::error::{Error, Result};
use crate::lcu::LcuDecomposition;
use crate::linalg::{unitary_completion, ComplexMatrix};

pub const NUM_QUBITS: usize = 4;
pub const DIM: usize = 1 << NUM_QUBITS;
pub const NORM_TOL: f64 = 1e-10;
pub const UNITARY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Qubit {
    A0,
    A1,
    Q0,
    Q1,
}

impl Qubit {
    /// Weight of this qubit's bit in the basis index.
    #[inline]
    pub fn mask(self) -> usize {
        match self {
            Qubit::A0 => 8,
            Qubit::A1 => 4,
            Qubit::Q0 => 2,
            Qubit::Q1 => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    amps: [Complex64; DIM],
}

impl Default for Statevector {
    fn default() -> Self {
        Self::zero()
    }
}

impl Statevector {
    /// `|0000>`.
    pub fn zero() -> Self {
        let mut amps = [Complex64::new(0.0, 0.0); DIM];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn from_amplitudes(amps: [Complex64; DIM]) -> Result<Self> {
        let s = Self { amps };
        let norm = s.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(s)
    }

    pub fn amplitudes(&self) -> &[Complex64; DIM] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Amplitudes of the data register for a fixed ancilla value
    /// `ancilla = 2*a0 + a1`.
    pub fn block(&self, ancilla: usize) -> [Complex64; 4] {
        let base = 4 * ancilla;
        [
            self.amps[base],
            self.amps[base + 1],
            self.amps[base + 2],
            self.amps[base + 3],
        ]
    }

    pub fn apply(&mut self, gate: &GateOp) {
        let k = gate.targets.len();
        let local = 1usize << k;
        let target_mask: usize = gate.targets.iter().map(|q| q.mask()).sum();
        let (control_mask, control_value) = gate.controls.iter().fold((0, 0), |(m, v), (q, bit)| {
            (m | q.mask(), if *bit { v | q.mask() } else { v })
        });

        let mut scratch = [Complex64::new(0.0, 0.0); DIM];
        for base in 0..DIM {
            if base & target_mask != 0 || base & control_mask != control_value {
                continue;
            }
            // Local index: first target is the most significant bit.
            let index_of = |l: usize| {
                gate.targets.iter().enumerate().fold(base, |acc, (t, q)| {
                    if l >> (k - 1 - t) & 1 == 1 {
                        acc | q.mask()
                    } else {
                        acc
                    }
                })
            };
            for (l, s) in scratch.iter_mut().take(local).enumerate() {
                *s = self.amps[index_of(l)];
            }
            for row in 0..local {
                let v = (0..local).map(|col| gate.matrix[(row, col)] * scratch[col]).sum();
                self.amps[index_of(row)] = v;
            }
        }
    }
}

/// Unitary acting on one or two target qubits, optionally conditioned on
/// other qubits holding given values.
#[derive(Clone, Debug)]
pub struct GateOp {
    matrix: ComplexMatrix,
    targets: Vec<Qubit>,
    controls: Vec<(Qubit, bool)>,
}

impl GateOp {
    pub fn new(matrix: ComplexMatrix, targets: Vec<Qubit>, controls: Vec<(Qubit, bool)>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::InvalidGate("no target qubits".into()));
        }
        if matrix.dim() != 1 << targets.len() {
            return Err(Error::InvalidGate(format!(
                "{}x{} matrix cannot act on {} qubit(s)",
                matrix.dim(),
                matrix.dim(),
                targets.len()
            )));
        }
        let mut seen = 0usize;
        for q in targets.iter().chain(controls.iter().map(|(q, _)| q)) {
            if seen & q.mask() != 0 {
                return Err(Error::InvalidGate(format!("qubit {q:?} used twice")));
            }
            seen |= q.mask();
        }
        let residual = matrix.unitarity_residual();
        if residual > UNITARY_TOL {
            return Err(Error::NonUnitary(residual));
        }
        Ok(Self {
            matrix,
            targets,
            controls,
        })
    }

    pub fn hadamard(q: Qubit) -> Self {
        let h = ComplexMatrix::from_real_rows(&[
            vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2],
            vec![FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
        ]);
        Self {
            matrix: h,
            targets: vec![q],
            controls: Vec::new(),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn targets(&self) -> &[Qubit] {
        &self.targets
    }

    pub fn controls(&self) -> &[(Qubit, bool)] {
        &self.controls
    }
}

/// Gate sequence with the boundaries of its logical stages.
#[derive(Clone, Debug, Default)]
pub struct Circuit {
    pub gates: Vec<GateOp>,
    /// Gate counts after which each stage ends.
    pub stage_ends: Vec<usize>,
}

impl Circuit {
    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Evolves `|0000>` through every gate.
    pub fn run(&self) -> Statevector {
        run_statevector(&self.gates)
    }

    /// States at the end of each stage.
    pub fn run_stages(&self) -> Vec<Statevector> {
        let mut state = Statevector::zero();
        let mut out = Vec::with_capacity(self.stage_ends.len());
        let mut done = 0;
        for &end in &self.stage_ends {
            for g in &self.gates[done..end] {
                state.apply(g);
            }
            done = end;
            out.push(state.clone());
        }
        out
    }
}

pub fn run_statevector(gates: &[GateOp]) -> Statevector {
    let mut state = Statevector::zero();
    for g in gates {
        state.apply(g);
    }
    state
}

/// The SMCM circuit: Hadamards on both ancillas and state preparation of the
/// unit fraction vector, then `F_j` controlled on ancilla value `j - 1`, then
/// Hadamards on both ancillas again.
pub fn build_smcm_circuit(sigma: &FractionVector, lcu: &LcuDecomposition) -> Result<Circuit> {
    let u_init = unitary_completion(&sigma.unit_amplitudes())?;
    let data = vec![Qubit::Q0, Qubit::Q1];
    let mut gates = vec![
        GateOp::hadamard(Qubit::A0),
        GateOp::hadamard(Qubit::A1),
        GateOp::new(u_init, data.clone(), Vec::new())?,
    ];
    for (j, f) in lcu.unitaries().iter().enumerate() {
        let controls = vec![(Qubit::A0, j & 2 != 0), (Qubit::A1, j & 1 != 0)];
        gates.push(GateOp::new(f.clone(), data.clone(), controls)?);
    }
    gates.push(GateOp::hadamard(Qubit::A0));
    gates.push(GateOp::hadamard(Qubit::A1));
    Ok(Circuit {
        gates,
        stage_ends: vec![3, 7, 9],
    })
}

pub fn analytic_probabilities(state: &Statevector) -> [f64; DIM] {
    state.amps.map(|z| z.norm_sqr())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotCounts {
    pub counts: [u64; DIM],
    pub n_shots: u64,
}

impl ShotCounts {
    pub fn new(counts: [u64; DIM]) -> Self {
        Self {
            counts,
            n_shots: counts.iter().sum(),
        }
    }
}

/// Inverse-CDF sampling of `n_shots` measurements in the computational basis.
pub fn sample_shots<R: Rng + ?Sized>(state: &Statevector, n_shots: u64, rng: &mut R) -> ShotCounts {
    let probs = analytic_probabilities(state);
    let mut cdf = [0.0; DIM];
    let mut acc = 0.0;
    for (c, p) in cdf.iter_mut().zip(probs) {
        acc += p;
        *c = acc;
    }
    // Draws beyond the rounded total fall into the last outcome with mass.
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let total = acc;
    let mut counts = [0u64; DIM];
    for _ in 0..n_shots {
        let u: f64 = rng.random::<f64>() * total;
        let idx = cdf.partition_point(|&c| c <= u).min(last);
        counts[idx] += 1;
    }
    ShotCounts { counts, n_shots }
}

/// Fractions recovered from the ancilla-00 outcomes plus the postselection rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decoded {
    pub sigma: FractionVector,
    pub postselect_rate: f64,
}

/// Square roots of the ancilla-00 weights, renormalized onto the simplex.
pub fn decode_weights(weights: &[f64; DIM]) -> Result<Decoded> {
    let total: f64 = weights.iter().sum();
    let kept: f64 = weights[..4].iter().sum();
    if kept <= 0.0 {
        return Err(Error::InvalidParameter(
            "no weight in the ancilla-00 block".into(),
        ));
    }
    let roots = [weights[0], weights[1], weights[2], weights[3]].map(f64::sqrt);
    Ok(Decoded {
        sigma: FractionVector::from_weights(roots)?,
        postselect_rate: kept / total,
    })
}

pub fn decode_fractions(counts: &ShotCounts) -> Result<Decoded> {
    if counts.counts[..4].iter().all(|&c| c == 0) {
        return Err(Error::InsufficientShots {
            n_shots: counts.n_shots,
        });
    }
    decode_weights(&counts.counts.map(|c| c as f64))
}

/// One time step through the circuit with `n_shots` measurements.
pub fn quantum_step<R: Rng + ?Sized>(
    sigma: &FractionVector,
    lcu: &LcuDecomposition,
    n_shots: u64,
    rng: &mut R,
) -> Result<Decoded> {
    let state = build_smcm_circuit(sigma, lcu)?.run();
    decode_fractions(&sample_shots(&state, n_shots, rng))
}

/// Infinite-shot limit of [`quantum_step`]: decodes the Born probabilities.
pub fn quantum_step_exact(sigma: &FractionVector, lcu: &LcuDecomposition) -> Result<Decoded> {
    let state = build_smcm_circuit(sigma, lcu)?.run();
    decode_weights(&analytic_probabilities(&state))
}

/// Closed-form Born probabilities of the ancilla-00 outcomes:
/// `(1/4) * (A sigma)_k^2 / (scale^2 * ||sigma||^2)`.
pub fn ancilla00_probabilities(
    p: &StochasticMatrix,
    scale: f64,
    sigma: &FractionVector,
) -> [f64; 4] {
    let next = deterministic_step(p, sigma);
    let denom = 4.0 * scale * scale * sigma.l2_norm().powi(2);
    next.as_array().map(|v| v * v / denom)
}
