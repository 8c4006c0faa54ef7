//! Stochastic multicloud model (SMCM) of cloud-type area fractions, solved
//! three ways:
//!
//! * deterministic evolution of the fraction vector by the one-step
//!   transition matrix ([`cloud`]),
//! * lattice Monte Carlo over independent sites ([`montecarlo`]),
//! * a four-qubit circuit that applies the transition matrix as a linear
//!   combination of unitaries ([`lcu`]), simulated exactly and sampled shot by
//!   shot ([`qsim`]).
//!
//! [`experiments`] drives all three and fits the fluctuation scaling laws.

pub mod cloud;
pub mod error;
pub mod experiments;
pub mod lcu;
pub mod linalg;
pub mod montecarlo;
pub mod qsim;

pub use cloud::{
    deterministic_step, gamma, stationary_fractions, transition_matrix, transition_rates,
    CloudState, EnvParams, FractionVector, RateMatrix, StochasticMatrix, TimescaleTable,
};
pub use error::{Error, Result};
pub use experiments::{
    fit_power_law, fluctuation_rms, run_simulation, scaling_scan, shot_gap, ExperimentConfig,
    Mode, ScalingResult, ScanPoint, Shots, TimeSeries,
};
pub use lcu::{decompose, decompose_rescaled, decompose_transition, LcuDecomposition};
pub use qsim::{Circuit, GateOp, Qubit, ShotCounts, Statevector};
