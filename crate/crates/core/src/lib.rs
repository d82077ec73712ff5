//! Link-level simulation and closed-form analysis of downlink bit-interleaved
//! multiple access (BIMA) against conventional power-domain NOMA.
//!
//! The crate is organised bottom-up:
//!
//! * [`constellation`]: Gray-mapped M-QAM shared by both schemes.
//! * [`order_stats`]: ordered Rayleigh power gains (PDF, CDF, MGF, sampling).
//! * [`noma`]: superposition coding, the finite-alphabet power allocation
//!   constraint and the successive interference canceller.
//! * [`bima`]: multiaccess interleaving and the joint-constellation chain.
//! * [`analytic`]: closed-form ergodic capacity, outage and bit error
//!   probability, plus the special functions behind them.
//! * [`fairness`]: Jain's and proportional fairness indices.
//! * [`montecarlo`]: the waveform-level sweep engine.
//! * [`complexity`]: receiver complex-operation counts.
//!
//! With the default `parallel` feature the Monte Carlo engine spreads trial
//! blocks over a rayon pool; without it the same blocks run sequentially and
//! produce bit-identical results.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytic;
pub mod bima;
pub mod complexity;
pub mod constellation;
mod error;
pub mod fairness;
pub mod montecarlo;
pub mod noma;
mod numeric;
pub mod order_stats;
pub mod scenario;

pub use error::{Error, Result};

pub use num_complex::Complex64;
