//! Complex-baseband simulation of adaptive channel equalization.
//!
//! The crate models the classic single-carrier chain: QPSK symbols pass
//! through a dispersive IIR channel, pick up additive white Gaussian noise,
//! and are restored by a short adaptive FIR equalizer. Two families of
//! adaptation are implemented:
//!
//! * trained least-mean-square, which follows a known reference sequence;
//! * blind constant-modulus updates (four kernel variants), which exploit
//!   only the fact that the transmitted constellation has constant modulus.
//!
//! Everything is deterministic: all randomness flows from a seeded
//! generator pinned in [`noise`], so runs reproduce bit for bit across
//! machines. The [`harness`] module wires the pieces into full experiments
//! with learning curves, ambiguity alignment and convergence metrics.

pub mod channel;
pub mod equalizer;
pub mod error;
pub mod harness;
pub mod noise;
pub mod qpsk;

pub use error::{Error, Result};
pub use num_complex::Complex64;
