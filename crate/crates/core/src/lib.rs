//! Exact-arithmetic models of no-signaling boxes as one-time-pad crypto-systems.
//!
//! A box shared by Alice (input `x`, output `a`) and Bob (input `y`, output
//! `b`) is described at the hidden-variable level by two output maps and a
//! key distribution: Alice receives `g(x) ⊕ λ`, Bob receives `f(x, y) ⊕ λ`.
//! The observable behaviour is the conditional distribution `P(a,b|x,y)`,
//! held here as exact rationals in a [`CorrelationTable`].
//!
//! The crate is split by concern:
//!
//! - [`boxes`]: box specifications, canonical boxes and exact evaluation.
//! - [`analysis`]: no-signaling checks, CHSH functionals, vertex recognition
//!   and extraction of one-time-pad models from tables.
//! - [`protocols`]: the XOR one-time pad, the one-bit distributed computation
//!   over a pool of PR boxes, and PR-pool simulation of one-time-pad boxes.
//! - [`infotheory`]: Shannon quantities and the random-access-code test of
//!   information causality.
//!
//! Everything is `no_std` with `alloc`; IO and file formats live in the
//! `otplab` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod boxes;
mod error;
pub mod infotheory;
pub mod protocols;
pub mod rational;
mod rng;

pub use boxes::{CorrelationTable, JointKeyDist, KeyDist, NOtpBoxSpec, OtpBoxSpec, Scenario};
pub use error::{Error, Result};
pub use rational::Rational;
pub use rng::SeedState;
