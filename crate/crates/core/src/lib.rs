//! Distribution of the area between a spectrally-positive Levy process with
//! secondary jump inputs and its reflected version.
//!
//! The driving process `X` is described by its Laplace exponent `phi` with
//! `E exp(-a X_t) = exp(phi(a) t)`. Whenever the reflected workload `W` would
//! hit zero, the secondary-input process `W^x` instead jumps to level `x`;
//! the quantity of interest is the area
//!
//! ```text
//! A_x = int_0^{T_x} h(W^x_t - W_t) dt
//! ```
//!
//! until the first passage time `T_x`, for a non-negative holding function
//! `h`. The crate provides
//!
//! * [`exponent`] — process specifications, the exponent `phi`, its
//!   derivatives at zero and numerical inverse;
//! * [`inversion`] — power-series reversion giving derivatives of
//!   `phi^{-1}` at zero;
//! * [`area`] — Laplace-Stieltjes transforms, moments, covariances and the
//!   Gaussian limit law of `A_x`;
//! * [`sim`] — an exact event-driven Monte Carlo oracle for finite-activity
//!   specs, plus an Euler grid fallback for Brownian components;
//! * [`inventory`] — the secondary-work ordering problem (optimal order
//!   size, break-even penalty, multi-class variants);
//! * [`verify`] — the cross-oracle invariant suite run by the CLI.

pub mod area;
pub mod error;
#[doc(hidden)]
pub mod testutil;
pub mod exponent;
pub mod holding;
pub mod inventory;
pub mod inversion;
pub mod quad;
pub mod sim;
pub mod stats;
pub mod verify;

pub use area::{GaussianLimit, MomentTable};
pub use error::{Error, Result};
pub use exponent::{JumpDistribution, LaplaceExponent, ProcessSpec};
pub use holding::HoldingFunction;
pub use inventory::{CostModel, OrderDecision};
pub use sim::{EstimateSet, PathRecord, SimEstimate};
