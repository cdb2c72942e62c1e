//! Shared process fixtures for unit and integration tests.

use crate::exponent::{JumpDistribution, ProcessSpec};

/// Brownian-with-drift example: d = -1, sigma2 = 1, no jumps. phi'(0) = 1.
pub fn bm_spec() -> ProcessSpec {
    ProcessSpec::new(-1.0, 1.0, 0.0, None)
}

/// M/M/1-type example: d = -1, lambda = 1, exponential(2) jumps.
/// phi'(0) = phi''(0) = 1/2.
pub fn mm1_spec() -> ProcessSpec {
    ProcessSpec::new(-1.0, 0.0, 1.0, Some(JumpDistribution::Exponential { rate: 2.0 }))
}

/// Deterministic-jump example: d = -1, lambda = 1/2, unit jumps.
/// Same phi'(0) and phi''(0) as the M/M/1 example.
pub fn det_spec() -> ProcessSpec {
    ProcessSpec::new(-1.0, 0.0, 0.5, Some(JumpDistribution::Deterministic { size: 1.0 }))
}

/// Gamma-jump example: d = -1, lambda = 0.4, Gamma(2, 0.5) jumps (EJ = 1).
pub fn gamma_spec() -> ProcessSpec {
    ProcessSpec::new(-1.0, 0.0, 0.4, Some(JumpDistribution::Gamma { shape: 2.0, scale: 0.5 }))
}

/// Uniform-jump example: d = -1, lambda = 0.6, Uniform(0, 2) jumps (EJ = 1).
pub fn unif_spec() -> ProcessSpec {
    ProcessSpec::new(-1.0, 0.0, 0.6, Some(JumpDistribution::Uniform { b: 2.0 }))
}

/// Pure negative drift: T_x is deterministic.
pub fn drift_spec() -> ProcessSpec {
    ProcessSpec::new(-1.0, 0.0, 0.0, None)
}

/// Every finite-activity fixture (exactly simulable).
pub fn finite_activity_catalog() -> Vec<ProcessSpec> {
    vec![mm1_spec(), det_spec(), gamma_spec(), unif_spec(), drift_spec()]
}

/// Every fixture, including the Brownian one.
pub fn full_catalog() -> Vec<ProcessSpec> {
    let mut v = finite_activity_catalog();
    v.push(bm_spec());
    v
}
