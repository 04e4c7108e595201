use serde::{Deserialize, Serialize};

/// Numerical thresholds used throughout the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Element-level matrix identities.
    pub mat: f64,
    /// Eigen-residuals and eigenprojection identities.
    pub eig: f64,
    /// Eigenvalue grouping radius.
    pub cluster: f64,
    /// Relative distance from the unit circle still counted as peripheral.
    pub per: f64,
    /// Support threshold relative to the largest eigenvalue of the peripheral image of the identity.
    pub supp: f64,
    /// Invertibility threshold for reduced fixed states.
    pub faith: f64,
    /// Algebra-level identities.
    pub alg: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { mat: 1e-10, eig: 1e-8, cluster: 1e-7, per: 1e-9, supp: 1e-9, faith: 1e-9, alg: 1e-7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    /// `value <= tolerance`
    Upper,
    /// `value >= tolerance`
    Lower,
}

/// A single numeric assertion with its observed margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        let passed = value <= tolerance && value.is_finite();
        Self { name: name.into(), value, tolerance, bound: Bound::Upper, passed }
    }

    /// A check that passes when `value >= threshold` (e.g. a spectral gap).
    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        let passed = value >= threshold && value.is_finite();
        Self { name: name.into(), value, tolerance: threshold, bound: Bound::Lower, passed }
    }
}
