//! Truncated coordinates against a biorthogonal system `{(x_n, x_n*)}`.
//!
//! A [`TruncVector`] holds the first `d` coefficients; the dual functional
//! `x_m*` reads coefficient `m`. Basis vectors have unit norm in every
//! [`NormFlavor`].

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TruncVector {
    coeffs: Vec<f64>,
}

impl TruncVector {
    pub fn new(coeffs: Vec<f64>) -> Self {
        TruncVector { coeffs }
    }

    pub fn zeros(dim: usize) -> Self {
        TruncVector { coeffs: vec![0.0; dim] }
    }

    /// The basis vector `x_n`.
    pub fn basis(dim: usize, n: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::IndexOutOfRange { index: n, dim });
        }
        let mut v = Self::zeros(dim);
        v.coeffs[n] = 1.0;
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn scaled(&self, s: f64) -> Self {
        TruncVector { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &TruncVector) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }

    pub fn norm(&self, flavor: NormFlavor) -> f64 {
        norm(self, flavor)
    }

    /// Largest coordinate gap; used for tolerance comparisons.
    pub fn max_abs_diff(&self, other: &TruncVector) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &TruncVector, tol: f64) -> bool {
        self.dim() == other.dim() && self.max_abs_diff(other) <= tol
    }

    /// Lexicographic order on coefficients (IEEE total order).
    pub fn lex_cmp(&self, other: &TruncVector) -> std::cmp::Ordering {
        for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
            match a.total_cmp(b) {
                std::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
        self.dim().cmp(&other.dim())
    }
}

impl Add for &TruncVector {
    type Output = TruncVector;
    fn add(self, rhs: &TruncVector) -> TruncVector {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        TruncVector { coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &TruncVector {
    type Output = TruncVector;
    fn sub(self, rhs: &TruncVector) -> TruncVector {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        TruncVector { coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect() }
    }
}

impl Mul<&TruncVector> for f64 {
    type Output = TruncVector;
    fn mul(self, rhs: &TruncVector) -> TruncVector {
        rhs.scaled(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NormFlavor {
    /// ℓ¹
    Sum,
    /// ℓ²
    #[default]
    Euclid,
    /// ℓ^∞
    Max,
}

/// Which topology convergence diagnostics are measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Topology {
    #[default]
    Norm,
    Weak,
    WeakStar,
}

/// A distance on truncated vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Norm(NormFlavor),
    RhoW,
    DW,
}

impl Metric {
    pub fn distance(&self, a: &TruncVector, b: &TruncVector) -> f64 {
        match self {
            Metric::Norm(f) => norm_of_diff(a.coeffs(), b.coeffs(), *f),
            Metric::RhoW => rho_w(a, b),
            Metric::DW => d_w(a, b),
        }
    }
}

/// Workspace-wide settings shared by every construction in a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub dim: usize,
    #[serde(default)]
    pub norm: NormFlavor,
    #[serde(default)]
    pub topology: Topology,
}

impl Workspace {
    pub fn new(dim: usize, norm: NormFlavor, topology: Topology) -> Self {
        Workspace { dim, norm, topology }
    }

    pub fn metric(&self) -> Metric {
        match self.topology {
            Topology::Norm => Metric::Norm(self.norm),
            Topology::Weak => Metric::RhoW,
            Topology::WeakStar => Metric::DW,
        }
    }
}

/// `x_m*(v)`.
pub fn dual_pairing(m: usize, v: &TruncVector) -> Result<f64> {
    v.coeffs
        .get(m)
        .copied()
        .ok_or(Error::IndexOutOfRange { index: m, dim: v.dim() })
}

pub fn norm(v: &TruncVector, flavor: NormFlavor) -> f64 {
    let c = v.coeffs();
    match flavor {
        NormFlavor::Sum => c.iter().map(|x| x.abs()).sum(),
        NormFlavor::Euclid => c.iter().map(|x| x * x).sum::<f64>().sqrt(),
        NormFlavor::Max => c.iter().fold(0.0, |m, x| m.max(x.abs())),
    }
}

fn norm_of_diff(a: &[f64], b: &[f64], flavor: NormFlavor) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let it = a.iter().zip(b).map(|(x, y)| x - y);
    match flavor {
        NormFlavor::Sum => it.map(f64::abs).sum(),
        NormFlavor::Euclid => it.map(|x| x * x).sum::<f64>().sqrt(),
        NormFlavor::Max => it.fold(0.0, |m, x| m.max(x.abs())),
    }
}

fn weighted_coordinate_distance(a: &TruncVector, b: &TruncVector) -> f64 {
    assert_eq!(a.dim(), b.dim(), "dimension mismatch");
    let mut w = 0.5;
    let mut s = 0.0;
    for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
        s += w * (x - y).abs();
        w *= 0.5;
    }
    s
}

/// Weak metric `Σ_m 2^{-(m+1)} |x_m*(v - w)|`.
pub fn rho_w(v: &TruncVector, w: &TruncVector) -> f64 {
    weighted_coordinate_distance(v, w)
}

/// Weak* metric on dual elements, `Σ_m 2^{-(m+1)} |v(x_m) - w(x_m)|`.
///
/// With the biorthogonal truncation the predual pairing reads the same
/// coefficients, so the arithmetic matches [`rho_w`].
pub fn d_w(v: &TruncVector, w: &TruncVector) -> f64 {
    weighted_coordinate_distance(v, w)
}
