//! Kernel functions on inputs and outputs, together with Gram-matrix and
//! cross-kernel-vector construction.
//!
//! Points are either real feature vectors or discrete labels. The delta
//! kernel compares any two points through their canonical encoding, so a
//! composite output such as a rating vector compares componentwise.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A kernel input or output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Vector(Vec<f64>),
    Label(String),
}

impl Point {
    pub fn scalar(v: f64) -> Self {
        Point::Vector(vec![v])
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Point::Vector(v) => Some(v),
            Point::Label(_) => None,
        }
    }

    /// The single coordinate of a one-dimensional vector point.
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Point::Vector(v) if v.len() == 1 => Some(v[0]),
            _ => None,
        }
    }

    /// Canonical encoding used for equality by the delta kernel. `-0.0` and
    /// `0.0` encode identically; every NaN encodes identically.
    pub fn canonical(&self) -> String {
        match self {
            Point::Label(s) => format!("L:{s}"),
            Point::Vector(v) => {
                let mut out = String::from("V:");
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    let bits = if *x == 0.0 {
                        0u64
                    } else if x.is_nan() {
                        f64::NAN.to_bits()
                    } else {
                        x.to_bits()
                    };
                    out.push_str(&format!("{bits:016x}"));
                }
                out
            }
        }
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point::Vector(v)
    }
}

impl From<&[f64]> for Point {
    fn from(v: &[f64]) -> Self {
        Point::Vector(v.to_vec())
    }
}

impl From<&str> for Point {
    fn from(s: &str) -> Self {
        Point::Label(s.to_string())
    }
}

impl From<f64> for Point {
    fn from(v: f64) -> Self {
        Point::scalar(v)
    }
}

/// Kernel selection. Serializes as `{"kind": "...", "bandwidth": ...}`,
/// matching the `kernel.kind` / `kernel.bandwidth` configuration keys.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    /// `exp(-|a-b|^2 / (2 bandwidth^2))`
    Gaussian {
        bandwidth: f64,
    },
    /// `exp(-|a-b| / bandwidth)`
    Abel {
        bandwidth: f64,
    },
    Delta,
}

impl KernelSpec {
    /// Builds a spec from the configuration pair (`kernel.kind`, `kernel.bandwidth`).
    pub fn from_config(kind: &str, bandwidth: Option<f64>) -> Result<Self> {
        let need_bw = || {
            bandwidth.ok_or_else(|| Error::invalid(format!("kernel `{kind}` requires a bandwidth")))
        };
        let spec = match kind {
            "linear" => KernelSpec::Linear,
            "delta" => KernelSpec::Delta,
            "gaussian" => KernelSpec::Gaussian {
                bandwidth: need_bw()?,
            },
            "abel" => KernelSpec::Abel {
                bandwidth: need_bw()?,
            },
            other => return Err(Error::invalid(format!("unknown kernel kind `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Gaussian { .. } => "gaussian",
            KernelSpec::Abel { .. } => "abel",
            KernelSpec::Delta => "delta",
        }
    }

    pub fn bandwidth(&self) -> Option<f64> {
        match self {
            KernelSpec::Gaussian { bandwidth } | KernelSpec::Abel { bandwidth } => Some(*bandwidth),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.bandwidth() {
            Some(bw) if !(bw > 0.0 && bw.is_finite()) => Err(Error::invalid(format!(
                "{} kernel bandwidth must be positive, got {bw}",
                self.kind()
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.bandwidth() {
            Some(bw) => write!(f, "{}(bandwidth={bw})", self.kind()),
            None => f.write_str(self.kind()),
        }
    }
}

fn vectors<'a>(spec: &KernelSpec, a: &'a Point, b: &'a Point) -> Result<(&'a [f64], &'a [f64])> {
    match (a.as_vector(), b.as_vector()) {
        (Some(x), Some(y)) if x.len() == y.len() => Ok((x, y)),
        (Some(x), Some(y)) => Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            x.len(),
            y.len()
        ))),
        _ => Err(Error::invalid(format!(
            "{} kernel needs vector points, got a label",
            spec.kind()
        ))),
    }
}

fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Evaluates `k(a, b)`.
pub fn kernel_eval(spec: &KernelSpec, a: &Point, b: &Point) -> Result<f64> {
    spec.validate()?;
    match *spec {
        KernelSpec::Delta => Ok(if a.canonical() == b.canonical() {
            1.0
        } else {
            0.0
        }),
        KernelSpec::Linear => {
            let (x, y) = vectors(spec, a, b)?;
            Ok(x.iter().zip(y).map(|(p, q)| p * q).sum())
        }
        KernelSpec::Gaussian { bandwidth } => {
            let (x, y) = vectors(spec, a, b)?;
            Ok((-sq_dist(x, y) / (2.0 * bandwidth * bandwidth)).exp())
        }
        KernelSpec::Abel { bandwidth } => {
            let (x, y) = vectors(spec, a, b)?;
            Ok((-sq_dist(x, y).sqrt() / bandwidth).exp())
        }
    }
}

/// Symmetric positive-semidefinite matrix of kernel evaluations.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix(DMatrix<f64>);

impl GramMatrix {
    /// Relative tolerance of the PSD eigenvalue test.
    pub const PSD_EPS: f64 = 1e-10;

    /// Wraps a square, exactly symmetric matrix with finite entries.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid(format!(
                "Gram matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        for i in 0..n {
            for j in 0..i {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::invalid(format!(
                        "Gram matrix not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("Gram matrix has non-finite entries"));
        }
        Ok(GramMatrix(m))
    }

    /// Linear-kernel Gram `F F^T` of the rows of `features`, filled from the
    /// upper triangle so it is exactly symmetric.
    pub fn from_features(features: &DMatrix<f64>) -> Self {
        let n = features.nrows();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = features.row(i).dot(&features.row(j));
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        GramMatrix(m)
    }

    pub fn zeros(n: usize) -> Self {
        GramMatrix(DMatrix::zeros(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.n() == 0 {
            return 0.0;
        }
        SymmetricEigen::new(self.0.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest eigenvalue is at least `-PSD_EPS * trace`.
    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= -Self::PSD_EPS * self.trace().abs()
    }

    /// Principal submatrix on `idx` (rows and columns in the given order).
    pub fn submatrix(&self, idx: &[usize]) -> GramMatrix {
        GramMatrix(self.0.select_rows(idx).select_columns(idx))
    }
}

/// Gram matrix of `points` under `spec`.
pub fn gram(points: &[Point], spec: &KernelSpec) -> Result<GramMatrix> {
    if points.is_empty() {
        return Err(Error::invalid("gram needs at least one point"));
    }
    let n = points.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = kernel_eval(spec, &points[i], &points[j])?;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(GramMatrix(m))
}

/// The vector `v_x` with entries `k(x, x_i)` over the training points.
pub fn cross_vector(train: &[Point], x: &Point, spec: &KernelSpec) -> Result<DVector<f64>> {
    let vals = train
        .iter()
        .map(|p| kernel_eval(spec, p, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(DVector::from_vec(vals))
}

/// Rectangular kernel block `k(a_i, b_j)`.
pub fn cross_matrix(rows: &[Point], cols: &[Point], spec: &KernelSpec) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(rows.len(), cols.len());
    for (i, a) in rows.iter().enumerate() {
        for (j, b) in cols.iter().enumerate() {
            m[(i, j)] = kernel_eval(spec, a, b)?;
        }
    }
    Ok(m)
}
