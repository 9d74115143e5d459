//! Finite-dimensional algebra substrate: Hermitian arithmetic, positivity,
//! eigendecomposition-based functional calculus, states, and the projection
//! constructions used by every other module.
//!
//! Two kinds of algebra are supported: tuples over a finite spectrum
//! (commutative) and full complex matrix algebras. All operations are pure;
//! values are immutable after construction.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::feasibility::{self, Cmp, LinearProgram};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Eigenvalues closer than this multiple of the tolerance are merged into one
/// cluster before chains and spectral projections are built.
pub const CLUSTER_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "size")]
pub enum AlgebraKind {
    /// Tuples over a finite spectrum of the given size.
    Commutative(usize),
    /// Full matrix algebra of the given dimension.
    Matrix(usize),
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct AlgebraHandle {
    pub kind: AlgebraKind,
    pub tolerance: f64,
}

impl PartialEq for AlgebraHandle {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl AlgebraHandle {
    pub fn commutative(points: usize) -> Self {
        assert!(points >= 1, "spectrum size must be >= 1");
        AlgebraHandle {
            kind: AlgebraKind::Commutative(points),
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn matrix(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be >= 1");
        AlgebraHandle {
            kind: AlgebraKind::Matrix(dim),
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        assert!(tol >= 0.0);
        self.tolerance = tol;
        self
    }

    /// Spectrum size or matrix dimension.
    pub fn dim(&self) -> usize {
        match self.kind {
            AlgebraKind::Commutative(n) | AlgebraKind::Matrix(n) => n,
        }
    }

    pub fn is_commutative(&self) -> bool {
        matches!(self.kind, AlgebraKind::Commutative(_))
    }

    /// Threshold below which eigenvalues are merged.
    pub fn cluster_tol(&self) -> f64 {
        CLUSTER_FACTOR * self.tolerance.max(f64::EPSILON)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.kind != other.kind {
            return Err(Error::AlgebraMismatch(format!(
                "{:?} vs {:?}",
                self.kind, other.kind
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementData {
    Tuple(Vec<f64>),
    Matrix(DMatrix<Complex64>),
}

/// A self-adjoint element of a finite-dimensional algebra.
#[derive(Debug, Clone)]
pub struct HermitianElement {
    pub algebra: AlgebraHandle,
    pub data: ElementData,
}

impl HermitianElement {
    pub fn from_tuple(algebra: AlgebraHandle, values: Vec<f64>) -> Result<Self> {
        match algebra.kind {
            AlgebraKind::Commutative(n) if n == values.len() => Ok(HermitianElement {
                algebra,
                data: ElementData::Tuple(values),
            }),
            AlgebraKind::Commutative(n) => Err(Error::DimensionMismatch(format!(
                "expected {n} spectrum values, got {}",
                values.len()
            ))),
            AlgebraKind::Matrix(_) => Err(Error::KindMismatch {
                expected: "commutative",
            }),
        }
    }

    /// Builds a matrix element, verifying hermiticity within tolerance and
    /// symmetrizing to keep later arithmetic drift-free.
    pub fn from_matrix(algebra: AlgebraHandle, m: DMatrix<Complex64>) -> Result<Self> {
        let n = match algebra.kind {
            AlgebraKind::Matrix(n) => n,
            AlgebraKind::Commutative(_) => {
                return Err(Error::KindMismatch { expected: "matrix" })
            }
        };
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "expected {n}x{n}, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let asym = (&m - m.adjoint()).norm();
        let scale = m.norm().max(1.0);
        if asym > algebra.tolerance.max(1e-12) * scale * 10.0 {
            return Err(Error::NotHermitian(asym));
        }
        let sym = (&m + m.adjoint()).scale(0.5);
        Ok(HermitianElement {
            algebra,
            data: ElementData::Matrix(sym),
        })
    }

    pub fn zero(algebra: AlgebraHandle) -> Self {
        Self::scalar(algebra, 0.0)
    }

    pub fn identity(algebra: AlgebraHandle) -> Self {
        Self::scalar(algebra, 1.0)
    }

    pub fn scalar(algebra: AlgebraHandle, alpha: f64) -> Self {
        let data = match algebra.kind {
            AlgebraKind::Commutative(n) => ElementData::Tuple(vec![alpha; n]),
            AlgebraKind::Matrix(n) => ElementData::Matrix(
                DMatrix::from_diagonal_element(n, n, Complex64::new(alpha, 0.0)),
            ),
        };
        HermitianElement { algebra, data }
    }

    pub fn diag(algebra: AlgebraHandle, values: &[f64]) -> Result<Self> {
        match algebra.kind {
            AlgebraKind::Commutative(_) => Self::from_tuple(algebra, values.to_vec()),
            AlgebraKind::Matrix(n) => {
                if values.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "expected {n} diagonal values, got {}",
                        values.len()
                    )));
                }
                let m = DMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        Complex64::new(values[i], 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                });
                Ok(HermitianElement {
                    algebra,
                    data: ElementData::Matrix(m),
                })
            }
        }
    }

    pub fn as_tuple(&self) -> Result<&[f64]> {
        match &self.data {
            ElementData::Tuple(v) => Ok(v),
            ElementData::Matrix(_) => Err(Error::KindMismatch {
                expected: "commutative",
            }),
        }
    }

    pub fn as_matrix(&self) -> Result<&DMatrix<Complex64>> {
        match &self.data {
            ElementData::Matrix(m) => Ok(m),
            ElementData::Tuple(_) => Err(Error::KindMismatch { expected: "matrix" }),
        }
    }

    /// The matrix realization: diagonal for the commutative kind.
    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        match &self.data {
            ElementData::Matrix(m) => m.clone(),
            ElementData::Tuple(v) => {
                let n = v.len();
                DMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        Complex64::new(v[i], 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
            }
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.algebra.check_same(&other.algebra)?;
        let data = match (&self.data, &other.data) {
            (ElementData::Tuple(a), ElementData::Tuple(b)) => {
                ElementData::Tuple(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (ElementData::Matrix(a), ElementData::Matrix(b)) => ElementData::Matrix(a + b),
            _ => unreachable!("algebra kinds agree"),
        };
        Ok(HermitianElement {
            algebra: self.algebra,
            data,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, alpha: f64) -> Self {
        let data = match &self.data {
            ElementData::Tuple(v) => ElementData::Tuple(v.iter().map(|x| alpha * x).collect()),
            ElementData::Matrix(m) => {
                ElementData::Matrix(m.scale(alpha))
            }
        };
        HermitianElement {
            algebra: self.algebra,
            data,
        }
    }

    pub fn shift(&self, alpha: f64) -> Self {
        self.add(&Self::scalar(self.algebra, alpha)).expect("same algebra")
    }

    /// Operator product. For Hermitian inputs the result need not be
    /// Hermitian; callers symmetrize where needed.
    pub fn mul_raw(&self, other: &Self) -> Result<DMatrix<Complex64>> {
        self.algebra.check_same(&other.algebra)?;
        Ok(self.to_matrix() * other.to_matrix())
    }

    /// Eigenvalues in ascending order (tuple entries sorted for the
    /// commutative kind).
    pub fn eigenvalues(&self) -> Vec<f64> {
        match &self.data {
            ElementData::Tuple(v) => {
                let mut s = v.clone();
                s.sort_by(|a, b| a.partial_cmp(b).unwrap());
                s
            }
            ElementData::Matrix(m) => {
                let mut s: Vec<f64> = m
                    .clone()
                    .symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .copied()
                    .collect();
                s.sort_by(|a, b| a.partial_cmp(b).unwrap());
                s
            }
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()
            .first()
            .copied()
            .unwrap_or(0.0)
    }

    /// Operator norm (largest absolute eigenvalue).
    pub fn operator_norm(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    /// Full eigendecomposition; for the commutative kind the "vectors" are the
    /// standard basis in spectrum order.
    pub fn eigen(&self) -> Eigen {
        match &self.data {
            ElementData::Tuple(v) => {
                let n = v.len();
                let mut idx: Vec<usize> = (0..n).collect();
                idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
                let values: Vec<f64> = idx.iter().map(|&i| v[i]).collect();
                let vectors = DMatrix::from_fn(n, n, |r, c| {
                    if r == idx[c] {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                });
                Eigen { values, vectors }
            }
            ElementData::Matrix(m) => {
                let se = m.clone().symmetric_eigen();
                let n = m.nrows();
                let mut idx: Vec<usize> = (0..n).collect();
                idx.sort_by(|&a, &b| {
                    se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap()
                });
                let values: Vec<f64> = idx.iter().map(|&i| se.eigenvalues[i]).collect();
                let mut vectors = DMatrix::zeros(n, n);
                for (c, &i) in idx.iter().enumerate() {
                    vectors.set_column(c, &se.eigenvectors.column(i));
                }
                Eigen { values, vectors }
            }
        }
    }

    /// Entrywise maximum with zero (positive part in the commutative kind,
    /// spectral positive part for matrices).
    pub fn positive_part(&self) -> Self {
        match &self.data {
            ElementData::Tuple(v) => HermitianElement {
                algebra: self.algebra,
                data: ElementData::Tuple(v.iter().map(|x| x.max(0.0)).collect()),
            },
            ElementData::Matrix(_) => {
                let eig = self.eigen();
                let clipped: Vec<f64> = eig.values.iter().map(|x| x.max(0.0)).collect();
                eig.recompose(self.algebra, &clipped)
            }
        }
    }

    pub fn negative_part(&self) -> Self {
        self.scale(-1.0).positive_part()
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.algebra != other.algebra {
            return false;
        }
        match (&self.data, &other.data) {
            (ElementData::Tuple(a), ElementData::Tuple(b)) => a
                .iter()
                .zip(b)
                .all(|(x, y)| (x - y).abs() <= tol),
            (ElementData::Matrix(a), ElementData::Matrix(b)) => (a - b).norm() <= tol,
            _ => false,
        }
    }

    /// Maximum entry deviation from `other`.
    pub fn distance(&self, other: &Self) -> f64 {
        match (&self.data, &other.data) {
            (ElementData::Tuple(a), ElementData::Tuple(b)) => a
                .iter()
                .zip(b)
                .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs())),
            (ElementData::Matrix(a), ElementData::Matrix(b)) => (a - b)
                .iter()
                .fold(0.0f64, |acc, z| acc.max(z.norm())),
            _ => f64::INFINITY,
        }
    }
}

/// Sorted eigendecomposition.
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

impl Eigen {
    /// U f(Lambda) U* for the provided transformed eigenvalues.
    pub fn recompose(&self, algebra: AlgebraHandle, new_values: &[f64]) -> HermitianElement {
        match algebra.kind {
            AlgebraKind::Commutative(n) => {
                // vectors is a permutation; undo it.
                let mut v = vec![0.0; n];
                for (c, val) in new_values.iter().enumerate() {
                    for r in 0..n {
                        if self.vectors[(r, c)].re > 0.5 {
                            v[r] = *val;
                        }
                    }
                }
                HermitianElement {
                    algebra,
                    data: ElementData::Tuple(v),
                }
            }
            AlgebraKind::Matrix(n) => {
                let lambda = DMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        Complex64::new(new_values[i], 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                });
                let m = &self.vectors * lambda * self.vectors.adjoint();
                let sym = (&m + m.adjoint()).scale(0.5);
                HermitianElement {
                    algebra,
                    data: ElementData::Matrix(sym),
                }
            }
        }
    }

    /// Groups sorted eigenvalues into clusters no wider than `width`,
    /// returning (cluster mean, member indices).
    pub fn clusters(&self, width: f64) -> Vec<(f64, Vec<usize>)> {
        let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
        for (i, &v) in self.values.iter().enumerate() {
            match out.last_mut() {
                Some((mean, members)) if (v - *mean).abs() <= width => {
                    let k = members.len() as f64;
                    *mean = (*mean * k + v) / (k + 1.0);
                    members.push(i);
                }
                _ => out.push((v, vec![i])),
            }
        }
        out
    }
}

/// An idempotent Hermitian element with cached rank and range basis.
#[derive(Debug, Clone)]
pub struct ProjectionElement {
    pub base: HermitianElement,
    pub rank: usize,
    pub range_basis: DMatrix<Complex64>,
}

impl ProjectionElement {
    pub fn new(base: HermitianElement) -> Result<Self> {
        let tol = base.algebra.tolerance.max(1e-12) * 1e3;
        match &base.data {
            ElementData::Tuple(v) => {
                let mut cleaned = Vec::with_capacity(v.len());
                for &x in v {
                    if (x - 1.0).abs() <= tol.max(1e-6) {
                        cleaned.push(1.0);
                    } else if x.abs() <= tol.max(1e-6) {
                        cleaned.push(0.0);
                    } else {
                        return Err(Error::InvalidInput(format!(
                            "tuple entry {x} is not 0/1"
                        )));
                    }
                }
                let rank = cleaned.iter().filter(|&&x| x == 1.0).count();
                let n = cleaned.len();
                let mut basis = DMatrix::zeros(n, rank);
                let mut c = 0;
                for (i, &x) in cleaned.iter().enumerate() {
                    if x == 1.0 {
                        basis[(i, c)] = Complex64::new(1.0, 0.0);
                        c += 1;
                    }
                }
                Ok(ProjectionElement {
                    base: HermitianElement {
                        algebra: base.algebra,
                        data: ElementData::Tuple(cleaned),
                    },
                    rank,
                    range_basis: basis,
                })
            }
            ElementData::Matrix(m) => {
                let idem = (m * m - m).norm();
                if idem > 1e-6 * m.norm().max(1.0) {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not idempotent (|p^2-p| = {idem:.3e})"
                    )));
                }
                let eig = base.eigen();
                let n = m.nrows();
                let mut cols = Vec::new();
                for (i, &v) in eig.values.iter().enumerate() {
                    if v >= 0.5 {
                        cols.push(i);
                    } else if v > 1e-6 && v < 1.0 - 1e-6 {
                        return Err(Error::InvalidInput(format!(
                            "spectrum value {v} lies strictly between 0 and 1"
                        )));
                    }
                }
                let rank = cols.len();
                let mut basis = DMatrix::zeros(n, rank);
                for (c, &i) in cols.iter().enumerate() {
                    basis.set_column(c, &eig.vectors.column(i));
                }
                let clean = &basis * basis.adjoint();
                let base = HermitianElement {
                    algebra: base.algebra,
                    data: ElementData::Matrix(clean),
                };
                Ok(ProjectionElement {
                    base,
                    rank,
                    range_basis: basis,
                })
            }
        }
    }

    /// Projection onto the span of the given (not necessarily orthonormal)
    /// columns.
    pub fn from_span(algebra: AlgebraHandle, span: &DMatrix<Complex64>) -> Result<Self> {
        let n = algebra.dim();
        if span.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "span rows {} != dim {n}",
                span.nrows()
            )));
        }
        if span.ncols() == 0 {
            return Self::new(HermitianElement::zero(algebra));
        }
        // Orthonormalize by Gram-Schmidt with rank detection.
        let mut basis: Vec<DVector<Complex64>> = Vec::new();
        for c in 0..span.ncols() {
            let mut v: DVector<Complex64> = span.column(c).into();
            for b in &basis {
                let coef = b.dotc(&v);
                v -= b.scale_complex(coef);
            }
            let norm = v.norm();
            if norm > 1e-9 {
                v /= Complex64::new(norm, 0.0);
                basis.push(v);
            }
        }
        let rank = basis.len();
        let mut bm = DMatrix::zeros(n, rank);
        for (c, b) in basis.iter().enumerate() {
            bm.set_column(c, b);
        }
        let p = &bm * bm.adjoint();
        Self::new(HermitianElement::from_matrix(algebra, p)?)
    }

    pub fn zero(algebra: AlgebraHandle) -> Self {
        Self::new(HermitianElement::zero(algebra)).expect("zero is a projection")
    }

    pub fn one(algebra: AlgebraHandle) -> Self {
        Self::new(HermitianElement::identity(algebra)).expect("one is a projection")
    }

    pub fn complement(&self) -> Self {
        let one = HermitianElement::identity(self.base.algebra);
        Self::new(one.sub(&self.base).expect("same algebra")).expect("complement projection")
    }

    /// p <= q as projections (pq = p within tolerance).
    pub fn leq(&self, other: &Self) -> bool {
        let pq = self
            .base
            .mul_raw(&other.base)
            .expect("same algebra");
        (pq - self.base.to_matrix()).norm() <= 1e-7 * (1.0 + self.base.to_matrix().norm())
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.base.approx_eq(&other.base, tol)
    }

    pub fn orthogonal_to(&self, other: &Self) -> bool {
        self.base
            .mul_raw(&other.base)
            .map(|m| m.norm() <= 1e-7)
            .unwrap_or(false)
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        let pq = self.base.mul_raw(&other.base).expect("same algebra");
        let qp = other.base.mul_raw(&self.base).expect("same algebra");
        (pq - qp).norm() <= 1e-7
    }
}

/// Helper trait: scale a complex vector by a complex coefficient.
trait ScaleComplex {
    fn scale_complex(&self, c: Complex64) -> Self;
}

impl ScaleComplex for DVector<Complex64> {
    fn scale_complex(&self, c: Complex64) -> Self {
        self.map(|x| x * c)
    }
}

/// Positive normalized functional: point mass, vector state, or finite convex
/// combination of orthogonal vector states.
#[derive(Debug, Clone)]
pub enum StateFunctional {
    Point { index: usize },
    Vector { xi: DVector<Complex64> },
    Mixture { parts: Vec<(f64, DVector<Complex64>)> },
}

impl StateFunctional {
    pub fn point(index: usize) -> Self {
        StateFunctional::Point { index }
    }

    /// Normalizes the vector; errors on (near-)zero input.
    pub fn vector(xi: DVector<Complex64>) -> Result<Self> {
        let n = xi.norm();
        if n < 1e-12 {
            return Err(Error::InvalidInput("zero state vector".into()));
        }
        Ok(StateFunctional::Vector {
            xi: xi / Complex64::new(n, 0.0),
        })
    }

    pub fn vector_real(coords: &[f64]) -> Result<Self> {
        Self::vector(DVector::from_iterator(
            coords.len(),
            coords.iter().map(|&x| Complex64::new(x, 0.0)),
        ))
    }

    /// Weights must be positive and sum to one within tolerance; vectors must
    /// be pairwise orthogonal unit vectors.
    pub fn mixture(parts: Vec<(f64, DVector<Complex64>)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidInput("empty mixture".into()));
        }
        let total: f64 = parts.iter().map(|(w, _)| *w).sum();
        if (total - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidInput(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        let mut normed = Vec::with_capacity(parts.len());
        for (w, v) in parts {
            if w <= 0.0 {
                return Err(Error::InvalidInput("nonpositive mixture weight".into()));
            }
            let n = v.norm();
            if n < 1e-12 {
                return Err(Error::InvalidInput("zero mixture vector".into()));
            }
            normed.push((w, v / Complex64::new(n, 0.0)));
        }
        for i in 0..normed.len() {
            for j in (i + 1)..normed.len() {
                if normed[i].1.dotc(&normed[j].1).norm() > 1e-8 {
                    return Err(Error::InvalidInput(
                        "mixture vectors are not pairwise orthogonal".into(),
                    ));
                }
            }
        }
        Ok(StateFunctional::Mixture { parts: normed })
    }

    /// Maximally mixed state on a matrix algebra of dimension n.
    pub fn maximally_mixed(n: usize) -> Self {
        let parts = (0..n)
            .map(|i| {
                let mut v = DVector::zeros(n);
                v[i] = Complex64::new(1.0, 0.0);
                (1.0 / n as f64, v)
            })
            .collect();
        StateFunctional::Mixture { parts }
    }

    pub fn is_pure(&self) -> bool {
        match self {
            StateFunctional::Point { .. } | StateFunctional::Vector { .. } => true,
            StateFunctional::Mixture { parts } => parts.len() == 1,
        }
    }

    /// rho(x).
    pub fn eval(&self, x: &HermitianElement) -> Result<f64> {
        match (&x.data, self) {
            (ElementData::Tuple(v), StateFunctional::Point { index }) => v
                .get(*index)
                .copied()
                .ok_or_else(|| Error::DimensionMismatch(format!("point index {index}"))),
            (ElementData::Tuple(v), StateFunctional::Vector { xi }) => {
                if xi.len() != v.len() {
                    return Err(Error::DimensionMismatch("vector state length".into()));
                }
                Ok(v.iter()
                    .zip(xi.iter())
                    .map(|(x, c)| x * c.norm_sqr())
                    .sum())
            }
            (ElementData::Tuple(_), StateFunctional::Mixture { parts }) => {
                let mut acc = 0.0;
                for (w, xi) in parts {
                    acc += w
                        * StateFunctional::Vector { xi: xi.clone() }.eval(x)?;
                }
                Ok(acc)
            }
            (ElementData::Matrix(m), StateFunctional::Vector { xi }) => {
                if xi.len() != m.nrows() {
                    return Err(Error::DimensionMismatch("vector state length".into()));
                }
                let mx = m * xi;
                Ok(xi.dotc(&mx).re)
            }
            (ElementData::Matrix(_), StateFunctional::Mixture { parts }) => {
                let mut acc = 0.0;
                for (w, xi) in parts {
                    acc += w * StateFunctional::Vector { xi: xi.clone() }.eval(x)?;
                }
                Ok(acc)
            }
            (ElementData::Matrix(_), StateFunctional::Point { .. }) => Err(Error::KindMismatch {
                expected: "commutative",
            }),
        }
    }

    /// Density matrix t with rho(x) = tr(t x), for matrix algebras.
    pub fn density(&self, dim: usize) -> Result<DMatrix<Complex64>> {
        match self {
            StateFunctional::Vector { xi } => {
                if xi.len() != dim {
                    return Err(Error::DimensionMismatch("vector state length".into()));
                }
                Ok(xi * xi.adjoint())
            }
            StateFunctional::Mixture { parts } => {
                let mut t = DMatrix::zeros(dim, dim);
                for (w, xi) in parts {
                    if xi.len() != dim {
                        return Err(Error::DimensionMismatch("mixture vector length".into()));
                    }
                    t += (xi * xi.adjoint()).scale(*w);
                }
                Ok(t)
            }
            StateFunctional::Point { .. } => Err(Error::KindMismatch { expected: "matrix" }),
        }
    }
}

/// Membership in the positive cone: least eigenvalue >= -tolerance.
pub fn is_positive(x: &HermitianElement) -> bool {
    x.min_eigenvalue() >= -x.algebra.tolerance
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FuncKind {
    Sqrt,
    Square,
}

/// Functional calculus f(x) = U f(Lambda) U*.
pub fn func_calc(x: &HermitianElement, f: FuncKind) -> Result<HermitianElement> {
    let eig = x.eigen();
    let new_values: Vec<f64> = match f {
        FuncKind::Square => eig.values.iter().map(|v| v * v).collect(),
        FuncKind::Sqrt => {
            if !is_positive(x) {
                return Err(Error::NotPositive(x.min_eigenvalue()));
            }
            eig.values.iter().map(|v| v.max(0.0).sqrt()).collect()
        }
    };
    Ok(eig.recompose(x.algebra, &new_values))
}

/// Minimal projection p with p x = x p = x.
pub fn support_projection(x: &HermitianElement) -> Result<ProjectionElement> {
    if !is_positive(x) {
        return Err(Error::NotPositive(x.min_eigenvalue()));
    }
    let eig = x.eigen();
    let cut = x.algebra.cluster_tol().max(1e-9 * x.operator_norm());
    let values: Vec<f64> = eig
        .values
        .iter()
        .map(|&v| if v > cut { 1.0 } else { 0.0 })
        .collect();
    ProjectionElement::new(eig.recompose(x.algebra, &values))
}

/// The three spectral projections attached to a positive element and a level
/// (or band): maximal sub-support part at or below alpha, minimal part at or
/// above alpha, and the half-open band between alpha and beta.
pub struct SpectralTriple {
    /// p_{x,alpha}: maximal sub-support projection commuting with x with
    /// p x <= alpha p.
    pub low: ProjectionElement,
    /// p_x^alpha: minimal projection commuting with x with p x >= alpha p.
    pub high: ProjectionElement,
    /// p_x^{alpha,beta} = (1 - p^beta) p^alpha.
    pub band: ProjectionElement,
}

pub fn spectral_projections(
    x: &HermitianElement,
    alpha: f64,
    beta: f64,
) -> Result<SpectralTriple> {
    if !is_positive(x) {
        return Err(Error::NotPositive(x.min_eigenvalue()));
    }
    if alpha > beta {
        return Err(Error::InvalidInput(format!("alpha {alpha} > beta {beta}")));
    }
    let tol = x.algebra.tolerance;
    let eig = x.eigen();
    let clusters = eig.clusters(x.algebra.cluster_tol());
    let zero_cut = x.algebra.cluster_tol().max(1e-9 * x.operator_norm());
    let n = eig.values.len();
    let mut low = vec![0.0; n];
    let mut high = vec![0.0; n];
    let mut band = vec![0.0; n];
    for (mean, members) in &clusters {
        let in_low = *mean > zero_cut && *mean <= alpha + tol;
        let in_high = *mean >= alpha - tol;
        let in_band = in_high && !(*mean >= beta - tol);
        for &i in members {
            if in_low {
                low[i] = 1.0;
            }
            if in_high {
                high[i] = 1.0;
            }
            if in_band {
                band[i] = 1.0;
            }
        }
    }
    Ok(SpectralTriple {
        low: ProjectionElement::new(eig.recompose(x.algebra, &low))?,
        high: ProjectionElement::new(eig.recompose(x.algebra, &high))?,
        band: ProjectionElement::new(eig.recompose(x.algebra, &band))?,
    })
}

/// The unique decomposition x = sum_k alpha_k p_k with a strictly increasing
/// projection chain and positive coefficients.
pub fn chain_decomposition(
    x: &HermitianElement,
) -> Result<Vec<(f64, ProjectionElement)>> {
    if !is_positive(x) {
        return Err(Error::NotPositive(x.min_eigenvalue()));
    }
    let eig = x.eigen();
    let clusters = eig.clusters(x.algebra.cluster_tol());
    let zero_cut = x.algebra.cluster_tol().max(1e-9 * x.operator_norm());
    // Distinct positive levels, descending.
    let mut levels: Vec<(f64, Vec<usize>)> = clusters
        .into_iter()
        .filter(|(v, _)| *v > zero_cut)
        .collect();
    levels.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let n = eig.values.len();
    let mut out = Vec::new();
    let mut cum = vec![0.0; n];
    for (k, (value, members)) in levels.iter().enumerate() {
        for &i in members {
            cum[i] = 1.0;
        }
        let next = levels.get(k + 1).map(|(v, _)| *v).unwrap_or(0.0);
        let coeff = value - next;
        out.push((coeff, ProjectionElement::new(eig.recompose(x.algebra, &cum))?));
    }
    Ok(out)
}

/// rho(x), exposed as the module-level pairing.
pub fn state_eval(rho: &StateFunctional, x: &HermitianElement) -> Result<f64> {
    rho.eval(x)
}

/// Result of a separation attempt.
#[derive(Debug, Clone)]
pub enum Separation {
    Witness(HermitianElement),
    NotSeparated,
}

/// Finds c >= 0 in the span of `system` with rho(c) = 1 and sigma(c) <= eps.
///
/// Commutative kind: exact linear feasibility over the span's positive cone.
/// Matrix kind: search over the fixed finite family of rank-one projections
/// onto eigenvectors of density differences t_rho - lambda t_sigma, lambda on
/// a fixed grid; reports NotSeparated when the family is exhausted.
pub fn separate_states(
    system: &[HermitianElement],
    rho: &StateFunctional,
    sigma: &StateFunctional,
    eps: f64,
) -> Result<Separation> {
    if eps <= 0.0 {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    let alg = system
        .first()
        .map(|x| x.algebra)
        .ok_or_else(|| Error::InvalidInput("empty operator system".into()))?;
    for x in system {
        alg.check_same(&x.algebra)?;
    }
    match alg.kind {
        AlgebraKind::Commutative(m) => {
            // minimize sigma(y) s.t. y in span, y >= 0, rho(y) = 1.
            let k = system.len();
            let tuples: Vec<&[f64]> = system
                .iter()
                .map(|x| x.as_tuple())
                .collect::<Result<_>>()?;
            let rho_row: Vec<f64> = (0..k)
                .map(|j| rho.eval(&system[j]))
                .collect::<Result<_>>()?;
            let sigma_row: Vec<f64> = (0..k)
                .map(|j| sigma.eval(&system[j]))
                .collect::<Result<_>>()?;
            let mut lp = LinearProgram::new(k, false);
            lp.objective = sigma_row;
            for i in 0..m {
                let row: Vec<f64> = (0..k).map(|j| tuples[j][i]).collect();
                lp.push(row, Cmp::Ge, 0.0);
            }
            lp.push(rho_row, Cmp::Eq, 1.0);
            match feasibility::minimize(&lp, 1e-9) {
                feasibility::LpOutcome::Optimal { x: coeffs, value } => {
                    if value <= eps + 1e-9 {
                        let mut y = vec![0.0; m];
                        for (j, c) in coeffs.iter().enumerate() {
                            for i in 0..m {
                                y[i] += c * tuples[j][i];
                            }
                        }
                        Ok(Separation::Witness(HermitianElement::from_tuple(
                            alg,
                            y.iter().map(|v| v.max(0.0)).collect(),
                        )?))
                    } else {
                        Ok(Separation::NotSeparated)
                    }
                }
                _ => Ok(Separation::NotSeparated),
            }
        }
        AlgebraKind::Matrix(n) => {
            let t_rho = rho.density(n)?;
            let t_sigma = sigma.density(n)?;
            let lambdas = [
                0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 100.0, 1e3, 1e4, 1e6,
            ];
            for &lambda in &lambdas {
                let delta = &t_rho - t_sigma.scale(lambda);
                let dh = HermitianElement::from_matrix(alg, delta)?;
                let eig = dh.eigen();
                for c in 0..n {
                    let xi: DVector<Complex64> = eig.vectors.column(c).into();
                    let p = &xi * xi.adjoint();
                    let ph = HermitianElement::from_matrix(alg, p)?;
                    let r = rho.eval(&ph)?;
                    if r <= 1e-9 {
                        continue;
                    }
                    let cand = ph.scale(1.0 / r);
                    if sigma.eval(&cand)? <= eps {
                        return Ok(Separation::Witness(cand));
                    }
                }
            }
            Ok(Separation::NotSeparated)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m2(entries: [[f64; 2]; 2]) -> HermitianElement {
        let alg = AlgebraHandle::matrix(2);
        let m = DMatrix::from_fn(2, 2, |i, j| Complex64::new(entries[i][j], 0.0));
        HermitianElement::from_matrix(alg, m).unwrap()
    }

    #[test]
    fn positivity_examples() {
        let alg = AlgebraHandle::matrix(2);
        assert!(is_positive(
            &HermitianElement::diag(alg, &[4.0, 9.0]).unwrap()
        ));
        // eigenvalues 3 and -1 by the characteristic polynomial
        assert!(!is_positive(&m2([[1.0, 2.0], [2.0, 1.0]])));
        // det = 1 > 0, trace = 3 > 0
        assert!(is_positive(&m2([[2.0, 1.0], [1.0, 1.0]])));
    }

    #[test]
    fn func_calc_examples() {
        let alg = AlgebraHandle::matrix(2);
        let x = HermitianElement::diag(alg, &[4.0, 9.0]).unwrap();
        let s = func_calc(&x, FuncKind::Sqrt).unwrap();
        assert!(s.approx_eq(&HermitianElement::diag(alg, &[2.0, 3.0]).unwrap(), 1e-9));

        let y = HermitianElement::diag(alg, &[1.0, -1.0]).unwrap();
        let sq = func_calc(&y, FuncKind::Square).unwrap();
        assert!(sq.approx_eq(&HermitianElement::diag(alg, &[1.0, 1.0]).unwrap(), 1e-9));

        // diagonalize in the (1, +-1) basis: eigenvalues 3 and 1
        let z = m2([[2.0, 1.0], [1.0, 2.0]]);
        let sz = func_calc(&z, FuncKind::Sqrt).unwrap();
        let r3 = 3.0f64.sqrt();
        let expect = m2([
            [(1.0 + r3) / 2.0, (r3 - 1.0) / 2.0],
            [(r3 - 1.0) / 2.0, (1.0 + r3) / 2.0],
        ]);
        assert!(sz.approx_eq(&expect, 1e-9));

        assert!(func_calc(&y, FuncKind::Sqrt).is_err());
    }

    #[test]
    fn sqrt_square_roundtrip_random() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for trial in 0..500 {
            let n = 1 + (trial % 8);
            let alg = AlgebraHandle::matrix(n);
            let raw = DMatrix::from_fn(n, n, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let h = HermitianElement::from_matrix(alg, (&raw + raw.adjoint()).scale(0.5)).unwrap();
            let pos = func_calc(&h, FuncKind::Square).unwrap(); // h^2 >= 0
            let root = func_calc(&pos, FuncKind::Sqrt).unwrap();
            let back = func_calc(&root, FuncKind::Square).unwrap();
            assert!(
                back.distance(&pos) <= 10.0 * 1e-10 + 1e-10 * pos.operator_norm().max(1.0) * 100.0,
                "roundtrip failed at trial {trial}: {}",
                back.distance(&pos)
            );
        }
    }

    #[test]
    fn support_projection_examples() {
        let alg = AlgebraHandle::matrix(2);
        let x = HermitianElement::diag(alg, &[0.0, 2.0]).unwrap();
        let p = support_projection(&x).unwrap();
        assert!(p
            .base
            .approx_eq(&HermitianElement::diag(alg, &[0.0, 1.0]).unwrap(), 1e-9));

        let z = HermitianElement::zero(alg);
        assert_eq!(support_projection(&z).unwrap().rank, 0);

        // rank-1 xi xi* for xi = (1,1)/sqrt(2) scaled by 3
        let xi = DVector::from_vec(vec![
            Complex64::new(1.0 / 2.0f64.sqrt(), 0.0),
            Complex64::new(1.0 / 2.0f64.sqrt(), 0.0),
        ]);
        let r1 = HermitianElement::from_matrix(alg, (&xi * xi.adjoint()).scale(3.0)).unwrap();
        let sp = support_projection(&r1).unwrap();
        let expect = HermitianElement::from_matrix(alg, &xi * xi.adjoint()).unwrap();
        assert!(sp.base.approx_eq(&expect, 1e-9));
        assert_eq!(sp.rank, 1);
    }

    #[test]
    fn support_is_minimal() {
        // any projection q with qx = x satisfies q >= support(x)
        let alg = AlgebraHandle::matrix(3);
        let x = HermitianElement::diag(alg, &[0.0, 1.0, 2.0]).unwrap();
        let p = support_projection(&x).unwrap();
        let px = p.base.mul_raw(&x).unwrap();
        assert!((px - x.to_matrix()).norm() <= 1e-9);
        let q = ProjectionElement::one(alg);
        assert!(p.leq(&q));
    }

    #[test]
    fn spectral_projection_examples() {
        let alg = AlgebraHandle::matrix(2);
        let x = HermitianElement::diag(alg, &[3.0, 1.0]).unwrap();
        let t = spectral_projections(&x, 2.0, 2.0).unwrap();
        assert!(t
            .low
            .base
            .approx_eq(&HermitianElement::diag(alg, &[0.0, 1.0]).unwrap(), 1e-9));
        assert!(t
            .high
            .base
            .approx_eq(&HermitianElement::diag(alg, &[1.0, 0.0]).unwrap(), 1e-9));

        let alg3 = AlgebraHandle::matrix(3);
        let y = HermitianElement::diag(alg3, &[5.0, 3.0, 1.0]).unwrap();
        let t3 = spectral_projections(&y, 2.0, 4.0).unwrap();
        assert!(t3
            .band
            .base
            .approx_eq(&HermitianElement::diag(alg3, &[0.0, 1.0, 0.0]).unwrap(), 1e-9));
        assert!(spectral_projections(&y, 4.0, 2.0).is_err());
    }

    #[test]
    fn chain_decomposition_examples() {
        let alg = AlgebraHandle::matrix(3);
        let x = HermitianElement::diag(alg, &[3.0, 3.0, 1.0]).unwrap();
        let chain = chain_decomposition(&x).unwrap();
        assert_eq!(chain.len(), 2);
        assert_relative_eq!(chain[0].0, 2.0, epsilon = 1e-9);
        assert!(chain[0]
            .1
            .base
            .approx_eq(&HermitianElement::diag(alg, &[1.0, 1.0, 0.0]).unwrap(), 1e-9));
        assert_relative_eq!(chain[1].0, 1.0, epsilon = 1e-9);
        assert_eq!(chain[1].1.rank, 3);

        // a projection decomposes as itself with coefficient one
        let p = HermitianElement::diag(alg, &[1.0, 0.0, 1.0]).unwrap();
        let cp = chain_decomposition(&p).unwrap();
        assert_eq!(cp.len(), 1);
        assert_relative_eq!(cp[0].0, 1.0, epsilon = 1e-9);

        let alg4 = AlgebraHandle::matrix(4);
        let y = HermitianElement::diag(alg4, &[5.0, 2.0, 2.0, 0.0]).unwrap();
        let cy = chain_decomposition(&y).unwrap();
        assert_eq!(cy.len(), 2);
        assert_relative_eq!(cy[0].0, 3.0, epsilon = 1e-9);
        assert_eq!(cy[0].1.rank, 1);
        assert_relative_eq!(cy[1].0, 2.0, epsilon = 1e-9);
        assert_eq!(cy[1].1.rank, 3);
    }

    #[test]
    fn chain_reassembles() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for trial in 0..200 {
            let n = 2 + trial % 6;
            let alg = AlgebraHandle::matrix(n);
            let raw = DMatrix::from_fn(n, n, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let h = HermitianElement::from_matrix(alg, &raw * raw.adjoint()).unwrap();
            let chain = chain_decomposition(&h).unwrap();
            let mut sum = HermitianElement::zero(alg);
            for (c, p) in &chain {
                sum = sum.add(&p.base.scale(*c)).unwrap();
            }
            assert!(
                sum.distance(&h) <= 1e-8 * h.operator_norm().max(1.0),
                "reassembly failed: {}",
                sum.distance(&h)
            );
            // strict chain
            for w in chain.windows(2) {
                assert!(w[0].1.leq(&w[1].1));
                assert!(w[0].1.rank < w[1].1.rank);
            }
        }
    }

    #[test]
    fn state_eval_examples() {
        let alg = AlgebraHandle::matrix(2);
        let x = HermitianElement::diag(alg, &[1.0, 3.0]).unwrap();
        let mixed = StateFunctional::maximally_mixed(2);
        assert_relative_eq!(mixed.eval(&x).unwrap(), 2.0, epsilon = 1e-12);

        let e1 = StateFunctional::vector_real(&[1.0, 0.0]).unwrap();
        assert_relative_eq!(e1.eval(&x).unwrap(), 1.0, epsilon = 1e-12);

        let xi = StateFunctional::vector_real(&[1.0, 2.0]).unwrap();
        let y = HermitianElement::diag(alg, &[1.0, -1.0]).unwrap();
        assert_relative_eq!(xi.eval(&y).unwrap(), -3.0 / 5.0, epsilon = 1e-12);
    }

    #[test]
    fn state_monotone_and_schwarz() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for trial in 0..100 {
            let n = 2 + trial % 4;
            let alg = AlgebraHandle::matrix(n);
            let raw = DMatrix::from_fn(n, n, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let x = HermitianElement::from_matrix(alg, (&raw + raw.adjoint()).scale(0.5)).unwrap();
            let bump = DMatrix::from_fn(n, n, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let y = x
                .add(&HermitianElement::from_matrix(alg, &bump * bump.adjoint()).unwrap())
                .unwrap();
            let states = [
                StateFunctional::vector(DVector::from_fn(n, |_, _| {
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                }))
                .unwrap(),
                StateFunctional::maximally_mixed(n),
            ];
            for rho in &states {
                // monotone
                assert!(rho.eval(&x).unwrap() <= rho.eval(&y).unwrap() + 1e-10);
                // Schwarz at states
                let xsq = func_calc(&x, FuncKind::Square).unwrap();
                assert!(rho.eval(&xsq).unwrap() >= rho.eval(&x).unwrap().powi(2) - 1e-10);
            }
        }
    }

    #[test]
    fn separate_states_examples() {
        // diagonal 2-dim system
        let alg = AlgebraHandle::commutative(2);
        let system = vec![
            HermitianElement::from_tuple(alg, vec![1.0, 0.0]).unwrap(),
            HermitianElement::from_tuple(alg, vec![0.0, 1.0]).unwrap(),
        ];
        let rho = StateFunctional::point(0);
        let sigma = StateFunctional::point(1);
        match separate_states(&system, &rho, &sigma, 0.1).unwrap() {
            Separation::Witness(c) => {
                assert_relative_eq!(rho.eval(&c).unwrap(), 1.0, epsilon = 1e-8);
                assert!(sigma.eval(&c).unwrap() <= 0.1);
                assert!(c.as_tuple().unwrap()[0] > 0.9);
            }
            Separation::NotSeparated => panic!("expected a witness"),
        }

        // rho not separated from itself
        match separate_states(&system, &rho, &rho, 0.1).unwrap() {
            Separation::NotSeparated => {}
            Separation::Witness(_) => panic!("rho cannot be separated from itself"),
        }

        // full M2 system, distinct pure states
        let alg2 = AlgebraHandle::matrix(2);
        let mut system2 = Vec::new();
        for (i, j, re, im) in [
            (0, 0, 1.0, 0.0),
            (1, 1, 1.0, 0.0),
            (0, 1, 1.0, 0.0),
            (0, 1, 0.0, 1.0),
        ] {
            let mut m = DMatrix::zeros(2, 2);
            if i == j {
                m[(i, j)] = Complex64::new(re, im);
            } else {
                m[(i, j)] = Complex64::new(re, im);
                m[(j, i)] = Complex64::new(re, -im);
            }
            system2.push(HermitianElement::from_matrix(alg2, m).unwrap());
        }
        let rho2 = StateFunctional::vector_real(&[1.0, 0.0]).unwrap();
        let sigma2 = StateFunctional::vector_real(&[1.0, 1.0]).unwrap();
        match separate_states(&system2, &rho2, &sigma2, 0.01).unwrap() {
            Separation::Witness(c) => {
                assert_relative_eq!(rho2.eval(&c).unwrap(), 1.0, epsilon = 1e-8);
                assert!(sigma2.eval(&c).unwrap() <= 0.01);
            }
            Separation::NotSeparated => panic!("pure states must separate"),
        }

        assert!(separate_states(&system, &rho, &sigma, 0.0).is_err());
    }
}
