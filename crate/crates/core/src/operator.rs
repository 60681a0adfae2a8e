//! Dense complex linear algebra on finite Hilbert spaces.
//!
//! All operator types are immutable once built. Hermiticity is enforced by
//! symmetrising `(A + A^dagger)/2` after checking that the input was already
//! Hermitian to within [`Tolerances::hermitian`].

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// `tr[X Y]` without forming the product.
pub fn trace_product(x: &CMatrix, y: &CMatrix) -> C64 {
    debug_assert_eq!(x.ncols(), y.nrows());
    let mut acc = ZERO;
    for i in 0..x.nrows() {
        for k in 0..x.ncols() {
            acc += x[(i, k)] * y[(k, i)];
        }
    }
    acc
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Normalised state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    amplitudes: CVector,
}

impl Ket {
    /// Normalises `amplitudes`; fails on the zero vector.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if amplitudes.is_empty() || !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidParameter("ket has zero or non-finite norm".into()));
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(norm),
        })
    }

    pub fn from_slice(amplitudes: &[C64]) -> Result<Self> {
        Self::new(CVector::from_column_slice(amplitudes))
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut amplitudes = CVector::zeros(dim);
        amplitudes[index] = ONE;
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn inner(&self, other: &Ket) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn projector(&self) -> DensityOperator {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityOperator {
            matrix: symmetrize(&m),
        }
    }
}

/// Eigendecomposition `A = V diag(values) V^dagger` of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl Spectrum {
    /// `V diag(f(values)) V^dagger` for an arbitrary complex-valued `f`.
    pub fn apply_complex(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let fj = f(lambda);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= fj;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn apply_real(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        let m = self.apply_complex(|x| C64::new(f(x), 0.0));
        HermitianOperator {
            matrix: symmetrize(&m),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn eigen_hermitian(m: &CMatrix) -> Spectrum {
    let eig = m.clone().symmetric_eigen();
    Spectrum {
        values: eig.eigenvalues,
        vectors: eig.eigenvectors,
    }
}

/// Finite-dimensional observable.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, Tolerances::default().hermitian)
    }

    /// Accepts `matrix` if `max |M - M^dagger| <= tol * max(1, max|M|)`.
    pub fn with_tolerance(matrix: CMatrix, tol: f64) -> Result<Self> {
        ensure_square(&matrix)?;
        let deviation = hermitian_deviation(&matrix);
        if deviation > tol * max_abs(&matrix).max(1.0) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self {
            matrix: symmetrize(&matrix),
        })
    }

    /// Symmetrises without the violation check. For matrices that are
    /// Hermitian by construction and differ only by rounding.
    pub(crate) fn from_hermitian_parts(matrix: CMatrix) -> Self {
        Self {
            matrix: symmetrize(&matrix),
        }
    }

    pub fn from_real_diagonal(diagonal: &[f64]) -> Self {
        let d = DVector::from_iterator(diagonal.len(), diagonal.iter().map(|&x| C64::new(x, 0.0)));
        Self {
            matrix: CMatrix::from_diagonal(&d),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `tr[rho A]`.
    pub fn expectation(&self, rho: &DensityOperator) -> f64 {
        trace_product(rho.matrix(), &self.matrix).re
    }

    /// `tr[rho A^2] - tr[rho A]^2`.
    pub fn variance(&self, rho: &DensityOperator) -> f64 {
        let mean = self.expectation(rho);
        let second = trace_product(&(rho.matrix() * &self.matrix), &self.matrix).re;
        second - mean * mean
    }

    pub fn commutator(&self, other: &HermitianOperator) -> CMatrix {
        &self.matrix * &other.matrix - &other.matrix * &self.matrix
    }

    pub fn eigen(&self) -> Spectrum {
        eigen_hermitian(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().min()
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        let s = self.eigen();
        s.max().abs().max(s.min().abs())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            matrix: self.matrix.scale(factor),
        }
    }

    /// `A - c * 1`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut m = self.matrix.clone();
        for i in 0..m.nrows() {
            m[(i, i)] -= C64::new(c, 0.0);
        }
        Self { matrix: m }
    }

    pub fn square(&self) -> Self {
        Self::from_hermitian_parts(&self.matrix * &self.matrix)
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: Self) -> HermitianOperator {
        HermitianOperator {
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: Self) -> HermitianOperator {
        HermitianOperator {
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Mul<f64> for &HermitianOperator {
    type Output = HermitianOperator;
    fn mul(self, rhs: f64) -> HermitianOperator {
        self.scaled(rhs)
    }
}

/// Positive, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerances(matrix, &Tolerances::default())
    }

    pub fn with_tolerances(matrix: CMatrix, tol: &Tolerances) -> Result<Self> {
        let herm = HermitianOperator::with_tolerance(matrix, tol.hermitian)?;
        let trace = herm.trace();
        if (trace - 1.0).abs() > tol.trace {
            return Err(Error::InvalidDensity(format!("trace {trace} differs from 1")));
        }
        let min = herm.min_eigenvalue();
        if min < -tol.positivity {
            return Err(Error::InvalidDensity(format!(
                "smallest eigenvalue {min:.3e} is below -{:.1e}",
                tol.positivity
            )));
        }
        Ok(Self {
            matrix: herm.into_matrix(),
        })
    }

    /// Divides a positive operator by its trace.
    pub fn from_unnormalized(matrix: CMatrix) -> Result<Self> {
        ensure_square(&matrix)?;
        let trace = matrix.trace().re;
        if !(trace > 0.0) || !trace.is_finite() {
            return Err(Error::InvalidDensity(format!("cannot normalise trace {trace}")));
        }
        Self::new(matrix.unscale(trace))
    }

    pub fn pure(ket: &Ket) -> Self {
        ket.projector()
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim).unscale(dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn purity(&self) -> f64 {
        trace_product(&self.matrix, &self.matrix).re
    }

    pub fn as_hermitian(&self) -> HermitianOperator {
        HermitianOperator {
            matrix: self.matrix.clone(),
        }
    }
}

/// Kronecker product with the left operand's index major.
pub trait Tensor {
    fn tensor(&self, other: &Self) -> Self;
}

impl Tensor for Ket {
    fn tensor(&self, other: &Self) -> Self {
        Self {
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        }
    }
}

impl Tensor for HermitianOperator {
    fn tensor(&self, other: &Self) -> Self {
        Self {
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }
}

impl Tensor for DensityOperator {
    fn tensor(&self, other: &Self) -> Self {
        Self {
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }
}

/// Contracts the ancilla factor of `op` against `anc_state`:
/// returns `sum_s <s| rho' op |s>` as an operator on the system.
pub fn partial_trace_ancilla(
    op: &HermitianOperator,
    sys_dim: usize,
    anc_state: &DensityOperator,
) -> Result<HermitianOperator> {
    let anc_dim = anc_state.dim();
    if op.dim() != sys_dim * anc_dim {
        return Err(Error::DimensionMismatch {
            context: "partial_trace_ancilla",
            expected: sys_dim * anc_dim,
            found: op.dim(),
        });
    }
    let m = op.matrix();
    let rho = anc_state.matrix();
    let out = CMatrix::from_fn(sys_dim, sys_dim, |i, j| {
        let mut acc = ZERO;
        for s in 0..anc_dim {
            for t in 0..anc_dim {
                acc += rho[(s, t)] * m[(i * anc_dim + t, j * anc_dim + s)];
            }
        }
        acc
    });
    Ok(HermitianOperator::from_hermitian_parts(out))
}

/// Applies `f` to the eigenvalues of `op`.
pub fn spectral_apply(op: &HermitianOperator, f: impl Fn(f64) -> f64) -> HermitianOperator {
    op.eigen().apply_real(f)
}

/// JSON matrix encoding: `dim` plus row-major `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        Self {
            dim: m.nrows(),
            data: flatten(m),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        unflatten(self.dim, &self.data)
    }
}

pub(crate) fn flatten(m: &CMatrix) -> Vec<[f64; 2]> {
    let mut data = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            data.push([z.re, z.im]);
        }
    }
    data
}

pub(crate) fn unflatten(dim: usize, data: &[[f64; 2]]) -> Result<CMatrix> {
    if data.len() != dim * dim {
        return Err(Error::DimensionMismatch {
            context: "matrix data length",
            expected: dim * dim,
            found: data.len(),
        });
    }
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        let [re, im] = data[i * dim + j];
        C64::new(re, im)
    }))
}

impl Serialize for HermitianOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(&self.matrix).serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let json = MatrixJson::deserialize(d)?;
        let m = json.to_matrix().map_err(serde::de::Error::custom)?;
        HermitianOperator::new(m).map_err(serde::de::Error::custom)
    }
}

impl Serialize for DensityOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(&self.matrix).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let json = MatrixJson::deserialize(d)?;
        let m = json.to_matrix().map_err(serde::de::Error::custom)?;
        DensityOperator::new(m).map_err(serde::de::Error::custom)
    }
}
