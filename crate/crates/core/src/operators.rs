//! Dense complex operators and the validated wrappers built on them.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::eigh;
use crate::tolerance::{TOL_HERMITIAN, TOL_PSD};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(rows, cols)
}

/// Builds a matrix from real entries given row by row.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> ComplexMatrix {
    assert_eq!(entries.len(), rows * cols);
    ComplexMatrix::from_fn(rows, cols, |i, j| c(entries[i * cols + j], 0.0))
}

pub fn diag_real(values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { ZERO })
}

pub fn pauli_x() -> ComplexMatrix {
    real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> ComplexMatrix {
    real_matrix(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

pub fn hadamard() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    real_matrix(2, 2, &[s, s, s, -s])
}

/// Kronecker product `a ⊗ b`, with `(a⊗b)[i·rb+k, j·cb+l] = a[i,j]·b[k,l]`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn tensor_all(ops: &[ComplexMatrix]) -> ComplexMatrix {
    let mut acc = identity(1);
    for op in ops {
        acc = tensor(&acc, op);
    }
    acc
}

pub fn ket(dim: usize, index: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(dim);
    v[index] = ONE;
    v
}

pub fn outer(a: &ComplexVector, b: &ComplexVector) -> ComplexMatrix {
    a * b.adjoint()
}

pub fn projector(v: &ComplexVector) -> ComplexMatrix {
    outer(v, v)
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn hermitian_residual(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(m, &m.adjoint())
}

pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// `‖V†V − I‖_max`.
pub fn isometry_residual(v: &ComplexMatrix) -> f64 {
    let gram = v.adjoint() * v;
    max_abs_diff(&gram, &identity(v.ncols()))
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn frobenius_norm(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Row-major flattening, `vec(M)[a·cols + i] = M[a, i]`.
pub fn vec_row_major(m: &ComplexMatrix) -> ComplexVector {
    let (r, cols) = m.shape();
    ComplexVector::from_fn(r * cols, |k, _| m[(k / cols, k % cols)])
}

pub fn unvec_row_major(v: &ComplexVector, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |i, j| v[i * cols + j])
}

/// Adds the orthonormal columns of `v` to a full unitary.
///
/// Candidates are canonical basis vectors in index order, orthogonalized
/// twice against everything accepted so far and skipped when the residual
/// norm falls below `1e-8`.
pub fn complete_to_unitary(v: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (n, k) = v.shape();
    if k > n {
        return Err(Error::DimensionMismatch(format!(
            "cannot complete {n}x{k} matrix to a unitary"
        )));
    }
    let res = isometry_residual(v);
    if res > 1e-9 {
        return Err(Error::NotIsometry(res));
    }
    let mut cols: Vec<ComplexVector> = (0..k).map(|j| v.column(j).into_owned()).collect();
    for cand in 0..n {
        if cols.len() == n {
            break;
        }
        let mut w = ket(n, cand);
        for _ in 0..2 {
            for q in &cols {
                let proj = q.dotc(&w);
                w -= q * proj;
            }
        }
        let norm = w.norm();
        if norm < 1e-8 {
            continue;
        }
        cols.push(w.unscale(norm));
    }
    if cols.len() != n {
        return Err(Error::NumericalDegeneracy(
            "canonical basis failed to span the complement".into(),
        ));
    }
    Ok(ComplexMatrix::from_columns(&cols))
}

/// Householder reflector `R = I − 2ww†/‖w‖²` scaled so that `R e₀ = φ`.
///
/// `φ` must be a unit vector; the result is unitary and fixes the orthogonal
/// complement of `span{e₀, φ}`.
pub fn reflector_to(phi: &ComplexVector) -> ComplexMatrix {
    let n = phi.len();
    let mag = phi[0].norm();
    let alpha = if mag > 1e-300 { phi[0] / mag } else { ONE };
    let target = phi.map(|z| z / alpha);
    let mut w = ket(n, 0) - &target;
    let wn = w.norm();
    if wn < 1e-14 {
        let mut r = identity(n);
        r[(0, 0)] = alpha;
        return r;
    }
    w.unscale_mut(wn);
    let h = identity(n) - outer(&w, &w).scale(2.0);
    let mut fix = identity(n);
    fix[(0, 0)] = alpha;
    h * fix
}

/// A trace-one positive semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    mat: ComplexMatrix,
}

impl DensityOperator {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(mat, TOL_HERMITIAN, TOL_PSD)
    }

    pub fn with_tolerance(mat: ComplexMatrix, tol_h: f64, tol_psd: f64) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "density operator must be square, got {:?}",
                mat.shape()
            )));
        }
        if mat.nrows() == 0 {
            return Err(Error::DimensionMismatch("empty density operator".into()));
        }
        if !is_finite(&mat) {
            return Err(Error::NonFinite("density operator"));
        }
        let h = hermitian_residual(&mat);
        if h > tol_h {
            return Err(Error::NotHermitian(h));
        }
        let tr = trace(&mat).re;
        if (tr - 1.0).abs() > tol_h {
            return Err(Error::NotTraceOne(tr));
        }
        let mat = hermitian_part(&mat);
        let min = eigh(&mat).values.last().copied().unwrap_or(0.0);
        if min < -tol_psd {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { mat })
    }

    /// Wraps an operator known to be a state up to rounding; only Hermitizes.
    pub(crate) fn new_unchecked(mat: ComplexMatrix) -> Self {
        Self {
            mat: hermitian_part(&mat),
        }
    }

    pub fn from_pure(psi: &ComplexVector) -> Result<Self> {
        let n = psi.norm();
        if !(n.is_finite() && n > 1e-300) {
            return Err(Error::InvalidArgument("zero or non-finite state vector".into()));
        }
        let v = psi.unscale(n);
        Ok(Self::new_unchecked(projector(&v)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: identity(dim).unscale(dim as f64),
        }
    }

    pub fn basis_state(dim: usize, index: usize) -> Self {
        Self::new_unchecked(projector(&ket(dim, index)))
    }

    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        Self::new(diag_real(weights))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        Self::new_unchecked(tensor(&self.mat, &other.mat))
    }

    /// Eigenvalues in descending order.
    pub fn spectrum(&self) -> Vec<f64> {
        eigh(&self.mat).values
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOperator {
    mat: ComplexMatrix,
}

impl UnitaryOperator {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(mat, TOL_HERMITIAN)
    }

    pub fn with_tolerance(mat: ComplexMatrix, tol: f64) -> Result<Self> {
        if !mat.is_square() || mat.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "unitary must be square, got {:?}",
                mat.shape()
            )));
        }
        if !is_finite(&mat) {
            return Err(Error::NonFinite("unitary"));
        }
        let r = isometry_residual(&mat);
        if r > tol {
            return Err(Error::NotUnitary(r));
        }
        Ok(Self { mat })
    }

    pub fn identity(dim: usize) -> Self {
        Self { mat: identity(dim) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn adjoint(&self) -> UnitaryOperator {
        Self {
            mat: self.mat.adjoint(),
        }
    }

    pub fn conjugate(&self, rho: &DensityOperator) -> DensityOperator {
        DensityOperator::new_unchecked(&self.mat * rho.matrix() * self.mat.adjoint())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Isometry {
    mat: ComplexMatrix,
}

impl Isometry {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if mat.nrows() < mat.ncols() || mat.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "isometry needs rows >= cols, got {:?}",
                mat.shape()
            )));
        }
        if !is_finite(&mat) {
            return Err(Error::NonFinite("isometry"));
        }
        let r = isometry_residual(&mat);
        if r > TOL_HERMITIAN {
            return Err(Error::NotIsometry(r));
        }
        Ok(Self { mat })
    }

    pub fn dim_in(&self) -> usize {
        self.mat.ncols()
    }

    pub fn dim_out(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn complete(&self) -> Result<UnitaryOperator> {
        UnitaryOperator::new(complete_to_unitary(&self.mat)?)
    }
}

/// Ordered tensor factors, environment-like factors first and the system last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositeSpace {
    factors: Vec<usize>,
}

impl CompositeSpace {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() || factors.contains(&0) {
            return Err(Error::DimensionMismatch(format!(
                "invalid factor list {factors:?}"
            )));
        }
        Ok(Self { factors })
    }

    pub fn env_system(d_e: usize, d_s: usize) -> Self {
        Self {
            factors: vec![d_e, d_s],
        }
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn total(&self) -> usize {
        self.factors.iter().product()
    }
}

/// Reduces `op` to the factor `keep` by tracing out every other factor.
pub fn partial_trace(op: &ComplexMatrix, space: &CompositeSpace, keep: usize) -> Result<ComplexMatrix> {
    let f = space.factors();
    if keep >= f.len() {
        return Err(Error::DimensionMismatch(format!(
            "factor index {keep} out of range for {} factors",
            f.len()
        )));
    }
    let total = space.total();
    if op.shape() != (total, total) {
        return Err(Error::DimensionMismatch(format!(
            "operator is {:?}, space has total dimension {total}",
            op.shape()
        )));
    }
    let left: usize = f[..keep].iter().product();
    let mid = f[keep];
    let right: usize = f[keep + 1..].iter().product();
    let mut out = zeros(mid, mid);
    for a in 0..mid {
        for b in 0..mid {
            let mut acc = ZERO;
            for l in 0..left {
                for r in 0..right {
                    acc += op[((l * mid + a) * right + r, (l * mid + b) * right + r)];
                }
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// `½ Σ |eig(a − b)|` for Hermitian inputs.
pub fn trace_norm_half(delta: &ComplexMatrix) -> f64 {
    0.5 * eigh(delta).values.iter().map(|x| x.abs()).sum::<f64>()
}

pub fn tv_distance(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "tv_distance between dims {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(trace_norm_half(&(a.matrix() - b.matrix())).clamp(0.0, 1.0))
}
