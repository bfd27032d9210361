//! Spectral calculus for Hermitian matrices.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::operators::{c, hermitian_part, hermitian_residual, ComplexMatrix, ComplexVector, C64};
use crate::tolerance::TOL_HERMITIAN;

/// Eigenpairs of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, matching `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> ComplexVector {
        self.vectors.column(k).into_owned()
    }

    /// Rebuilds `Σ f(λ_k) v_k v_k†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let scaled = ComplexMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |i, k| {
            self.vectors[(i, k)] * f(self.values[k])
        });
        scaled * self.vectors.adjoint()
    }
}

/// Hermitizes `m` and diagonalizes it; ties keep the solver's order.
pub fn eigh(m: &ComplexMatrix) -> HermitianEigen {
    let n = m.nrows();
    if n == 0 {
        return HermitianEigen {
            values: vec![],
            vectors: ComplexMatrix::zeros(0, 0),
        };
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let cols: Vec<ComplexVector> = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).into_owned())
        .collect();
    HermitianEigen {
        values,
        vectors: ComplexMatrix::from_columns(&cols),
    }
}

fn checked(m: &ComplexMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "spectral function of non-square {:?}",
            m.shape()
        )));
    }
    let r = hermitian_residual(m);
    if r > TOL_HERMITIAN {
        return Err(Error::NotHermitian(r));
    }
    Ok(eigh(m))
}

/// `f(H) = U f(Λ) U†` for Hermitian `H`.
pub fn hermitian_function(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    Ok(checked(m)?.map(f))
}

/// Principal square root; eigenvalues slightly below zero are clamped.
pub fn sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    hermitian_function(m, |x| x.max(0.0).sqrt())
}

pub fn cos_hermitian(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    hermitian_function(m, f64::cos)
}

pub fn sin_hermitian(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    hermitian_function(m, f64::sin)
}

/// Principal arccos on spectra inside `[0, 1]`, clamped within `1e-10`.
pub fn arccos_hermitian(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = checked(m)?;
    for &x in &eig.values {
        if !(-TOL_HERMITIAN..=1.0 + TOL_HERMITIAN).contains(&x) {
            return Err(Error::ArccosDomain(x));
        }
    }
    Ok(eig.map(|x| x.clamp(0.0, 1.0).acos()))
}

/// `exp(−i·t·H)` for Hermitian `H`.
pub fn expm_hermitian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let eig = checked(h)?;
    Ok(exp_from_eigen(&eig, t))
}

pub fn exp_from_eigen(eig: &HermitianEigen, t: f64) -> ComplexMatrix {
    let v = &eig.vectors;
    let scaled = ComplexMatrix::from_fn(v.nrows(), v.ncols(), |i, k| {
        let ph = -t * eig.values[k];
        v[(i, k)] * c(ph.cos(), ph.sin())
    });
    scaled * v.adjoint()
}

/// Moore-Penrose pseudo-inverse of a PSD matrix, inverting eigenvalues above
/// `rel_tol · λ_max`. Returns the inverse and the kernel projector.
pub fn pinv_psd(m: &ComplexMatrix, rel_tol: f64) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let eig = checked(m)?;
    let cut = rel_tol * eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let inv = eig.map(|x| if x > cut && x > 0.0 { 1.0 / x } else { 0.0 });
    let ker = eig.map(|x| if x > cut && x > 0.0 { 0.0 } else { 1.0 });
    Ok((inv, ker))
}

/// Singular value decomposition `A = U diag(σ) V†` with `σ` descending.
pub struct Svd {
    pub u: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub v_t: ComplexMatrix,
}

pub fn svd(m: &ComplexMatrix) -> Svd {
    let s = m.clone().svd(true, true);
    let u = s.u.expect("requested U");
    let v_t = s.v_t.expect("requested V^T");
    let k = s.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s.singular_values[b].total_cmp(&s.singular_values[a]).then(a.cmp(&b)));
    let ucols: Vec<ComplexVector> = order.iter().map(|&i| u.column(i).into_owned()).collect();
    let vrows: Vec<_> = order.iter().map(|&i| v_t.row(i).into_owned()).collect();
    Svd {
        u: ComplexMatrix::from_columns(&ucols),
        sigma: order.iter().map(|&i| s.singular_values[i]).collect(),
        v_t: ComplexMatrix::from_rows(&vrows),
    }
}

/// Unitary polar factor `W` of a square matrix `A = W·(A†A)^{1/2}`.
pub fn polar_unitary(m: &ComplexMatrix) -> ComplexMatrix {
    let s = svd(m);
    s.u * s.v_t
}

/// Full right null-space direction: right singular vector of the smallest
/// singular value, computed from the (padded) square SVD.
pub fn smallest_right_singular(m: &ComplexMatrix) -> (f64, ComplexVector) {
    let (r, cols) = m.shape();
    let padded = if r < cols {
        let mut p = ComplexMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (r, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let s = svd(&padded);
    let last = s.sigma.len() - 1;
    let v = s.v_t.row(last).adjoint().into_owned();
    (s.sigma[last], v)
}

pub fn scalar_phase(z: C64) -> C64 {
    let n = z.norm();
    if n > 0.0 {
        z / n
    } else {
        c(1.0, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{diag_real, identity, max_abs_diff, pauli_x, I};
    use crate::random::{random_hermitian, seeded};

    #[test]
    fn cos_of_zero_is_identity() {
        let z = ComplexMatrix::zeros(3, 3);
        assert!(max_abs_diff(&cos_hermitian(&z).unwrap(), &identity(3)) < 1e-15);
    }

    #[test]
    fn arccos_inverts_cos_on_principal_branch() {
        let a = diag_real(&[0.3, 1.1]);
        let back = arccos_hermitian(&cos_hermitian(&a).unwrap()).unwrap();
        assert!(max_abs_diff(&back, &a) < 1e-12);
        assert!(matches!(
            arccos_hermitian(&diag_real(&[0.5, 1.01])),
            Err(Error::ArccosDomain(_))
        ));
        assert!(arccos_hermitian(&diag_real(&[0.5, 1.0 + 5e-11])).is_ok());
    }

    #[test]
    fn exp_of_pauli_x_quarter_turn() {
        let u = expm_hermitian(&pauli_x(), std::f64::consts::FRAC_PI_2).unwrap();
        let expected = pauli_x().map(|z| -I * z);
        assert!(max_abs_diff(&u, &expected) < 1e-14);
        // series oracle
        let h = pauli_x().scale(std::f64::consts::FRAC_PI_2);
        let mut term = identity(2);
        let mut sum = identity(2);
        for k in 1..40 {
            term = (&term * &h).map(|z| -I * z / k as f64);
            sum += &term;
        }
        assert!(max_abs_diff(&u, &sum) < 1e-13);
    }

    #[test]
    fn sqrt_squares_back() {
        let mut rng = seeded(11);
        for _ in 0..10 {
            let h = random_hermitian(4, &mut rng);
            let psd = &h * &h;
            let r = sqrt_psd(&psd).unwrap();
            assert!(max_abs_diff(&(&r * &r), &psd) < 1e-9);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = identity(2);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(sqrt_psd(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eigh_is_descending_and_reconstructs() {
        let mut rng = seeded(12);
        let h = random_hermitian(5, &mut rng);
        let e = eigh(&h);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        assert!(max_abs_diff(&e.map(|x| x), &h) < 1e-12);
    }

    #[test]
    fn svd_sorted_and_polar_unitary() {
        let mut rng = seeded(13);
        let a = crate::random::random_matrix(4, 4, &mut rng);
        let s = svd(&a);
        assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
        let rebuilt = &s.u * ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            4,
            s.sigma.iter().map(|&x| c(x, 0.0)),
        )) * &s.v_t;
        assert!(max_abs_diff(&rebuilt, &a) < 1e-12);
        let w = polar_unitary(&a);
        assert!(crate::operators::isometry_residual(&w) < 1e-12);
        let p = w.adjoint() * &a;
        assert!(hermitian_residual(&p) < 1e-12);
    }
}
