//! Seeded random operators for tests, examples and search restarts.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::{Channel, KrausSet};
use crate::operators::{c, hermitian_part, ComplexMatrix, ComplexVector, DensityOperator, UnitaryOperator};

pub type QdfRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> QdfRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex Ginibre matrix with independent standard normal real and
/// imaginary parts scaled by `1/√2`.
pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * s, im * s)
    })
}

pub fn random_hermitian(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    hermitian_part(&random_matrix(d, d, rng))
}

/// `rows × cols` isometry from the QR factor of a Gaussian matrix, phases
/// fixed by the diagonal of `R` so the distribution is Haar.
pub fn random_isometry(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    assert!(cols <= rows);
    let z = random_matrix(rows, cols, rng);
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        let d = r[(j, j)];
        let n = d.norm();
        let ph = if n > 0.0 { d / n } else { c(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= ph;
    }
    q
}

pub fn random_unitary(d: usize, rng: &mut impl Rng) -> UnitaryOperator {
    UnitaryOperator::new(random_isometry(d, d, rng)).expect("QR factor is unitary")
}

pub fn random_pure_state(d: usize, rng: &mut impl Rng) -> ComplexVector {
    let v = random_matrix(d, 1, rng).column(0).into_owned();
    let n = v.norm();
    v.unscale(n)
}

/// Full-rank state from the Ginibre ensemble.
pub fn random_density(d: usize, rng: &mut impl Rng) -> DensityOperator {
    let g = random_matrix(d, d, rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityOperator::new(m.unscale(tr)).expect("Ginibre state is valid")
}

/// Random probability vector, uniform on the simplex.
pub fn random_probabilities(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Random channel with `m` Kraus operators from a random isometry
/// `C^d → C^m ⊗ C^d`.
pub fn random_kraus(d: usize, m: usize, rng: &mut impl Rng) -> KrausSet {
    let v = random_isometry(m * d, d, rng);
    let ops = (0..m).map(|k| v.rows(k * d, d).into_owned()).collect();
    KrausSet::new(ops).expect("isometry blocks are trace preserving")
}

pub fn random_channel(d: usize, m: usize, rng: &mut impl Rng) -> Channel {
    Channel::from_kraus(random_kraus(d, m, rng))
}

pub fn random_unit_vector(n: usize, rng: &mut impl Rng) -> DVector<f64> {
    let v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let norm = v.norm();
    v / norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::isometry_residual;

    #[test]
    fn generators_are_valid_and_deterministic() {
        let mut a = seeded(1);
        let mut b = seeded(1);
        let u = random_unitary(4, &mut a);
        assert_eq!(u, random_unitary(4, &mut b));
        assert!(isometry_residual(&random_isometry(6, 2, &mut a)) < 1e-12);
        let p = random_probabilities(5, &mut a);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x > 0.0));
        let k = random_kraus(3, 4, &mut a);
        assert_eq!(k.len(), 4);
        assert!((random_pure_state(3, &mut a).norm() - 1.0).abs() < 1e-14);
    }
}
