//! Lower bounds on the induced `½‖a − b‖_{1→1}` distance between channels.
//!
//! The trace norm is convex, so the supremum is attained on pure inputs. The
//! search alternates between the positive spectral projector `P` of the
//! output difference and the top eigenvector of `a†(P) − b†(P)`; each step
//! cannot decrease the objective. Qubit channels additionally get a 1° Bloch
//! sphere grid evaluated through their affine Bloch representation.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::operators::{c, ket, pauli_x, pauli_y, pauli_z, projector, ComplexMatrix, ComplexVector, DensityOperator};
use crate::random::{random_pure_state, seeded};
use crate::spectral::eigh;

pub const DEFAULT_RESTARTS: usize = 8;
const MAX_ASCENT_STEPS: usize = 200;
const GRID_SEEDS: usize = 4;

#[derive(Debug, Clone)]
pub struct DistanceEstimate {
    /// Certified lower bound on `½‖a − b‖_{1→1}`.
    pub lower_bound: f64,
    pub argmax_vector: ComplexVector,
    pub argmax_state: DensityOperator,
    pub restarts: usize,
    pub grid_points: usize,
}

/// `d_TV(a(ψψ†), b(ψψ†))` together with the positive spectral projector.
fn evaluate(a: &Channel, b: &Channel, psi: &ComplexVector) -> (f64, ComplexMatrix) {
    let rho = projector(psi);
    let delta = a.apply_matrix(&rho) - b.apply_matrix(&rho);
    let eig = eigh(&delta);
    let value = 0.5 * eig.values.iter().map(|x| x.abs()).sum::<f64>();
    let pos = eig.map(|x| if x > 0.0 { 1.0 } else { 0.0 });
    (value, pos)
}

fn ascend(a: &Channel, b: &Channel, start: ComplexVector) -> (f64, ComplexVector) {
    let (mut best, mut p) = evaluate(a, b, &start);
    let mut psi = start;
    for _ in 0..MAX_ASCENT_STEPS {
        let g = a.adjoint_apply(&p) - b.adjoint_apply(&p);
        let cand = eigh(&g).vector(0);
        let (v, np) = evaluate(a, b, &cand);
        if v <= best + 1e-15 {
            if v > best {
                best = v;
                psi = cand;
            }
            break;
        }
        best = v;
        psi = cand;
        p = np;
    }
    (best, psi)
}

/// Affine Bloch map `r ↦ A r + t` of a qubit channel.
fn bloch_map(ch: &Channel) -> (Matrix3<f64>, Vector3<f64>) {
    let s = [pauli_x(), pauli_y(), pauli_z()];
    let half = ComplexMatrix::identity(2, 2).scale(0.5);
    let center = ch.apply_matrix(&half);
    let t = Vector3::from_fn(|i, _| (&s[i] * &center).trace().re);
    let images: Vec<ComplexMatrix> = s.iter().map(|sj| ch.apply_matrix(&sj.scale(0.5))).collect();
    let a = Matrix3::from_fn(|i, j| (&s[i] * &images[j]).trace().re);
    (a, t)
}

fn bloch_state(theta: f64, phi: f64) -> ComplexVector {
    let (s, co) = (0.5 * theta).sin_cos();
    ComplexVector::from_vec(vec![c(co, 0.0), c(phi.cos() * s, phi.sin() * s)])
}

/// Best `GRID_SEEDS` grid points at 1° resolution over the Bloch sphere.
fn grid_candidates(a: &Channel, b: &Channel) -> (Vec<(f64, ComplexVector)>, usize) {
    let (aa, ta) = bloch_map(a);
    let (ab, tb) = bloch_map(b);
    let da = aa - ab;
    let dt = ta - tb;
    let deg = std::f64::consts::PI / 180.0;
    let mut top: Vec<(f64, usize, usize)> = Vec::with_capacity(GRID_SEEDS + 1);
    let mut count = 0;
    for it in 0..=180usize {
        let theta = it as f64 * deg;
        let (st, ct) = theta.sin_cos();
        let phis = if it == 0 || it == 180 { 1 } else { 360 };
        for ip in 0..phis {
            let phi = ip as f64 * deg;
            let n = Vector3::new(st * phi.cos(), st * phi.sin(), ct);
            let v = 0.5 * (da * n + dt).norm();
            count += 1;
            if top.len() < GRID_SEEDS || v > top[top.len() - 1].0 {
                top.push((v, it, ip));
                top.sort_by(|x, y| y.0.total_cmp(&x.0));
                top.truncate(GRID_SEEDS);
            }
        }
    }
    let cands = top
        .into_iter()
        .map(|(v, it, ip)| (v, bloch_state(it as f64 * deg, ip as f64 * deg)))
        .collect();
    (cands, count)
}

/// Multi-start ascent over pure inputs; deterministic given `seed`.
pub fn channel_distance_1to1(a: &Channel, b: &Channel, restarts: usize, seed: u64) -> Result<DistanceEstimate> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "channel distance between dims {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let d = a.dim();
    let mut starts: Vec<ComplexVector> = (0..d).map(|i| ket(d, i)).collect();
    for r in 0..restarts {
        let mut rng = seeded(seed.wrapping_add(r as u64));
        starts.push(random_pure_state(d, &mut rng));
    }
    let mut grid_points = 0;
    if d == 2 {
        let (cands, n) = grid_candidates(a, b);
        grid_points = n;
        starts.extend(cands.into_iter().map(|(_, v)| v));
    }
    let results: Vec<(f64, ComplexVector)> = starts
        .into_par_iter()
        .map(|s| ascend(a, b, s))
        .collect();
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.0 > results[best].0 {
            best = i;
        }
    }
    let (value, psi) = results[best].clone();
    Ok(DistanceEstimate {
        lower_bound: value.clamp(0.0, 1.0),
        argmax_state: DensityOperator::from_pure(&psi)?,
        argmax_vector: psi,
        restarts,
        grid_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{outer, tv_distance};
    use crate::random::{random_channel, random_density, random_pure_state};

    #[test]
    fn equal_channels_have_zero_distance() {
        let mut rng = seeded(31);
        let ch = random_channel(3, 2, &mut rng);
        let est = channel_distance_1to1(&ch, &ch, 4, 0).unwrap();
        assert!(est.lower_bound < 1e-14);
    }

    #[test]
    fn identity_versus_bit_flip() {
        let est = channel_distance_1to1(&Channel::identity(2), &Channel::bit_flip(0.5).unwrap(), 4, 0).unwrap();
        assert!(est.lower_bound >= 0.5 - 1e-12);
        // direct evaluation at |0⟩
        let z = DensityOperator::basis_state(2, 0);
        let out = Channel::bit_flip(0.5).unwrap().apply_matrix(z.matrix());
        assert!((tv_distance(&z, &DensityOperator::new(out).unwrap()).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(est.grid_points, 2 + 179 * 360);
    }

    #[test]
    fn identity_versus_replacement() {
        for d in [2, 3] {
            let repl = Channel::replacement(&ket(d, 0)).unwrap();
            let est = channel_distance_1to1(&Channel::identity(d), &repl, 2, 1).unwrap();
            assert!((est.lower_bound - 1.0).abs() < 1e-12);
            let overlap = est.argmax_vector[0].norm();
            assert!(overlap < 1e-6);
        }
    }

    #[test]
    fn mixed_inputs_never_exceed_bound() {
        let mut rng = seeded(32);
        for d in [2, 3] {
            let a = random_channel(d, 2, &mut rng);
            let b = random_channel(d, 3, &mut rng);
            let est = channel_distance_1to1(&a, &b, 8, 7).unwrap();
            for _ in 0..30 {
                let rho = random_density(d, &mut rng);
                let da = DensityOperator::new(a.apply_matrix(rho.matrix())).unwrap();
                let db = DensityOperator::new(b.apply_matrix(rho.matrix())).unwrap();
                assert!(tv_distance(&da, &db).unwrap() <= est.lower_bound + 1e-12);
            }
            for _ in 0..30 {
                let psi = random_pure_state(d, &mut rng);
                let (v, _) = evaluate(&a, &b, &psi);
                assert!(v <= est.lower_bound + 1e-9);
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let mut rng = seeded(33);
        let a = random_channel(3, 3, &mut rng);
        let b = random_channel(3, 2, &mut rng);
        let x = channel_distance_1to1(&a, &b, 5, 11).unwrap();
        let y = channel_distance_1to1(&a, &b, 5, 11).unwrap();
        assert_eq!(x.lower_bound, y.lower_bound);
    }

    #[test]
    fn bloch_map_reproduces_channel() {
        let mut rng = seeded(34);
        let ch = random_channel(2, 3, &mut rng);
        let (a, t) = bloch_map(&ch);
        let psi = bloch_state(0.7, 2.1);
        let n = Vector3::new(0.7f64.sin() * 2.1f64.cos(), 0.7f64.sin() * 2.1f64.sin(), 0.7f64.cos());
        let r = a * n + t;
        let out = ch.apply_matrix(&outer(&psi, &psi));
        let s = [pauli_x(), pauli_y(), pauli_z()];
        for i in 0..3 {
            assert!(((&s[i] * &out).trace().re - r[i]).abs() < 1e-13);
        }
    }
}
