//! Majorization of probability vectors and unistochastic connections.

use crate::error::{Error, Result};
use crate::operators::{c, ComplexMatrix, UnitaryOperator};

const SUM_TOL: f64 = 1e-10;
const NEG_TOL: f64 = 1e-12;

/// Nonnegative weights summing to one. Entries in `[-1e-12, 0)` are clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    weights: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("empty probability vector".into()));
        }
        let mut out = Vec::with_capacity(weights.len());
        for w in weights {
            if !w.is_finite() {
                return Err(Error::InvalidArgument("non-finite probability".into()));
            }
            if w < -NEG_TOL {
                return Err(Error::InvalidArgument(format!("negative probability {w}")));
            }
            out.push(w.max(0.0));
        }
        let s: f64 = out.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidArgument(format!("probabilities sum to {s}")));
        }
        Ok(Self { weights: out })
    }

    /// Normalizes nonnegative weights; fails on a zero or negative total.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument("weights have no positive mass".into()));
        }
        Self::new(weights.into_iter().map(|w| w / s).collect())
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn padded(&self, n: usize) -> Vec<f64> {
        let mut v = self.weights.clone();
        v.resize(n.max(v.len()), 0.0);
        v
    }
}

/// Indices sorting `v` descending, ties by original index.
pub fn descending_order(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    idx
}

fn sorted_desc(v: &[f64]) -> Vec<f64> {
    descending_order(v).into_iter().map(|i| v[i]).collect()
}

/// `p ⪰ q`: sorted prefix sums of `p` dominate those of `q` (slack `1e-12`).
pub fn majorizes(p: &ProbabilityVector, q: &ProbabilityVector) -> bool {
    let n = p.len().max(q.len());
    let ps = sorted_desc(&p.padded(n));
    let qs = sorted_desc(&q.padded(n));
    let (mut sp, mut sq) = (0.0, 0.0);
    for k in 0..n {
        sp += ps[k];
        sq += qs[k];
        if sp - sq < -NEG_TOL {
            return false;
        }
    }
    true
}

/// Real orthogonal `V` with `q_i = Σ_j |V_ij|² p_j`, built from at most
/// `n − 1` Givens rotations.
///
/// Works in the descending frames of `p` and `q`. At each stage the largest
/// unmatched target `y` lies between two adjacent active diagonal entries
/// `x_a ≥ y ≥ x_b`; a rotation with `c² = (y − x_b)/(x_a − x_b)` moves `y`
/// onto position `a`, which then leaves the active set.
pub fn unistochastic_connect(p: &ProbabilityVector, q: &ProbabilityVector) -> Result<UnitaryOperator> {
    if !majorizes(p, q) {
        return Err(Error::MajorizationViolation(format!(
            "{:?} does not majorize {:?}",
            p.as_slice(),
            q.as_slice()
        )));
    }
    let n = p.len().max(q.len());
    let pp = p.padded(n);
    let qp = q.padded(n);
    let perm_p = descending_order(&pp);
    let perm_q = descending_order(&qp);
    let mut x: Vec<f64> = perm_p.iter().map(|&i| pp[i]).collect();
    let y: Vec<f64> = perm_q.iter().map(|&i| qp[i]).collect();

    // rows of vs are indexed by diagonal position, columns by sorted-p index
    let mut vs = vec![vec![0.0f64; n]; n];
    for (i, row) in vs.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let mut active: Vec<usize> = (0..n).collect();
    let mut assign = vec![0usize; n];
    for (t, &yt) in y.iter().enumerate() {
        if active.len() == 1 {
            assign[active[0]] = t;
            break;
        }
        let split = (0..active.len() - 1)
            .find(|&i| x[active[i + 1]] <= yt)
            .unwrap_or(active.len() - 2);
        let a = active[split];
        let b = active[split + 1];
        let gap = x[a] - x[b];
        let c2 = if gap > 1e-300 {
            ((yt - x[b]) / gap).clamp(0.0, 1.0)
        } else {
            1.0
        };
        let cs = c2.sqrt();
        let sn = (1.0 - c2).sqrt();
        if sn > 0.0 {
            for col in 0..n {
                let ra = vs[a][col];
                let rb = vs[b][col];
                vs[a][col] = cs * ra - sn * rb;
                vs[b][col] = sn * ra + cs * rb;
            }
        }
        let xa = x[a];
        x[a] = c2 * xa + (1.0 - c2) * x[b];
        x[b] = (1.0 - c2) * xa + c2 * x[b];
        assign[a] = t;
        active.remove(split);
    }

    // V[orig_q, orig_p] = vs[pos][k] where pos is matched to sorted target t
    let mut v = ComplexMatrix::zeros(n, n);
    for (pos, &t) in assign.iter().enumerate() {
        for (k, &orig_p) in perm_p.iter().enumerate() {
            v[(perm_q[t], orig_p)] = c(vs[pos][k], 0.0);
        }
    }
    UnitaryOperator::new(v)
}

/// `max_i |q_i − Σ_j |V_ij|² p_j|`.
pub fn unistochastic_residual(v: &ComplexMatrix, p: &[f64], q: &[f64]) -> f64 {
    let n = v.nrows();
    (0..n)
        .map(|i| {
            let s: f64 = (0..n).map(|j| v[(i, j)].norm_sqr() * p.get(j).copied().unwrap_or(0.0)).sum();
            (q.get(i).copied().unwrap_or(0.0) - s).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{identity, max_abs_diff, real_matrix};
    use crate::random::{random_probabilities, seeded};
    use proptest::prelude::*;

    fn pv(v: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn majorization_examples() {
        assert!(majorizes(&pv(&[1.0, 0.0, 0.0]), &pv(&[0.2, 0.5, 0.3])));
        let third = 1.0 / 3.0;
        assert!(!majorizes(&pv(&[third, third, third]), &pv(&[0.5, 0.3, 0.2])));
        assert!(majorizes(&pv(&[0.5, 0.3, 0.2]), &pv(&[0.4, 0.35, 0.25])));
        // shorter vectors are zero padded
        assert!(majorizes(&pv(&[1.0]), &pv(&[0.5, 0.5])));
        assert!(!majorizes(&pv(&[0.5, 0.5]), &pv(&[1.0])));
    }

    #[test]
    fn probability_vector_validation() {
        assert!(ProbabilityVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilityVector::new(vec![1.5, -0.5]).is_err());
        assert_eq!(ProbabilityVector::new(vec![1.0 + 1e-13, -1e-13]).unwrap().as_slice()[1], 0.0);
        assert!(ProbabilityVector::new(vec![]).is_err());
    }

    #[test]
    fn two_level_rotation() {
        let v = unistochastic_connect(&pv(&[1.0, 0.0]), &pv(&[0.7, 0.3])).unwrap();
        let (a, b) = (0.7f64.sqrt(), 0.3f64.sqrt());
        assert!(max_abs_diff(v.matrix(), &real_matrix(2, 2, &[a, -b, b, a])) < 1e-15);
        assert!(unistochastic_residual(v.matrix(), &[1.0, 0.0], &[0.7, 0.3]) < 1e-15);
    }

    #[test]
    fn equal_vectors_give_permutations() {
        let v = unistochastic_connect(&pv(&[0.5, 0.3, 0.2]), &pv(&[0.5, 0.3, 0.2])).unwrap();
        assert!(max_abs_diff(v.matrix(), &identity(3)) < 1e-15);
        let v = unistochastic_connect(&pv(&[0.2, 0.5, 0.3]), &pv(&[0.5, 0.3, 0.2])).unwrap();
        assert!(unistochastic_residual(v.matrix(), &[0.2, 0.5, 0.3], &[0.5, 0.3, 0.2]) < 1e-15);
        assert!(v.matrix().iter().all(|z| z.norm() < 1e-15 || (z.norm() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn three_level_example_and_violation() {
        let p = [0.5, 0.3, 0.2];
        let q = [0.4, 0.35, 0.25];
        let v = unistochastic_connect(&pv(&p), &pv(&q)).unwrap();
        assert!(unistochastic_residual(v.matrix(), &p, &q) < 1e-14);
        assert!(matches!(
            unistochastic_connect(&pv(&q), &pv(&p)),
            Err(Error::MajorizationViolation(_))
        ));
    }

    /// `q = D p` for a random doubly stochastic-ish mixing gives a majorizing pair.
    fn majorized_pair(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = seeded(seed);
        let p = random_probabilities(n, &mut rng);
        let u = crate::random::random_unitary(n, &mut rng);
        let q: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| u.matrix()[(i, j)].norm_sqr() * p[j]).sum())
            .collect();
        (p, q)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn connect_satisfies_identity(n in 1usize..=8, seed in any::<u64>()) {
            let (p, q) = majorized_pair(n, seed);
            let pp = ProbabilityVector::normalized(p.clone()).unwrap();
            let qq = ProbabilityVector::normalized(q.clone()).unwrap();
            let v = unistochastic_connect(&pp, &qq).unwrap();
            prop_assert!(unistochastic_residual(v.matrix(), pp.as_slice(), qq.as_slice()) <= 1e-10);
            for i in 0..n {
                let row: f64 = (0..n).map(|j| v.matrix()[(i, j)].norm_sqr()).sum();
                let col: f64 = (0..n).map(|j| v.matrix()[(j, i)].norm_sqr()).sum();
                prop_assert!((row - 1.0).abs() <= 1e-10 && (col - 1.0).abs() <= 1e-10);
            }
        }

        #[test]
        fn majorizes_matches_prefix_sums(n in 1usize..=6, seed in any::<u64>()) {
            let mut rng = seeded(seed);
            let p = random_probabilities(n, &mut rng);
            let q = random_probabilities(n, &mut rng);
            let mut ps = p.clone();
            let mut qs = q.clone();
            ps.sort_by(|a, b| b.partial_cmp(a).unwrap());
            qs.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let brute = (1..=n).all(|k| ps[..k].iter().sum::<f64>() >= qs[..k].iter().sum::<f64>() - 1e-12);
            prop_assert_eq!(majorizes(&pv(&p), &pv(&q)), brute);
        }
    }
}
