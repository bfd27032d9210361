//! Channel representations, conversions, Kraus rank and extremality.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::operators::{
    c, diag_real, frobenius_norm, hermitian_residual, identity, is_finite, ket, max_abs_diff,
    outer, partial_trace, pauli_x, pauli_y, pauli_z, trace, unvec_row_major, vec_row_major,
    ComplexMatrix, ComplexVector, CompositeSpace, DensityOperator, UnitaryOperator, C64, ZERO,
};
use crate::spectral::{eigh, smallest_right_singular, svd};
use crate::tolerance::{TOL_HERMITIAN, TOL_PSD, TOL_RANK, TOL_TP};

/// Absolute eigenvalue cut used when a channel's Kraus form is derived from
/// its Choi matrix; only rounding noise is discarded.
const CANONICAL_CUT: f64 = 1e-14;

/// Nonempty list of square Kraus operators with `Σ M†M = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    dim: usize,
    ops: Vec<ComplexMatrix>,
}

impl KrausSet {
    pub fn new(ops: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_tolerance(ops, TOL_TP)
    }

    pub fn with_tolerance(ops: Vec<ComplexMatrix>, tol: f64) -> Result<Self> {
        let Some(first) = ops.first() else {
            return Err(Error::InvalidArgument("empty Kraus set".into()));
        };
        let dim = first.nrows();
        if dim == 0 {
            return Err(Error::DimensionMismatch("zero-dimensional Kraus operator".into()));
        }
        for (k, m) in ops.iter().enumerate() {
            if m.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator {k} is {:?}, expected {dim}x{dim}",
                    m.shape()
                )));
            }
            if !is_finite(m) {
                return Err(Error::NonFinite("Kraus operator"));
            }
        }
        let set = Self { dim, ops };
        let r = set.tp_residual();
        if r > tol {
            return Err(Error::NotTracePreserving(r));
        }
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// `‖Σ M†M − I‖_max`.
    pub fn tp_residual(&self) -> f64 {
        let mut acc = ComplexMatrix::zeros(self.dim, self.dim);
        for m in &self.ops {
            acc += m.adjoint() * m;
        }
        max_abs_diff(&acc, &identity(self.dim))
    }

    /// Extends the set with zero operators up to `m` elements.
    pub fn padded(&self, m: usize) -> KrausSet {
        let mut ops = self.ops.clone();
        while ops.len() < m {
            ops.push(ComplexMatrix::zeros(self.dim, self.dim));
        }
        KrausSet { dim: self.dim, ops }
    }

    pub(crate) fn from_parts_unchecked(dim: usize, ops: Vec<ComplexMatrix>) -> Self {
        Self { dim, ops }
    }
}

/// Choi matrix `(E ⊗ I)(Φ)` with `Φ` normalized to trace one.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    dim: usize,
    mat: ComplexMatrix,
}

impl ChoiMatrix {
    pub fn new(dim: usize, mat: ComplexMatrix) -> Result<Self> {
        let n = dim * dim;
        if dim == 0 || mat.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix for d={dim} must be {n}x{n}, got {:?}",
                mat.shape()
            )));
        }
        if !is_finite(&mat) {
            return Err(Error::NonFinite("Choi matrix"));
        }
        let h = hermitian_residual(&mat);
        if h > TOL_HERMITIAN {
            return Err(Error::NotHermitian(h));
        }
        let tr = trace(&mat).re;
        if (tr - 1.0).abs() > TOL_TP {
            return Err(Error::NotTraceOne(tr));
        }
        let min = eigh(&mat).values.last().copied().unwrap_or(0.0);
        if min < -TOL_PSD {
            return Err(Error::NotPositive(min));
        }
        let choi = Self { dim, mat };
        let r = choi.tp_residual();
        if r > TOL_TP {
            return Err(Error::NotTracePreserving(r));
        }
        Ok(choi)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    /// `‖Tr_out C − I/d‖_max`.
    pub fn tp_residual(&self) -> f64 {
        let space = CompositeSpace::env_system(self.dim, self.dim);
        let reduced = partial_trace(&self.mat, &space, 1).expect("square Choi matrix");
        max_abs_diff(&reduced, &identity(self.dim).unscale(self.dim as f64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Kraus,
    Choi,
}

/// A CPTP map on a `d`-dimensional system. Both representations are kept;
/// `source` records which one the channel was built from.
#[derive(Debug, Clone)]
pub struct Channel {
    kraus: KrausSet,
    choi: ChoiMatrix,
    source: Representation,
}

impl Channel {
    pub fn from_kraus(kraus: KrausSet) -> Self {
        let choi = kraus_to_choi(&kraus);
        Self {
            kraus,
            choi,
            source: Representation::Kraus,
        }
    }

    pub fn from_choi(choi: ChoiMatrix) -> Self {
        let kraus = canonical_kraus_from_choi(&choi, CANONICAL_CUT);
        Self {
            kraus,
            choi,
            source: Representation::Choi,
        }
    }

    pub fn from_kraus_ops(ops: Vec<ComplexMatrix>) -> Result<Self> {
        Ok(Self::from_kraus(KrausSet::new(ops)?))
    }

    pub fn identity(d: usize) -> Self {
        Self::from_kraus(KrausSet::from_parts_unchecked(d, vec![identity(d)]))
    }

    pub fn unitary(u: &UnitaryOperator) -> Self {
        Self::from_kraus(KrausSet::from_parts_unchecked(u.dim(), vec![u.matrix().clone()]))
    }

    /// Qubit depolarizing map `ρ ↦ (1−p)ρ + p·I/2`.
    pub fn depolarizing(p: f64) -> Result<Self> {
        if !(0.0..=4.0 / 3.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("depolarizing p={p} outside [0, 4/3]")));
        }
        let a = (1.0 - 0.75 * p).sqrt();
        let b = (0.25 * p).sqrt();
        Self::from_kraus_ops(vec![
            identity(2).scale(a),
            pauli_x().scale(b),
            pauli_y().scale(b),
            pauli_z().scale(b),
        ])
    }

    /// Qubit amplitude damping with decay probability `γ`.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidArgument(format!("damping γ={gamma} outside [0, 1]")));
        }
        let m0 = diag_real(&[1.0, (1.0 - gamma).sqrt()]);
        let mut m1 = ComplexMatrix::zeros(2, 2);
        m1[(0, 1)] = c(gamma.sqrt(), 0.0);
        Self::from_kraus_ops(vec![m0, m1])
    }

    /// `ρ ↦ (1−p)ρ + p·σ_x ρ σ_x`.
    pub fn bit_flip(p: f64) -> Result<Self> {
        Self::mixed_pauli(p, pauli_x())
    }

    /// `ρ ↦ (1−p)ρ + p·σ_z ρ σ_z`.
    pub fn dephasing(p: f64) -> Result<Self> {
        Self::mixed_pauli(p, pauli_z())
    }

    fn mixed_pauli(p: f64, s: ComplexMatrix) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
        }
        Self::from_kraus_ops(vec![identity(2).scale((1.0 - p).sqrt()), s.scale(p.sqrt())])
    }

    /// All-to-one map onto the pure state `ψ`.
    pub fn replacement(psi: &ComplexVector) -> Result<Self> {
        let d = psi.len();
        let n = psi.norm();
        if n < 1e-300 {
            return Err(Error::InvalidArgument("zero replacement state".into()));
        }
        let v = psi.unscale(n);
        Self::from_kraus_ops((0..d).map(|j| outer(&v, &ket(d, j))).collect())
    }

    /// `Σ_j q_j U_j ρ U_j†`.
    pub fn mixed_unitary(weights: &[f64], unitaries: &[UnitaryOperator]) -> Result<Self> {
        if weights.len() != unitaries.len() || weights.is_empty() {
            return Err(Error::DimensionMismatch("weights and unitaries differ in length".into()));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidArgument("negative mixing weight".into()));
        }
        Self::from_kraus_ops(
            weights
                .iter()
                .zip(unitaries)
                .map(|(w, u)| u.matrix().scale(w.sqrt()))
                .collect(),
        )
    }

    /// Convex combination via Choi matrices.
    pub fn convex(weights: &[f64], channels: &[Channel]) -> Result<Self> {
        if weights.len() != channels.len() || weights.is_empty() {
            return Err(Error::DimensionMismatch("weights and channels differ in length".into()));
        }
        let d = channels[0].dim();
        let mut acc = ComplexMatrix::zeros(d * d, d * d);
        for (w, ch) in weights.iter().zip(channels) {
            if ch.dim() != d {
                return Err(Error::DimensionMismatch("channels act on different dimensions".into()));
            }
            acc += ch.choi().matrix().scale(*w);
        }
        Ok(Self::from_choi(ChoiMatrix::new(d, acc)?))
    }

    pub fn dim(&self) -> usize {
        self.kraus.dim
    }

    pub fn kraus(&self) -> &KrausSet {
        &self.kraus
    }

    pub fn choi(&self) -> &ChoiMatrix {
        &self.choi
    }

    pub fn source(&self) -> Representation {
        self.source
    }

    /// Linear action on an arbitrary operator.
    pub fn apply_matrix(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let d = self.dim();
        let mut out = ComplexMatrix::zeros(d, d);
        for m in &self.kraus.ops {
            out += m * rho * m.adjoint();
        }
        out
    }

    /// Heisenberg-picture action `X ↦ Σ M† X M`.
    pub fn adjoint_apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let d = self.dim();
        let mut out = ComplexMatrix::zeros(d, d);
        for m in &self.kraus.ops {
            out += m.adjoint() * x * m;
        }
        out
    }

    /// Canonical Kraus set keeping Choi eigenvalues above `tol`.
    pub fn canonical_kraus(&self, tol: f64) -> KrausSet {
        canonical_kraus_from_choi(&self.choi, tol)
    }

    /// Canonical Kraus set with exactly `kraus_rank` operators.
    pub fn minimal_kraus(&self) -> KrausSet {
        let max = eigh(self.choi.matrix()).values[0];
        self.canonical_kraus(TOL_RANK * max)
    }

    /// Re-derives a Kraus form with at most `d²` operators.
    pub fn compressed(self) -> Self {
        let d = self.dim();
        if self.kraus.len() <= d * d {
            return self;
        }
        Self::from_choi(self.choi)
    }
}

pub fn kraus_to_choi(ks: &KrausSet) -> ChoiMatrix {
    let d = ks.dim;
    let mut mat = ComplexMatrix::zeros(d * d, d * d);
    for m in &ks.ops {
        let v = vec_row_major(m);
        mat += outer(&v, &v);
    }
    ChoiMatrix {
        dim: d,
        mat: mat.unscale(d as f64),
    }
}

/// Canonical Kraus operators `M_k = √(d·λ_k)·unvec(v_k)` for Choi eigenpairs
/// with `λ_k > tol`.
pub fn choi_to_kraus(choi: &ChoiMatrix, tol: f64) -> Result<KrausSet> {
    let eig = eigh(choi.matrix());
    if let Some(&min) = eig.values.last() {
        if min < -tol.max(TOL_PSD) {
            return Err(Error::NotPositive(min));
        }
    }
    Ok(canonical_kraus_from_choi(choi, tol))
}

fn canonical_kraus_from_choi(choi: &ChoiMatrix, tol: f64) -> KrausSet {
    let d = choi.dim;
    let eig = eigh(choi.matrix());
    let mut pairs: Vec<(f64, ComplexVector)> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > tol)
        .map(|(k, &l)| (l, fix_phase(eig.vector(k))))
        .collect();
    if pairs.is_empty() {
        // cannot happen for trace-one Choi matrices; keep the top pair
        pairs.push((eig.values[0].max(0.0), fix_phase(eig.vector(0))));
    }
    sort_canonical(&mut pairs);
    let ops = pairs
        .into_iter()
        .map(|(l, v)| unvec_row_major(&v, d, d).scale((d as f64 * l).sqrt()))
        .collect();
    KrausSet { dim: d, ops }
}

/// Makes the first largest-magnitude entry real and positive.
fn fix_phase(v: ComplexVector) -> ComplexVector {
    let max = v.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let pivot = v.iter().find(|z| z.norm() >= max - 1e-12).copied().unwrap_or(c(1.0, 0.0));
    let n = pivot.norm();
    if n == 0.0 {
        return v;
    }
    let ph = pivot.conj() / n;
    v.map(|z| z * ph)
}

fn lex_cmp(a: &ComplexVector, b: &ComplexVector) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != Ordering::Equal {
            return o.reverse();
        }
    }
    Ordering::Equal
}

/// Descending eigenvalues; clusters of numerically equal eigenvalues are
/// ordered lexicographically by eigenvector entries.
fn sort_canonical(pairs: &mut [(f64, ComplexVector)]) {
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && (pairs[end - 1].0 - pairs[end].0).abs() <= 1e-12 * pairs[start].0.max(1.0) {
            end += 1;
        }
        pairs[start..end].sort_by(|a, b| lex_cmp(&a.1, &b.1));
        start = end;
    }
}

/// Rank of the Choi matrix with relative eigenvalue threshold `1e-9`.
pub fn kraus_rank(ch: &Channel) -> usize {
    let vals = eigh(ch.choi().matrix()).values;
    let cut = TOL_RANK * vals[0].max(0.0);
    vals.iter().filter(|&&l| l > cut).count().max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalityVerdict {
    pub is_extreme: bool,
    pub gram_rank: usize,
    /// Kraus rank of the channel.
    pub m: usize,
    /// Smallest of the `m²` singular values of the product stack, computed
    /// from unit-norm Kraus operators so the value is scale free.
    pub min_singular_value: f64,
}

/// Products of the canonical Kraus operators, flattened as columns.
fn product_stack(ops: &[ComplexMatrix]) -> ComplexMatrix {
    let d = ops[0].nrows();
    let m = ops.len();
    let normed: Vec<ComplexMatrix> = ops.iter().map(|o| o.unscale(frobenius_norm(o))).collect();
    let mut g = ComplexMatrix::zeros(d * d, m * m);
    for k in 0..m {
        for j in 0..m {
            let p = normed[k].adjoint() * &normed[j];
            g.set_column(k * m + j, &vec_row_major(&p));
        }
    }
    g
}

/// Linear independence test of `{M_k†M_j}` for the canonical Kraus set.
pub fn extremality_test(ch: &Channel, tol: f64) -> ExtremalityVerdict {
    let ks = ch.minimal_kraus();
    let m = ks.len();
    let d = ch.dim();
    let g = product_stack(ks.ops());
    let sigma = svd(&g).sigma;
    let gram_rank = sigma.iter().filter(|&&s| s > tol).count();
    if m > d {
        // m² products cannot be independent in a d²-dimensional space
        return ExtremalityVerdict {
            is_extreme: false,
            gram_rank,
            m,
            min_singular_value: 0.0,
        };
    }
    let min = sigma.get(m * m - 1).copied().unwrap_or(0.0);
    ExtremalityVerdict {
        is_extreme: min > tol,
        gram_rank,
        m,
        min_singular_value: min,
    }
}

/// Hermitian coefficient matrix `X` with `Σ_{kj} X_kj M_j† M_k = 0`, taken
/// from the smallest right singular vector of the normalized product stack.
/// Returns the smallest singular value and `X` expressed for the normalized
/// operators.
pub(crate) fn product_dependence(ops: &[ComplexMatrix]) -> (f64, ComplexMatrix) {
    let m = ops.len();
    let g = product_stack(ops);
    let (s, v) = smallest_right_singular(&g);
    // column index k*m + j holds N_k† N_j, so the coefficient of N_j† N_k is X_kj
    let coeff = ComplexMatrix::from_fn(m, m, |k, j| v[j * m + k]);
    let herm = (&coeff + coeff.adjoint()).scale(0.5);
    let anti = (&coeff - coeff.adjoint()).map(|z| z * c(0.0, -0.5));
    let x = if frobenius_norm(&herm) >= 1e-6 * frobenius_norm(&coeff) {
        herm
    } else {
        anti
    };
    let n = frobenius_norm(&x);
    (s, x.unscale(n))
}

pub fn apply_channel(ch: &Channel, rho: &DensityOperator) -> Result<DensityOperator> {
    if ch.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "channel on d={} applied to state of d={}",
            ch.dim(),
            rho.dim()
        )));
    }
    Ok(DensityOperator::new_unchecked(ch.apply_matrix(rho.matrix())))
}

/// Channel `ρ ↦ Tr_E[W (ρ_E ⊗ ρ) W†]` for `W` on environment ⊗ system.
///
/// Kraus operators are `√p_a (⟨b| ⊗ I) W (|e_a⟩ ⊗ I)` over the eigenpairs
/// `(p_a, e_a)` of `ρ_E`.
pub fn reduced_channel(w: &ComplexMatrix, env: &DensityOperator, d_s: usize) -> Result<Channel> {
    let d_e = env.dim();
    let n = d_e * d_s;
    if w.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "joint operator is {:?}, expected {n}x{n}",
            w.shape()
        )));
    }
    let eig = eigh(env.matrix());
    let mut ops = Vec::new();
    for (a, &p) in eig.values.iter().enumerate() {
        if p <= 1e-15 {
            continue;
        }
        let va = eig.vector(a);
        // W (|e_a⟩ ⊗ I): n × d_s
        let mut col = ComplexMatrix::zeros(n, d_s);
        for cidx in 0..d_e {
            let coeff = va[cidx];
            if coeff == ZERO {
                continue;
            }
            col += w.columns(cidx * d_s, d_s).scale(1.0) * coeff;
        }
        let sp = p.sqrt();
        for b in 0..d_e {
            let k = col.rows(b * d_s, d_s).scale(sp);
            if frobenius_norm(&k) > 1e-15 {
                ops.push(k);
            }
        }
    }
    let ks = KrausSet::new(ops)?;
    Ok(Channel::from_kraus(ks).compressed())
}

/// Scalar helper for tests and diagnostics: `Tr(A B)`.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{tensor, CompositeSpace};
    use crate::random::{random_channel, random_density, random_matrix, random_unitary, seeded};

    fn bell_projector() -> ComplexMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = ComplexVector::from_vec(vec![c(s, 0.0), ZERO, ZERO, c(s, 0.0)]);
        outer(&phi, &phi)
    }

    /// Choi from its definition: apply the channel to each `|j⟩⟨j'|` block.
    fn choi_oracle(ch: &Channel) -> ComplexMatrix {
        let d = ch.dim();
        let mut out = ComplexMatrix::zeros(d * d, d * d);
        for j in 0..d {
            for jp in 0..d {
                let img = ch.apply_matrix(&outer(&ket(d, j), &ket(d, jp)));
                out += tensor(&img, &outer(&ket(d, j), &ket(d, jp)));
            }
        }
        out.unscale(d as f64)
    }

    #[test]
    fn choi_of_identity_and_depolarizing() {
        let id = Channel::identity(2);
        assert!(max_abs_diff(id.choi().matrix(), &bell_projector()) < 1e-15);
        let full = Channel::depolarizing(1.0).unwrap();
        assert!(max_abs_diff(full.choi().matrix(), &identity(4).scale(0.25)) < 1e-15);
        let mut rng = seeded(21);
        for _ in 0..5 {
            let ch = random_channel(3, 4, &mut rng);
            assert!(max_abs_diff(ch.choi().matrix(), &choi_oracle(&ch)) < 1e-14);
        }
    }

    #[test]
    fn choi_to_kraus_examples() {
        let id = Channel::from_choi(ChoiMatrix::new(2, bell_projector()).unwrap());
        assert_eq!(id.kraus().len(), 1);
        let m = &id.kraus().ops()[0];
        let ph = m[(0, 0)];
        assert!(max_abs_diff(&m.map(|z| z / ph), &identity(2)) < 1e-14);
        assert!((ph.norm() - 1.0).abs() < 1e-14);

        let full = ChoiMatrix::new(2, identity(4).scale(0.25)).unwrap();
        let ks = choi_to_kraus(&full, 1e-12).unwrap();
        assert_eq!(ks.len(), 4);
        assert!(max_abs_diff(kraus_to_choi(&ks).matrix(), full.matrix()) < 1e-14);

        let ad = Channel::amplitude_damping(0.36).unwrap();
        let canon = choi_to_kraus(ad.choi(), 1e-12).unwrap();
        assert_eq!(canon.len(), 2);
        assert!(max_abs_diff(kraus_to_choi(&canon).matrix(), &choi_oracle(&ad)) < 1e-14);
        assert!((ad.kraus().ops()[0][(1, 1)].re - 0.8).abs() < 1e-15);
    }

    #[test]
    fn choi_validation() {
        assert!(matches!(
            ChoiMatrix::new(2, identity(4).scale(0.245)),
            Err(Error::NotTraceOne(_))
        ));
        let mut bad = ComplexMatrix::zeros(4, 4);
        bad[(0, 0)] = c(1.0, 0.0);
        assert!(matches!(ChoiMatrix::new(2, bad), Err(Error::NotTracePreserving(_))));
        assert!(ChoiMatrix::new(2, identity(3)).is_err());
        assert!(KrausSet::new(vec![identity(2).scale(0.9)]).is_err());
        assert!(KrausSet::new(vec![]).is_err());
        assert!(KrausSet::new(vec![identity(2), identity(3)]).is_err());
    }

    #[test]
    fn kraus_rank_examples() {
        let mut rng = seeded(22);
        let u = random_unitary(3, &mut rng);
        assert_eq!(kraus_rank(&Channel::unitary(&u)), 1);
        assert_eq!(kraus_rank(&Channel::depolarizing(0.5).unwrap()), 4);
        for g in [0.1, 0.5, 0.9] {
            assert_eq!(kraus_rank(&Channel::amplitude_damping(g).unwrap()), 2);
        }
    }

    #[test]
    fn extremality_examples() {
        let mut rng = seeded(23);
        let u = random_unitary(2, &mut rng);
        let v = extremality_test(&Channel::unitary(&u), 1e-8);
        assert!(v.is_extreme);
        assert_eq!((v.m, v.gram_rank), (1, 1));
        let dep = extremality_test(&Channel::depolarizing(0.5).unwrap(), 1e-8);
        assert!(!dep.is_extreme);
        assert_eq!(dep.m, 4);
        let ad = extremality_test(&Channel::amplitude_damping(0.5).unwrap(), 1e-8);
        assert!(ad.is_extreme);
        assert_eq!(ad.gram_rank, 4);
        // SVD oracle on the textbook Kraus pair
        let g = 0.5f64;
        let m0 = diag_real(&[1.0, (1.0 - g).sqrt()]);
        let mut m1 = ComplexMatrix::zeros(2, 2);
        m1[(0, 1)] = c(g.sqrt(), 0.0);
        let ops = [m0, m1];
        let mut stack = ComplexMatrix::zeros(4, 4);
        for k in 0..2 {
            for j in 0..2 {
                stack.set_column(k * 2 + j, &vec_row_major(&(ops[k].adjoint() * &ops[j])));
            }
        }
        assert!(svd(&stack).sigma[3] > 0.1);
        // bit flip at p=0.5 is a mixture of unitaries with commuting products
        assert!(!extremality_test(&Channel::bit_flip(0.5).unwrap(), 1e-8).is_extreme);
    }

    #[test]
    fn apply_examples() {
        let mut rng = seeded(24);
        let rho = random_density(2, &mut rng);
        let out = apply_channel(&Channel::identity(2), &rho).unwrap();
        assert!(max_abs_diff(out.matrix(), rho.matrix()) < 1e-15);
        let repl = Channel::from_kraus_ops(vec![
            outer(&ket(2, 0), &ket(2, 0)),
            outer(&ket(2, 0), &ket(2, 1)),
        ])
        .unwrap();
        let out = apply_channel(&repl, &rho).unwrap();
        assert!(max_abs_diff(out.matrix(), DensityOperator::basis_state(2, 0).matrix()) < 1e-15);
        let p = 0.3;
        let out = apply_channel(&Channel::depolarizing(p).unwrap(), &DensityOperator::basis_state(2, 0)).unwrap();
        assert!(max_abs_diff(out.matrix(), &diag_real(&[1.0 - p / 2.0, p / 2.0])) < 1e-15);
        assert!(apply_channel(&repl, &random_density(3, &mut rng)).is_err());
    }

    #[test]
    fn reduced_channel_matches_partial_trace() {
        let mut rng = seeded(25);
        let w = random_unitary(6, &mut rng);
        let env = random_density(3, &mut rng);
        let ch = reduced_channel(w.matrix(), &env, 2).unwrap();
        let space = CompositeSpace::env_system(3, 2);
        for _ in 0..5 {
            let rho = random_density(2, &mut rng);
            let joint = w.matrix() * tensor(env.matrix(), rho.matrix()) * w.matrix().adjoint();
            let brute = partial_trace(&joint, &space, 1).unwrap();
            assert!(max_abs_diff(&brute, &ch.apply_matrix(rho.matrix())) < 1e-13);
        }
        assert!(reduced_channel(&random_matrix(5, 5, &mut rng), &env, 2).is_err());
    }

    #[test]
    fn canonical_order_is_descending() {
        let mut rng = seeded(26);
        let ch = random_channel(2, 3, &mut rng);
        let ks = ch.canonical_kraus(1e-12);
        let norms: Vec<f64> = ks.ops().iter().map(frobenius_norm).collect();
        assert!(norms.windows(2).all(|w| w[0] >= w[1] - 1e-12));
        assert_eq!(ks.len(), 3);
    }

    #[test]
    fn dependence_annihilates_products() {
        let dep = Channel::depolarizing(0.5).unwrap();
        let ks = dep.minimal_kraus();
        let (s, x) = product_dependence(ks.ops());
        assert!(s < 1e-10);
        assert!(hermitian_residual(&x) < 1e-14);
        let normed: Vec<ComplexMatrix> =
            ks.ops().iter().map(|o| o.unscale(frobenius_norm(o))).collect();
        let mut acc = ComplexMatrix::zeros(2, 2);
        for k in 0..4 {
            for j in 0..4 {
                acc += (normed[j].adjoint() * &normed[k]) * x[(k, j)];
            }
        }
        assert!(crate::operators::max_abs(&acc) < 1e-10);
    }
}
