//! Coherent channel construction with one ancilla qubit per extra Kraus
//! operator.
//!
//! A trace-preserving pair factors as `M₀ = U₀ cos(θP)`, `M₁ = U₁ sin(θP)`.
//! The entangling unitary `exp(−iθ X_A ⊗ P)` is synthesized by cycling
//! through rank-one couplings `X_A ⊗ V_k Π_S V_k†` for times `λ_k Δt`; the
//! ancilla-conditioned `U₀`/`U₁` finishes the job.

use crate::channel::{reduced_channel, Channel, KrausSet};
use crate::distance::{channel_distance_1to1, DEFAULT_RESTARTS};
use crate::error::{Error, Result};
use crate::majorization::ProbabilityVector;
use crate::operators::{
    c, complete_to_unitary, hermitian_residual, identity, ket, max_abs, max_abs_diff, pauli_x,
    projector, reflector_to, tensor, ComplexMatrix, ComplexVector, DensityOperator, UnitaryOperator, C64,
};
use crate::spectral::{arccos_hermitian, cos_hermitian, eigh, expm_hermitian, pinv_psd, polar_unitary, sin_hermitian, sqrt_psd, svd};
use crate::tolerance::TOL_TP;

const ZERO_OPERATOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct RankTwoTarget {
    pub m0: ComplexMatrix,
    pub m1: ComplexMatrix,
    pub u0: ComplexMatrix,
    pub u1: ComplexMatrix,
    /// Positive semidefinite, trace one.
    pub p: ComplexMatrix,
    pub theta: f64,
    /// `M₁ = 0`, so `U₁` is set to the identity.
    pub u1_undefined: bool,
}

impl RankTwoTarget {
    pub fn dim(&self) -> usize {
        self.m0.nrows()
    }

    pub fn theta_p(&self) -> ComplexMatrix {
        self.p.scale(self.theta)
    }

    pub fn channel(&self) -> Result<Channel> {
        Channel::from_kraus_ops(vec![self.m0.clone(), self.m1.clone()])
    }

    /// `|0⟩⟨0| ⊗ U₀ + |1⟩⟨1| ⊗ U₁` on ancilla ⊗ system.
    pub fn conditional_unitary(&self) -> ComplexMatrix {
        let d = self.dim();
        let mut u = ComplexMatrix::zeros(2 * d, 2 * d);
        u.view_mut((0, 0), (d, d)).copy_from(&self.u0);
        u.view_mut((d, d), (d, d)).copy_from(&self.u1);
        u
    }

    /// `exp(−iθ X ⊗ P) = I ⊗ cos(θP) − i X ⊗ sin(θP)`.
    pub fn ideal_entangler(&self) -> ComplexMatrix {
        let tp = self.theta_p();
        let cos = cos_hermitian(&tp).expect("θP is Hermitian");
        let sin = sin_hermitian(&tp).expect("θP is Hermitian");
        tensor(&identity(2), &cos) + tensor(&pauli_x(), &sin).map(|z| z * c(0.0, -1.0))
    }

    pub fn reconstruction_residual(&self) -> f64 {
        let tp = self.theta_p();
        let r0 = max_abs_diff(&self.m0, &(&self.u0 * cos_hermitian(&tp).expect("Hermitian")));
        let r1 = max_abs_diff(&self.m1, &(&self.u1 * sin_hermitian(&tp).expect("Hermitian")));
        r0.max(r1)
    }
}

/// Polar factors of a trace-preserving Kraus pair.
pub fn lv_polar_extract(m0: &ComplexMatrix, m1: &ComplexMatrix) -> Result<RankTwoTarget> {
    let ks = KrausSet::new(vec![m0.clone(), m1.clone()])?;
    let d = ks.dim();
    let c0 = sqrt_psd(&(m0.adjoint() * m0))?;
    let tp = arccos_hermitian(&crate::operators::hermitian_part(&c0))?;
    let theta = tp.trace().re;
    let (p, theta) = if theta > 1e-15 {
        (tp.unscale(theta), theta)
    } else {
        (identity(d).unscale(d as f64), 0.0)
    };
    let u0 = polar_unitary(m0);
    let u1_undefined = max_abs(m1) < ZERO_OPERATOR;
    let u1 = if u1_undefined { identity(d) } else { polar_unitary(m1) };
    let target = RankTwoTarget {
        m0: m0.clone(),
        m1: m1.clone(),
        u0,
        u1,
        p,
        theta,
        u1_undefined,
    };
    let res = target.reconstruction_residual();
    if res > 1e-9 {
        return Err(Error::NumericalDegeneracy(format!("polar reconstruction residual {res:.3e}")));
    }
    Ok(target)
}

/// Target with trivial polar factors: `M₀ = cos(θP)`, `M₁ = sin(θP)`.
pub fn rank_two_from_generator(p: &ComplexMatrix, theta: f64) -> Result<RankTwoTarget> {
    let tp = p.scale(theta);
    lv_polar_extract(&cos_hermitian(&tp)?, &sin_hermitian(&tp)?)
}

/// Cyclic schedule with `P = Σ_k λ_k V_k Π_S V_k†`.
#[derive(Debug, Clone)]
pub struct AveragingSchedule {
    pub cycles: usize,
    pub weights: ProbabilityVector,
    pub rotations: Vec<UnitaryOperator>,
    pub pi_s: ComplexMatrix,
}

impl AveragingSchedule {
    pub fn new(
        cycles: usize,
        weights: ProbabilityVector,
        rotations: Vec<UnitaryOperator>,
        pi_s: ComplexMatrix,
    ) -> Result<Self> {
        if cycles == 0 {
            return Err(Error::InvalidArgument("schedule needs at least one cycle".into()));
        }
        if rotations.len() != weights.len() || rotations.is_empty() {
            return Err(Error::DimensionMismatch("weights and rotations differ in length".into()));
        }
        let d = pi_s.nrows();
        if rotations.iter().any(|v| v.dim() != d) {
            return Err(Error::DimensionMismatch("rotations do not act on the projector space".into()));
        }
        let herm = hermitian_residual(&pi_s);
        let idem = max_abs_diff(&(&pi_s * &pi_s), &pi_s);
        let tr = pi_s.trace().re;
        if herm > 1e-10 || idem > 1e-10 || (tr - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument("Π_S must be a rank-one projector".into()));
        }
        Ok(Self {
            cycles,
            weights,
            rotations,
            pi_s,
        })
    }

    /// Eigen-decomposition schedule: `V_k` rotates `|0⟩` onto the `k`-th
    /// eigenvector of `P`.
    pub fn spectral(p: &ComplexMatrix, cycles: usize) -> Result<Self> {
        let eig = eigh(p);
        let mut weights = Vec::new();
        let mut states = Vec::new();
        for (k, &l) in eig.values.iter().enumerate() {
            if l > 1e-15 {
                weights.push(l);
                states.push(eig.vector(k));
            }
        }
        if weights.is_empty() {
            weights.push(1.0);
            states.push(ket(p.nrows(), 0));
        }
        Self::from_states(cycles, &weights, &states)
    }

    /// `P = Σ λ_k |ψ_k⟩⟨ψ_k|` for arbitrary (not necessarily orthogonal)
    /// unit vectors.
    pub fn from_states(cycles: usize, weights: &[f64], states: &[ComplexVector]) -> Result<Self> {
        let d = states
            .first()
            .map(|s| s.len())
            .ok_or_else(|| Error::InvalidArgument("no schedule states".into()))?;
        let rotations = states
            .iter()
            .map(|s| UnitaryOperator::with_tolerance(reflector_to(&s.unscale(s.norm())), 1e-10))
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            cycles,
            ProbabilityVector::normalized(weights.to_vec())?,
            rotations,
            projector(&ket(d, 0)),
        )
    }

    pub fn with_cycles(&self, cycles: usize) -> Result<Self> {
        Self::new(cycles, self.weights.clone(), self.rotations.clone(), self.pi_s.clone())
    }

    pub fn dim(&self) -> usize {
        self.pi_s.nrows()
    }

    /// `Σ_k λ_k V_k Π_S V_k†`.
    pub fn averaged(&self) -> ComplexMatrix {
        let d = self.dim();
        let mut acc = ComplexMatrix::zeros(d, d);
        for (l, v) in self.weights.as_slice().iter().zip(&self.rotations) {
            acc += (v.matrix() * &self.pi_s * v.matrix().adjoint()).scale(*l);
        }
        acc
    }

    /// `N` cycles of the piecewise-constant coupling for total angle `θ`.
    pub fn entangler(&self, theta: f64) -> Result<ComplexMatrix> {
        let d = self.dim();
        let dt = theta / self.cycles as f64;
        let mut cycle = identity(2 * d);
        for (l, v) in self.weights.as_slice().iter().zip(&self.rotations) {
            let proj = v.matrix() * &self.pi_s * v.matrix().adjoint();
            let h = tensor(&pauli_x(), &proj);
            cycle = expm_hermitian(&h, l * dt)? * cycle;
        }
        Ok(matrix_power(&cycle, self.cycles))
    }
}

fn matrix_power(m: &ComplexMatrix, mut n: usize) -> ComplexMatrix {
    let mut result = identity(m.nrows());
    let mut base = m.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        base = &base * &base;
        n >>= 1;
    }
    result
}

#[derive(Debug, Clone)]
pub struct LvOutcome {
    pub achieved: Channel,
    pub ideal: Channel,
    /// 1→1 lower bound between achieved and ideal.
    pub trotter_error: f64,
    /// Joint unitary on ancilla ⊗ system.
    pub joint: ComplexMatrix,
}

fn check_schedule(target: &RankTwoTarget, schedule: &AveragingSchedule) -> Result<()> {
    if schedule.dim() != target.dim() {
        return Err(Error::DimensionMismatch("schedule and target dimensions differ".into()));
    }
    if target.theta > 0.0 {
        let r = max_abs_diff(&schedule.averaged(), &target.p);
        if r > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "schedule average differs from P by {r:.3e}"
            )));
        }
    }
    Ok(())
}

/// Simulates the cycled coupling followed by `U_cond`; the ideal channel
/// uses the exact entangler with the same ancilla state.
pub fn lv_simulate(target: &RankTwoTarget, schedule: &AveragingSchedule, ancilla: &DensityOperator) -> Result<LvOutcome> {
    check_schedule(target, schedule)?;
    if ancilla.dim() != 2 {
        return Err(Error::InvalidArgument("ancilla must be a qubit".into()));
    }
    let d = target.dim();
    let cond = target.conditional_unitary();
    let joint = &cond * schedule.entangler(target.theta)?;
    let ideal_u = &cond * target.ideal_entangler();
    let achieved = reduced_channel(&joint, ancilla, d)?;
    let ideal = reduced_channel(&ideal_u, ancilla, d)?;
    let trotter_error = channel_distance_1to1(&achieved, &ideal, DEFAULT_RESTARTS, 0)?.lower_bound;
    Ok(LvOutcome {
        achieved,
        ideal,
        trotter_error,
        joint,
    })
}

pub enum NestedSchedules {
    /// Spectral schedule of each stage's `P` with this many cycles.
    Spectral { cycles: usize },
    /// One schedule per stage, in stage order.
    Explicit(Vec<AveragingSchedule>),
}

#[derive(Debug, Clone)]
pub struct NestedOutcome {
    pub achieved: Channel,
    pub ideal: Channel,
    pub target: Channel,
    pub ancilla_qubits: usize,
    pub stages: Vec<RankTwoTarget>,
    /// `‖M₀'†M₀' + M₁'†M₁' − I‖_max` for each stage pair.
    pub stage_tp_residuals: Vec<f64>,
    pub pseudo_inverse_used: bool,
    pub trotter_error: f64,
    pub target_error: f64,
}

/// `(A ⊕ completion on ker Ã) Ã⁺`: the rescaled remaining operators and
/// whether a kernel had to be completed.
fn next_stage_ops(rest: &[ComplexMatrix], tilde: &ComplexMatrix) -> Result<(Vec<ComplexMatrix>, bool)> {
    let d = tilde.nrows();
    let (inv, ker) = pinv_psd(tilde, 1e-10)?;
    let mut ops: Vec<ComplexMatrix> = rest.iter().map(|a| a * &inv).collect();
    let kernel_dim = ker.trace().re.round() as usize;
    if kernel_dim == 0 {
        return Ok((ops, false));
    }
    for (i, a) in rest.iter().enumerate() {
        let leak = max_abs(&(a * &ker));
        if leak > 1e-9 {
            return Err(Error::SupportMismatch(format!(
                "operator {i} acts on the kernel of the intermediate operator ({leak:.3e})"
            )));
        }
    }
    // isometry from ker into the orthocomplement of range(ops[0])
    let s = svd(&ops[0]);
    let range: Vec<ComplexVector> = s
        .sigma
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 1e-10)
        .map(|(i, _)| s.u.column(i).into_owned())
        .collect();
    let full = if range.is_empty() {
        identity(d)
    } else {
        complete_to_unitary(&ComplexMatrix::from_columns(&range))?
    };
    let keig = eigh(&ker);
    let mut y = ComplexMatrix::zeros(d, d);
    for j in 0..kernel_dim {
        let target = full.column(range.len() + j).into_owned();
        y += &target * keig.vector(j).adjoint();
    }
    ops[0] += y;
    Ok((ops, true))
}

/// Nested protocol for `m ≥ 2` Kraus operators using `m − 1` ancilla qubits
/// laid out `a₁ ⊗ … ⊗ a_{m−1} ⊗ S`. Stage `j` acts on `a_j ⊗ S` controlled on
/// `a₁ … a_{j−1}` all being `|1⟩`.
pub fn lv_nested(ops: &[ComplexMatrix], schedules: &NestedSchedules, ancillas: &[DensityOperator]) -> Result<NestedOutcome> {
    let target = Channel::from_kraus_ops(ops.to_vec())?;
    let m = ops.len();
    if m < 2 {
        return Err(Error::InvalidArgument("nested protocol needs at least two Kraus operators".into()));
    }
    if ancillas.len() != m - 1 || ancillas.iter().any(|a| a.dim() != 2) {
        return Err(Error::InvalidArgument(format!(
            "{m} Kraus operators need {} ancilla qubits",
            m - 1
        )));
    }
    let d = target.dim();
    let mut stages = Vec::new();
    let mut residuals = Vec::new();
    let mut pinv_used = false;
    let mut current: Vec<ComplexMatrix> = ops.to_vec();
    loop {
        let (first, second) = if current.len() == 2 {
            (current[0].clone(), current[1].clone())
        } else {
            let mut s = ComplexMatrix::zeros(d, d);
            for a in &current[1..] {
                s += a.adjoint() * a;
            }
            (current[0].clone(), sqrt_psd(&s)?)
        };
        let pair_res = max_abs_diff(&(first.adjoint() * &first + second.adjoint() * &second), &identity(d));
        if pair_res > TOL_TP {
            return Err(Error::NotTracePreserving(pair_res));
        }
        residuals.push(pair_res);
        stages.push(lv_polar_extract(&first, &second)?);
        if current.len() == 2 {
            break;
        }
        let (next, used) = next_stage_ops(&current[1..], &second)?;
        pinv_used |= used;
        current = next;
    }

    let n = stages.len();
    let mut joint = identity((1 << n) * d);
    let mut ideal = identity((1 << n) * d);
    for (j, stage) in stages.iter().enumerate() {
        let schedule = match schedules {
            NestedSchedules::Spectral { cycles } => AveragingSchedule::spectral(&stage.p, *cycles)?,
            NestedSchedules::Explicit(list) => list
                .get(j)
                .cloned()
                .ok_or_else(|| Error::InvalidArgument(format!("missing schedule for stage {j}")))?,
        };
        check_schedule(stage, &schedule)?;
        let cond = stage.conditional_unitary();
        let local = &cond * schedule.entangler(stage.theta)?;
        let local_ideal = &cond * stage.ideal_entangler();
        joint = controlled_stage(&local, n, j, d) * joint;
        ideal = controlled_stage(&local_ideal, n, j, d) * ideal;
    }
    let mut env = ancillas[0].clone();
    for a in &ancillas[1..] {
        env = env.tensor(a);
    }
    let achieved = reduced_channel(&joint, &env, d)?;
    let ideal = reduced_channel(&ideal, &env, d)?;
    let trotter_error = channel_distance_1to1(&achieved, &ideal, DEFAULT_RESTARTS, 0)?.lower_bound;
    let target_error = channel_distance_1to1(&achieved, &target, DEFAULT_RESTARTS, 0)?.lower_bound;
    Ok(NestedOutcome {
        achieved,
        ideal,
        target,
        ancilla_qubits: n,
        stages,
        stage_tp_residuals: residuals,
        pseudo_inverse_used: pinv_used,
        trotter_error,
        target_error,
    })
}

pub fn lv_nested_rank3(
    m0: &ComplexMatrix,
    m1: &ComplexMatrix,
    m2: &ComplexMatrix,
    schedules: &NestedSchedules,
    ancillas: [&DensityOperator; 2],
) -> Result<NestedOutcome> {
    lv_nested(
        &[m0.clone(), m1.clone(), m2.clone()],
        schedules,
        &[ancillas[0].clone(), ancillas[1].clone()],
    )
}

/// Embeds `local` (on `a_j ⊗ S`) into `a₁ ⊗ … ⊗ a_n ⊗ S`, acting only when
/// ancillas `a₁ … a_{j−1}` are all `|1⟩`.
fn controlled_stage(local: &ComplexMatrix, n: usize, j: usize, d: usize) -> ComplexMatrix {
    let dim = (1 << n) * d;
    let mut out = ComplexMatrix::zeros(dim, dim);
    let bit = |bits: usize, k: usize| (bits >> (n - 1 - k)) & 1;
    for col in 0..dim {
        let bits = col / d;
        let s = col % d;
        let active = (0..j).all(|k| bit(bits, k) == 1);
        if !active {
            out[(col, col)] = c(1.0, 0.0);
            continue;
        }
        let aj = bit(bits, j);
        for ajp in 0..2 {
            let nb = (bits & !(1 << (n - 1 - j))) | (ajp << (n - 1 - j));
            for sp in 0..d {
                out[(nb * d + sp, col)] = local[(ajp * d + sp, aj * d + s)];
            }
        }
    }
    out
}

/// A completely positive map given by Kraus operators, not necessarily
/// trace preserving.
#[derive(Debug, Clone)]
pub struct CpMap {
    pub kraus: Vec<ComplexMatrix>,
}

impl CpMap {
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let d = rho.nrows();
        let mut out = ComplexMatrix::zeros(d, d);
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct NoisyOutcome {
    pub achieved: Channel,
    /// Unnormalized system maps conditioned on ancilla outcome 0 and 1,
    /// before the conditional unitary.
    pub conditional_maps: [CpMap; 2],
    pub error_lower_bound: f64,
}

/// Qubit ancilla `[[w₀, q], [q*, w₁]]`.
pub fn noisy_ancilla_state(w0: f64, w1: f64, q: C64) -> Result<DensityOperator> {
    if w0 < 0.0 || w1 < 0.0 || (w0 + w1 - 1.0).abs() > 1e-10 || q.norm_sqr() > w0 * w1 + 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "invalid ancilla parameters w0={w0}, w1={w1}, |q|²={}",
            q.norm_sqr()
        )));
    }
    DensityOperator::new(ComplexMatrix::from_row_slice(2, 2, &[c(w0, 0.0), q, q.conj(), c(w1, 0.0)]))
}

/// Exact protocol with a mixed ancilla; error measured against the target.
pub fn lv_noisy_ancilla(target: &RankTwoTarget, w0: f64, w1: f64, q: C64) -> Result<NoisyOutcome> {
    let env = noisy_ancilla_state(w0, w1, q)?;
    let d = target.dim();
    let ent = target.ideal_entangler();
    let achieved = reduced_channel(&(target.conditional_unitary() * &ent), &env, d)?;
    let eig = eigh(env.matrix());
    let mut maps = [CpMap { kraus: vec![] }, CpMap { kraus: vec![] }];
    for (a, &p) in eig.values.iter().enumerate() {
        if p <= 1e-15 {
            continue;
        }
        let va = eig.vector(a);
        let col = ent.columns(0, d) * va[0] + ent.columns(d, d) * va[1];
        for (b, map) in maps.iter_mut().enumerate() {
            map.kraus.push(col.rows(b * d, d).scale(p.sqrt()));
        }
    }
    let error_lower_bound = channel_distance_1to1(&achieved, &target.channel()?, DEFAULT_RESTARTS, 0)?.lower_bound;
    Ok(NoisyOutcome {
        achieved,
        conditional_maps: maps,
        error_lower_bound,
    })
}

/// Conditional maps for a diagonal ancilla:
/// `ρ|₀ = w₀ cρc + w₁ sρs` and `ρ|₁ = w₀ sρs + w₁ cρc`.
pub fn conditional_closed_form(target: &RankTwoTarget, w0: f64, w1: f64, rho: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let tp = target.theta_p();
    let co = cos_hermitian(&tp).expect("Hermitian");
    let si = sin_hermitian(&tp).expect("Hermitian");
    let crc = &co * rho * &co;
    let srs = &si * rho * &si;
    (crc.scale(w0) + srs.scale(w1), srs.scale(w0) + crc.scale(w1))
}

/// Non-orthogonal two-term schedule `P = ½|0⟩⟨0| + ½|+⟩⟨+|` on a qubit.
pub fn two_term_qubit_schedule(cycles: usize) -> Result<AveragingSchedule> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = ComplexVector::from_vec(vec![c(s, 0.0), c(s, 0.0)]);
    AveragingSchedule::from_states(cycles, &[0.5, 0.5], &[ket(2, 0), plus])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{diag_real, pauli_z, tv_distance};
    use crate::random::{random_density, random_unitary, seeded};

    fn amplitude_damping_pair(g: f64) -> (ComplexMatrix, ComplexMatrix) {
        let ad = Channel::amplitude_damping(g).unwrap();
        (ad.kraus().ops()[0].clone(), ad.kraus().ops()[1].clone())
    }

    #[test]
    fn polar_trivial_and_amplitude_damping() {
        let t = lv_polar_extract(&identity(2), &ComplexMatrix::zeros(2, 2)).unwrap();
        assert_eq!(t.theta, 0.0);
        assert!(t.u1_undefined);
        assert!(max_abs_diff(&t.u0, &identity(2)) < 1e-15);

        let (m0, m1) = amplitude_damping_pair(0.36);
        let t = lv_polar_extract(&m0, &m1).unwrap();
        let expected = diag_real(&[0.0, 0.8f64.acos()]);
        assert!(max_abs_diff(&t.theta_p(), &expected) < 1e-12);
        assert!((t.p.trace().re - 1.0).abs() < 1e-14);
        assert!(t.reconstruction_residual() < 1e-12);
    }

    #[test]
    fn polar_of_random_unitary_block() {
        let mut rng = seeded(61);
        for _ in 0..10 {
            let u = random_unitary(4, &mut rng);
            let m0 = u.matrix().view((0, 0), (2, 2)).into_owned();
            let m1 = u.matrix().view((2, 0), (2, 2)).into_owned();
            let t = lv_polar_extract(&m0, &m1).unwrap();
            assert!(t.reconstruction_residual() <= 1e-9);
        }
        assert!(lv_polar_extract(&identity(2), &identity(2)).is_err());
    }

    #[test]
    fn single_term_schedule_is_exact() {
        let (m0, m1) = amplitude_damping_pair(0.36);
        let t = lv_polar_extract(&m0, &m1).unwrap();
        let sched = AveragingSchedule::spectral(&t.p, 1).unwrap();
        assert_eq!(sched.rotations.len(), 1);
        let anc = DensityOperator::basis_state(2, 0);
        for n in [1, 7] {
            let out = lv_simulate(&t, &sched.with_cycles(n).unwrap(), &anc).unwrap();
            assert!(out.trotter_error <= 1e-10);
            let err = channel_distance_1to1(&out.achieved, &t.channel().unwrap(), 4, 0).unwrap();
            assert!(err.lower_bound <= 1e-10);
        }
    }

    #[test]
    fn trotter_error_shrinks_with_cycles() {
        let sched = two_term_qubit_schedule(8).unwrap();
        let t = rank_two_from_generator(&sched.averaged(), 1.2).unwrap();
        let anc = DensityOperator::basis_state(2, 0);
        let e8 = lv_simulate(&t, &sched, &anc).unwrap().trotter_error;
        let e64 = lv_simulate(&t, &sched.with_cycles(64).unwrap(), &anc).unwrap().trotter_error;
        assert!(e8 > 0.0 && e8 / e64 >= 4.0, "e8={e8} e64={e64}");
    }

    #[test]
    fn schedule_mismatch_rejected() {
        let (m0, m1) = amplitude_damping_pair(0.36);
        let t = lv_polar_extract(&m0, &m1).unwrap();
        let sched = two_term_qubit_schedule(4).unwrap();
        assert!(lv_simulate(&t, &sched, &DensityOperator::basis_state(2, 0)).is_err());
    }

    #[test]
    fn nested_rank_three_pauli_mixture() {
        let s = [0.5f64.sqrt(), 0.3f64.sqrt(), 0.2f64.sqrt()];
        let ops = [identity(2).scale(s[0]), pauli_x().scale(s[1]), pauli_z().scale(s[2])];
        let anc = DensityOperator::basis_state(2, 0);
        let out = lv_nested_rank3(&ops[0], &ops[1], &ops[2], &NestedSchedules::Spectral { cycles: 16 }, [&anc, &anc]).unwrap();
        assert_eq!(out.ancilla_qubits, 2);
        assert!(out.stage_tp_residuals.iter().all(|&r| r <= 1e-9));
        assert!(out.target_error <= 2e-2);
        assert!(max_abs_diff(out.ideal.choi().matrix(), out.target.choi().matrix()) < 1e-9);
    }

    #[test]
    fn nested_with_vanishing_third_operator() {
        let (m0, m1) = amplitude_damping_pair(0.5);
        let zero = ComplexMatrix::zeros(2, 2);
        let anc = DensityOperator::basis_state(2, 0);
        let out = lv_nested_rank3(&m0, &m1, &zero, &NestedSchedules::Spectral { cycles: 4 }, [&anc, &anc]).unwrap();
        assert!(out.pseudo_inverse_used);
        assert!(out.stages[1].theta.abs() < 1e-9 || out.stages[1].u1_undefined);
        assert!(out.target_error <= 1e-9);
    }

    #[test]
    fn nested_rank_four_uses_three_ancillas() {
        let dep = Channel::depolarizing(0.6).unwrap();
        let anc = DensityOperator::basis_state(2, 0);
        let out = lv_nested(dep.kraus().ops(), &NestedSchedules::Spectral { cycles: 8 }, &[anc.clone(), anc.clone(), anc]).unwrap();
        assert_eq!(out.ancilla_qubits, 3);
        assert!(max_abs_diff(out.ideal.choi().matrix(), dep.choi().matrix()) < 1e-9);
    }

    #[test]
    fn noisy_ancilla_formulas_and_monotonicity() {
        let (m0, m1) = amplitude_damping_pair(0.36);
        let t = lv_polar_extract(&m0, &m1).unwrap();
        let pure = lv_noisy_ancilla(&t, 1.0, 0.0, c(0.0, 0.0)).unwrap();
        assert!(pure.error_lower_bound <= 1e-10);
        let mut rng = seeded(62);
        let rho = random_density(2, &mut rng);
        let mut last = 0.0;
        for i in 0..=10 {
            let w1 = 0.02 * i as f64;
            let out = lv_noisy_ancilla(&t, 1.0 - w1, w1, c(0.0, 0.0)).unwrap();
            let (r0, r1) = conditional_closed_form(&t, 1.0 - w1, w1, rho.matrix());
            assert!(max_abs_diff(&out.conditional_maps[0].apply(rho.matrix()), &r0) <= 1e-10);
            assert!(max_abs_diff(&out.conditional_maps[1].apply(rho.matrix()), &r1) <= 1e-10);
            assert!(out.error_lower_bound >= last - 1e-12);
            last = out.error_lower_bound;
        }
        assert!(lv_noisy_ancilla(&t, 0.9, 0.1, c(0.0, 0.0)).unwrap().error_lower_bound > 1e-3);
        assert!(lv_noisy_ancilla(&t, 0.9, 0.1, c(0.5, 0.0)).is_err());
        // coherences are allowed as long as the state is valid
        assert!(lv_noisy_ancilla(&t, 0.9, 0.1, c(0.2, 0.1)).is_ok());
    }

    #[test]
    fn hermitian_psd_pair_is_immune_to_ancilla_noise() {
        let t = rank_two_from_generator(&diag_real(&[0.3, 0.7]), 0.9).unwrap();
        assert!(max_abs_diff(&t.u0, &identity(2)) < 1e-12);
        assert!(max_abs_diff(&t.u1, &identity(2)) < 1e-12);
        let out = lv_noisy_ancilla(&t, 0.8, 0.2, c(0.0, 0.0)).unwrap();
        assert!(out.error_lower_bound <= 1e-10);
        let mut rng = seeded(63);
        let rho = DensityOperator::new(random_density(2, &mut rng).into_matrix()).unwrap();
        let a = DensityOperator::new(out.achieved.apply_matrix(rho.matrix())).unwrap();
        let b = DensityOperator::new(t.channel().unwrap().apply_matrix(rho.matrix())).unwrap();
        assert!(tv_distance(&a, &b).unwrap() < 1e-12);
    }
}
