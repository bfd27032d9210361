//! Dilations for mixed-unitary targets and convex combinations of extreme
//! channels, driven by majorization of environment populations.

use crate::channel::{extremality_test, kraus_rank, Channel, ExtremalityVerdict};
use crate::dilation::{
    block_embed, finish_report, kraus_for_ancilla, stinespring_complete, DilationReport, MeasureOptions, Method,
    SubsystemDecomposition,
};
use crate::error::{Error, Result};
use crate::majorization::{descending_order, majorizes, unistochastic_connect, ProbabilityVector};
use crate::operators::{
    identity, tensor, tv_distance, ComplexMatrix, DensityOperator, UnitaryOperator,
};
use crate::spectral::eigh;
use crate::tolerance::{TOL_EXTREME, TOL_KERNEL};

/// `T(ρ) = Σ_j q_j U_j ρ U_j†` with every `q_j > 0`.
#[derive(Debug, Clone)]
pub struct StochasticUnitarySpec {
    unitaries: Vec<UnitaryOperator>,
    weights: ProbabilityVector,
}

impl StochasticUnitarySpec {
    pub fn new(unitaries: Vec<UnitaryOperator>, weights: ProbabilityVector) -> Result<Self> {
        if unitaries.is_empty() || unitaries.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} unitaries but {} weights",
                unitaries.len(),
                weights.len()
            )));
        }
        let d = unitaries[0].dim();
        if unitaries.iter().any(|u| u.dim() != d) {
            return Err(Error::DimensionMismatch("unitaries act on different dimensions".into()));
        }
        if weights.as_slice().iter().any(|&w| w <= 0.0) {
            return Err(Error::InvalidArgument("stochastic unitary weights must be strictly positive".into()));
        }
        Ok(Self { unitaries, weights })
    }

    pub fn unitaries(&self) -> &[UnitaryOperator] {
        &self.unitaries
    }

    pub fn weights(&self) -> &ProbabilityVector {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.unitaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unitaries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.unitaries[0].dim()
    }

    pub fn channel(&self) -> Result<Channel> {
        Channel::mixed_unitary(self.weights.as_slice(), &self.unitaries)
    }
}

/// Environment approximated by `(diag(p) ⊗ ρ_F) ⊕ 0` on a virtual subsystem.
#[derive(Debug, Clone)]
pub struct DiagonalInitialization {
    decomp: SubsystemDecomposition,
    populations: ProbabilityVector,
    rho_f: DensityOperator,
    rho_e: DensityOperator,
    epsilon: f64,
}

impl DiagonalInitialization {
    pub fn new(
        rho_e: DensityOperator,
        decomp: SubsystemDecomposition,
        populations: ProbabilityVector,
        rho_f: DensityOperator,
    ) -> Result<Self> {
        if rho_e.dim() != decomp.d_e() || populations.len() != decomp.m() || rho_f.dim() != decomp.f() {
            return Err(Error::DimensionMismatch(
                "diagonal initialization parts do not match the decomposition".into(),
            ));
        }
        let mut init = Self {
            decomp,
            populations,
            rho_f,
            rho_e,
            epsilon: 0.0,
        };
        init.epsilon = tv_distance(&init.rho_e, &init.reconstructed_env())?;
        Ok(init)
    }

    /// Eigenvectors of `ρ_E` in descending order fill `H_M ⊗ H_F` M-major;
    /// `p_μ` is the mass of block `μ` and `ρ_F` the block-averaged spectrum.
    pub fn from_environment(rho_e: &DensityOperator, m: usize, f: usize) -> Result<Self> {
        let d_e = rho_e.dim();
        if m == 0 || f == 0 || m * f > d_e {
            return Err(Error::InvalidArgument(format!(
                "subsystem {m}x{f} does not fit an environment of dimension {d_e}"
            )));
        }
        let eig = eigh(rho_e.matrix());
        let lam: Vec<f64> = eig.values.iter().map(|&x| x.max(0.0)).collect();
        let mass: f64 = lam[..m * f].iter().sum();
        let p: Vec<f64> = (0..m).map(|mu| lam[mu * f..(mu + 1) * f].iter().sum::<f64>() / mass).collect();
        let rf: Vec<f64> = (0..f).map(|phi| (0..m).map(|mu| lam[mu * f + phi]).sum::<f64>() / mass).collect();
        let q = UnitaryOperator::with_tolerance(eig.vectors.adjoint(), 1e-9)?;
        let decomp = SubsystemDecomposition::new(m, f, q)?;
        Self::new(
            rho_e.clone(),
            decomp,
            ProbabilityVector::normalized(p)?,
            DensityOperator::diagonal(&rf)?,
        )
    }

    pub fn decomp(&self) -> &SubsystemDecomposition {
        &self.decomp
    }

    pub fn populations(&self) -> &ProbabilityVector {
        &self.populations
    }

    pub fn rho_f(&self) -> &DensityOperator {
        &self.rho_f
    }

    pub fn rho_e(&self) -> &DensityOperator {
        &self.rho_e
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn reconstructed_env(&self) -> DensityOperator {
        let m_op = crate::operators::diag_real(self.populations.as_slice());
        let adapted = self.decomp.embed(&m_op, self.rho_f.matrix());
        DensityOperator::new_unchecked(self.decomp.to_canonical(&adapted))
    }
}

/// `W = C_U (V_E ⊗ I_S)`: `V` spreads the populations `p` onto `q`, then
/// `U_j` acts on the system conditioned on `|j⟩_M`.
pub fn design_stochastic_unitary(spec: &StochasticUnitarySpec, init: &DiagonalInitialization) -> Result<DilationReport> {
    design_stochastic_unitary_with(spec, init, MeasureOptions::default())
}

pub fn design_stochastic_unitary_with(
    spec: &StochasticUnitarySpec,
    init: &DiagonalInitialization,
    opts: MeasureOptions,
) -> Result<DilationReport> {
    let d = spec.dim();
    let decomp = init.decomp();
    let (m, f) = (decomp.m(), decomp.f());
    if spec.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "{} unitaries need a subsystem of dimension {}, got {m}",
            spec.len(),
            spec.len()
        )));
    }
    if !majorizes(init.populations(), spec.weights()) {
        return Err(Error::MajorizationViolation(format!(
            "environment populations {:?} do not majorize weights {:?}",
            init.populations().as_slice(),
            spec.weights().as_slice()
        )));
    }
    let v = unistochastic_connect(init.populations(), spec.weights())?;
    let d_e = decomp.d_e();
    // V ⊗ I_F on the M ⊗ F block, then ⊗ I_S
    let v_e = block_embed(d_e, 1, f, &[(0, v.matrix().clone())]);
    let mut c_u = ComplexMatrix::zeros(m * d, m * d);
    for (j, u) in spec.unitaries().iter().enumerate() {
        c_u.view_mut((j * d, j * d), (d, d)).copy_from(u.matrix());
    }
    let w_a = block_embed(d_e, d, f, &[(0, c_u)]) * tensor(&v_e, &identity(d));
    let w = UnitaryOperator::with_tolerance(decomp.joint_to_canonical(&w_a, d), 1e-9)?;
    let target = spec.channel()?;
    let diagnostics = vec![
        format!("m={m} f={f} r={}", decomp.r()),
        format!("populations={:?}", init.populations().as_slice()),
    ];
    finish_report(
        &target,
        w,
        init.rho_e().clone(),
        init.epsilon(),
        Method::StochasticUnitary,
        diagnostics,
        opts,
    )
}

/// `T = Σ_k q_k T_k` over extreme channels of Kraus rank at most `d`.
#[derive(Debug, Clone)]
pub struct ConvexCombinationSpec {
    weights: ProbabilityVector,
    channels: Vec<Channel>,
    verdicts: Vec<ExtremalityVerdict>,
}

impl ConvexCombinationSpec {
    pub fn new(weights: ProbabilityVector, channels: Vec<Channel>) -> Result<Self> {
        if channels.is_empty() || channels.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} channels but {} weights",
                channels.len(),
                weights.len()
            )));
        }
        if weights.as_slice().iter().any(|&w| w <= 0.0) {
            return Err(Error::InvalidArgument("convex weights must be strictly positive".into()));
        }
        let d = channels[0].dim();
        let mut verdicts = Vec::with_capacity(channels.len());
        for (k, ch) in channels.iter().enumerate() {
            if ch.dim() != d {
                return Err(Error::DimensionMismatch("components act on different dimensions".into()));
            }
            let v = extremality_test(ch, TOL_EXTREME);
            if !v.is_extreme {
                return Err(Error::InvalidArgument(format!(
                    "component {k} is not extreme (Kraus rank {}, min singular value {:.3e})",
                    v.m, v.min_singular_value
                )));
            }
            verdicts.push(v);
        }
        Ok(Self {
            weights,
            channels,
            verdicts,
        })
    }

    pub fn weights(&self) -> &ProbabilityVector {
        &self.weights
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn verdicts(&self) -> &[ExtremalityVerdict] {
        &self.verdicts
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.channels[0].dim()
    }

    pub fn channel(&self) -> Result<Channel> {
        Channel::convex(self.weights.as_slice(), &self.channels)
    }
}

/// Cofactor and adapted layout chosen by the block-convex algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPlan {
    pub f: usize,
    /// Component order after sorting weights descending.
    pub order: Vec<usize>,
    /// Mass `q̃_ℓ` of each `H_{M,ℓ} ⊗ H_{F,ℓ}` block's populated row.
    pub block_mass: Vec<f64>,
    pub kernel_needed: usize,
    pub kernel_available: usize,
}

/// Steps I-III: ordering, the majorization sums and the kernel count.
pub fn block_convex_plan(spec: &ConvexCombinationSpec, rho_e: &DensityOperator) -> Result<BlockPlan> {
    let d = spec.dim();
    let k = spec.len();
    let d_e = rho_e.dim();
    let lam: Vec<f64> = eigh(rho_e.matrix()).values.iter().map(|&x| x.max(0.0)).collect();
    let order = descending_order(spec.weights().as_slice());
    let q: Vec<f64> = order.iter().map(|&i| spec.weights().as_slice()[i]).collect();
    let prefix = |n: usize| lam[..n.min(d_e)].iter().sum::<f64>();

    let f_max = d_e / k;
    if f_max == 0 {
        return Err(Error::MethodNotViable(format!(
            "environment dimension {d_e} is smaller than the number of components {k}"
        )));
    }
    let f = (1..=f_max).find(|&n| prefix(n) >= q[0] - 1e-12).ok_or_else(|| {
        Error::MethodNotViable(format!(
            "no cofactor f <= {f_max} has leading eigenvalue mass {:.6} >= q_1 = {:.6}",
            prefix(f_max),
            q[0]
        ))
    })?;
    let mut qsum = 0.0;
    for (idx, qk) in q.iter().enumerate() {
        qsum += qk;
        let lsum = prefix((idx + 1) * f);
        if lsum < qsum - 1e-12 {
            return Err(Error::MethodNotViable(format!(
                "majorization sum fails at k={}: eigenvalue mass {lsum:.6} < weight mass {qsum:.6} (f={f})",
                idx + 1
            )));
        }
    }
    let needed = (d - 1) * k * f;
    let available = lam[k * f..].iter().filter(|&&x| x <= TOL_KERNEL).count();
    if available < needed {
        return Err(Error::InsufficientKernel { needed, available });
    }
    let block_mass = (0..k).map(|l| lam[l * f..(l + 1) * f].iter().sum()).collect();
    Ok(BlockPlan {
        f,
        order,
        block_mass,
        kernel_needed: needed,
        kernel_available: available,
    })
}

/// Steps I-IV of the block-convex construction; exact when feasible.
pub fn block_convex_design(spec: &ConvexCombinationSpec, rho_e: &DensityOperator) -> Result<DilationReport> {
    block_convex_design_with(spec, rho_e, MeasureOptions::default())
}

pub fn block_convex_design_with(
    spec: &ConvexCombinationSpec,
    rho_e: &DensityOperator,
    opts: MeasureOptions,
) -> Result<DilationReport> {
    let plan = block_convex_plan(spec, rho_e)?;
    let d = spec.dim();
    let k = spec.len();
    let f = plan.f;
    let d_e = rho_e.dim();
    let eig = eigh(rho_e.matrix());

    // adapted basis: block ℓ occupies ℓ·d·f + μ·f + φ; μ = 0 holds the
    // populated eigenvectors, μ ≥ 1 kernel vectors, then the remainder
    let mut kernel: Vec<usize> = (k * f..d_e).filter(|&i| eig.values[i] <= TOL_KERNEL).collect();
    let mut used = vec![false; d_e];
    let mut basis = Vec::with_capacity(d_e);
    for l in 0..k {
        for mu in 0..d {
            for phi in 0..f {
                let idx = if mu == 0 { l * f + phi } else { kernel.remove(0) };
                used[idx] = true;
                basis.push(eig.vector(idx));
            }
        }
    }
    for (i, u) in used.iter().enumerate() {
        if !u {
            basis.push(eig.vector(i));
        }
    }
    let q = UnitaryOperator::with_tolerance(ComplexMatrix::from_columns(&basis).adjoint(), 1e-9)?;
    let decomp = SubsystemDecomposition::new(k * d, f, q)?;

    let weights_sorted: Vec<f64> = plan.order.iter().map(|&i| spec.weights().as_slice()[i]).collect();
    let v = unistochastic_connect(
        &ProbabilityVector::normalized(plan.block_mass.clone())?,
        &ProbabilityVector::new(weights_sorted)?,
    )?;
    // V acts on the populated rows (ℓ, μ = 0, φ): stride d·f in the M index
    let mut v_big = identity(k * d);
    for a in 0..k {
        for b in 0..k {
            v_big[(a * d, b * d)] = v.matrix()[(a, b)];
        }
    }
    let v_e = block_embed(d_e, 1, f, &[(0, v_big)]);

    let mut blocks = Vec::with_capacity(k);
    for (l, &comp) in plan.order.iter().enumerate() {
        let ks = kraus_for_ancilla(&spec.channels()[comp], d)?;
        blocks.push((l * d * f, stinespring_complete(&ks)?.into_matrix()));
    }
    let w_a = block_embed(d_e, d, f, &blocks) * tensor(&v_e, &identity(d));
    let w = UnitaryOperator::with_tolerance(decomp.joint_to_canonical(&w_a, d), 1e-9)?;
    let target = spec.channel()?;
    let ranks: Vec<usize> = spec.channels().iter().map(kraus_rank).collect();
    let diagnostics = vec![
        format!("K={k} f={f} component ranks={ranks:?}"),
        format!("block masses={:?}", plan.block_mass),
        format!("kernel needed={} available={}", plan.kernel_needed, plan.kernel_available),
        format!("environment dimension used={}", k * d * f),
    ];
    finish_report(&target, w, rho_e.clone(), 0.0, Method::BlockConvex, diagnostics, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilation::verify_dilation;
    use crate::operators::{max_abs_diff, pauli_z};
    use crate::random::{random_isometry, random_unitary, seeded};

    fn dephasing_spec(q: f64) -> StochasticUnitarySpec {
        StochasticUnitarySpec::new(
            vec![UnitaryOperator::identity(2), UnitaryOperator::new(pauli_z()).unwrap()],
            ProbabilityVector::new(vec![q, 1.0 - q]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn single_unitary_is_exact() {
        let mut rng = seeded(41);
        let u = random_unitary(3, &mut rng);
        let spec = StochasticUnitarySpec::new(vec![u], ProbabilityVector::new(vec![1.0]).unwrap()).unwrap();
        let env = DensityOperator::basis_state(1, 0);
        let init = DiagonalInitialization::from_environment(&env, 1, 1).unwrap();
        let rep = design_stochastic_unitary(&spec, &init).unwrap();
        assert!(rep.eps_measured < 1e-10);
        assert!(max_abs_diff(
            rep.achieved_channel().unwrap().choi().matrix(),
            spec.channel().unwrap().choi().matrix()
        ) < 1e-10);
    }

    #[test]
    fn dephasing_from_biased_qubit() {
        let spec = dephasing_spec(0.7);
        let env = DensityOperator::diagonal(&[0.9, 0.1]).unwrap();
        let init = DiagonalInitialization::from_environment(&env, 2, 1).unwrap();
        assert!(init.epsilon() < 1e-14);
        let rep = design_stochastic_unitary(&spec, &init).unwrap();
        let target = spec.channel().unwrap();
        assert!(max_abs_diff(rep.achieved_channel().unwrap().choi().matrix(), target.choi().matrix()) < 1e-9);
        assert!(verify_dilation(&rep, &target, 20, 1).unwrap() < 1e-10);

        let weak = DensityOperator::diagonal(&[0.6, 0.4]).unwrap();
        let init = DiagonalInitialization::from_environment(&weak, 2, 1).unwrap();
        assert!(matches!(
            design_stochastic_unitary(&spec, &init),
            Err(Error::MajorizationViolation(_))
        ));
    }

    #[test]
    fn stochastic_with_cofactor_and_remainder() {
        let mut rng = seeded(42);
        let us: Vec<_> = (0..3).map(|_| random_unitary(2, &mut rng)).collect();
        let spec = StochasticUnitarySpec::new(us, ProbabilityVector::new(vec![0.5, 0.3, 0.2]).unwrap()).unwrap();
        let env = DensityOperator::diagonal(&[0.42, 0.28, 0.15, 0.1, 0.03, 0.02, 0.0]).unwrap();
        let init = DiagonalInitialization::from_environment(&env, 3, 2).unwrap();
        assert!(init.epsilon() < 1e-14);
        let rep = design_stochastic_unitary(&spec, &init).unwrap();
        let target = spec.channel().unwrap();
        assert!(max_abs_diff(rep.achieved_channel().unwrap().choi().matrix(), target.choi().matrix()) < 1e-9);
    }

    #[test]
    fn approximate_diagonal_initialization_is_bounded() {
        let spec = dephasing_spec(0.7);
        let env = DensityOperator::diagonal(&[0.85, 0.1, 0.05]).unwrap();
        let init = DiagonalInitialization::from_environment(&env, 2, 1).unwrap();
        assert!((init.epsilon() - 0.05).abs() < 1e-12);
        let rep = design_stochastic_unitary(&spec, &init).unwrap();
        let v = verify_dilation(&rep, &spec.channel().unwrap(), 20, 2).unwrap();
        assert!(v <= init.epsilon() + 1e-8);
    }

    fn random_extreme_qubit(rng: &mut crate::random::QdfRng) -> Channel {
        loop {
            let v = random_isometry(4, 2, rng);
            let ch = Channel::from_kraus_ops(vec![v.rows(0, 2).into_owned(), v.rows(2, 2).into_owned()]).unwrap();
            if extremality_test(&ch, 1e-6).is_extreme {
                return ch;
            }
        }
    }

    #[test]
    fn block_convex_worked_example() {
        let mut rng = seeded(43);
        let t1 = random_extreme_qubit(&mut rng);
        let t2 = random_extreme_qubit(&mut rng);
        let spec = ConvexCombinationSpec::new(ProbabilityVector::new(vec![0.6, 0.4]).unwrap(), vec![t1, t2]).unwrap();
        let mut spectrum = vec![0.0; 8];
        spectrum[0] = 0.6;
        spectrum[1] = 0.4;
        let env = DensityOperator::diagonal(&spectrum).unwrap();
        let rep = block_convex_design(&spec, &env).unwrap();
        let target = spec.channel().unwrap();
        assert!(max_abs_diff(rep.achieved_channel().unwrap().choi().matrix(), target.choi().matrix()) < 1e-9);
        assert!(verify_dilation(&rep, &target, 20, 3).unwrap() < 1e-9);
        let plan = block_convex_plan(&spec, &env).unwrap();
        assert_eq!(plan.f, 1);
        assert!(env.dim() >= spec.len() * plan.f * spec.dim());

        let mixed = DensityOperator::maximally_mixed(8);
        assert!(matches!(block_convex_design(&spec, &mixed), Err(Error::MethodNotViable(_))));
    }

    #[test]
    fn block_convex_weights_out_of_order_and_rotated_env() {
        let mut rng = seeded(44);
        let t1 = random_extreme_qubit(&mut rng);
        let t2 = random_extreme_qubit(&mut rng);
        let t3 = Channel::unitary(&random_unitary(2, &mut rng));
        let spec =
            ConvexCombinationSpec::new(ProbabilityVector::new(vec![0.2, 0.5, 0.3]).unwrap(), vec![t1, t2, t3]).unwrap();
        let u = random_unitary(8, &mut rng);
        let diag = DensityOperator::diagonal(&[0.55, 0.3, 0.15, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let env = u.conjugate(&diag);
        let rep = block_convex_design(&spec, &env).unwrap();
        let target = spec.channel().unwrap();
        assert!(max_abs_diff(rep.achieved_channel().unwrap().choi().matrix(), target.choi().matrix()) < 1e-9);
    }

    #[test]
    fn block_convex_kernel_shortage() {
        let mut rng = seeded(45);
        let t1 = random_extreme_qubit(&mut rng);
        let spec = ConvexCombinationSpec::new(ProbabilityVector::new(vec![1.0]).unwrap(), vec![t1]).unwrap();
        // f = 1 needs one kernel vector; spectrum (0.6, 0.4) forces f = 2 which needs two
        let env = DensityOperator::diagonal(&[0.6, 0.4, 0.0]).unwrap();
        assert!(matches!(
            block_convex_design(&spec, &env),
            Err(Error::InsufficientKernel { needed: 2, available: 1 })
        ));
    }

    #[test]
    fn convex_spec_rejects_non_extreme() {
        let dep = Channel::depolarizing(0.5).unwrap();
        assert!(ConvexCombinationSpec::new(ProbabilityVector::new(vec![1.0]).unwrap(), vec![dep]).is_err());
    }

    #[test]
    fn single_component_reduces_to_subsystem_dilation() {
        let mut rng = seeded(46);
        let t = random_extreme_qubit(&mut rng);
        let spec = ConvexCombinationSpec::new(ProbabilityVector::new(vec![1.0]).unwrap(), vec![t.clone()]).unwrap();
        let env = DensityOperator::basis_state(3, 1);
        let rep = block_convex_design(&spec, &env).unwrap();
        assert!(max_abs_diff(rep.achieved_channel().unwrap().choi().matrix(), t.choi().matrix()) < 1e-9);
    }
}
