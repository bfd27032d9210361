//! Stinespring completion, ε-pure virtual subsystems and the generalized
//! dilation built on them.
//!
//! The environment splits as `H_E = (H_M ⊗ H_F) ⊕ H_R`. In adapted
//! coordinates the index of `|μ⟩_M ⊗ |φ⟩_F` is `μ·f + φ`, followed by the `r`
//! remainder states; `Q` maps canonical coordinates to adapted ones.

use rayon::prelude::*;

use crate::channel::{kraus_rank, reduced_channel, Channel, KrausSet};
use crate::distance::{channel_distance_1to1, DEFAULT_RESTARTS};
use crate::error::{Error, Result};
use crate::operators::{
    complete_to_unitary, identity, isometry_residual, ket, partial_trace, projector, reflector_to, tensor,
    tv_distance, ComplexMatrix, ComplexVector, CompositeSpace, DensityOperator, UnitaryOperator,
};
use crate::random::{random_pure_state, seeded};
use crate::spectral::{eigh, sqrt_psd, pinv_psd};
use crate::tolerance::TOL_TP;

/// Slack allowed between the measured and the certified error.
pub const BOUND_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemDecomposition {
    d_e: usize,
    m: usize,
    f: usize,
    q: UnitaryOperator,
}

impl SubsystemDecomposition {
    pub fn new(m: usize, f: usize, q: UnitaryOperator) -> Result<Self> {
        let d_e = q.dim();
        if m == 0 || f == 0 || m * f > d_e {
            return Err(Error::DimensionMismatch(format!(
                "subsystem {m}x{f} does not fit an environment of dimension {d_e}"
            )));
        }
        Ok(Self { d_e, m, f, q })
    }

    pub fn d_e(&self) -> usize {
        self.d_e
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn f(&self) -> usize {
        self.f
    }

    pub fn r(&self) -> usize {
        self.d_e - self.m * self.f
    }

    /// Canonical-to-adapted basis change.
    pub fn q(&self) -> &UnitaryOperator {
        &self.q
    }

    /// Maps an adapted-coordinate operator back to canonical coordinates.
    pub fn to_canonical(&self, adapted: &ComplexMatrix) -> ComplexMatrix {
        let q = self.q.matrix();
        q.adjoint() * adapted * q
    }

    /// Conjugates a joint adapted-coordinate operator `(Q† ⊗ I) W (Q ⊗ I)`.
    pub fn joint_to_canonical(&self, w: &ComplexMatrix, d_s: usize) -> ComplexMatrix {
        let qi = tensor(self.q.matrix(), &identity(d_s));
        qi.adjoint() * w * qi
    }

    /// Embeds `|ψ⟩⟨ψ'| ⊗ σ ⊕ 0` in adapted coordinates.
    pub fn embed(&self, m_op: &ComplexMatrix, f_op: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.d_e, self.d_e);
        let block = tensor(m_op, f_op);
        out.view_mut((0, 0), (self.m * self.f, self.m * self.f)).copy_from(&block);
        out
    }
}

/// An environment state together with its ε-pure approximation.
#[derive(Debug, Clone)]
pub struct Initialization {
    decomp: SubsystemDecomposition,
    phi: ComplexVector,
    rho_f: DensityOperator,
    epsilon: f64,
    rho_e: DensityOperator,
}

impl Initialization {
    /// Records `ε = d_TV(ρ_E, Q†(|φ⟩⟨φ| ⊗ ρ_F ⊕ 0)Q)`.
    pub fn new(
        rho_e: DensityOperator,
        decomp: SubsystemDecomposition,
        phi: ComplexVector,
        rho_f: DensityOperator,
    ) -> Result<Self> {
        if rho_e.dim() != decomp.d_e || phi.len() != decomp.m || rho_f.dim() != decomp.f {
            return Err(Error::DimensionMismatch(format!(
                "initialization parts (d_E={}, |φ|={}, d_F={}) do not match decomposition ({}, {}, {})",
                rho_e.dim(),
                phi.len(),
                rho_f.dim(),
                decomp.d_e,
                decomp.m,
                decomp.f
            )));
        }
        let n = phi.norm();
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("φ has norm {n}")));
        }
        let mut init = Self {
            decomp,
            phi,
            rho_f,
            epsilon: 0.0,
            rho_e,
        };
        init.epsilon = tv_distance(&init.rho_e, &init.reconstructed_env())?;
        Ok(init)
    }

    pub fn decomp(&self) -> &SubsystemDecomposition {
        &self.decomp
    }

    pub fn phi(&self) -> &ComplexVector {
        &self.phi
    }

    pub fn rho_f(&self) -> &DensityOperator {
        &self.rho_f
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn rho_e(&self) -> &DensityOperator {
        &self.rho_e
    }

    /// `ρ̃_E` in canonical coordinates.
    pub fn reconstructed_env(&self) -> DensityOperator {
        let adapted = self.decomp.embed(&projector(&self.phi), self.rho_f.matrix());
        DensityOperator::new_unchecked(self.decomp.to_canonical(&adapted))
    }
}

/// ε-pure initialization with cofactor `f = ⌊d_E/m⌋`.
pub fn find_eps_pure_subsystem(rho_e: &DensityOperator, m: usize) -> Result<Initialization> {
    if m == 0 || m > rho_e.dim() {
        return Err(Error::InvalidArgument(format!(
            "subsystem dimension {m} must lie in [1, {}]",
            rho_e.dim()
        )));
    }
    find_eps_pure_subsystem_with_cofactor(rho_e, m, rho_e.dim() / m)
}

/// Adapted basis from the eigenvectors of `ρ_E` in descending order: block
/// `μ` of `H_M ⊗ H_F` holds eigenvectors `μ·f .. μ·f + f`, the rest is `H_R`.
/// `ρ_F` is the normalized top-`f` spectrum, so `ε = 1 − Σ_{l<f} λ_l`.
pub fn find_eps_pure_subsystem_with_cofactor(rho_e: &DensityOperator, m: usize, f: usize) -> Result<Initialization> {
    let d_e = rho_e.dim();
    if m == 0 || f == 0 || m * f > d_e {
        return Err(Error::InvalidArgument(format!(
            "subsystem {m}x{f} does not fit an environment of dimension {d_e}"
        )));
    }
    let eig = eigh(rho_e.matrix());
    let q = UnitaryOperator::with_tolerance(eig.vectors.adjoint(), 1e-9)?;
    let decomp = SubsystemDecomposition::new(m, f, q)?;
    let top: Vec<f64> = eig.values[..f].iter().map(|&x| x.max(0.0)).collect();
    let mass: f64 = top.iter().sum();
    let rho_f = DensityOperator::diagonal(&top.iter().map(|x| x / mass).collect::<Vec<_>>())?;
    Initialization::new(rho_e.clone(), decomp, ket(m, 0), rho_f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    StinespringPure,
    Subsystem,
    StochasticUnitary,
    BlockConvex,
    Average,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::StinespringPure => "stinespring_pure",
            Method::Subsystem => "subsystem",
            Method::StochasticUnitary => "stochastic_unitary",
            Method::BlockConvex => "block_convex",
            Method::Average => "average",
        }
    }
}

#[derive(Debug, Clone)]
pub struct DilationReport {
    pub w: UnitaryOperator,
    pub env_state: DensityOperator,
    pub d_s: usize,
    pub eps_certified: f64,
    pub eps_measured: f64,
    pub method: Method,
    pub diagnostics: Vec<String>,
}

impl DilationReport {
    /// Exact channel implemented by `W` and the environment state.
    pub fn achieved_channel(&self) -> Result<Channel> {
        reduced_channel(self.w.matrix(), &self.env_state, self.d_s)
    }
}

/// Search settings for the measured error of a synthesized dilation.
#[derive(Debug, Clone, Copy)]
pub struct MeasureOptions {
    pub restarts: usize,
    pub seed: u64,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self {
            restarts: DEFAULT_RESTARTS,
            seed: 0,
        }
    }
}

/// Unitary whose first `d` columns are `V = Σ_k |k⟩ ⊗ M_k`.
pub fn stinespring_complete(ks: &KrausSet) -> Result<UnitaryOperator> {
    let d = ks.dim();
    let m = ks.len();
    let mut v = ComplexMatrix::zeros(m * d, d);
    for (k, op) in ks.ops().iter().enumerate() {
        v.view_mut((k * d, 0), (d, d)).copy_from(op);
    }
    let res = isometry_residual(&v);
    if res > TOL_TP {
        return Err(Error::NotTracePreserving(res));
    }
    UnitaryOperator::new(complete_to_unitary(&v)?)
}

/// Kraus operators for `target` padded with zeros to exactly `m` elements.
///
/// When rounding noise leaves more than `m` canonical operators although the
/// Kraus rank fits, the surplus is dropped and the rest renormalized.
pub fn kraus_for_ancilla(target: &Channel, m: usize) -> Result<KrausSet> {
    let rank = kraus_rank(target);
    if rank > m {
        return Err(Error::RankInfeasible { rank, m });
    }
    let ks = if target.kraus().len() <= m {
        target.kraus().clone()
    } else {
        let canon = target.canonical_kraus(1e-14);
        if canon.len() <= m {
            canon
        } else {
            let ops: Vec<ComplexMatrix> = canon.ops()[..m].to_vec();
            let d = target.dim();
            let mut s = ComplexMatrix::zeros(d, d);
            for o in &ops {
                s += o.adjoint() * o;
            }
            let (inv, ker) = pinv_psd(&s, 1e-12)?;
            if ker.iter().any(|z| z.norm() > 1e-9) {
                return Err(Error::RankInfeasible { rank: canon.len(), m });
            }
            let fix = sqrt_psd(&inv)?;
            KrausSet::new(ops.into_iter().map(|o| o * &fix).collect())?
        }
    };
    Ok(ks.padded(m))
}

/// Generalized dilation on `H_M ⊗ H_F ⊕ H_R`: `(U_T ⊗ I_F) ⊕ I`, with the
/// ancilla reference rotated onto `|φ⟩` by a Householder reflector.
pub fn dilate_via_subsystem(target: &Channel, init: &Initialization) -> Result<DilationReport> {
    dilate_via_subsystem_with(target, init, MeasureOptions::default())
}

pub fn dilate_via_subsystem_with(
    target: &Channel,
    init: &Initialization,
    opts: MeasureOptions,
) -> Result<DilationReport> {
    let d = target.dim();
    let decomp = init.decomp();
    let (m, f) = (decomp.m(), decomp.f());
    let ks = kraus_for_ancilla(target, m)?;
    let u_t = stinespring_complete(&ks)?;
    let r = reflector_to(init.phi());
    let u_rot = u_t.matrix() * tensor(&r.adjoint(), &identity(d));
    let w_a = block_embed(decomp.d_e(), d, f, &[(0, u_rot)]);
    let w = UnitaryOperator::with_tolerance(decomp.joint_to_canonical(&w_a, d), 1e-9)?;
    let method = if f == 1 && decomp.r() == 0 {
        Method::StinespringPure
    } else {
        Method::Subsystem
    };
    let diagnostics = vec![
        format!("kraus_rank={}", kraus_rank(target)),
        format!("m={m} f={f} r={}", decomp.r()),
    ];
    finish_report(target, w, init.rho_e().clone(), init.epsilon(), method, diagnostics, opts)
}

/// Joint operator on adapted environment ⊗ system: for each `(offset, U)`,
/// `U` acts on `M ⊗ S` (size `k·d`) at environment indices
/// `offset + μ·f + φ` for every `φ < f`; everything else is the identity.
pub(crate) fn block_embed(d_e: usize, d: usize, f: usize, blocks: &[(usize, ComplexMatrix)]) -> ComplexMatrix {
    let mut w = identity(d_e * d);
    for (offset, u) in blocks {
        let k = u.nrows() / d;
        for phi in 0..f {
            for mu in 0..k {
                for nu in 0..k {
                    let row0 = (offset + mu * f + phi) * d;
                    let col0 = (offset + nu * f + phi) * d;
                    for s in 0..d {
                        for sp in 0..d {
                            w[(row0 + s, col0 + sp)] = u[(mu * d + s, nu * d + sp)];
                        }
                    }
                }
            }
        }
    }
    w
}

pub(crate) fn finish_report(
    target: &Channel,
    w: UnitaryOperator,
    env: DensityOperator,
    eps_certified: f64,
    method: Method,
    mut diagnostics: Vec<String>,
    opts: MeasureOptions,
) -> Result<DilationReport> {
    let d_s = target.dim();
    let achieved = reduced_channel(w.matrix(), &env, d_s)?;
    let est = channel_distance_1to1(&achieved, target, opts.restarts, opts.seed)?;
    diagnostics.push(format!(
        "distance search: {} restarts, {} grid points",
        est.restarts, est.grid_points
    ));
    if est.lower_bound > eps_certified + BOUND_SLACK {
        return Err(Error::BoundViolated {
            measured: est.lower_bound,
            certified: eps_certified,
        });
    }
    Ok(DilationReport {
        w,
        env_state: env,
        d_s,
        eps_certified,
        eps_measured: est.lower_bound,
        method,
        diagnostics,
    })
}

/// `Tr_E[W (ρ_E ⊗ ρ) W†]` by explicit partial trace.
pub fn joint_output(w: &ComplexMatrix, env: &DensityOperator, rho: &DensityOperator) -> Result<DensityOperator> {
    let joint = w * tensor(env.matrix(), rho.matrix()) * w.adjoint();
    let space = CompositeSpace::env_system(env.dim(), rho.dim());
    Ok(DensityOperator::new_unchecked(partial_trace(&joint, &space, 1)?))
}

/// Worst TV error over `trials` random pure inputs plus the maximizer of the
/// channel-distance search, using explicit joint simulation.
pub fn verify_dilation(report: &DilationReport, target: &Channel, trials: usize, seed: u64) -> Result<f64> {
    let d = report.d_s;
    if target.dim() != d || report.w.dim() != report.env_state.dim() * d {
        return Err(Error::DimensionMismatch("report and target dimensions differ".into()));
    }
    let mut inputs: Vec<ComplexVector> = (0..trials)
        .map(|i| random_pure_state(d, &mut seeded(seed.wrapping_add(i as u64))))
        .collect();
    let achieved = report.achieved_channel()?;
    inputs.push(channel_distance_1to1(&achieved, target, DEFAULT_RESTARTS, seed)?.argmax_vector);
    let errors: Result<Vec<f64>> = inputs
        .par_iter()
        .map(|psi| {
            let rho = DensityOperator::from_pure(psi)?;
            let out = joint_output(report.w.matrix(), &report.env_state, &rho)?;
            let want = DensityOperator::new_unchecked(target.apply_matrix(rho.matrix()));
            tv_distance(&out, &want)
        })
        .collect();
    Ok(errors?.into_iter().fold(0.0, f64::max))
}
