//! One-shot subspace stabilization by splitting the system space into copies
//! of the target subspace.

use crate::error::{Error, Result};
use crate::operators::{
    complete_to_unitary, hermitian_residual, identity, ket, max_abs_diff, partial_trace, tensor,
    ComplexMatrix, ComplexVector, CompositeSpace, DensityOperator, UnitaryOperator,
};
use crate::spectral::eigh;

#[derive(Debug, Clone)]
pub struct SplitConfig {
    pub d_s: usize,
    pub d_t: usize,
    pub pi_t: ComplexMatrix,
    pub k: usize,
    pub blocks: Vec<ComplexMatrix>,
    pub lifts: Vec<UnitaryOperator>,
    /// `U_k e₀ = e_k` on the `K`-level ancilla.
    pub loaders: Vec<UnitaryOperator>,
}

/// Rank of an orthogonal projector, or an error if `p` is not one.
pub fn projector_rank(p: &ComplexMatrix) -> Result<usize> {
    if p.nrows() != p.ncols() || p.nrows() == 0 {
        return Err(Error::DimensionMismatch("projector must be square".into()));
    }
    let herm = hermitian_residual(p);
    let idem = max_abs_diff(&(p * p), p);
    if herm > 1e-10 || idem > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "not an orthogonal projector (hermiticity {herm:.2e}, idempotency {idem:.2e})"
        )));
    }
    let tr = p.trace().re;
    let r = tr.round();
    if (tr - r).abs() > 1e-9 || r < 1.0 {
        return Err(Error::InvalidArgument(format!("projector trace {tr}")));
    }
    Ok(r as usize)
}

fn unitary_mapping(from: &[ComplexVector], to: &[ComplexVector]) -> Result<UnitaryOperator> {
    let a = complete_to_unitary(&ComplexMatrix::from_columns(from))?;
    let b = complete_to_unitary(&ComplexMatrix::from_columns(to))?;
    UnitaryOperator::with_tolerance(b * a.adjoint(), 1e-10)
}

/// Swaps `e₀` and `e_k`: the reflector along `e₀ − e_k`.
fn loader(k_dim: usize, k: usize) -> Result<UnitaryOperator> {
    if k == 0 {
        return Ok(UnitaryOperator::identity(k_dim));
    }
    let v = ket(k_dim, 0) - ket(k_dim, k);
    let m = identity(k_dim) - (&v * v.adjoint());
    UnitaryOperator::new(m)
}

pub fn split_build(d_s: usize, pi_t: &ComplexMatrix) -> Result<SplitConfig> {
    if pi_t.nrows() != d_s {
        return Err(Error::DimensionMismatch("Π_T does not act on the system".into()));
    }
    let d_t = projector_rank(pi_t)?;
    let k = d_s.div_ceil(d_t);
    let eig = eigh(pi_t);
    let target: Vec<ComplexVector> = (0..d_t).map(|i| eig.vector(i)).collect();
    let basis = complete_to_unitary(&ComplexMatrix::from_columns(&target))?;
    let rest: Vec<ComplexVector> = (d_t..d_s).map(|i| basis.column(i).into_owned()).collect();

    let mut blocks = vec![pi_t.clone()];
    let mut lifts = vec![UnitaryOperator::identity(d_s)];
    for chunk in rest.chunks(d_t) {
        let mut proj = ComplexMatrix::zeros(d_s, d_s);
        for v in chunk {
            proj += v * v.adjoint();
        }
        blocks.push(proj);
        lifts.push(unitary_mapping(chunk, &target[..chunk.len()])?);
    }
    let loaders = (0..k).map(|i| loader(k, i)).collect::<Result<Vec<_>>>()?;
    let cfg = SplitConfig {
        d_s,
        d_t,
        pi_t: pi_t.clone(),
        k,
        blocks,
        lifts,
        loaders,
    };
    cfg.validate()?;
    Ok(cfg)
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        let d = self.d_s;
        if self.blocks.len() != self.k || self.lifts.len() != self.k || self.loaders.len() != self.k {
            return Err(Error::DimensionMismatch("split configuration lists differ in length".into()));
        }
        let mut sum = ComplexMatrix::zeros(d, d);
        for (i, p) in self.blocks.iter().enumerate() {
            projector_rank(p)?;
            sum += p;
            for q in &self.blocks[i + 1..] {
                if crate::operators::max_abs(&(p * q)) > 1e-10 {
                    return Err(Error::InvalidArgument("blocks are not mutually orthogonal".into()));
                }
            }
        }
        if max_abs_diff(&sum, &identity(d)) > 1e-10 {
            return Err(Error::InvalidArgument("blocks do not resolve the identity".into()));
        }
        if max_abs_diff(&self.blocks[0], &self.pi_t) > 1e-10 {
            return Err(Error::InvalidArgument("first block must be Π_T".into()));
        }
        for (p, v) in self.blocks.iter().zip(&self.lifts) {
            let moved = v.matrix() * p * v.matrix().adjoint();
            // V Π V† ≤ Π_T iff the moved projector lies inside range(Π_T)
            if max_abs_diff(&(&self.pi_t * &moved), &moved) > 1e-10 {
                return Err(Error::InvalidArgument("lift does not map its block into the target".into()));
            }
        }
        for (i, u) in self.loaders.iter().enumerate() {
            if u.dim() != self.k || (u.matrix().column(0) - ket(self.k, i)).camax() > 1e-10 {
                return Err(Error::InvalidArgument(format!("loader {i} does not send e₀ to e_{i}")));
            }
        }
        Ok(())
    }

    /// `U_{C,A} U_{C,S}` on ancilla ⊗ system.
    pub fn joint_unitary(&self) -> ComplexMatrix {
        let n = self.k * self.d_s;
        let mut ucs = ComplexMatrix::zeros(n, n);
        let mut uca = ComplexMatrix::zeros(n, n);
        for (i, ((p, v), u)) in self.blocks.iter().zip(&self.lifts).zip(&self.loaders).enumerate() {
            ucs += tensor(u.matrix(), p);
            let e = ket(self.k, i);
            uca += tensor(&(&e * e.adjoint()), v.matrix());
        }
        uca * ucs
    }
}

fn check_input(cfg: &SplitConfig, rho: &DensityOperator) -> Result<()> {
    if rho.dim() != cfg.d_s {
        return Err(Error::DimensionMismatch(format!(
            "state has dimension {}, system has {}",
            rho.dim(),
            cfg.d_s
        )));
    }
    Ok(())
}

/// Two-gate simulation with the ancilla in `|1⟩⟨1|` (index 0).
pub fn split_run(cfg: &SplitConfig, rho: &DensityOperator) -> Result<DensityOperator> {
    split_run_with_ancilla(cfg, rho, &DensityOperator::basis_state(cfg.k, 0))
}

pub fn split_run_with_ancilla(cfg: &SplitConfig, rho: &DensityOperator, ancilla: &DensityOperator) -> Result<DensityOperator> {
    check_input(cfg, rho)?;
    if ancilla.dim() != cfg.k {
        return Err(Error::DimensionMismatch("ancilla dimension differs from K".into()));
    }
    let u = cfg.joint_unitary();
    let joint = &u * ancilla.tensor(rho).matrix() * u.adjoint();
    let space = CompositeSpace::new(vec![cfg.k, cfg.d_s])?;
    DensityOperator::with_tolerance(partial_trace(&joint, &space, 1)?, 1e-9, 1e-9)
}

/// `Σ_k V_k Π_k ρ Π_k V_k†`.
pub fn split_closed_form(cfg: &SplitConfig, rho: &DensityOperator) -> Result<DensityOperator> {
    check_input(cfg, rho)?;
    let mut out = ComplexMatrix::zeros(cfg.d_s, cfg.d_s);
    for (p, v) in cfg.blocks.iter().zip(&cfg.lifts) {
        let k = v.matrix() * p;
        out += &k * rho.matrix() * k.adjoint();
    }
    DensityOperator::with_tolerance(out, 1e-9, 1e-9)
}

/// Average over outcomes of measuring `{Π_k}` and applying `V_k` to the
/// normalized post-measurement state.
pub fn split_measurement_feedback(cfg: &SplitConfig, rho: &DensityOperator) -> Result<DensityOperator> {
    check_input(cfg, rho)?;
    let mut out = ComplexMatrix::zeros(cfg.d_s, cfg.d_s);
    for (p, v) in cfg.blocks.iter().zip(&cfg.lifts) {
        let post = p * rho.matrix() * p;
        let prob = post.trace().re;
        if prob <= 1e-300 {
            continue;
        }
        let conditioned = v.matrix() * post.unscale(prob) * v.matrix().adjoint();
        out += conditioned.scale(prob);
    }
    DensityOperator::with_tolerance(out, 1e-9, 1e-9)
}

/// `Tr(Π_T ρ)`.
pub fn target_population(cfg: &SplitConfig, rho: &DensityOperator) -> f64 {
    (&cfg.pi_t * rho.matrix()).trace().re
}
