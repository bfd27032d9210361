//! Coherent single-bit feedback decoupling.
//!
//! Joint layout is ancilla ⊗ bath ⊗ system, so `U_SB` written on bath ⊗
//! system splits into `d_S × d_S` blocks indexed by bath levels.

use crate::error::{Error, Result};
use crate::operators::{
    c, hadamard, hermitian_residual, identity, is_finite, max_abs_diff, partial_trace, tensor, trace, ComplexMatrix,
    ComplexVector, CompositeSpace, DensityOperator, UnitaryOperator,
};
use crate::spectral::{eigh, expm_hermitian, polar_unitary};

const BLOCK_TOL: f64 = 1e-8;
const MIXING_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct FbddConfig {
    pub d_s: usize,
    pub d_b: usize,
    pub h_s: ComplexMatrix,
    pub h_b: ComplexMatrix,
    pub s0: ComplexMatrix,
    pub b0: ComplexMatrix,
    pub t: f64,
    /// Control unitary; the eigenspace-pairing swap of `X` when absent.
    pub u_s: Option<UnitaryOperator>,
    pub psi: ComplexVector,
}

impl FbddConfig {
    pub fn new(
        h_s: ComplexMatrix,
        h_b: ComplexMatrix,
        s0: ComplexMatrix,
        b0: ComplexMatrix,
        t: f64,
        u_s: Option<UnitaryOperator>,
        psi: ComplexVector,
    ) -> Result<Self> {
        let d_s = h_s.nrows();
        let d_b = h_b.nrows();
        for (name, m, d) in [("H_S", &h_s, d_s), ("H_B", &h_b, d_b), ("S0", &s0, d_s), ("B0", &b0, d_b)] {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::DimensionMismatch(format!("{name} has the wrong shape")));
            }
            if !is_finite(m) {
                return Err(Error::NonFinite("feedback configuration"));
            }
            let r = hermitian_residual(m);
            if r > 1e-10 {
                return Err(Error::NotHermitian(r));
            }
        }
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidArgument(format!("invalid evolution time {t}")));
        }
        if let Some(u) = &u_s {
            if u.dim() != d_s {
                return Err(Error::DimensionMismatch("U_S does not act on the system".into()));
            }
        }
        if psi.len() != d_s {
            return Err(Error::DimensionMismatch("ψ does not live on the system".into()));
        }
        let n = psi.norm();
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("ψ has norm {n}")));
        }
        Ok(Self {
            d_s,
            d_b,
            h_s,
            h_b,
            s0,
            b0,
            t,
            u_s,
            psi,
        })
    }

    /// `exp(−iH₀T)` on bath ⊗ system.
    pub fn free_propagator(&self) -> Result<ComplexMatrix> {
        let h0 = tensor(&identity(self.d_b), &self.h_s) + tensor(&self.h_b, &identity(self.d_s)) + tensor(&self.b0, &self.s0);
        expm_hermitian(&h0, self.t)
    }

    /// Traceless part of `S0`.
    pub fn coupling_operator(&self) -> ComplexMatrix {
        let shift = trace(&self.s0) / c(self.d_s as f64, 0.0);
        &self.s0 - identity(self.d_s) * shift
    }
}

#[derive(Debug, Clone)]
pub struct FbddCheck {
    pub block_form_ok: bool,
    pub block_residual: f64,
    pub mixing_ok: bool,
    /// Descending eigenvalues of `X`.
    pub spectrum: Vec<f64>,
    pub x: ComplexMatrix,
    /// `X/|x|` when `|x_k|` is constant; the identity when `X = 0`.
    pub u_fb: Option<ComplexMatrix>,
}

impl FbddCheck {
    pub fn passed(&self) -> bool {
        self.block_form_ok && self.mixing_ok && self.u_fb.is_some()
    }
}

fn block(m: &ComplexMatrix, i: usize, j: usize, d: usize) -> ComplexMatrix {
    m.view((i * d, j * d), (d, d)).into_owned()
}

/// Worst residual of fitting every block of `m` to `a·I + b·X`.
fn block_fit_residual(m: &ComplexMatrix, x: &ComplexMatrix, d: usize) -> f64 {
    let n = m.nrows() / d;
    let xx = x.dotc(x).re;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let b = block(m, i, j, d);
            let a = trace(&b) / c(d as f64, 0.0);
            let mut fit = identity(d) * a;
            if xx > 1e-24 {
                fit += x * (x.dotc(&b) / c(xx, 0.0));
            }
            worst = worst.max(max_abs_diff(&b, &fit));
        }
    }
    worst
}

pub fn fbdd_check(config: &FbddConfig) -> Result<FbddCheck> {
    let u = config.free_propagator()?;
    let x = config.coupling_operator();
    let block_residual = block_fit_residual(&u, &x, config.d_s);
    let spectrum = eigh(&x).values;
    let d = spectrum.len();
    let mixing_ok = (0..d).all(|k| (spectrum[k] + spectrum[d - 1 - k]).abs() <= MIXING_TOL);
    let mags: Vec<f64> = spectrum.iter().map(|v| v.abs()).collect();
    let top = mags.iter().cloned().fold(0.0, f64::max);
    let u_fb = if top <= MIXING_TOL {
        Some(identity(d))
    } else if mags.iter().all(|m| (m - top).abs() <= MIXING_TOL) {
        Some(x.unscale(top))
    } else {
        None
    };
    Ok(FbddCheck {
        block_form_ok: block_residual <= BLOCK_TOL,
        block_residual,
        mixing_ok,
        spectrum,
        x,
        u_fb,
    })
}

/// Pairs the `k`-th and `(d+1−k)`-th eigenvectors of `X`; under the mixing
/// condition `U_S† X U_S = −X`.
pub fn swap_control(x: &ComplexMatrix) -> Result<UnitaryOperator> {
    let eig = eigh(x);
    let d = x.nrows();
    let mut u = ComplexMatrix::zeros(d, d);
    for k in 0..d {
        u += eig.vector(d - 1 - k) * eig.vector(k).adjoint();
    }
    UnitaryOperator::with_tolerance(u, 1e-10)
}

#[derive(Debug, Clone)]
pub struct FbddOutcome {
    pub rho_s_final: DensityOperator,
    pub fidelity: f64,
    /// Extracted from the simulated joint unitary.
    pub a_plus: ComplexMatrix,
    pub a_minus: ComplexMatrix,
    /// `½(U_SB ± (U_S†⊗I) U_SB (U_S⊗I))`.
    pub a_plus_formula: ComplexMatrix,
    pub a_minus_formula: ComplexMatrix,
    /// Worst deviation of `A₊` blocks from multiples of `I_S`.
    pub a_plus_block_residual: f64,
    pub check: FbddCheck,
}

/// Runs steps I–V. With `force` set, a failed check is reported in the
/// outcome instead of refusing; the feedback unitary then falls back to the
/// polar factor of `X`.
pub fn fbdd_run(config: &FbddConfig, rho_b: &DensityOperator, force: bool) -> Result<FbddOutcome> {
    if rho_b.dim() != config.d_b {
        return Err(Error::DimensionMismatch("bath state has the wrong dimension".into()));
    }
    let check = fbdd_check(config)?;
    let (d_s, d_b) = (config.d_s, config.d_b);
    let u_s = match &config.u_s {
        Some(u) => u.clone(),
        None => swap_control(&check.x)?,
    };
    let flipped = u_s.matrix().adjoint() * &check.x * u_s.matrix();
    let swap_ok = max_abs_diff(&flipped, &(-&check.x)) <= BLOCK_TOL;
    if !force && !(check.passed() && swap_ok) {
        return Err(Error::PreconditionFailed(format!(
            "feedback decoupling not applicable: block form {}, mixing {}, unitary feedback {}, swap {}",
            check.block_form_ok,
            check.mixing_ok,
            check.u_fb.is_some(),
            swap_ok
        )));
    }
    let u_fb = check.u_fb.clone().unwrap_or_else(|| polar_unitary(&check.x));

    let u_sb = config.free_propagator()?;
    let i_b = identity(d_b);
    let cond = |v: &ComplexMatrix| -> ComplexMatrix {
        let n = d_b * d_s;
        let mut m = identity(2 * n);
        m.view_mut((n, n), (n, n)).copy_from(&tensor(&i_b, v));
        m
    };
    let u_c = cond(u_s.matrix());
    let u_c_dag = cond(&u_s.matrix().adjoint());
    let free = tensor(&identity(2), &u_sb);
    let had = tensor(&hadamard(), &identity(d_b * d_s));
    let before_fb = &had * &u_c_dag * free * &u_c;
    let total = cond(&u_fb) * &before_fb;

    let n = d_b * d_s;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let from_plus = (before_fb.columns(0, n) + before_fb.columns(n, n)).scale(s);
    let a_plus = from_plus.rows(0, n).into_owned();
    let a_minus = from_plus.rows(n, n).into_owned();
    let conj = tensor(&i_b, &u_s.matrix().adjoint()) * &u_sb * tensor(&i_b, u_s.matrix());
    let a_plus_formula = (&u_sb + &conj).scale(0.5);
    let a_minus_formula = (&u_sb - &conj).scale(0.5);
    let a_plus_block_residual = block_fit_residual(&a_plus, &ComplexMatrix::zeros(d_s, d_s), d_s);

    let plus = ComplexVector::from_element(2, c(s, 0.0));
    let psi_state = DensityOperator::from_pure(&config.psi)?;
    let rho0 = DensityOperator::from_pure(&plus)?.tensor(rho_b).tensor(&psi_state);
    let rho_t = &total * rho0.matrix() * total.adjoint();
    let space = CompositeSpace::new(vec![2, d_b, d_s])?;
    let rho_s = partial_trace(&rho_t, &space, 2)?;
    let rho_s_final = DensityOperator::with_tolerance(rho_s, 1e-8, 1e-8)?;
    let fidelity = (config.psi.adjoint() * rho_s_final.matrix() * &config.psi)[(0, 0)].re;
    Ok(FbddOutcome {
        rho_s_final,
        fidelity,
        a_plus,
        a_minus,
        a_plus_formula,
        a_minus_formula,
        a_plus_block_residual,
        check,
    })
}
