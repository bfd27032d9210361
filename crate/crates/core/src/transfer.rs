//! Control synthesis by steering the Choi state.
//!
//! A piecewise-constant pulse drives `H₀ + Σ_ℓ u_ℓ(t) H_ℓ` on environment ⊗
//! system. The cost is the squared distance between the components of the
//! achieved and target Choi matrices in a trace-orthonormal Hermitian basis.

use rand::Rng;
use rayon::prelude::*;

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::operators::{c, hermitian_residual, identity, is_finite, outer, vec_row_major, ComplexMatrix, DensityOperator, C64};
use crate::random::seeded;
use crate::spectral::{eigh, expm_hermitian};

/// Trace-orthonormal Hermitian basis of `n × n` matrices: `I/√n`, then the
/// symmetric, antisymmetric and diagonal generalized Gell-Mann matrices.
pub fn gell_mann_basis(n: usize) -> Vec<ComplexMatrix> {
    let mut basis = vec![identity(n).unscale((n as f64).sqrt())];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..n {
        for k in j + 1..n {
            let mut m = ComplexMatrix::zeros(n, n);
            m[(j, k)] = c(s, 0.0);
            m[(k, j)] = c(s, 0.0);
            basis.push(m);
            let mut m = ComplexMatrix::zeros(n, n);
            m[(j, k)] = c(0.0, -s);
            m[(k, j)] = c(0.0, s);
            basis.push(m);
        }
    }
    for l in 1..n {
        let norm = ((l * (l + 1)) as f64).sqrt();
        let mut m = ComplexMatrix::zeros(n, n);
        for j in 0..l {
            m[(j, j)] = c(1.0 / norm, 0.0);
        }
        m[(l, l)] = c(-(l as f64) / norm, 0.0);
        basis.push(m);
    }
    basis
}

/// `max |Tr(σ_a σ_b) − δ_ab|`.
pub fn basis_orthonormality_residual(basis: &[ComplexMatrix]) -> f64 {
    let mut worst = 0.0f64;
    for (a, x) in basis.iter().enumerate() {
        for (b, y) in basis.iter().enumerate() {
            let ip = x.dotc(y);
            let expect = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((ip - c(expect, 0.0)).norm());
        }
    }
    worst
}

#[derive(Debug, Clone)]
pub struct ControlProblem {
    pub d_s: usize,
    pub d_e: usize,
    /// Drift on environment ⊗ system.
    pub h0: ComplexMatrix,
    pub controls: Vec<ComplexMatrix>,
    pub t: f64,
    pub n_steps: usize,
    pub rho_e: DensityOperator,
    pub basis: Vec<ComplexMatrix>,
    pub u_max: Option<f64>,
    env_vectors: Vec<(f64, Vec<C64>)>,
}

impl ControlProblem {
    pub fn new(
        d_s: usize,
        h0: ComplexMatrix,
        controls: Vec<ComplexMatrix>,
        t: f64,
        n_steps: usize,
        rho_e: DensityOperator,
    ) -> Result<Self> {
        let d_e = rho_e.dim();
        let n = d_e * d_s;
        for (i, h) in std::iter::once(&h0).chain(controls.iter()).enumerate() {
            if h.shape() != (n, n) {
                return Err(Error::DimensionMismatch(format!(
                    "generator {i} is {:?}, expected {n}x{n}",
                    h.shape()
                )));
            }
            if !is_finite(h) {
                return Err(Error::NonFinite("control generator"));
            }
            let r = hermitian_residual(h);
            if r > 1e-10 {
                return Err(Error::NotHermitian(r));
            }
        }
        if !(t.is_finite() && t > 0.0) || n_steps == 0 {
            return Err(Error::InvalidArgument("horizon and step count must be positive".into()));
        }
        let eig = eigh(rho_e.matrix());
        let env_vectors = eig
            .values
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 1e-15)
            .map(|(a, &p)| (p, eig.vector(a).iter().cloned().collect()))
            .collect();
        Ok(Self {
            d_s,
            d_e,
            h0,
            controls,
            t,
            n_steps,
            rho_e,
            basis: gell_mann_basis(d_s * d_s),
            u_max: None,
            env_vectors,
        })
    }

    /// Zero drift and every Gell-Mann generator on the joint space, so
    /// every joint unitary is reachable.
    pub fn fully_controllable(d_s: usize, t: f64, n_steps: usize, rho_e: DensityOperator) -> Result<Self> {
        let n = rho_e.dim() * d_s;
        let controls = gell_mann_basis(n).into_iter().skip(1).collect();
        Self::new(d_s, ComplexMatrix::zeros(n, n), controls, t, n_steps, rho_e)
    }

    pub fn with_amplitude_bound(mut self, u_max: f64) -> Self {
        self.u_max = Some(u_max);
        self
    }

    pub fn dt(&self) -> f64 {
        self.t / self.n_steps as f64
    }

    pub fn n_params(&self) -> usize {
        self.n_steps * self.controls.len()
    }

    fn step(&self, amps: &[f64]) -> ComplexMatrix {
        let mut h = self.h0.clone();
        for (u, g) in amps.iter().zip(&self.controls) {
            if *u != 0.0 {
                h += g.scale(*u);
            }
        }
        expm_hermitian(&h, self.dt()).expect("generators are Hermitian")
    }

    /// Choi matrix of `ρ ↦ Tr_E[U(ρ_E ⊗ ρ)U†]`.
    pub fn choi_of(&self, u: &ComplexMatrix) -> ComplexMatrix {
        let d = self.d_s;
        let mut choi = ComplexMatrix::zeros(d * d, d * d);
        for (p, va) in &self.env_vectors {
            let mut col = ComplexMatrix::zeros(self.d_e * d, d);
            for (ci, coeff) in va.iter().enumerate() {
                col += u.columns(ci * d, d) * *coeff;
            }
            for b in 0..self.d_e {
                let k = col.rows(b * d, d).into_owned();
                let v = vec_row_major(&k);
                choi += outer(&v, &v).scale(*p);
            }
        }
        choi.unscale(d as f64)
    }

    fn components(&self, m: &ComplexMatrix) -> Vec<f64> {
        self.basis.iter().map(|s| s.dotc(m).re).collect()
    }

    fn cost_of_unitary(&self, u: &ComplexMatrix, target: &[f64]) -> f64 {
        let comps = self.components(&self.choi_of(u));
        comps.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

/// Amplitudes `values[k][ℓ]` on a uniform grid of `n_steps` intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPulse {
    pub values: Vec<Vec<f64>>,
}

impl ControlPulse {
    pub fn zeros(n_steps: usize, n_controls: usize) -> Self {
        Self {
            values: vec![vec![0.0; n_controls]; n_steps],
        }
    }

    pub fn constant(n_steps: usize, amps: &[f64]) -> Self {
        Self {
            values: vec![amps.to_vec(); n_steps],
        }
    }

    /// Midpoint samples of `f(t)` over `[0, T]`.
    pub fn sample(f: impl Fn(f64) -> Vec<f64>, n_steps: usize, t: f64) -> Self {
        let dt = t / n_steps as f64;
        Self {
            values: (0..n_steps).map(|k| f((k as f64 + 0.5) * dt)).collect(),
        }
    }

    pub fn random(n_steps: usize, n_controls: usize, scale: f64, rng: &mut impl Rng) -> Self {
        Self {
            values: (0..n_steps)
                .map(|_| (0..n_controls).map(|_| rng.random_range(-scale..=scale)).collect())
                .collect(),
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.values.iter().flatten().cloned().collect()
    }

    pub fn from_flat(flat: &[f64], n_steps: usize, n_controls: usize) -> Self {
        Self {
            values: (0..n_steps).map(|k| flat[k * n_controls..(k + 1) * n_controls].to_vec()).collect(),
        }
    }

    fn check(&self, prob: &ControlProblem) -> Result<()> {
        if self.values.len() != prob.n_steps || self.values.iter().any(|r| r.len() != prob.controls.len()) {
            return Err(Error::DimensionMismatch(format!(
                "pulse shape does not match {} steps × {} controls",
                prob.n_steps,
                prob.controls.len()
            )));
        }
        if self.values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("control pulse"));
        }
        if let Some(b) = prob.u_max {
            if self.values.iter().flatten().any(|v| v.abs() > b) {
                return Err(Error::InvalidArgument(format!("amplitude exceeds bound {b}")));
            }
        }
        Ok(())
    }
}

/// `c_i = Tr(σ_i C_T)` with `C_T` the target Choi matrix.
pub fn target_components(target: &Channel, basis: &[ComplexMatrix]) -> Result<Vec<f64>> {
    let d = target.dim();
    if basis.len() != d.pow(4) || basis.iter().any(|b| b.shape() != (d * d, d * d)) {
        return Err(Error::DimensionMismatch(format!(
            "basis must hold {} matrices of size {}",
            d.pow(4),
            d * d
        )));
    }
    Ok(basis.iter().map(|s| s.dotc(target.choi().matrix()).re).collect())
}

/// `Σ_i c_i σ_i`.
pub fn reconstruct(components: &[f64], basis: &[ComplexMatrix]) -> ComplexMatrix {
    let n = basis[0].nrows();
    let mut out = ComplexMatrix::zeros(n, n);
    for (c, s) in components.iter().zip(basis) {
        out += s.scale(*c);
    }
    out
}

/// Time-ordered product of the step exponentials.
pub fn propagate(prob: &ControlProblem, pulse: &ControlPulse) -> Result<ComplexMatrix> {
    pulse.check(prob)?;
    let mut u = identity(prob.d_e * prob.d_s);
    for amps in &pulse.values {
        u = prob.step(amps) * u;
    }
    Ok(u)
}

pub fn cost(prob: &ControlProblem, pulse: &ControlPulse, target: &[f64]) -> Result<f64> {
    let u = propagate(prob, pulse)?;
    Ok(prob.cost_of_unitary(&u, target))
}

/// Central finite differences with step `h`, reusing prefix and suffix
/// products so that each coordinate costs one step exponential per side.
pub fn gradient(prob: &ControlProblem, pulse: &ControlPulse, target: &[f64], h: f64) -> Result<Vec<f64>> {
    pulse.check(prob)?;
    let n = prob.n_steps;
    let steps: Vec<ComplexMatrix> = pulse.values.iter().map(|a| prob.step(a)).collect();
    let dim = prob.d_e * prob.d_s;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(identity(dim));
    for s in &steps {
        let next = s * prefix.last().unwrap();
        prefix.push(next);
    }
    let mut suffix = vec![identity(dim); n + 1];
    for k in (0..n).rev() {
        suffix[k] = &suffix[k + 1] * &steps[k];
    }
    let mut grad = Vec::with_capacity(prob.n_params());
    for k in 0..n {
        let mut amps = pulse.values[k].clone();
        for l in 0..amps.len() {
            let orig = amps[l];
            amps[l] = orig + h;
            let up = &suffix[k + 1] * prob.step(&amps) * &prefix[k];
            amps[l] = orig - h;
            let down = &suffix[k + 1] * prob.step(&amps) * &prefix[k];
            amps[l] = orig;
            grad.push((prob.cost_of_unitary(&up, target) - prob.cost_of_unitary(&down, target)) / (2.0 * h));
        }
    }
    Ok(grad)
}

#[derive(Debug, Clone, Copy)]
pub struct OptimizeOptions {
    pub max_iters: usize,
    pub seed: u64,
    pub restarts: usize,
    pub grad_eps: f64,
    /// Half-width of the uniform distribution of random initial amplitudes.
    pub init_scale: f64,
    pub stop_cost: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            max_iters: 400,
            seed: 0,
            restarts: 4,
            grad_eps: 1e-6,
            init_scale: 1.0,
            stop_cost: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub pulse: ControlPulse,
    /// Cost after each accepted step of the winning trajectory, starting with
    /// its initial cost.
    pub cost_trace: Vec<f64>,
    pub final_cost: f64,
    pub restart: usize,
    pub iterations: usize,
}

fn clamp(x: &mut [f64], bound: Option<f64>) {
    if let Some(b) = bound {
        for v in x {
            *v = v.clamp(-b, b);
        }
    }
}

fn descend(prob: &ControlProblem, target: &[f64], start: ControlPulse, opts: &OptimizeOptions, restart: usize) -> Result<OptimizeResult> {
    let (ns, nc) = (prob.n_steps, prob.controls.len());
    let mut x = start.flat();
    let mut f = cost(prob, &start, target)?;
    let mut trace = vec![f];
    let mut g = gradient(prob, &start, target, opts.grad_eps)?;
    let mut step = 0.1;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut iterations = 0;
    while iterations < opts.max_iters && f > opts.stop_cost {
        iterations += 1;
        let gg: f64 = g.iter().map(|v| v * v).sum();
        if gg < 1e-30 {
            break;
        }
        // Barzilai-Borwein trial length
        if let Some((px, pg)) = &prev {
            let s: Vec<f64> = x.iter().zip(px).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g.iter().zip(pg).map(|(a, b)| a - b).collect();
            let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
            let ss: f64 = s.iter().map(|v| v * v).sum();
            if sy > 1e-300 {
                step = (ss / sy).clamp(1e-8, 1e3);
            }
        }
        let mut accepted = None;
        let mut t = step;
        for _ in 0..40 {
            let mut trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - t * b).collect();
            clamp(&mut trial, prob.u_max);
            let ft = cost(prob, &ControlPulse::from_flat(&trial, ns, nc), target)?;
            let decrease: f64 = x.iter().zip(&trial).zip(&g).map(|((a, b), gi)| gi * (a - b)).sum();
            if ft <= f - 1e-4 * decrease && ft < f {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((nx, nf)) = accepted else { break };
        let pulse = ControlPulse::from_flat(&nx, ns, nc);
        let ng = gradient(prob, &pulse, target, opts.grad_eps)?;
        prev = Some((std::mem::replace(&mut x, nx), std::mem::replace(&mut g, ng)));
        f = nf;
        trace.push(f);
    }
    Ok(OptimizeResult {
        pulse: ControlPulse::from_flat(&x, ns, nc),
        cost_trace: trace,
        final_cost: f,
        restart,
        iterations,
    })
}

/// Gradient descent with Barzilai-Borwein trial steps and Armijo
/// backtracking. Restart 0 starts from the zero pulse, restart `r > 0` from
/// uniform random amplitudes seeded by `seed + r`. The lowest final cost
/// wins, ties going to the earlier restart.
pub fn optimize(prob: &ControlProblem, target: &[f64], opts: &OptimizeOptions) -> Result<OptimizeResult> {
    if target.len() != prob.basis.len() {
        return Err(Error::DimensionMismatch("target components do not match the basis".into()));
    }
    let runs: Vec<Result<OptimizeResult>> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                ControlPulse::zeros(prob.n_steps, prob.controls.len())
            } else {
                let mut rng = seeded(opts.seed.wrapping_add(r as u64));
                let mut p = ControlPulse::random(prob.n_steps, prob.controls.len(), opts.init_scale, &mut rng);
                for row in &mut p.values {
                    clamp(row, prob.u_max);
                }
                p
            };
            descend(prob, target, start, opts, r)
        })
        .collect();
    let mut best: Option<OptimizeResult> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.final_cost < b.final_cost) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}
