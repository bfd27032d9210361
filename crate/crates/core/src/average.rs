//! Convex decomposition into extreme channels and realization on average.
//!
//! A non-extreme channel with canonical Kraus operators `M_k = ‖M_k‖·N_k`
//! has Choi matrix `C = (1/d) A D A†` where the columns of `A` are `vec(N_k)`
//! and `D = diag(‖M_k‖²)`. A Hermitian `X` with `Σ X_kj N_j†N_k = 0` gives
//! trace-preserving perturbations `(1/d) A (D + tX) A†`; walking to the PSD
//! boundary in both directions splits `C` into two channels of lower rank.

use rand::Rng;

use crate::channel::{extremality_test, kraus_rank, product_dependence, reduced_channel, Channel, ChoiMatrix, ExtremalityVerdict};
use crate::dilation::{dilate_via_subsystem_with, DilationReport, Initialization, MeasureOptions};
use crate::distance::{channel_distance_1to1, DEFAULT_RESTARTS};
use crate::error::{Error, Result};
use crate::majorization::ProbabilityVector;
use crate::operators::{frobenius_norm, max_abs_diff, vec_row_major, ComplexMatrix};
use crate::random::{seeded, QdfRng};
use crate::spectral::eigh;
use crate::tolerance::TOL_EXTREME;

const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ExtremeComponent {
    pub weight: f64,
    pub channel: Channel,
    pub verdict: ExtremalityVerdict,
}

#[derive(Debug, Clone)]
pub struct ExtremeDecomposition {
    pub components: Vec<ExtremeComponent>,
    /// Leaves whose Gram singular value sits just above the threshold.
    pub warnings: Vec<String>,
    /// `‖Σ π_j C_j − C‖_max`.
    pub reconstitution_error: f64,
}

impl ExtremeDecomposition {
    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    pub fn channels(&self) -> Vec<Channel> {
        self.components.iter().map(|c| c.channel.clone()).collect()
    }

    pub fn pairs(&self) -> Vec<(f64, Channel)> {
        self.components.iter().map(|c| (c.weight, c.channel.clone())).collect()
    }
}

/// Splits `C` along one Hermitian product dependence. Returns
/// `(λ, C₊, C₋)` with `C = λ C₊ + (1 − λ) C₋`.
fn split(ch: &Channel) -> Result<(f64, ChoiMatrix, ChoiMatrix)> {
    let d = ch.dim();
    let ks = ch.minimal_kraus();
    let ops = ks.ops();
    let m = ops.len();
    let norms: Vec<f64> = ops.iter().map(frobenius_norm).collect();
    let (_, x) = product_dependence(ops);
    // I + t·D^{-1/2} X D^{-1/2} ⪰ 0 fixes the admissible interval of t
    let y = ComplexMatrix::from_fn(m, m, |i, j| x[(i, j)] / (norms[i] * norms[j]));
    let ev = eigh(&y).values;
    let (hi, lo) = (ev[0], -ev[m - 1]);
    if hi <= 0.0 || lo <= 0.0 {
        return Err(Error::NumericalDegeneracy(format!(
            "dependence direction is semidefinite (eigenvalues {:.3e}, {:.3e})",
            ev[0],
            ev[m - 1]
        )));
    }
    let t_minus = 1.0 / hi;
    let t_plus = 1.0 / lo;
    if t_plus < MIN_STEP || t_minus < MIN_STEP {
        return Err(Error::NumericalDegeneracy(format!(
            "boundary step {:.3e} below {MIN_STEP:e}",
            t_plus.min(t_minus)
        )));
    }
    let a = ComplexMatrix::from_columns(
        &ops.iter()
            .zip(&norms)
            .map(|(o, n)| vec_row_major(&o.unscale(*n)))
            .collect::<Vec<_>>(),
    );
    let dmat = ComplexMatrix::from_fn(m, m, |i, j| {
        if i == j {
            crate::operators::c(norms[i] * norms[i], 0.0)
        } else {
            crate::operators::ZERO
        }
    });
    let boundary = |t: f64| -> Result<ChoiMatrix> {
        let inner = &dmat + x.scale(t);
        // clear the rounding-level negative eigenvalue left at the boundary
        let clean = eigh(&inner).map(|v| v.max(0.0));
        let c = (&a * clean * a.adjoint()).unscale(d as f64);
        let c = crate::operators::hermitian_part(&c);
        let tr = c.trace().re;
        ChoiMatrix::new(d, c.unscale(tr))
    };
    // D + t X ⪰ 0 for t ∈ [−t_minus... ] expressed through y's spectrum
    let c_plus = boundary(t_plus)?;
    let c_minus = boundary(-t_minus)?;
    let lambda = t_minus / (t_plus + t_minus);
    Ok((lambda, c_plus, c_minus))
}

/// Peels `ch` into extreme channels; at most `max_components` leaves.
pub fn extreme_decompose(ch: &Channel, tol: f64, max_components: usize) -> Result<ExtremeDecomposition> {
    let d = ch.dim();
    let mut leaves: Vec<ExtremeComponent> = Vec::new();
    let mut warnings = Vec::new();
    let mut stack: Vec<(f64, Channel)> = vec![(1.0, ch.clone())];
    while let Some((w, cur)) = stack.pop() {
        let verdict = extremality_test(&cur, tol);
        if verdict.is_extreme || verdict.m == 1 {
            if verdict.m > 1 && verdict.min_singular_value < 10.0 * tol {
                warnings.push(format!(
                    "component {} is near the extremality threshold (min singular value {:.3e})",
                    leaves.len(),
                    verdict.min_singular_value
                ));
            }
            leaves.push(ExtremeComponent {
                weight: w,
                channel: cur,
                verdict,
            });
            if leaves.len() > max_components {
                return Err(Error::BudgetExceeded {
                    leaves: leaves.len(),
                    max: max_components,
                });
            }
            continue;
        }
        let (lambda, c_plus, c_minus) = split(&cur)?;
        let plus = Channel::from_choi(c_plus);
        let minus = Channel::from_choi(c_minus);
        let before = kraus_rank(&cur);
        if kraus_rank(&plus) >= before && kraus_rank(&minus) >= before {
            return Err(Error::NumericalDegeneracy(format!(
                "split failed to reduce Kraus rank {before}"
            )));
        }
        stack.push((w * (1.0 - lambda), minus));
        stack.push((w * lambda, plus));
        if leaves.len() + stack.len() > max_components {
            return Err(Error::BudgetExceeded {
                leaves: leaves.len() + stack.len(),
                max: max_components,
            });
        }
    }
    let total: f64 = leaves.iter().map(|l| l.weight).sum();
    for l in &mut leaves {
        l.weight /= total;
    }
    let mut recon = ComplexMatrix::zeros(d * d, d * d);
    for l in &leaves {
        recon += l.channel.choi().matrix().scale(l.weight);
    }
    let reconstitution_error = max_abs_diff(&recon, ch.choi().matrix());
    Ok(ExtremeDecomposition {
        components: leaves,
        warnings,
        reconstitution_error,
    })
}

/// Default decomposition: threshold `1e-8`, budget `d⁴`.
pub fn extreme_decompose_default(ch: &Channel) -> Result<ExtremeDecomposition> {
    let d = ch.dim();
    extreme_decompose(ch, TOL_EXTREME, d.pow(4))
}

/// A classically randomized family of dilations, one per extreme component.
#[derive(Debug, Clone)]
pub struct AverageRealization {
    pub distribution: ProbabilityVector,
    pub dilations: Vec<DilationReport>,
    pub component_channels: Vec<Channel>,
    pub eps_certified: f64,
    /// 1→1 lower bound between the π-average of achieved channels and the target.
    pub eps_measured: f64,
    pub reconstitution_error: f64,
    pub warnings: Vec<String>,
}

impl AverageRealization {
    /// `Σ_j π_j` of the channels actually implemented by each dilation.
    pub fn averaged_channel(&self) -> Result<Channel> {
        let achieved: Result<Vec<Channel>> = self.dilations.iter().map(|r| r.achieved_channel()).collect();
        Channel::convex(self.distribution.as_slice(), &achieved?)
    }

    pub fn sampler(&self, seed: u64) -> RealizationSampler<'_> {
        RealizationSampler {
            realization: self,
            rng: seeded(seed),
        }
    }
}

pub fn realize_on_average(ch: &Channel, init: &Initialization) -> Result<AverageRealization> {
    realize_on_average_with(ch, init, MeasureOptions::default())
}

/// Decomposes `ch` into extreme parts and dilates each with the same
/// `d_S`-dimensional virtual subsystem.
pub fn realize_on_average_with(ch: &Channel, init: &Initialization, opts: MeasureOptions) -> Result<AverageRealization> {
    let d = ch.dim();
    if init.decomp().m() != d {
        return Err(Error::InvalidArgument(format!(
            "realization on average needs a subsystem of dimension d_S = {d}, got {}",
            init.decomp().m()
        )));
    }
    let dec = extreme_decompose_default(ch)?;
    let mut dilations = Vec::with_capacity(dec.components.len());
    for comp in &dec.components {
        dilations.push(dilate_via_subsystem_with(&comp.channel, init, opts)?);
    }
    let distribution = ProbabilityVector::normalized(dec.weights())?;
    let mut real = AverageRealization {
        distribution,
        dilations,
        component_channels: dec.channels(),
        eps_certified: init.epsilon(),
        eps_measured: 0.0,
        reconstitution_error: dec.reconstitution_error,
        warnings: dec.warnings,
    };
    let avg = real.averaged_channel()?;
    real.eps_measured = channel_distance_1to1(&avg, ch, DEFAULT_RESTARTS, opts.seed)?.lower_bound;
    Ok(real)
}

fn categorical(weights: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Draws one dilation index according to `π`; deterministic given `seed`.
pub fn sample_realization(ar: &AverageRealization, seed: u64) -> (usize, &DilationReport) {
    let mut rng = seeded(seed);
    let i = categorical(ar.distribution.as_slice(), &mut rng);
    (i, &ar.dilations[i])
}

/// Stream of independent draws from a realization.
pub struct RealizationSampler<'a> {
    realization: &'a AverageRealization,
    rng: QdfRng,
}

impl<'a> Iterator for RealizationSampler<'a> {
    type Item = (usize, &'a DilationReport);

    fn next(&mut self) -> Option<Self::Item> {
        let i = categorical(self.realization.distribution.as_slice(), &mut self.rng);
        Some((i, &self.realization.dilations[i]))
    }
}

/// Monte-Carlo estimate of the averaged channel's output on `rho`.
pub fn sampled_output(ar: &AverageRealization, rho: &ComplexMatrix, draws: usize, seed: u64) -> Result<ComplexMatrix> {
    let d = ar.component_channels[0].dim();
    let achieved: Result<Vec<Channel>> = ar
        .dilations
        .iter()
        .map(|r| reduced_channel(r.w.matrix(), &r.env_state, d))
        .collect();
    let achieved = achieved?;
    let mut acc = ComplexMatrix::zeros(d, d);
    for (i, _) in ar.sampler(seed).take(draws) {
        acc += achieved[i].apply_matrix(rho);
    }
    Ok(acc.unscale(draws as f64))
}
