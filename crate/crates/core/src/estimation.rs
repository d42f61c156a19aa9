//! Monte-Carlo estimation experiments: Bayesian and maximum-likelihood
//! estimators, bootstrap, CRB-saturation studies and the biased bound.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::fisher::classical_fi;
use crate::fock::Povm;
use crate::scalar::Real;
use crate::statmodel::{counts, sample_discrete, stream_rng, validate_distribution, OutcomeSample, Outcomes, ParametricModel};

/// Grid resolution of posterior and likelihood scans.
pub const GRID_POINTS: usize = 2048;
/// Golden-section tolerance of the MLE refinement.
pub const MLE_TOL: f64 = 1e-8;

type ProbFn = Arc<dyn Fn(f64) -> Result<Vec<f64>> + Send + Sync>;
type DerivFn = Arc<dyn Fn(f64) -> Result<Vec<f64>> + Send + Sync>;

/// Single-parameter discrete outcome family p(x|φ) with derivative.
#[derive(Clone)]
pub struct DiscreteFamily {
    n_outcomes: usize,
    probs: ProbFn,
    deriv: DerivFn,
}

impl std::fmt::Debug for DiscreteFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscreteFamily").field("n_outcomes", &self.n_outcomes).finish()
    }
}

impl DiscreteFamily {
    pub fn new<P, D>(n_outcomes: usize, probs: P, deriv: D) -> Self
    where
        P: Fn(f64) -> Result<Vec<f64>> + Send + Sync + 'static,
        D: Fn(f64) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        Self {
            n_outcomes,
            probs: Arc::new(probs),
            deriv: Arc::new(deriv),
        }
    }

    /// Wraps a single-parameter model (closed-form or quantum with a POVM).
    pub fn from_model<T: Real>(model: &ParametricModel<T>, povm: Option<&Povm<T>>) -> Result<Self> {
        if model.n_params() != 1 {
            return Err(Error::InvalidArgument(format!(
                "estimators need a single-parameter model, got {}",
                model.n_params()
            )));
        }
        let n_outcomes = model.outcome_labels(povm)?.len();
        let (m1, p1) = (model.clone(), povm.cloned());
        let (m2, p2) = (model.clone(), povm.cloned());
        Ok(Self::new(
            n_outcomes,
            move |phi| m1.outcome_probabilities(&m1.point(vec![phi])?, p1.as_ref()),
            move |phi| {
                let jac = m2.outcome_jacobian(&m2.point(vec![phi])?, p2.as_ref())?;
                Ok(jac.into_iter().next().unwrap_or_default())
            },
        ))
    }

    pub fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    pub fn probabilities(&self, phi: f64) -> Result<Vec<f64>> {
        let p = validate_distribution((self.probs)(phi)?)?;
        if p.len() != self.n_outcomes {
            return Err(Error::Dimension {
                expected: self.n_outcomes,
                found: p.len(),
            });
        }
        Ok(p)
    }

    pub fn derivative(&self, phi: f64) -> Result<Vec<f64>> {
        (self.deriv)(phi)
    }

    /// Classical Fisher information at φ (+∞ at divergent points).
    pub fn fisher(&self, phi: f64) -> Result<f64> {
        classical_fi(&self.probabilities(phi)?, &self.derivative(phi)?)
    }

    /// Σ_x n_x log p(x|φ); −∞ if an observed outcome is impossible.
    pub fn log_likelihood(&self, counts: &[usize], phi: f64) -> Result<f64> {
        Ok(log_likelihood(&self.probabilities(phi)?, counts))
    }
}

fn log_likelihood(p: &[f64], counts: &[usize]) -> f64 {
    p.iter()
        .zip(counts)
        .filter(|(_, &n)| n > 0)
        .map(|(&q, &n)| if q > 0.0 { n as f64 * q.ln() } else { f64::NEG_INFINITY })
        .sum()
}

/// log p(x|φ_g) tabulated on a uniform grid.
#[derive(Debug, Clone)]
pub struct LikelihoodGrid {
    grid: Vec<f64>,
    /// `log_p[x][g]`
    log_p: Vec<Vec<f64>>,
}

impl LikelihoodGrid {
    pub fn new(family: &DiscreteFamily, lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(hi > lo) || points < 2 {
            return Err(Error::InvalidArgument(format!("degenerate grid [{lo}, {hi}] with {points} points")));
        }
        let grid: Vec<f64> = (0..points)
            .map(|g| lo + (hi - lo) * g as f64 / (points - 1) as f64)
            .collect();
        let cols: Vec<Vec<f64>> = grid
            .par_iter()
            .map(|&phi| family.probabilities(phi))
            .collect::<Result<_>>()?;
        let log_p = (0..family.n_outcomes())
            .map(|x| cols.iter().map(|p| if p[x] > 0.0 { p[x].ln() } else { f64::NEG_INFINITY }).collect())
            .collect();
        Ok(Self { grid, log_p })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn log_likelihood(&self, counts: &[usize]) -> Result<Vec<f64>> {
        if counts.len() != self.log_p.len() {
            return Err(Error::Dimension {
                expected: self.log_p.len(),
                found: counts.len(),
            });
        }
        let mut ll = vec![0.0; self.grid.len()];
        for (row, &n) in self.log_p.iter().zip(counts) {
            if n == 0 {
                continue;
            }
            let n = n as f64;
            for (acc, &lp) in ll.iter_mut().zip(row) {
                *acc += n * lp;
            }
        }
        Ok(ll)
    }
}

/// Flat prior on [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prior {
    pub lo: f64,
    pub hi: f64,
}

impl Prior {
    pub fn flat(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!("prior support [{lo}, {hi}] is empty")));
        }
        Ok(Self { lo, hi })
    }
}

/// Normalized posterior on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorGrid {
    pub grid: Vec<f64>,
    /// log P(φ|data), normalized so that its exponential integrates to 1.
    pub log_posterior: Vec<f64>,
    /// ∫ exp(log L − max log L) dφ, the factor removed during normalization.
    pub normalization: f64,
}

fn trapezoid(grid: &[f64], f: &[f64]) -> f64 {
    grid.windows(2)
        .zip(f.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

impl PosteriorGrid {
    /// Normalizes an unnormalized log density (max subtracted before exponentiation).
    pub fn from_log_density(grid: Vec<f64>, log_density: Vec<f64>) -> Result<Self> {
        let max = log_density.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::DegenerateLikelihood("data impossible everywhere on the prior support".into()));
        }
        let shifted: Vec<f64> = log_density.iter().map(|l| (l - max).exp()).collect();
        let z = trapezoid(&grid, &shifted);
        let log_z = z.ln();
        Ok(Self {
            log_posterior: log_density.iter().map(|l| l - max - log_z).collect(),
            grid,
            normalization: z,
        })
    }

    pub fn density(&self) -> Vec<f64> {
        self.log_posterior.iter().map(|l| l.exp()).collect()
    }

    pub fn mass(&self) -> f64 {
        trapezoid(&self.grid, &self.density())
    }

    pub fn mean(&self) -> f64 {
        let d = self.density();
        let f: Vec<f64> = self.grid.iter().zip(&d).map(|(x, p)| x * p).collect();
        trapezoid(&self.grid, &f)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let d = self.density();
        let f: Vec<f64> = self.grid.iter().zip(&d).map(|(x, p)| (x - m).powi(2) * p).collect();
        trapezoid(&self.grid, &f).max(0.0)
    }

    /// Posterior mass within the outer `fraction` of the support on either side.
    pub fn edge_mass(&self, fraction: f64) -> f64 {
        let (lo, hi) = (self.grid[0], self.grid[self.grid.len() - 1]);
        let w = (hi - lo) * fraction;
        let d = self.density();
        let side = |inside: &dyn Fn(f64) -> bool| {
            let pts: Vec<(f64, f64)> = self.grid.iter().zip(&d).filter(|(x, _)| inside(**x)).map(|(x, p)| (*x, *p)).collect();
            let (g, f): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            trapezoid(&g, &f)
        };
        side(&|x| x <= lo + w).max(side(&|x| x >= hi - w))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BayesEstimate {
    pub posterior: PosteriorGrid,
    /// Posterior mean.
    pub estimate: f64,
    /// Posterior variance.
    pub variance: f64,
    /// Set when more than 5% of the posterior sits in the outer 2% of the
    /// support: the prior is probably too narrow.
    pub edge: bool,
}

/// Posterior ∝ Π p(x_i|φ) on the grid of `table` (flat prior over the grid range).
pub fn bayes_from_counts(table: &LikelihoodGrid, counts: &[usize]) -> Result<BayesEstimate> {
    let ll = table.log_likelihood(counts)?;
    let posterior = PosteriorGrid::from_log_density(table.grid.clone(), ll)?;
    let estimate = posterior.mean();
    let variance = posterior.variance();
    let edge = posterior.edge_mass(0.02) > 0.05;
    Ok(BayesEstimate {
        posterior,
        estimate,
        variance,
        edge,
    })
}

/// Bayesian estimate of a discrete sample under a flat prior.
pub fn bayes_estimate(sample: &OutcomeSample, family: &DiscreteFamily, prior: &Prior) -> Result<BayesEstimate> {
    let table = LikelihoodGrid::new(family, prior.lo, prior.hi, GRID_POINTS)?;
    bayes_from_counts(&table, &sample.counts(family.n_outcomes())?)
}

fn mle_from_table(table: &LikelihoodGrid, family: &DiscreteFamily, counts: &[usize]) -> Result<f64> {
    let ll = table.log_likelihood(counts)?;
    let (mut best, mut best_v) = (0, f64::NEG_INFINITY);
    let mut min_v = f64::INFINITY;
    for (i, &v) in ll.iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
        min_v = min_v.min(v);
    }
    if !best_v.is_finite() {
        return Err(Error::DegenerateLikelihood("likelihood vanishes on the whole interval".into()));
    }
    if best_v - min_v <= 1e-12 * best_v.abs().max(1.0) {
        return Err(Error::DegenerateLikelihood("likelihood is flat on the interval".into()));
    }
    let g = &table.grid;
    let n = g.len();
    let lo = g[best.saturating_sub(1)];
    let hi = g[(best + 1).min(n - 1)];
    let f = |phi: f64| family.log_likelihood(counts, phi).unwrap_or(f64::NEG_INFINITY);
    let refined = golden_max(&f, lo, hi, MLE_TOL);
    // Keep the grid point when refinement does not improve on it (edges, plateaus).
    Ok(if f(refined) > best_v { refined } else { g[best] })
}

/// Golden-section search for a maximum of a unimodal function on [a, b].
fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Maximum-likelihood estimate on [lo, hi]: 2048-point scan, then golden
/// section to 1e-8; ties go to the smallest φ.
pub fn mle_estimate(sample: &OutcomeSample, family: &DiscreteFamily, lo: f64, hi: f64) -> Result<f64> {
    let table = LikelihoodGrid::new(family, lo, hi, GRID_POINTS)?;
    mle_from_table(&table, family, &sample.counts(family.n_outcomes())?)
}

/// A point estimator acting on outcome counts.
pub trait Estimator: Send + Sync {
    fn estimate(&self, counts: &[usize]) -> Result<f64>;
}

/// Posterior-mean estimator with a precomputed likelihood table.
#[derive(Debug, Clone)]
pub struct BayesEstimator {
    table: LikelihoodGrid,
}

impl BayesEstimator {
    pub fn new(family: &DiscreteFamily, prior: &Prior) -> Result<Self> {
        Ok(Self {
            table: LikelihoodGrid::new(family, prior.lo, prior.hi, GRID_POINTS)?,
        })
    }

    pub fn posterior(&self, counts: &[usize]) -> Result<BayesEstimate> {
        bayes_from_counts(&self.table, counts)
    }
}

impl Estimator for BayesEstimator {
    fn estimate(&self, counts: &[usize]) -> Result<f64> {
        Ok(bayes_from_counts(&self.table, counts)?.estimate)
    }
}

#[derive(Debug, Clone)]
pub struct MleEstimator {
    table: LikelihoodGrid,
    family: DiscreteFamily,
}

impl MleEstimator {
    pub fn new(family: &DiscreteFamily, lo: f64, hi: f64) -> Result<Self> {
        Ok(Self {
            table: LikelihoodGrid::new(family, lo, hi, GRID_POINTS)?,
            family: family.clone(),
        })
    }
}

impl Estimator for MleEstimator {
    fn estimate(&self, counts: &[usize]) -> Result<f64> {
        mle_from_table(&self.table, &self.family, counts)
    }
}

/// φ̂ ↦ factor·φ̂: a deliberately biased estimator.
pub struct Scaled<E> {
    pub inner: E,
    pub factor: f64,
}

impl<E: Estimator> Estimator for Scaled<E> {
    fn estimate(&self, counts: &[usize]) -> Result<f64> {
        Ok(self.factor * self.inner.estimate(counts)?)
    }
}

/// Always returns the same value.
pub struct Constant(pub f64);

impl Estimator for Constant {
    fn estimate(&self, _: &[usize]) -> Result<f64> {
        Ok(self.0)
    }
}

/// SplitMix64 mixing of (seed, a, b) into an independent child seed.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Unbiased sample mean and variance.
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Variance of `estimator` over `b` resamples-with-replacement of the sample.
pub fn bootstrap_variance(outcomes: &[usize], n_outcomes: usize, estimator: &dyn Estimator, b: usize, seed: u64) -> Result<f64> {
    if b < 100 {
        return Err(Error::InvalidArgument(format!("bootstrap needs B ≥ 100, got {b}")));
    }
    if outcomes.is_empty() {
        return Err(Error::InvalidSample("empty sample".into()));
    }
    let c = counts(outcomes, n_outcomes)?;
    let m = outcomes.len();
    let freq: Vec<f64> = c.iter().map(|&k| k as f64 / m as f64).collect();
    let estimates: Vec<f64> = (0..b)
        .into_par_iter()
        .map(|i| {
            let resample = sample_discrete(&freq, m, derive_seed(seed, 0xB007, i as u64))?;
            estimator.estimate(&counts(&resample, n_outcomes)?)
        })
        .collect::<Result<_>>()?;
    Ok(mean_variance(&estimates).1)
}

/// 𝓕 = M·F·σ̂² and the upper-tail χ² p-value of (R−1)𝓕 with R−1 degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrbDiagnostic {
    pub ratio: f64,
    pub p_value: f64,
}

pub fn crb_diagnostic(variance: f64, fisher: f64, m: usize, repetitions: usize) -> Result<CrbDiagnostic> {
    if repetitions < 2 {
        return Err(Error::InvalidArgument("χ² diagnostic needs at least 2 repetitions".into()));
    }
    let ratio = m as f64 * fisher * variance;
    let dof = (repetitions - 1) as f64;
    let p_value = if ratio.is_finite() {
        let chi = ChiSquared::new(dof).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        chi.sf(dof * ratio)
    } else {
        f64::NAN
    };
    Ok(CrbDiagnostic { ratio, p_value })
}

/// One-sample Kolmogorov–Smirnov test against U(0, 1): returns (D, p-value).
pub fn ks_uniform(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() || values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidSample("KS uniformity test needs values in [0, 1]".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    Ok((d, kolmogorov_sf(lambda)))
}

/// Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One row of a repeated-experiment study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub m: usize,
    pub repetitions: usize,
    pub mean_estimate: f64,
    pub variance: f64,
    /// 1/(M F); +∞ when F = 0.
    pub crb: f64,
    pub ratio: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyTable {
    pub phi_true: f64,
    pub fisher: f64,
    /// Outcomes with (numerically) zero probability at the true value.
    pub zero_probability_outcomes: Vec<usize>,
    pub seed: u64,
    pub rows: Vec<StudyRow>,
}

/// Estimates from `repetitions` independent experiments of size `m`.
pub fn repeated_estimates(
    family: &DiscreteFamily,
    estimator: &dyn Estimator,
    phi: f64,
    m: usize,
    repetitions: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let p = family.probabilities(phi)?;
    (0..repetitions)
        .into_par_iter()
        .map(|r| {
            let s = sample_discrete(&p, m, derive_seed(seed, m as u64, r as u64))?;
            estimator.estimate(&counts(&s, p.len())?)
        })
        .collect()
}

/// For each M, runs R experiments and compares the empirical variance of
/// the estimates with the Cramér-Rao bound 1/(M F).
pub fn mc_study(
    family: &DiscreteFamily,
    estimator: &dyn Estimator,
    phi_true: f64,
    m_list: &[usize],
    repetitions: usize,
    seed: u64,
) -> Result<StudyTable> {
    if repetitions < 50 {
        return Err(Error::InvalidArgument(format!("study needs R ≥ 50, got {repetitions}")));
    }
    if m_list.is_empty() || m_list.contains(&0) {
        return Err(Error::InvalidArgument("sample sizes must be positive".into()));
    }
    let fisher = family.fisher(phi_true)?;
    let zero = family
        .probabilities(phi_true)?
        .iter()
        .enumerate()
        .filter(|(_, &p)| p < crate::fisher::P_ZERO)
        .map(|(i, _)| i)
        .collect();
    let mut rows = Vec::with_capacity(m_list.len());
    for &m in m_list {
        let est = repeated_estimates(family, estimator, phi_true, m, repetitions, seed)?;
        let (mean, variance) = mean_variance(&est);
        let crb = 1.0 / (m as f64 * fisher);
        let diag = crb_diagnostic(variance, fisher, m, repetitions)?;
        rows.push(StudyRow {
            m,
            repetitions,
            mean_estimate: mean,
            variance,
            crb,
            ratio: diag.ratio,
            p_value: diag.p_value,
        });
    }
    Ok(StudyTable {
        phi_true,
        fisher,
        zero_probability_outcomes: zero,
        seed,
        rows,
    })
}

/// Biased-CRB check at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasedPoint {
    pub phi: f64,
    pub mean_estimate: f64,
    pub bias: f64,
    pub bias_slope: f64,
    pub variance: f64,
    pub fisher: f64,
    /// (1 + db/dφ)² / (M F)
    pub bound: f64,
    /// Combined standard error of variance and bound.
    pub std_error: f64,
    pub informative: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasedCrbReport {
    pub m: usize,
    pub repetitions: usize,
    pub step: f64,
    pub points: Vec<BiasedPoint>,
}

impl BiasedCrbReport {
    pub fn all_pass(&self) -> bool {
        self.points.iter().all(|p| p.pass)
    }
}

/// Checks σ²(φ) ≥ (1 + b′(φ))²/(M F(φ)) − 3·SE on a grid. The bias slope is a
/// central difference with step `step` using common random numbers: the
/// same seeds drive the experiments at φ − step, φ and φ + step.
pub fn biased_crb_check(
    family: &DiscreteFamily,
    estimator: &dyn Estimator,
    phi_grid: &[f64],
    m: usize,
    repetitions: usize,
    step: f64,
    seed: u64,
) -> Result<BiasedCrbReport> {
    if repetitions < 2 || m == 0 || !(step > 0.0) {
        return Err(Error::InvalidArgument("biased CRB check needs R ≥ 2, M ≥ 1 and a positive step".into()));
    }
    let mut points = Vec::with_capacity(phi_grid.len());
    for (gi, &phi) in phi_grid.iter().enumerate() {
        let s = derive_seed(seed, 0xB1A5, gi as u64);
        let centre = repeated_estimates(family, estimator, phi, m, repetitions, s)?;
        let plus = repeated_estimates(family, estimator, phi + step, m, repetitions, s)?;
        let minus = repeated_estimates(family, estimator, phi - step, m, repetitions, s)?;
        let (mean, variance) = mean_variance(&centre);
        let slopes: Vec<f64> = plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * step)).collect();
        let (mean_slope, var_slope) = mean_variance(&slopes);
        let bias_slope = mean_slope - 1.0;
        let fisher = family.fisher(phi)?;
        let r = repetitions as f64;
        let informative = fisher > 0.0 && fisher.is_finite();
        let (bound, std_error, pass) = if informative {
            let mf = m as f64 * fisher;
            let bound = (1.0 + bias_slope).powi(2) / mf;
            let se_var = variance * (2.0 / (r - 1.0)).sqrt();
            let se_bound = 2.0 * (1.0 + bias_slope).abs() * (var_slope / r).sqrt() / mf;
            let se = se_var.hypot(se_bound);
            (bound, se, variance >= bound - 3.0 * se)
        } else {
            (f64::INFINITY, f64::NAN, true)
        };
        points.push(BiasedPoint {
            phi,
            mean_estimate: mean,
            bias: mean - phi,
            bias_slope,
            variance,
            fisher,
            bound,
            std_error,
            informative,
            pass,
        });
    }
    Ok(BiasedCrbReport {
        m,
        repetitions,
        step,
        points,
    })
}

/// Draws a fresh uniform in [0, 1) from stream `stream` of `seed`.
pub fn uniform(seed: u64, stream: u64) -> f64 {
    stream_rng(seed, stream).random()
}

/// Discrete sample of `m` outcomes as an [`OutcomeSample`].
pub fn discrete_sample(family: &DiscreteFamily, phi: f64, m: usize, seed: u64) -> Result<OutcomeSample> {
    let p = family.probabilities(phi)?;
    Ok(OutcomeSample {
        outcomes: Outcomes::Discrete(sample_discrete(&p, m, seed)?),
        seed,
        true_params: crate::statmodel::ParamPoint::single("phi", phi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mzi() -> DiscreteFamily {
        DiscreteFamily::new(
            2,
            |phi| {
                let c = (phi / 2.0).cos().powi(2);
                Ok(vec![c, 1.0 - c])
            },
            |phi| Ok(vec![-phi.sin() / 2.0, phi.sin() / 2.0]),
        )
    }

    fn sample_from_counts(c0: usize, c1: usize) -> OutcomeSample {
        let mut v = vec![0; c0];
        v.extend(vec![1; c1]);
        OutcomeSample {
            outcomes: Outcomes::Discrete(v),
            seed: 0,
            true_params: crate::statmodel::ParamPoint::single("phi", 0.0),
        }
    }

    #[test]
    fn empty_sample_posterior_is_prior() {
        let f = mzi();
        let est = BayesEstimator::new(&f, &Prior::flat(0.0, PI).unwrap()).unwrap();
        let b = est.posterior(&[0, 0]).unwrap();
        assert!((b.estimate - PI / 2.0).abs() < 1e-12);
        assert!((b.posterior.mass() - 1.0).abs() < 1e-9);
        assert!(!b.edge);
    }

    #[test]
    fn posterior_matches_direct_formula() {
        let f = mzi();
        let s = sample_from_counts(7, 13);
        let b = bayes_estimate(&s, &f, &Prior::flat(0.0, PI).unwrap()).unwrap();
        // direct: p0^7 p1^13 normalized by trapezoid
        let direct: Vec<f64> = b
            .posterior
            .grid
            .iter()
            .map(|&x| (x / 2.0).cos().powi(14) * (x / 2.0).sin().powi(26))
            .collect();
        let z = trapezoid(&b.posterior.grid, &direct);
        for (d, lp) in direct.iter().zip(&b.posterior.log_posterior) {
            assert!((d / z - lp.exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn mle_closed_form_inversion() {
        let f = mzi();
        let (c0, m) = (317usize, 1000usize);
        let s = sample_from_counts(c0, m - c0);
        let est = mle_estimate(&s, &f, 0.0, PI).unwrap();
        let expected = 2.0 * ((c0 as f64 / m as f64).sqrt()).acos();
        assert!((est - expected).abs() < 1e-6);
    }

    #[test]
    fn mle_edge_for_identical_outcomes() {
        let f = mzi();
        let s = sample_from_counts(50, 0);
        assert_eq!(mle_estimate(&s, &f, 0.0, PI).unwrap(), 0.0);
    }

    #[test]
    fn mle_flat_likelihood_is_an_error() {
        let flat = DiscreteFamily::new(2, |_| Ok(vec![0.5, 0.5]), |_| Ok(vec![0.0, 0.0]));
        let s = sample_from_counts(3, 4);
        assert!(matches!(mle_estimate(&s, &flat, 0.0, 1.0), Err(Error::DegenerateLikelihood(_))));
    }

    #[test]
    fn bootstrap_constant_and_permutation() {
        let out: Vec<usize> = (0..500).map(|i| (i % 3 == 0) as usize).collect();
        assert_eq!(bootstrap_variance(&out, 2, &Constant(1.0), 100, 1).unwrap(), 0.0);
        let f = mzi();
        let est = MleEstimator::new(&f, 0.0, PI).unwrap();
        let a = bootstrap_variance(&out, 2, &est, 200, 7).unwrap();
        let mut rev = out.clone();
        rev.reverse();
        let b = bootstrap_variance(&rev, 2, &est, 200, 7).unwrap();
        assert_eq!(a, b);
        assert!(bootstrap_variance(&out, 2, &est, 50, 7).is_err());
    }

    #[test]
    fn diagnostic_at_crb() {
        let d = crb_diagnostic(1.0 / (100.0 * 2.0), 2.0, 100, 50).unwrap();
        assert!((d.ratio - 1.0).abs() < 1e-12);
        assert!(d.p_value > 0.3 && d.p_value < 0.7);
        let inflated = crb_diagnostic(2.0 / 200.0, 2.0, 100, 100).unwrap();
        assert!(inflated.p_value < 0.01);
    }

    #[test]
    fn ks_detects_non_uniform() {
        let u: Vec<f64> = (0..200).map(|i| (i as f64 + 0.5) / 200.0).collect();
        assert!(ks_uniform(&u).unwrap().1 > 0.99);
        let skew: Vec<f64> = u.iter().map(|x| x * x).collect();
        assert!(ks_uniform(&skew).unwrap().1 < 0.01);
    }

    #[test]
    fn kolmogorov_known_value() {
        // Q(1.3581) ≈ 0.05
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn study_is_reproducible() {
        let f = mzi();
        let est = BayesEstimator::new(&f, &Prior::flat(0.0, PI).unwrap()).unwrap();
        let a = mc_study(&f, &est, PI / 2.0, &[50, 200], 60, 3).unwrap();
        let b = mc_study(&f, &est, PI / 2.0, &[50, 200], 60, 3).unwrap();
        assert_eq!(a, b);
        assert!(mc_study(&f, &est, PI / 2.0, &[50], 10, 3).is_err());
    }

    #[test]
    fn fringe_extremum_has_infinite_crb() {
        let f = mzi();
        let est = BayesEstimator::new(&f, &Prior::flat(0.0, PI).unwrap()).unwrap();
        let t = mc_study(&f, &est, 0.0, &[100], 50, 1).unwrap();
        assert_eq!(t.fisher, 0.0);
        assert!(t.rows[0].crb.is_infinite());
        assert_eq!(t.zero_probability_outcomes, vec![1]);
    }

    #[test]
    fn uninformative_model_is_flagged() {
        let flat = DiscreteFamily::new(2, |_| Ok(vec![0.5, 0.5]), |_| Ok(vec![0.0, 0.0]));
        let r = biased_crb_check(&flat, &Constant(1.0), &[0.5], 100, 20, 0.05, 1).unwrap();
        assert!(!r.points[0].informative);
        assert!(r.points[0].bound.is_infinite());
        assert!(r.all_pass());
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0, 0), derive_seed(1, 0, 1));
        assert_ne!(derive_seed(1, 0, 0), derive_seed(2, 0, 0));
        assert_ne!(derive_seed(1, 1, 0), derive_seed(1, 0, 1));
    }
}
