//! Parametric statistical models: state families ρ(φ) and closed-form
//! outcome distributions p(x|φ), with derivatives and sampling.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{outcome_distribution, DensityOperator, LinearOperator, Povm, StateVector};
use crate::linalg::{commutator, hermitian_part, max_abs_diff, outer, CMatrix, CVector, HermitianEigen};
use crate::scalar::{imag_unit, lit, re, to_f64, Real};

type GeneratorSum<'a, T> = (HermitianEigen<T>, &'a StateVector<T>, &'a [LinearOperator<T>]);

/// Named parameter values φ⃗.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamPoint {
    names: Vec<String>,
    values: Vec<f64>,
}

impl ParamPoint {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>, values: Vec<f64>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() != values.len() {
            return Err(Error::Dimension {
                expected: names.len(),
                found: values.len(),
            });
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::InvalidArgument(format!("duplicate parameter name {n}")));
            }
        }
        Ok(Self { names, values })
    }

    pub fn single(name: &str, value: f64) -> Self {
        Self {
            names: vec![name.to_string()],
            values: vec![value],
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    /// Copy with parameter `index` set to `value`.
    pub fn with_value(&self, index: usize, value: f64) -> Self {
        let mut p = self.clone();
        p.values[index] = value;
        p
    }
}

impl fmt::Display for ParamPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (n, v)) in self.names.iter().zip(&self.values).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{n}={v}")?;
        }
        Ok(())
    }
}

type StateFn<T> = Arc<dyn Fn(&[f64]) -> Result<DensityOperator<T>> + Send + Sync>;
type ProbFn = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;
type JacFn = Arc<dyn Fn(&[f64]) -> Result<Vec<Vec<f64>>> + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// The four ways a model can be specified.
#[derive(Clone)]
pub enum ModelKind<T: Real> {
    /// |ψ(φ)⟩ = exp(−i Σ φ_h Ĝ_h)|ψ₀⟩.
    Unitary {
        initial: StateVector<T>,
        generators: Vec<LinearOperator<T>>,
        commuting: bool,
    },
    /// Arbitrary φ ↦ ρ(φ).
    StateMap(StateFn<T>),
    /// Closed-form discrete distribution with an optional analytic Jacobian
    /// `jac[h][x] = ∂p(x)/∂φ_h`.
    Discrete {
        labels: Vec<String>,
        probs: ProbFn,
        jacobian: Option<JacFn>,
    },
    /// Scalar Gaussian outcome with mean μ(φ) and variance v(φ).
    Gaussian {
        mean: ScalarFn,
        variance: ScalarFn,
        mean_gradient: Option<GradFn>,
    },
}

impl<T: Real> fmt::Debug for ModelKind<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Unitary { generators, commuting, .. } => f
                .debug_struct("Unitary")
                .field("generators", &generators.len())
                .field("commuting", commuting)
                .finish(),
            ModelKind::StateMap(_) => f.write_str("StateMap"),
            ModelKind::Discrete { labels, jacobian, .. } => f
                .debug_struct("Discrete")
                .field("labels", labels)
                .field("analytic_jacobian", &jacobian.is_some())
                .finish(),
            ModelKind::Gaussian { mean_gradient, .. } => f
                .debug_struct("Gaussian")
                .field("analytic_gradient", &mean_gradient.is_some())
                .finish(),
        }
    }
}

/// Outcomes drawn from a model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Outcomes {
    Discrete(Vec<usize>),
    Continuous(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeSample {
    pub outcomes: Outcomes,
    pub seed: u64,
    pub true_params: ParamPoint,
}

impl OutcomeSample {
    pub fn len(&self) -> usize {
        match &self.outcomes {
            Outcomes::Discrete(v) => v.len(),
            Outcomes::Continuous(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Outcome histogram for discrete samples.
    pub fn counts(&self, n_outcomes: usize) -> Result<Vec<usize>> {
        match &self.outcomes {
            Outcomes::Discrete(v) => counts(v, n_outcomes),
            Outcomes::Continuous(_) => Err(Error::Unsupported("counts of a continuous sample")),
        }
    }
}

/// Histogram of outcome indices.
pub fn counts(outcomes: &[usize], n_outcomes: usize) -> Result<Vec<usize>> {
    let mut c = vec![0; n_outcomes];
    for &o in outcomes {
        *c.get_mut(o)
            .ok_or_else(|| Error::InvalidSample(format!("outcome {o} out of range")))? += 1;
    }
    Ok(c)
}

/// Parametric family ρ(φ⃗) or p(x|φ⃗).
#[derive(Debug, Clone)]
pub struct ParametricModel<T: Real> {
    names: Vec<String>,
    kind: ModelKind<T>,
    step_scale: f64,
}

/// Relative finite-difference step: δ = scale·max(1, |φ_h|).
pub const DEFAULT_STEP_SCALE: f64 = 1e-5;
const MIN_STEP: f64 = 1e-12;
/// Generators whose commutators are below this are treated as commuting.
const COMMUTING_TOL: f64 = 1e-9;

impl<T: Real> ParametricModel<T> {
    pub fn unitary<S: Into<String>>(
        names: impl IntoIterator<Item = S>,
        initial: StateVector<T>,
        generators: Vec<LinearOperator<T>>,
    ) -> Result<Self> {
        let names = collect_names(names)?;
        if generators.len() != names.len() {
            return Err(Error::Dimension {
                expected: names.len(),
                found: generators.len(),
            });
        }
        let mut commuting = true;
        for (i, g) in generators.iter().enumerate() {
            initial.basis().ensure_same(g.basis())?;
            if !g.is_hermitian(lit(1e-10)) {
                return Err(Error::InvalidOperator(format!("generator {i} is not Hermitian")));
            }
            for h in &generators[..i] {
                let c = commutator(g.matrix(), h.matrix());
                if to_f64(c.norm()) > COMMUTING_TOL {
                    commuting = false;
                }
            }
        }
        Ok(Self {
            names,
            kind: ModelKind::Unitary {
                initial,
                generators,
                commuting,
            },
            step_scale: DEFAULT_STEP_SCALE,
        })
    }

    pub fn state_map<S: Into<String>, F>(names: impl IntoIterator<Item = S>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<DensityOperator<T>> + Send + Sync + 'static,
    {
        Ok(Self {
            names: collect_names(names)?,
            kind: ModelKind::StateMap(Arc::new(f)),
            step_scale: DEFAULT_STEP_SCALE,
        })
    }

    pub fn discrete<S: Into<String>, F>(
        names: impl IntoIterator<Item = S>,
        labels: Vec<String>,
        probs: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        Ok(Self {
            names: collect_names(names)?,
            kind: ModelKind::Discrete {
                labels,
                probs: Arc::new(probs),
                jacobian: None,
            },
            step_scale: DEFAULT_STEP_SCALE,
        })
    }

    /// Attaches an analytic Jacobian to a discrete model.
    pub fn with_jacobian<F>(mut self, jac: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<Vec<Vec<f64>>> + Send + Sync + 'static,
    {
        match &mut self.kind {
            ModelKind::Discrete { jacobian, .. } => {
                *jacobian = Some(Arc::new(jac));
                Ok(self)
            }
            _ => Err(Error::Unsupported("analytic Jacobian on a non-discrete model")),
        }
    }

    pub fn gaussian<S: Into<String>, M, V>(names: impl IntoIterator<Item = S>, mean: M, variance: V) -> Result<Self>
    where
        M: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Ok(Self {
            names: collect_names(names)?,
            kind: ModelKind::Gaussian {
                mean: Arc::new(mean),
                variance: Arc::new(variance),
                mean_gradient: None,
            },
            step_scale: DEFAULT_STEP_SCALE,
        })
    }

    /// Attaches an analytic mean gradient to a Gaussian model.
    pub fn with_mean_gradient<F>(mut self, grad: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        match &mut self.kind {
            ModelKind::Gaussian { mean_gradient, .. } => {
                *mean_gradient = Some(Arc::new(grad));
                Ok(self)
            }
            _ => Err(Error::Unsupported("mean gradient on a non-Gaussian model")),
        }
    }

    /// Overrides the relative finite-difference step.
    pub fn with_step_scale(mut self, scale: f64) -> Self {
        self.step_scale = scale;
        self
    }

    pub fn kind(&self) -> &ModelKind<T> {
        &self.kind
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_params(&self) -> usize {
        self.names.len()
    }

    pub fn point(&self, values: Vec<f64>) -> Result<ParamPoint> {
        ParamPoint::new(self.names.iter().cloned(), values)
    }

    fn check(&self, p: &ParamPoint) -> Result<()> {
        if p.names() != self.names.as_slice() {
            return Err(Error::InvalidArgument(format!(
                "point ({p}) does not match model parameters {:?}",
                self.names
            )));
        }
        if p.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite parameter in ({p})")));
        }
        Ok(())
    }

    fn check_index(&self, h: usize) -> Result<()> {
        if h < self.names.len() {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: self.names.len(),
                found: h + 1,
            })
        }
    }

    fn step(&self, value: f64) -> Result<f64> {
        let d = self.step_scale * value.abs().max(1.0);
        if !(d >= MIN_STEP) {
            return Err(Error::StepUnderflow(d));
        }
        Ok(d)
    }

    /// Decomposition of A = Σ φ_h Ĝ_h.
    fn generator_sum(&self, p: &ParamPoint) -> Result<GeneratorSum<'_, T>> {
        match &self.kind {
            ModelKind::Unitary {
                initial, generators, ..
            } => {
                let d = initial.basis().dim();
                let mut a = CMatrix::<T>::zeros(d, d);
                for (g, &v) in generators.iter().zip(p.values()) {
                    a += g.matrix() * re(lit::<T>(v));
                }
                Ok((HermitianEigen::new(&a), initial, generators))
            }
            _ => Err(Error::Unsupported("pure-state access on a non-unitary model")),
        }
    }

    /// |ψ(φ)⟩ for unitary models.
    pub fn pure_state_at(&self, p: &ParamPoint) -> Result<StateVector<T>> {
        self.check(p)?;
        if let ModelKind::Unitary { initial, generators, .. } = &self.kind {
            if generators.iter().all(|g| is_diagonal(g.matrix())) {
                let amps = CVector::from_fn(initial.basis().dim(), |i, _| {
                    let phase = generators
                        .iter()
                        .zip(p.values())
                        .fold(T::zero(), |acc, (g, &v)| acc + g.matrix()[(i, i)].re * lit(v));
                    initial.amplitudes()[i] * crate::scalar::cplx(phase.cos(), -phase.sin())
                });
                return StateVector::normalized(*initial.basis(), amps);
            }
        }
        let (eig, initial, _) = self.generator_sum(p)?;
        let amps = eig.exp_minus_i() * initial.amplitudes();
        StateVector::normalized(*initial.basis(), amps)
    }

    /// |∂_h ψ(φ)⟩ for unitary models, exact for commuting and non-commuting generators.
    pub fn pure_state_derivative(&self, p: &ParamPoint, h: usize) -> Result<CVector<T>> {
        self.check(p)?;
        self.check_index(h)?;
        if let ModelKind::Unitary {
            generators, commuting, ..
        } = &self.kind
        {
            if *commuting {
                let psi = self.pure_state_at(p)?;
                return Ok((generators[h].matrix() * psi.amplitudes()) * (-imag_unit::<T>()));
            }
        }
        let (eig, initial, generators) = self.generator_sum(p)?;
        let du = eig.exp_minus_i_derivative(generators[h].matrix());
        Ok(du * initial.amplitudes())
    }

    /// ρ(φ) for unitary and state-map models.
    pub fn state_at(&self, p: &ParamPoint) -> Result<DensityOperator<T>> {
        self.check(p)?;
        match &self.kind {
            ModelKind::Unitary { .. } => Ok(self.pure_state_at(p)?.density()),
            ModelKind::StateMap(f) => {
                let rho = f(p.values())?;
                rho.validate()?;
                Ok(rho)
            }
            _ => Err(Error::Unsupported("state_at on a closed-form outcome model")),
        }
    }

    /// ∂ρ/∂φ_h, Hermitian by construction.
    pub fn state_derivative(&self, p: &ParamPoint, h: usize) -> Result<CMatrix<T>> {
        self.check(p)?;
        self.check_index(h)?;
        match &self.kind {
            ModelKind::Unitary {
                generators, commuting, ..
            } => {
                if *commuting {
                    let rho = self.state_at(p)?;
                    let c = commutator(generators[h].matrix(), rho.matrix());
                    Ok(hermitian_part(&(c * (-imag_unit::<T>()))))
                } else {
                    let psi = self.pure_state_at(p)?;
                    let dpsi = self.pure_state_derivative(p, h)?;
                    let m = outer(&dpsi, psi.amplitudes()) + outer(psi.amplitudes(), &dpsi);
                    Ok(hermitian_part(&m))
                }
            }
            ModelKind::StateMap(f) => {
                let v = p.values()[h];
                let d = self.step(v)?;
                let mut plus = p.values().to_vec();
                let mut minus = p.values().to_vec();
                plus[h] = v + d;
                minus[h] = v - d;
                let rp = f(&plus)?;
                let rm = f(&minus)?;
                let diff = (rp.matrix() - rm.matrix()) * re(lit::<T>(0.5 / d));
                Ok(hermitian_part(&diff))
            }
            _ => Err(Error::Unsupported("state derivative on a closed-form outcome model")),
        }
    }

    pub fn state_derivatives(&self, p: &ParamPoint) -> Result<Vec<CMatrix<T>>> {
        (0..self.n_params()).map(|h| self.state_derivative(p, h)).collect()
    }

    /// Outcome labels: the POVM's for quantum models, the model's own otherwise.
    pub fn outcome_labels(&self, povm: Option<&Povm<T>>) -> Result<Vec<String>> {
        match (&self.kind, povm) {
            (ModelKind::Discrete { labels, .. }, None) => Ok(labels.clone()),
            (ModelKind::Unitary { .. } | ModelKind::StateMap(_), Some(m)) => Ok(m.labels().to_vec()),
            _ => Err(measurement_mismatch(&self.kind)),
        }
    }

    /// p(x|φ); quantum models need a POVM, closed-form discrete models must not get one.
    pub fn outcome_probabilities(&self, p: &ParamPoint, povm: Option<&Povm<T>>) -> Result<Vec<f64>> {
        self.check(p)?;
        match (&self.kind, povm) {
            (ModelKind::Discrete { probs, .. }, None) => validate_distribution(probs(p.values())?),
            (ModelKind::Unitary { .. } | ModelKind::StateMap(_), Some(m)) => {
                let rho = self.state_at(p)?;
                Ok(outcome_distribution(&rho, m)?.into_iter().map(to_f64).collect())
            }
            _ => Err(measurement_mismatch(&self.kind)),
        }
    }

    /// `jac[h][x] = ∂p(x|φ)/∂φ_h`.
    pub fn outcome_jacobian(&self, p: &ParamPoint, povm: Option<&Povm<T>>) -> Result<Vec<Vec<f64>>> {
        self.check(p)?;
        match (&self.kind, povm) {
            (ModelKind::Discrete { jacobian: Some(j), .. }, None) => {
                let jac = j(p.values())?;
                if jac.len() != self.n_params() {
                    return Err(Error::Dimension {
                        expected: self.n_params(),
                        found: jac.len(),
                    });
                }
                Ok(jac)
            }
            (ModelKind::Discrete { probs, .. }, None) => (0..self.n_params())
                .map(|h| {
                    let v = p.values()[h];
                    let d = self.step(v)?;
                    let mut plus = p.values().to_vec();
                    let mut minus = p.values().to_vec();
                    plus[h] = v + d;
                    minus[h] = v - d;
                    let pp = probs(&plus)?;
                    let pm = probs(&minus)?;
                    Ok(pp.iter().zip(&pm).map(|(a, b)| (a - b) / (2.0 * d)).collect())
                })
                .collect(),
            (ModelKind::Unitary { .. } | ModelKind::StateMap(_), Some(m)) => {
                let drho = self.state_derivatives(p)?;
                Ok(drho
                    .iter()
                    .map(|dr| {
                        m.effects()
                            .iter()
                            .map(|e| to_f64(crate::linalg::trace_product(dr, e.matrix()).re))
                            .collect()
                    })
                    .collect())
            }
            _ => Err(measurement_mismatch(&self.kind)),
        }
    }

    /// (μ(φ), v(φ)) for Gaussian models.
    pub fn gaussian_moments(&self, p: &ParamPoint) -> Result<(f64, f64)> {
        self.check(p)?;
        match &self.kind {
            ModelKind::Gaussian { mean, variance, .. } => {
                let v = variance(p.values());
                if !(v > 0.0) {
                    return Err(Error::InvalidDistribution(format!("Gaussian variance {v} is not positive")));
                }
                Ok((mean(p.values()), v))
            }
            _ => Err(Error::Unsupported("Gaussian moments of a non-Gaussian model")),
        }
    }

    /// ∂μ/∂φ_h for Gaussian models.
    pub fn mean_derivative(&self, p: &ParamPoint, h: usize) -> Result<f64> {
        self.check(p)?;
        self.check_index(h)?;
        match &self.kind {
            ModelKind::Gaussian {
                mean_gradient: Some(g), ..
            } => Ok(g(p.values())[h]),
            ModelKind::Gaussian { mean, .. } => {
                let v = p.values()[h];
                let d = self.step(v)?;
                let mut plus = p.values().to_vec();
                let mut minus = p.values().to_vec();
                plus[h] = v + d;
                minus[h] = v - d;
                Ok((mean(&plus) - mean(&minus)) / (2.0 * d))
            }
            _ => Err(Error::Unsupported("mean derivative of a non-Gaussian model")),
        }
    }

    /// σ² = v/(∂μ/∂φ_h)²; +∞ when the mean does not move.
    pub fn error_propagation(&self, p: &ParamPoint, h: usize) -> Result<f64> {
        let (_, v) = self.gaussian_moments(p)?;
        let dm = self.mean_derivative(p, h)?;
        let s = v / (dm * dm);
        Ok(if dm == 0.0 || !s.is_finite() { f64::INFINITY } else { s })
    }

    /// M i.i.d. outcomes at `p`, reproducible from `seed`.
    pub fn sample(&self, p: &ParamPoint, povm: Option<&Povm<T>>, m: usize, seed: u64) -> Result<OutcomeSample> {
        if m == 0 {
            return Err(Error::InvalidArgument("sample size must be at least 1".into()));
        }
        let outcomes = match &self.kind {
            ModelKind::Gaussian { .. } => {
                let (mu, v) = self.gaussian_moments(p)?;
                Outcomes::Continuous(sample_gaussian(mu, v.sqrt(), m, seed)?)
            }
            _ => {
                let probs = self.outcome_probabilities(p, povm)?;
                Outcomes::Discrete(sample_discrete(&probs, m, seed)?)
            }
        };
        Ok(OutcomeSample {
            outcomes,
            seed,
            true_params: p.clone(),
        })
    }
}

fn measurement_mismatch<T: Real>(kind: &ModelKind<T>) -> Error {
    match kind {
        ModelKind::Discrete { .. } => Error::InvalidArgument("closed-form model takes no POVM".into()),
        ModelKind::Gaussian { .. } => Error::Unsupported("discrete outcomes of a Gaussian model"),
        _ => Error::InvalidArgument("quantum model needs a POVM".into()),
    }
}

fn collect_names<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Vec<String>> {
    let names: Vec<String> = names.into_iter().map(Into::into).collect();
    let n = names.len();
    Ok(ParamPoint::new(names, vec![0.0; n])?.names)
}

fn is_diagonal<T: Real>(m: &CMatrix<T>) -> bool {
    let d = CMatrix::from_diagonal(&m.diagonal());
    max_abs_diff(m, &d) == T::zero()
}

/// Checks p ≥ 0 (clipping values above −1e-12) and Σp = 1 within 1e-9.
pub fn validate_distribution(mut p: Vec<f64>) -> Result<Vec<f64>> {
    for v in p.iter_mut() {
        if !v.is_finite() || *v < -1e-12 {
            return Err(Error::InvalidDistribution(format!("invalid probability {v}")));
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
    }
    Ok(p)
}

/// Outcomes per independent random stream; sampling results do not depend
/// on how blocks are scheduled across threads.
pub const SAMPLE_BLOCK: usize = 1024;

/// ChaCha8 generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Inverse-CDF draws from a discrete distribution. The same seed gives the
/// same uniforms for any distribution, so nearby distributions produce
/// coupled samples.
pub fn sample_discrete(probs: &[f64], m: usize, seed: u64) -> Result<Vec<usize>> {
    let total: f64 = probs.iter().sum();
    if probs.is_empty() || !(total > 0.0) || probs.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::InvalidDistribution(
            "cannot sample: no positive probability".into(),
        ));
    }
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in probs {
        acc += p / total;
        cdf.push(acc);
    }
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let n_blocks = m.div_ceil(SAMPLE_BLOCK);
    let blocks: Vec<Vec<usize>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let len = SAMPLE_BLOCK.min(m - b * SAMPLE_BLOCK);
            let mut rng = stream_rng(seed, b as u64);
            (0..len)
                .map(|_| {
                    let u: f64 = rng.random();
                    cdf.partition_point(|&c| c <= u).min(last)
                })
                .collect()
        })
        .collect();
    Ok(blocks.concat())
}

/// Gaussian draws N(mean, sd²) in reproducible blocks.
pub fn sample_gaussian(mean: f64, sd: f64, m: usize, seed: u64) -> Result<Vec<f64>> {
    let normal = Normal::new(mean, sd)
        .map_err(|e| Error::InvalidDistribution(format!("Gaussian N({mean}, {sd}²): {e}")))?;
    let n_blocks = m.div_ceil(SAMPLE_BLOCK);
    let blocks: Vec<Vec<f64>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let len = SAMPLE_BLOCK.min(m - b * SAMPLE_BLOCK);
            let mut rng = stream_rng(seed, b as u64);
            (0..len).map(|_| normal.sample(&mut rng)).collect()
        })
        .collect();
    Ok(blocks.concat())
}
