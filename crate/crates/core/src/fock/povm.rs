//! Measurement models: click detectors, photon counters, SLD eigenbases.

use super::basis::FockBasis;
use super::operator::LinearOperator;
use super::state::{DensityOperator, StateVector};
use crate::error::{Error, Result};
use crate::linalg::{hermiticity_defect, inner, max_abs_diff, trace_product, CMatrix, HermitianEigen};
use crate::scalar::{lit, re, to_f64, tol, Real};

/// Positive operator-valued measure with labelled outcomes.
#[derive(Debug, Clone)]
pub struct Povm<T: Real> {
    basis: FockBasis,
    effects: Vec<LinearOperator<T>>,
    labels: Vec<String>,
}

impl<T: Real> Povm<T> {
    /// Validates that every effect is Hermitian PSD within 1e-10 and that the
    /// effects sum to the identity within 1e-9.
    pub fn new(effects: Vec<LinearOperator<T>>, labels: Vec<String>) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::InvalidOperator("a POVM needs at least one effect".into()));
        }
        if labels.len() != effects.len() {
            return Err(Error::Dimension {
                expected: effects.len(),
                found: labels.len(),
            });
        }
        let basis = *effects[0].basis();
        let d = basis.dim();
        let mut sum = CMatrix::<T>::zeros(d, d);
        for (e, label) in effects.iter().zip(&labels) {
            basis.ensure_same(e.basis())?;
            if hermiticity_defect(e.matrix()) > tol(1e-10) {
                return Err(Error::InvalidOperator(format!("effect {label} is not Hermitian")));
            }
            let min = HermitianEigen::new(e.matrix()).values[0];
            if min < -tol::<T>(1e-10) {
                return Err(Error::InvalidOperator(format!(
                    "effect {label} has negative eigenvalue {:.3e}",
                    to_f64(min)
                )));
            }
            sum += e.matrix();
        }
        let defect = max_abs_diff(&sum, &CMatrix::identity(d, d));
        if defect > tol(1e-9) {
            return Err(Error::InvalidOperator(format!(
                "effects do not resolve the identity (defect {:.3e})",
                to_f64(defect)
            )));
        }
        Ok(Self {
            basis,
            effects,
            labels,
        })
    }

    /// Click detector on `mode`: Π₀ = (1 − d) Σₙ (1−η)ⁿ|n⟩⟨n|, Π₁ = 1 − Π₀,
    /// where `dark` is the probability of a spurious click.
    pub fn on_off(basis: &FockBasis, mode: usize, efficiency: f64, dark: f64) -> Result<Self> {
        basis.check_mode(mode)?;
        check_prob("efficiency", efficiency)?;
        check_prob("dark", dark)?;
        let no_click = |i: usize| {
            let n = basis.occupation_of(i, mode) as i32;
            (1.0 - dark) * (1.0 - efficiency).powi(n)
        };
        let p0 = LinearOperator::diagonal(*basis, |i| re(lit(no_click(i))));
        let p1 = LinearOperator::diagonal(*basis, |i| re(lit(1.0 - no_click(i))));
        Self::new(vec![p0, p1], vec!["off".into(), "on".into()])
    }

    /// Photon-number resolving detector on `mode` with binomial loss:
    /// Π_k = Σₙ C(n,k) η^k (1−η)^{n−k} |n⟩⟨n|.
    pub fn photon_number(basis: &FockBasis, mode: usize, efficiency: f64) -> Result<Self> {
        basis.check_mode(mode)?;
        check_prob("efficiency", efficiency)?;
        let mut effects = Vec::with_capacity(basis.levels());
        let mut labels = Vec::with_capacity(basis.levels());
        for k in 0..basis.levels() {
            effects.push(LinearOperator::diagonal(*basis, |i| {
                re(lit(binomial_pmf(basis.occupation_of(i, mode), k, efficiency)))
            }));
            labels.push(k.to_string());
        }
        Self::new(effects, labels)
    }

    /// Photon counting on every mode; outcomes labelled "n0,n1,…" in basis order.
    pub fn photon_counting(basis: &FockBasis, efficiency: f64) -> Result<Self> {
        let mut povm = Self::photon_number(basis, 0, efficiency)?;
        for mode in 1..basis.n_modes() {
            povm = povm.product(&Self::photon_number(basis, mode, efficiency)?)?;
        }
        Ok(povm)
    }

    /// Projectors onto the eigenspaces of a Hermitian operator; eigenvalues
    /// closer than 1e-8 of the spectral range share one projector.
    pub fn sld_eigenbasis(op: &LinearOperator<T>) -> Result<Self> {
        let m = op.matrix();
        let scale = m.norm().max(T::one());
        if hermiticity_defect(m) > tol::<T>(1e-10) * scale {
            return Err(Error::InvalidOperator("operator is not Hermitian".into()));
        }
        let eig = HermitianEigen::new(m);
        let n = eig.dim();
        let range = eig.values[n - 1] - eig.values[0];
        let gap = range * lit(1e-8);
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            match groups.last_mut() {
                Some(g) if eig.values[i] - eig.values[*g.last().unwrap()] <= gap => g.push(i),
                _ => groups.push(vec![i]),
            }
        }
        let mut effects = Vec::with_capacity(groups.len());
        let mut labels = Vec::with_capacity(groups.len());
        for g in &groups {
            let mut proj = CMatrix::<T>::zeros(n, n);
            for &c in g {
                let v = eig.vectors.column(c);
                proj += v * v.adjoint();
            }
            effects.push(LinearOperator::from_parts(*op.basis(), proj));
            let mean = g.iter().fold(T::zero(), |a, &c| a + eig.values[c]) / lit(g.len() as f64);
            labels.push(format!("{:.6e}", to_f64(mean)));
        }
        Self::new(effects, labels)
    }

    /// Joint measurement Π_{ij} = A_i B_j of two commuting POVMs.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.basis.ensure_same(&other.basis)?;
        let mut effects = Vec::with_capacity(self.len() * other.len());
        let mut labels = Vec::with_capacity(self.len() * other.len());
        for (a, la) in self.effects.iter().zip(&self.labels) {
            for (b, lb) in other.effects.iter().zip(&other.labels) {
                let prod = a.compose(b)?;
                if hermiticity_defect(prod.matrix()) > tol(1e-10) {
                    return Err(Error::InvalidOperator(
                        "product of non-commuting effects".into(),
                    ));
                }
                effects.push(prod);
                labels.push(format!("{la},{lb}"));
            }
        }
        Self::new(effects, labels)
    }

    /// The same measurement preceded by the unitary `u`: effects U†ΠU.
    pub fn after_unitary(&self, u: &LinearOperator<T>) -> Result<Self> {
        self.basis.ensure_same(u.basis())?;
        let ud = u.matrix().adjoint();
        let effects = self
            .effects
            .iter()
            .map(|e| {
                let m = &ud * e.matrix() * u.matrix();
                LinearOperator::from_parts(self.basis, crate::linalg::hermitian_part(&m))
            })
            .collect();
        Self::new(effects, self.labels.clone())
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn effects(&self) -> &[LinearOperator<T>] {
        &self.effects
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }
}

fn check_prob(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            domain: "[0, 1]",
        })
    }
}

/// C(n,k) ηᵏ (1−η)^{n−k}, zero for k > n.
fn binomial_pmf(n: usize, k: usize, eta: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut c = 1.0f64;
    for j in 0..k {
        c = c * (n - j) as f64 / (j + 1) as f64;
    }
    c * eta.powi(k as i32) * (1.0 - eta).powi((n - k) as i32)
}

/// Born-rule probabilities Tr[ρΠᵢ]; entries within −1e-12 of zero are clipped.
pub fn outcome_distribution<T: Real>(rho: &DensityOperator<T>, povm: &Povm<T>) -> Result<Vec<T>> {
    rho.basis().ensure_same(povm.basis())?;
    let raw = povm
        .effects()
        .iter()
        .map(|e| trace_product(rho.matrix(), e.matrix()).re)
        .collect();
    finish_distribution(raw)
}

/// Born-rule probabilities ⟨ψ|Πᵢ|ψ⟩ for a pure state.
pub fn outcome_distribution_pure<T: Real>(state: &StateVector<T>, povm: &Povm<T>) -> Result<Vec<T>> {
    state.basis().ensure_same(povm.basis())?;
    let psi = state.amplitudes();
    let raw = povm
        .effects()
        .iter()
        .map(|e| inner(psi, &(e.matrix() * psi)).re)
        .collect();
    finish_distribution(raw)
}

fn finish_distribution<T: Real>(mut p: Vec<T>) -> Result<Vec<T>> {
    for v in p.iter_mut() {
        if *v < T::zero() {
            if *v < -tol::<T>(1e-12) {
                return Err(Error::InvalidDistribution(format!(
                    "negative probability {:.3e}",
                    to_f64(*v)
                )));
            }
            *v = T::zero();
        }
    }
    let total = p.iter().fold(T::zero(), |a, &b| a + b);
    if (total - T::one()).abs() > tol(1e-9) {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {}",
            to_f64(total)
        )));
    }
    Ok(p)
}
