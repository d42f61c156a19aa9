//! Standard probe states on the truncated basis.

use log::warn;
use num_complex::Complex64;

use super::basis::FockBasis;
use super::state::StateVector;
use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::scalar::{cplx, lit, Real};

/// Tail mass above which a truncated state is logged as suspicious.
pub const TAIL_WARN: f64 = 1e-8;

/// How much probability a constructor may discard at the cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub max_tail: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Self { max_tail: 1e-6 }
    }
}

impl Truncation {
    pub fn new(max_tail: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&max_tail) {
            return Err(Error::Domain {
                name: "max_tail",
                value: max_tail,
                domain: "[0, 1)",
            });
        }
        Ok(Self { max_tail })
    }

    /// Renormalizes `amps` (computed in double precision) and checks the
    /// discarded tail `1 - Σ|amp|²`.
    fn finish<T: Real>(&self, basis: FockBasis, amps: Vec<Complex64>, what: &str) -> Result<StateVector<T>> {
        let kept: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let tail = (1.0 - kept).max(0.0);
        if tail > self.max_tail {
            return Err(Error::TailMass {
                tail,
                limit: self.max_tail,
            });
        }
        if tail > TAIL_WARN {
            warn!("{what}: truncation discards {tail:.2e} of the probability");
        }
        let norm = kept.sqrt();
        let v = CVector::from_iterator(
            amps.len(),
            amps.iter().map(|a| cplx(lit::<T>(a.re / norm), lit::<T>(a.im / norm))),
        );
        Ok(StateVector::normalized(basis, v)?.with_tail_mass(lit(tail)))
    }

    /// |α⟩ = e^{−|α|²/2} Σ αⁿ/√(n!) |n⟩ on a single mode.
    pub fn coherent<T: Real>(&self, basis: FockBasis, alpha: Complex64) -> Result<StateVector<T>> {
        require_modes(&basis, 1)?;
        if !alpha.is_finite() {
            return Err(Error::InvalidArgument("coherent amplitude must be finite".into()));
        }
        let mut amps = Vec::with_capacity(basis.dim());
        let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for n in 0..=basis.cutoff() {
            if n > 0 {
                c = c * alpha / (n as f64).sqrt();
            }
            amps.push(c);
        }
        self.finish(basis, amps, "coherent state")
    }

    /// Single-mode squeezed vacuum with squeezing `s` along the quadrature at
    /// angle `theta / 2`; `theta = 0` squeezes x̂.
    pub fn squeezed_vacuum<T: Real>(&self, basis: FockBasis, s: f64, theta: f64) -> Result<StateVector<T>> {
        require_modes(&basis, 1)?;
        if !s.is_finite() || !theta.is_finite() {
            return Err(Error::InvalidArgument("squeezing parameters must be finite".into()));
        }
        let ratio = -Complex64::from_polar(s.tanh(), theta);
        let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
        // c_n = sech^{1/2}(s) √((2n)!)/n! (−½e^{iϑ}tanh s)ⁿ, built by recurrence
        let mut c = Complex64::new(1.0 / s.cosh().sqrt(), 0.0);
        let mut n = 0;
        while 2 * n <= basis.cutoff() {
            if n > 0 {
                let k = n as f64;
                c = c * ratio * ((2.0 * k - 1.0) / (2.0 * k)).sqrt();
            }
            amps[2 * n] = c;
            n += 1;
        }
        self.finish(basis, amps, "squeezed vacuum")
    }

    /// Two-mode squeezed vacuum Σ (−e^{iϑ} tanh s)ⁿ |n⟩|n⟩ / cosh s.
    pub fn two_mode_squeezed<T: Real>(&self, basis: FockBasis, s: f64, theta: f64) -> Result<StateVector<T>> {
        require_modes(&basis, 2)?;
        if !s.is_finite() || !theta.is_finite() {
            return Err(Error::InvalidArgument("squeezing parameters must be finite".into()));
        }
        let ratio = -Complex64::from_polar(s.tanh(), theta);
        let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
        let mut c = Complex64::new(1.0 / s.cosh(), 0.0);
        for n in 0..=basis.cutoff() {
            if n > 0 {
                c *= ratio;
            }
            amps[basis.index_of(&[n, n])?] = c;
        }
        self.finish(basis, amps, "two-mode squeezed vacuum")
    }
}

fn require_modes(basis: &FockBasis, n: usize) -> Result<()> {
    if basis.n_modes() == n {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected: n,
            found: basis.n_modes(),
        })
    }
}

/// Coherent state with the default truncation policy.
pub fn coherent_state<T: Real>(basis: FockBasis, alpha: Complex64) -> Result<StateVector<T>> {
    Truncation::default().coherent(basis, alpha)
}

/// Squeezed vacuum with the default truncation policy.
pub fn squeezed_vacuum<T: Real>(basis: FockBasis, s: f64, theta: f64) -> Result<StateVector<T>> {
    Truncation::default().squeezed_vacuum(basis, s, theta)
}

/// Two-mode squeezed vacuum with the default truncation policy.
pub fn two_mode_squeezed<T: Real>(basis: FockBasis, s: f64, theta: f64) -> Result<StateVector<T>> {
    Truncation::default().two_mode_squeezed(basis, s, theta)
}

/// Fixed photon-number state Σ_k β_k |k⟩|N−k⟩ with N = β.len() − 1.
pub fn fixed_n_state<T: Real>(basis: FockBasis, beta: &[Complex64]) -> Result<StateVector<T>> {
    require_modes(&basis, 2)?;
    if beta.is_empty() {
        return Err(Error::InvalidArgument("β must have at least one entry".into()));
    }
    let n = beta.len() - 1;
    if n > basis.cutoff() {
        return Err(Error::InvalidArgument(format!(
            "photon number {n} exceeds cutoff {}",
            basis.cutoff()
        )));
    }
    let norm: f64 = beta.iter().map(|b| b.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidState(format!("Σ|β_k|² = {norm} is not 1")));
    }
    let mut amps = CVector::<T>::zeros(basis.dim());
    for (k, b) in beta.iter().enumerate() {
        amps[basis.index_of(&[k, n - k])?] = cplx(lit(b.re), lit(b.im));
    }
    StateVector::normalized(basis, amps)
}

/// (|N,0⟩ + |0,N⟩)/√2
pub fn noon_state<T: Real>(basis: FockBasis, n: usize) -> Result<StateVector<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("NOON state needs N ≥ 1".into()));
    }
    let mut beta = vec![Complex64::new(0.0, 0.0); n + 1];
    beta[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    beta[n] = beta[0];
    fixed_n_state(basis, &beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::operator::{build_mode_operators, N0};

    #[test]
    fn coherent_zero_is_vacuum() {
        let b = FockBasis::single_mode(10);
        let s = coherent_state::<f64>(b, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(s.amplitudes()[0].re, 1.0);
        assert!(s.amplitudes().iter().skip(1).all(|a| a.norm() == 0.0));
    }

    #[test]
    fn coherent_moments() {
        let b = FockBasis::single_mode(20);
        let s = coherent_state::<f64>(b, Complex64::new(1.0, 0.0)).unwrap();
        let ops = build_mode_operators::<f64>(&b, 0).unwrap();
        assert!((s.expectation(&ops.number).re - 1.0).abs() < 1e-8);
        assert!((s.variance(&ops.x) - N0).abs() < 1e-8);
        assert!((s.variance(&ops.p) - N0).abs() < 1e-8);
    }

    #[test]
    fn coherent_is_eigenstate_of_annihilation() {
        let b = FockBasis::single_mode(25);
        let alpha = Complex64::new(0.6, -0.8);
        let s = coherent_state::<f64>(b, alpha).unwrap();
        let a = build_mode_operators::<f64>(&b, 0).unwrap().annihilation;
        let ev = s.expectation(&a);
        assert!((ev - alpha).norm() < 1e-10);
    }

    #[test]
    fn tail_mass_error() {
        let b = FockBasis::single_mode(5);
        let r = coherent_state::<f64>(b, Complex64::new(3.0, 0.0));
        assert!(matches!(r, Err(Error::TailMass { .. })));
        let loose = Truncation::new(0.9).unwrap();
        let s = loose.coherent::<f64>(b, Complex64::new(3.0, 0.0)).unwrap();
        assert!(s.tail_mass() > 0.5);
    }

    #[test]
    fn squeezed_half() {
        let b = FockBasis::single_mode(30);
        let s = squeezed_vacuum::<f64>(b, 0.5, 0.0).unwrap();
        let ops = build_mode_operators::<f64>(&b, 0).unwrap();
        assert!((s.variance(&ops.x) - (-1.0f64).exp() / 2.0).abs() < 1e-6);
        assert!((s.expectation(&ops.number).re - 0.5f64.sinh().powi(2)).abs() < 1e-6);
        // anti-squeezed conjugate quadrature
        assert!((s.variance(&ops.p) - 1.0f64.exp() / 2.0).abs() < 1e-5);
    }

    #[test]
    fn squeezing_angle_rotates_axis() {
        let b = FockBasis::single_mode(30);
        let s = squeezed_vacuum::<f64>(b, 0.5, std::f64::consts::PI).unwrap();
        let ops = build_mode_operators::<f64>(&b, 0).unwrap();
        assert!((s.variance(&ops.p) - (-1.0f64).exp() / 2.0).abs() < 1e-6);
    }

    #[test]
    fn squeezed_zero_is_vacuum() {
        let b = FockBasis::single_mode(8);
        let s = squeezed_vacuum::<f64>(b, 0.0, 0.3).unwrap();
        assert!((s.amplitudes()[0].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_mode_squeezed_correlations() {
        let b = FockBasis::two_mode(14);
        let s = two_mode_squeezed::<f64>(b, 0.4, 0.0).unwrap();
        for i in 0..b.dim() {
            let occ = b.occupation(i);
            if occ[0] != occ[1] {
                assert_eq!(s.amplitudes()[i].norm(), 0.0);
            }
        }
        let p0 = build_mode_operators::<f64>(&b, 0).unwrap().p;
        let p1 = build_mode_operators::<f64>(&b, 1).unwrap().p;
        let diff = p0.sub(&p1).unwrap().scale(crate::scalar::re(std::f64::consts::FRAC_1_SQRT_2));
        assert!((s.variance(&diff) - (-0.8f64).exp() / 2.0).abs() < 1e-5);
    }

    #[test]
    fn fixed_n_validation() {
        let b = FockBasis::two_mode(3);
        let half = Complex64::new(0.5, 0.0);
        assert!(fixed_n_state::<f64>(b, &[half, half]).is_err());
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        assert!(fixed_n_state::<f64>(b, &[one, zero, zero, zero, zero]).is_err());
        let s = fixed_n_state::<f64>(b, &[one, zero, zero]).unwrap();
        assert_eq!(s.probability(&[0, 2]).unwrap(), 1.0);
    }

    #[test]
    fn noon_amplitudes() {
        let b = FockBasis::two_mode(3);
        let s = noon_state::<f64>(b, 3).unwrap();
        assert!((s.probability(&[3, 0]).unwrap() - 0.5).abs() < 1e-15);
        assert!((s.probability(&[0, 3]).unwrap() - 0.5).abs() < 1e-15);
    }
}
