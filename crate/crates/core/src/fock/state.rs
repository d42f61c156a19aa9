use nalgebra::ComplexField;
use num_complex::Complex;

use super::basis::FockBasis;
use super::operator::LinearOperator;
use crate::error::{Error, Result};
use crate::linalg::{hermiticity_defect, inner, outer, trace_product, CMatrix, CVector, HermitianEigen};
use crate::scalar::{lit, re, to_f64, tol, Real};

/// Normalized pure state on a truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Real> {
    basis: FockBasis,
    amplitudes: CVector<T>,
    /// Probability mass discarded by truncation before renormalization.
    tail_mass: T,
}

impl<T: Real> StateVector<T> {
    /// Wraps amplitudes that are already normalized.
    pub fn new(basis: FockBasis, amplitudes: CVector<T>) -> Result<Self> {
        check_len(&basis, amplitudes.len())?;
        let norm = amplitudes.norm();
        if (norm - T::one()).abs() > tol(1e-10) {
            return Err(Error::InvalidState(format!(
                "amplitude norm {} differs from 1",
                to_f64(norm)
            )));
        }
        Ok(Self {
            basis,
            amplitudes,
            tail_mass: T::zero(),
        })
    }

    /// Rescales the amplitudes to unit norm.
    pub fn normalized(basis: FockBasis, amplitudes: CVector<T>) -> Result<Self> {
        check_len(&basis, amplitudes.len())?;
        let norm = amplitudes.norm();
        if norm <= T::default_epsilon() {
            return Err(Error::InvalidState("zero vector cannot be normalized".into()));
        }
        Ok(Self {
            basis,
            amplitudes: amplitudes.unscale(norm),
            tail_mass: T::zero(),
        })
    }

    pub fn basis_state(basis: FockBasis, occupation: &[usize]) -> Result<Self> {
        let idx = basis.index_of(occupation)?;
        let mut amps = CVector::zeros(basis.dim());
        amps[idx] = re(T::one());
        Ok(Self {
            basis,
            amplitudes: amps,
            tail_mass: T::zero(),
        })
    }

    pub fn vacuum(basis: FockBasis) -> Self {
        let mut amps = CVector::zeros(basis.dim());
        amps[0] = re(T::one());
        Self {
            basis,
            amplitudes: amps,
            tail_mass: T::zero(),
        }
    }

    pub(crate) fn with_tail_mass(mut self, tail: T) -> Self {
        self.tail_mass = tail;
        self
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &CVector<T> {
        &self.amplitudes
    }

    pub fn amplitude(&self, occupation: &[usize]) -> Result<Complex<T>> {
        Ok(self.amplitudes[self.basis.index_of(occupation)?])
    }

    pub fn probability(&self, occupation: &[usize]) -> Result<T> {
        Ok(self.amplitude(occupation)?.modulus_squared())
    }

    pub fn tail_mass(&self) -> T {
        self.tail_mass
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        self.basis.ensure_same(&other.basis)?;
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }

    /// |⟨self|other⟩|²
    pub fn fidelity(&self, other: &Self) -> Result<T> {
        Ok(self.inner(other)?.modulus_squared())
    }

    /// Applies a unitary, renormalizing away rounding drift.
    pub fn evolve(&self, unitary: &LinearOperator<T>) -> Result<Self> {
        self.basis.ensure_same(unitary.basis())?;
        let out = unitary.matrix() * &self.amplitudes;
        let norm = out.norm();
        if (norm - T::one()).abs() > tol(1e-9) {
            return Err(Error::InvalidOperator(format!(
                "operator is not norm preserving on this state (norm {})",
                to_f64(norm)
            )));
        }
        Ok(Self {
            basis: self.basis,
            amplitudes: out.unscale(norm),
            tail_mass: self.tail_mass,
        })
    }

    /// ⟨ψ|A|ψ⟩
    pub fn expectation(&self, op: &LinearOperator<T>) -> Complex<T> {
        inner(&self.amplitudes, &(op.matrix() * &self.amplitudes))
    }

    /// ⟨A²⟩ − ⟨A⟩² for a Hermitian A, with A² formed on the truncated space.
    pub fn variance(&self, op: &LinearOperator<T>) -> T {
        let a_psi = op.matrix() * &self.amplitudes;
        let second = a_psi.norm_squared();
        let first = inner(&self.amplitudes, &a_psi).re;
        second - first * first
    }

    pub fn density(&self) -> DensityOperator<T> {
        DensityOperator::from_pure(self)
    }

    /// |self⟩ ⊗ |other⟩ on the concatenated mode list (same cutoff required).
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.basis.cutoff() != other.basis.cutoff() {
            return Err(Error::InvalidArgument(
                "tensor product requires equal cutoffs".into(),
            ));
        }
        let basis = FockBasis::new(
            self.basis.n_modes() + other.basis.n_modes(),
            self.basis.cutoff(),
        )?;
        let amps = self.amplitudes.kronecker(&other.amplitudes);
        let tail = self.tail_mass + other.tail_mass;
        Ok(Self {
            basis,
            amplitudes: amps,
            tail_mass: tail,
        })
    }
}

fn check_len(basis: &FockBasis, len: usize) -> Result<()> {
    if len == basis.dim() {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected: basis.dim(),
            found: len,
        })
    }
}

/// Density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator<T: Real> {
    basis: FockBasis,
    matrix: CMatrix<T>,
}

impl<T: Real> DensityOperator<T> {
    pub fn new(basis: FockBasis, matrix: CMatrix<T>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(basis, matrix)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Checks dimensions only; the physical invariants are the caller's job.
    pub(crate) fn from_matrix_unchecked(basis: FockBasis, matrix: CMatrix<T>) -> Result<Self> {
        if matrix.nrows() != basis.dim() || matrix.ncols() != basis.dim() {
            return Err(Error::Dimension {
                expected: basis.dim(),
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { basis, matrix })
    }

    pub fn from_pure(state: &StateVector<T>) -> Self {
        Self {
            basis: state.basis,
            matrix: outer(&state.amplitudes, &state.amplitudes),
        }
    }

    pub fn maximally_mixed(basis: FockBasis) -> Self {
        let d = basis.dim();
        let w = re(T::one() / lit(d as f64));
        Self {
            basis,
            matrix: CMatrix::identity(d, d) * w,
        }
    }

    /// (1 − w)·self + w·other
    pub fn mix(&self, other: &Self, weight: T) -> Result<Self> {
        self.basis.ensure_same(&other.basis)?;
        if weight < T::zero() || weight > T::one() {
            return Err(Error::Domain {
                name: "weight",
                value: to_f64(weight),
                domain: "[0, 1]",
            });
        }
        Ok(Self {
            basis: self.basis,
            matrix: &self.matrix * re(T::one() - weight) + &other.matrix * re(weight),
        })
    }

    /// Hermitian within 1e-10, trace 1 within 1e-10, smallest eigenvalue ≥ −1e-9.
    pub fn validate(&self) -> Result<()> {
        let defect = hermiticity_defect(&self.matrix);
        if defect > tol(1e-10) {
            return Err(Error::InvalidState(format!(
                "density matrix not Hermitian (defect {:.3e})",
                to_f64(defect)
            )));
        }
        let tr = self.trace();
        if (tr - T::one()).abs() > tol(1e-10) {
            return Err(Error::InvalidState(format!(
                "density matrix trace {} differs from 1",
                to_f64(tr)
            )));
        }
        let min = self.eigen().values.first().copied().unwrap_or_else(T::zero);
        if min < -tol::<T>(1e-9) {
            return Err(Error::InvalidState(format!(
                "density matrix has negative eigenvalue {:.3e}",
                to_f64(min)
            )));
        }
        Ok(())
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn trace(&self) -> T {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> T {
        trace_product(&self.matrix, &self.matrix).re
    }

    pub fn eigen(&self) -> HermitianEigen<T> {
        HermitianEigen::new(&self.matrix)
    }

    /// Re Tr[ρA]
    pub fn expectation(&self, op: &LinearOperator<T>) -> T {
        trace_product(&self.matrix, op.matrix()).re
    }

    /// Tr[ρA²] − Tr[ρA]² for Hermitian A, A² formed on the truncated space.
    pub fn variance(&self, op: &LinearOperator<T>) -> T {
        let a2 = op.matrix() * op.matrix();
        let m = self.expectation(op);
        trace_product(&self.matrix, &a2).re - m * m
    }

    /// ⟨ψ|ρ|ψ⟩
    pub fn fidelity_with_pure(&self, state: &StateVector<T>) -> Result<T> {
        self.basis.ensure_same(&state.basis)?;
        Ok(inner(&state.amplitudes, &(&self.matrix * &state.amplitudes)).re)
    }

    /// U ρ U†
    pub fn evolve(&self, unitary: &LinearOperator<T>) -> Result<Self> {
        self.basis.ensure_same(unitary.basis())?;
        let u = unitary.matrix();
        Ok(Self {
            basis: self.basis,
            matrix: u * &self.matrix * u.adjoint(),
        })
    }

    /// Tr over `mode`.
    pub fn partial_trace(&self, mode: usize) -> Result<Self> {
        let reduced = self.basis.without_mode(mode)?;
        let levels = self.basis.levels();
        let stride = self.basis.stride(mode);
        let d = reduced.dim();
        // Index in the full basis of reduced index `r` with `k` photons in `mode`.
        let lift = |r: usize, k: usize| {
            let high = r / stride;
            let low = r % stride;
            (high * levels + k) * stride + low
        };
        let mut out = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = Complex::new(T::zero(), T::zero());
                for k in 0..levels {
                    acc += self.matrix[(lift(i, k), lift(j, k))];
                }
                out[(i, j)] = acc;
            }
        }
        Ok(Self {
            basis: reduced,
            matrix: out,
        })
    }

    /// Projects onto basis states selected by `keep`, returning the
    /// renormalized conditional state and the probability of the projection.
    pub fn project<F: Fn(usize) -> bool>(&self, keep: F) -> Result<(Self, T)> {
        let d = self.basis.dim();
        let mask: Vec<bool> = (0..d).map(keep).collect();
        let mut m = self.matrix.clone();
        for i in 0..d {
            for j in 0..d {
                if !(mask[i] && mask[j]) {
                    m[(i, j)] = Complex::new(T::zero(), T::zero());
                }
            }
        }
        let p = m.trace().re;
        if p <= T::default_epsilon() {
            return Err(Error::InvalidState("projection has zero probability".into()));
        }
        Ok((
            Self {
                basis: self.basis,
                matrix: m.unscale(p),
            },
            p,
        ))
    }

    /// Diagonal of ρ in the number basis.
    pub fn populations(&self) -> Vec<T> {
        (0..self.basis.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::operator::build_mode_operators;
    use nalgebra::dvector;

    #[test]
    fn normalization_enforced() {
        let b = FockBasis::single_mode(1);
        let v = dvector![re(1.0), re(1.0)];
        assert!(StateVector::new(b, v.clone()).is_err());
        let s = StateVector::normalized(b, v).unwrap();
        assert!((s.amplitudes().norm() - 1.0).abs() < 1e-15);
        assert!(StateVector::<f64>::normalized(b, dvector![re(0.0), re(0.0)]).is_err());
    }

    #[test]
    fn density_validation() {
        let b = FockBasis::single_mode(1);
        let bad_trace = CMatrix::<f64>::identity(2, 2);
        assert!(DensityOperator::new(b, bad_trace).is_err());
        let negative = CMatrix::from_row_slice(2, 2, &[re(1.5), re(0.0), re(0.0), re(-0.5)]);
        assert!(DensityOperator::new(b, negative).is_err());
        let non_herm = CMatrix::from_row_slice(2, 2, &[re(0.5), re(0.1), re(0.0), re(0.5)]);
        assert!(DensityOperator::new(b, non_herm).is_err());
        assert!(DensityOperator::new(b, CMatrix::identity(2, 2) * re(0.5)).is_ok());
    }

    #[test]
    fn partial_trace_of_product_state() {
        let b1 = FockBasis::single_mode(2);
        let a = StateVector::normalized(b1, dvector![re(1.0), re(0.0), re(1.0)]).unwrap();
        let c = StateVector::basis_state(b1, &[1]).unwrap();
        let ac = a.tensor(&c).unwrap();
        let rho = ac.density();
        let ra = rho.partial_trace(1).unwrap();
        let rc = rho.partial_trace(0).unwrap();
        assert!(crate::linalg::max_abs_diff(ra.matrix(), a.density().matrix()) < 1e-15);
        assert!(crate::linalg::max_abs_diff(rc.matrix(), c.density().matrix()) < 1e-15);
    }

    #[test]
    fn partial_trace_of_middle_mode() {
        let b1 = FockBasis::single_mode(1);
        let s0 = StateVector::basis_state(b1, &[1]).unwrap();
        let s1 = StateVector::normalized(b1, dvector![re(1.0), re(2.0)]).unwrap();
        let s2 = StateVector::basis_state(b1, &[0]).unwrap();
        let full = s0.tensor(&s1).unwrap().tensor(&s2).unwrap().density();
        let reduced = full.partial_trace(1).unwrap();
        let expected = s0.tensor(&s2).unwrap().density();
        assert!(crate::linalg::max_abs_diff(reduced.matrix(), expected.matrix()) < 1e-15);
    }

    #[test]
    fn mixed_variance_matches_pure_average() {
        let b = FockBasis::single_mode(6);
        let x = build_mode_operators::<f64>(&b, 0).unwrap().x;
        let s1 = StateVector::basis_state(b, &[1]).unwrap();
        let s3 = StateVector::basis_state(b, &[3]).unwrap();
        let rho = s1.density().mix(&s3.density(), 0.5).unwrap();
        // both have zero mean, so the variance is the average
        let expected = 0.5 * (s1.variance(&x) + s3.variance(&x));
        assert!((rho.variance(&x) - expected).abs() < 1e-13);
    }

    #[test]
    fn projection_probability() {
        let b = FockBasis::single_mode(2);
        let s = StateVector::normalized(b, dvector![re(1.0), re(1.0), re(0.0)]).unwrap();
        let (cond, p) = s.density().project(|i| i == 1).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!((cond.matrix()[(1, 1)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_precision_state() {
        let b = FockBasis::single_mode(3);
        let s = StateVector::<f32>::basis_state(b, &[2]).unwrap();
        let n = build_mode_operators::<f32>(&b, 0).unwrap().number;
        assert!((s.expectation(&n).re - 2.0).abs() < 1e-6);
        assert!(s.density().validate().is_ok());
    }
}
