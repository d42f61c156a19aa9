use super::basis::FockBasis;
use crate::error::{Error, Result};
use crate::linalg::{hermiticity_defect, max_abs_diff, CMatrix};
use crate::scalar::{cplx, lit, re, Real};

/// Quadrature convention constant: x̂ = √N₀(â† + â), p̂ = i√N₀(â† − â).
pub const N0: f64 = 0.5;

/// Rescales a quadrature value from one N₀ convention to another.
pub fn rescale_quadrature(value: f64, from_n0: f64, to_n0: f64) -> f64 {
    value * (to_n0 / from_n0).sqrt()
}

/// Rescales a quadrature variance from one N₀ convention to another.
pub fn rescale_quadrature_variance(variance: f64, from_n0: f64, to_n0: f64) -> f64 {
    variance * to_n0 / from_n0
}

/// Complex square matrix acting on a truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator<T: Real> {
    basis: FockBasis,
    matrix: CMatrix<T>,
}

impl<T: Real> LinearOperator<T> {
    pub fn new(basis: FockBasis, matrix: CMatrix<T>) -> Result<Self> {
        if matrix.nrows() != basis.dim() || matrix.ncols() != basis.dim() {
            return Err(Error::Dimension {
                expected: basis.dim(),
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { basis, matrix })
    }

    pub(crate) fn from_parts(basis: FockBasis, matrix: CMatrix<T>) -> Self {
        debug_assert_eq!(matrix.nrows(), basis.dim());
        Self { basis, matrix }
    }

    pub fn identity(basis: FockBasis) -> Self {
        let d = basis.dim();
        Self::from_parts(basis, CMatrix::identity(d, d))
    }

    pub fn zeros(basis: FockBasis) -> Self {
        let d = basis.dim();
        Self::from_parts(basis, CMatrix::zeros(d, d))
    }

    /// Diagonal operator Σ f(index)|index⟩⟨index|.
    pub fn diagonal<F: Fn(usize) -> nalgebra::Complex<T>>(basis: FockBasis, f: F) -> Self {
        let d = basis.dim();
        let mut m = CMatrix::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = f(i);
        }
        Self::from_parts(basis, m)
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self::from_parts(self.basis, self.matrix.adjoint())
    }

    /// Operator product `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.basis.ensure_same(&other.basis)?;
        Ok(Self::from_parts(self.basis, &self.matrix * &other.matrix))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.basis.ensure_same(&other.basis)?;
        Ok(Self::from_parts(self.basis, &self.matrix + &other.matrix))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.basis.ensure_same(&other.basis)?;
        Ok(Self::from_parts(self.basis, &self.matrix - &other.matrix))
    }

    pub fn scale(&self, factor: nalgebra::Complex<T>) -> Self {
        Self::from_parts(self.basis, &self.matrix * factor)
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.basis.ensure_same(&other.basis)?;
        Ok(Self::from_parts(
            self.basis,
            &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        ))
    }

    pub fn is_hermitian(&self, tolerance: T) -> bool {
        hermiticity_defect(&self.matrix) <= tolerance
    }

    pub fn is_unitary(&self, tolerance: T) -> bool {
        let d = self.basis.dim();
        max_abs_diff(&(self.matrix.adjoint() * &self.matrix), &CMatrix::identity(d, d)) <= tolerance
    }

    /// Restricts the matrix to basis states whose total photon number is at
    /// most `max_total`; returns the kept indices and the sub-block.
    pub fn sub_block_by_total_photons(&self, max_total: usize) -> (Vec<usize>, CMatrix<T>) {
        let keep: Vec<usize> = (0..self.basis.dim())
            .filter(|&i| self.basis.total_photons(i) <= max_total)
            .collect();
        let m = CMatrix::from_fn(keep.len(), keep.len(), |r, c| self.matrix[(keep[r], keep[c])]);
        (keep, m)
    }
}

/// Ladder and quadrature operators of one mode.
#[derive(Debug, Clone)]
pub struct ModeOperators<T: Real> {
    pub annihilation: LinearOperator<T>,
    pub creation: LinearOperator<T>,
    pub number: LinearOperator<T>,
    pub x: LinearOperator<T>,
    pub p: LinearOperator<T>,
}

impl<T: Real> ModeOperators<T> {
    /// Rotated quadrature q̂_ϑ = cos ϑ x̂ + sin ϑ p̂.
    pub fn quadrature(&self, theta: T) -> LinearOperator<T> {
        let m = self.x.matrix() * re(theta.cos()) + self.p.matrix() * re(theta.sin());
        LinearOperator::from_parts(*self.x.basis(), m)
    }
}

/// Builds â, â†, n̂, x̂, p̂ for `mode`, truncated at the basis cutoff.
pub fn build_mode_operators<T: Real>(basis: &FockBasis, mode: usize) -> Result<ModeOperators<T>> {
    basis.check_mode(mode)?;
    let d = basis.dim();
    let stride = basis.stride(mode);
    let mut a = CMatrix::<T>::zeros(d, d);
    for i in 0..d {
        let n = basis.occupation_of(i, mode);
        if n > 0 {
            a[(i - stride, i)] = re(lit::<T>(n as f64).sqrt());
        }
    }
    let ad = a.adjoint();
    let number = LinearOperator::diagonal(*basis, |i| re(lit(basis.occupation_of(i, mode) as f64)));
    let s = lit::<T>(N0).sqrt();
    let x = (&ad + &a) * re(s);
    let p = (&ad - &a) * cplx(T::zero(), s);
    Ok(ModeOperators {
        annihilation: LinearOperator::from_parts(*basis, a),
        creation: LinearOperator::from_parts(*basis, ad),
        number,
        x: LinearOperator::from_parts(*basis, x),
        p: LinearOperator::from_parts(*basis, p),
    })
}

/// Total photon number operator Σ n̂_m.
pub fn total_number<T: Real>(basis: &FockBasis) -> LinearOperator<T> {
    LinearOperator::diagonal(*basis, |i| re(lit(basis.total_photons(i) as f64)))
}

/// Weighted number operator Σ w_m n̂_m (phase generators of linear interferometers).
pub fn weighted_number<T: Real>(basis: &FockBasis, weights: &[f64]) -> Result<LinearOperator<T>> {
    if weights.len() != basis.n_modes() {
        return Err(Error::Dimension {
            expected: basis.n_modes(),
            found: weights.len(),
        });
    }
    Ok(LinearOperator::diagonal(*basis, |i| {
        let v: f64 = weights
            .iter()
            .enumerate()
            .map(|(m, w)| w * basis.occupation_of(i, m) as f64)
            .sum();
        re(lit(v))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::state::StateVector;

    #[test]
    fn number_operator_single_level() {
        let b = FockBasis::single_mode(1);
        let ops = build_mode_operators::<f64>(&b, 0).unwrap();
        assert_eq!(ops.number.matrix()[(0, 0)].re, 0.0);
        assert_eq!(ops.number.matrix()[(1, 1)].re, 1.0);
        assert_eq!(ops.number.matrix()[(0, 1)].re, 0.0);
    }

    #[test]
    fn ladder_matrix_elements() {
        let b = FockBasis::single_mode(5);
        let ops = build_mode_operators::<f64>(&b, 0).unwrap();
        for n in 1..=5 {
            assert!((ops.annihilation.matrix()[(n - 1, n)].re - (n as f64).sqrt()).abs() < 1e-15);
            assert!((ops.creation.matrix()[(n, n - 1)].re - (n as f64).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn canonical_commutators_below_cutoff() {
        let b = FockBasis::two_mode(6);
        for mode in 0..2 {
            let ops = build_mode_operators::<f64>(&b, mode).unwrap();
            let comm = ops.annihilation.commutator(&ops.creation).unwrap();
            let xp = ops.x.commutator(&ops.p).unwrap();
            for i in 0..b.dim() {
                if b.occupation_of(i, mode) == b.cutoff() {
                    continue;
                }
                for j in 0..b.dim() {
                    if b.occupation_of(j, mode) == b.cutoff() {
                        continue;
                    }
                    let delta = if i == j { 1.0 } else { 0.0 };
                    assert!((comm.matrix()[(i, j)] - re(delta)).norm() < 1e-12);
                    // [x, p] = 2 i N0
                    assert!((xp.matrix()[(i, j)] - cplx(0.0, 2.0 * N0 * delta)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn fock_states_have_zero_mean_quadratures() {
        let b = FockBasis::single_mode(12);
        let ops = build_mode_operators::<f64>(&b, 0).unwrap();
        for n in 0..=12 {
            let s = StateVector::basis_state(b, &[n]).unwrap();
            assert!(s.expectation(&ops.x).norm() < 1e-15);
            assert!(s.expectation(&ops.p).norm() < 1e-15);
        }
    }

    #[test]
    fn fock_quadrature_variance() {
        let b = FockBasis::single_mode(12);
        let ops = build_mode_operators::<f64>(&b, 0).unwrap();
        for n in 0..=10 {
            let s = StateVector::basis_state(b, &[n]).unwrap();
            let expected = N0 * (2.0 * n as f64 + 1.0);
            assert!((s.variance(&ops.x) - expected).abs() < 1e-12, "n = {n}");
            assert!((s.variance(&ops.p) - expected).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn mode_out_of_range() {
        let b = FockBasis::single_mode(3);
        assert!(build_mode_operators::<f64>(&b, 1).is_err());
    }

    #[test]
    fn n0_conversions_are_scalings() {
        assert!((rescale_quadrature(1.0, 0.5, 1.0) - 2f64.sqrt()).abs() < 1e-15);
        assert!((rescale_quadrature_variance(0.5, 0.5, 0.25) - 0.25).abs() < 1e-15);
    }
}
