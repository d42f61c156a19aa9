//! Dense complex linear algebra on truncated Hilbert spaces.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex;

use crate::scalar::{cplx, imag_unit, lit, re, Real};

pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn new(m: &CMatrix<T>) -> Self {
        let herm = hermitian_part(m);
        let eig = herm.clone().symmetric_eigen();
        // nalgebra's QR iteration occasionally returns NaN on very sparse input
        let finite = eig.eigenvalues.iter().all(|v| v.is_finite())
            && eig.eigenvectors.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        let (raw, vecs) = if finite {
            (eig.eigenvalues.iter().cloned().collect::<Vec<T>>(), eig.eigenvectors)
        } else {
            jacobi_eigen(herm)
        };
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by(|&a, &b| raw[a].partial_cmp(&raw[b]).expect("finite eigenvalues"));
        let values = order.iter().map(|&i| raw[i]).collect();
        let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, c| vecs[(r, order[c])]);
        Self { values, vectors }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    /// Transforms `m` into the eigenbasis: V† m V.
    pub fn to_eigenbasis(&self, m: &CMatrix<T>) -> CMatrix<T> {
        self.vectors.adjoint() * m * &self.vectors
    }

    /// Transforms `m` back from the eigenbasis: V m V†.
    pub fn from_eigenbasis(&self, m: &CMatrix<T>) -> CMatrix<T> {
        &self.vectors * m * self.vectors.adjoint()
    }

    /// f(A) = V diag(f(λ)) V†.
    pub fn apply<F: Fn(T) -> Complex<T>>(&self, f: F) -> CMatrix<T> {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for c in 0..n {
            let fc = f(self.values[c]);
            for r in 0..n {
                scaled[(r, c)] *= fc;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// e^{-iA} for the decomposed Hermitian A.
    pub fn exp_minus_i(&self) -> CMatrix<T> {
        self.apply(|l| cplx(l.cos(), -l.sin()))
    }

    /// Fréchet derivative of X ↦ e^{-iX} at the decomposed A, in direction `e`.
    pub fn exp_minus_i_derivative(&self, e: &CMatrix<T>) -> CMatrix<T> {
        let n = self.dim();
        let e_eig = self.to_eigenbasis(e);
        let half: T = lit(0.5);
        let k = CMatrix::from_fn(n, n, |j, l| {
            let (a, b) = (self.values[j], self.values[l]);
            let mid = (a + b) * half;
            let d = (a - b) * half;
            let sinc = if d.abs() < lit(1e-8) {
                T::one() - d * d / lit(6.0)
            } else {
                d.sin() / d
            };
            // (e^{-ia} - e^{-ib}) / (a - b) = -i e^{-i mid} sinc(d)
            -imag_unit::<T>() * cplx(mid.cos(), -mid.sin()) * re(sinc)
        });
        self.from_eigenbasis(&e_eig.component_mul(&k))
    }
}

/// Cyclic complex Jacobi: slow but unconditionally stable. Unsorted
/// eigenvalues and the matching eigenvector columns.
fn jacobi_eigen<T: Real>(mut a: CMatrix<T>) -> (Vec<T>, CMatrix<T>) {
    let n = a.nrows();
    let mut v = CMatrix::<T>::identity(n, n);
    let scale = a.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
    let eps = T::default_epsilon();
    for _ in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off <= eps * eps * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm_sqr().sqrt();
                if r == T::zero() {
                    continue;
                }
                // unit phase e^{-iφ} that makes the (p, q) entry real, then a real rotation
                let ph = Complex::new(apq.re / r, -apq.im / r);
                let theta = (r + r).atan2(a[(q, q)].re - a[(p, p)].re) * lit(0.5);
                let (c, s) = (re(theta.cos()), re(theta.sin()));
                for k in 0..n {
                    let (x, y) = (a[(k, p)], a[(k, q)] * ph);
                    a[(k, p)] = c * x - s * y;
                    a[(k, q)] = s * x + c * y;
                    let (x, y) = (v[(k, p)], v[(k, q)] * ph);
                    v[(k, p)] = c * x - s * y;
                    v[(k, q)] = s * x + c * y;
                }
                let phc = ph.conj();
                for k in 0..n {
                    let (x, y) = (a[(p, k)], a[(q, k)] * phc);
                    a[(p, k)] = c * x - s * y;
                    a[(q, k)] = s * x + c * y;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)].re).collect(), v)
}

pub fn hermitian_part<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    (m + m.adjoint()) * re(lit::<T>(0.5))
}

pub fn hermiticity_defect<T: Real>(m: &CMatrix<T>) -> T {
    (m - m.adjoint()).norm()
}

pub fn commutator<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a * b - b * a
}

pub fn anticommutator<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a * b + b * a
}

/// Tr[A B] without forming the product.
pub fn trace_product<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Complex<T> {
    let n = a.nrows();
    let mut acc = Complex::new(T::zero(), T::zero());
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// ⟨u|v⟩ with the conjugate on the left argument.
pub fn inner<T: Real>(u: &CVector<T>, v: &CVector<T>) -> Complex<T> {
    u.dotc(v)
}

/// |u⟩⟨v|
pub fn outer<T: Real>(u: &CVector<T>, v: &CVector<T>) -> CMatrix<T> {
    u * v.adjoint()
}

/// Sum of singular values of a real matrix.
pub fn trace_norm<T: Real>(m: &DMatrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(T::zero(), |acc, &s| acc + s)
}

/// Elementwise real/imaginary split of a complex matrix.
pub fn real_part<T: Real>(m: &DMatrix<Complex<T>>) -> DMatrix<T> {
    m.map(|z| z.re)
}

pub fn imag_part<T: Real>(m: &DMatrix<Complex<T>>) -> DMatrix<T> {
    m.map(|z| z.im)
}

pub fn to_complex<T: Real>(m: &DMatrix<T>) -> DMatrix<Complex<T>> {
    m.map(re)
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (x, y)| acc.max((*x - *y).modulus()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix<f64> {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let a = CMatrix::<f64>::from_fn(n, n, |_, _| Complex::new(next(), next()));
        hermitian_part(&a)
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let a = random_hermitian(5, 3);
        let eig = HermitianEigen::new(&a);
        let back = eig.apply(re);
        assert!(max_abs_diff(&a, &back) < 1e-12);
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn jacobi_matches_qr_eigen() {
        for (n, seed) in [(2, 1), (5, 2), (9, 3)] {
            let a = random_hermitian(n, seed);
            let (vals, vecs) = jacobi_eigen(a.clone());
            let d = CMatrix::from_diagonal(&DVector::from_iterator(n, vals.iter().map(|&x| re(x))));
            assert!(max_abs_diff(&(&vecs * d * vecs.adjoint()), &a) < 1e-12);
            assert!(max_abs_diff(&(vecs.adjoint() * &vecs), &CMatrix::identity(n, n)) < 1e-12);
            let mut sorted = vals.clone();
            sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for (x, y) in sorted.iter().zip(&HermitianEigen::new(&a).values) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sparse_rank_one_density_decomposes() {
        // two-mode N = 4 state under loss whose QR decomposition returned NaN
        let beta = [0.7070387060981285, 2.2393488748113355e-5, 0.0, 1.0529330437316251e-5, 0.7071748492888794];
        let basis = crate::fock::FockBasis::two_mode(4);
        let amps: Vec<Complex<f64>> = beta.iter().map(|&b| Complex::new(b, 0.0)).collect();
        let psi = crate::fock::fixed_n_state::<f64>(basis, &amps).unwrap();
        let rho = psi.density();
        let eig = HermitianEigen::new(rho.matrix());
        assert!(eig.values.iter().all(|v| v.is_finite()));
        assert!(max_abs_diff(&eig.apply(re), rho.matrix()) < 1e-12);
        assert!((eig.values[eig.dim() - 1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exp_minus_i_is_unitary() {
        let a = random_hermitian(6, 11);
        let u = HermitianEigen::new(&a).exp_minus_i();
        let id = CMatrix::<f64>::identity(6, 6);
        assert!(max_abs_diff(&(u.adjoint() * &u), &id) < 1e-12);
    }

    #[test]
    fn exp_derivative_matches_finite_difference() {
        let a = random_hermitian(4, 5);
        let e = random_hermitian(4, 9);
        let analytic = HermitianEigen::new(&a).exp_minus_i_derivative(&e);
        let h = 1e-6;
        let plus = HermitianEigen::new(&(&a + &e * re(h))).exp_minus_i();
        let minus = HermitianEigen::new(&(&a - &e * re(h))).exp_minus_i();
        let fd = (plus - minus) * re(0.5 / h);
        assert!(max_abs_diff(&analytic, &fd) < 1e-8);
    }

    #[test]
    fn trace_norm_of_rotation_generator() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -0.25, 0.25, 0.0]);
        assert!((trace_norm(&m) - 0.5).abs() < 1e-15);
    }
}
