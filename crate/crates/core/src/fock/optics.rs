//! Passive optical elements and the photon-loss channel.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::basis::FockBasis;
use super::operator::{LinearOperator, N0};
use super::state::DensityOperator;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianEigen};
use crate::scalar::{cplx, lit, re, Real};

fn check_unit_interval(name: &'static str, value: f64) -> Result<()> {
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

/// Beam splitter with real transmissivity `t` and reflectivity r = √(1 − t²)
/// acting on `modes = (m1, m2)`.
///
/// U = exp(θ(â₁†â₂ − â₂†â₁)) with cos θ = t, so that U†â₁U = t â₁ + r â₂ and
/// U†â₂U = t â₂ − r â₁. The generator conserves the photon number of the
/// pair, so U is exponentiated exactly block by block and is unitary on the
/// whole truncated space.
pub fn beam_splitter<T: Real>(basis: &FockBasis, t: f64, modes: (usize, usize)) -> Result<LinearOperator<T>> {
    check_unit_interval("t", t)?;
    let (m1, m2) = modes;
    basis.check_mode(m1)?;
    basis.check_mode(m2)?;
    if m1 == m2 {
        return Err(Error::InvalidArgument("beam splitter needs two distinct modes".into()));
    }
    let theta = t.clamp(-1.0, 1.0).acos();
    let (s1, s2) = (basis.stride(m1), basis.stride(m2));

    // Group indices that share the pair's total photon number and all other occupations.
    let mut blocks: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for i in 0..basis.dim() {
        let n1 = basis.occupation_of(i, m1);
        let n2 = basis.occupation_of(i, m2);
        let rest = i - n1 * s1 - n2 * s2;
        blocks.entry((n1 + n2, rest)).or_default().push(i);
    }

    let d = basis.dim();
    let mut u = CMatrix::<T>::zeros(d, d);
    for members in blocks.values() {
        let k = members.len();
        if k == 1 {
            u[(members[0], members[0])] = re(T::one());
            continue;
        }
        // Hermitian A = θ·i(â₁†â₂ − â₂†â₁) restricted to the block; U = e^{-iA}.
        let mut a = CMatrix::<f64>::zeros(k, k);
        for (col, &j) in members.iter().enumerate() {
            let n1 = basis.occupation_of(j, m1);
            let n2 = basis.occupation_of(j, m2);
            // â₁†â₂|n1,n2⟩ = √((n1+1) n2)|n1+1,n2−1⟩
            if n2 > 0 && n1 < basis.cutoff() {
                let target = j + s1 - s2;
                let row = members.iter().position(|&x| x == target).expect("block closed");
                let amp = ((n1 + 1) as f64 * n2 as f64).sqrt() * theta;
                a[(row, col)] += Complex64::new(0.0, amp);
            }
            // −â₂†â₁|n1,n2⟩ = −√(n1 (n2+1))|n1−1,n2+1⟩
            if n1 > 0 && n2 < basis.cutoff() {
                let target = j - s1 + s2;
                let row = members.iter().position(|&x| x == target).expect("block closed");
                let amp = (n1 as f64 * (n2 + 1) as f64).sqrt() * theta;
                a[(row, col)] -= Complex64::new(0.0, amp);
            }
        }
        let block = HermitianEigen::new(&a).exp_minus_i();
        for (r, &i) in members.iter().enumerate() {
            for (c, &j) in members.iter().enumerate() {
                let z = block[(r, c)];
                u[(i, j)] = cplx(lit(z.re), lit(z.im));
            }
        }
    }
    Ok(LinearOperator::from_parts(*basis, u))
}

/// Phase shift e^{−i n̂ φ} on `mode`.
pub fn phase_shifter<T: Real>(basis: &FockBasis, phi: f64, mode: usize) -> Result<LinearOperator<T>> {
    basis.check_mode(mode)?;
    Ok(LinearOperator::diagonal(*basis, |i| {
        let n = basis.occupation_of(i, mode) as f64;
        cplx(lit((n * phi).cos()), lit(-(n * phi).sin()))
    }))
}

/// Symmetric Mach-Zehnder: balanced splitter, ±φ/2 on the two arms, inverse splitter.
pub fn symmetric_mzi<T: Real>(basis: &FockBasis, phi: f64, modes: (usize, usize)) -> Result<LinearOperator<T>> {
    let bs = beam_splitter::<T>(basis, std::f64::consts::FRAC_1_SQRT_2, modes)?;
    let p1 = phase_shifter::<T>(basis, phi / 2.0, modes.0)?;
    let p2 = phase_shifter::<T>(basis, -phi / 2.0, modes.1)?;
    bs.adjoint().compose(&p1)?.compose(&p2)?.compose(&bs)
}

/// Embeds a single-mode matrix as I ⊗ m ⊗ I acting on `mode`.
pub fn embed_single_mode<T: Real>(basis: &FockBasis, mode: usize, m: &CMatrix<T>) -> Result<LinearOperator<T>> {
    basis.check_mode(mode)?;
    if m.nrows() != basis.levels() || m.ncols() != basis.levels() {
        return Err(Error::Dimension {
            expected: basis.levels(),
            found: m.nrows(),
        });
    }
    let before = basis.levels().pow(mode as u32);
    let after = basis.stride(mode);
    let full = CMatrix::<T>::identity(before, before)
        .kronecker(m)
        .kronecker(&CMatrix::<T>::identity(after, after));
    Ok(LinearOperator::from_parts(*basis, full))
}

/// Displacement D(α) = exp(α â† − α* â) on `mode`, exponentiated on the
/// truncated space (exactly unitary, accurate while |α|² ≪ cutoff).
pub fn displacement<T: Real>(basis: &FockBasis, alpha: Complex64, mode: usize) -> Result<LinearOperator<T>> {
    basis.check_mode(mode)?;
    let levels = basis.levels();
    // Hermitian A = i(α â† − α* â), D = e^{−iA}
    let mut a = CMatrix::<f64>::zeros(levels, levels);
    for n in 1..levels {
        let s = (n as f64).sqrt();
        a[(n, n - 1)] = Complex64::i() * alpha * s;
        a[(n - 1, n)] = -Complex64::i() * alpha.conj() * s;
    }
    let single = HermitianEigen::new(&a).exp_minus_i();
    let single = single.map(|z| cplx(lit::<T>(z.re), lit::<T>(z.im)));
    embed_single_mode(basis, mode, &single)
}

/// Squeeze operator S(ζ) = exp(½(ζ* â² − ζ â†²)), ζ = s·e^{iθ}, on `mode`,
/// exponentiated on the truncated space. θ = 0 squeezes x̂.
pub fn squeeze_operator<T: Real>(basis: &FockBasis, s: f64, theta: f64, mode: usize) -> Result<LinearOperator<T>> {
    basis.check_mode(mode)?;
    let levels = basis.levels();
    let zeta = Complex64::from_polar(s, theta);
    // Hermitian A = i·½(ζ* â² − ζ â†²), S = e^{−iA}
    let mut a = CMatrix::<f64>::zeros(levels, levels);
    for n in 2..levels {
        let c = ((n * (n - 1)) as f64).sqrt() * 0.5;
        a[(n - 2, n)] = Complex64::i() * zeta.conj() * c;
        a[(n, n - 2)] = -Complex64::i() * zeta * c;
    }
    let single = HermitianEigen::new(&a).exp_minus_i();
    let single = single.map(|z| cplx(lit::<T>(z.re), lit::<T>(z.im)));
    embed_single_mode(basis, mode, &single)
}

/// Displacement that moves the quadrature means by (x0, p0).
pub fn quadrature_displacement<T: Real>(basis: &FockBasis, x0: f64, p0: f64, mode: usize) -> Result<LinearOperator<T>> {
    let scale = 2.0 * N0.sqrt();
    displacement(basis, Complex64::new(x0 / scale, p0 / scale), mode)
}

/// Photon loss of transmissivity `eta` on `mode`.
///
/// Equivalent to mixing the mode with a vacuum ancilla on a beam splitter of
/// transmissivity √η and tracing the ancilla out; applied here through the
/// Kraus operators E_k = Σₙ √(C(n,k) η^{n−k} (1−η)^k) |n−k⟩⟨n|.
pub fn loss_channel<T: Real>(rho: &DensityOperator<T>, eta: f64, mode: usize) -> Result<DensityOperator<T>> {
    check_unit_interval("eta", eta)?;
    let basis = *rho.basis();
    basis.check_mode(mode)?;
    if eta == 1.0 {
        return Ok(rho.clone());
    }
    let levels = basis.levels();
    // coef[n][k] = √(C(n,k) η^{n−k} (1−η)^k)
    let mut coef = vec![vec![0.0f64; levels]; levels];
    for (n, row) in coef.iter_mut().enumerate() {
        let mut binom = 1.0f64;
        for (k, c) in row.iter_mut().enumerate().take(n + 1) {
            if k > 0 {
                binom = binom * (n - k + 1) as f64 / k as f64;
            }
            *c = (binom * eta.powi((n - k) as i32) * (1.0 - eta).powi(k as i32)).sqrt();
        }
    }
    let stride = basis.stride(mode);
    let d = basis.dim();
    let src = rho.matrix();
    let mut out = CMatrix::<T>::zeros(d, d);
    for i in 0..d {
        let n = basis.occupation_of(i, mode);
        for j in 0..d {
            let m = basis.occupation_of(j, mode);
            let z = src[(i, j)];
            for k in 0..=n.min(m) {
                let w = coef[n][k] * coef[m][k];
                if w != 0.0 {
                    out[(i - k * stride, j - k * stride)] += z * re(lit::<T>(w));
                }
            }
        }
    }
    DensityOperator::from_matrix_unchecked(basis, out)
}
