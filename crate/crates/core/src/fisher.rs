//! Classical and quantum Fisher information, logarithmic derivatives and
//! the scalar bounds built from them.

use nalgebra::{ComplexField, DMatrix};
use num_complex::{Complex, Complex64};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{DensityOperator, LinearOperator, Povm, StateVector};
use crate::linalg::{imag_part, inner, real_part, trace_norm, trace_product, CMatrix, CVector, HermitianEigen};
use crate::scalar::{cplx, imag_unit, lit, re, to_f64, tol, Real};
use crate::statmodel::{ParamPoint, ParametricModel};

/// Probabilities below this count as zero.
pub const P_ZERO: f64 = 1e-12;
/// Derivatives of zero-probability outcomes below this are harmless.
pub const DP_ZERO: f64 = 1e-9;
/// Relative eigenvalue floor for SLD division and RLD inversion.
pub const SUPPORT_EPS: f64 = 1e-10;
/// SLD defining-equation residual above which the solution is rejected.
pub const SLD_RESIDUAL_LIMIT: f64 = 1e-7;

/// Classical Fisher information matrix with divergence bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalFim {
    /// Σ_x ∂_h p ∂_k p / p; entries touched by a divergent outcome are +∞.
    pub matrix: DMatrix<f64>,
    /// Outcomes with p ≈ 0 but ∂p ≉ 0.
    pub divergent: Vec<usize>,
}

impl ClassicalFim {
    pub fn is_divergent(&self) -> bool {
        !self.divergent.is_empty()
    }
}

fn check_probs(probs: &[f64]) -> Result<()> {
    if probs.iter().any(|p| !p.is_finite() || *p < -P_ZERO) {
        return Err(Error::InvalidDistribution("negative or non-finite probability".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
    }
    Ok(())
}

/// F_{hk} = Σ_x ∂_h p(x) ∂_k p(x) / p(x) with `jac[h][x] = ∂p(x)/∂φ_h`.
///
/// Outcomes with p < 1e-12 are skipped when every |∂p| < 1e-9; otherwise the
/// information diverges and the affected entries are set to +∞.
pub fn classical_fim(probs: &[f64], jac: &[Vec<f64>]) -> Result<ClassicalFim> {
    check_probs(probs)?;
    let n = jac.len();
    for row in jac {
        if row.len() != probs.len() {
            return Err(Error::Dimension {
                expected: probs.len(),
                found: row.len(),
            });
        }
    }
    let mut f = DMatrix::<f64>::zeros(n, n);
    let mut divergent = Vec::new();
    let mut diverging_params = vec![false; n];
    for (x, &p) in probs.iter().enumerate() {
        if p < P_ZERO {
            let mut bad = false;
            for h in 0..n {
                if jac[h][x].abs() >= DP_ZERO {
                    diverging_params[h] = true;
                    bad = true;
                }
            }
            if bad {
                divergent.push(x);
            }
            continue;
        }
        for h in 0..n {
            for k in 0..n {
                f[(h, k)] += jac[h][x] * jac[k][x] / p;
            }
        }
    }
    for h in 0..n {
        if diverging_params[h] {
            f[(h, h)] = f64::INFINITY;
        }
    }
    Ok(ClassicalFim { matrix: f, divergent })
}

/// Scalar Fisher information Σ_x (∂p)²/p; +∞ when divergent.
pub fn classical_fi(probs: &[f64], dprobs: &[f64]) -> Result<f64> {
    Ok(classical_fim(probs, &[dprobs.to_vec()])?.matrix[(0, 0)])
}

/// Solves the SLD equation (Lρ + ρL)/2 = ∂ρ for several derivatives of one ρ.
#[derive(Debug, Clone)]
pub struct SldSolver<T: Real> {
    rho: CMatrix<T>,
    eig: HermitianEigen<T>,
}

impl<T: Real> SldSolver<T> {
    pub fn new(rho: &DensityOperator<T>) -> Self {
        Self {
            rho: rho.matrix().clone(),
            eig: rho.eigen(),
        }
    }

    pub fn eigen(&self) -> &HermitianEigen<T> {
        &self.eig
    }

    /// L in the number basis and the Frobenius residual of the defining equation.
    pub fn solve(&self, drho: &CMatrix<T>) -> Result<(CMatrix<T>, T)> {
        let n = self.eig.dim();
        if drho.nrows() != n || drho.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                found: drho.nrows(),
            });
        }
        let lmax = self.eig.max_abs();
        let floor = lmax * lit(SUPPORT_EPS);
        let d = self.eig.to_eigenbasis(drho);
        let two: T = lit(2.0);
        let l_eig = CMatrix::from_fn(n, n, |i, j| {
            let s = self.eig.values[i] + self.eig.values[j];
            if s > floor {
                d[(i, j)] * re(two / s)
            } else {
                Complex::new(T::zero(), T::zero())
            }
        });
        let l = crate::linalg::hermitian_part(&self.eig.from_eigenbasis(&l_eig));
        let half: T = lit(0.5);
        let lhs = (&l * &self.rho + &self.rho * &l) * re(half);
        let residual = (lhs - drho).norm();
        let limit = tol::<T>(SLD_RESIDUAL_LIMIT) * drho.norm().max(T::one());
        if residual > limit {
            return Err(Error::SldResidual {
                residual: to_f64(residual),
                limit: to_f64(limit),
            });
        }
        Ok((l, residual))
    }
}

/// Symmetric logarithmic derivative of ρ in direction ∂ρ.
pub fn sld<T: Real>(rho: &DensityOperator<T>, drho: &CMatrix<T>) -> Result<CMatrix<T>> {
    Ok(SldSolver::new(rho).solve(drho)?.0)
}

/// H = Tr[ρL²].
pub fn qfi<T: Real>(rho: &DensityOperator<T>, drho: &CMatrix<T>) -> Result<T> {
    let l = sld(rho, drho)?;
    Ok(trace_product(&(rho.matrix() * &l), &l).re)
}

/// 4(⟨∂ψ|∂ψ⟩ − |⟨ψ|∂ψ⟩|²), which equals 4[⟨∂ψ|∂ψ⟩ + ⟨∂ψ|ψ⟩²] for a
/// normalized family (⟨ψ|∂ψ⟩ is then imaginary) and is insensitive to the
/// global-phase gauge.
pub fn qfi_pure<T: Real>(psi: &StateVector<T>, dpsi: &CVector<T>) -> Result<T> {
    if dpsi.len() != psi.amplitudes().len() {
        return Err(Error::Dimension {
            expected: psi.amplitudes().len(),
            found: dpsi.len(),
        });
    }
    let overlap = inner(psi.amplitudes(), dpsi);
    Ok(lit::<T>(4.0) * (dpsi.norm_squared() - overlap.modulus_squared()))
}

/// 4Δ²Ĝ for |ψ_φ⟩ = e^{−iφĜ}|ψ⟩.
pub fn qfi_generator<T: Real>(psi: &StateVector<T>, g: &LinearOperator<T>) -> Result<T> {
    psi.basis().ensure_same(g.basis())?;
    Ok(lit::<T>(4.0) * psi.variance(g))
}

/// SLD quantum Fisher information matrix and weak commutators.
#[derive(Debug, Clone)]
pub struct Qfim<T: Real> {
    /// H_{hk} = ½Tr[ρ{L_h, L_k}].
    pub h: DMatrix<T>,
    /// D_{hk} = (i/2)Tr[ρ[L_h, L_k]] = −Im Tr[ρL_hL_k], a real antisymmetric matrix.
    pub d_raw: DMatrix<T>,
    pub slds: Vec<CMatrix<T>>,
    pub max_residual: T,
}

impl<T: Real> Qfim<T> {
    /// Weak commutators in the printed convention D = i·D_raw, the form for
    /// which J⁻¹ = H⁻¹ + H⁻¹DH⁻¹ holds.
    pub fn d(&self) -> DMatrix<Complex<T>> {
        self.d_raw.map(|v| imag_unit::<T>() * re(v))
    }

    /// True when all weak commutators vanish within `tolerance`.
    pub fn compatible(&self, tolerance: T) -> bool {
        self.d_raw.iter().all(|v| v.abs() <= tolerance)
    }
}

pub fn qfim<T: Real>(rho: &DensityOperator<T>, drhos: &[CMatrix<T>]) -> Result<Qfim<T>> {
    let solver = SldSolver::new(rho);
    let mut slds = Vec::with_capacity(drhos.len());
    let mut max_residual = T::zero();
    for dr in drhos {
        let (l, r) = solver.solve(dr)?;
        max_residual = max_residual.max(r);
        slds.push(l);
    }
    let n = drhos.len();
    let rl: Vec<CMatrix<T>> = slds.iter().map(|l| rho.matrix() * l).collect();
    let mut h = DMatrix::<T>::zeros(n, n);
    let mut d_raw = DMatrix::<T>::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            // Tr[ρ L_a L_b]
            let z = trace_product(&rl[a], &slds[b]);
            h[(a, b)] = z.re;
            h[(b, a)] = z.re;
            if a != b {
                d_raw[(a, b)] = -z.im;
                d_raw[(b, a)] = z.im;
            }
        }
    }
    Ok(Qfim {
        h,
        d_raw,
        slds,
        max_residual,
    })
}

/// Right logarithmic derivatives R_h = ρ⁻¹∂ρ_h and J_{hk} = Tr[R_h†ρR_k].
#[derive(Debug, Clone)]
pub struct Rld<T: Real> {
    pub j: DMatrix<Complex<T>>,
    pub rlds: Vec<CMatrix<T>>,
    pub max_residual: T,
}

pub fn rld_fim<T: Real>(rho: &DensityOperator<T>, drhos: &[CMatrix<T>]) -> Result<Rld<T>> {
    let eig = rho.eigen();
    let lmax = eig.max_abs();
    let lmin = eig.values[0];
    if lmin <= lmax * lit(SUPPORT_EPS) {
        return Err(Error::RankDeficient {
            min_eigenvalue: to_f64(lmin),
        });
    }
    let inv = eig.apply(|l| re(T::one() / l));
    let rlds: Vec<CMatrix<T>> = drhos.iter().map(|d| &inv * d).collect();
    let mut max_residual = T::zero();
    for (r, d) in rlds.iter().zip(drhos) {
        max_residual = max_residual.max((rho.matrix() * r - d).norm());
    }
    let n = drhos.len();
    let j = DMatrix::from_fn(n, n, |a, b| {
        trace_product(&(rlds[a].adjoint() * rho.matrix()), &rlds[b])
    });
    Ok(Rld { j, rlds, max_residual })
}

/// Symmetric positive-definite inverse; errors when `m` is numerically singular.
pub fn spd_inverse<T: Real>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    let sym = (m + m.transpose()) * lit::<T>(0.5);
    let eig = sym.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    if max == T::zero() || eig.eigenvalues.iter().any(|&v| v.abs() <= max * lit(1e-12)) {
        return Err(Error::Singular);
    }
    sym.try_inverse().ok_or(Error::Singular)
}

/// Fujiwara's RLD inverse for D-invariant pure models: J⁻¹ = H⁻¹ + H⁻¹DH⁻¹,
/// with D in the printed convention (see [`Qfim::d`]).
pub fn rld_pure_d_invariant<T: Real>(h: &DMatrix<T>, d: &DMatrix<Complex<T>>) -> Result<DMatrix<Complex<T>>> {
    let hinv = spd_inverse(h)?.map(re);
    if d.shape() != hinv.shape() {
        return Err(Error::Dimension {
            expected: hinv.nrows(),
            found: d.nrows(),
        });
    }
    Ok(&hinv + &hinv * d * &hinv)
}

/// Residual of the D-invariance condition: how far 𝒟(L_h) falls outside the
/// real span of the SLDs, relative to ‖𝒟(L_h)‖, maximised over h.
///
/// 𝒟 is fixed by ρX − Xρ = i(ρ𝒟(X) + 𝒟(X)ρ); in the eigenbasis of ρ,
/// 𝒟(X)_{ij} = −i(λᵢ−λⱼ)/(λᵢ+λⱼ) X_{ij} on the support.
pub fn d_invariance_defect<T: Real>(rho: &DensityOperator<T>, slds: &[CMatrix<T>]) -> Result<T> {
    let eig = rho.eigen();
    let n = eig.dim();
    let floor = eig.max_abs() * lit(SUPPORT_EPS);
    let in_eig: Vec<CMatrix<T>> = slds.iter().map(|l| eig.to_eigenbasis(l)).collect();
    let mapped: Vec<CMatrix<T>> = in_eig
        .iter()
        .map(|x| {
            CMatrix::from_fn(n, n, |i, j| {
                let (a, b) = (eig.values[i], eig.values[j]);
                if a + b > floor {
                    x[(i, j)] * cplx(T::zero(), -(a - b) / (a + b))
                } else {
                    Complex::new(T::zero(), T::zero())
                }
            })
        })
        .collect();
    // Real Gram matrix of the span.
    let p = slds.len();
    let gram = DMatrix::from_fn(p, p, |a, b| trace_product(&in_eig[a].adjoint(), &in_eig[b]).re);
    let gram_inv = gram.clone().pseudo_inverse(lit(1e-12)).map_err(|_| Error::Singular)?;
    let mut worst = T::zero();
    for y in &mapped {
        let norm = y.norm();
        if norm <= T::default_epsilon() {
            continue;
        }
        let rhs = nalgebra::DVector::from_fn(p, |a, _| trace_product(&in_eig[a].adjoint(), y).re);
        let coef = &gram_inv * rhs;
        let mut proj = CMatrix::<T>::zeros(n, n);
        for a in 0..p {
            proj += &in_eig[a] * re(coef[a]);
        }
        worst = worst.max((y - proj).norm() / norm);
    }
    Ok(worst)
}

/// Weighted scalar bounds on Γ = Σ W_hh Var(φ̂_h).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarBounds {
    /// Tr[WH⁻¹]/M
    pub sld: f64,
    /// (Tr[W Re J⁻¹] + ‖√W Im J⁻¹ √W‖₁)/M
    pub rld: Option<f64>,
    /// Equal to the RLD bound when the model is D-invariant; not computed otherwise.
    pub holevo: Option<f64>,
}

pub fn scalar_bounds(
    weights: &[f64],
    h: &DMatrix<f64>,
    j_inv: Option<&DMatrix<Complex64>>,
    runs: usize,
    d_invariant: bool,
) -> Result<ScalarBounds> {
    let p = h.nrows();
    if weights.len() != p {
        return Err(Error::Dimension {
            expected: p,
            found: weights.len(),
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidArgument("weights must be non-negative".into()));
    }
    if runs == 0 {
        return Err(Error::InvalidArgument("run count must be at least 1".into()));
    }
    let m = runs as f64;
    let hinv = spd_inverse(h)?;
    let sld = (0..p).map(|i| weights[i] * hinv[(i, i)]).sum::<f64>() / m;
    let rld = match j_inv {
        None => None,
        Some(ji) => {
            if ji.shape() != (p, p) {
                return Err(Error::Dimension {
                    expected: p,
                    found: ji.nrows(),
                });
            }
            let re_part: f64 = (0..p).map(|i| weights[i] * ji[(i, i)].re).sum();
            let sw = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(p, weights.iter().map(|w| w.sqrt())));
            let im = &sw * imag_part(ji) * &sw;
            Some((re_part + trace_norm(&im)) / m)
        }
    };
    Ok(ScalarBounds {
        sld,
        rld,
        holevo: if d_invariant { rld } else { None },
    })
}

/// Υ = Tr[F H⁻¹], snapped into [0, P] when within 1e-9 of an edge.
pub fn extraction_efficiency(f: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<f64> {
    if f.shape() != h.shape() {
        return Err(Error::Dimension {
            expected: h.nrows(),
            found: f.nrows(),
        });
    }
    let hinv = spd_inverse(h)?;
    let v = (f * hinv).trace();
    let p = h.nrows() as f64;
    Ok(if v < 0.0 && v > -1e-9 {
        0.0
    } else if v > p && v < p + 1e-9 {
        p
    } else {
        v
    })
}

/// B·M·Bᵀ for a reparametrization with Jacobian `b` (rows: new parameters).
pub fn reparametrize(m: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if b.ncols() != m.nrows() || m.nrows() != m.ncols() {
        return Err(Error::Dimension {
            expected: m.nrows(),
            found: b.ncols(),
        });
    }
    if b.rank(1e-12 * b.norm().max(1.0)) < b.nrows() {
        return Err(Error::InvalidArgument(
            "reparametrization matrix must have full row rank".into(),
        ));
    }
    Ok(b * m * b.transpose())
}

/// Effective informations (F₁₁ − F₁₂²/F₂₂, F₂₂ − F₁₂²/F₁₁) of a 2×2 matrix.
pub fn effective_fi(f: &DMatrix<f64>) -> Result<(f64, f64)> {
    if f.shape() != (2, 2) {
        return Err(Error::Dimension {
            expected: 2,
            found: f.nrows(),
        });
    }
    let (a, b, c) = (f[(0, 0)], f[(0, 1)], f[(1, 1)]);
    if a <= 0.0 || c <= 0.0 {
        return Err(Error::InvalidArgument("effective information needs positive diagonal".into()));
    }
    Ok(((a - b * b / c).max(0.0), (c - b * b / a).max(0.0)))
}

/// Smallest eigenvalue of H − F (non-negative when F ⪯ H).
pub fn loewner_gap(h: &DMatrix<f64>, f: &DMatrix<f64>) -> f64 {
    let diff = h - f;
    let sym = (&diff + diff.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.iter().fold(f64::INFINITY, |a, &v| a.min(v))
}

/// Projective measurement in the eigenbasis of the SLD of ρ along ∂ρ.
pub fn sld_eigenbasis_povm<T: Real>(rho: &DensityOperator<T>, drho: &CMatrix<T>) -> Result<Povm<T>> {
    let l = sld(rho, drho)?;
    Povm::sld_eigenbasis(&LinearOperator::new(*rho.basis(), l)?)
}

/// Everything known about a model at one point, in double precision.
#[derive(Debug, Clone)]
pub struct FisherReport {
    pub point: ParamPoint,
    /// Classical FIM of the supplied measurement, when there is one.
    pub f: Option<DMatrix<f64>>,
    pub divergent_outcomes: Vec<usize>,
    pub h: DMatrix<f64>,
    pub d_raw: DMatrix<f64>,
    /// Weak commutators in the printed convention, split into (re, im).
    pub d: DMatrix<(f64, f64)>,
    pub sld_residual: f64,
    pub d_invariance_defect: Option<f64>,
    /// RLD inverse split into (re, im); from ρ⁻¹∂ρ for full-rank states or
    /// from the D-invariant pure-state identity otherwise.
    pub j_inv: Option<DMatrix<(f64, f64)>>,
    pub upsilon: Option<f64>,
    pub bounds: Option<ScalarBounds>,
}

/// Relative D-invariance defect below which the pure-state RLD route is used.
pub const D_INVARIANCE_TOL: f64 = 1e-6;

fn split<T: Real>(m: &DMatrix<Complex<T>>) -> DMatrix<(f64, f64)> {
    m.map(|z| (to_f64(z.re), to_f64(z.im)))
}

fn to_f64_matrix<T: Real>(m: &DMatrix<T>) -> DMatrix<f64> {
    m.map(to_f64)
}

impl FisherReport {
    /// Evaluates F (if a measurement is given), H, D, the RLD inverse where
    /// defined, Υ and the weighted bounds with W = `weights` and one run.
    pub fn evaluate<T: Real>(
        model: &ParametricModel<T>,
        point: &ParamPoint,
        povm: Option<&Povm<T>>,
        weights: Option<&[f64]>,
    ) -> Result<Self> {
        let rho = model.state_at(point)?;
        let drhos = model.state_derivatives(point)?;
        let q = qfim(&rho, &drhos)?;
        let h = to_f64_matrix(&q.h);

        let (f, divergent) = match povm {
            Some(m) => {
                let probs = model.outcome_probabilities(point, Some(m))?;
                let jac = model.outcome_jacobian(point, Some(m))?;
                let c = classical_fim(&probs, &jac)?;
                (Some(c.matrix), c.divergent)
            }
            None => (None, Vec::new()),
        };

        let min_eig = rho.eigen().values[0];
        let full_rank = min_eig > rho.eigen().max_abs() * lit(SUPPORT_EPS);
        let (j_inv, defect) = if full_rank {
            let r = rld_fim(&rho, &drhos)?;
            let inv = r.j.clone().try_inverse();
            (inv.map(|m| m.map(|z| Complex64::new(to_f64(z.re), to_f64(z.im)))), None)
        } else {
            let defect = d_invariance_defect(&rho, &q.slds)?;
            let ji = if to_f64(defect) < D_INVARIANCE_TOL {
                rld_pure_d_invariant(&q.h, &q.d())
                    .ok()
                    .map(|m| m.map(|z| Complex64::new(to_f64(z.re), to_f64(z.im))))
            } else {
                None
            };
            (ji, Some(to_f64(defect)))
        };

        let upsilon = match &f {
            Some(fm) if !divergent.is_empty() || fm.iter().any(|v| !v.is_finite()) => None,
            Some(fm) => extraction_efficiency(fm, &h).ok(),
            None => None,
        };
        let bounds = match weights {
            Some(w) => {
                let d_invariant = defect.map(|d| d < D_INVARIANCE_TOL).unwrap_or(false);
                scalar_bounds(w, &h, j_inv.as_ref(), 1, d_invariant).ok()
            }
            None => None,
        };
        Ok(Self {
            point: point.clone(),
            f,
            divergent_outcomes: divergent,
            h,
            d_raw: to_f64_matrix(&q.d_raw),
            d: split(&q.d()),
            sld_residual: to_f64(q.max_residual),
            d_invariance_defect: defect,
            j_inv: j_inv.as_ref().map(split),
            upsilon,
            bounds,
        })
    }
}

/// Real part of a complex matrix in double precision.
pub fn re_f64<T: Real>(m: &DMatrix<Complex<T>>) -> DMatrix<f64> {
    to_f64_matrix(&real_part(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_mode_operators, weighted_number, FockBasis};
    use crate::linalg::{max_abs_diff, outer};
    use nalgebra::dmatrix;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn constant_distribution_has_no_information() {
        assert_eq!(classical_fi(&[0.3, 0.7], &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn mzi_fisher_is_one() {
        for &phi in &[0.3f64, 0.9, 2.4] {
            let p = [(phi / 2.0).cos().powi(2), (phi / 2.0).sin().powi(2)];
            let dp = [-phi.sin() / 2.0, phi.sin() / 2.0];
            assert!((classical_fi(&p, &dp).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_probability_handling() {
        // harmless: p = 0 and ∂p = 0
        assert_eq!(classical_fi(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        // divergent: p = 0 but ∂p ≠ 0
        let c = classical_fim(&[1.0, 0.0], &[vec![-0.1, 0.1]]).unwrap();
        assert!(c.matrix[(0, 0)].is_infinite());
        assert_eq!(c.divergent, vec![1]);
    }

    #[test]
    fn block_diagonal_for_independent_outcomes() {
        // Product of two independent coins with biases a and b.
        let (a, b) = (0.3, 0.6);
        let p = vec![a * b, a * (1.0 - b), (1.0 - a) * b, (1.0 - a) * (1.0 - b)];
        let ja = vec![b, 1.0 - b, -b, -(1.0 - b)];
        let jb = vec![a, -a, 1.0 - a, -(1.0 - a)];
        let f = classical_fim(&p, &[ja, jb]).unwrap().matrix;
        assert!(f[(0, 1)].abs() < 1e-12);
        assert!((f[(0, 0)] - 1.0 / (a * (1.0 - a))).abs() < 1e-10);
        assert!((f[(1, 1)] - 1.0 / (b * (1.0 - b))).abs() < 1e-10);
    }

    #[test]
    fn sld_of_zero_derivative_is_zero() {
        let b = FockBasis::single_mode(2);
        let rho = DensityOperator::<f64>::maximally_mixed(b);
        let l = sld(&rho, &CMatrix::zeros(3, 3)).unwrap();
        assert_eq!(l.norm(), 0.0);
    }

    #[test]
    fn pure_state_sld_formula() {
        let b = FockBasis::two_mode(1);
        let g = weighted_number::<f64>(&b, &[-0.5, 0.5]).unwrap();
        let mut amps = CVector::zeros(4);
        amps[2] = re(0.6);
        amps[1] = re(0.8);
        let psi = StateVector::new(b, amps).unwrap();
        let dpsi = (g.matrix() * psi.amplitudes()) * (-imag_unit::<f64>());
        let rho = psi.density();
        let drho = outer(&dpsi, psi.amplitudes()) + outer(psi.amplitudes(), &dpsi);
        let l = sld(&rho, &drho).unwrap();
        let expected = (outer(&dpsi, psi.amplitudes()) + outer(psi.amplitudes(), &dpsi)) * re(2.0);
        assert!(max_abs_diff(&l, &expected) < 1e-8);
        let h = qfi(&rho, &drho).unwrap();
        assert!((h - 4.0 * 0.36 * 0.64).abs() < 1e-12);
        assert!((qfi_pure(&psi, &dpsi).unwrap() - h).abs() < 1e-12);
        assert!((qfi_generator(&psi, &g).unwrap() - h).abs() < 1e-12);
    }

    #[test]
    fn residual_error_for_inconsistent_derivative() {
        // A pure state cannot move within its kernel.
        let b = FockBasis::single_mode(1);
        let rho = StateVector::<f64>::vacuum(b).density();
        let drho = CMatrix::from_row_slice(2, 2, &[re(-1.0), re(0.0), re(0.0), re(1.0)]);
        assert!(matches!(sld(&rho, &drho), Err(Error::SldResidual { .. })));
    }

    #[test]
    fn rld_rejects_pure_states() {
        let b = FockBasis::single_mode(1);
        let rho = StateVector::<f64>::vacuum(b).density();
        let r = rld_fim(&rho, &[CMatrix::zeros(2, 2)]);
        assert!(matches!(r, Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn fujiwara_reduces_to_sld_without_commutators() {
        let h = dmatrix![2.0, 0.5; 0.5, 1.0];
        let d = DMatrix::<Complex64>::zeros(2, 2);
        let ji = rld_pure_d_invariant(&h, &d).unwrap();
        let hinv = spd_inverse(&h).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((ji[(i, j)] - hinv[(i, j)]).norm() < 1e-14);
            }
        }
        assert!(matches!(
            rld_pure_d_invariant(&dmatrix![1.0, 1.0; 1.0, 1.0], &d),
            Err(Error::Singular)
        ));
    }

    #[test]
    fn zero_weights_give_zero_bounds() {
        let h = dmatrix![4.0, 0.0; 0.0, 4.0];
        let ji = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(0.25, 0.0), Complex64::new(0.0, -0.25),
            Complex64::new(0.0, 0.25), Complex64::new(0.25, 0.0),
        ]);
        let b = scalar_bounds(&[0.0, 0.0], &h, Some(&ji), 1, true).unwrap();
        assert_eq!(b.sld, 0.0);
        assert_eq!(b.rld, Some(0.0));
        let b = scalar_bounds(&[1.0, 1.0], &h, Some(&ji), 1, true).unwrap();
        assert!((b.sld - 0.5).abs() < 1e-15);
        assert!((b.rld.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(b.holevo, b.rld);
        let b10 = scalar_bounds(&[1.0, 1.0], &h, Some(&ji), 10, false).unwrap();
        assert!((b10.sld - 0.05).abs() < 1e-15);
        assert_eq!(b10.holevo, None);
    }

    #[test]
    fn efficiency_limits() {
        let h = dmatrix![3.0, 0.2; 0.2, 1.5];
        assert!((extraction_efficiency(&h, &h).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(extraction_efficiency(&DMatrix::zeros(2, 2), &h).unwrap(), 0.0);
    }

    #[test]
    fn reparametrize_identity_and_scaling() {
        let f = dmatrix![2.0, 0.3; 0.3, 1.0];
        assert_eq!(reparametrize(&f, &DMatrix::identity(2, 2)).unwrap(), f);
        // θ = cφ ⇒ F_θ = F_φ / c², i.e. B = 1/c
        let c = 3.0;
        let b = dmatrix![1.0 / c, 0.0; 0.0, 1.0];
        let g = reparametrize(&f, &b).unwrap();
        assert!((g[(0, 0)] - 2.0 / 9.0).abs() < 1e-15);
        assert!(reparametrize(&f, &dmatrix![1.0, 1.0; 1.0, 1.0]).is_err());
        assert!(reparametrize(&f, &dmatrix![1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn effective_information() {
        let (a, b) = effective_fi(&dmatrix![2.0, 0.0; 0.0, 5.0]).unwrap();
        assert_eq!((a, b), (2.0, 5.0));
        let (a, _) = effective_fi(&dmatrix![2.0, 0.7; 0.7, 1e12]).unwrap();
        assert!((a - 2.0).abs() / 2.0 < 1e-6);
        let (a, b) = effective_fi(&dmatrix![1.0, 2.0; 2.0, 4.0]).unwrap();
        assert!(a.abs() < 1e-12 && b.abs() < 1e-12);
        assert!(effective_fi(&dmatrix![0.0, 0.0; 0.0, 1.0]).is_err());
    }

    #[test]
    fn displacement_d_invariance() {
        let b = FockBasis::single_mode(30);
        let ops = build_mode_operators::<f64>(&b, 0).unwrap();
        let s2 = re(2f64.sqrt());
        let model = ParametricModel::unitary(
            ["re", "im"],
            StateVector::vacuum(b),
            vec![ops.p.scale(s2), ops.x.scale(-s2)],
        )
        .unwrap();
        let p = model.point(vec![0.5, 0.3]).unwrap();
        let report = FisherReport::evaluate(&model, &p, None, Some(&[1.0, 1.0])).unwrap();
        assert!(report.d_invariance_defect.unwrap() < 1e-6);
        assert!((report.d_raw[(0, 1)] + 4.0).abs() < 1e-7);
        let ji = report.j_inv.unwrap();
        assert!((ji[(0, 1)].1 + 0.25).abs() < 1e-7);
        let bounds = report.bounds.unwrap();
        assert!((bounds.rld.unwrap() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn single_photon_report() {
        let b = FockBasis::two_mode(1);
        let mut amps = CVector::zeros(4);
        amps[2] = re(FRAC_1_SQRT_2);
        amps[1] = re(FRAC_1_SQRT_2);
        let psi = StateVector::new(b, amps).unwrap();
        let g = weighted_number::<f64>(&b, &[0.0, 1.0]).unwrap();
        let model = ParametricModel::unitary(["phi"], psi, vec![g]).unwrap();
        let bs = crate::fock::beam_splitter::<f64>(&b, FRAC_1_SQRT_2, (0, 1)).unwrap();
        let povm = Povm::photon_counting(&b, 1.0).unwrap().after_unitary(&bs).unwrap();
        let p = model.point(vec![1.1]).unwrap();
        let r = FisherReport::evaluate(&model, &p, Some(&povm), None).unwrap();
        assert!((r.h[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((r.f.unwrap()[(0, 0)] - 1.0).abs() < 1e-9);
        assert!((r.upsilon.unwrap() - 1.0).abs() < 1e-9);
    }
}
