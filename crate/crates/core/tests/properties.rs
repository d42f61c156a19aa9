use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;
use qfisher::fisher::{classical_fi, qfi, qfi_generator, sld_eigenbasis_povm};
use qfisher::fock::{
    beam_splitter, loss_channel, outcome_distribution, phase_shifter, total_number, DensityOperator, FockBasis,
    LinearOperator, Povm, StateVector,
};
use qfisher::linalg::{max_abs_diff, CMatrix, CVector, HermitianEigen};

type C = Complex<f64>;

fn complex_entries(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
}

fn matrix(d: usize, e: &[(f64, f64)]) -> CMatrix<f64> {
    CMatrix::from_fn(d, d, |r, c| C::new(e[r * d + c].0, e[r * d + c].1))
}

/// A A† + ε·I, normalized: full rank by construction.
fn density(d: usize, e: &[(f64, f64)], floor: f64) -> CMatrix<f64> {
    let a = matrix(d, e);
    let m = &a * a.adjoint() + CMatrix::identity(d, d) * C::new(floor, 0.0);
    let tr = m.trace();
    m / tr
}

fn hermitian(d: usize, e: &[(f64, f64)]) -> CMatrix<f64> {
    let a = matrix(d, e);
    (&a + a.adjoint()) * C::new(0.5, 0.0)
}

/// E_k = S^{-1/2} A_k A_k† S^{-1/2} with S = Σ A_k A_k†.
fn random_povm(basis: FockBasis, blocks: &[Vec<(f64, f64)>]) -> Povm<f64> {
    let d = basis.dim();
    let pos: Vec<CMatrix<f64>> = blocks
        .iter()
        .map(|b| {
            let a = matrix(d, b);
            &a * a.adjoint() + CMatrix::identity(d, d) * C::new(1e-3, 0.0)
        })
        .collect();
    let s = pos.iter().fold(CMatrix::zeros(d, d), |acc, p| acc + p);
    let inv_sqrt = HermitianEigen::new(&s).apply(|l| C::new(1.0 / l.sqrt(), 0.0));
    let effects = pos
        .iter()
        .map(|p| {
            let e = &inv_sqrt * p * &inv_sqrt;
            let e = (&e + e.adjoint()) * C::new(0.5, 0.0);
            LinearOperator::new(basis, e).unwrap()
        })
        .collect::<Vec<_>>();
    let labels = (0..effects.len()).map(|k| k.to_string()).collect();
    Povm::new(effects, labels).unwrap()
}

fn fisher_of(rho: &DensityOperator<f64>, drho: &CMatrix<f64>, povm: &Povm<f64>) -> f64 {
    let p = outcome_distribution(rho, povm).unwrap();
    let dp: Vec<f64> = povm.effects().iter().map(|e| (e.matrix() * drho).trace().re).collect();
    classical_fi(&p, &dp).unwrap()
}

/// Unitary family ρ(θ) = e^{-iθG} ρ₀ e^{iθG} at θ = 0.
fn unitary_family(d: usize, rho_e: &[(f64, f64)], g_e: &[(f64, f64)]) -> (DensityOperator<f64>, CMatrix<f64>) {
    let basis = FockBasis::single_mode(d - 1);
    let rho = density(d, rho_e, 0.05);
    let g = hermitian(d, g_e);
    let drho = (&g * &rho - &rho * &g) * C::new(0.0, -1.0);
    (DensityOperator::new(basis, rho).unwrap(), drho)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn optical_elements_are_unitary(t in 0.0..=1.0f64, phi in -7.0..7.0f64, cutoff in 1usize..5) {
        let basis = FockBasis::two_mode(cutoff);
        prop_assert!(beam_splitter::<f64>(&basis, t, (0, 1)).unwrap().is_unitary(1e-10));
        prop_assert!(phase_shifter::<f64>(&basis, phi, 1).unwrap().is_unitary(1e-10));
    }

    #[test]
    fn beam_splitter_conserves_photon_number(t in 0.0..=1.0f64, cutoff in 1usize..5) {
        let basis = FockBasis::two_mode(cutoff);
        let u = beam_splitter::<f64>(&basis, t, (0, 1)).unwrap();
        let n = total_number::<f64>(&basis);
        prop_assert!(max_abs_diff(n.commutator(&u).unwrap().matrix(), &CMatrix::zeros(basis.dim(), basis.dim())) < 1e-10);
    }

    #[test]
    fn loss_composes_multiplicatively(
        e in complex_entries(81),
        eta1 in 0.0..=1.0f64,
        eta2 in 0.0..=1.0f64,
        mode in 0usize..2,
    ) {
        let basis = FockBasis::new(2, 2).unwrap();
        let rho = DensityOperator::new(basis, density(9, &e, 0.0)).unwrap();
        let twice = loss_channel(&loss_channel(&rho, eta1, mode).unwrap(), eta2, mode).unwrap();
        let once = loss_channel(&rho, eta1 * eta2, mode).unwrap();
        prop_assert!(max_abs_diff(twice.matrix(), once.matrix()) < 1e-12);
        prop_assert!((once.trace() - 1.0).abs() < 1e-12);
        prop_assert!(once.eigen().values[0] > -1e-12);
    }

    #[test]
    fn built_in_measurements_resolve_identity(eff in 0.0..=1.0f64, dark in 0.0..=1.0f64, cutoff in 1usize..6) {
        let basis = FockBasis::two_mode(cutoff);
        let d = basis.dim();
        for povm in [
            Povm::<f64>::photon_counting(&basis, eff).unwrap(),
            Povm::<f64>::photon_number(&basis, 1, eff).unwrap(),
            Povm::<f64>::on_off(&basis, 0, eff, dark).unwrap(),
        ] {
            let sum = povm.effects().iter().fold(CMatrix::zeros(d, d), |acc, e| acc + e.matrix());
            prop_assert!(max_abs_diff(&sum, &CMatrix::identity(d, d)) < 1e-10);
        }
    }

    #[test]
    fn measurement_never_beats_quantum_information(
        d in 2usize..4,
        rho_e in complex_entries(9),
        g_e in complex_entries(9),
        blocks in prop::collection::vec(complex_entries(9), 2..5),
    ) {
        let (rho, drho) = unitary_family(d, &rho_e, &g_e);
        let h = qfi(&rho, &drho).unwrap();
        let povm = random_povm(*rho.basis(), &blocks);
        let f = fisher_of(&rho, &drho, &povm);
        prop_assert!(f >= -1e-12);
        prop_assert!(f <= h + 1e-8, "F = {f} > H = {h}");
    }

    #[test]
    fn sld_eigenbasis_attains_quantum_information(d in 2usize..4, rho_e in complex_entries(9), g_e in complex_entries(9)) {
        let (rho, drho) = unitary_family(d, &rho_e, &g_e);
        let h = qfi(&rho, &drho).unwrap();
        let povm = sld_eigenbasis_povm(&rho, &drho).unwrap();
        prop_assert!((fisher_of(&rho, &drho, &povm) - h).abs() < 1e-8 * h.max(1.0));
    }

    #[test]
    fn pure_state_qfi_is_four_variances(amp in complex_entries(9), g_e in complex_entries(81)) {
        let basis = FockBasis::two_mode(2);
        let v = CVector::from_iterator(9, amp.iter().map(|&(a, b)| C::new(a, b)));
        prop_assume!(v.norm() > 1e-3);
        let psi = StateVector::normalized(basis, v).unwrap();
        let g = LinearOperator::new(basis, hermitian(9, &g_e)).unwrap();
        let h = qfi_generator(&psi, &g).unwrap();
        prop_assert!((h - 4.0 * psi.variance(&g)).abs() < 1e-10 * h.max(1.0));
    }

    #[test]
    fn classical_fi_ignores_outcome_order(
        raw in prop::collection::vec(0.05..1.0f64, 2..8),
        slope in prop::collection::vec(-1.0..1.0f64, 8),
        shift in 0usize..8,
    ) {
        let n = raw.len();
        let total: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
        // derivative with zero sum
        let mean: f64 = slope[..n].iter().sum::<f64>() / n as f64;
        let dp: Vec<f64> = slope[..n].iter().map(|s| s - mean).collect();
        let f = classical_fi(&p, &dp).unwrap();
        let rot = |v: &[f64]| { let mut w = v.to_vec(); w.rotate_left(shift % n); w };
        prop_assert!(f >= 0.0);
        prop_assert!((classical_fi(&rot(&p), &rot(&dp)).unwrap() - f).abs() < 1e-12 * f.max(1.0));
    }

    #[test]
    fn scaled_generator_scales_qfi_quadratically(rho_e in complex_entries(9), g_e in complex_entries(9), k in 0.1..5.0f64) {
        let (rho, drho) = unitary_family(3, &rho_e, &g_e);
        let h1 = qfi(&rho, &drho).unwrap();
        let hk = qfi(&rho, &(drho * C::new(k, 0.0))).unwrap();
        prop_assert!((hk - k * k * h1).abs() < 1e-9 * hk.max(1.0));
    }
}

#[test]
fn mixing_cannot_raise_qfi() {
    // convexity along a two-state mixture with a common generator
    let basis = FockBasis::single_mode(2);
    let g = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(2.0, 0.0)]));
    let plus = |a: &[f64]| {
        let v = CVector::from_iterator(3, a.iter().map(|&x| C::new(x, 0.0)));
        StateVector::normalized(basis, v).unwrap().density()
    };
    let r1 = plus(&[1.0, 0.0, 1.0]);
    let r2 = plus(&[1.0, 1.0, 0.0]);
    let d = |r: &DensityOperator<f64>| (&g * r.matrix() - r.matrix() * &g) * C::new(0.0, -1.0);
    let (h1, h2) = (qfi(&r1, &d(&r1)).unwrap(), qfi(&r2, &d(&r2)).unwrap());
    for w in [0.1, 0.3, 0.5, 0.8] {
        let mix = r1.mix(&r2, w).unwrap();
        let h = qfi(&mix, &d(&mix)).unwrap();
        assert!(h <= (1.0 - w) * h1 + w * h2 + 1e-9, "w={w}");
    }
}
