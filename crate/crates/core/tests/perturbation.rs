use doiflow_core::kernels::{
    divided_difference_decomposed, divided_difference_kernel, SmoothFunction, WienerFunction, DEFAULT_DIAG_TOL,
};
use doiflow_core::norms::op_norm;
use doiflow_core::perturbation::{dk_derivative, f_difference, fd_derivative, OperatorPath};
use doiflow_core::random::SplitMix64;
use proptest::prelude::*;

fn wiener(which: usize) -> WienerFunction {
    match which {
        0 => WienerFunction::cos(0.7),
        1 => WienerFunction::sin(1.3),
        2 => WienerFunction::exp_i(-2.0),
        _ => WienerFunction::lorentzian(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn decomposed_divided_difference_matches_closed_form(which in 0usize..4, x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let f = wiener(which);
        let closed = divided_difference_kernel(&f.clone().into(), DEFAULT_DIAG_TOL).unwrap();
        let decomposed = divided_difference_decomposed(&f, 32, 32).unwrap();
        for (a, b) in [(x, y), (x, x)] {
            let (u, v) = (closed.eval(a, b), decomposed.eval(a, b));
            prop_assert!((u - v).norm() < 1e-8, "{} at ({a}, {b}): {u} vs {v}", f.label);
        }
    }

    #[test]
    fn square_difference_is_exact(seed in any::<u64>(), n in 1usize..10) {
        let mut rng = SplitMix64::new(seed);
        let (a, phi) = (rng.hermitian(n, 1.0), rng.hermitian(n, 0.3));
        let d = f_difference(&a, &phi, &SmoothFunction::square()).unwrap();
        // (A+Φ)² − A² = AΦ + ΦA + Φ²
        let (am, pm) = (a.as_matrix(), phi.as_matrix());
        let expected = &(&am.matmul(pm) + &pm.matmul(am)) + &pm.matmul(pm);
        prop_assert!(op_norm(&(&d.doi - &expected)).unwrap() < 1e-12 * (1.0 + op_norm(&expected).unwrap()));
    }

    #[test]
    fn dk_against_central_difference(seed in any::<u64>(), n in 2usize..7, s in 0.1f64..0.9) {
        let mut rng = SplitMix64::new(seed);
        let path = OperatorPath::polynomial(rng.hermitian(n, 1.0), vec![rng.hermitian(n, 1.0), rng.hermitian(n, 0.3)], (0.0, 1.0)).unwrap();
        let f: SmoothFunction = WienerFunction::lorentzian().into();
        let dk = dk_derivative(&path, s, &f).unwrap();
        let fd = fd_derivative(&path, s, &f, 1e-4).unwrap();
        prop_assert!(op_norm(&(&dk - &fd)).unwrap() <= 1e-6 * (1.0 + op_norm(&dk).unwrap()));
    }
}

#[test]
fn identity_derivative_is_phi_prime() {
    let mut rng = SplitMix64::new(3);
    let path = OperatorPath::trigonometric(rng.hermitian(5, 1.0), rng.hermitian(5, 1.0), rng.hermitian(5, 1.0), 2.0, (0.0, 1.0)).unwrap();
    let dk = dk_derivative(&path, 0.4, &SmoothFunction::identity()).unwrap();
    assert!((&dk - path.phi_prime(0.4).unwrap().as_matrix()).max_abs() < 1e-12);
    assert!(fd_derivative(&path, 0.99, &SmoothFunction::identity(), 0.05).is_err());
}
