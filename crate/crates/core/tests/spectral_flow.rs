use std::sync::OnceLock;

use doiflow_core::flow::patch::riesz_projection;
use doiflow_core::flow::{
    build_weight_function, commutator_identity_check, flow_integrate, hastings_generator, uniform_grid,
    verify_automorphic_equivalence, Contour, FdScheme, FlowSettings, GappedPath, HastingsMethod, WeightFunction,
    WeightFunctionSettings,
};
use doiflow_core::norms::op_norm;
use doiflow_core::perturbation::OperatorPath;
use doiflow_core::random::SplitMix64;
use doiflow_core::{hermitian_eig, Error};
use proptest::prelude::*;

fn wf1() -> &'static WeightFunction {
    static WF: OnceLock<WeightFunction> = OnceLock::new();
    WF.get_or_init(|| build_weight_function(1.0, &WeightFunctionSettings::default()).unwrap())
}

/// Lower block in `[−2, −1]`, upper in `[1, 2]`, perturbation of norm 0.5.
fn gapped(seed: u64, n: usize) -> GappedPath {
    let mut rng = SplitMix64::new(seed);
    let low = n / 2;
    let spectrum: Vec<f64> = (0..n).map(|k| if k < low { rng.uniform(-2.0, -1.0) } else { rng.uniform(1.0, 2.0) }).collect();
    let h0 = rng.hermitian_with_spectrum(&spectrum);
    let v = rng.hermitian(n, 1.0);
    let v = v.scale(0.5 / op_norm(v.as_matrix()).unwrap());
    let path = OperatorPath::linear(h0, v, (0.0, 1.0)).unwrap();
    GappedPath::new("gapped", path, move |_, e| (e[0] - 0.25, e[low - 1]), 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn commutator_identity(seed in any::<u64>(), n in 2usize..9, s in 0.0f64..1.0) {
        let c = commutator_identity_check(&gapped(seed, n), s, wf1(), 64, FdScheme::None).unwrap();
        prop_assert!(c.residual <= c.tolerance, "{} > {}", c.residual, c.tolerance);
    }

    #[test]
    fn generator_is_hermitian_and_methods_agree(seed in any::<u64>(), n in 2usize..7, s in 0.0f64..1.0) {
        let path = gapped(seed, n);
        let closed = hastings_generator(&path, s, wf1(), HastingsMethod::ClosedForm).unwrap();
        let nested = hastings_generator(&path, s, wf1(), HastingsMethod::Quadrature { u_nodes: 8 }).unwrap();
        prop_assert!(closed.defect() < 1e-14 && closed.as_matrix().hermitian_defect() == 0.0);
        prop_assert!(op_norm(&(closed.as_matrix() - nested.as_matrix())).unwrap() < 1e-6);
    }

    #[test]
    fn riesz_converges_with_nodes(seed in any::<u64>(), n in 2usize..9) {
        let path = gapped(seed, n);
        let h = path.path.h(0.5).unwrap();
        let eig = hermitian_eig(&h).unwrap();
        let state = path.state(0.5, 64).unwrap();
        let interval = path.interval(0.5, eig.eigenvalues());
        let err = |nodes| {
            let c = Contour::around(interval, 1.0, nodes).unwrap();
            op_norm(&(&riesz_projection(&h, eig.eigenvalues(), &c).unwrap() - &state.patch.projector)).unwrap()
        };
        prop_assert!(err(64) < 1e-10);
        prop_assert!(err(16) > err(32) || err(32) < 1e-13);
    }
}

#[test]
fn flow_transports_the_patch() {
    let path = gapped(7, 6);
    let r = flow_integrate(&path, wf1(), &uniform_grid(0.0, 1.0, 200), &FlowSettings { stride: 10, ..Default::default() }).unwrap();
    assert!(r.completed());
    assert_eq!(r.records.len(), 21);
    let rep = verify_automorphic_equivalence(&r).unwrap();
    assert!(rep.max_error < 1e-5, "{}", rep.max_error);
    assert!(rep.max_unitarity_defect < 1e-12);
    assert!(rep.rank_constant);
}

#[test]
fn contour_through_the_spectrum_is_rejected() {
    let path = gapped(2, 4);
    let h = path.path.h(0.0).unwrap();
    let eig = hermitian_eig(&h).unwrap();
    let e = eig.eigenvalues();
    let c = Contour::new(e[0], 2.0 * (e[2] - e[0]), 64, 0.1).unwrap();
    assert!(matches!(riesz_projection(&h, e, &c), Err(Error::Contour { .. })));
}
