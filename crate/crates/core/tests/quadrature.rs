use std::sync::OnceLock;

use ladderlab::quadrature::{integrate, HlStore, QuadratureSpec, StoreParams};
use ladderlab::zeta::ZetaEngine;
use proptest::prelude::*;

fn z_sq(t: f64) -> f64 {
    ZetaEngine::default().zeta_sq(t).unwrap()
}

fn store() -> &'static HlStore {
    static STORE: OnceLock<HlStore> = OnceLock::new();
    STORE.get_or_init(|| {
        HlStore::open(
            ZetaEngine::default(),
            QuadratureSpec::default(),
            StoreParams::default(),
            None,
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn adaptive_integral_is_additive(a in 100.0f64..5000.0, w1 in 0.1f64..20.0, w2 in 0.1f64..20.0) {
        let spec = QuadratureSpec::default();
        let whole = integrate(z_sq, a, a + w1 + w2, &spec).unwrap().value;
        let left = integrate(z_sq, a, a + w1, &spec).unwrap().value;
        let right = integrate(z_sq, a + w1, a + w1 + w2, &spec).unwrap().value;
        prop_assert!((whole - left - right).abs() <= 1e-8 * whole.abs().max(1.0));
    }

    #[test]
    fn store_differences_match_direct_quadrature(a in 20.0f64..8000.0, w in 0.5f64..40.0) {
        let s = store();
        let diff = s.value(a + w).unwrap() - s.value(a).unwrap();
        let direct = integrate(z_sq, a, a + w, &QuadratureSpec::default()).unwrap().value;
        // table rows are rounded to 15 significant digits of I(T) ~ T ln T
        let tol = 1e-13 * s.value(a + w).unwrap() + 1e-8 * direct;
        prop_assert!((diff - direct).abs() <= tol, "{diff} vs {direct}");
    }

    #[test]
    fn integral_is_monotone(a in 20.0f64..8000.0, w in 0.01f64..10.0) {
        let s = store();
        prop_assert!(s.value(a + w).unwrap() > s.value(a).unwrap());
    }
}
