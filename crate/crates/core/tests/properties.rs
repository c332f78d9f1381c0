use proptest::prelude::*;
use sle_wedge::conformal::SlitMap;
use sle_wedge::exponents::{
    alpha_from_rho, hiding_sigma, hiding_tilde, intersection_sigma, rho_from_alpha, wedge_gamma,
    RestrictionExponent, SleParameterPair, WedgeAngle,
};
use sle_wedge::saw::{enumerate_in_order, WedgeMask};
use sle_wedge::Rational;

proptest! {
    #[test]
    fn rho_alpha_round_trip(rho in -1.99f64..50.0) {
        let back = rho_from_alpha(alpha_from_rho(rho).unwrap()).unwrap();
        prop_assert!((back - rho).abs() <= 1e-12 * (1.0 + rho.abs()));
    }

    #[test]
    fn rational_and_float_laws_agree(n in 1u32..20, p in 1i64..40, q in 1i64..40) {
        prop_assume!(p <= q);
        let exact = wedge_gamma(n, WedgeAngle::new(Rational::new(p, q)).unwrap()).unwrap().value();
        let float = wedge_gamma(n, WedgeAngle::new(p as f64 / q as f64).unwrap()).unwrap().value();
        let exact = *exact.numer() as f64 / *exact.denom() as f64;
        prop_assert!((exact - float).abs() <= 1e-12 * (1.0 + exact.abs()));
    }

    #[test]
    fn hiding_is_intersection_after_tilde(alpha in 0.34f64..5.0, beta in 0.01f64..5.0) {
        let a = RestrictionExponent::new(alpha).unwrap();
        let b = RestrictionExponent::new(beta).unwrap();
        let t = hiding_tilde(a, b).unwrap();
        let direct = hiding_sigma(a, b).unwrap().value();
        let pair = SleParameterPair::restriction(rho_from_alpha(a).unwrap()).unwrap();
        let composed = intersection_sigma(pair, b).value();
        prop_assert!((direct - composed).abs() <= 1e-10 * (1.0 + direct.abs()));
        prop_assert!(t.alpha_tilde.value() > beta);
    }

    #[test]
    fn slit_root_residual_is_small(theta in 0.2f64..1.0, log_r in 0.0f64..12.0) {
        let map = SlitMap::new(WedgeAngle::new(theta).unwrap(), 10f64.powf(log_r)).unwrap();
        let root = map.find_z0(1e-13).unwrap();
        prop_assert!(map.root_residual(&root) <= 1e-10);
        let d = map.phi_prime_zero().unwrap();
        prop_assert!(d > 0.0 && d <= 1.0 + 1e-15);
    }

    #[test]
    fn enumeration_ignores_direction_order(perm in Just([(0, 1), (-1, 0), (1, 0), (0, -1)]).prop_shuffle(), n in 1usize..9) {
        for mask in WedgeMask::ALL {
            let base = enumerate_in_order(mask, n, [(1, 0), (0, 1), (-1, 0), (0, -1)]);
            prop_assert_eq!(&enumerate_in_order(mask, n, perm), &base);
        }
    }
}
