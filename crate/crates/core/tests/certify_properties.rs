use camp_core::certify::{
    cdf_expectation_gap, certified_expected_return, certify_curve, lower_confidence_probs, plug_in_probs,
    bound_from_probs, theorem1_radius, BoundMode, ReturnSample,
};
use camp_core::stats::{std_normal_cdf, std_normal_quantile};
use proptest::collection::vec;
use proptest::prelude::{prop_assert, prop_assert_eq, proptest, ProptestConfig, Strategy};

fn returns() -> impl Strategy<Value = Vec<f64>> {
    vec((1u32..=200).prop_map(f64::from), 2..300)
}

fn mode(cp: bool) -> BoundMode {
    if cp {
        BoundMode::ClopperPearson
    } else {
        BoundMode::Dkw
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn curve_is_nonincreasing_and_sound(
        r in returns(),
        sigma in 0.05f64..1.0,
        alpha in 0.01f64..0.2,
        cp in proptest::bool::ANY,
    ) {
        let s = ReturnSample::new(r, sigma, 0).unwrap();
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
        let curve = certify_curve(&s, alpha, sigma, &grid, mode(cp)).unwrap();
        for w in curve.points.windows(2) {
            prop_assert!(w[1].1 <= w[0].1);
        }
        prop_assert!(curve.points.iter().all(|p| p.1 >= 0.0));
        prop_assert!(curve.points[0].1 <= s.mean() + 1e-9);
        let plug = bound_from_probs(&plug_in_probs(&s).unwrap(), sigma, 0.3).unwrap();
        prop_assert!(certified_expected_return(&s, alpha, sigma, 0.3, mode(cp)).unwrap() <= plug + 1e-9);
    }

    #[test]
    fn theorem1_radius_hits_target(
        r in returns(),
        sigma in 0.05f64..1.0,
        frac in 0.01f64..=1.0,
        cp in proptest::bool::ANY,
    ) {
        let s = ReturnSample::new(r, sigma, 0).unwrap();
        let first = lower_confidence_probs(&s, 0.05, mode(cp)).unwrap()[0];
        let xi = frac * first.threshold * first.prob;
        prop_assert!(xi > 0.0);
        let tau = theorem1_radius(&s, 0.05, sigma, xi, mode(cp)).unwrap();
        prop_assert!(tau >= 0.0);
        let p = first.prob.clamp(1e-12, 1.0 - 1e-12);
        let z = std_normal_quantile(p).unwrap() - tau / sigma;
        let first_term = first.threshold * std_normal_cdf(z).unwrap();
        prop_assert!((first_term - xi).abs() <= 1e-9, "first term {} vs xi {}", first_term, xi);
    }

    #[test]
    fn cdf_gap_is_exact_mean_difference(
        x in vec(0u32..50, 1..40),
        y in vec(0u32..50, 1..40),
    ) {
        let (nx, ny) = (x.len() as i64, y.len() as i64);
        let sx: i64 = x.iter().map(|&v| i64::from(v)).sum();
        let sy: i64 = y.iter().map(|&v| i64::from(v)).sum();
        // mean(Y) - mean(X) as the rational (nx*sy - ny*sx) / (nx*ny).
        let exact = (nx * sy - ny * sx) as f64 / (nx * ny) as f64;
        let xf: Vec<f64> = x.iter().map(|&v| f64::from(v)).collect();
        let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        let got = cdf_expectation_gap(&xf, &yf).unwrap();
        prop_assert_eq!(got, exact);
        prop_assert_eq!(got == 0.0, sx * ny == sy * nx);
        prop_assert_eq!(got > 0.0, sy * nx > sx * ny);
    }
}

#[test]
fn large_budget_drives_bound_to_zero() {
    let s = ReturnSample::new((0..1000).map(|i| 50.0 + (i % 150) as f64).collect(), 0.2, 0).unwrap();
    let b = certified_expected_return(&s, 0.05, 0.2, 50.0, BoundMode::Dkw).unwrap();
    assert!(b < 1e-12);
}
