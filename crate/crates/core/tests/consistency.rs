//! Cross-module agreement on shared quantities: the closed-form prediction
//! layer feeds the regression harness, and the Monte Carlo layer reproduces
//! local rates computed from the potential directly.

use pamlab_core::asymptotics::predicted_log_moment;
use pamlab_core::feynman_kac::{exponent_fit, quenched_mass, PathEstimator};
use pamlab_core::model::{
    trunc_radius_for, DisplacementConfig, LatticePotential, ModelParams, SingleSitePotential,
};
use pamlab_core::rng::stream;

#[test]
fn prediction_series_roundtrip_through_fit() {
    // Regimes carrying a signed rate produce pure power-law series, so the
    // fitted slope must reproduce the predicted power of t to rounding.
    let cases = [
        ModelParams::new(1, 2.0, 1.0, 1.0, 1.0).unwrap(),
        ModelParams::new(1, 4.0, 1.0, 1.0, 1.0).unwrap(),
        ModelParams::new(2, 5.0, 2.0, -1.0, 1.0).unwrap(),
    ];
    for params in cases {
        let mut series = Vec::new();
        let mut predicted = f64::NAN;
        for k in 3..9 {
            let t = (1u64 << k) as f64;
            let pred = predicted_log_moment(&params, t, 1.0, 1e-8).unwrap();
            predicted = pred.exponent;
            series.push((t, pred.value.expect("rate-bearing regime")));
        }
        let (e, _, r2) = exponent_fit(&series).unwrap();
        assert!(
            (e - predicted).abs() < 1e-9,
            "{params:?}: fit {e} vs {predicted}"
        );
        assert!(r2 > 1.0 - 1e-12);
    }
}

#[test]
fn order_only_regimes_expose_exponent_without_rate() {
    for (d, alpha) in [(2usize, 5.0), (3, 6.0)] {
        let params = ModelParams::new(d, alpha, 1.0, 1.0, 1.0).unwrap();
        let pred = predicted_log_moment(&params, 100.0, 1.0, 1e-8).unwrap();
        assert!(pred.rate.is_none(), "d={d} alpha={alpha}");
        assert!(pred.value.is_none());
        assert!(pred.exponent > 0.0 && pred.exponent < 1.0);
    }
}

#[test]
fn short_time_quenched_mass_matches_local_rate() {
    // Over t = 1/16 a path stays inside the flat core of a single trap, so
    // -log(mass) is t·V(0) up to Monte Carlo error.
    let params = ModelParams::new(1, 6.0, 1.0, 1.0, 1.0).unwrap();
    let mut cfg = DisplacementConfig::new(1);
    cfg.insert(vec![0], vec![0]).unwrap();
    let t = 1.0 / 16.0;
    let est = PathEstimator::new(1, t, 4000)
        .unwrap()
        .with_dt(t / 32.0)
        .unwrap();
    let mut rng = stream(1234, &[1]);
    let (m, se) = quenched_mass(&cfg, &params, &est, &mut rng).unwrap();
    assert!(m > 0.0 && m <= 1.0);

    let u = SingleSitePotential::new(params);
    let pot = LatticePotential::new(u, &cfg, trunc_radius_for(&params, 1e-4)).unwrap();
    let ideal = (-t * pot.value(&[0.0])).exp();
    assert!(
        (m - ideal).abs() < (3.0 * se).max(0.02 * ideal),
        "mass {m} (se {se}) vs local-rate value {ideal}"
    );
}
