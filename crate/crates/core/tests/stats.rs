use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use relevance_core::data::{Dataset, Task};
use relevance_core::rng::seeded;
use relevance_core::synth::{generate, preset};
use relevance_core::stats::{sample_null, t_cdf, t_quantile};
use relevance_core::{prediction_interval, ForestParams, PipelineConfig, Scoring};

/// Student-t CDF by Simpson integration of the density written out from
/// the gamma function, independent of the library's incomplete beta.
fn cdf_by_integration(t: f64, dof: f64) -> f64 {
    let ln_c = libm_lgamma((dof + 1.0) / 2.0) - libm_lgamma(dof / 2.0) - 0.5 * (dof * std::f64::consts::PI).ln();
    let pdf = |x: f64| (ln_c - (dof + 1.0) / 2.0 * (1.0 + x * x / dof).ln()).exp();
    // substitute x = tan(u) to integrate over a finite range
    let f = |u: f64| pdf(u.tan()) / u.cos().powi(2);
    let (a, b) = (0.0, t.atan());
    let steps = 200_000;
    let h = (b - a) / steps as f64;
    let mut s = f(a) + f(b);
    for i in 1..steps {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    0.5 + s * h / 3.0
}

/// Lanczos log-gamma (g = 7, n = 9), written independently of the crate.
fn libm_lgamma(x: f64) -> f64 {
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, &c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

#[test]
fn quantile_inverts_the_integrated_cdf() {
    for dof in [1u64, 5, 10, 49, 1000] {
        for prob in [0.9, 0.975] {
            let q = t_quantile(prob, dof).unwrap();
            let back = cdf_by_integration(q, dof as f64);
            assert!((back - prob).abs() < 1e-6, "dof {dof} prob {prob}: {back}");
        }
    }
    assert!((t_quantile(0.975, 10).unwrap() - 2.2281).abs() < 1e-4);
}

proptest! {
    #[test]
    fn cdf_is_symmetric(t in -50.0f64..50.0, dof in 1.0f64..200.0) {
        prop_assert!((t_cdf(t, dof) + t_cdf(-t, dof) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quantile_round_trips(prob in 0.01f64..0.99, dof in 1u64..500) {
        let q = t_quantile(prob, dof).unwrap();
        prop_assert!((t_cdf(q, dof as f64) - prob).abs() < 1e-9);
    }

    #[test]
    fn interval_is_symmetric_about_the_mean(xs in proptest::collection::vec(-100.0f64..100.0, 2..40), p in 1e-6f64..0.5) {
        let pi = prediction_interval(&xs, p).unwrap();
        prop_assert!(((pi.upper - pi.mean) - (pi.mean - pi.lower)).abs() <= 1e-9 * (1.0 + pi.width()));
        prop_assert!(pi.lower <= pi.mean && pi.mean <= pi.upper);
    }

    #[test]
    fn smaller_p_widens_the_interval(xs in proptest::collection::vec(-10.0f64..10.0, 3..30), p in 1e-6f64..0.4) {
        let narrow = prediction_interval(&xs, 0.5).unwrap();
        let wide = prediction_interval(&xs, p).unwrap();
        prop_assert!(wide.width() >= narrow.width());
    }
}

#[test]
fn interval_of_two_points() {
    let pi = prediction_interval(&[0.0, 2.0], 0.5).unwrap();
    assert!((pi.lower - (1.0 - 3f64.sqrt())).abs() < 1e-9);
    assert!((pi.upper - (1.0 + 3f64.sqrt())).abs() < 1e-9);
}

#[test]
fn more_samples_narrow_the_interval_multiplier() {
    // fixed sd: the width shrinks as n grows
    let mut last = f64::INFINITY;
    for n in [2usize, 4, 8, 16, 64] {
        let xs: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        let pi = prediction_interval(&xs, 0.05).unwrap();
        let w = pi.width() / pi.sd;
        assert!(w < last);
        last = w;
    }
}

#[test]
fn coverage_at_the_pipeline_level() {
    let mut r = seeded(1);
    let trials = 10_000;
    let mut covered = 0;
    for _ in 0..trials {
        let xs: Vec<f64> = (0..50).map(|_| StandardNormal.sample(&mut r)).collect();
        let pi = prediction_interval(&xs, 1e-6).unwrap();
        if pi.contains(StandardNormal.sample(&mut r)) {
            covered += 1;
        }
    }
    assert!(covered as f64 / trials as f64 >= 0.999);
}

#[test]
fn null_scores_on_an_independent_target_centre_on_chance() {
    let mut r = seeded(8);
    // training scores are optimistic; enough rows keep the bias small
    let n = 1000;
    let cols = (0..5)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut r)).collect())
        .collect();
    let y = (0..n).map(|_| r.random_range(0..2) as f64).collect();
    let ds = Dataset::from_columns(cols, y, Task::Classification).unwrap();
    let params = PipelineConfig::default().comparison;
    let null = sample_null(&params, &ds, 50, &mut seeded(0)).unwrap();
    assert_eq!(null.len(), 50);
    let mean = null.scores.iter().sum::<f64>() / 50.0;
    assert!((mean - 0.5).abs() <= 0.1, "mean null score {mean}");
    assert!(null.shadow_importances.iter().all(|&v| v >= 0.0));
}

#[test]
fn null_scores_on_set1_stay_high() {
    let (ds, _) = generate(&preset("Set 1").unwrap(), &mut seeded(2)).unwrap();
    // accuracy; the pipeline's probability score sits lower by design
    let params = ForestParams {
        scoring: Scoring::Vote,
        ..PipelineConfig::default().comparison
    };
    let null = sample_null(&params, &ds, 50, &mut seeded(2)).unwrap();
    let mean = null.scores.iter().sum::<f64>() / 50.0;
    assert!(mean >= 0.95, "mean null accuracy {mean}");
}

#[test]
fn quantile_approaches_the_normal_limit() {
    assert!((t_quantile(0.975, 1_000_000).unwrap() - 1.96).abs() < 1e-3);
    assert_eq!(t_quantile(0.5, 7).unwrap(), 0.0);
}
