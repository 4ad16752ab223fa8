use influence_core::analysis::crossover_time;
use influence_core::{
    classify_regime, correlate, dominant_term, eval_solution, yearly_summary, Dominance, Error, ModelParams, Regime, TimeSeries,
    REGIME_TOLERANCE,
};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (-2.0..=2.0_f64, -2.0..=2.0_f64, 0.0..=5.0_f64).prop_map(|(a, b, c)| ModelParams::new(a, b, c).unwrap())
}

fn series(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0..100.0_f64, len)
}

proptest! {
    #[test]
    fn classification_ignores_c_and_joint_sign_flip(p in params(), c in 0.0..=10.0_f64) {
        let regime = classify_regime(&p, REGIME_TOLERANCE);
        prop_assert_eq!(regime, classify_regime(&ModelParams { c, ..p }, REGIME_TOLERANCE));
        prop_assert_eq!(regime, classify_regime(&ModelParams { a: -p.a, b: -p.b, c: p.c }, REGIME_TOLERANCE));
        let expected = if p.a.abs() > p.b.abs() { Regime::Exponential } else { Regime::Oscillatory };
        if (p.a.abs() - p.b.abs()).abs() > 1e-6 {
            prop_assert_eq!(regime, expected);
        }
    }

    #[test]
    fn crossover_splits_dominance(p in params()) {
        prop_assume!(p.c > 0.01 && classify_regime(&p, REGIME_TOLERANCE) == Regime::Exponential);
        if let Some(t) = crossover_time(&p).unwrap() {
            prop_assert_eq!(dominant_term(&p, t).unwrap(), Dominance::Balanced);
            prop_assert_eq!(dominant_term(&p, t + 0.5).unwrap(), Dominance::GrowingTerm);
            prop_assert_eq!(dominant_term(&p, t - 0.5).unwrap(), Dominance::DecayingTerm);
        } else {
            let d = dominant_term(&p, 0.0).unwrap();
            prop_assert_eq!(d, dominant_term(&p, 10.0).unwrap());
            prop_assert_eq!(d, dominant_term(&p, -10.0).unwrap());
        }
    }

    #[test]
    fn correlation_is_symmetric(xs in series(12), ys in series(12)) {
        let times: Vec<f64> = (0..12).map(f64::from).collect();
        let x = TimeSeries::new(times.clone(), xs).unwrap();
        let y = TimeSeries::new(times, ys).unwrap();
        let (Ok(xy), Ok(yx)) = (correlate(&x, &y), correlate(&y, &x)) else { return Ok(()) };
        prop_assert!((xy.pearson - yx.pearson).abs() <= 1e-12);
        prop_assert!((-1.0..=1.0).contains(&xy.pearson));
        prop_assert!((xy.slope * yx.slope - xy.pearson * xy.pearson).abs() <= 1e-9);
        prop_assert_eq!(xy.n, 12);
    }

    #[test]
    fn correlation_recovers_exact_lines(xs in series(8), slope in -5.0..5.0_f64, intercept in -5.0..5.0_f64) {
        let times: Vec<f64> = (0..8).map(f64::from).collect();
        let x = TimeSeries::new(times.clone(), xs.clone()).unwrap();
        let y = TimeSeries::new(times, xs.iter().map(|v| slope * v + intercept).collect()).unwrap();
        let r = correlate(&x, &y).unwrap();
        prop_assert!((r.slope - slope).abs() <= 1e-9);
        prop_assert!((r.intercept - intercept).abs() <= 1e-7);
    }

    #[test]
    fn summary_accounts_for_every_point(values in series(40), window in 0.3..5.0_f64) {
        let times: Vec<f64> = (0..40).map(|k| k as f64 * 0.37).collect();
        let s = TimeSeries::new(times, values).unwrap();
        let rows = yearly_summary(&s, window).unwrap();
        prop_assert_eq!(rows.iter().map(|r| r.count).sum::<usize>(), 40);
        prop_assert!(rows.windows(2).all(|w| w[0].window_start < w[1].window_start));
        for row in &rows {
            prop_assert!(row.count > 0 && row.stddev >= 0.0);
            for &(t, v) in &row.outliers {
                prop_assert!(t >= row.window_start - 1e-9 && t < row.window_start + window);
                prop_assert!((v - row.mean).abs() > 2.0 * row.stddev);
            }
        }
    }
}

#[test]
fn growth_dominates_a_journal_solution_eventually() {
    let p = ModelParams::new(0.8, 0.3, 1.0).unwrap();
    assert_eq!(dominant_term(&p, 20.0).unwrap(), Dominance::GrowingTerm);
    assert!(eval_solution(&p, 20.0).unwrap() > 1e5);
}

#[test]
fn correlation_fixtures() {
    let x = TimeSeries::from_points([(0.0, 1.0), (1.0, 2.0), (2.0, 3.0)]).unwrap();
    let y = TimeSeries::from_points([(0.0, 3.0), (1.0, 5.0), (2.0, 7.0)]).unwrap();
    let r = correlate(&x, &y).unwrap();
    assert!((r.slope - 2.0).abs() <= 1e-12 && (r.intercept - 1.0).abs() <= 1e-12 && (r.pearson - 1.0).abs() <= 1e-12);
    let flat = TimeSeries::from_points([(0.0, 2.0), (1.0, 2.0), (2.0, 2.0)]).unwrap();
    assert_eq!(correlate(&flat, &y), Err(Error::ZeroVariance));
}
