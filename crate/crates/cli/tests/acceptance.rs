//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use influence_core::plot::sweep_curves;
use influence_core::{
    correlate, decode_model_document, eval_solution, eval_solution_derivative, finite_difference, fit, integrate,
    load_timeseries_csv, render_sweep, solution_coefficients, write_timeseries_csv, Error, Eta, FitOptions, ForcingSpec,
    GoodwillSpec, ModelParams, Scheme, SweepLabel, TimeSeries, REGIME_TOLERANCE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| start + (end - start) * k as f64 / (n - 1) as f64).collect()
}

fn params(a: f64, b: f64, c: f64) -> ModelParams {
    ModelParams::new(a, b, c).unwrap()
}

fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
    params(rng.random_range(-2.0..=2.0), rng.random_range(-2.0..=2.0), rng.random_range(0.0..=5.0))
}

fn closed_form_residual() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let times = grid(-5.0, 5.0, 1001);
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..200 {
        let p = random_params(&mut rng);
        let (mut residual, mut peak): (f64, f64) = (0.0, 0.0);
        for &t in &times {
            let v = eval_solution(&p, t).map_err(|e| e.to_string())?;
            let dv = eval_solution_derivative(&p, t).map_err(|e| e.to_string())?;
            let mirror = eval_solution(&p, -t).map_err(|e| e.to_string())?;
            residual = residual.max((dv - p.a * v - p.b * mirror).abs());
            peak = peak.max(v.abs());
        }
        let bound = 1e-9 * (1.0 + peak);
        ensure(residual <= bound, || format!("{p:?}: residual {residual:e} > {bound:e}"))?;
        worst_ratio = worst_ratio.max(residual / bound);
    }
    Ok(format!("200 params, worst residual at {:.1}% of bound", 100.0 * worst_ratio))
}

fn regime_closed_forms() -> Outcome {
    let pi = std::f64::consts::PI;
    // (params, half-width, exact solution, relative tolerance)
    type Check = (ModelParams, f64, fn(f64) -> f64, bool);
    let checks: [Check; 3] = [
        (params(0.0, 1.0, 1.0), pi, |t| t.cos() + t.sin(), false),
        (params(1.0, 1.0, 2.0), 3.0, |t| 2.0 * (1.0 + 2.0 * t), false),
        (params(5.0, 3.0, 2.0), 1.0, |t| 3.0 * (4.0 * t).exp() - (-4.0 * t).exp(), true),
    ];
    let mut worst = [0.0_f64; 3];
    for (i, (p, half, exact, relative)) in checks.iter().enumerate() {
        for t in grid(-half, *half, 2001) {
            let got = eval_solution(p, t).map_err(|e| e.to_string())?;
            let want = exact(t);
            let err = if *relative { (got - want).abs() / want.abs() } else { (got - want).abs() };
            let tol = if *relative { 1e-9 } else { 1e-12 };
            ensure(err <= tol, || format!("{p:?} at t = {t}: {got} vs {want}"))?;
            worst[i] = worst[i].max(err);
        }
    }
    Ok(format!("max errors {:.1e} / {:.1e} / {:.1e} (rel)", worst[0], worst[1], worst[2]))
}

fn integrator_error(p: &ModelParams, h: f64) -> Result<(f64, f64), String> {
    let tr = integrate(p, &ForcingSpec::none(), 5.0, h).map_err(|e| e.to_string())?;
    let mut err: f64 = 0.0;
    for (k, v) in tr.values().iter().enumerate() {
        err = err.max((v - eval_solution(p, tr.time(k)).map_err(|e| e.to_string())?).abs());
    }
    Ok((err, tr.max_abs()))
}

fn integrator_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut drawn = 0;
    while drawn < 50 {
        let p = random_params(&mut rng);
        if (p.growth() * p.skew()).abs() > 4.0 {
            continue;
        }
        drawn += 1;
        let (err, peak) = integrator_error(&p, 1e-3)?;
        ensure(err <= 1e-6 * (1.0 + peak), || format!("{p:?}: error {err:e}, peak {peak}"))?;
    }
    // At h = 1e-3 the truncation error is already near rounding level, so the
    // fourth-order ratio is measured where truncation dominates.
    let mut ratios = Vec::new();
    while ratios.len() < 20 {
        let p = random_params(&mut rng);
        let s = p.growth() * p.skew();
        if s.abs() > 4.0 || s.abs() < 0.1 || p.c < 0.1 {
            continue;
        }
        let (coarse, _) = integrator_error(&p, 0.05)?;
        let (fine, _) = integrator_error(&p, 0.025)?;
        ensure(coarse / fine >= 12.0, || format!("{p:?}: halving ratio {}", coarse / fine))?;
        ratios.push(coarse / fine);
    }
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(format!("50 params within tolerance, min halving ratio {min:.2}"))
}

fn forced_quadrature() -> Outcome {
    let forcing = ForcingSpec { theta: Some(GoodwillSpec::new(1.0, 0.0).unwrap()), eta: Eta::Absent };
    let tr = integrate(&params(0.0, 0.0, 0.0), &forcing, 1.0, 1e-3).map_err(|e| e.to_string())?;
    let err = (tr.last() - (1.0 - (-1.0_f64).exp())).abs();
    ensure(err <= 1e-6, || format!("p(1) = {}, error {err:e}", tr.last()))?;
    Ok(format!("p(1) error {err:.1e}"))
}

fn relative_errors(est: &ModelParams, truth: &ModelParams) -> [f64; 3] {
    let e = |x: f64, y: f64| if y == 0.0 { x.abs() } else { (x - y).abs() / y.abs() };
    [e(est.a, truth.a), e(est.b, truth.b), e(est.c, truth.c)]
}

fn sample(p: &ModelParams, times: &[f64]) -> TimeSeries {
    TimeSeries::sample(times, |t| eval_solution(p, t).unwrap()).unwrap()
}

fn fit_recovery() -> Outcome {
    let opts = FitOptions::default();
    let cases = [(params(0.8, 0.3, 1.0), grid(0.0, 5.0, 51)), (params(0.0, 1.0, 1.0), grid(0.0, 2.0 * std::f64::consts::PI, 63))];
    for (truth, times) in &cases {
        let r = fit(&sample(truth, times), None, &opts).map_err(|e| e.to_string())?;
        let errs = relative_errors(&r.params, truth);
        ensure(r.converged && errs.iter().all(|&e| e <= 1e-3), || format!("{truth:?}: {r:?}"))?;
    }

    // Noisy trials: 30 random parameter sets, error measured on the
    // identified coordinates (a + b, a − b, c), median per coordinate.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let times = grid(0.0, 5.0, 51);
    let mut errors: [Vec<f64>; 3] = Default::default();
    while errors[0].len() < 30 {
        let truth = params(rng.random_range(-1.5..=1.5), rng.random_range(-1.5..=1.5), rng.random_range(0.5..=5.0));
        if (truth.growth() * truth.skew()).abs() > 2.0 {
            continue;
        }
        let clean = sample(&truth, &times);
        let peak = clean.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let noise = Normal::new(0.0, 0.01 * peak).unwrap();
        let values = clean.values().iter().map(|v| v + noise.sample(&mut rng)).collect();
        let noisy = TimeSeries::new(times.clone(), values).unwrap();
        let r = fit(&noisy, None, &opts).map_err(|e| e.to_string())?;
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
        errors[0].push(rel(r.params.growth(), truth.growth()));
        errors[1].push(rel(r.params.skew(), truth.skew()));
        errors[2].push(rel(r.params.c, truth.c));
    }
    let medians = errors.map(|mut e| {
        e.sort_by(f64::total_cmp);
        0.5 * (e[14] + e[15])
    });
    ensure(medians.iter().all(|&m| m <= 0.05), || format!("median relative errors {medians:?}"))?;
    let median = medians.into_iter().fold(0.0, f64::max);
    Ok(format!("both noiseless cases within 1e-3, noisy medians (a+b, a-b, c) all <= {:.2}%", 100.0 * median))
}

fn fd_error(scheme: Scheme, h: f64) -> f64 {
    let n = (1.0 / h).round() as usize;
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
    let d = finite_difference(&TimeSeries::sample(&times, f64::exp).unwrap(), scheme).unwrap();
    d.points().map(|(t, v)| (v - t.exp()).abs()).fold(0.0, f64::max)
}

fn finite_difference_orders() -> Outcome {
    let mut min = [f64::INFINITY; 3];
    for h in [0.1, 0.05, 0.025, 0.0125] {
        for (i, scheme) in [Scheme::Forward, Scheme::Backward, Scheme::Central].into_iter().enumerate() {
            let ratio = fd_error(scheme, h) / fd_error(scheme, h / 2.0);
            let needed = if scheme == Scheme::Central { 3.6 } else { 1.9 };
            ensure(ratio >= needed, || format!("{scheme:?} at h = {h}: ratio {ratio}"))?;
            min[i] = min[i].min(ratio);
        }
    }
    Ok(format!("min ratios forward {:.2}, backward {:.2}, central {:.2}", min[0], min[1], min[2]))
}

fn figure_shapes() -> Outcome {
    let both_positive = params(-2.0, 1.0, 1.0);
    let mixed = params(-2.0, -1.0, 1.0);
    let k1 = solution_coefficients(&both_positive, REGIME_TOLERANCE).map_err(|e| e.to_string())?;
    let k2 = solution_coefficients(&mixed, REGIME_TOLERANCE).map_err(|e| e.to_string())?;
    ensure(k1.w1 > 0.0 && k1.w2 > 0.0 && k2.w1 < 0.0 && k2.w2 > 0.0, || format!("coefficient signs {k1:?} {k2:?}"))?;

    let sweep = [both_positive, mixed];
    let svg = render_sweep(&both_positive, SweepLabel::W1W2Signs, &sweep, 3.0, 0.01).map_err(|e| e.to_string())?;
    ensure(svg.matches("<polyline").count() == 2, || "sweep does not draw two curves".into())?;
    let curves = sweep_curves(&sweep, 3.0, 0.01).map_err(|e| e.to_string())?;
    let slopes = |c: &TimeSeries| c.values().windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>();

    let d = slopes(&curves[0]);
    let turn = d.iter().position(|&x| x > 0.0).ok_or("first curve never increases")?;
    ensure(turn > 0 && d[..turn].iter().all(|&x| x < 0.0), || "first curve has no interior minimum".into())?;
    ensure(d[turn..].iter().all(|&x| x > 0.0), || "first curve is not eventually increasing".into())?;
    let d = slopes(&curves[1]);
    ensure(d[0] < 0.0 && d.iter().all(|&x| x < 0.0), || "second curve is not decreasing".into())?;

    let linear = &sweep_curves(&[params(1.0, 1.0, 1.0)], 5.0, 0.05).map_err(|e| e.to_string())?[0];
    let second = linear.values().windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]).abs()).fold(0.0, f64::max);
    ensure(second <= 1e-9, || format!("linear curve second difference {second:e}"))?;
    Ok(format!(
        "minimum at t = {:.2} then increasing; mixed-sign curve decreasing; linear second difference {second:.1e}",
        curves[0].times()[turn]
    ))
}

fn correlation_fixture() -> Outcome {
    let x = TimeSeries::from_points([(0.0, 1.0), (1.0, 2.0), (2.0, 3.0)]).unwrap();
    let y = TimeSeries::from_points([(0.0, 3.0), (1.0, 5.0), (2.0, 7.0)]).unwrap();
    let r = correlate(&x, &y).map_err(|e| e.to_string())?;
    ensure((r.slope - 2.0).abs() <= 1e-12 && (r.intercept - 1.0).abs() <= 1e-12 && (r.pearson - 1.0).abs() <= 1e-12, || {
        format!("{r:?}")
    })?;
    let flat = TimeSeries::from_points([(0.0, 4.0), (1.0, 4.0), (2.0, 4.0)]).unwrap();
    ensure(correlate(&flat, &y) == Err(Error::ZeroVariance), || "constant x did not raise ZeroVariance".into())?;
    Ok(format!("slope {}, intercept {}, pearson {}; constant x -> ZeroVariance", r.slope, r.intercept, r.pearson))
}

struct Run {
    trajectory: Vec<u8>,
    document: Vec<u8>,
    fit_report: Vec<u8>,
    classify_report: Vec<u8>,
}

fn invoke(args: &[&str]) -> Result<Vec<u8>, String> {
    let output = Command::new(env!("CARGO_BIN_EXE_influence")).args(args).output().map_err(|e| e.to_string())?;
    ensure(output.status.success(), || {
        format!("`influence {}` failed: {}", args.join(" "), String::from_utf8_lossy(&output.stderr))
    })?;
    Ok(output.stdout)
}

fn round_trip(dir: &Path) -> Result<Run, String> {
    let p = |name: &str| dir.join(name).to_str().unwrap().to_string();
    fs::write(p("model.toml"), "a = 0.8\nb = 0.3\nc = 1.0\n").map_err(|e| e.to_string())?;
    invoke(&["simulate", "--model", &p("model.toml"), "--T", "5", "--h", "0.001", "--out", &p("traj.csv")])?;
    let fit_report = invoke(&["fit", "--data", &p("traj.csv"), "--out", &p("fit.toml")])?;
    let classify_report = invoke(&["classify", "--model", &p("fit.toml")])?;
    Ok(Run {
        trajectory: fs::read(p("traj.csv")).map_err(|e| e.to_string())?,
        document: fs::read(p("fit.toml")).map_err(|e| e.to_string())?,
        fit_report,
        classify_report,
    })
}

fn cli_round_trip() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let first = round_trip(dirs[0].path())?;
    let second = round_trip(dirs[1].path())?;

    let doc = decode_model_document(std::str::from_utf8(&first.document).unwrap()).map_err(|e| e.to_string())?;
    let errs = relative_errors(&doc.params, &params(0.8, 0.3, 1.0));
    ensure(errs.iter().all(|&e| e <= 1e-3), || format!("fitted {:?}", doc.params))?;
    let regime = String::from_utf8_lossy(&first.classify_report);
    ensure(regime.lines().next() == Some("Exponential"), || format!("classify printed {regime:?}"))?;
    ensure(
        first.trajectory == second.trajectory
            && first.document == second.document
            && first.fit_report == second.fit_report
            && first.classify_report == second.classify_report,
        || "outputs differ between runs".into(),
    )?;
    let worst = errs.into_iter().fold(0.0, f64::max);
    Ok(format!("max relative error {worst:.1e}, prints Exponential, two runs byte-identical"))
}

fn random_series(rng: &mut ChaCha8Rng) -> TimeSeries {
    let n = rng.random_range(1..=50);
    let mut t: f64 = rng.random_range(-1e3..1e3);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let v = match rng.random_range(0..4) {
            0 => rng.random_range(-1e6..1e6),
            1 => f64::from_bits(rng.random::<u64>() & !(0x7ff << 52) | (rng.random_range(1..0x7fe_u64) << 52)),
            2 => rng.random_range(-1.0..1.0) * 1e-300,
            _ => rng.random_range(0..1000) as f64,
        };
        points.push((t, v));
        t += rng.random_range(1e-6..10.0);
    }
    TimeSeries::from_points(points).unwrap()
}

fn io_contracts() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for case in 0..1000 {
        let series = random_series(&mut rng);
        let text = write_timeseries_csv(&series).map_err(|e| e.to_string())?;
        let back = load_timeseries_csv(&text).map_err(|e| format!("case {case}: {e}"))?;
        ensure(back == series, || format!("case {case} did not round-trip"))?;
    }

    let fixtures: [(&str, Error); 5] = [
        ("t,value\n1,2.0\n0,1.0\n", Error::NonMonotonicTime { line: 3 }),
        ("t,value\n", Error::EmptyBody),
        ("time,value\n0,1\n", Error::MalformedHeader { found: "time,value".into() }),
        ("t,value\n0,abc\n", Error::NonNumericField { line: 2, reason: String::new() }),
        ("t,value\n0,1\n1,2\n2,3,4\n", Error::NonNumericField { line: 4, reason: String::new() }),
    ];
    for (text, expected) in &fixtures {
        let got = load_timeseries_csv(text).err();
        let ok = match (&got, expected) {
            (Some(Error::NonNumericField { line, .. }), Error::NonNumericField { line: want, .. }) => line == want,
            (got, want) => got.as_ref() == Some(want),
        };
        ensure(ok, || format!("{text:?}: expected {expected:?}, got {got:?}"))?;
    }

    let documents: [(&str, &str); 4] = [
        ("a = 1\nb = 2\n", "c"),
        ("a = 1\nb = 2\nc = 1\nextra = 0\n", "extra"),
        ("a = 1\nb = true\nc = 1\n", "b"),
        ("a = 1\nb = 2\nc = 1\n[forcing]\nkappa = 1\nalpha = 0\neta = \"x\"\n", "forcing.eta"),
    ];
    for (text, want) in documents {
        let path = match decode_model_document(text) {
            Err(Error::MissingField { path } | Error::UnknownField { path } | Error::TypeMismatch { path, .. }) => path,
            other => return Err(format!("{text:?}: {other:?}")),
        };
        ensure(path == want, || format!("{text:?}: reported `{path}`, expected `{want}`"))?;
    }
    Ok("1000 CSV round trips exact; 5 CSV and 4 document fixtures located".into())
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 10] = [
        ("closed-form solution satisfies the equation", closed_form_residual, Duration::from_secs(1)),
        ("regime closed forms", regime_closed_forms, Duration::from_secs(1)),
        ("integrator agrees with the closed form", integrator_agreement, Duration::from_secs(10)),
        ("forced integration quadrature", forced_quadrature, Duration::from_secs(1)),
        ("fit recovery", fit_recovery, Duration::from_secs(30)),
        ("finite-difference orders", finite_difference_orders, Duration::from_secs(1)),
        ("figure shapes", figure_shapes, Duration::from_secs(1)),
        ("correlation", correlation_fixture, Duration::from_secs(1)),
        ("CLI round trip", cli_round_trip, Duration::from_secs(10)),
        ("I/O contracts", io_contracts, Duration::from_secs(5)),
    ];
    let mut failures = 0;
    for (i, (name, check, budget)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            if elapsed <= budget {
                Ok(detail)
            } else {
                Err(format!("{detail}; took {elapsed:.2?}, budget {budget:?}"))
            }
        });
        match outcome {
            Ok(detail) => println!("PASS  {:>2}. {name}: {detail} [{elapsed:.2?}]", i + 1),
            Err(reason) => {
                failures += 1;
                println!("FAIL  {:>2}. {name}: {reason} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
