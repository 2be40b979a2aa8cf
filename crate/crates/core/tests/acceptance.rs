//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero when any criterion fails.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use vb_odmr::ensemble::summarize;
use vb_odmr::lattice::{cell_volume, fit_inverse_volume, regress_d_vs_vinv, LatticeRecord};
use vb_odmr::lineshape::{doublet_problem, fit_doublet, linspace, simulate_spectrum, DoubletParams};
use vb_odmr::optim::{jacobian_fd, solve, ResidualProblem, SolveOptions};
use vb_odmr::spin::{
    build_hamiltonian, eigenvalues, symmetric_eigenvalues, transitions_from_zfs, zfs_from_transitions, TransitionPair,
    ZfsParams,
};
use vb_odmr::thermal::{
    calibration_problem, eval_model, fit_calibration, invert_temperature, model_derivative, CalibrationModel, ModelKind,
    ModelParams, ModVarshniParams, Series, VarshniParams,
};

type Check = std::result::Result<String, String>;

/// SSR histories of every fit run by the suite.
#[derive(Default)]
struct Corpus {
    histories: Vec<(String, Vec<f64>)>,
}

impl Corpus {
    fn record(&mut self, label: impl Into<String>, h: &[f64]) {
        self.histories.push((label.into(), h.to_vec()));
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn transition_mapping(_: &mut Corpus) -> Check {
    let t = transitions_from_zfs(&ZfsParams::new(3480.0, 70.0).unwrap());
    ensure((t.nu1() - 3410.0).abs() <= 1e-12 && (t.nu2() - 3550.0).abs() <= 1e-12, || {
        format!("(3480, 70) -> ({}, {})", t.nu1(), t.nu2())
    })?;
    let z = zfs_from_transitions(&TransitionPair::new(3410.0, 3550.0).unwrap()).unwrap();
    ensure((z.d() - 3480.0).abs() <= 1e-12 && (z.e() - 70.0).abs() <= 1e-12, || {
        format!("(3410, 3550) -> ({}, {})", z.d(), z.e())
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    for _ in 0..10_000 {
        let d = rng.random_range(100.0..5000.0);
        let e = rng.random_range(0.0..d);
        let t = transitions_from_zfs(&ZfsParams::new(d, e).unwrap());
        ensure(t.nu1() == d - e && t.nu2() == d + e, || format!("transitions of ({d}, {e})"))?;
        let back = zfs_from_transitions(&t).unwrap();
        worst = worst.max(((back.d() - d).abs()).max((back.e() - e).abs()) / d);
    }
    ensure(worst <= 1e-12, || format!("round-trip relative error {worst:e} over 1e4 draws"))?;
    Ok(format!("exact at (3480, 70); 1e4 round trips, worst relative error {worst:.1e}"))
}

fn eigen_consistency(_: &mut Corpus) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_dev, mut worst_trace) = (0.0_f64, 0.0_f64);
    for _ in 0..1000 {
        let d = rng.random_range(1.0..5000.0);
        let e = rng.random_range(0.0..d);
        let h = build_hamiltonian(&ZfsParams::new(d, e).unwrap());
        let mut closed = [-2.0 * d / 3.0, d / 3.0 - e, d / 3.0 + e];
        closed.sort_by(f64::total_cmp);
        let numeric = symmetric_eigenvalues(h.entries());
        let scale = closed.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        let dev = closed.iter().zip(&numeric).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
        worst_dev = worst_dev.max(dev);
        worst_trace = worst_trace.max(h.trace().abs() / d);
        eigenvalues(&h).map_err(|err| format!("eigenvalues rejected (D={d}, E={e}): {err}"))?;
    }
    ensure(worst_dev <= 1e-9, || format!("eigenvalue deviation {worst_dev:e}"))?;
    ensure(worst_trace <= 1e-12, || format!("trace {worst_trace:e}"))?;
    Ok(format!("1e3 draws, worst deviation {worst_dev:.1e}, worst |trace|/D {worst_trace:.1e}"))
}

fn spectrum_fit_recovery(corpus: &mut Corpus) -> Check {
    let truth = DoubletParams { nu1: 3410.0, nu2: 3550.0, gamma1: 40.0, gamma2: 40.0, c1: 0.046, c2: 0.046, baseline: 1.0 };
    let freqs = linspace(3000.0, 4000.0, 201);
    let (mut ds, mut es, mut sds, mut ses) = (vec![], vec![], vec![], vec![]);
    let mut within = 0;
    for seed in 0..100 {
        let s = simulate_spectrum(&truth, &freqs, 2e-4, seed).unwrap();
        let fit = fit_doublet(&s, None).map_err(|e| format!("seed {seed}: {e}"))?;
        corpus.record(format!("doublet seed {seed}"), &fit.ssr_history);
        let (d, e) = (fit.zfs.d(), fit.zfs.e());
        if (d - 3480.0).abs() <= 1.0 && (e - 70.0).abs() <= 1.0 {
            within += 1;
        }
        ds.push(d);
        es.push(e);
        sds.push(fit.sigma_d);
        ses.push(fit.sigma_e);
    }
    let ratio_d = (sds.iter().sum::<f64>() / 100.0) / std_dev(&ds);
    let ratio_e = (ses.iter().sum::<f64>() / 100.0) / std_dev(&es);
    let calibrated = |r: f64| (1.0 / 1.5..=1.5).contains(&r);
    let detail = format!(
        "{within}/100 seeds within 1 MHz; reported/empirical sigma D {ratio_d:.3}, E {ratio_e:.3} (empirical {:.3}, {:.3} MHz)",
        std_dev(&ds),
        std_dev(&es)
    );
    ensure(within >= 95 && calibrated(ratio_d) && calibrated(ratio_e), || detail.clone())?;
    Ok(detail)
}

fn varshni_truth() -> VarshniParams {
    VarshniParams::new(3584.0, 1.06, 559.0).unwrap()
}

fn grid_5_600() -> Vec<f64> {
    (1..=120).map(|i| 5.0 * i as f64).collect()
}

fn varshni_self_consistency(corpus: &mut Corpus) -> Check {
    let v = varshni_truth();
    let t = grid_5_600();
    let clean: Vec<f64> = t.iter().map(|&t| 3584.0 - 1.06 * t * t / (559.0 + t)).collect();
    let m = fit_calibration(ModelKind::Varshni, &Series::new(t.clone(), clean.clone(), None).unwrap()).unwrap();
    corpus.record("varshni noiseless", &m.ssr_history);
    let f = m.varshni().unwrap();
    let worst = rel(f.d0, v.d0).max(rel(f.alpha, v.alpha)).max(rel(f.beta, v.beta));
    ensure(worst <= 1e-6, || format!("noiseless relative error {worst:e}"))?;

    let noise = Normal::new(0.0, 3.0).unwrap();
    let mut under = 0;
    let mut largest = 0.0_f64;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let y: Vec<f64> = clean.iter().map(|&d| d + noise.sample(&mut rng)).collect();
        let m = fit_calibration(ModelKind::Varshni, &Series::new(t.clone(), y.clone(), None).unwrap())
            .map_err(|e| format!("seed {seed}: {e}"))?;
        corpus.record(format!("varshni seed {seed}"), &m.ssr_history);
        let max_res = t.iter().zip(&y).map(|(&t, &y)| (eval_model(&m, t).unwrap() - y).abs()).fold(0.0, f64::max);
        largest = largest.max(max_res);
        if max_res < 12.0 {
            under += 1;
        }
    }
    let detail = format!("noiseless worst relative error {worst:.1e}; {under}/100 noisy fits with max residual < 12 MHz (largest {largest:.2})");
    ensure(under >= 95, || detail.clone())?;
    Ok(detail)
}

/// dD/dT <= 0 on a 1 K grid, by central differences of the model values.
fn decreasing_by_differences(m: &CalibrationModel, lo: f64, hi: f64) -> bool {
    let mut t = lo;
    while t <= hi {
        let a = eval_model(m, (t - 0.01).max(0.0)).unwrap();
        let b = eval_model(m, t + 0.01).unwrap();
        if b > a {
            return false;
        }
        t += 1.0;
    }
    true
}

fn monotonicity_discrimination(corpus: &mut Corpus) -> Check {
    let v = varshni_truth();
    let t = grid_5_600();
    let y: Vec<f64> = t.iter().map(|&t| v.eval(t)).collect();
    let series = Series::new(t, y, None).unwrap();

    let mv = fit_calibration(ModelKind::ModifiedVarshni, &series).unwrap();
    corpus.record("modified varshni", &mv.ssr_history);
    let b = match &mv.params {
        ModelParams::ModifiedVarshni(p) => p.b,
        _ => unreachable!(),
    };
    ensure(b < 0.0, || format!("modified Varshni fit gave B = {b}"))?;
    ensure(!mv.monotone_decreasing && !mv.warnings.is_empty(), || "B < 0 fit not flagged".into())?;
    ensure(!decreasing_by_differences(&mv, mv.t_min, mv.t_max), || "flagged fit is in fact monotone".into())?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let b = -rng.random_range(0.1..4.0);
        let a = rng.random_range(1e-4..1e-2);
        let m = CalibrationModel::from_params(
            ModelKind::ModifiedVarshni,
            ModelParams::ModifiedVarshni(ModVarshniParams { d0: 3580.0, a, b }),
            5.0,
            600.0,
        )
        .unwrap();
        ensure(!m.monotone_decreasing, || format!("A = {a}, B = {b} reported monotone"))?;
    }

    let mut poly_flags = Vec::new();
    for kind in [ModelKind::Poly3, ModelKind::Poly5] {
        let m = fit_calibration(kind, &series).unwrap();
        corpus.record(kind.as_str(), &m.ssr_history);
        let oracle = decreasing_by_differences(&m, m.t_max, 2.0 * m.t_max);
        ensure(m.extrapolation_monotone == oracle, || format!("{kind} extrapolation flag disagrees with differences"))?;
        ensure(!m.extrapolation_monotone && !m.warnings.is_empty(), || format!("{kind} extrapolation not flagged"))?;
        poly_flags.push(kind.as_str());
    }
    let vm = fit_calibration(ModelKind::Varshni, &series).unwrap();
    ensure(vm.monotone_decreasing && vm.extrapolation_monotone && vm.warnings.is_empty(), || {
        "Varshni fit flagged".into()
    })?;
    Ok(format!("modified Varshni B = {b:.3} flagged; 200 B<0 laws flagged; {} flagged beyond 600 K", poly_flags.join(", ")))
}

fn thermometry_round_trip(_: &mut Corpus) -> Check {
    let m = CalibrationModel::from_params(ModelKind::Varshni, ModelParams::Varshni(varshni_truth()), 5.0, 600.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let t = rng.random_range(5.0..=600.0);
        let inv = invert_temperature(&m, eval_model(&m, t).unwrap(), 0.0).unwrap();
        worst = worst.max((inv.temperature - t).abs());
    }
    ensure(worst <= 1e-5, || format!("round-trip error {worst:e} K"))?;

    let sigma_d = 1.0;
    let noise = Normal::new(0.0, sigma_d).unwrap();
    let mut ratios = Vec::new();
    for t0 in [100.0, 300.0, 500.0] {
        let d0 = eval_model(&m, t0).unwrap();
        let temps: Vec<f64> = (0..4000)
            .map(|_| invert_temperature(&m, d0 + noise.sample(&mut rng), sigma_d).unwrap().temperature)
            .collect();
        let inv = invert_temperature(&m, d0, sigma_d).unwrap();
        let reported = inv.sigma_t;
        let predicted = sigma_d / model_derivative(&m, inv.temperature).unwrap().abs();
        ensure(rel(reported, predicted) < 1e-12, || format!("sigma_T at {t0} K is {reported}, expected {predicted}"))?;
        let r = std_dev(&temps) / reported;
        ensure((0.8..=1.2).contains(&r), || format!("Monte-Carlo/reported sigma_T at {t0} K = {r:.3}"))?;
        ratios.push(format!("{r:.3}"));
    }
    Ok(format!("1e3 round trips, worst {worst:.1e} K; Monte-Carlo/reported sigma_T at 100/300/500 K: {}", ratios.join("/")))
}

fn hbn_like_records() -> Vec<LatticeRecord> {
    // 1/V falls by about 0.1 % between 10 and 300 K; a is held fixed and c
    // carries the expansion.
    let a = 2.504;
    let v0 = 1.0 / cell_volume(&LatticeRecord { t: 0.0, a, c: 6.661 });
    let alpha = v0 * 1e-3 * 600.0 / 90_000.0;
    (1..=30)
        .map(|i| {
            let t = 10.0 * i as f64;
            let vinv = v0 - alpha * t * t / (300.0 + t);
            LatticeRecord::new(t, a, 2.0 / (3f64.sqrt() * a * a * vinv)).unwrap()
        })
        .collect()
}

fn vinv_regression(corpus: &mut Corpus) -> Check {
    let records = hbn_like_records();
    let vm = fit_inverse_volume(&records).map_err(|e| e.to_string())?;
    corpus.record("inverse volume", &vm.ssr_history);
    let drop = 1.0 - eval_model(&vm, 300.0).unwrap() / eval_model(&vm, 10.0).unwrap();
    ensure(vm.monotone_decreasing && (5e-4..2e-3).contains(&drop), || format!("V^-1 drop {drop:e}"))?;

    let temps: Vec<f64> = records.iter().map(|r| r.t).collect();
    let vinv_true: Vec<f64> = records.iter().map(|r| 1.0 / cell_volume(r)).collect();
    let mean = vinv_true.iter().sum::<f64>() / vinv_true.len() as f64;
    let sxx: f64 = vinv_true.iter().map(|v| (v - mean).powi(2)).sum();

    let mut parts = Vec::new();
    for (slope, band) in [(500.02, 8.34), (727.90, 6.94)] {
        let intercept = 3.48 - slope * vinv_true[0];
        let clean: Vec<f64> = vinv_true.iter().map(|v| (slope * v + intercept) * 1e3).collect();
        let (r, _) = regress_d_vs_vinv(&Series::new(temps.clone(), clean.clone(), None).unwrap(), &vm)
            .map_err(|e| e.to_string())?;
        let err = rel(r.slope, slope);
        ensure(err <= 1e-3, || format!("noiseless slope {} vs {slope}", r.slope))?;

        // Noise level at which the OLS slope standard error equals the band.
        let sigma_mhz = band * sxx.sqrt() * 1e3;
        let noise = Normal::new(0.0, sigma_mhz).unwrap();
        let mut inside = 0;
        let mut sigmas = Vec::new();
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(7000 + seed);
            let y: Vec<f64> = clean.iter().map(|d| d + noise.sample(&mut rng)).collect();
            let (r, _) = regress_d_vs_vinv(&Series::new(temps.clone(), y, None).unwrap(), &vm).unwrap();
            if (r.slope - slope).abs() <= band {
                inside += 1;
            }
            sigmas.push(r.slope_sigma);
        }
        let med = median(&sigmas);
        ensure(inside >= 55 && rel(med, band) <= 0.1, || {
            format!("slope {slope}: {inside}/100 within ±{band}, median sigma {med:.2}")
        })?;
        parts.push(format!(
            "{slope}: noiseless error {err:.1e}, {inside}/100 within ±{band} at noise {sigma_mhz:.3} MHz, median sigma {med:.2}"
        ));
    }
    Ok(parts.join("; "))
}

fn ensemble_statistics(_: &mut Corpus) -> Check {
    let s = summarize(&[1.0, 2.0, 3.0], 1.0).unwrap();
    ensure(s.mean == 2.0 && (s.sem - 0.5774).abs() < 5e-5, || format!("{{1,2,3}}: mean {}, sem {}", s.mean, s.sem))?;

    let dist = Normal::new(3460.8, 5.66).unwrap();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    let mut inside = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(8000 + seed);
        let v: Vec<f64> = (0..50).map(|_| dist.sample(&mut rng)).collect();
        let s = summarize(&v, 5.0).unwrap();
        ensure(rel(s.sem, std_dev(&v) / 50f64.sqrt()) < 1e-12, || format!("seed {seed}: sem {}", s.sem))?;
        ensure(s.histogram.iter().map(|b| b.count).sum::<usize>() == 50, || format!("seed {seed}: histogram count"))?;
        lo = lo.min(s.sem);
        hi = hi.max(s.sem);
        if (0.56..=1.04).contains(&s.sem) {
            inside += 1;
        }
    }
    let detail = format!("{{1,2,3}} exact; sem range over 100 seeds [{lo:.3}, {hi:.3}] MHz, {inside}/100 within 0.8 ± 30%");
    ensure(inside == 100, || detail.clone())?;
    Ok(detail)
}

/// `y = c0 + c1 x + c2 x^2 + c3 sin(x)`, linear in the coefficients.
struct LinearBasis {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl LinearBasis {
    fn design(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.x.len(), 4, |i, k| {
            let x = self.x[i];
            [1.0, x, x * x, x.sin()][k]
        })
    }
}

impl ResidualProblem for LinearBasis {
    fn num_params(&self) -> usize {
        4
    }
    fn num_residuals(&self) -> usize {
        self.x.len()
    }
    fn residuals(&self, theta: &[f64]) -> DVector<f64> {
        self.design() * DVector::from_column_slice(theta) - DVector::from_column_slice(&self.y)
    }
    fn jacobian(&self, _: &[f64]) -> Option<DMatrix<f64>> {
        Some(self.design())
    }
}

fn jacobian_gap<P: ResidualProblem>(p: &P, theta: &[f64]) -> f64 {
    let analytic = p.jacobian(theta).unwrap();
    let fd = jacobian_fd(p, theta).unwrap();
    (&analytic - &fd).amax() / analytic.amax().max(1.0)
}

fn optimizer_oracles(corpus: &mut Corpus) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let noise = Normal::new(0.0, 0.3).unwrap();
    let mut worst_linear = 0.0_f64;
    for _ in 0..20 {
        let x: Vec<f64> = (0..40).map(|_| rng.random_range(-3.0..3.0)).collect();
        let y: Vec<f64> = x.iter().map(|&x| 2.0 - 0.5 * x + 0.25 * x * x + 1.5 * x.sin() + noise.sample(&mut rng)).collect();
        let p = LinearBasis { x, y };
        let a = p.design();
        let normal = (a.transpose() * &a).cholesky().unwrap().solve(&(a.transpose() * DVector::from_column_slice(&p.y)));
        let rep = solve(&p, &[0.0; 4], &SolveOptions::default()).map_err(|e| e.to_string())?;
        corpus.record("linear basis", &rep.ssr_history);
        let gap = rep.theta.iter().zip(normal.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / normal.amax();
        worst_linear = worst_linear.max(gap);
    }
    ensure(worst_linear <= 1e-10, || format!("linear problems off by {worst_linear:e}"))?;

    let mut worst_jac = Vec::new();
    let truth = DoubletParams { nu1: 3410.0, nu2: 3550.0, gamma1: 40.0, gamma2: 55.0, c1: 0.046, c2: 0.03, baseline: 1.0 };
    let spectrum = simulate_spectrum(&truth, &linspace(3000.0, 4000.0, 201), 2e-4, 3).unwrap();
    let dp = doublet_problem(&spectrum);
    let mut g = 0.0_f64;
    for shift in [0.0, 7.0, -13.0] {
        let th = DoubletParams { nu1: truth.nu1 + shift, gamma2: truth.gamma2 - shift, ..truth }.to_array();
        g = g.max(jacobian_gap(&dp, &th));
    }
    worst_jac.push(("doublet", g));

    let t = grid_5_600();
    let y: Vec<f64> = t.iter().map(|&t| varshni_truth().eval(t)).collect();
    let series = Series::new(t, y, None).unwrap();
    let points: [(ModelKind, Vec<Vec<f64>>); 5] = [
        (ModelKind::Varshni, vec![vec![3584.0, 1.06, 559.0], vec![3500.0, 0.3, 80.0]]),
        (ModelKind::ModifiedVarshni, vec![vec![3569.0, 9.2e-4, -4.4], vec![3580.0, 2e-3, 150.0]]),
        (ModelKind::Poly3, vec![vec![3472.0, -183.0, -51.0, 18.0]]),
        (ModelKind::Poly5, vec![vec![3471.0, -182.5, -45.5, 15.6, -6.5, 2.3]]),
        (ModelKind::Linear, vec![vec![3629.5, -0.578]]),
    ];
    for (kind, thetas) in points {
        let p = calibration_problem(kind, &series);
        let g = thetas.iter().map(|th| jacobian_gap(&p, th)).fold(0.0, f64::max);
        worst_jac.push((kind.as_str(), g));
    }
    for (name, g) in &worst_jac {
        ensure(*g <= 1e-6, || format!("{name} Jacobian differs from central differences by {g:e}"))?;
    }
    let jac_max = worst_jac.iter().map(|(_, g)| *g).fold(0.0, f64::max);

    let mut steps = 0;
    for (label, h) in &corpus.histories {
        steps += h.len().saturating_sub(1);
        ensure(h.windows(2).all(|w| w[1] <= w[0]), || format!("SSR increased during {label}"))?;
    }
    Ok(format!(
        "linear worst {worst_linear:.1e}; Jacobian worst {jac_max:.1e} over 6 families; {steps} accepted steps in {} fits non-increasing",
        corpus.histories.len()
    ))
}

fn main() {
    type Criterion = (&'static str, fn(&mut Corpus) -> Check, u64);
    let criteria: [Criterion; 9] = [
        ("transition mapping", transition_mapping, 1),
        ("eigen consistency", eigen_consistency, 1),
        ("spectrum fit recovery", spectrum_fit_recovery, 30),
        ("Varshni self-consistency", varshni_self_consistency, 30),
        ("monotonicity discrimination", monotonicity_discrimination, 10),
        ("thermometry round trip", thermometry_round_trip, 10),
        ("inverse-volume regression", vinv_regression, 10),
        ("ensemble statistics", ensemble_statistics, 5),
        ("optimizer oracles", optimizer_oracles, 10),
    ];
    let mut corpus = Corpus::default();
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = check(&mut corpus);
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > Duration::from_secs(limit) => Err(format!("{detail}; exceeded {limit} s")),
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("{tag} {} {name} [{:.2} s / {limit} s] {detail}", i + 1, elapsed.as_secs_f64());
        if outcome.is_err() {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 9 acceptance criteria passed");
}
