//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`cargo test --test acceptance`). Set
//! `ACCEPTANCE_ONLY=<substring>` to run a subset.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use statrs::distribution::{Beta, ContinuousCDF, Normal};

use bibeta::bayes::{sbc, AugmentedPosterior, HmcConfig, PriorSpec, SbcConfig};
use bibeta::bivariate::{density, moments_of, sample, solve_four_moments, AlphaParams};
use bibeta::diagnostics::{gn_test, m_test, MTestOptions};
use bibeta::estimators::Method;
use bibeta::experiments::{
    run_misspecified, run_well_specified, sampling_distribution, time_estimators, ExperimentSpec, Generator,
    LogitNormal, Statistic,
};
use bibeta::quadrature::{integrate, Tolerance};
use bibeta::rng::{child_rng, child_seed, rng_from_seed};
use bibeta::stats::{ks_p_value, ks_statistic, mean, pearson, variance};
use bibeta::Exec;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed <= limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:.1?}, limit {limit:?}"))
    }
}

fn moment_round_trip() -> Outcome {
    let mut rng = rng_from_seed(101);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let a: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.2..10.0));
        let m = moments_of(&AlphaParams::from_array(a).unwrap());
        let sol = solve_four_moments(m.m1, m.m2, m.v1, m.rho).map_err(|e| e.to_string())?;
        for k in 0..4 {
            worst = worst.max((sol.alpha[k] - a[k]).abs());
        }
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    check(worst < 1e-9, format!("max abs error {worst:.2e} in {:.1?}", start.elapsed()))
}

/// ∬ f over the unit square: inner integrals split where Ω changes shape.
fn total_mass(alpha: &AlphaParams) -> Result<f64, String> {
    let tol = Tolerance { abs: 0.0, rel: 1e-8, max_intervals: 200 };
    let inner = |x: f64| -> f64 {
        let (a, b) = (x.min(1.0 - x), x.max(1.0 - x));
        [(0.0, a), (a, b), (b, 1.0)]
            .iter()
            .map(|&(lo, hi)| integrate(|y| density(alpha, x, y).unwrap_or(f64::NAN), lo, hi, tol).map(|r| r.value))
            .sum::<Result<f64, _>>()
            .unwrap_or(f64::NAN)
    };
    let halves = [(0.0, 0.5), (0.5, 1.0)];
    let mut total = 0.0;
    for (lo, hi) in halves {
        total += integrate(inner, lo, hi, tol).map_err(|e| e.to_string())?.value;
    }
    Ok(total)
}

fn density_normalization() -> Outcome {
    let start = Instant::now();
    let mut masses = Vec::new();
    for a in [[2.0, 3.0, 4.0, 5.0], [1.5; 4], [2.0, 7.0, 3.0, 1.0]] {
        masses.push(total_mass(&AlphaParams::from_array(a).unwrap())?);
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    let ok = masses.iter().all(|m| (m - 1.0).abs() <= 1e-3);
    check(ok, format!("masses {masses:.6?} in {:.1?}", start.elapsed()))
}

fn density_spot_check() -> Outcome {
    let f = density(&AlphaParams::new(1.0, 1.0, 1.0, 1.0).unwrap(), 0.5, 0.25).map_err(|e| e.to_string())?;
    check((f - 1.5).abs() <= 1e-6, format!("f(0.5, 0.25) = {f:.12}"))
}

fn sampling_correctness() -> Outcome {
    let alpha = AlphaParams::new(2.0, 7.0, 3.0, 1.0).unwrap();
    let n = 100_000;
    let s = sample(&alpha, n, 2);
    let truth = moments_of(&alpha).to_array();
    let moments = |xs: &[f64], ys: &[f64]| [mean(xs), mean(ys), variance(xs), variance(ys), pearson(xs, ys)];
    let full = moments(s.xs(), s.ys());
    // Monte Carlo standard errors from 100 batch estimates
    let batches = 100;
    let size = n / batches;
    let per_batch: Vec<[f64; 5]> = (0..batches)
        .map(|b| moments(&s.xs()[b * size..(b + 1) * size], &s.ys()[b * size..(b + 1) * size]))
        .collect();
    let mut z = [0.0; 5];
    for j in 0..5 {
        let col: Vec<f64> = per_batch.iter().map(|m| m[j]).collect();
        let se = (variance(&col) / batches as f64).sqrt();
        z[j] = (full[j] - truth[j]) / se;
    }
    let bx = Beta::new(9.0, 4.0).unwrap();
    let by = Beta::new(5.0, 8.0).unwrap();
    let px = ks_p_value(ks_statistic(s.xs(), |x| bx.cdf(x)), n);
    let py = ks_p_value(ks_statistic(s.ys(), |y| by.cdf(y)), n);
    let ok = z.iter().all(|v| v.abs() < 3.0) && px > 0.01 && py > 0.01;
    check(ok, format!("z-scores {z:.2?}, KS p-values {px:.3} / {py:.3}"))
}

fn table_a1() -> Outcome {
    let start = Instant::now();
    let mut spec = ExperimentSpec::new(Generator::BivariateBeta { alpha: [1.0; 4] }, 200, 200, vec![Method::MM1]);
    spec.bootstrap = Some(200);
    spec.seed = 303;
    let t = run_well_specified(&spec).map_err(|e| e.to_string())?;
    within(start.elapsed(), Duration::from_secs(600))?;
    let rows: Vec<_> = (1..=4).map(|k| t.row(Method::MM1, &format!("alpha{k}")).unwrap()).collect();
    let mape: Vec<f64> = rows.iter().map(|r| r.mape).collect();
    let cov: Vec<f64> = rows.iter().map(|r| r.coverage.unwrap_or(f64::NAN)).collect();
    let ok = mape.iter().all(|m| (0.07..=0.14).contains(m)) && cov.iter().all(|c| (0.90..=0.98).contains(c));
    check(ok, format!("MAPE {mape:.3?}, coverage {cov:.3?} in {:.1?}", start.elapsed()))
}

fn table_a2() -> Outcome {
    let start = Instant::now();
    let mut spec = ExperimentSpec::new(Generator::BivariateBeta { alpha: [2.0, 7.0, 3.0, 1.0] }, 50, 100, vec![Method::BE1]);
    spec.seed = 404;
    let t = run_well_specified(&spec).map_err(|e| e.to_string())?;
    within(start.elapsed(), Duration::from_secs(1800))?;
    let a1 = t.row(Method::BE1, "alpha1").unwrap();
    let a2 = t.row(Method::BE1, "alpha2").unwrap();
    let (c1, c2) = (a1.coverage.unwrap_or(f64::NAN), a2.coverage.unwrap_or(f64::NAN));
    let ok = a2.bias < 0.0 && c2 < c1;
    check(
        ok,
        format!("alpha2 bias {:.3}, coverage alpha1 {c1:.3} vs alpha2 {c2:.3}, failed {} in {:.1?}", a2.bias, a2.failed, start.elapsed()),
    )
}

fn misspecified_1() -> Outcome {
    let g = LogitNormal::experiment1();
    let mut spec = ExperimentSpec::new(Generator::LogitNormal { mu: g.mu, sigma: g.sigma }, 50, 200, vec![Method::MM1]);
    spec.seed = 505;
    let t = run_misspecified(&spec).map_err(|e| e.to_string())?;
    let mape = t.row(Method::MM1, "rho").unwrap().mape;
    let gen = Generator::LogitNormal { mu: g.mu, sigma: g.sigma };
    let d = sampling_distribution(Statistic::Pn, &gen, 50, 2000, 506, Exec::default()).map_err(|e| e.to_string())?;
    let outside = d.outside_0_02.unwrap();
    check(mape > 1.0 && (outside - 0.5).abs() <= 0.05, format!("MM1 rho MAPE {mape:.3}, P(Pn outside [0,0.2]) {outside:.3}"))
}

fn misspecified_2() -> Outcome {
    let g = LogitNormal::experiment2();
    let mut spec = ExperimentSpec::new(
        Generator::LogitNormal { mu: g.mu, sigma: g.sigma },
        50,
        200,
        vec![Method::MM1, Method::MM2, Method::MM3],
    );
    spec.seed = 606;
    let t = run_misspecified(&spec).map_err(|e| e.to_string())?;
    let b1 = t.row(Method::MM3, "m1").unwrap().bias;
    let b2 = t.row(Method::MM3, "m2").unwrap().bias;
    let v_mm1 = t.row(Method::MM1, "v2").unwrap().mape;
    let v_mm2 = t.row(Method::MM2, "v2").unwrap().mape;
    let ok = b1.abs() < 0.01 && b2.abs() < 0.01 && v_mm1 > v_mm2;
    check(ok, format!("MM3 mean bias {b1:.4} / {b2:.4}, v2 MAPE MM1 {v_mm1:.3} vs MM2 {v_mm2:.3}"))
}

fn gn_calibration() -> Outcome {
    let alpha = AlphaParams::new(2.0, 3.0, 7.0, 1.0).unwrap();
    let reps = 500;
    let mut p_values = Vec::with_capacity(reps);
    for r in 0..reps {
        let s = sample(&alpha, 200, child_seed(707, r as u64));
        p_values.push(gn_test(&s).map_err(|e| e.to_string())?.p_value);
    }
    let size = p_values.iter().filter(|&&p| p < 0.05).count() as f64 / reps as f64;
    let ks_p = ks_p_value(ks_statistic(&p_values, |p| p.clamp(0.0, 1.0)), reps);
    let gen = Generator::BivariateBeta { alpha: alpha.to_array() };
    let d = sampling_distribution(Statistic::GnZ, &gen, 30, 1000, 708, Exec::default()).map_err(|e| e.to_string())?;
    let normal = Normal::standard();
    let ks_z = ks_statistic(&d.values, |z| normal.cdf(z));
    let ok = (0.02..=0.09).contains(&size) && ks_p > 0.01 && ks_z < 0.08;
    check(ok, format!("size {size:.3}, KS p of p-values {ks_p:.3}, KS distance of z at n=30 {ks_z:.3}"))
}

fn m_test_size() -> Outcome {
    let reps = 500;
    let mut rejections = 0;
    let mut undefined = 0;
    for r in 0..reps {
        let mut rng = child_rng(808, r as u64);
        let a: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.01..=0.5));
        let s = sample(&AlphaParams::from_array(a).unwrap(), 50, child_seed(809, r as u64));
        match m_test(&s, &MTestOptions::default()) {
            Ok(rep) => rejections += usize::from(rep.reject),
            // no four-moment solution at all: counted against the test
            Err(_) => {
                undefined += 1;
                rejections += 1;
            }
        }
    }
    let rate = rejections as f64 / reps as f64;
    check(rate <= 0.08, format!("rejection rate {rate:.3} ({undefined} without a solution)"))
}

fn gradient_check() -> Outcome {
    let mut rng = rng_from_seed(909);
    let mut worst = 0.0f64;
    for state in 0..100 {
        let theta: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.5..1.5));
        let alpha = AlphaParams::from_array(theta.map(f64::exp)).unwrap();
        let n = rng.random_range(2..30);
        let data = sample(&alpha, n, child_seed(910, state));
        let prior = if state % 2 == 0 {
            PriorSpec::gamma_iid(1.0, 1.0).unwrap()
        } else {
            PriorSpec::uniform_exponential(20.0, 0.9).unwrap()
        };
        let post = AugmentedPosterior::new(&data, prior).map_err(|e| e.to_string())?;
        let mut q: Vec<f64> = theta.to_vec();
        q.extend((0..n).map(|_| rng.random_range(-3.0..3.0)));
        let mut grad = vec![0.0; q.len()];
        post.log_density_and_gradient(&q, &mut grad);
        let h = 1e-6;
        for j in 0..q.len() {
            let (mut hi, mut lo) = (q.clone(), q.clone());
            hi[j] += h;
            lo[j] -= h;
            let fd = (post.log_density(&hi) - post.log_density(&lo)) / (2.0 * h);
            worst = worst.max((fd - grad[j]).abs() / grad[j].abs().max(1.0));
        }
    }
    check(worst < 1e-5, format!("max relative error {worst:.2e}"))
}

fn sbc_uniformity() -> Outcome {
    let start = Instant::now();
    let config = SbcConfig {
        prior: PriorSpec::gamma_iid(1.0, 1.0).unwrap().truncated_below(0.5).unwrap(),
        n: 50,
        bins: 19,
        experiments: 200,
        hmc: HmcConfig::default(),
        seed: 1010,
        exec: Exec::default(),
    };
    let r = sbc(&config).map_err(|e| e.to_string())?;
    within(start.elapsed(), Duration::from_secs(7200))?;
    let ok = r.p_values.iter().all(|p| *p > 0.005);
    check(
        ok,
        format!("p-values {:.3?}, {} failed, {} divergent transitions in {:.1?}", r.p_values, r.failed, r.divergences.iter().sum::<usize>(), start.elapsed()),
    )
}

fn runtime_ordering() -> Outcome {
    let alpha = AlphaParams::new(2.0, 7.0, 3.0, 1.0).unwrap();
    let rows = time_estimators(&alpha, 50, 200, &[Method::MM1, Method::MM2, Method::MM4], 1111).map_err(|e| e.to_string())?;
    let t: Vec<f64> = rows.iter().map(|r| r.median_seconds).collect();
    check(t[0] < t[2] && t[1] < t[2], format!("median seconds MM1 {:.2e}, MM2 {:.2e}, MM4 {:.2e}", t[0], t[1], t[2]))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("moment round trip", moment_round_trip),
        ("density normalization", density_normalization),
        ("density spot check", density_spot_check),
        ("sampling correctness", sampling_correctness),
        ("well-specified MM1 table", table_a1),
        ("BE1 shrinkage on alpha2", table_a2),
        ("misspecified experiment 1", misspecified_1),
        ("misspecified experiment 2", misspecified_2),
        ("G_n calibration", gn_calibration),
        ("M test size", m_test_size),
        ("posterior gradient", gradient_check),
        ("simulation-based calibration", sbc_uniformity),
        ("estimator runtime ordering", runtime_ordering),
    ];
    let only = std::env::var("ACCEPTANCE_ONLY").ok();
    let mut failures = 0;
    for (name, run) in criteria {
        if only.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        match run() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
