//! Acceptance suite. Runs every criterion in sequence, prints one PASS/FAIL
//! line per criterion and exits non-zero if any failed.
//!
//! `cargo test -p typlab --test acceptance`

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use serde_json::Value;
use typlab::experiments::least_squares_slope;
use typlab::record::csv_body;
use typlab::{ConfigFile, RunRecord};
use typlab_core::tolerances::MC_SIGMAS;
use typlab_core::{
    decompose, ensemble_density, exact_var_conditional_expectation, fourier_linear, linear_spectrum_diagonal,
    mc_decompose, mc_var_conditional_expectation, population_drift, projector, purity, purity_drift, random_density,
    random_hermitian, reimann_bound, sample_state, total_variance, AmplitudeProfile, Ensemble,
    Hamiltonian, Observable, RandomSeed,
};

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run_experiment(toml: &str) -> RunRecord {
    let (cfg, opts) = ConfigFile::parse(toml).unwrap().resolve(None).unwrap();
    typlab::run(&cfg, &opts).unwrap()
}

fn closed_form(n: usize) -> f64 {
    (n * n - 1) as f64 / (12.0 * n as f64)
}

fn random_profile(n: usize, alpha: f64, seed: u64, index: u64) -> AmplitudeProfile {
    AmplitudeProfile::dirichlet(&vec![alpha; n], RandomSeed::new(seed, 11), index).unwrap()
}

/// One of each catalog observable at dimension `n`.
fn catalog(n: usize) -> Vec<(String, Observable)> {
    vec![
        ("diag-linear".into(), linear_spectrum_diagonal(n, 0.0, 1.0).unwrap()),
        ("fourier-linear".into(), fourier_linear(n).unwrap()),
        ("projector:0".into(), projector(n, 0).unwrap()),
        ("random-hermitian".into(), random_hermitian(n, RandomSeed::new(0, 0)).unwrap()),
    ]
}

fn c1_minimum_purity() -> Check {
    for n in 2..=1024usize {
        let u = AmplitudeProfile::uniform(n).unwrap();
        let target = 1.0 / n as f64;
        ensure((u.purity() - target).abs() <= 1e-12, || format!("N = {n}: purity {} != 1/N", u.purity()))?;
        // The dense route is O(N^2); spot-check it.
        if n.is_power_of_two() || n % 97 == 0 {
            let rho = ensemble_density(&Ensemble::fixed(u)).unwrap();
            let q = purity(&rho);
            ensure((q - target).abs() <= 1e-12, || format!("N = {n}: tr rho^2 = {q} != 1/N"))?;
        }
    }
    let mut min = f64::INFINITY;
    for i in 0..10_000u64 {
        let alpha = [0.05, 0.3, 1.0, 5.0, 50.0][(i % 5) as usize];
        min = min.min(random_profile(16, alpha, 1, i).purity());
    }
    ensure(min >= 1.0 / 16.0 - 1e-12, || format!("simplex search found purity {min}"))?;
    Ok(format!("purity(uniform) = 1/N for N = 2..1024; min over 1e4 simplex points at N = 16 is {min:.6}"))
}

fn c2_bound() -> Check {
    let mut worst: f64 = 0.0;
    for i in 0..1000u64 {
        let n = 2 + (i % 31) as usize;
        let p = random_profile(n, [0.2, 1.0, 4.0][(i % 3) as usize], 2, i);
        let a = match i % 4 {
            0 => fourier_linear(n).unwrap(),
            _ => random_hermitian(n, RandomSeed::new(2, i)).unwrap(),
        };
        let v = exact_var_conditional_expectation(&p, &a).unwrap();
        let bound = reimann_bound(&ensemble_density(&Ensemble::fixed(p)).unwrap(), &a).unwrap();
        ensure(v <= bound + 1e-10, || format!("pair {i}: {v} > {bound}"))?;
        worst = worst.max(v / bound);
    }
    let rec = run_experiment("experiment = \"bound\"\nseed = 2\n");
    let violations = rec.summary["violations"].as_u64().unwrap();
    ensure(violations == 0 && rec.failures.is_empty(), || format!("bound experiment: {violations} violations"))?;
    Ok(format!("1000 pairs, N = 2..32, max sigma^2/bound = {worst:.4}; bound experiment 1000 cells, 0 violations"))
}

fn c3_zero_witness() -> Check {
    let mut max_mc: f64 = 0.0;
    let mut cases = 0;
    for n in [2usize, 3, 8, 16, 64] {
        let diagonals = [
            linear_spectrum_diagonal(n, 0.0, 1.0).unwrap(),
            linear_spectrum_diagonal(n, -3.5, 0.25).unwrap(),
            projector(n, n - 1).unwrap(),
            Observable::diagonal(&(0..n).map(|k| ((k * 7919) % 13) as f64 - 6.0).collect::<Vec<_>>()).unwrap(),
        ];
        for (k, d) in diagonals.iter().enumerate() {
            for profile in [AmplitudeProfile::uniform(n).unwrap(), random_profile(n, 1.0, 3, k as u64)] {
                let exact = exact_var_conditional_expectation(&profile, d).unwrap();
                ensure(exact == 0.0, || format!("N = {n}: exact {exact}"))?;
                let mc = mc_var_conditional_expectation(&Ensemble::fixed(profile), d, 10_000, RandomSeed::new(3, k as u64))
                    .unwrap();
                ensure(mc.value <= 1e-20, || format!("N = {n}: mc {}", mc.value))?;
                max_mc = max_mc.max(mc.value);
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} diagonal cases: exact = 0, max MC at 1e4 samples = {max_mc:e}"))
}

fn c4_large_witness_and_scaling() -> Check {
    for n in [2usize, 4, 8] {
        let f = fourier_linear(n).unwrap();
        let u = AmplitudeProfile::uniform(n).unwrap();
        let exact = exact_var_conditional_expectation(&u, &f).unwrap();
        let m = f.matrix();
        let mut brute = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    brute += m[(i, j)].norm_sqr();
                }
            }
        }
        brute /= (n * n) as f64;
        let cf = closed_form(n);
        ensure((exact - cf).abs() <= 1e-9 * cf && (brute - cf).abs() <= 1e-9 * cf, || {
            format!("N = {n}: exact {exact}, brute {brute}, closed {cf}")
        })?;
        let mc = mc_var_conditional_expectation(&Ensemble::fixed(u), &f, 100_000, RandomSeed::new(4, n as u64)).unwrap();
        ensure(mc.agrees_with(cf, 4.0), || format!("N = {n}: mc {} +- {}", mc.value, mc.std_error))?;
    }

    let rec = run_experiment("experiment = \"scaling\"\n");
    ensure(rec.failures.is_empty(), || format!("{:?}", rec.failures))?;
    let mut points = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for c in &rec.cells {
        let n = c["n"].as_u64().unwrap() as usize;
        let v = c["var_conditional_expectation"].as_f64().unwrap();
        let pur = c["purity"].as_f64().unwrap();
        let range_sq = c["spectral_range_sq"].as_f64().unwrap();
        let expect_sq = ((n - 1) * (n - 1)) as f64;
        ensure((v - closed_form(n)).abs() <= 1e-9 * closed_form(n), || format!("N = {n}: {v}"))?;
        ensure((pur - 1.0 / n as f64).abs() <= 1e-12, || format!("N = {n}: purity {pur}"))?;
        ensure((range_sq - expect_sq).abs() <= 1e-9 * expect_sq, || format!("N = {n}: range^2 {range_sq}"))?;
        if let Some((pp, pr)) = prev {
            ensure(pur < pp && range_sq > pr, || format!("N = {n}: purity or range^2 not monotone"))?;
        }
        prev = Some((pur, range_sq));
        points.push((n as f64, v));
    }
    let ns: Vec<f64> = points.iter().map(|p| p.0).collect();
    ensure(ns == [64.0, 128.0, 256.0, 512.0, 1024.0], || format!("dims {ns:?}"))?;
    let slope = least_squares_slope(&points).unwrap();
    ensure((1.0 / 13.0..=1.0 / 11.0).contains(&slope), || format!("slope {slope}"))?;
    Ok(format!(
        "closed form = brute force = MC (4 SE) at N = 2,4,8; slope over 64..1024 = {slope:.6}; purity down, range^2 = (N-1)^2 up"
    ))
}

fn c5_dichotomy() -> Check {
    let out = Command::new(env!("CARGO_BIN_EXE_typlab"))
        .args(["dichotomy", "--dims", "8", "--format", "json"])
        .env_remove("TYPLAB_SEED")
        .output()
        .unwrap();
    ensure(out.status.code() == Some(0), || format!("exit code {:?}", out.status.code()))?;
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let cells = v["cells"].as_array().unwrap();
    let values: Vec<f64> = cells.iter().map(|c| c["var_conditional_expectation"].as_f64().unwrap()).collect();
    let bounds: Vec<f64> = cells.iter().map(|c| c["reimann_bound"].as_f64().unwrap()).collect();
    ensure(values.len() == 2 && values[0].abs() <= 1e-9 && (values[1] - 0.65625).abs() <= 1e-9, || {
        format!("values {values:?}")
    })?;
    ensure(bounds.iter().all(|b| (b - 6.125).abs() <= 1e-9), || format!("bounds {bounds:?}"))?;
    Ok(format!("N = 8: sigma^2 = {} and {}, shared bound {}, exit 0", values[0], values[1], bounds[0]))
}

fn c6_total_variance() -> Check {
    let mut worst: f64 = 0.0;
    for i in 0..500u64 {
        let n = 1 + (i % 24) as usize;
        let ens = match i % 5 {
            4 => Ensemble::haar(n).unwrap(),
            _ => Ensemble::fixed(random_profile(n, 0.5 + (i % 3) as f64, 6, i)),
        };
        let a = random_hermitian(n, RandomSeed::new(6, i)).unwrap();
        let r = decompose(&ens, &a).unwrap();
        let rel = r.decomposition_residual() / r.total_variance.abs().max(f64::MIN_POSITIVE);
        ensure(r.decomposition_residual() == 0.0 || rel <= 1e-10, || format!("instance {i}: relative residual {rel:e}"))?;
        worst = worst.max(if r.decomposition_residual() == 0.0 { 0.0 } else { rel });
    }

    let mut mc_cases = 0;
    for n in [2usize, 4, 8] {
        let ensembles =
            [Ensemble::fixed(AmplitudeProfile::uniform(n).unwrap()), Ensemble::fixed(random_profile(n, 1.0, 6, 0)), Ensemble::haar(n).unwrap()];
        for ens in &ensembles {
            for (name, a) in catalog(n) {
                let exact = total_variance(ens, &a).unwrap();
                let r = mc_decompose(ens, &a, 100_000, RandomSeed::new(6, mc_cases)).unwrap();
                let se = r.std_errors.unwrap().total_variance;
                let sum = r.var_conditional_expectation + r.expected_conditional_variance;
                ensure((sum - exact).abs() <= MC_SIGMAS * se + 1e-14, || {
                    format!("{} N = {n} {name}: mc {sum} vs exact {exact} (se {se:e})", ens.kind_name())
                })?;
                mc_cases += 1;
            }
        }
    }

    for n in [1usize, 2, 5, 16] {
        for k in 0..n {
            let ens = Ensemble::fixed(AmplitudeProfile::pure(n, k).unwrap());
            for (name, a) in catalog(n) {
                let r = decompose(&ens, &a).unwrap();
                ensure(r.var_conditional_expectation == 0.0, || format!("pure N = {n} k = {k} {name}"))?;
            }
        }
    }
    let rec = run_experiment("experiment = \"decompose\"\nensemble = \"gmc-pure\"\ndims = [4, 8]\n");
    ensure(rec.failures.is_empty(), || format!("{:?}", rec.failures))?;
    for c in &rec.cells {
        ensure(c["exact"]["var_conditional_expectation"].as_f64() == Some(0.0), || format!("pure row {c}"))?;
    }
    Ok(format!(
        "500 instances, worst relative residual {worst:e}; {mc_cases} MC cases within 4 combined SE; pure rows term1 = 0"
    ))
}

fn c7_conservation() -> Check {
    let times: Vec<f64> = (0..=25).map(|k| 4.0 * k as f64).collect();
    let (mut worst_purity, mut worst_pop): (f64, f64) = (0.0, 0.0);
    for i in 0..200u64 {
        let n = 2 + ((i * 37) % 63) as usize;
        let h = match i % 10 {
            // Degenerate spectra: occupations are judged per eigenspace.
            9 => projector(n, 0).unwrap(),
            8 => fourier_linear(n).unwrap(),
            _ => random_hermitian(n, RandomSeed::new(7, i)).unwrap(),
        };
        let h = Hamiltonian::new(h);
        if i % 2 == 0 {
            let rho = random_density(n, RandomSeed::new(7, 1000 + i)).unwrap();
            let d = purity_drift(&rho, &h, &times).unwrap();
            ensure(d <= 1e-10, || format!("instance {i}: purity drift {d:e}"))?;
            worst_purity = worst_purity.max(d);
        } else {
            let psi = sample_state(&Ensemble::haar(n).unwrap(), RandomSeed::new(7, 2000 + i), 0).unwrap();
            let d = population_drift(&psi, &h, &times).unwrap().conserved_drift();
            ensure(d <= 1e-10, || format!("instance {i}: population drift {d:e}"))?;
            worst_pop = worst_pop.max(d);
        }
    }
    let rec = run_experiment("experiment = \"dynamics\"\n[dynamics]\nt_max = 100.0\ninstances = 5\n");
    ensure(rec.failures.is_empty(), || format!("{:?}", rec.failures))?;
    Ok(format!("200 instances, N <= 64, t in [0, 100]: max purity drift {worst_purity:e}, max population drift {worst_pop:e}"))
}

fn c8_oracle_gate() -> Check {
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    for n in [2usize, 4, 8] {
        let u = AmplitudeProfile::uniform(n).unwrap();
        let ens = Ensemble::fixed(u.clone());
        for (name, a) in catalog(n) {
            let exact = exact_var_conditional_expectation(&u, &a).unwrap();
            let hits = (0..100u64)
                .filter(|s| {
                    mc_var_conditional_expectation(&ens, &a, 100_000, RandomSeed::new(*s, 0))
                        .unwrap()
                        .agrees_with(exact, MC_SIGMAS)
                })
                .count();
            lines.push(format!("N={n} {name} {hits}/100"));
            if hits < 95 {
                failed.push(format!("N = {n} {name}: {hits}/100"));
            }
        }
    }
    ensure(failed.is_empty(), || failed.join("; "))?;
    Ok(lines.join(", "))
}

fn c9_determinism() -> Check {
    let runs: &[&[&str]] = &[
        &["scaling"],
        &["scaling", "--dims", "2,4,8", "--mode", "both", "--samples", "50000"],
        &["dichotomy", "--mode", "both"],
        &["bound"],
        &["decompose"],
        &["decompose", "--ensemble", "dirichlet:1.5", "--dims", "3,5"],
        &["dynamics"],
    ];
    let invoke = |args: &[&str], workers: &str, format: &str| -> String {
        let out = Command::new(env!("CARGO_BIN_EXE_typlab"))
            .args(args)
            .args(["--workers", workers, "--format", format])
            .env_remove("TYPLAB_SEED")
            .output()
            .unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    let numbers = |s: String| {
        let mut v: Value = serde_json::from_str(&s).unwrap();
        v.as_object_mut().unwrap().remove("metadata");
        v
    };
    for args in runs {
        let csv = csv_body(&invoke(args, "1", "csv"));
        let json = numbers(invoke(args, "1", "json"));
        for workers in ["1", "4", "8"] {
            ensure(csv_body(&invoke(args, workers, "csv")) == csv, || format!("{args:?} csv at {workers} workers"))?;
            ensure(numbers(invoke(args, workers, "json")) == json, || format!("{args:?} json at {workers} workers"))?;
        }
    }
    Ok(format!("{} configurations: byte-identical CSV bodies and equal JSON at workers 1, 4, 8", runs.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 minimum purity", Duration::from_secs(10), c1_minimum_purity),
        ("2 bound property", Duration::from_secs(30), c2_bound),
        ("3 zero witness", Duration::from_secs(5), c3_zero_witness),
        ("4 large witness and scaling", Duration::from_secs(120), c4_large_witness_and_scaling),
        ("5 observable dependence", Duration::from_secs(1), c5_dichotomy),
        ("6 law of total variance", Duration::from_secs(60), c6_total_variance),
        ("7 conservation", Duration::from_secs(60), c7_conservation),
        ("8 exact-vs-MC oracle gate", Duration::from_secs(120), c8_oracle_gate),
        ("9 determinism", Duration::MAX, c9_determinism),
    ];
    let mut failures = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = result.and_then(|msg| {
            if elapsed <= limit {
                Ok(msg)
            } else {
                Err(format!("took {elapsed:.2?}, limit {limit:?}; {msg}"))
            }
        });
        match result {
            Ok(msg) => println!("PASS criterion {name} [{elapsed:.2?}]: {msg}"),
            Err(msg) => {
                failures += 1;
                println!("FAIL criterion {name} [{elapsed:.2?}]: {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
