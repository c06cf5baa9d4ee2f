//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, FRAC_PI_4, PI};
use std::fs;
use std::time::Instant;

use ies_core::correlate::{rotate_int, AngleVector, Rotation};
use ies_core::distributions::{param_from_step, step_from_param, DistParam, DistributionKind};
use ies_core::experiments::{
    benchmark_campaign, entropy_2d, entropy_scan_1d, linspace, norm_calibration, pairwise_dominance, pmf_histogram,
    rotation_scan, sigma_step_validation, Campaign, Grouping, RotationKind, ScanGrid, ScanResult,
};
use ies_core::output::{render_run_log, scan_table, write_run_log, CsvTable, Metadata};
use ies_core::problems::{hadamard, make_hessian, HessianKind, QuadraticInstance, CONDITION_LEVELS};
use ies_core::rng::RandomSource;
use ies_core::stats::median;
use ies_core::strategies::{run, EsConfig, EsVariant};
use ies_core::{Objective, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde_json::json;

// Tolerances.
const CALIBRATION_REL_TOL: f64 = 0.03;
const L2_MIN_REL_GAP: f64 = 0.30;
const SIGMA_REL_TOL: f64 = 0.05;
const SIGMA_REL_TOL_SMALL: f64 = 0.10;
const TV_TOL: f64 = 0.01;
const DG_ROUND_TRIP_TOL: f64 = 1e-12;
const ENTROPY_MERGE_TOL: f64 = 0.1;
const ARGMAX_WINDOW: f64 = PI / 16.0;
const NOISE_SIGMAS: f64 = 3.0;
const ORTHOGONALITY_TOL: f64 = 1e-10;
const CONDITION_REL_TOL: f64 = 1e-9;
const DG_BEATS_TN_MIN_FRACTION: f64 = 0.60;

// Scales.
const POP: usize = 10_000;
const TV_DRAWS: usize = 100_000;
// A perfect sampler's expected TV at 10^5 draws grows like the square root of
// the support width and reaches about 0.01 near s = 10.
const TV_STEPS: [f64; 5] = [0.5, 1.0, 2.0, 3.0, 5.0];
const THETA_POINTS: usize = 33;
const BENCH_N: usize = 16;
const BENCH_RUNS: u64 = 15;
const BENCH_BUDGET: u64 = 10_000;
const STAGNATION_N: usize = 30;
const STAGNATION_BUDGET: u64 = 50_000;
const STAGNATION_RUNS: u64 = 15;
const SEED: u64 = 20_250_101;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn value<'a>(rows: &'a [ScanResult], stat: &str, filter: impl Fn(&ScanResult) -> bool) -> Vec<&'a ScanResult> {
    rows.iter().filter(|r| r.statistic == stat && filter(r)).collect()
}

fn theta_grid(replications: usize) -> ScanGrid {
    ScanGrid::linspace("theta", 0.0, FRAC_PI_2, THETA_POINTS, replications, POP).expect("valid grid")
}

fn c1_l1_calibration() -> Result<Outcome> {
    let mut worst = (0.0f64, String::new());
    for kind in [DistributionKind::Tn, DistributionKind::Dg] {
        for n in [2usize, 10, 30] {
            let rows = norm_calibration(kind, n, &(1..=10).collect::<Vec<_>>(), POP, SEED)?;
            for r in value(&rows, "mean_l1", |_| true) {
                let k = r.param("K").unwrap();
                let theory = 0.5 * k * (n * (n + 1)) as f64;
                let rel = (r.value().unwrap() / theory - 1.0).abs();
                if rel > worst.0 {
                    worst = (rel, format!("{kind} n={n} K={k}"));
                }
            }
        }
    }
    Ok(Outcome::new(
        worst.0 < CALIBRATION_REL_TOL,
        format!("max relative error {:.4} at {} (tol {CALIBRATION_REL_TOL})", worst.0, worst.1),
    ))
}

fn c2_l2_failure() -> Result<Outcome> {
    let mut smallest = f64::INFINITY;
    for kind in [DistributionKind::Tn, DistributionKind::Dg] {
        let rows = norm_calibration(kind, 30, &(1..=10).collect::<Vec<_>>(), POP, SEED)?;
        for r in value(&rows, "mean_l2", |_| true) {
            let theory = 0.5 * r.param("K").unwrap() * 930.0;
            smallest = smallest.min((r.value().unwrap() - theory).abs() / theory);
        }
    }
    Ok(Outcome::new(
        smallest > L2_MIN_REL_GAP,
        format!("smallest l2-vs-l1 relative gap at n=30 is {smallest:.3} (need > {L2_MIN_REL_GAP})"),
    ))
}

fn c3_sigma_step_law() -> Result<Outcome> {
    let sigmas = linspace(0.75, 20.0, 40)?;
    let rows = sigma_step_validation(&[1, 10, 30, 80], &sigmas, POP, SEED)?;
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for r in value(&rows, "empirical_l1", |_| true) {
        let (n, sigma) = (r.param("n").unwrap(), r.param("sigma").unwrap());
        let predicted = n * FRAC_2_PI.sqrt() * sigma;
        let rel = (r.value().unwrap() - predicted).abs() / predicted;
        let tol = if n == 1.0 && sigma < 2.0 { SIGMA_REL_TOL_SMALL } else { SIGMA_REL_TOL };
        worst = worst.max(rel);
        if rel >= tol {
            failures.push(format!("n={n} sigma={sigma:.3} err={rel:.3}"));
        }
    }
    let detail = if failures.is_empty() {
        format!("max relative error {worst:.4}")
    } else {
        format!("{} grid point(s) outside tolerance: {}", failures.len(), failures.join("; "))
    };
    Ok(Outcome::new(failures.is_empty(), detail))
}

fn c4_sampler_fidelity() -> Result<Outcome> {
    let mut worst = (0.0f64, String::new());
    for kind in DistributionKind::ALL {
        for s in TV_STEPS {
            let h = pmf_histogram(kind, s, TV_DRAWS, SEED)?;
            if h.total_variation > worst.0 {
                worst = (h.total_variation, format!("{kind} s={s}"));
            }
        }
    }
    let mut round_trip = 0.0f64;
    for i in 1..1000 {
        let p = i as f64 / 1000.0;
        let s = step_from_param(&DistParam::dg(p)?);
        let back = param_from_step(DistributionKind::Dg, s)?.value();
        round_trip = round_trip.max((back - p).abs());
        let s_back = step_from_param(&param_from_step(DistributionKind::Dg, s)?);
        round_trip = round_trip.max((s_back - s).abs() / s.max(1.0));
    }
    Ok(Outcome::new(
        worst.0 < TV_TOL && round_trip <= DG_ROUND_TRIP_TOL,
        format!(
            "max TV {:.5} at {} (tol {TV_TOL}); DG p<->S round trip max error {round_trip:.2e} (tol {DG_ROUND_TRIP_TOL:e})",
            worst.0, worst.1
        ),
    ))
}

fn c5_entropy_ordering() -> Result<Outcome> {
    let rows = entropy_scan_1d(&linspace(0.5, 10.0, 40)?)?;
    let dg_top = rows.iter().all(|r| r.dg > r.tn);
    let merge = rows.iter().map(|r| (r.tn - r.sb).abs()).fold(0.0, f64::max);
    let du_min = rows.iter().all(|r| r.du <= r.sb && r.du <= r.tn && r.du <= r.dg);
    Ok(Outcome::new(
        dg_top && merge < ENTROPY_MERGE_TOL && du_min,
        format!("H_DG > H_TN everywhere: {dg_top}; max |H_TN - H_SB| = {merge:.4} (tol {ENTROPY_MERGE_TOL}); H_DU minimal: {du_min}"),
    ))
}

fn c6_entropy_2d() -> Result<Outcome> {
    let mut points = 0;
    let mut violations = Vec::new();
    let mut compare = |tn: Vec<ScanResult>, dg: Vec<ScanResult>| {
        for (a, b) in tn.iter().zip(&dg).filter(|(a, _)| a.statistic == "plugin_entropy") {
            assert_eq!(a.params, b.params);
            points += 1;
            if b.value().unwrap() <= a.value().unwrap() {
                violations.push(format!("{:?}", a.params));
            }
        }
    };
    let s2_sweep = linspace(1.0, 10.0, 10)?;
    for s1 in [1.0, 2.0, 3.0, 4.0] {
        compare(
            entropy_2d(DistributionKind::Tn, s1, &s2_sweep, None, POP, SEED)?,
            entropy_2d(DistributionKind::Dg, s1, &s2_sweep, None, POP, SEED)?,
        );
    }
    let thetas = linspace(0.0, FRAC_PI_2, THETA_POINTS)?;
    let s2 = [2.0, 3.0, 4.0, 5.0];
    compare(
        entropy_2d(DistributionKind::Tn, 1.0, &s2, Some(&thetas), POP, SEED)?,
        entropy_2d(DistributionKind::Dg, 1.0, &s2, Some(&thetas), POP, SEED)?,
    );
    Ok(Outcome::new(
        violations.is_empty(),
        format!(
            "DG > TN at {}/{points} grid points{}",
            points - violations.len(),
            if violations.is_empty() { String::new() } else { format!("; violations {}", violations.join(" ")) }
        ),
    ))
}

fn c7_rotation_bias() -> Result<Outcome> {
    let grid = theta_grid(1);
    let mut ok = true;
    let mut notes = Vec::new();
    let mut strict_below = 0;
    for s2 in [2.0, 3.0, 4.0, 5.0] {
        let tn = rotation_scan(RotationKind::Tn, 1.0, s2, &grid, SEED, false)?;
        let dg = rotation_scan(RotationKind::Dg, 1.0, s2, &grid, SEED, false)?;
        let curve = |scan: &[ScanResult]| -> Vec<(f64, f64, f64)> {
            value(scan, "mean_l1", |_| true)
                .iter()
                .map(|r| (r.param("theta").unwrap(), r.value().unwrap(), r.estimate.unwrap().stderr))
                .collect()
        };
        let (tn, dg) = (curve(&tn.rows), curve(&dg.rows));
        for (name, c) in [("tn", &tn), ("dg", &dg)] {
            let argmax = c.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
            if (argmax - FRAC_PI_4).abs() > ARGMAX_WINDOW {
                ok = false;
                notes.push(format!("{name} s2={s2} argmax {argmax:.3}"));
            }
        }
        for (t, d) in tn.iter().zip(&dg) {
            // at θ = 0 and θ = π/2 both laws have mean ℓ1 = s1 + s2 exactly, so
            // the comparison allows for sampling noise of the difference
            let noise = NOISE_SIGMAS * (t.2 * t.2 + d.2 * d.2).sqrt();
            if d.1 < t.1 {
                strict_below += 1;
            }
            if d.1 < t.1 - noise {
                ok = false;
                notes.push(format!("s2={s2} theta={:.3}: dg {:.4} < tn {:.4}", t.0, d.1, t.1));
            }
        }
    }
    let ftn = rotation_scan(RotationKind::Ftn, 1.0, 3.0, &grid, SEED, false)?;
    let undefined = ftn.rows.iter().filter(|r| r.statistic == "mean_l1" && r.estimate.is_none()).count();
    if undefined == 0 {
        ok = false;
        notes.push("no FTN undefined markers".into());
    }
    Ok(Outcome::new(
        ok,
        format!(
            "argmax within pi/4 +- pi/16, DG >= TN within {NOISE_SIGMAS} SE ({strict_below} points strictly below, all within noise unless listed), {undefined} FTN undefined angle(s){}",
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    ))
}

fn c8_correlation_measures() -> Result<Outcome> {
    const REPLICATES: usize = 5;
    let grid = theta_grid(REPLICATES);
    let mut ok = true;
    let mut notes = Vec::new();
    let mut max_z0 = 0.0f64;
    let mut min_mid_z = f64::INFINITY;
    for kind in [RotationKind::Tn, RotationKind::Dg] {
        for s2 in [2.0, 3.0, 4.0, 5.0] {
            let scan = rotation_scan(kind, 1.0, s2, &grid, SEED, false)?;
            for stat in ["cov", "abscov"] {
                for r in value(&scan.rows, stat, |r| r.param("theta") == Some(0.0)) {
                    let e = r.estimate.unwrap();
                    let z = e.value.abs() / e.stderr;
                    max_z0 = max_z0.max(z);
                    if z >= NOISE_SIGMAS {
                        ok = false;
                        notes.push(format!("{kind} s2={s2} {stat} at 0: {:.4} +- {:.4}", e.value, e.stderr));
                    }
                }
                let mid: Vec<_> = value(&scan.rows, stat, |r| r.param("theta") == Some(FRAC_PI_4))
                    .iter()
                    .map(|r| r.estimate.unwrap())
                    .collect();
                let mean = mid.iter().map(|e| e.value).sum::<f64>() / mid.len() as f64;
                let se = (mid.iter().map(|e| e.stderr * e.stderr).sum::<f64>()).sqrt() / mid.len() as f64;
                let z = mean.abs() / se;
                min_mid_z = min_mid_z.min(z);
                if z <= NOISE_SIGMAS {
                    ok = false;
                    notes.push(format!("{kind} s2={s2} {stat} at pi/4 indistinguishable from 0: {mean:.4} +- {se:.4}"));
                }
            }
        }
    }
    Ok(Outcome::new(
        ok,
        format!(
            "max |value|/SE at theta=0 is {max_z0:.2} (< {NOISE_SIGMAS}); min |mean|/SE at theta=pi/4 over {REPLICATES} replicates is {min_mid_z:.1}{}",
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    ))
}

fn c9_orthogonality() -> Result<Outcome> {
    let mut rng = RandomSource::new(SEED, 9);
    let mut worst = 0.0f64;
    for n in [2usize, 3, 5, 10, 20] {
        for _ in 0..5 {
            let angles: Vec<f64> = (0..n * (n - 1) / 2).map(|_| (rng.uniform() * 2.0 - 1.0) * PI).collect();
            let r = Rotation::new(&AngleVector::new(n, angles)?).to_matrix();
            worst = worst.max((r.transpose() * &r - DMatrix::identity(n, n)).amax());
        }
    }
    let mut identity = true;
    let mut isometry = true;
    let quarter = AngleVector::new(2, vec![FRAC_PI_2])?;
    for _ in 0..10_000 {
        let z: Vec<i64> = (0..5).map(|_| rng.int_inclusive(-1000, 1000)).collect();
        identity &= rotate_int(&z, &AngleVector::zeros(5))? == z;
        let v = &z[..2];
        let r = rotate_int(v, &quarter)?;
        isometry &= r[0].abs() + r[1].abs() == v[0].abs() + v[1].abs();
    }
    Ok(Outcome::new(
        worst < ORTHOGONALITY_TOL && identity && isometry,
        format!("max |R^T R - I| = {worst:.2e} (tol {ORTHOGONALITY_TOL:e}); zero-angle identity: {identity}; quarter-turn l1 isometry: {isometry}"),
    ))
}

fn c10_instances() -> Result<Outcome> {
    let mut worst = 0.0f64;
    let mut pd = true;
    let mut zero_at_optimum = true;
    for kind in HessianKind::BENCHMARK {
        for n in [2usize, 4, 8, 16, 32, 64] {
            for c in CONDITION_LEVELS {
                let h = make_hessian(kind, n, c)?;
                let eig = SymmetricEigen::new(h).eigenvalues;
                pd &= eig.min() > 0.0;
                worst = worst.max((eig.max() / eig.min() - c).abs() / c);
                let inst = QuadraticInstance::new(kind, n, c, SEED)?;
                zero_at_optimum &= inst.value(inst.xi0()) == 0.0;
            }
        }
    }
    let h4 = hadamard(4)?;
    let hadamard_ok = &h4 * h4.transpose() == DMatrix::identity(4, 4) * 4;
    Ok(Outcome::new(
        pd && worst < CONDITION_REL_TOL && zero_at_optimum && hadamard_ok,
        format!("all PD: {pd}; max condition relative error {worst:.2e} (tol {CONDITION_REL_TOL:e}); f(xi0) = 0: {zero_at_optimum}; H4 H4^T = 4I: {hadamard_ok}"),
    ))
}

fn c11_benchmark_direction() -> Result<Outcome> {
    let campaign = Campaign::new(BENCH_N, BENCH_RUNS, BENCH_BUDGET, SEED);
    let records = benchmark_campaign(&campaign)?;
    let all = pairwise_dominance(&records, Grouping::All)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for dg in [EsVariant::CorrelatedDg, EsVariant::UncorrelatedDg] {
        let frac = all.get(dg, dg.counterpart()).unwrap();
        ok &= frac >= DG_BEATS_TN_MIN_FRACTION;
        parts.push(format!("{dg} beats {} on {:.3} of instances", dg.counterpart(), frac));
    }
    for (group, expected) in
        [(Grouping::Separable, EsVariant::UncorrelatedDg), (Grouping::NonSeparable, EsVariant::CorrelatedDg)]
    {
        let m = pairwise_dominance(&records, group)?;
        let ranking = m.ranking();
        let top = ranking[0];
        let unique = ranking[1].1 < top.1;
        ok &= top.0 == expected && unique;
        parts.push(format!(
            "{} ranking [{}] (expected {expected} first)",
            group.as_str(),
            ranking.iter().map(|(v, s)| format!("{v}:{s:.3}")).collect::<Vec<_>>().join(", ")
        ));
    }
    Ok(Outcome::new(ok, format!("{} runs; {}", records.len(), parts.join("; "))))
}

fn c12_stagnation() -> Result<Outcome> {
    let inst = QuadraticInstance::sphere(STAGNATION_N, SEED)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for v in EsVariant::ALL {
        let config = EsConfig::new(v, STAGNATION_N).with_budget(STAGNATION_BUDGET);
        let distances: Vec<f64> = (0..STAGNATION_RUNS)
            .into_par_iter()
            .map(|r| run(&inst, &config, SEED + r).map(|rec| rec.distance_to_optimum()))
            .collect::<Result<_>>()?;
        let med = median(&distances);
        let at_optimum = distances.iter().filter(|d| **d == 0.0).count();
        ok &= med > 0.0;
        parts.push(format!("{v} median {med:.3} ({at_optimum}/{STAGNATION_RUNS} at optimum)"));
    }
    Ok(Outcome::new(ok, format!("median final distance to optimum: {}", parts.join(", "))))
}

fn c13_determinism() -> Result<Outcome> {
    let dir = tempfile::tempdir()?;
    let meta = Metadata::new("acceptance", Some(SEED), json!({"pop": 2000}));
    let render = || -> Result<Vec<String>> {
        let grid = ScanGrid::linspace("theta", 0.0, FRAC_PI_2, 9, 2, 2000)?;
        let mut files = Vec::new();
        let scans: Vec<Vec<ScanResult>> = vec![
            rotation_scan(RotationKind::Dg, 1.0, 3.0, &grid, SEED, false)?.rows,
            rotation_scan(RotationKind::Ftn, 1.0, 3.0, &grid, SEED, false)?.rows,
            norm_calibration(DistributionKind::Tn, 10, &[1, 2, 3], 2000, SEED)?,
            sigma_step_validation(&[1, 10], &[0.5, 2.0], 2000, SEED)?,
            entropy_2d(DistributionKind::Dg, 1.0, &[2.0, 3.0], Some(&[0.0, 0.5]), POP, SEED)?,
        ];
        for (i, rows) in scans.iter().enumerate() {
            let path = dir.path().join(format!("scan{i}.csv"));
            scan_table(rows)?.write(&path, &meta)?;
            files.push(fs::read_to_string(&path)?);
        }
        let inst = QuadraticInstance::new(HessianKind::RotatedEllipse, 8, 1e3, SEED)?;
        for v in EsVariant::ALL {
            let rec = run(&inst, &EsConfig::new(v, 8).with_budget(3000), SEED)?;
            let path = dir.path().join(format!("{v}.jsonl"));
            write_run_log(&path, &meta, &rec)?;
            files.push(fs::read_to_string(&path)?);
            files.push(render_run_log(&meta, &rec)?);
        }
        let mut table = CsvTable::new(["k", "pmf"]);
        let h = pmf_histogram(DistributionKind::Dg, 2.0, 10_000, SEED)?;
        for r in &h.rows {
            table.push(vec![r.k.to_string(), r.empirical.to_string()]);
        }
        files.push(table.render(&meta)?);
        Ok(files)
    };
    let (a, b) = (render()?, render()?);
    Ok(Outcome::new(a == b, format!("{} files compared byte-for-byte", a.len())))
}

type Criterion = (u32, &'static str, fn() -> Result<Outcome>);

fn main() {
    let criteria: [Criterion; 13] = [
        (1, "l1 calibration", c1_l1_calibration),
        (2, "l2 failure", c2_l2_failure),
        (3, "sigma-S law", c3_sigma_step_law),
        (4, "sampler fidelity", c4_sampler_fidelity),
        (5, "entropy ordering", c5_entropy_ordering),
        (6, "2D entropy", c6_entropy_2d),
        (7, "rotation bias", c7_rotation_bias),
        (8, "correlation measures", c8_correlation_measures),
        (9, "orthogonality and identity", c9_orthogonality),
        (10, "IQP instance correctness", c10_instances),
        (11, "benchmark direction", c11_benchmark_direction),
        (12, "stagnation", c12_stagnation),
        (13, "determinism", c13_determinism),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, check) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = check().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{verdict} [{id:>2}] {name} ({:.1}s): {}", start.elapsed().as_secs_f64(), outcome.detail);
        if !outcome.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
