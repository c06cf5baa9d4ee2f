//! Monte-Carlo scans and benchmark aggregation.
//!
//! Every scan is a pure function of its arguments and a seed. Grid points are
//! evaluated in parallel, each on its own random stream, and results are
//! returned in grid order, so output is identical regardless of the number
//! of worker threads.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_2_PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlate::{
    build_ftn_covariance, gen_uncorrelated, uncorrelated_mutation, AngleVector, FtnSampler, Rotation, StepSizeVector,
};
use crate::distributions::{
    self, entropy_exact, entropy_tn_approx, param_from_step, pmf_exact, round_half_away, support_window, tn_pmf_approx,
    DistParam, DistributionKind, DEFAULT_TAIL_EPS,
};
use crate::error::{Error, Result};
use crate::problems::{benchmark_suite, HessianKind};
use crate::rng::{stream_id, RandomSource};
use crate::stats::{median, Accumulator};
use crate::strategies::{run, EsConfig, EsVariant, RunRecord};

const TAG_CALIBRATE: u64 = 1;
const TAG_SIGMA: u64 = 2;
const TAG_HISTOGRAM: u64 = 3;
const TAG_ROTATE: u64 = 4;
const TAG_ENTROPY_2D: u64 = 5;

/// Tail mass left out of histogram tables.
pub const HISTOGRAM_TAIL_EPS: f64 = 1e-7;

/// A sweep over one named parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub parameter: String,
    pub values: Vec<f64>,
    pub replications: usize,
    pub pop: usize,
}

impl ScanGrid {
    pub fn new(parameter: impl Into<String>, values: Vec<f64>, replications: usize, pop: usize) -> Result<Self> {
        if values.is_empty() || values.windows(2).any(|w| w[0] >= w[1] || w[0].is_nan()) {
            return Err(Error::InvalidConfig("grid values must be non-empty and strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("grid values must be finite".into()));
        }
        if pop == 0 || replications == 0 {
            return Err(Error::InvalidConfig("population size and replication count must be positive".into()));
        }
        Ok(Self { parameter: parameter.into(), values, replications, pop })
    }

    /// `points` evenly spaced values from `from` to `to` inclusive.
    pub fn linspace(
        parameter: impl Into<String>,
        from: f64,
        to: f64,
        points: usize,
        replications: usize,
        pop: usize,
    ) -> Result<Self> {
        Self::new(parameter, linspace(from, to, points)?, replications, pop)
    }
}

pub fn linspace(from: f64, to: f64, points: usize) -> Result<Vec<f64>> {
    match points {
        0 => Err(Error::InvalidConfig("a grid needs at least one point".into())),
        1 => Ok(vec![from]),
        _ => {
            let step = (to - from) / (points - 1) as f64;
            Ok((0..points).map(|i| if i == points - 1 { to } else { from + step * i as f64 }).collect())
        }
    }
}

/// A point estimate with its standard error (zero for exact values).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0 }
    }
}

/// One statistic at one grid point. `estimate` is `None` where the quantity
/// is undefined (forced-normal rotations near the degenerate angle).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub series: String,
    pub params: Vec<(String, f64)>,
    pub statistic: String,
    pub estimate: Option<Estimate>,
}

impl ScanResult {
    fn new(series: &str, params: &[(&str, f64)], statistic: &str, estimate: Option<Estimate>) -> Self {
        Self {
            series: series.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            statistic: statistic.to_string(),
            estimate,
        }
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn value(&self) -> Option<f64> {
        self.estimate.map(|e| e.value)
    }
}

/// Exact running moments of integer observations.
#[derive(Clone, Copy, Debug, Default)]
struct IntMoments {
    count: u64,
    sum: i128,
    sum_sq: i128,
}

impl IntMoments {
    fn push(&mut self, x: i64) {
        self.count += 1;
        self.sum += x as i128;
        self.sum_sq += (x as i128) * (x as i128);
    }

    fn estimate(&self) -> Estimate {
        let n = self.count as i128;
        let value = self.sum as f64 / self.count as f64;
        if n < 2 {
            return Estimate { value, stderr: 0.0 };
        }
        let scaled_var = (n * self.sum_sq - self.sum * self.sum) as f64;
        let variance = scaled_var / (n * (n - 1)) as f64;
        Estimate { value, stderr: (variance / self.count as f64).sqrt() }
    }
}

fn l1(z: &[i64]) -> i64 {
    z.iter().map(|x| x.saturating_abs()).sum()
}

fn from_accumulator(acc: &Accumulator) -> Estimate {
    Estimate { value: acc.mean(), stderr: acc.std_error() }
}

fn require_pop(pop: usize, min: usize, scan: &str) -> Result<()> {
    if pop < min {
        return Err(Error::InvalidConfig(format!("{scan} needs pop >= {min}, got {pop}")));
    }
    Ok(())
}

fn require_tn_or_dg(kind: DistributionKind) -> Result<()> {
    match kind {
        DistributionKind::Tn | DistributionKind::Dg => Ok(()),
        other => Err(Error::UnsupportedKind(other)),
    }
}

/// Mean ℓ1 and ℓ2 norms of uncorrelated samples with ellipsoid steps
/// `S_i = K·i`, against the theoretical ℓ1 value `K·n(n+1)/2`.
pub fn norm_calibration(
    kind: DistributionKind,
    n: usize,
    k_values: &[u32],
    pop: usize,
    seed: u64,
) -> Result<Vec<ScanResult>> {
    require_tn_or_dg(kind)?;
    require_pop(pop, 1000, "calibration")?;
    if n == 0 || k_values.contains(&0) {
        return Err(Error::InvalidConfig("calibration needs n >= 1 and K >= 1".into()));
    }
    let rows: Vec<Vec<ScanResult>> = k_values
        .par_iter()
        .map(|&k| {
            let steps = StepSizeVector::new((1..=n).map(|i| (k as usize * i) as f64).collect())?;
            let mut rng = RandomSource::new(seed, stream_id(&[TAG_CALIBRATE, kind as u64, n as u64, k as u64]));
            let mut l1_moments = IntMoments::default();
            let mut l2 = Accumulator::new();
            for _ in 0..pop {
                let z = uncorrelated_mutation(&steps, kind, &mut rng);
                l1_moments.push(l1(&z));
                l2.push(z.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt());
            }
            let theory = 0.5 * k as f64 * (n * (n + 1)) as f64;
            let params = [("n", n as f64), ("K", k as f64)];
            let series = kind.as_str();
            Ok(vec![
                ScanResult::new(series, &params, "mean_l1", Some(l1_moments.estimate())),
                ScanResult::new(series, &params, "mean_l2", Some(from_accumulator(&l2))),
                ScanResult::new(series, &params, "theory_l1", Some(Estimate::exact(theory))),
            ])
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Empirical `E‖z‖1` of rounded-normal vectors against `n·√(2/π)·σ`.
pub fn sigma_step_validation(n_values: &[usize], sigma_grid: &[f64], pop: usize, seed: u64) -> Result<Vec<ScanResult>> {
    require_pop(pop, 1000, "sigma-step validation")?;
    if n_values.contains(&0) || sigma_grid.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidConfig("sigma-step validation needs n >= 1 and sigma > 0".into()));
    }
    let points: Vec<(usize, f64)> = n_values.iter().flat_map(|&n| sigma_grid.iter().map(move |&s| (n, s))).collect();
    let rows: Vec<Vec<ScanResult>> = points
        .par_iter()
        .map(|&(n, sigma)| {
            let mut rng = RandomSource::new(seed, stream_id(&[TAG_SIGMA, n as u64, sigma.to_bits()]));
            let mut moments = IntMoments::default();
            for _ in 0..pop {
                let norm: i64 = (0..n).map(|_| round_half_away(sigma * rng.standard_normal()).saturating_abs()).sum();
                moments.push(norm);
            }
            let predicted = n as f64 * FRAC_2_PI.sqrt() * sigma;
            let empirical = moments.estimate();
            let params = [("n", n as f64), ("sigma", sigma)];
            vec![
                ScanResult::new("tn", &params, "empirical_l1", Some(empirical)),
                ScanResult::new("tn", &params, "predicted_l1", Some(Estimate::exact(predicted))),
                ScanResult::new(
                    "tn",
                    &params,
                    "relative_error",
                    Some(Estimate {
                        value: (empirical.value - predicted).abs() / predicted,
                        stderr: empirical.stderr / predicted,
                    }),
                ),
            ]
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub k: i64,
    pub exact: f64,
    /// Unnormalized Gaussian-kernel approximation, TN only.
    pub approx: Option<f64>,
    pub empirical: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub param: DistParam,
    pub rows: Vec<HistogramRow>,
    /// Empirical mass that fell outside the tabulated window.
    pub empirical_outside: f64,
    /// Total-variation distance between empirical and exact laws.
    pub total_variation: f64,
}

/// Exact and empirical probability mass per integer over the support window.
pub fn pmf_histogram(kind: DistributionKind, s: f64, pop: usize, seed: u64) -> Result<Histogram> {
    require_pop(pop, 10_000, "histogram")?;
    let param = param_from_step(kind, s)?;
    let window = support_window(&param, HISTOGRAM_TAIL_EPS) as i64;
    let mut rng = RandomSource::new(seed, stream_id(&[TAG_HISTOGRAM, kind as u64, s.to_bits()]));
    let mut counts = vec![0u64; (2 * window + 1) as usize];
    let mut outside = 0u64;
    for _ in 0..pop {
        let k = distributions::sample(&param, &mut rng);
        if k.abs() <= window {
            counts[(k + window) as usize] += 1;
        } else {
            outside += 1;
        }
    }
    let mut rows = Vec::with_capacity(counts.len());
    let mut tv = 0.0;
    let mut exact_inside = 0.0;
    for (idx, count) in counts.iter().enumerate() {
        let k = idx as i64 - window;
        let exact = pmf_exact(&param, k);
        let empirical = *count as f64 / pop as f64;
        let approx = if kind == DistributionKind::Tn { Some(tn_pmf_approx(param.value(), k)?) } else { None };
        tv += (exact - empirical).abs();
        exact_inside += exact;
        rows.push(HistogramRow { k, exact, approx, empirical });
    }
    let empirical_outside = outside as f64 / pop as f64;
    tv += empirical_outside + (1.0 - exact_inside).max(0.0);
    Ok(Histogram { param, rows, empirical_outside, total_variation: 0.5 * tv })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationKind {
    Tn,
    Dg,
    /// Rounded multivariate normal with a covariance assembled from angles.
    Ftn,
}

impl RotationKind {
    pub const ALL: [RotationKind; 3] = [Self::Tn, Self::Dg, Self::Ftn];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Tn => "tn",
            Self::Dg => "dg",
            Self::Ftn => "ftn",
        }
    }
}

impl fmt::Display for RotationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RotationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tn" => Ok(Self::Tn),
            "dg" => Ok(Self::Dg),
            "ftn" => Ok(Self::Ftn),
            other => Err(Error::InvalidConfig(format!("unknown rotation kind '{other}'"))),
        }
    }
}

/// Joint frequency of one lattice cell at one angle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub series: String,
    pub theta: f64,
    pub z1: i64,
    pub z2: i64,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RotationScan {
    pub rows: Vec<ScanResult>,
    /// Frequency tables of the first replicate, one block per angle.
    pub heatmap: Vec<HeatmapCell>,
}

/// Base draws shared by every angle of one replicate.
enum BaseDraws {
    Tn(Vec<[i64; 2]>),
    Dg(Vec<([i64; 2], [i64; 2])>),
    Ftn(Box<RandomSource>),
}

fn base_draws(kind: RotationKind, steps: &StepSizeVector, pop: usize, mut rng: RandomSource) -> BaseDraws {
    let pair = |v: Vec<i64>| [v[0], v[1]];
    match kind {
        RotationKind::Tn => {
            BaseDraws::Tn((0..pop).map(|_| pair(gen_uncorrelated(steps, DistributionKind::Tn, &mut rng))).collect())
        }
        RotationKind::Dg => BaseDraws::Dg(
            (0..pop)
                .map(|_| {
                    let a = pair(gen_uncorrelated(steps, DistributionKind::Dg, &mut rng));
                    let b = pair(gen_uncorrelated(steps, DistributionKind::Dg, &mut rng));
                    (a, b)
                })
                .collect(),
        ),
        RotationKind::Ftn => BaseDraws::Ftn(Box::new(rng)),
    }
}

fn rotated_samples(base: &BaseDraws, steps: &StepSizeVector, theta: f64, pop: usize) -> Result<Option<Vec<[i64; 2]>>> {
    let angles = AngleVector::new(2, vec![theta])?;
    let rotation = Rotation::new(&angles);
    let rot = |v: &[i64; 2]| {
        let r = rotation.apply_int(v);
        [r[0], r[1]]
    };
    Ok(match base {
        BaseDraws::Tn(draws) => Some(draws.iter().map(rot).collect()),
        BaseDraws::Dg(draws) => Some(
            draws
                .iter()
                .map(|(a, b)| {
                    let (ra, rb) = (rot(a), rot(b));
                    [ra[0].saturating_sub(rb[0]), ra[1].saturating_sub(rb[1])]
                })
                .collect(),
        ),
        BaseDraws::Ftn(rng) => match build_ftn_covariance(steps, &angles)? {
            None => None,
            Some(cov) => {
                let sampler = FtnSampler::new(&cov)?;
                let mut rng = (**rng).clone();
                Some(
                    (0..pop)
                        .map(|_| {
                            let z = sampler.sample(&mut rng);
                            [z[0], z[1]]
                        })
                        .collect(),
                )
            }
        },
    })
}

/// Sample covariance with a delta-method standard error.
fn covariance_estimate(x: &[f64], y: &[f64]) -> Estimate {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let products: Accumulator = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    Estimate { value: products.mean() * n / (n - 1.0), stderr: products.std_error() }
}

fn pair_statistics(samples: &[[i64; 2]]) -> [Estimate; 3] {
    let mut moments = IntMoments::default();
    for z in samples {
        moments.push(l1(z));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = samples.iter().map(|z| (z[0] as f64, z[1] as f64)).unzip();
    let (ax, ay): (Vec<f64>, Vec<f64>) = samples.iter().map(|z| (z[0].abs() as f64, z[1].abs() as f64)).unzip();
    [moments.estimate(), covariance_estimate(&x, &y), covariance_estimate(&ax, &ay)]
}

/// Rotates 2D samples with steps `(s1, s2)` through every angle of `thetas`.
///
/// Within one replicate all angles share the same base draws, so the curves
/// over θ are smooth and comparisons between angles are paired. Rows carry
/// `mean_l1`, `cov` and `abscov` per `(replicate, theta)`.
pub fn rotation_scan(
    kind: RotationKind,
    s1: f64,
    s2: f64,
    thetas: &ScanGrid,
    seed: u64,
    heatmap: bool,
) -> Result<RotationScan> {
    require_pop(thetas.pop, 1000, "rotation scan")?;
    let steps = StepSizeVector::new(vec![s1, s2])?;
    let pop = thetas.pop;
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for rep in 0..thetas.replications {
        let rng =
            RandomSource::new(seed, stream_id(&[TAG_ROTATE, kind as u64, s1.to_bits(), s2.to_bits(), rep as u64]));
        let base = base_draws(kind, &steps, pop, rng);
        let per_theta: Vec<(Vec<ScanResult>, Vec<HeatmapCell>)> = thetas
            .values
            .par_iter()
            .map(|&theta| {
                let params = [("s1", s1), ("s2", s2), ("replicate", rep as f64), ("theta", theta)];
                let series = kind.as_str();
                let samples = rotated_samples(&base, &steps, theta, pop)?;
                let stats = samples.as_deref().map(pair_statistics);
                let mut block = Vec::with_capacity(3);
                for (i, name) in ["mean_l1", "cov", "abscov"].into_iter().enumerate() {
                    block.push(ScanResult::new(series, &params, name, stats.map(|s| s[i])));
                }
                let mut heat = Vec::new();
                if heatmap && rep == 0 {
                    if let Some(samples) = &samples {
                        let mut counts: BTreeMap<(i64, i64), u64> = BTreeMap::new();
                        for z in samples {
                            *counts.entry((z[0], z[1])).or_default() += 1;
                        }
                        heat = counts
                            .into_iter()
                            .map(|((z1, z2), count)| HeatmapCell { series: series.into(), theta, z1, z2, count })
                            .collect();
                    }
                }
                Ok((block, heat))
            })
            .collect::<Result<_>>()?;
        for (block, heat) in per_theta {
            rows.extend(block);
            cells.extend(heat);
        }
    }
    Ok(RotationScan { rows, heatmap: cells })
}

/// One row of the one-dimensional entropy table, in bits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub s: f64,
    pub du: f64,
    pub sb: f64,
    pub tn: f64,
    pub tn_approx: f64,
    pub dg: f64,
}

/// Exact entropies of the four laws calibrated to each step size.
pub fn entropy_scan_1d(s_grid: &[f64]) -> Result<Vec<EntropyRow>> {
    s_grid
        .par_iter()
        .map(|&s| {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::ParamDomain(format!("step size {s} must be positive")));
            }
            let h = |kind| entropy_exact(&param_from_step(kind, s)?, DEFAULT_TAIL_EPS);
            let sigma = param_from_step(DistributionKind::Tn, s)?.value();
            Ok(EntropyRow {
                s,
                du: h(DistributionKind::Du)?,
                sb: h(DistributionKind::Sb)?,
                tn: h(DistributionKind::Tn)?,
                tn_approx: entropy_tn_approx(sigma, DEFAULT_TAIL_EPS)?,
                dg: h(DistributionKind::Dg)?,
            })
        })
        .collect()
}

/// Plug-in entropy `−Σ f̂·log2 f̂` over unit lattice bins.
pub fn plugin_entropy(samples: &[[i64; 2]]) -> f64 {
    let mut counts: BTreeMap<(i64, i64), u64> = BTreeMap::new();
    for z in samples {
        *counts.entry((z[0], z[1])).or_default() += 1;
    }
    let n = samples.len() as f64;
    -counts.values().map(|&c| c as f64 / n).map(|f| f * f.log2()).sum::<f64>()
}

/// Plug-in entropy of 2D samples.
///
/// Without `thetas` the sweep is over uncorrelated samples with steps
/// `(s1, s2)` and also reports the exact `H(z1) + H(z2)`. With `thetas`,
/// every `s2` is combined with every rotation angle, the angles sharing base
/// draws as in [`rotation_scan`].
pub fn entropy_2d(
    kind: DistributionKind,
    s1: f64,
    s2_values: &[f64],
    thetas: Option<&[f64]>,
    pop: usize,
    seed: u64,
) -> Result<Vec<ScanResult>> {
    require_tn_or_dg(kind)?;
    require_pop(pop, 10_000, "2D entropy")?;
    let rot_kind = if kind == DistributionKind::Tn { RotationKind::Tn } else { RotationKind::Dg };
    let series = kind.as_str();
    let blocks: Vec<Vec<ScanResult>> = s2_values
        .par_iter()
        .map(|&s2| {
            let steps = StepSizeVector::new(vec![s1, s2])?;
            let correlated = thetas.is_some() as u64;
            let mut rng = RandomSource::new(
                seed,
                stream_id(&[TAG_ENTROPY_2D, kind as u64, correlated, s1.to_bits(), s2.to_bits()]),
            );
            match thetas {
                None => {
                    let samples: Vec<[i64; 2]> = (0..pop)
                        .map(|_| {
                            let z = uncorrelated_mutation(&steps, kind, &mut rng);
                            [z[0], z[1]]
                        })
                        .collect();
                    let independent = entropy_exact(&param_from_step(kind, s1)?, DEFAULT_TAIL_EPS)?
                        + entropy_exact(&param_from_step(kind, s2)?, DEFAULT_TAIL_EPS)?;
                    let params = [("s1", s1), ("s2", s2)];
                    Ok(vec![
                        ScanResult::new(
                            series,
                            &params,
                            "plugin_entropy",
                            Some(Estimate::exact(plugin_entropy(&samples))),
                        ),
                        ScanResult::new(series, &params, "independent_entropy", Some(Estimate::exact(independent))),
                    ])
                }
                Some(thetas) => {
                    let base = base_draws(rot_kind, &steps, pop, rng);
                    thetas
                        .iter()
                        .map(|&theta| {
                            let samples =
                                rotated_samples(&base, &steps, theta, pop)?.expect("lattice rotations are total");
                            let params = [("s1", s1), ("s2", s2), ("theta", theta)];
                            Ok(ScanResult::new(
                                series,
                                &params,
                                "plugin_entropy",
                                Some(Estimate::exact(plugin_entropy(&samples))),
                            ))
                        })
                        .collect()
                }
            }
        })
        .collect::<Result<_>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

/// Parameters of a benchmark campaign over the 24-instance quadratic suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub n: usize,
    pub runs: u64,
    pub budget: u64,
    /// Instance seed; run `r` uses seed `seed + r`.
    pub seed: u64,
    pub variants: Vec<EsVariant>,
}

impl Campaign {
    pub fn new(n: usize, runs: u64, budget: u64, seed: u64) -> Self {
        Self { n, runs, budget, seed, variants: EsVariant::POPULATION.to_vec() }
    }

    pub fn job_count(&self) -> usize {
        self.variants.len() * HessianKind::BENCHMARK.len() * 6 * self.runs as usize
    }
}

/// Runs every (variant, instance, run) combination with default strategy
/// parameters. Records come back ordered by variant, instance, then run.
pub fn benchmark_campaign(campaign: &Campaign) -> Result<Vec<RunRecord>> {
    let configure = |v| EsConfig::new(v, campaign.n).with_budget(campaign.budget);
    benchmark_campaign_with(campaign, configure)
}

pub fn benchmark_campaign_with<F>(campaign: &Campaign, configure: F) -> Result<Vec<RunRecord>>
where
    F: Fn(EsVariant) -> EsConfig + Sync,
{
    let suite = benchmark_suite(campaign.n, campaign.seed)?;
    let jobs: Vec<(EsVariant, usize, u64)> = campaign
        .variants
        .iter()
        .flat_map(|&v| (0..suite.len()).flat_map(move |i| (0..campaign.runs).map(move |r| (v, i, r))))
        .collect();
    jobs.par_iter().map(|&(v, i, r)| run(&suite[i], &configure(v), campaign.seed.wrapping_add(r))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grouping {
    Separable,
    NonSeparable,
    All,
}

impl Grouping {
    pub fn contains(self, kind: HessianKind) -> bool {
        match self {
            Self::Separable => kind.is_separable(),
            Self::NonSeparable => !kind.is_separable(),
            Self::All => true,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Separable => "separable",
            Self::NonSeparable => "non-separable",
            Self::All => "all",
        }
    }
}

impl FromStr for Grouping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "separable" => Ok(Self::Separable),
            "non-separable" | "nonseparable" => Ok(Self::NonSeparable),
            "all" => Ok(Self::All),
            other => Err(Error::InvalidConfig(format!("unknown grouping '{other}'"))),
        }
    }
}

/// Final-value statistics of one variant on one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedBudgetRow {
    pub instance: String,
    pub kind: HessianKind,
    pub c: f64,
    pub variant: EsVariant,
    pub runs: u64,
    pub mean_f: f64,
    pub stderr_f: f64,
    pub median_f: f64,
}

/// Per (instance, variant) summary of final best values, sorted by instance
/// key then variant.
pub fn fixed_budget_table(records: &[RunRecord]) -> Vec<FixedBudgetRow> {
    let mut groups: BTreeMap<(String, EsVariant), (HessianKind, f64, Vec<f64>)> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.instance.key(), r.variant))
            .or_insert_with(|| (r.instance.kind, r.instance.c, Vec::new()))
            .2
            .push(r.best_f);
    }
    groups
        .into_iter()
        .map(|((instance, variant), (kind, c, values))| {
            let acc: Accumulator = values.iter().copied().collect();
            FixedBudgetRow {
                instance,
                kind,
                c,
                variant,
                runs: acc.count(),
                mean_f: acc.mean(),
                stderr_f: acc.std_error(),
                median_f: median(&values),
            }
        })
        .collect()
}

/// Pairwise dominance fractions between variants over a group of instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceMatrix {
    pub group: Grouping,
    pub variants: Vec<EsVariant>,
    pub instances: usize,
    /// `entries[a][b]`: fraction of instances where `a` has the strictly
    /// lower mean final value than `b`. The diagonal is 0.5.
    pub entries: Vec<Vec<f64>>,
}

impl DominanceMatrix {
    pub fn get(&self, a: EsVariant, b: EsVariant) -> Option<f64> {
        let i = self.variants.iter().position(|v| *v == a)?;
        let j = self.variants.iter().position(|v| *v == b)?;
        Some(self.entries[i][j])
    }

    /// Mean off-diagonal row entry per variant.
    pub fn scores(&self) -> Vec<f64> {
        let k = self.variants.len();
        self.entries
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v).sum::<f64>() / (k - 1) as f64
            })
            .collect()
    }

    /// Variants ordered by descending score; equal scores keep input order.
    pub fn ranking(&self) -> Vec<(EsVariant, f64)> {
        let mut ranked: Vec<(EsVariant, f64)> = self.variants.iter().copied().zip(self.scores()).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        ranked
    }
}

pub fn pairwise_dominance(records: &[RunRecord], group: Grouping) -> Result<DominanceMatrix> {
    let mut variants: Vec<EsVariant> = records.iter().map(|r| r.variant).collect();
    variants.sort();
    variants.dedup();
    if variants.len() < 2 {
        return Err(Error::InsufficientData(format!("dominance needs at least 2 variants, got {}", variants.len())));
    }
    let rows: Vec<FixedBudgetRow> =
        fixed_budget_table(records).into_iter().filter(|row| group.contains(row.kind)).collect();
    let mut by_instance: BTreeMap<&str, BTreeMap<EsVariant, &FixedBudgetRow>> = BTreeMap::new();
    for row in &rows {
        by_instance.entry(row.instance.as_str()).or_default().insert(row.variant, row);
    }
    if by_instance.is_empty() {
        return Err(Error::InsufficientData(format!("no runs in the {} group", group.as_str())));
    }
    for (instance, present) in &by_instance {
        for v in &variants {
            match present.get(v) {
                Some(row) if row.runs >= 2 => {}
                Some(row) => {
                    return Err(Error::InsufficientData(format!(
                        "{v} has {} run(s) on {instance}, need at least 2",
                        row.runs
                    )))
                }
                None => return Err(Error::InsufficientData(format!("{v} has no runs on {instance}"))),
            }
        }
    }
    let k = variants.len();
    let mut entries = vec![vec![0.0; k]; k];
    for (a, va) in variants.iter().enumerate() {
        for (b, vb) in variants.iter().enumerate() {
            entries[a][b] = if a == b {
                0.5
            } else {
                let wins = by_instance.values().filter(|m| m[va].mean_f < m[vb].mean_f).count();
                wins as f64 / by_instance.len() as f64
            };
        }
    }
    Ok(DominanceMatrix { group, variants, instances: by_instance.len(), entries })
}
