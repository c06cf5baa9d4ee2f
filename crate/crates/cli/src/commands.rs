//! Subcommand flags, their settings types and the command bodies.
//!
//! Each command has a `*Flags` type parsed by clap, where every field is
//! optional, and a `*Settings` type holding the fully resolved values. Flags
//! win over `--set`, which wins over the `--config` file, which wins over the
//! defaults.

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use ies_core::correlate::{uncorrelated_mutation, StepSizeVector};
use ies_core::distributions::{param_from_step, pmf_exact, tn_pmf_approx};
use ies_core::experiments::{
    benchmark_campaign_with, entropy_2d, entropy_scan_1d, fixed_budget_table, linspace, norm_calibration,
    pairwise_dominance, pmf_histogram, rotation_scan, sigma_step_validation, Campaign, DominanceMatrix, Grouping,
    RotationKind, ScanGrid, ScanResult,
};
use ies_core::output::{
    entropy_table, heatmap_table, histogram_table, read_run_log, scan_table, write_run_log, CsvTable, Metadata,
};
use ies_core::rng::stream_id;
use ies_core::{DistributionKind, EsConfig, EsVariant, HessianKind, QuadraticInstance, RandomSource, RunRecord};
use serde::{Deserialize, Serialize};

use crate::config::{resolve, ConfigArgs, Validate};
use crate::CliError;

/// Stream tag for the `sample` command.
const TAG_SAMPLE: u64 = 100;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn positive(value: f64, flag: &str) -> Result<(), CliError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("--{flag} must be positive")))
    }
}

fn at_least(value: usize, min: usize, flag: &str) -> Result<(), CliError> {
    if value >= min {
        Ok(())
    } else {
        Err(usage(format!("--{flag} must be at least {min}")))
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn metadata<S: Serialize>(command: &str, seed: Option<u64>, settings: &S) -> Result<Metadata, CliError> {
    let config = serde_json::to_value(settings).map_err(ies_core::Error::from)?;
    Ok(Metadata::new(command, seed, config))
}

fn write_table(common: &ConfigArgs, name: &str, table: &CsvTable, meta: &Metadata) -> Result<PathBuf, CliError> {
    let path = common.out.join(name);
    table.write(&path, meta)?;
    println!("wrote {} ({} rows)", path.display(), table.rows.len());
    Ok(path)
}

// ---------------------------------------------------------------- pmf

#[derive(Args, Serialize, Debug)]
pub struct PmfFlags {
    /// Distribution: du, sb, tn or dg
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<DistributionKind>,
    /// Mean absolute step the distribution is calibrated to
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    step: Option<f64>,
    /// Tabulate k in [-kmax, kmax]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    kmax: Option<i64>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields, default)]
pub struct PmfSettings {
    kind: DistributionKind,
    step: f64,
    kmax: i64,
}

impl Default for PmfSettings {
    fn default() -> Self {
        Self { kind: DistributionKind::Dg, step: 1.0, kmax: 20 }
    }
}

impl Validate for PmfSettings {
    fn validate(&self) -> Result<(), CliError> {
        positive(self.step, "step")?;
        if self.kmax < 0 {
            return Err(usage("--kmax must be non-negative"));
        }
        Ok(())
    }
}

pub fn pmf(common: &ConfigArgs, flags: &PmfFlags) -> Result<(), CliError> {
    let settings: PmfSettings = resolve(common, flags)?;
    let param = param_from_step(settings.kind, settings.step)?;
    let mut table = CsvTable::new(["k", "pmf", "approx"]);
    for k in -settings.kmax..=settings.kmax {
        let approx = match settings.kind {
            DistributionKind::Tn => tn_pmf_approx(param.value(), k)?.to_string(),
            _ => ies_core::output::UNDEFINED.to_string(),
        };
        table.push(vec![k.to_string(), pmf_exact(&param, k).to_string(), approx]);
    }
    write_table(common, "pmf.csv", &table, &metadata("pmf", None, &settings)?)?;
    Ok(())
}

// ---------------------------------------------------------------- sample

#[derive(Args, Serialize, Debug)]
pub struct SampleFlags {
    /// Distribution: du, sb, tn or dg
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<DistributionKind>,
    /// Mean absolute step per coordinate
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    step: Option<f64>,
    /// Dimension of each vector
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    /// Number of vectors
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    count: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields, default)]
pub struct SampleSettings {
    kind: DistributionKind,
    step: f64,
    n: usize,
    count: usize,
    seed: u64,
}

impl Default for SampleSettings {
    fn default() -> Self {
        Self { kind: DistributionKind::Dg, step: 1.0, n: 1, count: 1000, seed: 1 }
    }
}

impl Validate for SampleSettings {
    fn validate(&self) -> Result<(), CliError> {
        positive(self.step, "step")?;
        at_least(self.n, 1, "n")?;
        at_least(self.count, 1, "count")
    }
}

pub fn sample(common: &ConfigArgs, flags: &SampleFlags) -> Result<(), CliError> {
    let settings: SampleSettings = resolve(common, flags)?;
    let steps = StepSizeVector::uniform(settings.n, settings.step)?;
    let mut rng = RandomSource::new(settings.seed, stream_id(&[TAG_SAMPLE, settings.kind as u64]));
    let mut header = vec!["i".to_string()];
    header.extend((1..=settings.n).map(|j| format!("z{j}")));
    let mut table = CsvTable::new(header);
    for i in 0..settings.count {
        let z = uncorrelated_mutation(&steps, settings.kind, &mut rng);
        let mut row = vec![i.to_string()];
        row.extend(z.iter().map(i64::to_string));
        table.push(row);
    }
    write_table(common, "sample.csv", &table, &metadata("sample", Some(settings.seed), &settings)?)?;
    Ok(())
}

// ---------------------------------------------------------------- entropy

#[derive(Args, Serialize, Debug)]
pub struct EntropyFlags {
    /// Parameter to sweep; only the step size `s` is supported
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    scan: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    from: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    to: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<usize>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields, default)]
pub struct EntropySettings {
    scan: String,
    from: f64,
    to: f64,
    points: usize,
}

impl Default for EntropySettings {
    fn default() -> Self {
        Self { scan: "s".into(), from: 0.5, to: 10.0, points: 40 }
    }
}

impl Validate for EntropySettings {
    fn validate(&self) -> Result<(), CliError> {
        if self.scan != "s" {
            return Err(usage(format!("--scan must be 's', got '{}'", self.scan)));
        }
        positive(self.from, "from")?;
        if !(self.to > self.from && self.to.is_finite()) {
            return Err(usage("--to must be finite and greater than --from"));
        }
        at_least(self.points, 2, "points")
    }
}

pub fn entropy(common: &ConfigArgs, flags: &EntropyFlags) -> Result<(), CliError> {
    let settings: EntropySettings = resolve(common, flags)?;
    let rows = entropy_scan_1d(&linspace(settings.from, settings.to, settings.points)?)?;
    write_table(common, "entropy.csv", &entropy_table(&rows), &metadata("entropy", None, &settings)?)?;
    Ok(())
}

// ---------------------------------------------------------------- scan

#[derive(Subcommand, Debug)]
pub enum ScanCommand {
    /// Mean norms of uncorrelated mutations with ellipsoid step sizes
    Calibrate(CalibrateFlags),
    /// Mean l1 norm of rounded-normal vectors against the continuous prediction
    SigmaStep(SigmaStepFlags),
    /// Two-dimensional correlated mutations over a grid of rotation angles
    Rotate(RotateFlags),
    /// Plug-in entropy of two-dimensional TN and DG mutations
    Entropy2d(Entropy2dFlags),
    /// Empirical histogram against the exact probability mass function
    Histogram(HistogramFlags),
}

pub fn scan(common: &ConfigArgs, command: &ScanCommand) -> Result<(), CliError> {
    match command {
        ScanCommand::Calibrate(f) => calibrate(common, f),
        ScanCommand::SigmaStep(f) => sigma_step(common, f),
        ScanCommand::Rotate(f) => rotate(common, f),
        ScanCommand::Entropy2d(f) => entropy2d(common, f),
        ScanCommand::Histogram(f) => histogram(common, f),
    }
}

fn write_scan(common: &ConfigArgs, name: &str, rows: &[ScanResult], meta: &Metadata) -> Result<(), CliError> {
    write_table(common, name, &scan_table(rows)?, meta)?;
    Ok(())
}

#[derive(Args, Serialize, Debug)]
pub struct CalibrateFlags {
    /// tn or dg
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<DistributionKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    /// Step multipliers K = 1..=kmax
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    kmax: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pop: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateSettings {
    kind: DistributionKind,
    n: usize,
    kmax: u32,
    pop: usize,
    seed: u64,
}

impl Default for CalibrateSettings {
    fn default() -> Self {
        Self { kind: DistributionKind::Dg, n: 10, kmax: 10, pop: 10_000, seed: 1 }
    }
}

impl Validate for CalibrateSettings {
    fn validate(&self) -> Result<(), CliError> {
        if !matches!(self.kind, DistributionKind::Tn | DistributionKind::Dg) {
            return Err(usage("--kind must be tn or dg"));
        }
        at_least(self.n, 1, "n")?;
        at_least(self.kmax as usize, 1, "kmax")?;
        at_least(self.pop, 1000, "pop")
    }
}

fn calibrate(common: &ConfigArgs, flags: &CalibrateFlags) -> Result<(), CliError> {
    let s: CalibrateSettings = resolve(common, flags)?;
    let ks: Vec<u32> = (1..=s.kmax).collect();
    let rows = norm_calibration(s.kind, s.n, &ks, s.pop, s.seed)?;
    write_scan(common, "scan_calibrate.csv", &rows, &metadata("scan calibrate", Some(s.seed), &s)?)
}

#[derive(Args, Serialize, Debug)]
pub struct SigmaStepFlags {
    /// Dimensions, comma separated
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_from: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_to: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_points: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pop: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields, default)]
pub struct SigmaStepSettings {
    n: Vec<usize>,
    sigma_from: f64,
    sigma_to: f64,
    sigma_points: usize,
    pop: usize,
    seed: u64,
}

impl Default for SigmaStepSettings {
    fn default() -> Self {
        Self { n: vec![10, 30, 80], sigma_from: 0.75, sigma_to: 10.0, sigma_points: 20, pop: 10_000, seed: 1 }
    }
}

impl Validate for SigmaStepSettings {
    fn validate(&self) -> Result<(), CliError> {
        if self.n.is_empty() || self.n.contains(&0) {
            return Err(usage("--n must list positive dimensions"));
        }
        positive(self.sigma_from, "sigma-from")?;
        if !(self.sigma_to >= self.sigma_from && self.sigma_to.is_finite()) {
            return Err(usage("--sigma-to must be finite and at least --sigma-from"));
        }
        at_least(self.sigma_points, 1, "sigma-points")?;
        at_least(self.pop, 1000, "pop")
    }
}

fn sigma_step(common: &ConfigArgs, flags: &SigmaStepFlags) -> Result<(), CliError> {
    let s: SigmaStepSettings = resolve(common, flags)?;
    let sigmas = linspace(s.sigma_from, s.sigma_to, s.sigma_points)?;
    let rows = sigma_step_validation(&s.n, &sigmas, s.pop, s.seed)?;
    write_scan(common, "scan_sigma_step.csv", &rows, &metadata("scan sigma-step", Some(s.seed), &s)?)
}

#[derive(Args, Serialize, Debug)]
pub struct RotateFlags {
    /// tn, dg or ftn
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<RotationKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    s1: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    s2: Option<f64>,
    /// Number of angles spread evenly over [0, pi/2]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_points: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    replications: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pop: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Also write 2D sample counts per angle (true or false)
    #[arg(long, value_name = "BOOL")]
    #[serde(skip_serializing_if = "Option::is_none")]
    heatmap: Option<bool>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields, default)]
pub struct RotateSettings {
    kind: RotationKind,
    s1: f64,
    s2: f64,
    theta_points: usize,
    replications: usize,
    pop: usize,
    seed: u64,
    heatmap: bool,
}

impl Default for RotateSettings {
    fn default() -> Self {
        Self {
            kind: RotationKind::Dg,
            s1: 1.0,
            s2: 2.0,
            theta_points: 33,
            replications: 1,
            pop: 10_000,
            seed: 1,
            heatmap: true,
        }
    }
}

impl Validate for RotateSettings {
    fn validate(&self) -> Result<(), CliError> {
        positive(self.s1, "s1")?;
        positive(self.s2, "s2")?;
        at_least(self.theta_points, 2, "theta-points")?;
        at_least(self.replications, 1, "replications")?;
        at_least(self.pop, 1000, "pop")
    }
}

fn rotate(common: &ConfigArgs, flags: &RotateFlags) -> Result<(), CliError> {
    let s: RotateSettings = resolve(common, flags)?;
    let grid = ScanGrid::linspace("theta", 0.0, FRAC_PI_2, s.theta_points, s.replications, s.pop)?;
    let result = rotation_scan(s.kind, s.s1, s.s2, &grid, s.seed, s.heatmap)?;
    let meta = metadata("scan rotate", Some(s.seed), &s)?;
    write_scan(common, "scan_rotate.csv", &result.rows, &meta)?;
    if s.heatmap {
        write_table(common, "heatmap_rotate.csv", &heatmap_table(&result.heatmap), &meta)?;
    }
    Ok(())
}

#[derive(Args, Serialize, Debug)]
pub struct Entropy2dFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    s1: Option<f64>,
    /// Second-coordinate steps, comma separated
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    s2: Option<Vec<f64>>,
    /// Rotate the samples over a grid of angles
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    correlated: bool,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_points: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pop: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields, default)]
pub struct Entropy2dSettings {
    s1: f64,
    s2: Vec<f64>,
    correlated: bool,
    theta_points: usize,
    pop: usize,
    seed: u64,
}

impl Default for Entropy2dSettings {
    fn default() -> Self {
        Self {
            s1: 1.0,
            s2: (1..=10).map(f64::from).collect(),
            correlated: false,
            theta_points: 33,
            pop: 10_000,
            seed: 1,
        }
    }
}

impl Validate for Entropy2dSettings {
    fn validate(&self) -> Result<(), CliError> {
        positive(self.s1, "s1")?;
        if self.s2.is_empty() {
            return Err(usage("--s2 must list at least one step size"));
        }
        for &v in &self.s2 {
            positive(v, "s2")?;
        }
        at_least(self.theta_points, 2, "theta-points")?;
        at_least(self.pop, 10_000, "pop")
    }
}

fn entropy2d(common: &ConfigArgs, flags: &Entropy2dFlags) -> Result<(), CliError> {
    let s: Entropy2dSettings = resolve(common, flags)?;
    let thetas = if s.correlated { Some(linspace(0.0, FRAC_PI_2, s.theta_points)?) } else { None };
    let mut rows = Vec::new();
    for kind in [DistributionKind::Tn, DistributionKind::Dg] {
        rows.extend(entropy_2d(kind, s.s1, &s.s2, thetas.as_deref(), s.pop, s.seed)?);
    }
    write_scan(common, "scan_entropy2d.csv", &rows, &metadata("scan entropy2d", Some(s.seed), &s)?)
}

#[derive(Args, Serialize, Debug)]
pub struct HistogramFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<DistributionKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    step: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pop: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields, default)]
pub struct HistogramSettings {
    kind: DistributionKind,
    step: f64,
    pop: usize,
    seed: u64,
}

impl Default for HistogramSettings {
    fn default() -> Self {
        Self { kind: DistributionKind::Dg, step: 1.0, pop: 100_000, seed: 1 }
    }
}

impl Validate for HistogramSettings {
    fn validate(&self) -> Result<(), CliError> {
        positive(self.step, "step")?;
        at_least(self.pop, 10_000, "pop")
    }
}

fn histogram(common: &ConfigArgs, flags: &HistogramFlags) -> Result<(), CliError> {
    let s: HistogramSettings = resolve(common, flags)?;
    let h = pmf_histogram(s.kind, s.step, s.pop, s.seed)?;
    write_table(common, "scan_histogram.csv", &histogram_table(&h), &metadata("scan histogram", Some(s.seed), &s)?)?;
    println!("total variation {} (empirical mass outside window {})", h.total_variation, h.empirical_outside);
    Ok(())
}

// ---------------------------------------------------------------- optimize

fn log_name(record: &RunRecord) -> String {
    format!("{}.jsonl", record.run_id.replace('/', "_"))
}

#[derive(Args, Serialize, Debug)]
pub struct OptimizeFlags {
    /// 1p1-dg, 1p1-tn, corr-dg, corr-tn, uncorr-dg or uncorr-tn
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    variant: Option<EsVariant>,
    /// sphere, discus, cigar, rotated-ellipse or hadamard-ellipse
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    problem: Option<HessianKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    /// Condition number (ignored for the sphere)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    /// Maximum number of objective evaluations
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    budget: Option<u64>,
    /// Seed of the strategy's random stream
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Seed that places the optimum
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    instance_seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<usize>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeSettings {
    variant: EsVariant,
    problem: HessianKind,
    n: usize,
    c: f64,
    budget: u64,
    seed: u64,
    instance_seed: u64,
    mu: usize,
    lambda: usize,
}

impl Default for OptimizeSettings {
    fn default() -> Self {
        let config = EsConfig::new(EsVariant::CorrelatedDg, 16);
        Self {
            variant: config.variant,
            problem: HessianKind::Sphere,
            n: config.n,
            c: 1e3,
            budget: config.budget,
            seed: 1,
            instance_seed: 1,
            mu: config.mu,
            lambda: config.lambda,
        }
    }
}

impl Validate for OptimizeSettings {
    fn validate(&self) -> Result<(), CliError> {
        at_least(self.n, 2, "n")?;
        if !(self.c >= 1.0 && self.c.is_finite()) {
            return Err(usage("--c must be at least 1"));
        }
        Ok(())
    }
}

impl OptimizeSettings {
    fn es_config(&self) -> Result<EsConfig, CliError> {
        let mut config = EsConfig::new(self.variant, self.n).with_budget(self.budget);
        config.mu = self.mu;
        config.lambda = self.lambda;
        config.validate()?;
        Ok(config)
    }
}

pub fn optimize(common: &ConfigArgs, flags: &OptimizeFlags) -> Result<(), CliError> {
    let s: OptimizeSettings = resolve(common, flags)?;
    let config = s.es_config()?;
    let instance = QuadraticInstance::new(s.problem, s.n, s.c, s.instance_seed)?;
    let record = ies_core::strategies::run(&instance, &config, s.seed)?;
    let path = common.out.join(log_name(&record));
    write_run_log(&path, &metadata("optimize", Some(s.seed), &s)?, &record)?;
    println!(
        "{}: best_f {} after {} evaluations, distance to optimum {}",
        record.run_id,
        record.best_f,
        record.evaluations,
        record.distance_to_optimum()
    );
    println!("wrote {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------- bench

#[derive(Args, Serialize, Debug)]
pub struct BenchFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    /// Independent runs per (variant, instance)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    runs: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    budget: Option<u64>,
    /// Instance seed; run r uses seed + r
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Variants, comma separated
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    variants: Option<Vec<EsVariant>>,
    /// Worker threads; 0 uses all cores
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    threads: Option<usize>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSettings {
    n: usize,
    runs: u64,
    budget: u64,
    seed: u64,
    variants: Vec<EsVariant>,
    threads: usize,
}

impl Default for BenchSettings {
    fn default() -> Self {
        let c = Campaign::new(16, 15, 10_000, 1);
        Self { n: c.n, runs: c.runs, budget: c.budget, seed: c.seed, variants: c.variants, threads: 0 }
    }
}

impl Validate for BenchSettings {
    fn validate(&self) -> Result<(), CliError> {
        at_least(self.n, 2, "n")?;
        at_least(self.runs as usize, 1, "runs")?;
        if self.variants.is_empty() {
            return Err(usage("--variants must list at least one variant"));
        }
        Ok(())
    }
}

pub fn bench(common: &ConfigArgs, flags: &BenchFlags) -> Result<(), CliError> {
    let s: BenchSettings = resolve(common, flags)?;
    let mut campaign = Campaign::new(s.n, s.runs, s.budget, s.seed);
    campaign.variants = s.variants.clone();
    for &v in &campaign.variants {
        EsConfig::new(v, s.n).with_budget(s.budget).validate()?;
    }
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(s.threads).build().map_err(|e| usage(format!("--threads: {e}")))?;
    let records = pool.install(|| {
        benchmark_campaign_with(&campaign, |v| EsConfig::new(v, campaign.n).with_budget(campaign.budget))
    })?;
    let dir = common.out.join("runs");
    fs::create_dir_all(&dir)?;
    let meta = metadata("bench", Some(s.seed), &s)?;
    for record in &records {
        write_run_log(&dir.join(log_name(record)), &meta, record)?;
    }
    println!("wrote {} run logs to {}", records.len(), dir.display());
    Ok(())
}

// ---------------------------------------------------------------- report

#[derive(Args, Serialize, Debug)]
pub struct ReportFlags {
    /// Directory of run logs (default: <out>/runs)
    #[arg(long, value_name = "DIR")]
    #[serde(skip_serializing_if = "Option::is_none")]
    logs: Option<PathBuf>,
    /// separable, non-separable or all; every group when omitted
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    group: Option<Grouping>,
}

#[derive(Serialize, Deserialize, Debug, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ReportSettings {
    #[serde(skip_serializing_if = "Option::is_none")]
    logs: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    group: Option<Grouping>,
}

impl Validate for ReportSettings {
    fn validate(&self) -> Result<(), CliError> {
        Ok(())
    }
}

fn load_logs(dir: &Path) -> Result<Vec<RunRecord>, CliError> {
    let entries = fs::read_dir(dir)
        .map_err(|e| CliError::MissingInput(format!("cannot read log directory {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    if paths.is_empty() {
        return Err(CliError::MissingInput(format!("no .jsonl run logs in {}", dir.display())));
    }
    paths.sort();
    paths.iter().map(|p| Ok(read_run_log(p)?.1)).collect()
}

fn dominance_table(m: &DominanceMatrix) -> CsvTable {
    let mut header = vec!["variant".to_string()];
    header.extend(m.variants.iter().map(|v| v.as_str().to_string()));
    header.push("score".into());
    let mut table = CsvTable::new(header);
    for ((v, row), score) in m.variants.iter().zip(&m.entries).zip(m.scores()) {
        let mut cells = vec![v.as_str().to_string()];
        cells.extend(row.iter().map(f64::to_string));
        cells.push(score.to_string());
        table.push(cells);
    }
    table
}

pub fn report(common: &ConfigArgs, flags: &ReportFlags) -> Result<(), CliError> {
    let s: ReportSettings = resolve(common, flags)?;
    let dir = s.logs.clone().unwrap_or_else(|| common.out.join("runs"));
    let records = load_logs(&dir)?;
    let meta = metadata("report", None, &s)?;

    let mut fixed = CsvTable::new(["instance", "kind", "c", "variant", "runs", "mean_f", "stderr_f", "median_f"]);
    for r in fixed_budget_table(&records) {
        fixed.push(vec![
            r.instance,
            r.kind.as_str().to_string(),
            r.c.to_string(),
            r.variant.as_str().to_string(),
            r.runs.to_string(),
            r.mean_f.to_string(),
            r.stderr_f.to_string(),
            r.median_f.to_string(),
        ]);
    }
    write_table(common, "fixed_budget.csv", &fixed, &meta)?;

    let groups = match s.group {
        Some(g) => vec![g],
        None => vec![Grouping::Separable, Grouping::NonSeparable, Grouping::All],
    };
    for group in groups {
        let m = pairwise_dominance(&records, group)?;
        write_table(common, &format!("dominance_{}.csv", group.as_str()), &dominance_table(&m), &meta)?;
        let ranking: Vec<String> = m.ranking().iter().map(|(v, sc)| format!("{v} {sc:.3}")).collect();
        println!("{} ({} instances): {}", group.as_str(), m.instances, ranking.join(", "));
    }
    Ok(())
}
