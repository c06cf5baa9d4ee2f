//! Integer evolution strategies.
//!
//! Six variants are provided: the elitist (1+1) strategy with the 1/5th
//! success rule on DG or TN mutations, and the (μ,λ) population strategy with
//! self-adapted step sizes, either uncorrelated or with self-adapted rotation
//! angles, again on DG or TN.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::correlate::{corr_mutate_with, uncorrelated_mutation, AngleVector, Rotation, StepSizeVector};
use crate::distributions::DistributionKind;
use crate::error::{Error, Result};
use crate::problems::{InstanceDescriptor, Objective, QuadraticInstance};
use crate::rng::RandomSource;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EsVariant {
    #[serde(rename = "1p1-dg")]
    OnePlusOneDg,
    #[serde(rename = "1p1-tn")]
    OnePlusOneTn,
    #[serde(rename = "corr-dg")]
    CorrelatedDg,
    #[serde(rename = "corr-tn")]
    CorrelatedTn,
    #[serde(rename = "uncorr-dg")]
    UncorrelatedDg,
    #[serde(rename = "uncorr-tn")]
    UncorrelatedTn,
}

impl EsVariant {
    pub const ALL: [EsVariant; 6] = [
        Self::OnePlusOneDg,
        Self::OnePlusOneTn,
        Self::CorrelatedDg,
        Self::CorrelatedTn,
        Self::UncorrelatedDg,
        Self::UncorrelatedTn,
    ];

    /// The four self-adaptive population variants used in benchmark campaigns.
    pub const POPULATION: [EsVariant; 4] =
        [Self::CorrelatedDg, Self::CorrelatedTn, Self::UncorrelatedDg, Self::UncorrelatedTn];

    pub fn kind(self) -> DistributionKind {
        match self {
            Self::OnePlusOneDg | Self::CorrelatedDg | Self::UncorrelatedDg => DistributionKind::Dg,
            Self::OnePlusOneTn | Self::CorrelatedTn | Self::UncorrelatedTn => DistributionKind::Tn,
        }
    }

    pub fn is_one_plus_one(self) -> bool {
        matches!(self, Self::OnePlusOneDg | Self::OnePlusOneTn)
    }

    pub fn is_correlated(self) -> bool {
        matches!(self, Self::CorrelatedDg | Self::CorrelatedTn)
    }

    /// The variant with the same structure but the other distribution.
    pub fn counterpart(self) -> Self {
        match self {
            Self::OnePlusOneDg => Self::OnePlusOneTn,
            Self::OnePlusOneTn => Self::OnePlusOneDg,
            Self::CorrelatedDg => Self::CorrelatedTn,
            Self::CorrelatedTn => Self::CorrelatedDg,
            Self::UncorrelatedDg => Self::UncorrelatedTn,
            Self::UncorrelatedTn => Self::UncorrelatedDg,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::OnePlusOneDg => "1p1-dg",
            Self::OnePlusOneTn => "1p1-tn",
            Self::CorrelatedDg => "corr-dg",
            Self::CorrelatedTn => "corr-tn",
            Self::UncorrelatedDg => "uncorr-dg",
            Self::UncorrelatedTn => "uncorr-tn",
        }
    }
}

impl fmt::Display for EsVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EsVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == norm)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown variant '{s}'")))
    }
}

/// Strategy parameters. [`EsConfig::new`] fills in the defaults for a dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EsConfig {
    pub variant: EsVariant,
    pub n: usize,
    pub mu: usize,
    pub lambda: usize,
    pub tau_g: f64,
    pub tau_l: f64,
    pub beta: f64,
    /// Maximum number of objective evaluations, initial population included.
    pub budget: u64,
    /// Initial points are drawn from `center + {-init_box..init_box}^n`.
    pub init_box: i64,
    pub s_init: f64,
    pub s_floor: f64,
    /// 1/5th rule window length in evaluations.
    pub window: usize,
    /// 1/5th rule adaptation factor.
    pub phi: f64,
}

impl EsConfig {
    pub const DEFAULT_BETA: f64 = 0.0873;

    pub fn new(variant: EsVariant, n: usize) -> Self {
        let nf = n.max(1) as f64;
        Self {
            variant,
            n,
            mu: 15,
            lambda: 100,
            tau_g: 1.0 / (2.0 * nf).sqrt(),
            tau_l: 1.0 / (2.0 * nf.sqrt()).sqrt(),
            beta: Self::DEFAULT_BETA,
            budget: 10_000,
            init_box: 50,
            s_init: 10.0,
            s_floor: 1e-12,
            window: n.max(1),
            phi: 0.85,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if !self.variant.is_one_plus_one() && !(self.mu >= 1 && self.mu < self.lambda) {
            return bad(format!("comma selection needs 1 <= mu < lambda (mu={}, lambda={})", self.mu, self.lambda));
        }
        for (name, v) in [("tau_g", self.tau_g), ("tau_l", self.tau_l), ("beta", self.beta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a finite non-negative number"));
            }
        }
        if self.init_box < 0 {
            return bad("init_box must be non-negative".into());
        }
        if !(self.s_floor > 0.0 && self.s_init >= self.s_floor && self.s_init.is_finite()) {
            return bad("need 0 < s_floor <= s_init".into());
        }
        if self.window == 0 {
            return bad("window must be positive".into());
        }
        if !(self.phi > 0.0 && self.phi < 1.0) {
            return bad("phi must lie in (0, 1)".into());
        }
        Ok(())
    }

    fn cost_per_step(&self) -> u64 {
        if self.variant.is_one_plus_one() {
            1
        } else {
            self.lambda as u64
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub x: Vec<i64>,
    pub s: Vec<f64>,
    /// Present exactly for correlated variants.
    pub alpha: Option<AngleVector>,
    pub f: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub eval: u64,
    pub best_f: f64,
}

/// Mutable state of one run.
#[derive(Clone, Debug)]
pub struct EsState {
    pub population: Vec<Individual>,
    pub evals: u64,
    pub best_x: Vec<i64>,
    pub best_f: f64,
    pub trace: Vec<TracePoint>,
    successes: usize,
    window_evals: usize,
}

impl EsState {
    /// Draws and evaluates the initial population: one parent for (1+1), `mu`
    /// parents otherwise.
    pub fn initialize<O: Objective + ?Sized>(
        objective: &O,
        center: &[i64],
        config: &EsConfig,
        rng: &mut RandomSource,
    ) -> Result<Self> {
        config.validate()?;
        if objective.dim() != config.n || center.len() != config.n {
            return Err(Error::DimensionMismatch { expected: config.n, got: objective.dim().min(center.len()) });
        }
        let count = if config.variant.is_one_plus_one() { 1 } else { config.mu };
        let mut state = Self {
            population: Vec::with_capacity(count),
            evals: 0,
            best_x: center.to_vec(),
            best_f: f64::INFINITY,
            trace: Vec::new(),
            successes: 0,
            window_evals: 0,
        };
        for _ in 0..count {
            let x: Vec<i64> = center.iter().map(|c| c + rng.int_inclusive(-config.init_box, config.init_box)).collect();
            let f = state.evaluate(objective, &x);
            let alpha = config.variant.is_correlated().then(|| AngleVector::zeros(config.n));
            state.population.push(Individual { x, s: vec![config.s_init; config.n], alpha, f });
        }
        Ok(state)
    }

    fn evaluate<O: Objective + ?Sized>(&mut self, objective: &O, x: &[i64]) -> f64 {
        let f = objective.value(x);
        self.evals += 1;
        if f < self.best_f {
            self.best_f = f;
            self.best_x.clear();
            self.best_x.extend_from_slice(x);
            self.trace.push(TracePoint { eval: self.evals, best_f: f });
        }
        f
    }
}

/// Lognormal step-size update, additive angle update, then one mutation.
///
/// The returned offspring is not evaluated (`f` is NaN).
pub fn self_adapt(parent: &Individual, config: &EsConfig, rng: &mut RandomSource) -> Result<Individual> {
    let kind = config.variant.kind();
    let global = config.tau_g * rng.standard_normal();
    let s: Vec<f64> = parent
        .s
        .iter()
        .map(|si| (si * (global + config.tau_l * rng.standard_normal()).exp()).max(config.s_floor))
        .collect();
    let steps = StepSizeVector::from_positive(s);
    let (alpha, z) = match &parent.alpha {
        Some(parent_alpha) => {
            let mut alpha = parent_alpha.clone();
            if config.beta != 0.0 {
                let deltas: Vec<f64> =
                    (0..alpha.as_slice().len()).map(|_| config.beta * rng.standard_normal()).collect();
                alpha.perturb(deltas);
            }
            let z = corr_mutate_with(&steps, &Rotation::new(&alpha), kind, rng)?;
            (Some(alpha), z)
        }
        None => (None, uncorrelated_mutation(&steps, kind, rng)),
    };
    let x = parent.x.iter().zip(z).map(|(a, b)| a.saturating_add(b)).collect();
    Ok(Individual { x, s: steps.as_slice().to_vec(), alpha, f: f64::NAN })
}

/// One (1+1) generation: mutate, keep the offspring if it is not worse, and
/// adapt the shared step size once per window.
///
/// Only strict improvements count as successes for the 1/5th rule.
pub fn one_plus_one_step<O: Objective + ?Sized>(
    state: &mut EsState,
    objective: &O,
    config: &EsConfig,
    rng: &mut RandomSource,
) -> Result<()> {
    if !config.variant.is_one_plus_one() || state.population.len() != 1 {
        return Err(Error::InvalidConfig(format!("{} is not a (1+1) configuration", config.variant)));
    }
    let steps = StepSizeVector::from_positive(state.population[0].s.clone());
    let z = uncorrelated_mutation(&steps, config.variant.kind(), rng);
    let x: Vec<i64> = state.population[0].x.iter().zip(z).map(|(a, b)| a.saturating_add(b)).collect();
    let f = state.evaluate(objective, &x);
    let parent = &mut state.population[0];
    if f < parent.f {
        state.successes += 1;
    }
    if f <= parent.f {
        parent.x = x;
        parent.f = f;
    }
    state.window_evals += 1;
    if state.window_evals >= config.window {
        let (hits, window) = (5 * state.successes, config.window);
        let factor = match hits.cmp(&window) {
            std::cmp::Ordering::Greater => 1.0 / config.phi,
            std::cmp::Ordering::Less => config.phi,
            std::cmp::Ordering::Equal => 1.0,
        };
        for s in &mut parent.s {
            *s = (*s * factor).max(config.s_floor);
        }
        state.successes = 0;
        state.window_evals = 0;
    }
    Ok(())
}

/// One (μ,λ) generation with uniform parent choice and comma selection.
pub fn population_step<O: Objective + ?Sized>(
    state: &mut EsState,
    objective: &O,
    config: &EsConfig,
    rng: &mut RandomSource,
) -> Result<()> {
    if config.variant.is_one_plus_one() {
        return Err(Error::InvalidConfig(format!("{} is not a population variant", config.variant)));
    }
    let mut offspring = Vec::with_capacity(config.lambda);
    for _ in 0..config.lambda {
        let parent = &state.population[rng.index(state.population.len())];
        let mut child = self_adapt(parent, config, rng)?;
        child.f = state.evaluate(objective, &child.x);
        offspring.push(child);
    }
    offspring.sort_by(|a, b| a.f.total_cmp(&b.f));
    offspring.truncate(config.mu);
    state.population = offspring;
    Ok(())
}

/// Result of [`minimize`].
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub trace: Vec<TracePoint>,
    pub best_x: Vec<i64>,
    pub best_f: f64,
    pub evaluations: u64,
}

/// Runs a strategy on any objective until the next generation would exceed
/// the budget. Initial points are drawn around `center`.
pub fn minimize<O: Objective + ?Sized>(
    objective: &O,
    center: &[i64],
    config: &EsConfig,
    seed: u64,
) -> Result<RunOutcome> {
    let mut rng = RandomSource::new(seed, 0);
    let mut state = EsState::initialize(objective, center, config, &mut rng)?;
    let cost = config.cost_per_step();
    while state.evals + cost <= config.budget {
        if config.variant.is_one_plus_one() {
            one_plus_one_step(&mut state, objective, config, &mut rng)?;
        } else {
            population_step(&mut state, objective, config, &mut rng)?;
        }
    }
    if state.trace.last().is_some_and(|t| t.eval < state.evals) {
        state.trace.push(TracePoint { eval: state.evals, best_f: state.best_f });
    }
    Ok(RunOutcome { trace: state.trace, best_x: state.best_x, best_f: state.best_f, evaluations: state.evals })
}

/// Complete log of one run on a benchmark instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub seed: u64,
    pub variant: EsVariant,
    pub instance: InstanceDescriptor,
    pub trace: Vec<TracePoint>,
    pub best_x: Vec<i64>,
    pub best_f: f64,
    pub evaluations: u64,
}

impl RunRecord {
    pub fn distance_to_optimum(&self) -> f64 {
        self.best_x.iter().zip(&self.instance.xi0).map(|(a, b)| ((a - b) as f64).powi(2)).sum::<f64>().sqrt()
    }
}

pub fn run(instance: &QuadraticInstance, config: &EsConfig, seed: u64) -> Result<RunRecord> {
    if config.n != instance.dim() {
        return Err(Error::DimensionMismatch { expected: instance.dim(), got: config.n });
    }
    let outcome = minimize(instance, instance.xi0(), config, seed)?;
    let descriptor = instance.descriptor();
    Ok(RunRecord {
        run_id: format!("{}/{}/{}", config.variant, descriptor.key(), seed),
        seed,
        variant: config.variant,
        instance: descriptor,
        trace: outcome.trace,
        best_x: outcome.best_x,
        best_f: outcome.best_f,
        evaluations: outcome.evaluations,
    })
}
