//! Monte Carlo experiments.
//!
//! Each unit of work (one tree fit) draws from its own RNG stream derived
//! from the master seed and its coordinates. Work is split into fixed
//! iteration blocks whose partial aggregates are merged in block order, so
//! reports do not depend on the number of worker threads.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::theorem2_breakdown;
use crate::dgp::{generate_logit_dgp, generate_single_positive, DgpName, LogitDgpConfig};
use crate::error::ensure_arg;
use crate::seed::derive_seed;
use crate::summation::NeumaierSum;
use crate::tree::{fit, FitConfig, TreeType};
use crate::{Error, Result};

pub const DEFAULT_SEED: u64 = 20_240_601;
/// Iterations per `n` used at desk scale.
pub const DESK_ITERATIONS: usize = 20_000;
pub const PAPER_ITERATIONS: usize = 500_000;

const BLOCK: usize = 1024;

fn pool(workers: Option<usize>) -> Result<Option<rayon::ThreadPool>> {
    workers
        .map(|w| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::ThreadPool(e.to_string()))
        })
        .transpose()
}

fn run_in<T: Send>(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() -> T + Send) -> T {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinglePositiveConfig {
    pub n_values: Vec<usize>,
    pub p: usize,
    pub iterations: usize,
    pub master_seed: u64,
    pub workers: Option<usize>,
}

impl Default for SinglePositiveConfig {
    fn default() -> Self {
        Self {
            n_values: vec![10, 20, 30, 40, 50],
            p: 2,
            iterations: DESK_ITERATIONS,
            master_seed: DEFAULT_SEED,
            workers: None,
        }
    }
}

impl SinglePositiveConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_arg!(self.iterations >= 1, "iterations must be at least 1");
        ensure_arg!(!self.n_values.is_empty(), "need at least one n");
        ensure_arg!(self.n_values.iter().all(|&n| n >= 3), "every n must be at least 3");
        ensure_arg!(self.p >= 1, "need at least one predictor");
        ensure_arg!(self.workers != Some(0), "workers must be positive");
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeStats {
    pub tree_type: TreeType,
    pub count: usize,
    pub proportion: f64,
    /// Mean integral of the tree output over the unit square.
    pub mean_positive_region: f64,
    /// `mean_positive_region * n`.
    pub ratio_to_true: f64,
    /// Standard error of `ratio_to_true`.
    pub ratio_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeReport {
    pub n: usize,
    /// Types observed, in type order.
    pub types: Vec<TypeStats>,
    pub overall_ratio: f64,
    pub overall_se: f64,
}

impl SizeReport {
    pub fn get(&self, t: TreeType) -> Option<&TypeStats> {
        self.types.iter().find(|s| s.tree_type == t)
    }

    pub fn count(&self, t: TreeType) -> usize {
        self.get(t).map_or(0, |s| s.count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: SinglePositiveConfig,
    pub sizes: Vec<SizeReport>,
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Clone, Copy, Default)]
struct Moments {
    count: usize,
    sum: NeumaierSum,
    sum_sq: NeumaierSum,
}

impl Moments {
    fn add(&mut self, x: f64) {
        self.count += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    fn merge(&mut self, o: &Moments) {
        self.count += o.count;
        self.sum.merge(&o.sum);
        self.sum_sq.merge(&o.sum_sq);
    }

    fn mean(&self) -> f64 {
        self.sum.value() / self.count as f64
    }

    /// Standard error of the mean.
    fn se(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        let c = self.count as f64;
        let mean = self.mean();
        let var = ((self.sum_sq.value() - c * mean * mean) / (c - 1.0)).max(0.0);
        (var / c).sqrt()
    }
}

/// One fitted tree on a single-positive draw: its type and positive area.
pub fn single_positive_trial(n: usize, p: usize, master_seed: u64, iteration: u64) -> Result<(TreeType, f64)> {
    let seed = derive_seed(master_seed, &[n as u64, iteration]);
    let data = generate_single_positive(n, p, seed)?;
    let model = fit(&data, &FitConfig::purity())?;
    Ok((model.classify_tree_type(), model.prevalence_integral_unit_cube()))
}

/// Fits purity trees to single-positive uniform datasets and aggregates the
/// positive-region size per tree type.
pub fn run_single_positive_experiment(config: &SinglePositiveConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let started = Instant::now();
    let pool = pool(config.workers)?;
    let mut sizes = Vec::with_capacity(config.n_values.len());
    for &n in &config.n_values {
        let blocks = config.iterations.div_ceil(BLOCK);
        let run_block = |b: usize| -> Result<(BTreeMap<TreeType, Moments>, Moments)> {
            let mut per_type: BTreeMap<TreeType, Moments> = BTreeMap::new();
            let mut all = Moments::default();
            for it in b * BLOCK..((b + 1) * BLOCK).min(config.iterations) {
                let (t, area) = single_positive_trial(n, config.p, config.master_seed, it as u64)?;
                let ratio = area * n as f64;
                per_type.entry(t).or_default().add(ratio);
                all.add(ratio);
            }
            Ok((per_type, all))
        };
        let partials: Vec<_> = run_in(&pool, || {
            (0..blocks).into_par_iter().map(run_block).collect::<Result<Vec<_>>>()
        })?;
        let mut per_type: BTreeMap<TreeType, Moments> = BTreeMap::new();
        let mut all = Moments::default();
        for (pt, a) in &partials {
            for (t, m) in pt {
                per_type.entry(*t).or_default().merge(m);
            }
            all.merge(a);
        }
        let types = per_type
            .into_iter()
            .map(|(tree_type, m)| TypeStats {
                tree_type,
                count: m.count,
                proportion: m.count as f64 / config.iterations as f64,
                mean_positive_region: m.mean() / n as f64,
                ratio_to_true: m.mean(),
                ratio_se: m.se(),
            })
            .collect();
        sizes.push(SizeReport {
            n,
            types,
            overall_ratio: all.mean(),
            overall_se: all.se(),
        });
    }
    Ok(ExperimentReport {
        config: config.clone(),
        sizes,
        wall_time: started.elapsed(),
    })
}

/// One row of the analytic single-positive table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table1Row {
    pub n: usize,
    pub type1_ratio: f64,
    pub type1_proportion: f64,
    pub type2_ratio: f64,
    /// Assumes two-split trees on different features behave like same-feature
    /// ones.
    pub overall_ratio: f64,
}

/// Analytic expectations for the single-positive experiment.
pub fn summarize_table1(n_values: &[usize], p: usize) -> Result<Vec<Table1Row>> {
    ensure_arg!(p >= 1, "need p >= 1");
    n_values
        .iter()
        .map(|&n| {
            let b = theorem2_breakdown(n, p)?;
            let nf = n as f64;
            Ok(Table1Row {
                n,
                type1_ratio: nf * b.e_size_extreme,
                type1_proportion: b.p_extreme,
                type2_ratio: nf * b.e_size_not_extreme,
                overall_ratio: b.ratio_to_true,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppendixConfig {
    pub dgp: DgpName,
    pub b_values: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub runs: usize,
    pub master_seed: u64,
    pub workers: Option<usize>,
}

impl AppendixConfig {
    /// Desk-scale defaults for one of the built-in predictor sets.
    pub fn desk(dgp: DgpName) -> Self {
        Self {
            dgp,
            b_values: default_b_values(dgp).to_vec(),
            n_train: 100_000,
            n_test: 100_000,
            runs: 10,
            master_seed: DEFAULT_SEED,
            workers: None,
        }
    }

    pub fn paper_scale(dgp: DgpName) -> Self {
        Self {
            n_train: 1_000_000,
            n_test: 1_000_000,
            runs: 50,
            ..Self::desk(dgp)
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_arg!(!self.b_values.is_empty(), "need at least one b");
        ensure_arg!(self.b_values.iter().all(|b| b.is_finite()), "b values must be finite");
        ensure_arg!(self.n_train >= 2 && self.n_test >= 2, "train and test need at least two rows");
        ensure_arg!(self.runs >= 2, "need at least two runs for a standard deviation");
        ensure_arg!(self.workers != Some(0), "workers must be positive");
        Ok(())
    }
}

/// The imbalance settings reported for each built-in predictor set.
pub fn default_b_values(dgp: DgpName) -> &'static [f64] {
    match dgp {
        DgpName::NormalA1 => &[0.2, 0.6, 1.0, 2.0, 2.4],
        DgpName::LognormalA1 => &[0.6, 0.8, 1.0, 1.4, 2.0],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppendixRow {
    pub dgp: DgpName,
    pub b: f64,
    /// Mean over runs of the test-set label prevalence.
    pub mean_prevalence: f64,
    /// Mean over runs of sum(predictions) / sum(true probabilities) on the
    /// test set.
    pub mean_ratio: f64,
    /// Across-run sample standard deviation of the ratio.
    pub sd_ratio: f64,
    /// Mean over runs of the same ratio with true probabilities as
    /// predictions (always 1).
    pub oracle_ratio: f64,
    /// Runs whose training draw had no positives and was redrawn.
    pub redraws: usize,
}

struct RunOutcome {
    prevalence: f64,
    ratio: f64,
    oracle_ratio: f64,
    redraws: usize,
}

const MAX_REDRAWS: u64 = 100;

fn appendix_run(config: &AppendixConfig, b_index: usize, b: f64, run: usize) -> Result<RunOutcome> {
    let dgp = LogitDgpConfig::builtin(config.dgp, b);
    let coords = |attempt: u64, part: u64| [b_index as u64, run as u64, attempt, part];
    let mut attempt = 0;
    let train = loop {
        let seed = derive_seed(config.master_seed, &coords(attempt, 0));
        let train = generate_logit_dgp(config.n_train, &dgp, seed)?;
        if train.n_positive() > 0 {
            break train;
        }
        eprintln!("note: b={b} run={run}: training draw had no positives, redrawing");
        attempt += 1;
        ensure_arg!(attempt < MAX_REDRAWS, "no positives after {MAX_REDRAWS} training draws at b={b}");
    };
    let model = fit(&train, &FitConfig::purity())?;
    drop(train);
    let test = generate_logit_dgp(config.n_test, &dgp, derive_seed(config.master_seed, &coords(attempt, 1)))?;
    let (_, ratio) = model.prevalence_empirical(&test)?;
    let tp = test.true_probs().expect("logit data carries probabilities");
    let (_, oracle) = crate::tree::prediction_summary(tp, Some(tp));
    Ok(RunOutcome {
        prevalence: test.prevalence(),
        ratio: ratio.expect("true probabilities present"),
        oracle_ratio: oracle.expect("true probabilities present"),
        redraws: attempt as usize,
    })
}

/// Fits purity trees to logit-model data and reports the ratio of summed
/// test predictions to summed true probabilities.
pub fn run_appendix_experiment(config: &AppendixConfig) -> Result<Vec<AppendixRow>> {
    config.validate()?;
    let pool = pool(config.workers)?;
    let jobs: Vec<(usize, usize)> = (0..config.b_values.len())
        .flat_map(|bi| (0..config.runs).map(move |r| (bi, r)))
        .collect();
    let outcomes: Vec<RunOutcome> = run_in(&pool, || {
        jobs.par_iter()
            .map(|&(bi, r)| appendix_run(config, bi, config.b_values[bi], r))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(config
        .b_values
        .iter()
        .enumerate()
        .map(|(bi, &b)| {
            let runs = &outcomes[bi * config.runs..(bi + 1) * config.runs];
            let k = runs.len() as f64;
            let mean = |f: fn(&RunOutcome) -> f64| runs.iter().map(f).sum::<NeumaierSum>().value() / k;
            let mean_ratio = mean(|o| o.ratio);
            let var = runs
                .iter()
                .map(|o| (o.ratio - mean_ratio).powi(2))
                .sum::<NeumaierSum>()
                .value()
                / (k - 1.0);
            AppendixRow {
                dgp: config.dgp,
                b,
                mean_prevalence: mean(|o| o.prevalence),
                mean_ratio,
                sd_ratio: var.sqrt(),
                oracle_ratio: mean(|o| o.oracle_ratio),
                redraws: runs.iter().map(|o| o.redraws).sum(),
            }
        })
        .collect())
}
