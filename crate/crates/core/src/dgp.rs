//! Synthetic data-generating processes.
//!
//! All generators are pure functions of their arguments and a 64-bit seed.

use rand::distr::{Distribution, Open01};
use rand::seq::index;
use rand::Rng;
use rand_distr::{LogNormal, Normal};
use serde::Serialize;

use crate::error::ensure_arg;
use crate::seed::rng_from_seed;
use crate::{Error, Result};

/// A feature matrix with binary labels.
///
/// Features are stored row-major. `true_probs`, when present, holds the
/// success probability each label was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n_rows: usize,
    n_features: usize,
    labels: Vec<u8>,
    true_probs: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        n_features: usize,
        labels: Vec<u8>,
        true_probs: Option<Vec<f64>>,
    ) -> Result<Self> {
        ensure_arg!(n_features >= 1, "dataset needs at least one feature");
        let n_rows = labels.len();
        ensure_arg!(n_rows >= 2, "dataset needs at least two rows, got {n_rows}");
        ensure_arg!(
            features.len() == n_rows * n_features,
            "feature matrix has {} entries, expected {}x{}",
            features.len(),
            n_rows,
            n_features
        );
        ensure_arg!(
            features.iter().all(|v| v.is_finite()),
            "features must be finite"
        );
        ensure_arg!(labels.iter().all(|&y| y <= 1), "labels must be 0 or 1");
        if let Some(tp) = &true_probs {
            ensure_arg!(tp.len() == n_rows, "true_probs length mismatch");
            ensure_arg!(
                tp.iter().all(|&q| (0.0..=1.0).contains(&q)),
                "true_probs must lie in [0, 1]"
            );
        }
        Ok(Self {
            features,
            n_rows,
            n_features,
            labels,
            true_probs,
        })
    }

    /// Builds a dataset from row vectors.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u8>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        ensure_arg!(rows.iter().all(|r| r.len() == p), "ragged feature rows");
        Self::new(rows.concat(), p, labels, None)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Number of positive labels.
    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    pub fn prevalence(&self) -> f64 {
        self.n_positive() as f64 / self.n_rows as f64
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.features[r * self.n_features..(r + 1) * self.n_features]
    }

    #[inline]
    pub fn value(&self, r: usize, f: usize) -> f64 {
        self.features[r * self.n_features + f]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn true_probs(&self) -> Option<&[f64]> {
        self.true_probs.as_deref()
    }
}

/// Marginal distribution of one predictor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredictorSpec {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    /// `exp(N(log_mean, log_sd))`.
    Lognormal { log_mean: f64, log_sd: f64 },
}

impl PredictorSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PredictorSpec::Uniform { lo, hi } => {
                ensure_arg!(hi > lo, "uniform predictor needs hi > lo ({lo}, {hi})")
            }
            PredictorSpec::Normal { sd, .. } => {
                ensure_arg!(sd > 0.0, "normal predictor needs sd > 0, got {sd}")
            }
            PredictorSpec::Lognormal { log_sd, .. } => {
                ensure_arg!(log_sd > 0.0, "lognormal predictor needs log_sd > 0, got {log_sd}")
            }
        }
        Ok(())
    }

    fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        let bad = |e: rand_distr::NormalError| Error::InvalidArgument(e.to_string());
        Ok(match *self {
            PredictorSpec::Uniform { lo, hi } => Sampler::Uniform { lo, width: hi - lo },
            PredictorSpec::Normal { mean, sd } => Sampler::Normal(Normal::new(mean, sd).map_err(bad)?),
            PredictorSpec::Lognormal { log_mean, log_sd } => {
                Sampler::Lognormal(LogNormal::new(log_mean, log_sd).map_err(bad)?)
            }
        })
    }
}

enum Sampler {
    Uniform { lo: f64, width: f64 },
    Normal(Normal<f64>),
    Lognormal(LogNormal<f64>),
}

impl Sampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Uniform { lo, width } => {
                let u: f64 = Open01.sample(rng);
                lo + width * u
            }
            Sampler::Normal(d) => d.sample(rng),
            Sampler::Lognormal(d) => d.sample(rng),
        }
    }
}

/// Number of predictors the logit model is defined over.
pub const LOGIT_PREDICTORS: usize = 10;

/// Named built-in predictor sets for the logit model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum DgpName {
    #[serde(rename = "normal_a1")]
    NormalA1,
    #[serde(rename = "lognormal_a1")]
    LognormalA1,
}

impl DgpName {
    pub fn as_str(&self) -> &'static str {
        match self {
            DgpName::NormalA1 => "normal_a1",
            DgpName::LognormalA1 => "lognormal_a1",
        }
    }

    pub fn predictor_specs(&self) -> [PredictorSpec; LOGIT_PREDICTORS] {
        match self {
            DgpName::NormalA1 => NORMAL_A1.map(|(mean, sd)| PredictorSpec::Normal { mean, sd }),
            DgpName::LognormalA1 => {
                LOGNORMAL_A1.map(|(log_mean, log_sd)| PredictorSpec::Lognormal { log_mean, log_sd })
            }
        }
    }
}

impl std::str::FromStr for DgpName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal_a1" => Ok(DgpName::NormalA1),
            "lognormal_a1" => Ok(DgpName::LognormalA1),
            other => Err(Error::InvalidArgument(format!(
                "unknown dgp '{other}' (expected normal_a1 or lognormal_a1)"
            ))),
        }
    }
}

impl std::fmt::Display for DgpName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

// (mean, sd) per predictor.
const NORMAL_A1: [(f64, f64); LOGIT_PREDICTORS] = [
    (0.5, 0.5),
    (0.5, 0.8),
    (-0.2, 1.0),
    (-0.1, 0.9),
    (0.0, 5.0),
    (0.0, 3.0),
    (2.0, 4.0),
    (3.0, 7.0),
    (1.5, 3.0),
    (0.0, 2.0),
];

// (mean of log, sd of log) per predictor.
const LOGNORMAL_A1: [(f64, f64); LOGIT_PREDICTORS] = [
    (0.05, 0.05),
    (0.05, 0.08),
    (-0.02, 0.1),
    (-0.01, 0.09),
    (0.2, 0.5),
    (0.0, 0.3),
    (0.2, 0.4),
    (0.3, 0.7),
    (0.15, 0.3),
    (0.0, 0.2),
];

#[derive(Debug, Clone, PartialEq)]
pub struct LogitDgpConfig {
    pub predictor_specs: Vec<PredictorSpec>,
    /// Imbalance knob: larger values lower the success rate.
    pub b: f64,
}

impl LogitDgpConfig {
    pub fn builtin(name: DgpName, b: f64) -> Self {
        Self {
            predictor_specs: name.predictor_specs().to_vec(),
            b,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_arg!(
            self.predictor_specs.len() == LOGIT_PREDICTORS,
            "logit model needs exactly {LOGIT_PREDICTORS} predictors, got {}",
            self.predictor_specs.len()
        );
        ensure_arg!(self.b.is_finite(), "b must be finite");
        self.predictor_specs.iter().try_for_each(PredictorSpec::validate)
    }
}

/// `n` rows of `p` iid `Uniform(0, 1)` features with row 0 as the only positive.
///
/// Which row is positive is irrelevant because rows are exchangeable; callers
/// must not assume labels were shuffled.
pub fn generate_single_positive(n: usize, p: usize, rng_seed: u64) -> Result<Dataset> {
    ensure_arg!(n >= 3, "single-positive dataset needs n >= 3, got {n}");
    ensure_arg!(p >= 1, "need at least one predictor");
    let mut rng = rng_from_seed(rng_seed);
    let features = unit_features(&mut rng, n * p);
    let mut labels = vec![0u8; n];
    labels[0] = 1;
    Dataset::new(features, p, labels, None)
}

/// `n` rows of `p` iid `Uniform(0, 1)` features with exactly `m` positives
/// placed at uniformly random rows, independent of the features.
pub fn generate_constant_rate(n: usize, m: usize, p: usize, rng_seed: u64) -> Result<Dataset> {
    ensure_arg!(m >= 1 && m < n, "need 1 <= m < n, got m={m}, n={n}");
    ensure_arg!(p >= 1, "need at least one predictor");
    let mut rng = rng_from_seed(rng_seed);
    let features = unit_features(&mut rng, n * p);
    let mut labels = vec![0u8; n];
    for r in index::sample(&mut rng, n, m) {
        labels[r] = 1;
    }
    Dataset::new(features, p, labels, None)
}

fn unit_features<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| Open01.sample(rng)).collect()
}

/// Log-odds of success under the ten-predictor interaction model:
/// `(ln 99 / 40) * (sum x_i + x1x3 + x2x5 + x4x9 + x6x7 + x8x10 + x1x2x3x4 + x1x2x9x10) - b ln 99`.
pub fn eq_a1_logit(x: &[f64], b: f64) -> Result<f64> {
    ensure_arg!(
        x.len() == LOGIT_PREDICTORS,
        "logit model takes {LOGIT_PREDICTORS} predictors, got {}",
        x.len()
    );
    Ok(logit_unchecked(x, b))
}

#[inline]
fn logit_unchecked(x: &[f64], b: f64) -> f64 {
    let ln99 = 99f64.ln();
    let mains: f64 = x.iter().sum();
    let pairs = x[0] * x[2] + x[1] * x[4] + x[3] * x[8] + x[5] * x[6] + x[7] * x[9];
    let quads = x[0] * x[1] * x[2] * x[3] + x[0] * x[1] * x[8] * x[9];
    ln99 / 40.0 * (mains + pairs + quads) - b * ln99
}

#[inline]
pub fn inverse_logit(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Draws features per `config`, computes success probabilities through the
/// logit model, and samples each label independently.
pub fn generate_logit_dgp(n: usize, config: &LogitDgpConfig, rng_seed: u64) -> Result<Dataset> {
    config.validate()?;
    ensure_arg!(n >= 2, "logit dataset needs n >= 2, got {n}");
    let samplers = config
        .predictor_specs
        .iter()
        .map(PredictorSpec::sampler)
        .collect::<Result<Vec<_>>>()?;
    let mut rng = rng_from_seed(rng_seed);
    let mut features = Vec::with_capacity(n * LOGIT_PREDICTORS);
    let mut labels = Vec::with_capacity(n);
    let mut probs = Vec::with_capacity(n);
    for _ in 0..n {
        let start = features.len();
        features.extend(samplers.iter().map(|s| s.sample(&mut rng)));
        let prob = inverse_logit(logit_unchecked(&features[start..], config.b));
        let u: f64 = rng.random();
        labels.push(u8::from(u < prob));
        probs.push(prob);
    }
    Dataset::new(features, LOGIT_PREDICTORS, labels, Some(probs))
}

/// Success probabilities for an existing feature matrix (ten columns).
pub fn logit_probs(features: &[f64], b: f64) -> Result<Vec<f64>> {
    ensure_arg!(
        features.len().is_multiple_of(LOGIT_PREDICTORS),
        "feature matrix is not a multiple of {LOGIT_PREDICTORS} columns"
    );
    Ok(features
        .chunks_exact(LOGIT_PREDICTORS)
        .map(|row| inverse_logit(logit_unchecked(row, b)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::{prop_assert, proptest};

    // Term-by-term evaluation with 1-based names.
    fn logit_reference(x: &[f64], b: f64) -> f64 {
        let v = |i: usize| x[i - 1];
        let terms = [
            v(1),
            v(2),
            v(3),
            v(4),
            v(5),
            v(6),
            v(7),
            v(8),
            v(9),
            v(10),
            v(1) * v(3),
            v(2) * v(5),
            v(4) * v(9),
            v(6) * v(7),
            v(8) * v(10),
            v(1) * v(2) * v(3) * v(4),
            v(1) * v(2) * v(9) * v(10),
        ];
        let mut total = 0.0;
        for t in terms {
            total += (99f64).ln() / 40.0 * t;
        }
        total - b * (99f64).ln()
    }

    #[test]
    fn single_positive_shape() {
        let d = generate_single_positive(10, 2, 1).unwrap();
        assert_eq!(d.n_rows(), 10);
        assert_eq!(d.n_features(), 2);
        assert_eq!(d.n_positive(), 1);
        assert_eq!(d.labels()[0], 1);
        assert!(d.features().iter().all(|&v| v > 0.0 && v < 1.0));

        let d = generate_single_positive(3, 1, 99).unwrap();
        assert_eq!((d.n_rows(), d.n_features(), d.n_positive()), (3, 1, 1));
    }

    #[test]
    fn single_positive_rejects_small() {
        assert!(matches!(generate_single_positive(2, 2, 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(generate_single_positive(5, 0, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn same_seed_same_bits() {
        let a = generate_single_positive(10, 2, 42).unwrap();
        let b = generate_single_positive(10, 2, 42).unwrap();
        let bits = |d: &Dataset| d.features().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a, b);
        assert_ne!(a, generate_single_positive(10, 2, 43).unwrap());
    }

    #[test]
    fn constant_rate_counts() {
        assert_eq!(generate_constant_rate(10, 3, 1, 5).unwrap().n_positive(), 3);
        let d = generate_constant_rate(5, 2, 2, 5).unwrap();
        assert_eq!(d.n_positive(), 2);
        assert_eq!(d.n_features(), 2);
        assert!(generate_constant_rate(5, 5, 1, 0).is_err());
        assert!(generate_constant_rate(5, 0, 1, 0).is_err());
    }

    #[test]
    fn constant_rate_positions_are_uniform() {
        // Chi-square goodness of fit on per-row positive counts.
        let (n, m, draws) = (10usize, 3usize, 100_000u64);
        let mut counts = vec![0u64; n];
        for s in 0..draws {
            let d = generate_constant_rate(n, m, 1, s).unwrap();
            for (c, &y) in counts.iter_mut().zip(d.labels()) {
                *c += y as u64;
            }
        }
        let expected = draws as f64 * m as f64 / n as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 9 degrees of freedom, 0.999 quantile is 27.88.
        assert!(chi2 < 27.88, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn logit_reference_values() {
        let zeros = [0.0; 10];
        assert_eq!(eq_a1_logit(&zeros, 0.0).unwrap(), 0.0);
        assert_eq!(inverse_logit(0.0), 0.5);
        let z = eq_a1_logit(&zeros, 1.0).unwrap();
        assert!((z + 99f64.ln()).abs() < 1e-15);
        assert!((inverse_logit(z) - 0.01).abs() < 1e-15);
        let ones = [1.0; 10];
        let z = eq_a1_logit(&ones, 0.0).unwrap();
        assert!((z - 17.0 * 99f64.ln() / 40.0).abs() < 1e-14);
        assert!(eq_a1_logit(&[0.0; 9], 0.0).is_err());
    }

    #[test]
    fn logit_matches_reference_on_random_vectors() {
        let mut rng = rng_from_seed(3);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..10).map(|_| rng.random_range(-5.0..5.0)).collect();
            let b = rng.random_range(-1.0..3.0);
            let got = eq_a1_logit(&x, b).unwrap();
            let want = logit_reference(&x, b);
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{got} vs {want}");
        }
    }

    #[test]
    fn logit_dgp_probs_and_labels() {
        let cfg = LogitDgpConfig::builtin(DgpName::LognormalA1, 1.0);
        let d = generate_logit_dgp(2000, &cfg, 11).unwrap();
        let tp = d.true_probs().unwrap();
        assert!(tp.iter().all(|&q| q > 0.0 && q < 1.0));
        assert_eq!(d, generate_logit_dgp(2000, &cfg, 11).unwrap());
        assert!(d.features().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn logit_config_validation() {
        let mut cfg = LogitDgpConfig::builtin(DgpName::NormalA1, 0.2);
        cfg.predictor_specs.pop();
        assert!(generate_logit_dgp(10, &cfg, 0).is_err());
        let mut cfg = LogitDgpConfig::builtin(DgpName::NormalA1, 0.2);
        cfg.predictor_specs[3] = PredictorSpec::Normal { mean: 0.0, sd: 0.0 };
        assert!(generate_logit_dgp(10, &cfg, 0).is_err());
        assert!(PredictorSpec::Uniform { lo: 1.0, hi: 1.0 }.validate().is_err());
        assert!(PredictorSpec::Lognormal { log_mean: 0.0, log_sd: -1.0 }.validate().is_err());
        assert_eq!("lognormal_a1".parse::<DgpName>().unwrap(), DgpName::LognormalA1);
        assert!("uniform".parse::<DgpName>().is_err());
    }

    #[test]
    fn uniform_predictor_respects_bounds() {
        let mut specs = vec![PredictorSpec::Uniform { lo: -2.0, hi: 3.0 }; 10];
        specs[0] = PredictorSpec::Uniform { lo: 0.0, hi: 1.0 };
        let cfg = LogitDgpConfig { predictor_specs: specs, b: 0.0 };
        let d = generate_logit_dgp(500, &cfg, 1).unwrap();
        for r in 0..d.n_rows() {
            assert!(d.row(r)[1..].iter().all(|&v| v > -2.0 && v < 3.0));
        }
    }

    #[test]
    fn mean_probability_decreases_in_b() {
        let cfg = LogitDgpConfig::builtin(DgpName::NormalA1, 0.0);
        let d = generate_logit_dgp(5000, &cfg, 8).unwrap();
        let mut last = f64::INFINITY;
        for b in [0.0, 0.2, 0.6, 1.0, 2.0, 2.4, 4.0] {
            let probs = logit_probs(d.features(), b).unwrap();
            let mean = probs.iter().sum::<f64>() / probs.len() as f64;
            assert!(mean < last, "b={b}: {mean} !< {last}");
            last = mean;
        }
    }

    #[test]
    fn prevalence_drops_from_b1_to_b2() {
        for name in [DgpName::NormalA1, DgpName::LognormalA1] {
            let p1 = generate_logit_dgp(20_000, &LogitDgpConfig::builtin(name, 1.0), 4)
                .unwrap()
                .prevalence();
            let p2 = generate_logit_dgp(20_000, &LogitDgpConfig::builtin(name, 2.0), 4)
                .unwrap()
                .prevalence();
            assert!(p2 < p1, "{name}: {p2} !< {p1}");
        }
    }

    proptest! {
        #[test]
        fn inverse_logit_in_open_unit_interval(z in -30.0f64..30.0) {
            let q = inverse_logit(z);
            prop_assert!(q > 0.0 && q < 1.0);
            prop_assert!((inverse_logit(-z) - (1.0 - q)).abs() < 1e-15);
        }
    }
}
