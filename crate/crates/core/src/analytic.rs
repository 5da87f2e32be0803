//! Closed-form expected prevalence estimates for trees on uniform predictors.
//!
//! Everything here rests on one fact about `n` iid `Uniform(0, 1)` draws: the
//! `i`-th order statistic has mean `i / (n + 1)`, so a midpoint threshold
//! between the `i`-th and `(i+1)`-th draws sits at `(2i + 1) / (2(n + 1))` in
//! expectation.
//!
//! Float versions are the primary API. The `*_exact` variants evaluate the
//! same formulas over arbitrary-precision rationals for small `n`, which lets
//! tests assert identities with `==`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::ensure_arg;
use crate::Result;

/// Largest `n` accepted by the exact-rational calculators.
pub const EXACT_MAX_N: u64 = 4096;

/// Counts describing one binary split of `n` observations, `m = a + k` of them
/// positive: `i` go left (`a` positive), `j` go right (`k` positive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SplitSummary {
    pub n: usize,
    pub i: usize,
    pub j: usize,
    pub a: usize,
    pub k: usize,
}

impl SplitSummary {
    /// Builds the summary for a split leaving `i` of `n` observations on the
    /// left with `a` positives there and `k` on the right.
    pub fn new(n: usize, i: usize, a: usize, k: usize) -> Result<Self> {
        ensure_arg!(i >= 1 && i < n, "left size must satisfy 1 <= i < n (i={i}, n={n})");
        let s = SplitSummary { n, i, j: n - i, a, k };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let SplitSummary { n, i, j, a, k } = *self;
        ensure_arg!(i >= 1 && j >= 1, "both sides need an observation (i={i}, j={j})");
        ensure_arg!(i + j == n, "i + j must equal n ({i} + {j} != {n})");
        ensure_arg!(a <= i, "left positives exceed left size ({a} > {i})");
        ensure_arg!(k <= j, "right positives exceed right size ({k} > {j})");
        ensure_arg!(a + k < n, "need m = a + k <= n - 1 (m={})", a + k);
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.a + self.k
    }

    /// The same split seen from the other end of the predictor axis.
    pub fn mirrored(&self) -> Self {
        SplitSummary {
            n: self.n,
            i: self.j,
            j: self.i,
            a: self.k,
            k: self.a,
        }
    }
}

/// Expected size of the positive region of a purity-fit tree when the single
/// positive case is, or is not, extreme on the splitting predictor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Breakdown {
    /// Probability that the positive case is the min or max of at least one
    /// predictor.
    pub p_extreme: f64,
    pub e_size_extreme: f64,
    pub e_size_not_extreme: f64,
    pub e_size_overall: f64,
    /// `e_size_overall / (1/n)`.
    pub ratio_to_true: f64,
}

/// Exact counterpart of [`Theorem2Breakdown`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExactBreakdown {
    pub p_extreme: BigRational,
    pub e_size_extreme: BigRational,
    pub e_size_not_extreme: BigRational,
    pub e_size_overall: BigRational,
    pub ratio_to_true: BigRational,
}

/// `E[X_(i)] = i / (n + 1)` for `n` iid uniforms.
pub fn expected_order_statistic(i: usize, n: usize) -> f64 {
    i as f64 / (n as f64 + 1.0)
}

/// Expected midpoint threshold between the `i`-th and `(i+1)`-th of `n`
/// uniforms, i.e. the expected size of the left region.
pub fn expected_left_mass(i: usize, n: usize) -> f64 {
    (2 * i + 1) as f64 / (2.0 * (n as f64 + 1.0))
}

/// One predictor, one positive case: the estimate is unbiased.
pub fn theorem1_breakdown(n: usize) -> Result<Theorem2Breakdown> {
    theorem2_breakdown(n, 1)
}

/// `p` predictors, one positive case, tree fit to purity on a single
/// predictor.
pub fn theorem2_breakdown(n: usize, p: usize) -> Result<Theorem2Breakdown> {
    ensure_arg!(n >= 3, "need n >= 3, got {n}");
    ensure_arg!(p >= 1, "need p >= 1, got {p}");
    ensure_arg!(p <= i32::MAX as usize, "p too large");
    let nf = n as f64;
    let not_extreme_one = (nf - 2.0) / nf;
    let p_extreme = 1.0 - not_extreme_one.powi(p as i32);
    let e_size_extreme = 1.5 / (nf + 1.0);
    let e_size_not_extreme = 1.0 / (nf + 1.0);
    let e_size_overall = p_extreme * e_size_extreme + (1.0 - p_extreme) * e_size_not_extreme;
    Ok(Theorem2Breakdown {
        p_extreme,
        e_size_extreme,
        e_size_not_extreme,
        e_size_overall,
        ratio_to_true: nf * e_size_overall,
    })
}

/// Exact-rational version of [`theorem2_breakdown`] for `n <= EXACT_MAX_N`.
pub fn theorem2_breakdown_exact(n: u64, p: u64) -> Result<ExactBreakdown> {
    ensure_arg!(n >= 3, "need n >= 3, got {n}");
    ensure_arg!(n <= EXACT_MAX_N, "exact mode supports n <= {EXACT_MAX_N}, got {n}");
    ensure_arg!(p >= 1, "need p >= 1, got {p}");
    ensure_arg!(p <= 1024, "exact mode supports p <= 1024, got {p}");
    let r = |num: u64, den: u64| BigRational::new(BigInt::from(num), BigInt::from(den));
    let not_extreme_one = r(n - 2, n);
    let mut pow = BigRational::one();
    for _ in 0..p {
        pow *= &not_extreme_one;
    }
    let p_extreme = BigRational::one() - &pow;
    let e_size_extreme = r(3, 2 * (n + 1));
    let e_size_not_extreme = r(1, n + 1);
    let e_size_overall = &p_extreme * &e_size_extreme + &pow * &e_size_not_extreme;
    let ratio_to_true = &e_size_overall * BigInt::from(n);
    Ok(ExactBreakdown {
        p_extreme,
        e_size_extreme,
        e_size_not_extreme,
        e_size_overall,
        ratio_to_true,
    })
}

pub fn theorem1_breakdown_exact(n: u64) -> Result<ExactBreakdown> {
    theorem2_breakdown_exact(n, 1)
}

/// Expected size of the positive region as a function of a continuous
/// predictor count `p`.
pub fn expected_positive_region(n: usize, p: f64) -> Result<f64> {
    ensure_arg!(n >= 3, "need n >= 3, got {n}");
    let nf = n as f64;
    let q = ((nf - 2.0) / nf).powf(p);
    Ok(q / (nf + 1.0) + (1.0 - q) * 1.5 / (nf + 1.0))
}

/// Derivative of [`expected_positive_region`] with respect to `p`:
/// `ln((n-2)/n) * ((n-2)/n)^p * (-1/2) / (n+1)`. Positive for every `n > 2`.
pub fn theorem2_derivative_in_p(n: usize, p: f64) -> Result<f64> {
    ensure_arg!(n >= 3, "need n >= 3 (log of a nonpositive ratio otherwise), got {n}");
    let nf = n as f64;
    let q = (nf - 2.0) / nf;
    Ok(q.ln() * q.powf(p) * (-0.5 / (nf + 1.0)))
}

/// Expected prevalence estimate given the split described by `s`:
/// `(a/i)(1/2)((2i+1)/(n+1)) + (k/j)[1 - (1/2)((2i+1)/(n+1))]`.
pub fn theorem3_expected_prevalence(s: &SplitSummary) -> Result<f64> {
    s.validate()?;
    Ok(theorem3_unchecked(s.n, s.i, s.a, s.k))
}

/// [`theorem3_expected_prevalence`] without validation. The right mass
/// `1 - (2i+1)/(2(n+1))` is written as `(2j+1)/(2(n+1))`, which makes the
/// value bit-identical under mirroring.
#[inline]
pub(crate) fn theorem3_unchecked(n: usize, i: usize, a: usize, k: usize) -> f64 {
    let j = n - i;
    let left = a as f64 * (2 * i + 1) as f64 / i as f64;
    let right = k as f64 * (2 * j + 1) as f64 / j as f64;
    (left + right) / (2.0 * (n as f64 + 1.0))
}

pub fn theorem3_expected_prevalence_exact(s: &SplitSummary) -> Result<BigRational> {
    s.validate()?;
    let big = |v: usize| BigInt::from(v);
    let left_mass = BigRational::new(big(2 * s.i + 1), big(2 * (s.n + 1)));
    let right_mass = BigRational::one() - &left_mass;
    let mut v = BigRational::zero();
    if s.a > 0 {
        v += BigRational::new(big(s.a), big(s.i)) * left_mass;
    }
    if s.k > 0 {
        v += BigRational::new(big(s.k), big(s.j)) * right_mass;
    }
    Ok(v)
}

/// Small-sample bias of the logistic-regression intercept,
/// `(pi - 0.5) / (n pi (1 - pi))`, in log-odds units.
pub fn logistic_intercept_bias(n: usize, pi_bar: f64) -> Result<f64> {
    ensure_arg!(n >= 1, "need n >= 1");
    ensure_arg!(pi_bar > 0.0 && pi_bar < 1.0, "pi_bar must lie in (0, 1), got {pi_bar}");
    Ok((pi_bar - 0.5) / (n as f64 * pi_bar * (1.0 - pi_bar)))
}
