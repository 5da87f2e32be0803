//! Exact averages over every ordering of `m` positives among `n` observations
//! sorted on a single uniform predictor.
//!
//! An ordering is an `n`-bit word; position 0 (the smallest predictor value)
//! is the most significant bit, so increasing integers enumerate orderings in
//! lexicographic order. Work is cut into fixed rank ranges, each range is
//! unranked independently, and partial sums are merged in range order. The
//! result is therefore the same for any number of workers.

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{theorem3_unchecked, SplitSummary};
use crate::error::ensure_arg;
use crate::summation::NeumaierSum;
use crate::tree::{XLogX, TIE_TOLERANCE};
use crate::{Error, Result};

/// Longest ordering supported by the bit representation.
pub const MAX_N: usize = 63;
/// Beyond this `n` a full enumeration is likely impractical.
pub const SOFT_MAX_N: usize = 25;
/// Largest `n` for which exact-rational accumulation is offered.
pub const EXACT_MAX_N: usize = 25;

const CHUNK: u64 = 1 << 15;

/// A 0/1 sequence of length `n` with `m` ones, in predictor order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderingPattern {
    bits: Vec<bool>,
    m: usize,
}

impl OrderingPattern {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        let n = bits.len();
        let m = bits.iter().filter(|&&b| b).count();
        ensure_arg!(n >= 2, "ordering needs at least two positions");
        ensure_arg!(m >= 1 && m < n, "ordering needs 1 <= m <= n - 1 ones (m={m}, n={n})");
        Ok(Self { bits, m })
    }

    pub fn from_labels(labels: &[u8]) -> Result<Self> {
        ensure_arg!(labels.iter().all(|&y| y <= 1), "labels must be 0 or 1");
        Self::new(labels.iter().map(|&y| y == 1).collect())
    }

    /// Parses strings such as `"0110001000"` or `"0,1,1,0"`.
    pub fn parse(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !matches!(c, ',' | ' ' | '(' | ')'))
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidArgument(format!("unexpected character '{other}' in ordering"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bits)
    }

    #[cfg(test)]
    fn from_word(word: u64, n: usize) -> Self {
        let bits: Vec<bool> = (0..n).map(|t| word >> (n - 1 - t) & 1 == 1).collect();
        let m = word.count_ones() as usize;
        Self { bits, m }
    }

    pub fn n(&self) -> usize {
        self.bits.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

impl std::fmt::Display for OrderingPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Which candidate wins when several splits have equal weighted entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Smallest left size (the tree's rule).
    #[default]
    Leftmost,
    Rightmost,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumerationResult {
    pub n: usize,
    pub m: usize,
    pub n_orderings: u64,
    pub mean_expected_prevalence: f64,
    /// `mean_expected_prevalence * n / m`.
    pub ratio_to_true: f64,
    /// Exact ratio as `"num/den"`, present when exact accumulation was asked for.
    pub exact_ratio: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationOptions {
    pub workers: Option<usize>,
    pub tie_break: TieBreak,
    pub exact: bool,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self {
            workers: None,
            tie_break: TieBreak::Leftmost,
            exact: false,
        }
    }
}

/// `C(n, k)` in `u64`; `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for t in 1..=k as u128 {
        acc = acc * (n as u128 - k as u128 + t) / t;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// The `rank`-th `n`-bit word with `m` ones, in increasing order.
pub fn unrank(n: usize, m: usize, mut rank: u64) -> Result<u64> {
    ensure_arg!(n <= MAX_N && m <= n, "unrank needs m <= n <= {MAX_N}");
    let total = binomial(n as u64, m as u64).ok_or_else(|| Error::InvalidArgument("C(n, m) overflows".into()))?;
    ensure_arg!(rank < total, "rank {rank} out of range for C({n}, {m}) = {total}");
    let mut word = 0u64;
    let mut ones = m;
    for t in 0..n {
        if ones == 0 {
            break;
        }
        let rest = (n - 1 - t) as u64;
        // Words with a zero at position t come first.
        let with_zero = binomial(rest, ones as u64).expect("fits: bounded by total");
        if rank >= with_zero {
            rank -= with_zero;
            word |= 1 << (n - 1 - t);
            ones -= 1;
        }
    }
    Ok(word)
}

/// Next larger word with the same popcount (Gosper's hack).
#[inline]
fn next_combination(v: u64) -> u64 {
    let t = v | (v - 1);
    let shift = v.trailing_zeros() + 1;
    (t + 1) | (((!t & (!t).wrapping_neg()) - 1) >> shift)
}

struct Splitter {
    n: usize,
    m: usize,
    xlx: XLogX,
    tie: TieBreak,
}

impl Splitter {
    fn new(n: usize, m: usize, tie: TieBreak) -> Self {
        Self { n, m, xlx: XLogX::new(n), tie }
    }

    /// Returns (left size, left positives) of the entropy-best split.
    #[inline]
    fn split(&self, word: u64) -> (usize, usize) {
        let n = self.n;
        let tol = TIE_TOLERANCE * n as f64;
        let mut best = (f64::INFINITY, 0usize, 0usize);
        let mut a = 0usize;
        for i in 1..n {
            a += (word >> (n - i) & 1) as usize;
            let score = self.xlx.split_score(i, a, n - i, self.m - a);
            let better = match self.tie {
                TieBreak::Leftmost => score < best.0 - tol,
                TieBreak::Rightmost => score <= best.0 + tol,
            };
            if better {
                best = (score, i, a);
            }
        }
        (best.1, best.2)
    }
}

/// Entropy-best split of `pattern`, ties to the smallest left size.
pub fn split_for_ordering(pattern: &OrderingPattern) -> SplitSummary {
    split_for_ordering_with(pattern, TieBreak::Leftmost)
}

pub fn split_for_ordering_with(pattern: &OrderingPattern, tie: TieBreak) -> SplitSummary {
    let n = pattern.n();
    let m = pattern.m();
    let xlx = XLogX::new(n);
    let tol = TIE_TOLERANCE * n as f64;
    let mut best = (f64::INFINITY, 0usize, 0usize);
    let mut a = 0usize;
    for i in 1..n {
        a += pattern.bits[i - 1] as usize;
        let score = xlx.split_score(i, a, n - i, m - a);
        let better = match tie {
            TieBreak::Leftmost => score < best.0 - tol,
            TieBreak::Rightmost => score <= best.0 + tol,
        };
        if better {
            best = (score, i, a);
        }
    }
    let (i, a) = (best.1, best.2);
    SplitSummary { n, i, j: n - i, a, k: m - a }
}

/// lcm(1..=n).
fn lcm_upto(n: usize) -> i128 {
    fn gcd(a: i128, b: i128) -> i128 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    (1..=n as i128).fold(1, |acc, x| acc / gcd(acc, x) * x)
}

#[derive(Default, Clone, Copy)]
struct Partial {
    sum: NeumaierSum,
    /// Sum of `2(n+1) * L * value` with `L = lcm(1..=n)`, an integer.
    scaled: i128,
}

/// Averages the split-conditional expected prevalence over all `C(n, m)`
/// orderings.
pub fn enumerate_expected_prevalence(n: usize, m: usize) -> Result<EnumerationResult> {
    enumerate_with(n, m, &EnumerationOptions::default())
}

pub fn enumerate_with(n: usize, m: usize, opts: &EnumerationOptions) -> Result<EnumerationResult> {
    ensure_arg!((2..=MAX_N).contains(&n), "n must be in 2..={MAX_N}, got {n}");
    ensure_arg!(m >= 1 && m < n, "need 1 <= m < n, got m={m}, n={n}");
    ensure_arg!(!opts.exact || n <= EXACT_MAX_N, "exact mode supports n <= {EXACT_MAX_N}");
    let total = binomial(n as u64, m as u64).ok_or_else(|| Error::InvalidArgument("C(n, m) overflows".into()))?;
    if n > SOFT_MAX_N {
        eprintln!("warning: enumerating C({n}, {m}) = {total} orderings");
    }

    let splitter = Splitter::new(n, m, opts.tie_break);
    let lcm = if opts.exact { lcm_upto(n) } else { 0 };
    let chunks = total.div_ceil(CHUNK);

    let run_chunk = |c: u64| -> Partial {
        let start = c * CHUNK;
        let end = (start + CHUNK).min(total);
        let mut word = unrank(n, m, start).expect("rank in range");
        let mut part = Partial::default();
        for r in start..end {
            let (i, a) = splitter.split(word);
            let k = m - a;
            part.sum.add(theorem3_unchecked(n, i, a, k));
            if opts.exact {
                let j = n - i;
                part.scaled +=
                    a as i128 * (2 * i + 1) as i128 * (lcm / i as i128) + k as i128 * (2 * j + 1) as i128 * (lcm / j as i128);
            }
            if r + 1 < end {
                word = next_combination(word);
            }
        }
        part
    };

    let partials: Vec<Partial> = match opts.workers {
        Some(1) => (0..chunks).map(run_chunk).collect(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::ThreadPool(e.to_string()))?
            .install(|| (0..chunks).into_par_iter().map(run_chunk).collect()),
        None => (0..chunks).into_par_iter().map(run_chunk).collect(),
    };

    let mut sum = NeumaierSum::new();
    let mut scaled: i128 = 0;
    for p in &partials {
        sum.merge(&p.sum);
        scaled += p.scaled;
    }
    let mean = sum.value() / total as f64;
    let exact_ratio = opts.exact.then(|| {
        // ratio = scaled / (2(n+1) L total) * n / m
        let r = BigRational::new(
            BigInt::from(scaled) * BigInt::from(n),
            BigInt::from(2 * (n as i128 + 1) * lcm) * BigInt::from(total) * BigInt::from(m),
        );
        format!("{}/{}", r.numer(), r.denom())
    });
    Ok(EnumerationResult {
        n,
        m,
        n_orderings: total,
        mean_expected_prevalence: mean,
        ratio_to_true: mean * n as f64 / m as f64,
        exact_ratio,
    })
}

/// The `(n, m)` pairs with `3 <= n <= max_n` and `1 <= m <= ceil(n/2 - 1)`.
pub fn table3_grid(max_n: usize) -> Vec<(usize, usize)> {
    (3..=max_n)
        .flat_map(|n| (1..=n.div_ceil(2) - 1).map(move |m| (n, m)))
        .collect()
}

/// Expected positive fraction of a segment with a single minority case at
/// 0-based position `pos` among `len` points: `(3/2)/(len+1)` at either end,
/// `1/(len+1)` inside.
fn single_case_mass(pos: usize, len: usize) -> f64 {
    let extreme = pos == 0 || pos + 1 == len;
    (if extreme { 1.5 } else { 1.0 }) / (len as f64 + 1.0)
}

/// Expected positive fraction of `seg`, treated as `seg.len()` uniform order
/// statistics on the unit interval.
fn chain_value(seg: &[bool]) -> f64 {
    let len = seg.len();
    let ones = seg.iter().filter(|&&b| b).count();
    if ones == 0 {
        return 0.0;
    }
    if ones == len {
        return 1.0;
    }
    if ones == 1 {
        let pos = seg.iter().position(|&b| b).expect("one positive");
        return single_case_mass(pos, len);
    }
    if ones + 1 == len {
        let pos = seg.iter().position(|&b| !b).expect("one negative");
        return 1.0 - single_case_mass(pos, len);
    }
    let pattern = OrderingPattern { bits: seg.to_vec(), m: ones };
    let s = split_for_ordering(&pattern);
    let left_mass = crate::analytic::expected_left_mass(s.i, len);
    left_mass * chain_value(&seg[..s.i]) + (1.0 - left_mass) * chain_value(&seg[s.i..])
}

/// Expected prevalence when the tree keeps splitting on this one predictor
/// until every segment is pure.
///
/// Each split at left size `i` of an `n`-point segment allots the left part
/// an expected mass of `(2i+1)/(2(n+1))`; each part is then treated as a
/// fresh set of uniform order statistics on its own interval. A segment with
/// a single minority case uses the closed-form mass of that case.
pub fn pure_chain_expected_prevalence(pattern: &OrderingPattern) -> f64 {
    chain_value(&pattern.bits)
}

/// Values of the pure-chain estimate when the lone positive on one side of
/// the first split is, or is not, extreme on some other predictor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondaryExtremeChain {
    pub prev_extreme: f64,
    pub prev_not_extreme: f64,
    /// Mixture over the probability that the positive is extreme on at least
    /// one of the `p_total - 1` other predictors.
    pub weighted: f64,
    /// Size of the segment holding the lone positive.
    pub segment_len: usize,
    pub p_not_extreme: f64,
}

/// Pure-chain estimate for an ordering whose first split leaves exactly one
/// positive on one side (the right side when both qualify), mixed over
/// whether that positive is extreme on one of the other `p_total - 1`
/// predictors.
pub fn chain_with_secondary_extreme(pattern: &OrderingPattern, p_total: usize) -> Result<SecondaryExtremeChain> {
    ensure_arg!(p_total >= 1, "need at least one predictor");
    let s = split_for_ordering(pattern);
    let (left, right) = pattern.bits.split_at(s.i);
    let left_mass = crate::analytic::expected_left_mass(s.i, s.n);
    let (lone_is_right, lone) = if s.k == 1 {
        (true, right)
    } else if s.a == 1 {
        (false, left)
    } else {
        return Err(Error::InvalidArgument(format!(
            "first split of {pattern} leaves no side with exactly one positive (a={}, k={})",
            s.a, s.k
        )));
    };
    let len = lone.len();
    ensure_arg!(len >= 2, "the lone positive's segment must have a negative to separate from");
    let (other, other_mass, lone_mass) = if lone_is_right {
        (left, left_mass, 1.0 - left_mass)
    } else {
        (right, 1.0 - left_mass, left_mass)
    };
    let other_value = other_mass * chain_value(other);
    let not_extreme = other_value + lone_mass * chain_value(lone);
    let extreme = other_value + lone_mass * 1.5 / (len as f64 + 1.0);
    let p_not_extreme = if len >= 2 {
        ((len as f64 - 2.0) / len as f64).powi((p_total - 1) as i32)
    } else {
        0.0
    };
    Ok(SecondaryExtremeChain {
        prev_extreme: extreme,
        prev_not_extreme: not_extreme,
        weighted: p_not_extreme * not_extreme + (1.0 - p_not_extreme) * extreme,
        segment_len: len,
        p_not_extreme,
    })
}
