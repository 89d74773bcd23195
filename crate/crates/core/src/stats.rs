//! Descriptive statistics, the two-sample tests used to compare runtimes, and
//! a chi-square goodness-of-fit helper for the sampler checks.

use std::fmt;

use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

/// Largest number of arrangements the exact rank-sum test enumerates.
pub const EXACT_ARRANGEMENT_LIMIT: f64 = 1e7;
/// Largest smaller-sample size handled by the exact rank-sum test.
pub const EXACT_MIN_COUNT: usize = 12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("cannot summarize an empty sample")]
    Empty,
    #[error("sample {which} needs at least {need} values, got {got}")]
    TooSmall {
        which: &'static str,
        need: usize,
        got: usize,
    },
    #[error("sample contains a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSummary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator), 0 for a single value.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize(samples: &[f64]) -> Result<SampleSummary, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let count = samples.len();
    let mean = samples.iter().sum::<f64>() / count as f64;
    let std = if count > 1 {
        let ss: f64 = samples.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (count - 1) as f64).sqrt()
    } else {
        0.0
    };
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SampleSummary {
        count,
        mean,
        std,
        min,
        max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestMethod {
    StudentT,
    WilcoxonExact,
    WilcoxonNormalApprox,
}

impl fmt::Display for TestMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestMethod::StudentT => "student-t (pooled variance)",
            TestMethod::WilcoxonExact => "wilcoxon rank-sum (exact)",
            TestMethod::WilcoxonNormalApprox => "wilcoxon rank-sum (normal approximation)",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub method: TestMethod,
    /// Set when the statistic is undefined (zero variance) and the p-value
    /// was assigned by convention.
    pub degenerate: bool,
}

fn check(which: &'static str, s: &[f64], need: usize) -> Result<(), StatsError> {
    if s.len() < need {
        return Err(StatsError::TooSmall {
            which,
            need,
            got: s.len(),
        });
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

/// Two-sided two-sample Student's t-test with pooled variance,
/// `df = n_a + n_b - 2`.
pub fn t_test_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    check("a", a, 2)?;
    check("b", b, 2)?;
    let sa = summarize(a)?;
    let sb = summarize(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let df = na + nb - 2.0;
    let pooled = ((na - 1.0) * sa.std.powi(2) + (nb - 1.0) * sb.std.powi(2)) / df;
    let diff = sa.mean - sb.mean;
    if pooled == 0.0 {
        let (statistic, p_value) = if diff == 0.0 {
            (0.0, 1.0)
        } else {
            (diff.signum() * f64::INFINITY, 0.0)
        };
        return Ok(TestResult {
            statistic,
            p_value,
            method: TestMethod::StudentT,
            degenerate: true,
        });
    }
    let t = diff / (pooled * (1.0 / na + 1.0 / nb)).sqrt();
    Ok(TestResult {
        statistic: t,
        p_value: student_t_two_sided(t, df),
        method: TestMethod::StudentT,
        degenerate: false,
    })
}

/// `Pr[|T| ≥ |t|]` for `T ~ t(df)`, through the regularized incomplete beta
/// function so that far tails keep full relative precision.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Mid-ranks (1-based) of `values`, ties sharing their average rank.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn binomial_coefficient(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Two-sided Wilcoxon rank-sum test. The statistic is the rank sum of `a`.
///
/// Uses the exact permutation distribution of the mid-rank sum when the
/// smaller sample has at most [`EXACT_MIN_COUNT`] values and there are at most
/// [`EXACT_ARRANGEMENT_LIMIT`] arrangements; otherwise the normal
/// approximation with tie-corrected variance and continuity correction.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    check("a", a, 1)?;
    check("b", b, 1)?;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = mid_ranks(&pooled);
    let total = pooled.len();
    let rank_sum_a: f64 = ranks[..a.len()].iter().sum();

    let small = a.len().min(b.len());
    let exact = small <= EXACT_MIN_COUNT
        && binomial_coefficient(total, small) <= EXACT_ARRANGEMENT_LIMIT;
    if exact {
        // Doubled mid-ranks are integers; enumerate subsets of the smaller size.
        let doubled: Vec<u64> = ranks.iter().map(|r| (2.0 * r).round() as u64).collect();
        let observed: u64 = if a.len() == small {
            doubled[..a.len()].iter().sum()
        } else {
            doubled[a.len()..].iter().sum()
        };
        let (le, ge, all) = enumerate_rank_sums(&doubled, small, observed);
        let p = (2.0 * le.min(ge) as f64 / all as f64).min(1.0);
        return Ok(TestResult {
            statistic: rank_sum_a,
            p_value: p,
            method: TestMethod::WilcoxonExact,
            degenerate: false,
        });
    }

    let (na, nb, n) = (a.len() as f64, b.len() as f64, total as f64);
    let mean = na * (n + 1.0) / 2.0;
    let ties = tie_correction(&ranks);
    let var = na * nb / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if var <= 0.0 {
        return Ok(TestResult {
            statistic: rank_sum_a,
            p_value: 1.0,
            method: TestMethod::WilcoxonNormalApprox,
            degenerate: true,
        });
    }
    let d = rank_sum_a - mean;
    let z = (d - 0.5 * d.signum()) / var.sqrt();
    let p = erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0);
    Ok(TestResult {
        statistic: rank_sum_a,
        p_value: p,
        method: TestMethod::WilcoxonNormalApprox,
        degenerate: false,
    })
}

/// `Σ (t³ - t)` over tie groups.
fn tie_correction(ranks: &[f64]) -> f64 {
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut total = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        total += t * t * t - t;
        i = j;
    }
    total
}

/// Counts `size`-subsets of `values` whose sum is `≤ observed`, `≥ observed`,
/// and in total.
fn enumerate_rank_sums(values: &[u64], size: usize, observed: u64) -> (u64, u64, u64) {
    fn walk(
        values: &[u64],
        start: usize,
        left: usize,
        sum: u64,
        observed: u64,
        acc: &mut (u64, u64, u64),
    ) {
        if left == 0 {
            acc.0 += (sum <= observed) as u64;
            acc.1 += (sum >= observed) as u64;
            acc.2 += 1;
            return;
        }
        for i in start..=values.len() - left {
            walk(values, i + 1, left - 1, sum + values[i], observed, acc);
        }
    }
    let mut acc = (0, 0, 0);
    walk(values, 0, size, 0, observed, &mut acc);
    acc
}

/// Runtime divided by `n ln n`.
pub fn normalize_runtime(value: f64, n: usize) -> f64 {
    assert!(n >= 2, "normalization needs n >= 2");
    let n = n as f64;
    value / (n * n.ln())
}

/// Formats a p-value, reporting underflow explicitly.
pub fn format_p_value(p: f64) -> String {
    if p < 1e-300 {
        "< 1e-300".to_string()
    } else {
        format!("{p:.6e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Merged buckets actually tested.
    pub buckets: usize,
}

/// Pearson chi-square goodness of fit. `probabilities` must cover the whole
/// support (its last entry can be a tail bucket). Adjacent buckets are merged
/// left to right until every expected count is at least `min_expected`; a
/// short remainder joins the last group.
pub fn chi_square_gof(observed: &[u64], probabilities: &[f64], min_expected: f64) -> ChiSquare {
    assert_eq!(observed.len(), probabilities.len());
    let total: u64 = observed.iter().sum();
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probabilities) {
        obs += o as f64;
        exp += p * total as f64;
        if exp >= min_expected {
            groups.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if exp > 0.0 || obs > 0.0 {
        match groups.last_mut() {
            Some(last) => {
                last.0 += obs;
                last.1 += exp;
            }
            None => groups.push((obs, exp)),
        }
    }
    let statistic: f64 = groups
        .iter()
        .map(|&(o, e)| if e > 0.0 { (o - e).powi(2) / e } else if o > 0.0 { f64::INFINITY } else { 0.0 })
        .sum();
    let df = groups.len().saturating_sub(1);
    let p_value = if df == 0 || statistic <= 0.0 {
        1.0
    } else if statistic.is_infinite() {
        0.0
    } else {
        gamma_ur(df as f64 / 2.0, statistic / 2.0)
    };
    ChiSquare {
        statistic,
        df,
        p_value,
        buckets: groups.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Two-sided t tail by composite Simpson quadrature of the density.
    fn t_tail_by_quadrature(t: f64, df: f64) -> f64 {
        use statrs::function::gamma::ln_gamma;
        let c = (ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0)).exp() / (df * std::f64::consts::PI).sqrt();
        let density = |x: f64| c * (1.0 + x * x / df).powf(-(df + 1.0) / 2.0);
        // P(|T| < |t|) over [0, |t|], doubled.
        let steps = 200_000;
        let h = t.abs() / steps as f64;
        let mut s = density(0.0) + density(t.abs());
        for i in 1..steps {
            s += density(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        1.0 - 2.0 * s * h / 3.0
    }

    #[test]
    fn summarize_examples() {
        let s = summarize(&[5.0]).unwrap();
        assert_eq!((s.mean, s.std, s.count), (5.0, 0.0, 1));
        let s = summarize(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.std, s.min, s.max), (2.0, 1.0, 1.0, 3.0));
        let s = summarize(&[-1.0, 1.0]).unwrap();
        assert!((s.std - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(summarize(&[]).unwrap_err(), StatsError::Empty);
    }

    #[test]
    fn t_test_examples() {
        let r = t_test_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
        let r = t_test_two_sample(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((r.statistic + 3.0 / (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((r.statistic + 3.674).abs() < 1e-3);
        let oracle = t_tail_by_quadrature(r.statistic, 4.0);
        assert!((r.p_value - oracle).abs() < 1e-9 * oracle, "{} vs {oracle}", r.p_value);
        assert!((r.p_value - 0.0214).abs() < 5e-4);
    }

    #[test]
    fn t_tail_matches_quadrature_across_regimes() {
        for (t, df) in [(0.3, 3.0), (1.7, 10.0), (-2.5, 25.0), (4.0, 198.0)] {
            let p = student_t_two_sided(t, df);
            let q = t_tail_by_quadrature(t, df);
            assert!((p - q).abs() <= 1e-9 * q.max(1e-3), "t={t} df={df}: {p} vs {q}");
        }
    }

    #[test]
    fn t_test_degenerate_variance() {
        let r = t_test_two_sample(&[2.0, 2.0], &[3.0, 3.0]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 0.0);
        let r = t_test_two_sample(&[2.0, 2.0], &[2.0, 2.0]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 1.0);
        assert!(t_test_two_sample(&[1.0], &[2.0, 3.0]).is_err());
    }

    #[test]
    fn far_tail_p_values_stay_positive() {
        let a: Vec<f64> = (0..100).map(|i| 1000.0 + (i % 7) as f64).collect();
        let b: Vec<f64> = (0..100).map(|i| 1010.0 + (i % 5) as f64).collect();
        let r = t_test_two_sample(&a, &b).unwrap();
        assert!(r.p_value > 0.0 && r.p_value < 1e-50, "{}", r.p_value);
        let w = wilcoxon_rank_sum(&a, &b).unwrap();
        assert!(w.p_value > 0.0 && w.p_value < 1e-20, "{}", w.p_value);
    }

    #[test]
    fn wilcoxon_examples() {
        let r = wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.method, TestMethod::WilcoxonExact);
        assert!((r.p_value - 0.1).abs() < 1e-15);
        assert_eq!(r.statistic, 6.0);
        let r = wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.p_value, 1.0);
        let r = wilcoxon_rank_sum(&[4.0, 5.0, 6.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((r.p_value - 0.1).abs() < 1e-15);
    }

    #[test]
    fn wilcoxon_exact_handles_ties() {
        // Permutation distribution of doubled mid-ranks checked by hand:
        // pooled {1,1,2,3}, ranks {1.5,1.5,3,4}; a = {1,1} has the unique
        // smallest rank sum 3 among 6 pairs.
        let r = wilcoxon_rank_sum(&[1.0, 1.0], &[2.0, 3.0]).unwrap();
        assert!((r.p_value - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn exact_and_normal_paths_agree_without_ties() {
        let a: Vec<f64> = [1, 4, 5, 8, 10, 12, 15, 16, 18, 20].iter().map(|&v| v as f64).collect();
        let b: Vec<f64> = [2, 3, 6, 7, 9, 11, 13, 14, 17, 19].iter().map(|&v| v as f64 + 0.5).collect();
        let exact = wilcoxon_rank_sum(&a, &b).unwrap();
        assert_eq!(exact.method, TestMethod::WilcoxonExact);
        let mut a2 = a.clone();
        a2.extend([100.0, 101.0, 102.0]);
        // Force the normal path with the same data by calling internals.
        let pooled: Vec<f64> = a.iter().chain(&b).copied().collect();
        let ranks = mid_ranks(&pooled);
        let w: f64 = ranks[..10].iter().sum();
        let mean = 10.0 * 21.0 / 2.0;
        let sd = (100.0f64 * 21.0 / 12.0).sqrt();
        let d = w - mean;
        let z = (d - 0.5 * d.signum()) / sd;
        let normal = erfc(z.abs() / std::f64::consts::SQRT_2);
        assert!((exact.p_value - normal).abs() < 0.02, "{} vs {normal}", exact.p_value);
        assert_eq!(wilcoxon_rank_sum(&a2, &b).unwrap().method, TestMethod::WilcoxonExact);
    }

    #[test]
    fn normalize_examples() {
        let n = 4096usize;
        let nl = n as f64 * (n as f64).ln();
        assert!((normalize_runtime(nl, n) - 1.0).abs() < 1e-15);
        assert!((normalize_runtime(2.435 * nl, n) - 2.435).abs() < 1e-9);
        assert_eq!(normalize_runtime(0.0, n), 0.0);
    }

    #[test]
    fn p_value_formatting() {
        assert_eq!(format_p_value(0.0), "< 1e-300");
        assert_eq!(format_p_value(0.1), "1.000000e-1");
    }

    #[test]
    fn chi_square_merges_small_buckets() {
        let probs = [0.5, 0.3, 0.15, 0.04, 0.01];
        let obs = [50, 30, 15, 4, 1];
        let c = chi_square_gof(&obs, &probs, 10.0);
        assert_eq!(c.buckets, 3);
        assert!(c.statistic.abs() < 1e-12);
        assert!((c.p_value - 1.0).abs() < 1e-12);
        let bad = chi_square_gof(&[90, 5, 5, 0, 0], &probs, 10.0);
        assert!(bad.p_value < 1e-6);
    }

    proptest! {
        #[test]
        fn tests_are_affine_invariant(
            a in proptest::collection::vec(-100.0f64..100.0, 2..15),
            b in proptest::collection::vec(-100.0f64..100.0, 2..15),
            scale in 0.1f64..10.0,
            shift in -50.0f64..50.0,
        ) {
            let f = |v: &Vec<f64>| v.iter().map(|x| x * scale + shift).collect::<Vec<_>>();
            let t0 = t_test_two_sample(&a, &b).unwrap();
            let t1 = t_test_two_sample(&f(&a), &f(&b)).unwrap();
            prop_assert!((t0.p_value - t1.p_value).abs() < 1e-9);
            let w0 = wilcoxon_rank_sum(&a, &b).unwrap();
            let w1 = wilcoxon_rank_sum(&f(&a), &f(&b)).unwrap();
            prop_assert!((w0.p_value - w1.p_value).abs() < 1e-12);
            let cube = |v: &Vec<f64>| v.iter().map(|x| x.powi(3)).collect::<Vec<_>>();
            let w2 = wilcoxon_rank_sum(&cube(&a), &cube(&b)).unwrap();
            prop_assert!((w0.p_value - w2.p_value).abs() < 1e-12);
        }

        #[test]
        fn wilcoxon_is_symmetric(
            a in proptest::collection::vec(0u32..20, 1..14),
            b in proptest::collection::vec(0u32..20, 1..14),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let ab = wilcoxon_rank_sum(&a, &b).unwrap();
            let ba = wilcoxon_rank_sum(&b, &a).unwrap();
            prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab.p_value));
        }
    }
}
