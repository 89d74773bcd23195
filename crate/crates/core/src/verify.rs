//! Self-checks behind `ollga verify`: the sampler, the λ = 1 equivalence with
//! the (1+1) EA, and the reference oracles. Each check reports a pass/fail
//! line; a fault can be injected to confirm that failures are detected.

use std::fmt;
use std::str::FromStr;

use rand::distr::Distribution;
use statrs::distribution::{Binomial as RefBinomial, Discrete};

use crate::bitstring::BitString;
use crate::engine::{crossover_phase, mutation_phase, rng_for_seed, BoundSpec, Evaluator, HyperParams};
use crate::oracles::{
    brute_force_mst_weight, composite_offspring_distribution, compute_p_pc, kruskal_mst_weight,
    partition_optimum_with, PartitionMethod,
};
use crate::powerlaw::{Bound, PowerLaw};
use crate::problems::{gen_random_mst_instance, gen_random_partition_instance, Problem};
use crate::stats::{chi_square_gof, ChiSquare};

/// Threshold below which a goodness-of-fit p-value counts as a failure.
pub const P_THRESHOLD: f64 = 0.001;
/// Bucket-merging threshold for chi-square tests.
pub const MIN_EXPECTED: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    PowerLaw,
    Equivalence,
    Oracles,
    All,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "powerlaw" => Ok(Suite::PowerLaw),
            "equivalence" => Ok(Suite::Equivalence),
            "oracles" => Ok(Suite::Oracles),
            "all" => Ok(Suite::All),
            other => Err(format!("unknown suite {other:?}")),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::PowerLaw => "powerlaw",
            Suite::Equivalence => "equivalence",
            Suite::Oracles => "oracles",
            Suite::All => "all",
        })
    }
}

/// Deliberate defects for exercising the failure path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Every pmf value is inflated by 0.1%.
    UnnormalizedPmf,
}

impl FromStr for Fault {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unnormalized-pmf" => Ok(Fault::UnnormalizedPmf),
            other => Err(format!("unknown fault {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Draws per sampler configuration and iterations of the equivalence check.
    pub draws: u64,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            draws: 1_000_000,
            seed: 20_200_601,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub suite: Suite,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} [{}] {}: {}", self.suite, self.name, self.detail)
    }
}

fn outcome(suite: Suite, name: impl Into<String>, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        suite,
        name: name.into(),
        passed,
        detail,
    }
}

pub fn run_suite(suite: Suite, options: &VerifyOptions) -> Vec<CheckOutcome> {
    match suite {
        Suite::PowerLaw => powerlaw_suite(options),
        Suite::Equivalence => equivalence_suite(options),
        Suite::Oracles => oracles_suite(options),
        Suite::All => [Suite::PowerLaw, Suite::Equivalence, Suite::Oracles]
            .into_iter()
            .flat_map(|s| run_suite(s, options))
            .collect(),
    }
}

/// Largest value tabulated separately by [`sampler_chi_square`]; larger draws
/// share one tail bucket.
const TABULATED: u64 = 100_000;

/// Chi-square test of `draws` samples of `law` against `pmf` (normally
/// `law.pmf`), values above a cut-off pooled into a tail bucket.
pub fn sampler_chi_square(
    law: &PowerLaw,
    pmf: impl Fn(u64) -> f64,
    draws: u64,
    seed: u64,
) -> ChiSquare {
    let top = law.upper().finite().map_or(TABULATED, |u| u.min(TABULATED));
    let mut rng = rng_for_seed(seed);
    let mut observed = vec![0u64; top as usize + 1];
    for _ in 0..draws {
        let x = law.sample(&mut rng);
        observed[(x.min(top + 1) - 1) as usize] += 1;
    }
    let mut probs: Vec<f64> = (1..=top).map(&pmf).collect();
    let head: f64 = probs.iter().sum();
    probs.push((1.0 - head).max(0.0));
    chi_square_gof(&observed, &probs, MIN_EXPECTED)
}

fn powerlaw_suite(options: &VerifyOptions) -> Vec<CheckOutcome> {
    let suite = Suite::PowerLaw;
    let scale = match options.fault {
        Some(Fault::UnnormalizedPmf) => 1.001,
        None => 1.0,
    };
    let mut out = Vec::new();

    let c12 = PowerLaw::bounded(1.0, 2).expect("valid").normalization();
    out.push(outcome(
        suite,
        "C(1, 2) = 2/3",
        (c12 - 2.0 / 3.0).abs() < 1e-12,
        format!("{c12:.15}"),
    ));
    let c2inf = PowerLaw::unbounded(2.0).expect("valid").normalization();
    let want = 6.0 / std::f64::consts::PI.powi(2);
    out.push(outcome(
        suite,
        "C(2, inf) = 6/pi^2",
        (c2inf - want).abs() < 1e-12,
        format!("{c2inf:.15}"),
    ));

    let mut worst = 0.0f64;
    for beta in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
        for u in [1u64, 2, 10, 1000, 100_000] {
            let law = PowerLaw::bounded(beta, u).expect("valid");
            let total = compensated_sum((1..=u).map(|i| law.pmf(i) * scale));
            worst = worst.max((total - 1.0).abs());
        }
    }
    out.push(outcome(
        suite,
        "pmf sums to 1 over the (beta, u) grid",
        worst < 1e-12,
        format!("max deviation {worst:.3e}"),
    ));

    let configs = [
        (1.0, Bound::Finite(10)),
        (2.0, Bound::Finite(10)),
        (3.0, Bound::Finite(10)),
        (1.0, Bound::Finite(1000)),
        (2.0, Bound::Finite(1000)),
        (3.0, Bound::Finite(1000)),
        (1.5, Bound::Infinite),
        (2.0, Bound::Infinite),
        (3.0, Bound::Infinite),
    ];
    for (i, (beta, upper)) in configs.into_iter().enumerate() {
        let law = PowerLaw::new(beta, upper).expect("valid");
        let chi = sampler_chi_square(&law, |j| law.pmf(j) * scale, options.draws, options.seed.wrapping_add(i as u64));
        out.push(outcome(
            suite,
            format!("sampler chi-square beta={beta} u={upper}"),
            chi.p_value > P_THRESHOLD,
            format!("stat={:.2} df={} p={:.4}", chi.statistic, chi.df, chi.p_value),
        ));
    }
    out
}

/// Kahan–Babuška summation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}

/// Reference `Bin(n, q)` table from an independent implementation.
fn reference_binomial(n: usize, q: f64) -> Vec<f64> {
    let d = RefBinomial::new(q, n as u64).expect("valid binomial");
    (0..=n as u64).map(|h| d.pmf(h)).collect()
}

/// Histogram of the parent–offspring distance over `iterations` λ = 1
/// iterations with `ℓ ~ Bin(n, p)` and crossover bias `c`.
pub fn lambda_one_distance_histogram(n: usize, p: f64, c: f64, iterations: u64, seed: u64) -> Vec<u64> {
    let problem = Problem::onemax(n).expect("n >= 1");
    let mut eval = Evaluator::unlimited(&problem);
    let mut rng = rng_for_seed(seed);
    let ell = rand_distr::Binomial::new(n as u64, p).expect("valid binomial");
    let x = BitString::zeros(n);
    let mut hist = vec![0u64; n + 1];
    for _ in 0..iterations {
        let l = ell.sample(&mut rng) as usize;
        let mutant = mutation_phase(&x, 1, l, &mut eval, &mut rng).expect("unlimited budget");
        let y = crossover_phase(&x, &mutant.offspring, 1, c, &mut eval, &mut rng).expect("unlimited budget");
        hist[y.offspring.hamming(&x)] += 1;
    }
    hist
}

fn equivalence_suite(options: &VerifyOptions) -> Vec<CheckOutcome> {
    let suite = Suite::Equivalence;
    let (n, p, c) = (10, 0.3, 0.3);
    let reference = reference_binomial(n, p * c);
    let exact = composite_offspring_distribution(n, p, c);
    let worst = exact
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let hist = lambda_one_distance_histogram(n, p, c, options.draws, options.seed);
    let chi = chi_square_gof(&hist, &reference, MIN_EXPECTED);
    vec![
        outcome(
            suite,
            "composite offspring law equals Bin(10, 0.09)",
            worst < 1e-12,
            format!("max deviation {worst:.3e}"),
        ),
        outcome(
            suite,
            "lambda = 1 iteration distance ~ Bin(10, 0.09)",
            chi.p_value > P_THRESHOLD,
            format!("{} iterations, stat={:.2} df={} p={:.4}", options.draws, chi.statistic, chi.df, chi.p_value),
        ),
    ]
}

fn oracles_suite(options: &VerifyOptions) -> Vec<CheckOutcome> {
    let suite = Suite::Oracles;
    let mut rng = rng_for_seed(options.seed);
    let mut out = Vec::new();

    let mut mismatches = 0;
    for i in 0..200 {
        let vertices = 2 + i % 7;
        let max_edges = (vertices * (vertices - 1) / 2).min(16);
        let edges = rand::Rng::random_range(&mut rng, vertices - 1..=max_edges);
        let inst = gen_random_mst_instance(vertices, edges, 10, &mut rng).expect("feasible");
        mismatches += (kruskal_mst_weight(&inst) != brute_force_mst_weight(&inst)) as u32;
    }
    out.push(outcome(
        suite,
        "Kruskal equals brute force on 200 random graphs",
        mismatches == 0,
        format!("{mismatches} mismatches"),
    ));

    let mut disagreements = 0;
    for i in 0..100 {
        let inst = gen_random_partition_instance(1 + i % 16, 100, &mut rng).expect("feasible");
        let values = [PartitionMethod::Exhaustive, PartitionMethod::MeetInTheMiddle, PartitionMethod::SubsetSum]
            .map(|m| partition_optimum_with(&inst, m));
        disagreements += (values[0] != values[1] || values[0] != values[2]) as u32;
    }
    out.push(outcome(
        suite,
        "partition methods agree on 100 random instances",
        disagreements == 0,
        format!("{disagreements} disagreements"),
    ));

    let hyper = HyperParams {
        beta_lambda: 2.5,
        u_lambda: BoundSpec::Infinite,
        beta_p: 2.0,
        u_p: BoundSpec::Value(100),
        beta_c: 2.0,
        u_c: BoundSpec::Value(100),
    }
    .resolve(10_000)
    .expect("valid hyperparameters");
    let mut worst = 0.0f64;
    for k in [2u64, 4, 8, 16, 32] {
        let probe = compute_p_pc(&hyper, k).expect("window covered");
        worst = worst.max((probe.p_pc - double_loop_p_pc(2.0, 100, 2.0, 100, k)).abs());
    }
    out.push(outcome(
        suite,
        "p_pc equals the double-loop sum",
        worst < 1e-12,
        format!("max deviation {worst:.3e}"),
    ));
    out
}

/// `p_pc` by summing the joint pmf over every pair `(i, j)` in `[1..u]²`
/// with both `i` and `j` inside the jump window.
pub fn double_loop_p_pc(beta_p: f64, u_p: u64, beta_c: f64, u_c: u64, k: u64) -> f64 {
    let inside = |i: u64| k <= i * i && i * i <= 2 * k;
    let zp: f64 = (1..=u_p).map(|i| (i as f64).powf(-beta_p)).sum();
    let zc: f64 = (1..=u_c).map(|j| (j as f64).powf(-beta_c)).sum();
    let mut total = 0.0;
    for i in 1..=u_p {
        for j in 1..=u_c {
            if inside(i) && inside(j) {
                total += (i as f64).powf(-beta_p) / zp * (j as f64).powf(-beta_c) / zc;
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyOptions {
        VerifyOptions {
            draws: 100_000,
            ..VerifyOptions::default()
        }
    }

    #[test]
    fn all_suites_pass() {
        for check in run_suite(Suite::All, &quick()) {
            assert!(check.passed, "{check}");
        }
    }

    #[test]
    fn injected_fault_is_detected() {
        let options = VerifyOptions {
            fault: Some(Fault::UnnormalizedPmf),
            ..quick()
        };
        let checks = run_suite(Suite::PowerLaw, &options);
        assert!(checks.iter().any(|c| !c.passed));
    }

    #[test]
    fn names_parse() {
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert!("everything".parse::<Suite>().is_err());
        assert_eq!("unnormalized-pmf".parse::<Fault>().unwrap(), Fault::UnnormalizedPmf);
    }
}
