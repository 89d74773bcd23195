//! The heavy-tailed (1+(λ,λ)) GA and its two baselines, the (1+1) EA and the
//! (1+(λ,λ)) GA with static parameters.
//!
//! Every generated offspring costs one fitness evaluation; nothing is cached.
//! Offspring are streamed: a phase keeps only the first offspring of maximal
//! fitness, so memory stays O(n) however large λ is. A run stops as soon as
//! its evaluation budget is used up, even in the middle of a phase.

use std::fmt;
use std::str::FromStr;

use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Binomial, Geometric};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::bitstring::BitString;
use crate::powerlaw::{Bound, PowerLaw, PowerLawError};
use crate::problems::{init_point, InitMode, Problem, ProblemError};

/// The random stream owned by one run.
pub type RunRng = Xoshiro256PlusPlus;

/// Seeds a run stream; the seed is expanded through SplitMix64.
pub fn rng_for_seed(seed: u64) -> RunRng {
    rand::SeedableRng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("{field}: {source}")]
    PowerLaw {
        field: &'static str,
        source: PowerLawError,
    },
    #[error("{field} must be at most floor(sqrt(n)) = {limit} for n = {n}")]
    ScaledBoundTooLarge {
        field: &'static str,
        limit: u64,
        n: usize,
    },
    #[error("static population size {lambda} must lie in [1..n/2] for n = {n}")]
    StaticLambda { lambda: u64, n: usize },
    #[error("mutation rate must lie in (0, 1], got {0}")]
    MutationRate(f64),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// A power-law bounding as written in configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSpec {
    Value(u64),
    Infinite,
    /// `⌊√n⌋`, resolved when `n` is known.
    SqrtN,
}

impl BoundSpec {
    pub fn resolve(self, n: usize) -> Bound {
        match self {
            BoundSpec::Value(u) => Bound::Finite(u),
            BoundSpec::Infinite => Bound::Infinite,
            BoundSpec::SqrtN => Bound::Finite(floor_sqrt(n)),
        }
    }
}

impl fmt::Display for BoundSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundSpec::Value(u) => write!(f, "{u}"),
            BoundSpec::Infinite => f.write_str("inf"),
            BoundSpec::SqrtN => f.write_str("sqrt_n"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bounding must be a positive integer, \"inf\" or \"sqrt_n\", got {0:?}")]
pub struct ParseBoundError(pub String);

impl FromStr for BoundSpec {
    type Err = ParseBoundError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inf" => Ok(BoundSpec::Infinite),
            "sqrt_n" => Ok(BoundSpec::SqrtN),
            _ => match s.parse::<u64>() {
                Ok(u) if u > 0 => Ok(BoundSpec::Value(u)),
                _ => Err(ParseBoundError(s.to_string())),
            },
        }
    }
}

impl Serialize for BoundSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            BoundSpec::Value(u) => s.serialize_u64(*u),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for BoundSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct Visitor;
        impl serde::de::Visitor<'_> for Visitor {
            type Value = BoundSpec;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive integer, \"inf\" or \"sqrt_n\"")
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<BoundSpec, E> {
                if v == 0 {
                    return Err(E::custom("bounding must be positive"));
                }
                Ok(BoundSpec::Value(v))
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<BoundSpec, E> {
                u64::try_from(v)
                    .map_err(|_| E::custom("bounding must be positive"))
                    .and_then(|v| self.visit_u64(v))
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<BoundSpec, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(Visitor)
    }
}

pub fn floor_sqrt(n: usize) -> u64 {
    (n as u64).isqrt()
}

/// The six distribution hyperparameters of the heavy-tailed GA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub beta_lambda: f64,
    pub u_lambda: BoundSpec,
    pub beta_p: f64,
    pub u_p: BoundSpec,
    pub beta_c: f64,
    pub u_c: BoundSpec,
}

impl HyperParams {
    /// `β_λ = 2.5`, `u_λ = ∞`, `β_p = β_c = 1.1`, `u_p = u_c = ⌊√n⌋`.
    pub fn recommended() -> Self {
        Self::with_exponents(2.5, 1.1)
    }

    /// Unbounded λ and `u_p = u_c = ⌊√n⌋`, with `β_p = β_c = beta_pc`.
    pub fn with_exponents(beta_lambda: f64, beta_pc: f64) -> Self {
        Self {
            beta_lambda,
            u_lambda: BoundSpec::Infinite,
            beta_p: beta_pc,
            u_p: BoundSpec::SqrtN,
            beta_c: beta_pc,
            u_c: BoundSpec::SqrtN,
        }
    }

    pub fn resolve(&self, n: usize) -> Result<ResolvedHyper, EngineError> {
        let limit = floor_sqrt(n);
        let scaled = |field: &'static str, beta: f64, spec: BoundSpec| {
            match spec.resolve(n) {
                Bound::Finite(u) if u <= limit => {}
                _ => return Err(EngineError::ScaledBoundTooLarge { field, limit, n }),
            }
            PowerLaw::new(beta, spec.resolve(n))
                .map_err(|source| EngineError::PowerLaw { field, source })
        };
        let p = scaled("u_p", self.beta_p, self.u_p)?;
        let c = scaled("u_c", self.beta_c, self.u_c)?;
        let lambda = PowerLaw::new(self.beta_lambda, self.u_lambda.resolve(n)).map_err(
            |source| EngineError::PowerLaw {
                field: "lambda distribution",
                source,
            },
        )?;
        Ok(ResolvedHyper {
            n,
            sqrt_n: (n as f64).sqrt(),
            lambda,
            p,
            c,
        })
    }
}

/// Hyperparameters bound to a problem size, with their distributions built.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedHyper {
    n: usize,
    sqrt_n: f64,
    lambda: PowerLaw,
    p: PowerLaw,
    c: PowerLaw,
}

impl ResolvedHyper {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> &PowerLaw {
        &self.lambda
    }

    pub fn p(&self) -> &PowerLaw {
        &self.p
    }

    pub fn c(&self) -> &PowerLaw {
        &self.c
    }
}

/// Parameters drawn for one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationParams {
    pub lambda: u64,
    pub p: f64,
    pub c: f64,
    pub ell: usize,
}

/// Draws `p`, `c` and `λ` independently, then `ℓ ~ Bin(n, p)`.
pub fn sample_iteration_params<R: Rng + ?Sized>(hyper: &ResolvedHyper, rng: &mut R) -> IterationParams {
    let p = hyper.p.sample(rng) as f64 / hyper.sqrt_n;
    let c = hyper.c.sample(rng) as f64 / hyper.sqrt_n;
    let lambda = hyper.lambda.sample(rng);
    let ell = sample_binomial(hyper.n, p, rng);
    IterationParams { lambda, p, c, ell }
}

fn sample_binomial<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> usize {
    let p = p.clamp(0.0, 1.0);
    Binomial::new(n as u64, p)
        .expect("probability clamped into [0, 1]")
        .sample(rng) as usize
}

/// Counts fitness evaluations against a budget.
#[derive(Debug)]
pub struct Evaluator<'a> {
    problem: &'a Problem,
    used: u64,
    budget: u64,
}

impl<'a> Evaluator<'a> {
    pub fn new(problem: &'a Problem, budget: u64) -> Self {
        Self {
            problem,
            used: 0,
            budget,
        }
    }

    pub fn unlimited(problem: &'a Problem) -> Self {
        Self::new(problem, u64::MAX)
    }

    /// Maximized fitness of `x`, or `None` once the budget is spent.
    #[inline]
    pub fn evaluate(&mut self, x: &BitString) -> Option<i64> {
        if self.used >= self.budget {
            return None;
        }
        self.used += 1;
        Some(self.problem.fitness(x))
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn exhausted(&self) -> bool {
        self.used >= self.budget
    }

    pub fn problem(&self) -> &'a Problem {
        self.problem
    }
}

/// Draws `count` distinct values of `[0, range)` (Floyd's algorithm), every
/// subset equally likely.
struct SubsetSampler {
    marked: BitString,
    chosen: Vec<usize>,
}

impl SubsetSampler {
    fn new(capacity: usize) -> Self {
        Self {
            marked: BitString::zeros(capacity),
            chosen: Vec::new(),
        }
    }

    fn draw<R: Rng + ?Sized>(&mut self, range: usize, count: usize, rng: &mut R) -> &[usize] {
        debug_assert!(count <= range && range <= self.marked.len());
        for &i in &self.chosen {
            self.marked.set(i, false);
        }
        self.chosen.clear();
        for j in range - count..range {
            let t = rng.random_range(0..=j);
            let pick = if self.marked.get(t) { j } else { t };
            self.marked.set(pick, true);
            self.chosen.push(pick);
        }
        &self.chosen
    }
}

/// Buffers reused across iterations so that a phase allocates nothing.
struct Workspace {
    sampler: SubsetSampler,
    work: BitString,
    mutant: BitString,
    child: BitString,
    diff: Vec<usize>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            sampler: SubsetSampler::new(n),
            work: BitString::zeros(n),
            mutant: BitString::zeros(n),
            child: BitString::zeros(n),
            diff: Vec::new(),
        }
    }

    /// Mutation phase; the winner is left in `self.mutant`.
    fn mutate<R: Rng + ?Sized>(
        &mut self,
        x: &BitString,
        lambda: u64,
        ell: usize,
        eval: &mut Evaluator<'_>,
        rng: &mut R,
        inspect: &mut impl FnMut(&BitString, i64),
    ) -> Option<i64> {
        let n = x.len();
        assert!(ell <= n, "cannot flip {ell} of {n} bits");
        // Past n/2 it is cheaper to pick the n - ell bits that keep their value.
        let complemented = 2 * ell > n;
        let picks = if complemented { n - ell } else { ell };
        self.work.copy_from(x);
        let mut best: Option<i64> = None;
        for _ in 0..lambda {
            if complemented {
                self.work.complement_from(x);
            }
            let flips = self.sampler.draw(n, picks, rng);
            for &i in flips {
                self.work.flip(i);
            }
            let f = eval.evaluate(&self.work)?;
            inspect(&self.work, f);
            if best.is_none_or(|b| f > b) {
                best = Some(f);
                self.mutant.copy_from(&self.work);
            }
            if complemented {
                continue;
            }
            for &i in flips {
                self.work.flip(i);
            }
        }
        best
    }

    /// Crossover phase between `x` and `self.mutant`; the winner is left in
    /// `self.child`.
    ///
    /// Taking each differing bit from the mutant independently with
    /// probability `c` is the same as drawing how many to take from
    /// `Bin(d, c)` and then a uniform subset of that size.
    fn cross<R: Rng + ?Sized>(
        &mut self,
        x: &BitString,
        lambda: u64,
        c: f64,
        eval: &mut Evaluator<'_>,
        rng: &mut R,
        inspect: &mut impl FnMut(&BitString, i64),
    ) -> Option<i64> {
        x.diff_positions_into(&self.mutant, &mut self.diff);
        let d = self.diff.len();
        let taken = Binomial::new(d as u64, c.clamp(0.0, 1.0)).expect("clamped");
        let mut best: Option<i64> = None;
        for _ in 0..lambda {
            let t = taken.sample(rng) as usize;
            // Start from whichever parent needs fewer positions changed.
            let from_mutant = 2 * t > d;
            let (base, picks) = if from_mutant { (&self.mutant, d - t) } else { (x, t) };
            self.work.copy_from(base);
            for &j in self.sampler.draw(d, picks, rng) {
                self.work.flip(self.diff[j]);
            }
            let f = eval.evaluate(&self.work)?;
            inspect(&self.work, f);
            if best.is_none_or(|b| f > b) {
                best = Some(f);
                self.child.copy_from(&self.work);
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseWinner {
    pub offspring: BitString,
    pub fitness: i64,
}

/// λ offspring of `x`, each with exactly `ell` distinct uniformly chosen bits
/// flipped; returns the first one of maximal fitness, or `None` if the budget
/// ran out first.
pub fn mutation_phase<R: Rng + ?Sized>(
    x: &BitString,
    lambda: u64,
    ell: usize,
    eval: &mut Evaluator<'_>,
    rng: &mut R,
) -> Option<PhaseWinner> {
    mutation_phase_inspect(x, lambda, ell, eval, rng, |_, _| {})
}

/// [`mutation_phase`] that also reports every offspring with its fitness.
pub fn mutation_phase_inspect<R: Rng + ?Sized>(
    x: &BitString,
    lambda: u64,
    ell: usize,
    eval: &mut Evaluator<'_>,
    rng: &mut R,
    mut inspect: impl FnMut(&BitString, i64),
) -> Option<PhaseWinner> {
    let mut ws = Workspace::new(x.len());
    let fitness = ws.mutate(x, lambda, ell, eval, rng, &mut inspect)?;
    Some(PhaseWinner {
        offspring: ws.mutant,
        fitness,
    })
}

/// λ biased crossovers taking each bit from `x_prime` with probability `c` and
/// from `x` otherwise; returns the first one of maximal fitness, or `None` if
/// the budget ran out first.
pub fn crossover_phase<R: Rng + ?Sized>(
    x: &BitString,
    x_prime: &BitString,
    lambda: u64,
    c: f64,
    eval: &mut Evaluator<'_>,
    rng: &mut R,
) -> Option<PhaseWinner> {
    crossover_phase_inspect(x, x_prime, lambda, c, eval, rng, |_, _| {})
}

/// [`crossover_phase`] that also reports every offspring with its fitness.
pub fn crossover_phase_inspect<R: Rng + ?Sized>(
    x: &BitString,
    x_prime: &BitString,
    lambda: u64,
    c: f64,
    eval: &mut Evaluator<'_>,
    rng: &mut R,
    mut inspect: impl FnMut(&BitString, i64),
) -> Option<PhaseWinner> {
    let mut ws = Workspace::new(x.len());
    ws.mutant.copy_from(x_prime);
    let fitness = ws.cross(x, lambda, c, eval, rng, &mut inspect)?;
    Some(PhaseWinner {
        offspring: ws.child,
        fitness,
    })
}

/// Outcome of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunResult {
    /// Completed iterations; a budget-truncated final iteration is not counted.
    pub iterations: u64,
    /// Fitness evaluations actually performed.
    pub evaluations: u64,
    pub success: bool,
    /// Raw (natural orientation) value of the final parent.
    pub best_fitness: i64,
}

/// Per-iteration snapshot handed to observers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationTrace {
    pub iteration: u64,
    pub params: IterationParams,
    /// Maximized fitness of the parent before and after selection.
    pub parent_before: i64,
    pub parent_after: i64,
    pub evaluations: u64,
}

/// A fully resolved optimizer.
#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    HeavyTailed(ResolvedHyper),
    Static { lambda: u64 },
    OnePlusOneEa { rate: f64 },
}

impl Algorithm {
    pub fn heavy_tailed(hyper: &HyperParams, n: usize) -> Result<Self, EngineError> {
        Ok(Algorithm::HeavyTailed(hyper.resolve(n)?))
    }

    pub fn static_ollga(lambda: u64, n: usize) -> Result<Self, EngineError> {
        if lambda == 0 || 2 * lambda > n as u64 {
            return Err(EngineError::StaticLambda { lambda, n });
        }
        Ok(Algorithm::Static { lambda })
    }

    pub fn ea(rate: f64) -> Result<Self, EngineError> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(EngineError::MutationRate(rate));
        }
        Ok(Algorithm::OnePlusOneEa { rate })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::HeavyTailed(_) => "ht-ollga",
            Algorithm::Static { .. } => "static-ollga",
            Algorithm::OnePlusOneEa { .. } => "ea",
        }
    }

    pub fn run<R: Rng + ?Sized>(
        &self,
        problem: &Problem,
        init: InitMode,
        budget: u64,
        rng: &mut R,
    ) -> Result<RunResult, EngineError> {
        self.run_traced(problem, init, budget, rng, |_| {})
    }

    pub fn run_traced<R: Rng + ?Sized>(
        &self,
        problem: &Problem,
        init: InitMode,
        budget: u64,
        rng: &mut R,
        observer: impl FnMut(&IterationTrace),
    ) -> Result<RunResult, EngineError> {
        let n = problem.dimension();
        match self {
            Algorithm::HeavyTailed(hyper) => {
                assert_eq!(hyper.n(), n, "hyperparameters resolved for another size");
                ollga_loop(problem, init, budget, rng, observer, |rng| {
                    sample_iteration_params(hyper, rng)
                })
            }
            Algorithm::Static { lambda } => {
                let p = *lambda as f64 / n as f64;
                let c = 1.0 / *lambda as f64;
                ollga_loop(problem, init, budget, rng, observer, |rng| IterationParams {
                    lambda: *lambda,
                    p,
                    c,
                    ell: sample_binomial(n, p, rng),
                })
            }
            Algorithm::OnePlusOneEa { rate } => ea_loop(problem, *rate, init, budget, rng, observer),
        }
    }
}

pub fn ht_ollga_run<R: Rng + ?Sized>(
    problem: &Problem,
    hyper: &HyperParams,
    init: InitMode,
    budget: u64,
    rng: &mut R,
) -> Result<RunResult, EngineError> {
    Algorithm::heavy_tailed(hyper, problem.dimension())?.run(problem, init, budget, rng)
}

pub fn one_plus_one_ea_run<R: Rng + ?Sized>(
    problem: &Problem,
    rate: f64,
    init: InitMode,
    budget: u64,
    rng: &mut R,
) -> Result<RunResult, EngineError> {
    Algorithm::ea(rate)?.run(problem, init, budget, rng)
}

/// The (1+(λ,λ)) GA with `p = λ/n` and `c = 1/λ` fixed.
pub fn static_ollga_run<R: Rng + ?Sized>(
    problem: &Problem,
    lambda: u64,
    init: InitMode,
    budget: u64,
    rng: &mut R,
) -> Result<RunResult, EngineError> {
    Algorithm::static_ollga(lambda, problem.dimension())?.run(problem, init, budget, rng)
}

fn ollga_loop<R: Rng + ?Sized>(
    problem: &Problem,
    init: InitMode,
    budget: u64,
    rng: &mut R,
    mut observer: impl FnMut(&IterationTrace),
    mut draw: impl FnMut(&mut R) -> IterationParams,
) -> Result<RunResult, EngineError> {
    let mut x = init_point(init, problem, rng)?;
    let mut fx = problem.fitness(&x);
    let mut eval = Evaluator::new(problem, budget);
    let mut ws = Workspace::new(problem.dimension());
    let mut skip = |_: &BitString, _: i64| {};
    let mut iterations = 0;
    loop {
        if problem.is_optimal_fitness(fx) || eval.exhausted() {
            break;
        }
        let params = draw(rng);
        if ws.mutate(&x, params.lambda, params.ell, &mut eval, rng, &mut skip).is_none() {
            break;
        }
        let Some(fy) = ws.cross(&x, params.lambda, params.c, &mut eval, rng, &mut skip) else {
            break;
        };
        iterations += 1;
        let before = fx;
        if fy >= fx {
            std::mem::swap(&mut x, &mut ws.child);
            fx = fy;
        }
        observer(&IterationTrace {
            iteration: iterations,
            params,
            parent_before: before,
            parent_after: fx,
            evaluations: eval.used(),
        });
    }
    Ok(RunResult {
        iterations,
        evaluations: eval.used(),
        success: problem.is_optimal_fitness(fx),
        best_fitness: problem.orient(fx),
    })
}

fn ea_loop<R: Rng + ?Sized>(
    problem: &Problem,
    rate: f64,
    init: InitMode,
    budget: u64,
    rng: &mut R,
    mut observer: impl FnMut(&IterationTrace),
) -> Result<RunResult, EngineError> {
    let n = problem.dimension();
    let mut x = init_point(init, problem, rng)?;
    let mut fx = problem.fitness(&x);
    let mut eval = Evaluator::new(problem, budget);
    // Gaps between flipped positions are geometric.
    let gap = Geometric::new(rate).map_err(|_| EngineError::MutationRate(rate))?;
    let mut flips = Vec::new();
    let mut iterations = 0;
    loop {
        if problem.is_optimal_fitness(fx) || eval.exhausted() {
            break;
        }
        flips.clear();
        let mut pos = gap.sample(rng);
        while pos < n as u64 {
            flips.push(pos as usize);
            pos = pos.saturating_add(1).saturating_add(gap.sample(rng));
        }
        for &i in &flips {
            x.flip(i);
        }
        let fy = eval.evaluate(&x).expect("budget checked above");
        iterations += 1;
        let before = fx;
        if fy >= fx {
            fx = fy;
        } else {
            for &i in &flips {
                x.flip(i);
            }
        }
        observer(&IterationTrace {
            iteration: iterations,
            params: IterationParams {
                lambda: 1,
                p: rate,
                c: 1.0,
                ell: flips.len(),
            },
            parent_before: before,
            parent_after: fx,
            evaluations: eval.used(),
        });
    }
    Ok(RunResult {
        iterations,
        evaluations: eval.used(),
        success: problem.is_optimal_fitness(fx),
        best_fitness: problem.orient(fx),
    })
}
