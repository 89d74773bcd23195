//! Discrete power-law distribution `Pr[X = i] = C · i^(-β)` on `[1..u]`.
//!
//! `u` may be finite or infinite (the latter needs `β > 1`). Small supports are
//! sampled by inverting a precomputed CDF table. Large and infinite supports
//! use rejection from the floor of a continuous Pareto variate, which is exact
//! and takes O(1) expected work regardless of `u`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

/// Largest finite bounding sampled through a CDF table.
pub const TABLE_LIMIT: u64 = 1 << 20;
/// Largest finite bounding accepted when `β ≤ 1`.
pub const HEAVY_LIMIT: u64 = 1 << 24;

/// Upper end of the support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bound {
    Finite(u64),
    Infinite,
}

impl Bound {
    pub fn finite(self) -> Option<u64> {
        match self {
            Bound::Finite(u) => Some(u),
            Bound::Infinite => None,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Finite(u) => write!(f, "{u}"),
            Bound::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PowerLawError {
    #[error("power-law exponent must be a finite non-negative number, got {0}")]
    InvalidExponent(f64),
    #[error("power-law bounding must be at least 1")]
    ZeroBound,
    #[error("unbounded power law needs exponent > 1 to be normalizable, got {0}")]
    Divergent(f64),
    #[error("exponent {beta} ≤ 1 with bounding {upper} above {HEAVY_LIMIT} is not supported")]
    Pathological { beta: f64, upper: u64 },
}

#[derive(Debug, Clone)]
enum Sampler {
    /// Unnormalized running sums `Σ_{j≤i} j^-β`, one per support point.
    Table(Arc<[f64]>),
    /// Envelope on `[1, u+1)` with `t = (u+1)^(1-β) - 1` (`-1` when unbounded)
    /// and `log_span = ln(u+1)`.
    Rejection {
        t: f64,
        log_span: f64,
        accept_scale: f64,
    },
}

/// An immutable, thread-shareable `pow(β, u)` distribution.
#[derive(Debug, Clone)]
pub struct PowerLaw {
    beta: f64,
    upper: Bound,
    /// `Σ_{j=1}^{u} j^-β`.
    total: f64,
    sampler: Sampler,
}

impl PartialEq for PowerLaw {
    fn eq(&self, other: &Self) -> bool {
        self.beta == other.beta && self.upper == other.upper
    }
}

impl PowerLaw {
    pub fn new(beta: f64, upper: Bound) -> Result<Self, PowerLawError> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(PowerLawError::InvalidExponent(beta));
        }
        match upper {
            Bound::Finite(0) => return Err(PowerLawError::ZeroBound),
            Bound::Infinite if beta <= 1.0 => return Err(PowerLawError::Divergent(beta)),
            Bound::Finite(u) if beta <= 1.0 && u > HEAVY_LIMIT => {
                return Err(PowerLawError::Pathological { beta, upper: u })
            }
            _ => {}
        }

        let (total, sampler) = match upper {
            Bound::Finite(u) if u <= TABLE_LIMIT => {
                let cumulative = running_sums(beta, u);
                let total = *cumulative.last().expect("u >= 1");
                (total, Sampler::Table(cumulative.into()))
            }
            _ => {
                let a = 1.0 - beta;
                let log_span = match upper {
                    Bound::Finite(u) => ((u as f64) + 1.0).ln(),
                    Bound::Infinite => f64::INFINITY,
                };
                let t = match upper {
                    Bound::Finite(_) => (a * log_span).exp_m1(),
                    Bound::Infinite => -1.0,
                };
                let sampler = Sampler::Rejection {
                    t,
                    log_span,
                    accept_scale: envelope_ratio(beta, 1.0),
                };
                (partial_zeta(beta, upper), sampler)
            }
        };
        Ok(Self {
            beta,
            upper,
            total,
            sampler,
        })
    }

    /// Shorthand for a finite bounding.
    pub fn bounded(beta: f64, upper: u64) -> Result<Self, PowerLawError> {
        Self::new(beta, Bound::Finite(upper))
    }

    pub fn unbounded(beta: f64) -> Result<Self, PowerLawError> {
        Self::new(beta, Bound::Infinite)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn upper(&self) -> Bound {
        self.upper
    }

    /// The normalization coefficient `C_{β,u} = 1 / Σ_{j=1}^{u} j^-β`.
    pub fn normalization(&self) -> f64 {
        1.0 / self.total
    }

    pub fn pmf(&self, i: u64) -> f64 {
        if i == 0 || !self.in_support(i) {
            return 0.0;
        }
        (i as f64).powf(-self.beta) / self.total
    }

    pub fn cdf(&self, i: u64) -> f64 {
        if i == 0 {
            return 0.0;
        }
        let i = match self.upper {
            Bound::Finite(u) => i.min(u),
            Bound::Infinite => i,
        };
        if self.upper == Bound::Finite(i) {
            return 1.0;
        }
        let partial = match &self.sampler {
            Sampler::Table(cum) => cum[(i - 1) as usize],
            Sampler::Rejection { .. } => partial_zeta(self.beta, Bound::Finite(i)),
        };
        (partial / self.total).min(1.0)
    }

    /// `E[X]`; `f64::INFINITY` when the series diverges.
    pub fn expectation(&self) -> f64 {
        self.raw_moment(1)
    }

    /// `E[X²]`; `f64::INFINITY` when the series diverges.
    pub fn second_moment(&self) -> f64 {
        self.raw_moment(2)
    }

    fn raw_moment(&self, order: u32) -> f64 {
        let shifted = self.beta - order as f64;
        if self.upper == Bound::Infinite && shifted <= 1.0 {
            return f64::INFINITY;
        }
        partial_zeta(shifted, self.upper) / self.total
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match &self.sampler {
            Sampler::Table(cum) => {
                if cum.len() == 1 {
                    return 1;
                }
                let target = rng.random::<f64>() * self.total;
                let idx = cum.partition_point(|&c| c <= target);
                (idx.min(cum.len() - 1) + 1) as u64
            }
            Sampler::Rejection {
                t,
                log_span,
                accept_scale,
            } => {
                let a = 1.0 - self.beta;
                loop {
                    let v: f64 = rng.random();
                    let y = if a == 0.0 {
                        (v * log_span).exp()
                    } else {
                        ((v * t).ln_1p() / a).exp()
                    };
                    // 2^64: values beyond u64 cannot be represented.
                    if !(y < 18_446_744_073_709_551_616.0) {
                        continue;
                    }
                    let k = (y.floor() as u64).max(1);
                    if !self.in_support(k) {
                        continue;
                    }
                    let accept = accept_scale / envelope_ratio(self.beta, k as f64);
                    if rng.random::<f64>() < accept {
                        return k;
                    }
                }
            }
        }
    }

    fn in_support(&self, i: u64) -> bool {
        match self.upper {
            Bound::Finite(u) => i <= u,
            Bound::Infinite => true,
        }
    }
}

impl rand::distr::Distribution<u64> for PowerLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        PowerLaw::sample(self, rng)
    }
}

/// `k^β · ∫_k^{k+1} y^-β dy`: the continuous envelope mass of cell `k` relative to
/// the target weight. Increasing in `k`, so the rejection bound sits at `k = 1`.
fn envelope_ratio(beta: f64, k: f64) -> f64 {
    let a = 1.0 - beta;
    let l = (1.0 / k).ln_1p();
    if a == 0.0 {
        k * l
    } else {
        k * (a * l).exp_m1() / a
    }
}

/// Compensated running sums of `j^-β` for `j = 1..=u`.
fn running_sums(beta: f64, u: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(u as usize);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for j in 1..=u {
        let term = (j as f64).powf(-beta);
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        out.push(sum + comp);
    }
    out
}

const EULER_MACLAURIN_START: u64 = 1 << 12;

/// Bernoulli numbers `B_2, B_4, …, B_14` divided by `(2k)!`.
const BERNOULLI_OVER_FACTORIAL: [f64; 7] = [
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40_320.0,
    5.0 / 66.0 / 3_628_800.0,
    -691.0 / 2730.0 / 479_001_600.0,
    7.0 / 6.0 / 87_178_291_200.0,
];

/// `Σ_{j=1}^{u} j^-s` for any real `s` with finite `u`, or `ζ(s)` for `s > 1` and
/// infinite `u`. Supports up to [`TABLE_LIMIT`] are summed directly; longer
/// ones sum the head directly and close with an Euler–Maclaurin tail whose
/// remainder is far below `1e-12` relative.
pub fn partial_zeta(s: f64, upper: Bound) -> f64 {
    if let Bound::Finite(u) = upper {
        if u <= TABLE_LIMIT {
            return *running_sums(s, u).last().unwrap_or(&0.0);
        }
    }
    assert!(upper != Bound::Infinite || s > 1.0, "ζ({s}) diverges");
    let n = EULER_MACLAURIN_START;
    let head = *running_sums(s, n - 1).last().expect("n > 1");
    head + euler_maclaurin_tail(s, n as f64, upper.finite().map(|u| u as f64))
}

/// `Σ_{j=n}^{m} j^-s` (`m = ∞` when `None`).
fn euler_maclaurin_tail(s: f64, n: f64, m: Option<f64>) -> f64 {
    let f = |x: f64| x.powf(-s);
    // Odd derivative f^(2k-1)(x) = -(s)_(2k-1) x^(-s-2k+1).
    let odd_derivative = |x: f64, order: u32| {
        let rising: f64 = (0..order).map(|r| s + r as f64).product();
        -rising * x.powf(-s - order as f64)
    };
    let a = 1.0 - s;
    let integral = match m {
        None => n.powf(a) / (s - 1.0),
        Some(m) => {
            let l = (m / n).ln();
            let x = a * l;
            if x == 0.0 {
                n.powf(a) * l
            } else {
                n.powf(a) * l * (x.exp_m1() / x)
            }
        }
    };
    let mut total = integral + 0.5 * f(n) + m.map_or(0.0, |m| 0.5 * f(m));
    for (k, coeff) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        let order = 2 * k as u32 + 1;
        let at_m = m.map_or(0.0, |m| odd_derivative(m, order));
        total += coeff * (at_m - odd_derivative(n, order));
    }
    total
}
