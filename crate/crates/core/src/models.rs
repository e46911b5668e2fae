//! Candidate models with closed-form marginals and exact posterior samplers,
//! and the example suites built from them.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::math::{log_add_exp, log_softmax};
use crate::samplers::{self, RandomStream, TruncatedInverseExp};
use crate::specfun::{self, ln_beta_unchecked, ln_binomial, ln_gamma_unchecked};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Interval on which a model's parameter lives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    /// (0, ∞)
    Positive,
    /// (0, 1)
    UnitInterval,
    /// (−∞, ∞)
    Real,
}

impl Support {
    pub fn contains(&self, theta: f64) -> bool {
        match self {
            Support::Positive => theta > 0.0 && theta.is_finite(),
            Support::UnitInterval => theta > 0.0 && theta < 1.0,
            Support::Real => theta.is_finite(),
        }
    }
}

/// One candidate model: likelihood `f_k(y|θ)`, prior `π_k(θ)`, exact
/// marginal `m_k(y)`, and exact samplers for prior and posterior.
///
/// Densities are logs; `-inf` means zero density.
pub trait Component: fmt::Debug + Send + Sync {
    fn name(&self) -> String;
    fn support(&self) -> Support;
    /// Rejects observations outside the model's observation space.
    fn check_observation(&self, y: f64) -> Result<()>;
    fn log_likelihood(&self, y: f64, theta: f64) -> f64;
    fn log_prior(&self, theta: f64) -> f64;
    /// `ln ∫ f(y|θ) π(θ) dθ`.
    fn log_marginal(&self, y: f64) -> f64;
    fn sample_posterior(&self, y: f64, rng: &mut RandomStream) -> Result<f64>;
    fn sample_prior(&self, rng: &mut RandomStream) -> Result<f64>;
    /// Posterior mean of θ given y.
    fn posterior_mean(&self, y: f64) -> f64;
}

fn check_positive_obs(name: &'static str, y: f64) -> Result<()> {
    if y > 0.0 && y.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(
            name,
            format!("observation y = {y} must be > 0"),
        ))
    }
}

fn check_finite_obs(name: &'static str, y: f64) -> Result<()> {
    if y.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(
            name,
            format!("observation y = {y} must be finite"),
        ))
    }
}

/// `y|θ ~ U(0, θ)`, `θ ~ Exp(1)`. Marginal `E1(y)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformScale;

impl Component for UniformScale {
    fn name(&self) -> String {
        "uniform(0,theta), theta~Exp(1)".into()
    }

    fn support(&self) -> Support {
        Support::Positive
    }

    fn check_observation(&self, y: f64) -> Result<()> {
        check_positive_obs("uniform-scale model", y)
    }

    fn log_likelihood(&self, y: f64, theta: f64) -> f64 {
        // open support: zero density at θ = y
        if y > 0.0 && theta > y {
            -theta.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn log_prior(&self, theta: f64) -> f64 {
        if theta > 0.0 {
            -theta
        } else {
            f64::NEG_INFINITY
        }
    }

    fn log_marginal(&self, y: f64) -> f64 {
        specfun::exp_integral_e1(y)
            .map(f64::ln)
            .unwrap_or(f64::NEG_INFINITY)
    }

    fn sample_posterior(&self, y: f64, rng: &mut RandomStream) -> Result<f64> {
        TruncatedInverseExp::new(y)?.sample(rng)
    }

    fn sample_prior(&self, rng: &mut RandomStream) -> Result<f64> {
        samplers::sample_exponential(1.0, rng)
    }

    fn posterior_mean(&self, y: f64) -> f64 {
        (-y - self.log_marginal(y)).exp()
    }
}

/// `y|θ ~ Exp(θ)`, `θ ~ Exp(1)`. Posterior `Ga(2, 1+y)`, marginal `(1+y)^{-2}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExponentialRate;

impl Component for ExponentialRate {
    fn name(&self) -> String {
        "exp(theta), theta~Exp(1)".into()
    }

    fn support(&self) -> Support {
        Support::Positive
    }

    fn check_observation(&self, y: f64) -> Result<()> {
        check_positive_obs("exponential-rate model", y)
    }

    fn log_likelihood(&self, y: f64, theta: f64) -> f64 {
        if theta > 0.0 && y >= 0.0 {
            theta.ln() - theta * y
        } else {
            f64::NEG_INFINITY
        }
    }

    fn log_prior(&self, theta: f64) -> f64 {
        if theta > 0.0 {
            -theta
        } else {
            f64::NEG_INFINITY
        }
    }

    fn log_marginal(&self, y: f64) -> f64 {
        -2.0 * y.ln_1p()
    }

    fn sample_posterior(&self, y: f64, rng: &mut RandomStream) -> Result<f64> {
        samplers::sample_gamma(2.0, 1.0 + y, rng)
    }

    fn sample_prior(&self, rng: &mut RandomStream) -> Result<f64> {
        samplers::sample_exponential(1.0, rng)
    }

    fn posterior_mean(&self, y: f64) -> f64 {
        2.0 / (1.0 + y)
    }
}

/// `y|θ ~ N(θ, 1)`, `θ ~ N(prior_mean, 1)`.
#[derive(Debug, Clone, Copy)]
pub struct NormalMean {
    pub prior_mean: f64,
}

impl Component for NormalMean {
    fn name(&self) -> String {
        format!("N(theta,1), theta~N({},1)", self.prior_mean)
    }

    fn support(&self) -> Support {
        Support::Real
    }

    fn check_observation(&self, y: f64) -> Result<()> {
        check_finite_obs("normal-mean model", y)
    }

    fn log_likelihood(&self, y: f64, theta: f64) -> f64 {
        let r = y - theta;
        -0.5 * (LN_2PI + r * r)
    }

    fn log_prior(&self, theta: f64) -> f64 {
        let r = theta - self.prior_mean;
        -0.5 * (LN_2PI + r * r)
    }

    fn log_marginal(&self, y: f64) -> f64 {
        // N(y; prior_mean, 2)
        let r = y - self.prior_mean;
        -0.5 * (LN_2PI + 2f64.ln()) - r * r / 4.0
    }

    fn sample_posterior(&self, y: f64, rng: &mut RandomStream) -> Result<f64> {
        samplers::sample_normal(self.posterior_mean(y), 0.5, rng)
    }

    fn sample_prior(&self, rng: &mut RandomStream) -> Result<f64> {
        samplers::sample_normal(self.prior_mean, 1.0, rng)
    }

    fn posterior_mean(&self, y: f64) -> f64 {
        (y + self.prior_mean) / 2.0
    }
}

/// `y|p ~ Binomial(n, p)`, `p ~ Be(a, b)`.
#[derive(Debug, Clone, Copy)]
pub struct BinomialBeta {
    n: u64,
    a: f64,
    b: f64,
    ln_beta_prior: f64,
}

impl BinomialBeta {
    pub fn new(n: u64, a: f64, b: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config(
                "binomial size n must be a positive integer".into(),
            ));
        }
        if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Config(format!(
                "beta prior parameters ({a}, {b}) must be finite and > 0"
            )));
        }
        Ok(BinomialBeta {
            n,
            a,
            b,
            ln_beta_prior: ln_beta_unchecked(a, b),
        })
    }

    pub fn prior(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn posterior(&self, y: f64) -> (f64, f64) {
        (self.a + y, self.b + self.n as f64 - y)
    }
}

impl Component for BinomialBeta {
    fn name(&self) -> String {
        format!("Bin({},p), p~Be({},{})", self.n, self.a, self.b)
    }

    fn support(&self) -> Support {
        Support::UnitInterval
    }

    fn check_observation(&self, y: f64) -> Result<()> {
        if y >= 0.0 && y <= self.n as f64 && y.fract() == 0.0 {
            Ok(())
        } else {
            Err(Error::domain(
                "binomial model",
                format!("observation y = {y} must be an integer in 0..={}", self.n),
            ))
        }
    }

    fn log_likelihood(&self, y: f64, p: f64) -> f64 {
        if !(p > 0.0 && p < 1.0) {
            return f64::NEG_INFINITY;
        }
        let n = self.n as f64;
        ln_binomial(self.n, y as u64) + y * p.ln() + (n - y) * (-p).ln_1p()
    }

    fn log_prior(&self, p: f64) -> f64 {
        if !(p > 0.0 && p < 1.0) {
            return f64::NEG_INFINITY;
        }
        (self.a - 1.0) * p.ln() + (self.b - 1.0) * (-p).ln_1p() - self.ln_beta_prior
    }

    fn log_marginal(&self, y: f64) -> f64 {
        let (a, b) = self.posterior(y);
        ln_binomial(self.n, y as u64) + ln_beta_unchecked(a, b) - self.ln_beta_prior
    }

    fn sample_posterior(&self, y: f64, rng: &mut RandomStream) -> Result<f64> {
        let (a, b) = self.posterior(y);
        samplers::sample_beta(a, b, rng)
    }

    fn sample_prior(&self, rng: &mut RandomStream) -> Result<f64> {
        samplers::sample_beta(self.a, self.b, rng)
    }

    fn posterior_mean(&self, y: f64) -> f64 {
        let (a, b) = self.posterior(y);
        a / (a + b)
    }
}

/// `y|ω ~ N(0, 1/ω)`, `ω ~ Exp(rate)`. Posterior `Ga(3/2, rate + y²/2)`.
#[derive(Debug, Clone, Copy)]
pub struct NormalPrecision {
    rate: f64,
}

impl NormalPrecision {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::Config(format!("prior rate a = {rate} must be > 0")));
        }
        Ok(NormalPrecision { rate })
    }

    fn posterior_rate(&self, y: f64) -> f64 {
        self.rate + 0.5 * y * y
    }
}

impl Component for NormalPrecision {
    fn name(&self) -> String {
        format!("N(0,1/omega), omega~Exp({})", self.rate)
    }

    fn support(&self) -> Support {
        Support::Positive
    }

    fn check_observation(&self, y: f64) -> Result<()> {
        check_finite_obs("normal-precision model", y)
    }

    fn log_likelihood(&self, y: f64, omega: f64) -> f64 {
        if omega > 0.0 {
            0.5 * (omega.ln() - LN_2PI) - 0.5 * y * y * omega
        } else {
            f64::NEG_INFINITY
        }
    }

    fn log_prior(&self, omega: f64) -> f64 {
        if omega > 0.0 {
            self.rate.ln() - self.rate * omega
        } else {
            f64::NEG_INFINITY
        }
    }

    fn log_marginal(&self, y: f64) -> f64 {
        self.rate.ln() - 0.5 * LN_2PI + ln_gamma_unchecked(1.5) - 1.5 * self.posterior_rate(y).ln()
    }

    fn sample_posterior(&self, y: f64, rng: &mut RandomStream) -> Result<f64> {
        samplers::sample_gamma(1.5, self.posterior_rate(y), rng)
    }

    fn sample_prior(&self, rng: &mut RandomStream) -> Result<f64> {
        samplers::sample_exponential(self.rate, rng)
    }

    fn posterior_mean(&self, y: f64) -> f64 {
        1.5 / self.posterior_rate(y)
    }
}

/// `exp(y)|λ ~ Exp(λ)`, `λ ~ Exp(rate)`. Posterior `Ga(2, rate + e^y)`.
#[derive(Debug, Clone, Copy)]
pub struct LogExponential {
    rate: f64,
}

impl LogExponential {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::Config(format!("prior rate b = {rate} must be > 0")));
        }
        Ok(LogExponential { rate })
    }

    /// `ln(rate + e^y)`, stable for large `y`.
    fn ln_posterior_rate(&self, y: f64) -> f64 {
        log_add_exp(self.rate.ln(), y)
    }
}

impl Component for LogExponential {
    fn name(&self) -> String {
        format!("exp(y)~Exp(lambda), lambda~Exp({})", self.rate)
    }

    fn support(&self) -> Support {
        Support::Positive
    }

    fn check_observation(&self, y: f64) -> Result<()> {
        check_finite_obs("log-exponential model", y)
    }

    fn log_likelihood(&self, y: f64, lambda: f64) -> f64 {
        if lambda > 0.0 {
            let ln_lambda = lambda.ln();
            ln_lambda + y - (ln_lambda + y).exp()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn log_prior(&self, lambda: f64) -> f64 {
        if lambda > 0.0 {
            self.rate.ln() - self.rate * lambda
        } else {
            f64::NEG_INFINITY
        }
    }

    fn log_marginal(&self, y: f64) -> f64 {
        self.rate.ln() + y - 2.0 * self.ln_posterior_rate(y)
    }

    fn sample_posterior(&self, y: f64, rng: &mut RandomStream) -> Result<f64> {
        let g = samplers::sample_gamma(2.0, 1.0, rng)?;
        Ok(g * (-self.ln_posterior_rate(y)).exp())
    }

    fn sample_prior(&self, rng: &mut RandomStream) -> Result<f64> {
        samplers::sample_exponential(self.rate, rng)
    }

    fn posterior_mean(&self, y: f64) -> f64 {
        2.0 * (-self.ln_posterior_rate(y)).exp()
    }
}

/// Candidate models with prior model probabilities.
#[derive(Debug, Clone)]
pub struct ModelSet {
    components: Vec<Arc<dyn Component>>,
    weights: Vec<f64>,
}

impl ModelSet {
    /// Weights must be positive and sum to 1 within 1e-12.
    pub fn new(components: Vec<Arc<dyn Component>>, weights: Vec<f64>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::Config(
                "a model set needs at least two components".into(),
            ));
        }
        if components.len() != weights.len() {
            return Err(Error::Config(format!(
                "{} components but {} weights",
                components.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Config("prior model weights must be > 0".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "prior model weights sum to {total}, not 1"
            )));
        }
        Ok(ModelSet {
            components,
            weights,
        })
    }

    /// Normalizes positive raw weights before building the set.
    pub fn with_relative_weights(components: Vec<Arc<dyn Component>>, raw: &[f64]) -> Result<Self> {
        if raw.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Config("prior model weights must be > 0".into()));
        }
        let total: f64 = raw.iter().sum();
        Self::new(components, raw.iter().map(|w| w / total).collect())
    }

    pub fn equal_weights(components: Vec<Arc<dyn Component>>) -> Result<Self> {
        let d = components.len();
        Self::new(components, vec![1.0 / d as f64; d])
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[Arc<dyn Component>] {
        &self.components
    }

    pub fn component(&self, k: usize) -> &dyn Component {
        self.components[k].as_ref()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Component and weight `perm[i]` move to position `i`.
    pub fn permuted(&self, perm: &[usize]) -> Result<ModelSet> {
        let mut seen = vec![false; self.len()];
        if perm.len() != self.len()
            || perm
                .iter()
                .any(|&p| p >= self.len() || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::Config(
                "not a permutation of the component indices".into(),
            ));
        }
        Ok(ModelSet {
            components: perm.iter().map(|&p| self.components[p].clone()).collect(),
            weights: perm.iter().map(|&p| self.weights[p]).collect(),
        })
    }

    /// Validates `y` against every component's observation space.
    pub fn check_observation(&self, y: f64) -> Result<()> {
        self.components
            .iter()
            .try_for_each(|c| c.check_observation(y))
    }
}

/// One of the example model-comparison problems.
#[derive(Debug, Clone, PartialEq)]
pub enum ExampleConfig {
    /// `U(0,θ)` vs `Exp(θ)`, both with `Exp(1)` priors.
    Ex1,
    /// `N(θ,1)` with priors `N(0,1)` vs `N(5,1)`.
    Ex2,
    /// Binomial with `Be(1,1)` vs `Be(m,m)`.
    Ex3TwoModel { n: u64, m: f64 },
    /// Binomial with `Be(1,1)`, `Be(a,b)`, `Be(c,d)`.
    Ex3ThreeModel {
        n: u64,
        a: f64,
        b: f64,
        c: f64,
        d: f64,
    },
    /// `N(0,1/ω)`, `ω ~ Exp(a)` vs `exp(y) ~ Exp(λ)`, `λ ~ Exp(b)`.
    Ex4 { a: f64, b: f64 },
}

impl ExampleConfig {
    pub fn id(&self) -> &'static str {
        match self {
            ExampleConfig::Ex1 => "ex1",
            ExampleConfig::Ex2 => "ex2",
            ExampleConfig::Ex3TwoModel { .. } => "ex3",
            ExampleConfig::Ex3ThreeModel { .. } => "ex3-3",
            ExampleConfig::Ex4 { .. } => "ex4",
        }
    }

    /// `name=value` pairs joined with `;`, empty for parameter-free examples.
    pub fn parameters(&self) -> String {
        match self {
            ExampleConfig::Ex1 | ExampleConfig::Ex2 => String::new(),
            ExampleConfig::Ex3TwoModel { n, m } => format!("n={n};m={m}"),
            ExampleConfig::Ex3ThreeModel { n, a, b, c, d } => {
                format!("n={n};a={a};b={b};c={c};d={d}")
            }
            ExampleConfig::Ex4 { a, b } => format!("a={a};b={b}"),
        }
    }

    /// Default observation grid: [0.05, 3] for Ex1, [−3, 8] for Ex2,
    /// `0..=n` for Ex3, [−3, 12] for Ex4.
    pub fn default_grid(&self) -> Vec<f64> {
        match self {
            ExampleConfig::Ex1 => linspace(0.05, 3.0, 60),
            ExampleConfig::Ex2 => linspace(-3.0, 8.0, 50),
            ExampleConfig::Ex3TwoModel { n, .. } | ExampleConfig::Ex3ThreeModel { n, .. } => {
                (0..=*n).map(|y| y as f64).collect()
            }
            ExampleConfig::Ex4 { .. } => linspace(-3.0, 12.0, 61),
        }
    }

    pub fn build(&self) -> Result<ModelSet> {
        build_example(self)
    }
}

/// `count` evenly spaced points from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let step = (max - min) / (count - 1) as f64;
            (0..count)
                .map(|i| {
                    if i + 1 == count {
                        max
                    } else {
                        min + step * i as f64
                    }
                })
                .collect()
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("parameter {name} = {v} must be > 0")))
    }
}

/// Builds the model set for an example, with equal prior model weights.
pub fn build_example(config: &ExampleConfig) -> Result<ModelSet> {
    let components: Vec<Arc<dyn Component>> = match *config {
        ExampleConfig::Ex1 => vec![Arc::new(UniformScale), Arc::new(ExponentialRate)],
        ExampleConfig::Ex2 => vec![
            Arc::new(NormalMean { prior_mean: 0.0 }),
            Arc::new(NormalMean { prior_mean: 5.0 }),
        ],
        ExampleConfig::Ex3TwoModel { n, m } => {
            let m = positive("m", m)?;
            vec![
                Arc::new(BinomialBeta::new(n, 1.0, 1.0)?),
                Arc::new(BinomialBeta::new(n, m, m)?),
            ]
        }
        ExampleConfig::Ex3ThreeModel { n, a, b, c, d } => vec![
            Arc::new(BinomialBeta::new(n, 1.0, 1.0)?),
            Arc::new(BinomialBeta::new(n, positive("a", a)?, positive("b", b)?)?),
            Arc::new(BinomialBeta::new(n, positive("c", c)?, positive("d", d)?)?),
        ],
        ExampleConfig::Ex4 { a, b } => vec![
            Arc::new(NormalPrecision::new(a)?),
            Arc::new(LogExponential::new(b)?),
        ],
    };
    ModelSet::equal_weights(components)
}

/// `P(M=k|y) ∝ ϱ_k m_k(y)`, normalized in log space.
pub fn exact_posterior_probs(set: &ModelSet, y: f64) -> Result<Vec<f64>> {
    set.check_observation(y)?;
    let log_weights: Vec<f64> = set
        .components()
        .iter()
        .zip(set.weights())
        .map(|(c, w)| w.ln() + c.log_marginal(y))
        .collect();
    let mut probs = vec![0.0; set.len()];
    if !log_softmax(&log_weights, &mut probs) {
        return Err(Error::Undefined(format!(
            "every marginal likelihood vanishes at y = {y}"
        )));
    }
    Ok(probs)
}

/// `B_kj = m_k(y) / m_j(y)` (zero-based indices).
pub fn exact_bayes_factor(set: &ModelSet, y: f64, k: usize, j: usize) -> Result<f64> {
    if k >= set.len() || j >= set.len() || k == j {
        return Err(Error::Config(format!(
            "Bayes factor needs two distinct indices below {}, got ({k}, {j})",
            set.len()
        )));
    }
    set.check_observation(y)?;
    Ok((set.component(k).log_marginal(y) - set.component(j).log_marginal(y)).exp())
}

/// Closed-form Bayes factor of `Be(1,1)` against `Be(m,m)` for `y` successes
/// in `n` binomial trials:
///
/// `B12 = (2m+n−1)! y! (n−y)! (m−1)!² / ((n+1)! (m+y−1)! (m+n−y−1)! (2m−1)!)`
///
/// with factorials generalized through `Γ(z+1)`.
pub fn ex3_bayes_factor_closed_form(n: u64, m: f64, y: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain(
            "ex3_bayes_factor_closed_form",
            "n must be >= 1",
        ));
    }
    if y > n {
        return Err(Error::domain(
            "ex3_bayes_factor_closed_form",
            format!("y = {y} exceeds n = {n}"),
        ));
    }
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::domain(
            "ex3_bayes_factor_closed_form",
            format!("m = {m} must be > 0"),
        ));
    }
    let lf = |z: f64| ln_gamma_unchecked(z + 1.0);
    let (n, y) = (n as f64, y as f64);
    let numerator = lf(2.0 * m + n - 1.0) + lf(y) + lf(n - y) + 2.0 * lf(m - 1.0);
    let denominator = lf(n + 1.0) + lf(m + y - 1.0) + lf(m + n - y - 1.0) + lf(2.0 * m - 1.0);
    Ok((numerator - denominator).exp())
}
