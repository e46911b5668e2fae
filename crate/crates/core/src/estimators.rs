//! Posterior model probability estimators.
//!
//! Scott's and Congdon's estimators average per-draw conditional model
//! probabilities over independent within-model posterior draws. Those draws
//! follow the product of the within-model posteriors, not the marginal of
//! the joint `(θ, M)` posterior, so both estimators are biased. The
//! corrected scheme runs a Gibbs sampler on the joint target
//! `P(θ, M=k | y) ∝ ϱ_k f_k(y|θ_k) Π_j π_j(θ_j)` using the true priors as
//! pseudo-priors, and averages `P(M=k | θ, y)` along the chain.

use std::fmt;

use crate::error::{Error, Result};
use crate::math::{log_softmax, normalize, Moments};
use crate::models::{self, ModelSet};
use crate::samplers::{self, RandomStream, SampleMatrix};

/// Rows with no defined conditional vector may make up at most this fraction
/// of a run before the estimate is rejected.
pub const MAX_DROPPED_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Exact,
    Scott,
    Congdon,
    GibbsCorrected,
    /// Gibbs chain summarized by visit frequencies of the model indicator.
    GibbsIndicator,
    DiracPlugin,
    CongdonCoupled,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Scott => "scott",
            Method::Congdon => "congdon",
            Method::GibbsCorrected => "gibbs",
            Method::GibbsIndicator => "gibbs-indicator",
            Method::DiracPlugin => "dirac",
            Method::CongdonCoupled => "coupled",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A probability vector over the models with Monte Carlo standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub method: Method,
    pub probs: Vec<f64>,
    /// Zero for deterministic methods, NaN when fewer than two draws were used.
    pub stderrs: Vec<f64>,
    pub draws: usize,
    pub seed: u64,
    /// Rows skipped because every density in them vanished.
    pub dropped_rows: usize,
}

impl EstimateResult {
    fn deterministic(method: Method, probs: Vec<f64>) -> Self {
        let d = probs.len();
        EstimateResult {
            method,
            probs,
            stderrs: vec![0.0; d],
            draws: 0,
            seed: 0,
            dropped_rows: 0,
        }
    }

    /// `p_k / p_j` implied by the estimate, i.e. the Bayes factor under equal
    /// prior model weights.
    pub fn odds(&self, k: usize, j: usize) -> f64 {
        self.probs[k] / self.probs[j]
    }
}

/// How to turn per-draw values into standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StderrMethod {
    /// Sample standard deviation over √T, for independent rows.
    Iid,
    /// Batch means with ⌈√T⌉ batches, for autocorrelated chains.
    BatchMeans,
}

/// Per-column Monte Carlo standard errors of the mean of a row-major
/// `T × d` matrix.
pub fn mc_stderr(per_draw: &[f64], d: usize, method: StderrMethod) -> Result<Vec<f64>> {
    if d == 0 || !per_draw.len().is_multiple_of(d) {
        return Err(Error::Config("per-draw matrix is not rectangular".into()));
    }
    let t = per_draw.len() / d;
    if t < 2 {
        return Err(Error::Undefined(format!(
            "standard error needs at least two draws, got {t}"
        )));
    }
    let stderrs = match method {
        StderrMethod::Iid => (0..d)
            .map(|k| {
                let m: Moments = per_draw.iter().skip(k).step_by(d).copied().collect();
                (m.sample_variance() / t as f64).sqrt()
            })
            .collect(),
        StderrMethod::BatchMeans => {
            let batches = (t as f64).sqrt().ceil() as usize;
            let size = t / batches;
            (0..d)
                .map(|k| {
                    let means: Moments = (0..batches)
                        .map(|b| {
                            let batch: Moments = (b * size..(b + 1) * size)
                                .map(|row| per_draw[row * d + k])
                                .collect();
                            batch.mean()
                        })
                        .collect();
                    (means.sample_variance() / batches as f64).sqrt()
                })
                .collect()
        }
    };
    Ok(stderrs)
}

fn summarize(
    method: Method,
    per_draw: &[f64],
    d: usize,
    stderr: StderrMethod,
    seed: u64,
    dropped_rows: usize,
) -> Result<EstimateResult> {
    let rows = per_draw.len() / d;
    let mut probs: Vec<f64> = (0..d)
        .map(|k| {
            per_draw
                .iter()
                .skip(k)
                .step_by(d)
                .copied()
                .collect::<Moments>()
                .mean()
        })
        .collect();
    normalize(&mut probs);
    let stderrs = if rows >= 2 {
        mc_stderr(per_draw, d, stderr)?
    } else {
        vec![f64::NAN; d]
    };
    Ok(EstimateResult {
        method,
        probs,
        stderrs,
        draws: rows,
        seed,
        dropped_rows,
    })
}

/// Averages the per-row conditional vectors `ϱ_k g_k(θ_k) / Σ_j ϱ_j g_j(θ_j)`
/// where `g` is the likelihood, optionally times the prior.
fn average_conditionals(
    set: &ModelSet,
    samples: &SampleMatrix,
    with_prior: bool,
    method: Method,
) -> Result<EstimateResult> {
    let d = set.len();
    if samples.columns() != d {
        return Err(Error::Config(format!(
            "sample matrix has {} columns for {d} models",
            samples.columns()
        )));
    }
    let y = samples.y();
    set.check_observation(y)?;
    let log_weights: Vec<f64> = set.weights().iter().map(|w| w.ln()).collect();
    let mut logits = vec![0.0; d];
    let mut cond = vec![0.0; d];
    let mut per_draw = Vec::with_capacity(samples.rows() * d);
    let mut dropped = 0usize;
    for row in samples.iter_rows() {
        for (k, (logit, &theta)) in logits.iter_mut().zip(row).enumerate() {
            let c = set.component(k);
            *logit = log_weights[k] + c.log_likelihood(y, theta);
            if with_prior {
                *logit += c.log_prior(theta);
            }
        }
        if log_softmax(&logits, &mut cond) {
            per_draw.extend_from_slice(&cond);
        } else {
            dropped += 1;
        }
    }
    let rows = samples.rows();
    if dropped as f64 > MAX_DROPPED_FRACTION * rows as f64 || dropped == rows {
        return Err(Error::Undefined(format!(
            "{dropped} of {rows} rows have zero density under every model"
        )));
    }
    let seed = samples.streams().first().map_or(0, |s| s.0);
    summarize(method, &per_draw, d, StderrMethod::Iid, seed, dropped)
}

/// Scott's estimator: averages `ϱ_k f_k(y|θ_k) / Σ_j ϱ_j f_j(y|θ_j)` over rows.
pub fn scott_estimate(set: &ModelSet, samples: &SampleMatrix) -> Result<EstimateResult> {
    average_conditionals(set, samples, false, Method::Scott)
}

/// Congdon's estimator: as Scott's with each likelihood multiplied by its prior
/// density at the draw.
pub fn congdon_estimate(set: &ModelSet, samples: &SampleMatrix) -> Result<EstimateResult> {
    average_conditionals(set, samples, true, Method::Congdon)
}

/// Congdon's estimator for the two normal-mean models, fed common-random-number
/// draws. The per-row ratio `f1 π1 / f2 π2` is `exp(−5(2y−5)/4)` for every
/// shared noise value, so the result is the exact posterior probability.
pub fn congdon_coupled_ex2(y: f64, draws: usize, rng: &mut RandomStream) -> Result<EstimateResult> {
    let set = models::build_example(&models::ExampleConfig::Ex2)?;
    let samples = samplers::coupled_posterior_pair_ex2(y, draws, rng)?;
    let mut result = congdon_estimate(&set, &samples)?;
    result.method = Method::CongdonCoupled;
    Ok(result)
}

/// The exact answer wrapped as an estimate.
pub fn exact_estimate(set: &ModelSet, y: f64) -> Result<EstimateResult> {
    Ok(EstimateResult::deterministic(
        Method::Exact,
        models::exact_posterior_probs(set, y)?,
    ))
}

/// Congdon's estimator in the limit where every within-model posterior is a
/// point mass at `theta_hat[k]`.
pub fn dirac_plugin(set: &ModelSet, theta_hat: &[f64], y: f64) -> Result<EstimateResult> {
    if theta_hat.len() != set.len() {
        return Err(Error::Config(format!(
            "{} plug-in values for {} models",
            theta_hat.len(),
            set.len()
        )));
    }
    set.check_observation(y)?;
    let logits: Vec<f64> = set
        .components()
        .iter()
        .zip(set.weights())
        .zip(theta_hat)
        .map(|((c, w), &theta)| {
            if c.support().contains(theta) {
                Ok(w.ln() + c.log_likelihood(y, theta) + c.log_prior(theta))
            } else {
                Err(Error::domain(
                    "dirac_plugin",
                    format!("plug-in value {theta} outside the support of {}", c.name()),
                ))
            }
        })
        .collect::<Result<_>>()?;
    let mut probs = vec![0.0; set.len()];
    if !log_softmax(&logits, &mut probs) {
        return Err(Error::Undefined("every plug-in density is zero".into()));
    }
    normalize(&mut probs);
    Ok(EstimateResult::deterministic(Method::DiracPlugin, probs))
}

/// What the Gibbs chain averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GibbsAverage {
    /// `P(M=k | θ^(t), y)` at each sweep.
    #[default]
    RaoBlackwell,
    /// The indicator `1{M^(t) = k}`.
    Indicator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GibbsOptions {
    pub burn_in: usize,
    pub average: GibbsAverage,
}

/// State of the joint chain over `(M, θ_1, ..., θ_D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    pub model_index: usize,
    pub theta: Vec<f64>,
}

/// Joint Gibbs sampler on `(θ, M)` with the true priors as pseudo-priors.
///
/// Each sweep draws `θ_M` from its within-model posterior and every other
/// `θ_j` from its prior, then `M` from `P(M=k | θ, y) ∝ ϱ_k f_k(y|θ_k)`.
/// Model `k` owns `rng.child(k)` for both its parameter draws and its share of
/// the Gumbel noise used to draw `M`, so relabelling the models together with
/// their streams relabels the output.
pub fn gibbs_corrected(
    set: &ModelSet,
    y: f64,
    draws: usize,
    options: GibbsOptions,
    rng: &RandomStream,
) -> Result<EstimateResult> {
    let streams = (0..set.len() as u64).map(|k| rng.child(k)).collect();
    let mut result = gibbs_corrected_with(set, y, draws, options, streams)?;
    result.seed = rng.seed();
    Ok(result)
}

/// As [`gibbs_corrected`] with an explicit stream per model.
pub fn gibbs_corrected_with(
    set: &ModelSet,
    y: f64,
    draws: usize,
    options: GibbsOptions,
    mut streams: Vec<RandomStream>,
) -> Result<EstimateResult> {
    let d = set.len();
    if draws == 0 {
        return Err(Error::Config("draw count must be at least 1".into()));
    }
    if streams.len() != d {
        return Err(Error::Config(format!(
            "{} streams for {d} models",
            streams.len()
        )));
    }
    set.check_observation(y)?;
    let seed = streams[0].seed();
    let log_weights: Vec<f64> = set.weights().iter().map(|w| w.ln()).collect();
    let mut state = GibbsState {
        model_index: gumbel_argmax(&log_weights, &mut streams),
        theta: vec![0.0; d],
    };
    let mut logits = vec![0.0; d];
    let mut cond = vec![0.0; d];
    let mut per_draw = Vec::with_capacity(draws * d);
    for sweep in 0..options.burn_in + draws {
        for (k, rng) in streams.iter_mut().enumerate() {
            let c = set.component(k);
            state.theta[k] = if k == state.model_index {
                c.sample_posterior(y, rng)?
            } else {
                c.sample_prior(rng)?
            };
            logits[k] = log_weights[k] + c.log_likelihood(y, state.theta[k]);
        }
        // θ_M is a posterior draw, so its likelihood is positive.
        assert!(
            log_softmax(&logits, &mut cond),
            "joint chain reached a state where every likelihood vanishes"
        );
        state.model_index = gumbel_argmax(&logits, &mut streams);
        if sweep < options.burn_in {
            continue;
        }
        match options.average {
            GibbsAverage::RaoBlackwell => per_draw.extend_from_slice(&cond),
            GibbsAverage::Indicator => {
                per_draw.extend((0..d).map(|k| if k == state.model_index { 1.0 } else { 0.0 }))
            }
        }
    }
    let method = match options.average {
        GibbsAverage::RaoBlackwell => Method::GibbsCorrected,
        GibbsAverage::Indicator => Method::GibbsIndicator,
    };
    summarize(method, &per_draw, d, StderrMethod::BatchMeans, seed, 0)
}

/// Categorical draw from `softmax(logits)` by the Gumbel-max trick, with the
/// noise for category `k` taken from `streams[k]`.
fn gumbel_argmax(logits: &[f64], streams: &mut [RandomStream]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (k, (&logit, rng)) in logits.iter().zip(streams.iter_mut()).enumerate() {
        let gumbel = -(-rng.open01().ln()).ln();
        let score = logit + gumbel;
        if score > best.1 {
            best = (k, score);
        }
    }
    best.0
}
