//! Seedable random streams and the exact samplers used by the example models.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Beta, Distribution, Exp1, Gamma, Open01, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::ModelSet;
use crate::specfun;

/// Mixes a list of words into a single 64-bit substream id.
///
/// SplitMix64 finalizer applied to a running state; distinct inputs map to
/// well-separated ids, so neighbouring grid indices do not share streams.
pub fn substream_id(parts: &[u64]) -> u64 {
    let mut state: u64 = 0x6a09_e667_f3bc_c909;
    for &part in parts {
        state = splitmix(state ^ splitmix(part.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    state
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A reproducible random stream identified by `(seed, stream_id)`.
///
/// The seed keys a ChaCha12 generator and the stream id selects its
/// 64-bit stream (nonce), so streams sharing a seed never overlap.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RandomStream {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream under the same seed, derived from this stream's id and
    /// `index`. Independent of how much of `self` has been consumed.
    pub fn child(&self, index: u64) -> RandomStream {
        RandomStream::new(self.seed, substream_id(&[self.stream_id, index]))
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn open01(&mut self) -> f64 {
        self.rng.sample(Open01)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}

/// Gamma draw with density ∝ θ^{shape−1} e^{−rate·θ}.
pub fn sample_gamma(shape: f64, rate: f64, rng: &mut RandomStream) -> Result<f64> {
    if !(shape > 0.0 && rate > 0.0) || !shape.is_finite() || !rate.is_finite() {
        return Err(Error::domain(
            "sample_gamma",
            format!("shape = {shape}, rate = {rate}; both must be finite and > 0"),
        ));
    }
    let dist =
        Gamma::new(shape, 1.0 / rate).map_err(|e| Error::domain("sample_gamma", e.to_string()))?;
    Ok(dist.sample(rng))
}

pub fn sample_beta(a: f64, b: f64, rng: &mut RandomStream) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::domain(
            "sample_beta",
            format!("a = {a}, b = {b}; both must be finite and > 0"),
        ));
    }
    let dist = Beta::new(a, b).map_err(|e| Error::domain("sample_beta", e.to_string()))?;
    Ok(dist.sample(rng))
}

/// Gaussian draw parameterized by mean and variance.
pub fn sample_normal(mean: f64, variance: f64, rng: &mut RandomStream) -> Result<f64> {
    if !(variance > 0.0) || !variance.is_finite() || !mean.is_finite() {
        return Err(Error::domain(
            "sample_normal",
            format!("mean = {mean}, variance = {variance}; variance must be finite and > 0"),
        ));
    }
    let z: f64 = rng.sample(StandardNormal);
    Ok(mean + variance.sqrt() * z)
}

pub fn sample_exponential(rate: f64, rng: &mut RandomStream) -> Result<f64> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::domain(
            "sample_exponential",
            format!("rate = {rate} must be finite and > 0"),
        ));
    }
    let e: f64 = rng.sample(Exp1);
    Ok(e / rate)
}

/// Proposal budget for a single accept-reject draw.
pub const MAX_PROPOSALS: u64 = 10_000_000;

/// Accept-reject sampler for the density ∝ θ^{-1} e^{-θ} on θ > y.
///
/// Proposals are `y + Exp(1)`; the ratio of target to proposal is ∝ 1/θ,
/// bounded by 1/y, so a proposal is accepted with probability `y/θ`.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedInverseExp {
    y: f64,
}

impl TruncatedInverseExp {
    pub fn new(y: f64) -> Result<Self> {
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::domain(
                "sample_ex1_m1_posterior",
                format!("y = {y} must be finite and > 0"),
            ));
        }
        Ok(TruncatedInverseExp { y })
    }

    /// Normalizing constant of the target, `E1(y)`.
    pub fn normalizer(&self) -> f64 {
        specfun::exp_integral_e1(self.y).expect("y validated positive")
    }

    /// Draws once, returning the accepted value and the number of proposals used.
    pub fn sample_counted(&self, rng: &mut RandomStream) -> Result<(f64, u64)> {
        for proposals in 1..=MAX_PROPOSALS {
            let e: f64 = rng.sample(Exp1);
            let theta = self.y + e;
            if theta > self.y && rng.random::<f64>() * theta < self.y {
                return Ok((theta, proposals));
            }
        }
        Err(Error::Convergence {
            routine: "accept-reject sampler",
            iterations: MAX_PROPOSALS,
        })
    }

    pub fn sample(&self, rng: &mut RandomStream) -> Result<f64> {
        self.sample_counted(rng).map(|(theta, _)| theta)
    }
}

/// Exact draw from the within-model posterior ∝ θ^{-1} e^{-θ} 1{θ > y}.
pub fn sample_ex1_m1_posterior(y: f64, rng: &mut RandomStream) -> Result<f64> {
    TruncatedInverseExp::new(y)?.sample(rng)
}

/// How the columns of a [`SampleMatrix`] were generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleTarget {
    /// Independent exact draws from each within-model posterior.
    Posterior,
    /// Draws from each within-model posterior driven by one shared noise sequence.
    Coupled,
    /// Constant columns placed by the caller.
    Fixed,
}

/// `T × D` draws, row-major: row `t` holds `(θ_1^(t), ..., θ_D^(t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    draws: Vec<f64>,
    columns: usize,
    y: f64,
    target: SampleTarget,
    /// `(seed, stream_id)` per column.
    streams: Vec<(u64, u64)>,
}

impl SampleMatrix {
    /// Assembles a matrix from per-model columns of equal length.
    pub fn from_columns(
        columns: &[Vec<f64>],
        y: f64,
        target: SampleTarget,
        streams: Vec<(u64, u64)>,
    ) -> Result<Self> {
        let d = columns.len();
        if d == 0 {
            return Err(Error::Config(
                "sample matrix needs at least one column".into(),
            ));
        }
        let t = columns[0].len();
        if t == 0 || columns.iter().any(|c| c.len() != t) {
            return Err(Error::Config(
                "sample matrix columns must be non-empty and of equal length".into(),
            ));
        }
        let mut draws = Vec::with_capacity(t * d);
        for row in 0..t {
            draws.extend(columns.iter().map(|c| c[row]));
        }
        Ok(SampleMatrix {
            draws,
            columns: d,
            y,
            target,
            streams,
        })
    }

    /// `T` rows of the same parameter vector.
    pub fn constant(theta: &[f64], rows: usize, y: f64) -> Result<Self> {
        let columns: Vec<Vec<f64>> = theta.iter().map(|&v| vec![v; rows]).collect();
        Self::from_columns(&columns, y, SampleTarget::Fixed, Vec::new())
    }

    pub fn rows(&self) -> usize {
        self.draws.len() / self.columns
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn target(&self) -> SampleTarget {
        self.target
    }

    pub fn streams(&self) -> &[(u64, u64)] {
        &self.streams
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.draws[t * self.columns..(t + 1) * self.columns]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.chunks_exact(self.columns)
    }

    pub fn column(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.draws.iter().skip(k).step_by(self.columns).copied()
    }
}

/// Common-random-number draws for the two normal-mean models with prior
/// means 0 and 5: `θ1 = y/2 + ε/√2`, `θ2 = (y+5)/2 + ε/√2` with one `ε` per row.
pub fn coupled_posterior_pair_ex2(
    y: f64,
    draws: usize,
    rng: &mut RandomStream,
) -> Result<SampleMatrix> {
    if draws == 0 {
        return Err(Error::Config("draw count must be at least 1".into()));
    }
    if !y.is_finite() {
        return Err(Error::domain(
            "coupled_posterior_pair_ex2",
            format!("y = {y}"),
        ));
    }
    let stream = (rng.seed(), rng.stream_id());
    let mut first = Vec::with_capacity(draws);
    let mut second = Vec::with_capacity(draws);
    for _ in 0..draws {
        let eps: f64 = rng.sample(StandardNormal);
        let shared = eps * FRAC_1_SQRT_2;
        first.push(y / 2.0 + shared);
        second.push((y + 5.0) / 2.0 + shared);
    }
    SampleMatrix::from_columns(&[first, second], y, SampleTarget::Coupled, vec![stream; 2])
}

/// `T` independent exact posterior draws per model; column `k` uses `rng.child(k)`.
pub fn sample_within_model_posteriors(
    set: &ModelSet,
    y: f64,
    draws: usize,
    rng: &RandomStream,
) -> Result<SampleMatrix> {
    let streams = (0..set.len() as u64).map(|k| rng.child(k)).collect();
    sample_within_model_posteriors_with(set, y, draws, streams)
}

/// As [`sample_within_model_posteriors`] with an explicit stream per column.
pub fn sample_within_model_posteriors_with(
    set: &ModelSet,
    y: f64,
    draws: usize,
    streams: Vec<RandomStream>,
) -> Result<SampleMatrix> {
    if draws == 0 {
        return Err(Error::Config("draw count must be at least 1".into()));
    }
    if streams.len() != set.len() {
        return Err(Error::Config(format!(
            "{} streams for {} models",
            streams.len(),
            set.len()
        )));
    }
    set.check_observation(y)?;
    let ids = streams.iter().map(|s| (s.seed(), s.stream_id())).collect();
    let columns = set
        .components()
        .par_iter()
        .zip(streams)
        .map(|(component, mut rng)| {
            (0..draws)
                .map(|_| component.sample_posterior(y, &mut rng))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    SampleMatrix::from_columns(&columns, y, SampleTarget::Posterior, ids)
}
