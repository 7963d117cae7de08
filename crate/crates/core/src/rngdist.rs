//! Reproducible random streams and the samplers used by the simulators.
//!
//! Every episode owns one [`RngStream`]. A stream is a ChaCha8 keystream keyed
//! by the master seed and selected by a 64-bit stream id, so the draws seen by
//! an episode depend only on `(master_seed, stream_id)` and never on which
//! thread runs it or in which order episodes are scheduled.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// A deterministic random stream owned by a single episode.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
    stream_id: u64,
}

impl RngStream {
    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw from `[0, 1)`.
    pub fn next_unit(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform index in `0..n`. `n` must be positive.
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        self.rng.random_range(0..n)
    }

    pub fn next_standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Derive the stream for `(master_seed, run_index)`.
///
/// The master seed keys the generator and the run index selects one of its
/// 2^64 independent streams.
pub fn derive_stream(master_seed: u64, run_index: u64) -> RngStream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run_index);
    RngStream {
        rng,
        stream_id: run_index,
    }
}

/// SplitMix64 finalizer, used to fold structured identifiers into stream ids.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Gamma distribution in shape/scale form; the mean is `shape * scale`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GammaParams {
    shape: f64,
    scale: f64,
}

impl GammaParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        let params = GammaParams { shape, scale };
        params.validate()?;
        Ok(params)
    }

    /// For compile-time constants whose values are known to be valid.
    pub(crate) const fn known(shape: f64, scale: f64) -> Self {
        GammaParams { shape, scale }
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn variance(&self) -> f64 {
        self.shape * self.scale * self.scale
    }

    /// Mode of the density, `(shape - 1) * scale` for shape >= 1.
    pub fn mode(&self) -> f64 {
        ((self.shape - 1.0) * self.scale).max(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.shape.is_finite() && self.shape > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "gamma shape must be positive, got {}",
                self.shape
            )));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "gamma scale must be positive, got {}",
                self.scale
            )));
        }
        Ok(())
    }
}

/// One draw from Gamma(shape, scale).
pub fn sample_gamma(stream: &mut RngStream, params: GammaParams) -> Result<f64> {
    params.validate()?;
    Ok(params.scale * unit_gamma(stream, params.shape))
}

/// Marsaglia-Tsang squeeze/rejection sampler for Gamma(shape, 1).
///
/// Shapes below one are drawn at `shape + 1` and scaled by `U^(1/shape)`.
fn unit_gamma(stream: &mut RngStream, shape: f64) -> f64 {
    if shape < 1.0 {
        let boosted = unit_gamma(stream, shape + 1.0);
        let u = 1.0 - stream.next_unit(); // (0, 1]
        return boosted * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = stream.next_standard_normal();
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u = stream.next_unit();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u > 0.0 && u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Uniform draw from `[low, high]`.
pub fn sample_uniform(stream: &mut RngStream, low: f64, high: f64) -> Result<f64> {
    if !(low.is_finite() && high.is_finite()) || low > high {
        return Err(Error::ParameterDomain(format!(
            "uniform bounds must satisfy low <= high, got [{low}, {high}]"
        )));
    }
    if low == high {
        return Ok(low);
    }
    let x = low + (high - low) * stream.next_unit();
    Ok(x.clamp(low, high))
}
