//! Deterministic noise generation.
//!
//! Reproducibility across platforms matters more here than statistical
//! sophistication, so the generator is pinned rather than pulled in as a
//! dependency: a SplitMix64 stream (Steele, Lea and Flood 2014) supplies
//! 64-bit words, the top 53 bits become uniform deviates, and a Box-Muller
//! transform turns uniform pairs into standard-normal pairs. The same seed
//! always produces the same sample sequence, bit for bit.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Weyl increment of the SplitMix64 stream.
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// 2^-53, the spacing of the uniform grid.
const UNIFORM_SCALE: f64 = 1.0 / (1u64 << 53) as f64;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded source of uniform, Gaussian and bit-valued deviates.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    state: u64,
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        NoiseSource { state: seed }
    }

    /// Source for an independent substream of `master`.
    ///
    /// Used to decouple consumers that share one experiment seed (data bits
    /// on one stream, channel noise on another), so drawing more from one
    /// stream never shifts the other.
    pub fn substream(master: u64, stream: u64) -> Self {
        NoiseSource::new(mix(master ^ stream.wrapping_mul(GOLDEN_GAMMA)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix(self.state)
    }

    /// Uniform deviate on the half-open interval (0, 1].
    ///
    /// The open end sits at zero so the Box-Muller logarithm never sees 0.
    fn next_uniform_positive(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * UNIFORM_SCALE
    }

    /// Uniform deviate on [0, 1).
    pub fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * UNIFORM_SCALE
    }

    /// Two independent standard-normal deviates (Box-Muller).
    pub fn gaussian_pair(&mut self) -> (f64, f64) {
        let u1 = self.next_uniform_positive();
        let u2 = self.next_uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        (radius * angle.cos(), radius * angle.sin())
    }

    /// One pair of equiprobable bits, for symbol generation.
    pub fn next_bit_pair(&mut self) -> [bool; 2] {
        let word = self.next_u64();
        [word & 1 != 0, word & 2 != 0]
    }
}

/// Adds circularly symmetric complex Gaussian noise of total variance
/// `variance`, split evenly between the real and imaginary parts.
///
/// With `variance == 0.0` the output equals the input exactly; the source
/// still advances so the draw count is independent of the variance.
pub fn add_awgn(
    signal: &[Complex64],
    variance: f64,
    source: &mut NoiseSource,
) -> Result<Vec<Complex64>> {
    if !(variance >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "noise variance must be non-negative, got {variance}"
        )));
    }
    let scale = (variance / 2.0).sqrt();
    Ok(signal
        .iter()
        .map(|&s| {
            let (g_re, g_im) = source.gaussian_pair();
            s + Complex64::new(scale * g_re, scale * g_im)
        })
        .collect())
}
