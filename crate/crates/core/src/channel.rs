//! Rational (IIR) channel models and an input-conditioning probe.
//!
//! Channels are direct-form difference equations with real coefficients
//! acting on complex samples:
//!
//! ```text
//! y(n) = sum_k b[k] x(n-k) - sum_k a[k] y(n-k),   k >= 1 in the second sum
//! ```
//!
//! equivalently the transfer function B(z) / (1 + sum_k a[k] z^-k). The two
//! stock channels are single-pole all-pole filters with poles at +0.9 and
//! -0.9; both have the exact two-tap FIR inverse [1, -pole].

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Stability test for 1 + sum_k a[k] z^-k via the Schur-Cohn recursion.
///
/// Returns true when every zero of the denominator lies strictly inside the
/// unit circle.
fn denominator_is_stable(feedback: &[f64]) -> bool {
    let mut coeff: Vec<f64> = std::iter::once(1.0)
        .chain(feedback.iter().copied())
        .collect();
    while coeff.len() > 1 {
        let degree = coeff.len() - 1;
        let k = coeff[degree] / coeff[0];
        if !k.is_finite() || k.abs() >= 1.0 {
            return false;
        }
        coeff = (0..degree).map(|i| coeff[i] - k * coeff[degree - i]).collect();
    }
    true
}

/// Causal rational filter with persistent state across calls.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    feedforward: Vec<f64>,
    feedback: Vec<f64>,
    input_hist: Vec<Complex64>,
    output_hist: Vec<Complex64>,
}

impl ChannelModel {
    /// Builds a filter from numerator taps `b[0..]` and denominator taps
    /// `a[1..]` (the leading denominator coefficient is fixed at 1).
    ///
    /// Rejects an empty numerator and any denominator whose zeros are not
    /// strictly inside the unit circle.
    pub fn new(feedforward: Vec<f64>, feedback: Vec<f64>) -> Result<Self> {
        if feedforward.is_empty() {
            return Err(Error::InvalidInput(
                "feedforward coefficients must be non-empty".into(),
            ));
        }
        if feedforward.iter().chain(feedback.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(
                "filter coefficients must be finite".into(),
            ));
        }
        if !denominator_is_stable(&feedback) {
            return Err(Error::InvalidInput(
                "unstable denominator: zeros must lie inside the unit circle".into(),
            ));
        }
        let input_hist = vec![Complex64::new(0.0, 0.0); feedforward.len() - 1];
        let output_hist = vec![Complex64::new(0.0, 0.0); feedback.len()];
        Ok(ChannelModel {
            feedforward,
            feedback,
            input_hist,
            output_hist,
        })
    }

    /// First stock channel: y(n) = x(n) + 0.9 y(n-1), pole at +0.9.
    pub fn h1() -> Self {
        ChannelModel::new(vec![1.0], vec![-0.9]).expect("static coefficients are valid")
    }

    /// Second stock channel: y(n) = x(n) - 0.9 y(n-1), pole at -0.9.
    pub fn h2() -> Self {
        ChannelModel::new(vec![1.0], vec![0.9]).expect("static coefficients are valid")
    }

    /// Filters a block, continuing from the state left by previous calls.
    pub fn filter(&mut self, input: &[Complex64]) -> Vec<Complex64> {
        input.iter().map(|&x| self.step(x)).collect()
    }

    /// Advances the recursion by one sample.
    pub fn step(&mut self, x: Complex64) -> Complex64 {
        let mut y = self.feedforward[0] * x;
        for (k, &b) in self.feedforward.iter().enumerate().skip(1) {
            y += b * self.input_hist[k - 1];
        }
        for (k, &a) in self.feedback.iter().enumerate() {
            y -= a * self.output_hist[k];
        }
        if !self.input_hist.is_empty() {
            self.input_hist.rotate_right(1);
            self.input_hist[0] = x;
        }
        if !self.output_hist.is_empty() {
            self.output_hist.rotate_right(1);
            self.output_hist[0] = y;
        }
        y
    }

    /// Clears the delay lines (fresh zero state).
    pub fn reset(&mut self) {
        self.input_hist.fill(Complex64::new(0.0, 0.0));
        self.output_hist.fill(Complex64::new(0.0, 0.0));
    }
}

/// Eigenvalue spread of the order-2 input autocorrelation matrix.
#[derive(Debug, Clone, Copy)]
pub struct EigenSpread {
    pub lambda_max: f64,
    pub lambda_min: f64,
    /// lambda_max / lambda_min.
    pub ratio: f64,
}

/// Estimates the eigenvalue spread of the 2x2 autocorrelation matrix
/// [[r0, r1], [conj(r1), r0]] from a signal block.
///
/// Uses biased lag estimates r0 = mean |x(n)|^2 and
/// r1 = (1/N) sum x(n) conj(x(n-1)); the matrix is Hermitian Toeplitz, so
/// its eigenvalues are r0 +/- |r1| in closed form. Requires at least 1000
/// samples for a usable estimate and fails if the matrix is not positive
/// definite.
pub fn eigen_spread_2(signal: &[Complex64]) -> Result<EigenSpread> {
    if signal.len() < 1000 {
        return Err(Error::InvalidInput(format!(
            "eigenvalue spread needs at least 1000 samples, got {}",
            signal.len()
        )));
    }
    let n = signal.len() as f64;
    let r0 = signal.iter().map(|x| x.norm_sqr()).sum::<f64>() / n;
    let r1 = signal
        .windows(2)
        .map(|w| w[1] * w[0].conj())
        .sum::<Complex64>()
        / n;
    let off = r1.norm();
    let lambda_max = r0 + off;
    let lambda_min = r0 - off;
    if lambda_min <= 0.0 {
        return Err(Error::DegenerateSignal { lambda_min });
    }
    Ok(EigenSpread {
        lambda_max,
        lambda_min,
        ratio: lambda_max / lambda_min,
    })
}
