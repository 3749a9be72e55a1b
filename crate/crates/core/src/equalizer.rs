//! Adaptive FIR equalizer: trained LMS and four constant-modulus updates.
//!
//! The filter output is the plain (unconjugated) dot product
//! y(n) = sum_k w_k x(n-k). Conjugation enters only through the regressor
//! in the tap updates:
//!
//! ```text
//! LMS:  e(n) = d(n) - y(n),        W <- W + mu e(n) conj(X(n))
//! CMA:  K = K_{q,p}(y(n)),         W <- W - mu K conj(X(n))
//! ```
//!
//! The four constant-modulus kernels are the stochastic gradients of the
//! dispersion costs ||y|^q - A^q|^p for q, p in {1, 2}:
//!
//! ```text
//! K11 = sign(|y| - A) y/|y|          K12 = 2 (|y| - A) y/|y|
//! K21 = 2 sign(|y|^2 - A^2) y        K22 = 4 (|y|^2 - A^2) y
//! ```
//!
//! with sign(0) = 0, so every kernel vanishes exactly on the target circle.
//! The q = 1 kernels divide by |y| and are clamped to zero below a small
//! output magnitude instead.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Output magnitude below which the modulus-normalised (q = 1) kernels
/// return zero rather than divide by |y|.
pub const KERNEL_GUARD: f64 = 1e-12;

/// Real sign with sign(0) = 0.
fn real_sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Selector for the constant-modulus kernel K_{q,p}: `q` is the modulus
/// exponent inside the dispersion, `p` the power applied to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelId {
    Cma11,
    Cma12,
    Cma21,
    Cma22,
}

impl KernelId {
    pub const ALL: [KernelId; 4] = [
        KernelId::Cma11,
        KernelId::Cma12,
        KernelId::Cma21,
        KernelId::Cma22,
    ];

    /// Exponent q applied to |y| inside the dispersion term.
    pub fn modulus_exponent(self) -> u32 {
        match self {
            KernelId::Cma11 | KernelId::Cma12 => 1,
            KernelId::Cma21 | KernelId::Cma22 => 2,
        }
    }

    /// Squared dispersion (|y|^q - A^q)^2, the per-sample error the
    /// convergence curves track for this kernel family.
    pub fn dispersion_sq(self, output: Complex64, modulus: f64) -> f64 {
        let deviation = match self.modulus_exponent() {
            1 => output.norm() - modulus,
            _ => output.norm_sqr() - modulus * modulus,
        };
        deviation * deviation
    }
}

/// Evaluates the kernel K_{q,p} at output `y` for target modulus `modulus`.
pub fn cma_kernel(id: KernelId, y: Complex64, modulus: f64) -> Complex64 {
    debug_assert!(modulus > 0.0);
    let r = y.norm();
    match id {
        KernelId::Cma11 | KernelId::Cma12 if r < KERNEL_GUARD => Complex64::new(0.0, 0.0),
        KernelId::Cma11 => real_sign(r - modulus) * (y / r),
        KernelId::Cma12 => 2.0 * (r - modulus) * (y / r),
        KernelId::Cma21 => 2.0 * real_sign(y.norm_sqr() - modulus * modulus) * y,
        KernelId::Cma22 => 4.0 * (y.norm_sqr() - modulus * modulus) * y,
    }
}

/// Adaptation family for one experiment run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Trained least-mean-square with a known reference sequence.
    Lms,
    /// Blind constant-modulus update with the given kernel.
    Cma(KernelId),
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Lms,
        Algorithm::Cma(KernelId::Cma11),
        Algorithm::Cma(KernelId::Cma12),
        Algorithm::Cma(KernelId::Cma21),
        Algorithm::Cma(KernelId::Cma22),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Lms => "lms",
            Algorithm::Cma(KernelId::Cma11) => "cma11",
            Algorithm::Cma(KernelId::Cma12) => "cma12",
            Algorithm::Cma(KernelId::Cma21) => "cma21",
            Algorithm::Cma(KernelId::Cma22) => "cma22",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lms" => Ok(Algorithm::Lms),
            "cma11" => Ok(Algorithm::Cma(KernelId::Cma11)),
            "cma12" => Ok(Algorithm::Cma(KernelId::Cma12)),
            "cma21" => Ok(Algorithm::Cma(KernelId::Cma21)),
            "cma22" => Ok(Algorithm::Cma(KernelId::Cma22)),
            other => Err(Error::InvalidInput(format!(
                "unknown algorithm '{other}' (expected lms, cma11, cma12, cma21 or cma22)"
            ))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Tap initialisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    /// All taps zero. Default for trained adaptation.
    Zero,
    /// Single unit tap at index floor(N/2), zeros elsewhere. Default for
    /// blind adaptation, which cannot start from the all-zero fixed point.
    CenterSpike,
}

/// Initial tap vector of length `n` (`n >= 1`).
pub fn init_weights(n: usize, strategy: InitStrategy) -> Vec<Complex64> {
    assert!(n >= 1, "equalizer needs at least one tap");
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    if strategy == InitStrategy::CenterSpike {
        w[n / 2] = Complex64::new(1.0, 0.0);
    }
    w
}

/// Step size 1 / (5 (2N + 1) P_R) for an N-tap trained equalizer driven by
/// input power P_R.
pub fn rule_of_thumb_step(num_taps: usize, received_power: f64) -> Result<f64> {
    if num_taps == 0 {
        return Err(Error::InvalidInput("tap count must be positive".into()));
    }
    if !(received_power > 0.0) || !received_power.is_finite() {
        return Err(Error::InvalidInput(format!(
            "received power must be positive and finite, got {received_power}"
        )));
    }
    Ok(1.0 / (5.0 * (2 * num_taps + 1) as f64 * received_power))
}

/// Adaptive FIR filter state: taps, regressor delay line, step size and
/// target modulus.
#[derive(Debug, Clone)]
pub struct Equalizer {
    weights: Vec<Complex64>,
    delay_line: Vec<Complex64>,
    step: f64,
    modulus: f64,
    updates: usize,
}

impl Equalizer {
    /// Builds an `num_taps`-tap equalizer. The step size and target modulus
    /// must be positive and finite.
    pub fn new(
        num_taps: usize,
        step: f64,
        modulus: f64,
        init: InitStrategy,
    ) -> Result<Self> {
        if num_taps == 0 {
            return Err(Error::InvalidInput("tap count must be positive".into()));
        }
        if !step.is_finite() || step <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "step size must be positive and finite, got {step}"
            )));
        }
        if !modulus.is_finite() || modulus <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "target modulus must be positive and finite, got {modulus}"
            )));
        }
        Ok(Equalizer {
            weights: init_weights(num_taps, init),
            delay_line: vec![Complex64::new(0.0, 0.0); num_taps],
            step,
            modulus,
            updates: 0,
        })
    }

    pub fn num_taps(&self) -> usize {
        self.weights.len()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    /// Completed adaptation steps.
    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    /// Replaces the tap vector. Intended for experiments that need a
    /// non-default starting point; the length must match.
    pub fn set_weights(&mut self, weights: &[Complex64]) -> Result<()> {
        if weights.len() != self.weights.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} taps, got {}",
                self.weights.len(),
                weights.len()
            )));
        }
        self.weights.copy_from_slice(weights);
        Ok(())
    }

    /// Shifts a new received sample into the regressor
    /// X(n) = [x(n), x(n-1), ..., x(n-N+1)].
    pub fn push_sample(&mut self, x: Complex64) {
        self.delay_line.rotate_right(1);
        self.delay_line[0] = x;
    }

    /// Current filter output y(n) = sum_k w_k x(n-k). Plain transpose; the
    /// regressor is not conjugated here.
    pub fn output(&self) -> Complex64 {
        self.weights
            .iter()
            .zip(&self.delay_line)
            .map(|(&w, &x)| w * x)
            .sum()
    }

    /// One blind adaptation step with kernel `id`. Returns the pre-update
    /// output y(n).
    pub fn cma_update(&mut self, id: KernelId) -> Result<Complex64> {
        let y = self.output();
        let kernel = cma_kernel(id, y, self.modulus);
        for (w, &x) in self.weights.iter_mut().zip(&self.delay_line) {
            *w -= self.step * kernel * x.conj();
        }
        self.check_finite()?;
        self.updates += 1;
        Ok(y)
    }

    /// One trained adaptation step toward `desired`. Returns the pre-update
    /// output y(n) and the error e(n) = desired - y(n).
    pub fn lms_update(&mut self, desired: Complex64) -> Result<(Complex64, Complex64)> {
        let y = self.output();
        let e = desired - y;
        for (w, &x) in self.weights.iter_mut().zip(&self.delay_line) {
            *w += self.step * e * x.conj();
        }
        self.check_finite()?;
        self.updates += 1;
        Ok((y, e))
    }

    fn check_finite(&self) -> Result<()> {
        if self.weights.iter().all(|w| w.is_finite()) {
            Ok(())
        } else {
            Err(Error::Diverged {
                iteration: self.updates,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const ZERO: Complex64 = Complex64::new(0.0, 0.0);

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kernel_hand_values() {
        // y = 2 on the real axis, A = 1.
        let y = c(2.0, 0.0);
        assert_eq!(cma_kernel(KernelId::Cma11, y, 1.0), c(1.0, 0.0));
        assert_eq!(cma_kernel(KernelId::Cma12, y, 1.0), c(2.0, 0.0));
        assert_eq!(cma_kernel(KernelId::Cma21, y, 1.0), c(4.0, 0.0));
        assert_eq!(cma_kernel(KernelId::Cma22, y, 1.0), c(24.0, 0.0));

        // y = 0.5j, inside the circle.
        let y = c(0.0, 0.5);
        assert_eq!(cma_kernel(KernelId::Cma11, y, 1.0), c(0.0, -1.0));
        assert_eq!(cma_kernel(KernelId::Cma12, y, 1.0), c(0.0, -1.0));
        assert_eq!(cma_kernel(KernelId::Cma21, y, 1.0), c(0.0, -1.0));
        assert_eq!(cma_kernel(KernelId::Cma22, y, 1.0), c(0.0, -1.5));
    }

    #[test]
    fn kernels_vanish_on_target_circle() {
        // Axis points have an exactly representable modulus.
        for modulus in [1.0, 2.5] {
            for y in [
                c(modulus, 0.0),
                c(-modulus, 0.0),
                c(0.0, modulus),
                c(0.0, -modulus),
            ] {
                for id in KernelId::ALL {
                    assert_eq!(cma_kernel(id, y, modulus), ZERO, "{id:?} at {y}");
                }
            }
        }
    }

    #[test]
    fn guard_clamps_normalised_kernels_near_zero() {
        let y = c(1e-13, 0.0);
        assert_eq!(cma_kernel(KernelId::Cma11, y, 1.0), ZERO);
        assert_eq!(cma_kernel(KernelId::Cma12, y, 1.0), ZERO);
        // The q = 2 kernels have no division and stay well defined.
        let k21 = cma_kernel(KernelId::Cma21, y, 1.0);
        assert_relative_eq!(k21.re, -2.0e-13, max_relative = 1e-12);
        let k22 = cma_kernel(KernelId::Cma22, y, 1.0);
        assert_relative_eq!(k22.re, -4.0e-13, max_relative = 1e-9);
    }

    #[test]
    fn kernel_at_exact_zero_is_zero_for_all_variants() {
        for id in KernelId::ALL {
            assert_eq!(cma_kernel(id, ZERO, 1.0), ZERO);
        }
    }

    #[test]
    fn dispersion_matches_kernel_family() {
        let y = c(0.6, 0.8); // |y| = 1 up to rounding
        assert!(KernelId::Cma11.dispersion_sq(y, 1.0) < 1e-30);
        assert!(KernelId::Cma22.dispersion_sq(y, 1.0) < 1e-30);
        let y = c(2.0, 0.0);
        assert_eq!(KernelId::Cma12.dispersion_sq(y, 1.0), 1.0);
        assert_eq!(KernelId::Cma21.dispersion_sq(y, 1.0), 9.0);
    }

    #[test]
    fn output_is_plain_transpose() {
        // With conjugation the result would be +1; the plain product gives -1.
        let mut eq = Equalizer::new(1, 0.1, 1.0, InitStrategy::Zero).unwrap();
        eq.set_weights(&[c(0.0, 1.0)]).unwrap();
        eq.push_sample(c(0.0, 1.0));
        assert_eq!(eq.output(), c(-1.0, 0.0));
    }

    #[test]
    fn delay_line_shifts_newest_first() {
        let mut eq = Equalizer::new(3, 0.1, 1.0, InitStrategy::Zero).unwrap();
        for k in 1..=4 {
            eq.push_sample(c(k as f64, 0.0));
        }
        eq.set_weights(&[c(1.0, 0.0), ZERO, ZERO]).unwrap();
        assert_eq!(eq.output(), c(4.0, 0.0));
        eq.set_weights(&[ZERO, ZERO, c(1.0, 0.0)]).unwrap();
        assert_eq!(eq.output(), c(2.0, 0.0));
    }

    #[test]
    fn lms_update_hand_value() {
        let mut eq = Equalizer::new(2, 0.5, 1.0, InitStrategy::Zero).unwrap();
        eq.push_sample(c(1.0, 1.0));
        eq.push_sample(c(2.0, 0.0)); // regressor is now [2, 1+j]
        let (y, e) = eq.lms_update(c(1.0, 0.0)).unwrap();
        assert_eq!(y, ZERO);
        assert_eq!(e, c(1.0, 0.0));
        // W = 0 + 0.5 * e * conj(X) = 0.5 * [2, 1-j]
        assert_eq!(eq.weights()[0], c(1.0, 0.0));
        assert_eq!(eq.weights()[1], c(0.5, -0.5));
    }

    #[test]
    fn cma_update_hand_value() {
        let mut eq = Equalizer::new(1, 0.1, 1.0, InitStrategy::CenterSpike).unwrap();
        eq.push_sample(c(2.0, 0.0));
        let y = eq.cma_update(KernelId::Cma22).unwrap();
        assert_eq!(y, c(2.0, 0.0));
        // K22 = 4 (4 - 1) 2 = 24; w = 1 - 0.1 * 24 * 2 = -3.8
        assert_relative_eq!(eq.weights()[0].re, -3.8, max_relative = 1e-12);
        assert_eq!(eq.weights()[0].im, 0.0);
    }

    #[test]
    fn updates_on_target_circle_are_no_ops() {
        for id in KernelId::ALL {
            let mut eq = Equalizer::new(1, 0.3, 1.0, InitStrategy::CenterSpike).unwrap();
            eq.push_sample(c(0.0, -1.0)); // output -j sits exactly on the circle
            eq.cma_update(id).unwrap();
            assert_eq!(eq.weights()[0], c(1.0, 0.0), "{id:?}");
        }
    }

    #[test]
    fn zero_weights_are_a_cma_fixed_point() {
        let mut src = crate::noise::NoiseSource::new(77);
        for id in KernelId::ALL {
            let mut eq = Equalizer::new(4, 0.05, 1.0, InitStrategy::Zero).unwrap();
            for _ in 0..200 {
                let (a, b) = src.gaussian_pair();
                eq.push_sample(c(a, b));
                eq.cma_update(id).unwrap();
                assert!(eq.weights().iter().all(|&w| w == ZERO), "{id:?}");
            }
        }
    }

    #[test]
    fn divergence_reports_iteration() {
        let mut eq = Equalizer::new(1, 1e300, 1.0, InitStrategy::CenterSpike).unwrap();
        eq.push_sample(c(1e12, 0.0));
        // First update overflows: |y|^2 ~ 1e24, K22 ~ 1e36, step 1e300.
        match eq.cma_update(KernelId::Cma22) {
            Err(Error::Diverged { iteration }) => assert_eq!(iteration, 0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn init_weights_shapes() {
        assert_eq!(init_weights(2, InitStrategy::Zero), vec![ZERO, ZERO]);
        assert_eq!(
            init_weights(2, InitStrategy::CenterSpike),
            vec![ZERO, c(1.0, 0.0)]
        );
        let spike5 = init_weights(5, InitStrategy::CenterSpike);
        assert_eq!(spike5[2], c(1.0, 0.0));
        assert_eq!(spike5.iter().filter(|&&w| w != ZERO).count(), 1);
        assert_eq!(init_weights(1, InitStrategy::CenterSpike), vec![c(1.0, 0.0)]);
    }

    #[test]
    fn rule_of_thumb_examples() {
        assert_eq!(rule_of_thumb_step(8, 1.0).unwrap(), 1.0 / 85.0);
        assert_eq!(rule_of_thumb_step(2, 1.0).unwrap(), 1.0 / 25.0);
        assert!(rule_of_thumb_step(0, 1.0).is_err());
        assert!(rule_of_thumb_step(8, 0.0).is_err());
        assert!(rule_of_thumb_step(8, -2.0).is_err());
        assert!(rule_of_thumb_step(8, f64::NAN).is_err());
    }

    #[test]
    fn constructor_validates_arguments() {
        assert!(Equalizer::new(0, 0.1, 1.0, InitStrategy::Zero).is_err());
        assert!(Equalizer::new(2, 0.0, 1.0, InitStrategy::Zero).is_err());
        assert!(Equalizer::new(2, -0.1, 1.0, InitStrategy::Zero).is_err());
        assert!(Equalizer::new(2, f64::INFINITY, 1.0, InitStrategy::Zero).is_err());
        assert!(Equalizer::new(2, 0.1, 0.0, InitStrategy::Zero).is_err());
        assert!(Equalizer::new(2, 0.1, -1.0, InitStrategy::Zero).is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for algo in Algorithm::ALL {
            let parsed: Algorithm = algo.name().parse().unwrap();
            assert_eq!(parsed, algo);
        }
        assert!("cma13".parse::<Algorithm>().is_err());
        assert!("LMS".parse::<Algorithm>().is_err());
    }
}
