//! End-to-end experiment harness.
//!
//! One run wires the pieces together: random bits -> QPSK symbols -> IIR
//! channel -> additive noise -> adaptive equalizer, recording the output and
//! per-sample error at every iteration. Blind runs are then aligned against
//! the transmitted sequence (delay plus 90-degree rotation search) before
//! convergence metrics are read off, since a constant-modulus equalizer is
//! free to converge to any delayed, rotated copy of the source.
//!
//! Bits and noise draw from independent substreams of the experiment seed,
//! so every run is reproducible and the noise realisation does not depend
//! on how many bits were consumed.

use num_complex::Complex64;

use crate::channel::ChannelModel;
use crate::equalizer::{Algorithm, Equalizer, InitStrategy};
use crate::error::{Error, Result};
use crate::noise::{add_awgn, NoiseSource};
use crate::qpsk;

/// Default run length in symbols.
pub const DEFAULT_SYMBOLS: usize = 20_000;
/// Default total complex noise variance at the channel output.
pub const DEFAULT_NOISE_VARIANCE: f64 = 1e-6;
/// Default smoothing window for the learning curves.
pub const DEFAULT_WINDOW: usize = 200;
/// Tap count for trained-LMS runs.
pub const LMS_TAPS: usize = 8;
/// Step size for trained-LMS runs.
pub const LMS_STEP: f64 = 0.007;
/// Tap count for blind constant-modulus runs.
pub const CMA_TAPS: usize = 2;
/// Step size for blind constant-modulus runs.
pub const CMA_STEP: f64 = 0.001;

const STREAM_BITS: u64 = 0;
const STREAM_NOISE: u64 = 1;

/// Stock channel selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelId {
    /// Single pole at +0.9 (strong low-frequency emphasis).
    H1,
    /// Single pole at -0.9 (strong high-frequency emphasis).
    H2,
}

impl ChannelId {
    pub const ALL: [ChannelId; 2] = [ChannelId::H1, ChannelId::H2];

    pub fn name(self) -> &'static str {
        match self {
            ChannelId::H1 => "h1",
            ChannelId::H2 => "h2",
        }
    }

    pub fn build(self) -> ChannelModel {
        match self {
            ChannelId::H1 => ChannelModel::h1(),
            ChannelId::H2 => ChannelModel::h2(),
        }
    }
}

impl std::str::FromStr for ChannelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "h1" => Ok(ChannelId::H1),
            "h2" => Ok(ChannelId::H2),
            other => Err(Error::InvalidInput(format!(
                "unknown channel '{other}' (expected h1 or h2)"
            ))),
        }
    }
}

impl std::fmt::Display for ChannelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One of the four rotations a blind equalizer may settle into on a
/// 90-degree-symmetric constellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rotation {
    One,
    J,
    MinusOne,
    MinusJ,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [
        Rotation::One,
        Rotation::J,
        Rotation::MinusOne,
        Rotation::MinusJ,
    ];

    pub fn factor(self) -> Complex64 {
        match self {
            Rotation::One => Complex64::new(1.0, 0.0),
            Rotation::J => Complex64::new(0.0, 1.0),
            Rotation::MinusOne => Complex64::new(-1.0, 0.0),
            Rotation::MinusJ => Complex64::new(0.0, -1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rotation::One => "1",
            Rotation::J => "j",
            Rotation::MinusOne => "-1",
            Rotation::MinusJ => "-j",
        }
    }
}

/// Full configuration of a single experiment run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub channel: ChannelId,
    pub algorithm: Algorithm,
    pub n_symbols: usize,
    pub eq_len: usize,
    pub step: f64,
    pub noise_variance: f64,
    pub seed: u64,
    /// Reference delay for trained runs: d(n) = s(n - train_delay).
    pub train_delay: usize,
    pub smoothing_window: usize,
}

impl ExperimentConfig {
    /// Standard configuration for `algorithm` on `channel`: 20000 symbols,
    /// noise variance 1e-6, window 200, seed 0, and the per-family
    /// equalizer sizing (8 taps at step 0.007 trained, 2 taps at step 0.001
    /// blind).
    pub fn new(channel: ChannelId, algorithm: Algorithm) -> Self {
        let (eq_len, step) = match algorithm {
            Algorithm::Lms => (LMS_TAPS, LMS_STEP),
            Algorithm::Cma(_) => (CMA_TAPS, CMA_STEP),
        };
        ExperimentConfig {
            channel,
            algorithm,
            n_symbols: DEFAULT_SYMBOLS,
            eq_len,
            step,
            noise_variance: DEFAULT_NOISE_VARIANCE,
            seed: 0,
            train_delay: 0,
            smoothing_window: DEFAULT_WINDOW,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_symbols == 0 {
            return Err(Error::InvalidInput("run length must be positive".into()));
        }
        if self.eq_len == 0 {
            return Err(Error::InvalidInput(
                "equalizer length must be positive".into(),
            ));
        }
        if !self.step.is_finite() || self.step <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "step size must be positive and finite, got {}",
                self.step
            )));
        }
        if !(self.noise_variance >= 0.0) || !self.noise_variance.is_finite() {
            return Err(Error::InvalidInput(format!(
                "noise variance must be non-negative and finite, got {}",
                self.noise_variance
            )));
        }
        if self.train_delay >= self.n_symbols {
            return Err(Error::InvalidInput(format!(
                "training delay {} must be smaller than the run length {}",
                self.train_delay, self.n_symbols
            )));
        }
        if self.smoothing_window == 0 {
            return Err(Error::InvalidInput(
                "smoothing window must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Delay and rotation that best map the equalizer output back onto the
/// transmitted sequence.
#[derive(Debug, Clone)]
pub struct AlignResult {
    pub delay: usize,
    pub rotation: Rotation,
    /// |rotation * y(n) - s(n - delay)|^2 for every n; the delayed
    /// reference is taken as zero for n < delay.
    pub aligned_err_sq: Vec<f64>,
}

/// Everything recorded during one run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub transmitted: Vec<Complex64>,
    pub received: Vec<Complex64>,
    pub equalized: Vec<Complex64>,
    /// Raw per-iteration squared error: |d - y|^2 trained, squared
    /// dispersion for the blind kernels.
    pub err_sq: Vec<f64>,
    /// 10 log10 of the windowed mean of `err_sq`.
    pub err_db_smoothed: Vec<f64>,
    /// Ambiguity resolution, present for blind runs only.
    pub align: Option<AlignResult>,
    pub final_weights: Vec<Complex64>,
    pub smoothing_window: usize,
    /// True only for records reconstructed from a run that was cut short;
    /// [`run_experiment`] reports divergence as an error instead.
    pub diverged: bool,
}

/// Default tap initialisation: zero taps trained, centre spike blind.
pub fn default_init(algorithm: Algorithm) -> InitStrategy {
    match algorithm {
        Algorithm::Lms => InitStrategy::Zero,
        Algorithm::Cma(_) => InitStrategy::CenterSpike,
    }
}

/// Synthesizes the (transmitted, received) pair for one run: seeded bits
/// mapped to QPSK, passed through the channel, plus additive noise. This is
/// the single source of the data path; experiment runs and input probes
/// both go through it.
pub fn generate_signals(
    channel: ChannelId,
    n_symbols: usize,
    seed: u64,
    noise_variance: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if n_symbols == 0 {
        return Err(Error::InvalidInput("run length must be positive".into()));
    }
    let mut bit_src = NoiseSource::substream(seed, STREAM_BITS);
    let mut bits = Vec::with_capacity(2 * n_symbols);
    for _ in 0..n_symbols {
        let [b0, b1] = bit_src.next_bit_pair();
        bits.push(b0);
        bits.push(b1);
    }
    let transmitted = qpsk::modulate(&bits)?;

    let mut channel = channel.build();
    let distorted = channel.filter(&transmitted);
    let mut noise_src = NoiseSource::substream(seed, STREAM_NOISE);
    let received = add_awgn(&distorted, noise_variance, &mut noise_src)?;
    Ok((transmitted, received))
}

/// Runs one experiment with the default tap initialisation.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunRecord> {
    run_experiment_with_init(config, default_init(config.algorithm))
}

/// Runs one experiment from an explicit starting point. Exists mainly so
/// tests can probe non-default initialisations.
pub fn run_experiment_with_init(
    config: &ExperimentConfig,
    init: InitStrategy,
) -> Result<RunRecord> {
    config.validate()?;
    let n = config.n_symbols;
    let (transmitted, received) =
        generate_signals(config.channel, n, config.seed, config.noise_variance)?;

    let mut eq = Equalizer::new(config.eq_len, config.step, 1.0, init)?;
    let mut equalized = Vec::with_capacity(n);
    let mut err_sq = Vec::with_capacity(n);
    for i in 0..n {
        eq.push_sample(received[i]);
        match config.algorithm {
            Algorithm::Lms => {
                let desired = if i >= config.train_delay {
                    transmitted[i - config.train_delay]
                } else {
                    Complex64::new(0.0, 0.0)
                };
                let (y, e) = eq.lms_update(desired)?;
                equalized.push(y);
                err_sq.push(e.norm_sqr());
            }
            Algorithm::Cma(id) => {
                let y = eq.cma_update(id)?;
                equalized.push(y);
                err_sq.push(id.dispersion_sq(y, eq.modulus()));
            }
        }
    }

    let err_db_smoothed = smoothed_db(&err_sq, config.smoothing_window);
    let align = match config.algorithm {
        // Search up to the equalizer span plus slack; the single-pole
        // channels and short equalizers cannot delay further than that.
        Algorithm::Cma(_) => Some(align_phase_delay(
            &equalized,
            &transmitted,
            config.eq_len + 2,
        )?),
        Algorithm::Lms => None,
    };

    Ok(RunRecord {
        transmitted,
        received,
        equalized,
        err_sq,
        err_db_smoothed,
        align,
        final_weights: eq.weights().to_vec(),
        smoothing_window: config.smoothing_window,
        diverged: false,
    })
}

/// 10 log10 of the windowed mean of `err_sq`.
///
/// Sample n averages the window ending at n, i.e. indices
/// [n + 1 - window, n] once the window has filled and the partial prefix
/// [0, n] before that. Means are floored at `f64::MIN_POSITIVE` so silent
/// stretches produce a finite dB value.
pub fn smoothed_db(err_sq: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "smoothing window must be positive");
    (0..err_sq.len())
        .map(|n| {
            let lo = (n + 1).saturating_sub(window);
            let mean = err_sq[lo..=n].iter().sum::<f64>() / (n - lo + 1) as f64;
            10.0 * mean.max(f64::MIN_POSITIVE).log10()
        })
        .collect()
}

/// Resolves the delay/rotation ambiguity of a blind run.
///
/// Scores every (delay, rotation) pair over the final half of the run,
/// where adaptation has settled, and keeps the pair with the smallest mean
/// squared error. Ties prefer the smaller delay, then the earlier rotation
/// in [`Rotation::ALL`] order.
pub fn align_phase_delay(
    equalized: &[Complex64],
    transmitted: &[Complex64],
    max_delay: usize,
) -> Result<AlignResult> {
    if equalized.len() != transmitted.len() {
        return Err(Error::InvalidInput(format!(
            "sequence lengths differ: {} vs {}",
            equalized.len(),
            transmitted.len()
        )));
    }
    if equalized.is_empty() {
        return Err(Error::InvalidInput("cannot align empty sequences".into()));
    }
    let n = equalized.len();
    let start = n / 2;
    let zero = Complex64::new(0.0, 0.0);

    let mut best: Option<(f64, usize, Rotation)> = None;
    for delay in 0..=max_delay {
        for rotation in Rotation::ALL {
            let c = rotation.factor();
            let mut acc = 0.0;
            for i in start..n {
                let reference = if i >= delay { transmitted[i - delay] } else { zero };
                acc += (c * equalized[i] - reference).norm_sqr();
            }
            let score = acc / (n - start) as f64;
            if best.map_or(true, |(b, _, _)| score < b) {
                best = Some((score, delay, rotation));
            }
        }
    }

    let (_, delay, rotation) = best.expect("at least one candidate was scored");
    let c = rotation.factor();
    let aligned_err_sq = (0..n)
        .map(|i| {
            let reference = if i >= delay { transmitted[i - delay] } else { zero };
            (c * equalized[i] - reference).norm_sqr()
        })
        .collect();
    Ok(AlignResult {
        delay,
        rotation,
        aligned_err_sq,
    })
}

/// Steady-state level and convergence point of a learning curve.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceMetrics {
    /// Mean smoothed dB level over the final tenth of the run.
    pub steady_state_db: f64,
    /// First iteration from which the smoothed curve stays within 3 dB of
    /// the steady-state level.
    pub conv_iteration: usize,
}

/// Reads metrics off a completed record. Blind runs are measured on the
/// aligned error, trained runs on the raw error.
pub fn convergence_metrics(record: &RunRecord) -> Result<ConvergenceMetrics> {
    if record.diverged {
        return Err(Error::Metrics("run diverged before completion".into()));
    }
    let curve: Vec<f64> = match &record.align {
        Some(a) => smoothed_db(&a.aligned_err_sq, record.smoothing_window),
        None => record.err_db_smoothed.clone(),
    };
    if curve.is_empty() {
        return Err(Error::Metrics("empty learning curve".into()));
    }
    let len = curve.len();
    let tail = (len / 10).max(1);
    let steady_state_db = curve[len - tail..].iter().sum::<f64>() / tail as f64;
    let bound = steady_state_db + 3.0;

    // Scan backwards for the last violation; never report convergence
    // before the smoothing window has filled. A curve that still violates
    // the bound at the last sample degenerates to len - 1.
    let floor = record.smoothing_window.saturating_sub(1).min(len - 1);
    let mut conv_iteration = floor;
    for i in (floor..len).rev() {
        if curve[i] > bound {
            conv_iteration = (i + 1).min(len - 1);
            break;
        }
    }
    Ok(ConvergenceMetrics {
        steady_state_db,
        conv_iteration,
    })
}

/// Shared setup for the five-algorithm comparison.
#[derive(Debug, Clone)]
pub struct CompareConfig {
    pub channel: ChannelId,
    pub n_symbols: usize,
    pub noise_variance: f64,
    pub seed: u64,
    pub train_delay: usize,
    pub smoothing_window: usize,
}

impl CompareConfig {
    pub fn new(channel: ChannelId) -> Self {
        CompareConfig {
            channel,
            n_symbols: DEFAULT_SYMBOLS,
            noise_variance: DEFAULT_NOISE_VARIANCE,
            seed: 0,
            train_delay: 0,
            smoothing_window: DEFAULT_WINDOW,
        }
    }

    /// Experiment configuration for one comparison row, with the
    /// per-family tap count and step size applied.
    pub fn experiment(&self, algorithm: Algorithm) -> ExperimentConfig {
        let mut config = ExperimentConfig::new(self.channel, algorithm);
        config.n_symbols = self.n_symbols;
        config.noise_variance = self.noise_variance;
        config.seed = self.seed;
        config.train_delay = self.train_delay;
        config.smoothing_window = self.smoothing_window;
        config
    }
}

/// One row of the comparison table. Metric fields are empty for a run that
/// diverged.
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub algorithm: Algorithm,
    pub steady_state_db: Option<f64>,
    pub conv_iteration: Option<usize>,
    pub diverged: bool,
}

/// Comparison of all five algorithms on one channel.
#[derive(Debug, Clone)]
pub struct ComparisonTable {
    pub channel: ChannelId,
    /// Rows in [`Algorithm::ALL`] order: lms, cma11, cma12, cma21, cma22.
    pub rows: Vec<ComparisonRow>,
}

/// Runs every algorithm on the configured channel and seed. A diverging
/// run produces a flagged row rather than failing the whole table.
pub fn compare_algorithms(config: &CompareConfig) -> Result<ComparisonTable> {
    let mut rows = Vec::with_capacity(Algorithm::ALL.len());
    for algorithm in Algorithm::ALL {
        match run_experiment(&config.experiment(algorithm)) {
            Ok(record) => {
                let metrics = convergence_metrics(&record)?;
                rows.push(ComparisonRow {
                    algorithm,
                    steady_state_db: Some(metrics.steady_state_db),
                    conv_iteration: Some(metrics.conv_iteration),
                    diverged: false,
                });
            }
            Err(Error::Diverged { .. }) => rows.push(ComparisonRow {
                algorithm,
                steady_state_db: None,
                conv_iteration: None,
                diverged: true,
            }),
            Err(other) => return Err(other),
        }
    }
    Ok(ComparisonTable {
        channel: config.channel,
        rows,
    })
}
