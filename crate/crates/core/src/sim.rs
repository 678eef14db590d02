//! Monte-Carlo estimation of frame and bit error rates under successive
//! cancellation decoding.
//!
//! Every trial draws its randomness from an independent counter-addressed
//! stream of one seeded generator, so results are bit-identical no matter
//! how trials are partitioned across threads. Error counts are integers
//! and their reduction is order-free, which makes the whole report
//! deterministic for a given `(spec, channel, trials, seed)`.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSpec;
use crate::codec::{encode, sc_decode, Evidence, Posterior};
use crate::construction::CodeSpec;
use crate::util::neumaier_sum;
use crate::{Error, Result};

/// Two-sided 95% normal quantile used for Wilson intervals.
pub const WILSON_Z_95: f64 = 1.959963984540054;

/// Version stamp embedded in serialized simulation reports.
pub const FER_REPORT_FORMAT_VERSION: u32 = 1;

/// Trials per work unit handed to the thread pool.
const TRIAL_CHUNK: u64 = 1024;

/// Draws noisy observations of transmitted bits as bit posteriors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChannelSampler {
    /// Erase with the given probability, otherwise reveal the bit.
    Erasure(f64),
    /// Flip with the given probability; the posterior weighs both causes.
    Bsc(f64),
}

impl ChannelSampler {
    /// Builds a sampler for the channel; only erasure and binary symmetric
    /// channels can be sampled (general tables have no transmit model
    /// here).
    pub fn new(spec: &ChannelSpec) -> Result<Self> {
        spec.validate()?;
        match spec {
            ChannelSpec::Erasure(eps) => Ok(Self::Erasure(*eps)),
            ChannelSpec::Bsc(p) => Ok(Self::Bsc(*p)),
            ChannelSpec::Table(_) => Err(Error::InvalidChannel(
                "simulation supports erasure and binary symmetric channels only".into(),
            )),
        }
    }

    /// Samples one channel use for the transmitted `bit`.
    pub fn sample(&self, bit: u8, rng: &mut impl Rng) -> Posterior {
        match *self {
            Self::Erasure(eps) => {
                if rng.gen::<f64>() < eps {
                    Posterior::erasure()
                } else {
                    Posterior::certain(bit)
                }
            }
            Self::Bsc(p) => {
                let received = if rng.gen::<f64>() < p { bit ^ 1 } else { bit };
                // Posterior of the input given the received symbol.
                if received == 0 {
                    Posterior::new(1.0 - p, p).expect("bsc posterior is valid")
                } else {
                    Posterior::new(p, 1.0 - p).expect("bsc posterior is valid")
                }
            }
        }
    }
}

/// Raw error counts from a block of trials.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TrialCounts {
    /// Trials in which the decoded message differed from the transmitted
    /// one or the decoder flagged an information-bit tie.
    pub frame_errors: u64,
    /// Total message-bit mismatches across all trials.
    pub bit_errors: u64,
}

impl TrialCounts {
    fn add(self, other: Self) -> Self {
        Self {
            frame_errors: self.frame_errors + other.frame_errors,
            bit_errors: self.bit_errors + other.bit_errors,
        }
    }
}

/// Runs the half-open trial range sequentially.
///
/// Trial `t` always uses stream `t` of the seed's generator, so
/// partitioning a range and summing the parts reproduces the whole.
pub fn simulate_counts(
    spec: &CodeSpec,
    channel: &ChannelSpec,
    trials: Range<u64>,
    seed: u64,
) -> Result<TrialCounts> {
    let sampler = ChannelSampler::new(channel)?;
    let mut counts = TrialCounts::default();
    for trial in trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let message: Vec<u8> = (0..spec.k).map(|_| rng.gen_range(0..2u8)).collect();
        let codeword = encode(spec, &message)?;
        let evidence: Evidence = codeword
            .iter()
            .map(|&bit| sampler.sample(bit, &mut rng))
            .collect();
        let outcome = sc_decode(spec, &evidence)?;
        let mismatches = message
            .iter()
            .zip(&outcome.message)
            .filter(|(a, b)| a != b)
            .count() as u64;
        if mismatches > 0 || outcome.information_tie {
            counts.frame_errors += 1;
        }
        counts.bit_errors += mismatches;
    }
    Ok(counts)
}

/// A complete simulation result.
///
/// `wall_time_s` is informational only and never serialized, so reports
/// for the same inputs are byte-identical across machines and runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FerReport {
    /// Code summary, `<kernels> N=<N> K=<K>` with kernels joined by `x`.
    pub code: String,
    /// The simulated channel, in spec-string form.
    pub channel: String,
    /// Number of trials run.
    pub trials: u64,
    /// Base seed of the run.
    pub seed: u64,
    /// Frames with any message-bit error or an information-bit tie.
    pub frame_errors: u64,
    /// Total message-bit errors.
    pub bit_errors: u64,
    /// `frame_errors / trials`.
    pub fer: f64,
    /// `bit_errors / (trials * K)`, or 0 for `K = 0`.
    pub ber: f64,
    /// Lower end of the 95% Wilson interval for the frame error rate.
    pub wilson_low: f64,
    /// Upper end of the 95% Wilson interval.
    pub wilson_high: f64,
    /// Report format version.
    pub format_version: u32,
    /// Elapsed wall time in seconds (not serialized).
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl FerReport {
    /// Header matching [`FerReport::to_csv_row`].
    pub fn csv_header() -> &'static str {
        "code,channel,trials,seed,frame_errors,bit_errors,fer,ber,wilson_low,wilson_high"
    }

    /// One CSV row; the code label uses `x` as the kernel separator so the
    /// column count is fixed.
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.code,
            self.channel,
            self.trials,
            self.seed,
            self.frame_errors,
            self.bit_errors,
            self.fer,
            self.ber,
            self.wilson_low,
            self.wilson_high
        )
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    /// Parses a serialized report; `wall_time_s` comes back as 0.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Runs `trials` Monte-Carlo trials of the code over the channel.
///
/// Work is split into fixed-size chunks executed on the global thread
/// pool (set `RAYON_NUM_THREADS` to control it); counts are summed as
/// integers, so the result does not depend on scheduling.
pub fn run_fer_simulation(
    spec: &CodeSpec,
    channel: &ChannelSpec,
    trials: u64,
    seed: u64,
) -> Result<FerReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter(
            "simulation needs at least one trial".into(),
        ));
    }
    spec.validate()?;
    let start = std::time::Instant::now();
    let chunks: Vec<Range<u64>> = (0..trials)
        .step_by(TRIAL_CHUNK as usize)
        .map(|a| a..(a + TRIAL_CHUNK).min(trials))
        .collect();
    let counts = chunks
        .into_par_iter()
        .map(|range| simulate_counts(spec, channel, range, seed))
        .try_reduce(TrialCounts::default, |a, b| Ok(a.add(b)))?;
    let fer = counts.frame_errors as f64 / trials as f64;
    let ber = if spec.k == 0 {
        0.0
    } else {
        counts.bit_errors as f64 / (trials as f64 * spec.k as f64)
    };
    let (wilson_low, wilson_high) = wilson_interval(counts.frame_errors, trials);
    Ok(FerReport {
        code: format!("{} N={} K={}", spec.kernels.join("x"), spec.n, spec.k),
        channel: channel.to_string(),
        trials,
        seed,
        frame_errors: counts.frame_errors,
        bit_errors: counts.bit_errors,
        fer,
        ber,
        wilson_low,
        wilson_high,
        format_version: FER_REPORT_FORMAT_VERSION,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// 95% Wilson score interval for `errors` successes in `trials` draws,
/// clamped to `[0, 1]`. The interval always contains the point estimate.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    assert!(trials > 0, "wilson interval needs at least one trial");
    assert!(errors <= trials, "more errors than trials");
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = WILSON_Z_95 * WILSON_Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // At the boundary counts the exact endpoints are 0 and 1; computing
    // them as center -/+ half leaves ulp-level residue.
    let low = if errors == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let high = if errors == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (low, high)
}

/// Union bound on the frame error rate: the sum of the spec's reliability
/// figures over the information set. For bound-mode specs this uses the
/// stored upper bounds; the result may exceed 1 for weak codes.
pub fn union_bound(spec: &CodeSpec) -> f64 {
    neumaier_sum(
        spec.information_set
            .iter()
            .map(|&i| spec.reliabilities[i - 1]),
    )
}
