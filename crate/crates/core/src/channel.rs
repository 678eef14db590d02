//! Binary-input channels, their figures of merit, and the entropy toolbox.
//!
//! The synthesis machinery works on two representations:
//!
//! * [`ErasureChannel`] — a binary erasure channel described by its erasure
//!   probability alone. Erasure channels are closed under kernel synthesis,
//!   so the whole construction can be tracked exactly with one number per
//!   node.
//! * [`DiscreteChannel`] — a general binary-input channel given by its
//!   transition table `p(y|x)`, used for channels (like the BSC) whose
//!   synthesized descendants grow genuine output alphabets.
//!
//! The module also hosts the scalar entropy helpers used throughout the
//! analysis layer: the binary entropy function [`h2`], its inverse
//! [`h2_inv`] on `[0, 1/2]`, and the erasure convolution [`bconv`].

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::util::neumaier_sum;
use crate::{Error, Result};

/// Binary entropy `h2(p) = -p log2 p - (1-p) log2 (1-p)`.
///
/// Panics if `p` is outside `[0, 1]`.
pub fn h2(p: f64) -> f64 {
    assert!(
        (0.0..=1.0).contains(&p),
        "h2 argument must lie in [0, 1], got {p}"
    );
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

/// Inverse of [`h2`] on `[0, 1/2]`: the unique `p <= 1/2` with `h2(p) = y`.
///
/// Bisection, accurate to about `1e-14`. Panics if `y` is outside `[0, 1]`.
pub fn h2_inv(y: f64) -> f64 {
    assert!(
        (0.0..=1.0).contains(&y),
        "h2_inv argument must lie in [0, 1], got {y}"
    );
    if y == 0.0 {
        return 0.0;
    }
    if y == 1.0 {
        return 0.5;
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    // 100 halvings of [0, 0.5] take the interval far below f64 resolution.
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if h2(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Erasure convolution `a ⋆ b = a + b - 2ab`: the crossover probability of
/// two BSCs in series, and the key composition in the entropy inequalities.
///
/// Panics if either argument is outside `[0, 1]`.
pub fn bconv(a: f64, b: f64) -> f64 {
    assert!(
        (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b),
        "bconv arguments must lie in [0, 1], got {a}, {b}"
    );
    a + b - 2.0 * a * b
}

/// A binary erasure channel, tracked by its erasure probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErasureChannel {
    erasure_prob: f64,
}

impl ErasureChannel {
    /// A BEC with the given erasure probability in `[0, 1]`.
    pub fn new(erasure_prob: f64) -> Result<ErasureChannel> {
        if !(0.0..=1.0).contains(&erasure_prob) {
            return Err(Error::InvalidChannel(format!(
                "erasure probability must lie in [0, 1], got {erasure_prob}"
            )));
        }
        Ok(ErasureChannel { erasure_prob })
    }

    /// The erasure probability.
    pub fn erasure_prob(&self) -> f64 {
        self.erasure_prob
    }

    /// Mutual information with uniform input: `1 - erasure_prob`.
    pub fn mutual_information(&self) -> f64 {
        1.0 - self.erasure_prob
    }

    /// Bhattacharyya parameter: equals the erasure probability.
    pub fn bhattacharyya(&self) -> f64 {
        self.erasure_prob
    }

    /// The explicit three-output transition table of this BEC.
    pub fn to_discrete(&self) -> DiscreteChannel {
        let e = self.erasure_prob;
        DiscreteChannel::new(vec![[1.0 - e, 0.0], [e, e], [0.0, 1.0 - e]])
            .expect("BEC table is a valid channel")
    }
}

/// A binary-input discrete memoryless channel given by its transition table.
///
/// `pmf[y] = [p(y|0), p(y|1)]`. Both columns are validated and renormalized
/// on construction, so stored columns sum to exactly the floating-point
/// normalization of the inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteChannel {
    pmf: Vec<[f64; 2]>,
}

impl DiscreteChannel {
    /// Builds a channel from its transition table, validating that entries
    /// are finite and non-negative and that each column sums to 1 within
    /// `1e-6` (columns are then renormalized exactly).
    pub fn new(pmf: Vec<[f64; 2]>) -> Result<DiscreteChannel> {
        if pmf.is_empty() {
            return Err(Error::InvalidChannel(
                "channel needs at least one output".into(),
            ));
        }
        for (y, row) in pmf.iter().enumerate() {
            for (x, &p) in row.iter().enumerate() {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::InvalidChannel(format!(
                        "p(y={y}|x={x}) = {p} is not a probability"
                    )));
                }
            }
        }
        let mut sums = [0.0f64; 2];
        for x in 0..2 {
            sums[x] = neumaier_sum(pmf.iter().map(|row| row[x]));
            if (sums[x] - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidChannel(format!(
                    "p(.|x={x}) sums to {} (must be 1)",
                    sums[x]
                )));
            }
        }
        let pmf = pmf
            .into_iter()
            .map(|row| [row[0] / sums[0], row[1] / sums[1]])
            .collect();
        Ok(DiscreteChannel { pmf })
    }

    /// The three-output table of a BEC with erasure probability `e`.
    pub fn from_erasure(e: f64) -> Result<DiscreteChannel> {
        Ok(ErasureChannel::new(e)?.to_discrete())
    }

    /// A binary symmetric channel with crossover probability `p`.
    pub fn from_bsc(p: f64) -> Result<DiscreteChannel> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidChannel(format!(
                "crossover probability must lie in [0, 1], got {p}"
            )));
        }
        DiscreteChannel::new(vec![[1.0 - p, p], [p, 1.0 - p]])
    }

    /// Number of output symbols.
    pub fn output_count(&self) -> usize {
        self.pmf.len()
    }

    /// The transition table, `pmf()[y] = [p(y|0), p(y|1)]`.
    pub fn pmf(&self) -> &[[f64; 2]] {
        &self.pmf
    }

    /// Mutual information `I(X; Y)` in bits under the uniform input
    /// distribution.
    pub fn mutual_information(&self) -> f64 {
        let terms = self.pmf.iter().flat_map(|row| {
            let py = 0.5 * (row[0] + row[1]);
            row.iter().map(move |&pyx| {
                if pyx <= 0.0 {
                    0.0
                } else {
                    0.5 * pyx * (pyx / py).log2()
                }
            })
        });
        neumaier_sum(terms).clamp(0.0, 1.0)
    }

    /// Bhattacharyya parameter `Z = sum_y sqrt(p(y|0) p(y|1))`.
    pub fn bhattacharyya(&self) -> f64 {
        neumaier_sum(self.pmf.iter().map(|row| (row[0] * row[1]).sqrt())).clamp(0.0, 1.0)
    }
}

/// A parseable description of a design channel.
///
/// Text forms: `bec:0.5`, `bsc:0.11`, and
/// `table:p00,p01;p10,p11;...` listing `p(y|0),p(y|1)` per output symbol.
/// Serialized to JSON as the same string.
#[derive(Clone, Debug, PartialEq)]
pub enum ChannelSpec {
    /// Binary erasure channel with the given erasure probability.
    Erasure(f64),
    /// Binary symmetric channel with the given crossover probability.
    Bsc(f64),
    /// Explicit transition table.
    Table(Vec<[f64; 2]>),
}

impl ChannelSpec {
    /// The erasure probability, if this is an erasure channel.
    ///
    /// Erasure channels get the exact closed-form synthesis path; everything
    /// else goes through the general table evolution.
    pub fn as_erasure(&self) -> Option<f64> {
        match self {
            ChannelSpec::Erasure(e) => Some(*e),
            _ => None,
        }
    }

    /// Materializes the transition table.
    pub fn to_channel(&self) -> Result<DiscreteChannel> {
        match self {
            ChannelSpec::Erasure(e) => DiscreteChannel::from_erasure(*e),
            ChannelSpec::Bsc(p) => DiscreteChannel::from_bsc(*p),
            ChannelSpec::Table(pmf) => DiscreteChannel::new(pmf.clone()),
        }
    }

    /// Validates the parameters without materializing the table.
    pub fn validate(&self) -> Result<()> {
        self.to_channel().map(|_| ())
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelSpec::Erasure(e) => write!(f, "bec:{e}"),
            ChannelSpec::Bsc(p) => write!(f, "bsc:{p}"),
            ChannelSpec::Table(pmf) => {
                write!(f, "table:")?;
                for (i, row) in pmf.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{},{}", row[0], row[1])?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for ChannelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<ChannelSpec> {
        let (kind, body) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("channel spec `{s}` has no `kind:` prefix")))?;
        let parse_prob = |what: &str, v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("invalid {what} `{v}`")))
        };
        let spec = match kind {
            "bec" => ChannelSpec::Erasure(parse_prob("erasure probability", body)?),
            "bsc" => ChannelSpec::Bsc(parse_prob("crossover probability", body)?),
            "table" => {
                let mut pmf = Vec::new();
                for row in body.split(';') {
                    let (a, b) = row.split_once(',').ok_or_else(|| {
                        Error::Parse(format!("table row `{row}` needs two comma-separated entries"))
                    })?;
                    pmf.push([parse_prob("probability", a)?, parse_prob("probability", b)?]);
                }
                ChannelSpec::Table(pmf)
            }
            _ => {
                return Err(Error::Parse(format!(
                    "unknown channel kind `{kind}` (expected bec, bsc, or table)"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl Serialize for ChannelSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ChannelSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Deterministically generates random binary-input channels for stress
/// checks: output counts are drawn from `2..=max_outputs` and column weights
/// from `[0.05, 1.05)` before normalization (bounded away from zero so every
/// output stays in use).
pub fn random_channels(count: usize, max_outputs: usize, seed: u64) -> Vec<DiscreteChannel> {
    assert!(max_outputs >= 2, "channels need at least two outputs");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let outputs = rng.gen_range(2..=max_outputs);
            let pmf: Vec<[f64; 2]> = (0..outputs)
                .map(|_| [rng.gen::<f64>() + 0.05, rng.gen::<f64>() + 0.05])
                .collect();
            DiscreteChannel::new(
                pmf.iter()
                    .map(|row| {
                        [
                            row[0] / pmf.iter().map(|r| r[0]).sum::<f64>(),
                            row[1] / pmf.iter().map(|r| r[1]).sum::<f64>(),
                        ]
                    })
                    .collect(),
            )
            .expect("normalized table is a valid channel")
        })
        .collect()
}
