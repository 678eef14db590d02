//! Encoder and successive cancellation decoder, generic over kernel sizes.
//!
//! Encoding computes `x = u * G_N` by staged kernel application (never
//! materializing `G_N`). Decoding runs successive cancellation: bits are
//! decided one at a time in natural index order, each decision conditioning
//! on the previous hard decisions.
//!
//! The decoder exploits the product structure recursively. Write
//! `G_N = T_l x G'` and split `u` into `l` consecutive blocks
//! `s_1, ..., s_l` of length `N' = N/l`. With `w_a = s_a * G'`, the
//! transmitted word satisfies, position by position,
//!
//! ```text
//! x[b*N' + c] = sum_a T_l[a][b] * w_a[c]    for each fiber c,
//! ```
//!
//! i.e. the outer kernel acts on `N'` independent fibers whose inputs are
//! the inner-codeword bits `w_a[c]`. Since `G'` is invertible, undecided
//! blocks have uniform `w_a`, so the fiber-wise kernel marginal
//! ([`kernel_marginal`]) yields exact per-position posteriors for `w_a`,
//! which are `N'` independent uses of a synthesized channel — precisely the
//! recursive sub-problem. Each sub-decode returns its re-encoded codeword
//! estimate so later blocks can condition on it. Marginalization is
//! exhaustive over the `2^{l-b}` undecided kernel inputs, keeping the
//! decoder exact (against brute-force enumeration) for every kernel.

use crate::construction::CodeSpec;
use crate::kernel::Kernel;
use crate::{Error, Result};

/// A posterior pair `(P(x=0 | observation), P(x=1 | observation))` for one
/// channel use.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Posterior {
    p0: f64,
    p1: f64,
}

impl Posterior {
    /// Validates and normalizes a posterior pair: entries non-negative,
    /// sum within `1e-12` of 1.
    pub fn new(p0: f64, p1: f64) -> Result<Posterior> {
        if !p0.is_finite() || !p1.is_finite() || p0 < 0.0 || p1 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "posterior entries must be non-negative, got ({p0}, {p1})"
            )));
        }
        let sum = p0 + p1;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "posterior ({p0}, {p1}) sums to {sum}, must be 1"
            )));
        }
        Ok(Posterior {
            p0: p0 / sum,
            p1: p1 / sum,
        })
    }

    /// The erasure mark: no information, `(0.5, 0.5)`.
    pub fn erasure() -> Posterior {
        Posterior { p0: 0.5, p1: 0.5 }
    }

    /// Certain evidence for the given bit.
    pub fn certain(bit: u8) -> Posterior {
        if bit == 0 {
            Posterior { p0: 1.0, p1: 0.0 }
        } else {
            Posterior { p0: 0.0, p1: 1.0 }
        }
    }

    /// `P(x = 0)`.
    pub fn p0(&self) -> f64 {
        self.p0
    }

    /// `P(x = 1)`.
    pub fn p1(&self) -> f64 {
        self.p1
    }

    /// Probability of the given bit value.
    pub fn prob(&self, bit: u8) -> f64 {
        if bit == 0 {
            self.p0
        } else {
            self.p1
        }
    }

    /// Maximum-posterior hard decision; an exact tie resolves to 0.
    pub fn decide(&self) -> u8 {
        (self.p1 > self.p0) as u8
    }

    /// Whether the pair carries no preference (exact tie).
    pub fn is_tie(&self) -> bool {
        self.p0 == self.p1
    }
}

/// Channel evidence for a whole codeword: one posterior per channel use.
pub type Evidence = Vec<Posterior>;

/// Applies `u -> u * (T_{l_1} x ... x T_{l_m})` by staged kernel
/// application in `O(N * sum l_j)` bit operations.
pub fn transform(kernels: &[Kernel], u: &[u8]) -> Result<Vec<u8>> {
    let n: usize = kernels.iter().map(|k| k.size()).product();
    if kernels.is_empty() || u.len() != n {
        return Err(Error::Dimension(format!(
            "input length {} does not match blocklength {n}",
            u.len()
        )));
    }
    if let Some(bad) = u.iter().find(|&&b| b > 1) {
        return Err(Error::InvalidParameter(format!(
            "input entries must be bits, got {bad}"
        )));
    }
    let mut x = u.to_vec();
    // Axis j of the index tensor has stride prod_{k>j} l_k; each fiber
    // along that axis is a row vector multiplied by T_{l_j}.
    let mut stride = n;
    for kernel in kernels {
        let l = kernel.size();
        let t = kernel.matrix();
        stride /= l;
        let block = stride * l;
        let mut fiber = vec![0u8; l];
        for base in (0..n).step_by(block) {
            for off in 0..stride {
                for (r, f) in fiber.iter_mut().enumerate() {
                    *f = x[base + r * stride + off];
                }
                for c in 0..l {
                    let mut bit = 0u8;
                    for (r, &f) in fiber.iter().enumerate() {
                        bit ^= f & t.get(r, c) as u8;
                    }
                    x[base + c * stride + off] = bit;
                }
            }
        }
    }
    Ok(x)
}

/// Encodes a `K`-bit message under a code specification: frozen positions
/// carry zeros, message bits fill the information indices in ascending
/// order, and the assembled `u` is pushed through the kernel stages.
pub fn encode(spec: &CodeSpec, message: &[u8]) -> Result<Vec<u8>> {
    if message.len() != spec.k {
        return Err(Error::Dimension(format!(
            "message length {} does not match K = {}",
            message.len(),
            spec.k
        )));
    }
    let mut u = vec![0u8; spec.n];
    for (&index, &bit) in spec.information_set.iter().zip(message) {
        if bit > 1 {
            return Err(Error::InvalidParameter(format!(
                "message entries must be bits, got {bit}"
            )));
        }
        u[index - 1] = bit;
    }
    transform(&spec.kernel_objects()?, &u)
}

/// The posterior for one kernel input, with a degeneracy flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Marginal {
    /// Normalized posterior for the queried input bit.
    pub posterior: Posterior,
    /// True when every completion had zero likelihood (contradictory
    /// evidence, e.g. after a wrong earlier hard decision); the posterior
    /// is then the uniform pair.
    pub degenerate: bool,
}

/// Exact single-kernel marginal: the posterior of input `b` (1-based) given
/// per-output evidence and the decided inputs `u_1..u_{b-1}`, marginalizing
/// the `2^{l-b}` undecided inputs uniformly.
pub fn kernel_marginal(
    kernel: &Kernel,
    evidence: &[Posterior],
    past: &[u8],
    b: usize,
) -> Result<Marginal> {
    let l = kernel.size();
    if evidence.len() != l {
        return Err(Error::Dimension(format!(
            "{} evidence entries for a size-{l} kernel",
            evidence.len()
        )));
    }
    if b < 1 || b > l {
        return Err(Error::InvalidParameter(format!(
            "position {b} outside [1, {l}]"
        )));
    }
    if past.len() != b - 1 {
        return Err(Error::Dimension(format!(
            "{} past decisions for position {b} (need {})",
            past.len(),
            b - 1
        )));
    }
    let codewords = kernel_codewords(kernel);
    Ok(marginal_from_codewords(
        l,
        &codewords,
        evidence,
        past,
        b - 1,
    ))
}

/// Codewords `x(u) = u * T` for all `2^l` inputs, with `u_1` packed as the
/// most significant bit of the row index.
fn kernel_codewords(kernel: &Kernel) -> Vec<Vec<u8>> {
    let l = kernel.size();
    (0..1usize << l)
        .map(|u| {
            let bits: Vec<u8> = (0..l).map(|k| (u >> (l - 1 - k)) as u8 & 1).collect();
            kernel.matrix().mul_vec(&bits).expect("kernel is square")
        })
        .collect()
}

/// Core marginalization over the codeword table; `a = b - 1` is 0-based.
fn marginal_from_codewords(
    l: usize,
    codewords: &[Vec<u8>],
    evidence: &[Posterior],
    past: &[u8],
    a: usize,
) -> Marginal {
    let mut score = [0.0f64; 2];
    let free = l - a - 1;
    let past_bits: usize = past
        .iter()
        .fold(0, |acc, &bit| acc << 1 | bit as usize);
    for decided in 0..2usize {
        let prefix = (past_bits << 1 | decided) << free;
        for future in 0..1usize << free {
            let x = &codewords[prefix | future];
            let mut weight = 1.0f64;
            for (ev, &xj) in evidence.iter().zip(x) {
                weight *= ev.prob(xj);
                if weight == 0.0 {
                    break;
                }
            }
            score[decided] += weight;
        }
    }
    let total = score[0] + score[1];
    if total == 0.0 {
        return Marginal {
            posterior: Posterior::erasure(),
            degenerate: true,
        };
    }
    Marginal {
        posterior: Posterior {
            p0: score[0] / total,
            p1: score[1] / total,
        },
        degenerate: false,
    }
}

/// Result of decoding one received word.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodeOutcome {
    /// The decoded message: the information-position decisions, ascending.
    pub message: Vec<u8>,
    /// All `N` input decisions (frozen positions forced to 0).
    pub u_estimate: Vec<u8>,
    /// The decision-time posterior of every input, given the evidence and
    /// the prior hard decisions (frozen posteriors are reported, not
    /// forced).
    pub posteriors: Vec<Posterior>,
    /// Per input: whether its posterior was an exact tie at decision time
    /// (erased or contradictory evidence; the decision fell back to the
    /// tie rule).
    pub tie: Vec<bool>,
    /// Whether any information position was decided on a tie — the frame
    /// carries unsupported decisions even if they happen to be correct.
    pub information_tie: bool,
}

enum Decisions<'a> {
    /// Hard max-posterior decisions with frozen forcing.
    Successive { frozen: &'a [bool] },
    /// Teacher forcing: every position decided as the given true input,
    /// so recorded posteriors are conditioned on the correct past.
    Forced { u: &'a [u8] },
}

struct Decoder<'a> {
    policy: Decisions<'a>,
    next_leaf: usize,
    posteriors: Vec<Posterior>,
    tie: Vec<bool>,
    decisions: Vec<u8>,
}

impl Decoder<'_> {
    /// Decodes the block covered by `kernels` from `evidence`, returning
    /// the re-encoded codeword estimate of the block.
    fn run(&mut self, kernels: &[Kernel], evidence: &[Posterior]) -> Vec<u8> {
        let Some((kernel, rest)) = kernels.split_first() else {
            let post = evidence[0];
            let leaf = self.next_leaf;
            self.next_leaf += 1;
            let decision = match &self.policy {
                Decisions::Successive { frozen } => {
                    if frozen[leaf] {
                        0
                    } else {
                        post.decide()
                    }
                }
                Decisions::Forced { u } => u[leaf],
            };
            self.posteriors.push(post);
            self.tie.push(post.is_tie());
            self.decisions.push(decision);
            return vec![decision];
        };
        let l = kernel.size();
        let n_sub = evidence.len() / l;
        let codewords = kernel_codewords(kernel);
        let mut block_estimates: Vec<Vec<u8>> = Vec::with_capacity(l);
        let mut sub_evidence = vec![Posterior::erasure(); n_sub];
        let mut fiber = vec![Posterior::erasure(); l];
        let mut past = vec![0u8; l];
        for a in 0..l {
            for c in 0..n_sub {
                for (b, f) in fiber.iter_mut().enumerate() {
                    *f = evidence[b * n_sub + c];
                }
                for (a_prev, p) in past[..a].iter_mut().enumerate() {
                    *p = block_estimates[a_prev][c];
                }
                sub_evidence[c] =
                    marginal_from_codewords(l, &codewords, &fiber, &past[..a], a).posterior;
            }
            block_estimates.push(self.run(rest, &sub_evidence));
        }
        // Re-encode: x[b*n_sub + c] = sum_a T[a][b] * w_a[c].
        let t = kernel.matrix();
        let mut x = vec![0u8; evidence.len()];
        for b in 0..l {
            for (a, block) in block_estimates.iter().enumerate() {
                if t.get(a, b) {
                    for (c, w) in block.iter().enumerate() {
                        x[b * n_sub + c] ^= w;
                    }
                }
            }
        }
        x
    }
}

fn prepare(spec: &CodeSpec, evidence: &[Posterior]) -> Result<Vec<Kernel>> {
    if evidence.len() != spec.n {
        return Err(Error::Dimension(format!(
            "{} evidence entries for blocklength {}",
            evidence.len(),
            spec.n
        )));
    }
    spec.validate()?;
    spec.kernel_objects()
}

/// Successive cancellation decoding of one received word.
pub fn sc_decode(spec: &CodeSpec, evidence: &[Posterior]) -> Result<DecodeOutcome> {
    let kernels = prepare(spec, evidence)?;
    let mut frozen = vec![true; spec.n];
    for &i in &spec.information_set {
        frozen[i - 1] = false;
    }
    let mut decoder = Decoder {
        policy: Decisions::Successive { frozen: &frozen },
        next_leaf: 0,
        posteriors: Vec::with_capacity(spec.n),
        tie: Vec::with_capacity(spec.n),
        decisions: Vec::with_capacity(spec.n),
    };
    decoder.run(&kernels, evidence);
    let u_estimate = decoder.decisions;
    let message: Vec<u8> = spec
        .information_set
        .iter()
        .map(|&i| u_estimate[i - 1])
        .collect();
    let information_tie = spec
        .information_set
        .iter()
        .any(|&i| decoder.tie[i - 1]);
    Ok(DecodeOutcome {
        message,
        u_estimate,
        posteriors: decoder.posteriors,
        tie: decoder.tie,
        information_tie,
    })
}

/// Teacher-forced pass: returns the decoder's posterior for every input
/// conditioned on the *correct* previous inputs `u`, regardless of what
/// the hard decisions would have been. This is the quantity comparable to
/// brute-force enumeration marginals.
pub fn sc_posteriors_forced(
    spec: &CodeSpec,
    evidence: &[Posterior],
    u: &[u8],
) -> Result<Vec<Posterior>> {
    let kernels = prepare(spec, evidence)?;
    if u.len() != spec.n {
        return Err(Error::Dimension(format!(
            "{} forced inputs for blocklength {}",
            u.len(),
            spec.n
        )));
    }
    let mut decoder = Decoder {
        policy: Decisions::Forced { u },
        next_leaf: 0,
        posteriors: Vec::with_capacity(spec.n),
        tie: Vec::with_capacity(spec.n),
        decisions: Vec::with_capacity(spec.n),
    };
    decoder.run(&kernels, evidence);
    Ok(decoder.posteriors)
}
