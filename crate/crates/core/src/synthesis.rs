//! Virtual-channel synthesis: exact erasure evolution, general one-step
//! synthesis, and Bhattacharyya bound propagation.
//!
//! Applying a kernel `T_l` to `l` independent uses of a channel `W` and
//! decoding successively synthesizes `l` virtual channels, one per input
//! position. This module computes their figures of merit three ways:
//!
//! * **Exact erasure evolution** ([`bec_step`], [`bec_tree`]): erasure
//!   channels stay erasure channels under any linear kernel, so every node
//!   of the construction tree is described by one erasure probability. The
//!   per-branch polynomials are derived from a linear-algebra rank test over
//!   all `2^l` erasure patterns, not hand-derived formulas, so arbitrary
//!   kernels are supported uniformly.
//! * **General one-step synthesis** ([`synthesize_step`]): the full
//!   transition table of each virtual channel, with the output-alphabet
//!   growth guarded rather than approximated. Used for non-erasure channels
//!   at single-step scale and as the brute-force oracle for the erasure
//!   recursion.
//! * **Bhattacharyya bound propagation** ([`z_bounds_step`],
//!   [`bounds_tree`]): the partial-distance interval
//!   `Z^{D_b} <= Z_child <= 2^{l-b} Z^{D_b}`, which brackets the exact
//!   value for every channel and is the conservative design figure when the
//!   design channel is not an erasure channel.
//!
//! Values are tracked in linear and log2 domain side by side ([`ZValue`]);
//! deep constructions drive `Z` far below what an `f64` can represent
//! linearly, and threshold probes like `2^{-N^0.9}` only make sense in the
//! log domain.

use rayon::prelude::*;

use crate::channel::DiscreteChannel;
use crate::gf2::BitMatrix;
use crate::kernel::Kernel;
use crate::util::neumaier_sum;
use crate::{Error, Result};

/// Largest kernel size for erasure-pattern enumeration (`2^l` patterns).
pub const MAX_PATTERN_KERNEL_SIZE: usize = 16;

/// Guard on reliability-tree width: at most `2^22` leaves.
pub const MAX_TREE_LEAVES: u128 = 1 << 22;

/// Guard on one-step synthesis: the largest child table has
/// `2^{l-1} * Q^l` rows; kernels and alphabets with `2^l * Q^l` beyond this
/// are rejected.
pub const MAX_SYNTHESIS_TABLE: u128 = 1 << 24;

/// Below this log2 value the linear field of a [`ZValue`] underflows or
/// loses precision; consumers that care about tiny values must read
/// [`ZValue::log2`].
pub const LOG_DOMAIN_THRESHOLD: f64 = -40.0;

/// An erasure probability / Bhattacharyya parameter tracked in linear and
/// log2 domain simultaneously.
///
/// Both fields are propagated independently through every recursion: the
/// linear value by all-positive polynomial evaluation (accurate until it
/// underflows), the log2 value by log-sum arithmetic (accurate everywhere,
/// indispensable below [`LOG_DOMAIN_THRESHOLD`]). `Z = 0` is represented
/// with `log2 = -inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZValue {
    lin: f64,
    log2: f64,
}

impl ZValue {
    /// Wraps a linear-domain value from `[0, 1]`.
    pub fn from_lin(z: f64) -> ZValue {
        assert!(
            (0.0..=1.0).contains(&z),
            "Z value must lie in [0, 1], got {z}"
        );
        ZValue { lin: z, log2: z.log2() }
    }

    /// The linear-domain value (exactly 0 once underflowed; see
    /// [`ZValue::log2`]).
    pub fn lin(&self) -> f64 {
        self.lin
    }

    /// The log2-domain value (`-inf` for exact zero).
    pub fn log2(&self) -> f64 {
        self.log2
    }
}

/// Per-branch erasure-pattern census for one kernel.
///
/// `counts()[i][w]` is the number of erasure patterns of weight `w` (out of
/// the `2^l` subsets of output positions) under which input `i` is *not*
/// recoverable from the unerased outputs, given inputs `0..i`. The erasure
/// probability of virtual channel `i` on a BEC(`eps`) is then the polynomial
///
/// ```text
/// z_i(eps) = sum_w counts[i][w] * eps^w * (1-eps)^(l-w),
/// ```
///
/// whose all-positive terms evaluate without cancellation for any `eps`.
#[derive(Clone, Debug, PartialEq)]
pub struct ErasurePatterns {
    size: usize,
    counts: Vec<Vec<u64>>,
}

impl ErasurePatterns {
    /// Enumerates the erasure patterns of a kernel.
    pub fn for_kernel(kernel: &Kernel) -> Result<ErasurePatterns> {
        ErasurePatterns::for_matrix(kernel.matrix())
    }

    /// Enumerates the erasure patterns of any square matrix (invertibility
    /// is not required; non-polarizing matrices just yield flat counts).
    ///
    /// Input `i` is recoverable under a pattern iff the unit functional
    /// `e_1` (selecting `u_i` among the still-unknown inputs `u_i..u_l`)
    /// lies in the span of the unerased columns restricted to rows
    /// `i..l` — the known inputs `u_1..u_{i-1}` are eliminated from the
    /// observations, so only the restricted rows matter.
    pub fn for_matrix(m: &BitMatrix) -> Result<ErasurePatterns> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let l = m.rows();
        if l > MAX_PATTERN_KERNEL_SIZE {
            return Err(Error::GuardExceeded {
                what: "erasure pattern enumeration",
                needed: 1u128 << l,
                limit: 1u128 << MAX_PATTERN_KERNEL_SIZE,
            });
        }
        let mut counts = vec![vec![0u64; l + 1]; l];
        // Restricted column masks: bit r of restricted[i][j] is entry
        // (i + r, j) of the matrix, i.e. column j seen by the solver for
        // input i.
        for pattern in 0u32..1 << l {
            let weight = pattern.count_ones() as usize;
            for i in 0..l {
                let mut basis = [0u32; MAX_PATTERN_KERNEL_SIZE];
                for j in 0..l {
                    if pattern >> j & 1 == 1 {
                        continue; // output j erased
                    }
                    let mut col = 0u32;
                    for r in i..l {
                        col |= (m.get(r, j) as u32) << (r - i);
                    }
                    while col != 0 {
                        let lead = 31 - col.leading_zeros() as usize;
                        if basis[lead] == 0 {
                            basis[lead] = col;
                            break;
                        }
                        col ^= basis[lead];
                    }
                }
                // e_1 on the restricted coordinates is the bit-0 unit mask.
                let mut target = 1u32;
                while target != 0 {
                    let lead = 31 - target.leading_zeros() as usize;
                    if basis[lead] == 0 {
                        break;
                    }
                    target ^= basis[lead];
                }
                if target != 0 {
                    counts[i][weight] += 1;
                }
            }
        }
        Ok(ErasurePatterns { size: l, counts })
    }

    /// Kernel size `l`.
    pub fn size(&self) -> usize {
        self.size
    }

    /// `counts()[i][w]`: erasure patterns of weight `w` that erase input `i`.
    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    /// One exact evolution step in both domains: child `i` of a parent with
    /// erasure probability `z`.
    pub fn step(&self, z: ZValue) -> Vec<ZValue> {
        let l = self.size;
        // Linear domain: all-positive polynomial, no cancellation.
        let eps = z.lin;
        let one_minus = 1.0 - eps;
        // Log domain: log2(1-eps) without cancellation for tiny eps. Once
        // eps has underflowed linearly, 1-eps == 1 to full f64 precision.
        let log2_one_minus = (-eps).ln_1p() / std::f64::consts::LN_2;
        self.counts
            .iter()
            .map(|c| {
                let lin = neumaier_sum(c.iter().enumerate().map(|(w, &cw)| {
                    cw as f64 * eps.powi(w as i32) * one_minus.powi((l - w) as i32)
                }))
                .clamp(0.0, 1.0);
                // A zero count of factors must contribute exactly 0 even
                // when the factor's log is -inf (0 * -inf is NaN).
                let weighted = |n: usize, log: f64| if n == 0 { 0.0 } else { n as f64 * log };
                let terms: Vec<f64> = c
                    .iter()
                    .enumerate()
                    .filter(|(_, &cw)| cw > 0)
                    .map(|(w, &cw)| {
                        (cw as f64).log2()
                            + weighted(w, z.log2)
                            + weighted(l - w, log2_one_minus)
                    })
                    .collect();
                let log2 = log_sum_exp2(&terms).min(0.0);
                ZValue { lin, log2 }
            })
            .collect()
    }
}

/// `log2(sum_i 2^{t_i})`, stable against large negative terms. Returns
/// `-inf` for an empty list or all `-inf` terms.
fn log_sum_exp2(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + neumaier_sum(terms.iter().map(|t| (t - m).exp2())).log2()
}

/// Exact one-step erasure evolution: the erasure probabilities of the `l`
/// virtual channels synthesized by `kernel` from a BEC(`eps`).
///
/// Entry `i` is the probability that input `i` is not determined by the
/// unerased outputs given inputs `0..i`.
pub fn bec_step(eps: f64, kernel: &Kernel) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidChannel(format!(
            "erasure probability must lie in [0, 1], got {eps}"
        )));
    }
    let patterns = ErasurePatterns::for_kernel(kernel)?;
    Ok(patterns
        .step(ZValue::from_lin(eps))
        .into_iter()
        .map(|z| z.lin())
        .collect())
}

/// How the nodes of a [`ReliabilityTree`] were computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReliabilityMode {
    /// Exact erasure probabilities; `lower == upper` at every node.
    ExactErasure,
    /// Partial-distance Bhattacharyya intervals; `upper` is the
    /// conservative design figure.
    BhattacharyyaBound,
}

impl ReliabilityMode {
    /// Stable identifier used in serialized code specifications.
    pub fn as_str(&self) -> &'static str {
        match self {
            ReliabilityMode::ExactErasure => "exact_erasure",
            ReliabilityMode::BhattacharyyaBound => "bhattacharyya_upper_bound",
        }
    }
}

/// One node of the construction tree: an interval on the node's `Z`.
///
/// In exact mode both ends coincide; in bound mode they bracket the true
/// value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeNode {
    /// Lower end of the `Z` interval.
    pub lower: ZValue,
    /// Upper end of the `Z` interval (the design figure).
    pub upper: ZValue,
}

/// The full polarization tree of a kernel sequence.
///
/// `stages()[0]` is the root (the design channel), `stages()[m]` holds the
/// `l_1 * ... * l_m` channels after applying the first `m` kernels, in
/// natural index order: the path digits `(b_1, ..., b_m)` map to position
/// `sum_j (b_j - 1) * prod_{k>j} l_k`, with `b_1` (the first kernel's
/// branch) most significant.
#[derive(Clone, Debug)]
pub struct ReliabilityTree {
    kernels: Vec<Kernel>,
    mode: ReliabilityMode,
    stages: Vec<Vec<TreeNode>>,
}

impl ReliabilityTree {
    /// The kernel sequence this tree was built from.
    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    /// Kernel sizes `(l_1, ..., l_m)`.
    pub fn bases(&self) -> Vec<usize> {
        self.kernels.iter().map(|k| k.size()).collect()
    }

    /// How the node values were computed.
    pub fn mode(&self) -> ReliabilityMode {
        self.mode
    }

    /// All stages, root first; `stages()[m]` has `prod_{k<=m} l_k` nodes.
    pub fn stages(&self) -> &[Vec<TreeNode>] {
        &self.stages
    }

    /// The final stage.
    pub fn leaves(&self) -> &[TreeNode] {
        self.stages.last().expect("tree has at least the root stage")
    }

    /// Number of leaves, `N = prod l_k`.
    pub fn leaf_count(&self) -> usize {
        self.leaves().len()
    }

    /// Per-leaf design figures in natural order: the exact erasure
    /// probability in exact mode, the conservative `Z` upper bound in bound
    /// mode.
    pub fn reliability_figures(&self) -> Vec<f64> {
        self.leaves().iter().map(|n| n.upper.lin()).collect()
    }

    /// The mixed-radix path digits (1-based) of leaf `index` (0-based).
    pub fn leaf_path(&self, index: usize) -> Vec<usize> {
        let bases = self.bases();
        let mut digits = vec![0; bases.len()];
        let mut rest = index;
        for (j, &l) in bases.iter().enumerate().rev() {
            digits[j] = rest % l + 1;
            rest /= l;
        }
        digits
    }

    /// Leaf table as CSV with header
    /// `index,path,erasure_prob,mutual_info,log2_z`.
    ///
    /// `index` is 1-based, `path` joins the 1-based digits `b_1..b_m` with
    /// dots. In bound mode the three value columns report the upper bound
    /// (`erasure_prob` is then a bound on `Z`, not an erasure probability).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,path,erasure_prob,mutual_info,log2_z\n");
        for (i, node) in self.leaves().iter().enumerate() {
            let path: Vec<String> = self.leaf_path(i).iter().map(|b| b.to_string()).collect();
            let z = node.upper;
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                i + 1,
                path.join("."),
                z.lin(),
                1.0 - z.lin(),
                z.log2()
            ));
        }
        out
    }
}

fn check_tree_width(kernels: &[Kernel]) -> Result<()> {
    if kernels.is_empty() {
        return Err(Error::InvalidParameter(
            "a reliability tree needs at least one kernel".into(),
        ));
    }
    let mut leaves: u128 = 1;
    for k in kernels {
        leaves *= k.size() as u128;
        if leaves > MAX_TREE_LEAVES {
            return Err(Error::GuardExceeded {
                what: "reliability tree leaves",
                needed: leaves,
                limit: MAX_TREE_LEAVES,
            });
        }
    }
    Ok(())
}

/// Threshold above which a stage is expanded in parallel. Children are
/// computed per parent independently, so the schedule cannot affect values.
const PARALLEL_STAGE_NODES: usize = 1 << 13;

fn grow_stages<F>(kernels: &[Kernel], root: TreeNode, expand: F) -> Result<Vec<Vec<TreeNode>>>
where
    F: Fn(&TreeNode, &Kernel, &ErasurePatterns) -> Vec<TreeNode> + Sync,
{
    let mut stages = vec![vec![root]];
    for kernel in kernels {
        let patterns = ErasurePatterns::for_kernel(kernel)?;
        let parents = stages.last().expect("stages start non-empty");
        let next = if parents.len() >= PARALLEL_STAGE_NODES {
            parents
                .par_iter()
                .flat_map_iter(|p| expand(p, kernel, &patterns))
                .collect()
        } else {
            parents
                .iter()
                .flat_map(|p| expand(p, kernel, &patterns))
                .collect()
        };
        stages.push(next);
    }
    Ok(stages)
}

/// Builds the exact erasure-evolution tree for a BEC(`eps`) root.
pub fn bec_tree(eps: f64, kernels: &[Kernel]) -> Result<ReliabilityTree> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidChannel(format!(
            "erasure probability must lie in [0, 1], got {eps}"
        )));
    }
    check_tree_width(kernels)?;
    let root_z = ZValue::from_lin(eps);
    let root = TreeNode {
        lower: root_z,
        upper: root_z,
    };
    let stages = grow_stages(kernels, root, |p, _, patterns| {
        patterns
            .step(p.upper)
            .into_iter()
            .map(|z| TreeNode { lower: z, upper: z })
            .collect()
    })?;
    Ok(ReliabilityTree {
        kernels: kernels.to_vec(),
        mode: ReliabilityMode::ExactErasure,
        stages,
    })
}

/// One bound-propagation step in both domains: branch `b` (1-based) of a
/// parent with Bhattacharyya value `z` is bracketed by
/// `[z^{D_b}, min(1, 2^{l-b} * z^{D_b})]`.
fn bound_step_z(z: ZValue, kernel: &Kernel) -> Vec<(ZValue, ZValue)> {
    let l = kernel.size();
    kernel
        .partial_distances()
        .iter()
        .enumerate()
        .map(|(b0, &d)| {
            let di = d as i32;
            let lower = ZValue {
                lin: z.lin.powi(di),
                log2: d as f64 * z.log2,
            };
            let factor = (l - b0 - 1) as f64;
            let upper = ZValue {
                lin: (factor.exp2() * z.lin.powi(di)).min(1.0),
                log2: (factor + d as f64 * z.log2).min(0.0),
            };
            (lower, upper)
        })
        .collect()
}

/// The partial-distance interval for each branch: entry `b` (0-based) is
/// `(z^{D_b}, min(1, 2^{l-b-1} * z^{D_b}))` in linear domain.
pub fn z_bounds_step(z: f64, kernel: &Kernel) -> Result<Vec<(f64, f64)>> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::InvalidParameter(format!(
            "Bhattacharyya value must lie in [0, 1], got {z}"
        )));
    }
    Ok(bound_step_z(ZValue::from_lin(z), kernel)
        .into_iter()
        .map(|(lo, hi)| (lo.lin(), hi.lin()))
        .collect())
}

/// Builds the Bhattacharyya-interval tree from a root value `z0`: lower
/// ends propagate through lower bounds, upper ends through upper bounds, so
/// every node's interval contains the true `Z` of the corresponding virtual
/// channel.
pub fn bounds_tree(z0: f64, kernels: &[Kernel]) -> Result<ReliabilityTree> {
    if !(0.0..=1.0).contains(&z0) {
        return Err(Error::InvalidParameter(format!(
            "Bhattacharyya value must lie in [0, 1], got {z0}"
        )));
    }
    check_tree_width(kernels)?;
    let root_z = ZValue::from_lin(z0);
    let root = TreeNode {
        lower: root_z,
        upper: root_z,
    };
    let stages = grow_stages(kernels, root, |p, kernel, _| {
        let lowers = bound_step_z(p.lower, kernel);
        let uppers = bound_step_z(p.upper, kernel);
        lowers
            .into_iter()
            .zip(uppers)
            .map(|((lo, _), (_, hi))| TreeNode { lower: lo, upper: hi })
            .collect()
    })?;
    Ok(ReliabilityTree {
        kernels: kernels.to_vec(),
        mode: ReliabilityMode::BhattacharyyaBound,
        stages,
    })
}

/// Exact one-step synthesis of all `l` virtual channels of `kernel` over
/// `w`, as explicit transition tables.
///
/// Child `i` (0-based) has output alphabet `(u_0..u_{i-1}, y_1..y_l)` of
/// size `2^i * Q^l`; its table row for `(p, y)` is at index `p * Q^l + y`
/// with `y` in little-endian base-`Q` digits (`y_1` least significant).
/// The alphabet growth is guarded by [`MAX_SYNTHESIS_TABLE`], not
/// approximated.
pub fn synthesize_step(w: &DiscreteChannel, kernel: &Kernel) -> Result<Vec<DiscreteChannel>> {
    let l = kernel.size();
    let q = w.output_count();
    let table = (q as u128).pow(l as u32).saturating_mul(1 << l);
    if table > MAX_SYNTHESIS_TABLE {
        return Err(Error::GuardExceeded {
            what: "synthesis output alphabet",
            needed: table,
            limit: MAX_SYNTHESIS_TABLE,
        });
    }
    let q_pow_l = q.pow(l as u32);
    let pmf = w.pmf();
    // x-vectors for every input vector u, with u_1 packed as the most
    // significant bit so integer order matches natural index order.
    let codewords: Vec<Vec<u8>> = (0..1usize << l)
        .map(|u| {
            let bits: Vec<u8> = (0..l).map(|k| (u >> (l - 1 - k)) as u8 & 1).collect();
            kernel.matrix().mul_vec(&bits).expect("kernel is square")
        })
        .collect();
    let scale = 0.5f64.powi(l as i32 - 1);
    let mut children = Vec::with_capacity(l);
    for c in 0..l {
        let mut tab = vec![[0.0f64; 2]; (1 << c) * q_pow_l];
        for (u, x) in codewords.iter().enumerate() {
            let past = u >> (l - c);
            let decided = u >> (l - c - 1) & 1;
            let base = past * q_pow_l;
            for y in 0..q_pow_l {
                let mut rest = y;
                let mut prob = scale;
                for xj in x {
                    prob *= pmf[rest % q][*xj as usize];
                    rest /= q;
                }
                tab[base + y][decided] += prob;
            }
        }
        children.push(DiscreteChannel::new(tab)?);
    }
    Ok(children)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ErasureChannel;
    use proptest::prelude::*;

    fn t2() -> Kernel {
        Kernel::t2()
    }

    fn t3() -> Kernel {
        Kernel::t3()
    }

    #[test]
    fn pattern_counts_for_builtin_kernels() {
        let p2 = ErasurePatterns::for_kernel(&t2()).unwrap();
        assert_eq!(p2.counts(), &[vec![0, 2, 1], vec![0, 0, 1]]);
        let p3 = ErasurePatterns::for_kernel(&t3()).unwrap();
        assert_eq!(
            p3.counts(),
            &[vec![0, 3, 3, 1], vec![0, 0, 2, 1], vec![0, 0, 1, 1]]
        );
    }

    #[test]
    fn identity_kernel_does_not_polarize() {
        // Input i of the identity is erased exactly when output i is:
        // counts are binomial in the other l-1 positions and z_i(eps) = eps.
        let patterns = ErasurePatterns::for_matrix(&BitMatrix::identity(3)).unwrap();
        assert_eq!(
            patterns.counts(),
            &[vec![0, 1, 2, 1], vec![0, 1, 2, 1], vec![0, 1, 2, 1]]
        );
        for z in patterns.step(ZValue::from_lin(0.3)) {
            assert!((z.lin() - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn pattern_guard() {
        assert!(matches!(
            ErasurePatterns::for_matrix(&BitMatrix::identity(17)),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn bec_step_known_values() {
        let half = bec_step(0.5, &t2()).unwrap();
        assert_eq!(half, vec![0.75, 0.25]);
        let third = bec_step(0.5, &t3()).unwrap();
        assert_eq!(third, vec![0.875, 0.375, 0.25]);
        assert_eq!(bec_step(0.0, &t3()).unwrap(), vec![0.0, 0.0, 0.0]);
        assert_eq!(bec_step(1.0, &t3()).unwrap(), vec![1.0, 1.0, 1.0]);
        assert!(bec_step(1.5, &t2()).is_err());
    }

    #[test]
    fn bec_step_is_monotone_and_conservative() {
        for kernel in [t2(), t3()] {
            let l = kernel.size() as f64;
            let mut prev = vec![0.0; kernel.size()];
            for step_idx in 0..=100 {
                let eps = step_idx as f64 / 100.0;
                let out = bec_step(eps, &kernel).unwrap();
                for (a, b) in prev.iter().zip(&out) {
                    assert!(b + 1e-15 >= *a, "non-monotone at eps={eps}");
                }
                let mean: f64 = out.iter().sum::<f64>() / l;
                assert!(
                    (mean - eps).abs() < 1e-12,
                    "conservation violated at eps={eps}: mean {mean}"
                );
                prev = out;
            }
        }
    }

    #[test]
    fn linear_and_log_domains_agree_when_representable() {
        let tree = bec_tree(0.5, &vec![t2(); 9]).unwrap();
        for node in tree.leaves() {
            let z = node.upper;
            assert!(
                (z.lin().log2() - z.log2()).abs() < 1e-9,
                "lin {} vs log2 {}",
                z.lin(),
                z.log2()
            );
        }
    }

    #[test]
    fn log_domain_survives_underflow() {
        // 22 squarings of the best branch take Z to 2^(-2^22), far below
        // linear range; the log2 field must track it exactly.
        let patterns = ErasurePatterns::for_kernel(&t2()).unwrap();
        let mut best = ZValue::from_lin(0.5);
        let mut worst = ZValue::from_lin(0.5);
        for _ in 0..22 {
            best = patterns.step(best)[1];
            worst = patterns.step(worst)[0];
        }
        assert_eq!(best.lin(), 0.0);
        assert_eq!(best.log2(), -4194304.0);
        // The worst branch saturates to 1 linearly, but its log2 field must
        // stay strictly negative (Z < 1 holds exactly at every depth) and
        // must not become NaN when log2(1 - eps) collapses to -inf.
        assert_eq!(worst.lin(), 1.0);
        assert!(worst.log2() < 0.0);
        assert!(worst.log2().is_finite());
    }

    #[test]
    fn tree_stages_and_known_leaves() {
        let tree = bec_tree(0.5, &[t2(), t2()]).unwrap();
        assert_eq!(tree.stages().len(), 3);
        assert_eq!(tree.reliability_figures(), vec![0.9375, 0.5625, 0.4375, 0.0625]);
        let single = bec_tree(0.5, &[t2()]).unwrap();
        assert_eq!(single.reliability_figures(), vec![0.75, 0.25]);
        let mixed = bec_tree(0.5, &[t2(), t3()]).unwrap();
        assert_eq!(
            mixed.reliability_figures(),
            vec![0.984375, 0.703125, 0.5625, 0.578125, 0.109375, 0.0625]
        );
    }

    #[test]
    fn tree_width_guard() {
        let kernels = vec![t2(); 23];
        assert!(matches!(
            bec_tree(0.5, &kernels),
            Err(Error::GuardExceeded { .. })
        ));
        assert!(bec_tree(0.5, &[]).is_err());
    }

    #[test]
    fn leaf_paths_follow_mixed_radix_order() {
        let tree = bec_tree(0.5, &[t2(), t3()]).unwrap();
        assert_eq!(tree.leaf_path(0), vec![1, 1]);
        assert_eq!(tree.leaf_path(2), vec![1, 3]);
        assert_eq!(tree.leaf_path(3), vec![2, 1]);
        assert_eq!(tree.leaf_path(5), vec![2, 3]);
    }

    #[test]
    fn csv_export_schema() {
        let tree = bec_tree(0.5, &[t2()]).unwrap();
        let csv = tree.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "index,path,erasure_prob,mutual_info,log2_z");
        assert_eq!(lines[1], format!("1,1,0.75,0.25,{}", 0.75f64.log2()));
        assert_eq!(lines[2], "2,2,0.25,0.75,-2");
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn z_bounds_step_known_values() {
        assert_eq!(
            z_bounds_step(0.5, &t2()).unwrap(),
            vec![(0.5, 1.0), (0.25, 0.25)]
        );
        assert_eq!(
            z_bounds_step(0.5, &t3()).unwrap(),
            vec![(0.5, 1.0), (0.25, 0.5), (0.25, 0.25)]
        );
        assert_eq!(
            z_bounds_step(0.0, &t3()).unwrap(),
            vec![(0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]
        );
    }

    #[test]
    fn exact_children_sit_inside_bounds() {
        for kernel in [t2(), t3()] {
            for step_idx in 0..=20 {
                let z = step_idx as f64 / 20.0;
                let exact = bec_step(z, &kernel).unwrap();
                let bounds = z_bounds_step(z, &kernel).unwrap();
                for (child, (lo, hi)) in exact.iter().zip(&bounds) {
                    assert!(
                        *child >= lo - 1e-12 && *child <= hi + 1e-12,
                        "z={z}: child {child} outside [{lo}, {hi}]"
                    );
                }
            }
        }
    }

    #[test]
    fn bounds_tree_brackets_exact_tree() {
        let kernels = [t2(), t3(), t2()];
        let exact = bec_tree(0.37, &kernels).unwrap();
        let bounds = bounds_tree(0.37, &kernels).unwrap();
        for (e, b) in exact.leaves().iter().zip(bounds.leaves()) {
            assert!(b.lower.lin() <= e.upper.lin() + 1e-12);
            assert!(b.upper.lin() >= e.upper.lin() - 1e-12);
        }
    }

    #[test]
    fn bsc_bound_tree_known_uppers() {
        let z0 = 2.0 * (0.11f64 * 0.89).sqrt();
        let tree = bounds_tree(z0, &[t2(), t2()]).unwrap();
        let uppers: Vec<f64> = tree.leaves().iter().map(|n| n.upper.lin()).collect();
        let expected = [1.0, 1.0, 0.7832000000000001, 0.15335056000000005];
        for (u, e) in uppers.iter().zip(&expected) {
            assert!((u - e).abs() < 1e-15, "{u} vs {e}");
        }
    }

    #[test]
    fn synthesize_step_t2_on_bec() {
        let w = ErasureChannel::new(0.5).unwrap().to_discrete();
        let children = synthesize_step(&w, &t2()).unwrap();
        assert_eq!(children.len(), 2);
        assert!((children[0].mutual_information() - 0.25).abs() < 1e-12);
        assert!((children[1].mutual_information() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn synthesize_step_t3_on_bec() {
        let w = ErasureChannel::new(0.5).unwrap().to_discrete();
        let children = synthesize_step(&w, &t3()).unwrap();
        let mi: Vec<f64> = children.iter().map(|c| c.mutual_information()).collect();
        let expected = [0.125, 0.625, 0.75];
        for (a, b) in mi.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12, "{mi:?}");
        }
        let sum: f64 = mi.iter().sum();
        assert!((sum - 1.5).abs() < 1e-12);
    }

    #[test]
    fn synthesis_guard() {
        // A 16x16 transform passes kernel construction but needs at least
        // 2^16 * 2^16 table cells in one-step synthesis: the guard trips.
        let w = crate::channel::random_channels(1, 6, 5).remove(0);
        let four = t2().matrix().kron(t2().matrix());
        let k = Kernel::from_matrix("k16", four.kron(&four)).unwrap();
        assert!(matches!(
            synthesize_step(&w, &k),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn conservation_on_random_channels() {
        for (i, w) in crate::channel::random_channels(6, 5, 99).iter().enumerate() {
            for kernel in [t2(), t3()] {
                let children = synthesize_step(w, &kernel).unwrap();
                let sum: f64 = children.iter().map(|c| c.mutual_information()).sum();
                let expect = kernel.size() as f64 * w.mutual_information();
                assert!(
                    (sum - expect).abs() < 1e-9,
                    "channel {i}, kernel {}: {sum} vs {expect}",
                    kernel.name()
                );
            }
        }
    }

    #[test]
    fn partial_distance_bounds_hold_on_random_channels() {
        for w in crate::channel::random_channels(6, 4, 7) {
            let z = w.bhattacharyya();
            for kernel in [t2(), t3()] {
                let children = synthesize_step(&w, &kernel).unwrap();
                let bounds = z_bounds_step(z, &kernel).unwrap();
                for (c, (lo, hi)) in children.iter().zip(&bounds) {
                    let zc = c.bhattacharyya();
                    assert!(
                        zc >= lo - 1e-12 && zc <= hi + 1e-12,
                        "child Z {zc} outside [{lo}, {hi}] at parent Z {z}"
                    );
                }
            }
        }
    }

    #[test]
    fn erasure_recursion_matches_general_synthesis() {
        // The rank-test recursion and the table-domain synthesis are
        // independent paths to the same virtual channels.
        for kernel in [t2(), t3()] {
            for step_idx in 1..10 {
                let eps = step_idx as f64 / 10.0;
                let table = ErasureChannel::new(eps).unwrap().to_discrete();
                let children = synthesize_step(&table, &kernel).unwrap();
                let exact = bec_step(eps, &kernel).unwrap();
                for (c, z) in children.iter().zip(&exact) {
                    assert!((c.mutual_information() - (1.0 - z)).abs() < 1e-9);
                    assert!((c.bhattacharyya() - z).abs() < 1e-9);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn tree_means_are_conserved(eps in 0.0f64..1.0) {
            let tree = bec_tree(eps, &[t2(), t3(), t2()]).unwrap();
            for stage in tree.stages() {
                let mean = neumaier_sum(stage.iter().map(|n| n.upper.lin()))
                    / stage.len() as f64;
                prop_assert!((mean - eps).abs() < 1e-12);
            }
        }

        #[test]
        fn bound_intervals_are_well_formed(z in 0.0f64..=1.0) {
            for kernel in [t2(), t3()] {
                for (lo, hi) in z_bounds_step(z, &kernel).unwrap() {
                    prop_assert!(lo >= 0.0 && hi <= 1.0 && lo <= hi + 1e-15);
                }
            }
        }
    }
}
