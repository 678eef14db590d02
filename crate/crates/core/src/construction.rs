//! Mixed-radix indexing, generator assembly, reliability ranking, and code
//! specifications.
//!
//! A multi-kernel code over kernels `(T_{l_1}, ..., T_{l_m})` has
//! blocklength `N = prod l_j` and generator `G_N = T_{l_1} x ... x T_{l_m}`
//! (Kronecker product, left to right). Channel indices correspond to
//! polarization-tree paths through the mixed-radix decomposition of the
//! index in bases `(l_1, ..., l_m)`, with `b_1` — the first kernel's branch
//! — most significant. The code itself is fixed by choosing the `K` most
//! reliable indices as the information set and freezing the rest to zero.
//!
//! [`CodeSpec`] is the serialized interface between construction and the
//! encoder/decoder/simulator: a JSON object with canonical key order, so
//! identical constructions are byte-identical on disk.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSpec;
use crate::gf2::BitMatrix;
use crate::kernel::Kernel;
use crate::synthesis::{bec_tree, bounds_tree, ReliabilityMode};
use crate::{Error, Result};

/// Dense generator guard: `N x N` bit matrices up to `N = 2^14`.
pub const MAX_DENSE_GENERATOR: u128 = 1 << 14;

/// Serialization schema version written into [`CodeSpec`] files.
pub const CODE_SPEC_FORMAT_VERSION: u32 = 1;

/// Mixed-radix decomposition of a 1-based index: returns 1-based digits
/// `(b_1, ..., b_m)` with `i - 1 = sum_j (b_j - 1) * prod_{k>j} l_k`
/// (`b_1` most significant).
pub fn mixed_radix(i: usize, bases: &[usize]) -> Result<Vec<usize>> {
    let n: usize = bases.iter().product();
    if bases.is_empty() || bases.iter().any(|&l| l == 0) {
        return Err(Error::InvalidParameter("bases must be non-empty and positive".into()));
    }
    if i < 1 || i > n {
        return Err(Error::InvalidParameter(format!(
            "index {i} outside [1, {n}]"
        )));
    }
    let mut digits = vec![0; bases.len()];
    let mut rest = i - 1;
    for (j, &l) in bases.iter().enumerate().rev() {
        digits[j] = rest % l + 1;
        rest /= l;
    }
    Ok(digits)
}

/// Inverse of [`mixed_radix`]: 1-based digits back to the 1-based index.
pub fn mixed_radix_inverse(digits: &[usize], bases: &[usize]) -> Result<usize> {
    if digits.len() != bases.len() {
        return Err(Error::InvalidParameter(format!(
            "{} digits for {} bases",
            digits.len(),
            bases.len()
        )));
    }
    let mut index = 0usize;
    for (&b, &l) in digits.iter().zip(bases) {
        if b < 1 || b > l {
            return Err(Error::InvalidParameter(format!(
                "digit {b} outside [1, {l}]"
            )));
        }
        index = index * l + (b - 1);
    }
    Ok(index + 1)
}

/// The dense generator `G_N = T_{l_1} x ... x T_{l_m}`.
///
/// Guarded by [`MAX_DENSE_GENERATOR`]; the encoder never materializes this
/// (it applies kernels in stages), so the guard only limits direct
/// matrix-level work such as oracle checks.
pub fn build_generator(kernels: &[Kernel]) -> Result<BitMatrix> {
    if kernels.is_empty() {
        return Err(Error::InvalidParameter(
            "a generator needs at least one kernel".into(),
        ));
    }
    let n: u128 = kernels.iter().map(|k| k.size() as u128).product();
    if n > MAX_DENSE_GENERATOR {
        return Err(Error::GuardExceeded {
            what: "dense generator",
            needed: n,
            limit: MAX_DENSE_GENERATOR,
        });
    }
    let mut g = kernels[0].matrix().clone();
    for k in &kernels[1..] {
        g = g.kron(k.matrix());
    }
    Ok(g)
}

/// Splits `[1:N]` into information and frozen sets by reliability.
///
/// `reliabilities[i]` is the design erasure/Bhattacharyya figure of 1-based
/// index `i + 1` (smaller is more reliable). The information set takes the
/// `K` smallest figures; ties freeze the larger index. Returns
/// `(information_set, frozen_set)`, both sorted ascending.
pub fn select_frozen(reliabilities: &[f64], k: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = reliabilities.len();
    if k > n {
        return Err(Error::InvalidParameter(format!(
            "K = {k} exceeds N = {n}"
        )));
    }
    if reliabilities.iter().any(|z| !z.is_finite()) {
        return Err(Error::InvalidParameter(
            "reliability figures must be finite".into(),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        reliabilities[a]
            .partial_cmp(&reliabilities[b])
            .expect("finite figures compare")
            .then(a.cmp(&b))
    });
    let mut info: Vec<usize> = order[..k].iter().map(|&i| i + 1).collect();
    let mut frozen: Vec<usize> = order[k..].iter().map(|&i| i + 1).collect();
    info.sort_unstable();
    frozen.sort_unstable();
    Ok((info, frozen))
}

/// A fully specified multi-kernel polar code.
///
/// Serialized with canonical key order
/// `kernels, N, K, information_set, design_channel, reliability_mode,
/// reliabilities, format_version`; identical constructions produce
/// byte-identical JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSpec {
    /// Kernel names, outermost first (`b_1` digit).
    pub kernels: Vec<String>,
    /// Blocklength `N = prod l_j`.
    #[serde(rename = "N")]
    pub n: usize,
    /// Information size.
    #[serde(rename = "K")]
    pub k: usize,
    /// Sorted 1-based information indices, `|information_set| = K`.
    pub information_set: Vec<usize>,
    /// The design channel the reliabilities were computed for.
    pub design_channel: ChannelSpec,
    /// How `reliabilities` were computed: `exact_erasure` for erasure
    /// design channels, `bhattacharyya_upper_bound` (conservative, not
    /// optimal) otherwise.
    pub reliability_mode: String,
    /// Per-index design figures in index order (smaller is better).
    pub reliabilities: Vec<f64>,
    /// Schema version ([`CODE_SPEC_FORMAT_VERSION`]).
    pub format_version: u32,
}

impl CodeSpec {
    /// The frozen set: sorted complement of the information set.
    pub fn frozen_set(&self) -> Vec<usize> {
        let mut info = self.information_set.iter().peekable();
        (1..=self.n)
            .filter(|i| {
                if info.peek() == Some(&i) {
                    info.next();
                    false
                } else {
                    true
                }
            })
            .collect()
    }

    /// Resolves the kernel names to kernel objects.
    pub fn kernel_objects(&self) -> Result<Vec<Kernel>> {
        self.kernels.iter().map(|name| Kernel::by_name(name)).collect()
    }

    /// Kernel sizes `(l_1, ..., l_m)`.
    pub fn bases(&self) -> Result<Vec<usize>> {
        Ok(self.kernel_objects()?.iter().map(|k| k.size()).collect())
    }

    /// Structural validation: kernel names resolve and multiply to `N`,
    /// the information set is sorted, unique, in range, of size `K`, the
    /// reliability table covers every index, the mode tag is known, and
    /// re-running the selection rule on `reliabilities` reproduces
    /// `information_set` exactly.
    pub fn validate(&self) -> Result<()> {
        let bases = self.bases()?;
        let n: usize = bases.iter().product();
        if n != self.n {
            return Err(Error::InvalidSpec(format!(
                "N = {} but kernels multiply to {n}",
                self.n
            )));
        }
        if self.information_set.len() != self.k {
            return Err(Error::InvalidSpec(format!(
                "K = {} but information set has {} indices",
                self.k,
                self.information_set.len()
            )));
        }
        if !self.information_set.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidSpec(
                "information set must be sorted and free of duplicates".into(),
            ));
        }
        if self
            .information_set
            .iter()
            .any(|&i| i < 1 || i > self.n)
        {
            return Err(Error::InvalidSpec(format!(
                "information indices must lie in [1, {}]",
                self.n
            )));
        }
        if self.reliabilities.len() != self.n {
            return Err(Error::InvalidSpec(format!(
                "{} reliability figures for N = {}",
                self.reliabilities.len(),
                self.n
            )));
        }
        if self.reliability_mode != ReliabilityMode::ExactErasure.as_str()
            && self.reliability_mode != ReliabilityMode::BhattacharyyaBound.as_str()
        {
            return Err(Error::InvalidSpec(format!(
                "unknown reliability mode `{}`",
                self.reliability_mode
            )));
        }
        self.design_channel.validate()?;
        let (info, _) = select_frozen(&self.reliabilities, self.k)?;
        if info != self.information_set {
            return Err(Error::InvalidSpec(
                "information set does not follow from reliabilities under the selection rule"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Serializes to pretty JSON with canonical key order and a trailing
    /// newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("spec serializes");
        s.push('\n');
        s
    }

    /// Parses and validates a spec from JSON.
    pub fn from_json(text: &str) -> Result<CodeSpec> {
        let spec: CodeSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Designs a code: computes per-index reliabilities for the design channel
/// (exact erasure evolution for erasure channels, Bhattacharyya upper
/// bounds otherwise), ranks them, and freezes all but the best `K`.
pub fn construct_code(kernels: &[Kernel], design: &ChannelSpec, k: usize) -> Result<CodeSpec> {
    let (mode, reliabilities) = match design.as_erasure() {
        Some(eps) => {
            let tree = bec_tree(eps, kernels)?;
            (ReliabilityMode::ExactErasure, tree.reliability_figures())
        }
        None => {
            let z0 = design.to_channel()?.bhattacharyya();
            let tree = bounds_tree(z0, kernels)?;
            (ReliabilityMode::BhattacharyyaBound, tree.reliability_figures())
        }
    };
    let (information_set, _) = select_frozen(&reliabilities, k)?;
    let spec = CodeSpec {
        kernels: kernels.iter().map(|k| k.name().to_string()).collect(),
        n: reliabilities.len(),
        k,
        information_set,
        design_channel: design.clone(),
        reliability_mode: mode.as_str().to_string(),
        reliabilities,
        format_version: CODE_SPEC_FORMAT_VERSION,
    };
    debug_assert!(spec.validate().is_ok());
    Ok(spec)
}
