//! Numerical verification of the polarization results: conservation of
//! mutual information across stages, polarization fractions, the per-step
//! mutual-information inequality, the binary-entropy inequalities behind
//! it, partial-distance bound sweeps, combined exponents, and log-domain
//! convergence probes.
//!
//! Everything here is finite-depth numerical evidence: limits are probed as
//! trajectories and trends, never asserted as limits.

use crate::channel::{bconv, h2, ChannelSpec, DiscreteChannel};
use crate::kernel::Kernel;
use crate::synthesis::{
    bec_tree, synthesize_step, z_bounds_step, ReliabilityMode, ReliabilityTree,
};
use crate::util::neumaier_sum;
use crate::{Error, Result};

/// Margin tolerance for exact-arithmetic checks (conservation, linear-
/// domain bound sweeps, step inequality).
pub const STRICT_TOLERANCE: f64 = 1e-12;

/// Margin tolerance for log-domain bound sweeps: log values scale with
/// `N`, so their last-place noise is larger than the linear tolerance.
pub const LOG_TOLERANCE: f64 = 1e-9;

/// Margin tolerance for the entropy-inequality grids.
pub const ENTROPY_TOLERANCE: f64 = 1e-10;

/// Mean mutual information of one tree stage.
#[derive(Clone, Debug, PartialEq)]
pub struct MartingaleStage {
    /// Stage index, 0 for the root.
    pub stage: usize,
    /// Number of synthesized channels in the stage.
    pub nodes: usize,
    /// Mean mutual information over the stage (uniform path weights).
    pub mean_mutual_info: f64,
    /// `|mean - initial mutual information|`.
    pub deviation: f64,
}

/// Stage-by-stage conservation report.
#[derive(Clone, Debug, PartialEq)]
pub struct MartingaleReport {
    /// Mutual information of the design channel.
    pub initial_mutual_info: f64,
    /// One summary per stage, root first.
    pub stages: Vec<MartingaleStage>,
    /// Largest stage deviation.
    pub max_deviation: f64,
}

/// Conservation over an exact erasure tree: the stage means of
/// `I = 1 - Z` must all equal the root mutual information.
pub fn martingale_report_from_tree(tree: &ReliabilityTree) -> Result<MartingaleReport> {
    if tree.mode() != ReliabilityMode::ExactErasure {
        return Err(Error::InvalidParameter(
            "martingale means require an exact erasure tree".into(),
        ));
    }
    let initial = 1.0 - tree.stages()[0][0].upper.lin();
    let stages: Vec<MartingaleStage> = tree
        .stages()
        .iter()
        .enumerate()
        .map(|(m, stage)| {
            let mean = neumaier_sum(stage.iter().map(|n| 1.0 - n.upper.lin()))
                / stage.len() as f64;
            MartingaleStage {
                stage: m,
                nodes: stage.len(),
                mean_mutual_info: mean,
                deviation: (mean - initial).abs(),
            }
        })
        .collect();
    let max_deviation = stages.iter().map(|s| s.deviation).fold(0.0, f64::max);
    Ok(MartingaleReport {
        initial_mutual_info: initial,
        stages,
        max_deviation,
    })
}

/// Conservation for a design channel and kernel sequence.
///
/// Erasure channels get the exact multi-stage tree; any other channel is
/// checked for a single stage only (one application of `kernels[0]` via
/// full synthesis), since exact multi-step synthesis of general channels is
/// out of scope.
pub fn martingale_report(channel: &ChannelSpec, kernels: &[Kernel]) -> Result<MartingaleReport> {
    if let Some(eps) = channel.as_erasure() {
        return martingale_report_from_tree(&bec_tree(eps, kernels)?);
    }
    if kernels.len() != 1 {
        return Err(Error::InvalidParameter(
            "multi-stage martingale means are exact only for erasure channels; \
             use a single kernel for general channels"
                .into(),
        ));
    }
    let w = channel.to_channel()?;
    let initial = w.mutual_information();
    let children = synthesize_step(&w, &kernels[0])?;
    let mean = neumaier_sum(children.iter().map(|c| c.mutual_information()))
        / children.len() as f64;
    let stages = vec![
        MartingaleStage {
            stage: 0,
            nodes: 1,
            mean_mutual_info: initial,
            deviation: 0.0,
        },
        MartingaleStage {
            stage: 1,
            nodes: children.len(),
            mean_mutual_info: mean,
            deviation: (mean - initial).abs(),
        },
    ];
    let max_deviation = stages[1].deviation;
    Ok(MartingaleReport {
        initial_mutual_info: initial,
        stages,
        max_deviation,
    })
}

/// How a stage's channels split into polarized and intermediate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarizationSummary {
    /// Stage index, 0 for the root.
    pub stage: usize,
    /// Number of channels in the stage.
    pub nodes: usize,
    /// Fraction with `I >= 1 - threshold`.
    pub fraction_high: f64,
    /// Fraction with `I <= threshold`.
    pub fraction_low: f64,
    /// The rest.
    pub fraction_middle: f64,
}

fn stage_fractions(
    stage: usize,
    nodes: &[crate::synthesis::TreeNode],
    threshold: f64,
) -> PolarizationSummary {
    let n = nodes.len();
    let mut high = 0usize;
    let mut low = 0usize;
    for node in nodes {
        let i = 1.0 - node.upper.lin();
        if i >= 1.0 - threshold {
            high += 1;
        } else if i <= threshold {
            low += 1;
        }
    }
    PolarizationSummary {
        stage,
        nodes: n,
        fraction_high: high as f64 / n as f64,
        fraction_low: low as f64 / n as f64,
        fraction_middle: (n - high - low) as f64 / n as f64,
    }
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold > 0.0 && threshold < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "polarization threshold must lie in (0, 0.5), got {threshold}"
        )));
    }
    Ok(())
}

/// Leaf-stage polarization fractions at the given threshold.
pub fn polarization_fraction(
    tree: &ReliabilityTree,
    threshold: f64,
) -> Result<PolarizationSummary> {
    check_threshold(threshold)?;
    Ok(stage_fractions(
        tree.stages().len() - 1,
        tree.leaves(),
        threshold,
    ))
}

/// Polarization fractions for every stage, root first.
pub fn polarization_profile(
    tree: &ReliabilityTree,
    threshold: f64,
) -> Result<Vec<PolarizationSummary>> {
    check_threshold(threshold)?;
    Ok(tree
        .stages()
        .iter()
        .enumerate()
        .map(|(m, stage)| stage_fractions(m, stage, threshold))
        .collect())
}

/// One evaluation of the per-step inequality
/// `min_b |I(W_b) - I(W)| >= I(W)^alpha * (1 - I(W))^beta`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepInequalityCheck {
    /// `I(W)` of the parent channel.
    pub mutual_info: f64,
    /// `I(W_b)` of every synthesized child.
    pub child_mutual_infos: Vec<f64>,
    /// `min_b |I(W_b) - I(W)| - I(W)^alpha (1-I(W))^beta`; non-negative
    /// when the inequality holds.
    pub margin: f64,
}

/// Checks the per-step inequality for one channel and kernel.
pub fn check_step_inequality(
    w: &DiscreteChannel,
    kernel: &Kernel,
    alpha: u32,
    beta: u32,
) -> Result<StepInequalityCheck> {
    let i0 = w.mutual_information();
    let child_mutual_infos: Vec<f64> = synthesize_step(w, kernel)?
        .iter()
        .map(|c| c.mutual_information())
        .collect();
    let min_delta = child_mutual_infos
        .iter()
        .map(|i| (i - i0).abs())
        .fold(f64::INFINITY, f64::min);
    let rhs = i0.powi(alpha as i32) * (1.0 - i0).powi(beta as i32);
    Ok(StepInequalityCheck {
        mutual_info: i0,
        child_mutual_infos,
        margin: min_delta - rhs,
    })
}

/// Worst-case step-inequality result over a channel family.
#[derive(Clone, Debug, PartialEq)]
pub struct InequalityReport {
    /// Kernel name.
    pub kernel: String,
    /// Exponent on `I(W)`.
    pub alpha: u32,
    /// Exponent on `1 - I(W)`.
    pub beta: u32,
    /// Human-readable description of the channel family swept.
    pub grid: String,
    /// Smallest margin over the family.
    pub worst_margin: f64,
    /// `worst_margin >= -STRICT_TOLERANCE`.
    pub pass: bool,
}

fn sweep_inequality(
    kernel: &Kernel,
    alpha: u32,
    beta: u32,
    grid: String,
    channels: impl Iterator<Item = DiscreteChannel>,
) -> Result<InequalityReport> {
    let mut worst_margin = f64::INFINITY;
    for w in channels {
        let check = check_step_inequality(&w, kernel, alpha, beta)?;
        worst_margin = worst_margin.min(check.margin);
    }
    Ok(InequalityReport {
        kernel: kernel.name().to_string(),
        alpha,
        beta,
        grid,
        worst_margin,
        pass: worst_margin >= -STRICT_TOLERANCE,
    })
}

/// Sweeps the step inequality over the erasure grid
/// `eps in {1/points, 2/points, ..., (points-1)/points}`.
pub fn inequality_report_erasure_grid(
    kernel: &Kernel,
    alpha: u32,
    beta: u32,
    points: usize,
) -> Result<InequalityReport> {
    if points < 2 {
        return Err(Error::InvalidParameter(
            "erasure grid needs at least 2 points".into(),
        ));
    }
    let channels = (1..points).map(move |i| {
        DiscreteChannel::from_erasure(i as f64 / points as f64)
            .expect("grid erasure probabilities are valid")
    });
    sweep_inequality(
        kernel,
        alpha,
        beta,
        format!("erasure grid eps = i/{points}, i = 1..{}", points - 1),
        channels,
    )
}

/// Sweeps the step inequality over seeded random channels (see
/// [`crate::channel::random_channels`]).
pub fn inequality_report_random_channels(
    kernel: &Kernel,
    alpha: u32,
    beta: u32,
    count: usize,
    max_outputs: usize,
    seed: u64,
) -> Result<InequalityReport> {
    let channels = crate::channel::random_channels(count, max_outputs, seed);
    sweep_inequality(
        kernel,
        alpha,
        beta,
        format!("{count} random channels, alphabet <= {max_outputs}, seed {seed}"),
        channels.into_iter(),
    )
}

/// Worst margins of the two binary-entropy inequalities on a grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyCheckReport {
    /// Grid points per axis on `[0, 1/2]`.
    pub resolution: usize,
    /// Worst margin of `h2(a*a) - h2(a) - h2(a)^2 (1 - h2(a))` over the
    /// 1-D grid (`*` is the erasure convolution).
    pub self_convolution_worst: f64,
    /// Worst margin of `h2(a) + h2(b) - h2(a)h2(b) - h2(a*b)` over the
    /// 2-D grid.
    pub convolution_bound_worst: f64,
    /// Both margins `>= -ENTROPY_TOLERANCE`.
    pub pass: bool,
}

/// Verifies pointwise, on an inclusive uniform grid over `[0, 1/2]`:
/// the self-convolution lower bound `h2(a*a) - h2(a) >= h2(a)^2 (1-h2(a))`
/// and the convolution upper bound
/// `h2(a*b) <= h2(a) + h2(b) - h2(a)h2(b)` (the latter on the 2-D grid).
pub fn entropy_inequality_checks(resolution: usize) -> Result<EntropyCheckReport> {
    if resolution < 100 {
        return Err(Error::InvalidParameter(format!(
            "entropy grid needs at least 100 points, got {resolution}"
        )));
    }
    let grid: Vec<f64> = (0..=resolution)
        .map(|i| 0.5 * i as f64 / resolution as f64)
        .collect();
    let entropies: Vec<f64> = grid.iter().map(|&a| h2(a)).collect();
    let mut self_convolution_worst = f64::INFINITY;
    for (&a, &ha) in grid.iter().zip(&entropies) {
        let margin = h2(bconv(a, a)) - ha - ha * ha * (1.0 - ha);
        self_convolution_worst = self_convolution_worst.min(margin);
    }
    let mut convolution_bound_worst = f64::INFINITY;
    for (&a, &ha) in grid.iter().zip(&entropies) {
        for (&b, &hb) in grid.iter().zip(&entropies) {
            let margin = ha + hb - ha * hb - h2(bconv(a, b));
            convolution_bound_worst = convolution_bound_worst.min(margin);
        }
    }
    Ok(EntropyCheckReport {
        resolution,
        self_convolution_worst,
        convolution_bound_worst,
        pass: self_convolution_worst >= -ENTROPY_TOLERANCE
            && convolution_bound_worst >= -ENTROPY_TOLERANCE,
    })
}

/// One kernel's share of a mixing profile.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileEntry {
    /// Kernel name.
    pub kernel: String,
    /// Kernel size `l_j`.
    pub size: usize,
    /// Frequency `p_j` of this kernel in the composition.
    pub frequency: f64,
    /// The kernel's own exponent `E_{l_j}`.
    pub exponent: f64,
}

/// A mixing profile with its combined exponent
/// `E = sum_j p_j log2(l_j) E_{l_j} / sum_j p_j log2(l_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentProfile {
    /// Per-kernel entries in input order.
    pub entries: Vec<ProfileEntry>,
    /// The combined exponent.
    pub combined: f64,
}

/// Combined exponent of kernels used with the given frequencies.
///
/// Frequencies must be non-negative and sum to 1 within `1e-12`; at least
/// one frequency must be positive.
pub fn multi_kernel_exponent(entries: &[(Kernel, f64)]) -> Result<ExponentProfile> {
    if entries.is_empty() {
        return Err(Error::InvalidParameter("profile must not be empty".into()));
    }
    if entries.iter().any(|(_, p)| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidParameter(
            "frequencies must be non-negative".into(),
        ));
    }
    let total = neumaier_sum(entries.iter().map(|(_, p)| *p));
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "frequencies sum to {total}, must be 1"
        )));
    }
    let numerator = neumaier_sum(
        entries
            .iter()
            .map(|(k, p)| p * (k.size() as f64).log2() * k.exponent()),
    );
    let denominator = neumaier_sum(entries.iter().map(|(k, p)| p * (k.size() as f64).log2()));
    if denominator <= 0.0 {
        return Err(Error::InvalidParameter(
            "at least one frequency must be positive".into(),
        ));
    }
    Ok(ExponentProfile {
        entries: entries
            .iter()
            .map(|(k, p)| ProfileEntry {
                kernel: k.name().to_string(),
                size: k.size(),
                frequency: *p,
                exponent: k.exponent(),
            })
            .collect(),
        combined: numerator / denominator,
    })
}

/// The empirical profile of a finite kernel sequence: each distinct kernel
/// with frequency `count / m`, in first-appearance order. The asymptotic
/// frequencies of the combined-exponent formula are instantiated as these
/// finite counts.
pub fn empirical_profile(kernels: &[Kernel]) -> Result<ExponentProfile> {
    if kernels.is_empty() {
        return Err(Error::InvalidParameter("profile must not be empty".into()));
    }
    let mut groups: Vec<(Kernel, f64)> = Vec::new();
    for k in kernels {
        match groups.iter_mut().find(|(g, _)| g == k) {
            Some((_, count)) => *count += 1.0,
            None => groups.push((k.clone(), 1.0)),
        }
    }
    let m = kernels.len() as f64;
    for (_, count) in &mut groups {
        *count /= m;
    }
    multi_kernel_exponent(&groups)
}

/// Log-domain threshold probe of one tree at rate parameter `gamma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceProbe {
    /// The probed rate parameter.
    pub gamma: f64,
    /// Number of leaves `N`.
    pub leaves: usize,
    /// `log2` of the probe threshold, `-N^gamma`.
    pub log2_threshold: f64,
    /// Leaves with `log2(Z) <= -N^gamma`.
    pub below_count: usize,
    /// `below_count / N`.
    pub fraction_below: f64,
    /// Leaves with `log2(Z) >= -N^gamma`.
    pub at_least_count: usize,
    /// `at_least_count / N`.
    pub fraction_at_least: f64,
}

/// Counts leaves against the threshold `Z <= 2^{-N^gamma}` entirely in the
/// log domain (the threshold itself is far below linear `f64` range for
/// interesting `gamma`). Requires an exact erasure tree.
pub fn convergence_probe(tree: &ReliabilityTree, gamma: f64) -> Result<ConvergenceProbe> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if tree.mode() != ReliabilityMode::ExactErasure {
        return Err(Error::InvalidParameter(
            "convergence probes require an exact erasure tree".into(),
        ));
    }
    let n = tree.leaf_count();
    let log2_threshold = -(n as f64).powf(gamma);
    let mut below = 0usize;
    let mut at_least = 0usize;
    for node in tree.leaves() {
        let l = node.upper.log2();
        assert!(!l.is_nan(), "log-domain value must never be NaN");
        if l <= log2_threshold {
            below += 1;
        }
        if l >= log2_threshold {
            at_least += 1;
        }
    }
    Ok(ConvergenceProbe {
        gamma,
        leaves: n,
        log2_threshold,
        below_count: below,
        fraction_below: below as f64 / n as f64,
        at_least_count: at_least,
        fraction_at_least: at_least as f64 / n as f64,
    })
}

/// Worst slack of the partial-distance bounds over a whole tree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundSweepReport {
    /// Number of parent-to-child transitions checked.
    pub transitions: usize,
    /// Worst linear-domain slack: `min` over transitions and both bound
    /// sides of `child - lower` and `upper - child`.
    pub worst_linear_margin: f64,
    /// The same slack measured on `log2` values (tiny `Z` only exists
    /// there); noisier by the magnitude of the logs.
    pub worst_log_margin: f64,
    /// Linear slack `>= -STRICT_TOLERANCE` and log slack
    /// `>= -LOG_TOLERANCE`.
    pub pass: bool,
}

/// Verifies, on every transition of an exact erasure tree, that the child
/// `Z` lies inside the partial-distance interval
/// `[Z^{D_b}, 2^{l-b} Z^{D_b}]` of its parent.
pub fn z_bound_sweep(tree: &ReliabilityTree) -> Result<BoundSweepReport> {
    if tree.mode() != ReliabilityMode::ExactErasure {
        return Err(Error::InvalidParameter(
            "bound sweeps require an exact erasure tree".into(),
        ));
    }
    let mut transitions = 0usize;
    let mut worst_linear = f64::INFINITY;
    let mut worst_log = f64::INFINITY;
    for (m, kernel) in tree.kernels().iter().enumerate() {
        let l = kernel.size();
        let distances = kernel.partial_distances();
        let parents = &tree.stages()[m];
        let children = &tree.stages()[m + 1];
        for (j, parent) in parents.iter().enumerate() {
            let p = parent.upper;
            let bounds = z_bounds_step(p.lin(), kernel)?;
            for (b0, &d) in distances.iter().enumerate() {
                let child = children[j * l + b0].upper;
                let (lo, hi) = bounds[b0];
                worst_linear = worst_linear.min(child.lin() - lo).min(hi - child.lin());
                // Log-domain: bounds are exact arithmetic on log2 values.
                let lo_log = d as f64 * p.log2();
                let hi_log = ((l - b0 - 1) as f64 + d as f64 * p.log2()).min(0.0);
                let lower_margin = if child.log2() == f64::NEG_INFINITY
                    && lo_log == f64::NEG_INFINITY
                {
                    0.0
                } else {
                    child.log2() - lo_log
                };
                let upper_margin = if child.log2() == f64::NEG_INFINITY
                    && hi_log == f64::NEG_INFINITY
                {
                    0.0
                } else {
                    hi_log - child.log2()
                };
                worst_log = worst_log.min(lower_margin).min(upper_margin);
                transitions += 1;
            }
        }
    }
    Ok(BoundSweepReport {
        transitions,
        worst_linear_margin: worst_linear,
        worst_log_margin: worst_log,
        pass: worst_linear >= -STRICT_TOLERANCE && worst_log >= -LOG_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ErasureChannel;

    fn t2() -> Kernel {
        Kernel::t2()
    }

    fn t3() -> Kernel {
        Kernel::t3()
    }

    #[test]
    fn martingale_exact_erasure() {
        let spec: ChannelSpec = "bec:0.5".parse().unwrap();
        let report = martingale_report(&spec, &[t2(), t3(), t2(), t3()]).unwrap();
        assert_eq!(report.initial_mutual_info, 0.5);
        assert_eq!(report.stages.len(), 5);
        for stage in &report.stages {
            assert!(stage.deviation <= STRICT_TOLERANCE, "{stage:?}");
        }
        assert!(report.max_deviation <= STRICT_TOLERANCE);
    }

    #[test]
    fn martingale_perfect_channel() {
        let spec: ChannelSpec = "bec:0".parse().unwrap();
        let report = martingale_report(&spec, &[t2(), t2()]).unwrap();
        assert_eq!(report.initial_mutual_info, 1.0);
        for stage in &report.stages {
            assert_eq!(stage.mean_mutual_info, 1.0);
        }
    }

    #[test]
    fn martingale_single_stage_general_channel() {
        let spec: ChannelSpec = "bsc:0.11".parse().unwrap();
        let report = martingale_report(&spec, &[t2()]).unwrap();
        assert!(report.max_deviation <= STRICT_TOLERANCE);
        let report = martingale_report(&spec, &[t3()]).unwrap();
        assert!(report.max_deviation <= STRICT_TOLERANCE);
        assert!(martingale_report(&spec, &[t2(), t2()]).is_err());
    }

    #[test]
    fn single_stage_t2_mean() {
        let spec: ChannelSpec = "bec:0.5".parse().unwrap();
        let report = martingale_report(&spec, &[t2()]).unwrap();
        // Children 0.25 and 0.75 average back to 0.5.
        assert_eq!(report.stages[1].mean_mutual_info, 0.5);
    }

    #[test]
    fn polarization_trivial_cases() {
        let tree = bec_tree(0.0, &[t2(), t2()]).unwrap();
        let s = polarization_fraction(&tree, 0.01).unwrap();
        assert_eq!(s.fraction_high, 1.0);
        assert_eq!(s.fraction_low, 0.0);
        assert!(polarization_fraction(&tree, 0.0).is_err());
        assert!(polarization_fraction(&tree, 0.5).is_err());
    }

    #[test]
    fn polarization_profile_shape() {
        let tree = bec_tree(0.5, &[t2(), t3(), t2()]).unwrap();
        let profile = polarization_profile(&tree, 0.01).unwrap();
        assert_eq!(profile.len(), 4);
        assert_eq!(profile[0].nodes, 1);
        assert_eq!(profile[3].nodes, 12);
        for s in &profile {
            let total = s.fraction_high + s.fraction_low + s.fraction_middle;
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn step_inequality_known_margins() {
        let w = ErasureChannel::new(0.5).unwrap().to_discrete();
        let check = check_step_inequality(&w, &t2(), 1, 2).unwrap();
        // Children {0.25, 0.75}: min delta 0.25, rhs 0.5 * 0.25 = 0.125.
        assert!((check.margin - 0.125).abs() < 1e-12);
        let check = check_step_inequality(&w, &t3(), 2, 2).unwrap();
        // Children {0.125, 0.625, 0.75}: min delta 0.125, rhs 0.0625.
        assert!((check.margin - 0.0625).abs() < 1e-12);
    }

    #[test]
    fn step_inequality_perfect_channel() {
        let w = ErasureChannel::new(0.0).unwrap().to_discrete();
        let check = check_step_inequality(&w, &t2(), 1, 2).unwrap();
        assert!(check.margin >= -STRICT_TOLERANCE);
        assert_eq!(check.mutual_info, 1.0);
    }

    #[test]
    fn inequality_reports_pass_on_both_suites() {
        let erasure_t2 = inequality_report_erasure_grid(&t2(), 1, 2, 100).unwrap();
        assert!(erasure_t2.pass, "{erasure_t2:?}");
        let erasure_t3 = inequality_report_erasure_grid(&t3(), 2, 2, 100).unwrap();
        assert!(erasure_t3.pass, "{erasure_t3:?}");
        let random_t2 = inequality_report_random_channels(&t2(), 1, 2, 25, 6, 2024).unwrap();
        assert!(random_t2.pass, "{random_t2:?}");
        let random_t3 = inequality_report_random_channels(&t3(), 2, 2, 25, 6, 2024).unwrap();
        assert!(random_t3.pass, "{random_t3:?}");
    }

    #[test]
    fn weak_exponents_fail_the_sweep() {
        // (alpha, beta) = (1, 1) is too strong a lower bound for T2 near
        // the ends of the erasure range; the sweep must notice.
        let report = inequality_report_erasure_grid(&t2(), 0, 1, 100).unwrap();
        assert!(!report.pass);
    }

    #[test]
    fn entropy_checks_pass() {
        let report = entropy_inequality_checks(200).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.self_convolution_worst >= -ENTROPY_TOLERANCE);
        assert!(report.convolution_bound_worst >= -ENTROPY_TOLERANCE);
        assert!(entropy_inequality_checks(50).is_err());
    }

    #[test]
    fn entropy_boundary_points() {
        // a = 0.5: h2(0.5*0.5) - 1 = 0 and the rhs is 0 (equality).
        assert!((h2(bconv(0.5, 0.5)) - 1.0).abs() < 1e-15);
        // a = 0: both sides vanish.
        assert_eq!(h2(bconv(0.0, 0.0)), 0.0);
        // a = 0.11 spot check of the self-convolution bound.
        let a = 0.11f64;
        let lhs = h2(bconv(a, a)) - h2(a);
        let rhs = h2(a) * h2(a) * (1.0 - h2(a));
        assert!(lhs >= rhs);
        assert!((bconv(a, a) - 0.1958).abs() < 1e-12);
    }

    #[test]
    fn exponent_profiles() {
        let pure_t2 = multi_kernel_exponent(&[(t2(), 1.0)]).unwrap();
        assert_eq!(pure_t2.combined, 0.5);
        let pure_t3 = multi_kernel_exponent(&[(t3(), 1.0)]).unwrap();
        assert!((pure_t3.combined - t3().exponent()).abs() < 1e-15);
        let mixed = multi_kernel_exponent(&[(t2(), 0.5), (t3(), 0.5)]).unwrap();
        let e3 = t3().exponent();
        let hand = (0.5 * 0.5 + 0.5 * 3f64.log2() * e3) / (0.5 + 0.5 * 3f64.log2());
        assert!((mixed.combined - hand).abs() < 1e-12);
        assert!((mixed.combined - 0.45132827510696516).abs() < 1e-12);
    }

    #[test]
    fn exponent_profile_invariances() {
        let a = multi_kernel_exponent(&[(t2(), 0.25), (t3(), 0.75)]).unwrap();
        let b = multi_kernel_exponent(&[(t3(), 0.75), (t2(), 0.25)]).unwrap();
        assert!((a.combined - b.combined).abs() < 1e-15);
        // Splitting a frequency across duplicate entries changes nothing.
        let c = multi_kernel_exponent(&[(t2(), 0.1), (t3(), 0.75), (t2(), 0.15)]).unwrap();
        assert!((a.combined - c.combined).abs() < 1e-15);
    }

    #[test]
    fn exponent_profile_validation() {
        assert!(multi_kernel_exponent(&[]).is_err());
        assert!(multi_kernel_exponent(&[(t2(), 0.7)]).is_err());
        assert!(multi_kernel_exponent(&[(t2(), -0.5), (t3(), 1.5)]).is_err());
    }

    #[test]
    fn empirical_profile_counts_kernels() {
        let profile =
            empirical_profile(&[t2(), t3(), t2(), t3(), t2(), t3()]).unwrap();
        assert_eq!(profile.entries.len(), 2);
        assert_eq!(profile.entries[0].kernel, "T2");
        assert_eq!(profile.entries[0].frequency, 0.5);
        assert_eq!(profile.entries[1].frequency, 0.5);
        let mixed = multi_kernel_exponent(&[(t2(), 0.5), (t3(), 0.5)]).unwrap();
        assert_eq!(profile.combined, mixed.combined);
    }

    #[test]
    fn convergence_probe_saturated_channel() {
        // Z = 1 everywhere: no leaf ever dips below the threshold.
        let tree = bec_tree(1.0, &[t2(), t2(), t2()]).unwrap();
        let probe = convergence_probe(&tree, 0.5).unwrap();
        assert_eq!(probe.fraction_below, 0.0);
        assert_eq!(probe.fraction_at_least, 1.0);
        assert!(convergence_probe(&tree, 0.0).is_err());
    }

    #[test]
    fn convergence_probe_modest_depth() {
        let tree = bec_tree(0.5, &vec![t2(); 10]).unwrap();
        let probe = convergence_probe(&tree, 0.4).unwrap();
        assert_eq!(probe.leaves, 1024);
        // N^0.4 = (2^10)^0.4 = 2^4; powf noise stays within a few ulps.
        assert!((probe.log2_threshold + 16.0).abs() < 1e-12);
        assert_eq!(probe.below_count, 290);
        assert_eq!(probe.at_least_count, 734);
        // Every leaf is counted at least once.
        assert!(probe.below_count + probe.at_least_count >= probe.leaves);
    }

    #[test]
    fn bound_sweep_passes_on_exact_trees() {
        for eps in [0.1, 0.5, 0.9] {
            let tree = bec_tree(eps, &[t2(), t3(), t3(), t2()]).unwrap();
            let report = z_bound_sweep(&tree).unwrap();
            assert!(report.pass, "eps {eps}: {report:?}");
            assert_eq!(report.transitions, 1 * 2 + 2 * 3 + 6 * 3 + 18 * 2);
        }
    }

    #[test]
    fn bound_sweep_equality_cases() {
        // T3 branch 3 has D = 2 and factor 2^0: child = Z^2 = both bounds.
        let tree = bec_tree(0.6, &[t3()]).unwrap();
        let report = z_bound_sweep(&tree).unwrap();
        assert!(report.pass);
        let child = tree.leaves()[2].upper.lin();
        assert!((child - 0.36).abs() < 1e-15);
        // Z = 0 root: all transitions are 0-to-0 equalities.
        let zero = bec_tree(0.0, &[t2(), t3()]).unwrap();
        let report = z_bound_sweep(&zero).unwrap();
        assert!(report.pass);
        assert_eq!(report.worst_linear_margin, 0.0);
    }

    #[test]
    fn bound_sweep_rejects_bound_mode() {
        let tree = crate::synthesis::bounds_tree(0.5, &[t2()]).unwrap();
        assert!(z_bound_sweep(&tree).is_err());
        assert!(martingale_report_from_tree(&tree).is_err());
        assert!(convergence_probe(&tree, 0.5).is_err());
    }
}
