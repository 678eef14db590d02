//! Named self-check suites.
//!
//! Each suite re-derives one family of invariants at moderate scale and
//! reports pass/fail per check, for the command-line `verify` entry
//! point. The suites are deterministic: random channels and evidence use
//! fixed seeds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    entropy_inequality_checks, inequality_report_erasure_grid,
    inequality_report_random_channels, martingale_report, z_bound_sweep, LOG_TOLERANCE,
    STRICT_TOLERANCE,
};
use crate::channel::{random_channels, ChannelSpec};
use crate::codec::{sc_posteriors_forced, transform, Evidence, Posterior};
use crate::construction::{build_generator, construct_code};
use crate::kernel::Kernel;
use crate::synthesis::{bec_tree, synthesize_step, ErasurePatterns};
use crate::{Error, Result};

/// Outcome of one named check inside a suite.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    /// Check identifier, unique within its suite.
    pub name: String,
    /// Whether the invariant held.
    pub pass: bool,
    /// Measured quantity and tolerance, for humans.
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

/// All suite names accepted by [`run_suite`].
pub const SUITES: &[&str] = &[
    "martingale",
    "step-inequality",
    "entropy",
    "z-bounds",
    "synthesis-oracle",
    "codec",
];

/// Runs one named suite.
pub fn run_suite(name: &str) -> Result<Vec<CheckResult>> {
    match name {
        "martingale" => Ok(martingale_suite()),
        "step-inequality" => Ok(step_inequality_suite()?),
        "entropy" => Ok(entropy_suite()?),
        "z-bounds" => Ok(z_bounds_suite()?),
        "synthesis-oracle" => Ok(synthesis_oracle_suite()?),
        "codec" => Ok(codec_suite()?),
        other => Err(Error::InvalidParameter(format!(
            "unknown suite '{other}'; available: {}",
            SUITES.join(", ")
        ))),
    }
}

/// Runs every suite in declaration order.
pub fn run_all() -> Result<Vec<(&'static str, Vec<CheckResult>)>> {
    SUITES
        .iter()
        .map(|&name| Ok((name, run_suite(name)?)))
        .collect()
}

fn deviation_check(name: &str, deviation: f64) -> CheckResult {
    CheckResult::new(
        name,
        deviation <= STRICT_TOLERANCE,
        format!("max deviation {deviation:.3e} (tolerance {STRICT_TOLERANCE:.0e})"),
    )
}

fn martingale_suite() -> Vec<CheckResult> {
    let mut results = Vec::new();
    let cases: [(&str, ChannelSpec, Vec<Kernel>); 3] = [
        (
            "uniform-size-2-depth-10",
            ChannelSpec::Erasure(0.5),
            vec![Kernel::t2(); 10],
        ),
        (
            "mixed-2-3-depth-4",
            ChannelSpec::Erasure(0.3),
            vec![Kernel::t2(), Kernel::t3(), Kernel::t2(), Kernel::t3()],
        ),
        (
            "bsc-single-step",
            ChannelSpec::Bsc(0.11),
            vec![Kernel::t3()],
        ),
    ];
    for (name, channel, kernels) in cases {
        match martingale_report(&channel, &kernels) {
            Ok(report) => results.push(deviation_check(name, report.max_deviation)),
            Err(e) => results.push(CheckResult::new(name, false, format!("error: {e}"))),
        }
    }
    // Conservation on arbitrary channels, one synthesis step per kernel.
    for kernel in [Kernel::t2(), Kernel::t3()] {
        let name = format!("random-channels-{}", kernel.name().to_lowercase());
        let mut worst = 0.0f64;
        let mut failure = None;
        for w in random_channels(20, 6, 77) {
            let parent = w.mutual_information();
            match synthesize_step(&w, &kernel) {
                Ok(children) => {
                    let mean = crate::util::neumaier_sum(
                        children.iter().map(|c| c.mutual_information()),
                    ) / children.len() as f64;
                    worst = worst.max((mean - parent).abs());
                }
                Err(e) => failure = Some(e.to_string()),
            }
        }
        results.push(match failure {
            Some(e) => CheckResult::new(&name, false, format!("error: {e}")),
            None => deviation_check(&name, worst),
        });
    }
    results
}

fn step_inequality_suite() -> Result<Vec<CheckResult>> {
    let mut results = Vec::new();
    let cases = [
        (Kernel::t2(), 1u32, 2u32),
        (Kernel::t3(), 2, 2),
    ];
    for (kernel, alpha, beta) in cases {
        let grid = inequality_report_erasure_grid(&kernel, alpha, beta, 100)?;
        results.push(CheckResult::new(
            &format!("erasure-grid-{}", kernel.name().to_lowercase()),
            grid.pass,
            format!(
                "alpha={alpha} beta={beta}, worst margin {:.3e} over {}",
                grid.worst_margin, grid.grid
            ),
        ));
        let random = inequality_report_random_channels(&kernel, alpha, beta, 50, 6, 2024)?;
        results.push(CheckResult::new(
            &format!("random-channels-{}", kernel.name().to_lowercase()),
            random.pass,
            format!(
                "alpha={alpha} beta={beta}, worst margin {:.3e} over {}",
                random.worst_margin, random.grid
            ),
        ));
    }
    Ok(results)
}

fn entropy_suite() -> Result<Vec<CheckResult>> {
    let report = entropy_inequality_checks(400)?;
    Ok(vec![
        CheckResult::new(
            "self-convolution-lower-bound",
            report.self_convolution_worst >= -crate::analysis::ENTROPY_TOLERANCE,
            format!("worst margin {:.3e} on 1-D grid", report.self_convolution_worst),
        ),
        CheckResult::new(
            "convolution-upper-bound",
            report.convolution_bound_worst >= -crate::analysis::ENTROPY_TOLERANCE,
            format!("worst margin {:.3e} on 2-D grid", report.convolution_bound_worst),
        ),
    ])
}

fn z_bounds_suite() -> Result<Vec<CheckResult>> {
    let mut results = Vec::new();
    let cases: [(&str, f64, Vec<Kernel>); 3] = [
        ("uniform-size-2-depth-12", 0.5, vec![Kernel::t2(); 12]),
        (
            "mixed-low-erasure",
            0.1,
            vec![Kernel::t2(), Kernel::t3(), Kernel::t3(), Kernel::t2()],
        ),
        (
            "mixed-high-erasure",
            0.9,
            vec![Kernel::t3(), Kernel::t2(), Kernel::t3()],
        ),
    ];
    for (name, eps, kernels) in cases {
        let tree = bec_tree(eps, &kernels)?;
        let report = z_bound_sweep(&tree)?;
        results.push(CheckResult::new(
            name,
            report.pass,
            format!(
                "{} transitions, worst linear margin {:.3e} (tol {STRICT_TOLERANCE:.0e}), \
                 worst log margin {:.3e} (tol {LOG_TOLERANCE:.0e})",
                report.transitions, report.worst_linear_margin, report.worst_log_margin
            ),
        ));
    }
    Ok(results)
}

/// Erasure probabilities of every input of the full generator treated as
/// one monolithic kernel; equals the tree leaves when both are exact.
fn direct_leaf_erasures(kernels: &[Kernel], eps: f64) -> Result<Vec<f64>> {
    let generator = build_generator(kernels)?;
    let patterns = ErasurePatterns::for_matrix(&generator)?;
    Ok(patterns
        .step(crate::synthesis::ZValue::from_lin(eps))
        .iter()
        .map(|z| z.lin())
        .collect())
}

fn synthesis_oracle_suite() -> Result<Vec<CheckResult>> {
    let mut results = Vec::new();
    let stacks: [(&str, Vec<Kernel>); 3] = [
        ("2x2", vec![Kernel::t2(), Kernel::t2()]),
        ("2x3", vec![Kernel::t2(), Kernel::t3()]),
        ("3x2", vec![Kernel::t3(), Kernel::t2()]),
    ];
    for (label, kernels) in stacks {
        let mut worst = 0.0f64;
        for eps in [0.2, 0.5, 0.8] {
            let tree = bec_tree(eps, &kernels)?;
            let direct = direct_leaf_erasures(&kernels, eps)?;
            for (leaf, z) in tree.leaves().iter().zip(&direct) {
                worst = worst.max((leaf.upper.lin() - z).abs());
            }
        }
        results.push(CheckResult::new(
            &format!("tree-vs-monolithic-{label}"),
            worst <= 1e-9,
            format!("max |z difference| {worst:.3e} (tolerance 1e-9)"),
        ));
    }
    Ok(results)
}

/// Conditional distribution of the next input symbol by enumerating every
/// completion of the forced prefix, weighted by the evidence.
fn brute_next_posterior(
    kernels: &[Kernel],
    evidence: &Evidence,
    prefix: &[u8],
) -> Result<Posterior> {
    let n: usize = kernels.iter().map(Kernel::size).product();
    let free = n - prefix.len() - 1;
    let mut mass = [0.0f64; 2];
    for next in 0..2u8 {
        for completion in 0..(1u64 << free) {
            let mut u = prefix.to_vec();
            u.push(next);
            for b in 0..free {
                u.push(((completion >> b) & 1) as u8);
            }
            let x = transform(kernels, &u)?;
            let weight: f64 = x
                .iter()
                .zip(evidence)
                .map(|(&bit, post)| post.prob(bit))
                .product();
            mass[next as usize] += weight;
        }
    }
    let total = mass[0] + mass[1];
    if total == 0.0 {
        return Ok(Posterior::erasure());
    }
    Posterior::new(mass[0] / total, mass[1] / total)
}

fn codec_suite() -> Result<Vec<CheckResult>> {
    let mut results = Vec::new();

    // Exhaustive noiseless round trip at N = 6.
    let kernels = [Kernel::t2(), Kernel::t3()];
    let spec = construct_code(&kernels, &ChannelSpec::Erasure(0.5), 3)?;
    let mut round_trip_failures = 0usize;
    for m in 0..(1u64 << spec.k) {
        let message: Vec<u8> = (0..spec.k).map(|b| ((m >> b) & 1) as u8).collect();
        let codeword = crate::codec::encode(&spec, &message)?;
        let evidence: Evidence = codeword.iter().map(|&b| Posterior::certain(b)).collect();
        let outcome = crate::codec::sc_decode(&spec, &evidence)?;
        if outcome.message != message || outcome.information_tie {
            round_trip_failures += 1;
        }
    }
    results.push(CheckResult::new(
        "noiseless-round-trip",
        round_trip_failures == 0,
        format!(
            "{round_trip_failures} failures over {} messages",
            1u64 << spec.k
        ),
    ));

    // Forced-path posteriors against brute-force enumeration under random
    // soft evidence.
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let n: usize = kernels.iter().map(Kernel::size).product();
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let evidence: Evidence = (0..n)
            .map(|_| {
                let w = rng.gen_range(0.05..0.95);
                Posterior::new(w, 1.0 - w).expect("soft evidence is valid")
            })
            .collect();
        let u: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2u8)).collect();
        let forced = sc_posteriors_forced(&spec, &evidence, &u)?;
        for t in 0..n {
            let brute = brute_next_posterior(&kernels, &evidence, &u[..t])?;
            worst = worst.max((forced[t].p0() - brute.p0()).abs());
        }
    }
    results.push(CheckResult::new(
        "forced-posteriors-vs-enumeration",
        worst <= 1e-9,
        format!("max |posterior difference| {worst:.3e} (tolerance 1e-9)"),
    ));

    // Encoding is linear in the message for all-zero frozen fill.
    let mut linearity_ok = true;
    for _ in 0..10 {
        let a: Vec<u8> = (0..spec.k).map(|_| rng.gen_range(0..2u8)).collect();
        let b: Vec<u8> = (0..spec.k).map(|_| rng.gen_range(0..2u8)).collect();
        let sum: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        let ea = crate::codec::encode(&spec, &a)?;
        let eb = crate::codec::encode(&spec, &b)?;
        let esum = crate::codec::encode(&spec, &sum)?;
        let xor: Vec<u8> = ea.iter().zip(&eb).map(|(x, y)| x ^ y).collect();
        if xor != esum {
            linearity_ok = false;
        }
    }
    results.push(CheckResult::new(
        "encoding-linearity",
        linearity_ok,
        "encode(a xor b) == encode(a) xor encode(b) over 10 random pairs".into(),
    ));

    Ok(results)
}
