//! Command-line toolkit for multi-kernel polar codes: code construction,
//! kernel analysis, polarization studies, exponent calculations,
//! Monte-Carlo simulation, and library self-checks.
//!
//! Exit codes: 0 on success, 1 on runtime or verification failure, 2 on
//! usage errors. All JSON and CSV output is byte-deterministic for fixed
//! inputs; simulation parallelism honors `RAYON_NUM_THREADS`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mkpolar::analysis::{
    empirical_profile, inequality_report_erasure_grid, martingale_report_from_tree,
    multi_kernel_exponent, polarization_profile,
};
use mkpolar::channel::ChannelSpec;
use mkpolar::construction::{construct_code, CodeSpec};
use mkpolar::gf2::BitMatrix;
use mkpolar::kernel::{validate_matrix, Kernel};
use mkpolar::sim::run_fer_simulation;
use mkpolar::synthesis::bec_tree;
use mkpolar::verify::{run_all, run_suite, SUITES};
use mkpolar::Result;

#[derive(Parser)]
#[command(
    name = "mkpolar",
    version,
    about = "Multi-kernel polar code toolkit",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a code specification and write it as JSON.
    Construct(ConstructArgs),
    /// Report validity, partial distances, exponent, and step-inequality
    /// candidates for one kernel.
    AnalyzeKernel(AnalyzeKernelArgs),
    /// Track polarization of an erasure channel through a kernel stack.
    Polarize(PolarizeArgs),
    /// Combined exponent of a kernel usage profile.
    Exponent(ExponentArgs),
    /// Monte-Carlo frame/bit error simulation of a constructed code.
    Simulate(SimulateArgs),
    /// Run named invariant suites; nonzero exit if any check fails.
    Verify(VerifyArgs),
}

/// Comma-separated kernels, each a size (`2`, `3`) or name (`T2`, `T3`).
#[derive(Clone)]
struct KernelList(Vec<Kernel>);

fn parse_kernel_token(token: &str) -> Result<Kernel> {
    let token = token.trim();
    if token.chars().all(|c| c.is_ascii_digit()) && !token.is_empty() {
        Kernel::by_size(token.parse().map_err(|_| {
            mkpolar::Error::UnknownKernel(format!("unreadable kernel size '{token}'"))
        })?)
    } else {
        Kernel::by_name(token)
    }
}

fn parse_kernel_list(text: &str) -> std::result::Result<KernelList, String> {
    text.split(',')
        .map(|tok| parse_kernel_token(tok).map_err(|e| e.to_string()))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(KernelList)
}

/// `size:frequency` pairs, e.g. `2:0.5,3:0.5`.
#[derive(Clone)]
struct Profile(Vec<(Kernel, f64)>);

fn parse_profile(text: &str) -> std::result::Result<Profile, String> {
    let mut entries = Vec::new();
    for part in text.split(',') {
        let (kernel, freq) = part
            .split_once(':')
            .ok_or_else(|| format!("profile entry '{part}' is not kernel:frequency"))?;
        let kernel = parse_kernel_token(kernel).map_err(|e| e.to_string())?;
        let freq: f64 = freq
            .trim()
            .parse()
            .map_err(|_| format!("unreadable frequency in '{part}'"))?;
        entries.push((kernel, freq));
    }
    Ok(Profile(entries))
}

#[derive(Args)]
struct ConstructArgs {
    /// Kernel stack, outermost first (e.g. 2,3,2 or T2,T3,T2).
    #[arg(long, value_parser = parse_kernel_list)]
    kernels: KernelList,
    /// Design channel (bec:eps, bsc:p, or table:...).
    #[arg(long)]
    channel: ChannelSpec,
    /// Information bits.
    #[arg(long = "K")]
    k: usize,
    /// Write the spec JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeKernelArgs {
    /// Built-in kernel name (T2 or T3).
    #[arg(long, conflicts_with = "file")]
    kernel: Option<String>,
    /// Read the kernel matrix from a text file (rows of 0/1).
    #[arg(long, required_unless_present = "kernel")]
    file: Option<PathBuf>,
}

#[derive(Args)]
struct PolarizeArgs {
    /// Kernel stack, outermost first.
    #[arg(long, value_parser = parse_kernel_list)]
    kernels: KernelList,
    /// Design channel; must be an erasure channel.
    #[arg(long)]
    channel: ChannelSpec,
    /// Polarization threshold in (0, 0.5).
    #[arg(long, default_value_t = 0.01)]
    threshold: f64,
    /// Also dump per-leaf reliability figures as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ExponentArgs {
    /// Kernel usage profile, e.g. 2:0.5,3:0.5.
    #[arg(long, value_parser = parse_profile)]
    profile: Profile,
}

#[derive(Args)]
struct SimulateArgs {
    /// Code specification JSON produced by `construct`.
    #[arg(long)]
    spec: PathBuf,
    /// Channel to simulate (bec:eps or bsc:p).
    #[arg(long)]
    channel: ChannelSpec,
    /// Number of Monte-Carlo trials.
    #[arg(long)]
    trials: u64,
    /// Base seed; trial t uses stream t of this seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print a CSV header and row instead of JSON.
    #[arg(long)]
    csv: bool,
}

/// `all` plus every entry of [`SUITES`]; a unit test keeps them in sync.
const SUITE_CHOICES: [&str; 7] = [
    "all",
    "martingale",
    "step-inequality",
    "entropy",
    "z-bounds",
    "synthesis-oracle",
    "codec",
];

#[derive(Args)]
struct VerifyArgs {
    /// Suite name, or `all`.
    #[arg(long, default_value = "all", value_parser = clap::builder::PossibleValuesParser::new(SUITE_CHOICES))]
    suite: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Construct(args) => construct(args),
        Command::AnalyzeKernel(args) => analyze_kernel(args),
        Command::Polarize(args) => polarize(args),
        Command::Exponent(args) => exponent(args),
        Command::Simulate(args) => simulate(args),
        Command::Verify(args) => verify(args),
    }
}

fn construct(args: ConstructArgs) -> Result<ExitCode> {
    let spec = construct_code(&args.kernels.0, &args.channel, args.k)?;
    let json = spec.to_json();
    match args.out {
        Some(path) => {
            std::fs::write(&path, &json)?;
            println!(
                "wrote {} (N={}, K={}, design {}, mode {})",
                path.display(),
                spec.n,
                spec.k,
                spec.design_channel,
                spec.reliability_mode
            );
        }
        None => print!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn analyze_kernel(args: AnalyzeKernelArgs) -> Result<ExitCode> {
    let (label, matrix) = match (&args.kernel, &args.file) {
        (Some(name), _) => {
            let kernel = Kernel::by_name(name)?;
            (kernel.name().to_string(), kernel.matrix().clone())
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            let matrix: BitMatrix = text.parse()?;
            (path.display().to_string(), matrix)
        }
        (None, None) => unreachable!("clap enforces one source"),
    };
    let validity = validate_matrix(&matrix)?;
    println!("kernel {label} ({}x{})", matrix.rows(), matrix.cols());
    println!("  invertible:            {}", validity.invertible);
    println!(
        "  partial distances:     {:?}",
        validity.partial_distances
    );
    println!("  distances in range:    {}", validity.distances_in_range);
    println!(
        "  some distance >= 2:    {}",
        validity.has_distance_at_least_two
    );
    println!("  accepted:              {}", validity.accepted());
    if !validity.accepted() {
        println!("kernel rejected; no exponent or inequality analysis");
        return Ok(ExitCode::SUCCESS);
    }
    let kernel = Kernel::from_matrix(label, matrix)?;
    println!("  exponent:              {}", kernel.exponent());
    println!();
    println!("step-inequality candidates on the erasure grid (99 points):");
    println!("  alpha beta  worst-margin  holds");
    for alpha in 1..=2u32 {
        for beta in 1..=3u32 {
            let report = inequality_report_erasure_grid(&kernel, alpha, beta, 100)?;
            println!(
                "  {:>5} {:>4}  {:>12.3e}  {}",
                report.alpha, report.beta, report.worst_margin, report.pass
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn polarize(args: PolarizeArgs) -> Result<ExitCode> {
    let eps = args.channel.as_erasure().ok_or_else(|| {
        mkpolar::Error::InvalidParameter(
            "polarize tracks exact erasure evolution; use a bec channel".into(),
        )
    })?;
    let tree = bec_tree(eps, &args.kernels.0)?;
    let martingale = martingale_report_from_tree(&tree)?;
    let profile = polarization_profile(&tree, args.threshold)?;
    println!(
        "erasure {} through {} kernels, {} leaves, threshold {}",
        eps,
        tree.kernels().len(),
        tree.leaf_count(),
        args.threshold
    );
    println!("stage      nodes     mean-I   deviation   low   middle     high");
    for (stage, fractions) in martingale.stages.iter().zip(&profile) {
        println!(
            "{:>5} {:>10} {:>10.6} {:>11.3e} {:>8.4} {:>8.4} {:>8.4}",
            stage.stage,
            stage.nodes,
            stage.mean_mutual_info,
            stage.deviation,
            fractions.fraction_low,
            fractions.fraction_middle,
            fractions.fraction_high
        );
    }
    println!(
        "max stage deviation {:.3e}; exponent of this stack {}",
        martingale.max_deviation,
        empirical_profile(&args.kernels.0)?.combined
    );
    if let Some(path) = args.csv {
        std::fs::write(&path, tree.to_csv())?;
        println!("wrote per-leaf figures to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn exponent(args: ExponentArgs) -> Result<ExitCode> {
    let profile = multi_kernel_exponent(&args.profile.0)?;
    println!("kernel  size  frequency  exponent");
    for entry in &profile.entries {
        println!(
            "{:>6} {:>5} {:>10} {:>9.6}",
            entry.kernel, entry.size, entry.frequency, entry.exponent
        );
    }
    println!("combined exponent: {}", profile.combined);
    Ok(ExitCode::SUCCESS)
}

fn simulate(args: SimulateArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.spec)?;
    let spec = CodeSpec::from_json(&text)?;
    let report = run_fer_simulation(&spec, &args.channel, args.trials, args.seed)?;
    if let Some(path) = &args.out {
        std::fs::write(path, report.to_json()?)?;
    }
    if args.csv {
        println!("{}", mkpolar::sim::FerReport::csv_header());
        println!("{}", report.to_csv_row());
    } else {
        print!("{}", report.to_json()?);
    }
    eprintln!(
        "# {} trials in {:.3}s ({} frame errors)",
        report.trials, report.wall_time_s, report.frame_errors
    );
    Ok(ExitCode::SUCCESS)
}

fn verify(args: VerifyArgs) -> Result<ExitCode> {
    let suites: Vec<(&str, Vec<mkpolar::verify::CheckResult>)> = if args.suite == "all" {
        run_all()?
            .into_iter()
            .map(|(name, results)| (name, results))
            .collect()
    } else {
        let name: &str = SUITES
            .iter()
            .copied()
            .find(|&s| s == args.suite.as_str())
            .ok_or_else(|| {
                mkpolar::Error::InvalidParameter(format!(
                    "unknown suite '{}'; available: all, {}",
                    args.suite,
                    SUITES.join(", ")
                ))
            })?;
        vec![(name, run_suite(name)?)]
    };
    let mut failures = 0usize;
    let mut total = 0usize;
    for (suite, results) in &suites {
        for check in results {
            total += 1;
            let verdict = if check.pass { "PASS" } else { "FAIL" };
            if !check.pass {
                failures += 1;
            }
            println!("{verdict} {suite}/{}: {}", check.name, check.detail);
        }
    }
    println!("{total} checks, {failures} failures");
    if failures == 0 {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_tokens_parse() {
        assert_eq!(parse_kernel_token("2").unwrap().name(), "T2");
        assert_eq!(parse_kernel_token("T3").unwrap().name(), "T3");
        assert_eq!(parse_kernel_token(" t2 ").unwrap().name(), "T2");
        assert!(parse_kernel_token("5").is_err());
        assert!(parse_kernel_token("bogus").is_err());
    }

    #[test]
    fn kernel_lists_parse() {
        let list = parse_kernel_list("2,3,T2").unwrap();
        let names: Vec<&str> = list.0.iter().map(Kernel::name).collect();
        assert_eq!(names, ["T2", "T3", "T2"]);
        assert!(parse_kernel_list("2,,3").is_err());
    }

    #[test]
    fn profiles_parse() {
        let profile = parse_profile("2:0.5,3:0.5").unwrap();
        assert_eq!(profile.0.len(), 2);
        assert_eq!(profile.0[0].0.name(), "T2");
        assert_eq!(profile.0[1].1, 0.5);
        assert!(parse_profile("2=0.5").is_err());
        assert!(parse_profile("2:x").is_err());
    }

    #[test]
    fn cli_declaration_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn suite_choices_track_library_suites() {
        assert_eq!(SUITE_CHOICES[0], "all");
        assert_eq!(&SUITE_CHOICES[1..], SUITES);
    }
}
