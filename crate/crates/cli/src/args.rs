//! Command-line grammar `riemannlab <group> <verb> [--key value]...`.

use std::path::PathBuf;

use clap::{ArgMatches, Args, Command, Parser, Subcommand, ValueEnum};
use riemannlab_core::{RationalTorsion, RunConfig};

/// Numerical laboratory for binormal-flow polygons and the Riemann function.
#[derive(Debug, Parser)]
#[command(name = "riemannlab", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub group: Group,
}

/// Command groups.
#[derive(Debug, Subcommand)]
pub enum Group {
    /// Riemann-function family evaluators.
    #[command(subcommand)]
    Theta(ThetaVerb),
    /// Quadratic Gauss sums.
    #[command(subcommand)]
    Gauss(GaussVerb),
    /// Self-similar corner profile.
    #[command(subcommand)]
    Ss(SsVerb),
    /// Corner remainder system.
    #[command(subcommand)]
    Nls(NlsVerb),
    /// Parallel-frame evolution at the central corner.
    #[command(subcommand)]
    Frame(FrameVerb),
    /// Direct Schrödinger-map simulation.
    #[command(subcommand)]
    Bf(BfVerb),
    /// Multifractal diagnostics.
    #[command(subcommand)]
    Mf(MfVerb),
}

/// Options shared by every verb.
#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Directory receiving the artifacts.
    #[arg(long = "out", default_value = ".")]
    pub out: PathBuf,
    /// Also write an SVG figure where the command has one.
    #[arg(long = "svg", default_value_t = false)]
    pub svg: bool,
    /// Print the run configuration as JSON and exit without computing.
    #[arg(long = "dry-run", default_value_t = false)]
    pub dry_run: bool,
}

/// Evaluated function of `theta eval`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThetaFunction {
    /// `𝔯(t) = t + Σ (e^{itj²}−1)/(ij²)`.
    #[value(name = "R")]
    R,
    /// `φ_D(t) = Σ_{j≥1} e^{itj²}/(ij²)`.
    #[value(name = "phi")]
    Phi,
    /// `𝔯_{n,m}(t)`.
    #[value(name = "nm")]
    Nm,
    /// `R̃(t)` of turning `Γ` and twist `ω`.
    #[value(name = "rtilde")]
    RTilde,
    /// Closed form of the helical corner integral.
    #[value(name = "helix")]
    Helix,
}

#[derive(Debug, Subcommand)]
pub enum ThetaVerb {
    /// Tabulates a truncated sum on a uniform grid of `t`.
    Eval(ThetaEval),
}

#[derive(Debug, Args)]
pub struct ThetaEval {
    /// Function to evaluate.
    #[arg(long = "function", value_enum, default_value = "R")]
    pub function: ThetaFunction,
    /// First time.
    #[arg(long = "t0", allow_negative_numbers = true, default_value_t = 0.0)]
    pub t0: f64,
    /// Last time.
    #[arg(long = "t1", allow_negative_numbers = true, default_value = "6.2832")]
    pub t1: f64,
    /// Number of intervals; `steps + 1` rows are written.
    #[arg(long = "steps", default_value_t = 2000)]
    pub steps: usize,
    /// Truncation parameter.
    #[arg(long = "N", default_value_t = 100_000)]
    pub big_n: u64,
    /// Shift of `𝔯_{n,m}`.
    #[arg(long = "n", default_value_t = 0)]
    pub n: u64,
    /// Dilation of `𝔯_{n,m}`.
    #[arg(long = "m", default_value_t = 1)]
    pub m: u64,
    /// Turning parameter of `R̃`.
    #[arg(long = "Gamma", allow_negative_numbers = true, default_value_t = 1.0)]
    pub gamma: f64,
    /// Twist `ω₀ = aπ/b` as `a/b`.
    #[arg(long = "omega", default_value = "0/1")]
    pub omega: RationalTorsion,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Subcommand)]
pub enum GaussVerb {
    /// `Σ_{r mod q} e^{2πi(p(mr−n)²)/q}`.
    Sum(GaussSum),
    /// Talbot coefficients at `t = p/q`.
    Talbot(GaussTalbot),
}

#[derive(Debug, Args)]
pub struct GaussSum {
    /// Numerator.
    #[arg(long = "p", allow_negative_numbers = true)]
    pub p: i64,
    /// Denominator.
    #[arg(long = "q")]
    pub q: u64,
    /// Dilation.
    #[arg(long = "m", default_value_t = 1)]
    pub m: u64,
    /// Shift.
    #[arg(long = "n", default_value_t = 0)]
    pub n: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct GaussTalbot {
    /// Numerator.
    #[arg(long = "p", allow_negative_numbers = true)]
    pub p: i64,
    /// Denominator.
    #[arg(long = "q")]
    pub q: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Subcommand)]
pub enum SsVerb {
    /// Integrates the profile and fits its asymptotic frames.
    Profile(SsProfile),
}

#[derive(Debug, Args)]
pub struct SsProfile {
    /// Curvature `c ≥ 0`.
    #[arg(long = "c", allow_negative_numbers = true)]
    pub c: f64,
    /// Half-length `S` of the arclength interval.
    #[arg(long = "S", default_value_t = 200.0)]
    pub s_max: f64,
    /// Integration step.
    #[arg(long = "step", default_value = "1e-3")]
    pub step: f64,
    /// Write every this many samples.
    #[arg(long = "stride", default_value_t = 100)]
    pub stride: usize,
    #[command(flatten)]
    pub output: Output,
}

/// Corner data shared by the polygon commands.
#[derive(Debug, Clone, Args)]
pub struct Corners {
    /// Scale parameter.
    #[arg(long = "n", default_value_t = 16)]
    pub n: u64,
    /// Support exponent.
    #[arg(long = "nu", default_value_t = 1.0)]
    pub nu: f64,
    /// Turning parameter `Γ = n(π − θ_n)`.
    #[arg(long = "Gamma", allow_negative_numbers = true, default_value_t = 1.0)]
    pub gamma: f64,
    /// Twist `ω₀ = aπ/b` as `a/b`.
    #[arg(long = "omega", default_value = "0/1")]
    pub omega: RationalTorsion,
}

#[derive(Debug, Subcommand)]
pub enum NlsVerb {
    /// Integrates the remainder system.
    Run(NlsRun),
    /// Measures the remainder norms over several `n`.
    Decay(NlsDecay),
}

#[derive(Debug, Args)]
pub struct NlsRun {
    #[command(flatten)]
    pub corners: Corners,
    /// Start time.
    #[arg(long = "eps", default_value = "1e-4")]
    pub eps: f64,
    /// Final time.
    #[arg(long = "T", default_value_t = 0.25)]
    pub t_end: f64,
    /// Integrator tolerance.
    #[arg(long = "tol", default_value = "1e-10")]
    pub tol: f64,
    /// Number of geometric output times.
    #[arg(long = "samples", default_value_t = 16)]
    pub samples: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct NlsDecay {
    /// Comma-separated scale parameters.
    #[arg(long = "n-list", value_delimiter = ',', default_value = "8,16,32")]
    pub n_list: Vec<u64>,
    /// Support exponent.
    #[arg(long = "nu", default_value_t = 1.0)]
    pub nu: f64,
    /// Turning parameter.
    #[arg(long = "Gamma", allow_negative_numbers = true, default_value_t = 1.0)]
    pub gamma: f64,
    /// Twist as `a/b`.
    #[arg(long = "omega", default_value = "0/1")]
    pub omega: RationalTorsion,
    /// Weight exponent of the sup norms.
    #[arg(long = "gamma", default_value_t = 0.6)]
    pub weight: f64,
    /// Integrability exponent of the predicted rates.
    #[arg(long = "q", default_value_t = 4.0)]
    pub q: f64,
    /// Start time.
    #[arg(long = "eps", default_value = "1e-4")]
    pub eps: f64,
    /// Final time.
    #[arg(long = "T", default_value_t = 0.25)]
    pub t_end: f64,
    /// Integrator tolerance.
    #[arg(long = "tol", default_value = "1e-12")]
    pub tol: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Subcommand)]
pub enum FrameVerb {
    /// Corner trajectory and its distance to the limit curve.
    Trajectory(FrameTrajectory),
}

#[derive(Debug, Args)]
pub struct FrameTrajectory {
    #[command(flatten)]
    pub corners: Corners,
    /// Final time.
    #[arg(long = "T", default_value_t = 0.25)]
    pub t_end: f64,
    /// Start time.
    #[arg(long = "eps", default_value = "1e-4")]
    pub eps: f64,
    /// Integrator tolerance.
    #[arg(long = "tol", default_value = "1e-10")]
    pub tol: f64,
    /// Number of geometric output times.
    #[arg(long = "samples", default_value_t = 64)]
    pub samples: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Subcommand)]
pub enum BfVerb {
    /// Runs the Schrödinger map on a mollified polygonal line.
    Simulate(BfSimulate),
    /// Compares the simulated corner with the frame pipeline.
    Compare(BfCompare),
}

/// Grid shared by the simulator commands.
#[derive(Debug, Clone, Args)]
pub struct Grid {
    /// Cells per edge.
    #[arg(long = "cells", default_value_t = 64)]
    pub cells: usize,
    /// Edges beyond the outermost corner on each side.
    #[arg(long = "margin", default_value_t = 4)]
    pub margin: usize,
    /// Mollification width in cells.
    #[arg(long = "w", default_value_t = 4)]
    pub w: usize,
    /// Final time.
    #[arg(long = "T", default_value_t = 0.05)]
    pub t_end: f64,
}

#[derive(Debug, Args)]
pub struct BfSimulate {
    #[command(flatten)]
    pub corners: Corners,
    #[command(flatten)]
    pub grid: Grid,
    /// Number of curve dumps after the initial one.
    #[arg(long = "dumps", default_value_t = 4)]
    pub dumps: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct BfCompare {
    #[command(flatten)]
    pub corners: Corners,
    #[command(flatten)]
    pub grid: Grid,
    /// First comparison time.
    #[arg(long = "t-min", default_value = "1e-3")]
    pub t_min: f64,
    /// Number of geometric comparison times.
    #[arg(long = "samples", default_value_t = 40)]
    pub samples: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Subcommand)]
pub enum MfVerb {
    /// Structure functions and their fitted slopes.
    Structure(MfStructure),
    /// Frisch–Parisi spectrum of the analytic exponent law.
    Spectrum(MfSpectrum),
}

#[derive(Debug, Args)]
pub struct MfStructure {
    /// Comma-separated dyadic scales.
    #[arg(long = "N-list", value_delimiter = ',', default_value = "16,32,64,128")]
    pub n_list: Vec<u64>,
    /// Comma-separated exponents.
    #[arg(long = "p-list", value_delimiter = ',', default_value = "2,4,6")]
    pub p_list: Vec<f64>,
    /// Shift.
    #[arg(long = "n", default_value_t = 0)]
    pub n: u64,
    /// Dilation.
    #[arg(long = "m", default_value_t = 1)]
    pub m: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct MfSpectrum {
    /// Smallest Hölder exponent.
    #[arg(long = "beta-min", allow_negative_numbers = true, default_value_t = 0.5)]
    pub beta_min: f64,
    /// Largest Hölder exponent.
    #[arg(long = "beta-max", allow_negative_numbers = true, default_value_t = 0.75)]
    pub beta_max: f64,
    /// Number of intervals.
    #[arg(long = "steps", default_value_t = 250)]
    pub steps: usize,
    #[command(flatten)]
    pub output: Output,
}

impl Group {
    /// Output options of the selected verb.
    pub fn output(&self) -> &Output {
        match self {
            Group::Theta(ThetaVerb::Eval(a)) => &a.output,
            Group::Gauss(GaussVerb::Sum(a)) => &a.output,
            Group::Gauss(GaussVerb::Talbot(a)) => &a.output,
            Group::Ss(SsVerb::Profile(a)) => &a.output,
            Group::Nls(NlsVerb::Run(a)) => &a.output,
            Group::Nls(NlsVerb::Decay(a)) => &a.output,
            Group::Frame(FrameVerb::Trajectory(a)) => &a.output,
            Group::Bf(BfVerb::Simulate(a)) => &a.output,
            Group::Bf(BfVerb::Compare(a)) => &a.output,
            Group::Mf(MfVerb::Structure(a)) => &a.output,
            Group::Mf(MfVerb::Spectrum(a)) => &a.output,
        }
    }
}

/// Builds the run record from the parsed matches, echoing every parameter
/// (defaults included) under its flag name, exactly as typed, in declaration
/// order.
pub fn run_config(command: &Command, matches: &ArgMatches, output: &Output) -> RunConfig {
    let (group, group_matches) = matches.subcommand().expect("a group is required");
    let (verb, verb_matches) = group_matches.subcommand().expect("a verb is required");
    let verb_command = command
        .find_subcommand(group)
        .and_then(|g| g.find_subcommand(verb))
        .expect("matched verbs exist in the grammar");
    let parameters = verb_command
        .get_arguments()
        .filter_map(|arg| {
            let long = arg.get_long()?;
            if matches!(long, "out" | "svg" | "dry-run") {
                return None;
            }
            let raw = verb_matches.get_raw(arg.get_id().as_str())?;
            let values: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
            Some((long.to_owned(), values.join(",")))
        })
        .collect();
    RunConfig {
        group: group.to_owned(),
        verb: verb.to_owned(),
        parameters,
        output_dir: output.out.clone(),
        svg: output.svg,
    }
}
