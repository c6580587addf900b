//! Command-line front end.
//!
//! Reports go to stdout (or `--out`), diagnostics to stderr. Exit status is
//! 0 for success, 1 for a numeric failure or an unsettled verdict, and 2 for
//! usage or resource errors.

mod output;
mod parse;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::bilateral::{
    check_bilateral_binomial, BilateralError, TruncationReport, Verdict, VerificationReport, VerificationVerdict,
};
use crate::lattice::{
    generate_layer, point_value, scan_regions, small_h_estimate, Adjacency, LatticeError, LatticePoint, RegionTag,
    RegularizedValue,
};
use crate::multinomial::{
    chain_from_angles, check_nested_reduction, check_symmetric_form, evaluate_multinomial_with_tolerance,
    unit_sum_probe_with_tolerance, ModulusChainReport, MultiTruncationReport, MultinomialError, ProbeReport,
    TheoremInstance, DEFAULT_SCHEDULE,
};

pub use output::format_float;
pub use parse::parse_complex;

const DEFAULT_NESTED_WINDOW: usize = 256;
const DEFAULT_SYMMETRIC_WINDOW: usize = 8;

#[derive(Debug, Parser)]
#[command(
    name = "pascal-bilateral",
    version,
    about = "Regularized multinomial coefficients and bilateral expansion checks"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Value of the regularized multinomial coefficient at a lattice point.
    Coeff(CoeffArgs),
    /// Export one layer of the nonnegative hyper-pyramid.
    Layer(LayerArgs),
    /// Tag every integer point of a cube by region and count hyper-pyramids.
    RegionMap(RegionArgs),
    /// Compare a bilateral expansion against the closed form.
    Verify(VerifyArgs),
    /// Sum the all-ones multinomial over a schedule of windows.
    Probe(ProbeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct CoeffArgs {
    /// Coordinates (at least two).
    #[arg(required = true, num_args = 2.., allow_negative_numbers = true)]
    coords: Vec<f64>,
    /// Also report the Gamma quotient evaluated at this small shift.
    #[arg(long)]
    oracle_h: Option<f64>,
}

#[derive(Debug, Args)]
struct LayerArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    n: u32,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RegionArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    window: i64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Include every tagged point in JSON output.
    #[arg(long)]
    points: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(subcommand)]
    kind: VerifyKind,
}

#[derive(Debug, Args)]
struct Common {
    /// Relative tolerance for the comparison.
    #[arg(long, default_value_t = 1e-6, allow_negative_numbers = true)]
    tol: f64,
    /// Truncation window K (terms −K..K per axis).
    #[arg(long)]
    window: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum VerifyKind {
    /// (1+z)^x against the bilateral binomial series.
    Binomial {
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long, allow_negative_numbers = true)]
        y: f64,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
        z: Complex64,
        #[command(flatten)]
        common: Common,
    },
    /// (1+x₁+x₂)^n against the nested reduction of the bilateral trinomial.
    Trinomial {
        #[arg(long, allow_negative_numbers = true)]
        n: f64,
        #[arg(long, allow_negative_numbers = true)]
        theta1: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        theta2: Option<f64>,
        /// Explicit variables, comma separated (overrides the angles).
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',', value_parser = parse_complex)]
        vars: Option<Vec<Complex64>>,
        #[arg(long, num_args = 2, default_values_t = [0.5, 0.5])]
        anchors: Vec<f64>,
        /// Also sum the full index box at this window.
        #[arg(long)]
        direct_window: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// (1+Σx)^n against the nested reduction for any number of variables.
    Multinomial {
        #[arg(long, allow_negative_numbers = true)]
        n: f64,
        /// Phases of variables built on the modulus chain.
        #[arg(long, num_args = 1.., allow_negative_numbers = true, value_delimiter = ',')]
        theta: Option<Vec<f64>>,
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',', value_parser = parse_complex)]
        vars: Option<Vec<Complex64>>,
        /// Anchors (default 0.5 for every variable).
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        anchors: Option<Vec<f64>>,
        #[arg(long)]
        direct_window: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// (Σx)^n against the symmetric shifted-variable sum.
    Symmetric {
        #[arg(long, allow_negative_numbers = true)]
        n: f64,
        #[arg(long, required = true, allow_hyphen_values = true, value_delimiter = ',', value_parser = parse_complex)]
        vars: Vec<Complex64>,
        /// Anchors (default 0 for every variable).
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        anchors: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct ProbeArgs {
    #[arg(long, allow_negative_numbers = true)]
    n: f64,
    #[arg(long)]
    dim: usize,
    #[arg(long, required = true, num_args = 1.., value_delimiter = ',')]
    anchors: Vec<f64>,
    #[arg(long, num_args = 1.., value_delimiter = ',', default_values_t = DEFAULT_SCHEDULE)]
    schedule: Vec<usize>,
    #[arg(long, default_value_t = 1e-6, allow_negative_numbers = true)]
    tol: f64,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Bilateral(#[from] BilateralError),
    #[error(transparent)]
    Multinomial(#[from] MultinomialError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

/// A rendered report and the exit status it implies.
struct Outcome {
    bytes: Vec<u8>,
    status: u8,
    out: Option<PathBuf>,
}

impl Outcome {
    fn json<T: Serialize>(value: &T, success: bool) -> Result<Self, CliError> {
        Ok(Self { bytes: output::to_json(value)?, status: if success { 0 } else { 1 }, out: None })
    }

    fn to(mut self, out: Option<PathBuf>) -> Self {
        self.out = out;
        self
    }
}

/// Parses the process arguments and runs the command; returns the exit status.
pub fn run() -> u8 {
    run_with(std::env::args_os(), &mut io::stdout().lock(), &mut io::stderr().lock())
}

pub fn run_with<I, T>(args: I, stdout: &mut impl Write, stderr: &mut impl Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                2
            } else {
                let _ = stdout.write_all(text.as_bytes());
                0
            };
        }
    };
    let outcome = execute(cli.command).and_then(|o| {
        match &o.out {
            Some(path) => std::fs::write(path, &o.bytes)?,
            None => stdout.write_all(&o.bytes)?,
        }
        Ok(o.status)
    });
    match outcome {
        Ok(status) => status,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

fn execute(command: Command) -> Result<Outcome, CliError> {
    match command {
        Command::Coeff(args) => coeff(args),
        Command::Layer(args) => layer(args),
        Command::RegionMap(args) => region_map(args),
        Command::Verify(args) => verify(args.kind),
        Command::Probe(args) => probe(args),
    }
}

fn check_tolerance(tol: f64) -> Result<(), CliError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--tol must be positive, got {tol}")))
    }
}

#[derive(Serialize)]
struct SmallH {
    h: f64,
    estimate: Option<f64>,
}

#[derive(Serialize)]
struct CoeffOutput<'a> {
    coords: &'a [f64],
    kind: &'static str,
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    small_h: Option<SmallH>,
}

fn coeff(args: CoeffArgs) -> Result<Outcome, CliError> {
    let point = LatticePoint::new(args.coords.clone())?;
    let result = point_value(&point);
    let kind = match result {
        RegularizedValue::Finite(_) => "Finite",
        RegularizedValue::ZeroByPoles => "ZeroByPoles",
        RegularizedValue::Divergent => "Divergent",
    };
    let small_h = match args.oracle_h {
        Some(h) if h > 0.0 && h.is_finite() => Some(SmallH { h, estimate: small_h_estimate(&point, h) }),
        Some(h) => return Err(CliError::Usage(format!("--oracle-h must be positive, got {h}"))),
        None => None,
    };
    Outcome::json(&CoeffOutput { coords: &args.coords, kind, value: result.value(), small_h }, true)
}

#[derive(Serialize)]
struct LayerEntry<'a> {
    composition: &'a [u32],
    value: f64,
}

#[derive(Serialize)]
struct LayerOutput<'a> {
    dim: usize,
    n: u32,
    count: usize,
    sum: f64,
    entries: Vec<LayerEntry<'a>>,
}

fn layer(args: LayerArgs) -> Result<Outcome, CliError> {
    let table = generate_layer(args.dim, args.n)?;
    let outcome = match args.format {
        Format::Json => {
            let entries = table.entries().map(|(composition, value)| LayerEntry { composition, value }).collect();
            let report = LayerOutput { dim: table.dim(), n: table.n(), count: table.len(), sum: table.sum(), entries };
            Outcome::json(&report, true)?
        }
        Format::Csv => {
            let mut header: Vec<String> = (1..=table.dim()).map(|i| format!("x{i}")).collect();
            header.push("value".to_string());
            let mut csv = output::CsvTable::new(&header);
            for (composition, value) in table.entries() {
                let mut row: Vec<String> = composition.iter().map(u32::to_string).collect();
                row.push(format_float(value));
                csv.row(&row);
            }
            Outcome { bytes: csv.into_bytes(), status: 0, out: None }
        }
    };
    Ok(outcome.to(args.out))
}

#[derive(Serialize)]
struct RegionCounts {
    nonnegative: usize,
    negative_pyramids: Vec<usize>,
    zero_set: usize,
    off_lattice: usize,
}

#[derive(Serialize)]
struct TaggedPoint {
    coords: Vec<i64>,
    #[serde(flatten)]
    tag: RegionTag,
}

#[derive(Serialize)]
struct RegionOutput {
    dim: usize,
    window: i64,
    adjacency: Adjacency,
    components: usize,
    counts: RegionCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<Vec<TaggedPoint>>,
}

fn region_map(args: RegionArgs) -> Result<Outcome, CliError> {
    let scan = scan_regions(args.dim, args.window)?;
    let outcome = match args.format {
        Format::Json => {
            let counts = RegionCounts {
                nonnegative: scan.count(|t| t == RegionTag::Nonnegative),
                negative_pyramids: (0..scan.dim())
                    .map(|i| scan.count(|t| t == RegionTag::NegativePyramid(i)))
                    .collect(),
                zero_set: scan.count(|t| t == RegionTag::ZeroSet),
                off_lattice: scan.count(|t| t == RegionTag::OffLattice),
            };
            let points = args.points.then(|| scan.points().map(|(coords, tag)| TaggedPoint { coords, tag }).collect());
            let report = RegionOutput {
                dim: scan.dim(),
                window: scan.window(),
                adjacency: Adjacency::PoleCell,
                components: scan.components(Adjacency::PoleCell),
                counts,
                points,
            };
            Outcome::json(&report, true)?
        }
        Format::Csv => {
            let mut header: Vec<String> = (1..=scan.dim()).map(|i| format!("x{i}")).collect();
            header.extend(["region".to_string(), "axis".to_string()]);
            let mut csv = output::CsvTable::new(&header);
            for (coords, tag) in scan.points() {
                let mut row: Vec<String> = coords.iter().map(i64::to_string).collect();
                let (name, axis) = match tag {
                    RegionTag::Nonnegative => ("Nonnegative", String::new()),
                    RegionTag::NegativePyramid(i) => ("NegativePyramid", i.to_string()),
                    RegionTag::ZeroSet => ("ZeroSet", String::new()),
                    RegionTag::OffLattice => ("OffLattice", String::new()),
                };
                row.push(name.to_string());
                row.push(axis);
                csv.row(&row);
            }
            Outcome { bytes: csv.into_bytes(), status: 0, out: None }
        }
    };
    Ok(outcome.to(args.out))
}

#[derive(Serialize)]
struct BinomialOutput {
    kind: &'static str,
    report: VerificationReport,
    series: TruncationReport,
}

#[derive(Serialize)]
struct NestedOutput {
    kind: &'static str,
    instance: TheoremInstance,
    chain: ModulusChainReport,
    report: VerificationReport,
    levels: Vec<TruncationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    direct: Option<MultiTruncationReport>,
}

#[derive(Serialize)]
struct SymmetricOutput {
    kind: &'static str,
    report: VerificationReport,
    series: MultiTruncationReport,
}

fn passed(report: &VerificationReport) -> bool {
    report.verdict == VerificationVerdict::Pass
}

fn nested(
    kind: &'static str,
    inst: TheoremInstance,
    common: &Common,
    direct_window: Option<usize>,
) -> Result<Outcome, CliError> {
    check_tolerance(common.tol)?;
    let window = common.window.unwrap_or(DEFAULT_NESTED_WINDOW);
    let check = check_nested_reduction(&inst, window, common.tol)?;
    let direct = direct_window.map(|w| evaluate_multinomial_with_tolerance(&inst, w, common.tol)).transpose()?;
    let success = passed(&check.report);
    let levels = check.reduction.map(|r| r.levels).unwrap_or_default();
    let report = NestedOutput { kind, instance: inst, chain: check.chain, report: check.report, levels, direct };
    Outcome::json(&report, success)
}

fn verify(kind: VerifyKind) -> Result<Outcome, CliError> {
    match kind {
        VerifyKind::Binomial { x, y, z, common } => {
            check_tolerance(common.tol)?;
            let (report, rhs) = check_bilateral_binomial(x, y, z, common.tol, common.window)?;
            Outcome::json(&BinomialOutput { kind: "binomial", report, series: rhs.series }, passed(&report))
        }
        VerifyKind::Trinomial { n, theta1, theta2, vars, anchors, direct_window, common } => {
            let vars = match (vars, theta1, theta2) {
                (Some(v), _, _) if v.len() == 2 => v,
                (Some(v), _, _) => return Err(CliError::Usage(format!("--vars needs 2 values, got {}", v.len()))),
                (None, Some(t1), Some(t2)) => chain_from_angles(&[t1, t2]),
                _ => return Err(CliError::Usage("give --theta1 and --theta2, or --vars".to_string())),
            };
            let inst = TheoremInstance::new(n, vars, anchors)?;
            nested("trinomial", inst, &common, direct_window)
        }
        VerifyKind::Multinomial { n, theta, vars, anchors, direct_window, common } => {
            let vars = match (vars, theta) {
                (Some(v), _) => v,
                (None, Some(t)) => chain_from_angles(&t),
                (None, None) => return Err(CliError::Usage("give --theta or --vars".to_string())),
            };
            let anchors = anchors.unwrap_or_else(|| vec![0.5; vars.len()]);
            let inst = TheoremInstance::new(n, vars, anchors)?;
            nested("multinomial", inst, &common, direct_window)
        }
        VerifyKind::Symmetric { n, vars, anchors, common } => {
            check_tolerance(common.tol)?;
            let anchors = anchors.unwrap_or_else(|| vec![0.0; vars.len()]);
            let window = common.window.unwrap_or(DEFAULT_SYMMETRIC_WINDOW);
            let (report, series) = check_symmetric_form(n, &vars, &anchors, window, common.tol)?;
            Outcome::json(&SymmetricOutput { kind: "symmetric", report, series }, passed(&report))
        }
    }
}

#[derive(Serialize)]
struct ProbeOutput<'a> {
    n: f64,
    dim: usize,
    anchors: &'a [f64],
    #[serde(flatten)]
    probe: ProbeReport,
}

fn probe(args: ProbeArgs) -> Result<Outcome, CliError> {
    check_tolerance(args.tol)?;
    if args.anchors.len() != args.dim {
        return Err(CliError::Usage(format!("--anchors needs {} values, got {}", args.dim, args.anchors.len())));
    }
    let probe = unit_sum_probe_with_tolerance(args.n, args.dim, &args.anchors, &args.schedule, args.tol)?;
    let converged = probe.verdict == Verdict::Converged;
    Outcome::json(&ProbeOutput { n: args.n, dim: args.dim, anchors: &args.anchors, probe }, converged)
}
