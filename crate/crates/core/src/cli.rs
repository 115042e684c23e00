//! The `cantor` command line: synthesize, verify, levels, curve.
//!
//! Every option may also come from a JSON file passed with `--config`; a
//! flag given on the command line wins over the file.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::construction::{default_headroom, synthesize_lambda, CantorApproximation, LambdaSequence, MAX_LEVEL};
use crate::curves::{
    arclength_reparametrize, attainment_scan, build_f, build_h, chord_ratio_inf, curve_target, distance_function,
    find_rho, AttainmentScan, ParametricCurve, ScanConfig, RHO_GRID,
};
use crate::density::{
    check_lemma2, check_lemma4, default_samples, verify_target, Certificate, Lemma4Config, VerifyConfig,
};
use crate::enclosure::{to_f64, Precision};
use crate::error::Error;
use crate::figure::{levels_csv, levels_svg, MAX_FIGURE_LEVEL};
use crate::io::{decimal, read_sequence_document, sequence_to_json, SequenceDocument};
use crate::target::{decreasing_envelope, default_envelope_grid, parse_rational, TargetFunction};

pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const SYNTHESIS: i32 = 2;
    pub const CERTIFICATE: i32 = 3;
    pub const INDETERMINATE: i32 = 4;
    pub const CURVE: i32 = 5;
    pub const USAGE: i32 = 64;
    pub const NO_INPUT: i32 = 66;
}

pub const PRECISION_ENV: &str = "CANTOR_PRECISION";

const AFTER_HELP: &str = "\
Exit codes: 0 success, 1 malformed input, 2 synthesis rejected,
3 certificate failed, 4 certificate undecided after escalation,
5 curve error, 64 usage, 66 missing input.

Precision is given as bits or as 2^-bits (32..256). It is read from
--precision, then the config file, then CANTOR_PRECISION, default 64.

--config takes a JSON object with an optional \"precision\" and one
section per subcommand whose keys are the long flag names, e.g.
{\"synthesize\": {\"f\": \"max(1/2, 1 - sqrt(x))\", \"depth\": 12}}.";

#[derive(Debug, Parser)]
#[command(name = "cantor", version, about = "Fat Cantor sets with certified density bounds, and Lipschitz functions on curves", after_help = AFTER_HELP)]
pub struct Cli {
    /// JSON file supplying defaults for any flag.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Working precision: bits, or 2^-bits.
    #[arg(long, global = true)]
    pub precision: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a lambda sequence whose set stays below a target density.
    Synthesize(SynthesizeArgs),
    /// Run the density oracles and certify a sequence against a target.
    Verify(VerifyArgs),
    /// Draw the first levels as SVG and list them as CSV.
    Levels(LevelsArgs),
    /// Chord ratios, rho, and attainment scans of F and H on a curve.
    Curve(CurveArgs),
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default)]
pub struct TargetArgs {
    /// Target expression in x, e.g. "max(1/2, 1 - sqrt(x))".
    #[arg(long = "f", value_name = "EXPR", conflicts_with = "table")]
    pub f: Option<String>,
    /// Target as a file of "x, y" lines.
    #[arg(long, value_name = "PATH")]
    pub table: Option<PathBuf>,
    /// Replace the target by its non-increasing envelope.
    #[arg(long)]
    pub envelope: bool,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default)]
pub struct SynthesizeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    /// Depth N of the explicit prefix [default: 14].
    #[arg(long)]
    pub depth: Option<usize>,
    /// Headroom c added to the schedule [default: 1/8].
    #[arg(long)]
    pub headroom: Option<String>,
    /// Output sequence file [default: sequence.json].
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default)]
pub struct VerifyArgs {
    /// Sequence file written by `synthesize`.
    #[arg(long, value_name = "PATH")]
    pub sequence: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    /// Level N used for the check [default: the sequence depth].
    #[arg(long)]
    pub level: Option<usize>,
    /// Log-spaced certificate samples [default: 128].
    #[arg(long)]
    pub samples: Option<usize>,
    /// Random window lengths for the sliding-window oracle [default: 32].
    #[arg(long)]
    pub oracle_samples: Option<usize>,
    /// Random samples per band for the monotone-density check [default: 100].
    #[arg(long)]
    pub band_samples: Option<usize>,
    /// Seed for the oracle samples [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Certificate JSON output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Density profile CSV output.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevelsArgs {
    /// Sequence file.
    #[arg(long, value_name = "PATH", conflicts_with = "lambda")]
    pub sequence: Option<PathBuf>,
    /// Comma-separated lambdas, e.g. "1/3,1/3".
    #[arg(long)]
    pub lambda: Option<String>,
    /// Deepest level drawn, at most 10 [default: min(depth, 10)].
    #[arg(long)]
    pub n: Option<usize>,
    /// SVG output; without --svg or --csv the SVG goes to stdout.
    #[arg(long, value_name = "PATH")]
    pub svg: Option<PathBuf>,
    /// CSV output of the exact endpoints.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveArgs {
    /// Built-in curve: line, circle, ellipse, parabola, spiral [default: circle].
    #[arg(long, conflicts_with = "poly")]
    pub name: Option<String>,
    /// Built-in parameter as key=value, repeatable.
    #[arg(long, value_name = "KEY=VALUE")]
    pub param: Vec<String>,
    /// Polynomial curve, e.g. "(t, t^2/2)".
    #[arg(long)]
    pub poly: Option<String>,
    /// Parameter domain of a polynomial curve as "a,b" [default: 0,1].
    #[arg(long)]
    pub domain: Option<String>,
    /// Sequence file; without it a set adapted to the curve is synthesized.
    #[arg(long, value_name = "PATH")]
    pub sequence: Option<PathBuf>,
    /// Depth of the synthesized set [default: 14].
    #[arg(long)]
    pub depth: Option<usize>,
    /// Scan the distance to the first point instead of F and H.
    #[arg(long)]
    pub distance_demo: bool,
    /// Coarse grid size of the scans [default: 400].
    #[arg(long)]
    pub coarse: Option<usize>,
    /// Refinement rounds of the scans [default: 6].
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Scan CSV of F (or of the distance function).
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    /// Scan CSV of H.
    #[arg(long, value_name = "PATH")]
    pub csv_h: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    precision: Option<String>,
    synthesize: Option<SynthesizeArgs>,
    verify: Option<VerifyArgs>,
    levels: Option<LevelsArgs>,
    curve: Option<CurveArgs>,
}

trait Merge {
    fn merge(self, file: Self) -> Self;
}

macro_rules! merge_fields {
    ($ty:ty { $($opt:ident),* } bools { $($flag:ident),* } nested { $($sub:ident),* }) => {
        impl Merge for $ty {
            #[allow(unused_variables)]
            fn merge(self, file: Self) -> Self {
                Self {
                    $($opt: self.$opt.or(file.$opt),)*
                    $($flag: self.$flag || file.$flag,)*
                    $($sub: self.$sub.merge(file.$sub),)*
                }
            }
        }
    };
}

merge_fields!(TargetArgs { f, table } bools { envelope } nested {});
merge_fields!(SynthesizeArgs { depth, headroom, out } bools {} nested { target });
merge_fields!(VerifyArgs { sequence, level, samples, oracle_samples, band_samples, seed, out, csv } bools {} nested { target });
merge_fields!(LevelsArgs { sequence, lambda, n, svg, csv } bools {} nested {});

impl Merge for CurveArgs {
    fn merge(self, file: Self) -> Self {
        CurveArgs {
            name: self.name.or(file.name),
            param: if self.param.is_empty() { file.param } else { self.param },
            poly: self.poly.or(file.poly),
            domain: self.domain.or(file.domain),
            sequence: self.sequence.or(file.sequence),
            depth: self.depth.or(file.depth),
            distance_demo: self.distance_demo || file.distance_demo,
            coarse: self.coarse.or(file.coarse),
            rounds: self.rounds.or(file.rounds),
            csv: self.csv.or(file.csv),
            csv_h: self.csv_h.or(file.csv_h),
        }
    }
}

/// A failed run: exit code plus message.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: exit::USAGE, message: message.into() }
    }

    fn no_input(message: impl Into<String>) -> Self {
        Failure { code: exit::NO_INPUT, message: message.into() }
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidTarget(_) | Error::SynthesisUnverified(_) => exit::SYNTHESIS,
        Error::CertificateFailed { .. } => exit::CERTIFICATE,
        Error::CertificateIndeterminate { .. } => exit::INDETERMINATE,
        Error::DegenerateDerivative { .. } | Error::NumericalInconsistency(_) => exit::CURVE,
        Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => exit::NO_INPUT,
        Error::InvalidArgument(_)
        | Error::Parse(_)
        | Error::Domain(_)
        | Error::ResourceLimit(_)
        | Error::IndexOutOfRange { .. }
        | Error::InvalidLambda(_) => exit::USAGE,
        Error::Io(_) | Error::Json(_) => exit::FAILURE,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: exit_code(&e), message: e.to_string() }
    }
}

type CliResult<T = i32> = std::result::Result<T, Failure>;

/// Parses `args` (program name first), runs the subcommand, and returns
/// the exit code. Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::SUCCESS };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let file = match &cli.config {
        Some(path) => {
            let text = read_input(path)?;
            serde_json::from_str::<ConfigFile>(&text)
                .map_err(|e| Failure::usage(format!("config {}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };
    let prec = resolve_precision(cli.precision.as_deref(), file.precision.as_deref())?;
    match cli.command {
        Command::Synthesize(a) => cmd_synthesize(a.merge(file.synthesize.unwrap_or_default()), prec, out),
        Command::Verify(a) => cmd_verify(a.merge(file.verify.unwrap_or_default()), prec, out, err),
        Command::Levels(a) => cmd_levels(a.merge(file.levels.unwrap_or_default()), out),
        Command::Curve(a) => cmd_curve(a.merge(file.curve.unwrap_or_default()), prec, out),
    }
}

fn resolve_precision(flag: Option<&str>, file: Option<&str>) -> CliResult<Precision> {
    let env = std::env::var(PRECISION_ENV).ok();
    match flag.or(file).or(env.as_deref()) {
        Some(text) => Precision::parse(text).map_err(|e| Failure::usage(e.to_string())),
        None => Ok(Precision::default()),
    }
}

fn read_input(path: &Path) -> CliResult<String> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Failure::no_input(format!("{}: not found", path.display())),
        _ => Failure { code: exit::FAILURE, message: format!("{}: {e}", path.display()) },
    })?;
    if text.trim().is_empty() {
        return Err(Failure::no_input(format!("{}: empty input", path.display())));
    }
    Ok(text)
}

fn write_output(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents)
        .map_err(|e| Failure { code: exit::FAILURE, message: format!("{}: {e}", path.display()) })
}

fn read_sequence(path: &Path) -> CliResult<SequenceDocument> {
    read_input(path)?;
    read_sequence_document(path).map_err(|e| Failure { code: exit::FAILURE, message: format!("{}: {e}", path.display()) })
}

fn check_depth(depth: usize) -> CliResult<()> {
    if depth == 0 || depth > MAX_LEVEL {
        return Err(Failure::usage(format!("depth {depth} must be between 1 and {MAX_LEVEL}")));
    }
    Ok(())
}

fn load_target(args: &TargetArgs, prec: Precision) -> CliResult<TargetFunction> {
    let target = match (&args.f, &args.table) {
        (Some(expr), None) => TargetFunction::parse(expr, !args.envelope).map_err(|e| Failure::usage(e.to_string()))?,
        (None, Some(path)) => {
            TargetFunction::parse_table(&read_input(path)?, !args.envelope).map_err(|e| Failure::usage(e.to_string()))?
        }
        (Some(_), Some(_)) => return Err(Failure::usage("give either --f or --table, not both")),
        (None, None) => return Err(Failure::usage("a target is required: --f EXPR or --table PATH")),
    };
    if args.envelope {
        Ok(decreasing_envelope(&target, &default_envelope_grid(60, 64), prec)?)
    } else {
        Ok(target)
    }
}

fn out_line(out: &mut dyn Write, text: &str) -> CliResult<()> {
    writeln!(out, "{text}").map_err(|e| Failure { code: exit::FAILURE, message: e.to_string() })
}

fn cmd_synthesize(args: SynthesizeArgs, prec: Precision, out: &mut dyn Write) -> CliResult {
    let depth = args.depth.unwrap_or(14);
    check_depth(depth)?;
    let headroom = match &args.headroom {
        Some(text) => parse_rational(text).map_err(|e| Failure::usage(e.to_string()))?,
        None => default_headroom(),
    };
    let target = load_target(&args.target, prec)?;
    let synthesis = synthesize_lambda(&target, depth, &headroom, prec)?;
    let seq = &synthesis.sequence;
    let path = args.out.unwrap_or_else(|| PathBuf::from("sequence.json"));
    write_output(&path, &sequence_to_json(seq)?)?;

    let mut report = format!("target: {}\ndepth: {depth}\nheadroom: {headroom}\n", target.label());
    let _ = writeln!(report, "{:>3}  {:>18}  {:>18}  {:>18}", "n", "L_n", "ell_n", "lambda_n");
    for n in 1..=depth {
        let _ = writeln!(
            report,
            "{n:>3}  {:>18}  {:>18}  {:>18}",
            decimal(&synthesis.l_upper[n - 1]),
            decimal(&synthesis.ell[n - 1]),
            decimal(seq.lambda(n).expect("n <= depth"))
        );
    }
    let _ = writeln!(
        report,
        "tail: ell_j = {} * ({})^(j - {depth})",
        decimal(seq.tail_base()),
        seq.tail_ratio()
    );
    let _ = write!(
        report,
        "measure in [{}, {}]\nsequence written to {}",
        decimal(synthesis.measure.lo()),
        decimal(synthesis.measure.hi()),
        path.display()
    );
    out_line(out, &report)?;
    Ok(exit::SUCCESS)
}

fn cmd_verify(args: VerifyArgs, prec: Precision, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let path = args.sequence.clone().ok_or_else(|| Failure::usage("--sequence is required"))?;
    let doc = read_sequence(&path)?;
    let seq = doc.to_sequence().map_err(|e| Failure { code: exit::FAILURE, message: format!("{}: {e}", path.display()) })?;
    let level = args.level.or(doc.level).unwrap_or(seq.depth()).min(seq.depth());
    check_depth(level)?;
    let target = load_target(&args.target, prec)?;
    let approx = CantorApproximation::new(&seq, level, prec)?;
    let seed = args.seed.unwrap_or(0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = BigInt::from(1u64 << 40);
    let windows: Vec<BigRational> = (0..args.oracle_samples.unwrap_or(32))
        .map(|_| BigRational::new(BigInt::from(rng.gen_range(1..=1u64 << 40)), grid.clone()))
        .collect();
    let lemma2 = check_lemma2(&approx, &windows)?;
    let lemma4 = check_lemma4(
        &approx,
        &Lemma4Config { samples_per_band: args.band_samples.unwrap_or(100), seed, ..Lemma4Config::default() },
    )?;
    out_line(
        out,
        &format!(
            "level {level}: sliding-window oracle {} ({} windows, {} mismatches)",
            pass(lemma2.passed()),
            lemma2.records.len(),
            lemma2.violations().count()
        ),
    )?;
    out_line(
        out,
        &format!(
            "level {level}: monotone density {} ({} samples, {} exact failures, {} undecided enclosures, {}/{} decompositions)",
            pass(lemma4.passed()),
            lemma4.records.len(),
            lemma4.exact_failures(),
            lemma4.count(crate::density::Verdict::Indeterminate),
            lemma4.decompositions_checked - lemma4.decomposition_failures,
            lemma4.decompositions_checked
        ),
    )?;

    let samples = default_samples(&approx, args.samples.unwrap_or(128));
    let (certificate, outcome) = match verify_target(&approx, &target, &samples, &VerifyConfig::default()) {
        Ok(cert) => (cert, Ok(())),
        Err(Error::CertificateFailed { offending, certificate }) => {
            (*certificate, Err(Failure { code: exit::CERTIFICATE, message: format!("certificate failed at {}", abbreviate(&offending)) }))
        }
        Err(Error::CertificateIndeterminate { pending, certificate }) => (
            *certificate,
            Err(Failure { code: exit::INDETERMINATE, message: format!("certificate undecided at {}", abbreviate(&pending)) }),
        ),
        Err(e) => return Err(e.into()),
    };
    report_certificate(&certificate, out)?;
    if let Some(p) = &args.out {
        write_output(p, &certificate.to_json()?)?;
    }
    if let Some(p) = &args.csv {
        write_output(p, &certificate.profile().to_csv())?;
    }
    outcome?;
    if !(lemma2.passed() && lemma4.passed()) {
        let _ = writeln!(err, "error: density oracle check failed");
        return Ok(exit::CERTIFICATE);
    }
    Ok(exit::SUCCESS)
}

fn abbreviate(labels: &[String]) -> String {
    const SHOWN: usize = 6;
    if labels.len() <= SHOWN {
        labels.join(", ")
    } else {
        format!("{} and {} more", labels[..SHOWN].join(", "), labels.len() - SHOWN)
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn report_certificate(cert: &Certificate, out: &mut dyn Write) -> CliResult<()> {
    let mut text = format!(
        "certificate for {} at level {} ({} bits, {} extra levels): {}\n",
        cert.target,
        cert.level,
        cert.precision_bits,
        cert.extra_levels,
        if cert.holds { "HOLDS" } else { "DOES NOT HOLD" }
    );
    let _ = writeln!(
        text,
        "measure in [{}, {}], positive: {}",
        decimal(cert.measure.lo()),
        decimal(cert.measure.hi()),
        cert.positive_measure
    );
    for r in &cert.structural {
        let _ = writeln!(
            text,
            "  r_{:<2} phi <= {}  f >= {}  margin {}  {:?}",
            r.n,
            decimal(r.phi.hi()),
            decimal(r.f.lo()),
            r.margin_decimal,
            r.verdict
        );
    }
    let passed = cert.samples.iter().filter(|r| r.verdict == crate::density::Verdict::Pass).count();
    let _ = write!(text, "samples: {passed}/{} pass", cert.samples.len());
    if let Some(m) = cert.min_margin() {
        let _ = write!(text, ", smallest margin {}", decimal(&m));
    }
    out_line(out, &text)
}

fn cmd_levels(args: LevelsArgs, out: &mut dyn Write) -> CliResult {
    let seq = match (&args.sequence, &args.lambda) {
        (Some(path), None) => read_sequence(path)?
            .to_sequence()
            .map_err(|e| Failure { code: exit::FAILURE, message: format!("{}: {e}", path.display()) })?,
        (None, Some(list)) => {
            let prefix = list
                .split(',')
                .map(|x| parse_rational(x.trim()))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Failure::usage(e.to_string()))?;
            LambdaSequence::truncated(prefix).map_err(|e| Failure::usage(e.to_string()))?
        }
        _ => return Err(Failure::usage("give exactly one of --sequence or --lambda")),
    };
    let n = args.n.unwrap_or(seq.depth().min(MAX_FIGURE_LEVEL));
    if n > MAX_FIGURE_LEVEL || n > seq.depth() {
        return Err(Failure::usage(format!(
            "--n {n} must be at most {} (the figure cap is {MAX_FIGURE_LEVEL})",
            seq.depth().min(MAX_FIGURE_LEVEL)
        )));
    }
    let svg = levels_svg(&seq, n)?;
    if args.svg.is_none() && args.csv.is_none() {
        out.write_all(svg.as_bytes()).map_err(|e| Failure { code: exit::FAILURE, message: e.to_string() })?;
        return Ok(exit::SUCCESS);
    }
    if let Some(p) = &args.svg {
        write_output(p, &svg)?;
    }
    if let Some(p) = &args.csv {
        write_output(p, &levels_csv(&seq, n)?)?;
    }
    out_line(out, &format!("levels 0..={n}: {} components at level {n}", 1usize << n))?;
    Ok(exit::SUCCESS)
}

fn parse_params(items: &[String]) -> CliResult<BTreeMap<String, f64>> {
    items
        .iter()
        .map(|item| {
            let (k, v) = item.split_once('=').ok_or_else(|| Failure::usage(format!("--param {item:?} is not key=value")))?;
            let v: f64 = v.trim().parse().map_err(|_| Failure::usage(format!("--param {item:?} has a non-numeric value")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn parse_domain(text: &str) -> CliResult<(f64, f64)> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::usage(format!("--domain {text:?} is not \"a,b\"")))?;
    match parts[..] {
        [a, b] => Ok((a, b)),
        _ => Err(Failure::usage(format!("--domain {text:?} is not \"a,b\""))),
    }
}

/// Curve errors other than bad specifications exit with the curve code.
fn curve_failure(e: Error) -> Failure {
    let code = match e {
        Error::InvalidArgument(_) | Error::Parse(_) => exit::USAGE,
        _ => exit::CURVE,
    };
    Failure { code, message: e.to_string() }
}

fn scan_summary(label: &str, scan: &AttainmentScan) -> String {
    format!(
        "{label}: sup quotient {:.12} at ({:.6e}, {:.6e}), attained {} ({} pairs, resolution {:.3e})",
        scan.sup_estimate,
        scan.witnesses.first().map_or(f64::NAN, |w| w.t),
        scan.witnesses.first().map_or(f64::NAN, |w| w.s),
        scan.attained,
        scan.pairs_evaluated,
        scan.resolution
    )
}

fn cmd_curve(args: CurveArgs, prec: Precision, out: &mut dyn Write) -> CliResult {
    let raw = match &args.poly {
        Some(spec) => {
            let domain = parse_domain(args.domain.as_deref().unwrap_or("0,1"))?;
            ParametricCurve::polynomial(spec, domain).map_err(curve_failure)?
        }
        None => {
            if args.domain.is_some() {
                return Err(Failure::usage("--domain applies to --poly curves; use --param for built-ins"));
            }
            let params = parse_params(&args.param)?;
            ParametricCurve::builtin(args.name.as_deref().unwrap_or("circle"), &params).map_err(curve_failure)?
        }
    };
    let curve = arclength_reparametrize(&raw, 1e-10).map_err(curve_failure)?;
    let mut report = format!("curve: {}\narc length: {:.9}\n", raw.name(), curve.length());
    let rho = find_rho(&curve).map_err(curve_failure)?;
    let _ = writeln!(report, "rho: {rho:.9}");
    let _ = writeln!(report, "{:>14}  {:>14}", "x", "g(x)");
    for k in 0..=8 {
        let x = rho / f64::from(1u32 << k);
        let g = chord_ratio_inf(&curve, x, RHO_GRID).map_err(curve_failure)?;
        let _ = writeln!(report, "{x:>14.6e}  {:>14.12}", g.value);
    }
    let config = ScanConfig {
        coarse_grid: args.coarse.unwrap_or(400),
        refine_rounds: args.rounds.unwrap_or(6),
        ..ScanConfig::default()
    };
    if config.coarse_grid < 2 {
        return Err(Failure::usage("--coarse must be at least 2"));
    }

    if args.distance_demo {
        let d = distance_function(&curve, 0.0, rho);
        let scan = attainment_scan(&d, &curve, &config).map_err(curve_failure)?;
        let _ = write!(report, "{}", scan_summary("distance", &scan));
        if let Some(p) = &args.csv {
            write_output(p, &scan.to_csv())?;
        }
        out_line(out, &report)?;
        return Ok(exit::SUCCESS);
    }

    let approx = match &args.sequence {
        Some(path) => {
            let doc = read_sequence(path)?;
            doc.to_approximation(prec)
                .map_err(|e| Failure { code: exit::FAILURE, message: format!("{}: {e}", path.display()) })?
        }
        None => {
            let depth = args.depth.unwrap_or(14);
            check_depth(depth)?;
            let target = curve_target(&curve, rho).map_err(curve_failure)?;
            let _ = writeln!(report, "synthesized set for target {} at depth {depth}", target.label());
            let synthesis = synthesize_lambda(&target, depth, &default_headroom(), prec)?;
            CantorApproximation::new(&synthesis.sequence, depth, prec)?
        }
    };
    let _ = writeln!(report, "measure in [{}, {}]", decimal(approx.measure().lo()), decimal(approx.measure().hi()));
    let f = build_f(&approx, &curve, rho).map_err(curve_failure)?;
    let h = build_h(&approx, &curve, rho).map_err(curve_failure)?;
    let origin = curve.position(0.0);
    let _ = writeln!(report, "F quotients at (0, rho r_n):");
    for n in 1..=approx.level() {
        let t = rho * to_f64(approx.r(n));
        let p = curve.position(t);
        let chord = p.iter().zip(&origin).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let q = f.eval(t).map_err(curve_failure)? / chord;
        let _ = writeln!(report, "  n = {n:>2}  t = {t:.6e}  quotient {q:.12}");
    }
    let scan_f = attainment_scan(&f, &curve, &config).map_err(curve_failure)?;
    let scan_h = attainment_scan(&h, &curve, &config).map_err(curve_failure)?;
    let _ = writeln!(report, "{}", scan_summary("F", &scan_f));
    let _ = write!(report, "{}", scan_summary("H", &scan_h));
    if let Some(p) = &args.csv {
        write_output(p, &scan_f.to_csv())?;
    }
    if let Some(p) = &args.csv_h {
        write_output(p, &scan_h.to_csv())?;
    }
    out_line(out, &report)?;
    Ok(exit::SUCCESS)
}
