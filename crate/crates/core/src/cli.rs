//! Command-line front end.
//!
//! Every command reads one JSON problem file and writes a table as CSV or
//! JSON. Exit codes: 0 success, 2 invalid input, 3 root shortfall or
//! degenerate root, 4 verification failure. Failures also print a JSON error
//! body on standard error.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::beam_model::{
    natural_frequencies, nondimensional_problem, nondimensionalize, BeamProblem, CrackPosition, CrackSpec,
    Flexibility, PhysicalBeam, Sidedness,
};
use crate::eigen::{PiecewiseFn, Spectrum};
use crate::error::BeamError;
use crate::roots::{Diagnostic, ScanGrid, SCAN_STEP};
use crate::spectral::{self, GRAM_TOL, RAYLEIGH_TOL};
use crate::{shifrin, transition};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SHORTFALL: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

/// Bound on `|λ^shifrin − λ^transition|`.
pub const AGREEMENT_TOL: f64 = 1e-8;
/// Bound on the max-norm distance of normalised modes.
pub const MODE_AGREEMENT_TOL: f64 = 1e-7;
/// Sample points for mode comparisons.
const MODE_COMPARE_POINTS: usize = 200;

const DEFAULT_MODES: usize = 5;
const DEFAULT_SAMPLES: usize = 101;

#[derive(Debug, Parser)]
#[command(name = "crackbeam", version, about = "Vibration of hinged beams with rotational-spring cracks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues λ_k and λ_k⁴.
    Spectrum(RunArgs),
    /// Sampled mode shapes with both one-sided values at each crack.
    Modes(RunArgs),
    /// Natural frequencies of a physical beam.
    Frequencies(RunArgs),
    /// Residual, orthogonality and cross-solver checks.
    Validate(RunArgs),
    /// Both characteristic determinants on a uniform grid.
    DetScan(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Shifrin,
    Transition,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Problem file (JSON).
    pub input: PathBuf,
    /// Number of modes.
    #[arg(long)]
    pub modes: Option<usize>,
    #[arg(long, value_enum)]
    pub solver: Option<SolverChoice>,
    /// Upper end of the λ scan.
    #[arg(long)]
    pub lambda_max: Option<f64>,
    /// Lower end of the λ grid for det-scan.
    #[arg(long)]
    pub lambda_min: Option<f64>,
    /// Grid step for det-scan.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Sample count for mode shapes.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Options that may also appear in the problem file under `"options"`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileOptions {
    pub modes: Option<usize>,
    pub solver: Option<SolverChoice>,
    pub lambda_max: Option<f64>,
    pub lambda_min: Option<f64>,
    pub step: Option<f64>,
    pub format: Option<OutputFormat>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamBlock {
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "E")]
    pub young_modulus: f64,
    pub rho: f64,
    #[serde(rename = "A")]
    pub area: f64,
    #[serde(rename = "I")]
    pub area_moment: f64,
    #[serde(rename = "H")]
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaField {
    Value(f64),
    Depth { mu: f64, sided: Sidedness },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrackEntry {
    pub x: Option<f64>,
    pub xi: Option<f64>,
    pub theta: Option<ThetaField>,
    pub mu: Option<f64>,
    pub sided: Option<Sidedness>,
}

/// Fault injection for exercising the verifier.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DebugBlock {
    /// Multiplies every Shifrin jump amplitude after the nullspace solve.
    pub scale_jumps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub beam: Option<BeamBlock>,
    #[serde(default)]
    pub cracks: Vec<CrackEntry>,
    pub nondimensional: Option<bool>,
    pub options: Option<FileOptions>,
    pub debug: Option<DebugBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Spectrum,
    Modes,
    Frequencies,
    Validate,
    DetScan,
}

/// Fully resolved run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub command: CommandKind,
    pub modes: usize,
    pub lambda_max: Option<f64>,
    pub lambda_min: Option<f64>,
    pub step: Option<f64>,
    pub solver: SolverChoice,
    pub format: OutputFormat,
    pub samples: usize,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// Flags override file options, which override defaults.
    pub fn resolve(command: CommandKind, args: &RunArgs, file: &FileOptions) -> Result<Self, CliError> {
        let cfg = Self {
            input: args.input.clone(),
            command,
            modes: args.modes.or(file.modes).unwrap_or(DEFAULT_MODES),
            lambda_max: args.lambda_max.or(file.lambda_max),
            lambda_min: args.lambda_min.or(file.lambda_min),
            step: args.step.or(file.step),
            solver: args.solver.or(file.solver).unwrap_or(SolverChoice::Shifrin),
            format: args.format.or(file.format).unwrap_or(OutputFormat::Csv),
            samples: args.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES),
            output: args.output.clone(),
        };
        if cfg.modes < 1 {
            return Err(CliError::input("modes must be at least 1"));
        }
        if cfg.samples < 2 {
            return Err(CliError::input("samples must be at least 2"));
        }
        Ok(cfg)
    }

    /// Agreement checks run whenever both solvers are requested.
    pub fn checks_agreement(&self) -> bool {
        self.solver == SolverChoice::Both
    }
}

/// Problem file contents after validation.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedProblem {
    pub problem: BeamProblem,
    pub beam: Option<PhysicalBeam>,
    pub options: FileOptions,
    pub debug: DebugBlock,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::input(format!("problem file: {e}")))
    }

    pub fn load(self) -> Result<LoadedProblem, CliError> {
        let beam = match &self.beam {
            Some(b) => Some(PhysicalBeam::new(
                b.length,
                b.young_modulus,
                b.rho,
                b.area,
                b.area_moment,
                b.height,
            )?),
            None => None,
        };
        let nondim = self.nondimensional.unwrap_or(beam.is_none());
        let mut specs = Vec::with_capacity(self.cracks.len());
        for (n, c) in self.cracks.iter().enumerate() {
            let position = match (c.x, c.xi, nondim) {
                (Some(x), None, true) => CrackPosition::Nondimensional(x),
                (None, Some(xi), false) => CrackPosition::Physical(xi),
                (Some(_), None, false) => {
                    return Err(CliError::input(format!(
                        "crack {n}: \"x\" given but the problem is not nondimensional"
                    )))
                }
                (None, Some(_), true) => {
                    return Err(CliError::input(format!(
                        "crack {n}: \"xi\" given but the problem is nondimensional"
                    )))
                }
                _ => return Err(CliError::input(format!("crack {n}: give exactly one of \"x\" or \"xi\""))),
            };
            let flexibility = match (&c.theta, c.mu, c.sided) {
                (Some(ThetaField::Value(t)), None, None) => Flexibility::Direct(*t),
                (Some(ThetaField::Depth { mu, sided }), None, None) => Flexibility::DepthRatio {
                    ratio: *mu,
                    sided: *sided,
                },
                (None, Some(mu), Some(sided)) => Flexibility::DepthRatio { ratio: mu, sided },
                _ => {
                    return Err(CliError::input(format!(
                        "crack {n}: give either \"theta\" or both \"mu\" and \"sided\""
                    )))
                }
            };
            specs.push(CrackSpec::new(position, flexibility));
        }
        let problem = if nondim {
            nondimensional_problem(beam.as_ref(), &specs)?
        } else {
            let b = beam
                .as_ref()
                .ok_or_else(|| CliError::input("physical crack positions need a \"beam\" block"))?;
            nondimensionalize(b, &specs)?
        };
        Ok(LoadedProblem {
            problem,
            beam,
            options: self.options.unwrap_or_default(),
            debug: self.debug.unwrap_or_default(),
        })
    }
}

/// Failure with its exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
    pub failed: Vec<String>,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            kind: "validation",
            message: message.into(),
            failed: Vec::new(),
        }
    }

    fn verification(message: impl Into<String>, failed: Vec<String>) -> Self {
        Self {
            code: EXIT_VERIFY,
            kind: "verification",
            message: message.into(),
            failed,
        }
    }

    /// JSON error body.
    pub fn body(&self) -> String {
        let mut v = serde_json::json!({
            "error": { "kind": self.kind, "message": self.message, "exit_code": self.code }
        });
        if !self.failed.is_empty() {
            v["error"]["failed"] = serde_json::json!(self.failed);
        }
        v.to_string()
    }
}

impl From<BeamError> for CliError {
    fn from(e: BeamError) -> Self {
        let (code, kind) = match e {
            BeamError::Validation(_) | BeamError::Domain(_) | BeamError::IndexOutOfRange { .. } => {
                (EXIT_INPUT, "validation")
            }
            BeamError::RootShortfall { .. } => (EXIT_SHORTFALL, "root_shortfall"),
            BeamError::Degenerate { .. } => (EXIT_SHORTFALL, "degenerate"),
        };
        Self {
            code,
            kind,
            message: e.to_string(),
            failed: Vec::new(),
        }
    }
}

/// `%.15g`.
pub fn fmt15(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.14e}", x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-5..15).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (14 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `x` rounded to 15 significant digits.
pub fn round15(x: f64) -> f64 {
    if x.is_finite() {
        fmt15(x).parse().unwrap_or(x)
    } else {
        x
    }
}

fn round_tree(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if !(n.is_i64() || n.is_u64()) {
                if let Some(f) = n.as_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round15(f)) {
                        *n = r;
                    }
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_tree),
        Value::Object(o) => o.values_mut().for_each(round_tree),
        _ => {}
    }
}

fn to_json<T: Serialize>(doc: &T) -> String {
    let mut v = serde_json::to_value(doc).expect("serialisable output");
    round_tree(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("serialisable output");
    s.push('\n');
    s
}

/// Rows of one command's output with their fixed CSV columns.
pub trait Row: Serialize + DeserializeOwned {
    fn header(rows: &[Self]) -> Vec<&'static str>;
    fn fields(&self) -> Vec<String>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub k: usize,
    pub lambda: f64,
    pub lambda4: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agreement: Option<f64>,
}

impl Row for SpectrumRow {
    fn header(rows: &[Self]) -> Vec<&'static str> {
        let mut h = vec!["k", "lambda", "lambda4"];
        if rows.iter().any(|r| r.agreement.is_some()) {
            h.push("agreement");
        }
        h
    }

    fn fields(&self) -> Vec<String> {
        let mut f = vec![self.k.to_string(), fmt15(self.lambda), fmt15(self.lambda4)];
        if let Some(a) = self.agreement {
            f.push(fmt15(a));
        }
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SideMarker {
    L,
    R,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSample {
    pub k: usize,
    pub x: f64,
    pub side: SideMarker,
    pub phi: f64,
    pub dphi: f64,
    pub d2phi: f64,
}

impl Row for ModeSample {
    fn header(_: &[Self]) -> Vec<&'static str> {
        vec!["k", "x", "side", "phi", "dphi", "d2phi"]
    }

    fn fields(&self) -> Vec<String> {
        let side = match self.side {
            SideMarker::L => "L",
            SideMarker::R => "R",
        };
        vec![
            self.k.to_string(),
            fmt15(self.x),
            side.into(),
            fmt15(self.phi),
            fmt15(self.dphi),
            fmt15(self.d2phi),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub k: usize,
    pub lambda: f64,
    pub omega: f64,
    pub frequency_hz: f64,
}

impl Row for FrequencyRow {
    fn header(_: &[Self]) -> Vec<&'static str> {
        vec!["k", "lambda", "omega", "frequency_hz"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            fmt15(self.lambda),
            fmt15(self.omega),
            fmt15(self.frequency_hz),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignChange {
    None,
    Shifrin,
    Transition,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetScanRow {
    pub lambda: f64,
    pub det_shifrin: f64,
    pub det_transition: f64,
    pub sign_change: SignChange,
}

impl Row for DetScanRow {
    fn header(_: &[Self]) -> Vec<&'static str> {
        vec!["lambda", "det_shifrin", "det_transition", "sign_change"]
    }

    fn fields(&self) -> Vec<String> {
        let s = match self.sign_change {
            SignChange::None => "none",
            SignChange::Shifrin => "shifrin",
            SignChange::Transition => "transition",
            SignChange::Both => "both",
        };
        vec![fmt15(self.lambda), fmt15(self.det_shifrin), fmt15(self.det_transition), s.into()]
    }
}

/// JSON form of a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<R> {
    pub command: CommandKind,
    pub solver: SolverChoice,
    pub rows: Vec<R>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
}

/// One named threshold check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<usize>,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Output of `validate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub pass: bool,
    pub checks: Vec<Check>,
    pub failed: Vec<String>,
}

pub fn write_csv<R: Row>(rows: &[R]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(R::header(rows)).expect("in-memory write");
    for r in rows {
        w.write_record(r.fields()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 output")
}

pub fn read_csv<R: Row>(text: &str) -> Result<Vec<R>, CliError> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<Vec<R>, _>>()
        .map_err(|e| CliError::input(format!("csv: {e}")))
}

fn render<R: Row>(doc: Document<R>, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => write_csv(&doc.rows),
        OutputFormat::Json => to_json(&doc),
    }
}

fn reemit_as<R: Row>(text: &str, format: OutputFormat) -> Result<String, CliError> {
    match format {
        OutputFormat::Csv => Ok(write_csv(&read_csv::<R>(text)?)),
        OutputFormat::Json => {
            let doc: Document<R> =
                serde_json::from_str(text).map_err(|e| CliError::input(format!("json: {e}")))?;
            Ok(to_json(&doc))
        }
    }
}

/// Parses an emitted output into typed rows and writes it again.
pub fn reemit(command: CommandKind, format: OutputFormat, text: &str) -> Result<String, CliError> {
    match command {
        CommandKind::Spectrum => reemit_as::<SpectrumRow>(text, format),
        CommandKind::Modes => reemit_as::<ModeSample>(text, format),
        CommandKind::Frequencies => reemit_as::<FrequencyRow>(text, format),
        CommandKind::DetScan => reemit_as::<DetScanRow>(text, format),
        CommandKind::Validate => {
            let s: ValidationSummary =
                serde_json::from_str(text).map_err(|e| CliError::input(format!("json: {e}")))?;
            Ok(to_json(&s))
        }
    }
}

/// Result of a command: rendered output plus an optional failure to report
/// after the output has been written.
pub struct Outcome {
    pub output: String,
    pub failure: Option<CliError>,
}

fn shifrin_spectrum(loaded: &LoadedProblem, cfg: &RunConfig) -> Result<Spectrum, CliError> {
    let scale = loaded.debug.scale_jumps;
    Ok(shifrin::eigenpairs_with(&loaded.problem, cfg.modes, cfg.lambda_max, |f| match scale {
        Some(s) => f.with_scaled_jumps(s),
        None => f,
    })?)
}

fn transition_spectrum(loaded: &LoadedProblem, cfg: &RunConfig) -> Result<Spectrum, CliError> {
    Ok(transition::oracle_eigenpairs(&loaded.problem, cfg.modes, cfg.lambda_max)?)
}

/// Spectra requested by `cfg.solver`: the primary one first.
fn spectra(loaded: &LoadedProblem, cfg: &RunConfig) -> Result<(Spectrum, Option<Spectrum>), CliError> {
    match cfg.solver {
        SolverChoice::Shifrin => Ok((shifrin_spectrum(loaded, cfg)?, None)),
        SolverChoice::Transition => Ok((transition_spectrum(loaded, cfg)?, None)),
        SolverChoice::Both => Ok((shifrin_spectrum(loaded, cfg)?, Some(transition_spectrum(loaded, cfg)?))),
    }
}

/// Largest `|φ_a − φ_b|` on a uniform grid of `MODE_COMPARE_POINTS` abscissae.
pub fn mode_distance<A: PiecewiseFn, B: PiecewiseFn>(a: &A, b: &B, problem: &BeamProblem) -> f64 {
    (0..MODE_COMPARE_POINTS)
        .map(|j| {
            let x = PI * j as f64 / (MODE_COMPARE_POINTS - 1) as f64;
            let k = problem.interval_of(x);
            (a.eval(k, x, 0) - b.eval(k, x, 0)).abs()
        })
        .fold(0.0, f64::max)
}

fn agreement_checks(a: &Spectrum, b: &Spectrum, problem: &BeamProblem) -> Vec<Check> {
    let mut out = Vec::new();
    for (k, (p, q)) in a.pairs.iter().zip(&b.pairs).enumerate() {
        let dl = (p.lambda - q.lambda).abs();
        out.push(Check {
            name: "agreement_lambda".into(),
            solver: None,
            mode: Some(k + 1),
            value: dl,
            threshold: AGREEMENT_TOL,
            pass: dl <= AGREEMENT_TOL,
        });
        let dm = mode_distance(p, q, problem);
        out.push(Check {
            name: "agreement_mode".into(),
            solver: None,
            mode: Some(k + 1),
            value: dm,
            threshold: MODE_AGREEMENT_TOL,
            pass: dm <= MODE_AGREEMENT_TOL,
        });
    }
    out
}

fn failed_names(checks: &[Check]) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for c in checks.iter().filter(|c| !c.pass) {
        if !names.contains(&c.name) {
            names.push(c.name.clone());
        }
    }
    names
}

fn cmd_spectrum(loaded: &LoadedProblem, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (primary, second) = spectra(loaded, cfg)?;
    let mut rows: Vec<SpectrumRow> = primary
        .pairs
        .iter()
        .enumerate()
        .map(|(k, p)| SpectrumRow {
            k: k + 1,
            lambda: p.lambda,
            lambda4: p.lambda4(),
            agreement: None,
        })
        .collect();
    let mut failure = None;
    if let Some(other) = &second {
        for (row, q) in rows.iter_mut().zip(&other.pairs) {
            row.agreement = Some((row.lambda - q.lambda).abs());
        }
        let failed: Vec<String> = rows
            .iter()
            .filter(|r| !(r.agreement.unwrap_or(0.0) <= AGREEMENT_TOL))
            .map(|r| format!("agreement_lambda (mode {})", r.k))
            .collect();
        if !failed.is_empty() {
            failure = Some(CliError::verification("solvers disagree", failed));
        }
    }
    let doc = Document {
        command: CommandKind::Spectrum,
        solver: cfg.solver,
        rows,
        diagnostics: primary.diagnostics,
    };
    Ok(Outcome {
        output: render(doc, cfg.format),
        failure,
    })
}

/// Sample abscissae with side markers: a uniform grid plus both sides of
/// every crack.
pub fn sample_points(problem: &BeamProblem, samples: usize) -> Vec<(f64, SideMarker, usize)> {
    let mut pts = Vec::new();
    let last = problem.interval_count() - 1;
    let near_crack = |x: f64| problem.positions().iter().any(|&c| (c - x).abs() < 1e-12);
    let mut cracks = problem.positions().iter().enumerate().peekable();
    for j in 0..samples {
        let x = if j == samples - 1 {
            PI
        } else {
            PI * j as f64 / (samples - 1) as f64
        };
        while let Some(&(i, &c)) = cracks.peek() {
            if c <= x {
                pts.push((c, SideMarker::L, i));
                pts.push((c, SideMarker::R, i + 1));
                cracks.next();
            } else {
                break;
            }
        }
        if near_crack(x) {
            continue;
        }
        if j == samples - 1 {
            pts.push((x, SideMarker::L, last));
        } else {
            pts.push((x, SideMarker::R, problem.interval_of(x)));
        }
    }
    pts
}

fn cmd_modes(loaded: &LoadedProblem, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (primary, second) = spectra(loaded, cfg)?;
    let pts = sample_points(&loaded.problem, cfg.samples);
    let mut rows = Vec::with_capacity(pts.len() * primary.pairs.len());
    for (k, pair) in primary.pairs.iter().enumerate() {
        for &(x, side, interval) in &pts {
            rows.push(ModeSample {
                k: k + 1,
                x,
                side,
                phi: pair.eval(interval, x, 0),
                dphi: pair.eval(interval, x, 1),
                d2phi: pair.eval(interval, x, 2),
            });
        }
    }
    let failure = second.as_ref().and_then(|other| {
        let failed = failed_names(&agreement_checks(&primary, other, &loaded.problem));
        (!failed.is_empty()).then(|| CliError::verification("solvers disagree", failed))
    });
    let doc = Document {
        command: CommandKind::Modes,
        solver: cfg.solver,
        rows,
        diagnostics: primary.diagnostics,
    };
    Ok(Outcome {
        output: render(doc, cfg.format),
        failure,
    })
}

fn cmd_frequencies(loaded: &LoadedProblem, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let beam = loaded
        .beam
        .as_ref()
        .ok_or_else(|| CliError::input("frequencies need a \"beam\" block"))?;
    let (primary, _) = spectra(loaded, cfg)?;
    let lambdas = primary.lambdas();
    let omegas = natural_frequencies(beam, &lambdas)?;
    let rows = lambdas
        .iter()
        .zip(&omegas)
        .enumerate()
        .map(|(k, (&l, &w))| FrequencyRow {
            k: k + 1,
            lambda: l,
            omega: w,
            frequency_hz: w / (2.0 * PI),
        })
        .collect();
    let doc = Document {
        command: CommandKind::Frequencies,
        solver: cfg.solver,
        rows,
        diagnostics: primary.diagnostics,
    };
    Ok(Outcome {
        output: render(doc, cfg.format),
        failure: None,
    })
}

fn spectrum_checks(spec: &Spectrum, problem: &BeamProblem) -> Vec<Check> {
    let solver = Some(spec.solver.as_str().to_string());
    let mut out = Vec::new();
    for (k, pair) in spec.pairs.iter().enumerate() {
        let report = spectral::residual_report(pair, problem);
        for (name, value, threshold) in report.families() {
            out.push(Check {
                name: name.into(),
                solver: solver.clone(),
                mode: Some(k + 1),
                value,
                threshold,
                pass: value <= threshold,
            });
        }
    }
    let rule = spectral::rule_for(problem, &spec.pairs);
    for (k, pair) in spec.pairs.iter().enumerate() {
        let rq = spectral::rayleigh_quotient(pair, problem, &rule);
        let rel = (rq / pair.lambda4() - 1.0).abs();
        out.push(Check {
            name: "rayleigh".into(),
            solver: solver.clone(),
            mode: Some(k + 1),
            value: rel,
            threshold: RAYLEIGH_TOL,
            pass: rel <= RAYLEIGH_TOL,
        });
    }
    let gram = spectral::gram_matrix(&spec.pairs, &rule);
    let n = gram.nrows();
    let dev = (gram - nalgebra::DMatrix::<f64>::identity(n, n)).amax();
    out.push(Check {
        name: "gram".into(),
        solver,
        mode: None,
        value: dev,
        threshold: GRAM_TOL,
        pass: dev <= GRAM_TOL,
    });
    out
}

fn cmd_validate(loaded: &LoadedProblem, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let s = shifrin_spectrum(loaded, cfg)?;
    let t = transition_spectrum(loaded, cfg)?;
    let mut checks = Vec::new();
    if cfg.solver != SolverChoice::Transition {
        checks.extend(spectrum_checks(&s, &loaded.problem));
    }
    if cfg.solver != SolverChoice::Shifrin {
        checks.extend(spectrum_checks(&t, &loaded.problem));
    }
    checks.extend(agreement_checks(&s, &t, &loaded.problem));
    let failed = failed_names(&checks);
    let summary = ValidationSummary {
        pass: failed.is_empty(),
        checks,
        failed: failed.clone(),
    };
    let failure = (!failed.is_empty()).then(|| CliError::verification("verification failed", failed));
    Ok(Outcome {
        output: to_json(&summary),
        failure,
    })
}

fn cmd_det_scan(loaded: &LoadedProblem, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = &loaded.problem;
    let lo = cfg.lambda_min.unwrap_or(SCAN_STEP);
    let hi = cfg
        .lambda_max
        .unwrap_or(ScanGrid::default_for(cfg.modes, p.crack_count()).lambda_max);
    let grid = ScanGrid::new(lo, hi, cfg.step.unwrap_or(SCAN_STEP))?;
    let mut rows: Vec<DetScanRow> = Vec::new();
    for l in grid.points() {
        let ds = shifrin::char_det(p, l);
        let dt = transition::boundary_det(p, l);
        let sign_change = match rows.last() {
            Some(prev) => {
                let cs = prev.det_shifrin.signum() * ds.signum() < 0.0 || (ds == 0.0 && prev.det_shifrin != 0.0);
                let ct =
                    prev.det_transition.signum() * dt.signum() < 0.0 || (dt == 0.0 && prev.det_transition != 0.0);
                match (cs, ct) {
                    (true, true) => SignChange::Both,
                    (true, false) => SignChange::Shifrin,
                    (false, true) => SignChange::Transition,
                    (false, false) => SignChange::None,
                }
            }
            None => SignChange::None,
        };
        rows.push(DetScanRow {
            lambda: l,
            det_shifrin: ds,
            det_transition: dt,
            sign_change,
        });
    }
    let doc = Document {
        command: CommandKind::DetScan,
        solver: cfg.solver,
        rows,
        diagnostics: Vec::new(),
    };
    Ok(Outcome {
        output: render(doc, cfg.format),
        failure: None,
    })
}

/// Runs one command and returns its output.
pub fn execute(command: CommandKind, args: &RunArgs) -> Result<Outcome, CliError> {
    let text = fs::read_to_string(&args.input)
        .map_err(|e| CliError::input(format!("{}: {e}", args.input.display())))?;
    let loaded = ProblemFile::parse(&text)?.load()?;
    let cfg = RunConfig::resolve(command, args, &loaded.options)?;
    match command {
        CommandKind::Spectrum => cmd_spectrum(&loaded, &cfg),
        CommandKind::Modes => cmd_modes(&loaded, &cfg),
        CommandKind::Frequencies => cmd_frequencies(&loaded, &cfg),
        CommandKind::Validate => cmd_validate(&loaded, &cfg),
        CommandKind::DetScan => cmd_det_scan(&loaded, &cfg),
    }
}

fn write_output(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::input(format!("{}: {e}", p.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::input(format!("stdout: {e}"))),
    }
}

/// Runs a parsed command line, writing to the given streams; returns the exit code.
pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let (kind, args) = match &cli.command {
        Command::Spectrum(a) => (CommandKind::Spectrum, a),
        Command::Modes(a) => (CommandKind::Modes, a),
        Command::Frequencies(a) => (CommandKind::Frequencies, a),
        Command::Validate(a) => (CommandKind::Validate, a),
        Command::DetScan(a) => (CommandKind::DetScan, a),
    };
    let result = execute(kind, args).and_then(|out| {
        write_output(args.output.as_deref(), &out.output, stdout)?;
        out.failure.map_or(Ok(()), Err)
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.body());
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_digit_formatting() {
        assert_eq!(fmt15(0.0), "0");
        assert_eq!(fmt15(1.0), "1");
        assert_eq!(fmt15(16.0), "16");
        assert_eq!(fmt15(PI), "3.14159265358979");
        assert_eq!(fmt15(-0.5), "-0.5");
        assert_eq!(fmt15(1.5e-7), "1.5e-07");
        assert_eq!(fmt15(1e20), "1e+20");
        assert_eq!(fmt15(123456789012345.0), "123456789012345");
        assert_eq!(fmt15(0.0001), "0.0001");
        for x in [PI, 1.0 / 3.0, 2.0f64.sqrt() * 1e-9, 6.02e23] {
            let s = fmt15(x);
            assert_eq!(fmt15(s.parse().unwrap()), s);
        }
    }

    #[test]
    fn crack_entries_accept_both_flexibility_forms() {
        let f = ProblemFile::parse(
            r#"{"nondimensional": true, "beam": {"L": 3.0, "E": 1, "rho": 1, "A": 1, "I": 1, "H": 0.1},
                "cracks": [{"x": 1.0, "theta": 0.3}, {"x": 2.0, "theta": {"mu": 0.2, "sided": "double"}},
                           {"x": 2.5, "mu": 0.1, "sided": "single"}]}"#,
        )
        .unwrap();
        let p = f.load().unwrap().problem;
        assert_eq!(p.crack_count(), 3);
        assert_eq!(p.flexibilities()[0], 0.3);
    }

    #[test]
    fn mixing_position_kinds_is_rejected() {
        let f = ProblemFile::parse(r#"{"nondimensional": true, "cracks": [{"xi": 1.0, "theta": 0.3}]}"#).unwrap();
        assert_eq!(f.load().unwrap_err().code, EXIT_INPUT);
        let f = ProblemFile::parse(r#"{"cracks": [{"x": 1.0, "xi": 1.0, "theta": 0.3}]}"#).unwrap();
        assert_eq!(f.load().unwrap_err().code, EXIT_INPUT);
        assert!(ProblemFile::parse(r#"{"crack": []}"#).is_err());
    }

    #[test]
    fn samples_duplicate_cracks() {
        let p = BeamProblem::new([(1.0, 0.3)]).unwrap();
        let pts = sample_points(&p, 5);
        assert_eq!(pts.len(), 7);
        let at_crack: Vec<_> = pts.iter().filter(|q| q.0 == 1.0).collect();
        assert_eq!(at_crack.len(), 2);
        assert_eq!((at_crack[0].1, at_crack[0].2), (SideMarker::L, 0));
        assert_eq!((at_crack[1].1, at_crack[1].2), (SideMarker::R, 1));
        assert_eq!(pts.last().unwrap().1, SideMarker::L);
        let p = BeamProblem::new([(PI / 2.0, 0.3)]).unwrap();
        assert_eq!(sample_points(&p, 3).len(), 4);
    }

    #[test]
    fn error_codes() {
        let e: CliError = BeamError::RootShortfall {
            found: 1,
            requested: 2,
            lambda_max: 3.0,
        }
        .into();
        assert_eq!(e.code, EXIT_SHORTFALL);
        let body: Value = serde_json::from_str(&e.body()).unwrap();
        assert_eq!(body["error"]["exit_code"], 3);
    }
}
