//! Command-line front end.
//!
//! Every subcommand reads one definition (a builtin family, a file or an
//! inline expression), runs one analysis and writes a table, CSV or JSON to
//! stdout or `--output`. Exit codes: 0 success, 1 analysis-level failure,
//! 2 usage error.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::degree::{degree_sequence_with, DegreeOptions, Mode, DEFAULT_SEED};
use crate::dsl::{
    builtin_family, family_names, parse_definition_in, render_rational, CoeffSpec, Definition,
    EntryValue, FamilyInfo, LatticeDef, MappingDef, Params, Recurrence, RecurrenceKind,
};
use crate::lattice::{
    check_confinement_conditions, conserved_quantity, cross_validate_reduction, evolve,
    gauge_normalize, reduce_to_mapping, trace_lattice_singularity, LatticeVerdict, Region, Site,
    Staircase,
};
use crate::numeric::field::parse_rational;
use crate::numeric::rational;
use crate::reproduce::{run_criteria, CriterionReport, CRITERIA};
use crate::singularity::{
    derive_coefficient_constraints, late_confinement_polynomial, trace_pattern_seeded, LateIndex,
    PerturbationSpec,
};
use crate::spectral::{
    classify, kdv_constraint_charpoly, limit_polynomial, p_ell, recurrence_charpoly,
    reduction_charpoly, IntPoly,
};
use crate::{Error, Rational};

pub const SEED_ENV: &str = "ENTROPYFORGE_SEED";
pub const SCHEMA_VERSION: u32 = 1;

pub const GRAMMAR: &str = "\
Definition grammar (one equation, then one coefficient per line):
  x[n+1]*x[n-1] = 1 - a[n]/x[n]          one-dimensional map, solved for the top shift
  x[m,n] = -x[m-1,n-1] + a[m,n-1]/x[m,n-1]^2 + b[m-1,n]/x[m-1,n]^2
  a: const 1
  a: periodic(1,1,1,1,-1,-1,-1,-1)       indexed by n
  a: periodic[m-n](1,2)                  periodic in a linear form of m and n
  a: table \"coeffs.csv\"                  rows of index,...,value
  a: symbolic(0..13)                     free symbols for constraint derivation
Operators + - * / ^ with integer exponents, parentheses, rationals p/q.
Statements may also be separated by `;`. Comments start with `#`.
Builtin families: qrt_example mult_example hv hv_full kdv_lattice kmt_lattice
  kmt_full kmt_reduction kmt_reduction_full (parameters k, l, a,
  violate_constraint). Spectral families for classify: P_ell, limit, late,
  kdv_constraint, reduction_charpoly.";

#[derive(Parser, Debug)]
#[command(
    name = "entropyforge",
    version,
    about = "Degree growth, singularity confinement and characteristic roots of rational recurrences and lattice equations",
    after_help = GRAMMAR
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Modular,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum StaircaseArg {
    Corner,
    Alternating,
}

#[derive(Args, Debug, Clone)]
struct Input {
    /// Builtin family name
    #[arg(long)]
    family: Option<String>,
    /// Family parameters, e.g. `-p k=2,l=3`
    #[arg(short = 'p', long = "param", value_delimiter = ',')]
    params: Vec<String>,
    /// Definition file
    #[arg(long)]
    file: Option<PathBuf>,
    /// Inline definition
    #[arg(long)]
    expr: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Write data here instead of stdout
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Seed for generic values; defaults to $ENTROPYFORGE_SEED, then 20160301
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args, Debug, Clone)]
struct RegionArgs {
    /// `m_lo..m_hi,n_lo..n_hi`
    #[arg(long)]
    region: Option<String>,
    /// Square region `0..size-1` in both directions
    #[arg(long)]
    size: Option<i64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Degree sequence of an iterated map
    Degrees {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 15)]
        steps: usize,
        #[arg(long, value_enum, default_value = "modular")]
        mode: ModeArg,
        /// Suppress progress lines on stderr
        #[arg(long)]
        quiet: bool,
    },
    /// Singularity pattern and confinement verdict
    Singularity {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        common: Common,
        /// Entry value: a number, or a coefficient name
        #[arg(long)]
        entry: Option<String>,
        /// Index of the perturbed iterate
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        at: i64,
        #[arg(long, default_value_t = 20)]
        depth: usize,
        /// Exit with status 1 unless the pattern confines
        #[arg(long)]
        expect_confined: bool,
    },
    /// Confinement constraints on one coefficient of a second-order map
    Derive {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        common: Common,
        /// Coefficient made symbolic
        #[arg(long, default_value = "a")]
        symbolic: String,
        /// Symbol window `lo..hi`
        #[arg(long, default_value = "0..13")]
        window: String,
        /// Constant value for which the autonomous map confines
        #[arg(long, allow_hyphen_values = true)]
        reference: Option<String>,
        #[arg(long)]
        entry: Option<String>,
    },
    /// Characteristic polynomial of a coefficient recurrence
    Charpoly {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        common: Common,
        /// `additive` or `multiplicative`
        #[arg(long, default_value = "additive")]
        kind: String,
        /// `shift:coefficient` pairs, e.g. `3:1,2:-2,1:-2,0:1`
        #[arg(long, allow_hyphen_values = true)]
        terms: Option<String>,
    },
    /// Roots and Salem/Pisot classification of an integer polynomial
    Classify {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        common: Common,
        /// Coefficients from the leading one down, e.g. `1,-3,0,-3,1`
        #[arg(long, allow_hyphen_values = true)]
        coeffs: Option<String>,
    },
    /// Lattice evolution, conditions, gauge and singularity traces
    Lattice {
        #[command(subcommand)]
        action: LatticeAction,
    },
    /// Reduce a lattice to a one-dimensional map
    Reduce {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        common: Common,
        #[arg(short, long)]
        l: u32,
        /// Keep the extra terms of the full form
        #[arg(long)]
        full: bool,
        /// Cross-validation steps; 0 skips it
        #[arg(long, default_value_t = 10)]
        validate: usize,
    },
    /// Conserved quantity along a generic orbit of an even reduction
    Conserve {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 8)]
        steps: usize,
    },
    /// Run the full golden suite
    Reproduce {
        #[command(flatten)]
        common: Common,
        /// Criteria to run, e.g. `1,3,5`
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

#[derive(Subcommand, Debug)]
enum LatticeAction {
    /// Exact evolution from generic staircase data
    Evolve {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        region: RegionArgs,
        #[arg(long, value_enum, default_value = "corner")]
        staircase: StaircaseArg,
    },
    /// Check the confinement conditions on the coefficient fields
    Confine {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        region: RegionArgs,
        #[arg(long)]
        expect_confined: bool,
    },
    /// Gauge the coefficients to a = b
    Gauge {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        region: RegionArgs,
    },
    /// Trace the singularity started by zeros on the staircase
    Trace {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        region: RegionArgs,
        /// Zero site `m,n` on the staircase; repeatable
        #[arg(long = "zero", allow_hyphen_values = true)]
        zeros: Vec<String>,
        #[arg(long)]
        expect_confined: bool,
    },
}

/// Failure classes with their exit codes.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Analysis(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Analysis(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Analysis(format!("io error: {e}"))
    }
}

type Outcome = std::result::Result<Status, Failure>;

/// Exit status of a completed analysis.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Ok,
    Failed,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code. Data goes to `out` unless `--output` is given; diagnostics go to
/// `err`.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = writeln!(err, "{}", e.render());
                    let _ = writeln!(err, "{GRAMMAR}");
                    2
                }
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(Status::Ok) => 0,
        Ok(Status::Failed) => 1,
        Err(Failure::Analysis(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}\n\n{GRAMMAR}");
            2
        }
    }
}

fn seed(common: &Common) -> std::result::Result<u64, Failure> {
    if let Some(s) = common.seed {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("{SEED_ENV}={v} is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn parse_params(raw: &[String]) -> std::result::Result<Params, Failure> {
    let mut p = Params::new();
    for item in raw.iter().filter(|s| !s.trim().is_empty()) {
        let (k, v) = match item.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => (item.trim(), "1"),
        };
        let v = parse_rational(v)
            .ok_or_else(|| usage(format!("parameter {k}: `{v}` is not a rational number")))?;
        p.insert(k.to_string(), v);
    }
    Ok(p)
}

struct Loaded {
    def: Definition,
    info: Option<FamilyInfo>,
}

fn load(input: &Input) -> std::result::Result<Loaded, Failure> {
    let sources = [
        input.family.is_some(),
        input.file.is_some(),
        input.expr.is_some(),
    ];
    if sources.iter().filter(|s| **s).count() != 1 {
        return Err(usage("give exactly one of --family, --file and --expr"));
    }
    if !input.params.is_empty() && input.family.is_none() {
        return Err(usage("-p applies to --family only"));
    }
    let as_usage = |e: Error| match e {
        Error::Syntax { .. }
        | Error::UnknownFamily(_)
        | Error::UnboundSymbol(_)
        | Error::NonIntegerExponent(_)
        | Error::DefiningVariableOnRhs(_)
        | Error::NotSolvable(_) => Failure::Usage(e.to_string()),
        e => Failure::Analysis(e.to_string()),
    };
    if let Some(name) = &input.family {
        let f = builtin_family(name, &parse_params(&input.params)?).map_err(as_usage)?;
        return Ok(Loaded {
            def: f.def,
            info: Some(f.info),
        });
    }
    let (text, base) = match (&input.file, &input.expr) {
        (Some(path), _) => (
            std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?,
            path.parent().map(|p| p.to_path_buf()),
        ),
        (_, Some(text)) => (text.clone(), None),
        _ => unreachable!("one source checked above"),
    };
    let def = parse_definition_in(&text, base.as_deref()).map_err(as_usage)?;
    Ok(Loaded { def, info: None })
}

fn load_mapping(input: &Input) -> std::result::Result<(MappingDef, Option<FamilyInfo>), Failure> {
    let l = load(input)?;
    match l.def {
        Definition::Mapping(m) => Ok((m, l.info)),
        Definition::Lattice(_) => Err(usage("this command needs a one-dimensional map")),
    }
}

fn load_lattice(input: &Input) -> std::result::Result<(LatticeDef, Option<FamilyInfo>), Failure> {
    let l = load(input)?;
    match l.def {
        Definition::Lattice(d) => Ok((d, l.info)),
        Definition::Mapping(_) => Err(usage("this command needs a lattice equation")),
    }
}

fn parse_range(text: &str) -> std::result::Result<(i64, i64), Failure> {
    let bad = || usage(format!("`{text}` is not a range lo..hi"));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn region(args: &RegionArgs, default: Region) -> std::result::Result<Region, Failure> {
    match (&args.region, args.size) {
        (Some(_), Some(_)) => Err(usage("give --region or --size, not both")),
        (Some(r), None) => {
            let (ms, ns) = r
                .split_once(',')
                .ok_or_else(|| usage(format!("`{r}` is not m_lo..m_hi,n_lo..n_hi")))?;
            let (m_lo, m_hi) = parse_range(ms)?;
            let (n_lo, n_hi) = parse_range(ns)?;
            Ok(Region::new(m_lo, m_hi, n_lo, n_hi)?)
        }
        (None, Some(s)) if s >= 1 => Ok(Region::square(s)?),
        (None, Some(s)) => Err(usage(format!("--size {s} must be positive"))),
        (None, None) => Ok(default),
    }
}

fn entry_value(text: &str) -> EntryValue {
    match parse_rational(text) {
        Some(q) => EntryValue::Number(q),
        None => EntryValue::Coefficient(text.to_string()),
    }
}

fn default_entry(info: &Option<FamilyInfo>) -> EntryValue {
    info.as_ref()
        .map(|i| i.entry.clone())
        .unwrap_or(EntryValue::Number(Rational::from_integer(0.into())))
}

/// Collects data output and writes it once, to `--output` or `out`.
struct Sink {
    text: String,
}

impl Sink {
    fn new() -> Self {
        Sink {
            text: String::new(),
        }
    }

    fn json(&mut self, mut v: serde_json::Value) {
        if let serde_json::Value::Object(map) = &mut v {
            map.insert("schemaVersion".into(), json!(SCHEMA_VERSION));
        }
        let mut s = serde_json::to_string_pretty(&v).expect("serialisable");
        s.push('\n');
        self.text.push_str(&s);
    }

    fn csv(&mut self, f: impl FnOnce(&mut Vec<u8>) -> crate::Result<()>) -> crate::Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.text
            .push_str(&String::from_utf8(buf).expect("csv is utf-8"));
        Ok(())
    }

    fn finish(self, common: &Common, out: &mut dyn Write) -> std::result::Result<(), Failure> {
        match &common.output {
            Some(path) => std::fs::write(path, self.text)?,
            None => out.write_all(self.text.as_bytes())?,
        }
        Ok(())
    }
}

fn rows(header: &[&str], data: &[Vec<String>]) -> String {
    let mut w: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in data {
        for (i, c) in r.iter().enumerate() {
            w[i] = w[i].max(c.chars().count());
        }
    }
    let line = |cells: Vec<String>| {
        cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{c:>width$}", width = w[i]))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut s = line(header.iter().map(|h| h.to_string()).collect());
    s.push('\n');
    for r in data {
        s.push_str(&line(r.clone()));
        s.push('\n');
    }
    s
}

fn simple_csv(header: &[&str], data: &[Vec<String>]) -> crate::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in data {
        w.write_record(r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    match cmd {
        Command::Degrees {
            input,
            common,
            steps,
            mode,
            quiet,
        } => degrees(&input, &common, steps, mode, quiet, out, err),
        Command::Singularity {
            input,
            common,
            entry,
            at,
            depth,
            expect_confined,
        } => singularity(&input, &common, entry, at, depth, expect_confined, out),
        Command::Derive {
            input,
            common,
            symbolic,
            window,
            reference,
            entry,
        } => derive(&input, &common, &symbolic, &window, reference, entry, out),
        Command::Charpoly {
            input,
            common,
            kind,
            terms,
        } => charpoly(&input, &common, &kind, terms, out),
        Command::Classify {
            input,
            common,
            coeffs,
        } => classify_cmd(&input, &common, coeffs, out),
        Command::Lattice { action } => lattice(action, out),
        Command::Reduce {
            input,
            common,
            l,
            full,
            validate,
        } => reduce(&input, &common, l, full, validate, out),
        Command::Conserve {
            input,
            common,
            steps,
        } => conserve(&input, &common, steps, out),
        Command::Reproduce { common, only } => reproduce(&common, only, out, err),
    }
}

fn degrees(
    input: &Input,
    common: &Common,
    steps: usize,
    mode: ModeArg,
    quiet: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let (map, _) = load_mapping(input)?;
    let seed = seed(common)?;
    let mode = match mode {
        ModeArg::Exact => Mode::ExactRational,
        ModeArg::Modular => Mode::modular(),
    };
    let report = |n: usize, d: u64| {
        if !quiet {
            eprintln!("n={n} degree={d}");
        }
    };
    let mut opts = DegreeOptions::new(steps, mode, seed);
    if mode_is_exact(&opts.mode) {
        opts.progress = Some(&report);
    }
    let seq = match degree_sequence_with(&map, &opts) {
        Ok(s) => s,
        Err(Error::Resource { reason, partial }) => {
            writeln!(
                err,
                "error: resource limit: {reason}; partial degrees {partial:?}"
            )?;
            return Ok(Status::Failed);
        }
        Err(e) => return Err(e.into()),
    };
    if !seq.reliable {
        writeln!(
            err,
            "warning: the modular primes disagreed at entries {:?}",
            seq.disputed
        )?;
    }
    let mut sink = Sink::new();
    match common.format {
        Format::Json => sink.json(seq.to_json()),
        Format::Csv => sink.csv(|b| seq.write_csv(b))?,
        Format::Table => {
            let data: Vec<Vec<String>> = seq
                .degrees
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    let r = if i > 0 && seq.degrees[i - 1] > 0 && *d > 0 {
                        format!("{:.6}", *d as f64 / seq.degrees[i - 1] as f64)
                    } else {
                        String::new()
                    };
                    vec![i.to_string(), d.to_string(), r]
                })
                .collect();
            sink.text.push_str(&rows(&["n", "d_n", "ratio"], &data));
            if let Ok(e) = seq.entropy_estimate() {
                let _ = writeln!(
                    sink.text,
                    "final ratio {:.6}, entropy {:.6}, fitted slope {:.6}",
                    e.final_ratio, e.log_final_ratio, e.fitted_slope
                );
            }
        }
    }
    sink.finish(common, out)?;
    Ok(if seq.reliable {
        Status::Ok
    } else {
        Status::Failed
    })
}

fn mode_is_exact(m: &Mode) -> bool {
    matches!(m, Mode::ExactRational)
}

#[allow(clippy::too_many_arguments)]
fn singularity(
    input: &Input,
    common: &Common,
    entry: Option<String>,
    at: i64,
    depth: usize,
    expect_confined: bool,
    out: &mut dyn Write,
) -> Outcome {
    let (map, info) = load_mapping(input)?;
    let value = entry
        .as_deref()
        .map(entry_value)
        .unwrap_or_else(|| default_entry(&info));
    let spec = PerturbationSpec::new(value).at(at);
    let p = trace_pattern_seeded(&map, &spec, depth, seed(common)?)?;
    let mut sink = Sink::new();
    match common.format {
        Format::Json => sink.json(p.to_json()),
        Format::Csv => {
            let data: Vec<Vec<String>> = p
                .orders
                .iter()
                .enumerate()
                .map(|(i, o)| vec![(i + 1).to_string(), o.to_string()])
                .collect();
            sink.text.push_str(&simple_csv(&["step", "order"], &data)?);
        }
        Format::Table => {
            let _ = writeln!(sink.text, "pattern  {}", p.rendered());
            let _ = writeln!(sink.text, "verdict  {:?}", p.verdict);
            let _ = writeln!(sink.text, "orders   {:?}", p.orders);
            let _ = writeln!(sink.text, "memory   {:?}", p.memory_steps);
        }
    }
    sink.finish(common, out)?;
    Ok(if expect_confined && !p.verdict.is_confined() {
        Status::Failed
    } else {
        Status::Ok
    })
}

fn derive(
    input: &Input,
    common: &Common,
    symbolic: &str,
    window: &str,
    reference: Option<String>,
    entry: Option<String>,
    out: &mut dyn Write,
) -> Outcome {
    let (map, info) = load_mapping(input)?;
    let current = map.coeffs.get(symbolic).cloned();
    let map = match &current {
        Some(CoeffSpec::Symbolic { .. }) => map,
        Some(_) => {
            let (lo, hi) = parse_range(window)?;
            map.with_coeff(symbolic, CoeffSpec::symbolic(lo, hi)?)
        }
        None => return Err(usage(format!("the map has no coefficient `{symbolic}`"))),
    };
    let spec = PerturbationSpec::new(
        entry
            .as_deref()
            .map(entry_value)
            .unwrap_or_else(|| default_entry(&info)),
    );
    let candidates: Vec<Rational> =
        match reference {
            Some(r) => vec![parse_rational(&r)
                .ok_or_else(|| usage(format!("--reference {r} is not rational")))?],
            None => {
                let mut c = Vec::new();
                if let Some(CoeffSpec::Constant(v)) = &current {
                    c.push(v.clone());
                }
                c.extend([rational(0, 1), rational(1, 1)]);
                c
            }
        };
    let mut last = None;
    let mut found = None;
    for r in &candidates {
        match derive_coefficient_constraints(&map, &spec, r) {
            Ok(d) => {
                found = Some((r.clone(), d));
                break;
            }
            Err(e @ Error::InvalidInput(_)) => last = Some(e),
            Err(e) => return Err(e.into()),
        }
    }
    let Some((reference, d)) = found else {
        return Err(last.expect("at least one candidate").into());
    };
    let mut items = Vec::new();
    for r in &d.relations {
        let rec = r.to_recurrence();
        let (poly, root) = match &rec {
            Some(rec) => {
                let p = recurrence_charpoly(rec)?;
                let c = classify(&p)?;
                (Some(p.to_string()), Some(c.largest_root_modulus))
            }
            None => (None, None),
        };
        items.push((r.to_string(), rec.map(|r| r.to_string()), poly, root));
    }
    let mut sink = Sink::new();
    match common.format {
        Format::Json => sink.json(json!({
            "reference": render_rational(&reference),
            "exitStep": d.exit_step,
            "memoryRecovered": d.memory_recovered,
            "relations": items.iter().map(|(rel, rec, p, root)| json!({
                "relation": rel, "recurrence": rec, "charpoly": p, "largestRoot": root,
            })).collect::<Vec<_>>(),
        })),
        Format::Csv | Format::Table => {
            let data: Vec<Vec<String>> = items
                .iter()
                .map(|(rel, rec, p, root)| {
                    vec![
                        rel.clone(),
                        rec.clone().unwrap_or_default(),
                        p.clone().unwrap_or_default(),
                        root.map(|r| format!("{r:.9}")).unwrap_or_default(),
                    ]
                })
                .collect();
            let header = ["relation", "recurrence", "charpoly", "largest_root"];
            if common.format == Format::Csv {
                sink.text.push_str(&simple_csv(&header, &data)?);
            } else {
                let _ = writeln!(
                    sink.text,
                    "reference {} = {}, exit step {}, memory recovered: {}",
                    symbolic,
                    render_rational(&reference),
                    d.exit_step,
                    d.memory_recovered
                );
                for (rel, rec, p, root) in &items {
                    let _ = writeln!(sink.text, "{rel}");
                    if let (Some(rec), Some(p), Some(root)) = (rec, p, root) {
                        let _ =
                            writeln!(sink.text, "  {rec}\n  charpoly {p}, largest root {root:.9}");
                    }
                }
            }
        }
    }
    sink.finish(common, out)?;
    Ok(if d.memory_recovered {
        Status::Ok
    } else {
        Status::Failed
    })
}

fn parse_terms(text: &str) -> std::result::Result<Vec<(i64, i64)>, Failure> {
    text.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let (s, c) = t
                .split_once(':')
                .ok_or_else(|| usage(format!("term `{t}` is not shift:coefficient")))?;
            let num = |x: &str| {
                x.trim()
                    .parse::<i64>()
                    .map_err(|_| usage(format!("term `{t}` is not shift:coefficient")))
            };
            Ok((num(s)?, num(c)?))
        })
        .collect()
}

fn poly_json(p: &IntPoly) -> serde_json::Value {
    json!({
        "polynomial": p.to_string(),
        "coefficients": p.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
    })
}

fn charpoly(
    input: &Input,
    common: &Common,
    kind: &str,
    terms: Option<String>,
    out: &mut dyn Write,
) -> Outcome {
    let kind = match kind {
        "additive" => RecurrenceKind::Additive,
        "multiplicative" => RecurrenceKind::Multiplicative,
        k => return Err(usage(format!("unknown recurrence kind `{k}`"))),
    };
    let recs: Vec<Recurrence> = match (&terms, &input.family) {
        (Some(t), None) => vec![Recurrence {
            kind,
            coefficient: "a".into(),
            terms: parse_terms(t)?,
        }],
        (None, Some(_)) => {
            let info = load(input)?.info.expect("families carry metadata");
            if info.constraints.is_empty() {
                return Err(usage(format!(
                    "family {} has no coefficient constraint",
                    info.name
                )));
            }
            info.constraints
        }
        _ => return Err(usage("give either --terms or --family")),
    };
    let polys: Vec<(String, IntPoly)> = recs
        .iter()
        .map(|r| Ok((r.to_string(), recurrence_charpoly(r)?)))
        .collect::<crate::Result<_>>()?;
    let mut sink = Sink::new();
    match common.format {
        Format::Json => sink.json(json!({
            "charpolys": polys.iter().map(|(r, p)| {
                let mut v = poly_json(p);
                v["recurrence"] = json!(r);
                v
            }).collect::<Vec<_>>(),
        })),
        Format::Csv => {
            let data: Vec<Vec<String>> = polys
                .iter()
                .map(|(r, p)| vec![r.clone(), p.to_string()])
                .collect();
            sink.text
                .push_str(&simple_csv(&["recurrence", "charpoly"], &data)?);
        }
        Format::Table => {
            for (r, p) in &polys {
                let _ = writeln!(sink.text, "{r}\n  {p}");
            }
        }
    }
    sink.finish(common, out)?;
    Ok(Status::Ok)
}

fn int_param(p: &Params, keys: &[&str]) -> std::result::Result<i64, Failure> {
    for k in keys {
        if let Some(v) = p.get(*k) {
            if !v.is_integer() {
                return Err(usage(format!("parameter {k} must be an integer")));
            }
            return i64::try_from(v.to_integer())
                .map_err(|_| usage(format!("parameter {k} out of range")));
        }
    }
    Err(usage(format!("missing parameter {}", keys[0])))
}

/// Named spectral polynomial, with a flag for families known only by
/// extrapolation from the worked cases.
fn spectral_family(
    name: &str,
    params: &Params,
) -> std::result::Result<Option<(IntPoly, bool)>, Failure> {
    let k = || int_param(params, &["k"]);
    let l = || int_param(params, &["l", "ell"]).map(|l| l.max(0) as usize);
    Ok(Some(match name {
        "P_ell" | "p_ell" => (p_ell(k()?, l()?)?, false),
        "limit" => {
            let k = k()?;
            (limit_polynomial(k, l()?)?, k != 3)
        }
        "late" => {
            let m = int_param(params, &["m"])?;
            let idx = if m <= 0 {
                LateIndex::Limit
            } else {
                LateIndex::Finite(m as usize)
            };
            let p = late_confinement_polynomial(k()?, l()?, idx)?;
            (p.poly, p.extrapolated)
        }
        "kdv_constraint" => (
            kdv_constraint_charpoly(int_param(params, &["q"])?.max(0) as usize)?,
            false,
        ),
        "reduction_charpoly" => (reduction_charpoly(k()?, l()?)?.0, false),
        _ => return Ok(None),
    }))
}

fn classify_cmd(
    input: &Input,
    common: &Common,
    coeffs: Option<String>,
    out: &mut dyn Write,
) -> Outcome {
    let (poly, extrapolated) = match (&coeffs, &input.family) {
        (Some(c), None) => {
            let mut v = c
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse::<i64>()
                        .map_err(|_| usage(format!("coefficient `{x}` is not an integer")))
                })
                .collect::<std::result::Result<Vec<i64>, _>>()?;
            v.reverse();
            (IntPoly::from_i64(&v)?, false)
        }
        (None, Some(name)) => {
            let params = parse_params(&input.params)?;
            match spectral_family(name, &params)? {
                Some(p) => p,
                None if family_names().contains(&name.as_str()) => {
                    let info = load(input)?.info.expect("families carry metadata");
                    let r = info.constraints.first().ok_or_else(|| {
                        usage(format!("family {name} has no coefficient constraint"))
                    })?;
                    (recurrence_charpoly(r)?, false)
                }
                None => return Err(usage(format!("unknown family `{name}`"))),
            }
        }
        _ => return Err(usage("give either --coeffs or --family")),
    };
    let c = classify(&poly)?;
    let mut sink = Sink::new();
    match common.format {
        Format::Json => {
            let mut v = c.to_json(&poly);
            v["extrapolated"] = json!(extrapolated);
            sink.json(v)
        }
        Format::Csv => {
            let data: Vec<Vec<String>> = c
                .roots
                .iter()
                .map(|r| {
                    vec![
                        format!("{:.12}", r.re),
                        format!("{:.12}", r.im),
                        format!("{:.12}", r.modulus()),
                        r.multiplicity.to_string(),
                    ]
                })
                .collect();
            sink.text.push_str(&simple_csv(
                &["re", "im", "modulus", "multiplicity"],
                &data,
            )?);
        }
        Format::Table => {
            let f = &c.flags;
            let _ = writeln!(sink.text, "polynomial        {}", c.polynomial);
            let _ = writeln!(sink.text, "largest |root|    {:.9}", c.largest_root_modulus);
            let _ = writeln!(sink.text, "entropy           {:.9}", c.entropy);
            let _ = writeln!(
                sink.text,
                "roots of unity {}, reciprocal {}, quadratic reciprocal {}, salem {}, pisot {}",
                f.all_roots_of_unity, f.reciprocal, f.quadratic_reciprocal, f.salem, f.pisot
            );
            for r in &c.roots {
                let _ = writeln!(
                    sink.text,
                    "  {:>14.9} {:>+14.9}i  |{:.9}|  x{}",
                    r.re,
                    r.im,
                    r.modulus(),
                    r.multiplicity
                );
            }
            for n in &c.notes {
                let _ = writeln!(sink.text, "note: {n}");
            }
            if extrapolated {
                let _ = writeln!(
                    sink.text,
                    "note: extrapolated beyond the worked cases (k = 3, l = 3)"
                );
            }
        }
    }
    sink.finish(common, out)?;
    Ok(Status::Ok)
}

fn trace_default_region() -> Region {
    Region::new(-4, 6, -3, 7).expect("nonempty")
}

fn parse_site(text: &str) -> std::result::Result<Site, Failure> {
    let bad = || usage(format!("`{text}` is not a site m,n"));
    let (m, n) = text.split_once(',').ok_or_else(bad)?;
    Ok((
        m.trim().parse().map_err(|_| bad())?,
        n.trim().parse().map_err(|_| bad())?,
    ))
}

fn lattice(action: LatticeAction, out: &mut dyn Write) -> Outcome {
    match action {
        LatticeAction::Evolve {
            input,
            common,
            region: r,
            staircase,
        } => {
            let (def, _) = load_lattice(&input)?;
            let region = region(&r, Region::square(6)?)?;
            let st = match staircase {
                StaircaseArg::Corner => Staircase::corner(&region),
                StaircaseArg::Alternating => {
                    Staircase::alternating_for(region.m_lo + region.n_lo, &region)
                }
            };
            let state = evolve(&def, &st, &st.generic_values(seed(&common)?), &region)?;
            let mut sink = Sink::new();
            match common.format {
                Format::Json => sink.json(state.to_json()),
                Format::Csv => sink.csv(|b| state.write_csv(b))?,
                Format::Table => {
                    let data: Vec<Vec<String>> = region
                        .sites()
                        .into_iter()
                        .filter_map(|s| {
                            let v = if state.singular.contains(&s) {
                                "singular".to_string()
                            } else {
                                render_rational(state.get(s)?)
                            };
                            Some(vec![s.0.to_string(), s.1.to_string(), v])
                        })
                        .collect();
                    sink.text.push_str(&rows(&["m", "n", "value"], &data));
                }
            }
            sink.finish(&common, out)?;
            Ok(Status::Ok)
        }
        LatticeAction::Confine {
            input,
            common,
            region: r,
            expect_confined,
        } => {
            let (def, _) = load_lattice(&input)?;
            let region = region(&r, Region::square(8)?)?;
            let report = check_confinement_conditions(&def, &region)?;
            let all = report.iter().all(|c| c.holds);
            let mut sink = Sink::new();
            let data: Vec<Vec<String>> = report
                .iter()
                .map(|c| {
                    vec![
                        c.id.clone(),
                        c.holds.to_string(),
                        c.sites_checked.to_string(),
                        c.first_failure
                            .map(|s| format!("({},{})", s.0, s.1))
                            .unwrap_or_default(),
                        c.statement.clone(),
                    ]
                })
                .collect();
            let header = ["condition", "holds", "sites", "first_failure", "statement"];
            match common.format {
                Format::Json => {
                    sink.json(json!({ "region": region, "conditions": report, "allHold": all }))
                }
                Format::Csv => sink.text.push_str(&simple_csv(&header, &data)?),
                Format::Table => sink.text.push_str(&rows(&header, &data)),
            }
            sink.finish(&common, out)?;
            Ok(if expect_confined && !all {
                Status::Failed
            } else {
                Status::Ok
            })
        }
        LatticeAction::Gauge {
            input,
            common,
            region: r,
        } => {
            let (def, _) = load_lattice(&input)?;
            let region = region(&r, Region::square(8)?)?;
            let g = gauge_normalize(&def, &region)?;
            let data: Vec<Vec<String>> = g
                .phi
                .iter()
                .map(|(d, p)| {
                    vec![
                        d.to_string(),
                        g.ratio.get(d).map(render_rational).unwrap_or_default(),
                        render_rational(p),
                    ]
                })
                .collect();
            let header = ["m_minus_n", "ratio", "phi"];
            let mut sink = Sink::new();
            match common.format {
                Format::Json => sink.json(json!({
                    "verified": g.verified,
                    "gauge": data.iter().map(|r| json!({"mMinusN": r[0], "ratio": r[1], "phi": r[2]})).collect::<Vec<_>>(),
                })),
                Format::Csv => sink.text.push_str(&simple_csv(&header, &data)?),
                Format::Table => {
                    sink.text.push_str(&rows(&header, &data));
                    let _ = writeln!(sink.text, "verified: {}", g.verified);
                }
            }
            sink.finish(&common, out)?;
            Ok(if g.verified {
                Status::Ok
            } else {
                Status::Failed
            })
        }
        LatticeAction::Trace {
            input,
            common,
            region: r,
            zeros,
            expect_confined,
        } => {
            let (def, _) = load_lattice(&input)?;
            let region = region(&r, trace_default_region())?;
            let sites = if zeros.is_empty() {
                vec![(0, 0)]
            } else {
                zeros
                    .iter()
                    .map(|z| parse_site(z))
                    .collect::<std::result::Result<_, _>>()?
            };
            let diag = sites[0].0 + sites[0].1;
            if sites.iter().any(|s| s.0 + s.1 != diag) {
                return Err(usage("zero sites must share one anti-diagonal m+n"));
            }
            let st = Staircase::alternating_for(diag, &region);
            let seeds: Vec<(Site, Rational)> = sites
                .iter()
                .enumerate()
                .map(|(i, s)| (*s, rational(i as i64 + 1, 1)))
                .collect();
            let p = trace_lattice_singularity(&def, &st, &seeds, &region, seed(&common)?)?;
            let mut sink = Sink::new();
            match common.format {
                Format::Json => sink.json(p.to_json()),
                Format::Csv => sink.csv(|b| p.write_csv(b))?,
                Format::Table => {
                    sink.text.push_str(&p.render_grid());
                    let _ = writeln!(sink.text, "\nverdict: {:?}", p.verdict);
                }
            }
            sink.finish(&common, out)?;
            Ok(
                if expect_confined && p.verdict != LatticeVerdict::Confined {
                    Status::Failed
                } else {
                    Status::Ok
                },
            )
        }
    }
}

fn reduce(
    input: &Input,
    common: &Common,
    l: u32,
    full: bool,
    validate: usize,
    out: &mut dyn Write,
) -> Outcome {
    let (def, _) = load_lattice(input)?;
    let red = reduce_to_mapping(&def, l, full)?;
    let cv = if validate > 0 {
        Some(cross_validate_reduction(
            &def,
            l,
            full,
            validate,
            seed(common)?,
        )?)
    } else {
        None
    };
    let constraints: Vec<String> = red.constraints.iter().map(|c| c.to_string()).collect();
    let mut sink = Sink::new();
    match common.format {
        Format::Json => sink.json(json!({
            "mapping": red.mapping.to_string(),
            "k": red.k,
            "l": red.l,
            "full": red.full,
            "constraints": constraints,
            "conditions": red.conditions,
            "indexMap": red.index_map,
            "crossValidation": cv,
        })),
        Format::Csv => {
            let mut data = vec![vec!["mapping".to_string(), red.mapping.to_string()]];
            data.extend(
                constraints
                    .iter()
                    .map(|c| vec!["constraint".into(), c.clone()]),
            );
            data.extend(
                red.conditions
                    .iter()
                    .map(|c| vec!["condition".into(), c.clone()]),
            );
            data.push(vec!["index_map".into(), red.index_map.clone()]);
            if let Some(cv) = &cv {
                data.push(vec!["agree".into(), cv.agree.to_string()]);
            }
            sink.text.push_str(&simple_csv(&["field", "value"], &data)?);
        }
        Format::Table => {
            let _ = writeln!(sink.text, "{}", red.mapping.to_string().trim_end());
            for c in &constraints {
                let _ = writeln!(sink.text, "constraint: {c}");
            }
            for c in &red.conditions {
                let _ = writeln!(sink.text, "condition: {c}");
            }
            let _ = writeln!(sink.text, "index map: {}", red.index_map);
            if let Some(cv) = &cv {
                let _ = writeln!(
                    sink.text,
                    "cross-validation over {} steps: {} sites compared, agree: {}",
                    cv.steps, cv.sites_compared, cv.agree
                );
            }
        }
    }
    sink.finish(common, out)?;
    Ok(match cv {
        Some(cv) if !cv.agree => Status::Failed,
        _ => Status::Ok,
    })
}

fn conserve(input: &Input, common: &Common, steps: usize, out: &mut dyn Write) -> Outcome {
    let (map, _) = load_mapping(input)?;
    if map.bottom != -1 {
        return Err(usage("expected a reduced map x[n+l] = -x[n-1] + ..."));
    }
    let order = map.order();
    let init = crate::degree::generic_constants(seed(common)?, order, &[]);
    let mut orbit = init.clone();
    orbit.extend(crate::dsl::iterate_mapping(&map, &init, -1, steps)?);
    let q = conserved_quantity(&map, &orbit, -1)?;
    let constant = q.windows(2).all(|w| w[0] == w[1]);
    let data: Vec<Vec<String>> = q
        .iter()
        .enumerate()
        .map(|(i, v)| vec![i.to_string(), render_rational(v)])
        .collect();
    let mut sink = Sink::new();
    match common.format {
        Format::Json => sink.json(json!({
            "values": q.iter().map(render_rational).collect::<Vec<_>>(),
            "constant": constant,
        })),
        Format::Csv => sink.text.push_str(&simple_csv(&["index", "q"], &data)?),
        Format::Table => {
            sink.text.push_str(&rows(&["index", "q"], &data));
            let _ = writeln!(sink.text, "constant: {constant}");
        }
    }
    sink.finish(common, out)?;
    Ok(if constant { Status::Ok } else { Status::Failed })
}

fn reproduce(
    common: &Common,
    only: Vec<usize>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let ids: Vec<usize> = if only.is_empty() {
        (1..=CRITERIA).collect()
    } else {
        only
    };
    if let Some(bad) = ids.iter().find(|i| **i == 0 || **i > CRITERIA) {
        return Err(usage(format!("there is no criterion {bad}")));
    }
    let progress = |r: &CriterionReport| {
        eprintln!(
            "criterion {}: {}",
            r.id,
            if r.passed { "pass" } else { "FAIL" }
        );
    };
    let reports = run_criteria(&ids, common.jobs, &progress);
    let mut sink = Sink::new();
    match common.format {
        Format::Json => sink.json(crate::reproduce::to_json(&reports)),
        Format::Csv => {
            let data: Vec<Vec<String>> = reports
                .iter()
                .flat_map(|r| {
                    r.checks.iter().map(move |c| {
                        vec![
                            r.id.to_string(),
                            c.label.clone(),
                            c.passed.to_string(),
                            c.detail.clone(),
                        ]
                    })
                })
                .collect();
            sink.text.push_str(&simple_csv(
                &["criterion", "check", "passed", "detail"],
                &data,
            )?);
        }
        Format::Table => {
            for r in &reports {
                let _ = writeln!(
                    sink.text,
                    "[{}] {:>2} {}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.id,
                    r.title
                );
                for c in &r.checks {
                    let _ = writeln!(
                        sink.text,
                        "       {} {}: {}",
                        if c.passed { "ok  " } else { "FAIL" },
                        c.label,
                        c.detail
                    );
                }
                if let Some(e) = &r.error {
                    let _ = writeln!(sink.text, "       error: {e}");
                }
            }
        }
    }
    sink.finish(common, out)?;
    let _ = err.flush();
    Ok(if reports.iter().all(|r| r.passed) {
        Status::Ok
    } else {
        Status::Failed
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("entropyforge").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn parameters_parse() {
        let p = parse_params(&["k=2".into(), "violate_constraint".into(), "a=1/2".into()]).unwrap();
        assert_eq!(p["k"], rational(2, 1));
        assert_eq!(p["violate_constraint"], rational(1, 1));
        assert_eq!(p["a"], rational(1, 2));
        assert!(parse_params(&["k=x".into()]).is_err());
    }

    #[test]
    fn ranges_and_sites() {
        assert_eq!(parse_range("-2..5").ok(), Some((-2, 5)));
        assert!(parse_range("3").is_err());
        assert_eq!(parse_site("-1,2").ok(), Some((-1, 2)));
        let r = region(
            &RegionArgs {
                region: Some("-1..2,0..3".into()),
                size: None,
            },
            Region::square(2).unwrap(),
        )
        .ok()
        .unwrap();
        assert_eq!((r.m_lo, r.m_hi, r.n_lo, r.n_hi), (-1, 2, 0, 3));
    }

    #[test]
    fn terms_parse() {
        assert_eq!(parse_terms("3:1,0:-1").ok(), Some(vec![(3, 1), (0, -1)]));
        assert!(parse_terms("3").is_err());
    }

    #[test]
    fn two_sources_are_a_usage_error() {
        let (code, _, err) = call(&["degrees", "--family", "hv", "--expr", "x[n+1] = x[n]"]);
        assert_eq!(code, 2);
        assert!(err.contains("exactly one"));
    }

    #[test]
    fn table_rows_align() {
        let t = rows(&["n", "d"], &[vec!["1".into(), "10".into()]]);
        assert_eq!(t, "n   d\n1  10\n");
    }
}
