//! Argument handling and report writing for the `bogo` binary.

use std::io::Write;
use std::path::PathBuf;

use bogo_core::bilinear::{main_theorem_experiment, ExperimentConfig, ExperimentReport, DEFAULT_WORD};
use bogo_core::group::CEILING_ENV;
use bogo_core::suites::{run_suite, SuiteConfig, SuiteReport};
use clap::{Parser, ValueEnum};
use serde::Serialize;
use thiserror::Error;

/// Version of the CSV column layout. Bump when columns change.
pub const CSV_VERSION: u32 = 1;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CliError {
    #[error("group spec error at column {pos}: {msg}")]
    GroupSpec { pos: usize, msg: String },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Core(#[from] bogo_core::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => EXIT_FAIL,
            _ => EXIT_USAGE,
        }
    }
}

/// Parses `Z<n>(xZ<n>)*`, ignoring whitespace. Positions are character
/// offsets into the original text.
pub fn parse_group_spec(text: &str) -> Result<Vec<i64>, CliError> {
    let chars: Vec<(usize, char)> = text.chars().enumerate().filter(|(_, c)| !c.is_whitespace()).collect();
    let err = |pos: usize, msg: &str| CliError::GroupSpec { pos, msg: msg.into() };
    let end = text.chars().count();
    let mut out = Vec::new();
    let mut i = 0;
    loop {
        match chars.get(i) {
            Some(&(_, 'Z')) => i += 1,
            Some(&(p, c)) => return Err(err(p, &format!("expected `Z`, found `{c}`"))),
            None => return Err(err(end, "expected `Z`")),
        }
        let start = i;
        while chars.get(i).is_some_and(|(_, c)| c.is_ascii_digit()) {
            i += 1;
        }
        let pos = chars.get(start).map_or(end, |&(p, _)| p);
        if i == start {
            return Err(match chars.get(i) {
                Some(&(_, '-')) => err(pos, "modulus must be positive"),
                _ => err(pos, "expected a modulus"),
            });
        }
        let digits: String = chars[start..i].iter().map(|&(_, c)| c).collect();
        let n: i64 = digits.parse().map_err(|_| err(pos, "modulus too large"))?;
        if n <= 0 {
            return Err(err(pos, "modulus must be positive"));
        }
        out.push(n);
        match chars.get(i) {
            None => return Ok(out),
            Some(&(_, 'x')) => i += 1,
            Some(&(p, c)) => return Err(err(p, &format!("expected `x` or end of input, found `{c}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Runs a verification suite or a main-theorem experiment.
///
/// With `--suite` the named suite runs; otherwise `--group-g`, `--group-h`
/// and `--delta` describe an experiment. Exit status is 0 when everything
/// passes, 1 on a failed check and 2 on a usage error.
#[derive(Debug, Parser)]
#[command(name = "bogo", version)]
pub struct Args {
    /// Suite name: bohr, progression, lattice, bilinear, quasirandom, regularity, main-theorem or all.
    #[arg(long, conflicts_with_all = ["group_g", "group_h", "delta"])]
    pub suite: Option<String>,
    /// First group, e.g. `Z16` or `Z4xZ4`.
    #[arg(long)]
    pub group_g: Option<String>,
    /// Second group.
    #[arg(long)]
    pub group_h: Option<String>,
    /// Density of the random set in (0, 1].
    #[arg(long)]
    pub delta: Option<f64>,
    /// Difference operators applied right to left.
    #[arg(long, default_value = DEFAULT_WORD)]
    pub word: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Group-order ceiling as a power of two. Takes precedence over the environment.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..63))]
    pub ceiling: Option<u32>,
    /// Relation steps allowed in the regularity loop.
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    pub step_cap: u64,
    /// Candidate varieties evaluated per experiment.
    #[arg(long, default_value_t = 20_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub budget: u64,
}

/// What a run produced, ready for writing.
pub enum Outcome {
    Suite(SuiteReport),
    Experiment(Box<ExperimentReport>),
}

impl Outcome {
    pub fn passed(&self) -> bool {
        match self {
            Outcome::Suite(r) => r.passed,
            Outcome::Experiment(r) => r.verified,
        }
    }
}

pub fn run(args: &Args) -> Result<Outcome, CliError> {
    if let Some(bits) = args.ceiling {
        std::env::set_var(CEILING_ENV, bits.to_string());
    }
    if let Some(name) = &args.suite {
        let cfg = SuiteConfig { seed: args.seed, step_cap: args.step_cap as usize, budget: args.budget };
        return Ok(Outcome::Suite(run_suite(name, &cfg)?));
    }
    let (Some(g), Some(h), Some(delta)) = (&args.group_g, &args.group_h, args.delta) else {
        return Err(CliError::Usage("give --suite, or all of --group-g, --group-h and --delta".into()));
    };
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(CliError::Usage(format!("--delta must lie in (0, 1], got {delta}")));
    }
    if let Some((i, c)) = args.word.chars().enumerate().find(|(_, c)| *c != 'h' && *c != 'v') {
        return Err(CliError::Usage(format!("--word has `{c}` at position {i}; only `h` and `v` are allowed")));
    }
    let mut cfg = ExperimentConfig::new(&parse_group_spec(g)?, &parse_group_spec(h)?, delta, args.seed);
    cfg.word = args.word.clone();
    cfg.budget = args.budget;
    Ok(Outcome::Experiment(Box::new(main_theorem_experiment(&cfg)?)))
}

#[derive(Serialize)]
struct ExperimentRow<'a> {
    csv_version: u32,
    schema_version: u32,
    group_g: &'a str,
    group_h: &'a str,
    delta: f64,
    seed: u64,
    word: &'a str,
    a_size: usize,
    d_size: usize,
    variety_size: usize,
    gamma_size: usize,
    rho: String,
    progression_rank: usize,
    maps: usize,
    source: &'a str,
    verified: bool,
    nontrivial: bool,
    candidates_tried: u64,
    budget_exhausted: bool,
    triple_density: f64,
    elapsed_ms: u64,
}

#[derive(Serialize)]
struct CheckRow<'a> {
    csv_version: u32,
    schema_version: u32,
    suite: &'a str,
    seed: u64,
    check: &'a str,
    module: &'a str,
    passed: bool,
    elapsed_ms: u64,
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

/// Serializes the outcome in the requested format.
pub fn render(outcome: &Outcome, format: Format) -> Result<Vec<u8>, CliError> {
    match (outcome, format) {
        (Outcome::Suite(r), Format::Json) => json_bytes(r),
        (Outcome::Experiment(r), Format::Json) => json_bytes(r.as_ref()),
        (Outcome::Suite(r), Format::Csv) => csv_bytes(r.checks.iter().map(|c| CheckRow {
            csv_version: CSV_VERSION,
            schema_version: r.schema_version,
            suite: &r.suite,
            seed: r.seed,
            check: &c.name,
            module: &c.module,
            passed: c.passed,
            elapsed_ms: c.elapsed_ms,
        })),
        (Outcome::Experiment(r), Format::Csv) => {
            let v = &r.variety;
            let rho = v.rho();
            csv_bytes([ExperimentRow {
                csv_version: CSV_VERSION,
                schema_version: r.schema_version,
                group_g: &r.group_g,
                group_h: &r.group_h,
                delta: r.delta,
                seed: r.seed,
                word: &r.word,
                a_size: r.a_size,
                d_size: r.d_size,
                variety_size: r.variety_size,
                gamma_size: v.gamma().len(),
                rho: format!("{}/{}", rho.numer(), rho.denom()),
                progression_rank: v.progression().rank(),
                maps: v.maps().len(),
                source: &r.source,
                verified: r.verified,
                nontrivial: r.nontrivial,
                candidates_tried: r.candidates_tried,
                budget_exhausted: r.budget_exhausted,
                triple_density: r.triple_density,
                elapsed_ms: r.elapsed_ms,
            }])
        }
    }
}

/// Parses, runs and writes; returns the process exit code.
pub fn main_with(args: &Args) -> i32 {
    let outcome = match run(args) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("bogo: {e}");
            return e.exit_code();
        }
    };
    let bytes = match render(&outcome, args.format) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("bogo: {e}");
            return e.exit_code();
        }
    };
    let written = match &args.out {
        Some(path) => std::fs::write(path, &bytes),
        None => std::io::stdout().write_all(&bytes),
    };
    if let Err(e) = written {
        eprintln!("bogo: cannot write report: {e}");
        return EXIT_FAIL;
    }
    if outcome.passed() {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

/// Name used in reports for a list of moduli.
pub fn spec_name(moduli: &[i64]) -> String {
    moduli.iter().map(|q| format!("Z{q}")).collect::<Vec<_>>().join("x")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_examples() {
        assert_eq!(parse_group_spec("Z4xZ2").unwrap(), vec![4, 2]);
        assert_eq!(parse_group_spec("Z1").unwrap(), vec![1]);
        assert_eq!(parse_group_spec(" Z 4 x Z 2\t").unwrap(), vec![4, 2]);
        assert!(matches!(parse_group_spec("Z0"), Err(CliError::GroupSpec { pos: 1, .. })));
    }

    #[test]
    fn spec_errors_carry_positions() {
        assert_eq!(parse_group_spec("Z4y").unwrap_err(), CliError::GroupSpec { pos: 2, msg: "expected `x` or end of input, found `y`".into() });
        assert!(matches!(parse_group_spec(""), Err(CliError::GroupSpec { pos: 0, .. })));
        assert!(matches!(parse_group_spec("Z4x"), Err(CliError::GroupSpec { pos: 3, .. })));
        assert!(matches!(parse_group_spec("Z-3"), Err(CliError::GroupSpec { pos: 1, .. })));
        assert!(matches!(parse_group_spec("4"), Err(CliError::GroupSpec { pos: 0, .. })));
        assert!(matches!(parse_group_spec("Z99999999999999999999"), Err(CliError::GroupSpec { pos: 1, .. })));
    }

    #[test]
    fn names_round_trip() {
        assert_eq!(spec_name(&parse_group_spec("Z4xZ2xZ9").unwrap()), "Z4xZ2xZ9");
    }
}
