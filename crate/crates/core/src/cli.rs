//! Command-line front end.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::PROBABILITY_TOL;
use crate::library::{builtin, builtin_names, LibraryError, RegimeTag};
use crate::oracle::oracle_distribution;
use crate::paths::{self, real_path_graph, DistributionError, Implication, OutcomeDistribution};
use crate::scenario::{
    parse_scenario_bytes, serialize_scenario, JsonError, ParseError, Scenario, Violation,
};

#[derive(Debug, Parser)]
#[command(
    name = "wigner-paths",
    version,
    about = "Path-amplitude and dilation engines for multi-agent measurement scenarios"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the outcome distribution of a scenario.
    Run(RunArgs),
    /// Print a scenario in `.scn` form (or JSON).
    Show {
        source: String,
        #[arg(long)]
        regime: Option<RegimeTag>,
        #[arg(long)]
        json: bool,
    },
    /// List the built-in scenarios.
    List,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Paths,
    Oracle,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Dot,
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// Built-in name, or path to a `.scn` file (`.json` for the JSON form).
    pub source: String,
    /// Record regime for `2w2f`.
    #[arg(long)]
    pub regime: Option<RegimeTag>,
    #[arg(long, value_enum, default_value = "both")]
    pub engine: Engine,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    /// Implication query `A=>B`; labels may be written `agent:label`.
    #[arg(long = "query")]
    pub queries: Vec<String>,
    /// Write the rendered output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{error}")]
    Parse { path: String, error: ParseError },
    #[error("{path}: {error}")]
    Json { path: String, error: JsonError },
    #[error("cannot read {path}: {error}")]
    Read { path: String, error: std::io::Error },
    #[error("`{0}` is neither a built-in nor a readable file (built-ins: {1})")]
    UnknownSource(String, String),
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error(transparent)]
    Invalid(#[from] Violation),
    #[error("query `{query}`: {reason}")]
    Query { query: String, reason: String },
    #[error("query `{query}`: {error}")]
    QueryFailed {
        query: String,
        error: DistributionError,
    },
    #[error("cannot write {path}: {error}")]
    Write { path: String, error: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Write { .. } | CliError::Read { .. } => 74,
            _ => 1,
        }
    }
}

/// Exit code when the two engines disagree by more than the tolerance.
pub const DISAGREEMENT_EXIT: i32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub query: String,
    pub given: (String, String),
    pub then: (String, String),
    pub holds: bool,
    /// Probability of `given` with `then` violated.
    pub counter_probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub scenario: String,
    pub source: String,
    pub regime: String,
    pub engine: Engine,
    pub paths: Option<OutcomeDistribution>,
    pub oracle: Option<OutcomeDistribution>,
    /// Max entrywise difference between the engines, when both ran.
    pub delta: Option<f64>,
    pub queries: Vec<QueryResult>,
    pub output_path: Option<PathBuf>,
}

impl RunReport {
    /// The distribution shown to the user: the path engine's when it ran.
    pub fn distribution(&self) -> &OutcomeDistribution {
        self.paths
            .as_ref()
            .or(self.oracle.as_ref())
            .expect("at least one engine ran")
    }

    pub fn engines_agree(&self) -> bool {
        self.delta.is_none_or(|d| d <= PROBABILITY_TOL)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonOutcome {
    pub tuple: Vec<(String, String)>,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonReport {
    pub scenario: String,
    pub regime: String,
    pub engine: Engine,
    pub outcomes: Vec<JsonOutcome>,
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub queries: Vec<QueryResult>,
}

/// Resolves a built-in name or a `.scn` path. Returns the scenario and the
/// regime name to report.
pub fn load_source(
    source: &str,
    regime: Option<RegimeTag>,
) -> Result<(Scenario, String), CliError> {
    if builtin_names().contains(&source) {
        let s = builtin(source, regime)?;
        let tag = match (source, regime) {
            ("2w2f", Some(r)) => r.name().to_string(),
            _ => source
                .strip_prefix("2w2f_")
                .map(str::to_string)
                .unwrap_or_else(|| s.regime_description()),
        };
        return Ok((s, tag));
    }
    let path = Path::new(source);
    if !path.exists() {
        return Err(CliError::UnknownSource(
            source.to_string(),
            builtin_names().join(", "),
        ));
    }
    let bytes = std::fs::read(path).map_err(|error| CliError::Read {
        path: source.to_string(),
        error,
    })?;
    let s = if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        let text = String::from_utf8_lossy(&bytes);
        Scenario::from_json(&text).map_err(|error| CliError::Json {
            path: source.to_string(),
            error,
        })?
    } else {
        parse_scenario_bytes(&bytes).map_err(|error| CliError::Parse {
            path: source.to_string(),
            error,
        })?
    };
    let tag = s.regime_description();
    Ok((s, tag))
}

/// Finds the measurement a query term names. Terms are `label` or
/// `agent:label`, compared case-insensitively; a bare label must belong to
/// exactly one measurement.
pub fn resolve_term(s: &Scenario, term: &str, query: &str) -> Result<(String, String), CliError> {
    let err = |reason: String| CliError::Query {
        query: query.to_string(),
        reason,
    };
    let term = term.trim();
    let (agent, label) = match term.split_once(':') {
        Some((a, l)) => (Some(a.trim()), l.trim()),
        None => (None, term),
    };
    let mut hits = Vec::new();
    for e in s.ordered_measurements() {
        let m = s.measurement(e);
        if agent.is_some_and(|a| !a.eq_ignore_ascii_case(&m.agent)) {
            continue;
        }
        for l in m.basis.labels() {
            if l.eq_ignore_ascii_case(label) {
                hits.push((m.agent.clone(), l.clone()));
            }
        }
    }
    match hits.len() {
        0 => Err(err(format!("no measurement has outcome `{term}`"))),
        1 => Ok(hits.pop().expect("one hit")),
        _ => {
            let names: Vec<String> = hits.iter().map(|(a, l)| format!("{a}:{l}")).collect();
            Err(err(format!(
                "`{term}` is ambiguous; write one of {}",
                names.join(", ")
            )))
        }
    }
}

pub fn evaluate_query(
    s: &Scenario,
    d: &OutcomeDistribution,
    query: &str,
) -> Result<QueryResult, CliError> {
    let Some((lhs, rhs)) = query.split_once("=>") else {
        return Err(CliError::Query {
            query: query.to_string(),
            reason: "expected the form `A=>B`".into(),
        });
    };
    let given = resolve_term(s, lhs, query)?;
    let then = resolve_term(s, rhs, query)?;
    let result = d
        .implication((&given.0, &given.1), (&then.0, &then.1))
        .map_err(|error| CliError::QueryFailed {
            query: query.to_string(),
            error,
        })?;
    let (holds, counter_probability) = match result {
        Implication::Holds => (true, 0.0),
        Implication::Fails { probability } => (false, probability),
    };
    Ok(QueryResult {
        query: query.to_string(),
        given,
        then,
        holds,
        counter_probability,
    })
}

/// Runs the requested engines and queries.
pub fn run(args: &RunArgs) -> Result<RunReport, CliError> {
    let (s, regime) = load_source(&args.source, args.regime)?;
    let paths = match args.engine {
        Engine::Paths | Engine::Both => Some(paths::distribution(&s)?),
        Engine::Oracle => None,
    };
    let oracle = match args.engine {
        Engine::Oracle | Engine::Both => Some(oracle_distribution(&s)?),
        Engine::Paths => None,
    };
    let delta = match (&paths, &oracle) {
        (Some(p), Some(o)) => Some(p.max_abs_diff(o).unwrap_or(f64::INFINITY)),
        _ => None,
    };
    let mut report = RunReport {
        scenario: s.name.clone(),
        source: args.source.clone(),
        regime,
        engine: args.engine,
        paths,
        oracle,
        delta,
        queries: Vec::new(),
        output_path: args.out.clone(),
    };
    for q in &args.queries {
        let r = evaluate_query(&s, report.distribution(), q)?;
        report.queries.push(r);
    }
    Ok(report)
}

/// `value` with 9 significant digits.
pub fn format_probability(p: f64) -> String {
    if p == 0.0 {
        return "0".into();
    }
    let magnitude = p.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    format!("{p:.decimals$}")
}

/// Smallest-denominator fraction `n/q`, `q ≤ 144`, within the probability
/// tolerance of `p`.
pub fn nearest_rational(p: f64) -> Option<String> {
    (1..=144u32).find_map(|q| {
        let n = (p * q as f64).round();
        if (n / q as f64 - p).abs() <= PROBABILITY_TOL {
            Some(if q == 1 {
                format!("{n}")
            } else {
                format!("{n}/{q}")
            })
        } else {
            None
        }
    })
}

fn engine_name(e: Engine) -> &'static str {
    match e {
        Engine::Paths => "paths",
        Engine::Oracle => "oracle",
        Engine::Both => "both",
    }
}

pub fn render_table(r: &RunReport) -> String {
    let d = r.distribution();
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", r.scenario);
    let _ = writeln!(out, "regime:   {}", r.regime);
    let _ = writeln!(out, "records:  {}", d.regime_tag());
    match r.delta {
        Some(delta) => {
            let _ = writeln!(out, "engine:   both (delta {delta:.3e})");
        }
        None => {
            let _ = writeln!(out, "engine:   {}", engine_name(r.engine));
        }
    }
    out.push('\n');
    let mut header: Vec<String> = d.agents().map(str::to_string).collect();
    header.push("p".into());
    header.push("rational".into());
    let rows: Vec<Vec<String>> = d
        .iter()
        .map(|(t, p)| {
            let mut row: Vec<String> = t.0.into_iter().map(|(_, l)| l).collect();
            row.push(format_probability(p));
            row.push(nearest_rational(p).unwrap_or_default());
            row
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            rows.iter()
                .map(|r| r[c].chars().count())
                .chain([header[c].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    for row in std::iter::once(&header).chain(&rows) {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    if !r.queries.is_empty() {
        out.push('\n');
        for q in &r.queries {
            let verdict = if q.holds {
                "HOLDS".to_string()
            } else {
                format!("FAILS (p = {})", format_probability(q.counter_probability))
            };
            let _ = writeln!(
                out,
                "{}:{} => {}:{}  {verdict}",
                q.given.0, q.given.1, q.then.0, q.then.1
            );
        }
    }
    out
}

pub fn json_report(r: &RunReport) -> JsonReport {
    JsonReport {
        scenario: r.scenario.clone(),
        regime: r.regime.clone(),
        engine: r.engine,
        outcomes: r
            .distribution()
            .iter()
            .map(|(t, p)| JsonOutcome { tuple: t.0, p })
            .collect(),
        delta: r.delta,
        queries: r.queries.clone(),
    }
}

pub fn render_json(r: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(&json_report(r)).expect("report serializes");
    s.push('\n');
    s
}

pub fn render_dot(r: &RunReport) -> String {
    real_path_graph(r.distribution()).to_dot(&format!("{} ({})", r.scenario, r.regime))
}

pub fn render(r: &RunReport, format: Format) -> String {
    match format {
        Format::Table => render_table(r),
        Format::Json => render_json(r),
        Format::Dot => render_dot(r),
    }
}

/// Writes the real-path graph of `d` as DOT.
pub fn export_graph(d: &OutcomeDistribution, title: &str, path: &Path) -> Result<(), CliError> {
    std::fs::write(path, real_path_graph(d).to_dot(title)).map_err(|error| CliError::Write {
        path: path.display().to_string(),
        error,
    })
}

/// Runs the CLI on `args` (including the program name). Returns the exit
/// status.
pub fn main_with<I, T>(
    args: I,
    stdout: &mut dyn std::io::Write,
    stderr: &mut dyn std::io::Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
            } else {
                let _ = stdout.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(
    cli: &Cli,
    stdout: &mut dyn std::io::Write,
    stderr: &mut dyn std::io::Write,
) -> Result<i32, CliError> {
    match &cli.command {
        Command::List => {
            for n in builtin_names() {
                let _ = writeln!(stdout, "{n}");
            }
            Ok(0)
        }
        Command::Show {
            source,
            regime,
            json,
        } => {
            let (s, _) = load_source(source, *regime)?;
            let text = if *json {
                s.to_json() + "\n"
            } else {
                serialize_scenario(&s)
            };
            let _ = stdout.write_all(text.as_bytes());
            Ok(0)
        }
        Command::Run(args) => {
            let report = run(args)?;
            let text = render(&report, args.format);
            match &args.out {
                Some(path) => std::fs::write(path, &text).map_err(|error| CliError::Write {
                    path: path.display().to_string(),
                    error,
                })?,
                None => {
                    let _ = stdout.write_all(text.as_bytes());
                }
            }
            if !report.engines_agree() {
                let _ = writeln!(
                    stderr,
                    "error: engines disagree by {:.3e} (tolerance {PROBABILITY_TOL:e})",
                    report.delta.unwrap_or(f64::NAN)
                );
                return Ok(DISAGREEMENT_EXIT);
            }
            Ok(0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(source: &str, regime: Option<RegimeTag>, queries: &[&str]) -> RunArgs {
        RunArgs {
            source: source.into(),
            regime,
            engine: Engine::Both,
            format: Format::Table,
            queries: queries.iter().map(|q| q.to_string()).collect(),
            out: None,
        }
    }

    #[test]
    fn significant_digits_and_rationals() {
        assert_eq!(format_probability(0.75), "0.750000000");
        assert_eq!(format_probability(1.0 / 12.0), "0.0833333333");
        assert_eq!(format_probability(0.0), "0");
        assert_eq!(nearest_rational(1.0 / 12.0).as_deref(), Some("1/12"));
        assert_eq!(nearest_rational(9.0 / 12.0).as_deref(), Some("3/4"));
        assert_eq!(nearest_rational(0.0).as_deref(), Some("0"));
        assert_eq!(nearest_rational(1.0).as_deref(), Some("1"));
        assert_eq!(nearest_rational(0.02), Some("1/50".into()));
        assert_eq!(nearest_rational(std::f64::consts::FRAC_1_SQRT_2), None);
    }

    #[test]
    fn both_erased_table() {
        let r = run(&args("2w2f", Some(RegimeTag::BothErased), &[])).unwrap();
        assert!(r.delta.unwrap() <= 1e-9);
        let t = render_table(&r);
        let rows: Vec<String> = t
            .lines()
            .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
            .collect();
        assert!(
            rows.contains(&"failbar fail 0.750000000 3/4".to_string()),
            "{t}"
        );
        assert!(
            rows.contains(&"okbar ok 0.0833333333 1/12".to_string()),
            "{t}"
        );
    }

    #[test]
    fn queries_follow_the_regime() {
        let r = run(&args(
            "2w2f",
            Some(RegimeTag::FbarPreserved),
            &["Ok=>Heads"],
        ))
        .unwrap();
        assert!(r.queries[0].holds);
        assert!(render_table(&r).contains("W:ok => Fbar:heads  HOLDS"));

        let e = run(&args("2w2f", Some(RegimeTag::BothErased), &["Ok=>Heads"])).unwrap_err();
        assert!(matches!(
            e,
            CliError::QueryFailed {
                error: DistributionError::RecordErased { .. },
                ..
            }
        ));
        assert!(e.to_string().contains("record of Fbar erased"));
    }

    #[test]
    fn ambiguous_and_unknown_terms() {
        let s = builtin("double_slit", None).unwrap();
        assert!(resolve_term(&s, "up", "q").is_ok());
        assert!(resolve_term(&s, "F:UP", "q").is_ok());
        assert!(resolve_term(&s, "sideways", "q").is_err());
        let s = builtin("2w2f_both_preserved", None).unwrap();
        // `up` is only F's; `heads` only Fbar's
        assert_eq!(
            resolve_term(&s, "Up", "q").unwrap(),
            ("F".into(), "up".into())
        );
    }

    #[test]
    fn json_round_trips() {
        let r = run(&args(
            "2w2f",
            Some(RegimeTag::BothPreserved),
            &["Up=>Tails"],
        ))
        .unwrap();
        let text = render_json(&r);
        let back: JsonReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.outcomes.len(), 16);
        for (o, (_, p)) in back.outcomes.iter().zip(r.distribution().iter()) {
            assert!((o.p - p).abs() <= 1e-12);
        }
        assert!(back.queries[0].holds);
    }

    #[test]
    fn exit_codes() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with(["wigner-paths", "run", "2w2f"], &mut out, &mut err);
        assert_eq!(code, 1);
        assert!(String::from_utf8_lossy(&err).contains("needs a regime"));
        let code = main_with(
            [
                "wigner-paths",
                "run",
                "2w2f_both_erased",
                "--format",
                "json",
            ],
            &mut out,
            &mut err,
        );
        assert_eq!(code, 0);
    }
}
