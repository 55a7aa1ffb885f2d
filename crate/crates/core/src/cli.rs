//! The `compograph` command line.
//!
//! Results go to `out`, diagnostics to `err`. Output is produced into a
//! buffer and only written once the command has succeeded, so failing
//! commands leave `out` untouched.
//!
//! Exit codes: 0 success (an empty plan set included), 1 usage or parse
//! error, 2 semantic error (unknown initial service, oracle mismatch).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::affinity::affinity_matrix;
use crate::catalog_io::{self, Format, DEFAULT_CATALOG_NAME};
use crate::error::Error;
use crate::model::{self, build_model, check_model, CompositionModel, Node};
use crate::oracle::{
    diff_plan_sets, enumerate_plans_bruteforce, forward_executability, ExecutabilityReport,
};
use crate::planner::{find_plans, Plan, Request, SearchStats};
use crate::types::{Catalog, TypeSet};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SEMANTIC: i32 = 2;

/// Environment variable that turns off output styling when set to `1`.
pub const NO_COLOR_ENV: &str = "COMPOGRAPH_NO_COLOR";

#[derive(Parser, Debug)]
#[command(
    name = "compograph",
    version,
    about = "Graph-based automatic web-service composition"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the composition model of a catalog from an initial service.
    Build {
        #[command(flatten)]
        input: CatalogArgs,
        /// Initial service.
        #[arg(long)]
        init: String,
        #[arg(long, value_enum, default_value_t = ModelFormat::Dot)]
        format: ModelFormat,
        /// Write the model here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate the composition plans satisfying a request.
    Plan {
        #[command(flatten)]
        input: CatalogArgs,
        #[command(flatten)]
        query: QueryArgs,
        /// Emit JSON instead of one plan per line.
        #[arg(long)]
        json: bool,
        /// Append search statistics.
        #[arg(long)]
        stats: bool,
        /// Annotate each plan with its forward-executability verdict.
        #[arg(long)]
        check_executability: bool,
        /// Stop after this many plans.
        #[arg(long)]
        max_plans: Option<usize>,
    },
    /// Print the service-to-service affinity matrix.
    Affinity {
        #[command(flatten)]
        input: CatalogArgs,
        #[arg(long)]
        json: bool,
    },
    /// Cross-check the planner against the brute-force enumerator.
    Oracle {
        #[command(flatten)]
        input: CatalogArgs,
        #[command(flatten)]
        query: QueryArgs,
    },
}

#[derive(Args, Debug)]
struct CatalogArgs {
    /// Catalog file (`.svc` DSL or `.json`).
    catalog: PathBuf,
    /// Override the format inferred from the file extension.
    #[arg(long, value_enum)]
    input_format: Option<InputFormat>,
}

#[derive(Args, Debug)]
struct QueryArgs {
    /// Initial service.
    #[arg(long)]
    init: String,
    /// Provided types, comma separated (empty string for none).
    #[arg(long, allow_hyphen_values = true)]
    provided: String,
    /// Required types, comma separated (empty string for none).
    #[arg(long, allow_hyphen_values = true)]
    required: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelFormat {
    Dot,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InputFormat {
    Dsl,
    Json,
}

/// How results are decorated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Style {
    pub color: bool,
}

impl Style {
    /// Colour only when standard output is a terminal and styling has not
    /// been disabled through [`NO_COLOR_ENV`].
    pub fn detect() -> Self {
        let disabled = std::env::var(NO_COLOR_ENV).is_ok_and(|v| v == "1");
        Self {
            color: !disabled && std::io::stdout().is_terminal(),
        }
    }

    fn verdict(&self, pass: bool) -> String {
        let (word, code) = if pass { ("PASS", "32") } else { ("FAIL", "31") };
        if self.color {
            format!("\x1b[1;{code}m{word}\x1b[0m")
        } else {
            word.to_owned()
        }
    }
}

struct Failure {
    code: i32,
    lines: Vec<String>,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            lines: vec![msg.into()],
        }
    }

    fn semantic(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_SEMANTIC,
            lines: vec![msg.into()],
        }
    }
}

struct Outcome {
    stdout: String,
    code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self {
            stdout,
            code: EXIT_OK,
        }
    }
}

/// Runs the CLI with `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write, style: Style) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(rendered.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(rendered.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli.command, style) {
        Ok(outcome) => {
            if out
                .write_all(outcome.stdout.as_bytes())
                .and_then(|_| out.flush())
                .is_err()
            {
                return EXIT_USAGE;
            }
            outcome.code
        }
        Err(failure) => {
            for line in failure.lines {
                let _ = writeln!(err, "error: {line}");
            }
            failure.code
        }
    }
}

fn execute(command: Command, style: Style) -> Result<Outcome, Failure> {
    match command {
        Command::Build {
            input,
            init,
            format,
            out,
        } => {
            let catalog = load_catalog(&input)?;
            let model = build(&catalog, &init)?;
            let text = match format {
                ModelFormat::Dot => model::to_dot(&model),
                ModelFormat::Json => model::to_json(&model),
            };
            match out {
                Some(path) => {
                    std::fs::write(&path, text)
                        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
                    Ok(Outcome::ok(String::new()))
                }
                None => Ok(Outcome::ok(text)),
            }
        }
        Command::Plan {
            input,
            query,
            json,
            stats,
            check_executability,
            max_plans,
        } => {
            let catalog = load_catalog(&input)?;
            let request = parse_request(&query)?;
            let model = build(&catalog, &query.init)?;
            let (plans, search_stats) = find_plans(&model, &catalog, &request, max_plans)
                .map_err(|e| Failure::semantic(e.to_string()))?;
            let reports = if check_executability {
                let reports = plans
                    .iter()
                    .map(|p| forward_executability(&p.services, &catalog, &request.provided))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| Failure::semantic(e.to_string()))?;
                Some(reports)
            } else {
                None
            };
            let text = if json {
                render_plans_json(&request, &plans, reports.as_deref(), search_stats)
            } else {
                render_plans_text(&plans, reports.as_deref(), stats.then_some(search_stats))
            };
            Ok(Outcome::ok(text))
        }
        Command::Affinity { input, json } => {
            let catalog = load_catalog(&input)?;
            Ok(Outcome::ok(render_affinity(&catalog, json)))
        }
        Command::Oracle { input, query } => {
            let catalog = load_catalog(&input)?;
            let request = parse_request(&query)?;
            let model = build(&catalog, &query.init)?;
            let (plans, _) = find_plans(&model, &catalog, &request, None)
                .map_err(|e| Failure::semantic(e.to_string()))?;
            let (text, pass) = oracle_report(&model, &catalog, &request, &plans, style);
            Ok(Outcome {
                stdout: text,
                code: if pass { EXIT_OK } else { EXIT_SEMANTIC },
            })
        }
    }
}

fn load_catalog(args: &CatalogArgs) -> Result<Catalog, Failure> {
    let path = &args.catalog;
    let source = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let format = match args.input_format {
        Some(InputFormat::Dsl) => Format::Dsl,
        Some(InputFormat::Json) => Format::Json,
        None => Format::from_path(path),
    };
    let default_name = default_catalog_name(path);
    catalog_io::parse_catalog(&source, format, &default_name).map_err(|e| match e {
        Error::Parse(errors) => Failure {
            code: EXIT_USAGE,
            lines: errors
                .iter()
                .map(|pe| format!("{}:{pe}", path.display()))
                .collect(),
        },
        other => Failure::usage(format!("{}: {other}", path.display())),
    })
}

fn default_catalog_name(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .filter(|s| crate::types::ServiceName::new(s).is_ok())
        .unwrap_or(DEFAULT_CATALOG_NAME)
        .to_owned()
}

fn build(catalog: &Catalog, init: &str) -> Result<CompositionModel, Failure> {
    build_model(catalog, init).map_err(|e| Failure::semantic(e.to_string()))
}

fn parse_request(query: &QueryArgs) -> Result<Request, Failure> {
    let parse = |flag: &str, value: &str| {
        value
            .parse::<TypeSet>()
            .map_err(|e| Failure::usage(format!("--{flag}: {e}")))
    };
    Ok(Request::new(
        parse("provided", &query.provided)?,
        parse("required", &query.required)?,
    ))
}

fn plan_line(plan: &Plan) -> String {
    if plan.is_empty() {
        "(empty plan)".to_owned()
    } else {
        plan.service_names().join(" -> ")
    }
}

fn executability_note(report: &ExecutabilityReport) -> String {
    if report.executable() {
        "[executable]".to_owned()
    } else {
        let parts: Vec<String> = report
            .blocked()
            .map(|s| format!("{} @ {}", s.missing, s.service))
            .collect();
        format!("[missing: {}]", parts.join("; "))
    }
}

fn render_plans_text(
    plans: &[Plan],
    reports: Option<&[ExecutabilityReport]>,
    stats: Option<SearchStats>,
) -> String {
    let mut out = String::new();
    for (i, plan) in plans.iter().enumerate() {
        match reports {
            Some(r) => writeln!(out, "{}  {}", plan_line(plan), executability_note(&r[i])),
            None => writeln!(out, "{}", plan_line(plan)),
        }
        .expect("writing to a String");
    }
    if let Some(s) = stats {
        writeln!(
            out,
            "states: {}  solutions: {}",
            s.states_explored, s.solutions
        )
        .expect("writing to a String");
    }
    out
}

#[derive(Serialize)]
struct JsonNode<'a> {
    service: &'a str,
    ti: String,
    to: String,
}

impl<'a> From<&'a Node> for JsonNode<'a> {
    fn from(n: &'a Node) -> Self {
        Self {
            service: n.service.as_str(),
            ti: n.cum_inputs.canonical(),
            to: n.cum_outputs.canonical(),
        }
    }
}

#[derive(Serialize)]
struct JsonMissing<'a> {
    position: usize,
    service: &'a str,
    types: &'a TypeSet,
}

#[derive(Serialize)]
struct JsonPlan<'a> {
    services: Vec<&'a str>,
    nodes: Vec<JsonNode<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    executable: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    missing: Option<Vec<JsonMissing<'a>>>,
}

#[derive(Serialize)]
struct JsonRequest<'a> {
    provided: &'a TypeSet,
    required: &'a TypeSet,
}

#[derive(Serialize)]
struct JsonStats {
    states: usize,
    solutions: usize,
}

#[derive(Serialize)]
struct JsonPlanOutput<'a> {
    request: JsonRequest<'a>,
    plans: Vec<JsonPlan<'a>>,
    stats: JsonStats,
}

fn render_plans_json(
    request: &Request,
    plans: &[Plan],
    reports: Option<&[ExecutabilityReport]>,
    stats: SearchStats,
) -> String {
    let doc = JsonPlanOutput {
        request: JsonRequest {
            provided: &request.provided,
            required: &request.required,
        },
        plans: plans
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let report = reports.map(|r| &r[i]);
                JsonPlan {
                    services: p.service_names(),
                    nodes: p.chain.iter().map(JsonNode::from).collect(),
                    executable: report.map(ExecutabilityReport::executable),
                    missing: report.map(|r| {
                        r.blocked()
                            .map(|s| JsonMissing {
                                position: s.position,
                                service: s.service.as_str(),
                                types: &s.missing,
                            })
                            .collect()
                    }),
                }
            })
            .collect(),
        stats: JsonStats {
            states: stats.states_explored,
            solutions: stats.solutions,
        },
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("plan JSON always serializes");
    out.push('\n');
    out
}

fn render_affinity(catalog: &Catalog, json: bool) -> String {
    let names: Vec<&str> = catalog
        .services()
        .iter()
        .map(|s| s.name().as_str())
        .collect();
    let matrix = affinity_matrix(catalog);
    if json {
        #[derive(Serialize)]
        struct JsonAffinity<'a> {
            services: &'a [&'a str],
            matrix: Vec<Vec<String>>,
        }
        let doc = JsonAffinity {
            services: &names,
            matrix: matrix
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|c| c.map_or_else(|| "-".to_owned(), |r| r.to_fraction_string()))
                        .collect()
                })
                .collect(),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("affinity JSON always serializes");
        out.push('\n');
        return out;
    }
    let mut out = String::new();
    writeln!(out, ",{}", names.join(",")).expect("writing to a String");
    for (name, row) in names.iter().zip(&matrix) {
        let cells: Vec<String> = row
            .iter()
            .map(|c| c.map_or_else(|| "-".to_owned(), |r| r.to_string()))
            .collect();
        writeln!(out, "{name},{}", cells.join(",")).expect("writing to a String");
    }
    out
}

/// Runs every oracle check against `planner_plans` and renders the report.
/// The boolean is true when all checks pass.
pub fn oracle_report(
    model: &CompositionModel,
    catalog: &Catalog,
    request: &Request,
    planner_plans: &[Plan],
    style: Style,
) -> (String, bool) {
    let mut out = String::new();
    let violations = check_model(model);
    let model_ok = violations.is_empty();
    writeln!(out, "{} model-invariants", style.verdict(model_ok)).expect("writing to a String");
    for v in &violations {
        writeln!(out, "  {v}").expect("writing to a String");
    }

    let oracle_plans = enumerate_plans_bruteforce(model, catalog, request);
    let diff = diff_plan_sets(planner_plans, &oracle_plans);
    let plans_ok = diff.is_empty();
    writeln!(
        out,
        "{} plan-set-equality ({} planner, {} oracle)",
        style.verdict(plans_ok),
        planner_plans.len(),
        oracle_plans.len()
    )
    .expect("writing to a String");
    if !plans_ok {
        let mut section = |title: &str, plans: &[Plan]| {
            writeln!(out, "  {title}:").expect("writing to a String");
            for p in plans {
                writeln!(out, "    {}", plan_line(p)).expect("writing to a String");
            }
        };
        section("only in planner", &diff.only_left);
        section("only in oracle", &diff.only_right);
        section("planner plans", planner_plans);
        section("oracle plans", &oracle_plans);
    }
    (out, model_ok && plans_ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(args.iter().copied(), &mut out, &mut err, Style::default());
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn usage_errors_exit_one() {
        let (code, out, err) = run_capture(&["compograph", "build"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(out.is_empty());
        assert!(!err.is_empty());
        let (code, _, _) = run_capture(&["compograph", "frobnicate"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn help_goes_to_stdout() {
        let (code, out, _) = run_capture(&["compograph", "--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("plan"));
    }

    #[test]
    fn missing_file_is_usage_error() {
        let (code, out, err) = run_capture(&["compograph", "affinity", "/nonexistent/x.svc"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(out.is_empty());
        assert!(err.contains("/nonexistent/x.svc"));
    }

    #[test]
    fn executability_note_format() {
        let c = catalog_io::parse_catalog_text("a : x -> y\nb : y q r -> z").unwrap();
        let x: TypeSet = "x".parse().unwrap();
        let r = forward_executability(&["a", "b"], &c, &x).unwrap();
        assert_eq!(executability_note(&r), "[missing: q,r @ b]");
        let r = forward_executability(&["a"], &c, &x).unwrap();
        assert_eq!(executability_note(&r), "[executable]");
    }

    #[test]
    fn style_colours_verdicts() {
        assert_eq!(Style { color: false }.verdict(true), "PASS");
        assert_eq!(
            Style { color: true }.verdict(false),
            "\x1b[1;31mFAIL\x1b[0m"
        );
    }
}
