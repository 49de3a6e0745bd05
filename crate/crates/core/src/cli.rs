//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on a domain failure (unreadable dataset, a
//! quantity that does not normalize, a failed validation), 2 on a usage error.
//! Reports go to stdout and diagnostics to stderr.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::abelian::GroupElement;
use crate::expr::Dims;
use crate::gyration::{
    self, assignment_json, case_params, element_expr, filter_pinned, find_case, CaseSystem, Plane,
};
use crate::normalize::{normalize_traced, relevant_assignments};
use crate::reldb::{parse_expr, validate, Assignment, Database, ParamDomain, ParamValue};

/// Environment variable naming a directory with `toda.rdb` and `cases.rdb`.
pub const DB_ENV: &str = "GYRATION_DB";

#[derive(Debug, Parser)]
#[command(
    name = "gyration",
    version,
    about = "Decide gyration stability of CP2, HP2 and OP2 from a database of Toda relations"
)]
struct Cli {
    /// Directory containing toda.rdb and cases.rdb (default: $GYRATION_DB, then the built-in dataset).
    #[arg(long, global = true, value_name = "PATH")]
    db: Option<PathBuf>,
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count the homotopy types of gyrations of one plane in one index.
    Classify(CaseArgs),
    /// The full stability table.
    Table,
    /// Decide whether two twists give homotopy equivalent gyrations.
    Solve(PairArgs),
    /// Rewrite an expression to coordinates in its declared group.
    Normalize {
        /// Expression, e.g. "eta(4).nu(5)".
        expr: String,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Validate the dataset.
    VerifyDb,
    /// Show the witness and the arithmetic behind one equivalence question.
    Explain(PairArgs),
}

#[derive(Debug, Args)]
struct ParamArgs {
    /// Pin a parameter, e.g. --param xi=3 (repeatable).
    #[arg(long = "param", value_name = "NAME=VALUE")]
    param: Vec<String>,
}

#[derive(Debug, Args)]
struct CaseArgs {
    #[arg(long, value_parser = parse_plane)]
    plane: Plane,
    #[arg(long)]
    k: u32,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Debug, Args)]
struct PairArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// First twist: coordinates such as "(1,0)" or an expression.
    #[arg(long, allow_hyphen_values = true)]
    tau: String,
    /// Second twist: coordinates such as "(1,0)" or an expression.
    #[arg(long, allow_hyphen_values = true)]
    omega: String,
}

fn parse_plane(s: &str) -> Result<Plane, String> {
    s.parse()
}

/// A failure reported with exit code 1.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

/// Runs one invocation; `argv[0]` is the program name.
pub fn run<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let db = match load(&cli) {
        Ok(db) => db,
        Err(Failure(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            return 1;
        }
    };
    let result = match &cli.command {
        Command::Classify(a) => classify(&db, a, cli.json, stdout),
        Command::Table => table(&db, cli.json, stdout),
        Command::Solve(a) => solve(&db, a, cli.json, stdout),
        Command::Normalize { expr, params } => normalize_cmd(&db, expr, params, cli.json, stdout),
        Command::VerifyDb => verify_db(&db, cli.json, stdout),
        Command::Explain(a) => explain(&db, a, cli.json, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(Failure(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
    }
}

fn load(cli: &Cli) -> Result<Database, Failure> {
    let dir = cli
        .db
        .clone()
        .or_else(|| std::env::var_os(DB_ENV).map(PathBuf::from));
    match dir {
        Some(d) => Database::load_dir(&d).map_err(|e| Failure(format!("loading dataset from {}: {e}", d.display()))),
        None => Ok(Database::shipped()),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult {
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn emit_json(out: &mut dyn Write, v: &Value) -> CliResult {
    let text = serde_json::to_string_pretty(v)?;
    writeln!(out, "{text}")?;
    Ok(())
}

/// Parses `--param` pins against the declared parameters.
fn pins(db: &Database, args: &ParamArgs) -> Result<Assignment, Failure> {
    let mut asg = Assignment::empty();
    for raw in &args.param {
        let (name, value) = raw
            .split_once('=')
            .ok_or_else(|| Failure(format!("--param expects NAME=VALUE, got `{raw}`")))?;
        let (name, value) = (name.trim(), value.trim());
        let decl = db
            .param(name)
            .ok_or_else(|| Failure(format!("unknown parameter `{name}`")))?;
        let v = match &decl.domain {
            ParamDomain::Int(_) => ParamValue::Int(
                value
                    .parse()
                    .map_err(|_| Failure(format!("parameter `{name}` takes an integer, got `{value}`")))?,
            ),
            d => {
                let dims = d.element_dims().expect("element domain");
                let e = parse_expr(db, value, Some(dims))?;
                let wanted = normalize_traced(&e, db, &Assignment::empty())?.0;
                d.values()
                    .into_iter()
                    .find(|v| match v {
                        ParamValue::Element(x) => normalize_traced(x, db, &Assignment::empty())
                            .is_ok_and(|(g, _)| g == wanted),
                        ParamValue::Int(_) => false,
                    })
                    .ok_or_else(|| Failure(format!("`{value}` is not in the domain of `{name}`")))?
            }
        };
        if !decl.domain.values().contains(&v) {
            return Err(Failure(format!("`{value}` is not in the domain of `{name}`")));
        }
        asg.set(decl.name.clone(), v);
    }
    Ok(asg)
}

/// Reads a twist as coordinates `(a, b, ...)` or as an expression.
fn element(db: &Database, text: &str, dims: Dims) -> Result<GroupElement, Failure> {
    let group = db
        .group(dims)
        .ok_or_else(|| Failure(format!("no group is declared for {dims}")))?;
    let t = text.trim();
    if let Some(inner) = t.strip_prefix('(').and_then(|s| s.strip_suffix(')')) {
        let coords: Result<Vec<i64>, _> = inner.split(',').map(|c| c.trim().parse::<i64>()).collect();
        if let Ok(coords) = coords {
            return Ok(GroupElement::new(group.presentation.clone(), coords)?);
        }
    }
    let e = parse_expr(db, t, Some(dims))?;
    if e.dims != dims {
        return Err(Failure(format!("`{t}` lies in {}, expected {dims}", e.dims)));
    }
    Ok(normalize_traced(&e, db, &Assignment::empty())?.0)
}

fn classify(db: &Database, a: &CaseArgs, json: bool, out: &mut dyn Write) -> CliResult {
    let pins = pins(db, &a.params)?;
    let report = gyration::classify_k(db, a.plane, a.k, &pins)?;
    if json {
        emit_json(out, &report.to_json(db))
    } else {
        emit(out, &report.render(db))
    }
}

fn table(db: &Database, json: bool, out: &mut dyn Write) -> CliResult {
    let rows = gyration::table(db)?;
    if json {
        emit_json(out, &serde_json::to_value(&rows)?)
    } else {
        emit(out, &gyration::render_table(&rows))
    }
}

/// The assignments of a case's relevant parameters that agree with the pins.
fn case_assignments(db: &Database, a: &CaseArgs) -> Result<Vec<Assignment>, Failure> {
    let pins = pins(db, &a.params)?;
    let case = find_case(db, a.plane, a.k)?;
    let params = case_params(db, case);
    Ok(filter_pinned(db.assignments(Some(&params)), &pins))
}

fn solve(db: &Database, a: &PairArgs, json: bool, out: &mut dyn Write) -> CliResult {
    let case = find_case(db, a.case.plane, a.case.k)?;
    let tdims = case.twist_dims();
    let ldims = case.lambda_dims();
    let tau = element(db, &a.tau, tdims)?;
    let omega = element(db, &a.omega, tdims)?;
    let mut records = Vec::new();
    let mut text = String::new();
    for asg in case_assignments(db, &a.case)? {
        let sys = CaseSystem::new(db, case, &asg)?;
        if !sys.twist_elements.contains(&tau) || !sys.twist_elements.contains(&omega) {
            return Err(Failure(format!("twists must lie in the twist image of {}", case.id())));
        }
        let w = sys.equivalent(&tau, &omega);
        if let Some(w) = &w {
            sys.verify(&tau, &omega, w)?;
        }
        let prefix = if asg.is_empty() { String::new() } else { format!("[{asg}] ") };
        match &w {
            Some(w) => {
                let lam = element_expr(db, &w.lambda, ldims)?;
                text += &format!(
                    "{prefix}equivalent: lambda = {lam} {}, sign {}\n",
                    w.lambda,
                    if w.sign > 0 { "+1" } else { "-1" }
                );
            }
            None => text += &format!("{prefix}not equivalent\n"),
        }
        records.push(json!({
            "plane": case.plane.name(),
            "k": case.k,
            "assignment": assignment_json(&asg),
            "tau": tau.coords(),
            "omega": omega.coords(),
            "equivalent": w.is_some(),
            "witness": w.as_ref().map(|w| json!({
                "lambda": w.lambda.coords(),
                "lambda_expr": element_expr(db, &w.lambda, ldims).map(|e| e.to_string()).unwrap_or_default(),
                "sign": w.sign,
            })),
        }));
    }
    if json {
        emit_json(out, &Value::Array(records))
    } else {
        emit(out, &text)
    }
}

fn explain(db: &Database, a: &PairArgs, json: bool, out: &mut dyn Write) -> CliResult {
    let case = find_case(db, a.case.plane, a.case.k)?;
    let tdims = case.twist_dims();
    let tau = element(db, &a.tau, tdims)?;
    let omega = element(db, &a.omega, tdims)?;
    let mut parts = Vec::new();
    for asg in case_assignments(db, &a.case)? {
        parts.push((asg.clone(), gyration::explain(db, case, &tau, &omega, &asg)?));
    }
    if json {
        let v: Vec<Value> = parts
            .iter()
            .map(|(asg, t)| json!({"assignment": assignment_json(asg), "explanation": t}))
            .collect();
        emit_json(out, &Value::Array(v))
    } else {
        let text: Vec<&str> = parts.iter().map(|(_, t)| t.as_str()).collect();
        emit(out, &text.join("\n"))
    }
}

fn normalize_cmd(db: &Database, text: &str, params: &ParamArgs, json: bool, out: &mut dyn Write) -> CliResult {
    let e = parse_expr(db, text, None)?;
    let group = db
        .group(e.dims)
        .ok_or_else(|| Failure(format!("no group is declared for {}", e.dims)))?;
    let pins = pins(db, params)?;
    let mut records = Vec::new();
    let mut lines = String::new();
    for partial in filter_pinned(relevant_assignments(db, std::slice::from_ref(&e)), &pins) {
        let mut asg = db.default_assignment();
        for (n, v) in partial.entries() {
            asg.set(n.clone(), v.clone());
        }
        let (value, trace) = normalize_traced(&e, db, &asg)?;
        let canonical = element_expr(db, &value, e.dims)?;
        let prefix = if partial.is_empty() { String::new() } else { format!("[{partial}] ") };
        lines += &format!("{prefix}{canonical}\n");
        lines += &format!("{prefix}  in {} = {}\n", e.dims, group.presentation);
        lines += &format!("{prefix}  coordinates {value}\n");
        let used: Vec<String> = trace.relations.iter().map(|&r| db.relations[r].to_string()).collect();
        records.push(json!({
            "input": text,
            "group": e.dims.to_string(),
            "presentation": group.presentation.to_string(),
            "assignment": assignment_json(&partial),
            "coords": value.coords(),
            "canonical": canonical.to_string(),
            "relations_used": used,
        }));
    }
    if json {
        emit_json(out, &Value::Array(records))
    } else {
        emit(out, &lines)
    }
}

fn verify_db(db: &Database, json: bool, out: &mut dyn Write) -> CliResult {
    let failures = validate(db);
    if json {
        for f in &failures {
            writeln!(out, "{}", serde_json::to_string(f)?)?;
        }
    } else if failures.is_empty() {
        writeln!(
            out,
            "ok: {} families, {} groups, {} relations, {} parameters, {} cases",
            db.families.len(),
            db.groups.len(),
            db.relations.len(),
            db.params.len(),
            db.cases.len()
        )?;
    } else {
        for f in &failures {
            writeln!(out, "{f}")?;
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure(format!("{} validation failure(s)", failures.len())))
    }
}
