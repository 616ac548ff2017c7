//! `aklt`: command-line access to transfer functions, cell diagrams,
//! bilayer systems and finite-volume contractions.
//!
//! Every subcommand writes one JSON document (default), a CSV table, or
//! plain text. Exit status is 0 on success, 2 on invalid input and 1 on a
//! numerical failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aklt_core::bilayer::{
    compare_with_printed, extract_system, iterate_symmetric, search_full_space, solve_fixed_points, BilayerMap,
    Cycle, SolveOptions, SplittingNumber, SystemReport,
};
use aklt_core::cell::{
    breaking_criterion, decorated_threshold, enumerate_diagrams_with_cap, polynomial_report, tree_cell_condition,
    CellGraph, EDGE_CAP,
};
use aklt_core::oracle::{
    contract_expectation, contract_expectation_dense, order_parameter_scan, BoundaryAssignment, Family, Observable,
    MAX_DENSE_SPINS,
};
use aklt_core::pauli::{BlochVector, HsOperator, PauliWord};
use aklt_core::site::{apply_site_transfer, boundary_trace, closed_form_coefficient, Backend, ClosedForm, SiteDegree};
use aklt_core::transfer::{
    classify_growth, compose_sequence, fixed_point, leafpath_bound, DegreeSequence, TransferFunction,
};
use aklt_core::tree::FiniteTree;
use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

/// Environment variable fixing the worker-thread count.
const THREADS_ENV: &str = "AKLT_THREADS";

#[derive(Parser, Debug)]
#[command(name = "aklt", version, about = "Transfer-operator tools for AKLT states on trees")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Json)]
    format: Format,

    /// Seed for randomized starts.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Single-site transfer coefficients and images.
    Site(SiteArgs),
    /// The scalar transfer function, its fixed points, and degree sequences.
    Fn(FnArgs),
    /// Loop-diagram polynomials and the breaking criterion of a cell.
    Cell(CellArgs),
    /// Phase classification of decorated Cayley trees.
    Decorated(DecoratedArgs),
    /// Path-sum condition of a tree cell.
    Treecell(TreecellArgs),
    /// Bilayer polynomial systems and their fixed points.
    Bilayer(BilayerArgs),
    /// Finite-volume root expectations and scans.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
struct SiteArgs {
    /// Site degree.
    #[arg(long)]
    d: u32,
    /// List closed-form coefficients for every letter class.
    #[arg(long, conflicts_with_all = ["word", "bloch"])]
    coefficients: bool,
    /// Apply the transfer operator to one Pauli word (letters I/X/Y/Z or 0-3).
    #[arg(long, conflicts_with = "bloch")]
    word: Option<String>,
    /// Apply to the product boundary `(1 + x·σ)^⊗(d−1)`; comma-separated vector.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    bloch: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = BackendArg::ClosedForm)]
    backend: BackendArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BackendArg {
    ClosedForm,
    Dense,
}

#[derive(Args, Debug)]
struct FnArgs {
    /// Constant degree.
    #[arg(long, conflicts_with = "sequence")]
    d: Option<u32>,
    /// Degree-sequence file.
    #[arg(long)]
    sequence: Option<PathBuf>,
    /// Evaluate `F_d` at one point.
    #[arg(long, allow_negative_numbers = true)]
    eval: Option<f64>,
    /// Tabulate `F_d` and its bounds on an N-point grid of `(0, 1]`.
    #[arg(long)]
    grid: Option<usize>,
    /// Smallest `t*` with `F_d(t*) = −t*`.
    #[arg(long)]
    fixed_point: bool,
    /// Compose the sequence starting from this value.
    #[arg(long)]
    compose: Option<f64>,
    /// Number of layers to compose or build.
    #[arg(long, default_value_t = 10)]
    layers: usize,
    /// Growth classification of the sequence.
    #[arg(long)]
    classify: bool,
    /// Leaf-path condition on the layered tree with constant `C`.
    #[arg(long)]
    leafpath: Option<f64>,
    /// Growth rate for the leaf-path condition.
    #[arg(long, default_value_t = 4.0 / 3.0)]
    mu: f64,
}

#[derive(Args, Debug)]
struct CellSource {
    /// Cell JSON file.
    #[arg(long, conflicts_with = "builtin")]
    file: Option<PathBuf>,
    /// Built-in cell: `square`, `edge`, `star:D`, or `decorated:D:G`.
    #[arg(long)]
    builtin: Option<String>,
}

#[derive(Args, Debug)]
struct CellArgs {
    #[command(flatten)]
    source: CellSource,
    /// Oracle and diagram-rule polynomials with their differences.
    #[arg(long)]
    polynomials: bool,
    /// Slope at the origin and the breaking decision.
    #[arg(long)]
    criterion: bool,
    /// Loop diagrams grouped by class.
    #[arg(long)]
    diagrams: bool,
    /// Write the cell itself as JSON.
    #[arg(long)]
    export: bool,
    /// Edge cap for enumeration.
    #[arg(long, default_value_t = EDGE_CAP)]
    cap: usize,
}

#[derive(Args, Debug)]
struct DecoratedArgs {
    #[arg(long)]
    d: u64,
    #[arg(long)]
    g: u32,
}

#[derive(Args, Debug)]
struct TreecellArgs {
    #[command(flatten)]
    source: CellSource,
}

#[derive(Args, Debug)]
struct BilayerArgs {
    /// Splitting number.
    #[arg(long)]
    g: u32,
    /// Extracted system and its comparison with the reference one.
    #[arg(long)]
    system: bool,
    /// Multi-start Newton search.
    #[arg(long)]
    solve: bool,
    #[arg(long, value_enum, default_value_t = CycleArg::Period1)]
    cycle: CycleArg,
    #[arg(long, default_value_t = aklt_core::bilayer::DEFAULT_STARTS)]
    starts: usize,
    /// Also iterate the full fifteen-component map from random starts.
    #[arg(long)]
    full: bool,
    /// Iterate the symmetric map from a random start and report the limit.
    #[arg(long)]
    iterate: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CycleArg {
    Period1,
    Period2,
}

impl From<CycleArg> for Cycle {
    fn from(c: CycleArg) -> Self {
        match c {
            CycleArg::Period1 => Cycle::Period1,
            CycleArg::Period2 => Cycle::Period2,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    Cayley,
    Decorated,
    Layered,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Root expectation on one tree.
    #[arg(long, conflicts_with = "scan")]
    contract: bool,
    /// Table over `--t` and `--depths`.
    #[arg(long)]
    scan: bool,
    #[arg(long, value_enum, default_value_t = FamilyArg::Cayley)]
    family: FamilyArg,
    #[arg(long)]
    d: Option<u32>,
    #[arg(long, default_value_t = 1)]
    g: usize,
    /// Degree-sequence file for the layered family.
    #[arg(long)]
    sequence: Option<PathBuf>,
    /// Boundary strengths along the chosen axis; comma-separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    t: Vec<f64>,
    #[arg(long)]
    depth: Option<usize>,
    /// Depths for scans; comma-separated.
    #[arg(long, value_delimiter = ',')]
    depths: Vec<usize>,
    /// Boundary axis (1, 2 or 3).
    #[arg(long, default_value_t = 3)]
    axis: u8,
    /// Alternate the boundary sign with depth parity.
    #[arg(long)]
    neel: bool,
    /// Also contract densely (trees of at most ten spins).
    #[arg(long)]
    dense: bool,
}

/// Error classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Validation(anyhow::Error),
    Numerical(anyhow::Error),
}

impl From<aklt_core::Error> for Failure {
    fn from(e: aklt_core::Error) -> Self {
        if matches!(e, aklt_core::Error::Numerical(_)) {
            Failure::Numerical(e.into())
        } else {
            Failure::Validation(e.into())
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<aklt_core::Error>() {
            Some(aklt_core::Error::Numerical(_)) => Failure::Numerical(e),
            _ => Failure::Validation(e),
        }
    }
}

type Outcome = std::result::Result<Value, Failure>;

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn require<T>(v: Option<T>, what: &str) -> std::result::Result<T, Failure> {
    v.ok_or_else(|| Failure::Validation(anyhow::anyhow!("{what} is required")))
}

fn load_sequence(path: &Path) -> std::result::Result<DegreeSequence, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading degree sequence {}", path.display()))
        .map_err(Failure::Validation)?;
    Ok(DegreeSequence::parse(&text)?)
}

fn load_cell(src: &CellSource) -> std::result::Result<CellGraph, Failure> {
    if let Some(path) = &src.file {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading cell file {}", path.display()))
            .map_err(Failure::Validation)?;
        return Ok(CellGraph::from_json_str(&text)?);
    }
    let spec = require(src.builtin.as_deref(), "--file or --builtin")?;
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| -> std::result::Result<u32, Failure> {
        s.parse()
            .map_err(|_| Failure::Validation(anyhow::anyhow!("bad number {s:?} in --builtin {spec}")))
    };
    Ok(match parts.as_slice() {
        ["square"] => CellGraph::square()?,
        ["edge"] => CellGraph::single_edge()?,
        ["star", d] => CellGraph::star(num(d)?)?,
        ["decorated", d, g] => CellGraph::decorated_star(num(d)?, num(g)? as usize)?,
        _ => return Err(Failure::Validation(anyhow::anyhow!("unknown built-in cell {spec:?}"))),
    })
}

fn run_site(a: &SiteArgs) -> Outcome {
    let d = SiteDegree::new(a.d)?;
    let backend = match a.backend {
        BackendArg::ClosedForm => Backend::ClosedForm,
        BackendArg::Dense => Backend::Dense,
    };
    if a.coefficients {
        let n = d.inputs() as u32;
        let mut rows = Vec::new();
        for k1 in 0..=n {
            for k2 in 0..=n - k1 {
                for k3 in 0..=n - k1 - k2 {
                    rows.push(match closed_form_coefficient(d, k1, k2, k3)? {
                        ClosedForm::Covered(tc) => {
                            let v = to_value(&tc);
                            json!({"k1": k1, "k2": k2, "k3": k3, "covered": true,
                                   "value": v["value"], "output": v["output"]})
                        }
                        ClosedForm::NotCovered => {
                            json!({"k1": k1, "k2": k2, "k3": k3, "covered": false,
                                   "value": Value::Null, "output": Value::Null})
                        }
                    });
                }
            }
        }
        return Ok(Value::Array(rows));
    }
    if let Some(w) = &a.word {
        let word = PauliWord::parse(w)?;
        let op = HsOperator::from_terms(d.inputs(), [(word.clone(), 1.0)])?;
        let out = apply_site_transfer(d, &op, backend)?;
        let terms: serde_json::Map<String, Value> =
            out.terms().map(|(w, c)| (w.to_string(), json!(c))).collect();
        return Ok(json!({"d": a.d, "word": word.to_string(), "image": terms}));
    }
    if let Some(b) = &a.bloch {
        if b.len() != 3 {
            return Err(Failure::Validation(anyhow::anyhow!("--bloch takes three components")));
        }
        let x = BlochVector::new([b[0], b[1], b[2]])?;
        let bt = boundary_trace(d, x);
        let f = TransferFunction::new(d).eval(x.norm())?;
        return Ok(json!({"d": a.d, "bloch": b, "scalar": bt.scalar, "sigma": bt.sigma, "f_d_of_norm": f}));
    }
    Err(Failure::Validation(anyhow::anyhow!("site needs --coefficients, --word or --bloch")))
}

fn run_fn(a: &FnArgs) -> Outcome {
    let seq = match (&a.sequence, a.d) {
        (Some(p), _) => Some(load_sequence(p)?),
        (None, Some(d)) => Some(DegreeSequence::constant(d)?),
        (None, None) => None,
    };
    if a.fixed_point {
        let d = SiteDegree::new(require(a.d, "--d")?)?;
        return Ok(to_value(&fixed_point(d)));
    }
    if let Some(t) = a.eval {
        let f = TransferFunction::of_degree(require(a.d, "--d")?)?;
        let (coth, rational) = f.eval_both(t)?;
        return Ok(json!({"d": a.d, "t": t, "value": f.eval(t)?, "coth_form": coth, "rational_form": rational}));
    }
    if let Some(n) = a.grid {
        if n == 0 {
            return Err(Failure::Validation(anyhow::anyhow!("--grid must be positive")));
        }
        let f = TransferFunction::of_degree(require(a.d, "--d")?)?;
        let rows = (1..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                let (lower, upper) = f.bounds(t);
                Ok(json!({"t": t, "value": f.eval(t)?, "lower": lower, "upper": upper}))
            })
            .collect::<std::result::Result<Vec<_>, aklt_core::Error>>()?;
        return Ok(Value::Array(rows));
    }
    let seq = require(seq, "--d or --sequence")?;
    if let Some(t0) = a.compose {
        return Ok(to_value(&compose_sequence(&seq, t0, a.layers)?));
    }
    if a.classify {
        return Ok(to_value(&classify_growth(&seq)));
    }
    if let Some(c) = a.leafpath {
        let tree = FiniteTree::layered(&seq, a.layers)?;
        return Ok(to_value(&leafpath_bound(&tree, c, a.mu)?));
    }
    Err(Failure::Validation(anyhow::anyhow!(
        "fn needs one of --eval, --grid, --fixed-point, --compose, --classify, --leafpath"
    )))
}

fn run_cell(a: &CellArgs) -> Outcome {
    let cell = load_cell(&a.source)?;
    let mut out = serde_json::Map::new();
    if a.export {
        return Ok(cell.to_json());
    }
    if a.diagrams {
        out.insert("diagrams".into(), to_value(&enumerate_diagrams_with_cap(&cell, a.cap)?));
    }
    if a.polynomials {
        enumerate_diagrams_with_cap(&cell, a.cap)?;
        out.insert("polynomials".into(), to_value(&polynomial_report(&cell)?));
    }
    if a.criterion {
        let c = breaking_criterion(&cell)?;
        if out.is_empty() && !a.polynomials && !a.diagrams {
            return Ok(to_value(&c));
        }
        out.insert("criterion".into(), to_value(&c));
    }
    if out.is_empty() {
        return Err(Failure::Validation(anyhow::anyhow!(
            "cell needs --polynomials, --criterion, --diagrams or --export"
        )));
    }
    Ok(Value::Object(out))
}

fn run_bilayer(a: &BilayerArgs, seed: u64) -> Outcome {
    let g = SplittingNumber::new(a.g)?;
    let cycle = Cycle::from(a.cycle);
    let opts = SolveOptions {
        starts: a.starts,
        seed,
        ..SolveOptions::default()
    };
    if a.system {
        let sys = extract_system(g)?;
        return Ok(json!({
            "system": to_value(&SystemReport::from(&sys)),
            "comparison": compare_with_printed(&sys).map(|c| to_value(&c)),
        }));
    }
    if a.solve || a.full {
        if a.starts == 0 {
            return Err(Failure::Validation(anyhow::anyhow!("--starts must be positive")));
        }
        let map = BilayerMap::new(g)?;
        let mut out = serde_json::Map::new();
        if a.solve {
            let sys = extract_system(g)?;
            let sols = solve_fixed_points(&sys, &map, cycle, opts)?;
            if !a.full {
                return Ok(to_value(&sols));
            }
            out.insert("solutions".into(), to_value(&sols));
        }
        out.insert("full_space".into(), to_value(&search_full_space(&map, cycle, opts, 400)?));
        return Ok(Value::Object(out));
    }
    if a.iterate {
        use rand::Rng;
        let sys = extract_system(g)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x0 = [0; 3].map(|_| rng.gen_range(-0.3..0.3));
        return Ok(to_value(&iterate_symmetric(&sys, x0, 1e-14, 10_000)?));
    }
    Err(Failure::Validation(anyhow::anyhow!("bilayer needs --system, --solve, --full or --iterate")))
}

fn family(a: &SimulateArgs) -> std::result::Result<Family, Failure> {
    Ok(match a.family {
        FamilyArg::Cayley => Family::Cayley { d: require(a.d, "--d")? },
        FamilyArg::Decorated => Family::Decorated {
            d: require(a.d, "--d")?,
            g: a.g,
        },
        FamilyArg::Layered => {
            let seq = load_sequence(&require(a.sequence.clone(), "--sequence")?)?;
            Family::Layered {
                prefix: seq.prefix().to_vec(),
                tail: seq.tail().to_vec(),
            }
        }
    })
}

fn run_simulate(a: &SimulateArgs) -> Outcome {
    let fam = family(a)?;
    if a.t.is_empty() {
        return Err(Failure::Validation(anyhow::anyhow!("--t is required")));
    }
    if a.scan {
        if a.depths.is_empty() {
            return Err(Failure::Validation(anyhow::anyhow!("--depths is required for scans")));
        }
        return Ok(to_value(&order_parameter_scan(&fam, &a.t, &a.depths)?));
    }
    if a.contract {
        let depth = require(a.depth, "--depth")?;
        let tree = fam.tree(depth)?;
        let mut rows = Vec::new();
        for &t in &a.t {
            let x = BlochVector::along(a.axis, t)?;
            let b = if a.neel {
                BoundaryAssignment::neel(&tree, x)?
            } else {
                BoundaryAssignment::uniform(&tree, x)?
            };
            let obs = Observable::Pauli(a.axis);
            let e = contract_expectation(&tree, &b, obs)?;
            let dense = if a.dense {
                if tree.len() > MAX_DENSE_SPINS {
                    bail_validation(format!("dense contraction needs at most {MAX_DENSE_SPINS} spins"))?;
                }
                Some(contract_expectation_dense(&tree, &b, obs)?)
            } else {
                None
            };
            rows.push(json!({"family": fam.name(), "params": fam.params(), "t": t, "depth": depth,
                             "sites": tree.len(), "expectation": e, "dense": dense}));
        }
        return Ok(Value::Array(rows));
    }
    Err(Failure::Validation(anyhow::anyhow!("simulate needs --contract or --scan")))
}

fn bail_validation(msg: String) -> std::result::Result<(), Failure> {
    Err(Failure::Validation(anyhow::anyhow!(msg)))
}

fn dispatch(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Site(a) => run_site(a),
        Command::Fn(a) => run_fn(a),
        Command::Cell(a) => run_cell(a),
        Command::Decorated(a) => {
            let t = decorated_threshold(a.d, a.g)?;
            let limit = 3u128.checked_pow(a.g + 1).map(|p| p + 1);
            Ok(json!({"d": a.d, "g": a.g, "threshold": limit.map(|l| l.to_string()), "phase": to_value(&t)}))
        }
        Command::Treecell(a) => Ok(to_value(&tree_cell_condition(&load_cell(&a.source)?)?)),
        Command::Bilayer(a) => run_bilayer(a, cli.seed),
        Command::Simulate(a) => run_simulate(a),
    }
}

fn cell_string(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// The single field of `m` holding an array of records, if there is exactly one.
fn record_table(m: &serde_json::Map<String, Value>) -> Option<&Value> {
    let mut tables = m
        .values()
        .filter(|v| v.as_array().is_some_and(|a| !a.is_empty() && a.iter().all(Value::is_object)));
    match (tables.next(), tables.next()) {
        (Some(t), None) => Some(t),
        _ => None,
    }
}

fn write_csv(v: &Value, out: impl Write) -> anyhow::Result<()> {
    let rows: Vec<&serde_json::Map<String, Value>> = match v {
        Value::Array(items) => items
            .iter()
            .map(|i| i.as_object().context("csv output needs a table of records"))
            .collect::<anyhow::Result<_>>()?,
        Value::Object(m) => match record_table(m) {
            Some(inner) => return write_csv(inner, out),
            None => vec![m],
        },
        _ => bail!("csv output needs a table of records"),
    };
    let mut w = csv::Writer::from_writer(out);
    if let Some(first) = rows.first() {
        w.write_record(first.keys())?;
        for r in &rows {
            w.write_record(first.keys().map(|k| cell_string(r.get(k).unwrap_or(&Value::Null))))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_text(v: &Value, indent: usize, out: &mut impl Write) -> std::io::Result<()> {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                if x.is_object() || (x.is_array() && x.as_array().is_some_and(|a| a.iter().any(|e| e.is_object()))) {
                    writeln!(out, "{pad}{k}:")?;
                    write_text(x, indent + 1, out)?;
                } else {
                    writeln!(out, "{pad}{k}: {}", cell_string(x))?;
                }
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                writeln!(out, "{pad}[{i}]")?;
                write_text(x, indent + 1, out)?;
            }
        }
        other => writeln!(out, "{pad}{}", cell_string(other))?,
    }
    Ok(())
}

fn emit(v: &Value, format: Format) -> anyhow::Result<()> {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut lock, v)?;
            writeln!(lock)?;
        }
        Format::Csv => write_csv(v, &mut lock)?,
        Format::Text => write_text(v, 0, &mut lock)?,
    }
    Ok(())
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(n) = std::env::var(THREADS_ENV) {
        let n: usize = n.parse().with_context(|| format!("{THREADS_ENV} must be a positive integer"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match dispatch(&cli) {
        Ok(v) => match emit(&v, cli.format) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_of(v: &Value) -> String {
        let mut buf = Vec::new();
        write_csv(v, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn csv_keeps_key_order_and_blanks_nulls() {
        let v = json!([{"b": 1, "a": null}, {"b": "x", "a": 2.5}]);
        assert_eq!(csv_of(&v), "b,a\n1,\nx,2.5\n");
    }

    #[test]
    fn csv_unwraps_single_record_table() {
        let v = json!({"n": 2, "steps": [{"k": 1}, {"k": 2}]});
        assert_eq!(csv_of(&v), "k\n1\n2\n");
    }

    #[test]
    fn csv_rejects_scalars() {
        assert!(write_csv(&json!(3), Vec::new()).is_err());
    }

    #[test]
    fn text_nests_objects() {
        let mut buf = Vec::new();
        write_text(&json!({"a": 1, "b": {"c": "x"}}), 0, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a: 1\nb:\n  c: x\n");
    }
}
