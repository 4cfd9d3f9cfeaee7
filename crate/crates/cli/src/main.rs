//! `manlp`: command-line front end. Tables go to stdout; `--json <path>`
//! writes one self-describing document per run.
//!
//! Exit codes: 0 success, 1 negative verdict, 2 usage or input error,
//! 3 budget exhausted or iteration did not converge.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use manlp::engine::{self, FixpointConfig, SearchOptions, StartStatus};
use manlp::oracle::{self, GridSpec};
use manlp::semantics::{self, value_to_json, Interpretation};
use manlp::syntax::{parse_program, render_program, Program};
use manlp::uniqueness;
use manlp::{Error, LatticeKind};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

const SEED_ENV: &str = "MANLP_SEED";

#[derive(Parser, Debug)]
#[command(name = "manlp", version, about = "Stable models of multi-adjoint normal logic programs")]
struct Cli {
    /// Write the structured report to this file.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Truth-value lattice of the program; inferred from the text when omitted.
    #[arg(long, global = true, value_enum)]
    lattice: Option<LatticeArg>,
    /// Print wall-clock time to stderr.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LatticeArg {
    Unit,
    Interval,
}

#[derive(Args, Debug, Clone, Copy)]
struct IterArgs {
    /// Convergence tolerance (sup-norm step size).
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Iteration budget.
    #[arg(long, default_value_t = 10_000)]
    max: usize,
}

impl IterArgs {
    fn config(&self) -> Result<FixpointConfig, Failure> {
        FixpointConfig::new(self.tol, self.max).map_err(Failure::from)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-rule satisfaction table and model verdict.
    CheckModel {
        program: PathBuf,
        #[arg(long)]
        interp: PathBuf,
    },
    /// One application of the immediate consequence operator, or its iteration.
    Tp {
        program: PathBuf,
        /// Starting interpretation; bottom when omitted with --iterate.
        #[arg(long, required_unless_present = "iterate")]
        interp: Option<PathBuf>,
        #[arg(long)]
        iterate: bool,
        #[command(flatten)]
        iter: IterArgs,
    },
    /// Positive program obtained by freezing negated atoms at an interpretation.
    Reduct {
        program: PathBuf,
        #[arg(long)]
        interp: PathBuf,
    },
    /// Check, search for, or enumerate stable models.
    Stable {
        program: PathBuf,
        /// Verify that this interpretation is a stable model.
        #[arg(long, group = "mode")]
        check: Option<PathBuf>,
        /// Multi-start fixpoint search from bottom, top and seeded random starts.
        #[arg(long, group = "mode")]
        search: bool,
        /// Exhaustive grid search with step 1/N.
        #[arg(long, group = "mode", value_name = "N")]
        brute: Option<u32>,
        /// Seed for random starts (overridden by MANLP_SEED).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Step weight in (0,1] for the search iteration; 1 is undamped.
        #[arg(long, default_value_t = 1.0)]
        relax: f64,
        /// Grid-size budget for --brute.
        #[arg(long, default_value_t = GridSpec::DEFAULT_MAX_POINTS)]
        max_points: u64,
        /// Stability tolerance for --check and search verification.
        #[arg(long, default_value_t = engine::DEFAULT_CHECK_TOL)]
        check_tol: f64,
        #[command(flatten)]
        iter: IterArgs,
    },
    /// Uniqueness certificate; with --solve, the unique stable model.
    Cert {
        program: PathBuf,
        #[arg(long)]
        solve: bool,
        #[command(flatten)]
        iter: IterArgs,
    },
}

/// Error with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn input(error: anyhow::Error) -> Self {
        Failure { code: 2, error }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BudgetExceeded { .. } | Error::NotConverged { .. } => 3,
            Error::NotCertified(_) | Error::Ineligible(_) => 1,
            _ => 2,
        };
        Failure { code, error: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure::input(error)
    }
}

/// Structured output of one run plus its exit code.
struct Report {
    doc: Map<String, Value>,
    code: u8,
}

impl Report {
    fn new(command: &str, program: &Loaded) -> Self {
        let mut doc = Map::new();
        doc.insert("command".into(), json!(command));
        doc.insert(
            "program".into(),
            json!({
                "path": program.path.display().to_string(),
                "sha256": program.digest,
                "lattice": program.program.kind().to_string(),
                "rules": program.program.rules().len(),
            }),
        );
        Report { doc, code: 0 }
    }

    fn set(&mut self, key: &str, value: Value) {
        self.doc.insert(key.into(), value);
    }

    fn verdict(&mut self, ok: bool, negative_code: u8) {
        self.set("verdict", json!(ok));
        if !ok {
            self.code = negative_code;
        }
    }
}

struct Loaded {
    path: PathBuf,
    digest: String,
    program: Program,
}

fn infer_lattice(text: &str) -> LatticeKind {
    let interval =
        text.lines().map(|l| l.split('#').next().unwrap_or("")).any(|l| l.contains("<-ei") || l.contains('['));
    if interval {
        LatticeKind::Interval
    } else {
        LatticeKind::Unit
    }
}

fn load_program(path: &Path, lattice: Option<LatticeArg>) -> Result<Loaded, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let kind = match lattice {
        Some(LatticeArg::Unit) => LatticeKind::Unit,
        Some(LatticeArg::Interval) => LatticeKind::Interval,
        None => infer_lattice(&text),
    };
    let program = parse_program(&text, kind).map_err(|e| Failure::input(anyhow!("{}: {e}", path.display())))?;
    let digest = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    Ok(Loaded { path: path.to_path_buf(), digest, program })
}

fn load_interp(p: &Program, path: &Path) -> Result<Interpretation, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Interpretation::from_json(p, &text).map_err(|e| Failure::input(anyhow!("{}: {e}", path.display())))
}

fn seed(flag: u64) -> Result<u64, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Failure::input(anyhow!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(flag),
    }
}

fn print_interp(i: &Interpretation) {
    for (atom, v) in i.iter() {
        println!("  {:<8} {v}", atom.as_str());
    }
}

fn print_trace(trace: &engine::FixpointTrace) {
    let symbols = trace.last().symbols();
    let mut header = format!("{:<6}", "iter");
    for s in symbols.iter() {
        header.push_str(&format!(" {:>24}", s.as_str()));
    }
    println!("{header}");
    for (k, it) in trace.iterates.iter().enumerate() {
        let mut row = format!("{k:<6}");
        for v in it.values() {
            row.push_str(&format!(" {:>24}", v.to_string()));
        }
        println!("{row}");
    }
    println!(
        "converged: {} (effective iterations {}, last step {:e})",
        if trace.converged { "yes" } else { "no" },
        trace.effective_iterations(),
        trace.residual
    );
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn check_model(l: &Loaded, interp: &Path) -> Result<Report, Failure> {
    let p = &l.program;
    let i = load_interp(p, interp)?;
    let mut report = Report::new("check-model", l);
    report.set("inputs", json!({ "interpretation": i.to_json() }));
    println!("{:<4} {:<40} {:>22} {:>12}  sat", "rule", "text", "value", "weight");
    let mut rows = Vec::new();
    for (k, rule) in p.rules().iter().enumerate() {
        let value = semantics::rule_value(rule, &i)?;
        let sat = semantics::satisfies(rule, &i)?;
        println!(
            "{:<4} {:<40} {:>22} {:>12}  {}",
            k + 1,
            rule.to_string(),
            value.to_string(),
            rule.weight().to_string(),
            yes_no(sat)
        );
        rows.push(json!({
            "rule": k + 1,
            "text": rule.to_string(),
            "value": value_to_json(value),
            "weight": value_to_json(rule.weight()),
            "satisfied": sat,
        }));
    }
    let model = semantics::is_model(p, &i)?;
    println!("model: {}", yes_no(model));
    report.set("rules", Value::Array(rows));
    report.verdict(model, 1);
    Ok(report)
}

fn tp_cmd(l: &Loaded, interp: Option<&Path>, iterate: bool, iter: IterArgs) -> Result<Report, Failure> {
    let p = &l.program;
    let start = match interp {
        Some(path) => load_interp(p, path)?,
        None => Interpretation::bottom(p),
    };
    let mut report = Report::new("tp", l);
    report.set("inputs", json!({ "interpretation": start.to_json(), "iterate": iterate }));
    if iterate {
        let cfg = iter.config()?;
        report.set("inputs", json!({ "interpretation": start.to_json(), "iterate": true, "tol": cfg.tolerance, "max": cfg.max_iterations }));
        let trace = engine::iterate(p, &start, &cfg)?;
        print_trace(&trace);
        report.set("trace", trace.to_json());
        report.set("result", trace.last().to_json());
        report.verdict(trace.converged, 3);
    } else {
        let out = engine::tp(p, &start)?;
        println!("T_P(I):");
        print_interp(&out);
        report.set("result", out.to_json());
    }
    Ok(report)
}

fn reduct_cmd(l: &Loaded, interp: &Path) -> Result<Report, Failure> {
    let p = &l.program;
    let i = load_interp(p, interp)?;
    let r = engine::reduct(p, &i)?;
    let text = render_program(&r);
    print!("{text}");
    let mut report = Report::new("reduct", l);
    report.set("inputs", json!({ "interpretation": i.to_json() }));
    report.set("reduct", json!(text));
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn stable_cmd(
    l: &Loaded,
    check: Option<&Path>,
    search: bool,
    brute: Option<u32>,
    seed_flag: u64,
    relax: f64,
    max_points: u64,
    check_tol: f64,
    iter: IterArgs,
) -> Result<Report, Failure> {
    let p = &l.program;
    let cfg = iter.config()?;
    let mut report = Report::new("stable", l);
    if let Some(path) = check {
        let i = load_interp(p, path)?;
        let c = engine::is_stable(p, &i, &cfg, check_tol)?;
        report.set("inputs", json!({ "interpretation": i.to_json(), "check_tol": check_tol }));
        println!("least model of the reduct:");
        print_interp(&c.least_model);
        println!("distance: {:e}", c.distance);
        println!("stable: {}", yes_no(c.stable));
        report.set("least_model", c.least_model.to_json());
        report.set("distance", json!(c.distance));
        if !c.converged {
            report.verdict(false, 3);
        } else {
            report.verdict(c.stable, 1);
        }
    } else if let Some(n) = brute {
        let g = GridSpec { max_points, ..GridSpec::new(n)? };
        report.set("inputs", json!({ "brute": n, "max_points": max_points }));
        let rep = oracle::brute_force_stable(p, &g, &cfg)?;
        println!(
            "scanned {} grid points, {} candidates, {} clusters",
            rep.points_scanned,
            rep.candidates,
            rep.clusters.len()
        );
        for (k, c) in rep.clusters.iter().enumerate() {
            println!("cluster {} ({} points, residual {:e}):", k + 1, c.members.len(), c.residual);
            print_interp(&c.representative);
        }
        report.set("models", rep.clusters.iter().map(|c| c.representative.to_json()).collect());
        report.set("oracle", serde_json::to_value(&rep).map_err(anyhow::Error::from)?);
        report.verdict(!rep.clusters.is_empty(), 1);
    } else {
        debug_assert!(search || check.is_none());
        let seed = seed(seed_flag)?;
        let starts = engine::default_starts(p, seed);
        let opts = SearchOptions { relaxation: relax, check_tol, ..SearchOptions::default() };
        report.set("inputs", json!({ "seed": seed, "relax": relax, "starts": starts.len(), "tol": cfg.tolerance, "max": cfg.max_iterations }));
        let out = engine::stable_search_with(p, &cfg, &starts, &opts)?;
        for (k, status) in out.starts.iter().enumerate() {
            let text = match status {
                StartStatus::Stable => "converged to a stable model".to_string(),
                StartStatus::Rejected => "converged, limit not stable".to_string(),
                StartStatus::NotConverged { period: Some(k) } => format!("did not converge (cycle of period {k})"),
                StartStatus::NotConverged { period: None } => "did not converge".to_string(),
            };
            println!("start {:>2}: {text}", k + 1);
        }
        println!("{} stable model(s)", out.models.len());
        for (k, (m, trace)) in out.models.iter().enumerate() {
            println!("model {} ({} iterations):", k + 1, trace.effective_iterations());
            print_interp(m);
        }
        report.set("models", out.models.iter().map(|(m, _)| m.to_json()).collect());
        report.set("starts", serde_json::to_value(&out.starts).map_err(anyhow::Error::from)?);
        if out.models.is_empty() && out.not_converged() > 0 {
            report.verdict(false, 3);
        } else {
            report.verdict(!out.models.is_empty(), 1);
        }
    }
    Ok(report)
}

fn cert_cmd(l: &Loaded, solve: bool, iter: IterArgs) -> Result<Report, Failure> {
    let p = &l.program;
    let mut report = Report::new("cert", l);
    report.set("inputs", json!({ "solve": solve }));
    let cert = match uniqueness::certify(p) {
        Ok(c) => c,
        Err(Error::Ineligible(violations)) => {
            println!("program is outside the certificate's hypotheses:");
            for v in &violations {
                println!("  {v}");
            }
            report.set("violations", serde_json::to_value(&violations).map_err(anyhow::Error::from)?);
            report.verdict(false, 1);
            return Ok(report);
        }
        Err(e) => return Err(e.into()),
    };
    println!("{cert}");
    report.set("certificate", cert.to_json());
    report.verdict(cert.verdict, 1);
    if solve && cert.verdict {
        let sol = uniqueness::solve_unique(p, &iter.config()?)?;
        println!();
        print_trace(&sol.trace);
        println!("unique stable model:");
        print_interp(&sol.model);
        println!("stable: {}", yes_no(sol.check.stable));
        report.set("models", json!([sol.model.to_json()]));
        report.set("trace", sol.trace.to_json());
        if !sol.check.stable {
            report.verdict(false, 1);
        }
    }
    Ok(report)
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    match &cli.command {
        Command::CheckModel { program, interp } => check_model(&load_program(program, cli.lattice)?, interp),
        Command::Tp { program, interp, iterate, iter } => {
            tp_cmd(&load_program(program, cli.lattice)?, interp.as_deref(), *iterate, *iter)
        }
        Command::Reduct { program, interp } => reduct_cmd(&load_program(program, cli.lattice)?, interp),
        Command::Stable { program, check, search, brute, seed, relax, max_points, check_tol, iter } => stable_cmd(
            &load_program(program, cli.lattice)?,
            check.as_deref(),
            *search,
            *brute,
            *seed,
            *relax,
            *max_points,
            *check_tol,
            *iter,
        ),
        Command::Cert { program, solve, iter } => cert_cmd(&load_program(program, cli.lattice)?, *solve, *iter),
    }
}

fn write_json(path: &Path, doc: &Map<String, Value>) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let outcome = run(&cli);
    if cli.timing {
        eprintln!("elapsed: {:?}", start.elapsed());
    }
    match outcome {
        Ok(report) => {
            if let Some(path) = &cli.json {
                if let Err(e) = write_json(path, &report.doc) {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(2);
                }
            }
            ExitCode::from(report.code)
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            if let Some(path) = &cli.json {
                let doc = Map::from_iter([
                    ("error".to_string(), json!(format!("{:#}", f.error))),
                    ("exit_code".to_string(), json!(f.code)),
                ]);
                let _ = write_json(path, &doc);
            }
            ExitCode::from(f.code)
        }
    }
}
