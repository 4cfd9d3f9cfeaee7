//! Immediate consequence operator, reducts, least fixpoints and stable models.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generate;
use crate::lattice::{negate, Adjoint, Aggregator, Interval, LatticeKind, TruthValue};
use crate::par::Execution;
use crate::semantics::{value_to_json, Interpretation};
use crate::syntax::{BodyExpr, Program};

/// Stopping rule for Kleene-style iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixpointConfig {
    /// Sup-norm step size at which an iteration is declared converged.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FixpointConfig {
    fn default() -> Self {
        FixpointConfig { tolerance: 1e-9, max_iterations: 10_000 }
    }
}

impl FixpointConfig {
    pub fn new(tolerance: f64, max_iterations: usize) -> Result<Self> {
        let cfg = FixpointConfig { tolerance, max_iterations };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidConfig(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

pub const DEFAULT_CHECK_TOL: f64 = 1e-7;

/// Iterates of a fixpoint computation, starting with the initial interpretation.
#[derive(Debug, Clone, PartialEq)]
pub struct FixpointTrace {
    pub iterates: Vec<Interpretation>,
    pub converged: bool,
    /// Sup-norm distance between the last two iterates.
    pub residual: f64,
}

impl FixpointTrace {
    pub fn last(&self) -> &Interpretation {
        self.iterates.last().expect("trace is never empty")
    }

    /// Number of steps that still moved the iterate by more than the
    /// tolerance: 2 for a table whose third row repeats the second.
    pub fn effective_iterations(&self) -> usize {
        if self.converged {
            self.iterates.len().saturating_sub(2)
        } else {
            self.iterates.len() - 1
        }
    }

    /// Table view: one row per iterate, one column per symbol.
    pub fn to_json(&self) -> serde_json::Value {
        let symbols: Vec<String> = self.last().symbols().iter().map(|a| a.to_string()).collect();
        let rows: Vec<serde_json::Value> = self
            .iterates
            .iter()
            .map(|it| serde_json::Value::Array(it.values().iter().map(|v| value_to_json(*v)).collect()))
            .collect();
        serde_json::json!({
            "symbols": symbols,
            "rows": rows,
            "converged": self.converged,
            "residual": self.residual,
        })
    }
}

#[derive(Debug, Clone)]
enum CExpr {
    Prop(usize),
    Neg(usize),
    Const(TruthValue),
    Conn(Adjoint, Box<CExpr>, Box<CExpr>),
    Agg(Aggregator, Vec<CExpr>),
}

#[derive(Debug, Clone)]
struct CRule {
    head: usize,
    adjoint: Adjoint,
    body: CExpr,
    weight: TruthValue,
}

/// Program with atoms resolved to symbol indices. Kinds were checked when
/// the program was built, so evaluation cannot fail.
#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    kind: LatticeKind,
    n: usize,
    rules: Vec<CRule>,
}

const CHECKED: &str = "operand kinds are validated at program construction";

impl Compiled {
    pub(crate) fn new(p: &Program) -> Compiled {
        let idx = |a: &crate::syntax::Atom| p.symbol_index(a.as_str()).expect("program symbols cover rule atoms");
        fn lower(e: &BodyExpr, idx: &dyn Fn(&crate::syntax::Atom) -> usize) -> CExpr {
            match e {
                BodyExpr::Prop(a) => CExpr::Prop(idx(a)),
                BodyExpr::NegProp(a) => CExpr::Neg(idx(a)),
                BodyExpr::Const(v) => CExpr::Const(*v),
                BodyExpr::Conn(op, l, r) => CExpr::Conn(op.adjoint(), Box::new(lower(l, idx)), Box::new(lower(r, idx))),
                BodyExpr::Agg(agg, args) => CExpr::Agg(*agg, args.iter().map(|a| lower(a, idx)).collect()),
            }
        }
        let rules = p
            .rules()
            .iter()
            .map(|r| CRule {
                head: idx(r.head()),
                adjoint: r.implication(),
                body: lower(r.body(), &idx),
                weight: r.weight(),
            })
            .collect();
        Compiled { kind: p.kind(), n: p.symbols().len(), rules }
    }

    pub(crate) fn bottom(&self) -> Vec<TruthValue> {
        vec![TruthValue::bottom(self.kind); self.n]
    }

    /// Negated atoms read from `frozen` when given (the reduct), else from `vals`.
    fn eval(&self, e: &CExpr, vals: &[TruthValue], frozen: Option<&[TruthValue]>) -> TruthValue {
        match e {
            CExpr::Prop(i) => vals[*i],
            CExpr::Neg(i) => negate(frozen.unwrap_or(vals)[*i]),
            CExpr::Const(v) => *v,
            CExpr::Conn(adj, l, r) => adj.conj(self.eval(l, vals, frozen), self.eval(r, vals, frozen)).expect(CHECKED),
            CExpr::Agg(agg, args) => {
                let xs: Vec<TruthValue> = args.iter().map(|a| self.eval(a, vals, frozen)).collect();
                agg.apply(&xs).expect(CHECKED)
            }
        }
    }

    pub(crate) fn tp(&self, vals: &[TruthValue], frozen: Option<&[TruthValue]>) -> Vec<TruthValue> {
        let mut out = self.bottom();
        for rule in &self.rules {
            let v = rule.adjoint.conj(rule.weight, self.eval(&rule.body, vals, frozen)).expect(CHECKED);
            out[rule.head] = out[rule.head].zip_with(&v, f64::max).expect(CHECKED);
        }
        out
    }

    /// Kleene iteration from bottom of the operator `tp(·, frozen)`.
    pub(crate) fn lfp(&self, frozen: Option<&[TruthValue]>, cfg: &FixpointConfig, record: bool) -> LfpRun {
        let mut cur = self.bottom();
        let mut iterates = Vec::new();
        if record {
            iterates.push(cur.clone());
        }
        let mut residual = f64::INFINITY;
        for _ in 0..cfg.max_iterations {
            let next = self.tp(&cur, frozen);
            residual = slice_distance(&cur, &next);
            if record {
                iterates.push(next.clone());
            }
            cur = next;
            if residual <= cfg.tolerance {
                return LfpRun { last: cur, iterates, converged: true, residual };
            }
        }
        LfpRun { last: cur, iterates, converged: false, residual }
    }

    /// `R(I) = lfp(T_{P_I})`.
    pub(crate) fn stable_operator(&self, vals: &[TruthValue], cfg: &FixpointConfig) -> LfpRun {
        self.lfp(Some(vals), cfg, false)
    }
}

pub(crate) struct LfpRun {
    pub(crate) last: Vec<TruthValue>,
    pub(crate) iterates: Vec<Vec<TruthValue>>,
    pub(crate) converged: bool,
    pub(crate) residual: f64,
}

pub(crate) fn slice_distance(a: &[TruthValue], b: &[TruthValue]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.distance(y).expect(CHECKED)).fold(0.0, f64::max)
}

/// `T_P(I)(q) = sup { weight & Î(body) | q <- body ; weight in P }`.
pub fn tp(p: &Program, i: &Interpretation) -> Result<Interpretation> {
    i.check_program(p)?;
    Ok(i.with_values(Compiled::new(p).tp(i.values(), None)))
}

/// Positive program obtained by freezing every `not q` at `¬I(q)`.
pub fn reduct(p: &Program, i: &Interpretation) -> Result<Program> {
    i.check_program(p)?;
    fn freeze(e: &BodyExpr, i: &Interpretation) -> BodyExpr {
        match e {
            BodyExpr::NegProp(a) => BodyExpr::Const(negate(i.get(a.as_str()).expect("symbols checked"))),
            BodyExpr::Prop(_) | BodyExpr::Const(_) => e.clone(),
            BodyExpr::Conn(op, l, r) => BodyExpr::conn(*op, freeze(l, i), freeze(r, i)),
            BodyExpr::Agg(agg, args) => BodyExpr::Agg(*agg, args.iter().map(|a| freeze(a, i)).collect()),
        }
    }
    let rules = p.rules().iter().map(|r| r.with_body(freeze(r.body(), i))).collect();
    Ok(p.with_rules(rules))
}

fn run_to_trace(p: &Program, run: LfpRun) -> FixpointTrace {
    let template = Interpretation::bottom(p);
    FixpointTrace {
        iterates: run.iterates.into_iter().map(|v| template.with_values(v)).collect(),
        converged: run.converged,
        residual: run.residual,
    }
}

/// Kleene iteration of `T_P` from `I_bot` for a positive program.
pub fn least_fixpoint(p: &Program, cfg: &FixpointConfig) -> Result<FixpointTrace> {
    cfg.validate()?;
    if !p.is_positive() {
        return Err(Error::NotPositive);
    }
    Ok(run_to_trace(p, Compiled::new(p).lfp(None, cfg, true)))
}

/// Iterates `T_P` from `start`, negation included. Converges when `T_P` is a
/// contraction (as on certified programs) and always on positive programs
/// started at `I_bot`.
pub fn iterate(p: &Program, start: &Interpretation, cfg: &FixpointConfig) -> Result<FixpointTrace> {
    cfg.validate()?;
    start.check_program(p)?;
    let c = Compiled::new(p);
    let mut cur = start.values().to_vec();
    let mut iterates = vec![cur.clone()];
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for _ in 0..cfg.max_iterations {
        let next = c.tp(&cur, None);
        residual = slice_distance(&cur, &next);
        iterates.push(next.clone());
        cur = next;
        if residual <= cfg.tolerance {
            converged = true;
            break;
        }
    }
    Ok(run_to_trace(p, LfpRun { last: cur, iterates, converged, residual }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCheck {
    pub stable: bool,
    /// False when the least fixpoint of the reduct did not converge; `stable`
    /// is then false as well.
    pub converged: bool,
    /// Sup-norm distance between the candidate and the least model of its reduct.
    pub distance: f64,
    pub least_model: Interpretation,
}

/// `I` is stable iff it is (within `check_tol`) the least model of `P_I`.
pub fn is_stable(p: &Program, i: &Interpretation, cfg: &FixpointConfig, check_tol: f64) -> Result<StabilityCheck> {
    cfg.validate()?;
    i.check_program(p)?;
    let run = Compiled::new(p).stable_operator(i.values(), cfg);
    let distance = slice_distance(&run.last, i.values());
    Ok(StabilityCheck {
        stable: run.converged && distance <= check_tol,
        converged: run.converged,
        distance,
        least_model: i.with_values(run.last),
    })
}

pub fn sup_norm(i: &Interpretation, j: &Interpretation) -> Result<f64> {
    if !i.same_symbols(j) || i.kind() != j.kind() {
        return Err(Error::SymbolMismatch);
    }
    Ok(slice_distance(i.values(), j.values()))
}

/// The singleton partition: one single-rule program per rule, each over the
/// full symbol set of `p`.
pub fn partition(p: &Program) -> Vec<Program> {
    p.rules().iter().map(|r| p.with_rules(vec![r.clone()])).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    pub check_tol: f64,
    /// Step weight `w` in `I <- I + w (R(I) - I)`; 1 is the plain iteration.
    pub relaxation: f64,
    /// Found models closer than this are reported once.
    pub dedup_tol: f64,
    pub execution: Execution,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            check_tol: DEFAULT_CHECK_TOL,
            relaxation: 1.0,
            dedup_tol: 1e-6,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum StartStatus {
    Stable,
    /// Converged, but the limit failed the stability check.
    Rejected,
    /// Budget exhausted; `period` is set when the tail repeats with that period.
    NotConverged {
        period: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Distinct verified stable models, sorted canonically.
    pub models: Vec<(Interpretation, FixpointTrace)>,
    /// One entry per start, in input order.
    pub starts: Vec<StartStatus>,
}

impl SearchOutcome {
    pub fn not_converged(&self) -> usize {
        self.starts.iter().filter(|s| matches!(s, StartStatus::NotConverged { .. })).count()
    }
}

/// `I_bot`, `I_top` and eight pseudo-random interpretations from `seed`.
pub fn default_starts(p: &Program, seed: u64) -> Vec<Interpretation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![Interpretation::bottom(p), Interpretation::top(p)];
    starts.extend((0..8).map(|_| generate::random_interpretation(p, &mut rng)));
    starts
}

pub fn stable_search(p: &Program, cfg: &FixpointConfig, starts: &[Interpretation]) -> Result<SearchOutcome> {
    stable_search_with(p, cfg, starts, &SearchOptions::default())
}

/// Iterates `R(I) = lfp(T_{P_I})` from each start. Converged limits are
/// re-verified with [`is_stable`] before being reported.
pub fn stable_search_with(
    p: &Program,
    cfg: &FixpointConfig,
    starts: &[Interpretation],
    opts: &SearchOptions,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    if !(opts.relaxation > 0.0 && opts.relaxation <= 1.0) {
        return Err(Error::InvalidConfig(format!("relaxation must lie in (0,1], got {}", opts.relaxation)));
    }
    for s in starts {
        s.check_program(p)?;
    }
    let compiled = Compiled::new(p);
    let runs = opts.execution.map(starts, |start| search_from(p, &compiled, start, cfg, opts));

    let mut found: Vec<(Interpretation, FixpointTrace)> = Vec::new();
    let mut statuses = Vec::with_capacity(runs.len());
    for run in runs {
        let (status, model) = run?;
        statuses.push(status);
        if let Some((m, trace)) = model {
            if !found.iter().any(|(f, _)| slice_distance(f.values(), m.values()) <= opts.dedup_tol) {
                found.push((m, trace));
            }
        }
    }
    found.sort_by(|a, b| canonical_cmp(&a.0, &b.0));
    Ok(SearchOutcome { models: found, starts: statuses })
}

type SearchRun = Result<(StartStatus, Option<(Interpretation, FixpointTrace)>)>;

fn search_from(
    p: &Program,
    c: &Compiled,
    start: &Interpretation,
    cfg: &FixpointConfig,
    opts: &SearchOptions,
) -> SearchRun {
    let mut cur = start.values().to_vec();
    let mut iterates = vec![cur.clone()];
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for _ in 0..cfg.max_iterations {
        let run = c.stable_operator(&cur, cfg);
        let next = if opts.relaxation == 1.0 { run.last } else { relax(&cur, &run.last, opts.relaxation) };
        residual = slice_distance(&cur, &next);
        iterates.push(next.clone());
        cur = next;
        if residual <= cfg.tolerance {
            converged = true;
            break;
        }
    }
    let template = start.with_values(cur.clone());
    let trace = FixpointTrace {
        iterates: iterates.into_iter().map(|v| template.with_values(v)).collect(),
        converged,
        residual,
    };
    if !converged {
        return Ok((StartStatus::NotConverged { period: detect_period(&trace.iterates, cfg.tolerance) }, None));
    }
    let check = is_stable(p, &template, cfg, opts.check_tol)?;
    if check.stable {
        Ok((StartStatus::Stable, Some((template, trace))))
    } else {
        Ok((StartStatus::Rejected, None))
    }
}

fn relax(cur: &[TruthValue], target: &[TruthValue], w: f64) -> Vec<TruthValue> {
    cur.iter()
        .zip(target)
        .map(|(a, b)| match (*a, *b) {
            (TruthValue::Unit(x), TruthValue::Unit(y)) => TruthValue::Unit((x + w * (y - x)).clamp(0.0, 1.0)),
            (TruthValue::Interval(x), TruthValue::Interval(y)) => {
                let hi = (x.hi() + w * (y.hi() - x.hi())).clamp(0.0, 1.0);
                let lo = (x.lo() + w * (y.lo() - x.lo())).clamp(0.0, hi);
                TruthValue::Interval(Interval::new(lo, hi).expect("convex combination stays in C([0,1])"))
            }
            _ => unreachable!("{CHECKED}"),
        })
        .collect()
}

fn detect_period(iterates: &[Interpretation], tol: f64) -> Option<usize> {
    let last = iterates.last()?;
    (2..=8).find(|&k| {
        iterates.len() > k && slice_distance(iterates[iterates.len() - 1 - k].values(), last.values()) <= tol
    })
}

/// Lexicographic order on endpoint tuples.
pub fn canonical_cmp(a: &Interpretation, b: &Interpretation) -> Ordering {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| {
            let (x0, x1) = x.endpoints();
            let (y0, y1) = y.endpoints();
            x0.total_cmp(&y0).then(x1.total_cmp(&y1))
        })
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}
