//! Contractivity certificate for interval programs whose rules are
//! ei-implications over `*`-products of (possibly negated) atoms.
//!
//! Each rule gets two Lipschitz bounds, one per interval endpoint, evaluated
//! at the head-weight bound interpretation `I_ϑ`. When every bound is below 1,
//! `T_P` is a contraction on the interpretations below `I_ϑ` and the program
//! has exactly one stable model, reachable by iterating `T_P` from bottom.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::{self, slice_distance, Compiled, FixpointConfig, FixpointTrace, StabilityCheck};
use crate::error::{Error, Result};
use crate::lattice::{Adjoint, EiParams, Interval, LatticeKind, TruthValue};
use crate::par::Execution;
use crate::semantics::Interpretation;
use crate::syntax::{Atom, BodyExpr, Connective, Program, Rule};

/// Why a program falls outside the certificate's hypotheses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Offending rule, or `None` for a program-wide problem.
    pub rule: Option<usize>,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rule {
            Some(i) => write!(f, "rule {}: {}", i + 1, self.reason),
            None => write!(f, "program: {}", self.reason),
        }
    }
}

/// Shape of an eligible rule: `head <-ei(..) q1 * .. * qh * not q(h+1) * .. * not qk ; w`.
#[derive(Debug, Clone, PartialEq)]
struct Shape<'a> {
    params: EiParams,
    weight: Interval,
    positive: Vec<&'a Atom>,
    negated: usize,
}

fn shape(rule: &Rule) -> std::result::Result<Shape<'_>, String> {
    let Adjoint::Ei(params) = rule.implication() else {
        return Err(format!("implication {} is not an ei-implication", rule.implication()));
    };
    let weight = rule.weight().as_interval().map_err(|e| e.to_string())?;
    let mut s = Shape { params, weight, positive: Vec::new(), negated: 0 };
    if let BodyExpr::Const(v) = rule.body() {
        return if v.is_top() { Ok(s) } else { Err(format!("body is the constant {v}, not a product of literals")) };
    }
    fn walk<'a>(e: &'a BodyExpr, s: &mut Shape<'a>) -> std::result::Result<(), String> {
        match e {
            BodyExpr::Prop(a) => s.positive.push(a),
            BodyExpr::NegProp(_) => s.negated += 1,
            BodyExpr::Conn(Connective::IntervalProduct, l, r) => {
                walk(l, s)?;
                walk(r, s)?;
            }
            BodyExpr::Conn(op, ..) => return Err(format!("body uses connective {}, only `*` is allowed", op.symbol())),
            BodyExpr::Const(v) => return Err(format!("body contains the constant {v}")),
            BodyExpr::Agg(agg, _) => return Err(format!("body contains the aggregator @{}", agg.name())),
        }
        Ok(())
    }
    walk(rule.body(), &mut s)?;
    Ok(s)
}

/// Every hypothesis violation of `p`; empty iff the program is eligible.
pub fn violations(p: &Program) -> Vec<Violation> {
    if p.kind() != LatticeKind::Interval {
        return vec![Violation {
            rule: None,
            reason: format!("program is over the {} lattice, not C([0,1])", p.kind()),
        }];
    }
    p.rules()
        .iter()
        .enumerate()
        .filter_map(|(i, r)| shape(r).err().map(|reason| Violation { rule: Some(i), reason }))
        .collect()
}

pub fn eligible(p: &Program) -> std::result::Result<(), Vec<Violation>> {
    let v = violations(p);
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeadBound {
    pub symbol: String,
    pub bound: Interval,
}

/// Componentwise maximum of rule weights per head; `[0,0]` for symbols heading no rule.
pub fn head_weight_bounds(p: &Program) -> Result<Vec<HeadBound>> {
    let mut bounds = vec![Interval::BOTTOM; p.symbols().len()];
    for rule in p.rules() {
        let w = rule.weight().as_interval()?;
        let i = p.symbol_index(rule.head().as_str()).expect("heads are program symbols");
        bounds[i] = Interval::new(bounds[i].lo().max(w.lo()), bounds[i].hi().max(w.hi()))?;
    }
    Ok(p.symbols().iter().zip(bounds).map(|(a, bound)| HeadBound { symbol: a.to_string(), bound }).collect())
}

/// `I_ϑ`: every symbol at its head-weight bound.
pub fn bound_interpretation(p: &Program) -> Result<Interpretation> {
    let values = head_weight_bounds(p)?.into_iter().map(|b| TruthValue::Interval(b.bound)).collect();
    Interpretation::from_values(p, values)
}

/// One endpoint of the bound: `w^a · c · Σ_j b_j^(c-1) Π_{l≠j} b_l^c + w^a · c · m · Π_l b_l^c`
/// with `0^0 = 1` and empty products equal to 1.
fn endpoint_lambda(w: f64, a: u32, c: u32, bounds: &[f64], negated: usize) -> f64 {
    let wa = w.powi(a as i32);
    let c_f = c as f64;
    let cross: f64 = (0..bounds.len())
        .map(|j| {
            let others: f64 = bounds.iter().enumerate().filter(|&(l, _)| l != j).map(|(_, b)| b).product();
            wa * c_f * bounds[j].powi(c as i32 - 1) * others.powi(c as i32)
        })
        .sum();
    let all: f64 = bounds.iter().product();
    cross + wa * c_f * negated as f64 * all.powi(c as i32)
}

/// `(λ¹, λ²)` for an eligible rule, given the head bounds of the whole program.
pub fn rule_lambdas(rule: &Rule, p: &Program, bounds: &[HeadBound]) -> Result<(f64, f64)> {
    let s = shape(rule).map_err(|reason| Error::Ineligible(vec![Violation { rule: None, reason }]))?;
    let lookup = |a: &Atom| -> Result<Interval> {
        let i = p.symbol_index(a.as_str()).ok_or_else(|| Error::UnknownSymbol(a.to_string()))?;
        bounds.get(i).map(|b| b.bound).ok_or_else(|| Error::MissingSymbol(a.to_string()))
    };
    let qb = s.positive.iter().map(|a| lookup(a)).collect::<Result<Vec<_>>>()?;
    let lo: Vec<f64> = qb.iter().map(|b| b.lo()).collect();
    let hi: Vec<f64> = qb.iter().map(|b| b.hi()).collect();
    let ep = s.params;
    let l1 = endpoint_lambda(s.weight.lo(), ep.alpha(), ep.gamma(), &lo, s.negated);
    let l2 = endpoint_lambda(s.weight.hi(), ep.beta(), ep.delta(), &hi, s.negated);
    Ok((l1, l2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleCertificate {
    pub rule: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Both endpoint bounds are below 1.
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub per_rule: Vec<RuleCertificate>,
    pub head_bounds: Vec<HeadBound>,
    pub verdict: bool,
    /// Largest endpoint bound over all rules; 0 for the empty program.
    pub global_lipschitz: f64,
}

impl CertificateReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report is plain data")
    }
}

impl fmt::Display for CertificateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<6} {:>12} {:>12}  result", "rule", "lambda1", "lambda2")?;
        for r in &self.per_rule {
            let verdict = if r.passes { "pass" } else { "fail" };
            writeln!(f, "{:<6} {:>12.6} {:>12.6}  {}", format!("r{}", r.rule + 1), r.lambda1, r.lambda2, verdict)?;
        }
        writeln!(f, "head bounds:")?;
        for b in &self.head_bounds {
            writeln!(f, "  {} <= {}", b.symbol, TruthValue::Interval(b.bound))?;
        }
        writeln!(f, "global lipschitz: {:.6}", self.global_lipschitz)?;
        write!(f, "verdict: {}", if self.verdict { "unique stable model" } else { "not certified" })
    }
}

pub fn certify(p: &Program) -> Result<CertificateReport> {
    eligible(p).map_err(Error::Ineligible)?;
    let head_bounds = head_weight_bounds(p)?;
    let per_rule = p
        .rules()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let (lambda1, lambda2) = rule_lambdas(r, p, &head_bounds)?;
            Ok(RuleCertificate { rule: i, lambda1, lambda2, passes: lambda1 < 1.0 && lambda2 < 1.0 })
        })
        .collect::<Result<Vec<_>>>()?;
    let verdict = per_rule.iter().all(|r| r.passes);
    let global_lipschitz = per_rule.iter().map(|r| r.lambda1.max(r.lambda2)).fold(0.0, f64::max);
    Ok(CertificateReport { per_rule, head_bounds, verdict, global_lipschitz })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniqueSolution {
    pub model: Interpretation,
    pub trace: FixpointTrace,
    pub check: StabilityCheck,
    pub certificate: CertificateReport,
}

/// Iterates `T_P` from `I_bot` on a certified program and verifies the limit
/// is stable. Uncertified programs are refused.
pub fn solve_unique(p: &Program, cfg: &FixpointConfig) -> Result<UniqueSolution> {
    cfg.validate()?;
    let certificate = certify(p)?;
    if !certificate.verdict {
        return Err(Error::NotCertified(certificate.global_lipschitz));
    }
    let trace = engine::iterate(p, &Interpretation::bottom(p), cfg)?;
    if !trace.converged {
        return Err(Error::NotConverged { iterations: trace.iterates.len() - 1, residual: trace.residual });
    }
    let model = trace.last().clone();
    let check = engine::is_stable(p, &model, cfg, engine::DEFAULT_CHECK_TOL)?;
    Ok(UniqueSolution { model, trace, check, certificate })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionSample {
    pub max_ratio: f64,
    /// Pairs that contributed a ratio.
    pub pairs: usize,
    /// Pairs with `J₁ = J₂`, skipped.
    pub skipped: usize,
}

pub fn empirical_contraction_check(p: &Program, samples: usize, seed: u64) -> Result<ContractionSample> {
    empirical_contraction_check_with(p, samples, seed, Execution::default())
}

/// Largest observed `‖T_P(J₁) − T_P(J₂)‖ / ‖J₁ − J₂‖` over random pairs `J₁, J₂ ⊑ I_ϑ`.
pub fn empirical_contraction_check_with(
    p: &Program,
    samples: usize,
    seed: u64,
    execution: Execution,
) -> Result<ContractionSample> {
    eligible(p).map_err(Error::Ineligible)?;
    let bounds: Vec<Interval> = head_weight_bounds(p)?.into_iter().map(|b| b.bound).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(Vec<TruthValue>, Vec<TruthValue>)> =
        (0..samples).map(|_| (sample_below(&bounds, &mut rng), sample_below(&bounds, &mut rng))).collect();
    let c = Compiled::new(p);
    let ratios = execution.map(&pairs, |(a, b)| {
        let d = slice_distance(a, b);
        (d > 0.0).then(|| slice_distance(&c.tp(a, None), &c.tp(b, None)) / d)
    });
    let used: Vec<f64> = ratios.into_iter().flatten().collect();
    Ok(ContractionSample {
        max_ratio: used.iter().copied().fold(0.0, f64::max),
        pairs: used.len(),
        skipped: samples - used.len(),
    })
}

fn sample_below(bounds: &[Interval], rng: &mut impl Rng) -> Vec<TruthValue> {
    bounds
        .iter()
        .map(|b| {
            let hi = rng.gen::<f64>() * b.hi();
            let lo = rng.gen::<f64>() * b.lo().min(hi);
            TruthValue::Interval(Interval::new(lo, hi).expect("sampled below a valid bound"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;

    const FINAL: &str = "p <-ei(1,1,1,1) not q ; [0.7,0.9]\n\
                         s <-ei(2,1,3,2) p ; [0.4,0.5]\n\
                         p <-ei(2,1,2,1) s * not t ; [0.5,0.6]\n\
                         q <-ei(2,1,2,1) t * not p ; [0.7,0.9]\n";

    fn iv_prog(src: &str) -> Program {
        parse_program(src, LatticeKind::Interval).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn final_example_lambdas() {
        let rep = certify(&iv_prog(FINAL)).unwrap();
        let l1: Vec<f64> = rep.per_rule.iter().map(|r| r.lambda1).collect();
        let l2: Vec<f64> = rep.per_rule.iter().map(|r| r.lambda2).collect();
        for (got, want) in l1.iter().zip([0.7, 0.16 * 3.0 * 0.49, 0.5 * 0.4 + 0.5 * 0.16, 0.0]) {
            assert!(close(*got, want), "{l1:?}");
        }
        for got in &l2 {
            assert!(close(*got, 0.9), "{l2:?}");
        }
        assert!(rep.verdict);
        assert!(close(rep.global_lipschitz, 0.9));
    }

    #[test]
    fn head_bounds_with_missing_heads() {
        let p = iv_prog(&FINAL.replace("[0.7,0.9]\ns", "[0.7,0.8]\ns"));
        let b = head_weight_bounds(&p).unwrap();
        let get = |s: &str| b.iter().find(|h| h.symbol == s).unwrap().bound;
        assert_eq!(get("p"), Interval::new(0.7, 0.8).unwrap());
        assert_eq!(get("q"), Interval::new(0.7, 0.9).unwrap());
        assert_eq!(get("t"), Interval::BOTTOM);
        let rep = certify(&p).unwrap();
        assert!(close(rep.per_rule[1].lambda2, 0.8));
        assert!(close(rep.per_rule[0].lambda2, 0.8));
        assert!(rep.verdict);
    }

    #[test]
    fn self_negation_is_not_certified() {
        let p = iv_prog("p <-ei(1,1,1,1) not p ; [1,1]");
        let rep = certify(&p).unwrap();
        assert_eq!(rep.per_rule[0].lambda2, 1.0);
        assert!(!rep.verdict);
        assert_eq!(solve_unique(&p, &FixpointConfig::default()).unwrap_err(), Error::NotCertified(1.0));
    }

    #[test]
    fn endpoint_bounds_can_disagree() {
        // gamma > delta lets the lower-endpoint bound dominate.
        let p = iv_prog("p <-ei(1,1,2,1) p ; [0.9,0.9]");
        let rep = certify(&p).unwrap();
        assert!(close(rep.per_rule[0].lambda1, 1.62));
        assert!(close(rep.per_rule[0].lambda2, 0.9));
        assert!(!rep.verdict);
    }

    #[test]
    fn eligibility() {
        assert!(eligible(&iv_prog(FINAL)).is_ok());
        let unit = parse_program("p <-P q &G not r ; 0.7", LatticeKind::Unit).unwrap();
        assert_eq!(eligible(&unit).unwrap_err()[0].rule, None);
        let bad = iv_prog(
            "p <-ei(1,1,1,1) q ; [0.5,0.5]\np <-ei(1,1,1,1) @mean(q, r) ; [0.5,0.5]\nq <-ei(1,1,1,1) [1,1] ; [0.2,0.3]",
        );
        let v = eligible(&bad).unwrap_err();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Some(1));
        assert!(v[0].reason.contains("@mean"));
        let constant = iv_prog("p <-ei(1,1,1,1) q * [0.5,0.5] ; [0.5,0.5]");
        assert!(eligible(&constant).is_err());
        assert!(matches!(certify(&constant), Err(Error::Ineligible(_))));
    }

    #[test]
    fn empty_program_is_vacuously_certified() {
        let p = Program::empty(LatticeKind::Interval);
        let rep = certify(&p).unwrap();
        assert!(rep.verdict);
        assert_eq!(rep.global_lipschitz, 0.0);
        let sol = solve_unique(&p, &FixpointConfig::default()).unwrap();
        assert_eq!(sol.model, Interpretation::bottom(&p));
    }

    #[test]
    fn solve_final_example() {
        let sol = solve_unique(&iv_prog(FINAL), &FixpointConfig::default()).unwrap();
        assert_eq!(sol.trace.effective_iterations(), 2);
        assert!(sol.check.stable);
        let want = [(0.7, 0.9), (0.0, 0.0), (0.4f64.powi(2) * 0.7f64.powi(3), 0.5 * 0.81), (0.0, 0.0)];
        for (v, w) in sol.model.values().iter().zip(want) {
            let (lo, hi) = v.endpoints();
            assert!(close(lo, w.0) && close(hi, w.1), "{}", sol.model);
        }
    }

    #[test]
    fn rule_without_support() {
        let p = iv_prog("p <-ei(1,1,1,1) q ; [0.5,0.5]");
        let sol = solve_unique(&p, &FixpointConfig::default()).unwrap();
        assert_eq!(sol.model, Interpretation::bottom(&p));
    }

    #[test]
    fn contraction_sampling() {
        let p = iv_prog(FINAL);
        let s = empirical_contraction_check(&p, 1000, 3).unwrap();
        assert!(s.max_ratio <= 0.9 + 1e-9, "{s:?}");
        assert_eq!(s.pairs + s.skipped, 1000);
        let seq = empirical_contraction_check_with(&p, 200, 9, Execution::Sequential).unwrap();
        let par = empirical_contraction_check_with(&p, 200, 9, Execution::Parallel).unwrap();
        assert_eq!(seq, par);
        let constant = iv_prog("p <-ei(1,1,1,1) [1,1] ; [0.5,0.6]");
        assert_eq!(empirical_contraction_check(&constant, 50, 1).unwrap().max_ratio, 0.0);
        // Every draw below I_ϑ = {p: [0,0]} coincides.
        let zero = iv_prog("p <-ei(1,1,1,1) q ; [0,0]");
        let s = empirical_contraction_check(&zero, 10, 1).unwrap();
        assert_eq!((s.pairs, s.skipped), (0, 10));
    }

    #[test]
    fn report_table() {
        let rep = certify(&iv_prog(FINAL)).unwrap();
        let text = rep.to_string();
        assert!(text.contains("r2"));
        assert!(text.ends_with("verdict: unique stable model"));
        assert_eq!(rep.to_json()["verdict"], serde_json::json!(true));
    }
}
