//! Random programs and interpretations for property tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::lattice::{Adjoint, Aggregator, EiParams, Interval, LatticeKind, TruthValue};
use crate::semantics::Interpretation;
use crate::syntax::{Atom, BodyExpr, Connective, Program, Rule};
use crate::uniqueness::certify;

const NAMES: [&str; 8] = ["p", "q", "r", "s", "t", "u", "v", "w"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub kind: LatticeKind,
    pub max_symbols: usize,
    pub max_rules: usize,
    /// Maximum nesting depth of connectives and aggregators in a body.
    pub max_depth: usize,
    pub negation: bool,
    pub aggregators: bool,
}

impl GeneratorConfig {
    pub fn new(kind: LatticeKind) -> Self {
        GeneratorConfig { kind, max_symbols: 6, max_rules: 8, max_depth: 2, negation: true, aggregators: true }
    }

    pub fn positive(self) -> Self {
        GeneratorConfig { negation: false, ..self }
    }
}

pub fn random_value(kind: LatticeKind, rng: &mut impl Rng) -> TruthValue {
    match kind {
        LatticeKind::Unit => TruthValue::Unit(rng.gen()),
        LatticeKind::Interval => {
            let (a, b): (f64, f64) = (rng.gen(), rng.gen());
            TruthValue::Interval(Interval::new(a.min(b), a.max(b)).expect("sorted endpoints"))
        }
    }
}

pub fn random_ei_params(rng: &mut impl Rng) -> EiParams {
    let alpha = rng.gen_range(1..=3);
    let gamma = rng.gen_range(1..=3);
    EiParams::new(alpha, rng.gen_range(1..=alpha), gamma, rng.gen_range(1..=gamma)).expect("ordered exponents")
}

fn random_adjoint(kind: LatticeKind, rng: &mut impl Rng) -> Adjoint {
    match kind {
        LatticeKind::Unit => *[Adjoint::Godel, Adjoint::Product, Adjoint::Lukasiewicz].choose(rng).expect("non-empty"),
        LatticeKind::Interval => Adjoint::Ei(random_ei_params(rng)),
    }
}

fn random_connective(kind: LatticeKind, rng: &mut impl Rng) -> Connective {
    match kind {
        LatticeKind::Unit => {
            *[Connective::Godel, Connective::Product, Connective::Lukasiewicz].choose(rng).expect("non-empty")
        }
        LatticeKind::Interval => Connective::IntervalProduct,
    }
}

/// Body over atoms drawn without replacement from `pool`; falls back to
/// constants once the pool is empty.
fn random_body(cfg: &GeneratorConfig, depth: usize, pool: &mut Vec<Atom>, rng: &mut impl Rng) -> BodyExpr {
    let compound = depth < cfg.max_depth && rng.gen_bool(0.5);
    if compound {
        if cfg.aggregators && rng.gen_bool(0.25) {
            let agg = *[Aggregator::Min, Aggregator::Max, Aggregator::Mean].choose(rng).expect("non-empty");
            let arity = rng.gen_range(1..=3);
            return BodyExpr::Agg(agg, (0..arity).map(|_| random_body(cfg, depth + 1, pool, rng)).collect());
        }
        let op = random_connective(cfg.kind, rng);
        let l = random_body(cfg, depth + 1, pool, rng);
        let r = random_body(cfg, depth + 1, pool, rng);
        return BodyExpr::conn(op, l, r);
    }
    if pool.is_empty() || rng.gen_bool(0.15) {
        return BodyExpr::Const(random_value(cfg.kind, rng));
    }
    let atom = pool.swap_remove(rng.gen_range(0..pool.len()));
    if cfg.negation && rng.gen_bool(0.4) {
        BodyExpr::NegProp(atom)
    } else {
        BodyExpr::Prop(atom)
    }
}

fn symbols(n: usize) -> Vec<Atom> {
    NAMES.iter().take(n).map(|s| Atom::new(*s).expect("valid name")).collect()
}

pub fn random_program(cfg: &GeneratorConfig, rng: &mut impl Rng) -> Program {
    let syms = symbols(rng.gen_range(1..=cfg.max_symbols.clamp(1, NAMES.len())));
    let n_rules = rng.gen_range(0..=cfg.max_rules);
    let rules = (0..n_rules)
        .map(|_| {
            let head = syms.choose(rng).expect("non-empty").clone();
            let mut pool = syms.clone();
            let body = random_body(cfg, 0, &mut pool, rng);
            Rule::new(head, random_adjoint(cfg.kind, rng), body, random_value(cfg.kind, rng))
                .expect("generator respects kinds and atom uniqueness")
        })
        .collect();
    Program::new(cfg.kind, rules).expect("generator respects kinds")
}

pub fn random_interpretation(p: &Program, rng: &mut impl Rng) -> Interpretation {
    let values = p.symbols().iter().map(|_| random_value(p.kind(), rng)).collect();
    Interpretation::from_values(p, values).expect("one value per symbol")
}

/// A random interpretation pointwise below `upper`.
pub fn random_below(upper: &Interpretation, rng: &mut impl Rng) -> Interpretation {
    let values = upper
        .values()
        .iter()
        .map(|v| match *v {
            TruthValue::Unit(x) => TruthValue::Unit(rng.gen::<f64>() * x),
            TruthValue::Interval(x) => {
                let hi = rng.gen::<f64>() * x.hi();
                let lo = rng.gen::<f64>() * x.lo().min(hi);
                TruthValue::Interval(Interval::new(lo, hi).expect("lo <= hi"))
            }
        })
        .collect();
    upper.with_values(values)
}

/// Interval program over `n_symbols` symbols satisfying the certificate's
/// syntactic hypotheses: every rule is an ei-implication over a `*`-product
/// of distinct literals (or a fact).
pub fn random_eligible_program(n_symbols: usize, max_rules: usize, rng: &mut impl Rng) -> Program {
    let syms = symbols(n_symbols.clamp(1, NAMES.len()));
    let n_rules = rng.gen_range(1..=max_rules.max(1));
    let rules = (0..n_rules)
        .map(|_| {
            let head = syms.choose(rng).expect("non-empty").clone();
            let k = rng.gen_range(0..=syms.len().min(3));
            let literals: Vec<BodyExpr> = syms
                .choose_multiple(rng, k)
                .map(|a| if rng.gen_bool(0.5) { BodyExpr::NegProp(a.clone()) } else { BodyExpr::Prop(a.clone()) })
                .collect();
            let body = literals
                .into_iter()
                .reduce(|l, r| BodyExpr::conn(Connective::IntervalProduct, l, r))
                .unwrap_or(BodyExpr::Const(TruthValue::top(LatticeKind::Interval)));
            let weight = random_value(LatticeKind::Interval, rng);
            Rule::new(head, Adjoint::Ei(random_ei_params(rng)), body, weight).expect("well-formed")
        })
        .collect();
    Program::new(LatticeKind::Interval, rules).expect("interval rules")
}

/// Rejection-samples [`random_eligible_program`] until the certificate holds,
/// some rule has a non-fact body and at least two symbols head a rule.
pub fn random_certified_program(n_symbols: usize, max_rules: usize, rng: &mut impl Rng) -> Program {
    loop {
        let p = random_eligible_program(n_symbols, max_rules, rng);
        let nontrivial = p.rules().iter().any(|r| !matches!(r.body(), BodyExpr::Const(_)));
        let mut heads: Vec<&str> = p.rules().iter().map(|r| r.head().as_str()).collect();
        heads.sort_unstable();
        heads.dedup();
        if nontrivial && heads.len() >= 2.min(n_symbols) && certify(&p).map(|c| c.verdict).unwrap_or(false) {
            return p;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::semantics::interp_leq;
    use crate::uniqueness::eligible;

    #[test]
    fn generated_programs_respect_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for kind in [LatticeKind::Unit, LatticeKind::Interval] {
            let cfg = GeneratorConfig::new(kind);
            for _ in 0..200 {
                let p = random_program(&cfg, &mut rng);
                assert!(p.symbols().len() <= 6 && p.rules().len() <= 8);
                assert_eq!(p.kind(), kind);
                let pos = random_program(&cfg.positive(), &mut rng);
                assert!(pos.is_positive());
            }
        }
    }

    #[test]
    fn below_is_below() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_program(&GeneratorConfig::new(LatticeKind::Interval), &mut rng);
        for _ in 0..100 {
            let j = random_interpretation(&p, &mut rng);
            assert!(interp_leq(&random_below(&j, &mut rng), &j).unwrap());
        }
    }

    #[test]
    fn certified_programs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let p = random_certified_program(3, 4, &mut rng);
            assert!(eligible(&p).is_ok());
            assert!(certify(&p).unwrap().verdict);
            assert!(p.symbols().len() <= 3);
        }
    }
}
