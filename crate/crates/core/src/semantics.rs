//! Interpretations, formula evaluation and model checking.

use std::fmt;
use std::sync::Arc;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::lattice::{self, LatticeKind, TruthValue};
use crate::syntax::{Atom, BodyExpr, Program, Rule};

/// A total assignment of truth values to the symbols of a program.
///
/// Symbols are kept sorted, so the value vector is also the tuple view of
/// the interpretation.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpretation {
    kind: LatticeKind,
    symbols: Arc<[Atom]>,
    values: Vec<TruthValue>,
}

impl Interpretation {
    pub fn constant(p: &Program, value: TruthValue) -> Result<Self> {
        if value.kind() != p.kind() {
            return Err(lattice::LatticeError::DomainMismatch { expected: p.kind(), found: value.kind() }.into());
        }
        Ok(Interpretation { kind: p.kind(), symbols: Arc::clone(p.symbols()), values: vec![value; p.symbols().len()] })
    }

    /// `I_bot`: every symbol at the lattice bottom.
    pub fn bottom(p: &Program) -> Self {
        Interpretation::constant(p, TruthValue::bottom(p.kind())).expect("bottom has the program kind")
    }

    pub fn top(p: &Program) -> Self {
        Interpretation::constant(p, TruthValue::top(p.kind())).expect("top has the program kind")
    }

    /// Values in sorted symbol order.
    pub fn from_values(p: &Program, values: Vec<TruthValue>) -> Result<Self> {
        Interpretation::from_parts(p.kind(), Arc::clone(p.symbols()), values)
    }

    pub(crate) fn from_parts(kind: LatticeKind, symbols: Arc<[Atom]>, values: Vec<TruthValue>) -> Result<Self> {
        if values.len() != symbols.len() {
            return Err(Error::SymbolMismatch);
        }
        if let Some(v) = values.iter().find(|v| v.kind() != kind) {
            return Err(lattice::LatticeError::DomainMismatch { expected: kind, found: v.kind() }.into());
        }
        Ok(Interpretation { kind, symbols, values })
    }

    /// Builds a total interpretation from `(symbol, value)` pairs. Every
    /// program symbol must appear exactly once and nothing else may.
    pub fn from_pairs<'a>(p: &Program, pairs: impl IntoIterator<Item = (&'a str, TruthValue)>) -> Result<Self> {
        let mut values: Vec<Option<TruthValue>> = vec![None; p.symbols().len()];
        for (name, value) in pairs {
            let idx = p.symbol_index(name).ok_or_else(|| Error::UnknownSymbol(name.to_owned()))?;
            if value.kind() != p.kind() {
                return Err(lattice::LatticeError::DomainMismatch { expected: p.kind(), found: value.kind() }.into());
            }
            if values[idx].replace(value).is_some() {
                return Err(Error::InterpretationFormat(format!("symbol `{name}` assigned twice")));
            }
        }
        let values = values
            .into_iter()
            .zip(p.symbols().iter())
            .map(|(v, a)| v.ok_or_else(|| Error::MissingSymbol(a.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Interpretation::from_values(p, values)
    }

    /// Parses a flat JSON object mapping each symbol to a number (unit
    /// lattice) or a two-element array (interval lattice).
    pub fn from_json(p: &Program, text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text).map_err(|e| Error::InterpretationFormat(e.to_string()))?;
        Interpretation::from_json_value(p, &doc)
    }

    pub fn from_json_value(p: &Program, doc: &Value) -> Result<Self> {
        let obj = doc.as_object().ok_or_else(|| Error::InterpretationFormat("expected a JSON object".into()))?;
        let pairs =
            obj.iter().map(|(k, v)| Ok((k.as_str(), value_from_json(p.kind(), k, v)?))).collect::<Result<Vec<_>>>()?;
        Interpretation::from_pairs(p, pairs)
    }

    pub fn to_json(&self) -> Value {
        let map: Map<String, Value> = self.iter().map(|(a, v)| (a.to_string(), value_to_json(v))).collect();
        Value::Object(map)
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn symbols(&self) -> &Arc<[Atom]> {
        &self.symbols
    }

    pub fn values(&self) -> &[TruthValue] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<TruthValue> {
        self.index_of(name).map(|i| self.values[i])
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.binary_search_by(|a| a.as_str().cmp(name)).ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Atom, TruthValue)> + '_ {
        self.symbols.iter().zip(self.values.iter().copied())
    }

    pub(crate) fn same_symbols(&self, other: &Interpretation) -> bool {
        Arc::ptr_eq(&self.symbols, &other.symbols) || self.symbols == other.symbols
    }

    pub(crate) fn check_program(&self, p: &Program) -> Result<()> {
        if self.kind == p.kind() && (Arc::ptr_eq(&self.symbols, p.symbols()) || *self.symbols == **p.symbols()) {
            Ok(())
        } else {
            Err(Error::SymbolMismatch)
        }
    }

    pub(crate) fn with_values(&self, values: Vec<TruthValue>) -> Interpretation {
        debug_assert_eq!(values.len(), self.values.len());
        Interpretation { kind: self.kind, symbols: Arc::clone(&self.symbols), values }
    }
}

impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (a, v)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}: {v}")?;
        }
        f.write_str("}")
    }
}

fn value_from_json(kind: LatticeKind, key: &str, v: &Value) -> Result<TruthValue> {
    let bad = || Error::InterpretationFormat(format!("value for `{key}` must be a {kind} truth value"));
    let tv = match (kind, v) {
        (LatticeKind::Unit, Value::Number(n)) => TruthValue::unit(n.as_f64().ok_or_else(bad)?)?,
        (LatticeKind::Interval, Value::Array(xs)) if xs.len() == 2 => {
            let lo = xs[0].as_f64().ok_or_else(bad)?;
            let hi = xs[1].as_f64().ok_or_else(bad)?;
            TruthValue::interval(lo, hi)?
        }
        _ => return Err(bad()),
    };
    Ok(tv)
}

pub fn value_to_json(v: TruthValue) -> Value {
    match v {
        TruthValue::Unit(x) => Value::from(x),
        TruthValue::Interval(i) => Value::from(vec![i.lo(), i.hi()]),
    }
}

/// Pointwise order `I ⊑ J`.
pub fn interp_leq(i: &Interpretation, j: &Interpretation) -> Result<bool> {
    if !i.same_symbols(j) {
        return Err(Error::SymbolMismatch);
    }
    i.values.iter().zip(&j.values).try_fold(true, |acc, (a, b)| Ok(acc && lattice::leq(a, b)?))
}

/// Value of a body under an interpretation.
pub fn evaluate(body: &BodyExpr, i: &Interpretation) -> Result<TruthValue> {
    let lookup = |a: &Atom| i.get(a.as_str()).ok_or_else(|| Error::UnknownSymbol(a.to_string()));
    match body {
        BodyExpr::Prop(a) => lookup(a),
        BodyExpr::NegProp(a) => Ok(lattice::negate(lookup(a)?)),
        BodyExpr::Const(v) => Ok(*v),
        BodyExpr::Conn(op, l, r) => Ok(op.adjoint().conj(evaluate(l, i)?, evaluate(r, i)?)?),
        BodyExpr::Agg(agg, args) => {
            let vals = args.iter().map(|a| evaluate(a, i)).collect::<Result<Vec<_>>>()?;
            Ok(agg.apply(&vals)?)
        }
    }
}

/// Truth value of the whole rule, `I(head) <- Î(body)`.
pub fn rule_value(rule: &Rule, i: &Interpretation) -> Result<TruthValue> {
    let head = i.get(rule.head().as_str()).ok_or_else(|| Error::UnknownSymbol(rule.head().to_string()))?;
    Ok(rule.implication().imp(head, evaluate(rule.body(), i)?)?)
}

/// `weight ≼ Î(rule)`, checked in the adjoint-equivalent form
/// `weight & Î(body) ≼ I(head)`. That form rounds exactly like `T_P`, so
/// `is_model(I)` and `T_P(I) ⊑ I` agree even on floating-point ties.
pub fn satisfies(rule: &Rule, i: &Interpretation) -> Result<bool> {
    satisfies_within(rule, i, 0.0)
}

fn satisfies_within(rule: &Rule, i: &Interpretation, tol: f64) -> Result<bool> {
    let head = i.get(rule.head().as_str()).ok_or_else(|| Error::UnknownSymbol(rule.head().to_string()))?;
    if head.kind() != rule.kind() {
        return Err(lattice::LatticeError::DomainMismatch { expected: rule.kind(), found: head.kind() }.into());
    }
    let derived = rule.implication().conj(rule.weight(), evaluate(rule.body(), i)?)?;
    let ((a, b), (c, d)) = (derived.endpoints(), head.endpoints());
    Ok(a <= c + tol && b <= d + tol)
}

pub fn is_model(p: &Program, i: &Interpretation) -> Result<bool> {
    is_model_within(p, i, 0.0)
}

/// [`is_model`] with every endpoint comparison relaxed by `tol`. Used for
/// interpretations that are fixpoints only up to iteration tolerance.
pub fn is_model_within(p: &Program, i: &Interpretation, tol: f64) -> Result<bool> {
    i.check_program(p)?;
    p.rules().iter().try_fold(true, |acc, r| Ok(acc && satisfies_within(r, i, tol)?))
}
