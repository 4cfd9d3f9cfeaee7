//! Truth-value domains and their operators.
//!
//! Two lattices are built in: the unit interval `[0,1]` and `C([0,1])`, the
//! closed subintervals of `[0,1]` ordered componentwise. Each carries a family
//! of adjoint pairs (conjunctor, residuated implication), the standard
//! negation and a few monotone aggregators.
//!
//! Implications take their arguments as `(consequent, antecedent)`, the same
//! order in which a rule `head <- body` is written.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("domain mismatch: expected a {expected} value, found {found}")]
    DomainMismatch { expected: LatticeKind, found: LatticeKind },
    #[error("value {0} is not in [0,1]")]
    OutOfRange(f64),
    #[error("[{lo},{hi}] is not a subinterval of [0,1]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("invalid ei parameters ({alpha},{beta},{gamma},{delta}): need 1 <= beta <= alpha and 1 <= delta <= gamma")]
    InvalidEiParams { alpha: u32, beta: u32, gamma: u32, delta: u32 },
    #[error("aggregator `{0}` needs at least one argument")]
    Arity(String),
    #[error("unknown aggregator `{0}`")]
    UnknownAggregator(String),
    #[error("operator {op} is not available on the {kind} lattice")]
    UnsupportedOperator { op: String, kind: LatticeKind },
}

pub type Result<T> = std::result::Result<T, LatticeError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    /// `[0,1]` with the usual order.
    Unit,
    /// `C([0,1])`, subintervals ordered componentwise.
    Interval,
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeKind::Unit => f.write_str("unit"),
            LatticeKind::Interval => f.write_str("interval"),
        }
    }
}

/// A closed subinterval `[lo, hi]` of `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Serialize for Interval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.lo, self.hi].serialize(s)
    }
}

impl Interval {
    pub const BOTTOM: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const TOP: Interval = Interval { lo: 1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo <= hi {
            Ok(Interval { lo, hi })
        } else {
            Err(LatticeError::InvalidInterval { lo, hi })
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn leq(&self, other: &Interval) -> bool {
        self.lo <= other.lo && self.hi <= other.hi
    }
}

/// An element of one of the built-in lattices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruthValue {
    Unit(f64),
    Interval(Interval),
}

impl TruthValue {
    pub fn unit(v: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&v) {
            Ok(TruthValue::Unit(v))
        } else {
            Err(LatticeError::OutOfRange(v))
        }
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Interval::new(lo, hi).map(TruthValue::Interval)
    }

    pub fn kind(&self) -> LatticeKind {
        match self {
            TruthValue::Unit(_) => LatticeKind::Unit,
            TruthValue::Interval(_) => LatticeKind::Interval,
        }
    }

    pub fn bottom(kind: LatticeKind) -> Self {
        match kind {
            LatticeKind::Unit => TruthValue::Unit(0.0),
            LatticeKind::Interval => TruthValue::Interval(Interval::BOTTOM),
        }
    }

    pub fn top(kind: LatticeKind) -> Self {
        match kind {
            LatticeKind::Unit => TruthValue::Unit(1.0),
            LatticeKind::Interval => TruthValue::Interval(Interval::TOP),
        }
    }

    pub fn is_top(&self) -> bool {
        *self == TruthValue::top(self.kind())
    }

    /// Lower and upper endpoints; a unit value is its own degenerate pair.
    pub fn endpoints(&self) -> (f64, f64) {
        match *self {
            TruthValue::Unit(v) => (v, v),
            TruthValue::Interval(i) => (i.lo, i.hi),
        }
    }

    pub fn as_unit(&self) -> Result<f64> {
        match *self {
            TruthValue::Unit(v) => Ok(v),
            TruthValue::Interval(_) => Err(mismatch(LatticeKind::Unit, self)),
        }
    }

    pub fn as_interval(&self) -> Result<Interval> {
        match *self {
            TruthValue::Interval(i) => Ok(i),
            TruthValue::Unit(_) => Err(mismatch(LatticeKind::Interval, self)),
        }
    }

    /// Largest absolute endpoint difference.
    pub fn distance(&self, other: &TruthValue) -> Result<f64> {
        same_kind(self, other)?;
        let (a, b) = self.endpoints();
        let (c, d) = other.endpoints();
        Ok((a - c).abs().max((b - d).abs()))
    }

    /// Componentwise combination of two values of the same kind. The caller
    /// is responsible for keeping the result inside the lattice.
    pub(crate) fn zip_with(&self, other: &TruthValue, f: impl Fn(f64, f64) -> f64) -> Result<TruthValue> {
        match (*self, *other) {
            (TruthValue::Unit(a), TruthValue::Unit(b)) => Ok(TruthValue::Unit(f(a, b))),
            (TruthValue::Interval(a), TruthValue::Interval(b)) => {
                Ok(TruthValue::Interval(Interval { lo: f(a.lo, b.lo), hi: f(a.hi, b.hi) }))
            }
            _ => Err(mismatch(self.kind(), other)),
        }
    }
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TruthValue::Unit(v) => write!(f, "{v}"),
            TruthValue::Interval(i) => write!(f, "[{},{}]", i.lo, i.hi),
        }
    }
}

fn mismatch(expected: LatticeKind, found: &TruthValue) -> LatticeError {
    LatticeError::DomainMismatch { expected, found: found.kind() }
}

fn same_kind(a: &TruthValue, b: &TruthValue) -> Result<()> {
    if a.kind() == b.kind() {
        Ok(())
    } else {
        Err(mismatch(a.kind(), b))
    }
}

fn unit_pair(x: TruthValue, y: TruthValue) -> Result<(f64, f64)> {
    Ok((x.as_unit()?, y.as_unit()?))
}

pub fn leq(a: &TruthValue, b: &TruthValue) -> Result<bool> {
    match (a, b) {
        (TruthValue::Unit(x), TruthValue::Unit(y)) => Ok(x <= y),
        (TruthValue::Interval(x), TruthValue::Interval(y)) => Ok(x.leq(y)),
        _ => Err(mismatch(a.kind(), b)),
    }
}

// Gödel, product and Łukasiewicz pairs on [0,1].

pub fn godel_and(x: TruthValue, y: TruthValue) -> Result<TruthValue> {
    let (x, y) = unit_pair(x, y)?;
    Ok(TruthValue::Unit(x.min(y)))
}

pub fn product_and(x: TruthValue, y: TruthValue) -> Result<TruthValue> {
    let (x, y) = unit_pair(x, y)?;
    Ok(TruthValue::Unit(x * y))
}

pub fn lukasiewicz_and(x: TruthValue, y: TruthValue) -> Result<TruthValue> {
    let (x, y) = unit_pair(x, y)?;
    Ok(TruthValue::Unit((x + y - 1.0).max(0.0)))
}

pub fn godel_imp(z: TruthValue, y: TruthValue) -> Result<TruthValue> {
    let (z, y) = unit_pair(z, y)?;
    Ok(TruthValue::Unit(if y <= z { 1.0 } else { z }))
}

pub fn product_imp(z: TruthValue, y: TruthValue) -> Result<TruthValue> {
    let (z, y) = unit_pair(z, y)?;
    Ok(TruthValue::Unit(if y == 0.0 { 1.0 } else { (z / y).min(1.0) }))
}

pub fn lukasiewicz_imp(z: TruthValue, y: TruthValue) -> Result<TruthValue> {
    let (z, y) = unit_pair(z, y)?;
    Ok(TruthValue::Unit((1.0 - y + z).min(1.0)))
}

/// Exponents `(alpha, beta, gamma, delta)` of an exponential interval product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EiParams {
    alpha: u32,
    beta: u32,
    gamma: u32,
    delta: u32,
}

impl EiParams {
    /// The componentwise product, written `*` in rule bodies.
    pub const PLAIN: EiParams = EiParams { alpha: 1, beta: 1, gamma: 1, delta: 1 };

    pub fn new(alpha: u32, beta: u32, gamma: u32, delta: u32) -> Result<Self> {
        if beta >= 1 && delta >= 1 && beta <= alpha && delta <= gamma {
            Ok(EiParams { alpha, beta, gamma, delta })
        } else {
            Err(LatticeError::InvalidEiParams { alpha, beta, gamma, delta })
        }
    }

    pub fn alpha(&self) -> u32 {
        self.alpha
    }

    pub fn beta(&self) -> u32 {
        self.beta
    }

    pub fn gamma(&self) -> u32 {
        self.gamma
    }

    pub fn delta(&self) -> u32 {
        self.delta
    }
}

impl fmt::Display for EiParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ei({},{},{},{})", self.alpha, self.beta, self.gamma, self.delta)
    }
}

// `f64::powi` already yields 0^0 = 1, which the uniqueness bounds rely on.
fn pow(base: f64, exp: u32) -> f64 {
    base.powi(exp as i32)
}

/// `[a,b] & [c,d] = [a^alpha * c^gamma, b^beta * d^delta]`.
pub fn ei_product(p: EiParams, x: Interval, y: Interval) -> Interval {
    Interval { lo: pow(x.lo, p.alpha) * pow(y.lo, p.gamma), hi: pow(x.hi, p.beta) * pow(y.hi, p.delta) }
}

/// Residuum of [`ei_product`]: the greatest `x` with `ei_product(p, x, y) <= z`.
pub fn ei_residuum(p: EiParams, z: Interval, y: Interval) -> Interval {
    let lo_bound = if y.lo == 0.0 { 1.0 } else { (z.lo / pow(y.lo, p.gamma)).powf(1.0 / p.alpha as f64).min(1.0) };
    let hi = if y.hi == 0.0 { 1.0 } else { (z.hi / pow(y.hi, p.delta)).powf(1.0 / p.beta as f64).min(1.0) };
    Interval { lo: lo_bound.min(hi), hi }
}

pub fn negate(x: TruthValue) -> TruthValue {
    match x {
        TruthValue::Unit(v) => TruthValue::Unit(1.0 - v),
        TruthValue::Interval(i) => TruthValue::Interval(Interval { lo: 1.0 - i.hi, hi: 1.0 - i.lo }),
    }
}

/// Least upper bound; the empty set maps to bottom.
pub fn sup<'a, I>(kind: LatticeKind, values: I) -> Result<TruthValue>
where
    I: IntoIterator<Item = &'a TruthValue>,
{
    values.into_iter().try_fold(TruthValue::bottom(kind), |acc, v| acc.zip_with(v, f64::max))
}

/// Label of an adjoint pair: selects both the conjunctor used by the
/// immediate consequence operator and the implication of a rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Adjoint {
    Godel,
    Product,
    Lukasiewicz,
    Ei(EiParams),
}

impl Adjoint {
    pub fn kind(&self) -> LatticeKind {
        match self {
            Adjoint::Godel | Adjoint::Product | Adjoint::Lukasiewicz => LatticeKind::Unit,
            Adjoint::Ei(_) => LatticeKind::Interval,
        }
    }

    pub fn conj(&self, x: TruthValue, y: TruthValue) -> Result<TruthValue> {
        match self {
            Adjoint::Godel => godel_and(x, y),
            Adjoint::Product => product_and(x, y),
            Adjoint::Lukasiewicz => lukasiewicz_and(x, y),
            Adjoint::Ei(p) => Ok(TruthValue::Interval(ei_product(*p, x.as_interval()?, y.as_interval()?))),
        }
    }

    /// Residuated implication `z <- y`.
    pub fn imp(&self, z: TruthValue, y: TruthValue) -> Result<TruthValue> {
        match self {
            Adjoint::Godel => godel_imp(z, y),
            Adjoint::Product => product_imp(z, y),
            Adjoint::Lukasiewicz => lukasiewicz_imp(z, y),
            Adjoint::Ei(p) => Ok(TruthValue::Interval(ei_residuum(*p, z.as_interval()?, y.as_interval()?))),
        }
    }
}

impl fmt::Display for Adjoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Adjoint::Godel => f.write_str("G"),
            Adjoint::Product => f.write_str("P"),
            Adjoint::Lukasiewicz => f.write_str("L"),
            Adjoint::Ei(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Aggregator {
    Min,
    Max,
    Mean,
}

impl Aggregator {
    pub fn name(&self) -> &'static str {
        match self {
            Aggregator::Min => "min",
            Aggregator::Max => "max",
            Aggregator::Mean => "mean",
        }
    }

    pub fn apply(&self, args: &[TruthValue]) -> Result<TruthValue> {
        let (first, rest) = args.split_first().ok_or_else(|| LatticeError::Arity(self.name().to_owned()))?;
        match self {
            Aggregator::Min => rest.iter().try_fold(*first, |acc, v| acc.zip_with(v, f64::min)),
            Aggregator::Max => rest.iter().try_fold(*first, |acc, v| acc.zip_with(v, f64::max)),
            Aggregator::Mean => {
                let sum = rest.iter().try_fold(*first, |acc, v| acc.zip_with(v, |a, b| a + b))?;
                let n = args.len() as f64;
                // Clamp guards against the sum rounding a hair past 1.
                Ok(match sum {
                    TruthValue::Unit(s) => TruthValue::Unit((s / n).min(1.0)),
                    TruthValue::Interval(i) => {
                        let hi = (i.hi / n).min(1.0);
                        TruthValue::Interval(Interval { lo: (i.lo / n).min(hi), hi })
                    }
                })
            }
        }
    }
}

pub fn agg_min(args: &[TruthValue]) -> Result<TruthValue> {
    Aggregator::Min.apply(args)
}

pub fn agg_max(args: &[TruthValue]) -> Result<TruthValue> {
    Aggregator::Max.apply(args)
}

pub fn agg_mean(args: &[TruthValue]) -> Result<TruthValue> {
    Aggregator::Mean.apply(args)
}

/// One of the two built-in multi-adjoint normal lattices: order, bounds,
/// adjoint pairs, negation and named aggregators.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSignature {
    kind: LatticeKind,
    aggregators: BTreeMap<String, Aggregator>,
}

impl LatticeSignature {
    pub fn builtin(kind: LatticeKind) -> &'static LatticeSignature {
        static UNIT: OnceLock<LatticeSignature> = OnceLock::new();
        static INTERVAL: OnceLock<LatticeSignature> = OnceLock::new();
        let cell = match kind {
            LatticeKind::Unit => &UNIT,
            LatticeKind::Interval => &INTERVAL,
        };
        cell.get_or_init(|| LatticeSignature {
            kind,
            aggregators: [Aggregator::Min, Aggregator::Max, Aggregator::Mean]
                .into_iter()
                .map(|a| (a.name().to_owned(), a))
                .collect(),
        })
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn bottom(&self) -> TruthValue {
        TruthValue::bottom(self.kind)
    }

    pub fn top(&self) -> TruthValue {
        TruthValue::top(self.kind)
    }

    pub fn supports(&self, adjoint: &Adjoint) -> bool {
        adjoint.kind() == self.kind
    }

    fn check(&self, adjoint: &Adjoint) -> Result<()> {
        if self.supports(adjoint) {
            Ok(())
        } else {
            Err(LatticeError::UnsupportedOperator { op: adjoint.to_string(), kind: self.kind })
        }
    }

    pub fn conj(&self, adjoint: &Adjoint, x: TruthValue, y: TruthValue) -> Result<TruthValue> {
        self.check(adjoint)?;
        adjoint.conj(x, y)
    }

    pub fn imp(&self, adjoint: &Adjoint, z: TruthValue, y: TruthValue) -> Result<TruthValue> {
        self.check(adjoint)?;
        adjoint.imp(z, y)
    }

    pub fn negate(&self, x: TruthValue) -> Result<TruthValue> {
        if x.kind() != self.kind {
            return Err(mismatch(self.kind, &x));
        }
        Ok(negate(x))
    }

    pub fn aggregator(&self, name: &str) -> Result<Aggregator> {
        self.aggregators.get(name).copied().ok_or_else(|| LatticeError::UnknownAggregator(name.to_owned()))
    }

    pub fn aggregator_names(&self) -> impl Iterator<Item = &str> {
        self.aggregators.keys().map(String::as_str)
    }

    pub fn sup<'a, I>(&self, values: I) -> Result<TruthValue>
    where
        I: IntoIterator<Item = &'a TruthValue>,
    {
        sup(self.kind, values)
    }
}
