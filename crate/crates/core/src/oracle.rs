//! Exhaustive grid searches used to cross-check the analytic engine on small
//! instances.

use serde::Serialize;

use crate::engine::{canonical_cmp, slice_distance, Compiled, FixpointConfig};
use crate::error::{Error, Result};
use crate::lattice::{ei_product, EiParams, Interval, LatticeKind, TruthValue};
use crate::par::Execution;
use crate::semantics::{interp_leq, is_model, Interpretation};
use crate::syntax::Program;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// `N`: grid step `1/N`.
    pub resolution: u32,
    /// Refuse enumerations larger than this.
    pub max_points: u64,
    pub execution: Execution,
}

impl GridSpec {
    pub const DEFAULT_MAX_POINTS: u64 = 10_000_000;

    pub fn new(resolution: u32) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::InvalidConfig("grid resolution must be at least 1".into()));
        }
        Ok(GridSpec { resolution, max_points: Self::DEFAULT_MAX_POINTS, execution: Execution::default() })
    }

    pub fn step(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    fn point(&self, k: u32) -> f64 {
        k as f64 / self.resolution as f64
    }

    /// Grid truth values of `kind`; intervals are the pairs `(i/N, j/N)` with `i ≤ j`.
    pub fn values(&self, kind: LatticeKind) -> Vec<TruthValue> {
        let n = self.resolution;
        match kind {
            LatticeKind::Unit => (0..=n).map(|k| TruthValue::Unit(self.point(k))).collect(),
            LatticeKind::Interval => (0..=n)
                .flat_map(|i| (i..=n).map(move |j| (i, j)))
                .map(|(i, j)| TruthValue::Interval(Interval::new(self.point(i), self.point(j)).expect("i <= j")))
                .collect(),
        }
    }

    fn check_budget(&self, sizes: &[usize]) -> Result<u64> {
        let needed = sizes.iter().try_fold(1u128, |acc, &s| acc.checked_mul(s as u128)).unwrap_or(u128::MAX);
        if needed > self.max_points as u128 {
            return Err(Error::BudgetExceeded { needed, limit: self.max_points });
        }
        Ok(needed as u64)
    }
}

/// Decodes a mixed-radix index into one value per axis.
fn decode(mut idx: u64, axes: &[Vec<TruthValue>], out: &mut [TruthValue]) {
    for (slot, axis) in out.iter_mut().zip(axes).rev() {
        let len = axis.len() as u64;
        *slot = axis[(idx % len) as usize];
        idx /= len;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    /// Member with the smallest residual.
    #[serde(serialize_with = "ser_interp")]
    pub representative: Interpretation,
    pub residual: f64,
    #[serde(serialize_with = "ser_interps")]
    pub members: Vec<Interpretation>,
}

fn ser_interp<S: serde::Serializer>(i: &Interpretation, s: S) -> std::result::Result<S::Ok, S::Error> {
    i.to_json().serialize(s)
}

fn ser_interps<S: serde::Serializer>(is: &[Interpretation], s: S) -> std::result::Result<S::Ok, S::Error> {
    is.iter().map(|i| i.to_json()).collect::<Vec<_>>().serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub clusters: Vec<Cluster>,
    pub points_scanned: u64,
    pub candidates: usize,
}

impl OracleReport {
    /// Whether some candidate lies within `tol` of `i`.
    pub fn covers(&self, i: &Interpretation, tol: f64) -> bool {
        self.clusters.iter().flat_map(|c| &c.members).any(|m| slice_distance(m.values(), i.values()) <= tol)
    }

    /// Index of the cluster containing a candidate within `tol` of `i`.
    pub fn cluster_of(&self, i: &Interpretation, tol: f64) -> Option<usize> {
        self.clusters.iter().position(|c| c.members.iter().any(|m| slice_distance(m.values(), i.values()) <= tol))
    }
}

/// Grid interpretations within one step of the least model of their own
/// reduct, clustered by single linkage at two steps.
///
/// Symbols heading no rule are pinned at bottom: the least model of any
/// reduct assigns them bottom, so no stable model can differ there.
pub fn brute_force_stable(p: &Program, g: &GridSpec, cfg: &FixpointConfig) -> Result<OracleReport> {
    cfg.validate()?;
    let n = p.symbols().len();
    let mut live = vec![false; n];
    for r in p.rules() {
        live[p.symbol_index(r.head().as_str()).expect("heads are symbols")] = true;
    }
    let grid = g.values(p.kind());
    let bottom = TruthValue::bottom(p.kind());
    let axes: Vec<Vec<TruthValue>> = live.iter().map(|&l| if l { grid.clone() } else { vec![bottom] }).collect();
    let total = g.check_budget(&axes.iter().map(Vec::len).collect::<Vec<_>>())?;

    let c = Compiled::new(p);
    let tol = g.step() + EPS;
    let hits = g.execution.filter_map_range(total, |idx| {
        let mut vals = vec![bottom; n];
        decode(idx, &axes, &mut vals);
        let run = c.stable_operator(&vals, cfg);
        let residual = slice_distance(&run.last, &vals);
        (run.converged && residual <= tol).then_some((vals, residual))
    });

    let template = Interpretation::bottom(p);
    let candidates = hits.len();
    let mut clusters = cluster(hits, 2.0 * g.step() + EPS)
        .into_iter()
        .map(|group| {
            let (rep_vals, residual) = group
                .iter()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(v, r)| (v.clone(), *r))
                .expect("clusters are non-empty");
            let mut members: Vec<Interpretation> = group.into_iter().map(|(v, _)| template.with_values(v)).collect();
            members.sort_by(canonical_cmp);
            Cluster { representative: template.with_values(rep_vals), residual, members }
        })
        .collect::<Vec<_>>();
    clusters.sort_by(|a, b| canonical_cmp(&a.representative, &b.representative));
    Ok(OracleReport { clusters, points_scanned: total, candidates })
}

/// Single-linkage grouping under the sup-norm.
fn cluster(points: Vec<(Vec<TruthValue>, f64)>, link: f64) -> Vec<Vec<(Vec<TruthValue>, f64)>> {
    let mut parent: Vec<usize> = (0..points.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if slice_distance(&points[i].0, &points[j].0) <= link {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<(Vec<TruthValue>, f64)>> = Vec::new();
    let mut slot = vec![usize::MAX; points.len()];
    for (i, pt) in points.into_iter().enumerate() {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(pt);
    }
    groups
}

/// The greatest grid interval `x` with `ei_product(params, x, y) ≼ z`.
pub fn brute_force_residuum(params: EiParams, z: Interval, y: Interval, g: &GridSpec) -> Result<Interval> {
    let n = g.resolution;
    let pairs = (n as usize + 1) * (n as usize + 2) / 2;
    g.check_budget(&[pairs])?;
    let rows: Vec<u32> = (0..=n).collect();
    let best = g.execution.map(&rows, |&i| {
        let mut best: Option<(u32, u32)> = None;
        for j in i..=n {
            let x = Interval::new(g.point(i), g.point(j)).expect("i <= j");
            if ei_product(params, x, y).leq(&z) {
                best = Some(best.map_or((i, j), |(bi, bj)| (bi.max(i), bj.max(j))));
            }
        }
        best
    });
    let (i, j) =
        best.into_iter().flatten().reduce(|a, b| (a.0.max(b.0), a.1.max(b.1))).expect("[0,0] is always feasible");
    let x = Interval::new(g.point(i), g.point(j))?;
    debug_assert!(ei_product(params, x, y).leq(&z));
    Ok(x)
}

/// Whether no grid interpretation strictly below `m` is a model of `p`.
/// Returns false when `m` is not a model at all.
pub fn minimality_check(p: &Program, m: &Interpretation, g: &GridSpec) -> Result<bool> {
    if !is_model(p, m)? {
        return Ok(false);
    }
    let grid = g.values(p.kind());
    let axes: Vec<Vec<TruthValue>> = m
        .values()
        .iter()
        .map(|v| grid.iter().filter(|x| crate::lattice::leq(x, v).expect("same kind")).copied().collect())
        .collect();
    let total = g.check_budget(&axes.iter().map(Vec::len).collect::<Vec<_>>())?;
    let bottom = TruthValue::bottom(p.kind());
    let smaller = g.execution.filter_map_range(total, |idx| {
        let mut vals = vec![bottom; axes.len()];
        decode(idx, &axes, &mut vals);
        if slice_distance(&vals, m.values()) <= EPS {
            return None;
        }
        let j = m.with_values(vals);
        debug_assert!(interp_leq(&j, m).unwrap());
        is_model(p, &j).expect("same program").then_some(idx)
    });
    Ok(smaller.is_empty())
}
