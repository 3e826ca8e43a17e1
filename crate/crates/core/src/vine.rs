//! Regular vines on `d` variables and the partial-correlation bijection.
//!
//! Only the D-vine (first tree a path `0 – 1 – … – d−1`) is constructed.
//! Its edge `(i, j | i+1, …, j−1)` carries the partial correlation of `i`
//! and `j` given every variable strictly between them, and those
//! `d(d−1)/2` numbers range freely over `(−1, 1)` while always mapping to a
//! positive definite correlation matrix.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{cholesky_log_det, CorrelationMatrix};

/// Identity of a vine edge: unordered conditioned pair plus sorted
/// conditioning set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EdgeKey {
    pub a: usize,
    pub b: usize,
    pub conditioning: Vec<usize>,
}

impl EdgeKey {
    pub fn new(e1: usize, e2: usize, conditioning: impl IntoIterator<Item = usize>) -> Self {
        let mut conditioning: Vec<usize> = conditioning.into_iter().collect();
        conditioning.sort_unstable();
        conditioning.dedup();
        Self {
            a: e1.min(e2),
            b: e1.max(e2),
            conditioning,
        }
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{}|", self.a, self.b)?;
        for (n, c) in self.conditioning.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VineEdge {
    pub conditioned: (usize, usize),
    pub conditioning: Vec<usize>,
    /// 1-based tree index.
    pub tree_level: usize,
    /// Indices of the two joined edges in the previous tree; `None` in tree 1.
    pub children: Option<(usize, usize)>,
}

impl VineEdge {
    pub fn key(&self) -> EdgeKey {
        EdgeKey::new(
            self.conditioned.0,
            self.conditioned.1,
            self.conditioning.iter().copied(),
        )
    }

    pub fn constraint_set(&self) -> BTreeSet<usize> {
        let mut s: BTreeSet<usize> = self.conditioning.iter().copied().collect();
        s.insert(self.conditioned.0);
        s.insert(self.conditioned.1);
        s
    }
}

/// A validated regular vine. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VineSpec {
    d: usize,
    trees: Vec<Vec<VineEdge>>,
}

struct DisjointSet(Vec<usize>);

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.0[root] != root {
            root = self.0[root];
        }
        let mut x = x;
        while self.0[x] != root {
            let next = self.0[x];
            self.0[x] = root;
            x = next;
        }
        root
    }

    /// False when `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

impl VineSpec {
    /// Validates `trees` as a regular vine on `d` elements.
    pub fn from_trees(d: usize, trees: Vec<Vec<VineEdge>>) -> Result<Self> {
        let spec = Self { d, trees };
        spec.validate()?;
        Ok(spec)
    }

    /// The D-vine: tree `t` holds the edges `(i, i+t | i+1, …, i+t−1)`.
    pub fn dvine(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::Dimension { min: 2, got: d });
        }
        let trees = (1..d)
            .map(|t| {
                (0..d - t)
                    .map(|i| VineEdge {
                        conditioned: (i, i + t),
                        conditioning: (i + 1..i + t).collect(),
                        tree_level: t,
                        children: (t > 1).then_some((i, i + 1)),
                    })
                    .collect()
            })
            .collect();
        Self::from_trees(d, trees)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn trees(&self) -> &[Vec<VineEdge>] {
        &self.trees
    }

    pub fn edges(&self) -> impl Iterator<Item = &VineEdge> {
        self.trees.iter().flatten()
    }

    pub fn edge_count(&self) -> usize {
        self.trees.iter().map(Vec::len).sum()
    }

    /// True when every edge matches the D-vine layout.
    pub fn is_dvine(&self) -> bool {
        self.edges().all(|e| {
            let (i, j) = (
                e.conditioned.0.min(e.conditioned.1),
                e.conditioned.0.max(e.conditioned.1),
            );
            j - i == e.tree_level && e.conditioning.iter().copied().eq(i + 1..j)
        })
    }

    /// Checks the nested-tree and proximity conditions of a regular vine.
    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        let bad = |msg: String| Err(Error::InvalidVine(msg));
        if d < 2 {
            return Err(Error::Dimension { min: 2, got: d });
        }
        if self.trees.len() != d - 1 {
            return bad(format!(
                "expected {} trees, found {}",
                d - 1,
                self.trees.len()
            ));
        }
        let mut seen = HashSet::new();
        for (t0, tree) in self.trees.iter().enumerate() {
            let level = t0 + 1;
            if tree.len() != d - level {
                return bad(format!(
                    "tree {level} has {} edges, expected {}",
                    tree.len(),
                    d - level
                ));
            }
            // nodes of tree `level` are the edges of the previous tree
            let mut components = DisjointSet::new(d - t0);
            for (n, e) in tree.iter().enumerate() {
                let (e1, e2) = e.conditioned;
                if e.tree_level != level {
                    return bad(format!(
                        "edge {n} of tree {level} claims level {}",
                        e.tree_level
                    ));
                }
                if e1 == e2 || e1 >= d || e2 >= d {
                    return bad(format!(
                        "edge {n} of tree {level} has conditioned pair ({e1},{e2})"
                    ));
                }
                if e.conditioning.len() != level - 1 {
                    return bad(format!(
                        "edge {n} of tree {level} has {} conditioning variables",
                        e.conditioning.len()
                    ));
                }
                if e.conditioning.iter().any(|&c| c == e1 || c == e2 || c >= d) {
                    return bad(format!(
                        "edge {n} of tree {level} conditions on its own pair"
                    ));
                }
                if !seen.insert(e.key()) {
                    return bad(format!("duplicate edge {}", e.key()));
                }
                let (p, q) = match (level, e.children) {
                    (1, None) => (e1, e2),
                    (1, Some(_)) => return bad(format!("tree 1 edge {n} has children")),
                    (_, None) => return bad(format!("edge {n} of tree {level} has no children")),
                    (_, Some((p, q))) => {
                        let prev = &self.trees[t0 - 1];
                        if p == q || p >= prev.len() || q >= prev.len() {
                            return bad(format!("edge {n} of tree {level} joins invalid nodes"));
                        }
                        let a = prev[p].constraint_set();
                        let b = prev[q].constraint_set();
                        let conditioned: BTreeSet<usize> =
                            a.symmetric_difference(&b).copied().collect();
                        if conditioned.len() != 2 {
                            return bad(format!(
                                "edge {n} of tree {level} violates the proximity condition"
                            ));
                        }
                        let conditioning: Vec<usize> = a.intersection(&b).copied().collect();
                        let pair: BTreeSet<usize> = [e1, e2].into_iter().collect();
                        if conditioned != pair || conditioning != e.key().conditioning {
                            return bad(format!(
                                "edge {n} of tree {level} does not match its children"
                            ));
                        }
                        (p, q)
                    }
                };
                if !components.union(p, q) {
                    return bad(format!("tree {level} contains a cycle"));
                }
            }
        }
        Ok(())
    }
}

/// Builds the D-vine on `d` variables.
pub fn build_dvine(d: usize) -> Result<VineSpec> {
    VineSpec::dvine(d)
}

/// One value in `(−1, 1)` per vine edge.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PartialCorrSet {
    values: BTreeMap<EdgeKey, f64>,
}

impl PartialCorrSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every edge of `spec` set to zero.
    pub fn zeros(spec: &VineSpec) -> Self {
        Self {
            values: spec.edges().map(|e| (e.key(), 0.0)).collect(),
        }
    }

    pub fn from_fn(spec: &VineSpec, mut f: impl FnMut(&VineEdge) -> f64) -> Result<Self> {
        let mut p = Self::new();
        for e in spec.edges() {
            p.insert(e.key(), f(e))?;
        }
        Ok(p)
    }

    pub fn insert(&mut self, key: EdgeKey, value: f64) -> Result<()> {
        if !(value.abs() < 1.0) {
            return Err(Error::PartialOutOfRange {
                edge: key.to_string(),
                value,
            });
        }
        self.values.insert(key, value);
        Ok(())
    }

    pub fn get(&self, key: &EdgeKey) -> Option<f64> {
        self.values.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&EdgeKey, f64)> {
        self.values.iter().map(|(k, &v)| (k, v))
    }

    /// Largest absolute difference over edges present in both sets.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .filter_map(|(k, v)| other.get(k).map(|w| (v - w).abs()))
            .fold(0.0, f64::max)
    }
}

/// Memoized partial correlations `ρ_{a,b; lo..lo+len−1}` over a (possibly
/// partially filled) correlation matrix. Conditioning sets are always
/// contiguous index ranges, which is all the D-vine ever needs. Each level
/// is obtained from the one below by removing the largest conditioning
/// index.
pub(crate) struct PartialTable {
    d: usize,
    corr: Vec<f64>,
    memo: HashMap<(usize, usize, usize, usize), f64>,
}

#[inline]
fn one_minus_sq(r: f64) -> f64 {
    (1.0 - r) * (1.0 + r)
}

impl PartialTable {
    fn new(d: usize) -> Self {
        let mut corr = vec![0.0; d * d];
        for i in 0..d {
            corr[i * d + i] = 1.0;
        }
        Self {
            d,
            corr,
            memo: HashMap::new(),
        }
    }

    fn from_matrix(r: &CorrelationMatrix) -> Self {
        let d = r.dim();
        let mut t = Self::new(d);
        for i in 0..d {
            for j in 0..d {
                t.corr[i * d + j] = r.get(i, j);
            }
        }
        t
    }

    fn key(a: usize, b: usize, lo: usize, len: usize) -> (usize, usize, usize, usize) {
        (a.min(b), a.max(b), if len == 0 { 0 } else { lo }, len)
    }

    fn set_corr(&mut self, i: usize, j: usize, v: f64) {
        self.corr[i * self.d + j] = v;
        self.corr[j * self.d + i] = v;
    }

    fn seed(&mut self, a: usize, b: usize, lo: usize, len: usize, v: f64) {
        if len == 0 {
            self.set_corr(a, b, v);
        } else {
            self.memo.insert(Self::key(a, b, lo, len), v);
        }
    }

    fn partial(&mut self, a: usize, b: usize, lo: usize, len: usize) -> f64 {
        if len == 0 {
            return self.corr[a * self.d + b];
        }
        let key = Self::key(a, b, lo, len);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let k = lo + len - 1;
        let rab = self.partial(a, b, lo, len - 1);
        let rak = self.partial(a, k, lo, len - 1);
        let rbk = self.partial(b, k, lo, len - 1);
        let v = (rab - rak * rbk) / (one_minus_sq(rak) * one_minus_sq(rbk)).sqrt();
        self.memo.insert(key, v);
        v
    }

    /// Fills the correlation matrix from D-vine partials, stored densely with
    /// edge `(i, j)` (i < j) at `dense[i * d + j]`.
    pub(crate) fn dvine_to_matrix(d: usize, dense: &[f64]) -> Result<CorrelationMatrix> {
        let mut t = Self::new(d);
        for gap in 1..d {
            for i in 0..d - gap {
                let j = i + gap;
                let mut v = dense[i * d + j];
                t.seed(i, j, i + 1, gap - 1, v);
                // drop conditioning variables j−1, j−2, …, i+1 in turn
                for k in (i + 1..j).rev() {
                    let len = k - i - 1;
                    let rik = t.partial(i, k, i + 1, len);
                    let rjk = t.partial(j, k, i + 1, len);
                    v = v * (one_minus_sq(rik) * one_minus_sq(rjk)).sqrt() + rik * rjk;
                    t.seed(i, j, i + 1, len, v);
                }
            }
        }
        CorrelationMatrix::from_fn(d, |i, j| t.corr[i * d + j])
    }
}

fn require_dvine(spec: &VineSpec) -> Result<()> {
    if spec.is_dvine() {
        Ok(())
    } else {
        Err(Error::InvalidVine(
            "only the D-vine layout is supported for matrix reconstruction".into(),
        ))
    }
}

/// The unique correlation matrix whose D-vine partial correlations are `p`.
pub fn partials_to_matrix(spec: &VineSpec, p: &PartialCorrSet) -> Result<CorrelationMatrix> {
    require_dvine(spec)?;
    if p.len() != spec.edge_count() {
        // a missing edge is reported below; anything else is a foreign edge
        if p.len() > spec.edge_count() {
            return Err(Error::InvalidVine(format!(
                "{} partial correlations supplied for {} edges",
                p.len(),
                spec.edge_count()
            )));
        }
    }
    let d = spec.dim();
    let mut dense = vec![0.0; d * d];
    for e in spec.edges() {
        let key = e.key();
        let v = p
            .get(&key)
            .ok_or_else(|| Error::MissingEdge(key.to_string()))?;
        if !(v.abs() < 1.0) {
            return Err(Error::PartialOutOfRange {
                edge: key.to_string(),
                value: v,
            });
        }
        dense[key.a * d + key.b] = v;
    }
    PartialTable::dvine_to_matrix(d, &dense)
}

/// D-vine partial correlations of a positive definite matrix.
pub fn matrix_to_partials(spec: &VineSpec, r: &CorrelationMatrix) -> Result<PartialCorrSet> {
    require_dvine(spec)?;
    if r.dim() != spec.dim() {
        return Err(Error::InvalidMatrix(format!(
            "matrix is {0}x{0} but the vine has {1} variables",
            r.dim(),
            spec.dim()
        )));
    }
    cholesky_log_det(r)?;
    let mut table = PartialTable::from_matrix(r);
    let mut p = PartialCorrSet::new();
    for e in spec.edges() {
        let key = e.key();
        let v = table.partial(key.a, key.b, key.a + 1, key.b - key.a - 1);
        p.insert(key, v)?;
    }
    Ok(p)
}

/// `ln D = Σ_e ln(1 − ρ_e²)` over the vine edges.
pub fn log_det_from_partials(p: &PartialCorrSet) -> Result<f64> {
    let mut sum = 0.0;
    for (key, v) in p.iter() {
        if !(v.abs() < 1.0) {
            return Err(Error::PartialOutOfRange {
                edge: key.to_string(),
                value: v,
            });
        }
        sum += v.ln_1p() + (-v).ln_1p();
    }
    Ok(sum.min(0.0))
}
