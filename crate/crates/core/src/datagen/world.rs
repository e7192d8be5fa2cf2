use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{norm, DenseMatrix, RngStream};

/// When feature `a` fires, feature `b` also fires with probability `co_fire_prob`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositePair {
    pub a: usize,
    pub b: usize,
    pub co_fire_prob: f64,
}

/// `child` fires only when `parent` fires, and then with probability `conditional_prob`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HierarchyEdge {
    pub parent: usize,
    pub child: usize,
    pub conditional_prob: f64,
}

/// Ground-truth dictionary with firing statistics.
///
/// Sampling order per example: every non-child feature fires independently
/// with its `fire_prob`; composite pairs then co-fire; hierarchy children are
/// resolved last, parents before children.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticWorld {
    pub dim_n: usize,
    /// `n x F`, unit-norm columns.
    pub atomic_features: DenseMatrix,
    pub fire_prob: Vec<f64>,
    pub composite_pairs: Vec<CompositePair>,
    pub hierarchy: Vec<HierarchyEdge>,
    pub magnitude_range: (f64, f64),
    /// Hierarchy edges in parent-before-child order, filled by `validate`.
    #[serde(skip)]
    topo: Vec<usize>,
}

/// Shape of a randomly generated world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldSpec {
    pub dim_n: usize,
    pub features: usize,
    pub fire_prob: f64,
    pub composite_pairs: usize,
    pub co_fire_prob: f64,
    pub hierarchy_pairs: usize,
    pub conditional_prob: f64,
    pub magnitude_range: (f64, f64),
}

impl Default for WorldSpec {
    fn default() -> Self {
        Self {
            dim_n: 32,
            features: 64,
            fire_prob: 0.06,
            composite_pairs: 8,
            co_fire_prob: 0.8,
            hierarchy_pairs: 8,
            conditional_prob: 0.9,
            magnitude_range: (0.5, 1.5),
        }
    }
}

/// Which features fired in each row, with their coefficients, ascending by feature.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseCodes {
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseCodes {
    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|r| r.is_empty())
    }

    pub fn coefficient(&self, row: usize, feature: usize) -> f64 {
        self.rows[row]
            .binary_search_by_key(&feature, |&(f, _)| f)
            .map_or(0.0, |i| self.rows[row][i].1)
    }

    pub fn mean_l0(&self) -> f64 {
        let total: usize = self.rows.iter().map(Vec::len).sum();
        total as f64 / self.rows.len().max(1) as f64
    }
}

impl SyntheticWorld {
    pub fn new(
        atomic_features: DenseMatrix,
        fire_prob: Vec<f64>,
        composite_pairs: Vec<CompositePair>,
        hierarchy: Vec<HierarchyEdge>,
        magnitude_range: (f64, f64),
    ) -> Result<Self> {
        let mut w = Self {
            dim_n: atomic_features.rows(),
            atomic_features,
            fire_prob,
            composite_pairs,
            hierarchy,
            magnitude_range,
            topo: Vec::new(),
        };
        w.validate()?;
        Ok(w)
    }

    /// Random Gaussian feature directions, normalized. Pairs are laid out on
    /// disjoint features: composites first, then parent/child blocks.
    pub fn generate(spec: &WorldSpec, rng: &mut RngStream) -> Result<Self> {
        let (n, f) = (spec.dim_n, spec.features);
        let used = 2 * spec.composite_pairs + 2 * spec.hierarchy_pairs;
        if used > f {
            return Err(Error::config(
                "features",
                format!("{f} features cannot host {used} paired features"),
            ));
        }
        let mut cols = Vec::with_capacity(f);
        for _ in 0..f {
            let mut c: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
            let len = norm(&c);
            c.iter_mut().for_each(|v| *v /= len);
            cols.push(c);
        }
        let composite_pairs = (0..spec.composite_pairs)
            .map(|i| CompositePair {
                a: 2 * i,
                b: 2 * i + 1,
                co_fire_prob: spec.co_fire_prob,
            })
            .collect();
        let base = 2 * spec.composite_pairs;
        let h = spec.hierarchy_pairs;
        let hierarchy = (0..h)
            .map(|i| HierarchyEdge {
                parent: base + i,
                child: base + h + i,
                conditional_prob: spec.conditional_prob,
            })
            .collect();
        Self::new(
            DenseMatrix::from_columns(&cols)?,
            vec![spec.fire_prob; f],
            composite_pairs,
            hierarchy,
            spec.magnitude_range,
        )
    }

    pub fn feature_count(&self) -> usize {
        self.atomic_features.cols()
    }

    pub fn feature(&self, f: usize) -> Vec<f64> {
        self.atomic_features.column(f)
    }

    /// Checks every invariant and computes the hierarchy resolution order.
    pub fn validate(&mut self) -> Result<()> {
        let f = self.feature_count();
        if self.dim_n != self.atomic_features.rows() {
            return Err(Error::config("dim_n", "does not match feature matrix rows"));
        }
        if self.fire_prob.len() != f {
            return Err(Error::config("fire_prob", format!("expected {f} entries")));
        }
        for (j, n) in self.atomic_features.column_norms().iter().enumerate() {
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::config("atomic_features", format!("column {j} has norm {n}")));
            }
        }
        let prob = |key: &'static str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::config(key, format!("probability {p} outside [0, 1]")))
            }
        };
        for &p in &self.fire_prob {
            prob("fire_prob", p)?;
        }
        for c in &self.composite_pairs {
            prob("composite_pairs", c.co_fire_prob)?;
            if c.a >= f || c.b >= f || c.a == c.b {
                return Err(Error::config("composite_pairs", format!("bad pair ({}, {})", c.a, c.b)));
            }
        }
        for e in &self.hierarchy {
            prob("hierarchy", e.conditional_prob)?;
            if e.parent >= f || e.child >= f || e.parent == e.child {
                return Err(Error::config("hierarchy", format!("bad edge {} -> {}", e.parent, e.child)));
            }
        }
        let (lo, hi) = self.magnitude_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::config("magnitude_range", format!("({lo}, {hi}) is not a valid range")));
        }
        self.topo = hierarchy_order(f, &self.hierarchy)?;
        Ok(())
    }

    fn is_child(&self) -> Vec<bool> {
        let mut c = vec![false; self.feature_count()];
        for e in &self.hierarchy {
            c[e.child] = true;
        }
        c
    }

    pub fn sample_batch(&self, batch: usize, rng: &mut RngStream) -> (DenseMatrix, SparseCodes) {
        let f = self.feature_count();
        let n = self.dim_n;
        let child = self.is_child();
        let (lo, hi) = self.magnitude_range;
        let mut x = DenseMatrix::zeros(batch, n);
        let mut codes = SparseCodes {
            rows: Vec::with_capacity(batch),
        };
        let mut fired = vec![false; f];
        for r in 0..batch {
            for j in 0..f {
                fired[j] = !child[j] && rng.bernoulli(self.fire_prob[j]);
            }
            for c in &self.composite_pairs {
                if fired[c.a] && rng.bernoulli(c.co_fire_prob) {
                    fired[c.b] = true;
                }
            }
            for &i in &self.topo {
                let e = self.hierarchy[i];
                if fired[e.parent] && rng.bernoulli(e.conditional_prob) {
                    fired[e.child] = true;
                }
            }
            let mut row_codes = Vec::new();
            let xr = x.row_mut(r);
            for j in 0..f {
                if !fired[j] {
                    continue;
                }
                let c = rng.uniform_range(lo, hi);
                for (i, v) in xr.iter_mut().enumerate() {
                    *v += c * self.atomic_features[(i, j)];
                }
                row_codes.push((j, c));
            }
            codes.rows.push(row_codes);
        }
        (x, codes)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::config("world", e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut w: Self = serde_json::from_str(text).map_err(|e| Error::config("world", e.to_string()))?;
        w.validate()?;
        Ok(w)
    }
}

/// Kahn's algorithm over hierarchy edges; returns edge indices with parents resolved first.
fn hierarchy_order(f: usize, edges: &[HierarchyEdge]) -> Result<Vec<usize>> {
    let mut indegree = vec![0usize; f];
    for e in edges {
        indegree[e.child] += 1;
    }
    let mut ready: Vec<usize> = (0..f).filter(|&v| indegree[v] == 0).collect();
    let mut order = Vec::with_capacity(edges.len());
    let mut head = 0;
    while head < ready.len() {
        let v = ready[head];
        head += 1;
        for (i, e) in edges.iter().enumerate() {
            if e.parent == v {
                order.push(i);
                indegree[e.child] -= 1;
                if indegree[e.child] == 0 {
                    ready.push(e.child);
                }
            }
        }
    }
    if order.len() != edges.len() {
        return Err(Error::config("hierarchy", "contains a cycle"));
    }
    Ok(order)
}
