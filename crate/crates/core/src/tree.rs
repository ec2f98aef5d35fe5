//! Truncated Galton–Watson trees and the leaves-up recursions run on them:
//! `h(t)` for the atom at zero, the exact atom of a finite tree, and the
//! resolvent `m(z)` for smoothed spectral densities.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::degree::{DegreeModel, DegreeSampler};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::SpectrumSummary;
use crate::rng::{self, TAG_TREE};
use crate::stats::Estimate;

pub const DEFAULT_NODE_CAP: usize = 10_000_000;

/// Rooted tree stored in breadth-first order: node 0 is the root, children of
/// a node occupy a contiguous index range, and depths are nondecreasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeSample {
    parent: Vec<u32>,
    first_child: Vec<u32>,
    child_count: Vec<u32>,
    depth: Vec<u32>,
    truncation_depth: usize,
}

impl TreeSample {
    fn from_child_counts(counts: &[u32], depths: Vec<u32>, truncation_depth: usize) -> Self {
        let n = counts.len();
        let mut parent = vec![u32::MAX; n];
        let mut first_child = vec![0u32; n];
        let mut next = 1u32;
        for i in 0..n {
            first_child[i] = next;
            for c in next..next + counts[i] {
                parent[c as usize] = i as u32;
            }
            next += counts[i];
        }
        debug_assert_eq!(next as usize, n);
        Self {
            parent,
            first_child,
            child_count: counts.to_vec(),
            depth: depths,
            truncation_depth,
        }
    }

    /// The single-node tree.
    pub fn singleton() -> Self {
        Self::from_child_counts(&[0], vec![0], 0)
    }

    /// Breadth-first tree of a finite graph's component of `root`. Fails if
    /// that component has a cycle.
    pub fn from_graph(g: &Graph, root: usize) -> Result<Self> {
        let mut order = vec![root];
        let mut depths = vec![0u32];
        let mut from = vec![usize::MAX];
        let mut seen = vec![false; g.n()];
        seen[root] = true;
        let mut counts = Vec::new();
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            let mut count = 0;
            for &w in g.neighbors(v) {
                let w = w as usize;
                if w == from[head] {
                    continue;
                }
                if seen[w] {
                    return Err(Error::InvalidArgument("graph component is not a tree".into()));
                }
                seen[w] = true;
                order.push(w);
                depths.push(depths[head] + 1);
                from.push(v);
                count += 1;
            }
            counts.push(count);
            head += 1;
        }
        let height = *depths.last().unwrap() as usize;
        Ok(Self::from_child_counts(&counts, depths, height))
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn truncation_depth(&self) -> usize {
        self.truncation_depth
    }

    pub fn depth(&self, i: usize) -> usize {
        self.depth[i] as usize
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        (i != 0).then(|| self.parent[i] as usize)
    }

    pub fn children(&self, i: usize) -> std::ops::Range<usize> {
        let lo = self.first_child[i] as usize;
        lo..lo + self.child_count[i] as usize
    }

    /// Number of nodes at each depth `0..=truncation_depth`.
    pub fn generation_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.truncation_depth + 1];
        for &d in &self.depth {
            sizes[d as usize] += 1;
        }
        sizes
    }

    /// Number of nodes with depth at most `depth`.
    fn prefix_len(&self, depth: usize) -> usize {
        self.depth.partition_point(|&d| d as usize <= depth)
    }

    /// The tree as an undirected graph on `0..len()`.
    pub fn to_graph(&self) -> Graph {
        Graph::from_edges(self.len(), (1..self.len()).map(|i| (self.parent[i] as usize, i)))
    }
}

/// Offspring sampler; a model with no edges never reaches a second generation.
fn offspring_sampler(model: &DegreeModel) -> Result<DegreeSampler> {
    if model.mean() > 0.0 {
        Ok(model.size_biased()?.sampler())
    } else {
        Ok(DegreeSampler::Point(0))
    }
}

/// Galton–Watson tree truncated at `depth`: the root has `F_*` children,
/// every other node `F` children. Fails rather than truncating further if the
/// tree would exceed `node_cap` nodes.
pub fn sample_gwt<R: Rng + ?Sized>(
    model: &DegreeModel,
    depth: usize,
    node_cap: usize,
    rng: &mut R,
) -> Result<TreeSample> {
    let root = model.sampler();
    let offspring = offspring_sampler(model)?;
    sample_with(&root, &offspring, depth, node_cap, rng)
}

fn sample_with<R: Rng + ?Sized>(
    root: &DegreeSampler,
    offspring: &DegreeSampler,
    depth: usize,
    node_cap: usize,
    rng: &mut R,
) -> Result<TreeSample> {
    let mut counts: Vec<u32> = Vec::new();
    let mut depths: Vec<u32> = vec![0];
    let mut i = 0;
    while i < depths.len() {
        let d = depths[i] as usize;
        let k = if d == depth {
            0
        } else if i == 0 {
            root.sample(rng)
        } else {
            offspring.sample(rng)
        };
        if depths.len() + k > node_cap {
            return Err(Error::SizeGuard {
                what: "Galton-Watson tree nodes",
                size: depths.len() + k,
                cap: node_cap,
            });
        }
        counts.push(k as u32);
        depths.extend(std::iter::repeat_n(d as u32 + 1, k));
        i += 1;
    }
    Ok(TreeSample::from_child_counts(&counts, depths, depth))
}

/// `h` at the root with nodes at `depth` treated as childless (`h = 1`
/// there):
/// `h_i = (1 + sum_{j in D(i)} (t^2 + sum_{k in D(j)} h_k)^{-1})^{-1}`.
pub fn h_at_depth(tree: &TreeSample, t: f64, depth: usize) -> f64 {
    assert!(t > 0.0, "t must be positive");
    let n = tree.prefix_len(depth);
    let t2 = t * t;
    // child_sum[i] = sum of h over the children of i; inv_sum[i] = sum over
    // children j of 1 / (t^2 + child_sum[j]).
    let mut child_sum = vec![0.0f64; n];
    let mut inv_sum = vec![0.0f64; n];
    for i in (1..n).rev() {
        let h = 1.0 / (1.0 + inv_sum[i]);
        let p = tree.parent[i] as usize;
        child_sum[p] += h;
        inv_sum[p] += 1.0 / (t2 + child_sum[i]);
    }
    1.0 / (1.0 + inv_sum[0])
}

/// `h` at the root of the whole stored tree.
pub fn h_recursion(tree: &TreeSample, t: f64) -> f64 {
    h_at_depth(tree, t, tree.truncation_depth)
}

/// Nonnegative extended real with exact zero and infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
enum ExtReal {
    Zero,
    Finite(f64),
    Inf,
}

impl ExtReal {
    fn recip(self) -> Self {
        match self {
            ExtReal::Zero => ExtReal::Inf,
            ExtReal::Inf => ExtReal::Zero,
            ExtReal::Finite(x) => ExtReal::Finite(1.0 / x),
        }
    }

    fn add(self, other: Self) -> Self {
        match (self, other) {
            (ExtReal::Inf, _) | (_, ExtReal::Inf) => ExtReal::Inf,
            (ExtReal::Zero, x) | (x, ExtReal::Zero) => x,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
        }
    }

    fn value(self) -> f64 {
        match self {
            ExtReal::Zero => 0.0,
            ExtReal::Finite(x) => x,
            ExtReal::Inf => f64::INFINITY,
        }
    }
}

/// `mu_T({0})` at the root of a finite tree, from
/// `x_i = (1 + sum_{j in D(i)} (sum_{k in D(j)} x_k)^{-1})^{-1}`
/// with `1/0 = inf` and `1/inf = 0`.
pub fn exact_atom_finite_tree(tree: &TreeSample) -> f64 {
    let n = tree.len();
    let mut child_sum = vec![ExtReal::Zero; n];
    let mut inv_sum = vec![ExtReal::Zero; n];
    for i in (1..n).rev() {
        let x = ExtReal::Finite(1.0).add(inv_sum[i]).recip();
        let p = tree.parent[i] as usize;
        child_sum[p] = child_sum[p].add(x);
        inv_sum[p] = inv_sum[p].add(child_sum[i].recip());
    }
    ExtReal::Finite(1.0).add(inv_sum[0]).recip().value()
}

/// Monte Carlo estimates of `E h(t)` over a `(depth, t)` grid, all cells
/// computed on the same trees.
#[derive(Clone, Debug, Serialize)]
pub struct AtomTable {
    pub model: String,
    pub depths: Vec<usize>,
    pub t_grid: Vec<f64>,
    /// `estimates[d][k]` for `depths[d]` and `t_grid[k]`.
    pub estimates: Vec<Vec<Estimate>>,
    pub samples: usize,
    pub discarded: usize,
    pub seed: u64,
    /// Trees on which `h` increased as `t` decreased (should be 0).
    pub t_monotonicity_violations: usize,
    /// Trees on which `h` increased from depth `2n` to `2n + 2` (should be 0).
    pub depth_bracket_violations: usize,
}

impl AtomTable {
    /// The deepest, smallest-`t` cell.
    pub fn headline(&self) -> Estimate {
        *self.estimates.last().and_then(|row| row.last()).expect("nonempty table")
    }
}

/// Slack for the per-tree monotonicity diagnostics.
const MONOTONE_SLACK: f64 = 1e-12;

pub fn atom_at_zero_mc(
    model: &DegreeModel,
    depths: &[usize],
    t_grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<AtomTable> {
    if depths.is_empty() || t_grid.is_empty() || samples == 0 {
        return Err(Error::InvalidArgument("depths, t grid and samples must be nonempty".into()));
    }
    if let Some(d) = depths.iter().find(|&&d| d % 2 == 1) {
        return Err(Error::InvalidArgument(format!("truncation depth {d} is odd")));
    }
    if depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("depths must be increasing".into()));
    }
    if t_grid.iter().any(|&t| !(t > 0.0)) || t_grid.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidArgument("t grid must be positive and decreasing".into()));
    }
    let max_depth = *depths.last().unwrap();
    let root = model.sampler();
    let offspring = offspring_sampler(model)?;

    // Per tree: Some(h values, row-major over (depth, t)) or None if discarded.
    let rows: Vec<Option<Vec<f64>>> = (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng::stream(seed, &[TAG_TREE, s]);
            let tree = sample_with(&root, &offspring, max_depth, DEFAULT_NODE_CAP, &mut rng).ok()?;
            let mut vals = Vec::with_capacity(depths.len() * t_grid.len());
            for &d in depths {
                for &t in t_grid {
                    vals.push(h_at_depth(&tree, t, d));
                }
            }
            Some(vals)
        })
        .collect();

    let kept: Vec<&Vec<f64>> = rows.iter().flatten().collect();
    let (nd, nt) = (depths.len(), t_grid.len());
    let mut t_viol = 0;
    let mut d_viol = 0;
    for vals in &kept {
        let at = |d: usize, k: usize| vals[d * nt + k];
        if (0..nd).any(|d| (1..nt).any(|k| at(d, k) > at(d, k - 1) + MONOTONE_SLACK)) {
            t_viol += 1;
        }
        if (1..nd).any(|d| (0..nt).any(|k| at(d, k) > at(d - 1, k) + MONOTONE_SLACK)) {
            d_viol += 1;
        }
    }
    let estimates = (0..nd)
        .map(|d| {
            (0..nt)
                .map(|k| {
                    let col: Vec<f64> = kept.iter().map(|v| v[d * nt + k]).collect();
                    Estimate::from_iid(&col)
                })
                .collect()
        })
        .collect();
    Ok(AtomTable {
        model: model.to_string(),
        depths: depths.to_vec(),
        t_grid: t_grid.to_vec(),
        estimates,
        samples: kept.len(),
        discarded: samples - kept.len(),
        seed,
        t_monotonicity_violations: t_viol,
        depth_bracket_violations: d_viol,
    })
}

/// Internal-node layout used by the resolvent sweep: childless nodes are
/// folded into a per-parent count since each contributes `-1/z`.
struct ResolventPlan {
    /// Internal nodes in reverse breadth-first order, as compact indices.
    parent: Vec<u32>,
    leaf_children: Vec<f64>,
}

impl ResolventPlan {
    fn new(tree: &TreeSample) -> Self {
        let n = tree.len();
        let mut compact = vec![u32::MAX; n];
        let internal: Vec<usize> = (0..n).filter(|&i| tree.child_count[i] > 0).collect();
        for (c, &i) in internal.iter().enumerate() {
            compact[i] = c as u32;
        }
        let mut leaf_children = vec![0.0; internal.len()];
        for i in 1..n {
            if tree.child_count[i] == 0 {
                leaf_children[compact[tree.parent[i] as usize] as usize] += 1.0;
            }
        }
        let parent = internal
            .iter()
            .map(|&i| if i == 0 { u32::MAX } else { compact[tree.parent[i] as usize] })
            .collect();
        Self {
            parent,
            leaf_children,
        }
    }

    /// `m_root(z)`; scratch must have the plan's length.
    fn root_value(&self, z: Complex64, scratch: &mut [Complex64]) -> Complex64 {
        let leaf = -1.0 / z;
        if self.parent.is_empty() {
            return leaf;
        }
        for (acc, &k) in scratch.iter_mut().zip(&self.leaf_children) {
            *acc = leaf * k;
        }
        for i in (1..self.parent.len()).rev() {
            let m = -1.0 / (z + scratch[i]);
            scratch[self.parent[i] as usize] += m;
        }
        -1.0 / (z + scratch[0])
    }
}

/// `m_root(z)` from `m_i = -(z + sum_{j in D(i)} m_j)^{-1}`, with `-1/z` at
/// childless nodes.
pub fn resolvent_root(tree: &TreeSample, z: Complex64) -> Complex64 {
    let plan = ResolventPlan::new(tree);
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.parent.len()];
    plan.root_value(z, &mut scratch)
}

/// True if `m` lies in the class `H` at `z`: `Im m >= 0`, `|m| <= 1 / Im z`.
pub fn in_h_class(m: Complex64, z: Complex64) -> bool {
    let tol = 1e-12 * (1.0 + m.norm());
    m.im >= -tol && m.norm() <= 1.0 / z.im + tol
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityEstimate {
    pub model: String,
    pub energies: Vec<f64>,
    pub eta: f64,
    pub depth: usize,
    /// `E Im m_root(E + i eta) / pi`.
    pub density: Vec<f64>,
    pub stderr: Vec<f64>,
    pub samples: usize,
    pub discarded: usize,
    pub seed: u64,
    pub h_class_violations: usize,
}

impl DensityEstimate {
    /// CDF of the smoothed measure at the grid energies. Tree spectra are
    /// symmetric about 0, so `F(E) = 1/2 + int_0^E density` (trapezoid rule);
    /// the grid must start at 0 and increase.
    pub fn symmetric_cdf(&self) -> Result<Vec<f64>> {
        let e = &self.energies;
        if e.first() != Some(&0.0) || e.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("energy grid must start at 0 and increase".into()));
        }
        let mut cdf = Vec::with_capacity(e.len());
        let mut acc = 0.5;
        cdf.push(acc);
        for k in 1..e.len() {
            acc += 0.5 * (e[k] - e[k - 1]) * (self.density[k] + self.density[k - 1]);
            cdf.push(acc);
        }
        Ok(cdf)
    }

    /// `sup |F(E) - G(E)|` over `E` and `-E` on the grid, where `G` is the CDF
    /// of `spectrum` smoothed at the same width.
    pub fn sup_cdf_gap(&self, spectrum: &SpectrumSummary) -> Result<f64> {
        let cdf = self.symmetric_cdf()?;
        Ok(self
            .energies
            .iter()
            .zip(&cdf)
            .map(|(&e, &f)| {
                let right = (f - spectrum.smoothed_cdf(e, self.eta)).abs();
                let left = (1.0 - f - spectrum.smoothed_cdf(-e, self.eta)).abs();
                right.max(left)
            })
            .fold(0.0, f64::max))
    }
}

/// Smoothed spectral density of `E mu_T` on an energy grid.
pub fn resolvent_density(
    model: &DegreeModel,
    energies: &[f64],
    eta: f64,
    depth: usize,
    samples: usize,
    seed: u64,
) -> Result<DensityEstimate> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be positive".into()));
    }
    let root = model.sampler();
    let offspring = offspring_sampler(model)?;
    let zs: Vec<Complex64> = energies.iter().map(|&e| Complex64::new(e, eta)).collect();

    let per_tree: Vec<Option<(Vec<f64>, usize)>> = (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng::stream(seed, &[TAG_TREE, s]);
            let tree = sample_with(&root, &offspring, depth, DEFAULT_NODE_CAP, &mut rng).ok()?;
            let plan = ResolventPlan::new(&tree);
            let mut scratch = vec![Complex64::new(0.0, 0.0); plan.parent.len()];
            let mut bad = 0;
            let vals = zs
                .iter()
                .map(|&z| {
                    let m = plan.root_value(z, &mut scratch);
                    if !in_h_class(m, z) {
                        bad += 1;
                    }
                    m.im / std::f64::consts::PI
                })
                .collect();
            Some((vals, bad))
        })
        .collect();

    let kept: Vec<&(Vec<f64>, usize)> = per_tree.iter().flatten().collect();
    let mut density = Vec::with_capacity(zs.len());
    let mut stderr = Vec::with_capacity(zs.len());
    for k in 0..zs.len() {
        let col: Vec<f64> = kept.iter().map(|(v, _)| v[k]).collect();
        let e = Estimate::from_iid(&col);
        density.push(e.mean);
        stderr.push(e.stderr);
    }
    Ok(DensityEstimate {
        model: model.to_string(),
        energies: energies.to_vec(),
        eta,
        depth,
        density,
        stderr,
        samples: kept.len(),
        discarded: samples - kept.len(),
        seed,
        h_class_violations: kept.iter().map(|(_, b)| b).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn star3() -> Graph {
        Graph::from_edges(4, vec![(0, 1), (0, 2), (0, 3)])
    }

    #[test]
    fn singleton_values() {
        let t = TreeSample::singleton();
        assert_eq!(h_recursion(&t, 0.3), 1.0);
        assert_eq!(exact_atom_finite_tree(&t), 1.0);
        let z = Complex64::new(0.0, 1.0);
        let m = resolvent_root(&t, z);
        assert!((m - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn single_edge_h() {
        let t = TreeSample::from_graph(&Graph::from_edges(2, vec![(0, 1)]), 0).unwrap();
        for s in [0.1, 0.5, 2.0] {
            assert!((h_recursion(&t, s) - s * s / (1.0 + s * s)).abs() < 1e-15);
        }
        assert_eq!(exact_atom_finite_tree(&t), 0.0);
    }

    #[test]
    fn single_edge_resolvent_against_eigenpairs() {
        // Eigenvalues +-1 with root weight 1/2 each.
        let t = TreeSample::from_graph(&Graph::from_edges(2, vec![(0, 1)]), 0).unwrap();
        let z = Complex64::new(0.3, 0.2);
        let oracle = 0.5 / (Complex64::new(1.0, 0.0) - z) + 0.5 / (Complex64::new(-1.0, 0.0) - z);
        assert!((resolvent_root(&t, z) - oracle).norm() < 1e-14);
    }

    #[test]
    fn star_values() {
        let center = TreeSample::from_graph(&star3(), 0).unwrap();
        let leaf = TreeSample::from_graph(&star3(), 1).unwrap();
        assert!(h_recursion(&center, 1e-6) < 1e-11);
        assert!((h_recursion(&leaf, 1e-6) - 2.0 / 3.0).abs() < 1e-11);
        assert_eq!(exact_atom_finite_tree(&center), 0.0);
        assert!((exact_atom_finite_tree(&leaf) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn path_three_end() {
        let p3 = Graph::from_edges(3, vec![(0, 1), (1, 2)]);
        let t = TreeSample::from_graph(&p3, 0).unwrap();
        assert!((exact_atom_finite_tree(&t) - 0.5).abs() < 1e-15);
        assert_eq!(exact_atom_finite_tree(&TreeSample::from_graph(&p3, 1).unwrap()), 0.0);
    }

    #[test]
    fn from_graph_rejects_cycles() {
        let c = Graph::from_edges(3, vec![(0, 1), (1, 2), (2, 0)]);
        assert!(TreeSample::from_graph(&c, 0).is_err());
    }

    #[test]
    fn regular_depth_two() {
        let m = DegreeModel::parse("regular:d=3").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = sample_gwt(&m, 2, DEFAULT_NODE_CAP, &mut rng).unwrap();
        assert_eq!(t.len(), 10);
        assert_eq!(t.generation_sizes(), vec![1, 3, 6]);
        for i in 1..t.len() {
            assert_eq!(t.depth(i), t.depth(t.parent(i).unwrap()) + 1);
        }
    }

    #[test]
    fn delta_zero_root_is_single_node() {
        let m = DegreeModel::parse("pmf:0:1").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_gwt(&m, 5, DEFAULT_NODE_CAP, &mut rng).unwrap().len(), 1);
    }

    #[test]
    fn node_cap_is_an_error() {
        let m = DegreeModel::parse("regular:d=3").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(sample_gwt(&m, 10, 100, &mut rng), Err(Error::SizeGuard { .. })));
    }

    #[test]
    fn two_point_model_atom_is_exact() {
        // F_* = {0: a, 1: 1-a}: a single node (atom 1) or a single edge (atom 0).
        let a = 0.3;
        let m = DegreeModel::parse(&format!("pmf:0:{a},1:{}", 1.0 - a)).unwrap();
        let table = atom_at_zero_mc(&m, &[2, 4], &[1e-3], 4000, 1).unwrap();
        let share = table.headline().mean;
        // Oracle: proportion of singleton roots in the same sample, with h = t^2/(1+t^2) on edges.
        let eps = 1e-6 / (1.0 + 1e-6);
        assert!((0.0..=1.0).contains(&share));
        assert!((share - (a + (1.0 - a) * eps)).abs() < 4.0 * table.headline().stderr + 1e-12);
    }

    #[test]
    fn atom_table_rejects_odd_depth_and_bad_grid() {
        let m = DegreeModel::parse("poisson:c=1").unwrap();
        assert!(atom_at_zero_mc(&m, &[3], &[0.1], 10, 0).is_err());
        assert!(atom_at_zero_mc(&m, &[2], &[0.01, 0.1], 10, 0).is_err());
    }

    #[test]
    fn density_single_node_is_cauchy() {
        let m = DegreeModel::parse("pmf:0:1").unwrap();
        let d = resolvent_density(&m, &[0.0, 1.0], 1.0, 4, 3, 0).unwrap();
        assert!((d.density[0] - 1.0 / std::f64::consts::PI).abs() < 1e-15);
        assert!((d.density[1] - 0.5 / std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(d.h_class_violations, 0);
    }

    #[test]
    fn single_edge_density_matches_its_spectrum() {
        let m = DegreeModel::regular(1).unwrap();
        let es: Vec<f64> = (0..=600).map(|i| i as f64 * 0.01).collect();
        let d = resolvent_density(&m, &es, 0.05, 2, 3, 0).unwrap();
        let spectrum = SpectrumSummary::from_eigenvalues(vec![-1.0, 1.0]);
        let gap = d.sup_cdf_gap(&spectrum).unwrap();
        assert!(gap < 1e-3, "gap {gap}");
        let shifted = SpectrumSummary::from_eigenvalues(vec![-1.0, 1.5]);
        assert!(d.sup_cdf_gap(&shifted).unwrap() > 0.1);
        let off_grid = resolvent_density(&m, &[0.5, 1.0], 0.05, 2, 1, 0).unwrap();
        assert!(off_grid.symmetric_cdf().is_err());
    }
}
