use serde::Serialize;

use super::eigen::symmetric_eigenvalues;
use super::rational::rational_rank;
use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Clone, Debug, Serialize)]
pub struct PerturbationCheck {
    pub n: usize,
    /// `sup_t |mu_A((-inf, t]) - mu_B((-inf, t])|`.
    pub max_cdf_gap: f64,
    pub rank_difference: usize,
    /// `rank(A - B) / n`.
    pub bound: f64,
    pub holds: bool,
}

/// Compares the spectral CDFs of two graphs on the same vertex set with
/// `rank(A - B) / n`. Eigenvalues closer than the kernel tolerance are
/// treated as equal so rounding cannot open a spurious gap.
pub fn cdf_rank_perturbation_check(ga: &Graph, gb: &Graph) -> Result<PerturbationCheck> {
    let n = ga.n();
    if gb.n() != n {
        return Err(Error::InvalidArgument(format!("vertex counts differ: {n} vs {}", gb.n())));
    }
    let sa = symmetric_eigenvalues(ga)?;
    let sb = symmetric_eigenvalues(gb)?;
    let tol = sa.kernel_tol.max(sb.kernel_tol);
    let count = |v: &[f64], t: f64| v.partition_point(|&x| x <= t + tol);
    let mut gap = 0usize;
    for &t in sa.eigenvalues.iter().chain(&sb.eigenvalues) {
        gap = gap.max(count(&sa.eigenvalues, t).abs_diff(count(&sb.eigenvalues, t)));
    }
    let (da, db) = (ga.dense_adjacency(), gb.dense_adjacency());
    let diff: Vec<Vec<i64>> = da
        .iter()
        .zip(&db)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect())
        .collect();
    let rank_difference = rational_rank(&diff)?;
    let nf = n.max(1) as f64;
    Ok(PerturbationCheck {
        n,
        max_cdf_gap: gap as f64 / nf,
        rank_difference,
        bound: rank_difference as f64 / nf,
        holds: gap <= rank_difference,
    })
}
