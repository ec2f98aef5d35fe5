use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Graph, GraphSource};
use crate::error::Result;
use crate::stats::Estimate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KsLabel {
    A,
    B,
    P,
    Core,
}

/// Output of round-synchronous leaf removal.
#[derive(Clone, Debug)]
pub struct KsResult {
    pub labels: Vec<KsLabel>,
    /// Round at which each vertex entered its set; `u32::MAX` for core vertices.
    pub round: Vec<u32>,
    /// `LR_t = |A_t| - |B_t|` for `t = 0..=rounds`.
    pub lr_trace: Vec<i64>,
    /// `|A_t|` and `|B_t|` for `t = 0..=rounds`.
    pub a_counts: Vec<usize>,
    pub b_counts: Vec<usize>,
    /// `t*`: the last round in which a vertex was removed.
    pub rounds: usize,
    pub core: Graph,
    /// `core_vertices[i]` is the original index of core vertex `i`.
    pub core_vertices: Vec<usize>,
}

impl KsResult {
    fn set(&self, label: KsLabel) -> Vec<usize> {
        (0..self.labels.len()).filter(|&v| self.labels[v] == label).collect()
    }

    pub fn a_set(&self) -> Vec<usize> {
        self.set(KsLabel::A)
    }

    pub fn b_set(&self) -> Vec<usize> {
        self.set(KsLabel::B)
    }

    pub fn p_set(&self) -> Vec<usize> {
        self.set(KsLabel::P)
    }

    /// `LR_{t*}`.
    pub fn lr(&self) -> i64 {
        *self.lr_trace.last().unwrap()
    }

    /// `LR_t`, frozen at `LR_{t*}` after the process stops.
    pub fn lr_at(&self, t: usize) -> i64 {
        self.lr_trace[t.min(self.rounds)]
    }

    pub fn a_count_at(&self, t: usize) -> usize {
        self.a_counts[t.min(self.rounds)]
    }

    pub fn b_count_at(&self, t: usize) -> usize {
        self.b_counts[t.min(self.rounds)]
    }
}

/// Round-synchronous leaf removal. `A_0` is the set of isolated vertices.
/// In round `t` the leaves `L_t` of `G_t` and their non-leaf neighbours `W_t`
/// are found; pairs of adjacent leaves go to `P`, other leaves to `A`, `W_t`
/// to `B`, all at once. Vertices left isolated in `G_t` also go to `A`.
/// The process stops when `G_t` has neither leaves nor isolated vertices.
pub fn karp_sipser(g: &Graph) -> KsResult {
    let n = g.n();
    let mut deg: Vec<usize> = g.degrees();
    let mut labels = vec![KsLabel::Core; n];
    let mut round = vec![u32::MAX; n];
    let mut alive = vec![true; n];

    let mut a_count = 0usize;
    let mut b_count = 0usize;
    for v in 0..n {
        if deg[v] == 0 {
            labels[v] = KsLabel::A;
            round[v] = 0;
            alive[v] = false;
            a_count += 1;
        }
    }
    let mut a_counts = vec![a_count];
    let mut b_counts = vec![b_count];

    // Only vertices whose degree changed can become leaves or isolated.
    let mut candidates: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
    let mut stamp = vec![0u32; n];
    let mut removed: Vec<usize> = Vec::new();
    let mut t = 0u32;
    loop {
        removed.clear();
        let tag = t + 1;
        for &u in &candidates {
            if !alive[u] || stamp[u] == tag {
                continue;
            }
            match deg[u] {
                0 => {
                    stamp[u] = tag;
                    labels[u] = KsLabel::A;
                    removed.push(u);
                }
                1 => {
                    let v = g
                        .neighbors(u)
                        .iter()
                        .map(|&w| w as usize)
                        .find(|&w| alive[w])
                        .expect("leaf has a live neighbour");
                    stamp[u] = tag;
                    removed.push(u);
                    if deg[v] == 1 {
                        labels[u] = KsLabel::P;
                        if stamp[v] != tag {
                            stamp[v] = tag;
                            labels[v] = KsLabel::P;
                            removed.push(v);
                        }
                    } else {
                        labels[u] = KsLabel::A;
                        if stamp[v] != tag {
                            stamp[v] = tag;
                            labels[v] = KsLabel::B;
                            removed.push(v);
                        }
                    }
                }
                _ => {}
            }
        }
        if removed.is_empty() {
            break;
        }
        t += 1;
        for &v in &removed {
            alive[v] = false;
            round[v] = t;
            match labels[v] {
                KsLabel::A => a_count += 1,
                KsLabel::B => b_count += 1,
                _ => {}
            }
        }
        candidates.clear();
        for &v in &removed {
            for &w in g.neighbors(v) {
                let w = w as usize;
                if alive[w] {
                    deg[w] -= 1;
                    candidates.push(w);
                }
            }
        }
        a_counts.push(a_count);
        b_counts.push(b_count);
    }

    let core_vertices: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
    let core = g.induced(&core_vertices);
    let lr_trace = a_counts
        .iter()
        .zip(&b_counts)
        .map(|(&a, &b)| a as i64 - b as i64)
        .collect();
    KsResult {
        labels,
        round,
        lr_trace,
        a_counts,
        b_counts,
        rounds: t as usize,
        core,
        core_vertices,
    }
}

/// Result of the queue-based leaf removal used before rank computations.
#[derive(Clone, Debug)]
pub struct LeafRemoval {
    /// Final `|A| - |B|`.
    pub lr: i64,
    pub core: Graph,
    pub core_vertices: Vec<usize>,
}

/// Event-driven leaf removal: one leaf at a time from a queue. The removed
/// set, the core and the final `|A| - |B|` equal those of [`karp_sipser`];
/// the per-round structure is not tracked.
pub fn leaf_removal_fast(g: &Graph) -> LeafRemoval {
    let n = g.n();
    let mut deg = g.degrees();
    let mut alive = vec![true; n];
    let mut lr = 0i64;
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| deg[v] <= 1).collect();
    while let Some(u) = queue.pop_front() {
        if !alive[u] {
            continue;
        }
        match deg[u] {
            0 => {
                alive[u] = false;
                lr += 1;
            }
            1 => {
                let v = g
                    .neighbors(u)
                    .iter()
                    .map(|&w| w as usize)
                    .find(|&w| alive[w])
                    .expect("leaf has a live neighbour");
                // (u, v) contributes +1 -1 or is a leaf pair; other leaves of v
                // become isolated later and are counted then.
                alive[u] = false;
                alive[v] = false;
                for &w in g.neighbors(v) {
                    let w = w as usize;
                    if alive[w] {
                        deg[w] -= 1;
                        if deg[w] <= 1 {
                            queue.push_back(w);
                        }
                    }
                }
            }
            _ => {}
        }
    }
    let core_vertices: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
    LeafRemoval {
        lr,
        core: g.induced(&core_vertices),
        core_vertices,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundMarginal {
    pub t: usize,
    pub p_a: Estimate,
    pub p_b: Estimate,
    pub lr: Estimate,
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundMarginals {
    pub source: String,
    pub n: usize,
    pub seeds: usize,
    pub rows: Vec<RoundMarginal>,
}

/// Per-round `P(o in A_t)`, `P(o in B_t)` and `LR_t / n` on random graphs.
/// Vertices are exchangeable, so each graph contributes the fractions
/// `|A_t| / n` and `|B_t| / n` (the average over all choices of root);
/// the standard errors are across seeds.
pub fn ks_round_marginals(
    source: &GraphSource,
    rounds: usize,
    n: usize,
    seeds: usize,
    master_seed: u64,
) -> Result<RoundMarginals> {
    let runs: Vec<KsResult> = (0..seeds as u64)
        .into_par_iter()
        .map(|s| source.sample(n, master_seed, s).map(|g| karp_sipser(&g)))
        .collect::<Result<_>>()?;
    let nf = n as f64;
    let rows = (0..=rounds)
        .map(|t| {
            let col = |f: &dyn Fn(&KsResult) -> f64| runs.iter().map(f).collect::<Vec<_>>();
            RoundMarginal {
                t,
                p_a: Estimate::from_iid(&col(&|r| r.a_count_at(t) as f64 / nf)),
                p_b: Estimate::from_iid(&col(&|r| r.b_count_at(t) as f64 / nf)),
                lr: Estimate::from_iid(&col(&|r| r.lr_at(t) as f64 / nf)),
            }
        })
        .collect();
    Ok(RoundMarginals {
        source: source.to_string(),
        n,
        seeds,
        rows,
    })
}
