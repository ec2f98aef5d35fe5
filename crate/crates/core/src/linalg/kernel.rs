//! Exact kernel dimension of a graph's adjacency matrix.

use rayon::prelude::*;
use serde::Serialize;

use super::blackbox::wiedemann_rank;
use super::field::PrimeField;
use super::rational::{rational_rank_oracle, RATIONAL_SIZE_CAP};
use super::sparse_rank::{markowitz_rank, EliminationLimits, PrimeFieldMatrix};
use crate::error::{Error, Result};
use crate::graph::{leaf_removal_fast, Graph};
use crate::rng::{self, TAG_PRIME};

/// How ranks mod p are computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMethod {
    /// Markowitz elimination while it stays cheap, otherwise Wiedemann.
    Auto,
    Markowitz,
    Wiedemann,
}

/// Under [`RankMethod::Auto`], elimination is abandoned for Wiedemann when
/// the dense block would exceed this size ...
pub const AUTO_DENSE_CAP: usize = 1000;
/// ... or the sparse phase spends more than this many merge steps per nonzero.
pub const AUTO_WORK_PER_NONZERO: usize = 32;

#[derive(Clone, Debug, Serialize)]
pub struct KernelCertificate {
    pub n: usize,
    pub kernel_dim: usize,
    pub ks_preprocess: bool,
    /// `LR_{t*}` (0 without preprocessing).
    pub lr: i64,
    /// Dimension of the matrix whose rank was computed.
    pub core_size: usize,
    pub core_edges: usize,
    pub primes: Vec<u64>,
    pub ranks: Vec<usize>,
    pub methods: Vec<RankMethod>,
    pub primes_agree: bool,
    /// Set when the primes disagreed and the exact rational rank settled it.
    pub rational_rank: Option<usize>,
}

impl KernelCertificate {
    pub fn core_kernel_dim(&self) -> usize {
        self.kernel_dim - self.lr as usize
    }

    pub fn fraction(&self) -> f64 {
        self.kernel_dim as f64 / self.n as f64
    }
}

/// `dim ker A(g)` with the default method and seed.
pub fn kernel_dim_exact(g: &Graph, primes: &[u64], use_ks_preprocess: bool) -> Result<KernelCertificate> {
    kernel_dim_with(g, primes, use_ks_preprocess, RankMethod::Auto, 0)
}

fn rank_one_prime(core: &Graph, p: u64, method: RankMethod, seed: u64) -> Result<(usize, RankMethod)> {
    let field = PrimeField::new(p)?;
    let wiedemann = || {
        let mut rng = rng::stream(seed, &[TAG_PRIME, p]);
        wiedemann_rank(core, field, &mut rng)
    };
    Ok(match method {
        RankMethod::Markowitz => {
            let m = PrimeFieldMatrix::from_graph(core, field);
            (markowitz_rank(m, EliminationLimits::default()).unwrap(), RankMethod::Markowitz)
        }
        RankMethod::Wiedemann => (wiedemann(), RankMethod::Wiedemann),
        RankMethod::Auto => {
            let m = PrimeFieldMatrix::from_graph(core, field);
            let limits = EliminationLimits {
                dense_cap: Some(AUTO_DENSE_CAP),
                work_cap: (core.n() > AUTO_DENSE_CAP).then(|| AUTO_WORK_PER_NONZERO * m.nnz() + 1_000_000),
                ..Default::default()
            };
            match markowitz_rank(m, limits) {
                Some(r) => (r, RankMethod::Markowitz),
                None => (wiedemann(), RankMethod::Wiedemann),
            }
        }
    })
}

/// `dim ker A(g)`. With preprocessing, `LR_{t*} + |core| - rank(core)`;
/// the rank is the maximum over `primes`, each a lower bound on the
/// rational rank. Disagreeing primes are settled by the rational oracle
/// when the matrix is small enough and are an error otherwise.
pub fn kernel_dim_with(
    g: &Graph,
    primes: &[u64],
    use_ks_preprocess: bool,
    method: RankMethod,
    seed: u64,
) -> Result<KernelCertificate> {
    if primes.is_empty() {
        return Err(Error::EmptyPrimeList);
    }
    let (lr, core) = if use_ks_preprocess {
        let lrm = leaf_removal_fast(g);
        (lrm.lr, lrm.core)
    } else {
        (0, g.clone())
    };
    let results: Vec<(usize, RankMethod)> = primes
        .par_iter()
        .map(|&p| rank_one_prime(&core, p, method, seed))
        .collect::<Result<_>>()?;
    let ranks: Vec<usize> = results.iter().map(|r| r.0).collect();
    let methods = results.iter().map(|r| r.1).collect();
    let primes_agree = ranks.windows(2).all(|w| w[0] == w[1]);
    let mut rank = *ranks.iter().max().unwrap();
    let mut rational_rank = None;
    if !primes_agree {
        if core.n() <= RATIONAL_SIZE_CAP {
            let r = rational_rank_oracle(&core)?;
            rational_rank = Some(r);
            rank = r;
        } else {
            return Err(Error::RankDisagreement {
                n: core.n(),
                ranks: primes.iter().copied().zip(ranks).collect(),
            });
        }
    }
    let kernel_dim = (lr + (core.n() - rank) as i64) as usize;
    Ok(KernelCertificate {
        n: g.n(),
        kernel_dim,
        ks_preprocess: use_ks_preprocess,
        lr,
        core_size: core.n(),
        core_edges: core.edge_count(),
        primes: primes.to_vec(),
        ranks,
        methods,
        primes_agree,
        rational_rank,
    })
}
