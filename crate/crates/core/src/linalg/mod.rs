//! Exact ranks over prime fields and the rationals, and dense eigenvalues.

pub mod blackbox;
pub mod eigen;
pub mod field;
pub mod kernel;
pub mod perturbation;
pub mod rational;
pub mod sparse_rank;

pub use blackbox::wiedemann_rank;
pub use eigen::{symmetric_eigenvalues, symmetric_eigenvalues_capped, SpectrumSummary, DEFAULT_DENSE_CAP};
pub use field::{default_primes, is_prime, random_primes, PrimeField, MERSENNE_61};
pub use kernel::{kernel_dim_exact, kernel_dim_with, KernelCertificate, RankMethod};
pub use perturbation::{cdf_rank_perturbation_check, PerturbationCheck};
pub use rational::{kernel_basis, kernel_projection_at, projection_diagonal, rational_rank, rational_rank_oracle};
pub use sparse_rank::{markowitz_rank, rank_mod_p, EliminationLimits, PrimeFieldMatrix};
