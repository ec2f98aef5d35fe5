use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every tolerance used by a verdict, in one place.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// `M(x_0) == max M` decides whether a point prediction is made.
    pub point_prediction: f64,
    /// Closed-form Erdős–Rényi kernel mass against `max M`.
    pub er_identity: f64,
    /// Absolute slack between an RDE root mean and `M(p_i)`.
    pub theory_vs_rde: f64,
    /// Absolute slack between a mean simulated kernel fraction and the theory.
    pub theory_vs_simulation: f64,
    /// Slack around `[M(x_0), max M]` for per-seed kernel fractions.
    pub bracket_slack: f64,
    /// Slack allowed below `max M` for the finite-depth tree estimates.
    pub spectral_slack: f64,
    /// Standard errors added to Monte Carlo comparisons on top of the slack.
    pub sigmas: f64,
    /// Per-round leaf-removal marginals against the tree recursion.
    pub ks_marginal: f64,
    /// `dim ker(core) / n` when the core kernel is expected to vanish.
    pub core_kernel: f64,
    /// Sup-norm gap of smoothed spectral CDFs.
    pub density_cdf_gap: f64,
    /// Exact tree atom against the rational projection.
    pub tree_oracle: f64,
    /// `max |lambda_i + lambda_{n+1-i}|` for bipartite spectra.
    pub spectrum_symmetry: f64,
    /// Accepted range for `sd(n) / sd(4n)` of per-seed kernel fractions.
    pub seed_variance_ratio: (f64, f64),
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            point_prediction: 1e-9,
            er_identity: 1e-9,
            theory_vs_rde: 0.003,
            theory_vs_simulation: 0.005,
            bracket_slack: 0.01,
            spectral_slack: 0.005,
            sigmas: 3.0,
            ks_marginal: 0.01,
            core_kernel: 0.003,
            density_cdf_gap: 0.02,
            tree_oracle: 1e-9,
            spectrum_symmetry: 1e-8,
            seed_variance_ratio: (1.5, 3.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RdeConfig {
    pub enabled: bool,
    pub pool: usize,
    pub iters: usize,
    /// Draws of the root functional per record.
    pub resamples: usize,
}

impl Default for RdeConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            pool: crate::rde::DEFAULT_POOL,
            iters: crate::rde::DEFAULT_ITERS,
            resamples: crate::rde::DEFAULT_POOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralConfig {
    pub enabled: bool,
    /// Largest even truncation depth tried.
    pub max_depth: usize,
    /// Depths whose expected tree size exceeds this are skipped.
    pub node_budget: usize,
    pub t_grid: Vec<f64>,
    pub samples: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            max_depth: 8,
            node_budget: 200_000,
            t_grid: vec![1e-1, 1e-2, 1e-3],
            samples: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub enabled: bool,
    pub n: usize,
    pub seeds: usize,
    /// Number of 61-bit primes in the rank battery.
    pub primes: usize,
    pub use_ks: bool,
    /// Also run at `4n` and log how the seed-to-seed spread shrinks.
    pub seed_variance: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            n: 10_000,
            seeds: 10,
            primes: 3,
            use_ks: true,
            seed_variance: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// `er:c=<c>` or a degree-model spec (configuration model).
    pub source: String,
    pub master_seed: u64,
    /// Points of the `M` curve written alongside the report.
    pub curve_grid: usize,
    pub rde: RdeConfig,
    pub spectral: SpectralConfig,
    pub simulation: SimulationConfig,
    pub tolerances: Tolerances,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            source: "poisson:c=1".into(),
            master_seed: 0,
            curve_grid: 1001,
            rde: RdeConfig::default(),
            spectral: SpectralConfig::default(),
            simulation: SimulationConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl PipelineConfig {
    pub fn for_source(source: &str) -> Self {
        Self {
            source: source.into(),
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.into()));
        if self.curve_grid < 2 {
            return bad("curve_grid must be at least 2");
        }
        if self.rde.enabled && (self.rde.pool == 0 || self.rde.resamples == 0) {
            return bad("rde pool and resamples must be positive");
        }
        if self.spectral.enabled && (self.spectral.samples == 0 || self.spectral.max_depth < 2) {
            return bad("spectral stage needs samples > 0 and max_depth >= 2");
        }
        if self.spectral.t_grid.windows(2).any(|w| w[0] <= w[1]) || self.spectral.t_grid.iter().any(|&t| !(t > 0.0)) {
            return bad("t_grid must be positive and decreasing");
        }
        if self.simulation.enabled && (self.simulation.n == 0 || self.simulation.seeds == 0 || self.simulation.primes == 0) {
            return bad("simulation needs n, seeds and primes all positive");
        }
        Ok(())
    }
}
