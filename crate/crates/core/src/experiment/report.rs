use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::PipelineConfig;
use crate::cavity::{ErQ, FixedPoint, MCurve};
use crate::degree::LogConcavity;
use crate::error::Result;
use crate::rde::RdeTraceRow;
use crate::stats::Estimate;
use crate::tree::AtomTable;

pub const SCHEMA_VERSION: &str = "nullity-report/1";

/// One named comparison with its tolerance and outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub statement: String,
    pub measured: f64,
    pub lower: f64,
    pub upper: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Soft checks are logged but do not fail the run.
    pub fatal: bool,
}

impl Verdict {
    /// `measured` must lie in `[lower - tolerance, upper + tolerance]`.
    pub fn range(name: impl Into<String>, statement: impl Into<String>, measured: f64, lower: f64, upper: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            statement: statement.into(),
            measured,
            lower,
            upper,
            tolerance,
            passed: measured >= lower - tolerance && measured <= upper + tolerance,
            fatal: true,
        }
    }

    pub fn close(name: impl Into<String>, statement: impl Into<String>, measured: f64, target: f64, tolerance: f64) -> Self {
        Self::range(name, statement, measured, target, target, tolerance)
    }

    pub fn soft(mut self) -> Self {
        self.fatal = false;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RecordPoint {
    pub x: f64,
    #[serde(rename = "M")]
    pub m: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoryBlock {
    pub model: String,
    pub mean: f64,
    pub second_moment: f64,
    pub log_concavity: LogConcavity,
    pub fixed_points: Vec<FixedPoint>,
    pub records: Vec<RecordPoint>,
    pub first_extremum: f64,
    pub m_first_extremum: f64,
    pub max_m: f64,
    pub argmax: f64,
    /// Present only when `M(x_0) == max M`; otherwise the kernel fraction is
    /// bracketed by `[M(x_0), max M]` and no point value is claimed.
    pub point_prediction: Option<f64>,
    pub er: Option<ErQ>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RdeRecord {
    pub index: usize,
    pub start_p: f64,
    #[serde(rename = "M_at_start")]
    pub m_at_start: f64,
    pub nonzero_mass: Estimate,
    pub population_mean: Estimate,
    pub root_mean: Estimate,
    pub seed: u64,
    pub root_seed: u64,
    pub floored: usize,
    pub warning: Option<String>,
    #[serde(skip)]
    pub trace: Vec<RdeTraceRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RdeBlock {
    pub pool: usize,
    pub iters: usize,
    pub resamples: usize,
    pub records: Vec<RdeRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralBlock {
    /// Depths left out because their expected tree size exceeds the budget.
    pub skipped_depths: Vec<usize>,
    pub table: AtomTable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedRun {
    pub index: u64,
    pub n: usize,
    pub kernel_dim: usize,
    pub kernel_fraction: f64,
    pub lr_fraction: f64,
    pub core_fraction: f64,
    pub core_kernel_fraction: f64,
    pub primes_agree: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeedVariance {
    pub n: usize,
    pub sd_n: f64,
    pub sd_4n: f64,
    pub ratio: f64,
    pub seeds: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationBlock {
    pub source: String,
    pub n: usize,
    /// Graph `i` is drawn from the stream `(graph_seed, i)`.
    pub graph_seed: u64,
    pub primes: Vec<u64>,
    pub use_ks: bool,
    pub runs: Vec<SeedRun>,
    pub kernel_fraction: Estimate,
    pub lr_fraction: Estimate,
    pub seed_variance: Option<SeedVariance>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub crate_version: &'static str,
    pub config: PipelineConfig,
    pub theory: TheoryBlock,
    pub rde: Option<RdeBlock>,
    pub spectral: Option<SpectralBlock>,
    pub simulation: Option<SimulationBlock>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
    #[serde(skip)]
    pub curve: MCurve,
}

impl Report {
    pub fn failed_verdicts(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| v.fatal && !v.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `report.json` and the CSV tables into `dir`; returns the paths.
    pub fn write_outputs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let json = dir.join("report.json");
        File::create(&json)?.write_all(self.to_json()?.as_bytes())?;
        written.push(json);

        let curve = dir.join("m_curve.csv");
        self.curve.write_m_csv(File::create(&curve)?)?;
        written.push(curve);

        let verdicts = dir.join("verdicts.csv");
        let mut w = csv::Writer::from_path(&verdicts)?;
        for v in &self.verdicts {
            w.serialize(v)?;
        }
        w.flush()?;
        written.push(verdicts);

        if let Some(rde) = &self.rde {
            let path = dir.join("rde_trace.csv");
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["record", "iteration", "nonzero_mass", "mean"])?;
            for r in &rde.records {
                for row in &r.trace {
                    w.write_record([
                        r.index.to_string(),
                        row.iteration.to_string(),
                        row.nonzero_mass.to_string(),
                        row.mean.to_string(),
                    ])?;
                }
            }
            w.flush()?;
            written.push(path);
        }
        if let Some(sp) = &self.spectral {
            let path = dir.join("spectral.csv");
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["depth", "t", "mean", "stderr", "samples"])?;
            let t = &sp.table;
            for (d, row) in t.depths.iter().zip(&t.estimates) {
                for (tv, e) in t.t_grid.iter().zip(row) {
                    w.write_record([d.to_string(), tv.to_string(), e.mean.to_string(), e.stderr.to_string(), e.samples.to_string()])?;
                }
            }
            w.flush()?;
            written.push(path);
        }
        if let Some(sim) = &self.simulation {
            let path = dir.join("simulation.csv");
            let mut w = csv::Writer::from_path(&path)?;
            for run in &sim.runs {
                w.serialize(run)?;
            }
            w.flush()?;
            written.push(path);
        }
        Ok(written)
    }
}
