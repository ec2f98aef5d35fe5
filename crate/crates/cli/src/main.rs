use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use nullity::cavity::{self, find_records, ks_trajectory};
use nullity::experiment::{run_pipeline, PipelineConfig, Report, Verdict};
use nullity::graph::{ks_round_marginals, GraphSource};
use nullity::linalg::{kernel_dim_with, random_primes, symmetric_eigenvalues, RankMethod};
use nullity::rde::{root_mean, solve_rde, RdeTraceRow};
use nullity::rng::{derive_seed, TAG_ROOT};
use nullity::stats::Estimate;
use nullity::tree::{atom_at_zero_mc, resolvent_density};
use nullity::{DegreeModel, Graph};

type BoxError = Box<dyn std::error::Error>;

/// Rank and nullity of sparse random graphs: theory, population dynamics and simulation.
#[derive(Parser, Debug)]
#[command(name = "nullity", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the JSON result here (`-` for stdout). Relative paths go under $NULLITY_OUT_DIR if set.
    #[arg(long, global = true)]
    json: Option<PathBuf>,

    /// Write the main table as CSV here. Relative paths go under $NULLITY_OUT_DIR if set.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,

    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Records, first extremum and maximum of M; the M curve as CSV.
    Theory {
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 1001)]
        grid: usize,
    },
    /// Population dynamics from Bernoulli(p) and the root functional.
    Rde {
        #[arg(long)]
        model: String,
        /// A probability, or `record:<i>` for the i-th record (1-based).
        #[arg(long, default_value = "record:1")]
        start_p: String,
        #[arg(long, default_value_t = 100_000)]
        pool: usize,
        #[arg(long, default_value_t = 300)]
        iters: usize,
        #[arg(long, default_value_t = 100_000)]
        resamples: usize,
    },
    /// Monte Carlo table of E h(t) over truncation depths and t.
    Spectral {
        #[arg(long)]
        model: String,
        #[arg(long, value_delimiter = ',', default_value = "2,4,6,8")]
        depths: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.01,0.001")]
        t: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Smoothed spectral density from the resolvent recursion.
    Density {
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 0.05)]
        eta: f64,
        #[arg(long, default_value_t = 12)]
        depth: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 6.0)]
        emax: f64,
        #[arg(long, default_value_t = 0.02)]
        step: f64,
        /// Also diagonalise one sampled graph of this size and compare CDFs.
        #[arg(long)]
        graph_n: Option<usize>,
    },
    /// Kernel fractions of sampled graphs, and leaf-removal round marginals.
    Simulate {
        /// Degree-model spec, or `er:c=<c>` for Erdős–Rényi.
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        #[arg(long, default_value_t = 3)]
        primes: usize,
        /// Leaf-removal rounds to compare against the tree recursion (0: skip).
        #[arg(long, default_value_t = 0)]
        rounds: usize,
        #[arg(long)]
        no_ks: bool,
    },
    /// Exact kernel dimension of a graph given as an edge list.
    Rank {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long, default_value_t = 3)]
        primes: usize,
        #[arg(long)]
        no_ks: bool,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
        /// Also write the sorted eigenvalues (`lambda` column) here.
        #[arg(long)]
        eigenvalues: Option<PathBuf>,
    },
    /// Theory, population dynamics, tree estimates and simulation with verdicts.
    Pipeline {
        #[arg(long, required_unless_present = "config")]
        model: Option<String>,
        /// JSON configuration; flags given on the command line override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        pool: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        no_rde: bool,
        #[arg(long)]
        no_spectral: bool,
        #[arg(long)]
        no_simulation: bool,
        #[arg(long)]
        seed_variance: bool,
        /// Output directory for report.json and the CSV tables.
        #[arg(long, env = "NULLITY_OUT_DIR", default_value = "nullity-out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Auto,
    Markowitz,
    Wiedemann,
}

impl From<Method> for RankMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Auto => RankMethod::Auto,
            Method::Markowitz => RankMethod::Markowitz,
            Method::Wiedemann => RankMethod::Wiedemann,
        }
    }
}

/// Where `--json` and `--csv` go.
struct Sinks {
    json: Option<PathBuf>,
    csv: Option<PathBuf>,
}

impl Sinks {
    fn new(cli: &Cli) -> Self {
        let base = std::env::var_os("NULLITY_OUT_DIR").map(PathBuf::from);
        let resolve = |p: &PathBuf| match &base {
            Some(dir) if p.is_relative() && p.as_os_str() != "-" => dir.join(p),
            _ => p.clone(),
        };
        Self {
            json: cli.json.as_ref().map(resolve),
            csv: cli.csv.as_ref().map(resolve),
        }
    }

    fn json_to_stdout(&self) -> bool {
        self.json.as_deref() == Some(Path::new("-"))
    }

    /// Human-readable lines go to stderr when stdout carries JSON.
    fn say(&self, line: &str) {
        if self.json_to_stdout() {
            eprintln!("{line}");
        } else {
            println!("{line}");
        }
    }

    fn write_json<T: Serialize>(&self, value: &T) -> Result<(), BoxError> {
        let Some(path) = &self.json else { return Ok(()) };
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        if self.json_to_stdout() {
            io::stdout().write_all(text.as_bytes())?;
        } else {
            create_parent(path)?;
            std::fs::write(path, text)?;
        }
        Ok(())
    }

    fn csv_writer(&self) -> Result<Option<csv::Writer<File>>, BoxError> {
        match &self.csv {
            Some(path) => {
                create_parent(path)?;
                Ok(Some(csv::Writer::from_path(path)?))
            }
            None => Ok(None),
        }
    }
}

fn create_parent(path: &Path) -> io::Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` when a verdict failed.
fn run(cli: &Cli) -> Result<bool, BoxError> {
    let sinks = Sinks::new(cli);
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Theory { model, grid } => theory(&sinks, model, *grid),
        Command::Rde {
            model,
            start_p,
            pool,
            iters,
            resamples,
        } => rde(&sinks, model, start_p, *pool, *iters, *resamples, seed),
        Command::Spectral { model, depths, t, samples } => {
            let m = DegreeModel::parse(model)?;
            let table = atom_at_zero_mc(&m, depths, t, *samples, seed)?;
            for (d, row) in table.depths.iter().zip(&table.estimates) {
                let cells: Vec<String> = row.iter().map(|e| format!("{:.5}±{:.5}", e.mean, e.stderr)).collect();
                sinks.say(&format!("depth {d:>3}: {}", cells.join("  ")));
            }
            sinks.say(&format!(
                "samples {} (discarded {}), violations: t {} depth {}",
                table.samples, table.discarded, table.t_monotonicity_violations, table.depth_bracket_violations
            ));
            if let Some(mut w) = sinks.csv_writer()? {
                w.write_record(["depth", "t", "mean", "stderr", "samples"])?;
                for (d, row) in table.depths.iter().zip(&table.estimates) {
                    for (tv, e) in table.t_grid.iter().zip(row) {
                        w.write_record([d.to_string(), tv.to_string(), e.mean.to_string(), e.stderr.to_string(), e.samples.to_string()])?;
                    }
                }
                w.flush()?;
            }
            sinks.write_json(&table)?;
            Ok(table.t_monotonicity_violations == 0 && table.depth_bracket_violations == 0)
        }
        Command::Density {
            model,
            eta,
            depth,
            samples,
            emax,
            step,
            graph_n,
        } => density(&sinks, model, *eta, *depth, *samples, *emax, *step, *graph_n, seed),
        Command::Simulate {
            model,
            n,
            seeds,
            primes,
            rounds,
            no_ks,
        } => simulate(&sinks, model, *n, *seeds, *primes, *rounds, !*no_ks, seed),
        Command::Rank {
            edges,
            primes,
            no_ks,
            method,
            eigenvalues,
        } => rank(&sinks, edges, *primes, !*no_ks, *method, eigenvalues.as_deref(), seed),
        Command::Pipeline {
            model,
            config,
            n,
            seeds,
            pool,
            iters,
            samples,
            no_rde,
            no_spectral,
            no_simulation,
            seed_variance,
            out,
        } => {
            let mut cfg = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                    PipelineConfig::from_json(&text)?
                }
                None => PipelineConfig::default(),
            };
            if let Some(m) = model {
                cfg.source = m.clone();
            }
            if let Some(s) = cli.seed {
                cfg.master_seed = s;
            }
            if let Some(v) = n {
                cfg.simulation.n = *v;
            }
            if let Some(v) = seeds {
                cfg.simulation.seeds = *v;
            }
            if let Some(v) = pool {
                cfg.rde.pool = *v;
                cfg.rde.resamples = *v;
            }
            if let Some(v) = iters {
                cfg.rde.iters = *v;
            }
            if let Some(v) = samples {
                cfg.spectral.samples = *v;
            }
            cfg.rde.enabled &= !no_rde;
            cfg.spectral.enabled &= !no_spectral;
            cfg.simulation.enabled &= !no_simulation;
            cfg.simulation.seed_variance |= seed_variance;
            let report = run_pipeline(&cfg)?;
            let written = report.write_outputs(out)?;
            print_report(&sinks, &report);
            for p in written {
                sinks.say(&format!("wrote {}", p.display()));
            }
            sinks.write_json(&report)?;
            Ok(report.passed)
        }
    }
}

fn print_verdicts(sinks: &Sinks, verdicts: &[Verdict]) {
    for v in verdicts {
        let status = match (v.passed, v.fatal) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "WARN",
        };
        sinks.say(&format!(
            "{status} {:<32} measured {:.6} in [{:.6}, {:.6}] ± {:.3e}",
            v.name, v.measured, v.lower, v.upper, v.tolerance
        ));
    }
}

fn print_report(sinks: &Sinks, r: &Report) {
    let t = &r.theory;
    sinks.say(&format!("model {}", t.model));
    sinks.say(&format!(
        "x_0 = {:.9}  M(x_0) = {:.9}  max M = {:.9} at {:.9}",
        t.first_extremum, t.m_first_extremum, t.max_m, t.argmax
    ));
    match t.point_prediction {
        Some(p) => sinks.say(&format!("point prediction: kernel fraction -> {p:.9}")),
        None => sinks.say(&format!("bracket only: kernel fraction in [{:.9}, {:.9}]", t.m_first_extremum, t.max_m)),
    }
    if let Some(rde) = &r.rde {
        for rec in &rde.records {
            sinks.say(&format!(
                "rde record {} at p = {:.6}: root mean {:.5} ± {:.5} (M = {:.5})",
                rec.index, rec.start_p, rec.root_mean.mean, rec.root_mean.stderr, rec.m_at_start
            ));
        }
    }
    if let Some(sp) = &r.spectral {
        let h = sp.table.headline();
        sinks.say(&format!("tree estimate E h(t): {:.5} ± {:.5}", h.mean, h.stderr));
    }
    if let Some(sim) = &r.simulation {
        sinks.say(&format!(
            "simulated kernel fraction (n = {}, {} seeds): {:.5} ± {:.5}",
            sim.n,
            sim.runs.len(),
            sim.kernel_fraction.mean,
            sim.kernel_fraction.stderr
        ));
    }
    print_verdicts(sinks, &r.verdicts);
    sinks.say(if r.passed { "all verdicts passed" } else { "verdict failed" });
}

fn theory(sinks: &Sinks, model: &str, grid: usize) -> Result<bool, BoxError> {
    let mut cfg = PipelineConfig::for_source(model);
    cfg.curve_grid = grid;
    cfg.rde.enabled = false;
    cfg.spectral.enabled = false;
    cfg.simulation.enabled = false;
    let report = run_pipeline(&cfg)?;
    let t = &report.theory;
    print_report(sinks, &report);
    sinks.say(&format!("log-concavity of phi''_*: {}", serde_json::to_string(&t.log_concavity)?));
    for (i, r) in t.records.iter().enumerate() {
        sinks.say(&format!("record {}: x = {:.12}  M = {:.12}", i + 1, r.x, r.m));
    }
    if let Some(er) = &t.er {
        sinks.say(&format!("Erdős–Rényi: c = {}, q = {:.12}, kernel mass = {:.12}", er.c, er.q, er.kernel_mass));
    }
    if let Some(w) = sinks.csv_writer()? {
        report.curve.write_m_csv(w.into_inner().map_err(|e| e.into_error())?)?;
    }
    #[derive(Serialize)]
    struct Out<'a> {
        theory: &'a nullity::experiment::report::TheoryBlock,
        verdicts: &'a [Verdict],
    }
    sinks.write_json(&Out {
        theory: t,
        verdicts: &report.verdicts,
    })?;
    Ok(report.passed)
}

fn parse_start(model: &DegreeModel, spec: &str) -> Result<f64, BoxError> {
    if let Some(i) = spec.strip_prefix("record:") {
        let i: usize = i.parse()?;
        let records = find_records(model)?;
        return records
            .locations
            .get(i.wrapping_sub(1))
            .copied()
            .ok_or_else(|| format!("model has {} records, asked for record {i}", records.locations.len()).into());
    }
    Ok(spec.parse()?)
}

fn rde(sinks: &Sinks, model: &str, start: &str, pool: usize, iters: usize, resamples: usize, seed: u64) -> Result<bool, BoxError> {
    let m = DegreeModel::parse(model)?;
    let p = parse_start(&m, start)?;
    let sol = solve_rde(&m, p, iters, pool, seed)?;
    let root_seed = derive_seed(seed, &[TAG_ROOT]);
    let root = root_mean(&sol.population, &m, resamples, root_seed)?;
    let theory = cavity::eval_m(&m, p)?;
    if let Some(w) = &sol.warning {
        eprintln!("warning: {w}");
    }
    sinks.say(&format!(
        "start p = {p:.9}: nonzero mass {:.5}, mean {:.5}; root mean {:.5} ± {:.5} (M(p) = {theory:.5})",
        sol.population.nonzero_mass(),
        sol.population.mean(),
        root.mean,
        root.stderr
    ));
    if let Some(mut w) = sinks.csv_writer()? {
        for row in &sol.trace {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    #[derive(Serialize)]
    struct Out<'a> {
        model: String,
        start_p: f64,
        pool: usize,
        iters: usize,
        seed: u64,
        root_seed: u64,
        resamples: usize,
        nonzero_mass: f64,
        mean: f64,
        root_mean: Estimate,
        #[serde(rename = "M_at_start")]
        m_at_start: f64,
        warning: Option<&'a str>,
        floored: usize,
        trace: &'a [RdeTraceRow],
    }
    sinks.write_json(&Out {
        model: m.to_string(),
        start_p: p,
        pool,
        iters,
        seed,
        root_seed,
        resamples,
        nonzero_mass: sol.population.nonzero_mass(),
        mean: sol.population.mean(),
        root_mean: root,
        m_at_start: theory,
        warning: sol.warning.as_deref(),
        floored: sol.floored,
        trace: &sol.trace,
    })?;
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn density(
    sinks: &Sinks,
    model: &str,
    eta: f64,
    depth: usize,
    samples: usize,
    emax: f64,
    step: f64,
    graph_n: Option<usize>,
    seed: u64,
) -> Result<bool, BoxError> {
    if !(step > 0.0 && emax > 0.0) {
        return Err("--step and --emax must be positive".into());
    }
    let m = DegreeModel::parse(model)?;
    let count = (emax / step).round() as usize;
    let energies: Vec<f64> = (0..=count).map(|i| i as f64 * step).collect();
    let est = resolvent_density(&m, &energies, eta, depth, samples, seed)?;
    let spectrum = match graph_n {
        Some(n) => Some(symmetric_eigenvalues(&GraphSource::Configuration(m.clone()).sample(n, seed, 0)?)?),
        None => None,
    };
    let gap = spectrum.as_ref().map(|s| est.sup_cdf_gap(s)).transpose()?;
    sinks.say(&format!(
        "{} trees (discarded {}), density at 0: {:.5} ± {:.5}",
        est.samples, est.discarded, est.density[0], est.stderr[0]
    ));
    if let Some(g) = gap {
        sinks.say(&format!("sup gap of smoothed CDFs against the sampled graph: {g:.5}"));
    }
    if let Some(mut w) = sinks.csv_writer()? {
        let cdf = est.symmetric_cdf()?;
        let mut header = vec!["energy", "density", "stderr", "cdf"];
        if spectrum.is_some() {
            header.extend(["graph_density", "graph_cdf"]);
        }
        w.write_record(&header)?;
        for (k, &e) in energies.iter().enumerate() {
            let mut row = vec![e.to_string(), est.density[k].to_string(), est.stderr[k].to_string(), cdf[k].to_string()];
            if let Some(s) = &spectrum {
                row.push(s.smoothed_density(e, eta).to_string());
                row.push(s.smoothed_cdf(e, eta).to_string());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    #[derive(Serialize)]
    struct Out<'a> {
        estimate: &'a nullity::tree::DensityEstimate,
        graph_n: Option<usize>,
        sup_cdf_gap: Option<f64>,
    }
    sinks.write_json(&Out {
        estimate: &est,
        graph_n,
        sup_cdf_gap: gap,
    })?;
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    sinks: &Sinks,
    model: &str,
    n: usize,
    seeds: usize,
    primes: usize,
    rounds: usize,
    use_ks: bool,
    seed: u64,
) -> Result<bool, BoxError> {
    let mut cfg = PipelineConfig::for_source(model);
    cfg.master_seed = seed;
    cfg.curve_grid = 101;
    cfg.rde.enabled = false;
    cfg.spectral.enabled = false;
    cfg.simulation.n = n;
    cfg.simulation.seeds = seeds;
    cfg.simulation.primes = primes;
    cfg.simulation.use_ks = use_ks;
    let report = run_pipeline(&cfg)?;
    let sim = report.simulation.as_ref().expect("simulation enabled");
    let mut verdicts = report.verdicts.clone();
    for run in &sim.runs {
        sinks.say(&format!(
            "graph {:>3}: kernel {:.5}  LR {:.5}  core {:.5}  core kernel {:.5}",
            run.index, run.kernel_fraction, run.lr_fraction, run.core_fraction, run.core_kernel_fraction
        ));
    }

    #[derive(Serialize)]
    struct KsRow {
        t: usize,
        empirical_p_a: Estimate,
        empirical_p_b: Estimate,
        empirical_lr: Estimate,
        theory_p_a: f64,
        theory_p_b: f64,
        theory_lr: f64,
    }
    let mut ks_rows = Vec::new();
    if rounds > 0 {
        let source = GraphSource::parse(model)?;
        let traj = ks_trajectory(&source.degree_model()?, rounds)?;
        let marg = ks_round_marginals(&source, rounds, n, seeds, derive_seed(seed, &[0x4B53]))?;
        let mut worst = 0.0f64;
        for row in &marg.rows {
            let t = row.t;
            worst = worst.max((row.lr.mean - traj.lr[t]).abs());
            ks_rows.push(KsRow {
                t,
                empirical_p_a: row.p_a,
                empirical_p_b: row.p_b,
                empirical_lr: row.lr,
                theory_p_a: traj.p_a[t],
                theory_p_b: traj.p_b[t],
                theory_lr: traj.lr[t],
            });
            sinks.say(&format!("round {t}: LR_t/n {:.5} vs tree {:.5}", row.lr.mean, traj.lr[t]));
        }
        verdicts.push(Verdict::close(
            "simulation.ks_marginals",
            "max_t |empirical LR_t / n - tree LR_t|",
            worst,
            0.0,
            report.config.tolerances.ks_marginal,
        ));
    }
    print_verdicts(sinks, &verdicts);
    if let Some(mut w) = sinks.csv_writer()? {
        for run in &sim.runs {
            w.serialize(run)?;
        }
        w.flush()?;
    }
    #[derive(Serialize)]
    struct Out<'a> {
        simulation: &'a nullity::experiment::report::SimulationBlock,
        theory_bracket: (f64, f64),
        ks_rounds: Vec<KsRow>,
        verdicts: &'a [Verdict],
    }
    let passed = verdicts.iter().all(|v| v.passed || !v.fatal);
    sinks.write_json(&Out {
        simulation: sim,
        theory_bracket: (report.theory.m_first_extremum, report.theory.max_m),
        ks_rounds: ks_rows,
        verdicts: &verdicts,
    })?;
    Ok(passed)
}

fn rank(
    sinks: &Sinks,
    edges: &Path,
    primes: usize,
    use_ks: bool,
    method: Method,
    eigenvalues: Option<&Path>,
    seed: u64,
) -> Result<bool, BoxError> {
    let file = File::open(edges).map_err(|e| format!("{}: {e}", edges.display()))?;
    let g = Graph::read_edge_list(BufReader::new(file))?;
    let ps = random_primes(primes, 61, 0);
    let cert = kernel_dim_with(&g, &ps, use_ks, method.into(), seed)?;
    sinks.say(&format!(
        "n = {}, kernel dim = {}, rank = {} (LR {}, core {} vertices, primes agree: {})",
        cert.n,
        cert.kernel_dim,
        cert.n - cert.kernel_dim,
        cert.lr,
        cert.core_size,
        cert.primes_agree
    ));
    if let Some(path) = eigenvalues {
        let spectrum = symmetric_eigenvalues(&g)?;
        create_parent(path)?;
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["lambda"])?;
        for l in &spectrum.eigenvalues {
            w.write_record([l.to_string()])?;
        }
        w.flush()?;
    }
    sinks.write_json(&cert)?;
    Ok(true)
}
