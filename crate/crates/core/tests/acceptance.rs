//! End-to-end checks against closed forms, exact oracles and simulation.
//! Each test prints one `criterion N: PASS|FAIL ...` line to the real stdout.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nullity::cavity::{er_q, eval_m, find_records, ks_trajectory};
use nullity::experiment::{run_pipeline, PipelineConfig};
use nullity::graph::{karp_sipser, ks_round_marginals, GraphSource};
use nullity::linalg::{default_primes, kernel_dim_exact, kernel_projection_at, rank_mod_p, rational_rank_oracle};
use nullity::linalg::{symmetric_eigenvalues, PrimeField};
use nullity::rde::{root_mean, solve_rde};
use nullity::tree::{exact_atom_finite_tree, h_at_depth, resolvent_density, sample_gwt, TreeSample};
use nullity::{DegreeModel, Graph};

fn report(id: &str, passed: bool, detail: String) {
    let line = format!("criterion {id}: {} {detail}\n", if passed { "PASS" } else { "FAIL" });
    // Bypass the test harness capture so the line shows on every run.
    let _ = std::io::stdout().write_all(line.as_bytes());
    assert!(passed, "criterion {id} failed: {detail}");
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == flo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Smallest root of `q = exp(-c exp(-c q))`.
fn er_q_oracle(c: f64) -> f64 {
    let g = |q: f64| (-c * (-c * q).exp()).exp() - q;
    let mut hi = 0.0;
    while g(hi) > 0.0 {
        hi += 1e-3;
    }
    bisect(g, hi - 1e-3, hi)
}

fn er_mass(c: f64, q: f64) -> f64 {
    let e = (-c * q).exp();
    q + e + c * q * e - 1.0
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn kernel_fractions(source: &str, n: usize, seeds: u64, master: u64) -> Vec<f64> {
    let src = GraphSource::parse(source).unwrap();
    let primes = default_primes();
    (0..seeds)
        .map(|s| {
            let g = src.sample(n, master, s).unwrap();
            kernel_dim_exact(&g, &primes, true).unwrap().fraction()
        })
        .collect()
}

#[test]
fn criterion_1_erdos_renyi_c1() {
    let omega = bisect(|x| x * x.exp() - 1.0, 0.0, 1.0);
    let q = er_q_oracle(1.0);
    let closed = omega * omega + 2.0 * omega - 1.0;
    let lib = er_q(1.0).unwrap();
    let m = eval_m(&DegreeModel::parse("poisson:c=1").unwrap(), lib.q).unwrap();
    let theory_ok = (q - omega).abs() < 1e-12
        && (lib.q - omega).abs() < 1e-9
        && (lib.kernel_mass - closed).abs() < 1e-9
        && (m - closed).abs() < 1e-9
        && (closed - 0.4559364).abs() < 5e-6;
    let sim = mean(&kernel_fractions("er:c=1", 50_000, 10, 1));
    report(
        "1",
        theory_ok && (sim - 0.4559364).abs() < 0.005,
        format!("theory {:.9} (closed form {closed:.9}), simulated {sim:.6} vs 0.4559364 tol 0.005", lib.kernel_mass),
    );
}

#[test]
fn criterion_2_erdos_renyi_c3() {
    let q = er_q_oracle(3.0);
    let target = er_mass(3.0, q);
    let lib = er_q(3.0).unwrap();
    let src = GraphSource::parse("er:c=3").unwrap();
    let primes = default_primes();
    let n = 50_000;
    let (mut fr, mut core) = (Vec::new(), Vec::new());
    for s in 0..10 {
        let cert = kernel_dim_exact(&src.sample(n, 2, s).unwrap(), &primes, true).unwrap();
        fr.push(cert.fraction());
        core.push(cert.core_kernel_dim() as f64 / n as f64);
    }
    let (sim, worst_core) = (mean(&fr), core.iter().cloned().fold(0.0, f64::max));
    report(
        "2",
        (lib.kernel_mass - target).abs() < 1e-9 && (sim - target).abs() < 0.005 && worst_core < 0.003,
        format!("theory {target:.6}, simulated {sim:.6} tol 0.005, max core kernel fraction {worst_core:.2e} tol 3e-3"),
    );
}

#[test]
fn criterion_3_regular_three() {
    // x -> (1-x)^2 twice; its fixed points in [0,1] are 0, (3 - sqrt 5)/2 and 1.
    let m = |x: f64| {
        let xb = (1.0 - x).powi(2);
        3.0 * x * xb + (1.0 - x).powi(3) + (1.0 - xb).powi(3) - 1.0
    };
    let fixed = [0.0, (3.0 - 5f64.sqrt()) / 2.0, 1.0];
    let oracle_max = fixed.iter().map(|&x| m(x)).fold(f64::NEG_INFINITY, f64::max);
    let rec = find_records(&DegreeModel::parse("regular:d=3").unwrap()).unwrap();
    let fr = kernel_fractions("regular:d=3", 10_000, 3, 3);
    let worst = fr.iter().cloned().fold(0.0, f64::max);
    report(
        "3",
        rec.global_max.abs() < 1e-10 && oracle_max.abs() < 1e-12 && worst < 0.005,
        format!("max M {:.2e} (oracle {oracle_max:.2e}), simulated kernel fractions {fr:?} tol 0.005", rec.global_max),
    );
}

fn prufer_tree(n: usize, rng: &mut impl Rng) -> Graph {
    if n == 2 {
        return Graph::from_edges(2, [(0, 1)]);
    }
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &s in &seq {
        degree[s] += 1;
    }
    let mut edges = Vec::new();
    for &s in &seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
        edges.push((leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    Graph::from_edges(n, edges)
}

#[test]
fn criterion_4_finite_tree_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..500 {
        let n = rng.random_range(2..=12);
        let g = prufer_tree(n, &mut rng);
        let root = rng.random_range(0..n);
        let recursion = exact_atom_finite_tree(&TreeSample::from_graph(&g, root).unwrap());
        let rational = kernel_projection_at(&g, root).unwrap();
        let gap = (recursion - rational).abs();
        worst = worst.max(gap);
        if gap >= 1e-9 {
            failures += 1;
        }
    }
    report("4", failures == 0, format!("500 trees, {failures} mismatches, max gap {worst:.2e} tol 1e-9"));
}

#[test]
fn criterion_5_rde_root_mean() {
    let q = er_q_oracle(2.0);
    let target = er_mass(2.0, q);
    let model = DegreeModel::parse("poisson:c=2").unwrap();
    let lib_m = eval_m(&model, er_q(2.0).unwrap().q).unwrap();
    let pop = solve_rde(&model, q, 300, 100_000, 5).unwrap().population;
    let est = root_mean(&pop, &model, 100_000, 6).unwrap();
    let gap = (est.mean - lib_m).abs();
    report(
        "5",
        gap < 0.003 && (lib_m - target).abs() < 1e-9,
        format!("root mean {:.6} ± {:.1e} vs M(q) {lib_m:.6}, gap {gap:.2e} tol 3e-3", est.mean, est.stderr),
    );
}

#[test]
fn criterion_6_ks_trajectory() {
    let model = DegreeModel::parse("poisson:c=2").unwrap();
    let theory = ks_trajectory(&model, 6).unwrap();
    let emp = ks_round_marginals(&GraphSource::parse("poisson:c=2").unwrap(), 6, 100_000, 20, 6).unwrap();
    let gap = emp
        .rows
        .iter()
        .map(|r| (r.lr.mean - theory.lr[r.t]).abs())
        .fold(0.0, f64::max);
    report("6", gap < 0.01, format!("max_t |lr_t - theory| = {gap:.2e} over t <= 6, tol 1e-2"));
}

#[test]
fn criterion_7_leaf_removal_identity() {
    let sources = ["er:c=0.5", "er:c=1", "er:c=2", "er:c=3", "er:c=5", "poisson:c=2", "poisson:c=4", "regular:d=3", "mixture:d=2"];
    let primes = default_primes();
    let fields: Vec<PrimeField> = primes.iter().map(|&p| PrimeField::new(p).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = Vec::new();
    for i in 0..1000u64 {
        let n = rng.random_range(1..=30);
        let mut spec = sources[i as usize % sources.len()].to_string();
        if let Some(c) = spec.strip_prefix("er:c=").map(|c| c.parse::<f64>().unwrap()) {
            spec = format!("er:c={}", c.min(n as f64 / 2.0));
        }
        let g = GraphSource::parse(&spec).unwrap().sample(n, 7, i).unwrap();
        let dim = (n - rational_rank_oracle(&g).unwrap()) as i64;
        let ks = karp_sipser(&g);
        let core_dim = if ks.core.n() == 0 { 0 } else { ks.core.n() - rational_rank_oracle(&ks.core).unwrap() } as i64;
        let primes_ok = fields.iter().all(|&f| rank_mod_p(&g, f) as i64 == n as i64 - dim);
        let cert = kernel_dim_exact(&g, &primes, true).unwrap();
        let ok = ks.lr_trace.iter().all(|&lr| dim >= lr)
            && dim == ks.lr() + core_dim
            && primes_ok
            && cert.primes_agree
            && cert.kernel_dim as i64 == dim;
        if !ok {
            failures.push(format!("{spec} n={n} idx={i}"));
        }
    }
    report("7", failures.is_empty(), format!("1000 graphs, failures: {failures:?}"));
}

/// `max M` and `M(x_0)` for `phi_*(x) = 3/4 x^3 + 1/4 x^27` from a grid scan
/// of the fixed points of the double-bar map.
fn mixture_three_oracle() -> (f64, f64) {
    let phi = |x: f64| 0.75 * x.powi(3) + 0.25 * x.powi(27);
    let dphi = |x: f64| 2.25 * x.powi(2) + 6.75 * x.powi(26);
    let bar = |x: f64| dphi(1.0 - x) / 9.0;
    let m = |x: f64| 9.0 * x * bar(x) + phi(1.0 - x) + phi(1.0 - bar(x)) - 1.0;
    let g = |x: f64| bar(bar(x)) - x;
    let mut roots = vec![];
    if g(0.0).abs() < 1e-15 {
        roots.push(0.0);
    }
    let steps = 200_000;
    for k in 0..steps {
        let (a, b) = (k as f64 / steps as f64, (k + 1) as f64 / steps as f64);
        if g(a) != 0.0 && g(b) != 0.0 && (g(a) > 0.0) != (g(b) > 0.0) {
            roots.push(bisect(g, a, b));
        } else if g(b) == 0.0 {
            roots.push(b);
        }
    }
    let max = roots.iter().map(|&x| m(x)).fold(f64::NEG_INFINITY, f64::max);
    (m(roots[0]), max)
}

#[test]
fn criterion_8_open_case_bracket() {
    let (m0, max) = mixture_three_oracle();
    let mut cfg = PipelineConfig::for_source("mixture:d=3");
    cfg.master_seed = 8;
    cfg.rde.enabled = false;
    cfg.spectral.enabled = false;
    cfg.simulation.n = 20_000;
    cfg.simulation.seeds = 10;
    let rep = run_pipeline(&cfg).unwrap();
    let sim = rep.simulation.as_ref().unwrap();
    let (lo, hi) = (rep.theory.m_first_extremum - 0.01, rep.theory.max_m + 0.01);
    let fr: Vec<f64> = sim.runs.iter().map(|r| r.kernel_fraction).collect();
    let inside = fr.iter().all(|&f| f >= lo && f <= hi);
    let theory_ok = (rep.theory.m_first_extremum - m0).abs() < 1e-9 && (rep.theory.max_m - max).abs() < 1e-9;
    report(
        "8",
        inside && theory_ok && rep.theory.point_prediction.is_none() && sim.runs.len() == 10,
        format!("bracket [{lo:.6}, {hi:.6}], per-seed fractions {:?}, no point value: {}", fr.iter().map(|f| format!("{f:.4}")).collect::<Vec<_>>(), rep.theory.point_prediction.is_none()),
    );
}

fn poisson_two_graph() -> Graph {
    GraphSource::parse("poisson:c=2").unwrap().sample(2000, 9, 0).unwrap()
}

#[test]
fn criterion_9a_spectral_density_shape() {
    let spectrum = symmetric_eigenvalues(&poisson_two_graph()).unwrap();
    let model = DegreeModel::parse("poisson:c=2").unwrap();
    let energies: Vec<f64> = (0..=300).map(|k| k as f64 * 0.02).collect();
    let density = resolvent_density(&model, &energies, 0.05, 12, 10_000, 9).unwrap();
    let gap = density.sup_cdf_gap(&spectrum).unwrap();
    report("9a", gap < 0.02, format!("sup gap of smoothed CDFs {gap:.4} tol 0.02 (eta 0.05, depth 12, 1e4 trees)"));
}

#[test]
fn criterion_9b_spectrum_symmetry() {
    let spectrum = symmetric_eigenvalues(&poisson_two_graph()).unwrap();
    let defect = spectrum.symmetry_defect();
    report("9b", defect < 1e-8, format!("max_i |lambda_i + lambda_(n+1-i)| = {defect:.3e} tol 1e-8"));
}

#[test]
fn criterion_10_h_bracket() {
    let model = DegreeModel::parse("poisson:c=2").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let depths = [2, 4, 6, 8, 10];
    let ts = [1e-1, 1e-2];
    let mut bad = 0;
    for _ in 0..1000 {
        let tree = sample_gwt(&model, 10, 1_000_000, &mut rng).unwrap();
        let h: Vec<Vec<f64>> = depths.iter().map(|&d| ts.iter().map(|&t| h_at_depth(&tree, t, d)).collect()).collect();
        let depth_ok = h.windows(2).all(|w| w[1].iter().zip(&w[0]).all(|(a, b)| *a <= *b + 1e-12));
        let t_ok = h.iter().all(|row| row[1] <= row[0] + 1e-12);
        if !(depth_ok && t_ok) {
            bad += 1;
        }
    }
    report("10", bad == 0, format!("1000 trees, depths {depths:?}, t {ts:?}: {bad} violations"));
}
