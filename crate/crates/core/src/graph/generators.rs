use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::degree::DegreeModel;
use crate::error::{Error, Result};
use crate::rng::{self, TAG_GRAPH};

/// G(n, c/n) by geometric skipping over the lower-triangular pair sequence,
/// `O(n + |E|)`.
pub fn gen_erdos_renyi<R: Rng + ?Sized>(n: usize, c: f64, rng: &mut R) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if n == 1 {
        return Ok(Graph::empty(1));
    }
    let p = c / n as f64;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("need 0 < c < n, got c={c}, n={n}")));
    }
    let log_q = (1.0 - p).ln();
    let mut edges = Vec::with_capacity((c * n as f64 * 0.55) as usize + 16);
    let (mut v, mut w): (usize, i64) = (1, -1);
    while v < n {
        let r: f64 = rng.random();
        let skip = ((1.0 - r).ln() / log_q).floor();
        w += 1 + if skip.is_finite() { skip as i64 } else { i64::MAX / 4 };
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            edges.push((v, w as usize));
        }
    }
    Ok(Graph::from_edges(n, edges))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationStats {
    /// Degree sequence before matching (after the parity fix).
    pub drawn_degree_sum: usize,
    pub erased_loops: usize,
    pub erased_multi_edges: usize,
    /// `histogram[k]` = number of vertices with realised degree `k`.
    pub realized_histogram: Vec<usize>,
}

/// Erased configuration model: i.i.d. degrees from `F_*`, uniform half-edge
/// matching, then self-loops and repeated edges deleted.
pub fn gen_configuration<R: Rng + ?Sized>(
    n: usize,
    model: &DegreeModel,
    rng: &mut R,
) -> Result<(Graph, ConfigurationStats)> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let sampler = model.sampler();
    let mut degrees: Vec<usize> = (0..n).map(|_| sampler.sample(rng)).collect();
    if degrees.iter().sum::<usize>() % 2 == 1 {
        degrees[n - 1] += 1;
    }
    let total: usize = degrees.iter().sum();
    let mut stubs: Vec<u32> = Vec::with_capacity(total);
    for (v, &d) in degrees.iter().enumerate() {
        stubs.extend(std::iter::repeat_n(v as u32, d));
    }
    stubs.shuffle(rng);
    let mut loops = 0;
    let mut pairs = Vec::with_capacity(total / 2);
    for pair in stubs.chunks_exact(2) {
        let (u, v) = (pair[0] as usize, pair[1] as usize);
        if u == v {
            loops += 1;
        } else {
            pairs.push((u.min(v), u.max(v)));
        }
    }
    let kept = pairs.len();
    let g = Graph::from_edges(n, pairs);
    let mut hist = vec![0usize; 1];
    for v in 0..n {
        let d = g.degree(v);
        if hist.len() <= d {
            hist.resize(d + 1, 0);
        }
        hist[d] += 1;
    }
    let stats = ConfigurationStats {
        drawn_degree_sum: total,
        erased_loops: loops,
        erased_multi_edges: kept - g.edge_count(),
        realized_histogram: hist,
    };
    Ok((g, stats))
}

/// A random graph family: `er:c=<c>` or any degree-model spec (configuration model).
#[derive(Clone, Debug, PartialEq)]
pub enum GraphSource {
    ErdosRenyi { c: f64 },
    Configuration(DegreeModel),
}

impl GraphSource {
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if let Some(rest) = spec.strip_prefix("er:") {
            let c = rest.strip_prefix("c=").unwrap_or(rest);
            let c: f64 = c.parse().map_err(|_| Error::ModelSpec {
                spec: spec.into(),
                reason: "expected `er:c=<real>`".into(),
            })?;
            if !(c > 0.0) {
                return Err(Error::ModelSpec {
                    spec: spec.into(),
                    reason: "rate must be positive".into(),
                });
            }
            return Ok(GraphSource::ErdosRenyi { c });
        }
        DegreeModel::parse(spec).map(GraphSource::Configuration)
    }

    /// Limiting degree law `F_*` (Poisson for Erdős–Rényi).
    pub fn degree_model(&self) -> Result<DegreeModel> {
        match self {
            GraphSource::ErdosRenyi { c } => DegreeModel::poisson(*c, crate::degree::DEFAULT_DEGREE_CAP),
            GraphSource::Configuration(m) => Ok(m.clone()),
        }
    }

    /// Graph number `index` of a seeded family of instances.
    pub fn sample(&self, n: usize, seed: u64, index: u64) -> Result<Graph> {
        let mut rng = rng::stream(seed, &[TAG_GRAPH, index]);
        match self {
            GraphSource::ErdosRenyi { c } => gen_erdos_renyi(n, *c, &mut rng),
            GraphSource::Configuration(m) => gen_configuration(n, m, &mut rng).map(|(g, _)| g),
        }
    }
}

impl fmt::Display for GraphSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSource::ErdosRenyi { c } => write!(f, "er:c={c}"),
            GraphSource::Configuration(m) => write!(f, "{m}"),
        }
    }
}

impl FromStr for GraphSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn er_single_vertex() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(gen_erdos_renyi(1, 0.5, &mut rng).unwrap().edge_count(), 0);
        assert!(gen_erdos_renyi(10, 10.0, &mut rng).is_err());
    }

    #[test]
    fn er_edge_count_binomial_mean() {
        let (n, c) = (100_000usize, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = gen_erdos_renyi(n, c, &mut rng).unwrap();
        let pairs = (n * (n - 1) / 2) as f64;
        let p = c / n as f64;
        let (mean, sd) = (pairs * p, (pairs * p * (1.0 - p)).sqrt());
        assert!((g.edge_count() as f64 - mean).abs() < 4.0 * sd, "{} vs {mean}", g.edge_count());
    }

    #[test]
    fn two_regular_gives_cycles() {
        let m = DegreeModel::parse("regular:d=2").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (g, stats) = gen_configuration(5000, &m, &mut rng).unwrap();
        assert_eq!(stats.drawn_degree_sum, 10_000);
        assert!(g.degrees().iter().all(|&d| d <= 2));
        // Components of a max-degree-2 graph with few erasures are mostly cycles.
        let deg2 = g.degrees().iter().filter(|&&d| d == 2).count();
        assert!(deg2 as f64 > 0.99 * 5000.0);
    }

    #[test]
    fn regular_three_realised_degrees() {
        let m = DegreeModel::parse("regular:d=3").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (g, stats) = gen_configuration(10_000, &m, &mut rng).unwrap();
        let exact = stats.realized_histogram.get(3).copied().unwrap_or(0);
        assert!(exact as f64 >= 0.99 * 10_000.0);
        assert_eq!(g.n(), 10_000);
    }

    #[test]
    fn mixture_realised_histogram_close() {
        let m = DegreeModel::parse("mixture:d=3").unwrap();
        // Erasures hit degree-27 vertices at rate about 27*26/2 * E[D(D-1)] / (E[D]^2 n),
        // which puts the distance near 0.02 at n = 10^4; at 5 * 10^4 it is below 0.005.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 50_000;
        let (_, stats) = gen_configuration(n, &m, &mut rng).unwrap();
        let mut tv = 0.0;
        for (k, &count) in stats.realized_histogram.iter().enumerate() {
            tv += (count as f64 / n as f64 - m.prob(k)).abs();
        }
        tv += (27..=m.max_degree()).filter(|&k| k >= stats.realized_histogram.len()).map(|k| m.prob(k)).sum::<f64>();
        assert!(tv / 2.0 < 0.01, "tv = {}", tv / 2.0);
    }

    #[test]
    fn source_parsing() {
        assert_eq!(GraphSource::parse("er:c=2").unwrap(), GraphSource::ErdosRenyi { c: 2.0 });
        assert_eq!(GraphSource::parse("er:1.5").unwrap(), GraphSource::ErdosRenyi { c: 1.5 });
        assert!(matches!(GraphSource::parse("regular:d=3").unwrap(), GraphSource::Configuration(_)));
        assert!(GraphSource::parse("er:c=-1").is_err());
    }
}
