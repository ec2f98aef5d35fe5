//! Degree distributions with finite support.
//!
//! A [`DegreeModel`] is the law `F_*` of the root degree in the limiting
//! Galton-Watson tree. Its size-biased, shifted companion is the
//! [`OffspringModel`] `F`, with `F(k-1) = k F_*(k) / mean`. Both carry their
//! generating functions, evaluated by Horner's rule on a dense coefficient
//! vector.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const DEFAULT_DEGREE_CAP: usize = 10_000;
/// Tail mass at which infinite laws are cut off before renormalisation.
pub const TAIL_MASS: f64 = 1e-12;
/// Grid used by the log-concavity check of the second derivative.
pub const LOG_CONCAVITY_GRID: usize = 10_001;

#[derive(Clone, Debug, PartialEq)]
pub struct DegreeModel {
    pmf: Vec<f64>,
    mean: f64,
    second_moment: f64,
    label: String,
}

/// The offspring law of non-root vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct OffspringModel {
    pmf: Vec<f64>,
    mean: f64,
}

fn malformed(spec: &str, reason: impl Into<String>) -> Error {
    Error::ModelSpec {
        spec: spec.to_string(),
        reason: reason.into(),
    }
}

/// `sum_k pmf[k] * k^(order falling) * x^(k - order)` by Horner's rule.
fn horner(pmf: &[f64], x: f64, order: u32) -> f64 {
    let r = order as usize;
    if pmf.len() <= r {
        return 0.0;
    }
    let mut acc = 0.0;
    for k in (r..pmf.len()).rev() {
        let mut coeff = pmf[k];
        for j in 0..r {
            coeff *= (k - j) as f64;
        }
        acc = acc * x + coeff;
    }
    acc
}

fn moments(pmf: &[f64]) -> (f64, f64) {
    pmf.iter().enumerate().fold((0.0, 0.0), |(m1, m2), (k, &p)| {
        let k = k as f64;
        (m1 + k * p, m2 + k * k * p)
    })
}

impl DegreeModel {
    /// Builds a model from `(degree, weight)` pairs, summing duplicates and
    /// renormalising to total mass one.
    pub fn from_pmf<I>(pairs: I, cap: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let mut dense: Vec<f64> = Vec::new();
        for (k, p) in pairs {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "negative or non-finite probability {p} at degree {k}"
                )));
            }
            if k > cap {
                return Err(Error::DegreeCap { degree: k, cap });
            }
            if p == 0.0 {
                continue;
            }
            if dense.len() <= k {
                dense.resize(k + 1, 0.0);
            }
            dense[k] += p;
        }
        let total: f64 = dense.iter().sum();
        if dense.is_empty() || total <= 0.0 {
            return Err(Error::InvalidArgument("empty support".into()));
        }
        dense.iter_mut().for_each(|p| *p /= total);
        let (mean, second_moment) = moments(&dense);
        Ok(Self {
            pmf: dense,
            mean,
            second_moment,
            label: String::new(),
        })
    }

    pub fn regular(d: usize) -> Result<Self> {
        Self::from_pmf([(d, 1.0)], DEFAULT_DEGREE_CAP.max(d)).map(|m| m.labelled(format!("regular:d={d}")))
    }

    /// `phi_*(x) = d/(1+d) x^d + 1/(1+d) x^(d^3)`.
    pub fn mixture(d: usize, cap: usize) -> Result<Self> {
        let big = d
            .checked_pow(3)
            .ok_or(Error::DegreeCap { degree: usize::MAX, cap })?;
        let w = 1.0 / (1.0 + d as f64);
        Self::from_pmf([(d, d as f64 * w), (big, w)], cap)
            .map(|m| m.labelled(format!("mixture:d={d}")))
    }

    /// Poisson(c) truncated at the smallest `K` whose tail mass is below
    /// [`TAIL_MASS`], then renormalised.
    pub fn poisson(c: f64, cap: usize) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!("poisson rate must be > 0, got {c}")));
        }
        // Log-domain terms so that large rates do not underflow e^{-c}.
        let mut log_p = -c;
        let mut terms = vec![log_p.exp()];
        let mut k = 0usize;
        loop {
            k += 1;
            log_p += c.ln() - (k as f64).ln();
            let p = log_p.exp();
            terms.push(p);
            if (k as f64) > c && p < 1e-40 {
                break;
            }
            if k > cap + 1 {
                break;
            }
        }
        // tail[k] = sum_{j > k} p_j, accumulated from the far end.
        let mut tail = 0.0;
        let mut cut = terms.len() - 1;
        for k in (0..terms.len()).rev() {
            if tail >= TAIL_MASS {
                break;
            }
            cut = k;
            tail += terms[k];
        }
        // `cut` is the smallest K with sum_{j > K} p_j < TAIL_MASS.
        if cut > cap {
            return Err(Error::DegreeCap { degree: cut, cap });
        }
        terms.truncate(cut + 1);
        Self::from_pmf(terms.into_iter().enumerate(), cap).map(|m| m.labelled(format!("poisson:c={c}")))
    }

    /// Parses the model DSL: `poisson:c=<real>`, `regular:d=<int>`,
    /// `mixture:d=<int>` or `pmf:<k>:<p>,<k>:<p>,...`.
    pub fn parse(spec: &str) -> Result<Self> {
        Self::parse_with_cap(spec, DEFAULT_DEGREE_CAP)
    }

    pub fn parse_with_cap(spec: &str, cap: usize) -> Result<Self> {
        let spec = spec.trim();
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| malformed(spec, "expected `<family>:<parameters>`"))?;
        let param = |name: &str| -> Result<&str> {
            rest.strip_prefix(name)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| malformed(spec, format!("expected `{name}=<value>`")))
        };
        let model = match kind {
            "poisson" => {
                let c: f64 = param("c")?
                    .parse()
                    .map_err(|_| malformed(spec, "rate is not a number"))?;
                Self::poisson(c, cap)?
            }
            "regular" => {
                let d: usize = param("d")?
                    .parse()
                    .map_err(|_| malformed(spec, "degree is not a nonnegative integer"))?;
                Self::from_pmf([(d, 1.0)], cap)?.labelled(format!("regular:d={d}"))
            }
            "mixture" => {
                let d: usize = param("d")?
                    .parse()
                    .map_err(|_| malformed(spec, "degree is not a nonnegative integer"))?;
                Self::mixture(d, cap)?
            }
            "pmf" => {
                let mut pairs = Vec::new();
                for item in rest.split(',') {
                    let (k, p) = item
                        .split_once(':')
                        .ok_or_else(|| malformed(spec, format!("entry `{item}` is not `<k>:<p>`")))?;
                    let k: usize = k
                        .trim()
                        .parse()
                        .map_err(|_| malformed(spec, format!("degree `{k}` is not an integer")))?;
                    let p: f64 = p
                        .trim()
                        .parse()
                        .map_err(|_| malformed(spec, format!("probability `{p}` is not a number")))?;
                    if p < 0.0 {
                        return Err(malformed(spec, format!("negative probability {p}")));
                    }
                    pairs.push((k, p));
                }
                Self::from_pmf(pairs, cap).map_err(|e| match e {
                    Error::InvalidArgument(reason) => malformed(spec, reason),
                    other => other,
                })?
            }
            other => return Err(malformed(spec, format!("unknown family `{other}`"))),
        };
        Ok(model.labelled(spec.to_string()))
    }

    fn labelled(mut self, label: String) -> Self {
        self.label = label;
        self
    }

    /// The DSL string this model was built from, or empty for ad-hoc models.
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.pmf.get(k).copied().unwrap_or(0.0)
    }

    pub fn max_degree(&self) -> usize {
        self.pmf.len() - 1
    }

    /// Nonzero `(degree, probability)` entries in increasing degree order.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.pmf
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(k, &p)| (k, p))
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    /// `phi_*` and its first three derivatives at `x` in `[0, 1]`.
    pub fn gf(&self, x: f64, order: u32) -> f64 {
        debug_assert!((0.0..=1.0).contains(&x), "gf evaluated outside [0,1]: {x}");
        horner(&self.pmf, x, order)
    }

    /// `phi(x) = phi_*'(x) / phi_*'(1)`, the offspring generating function.
    pub fn offspring_gf(&self, x: f64) -> f64 {
        horner(&self.pmf, x, 1) / self.mean
    }

    pub fn size_biased(&self) -> Result<OffspringModel> {
        if !(self.mean > 0.0) {
            return Err(Error::DegenerateModel(
                "degree model has zero mean, size-biasing is undefined".into(),
            ));
        }
        let pmf: Vec<f64> = (1..self.pmf.len())
            .map(|k| k as f64 * self.pmf[k] / self.mean)
            .collect();
        let mean = moments(&pmf).0;
        Ok(OffspringModel { pmf, mean })
    }

    /// Checks log-concavity of `phi_*''` on [`LOG_CONCAVITY_GRID`] points via
    /// second differences of its logarithm.
    pub fn phi2_log_concavity(&self) -> LogConcavity {
        if self.pmf.len() < 3 || self.pmf[2..].iter().all(|&p| p == 0.0) {
            return LogConcavity::Vacuous;
        }
        let n = LOG_CONCAVITY_GRID;
        let h = 1.0 / (n - 1) as f64;
        let logs: Vec<f64> = (0..n)
            .map(|i| {
                let v = self.gf(i as f64 * h, 2);
                if v > 0.0 {
                    v.ln()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let mut worst = f64::NEG_INFINITY;
        let mut worst_x = 0.0;
        for i in 1..n - 1 {
            let (a, b, c) = (logs[i - 1], logs[i], logs[i + 1]);
            if !(a.is_finite() && b.is_finite() && c.is_finite()) {
                continue;
            }
            let second = a - 2.0 * b + c;
            if second > worst {
                worst = second;
                worst_x = i as f64 * h;
            }
            if second > LOG_CONCAVITY_TOL * (1.0 + b.abs()) {
                return LogConcavity::Violated {
                    first_violation: i as f64 * h,
                    second_difference: second,
                };
            }
        }
        LogConcavity::LogConcave {
            max_second_difference: worst,
            at: worst_x,
        }
    }
}

/// Slack on second differences of `log phi_*''`, relative to the log value.
const LOG_CONCAVITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum LogConcavity {
    LogConcave { max_second_difference: f64, at: f64 },
    Violated { first_violation: f64, second_difference: f64 },
    /// `phi_*'' == 0`: the support lies in `{0, 1}`.
    Vacuous,
}

impl LogConcavity {
    pub fn holds(&self) -> bool {
        matches!(self, LogConcavity::LogConcave { .. })
    }
}

impl fmt::Display for DegreeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.label.is_empty() {
            return f.write_str(&self.label);
        }
        f.write_str("pmf:")?;
        for (i, (k, p)) in self.support().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}:{p}")?;
        }
        Ok(())
    }
}

impl FromStr for DegreeModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

#[derive(Serialize, Deserialize)]
struct PmfJson {
    pmf: BTreeMap<usize, f64>,
}

impl Serialize for DegreeModel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PmfJson {
            pmf: self.support().collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DegreeModel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = PmfJson::deserialize(deserializer)?;
        let cap = raw.pmf.keys().max().copied().unwrap_or(0).max(DEFAULT_DEGREE_CAP);
        DegreeModel::from_pmf(raw.pmf, cap).map_err(serde::de::Error::custom)
    }
}

impl OffspringModel {
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.pmf.get(k).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `phi(x) = sum_k F(k) x^k`.
    pub fn gf(&self, x: f64) -> f64 {
        horner(&self.pmf, x, 0)
    }

    pub fn sampler(&self) -> DegreeSampler {
        DegreeSampler::new(&self.pmf)
    }
}

impl DegreeModel {
    pub fn sampler(&self) -> DegreeSampler {
        DegreeSampler::new(&self.pmf)
    }
}

/// Draws degrees from a finite pmf (alias method, constant time per draw).
#[derive(Clone, Debug)]
pub enum DegreeSampler {
    Point(usize),
    Alias(WeightedAliasIndex<f64>),
}

impl DegreeSampler {
    fn new(pmf: &[f64]) -> Self {
        let support: Vec<usize> = (0..pmf.len()).filter(|&k| pmf[k] > 0.0).collect();
        match support.as_slice() {
            [] => DegreeSampler::Point(0),
            [k] => DegreeSampler::Point(*k),
            _ => DegreeSampler::Alias(
                WeightedAliasIndex::new(pmf.to_vec()).expect("pmf has positive mass"),
            ),
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            DegreeSampler::Point(k) => *k,
            DegreeSampler::Alias(alias) => alias.sample(rng),
        }
    }
}
