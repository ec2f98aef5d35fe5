//! Dense symmetric eigenvalues: Householder reduction to tridiagonal form,
//! then implicit-shift QL.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;

pub const DEFAULT_DENSE_CAP: usize = 4000;

/// Eigenvalues of a graph's adjacency matrix with a few derived views.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumSummary {
    pub n: usize,
    /// Sorted ascending.
    pub eigenvalues: Vec<f64>,
    pub spectral_radius: f64,
    pub kernel_tol: f64,
    /// Eigenvalues with `|lambda| < kernel_tol`.
    pub numerical_kernel: usize,
}

impl SpectrumSummary {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        let spectral_radius = eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let kernel_tol = 1e-8 * spectral_radius.max(1.0);
        let numerical_kernel = eigenvalues.iter().filter(|x| x.abs() < kernel_tol).count();
        Self {
            n: eigenvalues.len(),
            eigenvalues,
            spectral_radius,
            kernel_tol,
            numerical_kernel,
        }
    }

    /// `mu_n((-inf, t])`.
    pub fn cdf(&self, t: f64) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.eigenvalues.partition_point(|&x| x <= t) as f64 / self.n as f64
    }

    /// CDF of `mu_n` convolved with the Cauchy law of width `eta`.
    pub fn smoothed_cdf(&self, t: f64, eta: f64) -> f64 {
        let s: f64 = self
            .eigenvalues
            .iter()
            .map(|&l| 0.5 + ((t - l) / eta).atan() / std::f64::consts::PI)
            .sum();
        s / self.n as f64
    }

    /// Density of `mu_n` convolved with the Cauchy law of width `eta`.
    pub fn smoothed_density(&self, t: f64, eta: f64) -> f64 {
        let s: f64 = self.eigenvalues.iter().map(|&l| eta / ((t - l).powi(2) + eta * eta)).sum();
        s / (std::f64::consts::PI * self.n as f64)
    }

    /// Counts over `bins` equal-width bins on `[lo, hi)`; values outside are dropped.
    pub fn histogram(&self, lo: f64, hi: f64, bins: usize) -> Vec<usize> {
        let mut h = vec![0; bins];
        let width = (hi - lo) / bins as f64;
        for &x in &self.eigenvalues {
            if x >= lo && x < hi {
                h[(((x - lo) / width) as usize).min(bins - 1)] += 1;
            }
        }
        h
    }

    /// `max_i |lambda_i + lambda_{n+1-i}|`; zero for a symmetric spectrum.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n;
        (0..n / 2 + n % 2)
            .map(|i| (self.eigenvalues[i] + self.eigenvalues[n - 1 - i]).abs())
            .fold(0.0, f64::max)
    }
}

/// Eigenvalues of the adjacency matrix of `g`, `n <= cap`.
pub fn symmetric_eigenvalues_capped(g: &Graph, cap: usize) -> Result<SpectrumSummary> {
    let n = g.n();
    if n > cap {
        return Err(Error::SizeGuard {
            what: "dense eigensolver dimension",
            size: n,
            cap,
        });
    }
    let mut a = vec![0.0; n * n];
    for (u, v) in g.edges() {
        a[u * n + v] = 1.0;
        a[v * n + u] = 1.0;
    }
    Ok(SpectrumSummary::from_eigenvalues(eigenvalues_symmetric(a, n)))
}

pub fn symmetric_eigenvalues(g: &Graph) -> Result<SpectrumSummary> {
    symmetric_eigenvalues_capped(g, DEFAULT_DENSE_CAP)
}

/// Eigenvalues (unsorted) of a symmetric `n x n` row-major matrix. Only the
/// lower triangle is read.
pub fn eigenvalues_symmetric(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Vec::new();
    }
    let (mut d, mut e) = tridiagonalize(&mut a, n);
    tql(&mut d, &mut e);
    d
}

/// Householder reduction of the lower triangle; returns the diagonal and the
/// subdiagonal (`e[i]` couples `i - 1` and `i`, `e[0] = 0`).
fn tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut e = vec![0.0; n];
    let mut p = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let row = i * n;
        if l == 0 {
            e[i] = a[row];
            continue;
        }
        let scale: f64 = a[row..=row + l].iter().map(|x| x.abs()).sum();
        if scale == 0.0 {
            e[i] = a[row + l];
            continue;
        }
        let mut h = 0.0;
        for k in 0..=l {
            a[row + k] /= scale;
            h += a[row + k] * a[row + k];
        }
        let f = a[row + l];
        let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
        e[i] = scale * g;
        h -= f * g;
        a[row + l] = f - g;
        let u: Vec<f64> = a[row..=row + l].to_vec();

        // p = A u / h over the leading (l+1) block, reading the lower triangle by rows.
        p[..=l].fill(0.0);
        for j in 0..=l {
            let rj = &a[j * n..j * n + j + 1];
            let uj = u[j];
            let mut acc = 0.0;
            for k in 0..j {
                acc += rj[k] * u[k];
                p[k] += rj[k] * uj;
            }
            p[j] += acc + rj[j] * uj;
        }
        let mut f = 0.0;
        for j in 0..=l {
            p[j] /= h;
            f += p[j] * u[j];
        }
        let hh = f / (h + h);
        for j in 0..=l {
            p[j] -= hh * u[j];
        }
        // A <- A - u p^T - p u^T on the lower triangle.
        for j in 0..=l {
            let (uj, pj) = (u[j], p[j]);
            let rj = &mut a[j * n..j * n + j + 1];
            for k in 0..=j {
                rj[k] -= uj * p[k] + pj * u[k];
            }
        }
    }
    let d = (0..n).map(|i| a[i * n + i]).collect();
    (d, e)
}

/// Implicit-shift QL on a symmetric tridiagonal matrix; `d` receives the eigenvalues.
fn tql(d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            assert!(iterations <= 200, "QL iteration failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}
