//! Closed-form side: the variational function `M`, its historical records,
//! the Erdős–Rényi fixed point and the Karp–Sipser trajectory on the tree.
//!
//! With `xbar(x) = phi_*'(1-x) / phi_*'(1)`,
//!
//! ```text
//! M(x) = phi_*'(1) x xbar(x) + phi_*(1-x) + phi_*(1-xbar(x)) - 1
//! M'(x) = phi_*''(1-x) (xbar(xbar(x)) - x)
//! ```
//!
//! so the extrema of `M` sit at fixed points of the double-bar map.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::degree::DegreeModel;
use crate::error::{Error, Result};

/// Grid used when scanning for fixed points of the double-bar map.
pub const RECORD_GRID: usize = 100_001;
/// Bisection stops once the bracket is narrower than this.
pub const FIXED_POINT_TOL: f64 = 1e-12;
/// Two `M` values closer than this are treated as a tie.
pub const RECORD_SLACK: f64 = 1e-11;
/// `|xbar(xbar(x)) - x|` below this at a local minimum flags a tangential fixed point.
pub const TANGENT_TOL: f64 = 1e-8;

fn require_mean(model: &DegreeModel) -> Result<()> {
    if model.mean() > 0.0 {
        Ok(())
    } else {
        Err(Error::DegenerateModel(
            "M is undefined when phi_*'(1) = 0".into(),
        ))
    }
}

#[inline]
pub fn x_bar(model: &DegreeModel, x: f64) -> f64 {
    (model.gf((1.0 - x).clamp(0.0, 1.0), 1) / model.mean()).clamp(0.0, 1.0)
}

#[inline]
pub fn x_bar2(model: &DegreeModel, x: f64) -> f64 {
    x_bar(model, x_bar(model, x))
}

#[inline]
fn m_unchecked(model: &DegreeModel, x: f64) -> f64 {
    let xb = x_bar(model, x);
    model.mean() * x * xb + model.gf(1.0 - x, 0) + model.gf(1.0 - xb, 0) - 1.0
}

pub fn eval_m(model: &DegreeModel, x: f64) -> Result<f64> {
    require_mean(model)?;
    Ok(m_unchecked(model, x))
}

pub fn eval_m_prime(model: &DegreeModel, x: f64) -> Result<f64> {
    require_mean(model)?;
    Ok(model.gf(1.0 - x, 2) * (x_bar2(model, x) - x))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub xbar: f64,
    #[serde(rename = "Mprime")]
    pub m_prime: f64,
}

/// `M` sampled on a uniform grid of `[0, 1]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MCurve {
    pub points: Vec<CurvePoint>,
}

impl MCurve {
    pub fn compute(model: &DegreeModel, grid: usize) -> Result<Self> {
        require_mean(model)?;
        if grid < 2 {
            return Err(Error::InvalidArgument("curve grid needs at least 2 points".into()));
        }
        let h = 1.0 / (grid - 1) as f64;
        let points = (0..grid)
            .map(|i| {
                let x = if i + 1 == grid { 1.0 } else { i as f64 * h };
                CurvePoint {
                    x,
                    m: m_unchecked(model, x),
                    xbar: x_bar(model, x),
                    m_prime: model.gf(1.0 - x, 2) * (x_bar2(model, x) - x),
                }
            })
            .collect();
        Ok(Self { points })
    }

    pub fn max(&self) -> (f64, f64) {
        self.points
            .iter()
            .fold((f64::NAN, f64::NEG_INFINITY), |(ax, am), p| {
                if p.m > am {
                    (p.x, p.m)
                } else {
                    (ax, am)
                }
            })
    }

    /// Full table: `x,M,xbar,Mprime`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.points {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Two-column plot data: `x,M`.
    pub fn write_m_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "M"])?;
        for p in &self.points {
            w.write_record([p.x.to_string(), p.m.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Writes the `x,M` curve of `model` on `grid` points to `path`.
pub fn emit_m_curve(model: &DegreeModel, grid: usize, path: &Path) -> Result<MCurve> {
    let curve = MCurve::compute(model, grid)?;
    curve.write_m_csv(std::fs::File::create(path)?)?;
    Ok(curve)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub x: f64,
    #[serde(rename = "M")]
    pub m: f64,
    /// Found as a touching zero of `xbar(xbar(x)) - x` without a sign change.
    pub tangential: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecordSet {
    /// Every fixed point of the double-bar map that was located, ascending.
    pub fixed_points: Vec<FixedPoint>,
    /// Record locations `p_1 < ... < p_r`.
    pub locations: Vec<f64>,
    /// `M(p_i)`, strictly increasing.
    pub values: Vec<f64>,
    /// Fixed points whose `M` value ties the running maximum within [`RECORD_SLACK`].
    pub ambiguous: Vec<FixedPoint>,
    /// Location of the first local extremum (smallest fixed point).
    pub first_extremum: f64,
    pub m_first_extremum: f64,
    pub global_max: f64,
    pub global_argmax: f64,
    /// Support inside `{0, 1}`: `F = delta_0` and the only record sits at 1.
    pub degenerate: bool,
}

impl RecordSet {
    /// `M(x_0) == max M` within `tol`: the regime where a point prediction is
    /// available.
    pub fn first_is_global(&self, tol: f64) -> bool {
        (self.global_max - self.m_first_extremum).abs() <= tol
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    if f(hi) == 0.0 {
        return hi;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while b - a > tol {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    0.5 * (a + b)
}

pub fn find_records(model: &DegreeModel) -> Result<RecordSet> {
    find_records_with_grid(model, RECORD_GRID)
}

pub fn find_records_with_grid(model: &DegreeModel, grid: usize) -> Result<RecordSet> {
    require_mean(model)?;
    if model.prob(0) + model.prob(1) >= 1.0 - 1e-15 || model.max_degree() < 2 {
        let m = m_unchecked(model, 1.0);
        let fp = FixedPoint {
            x: 1.0,
            m,
            tangential: false,
        };
        return Ok(RecordSet {
            fixed_points: vec![fp],
            locations: vec![1.0],
            values: vec![m],
            ambiguous: vec![],
            first_extremum: 1.0,
            m_first_extremum: m,
            global_max: m,
            global_argmax: 1.0,
            degenerate: true,
        });
    }

    let h = 1.0 / (grid - 1) as f64;
    let xs: Vec<f64> = (0..grid)
        .map(|i| if i + 1 == grid { 1.0 } else { i as f64 * h })
        .collect();
    let g = |x: f64| x_bar2(model, x) - x;
    let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let ms: Vec<f64> = xs.iter().map(|&x| m_unchecked(model, x)).collect();

    let mut roots: Vec<(f64, bool)> = Vec::new();
    for i in 0..grid {
        if gs[i] == 0.0 {
            roots.push((xs[i], false));
        } else if i + 1 < grid && gs[i + 1] != 0.0 && (gs[i] > 0.0) != (gs[i + 1] > 0.0) {
            roots.push((bisect(g, xs[i], xs[i + 1], FIXED_POINT_TOL), false));
        }
    }
    // Touching zeros: local minima of |g| that never change sign.
    for i in 1..grid - 1 {
        let (a, b, c) = (gs[i - 1].abs(), gs[i].abs(), gs[i + 1].abs());
        let same_sign = (gs[i - 1] > 0.0) == (gs[i] > 0.0) && (gs[i] > 0.0) == (gs[i + 1] > 0.0);
        if b <= a && b <= c && b > 0.0 && same_sign {
            let x = golden_min(|x| g(x).abs(), xs[i - 1], xs[i + 1], FIXED_POINT_TOL);
            if g(x).abs() < TANGENT_TOL {
                roots.push((x, true));
            }
        }
    }
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));
    roots.dedup_by(|b, a| {
        if (b.0 - a.0).abs() < 10.0 * FIXED_POINT_TOL.max(h * 1e-3) {
            a.1 &= b.1;
            true
        } else {
            false
        }
    });

    let fixed_points: Vec<FixedPoint> = roots
        .iter()
        .map(|&(x, tangential)| FixedPoint {
            x,
            m: m_unchecked(model, x),
            tangential,
        })
        .collect();
    if fixed_points.is_empty() {
        // x -> xbar(xbar(x)) maps [0,1] into itself, so this cannot happen for a valid model.
        return Err(Error::DegenerateModel("no fixed point of the double-bar map".into()));
    }

    let mut locations = Vec::new();
    let mut values = Vec::new();
    let mut ambiguous = Vec::new();
    // Interior extrema of M are fixed points, so the supremum of M over
    // [0, x) is the larger of M(0) and M at the earlier fixed points.
    let mut running = if fixed_points[0].x > 0.0 { ms[0] } else { f64::NEG_INFINITY };
    for fp in &fixed_points {
        if fp.m > running + RECORD_SLACK {
            locations.push(fp.x);
            values.push(fp.m);
        } else if (fp.m - running).abs() <= RECORD_SLACK {
            ambiguous.push(*fp);
        }
        running = running.max(fp.m);
    }

    let (mut global_argmax, mut global_max) = (f64::NAN, f64::NEG_INFINITY);
    for (&x, &m) in xs.iter().zip(&ms).chain(fixed_points.iter().map(|p| (&p.x, &p.m))) {
        if m > global_max {
            global_max = m;
            global_argmax = x;
        }
    }
    // The maximum is attained at a fixed point; report it there when the grid
    // value is within slack of it.
    if let Some(best) = fixed_points
        .iter()
        .filter(|p| p.m >= global_max - RECORD_SLACK)
        .min_by(|a, b| a.x.total_cmp(&b.x))
    {
        global_argmax = best.x;
        global_max = global_max.max(best.m);
    }

    let first = fixed_points[0];
    Ok(RecordSet {
        locations,
        values,
        ambiguous,
        first_extremum: first.x,
        m_first_extremum: first.m,
        global_max,
        global_argmax,
        degenerate: false,
        fixed_points,
    })
}

/// Solution of the Erdős–Rényi equation `q = exp(-c exp(-c q))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErQ {
    pub c: f64,
    pub q: f64,
    /// `q + e^{-cq} + c q e^{-cq} - 1`, the limiting kernel fraction.
    pub kernel_mass: f64,
    pub iterations: usize,
}

const ER_MAX_ITERS: usize = 10_000_000;

/// Smallest root of `q = exp(-c exp(-c q))` by monotone iteration from 0,
/// polished by bisection (the iteration crawls near the tangential case c = e).
pub fn er_q(c: f64) -> Result<ErQ> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidArgument(format!("er_q needs c > 0, got {c}")));
    }
    let map = |q: f64| (-c * (-c * q).exp()).exp();
    let mut q = 0.0f64;
    let mut iterations = 0;
    while iterations < ER_MAX_ITERS {
        let next = map(q);
        iterations += 1;
        let done = (next - q).abs() < 1e-14;
        q = next;
        if done {
            break;
        }
    }
    // Iterates from 0 stay below the smallest root; step up to bracket it.
    let g = |x: f64| map(x) - x;
    if g(q) > 0.0 {
        let mut step = 1e-12;
        let mut hi = q + step;
        while hi < 1.0 && g(hi) > 0.0 {
            step *= 2.0;
            hi = (q + step).min(1.0);
        }
        if g(hi) <= 0.0 {
            q = bisect(g, q, hi, 1e-16);
        }
    }
    let e = (-c * q).exp();
    Ok(ErQ {
        c,
        q,
        kernel_mass: q + e + c * q * e - 1.0,
        iterations,
    })
}

/// Tree-level Karp–Sipser probabilities.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KsTrajectory {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// `P(root in A_t) - P(root in B_t)`.
    pub lr: Vec<f64>,
    pub p_a: Vec<f64>,
    pub p_b: Vec<f64>,
}

pub fn ks_trajectory(model: &DegreeModel, rounds: usize) -> Result<KsTrajectory> {
    require_mean(model)?;
    let phi = |x: f64| model.offspring_gf(x.clamp(0.0, 1.0));
    let mut alpha = vec![0.0];
    let mut beta = vec![(1.0 - phi(1.0)).clamp(0.0, 1.0)];
    let mut p_a = vec![model.prob(0)];
    let mut p_b = vec![0.0];
    for t in 1..=rounds {
        let a = phi(1.0 - phi(1.0 - alpha[t - 1])).clamp(0.0, 1.0);
        let b_prev = beta[t - 1];
        let pa = model.gf(b_prev, 0) + (1.0 - b_prev - a) * model.gf(b_prev, 1);
        let pb = 1.0 - model.gf(1.0 - a, 0) - a * model.gf(b_prev, 1);
        alpha.push(a);
        beta.push((1.0 - phi(1.0 - a)).clamp(0.0, 1.0));
        p_a.push(pa);
        p_b.push(pb);
    }
    let lr = p_a.iter().zip(&p_b).map(|(a, b)| a - b).collect();
    Ok(KsTrajectory {
        alpha,
        beta,
        lr,
        p_a,
        p_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(s: &str) -> DegreeModel {
        DegreeModel::parse(s).unwrap()
    }

    /// Omega: the root of x e^x = 1, by plain bisection.
    fn omega() -> f64 {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() < 1.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        lo
    }

    #[test]
    fn m_endpoints_regular() {
        let m = model("regular:d=3");
        assert_eq!(eval_m(&m, 0.0).unwrap(), 0.0);
        assert_eq!(eval_m(&m, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn m_constant_on_leafy_support() {
        let m = model("pmf:0:0.3,1:0.7");
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((eval_m(&m, x).unwrap() - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_model_errors() {
        let m = model("regular:d=0");
        assert!(eval_m(&m, 0.5).is_err());
        assert!(find_records(&m).is_err());
    }

    #[test]
    fn regular_records_cubic_oracle() {
        // Fixed points of x = (1-(1-x)^2)^2: roots of (x-1)(x^2-3x+1) and 0.
        let interior = (3.0 - 5f64.sqrt()) / 2.0;
        let r = find_records(&model("regular:d=3")).unwrap();
        let xs: Vec<f64> = r.fixed_points.iter().map(|p| p.x).collect();
        assert_eq!(xs.len(), 3, "{xs:?}");
        assert!(xs[0].abs() < 1e-12);
        assert!((xs[1] - interior).abs() < 1e-10);
        assert!((xs[2] - 1.0).abs() < 1e-12);
        assert_eq!(r.locations, vec![0.0]);
        assert_eq!(r.values, vec![0.0]);
        assert_eq!(r.first_extremum, 0.0);
        assert!(r.global_max.abs() < 1e-10);
        assert!(r.fixed_points[1].m < 0.0);
    }

    #[test]
    fn poisson_one_single_record_at_omega() {
        let w = omega();
        let r = find_records(&model("poisson:c=1")).unwrap();
        assert_eq!(r.locations.len(), 1);
        assert!((r.locations[0] - w).abs() < 1e-9, "{:?}", r.locations);
        assert!((r.global_max - (w * w + 2.0 * w - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn mixture_has_two_records() {
        let r = find_records(&model("mixture:d=3")).unwrap();
        assert_eq!(r.locations.len(), 2, "{r:?}");
        assert!(r.values[0] < r.values[1]);
        assert!(r.values[1] > 0.0);
        assert_eq!(r.first_extremum, 0.0);
        assert!(!r.first_is_global(1e-9));
        for &p in &r.locations {
            assert!((x_bar2(&model("mixture:d=3"), p) - p).abs() < 1e-10);
        }
    }

    #[test]
    fn er_q_examples() {
        let w = omega();
        let q = er_q(1.0).unwrap();
        assert!((q.q - w).abs() < 1e-12);
        assert!((q.kernel_mass - (w * w + 2.0 * w - 1.0)).abs() < 1e-12);
        let tiny = er_q(1e-6).unwrap();
        assert!((tiny.q - 1.0).abs() < 1e-5 && (tiny.kernel_mass - 1.0).abs() < 1e-5);
        assert!(er_q(0.0).is_err());
    }

    #[test]
    fn er_kernel_mass_equals_max_m() {
        for c in [0.5, 1.0, 2.0, std::f64::consts::E, 3.0, 5.0] {
            let q = er_q(c).unwrap();
            let r = find_records(&DegreeModel::poisson(c, 10_000).unwrap()).unwrap();
            assert!(
                (q.kernel_mass - r.global_max).abs() < 1e-9,
                "c={c}: {} vs {}",
                q.kernel_mass,
                r.global_max
            );
        }
    }

    #[test]
    fn ks_trajectory_examples() {
        let t = ks_trajectory(&model("regular:d=3"), 10).unwrap();
        assert!(t.alpha.iter().all(|&a| a == 0.0));
        assert!(t.lr.iter().all(|&l| l == 0.0));

        let t = ks_trajectory(&model("poisson:c=1"), 200).unwrap();
        assert!((t.alpha[200] - omega()).abs() < 1e-10);
    }

    #[test]
    fn ks_limit_is_m_at_first_extremum() {
        for spec in ["poisson:c=1", "poisson:c=2", "poisson:c=4", "pmf:1:0.3,3:0.7", "mixture:d=3", "regular:d=3"] {
            let m = model(spec);
            let r = find_records(&m).unwrap();
            let t = ks_trajectory(&m, 5000).unwrap();
            let last = *t.lr.last().unwrap();
            assert!(
                (last - r.m_first_extremum).abs() < 1e-9,
                "{spec}: lr {last} vs M(x0) {}",
                r.m_first_extremum
            );
            assert!((t.alpha.last().unwrap() - r.first_extremum).abs() < 1e-9);
        }
    }

    #[test]
    fn m_prime_matches_finite_difference() {
        let m = model("mixture:d=3");
        for i in 1..100 {
            let x = i as f64 / 100.0;
            let h = 1e-6;
            let fd = (eval_m(&m, x + h).unwrap() - eval_m(&m, x - h).unwrap()) / (2.0 * h);
            assert!((fd - eval_m_prime(&m, x).unwrap()).abs() < 1e-5, "x={x}");
        }
    }
}
