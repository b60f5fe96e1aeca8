//! Box-constrained Nelder-Mead with deterministic multi-starts.
//!
//! Starts are drawn from a Halton sequence over the box and run in parallel;
//! the reduction is order-independent so results do not depend on thread count.

use rayon::prelude::*;

use crate::error::{PnesError, Result};

const PENALTY: f64 = 1e6;
const TIE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(PnesError::InvalidParameter(
                "bounds must be non-empty and equal length".into(),
            ));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite())
        {
            return Err(PnesError::InvalidParameter(
                "every lower bound must be below its upper bound".into(),
            ));
        }
        Ok(Bounds { lo, hi })
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lo
    }

    pub fn upper(&self) -> &[f64] {
        &self.hi
    }

    fn width(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }

    /// Squared distance outside the box (zero inside) and the clamped point.
    fn clamp(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut d = 0.0;
        let c = x
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let cv = v.clamp(self.lo[i], self.hi[i]);
                d += (v - cv) * (v - cv);
                cv
            })
            .collect();
        (d, c)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub starts: usize,
    /// Evaluation budget per start.
    pub max_evals: usize,
    /// Converged when the spread of simplex values drops below this.
    pub f_tol: f64,
    /// ... and the simplex diameter below this.
    pub x_tol: f64,
    /// Initial simplex edge as a fraction of the box width.
    pub step: f64,
    /// Fresh simplices built around the best point after convergence.
    pub restarts: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            starts: 16,
            max_evals: 20_000,
            f_tol: 1e-13,
            x_tol: 1e-9,
            step: 0.1,
            restarts: 3,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OptimizerTrace {
    /// Index of the winning start.
    pub start: usize,
    pub evaluations: usize,
    pub iterations: usize,
    /// Best value after each iteration of the winning start.
    pub best_values: Vec<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub trace: OptimizerTrace,
}

const PRIMES: [u64; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let b = base as f64;
    let mut f = 1.0 / b;
    let mut out = 0.0;
    while k > 0 {
        out += (k % base) as f64 * f;
        k /= base;
        f /= b;
    }
    out
}

/// k-th point (k >= 1) of the Halton sequence in [0, 1)^dim.
pub fn halton(k: u64, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|i| {
            let base = PRIMES.get(i).copied().unwrap_or_else(|| nth_prime(i));
            radical_inverse(k, base)
        })
        .collect()
}

fn nth_prime(i: usize) -> u64 {
    let mut found = 0;
    let mut n = 1u64;
    loop {
        n += 1;
        if (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0) {
            if found == i {
                return n;
            }
            found += 1;
        }
    }
}

struct Run<'a, F> {
    f: &'a F,
    bounds: &'a Bounds,
    evals: usize,
}

impl<F: Fn(&[f64]) -> f64> Run<'_, F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let (d, c) = self.bounds.clamp(x);
        let v = (self.f)(&c);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if d > 0.0 {
            v + PENALTY * (1.0 + d)
        } else {
            v
        }
    }
}

fn centroid(pts: &[Vec<f64>], skip: usize) -> Vec<f64> {
    let n = pts[0].len();
    let mut c = vec![0.0; n];
    for (k, p) in pts.iter().enumerate() {
        if k != skip {
            c.iter_mut().zip(p).for_each(|(a, b)| *a += b);
        }
    }
    let m = (pts.len() - 1) as f64;
    c.iter_mut().for_each(|a| *a /= m);
    c
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

fn nelder_mead<F: Fn(&[f64]) -> f64>(
    run: &mut Run<'_, F>,
    x0: &[f64],
    step: f64,
    cfg: &OptimizerConfig,
    history: &mut Vec<f64>,
) -> (Vec<f64>, f64, bool) {
    let n = x0.len();
    let nf = n.max(2) as f64;
    // adaptive coefficients (standard ones for n <= 2)
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);
    let mut pts = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        let h = step * run.bounds.width(i);
        p[i] = if p[i] + h <= run.bounds.hi[i] {
            p[i] + h
        } else {
            p[i] - h
        };
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| run.eval(p)).collect();
    let mut converged = false;
    while run.evals < cfg.max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| {
            vals[a].total_cmp(&vals[b]).then_with(|| {
                pts[a]
                    .partial_cmp(&pts[b])
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        });
        pts = order.iter().map(|&k| pts[k].clone()).collect();
        vals = order.iter().map(|&k| vals[k]).collect();
        history.push(vals[0]);
        let spread = vals[n] - vals[0];
        let diam = pts[1..]
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&pts[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread.abs() <= cfg.f_tol && diam <= cfg.x_tol.max(1e-15) {
            converged = true;
            break;
        }
        if diam < 1e-15 {
            converged = spread.abs() <= cfg.f_tol;
            break;
        }
        let c = centroid(&pts, n);
        let xr = lerp(&c, &pts[n], -alpha);
        let fr = run.eval(&xr);
        if fr < vals[0] {
            let xe = lerp(&c, &pts[n], -beta);
            let fe = run.eval(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let x = lerp(&c, &pts[n], -gamma);
                let f = run.eval(&x);
                (x, f)
            } else {
                let x = lerp(&c, &pts[n], gamma);
                let f = run.eval(&x);
                (x, f)
            };
            if fc < vals[n].min(fr) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for k in 1..=n {
                    pts[k] = lerp(&pts[0], &pts[k], delta);
                    vals[k] = run.eval(&pts[k]);
                }
            }
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .unwrap_or(0);
    (pts[best].clone(), vals[best], converged)
}

fn one_start<F: Fn(&[f64]) -> f64>(
    f: &F,
    bounds: &Bounds,
    cfg: &OptimizerConfig,
    start: usize,
    x0: Vec<f64>,
) -> Minimum {
    let mut run = Run {
        f,
        bounds,
        evals: 0,
    };
    let mut history = Vec::new();
    let (mut x, mut v, mut conv) = nelder_mead(&mut run, &x0, cfg.step, cfg, &mut history);
    let mut step = cfg.step;
    for _ in 0..cfg.restarts {
        if run.evals >= cfg.max_evals {
            break;
        }
        step *= 0.25;
        let (x2, v2, c2) = nelder_mead(&mut run, &x, step, cfg, &mut history);
        let improved = v2 < v - cfg.f_tol;
        if v2 <= v {
            x = x2;
            v = v2;
            conv = c2;
        }
        if !improved {
            break;
        }
    }
    let (_, x) = bounds.clamp(&x);
    Minimum {
        x,
        value: v,
        trace: OptimizerTrace {
            start,
            evaluations: run.evals,
            iterations: history.len(),
            best_values: history,
            converged: conv,
        },
    }
}

fn better(a: &Minimum, b: &Minimum) -> bool {
    if (a.value - b.value).abs() <= TIE {
        a.x.partial_cmp(&b.x) == Some(std::cmp::Ordering::Less)
    } else {
        a.value < b.value
    }
}

/// Multi-start starting points: Halton points k = 1..=starts scaled into the box.
pub fn start_points(bounds: &Bounds, starts: usize) -> Vec<Vec<f64>> {
    (1..=starts as u64)
        .map(|k| {
            halton(k, bounds.dim())
                .iter()
                .enumerate()
                .map(|(i, u)| bounds.lo[i] + u * bounds.width(i))
                .collect()
        })
        .collect()
}

/// Minimize `f` over the box. Points outside the box are scored at the clamped
/// point plus a large penalty. Only the winning start's trace is kept.
pub fn minimize<F>(f: F, bounds: &Bounds, cfg: &OptimizerConfig) -> Result<Minimum>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    minimize_from(f, bounds, cfg, start_points(bounds, cfg.starts.max(1)))
}

/// Same as [`minimize`] but with caller-supplied starting points.
pub fn minimize_from<F>(
    f: F,
    bounds: &Bounds,
    cfg: &OptimizerConfig,
    starts: Vec<Vec<f64>>,
) -> Result<Minimum>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if starts.is_empty() || starts.iter().any(|s| s.len() != bounds.dim()) {
        return Err(PnesError::InvalidParameter(
            "starting points do not match bounds".into(),
        ));
    }
    let results: Vec<Minimum> = starts
        .into_par_iter()
        .enumerate()
        .map(|(k, x0)| one_start(&f, bounds, cfg, k, x0))
        .collect();
    all_minima_best(results).ok_or_else(|| PnesError::InvalidParameter("no starts".into()))
}

fn all_minima_best(results: Vec<Minimum>) -> Option<Minimum> {
    let mut best: Option<Minimum> = None;
    for m in results {
        if best.as_ref().map_or(true, |b| better(&m, b)) {
            best = Some(m);
        }
    }
    best
}

/// Every start's local minimum, in start order.
pub fn minimize_all<F>(f: F, bounds: &Bounds, cfg: &OptimizerConfig) -> Result<Vec<Minimum>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let starts = start_points(bounds, cfg.starts.max(1));
    Ok(starts
        .into_par_iter()
        .enumerate()
        .map(|(k, x0)| one_start(&f, bounds, cfg, k, x0))
        .collect())
}

/// Hyperspherical angles (each in [0, pi/2]) to unit vectors with N+1 nonnegative entries:
/// c0 = cos a1, c1 = sin a1 cos a2, ..., cN = sin a1 ... sin aN.
pub fn sphere_to_coefficients(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len() + 1);
    let mut prod = 1.0;
    for &a in angles {
        out.push(prod * a.cos());
        prod *= a.sin();
    }
    out.push(prod);
    out
}

/// Inverse of [`sphere_to_coefficients`] for nonnegative unit vectors.
pub fn coefficients_to_sphere(c: &[f64]) -> Vec<f64> {
    let n = c.len().saturating_sub(1);
    (0..n)
        .map(|k| {
            let tail: f64 = c[k + 1..].iter().map(|x| x * x).sum::<f64>().sqrt();
            tail.atan2(c[k].max(0.0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_first_points() {
        assert_eq!(halton(1, 2), vec![0.5, 1.0 / 3.0]);
        assert_eq!(halton(2, 2), vec![0.25, 2.0 / 3.0]);
        assert_eq!(nth_prime(24), 97);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let b = Bounds::uniform(2, -2.0, 2.0).unwrap();
        let m = minimize(f, &b, &OptimizerConfig::default()).unwrap();
        assert!(
            (m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6,
            "{:?}",
            m.x
        );
        assert!(m.trace.converged);
    }

    #[test]
    fn respects_bounds() {
        let f = |x: &[f64]| x[0] + x[1];
        let b = Bounds::new(vec![0.5, -1.0], vec![1.0, 1.0]).unwrap();
        let m = minimize(f, &b, &OptimizerConfig::default()).unwrap();
        assert!((m.x[0] - 0.5).abs() < 1e-8 && (m.x[1] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn quadratic_in_ten_dimensions() {
        let f = |x: &[f64]| {
            x.iter()
                .enumerate()
                .map(|(i, v)| (i + 1) as f64 * (v - 0.1 * i as f64).powi(2))
                .sum()
        };
        let b = Bounds::uniform(10, -1.0, 2.0).unwrap();
        let m = minimize(f, &b, &OptimizerConfig::default()).unwrap();
        assert!(m.value < 1e-10, "{}", m.value);
    }

    #[test]
    fn ties_prefer_smaller_x() {
        let f = |x: &[f64]| (x[0] * x[0] - 1.0).powi(2);
        let b = Bounds::uniform(1, -2.0, 2.0).unwrap();
        let m = minimize(f, &b, &OptimizerConfig::default()).unwrap();
        assert!((m.x[0] + 1.0).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn sphere_round_trip() {
        let a = vec![0.3, 1.2, 0.7];
        let c = sphere_to_coefficients(&a);
        assert!((c.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-15);
        let back = coefficients_to_sphere(&c);
        for (x, y) in a.iter().zip(&back) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_bounds() {
        assert!(Bounds::new(vec![1.0], vec![0.0]).is_err());
        assert!(Bounds::new(vec![], vec![]).is_err());
    }
}
