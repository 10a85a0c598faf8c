//! Box-constrained quasi-Newton minimization with finite-difference
//! gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::InvalidParameter("bounds must pair up with lower <= upper".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(&self.lower).zip(&self.upper).all(|((v, l), u)| l <= v && v <= u)
    }

    pub fn project(&self, x: &mut [f64]) {
        for ((v, l), u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*l, *u);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub max_iter: usize,
    /// Stop when the projected gradient's max-norm falls below this.
    pub pg_tol: f64,
    /// Stop when the relative decrease `(f_k - f_k+1) / max(|f_k|, |f_k+1|, 1)`
    /// falls to this or below.
    pub f_tol: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            pg_tol: 1e-8,
            f_tol: 1e7 * f64::EPSILON,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ProjectedGradient,
    RelativeDecrease,
    MaxIterations,
    LineSearch,
}

impl StopReason {
    pub fn converged(self) -> bool {
        matches!(self, StopReason::ProjectedGradient | StopReason::RelativeDecrease)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub stop: StopReason,
    /// Objective value after each accepted step, starting with the start.
    pub trace: Vec<f64>,
}

impl Minimum {
    pub fn converged(&self) -> bool {
        self.stop.converged()
    }
}

struct Counted<F> {
    f: F,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    /// NaN counts as +inf so that the line search backs away from it.
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    /// Central differences with step `1e-6 * max(1, |x|)`, shortened to a
    /// one-sided span where a bound is in the way.
    fn gradient(&mut self, x: &[f64], bounds: &Bounds) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        let mut probe = x.to_vec();
        for j in 0..x.len() {
            let h = 1e-6 * x[j].abs().max(1.0);
            let hi = (x[j] + h).min(bounds.upper[j]);
            let lo = (x[j] - h).max(bounds.lower[j]);
            probe[j] = hi;
            let fh = self.eval(&probe);
            probe[j] = lo;
            let fl = self.eval(&probe);
            probe[j] = x[j];
            g[j] = if hi > lo { (fh - fl) / (hi - lo) } else { 0.0 };
        }
        g
    }
}

fn projected_gradient_norm(x: &[f64], g: &[f64], bounds: &Bounds) -> f64 {
    x.iter()
        .zip(g)
        .enumerate()
        .map(|(j, (xj, gj))| ((xj - gj).clamp(bounds.lower[j], bounds.upper[j]) - xj).abs())
        .fold(0.0, f64::max)
}

/// Minimizes `objective` over the box from `start`.
///
/// Bound-active coordinates (at a bound with the gradient pushing outward)
/// are frozen for the step; the rest take a quasi-Newton step on the free block
/// with a projected Armijo backtracking search.
pub fn bounded_minimize<F>(
    objective: F,
    start: &[f64],
    bounds: &Bounds,
    options: &MinimizeOptions,
) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    if !bounds.contains(start) {
        return Err(Error::InvalidParameter(format!(
            "start {start:?} outside the bounds"
        )));
    }
    let n = start.len();
    let mut f = Counted {
        f: objective,
        evaluations: 0,
    };
    let mut x = start.to_vec();
    let mut fx = f.eval(&x);
    if !fx.is_finite() {
        return Err(Error::NonFiniteStart);
    }
    let mut g = f.gradient(&x, bounds);
    // BFGS approximation of the Hessian itself, so that its free block
    // gives the reduced Newton step
    let mut b = identity(n);
    let mut fresh = true;
    let mut trace = vec![fx];
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;

    while iterations < options.max_iter {
        if projected_gradient_norm(&x, &g, bounds) < options.pg_tol {
            stop = StopReason::ProjectedGradient;
            break;
        }
        let free: Vec<bool> = (0..n)
            .map(|j| {
                let at_lower = x[j] <= bounds.lower[j] && g[j] > 0.0;
                let at_upper = x[j] >= bounds.upper[j] && g[j] < 0.0;
                !(at_lower || at_upper)
            })
            .collect();
        let mut d = free_newton_step(&b, &g, &free).unwrap_or_else(|| vec![0.0; n]);
        if !(dot(&d, &g) < 0.0) {
            b = identity(n);
            fresh = true;
            for a in 0..n {
                d[a] = if free[a] { -g[a] } else { 0.0 };
            }
        }

        let Some((x_new, f_new)) = line_search(&mut f, &x, fx, &g, &d, bounds) else {
            if fresh {
                stop = StopReason::LineSearch;
                break;
            }
            // retry once along steepest descent
            b = identity(n);
            fresh = true;
            continue;
        };
        iterations += 1;
        let g_new = f.gradient(&x_new, bounds);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let decrease = (fx - f_new) / fx.abs().max(f_new.abs()).max(1.0);
        x = x_new;
        g = g_new;
        trace.push(f_new);
        fx = f_new;
        if decrease <= options.f_tol {
            stop = StopReason::RelativeDecrease;
            break;
        }
        let sy = dot(&s, &y);
        if sy > 1e-10 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                let scale = dot(&y, &y) / sy;
                b = identity(n);
                b.iter_mut().for_each(|v| *v *= scale);
            }
            bfgs_update(&mut b, &s, &y, sy);
            fresh = false;
        }
    }

    Ok(Minimum {
        x,
        value: fx,
        iterations,
        evaluations: f.evaluations,
        stop,
        trace,
    })
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for j in 0..n {
        h[j * n + j] = 1.0;
    }
    h
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `B <- B - B s s' B / s'Bs + y y' / s'y`.
fn bfgs_update(b: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let bs: Vec<f64> = (0..n).map(|i| (0..n).map(|j| b[i * n + j] * s[j]).sum()).collect();
    let sbs = dot(s, &bs);
    if !(sbs > 0.0) {
        return;
    }
    for i in 0..n {
        for j in 0..n {
            b[i * n + j] += y[i] * y[j] / sy - bs[i] * bs[j] / sbs;
        }
    }
}

/// Solves `B_FF d_F = -g_F` on the free coordinates by Cholesky; `None` if
/// the block is not positive definite.
fn free_newton_step(b: &[f64], g: &[f64], free: &[bool]) -> Option<Vec<f64>> {
    let n = g.len();
    let idx: Vec<usize> = (0..n).filter(|&j| free[j]).collect();
    let k = idx.len();
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = b[idx[i] * n + idx[j]];
            for t in 0..j {
                s -= l[i * k + t] * l[j * k + t];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * k + i] = s.sqrt();
            } else {
                l[i * k + j] = s / l[j * k + j];
            }
        }
    }
    let mut z = vec![0.0; k];
    for i in 0..k {
        let s: f64 = -g[idx[i]] - (0..i).map(|t| l[i * k + t] * z[t]).sum::<f64>();
        z[i] = s / l[i * k + i];
    }
    let mut d = vec![0.0; n];
    for i in (0..k).rev() {
        let s: f64 = z[i] - (i + 1..k).map(|t| l[t * k + i] * d[idx[t]]).sum::<f64>();
        d[idx[i]] = s / l[i * k + i];
    }
    Some(d)
}

fn line_search<F: FnMut(&[f64]) -> f64>(
    f: &mut Counted<F>,
    x: &[f64],
    fx: f64,
    g: &[f64],
    d: &[f64],
    bounds: &Bounds,
) -> Option<(Vec<f64>, f64)> {
    // cap the first trial so it cannot leave the box by more than its width
    let mut t: f64 = 1.0;
    for j in 0..x.len() {
        let width = bounds.upper[j] - bounds.lower[j];
        if d[j].abs() > 0.0 && width.is_finite() {
            t = t.min(width / d[j].abs());
        }
    }
    while t > 1e-20 {
        let mut cand: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + t * b).collect();
        bounds.project(&mut cand);
        let step: Vec<f64> = cand.iter().zip(x).map(|(a, b)| a - b).collect();
        if step.iter().all(|s| *s == 0.0) {
            return None;
        }
        let fc = f.eval(&cand);
        if fc <= fx + 1e-4 * dot(g, &step) {
            return Some((cand, fc));
        }
        t *= 0.5;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(dim: usize, lo: f64, hi: f64) -> Bounds {
        Bounds::new(vec![lo; dim], vec![hi; dim]).unwrap()
    }

    #[test]
    fn interior_quadratic() {
        let m = bounded_minimize(
            |x| (x[0] - 0.3).powi(2),
            &[0.5],
            &unit_box(1, 0.0, 1.0),
            &MinimizeOptions::default(),
        )
        .unwrap();
        assert!(m.converged());
        assert!((m.x[0] - 0.3).abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn minimum_on_the_boundary() {
        let m = bounded_minimize(
            |x| x[0] * x[0],
            &[0.7],
            &unit_box(1, 0.2, 1.0),
            &MinimizeOptions::default(),
        )
        .unwrap();
        assert!(m.converged());
        assert_eq!(m.x[0], 0.2);
    }

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn rosenbrock_matches_grid_search() {
        // grid oracle at 1e-3 resolution over [0, 2]^2
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=2000 {
            for j in 0..=2000 {
                let p = [i as f64 * 1e-3, j as f64 * 1e-3];
                let v = rosenbrock(&p);
                if v < best.0 {
                    best = (v, p[0], p[1]);
                }
            }
        }
        let m = bounded_minimize(
            rosenbrock,
            &[0.5, 0.5],
            &unit_box(2, 0.0, 2.0),
            &MinimizeOptions::default(),
        )
        .unwrap();
        assert!(m.converged(), "{:?}", m.stop);
        assert!((m.x[0] - best.1).abs() < 1e-4 && (m.x[1] - best.2).abs() < 1e-4, "{m:?}");
        assert!(m.value <= best.0 + 1e-12);
    }

    #[test]
    fn corner_and_mixed_activity() {
        // pulled outside the box in x, interior optimum in y
        let m = bounded_minimize(
            |x| (x[0] + 3.0).powi(2) + (x[1] - 0.25).powi(2) + 0.5 * x[0] * x[1],
            &[0.5, 0.5],
            &unit_box(2, 0.0, 1.0),
            &MinimizeOptions::default(),
        )
        .unwrap();
        assert_eq!(m.x[0], 0.0);
        assert!((m.x[1] - 0.25).abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn trace_is_monotone_and_run_is_deterministic() {
        let obj = |x: &[f64]| (x[0] - 0.1).powi(4) + (x[1] - x[0]).powi(2) + (x[2] * 3.0 - 1.0).powi(2);
        let b = unit_box(3, -1.0, 1.0);
        let a = bounded_minimize(obj, &[0.9, -0.9, 0.0], &b, &MinimizeOptions::default()).unwrap();
        let c = bounded_minimize(obj, &[0.9, -0.9, 0.0], &b, &MinimizeOptions::default()).unwrap();
        assert_eq!(a, c);
        assert!(a.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn nan_start_and_bad_start_are_errors() {
        let b = unit_box(1, 0.0, 1.0);
        let opts = MinimizeOptions::default();
        assert_eq!(
            bounded_minimize(|_| f64::NAN, &[0.5], &b, &opts).unwrap_err(),
            Error::NonFiniteStart
        );
        assert!(bounded_minimize(|x| x[0], &[2.0], &b, &opts).is_err());
    }

    #[test]
    fn nan_regions_are_avoided() {
        let m = bounded_minimize(
            |x| if x[0] < 0.2 { f64::NAN } else { (x[0] - 0.1).powi(2) },
            &[0.9],
            &unit_box(1, 0.0, 1.0),
            &MinimizeOptions::default(),
        )
        .unwrap();
        assert!(m.value.is_finite());
        assert!(m.x[0] >= 0.2 && m.x[0] < 0.21, "{m:?}");
    }
}
