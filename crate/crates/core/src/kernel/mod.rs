//! Projected-gradient ascent for smooth concave objectives over a box or a capped simplex.
//!
//! Steps follow the projection arc `x(a) = P(x + a grad f(x))`. The trial step is
//! `initial_step` on the first iteration and the Barzilai-Borwein spectral length
//! afterwards; each trial is halved until the Armijo condition
//! `f(x(a)) >= f(x) + c <grad f(x), x(a) - x>` holds and the objective's log
//! arguments stay above the domain margin.

mod projection;

pub use projection::{project, FeasibleSet};

use crate::error::{Error, Result};

/// A concave differentiable function of `dim` variables.
pub trait ConcaveObjective {
    fn dim(&self) -> usize;

    /// Value and gradient at `x`.
    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>);

    /// Smallest log argument (or other domain slack) at `x`. Steps are rejected when
    /// this drops to the kernel's margin.
    fn domain_margin(&self, _x: &[f64]) -> f64 {
        f64::INFINITY
    }
}

/// Adapter for closures returning `(value, gradient)`.
pub struct FnObjective<F> {
    dim: usize,
    eval: F,
}

impl<F: Fn(&[f64]) -> (f64, Vec<f64>)> FnObjective<F> {
    pub fn new(dim: usize, eval: F) -> Self {
        Self { dim, eval }
    }
}

impl<F: Fn(&[f64]) -> (f64, Vec<f64>)> ConcaveObjective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.eval)(x)
    }
}

/// Objective plus feasible set.
pub struct ConcaveProblem<'a> {
    pub objective: &'a dyn ConcaveObjective,
    pub feasible_set: FeasibleSet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOptions {
    /// Stop when `||x - P(x + grad f)|| <= tol`.
    pub tol: f64,
    pub max_iter: usize,
    pub initial_step: f64,
    pub shrink: f64,
    pub armijo: f64,
    /// Minimum admissible domain margin.
    pub margin: f64,
    /// Use Barzilai-Borwein trial steps after the first iteration.
    pub spectral: bool,
    /// Give up on a line search after this many halvings.
    pub max_backtracks: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 5000,
            initial_step: 1.0,
            shrink: 0.5,
            armijo: 1e-4,
            margin: 1e-12,
            spectral: true,
            max_backtracks: 80,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub point: Vec<f64>,
    pub value: f64,
    /// `||x - P(x + grad f(x))||` at the returned point.
    pub stationarity: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value at the start and after every accepted step.
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn stationarity(set: &FeasibleSet, x: &[f64], g: &[f64]) -> f64 {
    let step: Vec<f64> = x.iter().zip(g).map(|(a, b)| a + b).collect();
    dist(x, &set.project(&step))
}

fn evaluate(obj: &dyn ConcaveObjective, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    let (v, g) = obj.value_and_gradient(x);
    if !v.is_finite() || g.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite { point: x.to_vec() });
    }
    Ok((v, g))
}

/// Maximizes `problem.objective` from the feasible point `x0`.
pub fn maximize(problem: &ConcaveProblem<'_>, x0: &[f64], opts: &KernelOptions) -> Result<SolveResult> {
    let obj = problem.objective;
    let set = &problem.feasible_set;
    if x0.len() != obj.dim() {
        return Err(Error::ShapeMismatch);
    }
    if !set.contains(x0, 1e-9) {
        return Err(Error::InfeasibleStart(format!("{x0:?} is outside the feasible set")));
    }
    let mut x = set.project(x0);
    if obj.domain_margin(&x) <= opts.margin {
        return Err(Error::InfeasibleStart(format!("{x:?} is too close to the domain boundary")));
    }
    let (mut f, mut g) = evaluate(obj, &x)?;
    let mut step = opts.initial_step;
    let mut iterations = 0;
    let mut history = vec![f];

    loop {
        let stat = stationarity(set, &x, &g);
        if stat <= opts.tol {
            return Ok(SolveResult {
                point: x,
                value: f,
                stationarity: stat,
                iterations,
                converged: true,
                history,
            });
        }
        if iterations >= opts.max_iter {
            return Ok(SolveResult {
                point: x,
                value: f,
                stationarity: stat,
                iterations,
                converged: false,
                history,
            });
        }
        iterations += 1;

        // value changes below rounding cannot be resolved; the gradient still can
        let slack = (8.0 * f64::EPSILON * f.abs()).min(1e-12);
        let mut alpha = step;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + alpha * b).collect();
            let xt = set.project(&trial);
            if obj.domain_margin(&xt) > opts.margin {
                let (ft, gt) = evaluate(obj, &xt)?;
                let d: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
                if ft >= f + opts.armijo * dot(&g, &d) - slack {
                    accepted = Some((xt, ft, gt, d));
                    break;
                }
            }
            alpha *= opts.shrink;
        }
        let stalled = matches!(&accepted, Some((xt, ..)) if *xt == x);
        let (Some((xt, ft, gt, s)), false) = (accepted, stalled) else {
            // no ascent left at machine precision
            return Ok(SolveResult {
                point: x,
                value: f,
                stationarity: stat,
                iterations,
                converged: false,
                history,
            });
        };

        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        step = if opts.spectral && sy < 0.0 {
            (dot(&s, &s) / -sy).clamp(1e-10, 1e10)
        } else {
            (alpha / opts.shrink).min(1e10)
        };
        x = xt;
        f = ft;
        history.push(f);
        g = gt;
    }
}

/// Result of comparing an analytic gradient with central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    /// `||analytic - numeric|| / max(||numeric||, floor)`.
    pub relative_error: f64,
}

impl GradientCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.relative_error <= tol
    }
}

/// Central-difference check at `x` with per-coordinate step `rel_step * max(1, |x_i|)`.
pub fn gradient_check(obj: &dyn ConcaveObjective, x: &[f64], rel_step: f64) -> GradientCheck {
    let (_, analytic) = obj.value_and_gradient(x);
    let mut numeric = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let h = rel_step * x[i].abs().max(1.0);
        probe[i] = x[i] + h;
        let (fp, _) = obj.value_and_gradient(&probe);
        probe[i] = x[i] - h;
        let (fm, _) = obj.value_and_gradient(&probe);
        probe[i] = x[i];
        numeric.push((fp - fm) / (2.0 * h));
    }
    let diff = dist(&analytic, &numeric);
    let scale = numeric.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-8);
    GradientCheck {
        relative_error: diff / scale,
        analytic,
        numeric,
    }
}
