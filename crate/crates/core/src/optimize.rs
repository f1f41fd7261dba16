//! Box-constrained local descent and multi-start global search.

use std::time::{Duration, Instant};

use rand::Rng;

/// A differentiable function over `ℝ^dim`.
pub trait Objective {
    fn dim(&self) -> usize;

    fn value(&self, y: &[f64]) -> f64;

    /// Writes `∇f(y)` into `grad` and returns `f(y)`.
    fn value_grad(&self, y: &[f64], grad: &mut [f64]) -> f64;
}

/// Adapts a pair of closures into an [`Objective`].
pub struct FnObjective<F, G> {
    pub dim: usize,
    pub f: F,
    pub g: G,
}

impl<F, G> Objective for FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]) -> f64,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, y: &[f64]) -> f64 {
        (self.f)(y)
    }

    fn value_grad(&self, y: &[f64], grad: &mut [f64]) -> f64 {
        (self.g)(y, grad)
    }
}

/// Settings for one projected-gradient descent run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DescentConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub armijo: f64,
    /// Longest move tried in one iteration, so a descent stays in its starting basin.
    pub max_move: f64,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            grad_tol: 1e-8,
            armijo: 1e-4,
            max_move: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DescentResult {
    pub y: Vec<f64>,
    pub value: f64,
    pub restarts_used: usize,
    pub iterations: usize,
}

fn project(y: &mut [f64], bounds: &[(f64, f64)]) {
    for (yi, (lo, hi)) in y.iter_mut().zip(bounds) {
        *yi = yi.clamp(*lo, *hi);
    }
}

fn projected_grad_norm(y: &[f64], g: &[f64], bounds: &[(f64, f64)]) -> f64 {
    y.iter()
        .zip(g)
        .zip(bounds)
        .map(|((yi, gi), (lo, hi))| {
            let blocked = (*yi <= *lo && *gi > 0.0) || (*yi >= *hi && *gi < 0.0);
            if blocked {
                0.0
            } else {
                gi * gi
            }
        })
        .sum::<f64>()
        .sqrt()
}

/// Projected gradient descent with backtracking line search from `start`.
pub fn local_descent(
    obj: &dyn Objective,
    bounds: &[(f64, f64)],
    start: &[f64],
    cfg: &DescentConfig,
) -> (Vec<f64>, f64, usize) {
    let n = obj.dim();
    let mut y = start.to_vec();
    project(&mut y, bounds);
    let mut g = vec![0.0; n];
    let mut f = obj.value_grad(&y, &mut g);
    let mut trial = vec![0.0; n];
    let mut step: f64 = 1.0;
    let mut iters = 0;
    while iters < cfg.max_iters {
        if projected_grad_norm(&y, &g, bounds) <= cfg.grad_tol {
            break;
        }
        iters += 1;
        let gnorm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        step = step.min(cfg.max_move / gnorm);
        let mut accepted = false;
        while step > 1e-20 {
            for i in 0..n {
                trial[i] = y[i] - step * g[i];
            }
            project(&mut trial, bounds);
            let decrease: f64 = (0..n).map(|i| g[i] * (trial[i] - y[i])).sum();
            let ft = obj.value(&trial);
            if ft <= f + cfg.armijo * decrease {
                accepted = decrease < 0.0 || ft < f;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        std::mem::swap(&mut y, &mut trial);
        f = obj.value_grad(&y, &mut g);
        step = (step * 2.0).min(1e6);
    }
    (y, f, iters)
}

/// Best of repeated local descents from uniform random starts in `bounds`.
///
/// At most `restarts` starts are run; with a budget, no new start begins once it is spent.
/// The first start always runs.
pub fn multistart_descent<R: Rng + ?Sized>(
    obj: &dyn Objective,
    bounds: &[(f64, f64)],
    restarts: usize,
    budget: Option<Duration>,
    cfg: &DescentConfig,
    rng: &mut R,
) -> DescentResult {
    assert!(restarts > 0 || budget.is_some(), "unbounded multistart");
    let begin = Instant::now();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut used = 0;
    let mut iterations = 0;
    let mut start = vec![0.0; bounds.len()];
    loop {
        if used > 0 {
            if used >= restarts.max(1) {
                break;
            }
            if let Some(b) = budget {
                if begin.elapsed() >= b {
                    break;
                }
            }
        }
        for (s, (lo, hi)) in start.iter_mut().zip(bounds) {
            *s = rng.random_range(*lo..=*hi);
        }
        let (y, f, it) = local_descent(obj, bounds, &start, cfg);
        used += 1;
        iterations += it;
        if best.as_ref().is_none_or(|(_, bf)| f < *bf) {
            best = Some((y, f));
        }
    }
    let (y, value) = best.expect("at least one start");
    DescentResult {
        y,
        value,
        restarts_used: used,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quadratic() -> FnObjective<impl Fn(&[f64]) -> f64, impl Fn(&[f64], &mut [f64]) -> f64> {
        FnObjective {
            dim: 2,
            f: |y: &[f64]| (y[0] - 1.0).powi(2) + 3.0 * (y[1] + 2.0).powi(2),
            g: |y: &[f64], g: &mut [f64]| {
                g[0] = 2.0 * (y[0] - 1.0);
                g[1] = 6.0 * (y[1] + 2.0);
                (y[0] - 1.0).powi(2) + 3.0 * (y[1] + 2.0).powi(2)
            },
        }
    }

    #[test]
    fn convex_quadratic_single_restart() {
        let q = quadratic();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = multistart_descent(&q, &[(-5.0, 5.0); 2], 1, None, &DescentConfig::default(), &mut rng);
        assert!(r.value < 1e-6);
        assert!((r.y[0] - 1.0).abs() < 1e-6 && (r.y[1] + 2.0).abs() < 1e-6);
        assert_eq!(r.restarts_used, 1);
    }

    #[test]
    fn zero_budget_runs_one_start() {
        let q = quadratic();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = multistart_descent(
            &q,
            &[(-5.0, 5.0); 2],
            usize::MAX,
            Some(Duration::ZERO),
            &DescentConfig::default(),
            &mut rng,
        );
        assert_eq!(r.restarts_used, 1);
    }

    #[test]
    fn bound_constrained_minimum() {
        let q = quadratic();
        let r = local_descent(&q, &[(2.0, 5.0), (-1.0, 1.0)], &[4.0, 0.0], &DescentConfig::default());
        assert!((r.0[0] - 2.0).abs() < 1e-9);
        assert!((r.0[1] + 1.0).abs() < 1e-9);
    }
}
