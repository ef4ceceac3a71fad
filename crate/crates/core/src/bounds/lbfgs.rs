//! Limited-memory BFGS with Armijo backtracking.

use std::collections::VecDeque;

pub(crate) struct LbfgsConfig {
    pub memory: usize,
    pub max_iters: usize,
    /// Stop once the gradient norm drops below this.
    pub grad_tol: f64,
    /// Stop once the objective improves by less than `f_tol * |f|` for
    /// `stall_limit` consecutive iterations.
    pub f_tol: f64,
    pub stall_limit: usize,
}

pub(crate) struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    /// True when stopped by the gradient or stall criterion rather than the
    /// iteration budget.
    pub settled: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn minimize(
    mut objective: impl FnMut(&[f64]) -> (f64, Vec<f64>),
    x0: Vec<f64>,
    cfg: &LbfgsConfig,
) -> LbfgsOutcome {
    let n = x0.len();
    let mut x = x0;
    let (mut f, mut g) = objective(&x);
    if n == 0 {
        return LbfgsOutcome {
            x,
            grad_norm: 0.0,
            iterations: 0,
            settled: true,
        };
    }
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut stalled = 0;
    let mut iterations = 0;
    let mut settled = false;

    while iterations < cfg.max_iters {
        let gn = norm(&g);
        if gn <= cfg.grad_tol || !gn.is_finite() {
            settled = true;
            break;
        }
        iterations += 1;

        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = match history.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / gn,
        };
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&dir, &g);
        if slope >= 0.0 {
            history.clear();
            dir = g.iter().map(|v| -v / gn).collect();
            slope = dot(&dir, &g);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            let (ft, gt) = objective(&trial);
            if ft.is_finite() && ft <= f + 1e-4 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn_new)) = accepted else {
            if history.is_empty() {
                settled = true;
                break;
            }
            history.clear();
            continue;
        };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if history.len() == cfg.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        let improvement = f - fn_;
        x = xn;
        f = fn_;
        g = gn_new;
        if improvement <= cfg.f_tol * f.abs().max(1e-300) {
            stalled += 1;
            if stalled >= cfg.stall_limit {
                settled = true;
                break;
            }
        } else {
            stalled = 0;
        }
    }
    let grad_norm = norm(&g);
    LbfgsOutcome {
        x,
        grad_norm,
        iterations,
        settled,
    }
}
