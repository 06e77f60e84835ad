//! Derivative-free minimisation.
//!
//! Nelder-Mead with restart-at-best: after the simplex collapses below
//! `tol_x`, a fresh simplex is built around the best vertex and the search
//! continues until a restart no longer improves on the best point. The
//! stopping rule looks only at vertex positions and at comparisons of
//! objective values, so rescaling the objective by a positive constant does
//! not change the path.

#[derive(Debug, Clone)]
pub struct NelderMead {
    /// Simplex diameter (max-norm) at which a run stops.
    pub tol_x: f64,
    /// Iteration cap; `None` means `2000 * dim`.
    pub max_iter: Option<usize>,
    /// Initial simplex edge per coordinate; `None` uses 5% of `|x|`
    /// (0.00025 for zero coordinates).
    pub initial_step: Option<Vec<f64>>,
    pub max_restarts: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            tol_x: 1e-8,
            max_iter: None,
            initial_step: None,
            max_restarts: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

impl NelderMead {
    pub fn with_tol(mut self, tol_x: f64) -> Self {
        self.tol_x = tol_x;
        self
    }

    pub fn with_step(mut self, step: Vec<f64>) -> Self {
        self.initial_step = Some(step);
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = Some(max_iter);
        self
    }

    fn steps(&self, x: &[f64]) -> Vec<f64> {
        match &self.initial_step {
            Some(s) if s.len() == x.len() => s.clone(),
            _ => x
                .iter()
                .map(|v| if *v != 0.0 { 0.05 * v.abs() } else { 0.00025 })
                .collect(),
        }
    }

    /// Minimise `f` from `x0`. Non-finite objective values count as `+inf`.
    pub fn minimize<F>(&self, mut f: F, x0: &[f64]) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = x0.len();
        let max_iter = self.max_iter.unwrap_or(2000 * n.max(1));
        let mut evals = 0usize;
        let mut eval = |x: &[f64]| {
            evals += 1;
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };
        let steps = self.steps(x0);
        let mut best_x = x0.to_vec();
        let mut best_f = eval(&best_x);
        let mut iterations = 0usize;
        let mut converged = false;
        for restart in 0..=self.max_restarts {
            let (x, fx, iters, done) =
                run_simplex(&mut eval, &best_x, best_f, &steps, self.tol_x, max_iter - iterations);
            iterations += iters;
            let moved = x
                .iter()
                .zip(&best_x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let improved = fx < best_f;
            if improved {
                best_x = x;
                best_f = fx;
            }
            if !done {
                break;
            }
            if restart > 0 && (!improved || moved < self.tol_x) {
                converged = true;
                break;
            }
            if restart == self.max_restarts {
                converged = true;
            }
        }
        Minimum {
            x: best_x,
            value: best_f,
            iterations,
            evaluations: evals,
            converged,
        }
    }
}

fn diameter(simplex: &[Vec<f64>]) -> f64 {
    let best = &simplex[0];
    simplex[1..]
        .iter()
        .map(|v| {
            v.iter()
                .zip(best)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// One Nelder-Mead run. Returns the best vertex, its value, iterations used
/// and whether the diameter criterion was met.
fn run_simplex<F>(
    eval: &mut F,
    x0: &[f64],
    f0: f64,
    steps: &[f64],
    tol: f64,
    budget: usize,
) -> (Vec<f64>, f64, usize, bool)
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut values: Vec<f64> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    values.push(f0);
    for j in 0..n {
        let mut v = x0.to_vec();
        v[j] += steps[j];
        values.push(eval(&v));
        simplex.push(v);
    }
    let mut order: Vec<usize> = (0..=n).collect();
    let mut iter = 0usize;
    loop {
        // stable sort keeps the older vertex first on ties
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let sorted: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let sorted_values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = sorted;
        values = sorted_values;
        order = (0..=n).collect();

        if diameter(&simplex) < tol {
            return (simplex[0].clone(), values[0], iter, true);
        }
        if iter >= budget {
            return (simplex[0].clone(), values[0], iter, false);
        }
        iter += 1;

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(1.0);
        let fr = eval(&xr);
        if fr < values[0] {
            let xe = along(2.0);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc, accept) = if fr < values[n] {
            let xc = along(0.5);
            let fc = eval(&xc);
            (xc, fc, fc <= fr)
        } else {
            let xc = along(-0.5);
            let fc = eval(&xc);
            (xc, fc, fc < values[n])
        };
        if accept {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, x)| b + 0.5 * (x - b))
                .collect();
            values[i] = eval(&shrunk);
            simplex[i] = shrunk;
        }
    }
}

/// Radical inverse of `index` in `base` (Halton sequence, index from 1).
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// First `count` Halton points in the unit cube of dimension `dim`.
pub fn halton_points(count: usize, dim: usize) -> Vec<Vec<f64>> {
    (1..=count as u64)
        .map(|i| (0..dim).map(|d| halton(i, PRIMES[d % PRIMES.len()])).collect())
        .collect()
}
