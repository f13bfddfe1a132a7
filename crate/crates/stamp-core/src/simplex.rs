//! Derivative-free Nelder-Mead minimizer over an unconstrained space.
//!
//! Small and allocation-light: the mixture likelihoods have at most seven
//! parameters and get re-fit hundreds of times per bootstrap run.

/// Standard reflection/expansion/contraction/shrink coefficients.
const ALPHA: f64 = 1.0;
const GAMMA: f64 = 2.0;
const RHO: f64 = 0.5;
const SIGMA: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct NelderMead {
    pub max_iters: usize,
    /// Convergence on the spread of function values over the simplex.
    pub f_tol: f64,
    /// Convergence on the spread of coordinates over the simplex.
    pub x_tol: f64,
    /// Initial simplex displacement along each axis.
    pub step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            max_iters: 0, // resolved to 200 * dim at run time
            f_tol: 1e-10,
            x_tol: 1e-8,
            step: 0.25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best objective value seen up to and including each iteration;
    /// non-increasing by construction.
    pub best_trace: Vec<f64>,
}

impl NelderMead {
    pub fn minimize<F>(&self, mut f: F, x0: &[f64]) -> SimplexOutcome
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = x0.len();
        assert!(n > 0, "cannot minimize over zero parameters");
        let max_iters = if self.max_iters == 0 {
            200 * n
        } else {
            self.max_iters
        };

        let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n + 1);
        simplex.push((f(x0), x0.to_vec()));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += self.step;
            simplex.push((f(&x), x));
        }
        simplex.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut trace = Vec::with_capacity(max_iters.min(4096));
        let mut iterations = 0;
        let mut converged = false;

        while iterations < max_iters {
            iterations += 1;
            let worst = simplex[n].clone();
            let second_worst = simplex[n - 1].0;
            let best = simplex[0].0;

            // Centroid of all points but the worst.
            let mut centroid = vec![0.0; n];
            for (_, x) in simplex.iter().take(n) {
                for (c, v) in centroid.iter_mut().zip(x) {
                    *c += v;
                }
            }
            for c in centroid.iter_mut() {
                *c /= n as f64;
            }

            let reflect: Vec<f64> = centroid
                .iter()
                .zip(&worst.1)
                .map(|(c, w)| c + ALPHA * (c - w))
                .collect();
            let f_reflect = f(&reflect);

            if f_reflect < best {
                let expand: Vec<f64> = centroid
                    .iter()
                    .zip(&reflect)
                    .map(|(c, r)| c + GAMMA * (r - c))
                    .collect();
                let f_expand = f(&expand);
                simplex[n] = if f_expand < f_reflect {
                    (f_expand, expand)
                } else {
                    (f_reflect, reflect)
                };
            } else if f_reflect < second_worst {
                simplex[n] = (f_reflect, reflect);
            } else {
                // Contract toward the better of worst and reflected.
                let (f_anchor, anchor) = if f_reflect < worst.0 {
                    (f_reflect, &reflect)
                } else {
                    (worst.0, &worst.1)
                };
                let contract: Vec<f64> = centroid
                    .iter()
                    .zip(anchor)
                    .map(|(c, a)| c + RHO * (a - c))
                    .collect();
                let f_contract = f(&contract);
                if f_contract < f_anchor {
                    simplex[n] = (f_contract, contract);
                } else {
                    // Shrink everything toward the best point.
                    let best_x = simplex[0].1.clone();
                    for entry in simplex.iter_mut().skip(1) {
                        for (v, b) in entry.1.iter_mut().zip(&best_x) {
                            *v = b + SIGMA * (*v - b);
                        }
                        entry.0 = f(&entry.1);
                    }
                }
            }
            simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
            trace.push(simplex[0].0);

            let f_spread = simplex[n].0 - simplex[0].0;
            let x_spread = simplex[n]
                .1
                .iter()
                .zip(&simplex[0].1)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            if f_spread.abs() < self.f_tol && x_spread < self.x_tol {
                converged = true;
                break;
            }
        }

        let (value, x) = simplex.swap_remove(0);
        SimplexOutcome {
            x,
            value,
            iterations,
            converged,
            best_trace: trace,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_quadratic_bowl() {
        let out = NelderMead::default().minimize(
            |x| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2),
            &[0.0, 0.0],
        );
        assert!(out.converged);
        assert!((out.x[0] - 3.0).abs() < 1e-5, "x0 = {}", out.x[0]);
        assert!((out.x[1] + 1.0).abs() < 1e-5, "x1 = {}", out.x[1]);
    }

    #[test]
    fn minimizes_rosenbrock() {
        let out = NelderMead {
            max_iters: 5000,
            ..Default::default()
        }
        .minimize(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
        );
        assert!((out.x[0] - 1.0).abs() < 1e-4, "x = {:?}", out.x);
        assert!((out.x[1] - 1.0).abs() < 1e-4, "x = {:?}", out.x);
    }

    #[test]
    fn one_dimensional_problem() {
        let out = NelderMead::default().minimize(|x| (x[0] + 7.5).powi(2), &[10.0]);
        assert!((out.x[0] + 7.5).abs() < 1e-5);
    }

    /// The running best value never increases.
    #[test]
    fn best_trace_is_monotone() {
        let out = NelderMead::default().minimize(
            |x| x[0].sin() * 3.0 + x[0] * x[0] * 0.05 + (x[1] - 2.0).powi(2),
            &[4.0, -3.0],
        );
        for w in out.best_trace.windows(2) {
            assert!(w[1] <= w[0], "trace increased: {} -> {}", w[0], w[1]);
        }
    }
}
