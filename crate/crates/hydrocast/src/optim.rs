//! Derivative-free simplex minimization (Nelder-Mead).
//!
//! Used to fit SARIMA coefficients, where the clamped CSS objective is not
//! smooth at the box boundary and gradients are not worth the trouble.

/// Simplex search settings. Termination is purely geometric: the run
/// converges when the largest pairwise vertex distance drops below
/// `diameter_tol`.
#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub max_iter: usize,
    pub diameter_tol: f64,
    /// Per-coordinate offset used to build the initial simplex around `x0`.
    pub step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_iter: 500,
            diameter_tol: 1e-6,
            step: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ALPHA: f64 = 1.0; // reflection
const GAMMA: f64 = 2.0; // expansion
const RHO: f64 = 0.5; // contraction
const SIGMA: f64 = 0.5; // shrink

impl NelderMead {
    /// Minimize `f` starting from `x0`. Deterministic: no randomness, ties
    /// resolved by vertex order.
    pub fn minimize<F>(&self, f: F, x0: &[f64]) -> NelderMeadResult
    where
        F: Fn(&[f64]) -> f64,
    {
        let n = x0.len();
        if n == 0 {
            return NelderMeadResult {
                x: Vec::new(),
                value: f(&[]),
                iterations: 0,
                converged: true,
            };
        }

        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        simplex.push(x0.to_vec());
        for i in 0..n {
            let mut vertex = x0.to_vec();
            vertex[i] += self.step;
            simplex.push(vertex);
        }
        let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

        for iter in 0..self.max_iter {
            // order best..worst
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            if simplex_diameter(&simplex) < self.diameter_tol {
                return NelderMeadResult {
                    x: simplex[0].clone(),
                    value: values[0],
                    iterations: iter,
                    converged: true,
                };
            }

            // centroid of all but the worst vertex
            let mut centroid = vec![0.0; n];
            for vertex in &simplex[..n] {
                for (c, x) in centroid.iter_mut().zip(vertex) {
                    *c += x;
                }
            }
            for c in centroid.iter_mut() {
                *c /= n as f64;
            }

            let reflected = blend(&centroid, &simplex[n], 1.0 + ALPHA, -ALPHA);
            let f_reflected = f(&reflected);

            if f_reflected < values[0] {
                let expanded = blend(&centroid, &reflected, 1.0 - GAMMA, GAMMA);
                let f_expanded = f(&expanded);
                if f_expanded < f_reflected {
                    simplex[n] = expanded;
                    values[n] = f_expanded;
                } else {
                    simplex[n] = reflected;
                    values[n] = f_reflected;
                }
            } else if f_reflected < values[n - 1] {
                simplex[n] = reflected;
                values[n] = f_reflected;
            } else {
                let contracted = if f_reflected < values[n] {
                    blend(&centroid, &reflected, 1.0 - RHO, RHO)
                } else {
                    blend(&centroid, &simplex[n], 1.0 - RHO, RHO)
                };
                let f_contracted = f(&contracted);
                if f_contracted < values[n].min(f_reflected) {
                    simplex[n] = contracted;
                    values[n] = f_contracted;
                } else {
                    for i in 1..=n {
                        let shrunk = blend(&simplex[0], &simplex[i], 1.0 - SIGMA, SIGMA);
                        values[i] = f(&shrunk);
                        simplex[i] = shrunk;
                    }
                }
            }
        }

        let best = (0..=n)
            .min_by(|&a, &b| values[a].total_cmp(&values[b]))
            .expect("simplex is non-empty");
        NelderMeadResult {
            x: simplex[best].clone(),
            value: values[best],
            iterations: self.max_iter,
            converged: false,
        }
    }
}

fn blend(a: &[f64], b: &[f64], wa: f64, wb: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| wa * x + wb * y).collect()
}

fn simplex_diameter(simplex: &[Vec<f64>]) -> f64 {
    let mut max = 0.0f64;
    for i in 0..simplex.len() {
        for j in (i + 1)..simplex.len() {
            let d: f64 = simplex[i]
                .iter()
                .zip(&simplex[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            max = max.max(d);
        }
    }
    max
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_sphere() {
        let result = NelderMead::default().minimize(
            |x| x.iter().map(|v| v * v).sum(),
            &[0.1, 0.1, 0.1],
        );
        assert!(result.converged);
        assert!(result.value < 1e-10);
        for v in &result.x {
            assert!(v.abs() < 1e-4);
        }
    }

    #[test]
    fn minimizes_shifted_quadratic() {
        let result = NelderMead::default()
            .minimize(|x| (x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2), &[0.1, 0.1]);
        assert!(result.converged);
        assert!((result.x[0] - 1.0).abs() < 1e-5);
        assert!((result.x[1] + 2.0).abs() < 1e-5);
    }

    #[test]
    fn one_dimensional() {
        let result = NelderMead::default().minimize(|x| (x[0] - 3.0).abs(), &[0.1]);
        assert!(result.converged);
        assert!((result.x[0] - 3.0).abs() < 1e-5);
    }

    #[test]
    fn zero_dimensional_is_trivially_converged() {
        let result = NelderMead::default().minimize(|_| 7.25, &[]);
        assert!(result.converged);
        assert_eq!(result.value, 7.25);
        assert!(result.x.is_empty());
    }

    #[test]
    fn reports_non_convergence_under_tiny_cap() {
        let nm = NelderMead {
            max_iter: 2,
            ..NelderMead::default()
        };
        let result = nm.minimize(|x| (x[0] - 50.0).powi(2), &[0.1]);
        assert!(!result.converged);
    }

    #[test]
    fn converges_on_a_clamped_plateau() {
        // flat outside the box, like the CSS objective under clamping
        let result = NelderMead::default().minimize(
            |x| {
                let c = x[0].clamp(-0.99, 0.99);
                (c - 0.99).powi(2)
            },
            &[0.1],
        );
        assert!(result.converged);
        assert!(result.value < 1e-8);
    }

    #[test]
    fn deterministic_across_calls() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + (x[1] * x[1] - 0.5).powi(2);
        let a = NelderMead::default().minimize(f, &[0.1, 0.1]);
        let b = NelderMead::default().minimize(f, &[0.1, 0.1]);
        assert_eq!(a.x, b.x);
        assert_eq!(a.iterations, b.iterations);
    }
}
