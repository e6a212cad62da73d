//! Derivative-free-in-spirit local ascent: central finite-difference
//! gradients, a BFGS inverse-Hessian estimate and a step-halving line search.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug)]
pub struct AscentSettings {
    pub max_iterations: usize,
    pub gradient_step: f64,
    /// Gradient norm at or below which the point counts as converged.
    pub convergence_tol: f64,
}

#[derive(Clone, Debug)]
pub struct AscentResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 50;
const MAX_STEP: f64 = 1.0;
const STALL_LIMIT: usize = 6;

pub fn gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> DVector<f64> {
    let mut probe = x.to_vec();
    DVector::from_iterator(
        x.len(),
        (0..x.len()).map(|i| {
            let xi = probe[i];
            probe[i] = xi + h;
            let up = f(&probe);
            probe[i] = xi - h;
            let down = f(&probe);
            probe[i] = xi;
            (up - down) / (2.0 * h)
        }),
    )
}

/// Maximizes `f` starting at `x0`.
///
/// Runs until the gradient vanishes to round-off, the line search can no
/// longer improve, or the iteration budget is spent; convergence is then
/// judged against `convergence_tol`.
pub fn maximize<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], settings: &AscentSettings) -> AscentResult {
    let n = x0.len();
    let h = settings.gradient_step;
    // minimize g = -f
    let neg = |x: &[f64]| -f(x);

    let mut x = DVector::from_column_slice(x0);
    let mut gx = neg(x.as_slice());
    let mut grad = gradient(&neg, x.as_slice(), h);
    let mut hinv = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    let mut stalls = 0;
    let mut iterations = 0;

    while iterations < settings.max_iterations && n > 0 {
        if grad.norm() <= settings.convergence_tol * 1e-6 {
            break;
        }
        iterations += 1;

        let mut dir = -(&hinv * &grad);
        let mut slope = dir.dot(&grad);
        if !(slope < 0.0) {
            hinv.fill_with_identity();
            fresh = true;
            dir = -grad.clone();
            slope = dir.dot(&grad);
        }

        let mut alpha = 1.0f64.min(MAX_STEP / dir.norm().max(f64::MIN_POSITIVE));
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = &x + &dir * alpha;
            let gt = neg(trial.as_slice());
            if gt.is_finite() && gt <= gx + ARMIJO * alpha * slope {
                accepted = Some((trial, gt));
                break;
            }
            alpha *= 0.5;
        }

        let Some((x_new, g_new)) = accepted else {
            if fresh {
                break;
            }
            hinv.fill_with_identity();
            fresh = true;
            continue;
        };

        let grad_new = gradient(&neg, x_new.as_slice(), h);
        let s = &x_new - &x;
        let y = &grad_new - &grad;
        let sy = s.dot(&y);
        if sy > 1e-300 && sy.is_finite() {
            if fresh {
                hinv *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &hinv * &y;
            let yhy = y.dot(&hy);
            // H + (1 + rho y'Hy) rho s s' - rho (H y s' + s y' H)
            hinv += (&s * s.transpose()) * (rho * (1.0 + rho * yhy));
            hinv -= (&hy * s.transpose() + &s * hy.transpose()) * rho;
            fresh = false;
        }

        if gx - g_new <= 1e-15 * gx.abs().max(1e-30) {
            stalls += 1;
        } else {
            stalls = 0;
        }
        x = x_new;
        gx = g_new;
        grad = grad_new;
        if stalls >= STALL_LIMIT {
            break;
        }
    }

    let gradient_norm = grad.norm();
    AscentResult {
        x: x.as_slice().to_vec(),
        value: -gx,
        gradient_norm,
        iterations,
        converged: gradient_norm <= settings.convergence_tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> AscentSettings {
        AscentSettings {
            max_iterations: 2000,
            gradient_step: 1e-6,
            convergence_tol: 1e-6,
        }
    }

    #[test]
    fn finds_peak_of_concave_quadratic() {
        let f = |x: &[f64]| -(x[0] - 1.0).powi(2) - 10.0 * (x[1] + 2.0).powi(2);
        let r = maximize(f, &[0.0, 0.0], &settings());
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] + 2.0).abs() < 1e-6);
    }

    #[test]
    fn climbs_a_badly_scaled_valley() {
        // negated Rosenbrock
        let f = |x: &[f64]| -((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let r = maximize(f, &[-1.2, 1.0], &settings());
        assert!(r.converged, "{r:?}");
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn fixed_point_start_stays_put() {
        let f = |x: &[f64]| -x.iter().map(|v| v * v).sum::<f64>();
        let r = maximize(f, &[0.0; 4], &settings());
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.x, vec![0.0; 4]);
    }

    #[test]
    fn gradient_matches_analytic() {
        let f = |x: &[f64]| x[0].sin() * x[1].exp();
        let g = gradient(&f, &[0.4, -0.3], 1e-5);
        assert!((g[0] - 0.4f64.cos() * (-0.3f64).exp()).abs() < 1e-9);
        assert!((g[1] - 0.4f64.sin() * (-0.3f64).exp()).abs() < 1e-9);
    }
}
