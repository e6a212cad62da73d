use loqc::fock::extract_gate_map;
use loqc::optimize::{log_schedule, maximize, maximize_from, trace_curve};
use loqc::{OptimizerConfig, Problem};
use num_complex::Complex64;

const KNILL_S: f64 = 2.0 / 27.0;

fn config(restarts: usize) -> OptimizerConfig {
    OptimizerConfig {
        n_restarts: restarts,
        ..Default::default()
    }
}

#[test]
fn single_epsilon_schedule_reproduces_maximize() {
    let problem = Problem::knill_cz();
    let cfg = config(8);
    let trace = trace_curve(&[1e-6], &cfg, &problem).unwrap();
    assert_eq!(trace.points.len(), 1);
    assert_eq!(trace.points[0], maximize(&cfg, &problem).unwrap());
}

#[test]
fn ascending_and_descending_traces_agree() {
    let problem = Problem::knill_cz();
    let cfg = config(100);
    let up = log_schedule(1e-4, 0.3, 12).unwrap();
    let down: Vec<f64> = up.iter().rev().copied().collect();
    let forward = trace_curve(&up, &cfg, &problem).unwrap();
    let backward = trace_curve(&down, &cfg, &problem).unwrap();
    assert!(forward.violations.is_empty(), "{:?}", forward.violations);
    assert!(backward.violations.is_empty(), "{:?}", backward.violations);
    for (a, b) in forward.points.iter().zip(backward.points.iter().rev()) {
        assert_eq!(a.epsilon, b.epsilon);
        assert!(
            (a.success - b.success).abs() < 1e-3,
            "eps {}: {} vs {}",
            a.epsilon,
            a.success,
            b.success
        );
    }
    let last = backward.points.last().unwrap();
    assert!(last.delta <= 1e-5, "returned to delta {}", last.delta);

    for p in forward.points.iter().chain(&backward.points) {
        assert!(p.converged);
        assert!(p.gradient_norm <= cfg.convergence_tol);
        assert!(p.u.unitarity_error() < 1e-10);
        assert!(p.success <= KNILL_S + 1e-6 || p.delta > 0.0);
        assert!((0.0..=1.0).contains(&p.delta));
    }
    let s0 = forward.points[0].success;
    assert!((KNILL_S - 1e-3..=KNILL_S + 1e-6).contains(&s0));
}

#[test]
fn one_percent_error_buys_the_modelled_success() {
    let problem = Problem::knill_cz();
    let perfect = maximize(&config(20), &problem).unwrap();
    let warm = OptimizerConfig {
        epsilon: 2.37,
        ..config(1)
    };
    let p = maximize_from(&warm, &problem, &perfect.params).unwrap();
    assert!(p.converged);
    assert!((0.005..=0.02).contains(&p.delta), "delta {}", p.delta);
    let model = 0.074 + 0.076 * p.delta.sqrt();
    assert!(
        (p.success - model).abs() <= 0.003,
        "S {} vs {model}",
        p.success
    );
}

#[test]
fn knill_solution_is_a_scaled_cz() {
    let problem = Problem::knill_cz();
    let p = maximize(&config(20), &problem).unwrap();
    assert!(p.delta <= 1e-5);
    let a = extract_gate_map(&p.u, &problem.encoding, &problem.ancilla).unwrap();
    let c = a.entries()[(0, 0)];
    let cz = [1.0, 1.0, 1.0, -1.0];
    for (k, sign) in cz.iter().enumerate() {
        for l in 0..4 {
            let expected = if k == l {
                c * sign
            } else {
                Complex64::new(0.0, 0.0)
            };
            assert!((a.entries()[(k, l)] - expected).norm() < 1e-3 * c.norm());
        }
    }
    assert!((c.norm_sqr() - KNILL_S).abs() < 1e-3);
    assert!((p.success - KNILL_S).abs() < 1e-3);
    let eval = problem.evaluate(&p.u, true).unwrap();
    let eps = 1e-6;
    assert!((eval.objective(eps) - (1.0 / eps + KNILL_S)).abs() < 1e-5 / eps);
}
