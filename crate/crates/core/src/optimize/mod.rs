//! Maximization of `S + F/eps` over mode matrices, continuation in `eps`,
//! and the `S(delta)` fit.
//!
//! Internally the ascent works on the rescaled objective
//! `(eps S + F) / (1 + eps)`, which has the same maximizers as `S + F/eps`
//! but stays of order one for every `eps`. Convergence tolerances refer to
//! this rescaled form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{extract_gate_map, AncillaSpec, ModeMatrix};
use crate::gates::{DualRailEncoding, KnillAnsatz};
use crate::metrics::{fidelity, success, success_with_norm, TargetGate};

pub mod ascent;
pub mod fit;
pub mod param;
pub mod trace;

pub use fit::{fit_curve, fit_samples, FitResult};
pub use trace::{log_schedule, trace_curve, trace_curve_resumable, Trace, DEFAULT_SCHEDULE};

use ascent::{AscentResult, AscentSettings};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnsatzKind {
    /// Whole device as `exp(K)` with `N^2` parameters.
    Full,
    /// Identity on the passive rails, `exp(K)` on the active block.
    Knill,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub epsilon: f64,
    pub n_restarts: usize,
    pub max_iterations: usize,
    pub gradient_step: f64,
    pub convergence_tol: f64,
    pub rng_seed: u64,
    pub ansatz: AnsatzKind,
    /// Worker threads for restarts; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            epsilon: 1e-6,
            n_restarts: 100,
            max_iterations: 4000,
            gradient_step: 1e-6,
            convergence_tol: 1e-6,
            rng_seed: 1,
            ansatz: AnsatzKind::Knill,
            threads: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Validation(what.to_string()));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive");
        }
        if self.n_restarts == 0 {
            return bad("restart budget must be at least 1");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.gradient_step > 0.0) || !(self.convergence_tol > 0.0) {
            return bad("gradient step and convergence tolerance must be positive");
        }
        if self.threads == Some(0) {
            return bad("thread cap must be at least 1");
        }
        Ok(())
    }

    fn ascent_settings(&self) -> AscentSettings {
        AscentSettings {
            max_iterations: self.max_iterations,
            gradient_step: self.gradient_step,
            convergence_tol: self.convergence_tol,
        }
    }
}

/// The fixed part of an optimization: what to implement and with which
/// resources.
#[derive(Clone, Debug)]
pub struct Problem {
    pub target: TargetGate,
    pub encoding: DualRailEncoding,
    pub ancilla: AncillaSpec,
    /// Passive rails used by the Knill ansatz.
    pub knill: KnillAnsatz,
}

impl Problem {
    pub fn new(
        target: TargetGate,
        encoding: DualRailEncoding,
        ancilla: AncillaSpec,
        knill: KnillAnsatz,
    ) -> Result<Self> {
        if target.n_qubits() != encoding.n_qubits() {
            return Err(Error::Dimension(format!(
                "target acts on {} qubits but the encoding has {}",
                target.n_qubits(),
                encoding.n_qubits()
            )));
        }
        if ancilla.n_modes() != encoding.ancilla_modes().len() {
            return Err(Error::Dimension(
                "ancilla spec does not match the encoding".into(),
            ));
        }
        if knill.n_modes() != encoding.n_modes() {
            return Err(Error::Dimension(
                "Knill layout does not match the encoding".into(),
            ));
        }
        Ok(Problem {
            target,
            encoding,
            ancilla,
            knill,
        })
    }

    /// CZ on two dual-rail qubits with two single-photon ancillas heralded
    /// by one photon in each ancilla mode.
    pub fn knill_cz() -> Self {
        Problem::new(
            crate::gates::target("cz", None).expect("builtin"),
            DualRailEncoding::standard(2, 2),
            AncillaSpec::knill_cz(),
            KnillAnsatz::cz_default(),
        )
        .expect("consistent builtin problem")
    }

    pub fn n_photons(&self) -> u32 {
        self.encoding.n_qubits() as u32 + self.ancilla.n_photons()
    }

    pub fn n_params(&self, ansatz: AnsatzKind) -> usize {
        match ansatz {
            AnsatzKind::Full => self.encoding.n_modes().pow(2),
            AnsatzKind::Knill => self.knill.block_size().pow(2),
        }
    }

    pub fn matrix(&self, ansatz: AnsatzKind, params: &[f64]) -> ModeMatrix {
        match ansatz {
            AnsatzKind::Full => {
                let n = self.encoding.n_modes();
                ModeMatrix::new(param::unitary_from_params(n, params)).expect("square")
            }
            AnsatzKind::Knill => {
                let block = param::unitary_from_params(self.knill.block_size(), params);
                self.knill.embed_unchecked(&block)
            }
        }
    }

    /// Fidelity (if defined) and success of a device. `unitary` skips the
    /// spectral-norm computation for devices known to be unitary.
    pub fn evaluate(&self, u: &ModeMatrix, unitary: bool) -> Result<Evaluation> {
        let a = extract_gate_map(u, &self.encoding, &self.ancilla)?;
        let s = if unitary {
            success_with_norm(&a, 1.0, self.n_photons())
        } else {
            success(&a, u, self.n_photons())
        };
        let f = match fidelity(&a, &self.target) {
            Ok(f) => Some(f),
            Err(Error::ZeroGateMap) => None,
            Err(e) => return Err(e),
        };
        Ok(Evaluation {
            fidelity: f,
            success: s,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    /// `None` when the gate map vanishes.
    pub fidelity: Option<f64>,
    pub success: f64,
}

impl Evaluation {
    /// `S + F/eps`, with an undefined fidelity counted as zero.
    pub fn objective(&self, epsilon: f64) -> f64 {
        self.success + self.fidelity.unwrap_or(0.0) / epsilon
    }

    pub fn normalized_objective(&self, epsilon: f64) -> f64 {
        (epsilon * self.success + self.fidelity.unwrap_or(0.0)) / (1.0 + epsilon)
    }

    pub fn delta(&self) -> f64 {
        1.0 - self.fidelity.unwrap_or(0.0)
    }
}

/// Value of `S + F/eps` for a device, plus whether the fidelity was
/// undefined (vanishing gate map, reported as the worst value).
pub fn objective(
    u: &ModeMatrix,
    target: &TargetGate,
    encoding: &DualRailEncoding,
    ancilla: &AncillaSpec,
    epsilon: f64,
) -> Result<(f64, bool)> {
    let a = extract_gate_map(u, encoding, ancilla)?;
    let m = encoding.n_qubits() as u32 + ancilla.n_photons();
    let s = success(&a, u, m);
    match fidelity(&a, target) {
        Ok(f) => Ok((s + f / epsilon, false)),
        Err(Error::ZeroGateMap) => Ok((0.0, true)),
        Err(e) => Err(e),
    }
}

/// One optimized device with its coordinates on the trade-off curve.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub epsilon: f64,
    pub delta: f64,
    pub success: f64,
    pub objective: f64,
    pub u: ModeMatrix,
    pub params: Vec<f64>,
    pub ansatz: AnsatzKind,
    pub converged: bool,
    pub gradient_norm: f64,
    pub iterations: usize,
    /// Restart that produced the point (0 for warm starts).
    pub restart: usize,
}

impl CurvePoint {
    pub fn fidelity(&self) -> f64 {
        1.0 - self.delta
    }

    pub fn normalized_objective(&self) -> f64 {
        (self.epsilon * self.success + 1.0 - self.delta) / (1.0 + self.epsilon)
    }
}

fn finish(
    problem: &Problem,
    config: &OptimizerConfig,
    result: AscentResult,
    restart: usize,
) -> Result<CurvePoint> {
    let u = problem.matrix(config.ansatz, &result.x);
    let eval = problem.evaluate(&u, true)?;
    Ok(CurvePoint {
        epsilon: config.epsilon,
        delta: eval.delta(),
        success: eval.success,
        objective: eval.objective(config.epsilon),
        u,
        params: result.x,
        ansatz: config.ansatz,
        converged: result.converged,
        gradient_norm: result.gradient_norm,
        iterations: result.iterations,
        restart,
    })
}

fn ascend(problem: &Problem, config: &OptimizerConfig, x0: &[f64]) -> AscentResult {
    let eps = config.epsilon;
    let ansatz = config.ansatz;
    let f = |x: &[f64]| {
        let u = problem.matrix(ansatz, x);
        problem
            .evaluate(&u, true)
            .map(|e| e.normalized_objective(eps))
            .unwrap_or(f64::NEG_INFINITY)
    };
    ascent::maximize(f, x0, &config.ascent_settings())
}

/// Local ascent from explicit parameters (warm start).
pub fn maximize_from(
    config: &OptimizerConfig,
    problem: &Problem,
    start: &[f64],
) -> Result<CurvePoint> {
    config.validate()?;
    let n = problem.n_params(config.ansatz);
    if start.len() != n {
        return Err(Error::Dimension(format!(
            "warm start has {} parameters, ansatz needs {n}",
            start.len()
        )));
    }
    let r = ascend(problem, config, start);
    finish(problem, config, r, 0)
}

/// Starting parameters of restart `index`. Each restart owns an RNG stream
/// derived from the seed, so results do not depend on scheduling.
pub fn restart_start(seed: u64, index: usize, n_params: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    (0..n_params)
        .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect()
}

/// Objective values closer than this are tied.
const TIE_TOL: f64 = 1e-12;

/// Best of `n_restarts` independent ascents from random unitaries.
///
/// Ties on the objective go to the lower infidelity, then to the lower
/// restart index.
pub fn maximize(config: &OptimizerConfig, problem: &Problem) -> Result<CurvePoint> {
    config.validate()?;
    let n = problem.n_params(config.ansatz);
    let run = |index: usize| -> Result<CurvePoint> {
        let start = restart_start(config.rng_seed, index, n);
        let r = ascend(problem, config, &start);
        finish(problem, config, r, index)
    };

    let results: Vec<Result<CurvePoint>> = match config.threads {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
            pool.install(|| (0..config.n_restarts).into_par_iter().map(run).collect())
        }
        None => (0..config.n_restarts).into_par_iter().map(run).collect(),
    };
    let points = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(select_best(points))
}

fn select_best(points: Vec<CurvePoint>) -> CurvePoint {
    let best_value = points
        .iter()
        .map(CurvePoint::normalized_objective)
        .fold(f64::NEG_INFINITY, f64::max);
    points
        .into_iter()
        .filter(|p| p.normalized_objective() >= best_value - TIE_TOL)
        .min_by(|a, b| a.delta.total_cmp(&b.delta).then(a.restart.cmp(&b.restart)))
        .expect("at least one restart")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::target;

    #[test]
    fn identity_device_objective() {
        let p = Problem::knill_cz();
        let u = ModeMatrix::identity(6);
        let (value, undefined) = objective(&u, &p.target, &p.encoding, &p.ancilla, 0.5).unwrap();
        assert!(!undefined);
        // A = I: S = 1, F = 1/4
        assert!((value - (1.0 + 0.25 / 0.5)).abs() < 1e-12);
    }

    #[test]
    fn epsilon_only_reweights_fidelity() {
        let p = Problem::knill_cz();
        let u = p.matrix(AnsatzKind::Knill, &restart_start(7, 0, 16));
        let e = p.evaluate(&u, false).unwrap();
        let (a, _) = objective(&u, &p.target, &p.encoding, &p.ancilla, 0.01).unwrap();
        let (b, _) = objective(&u, &p.target, &p.encoding, &p.ancilla, 0.1).unwrap();
        let f = e.fidelity.unwrap();
        assert!((a - b - (f / 0.01) * 0.9).abs() < 1e-9);
    }

    #[test]
    fn vanishing_map_is_worst_value() {
        // route every ancilla photon away from its detector
        let mut m = nalgebra::DMatrix::<f64>::identity(6, 6);
        m.swap_columns(4, 0);
        m.swap_columns(5, 1);
        let u = ModeMatrix::new(m.map(num_complex::Complex64::from)).unwrap();
        let p = Problem::knill_cz();
        let (value, undefined) = objective(&u, &p.target, &p.encoding, &p.ancilla, 1e-3).unwrap();
        assert!(undefined);
        assert_eq!(value, 0.0);
    }

    #[test]
    fn identity_target_without_ancillas_is_a_fixed_point() {
        let problem = Problem::new(
            target("identity", None).unwrap(),
            DualRailEncoding::standard(2, 0),
            AncillaSpec::none(),
            KnillAnsatz::new(4, vec![0, 2]).unwrap(),
        )
        .unwrap();
        let config = OptimizerConfig {
            epsilon: 0.1,
            n_restarts: 1,
            ansatz: AnsatzKind::Full,
            ..OptimizerConfig::default()
        };
        let p = maximize_from(&config, &problem, &[0.0; 16]).unwrap();
        assert!(p.converged);
        assert_eq!(p.iterations, 0);
        assert!(p.delta.abs() < 1e-15 && (p.success - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_budgets_are_rejected() {
        let p = Problem::knill_cz();
        for bad in [
            OptimizerConfig {
                n_restarts: 0,
                ..Default::default()
            },
            OptimizerConfig {
                epsilon: 0.0,
                ..Default::default()
            },
            OptimizerConfig {
                convergence_tol: -1.0,
                ..Default::default()
            },
            OptimizerConfig {
                threads: Some(0),
                ..Default::default()
            },
        ] {
            assert!(matches!(maximize(&bad, &p), Err(Error::Validation(_))));
        }
    }

    #[test]
    fn restart_streams_are_reproducible_and_distinct() {
        assert_eq!(restart_start(3, 5, 16), restart_start(3, 5, 16));
        assert_ne!(restart_start(3, 5, 16), restart_start(3, 6, 16));
        assert_ne!(restart_start(3, 5, 16), restart_start(4, 5, 16));
    }
}
