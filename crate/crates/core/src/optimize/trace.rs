//! Continuation in `eps`: the first point gets the full restart budget, each
//! later point is a single ascent warm-started from its predecessor. A second
//! sweep then runs back along the schedule, warm-starting each point from its
//! successor, and keeps whichever of the two candidates has the higher
//! objective. Near `delta = 0` the optimum is degenerate and the forward
//! sweep can settle on a different member of the optimal family than the one
//! the curve continues into; the return sweep pulls the whole curve onto one
//! branch.

use super::{maximize, maximize_from, CurvePoint, OptimizerConfig, Problem};
use crate::error::{Error, Result};

/// Slack on the monotonicity checks along a trace.
pub const MONOTONE_SLACK: f64 = 1e-6;

/// A continuation step may not lose more than this fraction of the
/// (rescaled) objective.
const MAX_OBJECTIVE_LOSS: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct Trace {
    pub points: Vec<CurvePoint>,
    /// Human-readable monotonicity violations; empty for a clean trace.
    pub violations: Vec<String>,
}

/// Default continuation range: wide enough that `delta` reaches a few
/// percent on the CZ family.
pub const DEFAULT_SCHEDULE: (f64, f64, usize) = (1e-4, 5.0, 30);

/// `count` values spaced logarithmically over `[min, max]`, ascending.
pub fn log_schedule(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min) || count == 0 {
        return Err(Error::Validation(
            "log schedule needs 0 < min <= max and count >= 1".into(),
        ));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let (a, b) = (min.ln(), max.ln());
    Ok((0..count)
        .map(|i| {
            if i == count - 1 {
                max
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect())
}

pub fn trace_curve(schedule: &[f64], config: &OptimizerConfig, problem: &Problem) -> Result<Trace> {
    trace_curve_resumable(schedule, config, problem, &[], |_, _| Ok(()))
}

/// Like [`trace_curve`], but reuses `known[i]` as the forward-sweep result
/// for step `i` when present, and reports each forward-sweep point through
/// `on_point` as soon as it exists (for checkpointing). The return sweep is
/// always recomputed, so passing the reported points back in reproduces the
/// trace exactly.
pub fn trace_curve_resumable<F>(
    schedule: &[f64],
    config: &OptimizerConfig,
    problem: &Problem,
    known: &[Option<CurvePoint>],
    mut on_point: F,
) -> Result<Trace>
where
    F: FnMut(usize, &CurvePoint) -> Result<()>,
{
    if schedule.is_empty() {
        return Err(Error::Validation("empty epsilon schedule".into()));
    }
    let ascending = schedule.windows(2).all(|w| w[0] < w[1]);
    let descending = schedule.windows(2).all(|w| w[0] > w[1]);
    if !(ascending || descending) {
        return Err(Error::Validation(
            "epsilon schedule must be strictly monotone".into(),
        ));
    }
    config.validate()?;

    let mut points: Vec<CurvePoint> = Vec::with_capacity(schedule.len());
    for (i, &eps) in schedule.iter().enumerate() {
        let step = OptimizerConfig {
            epsilon: eps,
            ..config.clone()
        };
        let reuse = known
            .get(i)
            .and_then(|k| k.as_ref())
            .filter(|p| p.epsilon == eps && p.ansatz == config.ansatz);
        let point = match (reuse, points.last()) {
            (Some(p), _) => p.clone(),
            (None, None) => maximize(&step, problem)?,
            (None, Some(prev)) => {
                let p = maximize_from(&step, problem, &prev.params)?;
                if p.normalized_objective()
                    < (1.0 - MAX_OBJECTIVE_LOSS) * prev.normalized_objective()
                {
                    return Err(Error::Continuation(format!(
                        "objective fell from {:.6e} to {:.6e} between eps = {:.4e} and {:.4e}; use a finer schedule",
                        prev.normalized_objective(),
                        p.normalized_objective(),
                        prev.epsilon,
                        eps
                    )));
                }
                p
            }
        };
        on_point(i, &point)?;
        points.push(point);
    }

    for i in (0..points.len().saturating_sub(1)).rev() {
        let step = OptimizerConfig {
            epsilon: schedule[i],
            ..config.clone()
        };
        let candidate = maximize_from(&step, problem, &points[i + 1].params)?;
        if candidate.normalized_objective() > points[i].normalized_objective() {
            points[i] = candidate;
        }
    }

    let violations = monotonicity_violations(&points, ascending || points.len() == 1);
    Ok(Trace { points, violations })
}

/// Along increasing `eps` both `delta` and `S` should not decrease.
fn monotonicity_violations(points: &[CurvePoint], ascending: bool) -> Vec<String> {
    let mut out = Vec::new();
    for w in points.windows(2) {
        let (lo, hi) = if ascending {
            (&w[0], &w[1])
        } else {
            (&w[1], &w[0])
        };
        if hi.delta < lo.delta - MONOTONE_SLACK {
            out.push(format!(
                "delta decreased from {:.6e} to {:.6e} as eps went {:.4e} -> {:.4e}",
                lo.delta, hi.delta, lo.epsilon, hi.epsilon
            ));
        }
        if hi.success < lo.success - MONOTONE_SLACK {
            out.push(format!(
                "success decreased from {:.6e} to {:.6e} as eps went {:.4e} -> {:.4e}",
                lo.success, hi.success, lo.epsilon, hi.epsilon
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_schedule_endpoints() {
        let s = log_schedule(1e-4, 1.0, 5).unwrap();
        assert_eq!(s.len(), 5);
        assert!((s[0] - 1e-4).abs() < 1e-18);
        assert_eq!(s[4], 1.0);
        assert!((s[2] - 1e-2).abs() < 1e-15);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(log_schedule(0.0, 1.0, 3).is_err());
    }

    #[test]
    fn non_monotone_schedule_is_rejected() {
        let p = Problem::knill_cz();
        let err = trace_curve(&[0.1, 0.01, 0.2], &OptimizerConfig::default(), &p).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }
}
