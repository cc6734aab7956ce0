//! Minimum-information updating of a single table.
//!
//! A table is moved onto a set of marginal constraints by iterative
//! proportional fitting: each constraint in turn rescales the cells so that
//! the table's marginal over the constraint's events matches the target. The
//! fixed point is the distribution closest to the prior in Kullback-Leibler
//! divergence among those satisfying every constraint. With a single
//! constraint one rescaling is exact, and for a single event it is Jeffrey's
//! rule.

use thiserror::Error;

use crate::event::EventId;
use crate::table::{project_index, Cmd, TableError, ZERO_MASS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UpdateError {
    #[error("unknown LEG {0}")]
    UnknownLeg(String),
    #[error("event {event} is not in LEG {leg}")]
    UnknownEvent { leg: String, event: EventId },
    #[error("target probability {value} for {event} is outside [0, 1]")]
    TargetOutOfRange { event: EventId, value: f64 },
    #[error("evidence carries no constraints")]
    NoConstraints,
    #[error("impossible evidence: {0}")]
    ImpossibleEvidence(String),
    #[error("projection did not converge after {iterations} cycles (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("unknown update {0}")]
    UnknownUpdate(usize),
    #[error("recorded history is inconsistent: {0}")]
    InvalidHistory(String),
    #[error(transparent)]
    Table(#[from] TableError),
}

impl UpdateError {
    pub fn code(&self) -> &'static str {
        match self {
            UpdateError::UnknownLeg(_) => "UnknownLeg",
            UpdateError::UnknownEvent { .. } => "UnknownEvent",
            UpdateError::TargetOutOfRange { .. } => "TargetOutOfRange",
            UpdateError::NoConstraints => "NoConstraints",
            UpdateError::ImpossibleEvidence(_) => "ImpossibleEvidence",
            UpdateError::NoConvergence { .. } => "NoConvergence",
            UpdateError::UnknownUpdate(_) => "UnknownUpdate",
            UpdateError::InvalidHistory(_) => "InvalidHistory",
            UpdateError::Table(e) => e.code(),
        }
    }
}

/// Stopping rule for [`ipf_project`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpfOptions {
    /// Largest per-cell marginal residual accepted as converged.
    pub tol: f64,
    /// Maximum number of full cycles over the constraints.
    pub max_iter: usize,
}

impl Default for IpfOptions {
    fn default() -> Self {
        IpfOptions {
            tol: 1e-9,
            max_iter: 1000,
        }
    }
}

/// Jeffrey's rule: moves `P(event)` to `target` while keeping every
/// conditional given `event` and given its negation.
pub fn jeffrey_update(cmd: &Cmd, event: &EventId, target: f64) -> Result<Cmd, UpdateError> {
    if !(0.0..=1.0).contains(&target) {
        return Err(UpdateError::TargetOutOfRange {
            event: event.clone(),
            value: target,
        });
    }
    let bit = 1usize << cmd.require(event)?;
    let (mut p_false, mut p_true) = (0.0, 0.0);
    for (i, &c) in cmd.cells().iter().enumerate() {
        if i & bit != 0 {
            p_true += c;
        } else {
            p_false += c;
        }
    }
    if target > 0.0 && p_true <= ZERO_MASS {
        return Err(UpdateError::ImpossibleEvidence(format!(
            "{event} has zero prior probability"
        )));
    }
    let off = 1.0 - target;
    if off > 0.0 && p_false <= ZERO_MASS {
        return Err(UpdateError::ImpossibleEvidence(format!(
            "{event} is certain under the prior"
        )));
    }
    let f_true = if target == 0.0 { 0.0 } else { target / p_true };
    let f_false = if off == 0.0 { 0.0 } else { off / p_false };
    let cells = cmd
        .cells()
        .iter()
        .enumerate()
        .map(|(i, &c)| c * if i & bit != 0 { f_true } else { f_false })
        .collect();
    Ok(Cmd::from_parts(cmd.events().to_vec(), cells))
}

/// Projects `cmd` onto the marginal constraints in `targets` (each target's
/// events name the constrained subset). Always runs at least one cycle; cells
/// that are zero stay zero.
pub fn ipf_project(cmd: &Cmd, targets: &[Cmd], opts: IpfOptions) -> Result<Cmd, UpdateError> {
    if targets.is_empty() {
        return Err(UpdateError::NoConstraints);
    }
    let positions = targets
        .iter()
        .map(|t| {
            let pos = t
                .events()
                .iter()
                .map(|e| cmd.require(e))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(pos)
        })
        .collect::<Result<Vec<_>, TableError>>()?;

    // Each constraint on its own must put mass only where the prior has some.
    for (target, pos) in targets.iter().zip(&positions) {
        let prior = marginal_cells(cmd.cells(), pos);
        if let Some(s) = (0..prior.len()).find(|&s| target.cells()[s] > 0.0 && prior[s] <= ZERO_MASS)
        {
            return Err(UpdateError::ImpossibleEvidence(format!(
                "{} requires mass on a configuration with zero prior probability",
                describe(target.events(), s)
            )));
        }
    }

    let mut cells = cmd.cells().to_vec();
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        for (target, pos) in targets.iter().zip(&positions) {
            let current = marginal_cells(&cells, pos);
            let factors = current
                .iter()
                .zip(target.cells())
                .enumerate()
                .map(|(s, (&have, &want))| {
                    if want == 0.0 {
                        Ok(0.0)
                    } else if have > 0.0 {
                        Ok(want / have)
                    } else if want > opts.tol {
                        Err(UpdateError::ImpossibleEvidence(format!(
                            "constraints on {} cannot hold together",
                            describe(target.events(), s)
                        )))
                    } else {
                        Ok(0.0)
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            for (i, c) in cells.iter_mut().enumerate() {
                *c *= factors[project_index(i, pos)];
            }
        }
        residual = targets
            .iter()
            .zip(&positions)
            .map(|(target, pos)| {
                marginal_cells(&cells, pos)
                    .iter()
                    .zip(target.cells())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if residual <= opts.tol {
            return Ok(Cmd::from_parts(cmd.events().to_vec(), cells));
        }
    }
    Err(UpdateError::NoConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

/// Kullback-Leibler divergence `D(q || p)` in nats.
pub fn kl_divergence(q: &Cmd, p: &Cmd) -> f64 {
    q.cells()
        .iter()
        .zip(p.cells())
        .map(|(&qi, &pi)| {
            if qi == 0.0 {
                0.0
            } else if pi == 0.0 {
                f64::INFINITY
            } else {
                qi * (qi / pi).ln()
            }
        })
        .sum()
}

fn marginal_cells(cells: &[f64], positions: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; 1usize << positions.len()];
    for (i, &c) in cells.iter().enumerate() {
        out[project_index(i, positions)] += c;
    }
    out
}

fn describe(events: &[EventId], s: usize) -> String {
    events
        .iter()
        .enumerate()
        .map(|(k, e)| format!("{e}={}", (s >> k) & 1 == 1))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Single-event target marginal `[1 - p, p]`.
pub(crate) fn event_target(event: &EventId, p: f64) -> Result<Cmd, UpdateError> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(UpdateError::TargetOutOfRange {
            event: event.clone(),
            value: p,
        });
    }
    Ok(Cmd::from_parts(vec![event.clone()], vec![1.0 - p, p]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Assignment;

    fn ev(names: &[&str]) -> Vec<EventId> {
        names.iter().map(|n| EventId::from(*n)).collect()
    }

    fn ticket_table() -> Cmd {
        Cmd::new(ev(&["E", "H"]), vec![0.8995, 0.0105, 0.0505, 0.0395]).unwrap()
    }

    #[test]
    fn vacuous_constraint_is_identity() {
        let c = ticket_table();
        let p = c.prob_true(&"E".into()).unwrap();
        let r = jeffrey_update(&c, &"E".into(), p).unwrap();
        assert!(r.max_abs_diff(&c).unwrap() < 1e-12);
    }

    #[test]
    fn jeffrey_moves_hypothesis() {
        let c = ticket_table();
        let r = jeffrey_update(&c, &"E".into(), 0.01).unwrap();
        assert!((r.prob_true(&"E".into()).unwrap() - 0.01).abs() < 1e-12);
        let expected = 0.79 * 0.01 + (0.0505 / 0.95) * 0.99;
        assert!((r.prob_true(&"H".into()).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.0605).abs() < 5e-4);
        // conditionals on both sides of E are untouched
        for v in [true, false] {
            let given = Assignment::single("E", v);
            let h = Assignment::single("H", true);
            let before = c.conditional(&h, &given).unwrap();
            let after = r.conditional(&h, &given).unwrap();
            assert!((before - after).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_mass_evidence_is_impossible() {
        let c = Cmd::new(ev(&["E", "H"]), vec![0.5, 0.0, 0.5, 0.0]).unwrap();
        assert!(matches!(
            jeffrey_update(&c, &"E".into(), 1.0),
            Err(UpdateError::ImpossibleEvidence(_))
        ));
        assert!(matches!(
            ipf_project(&c, &[event_target(&"E".into(), 1.0).unwrap()], IpfOptions::default()),
            Err(UpdateError::ImpossibleEvidence(_))
        ));
        // certain event cannot be moved off 1 either
        let certain = Cmd::new(ev(&["E", "H"]), vec![0.0, 0.5, 0.0, 0.5]).unwrap();
        assert!(matches!(
            jeffrey_update(&certain, &"E".into(), 0.5),
            Err(UpdateError::ImpossibleEvidence(_))
        ));
        // ruling out an already-impossible event is fine
        assert!(jeffrey_update(&c, &"E".into(), 0.0).is_ok());
    }

    #[test]
    fn fixed_point_is_unchanged() {
        let c = ticket_table();
        let targets = vec![c.marginal(&ev(&["E"])).unwrap(), c.marginal(&ev(&["H"])).unwrap()];
        let r = ipf_project(&c, &targets, IpfOptions::default()).unwrap();
        assert!(r.max_abs_diff(&c).unwrap() < 1e-12);
    }

    #[test]
    fn joint_constraints_that_conflict_are_reported() {
        // A and B never co-occur, yet both are asserted.
        let c = Cmd::new(ev(&["A", "B"]), vec![0.4, 0.3, 0.3, 0.0]).unwrap();
        let targets = vec![
            event_target(&"A".into(), 1.0).unwrap(),
            event_target(&"B".into(), 1.0).unwrap(),
        ];
        assert!(matches!(
            ipf_project(&c, &targets, IpfOptions::default()),
            Err(UpdateError::ImpossibleEvidence(_))
        ));
    }

    #[test]
    fn no_convergence_reports_residual() {
        // Soft joint constraints that IPF approaches only asymptotically.
        let c = Cmd::new(ev(&["A", "B"]), vec![0.4, 0.3, 0.3, 0.0]).unwrap();
        let targets = vec![
            event_target(&"A".into(), 0.6).unwrap(),
            event_target(&"B".into(), 0.4).unwrap(),
        ];
        let err = ipf_project(
            &c,
            &targets,
            IpfOptions {
                tol: 1e-15,
                max_iter: 3,
            },
        )
        .unwrap_err();
        assert!(matches!(err, UpdateError::NoConvergence { iterations: 3, .. }));
    }

    #[test]
    fn out_of_range_target() {
        let c = ticket_table();
        assert!(matches!(
            jeffrey_update(&c, &"E".into(), 1.2),
            Err(UpdateError::TargetOutOfRange { .. })
        ));
    }

    #[test]
    fn kl_of_identical_tables_is_zero() {
        let c = ticket_table();
        assert_eq!(kl_divergence(&c, &c), 0.0);
    }
}
