//! The effect of one event's change on another within a LEG.
//!
//! For a hypothesis `H` and an explainer `E` whose table moved from `Pr` to
//! `Pr'`:
//!
//! ```text
//! Ef(H, E) = [Pr(HE) - Pr(H) Pr(E)] * [Pr'(H) - Pr(H)] * [Pr'(E) - Pr(E)]
//! ```
//!
//! The covariance factor is read from the table before the update. The
//! measure is symmetric in `H` and `E` and unchanged when `E` is replaced by
//! its complement. A positive effect means the explainer's movement accounts
//! for the hypothesis's movement: a positively correlated event became more
//! likely, or a negatively correlated one became less likely.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::event::{Assignment, EventId};
use crate::table::{Cmd, TableError, ZERO_MASS};

/// Effects at or below this value count as no effect.
pub const EFFECT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EffectError {
    #[error("hypothesis and explainer are the same event ({0})")]
    SameEvent(EventId),
    #[error("before and after tables cover different events")]
    MismatchedTables,
    #[error("hypothesis {0} is certain or impossible; likelihood ratio undefined")]
    DegenerateHypothesis(EventId),
    #[error(transparent)]
    Table(#[from] TableError),
}

impl EffectError {
    pub fn code(&self) -> &'static str {
        match self {
            EffectError::SameEvent(_) => "SameEvent",
            EffectError::MismatchedTables => "MismatchedTables",
            EffectError::DegenerateHypothesis(_) => "DegenerateHypothesis",
            EffectError::Table(e) => e.code(),
        }
    }
}

/// The factors of one effect computation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectBreakdown {
    pub hypothesis: EventId,
    pub explainer: EventId,
    /// `P(HE) - P(H)P(E)` on the before table.
    pub correlation: f64,
    pub delta_h: f64,
    pub delta_e: f64,
    pub effect: f64,
    /// `P(H|E) - P(H)` on the before table; the form shown in
    /// explanations. Zero when `P(E)` is zero.
    pub reported_correlation: f64,
    pub h_before: f64,
    pub h_after: f64,
    pub e_before: f64,
    pub e_after: f64,
    pub update_index: Option<usize>,
}

/// `P(h ∧ e) − P(h) P(e)`.
pub fn covariance(cmd: &Cmd, h: &EventId, e: &EventId) -> Result<f64, EffectError> {
    if h == e {
        return Err(EffectError::SameEvent(h.clone()));
    }
    let ph = cmd.prob_true(h)?;
    let pe = cmd.prob_true(e)?;
    let phe = cmd.prob(&Assignment::single(h.clone(), true).with(e.clone(), true))?;
    Ok(phe - ph * pe)
}

/// `P(h | e) − P(h)`.
pub fn reported_correlation(cmd: &Cmd, h: &EventId, e: &EventId) -> Result<f64, EffectError> {
    if h == e {
        return Err(EffectError::SameEvent(h.clone()));
    }
    let ph = cmd.prob_true(h)?;
    let cond = cmd.conditional(
        &Assignment::single(h.clone(), true),
        &Assignment::single(e.clone(), true),
    )?;
    Ok(cond - ph)
}

pub fn effect_of(before: &Cmd, after: &Cmd, h: &EventId, e: &EventId) -> Result<EffectBreakdown, EffectError> {
    if before.events() != after.events() {
        return Err(EffectError::MismatchedTables);
    }
    let correlation = covariance(before, h, e)?;
    let (h_before, h_after) = (before.prob_true(h)?, after.prob_true(h)?);
    let (e_before, e_after) = (before.prob_true(e)?, after.prob_true(e)?);
    let delta_h = h_after - h_before;
    let delta_e = e_after - e_before;
    let reported_correlation = if e_before > ZERO_MASS {
        reported_correlation(before, h, e)?
    } else {
        0.0
    };
    Ok(EffectBreakdown {
        hypothesis: h.clone(),
        explainer: e.clone(),
        correlation,
        delta_h,
        delta_e,
        effect: correlation * delta_h * delta_e,
        reported_correlation,
        h_before,
        h_after,
        e_before,
        e_after,
        update_index: None,
    })
}

/// Every event other than `h` (restricted to `allowed` when given) whose
/// effect exceeds [`EFFECT_EPSILON`], strongest first. Ties keep the table's
/// event order.
pub fn rank_explainers(
    before: &Cmd,
    after: &Cmd,
    h: &EventId,
    allowed: Option<&BTreeSet<EventId>>,
) -> Result<Vec<EffectBreakdown>, EffectError> {
    before.require(h)?;
    let mut ranked = Vec::new();
    for e in before.events() {
        if e == h || allowed.is_some_and(|a| !a.contains(e)) {
            continue;
        }
        let b = effect_of(before, after, h, e)?;
        if b.effect > EFFECT_EPSILON {
            ranked.push(b);
        }
    }
    // stable sort keeps declaration order among equal effects
    ranked.sort_by(|a, b| b.effect.total_cmp(&a.effect));
    Ok(ranked)
}

/// Prospector's likelihood ratio `P(e | h) / P(e | ¬h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LikelihoodRatio {
    Finite(f64),
    Infinite,
}

impl LikelihoodRatio {
    pub fn as_f64(self) -> f64 {
        match self {
            LikelihoodRatio::Finite(v) => v,
            LikelihoodRatio::Infinite => f64::INFINITY,
        }
    }
}

/// When `e` is impossible under both `h` and `¬h` the ratio is taken as 1.
pub fn likelihood_ratio(cmd: &Cmd, h: &EventId, e: &EventId) -> Result<LikelihoodRatio, EffectError> {
    if h == e {
        return Err(EffectError::SameEvent(h.clone()));
    }
    cmd.require(e)?;
    let ph = cmd.prob_true(h)?;
    if ph <= ZERO_MASS || 1.0 - ph <= ZERO_MASS {
        return Err(EffectError::DegenerateHypothesis(h.clone()));
    }
    let e_true = Assignment::single(e.clone(), true);
    let num = cmd.conditional(&e_true, &Assignment::single(h.clone(), true))?;
    let den = cmd.conditional(&e_true, &Assignment::single(h.clone(), false))?;
    Ok(if den > 0.0 {
        LikelihoodRatio::Finite(num / den)
    } else if num > 0.0 {
        LikelihoodRatio::Infinite
    } else {
        LikelihoodRatio::Finite(1.0)
    })
}

/// The effect measure with the likelihood ratio in place of the covariance.
/// Kept only to show why that substitution fails: the ratio is never
/// negative, so negatively correlated explainers are scored backwards.
pub fn lr_substituted_effect(before: &Cmd, after: &Cmd, h: &EventId, e: &EventId) -> Result<f64, EffectError> {
    let base = effect_of(before, after, h, e)?;
    let lr = likelihood_ratio(before, h, e)?;
    let deltas = base.delta_h * base.delta_e;
    Ok(match lr {
        LikelihoodRatio::Finite(v) => v * deltas,
        LikelihoodRatio::Infinite if deltas == 0.0 => 0.0,
        LikelihoodRatio::Infinite => f64::INFINITY.copysign(deltas),
    })
}
