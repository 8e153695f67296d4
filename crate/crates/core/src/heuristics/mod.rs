//! Fastening-order policies and the driver that runs them to completion.

pub mod hull;
pub mod policies;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{simultaneous_oracle, Action, AssemblyState, GapStats};
use crate::error::{Error, Result};
use crate::model::ReducedModel;
use crate::scalar::Real;

pub use policies::{
    blockwise_next, gap_gradient_next, kf_next, kf_scores, max_gap_next, max_min_divide_next,
    maxarea_next, maxperim_next, HullMeasure,
};

/// The 20-hole configuration used for the main comparison runs.
pub const REFERENCE_HOLES: [usize; 20] = [
    1, 2, 3, 6, 8, 10, 11, 14, 16, 18, 19, 22, 24, 26, 27, 30, 32, 34, 35, 38,
];

/// Sign convention for the gap-gradient difference vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapDelta {
    /// previous minus current gaps: favours holes that closed most
    #[default]
    Reduction,
    /// current minus previous gaps
    Increase,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario<T> {
    /// Eligible holes, ascending and unique.
    pub holes: Vec<usize>,
    pub start: Option<usize>,
    pub max_actions: usize,
    pub n_divisor: usize,
    pub lambda: T,
    pub mean_tol: T,
    pub std_tol: T,
    pub force_floor: T,
    pub gap_delta: GapDelta,
}

impl<T: Real> Scenario<T> {
    /// Scenario over `holes` with default tuning.
    pub fn new(holes: impl IntoIterator<Item = usize>) -> Self {
        let mut holes: Vec<usize> = holes.into_iter().collect();
        holes.sort_unstable();
        holes.dedup();
        Self {
            holes,
            start: None,
            max_actions: 200,
            n_divisor: 2,
            lambda: T::lit(0.6),
            mean_tol: T::lit(0.01),
            std_tol: T::lit(0.02),
            force_floor: T::lit(990.0),
            gap_delta: GapDelta::Reduction,
        }
    }

    pub fn reference() -> Self {
        Self::new(REFERENCE_HOLES)
    }

    pub fn with_start(mut self, start: usize) -> Self {
        self.start = Some(start);
        self
    }

    pub fn with_max_actions(mut self, n: usize) -> Self {
        self.max_actions = n;
        self
    }

    pub fn validate(&self, hole_count: usize) -> Result<()> {
        if self.holes.is_empty() {
            return Err(Error::InvalidParameter("scenario has no holes".into()));
        }
        if let Some(&h) = self.holes.iter().find(|&&h| h >= hole_count) {
            return Err(Error::InvalidParameter(format!("hole {h} does not exist")));
        }
        if let Some(s) = self.start {
            if self.holes.binary_search(&s).is_err() {
                return Err(Error::InvalidParameter(format!(
                    "start hole {s} is not in the scenario"
                )));
            }
        }
        if self.n_divisor == 0 {
            return Err(Error::InvalidParameter("n_divisor must be positive".into()));
        }
        if !(self.lambda >= T::zero() && self.lambda <= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        if !(self.mean_tol >= T::zero() && self.std_tol >= T::zero()) {
            return Err(Error::InvalidParameter("tolerances must be non-negative".into()));
        }
        Ok(())
    }

    /// The same scenario reflected about the pattern's vertical centre line.
    pub fn mirrored(&self, model: &ReducedModel<T>) -> Self {
        let layout = model.layout();
        let mut out = self.clone();
        out.holes = self.holes.iter().map(|&h| layout.mirror(h)).collect();
        out.holes.sort_unstable();
        out.start = self.start.map(|s| layout.mirror(s));
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    MaxGap,
    MaxMinDivide,
    Blockwise,
    MaxPerim,
    MaxArea,
    GapGradient,
    Kf,
}

impl Policy {
    pub const ALL: [Policy; 7] = [
        Policy::MaxGap,
        Policy::MaxMinDivide,
        Policy::Blockwise,
        Policy::MaxPerim,
        Policy::MaxArea,
        Policy::GapGradient,
        Policy::Kf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::MaxGap => "maxgap",
            Policy::MaxMinDivide => "maxmindivide",
            Policy::Blockwise => "blockwise",
            Policy::MaxPerim => "maxperim",
            Policy::MaxArea => "maxarea",
            Policy::GapGradient => "gapgradient",
            Policy::Kf => "kf",
        }
    }

    /// Next action, or `None` when the policy has nothing left to do.
    pub fn next<T: Real>(
        self,
        state: &AssemblyState<'_, T>,
        scenario: &Scenario<T>,
        prev_gaps: &[T],
    ) -> Result<Option<Action>> {
        Ok(match self {
            Policy::MaxGap => max_gap_next(state, scenario),
            Policy::MaxMinDivide => max_min_divide_next(state, scenario),
            Policy::Blockwise => blockwise_next(state, scenario),
            Policy::MaxPerim => maxperim_next(state, scenario),
            Policy::MaxArea => maxarea_next(state, scenario),
            Policy::GapGradient => gap_gradient_next(state, scenario, prev_gaps),
            Policy::Kf => return kf_next(state, scenario),
        })
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPolicy(s.to_owned()))
    }
}

/// `lambda * var(gaps) + (1 - lambda) * mean(gaps)`.
pub fn loss<T: Real>(state: &AssemblyState<'_, T>, lambda: T) -> T {
    loss_of(&state.stats(), lambda)
}

pub fn loss_of<T: Real>(stats: &GapStats<T>, lambda: T) -> T {
    lambda * stats.gap_var + (T::one() - lambda) * stats.gap_mean
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    AllInstalled,
    NoAction,
    ActionCap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep<T> {
    pub step: usize,
    /// `None` for the initial state.
    pub action: Option<Action>,
    pub stats: GapStats<T>,
    pub loss: T,
    pub gaps: Vec<T>,
    pub forces: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult<T> {
    pub policy: Policy,
    pub sequence: Vec<Action>,
    /// Initial state followed by one entry per action.
    pub trace: Vec<TraceStep<T>>,
    /// Final state satisfies the 1000 +/- 25 N criterion.
    pub converged: bool,
    pub stop: StopReason,
    pub actions_used: usize,
    pub final_loss: T,
    pub oracle: GapStats<T>,
}

impl<T: Real> RunResult<T> {
    pub fn final_stats(&self) -> &GapStats<T> {
        &self.trace.last().expect("trace holds the initial state").stats
    }

    /// Smallest gap seen over the whole run.
    pub fn min_gap(&self) -> T {
        self.trace
            .iter()
            .flat_map(|t| t.gaps.iter().copied())
            .fold(T::infinity(), T::min)
    }
}

fn record<T: Real>(
    state: &AssemblyState<'_, T>,
    step: usize,
    action: Option<Action>,
    lambda: T,
) -> TraceStep<T> {
    let stats = state.stats();
    TraceStep {
        step,
        action,
        loss: loss_of(&stats, lambda),
        stats,
        gaps: state.gaps(),
        forces: state.current_forces(),
    }
}

/// Runs `policy` from an open assembly until its stopping rule fires.
///
/// Stops when the forces are in band (for the hull policies the gap mean and
/// standard deviation must also be within tolerance of the simultaneous
/// installation), when the policy has no action left, or at `max_actions`.
/// The gap-gradient policy runs until every scenario hole is installed.
pub fn run_heuristic<T: Real>(
    model: &ReducedModel<T>,
    scenario: &Scenario<T>,
    policy: Policy,
) -> Result<RunResult<T>> {
    scenario.validate(model.hole_count())?;
    let oracle = simultaneous_oracle(model, &scenario.holes)?;

    let mut state = AssemblyState::new(model);
    let mut prev_gaps = state.gaps();
    let mut trace = vec![record(&state, 0, None, scenario.lambda)];

    let done = |s: &AssemblyState<'_, T>| -> Option<StopReason> {
        match policy {
            Policy::GapGradient => scenario
                .holes
                .iter()
                .all(|&h| s.is_installed(h))
                .then_some(StopReason::AllInstalled),
            Policy::MaxPerim | Policy::MaxArea => {
                let st = s.stats();
                (s.is_converged(&scenario.holes)
                    && (st.gap_mean - oracle.gap_mean).abs() <= scenario.mean_tol
                    && (st.gap_std - oracle.gap_std).abs() <= scenario.std_tol)
                    .then_some(StopReason::Converged)
            }
            _ => s
                .is_converged(&scenario.holes)
                .then_some(StopReason::Converged),
        }
    };

    let stop = loop {
        if let Some(reason) = done(&state) {
            break reason;
        }
        if state.log().len() >= scenario.max_actions {
            break StopReason::ActionCap;
        }
        let Some(action) = policy.next(&state, scenario, &prev_gaps)? else {
            break StopReason::NoAction;
        };
        let next = state.apply_action(action)?;
        prev_gaps = state.gaps();
        state = next;
        trace.push(record(&state, trace.len(), Some(action), scenario.lambda));
    };

    let sequence = state.log().to_vec();
    Ok(RunResult {
        policy,
        actions_used: sequence.len(),
        sequence,
        converged: state.is_converged(&scenario.holes),
        stop,
        final_loss: trace.last().expect("initial state recorded").loss,
        trace,
        oracle,
    })
}

#[derive(Clone, Debug)]
pub struct StarterOutcome<T> {
    pub starter: usize,
    pub result: RunResult<T>,
}

/// Gap-gradient run from every scenario hole, in ascending starter order.
pub fn sweep_starters<T: Real>(
    model: &ReducedModel<T>,
    scenario: &Scenario<T>,
) -> Result<Vec<StarterOutcome<T>>> {
    scenario.validate(model.hole_count())?;
    scenario
        .holes
        .par_iter()
        .map(|&starter| {
            let sc = scenario.clone().with_start(starter);
            run_heuristic(model, &sc, Policy::GapGradient)
                .map(|result| StarterOutcome { starter, result })
        })
        .collect()
}

/// Starter whose gap-gradient run ends with the smallest loss.
pub fn best_starter<T: Real>(
    model: &ReducedModel<T>,
    scenario: &Scenario<T>,
) -> Result<(usize, RunResult<T>)> {
    let outcomes = sweep_starters(model, scenario)?;
    pick_best(&outcomes)
        .map(|o| (o.starter, o.result.clone()))
        .ok_or_else(|| Error::InvalidParameter("scenario has no holes".into()))
}

/// Lowest final loss, ties to the lowest starter.
pub fn pick_best<T: Real>(outcomes: &[StarterOutcome<T>]) -> Option<&StarterOutcome<T>> {
    outcomes.iter().fold(None, |best: Option<&StarterOutcome<T>>, o| match best {
        Some(b) if b.result.final_loss <= o.result.final_loss => Some(b),
        _ => Some(o),
    })
}
