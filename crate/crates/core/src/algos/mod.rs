//! Sampling algorithms and the trajectory diagnostics used to check them.

mod baselines;
mod diagnostics;
mod explore;
mod grad;

use std::fmt::{self, Write as _};

pub use baselines::{naive, uniform};
pub use diagnostics::{
    distance_series, distance_series_with_cap, favorable_series, good_count_series, DistanceMode,
    DEFAULT_TREE_CAP,
};
pub use explore::{dexplore, dexplore_with, explore, explore_with};
pub use grad::{ctb, ctb_detailed, gradexplore, CtbDetails, GradOutcome};

use crate::env::{Classification, Problem, RngStream};
use crate::error::{Result, TbpError};
use crate::tree::Node;

/// Sampled position within a node. The `*Next` slots are the arm just right of
/// `L`, `M` or `R`, used by the slope estimates of the concave walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    L,
    M,
    R,
    LNext,
    MNext,
    RNext,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotSample {
    pub slot: Slot,
    /// Walk index; may be one past the last arm for `RNext`.
    pub arm: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Left,
    Right,
    Parent,
    StayAppend,
    DupDescend,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Left => "left",
            Action::Right => "right",
            Action::Parent => "parent",
            Action::StayAppend => "stay_append",
            Action::DupDescend => "dup_descend",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub node: Node,
    pub samples: Vec<SlotSample>,
    pub action: Action,
    pub budget_spent: u64,
    /// Walk index of the arm appended by the concave walk.
    pub appended_arm: Option<usize>,
}

impl StepRecord {
    pub fn mean(&self, slot: Slot) -> Option<f64> {
        self.samples.iter().find(|s| s.slot == slot).map(|s| s.mean)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<StepRecord>,
    /// Node after the last step, `v_{T1+1}`.
    pub final_node: Node,
    pub t1: u64,
    pub t2: u64,
}

impl Trajectory {
    /// Nodes `v_1, ..., v_{T1+1}`.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.steps
            .iter()
            .map(|s| &s.node)
            .chain(std::iter::once(&self.final_node))
    }

    pub fn dump(&self) -> String {
        let mut s = String::from("t,depth,L,M,R,dup,action,budget\n");
        for (t, step) in self.steps.iter().enumerate() {
            let n = &step.node;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                t + 1,
                n.depth(),
                n.l(),
                n.m(),
                n.r(),
                n.dup_count(),
                step.action,
                step.budget_spent
            );
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgoResult {
    /// Crossing index in original coordinates. For increasing searches this is
    /// the first arm labelled `+1` (`K + 1` when none is); for decreasing
    /// searches the last one (`0` when none is). `None` for Uniform.
    pub k_hat: Option<usize>,
    pub q_hat: Classification,
    pub total_budget: u64,
    pub trajectory: Option<Trajectory>,
}

/// List of arms the concave walk found above threshold.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GradState {
    /// Appended arms in original coordinates, in append order.
    pub s: Vec<usize>,
    /// Entries of `s` whose true mean is above threshold; filled in only when
    /// the means are known.
    pub g: usize,
}

/// Whether an algorithm validates the shape of the true means before running.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeCheck {
    Enforce,
    Skip,
}

/// `T1 = ceil(6 ln K)` walk steps and `T2 = floor(T / (3 T1))` draws per arm.
pub fn budget_split(k: usize, budget: u64) -> Result<(u64, u64)> {
    if k < 3 {
        return Err(TbpError::TooFewArms { min: 3, got: k });
    }
    let t1 = (6.0 * (k as f64).ln()).ceil() as u64;
    let t2 = budget / (3 * t1);
    if t2 < 1 {
        return Err(TbpError::BudgetTooSmall(format!(
            "T = {budget} gives T2 = 0 for K = {k} (need T >= {})",
            3 * t1
        )));
    }
    Ok((t1, t2))
}

/// Draws shared between slots that point at the same arm within one step.
struct StepSampler<'a> {
    problem: &'a Problem,
    n: u64,
    drawn: Vec<(usize, f64)>,
    spent: u64,
}

impl<'a> StepSampler<'a> {
    fn new(problem: &'a Problem, n: u64) -> Self {
        StepSampler {
            problem,
            n,
            drawn: Vec::with_capacity(6),
            spent: 0,
        }
    }

    /// Arms past the end of the walk are a Dirac at `-inf`.
    fn mean(&mut self, arm: usize, rng: &mut RngStream) -> Result<f64> {
        if arm > self.problem.len() {
            return Ok(f64::NEG_INFINITY);
        }
        if let Some(&(_, m)) = self.drawn.iter().find(|(a, _)| *a == arm) {
            return Ok(m);
        }
        let (m, cost) = self.problem.sample_mean(arm, self.n, rng)?;
        self.spent += cost;
        self.drawn.push((arm, m));
        Ok(m)
    }
}
