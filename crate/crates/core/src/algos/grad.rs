use super::explore::{dexplore_with, explore_with};
use super::{
    budget_split, Action, AlgoResult, GradState, ShapeCheck, Slot, SlotSample, StepRecord,
    StepSampler, Trajectory,
};
use crate::env::{augment, shape_check, Classification, Problem, RngStream, Sentinels, ShapeClass};
use crate::error::{Result, TbpError};
use crate::tree;

#[derive(Debug, Clone, PartialEq)]
pub struct GradOutcome {
    pub state: GradState,
    pub trajectory: Trajectory,
    pub total_budget: u64,
}

/// Slope `to - from` between neighbouring arms. Two `-inf` neighbours only
/// occur past the right end of the walk, where the sequence is falling.
fn slope(from: f64, to: f64, at_right_end: bool) -> f64 {
    if from == f64::NEG_INFINITY && to == f64::NEG_INFINITY {
        if at_right_end {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    } else {
        to - from
    }
}

/// Slope-guided walk that collects arms estimated above threshold.
///
/// `T1 = ceil(6 ln K')`, `T2 = floor(3 B / (3 T1))` and each of the arms
/// `{l, l+1, m, m+1, r, r+1}` gets `floor(T2 / 12)` draws per step. Arms that
/// coincide within a step share one sample.
pub fn gradexplore(problem: &Problem, budget: u64, rng: &mut RngStream) -> Result<GradOutcome> {
    let walk = concave_walk_problem(problem)?;
    let len = walk.len();
    let (t1, t2) = budget_split(len, budget.saturating_mul(3))?;
    let n = t2 / 12;
    if n < 1 {
        return Err(TbpError::BudgetTooSmall(format!(
            "gradexplore needs T2 >= 12, got T2 = {t2} from budget {budget}"
        )));
    }
    let tau = walk.tau();

    let mut node = tree::root(len)?;
    let mut state = GradState::default();
    let mut steps = Vec::with_capacity(t1 as usize);
    let mut total = 0;
    for _ in 0..t1 {
        let mut sampler = StepSampler::new(&walk, n);
        let slots = [
            (Slot::L, Slot::LNext, node.l()),
            (Slot::M, Slot::MNext, node.m()),
            (Slot::R, Slot::RNext, node.r()),
        ];
        let mut samples = Vec::with_capacity(6);
        let mut slopes = [0.0; 3];
        let mut appended = None;
        for (i, &(slot, next_slot, arm)) in slots.iter().enumerate() {
            let here = sampler.mean(arm, rng)?;
            let next = sampler.mean(arm + 1, rng)?;
            samples.push(SlotSample { slot, arm, mean: here });
            samples.push(SlotSample {
                slot: next_slot,
                arm: arm + 1,
                mean: next,
            });
            slopes[i] = slope(here, next, arm >= len);
            if appended.is_none() && here > tau {
                appended = Some(arm);
            }
        }

        let action = if appended.is_some() {
            Action::StayAppend
        } else if !(slopes[0] > 0.0 && slopes[2] < 0.0) {
            Action::Parent
        } else if node.is_leaf() {
            Action::DupDescend
        } else if slopes[1] >= 0.0 {
            Action::Right
        } else {
            Action::Left
        };
        let next = match action {
            Action::StayAppend => node.clone(),
            Action::Parent => node.parent(),
            Action::Left => node.left().expect("non-leaf has a left child"),
            Action::Right | Action::DupDescend => node.right(),
        };

        if let Some(arm) = appended {
            // Sentinels sit at -inf and are never appended.
            let original = walk.to_original(arm).expect("appended arm is not a sentinel");
            state.s.push(original);
            if walk.means()[original - 1] > tau {
                state.g += 1;
            }
        }
        total += sampler.spent;
        steps.push(StepRecord {
            node,
            samples,
            action,
            budget_spent: sampler.spent,
            appended_arm: appended,
        });
        node = next;
    }

    Ok(GradOutcome {
        state,
        trajectory: Trajectory {
            steps,
            final_node: node,
            t1,
            t2,
        },
        total_budget: total,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtbDetails {
    pub grad: GradOutcome,
    /// Lower median of the appended arms, when the list was long enough.
    pub median_arm: Option<usize>,
    /// First arm labelled `+1` by the increasing search on `[1, median]`.
    pub l: Option<usize>,
    /// Last arm labelled `+1` by the decreasing search on `[median, K]`.
    pub r: Option<usize>,
    pub left: Option<AlgoResult>,
    pub right: Option<AlgoResult>,
    pub result: AlgoResult,
}

/// Concave thresholding: locate an above-threshold arm with [`gradexplore`],
/// then search each side of it for the threshold crossing. Each phase gets
/// `floor(T / 3)`.
pub fn ctb(problem: &Problem, budget: u64, rng: &mut RngStream) -> Result<AlgoResult> {
    Ok(ctb_detailed(problem, budget, rng, ShapeCheck::Enforce)?.result)
}

pub fn ctb_detailed(
    problem: &Problem,
    budget: u64,
    rng: &mut RngStream,
    check: ShapeCheck,
) -> Result<CtbDetails> {
    let base = problem.without_sentinels();
    if check == ShapeCheck::Enforce && !shape_check(&base, ShapeClass::Concave) {
        return Err(TbpError::ShapeViolated("ctb needs concave means".into()));
    }
    let k = base.k();
    let phase = budget / 3;
    // The directional searches must be feasible before any sampling starts.
    budget_split(k + 2, phase)?;
    let grad = gradexplore(&augment(&base, ShapeClass::Concave)?, phase, rng)?;

    let t1 = grad.trajectory.t1;
    if (grad.state.s.len() as f64) <= t1 as f64 / 4.0 {
        let result = AlgoResult {
            k_hat: None,
            q_hat: Classification::all_negative(k),
            total_budget: grad.total_budget,
            trajectory: Some(grad.trajectory.clone()),
        };
        return Ok(CtbDetails {
            grad,
            median_arm: None,
            l: None,
            r: None,
            left: None,
            right: None,
            result,
        });
    }

    let mut sorted = grad.state.s.clone();
    sorted.sort_unstable();
    let median = sorted[(sorted.len() - 1) / 2];

    let left = explore_with(&base.segment(1, median)?, phase, rng, ShapeCheck::Skip)?;
    let right = dexplore_with(&base.segment(median, k)?, phase, rng, ShapeCheck::Skip)?;
    let l = left.k_hat.expect("explore reports a crossing");
    let r = median - 1 + right.k_hat.expect("dexplore reports a crossing");

    let q_hat = Classification::from_predicate(k, |j| l <= j && j <= r);
    let result = AlgoResult {
        k_hat: Some(median),
        q_hat,
        total_budget: grad.total_budget + left.total_budget + right.total_budget,
        trajectory: Some(grad.trajectory.clone()),
    };
    Ok(CtbDetails {
        grad,
        median_arm: Some(median),
        l: Some(l),
        r: Some(r),
        left: Some(left),
        right: Some(right),
        result,
    })
}

fn concave_walk_problem(problem: &Problem) -> Result<Problem> {
    match problem.sentinels() {
        None => augment(problem, ShapeClass::Concave),
        Some(s) if s == Sentinels::CONCAVE => Ok(problem.clone()),
        Some(_) => Err(TbpError::Precondition(
            "concave walks need (-inf, -inf) sentinels".into(),
        )),
    }
}
