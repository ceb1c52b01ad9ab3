use super::{budget_split, Action, AlgoResult, ShapeCheck, Slot, SlotSample, StepRecord, StepSampler, Trajectory};
use crate::env::{augment, shape_check, Classification, Problem, RngStream, Sentinels, ShapeClass};
use crate::error::{Result, TbpError};
use crate::tree;

/// Binary search with corrections on an increasing (or relaxed increasing)
/// problem. Plain problems are augmented with `(-inf, +inf)` sentinels first.
pub fn explore(problem: &Problem, budget: u64, rng: &mut RngStream) -> Result<AlgoResult> {
    explore_with(problem, budget, rng, ShapeCheck::Enforce)
}

pub fn explore_with(
    problem: &Problem,
    budget: u64,
    rng: &mut RngStream,
    check: ShapeCheck,
) -> Result<AlgoResult> {
    let walk = monotone_walk_problem(problem)?;
    if check == ShapeCheck::Enforce && !shape_check(&walk, ShapeClass::RelaxedMonotone) {
        return Err(TbpError::ShapeViolated(
            "explore needs a below-then-above sign pattern".into(),
        ));
    }
    let (t1, t2) = budget_split(walk.len(), budget)?;
    let tau = walk.tau();

    let mut node = tree::root(walk.len())?;
    let mut steps = Vec::with_capacity(t1 as usize);
    let mut total = 0;
    for _ in 0..t1 {
        let mut sampler = StepSampler::new(&walk, t2);
        let (l, m, r) = (node.l(), node.m(), node.r());
        let mu_l = sampler.mean(l, rng)?;
        let mu_m = sampler.mean(m, rng)?;
        let mu_r = sampler.mean(r, rng)?;

        let action = if !(mu_l <= tau && tau <= mu_r) {
            Action::Parent
        } else if node.is_leaf() {
            Action::DupDescend
        } else if mu_m <= tau && tau <= mu_r {
            Action::Right
        } else {
            Action::Left
        };
        let next = match action {
            Action::Parent => node.parent(),
            Action::Left => node.left().expect("non-leaf has a left child"),
            Action::Right | Action::DupDescend => node.right(),
            Action::StayAppend => unreachable!(),
        };

        total += sampler.spent;
        steps.push(StepRecord {
            node,
            samples: vec![
                SlotSample { slot: Slot::L, arm: l, mean: mu_l },
                SlotSample { slot: Slot::M, arm: m, mean: mu_m },
                SlotSample { slot: Slot::R, arm: r, mean: mu_r },
            ],
            action,
            budget_spent: sampler.spent,
            appended_arm: None,
        });
        node = next;
    }

    // Walk index R >= 2, so the original crossing lies in 1..=K+1.
    let k_hat = node.r() - 1;
    let q_hat = Classification::from_predicate(walk.k(), |j| j >= k_hat);
    Ok(AlgoResult {
        k_hat: Some(k_hat),
        q_hat,
        total_budget: total,
        trajectory: Some(Trajectory {
            steps,
            final_node: node,
            t1,
            t2,
        }),
    })
}

/// `explore` on the reversed arm order `k -> K + 1 - k`, for decreasing
/// problems. The returned `k_hat` is the last arm labelled `+1`, or `0`.
/// The trajectory is in reversed coordinates.
pub fn dexplore(problem: &Problem, budget: u64, rng: &mut RngStream) -> Result<AlgoResult> {
    dexplore_with(problem, budget, rng, ShapeCheck::Enforce)
}

pub fn dexplore_with(
    problem: &Problem,
    budget: u64,
    rng: &mut RngStream,
    check: ShapeCheck,
) -> Result<AlgoResult> {
    if problem.is_augmented() {
        return Err(TbpError::Precondition(
            "dexplore takes the original problem; it adds its own sentinels".into(),
        ));
    }
    let k = problem.k();
    let rev = explore_with(&problem.reversed(), budget, rng, check)?;
    let q_hat = Classification::from_predicate(k, |j| rev.q_hat.get(k + 1 - j) == 1);
    let k_hat = rev.k_hat.map(|kr| k + 1 - kr);
    Ok(AlgoResult { k_hat, q_hat, ..rev })
}

pub(super) fn monotone_walk_problem(problem: &Problem) -> Result<Problem> {
    match problem.sentinels() {
        None => augment(problem, ShapeClass::Monotone),
        Some(s) if s == Sentinels::MONOTONE => Ok(problem.clone()),
        Some(_) => Err(TbpError::Precondition(
            "monotone walks need (-inf, +inf) sentinels".into(),
        )),
    }
}
