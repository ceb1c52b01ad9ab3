use super::explore::monotone_walk_problem;
use super::{Action, AlgoResult, Slot, SlotSample, StepRecord, StepSampler, Trajectory};
use crate::env::{Classification, Problem, RngStream};
use crate::error::{Result, TbpError};
use crate::tree;

/// Plain binary search without backtracking. Walks `H = max_depth(K')` steps
/// and spends `floor(T / H)` draws on the middle arm of each node.
pub fn naive(problem: &Problem, budget: u64, rng: &mut RngStream) -> Result<AlgoResult> {
    let walk = monotone_walk_problem(problem)?;
    let depth = tree::max_depth(walk.len()) as u64;
    let n = budget / depth;
    if n < 1 {
        return Err(TbpError::BudgetTooSmall(format!(
            "naive needs T >= {depth}, got {budget}"
        )));
    }
    let tau = walk.tau();
    let mut node = tree::root(walk.len())?;
    let mut steps = Vec::with_capacity(depth as usize);
    let mut total = 0;
    for _ in 0..depth {
        let mut sampler = StepSampler::new(&walk, n);
        let m = node.m();
        let mu_m = sampler.mean(m, rng)?;
        // A leaf has no left child; either way the walk stays on its chain.
        let action = if node.is_leaf() {
            Action::DupDescend
        } else if mu_m <= tau {
            Action::Right
        } else {
            Action::Left
        };
        let next = match action {
            Action::Left => node.left().expect("non-leaf has a left child"),
            _ => node.right(),
        };
        total += sampler.spent;
        steps.push(StepRecord {
            node,
            samples: vec![SlotSample {
                slot: Slot::M,
                arm: m,
                mean: mu_m,
            }],
            action,
            budget_spent: sampler.spent,
            appended_arm: None,
        });
        node = next;
    }
    let k_hat = node.r() - 1;
    Ok(AlgoResult {
        k_hat: Some(k_hat),
        q_hat: Classification::from_predicate(walk.k(), |j| j >= k_hat),
        total_budget: total,
        trajectory: Some(Trajectory {
            steps,
            final_node: node,
            t1: depth,
            t2: n,
        }),
    })
}

/// `floor(T / K)` draws per original arm, then elementwise thresholding.
/// Sentinels, if present, are ignored.
pub fn uniform(problem: &Problem, budget: u64, rng: &mut RngStream) -> Result<AlgoResult> {
    let base = problem.without_sentinels();
    let k = base.k();
    let n = budget / k as u64;
    if n < 1 {
        return Err(TbpError::BudgetTooSmall(format!(
            "uniform needs T >= K = {k}, got {budget}"
        )));
    }
    let tau = base.tau();
    let mut labels = Vec::with_capacity(k);
    let mut total = 0;
    for arm in 1..=k {
        let (mu, cost) = base.sample_mean(arm, n, rng)?;
        total += cost;
        labels.push(if mu >= tau { 1 } else { -1 });
    }
    Ok(AlgoResult {
        k_hat: None,
        q_hat: Classification::from_labels(labels)?,
        total_budget: total,
        trajectory: None,
    })
}
