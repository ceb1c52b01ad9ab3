use super::Trajectory;
use crate::env::{augment, gaps, Problem, ShapeClass};
use crate::error::{Result, TbpError};
use crate::tree::{self, Node, Triple};

/// Which potential [`distance_series`] computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMode {
    /// Distance to the unique leaf whose endpoints bracket the threshold.
    Monotone,
    /// Distance to the set of nodes touching an arm strictly above threshold.
    Concave,
}

/// Largest walk length for which the original tree is enumerated.
pub const DEFAULT_TREE_CAP: usize = 2048;

pub fn distance_series(
    trajectory: &Trajectory,
    problem: &Problem,
    mode: DistanceMode,
) -> Result<Vec<i64>> {
    distance_series_with_cap(trajectory, problem, mode, DEFAULT_TREE_CAP)
}

/// `D_t` for `t = 1..=T1+1` along the trajectory.
pub fn distance_series_with_cap(
    trajectory: &Trajectory,
    problem: &Problem,
    mode: DistanceMode,
    cap: usize,
) -> Result<Vec<i64>> {
    let walk = match (problem.is_augmented(), mode) {
        (true, _) => problem.clone(),
        (false, DistanceMode::Monotone) => augment(problem, ShapeClass::Monotone)?,
        (false, DistanceMode::Concave) => augment(problem, ShapeClass::Concave)?,
    };
    let len = walk.len();
    if len > cap {
        return Err(TbpError::Precondition(format!(
            "tree over {len} arms exceeds the enumeration cap {cap}"
        )));
    }
    check_matches(trajectory, len)?;
    let values = walk.values();
    let mu = |arm: usize| values[arm - 1];
    let tau = walk.tau();
    let original = tree::preorder(len)?;

    match mode {
        DistanceMode::Monotone => {
            let mut brackets = original
                .iter()
                .filter(|v| v.is_leaf() && mu(v.l()) <= tau && tau <= mu(v.r()));
            let target = brackets.next().ok_or_else(|| {
                TbpError::Precondition("no leaf brackets the threshold".into())
            })?;
            if brackets.next().is_some() {
                return Err(TbpError::Precondition(
                    "more than one leaf brackets the threshold".into(),
                ));
            }
            let t = target.triple();
            let target_depth = target.depth() as i64;
            Ok(trajectory
                .nodes()
                .map(|v| {
                    let w = deepest_ancestor(v, |a| a.l <= t.l && t.r <= a.r);
                    let (v_depth, w_depth) = (v.depth() as i64, w as i64);
                    v_depth - w_depth + target_depth - w_depth
                })
                .collect())
        }
        DistanceMode::Concave => {
            let above: Vec<bool> = values.iter().map(|m| *m > tau).collect();
            if !above.iter().any(|a| *a) {
                return Err(TbpError::Precondition("no arm lies above the threshold".into()));
            }
            // prefix[i] counts above arms among walk indices 1..=i.
            let mut prefix = vec![0usize; len + 1];
            for i in 1..=len {
                prefix[i] = prefix[i - 1] + usize::from(above[i - 1]);
            }
            let in_z = |t: Triple| above[t.l - 1] || above[t.m - 1] || above[t.r - 1];
            let z_root = original
                .iter()
                .find(|v| in_z(v.triple()) && !v.is_root() && !in_z(v.parent().triple()))
                .map_or(0, |v| v.depth()) as i64;
            Ok(trajectory
                .nodes()
                .map(|v| {
                    let w = deepest_ancestor(v, |a| prefix[a.r] > prefix[a.l - 1]);
                    let (v_depth, w_depth) = (v.depth() as i64, w as i64);
                    v_depth - w_depth + (z_root - w_depth).max(0)
                })
                .collect())
        }
    }
}

/// Depth of the deepest node on the root-to-`v` path satisfying `pred`. The
/// predicates used here always hold at the root.
fn deepest_ancestor(v: &Node, pred: impl Fn(Triple) -> bool) -> usize {
    v.lineage()
        .rev()
        .find(|(_, t)| pred(*t))
        .map_or(0, |(d, _)| d)
}

/// `xi_t`: every sampled slot lies within `Delta_min` of its true mean.
/// Slots on sentinels or past the end always qualify.
pub fn favorable_series(trajectory: &Trajectory, problem: &Problem) -> Result<Vec<bool>> {
    let delta_min = gaps(problem).delta_min;
    let len = trajectory_len(trajectory);
    let offset = walk_offset(problem, len)?;
    let tau_free = |arm: usize| -> Option<f64> {
        if arm <= offset || arm > offset + problem.k() {
            None
        } else {
            Some(problem.means()[arm - offset - 1])
        }
    };
    Ok(trajectory
        .steps
        .iter()
        .map(|step| {
            step.samples.iter().all(|s| match tau_free(s.arm) {
                None => true,
                Some(mu) => (s.mean - mu).abs() <= delta_min,
            })
        })
        .collect())
}

/// `G_t` for `t = 1..=T1+1`: number of appended arms truly above threshold.
pub fn good_count_series(trajectory: &Trajectory, problem: &Problem) -> Result<Vec<usize>> {
    let len = trajectory_len(trajectory);
    let offset = walk_offset(problem, len)?;
    let tau = problem.tau();
    let mut g = 0;
    let mut out = Vec::with_capacity(trajectory.steps.len() + 1);
    out.push(0);
    for step in &trajectory.steps {
        if let Some(arm) = step.appended_arm {
            if arm > offset && arm <= offset + problem.k() && problem.means()[arm - offset - 1] > tau {
                g += 1;
            }
        }
        out.push(g);
    }
    Ok(out)
}

fn trajectory_len(trajectory: &Trajectory) -> usize {
    trajectory
        .steps
        .first()
        .map_or(trajectory.final_node.r(), |s| s.node.path().first().map_or(s.node.r(), |p| p.triple.r))
}

/// Number of sentinel slots before the first original arm in walk indices.
fn walk_offset(problem: &Problem, walk_len: usize) -> Result<usize> {
    let k = problem.k();
    if walk_len == k + 2 {
        Ok(1)
    } else if walk_len == k && !problem.is_augmented() {
        Ok(0)
    } else {
        Err(TbpError::Precondition(format!(
            "trajectory over {walk_len} arms does not match a problem with {k} arms"
        )))
    }
}

fn check_matches(trajectory: &Trajectory, len: usize) -> Result<()> {
    let got = trajectory_len(trajectory);
    if got != len {
        return Err(TbpError::Precondition(format!(
            "trajectory over {got} arms does not match a walk over {len}"
        )));
    }
    Ok(())
}
