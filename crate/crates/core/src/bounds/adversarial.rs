use crate::env::{gaps, midpoint_concave, shape_check, GapVector, Problem, ShapeClass};
use crate::error::{Result, TbpError};

/// Two monotone problems with the same gaps that disagree only on the arm
/// with the smallest gap (first one on ties).
///
/// Arms after that arm sit at `tau + D_k`, arms before it at `tau - D_k`. The
/// arm itself is above threshold in the first problem and below in the second.
pub fn adversarial_monotone_pair(
    gaps: &GapVector,
    sigma: f64,
    tau: f64,
) -> Result<(Problem, Problem)> {
    if !(gaps.delta_min > 0.0) {
        return Err(TbpError::Precondition(
            "the smallest gap must be positive".into(),
        ));
    }
    let i = gaps
        .gaps
        .iter()
        .position(|g| *g == gaps.delta_min)
        .expect("delta_min is one of the gaps");
    let build = |pivot_above: bool| -> Vec<f64> {
        gaps.gaps
            .iter()
            .enumerate()
            .map(|(k, g)| {
                let above = k > i || (k == i && pivot_above);
                if above {
                    tau + g
                } else {
                    tau - g
                }
            })
            .collect()
    };
    let plus = Problem::new(build(true), sigma, tau)?;
    let minus = Problem::new(build(false), sigma, tau)?;
    for p in [&plus, &minus] {
        if !shape_check(p, ShapeClass::Monotone) {
            return Err(TbpError::Precondition(
                "gaps are not realizable by an increasing sequence".into(),
            ));
        }
    }
    Ok((plus, minus))
}

/// Concave problem close to `problem` that classifies at least one arm
/// differently while keeping every gap within a constant factor.
///
/// The candidate follows the case analysis on the arm with the smallest gap
/// and on the gaps around the above-threshold plateau. Each candidate is
/// checked with [`verify_perturbation`]; when the primary choice fails the
/// check (some boundary configurations), the remaining shifts of the same
/// family are tried in a fixed order.
pub fn concave_perturb(problem: &Problem) -> Result<Problem> {
    let base = problem.without_sentinels();
    if !shape_check(&base, ShapeClass::Concave) {
        return Err(TbpError::Precondition("means are not concave".into()));
    }
    let mu = base.means();
    let tau = base.tau();
    let k = mu.len();
    let gap = gaps(&base);
    let dmin = gap.delta_min;
    if !(dmin > 0.0) {
        return Err(TbpError::Precondition(
            "an arm sits exactly on the threshold".into(),
        ));
    }
    // 1-based positions of the plateau's end arms.
    let first = match mu.iter().position(|m| *m > tau) {
        Some(p) => p + 1,
        None => {
            return Err(TbpError::Precondition(
                "no arm lies above the threshold".into(),
            ))
        }
    };
    let last = mu.iter().rposition(|m| *m > tau).expect("plateau is nonempty") + 1;
    // Gap of arm j (1-based), infinite for the virtual arms 0 and K+1.
    let d = |j: usize| -> f64 {
        if j == 0 || j > k {
            f64::INFINITY
        } else {
            gap.gaps[j - 1]
        }
    };
    let k_star = gap.gaps.iter().position(|g| *g == dmin).expect("argmin exists") + 1;
    let (k_l, k_r) = (first - 1, last + 1);

    let shift = |s: f64| Candidate::Shift(s);
    let mut candidates = Vec::new();
    if mu[k_star - 1] <= tau {
        let other = if k_star == k_l { k_r } else { k_l };
        if d(other) <= 1.5 * dmin {
            candidates.push(shift(2.0 * dmin));
        } else {
            candidates.push(shift(1.25 * dmin));
        }
    } else if first == last {
        candidates.push(shift(-2.0 * dmin));
    } else {
        let inner_l = d(k_l + 2);
        let inner_r = d(k_r - 2);
        if inner_l.min(inner_r) >= 1.5 * dmin {
            let far_end = if k_star == k_l + 1 { k_r - 1 } else { k_l + 1 };
            if d(far_end) >= 1.25 * dmin {
                candidates.push(shift(-1.125 * dmin));
            } else {
                candidates.push(shift(-1.375 * dmin));
            }
        } else if inner_l <= 1.5 * dmin {
            candidates.push(Candidate::Tip(k_l + 1));
        } else {
            candidates.push(Candidate::Tip(k_r - 1));
        }
    }
    for s in [2.0, 1.25, -1.125, -1.375, -2.0] {
        candidates.push(shift(s * dmin));
    }
    candidates.push(Candidate::Tip(k_l + 1));
    candidates.push(Candidate::Tip(k_r - 1));

    let mut last_err = None;
    for c in candidates {
        let means = c.apply(mu, d);
        let perturbed = Problem::new(means, base.sigma(), tau)?;
        match verify_perturbation(&base, &perturbed) {
            Ok(()) => return Ok(perturbed),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one candidate was tried"))
}

#[derive(Debug, Clone, Copy)]
enum Candidate {
    /// Vertical translation of every mean.
    Shift(f64),
    /// Pull arm `j` below threshold by `9 D_j / 8` and every other arm down by `D_j / 2`.
    Tip(usize),
}

impl Candidate {
    fn apply(self, mu: &[f64], d: impl Fn(usize) -> f64) -> Vec<f64> {
        match self {
            Candidate::Shift(s) => mu.iter().map(|m| m + s).collect(),
            Candidate::Tip(j) => {
                let dj = d(j);
                mu.iter()
                    .enumerate()
                    .map(|(i, m)| {
                        if i + 1 == j {
                            m - 9.0 * dj / 8.0
                        } else {
                            m - dj / 2.0
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Checks that `perturbed` is concave, flips at least one label, moves no mean
/// by more than `3 D_min` and keeps every gap within `[D_k / 10, 3 D_k]`.
pub fn verify_perturbation(original: &Problem, perturbed: &Problem) -> Result<()> {
    let mu = original.means();
    let nu = perturbed.means();
    let tau = original.tau();
    if mu.len() != nu.len() || perturbed.tau() != tau {
        return Err(TbpError::Verification(
            "problems differ in size or threshold".into(),
        ));
    }
    let dmin = gaps(original).delta_min;
    let tol = |x: f64| 1e-12 * (1.0 + x.abs() + tau.abs());

    if !nu.windows(3).all(|w| midpoint_concave(w[0], w[1], w[2])) {
        return Err(TbpError::Verification("(a) perturbed means are not concave".into()));
    }
    if !mu.iter().zip(nu).any(|(a, b)| (*a > tau) != (*b > tau)) {
        return Err(TbpError::Verification("(b) no label changes".into()));
    }
    for (j, (a, b)) in mu.iter().zip(nu).enumerate() {
        if (a - b).abs() > 3.0 * dmin + tol(*a) {
            return Err(TbpError::Verification(format!(
                "(c) arm {} moved by {} > 3 D_min",
                j + 1,
                (a - b).abs()
            )));
        }
        let (g, h) = ((a - tau).abs(), (b - tau).abs());
        if h < g / 10.0 - tol(g) || h > 3.0 * g + tol(g) {
            return Err(TbpError::Verification(format!(
                "(d) arm {} gap {h} outside [{}, {}]",
                j + 1,
                g / 10.0,
                3.0 * g
            )));
        }
    }
    Ok(())
}
