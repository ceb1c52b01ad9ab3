//! Bandit problems, shape classes and the sampling contract.
//!
//! Arms are addressed by a 1-based *walk index*. For a plain problem the walk
//! index is the original arm index. After [`augment`], walk index 1 is the low
//! sentinel, walk indices `2..=K+1` are the original arms and `K+2` is the high
//! sentinel. Sentinels are stored as IEEE infinities so they compare strictly
//! below (or above) every finite mean, and sampling them costs nothing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, TbpError};

/// Values of the two deterministic arms added around the original ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sentinels {
    pub low: f64,
    pub high: f64,
}

impl Sentinels {
    /// `-inf` on the left, `+inf` on the right.
    pub const MONOTONE: Sentinels = Sentinels {
        low: f64::NEG_INFINITY,
        high: f64::INFINITY,
    };
    /// `-inf` on both ends.
    pub const CONCAVE: Sentinels = Sentinels {
        low: f64::NEG_INFINITY,
        high: f64::NEG_INFINITY,
    };
}

/// A Gaussian bandit problem with a known threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    means: Vec<f64>,
    sigma: f64,
    tau: f64,
    sentinels: Option<Sentinels>,
}

impl Problem {
    pub fn new(means: Vec<f64>, sigma: f64, tau: f64) -> Result<Self> {
        if means.is_empty() {
            return Err(TbpError::TooFewArms { min: 1, got: 0 });
        }
        if let Some(bad) = means.iter().position(|m| !m.is_finite()) {
            return Err(TbpError::InvalidProblem(format!(
                "mean of arm {} is not finite",
                bad + 1
            )));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(TbpError::InvalidProblem(format!(
                "sigma must be finite and >= 0, got {sigma}"
            )));
        }
        if !tau.is_finite() {
            return Err(TbpError::InvalidProblem("tau must be finite".into()));
        }
        Ok(Problem {
            means,
            sigma,
            tau,
            sentinels: None,
        })
    }

    /// Number of original (non-sentinel) arms.
    pub fn k(&self) -> usize {
        self.means.len()
    }

    /// Number of walkable arms, sentinels included.
    pub fn len(&self) -> usize {
        self.means.len() + if self.sentinels.is_some() { 2 } else { 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn sentinels(&self) -> Option<Sentinels> {
        self.sentinels
    }

    pub fn is_augmented(&self) -> bool {
        self.sentinels.is_some()
    }

    /// Same means and threshold with a different noise scale.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        let mut p = Problem::new(self.means.clone(), sigma, self.tau)?;
        p.sentinels = self.sentinels;
        Ok(p)
    }

    /// The original problem with the sentinels dropped.
    pub fn without_sentinels(&self) -> Problem {
        Problem {
            means: self.means.clone(),
            sigma: self.sigma,
            tau: self.tau,
            sentinels: None,
        }
    }

    /// Original arms in reverse order (`k -> K + 1 - k`), sentinels dropped.
    pub fn reversed(&self) -> Problem {
        let mut means = self.means.clone();
        means.reverse();
        Problem {
            means,
            sigma: self.sigma,
            tau: self.tau,
            sentinels: None,
        }
    }

    /// Original arms `first..=last` (1-based, inclusive) as a new plain problem.
    pub fn segment(&self, first: usize, last: usize) -> Result<Problem> {
        if first == 0 || first > last || last > self.k() {
            return Err(TbpError::Precondition(format!(
                "segment {first}..={last} outside 1..={}",
                self.k()
            )));
        }
        Ok(Problem {
            means: self.means[first - 1..last].to_vec(),
            sigma: self.sigma,
            tau: self.tau,
            sentinels: None,
        })
    }

    pub fn is_sentinel(&self, arm: usize) -> bool {
        self.sentinels.is_some() && (arm == 1 || arm == self.len())
    }

    /// Mean of the arm at walk index `arm`, infinities for sentinels.
    pub fn value(&self, arm: usize) -> Result<f64> {
        let len = self.len();
        if arm == 0 || arm > len {
            return Err(TbpError::InvalidArm { arm, len });
        }
        Ok(match self.sentinels {
            None => self.means[arm - 1],
            Some(s) if arm == 1 => s.low,
            Some(s) if arm == len => s.high,
            Some(_) => self.means[arm - 2],
        })
    }

    /// Walkable sequence of means, sentinels included.
    pub fn values(&self) -> Vec<f64> {
        match self.sentinels {
            None => self.means.clone(),
            Some(s) => {
                let mut v = Vec::with_capacity(self.len());
                v.push(s.low);
                v.extend_from_slice(&self.means);
                v.push(s.high);
                v
            }
        }
    }

    /// Original arm index of a walk index, `None` for sentinels.
    pub fn to_original(&self, arm: usize) -> Option<usize> {
        if arm == 0 || arm > self.len() || self.is_sentinel(arm) {
            return None;
        }
        Some(if self.sentinels.is_some() { arm - 1 } else { arm })
    }

    /// Walk index of original arm `j`.
    pub fn from_original(&self, j: usize) -> usize {
        if self.sentinels.is_some() {
            j + 1
        } else {
            j
        }
    }

    /// Average of `n` Gaussian draws from the arm, and the budget it cost.
    ///
    /// Sentinels return their exact value at zero cost.
    pub fn sample_mean(&self, arm: usize, n: u64, rng: &mut RngStream) -> Result<(f64, u64)> {
        let mu = self.value(arm)?;
        if n == 0 {
            return Err(TbpError::Precondition("sample size must be >= 1".into()));
        }
        if self.is_sentinel(arm) {
            return Ok((mu, 0));
        }
        let mut sum = 0.0;
        for _ in 0..n {
            sum += rng.standard_normal();
        }
        Ok((mu + self.sigma * sum / n as f64, n))
    }
}

/// Gap vector `|mu_k - tau|` of the original arms.
#[derive(Debug, Clone, PartialEq)]
pub struct GapVector {
    pub gaps: Vec<f64>,
    pub delta_min: f64,
}

impl GapVector {
    pub fn new(gaps: Vec<f64>) -> Result<Self> {
        if gaps.is_empty() {
            return Err(TbpError::TooFewArms { min: 1, got: 0 });
        }
        if gaps.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
            return Err(TbpError::InvalidProblem(
                "gaps must be finite and nonnegative".into(),
            ));
        }
        let delta_min = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(GapVector { gaps, delta_min })
    }

    pub fn len(&self) -> usize {
        self.gaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty()
    }
}

/// Labels in `{-1, +1}`, one per original arm.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Classification {
    labels: Vec<i8>,
}

impl Classification {
    pub fn from_labels(labels: Vec<i8>) -> Result<Self> {
        if labels.iter().any(|l| *l != 1 && *l != -1) {
            return Err(TbpError::Precondition("labels must be +1 or -1".into()));
        }
        Ok(Classification { labels })
    }

    pub(crate) fn from_predicate(k: usize, above: impl Fn(usize) -> bool) -> Self {
        Classification {
            labels: (1..=k).map(|j| if above(j) { 1 } else { -1 }).collect(),
        }
    }

    pub fn all_negative(k: usize) -> Self {
        Classification {
            labels: vec![-1; k],
        }
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Label of original arm `j` (1-based).
    pub fn get(&self, j: usize) -> i8 {
        self.labels[j - 1]
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|l| **l == 1).count()
    }

    /// 1-based indices where the two classifications disagree.
    pub fn mismatches(&self, other: &Classification) -> Vec<usize> {
        self.labels
            .iter()
            .zip(&other.labels)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| i + 1)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeClass {
    Unstructured,
    Monotone,
    MonotoneDecreasing,
    /// Some prefix is at or below the threshold and the rest at or above it.
    RelaxedMonotone,
    Concave,
}

/// Deterministic per-replication random stream.
///
/// ChaCha8 keyed by `seed` (expanded through `SeedableRng::seed_from_u64`) with
/// the ChaCha stream id set to `stream_index`. Gaussian draws use the ziggurat
/// sampler of `rand_distr::StandardNormal`, which is pure integer/float
/// arithmetic and reproducible across platforms.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_index);
        RngStream {
            seed,
            stream_index,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

pub fn true_labels(problem: &Problem) -> Classification {
    let tau = problem.tau();
    Classification::from_predicate(problem.k(), |j| problem.means()[j - 1] >= tau)
}

pub fn gaps(problem: &Problem) -> GapVector {
    let tau = problem.tau();
    let gaps: Vec<f64> = problem.means().iter().map(|m| (m - tau).abs()).collect();
    let delta_min = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    GapVector { gaps, delta_min }
}

/// Midpoint concavity `(a + c) / 2 <= b` with a few ulps of slack.
pub(crate) fn midpoint_concave(a: f64, b: f64, c: f64) -> bool {
    let mid = 0.5 * a + 0.5 * c;
    if mid <= b {
        return true;
    }
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return false;
    }
    let scale = a.abs() + 2.0 * b.abs() + c.abs();
    mid - b <= 8.0 * f64::EPSILON * scale
}

/// Membership of the walkable mean sequence (sentinels included) in `shape`.
pub fn shape_check(problem: &Problem, shape: ShapeClass) -> bool {
    let v = problem.values();
    let tau = problem.tau();
    match shape {
        ShapeClass::Unstructured => true,
        ShapeClass::Monotone => v.windows(2).all(|w| w[0] <= w[1]),
        ShapeClass::MonotoneDecreasing => v.windows(2).all(|w| w[0] >= w[1]),
        ShapeClass::RelaxedMonotone => relaxed_split_exists(&v, tau),
        ShapeClass::Concave => v.windows(3).all(|w| midpoint_concave(w[0], w[1], w[2])),
    }
}

/// Whether some split `k` in `0..=len` puts every value before it at or below
/// `tau` and every value after it at or above.
fn relaxed_split_exists(v: &[f64], tau: f64) -> bool {
    // Longest prefix at or below tau; any valid split is at most this long, and
    // if one exists this one works too.
    let prefix = v.iter().take_while(|m| **m <= tau).count();
    v[prefix..].iter().all(|m| *m >= tau)
}

/// Experiment instances with prescribed gaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setting {
    /// One arm at gap `delta` (the first above-threshold arm), every other gap 100.
    S1,
    /// Every gap equal to `delta`.
    S2,
    /// Concave tent whose two boundary arms sit at `tau - delta` and which
    /// rises by `2 * delta` per arm towards the centre.
    S2Concave,
}

pub const SETTING_LARGE_GAP: f64 = 100.0;

/// Builds a setting instance with `sigma = 1`.
pub fn make_setting(setting: Setting, k: usize, delta: f64, tau: f64) -> Result<Problem> {
    if k < 3 {
        return Err(TbpError::TooFewArms { min: 3, got: k });
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(TbpError::InvalidProblem(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let below = k / 2;
    let means: Vec<f64> = match setting {
        Setting::S1 => (1..=k)
            .map(|j| {
                if j <= below {
                    tau - SETTING_LARGE_GAP
                } else if j == below + 1 {
                    tau + delta
                } else {
                    tau + SETTING_LARGE_GAP
                }
            })
            .collect(),
        Setting::S2 => (1..=k)
            .map(|j| if j <= below { tau - delta } else { tau + delta })
            .collect(),
        Setting::S2Concave => (1..=k)
            .map(|j| {
                let steps = (j - 1).min(k - j) as f64;
                tau - delta + 2.0 * delta * steps
            })
            .collect(),
    };
    let problem = Problem::new(means, 1.0, tau)?;
    if setting == Setting::S2Concave && !shape_check(&problem, ShapeClass::Concave) {
        return Err(TbpError::Verification(
            "concave setting instance failed the concavity check".into(),
        ));
    }
    Ok(problem)
}

/// Adds the two deterministic arms: `(-inf, +inf)` for monotone walks,
/// `(-inf, -inf)` for concave ones.
pub fn augment(problem: &Problem, shape: ShapeClass) -> Result<Problem> {
    if problem.is_augmented() {
        return Err(TbpError::Precondition("problem is already augmented".into()));
    }
    let sentinels = match shape {
        ShapeClass::Monotone | ShapeClass::RelaxedMonotone => Sentinels::MONOTONE,
        ShapeClass::Concave => Sentinels::CONCAVE,
        other => {
            return Err(TbpError::Precondition(format!(
                "no augmentation defined for {other:?}"
            )))
        }
    };
    let mut p = problem.clone();
    p.sentinels = Some(sentinels);
    Ok(p)
}
