//! Decision rules: UCB for discrete arms, LinUCB (finite and sphere action
//! sets), Phased Elimination with a G-optimal design, explore-then-commit
//! Pauli tomography, and the eigenvalue-controlled batch policies LinUCB-VN
//! and LinUCB-VVN.
//!
//! Vector-action policies implement [`PsmaqbPolicy`]: they emit unit
//! actions one round at a time and consume the environment's linear feedback
//! (mean `⟨θ, a⟩`).

use std::collections::VecDeque;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    beta_linucb, beta_mom, beta_weighted, mom_index, ConfidenceEllipsoid, DesignMatrix,
    LseAccumulator, MomBank,
};
use crate::matcore::{dot, norm, normalized, sub, EigenDecomposition, SymMatrix};
use crate::quantum::random_unit_vector;

/// Tolerance on the unit norm of emitted actions.
pub const ACTION_TOLERANCE: f64 = 1e-10;

// ---------------------------------------------------------------------------
// UCB
// ---------------------------------------------------------------------------

/// Upper confidence index `mean + √(2η² ln(1/δ)/count)`; `+∞` for unplayed arms.
pub fn ucb_index(mean: f64, count: u64, eta: f64, delta: f64) -> f64 {
    if count == 0 {
        return f64::INFINITY;
    }
    mean + (2.0 * eta * eta * (1.0 / delta).ln() / count as f64).sqrt()
}

/// UCB over a finite set of arms.
#[derive(Debug, Clone)]
pub struct Ucb {
    means: Vec<f64>,
    counts: Vec<u64>,
    eta: f64,
    delta: f64,
}

impl Ucb {
    /// `arms ≥ 1` arms with subgaussian parameter `η` and confidence `δ`.
    pub fn new(arms: usize, eta: f64, delta: f64) -> Result<Self> {
        if arms == 0 {
            return Err(Error::contract("UCB needs at least one arm"));
        }
        if !(delta > 0.0 && delta < 1.0) || eta.is_nan() || eta < 0.0 {
            return Err(Error::contract("UCB needs δ ∈ (0,1) and η ≥ 0"));
        }
        Ok(Self {
            means: vec![0.0; arms],
            counts: vec![0; arms],
            eta,
            delta,
        })
    }

    /// Arm with the highest index, ties to the lowest index.
    pub fn select(&self) -> usize {
        argmax(
            (0..self.means.len())
                .map(|a| ucb_index(self.means[a], self.counts[a], self.eta, self.delta)),
        )
    }

    /// Records a reward for `arm`.
    pub fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        let n = self
            .counts
            .get_mut(arm)
            .ok_or_else(|| Error::contract(format!("arm {arm} out of range")))?;
        *n += 1;
        self.means[arm] += (reward - self.means[arm]) / *n as f64;
        Ok(())
    }

    /// Per-arm play counts.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

/// Index of the maximum, first one on ties.
fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

// ---------------------------------------------------------------------------
// LinUCB action selection
// ---------------------------------------------------------------------------

/// Action set of a linear bandit.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionSet {
    /// Finitely many action vectors.
    Finite(Vec<Vec<f64>>),
    /// The whole unit sphere.
    Sphere,
}

/// Optimistic index `⟨θ̂, a⟩ + √β ‖a‖_{V⁻¹}`.
pub fn linucb_index(theta_hat: &[f64], design: &DesignMatrix, beta: f64, a: &[f64]) -> f64 {
    dot(theta_hat, a) + beta.sqrt() * design.inv_norm(a)
}

/// LinUCB action: the finite arm maximising the optimistic index, or, on the
/// sphere, the exact maximiser of the index over unit vectors.
pub fn linucb_select(acc: &LseAccumulator, actions: &ActionSet, beta: f64) -> Result<Vec<f64>> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::contract(format!(
            "confidence radius must be finite and nonnegative, got {beta}"
        )));
    }
    let theta = acc.estimate()?;
    match actions {
        ActionSet::Finite(arms) => {
            if arms.is_empty() {
                return Err(Error::contract("empty action set"));
            }
            Ok(arms[linucb_select_index(&theta, acc.design(), arms, beta)].clone())
        }
        ActionSet::Sphere => Ok(optimistic_sphere_point(&theta, acc.design().eig(), beta)),
    }
}

/// Index of the finite arm with the largest optimistic index.
pub fn linucb_select_index(
    theta_hat: &[f64],
    design: &DesignMatrix,
    arms: &[Vec<f64>],
    beta: f64,
) -> usize {
    argmax(
        arms.iter()
            .map(|a| linucb_index(theta_hat, design, beta, a)),
    )
}

/// Unit vector maximising `⟨θ̂, a⟩ + √β‖a‖_{V⁻¹}` over the sphere.
///
/// The maximum over unit `a` equals `max_{‖u‖_V ≤ √β} ‖θ̂ + u‖`, attained at
/// `a = (θ̂+u)/‖θ̂+u‖`: the point of the confidence ellipsoid farthest from
/// the origin. The inner problem is a trust-region subproblem solved exactly
/// in the eigenbasis of `V` via its secular equation `Σ λ_i t_i²/(μλ_i − 1)² = β`
/// (`t_i` the eigen-coordinates of `θ̂`), including the degenerate case where
/// `θ̂` has no component along the smallest eigenvectors.
pub fn optimistic_sphere_point(theta_hat: &[f64], eig: &EigenDecomposition, beta: f64) -> Vec<f64> {
    let d = theta_hat.len();
    let lam = &eig.values;
    let t: Vec<f64> = eig.vectors.iter().map(|v| dot(v, theta_hat)).collect();
    let to_ambient = |z: &[f64]| {
        let mut out = vec![0.0; d];
        for (zi, v) in z.iter().zip(&eig.vectors) {
            crate::matcore::axpy(&mut out, *zi, v);
        }
        out
    };
    if beta <= 0.0 {
        return normalized(theta_hat).unwrap_or_else(|| eig.vectors[0].clone());
    }
    let lmin = lam[0];
    let group: Vec<usize> = (0..d).filter(|&i| lam[i] <= lmin * (1.0 + 1e-12)).collect();
    let tnorm2: f64 = t.iter().map(|x| x * x).sum();
    let tg2: f64 = group.iter().map(|&i| t[i] * t[i]).sum();
    let secular = |mu: f64| -> f64 {
        (0..d)
            .map(|i| {
                let den = mu * lam[i] - 1.0;
                if t[i] == 0.0 {
                    0.0
                } else {
                    lam[i] * t[i] * t[i] / (den * den)
                }
            })
            .sum::<f64>()
    };
    let mu0 = 1.0 / lmin;
    let mut z = vec![0.0; d];
    // Degenerate ("hard") case: the smallest-eigenvalue block is orthogonal to θ̂.
    let hard = tg2 <= 1e-28 * tnorm2.max(1e-300);
    let s0 = if hard {
        (0..d)
            .filter(|i| !group.contains(i))
            .map(|i| lam[i] * t[i] * t[i] / (mu0 * lam[i] - 1.0).powi(2))
            .sum()
    } else {
        f64::INFINITY
    };
    if hard && s0 < beta {
        for i in 0..d {
            if !group.contains(&i) {
                z[i] = t[i] + t[i] / (mu0 * lam[i] - 1.0);
            }
        }
        let g = group[0];
        let sign = if t[g] < 0.0 { -1.0 } else { 1.0 };
        z[g] = t[g] + sign * ((beta - s0) / lmin).sqrt();
    } else {
        let mut lo = mu0;
        let mut hi = (1.0 + (eig.max() * tnorm2 / beta).sqrt()) / lmin;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if secular(mid) > beta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        for i in 0..d {
            z[i] = t[i] + t[i] / (hi * lam[i] - 1.0);
        }
    }
    let a = to_ambient(&z);
    normalized(&a).unwrap_or_else(|| eig.vectors[0].clone())
}

// ---------------------------------------------------------------------------
// Eigenvalue-controlled action rule
// ---------------------------------------------------------------------------

/// The pair `a± = (c ± v/√λ)/‖c ± v/√λ‖` around the unit center `c` along the
/// unit direction `v`; both satisfy `‖a± − c‖² ≤ 2/λ`.
pub fn project_extremal(c: &[f64], v: &[f64], lambda_min: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if c.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: c.len(),
            found: v.len(),
        });
    }
    if !(lambda_min > 1.0 && lambda_min.is_finite()) {
        return Err(Error::contract(format!(
            "projection needs λ_min > 1, got {lambda_min}"
        )));
    }
    for (x, what) in [(c, "center"), (v, "direction")] {
        if (norm(x) - 1.0).abs() > ACTION_TOLERANCE {
            return Err(Error::contract(format!(
                "projection {what} must be a unit vector"
            )));
        }
    }
    let s = 1.0 / lambda_min.sqrt();
    let plus: Vec<f64> = c.iter().zip(v).map(|(ci, vi)| ci + s * vi).collect();
    let minus: Vec<f64> = c.iter().zip(v).map(|(ci, vi)| ci - s * vi).collect();
    // λ > 1 keeps both vectors away from zero.
    Ok((
        normalized(&plus).expect("nonzero"),
        normalized(&minus).expect("nonzero"),
    ))
}

/// How the eigenvalue-controlled policies weight each batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "beta", rename_all = "snake_case")]
pub enum WeightRule {
    /// `ω = √λ_max/(12√(d−1)·β)` with the theoretical radius: the adaptive
    /// weighted radius for VN, the constant `β_w` for VVN.
    Theory,
    /// `ω = √λ_max/(12√(d−1)·β)` with a fixed user-supplied `β`.
    Constant(f64),
    /// `ω ≡ 1` (unweighted least squares).
    Unit,
}

/// Per-round telemetry of a linear policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Telemetry {
    /// `λ_min` of the current design matrix.
    pub lambda_min: f64,
    /// `λ_max` of the current design matrix.
    pub lambda_max: f64,
    /// True when the last observation completed a batch.
    pub batch_end: bool,
}

/// A policy for vector-action bandits (pure-state bandits and sphere bandits).
pub trait PsmaqbPolicy: Send {
    /// Short policy name.
    fn name(&self) -> &'static str;
    /// Unit action for the next round.
    fn next_action(&mut self, rng: &mut dyn RngCore) -> Result<Vec<f64>>;
    /// Linear feedback (mean `⟨θ, a⟩`) for the action just emitted.
    fn observe(&mut self, feedback: f64) -> Result<()>;
    /// Current unit estimate of the unknown parameter, if one exists.
    fn estimate(&self) -> Option<Vec<f64>>;
    /// Design-matrix telemetry, if the policy maintains one.
    fn telemetry(&self) -> Option<Telemetry>;
    /// Current confidence ellipsoid, if the policy maintains one.
    fn confidence(&self) -> Option<ConfidenceEllipsoid>;
}

/// Configuration shared by the LinUCB policies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinUcbParams {
    /// Regulariser `λ`.
    pub lambda: f64,
    /// Failure probability `δ`.
    pub delta: f64,
    /// Bound `L` on action norms.
    pub l: f64,
    /// Subgaussian parameter `η`.
    pub eta: f64,
}

impl Default for LinUcbParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            delta: 0.01,
            l: 1.0,
            eta: 1.0,
        }
    }
}

/// LinUCB over a finite action set or the whole unit sphere.
#[derive(Debug, Clone)]
pub struct LinUcb {
    acc: LseAccumulator,
    actions: ActionSet,
    params: LinUcbParams,
    rounds: u64,
    pending: Option<Vec<f64>>,
}

impl LinUcb {
    /// Builds a LinUCB policy in dimension `dim`.
    pub fn new(dim: usize, actions: ActionSet, params: LinUcbParams) -> Result<Self> {
        if let ActionSet::Finite(arms) = &actions {
            if arms.is_empty() || arms.iter().any(|a| a.len() != dim) {
                return Err(Error::contract(
                    "finite action set must be nonempty with matching dimensions",
                ));
            }
        }
        beta_linucb(0.0, params.delta, params.lambda, params.l, params.eta, dim)?;
        Ok(Self {
            acc: LseAccumulator::new(dim, params.lambda)?,
            actions,
            params,
            rounds: 0,
            pending: None,
        })
    }

    /// `β_t` for the current round count.
    pub fn beta(&self) -> f64 {
        let p = &self.params;
        beta_linucb(
            self.rounds as f64,
            p.delta,
            p.lambda,
            p.l,
            p.eta,
            self.acc.design().dim(),
        )
        .expect("parameters validated at construction")
    }

    /// Underlying accumulator.
    pub fn accumulator(&self) -> &LseAccumulator {
        &self.acc
    }
}

impl PsmaqbPolicy for LinUcb {
    fn name(&self) -> &'static str {
        "linucb"
    }

    fn next_action(&mut self, _rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        let a = linucb_select(&self.acc, &self.actions, self.beta())?;
        self.pending = Some(a.clone());
        Ok(a)
    }

    fn observe(&mut self, feedback: f64) -> Result<()> {
        let a = self
            .pending
            .take()
            .ok_or_else(|| Error::contract("observe called without a pending action"))?;
        self.acc.update(&a, feedback, 1.0)?;
        self.rounds += 1;
        Ok(())
    }

    fn estimate(&self) -> Option<Vec<f64>> {
        self.acc.estimate().ok().and_then(|e| normalized(&e))
    }

    fn telemetry(&self) -> Option<Telemetry> {
        let d = self.acc.design();
        Some(Telemetry {
            lambda_min: d.lambda_min(),
            lambda_max: d.lambda_max(),
            batch_end: true,
        })
    }

    fn confidence(&self) -> Option<ConfidenceEllipsoid> {
        ConfidenceEllipsoid::around(&self.acc, self.beta()).ok()
    }
}

/// Radius used by the Theory weight rule.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Radius {
    /// Adaptive weighted radius with `δ = δ′/T̃`.
    Weighted { delta: f64 },
    /// Constant median-of-means radius `β_w`.
    Mom { beta_w: f64 },
}

/// Configuration of the eigenvalue-controlled batch policies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenControlParams {
    /// Dimension `d ≥ 2`.
    pub dim: usize,
    /// Regulariser `λ₀`.
    pub lambda0: f64,
    /// Median-of-means subsample count `k` (1 for LinUCB-VN).
    pub k: usize,
    /// Batch weighting rule.
    pub weight: WeightRule,
    /// Overall failure probability `δ′`.
    pub delta: f64,
    /// Total round budget `T`, used to size `T̃` and `δ = δ′/T̃`.
    pub horizon: u64,
}

/// LinUCB-VN (`k = 1`, adaptive weighted radius) and LinUCB-VVN
/// (median of `k` weighted estimators, constant radius).
///
/// Every batch plays the `2(d−1)` actions
/// `project_extremal(ĉ, v_i, λ_min(V))` for the `d−1` smallest eigenvectors
/// `v_i` of the current design, each `k` times; the shared design gains one
/// weighted rank-one term per direction and accumulator `j` receives the
/// `j`-th reward of every direction. The first batch uses unit weight.
#[derive(Debug, Clone)]
pub struct EigenControlled {
    name: &'static str,
    params: EigenControlParams,
    radius: Radius,
    bank: MomBank,
    center: Option<Vec<f64>>,
    queue: VecDeque<Vec<f64>>,
    current: Option<Vec<f64>>,
    rewards: Vec<f64>,
    omega: f64,
    batch: u64,
    batch_end: bool,
}

impl EigenControlled {
    fn build(name: &'static str, params: EigenControlParams, radius: Radius) -> Result<Self> {
        if params.dim < 2 {
            return Err(Error::contract("eigenvalue-controlled policies need d ≥ 2"));
        }
        if params.k == 0 {
            return Err(Error::contract("median of means needs k ≥ 1"));
        }
        if let WeightRule::Constant(b) = params.weight {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::contract(format!(
                    "constant weight radius must be positive, got {b}"
                )));
            }
        }
        let floor = lambda0_floor(params.dim, &radius);
        if params.lambda0 < floor {
            return Err(Error::contract(format!(
                "λ₀ = {} violates the required floor {floor}",
                params.lambda0
            )));
        }
        Ok(Self {
            name,
            params,
            radius,
            bank: MomBank::new(params.dim, params.lambda0, params.k)?,
            center: None,
            queue: VecDeque::new(),
            current: None,
            rewards: Vec::with_capacity(params.k),
            omega: 1.0,
            batch: 0,
            batch_end: false,
        })
    }

    /// LinUCB-VN: one weighted estimator, `δ = δ′/T̃` inside the adaptive radius.
    pub fn vn(params: EigenControlParams) -> Result<Self> {
        let p = EigenControlParams { k: 1, ..params };
        let batches = (p.horizon / (2 * (p.dim as u64 - 1).max(1))).max(1);
        if !(p.delta > 0.0 && p.delta < 1.0) {
            return Err(Error::contract("δ′ must lie in (0, 1)"));
        }
        Self::build(
            "linucb-vn",
            p,
            Radius::Weighted {
                delta: p.delta / batches as f64,
            },
        )
    }

    /// LinUCB-VVN: `k` estimators combined by median of means, `β_w` for a unit
    /// parameter.
    pub fn vvn(params: EigenControlParams) -> Result<Self> {
        let beta_w = beta_mom(params.dim, params.lambda0, 1.0);
        Self::build("linucb-vvn", params, Radius::Mom { beta_w })
    }

    /// Batches of `2(d−1)·k` rounds fitting in the horizon.
    pub fn total_batches(&self) -> u64 {
        self.params.horizon / self.batch_len()
    }

    /// Rounds per batch.
    pub fn batch_len(&self) -> u64 {
        2 * (self.params.dim as u64 - 1) * self.params.k as u64
    }

    /// Shared design matrix.
    pub fn design(&self) -> &DesignMatrix {
        self.bank.design()
    }

    /// Number of completed batches.
    pub fn batches_done(&self) -> u64 {
        self.batch
    }

    /// Weight of the batch in progress.
    pub fn current_weight(&self) -> f64 {
        self.omega
    }

    /// The median-of-means (or single) estimate, not normalised.
    pub fn raw_estimate(&self) -> Result<Vec<f64>> {
        let est = self.bank.estimates()?;
        Ok(est[mom_index(&est, self.bank.design().matrix())].clone())
    }

    fn theory_beta(&self) -> Result<f64> {
        match self.radius {
            Radius::Weighted { delta } => beta_weighted(self.bank.design(), delta),
            Radius::Mom { beta_w } => Ok(beta_w),
        }
    }

    fn batch_weight(&self) -> Result<f64> {
        if self.batch == 0 {
            return Ok(1.0);
        }
        let scale = |beta: f64| {
            self.bank.design().lambda_max().sqrt()
                / (12.0 * ((self.params.dim - 1) as f64).sqrt() * beta)
        };
        Ok(match self.params.weight {
            WeightRule::Unit => 1.0,
            WeightRule::Constant(b) => scale(b),
            WeightRule::Theory => scale(self.theory_beta()?),
        })
    }

    fn plan_batch(&mut self, rng: &mut dyn RngCore) -> Result<()> {
        let center = match &self.center {
            Some(c) => c.clone(),
            None => {
                let c = random_unit_vector(self.params.dim, rng);
                self.center = Some(c.clone());
                c
            }
        };
        self.omega = self.batch_weight()?;
        let eig = self.bank.design().eig();
        let lmin = eig.min();
        for v in eig.vectors.iter().take(self.params.dim - 1) {
            let (p, m) = project_extremal(&center, v, lmin)?;
            self.queue.push_back(p);
            self.queue.push_back(m);
        }
        Ok(())
    }

    fn finish_batch(&mut self) -> Result<()> {
        self.batch += 1;
        if let Some(c) = normalized(&self.raw_estimate()?) {
            self.center = Some(c);
        }
        self.batch_end = true;
        Ok(())
    }
}

/// Smallest admissible `λ₀`.
fn lambda0_floor(d: usize, radius: &Radius) -> f64 {
    let dm1 = (d - 1) as f64;
    let c = 1.0 / (12.0 * dm1.sqrt());
    let base = 2.0 / (3.0 * dm1);
    let tail = match radius {
        Radius::Weighted { .. } => base.sqrt() * 2.0 * d as f64 * c + base,
        Radius::Mom { beta_w } => 2.0 * base.sqrt() * d as f64 * c / beta_w + base,
    };
    tail.max(2.0)
}

impl PsmaqbPolicy for EigenControlled {
    fn name(&self) -> &'static str {
        self.name
    }

    fn next_action(&mut self, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        if let Some(a) = &self.current {
            if self.rewards.len() < self.params.k {
                return Ok(a.clone());
            }
        }
        if self.queue.is_empty() {
            self.plan_batch(rng)?;
        }
        let a = self.queue.pop_front().expect("planned batch is nonempty");
        self.current = Some(a.clone());
        self.rewards.clear();
        Ok(a)
    }

    fn observe(&mut self, feedback: f64) -> Result<()> {
        let a = self
            .current
            .clone()
            .ok_or_else(|| Error::contract("observe called without a pending action"))?;
        if self.rewards.len() >= self.params.k {
            return Err(Error::contract(
                "more observations than requested for this action",
            ));
        }
        self.batch_end = false;
        self.rewards.push(feedback);
        if self.rewards.len() == self.params.k {
            self.bank.update(&a, &self.rewards, self.omega)?;
            if self.queue.is_empty() {
                self.finish_batch()?;
            }
        }
        Ok(())
    }

    fn estimate(&self) -> Option<Vec<f64>> {
        self.center.clone()
    }

    fn telemetry(&self) -> Option<Telemetry> {
        let d = self.bank.design();
        Some(Telemetry {
            lambda_min: d.lambda_min(),
            lambda_max: d.lambda_max(),
            batch_end: self.batch_end,
        })
    }

    fn confidence(&self) -> Option<ConfidenceEllipsoid> {
        let beta = self.theory_beta().ok()?;
        ConfidenceEllipsoid::new(
            self.raw_estimate().ok()?,
            self.bank.design().matrix().clone(),
            beta,
        )
        .ok()
    }
}

// ---------------------------------------------------------------------------
// Explore-then-commit tomography
// ---------------------------------------------------------------------------

/// Explore-then-commit Pauli tomography ("Bandit PLS").
///
/// Spends `⌈√T⌉` rounds (split evenly, round-robin, over the `+x`, `+y`, `+z`
/// projectors), estimates the Bloch vector from the outcome frequencies,
/// projects it onto the pure states and commits. If the estimate is exactly
/// zero, one more round per axis is explored until it is not.
#[derive(Debug, Clone)]
pub struct BanditPls {
    per_axis: u64,
    sums: [f64; 3],
    counts: [u64; 3],
    committed: Option<Vec<f64>>,
    pending: Option<usize>,
}

impl BanditPls {
    /// Policy for horizon `T ≥ 9`.
    pub fn new(horizon: u64) -> Result<Self> {
        if horizon < 9 {
            return Err(Error::contract("explore-then-commit needs T ≥ 9"));
        }
        let budget = (horizon as f64).sqrt().ceil() as u64;
        Ok(Self {
            per_axis: budget.div_ceil(3),
            sums: [0.0; 3],
            counts: [0; 3],
            committed: None,
            pending: None,
        })
    }

    /// Exploration rounds per Pauli axis.
    pub fn per_axis(&self) -> u64 {
        self.per_axis
    }

    /// Bloch estimate `r̂_i = 2·freq_i − 1` (the mean linear feedback per axis).
    pub fn bloch_estimate(&self) -> [f64; 3] {
        std::array::from_fn(|i| {
            if self.counts[i] == 0 {
                0.0
            } else {
                self.sums[i] / self.counts[i] as f64
            }
        })
    }

    fn axis_vector(axis: usize) -> Vec<f64> {
        let mut v = vec![0.0; 3];
        v[axis] = 1.0;
        v
    }
}

impl PsmaqbPolicy for BanditPls {
    fn name(&self) -> &'static str {
        "bandit-pls"
    }

    fn next_action(&mut self, _rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        if let Some(c) = &self.committed {
            self.pending = None;
            return Ok(c.clone());
        }
        let axis = (0..3).min_by_key(|&i| self.counts[i]).expect("three axes");
        self.pending = Some(axis);
        Ok(Self::axis_vector(axis))
    }

    fn observe(&mut self, feedback: f64) -> Result<()> {
        let Some(axis) = self.pending.take() else {
            return if self.committed.is_some() {
                Ok(())
            } else {
                Err(Error::contract("no pending action"))
            };
        };
        self.sums[axis] += feedback;
        self.counts[axis] += 1;
        if self.counts.iter().all(|&c| c >= self.per_axis)
            && self.counts.iter().all(|&c| c == self.counts[0])
        {
            if let Some(c) = normalized(&self.bloch_estimate()) {
                self.committed = Some(c);
            }
        }
        Ok(())
    }

    fn estimate(&self) -> Option<Vec<f64>> {
        self.committed
            .clone()
            .or_else(|| normalized(&self.bloch_estimate()))
    }

    fn telemetry(&self) -> Option<Telemetry> {
        None
    }

    fn confidence(&self) -> Option<ConfidenceEllipsoid> {
        None
    }
}

// ---------------------------------------------------------------------------
// Phased Elimination
// ---------------------------------------------------------------------------

/// Frank–Wolfe iterations of the G-optimal design solver.
pub const FW_MAX_ITERS: usize = 200;
/// Stopping tolerance on the relative gradient gap `max_a g_a/d − 1`.
pub const FW_TOLERANCE: f64 = 1e-6;
/// Design weights at or below this are trimmed from the support.
pub const FW_TRIM: f64 = 1e-6;

/// A design distribution over arms.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    /// Probability of each arm (zero outside the support).
    pub weights: Vec<f64>,
    /// True when the optimiser failed and the uniform design was used.
    pub fallback: bool,
}

/// G-optimal design over `arms` (the subset `support` of indices): Frank–Wolfe
/// ascent on `ln det Σ π(a) a aᵀ` with exact line search and away steps,
/// stopped after [`FW_MAX_ITERS`] iterations or once `max_a ‖a‖²_{M⁻¹} ≤ d(1 + 10⁻⁶)`,
/// then trimmed to weights above [`FW_TRIM`].
pub fn g_optimal_design(arms: &[Vec<f64>], support: &[usize]) -> Design {
    let k = arms.len();
    let uniform = || {
        let mut w = vec![0.0; k];
        support
            .iter()
            .for_each(|&i| w[i] = 1.0 / support.len() as f64);
        w
    };
    if support.is_empty() {
        return Design {
            weights: vec![0.0; k],
            fallback: true,
        };
    }
    let d = arms[0].len();
    let mut w = uniform();
    let ridge = 1e-9;
    for _ in 0..FW_MAX_ITERS {
        let mut m = SymMatrix::scaled_identity(d, ridge);
        for &i in support {
            if w[i] > 0.0 && m.add_rank1(&arms[i], w[i]).is_err() {
                return Design {
                    weights: uniform(),
                    fallback: true,
                };
            }
        }
        let Ok(eig) = crate::matcore::eig_sym(&m) else {
            return Design {
                weights: uniform(),
                fallback: true,
            };
        };
        let gains: Vec<(usize, f64)> = support
            .iter()
            .map(|&i| (i, eig.inv_quad_form(&arms[i])))
            .collect();
        let (up, g_up) = gains
            .iter()
            .copied()
            .fold((support[0], f64::NEG_INFINITY), |a, x| {
                if x.1 > a.1 {
                    x
                } else {
                    a
                }
            });
        let (down, g_down) = gains.iter().copied().filter(|&(i, _)| w[i] > 0.0).fold(
            (support[0], f64::INFINITY),
            |a, x| if x.1 < a.1 { x } else { a },
        );
        let rank = d.min(support.len()) as f64;
        if !g_up.is_finite() {
            return Design {
                weights: uniform(),
                fallback: true,
            };
        }
        if g_up / rank - 1.0 <= FW_TOLERANCE {
            break;
        }
        // Toward step on the most informative arm, or an away step that moves
        // mass off the least informative supported arm, whichever gap is larger.
        let (j, g) = if g_up - rank >= rank - g_down {
            (up, g_up)
        } else {
            (down, g_down)
        };
        let floor = -w[j] / (1.0 - w[j]).max(f64::MIN_POSITIVE);
        let alpha = if (g - 1.0).abs() <= 1e-12 {
            floor
        } else {
            ((g / rank - 1.0) / (g - 1.0)).max(floor)
        };
        w.iter_mut().for_each(|x| *x *= 1.0 - alpha);
        w[j] += alpha;
        w[j] = w[j].max(0.0);
    }
    w.iter_mut().for_each(|x| {
        if *x <= FW_TRIM {
            *x = 0.0
        }
    });
    let total: f64 = w.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Design {
            weights: uniform(),
            fallback: true,
        };
    }
    w.iter_mut().for_each(|x| *x /= total);
    Design {
        weights: w,
        fallback: false,
    }
}

/// Elimination step: keeps `a` iff `max_b θ̂·(b − a) ≤ 2ε`.
pub fn phased_elim_round(
    arms: &[Vec<f64>],
    surviving: &[usize],
    theta_hat: &[f64],
    eps: f64,
) -> Vec<usize> {
    let values: Vec<f64> = surviving
        .iter()
        .map(|&i| dot(theta_hat, &arms[i]))
        .collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    surviving
        .iter()
        .zip(&values)
        .filter(|(_, v)| best - **v <= 2.0 * eps)
        .map(|(&i, _)| i)
        .collect()
}

/// Phased Elimination over a finite set of action vectors.
#[derive(Debug, Clone)]
pub struct PhasedElimination {
    arms: Vec<Vec<f64>>,
    delta: f64,
    phase: u32,
    surviving: Vec<usize>,
    plan: VecDeque<usize>,
    acc: Option<LseAccumulator>,
    pending: Option<usize>,
    fallbacks: u32,
}

/// Ridge used by the per-phase least-squares fit.
const PHASE_RIDGE: f64 = 1e-9;

impl PhasedElimination {
    /// Policy over `arms` with failure probability `δ`.
    pub fn new(arms: Vec<Vec<f64>>, delta: f64) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::contract("empty action set"));
        }
        let d = arms[0].len();
        if arms.iter().any(|a| a.len() != d) {
            return Err(Error::contract("arms must share one dimension"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::contract("δ must lie in (0, 1)"));
        }
        let surviving = (0..arms.len()).collect();
        Ok(Self {
            arms,
            delta,
            phase: 0,
            surviving,
            plan: VecDeque::new(),
            acc: None,
            pending: None,
            fallbacks: 0,
        })
    }

    /// Accuracy `ε_l = 2^{−l}` of phase `l ≥ 1`.
    pub fn epsilon(phase: u32) -> f64 {
        0.5f64.powi(phase as i32)
    }

    /// Current phase (0 before the first one starts).
    pub fn phase(&self) -> u32 {
        self.phase
    }

    /// Surviving arm indices.
    pub fn surviving(&self) -> &[usize] {
        &self.surviving
    }

    /// Phases whose design solver fell back to the uniform design.
    pub fn fallbacks(&self) -> u32 {
        self.fallbacks
    }

    fn start_phase(&mut self) -> Result<()> {
        self.phase += 1;
        let l = self.phase as f64;
        let eps = Self::epsilon(self.phase);
        let design = g_optimal_design(&self.arms, &self.surviving);
        if design.fallback {
            self.fallbacks += 1;
        }
        let d = self.arms[0].len() as f64;
        let log_term = (self.arms.len() as f64 * l * (l + 1.0) / self.delta).ln();
        self.plan.clear();
        for &i in &self.surviving {
            let pi = design.weights[i];
            if pi > 0.0 {
                let n = (2.0 * d * pi / (eps * eps) * log_term).ceil() as u64;
                self.plan.extend(std::iter::repeat(i).take(n as usize));
            }
        }
        if self.plan.is_empty() {
            self.plan.push_back(self.surviving[0]);
        }
        self.acc = Some(LseAccumulator::new(self.arms[0].len(), PHASE_RIDGE)?);
        Ok(())
    }

    fn end_phase(&mut self) -> Result<()> {
        let theta = self.acc.as_ref().expect("phase in progress").estimate()?;
        self.surviving = phased_elim_round(
            &self.arms,
            &self.surviving,
            &theta,
            Self::epsilon(self.phase),
        );
        Ok(())
    }
}

impl PsmaqbPolicy for PhasedElimination {
    fn name(&self) -> &'static str {
        "phased-elimination"
    }

    fn next_action(&mut self, _rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        if self.plan.is_empty() {
            if self.acc.is_some() {
                self.end_phase()?;
            }
            self.start_phase()?;
        }
        let i = self.plan.pop_front().expect("phase plan is nonempty");
        self.pending = Some(i);
        Ok(self.arms[i].clone())
    }

    fn observe(&mut self, feedback: f64) -> Result<()> {
        let i = self
            .pending
            .take()
            .ok_or_else(|| Error::contract("no pending action"))?;
        self.acc
            .as_mut()
            .expect("phase in progress")
            .update(&self.arms[i], feedback, 1.0)
    }

    fn estimate(&self) -> Option<Vec<f64>> {
        self.acc
            .as_ref()
            .and_then(|a| a.estimate().ok())
            .and_then(|e| normalized(&e))
    }

    fn telemetry(&self) -> Option<Telemetry> {
        None
    }

    fn confidence(&self) -> Option<ConfidenceEllipsoid> {
        None
    }
}

/// Oracle policy that always plays a fixed unit vector.
#[derive(Debug, Clone)]
pub struct FixedAction {
    action: Vec<f64>,
}

impl FixedAction {
    /// Always plays `action`.
    pub fn new(action: Vec<f64>) -> Result<Self> {
        if (norm(&action) - 1.0).abs() > ACTION_TOLERANCE {
            return Err(Error::contract("fixed action must be a unit vector"));
        }
        Ok(Self { action })
    }
}

impl PsmaqbPolicy for FixedAction {
    fn name(&self) -> &'static str {
        "fixed"
    }
    fn next_action(&mut self, _rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        Ok(self.action.clone())
    }
    fn observe(&mut self, _feedback: f64) -> Result<()> {
        Ok(())
    }
    fn estimate(&self) -> Option<Vec<f64>> {
        Some(self.action.clone())
    }
    fn telemetry(&self) -> Option<Telemetry> {
        None
    }
    fn confidence(&self) -> Option<ConfidenceEllipsoid> {
        None
    }
}

/// `‖a − c‖²`, used by the projection bound checks.
pub fn squared_distance(a: &[f64], c: &[f64]) -> f64 {
    let d = sub(a, c);
    dot(&d, &d)
}
