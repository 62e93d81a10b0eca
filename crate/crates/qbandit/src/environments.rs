//! Bandit environments: discrete quantum bandits (one observable per arm),
//! pure-state bandits with rank-one projector actions, and classical linear
//! bandits on the unit sphere with constant or vanishing noise.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{dot, norm};
use crate::quantum::{
    born_probability, measure_observable, DiscreteObservable, ProjectorAction, PureQubit,
    QubitDensity, UNIT_TOLERANCE,
};

/// Truncation point (in standard deviations) of the vanishing-noise Gaussian.
pub const TRUNCATION_SIGMAS: f64 = 4.0;

/// Reward-noise model of a sphere bandit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// `X = ⟨θ,a⟩ + N(0, σ²)`.
    GaussianConst {
        /// Noise standard deviation.
        sigma: f64,
    },
    /// `X = ⟨θ,a⟩ + ε` with `ε` a Gaussian of standard deviation
    /// `√(1−⟨θ,a⟩²)` truncated at ±4 standard deviations.
    VanishingSubgaussian,
    /// `X ∈ {−1,+1}` with mean `⟨θ,a⟩`: a rescaled Born outcome whose variance
    /// is exactly `1−⟨θ,a⟩²`.
    VanishingVarianceBernoulli,
}

impl NoiseModel {
    fn validate(&self) -> Result<()> {
        if let NoiseModel::GaussianConst { sigma } = self {
            if !(sigma.is_finite() && *sigma > 0.0) {
                return Err(Error::contract(format!(
                    "noise sigma must be finite and positive, got {sigma}"
                )));
            }
        }
        Ok(())
    }
}

/// The variants of bandit environment.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvVariant {
    /// Each arm is an observable measured on a fixed (possibly mixed) state.
    DiscreteMaqb {
        /// One observable per arm.
        observables: Vec<DiscreteObservable>,
        /// The unknown environment state.
        state: QubitDensity,
    },
    /// Pure-state bandit: actions are rank-one projectors, rewards are Born bits.
    Psmaqb {
        /// The unknown pure state.
        state: PureQubit,
    },
    /// Linear bandit on the unit sphere `S^{d−1}`.
    SphereLinear {
        /// Unknown unit parameter.
        theta: Vec<f64>,
        /// Reward-noise model.
        noise: NoiseModel,
    },
}

/// A validated environment with its optimal mean reward cached.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentSpec {
    variant: EnvVariant,
    optimal_mean: f64,
}

/// An action played in an environment.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// Arm index of a discrete environment.
    Index(usize),
    /// Unit vector (Bloch vector of a projector, or a sphere action).
    Vector(Vec<f64>),
}

impl Action {
    /// The vector payload, if any.
    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Action::Vector(v) => Some(v),
            Action::Index(_) => None,
        }
    }
}

/// Result of one environment interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Sampled reward.
    pub reward: f64,
    /// Best achievable mean reward.
    pub optimal_mean: f64,
    /// Mean reward of the chosen action.
    pub chosen_mean: f64,
    /// `optimal_mean − chosen_mean`.
    pub instantaneous_regret: f64,
}

impl StepOutcome {
    fn new(reward: f64, optimal_mean: f64, chosen_mean: f64) -> Self {
        Self {
            reward,
            optimal_mean,
            chosen_mean,
            instantaneous_regret: (optimal_mean - chosen_mean).max(0.0),
        }
    }
}

impl EnvironmentSpec {
    /// Discrete quantum bandit with one observable per arm.
    pub fn discrete(observables: Vec<DiscreteObservable>, state: QubitDensity) -> Result<Self> {
        if observables.is_empty() {
            return Err(Error::contract(
                "a discrete environment needs at least one observable",
            ));
        }
        let means = observables
            .iter()
            .map(|o| o.expectation(&state))
            .collect::<Result<Vec<_>>>()?;
        let optimal_mean = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            variant: EnvVariant::DiscreteMaqb { observables, state },
            optimal_mean,
        })
    }

    /// Pure-state bandit.
    pub fn psmaqb(state: PureQubit) -> Self {
        Self {
            variant: EnvVariant::Psmaqb { state },
            optimal_mean: 1.0,
        }
    }

    /// Linear sphere bandit with unit parameter `theta`.
    pub fn sphere(theta: Vec<f64>, noise: NoiseModel) -> Result<Self> {
        if theta.is_empty() || theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("sphere parameter"));
        }
        let n = norm(&theta);
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::contract(format!(
                "sphere parameter must be unit, norm is {n}"
            )));
        }
        noise.validate()?;
        Ok(Self {
            variant: EnvVariant::SphereLinear { theta, noise },
            optimal_mean: 1.0,
        })
    }

    /// The underlying variant.
    pub fn variant(&self) -> &EnvVariant {
        &self.variant
    }

    /// Best achievable mean reward.
    pub fn optimal_mean(&self) -> f64 {
        self.optimal_mean
    }

    /// Dimension of vector actions (3 for qubits); number of arms for
    /// discrete environments.
    pub fn action_dim(&self) -> usize {
        match &self.variant {
            EnvVariant::DiscreteMaqb { observables, .. } => observables.len(),
            EnvVariant::Psmaqb { .. } => 3,
            EnvVariant::SphereLinear { theta, .. } => theta.len(),
        }
    }

    /// The hidden unit vector of a continuous environment (Bloch vector or
    /// sphere parameter).
    pub fn hidden_vector(&self) -> Option<Vec<f64>> {
        match &self.variant {
            EnvVariant::DiscreteMaqb { .. } => None,
            EnvVariant::Psmaqb { state } => Some(state.bloch().to_vec()),
            EnvVariant::SphereLinear { theta, .. } => Some(theta.clone()),
        }
    }

    fn unit_action<'a>(&self, action: &'a Action) -> Result<&'a [f64]> {
        let v = action
            .as_vector()
            .ok_or_else(|| Error::contract("continuous environments take vector actions"))?;
        if v.len() != self.action_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.action_dim(),
                found: v.len(),
            });
        }
        let n = norm(v);
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::contract(format!(
                "actions must be unit vectors, norm is {n}"
            )));
        }
        Ok(v)
    }

    /// Mean reward of an action, without sampling.
    pub fn mean_reward(&self, action: &Action) -> Result<f64> {
        match &self.variant {
            EnvVariant::DiscreteMaqb { observables, state } => match action {
                Action::Index(i) => observables
                    .get(*i)
                    .ok_or_else(|| Error::contract(format!("arm {i} out of range")))?
                    .expectation(state),
                Action::Vector(_) => Err(Error::contract("discrete environments take arm indices")),
            },
            EnvVariant::Psmaqb { state } => {
                let v = self.unit_action(action)?;
                Ok((1.0 + dot(&state.bloch(), v)) / 2.0)
            }
            EnvVariant::SphereLinear { theta, .. } => Ok(dot(theta, self.unit_action(action)?)),
        }
    }

    /// Plays `action` once and samples its reward.
    pub fn pull<R: Rng + ?Sized>(&self, action: &Action, rng: &mut R) -> Result<StepOutcome> {
        let chosen = self.mean_reward(action)?;
        let reward = match &self.variant {
            EnvVariant::DiscreteMaqb { observables, state } => {
                let Action::Index(i) = action else {
                    unreachable!("checked by mean_reward")
                };
                measure_observable(state, &observables[*i], rng)?
            }
            EnvVariant::Psmaqb { state } => {
                let v = self.unit_action(action)?;
                let proj = ProjectorAction::new([v[0], v[1], v[2]])?;
                f64::from(u8::from(rng.gen::<f64>() < born_probability(state, &proj)))
            }
            EnvVariant::SphereLinear { noise, .. } => match noise {
                NoiseModel::GaussianConst { sigma } => {
                    chosen + sigma * rng.sample::<f64, _>(StandardNormal)
                }
                NoiseModel::VanishingSubgaussian => {
                    let std = (1.0 - chosen * chosen).max(0.0).sqrt();
                    chosen + std * truncated_normal(rng)
                }
                NoiseModel::VanishingVarianceBernoulli => {
                    if rng.gen::<f64>() < (1.0 + chosen) / 2.0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
            },
        };
        Ok(StepOutcome::new(reward, self.optimal_mean, chosen))
    }

    /// Maps a sampled reward to the linear-model feedback consumed by the
    /// sphere policies: Born bits become `2X − 1 ∈ {−1, +1}` (mean `⟨θ,a⟩`);
    /// every other reward is already linear and passes through unchanged.
    pub fn linear_feedback(&self, outcome: &StepOutcome) -> f64 {
        match self.variant {
            EnvVariant::Psmaqb { .. } => 2.0 * outcome.reward - 1.0,
            _ => outcome.reward,
        }
    }

    /// Sub-optimality gaps `Δ_a` of a discrete environment.
    pub fn suboptimality_gaps(&self) -> Result<Vec<f64>> {
        match &self.variant {
            EnvVariant::DiscreteMaqb { observables, state } => observables
                .iter()
                .map(|o| Ok((self.optimal_mean - o.expectation(state)?).max(0.0)))
                .collect(),
            _ => Err(Error::contract(
                "sub-optimality gaps are defined for discrete environments only",
            )),
        }
    }
}

/// Standard normal truncated to `[−4, 4]` by rejection.
pub fn truncated_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        if z.abs() <= TRUNCATION_SIGMAS {
            return z;
        }
    }
}
