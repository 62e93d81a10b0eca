//! Experiment configuration, seeded Monte Carlo execution, CSV traces and
//! scaling-law fits.
//!
//! An [`ExperimentConfig`] names a task (a bandit, a work-extraction run or a
//! contextual recommender run), a horizon and a list of seeds. Every seed
//! derives independent ChaCha streams for each component, so a
//! `(config, seed)` pair always produces the same trace regardless of how
//! many threads execute the experiment.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environments::{Action, EnvironmentSpec, NoiseModel};
use crate::error::{Error, Result};
use crate::matcore::dot;
use crate::policies::{
    ActionSet, BanditPls, EigenControlParams, EigenControlled, FixedAction, LinUcb, LinUcbParams,
    PhasedElimination, PsmaqbPolicy, Ucb, WeightRule,
};
use crate::qcb::{run_qcb, QcbConfig, QcbTrace};
use crate::quantum::{random_unit_vector, unit_bloch, DiscreteObservable, PureQubit, QubitDensity};
use crate::thermo::{
    run_extraction, DissipationLedger, EpsilonSchedule, JcConfig, Protocol, ThermalConfig,
};

/// Version of the configuration and CSV schemas.
pub const SCHEMA_VERSION: u32 = 1;

/// Fixed column order of trace CSV files.
pub const CSV_HEADER: [&str; 8] = [
    "round",
    "action",
    "reward",
    "inst_regret",
    "cum_regret",
    "lmin",
    "lmax",
    "coverage",
];

/// Stream labels: each seed derives one independent generator per component.
pub mod streams {
    /// Problem instance (random hidden states).
    pub const SETUP: u64 = 0;
    /// Environment noise and measurement outcomes.
    pub const ENVIRONMENT: u64 = 1;
    /// Policy randomness.
    pub const POLICY: u64 = 2;
    /// Battery (work-extraction) randomness.
    pub const BATTERY: u64 = 3;
    /// Context sampling of the recommender.
    pub const CONTEXTS: u64 = 4;
}

/// The generator of `stream` for `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// One arm of a discrete environment: a two-outcome observable along a Bloch
/// direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableConfig {
    /// Bloch direction of the `plus` eigenprojector.
    pub direction: [f64; 3],
    /// Eigenvalue on the `direction` projector.
    #[serde(default = "plus_one")]
    pub plus: f64,
    /// Eigenvalue on the opposite projector.
    #[serde(default = "minus_one")]
    pub minus: f64,
}

fn plus_one() -> f64 {
    1.0
}
fn minus_one() -> f64 {
    -1.0
}

/// Environment of a bandit task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentConfig {
    /// Discrete quantum bandit: observables measured on a (mixed) state.
    Discrete {
        /// Bloch vector of the environment state.
        state: [f64; 3],
        /// One observable per arm.
        arms: Vec<ObservableConfig>,
    },
    /// Pure-state bandit; the state is drawn uniformly per seed when absent.
    PureState {
        /// Bloch vector of the unknown state.
        #[serde(default)]
        state: Option<[f64; 3]>,
    },
    /// Linear bandit on the unit sphere; `θ` is drawn per seed when absent.
    Sphere {
        /// Dimension `d`.
        dim: usize,
        /// Unknown unit parameter.
        #[serde(default)]
        theta: Option<Vec<f64>>,
        /// Reward noise.
        noise: NoiseModel,
    },
}

/// Policy and hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    /// UCB over a discrete environment.
    Ucb {
        /// Subgaussian parameter `η`.
        #[serde(default = "plus_one")]
        eta: f64,
        /// Confidence `δ`; `1/T²` when absent.
        #[serde(default)]
        delta: Option<f64>,
    },
    /// LinUCB over the unit sphere.
    Linucb {
        /// Regulariser, failure probability, norm bound and noise level.
        #[serde(flatten)]
        params: LinUcbParams,
    },
    /// LinUCB-VN.
    Vn {
        /// Regulariser `λ₀`.
        lambda0: f64,
        /// Batch weighting rule.
        #[serde(default = "theory_weight")]
        weight: WeightRule,
        /// Failure probability `δ′`.
        #[serde(default = "default_delta")]
        delta: f64,
    },
    /// LinUCB-VVN.
    Vvn {
        /// Regulariser `λ₀`.
        lambda0: f64,
        /// Median-of-means subsamples `k`.
        k: usize,
        /// Batch weighting rule.
        #[serde(default = "theory_weight")]
        weight: WeightRule,
        /// Failure probability `δ′` (unused by the constant radius).
        #[serde(default = "default_delta")]
        delta: f64,
    },
    /// Explore-then-commit Pauli tomography.
    BanditPls,
    /// Phased Elimination over a finite set of unit vectors.
    PhasedElimination {
        /// Candidate actions.
        arms: Vec<Vec<f64>>,
        /// Failure probability `δ`.
        #[serde(default = "default_delta")]
        delta: f64,
    },
    /// Always play one unit vector.
    Fixed {
        /// The action.
        action: Vec<f64>,
    },
}

fn theory_weight() -> WeightRule {
    WeightRule::Theory
}
fn default_delta() -> f64 {
    0.1
}

/// Work-extraction battery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProtocolConfig {
    /// Jaynes–Cummings battery.
    Jc {
        /// Oscillator quantum `ω`.
        #[serde(default = "plus_one")]
        omega: f64,
        /// Initial excitation number.
        #[serde(default)]
        initial_level: u64,
    },
    /// Quasi-static thermal battery.
    Thermal {
        /// Inverse temperature `β`.
        #[serde(default = "plus_one")]
        beta: f64,
        /// Quasi-static steps `M`.
        steps: u32,
        /// Accuracy schedule.
        schedule: EpsilonSchedule,
    },
}

impl ProtocolConfig {
    /// The simulator protocol.
    pub fn protocol(&self) -> Protocol {
        match *self {
            ProtocolConfig::Jc {
                omega,
                initial_level,
            } => Protocol::Jc(JcConfig {
                omega,
                initial_level,
            }),
            ProtocolConfig::Thermal {
                beta,
                steps,
                schedule,
            } => Protocol::Thermal(ThermalConfig {
                beta,
                steps,
                schedule,
            }),
        }
    }
}

/// What an experiment runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskConfig {
    /// A bandit environment played by a policy.
    Bandit {
        /// Environment.
        environment: EnvironmentConfig,
        /// Policy.
        policy: PolicyConfig,
    },
    /// Adaptive work extraction from an unknown pure state.
    Extraction {
        /// Battery protocol.
        protocol: ProtocolConfig,
        /// Direction-learning policy.
        policy: PolicyConfig,
        /// Bloch vector of the state; drawn per seed when absent.
        #[serde(default)]
        state: Option<[f64; 3]>,
    },
    /// Contextual recommender over Hamiltonian contexts.
    Qcb {
        /// Recommender configuration.
        #[serde(flatten)]
        config: QcbConfig,
    },
}

/// Optional per-round telemetry.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TelemetryFlags {
    /// Record `λ_min`/`λ_max` of the policy's design matrix.
    #[serde(default)]
    pub eigenvalues: bool,
    /// Record whether the hidden parameter lies in the confidence set.
    #[serde(default)]
    pub coverage: bool,
    /// Record the Landauer memory entropy in extraction runs.
    #[serde(default)]
    pub ledger: bool,
    /// Record the infidelity of the policy's estimate each round.
    #[serde(default)]
    pub infidelity: bool,
}

/// A complete experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Schema version; must equal [`SCHEMA_VERSION`].
    pub schema_version: u32,
    /// Horizon `T ≥ 1`.
    pub rounds: u64,
    /// Explicit seeds, nonempty and distinct.
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Alternative to `seeds`: `seed_count` consecutive seeds from `base_seed`.
    #[serde(default)]
    pub seed_count: Option<u64>,
    /// First seed when `seed_count` is used.
    #[serde(default)]
    pub base_seed: u64,
    /// Output directory for traces.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Telemetry switches.
    #[serde(default)]
    pub telemetry: TelemetryFlags,
    /// The task.
    pub task: TaskConfig,
}

impl ExperimentConfig {
    /// A config with one seed and no output.
    pub fn new(rounds: u64, seeds: Vec<u64>, task: TaskConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            rounds,
            seeds,
            seed_count: None,
            base_seed: 0,
            output: None,
            telemetry: TelemetryFlags::default(),
            task,
        }
    }

    /// Parses and validates TOML text.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a TOML file.
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Serialises to TOML.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config(e.to_string()))
    }

    /// The resolved seed list.
    pub fn seed_list(&self) -> Vec<u64> {
        match self.seed_count {
            Some(n) if self.seeds.is_empty() => {
                (0..n).map(|i| self.base_seed.wrapping_add(i)).collect()
            }
            _ => self.seeds.clone(),
        }
    }

    /// Checks the schema, seeds, horizon and policy/environment pairing, and
    /// constructs every component once so parameter constraints (such as the
    /// `λ₀` floor) surface as configuration errors.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.rounds == 0 {
            return Err(Error::config("rounds must be at least 1"));
        }
        if !self.seeds.is_empty() && self.seed_count.is_some() {
            return Err(Error::config(
                "give either `seeds` or `seed_count`, not both",
            ));
        }
        let seeds = self.seed_list();
        if seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        let mut seen = HashSet::new();
        if let Some(s) = seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::config(format!("seed {s} listed twice")));
        }
        let mut setup = stream_rng(0, streams::SETUP);
        match &self.task {
            TaskConfig::Bandit {
                environment,
                policy,
            } => {
                let env = build_environment(environment, &mut setup).map_err(as_config)?;
                build_policy(policy, &env, self.rounds).map_err(as_config)?;
            }
            TaskConfig::Extraction {
                protocol,
                policy,
                state,
            } => {
                let psi = extraction_state(*state, &mut setup).map_err(as_config)?;
                let env = EnvironmentSpec::psmaqb(psi);
                if let PolicyConfig::Ucb { .. } = policy {
                    return Err(Error::config("policy `ucb` needs a discrete environment, but extraction learns a direction on the Bloch sphere"));
                }
                validate_protocol(protocol)?;
                build_policy(policy, &env, self.rounds).map_err(as_config)?;
            }
            TaskConfig::Qcb { config } => config.validate().map_err(as_config)?,
        }
        Ok(())
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

fn validate_protocol(p: &ProtocolConfig) -> Result<()> {
    match *p {
        ProtocolConfig::Jc { omega, .. } if !(omega.is_finite() && omega > 0.0) => {
            Err(Error::config(format!("JC ω must be positive, got {omega}")))
        }
        ProtocolConfig::Thermal {
            beta,
            steps,
            schedule,
        } => {
            if !(beta.is_finite() && beta > 0.0) || steps == 0 {
                return Err(Error::config(
                    "thermal battery needs β > 0 and at least one step",
                ));
            }
            match schedule {
                EpsilonSchedule::Adaptive { c, delta }
                    if !(c > 0.0 && delta > 0.0 && delta < 1.0) =>
                {
                    Err(Error::config(
                        "adaptive schedule needs C > 0 and δ ∈ (0, 1)",
                    ))
                }
                EpsilonSchedule::Constant { epsilon } if !(epsilon > 0.0 && epsilon <= 0.5) => Err(
                    Error::config(format!("constant ε must lie in (0, ½], got {epsilon}")),
                ),
                _ => Ok(()),
            }
        }
        _ => Ok(()),
    }
}

/// Builds the environment of one seed, drawing random hidden states from `setup`.
pub fn build_environment(
    cfg: &EnvironmentConfig,
    setup: &mut ChaCha8Rng,
) -> Result<EnvironmentSpec> {
    match cfg {
        EnvironmentConfig::Discrete { state, arms } => {
            let obs = arms
                .iter()
                .map(|a| DiscreteObservable::along(unit_bloch(&a.direction)?, a.plus, a.minus))
                .collect::<Result<Vec<_>>>()?;
            EnvironmentSpec::discrete(obs, QubitDensity::new(*state)?)
        }
        EnvironmentConfig::PureState { state } => {
            Ok(EnvironmentSpec::psmaqb(extraction_state(*state, setup)?))
        }
        EnvironmentConfig::Sphere { dim, theta, noise } => {
            if *dim < 2 {
                return Err(Error::config("sphere bandits need dim ≥ 2"));
            }
            let theta = match theta {
                Some(t) if t.len() != *dim => {
                    return Err(Error::config(format!(
                        "θ has {} entries but dim is {dim}",
                        t.len()
                    )))
                }
                Some(t) => t.clone(),
                None => random_unit_vector(*dim, setup),
            };
            EnvironmentSpec::sphere(theta, *noise)
        }
    }
}

fn extraction_state(state: Option<[f64; 3]>, setup: &mut ChaCha8Rng) -> Result<PureQubit> {
    match state {
        Some(b) => PureQubit::new(b),
        None => Ok(PureQubit::random(setup)),
    }
}

/// A constructed policy.
pub enum PolicyInstance {
    /// Index policy for discrete environments.
    Discrete(Ucb),
    /// Vector-action policy.
    Vector(Box<dyn PsmaqbPolicy>),
}

/// Builds a policy for `env` and horizon `T`, rejecting incompatible pairings.
pub fn build_policy(
    cfg: &PolicyConfig,
    env: &EnvironmentSpec,
    horizon: u64,
) -> Result<PolicyInstance> {
    let discrete = matches!(
        env.variant(),
        crate::environments::EnvVariant::DiscreteMaqb { .. }
    );
    let env_name = match env.variant() {
        crate::environments::EnvVariant::DiscreteMaqb { .. } => "discrete",
        crate::environments::EnvVariant::Psmaqb { .. } => "pure_state",
        crate::environments::EnvVariant::SphereLinear { .. } => "sphere",
    };
    let clash = |policy: &str| {
        Error::config(format!(
            "policy `{policy}` is incompatible with the `{env_name}` environment"
        ))
    };
    let dim = env.action_dim();
    let vector: Box<dyn PsmaqbPolicy> = match cfg {
        PolicyConfig::Ucb { eta, delta } => {
            if !discrete {
                return Err(clash("ucb"));
            }
            let t = horizon as f64;
            let delta = delta.unwrap_or(1.0 / (t * t).max(2.0));
            return Ok(PolicyInstance::Discrete(Ucb::new(dim, *eta, delta)?));
        }
        _ if discrete => {
            return Err(clash(policy_name(cfg)));
        }
        PolicyConfig::Linucb { params } => Box::new(LinUcb::new(dim, ActionSet::Sphere, *params)?),
        PolicyConfig::Vn {
            lambda0,
            weight,
            delta,
        } => Box::new(EigenControlled::vn(EigenControlParams {
            dim,
            lambda0: *lambda0,
            k: 1,
            weight: *weight,
            delta: *delta,
            horizon,
        })?),
        PolicyConfig::Vvn {
            lambda0,
            k,
            weight,
            delta,
        } => Box::new(EigenControlled::vvn(EigenControlParams {
            dim,
            lambda0: *lambda0,
            k: *k,
            weight: *weight,
            delta: *delta,
            horizon,
        })?),
        PolicyConfig::BanditPls => {
            if dim != 3 {
                return Err(clash("bandit_pls"));
            }
            Box::new(BanditPls::new(horizon)?)
        }
        PolicyConfig::PhasedElimination { arms, delta } => {
            if arms.iter().any(|a| a.len() != dim) {
                return Err(Error::config(format!(
                    "phased-elimination arms must have dimension {dim}"
                )));
            }
            Box::new(PhasedElimination::new(arms.clone(), *delta)?)
        }
        PolicyConfig::Fixed { action } => Box::new(FixedAction::new(action.clone())?),
    };
    Ok(PolicyInstance::Vector(vector))
}

fn policy_name(cfg: &PolicyConfig) -> &'static str {
    match cfg {
        PolicyConfig::Ucb { .. } => "ucb",
        PolicyConfig::Linucb { .. } => "linucb",
        PolicyConfig::Vn { .. } => "vn",
        PolicyConfig::Vvn { .. } => "vvn",
        PolicyConfig::BanditPls => "bandit_pls",
        PolicyConfig::PhasedElimination { .. } => "phased_elimination",
        PolicyConfig::Fixed { .. } => "fixed",
    }
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

/// One row of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// Round index, 1-based.
    pub round: u64,
    /// Action played.
    pub action: Action,
    /// Sampled reward.
    pub reward: f64,
    /// Instantaneous regret (dissipation for extraction runs).
    pub inst_regret: f64,
    /// Cumulative regret.
    pub cum_regret: f64,
    /// `λ_min` of the design matrix, when recorded.
    pub lmin: Option<f64>,
    /// `λ_max` of the design matrix, when recorded.
    pub lmax: Option<f64>,
    /// Whether the hidden parameter was in the confidence set, when recorded.
    pub coverage: Option<bool>,
}

/// Output of one seed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeTrace {
    /// Seed.
    pub seed: u64,
    /// Per-round records; `len == T`.
    pub records: Vec<RoundRecord>,
    /// Per-round estimate infidelity (extraction: of the chosen direction).
    pub infidelity: Vec<f64>,
    /// Dissipation ledger of extraction runs.
    pub ledger: Option<DissipationLedger>,
    /// Recommender trace of QCB runs.
    pub qcb: Option<QcbTrace>,
}

impl EpisodeTrace {
    /// Cumulative-regret series.
    pub fn cumulative_regret(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.cum_regret).collect()
    }

    /// Rounds that closed a batch of an eigenvalue-controlled policy: the
    /// `(round, λ_min, λ_max)` rows, available when eigenvalues are recorded.
    pub fn eigen_series(&self) -> Vec<(u64, f64, f64)> {
        self.records
            .iter()
            .filter_map(|r| Some((r.round, r.lmin?, r.lmax?)))
            .collect()
    }
}

fn push_record(records: &mut Vec<RoundRecord>, action: Action, reward: f64, inst: f64) {
    let prev = records.last().map_or(0.0, |r| r.cum_regret);
    records.push(RoundRecord {
        round: records.len() as u64 + 1,
        action,
        reward,
        inst_regret: inst,
        cum_regret: prev + inst,
        lmin: None,
        lmax: None,
        coverage: None,
    });
}

/// Runs one seed of a (validated) experiment.
pub fn run_episode(cfg: &ExperimentConfig, seed: u64) -> Result<EpisodeTrace> {
    let mut setup = stream_rng(seed, streams::SETUP);
    let mut env_rng = stream_rng(seed, streams::ENVIRONMENT);
    let mut policy_rng = stream_rng(seed, streams::POLICY);
    let t_max = cfg.rounds;
    let mut trace = EpisodeTrace {
        seed,
        records: Vec::with_capacity(t_max as usize),
        ..Default::default()
    };
    match &cfg.task {
        TaskConfig::Bandit {
            environment,
            policy,
        } => {
            let env = build_environment(environment, &mut setup)?;
            match build_policy(policy, &env, t_max)? {
                PolicyInstance::Discrete(mut ucb) => {
                    for _ in 0..t_max {
                        let arm = ucb.select();
                        let out = env.pull(&Action::Index(arm), &mut env_rng)?;
                        ucb.observe(arm, out.reward)?;
                        push_record(
                            &mut trace.records,
                            Action::Index(arm),
                            out.reward,
                            out.instantaneous_regret,
                        );
                    }
                }
                PolicyInstance::Vector(mut pol) => {
                    let hidden = env
                        .hidden_vector()
                        .expect("vector environments expose their parameter");
                    for _ in 0..t_max {
                        let a = pol.next_action(&mut policy_rng)?;
                        let action = Action::Vector(a);
                        let out = env.pull(&action, &mut env_rng)?;
                        pol.observe(env.linear_feedback(&out))?;
                        push_record(
                            &mut trace.records,
                            action,
                            out.reward,
                            out.instantaneous_regret,
                        );
                        annotate(
                            trace.records.last_mut().expect("just pushed"),
                            pol.as_ref(),
                            &hidden,
                            cfg.telemetry,
                        )?;
                        if cfg.telemetry.infidelity {
                            trace
                                .infidelity
                                .push(estimate_infidelity(pol.as_ref(), &hidden));
                        }
                    }
                }
            }
        }
        TaskConfig::Extraction {
            protocol,
            policy,
            state,
        } => {
            let psi = extraction_state(*state, &mut setup)?;
            let env = EnvironmentSpec::psmaqb(psi);
            let PolicyInstance::Vector(mut pol) = build_policy(policy, &env, t_max)? else {
                return Err(Error::config("extraction needs a vector-action policy"));
            };
            let mut battery = stream_rng(seed, streams::BATTERY);
            let (rounds, ledger) = run_extraction(
                &protocol.protocol(),
                &psi,
                pol.as_mut(),
                t_max,
                cfg.telemetry.ledger,
                &mut policy_rng,
                &mut battery,
            )?;
            for (r, d) in rounds.iter().zip(&ledger.dissipation) {
                push_record(
                    &mut trace.records,
                    Action::Vector(r.direction.clone()),
                    f64::from(r.reward),
                    *d,
                );
            }
            trace.infidelity = rounds.iter().map(|r| r.infidelity).collect();
            trace.ledger = Some(ledger);
        }
        TaskConfig::Qcb { config } => {
            let mut contexts = stream_rng(seed, streams::CONTEXTS);
            let q = run_qcb(config, t_max, &mut contexts, &mut env_rng)?;
            for r in &q.rounds {
                push_record(
                    &mut trace.records,
                    Action::Index(r.arm),
                    r.reward,
                    r.linear_regret,
                );
            }
            trace.qcb = Some(q);
        }
    }
    Ok(trace)
}

fn annotate(
    rec: &mut RoundRecord,
    pol: &dyn PsmaqbPolicy,
    hidden: &[f64],
    flags: TelemetryFlags,
) -> Result<()> {
    if flags.eigenvalues {
        if let Some(t) = pol.telemetry() {
            rec.lmin = Some(t.lambda_min);
            rec.lmax = Some(t.lambda_max);
        }
    }
    if flags.coverage {
        if let Some(c) = pol.confidence() {
            rec.coverage = Some(c.contains(hidden)?);
        }
    }
    Ok(())
}

/// `(1 − ⟨θ, θ̂⟩)/2`: the infidelity of the estimate for pure-state bandits
/// (and the same normalised distance for sphere bandits); `½` before any
/// estimate exists.
fn estimate_infidelity(pol: &dyn PsmaqbPolicy, hidden: &[f64]) -> f64 {
    pol.estimate()
        .map_or(0.5, |e| ((1.0 - dot(&e, hidden)) / 2.0).max(0.0))
}

/// Runs every seed of a validated config on the rayon pool; the result is
/// ordered by the config's seed list independent of completion order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<EpisodeTrace>> {
    cfg.validate()?;
    cfg.seed_list()
        .par_iter()
        .map(|&s| run_episode(cfg, s))
        .collect()
}

/// Writes every trace to `dir` (`trace_<seed>.csv`, plus `phase_map_<seed>.csv`
/// for recommender runs and `ledger_<seed>.csv` for extraction runs).
pub fn write_outputs(traces: &[EpisodeTrace], dir: &Path, burn_in: usize) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for t in traces {
        let p = dir.join(format!("trace_{}.csv", t.seed));
        write_trace_csv(t, std::fs::File::create(&p)?)?;
        written.push(p);
        if let Some(q) = &t.qcb {
            if burn_in < q.rounds.len() {
                let p = dir.join(format!("phase_map_{}.csv", t.seed));
                crate::qcb::write_phase_map(
                    &crate::qcb::phase_map_export(q, burn_in)?,
                    std::fs::File::create(&p)?,
                )?;
                written.push(p);
            }
        }
        if let Some(l) = &t.ledger {
            let p = dir.join(format!("ledger_{}.csv", t.seed));
            write_ledger_csv(l, &t.infidelity, std::fs::File::create(&p)?)?;
            written.push(p);
        }
    }
    Ok(written)
}

fn format_action(a: &Action) -> String {
    match a {
        Action::Index(i) => i.to_string(),
        Action::Vector(v) => {
            let mut s = String::from("[");
            for (i, x) in v.iter().enumerate() {
                if i > 0 {
                    s.push(';');
                }
                write!(s, "{x:?}").expect("writing to a String");
            }
            s.push(']');
            s
        }
    }
}

fn parse_action(s: &str) -> Result<Action> {
    let bad = || Error::config(format!("malformed action `{s}`"));
    if let Some(inner) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        let v = inner
            .split(';')
            .map(|x| x.parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Action::Vector(v))
    } else {
        s.parse().map(Action::Index).map_err(|_| bad())
    }
}

fn format_opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| format!("{v:?}"))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::config(format!("malformed number `{s}`")))
}

fn parse_opt(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_f64(s).map(Some)
    }
}

/// Writes the per-round records as CSV with the fixed [`CSV_HEADER`].
/// Floats use the shortest round-trip representation, so
/// write → read → write is byte-identical.
pub fn write_trace_csv<W: Write>(trace: &EpisodeTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &trace.records {
        w.write_record([
            r.round.to_string(),
            format_action(&r.action),
            format!("{:?}", r.reward),
            format!("{:?}", r.inst_regret),
            format!("{:?}", r.cum_regret),
            format_opt(r.lmin),
            format_opt(r.lmax),
            r.coverage
                .map_or(String::new(), |c| u8::from(c).to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads records written by [`write_trace_csv`].
pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<RoundRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::config(format!(
            "unexpected trace header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let coverage = match &row[7] {
            "" => None,
            "0" => Some(false),
            "1" => Some(true),
            other => return Err(Error::config(format!("malformed coverage flag `{other}`"))),
        };
        out.push(RoundRecord {
            round: row[0]
                .parse()
                .map_err(|_| Error::config(format!("malformed round `{}`", &row[0])))?,
            action: parse_action(&row[1])?,
            reward: parse_f64(&row[2])?,
            inst_regret: parse_f64(&row[3])?,
            cum_regret: parse_f64(&row[4])?,
            lmin: parse_opt(&row[5])?,
            lmax: parse_opt(&row[6])?,
            coverage,
        });
    }
    Ok(out)
}

/// Writes a dissipation ledger as CSV
/// (`round,work,dissipation,cum_dissipation,infidelity,landauer_entropy`).
pub fn write_ledger_csv<W: Write>(
    ledger: &DissipationLedger,
    infidelity: &[f64],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "round",
        "work",
        "dissipation",
        "cum_dissipation",
        "infidelity",
        "landauer_entropy",
    ])?;
    for i in 0..ledger.work.len() {
        w.write_record([
            (i + 1).to_string(),
            format!("{:?}", ledger.work[i]),
            format!("{:?}", ledger.dissipation[i]),
            format!("{:?}", ledger.cumulative[i]),
            format_opt(infidelity.get(i).copied()),
            format_opt(ledger.landauer_entropy.get(i).copied()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

/// Pointwise mean and sample standard deviation of several series.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    /// Pointwise mean.
    pub mean: Vec<f64>,
    /// Pointwise sample standard deviation (0 for a single series).
    pub std: Vec<f64>,
}

/// Aggregates equal-length series. Values at each point are summed in sorted
/// order, so the result is bit-identical under any permutation of the input.
pub fn aggregate(series: &[Vec<f64>]) -> Result<Aggregate> {
    let n = series
        .first()
        .ok_or_else(|| Error::contract("aggregate needs at least one series"))?
        .len();
    if let Some(s) = series.iter().find(|s| s.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: s.len(),
        });
    }
    let k = series.len() as f64;
    let mut mean = Vec::with_capacity(n);
    let mut std = Vec::with_capacity(n);
    let mut col = Vec::with_capacity(series.len());
    for i in 0..n {
        col.clear();
        col.extend(series.iter().map(|s| s[i]));
        col.sort_by(f64::total_cmp);
        let m = col.iter().sum::<f64>() / k;
        let var = if series.len() > 1 {
            col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        mean.push(m);
        std.push(var.sqrt());
    }
    Ok(Aggregate { mean, std })
}

// ---------------------------------------------------------------------------
// Scaling fits
// ---------------------------------------------------------------------------

/// Scaling laws fitted by ordinary least squares in linearised coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `y = c·ln²t + b`; coefficients `[c, b]`.
    LogSquared,
    /// `y = c·√(t ln t) + b`; coefficients `[c, b]`.
    SqrtTLogT,
    /// `y = c·√t + b`; coefficients `[c, b]`.
    Sqrt,
    /// `y = c·(ln t/t)^m`, fitted as `ln y = ln c + m·ln(ln t/t)`;
    /// coefficients `[c, m]`.
    LogOverTPower,
    /// `y = c·t^m`, fitted as `ln y = ln c + m·ln t`; coefficients `[c, m]`.
    Power,
    /// `y = c·(ln t)^p`, fitted as `ln y = ln c + p·ln ln t`; coefficients `[c, p]`.
    PolyLog,
}

impl FitModel {
    /// All models.
    pub const ALL: [FitModel; 6] = [
        FitModel::LogSquared,
        FitModel::SqrtTLogT,
        FitModel::Sqrt,
        FitModel::LogOverTPower,
        FitModel::Power,
        FitModel::PolyLog,
    ];

    /// Snake-case name, as used in configs and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            FitModel::LogSquared => "log_squared",
            FitModel::SqrtTLogT => "sqrt_t_log_t",
            FitModel::Sqrt => "sqrt",
            FitModel::LogOverTPower => "log_over_t_power",
            FitModel::Power => "power",
            FitModel::PolyLog => "poly_log",
        }
    }

    /// Human-readable formula.
    pub fn formula(self) -> &'static str {
        match self {
            FitModel::LogSquared => "c*ln(t)^2 + b",
            FitModel::SqrtTLogT => "c*sqrt(t*ln(t)) + b",
            FitModel::Sqrt => "c*sqrt(t) + b",
            FitModel::LogOverTPower => "c*(ln(t)/t)^m",
            FitModel::Power => "c*t^m",
            FitModel::PolyLog => "c*ln(t)^p",
        }
    }

    /// True when the fit is done on `ln y` (so the residual is in log units).
    pub fn is_log_linear(self) -> bool {
        matches!(
            self,
            FitModel::LogOverTPower | FitModel::Power | FitModel::PolyLog
        )
    }

    fn abscissa(self, t: f64) -> f64 {
        match self {
            FitModel::LogSquared => t.ln().powi(2),
            FitModel::SqrtTLogT => (t * t.ln()).sqrt(),
            FitModel::Sqrt => t.sqrt(),
            FitModel::LogOverTPower => (t.ln() / t).ln(),
            FitModel::Power => t.ln(),
            FitModel::PolyLog => t.ln().ln(),
        }
    }
}

impl std::str::FromStr for FitModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FitModel::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = FitModel::ALL.iter().map(|m| m.name()).collect();
                Error::config(format!(
                    "unknown fit model `{s}` (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

/// A fitted scaling law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Model.
    pub model: FitModel,
    /// `[c, b]` for the additive models, `[c, m]` for the multiplicative ones.
    pub coefficients: [f64; 2],
    /// Residual sum of squares in the fitted (linearised) coordinates.
    pub residual: f64,
}

impl FitResult {
    /// Model prediction at `t`.
    pub fn predict(&self, t: f64) -> f64 {
        let [c, x] = self.coefficients;
        match self.model {
            FitModel::LogOverTPower => c * (t.ln() / t).powf(x),
            FitModel::Power => c * t.powf(x),
            FitModel::PolyLog => c * t.ln().powf(x),
            m => c * m.abscissa(t) + x,
        }
    }

    /// Residual sum of squares `Σ (y_i − predict(t_i))²` in the original
    /// coordinates, which makes fits of different models comparable.
    pub fn rss(&self, t: &[f64], y: &[f64]) -> f64 {
        t.iter()
            .zip(y)
            .map(|(&t, &y)| (y - self.predict(t)).powi(2))
            .sum()
    }
}

/// Minimum number of points accepted by [`fit_scaling`].
pub const MIN_FIT_POINTS: usize = 10;

/// Fits `model` to points `(t_i, y_i)` by OLS in the model's linearised
/// coordinates.
pub fn fit_scaling(t: &[f64], y: &[f64], model: FitModel) -> Result<FitResult> {
    if t.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: t.len(),
            found: y.len(),
        });
    }
    if t.len() < MIN_FIT_POINTS {
        return Err(Error::contract(format!(
            "a fit needs at least {MIN_FIT_POINTS} points, got {}",
            t.len()
        )));
    }
    if t.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fit data"));
    }
    let min_t = match model {
        FitModel::LogSquared | FitModel::Sqrt | FitModel::Power => 0.0,
        FitModel::SqrtTLogT | FitModel::LogOverTPower | FitModel::PolyLog => 1.0,
    };
    if t.iter().any(|&v| v <= min_t) {
        return Err(Error::contract(format!(
            "model {} needs abscissae above {min_t}",
            model.formula()
        )));
    }
    let log_y = model.is_log_linear();
    if log_y && y.iter().any(|&v| v <= 0.0) {
        return Err(Error::contract(format!(
            "model {} needs positive ordinates",
            model.formula()
        )));
    }
    let xs: Vec<f64> = t.iter().map(|&v| model.abscissa(v)).collect();
    let ys: Vec<f64> = if log_y {
        y.iter().map(|v| v.ln()).collect()
    } else {
        y.to_vec()
    };
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= f64::EPSILON * n * mx.abs().max(1.0).powi(2) {
        return Err(Error::contract(
            "degenerate fit design: all abscissae are equal",
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let coefficients = if log_y {
        [intercept.exp(), slope]
    } else {
        [slope, intercept]
    };
    Ok(FitResult {
        model,
        coefficients,
        residual,
    })
}
