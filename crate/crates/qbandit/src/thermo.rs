//! Work extraction from unknown pure qubits: a Jaynes–Cummings battery, a
//! quasi-static thermal battery, and the dissipation / Landauer ledgers of an
//! adaptive extraction protocol driven by a pure-state bandit policy.
//!
//! The thermal battery is simulated through its exact classical reduction: a
//! branch `i ∈ {0, 1}` (aligned with the chosen direction with probability
//! equal to the fidelity) followed by `M` independent bits
//! `x_τ ~ Bernoulli(ε + τδp)`, `δp = (½ − ε)/M`, with work
//! `ΔW = −i·ν(1) + Σ_{τ<M} x_τ(ν(τ) − ν(τ+1)) + x_M ν(M)`.

use std::f64::consts::{FRAC_PI_2, LN_2};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::environments::{EnvironmentSpec, StepOutcome};
use crate::error::{Error, Result};
use crate::matcore::dot;
use crate::policies::PsmaqbPolicy;
use crate::quantum::{
    depolarize, fidelity, relative_entropy, Divergence, ProjectorAction, PureQubit, QubitDensity,
};

/// Jaynes–Cummings battery: a harmonic oscillator with quantum `ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JcConfig {
    /// Oscillator energy quantum `ω > 0`.
    pub omega: f64,
    /// Initial excitation number `n₀`.
    pub initial_level: u64,
}

impl Default for JcConfig {
    fn default() -> Self {
        Self {
            omega: 1.0,
            initial_level: 0,
        }
    }
}

impl JcConfig {
    fn validate(&self) -> Result<()> {
        if self.omega.is_finite() && self.omega > 0.0 {
            Ok(())
        } else {
            Err(Error::contract(format!(
                "ω must be finite and positive, got {}",
                self.omega
            )))
        }
    }
}

/// Interaction angle `θ_n = (π/2)√(n/(n+1))`.
pub fn jc_angle(level: u64) -> f64 {
    let n = level as f64;
    FRAC_PI_2 * (n / (n + 1.0)).sqrt()
}

/// Transition probabilities `(down, stay, up)` of one JC round with success
/// probability `p` at level `n`.
pub fn jc_probabilities(p: f64, level: u64) -> [f64; 3] {
    let s2 = if level == 0 {
        0.0
    } else {
        jc_angle(level).sin().powi(2)
    };
    let down = (1.0 - p) * s2;
    let up = p;
    [down, 1.0 - up - down, up]
}

/// Expected work `ω(p(1 + sin²θ_n) − sin²θ_n)` of one JC round.
pub fn jc_expected_work(omega: f64, p: f64, level: u64) -> f64 {
    let s2 = if level == 0 {
        0.0
    } else {
        jc_angle(level).sin().powi(2)
    };
    omega * (p * (1.0 + s2) - s2)
}

/// Dissipation `ω(1 + sin²θ_n)(1 − p)` of one JC round.
pub fn jc_dissipation(omega: f64, p: f64, level: u64) -> f64 {
    let s2 = if level == 0 {
        0.0
    } else {
        jc_angle(level).sin().powi(2)
    };
    omega * (1.0 + s2) * (1.0 - p)
}

/// Outcome of one JC round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcOutcome {
    /// Level after the round.
    pub next_level: u64,
    /// 1 iff the level went up.
    pub reward: u8,
    /// Extracted work `ω(n_{t+1} − n_t)`.
    pub work: f64,
    /// Expected dissipation of the round.
    pub dissipation: f64,
}

/// One Jaynes–Cummings round with the qubit prepared in `state` and the
/// battery coupled along `direction`.
pub fn jc_round(
    cfg: &JcConfig,
    state: &PureQubit,
    direction: &ProjectorAction,
    level: u64,
    rng: &mut (impl Rng + ?Sized),
) -> Result<JcOutcome> {
    cfg.validate()?;
    let p = fidelity(&state.density(), &QubitDensity::new(direction.bloch())?);
    let [down, _, up] = jc_probabilities(p, level);
    let u: f64 = rng.gen();
    let next_level = if u < up {
        level + 1
    } else if u < up + down {
        level - 1
    } else {
        level
    };
    Ok(JcOutcome {
        next_level,
        reward: u8::from(next_level > level),
        work: cfg.omega * (next_level as f64 - level as f64),
        dissipation: jc_dissipation(cfg.omega, p, level),
    })
}

/// Accuracy schedule of the thermal protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpsilonSchedule {
    /// `ε_t = min{C ln(T/δ)/t, ½}`.
    Adaptive {
        /// Schedule constant `C`.
        c: f64,
        /// Failure probability `δ`.
        delta: f64,
    },
    /// Constant `ε`.
    Constant {
        /// The constant accuracy.
        epsilon: f64,
    },
}

impl EpsilonSchedule {
    /// `ε_t` at round `t ≥ 1` of a horizon `T`.
    pub fn epsilon(&self, t: u64, horizon: u64) -> f64 {
        match *self {
            EpsilonSchedule::Adaptive { c, delta } => {
                (c * (horizon as f64 / delta).ln() / t.max(1) as f64).clamp(f64::MIN_POSITIVE, 0.5)
            }
            EpsilonSchedule::Constant { epsilon } => epsilon,
        }
    }
}

/// Quasi-static thermal battery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalConfig {
    /// Inverse temperature `β > 0`.
    pub beta: f64,
    /// Number of quasi-static steps `M ≥ 1`.
    pub steps: u32,
    /// Accuracy schedule.
    pub schedule: EpsilonSchedule,
}

impl Default for ThermalConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            steps: 100,
            schedule: EpsilonSchedule::Adaptive {
                c: DEFAULT_SCHEDULE_C,
                delta: 0.1,
            },
        }
    }
}

/// Default schedule constant: the infidelity constant `C` of the reference
/// LinUCB-VVN (infidelity ≈ C·ln t/t, measured late in 4·10⁴-round runs).
pub const DEFAULT_SCHEDULE_C: f64 = 0.45;

fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 0.5 {
        Ok(())
    } else {
        Err(Error::contract(format!("ε must lie in (0, ½], got {eps}")))
    }
}

/// Energy gap `ν(τ, ε) = β⁻¹ ln[(1 − τ/2M − (1−τ/M)ε)/(τ/2M + (1−τ/M)ε)]`.
pub fn thermal_gap(tau: u32, steps: u32, eps: f64, beta: f64) -> f64 {
    let s = f64::from(tau) / f64::from(steps);
    let q = s / 2.0 + (1.0 - s) * eps;
    if tau == steps {
        return 0.0;
    }
    ((1.0 - q) / q).ln() / beta
}

/// Limiting branch works `(w₀, w₁) = (β⁻¹(ln2 + ln(1−ε)), β⁻¹(ln2 + ln ε))`.
pub fn thermal_branch_limits(eps: f64, beta: f64) -> (f64, f64) {
    ((LN_2 + (1.0 - eps).ln()) / beta, (LN_2 + eps.ln()) / beta)
}

/// Exact finite-`M` expectation of the work of branch `i`.
pub fn thermal_branch_mean(branch: u8, steps: u32, eps: f64, beta: f64) -> f64 {
    let dp = (0.5 - eps) / f64::from(steps);
    let mut mean = -f64::from(branch) * thermal_gap(1, steps, eps, beta);
    for tau in 1..steps {
        let p = eps + f64::from(tau) * dp;
        mean += p * (thermal_gap(tau, steps, eps, beta) - thermal_gap(tau + 1, steps, eps, beta));
    }
    mean
}

/// Samples the work of branch `i` through the classical bit chain.
pub fn thermal_branch_work(
    branch: u8,
    steps: u32,
    eps: f64,
    beta: f64,
    rng: &mut (impl Rng + ?Sized),
) -> f64 {
    let dp = (0.5 - eps) / f64::from(steps);
    let mut work = -f64::from(branch) * thermal_gap(1, steps, eps, beta);
    let mut prev = thermal_gap(1, steps, eps, beta);
    for tau in 1..steps {
        let next = thermal_gap(tau + 1, steps, eps, beta);
        let p = eps + f64::from(tau) * dp;
        if rng.gen::<f64>() < p {
            work += prev - next;
        }
        prev = next;
    }
    // x_M multiplies ν(M, ε) = 0.
    work
}

/// Outcome of one thermal round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalOutcome {
    /// Sampled branch (0 = aligned with the direction).
    pub branch: u8,
    /// Extracted work.
    pub work: f64,
    /// 1 iff the work exceeds the midpoint of the two branch limits.
    pub reward: u8,
}

/// One thermal extraction round at accuracy `ε`.
pub fn thermal_round(
    cfg: &ThermalConfig,
    state: &PureQubit,
    direction: &ProjectorAction,
    eps: f64,
    rng: &mut (impl Rng + ?Sized),
) -> Result<ThermalOutcome> {
    check_epsilon(eps)?;
    if cfg.steps == 0 || !(cfg.beta > 0.0 && cfg.beta.is_finite()) {
        return Err(Error::contract(
            "thermal battery needs M ≥ 1 and finite β > 0",
        ));
    }
    let f = fidelity(&state.density(), &QubitDensity::new(direction.bloch())?);
    let branch = u8::from(rng.gen::<f64>() >= f);
    let work = thermal_branch_work(branch, cfg.steps, eps, cfg.beta, rng);
    let (w0, w1) = thermal_branch_limits(eps, cfg.beta);
    Ok(ThermalOutcome {
        branch,
        work,
        reward: u8::from(work >= (w0 + w1) / 2.0),
    })
}

/// Expected work and dissipation `(β⁻¹[D(ψ‖I/2) − D(ψ‖Δ_{2ε}ψ̂)], β⁻¹D(ψ‖Δ_{2ε}ψ̂))`.
pub fn expected_work(
    state: &PureQubit,
    direction: &ProjectorAction,
    eps: f64,
    beta: f64,
) -> Result<(Divergence, Divergence)> {
    if !(0.0..=0.5).contains(&eps) {
        return Err(Error::contract(format!("ε must lie in [0, ½], got {eps}")));
    }
    let psi = state.density();
    let target = depolarize(&QubitDensity::new(direction.bloch())?, 2.0 * eps)?;
    let full = relative_entropy(&psi, &QubitDensity::maximally_mixed())
        .finite()
        .expect("I/2 has full support");
    Ok(match relative_entropy(&psi, &target) {
        Divergence::Finite(d) => (
            Divergence::Finite((full - d) / beta),
            Divergence::Finite(d / beta),
        ),
        Divergence::Divergent => (Divergence::Divergent, Divergence::Divergent),
    })
}

/// Extraction protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Protocol {
    /// Jaynes–Cummings battery.
    Jc(JcConfig),
    /// Quasi-static thermal battery.
    Thermal(ThermalConfig),
}

/// Binary entropy in nats.
fn binary_entropy(a: f64) -> f64 {
    let h = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.ln() };
    h(a) + h(1.0 - a)
}

/// Memory-erasure entropy of one round with success probability `p`:
/// `H(α)` (α = 1 − p) for the thermal battery, plus
/// `−α(cos²θ ln cos²θ + sin²θ ln sin²θ)` for the JC battery.
pub fn landauer_entropy(jc: bool, p: f64, theta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::contract(format!(
            "success probability {p} outside [0, 1]"
        )));
    }
    let alpha = 1.0 - p;
    let mut s = binary_entropy(alpha);
    if jc {
        let c2 = theta.cos().powi(2);
        let s2 = theta.sin().powi(2);
        let xl = |x: f64| if x <= 0.0 { 0.0 } else { x * x.ln() };
        s -= alpha * (xl(c2) + xl(s2));
    }
    Ok(s)
}

/// Per-round dissipation, work and memory-entropy bookkeeping.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DissipationLedger {
    /// Per-round dissipation (energy units).
    pub dissipation: Vec<f64>,
    /// Running sum of the dissipation.
    pub cumulative: Vec<f64>,
    /// Per-round extracted work.
    pub work: Vec<f64>,
    /// Per-round memory entropy (nats), when tracked.
    pub landauer_entropy: Vec<f64>,
}

impl DissipationLedger {
    fn push(&mut self, dissipation: f64, work: f64, entropy: Option<f64>) {
        let prev = self.cumulative.last().copied().unwrap_or(0.0);
        self.dissipation.push(dissipation);
        self.cumulative.push(prev + dissipation);
        self.work.push(work);
        if let Some(s) = entropy {
            self.landauer_entropy.push(s);
        }
    }

    /// Total dissipation.
    pub fn total_dissipation(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Total extracted work.
    pub fn total_work(&self) -> f64 {
        self.work.iter().sum()
    }
}

/// Per-round record of an extraction run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionRound {
    /// Direction chosen by the policy.
    pub direction: Vec<f64>,
    /// Reward bit fed back to the policy.
    pub reward: u8,
    /// Infidelity `1 − F(ψ, ψ̂_t)` of the chosen direction.
    pub infidelity: f64,
}

/// Runs an adaptive extraction protocol for `T` rounds: each round the policy
/// picks a direction, the battery extracts work along it, and the reward bit
/// is fed back as the linear feedback `2X − 1`.
pub fn run_extraction(
    protocol: &Protocol,
    state: &PureQubit,
    policy: &mut dyn PsmaqbPolicy,
    rounds: u64,
    track_entropy: bool,
    policy_rng: &mut dyn RngCore,
    battery_rng: &mut dyn RngCore,
) -> Result<(Vec<ExtractionRound>, DissipationLedger)> {
    let mut ledger = DissipationLedger::default();
    let mut trace = Vec::with_capacity(rounds as usize);
    let env = EnvironmentSpec::psmaqb(*state);
    let mut level = match protocol {
        Protocol::Jc(cfg) => {
            cfg.validate()?;
            cfg.initial_level
        }
        Protocol::Thermal(_) => 0,
    };
    for t in 1..=rounds {
        let a = policy.next_action(policy_rng)?;
        let bloch = [a[0], a[1], a[2]];
        let dir = ProjectorAction::new(bloch)?;
        let p = (1.0 + dot(&state.bloch(), &bloch)) / 2.0;
        let p = p.clamp(0.0, 1.0);
        let reward = match protocol {
            Protocol::Jc(cfg) => {
                let theta = jc_angle(level);
                let out = jc_round(cfg, state, &dir, level, battery_rng)?;
                let entropy = track_entropy
                    .then(|| landauer_entropy(true, p, theta))
                    .transpose()?;
                ledger.push(out.dissipation, out.work, entropy);
                level = out.next_level;
                out.reward
            }
            Protocol::Thermal(cfg) => {
                let eps = cfg.schedule.epsilon(t, rounds);
                let out = thermal_round(cfg, state, &dir, eps, battery_rng)?;
                let (_, diss) = expected_work(state, &dir, eps, cfg.beta)?;
                let diss = diss.finite().ok_or_else(|| {
                    Error::Model("divergent dissipation in thermal extraction".into())
                })?;
                let entropy = track_entropy
                    .then(|| landauer_entropy(false, p, 0.0))
                    .transpose()?;
                ledger.push(diss, out.work, entropy.map(|s| s / cfg.beta));
                out.reward
            }
        };
        let outcome = StepOutcome {
            reward: f64::from(reward),
            optimal_mean: 1.0,
            chosen_mean: p,
            instantaneous_regret: 1.0 - p,
        };
        policy.observe(env.linear_feedback(&outcome))?;
        trace.push(ExtractionRound {
            direction: a,
            reward,
            infidelity: 1.0 - p,
        });
    }
    Ok((trace, ledger))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn z() -> PureQubit {
        PureQubit::new([0.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn jc_aligned_direction_extracts_one_quantum() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = JcConfig {
            omega: 2.0,
            initial_level: 0,
        };
        let dir = ProjectorAction::onto(&z());
        let mut level = 3;
        for _ in 0..100 {
            let o = jc_round(&cfg, &z(), &dir, level, &mut rng).unwrap();
            assert_eq!(o.work, 2.0);
            assert_eq!(o.dissipation, 0.0);
            level = o.next_level;
        }
    }

    #[test]
    fn jc_ground_level_never_decreases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dir = ProjectorAction::new([0.0, 0.0, -1.0]).unwrap();
        for _ in 0..1000 {
            assert_eq!(
                jc_round(&JcConfig::default(), &z(), &dir, 0, &mut rng)
                    .unwrap()
                    .next_level,
                0
            );
        }
    }

    #[test]
    fn jc_probabilities_example() {
        let [down, stay, up] = jc_probabilities(0.0, 3);
        let expect = (std::f64::consts::PI * 3f64.sqrt() / 4.0).sin().powi(2);
        assert_abs_diff_eq!(down, expect, epsilon = 1e-15);
        assert_abs_diff_eq!(down, 0.95636, epsilon = 1e-5);
        assert_abs_diff_eq!(stay, 0.04364, epsilon = 1e-5);
        assert_abs_diff_eq!(down + stay + up, 1.0, epsilon = 1e-15);
        assert_eq!(up, 0.0);
    }

    #[test]
    fn thermal_gap_edges() {
        assert_eq!(thermal_gap(7, 7, 0.1, 1.0), 0.0);
        for tau in 1..=10 {
            assert_abs_diff_eq!(thermal_gap(tau, 10, 0.5, 1.0), 0.0, epsilon = 1e-15);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = ThermalConfig {
            beta: 1.0,
            steps: 10,
            schedule: EpsilonSchedule::Constant { epsilon: 0.5 },
        };
        let o = thermal_round(&cfg, &z(), &ProjectorAction::onto(&z()), 0.5, &mut rng).unwrap();
        assert_eq!(o.work, 0.0);
        assert_eq!(thermal_branch_limits(0.5, 1.0), (0.0, 0.0));
        assert!(thermal_round(&cfg, &z(), &ProjectorAction::onto(&z()), 0.6, &mut rng).is_err());
    }

    #[test]
    fn thermal_branch_mean_converges() {
        let (w0, w1) = thermal_branch_limits(0.1, 1.0);
        assert_abs_diff_eq!(w0, LN_2 + 0.9f64.ln(), epsilon = 1e-15);
        let mut prev = f64::INFINITY;
        for m in [10, 100, 1000, 10000] {
            let e0 = (thermal_branch_mean(0, m, 0.1, 1.0) - w0).abs();
            let e1 = (thermal_branch_mean(1, m, 0.1, 1.0) - w1).abs();
            assert!(e0 < prev && e0 <= 10.0 / f64::from(m) && e1 <= 10.0 / f64::from(m));
            prev = e0;
        }
    }

    #[test]
    fn thermal_branch_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (m, n) = (1000, 20_000);
        let samples: Vec<f64> = (0..n)
            .map(|_| thermal_branch_work(0, m, 0.1, 1.0, &mut rng))
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - (LN_2 + 0.9f64.ln())).abs() <= 3.0 * se + 10.0 / f64::from(m));
    }

    fn anti_density() -> QubitDensity {
        QubitDensity::new([0.0, 0.0, -1.0]).unwrap()
    }

    #[test]
    fn expected_work_examples() {
        let psi = z();
        let aligned = ProjectorAction::onto(&psi);
        let (w, _) = expected_work(&psi, &aligned, 0.5, 1.0).unwrap();
        assert_abs_diff_eq!(w.finite().unwrap(), 0.0, epsilon = 1e-15);
        let (_, d3) = expected_work(&psi, &aligned, 1e-3, 1.0).unwrap();
        let (_, d4) = expected_work(&psi, &aligned, 1e-4, 1.0).unwrap();
        assert!(d4.finite().unwrap() < d3.finite().unwrap());
        let (w4, _) = expected_work(&psi, &aligned, 1e-4, 1.0).unwrap();
        assert!((w4.finite().unwrap() - LN_2).abs() < 1e-3);
        let anti = ProjectorAction::new([0.0, 0.0, -1.0]).unwrap();
        let (_, d) = expected_work(&psi, &anti, 0.1, 1.0).unwrap();
        // Δ_{2ε}(ψ̂) has Bloch vector −0.8·n, so ψ sees eigenvalue 0.1.
        assert_abs_diff_eq!(d.finite().unwrap(), -(0.1f64.ln()), epsilon = 1e-12);
        // The once-depolarised state 0.9ψ̂ + 0.1·I/2 gives −ln 0.05 instead.
        let once = depolarize(&anti_density(), 0.1).unwrap();
        assert_abs_diff_eq!(
            relative_entropy(&psi.density(), &once).finite().unwrap(),
            -(0.05f64.ln()),
            epsilon = 1e-12
        );
        assert_eq!(
            expected_work(&psi, &anti, 0.0, 1.0).unwrap().1,
            Divergence::Divergent
        );
    }

    #[test]
    fn landauer_examples() {
        assert_eq!(landauer_entropy(false, 1.0, 0.3).unwrap(), 0.0);
        assert_abs_diff_eq!(
            landauer_entropy(false, 0.5, 0.0).unwrap(),
            LN_2,
            epsilon = 1e-15
        );
        let base = landauer_entropy(false, 0.9, 0.0).unwrap();
        let jc = landauer_entropy(true, 0.9, std::f64::consts::FRAC_PI_4).unwrap();
        assert_abs_diff_eq!(jc - base, 0.1 * LN_2, epsilon = 1e-14);
        assert!(jc <= 2.0 * 0.1 - 0.1 * 0.1f64.ln());
    }

    #[test]
    fn oracle_jc_extraction_has_no_dissipation() {
        let psi = PureQubit::new([0.6, 0.0, 0.8]).unwrap();
        let mut policy = crate::policies::FixedAction::new(psi.bloch().to_vec()).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(4);
        let mut r2 = ChaCha8Rng::seed_from_u64(5);
        let (_, ledger) = run_extraction(
            &Protocol::Jc(JcConfig::default()),
            &psi,
            &mut policy,
            200,
            true,
            &mut r1,
            &mut r2,
        )
        .unwrap();
        assert_eq!(ledger.total_dissipation(), 0.0);
        assert_abs_diff_eq!(ledger.total_work(), 200.0, epsilon = 1e-12);
    }
}
