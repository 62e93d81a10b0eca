//! Quantum contextual bandit recommender.
//!
//! Each round a Hamiltonian (the context) arrives as Pauli-term coefficients;
//! the agent recommends one of several prepared states (arms) and observes
//! the negative energy, estimated by measuring every Pauli term once. Arms
//! are represented by their per-family expectation values, so arbitrarily
//! many qubits are cheap to simulate. Contexts are reduced to an orthonormal
//! basis of their span by Gram–Schmidt before a per-arm LinUCB (CLinUCB)
//! picks the arm.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::LseAccumulator;
use crate::matcore::{axpy, dot, norm};

/// Pauli-term families on a periodic chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TermFamily {
    /// `σ_z,i`.
    Z,
    /// `σ_x,i`.
    X,
    /// `σ_z,i σ_z,i+1`.
    ZZ,
    /// `σ_x,i σ_x,i+1`.
    XX,
    /// `σ_x,i−1 σ_z,i σ_x,i+1`.
    XZX,
}

impl TermFamily {
    /// All families, in the fixed order of the full coefficient space.
    pub const ALL: [TermFamily; 5] = [
        TermFamily::Z,
        TermFamily::X,
        TermFamily::ZZ,
        TermFamily::XX,
        TermFamily::XZX,
    ];

    /// Display name.
    pub fn name(self) -> &'static str {
        match self {
            TermFamily::Z => "Z",
            TermFamily::X => "X",
            TermFamily::ZZ => "ZZ",
            TermFamily::XX => "XX",
            TermFamily::XZX => "XZX",
        }
    }
}

/// Which Hamiltonian family generated a context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// `H = Σ(ZZ + hX)`.
    Ising,
    /// `H = Σ(Z − j₁XX − j₂XZX)`.
    Cluster,
}

/// A Hamiltonian context: one coefficient per Pauli-term family, each family
/// summed over all `n` sites of a periodic chain. Rewards are negative
/// energies.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextVector {
    /// Generating model.
    pub model: ModelKind,
    /// Term families, distinct.
    pub families: Vec<TermFamily>,
    /// One coefficient per family.
    pub coefficients: Vec<f64>,
    /// Number of qubits.
    pub n_qubits: usize,
    /// The model parameters (`(h, 0)` or `(j₁, j₂)`).
    pub params: [f64; 2],
}

/// Ising context `H = Σ_i (Z_iZ_{i+1} + h X_i)`.
pub fn ising_context(h: f64, n: usize) -> Result<ContextVector> {
    if n < 2 || !h.is_finite() {
        return Err(Error::contract("Ising context needs n ≥ 2 and finite h"));
    }
    Ok(ContextVector {
        model: ModelKind::Ising,
        families: vec![TermFamily::ZZ, TermFamily::X],
        coefficients: vec![1.0, h],
        n_qubits: n,
        params: [h, 0.0],
    })
}

/// Generalised cluster context `H = Σ_i (Z_i − j₁X_iX_{i+1} − j₂X_{i−1}Z_iX_{i+1})`.
pub fn cluster_context(j1: f64, j2: f64, n: usize) -> Result<ContextVector> {
    if n < 3 || !j1.is_finite() || !j2.is_finite() {
        return Err(Error::contract(
            "cluster context needs n ≥ 3 and finite couplings",
        ));
    }
    Ok(ContextVector {
        model: ModelKind::Cluster,
        families: vec![TermFamily::Z, TermFamily::XX, TermFamily::XZX],
        coefficients: vec![1.0, -j1, -j2],
        n_qubits: n,
        params: [j1, j2],
    })
}

impl ContextVector {
    /// Coefficient of `family` (zero if absent).
    pub fn coefficient(&self, family: TermFamily) -> f64 {
        self.families
            .iter()
            .position(|&f| f == family)
            .map_or(0.0, |i| self.coefficients[i])
    }

    /// Families with a nonzero coefficient.
    pub fn active_families(&self) -> Vec<TermFamily> {
        self.families
            .iter()
            .zip(&self.coefficients)
            .filter(|(_, c)| **c != 0.0)
            .map(|(f, _)| *f)
            .collect()
    }

    /// The context in the full per-site coefficient space: for every family
    /// of [`TermFamily::ALL`] and every site, the coefficient of that term.
    pub fn full_vector(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(TermFamily::ALL.len() * self.n_qubits);
        for f in TermFamily::ALL {
            let c = self.coefficient(f);
            out.extend(std::iter::repeat(c).take(self.n_qubits));
        }
        out
    }
}

/// An arm: the expectation value of each Pauli-term family (the same on
/// every site of a translation-invariant state).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionProfile {
    /// Profile name.
    pub name: String,
    /// `(family, expectation)` pairs; families not listed have expectation 0.
    pub expectations: Vec<(TermFamily, f64)>,
}

impl ActionProfile {
    /// Builds a profile, checking expectations lie in `[−1, 1]` and families
    /// are distinct. Families absent from the list have expectation 0.
    pub fn new(name: &str, expectations: Vec<(TermFamily, f64)>) -> Result<Self> {
        for (i, (f, e)) in expectations.iter().enumerate() {
            if !(-1.0..=1.0).contains(e) {
                return Err(Error::contract(format!(
                    "expectation of {} must lie in [−1, 1], got {e}",
                    f.name()
                )));
            }
            if expectations[..i].iter().any(|(g, _)| g == f) {
                return Err(Error::contract(format!("family {} listed twice", f.name())));
            }
        }
        Ok(Self {
            name: name.to_string(),
            expectations,
        })
    }

    /// Expectation of `family`.
    pub fn expectation(&self, family: TermFamily) -> f64 {
        self.expectations
            .iter()
            .find(|(f, _)| *f == family)
            .map_or(0.0, |(_, e)| *e)
    }

    /// `E[reward] = −n Σ_f coeff_f·⟨f⟩`.
    pub fn expected_reward(&self, ctx: &ContextVector) -> f64 {
        -(ctx.n_qubits as f64)
            * ctx
                .families
                .iter()
                .zip(&ctx.coefficients)
                .map(|(f, c)| c * self.expectation(*f))
                .sum::<f64>()
    }

    /// The profile as a parameter vector in the full coefficient space, so
    /// that `E[reward] = ⟨θ, full_vector(ctx)⟩`.
    pub fn full_parameter(&self, n_qubits: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(TermFamily::ALL.len() * n_qubits);
        for f in TermFamily::ALL {
            out.extend(std::iter::repeat(-self.expectation(f)).take(n_qubits));
        }
        out
    }
}

/// Named default profiles.
pub fn named_profile(name: &str) -> Result<ActionProfile> {
    use TermFamily::*;
    let e = match name {
        // |0…0⟩.
        "zero" => vec![(ZZ, 1.0), (Z, 1.0)],
        // Néel order, the h = 0 Ising ground state.
        "neel" => vec![(ZZ, -1.0)],
        // |−⟩^⊗n and |+⟩^⊗n.
        "minus" => vec![(X, -1.0)],
        "plus" => vec![(X, 1.0)],
        // Cluster-model limits.
        "z_down" => vec![(Z, -1.0)],
        "xx_plus" => vec![(XX, 1.0)],
        "xx_minus" => vec![(XX, -1.0)],
        "xzx_plus" => vec![(XZX, 1.0)],
        "xzx_minus" => vec![(XZX, -1.0)],
        other => return Err(Error::config(format!("unknown action profile `{other}`"))),
    };
    ActionProfile::new(name, e)
}

/// Default arms of a model: the limiting ground states of each phase.
pub fn default_profiles(model: ModelKind) -> Vec<ActionProfile> {
    let names: &[&str] = match model {
        ModelKind::Ising => &["neel", "minus", "plus"],
        ModelKind::Cluster => &["z_down", "xx_plus", "xx_minus", "xzx_plus", "xzx_minus"],
    };
    names
        .iter()
        .map(|n| named_profile(n).expect("built-in profile"))
        .collect()
}

/// Samples the reward: every term on every site is measured once, giving
/// independent ±1 outcomes with the profile's mean; the reward is
/// `−Σ coeff·outcome`.
pub fn qcb_reward(
    profile: &ActionProfile,
    ctx: &ContextVector,
    rng: &mut (impl Rng + ?Sized),
) -> Result<f64> {
    if ctx.n_qubits == 0 {
        return Err(Error::contract("context has no qubits"));
    }
    let mut reward = 0.0;
    for (f, c) in ctx.families.iter().zip(&ctx.coefficients) {
        if *c == 0.0 {
            continue;
        }
        let p_up = (1.0 + profile.expectation(*f)) / 2.0;
        let ups = (0..ctx.n_qubits)
            .filter(|_| rng.gen::<f64>() < p_up)
            .count() as f64;
        let sum = 2.0 * ups - ctx.n_qubits as f64;
        reward -= c * sum;
    }
    Ok(reward)
}

/// Orthonormal basis of the span of all contexts seen so far.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GramBasis {
    basis: Vec<Vec<f64>>,
}

/// Relative residual below which a context is considered in the span.
pub const GRAM_TOLERANCE: f64 = 1e-8;

impl GramBasis {
    /// Empty basis.
    pub fn new() -> Self {
        Self::default()
    }

    /// Effective dimension.
    pub fn d_eff(&self) -> usize {
        self.basis.len()
    }

    /// Basis vectors.
    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Projects `c` onto the basis, growing it by the normalised residual when
    /// that residual exceeds `10⁻⁸‖c‖`. Returns the coordinates (length
    /// `d_eff` after ingestion) and whether the basis grew.
    pub fn ingest(&mut self, c: &[f64]) -> (Vec<f64>, bool) {
        let cn = norm(c);
        // Two passes of classical Gram–Schmidt for numerical orthogonality.
        let mut coords = vec![0.0; self.basis.len()];
        let mut resid = c.to_vec();
        for _ in 0..2 {
            for (k, b) in self.basis.iter().enumerate() {
                let p = dot(b, &resid);
                coords[k] += p;
                axpy(&mut resid, -p, b);
            }
        }
        let rn = norm(&resid);
        if cn > 0.0 && rn > GRAM_TOLERANCE * cn {
            self.basis.push(resid.iter().map(|x| x / rn).collect());
            coords.push(rn);
            (coords, true)
        } else {
            (coords, false)
        }
    }

    /// Coordinates of `c` in the current basis without growing it.
    pub fn project(&self, c: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|b| dot(b, c)).collect()
    }
}

/// CLinUCB index `θ̂_a·c′ + α‖c′‖_{V_a⁻¹}` of one arm.
pub fn clinucb_index(acc: &LseAccumulator, c: &[f64], alpha: f64) -> Result<f64> {
    Ok(dot(&acc.estimate()?, c) + alpha * acc.design().inv_norm(c))
}

/// The arm with the highest CLinUCB index, lowest index on ties.
pub fn clinucb_step(per_arm: &[LseAccumulator], c: &[f64], alpha: f64) -> Result<usize> {
    if per_arm.is_empty() {
        return Err(Error::contract("CLinUCB needs at least one arm"));
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (i, acc) in per_arm.iter().enumerate() {
        let v = clinucb_index(acc, c, alpha)?;
        if v > best.1 {
            best = (i, v);
        }
    }
    Ok(best.0)
}

/// `α_t = m + √(2 ln(1/δ) + d ln(1 + tL²/d))`.
pub fn clinucb_alpha(t: u64, delta: f64, d: usize, l: f64, m: f64) -> f64 {
    let d = d.max(1) as f64;
    m + (2.0 * (1.0 / delta).ln() + d * (1.0 + t as f64 * l * l / d).ln()).sqrt()
}

/// One round of a QCB run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QcbRound {
    /// Context parameters (`(h, 0)` or `(j₁, j₂)`).
    pub params: [f64; 2],
    /// Recommended arm.
    pub arm: usize,
    /// Best arm for this context.
    pub best_arm: usize,
    /// Observed reward.
    pub reward: f64,
    /// Expected-reward gap to the best arm.
    pub linear_regret: f64,
    /// Effective dimension after ingesting this context.
    pub d_eff: usize,
}

impl QcbRound {
    /// True when the recommended arm was not the best one.
    pub fn misclassified(&self) -> bool {
        self.arm != self.best_arm
    }
}

/// A QCB run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QcbTrace {
    /// Per-round records.
    pub rounds: Vec<QcbRound>,
}

/// Number of rounds whose recommendation was not the best arm.
pub fn classifier_regret(trace: &QcbTrace) -> u64 {
    trace.rounds.iter().filter(|r| r.misclassified()).count() as u64
}

/// One row of a phase map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMapRow {
    /// First context parameter.
    pub param1: f64,
    /// Second context parameter.
    pub param2: f64,
    /// Recommended arm.
    pub arm: usize,
}

/// Rows `(param1, param2, arm)` for rounds `t > burn_in` (rounds are 1-based).
pub fn phase_map_export(trace: &QcbTrace, burn_in: usize) -> Result<Vec<PhaseMapRow>> {
    if burn_in >= trace.rounds.len() {
        return Err(Error::contract(format!(
            "burn-in {burn_in} must be below the run length {}",
            trace.rounds.len()
        )));
    }
    Ok(trace.rounds[burn_in..]
        .iter()
        .map(|r| PhaseMapRow {
            param1: r.params[0],
            param2: r.params[1],
            arm: r.arm,
        })
        .collect())
}

/// Writes a phase map as CSV with header `param1,param2,arm`.
pub fn write_phase_map<W: Write>(rows: &[PhaseMapRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// QCB run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QcbConfig {
    /// Hamiltonian family.
    pub model: ModelKind,
    /// Number of qubits.
    #[serde(default = "default_qubits")]
    pub n_qubits: usize,
    /// Uniform range of the first parameter (`h` or `j₁`).
    #[serde(default = "default_range")]
    pub range1: [f64; 2],
    /// Uniform range of `j₂` (cluster only).
    #[serde(default = "default_range")]
    pub range2: [f64; 2],
    /// Arm profile names; the model's defaults when empty.
    #[serde(default)]
    pub arms: Vec<String>,
    /// Failure probability inside `α_t`.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Offset `m` of `α_t`.
    #[serde(default = "default_m")]
    pub m: f64,
    /// Fixed `α`, overriding the `α_t` formula.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Burn-in for the phase map.
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

fn default_qubits() -> usize {
    10
}
fn default_range() -> [f64; 2] {
    [-2.0, 2.0]
}
fn default_delta() -> f64 {
    0.1
}
fn default_m() -> f64 {
    1.0
}
fn default_burn_in() -> usize {
    200
}

impl QcbConfig {
    /// Defaults for a model.
    pub fn new(model: ModelKind) -> Self {
        Self {
            model,
            n_qubits: default_qubits(),
            range1: default_range(),
            range2: default_range(),
            arms: Vec::new(),
            delta: default_delta(),
            m: default_m(),
            alpha: None,
            burn_in: default_burn_in(),
        }
    }

    /// Resolved arm profiles.
    pub fn profiles(&self) -> Result<Vec<ActionProfile>> {
        if self.arms.is_empty() {
            Ok(default_profiles(self.model))
        } else {
            self.arms.iter().map(|n| named_profile(n)).collect()
        }
    }

    /// Validates ranges and parameters.
    pub fn validate(&self) -> Result<()> {
        let min_n = if self.model == ModelKind::Ising { 2 } else { 3 };
        if self.n_qubits < min_n {
            return Err(Error::config(format!(
                "model needs at least {min_n} qubits"
            )));
        }
        for r in [self.range1, self.range2] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
                return Err(Error::config("parameter ranges must be finite and ordered"));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config("QCB δ must lie in (0, 1)"));
        }
        self.profiles()?;
        Ok(())
    }

    /// Samples a context.
    pub fn sample_context(&self, rng: &mut (impl Rng + ?Sized)) -> Result<ContextVector> {
        match self.model {
            ModelKind::Ising => ising_context(uniform(self.range1, rng), self.n_qubits),
            ModelKind::Cluster => {
                let j1 = uniform(self.range1, rng);
                let j2 = uniform(self.range2, rng);
                cluster_context(j1, j2, self.n_qubits)
            }
        }
    }
}

fn uniform(r: [f64; 2], rng: &mut (impl Rng + ?Sized)) -> f64 {
    r[0] + (r[1] - r[0]) * rng.gen::<f64>()
}

/// Runs CLinUCB with Gram–Schmidt for `rounds` rounds. Contexts are drawn
/// from `context_rng`, measurement outcomes from `env_rng`.
pub fn run_qcb(
    cfg: &QcbConfig,
    rounds: u64,
    context_rng: &mut (impl Rng + ?Sized),
    env_rng: &mut (impl Rng + ?Sized),
) -> Result<QcbTrace> {
    cfg.validate()?;
    let profiles = cfg.profiles()?;
    let mut basis = GramBasis::new();
    let mut arms: Vec<LseAccumulator> = Vec::new();
    let mut trace = QcbTrace {
        rounds: Vec::with_capacity(rounds as usize),
    };
    let mut max_norm: f64 = 0.0;
    for t in 0..rounds {
        let ctx = cfg.sample_context(context_rng)?;
        let full = ctx.full_vector();
        max_norm = max_norm.max(norm(&full));
        let (coords, grew) = basis.ingest(&full);
        if arms.is_empty() {
            arms = (0..profiles.len())
                .map(|_| LseAccumulator::new(basis.d_eff().max(1), 1.0))
                .collect::<Result<_>>()?;
            if basis.d_eff() == 0 {
                // Zero context: nothing to learn from, but keep a 1-d model.
                continue;
            }
        } else if grew {
            for acc in &mut arms {
                acc.grow()?;
            }
        }
        let c: Vec<f64> = if coords.is_empty() { vec![0.0] } else { coords };
        let alpha = cfg
            .alpha
            .unwrap_or_else(|| clinucb_alpha(t, cfg.delta, basis.d_eff(), max_norm, cfg.m));
        let arm = clinucb_step(&arms, &c, alpha)?;
        let reward = qcb_reward(&profiles[arm], &ctx, env_rng)?;
        arms[arm].update(&c, reward, 1.0)?;
        let means: Vec<f64> = profiles.iter().map(|p| p.expected_reward(&ctx)).collect();
        let best_arm = means
            .iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |b, (i, &m)| if m > b.1 { (i, m) } else { b },
            )
            .0;
        trace.rounds.push(QcbRound {
            params: ctx.params,
            arm,
            best_arm,
            reward,
            linear_regret: means[best_arm] - means[arm],
            d_eff: basis.d_eff(),
        });
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ising_context_examples() {
        assert_eq!(
            ising_context(0.0, 10).unwrap().active_families(),
            vec![TermFamily::ZZ]
        );
        assert_eq!(ising_context(2.0, 10).unwrap().coefficients, vec![1.0, 2.0]);
        assert!(ising_context(1.0, 1).is_err());
    }

    #[test]
    fn cluster_context_examples() {
        assert_eq!(
            cluster_context(0.0, 0.0, 5).unwrap().active_families(),
            vec![TermFamily::Z]
        );
        assert_eq!(
            cluster_context(1.0, 0.0, 5).unwrap().coefficients,
            vec![1.0, -1.0, 0.0]
        );
    }

    #[test]
    fn reward_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ctx = ising_context(0.0, 10).unwrap();
        for _ in 0..20 {
            assert_eq!(
                qcb_reward(&named_profile("zero").unwrap(), &ctx, &mut rng).unwrap(),
                -10.0
            );
        }
        let minus = named_profile("minus").unwrap();
        let ctx = ising_context(2.0, 10).unwrap();
        assert_abs_diff_eq!(minus.expected_reward(&ctx), 20.0);
        let n = 20_000;
        let mean = (0..n)
            .map(|_| qcb_reward(&minus, &ctx, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        // Variance ≤ Σ coeff²·n = 10 (ZZ outcomes ±1 uniformly); X outcomes are deterministic.
        assert!((mean - 20.0).abs() < 4.0 * (10.0f64 / n as f64).sqrt());
    }

    #[test]
    fn reward_matches_full_space_inner_product() {
        let ctx = cluster_context(0.7, -1.3, 6).unwrap();
        for p in default_profiles(ModelKind::Cluster) {
            assert_abs_diff_eq!(
                p.expected_reward(&ctx),
                dot(&p.full_parameter(6), &ctx.full_vector()),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn gram_examples() {
        let mut g = GramBasis::new();
        let c = [3.0, 4.0, 0.0];
        assert_eq!(g.ingest(&c), (vec![5.0], true));
        let (coords, grew) = g.ingest(&c);
        assert!(!grew);
        assert_abs_diff_eq!(coords[0], 5.0, epsilon = 1e-12);
        let mut g = GramBasis::new();
        g.ingest(&[2.0, 0.0]);
        let (coords, _) = g.ingest(&[0.0, 3.0]);
        assert_eq!(g.d_eff(), 2);
        assert_abs_diff_eq!(coords[0], 0.0);
        assert_abs_diff_eq!(coords[1], 3.0);
    }

    #[test]
    fn ising_contexts_span_two_dimensions() {
        let mut g = GramBasis::new();
        for h in [0.0, 1.0, 2.0, -0.5, 1.7] {
            g.ingest(&ising_context(h, 10).unwrap().full_vector());
        }
        assert_eq!(g.d_eff(), 2);
        let mut g = GramBasis::new();
        for (a, b) in [(0.0, 0.0), (1.0, 0.0), (0.3, -1.2), (2.0, 2.0)] {
            g.ingest(&cluster_context(a, b, 10).unwrap().full_vector());
        }
        assert_eq!(g.d_eff(), 3);
    }

    #[test]
    fn clinucb_examples() {
        let mut a1 = LseAccumulator::new(2, 1.0).unwrap();
        let a2 = LseAccumulator::new(2, 1.0).unwrap();
        assert_eq!(
            clinucb_step(std::slice::from_ref(&a1), &[1.0, 0.0], 1.0).unwrap(),
            0
        );
        // V₁ = 100·I, V₂ = I, equal θ̂·c = 0.
        a1.update(&[1.0, 0.0], 0.0, 99.0).unwrap();
        a1.update(&[0.0, 1.0], 0.0, 99.0).unwrap();
        assert_eq!(
            clinucb_step(&[a1.clone(), a2.clone()], &[0.6, 0.8], 1.0).unwrap(),
            1
        );
        let mut b = LseAccumulator::new(2, 1.0).unwrap();
        b.update(&[1.0, 0.0], 4.0, 1.0).unwrap();
        assert_eq!(clinucb_step(&[b, a2], &[1.0, 0.0], 0.0).unwrap(), 0);
    }

    fn round(arm: usize, best: usize) -> QcbRound {
        QcbRound {
            params: [0.0, 0.0],
            arm,
            best_arm: best,
            reward: 0.0,
            linear_regret: 0.0,
            d_eff: 2,
        }
    }

    #[test]
    fn classifier_regret_examples() {
        let ok = QcbTrace {
            rounds: vec![round(1, 1); 5],
        };
        assert_eq!(classifier_regret(&ok), 0);
        let bad = QcbTrace {
            rounds: vec![round(0, 1); 7],
        };
        assert_eq!(classifier_regret(&bad), 7);
        let mixed = QcbTrace {
            rounds: vec![
                round(0, 0),
                round(1, 0),
                round(2, 2),
                round(2, 1),
                round(0, 2),
            ],
        };
        assert_eq!(classifier_regret(&mixed), 3);
    }

    #[test]
    fn phase_map_rows_and_csv() {
        let trace = QcbTrace {
            rounds: vec![round(0, 0), round(1, 1), round(2, 2)],
        };
        assert_eq!(phase_map_export(&trace, 2).unwrap().len(), 1);
        assert_eq!(phase_map_export(&trace, 0).unwrap().len(), 3);
        assert!(phase_map_export(&trace, 3).is_err());
        let mut buf = Vec::new();
        write_phase_map(&phase_map_export(&trace, 2).unwrap(), &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "param1,param2,arm\n0.0,0.0,2\n"
        );
    }

    #[test]
    fn ising_default_arms_switch_at_unit_field() {
        let arms = default_profiles(ModelKind::Ising);
        let best = |h: f64| {
            let ctx = ising_context(h, 10).unwrap();
            let m: Vec<f64> = arms.iter().map(|a| a.expected_reward(&ctx)).collect();
            (0..3).fold(0, |b, i| if m[i] > m[b] { i } else { b })
        };
        assert_eq!(best(-1.5), 2);
        assert_eq!(best(-0.9), 0);
        assert_eq!(best(0.9), 0);
        assert_eq!(best(1.1), 1);
    }
}
