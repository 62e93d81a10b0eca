//! Qubit states, rank-one measurements, Born-rule sampling, fidelity and
//! relative entropy.
//!
//! Everything is expressed in Bloch coordinates: a qubit density operator is
//! `ρ = (I + r·σ)/2` with `‖r‖ ≤ 1`, and a rank-one projector is the pure state
//! with unit Bloch vector `a`. All the quantities the simulators need have
//! closed Bloch forms, so no complex arithmetic appears anywhere.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matcore::{dot, norm};

/// Tolerance on the unit norm of pure-state Bloch vectors.
pub const UNIT_TOLERANCE: f64 = 1e-10;

/// Density eigenvalues in `[-EIG_CLAMP, 0)` are treated as exact zeros.
pub const EIG_CLAMP: f64 = 1e-12;

/// A 3-component Bloch vector.
pub type Bloch = [f64; 3];

fn check_unit(b: &Bloch, what: &str) -> Result<()> {
    if b.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("Bloch vector"));
    }
    let n = norm(b);
    if (n - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::contract(format!(
            "{what} must have a unit Bloch vector, norm is {n}"
        )));
    }
    Ok(())
}

/// Normalises a 3-vector into a Bloch array, failing on the zero vector.
pub fn unit_bloch(v: &[f64]) -> Result<Bloch> {
    if v.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: v.len(),
        });
    }
    let n = norm(v);
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::contract(
            "cannot normalise a zero or non-finite vector",
        ));
    }
    Ok([v[0] / n, v[1] / n, v[2] / n])
}

/// Uniformly random point on the unit sphere `S^{d-1}`.
pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    use rand_distr::StandardNormal;
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        if let Some(u) = crate::matcore::normalized(&v) {
            return u;
        }
    }
}

/// A pure qubit state `|ψ⟩⟨ψ|`, stored as its unit Bloch vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureQubit {
    bloch: Bloch,
}

impl PureQubit {
    /// Builds a pure state, checking `‖bloch‖ = 1 ± 1e-10`.
    pub fn new(bloch: Bloch) -> Result<Self> {
        check_unit(&bloch, "pure state")?;
        Ok(Self { bloch })
    }

    /// Haar-random pure state.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let v = random_unit_vector(3, rng);
        Self {
            bloch: [v[0], v[1], v[2]],
        }
    }

    /// Bloch vector.
    pub fn bloch(&self) -> Bloch {
        self.bloch
    }

    /// The state viewed as a (pure) density operator.
    pub fn density(&self) -> QubitDensity {
        QubitDensity { bloch: self.bloch }
    }
}

/// A rank-one projective measurement direction `Π_a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectorAction {
    bloch: Bloch,
}

impl ProjectorAction {
    /// Builds a projector, checking that the Bloch vector is a unit vector.
    pub fn new(bloch: Bloch) -> Result<Self> {
        check_unit(&bloch, "projector")?;
        Ok(Self { bloch })
    }

    /// Projector onto the given pure state.
    pub fn onto(state: &PureQubit) -> Self {
        Self { bloch: state.bloch }
    }

    /// Bloch vector.
    pub fn bloch(&self) -> Bloch {
        self.bloch
    }
}

/// A general (possibly mixed) qubit density operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitDensity {
    bloch: Bloch,
}

impl QubitDensity {
    /// Builds a density operator, checking `‖bloch‖ ≤ 1 + 1e-10`.
    pub fn new(bloch: Bloch) -> Result<Self> {
        if bloch.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("Bloch vector"));
        }
        let n = norm(&bloch);
        if n > 1.0 + UNIT_TOLERANCE {
            return Err(Error::contract(format!(
                "density Bloch vector has norm {n} > 1"
            )));
        }
        Ok(Self { bloch })
    }

    /// The maximally mixed state `I/2`.
    pub fn maximally_mixed() -> Self {
        Self { bloch: [0.0; 3] }
    }

    /// Bloch vector.
    pub fn bloch(&self) -> Bloch {
        self.bloch
    }

    /// Bloch radius `‖r‖`.
    pub fn radius(&self) -> f64 {
        norm(&self.bloch).min(1.0)
    }

    /// Eigenvalues `(1 − ‖r‖)/2 ≤ (1 + ‖r‖)/2`.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let r = self.radius();
        [(1.0 - r) / 2.0, (1.0 + r) / 2.0]
    }
}

impl From<PureQubit> for QubitDensity {
    fn from(p: PureQubit) -> Self {
        p.density()
    }
}

/// Probability `Tr(ψ Π_a) = (1 + ⟨r, a⟩)/2` of the outcome 1.
pub fn born_probability(state: &PureQubit, action: &ProjectorAction) -> f64 {
    ((1.0 + dot(&state.bloch, &action.bloch)) / 2.0).clamp(0.0, 1.0)
}

/// Samples the binary reward of measuring `state` with the projector `action`.
pub fn born_sample<R: Rng + ?Sized>(
    state: &PureQubit,
    action: &ProjectorAction,
    rng: &mut R,
) -> u8 {
    u8::from(rng.gen::<f64>() < born_probability(state, action))
}

/// One spectral projector of a qubit observable, written `Π = (w·I + n·σ)/2`.
///
/// A rank-one projector has `w = 1, ‖n‖ = 1`; the identity has `w = 2, n = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralProjector {
    /// Trace of the projector (its rank).
    pub weight: f64,
    /// Traceless Bloch part.
    pub bloch: Bloch,
}

/// A qubit observable `O = Σ λ_i Π_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteObservable {
    eigenvalues: Vec<f64>,
    projectors: Vec<SpectralProjector>,
}

impl DiscreteObservable {
    /// Builds an observable from eigenvalue/projector pairs, checking that the
    /// eigenvalues are distinct and that the projectors resolve the identity.
    pub fn new(eigenvalues: Vec<f64>, projectors: Vec<SpectralProjector>) -> Result<Self> {
        if eigenvalues.is_empty() || eigenvalues.len() != projectors.len() {
            return Err(Error::contract(
                "observable needs one projector per eigenvalue",
            ));
        }
        for (i, a) in eigenvalues.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::NonFinite("observable eigenvalue"));
            }
            if eigenvalues[..i].contains(a) {
                return Err(Error::contract("observable eigenvalues must be distinct"));
            }
        }
        let w: f64 = projectors.iter().map(|p| p.weight).sum();
        let b: [f64; 3] = std::array::from_fn(|k| projectors.iter().map(|p| p.bloch[k]).sum());
        if (w - 2.0).abs() > 1e-10 || norm(&b) > 1e-10 {
            return Err(Error::contract(
                "spectral projectors do not resolve the identity",
            ));
        }
        Ok(Self {
            eigenvalues,
            projectors,
        })
    }

    /// Two-outcome observable `λ₊ Π_n + λ₋ Π_{−n}` along unit direction `n`.
    pub fn along(direction: Bloch, plus: f64, minus: f64) -> Result<Self> {
        check_unit(&direction, "observable axis")?;
        let neg = [-direction[0], -direction[1], -direction[2]];
        Self::new(
            vec![plus, minus],
            vec![
                SpectralProjector {
                    weight: 1.0,
                    bloch: direction,
                },
                SpectralProjector {
                    weight: 1.0,
                    bloch: neg,
                },
            ],
        )
    }

    /// Pauli observable `σ_axis` (axis 0 = x, 1 = y, 2 = z).
    pub fn pauli(axis: usize) -> Self {
        let mut n = [0.0; 3];
        n[axis] = 1.0;
        Self::along(n, 1.0, -1.0).expect("Pauli axes are unit vectors")
    }

    /// Eigenvalues in construction order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Outcome probabilities `Tr(ρ Π_i) = (w_i + n_i·r)/2`.
    pub fn probabilities(&self, state: &QubitDensity) -> Result<Vec<f64>> {
        self.projectors
            .iter()
            .map(|p| {
                let q = (p.weight + dot(&p.bloch, &state.bloch)) / 2.0;
                if !(-1e-10..=1.0 + 1e-10).contains(&q) {
                    Err(Error::Model(format!(
                        "outcome probability {q} outside [0, 1]"
                    )))
                } else {
                    Ok(q.clamp(0.0, 1.0))
                }
            })
            .collect()
    }

    /// Expectation `Tr(ρ O)`.
    pub fn expectation(&self, state: &QubitDensity) -> Result<f64> {
        Ok(self
            .probabilities(state)?
            .iter()
            .zip(&self.eigenvalues)
            .map(|(p, l)| p * l)
            .sum())
    }
}

/// Measures `obs` on `state` and returns the observed eigenvalue.
pub fn measure_observable<R: Rng + ?Sized>(
    state: &QubitDensity,
    obs: &DiscreteObservable,
    rng: &mut R,
) -> Result<f64> {
    let probs = obs.probabilities(state)?;
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (p, l) in probs.iter().zip(&obs.eigenvalues) {
        acc += p;
        if u < acc {
            return Ok(*l);
        }
    }
    Ok(*obs.eigenvalues.last().expect("nonempty observable"))
}

/// Quantum fidelity `F(ρ, σ) = (Tr√(√ρ σ √ρ))²`.
///
/// For qubits this is `½(1 + r·s + √(1−‖r‖²)√(1−‖s‖²))`, which reduces to
/// `(1 + ⟨r, s⟩)/2` when either state is pure.
pub fn fidelity(a: &QubitDensity, b: &QubitDensity) -> f64 {
    let ra = (1.0 - dot(&a.bloch, &a.bloch)).max(0.0).sqrt();
    let rb = (1.0 - dot(&b.bloch, &b.bloch)).max(0.0).sqrt();
    (0.5 * (1.0 + dot(&a.bloch, &b.bloch) + ra * rb)).clamp(0.0, 1.0)
}

/// Result of a relative-entropy evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    /// Finite value in nats.
    Finite(f64),
    /// The support condition failed; the divergence is infinite.
    Divergent,
}

impl Divergence {
    /// The finite value, if any.
    pub fn finite(self) -> Option<f64> {
        match self {
            Divergence::Finite(v) => Some(v),
            Divergence::Divergent => None,
        }
    }
}

fn xlnx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Quantum relative entropy `D(ρ‖σ) = Tr ρ(ln ρ − ln σ)` in nats.
///
/// `σ` is diagonalised along its Bloch axis; the weights of `ρ` on those
/// eigenprojectors are `(1 ± r·ŝ)/2`. A zero eigenvalue of `σ` carrying
/// nonzero weight of `ρ` yields [`Divergence::Divergent`].
pub fn relative_entropy(a: &QubitDensity, b: &QubitDensity) -> Divergence {
    let clamp = |x: f64| {
        if (-EIG_CLAMP..0.0).contains(&x) {
            0.0
        } else {
            x.max(0.0)
        }
    };
    let neg_entropy: f64 = a.eigenvalues().iter().map(|&p| xlnx(clamp(p))).sum();
    let s = norm(&b.bloch).min(1.0);
    let rs = if s > 0.0 {
        dot(&a.bloch, &b.bloch) / norm(&b.bloch)
    } else {
        0.0
    };
    let mut cross = 0.0;
    for sign in [1.0, -1.0] {
        let mu = clamp((1.0 + sign * s) / 2.0);
        let weight = clamp((1.0 + sign * rs) / 2.0);
        if weight <= EIG_CLAMP {
            continue;
        }
        if mu <= EIG_CLAMP {
            return Divergence::Divergent;
        }
        cross += weight * mu.ln();
    }
    Divergence::Finite((neg_entropy - cross).max(0.0))
}

/// Depolarising channel `Δ_α(ρ) = (1−α)ρ + α I/2`.
pub fn depolarize(state: &QubitDensity, alpha: f64) -> Result<QubitDensity> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::contract(format!(
            "depolarising strength {alpha} outside [0, 1]"
        )));
    }
    Ok(QubitDensity {
        bloch: state.bloch.map(|x| x * (1.0 - alpha)),
    })
}

/// Trace distance `½‖ρ − σ‖₁ = ½‖r − s‖` for qubits.
pub fn trace_distance(a: &QubitDensity, b: &QubitDensity) -> f64 {
    0.5 * norm(&crate::matcore::sub(&a.bloch, &b.bloch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pure(b: Bloch) -> PureQubit {
        PureQubit::new(b).unwrap()
    }
    fn proj(b: Bloch) -> ProjectorAction {
        ProjectorAction::new(b).unwrap()
    }
    fn dens(b: Bloch) -> QubitDensity {
        QubitDensity::new(b).unwrap()
    }

    #[test]
    fn born_identical_and_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = pure([0.0, 0.0, 1.0]);
        for _ in 0..1000 {
            assert_eq!(born_sample(&z, &proj([0.0, 0.0, 1.0]), &mut rng), 1);
            assert_eq!(born_sample(&z, &proj([0.0, 0.0, -1.0]), &mut rng), 0);
        }
    }

    #[test]
    fn born_perpendicular_is_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = pure([1.0, 0.0, 0.0]);
        let n = 100_000;
        let s: u32 = (0..n)
            .map(|_| u32::from(born_sample(&x, &proj([0.0, 0.0, 1.0]), &mut rng)))
            .sum();
        assert!((f64::from(s) / f64::from(n) - 0.5).abs() < 0.005);
    }

    #[test]
    fn rejects_non_unit_pure_state() {
        assert!(PureQubit::new([0.0, 0.0, 0.9]).is_err());
        assert!(ProjectorAction::new([1.0, 1.0, 0.0]).is_err());
        assert!(QubitDensity::new([0.0, 0.0, 1.1]).is_err());
    }

    #[test]
    fn observable_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let up = dens([0.0, 0.0, 1.0]);
        for _ in 0..100 {
            assert_eq!(
                measure_observable(&up, &DiscreteObservable::pauli(2), &mut rng).unwrap(),
                1.0
            );
        }
        let px = DiscreteObservable::pauli(0).probabilities(&up).unwrap();
        assert_abs_diff_eq!(px[0], 0.5);
        assert_abs_diff_eq!(px[1], 0.5);
        let obs = DiscreteObservable::along([0.0, 0.0, 1.0], 3.0, -1.0).unwrap();
        let p = obs.probabilities(&dens([0.0, 0.0, 0.5])).unwrap();
        assert_abs_diff_eq!(p[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn observable_must_resolve_identity() {
        let p = SpectralProjector {
            weight: 1.0,
            bloch: [0.0, 0.0, 1.0],
        };
        assert!(DiscreteObservable::new(vec![1.0, -1.0], vec![p, p]).is_err());
        assert!(DiscreteObservable::new(
            vec![1.0, 1.0],
            vec![
                p,
                SpectralProjector {
                    weight: 1.0,
                    bloch: [0.0, 0.0, -1.0]
                }
            ]
        )
        .is_err());
    }

    #[test]
    fn fidelity_examples() {
        let a = dens([0.0, 0.6, 0.8]);
        assert_abs_diff_eq!(fidelity(&a, &a), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity(&a, &dens([0.0, -0.6, -0.8])), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            fidelity(&dens([1.0, 0.0, 0.0]), &dens([0.0, 0.0, 1.0])),
            0.5,
            epsilon = 1e-15
        );
        // Mixed states: F(ρ, ρ) = 1 as well.
        let m = dens([0.3, 0.0, 0.0]);
        assert_abs_diff_eq!(fidelity(&m, &m), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn relative_entropy_examples() {
        let a = dens([0.5, 0.0, 0.0]);
        let b = dens([0.0, 0.0, 0.5]);
        assert_eq!(
            relative_entropy(&a, &a).finite().map(|v| v < 1e-15),
            Some(true)
        );
        let d = relative_entropy(&a, &b).finite().unwrap();
        assert_abs_diff_eq!(d, 0.25 * 3f64.ln(), epsilon = 1e-12);
        let d = relative_entropy(&dens([0.0, 1.0, 0.0]), &QubitDensity::maximally_mixed())
            .finite()
            .unwrap();
        assert_abs_diff_eq!(d, 2f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn relative_entropy_support_violation_is_tagged() {
        let psi = dens([0.0, 0.0, 1.0]);
        let phi = dens([1.0, 0.0, 0.0]);
        assert_eq!(relative_entropy(&psi, &phi), Divergence::Divergent);
        // Identical pure states: support is contained, divergence is zero.
        assert_eq!(relative_entropy(&psi, &psi), Divergence::Finite(0.0));
    }

    #[test]
    fn depolarize_examples() {
        let s = dens([0.0, 0.0, 1.0]);
        assert_eq!(depolarize(&s, 0.0).unwrap(), s);
        assert_eq!(depolarize(&s, 1.0).unwrap().bloch(), [0.0, 0.0, 0.0]);
        assert_abs_diff_eq!(
            depolarize(&s, 0.4).unwrap().bloch()[2],
            0.6,
            epsilon = 1e-15
        );
        assert!(depolarize(&s, 1.5).is_err());
    }
}
