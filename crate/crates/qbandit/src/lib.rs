//! Quantum multi-armed bandit simulation library.
//!
//! The crate bundles the reward models, regret-minimising policies and
//! application simulators for bandits whose arms are quantum measurements:
//!
//! * [`matcore`] — small dense symmetric linear algebra (Jacobi eigensolver,
//!   rank-one updates, weighted norms, PSD solves).
//! * [`quantum`] — qubit states, rank-one measurements, Born sampling,
//!   fidelity and relative entropy in Bloch coordinates.
//! * [`environments`] — discrete quantum bandits, pure-state bandits and
//!   classical sphere bandits with vanishing noise.
//! * [`estimators`] — weighted least squares, confidence ellipsoids and the
//!   median-of-means estimator bank.
//! * [`policies`] — UCB, LinUCB, Phased Elimination, explore-then-commit
//!   tomography and the eigenvalue-controlled LinUCB-VN / LinUCB-VVN.
//! * [`thermo`] — Jaynes–Cummings and thermal work-extraction simulators
//!   with dissipation and Landauer ledgers.
//! * [`qcb`] — quantum contextual bandit recommender over Hamiltonian
//!   contexts.
//! * [`acceptance`] — the seeded desk-scale validation suite.
//! * [`harness`] — experiment configuration, seeded Monte Carlo execution,
//!   CSV traces and scaling-law fits.

#![warn(missing_docs)]

pub mod acceptance;
pub mod environments;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod matcore;
pub mod policies;
pub mod qcb;
pub mod quantum;
pub mod thermo;

pub use environments::{Action, EnvironmentSpec, NoiseModel, StepOutcome};
pub use error::{Error, Result};
pub use estimators::{ConfidenceEllipsoid, DesignMatrix, LseAccumulator, MomBank};
pub use harness::{EpisodeTrace, ExperimentConfig, FitModel, FitResult};
pub use matcore::{EigenDecomposition, SymMatrix};
pub use policies::{PsmaqbPolicy, WeightRule};
pub use quantum::{DiscreteObservable, Divergence, ProjectorAction, PureQubit, QubitDensity};
