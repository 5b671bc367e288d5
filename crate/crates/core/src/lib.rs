//! Simulation and statistical characterization of average loss rates for
//! noisy gate sets.
//!
//! The crate is organised bottom-up:
//!
//! * [`quantum`]: dense states, Kraus channels and detector operators for
//!   small Hilbert spaces, plus finite-shot sampling.
//! * [`gates`]: Pauli and single-qubit Clifford gate sets, sequence
//!   composition, inversion and the twirl average.
//! * [`noise`]: constructors for the loss, detector, random-channel and
//!   coherent-leakage models.
//! * [`protocol`]: the randomized-sequence loss protocol (and its RB variant
//!   with an inversion gate), producing [`DecayDataset`]s.
//! * [`analysis`]: survival/loss rates, the worst-case loss bound, decay-curve
//!   fitting and the non-Markovianity diagnostics.

pub mod analysis;
pub mod error;
pub mod gates;
pub mod linalg;
pub mod noise;
pub mod protocol;
pub mod quantum;
pub mod rng;

pub use analysis::{
    average_survival, detector_efficiency, fit_loss_decay, fit_rb_decay, markovianity_tests,
    plateau_test, prop1_check, state_survival, worst_case_loss, BoundReport, DecayFit,
    DetectorEfficiency, FitOptions, MarkovFlag, MarkovInputs, MarkovReport, PlateauReport, RbFit,
    Thresholds,
};
pub use error::{Error, Result};
pub use gates::GateSet;
pub use linalg::CMatrix;
pub use noise::{DetectorBasis, DetectorSpec, LeakageModelSpec, LossModelSpec};
pub use protocol::{
    DecayDataset, DecayPoint, ProtocolConfig, RunMetadata, SequenceOutcome, Shots, Variant,
};
pub use quantum::{DensityMatrix, MeasurementOperator, QuantumChannel, Violation};
