//! Estimation and validation: survival rates and the worst-case bound,
//! decay-curve fits, detector efficiency and non-Markovianity diagnostics.

mod diagnostics;
mod fit;
mod lm;
mod survival;

pub use diagnostics::{
    markovianity_tests, plateau_test, ExactModel, MarkovFlag, MarkovInputs, MarkovReport,
    PlateauReport, Thresholds,
};
pub use fit::{fit_loss_decay, fit_rb_decay, DecayFit, FitOptions, RbFit};
pub use survival::{
    average_loss, average_survival, detector_efficiency, prop1_check, state_loss, state_survival,
    worst_case_loss, worst_case_state, BoundReport, DetectorEfficiency,
};
