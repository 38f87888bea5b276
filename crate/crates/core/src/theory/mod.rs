mod bounds;
mod wobbler;

pub use bounds::{
    bound_report, check_bounds, decay_check, eigenvalues, envelope, BoundCheck, BoundReport, DecayCheck,
    EigenRegime, LinearEnvelope, DECAY_FLOOR, DECAY_SLACK,
};
pub use wobbler::{
    monotonicity_check, wobbler_admissible, wobbler_closed_form, MonotoneQuantity, MonotoneViolation,
    MonotonicityCertificate,
};
