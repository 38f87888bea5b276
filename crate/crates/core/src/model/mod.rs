pub mod energy;
pub mod forces;
pub mod params;
pub mod state;

pub use energy::{
    attractive_potential, attractor_residual, energy_rate_rhs, kinetic_energy, laplacian_quadform,
    pair_potential, repulsive_potential, total_energy,
};
pub use forces::{
    accelerations, conservative_pair, control_force, dissipative_pair, mean_control_magnitude,
    position_alignment, velocity_alignment, PairList,
};
pub use params::{ControlParams, GeneratingFunctionSpec, GeneratingKind, ModelParams, VecD, WeightKind};
pub use state::SwarmState;
