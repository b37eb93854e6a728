//! Exact linear acoustic semigroup, exponential integration, dispersive
//! integrals and Strichartz norms.

mod dispersive;
mod propagator;
mod strichartz;
mod symbol;

pub use dispersive::{
    dispersive_bound, dispersive_integral, dispersive_sup, oscillatory_quadrature, psi_bump, radial_integral, DispersiveArgs,
    DispersivePeak, Kernel, QuadratureOptions, QuadratureValue, RadialKernel, BUMP_PLATEAU, BUMP_SUPPORT,
};
pub use propagator::{
    apply_linear_propagator, etd_step, join_velocity, propagate_vars, split_velocity, AcousticVars, EtdIntegrator,
    ModeTable,
};
pub use strichartz::{acoustic_pair, free_acoustic_norm, strichartz_norm, StrichartzAccumulator};
pub use symbol::{acoustic_symbol, phi1, phi2, AcousticSymbol, Mat2};
