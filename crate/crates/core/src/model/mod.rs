//! Emitter–cavity model: parameters, generator, propagation and
//! single-time expectations.

mod basis;
mod liouvillian;
mod params;
mod propagate;

pub use basis::{BasisState, Operator, Operators, Truncation};
pub use liouvillian::{
    build_liouvillian, hamiltonian, unvectorize, vectorize, FanoOrdering, LiouvillianMatrix,
    ModelOptions,
};
pub use params::SystemParams;
pub use propagate::{
    check_step, expectations, propagate, trajectory, trajectory_until_decayed, Channel,
    ExpectationTrajectory, Propagator, QuantumState, MAX_STEP_PRODUCT,
};
