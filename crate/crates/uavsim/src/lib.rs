//! Discrete-time simulator and scheduling library for tower-assisted
//! multi-UAV surveillance networks.
//!
//! Ground towers wirelessly charge UAVs in exchange for collected
//! surveillance data. Each time step, a scheduler picks which UAV serves
//! which tower so that delivered data stays balanced across towers while
//! the fleet keeps enough energy to stay airborne. The crate provides the
//! world model, rotary-wing power model, reward algebra, four scheduling
//! policies, an exact small-instance MDP solver used to audit the greedy
//! scheduler, and an experiment/report driver.
//!
//! Core math (power model, reward algebra) is generic over the scalar
//! type via [`Real`]; the simulator itself is instantiated at [`Scalar`].

pub mod contents;
pub mod domain;
pub mod energy;
pub mod mdp;
pub mod mobility;
pub mod report;
pub mod reward;
pub mod scheduler;
pub mod sim;

mod real;

pub use real::Real;

/// Scalar type used by the simulator and all concrete world state.
pub type Scalar = f64;

/// Airframe with the default simulation scalar.
pub type Airframe = energy::Airframe<Scalar>;
/// Single-precision airframe, for callers that want f32 math.
pub type Airframe32 = energy::Airframe<f32>;
