//! Defender strategy: gathering, seeking, enclosing and herding.

pub mod assign;
pub mod body;
pub mod fsm;
pub mod sim;
pub mod tracking;

pub use assign::assign_goals;
pub use body::{desired_positions, BodyGains, VirtualBody};
pub use fsm::{Phase, PhaseState};
pub use sim::{simulate, Metrics, SimulationResult};
pub use tracking::{track_goal, Reference, TrackingGains};
