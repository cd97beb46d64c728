//! Defensive herding of an adversarial swarm with a 3D net of string barriers.

pub mod attackers;
pub mod dominance;
pub mod dynamics;
pub mod error;
pub mod formation;
pub mod herding;
pub mod net;
pub mod scenario;
pub mod transforms;

pub use dynamics::{AgentParams, AgentState, Areas, Vec3};
pub use error::{Error, Result};
pub use formation::{Formation, FormationKind, SphericalPoint};
pub use herding::{simulate, Metrics, Phase, SimulationResult};
pub use net::StringNetGraph;
pub use scenario::ScenarioConfig;
pub use transforms::{FormationFamily, Pose, Quaternion};
