//! Discrete-time fuel cycle simulation with individually modelled
//! reactors or aggregate reactor fleets, on monthly or quarterly steps.

pub mod deployment;
pub mod exchange;
pub mod facilities;
pub mod fleet;
pub mod material;
pub mod metrics;
pub mod output;
pub mod reactor;
pub mod scenario;
pub mod simulation;
pub mod tables;

pub use exchange::{Allocation, Allocator, Bid, Commodity, FacilityId, GreedyAllocator, Request};
pub use material::{Isotope, Mass, Material, Recipe, SimClock};
pub use reactor::{EventRecord, ReactorEvent, ReactorSpec, ReactorState};
pub use scenario::{Case, Paradigm, Scenario, ScenarioError};
pub use output::{run_to_dir, RunError};
pub use simulation::{run, SimError};
pub use tables::Tables;
