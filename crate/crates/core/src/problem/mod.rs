//! Instances, routes, penalties, arrival-time propagation and solutions.

mod instance;
mod penalty;
mod route;
mod scenario;
pub mod solomon;
mod solution;
mod travel;

pub use instance::{Instance, Node};
pub use penalty::PenaltyFn;
pub use route::{arrival_times, route_penalty, Route, Visit};
pub use scenario::ScenarioSet;
pub use solomon::{parse_solomon, write_solomon};
pub use solution::{solution_value, Solution, SolutionValue};
pub use travel::{ArcIndex, TravelTimes};

#[cfg(test)]
pub(crate) use instance::fixtures;
