//! Exact branch-and-price solvers and data-driven prescriptive models for the
//! vehicle routing problem with soft time windows under feature-dependent
//! stochastic travel times.

pub mod datagen;
pub mod error;
pub mod harness;
pub mod learn;
pub mod lp;
pub mod methods;
pub mod penalty_model;
pub mod pricing;
pub mod problem;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use problem::{
    arrival_times, route_penalty, solution_value, ArcIndex, Instance, Node, PenaltyFn, Route, ScenarioSet,
    Solution, SolutionValue, TravelTimes,
};
