//! Intermittent-communication planning for multi-robot teams with LTL tasks.
//!
//! The pipeline: LTL tasks become Büchi automata ([`ltl`]), the workspace is
//! a weighted transition system per robot ([`ts`]), teams meet according to
//! a periodic schedule ([`schedule`]), plans are searched on the product
//! ([`product`], [`planner`]) and executed asynchronously ([`executor`]).

pub mod executor;
pub mod ltl;
pub mod planner;
pub mod product;
pub mod scalar;
pub mod schedule;
pub mod ts;

pub use scalar::Weight;

/// Transition system with real edge costs, as loaded from a scenario.
pub type Wts = ts::WeightedTransitionSystem<f64>;
/// Product automaton over [`Wts`].
pub type Product<'a> = product::ProductAutomaton<'a, f64>;
pub type Planner = planner::RobotPlanner<f64>;
