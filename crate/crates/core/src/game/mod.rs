//! The users' effort game: utilities, best responses and the dynamics that
//! search for a stationary profile.

mod dynamics;
mod knapsack;
mod utility;

pub use dynamics::{
    classify_domination, run_dynamics, Domination, DynamicsConfig, EquilibriumResult, Game,
    NashReport, Profile, RefreshMode,
};
pub use knapsack::{best_response, select, Item};
pub use utility::{min_effort, overall_utility, utility, wins, Strategy};

#[cfg(test)]
mod tests;
