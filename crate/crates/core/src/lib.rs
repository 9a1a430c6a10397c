//! Proportional payoff allocation games: exact equilibrium analysis and a
//! decentralized multi-player bandit simulator.
//!
//! The [`game`] module holds the static game and everything derived from it
//! exactly: utilities, welfare, equilibrium enumeration, improvement
//! dynamics, gap margins, and scenario classification. [`perturb`] builds the
//! estimate-plus-perturbation variant of a game used to isolate a unique
//! efficient equilibrium. [`existence`] runs Monte Carlo existence studies
//! over random game distributions. [`env`] and [`agents`] provide the
//! multi-round stochastic environment and the decentralized learning agents
//! played in it, and [`sim`] wires those into reproducible, seeded
//! experiments with aggregate metrics.

pub mod agents;
pub mod env;
pub mod error;
pub mod existence;
pub mod game;
pub mod perturb;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use game::{
    best_improvement_step, classify_scenario, compute_gaps, deviation_gain, enumerate_pnes,
    improvement_path, is_epsilon_pne, most_efficient_pnes, utility, welfare, GameConfig, GapReport,
    ImprovementStep, PathOutcome, PathResult, ScenarioFlags, StrategyProfile, DEFAULT_ENUM_CAP,
    EQ_TOL,
};
