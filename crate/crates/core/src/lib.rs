//! Seeded simulator and analysis toolkit for the networked N-player
//! evolutionary trust game with investors, trustworthy and untrustworthy
//! trustees.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod game;
pub mod io;
pub mod rules;
pub mod seed;
pub mod sweep;
pub mod topology;

pub use engine::{run, run_ensemble, step, Fractions, RunRecord, SimConfig, TopologySpec};
pub use error::{Error, Result};
pub use game::{GameParams, Population, Strategy, Wealth};
pub use rules::{RuleKind, UpdateRule};
pub use topology::{build_lattice, build_scale_free, Network, NetworkKind};
