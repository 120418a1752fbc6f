//! Benchmark models.

pub mod battleship;
pub mod chain;
pub mod rocksample;
pub mod tiger;

pub use battleship::{make_battleship, BattleState, Battleship, CellSet, Layout};
pub use chain::{make_deterministic_chain, DeterministicChain};
pub use rocksample::{
    make_rocksample, make_standard_rocksample, sense_accuracy, standard_layout, RockAssignment,
    RockSample, RockState,
};
pub use tiger::{make_tiger, Tiger, TigerSide, TigerState};
