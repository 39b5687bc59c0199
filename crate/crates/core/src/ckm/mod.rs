//! Channel knowledge maps: a position-indexed table store, Monte Carlo CDF
//! composition, and the SE predictor interface with oracle, table and neural
//! implementations.

mod compose;
mod predictor;
mod store;

pub use compose::{compose_se_mc, compose_se_mc_estimate, inverse_cdf_power};
pub use predictor::{
    assemble_se_inputs, NeuralPredictor, OraclePredictor, PredictorKind, SePredictor, TablePredictor,
};
pub use store::{build_store, fingerprint, CkmEntry, CkmStore, CELL_M};
