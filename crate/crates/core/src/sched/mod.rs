//! Max-min downlink scheduling over a pluggable SE predictor: SM-IB, the
//! exhaustive LP upper bound and a random baseline.

mod balance;
mod ckmeans;
mod exact;
mod flow;
mod lp;
mod matching;
mod matrix;
mod random;
mod schedule;
mod smib;

pub use balance::{closed_form_common, ib_balance, IbResult};
pub use ckmeans::{ckmeans, ckmeans_objective};
pub use exact::{exact_enum, exact_enum_eta, n_lp_calls, n_slot_assignments, DEFAULT_GUARD};
pub use flow::MinCostFlow;
pub use lp::{exact_maxmin_lp, simplex_max, LpSolution, MaxMinLp, LP_TOL};
pub use matching::{blocking_pairs, gale_shapley};
pub use matrix::{build_se_matrix, SeMatrix};
pub use random::random_schedule;
pub use schedule::{min_of, serving_of, throughputs, Schedule, StageRecord, FEAS_TOL};
pub use smib::{
    cross_slot_swap, min_cluster_size, per_slot_maxmin, slots_to_schedule, sm_ib, sm_ib_eta, stage1_grouping,
    SlotState, SmIbParams,
};
