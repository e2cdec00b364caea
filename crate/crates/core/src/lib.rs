//! QoS-constrained non-cooperative games on finite action sets.
//!
//! Players pick actions from finite sets and each one only asks for its
//! utility to clear a threshold. The crate covers:
//!
//! * [`game`]: the constrained normal-form game, feasible sets and the
//!   satisfaction predicate,
//! * [`equilibria`]: exact enumeration of Nash, generalized Nash,
//!   satisfaction and efficient-satisfaction equilibria, clipping actions
//!   and best-response dynamics,
//! * [`channel`]: the interference-channel power-control game,
//! * [`sesa`]: the decentralized satisfaction-equilibrium search,
//! * [`harness`]: JSON/CSV documents and the experiment commands behind
//!   the `sateq` binary.

pub mod channel;
pub mod equilibria;
pub mod error;
pub mod game;
pub mod harness;
pub mod sesa;

pub use channel::{
    power_grid, rate_utility, sample_channel, single_user_cap, InterferenceChannel, PowerGrid,
};
pub use equilibria::{
    enumerate_cost_gne, enumerate_ese, enumerate_gne, enumerate_ne, enumerate_se, find_clipping_actions,
    has_blocking_clipping, potential_of, run_brd, verify_potential_identity, BrdOutcome, CostModel,
    EquilibriumReport,
};
pub use error::{Error, Result};
pub use game::{ActionProfile, ConstrainedGame};
pub use sesa::{
    normalized_gain, run_sesa, sesa_init, sesa_step, update_distribution, LearningRate, SesaConfig,
    SesaOutcome, SesaState, SesaTrace,
};
