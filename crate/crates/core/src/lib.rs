//! Online congestion tolls learned from aggregate edge flows.
//!
//! The crate simulates heterogeneous, myopic users routing over a capacitated
//! road network with fixed latencies. A toll operator observes only the
//! aggregate edge flows each period and adjusts tolls with a projected dual
//! gradient step. Around that loop sit the benchmarks and oracles needed to
//! judge it: the fractional system-optimum LP and its dual tolls, reactive and
//! static toll policies, regret and capacity-violation metrics, and VCG
//! payments for parallel networks.
//!
//! Units: latencies are hours, values of time are $/hr, tolls and outside
//! option costs are dollars.

pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod lp_oracle;
pub mod metrics;
pub mod network;
pub mod population;
pub mod rng;
pub mod scenarios;
pub mod toller;
pub mod vcg;
pub mod verify;

pub use equilibrium::{
    best_response, compute_equilibrium, compute_equilibrium_batched, AssignmentRecord, Choice,
    TollVector,
};
pub use error::{Error, Result};
pub use lp_oracle::{
    check_market_clearing, dual_objective, solve_lp, subgradient_solve, LpInstance, LpSolution,
    LpStatus,
};
pub use metrics::{loglog_slope, normalized_metrics, regret, violation, MetricReport, RunTrace};
pub use network::{enumerate_paths, load_tntp, shortest_path, Edge, Network, Path, PathSet};
pub use population::{Commodity, PopulationModel, UserDraw, UserGroup};
pub use toller::{recommended_step, static_tolls, PolicyKind, TollPolicy, TollerState};
