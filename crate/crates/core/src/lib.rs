//! Emulation stack for a ZigBee-style home sensor network.
//!
//! * [`netmodel`]: nodes, positions and the pairwise distance table.
//! * [`routing`]: radius-constrained optimal routes and an exhaustive oracle.
//! * [`simnet`]: discovery, node and coordinator state machines, traffic runs.
//! * [`wire`]: the uplink datagram codec and Contact ID decoding.

mod error;
pub mod netmodel;
pub mod rng;
pub mod routing;
pub mod simnet;
mod visits;
pub mod wire;

pub use error::{Error, Result};
pub use netmodel::{DistanceTable, NodeId, Position, SymmetryPolicy, Topology};
pub use routing::{Route, RouteQuery};
pub use visits::{CountingMode, VisitStats};
