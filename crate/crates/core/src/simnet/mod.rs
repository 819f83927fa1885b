//! Deterministic emulation of the sensor mesh.

mod coordinator;
mod discovery;
mod emulator;
mod frame;
mod node;
mod traffic;

pub use coordinator::{Coordinator, CoordinatorOutput};
pub use discovery::{run_discovery, Discovery, BROADCAST};
pub use emulator::{Emulator, EmulatorConfig, TraceEvent};
pub use frame::{FrameKind, RadioFrame, MAX_RADIO_PAYLOAD};
pub use node::{
    node_on_receive, node_tick, synthetic_reading, NodeMode, NodeState, ReceiveOutcome, Tick,
};
pub use traffic::{run_pairs, run_traffic, run_traffic_with, Delivery, SimConfig, TrafficRun};
