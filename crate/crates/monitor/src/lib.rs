//! Monitoring center: accepts coordinator uplinks, stores readings and
//! alarms in an append-only log, and routes commands back to the network.

mod admin;
mod bridge;
mod client;
mod error;
mod record;
mod server;
mod service;
mod store;
mod ticket;

pub use admin::{
    handle_line, handle_request, AdminClient, AdminRequest, AdminResponse, CidView, RecordView,
    TicketView, DEFAULT_QUERY_LIMIT,
};
pub use bridge::Bridge;
pub use client::UplinkClient;
pub use error::{MonitorError, Result};
pub use record::{HistoryFilter, Page, RecordKind, SensorRecord};
pub use server::{serve, ServerConfig, ServerHandle, DEFAULT_ADMIN, DEFAULT_LISTEN};
pub use service::{Service, SessionId, DEFAULT_COMMAND_TIMEOUT};
pub use store::{Store, StoredEntry};
pub use ticket::{CommandTicket, TicketState};
