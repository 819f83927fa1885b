use std::io;
use std::net::SocketAddr;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, MonitorError>;

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: io::Error,
    },
    #[error("record store: {0}")]
    Store(#[from] io::Error),
    #[error("record store is corrupt at offset {offset}: {reason}")]
    Corrupt { offset: u64, reason: String },
    #[error("no coordinator is connected")]
    NoCoordinator,
    #[error("unknown ticket {0}")]
    UnknownTicket(u64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("admin protocol: {0}")]
    Protocol(String),
}
