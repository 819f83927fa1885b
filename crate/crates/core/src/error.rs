use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unknown node {0}")]
    UnknownNode(u32),
    #[error("asymmetric table: cost[{i}][{j}] = {forward} but cost[{j}][{i}] = {backward}")]
    AsymmetricTable {
        i: u32,
        j: u32,
        forward: f64,
        backward: f64,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Io(String),
    #[error("no path from node {from} to node {to} within radius {radius}")]
    NoPath { from: u32, to: u32, radius: f64 },
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("instance of {nodes} nodes exceeds the exhaustive search bound of {limit}")]
    InstanceTooLarge { nodes: usize, limit: usize },
    #[error("frame for node {node} is misrouted (route {route:?}, hop index {hop_index})")]
    MisroutedFrame {
        node: u32,
        route: Vec<u32>,
        hop_index: usize,
    },
}
