//! Distance-table discovery.
//!
//! The root broadcasts one request; every other node answers with one report
//! carrying its ID and either its position or, for topologies known only by
//! their distance matrix, its measured distances to every other node. The
//! root assembles the table from the decoded reports.

use crate::error::{Error, Result};
use crate::netmodel::{table_from_positions, DistanceTable, NodeId, Position, Topology};

use super::frame::{FrameKind, RadioFrame, MAX_RADIO_PAYLOAD};

const REPORT_POSITION: u8 = 0x01;
const REPORT_RANGES: u8 = 0x02;

/// Broadcast destination.
pub const BROADCAST: NodeId = NodeId(0);

#[derive(Debug, Clone, PartialEq)]
pub struct Discovery {
    pub table: DistanceTable,
    pub message_count: usize,
    pub frames: Vec<RadioFrame>,
}

pub fn run_discovery(topology: &Topology, root: NodeId) -> Result<Discovery> {
    topology.table().check_node(root)?;
    let request = RadioFrame::new(root, BROADCAST, FrameKind::DiscoveryRequest, Vec::new())?;
    let mut frames = vec![request];
    for node in topology.nodes().filter(|&n| n != root) {
        frames.push(RadioFrame::new(
            node,
            root,
            FrameKind::DiscoveryReport,
            report_payload(topology, node)?,
        )?);
    }

    let n = topology.len();
    let table = match topology.positions() {
        Some(truth) => {
            let mut positions = vec![None; n];
            positions[root.index()] = Some(truth[root.index()]);
            for frame in &frames[1..] {
                let (id, p) = decode_position(&frame.payload)?;
                positions[id.index()] = Some(p);
            }
            let positions: Vec<Position> = positions.into_iter().map(Option::unwrap).collect();
            table_from_positions(&positions)?
        }
        None => {
            let mut rows = vec![Vec::new(); n];
            rows[root.index()] = topology.table().row(root).to_vec();
            for frame in &frames[1..] {
                let (id, row) = decode_ranges(&frame.payload, n)?;
                rows[id.index()] = row;
            }
            DistanceTable::directed(&rows)?
        }
    };
    Ok(Discovery {
        table,
        message_count: frames.len(),
        frames,
    })
}

fn report_payload(topology: &Topology, node: NodeId) -> Result<Vec<u8>> {
    let id = u16::try_from(node.get())
        .map_err(|_| Error::InvalidInput(format!("node {node} does not fit a report")))?;
    let mut out = Vec::new();
    match topology.positions() {
        Some(positions) => {
            let p = positions[node.index()];
            out.push(REPORT_POSITION);
            out.extend_from_slice(&id.to_be_bytes());
            out.extend_from_slice(&p.x.to_be_bytes());
            out.extend_from_slice(&p.y.to_be_bytes());
        }
        None => {
            out.push(REPORT_RANGES);
            out.extend_from_slice(&id.to_be_bytes());
            for other in topology.nodes().filter(|&o| o != node) {
                out.extend_from_slice(&topology.table().cost(node, other).to_be_bytes());
            }
            if out.len() > MAX_RADIO_PAYLOAD {
                return Err(Error::InvalidInput(format!(
                    "range report for {} nodes exceeds the {MAX_RADIO_PAYLOAD}-byte frame limit",
                    topology.len()
                )));
            }
        }
    }
    Ok(out)
}

fn read_f64(bytes: &[u8]) -> f64 {
    f64::from_be_bytes(bytes.try_into().unwrap())
}

fn report_header(payload: &[u8], tag: u8, len: usize) -> Result<NodeId> {
    if payload.len() != len || payload[0] != tag {
        return Err(Error::InvalidInput("malformed discovery report".into()));
    }
    Ok(NodeId(u32::from(u16::from_be_bytes([
        payload[1], payload[2],
    ]))))
}

fn decode_position(payload: &[u8]) -> Result<(NodeId, Position)> {
    let id = report_header(payload, REPORT_POSITION, 19)?;
    Ok((
        id,
        Position::new(read_f64(&payload[3..11]), read_f64(&payload[11..19])),
    ))
}

fn decode_ranges(payload: &[u8], n: usize) -> Result<(NodeId, Vec<f64>)> {
    let id = report_header(payload, REPORT_RANGES, 3 + 8 * (n - 1))?;
    let mut ranges = payload[3..].chunks(8).map(read_f64);
    let row = (0..n)
        .map(|j| {
            if j == id.index() {
                0.0
            } else {
                ranges.next().unwrap()
            }
        })
        .collect();
    Ok((id, row))
}
