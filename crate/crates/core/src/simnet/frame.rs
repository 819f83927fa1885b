use crate::error::{Error, Result};
use crate::netmodel::NodeId;

/// Largest payload a radio frame may carry.
pub const MAX_RADIO_PAYLOAD: usize = 96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameKind {
    SensorReading,
    Command,
    DiscoveryRequest,
    DiscoveryReport,
    Alarm,
}

impl FrameKind {
    pub fn name(self) -> &'static str {
        match self {
            FrameKind::SensorReading => "reading",
            FrameKind::Command => "command",
            FrameKind::DiscoveryRequest => "discovery-request",
            FrameKind::DiscoveryReport => "discovery-report",
            FrameKind::Alarm => "alarm",
        }
    }
}

/// A frame travelling through the mesh.
///
/// `route` is the full source-to-destination path once routed, empty before.
/// `hop_index` is the position in `route` of the node currently holding the
/// frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadioFrame {
    pub src: NodeId,
    pub dst: NodeId,
    pub route: Vec<NodeId>,
    pub kind: FrameKind,
    pub payload: Vec<u8>,
    pub hop_index: usize,
}

impl RadioFrame {
    pub fn new(src: NodeId, dst: NodeId, kind: FrameKind, payload: Vec<u8>) -> Result<Self> {
        if payload.len() > MAX_RADIO_PAYLOAD {
            return Err(Error::InvalidInput(format!(
                "radio payload of {} bytes exceeds {MAX_RADIO_PAYLOAD}",
                payload.len()
            )));
        }
        Ok(RadioFrame {
            src,
            dst,
            route: Vec::new(),
            kind,
            payload,
            hop_index: 0,
        })
    }

    pub fn with_route(mut self, route: Vec<NodeId>, hop_index: usize) -> Self {
        self.route = route;
        self.hop_index = hop_index;
        self
    }

    pub fn is_routed(&self) -> bool {
        !self.route.is_empty()
    }

    /// The node currently holding the frame.
    pub fn holder(&self) -> Option<NodeId> {
        self.route.get(self.hop_index).copied()
    }

    pub fn at_destination(&self) -> bool {
        self.is_routed() && self.hop_index + 1 == self.route.len()
    }
}
