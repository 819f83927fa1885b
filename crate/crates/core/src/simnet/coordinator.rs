//! The coordinator: bridge between the mesh and the uplink.

use std::collections::{HashMap, VecDeque};

use crate::error::Error;
use crate::netmodel::{DistanceTable, NodeId};
use crate::routing::{find_optimal_path, RouteQuery};
use crate::wire::{CommandPayload, Datagram, MsgType, NackReason, Reading};

use super::frame::{FrameKind, RadioFrame};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoordinatorOutput {
    pub uplink: Vec<Datagram>,
    pub radio: Vec<RadioFrame>,
}

#[derive(Debug, Clone)]
pub struct Coordinator {
    id: NodeId,
    table: DistanceTable,
    radius: f64,
    next_seq: u16,
    /// Commands in flight per target, oldest first, keyed by server seq.
    pending: HashMap<NodeId, VecDeque<(u16, CommandPayload)>>,
}

impl Coordinator {
    pub fn new(id: NodeId, table: DistanceTable, radius: f64) -> Self {
        Coordinator {
            id,
            table,
            radius,
            next_seq: 0,
            pending: HashMap::new(),
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn table(&self) -> &DistanceTable {
        &self.table
    }

    /// Replaces the routing table, e.g. after discovery.
    pub fn set_table(&mut self, table: DistanceTable) {
        self.table = table;
    }

    pub fn pending_commands(&self) -> usize {
        self.pending.values().map(VecDeque::len).sum()
    }

    fn seq(&mut self) -> u16 {
        let seq = self.next_seq;
        self.next_seq = self.next_seq.wrapping_add(1);
        seq
    }

    /// An uplink datagram carrying a locally generated payload.
    pub fn uplink(&mut self, msg_type: MsgType, src: NodeId, payload: Vec<u8>) -> Datagram {
        let seq = self.seq();
        Datagram::new(msg_type, seq, src.get() as u16, payload)
    }

    pub fn heartbeat(&mut self) -> Datagram {
        self.uplink(MsgType::Heartbeat, self.id, Vec::new())
    }

    /// Translates frames that reached the coordinator into uplink datagrams
    /// and server datagrams into routed radio frames. Payload bytes pass
    /// through unchanged.
    pub fn step(&mut self, frames: Vec<RadioFrame>, datagrams: Vec<Datagram>) -> CoordinatorOutput {
        let mut out = CoordinatorOutput::default();
        for frame in frames {
            self.on_frame(frame, &mut out);
        }
        for datagram in datagrams {
            self.on_datagram(datagram, &mut out);
        }
        out
    }

    fn on_frame(&mut self, frame: RadioFrame, out: &mut CoordinatorOutput) {
        let msg_type = match frame.kind {
            FrameKind::SensorReading => MsgType::SensorData,
            FrameKind::Alarm => MsgType::AlarmCid,
            FrameKind::DiscoveryReport => MsgType::DiscoveryReport,
            FrameKind::Command | FrameKind::DiscoveryRequest => return,
        };
        if let Ok(Reading::CommandReply { switch, .. }) = Reading::decode(&frame.payload) {
            if let Some((seq, command)) = self
                .pending
                .get_mut(&frame.src)
                .and_then(VecDeque::pop_front)
            {
                out.uplink.push(Datagram::new(
                    MsgType::Ack,
                    seq,
                    frame.src.get() as u16,
                    command.ack(switch),
                ));
            }
        }
        let d = self.uplink(msg_type, frame.src, frame.payload);
        out.uplink.push(d);
    }

    fn on_datagram(&mut self, d: Datagram, out: &mut CoordinatorOutput) {
        if d.msg_type != MsgType::Command {
            return;
        }
        let nack = |reason: NackReason, command: Option<CommandPayload>, target: u16| {
            let payload = match command {
                Some(c) => c.nack(reason),
                None => vec![0, 0, reason as u8],
            };
            Datagram::new(MsgType::Nack, d.seq, target, payload)
        };
        let Ok(command) = CommandPayload::decode(&d.payload) else {
            out.uplink.push(nack(NackReason::Malformed, None, 0));
            return;
        };
        let target = NodeId(u32::from(command.target));
        let query = RouteQuery {
            from: self.id,
            to: target,
            radius: self.radius,
        };
        match find_optimal_path(&self.table, &query) {
            Ok(route) => {
                let frame = RadioFrame::new(self.id, target, FrameKind::Command, d.payload.clone())
                    .expect("command fits in a radio frame")
                    .with_route(route.path, 0);
                self.pending
                    .entry(target)
                    .or_default()
                    .push_back((d.seq, command));
                out.radio.push(frame);
            }
            Err(Error::NoPath { .. }) => {
                out.uplink
                    .push(nack(NackReason::NoPath, Some(command), target.get() as u16));
            }
            Err(_) => {
                out.uplink.push(nack(
                    NackReason::UnknownNode,
                    Some(command),
                    target.get() as u16,
                ));
            }
        }
    }
}
