//! Single-threaded discrete-event emulation of the mesh and its coordinator.
//!
//! Each tick first delivers frames scheduled for it, then runs every node's
//! timer, then lets the coordinator translate what reached it. A radio hop
//! takes one tick.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::netmodel::{NodeId, Topology};
use crate::routing::{find_optimal_path, RouteQuery};
use crate::wire::{Datagram, MsgType, CID_LEN};

use super::coordinator::Coordinator;
use super::discovery::{run_discovery, Discovery};
use super::frame::{FrameKind, RadioFrame};
use super::node::{node_on_receive, node_tick, NodeState, ReceiveOutcome, Tick};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmulatorConfig {
    pub radius: f64,
    pub seed: u64,
    pub sample_period: Tick,
}

impl Default for EmulatorConfig {
    fn default() -> Self {
        EmulatorConfig {
            radius: 5.0,
            seed: 0,
            sample_period: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub tick: Tick,
    pub kind: &'static str,
    pub src: u32,
    pub dst: u32,
    pub detail: String,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}",
            self.tick, self.kind, self.src, self.dst, self.detail
        )
    }
}

fn path_text(route: &[NodeId]) -> String {
    route
        .iter()
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join(">")
}

pub struct Emulator {
    topology: Topology,
    coordinator: Coordinator,
    nodes: Vec<NodeState>,
    now: Tick,
    sampling: bool,
    in_flight: BTreeMap<(Tick, u64), RadioFrame>,
    next_event: u64,
    routes: HashMap<(NodeId, NodeId), Option<Vec<NodeId>>>,
    downlink: Vec<Datagram>,
    uplink: Vec<Datagram>,
    trace: Vec<TraceEvent>,
    dropped: u64,
}

impl Emulator {
    pub fn new(topology: Topology, config: EmulatorConfig) -> Result<Self> {
        let coordinator_id = topology.coordinator();
        let nodes = topology
            .nodes()
            .map(|id| NodeState::new(id, coordinator_id, config.sample_period, config.seed))
            .collect();
        let radius = config.radius;
        if radius.is_nan() || radius < 0.0 {
            return Err(Error::InvalidInput(format!(
                "radius {radius} must be non-negative"
            )));
        }
        Ok(Emulator {
            coordinator: Coordinator::new(coordinator_id, topology.table().clone(), radius),
            topology,
            nodes,
            now: 0,
            sampling: true,
            in_flight: BTreeMap::new(),
            next_event: 0,
            routes: HashMap::new(),
            downlink: Vec::new(),
            uplink: Vec::new(),
            trace: Vec::new(),
            dropped: 0,
        })
    }

    pub fn now(&self) -> Tick {
        self.now
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeState> {
        self.topology
            .table()
            .contains(id)
            .then(|| &self.nodes[id.index()])
    }

    pub fn coordinator(&self) -> &Coordinator {
        &self.coordinator
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn trace_text(&self) -> String {
        self.trace.iter().map(|e| format!("{e}\n")).collect()
    }

    /// Frames dropped because their destination was unreachable.
    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn in_flight(&self) -> usize {
        self.in_flight.len()
    }

    /// Stops or resumes timed sampling. In-flight frames keep moving.
    pub fn set_sampling(&mut self, on: bool) {
        self.sampling = on;
    }

    fn log(&mut self, kind: &'static str, src: NodeId, dst: NodeId, detail: String) {
        self.trace.push(TraceEvent {
            tick: self.now,
            kind,
            src: src.get(),
            dst: dst.get(),
            detail,
        });
    }

    /// Runs discovery from the coordinator, installs the resulting table and
    /// queues a DISCOVERY_REPORT datagram (`nodes: u16, messages: u16`).
    pub fn discover(&mut self) -> Result<Discovery> {
        let root = self.coordinator.id();
        let discovery = run_discovery(&self.topology, root)?;
        for frame in &discovery.frames {
            self.log(
                frame.kind.name(),
                frame.src,
                frame.dst,
                format!("{} bytes", frame.payload.len()),
            );
        }
        self.coordinator.set_table(discovery.table.clone());
        self.routes.clear();
        let mut payload = Vec::with_capacity(4);
        payload.extend_from_slice(&(discovery.table.len() as u16).to_be_bytes());
        payload.extend_from_slice(&(discovery.message_count as u16).to_be_bytes());
        let d = self
            .coordinator
            .uplink(MsgType::DiscoveryReport, root, payload);
        self.emit_uplink(d);
        Ok(discovery)
    }

    /// Queues a datagram from the uplink for the coordinator's next step.
    pub fn push_downlink(&mut self, d: Datagram) {
        self.downlink.push(d);
    }

    pub fn take_uplink(&mut self) -> Vec<Datagram> {
        std::mem::take(&mut self.uplink)
    }

    pub fn queue_heartbeat(&mut self) {
        let d = self.coordinator.heartbeat();
        self.emit_uplink(d);
    }

    /// Raises a Contact ID alarm at `node`, as an attached alarm panel would.
    pub fn inject_alarm(&mut self, node: NodeId, message: &str) -> Result<()> {
        self.topology.table().check_node(node)?;
        if message.len() != CID_LEN {
            return Err(Error::InvalidInput(format!(
                "alarm message must be {CID_LEN} characters"
            )));
        }
        let frame = RadioFrame::new(
            node,
            self.coordinator.id(),
            FrameKind::Alarm,
            message.as_bytes().to_vec(),
        )?;
        self.send(frame);
        Ok(())
    }

    fn emit_uplink(&mut self, d: Datagram) {
        self.log(
            "uplink",
            NodeId(u32::from(d.src_node)),
            NodeId(0),
            format!("{} seq={} len={}", d.msg_type, d.seq, d.payload.len()),
        );
        self.uplink.push(d);
    }

    fn route(&mut self, from: NodeId, to: NodeId) -> Option<Vec<NodeId>> {
        let table = self.coordinator.table();
        let radius = self.coordinator.radius();
        self.routes
            .entry((from, to))
            .or_insert_with(|| {
                find_optimal_path(table, &RouteQuery { from, to, radius })
                    .ok()
                    .map(|r| r.path)
            })
            .clone()
    }

    fn schedule(&mut self, frame: RadioFrame) {
        let key = (self.now + 1, self.next_event);
        self.next_event += 1;
        self.in_flight.insert(key, frame);
    }

    /// Routes an unrouted frame and puts it on the air.
    fn send(&mut self, frame: RadioFrame) {
        let frame = if frame.is_routed() {
            frame
        } else {
            match self.route(frame.src, frame.dst) {
                Some(route) => frame.with_route(route, 0),
                None => {
                    self.dropped += 1;
                    self.log(
                        "drop",
                        frame.src,
                        frame.dst,
                        format!("{} no-path", frame.kind.name()),
                    );
                    return;
                }
            }
        };
        self.log(
            "tx",
            frame.src,
            frame.dst,
            format!("{} {}", frame.kind.name(), path_text(&frame.route)),
        );
        self.launch(frame);
    }

    fn launch(&mut self, mut frame: RadioFrame) {
        if !frame.at_destination() {
            frame.hop_index += 1;
        }
        self.schedule(frame);
    }

    /// Advances the emulation through tick `end - 1`.
    pub fn run_until(&mut self, end: Tick) {
        while self.now < end {
            self.step();
        }
    }

    /// Keeps stepping with sampling off until nothing is in flight or `limit`
    /// ticks elapse. Returns whether the network went quiet.
    pub fn drain(&mut self, limit: Tick) -> bool {
        let was = self.sampling;
        self.sampling = false;
        let end = self.now + limit;
        while self.now < end && (!self.in_flight.is_empty() || !self.downlink.is_empty()) {
            self.step();
        }
        self.sampling = was;
        self.in_flight.is_empty()
    }

    pub fn step(&mut self) {
        let mut at_coordinator = Vec::new();

        let due: Vec<(Tick, u64)> = self
            .in_flight
            .range(..(self.now + 1, 0))
            .map(|(k, _)| *k)
            .collect();
        for key in due {
            let frame = self.in_flight.remove(&key).unwrap();
            let holder = frame.holder().expect("scheduled frames are routed");
            if frame.at_destination()
                && holder == self.coordinator.id()
                && frame.kind != FrameKind::Command
            {
                self.log("rx", frame.src, holder, frame.kind.name().to_string());
                at_coordinator.push(frame);
                continue;
            }
            let state = self.nodes[holder.index()].clone();
            match node_on_receive(state, frame.clone()) {
                Ok((state, outcome)) => {
                    self.nodes[holder.index()] = state;
                    match outcome {
                        ReceiveOutcome::Forward(next) => {
                            self.log(
                                "fwd",
                                holder,
                                next.holder().unwrap(),
                                format!("{} hop={}", next.kind.name(), next.hop_index),
                            );
                            self.schedule(next);
                        }
                        ReceiveOutcome::Consumed(reply) => {
                            self.log("rx", frame.src, holder, frame.kind.name().to_string());
                            if let Some(reply) = reply {
                                self.send(reply);
                            }
                        }
                    }
                }
                Err(e) => self.log("error", frame.src, holder, e.to_string()),
            }
        }

        if self.sampling {
            for i in 0..self.nodes.len() {
                let state = self.nodes[i].clone();
                let (state, frames) = node_tick(state, self.now);
                let id = state.id;
                let reading = state.last_reading;
                self.nodes[i] = state;
                for frame in frames {
                    self.log(
                        "sample",
                        id,
                        frame.dst,
                        format!("{}", reading.unwrap_or_default()),
                    );
                    self.send(frame);
                }
            }
        }

        let downlink = std::mem::take(&mut self.downlink);
        for d in &downlink {
            self.log(
                "downlink",
                NodeId(0),
                self.coordinator.id(),
                format!("{} seq={}", d.msg_type, d.seq),
            );
        }
        if !at_coordinator.is_empty() || !downlink.is_empty() {
            let out = self.coordinator.step(at_coordinator, downlink);
            for d in out.uplink {
                self.emit_uplink(d);
            }
            for frame in out.radio {
                self.send(frame);
            }
        }

        self.now += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::table_one;
    use crate::wire::{CommandPayload, Opcode, SwitchState};

    fn emulator(radius: f64) -> Emulator {
        let config = EmulatorConfig {
            radius,
            seed: 1,
            sample_period: 20,
        };
        Emulator::new(Topology::from_table(table_one()), config).unwrap()
    }

    #[test]
    fn readings_reach_the_uplink() {
        let mut emu = emulator(5.0);
        emu.run_until(100);
        let up = emu.take_uplink();
        assert!(up
            .iter()
            .any(|d| d.msg_type == MsgType::SensorData && d.src_node == 10));
        assert_eq!(emu.dropped(), 0);
    }

    #[test]
    fn switch_command_end_to_end() {
        let mut emu = emulator(5.0);
        emu.set_sampling(false);
        emu.push_downlink(Datagram::new(
            MsgType::Command,
            77,
            0,
            CommandPayload::new(10, Opcode::SwitchOn).encode(),
        ));
        assert!(emu.drain(50));
        assert_eq!(emu.node(NodeId(10)).unwrap().relay_switch, SwitchState::On);
        let up = emu.take_uplink();
        let ack = up.iter().find(|d| d.msg_type == MsgType::Ack).unwrap();
        assert_eq!(ack.seq, 77);
        let trace = emu.trace_text();
        assert!(trace.contains("command 1>5>10"), "{trace}");
        assert!(
            trace.lines().any(|l| l.starts_with("1\tfwd\t5\t10\t")),
            "{trace}"
        );
    }

    #[test]
    fn radius_one_isolates_everyone() {
        let mut emu = emulator(1.0);
        emu.push_downlink(Datagram::new(
            MsgType::Command,
            5,
            0,
            CommandPayload::new(10, Opcode::SwitchOn).encode(),
        ));
        emu.run_until(60);
        let up = emu.take_uplink();
        assert!(up.iter().any(|d| d.msg_type == MsgType::Nack && d.seq == 5));
        // Only the coordinator's own readings get through.
        assert!(up
            .iter()
            .filter(|d| d.msg_type == MsgType::SensorData)
            .all(|d| d.src_node == 1));
        assert!(emu.dropped() > 0);
    }

    #[test]
    fn alarm_and_discovery() {
        let mut emu = emulator(5.0);
        let d = emu.discover().unwrap();
        assert_eq!(d.message_count, 10);
        emu.inject_alarm(NodeId(9), "1234181131010158").unwrap();
        emu.set_sampling(false);
        emu.drain(20);
        let up = emu.take_uplink();
        assert_eq!(up[0].msg_type, MsgType::DiscoveryReport);
        assert_eq!(up[0].payload, vec![0, 10, 0, 10]);
        let alarm = up.iter().find(|d| d.msg_type == MsgType::AlarmCid).unwrap();
        assert_eq!(
            (alarm.src_node, alarm.payload.as_slice()),
            (9, &b"1234181131010158"[..])
        );
        assert!(emu.inject_alarm(NodeId(9), "123").is_err());
    }

    #[test]
    fn trace_is_deterministic() {
        let run = || {
            let mut emu = emulator(5.0);
            emu.run_until(200);
            emu.trace_text()
        };
        let a = run();
        assert_eq!(a, run());
        let first = a.lines().next().unwrap();
        assert_eq!(first.split('\t').count(), 5);
    }
}
