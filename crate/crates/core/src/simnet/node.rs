//! Sensor-node state machine.
//!
//! The main loop wakes on a timer, samples, sends one reading toward the
//! coordinator and hibernates again. Frame reception is an interrupt: it is
//! handled whatever the mode and never moves the wake-up time.

use crate::error::{Error, Result};
use crate::netmodel::NodeId;
use crate::rng::mix;
use crate::wire::{CommandPayload, Opcode, Reading, SwitchState};

use super::frame::{FrameKind, RadioFrame};

pub type Tick = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeMode {
    Sampling,
    Sending,
    Hibernating,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeState {
    pub id: NodeId,
    pub coordinator: NodeId,
    pub mode: NodeMode,
    pub relay_switch: SwitchState,
    pub sample_period: Tick,
    pub next_wake: Tick,
    /// Last sample in hundredths of a degree.
    pub last_reading: Option<i32>,
    pub seed: u64,
}

impl NodeState {
    /// A hibernating node whose first wake-up is staggered within one period.
    pub fn new(id: NodeId, coordinator: NodeId, sample_period: Tick, seed: u64) -> Self {
        let period = sample_period.max(1);
        NodeState {
            id,
            coordinator,
            mode: NodeMode::Hibernating,
            relay_switch: SwitchState::Off,
            sample_period: period,
            next_wake: mix(seed ^ u64::from(id.get()).rotate_left(32)) % period,
            last_reading: None,
            seed,
        }
    }
}

/// Deterministic synthetic temperature, 18.00 to 29.99 degrees.
pub fn synthetic_reading(id: NodeId, now: Tick, seed: u64) -> i32 {
    let h = mix(seed ^ (u64::from(id.get()) << 40) ^ now);
    1800 + (h % 1200) as i32
}

pub fn node_tick(mut state: NodeState, now: Tick) -> (NodeState, Vec<RadioFrame>) {
    if now < state.next_wake {
        return (state, Vec::new());
    }
    state.mode = NodeMode::Sampling;
    let value = synthetic_reading(state.id, now, state.seed);
    state.last_reading = Some(value);

    state.mode = NodeMode::Sending;
    let payload = Reading::Sample {
        value,
        switch: state.relay_switch,
    }
    .encode();
    let frame = RadioFrame::new(
        state.id,
        state.coordinator,
        FrameKind::SensorReading,
        payload,
    )
    .expect("reading fits in a radio frame");

    while state.next_wake <= now {
        state.next_wake += state.sample_period;
    }
    state.mode = NodeMode::Hibernating;
    (state, vec![frame])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReceiveOutcome {
    /// Relayed one hop further along its route.
    Forward(RadioFrame),
    /// Delivered here, optionally answered with an unrouted reply.
    Consumed(Option<RadioFrame>),
}

pub fn node_on_receive(
    mut state: NodeState,
    frame: RadioFrame,
) -> Result<(NodeState, ReceiveOutcome)> {
    if frame.holder() != Some(state.id) {
        return Err(Error::MisroutedFrame {
            node: state.id.get(),
            route: frame.route.iter().map(|n| n.get()).collect(),
            hop_index: frame.hop_index,
        });
    }
    if !frame.at_destination() {
        let mut next = frame;
        next.hop_index += 1;
        return Ok((state, ReceiveOutcome::Forward(next)));
    }
    if frame.kind != FrameKind::Command {
        return Ok((state, ReceiveOutcome::Consumed(None)));
    }
    let Ok(command) = CommandPayload::decode(&frame.payload) else {
        return Ok((state, ReceiveOutcome::Consumed(None)));
    };
    match command.opcode {
        Opcode::SwitchOn => state.relay_switch = SwitchState::On,
        Opcode::SwitchOff => state.relay_switch = SwitchState::Off,
        Opcode::QuerySwitch => {}
    }
    let reply = Reading::CommandReply {
        opcode: command.opcode,
        switch: state.relay_switch,
    };
    let reply = RadioFrame::new(
        state.id,
        state.coordinator,
        FrameKind::SensorReading,
        reply.encode(),
    )
    .expect("reply fits in a radio frame");
    Ok((state, ReceiveOutcome::Consumed(Some(reply))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(id: u32, next_wake: Tick, period: Tick) -> NodeState {
        NodeState {
            next_wake,
            ..NodeState::new(NodeId(id), NodeId(1), period, 9)
        }
    }

    fn ids(v: &[u32]) -> Vec<NodeId> {
        v.iter().copied().map(NodeId).collect()
    }

    #[test]
    fn asleep_before_wake() {
        let s = state(4, 100, 60);
        let (after, frames) = node_tick(s.clone(), 50);
        assert_eq!(after, s);
        assert!(frames.is_empty());
    }

    #[test]
    fn due_tick_samples_once() {
        let (after, frames) = node_tick(state(4, 100, 60), 100);
        assert_eq!(after.next_wake, 160);
        assert_eq!(after.mode, NodeMode::Hibernating);
        assert_eq!(frames.len(), 1);
        let f = &frames[0];
        assert_eq!(
            (f.kind, f.src, f.dst),
            (FrameKind::SensorReading, NodeId(4), NodeId(1))
        );
        let value = synthetic_reading(NodeId(4), 100, 9);
        assert_eq!(after.last_reading, Some(value));
        assert_eq!(
            Reading::decode(&f.payload).unwrap(),
            Reading::Sample {
                value,
                switch: SwitchState::Off
            }
        );
    }

    #[test]
    fn one_frame_per_due_tick() {
        let (s, a) = node_tick(state(4, 10, 1), 10);
        let (s, b) = node_tick(s, 11);
        let (_, c) = node_tick(s, 11);
        assert_eq!((a.len(), b.len(), c.len()), (1, 1, 0));
    }

    #[test]
    fn late_tick_skips_missed_wakes() {
        let (s, frames) = node_tick(state(4, 100, 60), 250);
        assert_eq!(frames.len(), 1);
        assert_eq!(s.next_wake, 280);
    }

    #[test]
    fn relay_forwards() {
        let frame = RadioFrame::new(NodeId(1), NodeId(10), FrameKind::Command, vec![10, 1])
            .unwrap()
            .with_route(ids(&[1, 5, 10]), 1);
        let s = state(5, 100, 60);
        let (after, outcome) = node_on_receive(s.clone(), frame).unwrap();
        assert_eq!(after, s);
        match outcome {
            ReceiveOutcome::Forward(f) => assert_eq!(f.hop_index, 2),
            other => panic!("expected forward, got {other:?}"),
        }
    }

    #[test]
    fn destination_applies_switch_command() {
        let frame = RadioFrame::new(NodeId(1), NodeId(10), FrameKind::Command, vec![10, 1])
            .unwrap()
            .with_route(ids(&[1, 5, 10]), 2);
        let s = state(10, 100, 60);
        let (after, outcome) = node_on_receive(s, frame).unwrap();
        assert_eq!(after.relay_switch, SwitchState::On);
        assert_eq!(after.next_wake, 100);
        let ReceiveOutcome::Consumed(Some(reply)) = outcome else {
            panic!("expected a reply")
        };
        assert_eq!(reply.dst, NodeId(1));
        assert_eq!(
            Reading::decode(&reply.payload).unwrap(),
            Reading::CommandReply {
                opcode: Opcode::SwitchOn,
                switch: SwitchState::On
            }
        );

        let off = RadioFrame::new(NodeId(1), NodeId(10), FrameKind::Command, vec![10, 2])
            .unwrap()
            .with_route(ids(&[1, 5, 10]), 2);
        let (after, _) = node_on_receive(after, off).unwrap();
        assert_eq!(after.relay_switch, SwitchState::Off);
    }

    #[test]
    fn off_route_frame_is_misrouted() {
        let frame = RadioFrame::new(NodeId(1), NodeId(10), FrameKind::Command, vec![10, 1])
            .unwrap()
            .with_route(ids(&[1, 5, 10]), 1);
        let err = node_on_receive(state(4, 0, 10), frame).unwrap_err();
        assert!(matches!(err, Error::MisroutedFrame { node: 4, .. }));
    }

    #[test]
    fn oversized_radio_payload() {
        assert!(RadioFrame::new(NodeId(1), NodeId(2), FrameKind::Alarm, vec![0; 97]).is_err());
    }
}
