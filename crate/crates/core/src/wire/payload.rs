//! Payload layouts carried inside datagrams and radio frames.
//!
//! ```text
//! COMMAND         target(1) opcode(1)
//! ACK (command)   target(1) opcode(1) switch(1)
//! NACK (command)  target(1) opcode(1) reason(1)
//! reading sample  0x00 value(4, big-endian i32) switch(1)
//! command reply   0x01 opcode(1) switch(1)
//! ```

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PayloadError {
    #[error("payload of {found} bytes, expected {expected}")]
    Length { expected: usize, found: usize },
    #[error("unknown opcode {0:#04x}")]
    UnknownOpcode(u8),
    #[error("unknown reading tag {0:#04x}")]
    UnknownTag(u8),
    #[error("invalid switch state {0:#04x}")]
    BadSwitch(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Opcode {
    SwitchOn = 0x01,
    SwitchOff = 0x02,
    QuerySwitch = 0x03,
}

impl Opcode {
    pub fn from_byte(b: u8) -> Result<Self, PayloadError> {
        match b {
            0x01 => Ok(Opcode::SwitchOn),
            0x02 => Ok(Opcode::SwitchOff),
            0x03 => Ok(Opcode::QuerySwitch),
            other => Err(PayloadError::UnknownOpcode(other)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Opcode::SwitchOn => "on",
            Opcode::SwitchOff => "off",
            Opcode::QuerySwitch => "query",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "on" | "switch-on" | "switchon" => Some(Opcode::SwitchOn),
            "off" | "switch-off" | "switchoff" => Some(Opcode::SwitchOff),
            "query" | "query-switch" | "queryswitch" => Some(Opcode::QuerySwitch),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SwitchState {
    On,
    #[default]
    Off,
}

impl SwitchState {
    fn byte(self) -> u8 {
        match self {
            SwitchState::On => 1,
            SwitchState::Off => 0,
        }
    }

    fn from_byte(b: u8) -> Result<Self, PayloadError> {
        match b {
            1 => Ok(SwitchState::On),
            0 => Ok(SwitchState::Off),
            other => Err(PayloadError::BadSwitch(other)),
        }
    }
}

fn expect_len(bytes: &[u8], expected: usize) -> Result<(), PayloadError> {
    if bytes.len() == expected {
        Ok(())
    } else {
        Err(PayloadError::Length {
            expected,
            found: bytes.len(),
        })
    }
}

/// A switch command for one node. Only the low 8 bits of the target ID
/// travel on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CommandPayload {
    pub target: u8,
    pub opcode: Opcode,
}

impl CommandPayload {
    pub fn new(target: u32, opcode: Opcode) -> Self {
        CommandPayload {
            target: (target & 0xFF) as u8,
            opcode,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        vec![self.target, self.opcode as u8]
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, PayloadError> {
        expect_len(bytes, 2)?;
        Ok(CommandPayload {
            target: bytes[0],
            opcode: Opcode::from_byte(bytes[1])?,
        })
    }

    pub fn ack(&self, switch: SwitchState) -> Vec<u8> {
        vec![self.target, self.opcode as u8, switch.byte()]
    }

    pub fn nack(&self, reason: NackReason) -> Vec<u8> {
        vec![self.target, self.opcode as u8, reason as u8]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum NackReason {
    NoPath = 0x01,
    UnknownNode = 0x02,
    Malformed = 0x03,
    BadAlarm = 0x04,
}

/// Payload of a node's sensor-reading frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reading {
    Sample { value: i32, switch: SwitchState },
    CommandReply { opcode: Opcode, switch: SwitchState },
}

impl Reading {
    pub fn encode(&self) -> Vec<u8> {
        match *self {
            Reading::Sample { value, switch } => {
                let mut out = vec![0x00];
                out.extend_from_slice(&value.to_be_bytes());
                out.push(switch.byte());
                out
            }
            Reading::CommandReply { opcode, switch } => vec![0x01, opcode as u8, switch.byte()],
        }
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, PayloadError> {
        match bytes.first() {
            Some(0x00) => {
                expect_len(bytes, 6)?;
                Ok(Reading::Sample {
                    value: i32::from_be_bytes(bytes[1..5].try_into().unwrap()),
                    switch: SwitchState::from_byte(bytes[5])?,
                })
            }
            Some(0x01) => {
                expect_len(bytes, 3)?;
                Ok(Reading::CommandReply {
                    opcode: Opcode::from_byte(bytes[1])?,
                    switch: SwitchState::from_byte(bytes[2])?,
                })
            }
            Some(&tag) => Err(PayloadError::UnknownTag(tag)),
            None => Err(PayloadError::Length {
                expected: 1,
                found: 0,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_layout() {
        let c = CommandPayload::new(10, Opcode::SwitchOn);
        assert_eq!(c.encode(), [10, 1]);
        assert_eq!(CommandPayload::decode(&[10, 1]).unwrap(), c);
        assert_eq!(CommandPayload::new(0x1_0A, Opcode::SwitchOff).target, 0x0A);
        assert_eq!(
            CommandPayload::decode(&[10, 9]).unwrap_err(),
            PayloadError::UnknownOpcode(9)
        );
        assert!(CommandPayload::decode(&[10]).is_err());
    }

    #[test]
    fn reading_layouts() {
        let s = Reading::Sample {
            value: -2,
            switch: SwitchState::On,
        };
        assert_eq!(s.encode(), [0, 0xFF, 0xFF, 0xFF, 0xFE, 1]);
        assert_eq!(Reading::decode(&s.encode()).unwrap(), s);
        let r = Reading::CommandReply {
            opcode: Opcode::QuerySwitch,
            switch: SwitchState::Off,
        };
        assert_eq!(Reading::decode(&r.encode()).unwrap(), r);
        assert_eq!(
            Reading::decode(&[7]).unwrap_err(),
            PayloadError::UnknownTag(7)
        );
        assert!(Reading::decode(&[]).is_err());
        assert!(Reading::decode(&[0, 1, 2]).is_err());
    }

    #[test]
    fn opcode_names() {
        for op in [Opcode::SwitchOn, Opcode::SwitchOff, Opcode::QuerySwitch] {
            assert_eq!(Opcode::parse(op.name()), Some(op));
        }
        assert_eq!(Opcode::parse("toggle"), None);
    }
}
