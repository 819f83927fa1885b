use homenet::wire::{decode_cid, CidEvent, Datagram, MsgType};
use serde::{Deserialize, Serialize};

use crate::error::{MonitorError, Result};
use crate::store::StoredEntry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Reading,
    Alarm,
    Heartbeat,
}

impl RecordKind {
    pub fn of(msg_type: MsgType) -> Option<Self> {
        match msg_type {
            MsgType::SensorData => Some(RecordKind::Reading),
            MsgType::AlarmCid => Some(RecordKind::Alarm),
            MsgType::Heartbeat => Some(RecordKind::Heartbeat),
            _ => None,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "reading" => Ok(RecordKind::Reading),
            "alarm" => Ok(RecordKind::Alarm),
            "heartbeat" => Ok(RecordKind::Heartbeat),
            other => Err(MonitorError::InvalidInput(format!(
                "unknown record kind {other:?}"
            ))),
        }
    }
}

/// One persisted uplink message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorRecord {
    /// Position in the log, starting at 0.
    pub ordinal: u64,
    pub received_at: u64,
    pub coordinator_id: u32,
    pub src_node: u16,
    pub seq: u16,
    pub kind: RecordKind,
    pub payload: Vec<u8>,
    pub cid: Option<CidEvent>,
    pub parse_error: Option<String>,
}

impl SensorRecord {
    /// Rebuilds a record from a log entry; alarms are decoded again.
    pub fn from_entry(ordinal: u64, entry: &StoredEntry) -> Option<Self> {
        let d: &Datagram = &entry.datagram;
        let kind = RecordKind::of(d.msg_type)?;
        let (cid, parse_error) = if kind == RecordKind::Alarm {
            match std::str::from_utf8(&d.payload)
                .map_err(|e| e.to_string())
                .and_then(|s| decode_cid(s).map_err(|e| e.to_string()))
            {
                Ok(event) => (Some(event), None),
                Err(e) => (None, Some(e)),
            }
        } else {
            (None, None)
        };
        Some(SensorRecord {
            ordinal,
            received_at: entry.received_at,
            coordinator_id: entry.coordinator_id,
            src_node: d.src_node,
            seq: d.seq,
            kind,
            payload: d.payload.clone(),
            cid,
            parse_error,
        })
    }
}

/// History selection. Every present field must match.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryFilter {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<RecordKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinator: Option<u32>,
    /// Inclusive lower bound on `received_at`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub since: Option<u64>,
    /// Exclusive upper bound on `received_at`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub until: Option<u64>,
}

impl HistoryFilter {
    pub fn validate(&self) -> Result<()> {
        if let (Some(since), Some(until)) = (self.since, self.until) {
            if since > until {
                return Err(MonitorError::InvalidInput(format!(
                    "time range is inverted: since {since} > until {until}"
                )));
            }
        }
        Ok(())
    }

    pub fn matches(&self, r: &SensorRecord) -> bool {
        self.node.is_none_or(|n| r.src_node == n)
            && self.kind.is_none_or(|k| r.kind == k)
            && self.coordinator.is_none_or(|c| r.coordinator_id == c)
            && self.since.is_none_or(|t| r.received_at >= t)
            && self.until.is_none_or(|t| r.received_at < t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Page {
    pub records: Vec<SensorRecord>,
    /// Pass back as `cursor` to continue after the last returned record.
    pub next_cursor: Option<u64>,
}
