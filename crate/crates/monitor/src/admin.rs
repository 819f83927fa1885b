//! Line-delimited JSON admin protocol.
//!
//! One request object per line, one response object per line:
//!
//! ```text
//! {"op":"query","node":7,"kind":"reading","limit":10}
//! {"op":"query","limit":10,"cursor":10}
//! {"op":"snapshot"}
//! {"op":"send_command","target":10,"opcode":"on","wait_ms":5000}
//! {"op":"ticket","id":0}
//! {"op":"sessions"}
//! ```
//!
//! Responses carry `"ok": true` plus the result fields, or `"ok": false`
//! and an `"error"` string.

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream};
use std::time::Duration;

use homenet::wire::Opcode;
use serde::{Deserialize, Serialize};

use crate::error::{MonitorError, Result};
use crate::record::{HistoryFilter, RecordKind, SensorRecord};
use crate::service::Service;
use crate::ticket::CommandTicket;

pub const DEFAULT_QUERY_LIMIT: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AdminRequest {
    Query {
        #[serde(flatten)]
        filter: HistoryFilter,
        #[serde(default = "default_limit")]
        limit: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cursor: Option<u64>,
    },
    Snapshot,
    SendCommand {
        target: u32,
        opcode: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        wait_ms: Option<u64>,
    },
    Ticket {
        id: u64,
    },
    Sessions,
}

fn default_limit() -> usize {
    DEFAULT_QUERY_LIMIT
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CidView {
    pub account: String,
    pub message_type: String,
    pub qualifier: String,
    pub event_code: u16,
    pub partition: u8,
    pub zone: u16,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordView {
    pub ordinal: u64,
    pub received_at: u64,
    pub coordinator_id: u32,
    pub src_node: u16,
    pub seq: u16,
    pub kind: RecordKind,
    pub payload_hex: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cid: Option<CidView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_error: Option<String>,
}

impl From<&SensorRecord> for RecordView {
    fn from(r: &SensorRecord) -> Self {
        RecordView {
            ordinal: r.ordinal,
            received_at: r.received_at,
            coordinator_id: r.coordinator_id,
            src_node: r.src_node,
            seq: r.seq,
            kind: r.kind,
            payload_hex: hex::encode(&r.payload),
            cid: r.cid.as_ref().map(|c| CidView {
                account: c.account.clone(),
                message_type: c.message_type.clone(),
                qualifier: c.qualifier.name().to_string(),
                event_code: c.event_code,
                partition: c.partition,
                zone: c.zone,
            }),
            parse_error: r.parse_error.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TicketView {
    pub ticket_id: u64,
    pub target_node: u32,
    pub opcode: String,
    pub state: String,
    pub coordinator_id: u32,
    pub seq: u16,
}

impl From<&CommandTicket> for TicketView {
    fn from(t: &CommandTicket) -> Self {
        TicketView {
            ticket_id: t.ticket_id,
            target_node: t.target_node,
            opcode: t.opcode.name().to_string(),
            state: t.state.name().to_string(),
            coordinator_id: t.coordinator_id,
            seq: t.seq,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdminResponse {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub records: Option<Vec<RecordView>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_cursor: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ticket: Option<TicketView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sessions: Option<Vec<u32>>,
}

impl AdminResponse {
    fn ok() -> Self {
        AdminResponse {
            ok: true,
            ..Default::default()
        }
    }

    fn error(e: impl ToString) -> Self {
        AdminResponse {
            ok: false,
            error: Some(e.to_string()),
            ..Default::default()
        }
    }
}

pub fn handle_request(service: &Service, request: AdminRequest) -> AdminResponse {
    match execute(service, request) {
        Ok(r) => r,
        Err(e) => AdminResponse::error(e),
    }
}

fn execute(service: &Service, request: AdminRequest) -> Result<AdminResponse> {
    Ok(match request {
        AdminRequest::Query {
            filter,
            limit,
            cursor,
        } => {
            let page = service.query_history(&filter, limit, cursor)?;
            AdminResponse {
                records: Some(page.records.iter().map(RecordView::from).collect()),
                next_cursor: page.next_cursor,
                ..AdminResponse::ok()
            }
        }
        AdminRequest::Snapshot => AdminResponse {
            records: Some(
                service
                    .live_snapshot()
                    .iter()
                    .map(RecordView::from)
                    .collect(),
            ),
            ..AdminResponse::ok()
        },
        AdminRequest::SendCommand {
            target,
            opcode,
            wait_ms,
        } => {
            let opcode = Opcode::parse(&opcode)
                .ok_or_else(|| MonitorError::InvalidInput(format!("unknown opcode {opcode:?}")))?;
            let mut ticket = service.dispatch_command(target, opcode)?;
            if let Some(ms) = wait_ms {
                ticket = service.wait_ticket(ticket.ticket_id, Duration::from_millis(ms))?;
            }
            AdminResponse {
                ticket: Some(TicketView::from(&ticket)),
                ..AdminResponse::ok()
            }
        }
        AdminRequest::Ticket { id } => AdminResponse {
            ticket: Some(TicketView::from(&service.ticket(id)?)),
            ..AdminResponse::ok()
        },
        AdminRequest::Sessions => AdminResponse {
            sessions: Some(service.sessions()),
            ..AdminResponse::ok()
        },
    })
}

/// Answers one line of input.
pub fn handle_line(service: &Service, line: &str) -> AdminResponse {
    match serde_json::from_str::<AdminRequest>(line) {
        Ok(request) => handle_request(service, request),
        Err(e) => AdminResponse::error(format!("bad request: {e}")),
    }
}

/// Blocking admin client, one request at a time.
pub struct AdminClient {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl AdminClient {
    pub fn connect(addr: SocketAddr) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        let writer = stream.try_clone()?;
        Ok(AdminClient {
            reader: BufReader::new(stream),
            writer,
        })
    }

    pub fn set_timeout(&self, timeout: Option<Duration>) -> Result<()> {
        self.writer.set_read_timeout(timeout)?;
        Ok(())
    }

    pub fn request(&mut self, request: &AdminRequest) -> Result<AdminResponse> {
        let mut line =
            serde_json::to_string(request).map_err(|e| MonitorError::Protocol(e.to_string()))?;
        line.push('\n');
        self.writer.write_all(line.as_bytes())?;
        let mut answer = String::new();
        if self.reader.read_line(&mut answer)? == 0 {
            return Err(MonitorError::Protocol(
                "server closed the connection".into(),
            ));
        }
        serde_json::from_str(&answer).map_err(|e| MonitorError::Protocol(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_wire_format() {
        let q: AdminRequest =
            serde_json::from_str(r#"{"op":"query","node":7,"kind":"alarm"}"#).unwrap();
        assert_eq!(
            q,
            AdminRequest::Query {
                filter: HistoryFilter {
                    node: Some(7),
                    kind: Some(RecordKind::Alarm),
                    ..Default::default()
                },
                limit: DEFAULT_QUERY_LIMIT,
                cursor: None,
            }
        );
        let s = serde_json::to_string(&AdminRequest::SendCommand {
            target: 10,
            opcode: "on".into(),
            wait_ms: None,
        })
        .unwrap();
        assert_eq!(s, r#"{"op":"send_command","target":10,"opcode":"on"}"#);
        assert_eq!(
            serde_json::to_string(&AdminRequest::Snapshot).unwrap(),
            r#"{"op":"snapshot"}"#
        );
    }

    #[test]
    fn errors_are_reported_inline() {
        let dir = tempfile::tempdir().unwrap();
        let svc = Service::open(dir.path().join("log"), Duration::from_secs(1)).unwrap();
        let r = handle_line(&svc, "not json");
        assert!(!r.ok);
        let r = handle_line(&svc, r#"{"op":"query","kind":"gossip"}"#);
        assert!(!r.ok);
        let r = handle_line(&svc, r#"{"op":"send_command","target":10,"opcode":"on"}"#);
        assert_eq!(r.error.as_deref(), Some("no coordinator is connected"));
        let r = handle_line(&svc, r#"{"op":"query","since":9,"until":1}"#);
        assert!(r.error.unwrap().contains("inverted"));
        let r = handle_line(&svc, r#"{"op":"sessions"}"#);
        assert_eq!(r.sessions, Some(vec![]));
    }
}
