//! Monitoring-center state shared by every session.
//!
//! Appends go through the single `Store` mutex; the in-memory index sits
//! behind an `RwLock` so queries see a consistent prefix of the log.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::{Hash, Hasher};
use std::path::Path;
use std::sync::mpsc::Sender;
use std::sync::{Condvar, Mutex, RwLock};
use std::time::{Duration, Instant};

use homenet::wire::{CommandPayload, Datagram, MsgType, NackReason, Opcode};
use log::{debug, info, warn};

use crate::error::{MonitorError, Result};
use crate::record::{HistoryFilter, Page, SensorRecord};
use crate::store::Store;
use crate::ticket::{CommandTicket, TicketState};

pub const DEFAULT_COMMAND_TIMEOUT: Duration = Duration::from_secs(5);
const JOURNAL_LIMIT: usize = 4096;

pub type SessionId = u32;

struct Session {
    outbound: Sender<Datagram>,
    /// (seq, type, payload hash) of every stored datagram.
    seen: HashSet<(u16, u8, u64)>,
    next_command_seq: u16,
}

#[derive(Default)]
struct Index {
    records: Vec<SensorRecord>,
    latest: BTreeMap<(u32, u16), usize>,
}

impl Index {
    fn push(&mut self, record: SensorRecord) {
        let key = (record.coordinator_id, record.src_node);
        self.latest.insert(key, self.records.len());
        self.records.push(record);
    }
}

#[derive(Default)]
struct Tickets {
    all: Vec<CommandTicket>,
    by_seq: HashMap<(SessionId, u16), u64>,
}

pub struct Service {
    store: Mutex<Store>,
    index: RwLock<Index>,
    sessions: Mutex<BTreeMap<SessionId, Session>>,
    next_session: Mutex<SessionId>,
    tickets: Mutex<Tickets>,
    ticket_changed: Condvar,
    command_timeout: Duration,
    journal: Mutex<Vec<String>>,
}

fn payload_hash(payload: &[u8]) -> u64 {
    let mut h = DefaultHasher::new();
    payload.hash(&mut h);
    h.finish()
}

impl Service {
    /// Opens the record log at `path` and rebuilds the index from it.
    pub fn open(path: impl AsRef<Path>, command_timeout: Duration) -> Result<Self> {
        let (store, entries) = Store::open(path)?;
        let mut index = Index::default();
        let mut max_session = 0;
        for entry in &entries {
            max_session = max_session.max(entry.coordinator_id);
            if let Some(record) = SensorRecord::from_entry(index.records.len() as u64, entry) {
                index.push(record);
            }
        }
        info!(
            "{}: recovered {} records",
            store.path().display(),
            index.records.len()
        );
        Ok(Service {
            store: Mutex::new(store),
            index: RwLock::new(index),
            sessions: Mutex::new(BTreeMap::new()),
            next_session: Mutex::new(max_session + 1),
            tickets: Mutex::new(Tickets::default()),
            ticket_changed: Condvar::new(),
            command_timeout,
            journal: Mutex::new(Vec::new()),
        })
    }

    pub fn note(&self, line: String) {
        info!("{line}");
        let mut journal = self.journal.lock().unwrap();
        if journal.len() == JOURNAL_LIMIT {
            journal.remove(0);
        }
        journal.push(line);
    }

    /// Recent session-level events: opens, closes, protocol errors.
    pub fn journal(&self) -> Vec<String> {
        self.journal.lock().unwrap().clone()
    }

    /// Registers a coordinator connection; datagrams for it go to `outbound`.
    pub fn open_session(&self, outbound: Sender<Datagram>) -> SessionId {
        let id = {
            let mut next = self.next_session.lock().unwrap();
            let id = *next;
            *next += 1;
            id
        };
        self.sessions.lock().unwrap().insert(
            id,
            Session {
                outbound,
                seen: HashSet::new(),
                next_command_seq: 0,
            },
        );
        self.note(format!("session {id} opened"));
        id
    }

    pub fn close_session(&self, id: SessionId, reason: &str) {
        if self.sessions.lock().unwrap().remove(&id).is_some() {
            self.note(format!("session {id} closed: {reason}"));
        }
    }

    /// Queues `d` on the session's outbound channel; false if it is gone.
    pub fn send_to(&self, session: SessionId, d: Datagram) -> bool {
        match self.sessions.lock().unwrap().get(&session) {
            Some(s) => s.outbound.send(d).is_ok(),
            None => false,
        }
    }

    pub fn sessions(&self) -> Vec<SessionId> {
        self.sessions.lock().unwrap().keys().copied().collect()
    }

    /// Processes one datagram from `session` and returns the reply to send,
    /// if any.
    pub fn handle_datagram(&self, session: SessionId, d: &Datagram) -> Option<Datagram> {
        match d.msg_type {
            MsgType::SensorData | MsgType::AlarmCid | MsgType::Heartbeat => {
                Some(self.ingest(session, d))
            }
            MsgType::DiscoveryReport => {
                self.note(format!(
                    "session {session}: discovery report from node {} ({} bytes)",
                    d.src_node,
                    d.payload.len()
                ));
                Some(reply(MsgType::Ack, d.seq, Vec::new()))
            }
            MsgType::Ack | MsgType::Nack => {
                self.resolve(session, d);
                None
            }
            MsgType::Command => Some(reply(
                MsgType::Nack,
                d.seq,
                vec![NackReason::Malformed as u8],
            )),
        }
    }

    fn ingest(&self, session: SessionId, d: &Datagram) -> Datagram {
        let key = (d.seq, d.msg_type.code(), payload_hash(&d.payload));
        let mut store = self.store.lock().unwrap();
        {
            let mut sessions = self.sessions.lock().unwrap();
            if let Some(s) = sessions.get_mut(&session) {
                if !s.seen.insert(key) {
                    debug!("session {session}: duplicate {} seq {}", d.msg_type, d.seq);
                    return reply(MsgType::Ack, d.seq, Vec::new());
                }
            }
        }
        let entry = match store.append(session, d) {
            Ok(entry) => entry,
            Err(e) => {
                warn!("session {session}: store append failed: {e}");
                if let Some(s) = self.sessions.lock().unwrap().get_mut(&session) {
                    s.seen.remove(&key);
                }
                return reply(MsgType::Nack, d.seq, Vec::new());
            }
        };
        let mut index = self.index.write().unwrap();
        let record = SensorRecord::from_entry(index.records.len() as u64, &entry)
            .expect("ingested types always form records");
        let failed = record.parse_error.clone();
        index.push(record);
        drop(index);
        drop(store);
        match failed {
            Some(err) => {
                self.note(format!(
                    "session {session}: alarm seq {} from node {} does not parse: {err}",
                    d.seq, d.src_node
                ));
                reply(MsgType::Nack, d.seq, vec![NackReason::BadAlarm as u8])
            }
            None => reply(MsgType::Ack, d.seq, Vec::new()),
        }
    }

    fn resolve(&self, session: SessionId, d: &Datagram) {
        let mut tickets = self.tickets.lock().unwrap();
        let Some(&id) = tickets.by_seq.get(&(session, d.seq)) else {
            self.note(format!(
                "session {session}: {} for unknown seq {} ignored",
                d.msg_type, d.seq
            ));
            return;
        };
        let next = if d.msg_type == MsgType::Ack {
            TicketState::Acked
        } else {
            TicketState::Nacked
        };
        let ticket = &mut tickets.all[id as usize];
        if ticket.advance(next) {
            tickets.by_seq.remove(&(session, d.seq));
            self.ticket_changed.notify_all();
        } else {
            debug!(
                "ticket {id}: ignoring {} in state {:?}",
                d.msg_type, ticket.state
            );
        }
    }

    /// Sends a switch command through the lowest-numbered live session.
    pub fn dispatch_command(&self, target_node: u32, opcode: Opcode) -> Result<CommandTicket> {
        let session = *self
            .sessions
            .lock()
            .unwrap()
            .keys()
            .next()
            .ok_or(MonitorError::NoCoordinator)?;
        self.dispatch_command_via(session, target_node, opcode)
    }

    pub fn dispatch_command_via(
        &self,
        session: SessionId,
        target_node: u32,
        opcode: Opcode,
    ) -> Result<CommandTicket> {
        let mut tickets = self.tickets.lock().unwrap();
        let mut sessions = self.sessions.lock().unwrap();
        let s = sessions
            .get_mut(&session)
            .ok_or(MonitorError::NoCoordinator)?;
        let seq = s.next_command_seq;
        s.next_command_seq = s.next_command_seq.wrapping_add(1);

        let ticket_id = tickets.all.len() as u64;
        let mut ticket = CommandTicket {
            ticket_id,
            target_node,
            opcode,
            state: TicketState::Queued,
            coordinator_id: session,
            seq,
            sent_at: None,
        };
        let payload = CommandPayload::new(target_node, opcode).encode();
        let datagram = Datagram::new(MsgType::Command, seq, 0, payload);
        if s.outbound.send(datagram).is_ok() {
            ticket.advance(TicketState::Sent);
            ticket.sent_at = Some(Instant::now());
            // A wrapped seq supersedes whatever older ticket held it.
            if let Some(old) = tickets.by_seq.insert((session, seq), ticket_id) {
                let old = &mut tickets.all[old as usize];
                old.advance(TicketState::TimedOut);
            }
        } else {
            ticket.advance(TicketState::TimedOut);
            drop(sessions);
            self.close_session(session, "outbound channel closed");
        }
        tickets.all.push(ticket.clone());
        self.ticket_changed.notify_all();
        Ok(ticket)
    }

    pub fn ticket(&self, id: u64) -> Result<CommandTicket> {
        self.tickets
            .lock()
            .unwrap()
            .all
            .get(id as usize)
            .cloned()
            .ok_or(MonitorError::UnknownTicket(id))
    }

    /// Marks every ticket sent longer ago than the command timeout as
    /// timed out. Returns how many expired.
    pub fn expire_tickets(&self, now: Instant) -> usize {
        let mut tickets = self.tickets.lock().unwrap();
        let mut expired = Vec::new();
        for t in tickets.all.iter_mut() {
            if t.state == TicketState::Sent
                && t.sent_at
                    .is_some_and(|at| now.saturating_duration_since(at) >= self.command_timeout)
            {
                t.advance(TicketState::TimedOut);
                expired.push((t.coordinator_id, t.seq));
            }
        }
        for key in &expired {
            tickets.by_seq.remove(key);
        }
        if !expired.is_empty() {
            self.ticket_changed.notify_all();
        }
        expired.len()
    }

    /// Blocks until the ticket is terminal or `wait` elapses, expiring it
    /// on the way if its deadline passes.
    pub fn wait_ticket(&self, id: u64, wait: Duration) -> Result<CommandTicket> {
        let deadline = Instant::now() + wait;
        let mut tickets = self.tickets.lock().unwrap();
        loop {
            let ticket = tickets
                .all
                .get(id as usize)
                .cloned()
                .ok_or(MonitorError::UnknownTicket(id))?;
            let now = Instant::now();
            if ticket.state.is_terminal() || now >= deadline {
                return Ok(ticket);
            }
            let step = (deadline - now).min(Duration::from_millis(50));
            tickets = self.ticket_changed.wait_timeout(tickets, step).unwrap().0;
            drop(tickets);
            self.expire_tickets(Instant::now());
            tickets = self.tickets.lock().unwrap();
        }
    }

    /// Matching records in received order, at most `limit`, starting after
    /// the record whose ordinal is `cursor - 1`.
    pub fn query_history(
        &self,
        filter: &HistoryFilter,
        limit: usize,
        cursor: Option<u64>,
    ) -> Result<Page> {
        filter.validate()?;
        if limit == 0 {
            return Err(MonitorError::InvalidInput("limit must be positive".into()));
        }
        let index = self.index.read().unwrap();
        let start = cursor.unwrap_or(0) as usize;
        let mut records = Vec::new();
        let mut next_cursor = None;
        for r in index
            .records
            .iter()
            .skip(start)
            .filter(|r| filter.matches(r))
        {
            if records.len() == limit {
                next_cursor = Some(r.ordinal);
                break;
            }
            records.push(r.clone());
        }
        Ok(Page {
            records,
            next_cursor,
        })
    }

    /// The most recent record of every (coordinator, node) pair.
    pub fn live_snapshot(&self) -> Vec<SensorRecord> {
        let index = self.index.read().unwrap();
        index
            .latest
            .values()
            .map(|&i| index.records[i].clone())
            .collect()
    }

    pub fn record_count(&self) -> usize {
        self.index.read().unwrap().records.len()
    }

    pub fn sync(&self) -> Result<()> {
        self.store.lock().unwrap().sync()
    }
}

fn reply(msg_type: MsgType, seq: u16, payload: Vec<u8>) -> Datagram {
    Datagram::new(msg_type, seq, 0, payload)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::RecordKind;
    use homenet::wire::{Reading, SwitchState};
    use std::sync::mpsc::{channel, Receiver};

    fn service(dir: &tempfile::TempDir) -> Service {
        Service::open(dir.path().join("log"), Duration::from_millis(100)).unwrap()
    }

    fn session(svc: &Service) -> (SessionId, Receiver<Datagram>) {
        let (tx, rx) = channel();
        (svc.open_session(tx), rx)
    }

    fn reading(seq: u16, node: u16, value: i32) -> Datagram {
        let payload = Reading::Sample {
            value,
            switch: SwitchState::Off,
        }
        .encode();
        Datagram::new(MsgType::SensorData, seq, node, payload)
    }

    #[test]
    fn reading_is_acked_and_stored() {
        let dir = tempfile::tempdir().unwrap();
        let svc = service(&dir);
        let (s, _rx) = session(&svc);
        let r = svc.handle_datagram(s, &reading(7, 3, 2000)).unwrap();
        assert_eq!((r.msg_type, r.seq), (MsgType::Ack, 7));
        assert_eq!(svc.record_count(), 1);
    }

    #[test]
    fn alarm_is_parsed() {
        let dir = tempfile::tempdir().unwrap();
        let svc = service(&dir);
        let (s, _rx) = session(&svc);
        let alarm = Datagram::new(MsgType::AlarmCid, 1, 1, b"1234181131010158".to_vec());
        assert_eq!(
            svc.handle_datagram(s, &alarm).unwrap().msg_type,
            MsgType::Ack
        );
        let page = svc
            .query_history(
                &HistoryFilter {
                    kind: Some(RecordKind::Alarm),
                    ..Default::default()
                },
                10,
                None,
            )
            .unwrap();
        assert_eq!(page.records[0].cid.as_ref().unwrap().event_code, 131);
    }

    #[test]
    fn bad_alarm_is_stored_raw_and_nacked() {
        let dir = tempfile::tempdir().unwrap();
        let svc = service(&dir);
        let (s, _rx) = session(&svc);
        let alarm = Datagram::new(MsgType::AlarmCid, 2, 1, b"1234181131010159".to_vec());
        let r = svc.handle_datagram(s, &alarm).unwrap();
        assert_eq!((r.msg_type, r.seq), (MsgType::Nack, 2));
        let rec = &svc.live_snapshot()[0];
        assert!(rec.cid.is_none());
        assert!(rec
            .parse_error
            .as_deref()
            .unwrap()
            .contains("multiple of 15"));
        assert_eq!(rec.payload, b"1234181131010159");
    }

    #[test]
    fn duplicates_are_acked_but_stored_once() {
        let dir = tempfile::tempdir().unwrap();
        let svc = service(&dir);
        let (s, _rx) = session(&svc);
        let d = reading(4, 2, 1900);
        for _ in 0..3 {
            assert_eq!(svc.handle_datagram(s, &d).unwrap().msg_type, MsgType::Ack);
        }
        assert_eq!(svc.record_count(), 1);
        // Same seq after wraparound with new content is a new record.
        svc.handle_datagram(s, &reading(4, 2, 1901));
        assert_eq!(svc.record_count(), 2);
        // Another session may reuse the seq.
        let (s2, _rx2) = session(&svc);
        svc.handle_datagram(s2, &d);
        assert_eq!(svc.record_count(), 3);
    }

    #[test]
    fn unknown_ack_is_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let svc = service(&dir);
        let (s, _rx) = session(&svc);
        assert!(svc
            .handle_datagram(s, &Datagram::new(MsgType::Ack, 99, 1, vec![]))
            .is_none());
        assert!(svc.journal().iter().any(|l| l.contains("unknown seq 99")));
    }

    #[test]
    fn command_ticket_lifecycle() {
        let dir = tempfile::tempdir().unwrap();
        let svc = service(&dir);
        assert!(matches!(
            svc.dispatch_command(10, Opcode::SwitchOn),
            Err(MonitorError::NoCoordinator)
        ));
        let (s, rx) = session(&svc);
        let t = svc.dispatch_command(10, Opcode::SwitchOn).unwrap();
        assert_eq!(t.state, TicketState::Sent);
        let sent = rx.try_recv().unwrap();
        assert_eq!(sent.msg_type, MsgType::Command);
        assert_eq!(sent.payload, vec![10, 1]);
        svc.handle_datagram(
            s,
            &Datagram::new(MsgType::Ack, sent.seq, 10, vec![10, 1, 1]),
        );
        assert_eq!(svc.ticket(t.ticket_id).unwrap().state, TicketState::Acked);
        // A late NACK cannot move it back.
        svc.handle_datagram(s, &Datagram::new(MsgType::Nack, sent.seq, 10, vec![]));
        assert_eq!(svc.ticket(t.ticket_id).unwrap().state, TicketState::Acked);

        let t2 = svc.dispatch_command(10, Opcode::SwitchOff).unwrap();
        let sent = rx.try_recv().unwrap();
        svc.handle_datagram(s, &Datagram::new(MsgType::Nack, sent.seq, 10, vec![]));
        assert_eq!(svc.ticket(t2.ticket_id).unwrap().state, TicketState::Nacked);

        let t3 = svc.dispatch_command(10, Opcode::QuerySwitch).unwrap();
        let done = svc
            .wait_ticket(t3.ticket_id, Duration::from_secs(2))
            .unwrap();
        assert_eq!(done.state, TicketState::TimedOut);
        assert!(matches!(
            svc.ticket(99),
            Err(MonitorError::UnknownTicket(99))
        ));
    }

    #[test]
    fn closed_outbound_times_out_immediately() {
        let dir = tempfile::tempdir().unwrap();
        let svc = service(&dir);
        let (_s, rx) = session(&svc);
        drop(rx);
        let t = svc.dispatch_command(10, Opcode::SwitchOn).unwrap();
        assert_eq!(t.state, TicketState::TimedOut);
        assert!(svc.sessions().is_empty());
    }

    #[test]
    fn history_filters_and_pages() {
        let dir = tempfile::tempdir().unwrap();
        let svc = service(&dir);
        let (s, _rx) = session(&svc);
        assert!(svc
            .query_history(&HistoryFilter::default(), 10, None)
            .unwrap()
            .records
            .is_empty());
        for i in 0..100u16 {
            svc.handle_datagram(s, &reading(i, i % 10 + 1, i32::from(i)));
        }
        let node7 = HistoryFilter {
            node: Some(7),
            ..Default::default()
        };
        let page = svc.query_history(&node7, 100, None).unwrap();
        assert_eq!(page.records.len(), 10);
        assert!(page.records.iter().all(|r| r.src_node == 7));
        assert_eq!(page.next_cursor, None);

        let all = HistoryFilter::default();
        let first = svc.query_history(&all, 10, None).unwrap();
        assert_eq!(
            first.records.iter().map(|r| r.seq).collect::<Vec<_>>(),
            (0..10).collect::<Vec<_>>()
        );
        let mut seen = first.records.len();
        let mut cursor = first.next_cursor;
        while let Some(c) = cursor {
            let page = svc.query_history(&all, 10, Some(c)).unwrap();
            assert_eq!(page.records[0].seq as usize, seen);
            seen += page.records.len();
            cursor = page.next_cursor;
        }
        assert_eq!(seen, 100);

        let bad = HistoryFilter {
            since: Some(10),
            until: Some(5),
            ..Default::default()
        };
        assert!(matches!(
            svc.query_history(&bad, 10, None),
            Err(MonitorError::InvalidInput(_))
        ));
        assert!(svc.query_history(&all, 0, None).is_err());
    }

    #[test]
    fn snapshot_keeps_latest_per_node() {
        let dir = tempfile::tempdir().unwrap();
        let svc = service(&dir);
        assert!(svc.live_snapshot().is_empty());
        let (s, _rx) = session(&svc);
        svc.handle_datagram(s, &reading(5, 7, 100));
        svc.handle_datagram(s, &reading(9, 7, 200));
        let snap = svc.live_snapshot();
        assert_eq!(snap.len(), 1);
        assert_eq!(snap[0].seq, 9);
        svc.handle_datagram(
            s,
            &Datagram::new(MsgType::AlarmCid, 10, 7, b"1234181131010158".to_vec()),
        );
        svc.handle_datagram(s, &reading(11, 7, 300));
        let snap = svc.live_snapshot();
        assert_eq!((snap[0].seq, snap[0].kind), (11, RecordKind::Reading));
    }

    #[test]
    fn restart_recovers_records() {
        let dir = tempfile::tempdir().unwrap();
        let first_session;
        {
            let svc = service(&dir);
            let (s, _rx) = session(&svc);
            first_session = s;
            for i in 0..20 {
                svc.handle_datagram(s, &reading(i, 3, 0));
            }
        }
        let svc = service(&dir);
        assert_eq!(svc.record_count(), 20);
        let (s, _rx) = session(&svc);
        assert!(s > first_session);
        let page = svc
            .query_history(&HistoryFilter::default(), 50, None)
            .unwrap();
        assert!(page
            .records
            .iter()
            .all(|r| r.coordinator_id == first_session));
    }
}
