use std::time::Instant;

use homenet::wire::Opcode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TicketState {
    Queued,
    Sent,
    Acked,
    Nacked,
    TimedOut,
}

impl TicketState {
    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            TicketState::Acked | TicketState::Nacked | TicketState::TimedOut
        )
    }

    /// Whether `self -> next` is a legal forward move.
    pub fn can_advance_to(self, next: TicketState) -> bool {
        use TicketState::*;
        matches!(
            (self, next),
            (Queued, Sent) | (Queued, TimedOut) | (Sent, Acked) | (Sent, Nacked) | (Sent, TimedOut)
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            TicketState::Queued => "queued",
            TicketState::Sent => "sent",
            TicketState::Acked => "acked",
            TicketState::Nacked => "nacked",
            TicketState::TimedOut => "timed_out",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandTicket {
    pub ticket_id: u64,
    pub target_node: u32,
    pub opcode: Opcode,
    pub state: TicketState,
    pub coordinator_id: u32,
    pub seq: u16,
    pub(crate) sent_at: Option<Instant>,
}

impl CommandTicket {
    /// Moves forward; illegal transitions are ignored and reported as false.
    pub(crate) fn advance(&mut self, next: TicketState) -> bool {
        if self.state.can_advance_to(next) {
            self.state = next;
            true
        } else {
            false
        }
    }
}
