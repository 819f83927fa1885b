//! Coordinator ↔ monitoring-center wire formats.

mod cid;
mod frame;
mod payload;

pub use cid::{cid_checksum, decode_cid, encode_cid, CidError, CidEvent, Qualifier, CID_LEN};
pub use frame::{
    decode_datagram, encode_datagram, encode_into, Datagram, FrameError, MsgType, StreamDecoder,
    HEADER_LEN, MAGIC, MAX_FRAME_LEN, MAX_PAYLOAD, MIN_FRAME_LEN, VERSION,
};
pub use payload::{CommandPayload, NackReason, Opcode, PayloadError, Reading, SwitchState};
