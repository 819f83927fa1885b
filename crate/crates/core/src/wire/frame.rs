//! Uplink datagram framing.
//!
//! ```text
//! offset  size  field
//! 0       2     magic 0xA5 0x5A
//! 2       1     version (0x01)
//! 3       1     message type
//! 4       2     sequence number        (big-endian)
//! 6       2     source node            (big-endian)
//! 8       2     payload length L       (big-endian, L <= 1024)
//! 10      L     payload
//! 10+L    4     CRC-32/IEEE of bytes 0..10+L (big-endian)
//! ```

use std::fmt;

use thiserror::Error;

pub const MAGIC: [u8; 2] = [0xA5, 0x5A];
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 10;
pub const CRC_LEN: usize = 4;
pub const MIN_FRAME_LEN: usize = HEADER_LEN + CRC_LEN;
pub const MAX_PAYLOAD: usize = 1024;
pub const MAX_FRAME_LEN: usize = MIN_FRAME_LEN + MAX_PAYLOAD;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MsgType {
    SensorData = 0x01,
    Command = 0x02,
    Ack = 0x03,
    AlarmCid = 0x04,
    Heartbeat = 0x05,
    DiscoveryReport = 0x06,
    Nack = 0x07,
}

impl MsgType {
    pub const ALL: [MsgType; 7] = [
        MsgType::SensorData,
        MsgType::Command,
        MsgType::Ack,
        MsgType::AlarmCid,
        MsgType::Heartbeat,
        MsgType::DiscoveryReport,
        MsgType::Nack,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        MsgType::ALL.into_iter().find(|t| t.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            MsgType::SensorData => "SENSOR_DATA",
            MsgType::Command => "COMMAND",
            MsgType::Ack => "ACK",
            MsgType::AlarmCid => "ALARM_CID",
            MsgType::Heartbeat => "HEARTBEAT",
            MsgType::DiscoveryReport => "DISCOVERY_REPORT",
            MsgType::Nack => "NACK",
        }
    }
}

impl fmt::Display for MsgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Datagram {
    pub msg_type: MsgType,
    pub seq: u16,
    pub src_node: u16,
    pub payload: Vec<u8>,
}

impl Datagram {
    pub fn new(msg_type: MsgType, seq: u16, src_node: u16, payload: impl Into<Vec<u8>>) -> Self {
        Datagram {
            msg_type,
            seq,
            src_node,
            payload: payload.into(),
        }
    }

    pub fn encoded_len(&self) -> usize {
        MIN_FRAME_LEN + self.payload.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("payload of {len} bytes exceeds {MAX_PAYLOAD}")]
    PayloadTooLarge { len: usize },
    #[error("bad magic {found:02x?} at offset {offset}")]
    BadMagic { offset: usize, found: [u8; 2] },
    #[error("unsupported version {version:#04x} at offset {offset}")]
    UnsupportedVersion { offset: usize, version: u8 },
    #[error("unknown message type {code:#04x} at offset {offset}")]
    UnknownType { offset: usize, code: u8 },
    #[error("declared payload length {declared} at offset {offset} does not match frame of {actual} bytes")]
    LengthMismatch {
        offset: usize,
        declared: usize,
        actual: usize,
    },
    #[error(
        "crc mismatch at offset {offset}: frame carries {found:#010x}, computed {computed:#010x}"
    )]
    BadCrc {
        offset: usize,
        found: u32,
        computed: u32,
    },
    #[error("truncated frame: {available} bytes, need {needed} (offset {offset})")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },
}

fn crc32(bytes: &[u8]) -> u32 {
    crc32fast::hash(bytes)
}

pub fn encode_datagram(d: &Datagram) -> Result<Vec<u8>, FrameError> {
    let mut out = Vec::with_capacity(d.encoded_len());
    encode_into(d, &mut out)?;
    Ok(out)
}

/// Appends the encoded frame to `out`.
pub fn encode_into(d: &Datagram, out: &mut Vec<u8>) -> Result<(), FrameError> {
    if d.payload.len() > MAX_PAYLOAD {
        return Err(FrameError::PayloadTooLarge {
            len: d.payload.len(),
        });
    }
    let start = out.len();
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(d.msg_type.code());
    out.extend_from_slice(&d.seq.to_be_bytes());
    out.extend_from_slice(&d.src_node.to_be_bytes());
    out.extend_from_slice(&(d.payload.len() as u16).to_be_bytes());
    out.extend_from_slice(&d.payload);
    let crc = crc32(&out[start..]);
    out.extend_from_slice(&crc.to_be_bytes());
    Ok(())
}

/// Validates the fixed header and returns the declared payload length.
fn check_header(header: &[u8]) -> Result<usize, FrameError> {
    if header[0..2] != MAGIC {
        return Err(FrameError::BadMagic {
            offset: 0,
            found: [header[0], header[1]],
        });
    }
    if header[2] != VERSION {
        return Err(FrameError::UnsupportedVersion {
            offset: 2,
            version: header[2],
        });
    }
    if MsgType::from_code(header[3]).is_none() {
        return Err(FrameError::UnknownType {
            offset: 3,
            code: header[3],
        });
    }
    let declared = usize::from(u16::from_be_bytes([header[8], header[9]]));
    if declared > MAX_PAYLOAD {
        return Err(FrameError::LengthMismatch {
            offset: 8,
            declared,
            actual: MIN_FRAME_LEN + declared,
        });
    }
    Ok(declared)
}

/// Decodes exactly one frame occupying all of `bytes`.
pub fn decode_datagram(bytes: &[u8]) -> Result<Datagram, FrameError> {
    if bytes.len() < MIN_FRAME_LEN {
        return Err(FrameError::Truncated {
            offset: bytes.len(),
            needed: MIN_FRAME_LEN,
            available: bytes.len(),
        });
    }
    let declared = check_header(bytes)?;
    let needed = MIN_FRAME_LEN + declared;
    if bytes.len() < needed {
        return Err(FrameError::Truncated {
            offset: bytes.len(),
            needed,
            available: bytes.len(),
        });
    }
    if bytes.len() > needed {
        return Err(FrameError::LengthMismatch {
            offset: 8,
            declared,
            actual: bytes.len(),
        });
    }
    decode_checked(bytes, declared)
}

fn decode_checked(frame: &[u8], declared: usize) -> Result<Datagram, FrameError> {
    let body_end = HEADER_LEN + declared;
    let computed = crc32(&frame[..body_end]);
    let found = u32::from_be_bytes(frame[body_end..body_end + CRC_LEN].try_into().unwrap());
    if found != computed {
        return Err(FrameError::BadCrc {
            offset: body_end,
            found,
            computed,
        });
    }
    Ok(Datagram {
        msg_type: MsgType::from_code(frame[3]).expect("checked by header validation"),
        seq: u16::from_be_bytes([frame[4], frame[5]]),
        src_node: u16::from_be_bytes([frame[6], frame[7]]),
        payload: frame[HEADER_LEN..body_end].to_vec(),
    })
}

/// Incremental decoder for a byte stream carrying back-to-back frames.
///
/// Errors are not recoverable: after [`StreamDecoder::next_frame`] reports
/// one, the stream has lost framing and the caller should drop it.
#[derive(Debug, Default)]
pub struct StreamDecoder {
    buf: Vec<u8>,
    consumed: u64,
}

impl StreamDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// Bytes received but not yet returned as part of a frame.
    pub fn pending(&self) -> usize {
        self.buf.len()
    }

    /// Returns the next complete frame, `Ok(None)` if more bytes are
    /// needed. Error offsets are relative to the start of the stream.
    pub fn next_frame(&mut self) -> Result<Option<Datagram>, FrameError> {
        if self.buf.len() < HEADER_LEN {
            return Ok(None);
        }
        let declared = check_header(&self.buf).map_err(|e| self.rebase(e))?;
        let needed = MIN_FRAME_LEN + declared;
        if self.buf.len() < needed {
            return Ok(None);
        }
        let frame = decode_checked(&self.buf[..needed], declared).map_err(|e| self.rebase(e))?;
        self.buf.drain(..needed);
        self.consumed += needed as u64;
        Ok(Some(frame))
    }

    fn rebase(&self, e: FrameError) -> FrameError {
        let base = self.consumed as usize;
        match e {
            FrameError::BadMagic { offset, found } => FrameError::BadMagic {
                offset: base + offset,
                found,
            },
            FrameError::UnsupportedVersion { offset, version } => FrameError::UnsupportedVersion {
                offset: base + offset,
                version,
            },
            FrameError::UnknownType { offset, code } => FrameError::UnknownType {
                offset: base + offset,
                code,
            },
            FrameError::LengthMismatch {
                offset,
                declared,
                actual,
            } => FrameError::LengthMismatch {
                offset: base + offset,
                declared,
                actual,
            },
            FrameError::BadCrc {
                offset,
                found,
                computed,
            } => FrameError::BadCrc {
                offset: base + offset,
                found,
                computed,
            },
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Bitwise CRC-32/IEEE (reflected, poly 0xEDB88320), independent of the
    /// table-driven implementation used by the codec.
    fn reference_crc32(bytes: &[u8]) -> u32 {
        let mut crc = !0u32;
        for &b in bytes {
            crc ^= u32::from(b);
            for _ in 0..8 {
                crc = if crc & 1 != 0 {
                    (crc >> 1) ^ 0xEDB8_8320
                } else {
                    crc >> 1
                };
            }
        }
        !crc
    }

    #[test]
    fn reference_crc_check_value() {
        assert_eq!(reference_crc32(b"123456789"), 0xCBF4_3926);
        assert_eq!(crc32(b"123456789"), 0xCBF4_3926);
    }

    #[test]
    fn heartbeat_layout() {
        let bytes = encode_datagram(&Datagram::new(MsgType::Heartbeat, 0, 0, vec![])).unwrap();
        assert_eq!(bytes.len(), 14);
        assert_eq!(&bytes[..10], &[0xA5, 0x5A, 0x01, 0x05, 0, 0, 0, 0, 0, 0]);
        let crc = reference_crc32(&bytes[..10]);
        assert_eq!(&bytes[10..], &crc.to_be_bytes());
        assert_eq!(&bytes[10..], &[0xD5, 0x15, 0x4D, 0x32]);
        assert_eq!(
            decode_datagram(&bytes).unwrap().msg_type,
            MsgType::Heartbeat
        );
    }

    #[test]
    fn big_endian_fields() {
        let d = Datagram::new(MsgType::SensorData, 0x1234, 0x0A0B, vec![9; 10]);
        let bytes = encode_datagram(&d).unwrap();
        assert_eq!(bytes.len(), 24);
        assert_eq!(&bytes[3..10], &[0x01, 0x12, 0x34, 0x0A, 0x0B, 0x00, 0x0A]);
    }

    #[test]
    fn oversized_payload() {
        let d = Datagram::new(MsgType::SensorData, 0, 0, vec![0; MAX_PAYLOAD + 1]);
        assert_eq!(
            encode_datagram(&d).unwrap_err(),
            FrameError::PayloadTooLarge { len: 1025 }
        );
        let d = Datagram::new(MsgType::SensorData, 0, 0, vec![0; MAX_PAYLOAD]);
        assert_eq!(encode_datagram(&d).unwrap().len(), MAX_FRAME_LEN);
    }

    fn heartbeat() -> Vec<u8> {
        encode_datagram(&Datagram::new(MsgType::Heartbeat, 7, 3, vec![])).unwrap()
    }

    #[test]
    fn distinct_errors() {
        let good = heartbeat();

        let mut b = good.clone();
        *b.last_mut().unwrap() ^= 0xFF;
        assert!(matches!(
            decode_datagram(&b),
            Err(FrameError::BadCrc { offset: 10, .. })
        ));

        assert!(matches!(
            decode_datagram(&good[..13]),
            Err(FrameError::Truncated {
                needed: 14,
                available: 13,
                ..
            })
        ));

        let mut b = good.clone();
        b[1] = 0x00;
        assert!(matches!(
            decode_datagram(&b),
            Err(FrameError::BadMagic { offset: 0, .. })
        ));

        let mut b = good.clone();
        b[2] = 0x02;
        assert!(matches!(
            decode_datagram(&b),
            Err(FrameError::UnsupportedVersion {
                offset: 2,
                version: 2
            })
        ));

        let mut b = good.clone();
        b[3] = 0x08;
        assert!(matches!(
            decode_datagram(&b),
            Err(FrameError::UnknownType { offset: 3, code: 8 })
        ));

        let mut b = good.clone();
        b.push(0);
        assert!(matches!(
            decode_datagram(&b),
            Err(FrameError::LengthMismatch {
                declared: 0,
                actual: 15,
                ..
            })
        ));

        let mut b = good.clone();
        b[8] = 0x04;
        b[9] = 0x01;
        assert!(matches!(
            decode_datagram(&b),
            Err(FrameError::LengthMismatch { declared: 1025, .. })
        ));

        let mut b = good;
        b[9] = 0x05;
        assert!(matches!(
            decode_datagram(&b),
            Err(FrameError::Truncated { needed: 19, .. })
        ));
    }

    #[test]
    fn stream_waits_for_complete_frames() {
        let a = encode_datagram(&Datagram::new(MsgType::SensorData, 1, 2, vec![1, 2, 3])).unwrap();
        let b = heartbeat();
        let mut dec = StreamDecoder::new();
        dec.push(&a[..5]);
        assert_eq!(dec.next_frame().unwrap(), None);
        dec.push(&a[5..]);
        dec.push(&b[..12]);
        assert_eq!(dec.next_frame().unwrap().unwrap().payload, vec![1, 2, 3]);
        assert_eq!(dec.next_frame().unwrap(), None);
        dec.push(&b[12..]);
        assert_eq!(dec.next_frame().unwrap().unwrap().seq, 7);
        assert_eq!(dec.pending(), 0);
    }

    #[test]
    fn stream_error_offsets_are_absolute() {
        let mut dec = StreamDecoder::new();
        dec.push(&heartbeat());
        dec.push(&[0xFF; 12]);
        assert!(dec.next_frame().unwrap().is_some());
        assert_eq!(
            dec.next_frame().unwrap_err(),
            FrameError::BadMagic {
                offset: 14,
                found: [0xFF, 0xFF]
            }
        );
    }

    fn datagram() -> impl Strategy<Value = Datagram> {
        (
            prop::sample::select(MsgType::ALL.to_vec()),
            any::<u16>(),
            any::<u16>(),
            prop::collection::vec(any::<u8>(), 0..=MAX_PAYLOAD),
        )
            .prop_map(|(t, seq, src, payload)| Datagram::new(t, seq, src, payload))
    }

    proptest! {
        #[test]
        fn round_trip(d in datagram()) {
            let bytes = encode_datagram(&d).unwrap();
            prop_assert_eq!(bytes.len(), 14 + d.payload.len());
            prop_assert_eq!(decode_datagram(&bytes).unwrap(), d);
        }

        #[test]
        fn stream_yields_frames_in_order(ds in prop::collection::vec(datagram(), 0..6), chunk in 1usize..64) {
            let mut bytes = Vec::new();
            for d in &ds {
                encode_into(d, &mut bytes).unwrap();
            }
            let mut dec = StreamDecoder::new();
            let mut out = Vec::new();
            for piece in bytes.chunks(chunk) {
                dec.push(piece);
                while let Some(d) = dec.next_frame().unwrap() {
                    out.push(d);
                }
            }
            prop_assert_eq!(out, ds);
        }

        #[test]
        fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..64)) {
            let _ = decode_datagram(&bytes);
            let mut dec = StreamDecoder::new();
            dec.push(&bytes);
            let _ = dec.next_frame();
        }
    }
}
