//! Contact ID alarm messages.
//!
//! A message is 16 decimal digits:
//!
//! ```text
//! AAAA MT Q EEE GG ZZZ S
//! acct type qual event partition zone checksum
//! ```
//!
//! The message is valid when the sum of its digit values is a multiple of
//! 15, where `'0'` is valued 10 and `'1'..='9'` carry their face value.

use std::fmt;

use thiserror::Error;

pub const CID_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Qualifier {
    NewEvent,
    Restore,
    Status,
}

impl Qualifier {
    pub fn digit(self) -> u8 {
        match self {
            Qualifier::NewEvent => 1,
            Qualifier::Restore => 3,
            Qualifier::Status => 6,
        }
    }

    fn from_digit(d: u8) -> Option<Self> {
        match d {
            1 => Some(Qualifier::NewEvent),
            3 => Some(Qualifier::Restore),
            6 => Some(Qualifier::Status),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Qualifier::NewEvent => "new",
            Qualifier::Restore => "restore",
            Qualifier::Status => "status",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CidEvent {
    pub account: String,
    pub message_type: String,
    pub qualifier: Qualifier,
    pub event_code: u16,
    pub partition: u8,
    pub zone: u16,
    pub checksum: char,
}

impl fmt::Display for CidEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "account={} type={} qualifier={} event={:03} partition={:02} zone={:03}",
            self.account,
            self.message_type,
            self.qualifier.name(),
            self.event_code,
            self.partition,
            self.zone
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CidError {
    #[error("expected {expected} digits, got {found}")]
    BadLength { expected: usize, found: usize },
    #[error("character {found:?} at position {position} is not a decimal digit")]
    BadDigit { position: usize, found: char },
    #[error("message type {0:?} is neither \"18\" nor \"98\"")]
    BadMessageType(String),
    #[error("qualifier {0} is not one of 1, 3, 6")]
    BadQualifier(u8),
    #[error("digit sum {sum} is not a multiple of 15")]
    BadChecksum { sum: u32 },
    #[error("digit sum {sum} cannot be completed to a multiple of 15 with one decimal digit")]
    NoValidChecksum { sum: u32 },
}

fn digit_value(d: u8) -> u32 {
    if d == 0 {
        10
    } else {
        u32::from(d)
    }
}

fn parse_digits(s: &str, expected: usize) -> Result<Vec<u8>, CidError> {
    let found = s.chars().count();
    if found != expected {
        return Err(CidError::BadLength { expected, found });
    }
    s.chars()
        .enumerate()
        .map(|(position, c)| match c.to_digit(10) {
            Some(d) if c.is_ascii_digit() => Ok(d as u8),
            _ => Err(CidError::BadDigit { position, found: c }),
        })
        .collect()
}

fn number(digits: &[u8]) -> u32 {
    digits.iter().fold(0, |acc, &d| acc * 10 + u32::from(d))
}

fn as_text(digits: &[u8]) -> String {
    digits.iter().map(|&d| char::from(b'0' + d)).collect()
}

pub fn decode_cid(message: &str) -> Result<CidEvent, CidError> {
    let d = parse_digits(message, CID_LEN)?;
    let message_type = as_text(&d[4..6]);
    if message_type != "18" && message_type != "98" {
        return Err(CidError::BadMessageType(message_type));
    }
    let qualifier = Qualifier::from_digit(d[6]).ok_or(CidError::BadQualifier(d[6]))?;
    let sum: u32 = d.iter().map(|&x| digit_value(x)).sum();
    if !sum.is_multiple_of(15) {
        return Err(CidError::BadChecksum { sum });
    }
    Ok(CidEvent {
        account: as_text(&d[0..4]),
        message_type,
        qualifier,
        event_code: number(&d[7..10]) as u16,
        partition: number(&d[10..12]) as u8,
        zone: number(&d[12..15]) as u16,
        checksum: char::from(b'0' + d[15]),
    })
}

/// The digit that completes a 15-digit body into a valid message.
///
/// Only values 1 through 10 are expressible as one decimal digit, so bodies
/// whose sum needs 11 to 15 more have no valid checksum.
pub fn cid_checksum(body: &str) -> Result<char, CidError> {
    let d = parse_digits(body, CID_LEN - 1)?;
    let sum: u32 = d.iter().map(|&x| digit_value(x)).sum();
    let needed = (15 - sum % 15) % 15;
    match needed {
        1..=9 => Ok(char::from(b'0' + needed as u8)),
        10 => Ok('0'),
        _ => Err(CidError::NoValidChecksum { sum }),
    }
}

/// Builds a full message from its fields, computing the checksum.
pub fn encode_cid(
    account: &str,
    message_type: &str,
    qualifier: Qualifier,
    event_code: u16,
    partition: u8,
    zone: u16,
) -> Result<String, CidError> {
    let body = format!(
        "{account}{message_type}{}{event_code:03}{partition:02}{zone:03}",
        qualifier.digit()
    );
    let check = cid_checksum(&body)?;
    let message = format!("{body}{check}");
    decode_cid(&message)?;
    Ok(message)
}
