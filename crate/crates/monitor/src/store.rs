//! Append-only record log.
//!
//! Each entry is
//!
//! ```text
//! received_at   u64  big-endian, microseconds since the Unix epoch
//! coordinator   u32  big-endian session id
//! frame_len     u32  big-endian
//! frame         frame_len bytes, one encoded datagram
//! ```
//!
//! Timestamps are strictly increasing across the whole log. A torn entry at
//! the tail (a crash mid-append) is cut off when the log is reopened.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use homenet::wire::{decode_datagram, encode_datagram, Datagram, MAX_FRAME_LEN};
use log::warn;

use crate::error::{MonitorError, Result};

const ENTRY_HEADER: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredEntry {
    pub received_at: u64,
    pub coordinator_id: u32,
    pub datagram: Datagram,
}

#[derive(Debug)]
pub struct Store {
    path: PathBuf,
    file: File,
    last_timestamp: u64,
}

impl Store {
    /// Opens or creates the log and returns every intact entry in order.
    pub fn open(path: impl AsRef<Path>) -> Result<(Store, Vec<StoredEntry>)> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;

        let mut entries = Vec::new();
        let mut offset = 0usize;
        let mut last_timestamp = 0;
        while offset < bytes.len() {
            match parse_entry(&bytes[offset..]) {
                Ok((entry, used)) => {
                    last_timestamp = last_timestamp.max(entry.received_at);
                    entries.push(entry);
                    offset += used;
                }
                Err(reason) => {
                    warn!(
                        "{}: dropping {} trailing bytes at offset {offset}: {reason}",
                        path.display(),
                        bytes.len() - offset
                    );
                    file.set_len(offset as u64)?;
                    file.seek(SeekFrom::End(0))?;
                    break;
                }
            }
        }
        Ok((
            Store {
                path,
                file,
                last_timestamp,
            },
            entries,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn next_timestamp(&mut self) -> u64 {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_micros() as u64)
            .unwrap_or(0);
        self.last_timestamp = now.max(self.last_timestamp + 1);
        self.last_timestamp
    }

    /// Appends and flushes one entry, returning it with its timestamp.
    pub fn append(&mut self, coordinator_id: u32, datagram: &Datagram) -> Result<StoredEntry> {
        let frame =
            encode_datagram(datagram).map_err(|e| MonitorError::InvalidInput(e.to_string()))?;
        let received_at = self.next_timestamp();
        let mut entry = Vec::with_capacity(ENTRY_HEADER + frame.len());
        entry.extend_from_slice(&received_at.to_be_bytes());
        entry.extend_from_slice(&coordinator_id.to_be_bytes());
        entry.extend_from_slice(&(frame.len() as u32).to_be_bytes());
        entry.extend_from_slice(&frame);
        self.file.write_all(&entry)?;
        self.file.flush()?;
        Ok(StoredEntry {
            received_at,
            coordinator_id,
            datagram: datagram.clone(),
        })
    }

    pub fn sync(&self) -> Result<()> {
        self.file.sync_data()?;
        Ok(())
    }
}

fn parse_entry(bytes: &[u8]) -> std::result::Result<(StoredEntry, usize), String> {
    if bytes.len() < ENTRY_HEADER {
        return Err("truncated entry header".into());
    }
    let received_at = u64::from_be_bytes(bytes[0..8].try_into().unwrap());
    let coordinator_id = u32::from_be_bytes(bytes[8..12].try_into().unwrap());
    let len = u32::from_be_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if len > MAX_FRAME_LEN {
        return Err(format!("frame length {len} exceeds {MAX_FRAME_LEN}"));
    }
    let end = ENTRY_HEADER + len;
    if bytes.len() < end {
        return Err("truncated frame".into());
    }
    let datagram = decode_datagram(&bytes[ENTRY_HEADER..end]).map_err(|e| e.to_string())?;
    Ok((
        StoredEntry {
            received_at,
            coordinator_id,
            datagram,
        },
        end,
    ))
}
