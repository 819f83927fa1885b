//! Coordinator-side uplink connection.

use std::io::{ErrorKind, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpStream};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use homenet::wire::{encode_datagram, Datagram, FrameError, StreamDecoder};

use crate::error::{MonitorError, Result};

/// A framed TCP connection to the monitoring center. Incoming datagrams are
/// decoded on a background thread.
pub struct UplinkClient {
    stream: TcpStream,
    incoming: Receiver<std::result::Result<Datagram, FrameError>>,
    reader: Option<JoinHandle<()>>,
}

impl UplinkClient {
    pub fn connect(addr: SocketAddr) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let mut read_half = stream.try_clone()?;
        let (tx, incoming) = channel();
        let reader = thread::spawn(move || {
            let mut decoder = StreamDecoder::new();
            let mut buf = [0u8; 4096];
            loop {
                match read_half.read(&mut buf) {
                    Ok(0) => return,
                    Ok(n) => decoder.push(&buf[..n]),
                    Err(e) if e.kind() == ErrorKind::Interrupted => continue,
                    Err(_) => return,
                }
                loop {
                    match decoder.next_frame() {
                        Ok(Some(d)) => {
                            if tx.send(Ok(d)).is_err() {
                                return;
                            }
                        }
                        Ok(None) => break,
                        Err(e) => {
                            let _ = tx.send(Err(e));
                            return;
                        }
                    }
                }
            }
        });
        Ok(UplinkClient {
            stream,
            incoming,
            reader: Some(reader),
        })
    }

    pub fn send(&mut self, d: &Datagram) -> Result<()> {
        let bytes = encode_datagram(d).map_err(|e| MonitorError::InvalidInput(e.to_string()))?;
        self.send_raw(&bytes)
    }

    /// Writes bytes verbatim, framing or not.
    pub fn send_raw(&mut self, bytes: &[u8]) -> Result<()> {
        self.stream.write_all(bytes)?;
        Ok(())
    }

    /// Next datagram from the server, `None` on timeout.
    pub fn recv_timeout(&self, wait: Duration) -> Result<Option<Datagram>> {
        match self.incoming.recv_timeout(wait) {
            Ok(Ok(d)) => Ok(Some(d)),
            Ok(Err(e)) => Err(MonitorError::Protocol(e.to_string())),
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => {
                Err(MonitorError::Protocol("connection closed".into()))
            }
        }
    }

    /// Datagrams already received, without blocking.
    pub fn try_recv_all(&self) -> Vec<Datagram> {
        self.incoming.try_iter().filter_map(|r| r.ok()).collect()
    }
}

impl Drop for UplinkClient {
    fn drop(&mut self) {
        let _ = self.stream.shutdown(Shutdown::Both);
        if let Some(r) = self.reader.take() {
            let _ = r.join();
        }
    }
}
