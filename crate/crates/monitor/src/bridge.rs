//! Connects an emulated mesh to a monitoring center over the uplink
//! protocol, standing in for a coordinator's serial-to-TCP gateway.

use std::net::SocketAddr;
use std::time::Duration;

use homenet::simnet::{Emulator, Tick};
use homenet::wire::{Datagram, MsgType};

use crate::client::UplinkClient;
use crate::error::Result;

pub struct Bridge {
    emulator: Emulator,
    client: UplinkClient,
    replies: Vec<Datagram>,
    forwarded: u64,
}

impl Bridge {
    pub fn connect(emulator: Emulator, addr: SocketAddr) -> Result<Self> {
        Ok(Bridge {
            emulator,
            client: UplinkClient::connect(addr)?,
            replies: Vec::new(),
            forwarded: 0,
        })
    }

    pub fn emulator(&self) -> &Emulator {
        &self.emulator
    }

    pub fn emulator_mut(&mut self) -> &mut Emulator {
        &mut self.emulator
    }

    /// ACK and NACK datagrams the server sent in answer to uplink traffic.
    pub fn replies(&self) -> &[Datagram] {
        &self.replies
    }

    /// Uplink datagrams sent so far.
    pub fn forwarded(&self) -> u64 {
        self.forwarded
    }

    /// Sends queued uplink datagrams, hands received COMMAND datagrams to
    /// the coordinator and advances the emulation by `ticks`.
    pub fn pump(&mut self, ticks: Tick) -> Result<()> {
        for _ in 0..ticks {
            self.exchange(Duration::ZERO)?;
            self.emulator.step();
        }
        self.exchange(Duration::ZERO)
    }

    /// Flushes uplink traffic and waits up to `wait` for server datagrams.
    pub fn exchange(&mut self, wait: Duration) -> Result<()> {
        for d in self.emulator.take_uplink() {
            self.client.send(&d)?;
            self.forwarded += 1;
        }
        if !wait.is_zero() {
            if let Some(d) = self.client.recv_timeout(wait)? {
                self.accept(d);
            }
        }
        for d in self.client.try_recv_all() {
            self.accept(d);
        }
        Ok(())
    }

    fn accept(&mut self, d: Datagram) {
        if d.msg_type == MsgType::Command {
            self.emulator.push_downlink(d);
        } else {
            self.replies.push(d);
        }
    }
}
