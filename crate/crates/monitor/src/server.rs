//! TCP front end: coordinator sessions on one port, admin requests on
//! another.

use std::io::{self, BufRead, BufReader, ErrorKind, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use homenet::wire::{encode_datagram, Datagram, StreamDecoder};
use log::{debug, warn};

use crate::admin::handle_line;
use crate::error::{MonitorError, Result};
use crate::service::{Service, SessionId, DEFAULT_COMMAND_TIMEOUT};

pub const DEFAULT_LISTEN: &str = "127.0.0.1:7007";
pub const DEFAULT_ADMIN: &str = "127.0.0.1:7008";

const POLL: Duration = Duration::from_millis(20);

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub listen: SocketAddr,
    pub admin: Option<SocketAddr>,
    pub store_path: PathBuf,
    pub command_timeout: Duration,
}

impl ServerConfig {
    pub fn new(store_path: impl Into<PathBuf>) -> Self {
        ServerConfig {
            listen: DEFAULT_LISTEN.parse().unwrap(),
            admin: Some(DEFAULT_ADMIN.parse().unwrap()),
            store_path: store_path.into(),
            command_timeout: DEFAULT_COMMAND_TIMEOUT,
        }
    }
}

type Workers = Arc<Mutex<Vec<JoinHandle<()>>>>;

pub struct ServerHandle {
    service: Arc<Service>,
    uplink_addr: SocketAddr,
    admin_addr: Option<SocketAddr>,
    stop: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
    workers: Workers,
}

impl ServerHandle {
    pub fn service(&self) -> &Arc<Service> {
        &self.service
    }

    pub fn uplink_addr(&self) -> SocketAddr {
        self.uplink_addr
    }

    pub fn admin_addr(&self) -> Option<SocketAddr> {
        self.admin_addr
    }

    pub fn is_stopping(&self) -> bool {
        self.stop.load(Ordering::SeqCst)
    }

    /// Stops accepting, lets every session flush its outbound queue and
    /// joins all threads.
    pub fn shutdown(mut self) -> Result<()> {
        self.stop.store(true, Ordering::SeqCst);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
        let workers: Vec<_> = self.workers.lock().unwrap().drain(..).collect();
        for w in workers {
            let _ = w.join();
        }
        self.service.sync()
    }
}

fn bind(addr: SocketAddr) -> Result<TcpListener> {
    let listener = TcpListener::bind(addr).map_err(|source| MonitorError::Bind { addr, source })?;
    listener
        .set_nonblocking(true)
        .map_err(|source| MonitorError::Bind { addr, source })?;
    Ok(listener)
}

/// Opens the store, binds both listeners and starts serving in background
/// threads.
pub fn serve(config: ServerConfig) -> Result<ServerHandle> {
    let uplink = bind(config.listen)?;
    let admin = config.admin.map(bind).transpose()?;
    let service = Arc::new(Service::open(&config.store_path, config.command_timeout)?);
    let stop = Arc::new(AtomicBool::new(false));
    let workers: Workers = Arc::default();

    let uplink_addr = uplink.local_addr()?;
    let admin_addr = admin.as_ref().map(TcpListener::local_addr).transpose()?;

    let mut threads = Vec::new();
    {
        let (service, stop, workers) = (service.clone(), stop.clone(), workers.clone());
        threads.push(thread::spawn(move || {
            accept_loop(uplink, &stop, &workers, |stream| {
                let (service, stop) = (service.clone(), stop.clone());
                thread::spawn(move || run_session(&service, stream, &stop))
            })
        }));
    }
    if let Some(admin) = admin {
        let (service, stop, workers) = (service.clone(), stop.clone(), workers.clone());
        threads.push(thread::spawn(move || {
            accept_loop(admin, &stop, &workers, |stream| {
                let (service, stop) = (service.clone(), stop.clone());
                thread::spawn(move || run_admin(&service, stream, &stop))
            })
        }));
    }
    {
        let (service, stop) = (service.clone(), stop.clone());
        threads.push(thread::spawn(move || {
            while !stop.load(Ordering::SeqCst) {
                service.expire_tickets(Instant::now());
                thread::sleep(Duration::from_millis(50));
            }
        }));
    }

    Ok(ServerHandle {
        service,
        uplink_addr,
        admin_addr,
        stop,
        threads,
        workers,
    })
}

fn accept_loop<F>(listener: TcpListener, stop: &AtomicBool, workers: &Workers, spawn: F)
where
    F: Fn(TcpStream) -> JoinHandle<()>,
{
    while !stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                debug!("connection from {peer}");
                if stream.set_nonblocking(false).is_err() {
                    continue;
                }
                let _ = stream.set_read_timeout(Some(POLL * 5));
                let _ = stream.set_nodelay(true);
                let mut w = workers.lock().unwrap();
                w.retain(|h| !h.is_finished());
                w.push(spawn(stream));
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(POLL),
            Err(e) => {
                warn!("accept failed: {e}");
                thread::sleep(POLL);
            }
        }
    }
}

fn is_timeout(e: &io::Error) -> bool {
    matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut)
}

fn run_session(service: &Arc<Service>, stream: TcpStream, stop: &AtomicBool) {
    let Ok(write_half) = stream.try_clone() else {
        return;
    };
    let (tx, rx) = channel();
    let session = service.open_session(tx);
    let writer = thread::spawn(move || write_outbound(write_half, rx));

    let reason = read_session(service, session, stream.try_clone().ok(), stop);
    // Removing the session drops its sender; the writer drains and exits.
    service.close_session(session, &reason);
    let _ = writer.join();
    let _ = stream.shutdown(Shutdown::Both);
}

fn read_session(
    service: &Service,
    session: SessionId,
    stream: Option<TcpStream>,
    stop: &AtomicBool,
) -> String {
    let Some(mut stream) = stream else {
        return "socket clone failed".into();
    };
    let mut decoder = StreamDecoder::new();
    let mut buf = [0u8; 4096];
    loop {
        if stop.load(Ordering::SeqCst) {
            return "server shutting down".into();
        }
        match stream.read(&mut buf) {
            Ok(0) => return "peer closed".into(),
            Ok(n) => decoder.push(&buf[..n]),
            Err(e) if is_timeout(&e) => continue,
            Err(e) => return format!("read error: {e}"),
        }
        loop {
            match decoder.next_frame() {
                Ok(Some(d)) => {
                    if let Some(reply) = service.handle_datagram(session, &d) {
                        if !service.send_to(session, reply) {
                            return "outbound closed".into();
                        }
                    }
                }
                Ok(None) => break,
                Err(e) => {
                    service.note(format!("session {session}: protocol error: {e}"));
                    return format!("protocol error: {e}");
                }
            }
        }
    }
}

fn write_outbound(mut stream: TcpStream, rx: Receiver<Datagram>) {
    loop {
        match rx.recv_timeout(POLL * 5) {
            Ok(d) => {
                let Ok(bytes) = encode_datagram(&d) else {
                    continue;
                };
                if stream.write_all(&bytes).is_err() {
                    return;
                }
            }
            Err(RecvTimeoutError::Timeout) => continue,
            Err(RecvTimeoutError::Disconnected) => {
                let _ = stream.flush();
                return;
            }
        }
    }
}

fn run_admin(service: &Service, stream: TcpStream, stop: &AtomicBool) {
    let Ok(mut writer) = stream.try_clone() else {
        return;
    };
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    while !stop.load(Ordering::SeqCst) {
        match reader.read_line(&mut line) {
            Ok(0) => return,
            Ok(_) => {
                if !line.ends_with('\n') {
                    continue;
                }
                let response = handle_line(service, line.trim());
                line.clear();
                let mut out = serde_json::to_string(&response).unwrap_or_else(|e| {
                    format!(r#"{{"ok":false,"error":"serialization failed: {e}"}}"#)
                });
                out.push('\n');
                if writer.write_all(out.as_bytes()).is_err() {
                    return;
                }
            }
            Err(e) if is_timeout(&e) => continue,
            Err(_) => return,
        }
    }
}
