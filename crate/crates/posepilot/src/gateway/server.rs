//! Live websocket endpoint.
//!
//! One thread owns the [`Session`] and paces ticks to the wall clock. Each
//! client connection gets its own thread that decodes frames into the shared
//! [`Mailbox`] and forwards telemetry from a small bounded queue; when that
//! queue is full the frame is dropped for that client only.
//!
//! Whenever the session thread drains new input it publishes a telemetry
//! snapshot straight away whose `input_seq` acknowledges the highest
//! sequence number consumed. The input itself takes effect at the next
//! reference tick. Regular telemetry goes out at `telemetry_rate`.

use std::fs::File;
use std::io::{self, BufWriter};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, SyncSender, TrySendError};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use posepilot_core::metrics::TlxRecord;
use posepilot_core::session::LogHeader;
use posepilot_core::{ReferenceVector, RunEvent, RunLog, Session};
use tungstenite::{Message, WebSocket};

use super::mailbox::{Mailbox, TickInputs};
use super::wire::{
    decode, encode_outbound, snapshot_to_frame, DecodeError, Inbound, InboundMessage, Outbound, OutboundMessage,
    Welcome, PROTOCOL_VERSION,
};
use crate::logfmt::JsonlWriter;
use crate::LoadedConfig;

/// How long a client thread blocks in a read before servicing its outbox.
const CLIENT_POLL: Duration = Duration::from_millis(1);
/// Ticks the session may fall behind the wall clock before it skips ahead.
const MAX_LAG_TICKS: u32 = 5;

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub bind: String,
    /// Shared secret clients must present in `hello`.
    pub token: Option<String>,
    pub participant: Option<String>,
    /// Append the run log here while the session runs.
    pub log_path: Option<PathBuf>,
    /// Stop after this many simulated seconds.
    pub duration: Option<f64>,
    /// Telemetry frames buffered per client before dropping.
    pub client_queue: usize,
}

impl Default for ServeOptions {
    fn default() -> Self {
        ServeOptions {
            bind: "127.0.0.1:8765".into(),
            token: None,
            participant: None,
            log_path: None,
            duration: None,
            client_queue: 8,
        }
    }
}

#[derive(Debug)]
pub struct LiveOutcome {
    pub log: RunLog,
    pub tlx: Vec<TlxRecord>,
    /// Telemetry frames dropped because a client was not keeping up.
    pub dropped_frames: u64,
    /// Data-plane inputs overwritten before a tick consumed them.
    pub superseded_inputs: u64,
}

struct Shared {
    mailbox: Mutex<Mailbox>,
    wake: Condvar,
    clients: Mutex<Vec<SyncSender<Arc<Vec<u8>>>>>,
    stop: AtomicBool,
    dropped: AtomicU64,
    welcome: Vec<u8>,
    token: Option<String>,
}

impl Shared {
    fn stopping(&self) -> bool {
        self.stop.load(Ordering::Acquire)
    }

    fn broadcast(&self, frame: Vec<u8>) {
        let frame = Arc::new(frame);
        let mut clients = self.clients.lock().expect("client list poisoned");
        clients.retain(|tx| match tx.try_send(Arc::clone(&frame)) {
            Ok(()) => true,
            Err(TrySendError::Full(_)) => {
                self.dropped.fetch_add(1, Ordering::Relaxed);
                true
            }
            Err(TrySendError::Disconnected(_)) => false,
        });
    }
}

pub struct Gateway {
    addr: SocketAddr,
    shared: Arc<Shared>,
    session: JoinHandle<io::Result<LiveOutcome>>,
    acceptor: JoinHandle<()>,
}

impl Gateway {
    /// Bind, then start the session and accept threads.
    pub fn start(loaded: LoadedConfig, opts: ServeOptions) -> io::Result<Gateway> {
        let listener = TcpListener::bind(&opts.bind)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;

        let welcome = OutboundMessage::new(Outbound::Welcome(Welcome {
            protocol: PROTOCOL_VERSION,
            config: loaded.config.clone(),
            config_digest: loaded.digest.clone(),
            zone_digest: loaded.zone_digest.clone(),
            maze: loaded.maze_text.clone(),
        }));
        let shared = Arc::new(Shared {
            mailbox: Mutex::new(Mailbox::default()),
            wake: Condvar::new(),
            clients: Mutex::new(Vec::new()),
            stop: AtomicBool::new(false),
            dropped: AtomicU64::new(0),
            welcome: encode_outbound(&welcome),
            token: opts.token.clone(),
        });

        let mut header = LogHeader::new(loaded.digest.clone(), &loaded.config, &loaded.maze);
        header.participant = opts.participant.clone();
        header.start_wall_clock = Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true));
        let mut session = Session::new(loaded.config, loaded.maze, header)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
        session.set_zone_digest(loaded.zone_digest);

        let queue = opts.client_queue.max(1);
        let s = Arc::clone(&shared);
        let session = thread::Builder::new().name("session".into()).spawn(move || run_session(session, &opts, &s))?;
        let s = Arc::clone(&shared);
        let acceptor = thread::Builder::new().name("accept".into()).spawn(move || accept_loop(listener, s, queue))?;
        Ok(Gateway { addr, shared, session, acceptor })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Ask the session to end; [`Gateway::wait`] returns once it has.
    pub fn stop(&self) {
        self.shared.stop.store(true, Ordering::Release);
        self.shared.wake.notify_all();
    }

    pub fn is_finished(&self) -> bool {
        self.session.is_finished()
    }

    pub fn wait(self) -> io::Result<LiveOutcome> {
        let Gateway { shared, session, acceptor, .. } = self;
        let outcome = session.join().map_err(|_| io::Error::other("session thread panicked"));
        shared.stop.store(true, Ordering::Release);
        shared.wake.notify_all();
        let _ = acceptor.join();
        outcome?
    }
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>, queue: usize) {
    while !shared.stopping() {
        match listener.accept() {
            Ok((stream, _)) => {
                let s = Arc::clone(&shared);
                let _ = thread::Builder::new().name("client".into()).spawn(move || serve_client(stream, s, queue));
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(5)),
            Err(_) => thread::sleep(Duration::from_millis(50)),
        }
    }
}

fn error_frame(code: &str, message: impl Into<String>, seq: Option<u64>) -> Message {
    let msg = OutboundMessage::new(Outbound::Error { code: code.into(), message: message.into(), seq });
    Message::binary(encode_outbound(&msg))
}

fn serve_client(stream: TcpStream, shared: Arc<Shared>, queue: usize) {
    if stream.set_nonblocking(false).is_err() || stream.set_nodelay(true).is_err() {
        return;
    }
    let Ok(mut ws) = tungstenite::accept(stream) else { return };
    if ws.get_ref().set_read_timeout(Some(CLIENT_POLL)).is_err() {
        return;
    }
    let mut outbox: Option<Receiver<Arc<Vec<u8>>>> = None;
    while !shared.stopping() {
        let decoded = match ws.read() {
            Ok(Message::Binary(bytes)) => decode(&bytes),
            Ok(Message::Text(text)) => InboundMessage::from_json(&text),
            Ok(Message::Close(_)) => break,
            Ok(_) => {
                if flush_outbox(&mut ws, &outbox).is_err() {
                    return;
                }
                continue;
            }
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) =>
            {
                if flush_outbox(&mut ws, &outbox).is_err() {
                    return;
                }
                continue;
            }
            Err(_) => return,
        };
        let keep_open = match handle_message(&mut ws, &shared, &mut outbox, decoded, queue) {
            Ok(open) => open,
            Err(_) => return,
        };
        if !keep_open || flush_outbox(&mut ws, &outbox).is_err() {
            break;
        }
    }
    let _ = ws.close(None);
    let _ = ws.flush();
}

#[allow(clippy::result_large_err)]
fn flush_outbox(ws: &mut WebSocket<TcpStream>, outbox: &Option<Receiver<Arc<Vec<u8>>>>) -> tungstenite::Result<()> {
    let Some(rx) = outbox else { return Ok(()) };
    while let Ok(frame) = rx.try_recv() {
        ws.send(Message::binary(frame.as_slice().to_vec()))?;
    }
    Ok(())
}

/// Returns whether the connection stays open.
#[allow(clippy::result_large_err)]
fn handle_message(
    ws: &mut WebSocket<TcpStream>,
    shared: &Shared,
    outbox: &mut Option<Receiver<Arc<Vec<u8>>>>,
    decoded: Result<InboundMessage, DecodeError>,
    queue: usize,
) -> tungstenite::Result<bool> {
    let msg = match decoded {
        Ok(m) => m,
        Err(e) => {
            ws.send(error_frame(e.code(), e.to_string(), None))?;
            return Ok(true);
        }
    };
    let seq = Some(msg.seq);
    match &msg.body {
        Inbound::Hello { versions, token, .. } => {
            if !versions.contains(&PROTOCOL_VERSION) {
                let text = format!("server speaks protocol {PROTOCOL_VERSION}, client offered {versions:?}");
                ws.send(error_frame("unsupported_version", text, seq))?;
                return Ok(false);
            }
            if shared.token.is_some() && *token != shared.token {
                ws.send(error_frame("unauthorized", "missing or wrong session token", seq))?;
                return Ok(false);
            }
            ws.send(Message::binary(shared.welcome.clone()))?;
            if outbox.is_none() {
                let (tx, rx) = mpsc::sync_channel(queue);
                shared.clients.lock().expect("client list poisoned").push(tx);
                *outbox = Some(rx);
            }
        }
        _ if outbox.is_none() => {
            ws.send(error_frame("hello_required", "send hello before any other message", seq))?;
        }
        _ => {
            let posted = shared.mailbox.lock().expect("mailbox poisoned").coalesce(msg);
            shared.wake.notify_one();
            if let Err(full) = posted {
                ws.send(error_frame("busy", full.to_string(), seq))?;
            }
        }
    }
    Ok(true)
}

fn publish(shared: &Shared, session: &Session, reference: ReferenceVector, events: &mut Vec<RunEvent>, acked: u64) {
    let mut snap = session.snapshot(reference, std::mem::take(events));
    snap.input_seq = snap.input_seq.max(acked);
    shared.broadcast(snapshot_to_frame(&snap));
}

fn open_log(path: &PathBuf, header: &LogHeader) -> io::Result<JsonlWriter<BufWriter<File>>> {
    JsonlWriter::new(BufWriter::new(File::create(path)?), header)
}

fn run_session(mut session: Session, opts: &ServeOptions, shared: &Shared) -> io::Result<LiveOutcome> {
    let config = session.config().clone();
    let tick_period = Duration::from_secs_f64(config.reference_period());
    let telemetry_period = Duration::from_secs_f64(1.0 / config.rates.telemetry_rate);
    let max_ticks = opts.duration.map(|d| (d / config.reference_period()).round() as u64);

    let mut inputs = TickInputs::default();
    let mut tlx = Vec::new();
    let mut events = Vec::new();
    let mut reference = ReferenceVector::ZERO;
    let mut acked = 0u64;
    let mut writer = None;

    let start = Instant::now();
    let mut next_tick = start;
    let mut next_telemetry = start;
    loop {
        let deadline = next_tick.min(next_telemetry);
        let drained = {
            let mut mailbox = shared.mailbox.lock().expect("mailbox poisoned");
            loop {
                let now = Instant::now();
                if !mailbox.is_empty() || shared.stopping() || now >= deadline {
                    break;
                }
                mailbox = shared.wake.wait_timeout(mailbox, deadline - now).expect("mailbox poisoned").0;
            }
            mailbox.drain()
        };
        let fresh = drained != Default::default();
        inputs.fold(drained);
        if let Some(mode) = inputs.mode.take() {
            session.set_source(mode);
        }
        tlx.append(&mut inputs.tlx);
        if fresh {
            acked = acked.max(inputs.input.input_seq.unwrap_or(0));
            publish(shared, &session, reference, &mut events, acked);
        }
        if inputs.stop || shared.stopping() {
            break;
        }

        let now = Instant::now();
        if now >= next_tick {
            let snap = session.tick(inputs.take_input());
            if writer.is_none() {
                if let Some(path) = &opts.log_path {
                    writer = Some(open_log(path, &session.log().header)?);
                }
            }
            if let Some(w) = writer.as_mut() {
                let record = session.log().records.last().expect("tick appends a record");
                w.append(record, &snap.events)?;
            }
            events.extend(snap.events);
            reference = snap.reference;
            next_tick += tick_period;
            if now > next_tick + tick_period * MAX_LAG_TICKS {
                next_tick = now + tick_period;
            }
            if max_ticks.is_some_and(|m| session.stats().reference_ticks >= m) {
                break;
            }
        }
        if now >= next_telemetry {
            publish(shared, &session, reference, &mut events, acked);
            next_telemetry += telemetry_period;
            if now > next_telemetry + telemetry_period * MAX_LAG_TICKS {
                next_telemetry = now + telemetry_period;
            }
        }
    }

    publish(shared, &session, reference, &mut events, acked);
    if let Some(w) = writer {
        w.finish()?;
    }
    shared.stop.store(true, Ordering::Release);
    let superseded_inputs = shared.mailbox.lock().expect("mailbox poisoned").superseded();
    Ok(LiveOutcome {
        log: session.into_log(),
        tlx,
        dropped_frames: shared.dropped.load(Ordering::Relaxed),
        superseded_inputs,
    })
}
