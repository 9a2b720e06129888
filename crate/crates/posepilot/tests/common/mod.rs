//! Loopback websocket client and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::io;
use std::net::{SocketAddr, TcpStream};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use posepilot::gateway::{decode_outbound, encode_inbound, Inbound, InboundMessage, Outbound, Welcome};
use tungstenite::{Message, WebSocket};

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub struct Client {
    ws: WebSocket<TcpStream>,
    seq: u64,
    epoch: Instant,
}

impl Client {
    pub fn connect(addr: SocketAddr) -> Client {
        let stream = TcpStream::connect(addr).expect("connect");
        stream.set_nodelay(true).unwrap();
        let (ws, _) = tungstenite::client(format!("ws://{addr}/"), stream).expect("handshake");
        ws.get_ref().set_read_timeout(Some(Duration::from_millis(2))).unwrap();
        Client { ws, seq: 0, epoch: Instant::now() }
    }

    /// Connect and complete the hello exchange.
    pub fn join(addr: SocketAddr, token: Option<&str>) -> (Client, Welcome) {
        let mut c = Client::connect(addr);
        c.send(Inbound::Hello { client: "test".into(), versions: vec![1], token: token.map(Into::into) });
        match c.recv(Duration::from_secs(5)) {
            Some(Outbound::Welcome(w)) => (c, w),
            other => panic!("expected welcome, got {other:?}"),
        }
    }

    /// Send one message; returns its sequence number.
    pub fn send(&mut self, body: Inbound) -> u64 {
        self.seq += 1;
        let msg = InboundMessage::new(self.seq, self.epoch.elapsed().as_secs_f64(), body);
        self.send_raw(encode_inbound(&msg));
        self.seq
    }

    pub fn send_raw(&mut self, bytes: Vec<u8>) {
        self.ws.send(Message::binary(bytes)).expect("send");
    }

    pub fn send_text(&mut self, text: &str) {
        self.ws.send(Message::text(text)).expect("send");
    }

    /// Next decoded server frame, or `None` on timeout or close.
    pub fn recv(&mut self, timeout: Duration) -> Option<Outbound> {
        let end = Instant::now() + timeout;
        while Instant::now() < end {
            match self.ws.read() {
                Ok(Message::Binary(b)) => return Some(decode_outbound(&b).expect("server frame decodes").body),
                Ok(Message::Close(_)) => return None,
                Ok(_) => {}
                Err(tungstenite::Error::Io(e))
                    if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
                Err(_) => return None,
            }
        }
        None
    }

    /// Wait for the first telemetry frame acknowledging `seq`.
    pub fn wait_ack(&mut self, seq: u64, timeout: Duration) -> Option<Instant> {
        let end = Instant::now() + timeout;
        while Instant::now() < end {
            if let Some(Outbound::Telemetry(t)) = self.recv(end - Instant::now()) {
                if t.input_seq >= seq {
                    return Some(Instant::now());
                }
            }
        }
        None
    }

    /// True once the server has closed the connection.
    pub fn closed(&mut self, timeout: Duration) -> bool {
        let end = Instant::now() + timeout;
        while Instant::now() < end {
            match self.ws.read() {
                Ok(Message::Close(_)) => return true,
                Ok(_) => {}
                Err(tungstenite::Error::Io(e))
                    if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
                Err(_) => return true,
            }
        }
        false
    }
}

/// Nearest-rank percentile of unsorted samples.
pub fn percentile(samples: &mut [f64], p: f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * samples.len() as f64).ceil().max(1.0) as usize;
    samples[rank - 1]
}

/// Measure ack latency of `n` joystick messages sent at `hz`; returns seconds.
pub fn ack_latencies(client: &mut Client, n: usize, hz: f64) -> Vec<f64> {
    let period = Duration::from_secs_f64(1.0 / hz);
    let mut next = Instant::now();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let a = 0.5 * ((i as f64) * 0.1).sin();
        let sent = Instant::now();
        let seq = client.send(Inbound::JoyAxes { axes: vec![0.0, a, 0.0, 0.0] });
        let acked = client.wait_ack(seq, Duration::from_secs(1)).expect("telemetry acknowledges input");
        out.push((acked - sent).as_secs_f64());
        next += period;
        if let Some(wait) = next.checked_duration_since(Instant::now()) {
            std::thread::sleep(wait);
        }
    }
    out
}
