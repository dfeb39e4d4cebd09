use std::io::{BufReader, BufWriter, Read, Write};
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, SyncSender};
use std::thread;
use std::time::{Duration, Instant};

use super::codec::{hello, read_hello, read_message, write_message, Message, VERSION};
use super::{ErrorCode, WireError};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

enum Incoming {
    Hello(u8),
    Msg(Message),
}

enum Outgoing {
    Hello,
    Msg(Message),
}

/// A framed, bidirectional link with per-operation timeouts. Reads and
/// writes run on helper threads so a stalled peer can never block the
/// caller past the timeout.
pub struct Connection {
    out: Option<SyncSender<Outgoing>>,
    acks: Receiver<Result<(), WireError>>,
    incoming: Receiver<Result<Incoming, WireError>>,
    timeout: Duration,
    child: Option<Child>,
    socket: Option<TcpStream>,
}

impl Connection {
    pub fn from_streams<R, W>(reader: R, writer: W, timeout: Duration) -> Connection
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let (in_tx, incoming) = mpsc::channel();
        thread::spawn(move || {
            let mut r = BufReader::with_capacity(1 << 16, reader);
            match read_hello(&mut r) {
                Ok(v) => {
                    if in_tx.send(Ok(Incoming::Hello(v))).is_err() {
                        return;
                    }
                }
                Err(e) => {
                    let _ = in_tx.send(Err(e));
                    return;
                }
            }
            loop {
                let item = read_message(&mut r);
                let stop = item.is_err();
                if in_tx.send(item.map(Incoming::Msg)).is_err() || stop {
                    return;
                }
            }
        });
        let (out, out_rx) = mpsc::sync_channel::<Outgoing>(1);
        let (ack_tx, acks) = mpsc::channel();
        thread::spawn(move || {
            let mut w = BufWriter::with_capacity(1 << 16, writer);
            for item in out_rx {
                let res = match item {
                    Outgoing::Hello => w.write_all(&hello(VERSION)).and_then(|_| w.flush()).map_err(WireError::from),
                    Outgoing::Msg(m) => write_message(&mut w, &m),
                };
                let failed = res.is_err();
                if ack_tx.send(res).is_err() || failed {
                    return;
                }
            }
        });
        Connection { out: Some(out), acks, incoming, timeout, child: None, socket: None }
    }

    /// Spawns `command` through the shell and talks over its stdio.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Connection, WireError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped");
        let stdout = child.stdout.take().expect("piped");
        let mut c = Connection::from_streams(stdout, stdin, timeout);
        c.child = Some(child);
        Ok(c)
    }

    pub fn tcp(stream: TcpStream, timeout: Duration) -> Result<Connection, WireError> {
        stream.set_nodelay(true)?;
        let reader = stream.try_clone()?;
        let writer = stream.try_clone()?;
        let mut c = Connection::from_streams(reader, writer, timeout);
        c.socket = Some(stream);
        Ok(c)
    }

    pub fn connect(addr: &str, timeout: Duration) -> Result<Connection, WireError> {
        let mut last = None;
        for a in addr.to_socket_addrs()? {
            match TcpStream::connect_timeout(&a, timeout) {
                Ok(s) => return Connection::tcp(s, timeout),
                Err(e) => last = Some(e),
            }
        }
        Err(last.map(WireError::Io).unwrap_or_else(|| WireError::BadAddress(addr.to_string())))
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    fn push(&mut self, item: Outgoing) -> Result<(), WireError> {
        let out = self.out.as_ref().ok_or(WireError::Closed)?;
        out.send(item).map_err(|_| WireError::Closed)?;
        match self.acks.recv_timeout(self.timeout) {
            Ok(r) => r,
            Err(RecvTimeoutError::Timeout) => Err(WireError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(WireError::Closed),
        }
    }

    fn pull(&mut self) -> Result<Incoming, WireError> {
        match self.incoming.recv_timeout(self.timeout) {
            Ok(r) => r,
            Err(RecvTimeoutError::Timeout) => Err(WireError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(WireError::Closed),
        }
    }

    pub fn send(&mut self, msg: Message) -> Result<(), WireError> {
        self.push(Outgoing::Msg(msg))
    }

    pub fn recv(&mut self) -> Result<Message, WireError> {
        match self.pull()? {
            Incoming::Msg(m) => Ok(m),
            Incoming::Hello(_) => unreachable!("hello is only read first"),
        }
    }

    /// Sends our hello, then checks the peer's. On mismatch the peer is told
    /// before the error is returned.
    pub fn handshake(&mut self) -> Result<(), WireError> {
        self.push(Outgoing::Hello)?;
        let theirs = match self.pull()? {
            Incoming::Hello(v) => v,
            Incoming::Msg(_) => unreachable!("hello is read first"),
        };
        if theirs != VERSION {
            let message = format!("version {theirs} not supported (expected {VERSION})");
            let _ = self.send(Message::Error { code: ErrorCode::VERSION_MISMATCH, message });
            return Err(WireError::VersionMismatch { ours: VERSION, theirs });
        }
        Ok(())
    }

    /// Stops writing so the peer sees end of stream.
    pub fn close_write(&mut self) {
        self.out = None;
        if let Some(s) = &self.socket {
            let _ = s.shutdown(Shutdown::Write);
        }
    }

    /// Waits for the peer to close its side; any message that arrives first
    /// is returned.
    pub fn await_close(&mut self) -> Result<Option<Message>, WireError> {
        match self.pull() {
            Ok(Incoming::Msg(m)) => Ok(Some(m)),
            Ok(Incoming::Hello(_)) => unreachable!("hello is read first"),
            Err(WireError::Closed) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

impl Drop for Connection {
    fn drop(&mut self) {
        self.out = None;
        if let Some(s) = &self.socket {
            let _ = s.shutdown(Shutdown::Both);
        }
        if let Some(mut child) = self.child.take() {
            let deadline = Instant::now() + Duration::from_secs(2);
            loop {
                match child.try_wait() {
                    Ok(Some(_)) => return,
                    Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(5)),
                    _ => break,
                }
            }
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}
