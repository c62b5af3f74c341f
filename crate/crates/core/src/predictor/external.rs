use std::io::{Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, SyncSender};
use std::sync::Mutex;
use std::time::Duration;

use super::protocol::{ProtocolError, RequestFrame, ResponseFrame};
use super::{Predictor, PredictorCapabilities, PredictorError, PredictorInput};
use crate::raster::ProbMask;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

/// Where the sidecar lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    /// `host:port`
    Tcp(String),
    /// `unix:/path/to/socket`
    #[cfg(unix)]
    Unix(std::path::PathBuf),
    /// `cmd:<shell command>`; frames go over the child's stdin/stdout.
    Command(String),
}

impl FromStr for Endpoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(cmd) = s.strip_prefix("cmd:") {
            if cmd.trim().is_empty() {
                return Err("empty sidecar command".into());
            }
            return Ok(Endpoint::Command(cmd.to_string()));
        }
        #[cfg(unix)]
        if let Some(path) = s.strip_prefix("unix:") {
            return Ok(Endpoint::Unix(path.into()));
        }
        let addr = s.strip_prefix("tcp:").unwrap_or(s);
        if addr.rsplit_once(':').is_none_or(|(h, p)| h.is_empty() || p.parse::<u16>().is_err()) {
            return Err(format!("expected host:port, unix:<path> or cmd:<command>, got {s:?}"));
        }
        Ok(Endpoint::Tcp(addr.to_string()))
    }
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Endpoint::Tcp(a) => write!(f, "{a}"),
            #[cfg(unix)]
            Endpoint::Unix(p) => write!(f, "unix:{}", p.display()),
            Endpoint::Command(c) => write!(f, "cmd:{c}"),
        }
    }
}

type Reply = Result<ResponseFrame, ProtocolError>;

/// One live link to the sidecar. I/O runs on a worker thread so callers can
/// wait with a timeout regardless of transport.
struct Connection {
    requests: SyncSender<Vec<u8>>,
    replies: Receiver<Reply>,
    closer: Option<Box<dyn FnOnce() + Send>>,
}

impl Connection {
    fn open(endpoint: &Endpoint, timeout: Duration) -> Result<Self, PredictorError> {
        let (reader, writer, closer): (Box<dyn Read + Send>, Box<dyn Write + Send>, Box<dyn FnOnce() + Send>) =
            match endpoint {
                Endpoint::Tcp(addr) => {
                    let sock = addr
                        .to_socket_addrs()?
                        .next()
                        .ok_or_else(|| PredictorError::Backend(format!("cannot resolve {addr}")))?;
                    let stream = TcpStream::connect_timeout(&sock, timeout)?;
                    stream.set_nodelay(true)?;
                    let reader = stream.try_clone()?;
                    let handle = stream.try_clone()?;
                    (
                        Box::new(reader),
                        Box::new(stream),
                        Box::new(move || {
                            let _ = handle.shutdown(std::net::Shutdown::Both);
                        }),
                    )
                }
                #[cfg(unix)]
                Endpoint::Unix(path) => {
                    let stream = std::os::unix::net::UnixStream::connect(path)?;
                    let reader = stream.try_clone()?;
                    let handle = stream.try_clone()?;
                    (
                        Box::new(reader),
                        Box::new(stream),
                        Box::new(move || {
                            let _ = handle.shutdown(std::net::Shutdown::Both);
                        }),
                    )
                }
                Endpoint::Command(cmd) => {
                    let mut child: Child = Command::new("sh")
                        .arg("-c")
                        .arg(cmd)
                        .stdin(Stdio::piped())
                        .stdout(Stdio::piped())
                        .spawn()?;
                    let stdin = child.stdin.take().expect("piped stdin");
                    let stdout = child.stdout.take().expect("piped stdout");
                    (
                        Box::new(stdout),
                        Box::new(stdin),
                        Box::new(move || {
                            let _ = child.kill();
                            let _ = child.wait();
                        }),
                    )
                }
            };

        let (req_tx, req_rx) = mpsc::sync_channel::<Vec<u8>>(1);
        let (rep_tx, rep_rx) = mpsc::sync_channel::<Reply>(1);
        std::thread::Builder::new()
            .name("clore-sidecar-io".into())
            .spawn(move || {
                let mut reader = std::io::BufReader::new(reader);
                let mut writer = writer;
                for frame in req_rx {
                    let reply = writer
                        .write_all(&frame)
                        .and_then(|_| writer.flush())
                        .map_err(ProtocolError::from)
                        .and_then(|_| ResponseFrame::read_from(&mut reader));
                    let failed = reply.is_err();
                    if rep_tx.send(reply).is_err() || failed {
                        break;
                    }
                }
            })?;
        Ok(Self {
            requests: req_tx,
            replies: rep_rx,
            closer: Some(closer),
        })
    }
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(close) = self.closer.take() {
            close();
        }
    }
}

/// Predictor backed by a sidecar speaking the frame protocol. One request is
/// in flight per connection; a timeout or transport error drops the
/// connection and the next call reconnects.
pub struct ExternalPredictor {
    endpoint: Endpoint,
    timeout: Duration,
    conn: Mutex<Option<Connection>>,
}

impl ExternalPredictor {
    pub fn new(endpoint: Endpoint) -> Self {
        Self::with_timeout(endpoint, DEFAULT_TIMEOUT)
    }

    pub fn with_timeout(endpoint: Endpoint, timeout: Duration) -> Self {
        Self {
            endpoint,
            timeout,
            conn: Mutex::new(None),
        }
    }

    pub fn endpoint(&self) -> &Endpoint {
        &self.endpoint
    }
}

impl Predictor for ExternalPredictor {
    fn predict(&self, input: &PredictorInput) -> Result<ProbMask, PredictorError> {
        let frame = RequestFrame::from_input(input).encode();
        let mut slot = self.conn.lock().unwrap_or_else(|e| e.into_inner());
        if slot.is_none() {
            *slot = Some(Connection::open(&self.endpoint, self.timeout)?);
        }
        let conn = slot.as_ref().expect("connection just opened");
        if conn.requests.send(frame).is_err() {
            *slot = None;
            return Err(PredictorError::Backend(format!("sidecar {} disconnected", self.endpoint)));
        }
        match conn.replies.recv_timeout(self.timeout) {
            Ok(Ok(response)) => Ok(response.into_prob(input.dims())?),
            Ok(Err(e)) => {
                *slot = None;
                Err(e.into())
            }
            Err(RecvTimeoutError::Timeout) => {
                *slot = None;
                Err(PredictorError::Timeout(self.timeout))
            }
            Err(RecvTimeoutError::Disconnected) => {
                *slot = None;
                Err(PredictorError::Backend(format!("sidecar {} disconnected", self.endpoint)))
            }
        }
    }

    fn capabilities(&self) -> PredictorCapabilities {
        PredictorCapabilities {
            concurrent_safe: false,
            fixed_input_dims: None,
        }
    }

    fn name(&self) -> &str {
        "external"
    }
}
