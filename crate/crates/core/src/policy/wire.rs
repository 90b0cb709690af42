//! Wire protocol for external policies.
//!
//! A frame is the decimal byte length of a JSON document, a newline, the
//! document, and a newline. Requests and responses strictly alternate on one
//! connection:
//!
//! ```text
//! {"v":1,"expr":["INTEGRAL","cos","x","x"],"beam":5}
//! {"v":1,"candidates":[{"subexpr":[...],"rule":"CosRule","params":[],"logprob":-0.1}]}
//! ```

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
#[cfg(unix)]
use std::os::unix::net::UnixStream;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::codec::{tokens_to_tree, tree_to_seq};
use crate::engine::{locate, Action, ActionCall, Substitution};
use crate::Expr;

use super::{Policy, PolicyCandidate, PolicyError, Proposal};

pub const PROTOCOL_VERSION: u32 = 1;
/// Frames longer than this are rejected without reading them.
pub const MAX_FRAME_BYTES: usize = 16 << 20;
pub const DEFAULT_REQUEST_TIMEOUT: Duration = Duration::from_secs(5);
const WAIT_SLICE: Duration = Duration::from_millis(200);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyRequest {
    pub v: u32,
    pub expr: Vec<String>,
    pub beam: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireCandidate {
    pub subexpr: Vec<String>,
    pub rule: String,
    pub params: Vec<Vec<String>>,
    pub logprob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyResponse {
    pub v: u32,
    pub candidates: Vec<WireCandidate>,
}

fn tokens(e: &Expr) -> Vec<String> {
    tree_to_seq(e).into_iter().map(str::to_string).collect()
}

impl PolicyRequest {
    pub fn new(e: &Expr, beam: usize) -> PolicyRequest {
        PolicyRequest {
            v: PROTOCOL_VERSION,
            expr: tokens(e),
            beam,
        }
    }
}

impl WireCandidate {
    pub fn from_candidate(c: &PolicyCandidate) -> WireCandidate {
        WireCandidate {
            subexpr: tokens(&c.subexpr),
            rule: c.call.action.name().to_string(),
            params: c.call.params.iter().map(tokens).collect(),
            logprob: c.logprob,
        }
    }

    /// Decode against the expression `e` the request was about; `None` if
    /// any part fails to parse, the rule is unknown, the parameter count is
    /// wrong, or the subexpression does not occur in `e`.
    pub fn decode(&self, e: &Expr) -> Option<PolicyCandidate> {
        let action = Action::from_name(&self.rule)?;
        let subexpr = tokens_to_tree(&self.subexpr).ok()?;
        let params = self
            .params
            .iter()
            .map(|p| tokens_to_tree(p).ok())
            .collect::<Option<Vec<_>>>()?;
        if params.len() != action.arity() || !self.logprob.is_finite() {
            return None;
        }
        locate(e, &subexpr)?;
        Some(PolicyCandidate {
            subexpr,
            call: ActionCall::new(action, params),
            logprob: self.logprob,
        })
    }
}

/// Serialize `msg` as one frame.
pub fn encode_frame<T: Serialize>(msg: &T) -> Vec<u8> {
    let body = serde_json::to_vec(msg).expect("wire records always serialize");
    let mut out = format!("{}\n", body.len()).into_bytes();
    out.extend_from_slice(&body);
    out.push(b'\n');
    out
}

pub fn write_frame<W: Write, T: Serialize>(w: &mut W, msg: &T) -> std::io::Result<()> {
    w.write_all(&encode_frame(msg))?;
    w.flush()
}

/// Read one frame. Transport failures are `Transport`; anything that is not
/// a well-formed frame of the expected record is `Frame`.
pub fn read_frame<R: BufRead, T: DeserializeOwned>(r: &mut R) -> Result<T, PolicyError> {
    let mut header = Vec::new();
    r.by_ref().take(24).read_until(b'\n', &mut header)?;
    if header.is_empty() {
        return Err(PolicyError::Transport(std::io::ErrorKind::UnexpectedEof.into()));
    }
    if header.last() != Some(&b'\n') {
        return Err(PolicyError::Frame("bad length header".into()));
    }
    header.pop();
    let len: usize = std::str::from_utf8(&header)
        .ok()
        .filter(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()))
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| PolicyError::Frame("bad length header".into()))?;
    if len > MAX_FRAME_BYTES {
        return Err(PolicyError::Frame(format!("frame of {} bytes is too large", len)));
    }
    let mut body = vec![0u8; len + 1];
    r.read_exact(&mut body)?;
    if body.pop() != Some(b'\n') {
        return Err(PolicyError::Frame("missing frame terminator".into()));
    }
    serde_json::from_slice(&body).map_err(|e| PolicyError::Frame(e.to_string()))
}

fn is_timeout(e: &std::io::Error) -> bool {
    matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut)
}

/// Decode a complete response frame from bytes.
pub fn decode_response(bytes: &[u8]) -> Result<PolicyResponse, PolicyError> {
    let mut r = bytes;
    let resp: PolicyResponse = read_frame(&mut r)?;
    if !r.is_empty() {
        return Err(PolicyError::Frame("trailing bytes".into()));
    }
    if resp.v != PROTOCOL_VERSION {
        return Err(PolicyError::Version(resp.v));
    }
    Ok(resp)
}

/// Where an external policy lives: `tcp:HOST:PORT` (or plain `HOST:PORT`),
/// `unix:PATH`, or `cmd:PROGRAM ARGS..` for a child speaking on stdio.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolicyAddr {
    Tcp(String),
    Unix(String),
    Command(Vec<String>),
}

impl std::str::FromStr for PolicyAddr {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<PolicyAddr, PolicyError> {
        let bad = || PolicyError::Address(s.to_string());
        if let Some(rest) = s.strip_prefix("tcp:") {
            return Ok(PolicyAddr::Tcp(rest.to_string()));
        }
        if let Some(rest) = s.strip_prefix("unix:") {
            return (!rest.is_empty()).then(|| PolicyAddr::Unix(rest.to_string())).ok_or_else(bad);
        }
        if let Some(rest) = s.strip_prefix("cmd:") {
            let argv: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
            return (!argv.is_empty()).then_some(PolicyAddr::Command(argv)).ok_or_else(bad);
        }
        if s.rsplit_once(':').is_some_and(|(h, p)| !h.is_empty() && p.parse::<u16>().is_ok()) {
            return Ok(PolicyAddr::Tcp(s.to_string()));
        }
        Err(bad())
    }
}

enum Conn {
    Stream {
        reader: BufReader<Box<dyn ReadStream>>,
        writer: Box<dyn ReadStream>,
    },
    Child {
        child: Child,
        stdin: ChildStdin,
        rx: Receiver<Result<PolicyResponse, PolicyError>>,
    },
}

trait ReadStream: Read + Write + Send {
    fn set_timeout(&self, t: Duration) -> std::io::Result<()>;
    fn try_clone_box(&self) -> std::io::Result<Box<dyn ReadStream>>;
}

impl ReadStream for TcpStream {
    fn set_timeout(&self, t: Duration) -> std::io::Result<()> {
        self.set_read_timeout(Some(t))
    }
    fn try_clone_box(&self) -> std::io::Result<Box<dyn ReadStream>> {
        Ok(Box::new(self.try_clone()?))
    }
}

#[cfg(unix)]
impl ReadStream for UnixStream {
    fn set_timeout(&self, t: Duration) -> std::io::Result<()> {
        self.set_read_timeout(Some(t))
    }
    fn try_clone_box(&self) -> std::io::Result<Box<dyn ReadStream>> {
        Ok(Box::new(self.try_clone()?))
    }
}

impl Drop for Conn {
    fn drop(&mut self) {
        if let Conn::Child { child, .. } = self {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// Client for a policy server. After a timeout or a transport error the
/// connection is dropped and re-established on the next request, so a late
/// answer can never be mistaken for the reply to a later request.
pub struct ExternalPolicy {
    addr: PolicyAddr,
    timeout: Duration,
    deadline: Option<Instant>,
    conn: Option<Conn>,
}

impl ExternalPolicy {
    pub fn new(addr: PolicyAddr) -> ExternalPolicy {
        ExternalPolicy {
            addr,
            timeout: DEFAULT_REQUEST_TIMEOUT,
            deadline: None,
            conn: None,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> ExternalPolicy {
        self.timeout = timeout;
        self
    }

    fn connect(&self) -> Result<Conn, PolicyError> {
        let stream: Box<dyn ReadStream> = match &self.addr {
            PolicyAddr::Tcp(a) => {
                let s = TcpStream::connect(a)?;
                s.set_nodelay(true)?;
                Box::new(s)
            }
            #[cfg(unix)]
            PolicyAddr::Unix(p) => Box::new(UnixStream::connect(p)?),
            #[cfg(not(unix))]
            PolicyAddr::Unix(p) => return Err(PolicyError::Address(p.clone())),
            PolicyAddr::Command(argv) => {
                let mut child = Command::new(&argv[0])
                    .args(&argv[1..])
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .spawn()?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                let (tx, rx) = mpsc::channel();
                std::thread::spawn(move || {
                    let mut r = BufReader::new(stdout);
                    loop {
                        let msg = read_frame(&mut r);
                        let stop = matches!(msg, Err(PolicyError::Transport(_)));
                        if tx.send(msg).is_err() || stop {
                            return;
                        }
                    }
                });
                return Ok(Conn::Child { child, stdin, rx });
            }
        };
        stream.set_timeout(self.timeout)?;
        let writer = stream.try_clone_box()?;
        Ok(Conn::Stream {
            reader: BufReader::new(stream),
            writer,
        })
    }

    /// The per-request timeout, shortened to what is left before the
    /// deadline.
    fn request_timeout(&self) -> Duration {
        let t = match self.deadline {
            Some(d) => self.timeout.min(d.saturating_duration_since(Instant::now())),
            None => self.timeout,
        };
        t.max(Duration::from_millis(1))
    }

    /// One raw request/response exchange. `Ok(None)` means the server did
    /// not answer in time.
    pub fn exchange(&mut self, req: &PolicyRequest) -> Result<Option<PolicyResponse>, PolicyError> {
        if self.conn.is_none() {
            self.conn = Some(self.connect()?);
        }
        let timeout = self.request_timeout();
        let result = match self.conn.as_mut().expect("connected") {
            Conn::Stream { reader, writer } => {
                write_frame(writer, req)?;
                let until = Instant::now() + timeout;
                // Socket timeouts drift from the monotonic clock on some
                // hosts, so wait for the first byte in short slices.
                let ready = loop {
                    let left = until.saturating_duration_since(Instant::now());
                    if left.is_zero() {
                        break Ok(false);
                    }
                    reader.get_ref().set_timeout(left.min(WAIT_SLICE))?;
                    match reader.fill_buf() {
                        Ok(_) => break Ok(true),
                        Err(e) if is_timeout(&e) || e.kind() == std::io::ErrorKind::Interrupted => {}
                        Err(e) => break Err(e),
                    }
                };
                match ready {
                    Ok(true) => {
                        let left = until.saturating_duration_since(Instant::now());
                        reader.get_ref().set_timeout(left.max(Duration::from_millis(1)))?;
                        match read_frame::<_, PolicyResponse>(reader) {
                            Err(PolicyError::Transport(e)) if is_timeout(&e) => Ok(None),
                            other => other.map(Some),
                        }
                    }
                    Ok(false) => Ok(None),
                    Err(e) => Err(e.into()),
                }
            }
            Conn::Child { stdin, rx, .. } => {
                write_frame(stdin, req)?;
                match rx.recv_timeout(timeout) {
                    Ok(r) => r.map(Some),
                    Err(RecvTimeoutError::Timeout) => Ok(None),
                    Err(RecvTimeoutError::Disconnected) => {
                        Err(PolicyError::Transport(std::io::ErrorKind::BrokenPipe.into()))
                    }
                }
            }
        };
        match &result {
            Ok(Some(resp)) if resp.v != PROTOCOL_VERSION => {
                self.conn = None;
                return Err(PolicyError::Version(resp.v));
            }
            Ok(Some(_)) => {}
            _ => self.conn = None,
        }
        result
    }
}

impl Policy for ExternalPolicy {
    fn propose(&mut self, e: &Expr, _subs: &[Substitution], n: usize) -> Result<Proposal, PolicyError> {
        let limit = self.request_timeout();
        let Some(resp) = self.exchange(&PolicyRequest::new(e, n))? else {
            if limit < self.timeout {
                return Err(PolicyError::Deadline);
            }
            log::warn!("policy server did not answer within {:?}", limit);
            return Ok(Proposal::default());
        };
        let mut out = Proposal::default();
        for c in resp.candidates.iter().take(n) {
            match c.decode(e) {
                Some(c) => out.candidates.push(c),
                None => out.invalid += 1,
            }
        }
        out.invalid += resp.candidates.len().saturating_sub(n);
        Ok(out)
    }

    fn name(&self) -> String {
        format!("external({:?})", self.addr)
    }

    fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.deadline = deadline;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_round_trip() {
        let resp = PolicyResponse {
            v: 1,
            candidates: vec![WireCandidate {
                subexpr: vec!["INTEGRAL".into(), "cos".into(), "x".into(), "x".into()],
                rule: "CosRule".into(),
                params: vec![],
                logprob: -0.25,
            }],
        };
        let bytes = encode_frame(&resp);
        let nl = bytes.iter().position(|b| *b == b'\n').unwrap();
        let len: usize = std::str::from_utf8(&bytes[..nl]).unwrap().parse().unwrap();
        assert_eq!(bytes.len(), nl + 1 + len + 1);
        assert_eq!(decode_response(&bytes).unwrap(), resp);
    }

    #[test]
    fn rejects_bad_frames() {
        for bad in [
            &b""[..],
            b"abc\n{}\n",
            b"2\n{}",
            b"2\n{}x",
            b"99999999999999999999\n",
            b"2\n{}\n\n",
            b"17\n{\"v\":1,\"oops\":2}\n",
        ] {
            assert!(decode_response(bad).is_err(), "{:?}", String::from_utf8_lossy(bad));
        }
        let wrong_version = encode_frame(&PolicyResponse { v: 2, candidates: vec![] });
        assert!(matches!(decode_response(&wrong_version), Err(PolicyError::Version(2))));
    }

    #[test]
    fn addresses() {
        assert_eq!("127.0.0.1:9000".parse::<PolicyAddr>().unwrap(), PolicyAddr::Tcp("127.0.0.1:9000".into()));
        assert_eq!("unix:/tmp/p.sock".parse::<PolicyAddr>().unwrap(), PolicyAddr::Unix("/tmp/p.sock".into()));
        assert_eq!(
            "cmd:python3 serve.py".parse::<PolicyAddr>().unwrap(),
            PolicyAddr::Command(vec!["python3".into(), "serve.py".into()])
        );
        assert!("nonsense".parse::<PolicyAddr>().is_err());
    }
}
