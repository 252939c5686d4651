//! The generation contract and its transports.
//!
//! A request is one JSON line `{"id", "input"}`, a response one JSON line
//! `{"id", "text"}`. Requests are sequential: one in flight per connection.
//! Backends are addressed as `pipe:CMD` (a child process speaking the
//! contract over stdin/stdout), `http:URL` (`POST /generate`) or
//! `mock:NAME`.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use dreamcode_core::corpus::Corpus;
use dreamcode_core::serialize::{encode, LayoutPolicy, OrderPolicy, Strategy, NO_CHARACTER, NO_EMOTION};

use crate::records::{GenerationRequest, GenerationResponse};

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("request timed out")]
    Timeout,
    #[error("transport error: {0}")]
    Transport(String),
}

pub trait Backend {
    fn generate(&mut self, request: &GenerationRequest) -> Result<String, BackendError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockKind {
    /// Answers with the encoded gold annotation.
    EchoGold,
    /// Always answers "There is no character. There is no emotion."
    AlwaysEmpty,
    /// Answers with a gold encoding broken so that it cannot decode.
    FormatCorruptor,
}

impl MockKind {
    pub const fn name(self) -> &'static str {
        match self {
            MockKind::EchoGold => "echo-gold",
            MockKind::AlwaysEmpty => "always-empty",
            MockKind::FormatCorruptor => "format-corruptor",
        }
    }
}

impl FromStr for MockKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "echo-gold" => Ok(MockKind::EchoGold),
            "always-empty" => Ok(MockKind::AlwaysEmpty),
            "format-corruptor" => Ok(MockKind::FormatCorruptor),
            other => Err(format!(
                "unknown mock {other:?} (expected echo-gold, always-empty or format-corruptor)"
            )),
        }
    }
}

/// Parsed `--backend` value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Pipe(String),
    Http(String),
    Mock(MockKind),
}

impl FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some(("pipe", cmd)) if !cmd.trim().is_empty() => Ok(BackendSpec::Pipe(cmd.into())),
            Some(("http", rest)) => {
                // accept both http:URL and a bare http://host form
                let url = if rest.starts_with("//") { format!("http:{rest}") } else { rest.into() };
                Ok(BackendSpec::Http(url))
            }
            Some(("mock", name)) => name.parse().map(BackendSpec::Mock),
            _ => Err(format!("backend must be pipe:CMD, http:URL or mock:NAME, got {s:?}")),
        }
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Pipe(cmd) => write!(f, "pipe:{cmd}"),
            BackendSpec::Http(url) => write!(f, "http:{url}"),
            BackendSpec::Mock(kind) => write!(f, "mock:{}", kind.name()),
        }
    }
}

pub struct MockBackend {
    kind: MockKind,
    targets: HashMap<String, String>,
}

impl MockBackend {
    /// Precomputes gold target texts for every annotated record.
    pub fn new(
        kind: MockKind,
        corpus: &Corpus,
        strategy: Strategy,
        order: OrderPolicy,
        layout: LayoutPolicy,
    ) -> Self {
        let targets = corpus
            .records
            .iter()
            .filter_map(|r| {
                r.gold.as_ref().map(|g| (r.id.clone(), encode(g, strategy, order, layout)))
            })
            .collect();
        MockBackend { kind, targets }
    }

    pub fn respond(&self, id: &str) -> String {
        let empty = || format!("{NO_CHARACTER} {NO_EMOTION}");
        match self.kind {
            MockKind::AlwaysEmpty => empty(),
            MockKind::EchoGold => self.targets.get(id).cloned().unwrap_or_else(empty),
            MockKind::FormatCorruptor => {
                let gold = self.targets.get(id).cloned().unwrap_or_else(empty);
                corrupt(&gold)
            }
        }
    }
}

/// Breaks a target text: hallucinates an identity subclass when the text
/// has one, otherwise puts chatter in front of the first marker.
fn corrupt(text: &str) -> String {
    if let Some(at) = text.find("identity is ") {
        let start = at + "identity is ".len();
        let end = text[start..].find(',').map_or(text.len(), |e| start + e);
        format!("{}student{}", &text[..start], &text[end..])
    } else {
        format!("Here is what I found: {text}")
    }
}

impl Backend for MockBackend {
    fn generate(&mut self, request: &GenerationRequest) -> Result<String, BackendError> {
        Ok(self.respond(&request.id))
    }
}

/// A child process reading request lines on stdin and writing response
/// lines on stdout.
pub struct PipeBackend {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
}

impl PipeBackend {
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self, BackendError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| BackendError::Unavailable(format!("cannot start {command:?}: {e}")))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(PipeBackend { child, stdin, lines: rx, timeout })
    }
}

impl Backend for PipeBackend {
    fn generate(&mut self, request: &GenerationRequest) -> Result<String, BackendError> {
        let mut line = serde_json::to_string(request).expect("request serializes");
        line.push('\n');
        self.stdin
            .write_all(line.as_bytes())
            .and_then(|()| self.stdin.flush())
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::BrokenPipe => BackendError::Unavailable(format!("write: {e}")),
                _ => BackendError::Transport(format!("write: {e}")),
            })?;

        let deadline = Instant::now() + self.timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.lines.recv_timeout(left) {
                Ok(Ok(line)) => {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let response: GenerationResponse = serde_json::from_str(&line)
                        .map_err(|e| BackendError::Transport(format!("bad response line: {e}")))?;
                    // late answers to requests that already timed out
                    if response.id != request.id {
                        continue;
                    }
                    return Ok(response.text);
                }
                Ok(Err(e)) => return Err(BackendError::Transport(format!("read: {e}"))),
                Err(RecvTimeoutError::Timeout) => return Err(BackendError::Timeout),
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(BackendError::Unavailable("backend closed its output".into()))
                }
            }
        }
    }
}

impl Drop for PipeBackend {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub struct HttpBackend {
    agent: ureq::Agent,
    url: String,
}

impl HttpBackend {
    pub fn new(base: &str, timeout: Duration) -> Self {
        let url = if base.trim_end_matches('/').ends_with("/generate") {
            base.to_string()
        } else {
            format!("{}/generate", base.trim_end_matches('/'))
        };
        let agent: ureq::Agent =
            ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        HttpBackend { agent, url }
    }
}

impl Backend for HttpBackend {
    fn generate(&mut self, request: &GenerationRequest) -> Result<String, BackendError> {
        let result = self
            .agent
            .post(&self.url)
            .send_json(request)
            .and_then(|mut r| r.body_mut().read_json::<GenerationResponse>());
        match result {
            Ok(response) if response.id == request.id => Ok(response.text),
            Ok(response) => Err(BackendError::Transport(format!(
                "response id {:?} does not match request {:?}",
                response.id, request.id
            ))),
            Err(ureq::Error::Timeout(_)) => Err(BackendError::Timeout),
            Err(e @ (ureq::Error::ConnectionFailed | ureq::Error::HostNotFound)) => {
                Err(BackendError::Unavailable(format!("{}: {e}", self.url)))
            }
            Err(ureq::Error::Io(e)) if e.kind() == std::io::ErrorKind::ConnectionRefused => {
                Err(BackendError::Unavailable(format!("{}: {e}", self.url)))
            }
            Err(e) => Err(BackendError::Transport(e.to_string())),
        }
    }
}

/// Serves a mock over stdin/stdout, one response line per request line.
/// Malformed requests get an error object and the loop keeps going.
pub fn serve_mock_stdio<R: BufRead, W: Write>(
    mock: &MockBackend,
    input: R,
    mut output: W,
) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<GenerationRequest>(&line) {
            Ok(req) => {
                let response = GenerationResponse { text: mock.respond(&req.id), id: req.id };
                serde_json::to_writer(&mut output, &response)?;
            }
            Err(e) => {
                serde_json::to_writer(&mut output, &serde_json::json!({ "error": e.to_string() }))?;
            }
        }
        output.write_all(b"\n")?;
        output.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use dreamcode_core::serialize::{decode, NullReason};

    #[test]
    fn parses_specs() {
        assert_eq!("pipe:python3 serve.py".parse(), Ok(BackendSpec::Pipe("python3 serve.py".into())));
        assert_eq!(
            "http:http://127.0.0.1:8000".parse(),
            Ok(BackendSpec::Http("http://127.0.0.1:8000".into()))
        );
        assert_eq!(
            "http://127.0.0.1:8000".parse(),
            Ok(BackendSpec::Http("http://127.0.0.1:8000".into()))
        );
        assert_eq!("mock:echo-gold".parse(), Ok(BackendSpec::Mock(MockKind::EchoGold)));
        assert!("mock:oracle".parse::<BackendSpec>().is_err());
        assert!("ftp:x".parse::<BackendSpec>().is_err());
        assert_eq!(BackendSpec::Mock(MockKind::AlwaysEmpty).to_string(), "mock:always-empty");
    }

    #[test]
    fn corruption_never_decodes() {
        let baseline = "[CHARACTER] status is individual alive, gender is female, identity is known, age is adult [SYMBOL] 1FKA There is no emotion.";
        let bad = corrupt(baseline);
        assert!(bad.contains("identity is student,"));
        assert_eq!(decode(&bad, Strategy::Baseline).unwrap_err().reason, NullReason::UnknownClassPhrase);

        let empty = "There is no character. There is no emotion.";
        assert_eq!(
            decode(&corrupt(empty), Strategy::Comma).unwrap_err().reason,
            NullReason::UnknownMarkerStructure
        );
    }

    #[test]
    fn stdio_server_answers_and_survives_garbage() {
        let mock = MockBackend {
            kind: MockKind::AlwaysEmpty,
            targets: HashMap::new(),
        };
        let input = "{\"id\":\"a\",\"input\":\"x\"}\nnot json\n{\"id\":\"b\",\"input\":\"y\"}\n";
        let mut out = Vec::new();
        serve_mock_stdio(&mock, input.as_bytes(), &mut out).unwrap();
        let lines: Vec<&str> = std::str::from_utf8(&out).unwrap().lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].contains("\"id\":\"a\""));
        assert!(lines[1].contains("error"));
        assert!(lines[2].contains("\"id\":\"b\""));
    }
}
