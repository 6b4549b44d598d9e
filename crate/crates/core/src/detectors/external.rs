//! Client side of the external detector worker protocol.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, Command, ExitStatus, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use super::protocol::{ClientMessage, WorkerMessage, PROTOCOL_VERSION};
use super::{sort_by_score, DetectContext, Detector};
use crate::error::DetectError;
use crate::geometry::{BBox, Detection};
use crate::raster::Image;

pub const DEFAULT_EXTERN_TIMEOUT: Duration = Duration::from_secs(5);

/// One connection to a detector worker. Requests are strictly sequential.
pub struct ExternClient {
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    child: Option<Child>,
    timeout: Duration,
    next_id: u64,
    /// Ids whose responses we stopped waiting for; late replies are discarded.
    abandoned: HashSet<u64>,
    worker_name: String,
    closed: bool,
}

impl std::fmt::Debug for ExternClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternClient")
            .field("worker_name", &self.worker_name)
            .field("timeout", &self.timeout)
            .field("next_id", &self.next_id)
            .finish_non_exhaustive()
    }
}

impl ExternClient {
    /// Runs `command` through `sh -c` and performs the handshake.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self, DetectError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(DetectError::Spawn)?;
        let stdin = child.stdin.take().expect("stdin piped");
        let stdout = child.stdout.take().expect("stdout piped");
        let mut client = Self::new(stdout, stdin, timeout);
        client.child = Some(child);
        client.handshake()?;
        Ok(client)
    }

    /// Handshakes over an arbitrary byte stream pair (worker output, worker input).
    pub fn connect<R, W>(from_worker: R, to_worker: W, timeout: Duration) -> Result<Self, DetectError>
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let mut client = Self::new(from_worker, to_worker, timeout);
        client.handshake()?;
        Ok(client)
    }

    fn new<R, W>(from_worker: R, to_worker: W, timeout: Duration) -> Self
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let (tx, rx) = mpsc::channel();
        thread::Builder::new()
            .name("extern-detector-reader".into())
            .spawn(move || {
                for line in BufReader::new(from_worker).lines() {
                    let stop = line.is_err();
                    if tx.send(line).is_err() || stop {
                        break;
                    }
                }
            })
            .expect("spawn reader thread");
        Self {
            writer: Box::new(to_worker),
            lines: rx,
            child: None,
            timeout,
            next_id: 0,
            abandoned: HashSet::new(),
            worker_name: String::new(),
            closed: false,
        }
    }

    pub fn worker_name(&self) -> &str {
        &self.worker_name
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    fn send(&mut self, msg: &ClientMessage) -> Result<(), DetectError> {
        let line = msg.to_line();
        let res = self.writer.write_all(line.as_bytes()).and_then(|_| self.writer.flush());
        res.map_err(|e| match e.kind() {
            std::io::ErrorKind::BrokenPipe => DetectError::Crashed,
            _ => DetectError::Io(e),
        })
    }

    fn recv(&mut self, deadline: Instant) -> Result<WorkerMessage, DetectError> {
        let remaining = deadline.saturating_duration_since(Instant::now());
        match self.lines.recv_timeout(remaining) {
            Ok(Ok(line)) => serde_json::from_str(line.trim())
                .map_err(|e| DetectError::Malformed(format!("{e}: {}", truncate(&line)))),
            Ok(Err(e)) => Err(DetectError::Io(e)),
            Err(RecvTimeoutError::Timeout) => Err(DetectError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(DetectError::Crashed),
        }
    }

    fn handshake(&mut self) -> Result<(), DetectError> {
        let deadline = Instant::now() + self.timeout;
        match self.recv(deadline)? {
            WorkerMessage::Hello { version, name } if version == PROTOCOL_VERSION => {
                self.worker_name = name;
            }
            WorkerMessage::Hello { version, .. } => {
                return Err(DetectError::Handshake(format!("unsupported protocol version {version}")));
            }
            other => return Err(DetectError::Handshake(format!("expected hello, got {other:?}"))),
        }
        self.send(&ClientMessage::Hello { version: PROTOCOL_VERSION })
    }

    /// Sends one patch and waits for the matching response.
    pub fn detect_image(&mut self, patch: &Image) -> Result<Vec<Detection>, DetectError> {
        if self.closed {
            return Err(DetectError::Crashed);
        }
        let id = self.next_id;
        self.next_id += 1;
        let msg = ClientMessage::detect(id, patch).map_err(|e| DetectError::Encode(e.to_string()))?;
        let res = self.send(&msg).and_then(|_| self.await_response(id, patch));
        match &res {
            Err(DetectError::Timeout(_)) => {
                self.abandoned.insert(id);
            }
            Err(DetectError::Crashed) => self.closed = true,
            _ => {}
        }
        res
    }

    fn await_response(&mut self, id: u64, patch: &Image) -> Result<Vec<Detection>, DetectError> {
        let deadline = Instant::now() + self.timeout;
        loop {
            match self.recv(deadline)? {
                WorkerMessage::Detections { id: got, .. } | WorkerMessage::Error { id: Some(got), .. }
                    if self.abandoned.remove(&got) =>
                {
                    continue;
                }
                WorkerMessage::Detections { id: got, detections } => {
                    if got != id {
                        return Err(DetectError::IdMismatch { expected: id, got });
                    }
                    return validate(detections, patch);
                }
                WorkerMessage::Error { id: Some(got), .. } if got != id => {
                    return Err(DetectError::IdMismatch { expected: id, got });
                }
                WorkerMessage::Error { message, .. } => return Err(DetectError::Worker(message)),
                WorkerMessage::Hello { .. } => {
                    return Err(DetectError::Malformed("unexpected hello after handshake".into()));
                }
            }
        }
    }

    /// Asks the worker to exit and waits for it (bounded by the timeout).
    pub fn shutdown(mut self) -> Result<Option<ExitStatus>, DetectError> {
        self.shutdown_inner()
    }

    fn shutdown_inner(&mut self) -> Result<Option<ExitStatus>, DetectError> {
        if !self.closed {
            self.closed = true;
            // the worker may already be gone
            let _ = self.send(&ClientMessage::Shutdown);
        }
        let Some(mut child) = self.child.take() else {
            return Ok(None);
        };
        drop(child.stdin.take());
        let deadline = Instant::now() + self.timeout;
        loop {
            if let Some(status) = child.try_wait()? {
                return Ok(Some(status));
            }
            if Instant::now() >= deadline {
                child.kill()?;
                return Ok(Some(child.wait()?));
            }
            thread::sleep(Duration::from_millis(5));
        }
    }
}

impl Drop for ExternClient {
    fn drop(&mut self) {
        if let Err(e) = self.shutdown_inner() {
            log::warn!("detector worker shutdown failed: {e}");
        }
    }
}

fn truncate(line: &str) -> &str {
    match line.char_indices().nth(120) {
        Some((i, _)) => &line[..i],
        None => line,
    }
}

fn validate(wire: Vec<super::protocol::WireDetection>, patch: &Image) -> Result<Vec<Detection>, DetectError> {
    let bounds = patch.dims().bounds();
    let mut out = Vec::with_capacity(wire.len());
    for d in wire {
        let bbox = BBox::new(d.x, d.y, d.w, d.h)
            .map_err(|e| DetectError::Malformed(format!("invalid detection box: {e}")))?;
        if !(0.0..=1.0).contains(&d.score) {
            return Err(DetectError::Malformed(format!("score {} outside [0, 1]", d.score)));
        }
        if let Some(bbox) = bbox.clip(&bounds) {
            out.push(Detection { bbox, score: d.score });
        }
    }
    sort_by_score(&mut out);
    Ok(out)
}

impl Detector for ExternClient {
    fn detect(&mut self, patch: &Image, _: &DetectContext) -> Result<Vec<Detection>, DetectError> {
        self.detect_image(patch)
    }

    fn name(&self) -> &str {
        "extern"
    }
}
