//! Subprocess bridge for external denoisers.
//!
//! Frames are little-endian binary:
//!
//! ```text
//! request  = "GPDN" | 0x01 | N: u32 | noise: f64 | N × f64
//! response = N: u32 | N × f64
//! ```
//!
//! The plugin reads requests from its stdin and writes one response per
//! request to its stdout. A reader thread forwards decoded responses over a
//! channel so that a wall-clock timeout can be enforced on every call.

use std::io::{BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use thiserror::Error;

use crate::error::Result;
use crate::linalg::Vector;

pub const MAGIC: &[u8; 4] = b"GPDN";
pub const VERSION: u8 = 0x01;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Responses longer than this are rejected as malformed before allocation.
const MAX_FRAME_LEN: u32 = 1 << 26;

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("bridge spawn failed: {0}")]
    Spawn(String),

    #[error("bridge terminated: {0}")]
    Terminated(String),

    #[error("bridge timeout after {0:?}")]
    Timeout(Duration),

    #[error("bridge malformed frame: {0}")]
    MalformedFrame(String),

    #[error("bridge non-finite response value at index {0}")]
    NonFinite(usize),
}

pub fn encode_request(x: &Vector, noise_level: f64) -> Vec<u8> {
    let mut out = Vec::with_capacity(17 + 8 * x.dim());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(x.dim() as u32).to_le_bytes());
    out.extend_from_slice(&noise_level.to_le_bytes());
    for v in x.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes a complete response frame.
pub fn decode_response(bytes: &[u8]) -> std::result::Result<Vec<f64>, BridgeError> {
    if bytes.len() < 4 {
        return Err(BridgeError::MalformedFrame("response shorter than its header".into()));
    }
    let n = u32::from_le_bytes(bytes[..4].try_into().expect("four bytes")) as usize;
    if bytes.len() != 4 + 8 * n {
        return Err(BridgeError::MalformedFrame(format!(
            "header announces {n} values but payload has {} bytes",
            bytes.len() - 4
        )));
    }
    Ok(bytes[4..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes"))).collect())
}

type Frame = std::result::Result<Vec<f64>, BridgeError>;

struct Process {
    child: Child,
    stdin: ChildStdin,
    responses: Receiver<Frame>,
}

/// A long-lived denoiser subprocess. Calls are serialized; after any
/// failure the process is killed and further calls report termination.
pub struct ExternalDenoiser {
    command: Vec<String>,
    noise_level: f64,
    timeout: Duration,
    process: Mutex<Option<Process>>,
}

impl std::fmt::Debug for ExternalDenoiser {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalDenoiser")
            .field("command", &self.command)
            .field("noise_level", &self.noise_level)
            .field("timeout", &self.timeout)
            .finish()
    }
}

impl ExternalDenoiser {
    pub fn spawn(command: &[String], noise_level: f64) -> Result<Self> {
        Self::spawn_with_timeout(command, noise_level, DEFAULT_TIMEOUT)
    }

    pub fn spawn_with_timeout(command: &[String], noise_level: f64, timeout: Duration) -> Result<Self> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| BridgeError::Spawn("empty command line".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| BridgeError::Spawn(format!("{program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            loop {
                let frame = read_frame(&mut reader);
                let stop = frame.is_err();
                if tx.send(frame).is_err() || stop {
                    break;
                }
            }
        });
        Ok(Self {
            command: command.to_vec(),
            noise_level,
            timeout,
            process: Mutex::new(Some(Process { child, stdin, responses: rx })),
        })
    }

    pub fn command(&self) -> &[String] {
        &self.command
    }

    pub fn noise_level(&self) -> f64 {
        self.noise_level
    }

    /// Process id of the live subprocess, if any.
    pub fn pid(&self) -> Option<u32> {
        self.process.lock().ok()?.as_ref().map(|p| p.child.id())
    }

    pub fn denoise(&self, x: &Vector) -> Result<Vector> {
        let mut guard = self.process.lock().unwrap_or_else(|e| e.into_inner());
        let outcome = match guard.as_mut() {
            None => Err(BridgeError::Terminated("bridge is closed after an earlier failure".into())),
            Some(p) => exchange(p, x, self.noise_level, self.timeout),
        };
        match outcome {
            Ok(v) => Ok(v),
            Err(e) => {
                if let Some(mut p) = guard.take() {
                    let _ = p.child.kill();
                    let _ = p.child.wait();
                }
                Err(e.into())
            }
        }
    }
}

impl Drop for ExternalDenoiser {
    fn drop(&mut self) {
        if let Ok(mut guard) = self.process.lock() {
            if let Some(mut p) = guard.take() {
                drop(p.stdin);
                let _ = p.child.kill();
                let _ = p.child.wait();
            }
        }
    }
}

fn exchange(p: &mut Process, x: &Vector, noise: f64, timeout: Duration) -> std::result::Result<Vector, BridgeError> {
    let frame = encode_request(x, noise);
    p.stdin
        .write_all(&frame)
        .and_then(|_| p.stdin.flush())
        .map_err(|e| BridgeError::Terminated(format!("write failed: {e}")))?;
    let values = match p.responses.recv_timeout(timeout) {
        Ok(frame) => frame?,
        Err(RecvTimeoutError::Timeout) => return Err(BridgeError::Timeout(timeout)),
        Err(RecvTimeoutError::Disconnected) => return Err(BridgeError::Terminated("reader stopped".into())),
    };
    if values.len() != x.dim() {
        return Err(BridgeError::MalformedFrame(format!(
            "expected {} values, got {}",
            x.dim(),
            values.len()
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(BridgeError::NonFinite(i));
    }
    Ok(Vector::from_raw(values))
}

fn read_frame(r: &mut impl Read) -> Frame {
    let mut header = [0u8; 4];
    read_exact_or_eof(r, &mut header)?;
    let n = u32::from_le_bytes(header);
    if n > MAX_FRAME_LEN {
        return Err(BridgeError::MalformedFrame(format!("announced length {n} is implausible")));
    }
    let mut payload = vec![0u8; 8 * n as usize];
    read_exact_or_eof(r, &mut payload)?;
    let mut bytes = header.to_vec();
    bytes.extend_from_slice(&payload);
    decode_response(&bytes)
}

fn read_exact_or_eof(r: &mut impl Read, buf: &mut [u8]) -> std::result::Result<(), BridgeError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => BridgeError::Terminated("plugin closed its output".into()),
        _ => BridgeError::Terminated(format!("read failed: {e}")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_layout() {
        let x = Vector::new(vec![1.0, -2.5]).unwrap();
        let f = encode_request(&x, 0.25);
        assert_eq!(&f[..4], b"GPDN");
        assert_eq!(f[4], 1);
        assert_eq!(&f[5..9], &2u32.to_le_bytes());
        assert_eq!(&f[9..17], &0.25f64.to_le_bytes());
        assert_eq!(&f[17..25], &1.0f64.to_le_bytes());
        assert_eq!(&f[25..33], &(-2.5f64).to_le_bytes());
        assert_eq!(f, encode_request(&x, 0.25));
    }

    #[test]
    fn response_roundtrip_and_length_check() {
        let mut bytes = 3u32.to_le_bytes().to_vec();
        for v in [0.5f64, -0.0, 7.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let vals = decode_response(&bytes).unwrap();
        assert_eq!(vals.len(), 3);
        assert_eq!(vals[1].to_bits(), (-0.0f64).to_bits());
        assert!(matches!(decode_response(&bytes[..10]), Err(BridgeError::MalformedFrame(_))));
    }

    #[test]
    fn missing_program_is_a_spawn_error() {
        let err = ExternalDenoiser::spawn(&["/nonexistent/denoiser".to_string()], 0.0).unwrap_err();
        assert!(err.to_string().contains("spawn"));
    }
}
