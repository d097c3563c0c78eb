//! JSON-lines over a child process's standard streams. One request in
//! flight at a time; the child is respawned after a timeout or crash.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use super::protocol::{AdapterRequest, AdapterResponse};
use super::Backend;

struct Running {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Drop for Running {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub struct SubprocessBackend {
    cmd: Vec<String>,
    state: Mutex<Option<Running>>,
}

impl SubprocessBackend {
    pub fn new(cmd: Vec<String>) -> Self {
        SubprocessBackend { cmd, state: Mutex::new(None) }
    }

    fn spawn(&self) -> Result<Running, String> {
        let (program, args) = self
            .cmd
            .split_first()
            .ok_or_else(|| "empty adapter command".to_string())?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| format!("cannot spawn `{program}`: {e}"))?;
        let stdin = child.stdin.take().ok_or("child stdin unavailable")?;
        let stdout = child.stdout.take().ok_or("child stdout unavailable")?;
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Running { child, stdin, lines: rx })
    }

    fn roundtrip(
        running: &mut Running,
        request: &AdapterRequest,
        timeout: Duration,
    ) -> Result<AdapterResponse, String> {
        let line = serde_json::to_string(request).map_err(|e| e.to_string())?;
        running
            .stdin
            .write_all(format!("{line}\n").as_bytes())
            .and_then(|_| running.stdin.flush())
            .map_err(|e| format!("write to adapter failed: {e}"))?;
        let deadline = Instant::now() + timeout;
        loop {
            let remaining = deadline.saturating_duration_since(Instant::now());
            match running.lines.recv_timeout(remaining) {
                Ok(line) if line.trim().is_empty() => continue,
                Ok(line) => {
                    let response: AdapterResponse = serde_json::from_str(&line)
                        .map_err(|e| format!("malformed response line: {e}"))?;
                    // Late answer to an earlier, timed-out request.
                    if response.request_id != request.request_id {
                        continue;
                    }
                    return Ok(response);
                }
                Err(RecvTimeoutError::Timeout) => {
                    return Err(format!("timed out after {:.3}s", timeout.as_secs_f64()))
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err("adapter process closed its output".to_string())
                }
            }
        }
    }
}

impl Backend for SubprocessBackend {
    fn exchange(&self, request: &AdapterRequest, timeout: Duration) -> Result<AdapterResponse, String> {
        let mut state = self.state.lock().expect("subprocess state poisoned");
        if state.is_none() {
            *state = Some(self.spawn()?);
        }
        let running = state.as_mut().expect("spawned above");
        let result = Self::roundtrip(running, request, timeout);
        if result.is_err() {
            // Drop kills the child; the next call starts a fresh one.
            *state = None;
        }
        result
    }

    fn describe(&self) -> String {
        format!("subprocess:{}", self.cmd.join(" "))
    }
}
