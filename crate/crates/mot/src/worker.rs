//! Execution backend backed by a pool of worker subprocesses.
//!
//! Each worker reads one JSON request per line on stdin and answers with one
//! JSON response per line on stdout. A worker that dies, hangs past the
//! request deadline or answers with the wrong id is killed and replaced on
//! next use; the request that hit it fails with `BackendUnavailable`.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use mot_core::exec::{ExecError, ExecReport, ExecRequest, ExecutionBackend, WireResponse};

struct Worker {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Worker {
    fn spawn(command: &[String]) -> Result<Self, ExecError> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| ExecError::BackendUnavailable("empty runner command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ExecError::BackendUnavailable(format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, lines) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        Ok(Self { child, stdin, lines })
    }

    fn roundtrip(&mut self, line: &str, deadline: Duration) -> Result<String, String> {
        self.stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.write_all(b"\n"))
            .and_then(|_| self.stdin.flush())
            .map_err(|e| format!("worker stdin closed: {e}"))?;
        loop {
            match self.lines.recv_timeout(deadline) {
                Ok(Ok(reply)) if reply.trim().is_empty() => continue,
                Ok(Ok(reply)) => return Ok(reply),
                Ok(Err(e)) => return Err(format!("worker stdout unreadable: {e}")),
                Err(RecvTimeoutError::Timeout) => return Err(format!("worker silent for {deadline:?}")),
                Err(RecvTimeoutError::Disconnected) => return Err("worker exited".into()),
            }
        }
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

struct Pool {
    idle: Vec<Worker>,
    spawned: usize,
}

pub struct WorkerBackend {
    command: Vec<String>,
    size: usize,
    pool: Mutex<Pool>,
    freed: Condvar,
    grace: Duration,
}

impl WorkerBackend {
    /// Workers are started lazily, at most `size` at a time.
    pub fn new(command: Vec<String>, size: usize) -> Self {
        Self {
            command,
            size: size.max(1),
            pool: Mutex::new(Pool { idle: Vec::new(), spawned: 0 }),
            freed: Condvar::new(),
            grace: Duration::from_secs(5),
        }
    }

    /// Slack added to the sum of per-case timeouts before a silent worker
    /// is declared hung.
    pub fn with_grace(mut self, grace: Duration) -> Self {
        self.grace = grace;
        self
    }

    fn acquire(&self) -> Result<Worker, ExecError> {
        let mut pool = self.pool.lock().unwrap();
        loop {
            if let Some(w) = pool.idle.pop() {
                return Ok(w);
            }
            if pool.spawned < self.size {
                pool.spawned += 1;
                drop(pool);
                return Worker::spawn(&self.command).inspect_err(|_| self.discard());
            }
            pool = self.freed.wait(pool).unwrap();
        }
    }

    fn release(&self, w: Worker) {
        self.pool.lock().unwrap().idle.push(w);
        self.freed.notify_one();
    }

    fn discard(&self) {
        self.pool.lock().unwrap().spawned -= 1;
        self.freed.notify_one();
    }
}

impl ExecutionBackend for WorkerBackend {
    fn execute(&self, req: &ExecRequest) -> Result<ExecReport, ExecError> {
        let line = serde_json::to_string(req).map_err(|e| ExecError::InvalidRequest(e.to_string()))?;
        let budget = Duration::from_millis(req.timeout_ms.saturating_mul(req.cases.len().max(1) as u64));
        let mut worker = self.acquire()?;
        let reply = match worker.roundtrip(&line, budget + self.grace) {
            Ok(r) => r,
            Err(reason) => {
                drop(worker);
                self.discard();
                return Err(ExecError::BackendUnavailable(reason));
            }
        };
        let wire: WireResponse = match serde_json::from_str(&reply) {
            Ok(w) => w,
            Err(e) => {
                drop(worker);
                self.discard();
                return Err(ExecError::BackendUnavailable(format!("malformed worker response: {e}")));
            }
        };
        if wire.id != req.id {
            drop(worker);
            self.discard();
            return Err(ExecError::BackendUnavailable(format!(
                "worker answered `{}` to request `{}`",
                wire.id, req.id
            )));
        }
        self.release(worker);
        Ok(ExecReport::from(wire))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mot_core::exec::{evaluate_candidate, CaseStatus};

    fn python(script: &str) -> Vec<String> {
        vec!["python3".into(), "-u".into(), "-c".into(), script.into()]
    }

    const ECHO: &str = r#"
import sys, json
for line in sys.stdin:
    req = json.loads(line)
    res = [{"status": "pass" if "ok" in c else "fail", "detail": "" if "ok" in c else "no"} for c in req["cases"]]
    print(json.dumps({"id": req["id"], "results": res, "duration_ms": 1, "extra": True}), flush=True)
"#;

    fn request(id: &str, cases: &[&str]) -> ExecRequest {
        ExecRequest {
            id: id.into(),
            source: String::new(),
            setup: String::new(),
            cases: cases.iter().map(|s| s.to_string()).collect(),
            timeout_ms: 100,
        }
    }

    #[test]
    fn round_trips_and_reuses_workers() {
        let b = WorkerBackend::new(python(ECHO), 2);
        for i in 0..5 {
            let r = evaluate_candidate(&b, &request(&format!("r{i}"), &["ok", "bad", "ok"])).unwrap();
            assert_eq!((r.cases_passed, r.cases_total), (2, 3));
            assert_eq!(r.results[1].status, CaseStatus::Fail);
        }
        assert_eq!(b.pool.lock().unwrap().spawned, 1);
    }

    #[test]
    fn concurrent_requests_share_the_pool() {
        let b = WorkerBackend::new(python(ECHO), 3);
        std::thread::scope(|s| {
            for t in 0..6 {
                let b = &b;
                s.spawn(move || {
                    for i in 0..4 {
                        let id = format!("t{t}-{i}");
                        let r = b.execute(&request(&id, &["ok"])).unwrap();
                        assert_eq!(r.id, id);
                    }
                });
            }
        });
        assert!(b.pool.lock().unwrap().spawned <= 3);
    }

    #[test]
    fn crashing_worker_is_unavailable_then_replaced() {
        let script = r#"
import sys, json, os
line = sys.stdin.readline()
if os.path.exists(sys.argv[1]):
    req = json.loads(line)
    print(json.dumps({"id": req["id"], "results": [{"status": "pass", "detail": ""}]}), flush=True)
    sys.stdin.readline()
else:
    open(sys.argv[1], "w").close()
    sys.exit(3)
"#;
        let dir = tempfile::tempdir().unwrap();
        let marker = dir.path().join("crashed").to_string_lossy().into_owned();
        let mut cmd = python(script);
        cmd.push(marker);
        let b = WorkerBackend::new(cmd, 1);
        assert!(matches!(b.execute(&request("a", &["x"])), Err(ExecError::BackendUnavailable(_))));
        assert_eq!(b.execute(&request("b", &["x"])).unwrap().cases_passed, 1);
    }

    #[test]
    fn wrong_id_and_silence_are_unavailable() {
        let liar = r#"
import sys, json
for line in sys.stdin:
    print(json.dumps({"id": "other", "results": [{"status": "pass", "detail": ""}]}), flush=True)
"#;
        let b = WorkerBackend::new(python(liar), 1);
        assert!(matches!(b.execute(&request("a", &["x"])), Err(ExecError::BackendUnavailable(_))));

        let mute = "import sys, time\nfor line in sys.stdin:\n    time.sleep(60)\n";
        let b = WorkerBackend::new(python(mute), 1).with_grace(Duration::from_millis(200));
        let started = std::time::Instant::now();
        assert!(matches!(b.execute(&request("a", &["x"])), Err(ExecError::BackendUnavailable(_))));
        assert!(started.elapsed() < Duration::from_secs(5));
    }

    #[test]
    fn missing_program_is_unavailable() {
        let b = WorkerBackend::new(vec!["/nonexistent/runner".into()], 1);
        assert!(matches!(b.execute(&request("a", &["x"])), Err(ExecError::BackendUnavailable(_))));
        assert_eq!(b.pool.lock().unwrap().spawned, 0);
    }
}
