//! JSON-lines environment server.
//!
//! Requests are objects with a `cmd` field (`reset`, `step`, `legal`,
//! `project`) and an optional `"v": 1`. Every response carries `"v": 1`, a
//! per-session `id` counting up from 1, and `"ok"`. Failures answer with
//! `"error": {"code", "message"}` and leave the episode untouched; a bad
//! line never ends the session.

use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use super::{reward_to_f64, reward_to_string, table_from_rows, table_to_rows};
use crate::error::Error;
use crate::game::{self, GameConfig, GameState, Reward};
use crate::projection::{project_action, ProjectOptions, RealTable};

pub const PROTOCOL_VERSION: u64 = 1;

struct Failure {
    code: &'static str,
    message: String,
}

fn fail(code: &'static str, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

/// One client's view of the environment.
pub struct Session {
    cfg: GameConfig,
    state: Option<GameState>,
    done: bool,
    next_id: u64,
}

impl Session {
    pub fn new(cfg: GameConfig) -> Self {
        Session {
            cfg,
            state: None,
            done: false,
            next_id: 1,
        }
    }

    pub fn state(&self) -> Option<&GameState> {
        self.state.as_ref()
    }

    /// Answers one request line with one response line (no newline).
    pub fn handle_line(&mut self, line: &str) -> String {
        let result = serde_json::from_str::<Value>(line)
            .map_err(|e| fail("malformed_json", e.to_string()))
            .and_then(|req| self.dispatch(&req));
        let id = self.next_id;
        self.next_id += 1;
        let mut out = Map::new();
        out.insert("v".into(), json!(PROTOCOL_VERSION));
        out.insert("id".into(), json!(id));
        match result {
            Ok(body) => {
                out.insert("ok".into(), json!(true));
                out.extend(body);
            }
            Err(f) => {
                out.insert("ok".into(), json!(false));
                out.insert("error".into(), json!({"code": f.code, "message": f.message}));
            }
        }
        Value::Object(out).to_string()
    }

    fn dispatch(&mut self, req: &Value) -> Result<Map<String, Value>, Failure> {
        let obj = req
            .as_object()
            .ok_or_else(|| fail("bad_request", "requests are JSON objects"))?;
        if let Some(v) = obj.get("v") {
            if v.as_u64() != Some(PROTOCOL_VERSION) {
                return Err(fail("unsupported_version", format!("version {v} is not supported")));
            }
        }
        match obj.get("cmd").and_then(Value::as_str) {
            Some("reset") => self.reset(obj),
            Some("step") => self.step(obj),
            Some("legal") => self.legal(),
            Some("project") => self.project(obj),
            Some(other) => Err(fail("unknown_command", format!("unknown command {other:?}"))),
            None => Err(fail("bad_request", "missing string field `cmd`")),
        }
    }

    fn reset(&mut self, obj: &Map<String, Value>) -> Result<Map<String, Value>, Failure> {
        let seed = match obj.get("seed") {
            None | Some(Value::Null) => self.cfg.seed,
            Some(v) => v
                .as_u64()
                .ok_or_else(|| fail("bad_request", "seed must be a nonnegative integer"))?,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = match self.cfg.walk_len {
            Some(w) => game::generate_solvable_instance(&self.cfg, &mut rng, w),
            None => game::generate_instance(&self.cfg, &mut rng),
        }
        .map_err(|e| fail("bad_request", e.to_string()))?;
        let terminal = game::is_terminal(&state.table, &self.cfg.goal);
        let cause = terminal.then_some(game::DoneCause::Goal);
        let body = observation(&state, &Reward::from_integer(0), terminal, cause);
        self.done = terminal;
        self.state = Some(state);
        Ok(body)
    }

    fn current(&self) -> Result<&GameState, Failure> {
        self.state
            .as_ref()
            .ok_or_else(|| fail("no_episode", "send reset first"))
    }

    fn step(&mut self, obj: &Map<String, Value>) -> Result<Map<String, Value>, Failure> {
        let state = self.current()?;
        if self.done {
            return Err(fail("episode_done", "the episode is over; send reset"));
        }
        let rows: Vec<Vec<i64>> = obj
            .get("action")
            .cloned()
            .ok_or_else(|| fail("bad_request", "missing field `action`"))
            .and_then(|v| {
                serde_json::from_value(v).map_err(|e| fail("bad_request", format!("action: {e}")))
            })?;
        let action = table_from_rows(&rows).map_err(|e| fail("bad_request", e.to_string()))?;
        if action.shape() != state.table.shape() {
            return Err(fail("bad_request", "action shape differs from the state"));
        }
        let (next, tr) = game::step(&self.cfg, state, &action).map_err(|e| match e {
            Error::IllegalMove(msg) => fail("illegal_move", msg),
            other => fail("bad_request", other.to_string()),
        })?;
        let body = observation(&next, &tr.reward, tr.done, tr.cause);
        self.done = tr.done;
        self.state = Some(next);
        Ok(body)
    }

    /// Cells that may take `-1`: an action is legal exactly when its `-1`
    /// entries sit on these cells.
    fn legal(&self) -> Result<Map<String, Value>, Failure> {
        let state = self.current()?;
        let mask: Vec<Vec<bool>> = state
            .table
            .to_rows()
            .into_iter()
            .map(|r| r.into_iter().map(|v| v > 0).collect())
            .collect();
        let mut body = Map::new();
        body.insert("decrementable".into(), json!(mask));
        body.insert("done".into(), json!(self.done));
        Ok(body)
    }

    fn project(&self, obj: &Map<String, Value>) -> Result<Map<String, Value>, Failure> {
        let state = self.current()?;
        let rows: Vec<Vec<f64>> = obj
            .get("target")
            .cloned()
            .ok_or_else(|| fail("bad_request", "missing field `target`"))
            .and_then(|v| {
                serde_json::from_value(v).map_err(|e| fail("bad_request", format!("target: {e}")))
            })?;
        let target = RealTable::from_rows(&rows).map_err(|e| fail("bad_request", e.to_string()))?;
        let opt_usize = |key: &str| -> Result<Option<usize>, Failure> {
            match obj.get(key) {
                None | Some(Value::Null) => Ok(None),
                Some(v) => v
                    .as_u64()
                    .map(|x| Some(x as usize))
                    .ok_or_else(|| fail("bad_request", format!("{key} must be a nonnegative integer"))),
            }
        };
        let d = opt_usize("d")?.unwrap_or(2) as u32;
        let respect_state = match obj.get("respect_state") {
            None | Some(Value::Null) => true,
            Some(v) => v
                .as_bool()
                .ok_or_else(|| fail("bad_request", "respect_state must be a boolean"))?,
        };
        let opts = ProjectOptions {
            d,
            c1: opt_usize("c1")?,
            c2: opt_usize("c2")?,
            respect_state,
        };
        let p = project_action(&state.table, &target, &opts).map_err(|e| match e {
            Error::ProjectionInfeasible(msg) => fail("projection_infeasible", msg),
            other => fail("bad_request", other.to_string()),
        })?;
        let mut body = Map::new();
        body.insert("action".into(), json!(table_to_rows(p.action.table())));
        body.insert("distance".into(), json!(p.distance));
        Ok(body)
    }
}

fn observation(
    state: &GameState,
    reward: &Reward,
    done: bool,
    cause: Option<game::DoneCause>,
) -> Map<String, Value> {
    let mut body = Map::new();
    body.insert("state".into(), json!(table_to_rows(&state.table)));
    body.insert("reward".into(), json!(reward_to_f64(reward)));
    body.insert("reward_exact".into(), json!(reward_to_string(reward)));
    body.insert("done".into(), json!(done));
    body.insert(
        "info".into(),
        json!({
            "cause": cause,
            "step": state.step_count,
            "row_sums": state.margins.rows,
            "col_sums": state.margins.cols,
        }),
    );
    body
}

/// Runs one session over a line stream until end of input. Blank lines are
/// skipped; bytes that are not UTF-8 are answered as malformed JSON.
pub fn serve<R: BufRead, W: Write>(cfg: &GameConfig, mut input: R, mut output: W) -> std::io::Result<()> {
    let mut session = Session::new(cfg.clone());
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if input.read_until(b'\n', &mut buf)? == 0 {
            return Ok(());
        }
        let line = String::from_utf8_lossy(&buf);
        if line.trim().is_empty() {
            continue;
        }
        writeln!(output, "{}", session.handle_line(&line))?;
        output.flush()?;
    }
}

/// Listens on a Unix socket, one thread and one session per connection.
#[cfg(unix)]
pub fn serve_unix(cfg: &GameConfig, path: &std::path::Path) -> std::io::Result<()> {
    use std::os::unix::net::UnixListener;
    let listener = UnixListener::bind(path)?;
    for conn in listener.incoming() {
        let conn = conn?;
        let cfg = cfg.clone();
        std::thread::spawn(move || {
            let reader = match conn.try_clone() {
                Ok(r) => std::io::BufReader::new(r),
                Err(_) => return,
            };
            let _ = serve(&cfg, reader, conn);
        });
    }
    Ok(())
}
