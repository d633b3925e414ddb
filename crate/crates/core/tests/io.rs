use std::io::{BufRead, BufReader, Write};

use ifp_core::game::{self, GameConfig, GameState, RewardVariant};
use ifp_core::io::{read_demos, reward_from_str, serve, table_from_rows, write_demos, DemoRecord, Session};
use ifp_core::projection::{project_action, ProjectOptions, RealTable};
use ifp_core::solvers::{greedy_rollout, GreedyOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

fn config() -> GameConfig {
    let mut cfg = GameConfig::new(4, 4, vec![(0, 0), (2, 3)], 2, 9).unwrap();
    cfg.seed = 5;
    cfg
}

fn ask(s: &mut Session, req: Value) -> Value {
    serde_json::from_str(&s.handle_line(&req.to_string())).unwrap()
}

fn rows(v: &Value) -> Vec<Vec<i64>> {
    serde_json::from_value(v.clone()).unwrap()
}

fn error_code(v: &Value) -> &str {
    v["error"]["code"].as_str().unwrap_or("")
}

#[test]
fn reset_reports_row_sums_in_bounds() {
    let mut s = Session::new(config());
    for seed in 0..50 {
        let r = ask(&mut s, json!({"cmd": "reset", "seed": seed}));
        assert_eq!(r["ok"], true);
        let state = table_from_rows(&rows(&r["state"])).unwrap();
        for sum in state.row_sums().unwrap() {
            assert!((2..=9).contains(&sum));
        }
        assert_eq!(r["info"]["row_sums"], json!(state.row_sums().unwrap()));
        assert_eq!(r["info"]["step"], 0);
        assert_eq!(r["v"], 1);
    }
}

#[test]
fn zero_action_is_illegal_and_changes_nothing() {
    let mut s = Session::new(config());
    let first = ask(&mut s, json!({"cmd": "reset", "seed": 1}));
    let before = s.state().cloned();
    let r = ask(&mut s, json!({"cmd": "step", "action": vec![vec![0; 4]; 4]}));
    assert_eq!(r["ok"], false);
    assert_eq!(error_code(&r), "illegal_move");
    assert_eq!(s.state().cloned(), before);
    let legal = ask(&mut s, json!({"cmd": "legal"}));
    let mask: Vec<Vec<bool>> = serde_json::from_value(legal["decrementable"].clone()).unwrap();
    let state = rows(&first["state"]);
    for (mrow, srow) in mask.iter().zip(&state) {
        for (&m, &v) in mrow.iter().zip(srow) {
            assert_eq!(m, v > 0);
        }
    }
}

#[test]
fn error_codes() {
    let mut s = Session::new(config());
    let cases = [
        ("{not json", "malformed_json"),
        ("[1, 2]", "bad_request"),
        (r#"{"seed": 1}"#, "bad_request"),
        (r#"{"cmd": "dance"}"#, "unknown_command"),
        (r#"{"cmd": "reset", "v": 2}"#, "unsupported_version"),
        (r#"{"cmd": "step", "action": [[0]]}"#, "no_episode"),
        (r#"{"cmd": "legal"}"#, "no_episode"),
        (r#"{"cmd": "reset", "seed": -3}"#, "bad_request"),
    ];
    for (line, code) in cases {
        let r: Value = serde_json::from_str(&s.handle_line(line)).unwrap();
        assert_eq!(r["ok"], false, "{line}");
        assert_eq!(error_code(&r), code, "{line}");
        assert!(r["error"]["message"].is_string());
    }
    ask(&mut s, json!({"cmd": "reset"}));
    let r = ask(&mut s, json!({"cmd": "step", "action": [[1, -1], [-1, 1]]}));
    assert_eq!(error_code(&r), "bad_request");
    let r = ask(&mut s, json!({"cmd": "project", "target": vec![vec![0.0; 4]; 4], "c1": 9}));
    assert_eq!(error_code(&r), "projection_infeasible");
}

#[test]
fn ids_increase_by_one() {
    let mut s = Session::new(config());
    let lines = [r#"{"cmd": "reset"}"#, "garbage", r#"{"cmd": "legal"}"#, "{}"];
    for (k, line) in lines.iter().enumerate() {
        let r: Value = serde_json::from_str(&s.handle_line(line)).unwrap();
        assert_eq!(r["id"], k as u64 + 1);
    }
}

#[test]
fn random_lines_never_break_the_session() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let pieces = ["{", "}", "[", "]", "\"cmd\"", ":", ",", "\"step\"", "\"reset\"", "1", "-1", "null", "\"action\""];
    let mut input = Vec::new();
    let mut expected = 0;
    for _ in 0..2000 {
        let line: Vec<u8> = if rng.gen_bool(0.5) {
            (0..rng.gen_range(1..40)).map(|_| rng.gen_range(0..=255u8)).filter(|&b| b != b'\n').collect()
        } else {
            (0..rng.gen_range(1..12)).flat_map(|_| pieces[rng.gen_range(0..pieces.len())].bytes()).collect()
        };
        if !String::from_utf8_lossy(&line).trim().is_empty() {
            expected += 1;
        }
        input.extend(line);
        input.push(b'\n');
    }
    let mut out = Vec::new();
    serve(&config(), &input[..], &mut out).unwrap();
    let responses: Vec<Value> = out.lines().map(|l| serde_json::from_str(&l.unwrap()).unwrap()).collect();
    assert_eq!(responses.len(), expected);
    for (k, r) in responses.iter().enumerate() {
        assert_eq!(r["v"], 1);
        assert_eq!(r["id"], k as u64 + 1);
        assert!(r["ok"] == true || r["error"]["code"].is_string());
    }
}

fn transcript(seed: u64) -> Vec<u8> {
    let cfg = config();
    let mut state = game::generate_instance(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let rollout = greedy_rollout(&cfg, &state, GreedyOptions::default()).unwrap();
    let mut input = format!("{}\n", json!({"cmd": "reset", "seed": seed}));
    for tr in &rollout.transitions {
        input.push_str(&format!("{}\n", json!({"cmd": "step", "action": tr.action.to_rows()})));
        state = game::step(&cfg, &state, &tr.action).unwrap().0;
    }
    input.push_str("{\"cmd\":\"legal\"}\n");
    let mut out = Vec::new();
    serve(&cfg, input.as_bytes(), &mut out).unwrap();
    out
}

#[test]
fn transcripts_are_deterministic() {
    for seed in 0..20 {
        let a = transcript(seed);
        assert_eq!(a, transcript(seed));
        let last: Value = serde_json::from_slice(a.trim_ascii_end().rsplit(|&b| b == b'\n').next().unwrap()).unwrap();
        assert_eq!(last["ok"], true);
    }
}

#[test]
fn step_after_the_goal_is_refused() {
    let mut cfg = GameConfig::new(2, 2, vec![(0, 0)], 1, 1).unwrap();
    cfg.reward_variant = RewardVariant::Eq1;
    let mut s = Session::new(cfg);
    let seed = (0u64..)
        .find(|&seed| rows(&ask(&mut s, json!({"cmd": "reset", "seed": seed}))["state"]) == [[1, 0], [0, 1]])
        .unwrap();
    let r = ask(&mut s, json!({"cmd": "step", "action": [[-1, 1], [1, -1]]}));
    assert_eq!(r["done"], true);
    assert_eq!(r["info"]["cause"], "goal");
    assert_eq!(r["reward_exact"], "0");
    let again = ask(&mut s, json!({"cmd": "step", "action": [[1, -1], [-1, 1]]}));
    assert_eq!(error_code(&again), "episode_done");
    let fresh = ask(&mut s, json!({"cmd": "reset", "seed": seed}));
    assert_eq!(fresh["done"], false);
    assert_eq!(fresh["info"]["cause"], Value::Null);
}

#[test]
fn project_matches_the_library() {
    let mut s = Session::new(config());
    let r = ask(&mut s, json!({"cmd": "reset", "seed": 9}));
    let state = table_from_rows(&rows(&r["state"])).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..30 {
        let target: Vec<Vec<f64>> = (0..4).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let d = rng.gen_range(1..=2u32);
        let r = ask(&mut s, json!({"cmd": "project", "target": target, "d": d}));
        let want = project_action(
            &state,
            &RealTable::from_rows(&target).unwrap(),
            &ProjectOptions { d, ..Default::default() },
        )
        .unwrap();
        assert_eq!(rows(&r["action"]), want.action.table().to_rows());
        assert_eq!(r["distance"].as_f64().unwrap(), want.distance);
    }
}

#[cfg(unix)]
#[test]
fn unix_socket_sessions_are_independent() {
    use std::os::unix::net::UnixStream;
    let dir = std::env::temp_dir().join(format!("ifp-io-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("env.sock");
    let _ = std::fs::remove_file(&path);
    let cfg = config();
    let server_path = path.clone();
    std::thread::spawn(move || ifp_core::io::serve_unix(&cfg, &server_path));
    let connect = || {
        for _ in 0..200 {
            if let Ok(c) = UnixStream::connect(&path) {
                return c;
            }
            std::thread::sleep(std::time::Duration::from_millis(10));
        }
        panic!("server did not start");
    };
    let talk = |conn: &mut UnixStream, reader: &mut BufReader<UnixStream>, line: &str| -> Value {
        writeln!(conn, "{line}").unwrap();
        let mut buf = String::new();
        reader.read_line(&mut buf).unwrap();
        serde_json::from_str(&buf).unwrap()
    };
    let mut a = connect();
    let mut b = connect();
    let mut ra = BufReader::new(a.try_clone().unwrap());
    let mut rb = BufReader::new(b.try_clone().unwrap());
    let x = talk(&mut a, &mut ra, r#"{"cmd":"reset","seed":3}"#);
    let y = talk(&mut b, &mut rb, r#"{"cmd":"legal"}"#);
    assert_eq!(x["id"], 1);
    assert_eq!(y["id"], 1);
    assert_eq!(error_code(&y), "no_episode");
    let z = talk(&mut a, &mut ra, r#"{"cmd":"legal"}"#);
    assert_eq!(z["id"], 2);
    assert_eq!(z["ok"], true);
    let _ = std::fs::remove_dir_all(&dir);
}

fn episodes(cfg: &GameConfig, count: u64) -> Vec<DemoRecord> {
    let mut out = Vec::new();
    for ep in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(ep);
        let start = game::generate_instance(cfg, &mut rng).unwrap();
        let rollout = greedy_rollout(cfg, &start, GreedyOptions::default()).unwrap();
        out.extend(rollout.transitions.into_iter().enumerate().map(|(step, transition)| DemoRecord {
            episode: ep,
            step: step as u32,
            reward_variant: cfg.reward_variant,
            transition,
        }));
    }
    out
}

#[test]
fn empty_demo_file() {
    let mut buf = Vec::new();
    write_demos(&mut buf, &[]).unwrap();
    assert!(buf.is_empty());
    assert!(read_demos(&buf[..]).unwrap().is_empty());
}

#[test]
fn hundred_episodes_round_trip_and_replay() {
    let mut cfg = GameConfig::new(5, 5, vec![(0, 0), (3, 2)], 0, 20).unwrap();
    for variant in [RewardVariant::UnitPenalty, RewardVariant::Eq1] {
        cfg.reward_variant = variant;
        let records = episodes(&cfg, 100);
        assert!(records.len() > 100);
        let mut buf = Vec::new();
        write_demos(&mut buf, &records).unwrap();
        let back = read_demos(&buf[..]).unwrap();
        assert_eq!(back, records);
        let mut again = Vec::new();
        write_demos(&mut again, &back).unwrap();
        assert_eq!(again, buf);
        for r in &back {
            let tr = &r.transition;
            let state = GameState {
                table: tr.state.clone(),
                margins: tr.state.margins().unwrap(),
                step_count: r.step,
            };
            let (_, replay) = game::step(&cfg, &state, &tr.action).unwrap();
            assert_eq!(replay.reward, tr.reward);
            assert_eq!(replay.next_state, tr.next_state);
            assert_eq!(replay.done, tr.done);
        }
    }
}

#[test]
fn demo_lines_are_checked() {
    let cfg = config();
    let line = episodes(&cfg, 1)[0].to_json();
    let v: Value = serde_json::from_str(&line).unwrap();
    for key in ["episode", "step", "reward_variant", "state", "action", "next_state", "reward", "reward_exact", "done", "cause"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let mut extra = v.clone();
    extra["colour"] = json!("red");
    assert!(DemoRecord::from_json(&extra.to_string()).is_err());
    let mut wrong = v.clone();
    wrong["reward"] = json!(0.5);
    assert!(DemoRecord::from_json(&wrong.to_string()).is_err());
    assert_eq!(reward_from_str("-1/4").unwrap(), game::Reward::new(-1, 4));
    let text = format!("{line}\n\nnot json\n");
    let err = read_demos(text.as_bytes()).unwrap_err().to_string();
    assert!(err.contains("line 3"), "{err}");
}
