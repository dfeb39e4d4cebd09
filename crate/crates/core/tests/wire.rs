use std::io::{PipeReader, PipeWriter, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use icbench_core::agent::{Policy, StepView};
use icbench_core::env::MazeEnv;
use icbench_core::eval::{run_interactive, run_wm_eval, EvalError, InteractiveEvalConfig, PredictRequest, Predictor, WMEvalConfig};
use icbench_core::maze::{generate_task, step, ActionId, MazeConfig, MazeTask, SimState};
use icbench_core::render::{FrameRGB, FRAME_BYTES};
use icbench_core::wire::*;
use proptest::prelude::*;
use regex::Regex;

const T: Duration = Duration::from_secs(10);

/// (server side, client side) joined by two OS pipes.
fn duplex(timeout: Duration) -> (Connection, Connection) {
    let (r1, w1) = std::io::pipe().unwrap();
    let (r2, w2) = std::io::pipe().unwrap();
    (Connection::from_streams(r1, w2, timeout), Connection::from_streams(r2, w1, timeout))
}

/// Server side over pipes; the client end is handed back as raw streams.
fn raw_client(timeout: Duration) -> (Connection, PipeReader, PipeWriter) {
    let (r1, w1) = std::io::pipe().unwrap();
    let (r2, w2) = std::io::pipe().unwrap();
    (Connection::from_streams(r1, w2, timeout), r2, w1)
}

fn small_task(len: usize) -> MazeTask {
    generate_task(&MazeConfig { episode_len: len, ..MazeConfig::default() }, 3).unwrap()
}

fn letter(t: MsgType) -> char {
    match t {
        MsgType::Reset => 'R',
        MsgType::Obs => 'O',
        MsgType::Act => 'A',
        MsgType::PredictReq => 'Q',
        MsgType::PredictResp => 'P',
        MsgType::End => 'E',
        MsgType::Error => 'X',
    }
}

fn language() -> Regex {
    Regex::new("^R(O(QP)*A)*E$").unwrap()
}

fn word(seq: &[MsgType]) -> String {
    seq.iter().map(|&t| letter(t)).collect()
}

// ---- codec ----

#[test]
fn act_frame_is_ten_bytes() {
    let b = encode(&Message::Act(ActionId::TurnLeft));
    assert_eq!(b, [b'G', b'P', b'W', b'1', 0x03, 1, 0, 0, 0, 0x03]);
}

fn golden() -> Vec<(String, Vec<u8>)> {
    let text = include_str!("data/wire_golden.txt");
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| {
            let (name, hex) = l.split_once(' ').unwrap();
            let bytes = (0..hex.len()).step_by(2).map(|i| u8::from_str_radix(&hex[i..i + 2], 16).unwrap()).collect();
            (name.to_string(), bytes)
        })
        .collect()
}

#[test]
fn golden_vectors_match_encoder_and_decoder() {
    use ActionId::*;
    let expected: Vec<(&str, Option<Message>)> = vec![
        ("hello_v1", None),
        ("act_turn_left", Some(Message::Act(TurnLeft))),
        (
            "reset_policy_frame",
            Some(Message::Reset(ResetPayload {
                obs_kind: ObsKind::Frame,
                mode: SessionMode::Policy,
                episode_len: 2048,
                requests_per_checkpoint: 0,
                checkpoints: vec![],
            })),
        ),
        (
            "reset_world_model",
            Some(Message::Reset(ResetPayload {
                obs_kind: ObsKind::Frame,
                mode: SessionMode::WorldModel,
                episode_len: 2048,
                requests_per_checkpoint: 2,
                checkpoints: vec![1, 100, 1000, 2000],
            })),
        ),
        (
            "obs_topdown",
            Some(Message::Obs(ObsPayload {
                step: 7,
                reward: 0.57,
                command: 5,
                kind: ObsKind::TopDown,
                data: (0..121).map(|i| ((i * 7) % 256) as u8).collect(),
            })),
        ),
        (
            "predict_req",
            Some(Message::PredictReq { t: 3, executed: vec![Forward, TurnRight], future: vec![Backward, Stop, TurnLeft, Forward] }),
        ),
        ("predict_resp_empty", Some(Message::PredictResp { frames: vec![] })),
        ("end", Some(Message::End { steps: 2000, accumulated_reward: 12.5 })),
        ("error_out_of_order", Some(Message::Error { code: ErrorCode::OUT_OF_ORDER, message: "ACT before OBS".into() })),
    ];
    let vectors = golden();
    assert_eq!(vectors.len(), expected.len());
    for ((name, bytes), (ename, msg)) in vectors.iter().zip(expected) {
        assert_eq!(name, ename);
        match msg {
            None => assert_eq!(bytes[..], hello(VERSION)[..]),
            Some(m) => {
                assert_eq!(&encode(&m), bytes, "{name}");
                assert_eq!(decode(bytes).unwrap(), (m, bytes.len()), "{name}");
            }
        }
    }
}

fn action() -> impl Strategy<Value = ActionId> {
    (0u8..5).prop_map(|b| ActionId::try_from(b).unwrap())
}

fn message() -> impl Strategy<Value = Message> {
    prop_oneof![
        (0u8..2, 0u8..2, any::<u32>(), any::<u32>(), prop::collection::vec(any::<u32>(), 0..6)).prop_map(
            |(k, m, episode_len, requests_per_checkpoint, checkpoints)| Message::Reset(ResetPayload {
                obs_kind: if k == 0 { ObsKind::Frame } else { ObsKind::TopDown },
                mode: if m == 0 { SessionMode::Policy } else { SessionMode::WorldModel },
                episode_len,
                requests_per_checkpoint,
                checkpoints,
            })
        ),
        (any::<u32>(), any::<f32>().prop_filter("nan", |r| !r.is_nan()), any::<u8>(), any::<bool>(), any::<u8>()).prop_map(
            |(step, reward, command, fp, fill)| {
                let kind = if fp { ObsKind::Frame } else { ObsKind::TopDown };
                Message::Obs(ObsPayload { step, reward, command, kind, data: vec![fill; kind.byte_len()] })
            }
        ),
        action().prop_map(Message::Act),
        (any::<u32>(), prop::collection::vec(action(), 0..40), prop::collection::vec(action(), 0..5))
            .prop_map(|(t, executed, future)| Message::PredictReq { t, executed, future }),
        (0usize..3, any::<u8>()).prop_map(|(n, fill)| Message::PredictResp {
            frames: (0..n).map(|i| FrameRGB { pixels: vec![fill.wrapping_add(i as u8); FRAME_BYTES] }).collect()
        }),
        (any::<u32>(), any::<f64>().prop_filter("nan", |r| !r.is_nan()))
            .prop_map(|(steps, accumulated_reward)| Message::End { steps, accumulated_reward }),
        (any::<u16>(), ".{0,40}").prop_map(|(c, message)| Message::Error { code: ErrorCode(c), message }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decode_inverts_encode(m in message()) {
        let b = encode(&m);
        prop_assert_eq!(u32::from_le_bytes(b[5..9].try_into().unwrap()) as usize, b.len() - HEADER_BYTES);
        prop_assert_eq!(decode(&b).unwrap(), (m.clone(), b.len()));
        prop_assert_eq!(read_message(&mut &b[..]).unwrap(), m);
    }

    #[test]
    fn any_proper_prefix_is_a_short_read(m in message(), cut in any::<prop::sample::Index>()) {
        let b = encode(&m);
        let n = cut.index(b.len());
        let short = matches!(decode(&b[..n]), Err(WireError::ShortRead { .. }));
        prop_assert!(short);
    }

    #[test]
    fn grammar_matches_regular_language(seq in prop_oneof![
        prop::collection::vec(0usize..7, 0..14).prop_map(|v| v.into_iter().map(|i| MsgType::ALL[i]).collect::<Vec<_>>()),
        (prop::collection::vec(0usize..3, 0..5), any::<Option<(prop::sample::Index, usize)>>()).prop_map(|(steps, mutation)| {
            let mut v = vec![MsgType::Reset];
            for p in steps {
                v.push(MsgType::Obs);
                for _ in 0..p { v.push(MsgType::PredictReq); v.push(MsgType::PredictResp); }
                v.push(MsgType::Act);
            }
            v.push(MsgType::End);
            if let Some((i, t)) = mutation {
                let i = i.index(v.len());
                v[i] = MsgType::ALL[t % 7];
            }
            v
        }),
    ]) {
        prop_assert_eq!(Grammar::accepts(&seq), language().is_match(&word(&seq)));
    }
}

#[test]
fn framing_errors_are_distinct() {
    let mut b = encode(&Message::Act(ActionId::Stop));
    b[5..9].copy_from_slice(&5u32.to_le_bytes());
    assert!(matches!(decode(&b), Err(WireError::ShortRead { needed: 14, available: 10 })));

    let mut big = b.clone();
    big[5..9].copy_from_slice(&((16u32 << 20) + 1).to_le_bytes());
    assert!(matches!(decode(&big), Err(WireError::LengthOverflow(_))));

    let mut unknown = encode(&Message::Act(ActionId::Stop));
    unknown[4] = 9;
    assert!(matches!(decode(&unknown), Err(WireError::UnknownType(9))));

    let mut bad = encode(&Message::Act(ActionId::Stop));
    bad[9] = 7;
    assert!(matches!(decode(&bad), Err(WireError::BadPayload { .. })));

    let mut magic = encode(&Message::Act(ActionId::Stop));
    magic[0] = b'X';
    assert!(matches!(decode(&magic), Err(WireError::BadMagic(_))));
}

// ---- sessions ----

/// Replays a fixed action list; records what it observes.
struct Script {
    actions: Vec<ActionId>,
    next: usize,
    seen: Vec<ObsPayload>,
}

impl WireAgent for Script {
    fn observe(&mut self, obs: &ObsPayload) {
        self.seen.push(obs.clone());
    }
    fn act(&mut self) -> ActionId {
        let a = self.actions[self.next % self.actions.len()];
        self.next += 1;
        a
    }
}

fn spawn_client<A: WireAgent + Send + 'static>(mut conn: Connection, mut agent: A) -> thread::JoinHandle<(Result<ClientEpisode, WireError>, A)> {
    thread::spawn(move || {
        let r = run_client(&mut conn, &mut agent);
        (r, agent)
    })
}

#[test]
fn episode_accounting_matches_engine_and_env() {
    let task = small_task(300);
    let actions: Vec<ActionId> = (0..300).map(|i| ActionId::ALL[(i * 7 + i / 3) % 5]).collect();
    let (server, client) = duplex(T);
    let h = spawn_client(client, Script { actions: actions.clone(), next: 0, seen: vec![] });
    let result = serve_episode(&task, server, ObsKind::Frame).unwrap();
    let (client_ep, script) = h.join().unwrap();
    let client_ep = client_ep.unwrap();

    // Independent replay through the engine.
    let mut s = SimState::initial(&task);
    for &a in &actions {
        s = step(&task, &s, a).unwrap().state;
    }
    assert_eq!(result.steps, 300);
    assert_eq!(result.actions, actions);
    assert_eq!(result.accumulated_reward, s.accumulated_reward);
    assert_eq!(client_ep.reported_reward, s.accumulated_reward);
    assert_eq!(client_ep.steps, 300);
    assert!(language().is_match(&word(&result.transcript)));

    // The env surface produces the same observation and reward streams.
    let mut env = MazeEnv::new(task.config.clone(), ObsKind::Frame).unwrap();
    let (obs0, info0) = env.reset_task(task.clone());
    assert_eq!(obs0, script.seen[0].data);
    assert_eq!(info0.command, script.seen[0].command);
    for (t, &a) in actions.iter().enumerate() {
        let tr = env.step(a).unwrap();
        assert_eq!(tr.truncated, t == 299);
        assert!(!tr.terminated);
        if t + 1 < 300 {
            let o = &script.seen[t + 1];
            assert_eq!(tr.observation, o.data);
            assert_eq!(tr.reward as f32, o.reward);
            assert_eq!(tr.info.command, o.command);
            assert_eq!(o.step as usize, t + 1);
        }
    }
    assert!(env.step(ActionId::Stop).is_err());
}

#[test]
fn topdown_sessions_carry_the_crop() {
    let task = small_task(5);
    let (server, client) = duplex(T);
    let h = spawn_client(client, Script { actions: vec![ActionId::Forward], next: 0, seen: vec![] });
    serve_episode(&task, server, ObsKind::TopDown).unwrap();
    let (_, script) = h.join().unwrap();
    assert!(script.seen.iter().all(|o| o.kind == ObsKind::TopDown && o.data.len() == 121));
    let mut env = MazeEnv::new(task.config.clone(), ObsKind::TopDown).unwrap();
    assert_eq!(env.reset_task(task.clone()).0, script.seen[0].data);
}

#[test]
fn env_reset_is_deterministic() {
    let cfg = MazeConfig::default();
    let mut a = MazeEnv::new(cfg.clone(), ObsKind::Frame).unwrap();
    let mut b = MazeEnv::new(cfg, ObsKind::Frame).unwrap();
    assert_eq!(a.reset(17).unwrap(), b.reset(17).unwrap());
    assert_eq!(a.observation_shape(), vec![128, 128, 3]);
}

#[test]
fn env_truncates_at_2048_steps_and_pays_reach_reward() {
    let mut env = MazeEnv::new(MazeConfig::default(), ObsKind::TopDown).unwrap();
    env.reset(5).unwrap();
    let mut reached = Vec::new();
    for t in 0..2048 {
        let tr = env.step(ActionId::ALL[(t * 3 + t / 7) % 5]).unwrap();
        if tr.info.events.as_ref().unwrap().reached.is_some() {
            reached.push(tr.reward);
        }
        assert_eq!(tr.truncated, t == 2047);
    }
    assert!(reached.iter().all(|&r| (r - 0.57).abs() < 1e-12), "{reached:?}");
}

#[test]
fn act_before_obs_is_out_of_order() {
    let task = small_task(4);
    let (server, mut client) = duplex(T);
    let h = thread::spawn(move || {
        client.handshake().unwrap();
        assert!(matches!(client.recv().unwrap(), Message::Reset(_)));
        client.send(Message::Act(ActionId::Forward)).unwrap(); // before any OBS
        loop {
            match client.recv().unwrap() {
                Message::Obs(_) => client.send(Message::Act(ActionId::Forward)).unwrap(),
                Message::End { .. } => {}
                Message::Error { code, .. } => return code,
                m => panic!("unexpected {m:?}"),
            }
        }
    });
    let err = serve_episode(&task, server, ObsKind::TopDown).unwrap_err();
    assert!(matches!(err, WireError::OutOfOrder { got: MsgType::Act, .. }), "{err}");
    assert_eq!(h.join().unwrap(), ErrorCode::OUT_OF_ORDER);
}

#[test]
fn act_instead_of_forecast_is_out_of_order() {
    let task = small_task(4);
    let (server, mut client) = duplex(T);
    let h = thread::spawn(move || {
        client.handshake().unwrap();
        let _ = client.recv().unwrap();
        let _ = client.recv().unwrap(); // OBS
        let _ = client.recv().unwrap(); // PREDICT_REQ
        client.send(Message::Act(ActionId::Stop)).unwrap();
        match client.recv().unwrap() {
            Message::Error { code, .. } => code,
            m => panic!("unexpected {m:?}"),
        }
    });
    let reset = ResetPayload {
        obs_kind: ObsKind::Frame,
        mode: SessionMode::WorldModel,
        episode_len: 4,
        requests_per_checkpoint: 1,
        checkpoints: vec![1],
    };
    let mut s = ServerSession::start(server, reset).unwrap();
    let st = SimState::initial(&task);
    s.observe(&StepView { task: &task, state: &st, last_reward: 0.0 }).unwrap();
    let err = s.predict(1, &[], &[ActionId::Forward]).unwrap_err();
    assert!(matches!(err, WireError::OutOfOrder { got: MsgType::Act, .. }));
    assert_eq!(h.join().unwrap(), ErrorCode::OUT_OF_ORDER);
}

fn read_error_code(r: &mut PipeReader) -> u16 {
    loop {
        match read_message(r).unwrap() {
            Message::Error { code, .. } => return code.0,
            _ => continue,
        }
    }
}

#[test]
fn version_mismatch_is_reported_and_closes() {
    let task = small_task(4);
    let (server, mut r, mut w) = raw_client(T);
    w.write_all(&hello(2)).unwrap();
    let err = serve_episode(&task, server, ObsKind::TopDown).unwrap_err();
    assert!(matches!(err, WireError::VersionMismatch { ours: 1, theirs: 2 }));
    let mut h = [0u8; HELLO_BYTES];
    r.read_exact(&mut h).unwrap();
    assert_eq!(h, hello(VERSION));
    assert_eq!(read_error_code(&mut r), ErrorCode::VERSION_MISMATCH.0);
}

#[test]
fn unknown_type_gets_unknown_type_error() {
    let task = small_task(4);
    let (server, mut r, mut w) = raw_client(T);
    let h = thread::spawn(move || serve_episode(&task, server, ObsKind::TopDown));
    w.write_all(&hello(VERSION)).unwrap();
    let mut hb = [0u8; HELLO_BYTES];
    r.read_exact(&mut hb).unwrap();
    assert!(matches!(read_message(&mut r).unwrap(), Message::Reset(_)));
    assert!(matches!(read_message(&mut r).unwrap(), Message::Obs(_)));
    w.write_all(&[b'G', b'P', b'W', b'1', 42, 0, 0, 0, 0]).unwrap();
    assert_eq!(read_error_code(&mut r), ErrorCode::UNKNOWN_TYPE.0);
    assert!(matches!(h.join().unwrap(), Err(WireError::UnknownType(42))));
}

#[test]
fn silent_client_times_out() {
    let task = small_task(4);
    let (server, mut r, mut w) = raw_client(Duration::from_millis(200));
    w.write_all(&hello(VERSION)).unwrap();
    let err = serve_episode(&task, server, ObsKind::TopDown).unwrap_err();
    assert!(matches!(err, WireError::Timeout(_)));
    let mut hb = [0u8; HELLO_BYTES];
    r.read_exact(&mut hb).unwrap();
    assert_eq!(read_error_code(&mut r), ErrorCode::TIMEOUT.0);
    drop(w);
}

#[test]
fn hang_up_mid_episode_is_closed() {
    let task = small_task(10);
    let (server, mut client) = duplex(T);
    let h = thread::spawn(move || {
        client.handshake().unwrap();
        let _ = client.recv().unwrap();
        let _ = client.recv().unwrap();
        client.send(Message::Act(ActionId::Forward)).unwrap();
        // drop: the connection closes with the episode unfinished
    });
    let err = serve_episode(&task, server, ObsKind::TopDown).unwrap_err();
    h.join().unwrap();
    assert!(matches!(err, WireError::Closed), "{err}");
}

/// Client messages that may appear in a script.
fn client_msg(i: usize) -> Message {
    match i {
        0 => Message::Act(ActionId::Forward),
        1 => Message::PredictResp { frames: vec![FrameRGB::blank()] },
        2 => Message::Reset(ResetPayload {
            obs_kind: ObsKind::TopDown,
            mode: SessionMode::Policy,
            episode_len: 1,
            requests_per_checkpoint: 0,
            checkpoints: vec![],
        }),
        3 => Message::End { steps: 0, accumulated_reward: 0.0 },
        4 => Message::PredictReq { t: 1, executed: vec![], future: vec![] },
        _ => Message::Obs(ObsPayload { step: 0, reward: 0.0, command: 0, kind: ObsKind::TopDown, data: vec![0; 121] }),
    }
}

/// Drives a 3-step world-model session (one forecast after the second
/// frame) against a client that blindly sends `script`.
fn fuzz_session(script: Vec<usize>) -> (Result<Vec<MsgType>, WireError>, Vec<MsgType>) {
    let task = small_task(3);
    let (server, mut client) = duplex(Duration::from_secs(5));
    let h = thread::spawn(move || {
        client.handshake().unwrap();
        for &i in &script {
            if client.send(client_msg(i)).is_err() {
                break;
            }
        }
        client.close_write();
        while client.recv().is_ok() {}
    });
    let reset = ResetPayload {
        obs_kind: ObsKind::TopDown,
        mode: SessionMode::WorldModel,
        episode_len: 3,
        requests_per_checkpoint: 1,
        checkpoints: vec![2],
    };
    let mut transcript = Vec::new();
    let run = (|| {
        let mut s = ServerSession::start(server, reset)?;
        let mut st = SimState::initial(&task);
        let mut r = 0.0;
        let result: Result<(), WireError> = (|| {
            for t in 0..3 {
                s.observe(&StepView { task: &task, state: &st, last_reward: r })?;
                if t + 1 == 2 {
                    s.predict(2, &[ActionId::Forward], &[ActionId::Forward])?;
                }
                let a = s.act()?;
                let out = step(&task, &st, a).unwrap();
                r = out.reward;
                st = out.state;
            }
            Ok(())
        })();
        transcript = s.transcript().to_vec();
        result?;
        s.end(3, st.accumulated_reward)
    })();
    h.join().unwrap();
    (run, transcript)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn server_accepts_only_the_language(script in prop_oneof![
        prop::collection::vec(0usize..6, 0..7),
        (any::<prop::sample::Index>(), 0usize..6, any::<bool>()).prop_map(|(i, m, insert)| {
            let mut v = vec![0, 1, 0, 0];
            let i = i.index(v.len() + 1);
            if insert { v.insert(i, m) } else if i < v.len() { v[i] = m }
            v
        }),
        Just(vec![0, 1, 0, 0]),
    ]) {
        let valid = script == vec![0, 1, 0, 0];
        let (run, transcript) = fuzz_session(script);
        prop_assert_eq!(run.is_ok(), valid);
        if let Ok(full) = run {
            prop_assert!(language().is_match(&word(&full)), "{}", word(&full));
        }
        // Whatever was exchanged is always a prefix the grammar allows.
        let mut g = Grammar::default();
        prop_assert!(transcript.iter().all(|&t| g.advance(t)));
    }
}

// ---- transports ----

struct Tee<T> {
    inner: T,
    log: Arc<Mutex<Vec<u8>>>,
}

impl<T: Read> Read for Tee<T> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.log.lock().unwrap().extend(&buf[..n]);
        Ok(n)
    }
}

impl<T: Write> Write for Tee<T> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.log.lock().unwrap().extend(&buf[..n]);
        Ok(n)
    }
    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

type Logs = (Arc<Mutex<Vec<u8>>>, Arc<Mutex<Vec<u8>>>);

fn logs() -> Logs {
    (Arc::new(Mutex::new(Vec::new())), Arc::new(Mutex::new(Vec::new())))
}

#[test]
fn pipe_and_tcp_carry_identical_bytes() {
    let task = small_task(40);
    let agent = || RandomAgent::new(99);

    let (pin, pout) = logs();
    let (r1, w1) = std::io::pipe().unwrap();
    let (r2, w2) = std::io::pipe().unwrap();
    let server = Connection::from_streams(Tee { inner: r1, log: pin.clone() }, Tee { inner: w2, log: pout.clone() }, T);
    let h = spawn_client(Connection::from_streams(r2, w1, T), agent());
    let a = serve_episode(&task, server, ObsKind::Frame).unwrap();
    h.join().unwrap().0.unwrap();

    let (tin, tout) = logs();
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let h = thread::spawn(move || {
        let mut c = Connection::connect(&addr, T).unwrap();
        run_client(&mut c, &mut agent()).unwrap()
    });
    let (sock, _) = listener.accept().unwrap();
    let server = Connection::from_streams(
        Tee { inner: sock.try_clone().unwrap(), log: tin.clone() },
        Tee { inner: sock, log: tout.clone() },
        T,
    );
    let b = serve_episode(&task, server, ObsKind::Frame).unwrap();
    h.join().unwrap();

    assert_eq!(a, b);
    assert_eq!(*pin.lock().unwrap(), *tin.lock().unwrap());
    assert_eq!(*pout.lock().unwrap(), *tout.lock().unwrap());
    assert!(pout.lock().unwrap().len() > 40 * FRAME_BYTES);
}

/// Accepts connections forever, serving each with a fresh random agent.
fn agent_server() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    thread::spawn(move || {
        for (i, sock) in listener.incoming().enumerate() {
            let Ok(sock) = sock else { return };
            thread::spawn(move || {
                let mut c = Connection::tcp(sock, T).unwrap();
                let _ = run_client(&mut c, &mut RandomAgent::new(i as u64));
            });
        }
    });
    addr
}

#[test]
fn wire_policy_rewards_replay_exactly() {
    let addr = agent_server();
    let cfg = InteractiveEvalConfig { num_tasks: 4, sizes: vec![15], horizon: 120, ..Default::default() };
    let curves = run_interactive(
        || Ok(Box::new(WirePolicy::new(Endpoint::Connect(addr.clone()), T, ObsKind::TopDown)) as Box<dyn Policy>),
        &cfg,
        1,
    )
    .unwrap();
    let sc = &curves[0];
    for ((m, acts), &fin) in sc.manifests.iter().zip(&sc.actions).zip(&sc.final_rewards) {
        let task = m.generate().unwrap();
        let mut s = SimState::initial(&task);
        for &a in acts {
            s = step(&task, &s, ActionId::try_from(a).unwrap()).unwrap().state;
        }
        assert_eq!(s.accumulated_reward, fin);
    }
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    drop(listener);
    let cfg = InteractiveEvalConfig { num_tasks: 2, sizes: vec![15], horizon: 5, ..Default::default() };
    let err = run_interactive(
        || Ok(Box::new(WirePolicy::new(Endpoint::Connect(addr.clone()), T, ObsKind::TopDown)) as Box<dyn Policy>),
        &cfg,
        1,
    )
    .unwrap_err();
    assert!(err.is_protocol(), "{err}");
}

/// In-process twin of the random agent's forecast: repeat the last frame.
struct RepeatLast {
    last: Option<FrameRGB>,
}

impl Predictor for RepeatLast {
    fn begin_episode(&mut self, _: usize) -> Result<(), EvalError> {
        self.last = None;
        Ok(())
    }
    fn observe(&mut self, view: &StepView<'_>) -> Result<(), EvalError> {
        self.last = Some(view.frame());
        Ok(())
    }
    fn predict(&mut self, req: &PredictRequest<'_>) -> Result<Vec<FrameRGB>, EvalError> {
        Ok(vec![self.last.clone().unwrap(); req.future_actions.len()])
    }
    fn commit(&mut self, _: ActionId) -> Result<(), EvalError> {
        Ok(())
    }
}

#[test]
fn wire_predictor_matches_in_process_twin() {
    let addr = agent_server();
    let cfg = WMEvalConfig { checkpoints: vec![1, 5, 20], depths: vec![1, 4], num_tasks: 3, sizes: vec![15], jobs: 0 };
    let driver = || Ok(Box::new(icbench_core::agent::PrivilegedPolicy::new(1.0)) as Box<dyn Policy>);
    let len = cfg.rollout_len();
    let over_wire = run_wm_eval(
        driver,
        || Ok(Box::new(WirePredictor::new(Endpoint::Connect(addr.clone()), T, len, vec![1, 5, 20], 2)) as Box<dyn Predictor>),
        &cfg,
        4,
    )
    .unwrap();
    let local = run_wm_eval(driver, || Ok(Box::new(RepeatLast { last: None }) as Box<dyn Predictor>), &cfg, 4).unwrap();
    assert_eq!(over_wire, local);
    assert!(over_wire.iter().any(|r| r.mse > 0.0));
}
