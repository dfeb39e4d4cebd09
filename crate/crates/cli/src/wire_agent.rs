//! Reference external client: uniform-random actions over the wire, the
//! template for agents written in other languages.

use std::io::Write;
use std::net::TcpListener;
use std::thread;
use std::time::Duration;

use anyhow::Context;
use icbench_core::wire::{run_client, Connection, RandomAgent};

fn play(mut conn: Connection, seed: u64) -> anyhow::Result<()> {
    let ep = run_client(&mut conn, &mut RandomAgent::keyed(seed))?;
    log::info!(
        "episode done: {} steps, reported reward {}, observed reward {}",
        ep.steps,
        ep.reported_reward,
        ep.observed_reward
    );
    Ok(())
}

/// One episode over stdin/stdout.
pub fn stdio(seed: u64, timeout: Duration) -> anyhow::Result<()> {
    play(Connection::from_streams(std::io::stdin(), std::io::stdout(), timeout), seed)
}

/// Accepts connections on `addr`, one episode each, until `episodes` have
/// been served (forever when `None`). Prints the bound address first so
/// callers can listen on port 0.
pub fn listen(addr: &str, seed: u64, episodes: Option<usize>, timeout: Duration) -> anyhow::Result<()> {
    let listener = TcpListener::bind(addr).with_context(|| format!("binding {addr}"))?;
    let local = listener.local_addr()?;
    println!("{local}");
    std::io::stdout().flush()?;
    log::info!("listening on {local}");
    let mut workers = Vec::new();
    for (served, stream) in listener.incoming().enumerate() {
        let stream = stream?;
        workers.push(thread::spawn(move || -> anyhow::Result<()> { play(Connection::tcp(stream, timeout)?, seed) }));
        if episodes.is_some_and(|n| served + 1 >= n) {
            break;
        }
    }
    for w in workers {
        if let Err(e) = w.join().expect("episode thread panicked") {
            log::error!("{e:#}");
        }
    }
    Ok(())
}
