//! WebSocket teleoperation server.
//!
//! One simulation task owns the world. Clients connect to `/ws`, receive
//! snapshots at 10 Hz plus the event stream, and at most one of them holds
//! the operator role and may send commands or hand samples.

pub mod protocol;
mod sim;

use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use morphoarms::teleop::{Command, HandSample, SubmitResult};
use morphoarms::world::{Event, Snapshot, World};
use morphoarms::{RobotConfig, Scenario};
use nalgebra::Vector3;
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, oneshot, watch};

use protocol::{decode_command, ErrorCode, Inbound, Outbound, Role};
use sim::{HandOutcome, SimChannels, SimRequest};

pub const SNAPSHOT_INTERVAL: Duration = Duration::from_millis(100);

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub robot: RobotConfig,
    pub scenario: Scenario,
    /// Simulation speed relative to real time.
    pub speed: f64,
}

#[derive(Clone)]
struct AppState {
    scenario: Arc<Scenario>,
    requests: mpsc::Sender<SimRequest>,
    snapshots: watch::Receiver<Snapshot>,
    events: broadcast::Sender<Event>,
    operator: Arc<Mutex<Option<u64>>>,
    next_id: Arc<AtomicU64>,
}

/// Starts the simulation task and returns the HTTP/WebSocket router.
///
/// Must be called inside a Tokio runtime.
pub fn app(config: ServiceConfig) -> Router {
    assert!(config.speed.is_finite() && config.speed > 0.0, "speed must be positive");
    let world = World::new(config.robot, config.scenario.clone());
    let (request_tx, request_rx) = mpsc::channel(64);
    let (snapshot_tx, snapshot_rx) = watch::channel(world.snapshot());
    let (event_tx, _) = broadcast::channel(1024);
    tokio::spawn(sim::run(
        world,
        config.speed,
        SimChannels {
            requests: request_rx,
            snapshots: snapshot_tx,
            events: event_tx.clone(),
        },
    ));
    let state = AppState {
        scenario: Arc::new(config.scenario),
        requests: request_tx,
        snapshots: snapshot_rx,
        events: event_tx,
        operator: Arc::new(Mutex::new(None)),
        next_id: Arc::new(AtomicU64::new(1)),
    };
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/scenario", get(scenario))
        .route("/snapshot", get(snapshot))
        .route("/ws", get(upgrade))
        .with_state(state)
}

/// Serves on `listener` until the process ends.
pub async fn serve(listener: TcpListener, config: ServiceConfig) -> std::io::Result<()> {
    let addr: SocketAddr = listener.local_addr()?;
    log::info!("listening on {addr}");
    axum::serve(listener, app(config)).await
}

async fn scenario(State(state): State<AppState>) -> Json<Scenario> {
    Json((*state.scenario).clone())
}

async fn snapshot(State(state): State<AppState>) -> Json<Snapshot> {
    Json(state.snapshots.borrow().clone())
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| connection(socket, state)).into_response()
}

fn text(json: String) -> Message {
    Message::Text(json.into())
}

fn snapshot_json(snapshot: &Snapshot) -> String {
    serde_json::to_string(snapshot).expect("snapshot serializes")
}

async fn connection(socket: WebSocket, state: AppState) {
    let id = state.next_id.fetch_add(1, Ordering::Relaxed);
    let (mut sink, mut stream) = socket.split();
    let mut role = Role::Observer;
    let mut snapshots = state.snapshots.clone();
    let mut events = state.events.subscribe();
    let mut ticker = tokio::time::interval(SNAPSHOT_INTERVAL);
    let connected_at = Instant::now();
    log::debug!("client {id} connected");

    let first = snapshot_json(&snapshots.borrow_and_update());
    if sink.send(text(first)).await.is_err() {
        return;
    }
    loop {
        let outgoing: Vec<String> = tokio::select! {
            message = stream.next() => match message {
                Some(Ok(Message::Text(body))) => {
                    handle_text(body.as_str(), &mut role, id, connected_at, &state).await
                        .into_iter().map(|m| m.to_json()).collect()
                }
                Some(Ok(Message::Binary(_))) => {
                    vec![Outbound::error(ErrorCode::Malformed, "binary frames are not supported").to_json()]
                }
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => Vec::new(),
            },
            _ = ticker.tick() => {
                if snapshots.has_changed().unwrap_or(false) {
                    vec![snapshot_json(&snapshots.borrow_and_update())]
                } else {
                    Vec::new()
                }
            }
            event = events.recv() => match event {
                Ok(event) => vec![Outbound::Event { event }.to_json()],
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    log::warn!("client {id} missed {n} events");
                    Vec::new()
                }
                Err(broadcast::error::RecvError::Closed) => break,
            },
        };
        for json in outgoing {
            if sink.send(text(json)).await.is_err() {
                release(&state, id).await;
                return;
            }
        }
    }
    release(&state, id).await;
    log::debug!("client {id} disconnected");
}

async fn release(state: &AppState, id: u64) {
    let was_operator = {
        let mut slot = state.operator.lock().expect("operator slot poisoned");
        if *slot == Some(id) {
            *slot = None;
            true
        } else {
            false
        }
    };
    if was_operator {
        let _ = state.requests.send(SimRequest::ResetGestures).await;
    }
}

async fn handle_text(
    body: &str,
    role: &mut Role,
    id: u64,
    connected_at: Instant,
    state: &AppState,
) -> Option<Outbound> {
    let inbound = match Inbound::parse(body) {
        Ok(inbound) => inbound,
        Err(e) => return Some(Outbound::error(ErrorCode::Malformed, e)),
    };
    match inbound {
        Inbound::Ping => Some(Outbound::Pong),
        Inbound::Hello { role: Role::Observer } => {
            release(state, id).await;
            *role = Role::Observer;
            Some(Outbound::Welcome { role: Role::Observer })
        }
        Inbound::Hello { role: Role::Operator } => {
            let granted = {
                let mut slot = state.operator.lock().expect("operator slot poisoned");
                match *slot {
                    None => {
                        *slot = Some(id);
                        true
                    }
                    Some(holder) => holder == id,
                }
            };
            if granted {
                *role = Role::Operator;
                Some(Outbound::Welcome { role: Role::Operator })
            } else {
                Some(Outbound::RoleDenied {
                    role: Role::Operator,
                    reason: "another client holds the operator role".into(),
                })
            }
        }
        Inbound::Command { .. } | Inbound::Hand { .. } if *role != Role::Operator => Some(Outbound::error(
            ErrorCode::ObserverRole,
            "only the operator may send commands",
        )),
        Inbound::Command { name, axis, sign } => match decode_command(name, axis, sign) {
            Ok(command) => submit(state, command).await.map(|result| Outbound::Ack { result, command: None }),
            Err(e) => Some(Outbound::error(ErrorCode::Malformed, e.to_string())),
        },
        Inbound::Hand { hand, pos, t } => {
            let sample = HandSample {
                hand,
                position: Vector3::from(pos),
                timestamp: t.unwrap_or_else(|| connected_at.elapsed().as_secs_f64()),
            };
            let (reply, outcome) = oneshot::channel();
            state.requests.send(SimRequest::Hand { sample, reply }).await.ok()?;
            match outcome.await.ok()? {
                HandOutcome::Stale => Some(Outbound::error(
                    ErrorCode::StaleSample,
                    "hand timestamps must increase",
                )),
                HandOutcome::Quiet => None,
                HandOutcome::Submitted(command, result) => Some(Outbound::Ack {
                    result,
                    command: Some(command),
                }),
            }
        }
    }
}

async fn submit(state: &AppState, command: Command) -> Option<SubmitResult> {
    let (reply, result) = oneshot::channel();
    state.requests.send(SimRequest::Command { command, reply }).await.ok()?;
    result.await.ok()
}
