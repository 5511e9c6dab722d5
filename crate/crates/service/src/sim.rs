//! The simulation task: sole owner of the world, stepping at the tick rate.

use std::time::Duration;

use morphoarms::teleop::{Command, GestureEvent, GestureTracker, HandSample, SubmitResult};
use morphoarms::world::{Event, Snapshot, World};
use tokio::sync::{broadcast, mpsc, oneshot, watch};
use tokio::time::MissedTickBehavior;

#[derive(Debug)]
pub enum SimRequest {
    Command {
        command: Command,
        reply: oneshot::Sender<SubmitResult>,
    },
    Hand {
        sample: HandSample,
        reply: oneshot::Sender<HandOutcome>,
    },
    /// The operator left; forget its hands.
    ResetGestures,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandOutcome {
    Stale,
    Quiet,
    Submitted(Command, SubmitResult),
}

pub struct SimChannels {
    pub requests: mpsc::Receiver<SimRequest>,
    pub snapshots: watch::Sender<Snapshot>,
    pub events: broadcast::Sender<Event>,
}

/// Runs until every request sender is dropped.
pub async fn run(mut world: World, speed: f64, mut channels: SimChannels) {
    let period = Duration::from_secs_f64(world.config().gait.dt() / speed);
    let mut interval = tokio::time::interval(period);
    interval.set_missed_tick_behavior(MissedTickBehavior::Delay);
    let mut tracker = GestureTracker::new();
    let mut published = 0;
    loop {
        tokio::select! {
            _ = interval.tick() => world.step(),
            request = channels.requests.recv() => {
                let Some(request) = request else { break };
                handle(&mut world, &mut tracker, request);
            }
        }
        for event in &world.events()[published..] {
            // Nobody listening is fine.
            let _ = channels.events.send(event.clone());
        }
        published = world.events().len();
        let snapshot = world.snapshot();
        channels.snapshots.send_if_modified(|current| {
            let changed = *current != snapshot;
            if changed {
                *current = snapshot;
            }
            changed
        });
    }
    log::info!("simulation stopped at t={:.2} s", world.clock());
}

fn handle(world: &mut World, tracker: &mut GestureTracker, request: SimRequest) {
    match request {
        SimRequest::Command { command, reply } => {
            let result = world.submit(command);
            let _ = reply.send(result);
        }
        SimRequest::Hand { sample, reply } => {
            let threshold = world.scenario().teleop.reach_threshold;
            let outcome = match tracker.update(&sample, world.mode(), threshold) {
                GestureEvent::Stale => HandOutcome::Stale,
                GestureEvent::Quiet => HandOutcome::Quiet,
                GestureEvent::Fire(command) => HandOutcome::Submitted(command, world.submit(command)),
            };
            let _ = reply.send(outcome);
        }
        SimRequest::ResetGestures => tracker.reset(),
    }
}
