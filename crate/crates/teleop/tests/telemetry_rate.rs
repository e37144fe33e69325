//! Kept in its own binary so no other socket test competes for the CPU.

mod common;

use std::time::Duration;

use cardioscope_teleop::{LiveConfig, MessageKind};
use common::{serve, Client};

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn one_second_of_telemetry() {
    let server = serve(LiveConfig::default()).await;
    let mut c = Client::connect(&server).await;
    c.next_of(MessageKind::Hello).await;
    // Let the first frame and state arrive before counting.
    c.next_of(MessageKind::Frame).await;
    c.seen.clear();
    let end = tokio::time::Instant::now() + Duration::from_secs(1);
    while c
        .recv_within(end.saturating_duration_since(tokio::time::Instant::now()))
        .await
        .is_some()
    {}
    let count = |k| c.seen.iter().filter(|m| m.kind == k).count();
    let (states, frames) = (count(MessageKind::State), count(MessageKind::Frame));
    assert!((14..=16).contains(&states), "{states} state messages");
    assert!((9..=11).contains(&frames), "{frames} frame messages");
    c.close().await;
}
