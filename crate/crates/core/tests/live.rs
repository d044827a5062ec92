mod common;

use tflow_core::data::STANDARD_STATS;
use tflow_core::live::{events_from_record, LiveEvent, LiveGameState};
use tflow_core::simulate::{simulate_league, SeededRng};
use tflow_core::{fit, MatchContext, ScoreAnchor, TScoreVariant};

use common::truth;

#[test]
fn incremental_path_equals_batch_replay() {
    let league = simulate_league(
        &truth(&[("a", 1.12), ("b", 0.95)], 0.05),
        30,
        &SeededRng::new(21),
    )
    .unwrap();
    let model = fit(&league["a"], TScoreVariant::default(), &STANDARD_STATS).unwrap();
    for anchor in [ScoreAnchor::Score, ScoreAnchor::Level] {
        for game in league["b"].iter().take(8) {
            let ctx = MatchContext::new(model.clone(), 0.95, 40).unwrap();
            let batch = ctx.replay(game, anchor).unwrap();
            let mut live = LiveGameState::new(ctx, anchor, None).unwrap();
            for e in events_from_record(game).unwrap() {
                live.apply(e).unwrap();
            }
            let inc = live.process_path();
            assert_eq!(inc.mt.len(), 41);
            for r in 0..=40 {
                assert!((inc.mt[r] - batch.mt[r]).abs() <= 1e-12);
                assert!((inc.pw[r] - batch.pw[r]).abs() <= 1e-12);
                assert_eq!(inc.scores[r], batch.scores[r]);
            }
        }
    }
}

#[test]
fn undo_everything_returns_to_tip_off() {
    let league = simulate_league(&truth(&[("a", 1.0)], 0.05), 12, &SeededRng::new(8)).unwrap();
    let model = fit(&league["a"], TScoreVariant::default(), &STANDARD_STATS).unwrap();
    let ctx = MatchContext::new(model, 1.0, 40).unwrap();
    let start = LiveGameState::new(ctx, ScoreAnchor::Score, None).unwrap();
    let mut live = start.clone();
    let events = events_from_record(&league["a"][0]).unwrap();
    for e in &events {
        live.apply(e.clone()).unwrap();
    }
    for _ in &events {
        live.apply(LiveEvent::Undo).unwrap();
    }
    assert_eq!(live, start);
}
