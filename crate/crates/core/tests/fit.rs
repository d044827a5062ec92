mod common;

use tflow_core::data::{load_game_bundle, write_game_bundle, STANDARD_STATS};
use tflow_core::simulate::{simulate_league, SeededRng};
use tflow_core::{fit, Error, TScoreVariant};

use common::{truth, TRUE_ALPHA};

#[test]
fn simulated_league_is_recovered() {
    let league = simulate_league(&truth(&[("a", 1.10)], 0.05), 400, &SeededRng::new(11)).unwrap();
    let games = &league["a"];
    for g in games {
        g.validate().unwrap();
    }
    let model = fit(games, TScoreVariant::symmetric_ratio(), &STANDARD_STATS).unwrap();
    for (row, truth) in model.inference[1..].iter().zip(TRUE_ALPHA) {
        assert!(
            (row.estimate - truth).abs() <= 4.0 * row.std_error,
            "{}: {} vs {truth} (se {})",
            row.name,
            row.estimate,
            row.std_error
        );
    }
    let tau2: f64 = model.alpha.iter().map(|a| a * a).sum();
    assert!((model.tau2 - tau2).abs() <= 1e-12 * tau2);
    assert!((model.alpha0 - 1.10).abs() <= 4.0 * model.inference[0].std_error);
}

#[test]
fn game_order_does_not_change_the_fit() {
    let league = simulate_league(&truth(&[("a", 1.0)], 0.05), 40, &SeededRng::new(5)).unwrap();
    let mut games = league["a"].clone();
    let m1 = fit(&games, TScoreVariant::default(), &STANDARD_STATS).unwrap();
    games.reverse();
    games.swap(3, 17);
    let m2 = fit(&games, TScoreVariant::default(), &STANDARD_STATS).unwrap();
    assert_eq!(m1, m2);
}

#[test]
fn bundle_roundtrip_preserves_games() {
    let league = simulate_league(
        &truth(&[("a", 1.0), ("b", 0.9)], 0.05),
        6,
        &SeededRng::new(2),
    )
    .unwrap();
    let games: Vec<_> = league.values().flatten().cloned().collect();
    let dir = tempfile::tempdir().unwrap();
    write_game_bundle(dir.path(), &games).unwrap();
    let back = load_game_bundle(dir.path()).unwrap();
    let mut sorted = games.clone();
    sorted.sort_by(|a, b| a.game_id.cmp(&b.game_id));
    assert_eq!(back, sorted);
}

#[test]
fn collinear_stats_are_named() {
    let mut t = truth(&[("a", 1.0)], 0.05);
    // No two-point baskets: every field goal is a three.
    t.rates.scoring.point_dist = [0.4, 0.0, 0.6];
    let league = simulate_league(&t, 50, &SeededRng::new(3)).unwrap();
    let err = fit(&league["a"], TScoreVariant::default(), &STANDARD_STATS).unwrap_err();
    match err {
        Error::RankDeficient { columns } => assert_eq!(columns, vec!["3FGM".to_string()]),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn too_few_games() {
    let league = simulate_league(&truth(&[("a", 1.0)], 0.05), 9, &SeededRng::new(4)).unwrap();
    assert!(matches!(
        fit(&league["a"], TScoreVariant::default(), &STANDARD_STATS),
        Err(Error::TooFewGames { needed: 10, got: 9 })
    ));
}
