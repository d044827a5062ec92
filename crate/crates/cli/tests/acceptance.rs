//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::Parser;
use rand::Rng;

use tflow_cli::{run, Cli};
use tflow_core::data::{load_model, load_series, STANDARD_STATS};
use tflow_core::flow::{iof, select_delta, DEFAULT_K_TARGET};
use tflow_core::model::{pcs_allocation, pcs_weights};
use tflow_core::simulate::{
    monte_carlo_pw_from_t_star, simulate_league, simulate_stat_path, GameRates, LeagueTruth,
    ScoringLaw, SeededRng,
};
use tflow_core::{
    fit, FittedModel, MatchContext, ProcessPath, ScoreAnchor, ScorePair, TScoreKind, TScoreVariant,
};

const TRUE_ALPHA: [f64; 8] = [0.06, 0.0, 0.0, 0.0, 0.056, 0.0, 0.0, 0.0];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn chiba() -> FittedModel {
    load_model(&fixture("chiba_model.json")).expect("model fixture")
}

fn bare_path(mt: Vec<f64>) -> ProcessPath {
    let r = mt.len() - 1;
    ProcessPath {
        times: (0..=r).map(|i| i as f64 / r as f64).collect(),
        t_star: mt.clone(),
        pw: vec![0.0; r + 1],
        mt,
        scores: Vec::new(),
    }
}

fn truth(teams: &[(&str, f64)], sigma: f64) -> LeagueTruth {
    LeagueTruth {
        variant: TScoreVariant::symmetric_ratio(),
        stat_ids: STANDARD_STATS.iter().map(|s| s.to_string()).collect(),
        alpha: TRUE_ALPHA.to_vec(),
        sigma2: sigma * sigma,
        teams: teams.iter().map(|(t, a)| (t.to_string(), *a)).collect(),
        rates: GameRates::basketball(42.0).expect("rates"),
        grid_r: 40,
        roster_size: 10,
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (
        m,
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0),
    )
}

// ---------------------------------------------------------------------------

fn opening_levels() -> Outcome {
    let sr = TScoreVariant::symmetric_ratio();
    let beta0 = [1.088059, 1.086108, 1.05268, 0.977479, 0.952111, 0.874814];
    let want = [1.045995, 1.047706, 1.077015, 1.142951, 1.165194, 1.232967];
    let worst = beta0
        .iter()
        .zip(want)
        .map(|(b, w)| (sr.eval(1.140517, *b).expect("valid scores") - w).abs())
        .fold(0.0, f64::max);
    outcome(worst <= 1e-6, format!("max |error| = {worst:.2e}"))
}

fn delta_and_iof() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for (name, delta, steps) in [
        ("ryukyu_series.csv", 0.0148, vec![13, 22, 26, 34]),
        ("tokyo_series.csv", 0.0242, vec![8, 13, 15, 25]),
    ] {
        let path = bare_path(load_series(&fixture(name)).expect("series fixture").mt);
        let got = select_delta(&path, DEFAULT_K_TARGET).expect("four rises");
        let fire = iof(&path, got);
        pass &= got == delta && fire.steps == steps;
        notes.push(format!("{name}: delta {got}, steps {:?}", fire.steps));
    }
    outcome(pass, notes.join("; "))
}

fn monte_carlo() -> Outcome {
    let ctx = MatchContext::new(chiba(), 1.088059, 40).expect("context");
    let c = ctx.draw_benchmark();
    let root = SeededRng::new(2024);
    let n = 100_000;
    let mut worst: f64 = 0.0;
    let mut pass = true;
    let mut cell = 0;
    for t in [0.0, 0.25, 0.5, 0.75, 0.9] {
        for off in [-0.2, -0.1, 0.0, 0.1, 0.2] {
            let ts = c + off;
            let closed = ctx.pw_from_t_star(t, ts).expect("pw");
            let mc = monte_carlo_pw_from_t_star(&ctx, t, ts, n, &root.substream(1_000 * cell))
                .expect("mc");
            // The sample SE vanishes when no path crosses c; fall back to the
            // SE implied by the closed form.
            let se = mc
                .std_error
                .max((closed * (1.0 - closed) / n as f64).sqrt());
            let z = (mc.estimate - closed).abs() / se;
            worst = worst.max(z);
            pass &= z <= 3.0;
            cell += 1;
        }
    }
    outcome(
        pass,
        format!("25 cells x 1e5 paths, max |MC - closed| = {worst:.2} SE"),
    )
}

fn opening_anchor() -> Outcome {
    let ctx = MatchContext::new(chiba(), 1.088059, 40).expect("context");
    let scale = ctx.scale(0.0).expect("scale");
    let pw0 = ctx.pw_from_t_star(0.0, 1.045995).expect("pw");
    let lose = ctx
        .win_probability(1.0, ScorePair { a: 73.0, b: 88.0 })
        .expect("pw");
    let win = ctx
        .win_probability(1.0, ScorePair { a: 94.0, b: 66.0 })
        .expect("pw");
    let pass = (scale - 0.13524).abs() < 1e-12
        && (pw0 - 0.6331).abs() <= 5e-4
        && lose == 0.0
        && win == 1.0;
    outcome(
        pass,
        format!("scale {scale}, PW_0 = {pw0:.6}, endpoints {lose} / {win}"),
    )
}

fn fit_recovery() -> Outcome {
    let league =
        simulate_league(&truth(&[("a", 1.10)], 0.05), 400, &SeededRng::new(400)).expect("league");
    let model = fit(
        &league["a"],
        TScoreVariant::symmetric_ratio(),
        &STANDARD_STATS,
    )
    .expect("fit");
    let mut worst: f64 = 0.0;
    for (row, a) in model.inference[1..].iter().zip(TRUE_ALPHA) {
        worst = worst.max((row.estimate - a).abs() / row.std_error);
    }
    let tau2: f64 = model.alpha.iter().map(|a| a * a).sum();
    let tau_ok = (model.tau2 - tau2).abs() <= 1e-12 * tau2;
    outcome(
        worst <= 4.0 && tau_ok,
        format!(
            "max |alpha_hat - alpha| = {worst:.2} SE, sigma_hat = {:.4}",
            model.sigma2.sqrt()
        ),
    )
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, _) = mean_var(&rx);
    let (my, _) = mean_var(&ry);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum::<f64>().sqrt();
    let sy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum::<f64>().sqrt();
    cov / (sx * sy)
}

fn tfs_ranking() -> Outcome {
    let teams = [("t1", 1.14), ("t2", 1.09), ("t3", 0.95), ("t4", 0.87)];
    let t = truth(&teams, 0.05);
    let mut hits = 0;
    for rep in 0..100 {
        let league = simulate_league(&t, 60, &SeededRng::new(10_000 + rep)).expect("league");
        let fitted: Vec<f64> = teams
            .iter()
            .map(|(id, _)| {
                fit(
                    &league[*id],
                    TScoreVariant::symmetric_ratio(),
                    &STANDARD_STATS,
                )
                .expect("fit")
                .alpha0
            })
            .collect();
        let true_a: Vec<f64> = teams.iter().map(|(_, a)| *a).collect();
        if spearman(&fitted, &true_a) >= 0.9 {
            hits += 1;
        }
    }
    outcome(hits >= 95, format!("rho >= 0.9 in {hits}/100 replications"))
}

fn conservation() -> Outcome {
    let mut rng = SeededRng::new(77);
    let r = rng.rng();
    let mut worst_sum: f64 = 0.0;
    let mut worst_w: f64 = 0.0;
    for _ in 0..10_000 {
        let j = r.random_range(1..=15);
        let alpha0 = r.random_range(0.5..1.5);
        let scale = 10f64.powi(r.random_range(-3..=1));
        let pss: Vec<f64> = (0..j).map(|_| scale * (r.random::<f64>() - 0.5)).collect();
        let pcs = pcs_allocation(alpha0, &pss);
        worst_sum = worst_sum.max((pcs.iter().sum::<f64>() - alpha0).abs() / alpha0);
        if let Some(w) = pcs_weights(&pss) {
            worst_w = worst_w.max((w.iter().map(|x| x.abs()).sum::<f64>() - 1.0).abs());
        }
    }
    let equal_ok = [1usize, 5, 12].iter().all(|&j| {
        let pss = vec![0.0371; j];
        pcs_allocation(1.140517, &pss)
            .iter()
            .all(|&p| p == 1.140517 / j as f64)
    });
    outcome(
        worst_sum <= 1e-12 && worst_w <= 1e-12 && equal_ok,
        format!("1e4 rosters: max rel |sum PCS - a0| = {worst_sum:.1e}, max |sum|w| - 1| = {worst_w:.1e}, equal branch ok = {equal_ok}"),
    )
}

fn diffusion() -> Outcome {
    let law = ScoringLaw::new(1e4, [0.25, 0.5, 0.25]).expect("law");
    let sc = law.final_scaler();
    let mut rng = SeededRng::new(10_000);
    let incs: Vec<f64> = (0..10_000)
        .map(|_| {
            let p = simulate_stat_path("PTs", &law, &mut rng, 4);
            sc.apply(p.values[2], 0.5) - sc.apply(p.values[1], 0.25)
        })
        .collect();
    let (m, v) = mean_var(&incs);
    let se = (v / incs.len() as f64).sqrt();
    let inc_ok = m.abs() <= 3.0 * se && (0.2375..=0.2625).contains(&v);

    let unit = ScoringLaw::counting(1e3).expect("law");
    let nt = TScoreVariant::new(TScoreKind::Normalized, 0.0).expect("variant");
    let xs: Vec<f64> = (0..10_000)
        .map(|_| {
            let a = simulate_stat_path("a", &unit, &mut rng, 2).final_value();
            let b = simulate_stat_path("b", &unit, &mut rng, 2).final_value();
            nt.eval(a, b).expect("scores")
        })
        .collect();
    let (nm, nv) = mean_var(&xs);
    let n_ok = nm.abs() <= 3.0 * (nv / xs.len() as f64).sqrt() && (0.9..=1.1).contains(&nv);
    outcome(
        inc_ok && n_ok,
        format!("increment mean {m:.4} (SE {se:.4}), var {v:.4}; normalized var {nv:.4}"),
    )
}

fn iof_inequality() -> Outcome {
    let mut checked = 0;
    let mut pass = true;
    for name in ["ryukyu_series.csv", "tokyo_series.csv"] {
        let path = bare_path(load_series(&fixture(name)).expect("series").mt);
        let theta = select_delta(&path, DEFAULT_K_TARGET).expect("rises");
        let f = iof(&path, theta);
        pass &= f.increment_sum > theta * f.steps.len() as f64;
        checked += 1;
    }
    let league = simulate_league(
        &truth(&[("a", 1.1), ("b", 0.9)], 0.05),
        500,
        &SeededRng::new(5),
    )
    .expect("league");
    let model = fit(
        &league["a"],
        TScoreVariant::symmetric_ratio(),
        &STANDARD_STATS,
    )
    .expect("fit");
    let ctx = MatchContext::new(model, 0.9, 40).expect("context");
    let mut empty = 0;
    for game in league.values().flatten() {
        let path = ctx.replay(game, ScoreAnchor::Score).expect("replay");
        let theta = select_delta(&path, DEFAULT_K_TARGET).unwrap_or(0.0);
        let f = iof(&path, theta);
        if f.steps.is_empty() {
            empty += 1;
        } else {
            pass &= f.increment_sum > theta * f.steps.len() as f64;
        }
        checked += 1;
    }
    outcome(
        pass,
        format!("{checked} paths checked ({empty} without IoF steps)"),
    )
}

fn sensitivity() -> Outcome {
    let ctx = MatchContext::new(chiba(), 1.088059, 40).expect("context");
    let c = ctx.draw_benchmark();
    let mut rng = SeededRng::new(31);
    let r = rng.rng();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let t = r.random_range(0.0..0.95);
        let scale = ctx.scale(t).expect("scale");
        let t_star = c + scale * r.random_range(-3.0..3.0);
        let grad = ctx.sensitivity_from_t_star(t, t_star).expect("grad");
        for (g, a) in grad.iter().zip(&ctx.model.alpha) {
            let up = ctx.pw_from_t_star(t, t_star + a * h).expect("pw");
            let down = ctx.pw_from_t_star(t, t_star - a * h).expect("pw");
            let fd = (up - down) / (2.0 * h);
            let err = if *g == 0.0 {
                fd.abs()
            } else {
                (fd - g).abs() / g.abs()
            };
            worst = worst.max(err);
        }
    }
    outcome(
        worst <= 1e-6,
        format!("100 states x 8 stats, max relative error {worst:.2e}"),
    )
}

fn run_cli(args: &[&str]) {
    let cli = Cli::try_parse_from(std::iter::once("tflow").chain(args.iter().copied()))
        .expect("arguments");
    run(cli).expect("command succeeds");
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).expect("dir") {
        let p = e.expect("entry").path();
        out.push((
            p.file_name().expect("name").to_string_lossy().into_owned(),
            fs::read(&p).expect("file"),
        ));
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().expect("tempdir");
    let mut runs = Vec::new();
    for run in ["first", "second"] {
        let base = tmp.path().join(run);
        let s = |p: &Path| p.to_string_lossy().into_owned();
        let league = base.join("league");
        let model = base.join("model.json");
        let replay = base.join("replay");
        run_cli(&[
            "simulate",
            "--seed",
            "7",
            "--games",
            "40",
            "--teams",
            "3",
            "--out",
            &s(&league),
        ]);
        run_cli(&[
            "fit",
            "--games",
            &s(&league),
            "--team",
            "team02",
            "--out",
            &s(&model),
        ]);
        run_cli(&[
            "replay",
            "--model",
            &s(&model),
            "--games",
            &s(&league),
            "--team",
            "team02",
            "--opponent-tfs",
            "1.0",
            "--out",
            &s(&replay),
        ]);
        runs.push((
            tree(&league),
            fs::read(&model).expect("model"),
            tree(&replay),
        ));
    }
    let same = runs[0] == runs[1];
    let files = runs[0].0.len() + 1 + runs[0].2.len();
    outcome(same, format!("{files} output files compared byte for byte"))
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check, Option<Duration>); 11] = [
        (
            "opening levels against six opponents",
            opening_levels,
            Some(Duration::from_secs(1)),
        ),
        (
            "delta selection and IoF bands",
            delta_and_iof,
            Some(Duration::from_secs(1)),
        ),
        (
            "closed form vs Monte Carlo",
            monte_carlo,
            Some(Duration::from_secs(30)),
        ),
        (
            "opening win probability and endpoints",
            opening_anchor,
            None,
        ),
        ("fit recovery", fit_recovery, Some(Duration::from_secs(10))),
        ("TFS ranking across replications", tfs_ranking, None),
        ("PCS conservation", conservation, None),
        ("diffusion limit", diffusion, None),
        ("IoF inequality", iof_inequality, None),
        ("sensitivity vs finite differences", sensitivity, None),
        ("determinism", determinism, None),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed < l);
        let pass = o.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = limit.map_or(String::new(), |l| {
            format!(" / limit {:.0}s", l.as_secs_f64())
        });
        println!(
            "{} {name}: {} [{:.2}s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
