//! Acceptance criteria, one `[PASS]`/`[FAIL]` line each. Exits non-zero on
//! any failure. Tolerances and runtime limits are fixed below.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use parrondo_cli::commands::sweep_rows;
use parrondo_cli::config::SweepConfig;
use parrondo_core::circle::{circle_dist, DEFAULT_INVERSE_TOL};
use parrondo_core::dynamics::{iterate, Classification, OrbitMap, StartPoint};
use parrondo_core::highdim_maps::check_cone_condition;
use parrondo_core::ifs::{
    monte_carlo_detailed, recurrence_from_stats, theoretical_bounds, Admissibility, IfsConfig,
};
use parrondo_core::planar_maps::{
    apply_f0, apply_f1, composition_radial_gain, inverse_f0, inverse_f1, semistable_1d, CartPoint,
    CylPoint, MapWord, Semistable,
};
use parrondo_core::Profiles;

const GAIN_TOL: f64 = 1e-9;
const TRAILING_GAIN_TOL: f64 = 1e-6;
const ROUND_TRIP_TOL: f64 = 1e-8;
const SPATIAL_GAIN_TOL: f64 = 1e-6;
const BOUNDS_TOL: f64 = 1e-9;
const ACCEPT_SEED: u64 = 2024;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn criterion_1() -> Outcome {
    let p = Profiles::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for word in ["F0,F1", "F1,F0"] {
        let w: MapWord = word.parse().unwrap();
        let c = composition_radial_gain(&w, &p, 100_000);
        ok &= c.certified && c.min_gain >= 3.0 - GAIN_TOL;
        parts.push(format!(
            "{word}: min {:.12} at {:.6}, certified lower bound {:.9}",
            c.min_gain,
            c.argmin.value(),
            c.lower_bound
        ));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_2() -> Outcome {
    let p = Profiles::default();
    let mut rng = ChaCha8Rng::seed_from_u64(ACCEPT_SEED);
    let maps = [
        OrbitMap::Planar("F0".parse().unwrap()),
        OrbitMap::Planar("F1".parse().unwrap()),
    ];
    let mut worst = 0.0f64;
    let mut latest_entry = 0;
    let mut bad = Vec::new();
    for i in 0..100 {
        let start = StartPoint::Cyl(CylPoint::new(
            rng.gen_range(-20.0..=20.0),
            rng.gen_range(0.0..1.0),
        ));
        for m in &maps {
            let t = iterate(m, &p, &start, 500).unwrap();
            let Some(n0) = t.entered_trap_at else {
                bad.push(format!("start {i} {m}: no trap entry"));
                continue;
            };
            latest_entry = latest_entry.max(n0);
            if t.classification != Classification::Attracted {
                bad.push(format!("start {i} {m}: {}", t.classification));
            }
            let tail = &t.gains[(n0 + 200).min(t.gains.len())..];
            if tail.is_empty() {
                bad.push(format!(
                    "start {i} {m}: trap entry {n0} leaves no checked steps"
                ));
            }
            for g in tail {
                worst = worst.max((g + 1.0).abs());
            }
        }
    }
    let ok = bad.is_empty() && worst <= TRAILING_GAIN_TOL;
    let mut detail = format!(
        "200 orbits; latest trap entry {latest_entry}; max |gain + 1| after entry + 200 = {worst:.3e}"
    );
    if !bad.is_empty() {
        detail.push_str(&format!("; {} failures, first: {}", bad.len(), bad[0]));
    }
    outcome(ok, detail)
}

fn criterion_3() -> Outcome {
    let p = Profiles::default();
    let mut rng = ChaCha8Rng::seed_from_u64(ACCEPT_SEED + 3);
    let (mut err_r, mut err_t) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let x = CylPoint::new(rng.gen_range(-20.0..20.0), rng.gen_range(0.0..1.0));
        for (fwd, inv) in [
            (
                apply_f0 as fn(&Profiles, CylPoint) -> CylPoint,
                inverse_f0 as fn(_, _, _) -> _,
            ),
            (apply_f1, inverse_f1),
        ] {
            let back = inv(&p, fwd(&p, x), DEFAULT_INVERSE_TOL).unwrap();
            err_r = err_r.max((back.r - x.r).abs());
            err_t = err_t.max(circle_dist(back.theta, x.theta));
            let fwd_back = fwd(&p, inv(&p, x, DEFAULT_INVERSE_TOL).unwrap());
            err_r = err_r.max((fwd_back.r - x.r).abs());
            err_t = err_t.max(circle_dist(fwd_back.theta, x.theta));
        }
    }
    outcome(
        err_r < ROUND_TRIP_TOL && err_t < ROUND_TRIP_TOL,
        format!("f0, f1 on 10^4 points both ways: max error r {err_r:.3e}, θ {err_t:.3e} turns"),
    )
}

fn criterion_4() -> Outcome {
    let p = Profiles::default();
    let mut rng = ChaCha8Rng::seed_from_u64(ACCEPT_SEED + 4);
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [3usize, 4, 5] {
        let rep = check_cone_condition(&p, k, 100_000);
        let gains_ok =
            rep.min_gain_jh >= 3.0 - SPATIAL_GAIN_TOL && rep.min_gain_hj >= 3.0 - SPATIAL_GAIN_TOL;
        let mut attracted = 0;
        for letter in ["h", "j"] {
            let m: OrbitMap = format!("{letter}{k}").parse().unwrap();
            for _ in 0..100 {
                let x: Vec<f64> = (0..k).map(|_| rng.gen_range(-10.0..10.0)).collect();
                let t = iterate(&m, &p, &StartPoint::Cart(CartPoint::new(x)), 500).unwrap();
                attracted += (t.classification == Classification::Attracted) as usize;
            }
        }
        ok &= rep.holds && gains_ok && attracted == 200;
        parts.push(format!(
            "k={k}: cone {} (margin {:.4}), min gain j∘h {:.9}, h∘j {:.9}, attracted {attracted}/200",
            if rep.holds { "holds" } else { "FAILS" },
            rep.certified_margin,
            rep.min_gain_jh,
            rep.min_gain_hj
        ));
    }
    outcome(ok, parts.join("; "))
}

fn ifs_experiment() -> IfsConfig {
    IfsConfig {
        p: 0.5,
        a: 5.0,
        seed: ACCEPT_SEED,
        horizon: 2000,
        n_sequences: 1000,
        ..IfsConfig::default()
    }
}

fn criteria_5_to_7() -> [(Outcome, Duration); 3] {
    let cfg = ifs_experiment();
    let t0 = Instant::now();
    let (stats, rows) = monte_carlo_detailed(&cfg).unwrap();
    let elapsed = t0.elapsed();
    let m = cfg.m();

    let exact_violations = rows
        .iter()
        .filter(|r| r.delta_2m < cfg.a * r.k_m as f64 - 2.0 * m as f64)
        .count();
    let min_mixed = stats.min_mixed_pair_gain.unwrap_or(f64::NAN);
    let min_unmixed = stats.min_unmixed_pair_gain.unwrap_or(f64::NAN);
    let c5 = outcome(
        exact_violations == 0 && stats.bound_violations == 0 && min_mixed >= cfg.a - 2.0 && min_unmixed >= -2.0,
        format!(
            "{} sequences, Δ < 5k − 2m in {exact_violations}; min mixed pair {min_mixed:.12}, min unmixed pair {min_unmixed:.12}",
            rows.len()
        ),
    );

    let pq2 = 2.0 * cfg.p * (1.0 - cfg.p);
    let sigma = (pq2 * (1.0 - pq2) / m as f64).sqrt();
    let rec = recurrence_from_stats(&stats, &cfg.bounds());
    let c6 = outcome(
        (stats.mean_k_over_m - pq2).abs() <= 3.0 * sigma && rec.holds,
        format!(
            "mean k/m {:.6} (target {pq2}, 3σ {:.6}); per-pair gain {:.6} ± {:.6} vs K = {}",
            stats.mean_k_over_m,
            3.0 * sigma,
            rec.per_pair_mean,
            rec.standard_error,
            rec.k_bound
        ),
    );

    let c7 = outcome(
        stats.escape_fraction >= 0.99,
        format!(
            "escape fraction {:.4} (Δ^{{2m}} > {}), mean slope {:.4}, 95% CI [{:.4}, {:.4}]",
            stats.escape_fraction,
            cfg.escape_threshold,
            stats.mean_slope,
            stats.slope_ci.0,
            stats.slope_ci.1
        ),
    );
    [(c5, elapsed), (c6, elapsed), (c7, elapsed)]
}

fn criterion_8() -> Outcome {
    let b5 = theoretical_bounds(0.5, 5.0);
    let b9 = theoretical_bounds(0.9, 12.0);
    let rows = sweep_rows(&SweepConfig {
        p_grid: vec![0.5],
        a_grid: Some(vec![4.0]),
        horizon: 200,
        n_sequences: 20,
        ..SweepConfig::default()
    })
    .unwrap();
    let label = rows[0].status;
    let ok = (b5.a_min - 4.0).abs() <= BOUNDS_TOL
        && (b9.a_min - 1.0 / 0.09).abs() <= BOUNDS_TOL
        && matches!(label, Admissibility::Boundary | Admissibility::Inadmissible);
    outcome(
        ok,
        format!(
            "a_min(0.5) = {:.9}, a_min(0.9) = {:.9}; sweep (p=0.5, a=4) labelled {}",
            b5.a_min,
            b9.a_min,
            label.label()
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for x in [-9.0f64, -1.0, 0.0, 1.0, 2.0] {
        let expected = if x <= 0.0 { x / 9.0 } else { 4.0 * x };
        let printed = semistable_1d(x, Semistable::FoG);
        let composed = semistable_1d(semistable_1d(x, Semistable::G), Semistable::F);
        // Branch of g(x) must be the one the printed formula assumes.
        let gx = semistable_1d(x, Semistable::G);
        let branch_ok = x == 0.0 || (gx <= 0.0) == (x > 0.0);
        ok &= printed == expected && composed == expected && branch_ok;
        parts.push(format!("f∘g({x}) = {composed}"));
    }
    outcome(ok, parts.join(", "))
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for name in ["first.json", "second.json"] {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_parrondo"))
            .args([
                "ifs",
                "--seed",
                "77",
                "--steps",
                "2000",
                "--sequences",
                "1000",
                "--out",
            ])
            .arg(&path)
            .output()
            .expect("binary runs");
        if !status.status.success() {
            return outcome(false, format!("ifs exited with {:?}", status.status.code()));
        }
        files.push(std::fs::read(&path).unwrap());
    }
    outcome(
        files[0] == files[1],
        format!(
            "two ifs runs, {} bytes each, identical: {}",
            files[0].len(),
            files[0] == files[1]
        ),
    )
}

fn timed(f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let t0 = Instant::now();
    let o = f();
    (o, t0.elapsed())
}

fn main() -> ExitCode {
    type Row = (
        &'static str,
        &'static str,
        Option<Duration>,
        (Outcome, Duration),
    );
    let mut rows: Vec<Row> = vec![
        (
            "1",
            "composition repulsion bound",
            Some(Duration::from_secs(1)),
            timed(criterion_1),
        ),
        (
            "2",
            "individual global attraction",
            Some(Duration::from_secs(1)),
            timed(criterion_2),
        ),
        (
            "3",
            "homeomorphism round trip",
            Some(Duration::from_secs(1)),
            timed(criterion_3),
        ),
        (
            "4",
            "high-dimensional paradox",
            Some(Duration::from_secs(10)),
            timed(criterion_4),
        ),
    ];
    let [c5, c6, c7] = criteria_5_to_7();
    rows.extend([
        (
            "5",
            "IFS exact inequality",
            Some(Duration::from_secs(30)),
            c5,
        ),
        ("6", "mixed-pair frequency and recurrence", None, c6),
        ("7", "almost-sure escape", None, c7),
        ("8", "admissibility frontier", None, timed(criterion_8)),
        (
            "9",
            "one-dimensional semistable example",
            None,
            timed(criterion_9),
        ),
        ("10", "reproducibility", None, timed(criterion_10)),
    ]);

    let mut failures = 0;
    for (id, name, limit, (o, elapsed)) in rows {
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let passed = o.passed && in_time;
        failures += !passed as usize;
        let limit_note = limit.map_or(String::new(), |l| format!(" / limit {} s", l.as_secs()));
        println!(
            "[{}] {id:>2} {name}: {} [{} ms{limit_note}]",
            if passed { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_millis()
        );
        if !in_time {
            println!("     runtime limit exceeded");
        }
    }
    println!("{} of 10 criteria passed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
