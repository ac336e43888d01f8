use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::anyhow;
use serde::Serialize;
use serde_json::{json, Value};

use parrondo_core::dynamics::{iterate, OrbitMap, SpatialLetter, StartPoint};
use parrondo_core::highdim_maps::check_cone_condition;
use parrondo_core::ifs::{
    monte_carlo, monte_carlo_detailed, recurrence_from_stats, theoretical_bounds, Admissibility,
    IfsConfig, SequenceResult,
};
use parrondo_core::planar_maps::{composition_radial_gain, CartPoint, CylPoint, MapWord};
use parrondo_core::profiles::{validate_profiles, validate_profiles_symmetric};
use parrondo_core::VERSION;

use crate::args::Format;
use crate::config::{profile_params, IfsRunConfig, OrbitConfig, SweepConfig, VerifyConfig};
use crate::{CliError, Outcome};

/// Slack below `a − 2` still accepted as a passing composition gain.
pub const GAIN_TOLERANCE: f64 = 1e-9;

fn config_err(msg: impl std::fmt::Display) -> CliError {
    CliError::Config(anyhow!("{msg}"))
}

fn echo<T: Serialize>(command: &str, cfg: &T) -> Value {
    let mut v = serde_json::to_value(cfg).expect("configs serialize");
    if let Value::Object(m) = &mut v {
        m.insert("command".into(), Value::String(command.into()));
    }
    v
}

fn csv_preamble(config: &Value) -> String {
    format!("# config: {config}\n# version: {VERSION}\n")
}

pub fn json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s.into_bytes()
}

/// Writes to `out`, or to standard output when absent.
pub fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => {
            fs::write(p, bytes).map_err(|e| CliError::Io(anyhow!("writing {}: {e}", p.display())))
        }
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(bytes)
                .and_then(|_| so.flush())
                .map_err(|e| CliError::Io(anyhow!("writing standard output: {e}")))
        }
    }
}

/// Summary lines go to stdout when the payload went to a file.
pub fn summary(out: Option<&Path>, line: &str) {
    if out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn positive(name: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(config_err(format!(
            "{name} = {x} must be positive and finite"
        )))
    }
}

pub fn cmd_verify(cfg: &VerifyConfig) -> Result<(Value, Outcome), CliError> {
    positive("a", cfg.a)?;
    positive("w", cfg.w)?;
    positive("d", cfg.d)?;
    if cfg.k < 2 {
        return Err(config_err(format!(
            "dimension k = {} must be at least 2",
            cfg.k
        )));
    }
    if cfg.grid < 2 || cfg.cone_samples == 0 {
        return Err(config_err("grid must be ≥ 2 and cone_samples ≥ 1"));
    }
    if cfg.format != Format::Json {
        return Err(config_err("verify writes JSON only"));
    }
    let profiles = profile_params(cfg.a, cfg.w, cfg.d, cfg.angular_shape).build_unchecked();
    let validation = if cfg.k >= 3 {
        validate_profiles_symmetric(&profiles.radial, &profiles.angular)
    } else {
        validate_profiles(&profiles.radial, &profiles.angular)
    };
    let threshold = cfg.a - 2.0 - GAIN_TOLERANCE;
    let mut passed = validation.all_passed();

    let mut gains = Vec::new();
    for word in ["F0,F1", "F1,F0"] {
        let w: MapWord = word.parse().expect("literal words parse");
        let cert = composition_radial_gain(&w, &profiles, cfg.grid);
        let ok = cert.certified && cert.min_gain >= threshold;
        passed &= ok;
        gains
            .push(json!({"word": word, "threshold": threshold, "passed": ok, "certificate": cert}));
    }

    let cone = (cfg.k >= 3).then(|| {
        let rep = check_cone_condition(&profiles, cfg.k, cfg.cone_samples);
        let ok = rep.holds && rep.min_gain_jh >= threshold && rep.min_gain_hj >= threshold;
        passed &= ok;
        json!({"passed": ok, "report": rep})
    });

    let report = json!({
        "config": echo("verify", cfg),
        "version": VERSION,
        "passed": passed,
        "validation": validation,
        "composition_gains": gains,
        "cone": cone,
    });
    Ok((report, if passed { Outcome::Pass } else { Outcome::Fail }))
}

pub fn orbit_map(cfg: &OrbitConfig) -> Result<OrbitMap, CliError> {
    let map: OrbitMap = cfg.map.parse().map_err(config_err)?;
    match (map, cfg.k) {
        (OrbitMap::Symmetric, Some(k)) if k >= 3 => Ok(OrbitMap::Spatial {
            k,
            letters: vec![SpatialLetter::H],
        }),
        (m @ OrbitMap::Spatial { .. }, Some(k)) if k != m.dim() => Err(config_err(format!(
            "map {m} lives in dimension {}, not k = {k}",
            m.dim()
        ))),
        (m, _) => Ok(m),
    }
}

pub fn cmd_orbit(cfg: &OrbitConfig) -> Result<(Vec<u8>, String), CliError> {
    let profiles = profile_params(cfg.a, cfg.w, cfg.d, cfg.angular_shape)
        .build()
        .map_err(config_err)?;
    let map = orbit_map(cfg)?;
    let start = match (&cfg.start, &map) {
        (Some(x), _) => StartPoint::Cart(CartPoint::new(x.clone())),
        (None, OrbitMap::Spatial { k, .. }) => StartPoint::Cart(CartPoint::new(vec![1.0; *k])),
        (None, _) => StartPoint::Cyl(CylPoint::new(cfg.r, cfg.theta)),
    };
    let mut trace = iterate(&map, &profiles, &start, cfg.steps).map_err(config_err)?;
    if let Some(m) = cfg.decimate {
        trace = trace.decimate(m);
    }
    let config = echo("orbit", cfg);
    let bytes = match cfg.format {
        Format::Csv => {
            let mut buf = csv_preamble(&config).into_bytes();
            trace.write_csv(&mut buf).expect("writing to memory");
            buf
        }
        Format::Json => {
            let points: Vec<Value> = trace
                .steps
                .iter()
                .zip(&trace.points)
                .map(|(s, p)| json!([s, p.r, p.theta.value()]))
                .collect();
            json_bytes(&json!({
                "config": config,
                "version": VERSION,
                "points": points,
                "gains": trace.gains,
                "classification": trace.classification,
                "rate": trace.rate,
                "entered_trap_at": trace.entered_trap_at,
                "escaped": trace.escaped,
            }))
        }
    };
    let line = format!(
        "{map}: {} rate={} entered_trap_at={} steps={}",
        trace.classification,
        trace.rate.map_or("-".into(), |r| format!("{r:?}")),
        trace.entered_trap_at.map_or("-".into(), |n| n.to_string()),
        trace.gains.len(),
    );
    Ok((bytes, line))
}

pub fn per_sequence_csv(config: &Value, rows: &[SequenceResult]) -> Vec<u8> {
    let mut s = csv_preamble(config);
    s.push_str("sequence_id,m,k_m,delta_2m\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{:?}\n",
            r.sequence_id, r.m, r.k_m, r.delta_2m
        ));
    }
    s.into_bytes()
}

pub struct IfsOutput {
    pub main: Vec<u8>,
    pub per_sequence: Vec<u8>,
    pub summary: String,
    pub outcome: Outcome,
}

pub fn cmd_ifs(cfg: &IfsRunConfig) -> Result<IfsOutput, CliError> {
    let ifs = cfg.ifs();
    let (stats, rows) = monte_carlo_detailed(&ifs).map_err(config_err)?;
    let bounds = ifs.bounds();
    let recurrence = recurrence_from_stats(&stats, &bounds);
    let config = echo("ifs", cfg);
    let per_sequence = per_sequence_csv(&config, &rows);
    let main = match cfg.format {
        Format::Json => json_bytes(&json!({
            "config": config,
            "version": VERSION,
            "bounds": bounds,
            "status": bounds.status.label(),
            "exploratory": bounds.status != Admissibility::Admissible,
            "stats": stats,
            "recurrence": recurrence,
        })),
        Format::Csv => per_sequence.clone(),
    };
    let summary = format!(
        "{} K={:?} mean_slope={:?} escape_fraction={:?} mean_k_over_m={:?} bound_violations={}",
        bounds.status.label(),
        bounds.k_bound,
        stats.mean_slope,
        stats.escape_fraction,
        stats.mean_k_over_m,
        stats.bound_violations
    );
    let outcome = if stats.bound_violations == 0 {
        Outcome::Pass
    } else {
        Outcome::Fail
    };
    Ok(IfsOutput {
        main,
        per_sequence,
        summary,
        outcome,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub a: f64,
    #[serde(rename = "K")]
    pub k_bound: f64,
    pub pair_slope_lb: f64,
    pub empirical_slope: f64,
    pub escape_fraction: f64,
    pub status: Admissibility,
}

pub fn sweep_rows(cfg: &SweepConfig) -> Result<Vec<SweepRow>, CliError> {
    if cfg.p_grid.is_empty() {
        return Err(config_err("p grid is empty"));
    }
    let a_values = |p: f64| -> Vec<f64> {
        match (&cfg.a_grid, cfg.a_factor) {
            (_, Some(f)) => vec![f / (p * (1.0 - p))],
            (Some(g), None) => g.clone(),
            (None, None) => vec![parrondo_core::profiles::DEFAULT_EXPANSION],
        }
    };
    match (&cfg.a_grid, cfg.a_factor) {
        (Some(_), Some(_)) => return Err(config_err("give either a_grid or a_factor, not both")),
        (Some(g), None) if g.is_empty() => return Err(config_err("a grid is empty")),
        _ => {}
    }
    let mut rows = Vec::new();
    for &p in &cfg.p_grid {
        for a in a_values(p) {
            let ifs = IfsConfig {
                p,
                a,
                w: cfg.w,
                d: cfg.d,
                seed: cfg.seed,
                horizon: cfg.horizon,
                n_sequences: cfg.n_sequences,
                escape_threshold: cfg.escape_threshold,
                start_r: 0.0,
                start_theta: None,
            };
            let stats = monte_carlo(&ifs).map_err(config_err)?;
            let b = theoretical_bounds(p, a);
            rows.push(SweepRow {
                p,
                a,
                k_bound: b.k_bound,
                pair_slope_lb: b.pair_slope_lb,
                empirical_slope: stats.mean_slope,
                escape_fraction: stats.escape_fraction,
                status: b.status,
            });
        }
    }
    Ok(rows)
}

pub fn cmd_sweep(cfg: &SweepConfig) -> Result<(Vec<u8>, String), CliError> {
    let rows = sweep_rows(cfg)?;
    let config = echo("sweep", cfg);
    let bytes = match cfg.format {
        Format::Csv => {
            let mut s = csv_preamble(&config);
            s.push_str("p,a,K,pair_slope_lb,empirical_slope,escape_fraction,status\n");
            for r in &rows {
                s.push_str(&format!(
                    "{:?},{:?},{:?},{:?},{:?},{:?},{}\n",
                    r.p,
                    r.a,
                    r.k_bound,
                    r.pair_slope_lb,
                    r.empirical_slope,
                    r.escape_fraction,
                    r.status.label()
                ));
            }
            s.into_bytes()
        }
        Format::Json => json_bytes(&json!({"config": config, "version": VERSION, "rows": rows})),
    };
    let admissible = rows
        .iter()
        .filter(|r| r.status == Admissibility::Admissible)
        .count();
    Ok((
        bytes,
        format!("{} rows, {admissible} admissible", rows.len()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_grid_errors() {
        let empty = SweepConfig {
            p_grid: vec![],
            ..SweepConfig::default()
        };
        assert!(matches!(sweep_rows(&empty), Err(CliError::Config(_))));
        let both = SweepConfig {
            a_grid: Some(vec![5.0]),
            a_factor: Some(1.2),
            ..SweepConfig::default()
        };
        assert!(matches!(sweep_rows(&both), Err(CliError::Config(_))));
    }

    #[test]
    fn sweep_a_factor_is_admissible() {
        let cfg = SweepConfig {
            p_grid: vec![0.2, 0.7],
            a_factor: Some(1.2),
            horizon: 20,
            n_sequences: 4,
            ..SweepConfig::default()
        };
        let rows = sweep_rows(&cfg).unwrap();
        assert!(rows.iter().all(|r| r.status == Admissibility::Admissible));
        assert!((rows[0].a - 1.2 / 0.16).abs() < 1e-12);
    }

    #[test]
    fn h_with_dimension_becomes_spatial() {
        let cfg = OrbitConfig {
            map: "h".into(),
            k: Some(4),
            ..OrbitConfig::default()
        };
        assert_eq!(orbit_map(&cfg).unwrap().to_string(), "h4");
        let clash = OrbitConfig {
            map: "j3".into(),
            k: Some(5),
            ..OrbitConfig::default()
        };
        assert!(orbit_map(&clash).is_err());
    }

    #[test]
    fn verify_reports_failures_without_erroring() {
        let cfg = VerifyConfig {
            w: 0.3,
            grid: 1000,
            ..VerifyConfig::default()
        };
        let (report, outcome) = cmd_verify(&cfg).unwrap();
        assert_eq!(outcome, Outcome::Fail);
        assert_eq!(report["passed"], false);
    }

    #[test]
    fn orbit_csv_has_preamble_and_header() {
        let cfg = OrbitConfig {
            steps: 3,
            ..OrbitConfig::default()
        };
        let (bytes, line) = cmd_orbit(&cfg).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# config: {"));
        assert!(lines.next().unwrap().starts_with("# version: "));
        assert_eq!(lines.next().unwrap(), "step,r,theta,gain");
        assert!(line.starts_with("F0: "));
    }
}
