//! Run configurations: JSON file values overlaid with command-line flags.
//!
//! A config file may be a bare object or any output file of this tool, in
//! which case its `config` member is used. Output paths are never part of
//! the echoed config.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use parrondo_core::ifs::IfsConfig;
use parrondo_core::profiles::{
    AngularShape, ProfileParams, DEFAULT_DRIFT, DEFAULT_EXPANSION, DEFAULT_HALF_WIDTH,
};

use crate::args::{CommonArgs, Format, IfsArgs, OrbitArgs, SweepArgs, VerifyArgs};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub a: f64,
    pub w: f64,
    pub d: f64,
    pub angular_shape: AngularShape,
    /// Dimension; the cone condition is checked when `k ≥ 3`.
    pub k: usize,
    pub grid: usize,
    pub cone_samples: usize,
    pub format: Format,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            a: DEFAULT_EXPANSION,
            w: DEFAULT_HALF_WIDTH,
            d: DEFAULT_DRIFT,
            angular_shape: AngularShape::default(),
            k: 2,
            grid: 100_000,
            cone_samples: 10_000,
            format: Format::Json,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitConfig {
    pub a: f64,
    pub w: f64,
    pub d: f64,
    pub angular_shape: AngularShape,
    pub map: String,
    /// Promotes `h`/`j` without a dimension to `ℝᵏ` when `k ≥ 3`.
    pub k: Option<usize>,
    pub steps: usize,
    pub r: f64,
    pub theta: f64,
    /// Cartesian start; overrides `r`, `theta`.
    pub start: Option<Vec<f64>>,
    pub decimate: Option<usize>,
    pub format: Format,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig {
            a: DEFAULT_EXPANSION,
            w: DEFAULT_HALF_WIDTH,
            d: DEFAULT_DRIFT,
            angular_shape: AngularShape::default(),
            map: "f0".into(),
            k: None,
            steps: 1000,
            r: 0.0,
            theta: 0.5,
            start: None,
            decimate: None,
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IfsRunConfig {
    pub p: f64,
    pub a: f64,
    pub w: f64,
    pub d: f64,
    pub seed: u64,
    pub horizon: usize,
    pub n_sequences: usize,
    pub escape_threshold: f64,
    pub start_r: f64,
    pub start_theta: Option<f64>,
    pub format: Format,
}

impl Default for IfsRunConfig {
    fn default() -> Self {
        let c = IfsConfig::default();
        IfsRunConfig {
            p: c.p,
            a: c.a,
            w: c.w,
            d: c.d,
            seed: c.seed,
            horizon: c.horizon,
            n_sequences: c.n_sequences,
            escape_threshold: c.escape_threshold,
            start_r: c.start_r,
            start_theta: c.start_theta,
            format: Format::Json,
        }
    }
}

impl IfsRunConfig {
    pub fn ifs(&self) -> IfsConfig {
        IfsConfig {
            p: self.p,
            a: self.a,
            w: self.w,
            d: self.d,
            seed: self.seed,
            horizon: self.horizon,
            n_sequences: self.n_sequences,
            escape_threshold: self.escape_threshold,
            start_r: self.start_r,
            start_theta: self.start_theta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub p_grid: Vec<f64>,
    pub a_grid: Option<Vec<f64>>,
    pub a_factor: Option<f64>,
    pub w: f64,
    pub d: f64,
    pub seed: u64,
    pub horizon: usize,
    pub n_sequences: usize,
    pub escape_threshold: f64,
    pub format: Format,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            p_grid: (1..=9).map(|i| i as f64 / 10.0).collect(),
            a_grid: None,
            a_factor: None,
            w: DEFAULT_HALF_WIDTH,
            d: DEFAULT_DRIFT,
            seed: 1,
            horizon: 2000,
            n_sequences: 200,
            escape_threshold: parrondo_core::ifs::DEFAULT_ESCAPE_THRESHOLD,
            format: Format::Csv,
        }
    }
}

pub fn profile_params(a: f64, w: f64, d: f64, angular_shape: AngularShape) -> ProfileParams {
    ProfileParams {
        a,
        w,
        d,
        angular_shape,
        ..ProfileParams::default()
    }
}

fn load_file(path: &Path) -> anyhow::Result<Map<String, Value>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let obj = match value {
        Value::Object(mut o) => match o.remove("config") {
            Some(Value::Object(inner)) => inner,
            Some(_) => bail!("`config` member of {} is not an object", path.display()),
            None => o,
        },
        _ => bail!("{} does not hold a JSON object", path.display()),
    };
    Ok(obj)
}

struct Overlay(Map<String, Value>);

impl Overlay {
    fn set<T: Serialize>(&mut self, key: &str, v: &Option<T>) {
        if let Some(v) = v {
            self.0.insert(
                key.to_string(),
                serde_json::to_value(v).expect("flag values serialize"),
            );
        }
    }
}

/// File values, then flags, deserialized into `T`. `steps_key` names the
/// field that `--steps` sets.
fn merge<T: DeserializeOwned>(
    common: &CommonArgs,
    steps_key: &str,
    extra: impl FnOnce(&mut Overlay),
) -> Result<T, CliError> {
    let mut base = match &common.config {
        Some(path) => load_file(path).map_err(CliError::Config)?,
        None => Map::new(),
    };
    base.remove("command");
    let mut o = Overlay(base);
    o.set("a", &common.a);
    o.set("w", &common.w);
    o.set("d", &common.d);
    o.set("k", &common.k);
    o.set("p", &common.p);
    o.set("seed", &common.seed);
    o.set(steps_key, &common.steps);
    o.set("n_sequences", &common.sequences);
    o.set("format", &common.format);
    extra(&mut o);
    serde_json::from_value(Value::Object(o.0))
        .map_err(|e| CliError::Config(anyhow::anyhow!("invalid configuration: {e}")))
}

pub fn verify_config(args: &VerifyArgs) -> Result<VerifyConfig, CliError> {
    merge(&args.common, "steps", |o| {
        o.set("grid", &args.grid);
        o.set("cone_samples", &args.cone_samples);
    })
}

pub fn orbit_config(args: &OrbitArgs) -> Result<OrbitConfig, CliError> {
    merge(&args.common, "steps", |o| {
        o.set("map", &args.map);
        o.set("r", &args.r);
        o.set("theta", &args.theta);
        o.set("start", &args.start);
        o.set("decimate", &args.decimate);
    })
}

pub fn ifs_config(args: &IfsArgs) -> Result<IfsRunConfig, CliError> {
    merge(&args.common, "horizon", |o| {
        o.set("escape_threshold", &args.threshold);
        o.set("start_r", &args.start_r);
        o.set("start_theta", &args.start_theta);
    })
}

pub fn sweep_config(args: &SweepArgs) -> Result<SweepConfig, CliError> {
    merge(&args.common, "horizon", |o| {
        // A single `--a`/`--p` is a one-point grid.
        for (one, grid) in [("a", "a_grid"), ("p", "p_grid")] {
            if let Some(v) = o.0.remove(one) {
                o.0.insert(grid.to_string(), Value::Array(vec![v]));
            }
        }
        o.set("p_grid", &args.p_grid);
        o.set("a_grid", &args.a_grid);
        o.set("a_factor", &args.a_factor);
        o.set("escape_threshold", &args.threshold);
    })
}
