//! Orbit iteration, classification by trailing mean gain, and trap entry.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circle::{Angle, CircleInterval};
use crate::highdim_maps::{apply_h, h_k_ray, j_k_ray, RayPoint};
use crate::planar_maps::{apply_letter, from_cartesian, CartPoint, CylPoint, MapError, MapWord};
use crate::profiles::Profiles;

pub const DEFAULT_WINDOW: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-3;
pub const MAX_STEPS: usize = 1_000_000;
/// Iteration stops early once `|r|` exceeds this.
pub const ESCAPE_R: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("window {window} needs a trace with more than {window} points, got {len}")]
    WindowTooLarge { window: usize, len: usize },
    #[error("n_steps must be in 1..={MAX_STEPS}, got {0}")]
    BadStepCount(usize),
    #[error("start point has dimension {got}, map needs {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("unknown map `{0}`")]
    UnknownMap(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Classification {
    Attracted,
    Repelled,
    Undecided,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Attracted => "ATTRACTED",
            Classification::Repelled => "REPELLED",
            Classification::Undecided => "UNDECIDED",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpatialLetter {
    H,
    J,
}

/// A map to iterate. Words are applied one letter per step, cyclically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum OrbitMap {
    Planar(MapWord),
    /// The symmetrized planar map `h`.
    Symmetric,
    /// `h_k` / `j_k` letters on `ℝᵏ`, `k ≥ 3`.
    Spatial {
        k: usize,
        letters: Vec<SpatialLetter>,
    },
}

impl OrbitMap {
    pub fn dim(&self) -> usize {
        match self {
            OrbitMap::Spatial { k, .. } => *k,
            _ => 2,
        }
    }

    /// Sector the orbit ends up in, when the map has a single attracting ray.
    pub fn trap_interval(&self, profiles: &Profiles) -> Option<CircleInterval> {
        let j = profiles.radial.trapping_interval();
        match self {
            OrbitMap::Planar(word) => {
                let first = word.letters()[0];
                word.letters()
                    .iter()
                    .all(|&l| l == first)
                    .then(|| j.translate(first.shift()))
            }
            OrbitMap::Symmetric => CircleInterval::new(Angle::HALF, j.half_width() / 2.0).ok(),
            OrbitMap::Spatial { letters, .. } => {
                let first = letters[0];
                letters
                    .iter()
                    .all(|&l| l == first)
                    .then(|| CircleInterval::new(Angle::HALF, j.half_width() / 2.0).ok())
                    .flatten()
            }
        }
    }
}

impl fmt::Display for OrbitMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrbitMap::Planar(w) => write!(f, "{w}"),
            OrbitMap::Symmetric => f.write_str("h"),
            OrbitMap::Spatial { k, letters } => {
                let parts: Vec<String> = letters
                    .iter()
                    .map(|l| match l {
                        SpatialLetter::H => format!("h{k}"),
                        SpatialLetter::J => format!("j{k}"),
                    })
                    .collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

/// Parses `h`, comma-separated `h<k>`/`j<k>` tokens (`h3,j3`), or a planar
/// word accepted by [`MapWord`] (`f0`, `F0,F1`, `01`).
impl FromStr for OrbitMap {
    type Err = DynamicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("h") {
            return Ok(OrbitMap::Symmetric);
        }
        let tokens: Vec<&str> = t
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|x| !x.is_empty())
            .collect();
        let spatial = !tokens.is_empty()
            && tokens.iter().all(|x| {
                x.len() > 1 && matches!(x.as_bytes()[0].to_ascii_lowercase(), b'h' | b'j')
            });
        if spatial {
            let mut k = None;
            let mut letters = Vec::new();
            for tok in &tokens {
                let dim: usize = tok[1..]
                    .parse()
                    .map_err(|_| DynamicsError::UnknownMap(s.to_string()))?;
                if dim < 3 || k.is_some_and(|k| k != dim) {
                    return Err(DynamicsError::UnknownMap(s.to_string()));
                }
                k = Some(dim);
                letters.push(if tok.as_bytes()[0].eq_ignore_ascii_case(&b'h') {
                    SpatialLetter::H
                } else {
                    SpatialLetter::J
                });
            }
            return Ok(OrbitMap::Spatial {
                k: k.unwrap(),
                letters,
            });
        }
        Ok(OrbitMap::Planar(t.parse()?))
    }
}

impl From<OrbitMap> for String {
    fn from(m: OrbitMap) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for OrbitMap {
    type Error = DynamicsError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StartPoint {
    Cyl(CylPoint),
    Cart(CartPoint),
}

/// An orbit. For planar maps `points` are cylinder points. For `ℝᵏ` maps
/// `points[i].theta` is the polar angle (in `[0, 1/2]`) measured in the
/// frame of the word's first letter, i.e. from the `x_k` axis for `h_k`
/// and from the `x₁` axis (via `τ_k`) for `j_k`; the full unit directions
/// are kept in `directions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrace {
    /// Step index of each stored point (consecutive unless decimated).
    pub steps: Vec<usize>,
    pub points: Vec<CylPoint>,
    pub directions: Option<Vec<Vec<f64>>>,
    /// `gains[i] = r_{i+1} − r_i`, never decimated.
    pub gains: Vec<f64>,
    pub entered_trap_at: Option<usize>,
    pub classification: Classification,
    pub rate: Option<f64>,
    /// True when iteration stopped at `|r| > ESCAPE_R` before `n_steps`.
    pub escaped: bool,
}

impl OrbitTrace {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Keeps every `m`-th point, the last point and every point up to trap
    /// entry (if any).
    pub fn decimate(&self, m: usize) -> OrbitTrace {
        let m = m.max(1);
        let cut = self.entered_trap_at.unwrap_or(0);
        let last = self.steps.last().copied();
        let keep: Vec<usize> = (0..self.points.len())
            .filter(|&i| {
                let s = self.steps[i];
                s <= cut || s.is_multiple_of(m) || Some(s) == last
            })
            .collect();
        OrbitTrace {
            steps: keep.iter().map(|&i| self.steps[i]).collect(),
            points: keep.iter().map(|&i| self.points[i]).collect(),
            directions: self
                .directions
                .as_ref()
                .map(|d| keep.iter().map(|&i| d[i].clone()).collect()),
            ..self.clone()
        }
    }

    /// CSV with header `step,r,theta,gain`; `gain` is the step leaving the
    /// point and is empty for the final point.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "step,r,theta,gain")?;
        for (s, p) in self.steps.iter().zip(&self.points) {
            match self.gains.get(*s) {
                Some(g) => writeln!(out, "{},{:?},{:?},{:?}", s, p.r, p.theta.value(), g)?,
                None => writeln!(out, "{},{:?},{:?},", s, p.r, p.theta.value())?,
            }
        }
        Ok(())
    }
}

enum State {
    Plane(CylPoint),
    Space(RayPoint),
}

fn space_polar(dir: &[f64], first: SpatialLetter) -> f64 {
    let ray = RayPoint {
        r: 0.0,
        dir: match first {
            SpatialLetter::H => dir.to_vec(),
            SpatialLetter::J => {
                let k = dir.len();
                let mut y = dir.to_vec();
                y[0] = dir[k - 1];
                y[k - 1] = -dir[0];
                y
            }
        },
    };
    ray.polar()
}

pub fn iterate(
    map: &OrbitMap,
    profiles: &Profiles,
    start: &StartPoint,
    n_steps: usize,
) -> Result<OrbitTrace, DynamicsError> {
    if n_steps == 0 || n_steps > MAX_STEPS {
        return Err(DynamicsError::BadStepCount(n_steps));
    }
    let mut state = match (map, start) {
        (OrbitMap::Spatial { k, .. }, StartPoint::Cart(x)) => {
            if x.dim() != *k {
                return Err(DynamicsError::DimensionMismatch {
                    expected: *k,
                    got: x.dim(),
                });
            }
            State::Space(RayPoint::from_cartesian(x)?)
        }
        (OrbitMap::Spatial { k, .. }, StartPoint::Cyl(_)) => {
            return Err(DynamicsError::DimensionMismatch {
                expected: *k,
                got: 2,
            })
        }
        (_, StartPoint::Cyl(p)) => State::Plane(*p),
        (_, StartPoint::Cart(x)) => {
            if x.dim() != 2 {
                return Err(DynamicsError::DimensionMismatch {
                    expected: 2,
                    got: x.dim(),
                });
            }
            State::Plane(from_cartesian(x)?)
        }
    };

    let first_spatial = match map {
        OrbitMap::Spatial { letters, .. } => Some(letters[0]),
        _ => None,
    };
    let record = |s: &State| -> (CylPoint, Option<Vec<f64>>) {
        match s {
            State::Plane(p) => (*p, None),
            State::Space(x) => (
                CylPoint {
                    r: x.r,
                    theta: Angle::new(space_polar(&x.dir, first_spatial.unwrap())),
                },
                Some(x.dir.clone()),
            ),
        }
    };

    let mut points = Vec::with_capacity(n_steps + 1);
    let mut dirs = Vec::new();
    let (p0, d0) = record(&state);
    points.push(p0);
    dirs.extend(d0);
    let mut gains = Vec::with_capacity(n_steps);
    let mut escaped = false;

    // Each step maps the point with r = 0, so the gain is Δr exactly.
    for i in 0..n_steps {
        let gain;
        state = match (&state, map) {
            (State::Plane(p), OrbitMap::Planar(w)) => {
                let letters = w.letters();
                let q = apply_letter(
                    profiles,
                    letters[i % letters.len()],
                    CylPoint { r: 0.0, ..*p },
                );
                gain = q.r;
                State::Plane(CylPoint { r: p.r + gain, ..q })
            }
            (State::Plane(p), OrbitMap::Symmetric) => {
                let q = apply_h(profiles, CylPoint { r: 0.0, ..*p });
                gain = q.r;
                State::Plane(CylPoint { r: p.r + gain, ..q })
            }
            (State::Space(x), OrbitMap::Spatial { letters, .. }) => {
                let unit = RayPoint {
                    r: 0.0,
                    dir: x.dir.clone(),
                };
                let q = match letters[i % letters.len()] {
                    SpatialLetter::H => h_k_ray(profiles, &unit),
                    SpatialLetter::J => j_k_ray(profiles, &unit),
                };
                gain = q.r;
                State::Space(RayPoint {
                    r: x.r + gain,
                    dir: q.dir,
                })
            }
            _ => unreachable!(),
        };
        let (p, d) = record(&state);
        gains.push(gain);
        points.push(p);
        dirs.extend(d);
        if p.r.abs() > ESCAPE_R {
            escaped = i + 1 < n_steps;
            break;
        }
    }

    let mut trace = OrbitTrace {
        steps: (0..points.len()).collect(),
        points,
        directions: first_spatial.map(|_| dirs),
        gains,
        entered_trap_at: None,
        classification: Classification::Undecided,
        rate: None,
        escaped,
    };
    if let Some(j) = map.trap_interval(profiles) {
        trace.entered_trap_at = detect_trap_entry(&trace, &j);
    }
    let window = DEFAULT_WINDOW.min(trace.gains.len());
    let (c, rate) = classify_orbit(&trace, window, DEFAULT_TOL)?;
    trace.classification = c;
    trace.rate = Some(rate);
    Ok(trace)
}

/// Trailing-window mean gain against `±tol`.
pub fn classify_orbit(
    trace: &OrbitTrace,
    window: usize,
    tol: f64,
) -> Result<(Classification, f64), DynamicsError> {
    let n = trace.gains.len();
    if window == 0 || window > n {
        return Err(DynamicsError::WindowTooLarge { window, len: n + 1 });
    }
    let rate = trace.gains[n - window..].iter().sum::<f64>() / window as f64;
    let c = if rate < -tol {
        Classification::Attracted
    } else if rate > tol {
        Classification::Repelled
    } else {
        Classification::Undecided
    };
    Ok((c, rate))
}

/// Least step `n₀` with every recorded `θ_m ∈ J` for `m ≥ n₀`.
pub fn detect_trap_entry(trace: &OrbitTrace, j: &CircleInterval) -> Option<usize> {
    let mut entry = None;
    for (s, p) in trace.steps.iter().zip(&trace.points).rev() {
        if j.contains(p.theta) {
            entry = Some(*s);
        } else {
            break;
        }
    }
    entry
}
