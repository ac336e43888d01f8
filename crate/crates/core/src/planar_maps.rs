//! The planar maps `f₀`, `f₁ = τ∘f₀∘τ`, their compositions and inverses.
//!
//! Points of `ℝ² ∖ {0}` are handled on the cylinder as [`CylPoint`]s
//! `(r, θ)` with `r = ln ρ`; the origin only exists in Cartesian form.

use std::f64::consts::{FRAC_1_PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circle::{
    bisect_lift_inverse, check_monotone_lift, circle_dist, Angle, CircleError,
    DEFAULT_INVERSE_BUDGET,
};
use crate::profiles::Profiles;

/// Allowed gap between the certified lower bound and the reported minimum.
pub const CERTIFICATE_SLACK: f64 = 1e-6;
const MAX_REFINE_DEPTH: u32 = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("the origin has no cylinder coordinates")]
    OriginNotRepresentable,
    #[error("map word must contain at least one letter")]
    EmptyWord,
    #[error("unknown map letter `{0}`")]
    UnknownLetter(String),
}

/// A point of the cylinder `ℝ × ℝ/ℤ`: log-radius and angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylPoint {
    pub r: f64,
    pub theta: Angle,
}

impl CylPoint {
    pub fn new(r: f64, theta: f64) -> Self {
        CylPoint {
            r,
            theta: Angle::new(theta),
        }
    }
}

/// A point of `ℝᵏ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartPoint {
    pub coords: Vec<f64>,
}

impl CartPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        CartPoint { coords }
    }

    pub fn origin(k: usize) -> Self {
        CartPoint {
            coords: vec![0.0; k],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm(&self) -> f64 {
        // Scaled to survive coordinates near the ends of the f64 range.
        let scale = self.coords.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if scale == 0.0 || !scale.is_finite() {
            return scale;
        }
        scale
            * self
                .coords
                .iter()
                .map(|c| (c / scale).powi(2))
                .sum::<f64>()
                .sqrt()
    }

    pub fn is_origin(&self) -> bool {
        self.coords.iter().all(|&c| c == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Letter {
    F0,
    F1,
}

impl Letter {
    /// Angular offset conjugating `f₀` into this map.
    #[inline]
    pub fn shift(self) -> f64 {
        match self {
            Letter::F0 => 0.0,
            Letter::F1 => 0.5,
        }
    }

    /// The angle of this map's attracting ray.
    pub fn attractor(self) -> Angle {
        Angle::new(self.shift())
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Letter::F0 => "F0",
            Letter::F1 => "F1",
        })
    }
}

impl FromStr for Letter {
    type Err = MapError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "F0" | "f0" | "0" => Ok(Letter::F0),
            "F1" | "f1" | "1" => Ok(Letter::F1),
            other => Err(MapError::UnknownLetter(other.to_string())),
        }
    }
}

/// A finite composition of `f₀` and `f₁`.
///
/// `letters[0]` is applied first: the word `[a₀, a₁, …, aₙ]` denotes
/// `f_{aₙ} ∘ … ∘ f_{a₁} ∘ f_{a₀}`. So `[F0, F1]` is `g ∘ f`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Letter>", into = "Vec<Letter>")]
pub struct MapWord(Vec<Letter>);

impl MapWord {
    pub fn new(letters: Vec<Letter>) -> Result<Self, MapError> {
        if letters.is_empty() {
            return Err(MapError::EmptyWord);
        }
        Ok(MapWord(letters))
    }

    pub fn single(letter: Letter) -> Self {
        MapWord(vec![letter])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl TryFrom<Vec<Letter>> for MapWord {
    type Error = MapError;

    fn try_from(v: Vec<Letter>) -> Result<Self, Self::Error> {
        MapWord::new(v)
    }
}

impl From<MapWord> for Vec<Letter> {
    fn from(w: MapWord) -> Self {
        w.0
    }
}

impl fmt::Display for MapWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Parses `"F0,F1"`, `"f0 f1"` or the digit form `"01"`.
impl FromStr for MapWord {
    type Err = MapError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let letters = if !s.is_empty() && s.chars().all(|c| c == '0' || c == '1') {
            s.chars()
                .map(|c| if c == '0' { Letter::F0 } else { Letter::F1 })
                .collect()
        } else {
            s.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(Letter::from_str)
                .collect::<Result<Vec<_>, _>>()?
        };
        MapWord::new(letters)
    }
}

pub fn apply_f0(profiles: &Profiles, p: CylPoint) -> CylPoint {
    CylPoint {
        r: p.r + profiles.radial.eval(p.theta),
        theta: p.theta.shift(profiles.angular.eval(p.theta)),
    }
}

/// The half-turn `τ(r, θ) = (r, θ + 1/2)`.
pub fn apply_tau(p: CylPoint) -> CylPoint {
    CylPoint {
        r: p.r,
        theta: p.theta.antipode(),
    }
}

pub fn apply_f1(profiles: &Profiles, p: CylPoint) -> CylPoint {
    apply_tau(apply_f0(profiles, apply_tau(p)))
}

pub fn apply_letter(profiles: &Profiles, letter: Letter, p: CylPoint) -> CylPoint {
    match letter {
        Letter::F0 => apply_f0(profiles, p),
        Letter::F1 => apply_f1(profiles, p),
    }
}

pub fn apply_word(word: &MapWord, profiles: &Profiles, p: CylPoint) -> CylPoint {
    word.letters()
        .iter()
        .fold(p, |q, &l| apply_letter(profiles, l, q))
}

/// Inverse of `f₀`: the angle by bisection on the lift, then `r = q.r − Δr(θ)`.
pub fn inverse_f0(profiles: &Profiles, q: CylPoint, tol: f64) -> Result<CylPoint, CircleError> {
    let ap = &profiles.angular;
    let lift = |x: f64| ap.lift(x);
    if ap.d() >= FRAC_1_PI {
        check_monotone_lift(&lift, &ap.knots())?;
    }
    let theta = bisect_lift_inverse(&lift, q.theta, tol, DEFAULT_INVERSE_BUDGET)?;
    Ok(CylPoint {
        r: q.r - profiles.radial.eval(theta),
        theta,
    })
}

pub fn inverse_f1(profiles: &Profiles, q: CylPoint, tol: f64) -> Result<CylPoint, CircleError> {
    inverse_f0(profiles, apply_tau(q), tol).map(apply_tau)
}

/// `(ρ cos 2πθ, ρ sin 2πθ)` with `ρ = eʳ`.
pub fn to_cartesian(p: CylPoint) -> CartPoint {
    let rho = p.r.exp();
    let (s, c) = p.theta.to_radians().sin_cos();
    CartPoint::new(vec![rho * c, rho * s])
}

pub fn from_cartesian(x: &CartPoint) -> Result<CylPoint, MapError> {
    debug_assert_eq!(x.dim(), 2);
    let (u, v) = (x.coords[0], x.coords[1]);
    if u == 0.0 && v == 0.0 {
        return Err(MapError::OriginNotRepresentable);
    }
    Ok(CylPoint {
        r: u.hypot(v).ln(),
        theta: Angle::new(v.atan2(u) / TAU),
    })
}

/// `f₀` on the plane, extended by `f₀(0) = 0`.
pub fn apply_f0_cartesian(profiles: &Profiles, x: &CartPoint) -> CartPoint {
    match from_cartesian(x) {
        Ok(p) => to_cartesian(apply_f0(profiles, p)),
        Err(_) => CartPoint::origin(2),
    }
}

pub fn apply_f1_cartesian(profiles: &Profiles, x: &CartPoint) -> CartPoint {
    match from_cartesian(x) {
        Ok(p) => to_cartesian(apply_f1(profiles, p)),
        Err(_) => CartPoint::origin(2),
    }
}

/// Total radial increment `G(θ)` of `word` started at angle `theta` (a lift
/// value; any real is accepted). Independent of `r`.
pub fn word_gain(word: &MapWord, profiles: &Profiles, theta: f64) -> f64 {
    let mut t = theta;
    let mut gain = 0.0;
    for &l in word.letters() {
        let a = Angle::new(t + l.shift());
        gain += profiles.radial.eval(a);
        t += profiles.angular.eval(a);
    }
    gain
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainCertificate {
    /// Smallest evaluated value of `G`.
    pub min_gain: f64,
    pub argmin: Angle,
    /// Whether `G ≥ min_gain − CERTIFICATE_SLACK` was proved on the whole circle.
    pub certified: bool,
    /// Certified lower bound of `G` over the circle.
    pub lower_bound: f64,
    pub evaluations: usize,
}

/// Local Lipschitz constant of `G` on the arc `[lo, hi]`.
///
/// The arc is pushed through the angular steps (images of arcs are arcs as
/// the lifts are increasing). A step contributes `a/w` only when its arc
/// meets the closed interval where its `Δr` is non-constant, times the bound
/// `(1 + πd)^k` on the derivative of the first `k` angular steps.
fn arc_lipschitz(word: &MapWord, profiles: &Profiles, lo: f64, hi: f64) -> f64 {
    let (rp, ap) = (&profiles.radial, &profiles.angular);
    let slope = 1.0 + ap.lipschitz();
    let (mut lo, mut hi) = (lo, hi);
    let mut growth = 1.0;
    let mut lip = 0.0;
    for &l in word.letters() {
        let half = 0.5 * (hi - lo);
        let mid = Angle::new(0.5 * (lo + hi) + l.shift());
        if half >= 0.5 || circle_dist(mid, Angle::ZERO) <= rp.w() + half {
            lip += rp.lipschitz() * growth;
        }
        lo += ap.eval(Angle::new(lo + l.shift()));
        hi += ap.eval(Angle::new(hi + l.shift()));
        growth *= slope;
    }
    lip
}

/// Minimum over the circle of the word's radial gain `G(θ)`, with a
/// certificate.
///
/// `G` is sampled on `grid_n` equally spaced angles. Every grid cell gets the
/// Lipschitz lower bound `(G(lo) + G(hi) − L·(hi − lo))/2` with `L` from
/// [`arc_lipschitz`]; cells whose bound falls more than [`CERTIFICATE_SLACK`]
/// below the running minimum are bisected until it does not.
pub fn composition_radial_gain(
    word: &MapWord,
    profiles: &Profiles,
    grid_n: usize,
) -> GainCertificate {
    assert!(grid_n >= 2, "grid_n must be at least 2");
    let h = 1.0 / grid_n as f64;
    let g = |t: f64| word_gain(word, profiles, t);

    let values: Vec<f64> = (0..grid_n).map(|i| g(i as f64 * h)).collect();
    let mut evaluations = grid_n;
    let (mut min_gain, mut argmin) =
        values
            .iter()
            .enumerate()
            .fold((f64::INFINITY, 0.0), |acc, (i, &v)| {
                if v < acc.0 {
                    (v, i as f64 * h)
                } else {
                    acc
                }
            });

    // Certificates rely on the angular lifts being increasing.
    let mut certified = profiles.angular.d() < FRAC_1_PI;
    let mut lower_bound = f64::INFINITY;
    let mut stack: Vec<(f64, f64, f64, f64, u32)> = (0..grid_n)
        .map(|i| {
            let lo = i as f64 * h;
            let hi = if i + 1 == grid_n {
                1.0
            } else {
                (i + 1) as f64 * h
            };
            (lo, hi, values[i], values[(i + 1) % grid_n], 0)
        })
        .collect();

    while let Some((lo, hi, glo, ghi, depth)) = stack.pop() {
        let lip = arc_lipschitz(word, profiles, lo, hi);
        let lb = 0.5 * (glo + ghi - lip * (hi - lo));
        if lb >= min_gain - CERTIFICATE_SLACK {
            lower_bound = lower_bound.min(lb);
            continue;
        }
        if depth >= MAX_REFINE_DEPTH {
            certified = false;
            lower_bound = lower_bound.min(lb);
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        evaluations += 1;
        if gm < min_gain {
            min_gain = gm;
            argmin = mid;
        }
        stack.push((lo, mid, glo, gm, depth + 1));
        stack.push((mid, hi, gm, ghi, depth + 1));
    }

    GainCertificate {
        min_gain,
        argmin: Angle::new(argmin),
        certified: certified && lower_bound >= min_gain - CERTIFICATE_SLACK,
        lower_bound,
        evaluations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Semistable {
    F,
    G,
    FoG,
}

/// The one-dimensional pair whose composition is semistable at 0:
/// `f(x) = −2x | −x/3`, `g(x) = −x/3 | −2x`, `f∘g(x) = x/9 | 4x`
/// (branches for `x ≤ 0 | x ≥ 0`).
pub fn semistable_1d(x: f64, which: Semistable) -> f64 {
    let neg = x <= 0.0;
    match (which, neg) {
        (Semistable::F, true) => -2.0 * x,
        (Semistable::F, false) => -x / 3.0,
        (Semistable::G, true) => -x / 3.0,
        (Semistable::G, false) => -2.0 * x,
        (Semistable::FoG, true) => x / 9.0,
        (Semistable::FoG, false) => 4.0 * x,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cgm18 {
    F,
    G,
}

/// The quadratic/cubic planar pair with rotation-type dynamics at the origin,
/// kept as a contrast demo. Orbits only; no stability claims are computed.
pub fn cgm18_step(x: f64, y: f64, which: Cgm18) -> (f64, f64) {
    match which {
        Cgm18::F => (
            -y + 2.0 * x * x + 6.0 * x * y,
            x - 3.0 * x * x + 2.0 * x * y + 3.0 * y * y,
        ),
        Cgm18::G => {
            let s3 = 3.0_f64.sqrt();
            let r2 = x * x + y * y;
            (
                x / 2.0 - s3 * y / 2.0 - x * r2,
                s3 * x / 2.0 + y / 2.0 - y * r2,
            )
        }
    }
}

/// `e^{a−1}`, the largest radial factor of `f₀` near the origin.
pub fn max_radial_factor(profiles: &Profiles) -> f64 {
    profiles.radial.outside_gain().exp()
}
