//! Angular profiles `Δr(θ)` and `Δθ(θ)` of the base map `f₀`.
//!
//! `f₀` acts on the cylinder `ℝ × ℝ/ℤ` of (log-radius, angle) by
//! `(r, θ) ↦ (r + Δr(θ), θ + Δθ(θ))`. Both increments depend on the angle only.
//! The radial increment is `a − 1` off the interval `I = (−w, w)` and dips to
//! `−1` on the attracting ray `θ = 0̄`; the angular drift vanishes only on that
//! ray and is capped by the gap between `I` and `I + 1/2`.

use std::f64::consts::{FRAC_1_PI, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circle::{check_monotone_lift, circle_dist, Angle, CircleError, CircleInterval};

pub const DEFAULT_EXPANSION: f64 = 5.0;
pub const DEFAULT_HALF_WIDTH: f64 = 0.125;
pub const DEFAULT_DRIFT: f64 = 0.25;

/// Grid used by [`validate_profiles`] in addition to the profile knots.
const VALIDATION_GRID: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("expansion a = {0} must exceed 4")]
    BadExpansion(f64),
    #[error("half-width w = {0} must lie in (0, 1/4)")]
    BadWidth(f64),
    #[error("drift amplitude d = {0} must be positive and finite")]
    BadDrift(f64),
    #[error("drift amplitude d = {d} exceeds dist(I, I + 1/2) = {cap}")]
    DriftTooLarge { d: f64, cap: f64 },
    #[error("drift amplitude d = {0} ≥ 1/π: θ ↦ θ + Δθ(θ) is not a homeomorphism")]
    NotHomeomorphism(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialShape {
    /// Tent `−1 + a·|θ|/w` on `I`, constant `a − 1` outside.
    #[default]
    PiecewiseLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngularShape {
    /// `d·sin(π·|θ|)`, with `|θ|` the circle distance to `0̄`.
    ///
    /// The drift vanishes linearly at `0̄`, so the attracting ray is reached
    /// at a geometric rate `1 − πd`.
    #[default]
    SineArc,
    /// `d·(1 − cos 2πθ)/2`. Tangent to zero at `0̄`, so orbits approach the
    /// attracting ray only like `1/n`.
    RaisedCosine,
}

/// Radial increment `Δr(θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialProfile {
    a: f64,
    w: f64,
    shape: RadialShape,
}

impl RadialProfile {
    pub fn new(a: f64, w: f64) -> Result<Self, ProfileError> {
        if !(a > 4.0 && a.is_finite()) {
            return Err(ProfileError::BadExpansion(a));
        }
        if !(w > 0.0 && w < 0.25) {
            return Err(ProfileError::BadWidth(w));
        }
        Ok(Self::unchecked(a, w))
    }

    /// Builds the profile without range checks, for validation reports and
    /// exploratory runs outside the admissible parameter set.
    pub fn unchecked(a: f64, w: f64) -> Self {
        RadialProfile {
            a,
            w,
            shape: RadialShape::PiecewiseLinear,
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn shape(&self) -> RadialShape {
        self.shape
    }

    /// `a − 1`, the increment off `I`.
    pub fn outside_gain(&self) -> f64 {
        self.a - 1.0
    }

    #[inline]
    pub fn eval(&self, theta: Angle) -> f64 {
        self.eval_at_distance(circle_dist(theta, Angle::ZERO))
    }

    /// `Δr` as a function of the circle distance to `0̄`.
    #[inline]
    pub fn eval_at_distance(&self, dist: f64) -> f64 {
        match self.shape {
            RadialShape::PiecewiseLinear => {
                if dist >= self.w {
                    self.a - 1.0
                } else {
                    -1.0 + self.a * dist / self.w
                }
            }
        }
    }

    /// The interval `I` off which `Δr = a − 1`.
    pub fn expansion_free_interval(&self) -> Result<CircleInterval, CircleError> {
        CircleInterval::centered_at_zero(self.w)
    }

    /// `J`: the open set where `Δr < 0`, centered at `0̄` with half-width `w/a`.
    pub fn trapping_interval(&self) -> CircleInterval {
        CircleInterval::centered_at_zero(self.w / self.a)
            .expect("w/a lies in (0, 1/2) for a valid profile")
    }

    /// Lipschitz constant of `Δr` in turns.
    pub fn lipschitz(&self) -> f64 {
        self.a / self.w
    }

    /// Kinks of `Δr`.
    pub fn knots(&self) -> Vec<f64> {
        let j = self.w / self.a;
        vec![0.0, j, -j, self.w, -self.w]
    }
}

/// Angular increment `Δθ(θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularProfile {
    d: f64,
    w_ref: f64,
    shape: AngularShape,
}

impl AngularProfile {
    pub fn new(d: f64, w_ref: f64) -> Result<Self, ProfileError> {
        Self::with_shape(d, w_ref, AngularShape::default())
    }

    pub fn with_shape(d: f64, w_ref: f64, shape: AngularShape) -> Result<Self, ProfileError> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(ProfileError::BadDrift(d));
        }
        if d >= FRAC_1_PI {
            return Err(ProfileError::NotHomeomorphism(d));
        }
        let cap = 0.5 - 2.0 * w_ref;
        if d > cap {
            return Err(ProfileError::DriftTooLarge { d, cap });
        }
        Ok(Self::unchecked(d, w_ref, shape))
    }

    pub fn unchecked(d: f64, w_ref: f64, shape: AngularShape) -> Self {
        AngularProfile { d, w_ref, shape }
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn w_ref(&self) -> f64 {
        self.w_ref
    }

    pub fn shape(&self) -> AngularShape {
        self.shape
    }

    #[inline]
    pub fn eval(&self, theta: Angle) -> f64 {
        self.eval_at_distance(circle_dist(theta, Angle::ZERO))
    }

    /// Both shapes are even, so `Δθ` only depends on the distance to `0̄`.
    #[inline]
    pub fn eval_at_distance(&self, dist: f64) -> f64 {
        match self.shape {
            AngularShape::SineArc => self.d * (PI * dist).sin(),
            AngularShape::RaisedCosine => self.d * (1.0 - (2.0 * PI * dist).cos()) / 2.0,
        }
    }

    /// The lift `x ↦ x + Δθ(x)` of the angular map.
    #[inline]
    pub fn lift(&self, x: f64) -> f64 {
        x + self.eval(Angle::new(x))
    }

    /// Lipschitz constant `πd` of `Δθ` (both shapes).
    pub fn lipschitz(&self) -> f64 {
        PI * self.d
    }

    /// Critical points and kinks of the lift.
    pub fn knots(&self) -> Vec<f64> {
        match self.shape {
            AngularShape::SineArc => vec![0.0, 0.5],
            AngularShape::RaisedCosine => vec![0.0, 0.25, 0.5, 0.75],
        }
    }
}

/// The two profiles defining `f₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profiles {
    pub radial: RadialProfile,
    pub angular: AngularProfile,
}

impl Profiles {
    pub fn new(a: f64, w: f64, d: f64) -> Result<Self, ProfileError> {
        Ok(Profiles {
            radial: RadialProfile::new(a, w)?,
            angular: AngularProfile::new(d, w)?,
        })
    }

    pub fn unchecked(a: f64, w: f64, d: f64) -> Self {
        Profiles {
            radial: RadialProfile::unchecked(a, w),
            angular: AngularProfile::unchecked(d, w, AngularShape::default()),
        }
    }

    pub fn params(&self) -> ProfileParams {
        ProfileParams {
            a: self.radial.a,
            w: self.radial.w,
            d: self.angular.d,
            radial_shape: self.radial.shape,
            angular_shape: self.angular.shape,
        }
    }
}

impl Default for Profiles {
    fn default() -> Self {
        Profiles::new(DEFAULT_EXPANSION, DEFAULT_HALF_WIDTH, DEFAULT_DRIFT)
            .expect("default parameters are valid")
    }
}

/// Serialized form of a [`Profiles`] pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub a: f64,
    pub w: f64,
    pub d: f64,
    #[serde(default)]
    pub radial_shape: RadialShape,
    #[serde(default)]
    pub angular_shape: AngularShape,
}

impl Default for ProfileParams {
    fn default() -> Self {
        Profiles::default().params()
    }
}

impl ProfileParams {
    pub fn build(&self) -> Result<Profiles, ProfileError> {
        Ok(Profiles {
            radial: RadialProfile::new(self.a, self.w)?,
            angular: AngularProfile::with_shape(self.d, self.w, self.angular_shape)?,
        })
    }

    pub fn build_unchecked(&self) -> Profiles {
        Profiles {
            radial: RadialProfile::unchecked(self.a, self.w),
            angular: AngularProfile::unchecked(self.d, self.w, self.angular_shape),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckId {
    /// `Δr = a − 1` off `I`.
    C1,
    /// `Δr(0̄) = −1` and `Δr ∈ [−1, 0)` exactly on `J`.
    C2,
    /// `Δθ ≥ 0`, vanishing only at `0̄`, capped by `dist(I, I + 1/2)`.
    C3,
    /// `θ ↦ θ + Δθ(θ)` strictly increasing.
    C4,
    /// `I ∩ (I + 1/2) = ∅`.
    C5,
    /// Both profiles even about `0̄` (needed by the symmetrized map).
    C6,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: CheckId,
    pub passed: bool,
    /// Angle (turns) at which the condition fails, when there is one.
    pub witness: Option<f64>,
    pub detail: String,
}

impl Check {
    fn pass(id: CheckId, detail: impl Into<String>) -> Self {
        Check {
            id,
            passed: true,
            witness: None,
            detail: detail.into(),
        }
    }

    fn fail(id: CheckId, witness: f64, detail: impl Into<String>) -> Self {
        Check {
            id,
            passed: false,
            witness: Some(witness),
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub params: ProfileParams,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, id: CheckId) -> Option<&Check> {
        self.checks.iter().find(|c| c.id == id)
    }
}

fn sample_angles(rp: &RadialProfile, ap: &AngularProfile) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..VALIDATION_GRID)
        .map(|i| i as f64 / VALIDATION_GRID as f64)
        .collect();
    xs.extend(rp.knots().into_iter().map(|k| Angle::new(k).value()));
    xs.extend(ap.knots().into_iter().map(|k| Angle::new(k).value()));
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// Checks conditions C1–C5 on a profile pair. Failures are reported, not raised.
pub fn validate_profiles(rp: &RadialProfile, ap: &AngularProfile) -> ValidationReport {
    let xs = sample_angles(rp, ap);
    let checks = vec![
        check_outside_constant(rp, &xs),
        check_negativity_region(rp, &xs),
        check_drift(rp, ap, &xs),
        check_lift(ap),
        check_disjoint(rp),
    ];
    ValidationReport {
        params: Profiles {
            radial: *rp,
            angular: *ap,
        }
        .params(),
        checks,
    }
}

/// [`validate_profiles`] plus the evenness check C6 required by the
/// axially symmetric construction.
pub fn validate_profiles_symmetric(rp: &RadialProfile, ap: &AngularProfile) -> ValidationReport {
    let mut report = validate_profiles(rp, ap);
    let xs = sample_angles(rp, ap);
    let odd = xs.iter().copied().find(|&x| {
        let (p, m) = (Angle::new(x), Angle::new(-x));
        (rp.eval(p) - rp.eval(m)).abs() > 1e-12 || (ap.eval(p) - ap.eval(m)).abs() > 1e-12
    });
    report.checks.push(match odd {
        None => Check::pass(CheckId::C6, "Δr and Δθ even about 0"),
        Some(x) => Check::fail(CheckId::C6, x, "profile not even about 0"),
    });
    report
}

fn check_outside_constant(rp: &RadialProfile, xs: &[f64]) -> Check {
    let target = rp.outside_gain();
    let bad = xs.iter().copied().find(|&x| {
        let t = Angle::new(x);
        circle_dist(t, Angle::ZERO) >= rp.w && (rp.eval(t) - target).abs() > 1e-12
    });
    match bad {
        None => Check::pass(CheckId::C1, format!("Δr = {target} off I")),
        Some(x) => Check::fail(
            CheckId::C1,
            x,
            format!("Δr({x}) = {} ≠ a − 1 off I", rp.eval(Angle::new(x))),
        ),
    }
}

fn check_negativity_region(rp: &RadialProfile, xs: &[f64]) -> Check {
    let at_zero = rp.eval(Angle::ZERO);
    if at_zero != -1.0 {
        return Check::fail(CheckId::C2, 0.0, format!("Δr(0) = {at_zero} ≠ −1"));
    }
    let j = rp.w / rp.a;
    for &x in xs {
        let t = Angle::new(x);
        let dist = circle_dist(t, Angle::ZERO);
        let v = rp.eval(t);
        if v < -1.0 {
            return Check::fail(CheckId::C2, x, format!("Δr({x}) = {v} < −1"));
        }
        // Boundary of J is checked separately below.
        if (dist - j).abs() <= 1e-12 {
            continue;
        }
        let inside = dist < j;
        if inside != (v < 0.0) {
            return Check::fail(
                CheckId::C2,
                x,
                format!("sign of Δr({x}) = {v} disagrees with membership in J"),
            );
        }
    }
    let edge = rp.eval(Angle::new(j));
    if edge.abs() > 1e-12 {
        return Check::fail(CheckId::C2, j, format!("Δr(∂J) = {edge} ≠ 0"));
    }
    Check::pass(
        CheckId::C2,
        format!("Δr ∈ [−1, 0) exactly on J = (−{j}, {j})"),
    )
}

fn check_drift(rp: &RadialProfile, ap: &AngularProfile, xs: &[f64]) -> Check {
    let cap = 0.5 - 2.0 * rp.w;
    if ap.eval(Angle::ZERO) != 0.0 {
        return Check::fail(CheckId::C3, 0.0, "Δθ(0) ≠ 0");
    }
    let mut argmax = (f64::NEG_INFINITY, 0.0);
    for &x in xs {
        let v = ap.eval(Angle::new(x));
        if v < 0.0 || (x != 0.0 && v <= 0.0) {
            return Check::fail(CheckId::C3, x, format!("Δθ({x}) = {v} is not positive"));
        }
        if v > argmax.0 {
            argmax = (v, x);
        }
    }
    if argmax.0 > cap + 1e-12 {
        return Check::fail(
            CheckId::C3,
            argmax.1,
            format!("max Δθ = {} exceeds dist(I, I + 1/2) = {cap}", argmax.0),
        );
    }
    Check::pass(CheckId::C3, format!("0 ≤ Δθ ≤ {} ≤ {cap}", argmax.0))
}

fn check_lift(ap: &AngularProfile) -> Check {
    if ap.d >= FRAC_1_PI {
        // Minimum slope 1 − πd sits at the knot 1/2 (sine arc) or 3/4 (cosine).
        let at = match ap.shape {
            AngularShape::SineArc => 0.5,
            AngularShape::RaisedCosine => 0.75,
        };
        return Check::fail(CheckId::C4, at, format!("d = {} ≥ 1/π", ap.d));
    }
    match check_monotone_lift(&|x| ap.lift(x), &ap.knots()) {
        Ok(()) => Check::pass(CheckId::C4, "lift strictly increasing on grid + knots"),
        Err(CircleError::NotMonotone { at }) => Check::fail(CheckId::C4, at, "lift not increasing"),
        Err(e) => Check::fail(CheckId::C4, 0.0, e.to_string()),
    }
}

fn check_disjoint(rp: &RadialProfile) -> Check {
    if rp.w > 0.0 && rp.w < 0.25 {
        Check::pass(CheckId::C5, format!("gap {}", 0.5 - 2.0 * rp.w))
    } else {
        // 1/4 lies in the closures of both I and I + 1/2 once w ≥ 1/4.
        Check::fail(CheckId::C5, 0.25, format!("w = {} ≥ 1/4", rp.w))
    }
}
