//! Arithmetic on the circle ℝ/ℤ, measured in turns.
//!
//! Angles are stored as fractions of a full revolution so that the
//! half-turn, quarter-turn and interval endpoints used throughout the crate
//! are exact binary fractions.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default image tolerance for [`monotone_circle_inverse`].
pub const DEFAULT_INVERSE_TOL: f64 = 1e-12;
/// Default bisection budget for [`monotone_circle_inverse`].
pub const DEFAULT_INVERSE_BUDGET: usize = 200;
/// Number of uniform samples used by [`check_monotone_lift`].
pub const MONOTONE_GRID: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircleError {
    #[error("half-width {0} must lie in (0, 1/2) turns")]
    BadHalfWidth(f64),
    #[error("interval of half-width {half_width} overlaps its half-turn translate")]
    NonDisjoint { half_width: f64 },
    #[error("lift is not strictly increasing near x = {at}")]
    NotMonotone { at: f64 },
    #[error("lift has degree {degree}, expected 1")]
    NotDegreeOne { degree: f64 },
    #[error("bisection did not reach tolerance {tol} (residual {residual})")]
    NoConvergence { tol: f64, residual: f64 },
}

/// A point of ℝ/ℤ, normalized to `[0, 1)`.
#[derive(Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);
    pub const HALF: Angle = Angle(0.5);

    /// Reduces `turns` mod 1.
    pub fn new(turns: f64) -> Self {
        let v = turns - turns.floor();
        // `x - floor(x)` rounds up to 1.0 for tiny negative x.
        Angle(if v >= 1.0 { 0.0 } else { v })
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// Translate by `delta` turns.
    #[inline]
    pub fn shift(self, delta: f64) -> Self {
        Angle::new(self.0 + delta)
    }

    /// The antipodal point, `self + 1/2`.
    #[inline]
    pub fn antipode(self) -> Self {
        self.shift(0.5)
    }

    pub fn to_radians(self) -> f64 {
        self.0 * std::f64::consts::TAU
    }
}

impl From<f64> for Angle {
    fn from(turns: f64) -> Self {
        Angle::new(turns)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

impl fmt::Debug for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Angle({})", self.0)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Geodesic distance on the circle, in `[0, 1/2]`.
#[inline]
pub fn circle_dist(x: Angle, y: Angle) -> f64 {
    let d = (x.0 - y.0).abs();
    d.min(1.0 - d)
}

/// An open arc `(center - half_width, center + half_width)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleInterval {
    center: Angle,
    half_width: f64,
}

impl CircleInterval {
    pub fn new(center: Angle, half_width: f64) -> Result<Self, CircleError> {
        if !(half_width > 0.0 && half_width < 0.5) {
            return Err(CircleError::BadHalfWidth(half_width));
        }
        Ok(CircleInterval { center, half_width })
    }

    pub fn centered_at_zero(half_width: f64) -> Result<Self, CircleError> {
        Self::new(Angle::ZERO, half_width)
    }

    pub fn center(&self) -> Angle {
        self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn contains(&self, theta: Angle) -> bool {
        circle_dist(theta, self.center) < self.half_width
    }

    pub fn contains_closed(&self, theta: Angle) -> bool {
        circle_dist(theta, self.center) <= self.half_width
    }

    pub fn translate(&self, delta: f64) -> Self {
        CircleInterval {
            center: self.center.shift(delta),
            half_width: self.half_width,
        }
    }

    /// Whether the arc misses its own half-turn translate.
    pub fn is_disjoint_from_antipode(&self) -> bool {
        self.half_width < 0.25
    }
}

/// Distance between `interval` and `interval + 1/2`, which is `1/2 - 2·half_width`.
pub fn interval_gap(interval: &CircleInterval) -> Result<f64, CircleError> {
    if !interval.is_disjoint_from_antipode() {
        return Err(CircleError::NonDisjoint {
            half_width: interval.half_width,
        });
    }
    Ok(0.5 - 2.0 * interval.half_width)
}

/// Sampled check that `lift` is a strictly increasing degree-one lift.
///
/// Samples a uniform grid of [`MONOTONE_GRID`] points on `[0, 1]` together
/// with `knots` (reduced mod 1), which should contain the kinks and critical
/// points of the lift.
pub fn check_monotone_lift<F>(lift: &F, knots: &[f64]) -> Result<(), CircleError>
where
    F: Fn(f64) -> f64,
{
    let mut xs: Vec<f64> = (0..=MONOTONE_GRID)
        .map(|i| i as f64 / MONOTONE_GRID as f64)
        .collect();
    xs.extend(knots.iter().map(|&k| Angle::new(k).value()));
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let mut prev = lift(xs[0]);
    for &x in &xs[1..] {
        let v = lift(x);
        if v.partial_cmp(&prev) != Some(std::cmp::Ordering::Greater) {
            return Err(CircleError::NotMonotone { at: x });
        }
        prev = v;
    }
    let degree = lift(1.0) - lift(0.0);
    if (degree - 1.0).abs() > 1e-9 {
        return Err(CircleError::NotDegreeOne { degree });
    }
    Ok(())
}

/// Inverts a monotone circle map given by its lift, after a sampled
/// monotonicity check. See [`bisect_lift_inverse`] for the search itself.
pub fn monotone_circle_inverse<F>(lift: F, y: Angle, tol: f64) -> Result<Angle, CircleError>
where
    F: Fn(f64) -> f64,
{
    check_monotone_lift(&lift, &[])?;
    bisect_lift_inverse(&lift, y, tol, DEFAULT_INVERSE_BUDGET)
}

/// Bisection for `x ∈ [0, 1)` with `lift(x) ≡ y (mod 1)` up to `tol`.
///
/// The lift is assumed strictly increasing with `lift(x + 1) = lift(x) + 1`;
/// no monotonicity check is performed here.
pub fn bisect_lift_inverse<F>(
    lift: &F,
    y: Angle,
    tol: f64,
    budget: usize,
) -> Result<Angle, CircleError>
where
    F: Fn(f64) -> f64,
{
    let base = lift(0.0);
    // Representative of y in [lift(0), lift(1)).
    let target = base + (y.value() - base).rem_euclid(1.0);

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut best = (f64::INFINITY, 0.0);
    for _ in 0..budget {
        let mid = 0.5 * (lo + hi);
        if !(lo < mid && mid < hi) {
            break;
        }
        let v = lift(mid);
        let residual = (v - target).abs();
        if residual < best.0 {
            best = (residual, mid);
        }
        if residual <= tol {
            return Ok(Angle::new(mid));
        }
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    for x in [lo, hi] {
        let residual = (lift(x) - target).abs();
        if residual < best.0 {
            best = (residual, x);
        }
    }
    if best.0 <= tol {
        Ok(Angle::new(best.1))
    } else {
        Err(CircleError::NoConvergence {
            tol,
            residual: best.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    fn cosine_lift(x: f64) -> f64 {
        x + 0.25 * (1.0 - (TAU * x).cos()) / 2.0
    }

    #[test]
    fn normalization() {
        assert_eq!(Angle::new(1.25).value(), 0.25);
        assert_eq!(Angle::new(-0.25).value(), 0.75);
        assert_eq!(Angle::new(-1e-20).value(), 0.0);
        assert_eq!(Angle::new(3.0).value(), 0.0);
    }

    #[test]
    fn circle_dist_examples() {
        assert_eq!(circle_dist(Angle::new(0.0), Angle::new(0.0)), 0.0);
        assert!((circle_dist(Angle::new(0.1), Angle::new(0.9)) - 0.2).abs() < 1e-15);
        assert_eq!(circle_dist(Angle::new(0.0), Angle::new(0.5)), 0.5);
    }

    #[test]
    fn interval_gap_examples() {
        // Endpoints of (-1/8, 1/8) and (3/8, 5/8): the nearest pair is 1/8 vs 3/8.
        let endpoint_gap = [
            (0.125, 0.375),
            (-0.125, -0.375),
            (0.125, 0.625),
            (-0.125, 0.375),
        ]
        .iter()
        .map(|&(x, y)| circle_dist(Angle::new(x), Angle::new(y)))
        .fold(f64::INFINITY, f64::min);
        let i = CircleInterval::centered_at_zero(0.125).unwrap();
        assert_eq!(interval_gap(&i).unwrap(), endpoint_gap);
        assert_eq!(endpoint_gap, 0.25);

        let eps = 1e-6;
        let i = CircleInterval::centered_at_zero(0.25 - eps).unwrap();
        assert!((interval_gap(&i).unwrap() - 2.0 * eps).abs() < 1e-15);

        let i = CircleInterval::centered_at_zero(0.3).unwrap();
        assert_eq!(
            interval_gap(&i),
            Err(CircleError::NonDisjoint { half_width: 0.3 })
        );
    }

    #[test]
    fn interval_membership_wraps() {
        let i = CircleInterval::centered_at_zero(0.1).unwrap();
        assert!(i.contains(Angle::new(0.95)));
        assert!(i.contains(Angle::new(0.05)));
        assert!(!i.contains(Angle::new(0.5)));
        assert!(i.translate(0.5).contains(Angle::new(0.45)));
        assert!(CircleInterval::centered_at_zero(0.5).is_err());
        assert!(CircleInterval::centered_at_zero(0.0).is_err());
    }

    #[test]
    fn inverse_identity() {
        let x = monotone_circle_inverse(|x| x, Angle::new(0.3), DEFAULT_INVERSE_TOL).unwrap();
        assert!(circle_dist(x, Angle::new(0.3)) <= 1e-12);
    }

    #[test]
    fn inverse_of_cosine_lift() {
        let y = Angle::new(cosine_lift(0.2));
        let x = monotone_circle_inverse(cosine_lift, y, DEFAULT_INVERSE_TOL).unwrap();
        assert!(circle_dist(x, Angle::new(0.2)) <= 1e-11);
    }

    #[test]
    fn non_monotone_lift_rejected() {
        let bad = |x: f64| x + 0.4 * (TAU * x).sin();
        assert!(matches!(
            monotone_circle_inverse(bad, Angle::new(0.1), 1e-12),
            Err(CircleError::NotMonotone { .. })
        ));
        let degree_two = |x: f64| 2.0 * x;
        assert!(matches!(
            check_monotone_lift(&degree_two, &[]),
            Err(CircleError::NotDegreeOne { .. })
        ));
    }

    #[test]
    fn impossible_tolerance_reports_no_convergence() {
        let r = bisect_lift_inverse(&cosine_lift, Angle::new(0.7), 0.0, 3);
        assert!(matches!(r, Err(CircleError::NoConvergence { .. })));
    }

    proptest! {
        #[test]
        fn dist_symmetric_and_bounded(x in -5.0f64..5.0, y in -5.0f64..5.0) {
            let (a, b) = (Angle::new(x), Angle::new(y));
            prop_assert_eq!(circle_dist(a, b), circle_dist(b, a));
            prop_assert_eq!(circle_dist(a, a), 0.0);
            prop_assert!((0.0..=0.5).contains(&circle_dist(a, b)));
            prop_assert!((0.0..1.0).contains(&a.value()));
        }

        #[test]
        fn gap_plus_width(hw in 1e-6f64..0.2499) {
            let i = CircleInterval::centered_at_zero(hw).unwrap();
            prop_assert!((interval_gap(&i).unwrap() + 2.0 * hw - 0.5).abs() <= 1e-12);
        }

        #[test]
        fn inverse_round_trip(y in 0.0f64..1.0, amp in 0.0f64..0.3, phase in 0.0f64..1.0) {
            let lift = move |x: f64| x + amp * (1.0 - (TAU * (x - phase)).cos()) / 2.0;
            let x = monotone_circle_inverse(lift, Angle::new(y), DEFAULT_INVERSE_TOL).unwrap();
            prop_assert!(circle_dist(Angle::new(lift(x.value())), Angle::new(y)) <= 1e-12);
        }
    }
}
