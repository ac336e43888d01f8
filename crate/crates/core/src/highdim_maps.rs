//! The axially symmetric planar map `h`, its spherical lift `h_k` to `ℝᵏ`
//! and the quarter-turn conjugate `j_k = τ_k⁻¹ ∘ h_k ∘ τ_k`.
//!
//! `h` runs the angular dynamics of `f₀` on each half-circle through the
//! doubling map: on `[0, 1/2]` it is `θ ↦ θ + Δθ(2θ)/2` with radial step
//! `Δr(2θ)`, and the other half is its mirror image under `θ ↦ 1 − θ`.
//! The ray `θ = 0` repels in angle and `θ = 1/2` attracts; both are
//! invariant with `Δr = −1`.
//!
//! `h_k` applies `h` to (log-radius, polar angle from the `x_k` axis) and
//! keeps the direction in the equatorial hyperplane `x_k = 0` fixed.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::circle::{circle_dist, Angle};
use crate::planar_maps::{CartPoint, CylPoint, MapError};
use crate::profiles::Profiles;

/// Polar grid points per nappe in [`check_cone_condition`].
const CONE_POLAR_GRID: usize = 4096;
/// Random equatorial directions per polar value in [`check_cone_condition`].
const CONE_RANDOM_DIRS: usize = 16;
const CONE_SEED: u64 = 0x00C0_FFEE;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Spherical factorization of a non-zero point of `ℝᵏ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalDecomp {
    /// Log-radius.
    pub r: f64,
    /// Angle from the north (`x_k`) axis, in turns, within `[0, 1/2]`.
    pub polar: f64,
    /// Unit vector in `ℝ^{k−1}`; `None` exactly on the axis.
    pub equatorial_dir: Option<Vec<f64>>,
}

/// Polar angle of a unit vector and its normalized equatorial part.
fn split_direction(u: &[f64]) -> (f64, Option<Vec<f64>>) {
    let k = u.len();
    let (eq, north) = u.split_at(k - 1);
    let s = norm(eq);
    let polar = s.atan2(north[0]) / TAU;
    let dir = (s > 0.0).then(|| eq.iter().map(|c| c / s).collect());
    (polar, dir)
}

fn join_direction(polar: f64, dir: Option<&[f64]>, k: usize) -> Vec<f64> {
    let (s, c) = (polar * TAU).sin_cos();
    let mut u = Vec::with_capacity(k);
    match dir {
        Some(d) => u.extend(d.iter().map(|x| x * s)),
        None => u.resize(k - 1, 0.0),
    }
    u.push(c);
    u
}

pub fn spherical_decompose(x: &CartPoint) -> Result<SphericalDecomp, MapError> {
    let rho = x.norm();
    if rho == 0.0 {
        return Err(MapError::OriginNotRepresentable);
    }
    let u: Vec<f64> = x.coords.iter().map(|c| c / rho).collect();
    let (polar, equatorial_dir) = split_direction(&u);
    Ok(SphericalDecomp {
        r: rho.ln(),
        polar,
        equatorial_dir,
    })
}

pub fn spherical_compose(s: &SphericalDecomp, k: usize) -> CartPoint {
    let rho = s.r.exp();
    let u = join_direction(s.polar, s.equatorial_dir.as_deref(), k);
    CartPoint::new(u.into_iter().map(|c| rho * c).collect())
}

/// The symmetrized planar map `h`.
pub fn apply_h(profiles: &Profiles, p: CylPoint) -> CylPoint {
    let (rp, ap) = (&profiles.radial, &profiles.angular);
    let t = p.theta.value();
    if t <= 0.5 {
        let phi = Angle::new(2.0 * t);
        CylPoint {
            r: p.r + rp.eval(phi),
            theta: Angle::new(t + ap.eval(phi) / 2.0),
        }
    } else {
        let phi = Angle::new(2.0 - 2.0 * t);
        CylPoint {
            r: p.r + rp.eval(phi),
            theta: Angle::new(t - ap.eval(phi) / 2.0),
        }
    }
}

/// `h` acting on (r, polar); the equatorial direction is passed through.
pub fn apply_h_spherical(profiles: &Profiles, s: &SphericalDecomp) -> SphericalDecomp {
    let (r, polar) = h_polar(profiles, s.r, s.polar);
    SphericalDecomp {
        r,
        polar,
        equatorial_dir: s.equatorial_dir.clone(),
    }
}

fn h_polar(profiles: &Profiles, r: f64, polar: f64) -> (f64, f64) {
    let q = apply_h(
        profiles,
        CylPoint {
            r,
            theta: Angle::new(polar.clamp(0.0, 0.5)),
        },
    );
    (q.r, q.theta.value().min(0.5))
}

/// A non-zero point of `ℝᵏ` as log-radius and unit direction.
///
/// Orbits of `h_k`/`j_k` are iterated in this form so that `r` can run to
/// `±10⁶` without `eʳ` leaving the f64 range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayPoint {
    pub r: f64,
    pub dir: Vec<f64>,
}

impl RayPoint {
    pub fn from_cartesian(x: &CartPoint) -> Result<Self, MapError> {
        let rho = x.norm();
        if rho == 0.0 {
            return Err(MapError::OriginNotRepresentable);
        }
        Ok(RayPoint {
            r: rho.ln(),
            dir: x.coords.iter().map(|c| c / rho).collect(),
        })
    }

    pub fn to_cartesian(&self) -> CartPoint {
        let rho = self.r.exp();
        CartPoint::new(self.dir.iter().map(|c| rho * c).collect())
    }

    pub fn dim(&self) -> usize {
        self.dir.len()
    }

    /// Polar angle from the `x_k` axis, in turns.
    pub fn polar(&self) -> f64 {
        split_direction(&self.dir).0
    }
}

pub fn h_k_ray(profiles: &Profiles, p: &RayPoint) -> RayPoint {
    let k = p.dim();
    assert!(k >= 3, "h_k needs k ≥ 3, got {k}");
    let (polar, dir) = split_direction(&p.dir);
    let (r, polar) = h_polar(profiles, p.r, polar);
    RayPoint {
        r,
        dir: join_direction(polar, dir.as_deref(), k),
    }
}

pub fn j_k_ray(profiles: &Profiles, p: &RayPoint) -> RayPoint {
    let q = h_k_ray(
        profiles,
        &RayPoint {
            r: p.r,
            dir: rotate90_coords(&p.dir),
        },
    );
    RayPoint {
        r: q.r,
        dir: rotate90_inv_coords(&q.dir),
    }
}

/// The spherical lift `h_k` of `h`, with `h_k(0) = 0`.
///
/// Panics if `k < 3`.
pub fn apply_h_k(profiles: &Profiles, x: &CartPoint) -> CartPoint {
    assert!(x.dim() >= 3, "h_k needs k ≥ 3, got {}", x.dim());
    match spherical_decompose(x) {
        Ok(s) => spherical_compose(&apply_h_spherical(profiles, &s), x.dim()),
        Err(_) => CartPoint::origin(x.dim()),
    }
}

/// `j_k = τ_k⁻¹ ∘ h_k ∘ τ_k`, with `j_k(0) = 0`.
pub fn apply_j_k(profiles: &Profiles, x: &CartPoint) -> CartPoint {
    rotate90_inv(&apply_h_k(profiles, &rotate90(x)))
}

fn rotate90_coords(x: &[f64]) -> Vec<f64> {
    let k = x.len();
    let mut y = x.to_vec();
    y[0] = x[k - 1];
    y[k - 1] = -x[0];
    y
}

fn rotate90_inv_coords(x: &[f64]) -> Vec<f64> {
    let k = x.len();
    let mut y = x.to_vec();
    y[0] = -x[k - 1];
    y[k - 1] = x[0];
    y
}

/// Quarter turn `τ_k` in the `(x₁, x_k)` plane:
/// `(x₁, …, x_k) ↦ (x_k, x₂, …, x_{k−1}, −x₁)`.
pub fn rotate90(x: &CartPoint) -> CartPoint {
    assert!(x.dim() >= 2);
    CartPoint::new(rotate90_coords(&x.coords))
}

pub fn rotate90_inv(x: &CartPoint) -> CartPoint {
    assert!(x.dim() >= 2);
    CartPoint::new(rotate90_inv_coords(&x.coords))
}

/// Open double cone `{min(polar, 1/2 − polar) < half_angle}` around the `x_k` axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleCone {
    pub half_angle: f64,
}

impl DoubleCone {
    /// The cone where `h_k` may contract: `half_angle = w/2`.
    pub fn for_profiles(profiles: &Profiles) -> Self {
        DoubleCone {
            half_angle: profiles.radial.w() / 2.0,
        }
    }

    /// Angular distance (turns) from the axis, in `[0, 1/4]`.
    pub fn axis_distance(polar: f64) -> f64 {
        polar.min(0.5 - polar)
    }

    pub fn contains_polar(&self, polar: f64) -> bool {
        Self::axis_distance(polar) < self.half_angle
    }

    pub fn contains(&self, x: &CartPoint) -> bool {
        spherical_decompose(x).is_ok_and(|s| self.contains_polar(s.polar))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub holds: bool,
    pub cone_half_angle: f64,
    /// Smallest sampled angular distance (turns) of an image point from the
    /// other map's cone, beyond its boundary. Negative means overlap.
    pub margin: f64,
    /// `margin` minus the Lipschitz allowance for the polar grid spacing.
    pub certified_margin: f64,
    pub min_gain_jh: f64,
    pub min_gain_hj: f64,
    pub n_samples: usize,
}

/// Numerical check of `h_k(C) ∩ τ_k(C) = {0}` and `j_k(τ_k(C)) ∩ C = {0}`,
/// plus the sampled minimum radial gain of `j_k ∘ h_k` and `h_k ∘ j_k`.
///
/// The cone is sampled on a polar grid on each nappe, boundary included,
/// with the equatorial directions `±e₁` (closest to the rotated axis) and a
/// few random ones. The image polar angle moves by at most `(1 + πd)` times
/// the grid spacing between neighbours, which is subtracted from the margin.
/// Gains are sampled at `n_samples` points, half uniform on the sphere and
/// half uniform in polar angle (denser near the axis).
pub fn check_cone_condition(profiles: &Profiles, k: usize, n_samples: usize) -> ConeReport {
    check_cone_condition_with(profiles, DoubleCone::for_profiles(profiles), k, n_samples)
}

pub fn check_cone_condition_with(
    profiles: &Profiles,
    cone: DoubleCone,
    k: usize,
    n_samples: usize,
) -> ConeReport {
    assert!(k >= 3, "cone condition needs k ≥ 3, got {k}");
    assert!(n_samples >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(CONE_SEED);
    let half = cone.half_angle;

    let mut dirs: Vec<Vec<f64>> = Vec::new();
    let mut e1 = vec![0.0; k - 1];
    e1[0] = 1.0;
    dirs.push(e1.clone());
    dirs.push(e1.iter().map(|c| -c).collect());
    for _ in 0..CONE_RANDOM_DIRS {
        dirs.push(random_unit(&mut rng, k - 1));
    }

    let mut margin = f64::INFINITY;
    let step = half / CONE_POLAR_GRID as f64;
    for i in 0..=CONE_POLAR_GRID {
        let off = (i as f64 * step).min(half);
        for polar in [off, 0.5 - off] {
            for d in &dirs {
                let u = RayPoint {
                    r: 0.0,
                    dir: join_direction(polar, Some(d), k),
                };
                // h_k(C) against τ_k(C): rotate back and measure from the axis.
                let img = h_k_ray(profiles, &u);
                let back = RayPoint {
                    r: 0.0,
                    dir: rotate90_inv_coords(&img.dir),
                };
                margin = margin.min(DoubleCone::axis_distance(back.polar()) - half);
                // j_k(τ_k(C)) against C.
                let moved = RayPoint {
                    r: 0.0,
                    dir: rotate90_coords(&u.dir),
                };
                let img = j_k_ray(profiles, &moved);
                margin = margin.min(DoubleCone::axis_distance(img.polar()) - half);
            }
        }
    }
    let allowance = (1.0 + profiles.angular.lipschitz()) * step / 2.0;
    let certified_margin = margin - allowance;

    let mut min_jh = f64::INFINITY;
    let mut min_hj = f64::INFINITY;
    for i in 0..n_samples {
        let dir = if i % 2 == 0 {
            random_unit(&mut rng, k)
        } else {
            let polar = rng.gen_range(0.0..=0.5);
            let d = random_unit(&mut rng, k - 1);
            join_direction(polar, Some(&d), k)
        };
        let x = RayPoint { r: 0.0, dir };
        let jh = j_k_ray(profiles, &h_k_ray(profiles, &x));
        let hj = h_k_ray(profiles, &j_k_ray(profiles, &x));
        min_jh = min_jh.min(jh.r);
        min_hj = min_hj.min(hj.r);
    }

    ConeReport {
        holds: certified_margin > 0.0,
        cone_half_angle: half,
        margin,
        certified_margin,
        min_gain_jh: min_jh,
        min_gain_hj: min_hj,
        n_samples,
    }
}

pub(crate) fn random_unit<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

/// Doubling map on the circle, used to compare `h` with `f₀`.
pub fn doubling(theta: Angle) -> Angle {
    Angle::new(2.0 * theta.value())
}

/// Distance of the `h`-angle from the attracting south ray.
pub fn south_distance(theta: Angle) -> f64 {
    circle_dist(theta, Angle::HALF)
}
