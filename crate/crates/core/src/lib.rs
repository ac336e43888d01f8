//! Homeomorphisms of `ℝᵏ` that attract every orbit to the origin on their
//! own but repel every orbit when composed, and the Bernoulli random
//! iterated function system built from them.
//!
//! Modules, bottom-up:
//!
//! - [`circle`]: angles in turns, arcs, inverses of monotone circle maps.
//! - [`profiles`]: the radial and angular increments defining `f₀`, and
//!   their validation.
//! - [`planar_maps`]: `f₀`, `f₁ = τ∘f₀∘τ`, words, inverses, Cartesian
//!   extension and the certified composition gain.
//! - [`highdim_maps`]: the axially symmetric map `h`, its spherical lift
//!   `h_k` and the rotated conjugate `j_k`.
//! - [`dynamics`]: orbit iteration, classification and trap detection.
//! - [`ifs`]: the random iterated function system and its Monte Carlo.

pub mod circle;
pub mod dynamics;
pub mod highdim_maps;
pub mod ifs;
pub mod planar_maps;
pub mod profiles;

pub use circle::{circle_dist, Angle, CircleInterval};
pub use planar_maps::{CartPoint, CylPoint, Letter, MapWord};
pub use profiles::{AngularProfile, Profiles, RadialProfile};

/// Library version embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
