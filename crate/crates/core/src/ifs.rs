//! Bernoulli-randomized iteration of `f₀`, `f₁` and its pair bookkeeping.
//!
//! Symbol 0 selects `f₀` with probability `p`. Steps are grouped into
//! disjoint consecutive pairs `(a₀, a₁), (a₂, a₃), …`; a pair is mixed when
//! its two symbols differ. With `k_m` mixed pairs among the first `m`, the
//! total gain satisfies `Δ^{2m} ≥ a·k_m − 2m`.
//!
//! Every sequence draws from its own ChaCha8 stream: the generator is
//! seeded with the root seed and `set_stream` selects `2·id` for symbols and
//! `2·id + 1` for the random start angle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circle::Angle;
use crate::dynamics::{classify_orbit, Classification, OrbitTrace, DEFAULT_TOL, DEFAULT_WINDOW};
use crate::planar_maps::{apply_letter, CylPoint, Letter};
use crate::profiles::{AngularProfile, ProfileError, Profiles, RadialProfile};

pub const DEFAULT_ESCAPE_THRESHOLD: f64 = 100.0;
/// `|a·p(1−p) − 1|` below this counts as the admissibility boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IfsError {
    #[error("p = {0} must lie strictly between 0 and 1")]
    BadProbability(f64),
    #[error("a = {0} must be positive and finite")]
    BadExpansion(f64),
    #[error("horizon {0} must be a positive even step count")]
    BadHorizon(usize),
    #[error("n_sequences must be at least 1")]
    NoSequences,
    #[error("escape threshold {0} must be finite")]
    BadThreshold(f64),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfsConfig {
    /// Probability of symbol 0, i.e. of applying `f₀`.
    pub p: f64,
    pub a: f64,
    pub w: f64,
    pub d: f64,
    pub seed: u64,
    /// Number of steps `2m`.
    pub horizon: usize,
    pub n_sequences: usize,
    #[serde(default = "default_threshold")]
    pub escape_threshold: f64,
    #[serde(default)]
    pub start_r: f64,
    /// Fixed start angle; drawn uniformly per sequence when absent.
    #[serde(default)]
    pub start_theta: Option<f64>,
}

fn default_threshold() -> f64 {
    DEFAULT_ESCAPE_THRESHOLD
}

impl Default for IfsConfig {
    fn default() -> Self {
        IfsConfig {
            p: 0.5,
            a: 5.0,
            w: 0.125,
            d: 0.25,
            seed: 1,
            horizon: 2000,
            n_sequences: 1000,
            escape_threshold: DEFAULT_ESCAPE_THRESHOLD,
            start_r: 0.0,
            start_theta: None,
        }
    }
}

impl IfsConfig {
    pub fn m(&self) -> usize {
        self.horizon / 2
    }

    /// Checks ranges and builds the profiles. `a` is only required to be
    /// positive so that inadmissible expansions can still be explored.
    pub fn profiles(&self) -> Result<Profiles, IfsError> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(IfsError::BadProbability(self.p));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(IfsError::BadExpansion(self.a));
        }
        if self.horizon == 0 || !self.horizon.is_multiple_of(2) {
            return Err(IfsError::BadHorizon(self.horizon));
        }
        if self.n_sequences == 0 {
            return Err(IfsError::NoSequences);
        }
        if !self.escape_threshold.is_finite() {
            return Err(IfsError::BadThreshold(self.escape_threshold));
        }
        // Width is checked with a placeholder admissible expansion.
        RadialProfile::new(5.0, self.w)?;
        Ok(Profiles {
            radial: RadialProfile::unchecked(self.a, self.w),
            angular: AngularProfile::new(self.d, self.w)?,
        })
    }

    pub fn bounds(&self) -> TheoreticalBounds {
        theoretical_bounds(self.p, self.a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Admissibility {
    Admissible,
    Boundary,
    Inadmissible,
}

impl Admissibility {
    pub fn label(self) -> &'static str {
        match self {
            Admissibility::Admissible => "ADMISSIBLE",
            Admissibility::Boundary => "BOUNDARY",
            Admissibility::Inadmissible => "INADMISSIBLE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalBounds {
    pub a_min: f64,
    /// `K = 2(a·p(1−p) − 1)`, the per-pair expected gain bound.
    #[serde(rename = "K")]
    pub k_bound: f64,
    /// `2p(1−p)·a − 2`, the asymptotic lower bound on `Δ^{2m}/m`.
    pub pair_slope_lb: f64,
    pub status: Admissibility,
}

pub fn theoretical_bounds(p: f64, a: f64) -> TheoreticalBounds {
    let pq = p * (1.0 - p);
    let excess = a * pq - 1.0;
    let status = if excess.abs() <= BOUNDARY_TOL {
        Admissibility::Boundary
    } else if excess > 0.0 {
        Admissibility::Admissible
    } else {
        Admissibility::Inadmissible
    };
    TheoreticalBounds {
        a_min: 1.0 / pq,
        k_bound: 2.0 * excess,
        pair_slope_lb: a * 2.0 * pq - 2.0,
        status,
    }
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n` i.i.d. letters, `F0` with probability `p`.
pub fn bernoulli_sequence(p: f64, n: usize, seed: u64, stream: u64) -> Vec<Letter> {
    let mut rng = stream_rng(seed, stream);
    (0..n)
        .map(|_| {
            if rng.gen_bool(p) {
                Letter::F0
            } else {
                Letter::F1
            }
        })
        .collect()
}

pub fn symbol_stream(sequence_id: u64) -> u64 {
    2 * sequence_id
}

pub fn start_stream(sequence_id: u64) -> u64 {
    2 * sequence_id + 1
}

/// Start point of sequence `id` under `config`.
pub fn start_point(config: &IfsConfig, sequence_id: u64) -> CylPoint {
    let theta = config
        .start_theta
        .unwrap_or_else(|| stream_rng(config.seed, start_stream(sequence_id)).gen_range(0.0..1.0));
    CylPoint {
        r: config.start_r,
        theta: Angle::new(theta),
    }
}

/// One sequence with full per-pair detail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfsRun {
    pub symbols: Vec<Letter>,
    pub trace: OrbitTrace,
    pub pair_gains: Vec<f64>,
    pub mixed: Vec<bool>,
    /// `k_series[i]` = mixed pairs among the first `i + 1`.
    pub k_series: Vec<usize>,
    /// `Δ^{2m}`, the sum of pair gains.
    pub delta: f64,
}

/// Per-sequence summary kept by [`monte_carlo`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceResult {
    pub sequence_id: u64,
    pub m: usize,
    pub k_m: usize,
    pub delta_2m: f64,
    /// `Σ (a−2 or −2)` accumulated pair by pair in the same order as `delta_2m`.
    pub bound: f64,
    pub min_mixed_pair_gain: Option<f64>,
    pub min_unmixed_pair_gain: Option<f64>,
}

impl SequenceResult {
    pub fn bound_holds(&self) -> bool {
        self.delta_2m >= self.bound
    }
}

fn step_gain(profiles: &Profiles, letter: Letter, p: CylPoint) -> (f64, CylPoint) {
    let q = apply_letter(profiles, letter, CylPoint { r: 0.0, ..p });
    (q.r, CylPoint { r: p.r + q.r, ..q })
}

fn run_symbols(
    profiles: &Profiles,
    symbols: &[Letter],
    start: CylPoint,
    sequence_id: u64,
    mut on_step: impl FnMut(CylPoint, f64),
) -> (SequenceResult, Vec<f64>, Vec<bool>) {
    let a = profiles.radial.a();
    let mut pt = start;
    let mut pair_gains = Vec::with_capacity(symbols.len() / 2);
    let mut mixed = Vec::with_capacity(symbols.len() / 2);
    let mut res = SequenceResult {
        sequence_id,
        m: symbols.len() / 2,
        k_m: 0,
        delta_2m: 0.0,
        bound: 0.0,
        min_mixed_pair_gain: None,
        min_unmixed_pair_gain: None,
    };
    for pair in symbols.chunks_exact(2) {
        let (g0, p1) = step_gain(profiles, pair[0], pt);
        on_step(p1, g0);
        let (g1, p2) = step_gain(profiles, pair[1], p1);
        on_step(p2, g1);
        pt = p2;
        let g = g0 + g1;
        let is_mixed = pair[0] != pair[1];
        res.delta_2m += g;
        if is_mixed {
            res.k_m += 1;
            res.bound += a - 2.0;
            res.min_mixed_pair_gain = Some(res.min_mixed_pair_gain.map_or(g, |x| x.min(g)));
        } else {
            res.bound += -2.0;
            res.min_unmixed_pair_gain = Some(res.min_unmixed_pair_gain.map_or(g, |x| x.min(g)));
        }
        pair_gains.push(g);
        mixed.push(is_mixed);
    }
    (res, pair_gains, mixed)
}

fn run_summary(config: &IfsConfig, profiles: &Profiles, sequence_id: u64) -> SequenceResult {
    let symbols = bernoulli_sequence(
        config.p,
        config.horizon,
        config.seed,
        symbol_stream(sequence_id),
    );
    let start = start_point(config, sequence_id);
    run_symbols(profiles, &symbols, start, sequence_id, |_, _| {}).0
}

/// One sequence from `start`, using the symbol stream of `sequence_id`.
pub fn run_ifs(config: &IfsConfig, start: CylPoint, sequence_id: u64) -> Result<IfsRun, IfsError> {
    let profiles = config.profiles()?;
    let symbols = bernoulli_sequence(
        config.p,
        config.horizon,
        config.seed,
        symbol_stream(sequence_id),
    );
    let mut points = vec![start];
    let mut gains = Vec::with_capacity(symbols.len());
    let (res, pair_gains, mixed) = run_symbols(&profiles, &symbols, start, sequence_id, |q, g| {
        points.push(q);
        gains.push(g);
    });
    let mut trace = OrbitTrace {
        steps: (0..points.len()).collect(),
        points,
        directions: None,
        gains,
        entered_trap_at: None,
        classification: Classification::Undecided,
        rate: None,
        escaped: false,
    };
    let (c, rate) = classify_orbit(&trace, DEFAULT_WINDOW.min(trace.gains.len()), DEFAULT_TOL)
        .expect("window fits the trace");
    trace.classification = c;
    trace.rate = Some(rate);
    let k_series = mixed
        .iter()
        .scan(0, |k, &x| {
            *k += x as usize;
            Some(*k)
        })
        .collect();
    Ok(IfsRun {
        symbols,
        trace,
        pair_gains,
        mixed,
        k_series,
        delta: res.delta_2m,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfsStats {
    pub n_sequences: usize,
    pub m: usize,
    pub deltas: Vec<f64>,
    pub k_counts: Vec<usize>,
    /// Mean of `k_m/m`.
    pub mean_k_over_m: f64,
    /// Mean of `Δ^{2m}/m`, the per-pair slope.
    pub mean_slope: f64,
    pub slope_se: f64,
    /// Normal 95% interval for the mean slope.
    pub slope_ci: (f64, f64),
    pub escape_fraction: f64,
    pub min_mixed_pair_gain: Option<f64>,
    pub min_unmixed_pair_gain: Option<f64>,
    pub bound_violations: usize,
}

/// Collects per-sequence results in any order; [`IfsAccumulator::finish`]
/// sorts by sequence id so the statistics do not depend on merge order.
#[derive(Debug, Clone, Default)]
pub struct IfsAccumulator {
    results: Vec<SequenceResult>,
}

impl IfsAccumulator {
    pub fn push(&mut self, r: SequenceResult) {
        self.results.push(r);
    }

    pub fn merge(mut self, other: IfsAccumulator) -> IfsAccumulator {
        self.results.extend(other.results);
        self
    }

    pub fn finish(mut self, escape_threshold: f64) -> (IfsStats, Vec<SequenceResult>) {
        self.results.sort_by_key(|r| r.sequence_id);
        let rs = self.results;
        let n = rs.len();
        let m = rs.first().map_or(0, |r| r.m);
        let nf = n as f64;
        let mf = m as f64;
        let slopes: Vec<f64> = rs.iter().map(|r| r.delta_2m / mf).collect();
        let mean_slope = slopes.iter().sum::<f64>() / nf;
        let var = if n > 1 {
            slopes.iter().map(|s| (s - mean_slope).powi(2)).sum::<f64>() / (nf - 1.0)
        } else {
            0.0
        };
        let slope_se = (var / nf).sqrt();
        let fmin = |it: &mut dyn Iterator<Item = f64>| it.reduce(f64::min);
        let stats = IfsStats {
            n_sequences: n,
            m,
            deltas: rs.iter().map(|r| r.delta_2m).collect(),
            k_counts: rs.iter().map(|r| r.k_m).collect(),
            mean_k_over_m: rs.iter().map(|r| r.k_m as f64 / mf).sum::<f64>() / nf,
            mean_slope,
            slope_se,
            slope_ci: (mean_slope - 1.96 * slope_se, mean_slope + 1.96 * slope_se),
            escape_fraction: rs.iter().filter(|r| r.delta_2m > escape_threshold).count() as f64
                / nf,
            min_mixed_pair_gain: fmin(&mut rs.iter().filter_map(|r| r.min_mixed_pair_gain)),
            min_unmixed_pair_gain: fmin(&mut rs.iter().filter_map(|r| r.min_unmixed_pair_gain)),
            bound_violations: rs.iter().filter(|r| !r.bound_holds()).count(),
        };
        (stats, rs)
    }
}

/// Runs every sequence (in parallel) and aggregates in sequence order.
pub fn monte_carlo_detailed(
    config: &IfsConfig,
) -> Result<(IfsStats, Vec<SequenceResult>), IfsError> {
    let profiles = config.profiles()?;
    let acc = (0..config.n_sequences as u64)
        .into_par_iter()
        .fold(IfsAccumulator::default, |mut acc, id| {
            acc.push(run_summary(config, &profiles, id));
            acc
        })
        .reduce(IfsAccumulator::default, IfsAccumulator::merge);
    Ok(acc.finish(config.escape_threshold))
}

pub fn monte_carlo(config: &IfsConfig) -> Result<IfsStats, IfsError> {
    monte_carlo_detailed(config).map(|(s, _)| s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceCheck {
    /// Estimated `E[Δ^{2m+2} − Δ^{2m}]`.
    pub per_pair_mean: f64,
    pub standard_error: f64,
    #[serde(rename = "K")]
    pub k_bound: f64,
    /// `per_pair_mean ≥ K − 3·SE`.
    pub holds: bool,
}

pub fn recurrence_from_stats(stats: &IfsStats, bounds: &TheoreticalBounds) -> RecurrenceCheck {
    RecurrenceCheck {
        per_pair_mean: stats.mean_slope,
        standard_error: stats.slope_se,
        k_bound: bounds.k_bound,
        holds: stats.mean_slope >= bounds.k_bound - 3.0 * stats.slope_se,
    }
}

pub fn expectation_recurrence_check(config: &IfsConfig) -> Result<RecurrenceCheck, IfsError> {
    let stats = monte_carlo(config)?;
    Ok(recurrence_from_stats(&stats, &config.bounds()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> IfsConfig {
        IfsConfig {
            seed,
            horizon: 400,
            n_sequences: 200,
            ..IfsConfig::default()
        }
    }

    #[test]
    fn bounds_examples() {
        let b = theoretical_bounds(0.5, 5.0);
        assert_eq!((b.a_min, b.k_bound, b.pair_slope_lb), (4.0, 0.5, 0.5));
        assert_eq!(b.status, Admissibility::Admissible);
        let b = theoretical_bounds(0.5, 4.0);
        assert_eq!(b.k_bound, 0.0);
        assert_eq!(b.status, Admissibility::Boundary);
        let b = theoretical_bounds(0.1, 12.0);
        assert!((b.k_bound - 0.16).abs() < 1e-12);
        let b = theoretical_bounds(0.9, 12.0);
        assert!((b.a_min - 1.0 / 0.09).abs() < 1e-9);
        assert_eq!(b.status, Admissibility::Admissible);
        assert_eq!(
            theoretical_bounds(0.05, 5.0).status,
            Admissibility::Inadmissible
        );
    }

    #[test]
    fn sequences_are_reproducible_and_independent() {
        let a = bernoulli_sequence(0.5, 1000, 42, 0);
        assert_eq!(a, bernoulli_sequence(0.5, 1000, 42, 0));
        assert_ne!(a, bernoulli_sequence(0.5, 1000, 42, 1));
        assert_ne!(a, bernoulli_sequence(0.5, 1000, 43, 0));
    }

    #[test]
    fn symbol_frequency() {
        for p in [0.1, 0.5, 0.9] {
            let n = 20_000;
            let s = bernoulli_sequence(p, n, 9, 3);
            let freq = s.iter().filter(|&&l| l == Letter::F0).count() as f64 / n as f64;
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() <= 3.0 * sd, "p={p} freq={freq}");
        }
    }

    #[test]
    fn pair_gain_bounds_from_any_start() {
        let cfg = small(5);
        let profiles = cfg.profiles().unwrap();
        for t in 0..200 {
            let start = CylPoint::new(0.0, t as f64 / 200.0);
            for pair in [[Letter::F0, Letter::F1], [Letter::F1, Letter::F0]] {
                let (r, ..) = run_symbols(&profiles, &pair, start, 0, |_, _| {});
                assert!(r.delta_2m >= 3.0);
            }
            for pair in [[Letter::F0, Letter::F0], [Letter::F1, Letter::F1]] {
                let (r, ..) = run_symbols(&profiles, &pair, start, 0, |_, _| {});
                assert!(r.delta_2m >= -2.0);
            }
        }
        let (r, ..) = run_symbols(
            &profiles,
            &[Letter::F0; 2],
            CylPoint::new(0.0, 0.0),
            0,
            |_, _| {},
        );
        assert_eq!(r.delta_2m, -2.0);
        let (r, ..) = run_symbols(
            &profiles,
            &[Letter::F1; 2],
            CylPoint::new(0.0, 0.5),
            0,
            |_, _| {},
        );
        assert_eq!(r.delta_2m, -2.0);
    }

    #[test]
    fn run_ifs_bookkeeping() {
        let cfg = small(3);
        let run = run_ifs(&cfg, CylPoint::new(0.0, 0.2), 7).unwrap();
        assert_eq!(run.pair_gains.len(), 200);
        assert_eq!(run.trace.gains.len(), 400);
        assert_eq!(
            *run.k_series.last().unwrap(),
            run.mixed.iter().filter(|&&x| x).count()
        );
        for (i, pair) in run.symbols.chunks_exact(2).enumerate() {
            assert_eq!(run.mixed[i], pair[0] != pair[1]);
            let g = run.trace.gains[2 * i] + run.trace.gains[2 * i + 1];
            assert_eq!(run.pair_gains[i], g);
            assert!(run.pair_gains[i] >= if run.mixed[i] { 3.0 } else { -2.0 });
        }
        let k = *run.k_series.last().unwrap() as f64;
        assert!(run.delta >= 5.0 * k - 200.0);
        let r_end = run.trace.points.last().unwrap().r;
        assert!((r_end - run.delta).abs() < 1e-9);
    }

    #[test]
    fn deterministic_replay() {
        let cfg = small(11);
        let a = monte_carlo_detailed(&cfg).unwrap();
        let b = monte_carlo_detailed(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a.0).unwrap(),
            serde_json::to_string(&b.0).unwrap()
        );
    }

    #[test]
    fn accumulator_merge_order_is_irrelevant() {
        let cfg = small(12);
        let profiles = cfg.profiles().unwrap();
        let results: Vec<_> = (0..20).map(|id| run_summary(&cfg, &profiles, id)).collect();
        let mut fwd = IfsAccumulator::default();
        results.iter().for_each(|r| fwd.push(*r));
        let mut lo = IfsAccumulator::default();
        let mut hi = IfsAccumulator::default();
        results[10..].iter().rev().for_each(|r| hi.push(*r));
        results[..10].iter().for_each(|r| lo.push(*r));
        assert_eq!(fwd.finish(100.0), hi.merge(lo).finish(100.0));
    }

    #[test]
    fn exact_bound_and_statistics() {
        let cfg = small(1);
        let (stats, rs) = monte_carlo_detailed(&cfg).unwrap();
        assert_eq!(stats.bound_violations, 0);
        for r in &rs {
            assert!(r.k_m <= r.m);
            assert!(r.delta_2m >= 5.0 * r.k_m as f64 - 2.0 * r.m as f64);
        }
        assert!(stats.min_mixed_pair_gain.unwrap() >= 3.0);
        assert!(stats.min_unmixed_pair_gain.unwrap() >= -2.0);
        let m = cfg.m() as f64;
        let sigma = (0.5f64 * (1.0 - 0.5) / m).sqrt();
        assert!((stats.mean_k_over_m - 0.5).abs() <= 3.0 * sigma);
        assert!(recurrence_from_stats(&stats, &cfg.bounds()).holds);
    }

    #[test]
    fn recurrence_with_larger_expansion() {
        let cfg = IfsConfig { a: 8.0, ..small(2) };
        let r = expectation_recurrence_check(&cfg).unwrap();
        assert_eq!(r.k_bound, 2.0);
        assert!(r.holds, "{r:?}");
    }

    #[test]
    fn inadmissible_runs_are_allowed() {
        let cfg = IfsConfig { a: 3.0, ..small(4) };
        assert_eq!(cfg.bounds().status, Admissibility::Inadmissible);
        let stats = monte_carlo(&cfg).unwrap();
        assert_eq!(stats.bound_violations, 0);
        // The pair bound is far from sharp: typical orbits still escape at a = 3.
        assert!(stats.mean_slope > 1.0, "{}", stats.mean_slope);
        let weak = IfsConfig { a: 1.0, ..small(4) };
        let stats = monte_carlo(&weak).unwrap();
        assert_eq!(stats.escape_fraction, 0.0);
        assert!(stats.mean_slope < 0.0);
    }

    #[test]
    fn config_validation() {
        let bad = |c: IfsConfig| c.profiles().unwrap_err();
        assert_eq!(
            bad(IfsConfig { p: 1.0, ..small(0) }),
            IfsError::BadProbability(1.0)
        );
        assert_eq!(
            bad(IfsConfig {
                horizon: 3,
                ..small(0)
            }),
            IfsError::BadHorizon(3)
        );
        assert_eq!(
            bad(IfsConfig {
                n_sequences: 0,
                ..small(0)
            }),
            IfsError::NoSequences
        );
        assert_eq!(
            bad(IfsConfig {
                a: -1.0,
                ..small(0)
            }),
            IfsError::BadExpansion(-1.0)
        );
        assert!(matches!(
            bad(IfsConfig { w: 0.3, ..small(0) }),
            IfsError::Profile(_)
        ));
    }

    #[test]
    fn config_json_defaults() {
        let c: IfsConfig = serde_json::from_str(
            r#"{"p":0.5,"a":5.0,"w":0.125,"d":0.25,"seed":1,"horizon":2000,"n_sequences":1000}"#,
        )
        .unwrap();
        assert_eq!(c, IfsConfig::default());
    }
}
