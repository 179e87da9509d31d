//! Directional deviation profiles `D(n) = max_z ⟨Δ^{(n)}(z), v⟩ − nα` and
//! the `v ↔ −v` symmetry check.
//!
//! One scan over the sample grid yields the per-`n` maxima and minima of
//! `⟨Δ^{(n)}, v⟩ − nα`; the minima give the profile of `(−v, −α)` for free.
//! Verdicts are heuristics on finite data and are labeled as such.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;
use crate::parallel::try_par_map;
use crate::torus_maps::{CocycleWalker, LiftedTorusMap, MapError, OrbitClasses};

pub const DEFAULT_PLATEAU_THRESHOLD: f64 = 0.01;
pub const DEFAULT_SLOPE_THRESHOLD: f64 = 0.05;
/// Sandwich constant between the `v` and `−v` deviation bounds.
pub const SANDWICH_CONSTANT: f64 = std::f64::consts::SQRT_2;

/// Orbits per work unit in the deviation scan.
const CHUNK: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeviationError {
    #[error("direction must be a non-zero finite vector, got {0:?}")]
    InvalidDirection(Vec2),
    #[error("horizon {n} exceeds the cap {cap}")]
    HorizonTooLarge { n: u64, cap: u64 },
    #[error("grid resolution must be positive")]
    InvalidResolution,
    #[error("sandwich violated: |{gap_plus} - {gap_minus}| > {bound}")]
    SandwichViolated { gap_plus: f64, gap_minus: f64, bound: f64 },
    #[error(transparent)]
    Map(#[from] MapError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Bounded,
    Growing,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: u64,
    pub running_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationProfile {
    pub v: Vec2,
    pub alpha: f64,
    pub horizon: u64,
    pub resolution: usize,
    /// `D(n)` for `n = −N..=N` (index `n + N`).
    pub d: Vec<f64>,
    /// `M(k) = max_{|n| ≤ k} D(n)` for `k = 0..=N`.
    pub running_max: Vec<f64>,
    pub checkpoints: Vec<Checkpoint>,
    pub verdict: Verdict,
    /// Least-squares slope of `M` against `ln k` over the last half of the
    /// checkpoints.
    pub growth_statistic: f64,
    /// Relative increase of `M` over the last half of the checkpoints.
    pub plateau_increase: f64,
}

impl DeviationProfile {
    pub fn d_at(&self, n: i64) -> f64 {
        self.d[(n + self.horizon as i64) as usize]
    }

    /// `M(N)`.
    pub fn sup(&self) -> f64 {
        *self.running_max.last().expect("M(0) always present")
    }

    /// Rows `(n, D(n), M(|n|))` in increasing `n`.
    pub fn rows(&self) -> impl Iterator<Item = (i64, f64, f64)> + '_ {
        let big_n = self.horizon as i64;
        self.d.iter().enumerate().map(move |(i, &d)| {
            let n = i as i64 - big_n;
            (n, d, self.running_max[n.unsigned_abs() as usize])
        })
    }
}

/// Per-`n` extrema of `⟨Δ^{(n)}, v⟩ − nα`, index `n + N`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviationExtrema {
    pub horizon: u64,
    pub max: Vec<f64>,
    pub min: Vec<f64>,
}

fn lattice(grid_res: usize) -> impl Iterator<Item = Vec2> {
    let res = grid_res as f64;
    (0..grid_res).flat_map(move |j| (0..grid_res).map(move |i| Vec2::new((i as f64 + 0.5) / res, (j as f64 + 0.5) / res)))
}

fn check_inputs(map: &LiftedTorusMap, v: Vec2, grid_res: usize, n: u64) -> Result<(), DeviationError> {
    if !(v.is_finite() && v.norm() > 0.0) {
        return Err(DeviationError::InvalidDirection(v));
    }
    if grid_res == 0 {
        return Err(DeviationError::InvalidResolution);
    }
    if n > map.horizon_cap() {
        return Err(DeviationError::HorizonTooLarge { n, cap: map.horizon_cap() });
    }
    Ok(())
}

/// Scans `n = −N..=N` over the half-cell-offset `grid_res²` lattice.
pub fn deviation_extrema(
    map: &LiftedTorusMap,
    v: Vec2,
    alpha: f64,
    grid_res: usize,
    big_n: u64,
) -> Result<DeviationExtrema, DeviationError> {
    check_inputs(map, v, grid_res, big_n)?;
    let classes = OrbitClasses::new(map, lattice(grid_res));
    let len = 2 * big_n as usize + 1;
    let chunks: Vec<&[Vec2]> = classes.representatives.chunks(CHUNK).collect();
    let partial = try_par_map(&chunks, |chunk| -> Result<(Vec<f64>, Vec<f64>), MapError> {
        let mut hi = vec![f64::NEG_INFINITY; len];
        let mut lo = vec![f64::INFINITY; len];
        for &z in chunk.iter() {
            hi[big_n as usize] = hi[big_n as usize].max(0.0);
            lo[big_n as usize] = lo[big_n as usize].min(0.0);
            for forward in [true, false] {
                let mut walker = CocycleWalker::new(map, z, forward);
                for k in 1..=big_n {
                    let n = if forward { k as i64 } else { -(k as i64) };
                    let g = walker.step()?.dot(v) - n as f64 * alpha;
                    let idx = (n + big_n as i64) as usize;
                    hi[idx] = hi[idx].max(g);
                    lo[idx] = lo[idx].min(g);
                }
            }
        }
        Ok((hi, lo))
    })?;
    let mut max = vec![f64::NEG_INFINITY; len];
    let mut min = vec![f64::INFINITY; len];
    for (hi, lo) in &partial {
        for i in 0..len {
            max[i] = max[i].max(hi[i]);
            min[i] = min[i].min(lo[i]);
        }
    }
    Ok(DeviationExtrema { horizon: big_n, max, min })
}

/// Powers of two up to `N`, then `N`.
pub fn checkpoint_indices(big_n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut k = 1u64;
    while k < big_n {
        out.push(k);
        k *= 2;
    }
    if big_n >= 1 {
        out.push(big_n);
    }
    out
}

fn profile_from(v: Vec2, alpha: f64, resolution: usize, horizon: u64, d: Vec<f64>) -> DeviationProfile {
    let big_n = horizon as usize;
    let mut running_max = Vec::with_capacity(big_n + 1);
    let mut m = d[big_n];
    running_max.push(m);
    for k in 1..=big_n {
        m = m.max(d[big_n + k]).max(d[big_n - k]);
        running_max.push(m);
    }
    let checkpoints = checkpoint_indices(horizon).into_iter().map(|n| Checkpoint { n, running_max: running_max[n as usize] }).collect();
    let mut profile = DeviationProfile {
        v,
        alpha,
        horizon,
        resolution,
        d,
        running_max,
        checkpoints,
        verdict: Verdict::Inconclusive,
        growth_statistic: 0.0,
        plateau_increase: 0.0,
    };
    let (verdict, slope, inc) = boundedness_verdict(&profile, DEFAULT_PLATEAU_THRESHOLD, DEFAULT_SLOPE_THRESHOLD);
    profile.verdict = verdict;
    profile.growth_statistic = slope;
    profile.plateau_increase = inc;
    profile
}

pub fn deviation_profile(
    map: &LiftedTorusMap,
    v: Vec2,
    alpha: f64,
    grid_res: usize,
    big_n: u64,
) -> Result<DeviationProfile, DeviationError> {
    let ext = deviation_extrema(map, v, alpha, grid_res, big_n)?;
    Ok(profile_from(v, alpha, grid_res, big_n, ext.max))
}

/// Both orientations from one scan: the profile for `(v, α)` and for
/// `(−v, −α)`.
pub fn deviation_profile_pair(
    map: &LiftedTorusMap,
    v: Vec2,
    alpha: f64,
    grid_res: usize,
    big_n: u64,
) -> Result<(DeviationProfile, DeviationProfile), DeviationError> {
    let ext = deviation_extrema(map, v, alpha, grid_res, big_n)?;
    Ok(profiles_from_extrema(&ext, v, alpha, grid_res))
}

/// The `(v, α)` and `(−v, −α)` profiles of a finished scan.
pub fn profiles_from_extrema(ext: &DeviationExtrema, v: Vec2, alpha: f64, grid_res: usize) -> (DeviationProfile, DeviationProfile) {
    let minus: Vec<f64> = ext.min.iter().map(|x| -x).collect();
    (profile_from(v, alpha, grid_res, ext.horizon, ext.max.clone()), profile_from(-v, -alpha, grid_res, ext.horizon, minus))
}

/// Returns `(verdict, slope, relative plateau increase)`. Bounded when `M`
/// rises by less than `plateau` (relative) over the last half of the
/// checkpoints; growing when the slope of `M` against `ln k` there exceeds
/// `slope_threshold`.
pub fn boundedness_verdict(profile: &DeviationProfile, plateau: f64, slope_threshold: f64) -> (Verdict, f64, f64) {
    let cps = &profile.checkpoints;
    if cps.len() < 3 {
        return (Verdict::Inconclusive, 0.0, 0.0);
    }
    let tail = &cps[cps.len() / 2..];
    let first = tail[0].running_max;
    let last = tail[tail.len() - 1].running_max;
    let increase = (last - first) / first.abs().max(1e-12);
    let xs: Vec<f64> = tail.iter().map(|c| (c.n as f64).ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|c| c.running_max).collect();
    let slope = least_squares_slope(&xs, &ys);
    let verdict = if increase < plateau {
        Verdict::Bounded
    } else if slope > slope_threshold {
        Verdict::Growing
    } else {
        Verdict::Inconclusive
    };
    (verdict, slope, increase)
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

/// Finite-horizon allowance `2·sup|Δ|/√N` added to the sandwich constant.
pub fn default_slack(map: &LiftedTorusMap, big_n: u64) -> f64 {
    2.0 * map.sup_norm_bound() / (big_n.max(1) as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryGap {
    pub gap_plus: f64,
    pub gap_minus: f64,
    pub slack: f64,
    /// `√2 + slack`.
    pub bound: f64,
}

/// Sup-deviations in directions `v` and `−v`, checked against the `√2`
/// sandwich.
pub fn symmetry_gap(
    map: &LiftedTorusMap,
    v: Vec2,
    alpha: f64,
    grid_res: usize,
    big_n: u64,
    slack: Option<f64>,
) -> Result<SymmetryGap, DeviationError> {
    let (plus, minus) = deviation_profile_pair(map, v, alpha, grid_res, big_n)?;
    gap_from_profiles(&plus, &minus, slack.unwrap_or_else(|| default_slack(map, big_n)))
}

pub fn gap_from_profiles(plus: &DeviationProfile, minus: &DeviationProfile, slack: f64) -> Result<SymmetryGap, DeviationError> {
    let gap = SymmetryGap { gap_plus: plus.sup(), gap_minus: minus.sup(), slack, bound: SANDWICH_CONSTANT + slack };
    if (gap.gap_plus - gap.gap_minus).abs() > gap.bound {
        return Err(DeviationError::SandwichViolated { gap_plus: gap.gap_plus, gap_minus: gap.gap_minus, bound: gap.bound });
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;

    use super::*;
    use crate::torus_maps::{MapFamily, TrigPoly1, GOLDEN_MEAN};

    fn skew_half() -> LiftedTorusMap {
        MapFamily::Skew { base: 0.5, forcing: TrigPoly1::cosine(2, 1.0) }.build().unwrap()
    }

    fn coboundary() -> LiftedTorusMap {
        MapFamily::CoboundarySkew { base: GOLDEN_MEAN, transfer: TrigPoly1::sine(1, 1.0) }.build().unwrap()
    }

    fn synthetic(running: &[(u64, f64)]) -> DeviationProfile {
        DeviationProfile {
            v: Vec2::new(0.0, 1.0),
            alpha: 0.0,
            horizon: running.last().unwrap().0,
            resolution: 1,
            d: vec![],
            running_max: vec![],
            checkpoints: running.iter().map(|&(n, m)| Checkpoint { n, running_max: m }).collect(),
            verdict: Verdict::Inconclusive,
            growth_statistic: 0.0,
            plateau_increase: 0.0,
        }
    }

    #[test]
    fn translation_profile_is_zero() {
        let m = LiftedTorusMap::translation(Vec2::new(0.3, 0.7));
        let p = deviation_profile(&m, Vec2::new(0.0, 1.0), 0.7, 16, 10_000).unwrap();
        assert_eq!(p.d_at(0), 0.0);
        assert!(p.d.iter().all(|d| d.abs() < 1e-9), "{}", p.d.iter().fold(0.0f64, |a, d| a.max(d.abs())));
        assert_eq!(p.verdict, Verdict::Bounded);
    }

    #[test]
    fn skew_along_carrier_is_exactly_zero() {
        let p = deviation_profile(&skew_half(), Vec2::new(1.0, 0.0), 0.5, 32, 200).unwrap();
        assert!(p.d.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn skew_transverse_grows_linearly() {
        let p = deviation_profile(&skew_half(), Vec2::new(0.0, 1.0), 0.0, 64, 1024).unwrap();
        // Δ^{(n)}_y = n·cos(4πx) on the half-offset lattice, maximal at x = 1/128
        let peak = (2.0 * TAU / 128.0).cos();
        assert!((p.d_at(1024) - 1024.0 * peak).abs() < 1e-9);
        assert_eq!(p.verdict, Verdict::Growing);
    }

    #[test]
    fn coboundary_profile_matches_direct_scan() {
        let n_max = 2000u64;
        let res = 64;
        let p = deviation_profile(&coboundary(), Vec2::new(0.0, 1.0), 0.0, res, n_max).unwrap();
        // independent oracle: telescoped Birkhoff sums on the same lattice
        let mut m = 0.0f64;
        for n in -(n_max as i64)..=(n_max as i64) {
            let mut d = f64::NEG_INFINITY;
            for i in 0..res {
                let x = (i as f64 + 0.5) / res as f64;
                d = d.max((TAU * (x + n as f64 * GOLDEN_MEAN)).sin() - (TAU * x).sin());
            }
            assert!((d - p.d_at(n)).abs() < 1e-9, "n={n}");
            m = m.max(d);
        }
        assert!((p.sup() - m).abs() < 1e-9);
        assert!(p.sup() <= 2.0);
        assert_eq!(p.verdict, Verdict::Bounded);
    }

    #[test]
    fn coboundary_sup_reaches_two_at_long_horizon() {
        let g = symmetry_gap(&coboundary(), Vec2::new(0.0, 1.0), 0.0, 64, 10_000, None).unwrap();
        assert!((1.9..=2.0).contains(&g.gap_plus), "{g:?}");
        assert!((1.9..=2.0).contains(&g.gap_minus), "{g:?}");
        assert!((g.gap_plus - g.gap_minus).abs() <= 0.1);
    }

    #[test]
    fn translation_gap_is_zero() {
        let m = LiftedTorusMap::translation(Vec2::new(0.3, 0.7));
        let g = symmetry_gap(&m, Vec2::new(0.0, 1.0), 0.7, 8, 100, None).unwrap();
        assert!(g.gap_plus.abs() < 1e-12 && g.gap_minus.abs() < 1e-12);
        assert!((SANDWICH_CONSTANT * SANDWICH_CONSTANT - 2.0).abs() < 1e-15);
    }

    #[test]
    fn sandwich_violation_reported() {
        let plus = synthetic(&[(1, 0.0)]);
        let mut plus = DeviationProfile { running_max: vec![5.0], ..plus };
        plus.horizon = 0;
        let minus = DeviationProfile { running_max: vec![0.0], ..plus.clone() };
        assert!(matches!(gap_from_profiles(&plus, &minus, 0.1), Err(DeviationError::SandwichViolated { .. })));
    }

    #[test]
    fn verdict_thresholds() {
        let flat = synthetic(&[(1, 1.0), (2, 1.5), (4, 2.0), (8, 2.0), (16, 2.001)]);
        assert_eq!(boundedness_verdict(&flat, 0.01, 0.05).0, Verdict::Bounded);
        let noisy = synthetic(&[(1, 1.0), (2, 1.0), (4, 1.02)]);
        let (v, slope, inc) = boundedness_verdict(&noisy, 0.01, 0.05);
        assert!(inc >= 0.01 && slope <= 0.05);
        assert_eq!(v, Verdict::Inconclusive);
        let short = synthetic(&[(1, 1.0), (2, 5.0)]);
        assert_eq!(boundedness_verdict(&short, 0.01, 0.05).0, Verdict::Inconclusive);
    }

    #[test]
    fn checkpoints_end_at_horizon() {
        assert_eq!(checkpoint_indices(10), vec![1, 2, 4, 8, 10]);
        assert_eq!(checkpoint_indices(8), vec![1, 2, 4, 8]);
        assert!(checkpoint_indices(0).is_empty());
    }

    #[test]
    fn deviation_subadditive() {
        for (m, v, a) in [
            (skew_half(), Vec2::new(1.0, 0.0), 0.5),
            (skew_half(), Vec2::new(0.0, 1.0), 0.0),
            (LiftedTorusMap::translation(Vec2::new(0.3, 0.7)), Vec2::new(0.0, 1.0), 0.7),
        ] {
            let p = deviation_profile(&m, v, a, 32, 60).unwrap();
            for i in -30i64..=30 {
                for j in -30i64..=30 {
                    assert!(p.d_at(i + j) <= p.d_at(i) + p.d_at(j) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn invalid_inputs() {
        let m = skew_half();
        assert!(deviation_profile(&m, Vec2::ZERO, 0.0, 8, 10).is_err());
        assert!(deviation_profile(&m, Vec2::new(0.0, 1.0), 0.0, 0, 10).is_err());
        assert!(deviation_profile(&m.clone().with_horizon_cap(5), Vec2::new(0.0, 1.0), 0.0, 8, 10).is_err());
    }
}
