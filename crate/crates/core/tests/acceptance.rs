//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

use std::collections::BTreeMap;
use std::error::Error;
use std::f64::consts::{SQRT_2, TAU};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rotdev::cli::RunConfig;
use rotdev::deviations::{default_slack, deviation_extrema, profiles_from_extrema, Verdict};
use rotdev::grid::{Grid, Window};
use rotdev::pseudofoliation::{certify, default_levels, extract_leaves, level_function, LevelOptions};
use rotdev::rotation_set::{estimate_rotation_set, fit_direction, Carrier, Classification, RotationSetEstimate, RotationSetOptions};
use rotdev::skew_product::{CentralizedSkewProduct, CocyclePath};
use rotdev::stable_sets::{
    auto_half_width, coverage_fraction, equivariance_residual, strip_escape_check, Equivariance, EscapeStatus, FiberScan,
    FiniteHorizonStableSet, Sidedness, DEFAULT_CAP_FRACTION,
};
use rotdev::torus_maps::{liouville_number, GOLDEN_MEAN};
use rotdev::{LiftedTorusMap, MapFamily, TrigPoly1, Vec2};

type Res<T> = Result<T, Box<dyn Error>>;

const DEV_GRID: usize = 256;
const DEV_HORIZON: u64 = 10_000;
const TRANSLATION_TOL: f64 = 1e-12;
const TRANSLATION_RUNTIME_S: f64 = 10.0;
const COBOUNDARY_M: (f64, f64) = (1.9, 2.0);
const COBOUNDARY_RUNTIME_S: f64 = 300.0;
const LAYER_TOL: f64 = 1.5;
const PATH_TOL: f64 = 1e-10;
const PATH_SIDE: usize = 16;
const PATH_MAX_N: i64 = 1000;
const LIOUVILLE_TERMS: u32 = 6;
const LIOUVILLE_MARGIN: f64 = 1.0;
const COVERAGE_R_MIN: f64 = -100.0;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Res<Outcome> {
    Ok(Outcome { passed, detail })
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

/// Every bundled config, sorted by file name.
fn bundled() -> Res<Vec<(String, PathBuf, RunConfig)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(configs_dir())? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "cfg") {
            let name = path.file_stem().unwrap().to_string_lossy().into_owned();
            let cfg = RunConfig::load(&path)?;
            out.push((name, path, cfg));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

fn rotset_options(cfg: &RunConfig) -> RotationSetOptions {
    RotationSetOptions { point_tol: cfg.rotset.point_tol, line_tol: cfg.rotset.line_tol, default_direction: cfg.rotset.direction }
}

fn rotation_set(map: &LiftedTorusMap, cfg: &RunConfig) -> Res<(RotationSetEstimate, Carrier)> {
    let opts = rotset_options(cfg);
    let est = estimate_rotation_set(map, cfg.rotset.grid_res, &cfg.rotset.horizons, &opts)?;
    let carrier = fit_direction(&est, opts.default_direction, opts.line_tol)?;
    Ok((est, carrier))
}

fn coboundary_family() -> MapFamily {
    MapFamily::CoboundarySkew { base: GOLDEN_MEAN, transfer: TrigPoly1::sine(1, 1.0) }
}

fn vertical() -> Vec2 {
    Vec2::new(0.0, 1.0)
}

fn scan(v: Vec2, horizon: u64, half_width: f64, resolution: usize) -> Res<FiberScan> {
    Ok(FiberScan::new(Vec2::ZERO, v, horizon, Window::new(Vec2::ZERO, half_width, resolution)?, Sidedness::TwoSided))
}

fn translation_baseline() -> Res<Outcome> {
    let start = Instant::now();
    let alpha = Vec2::new(0.3, 0.7);
    let family = MapFamily::Translation { alpha };
    let map = family.build()?;
    let opts = RotationSetOptions::default();
    let est = estimate_rotation_set(&map, DEV_GRID, &[100, 1000], &opts)?;
    let hull_err = est.hull.iter().map(|p| (*p - alpha).max_abs()).fold(0.0, f64::max);
    let point = est.classification == Classification::Point && hull_err <= TRANSLATION_TOL;

    let v = vertical();
    let ext = deviation_extrema(&map, v, alpha.dot(v), DEV_GRID, DEV_HORIZON)?;
    let dev = ext.max.iter().chain(&ext.min).map(|d| d.abs()).fold(0.0, f64::max);
    let zero = dev <= TRANSLATION_TOL;

    let sp = CentralizedSkewProduct::build(&map, alpha)?;
    let s = scan(v, 1000, auto_half_width(0.0), 512)?;
    let mut mismatched = 0;
    for r in [-3.0, 0.0, 2.5] {
        let set = FiniteHorizonStableSet::compute(&sp, &s, r, DEFAULT_CAP_FRACTION)?;
        let half_plane = Grid::from_fn(s.window.resolution, |i, j| s.window.cell_center(i, j).dot(v) >= r);
        mismatched += set.infinity.mask.symmetric_difference_count(&half_plane);
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        point && zero && mismatched == 0 && elapsed < TRANSLATION_RUNTIME_S,
        format!("hull error {hull_err:.1e} ({:?}), max |D| {dev:.1e}, mismatched cells {mismatched}, {elapsed:.1}s", est.classification),
    )
}

fn sandwich() -> Res<Outcome> {
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, _, cfg) in bundled()? {
        let map = cfg.map.build()?;
        let (_, carrier) = rotation_set(&map, &cfg)?;
        let ext = deviation_extrema(&map, carrier.v, carrier.alpha, DEV_GRID, DEV_HORIZON)?;
        let (plus, minus) = profiles_from_extrema(&ext, carrier.v, carrier.alpha, DEV_GRID);
        let gap = (plus.sup() - minus.sup()).abs();
        let bound = SQRT_2 + default_slack(&map, DEV_HORIZON);
        ok &= gap <= bound;
        parts.push(format!("{name} {gap:.2e}/{bound:.3}"));
    }
    outcome(ok, format!("|gap+ - gap-| / bound: {}", parts.join(", ")))
}

/// `max_{x, |n| ≤ N} ψ(x + na) − ψ(x)` for `ψ = sin 2π·`, over the deviation lattice.
fn telescoped_bound(a: f64, grid: usize, big_n: u64) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..grid {
        let x = (i as f64 + 0.5) / grid as f64;
        let s0 = (TAU * x).sin();
        for n in -(big_n as i64)..=big_n as i64 {
            let shifted = (x + (n as f64 * a).rem_euclid(1.0)).rem_euclid(1.0);
            best = best.max((TAU * shifted).sin() - s0);
        }
    }
    best
}

fn coboundary_oracle() -> Res<Outcome> {
    let start = Instant::now();
    let map = coboundary_family().build()?;
    let v = vertical();
    let rho = Vec2::new(GOLDEN_MEAN, 0.0);
    let ext = deviation_extrema(&map, v, 0.0, DEV_GRID, DEV_HORIZON)?;
    let (plus, _) = profiles_from_extrema(&ext, v, 0.0, DEV_GRID);
    let m = plus.sup();
    let oracle = telescoped_bound(GOLDEN_MEAN, DEV_GRID, DEV_HORIZON);
    let m_ok = (COBOUNDARY_M.0..=COBOUNDARY_M.1).contains(&m) && (m - oracle).abs() <= 1e-9;

    let sp = CentralizedSkewProduct::build(&map, rho)?;
    let s = scan(v, 1000, auto_half_width(m), 512)?;
    let h = s.window.cell_size();
    let set = FiniteHorizonStableSet::compute(&sp, &s, 0.0, DEFAULT_CAP_FRACTION)?;
    let mut missing = 0;
    let mut stray = 0;
    for idx in 0..s.window.len() {
        let y = s.window.cell_center_at(idx).dot(v);
        let inside = set.infinity.mask.as_slice()[idx];
        missing += usize::from(y >= 2.0 + h && !inside);
        stray += usize::from(y < -2.0 && inside);
    }

    let opts = LevelOptions::covering(&s.window, v, m);
    let chart = level_function(&sp, &s, &opts)?;
    let leaves = extract_leaves(&chart, &default_levels(&chart, 4, 1.0))?;
    let border = s.window.half_width - 2.0 * h;
    let mut leaf_err: f64 = 0.0;
    for leaf in &leaves {
        let offs: Vec<f64> = leaf.points().filter(|p| p.x.abs() < border).map(|p| p.y - (TAU * p.x).sin()).collect();
        if offs.is_empty() {
            leaf_err = f64::INFINITY;
            continue;
        }
        let lo = offs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = offs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        leaf_err = leaf_err.max((hi - lo) / 2.0);
    }
    let leaf_tol = 2.0 * h + opts.eps_r;
    let cert = certify(&chart, &leaves, &map, rho, 200)?;
    let eq_tol = 2.0 * opts.eps_r + 2.0 * h;
    let eq = cert.equivariance.max;
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        m_ok && missing == 0 && stray == 0 && leaf_err <= leaf_tol && eq <= eq_tol && elapsed < COBOUNDARY_RUNTIME_S,
        format!(
            "M {m:.4} (oracle {oracle:.4}), missing {missing}, stray {stray}, leaf distance {leaf_err:.2e}/{leaf_tol:.2e}, \
             equivariance max {eq:.2e} rms {:.2e}/{eq_tol:.2e}, {elapsed:.1}s",
            cert.equivariance.rms
        ),
    )
}

/// Skew-product, direction and stable-set scan of a bundled config.
fn prepared(cfg: &RunConfig) -> Res<(CentralizedSkewProduct, FiberScan)> {
    let map = cfg.map.build()?;
    let (est, carrier) = rotation_set(&map, cfg)?;
    let ext = deviation_extrema(&map, carrier.v, carrier.alpha, cfg.deviation.grid_res, cfg.deviation.horizon)?;
    let (plus, minus) = profiles_from_extrema(&ext, carrier.v, carrier.alpha, cfg.deviation.grid_res);
    let half = auto_half_width(plus.sup().max(minus.sup()));
    let sp = CentralizedSkewProduct::build(&map, est.rho_tilde())?;
    let ss = &cfg.stableset;
    Ok((sp, scan(carrier.v, ss.horizon, half, ss.resolution)?))
}

fn equivariance_suite() -> Res<Outcome> {
    let mut parts = Vec::new();
    let mut ok = true;
    for name in ["coboundary", "generic"] {
        let cfg = RunConfig::load(&configs_dir().join(format!("{name}.cfg")))?;
        let (sp, s) = prepared(&cfg)?;
        let cap = cfg.stableset.cap_fraction;
        let (mut inclusion, mut horizon, mut conj, mut shift) = (0.0f64, 0usize, 0.0f64, 0.0f64);
        for r in [-0.5, 0.0, 0.5] {
            inclusion = inclusion.max(equivariance_residual(&sp, &s, r, cap, Equivariance::MonotoneInclusion { s: r - 0.5 })?);
            let long = FiniteHorizonStableSet::compute(&sp, &s, r, cap)?;
            let short = FiniteHorizonStableSet::compute(&sp, &FiberScan { horizon: s.horizon / 2, ..s }, r, cap)?;
            horizon += long.infinity.mask.and_not(&short.infinity.mask).count();
            for a in [-0.75, 0.25, 1.5] {
                for b in [-1.25, 0.5, 0.75] {
                    let t_lift = Vec2::new(a, b);
                    conj = conj.max(equivariance_residual(&sp, &s, r, cap, Equivariance::Conjugation { t_lift })?);
                }
            }
            for p in [-1, 1, 2] {
                for q in [-2, 1, 3] {
                    shift = shift.max(equivariance_residual(&sp, &s, r, cap, Equivariance::IntegerTranslation { p: [p, q] })?);
                }
            }
        }
        ok &= inclusion == 0.0 && horizon == 0 && conj <= LAYER_TOL && shift <= LAYER_TOL;
        parts.push(format!("{name}: inclusion {inclusion}, horizon {horizon}, conjugation {conj:.3}, translation {shift:.3}"));
    }
    outcome(ok, parts.join("; "))
}

fn path_equivalence() -> Res<Outcome> {
    let mut parts = Vec::new();
    let mut ok = true;
    let side = PATH_SIDE as f64;
    for (name, _, cfg) in bundled()? {
        let map = cfg.map.build()?;
        let (est, _) = rotation_set(&map, &cfg)?;
        let sp = CentralizedSkewProduct::build(&map, est.rho_tilde())?;
        let (mut gap, mut identity) = (0.0f64, 0.0f64);
        for a in 0..PATH_SIDE {
            let t = Vec2::new((a as f64 + 0.5) / side, (a as f64 * 7.0 % side + 0.25) / side);
            for b in 0..PATH_SIDE {
                let z = Vec2::new(b as f64 / side * 6.0 - 3.0, (b as f64 * 5.0 % side) / side * 6.0 - 3.0);
                for c in 0..PATH_SIDE {
                    let mag = PATH_MAX_N * (c / 2 + 1) as i64 / (PATH_SIDE / 2) as i64;
                    let n = if c % 2 == 0 { mag } else { -mag };
                    let closed = sp.fiber_cocycle(t, z, n, CocyclePath::ClosedForm)?;
                    let step = sp.fiber_cocycle(t, z, n, CocyclePath::Stepwise)?;
                    gap = gap.max((closed - step).max_abs());
                    identity = identity.max(sp.displacement_identity_residual(t, z, n)?);
                }
            }
        }
        ok &= gap <= PATH_TOL && identity <= PATH_TOL;
        parts.push(format!("{name} {gap:.1e}/{identity:.1e}"));
    }
    outcome(ok, format!("path gap/identity residual: {}", parts.join(", ")))
}

/// Running sup of the Birkhoff sums of `sin 2π·` over an irrational
/// rotation, summed term by term, at horizons `checkpoints`.
fn direct_summation(a: f64, grid: usize, checkpoints: &[u64]) -> Vec<f64> {
    let big_n = *checkpoints.last().unwrap();
    let mut best = vec![0.0f64; checkpoints.len()];
    for i in 0..grid {
        let x = (i as f64 + 0.5) / grid as f64;
        for sign in [1.0, -1.0] {
            let (mut sum, mut comp, mut running) = (0.0f64, 0.0f64, 0.0f64);
            let mut next = 0;
            for k in 1..=big_n {
                // forward sums add φ(x + (k−1)a); backward sums subtract φ(x − ka)
                let (shift, weight) = if sign > 0.0 { ((k - 1) as f64, 1.0) } else { (-(k as f64), -1.0) };
                let term = weight * (TAU * (x + (shift * a).rem_euclid(1.0))).sin();
                let y = term - comp;
                let tot = sum + y;
                comp = (tot - sum) - y;
                sum = tot;
                running = running.max(sum);
                if k == checkpoints[next] {
                    best[next] = best[next].max(running);
                    next += 1;
                }
            }
        }
    }
    best
}

fn liouville_growth() -> Res<Outcome> {
    let a = liouville_number(LIOUVILLE_TERMS);
    let map = MapFamily::Skew { base: a, forcing: TrigPoly1::sine(1, 1.0) }.build()?;
    let v = vertical();
    let ext = deviation_extrema(&map, v, 0.0, DEV_GRID, DEV_HORIZON)?;
    let (plus, _) = profiles_from_extrema(&ext, v, 0.0, DEV_GRID);
    let (m_small, m_big) = (plus.running_max[100], plus.running_max[DEV_HORIZON as usize]);
    let oracle = direct_summation(a, DEV_GRID, &[100, DEV_HORIZON]);
    let grows = plus.verdict == Verdict::Growing && m_big > m_small + LIOUVILLE_MARGIN;
    let oracle_grows = oracle[1] > oracle[0] + LIOUVILLE_MARGIN;

    let sp = CentralizedSkewProduct::build(&map, Vec2::new(a, 0.0))?;
    let s = scan(v, 2000, 16.0, 256)?;
    let set = FiniteHorizonStableSet::compute(&sp, &s, 0.0, DEFAULT_CAP_FRACTION)?;
    let escape = strip_escape_check(&set.infinity.mask, v, &s.window, &[2.0], plus.verdict);
    let escaped = escape.results.iter().all(|e| e.status == EscapeStatus::Escaped);
    outcome(
        grows && oracle_grows && escaped,
        format!(
            "alpha {a:.17}, verdict {:?}, M(1e2) {m_small:.4}, M(1e4) {m_big:.4}, oracle {:.4} -> {:.4}, escape {:?}",
            plus.verdict, oracle[0], oracle[1], escape.results[0].status
        ),
    )
}

fn density() -> Res<Outcome> {
    let mut parts = Vec::new();
    let mut ok = true;
    let v = vertical();
    let translation = MapFamily::Translation { alpha: Vec2::new(0.3, 0.7) };
    for (name, family, rho) in
        [("translation", translation, Vec2::new(0.3, 0.7)), ("coboundary", coboundary_family(), Vec2::new(GOLDEN_MEAN, 0.0))]
    {
        let sp = CentralizedSkewProduct::build(&family.build()?, rho)?;
        let s = scan(v, 1000, 8.0, 256)?;
        let cov = coverage_fraction(&sp, &s, COVERAGE_R_MIN, DEFAULT_CAP_FRACTION)?;
        ok &= cov == 1.0;
        parts.push(format!("{name} {cov}"));
    }
    outcome(ok, format!("coverage: {}", parts.join(", ")))
}

fn snapshot(dir: &Path) -> Res<BTreeMap<PathBuf, Vec<u8>>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir)?.to_path_buf(), fs::read(&path)?);
            }
        }
    }
    Ok(out)
}

fn run_cli(config: &Path, out: &Path, threads: &str) -> Res<BTreeMap<PathBuf, Vec<u8>>> {
    for sub in ["verify", "render"] {
        let status = Command::new(env!("CARGO_BIN_EXE_rotdev"))
            .args([sub, "--config"])
            .arg(config)
            .arg("--out")
            .arg(out)
            .env("RD_THREADS", threads)
            .env("RUST_LOG", "warn")
            .status()?;
        if !status.success() {
            return Err(format!("rotdev {sub} on {} exited with {status}", config.display()).into());
        }
    }
    snapshot(out)
}

fn determinism() -> Res<Outcome> {
    let tmp = tempfile::tempdir()?;
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, path, _) in bundled()? {
        let runs = [("1", "a"), ("1", "b"), ("8", "c")]
            .iter()
            .map(|(threads, tag)| run_cli(&path, &tmp.path().join(format!("{name}_{tag}")), threads))
            .collect::<Res<Vec<_>>>()?;
        let same = runs.windows(2).all(|w| w[0] == w[1]);
        ok &= same;
        parts.push(format!("{name} {} files {}", runs[0].len(), if same { "identical" } else { "DIFFER" }));
    }
    outcome(ok, parts.join(", "))
}

type Criterion = fn() -> Res<Outcome>;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 8] = [
        ("translation baseline", translation_baseline),
        ("sqrt2 sandwich", sandwich),
        ("coboundary oracle", coboundary_oracle),
        ("equivariance suite", equivariance_suite),
        ("cocycle path equivalence", path_equivalence),
        ("unbounded deviation detection", liouville_growth),
        ("density of translates", density),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !filter.is_empty() && !filter.iter().any(|f| *f == id.to_string() || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let (passed, detail) = match run() {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!passed);
        println!("{} criterion {id} ({name}): {detail} [{:.1}s]", if passed { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
