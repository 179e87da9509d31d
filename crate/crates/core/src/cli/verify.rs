//! Invariant checks run by `rotdev verify`.

use serde::{Deserialize, Serialize};

use super::pipeline::{Context, DeviationOutcome};
use super::CliError;
use crate::deviations::Verdict;
use crate::geom::Vec2;
use crate::grid::Window;
use crate::skew_product::{CentralizedSkewProduct, CocyclePath};
use crate::stable_sets::{
    auto_half_width, coverage_fraction, equivariance_residual, fiber_samples, nonemptiness_check, Equivariance, FiberScan,
    FiniteHorizonStableSet,
};

const PATH_TOL: f64 = 1e-10;
const LAYER_TOL: f64 = 1.5;
const COVERAGE_MIN: f64 = 0.99;
const CONJUGATION_SHIFT: Vec2 = Vec2::new(0.375, 0.625);
const INTEGER_SHIFT: [i64; 2] = [1, 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyCheck {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<VerifyCheck>,
    pub all_passed: bool,
}

fn check(name: &str, value: f64, tolerance: f64) -> VerifyCheck {
    VerifyCheck { name: name.into(), passed: value <= tolerance, value, tolerance }
}

/// Sample `(t, z, n)` triples: `side` fibers, `side` points, `side` times.
fn samples(side: usize, max_n: i64) -> Vec<(Vec2, Vec2, i64)> {
    let s = side as f64;
    let mut out = Vec::with_capacity(side * side * side);
    for a in 0..side {
        let t = Vec2::new((a as f64 + 0.5) / s, (a as f64 * 3.0 % s + 0.25) / s);
        for b in 0..side {
            let z = Vec2::new(b as f64 / s * 4.0 - 2.0, (b as f64 * 5.0 % s) / s * 4.0 - 2.0);
            for c in 0..side {
                let mag = ((c / 2 + 1) as f64 / (side / 2).max(1) as f64 * max_n as f64).round().max(1.0) as i64;
                out.push((t, z, if c % 2 == 0 { mag } else { -mag }));
            }
        }
    }
    out
}

pub(super) fn run_verify(ctx: &mut Context, sp: &CentralizedSkewProduct, dev: &DeviationOutcome) -> Result<VerifyReport, CliError> {
    let p = ctx.cfg.verify.clone();
    let ss = ctx.cfg.stableset.clone();
    let mut checks = Vec::new();

    let mut path_gap: f64 = 0.0;
    let mut identity: f64 = 0.0;
    for (t, z, n) in samples(p.side, p.max_n) {
        let closed = sp.fiber_cocycle(t, z, n, CocyclePath::ClosedForm)?;
        let step = sp.fiber_cocycle(t, z, n, CocyclePath::Stepwise)?;
        path_gap = path_gap.max((closed - step).max_abs());
        identity = identity.max(sp.displacement_identity_residual(t, z, n)?);
    }
    checks.push(check("cocycle_path_equivalence", path_gap, PATH_TOL));
    checks.push(check("displacement_identity", identity, PATH_TOL));

    if let Some(d) = &ctx.manifest.deviation {
        checks.push(check("sandwich", (d.gap.gap_plus - d.gap.gap_minus).abs(), d.gap.bound));
    }

    let half = ss.half_width.unwrap_or_else(|| auto_half_width(dev.m_bound));
    let window = Window::new(Vec2::ZERO, half, ss.resolution).map_err(|e| CliError::Config(e.to_string()))?;
    let scan = FiberScan::new(ss.t, dev.v, ss.horizon, window, ss.sidedness);
    let r = ss.r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s = ss.r.iter().copied().filter(|&x| x < r).fold(r - 1.0, f64::max);

    let monotone = equivariance_residual(sp, &scan, r, ss.cap_fraction, Equivariance::MonotoneInclusion { s })?;
    checks.push(check("monotone_inclusion", monotone, 0.0));

    let long = FiniteHorizonStableSet::compute(sp, &scan, r, ss.cap_fraction)?;
    let short_scan = FiberScan { horizon: (ss.horizon / 2).max(1), ..scan };
    let short = FiniteHorizonStableSet::compute(sp, &short_scan, r, ss.cap_fraction)?;
    let violations = long.infinity.mask.and_not(&short.infinity.mask).count();
    checks.push(check("horizon_monotonicity", violations as f64, 0.0));

    let conj = equivariance_residual(sp, &scan, r, ss.cap_fraction, Equivariance::Conjugation { t_lift: CONJUGATION_SHIFT })?;
    checks.push(check("conjugation", conj, LAYER_TOL));
    let shift = equivariance_residual(sp, &scan, r, ss.cap_fraction, Equivariance::IntegerTranslation { p: INTEGER_SHIFT })?;
    checks.push(check("integer_translation", shift, LAYER_TOL));

    let nonempty = nonemptiness_check(sp, &scan, r, ss.cap_fraction, &fiber_samples(2))?;
    let empty = nonempty.fibers.iter().filter(|f| !f.nonempty).count();
    checks.push(check("nonemptiness", empty as f64, 0.0));

    if dev.plus.verdict == Verdict::Bounded {
        let r_min = p.coverage_r_min.min(-2.0 * half);
        let cov = coverage_fraction(sp, &FiberScan { t: Vec2::ZERO, ..scan }, r_min, ss.cap_fraction)?;
        // reported as the uncovered fraction so that smaller is better
        checks.push(check("coverage", 1.0 - cov, 1.0 - COVERAGE_MIN));
    }
    if let Some(f) = &ctx.manifest.foliation {
        let failed = f.certificate.checks.iter().filter(|c| !c.passed).count();
        checks.push(check("foliation_certificate", failed as f64, 0.0));
    }

    for c in &checks {
        log::info!("verify {}: value {:e}, tolerance {:e}, {}", c.name, c.value, c.tolerance, if c.passed { "ok" } else { "FAILED" });
    }
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { checks, all_passed })
}
