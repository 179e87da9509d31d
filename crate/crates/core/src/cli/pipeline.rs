use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::cache::{cache_key, write_file, GridCache, GridEntry};
use super::config::{DeviationParams, FoliationParams, RotsetParams, RunConfig, StableSetParams, VerifyParams};
use super::report::{f32_raster, format_float, parse_pgm, pgm_bytes, write_csv, write_json};
use super::verify::{run_verify, VerifyReport};
use super::{render, CliError, DirLock, Subcommand};
use crate::deviations::{
    boundedness_verdict, default_slack, deviation_extrema, gap_from_profiles, profiles_from_extrema, DeviationExtrema, DeviationProfile,
    SymmetryGap, Verdict,
};
use crate::geom::{SlopeType, Vec2};
use crate::grid::{Grid, Window};
use crate::pseudofoliation::{
    certify, default_levels, extract_leaves, level_function_from_envelope, CellStatus, Certificate, LevelOptions, PseudoLeaf, StripFit,
};
use crate::rotation_set::{estimate_rotation_set, Carrier, Classification, HorizonDiameter, RotationSetEstimate, RotationSetOptions};
use crate::skew_product::CentralizedSkewProduct;
use crate::stable_sets::{
    auto_half_width, component_count, fiber_envelope, interior_area, strip_escape_check, FiberEnvelope, FiberScan, FiniteHorizonStableSet,
    Sidedness, StripEscapeReport,
};
use crate::torus_maps::{LiftedTorusMap, MapFamily};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub name: String,
    pub map: MapFamily,
    pub rotset: RotsetParams,
    pub deviation: DeviationParams,
    pub stableset: StableSetParams,
    pub foliation: FoliationParams,
    pub verify: VerifyParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    pub family: String,
    pub sup_norm_bound: f64,
    pub contraction_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotsetSummary {
    pub classification: Classification,
    pub hull: Vec<Vec2>,
    pub centroid: Vec2,
    pub diameter: f64,
    pub min_width: f64,
    pub carrier: Option<Carrier>,
    pub orbits: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionSummary {
    pub v: Vec2,
    pub alpha: f64,
    pub verdict: Verdict,
    pub sup: f64,
    pub growth_statistic: f64,
    pub plateau_increase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationSummary {
    pub horizon: u64,
    pub resolution: usize,
    pub plus: DirectionSummary,
    pub minus: DirectionSummary,
    pub gap: SymmetryGap,
    /// Bound `M` used downstream: the larger of the two sup-deviations.
    pub m_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkewSummary {
    pub rho_tilde: Vec2,
    pub rho: Vec2,
    pub self_test_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableSetLevel {
    pub r: f64,
    pub artifact: String,
    pub qualifying_cells: usize,
    pub component_cells: usize,
    pub components: u32,
    pub touched_far_cap: bool,
    pub far_cap_components: usize,
    pub interior_area: f64,
    pub strip_escape: StripEscapeReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableSetSummary {
    pub window: Window,
    pub t: Vec2,
    pub v: Vec2,
    pub horizon: u64,
    pub sidedness: Sidedness,
    pub orbits: usize,
    pub levels: Vec<StableSetLevel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoliationSummary {
    pub forced: bool,
    pub window: Window,
    pub options: LevelOptions,
    pub resolved_fraction: f64,
    pub slope: SlopeType,
    pub levels: Vec<f64>,
    pub certificate: Certificate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub parameters: Parameters,
    pub map: MapSummary,
    pub rotset: Option<RotsetSummary>,
    pub deviation: Option<DeviationSummary>,
    pub skew_product: Option<SkewSummary>,
    pub stableset: Option<StableSetSummary>,
    pub foliation: Option<FoliationSummary>,
    pub verify: Option<VerifyReport>,
    pub cache_keys: BTreeMap<String, String>,
    pub artifacts: Vec<String>,
}

/// Sidecar of a stable-set mask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct MaskSidecar {
    r: f64,
    v: Vec2,
    t: Vec2,
    horizon: u64,
    window: Window,
    sidedness: Sidedness,
    cap_fraction: f64,
    touched_far_cap: bool,
    far_cap_components: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ChartSidecar {
    window: Window,
    t: Vec2,
    v: Vec2,
    alpha: f64,
    horizon: u64,
    options: LevelOptions,
    slope: SlopeType,
    resolved_fraction: f64,
    saturated_low: usize,
    saturated_high: usize,
    raster: String,
    dtype: String,
    row_order: String,
    /// Pseudo-leaves are contoured from these sup values.
    values: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct LeafRecord {
    level: f64,
    polylines: usize,
    points: usize,
    strip: StripFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct HullReport {
    hull: Vec<Vec2>,
    centroid: Vec2,
    diameter: f64,
    min_width: f64,
    diameters: Vec<HorizonDiameter>,
    classification: Classification,
    carrier: Option<Carrier>,
    horizon: u64,
    resolution: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct DeviationReport {
    v: Vec2,
    alpha: f64,
    horizon: u64,
    resolution: usize,
    plus: DirectionReport,
    minus: DirectionReport,
    gap: SymmetryGap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct DirectionReport {
    verdict: Verdict,
    sup: f64,
    growth_statistic: f64,
    plateau_increase: f64,
    checkpoints: Vec<crate::deviations::Checkpoint>,
}

impl DirectionReport {
    fn of(p: &DeviationProfile) -> Self {
        DirectionReport {
            verdict: p.verdict,
            sup: p.sup(),
            growth_statistic: p.growth_statistic,
            plateau_increase: p.plateau_increase,
            checkpoints: p.checkpoints.clone(),
        }
    }
}

/// Intermediate results handed between stages.
pub(super) struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub out: PathBuf,
    pub map: LiftedTorusMap,
    cache: GridCache,
    pub manifest: Manifest,
    artifacts: Vec<String>,
}

pub(super) struct DeviationOutcome {
    pub v: Vec2,
    pub plus: DeviationProfile,
    pub m_bound: f64,
}

fn timed<T>(label: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    log::info!("{label}: {:.3} s", start.elapsed().as_secs_f64());
    out
}

impl<'a> Context<'a> {
    fn new(cfg: &'a RunConfig, out: PathBuf, sub: Subcommand) -> Result<Self, CliError> {
        let map = cfg.map.build()?;
        let cache_dir = match &cfg.output.cache_dir {
            Some(d) => d.clone(),
            None => out.join("cache"),
        };
        let manifest = Manifest {
            tool: "rotdev".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: sub.name().into(),
            parameters: Parameters {
                name: cfg.name.clone(),
                map: cfg.map.clone(),
                rotset: cfg.rotset.clone(),
                deviation: cfg.deviation.clone(),
                stableset: cfg.stableset.clone(),
                foliation: cfg.foliation.clone(),
                verify: cfg.verify.clone(),
            },
            map: MapSummary {
                family: cfg.map.tag().into(),
                sup_norm_bound: map.sup_norm_bound(),
                contraction_bound: map.contraction_bound(),
            },
            rotset: None,
            deviation: None,
            skew_product: None,
            stableset: None,
            foliation: None,
            verify: None,
            cache_keys: BTreeMap::new(),
            artifacts: Vec::new(),
        };
        Ok(Context { cfg, cache: GridCache::new(cache_dir, cfg.output.cache), out, map, manifest, artifacts: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.to_string());
        self.out.join(name)
    }

    pub fn rotset(&mut self) -> Result<RotationSetEstimate, CliError> {
        let p = &self.cfg.rotset;
        let opts = RotationSetOptions { point_tol: p.point_tol, line_tol: p.line_tol, default_direction: p.direction };
        let est = timed("rotset", || estimate_rotation_set(&self.map, p.grid_res, &p.horizons, &opts))?;
        let report = HullReport {
            hull: est.hull.clone(),
            centroid: est.centroid,
            diameter: est.diameter,
            min_width: est.min_width,
            diameters: est.diameters.clone(),
            classification: est.classification,
            carrier: est.carrier,
            horizon: est.horizon,
            resolution: est.resolution,
        };
        let path = self.path("hull.json");
        write_json(&path, &report)?;
        self.manifest.rotset = Some(RotsetSummary {
            classification: est.classification,
            hull: est.hull.clone(),
            centroid: est.centroid,
            diameter: est.diameter,
            min_width: est.min_width,
            carrier: est.carrier,
            orbits: est.orbits,
        });
        Ok(est)
    }

    pub fn deviation(&mut self, est: &RotationSetEstimate) -> Result<DeviationOutcome, CliError> {
        let p = self.cfg.deviation.clone();
        let (v, alpha) = match p.v {
            Some(v) => {
                let v = v.normalized().ok_or_else(|| CliError::Config("[deviation] v is zero".into()))?;
                (v, est.rho_tilde().dot(v))
            }
            None => {
                let c = est.carrier.ok_or(crate::rotation_set::RotationSetError::NotLineLike(est.classification))?;
                (c.v, c.alpha)
            }
        };
        #[derive(Serialize)]
        struct Key {
            grid_res: usize,
            horizon: u64,
            v: Vec2,
            alpha: f64,
        }
        let key = cache_key(&self.cfg.map, "deviation", &Key { grid_res: p.grid_res, horizon: p.horizon, v, alpha });
        self.manifest.cache_keys.insert("deviation".into(), key.clone());
        let len = 2 * p.horizon as usize + 1;
        let ext = match self.cache.get(&key).filter(|e| e.rows == 2 && e.cols as usize == len) {
            Some(e) => DeviationExtrema { horizon: p.horizon, max: e.values[..len].to_vec(), min: e.values[len..].to_vec() },
            None => {
                let ext = timed("deviation", || deviation_extrema(&self.map, v, alpha, p.grid_res, p.horizon))?;
                let mut values = ext.max.clone();
                values.extend_from_slice(&ext.min);
                self.cache.put(&key, &GridEntry { rows: 2, cols: len as u32, aux: 0, values })?;
                ext
            }
        };
        let (mut plus, mut minus) = profiles_from_extrema(&ext, v, alpha, p.grid_res);
        for prof in [&mut plus, &mut minus] {
            let (verdict, slope, inc) = boundedness_verdict(prof, p.plateau, p.slope);
            prof.verdict = verdict;
            prof.growth_statistic = slope;
            prof.plateau_increase = inc;
        }
        let rows: Vec<Vec<String>> = plus.rows().map(|(n, d, m)| vec![n.to_string(), format_float(d), format_float(m)]).collect();
        let path = self.path("deviations.csv");
        write_csv(&path, &["n", "D", "M"], rows)?;
        let gap = gap_from_profiles(&plus, &minus, default_slack(&self.map, p.horizon));
        let gap_value = match &gap {
            Ok(g) => *g,
            Err(_) => {
                let slack = default_slack(&self.map, p.horizon);
                SymmetryGap { gap_plus: plus.sup(), gap_minus: minus.sup(), slack, bound: crate::deviations::SANDWICH_CONSTANT + slack }
            }
        };
        let report = DeviationReport {
            v,
            alpha,
            horizon: p.horizon,
            resolution: p.grid_res,
            plus: DirectionReport::of(&plus),
            minus: DirectionReport::of(&minus),
            gap: gap_value,
        };
        let path = self.path("deviations.json");
        write_json(&path, &report)?;
        let summary = |prof: &DeviationProfile| DirectionSummary {
            v: prof.v,
            alpha: prof.alpha,
            verdict: prof.verdict,
            sup: prof.sup(),
            growth_statistic: prof.growth_statistic,
            plateau_increase: prof.plateau_increase,
        };
        let m_bound = plus.sup().max(minus.sup()).max(0.0);
        self.manifest.deviation = Some(DeviationSummary {
            horizon: p.horizon,
            resolution: p.grid_res,
            plus: summary(&plus),
            minus: summary(&minus),
            gap: gap_value,
            m_bound,
        });
        gap?;
        Ok(DeviationOutcome { v, plus, m_bound })
    }

    pub fn skew_product(&mut self, est: &RotationSetEstimate) -> Result<CentralizedSkewProduct, CliError> {
        let sp = CentralizedSkewProduct::build(&self.map, est.rho_tilde())?;
        self.manifest.skew_product =
            Some(SkewSummary { rho_tilde: sp.rho_tilde(), rho: sp.rho(), self_test_residual: sp.self_test_residual() });
        Ok(sp)
    }

    /// Envelope over `scan`, through the cache.
    pub fn envelope(&mut self, label: &str, sp: &CentralizedSkewProduct, scan: &FiberScan, floor: f64) -> Result<FiberEnvelope, CliError> {
        #[derive(Serialize)]
        struct Key<'s> {
            rho_tilde: Vec2,
            scan: &'s FiberScan,
            floor: f64,
        }
        let key = cache_key(&self.cfg.map, "envelope", &Key { rho_tilde: sp.rho_tilde(), scan, floor });
        self.manifest.cache_keys.insert(label.into(), key.clone());
        let n = scan.window.resolution;
        if let Some(e) = self.cache.get(&key).filter(|e| e.rows as usize == n && e.cols as usize == n) {
            return Ok(FiberEnvelope { scan: *scan, floor, values: Grid::from_vec(n, e.values), orbits: e.aux as usize });
        }
        let env = timed(label, || fiber_envelope(sp, scan, floor))?;
        let entry = GridEntry { rows: n as u32, cols: n as u32, aux: env.orbits as u64, values: env.values.as_slice().to_vec() };
        self.cache.put(&key, &entry)?;
        Ok(env)
    }

    pub fn stableset(&mut self, sp: &CentralizedSkewProduct, dev: &DeviationOutcome) -> Result<StableSetSummary, CliError> {
        let p = self.cfg.stableset.clone();
        let half = p.half_width.unwrap_or_else(|| auto_half_width(dev.m_bound));
        let window = Window::new(Vec2::ZERO, half, p.resolution).map_err(|e| CliError::Config(e.to_string()))?;
        let scan = FiberScan::new(p.t, dev.v, p.horizon, window, p.sidedness);
        let floor = p.r.iter().copied().fold(f64::INFINITY, f64::min);
        let env = self.envelope("stableset", sp, &scan, floor)?;
        let mut levels = Vec::with_capacity(p.r.len());
        for (k, &r) in p.r.iter().enumerate() {
            let set = FiniteHorizonStableSet::from_mask(&scan, r, p.cap_fraction, env.qualifying(r));
            let comp = &set.infinity.mask;
            let name = format!("stableset_{k}.pgm");
            let path = self.path(&name);
            write_file(&path, &pgm_bytes(comp))?;
            let sidecar = MaskSidecar {
                r,
                v: scan.v,
                t: scan.t,
                horizon: scan.horizon,
                window,
                sidedness: scan.sidedness,
                cap_fraction: p.cap_fraction,
                touched_far_cap: set.infinity.touched_far_cap,
                far_cap_components: set.infinity.far_cap_components,
            };
            let path = self.path(&format!("stableset_{k}.json"));
            write_json(&path, &sidecar)?;
            levels.push(StableSetLevel {
                r,
                artifact: name,
                qualifying_cells: set.qualifying.count(),
                component_cells: comp.count(),
                components: component_count(comp),
                touched_far_cap: set.infinity.touched_far_cap,
                far_cap_components: set.infinity.far_cap_components,
                interior_area: interior_area(comp, &window),
                strip_escape: strip_escape_check(comp, scan.v, &window, &p.escape_s, dev.plus.verdict),
            });
        }
        let summary =
            StableSetSummary { window, t: scan.t, v: scan.v, horizon: scan.horizon, sidedness: scan.sidedness, orbits: env.orbits, levels };
        self.manifest.stableset = Some(summary.clone());
        Ok(summary)
    }

    pub fn foliation(&mut self, sp: &CentralizedSkewProduct, dev: &DeviationOutcome, force: bool) -> Result<(), CliError> {
        let p = self.cfg.foliation.clone();
        let forced = dev.plus.verdict != Verdict::Bounded;
        if forced && !(force || p.force) {
            return Err(CliError::Dependency(format!(
                "foliation needs a bounded deviation verdict, got {:?} (use --force to override)",
                dev.plus.verdict
            )));
        }
        let half = p.half_width.unwrap_or_else(|| auto_half_width(dev.m_bound));
        let window = Window::new(Vec2::ZERO, half, p.resolution).map_err(|e| CliError::Config(e.to_string()))?;
        let scan = FiberScan::new(Vec2::ZERO, dev.v, p.horizon, window, Sidedness::TwoSided);
        let mut options = LevelOptions::covering(&window, dev.v, dev.m_bound);
        if let Some(e) = p.eps_r {
            options.eps_r = e;
        }
        let env = self.envelope("foliation", sp, &scan, options.r_lo)?;
        let chart = timed("level function", || level_function_from_envelope(sp, &env, &options))?;
        let levels = default_levels(&chart, p.levels, dev.m_bound.max(window.cell_size()));
        let leaves = extract_leaves(&chart, &levels)?;
        let certificate = timed("certificate", || certify(&chart, &leaves, &self.map, sp.rho_tilde(), p.n_checks))?;

        let path = self.path("chart.f32");
        write_file(&path, &f32_raster(&chart.sup_values))?;
        let count = |s: CellStatus| chart.status.as_slice().iter().filter(|x| **x == s).count();
        let sidecar = ChartSidecar {
            window,
            t: chart.t,
            v: chart.v,
            alpha: chart.alpha,
            horizon: chart.horizon,
            options,
            slope: chart.slope,
            resolved_fraction: chart.resolved_fraction(),
            saturated_low: count(CellStatus::SaturatedLow),
            saturated_high: count(CellStatus::SaturatedHigh),
            raster: "chart.f32".into(),
            dtype: "f32le".into(),
            row_order: "top_first".into(),
            values: "sup".into(),
        };
        let path = self.path("chart.json");
        write_json(&path, &sidecar)?;
        let mut rows = Vec::new();
        for (li, leaf) in leaves.iter().enumerate() {
            for (pi, line) in leaf.polylines.iter().enumerate() {
                for (vi, pt) in line.iter().enumerate() {
                    rows.push(vec![
                        li.to_string(),
                        format_float(leaf.level),
                        pi.to_string(),
                        vi.to_string(),
                        format_float(pt.x),
                        format_float(pt.y),
                    ]);
                }
            }
        }
        let path = self.path("leaves.csv");
        write_csv(&path, &["leaf", "level", "polyline", "vertex", "x", "y"], rows)?;
        let records: Vec<LeafRecord> = leaves
            .iter()
            .map(|l| LeafRecord { level: l.level, polylines: l.polylines.len(), points: l.points().count(), strip: l.strip })
            .collect();
        let path = self.path("leaves.json");
        write_json(&path, &records)?;
        let path = self.path("certificate.json");
        write_json(&path, &certificate)?;
        self.manifest.foliation = Some(FoliationSummary {
            forced,
            window,
            options,
            resolved_fraction: chart.resolved_fraction(),
            slope: chart.slope,
            levels,
            certificate,
        });
        Ok(())
    }

    fn finish(mut self) -> Result<Manifest, CliError> {
        self.artifacts.sort();
        self.artifacts.dedup();
        self.manifest.artifacts = self.artifacts.clone();
        write_json(&self.out.join(super::MANIFEST_FILE), &self.manifest)?;
        Ok(self.manifest)
    }
}

/// Runs `sub` for the configuration; `out` overrides the configured output
/// directory. Returns the manifest that was written.
pub fn run(sub: Subcommand, cfg: &RunConfig, out: Option<&Path>, force: bool) -> Result<Manifest, CliError> {
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.dir.clone());
    let _lock = DirLock::acquire(&out)?;
    if sub == Subcommand::Render {
        render_all(&out)?;
        let text = fs::read_to_string(out.join(MANIFEST_FILE)).map_err(|e| CliError::io(&out.join(MANIFEST_FILE), e))?;
        return serde_json::from_str(&text).map_err(|e| CliError::Config(format!("manifest: {e}")));
    }
    let mut ctx = Context::new(cfg, out, sub)?;
    let outcome = stages(&mut ctx, sub, force);
    // partial results are still recorded when a stage fails
    let manifest = ctx.finish()?;
    outcome.map(|_| manifest)
}

fn stages(ctx: &mut Context, sub: Subcommand, force: bool) -> Result<(), CliError> {
    let est = ctx.rotset()?;
    if sub == Subcommand::Rotset {
        return Ok(());
    }
    let dev = ctx.deviation(&est)?;
    if sub == Subcommand::Deviation {
        return Ok(());
    }
    let sp = ctx.skew_product(&est)?;
    match sub {
        Subcommand::Stableset => ctx.stableset(&sp, &dev).map(|_| ()),
        Subcommand::Foliation => ctx.foliation(&sp, &dev, force),
        Subcommand::Verify => {
            ctx.stableset(&sp, &dev)?;
            let bounded = dev.plus.verdict == Verdict::Bounded;
            if bounded || force || ctx.cfg.foliation.force {
                ctx.foliation(&sp, &dev, force)?;
            }
            let report = run_verify(ctx, &sp, &dev)?;
            let failed: Vec<String> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
            let path = ctx.path("verify.json");
            write_json(&path, &report)?;
            ctx.manifest.verify = Some(report);
            if !failed.is_empty() {
                return Err(CliError::Numerical(format!("invariant checks failed: {}", failed.join(", "))));
            }
            Ok(())
        }
        _ => unreachable!("handled above"),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Option<T>, CliError> {
    match fs::read_to_string(path) {
        Ok(text) => serde_json::from_str(&text).map(Some).map_err(|e| CliError::Config(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(CliError::io(path, e)),
    }
}

/// SVG figures for every artifact found in `out`.
fn render_all(out: &Path) -> Result<Vec<String>, CliError> {
    let manifest: Manifest =
        read_json(&out.join(MANIFEST_FILE))?.ok_or_else(|| CliError::UnknownArtifact(format!("{}", out.join(MANIFEST_FILE).display())))?;
    let mut written = Vec::new();
    for name in &manifest.artifacts {
        if let Some(svg) = render_artifact(out, name, &manifest)? {
            let svg_name = format!("{}.svg", name.rsplit_once('.').map_or(name.as_str(), |(stem, _)| stem));
            write_file(&out.join(&svg_name), svg.as_bytes())?;
            written.push(svg_name);
        }
    }
    if written.is_empty() {
        return Err(CliError::UnknownArtifact("no renderable artifacts".into()));
    }
    Ok(written)
}

/// SVG for one artifact; `None` for artifacts that have no figure.
pub fn render_artifact(out: &Path, name: &str, manifest: &Manifest) -> Result<Option<String>, CliError> {
    let missing = || CliError::UnknownArtifact(name.to_string());
    let path = out.join(name);
    if name == "hull.json" {
        let r: HullReport = read_json(&path)?.ok_or_else(missing)?;
        let est = RotationSetEstimate {
            hull: r.hull,
            horizon: r.horizon,
            resolution: r.resolution,
            diameter: r.diameter,
            min_width: r.min_width,
            centroid: r.centroid,
            diameters: r.diameters,
            classification: r.classification,
            carrier: r.carrier,
            orbits: 0,
        };
        return Ok(Some(render::hull_svg(&est)));
    }
    if name == "deviations.csv" {
        let mut reader = csv::Reader::from_path(&path).map_err(|_| missing())?;
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| CliError::Config(format!("{name}: {e}")))?;
            let parse = |k: usize| rec.get(k).and_then(|s| s.parse::<f64>().ok());
            match (rec.get(0).and_then(|s| s.parse::<i64>().ok()), parse(1), parse(2)) {
                (Some(n), Some(d), Some(m)) => rows.push((n, d, m)),
                _ => return Err(CliError::Config(format!("{name}: malformed row"))),
            }
        }
        return Ok(Some(render::profile_svg(&rows)));
    }
    if name.starts_with("stableset_") && name.ends_with(".pgm") {
        let sidecar: MaskSidecar = read_json(&path.with_extension("json"))?.ok_or_else(missing)?;
        let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        let mask = parse_pgm(&bytes).ok_or_else(missing)?;
        return Ok(Some(render::mask_svg(&mask, &sidecar.window, sidecar.v, sidecar.r, sidecar.cap_fraction)));
    }
    if name == "leaves.csv" {
        let fol = manifest.foliation.as_ref().ok_or_else(missing)?;
        let records: Vec<LeafRecord> = read_json(&out.join("leaves.json"))?.ok_or_else(missing)?;
        let mut leaves: Vec<PseudoLeaf> =
            records.iter().map(|r| PseudoLeaf { level: r.level, polylines: Vec::new(), strip: r.strip }).collect();
        let mut reader = csv::Reader::from_path(&path).map_err(|_| missing())?;
        for rec in reader.records() {
            let rec = rec.map_err(|e| CliError::Config(format!("{name}: {e}")))?;
            let idx = |k: usize| rec.get(k).and_then(|s| s.parse::<usize>().ok());
            let val = |k: usize| rec.get(k).and_then(|s| s.parse::<f64>().ok());
            let (Some(li), Some(pi), Some(x), Some(y)) = (idx(0), idx(2), val(4), val(5)) else {
                return Err(CliError::Config(format!("{name}: malformed row")));
            };
            let leaf = leaves.get_mut(li).ok_or_else(missing)?;
            if leaf.polylines.len() <= pi {
                leaf.polylines.resize(pi + 1, Vec::new());
            }
            leaf.polylines[pi].push(Vec2::new(x, y));
        }
        let v = manifest.deviation.as_ref().map(|d| d.plus.v).ok_or_else(missing)?;
        return Ok(Some(render::leaves_svg(&leaves, &fol.window, v)));
    }
    Ok(None)
}
