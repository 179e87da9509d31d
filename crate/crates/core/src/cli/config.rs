//! `key = value` configuration with `[section]` headers. See
//! `docs/config-grammar.md` for the grammar.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use ini::{Ini, ParseOption, Properties};
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::deviations::{DEFAULT_PLATEAU_THRESHOLD, DEFAULT_SLOPE_THRESHOLD};
use crate::geom::Vec2;
use crate::rotation_set::{DEFAULT_LINE_TOL, DEFAULT_POINT_TOL};
use crate::stable_sets::{Sidedness, DEFAULT_CAP_FRACTION};
use crate::torus_maps::{liouville_number, MapFamily, TrigPoly1, TrigPoly2, TrigTerm, GOLDEN_MEAN};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CachePolicy {
    Off,
    Read,
    ReadWrite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotsetParams {
    pub grid_res: usize,
    pub horizons: Vec<u64>,
    pub point_tol: f64,
    pub line_tol: f64,
    pub direction: Vec2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationParams {
    pub grid_res: usize,
    pub horizon: u64,
    pub v: Option<Vec2>,
    pub plateau: f64,
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableSetParams {
    pub resolution: usize,
    pub half_width: Option<f64>,
    pub horizon: u64,
    pub r: Vec<f64>,
    pub t: Vec2,
    pub cap_fraction: f64,
    pub sidedness: Sidedness,
    pub escape_s: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoliationParams {
    pub resolution: usize,
    pub half_width: Option<f64>,
    pub horizon: u64,
    pub eps_r: Option<f64>,
    pub levels: usize,
    pub n_checks: u64,
    pub force: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyParams {
    /// Samples per axis in the cocycle checks (`side³` triples).
    pub side: usize,
    pub max_n: i64,
    pub coverage_r_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputParams {
    pub dir: PathBuf,
    pub cache: CachePolicy,
    pub cache_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub name: String,
    pub map: MapFamily,
    pub rotset: RotsetParams,
    pub deviation: DeviationParams,
    pub stableset: StableSetParams,
    pub foliation: FoliationParams,
    pub verify: VerifyParams,
    pub output: OutputParams,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let opts = ParseOption { enabled_quote: false, enabled_escape: false, ..ParseOption::default() };
        let ini = Ini::load_from_str_opt(text, opts).map_err(|e| CliError::Config(e.to_string()))?;
        let mut known = BTreeSet::new();
        for (name, props) in ini.iter() {
            match name {
                None if props.is_empty() => {}
                None => return Err(CliError::Config("keys outside any section".into())),
                Some(n) => {
                    if !SECTIONS.contains(&n) {
                        return Err(CliError::Config(format!("unknown section [{n}]")));
                    }
                    if !known.insert(n) {
                        return Err(CliError::Config(format!("duplicate section [{n}]")));
                    }
                }
            }
        }
        let empty = Properties::new();
        let section = |name: &'static str| Section::new(name, ini.section(Some(name)).unwrap_or(&empty));

        let mut run = section("run");
        let name = run.string("name")?.unwrap_or_else(|| "run".into());
        run.finish()?;

        let mut map = section("map");
        let map_family = parse_map(&mut map)?;
        map.finish()?;

        let mut s = section("rotset");
        let rotset = RotsetParams {
            grid_res: s.parse("grid_res")?.unwrap_or(64),
            horizons: s.list("horizons")?.unwrap_or_else(|| vec![100, 1000]),
            point_tol: s.parse("point_tol")?.unwrap_or(DEFAULT_POINT_TOL),
            line_tol: s.parse("line_tol")?.unwrap_or(DEFAULT_LINE_TOL),
            direction: s.vec2("direction")?.unwrap_or(Vec2::new(0.0, 1.0)),
        };
        s.finish()?;

        let mut s = section("deviation");
        let deviation = DeviationParams {
            grid_res: s.parse("grid_res")?.unwrap_or(64),
            horizon: s.parse("horizon")?.unwrap_or(1000),
            v: s.vec2("v")?,
            plateau: s.parse("plateau")?.unwrap_or(DEFAULT_PLATEAU_THRESHOLD),
            slope: s.parse("slope")?.unwrap_or(DEFAULT_SLOPE_THRESHOLD),
        };
        s.finish()?;

        let mut s = section("stableset");
        let sidedness = match s.string("sidedness")?.as_deref() {
            None | Some("two-sided") => Sidedness::TwoSided,
            Some("forward") => Sidedness::Forward,
            Some(other) => return Err(CliError::Config(format!("[stableset] sidedness: unknown value {other:?}"))),
        };
        let stableset = StableSetParams {
            resolution: s.parse("resolution")?.unwrap_or(128),
            half_width: s.auto("half_width")?,
            horizon: s.parse("horizon")?.unwrap_or(1000),
            r: s.list("r")?.unwrap_or_else(|| vec![0.0]),
            t: s.vec2("t")?.unwrap_or(Vec2::ZERO),
            cap_fraction: s.parse("cap_fraction")?.unwrap_or(DEFAULT_CAP_FRACTION),
            sidedness,
            escape_s: s.list("escape_s")?.unwrap_or_else(|| vec![2.0]),
        };
        s.finish()?;

        let mut s = section("foliation");
        let foliation = FoliationParams {
            resolution: s.parse("resolution")?.unwrap_or(128),
            half_width: s.auto("half_width")?,
            horizon: s.parse("horizon")?.unwrap_or(1000),
            eps_r: s.auto("eps_r")?,
            levels: s.parse("levels")?.unwrap_or(5),
            n_checks: s.parse("n_checks")?.unwrap_or(200),
            force: s.parse("force")?.unwrap_or(false),
        };
        s.finish()?;

        let mut s = section("verify");
        let verify = VerifyParams {
            side: s.parse("side")?.unwrap_or(8),
            max_n: s.parse("max_n")?.unwrap_or(1000),
            coverage_r_min: s.parse("coverage_r_min")?.unwrap_or(-100.0),
        };
        s.finish()?;

        let mut s = section("output");
        let cache = match s.string("cache")?.as_deref() {
            None | Some("off") => CachePolicy::Off,
            Some("read") => CachePolicy::Read,
            Some("read_write") => CachePolicy::ReadWrite,
            Some(other) => return Err(CliError::Config(format!("[output] cache: unknown policy {other:?}"))),
        };
        let output = OutputParams {
            dir: PathBuf::from(s.string("dir")?.unwrap_or_else(|| "out".into())),
            cache,
            cache_dir: s.string("cache_dir")?.map(PathBuf::from),
        };
        s.finish()?;

        let cfg = RunConfig { name, map: map_family, rotset, deviation, stableset, foliation, verify, output };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |what: &str| Err(CliError::Config(what.to_string()));
        if self.rotset.grid_res == 0 || self.deviation.grid_res == 0 {
            return bad("grid_res must be positive");
        }
        if self.stableset.resolution < 3 || self.foliation.resolution < 3 {
            return bad("resolution must be at least 3");
        }
        if self.stableset.r.is_empty() || self.stableset.r.iter().any(|r| !r.is_finite()) {
            return bad("[stableset] r must be a non-empty list of finite values");
        }
        if !(self.stableset.cap_fraction > 0.0 && self.stableset.cap_fraction < 1.0) {
            return bad("[stableset] cap_fraction must lie in (0, 1)");
        }
        if let Some(v) = self.deviation.v {
            if v.normalized().is_none() {
                return bad("[deviation] v must be a non-zero vector");
            }
        }
        for hw in [self.stableset.half_width, self.foliation.half_width].into_iter().flatten() {
            if !(hw > 0.0 && hw.is_finite()) {
                return bad("half_width must be positive");
            }
        }
        if let Some(e) = self.foliation.eps_r {
            if !(e > 0.0 && e.is_finite()) {
                return bad("[foliation] eps_r must be positive");
            }
        }
        if self.verify.side == 0 || self.verify.max_n < 0 {
            return bad("[verify] side must be positive and max_n non-negative");
        }
        Ok(())
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.output.cache_dir.clone().unwrap_or_else(|| self.output.dir.join("cache"))
    }
}

const SECTIONS: [&str; 8] = ["run", "map", "rotset", "deviation", "stableset", "foliation", "verify", "output"];

/// Property lookup that remembers which keys were read, so unknown keys can
/// be rejected.
struct Section<'a> {
    name: &'static str,
    props: &'a Properties,
    used: BTreeSet<String>,
}

impl<'a> Section<'a> {
    fn new(name: &'static str, props: &'a Properties) -> Self {
        Section { name, props, used: BTreeSet::new() }
    }

    fn err(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        CliError::Config(format!("[{}] {key}: {msg}", self.name))
    }

    fn string(&mut self, key: &str) -> Result<Option<String>, CliError> {
        self.used.insert(key.to_string());
        let all: Vec<&str> = self.props.get_all(key).collect();
        match all.as_slice() {
            [] => Ok(None),
            [v] => Ok(Some(v.trim().to_string())),
            _ => Err(self.err(key, "given more than once")),
        }
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.string(key)? {
            None => Ok(None),
            Some(s) => s.parse().map(Some).map_err(|e| self.err(key, format!("{s:?}: {e}"))),
        }
    }

    /// `auto` or a number; `None` stands for `auto`.
    fn auto(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        match self.string(key)?.as_deref() {
            None | Some("auto") => Ok(None),
            Some(s) => s.parse().map(Some).map_err(|e| self.err(key, format!("{s:?}: {e}"))),
        }
    }

    fn list<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.string(key)? {
            None => Ok(None),
            Some(s) => {
                let items: Result<Vec<T>, _> = s.split_whitespace().map(str::parse).collect();
                match items {
                    Ok(v) if !v.is_empty() => Ok(Some(v)),
                    Ok(_) => Err(self.err(key, "empty list")),
                    Err(e) => Err(self.err(key, format!("{s:?}: {e}"))),
                }
            }
        }
    }

    fn vec2(&mut self, key: &str) -> Result<Option<Vec2>, CliError> {
        match self.list::<f64>(key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 && v.iter().all(|x| x.is_finite()) => Ok(Some(Vec2::new(v[0], v[1]))),
            Some(_) => Err(self.err(key, "expected two finite numbers")),
        }
    }

    fn finish(self) -> Result<(), CliError> {
        for (k, _) in self.props.iter() {
            if !self.used.contains(k) {
                return Err(CliError::Config(format!("[{}] unknown key {k:?}", self.name)));
            }
        }
        Ok(())
    }
}

fn parse_base(s: &str) -> Result<f64, String> {
    match s.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["golden"] => Ok(GOLDEN_MEAN),
        ["liouville", n] => n.parse::<u32>().map(liouville_number).map_err(|e| e.to_string()),
        [x] => x.parse::<f64>().map_err(|e| e.to_string()),
        _ => Err(format!("cannot read {s:?}")),
    }
}

/// Comma-separated groups of whitespace-separated numbers.
fn groups(s: &str, width: usize) -> Result<Vec<Vec<f64>>, String> {
    s.split(',')
        .map(|g| {
            let nums: Result<Vec<f64>, _> = g.split_whitespace().map(str::parse::<f64>).collect();
            let nums = nums.map_err(|e| format!("{g:?}: {e}"))?;
            if nums.len() != width || nums.iter().any(|x| !x.is_finite()) {
                return Err(format!("{g:?}: expected {width} finite numbers"));
            }
            Ok(nums)
        })
        .collect()
}

fn frequency(x: f64) -> Result<i32, String> {
    if x.fract() != 0.0 || x.abs() > 1e6 {
        return Err(format!("frequency {x} is not a small integer"));
    }
    Ok(x as i32)
}

fn poly1(s: &str) -> Result<TrigPoly1, String> {
    let terms = groups(s, 3)?.into_iter().map(|g| Ok((frequency(g[0])?, g[1], g[2]))).collect::<Result<Vec<_>, String>>()?;
    Ok(TrigPoly1::new(terms))
}

fn poly2(s: &str) -> Result<TrigPoly2, String> {
    let terms = groups(s, 6)?
        .into_iter()
        .map(|g| Ok(TrigTerm::new([frequency(g[0])?, frequency(g[1])?], Vec2::new(g[2], g[3]), Vec2::new(g[4], g[5]))))
        .collect::<Result<Vec<_>, String>>()?;
    Ok(TrigPoly2::new(terms))
}

fn parse_map(s: &mut Section) -> Result<MapFamily, CliError> {
    let family = s.string("family")?.ok_or_else(|| s.err("family", "missing"))?;
    let required = |s: &mut Section, key: &str| s.string(key)?.ok_or_else(|| s.err(key, "missing"));
    let map = match family.as_str() {
        "translation" => {
            let alpha = s.vec2("alpha")?.ok_or_else(|| s.err("alpha", "missing"))?;
            MapFamily::Translation { alpha }
        }
        "skew" => {
            let base = required(s, "base")?;
            let forcing = required(s, "forcing")?;
            MapFamily::Skew {
                base: parse_base(&base).map_err(|e| s.err("base", e))?,
                forcing: poly1(&forcing).map_err(|e| s.err("forcing", e))?,
            }
        }
        "coboundary-skew" => {
            let base = required(s, "base")?;
            let transfer = required(s, "transfer")?;
            MapFamily::CoboundarySkew {
                base: parse_base(&base).map_err(|e| s.err("base", e))?,
                transfer: poly1(&transfer).map_err(|e| s.err("transfer", e))?,
            }
        }
        "generic" => {
            let terms = required(s, "terms")?;
            MapFamily::Generic { displacement: poly2(&terms).map_err(|e| s.err("terms", e))? }
        }
        other => return Err(s.err("family", format!("unknown family {other:?}"))),
    };
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    const COBOUNDARY: &str = "
[run]
name = coboundary

[map]
family = coboundary-skew
base = golden
transfer = 1 0 1

[stableset]
r = 0 -1.5
half_width = auto

[output]
cache = read_write
";

    #[test]
    fn parses_with_defaults() {
        let cfg = RunConfig::parse(COBOUNDARY).unwrap();
        assert_eq!(cfg.name, "coboundary");
        assert_eq!(cfg.map, MapFamily::CoboundarySkew { base: GOLDEN_MEAN, transfer: TrigPoly1::sine(1, 1.0) });
        assert_eq!(cfg.stableset.r, vec![0.0, -1.5]);
        assert_eq!(cfg.stableset.half_width, None);
        assert_eq!(cfg.rotset.horizons, vec![100, 1000]);
        assert_eq!(cfg.output.cache, CachePolicy::ReadWrite);
        assert_eq!(cfg.cache_dir(), PathBuf::from("out/cache"));
    }

    #[test]
    fn bases_and_terms() {
        assert_eq!(parse_base("liouville 6").unwrap(), liouville_number(6));
        assert_eq!(parse_base("0.5").unwrap(), 0.5);
        let p = poly2("1 0 0 0.1 0 0, 0 1 0.05 0 0 0").unwrap();
        assert_eq!(p.terms().len(), 2);
        assert!(poly1("1.5 0 1").is_err());
        assert!(poly1("1 0").is_err());
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        let err = |text: &str| RunConfig::parse(text).unwrap_err().exit_code();
        assert_eq!(err("[map]\nfamily = translation\nalpha = 0.3 0.7\ncolour = red\n"), 1);
        assert_eq!(err("[map]\nfamily = translation\nalpha = 0.3 0.7\n[bogus]\n"), 1);
        assert_eq!(err("[map]\nfamily = spiral\n"), 1);
        assert_eq!(err("[map]\nfamily = translation\nalpha = 0.3\n"), 1);
        assert_eq!(err("[map]\nfamily = translation\nalpha = 0.3 0.7\n[stableset]\ncap_fraction = 2\n"), 1);
        assert_eq!(err("[map]\nfamily = translation\nalpha = 0.3 0.7\n[output]\ncache = sometimes\n"), 1);
    }
}
