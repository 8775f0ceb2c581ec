//! Scenario files: TOML with a fixed set of sections, see `docs/config.md`.

use std::fmt;
use std::path::PathBuf;

use pinchlab::curvature::{GeometrySpec, MilnorFrame, MilnorGroup, SphereFactor, WarpedProduct};
use pinchlab::flow::Controls;
use serde::Deserialize;

/// Grammar version understood by this build.
pub const FORMAT_VERSION: u32 = 1;

/// A config problem, located by dotted key and 1-based line when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "`{}` (line {l}): {}", self.key, self.message),
            None => write!(f, "`{}`: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    format_version: u32,
    name: String,
    seed: u64,
    geometry: RawGeometry,
    flow: RawFlow,
    pinch: Option<RawPinch>,
    outputs: Option<RawOutputs>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    kind: String,
    n: Option<usize>,
    kappa: Option<f64>,
    radius: Option<f64>,
    n1: Option<usize>,
    radius1: Option<f64>,
    n2: Option<usize>,
    radius2: Option<f64>,
    group: Option<String>,
    a: Option<f64>,
    b: Option<f64>,
    c: Option<f64>,
    n_fiber: Option<usize>,
    points: Option<usize>,
    neck: Option<f64>,
    power: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlow {
    t_end: f64,
    dt_init: Option<f64>,
    dt_min: Option<f64>,
    safety: Option<f64>,
    max_steps: Option<usize>,
    blowup_ratio: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPinch {
    gamma: Option<f64>,
    big_c1: Option<f64>,
    c2: Option<f64>,
    c3: Option<f64>,
    c4: Option<f64>,
    fd_step: Option<f64>,
    anchors: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutputs {
    csv_path: Option<PathBuf>,
    summary_path: Option<PathBuf>,
}

/// Geometry as written in the config; kept alongside the built spec so
/// reports can name it.
#[derive(Debug, Clone, PartialEq)]
pub enum GeometryConfig {
    ConstantCurvature { n: usize, kappa: f64 },
    ProductOfSpheres { n1: usize, radius1: f64, n2: usize, radius2: f64 },
    Milnor { group: MilnorGroup, a: f64, b: f64, c: f64 },
    Neckpinch { n_fiber: usize, points: usize, neck: f64, power: f64 },
}

impl GeometryConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            GeometryConfig::ConstantCurvature { .. } => "constant_curvature",
            GeometryConfig::ProductOfSpheres { .. } => "product_of_spheres",
            GeometryConfig::Milnor { .. } => "milnor",
            GeometryConfig::Neckpinch { .. } => "neckpinch",
        }
    }

    pub fn build(&self) -> GeometrySpec {
        match *self {
            GeometryConfig::ConstantCurvature { n, kappa } => GeometrySpec::ConstantCurvature { n, kappa },
            GeometryConfig::ProductOfSpheres { n1, radius1, n2, radius2 } => GeometrySpec::ProductOfSpheres {
                first: SphereFactor::new(n1, radius1),
                second: SphereFactor::new(n2, radius2),
            },
            GeometryConfig::Milnor { group, a, b, c } => GeometrySpec::Milnor(MilnorFrame { group, a, b, c }),
            GeometryConfig::Neckpinch { n_fiber, points, neck, power } => {
                GeometrySpec::Warped(WarpedProduct::dumbbell(n_fiber, points, neck, power))
            }
        }
    }
}

/// Optional overrides of the pinching constants; `None` keeps the default.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PinchOverrides {
    pub gamma: Option<f64>,
    pub big_c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    pub fd_step: Option<f64>,
}

pub const DEFAULT_ANCHORS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub geometry: GeometryConfig,
    pub t_end: f64,
    pub controls: Controls,
    pub pinch: PinchOverrides,
    pub anchors: usize,
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Byte offset → 1-based line.
fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// `[section]` header name for a line, if it is one.
fn header(line: &str) -> Option<&str> {
    let l = line.trim();
    l.strip_prefix('[')?.strip_suffix(']').map(str::trim)
}

/// Section in force at a byte offset ("" for the top level).
fn section_at(text: &str, offset: usize) -> String {
    let mut sec = String::new();
    let mut pos = 0;
    for line in text.split_inclusive('\n') {
        if pos > offset {
            break;
        }
        if let Some(h) = header(line) {
            sec = h.to_string();
        }
        pos += line.len();
    }
    sec
}

fn dotted(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

/// Line on which `key` is assigned inside `section`.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut sec = "";
    for (i, line) in text.lines().enumerate() {
        if let Some(h) = header(line) {
            sec = h;
            continue;
        }
        if sec != section {
            continue;
        }
        if let Some((k, _)) = line.split_once('=') {
            if k.trim() == key {
                return Some(i + 1);
            }
        }
    }
    None
}

/// Line of the `[section]` header.
fn locate_section(text: &str, section: &str) -> Option<usize> {
    text.lines().position(|l| header(l) == Some(section)).map(|i| i + 1)
}

fn from_toml(text: &str, e: &toml::de::Error) -> ConfigError {
    let message = e.message().trim().to_string();
    let quoted = message.split('`').nth(1).map(str::to_string);
    let Some(span) = e.span() else {
        return ConfigError {
            key: quoted.unwrap_or_default(),
            line: None,
            message,
        };
    };
    let section = section_at(text, span.start);
    let line = line_at(text, span.start);
    let assigned = text
        .lines()
        .nth(line - 1)
        .and_then(|l| l.split_once('='))
        .map(|(k, _)| k.trim().to_string());
    let key = if message.starts_with("missing field") || message.starts_with("unknown field") {
        dotted(&section, quoted.as_deref().unwrap_or(""))
    } else if let Some(k) = assigned {
        dotted(&section, &k)
    } else {
        section.clone()
    };
    ConfigError {
        key,
        line: Some(line),
        message,
    }
}

struct Checker<'a> {
    text: &'a str,
}

impl Checker<'_> {
    fn err(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            key: dotted(section, key),
            line: locate(self.text, section, key).or_else(|| locate_section(self.text, section)),
            message: message.into(),
        }
    }

    fn finite(&self, section: &str, key: &str, v: f64) -> Result<f64, ConfigError> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.err(section, key, format!("{v} is not a finite number")))
        }
    }

    fn positive(&self, section: &str, key: &str, v: f64) -> Result<f64, ConfigError> {
        if self.finite(section, key, v)? > 0.0 {
            Ok(v)
        } else {
            Err(self.err(section, key, format!("{v} must be > 0")))
        }
    }

    fn need<T>(&self, section: &str, key: &str, v: Option<T>) -> Result<T, ConfigError> {
        v.ok_or_else(|| self.err(section, key, "missing required key"))
    }

    fn geometry(&self, g: &RawGeometry) -> Result<GeometryConfig, ConfigError> {
        const S: &str = "geometry";
        let present: Vec<(&str, bool)> = vec![
            ("n", g.n.is_some()),
            ("kappa", g.kappa.is_some()),
            ("radius", g.radius.is_some()),
            ("n1", g.n1.is_some()),
            ("radius1", g.radius1.is_some()),
            ("n2", g.n2.is_some()),
            ("radius2", g.radius2.is_some()),
            ("group", g.group.is_some()),
            ("a", g.a.is_some()),
            ("b", g.b.is_some()),
            ("c", g.c.is_some()),
            ("n_fiber", g.n_fiber.is_some()),
            ("points", g.points.is_some()),
            ("neck", g.neck.is_some()),
            ("power", g.power.is_some()),
        ];
        let allowed: &[&str] = match g.kind.as_str() {
            "constant_curvature" => &["n", "kappa", "radius"],
            "product_of_spheres" => &["n1", "radius1", "n2", "radius2"],
            "milnor" => &["group", "a", "b", "c"],
            "neckpinch" => &["n_fiber", "points", "neck", "power"],
            other => {
                return Err(self.err(
                    S,
                    "kind",
                    format!(
                        "unknown geometry `{other}`, expected one of constant_curvature, \
                         product_of_spheres, milnor, neckpinch"
                    ),
                ))
            }
        };
        if let Some((k, _)) = present.iter().find(|(k, p)| *p && !allowed.contains(k)) {
            return Err(self.err(S, k, format!("not a key of geometry kind `{}`", g.kind)));
        }
        let dim = |key: &str, n: usize, lo: usize, hi: usize| {
            if (lo..=hi).contains(&n) {
                Ok(n)
            } else {
                Err(self.err(S, key, format!("{n} outside {lo}..={hi}")))
            }
        };
        Ok(match g.kind.as_str() {
            "constant_curvature" => {
                let n = dim("n", self.need(S, "n", g.n)?, 3, 8)?;
                let kappa = match (g.kappa, g.radius) {
                    (Some(_), Some(_)) => return Err(self.err(S, "radius", "give either kappa or radius, not both")),
                    (Some(k), None) => self.finite(S, "kappa", k)?,
                    (None, Some(r)) => 1.0 / self.positive(S, "radius", r)?.powi(2),
                    (None, None) => return Err(self.err(S, "kappa", "missing required key (or give radius)")),
                };
                GeometryConfig::ConstantCurvature { n, kappa }
            }
            "product_of_spheres" => {
                let n1 = dim("n1", self.need(S, "n1", g.n1)?, 1, 7)?;
                let n2 = dim("n2", self.need(S, "n2", g.n2)?, 1, 7)?;
                if !(3..=8).contains(&(n1 + n2)) {
                    return Err(self.err(S, "n2", format!("total dimension {} outside 3..=8", n1 + n2)));
                }
                // A circle factor is flat; its radius is still required.
                GeometryConfig::ProductOfSpheres {
                    n1,
                    radius1: self.positive(S, "radius1", self.need(S, "radius1", g.radius1)?)?,
                    n2,
                    radius2: self.positive(S, "radius2", self.need(S, "radius2", g.radius2)?)?,
                }
            }
            "milnor" => {
                let group = match self.need(S, "group", g.group.as_deref())? {
                    "su2" => MilnorGroup::Su2,
                    "nil" => MilnorGroup::Nil,
                    "sol" => MilnorGroup::Sol,
                    other => return Err(self.err(S, "group", format!("unknown group `{other}`, expected su2, nil or sol"))),
                };
                GeometryConfig::Milnor {
                    group,
                    a: self.positive(S, "a", self.need(S, "a", g.a)?)?,
                    b: self.positive(S, "b", self.need(S, "b", g.b)?)?,
                    c: self.positive(S, "c", self.need(S, "c", g.c)?)?,
                }
            }
            _ => {
                let n_fiber = dim("n_fiber", self.need(S, "n_fiber", g.n_fiber)?, 2, 7)?;
                let points = self.need(S, "points", g.points)?;
                if points < 16 {
                    return Err(self.err(S, "points", format!("{points} grid points, need at least 16")));
                }
                let neck = self.positive(S, "neck", self.need(S, "neck", g.neck)?)?;
                let power = self.finite(S, "power", g.power.unwrap_or(1.0))?;
                if power < 0.0 {
                    return Err(self.err(S, "power", format!("{power} must be >= 0")));
                }
                GeometryConfig::Neckpinch { n_fiber, points, neck, power }
            }
        })
    }

    fn flow(&self, f: &RawFlow) -> Result<(f64, Controls), ConfigError> {
        const S: &str = "flow";
        let d = Controls::default();
        let t_end = self.positive(S, "t_end", f.t_end)?;
        let controls = Controls {
            dt_init: self.positive(S, "dt_init", f.dt_init.unwrap_or(d.dt_init))?,
            dt_min: self.positive(S, "dt_min", f.dt_min.unwrap_or(d.dt_min))?,
            safety: self.positive(S, "safety", f.safety.unwrap_or(d.safety))?,
            max_steps: f.max_steps.unwrap_or(d.max_steps),
            blowup_ratio: self.finite(S, "blowup_ratio", f.blowup_ratio.unwrap_or(d.blowup_ratio))?,
            rtol: d.rtol,
        };
        if controls.max_steps == 0 {
            return Err(self.err(S, "max_steps", "must be >= 1"));
        }
        if !(controls.blowup_ratio > 1.0) {
            return Err(self.err(S, "blowup_ratio", format!("{} must be > 1", controls.blowup_ratio)));
        }
        if controls.dt_min > controls.dt_init {
            return Err(self.err(S, "dt_min", "must not exceed dt_init"));
        }
        Ok((t_end, controls))
    }

    fn pinch(&self, p: &RawPinch) -> Result<(PinchOverrides, usize), ConfigError> {
        const S: &str = "pinch";
        let nonneg = |key: &str, v: Option<f64>| -> Result<Option<f64>, ConfigError> {
            match v {
                None => Ok(None),
                Some(v) if self.finite(S, key, v)? >= 0.0 => Ok(Some(v)),
                Some(v) => Err(self.err(S, key, format!("{v} must be >= 0"))),
            }
        };
        let gamma = match p.gamma {
            Some(g) if !(self.finite(S, "gamma", g)? > 0.0 && g <= 2.0) => {
                return Err(self.err(S, "gamma", format!("{g} outside (0, 2]")))
            }
            g => g,
        };
        let pos = |key: &str, v: Option<f64>| v.map(|v| self.positive(S, key, v)).transpose();
        let anchors = p.anchors.unwrap_or(DEFAULT_ANCHORS);
        if anchors == 0 {
            return Err(self.err(S, "anchors", "must be >= 1"));
        }
        Ok((
            PinchOverrides {
                gamma,
                big_c1: pos("big_c1", p.big_c1)?,
                c2: nonneg("c2", p.c2)?,
                c3: nonneg("c3", p.c3)?,
                c4: nonneg("c4", p.c4)?,
                fd_step: pos("fd_step", p.fd_step)?,
            },
            anchors,
        ))
    }
}

/// Parses and validates one scenario file.
pub fn parse_config(bytes: &[u8]) -> Result<ScenarioConfig, ConfigError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ConfigError {
        key: String::new(),
        line: None,
        message: format!("config is not UTF-8: {e}"),
    })?;
    let raw: RawConfig = toml::from_str(text).map_err(|e| from_toml(text, &e))?;
    let ck = Checker { text };
    if raw.format_version != FORMAT_VERSION {
        return Err(ck.err(
            "",
            "format_version",
            format!("version {} not supported, expected {FORMAT_VERSION}", raw.format_version),
        ));
    }
    let name = raw.name.trim().to_string();
    if name.is_empty() || name.contains(['/', '\\']) {
        return Err(ck.err("", "name", "must be non-empty and contain no path separators"));
    }
    let geometry = ck.geometry(&raw.geometry)?;
    let (t_end, controls) = ck.flow(&raw.flow)?;
    let (pinch, anchors) = match &raw.pinch {
        Some(p) => ck.pinch(p)?,
        None => (PinchOverrides::default(), DEFAULT_ANCHORS),
    };
    let outputs = raw.outputs.unwrap_or(RawOutputs {
        csv_path: None,
        summary_path: None,
    });
    let csv_path = outputs.csv_path.unwrap_or_else(|| PathBuf::from(format!("{name}.csv")));
    let summary_path = outputs.summary_path.unwrap_or_else(|| PathBuf::from(format!("{name}.json")));
    if csv_path == summary_path {
        return Err(ck.err("outputs", "summary_path", "must differ from csv_path"));
    }
    Ok(ScenarioConfig {
        name,
        seed: raw.seed,
        geometry,
        t_end,
        controls,
        pinch,
        anchors,
        csv_path,
        summary_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "format_version = 1
name = \"s4\"
seed = 7

[geometry]
kind = \"constant_curvature\"
n = 4
kappa = 1.0

[flow]
t_end = 0.2
";

    fn parse(s: &str) -> Result<ScenarioConfig, ConfigError> {
        parse_config(s.as_bytes())
    }

    #[test]
    fn minimal_round_sphere() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.geometry, GeometryConfig::ConstantCurvature { n: 4, kappa: 1.0 });
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.csv_path, PathBuf::from("s4.csv"));
        assert_eq!(cfg.controls, Controls::default());
    }

    #[test]
    fn radius_gives_kappa() {
        let cfg = parse(&MINIMAL.replace("kappa = 1.0", "radius = 2.0")).unwrap();
        assert_eq!(cfg.geometry, GeometryConfig::ConstantCurvature { n: 4, kappa: 0.25 });
    }

    #[test]
    fn negative_radius_names_key_and_line() {
        let e = parse(&MINIMAL.replace("kappa = 1.0", "radius = -1.0")).unwrap_err();
        assert_eq!(e.key, "geometry.radius");
        assert_eq!(e.line, Some(8));
    }

    #[test]
    fn missing_seed() {
        let e = parse(&MINIMAL.replace("seed = 7\n", "")).unwrap_err();
        assert_eq!(e.key, "seed");
        assert!(e.message.contains("missing"));
    }

    #[test]
    fn missing_nested_key() {
        let e = parse(&MINIMAL.replace("t_end = 0.2\n", "")).unwrap_err();
        assert_eq!(e.key, "flow.t_end");
    }

    #[test]
    fn unknown_key_is_error() {
        let e = parse(&MINIMAL.replace("t_end = 0.2", "t_end = 0.2\ntend = 1.0")).unwrap_err();
        assert_eq!(e.key, "flow.tend");
        assert_eq!(e.line, Some(12));
    }

    #[test]
    fn unknown_geometry_tag() {
        let e = parse(&MINIMAL.replace("constant_curvature", "hyperbolic_cusp")).unwrap_err();
        assert_eq!(e.key, "geometry.kind");
        assert_eq!(e.line, Some(6));
    }

    #[test]
    fn non_finite_number() {
        let e = parse(&MINIMAL.replace("kappa = 1.0", "kappa = nan")).unwrap_err();
        assert_eq!(e.key, "geometry.kappa");
        let e = parse(&MINIMAL.replace("t_end = 0.2", "t_end = inf")).unwrap_err();
        assert_eq!(e.key, "flow.t_end");
    }

    #[test]
    fn foreign_geometry_key() {
        let e = parse(&MINIMAL.replace("n = 4", "n = 4\nradius1 = 1.0")).unwrap_err();
        assert_eq!(e.key, "geometry.radius1");
    }

    #[test]
    fn wrong_type_names_key() {
        let e = parse(&MINIMAL.replace("n = 4", "n = \"four\"")).unwrap_err();
        assert_eq!(e.key, "geometry.n");
        assert_eq!(e.line, Some(7));
    }

    #[test]
    fn version_checked() {
        let e = parse(&MINIMAL.replace("format_version = 1", "format_version = 2")).unwrap_err();
        assert_eq!(e.key, "format_version");
        assert_eq!(e.line, Some(1));
    }
}
