//! Flat `section.key = value` run configuration.
//!
//! ```text
//! # comments run to end of line
//! landscape.x2 = 0.4
//! dynamics.init_mode = alternating
//! grid.eta_values = 0.001, 0.01, 0.1
//! output.formats = csv, svg
//! ```
//!
//! Unknown keys, duplicate keys and malformed values are errors. Every key not
//! given in the document is filled from the defaults, and each such fill is
//! reported through `log::info!`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::dynamics::{DynamicsConfig, InitMode};
use crate::error::{Error, Result};
use crate::experiments::SweepGrid;
use crate::landscape::LandscapeParams;

pub const DEFAULT_EPSILON: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub svg: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Self { csv: true, svg: false }
    }
}

impl Formats {
    fn render(&self) -> String {
        let mut v = Vec::new();
        if self.csv {
            v.push("csv");
        }
        if self.svg {
            v.push("svg");
        }
        v.join(", ")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub landscape: LandscapeParams,
    pub dynamics: DynamicsConfig,
    /// `None` when the document has no `grid.*` keys.
    pub grid: Option<SweepGrid>,
    /// Freezing-criterion constant ε.
    pub epsilon: f64,
    pub output_dir: PathBuf,
    pub formats: Formats,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            landscape: LandscapeParams::default(),
            dynamics: DynamicsConfig::default(),
            grid: None,
            epsilon: DEFAULT_EPSILON,
            output_dir: PathBuf::from("out"),
            formats: Formats::default(),
        }
    }
}

const LANDSCAPE_KEYS: [&str; 8] = ["x1", "x2", "x0", "f0", "y_b", "y_f", "l_d", "y_d"];
const DYNAMICS_KEYS: [&str; 9] = [
    "eta",
    "sigma",
    "t_max",
    "y0",
    "init_mode",
    "x_init_offset",
    "clamp_y",
    "seed",
    "record_stride",
];
const GRID_KEYS: [&str; 4] = ["eta_values", "sigma_values", "runs_per_cell", "base_seed"];
const OTHER_KEYS: [&str; 3] = ["theory.epsilon", "output.dir", "output.formats"];

fn known_key(key: &str) -> bool {
    let in_section = |prefix: &str, names: &[&str]| {
        key.strip_prefix(prefix).is_some_and(|rest| names.contains(&rest))
    };
    in_section("landscape.", &LANDSCAPE_KEYS)
        || in_section("dynamics.", &DYNAMICS_KEYS)
        || in_section("grid.", &GRID_KEYS)
        || OTHER_KEYS.contains(&key)
}

struct Entries {
    map: HashMap<String, (usize, String)>,
    provenance: Vec<String>,
}

impl Entries {
    fn get<T>(
        &mut self,
        key: &str,
        default: T,
        show: impl Fn(&T) -> String,
        parse: impl Fn(&str) -> std::result::Result<T, String>,
    ) -> Result<T> {
        match self.map.get(key) {
            Some((line, raw)) => parse(raw).map_err(|msg| Error::Parse {
                line: *line,
                msg: format!("{key}: {msg}"),
            }),
            None => {
                self.provenance.push(format!("{key} = {} (default)", show(&default)));
                Ok(default)
            }
        }
    }

    fn float(&mut self, key: &str, default: f64) -> Result<f64> {
        self.get(key, default, |v| v.to_string(), parse_float)
    }

    fn uint(&mut self, key: &str, default: u64) -> Result<u64> {
        self.get(key, default, |v| v.to_string(), |s| {
            s.parse::<u64>().map_err(|e| format!("expected a non-negative integer ({e})"))
        })
    }
}

fn parse_float(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>().map_err(|e| format!("expected a number ({e})"))
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',').map(|t| parse_float(t.trim())).collect()
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false (got '{s}')")),
    }
}

fn parse_formats(s: &str) -> std::result::Result<Formats, String> {
    let mut f = Formats { csv: false, svg: false };
    for t in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match t {
            "csv" => f.csv = true,
            "svg" => f.svg = true,
            other => return Err(format!("unknown format '{other}' (expected csv or svg)")),
        }
    }
    Ok(f)
}

fn show_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn tokenize(text: &str) -> Result<HashMap<String, (usize, String)>> {
    let mut map = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(Error::Parse { line, msg: format!("expected 'key = value', got '{content}'") });
        };
        let (k, v) = (k.trim(), v.trim());
        if !known_key(k) {
            return Err(Error::Parse { line, msg: format!("unknown key '{k}'") });
        }
        if v.is_empty() {
            return Err(Error::Parse { line, msg: format!("{k}: missing value") });
        }
        if let Some((first, _)) = map.insert(k.to_string(), (line, v.to_string())) {
            return Err(Error::Parse { line, msg: format!("duplicate key '{k}' (first on line {first})") });
        }
    }
    Ok(map)
}

/// Parses a config document, returning the resolved config and one line per
/// default that was applied.
pub fn parse_with_provenance(text: &str) -> Result<(RunConfig, Vec<String>)> {
    let mut e = Entries { map: tokenize(text)?, provenance: Vec::new() };
    let base = RunConfig::default();

    let l = base.landscape;
    let landscape = LandscapeParams::new(
        e.float("landscape.x1", l.x1())?,
        e.float("landscape.x2", l.x2())?,
        e.float("landscape.x0", l.x0())?,
        e.float("landscape.f0", l.f0())?,
        e.float("landscape.y_b", l.y_b())?,
        e.float("landscape.y_f", l.y_f())?,
        e.float("landscape.l_d", l.l_d())?,
        e.float("landscape.y_d", l.y_d())?,
    )?;

    let d = base.dynamics;
    let dynamics = DynamicsConfig {
        eta: e.float("dynamics.eta", d.eta)?,
        sigma: e.float("dynamics.sigma", d.sigma)?,
        t_max: e.uint("dynamics.t_max", d.t_max)?,
        y0: e.float("dynamics.y0", d.y0)?,
        init_mode: e.get("dynamics.init_mode", d.init_mode, |m| m.as_str().into(), |s| {
            s.parse::<InitMode>().map_err(|err| err.to_string())
        })?,
        x_init_offset: e.float("dynamics.x_init_offset", d.x_init_offset)?,
        clamp_y: e.get("dynamics.clamp_y", d.clamp_y, |b| b.to_string(), parse_bool)?,
        seed: e.uint("dynamics.seed", d.seed)?,
        record_stride: e.uint("dynamics.record_stride", d.record_stride)?,
    };
    dynamics.validate()?;

    let grid = if e.map.keys().any(|k| k.starts_with("grid.")) {
        let g = SweepGrid::default();
        let grid = SweepGrid {
            eta_values: e.get("grid.eta_values", g.eta_values, |v| show_list(v), parse_list)?,
            sigma_values: e.get("grid.sigma_values", g.sigma_values, |v| show_list(v), parse_list)?,
            runs_per_cell: e.uint("grid.runs_per_cell", g.runs_per_cell as u64)? as usize,
            base_seed: e.uint("grid.base_seed", g.base_seed)?,
        };
        grid.validate()?;
        Some(grid)
    } else {
        None
    };

    let epsilon = e.float("theory.epsilon", base.epsilon)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Invalid(format!("theory.epsilon > 0 required (got {epsilon})")));
    }
    let output_dir = e.get(
        "output.dir",
        base.output_dir,
        |p| p.display().to_string(),
        |s| Ok(PathBuf::from(s)),
    )?;
    let formats = e.get("output.formats", base.formats, Formats::render, parse_formats)?;

    let config = RunConfig { landscape, dynamics, grid, epsilon, output_dir, formats };
    Ok((config, e.provenance))
}

/// Parses a config document, logging every applied default.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let (config, provenance) = parse_with_provenance(text)?;
    for line in provenance {
        log::info!("config: {line}");
    }
    Ok(config)
}

impl RunConfig {
    /// The grid to sweep: the configured one, or the default grid.
    pub fn grid_or_default(&self) -> SweepGrid {
        self.grid.clone().unwrap_or_default()
    }

    /// Renders every key explicitly; `parse_config` of the result is equal to `self`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let l = &self.landscape;
        s.push_str("# landscape\n");
        for (k, v) in LANDSCAPE_KEYS
            .iter()
            .zip([l.x1(), l.x2(), l.x0(), l.f0(), l.y_b(), l.y_f(), l.l_d(), l.y_d()])
        {
            let _ = writeln!(s, "landscape.{k} = {v}");
        }
        let d = &self.dynamics;
        s.push_str("\n# dynamics\n");
        let _ = writeln!(s, "dynamics.eta = {}", d.eta);
        let _ = writeln!(s, "dynamics.sigma = {}", d.sigma);
        let _ = writeln!(s, "dynamics.t_max = {}", d.t_max);
        let _ = writeln!(s, "dynamics.y0 = {}", d.y0);
        let _ = writeln!(s, "dynamics.init_mode = {}", d.init_mode.as_str());
        let _ = writeln!(s, "dynamics.x_init_offset = {}", d.x_init_offset);
        let _ = writeln!(s, "dynamics.clamp_y = {}", d.clamp_y);
        let _ = writeln!(s, "dynamics.seed = {}", d.seed);
        let _ = writeln!(s, "dynamics.record_stride = {}", d.record_stride);
        if let Some(g) = &self.grid {
            s.push_str("\n# grid\n");
            let _ = writeln!(s, "grid.eta_values = {}", show_list(&g.eta_values));
            let _ = writeln!(s, "grid.sigma_values = {}", show_list(&g.sigma_values));
            let _ = writeln!(s, "grid.runs_per_cell = {}", g.runs_per_cell);
            let _ = writeln!(s, "grid.base_seed = {}", g.base_seed);
        }
        s.push('\n');
        let _ = writeln!(s, "theory.epsilon = {}", self.epsilon);
        let _ = writeln!(s, "output.dir = {}", self.output_dir.display());
        let _ = writeln!(s, "output.formats = {}", self.formats.render());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let (c, prov) = parse_with_provenance("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(prov.len(), 8 + 9 + 3);
        assert!(prov.iter().any(|l| l.starts_with("landscape.y_b = 2.5")));
    }

    #[test]
    fn invariant_violation_is_named() {
        let e = parse_config("landscape.x2 = 0.9\n").unwrap_err();
        assert!(e.to_string().contains("x1 > x2 required"), "{e}");
    }

    #[test]
    fn strict_keys_and_line_numbers() {
        let e = parse_config("# header\n\nlandscape.x1 = 0.8\nlandscape.gama = 4\n").unwrap_err();
        assert_eq!(e, Error::Parse { line: 4, msg: "unknown key 'landscape.gama'".into() });
        let e = parse_config("dynamics.eta = fast\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = parse_config("dynamics.eta 0.1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = parse_config("theory.epsilon = 0.1\ntheory.epsilon = 0.2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        assert!(parse_config("output.formats = pdf").is_err());
        assert!(parse_config("grid.runs_per_cell = 3").is_err());
    }

    #[test]
    fn values_and_comments() {
        let c = parse_config(
            "dynamics.init_mode = sharp_side  # trailing\n\
             dynamics.clamp_y = true\n\
             grid.eta_values = 0.001, 0.01\n\
             output.formats = svg\n",
        )
        .unwrap();
        assert_eq!(c.dynamics.init_mode, InitMode::SharpSide);
        assert!(c.dynamics.clamp_y);
        let g = c.grid.unwrap();
        assert_eq!(g.eta_values, vec![0.001, 0.01]);
        assert_eq!(g.sigma_values, SweepGrid::default().sigma_values);
        assert_eq!(c.formats, Formats { csv: false, svg: true });
    }

    #[test]
    fn serialize_round_trip_defaults() {
        let c = RunConfig { grid: Some(SweepGrid::default()), ..RunConfig::default() };
        assert_eq!(parse_config(&c.serialize()).unwrap(), c);
    }
}
