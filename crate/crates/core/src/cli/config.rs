//! Run configuration: a flat set of `key=value` settings with a canonical
//! text form that lists every key, defaults included.

use std::fmt::Write as _;

use serde_json::{Map, Value};

use crate::asymptotics::{default_bands, Band, Column, Family, IndexRange, ScanConfig};
use crate::geometry::{Manifold, Point};
use crate::identities::CheckConfig;
use crate::levelset::{AmbiguityPolicy, ExtractionConfig};
use crate::spectra::{bump_test_function, circle_mode, sectoral_harmonic, torus_mode, zonal_harmonic, EigenMode, TestFunction};

/// A configuration problem; always maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<crate::Error> for ConfigError {
    fn from(e: crate::Error) -> Self {
        ConfigError(e.to_string())
    }
}

type Res<T> = std::result::Result<T, ConfigError>;

fn bad<T>(msg: impl Into<String>) -> Res<T> {
    Err(ConfigError(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    Verify,
    Scan,
    Extract,
    Report,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Verify => "verify",
            CommandKind::Scan => "scan",
            CommandKind::Extract => "extract",
            CommandKind::Report => "report",
        }
    }

    fn parse(s: &str) -> Res<Self> {
        Ok(match s {
            "verify" => CommandKind::Verify,
            "scan" => CommandKind::Scan,
            "extract" => CommandKind::Extract,
            "report" => CommandKind::Report,
            _ => return bad(format!("unknown command '{s}'")),
        })
    }
}

/// Identity checks selectable with `--identity`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum IdentityKind {
    Nodal,
    Weighted,
    Level,
    Corollary,
    Coarea,
    Pair,
    Curious,
    Abspair,
    Localized,
}

impl IdentityKind {
    pub const ALL: [IdentityKind; 9] = [
        IdentityKind::Nodal,
        IdentityKind::Weighted,
        IdentityKind::Level,
        IdentityKind::Corollary,
        IdentityKind::Coarea,
        IdentityKind::Pair,
        IdentityKind::Curious,
        IdentityKind::Abspair,
        IdentityKind::Localized,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IdentityKind::Nodal => "nodal",
            IdentityKind::Weighted => "weighted",
            IdentityKind::Level => "level",
            IdentityKind::Corollary => "corollary",
            IdentityKind::Coarea => "coarea",
            IdentityKind::Pair => "pair",
            IdentityKind::Curious => "curious",
            IdentityKind::Abspair => "abspair",
            IdentityKind::Localized => "localized",
        }
    }

    pub fn parse(s: &str) -> Res<Self> {
        IdentityKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .map_or_else(|| bad(format!("unknown identity '{s}'")), Ok)
    }

    /// Default acceptance threshold on the judged residual.
    pub fn default_tolerance(self) -> f64 {
        match self {
            // quadrature over levels converges more slowly than the exact identities
            IdentityKind::Coarea => 2e-2,
            _ => 1e-3,
        }
    }

    pub fn needs_pair(self) -> bool {
        matches!(self, IdentityKind::Pair | IdentityKind::Curious | IdentityKind::Abspair)
    }
}

/// Which output files to write.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Formats {
    pub json: bool,
    pub csv: bool,
    pub mesh: bool,
}

impl Formats {
    fn parse(s: &str) -> Res<Self> {
        let mut f = Formats { json: false, csv: false, mesh: false };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "json" => f.json = true,
                "csv" => f.csv = true,
                "mesh" => f.mesh = true,
                other => return bad(format!("unknown output format '{other}'")),
            }
        }
        Ok(f)
    }

    fn canonical(&self) -> String {
        let mut v = Vec::new();
        if self.json {
            v.push("json");
        }
        if self.csv {
            v.push("csv");
        }
        if self.mesh {
            v.push("mesh");
        }
        v.join(",")
    }
}

/// `y:x`, optionally with an acceptance band `=target/tol` or `=const/var`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitSpec {
    pub y: Column,
    pub x: Column,
    pub band: Option<Band>,
}

impl FitSpec {
    pub fn parse(s: &str) -> Res<Self> {
        let (cols, band) = match s.split_once('=') {
            Some((c, b)) => (c, Some(b)),
            None => (s, None),
        };
        let Some((y, x)) = cols.split_once(':') else {
            return bad(format!("fit '{s}' is not y:x"));
        };
        let y = Column::parse(y.trim())?;
        let x = Column::parse(x.trim())?;
        let band = match band {
            None => None,
            Some(b) => {
                let Some((t, tol)) = b.split_once('/') else {
                    return bad(format!("band '{b}' is not target/tol or const/variation"));
                };
                let tol = parse_f64(tol)?;
                if !(tol >= 0.0) {
                    return bad(format!("band width {tol} is negative"));
                }
                if t.trim() == "const" {
                    Some(Band::Constant { max_variation: tol })
                } else {
                    Some(Band::Slope { target: parse_f64(t)?, tol })
                }
            }
        };
        Ok(FitSpec { y, x, band })
    }

    pub fn canonical(&self) -> String {
        let mut s = format!("{}:{}", self.y.name(), self.x.name());
        match self.band {
            Some(Band::Slope { target, tol }) => write!(s, "={target}/{tol}").unwrap(),
            Some(Band::Constant { max_variation }) => write!(s, "=const/{max_variation}").unwrap(),
            None => {}
        }
        s
    }
}

/// A float, or a multiple of π written `pi`, `2pi`, `-pi/2`, `3pi/4`.
fn parse_f64(s: &str) -> Res<f64> {
    let s = s.trim();
    let err = || ConfigError(format!("bad number '{s}'"));
    let v = match s.split_once("pi") {
        None => s.parse::<f64>().map_err(|_| err())?,
        Some((coef, rest)) => {
            let coef = match coef.trim() {
                "" => 1.0,
                "-" => -1.0,
                c => c.parse::<f64>().map_err(|_| err())?,
            };
            let den = match rest.trim() {
                "" => 1.0,
                r => r.strip_prefix('/').and_then(|d| d.trim().parse::<f64>().ok()).ok_or_else(err)?,
            };
            coef * std::f64::consts::PI / den
        }
    };
    if !v.is_finite() {
        return bad(format!("number '{s}' is not finite"));
    }
    Ok(v)
}

fn parse_usize(key: &str, s: &str) -> Res<usize> {
    s.trim().parse::<usize>().map_err(|_| ConfigError(format!("{key}: '{s}' is not a non-negative integer")))
}

fn parse_list<T>(s: &str, f: impl Fn(&str) -> Res<T>) -> Res<Vec<T>> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(f).collect()
}

fn join_f64(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// Parses a mode: `k=a[,b[,c]][@phase]`, `zonal:N` or `sectoral:N`.
pub fn parse_mode(spec: &str) -> Res<EigenMode> {
    let spec = spec.trim();
    if let Some(n) = spec.strip_prefix("zonal:") {
        return Ok(zonal_harmonic(parse_degree(n)?)?);
    }
    if let Some(n) = spec.strip_prefix("sectoral:") {
        return Ok(sectoral_harmonic(parse_degree(n)?)?);
    }
    let Some(body) = spec.strip_prefix("k=") else {
        return bad(format!("mode '{spec}' is not k=…, zonal:N or sectoral:N"));
    };
    let (ks, phase) = match body.split_once('@') {
        Some((k, p)) => (k, parse_f64(p)?),
        None => (body, 0.0),
    };
    let k: Vec<i64> = parse_list(ks, |c| c.parse::<i64>().map_err(|_| ConfigError(format!("bad wave vector '{ks}'"))))?;
    Ok(match k.len() {
        1 => circle_mode(k[0], phase)?,
        2 | 3 => torus_mode(k.len(), &k, phase)?,
        n => return bad(format!("wave vector with {n} components")),
    })
}

fn parse_degree(s: &str) -> Res<u32> {
    s.trim().parse::<u32>().map_err(|_| ConfigError(format!("bad degree '{s}'")))
}

/// Parses a test function: `one`, `const:v`, `mode:<mode>` or `bump:x,y,r`.
pub fn parse_test_function(spec: &str, manifold: Manifold) -> Res<TestFunction> {
    let spec = spec.trim();
    if spec == "one" {
        return Ok(TestFunction::constant(manifold, 1.0));
    }
    if let Some(v) = spec.strip_prefix("const:") {
        return Ok(TestFunction::constant(manifold, parse_f64(v)?));
    }
    if let Some(m) = spec.strip_prefix("mode:") {
        let mode = parse_mode(m)?;
        if mode.manifold() != manifold {
            return bad(format!("test function lives on {}, mode on {manifold}", mode.manifold()));
        }
        return Ok(TestFunction::from_mode(&mode));
    }
    if spec.starts_with("bump:") {
        let (c, r) = bump_params(spec)?;
        return Ok(bump_test_function(manifold, c, r)?);
    }
    bad(format!("test function '{spec}' is not one, const:v, mode:… or bump:x,y,r"))
}

fn bump_params(spec: &str) -> Res<(Point, f64)> {
    let body = spec.trim().strip_prefix("bump:").ok_or_else(|| ConfigError(format!("'{spec}' is not a bump")))?;
    let v = parse_list(body, parse_f64)?;
    match v[..] {
        [x, y, r] => Ok(([x, y, 0.0], r)),
        [x, y, z, r] => Ok(([x, y, z], r)),
        _ => bad(format!("bump needs x,y,r or x,y,z,r, got '{body}'")),
    }
}

/// Every setting of a run. [`RunConfig::canonical`] lists all keys in a
/// fixed order; parsing that text yields an identical configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    /// Manifold name, or `auto` to take it from the mode.
    pub manifold: String,
    pub mode: String,
    /// First mode of pair identities; `auto` means `mode`.
    pub mode_j: String,
    /// Second mode of pair identities; `none` if unused.
    pub mode_k: String,
    pub test_function: String,
    pub identities: Vec<IdentityKind>,
    pub levels: Vec<f64>,
    pub n_levels: usize,
    pub resolution: usize,
    /// Threshold per identity, in [`IdentityKind::ALL`] order.
    pub tolerances: Vec<(IdentityKind, f64)>,
    pub family: Family,
    pub range: IndexRange,
    /// Empty before [`RunConfig::finalize`] means "the family's defaults".
    pub fits: Vec<FitSpec>,
    pub base_resolution: usize,
    pub points_per_wavelength: f64,
    pub p_values: Vec<f64>,
    pub ambiguity_policy: AmbiguityPolicy,
    pub newton_steps: usize,
    pub out: String,
    pub formats: Formats,
    /// Report input directory; `auto` means `out`.
    pub input: String,
}

/// Keys in canonical order.
pub const KEYS: [&str; 22] = [
    "command",
    "manifold",
    "mode",
    "mode_j",
    "mode_k",
    "test_function",
    "identity",
    "level",
    "n_levels",
    "resolution",
    "tolerance",
    "family",
    "range",
    "fit",
    "base_resolution",
    "points_per_wavelength",
    "p_values",
    "ambiguity_policy",
    "newton_steps",
    "out",
    "format",
    "input",
];

impl RunConfig {
    pub fn new(command: CommandKind) -> Self {
        let scan = ScanConfig::default();
        Self {
            command,
            manifold: "auto".into(),
            mode: "k=1,0".into(),
            mode_j: "auto".into(),
            mode_k: "none".into(),
            test_function: "one".into(),
            identities: vec![IdentityKind::Nodal],
            levels: vec![0.0],
            n_levels: 64,
            resolution: 512,
            tolerances: IdentityKind::ALL.iter().map(|k| (*k, k.default_tolerance())).collect(),
            family: Family::Zonal,
            range: IndexRange::new(20, 200, 20).expect("valid default range"),
            fits: Vec::new(),
            base_resolution: scan.base_resolution,
            points_per_wavelength: scan.points_per_wavelength,
            p_values: scan.p_values,
            ambiguity_policy: ExtractionConfig::default().ambiguity_policy,
            newton_steps: ExtractionConfig::default().newton_steps,
            out: ".".into(),
            formats: Formats { json: true, csv: true, mesh: true },
            input: "auto".into(),
        }
    }

    /// Sets one key; `-` and `_` are interchangeable in key names.
    pub fn set(&mut self, key: &str, value: &str) -> Res<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "command" => {
                let c = CommandKind::parse(value)?;
                if c != self.command {
                    return bad(format!("config is for '{}', running '{}'", c.name(), self.command.name()));
                }
            }
            "manifold" => {
                if value != "auto" {
                    Manifold::parse(value)?;
                }
                self.manifold = value.into();
            }
            "mode" => {
                parse_mode(value)?;
                self.mode = value.into();
            }
            "mode_j" => {
                if value != "auto" {
                    parse_mode(value)?;
                }
                self.mode_j = value.into();
            }
            "mode_k" => {
                if value != "none" {
                    parse_mode(value)?;
                }
                self.mode_k = value.into();
            }
            "test_function" | "f" => self.test_function = value.into(),
            "identity" => {
                let ids = if value == "all" { IdentityKind::ALL.to_vec() } else { parse_list(value, IdentityKind::parse)? };
                if ids.is_empty() {
                    return bad("no identity selected");
                }
                self.identities = ids;
            }
            "level" => {
                let v = parse_list(value, parse_f64)?;
                if v.is_empty() {
                    return bad("no level given");
                }
                self.levels = v;
            }
            "n_levels" => self.n_levels = parse_usize(&key, value)?,
            "resolution" => self.resolution = parse_usize(&key, value)?,
            "tolerance" | "tol" => {
                for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                    match part.split_once(':') {
                        Some((name, t)) => {
                            let id = IdentityKind::parse(name.trim())?;
                            let t = parse_tol(t)?;
                            self.tolerances.iter_mut().filter(|(k, _)| *k == id).for_each(|e| e.1 = t);
                        }
                        None => {
                            let t = parse_tol(part)?;
                            self.tolerances.iter_mut().for_each(|e| e.1 = t);
                        }
                    }
                }
            }
            "family" => self.family = Family::parse(value)?,
            "range" => self.range = IndexRange::parse(value)?,
            "fit" => self.fits = parse_list(value, FitSpec::parse)?,
            "base_resolution" => self.base_resolution = parse_usize(&key, value)?,
            "points_per_wavelength" | "ppw" => {
                let v = parse_f64(value)?;
                if !(v > 0.0) {
                    return bad("points_per_wavelength must be positive");
                }
                self.points_per_wavelength = v;
            }
            "p_values" => {
                let v = parse_list(value, parse_f64)?;
                if let Some(p) = v.iter().find(|p| **p < 1.0) {
                    return bad(format!("Lp exponent {p} below 1"));
                }
                self.p_values = v;
            }
            "ambiguity_policy" => self.ambiguity_policy = AmbiguityPolicy::parse(value)?,
            "newton_steps" => self.newton_steps = parse_usize(&key, value)?,
            "out" => {
                if value.is_empty() {
                    return bad("empty output directory");
                }
                self.out = value.into();
            }
            "format" => self.formats = Formats::parse(value)?,
            "input" => {
                if value.is_empty() {
                    return bad("empty input directory");
                }
                self.input = value.into();
            }
            other => return bad(format!("unknown config key '{other}'")),
        }
        Ok(())
    }

    /// Applies a `key = value` text (blank lines and `#` comments allowed).
    pub fn apply_text(&mut self, text: &str) -> Res<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return bad(format!("config line {}: expected key=value, got '{line}'", no + 1));
            };
            self.set(k, v).map_err(|e| ConfigError(format!("config line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    /// Resolves `auto` values and default fits, and checks cross-key
    /// consistency.
    pub fn finalize(mut self) -> Res<Self> {
        let mode = parse_mode(&self.mode)?;
        if self.mode_j == "auto" {
            self.mode_j = self.mode.clone();
        }
        let mode_j = parse_mode(&self.mode_j)?;
        if self.manifold == "auto" {
            self.manifold = mode.manifold().name().into();
        }
        let m = Manifold::parse(&self.manifold)?;
        for (what, md) in [("mode", &mode), ("mode_j", &mode_j)] {
            if md.manifold() != m {
                return bad(format!("{what} '{}' lives on {}, not {m}", md.label(), md.manifold()));
            }
        }
        if self.mode_k != "none" {
            let k = parse_mode(&self.mode_k)?;
            if k.manifold() != m {
                return bad(format!("mode_k '{}' lives on {}, not {m}", k.label(), k.manifold()));
            }
        }
        parse_test_function(&self.test_function, m)?;
        if self.input == "auto" {
            self.input = self.out.clone();
        }
        if self.fits.is_empty() {
            self.fits = default_bands(self.family)
                .into_iter()
                .map(|(y, x, band)| FitSpec { y, x, band: Some(band) })
                .collect();
        } else {
            let defaults = default_bands(self.family);
            for f in &mut self.fits {
                if f.band.is_none() {
                    f.band = defaults.iter().find(|(y, x, _)| *y == f.y && *x == f.x).map(|(_, _, b)| *b);
                }
            }
        }
        if self.command == CommandKind::Verify {
            for id in &self.identities {
                if id.needs_pair() && self.mode_k == "none" {
                    return bad(format!("identity '{}' needs --mode-k", id.name()));
                }
                if *id == IdentityKind::Localized && !self.test_function.starts_with("bump:") {
                    return bad("identity 'localized' needs --test-function bump:x,y,r");
                }
                if *id == IdentityKind::Coarea && self.n_levels < 16 {
                    return bad("coarea needs n_levels ≥ 16");
                }
            }
        }
        if self.command == CommandKind::Scan && self.range.indices().len() < crate::asymptotics::MIN_ROWS {
            return bad(format!("scan range {} has fewer than {} indices", self.range, crate::asymptotics::MIN_ROWS));
        }
        self.check_config()?.extraction.validate()?;
        if self.base_resolution < crate::levelset::MIN_RESOLUTION {
            return bad(format!("base_resolution {} below {}", self.base_resolution, crate::levelset::MIN_RESOLUTION));
        }
        Ok(self)
    }

    /// Every key on its own `key=value` line, in [`KEYS`] order.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.pairs() {
            writeln!(s, "{k}={v}").unwrap();
        }
        s
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        let tol: Vec<String> = self.tolerances.iter().map(|(k, t)| format!("{}:{t}", k.name())).collect();
        let values = [
            self.command.name().to_string(),
            self.manifold.clone(),
            self.mode.clone(),
            self.mode_j.clone(),
            self.mode_k.clone(),
            self.test_function.clone(),
            self.identities.iter().map(|k| k.name()).collect::<Vec<_>>().join(","),
            join_f64(&self.levels),
            self.n_levels.to_string(),
            self.resolution.to_string(),
            tol.join(","),
            self.family.name().to_string(),
            self.range.to_string(),
            self.fits.iter().map(FitSpec::canonical).collect::<Vec<_>>().join(","),
            self.base_resolution.to_string(),
            self.points_per_wavelength.to_string(),
            join_f64(&self.p_values),
            self.ambiguity_policy.name().to_string(),
            self.newton_steps.to_string(),
            self.out.clone(),
            self.formats.canonical(),
            self.input.clone(),
        ];
        KEYS.into_iter().zip(values).collect()
    }

    /// Parses a canonical (or partial) text for `command`.
    pub fn from_text(command: CommandKind, text: &str) -> Res<Self> {
        let mut c = RunConfig::new(command);
        c.apply_text(text)?;
        c.finalize()
    }

    /// The configuration as a JSON object of strings, in canonical order.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        for (k, v) in self.pairs() {
            m.insert(k.to_string(), Value::String(v));
        }
        Value::Object(m)
    }

    pub fn tolerance(&self, id: IdentityKind) -> f64 {
        self.tolerances.iter().find(|(k, _)| *k == id).map(|e| e.1).unwrap_or(id.default_tolerance())
    }

    pub fn manifold(&self) -> Res<Manifold> {
        Ok(Manifold::parse(&self.manifold)?)
    }

    pub fn extraction(&self, resolution: usize) -> ExtractionConfig {
        ExtractionConfig {
            resolution,
            newton_steps: self.newton_steps,
            ambiguity_policy: self.ambiguity_policy,
            ..ExtractionConfig::default()
        }
    }

    pub fn check_config(&self) -> Res<CheckConfig> {
        Ok(CheckConfig { extraction: self.extraction(self.resolution), ..CheckConfig::default() })
    }

    pub fn scan_config(&self) -> ScanConfig {
        ScanConfig {
            base_resolution: self.base_resolution,
            points_per_wavelength: self.points_per_wavelength,
            p_values: self.p_values.clone(),
            extraction: self.extraction(self.base_resolution),
        }
    }

    pub fn bump(&self) -> Res<(Point, f64)> {
        bump_params(&self.test_function)
    }
}

fn parse_tol(s: &str) -> Res<f64> {
    let t = parse_f64(s)?;
    if !(t > 0.0) {
        return bad(format!("tolerance {t} must be positive"));
    }
    Ok(t)
}
