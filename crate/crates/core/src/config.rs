//! Scene files: a TOML document with `[materials]`, `[assembly]` or
//! `[[surfaces]]`, `[sources]`, `[detectors]` and `[tracer]` sections.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::{LensDetector, Side};
use crate::scene::{build_assembly_with, AssemblyParams, MaterialTable, Scene, SceneError, SurfaceSpec};
use crate::sources::{ResolvedSource, SourceConfig, SourceError};
use crate::tracer::{Detectors, RunOptions, TallyMode, TraceLimits};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorPair {
    #[serde(default)]
    pub front: LensDetector,
    #[serde(default)]
    pub back: LensDetector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TracerSection {
    /// Seeds above `i64::MAX` are written as decimal strings.
    #[serde(with = "seed_format")]
    pub seed: u64,
    /// 0 uses every available core.
    pub workers: usize,
    pub max_generation: u32,
    pub roulette_threshold: f64,
    pub roulette_survival: f64,
    pub counted_rays: bool,
}

impl Default for TracerSection {
    fn default() -> Self {
        let l = TraceLimits::default();
        Self {
            seed: 0,
            workers: 0,
            max_generation: l.max_generation,
            roulette_threshold: l.roulette_threshold,
            roulette_survival: l.roulette_survival,
            counted_rays: false,
        }
    }
}

impl TracerSection {
    pub fn limits(&self) -> TraceLimits {
        TraceLimits {
            max_generation: self.max_generation,
            roulette_threshold: self.roulette_threshold,
            roulette_survival: self.roulette_survival,
        }
    }

    pub fn options(&self) -> RunOptions {
        RunOptions {
            seed: self.seed,
            workers: self.workers,
            mode: if self.counted_rays { TallyMode::CountedRays } else { TallyMode::PowerWeighted },
        }
    }
}

mod seed_format {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        if i64::try_from(*seed).is_ok() {
            s.serialize_u64(*seed)
        } else {
            s.serialize_str(&seed.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(u64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Int(v) => Ok(v),
            Repr::Text(t) => t.trim().parse().map_err(|_| de::Error::custom(format!("invalid seed `{t}`"))),
        }
    }
}

/// Complete, serializable run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    #[serde(default)]
    pub materials: MaterialTable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assembly: Option<AssemblyParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surfaces: Option<Vec<SurfaceSpec>>,
    #[serde(default)]
    pub sources: SourceConfig,
    #[serde(default)]
    pub detectors: DetectorPair,
    #[serde(default)]
    pub tracer: TracerSection,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            materials: MaterialTable::default(),
            assembly: Some(AssemblyParams::default()),
            surfaces: None,
            sources: SourceConfig::default(),
            detectors: DetectorPair::default(),
            tracer: TracerSection::default(),
        }
    }
}

/// Parse failure with a 1-based position.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    /// Offending key for unknown-key errors.
    pub key: Option<String>,
    /// Closest valid key, if any is reasonably close.
    pub suggestion: Option<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: ", self.line, self.column)?;
        match (&self.key, &self.suggestion) {
            (Some(k), Some(s)) => write!(f, "unknown key `{k}` (did you mean `{s}`?)"),
            (Some(k), None) => write!(f, "unknown key `{k}`"),
            _ => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error("scene declares both [assembly] and [[surfaces]]")]
    AmbiguousGeometry,
    #[error("{side:?} detector: {reason}")]
    Detector { side: Side, reason: String },
    #[error("{0}")]
    Limits(String),
    #[error("override `{key}`: {reason}")]
    Override { key: String, reason: String },
    #[error("could not serialize scene: {0}")]
    Serialize(String),
}

/// Parse scene-file text.
pub fn parse_config(text: &str) -> Result<SceneConfig, ConfigError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(positioned(text, &e)))?;
    config_from_table(table, text)
}

/// Parse scene-file text after applying `key=value` overrides.
pub fn parse_config_with(text: &str, overrides: &[(String, String)]) -> Result<SceneConfig, ConfigError> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(positioned(text, &e)))?;
    for (k, v) in overrides {
        apply_override(&mut table, k, v)?;
    }
    if overrides.is_empty() {
        config_from_table(table, text)
    } else {
        // positions refer to the rewritten document
        let rewritten = toml::to_string(&table).map_err(|e| ConfigError::Serialize(e.to_string()))?;
        config_from_table(table, &rewritten).map_err(|e| blame_override(e, overrides))
    }
}

/// An unknown key introduced by an override is reported against that override.
fn blame_override(err: ConfigError, overrides: &[(String, String)]) -> ConfigError {
    let ConfigError::Parse(p) = &err else { return err };
    let Some(key) = &p.key else { return err };
    match overrides.iter().find(|(k, _)| k.rsplit('.').next() == Some(key.as_str())) {
        Some((k, _)) => ConfigError::Override {
            key: k.clone(),
            reason: match &p.suggestion {
                Some(s) => format!("unknown key `{key}` (did you mean `{s}`?)"),
                None => format!("unknown key `{key}`"),
            },
        },
        None => err,
    }
}

fn config_from_table(table: toml::Table, text: &str) -> Result<SceneConfig, ConfigError> {
    if let Some(s) = table.get("surfaces") {
        let empty = match s {
            toml::Value::Array(a) => a.is_empty(),
            toml::Value::Table(t) => t.is_empty(),
            _ => false,
        };
        if empty {
            return Err(SceneError::NoSurfaces.into());
        }
    }
    let cfg: SceneConfig = SceneConfig::deserialize(table).map_err(|e| {
        // re-run on the text to recover a span
        match toml::from_str::<SceneConfig>(text) {
            Err(spanned) => ConfigError::Parse(positioned(text, &spanned)),
            Ok(_) => ConfigError::Parse(ParseError {
                line: 1,
                column: 1,
                message: e.to_string(),
                key: None,
                suggestion: None,
            }),
        }
    })?;
    if cfg.assembly.is_some() && cfg.surfaces.is_some() {
        return Err(ConfigError::AmbiguousGeometry);
    }
    Ok(cfg)
}

/// Serialize a configuration back to scene-file text.
pub fn serialize_config(cfg: &SceneConfig) -> Result<String, ConfigError> {
    toml::to_string(cfg).map_err(|e| ConfigError::Serialize(e.to_string()))
}

/// Parse text and build only its scene.
pub fn parse_scene(text: &str) -> Result<Scene, ConfigError> {
    parse_config(text)?.build_scene()
}

/// Write a scene as explicit surfaces.
pub fn serialize_scene(scene: &Scene) -> Result<String, ConfigError> {
    let cfg = SceneConfig {
        materials: scene.material_table(),
        assembly: None,
        surfaces: Some(scene.surface_specs()),
        ..SceneConfig::default()
    };
    serialize_config(&cfg)
}

/// Everything needed to call the tracer.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub scene: Scene,
    pub source: ResolvedSource,
    pub detectors: Detectors,
    pub limits: TraceLimits,
    pub options: RunOptions,
}

impl SceneConfig {
    pub fn build_scene(&self) -> Result<Scene, ConfigError> {
        match (&self.assembly, &self.surfaces) {
            (Some(_), Some(_)) => Err(ConfigError::AmbiguousGeometry),
            (None, Some(specs)) => Ok(Scene::new(&self.materials, specs)?),
            (Some(p), None) => Ok(build_assembly_with(p, &self.materials)?),
            (None, None) => Ok(build_assembly_with(&AssemblyParams::default(), &self.materials)?),
        }
    }

    pub fn resolve(&self) -> Result<ResolvedRun, ConfigError> {
        let scene = self.build_scene()?;
        let source = self.sources.resolve(&scene)?;
        let cz = source.centroid().z;
        for (side, lens) in [(Side::Front, &self.detectors.front), (Side::Back, &self.detectors.back)] {
            lens.check().map_err(|reason| ConfigError::Detector { side, reason })?;
        }
        let detectors = Detectors {
            front: self.detectors.front.resolve(Side::Front, cz),
            back: self.detectors.back.resolve(Side::Back, cz),
        };
        let limits = self.tracer.limits();
        limits.check().map_err(|e| ConfigError::Limits(e.to_string()))?;
        Ok(ResolvedRun { scene, source, detectors, limits, options: self.tracer.options() })
    }

    /// Copy with one dotted key replaced, as `--set` does.
    pub fn with_override(&self, key: &str, value: &str) -> Result<SceneConfig, ConfigError> {
        let mut table = toml::Table::try_from(self).map_err(|e| ConfigError::Serialize(e.to_string()))?;
        apply_override(&mut table, key, value)?;
        let text = toml::to_string(&table).map_err(|e| ConfigError::Serialize(e.to_string()))?;
        config_from_table(table, &text)
    }

    /// Copy with a numeric parameter set; see [`expand_path`].
    pub fn with_param(&self, key: &str, value: f64) -> Result<SceneConfig, ConfigError> {
        let mut table = toml::Table::try_from(self).map_err(|e| ConfigError::Serialize(e.to_string()))?;
        for path in expand_path(key) {
            set_path(&mut table, &path, toml::Value::Float(value))
                .map_err(|reason| ConfigError::Override { key: key.to_string(), reason })?;
        }
        let text = toml::to_string(&table).map_err(|e| ConfigError::Serialize(e.to_string()))?;
        config_from_table(table, &text)
    }
}

const ASSEMBLY_KEYS: &[&str] = &[
    "base_side",
    "top_side",
    "frustum_height",
    "anvil_front_diameter",
    "anvil_opening_half_angle",
    "anvil_height",
    "back_cap_radius",
    "glue_thickness",
];

const LENS_KEYS: &[&str] =
    &["focal_length", "aperture_diameter", "lens_plane_z", "detector_active_diameter", "detector_plane_z"];

/// Full dotted paths addressed by a parameter name. Bare assembly fields
/// map into `[assembly]`; bare lens fields map to both detectors.
pub fn expand_path(key: &str) -> Vec<String> {
    if key.contains('.') {
        vec![key.to_string()]
    } else if ASSEMBLY_KEYS.contains(&key) {
        vec![format!("assembly.{key}")]
    } else if LENS_KEYS.contains(&key) {
        vec![format!("detectors.front.{key}"), format!("detectors.back.{key}")]
    } else {
        vec![key.to_string()]
    }
}

/// Apply `key=value` to a parsed document. The value is read as a TOML
/// value, falling back to a plain string.
pub fn apply_override(table: &mut toml::Table, key: &str, value: &str) -> Result<(), ConfigError> {
    let parsed = parse_value(value);
    for path in expand_path(key) {
        set_path(table, &path, parsed.clone())
            .map_err(|reason| ConfigError::Override { key: key.to_string(), reason })?;
    }
    Ok(())
}

/// Split `key=value` as given on the command line.
pub fn split_override(arg: &str) -> Result<(String, String), ConfigError> {
    match arg.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(ConfigError::Override { key: arg.to_string(), reason: "expected key=value".into() }),
    }
}

fn parse_value(value: &str) -> toml::Value {
    let doc = format!("v = {value}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(value.to_string())),
        Err(_) => toml::Value::String(value.to_string()),
    }
}

fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<(), String> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err("empty path segment".into());
    }
    let (last, parents) = parts.split_last().expect("non-empty path");
    let mut cur = table;
    for p in parents {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(format!("`{p}` is not a section")),
        };
    }
    let value = match (cur.get(*last), value) {
        // integers are accepted where floats are expected
        (Some(toml::Value::Float(_)), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
        (_, v) => v,
    };
    cur.insert(last.to_string(), value);
    Ok(())
}

fn positioned(text: &str, err: &toml::de::Error) -> ParseError {
    let (line, column) = match err.span() {
        Some(span) => line_col(text, span.start),
        None => (1, 1),
    };
    let message = err.message().trim().to_string();
    let (key, suggestion) = match unknown_field(&message) {
        Some((key, expected)) => {
            let best = expected
                .iter()
                .map(|e| (strsim::levenshtein(&key, e), e))
                .filter(|(d, e)| *d <= (e.len().max(key.len()) / 2).max(2))
                .min_by_key(|(d, _)| *d)
                .map(|(_, e)| e.clone());
            (Some(key), best)
        }
        None => (None, None),
    };
    ParseError { line, column, message, key, suggestion }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Pull the key and candidate list out of serde's unknown-field message.
fn unknown_field(message: &str) -> Option<(String, Vec<String>)> {
    let rest = message.split("unknown field `").nth(1)?;
    let (key, tail) = rest.split_once('`')?;
    let expected = tail.split('`').skip(1).step_by(2).map(str::to_string).collect();
    Some((key.to_string(), expected))
}
