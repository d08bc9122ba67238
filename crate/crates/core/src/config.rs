//! Run configuration: an INI-style file layered over defaults, then
//! command-line overrides layered over the file.
//!
//! ```text
//! [roi]
//! condyle_rect = 500,900,224,448
//! shaft_extension = 50
//! cortex_rows = 100,140
//! min_sep = 10
//! [bilateral]
//! d = 30
//! sigma_color = 100
//! sigma_space = 100
//! [kmeans]
//! k = 4
//! eps = 1.0
//! max_iter = 10
//! seed = 0
//! [canny]
//! low = 50
//! high = 150
//! [side]
//! image_left_posterior = Right
//! image_right_posterior = Left
//! [output]
//! dir = out
//! ```

use std::collections::HashSet;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::imaging::CropRect;
use crate::measurement::Limb;
use crate::pipeline::PipelineConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: unknown key '{key}' in [{section}]")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("line {line}: duplicate key '{key}' in [{section}]")]
    DuplicateKey { line: usize, section: String, key: String },
    #[error("line {line}: bad value for '{key}': {message}")]
    BadValue { line: usize, key: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn parse_list<T: FromStr>(s: &str, n: usize) -> Result<Vec<T>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(format!("expected {n} comma-separated values, got {}", parts.len()));
    }
    parts
        .iter()
        .map(|p| p.parse::<T>().map_err(|_| format!("'{p}' is not a valid number")))
        .collect()
}

/// `x0,x1,y0,y1` with `x0 < x1` and `y0 < y1`.
pub fn parse_roi_flag(s: &str) -> Result<CropRect, String> {
    let v = parse_list::<usize>(s, 4)?;
    if v[0] >= v[1] || v[2] >= v[3] {
        return Err(format!("empty rectangle x {}..{} y {}..{}", v[0], v[1], v[2], v[3]));
    }
    Ok(CropRect::new(v[0], v[1], v[2], v[3]))
}

/// `r1,r2` with distinct rows.
pub fn parse_cortex_rows(s: &str) -> Result<[usize; 2], String> {
    let v = parse_list::<usize>(s, 2)?;
    if v[0] == v[1] {
        return Err(format!("cortex rows must differ, got {} twice", v[0]));
    }
    Ok([v[0], v[1]])
}

fn parse_limb(s: &str) -> Result<Limb, String> {
    match s.to_ascii_lowercase().as_str() {
        "left" => Ok(Limb::Left),
        "right" => Ok(Limb::Right),
        "unknown" => Ok(Limb::Unknown),
        _ => Err(format!("'{s}' is not one of Left, Right, Unknown")),
    }
}

fn num<T: FromStr>(s: &str) -> Result<T, String> {
    s.parse::<T>().map_err(|_| format!("'{s}' is not a valid number"))
}

fn finite(s: &str) -> Result<f64, String> {
    let v: f64 = num(s)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

fn set(cfg: &mut PipelineConfig, section: &str, key: &str, value: &str) -> Option<Result<(), String>> {
    let r = match (section, key) {
        ("roi", "condyle_rect") => parse_roi_flag(value).map(|v| cfg.roi.condyle_rect = v),
        ("roi", "shaft_extension") => num(value).map(|v| cfg.roi.shaft_extension = v),
        ("roi", "cortex_rows") => parse_cortex_rows(value).map(|v| cfg.roi.cortex_rows = v),
        ("roi", "min_sep") => num(value).map(|v| cfg.roi.min_sep = v),
        ("bilateral", "d") => num(value).map(|v| cfg.bilateral.d = v),
        ("bilateral", "sigma_color") => finite(value).map(|v| cfg.bilateral.sigma_color = v),
        ("bilateral", "sigma_space") => finite(value).map(|v| cfg.bilateral.sigma_space = v),
        ("kmeans", "k") => num(value).map(|v| cfg.kmeans.k = v),
        ("kmeans", "eps") => finite(value).map(|v| cfg.kmeans.eps = v),
        ("kmeans", "max_iter") => num(value).map(|v| cfg.kmeans.max_iter = v),
        ("kmeans", "seed") => num(value).map(|v| cfg.kmeans.seed = v),
        ("canny", "low") => finite(value).map(|v| cfg.canny.low = v),
        ("canny", "high") => finite(value).map(|v| cfg.canny.high = v),
        ("side", "image_left_posterior") => parse_limb(value).map(|v| cfg.side.image_left_posterior = v),
        ("side", "image_right_posterior") => parse_limb(value).map(|v| cfg.side.image_right_posterior = v),
        ("output", "dir") => {
            cfg.out_dir = Some(PathBuf::from(value));
            Ok(())
        }
        _ => return None,
    };
    Some(r)
}

const SECTIONS: [&str; 6] = ["roi", "bilateral", "kmeans", "canny", "side", "output"];

/// Applies an INI document on top of `base`. Blank lines and lines starting
/// with `#` or `;` are ignored; keys before any section header are errors.
pub fn apply_ini(base: &PipelineConfig, text: &str) -> Result<PipelineConfig, ConfigError> {
    let mut cfg = base.clone();
    let mut section: Option<String> = None;
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line,
                message: "unterminated section header".into(),
            })?;
            let name = name.trim().to_ascii_lowercase();
            if !SECTIONS.contains(&name.as_str()) {
                return Err(ConfigError::UnknownSection { line, name });
            }
            section = Some(name);
            continue;
        }
        let Some((k, v)) = s.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                message: format!("expected 'key = value', got '{s}'"),
            });
        };
        let Some(sec) = section.as_deref() else {
            return Err(ConfigError::Syntax {
                line,
                message: "key outside of any section".into(),
            });
        };
        let (key, value) = (k.trim().to_ascii_lowercase(), v.trim());
        if !seen.insert((sec.to_string(), key.clone())) {
            return Err(ConfigError::DuplicateKey {
                line,
                section: sec.into(),
                key,
            });
        }
        match set(&mut cfg, sec, &key, value) {
            None => {
                return Err(ConfigError::UnknownKey {
                    line,
                    section: sec.into(),
                    key,
                })
            }
            Some(Err(message)) => return Err(ConfigError::BadValue { line, key, message }),
            Some(Ok(())) => {}
        }
    }
    Ok(cfg)
}

/// Command-line values; each present field replaces the file/default value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub canny_low: Option<f64>,
    pub canny_high: Option<f64>,
    pub roi: Option<CropRect>,
    pub cortex_rows: Option<[usize; 2]>,
    pub out_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(v) = self.seed {
            cfg.kmeans.seed = v;
        }
        if let Some(v) = self.canny_low {
            cfg.canny.low = v;
        }
        if let Some(v) = self.canny_high {
            cfg.canny.high = v;
        }
        if let Some(v) = self.roi {
            cfg.roi.condyle_rect = v;
        }
        if let Some(v) = self.cortex_rows {
            cfg.roi.cortex_rows = v;
        }
        if let Some(v) = &self.out_dir {
            cfg.out_dir = Some(v.clone());
        }
    }
}

pub fn validate(cfg: &PipelineConfig) -> Result<(), ConfigError> {
    cfg.roi.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let b = &cfg.bilateral;
    if b.d < 1 || !(b.sigma_color > 0.0) || !(b.sigma_space > 0.0) {
        return Err(ConfigError::Invalid(format!(
            "bilateral parameters out of range: {b:?}"
        )));
    }
    let k = &cfg.kmeans;
    if k.k < 1 || k.max_iter < 1 || !(k.eps >= 0.0) {
        return Err(ConfigError::Invalid(format!("k-means parameters out of range: {k:?}")));
    }
    let c = &cfg.canny;
    if !(c.low >= 0.0 && c.low <= c.high) {
        return Err(ConfigError::Invalid(format!(
            "canny thresholds need 0 <= low <= high, got {} and {}",
            c.low, c.high
        )));
    }
    Ok(())
}

/// Defaults, then `file_text` if given, then `overrides`; validated.
pub fn resolve(file_text: Option<&str>, overrides: &Overrides) -> Result<PipelineConfig, ConfigError> {
    let mut cfg = match file_text {
        Some(t) => apply_ini(&PipelineConfig::default(), t)?,
        None => PipelineConfig::default(),
    };
    overrides.apply(&mut cfg);
    validate(&cfg)?;
    Ok(cfg)
}
