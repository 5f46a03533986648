//! Run configuration: config file values, overridden field by field by flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use upb_core::dynamics::Tolerances;
use upb_core::model::ModelParams;
use upb_core::sweep::{Axis, Method, Observable, Param};

/// Environment variable naming the directory for relative output paths.
pub const OUTPUT_DIR_ENV: &str = "UPB_OUTPUT_DIR";

/// `start:stop:count`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Range {
    pub fn axis(self, param: Param) -> Axis {
        Axis::new(param, self.start, self.stop, self.count)
    }
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || format!("invalid range '{s}': expected start:stop:count, e.g. -4:4:401");
        let [start, stop, count] = parts[..] else { return Err(bad()) };
        Ok(Range {
            start: start.trim().parse().map_err(|_| bad())?,
            stop: stop.trim().parse().map_err(|_| bad())?,
            count: count.trim().parse().map_err(|_| bad())?,
        })
    }
}

impl TryFrom<String> for Range {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Range> for String {
    fn from(r: Range) -> String {
        r.to_string()
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}:{:?}:{}", self.start, self.stop, self.count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_cut: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub param: Option<Param>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<Range>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param2: Option<Param>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range2: Option<Range>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vary: Option<Param>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observables: Option<Vec<Observable>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contour: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl RunConfig {
    /// Parse TOML, or JSON for a `.json` path.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    /// Fields set in `flags` replace those in `self`.
    pub fn merged(mut self, flags: &RunConfig) -> Self {
        let s = &mut self;
        overlay!(s, flags; delta, g, chi, omega, kappa, gamma, j, n_cut, param, range, param2, range2, vary,
            method, observables, contour, format, out, jobs, seed, tolerances);
        self
    }

    pub fn params(&self) -> ModelParams {
        let d = ModelParams::default();
        ModelParams {
            delta: self.delta.unwrap_or(d.delta),
            g: self.g.unwrap_or(d.g),
            chi: self.chi.unwrap_or(d.chi),
            omega_drv: self.omega.unwrap_or(d.omega_drv),
            kappa: self.kappa.unwrap_or(d.kappa),
            gamma: self.gamma.unwrap_or(d.gamma),
            j_coupling: self.j.unwrap_or(d.j_coupling),
            n_cut: self.n_cut.unwrap_or(d.n_cut),
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances.unwrap_or_default()
    }

    /// Output path with relative paths placed under `$UPB_OUTPUT_DIR` when set.
    pub fn output_path(&self) -> Option<PathBuf> {
        let out = self.out.as_ref()?;
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if out.is_relative() && !dir.is_empty() => Some(Path::new(&dir).join(out)),
            _ => Some(out.clone()),
        }
    }

    /// Explicit format, else inferred from the output extension, else CSV.
    pub fn output_format(&self) -> Format {
        self.format.unwrap_or_else(|| match &self.out {
            Some(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) => Format::Json,
            _ => Format::Csv,
        })
    }
}
