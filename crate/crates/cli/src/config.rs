//! Run configuration: JSON file, defaults for every omitted key, flag overrides.

use std::path::Path;

use num_complex::Complex64;
use polylie::quasiclassical::HpVariant;
use polylie::{ModelParams, Sector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub truncation: TruncationConfig,
    pub quasiclassical: QuasiclassicalConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub m: u32,
    pub n: u32,
    pub omega0: f64,
    pub omega1: f64,
    pub g_re: f64,
    pub g_im: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { m: 1, n: 1, omega0: 1.0, omega1: 1.0, g_re: 0.5, g_im: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationConfig {
    /// Two-mode Fock cutoff on total quanta.
    pub fock_total: u32,
    /// Highest kept level of noncompact sectors.
    pub v_max: usize,
    pub dim_cap: usize,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self {
            fock_total: polylie::fock::DEFAULT_TWO_MODE_CUTOFF,
            v_max: polylie::algebra::DEFAULT_V_MAX,
            dim_cap: polylie::algebra::DIM_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum VariantChoice {
    Auto,
    Su2,
    Su11,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuasiclassicalConfig {
    pub variant: VariantChoice,
    #[serde(rename = "J")]
    pub j: Option<f64>,
    /// Upper end of the stationarity scan; the variant's default when absent.
    pub r_max: Option<f64>,
    pub grid: usize,
    pub dt: f64,
    pub t_end: f64,
}

impl Default for QuasiclassicalConfig {
    fn default() -> Self {
        Self {
            variant: VariantChoice::Auto,
            j: None,
            r_max: None,
            grid: polylie::quasiclassical::SCAN_POINTS,
            dt: 1e-3,
            t_end: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub format: Format,
    pub path: Option<String>,
    /// Significant digits; 17 selects the shortest round-trip form.
    pub precision: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { format: Format::Csv, path: None, precision: 17 }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            truncation: TruncationConfig::default(),
            quasiclassical: QuasiclassicalConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError(msg));
        let m = &self.model;
        if m.n == 0 {
            return bad("model.n must be at least 1".into());
        }
        for (name, x) in [("omega0", m.omega0), ("omega1", m.omega1), ("g_re", m.g_re), ("g_im", m.g_im)] {
            if !x.is_finite() {
                return bad(format!("model.{name} must be finite"));
            }
        }
        let t = &self.truncation;
        if t.v_max == 0 || t.dim_cap == 0 {
            return bad("truncation.v_max and truncation.dim_cap must be positive".into());
        }
        let q = &self.quasiclassical;
        if let Some(j) = q.j {
            if !(j > 0.0 && j.is_finite()) {
                return bad(format!("quasiclassical.J must be positive, got {j}"));
            }
        }
        if let Some(r) = q.r_max {
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("quasiclassical.r_max must be positive, got {r}"));
            }
        }
        if q.grid < 2 {
            return bad("quasiclassical.grid must be at least 2".into());
        }
        if !(q.dt > 0.0 && q.dt.is_finite()) {
            return bad(format!("quasiclassical.dt must be positive, got {}", q.dt));
        }
        if !(q.t_end >= 0.0 && q.t_end.is_finite()) {
            return bad(format!("quasiclassical.t_end must be nonnegative, got {}", q.t_end));
        }
        if !(1..=17).contains(&self.output.precision) {
            return bad(format!("output.precision must be in 1..=17, got {}", self.output.precision));
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams, ConfigError> {
        let m = &self.model;
        ModelParams::new(m.m, m.n, m.omega0, m.omega1, Complex64::new(m.g_re, m.g_im))
            .map_err(|e| ConfigError(e.to_string()))
    }

    pub fn variant_for(&self, sector: &Sector) -> HpVariant {
        match self.quasiclassical.variant {
            VariantChoice::Auto => HpVariant::for_sector(sector),
            VariantChoice::Su2 => HpVariant::Su2,
            VariantChoice::Su11 => HpVariant::Su11,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
