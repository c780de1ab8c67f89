//! Device description (TOML) and its validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::acoustics::{Boundary, Layer, Polarization, TransverseFamily};
use crate::emmodes::FieldShape;
use crate::error::{Error, Result};
use crate::materials::MaterialLibrary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    /// Seed for every random draw (noise, spurious synthesis).
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub materials: MaterialsConfig,
    pub stack: StackConfig,
    pub dome: DomeConfig,
    pub antenna: AntennaConfig,
    pub qubit: QubitConfig,
    #[serde(default)]
    pub em_modes: Vec<ExtraEmMode>,
    pub solver: SolverConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub loss: LossConfig,
    #[serde(default)]
    pub spurious: Vec<SpuriousConfig>,
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsConfig {
    /// Path to the material library, relative to the config file.
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackConfig {
    pub bottom: Boundary,
    pub top: Boundary,
    pub layers: Vec<Layer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomeConfig {
    /// Base radius r_d (m).
    pub radius: f64,
    /// Dome height (sag) (m).
    pub height: f64,
    /// Overrides the spherical-cap radius of curvature (m).
    #[serde(default)]
    pub radius_of_curvature: Option<f64>,
    /// Separate radius of curvature along y for an astigmatic dome (m).
    #[serde(default)]
    pub radius_of_curvature_y: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntennaConfig {
    pub shape: FieldShape,
    pub radius: f64,
    pub gap: f64,
    /// V_eff (m³): the one calibration parameter of the field model.
    pub effective_volume: f64,
    #[serde(default)]
    pub region_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitConfig {
    pub inductance: f64,
    #[serde(default)]
    pub width: f64,
    pub capacitance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtraEmMode {
    pub frequency: f64,
    pub junction_zpf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Centre of the band of interest (Hz).
    pub target_frequency: f64,
    /// Longitudinal modes kept per transverse family.
    pub count: usize,
    pub elements_per_wavelength: usize,
    pub families: Vec<String>,
    #[serde(default = "default_polarization")]
    pub polarization: String,
    #[serde(default = "default_threshold")]
    pub match_threshold: f64,
    #[serde(default = "default_dispersive_ratio")]
    pub dispersive_ratio: f64,
    /// Qubit frequency below the fundamental LG/HG mode for the Kerr table (Hz).
    #[serde(default = "default_kerr_detuning")]
    pub kerr_detuning: f64,
}

fn default_polarization() -> String {
    "33".into()
}
fn default_threshold() -> f64 {
    crate::modeid::DEFAULT_THRESHOLD
}
fn default_dispersive_ratio() -> f64 {
    crate::hamiltonian::DEFAULT_DISPERSIVE_RATIO
}
fn default_kerr_detuning() -> f64 {
    21e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub inductances: Option<Vec<f64>>,
    #[serde(default)]
    pub start: Option<f64>,
    #[serde(default)]
    pub stop: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
}

impl SweepConfig {
    pub fn values(&self) -> Result<Vec<f64>> {
        if let Some(v) = &self.inductances {
            return Ok(v.clone());
        }
        match (self.start, self.stop, self.points) {
            (Some(a), Some(b), Some(n)) if n >= 2 => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
            (Some(a), _, Some(1)) => Ok(vec![a]),
            _ => Err(Error::config("sweep", "give either `inductances` or `start`, `stop` and `points`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    /// RMS surface roughness σ (m); zero means no roughness limit.
    #[serde(default)]
    pub roughness: f64,
    /// Diffraction aperture radius (m); defaults to the dome radius.
    #[serde(default)]
    pub aperture_radius: Option<f64>,
    #[serde(default)]
    pub dielectric: Vec<DielectricLoss>,
    #[serde(default)]
    pub surface: Vec<SurfaceLoss>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DielectricLoss {
    pub name: String,
    /// Share of the bare qubit's electric energy inside this volume.
    pub filling: f64,
    pub tan_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceLoss {
    pub name: String,
    pub area: f64,
    /// Uniform |H∥| (A/m) for one quantum in the bare qubit mode.
    pub h_field: f64,
    pub skin_depth: f64,
    #[serde(default = "default_mu")]
    pub permeability: f64,
    pub q: f64,
}

fn default_mu() -> f64 {
    crate::constants::MU_0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpuriousConfig {
    pub frequency: f64,
    /// Coupling to the qubit g/2π (Hz).
    pub coupling: f64,
}

/// One violated invariant, keyed by its config path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

/// Parsed config plus where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: DeviceConfig,
    pub path: PathBuf,
    /// Hex SHA-256 of the raw file.
    pub hash: String,
}

impl LoadedConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let text = std::fs::read_to_string(&path)?;
        let config = DeviceConfig::from_toml_str(&text)?;
        Ok(Self { config, hash: sha256_hex(text.as_bytes()), path })
    }

    pub fn base_dir(&self) -> PathBuf {
        self.path.parent().map(Path::to_path_buf).unwrap_or_default()
    }

    pub fn materials_path(&self) -> PathBuf {
        self.base_dir().join(&self.config.materials.path)
    }

    pub fn library(&self) -> Result<MaterialLibrary> {
        MaterialLibrary::load(self.materials_path())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl DeviceConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let key = e.span().map(|s| format!("byte {}", s.start)).unwrap_or_else(|| "document".into());
            Error::config(key, e.message().to_string())
        })
    }

    pub fn families(&self) -> Result<Vec<TransverseFamily>> {
        self.solver
            .families
            .iter()
            .enumerate()
            .map(|(i, s)| s.parse().map_err(|_| Error::config(format!("solver.families[{i}]"), format!("cannot parse '{s}'"))))
            .collect()
    }

    pub fn polarization(&self) -> Result<Polarization> {
        self.solver
            .polarization
            .parse()
            .map_err(|_| Error::config("solver.polarization", format!("unknown polarization '{}'", self.solver.polarization)))
    }

    /// Every violated invariant; empty means valid.
    pub fn validate(&self, lib: Option<&MaterialLibrary>) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut bad = |key: String, message: String| out.push(Violation { key, message });
        let positive = |v: f64| v > 0.0 && v.is_finite();

        if self.stack.layers.is_empty() {
            bad("stack.layers".into(), "no layers".into());
        }
        for (i, l) in self.stack.layers.iter().enumerate() {
            if !positive(l.thickness) {
                bad(format!("stack.layers[{i}].thickness"), format!("must be positive, got {}", l.thickness));
            }
            match lib {
                Some(lib) if lib.get(&l.material).is_err() => {
                    bad(format!("stack.layers[{i}].material"), format!("unknown material '{}'", l.material));
                }
                _ => {}
            }
        }
        for (key, v) in [
            ("dome.radius", self.dome.radius),
            ("dome.height", self.dome.height),
            ("antenna.radius", self.antenna.radius),
            ("antenna.effective_volume", self.antenna.effective_volume),
            ("qubit.inductance", self.qubit.inductance),
            ("qubit.capacitance", self.qubit.capacitance),
            ("solver.target_frequency", self.solver.target_frequency),
            ("solver.match_threshold", self.solver.match_threshold),
            ("solver.dispersive_ratio", self.solver.dispersive_ratio),
        ] {
            if !positive(v) {
                bad(key.into(), format!("must be positive, got {v}"));
            }
        }
        for (key, v) in [("dome.radius_of_curvature", self.dome.radius_of_curvature), ("dome.radius_of_curvature_y", self.dome.radius_of_curvature_y)] {
            if let Some(v) = v {
                if !positive(v) {
                    bad(key.into(), format!("must be positive, got {v}"));
                }
            }
        }
        if self.antenna.gap < 0.0 {
            bad("antenna.gap".into(), format!("must be non-negative, got {}", self.antenna.gap));
        }
        if self.qubit.width < 0.0 {
            bad("qubit.width".into(), format!("must be non-negative, got {}", self.qubit.width));
        }
        if self.solver.elements_per_wavelength < 5 {
            bad(
                "solver.elements_per_wavelength".into(),
                format!("under-resolved mesh: {} elements per wavelength (minimum 5)", self.solver.elements_per_wavelength),
            );
        }
        if self.solver.count == 0 {
            bad("solver.count".into(), "must be at least 1".into());
        }
        if self.solver.families.is_empty() {
            bad("solver.families".into(), "no transverse families".into());
        }
        if let Err(e) = self.families() {
            bad("solver.families".into(), e.to_string());
        }
        if let Err(e) = self.polarization() {
            bad("solver.polarization".into(), e.to_string());
        }
        if let Some(s) = &self.sweep {
            match s.values() {
                Ok(v) if v.is_empty() => bad("sweep".into(), "sweep is empty".into()),
                Ok(v) if v.iter().any(|l| !positive(*l)) => bad("sweep".into(), "inductances must be positive".into()),
                Err(e) => bad("sweep".into(), e.to_string()),
                _ => {}
            }
        }
        if self.loss.roughness < 0.0 {
            bad("loss.roughness".into(), "must be non-negative".into());
        }
        for (i, m) in self.em_modes.iter().enumerate() {
            if !positive(m.frequency) {
                bad(format!("em_modes[{i}].frequency"), "must be positive".into());
            }
            if m.junction_zpf.len() != 1 {
                bad(format!("em_modes[{i}].junction_zpf"), "needs one value per junction (1)".into());
            }
        }
        for (i, s) in self.spurious.iter().enumerate() {
            if !positive(s.frequency) {
                bad(format!("spurious[{i}].frequency"), "must be positive".into());
            }
        }
        out
    }
}
