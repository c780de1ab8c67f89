//! Lumped electromagnetic modes: the qubit LC mode, optional extra cavity
//! modes, junction flux zero-point fluctuations and antenna field profiles.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::acoustics::RadialWeight;
use crate::constants::{EPSILON_0, HBAR, REDUCED_FLUX_QUANTUM, TWO_PI};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionSpec {
    /// Josephson inductance L_j (H).
    pub inductance: f64,
    /// Junction width (m), kept for current bookkeeping.
    pub width: f64,
}

impl JunctionSpec {
    pub fn new(inductance: f64, width: f64) -> Result<Self> {
        if !(inductance > 0.0) || !inductance.is_finite() {
            return Err(Error::invalid(format!("junction inductance must be positive, got {inductance}")));
        }
        Ok(Self { inductance, width })
    }

    /// E_j = (Φ₀/2π)²/L_j (J).
    pub fn josephson_energy(&self) -> f64 {
        REDUCED_FLUX_QUANTUM * REDUCED_FLUX_QUANTUM / self.inductance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldShape {
    /// Constant E_z under the antenna footprint.
    UniformDisk,
    /// +E_z on the inner disk r < R/√2, −E_z on the equal-area ring out to R.
    AnnularDipole,
}

/// Parametric antenna field over the piezo region, normalized to a declared
/// effective volume V_eff = ∫ε_r|E|²dV / |E_max|².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaFieldProfile {
    pub shape: FieldShape,
    pub radius: f64,
    /// Vacuum gap between antenna and piezo layer (m).
    pub gap: f64,
    pub effective_volume: f64,
    /// z-range of the piezo layer in stack coordinates (m).
    pub piezo_bottom: f64,
    pub piezo_top: f64,
    /// Lateral extent of the modelled region (dome radius, m).
    pub region_radius: f64,
}

impl AntennaFieldProfile {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("radius", self.radius),
            ("effective_volume", self.effective_volume),
            ("region_radius", self.region_radius),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("antenna {name} must be positive, got {v}")));
            }
        }
        if self.gap < 0.0 || !(self.piezo_top > self.piezo_bottom) {
            return Err(Error::invalid("antenna gap must be non-negative and the piezo range non-empty"));
        }
        Ok(())
    }

    /// Transverse shape s(r) ∈ {−1, 0, 1}.
    pub fn radial_weight(&self) -> RadialWeight {
        match self.shape {
            FieldShape::UniformDisk => RadialWeight::disk(self.radius),
            FieldShape::AnnularDipole => RadialWeight {
                rings: vec![(self.radius / std::f64::consts::SQRT_2, 1.0), (self.radius, -1.0)],
            },
        }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        let tol = 1e-9 * (self.piezo_top - self.piezo_bottom);
        let r = p[0].hypot(p[1]);
        r <= self.region_radius && p[2] >= self.piezo_bottom - tol && p[2] <= self.piezo_top + tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmMode {
    pub label: String,
    /// ω/2π (Hz).
    pub frequency: f64,
    /// Flux zero-point fluctuation per junction (rad).
    pub junction_zpf: Vec<f64>,
    pub capacitance: Option<f64>,
    pub inductance: Option<f64>,
    pub profile: Option<AntennaFieldProfile>,
}

impl EmMode {
    pub fn angular_frequency(&self) -> f64 {
        TWO_PI * self.frequency
    }

    /// Peak single-photon field amplitude √(ħω/ε₀V_eff) (V/m), chosen so that
    /// ½ε₀∫ε_r|E|²dV = ħω/2.
    pub fn single_photon_field(&self) -> Option<f64> {
        self.profile
            .map(|p| (HBAR * self.angular_frequency() / (EPSILON_0 * p.effective_volume)).sqrt())
    }

    /// Field per volt across the qubit capacitance, √(C/ε₀V_eff) (1/m).
    pub fn field_per_volt(&self) -> Option<f64> {
        match (self.profile, self.capacitance) {
            (Some(p), Some(c)) => Some((c / (EPSILON_0 * p.effective_volume)).sqrt()),
            _ => None,
        }
    }

    /// p_j = E_j φ_j² / (½ħω).
    pub fn participation(&self, junctions: &[JunctionSpec]) -> Result<Vec<f64>> {
        if junctions.len() != self.junction_zpf.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} junctions but {} flux values",
                junctions.len(),
                self.junction_zpf.len()
            )));
        }
        let half = 0.5 * HBAR * self.angular_frequency();
        Ok(junctions.iter().zip(&self.junction_zpf).map(|(j, phi)| j.josephson_energy() * phi * phi / half).collect())
    }
}

/// φ² = (ħ/2)·√(L/C)·(2π/Φ₀)² for an LC oscillator.
pub fn lc_flux_zpf(inductance: f64, capacitance: f64) -> f64 {
    ((HBAR / 2.0) * (inductance / capacitance).sqrt()).sqrt() / REDUCED_FLUX_QUANTUM
}

pub fn qubit_mode(junction: &JunctionSpec, capacitance: f64, profile: Option<AntennaFieldProfile>) -> Result<EmMode> {
    if !(capacitance > 0.0) || !capacitance.is_finite() {
        return Err(Error::invalid(format!("capacitance must be positive, got {capacitance}")));
    }
    if let Some(p) = &profile {
        p.validate()?;
    }
    let l = junction.inductance;
    Ok(EmMode {
        label: "qubit".into(),
        frequency: 1.0 / ((l * capacitance).sqrt() * TWO_PI),
        junction_zpf: vec![lc_flux_zpf(l, capacitance)],
        capacitance: Some(capacitance),
        inductance: Some(l),
        profile,
    })
}

/// Inductance giving an LC resonance at `frequency` (Hz).
pub fn inductance_for(frequency: f64, capacitance: f64) -> f64 {
    let w = TWO_PI * frequency;
    1.0 / (capacitance * w * w)
}

/// A user-specified extra mode with fixed frequency and flux.
pub fn cavity_mode(index: usize, frequency: f64, junction_zpf: Vec<f64>, profile: Option<AntennaFieldProfile>) -> EmMode {
    EmMode {
        label: format!("cavity-{index}"),
        frequency,
        junction_zpf,
        capacitance: None,
        inductance: None,
        profile,
    }
}

/// Rebuilds the qubit mode for each inductance, keeping C and the profile.
pub fn sweep_inductance(base: &EmMode, inductances: &[f64]) -> Result<Vec<EmMode>> {
    let c = base
        .capacitance
        .ok_or_else(|| Error::invalid(format!("mode '{}' has no capacitance to sweep against", base.label)))?;
    inductances
        .iter()
        .map(|&l| {
            let width = 0.0;
            let mut m = qubit_mode(&JunctionSpec::new(l, width)?, c, base.profile)?;
            m.label = base.label.clone();
            Ok(m)
        })
        .collect()
}

/// Single-photon electric field at points inside the piezo region.
pub fn field_in_piezo(mode: &EmMode, points: &[[f64; 3]]) -> Result<Vec<Vector3<f64>>> {
    let profile = mode
        .profile
        .ok_or_else(|| Error::invalid(format!("mode '{}' has no field profile", mode.label)))?;
    let e1 = mode.single_photon_field().unwrap_or(0.0);
    let weight = profile.radial_weight();
    points
        .iter()
        .map(|&p| {
            if !profile.contains(p) {
                return Err(Error::OutsideRegion(p[0], p[1], p[2]));
            }
            Ok(Vector3::new(0.0, 0.0, e1 * weight.value(p[0].hypot(p[1]))))
        })
        .collect()
}
