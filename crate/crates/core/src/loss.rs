//! Loss budgets: participation-weighted inverse sums of partial Q factors.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize, Serializer};

use crate::acoustics::Envelope;
use crate::constants::TWO_PI;
use crate::error::{Error, Result};
use crate::hybrid::HybridMode;

/// A quality factor where `f64::INFINITY` means "no limit".
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Deserialize)]
pub struct QFactor(pub f64);

impl QFactor {
    pub const NO_LIMIT: QFactor = QFactor(f64::INFINITY);

    pub fn is_limited(&self) -> bool {
        self.0.is_finite()
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl Serialize for QFactor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() { s.serialize_f64(self.0) } else { s.serialize_str("no limit") }
    }
}

impl std::fmt::Display for QFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_finite() { write!(f, "{:.6e}", self.0) } else { write!(f, "no limit") }
    }
}

/// 𝓔_k = 2Ē_elec + 2Ē_strain.
pub fn mode_energy(mode: &HybridMode) -> f64 {
    2.0 * (mode.electric_energy + mode.strain_energy)
}

/// Mechanical energy fraction 2Ē_strain/𝓔_k.
pub fn mechanical_fraction(mode: &HybridMode) -> Result<f64> {
    let e = mode_energy(mode);
    if !(e > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    Ok(2.0 * mode.strain_energy / e)
}

fn check_energy(total: f64) -> Result<()> {
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::ZeroEnergy);
    }
    Ok(())
}

/// p = ¼Σ w E·εE / 𝓔 over samples `(dV, E, ε)` inside the lossy volume.
pub fn dielectric_participation(samples: &[(f64, Vector3<f64>, Matrix3<f64>)], total_energy: f64) -> Result<f64> {
    check_energy(total_energy)?;
    Ok(samples.iter().map(|(w, e, eps)| 0.25 * w * e.dot(&(eps * e))).sum::<f64>() / total_energy)
}

/// Tangential magnetic field samples `(dA, |H∥|)` on a named surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceFieldModel {
    pub name: String,
    pub samples: Vec<(f64, f64)>,
}

impl SurfaceFieldModel {
    pub fn uniform(name: impl Into<String>, area: f64, h: f64) -> Self {
        Self { name: name.into(), samples: vec![(area, h)] }
    }
}

/// p = (λμ/4)Σ|H∥|² dA / 𝓔.
pub fn surface_inductive_participation(
    surface: Option<&SurfaceFieldModel>,
    surface_name: &str,
    skin_depth: f64,
    permeability: f64,
    total_energy: f64,
) -> Result<f64> {
    let s = surface.ok_or_else(|| Error::MissingSurfaceField(surface_name.to_string()))?;
    check_energy(total_energy)?;
    if skin_depth < 0.0 || permeability < 0.0 {
        return Err(Error::invalid("skin depth and permeability must be non-negative"));
    }
    let flux: f64 = s.samples.iter().map(|(a, h)| a * h * h).sum();
    Ok(skin_depth * permeability / 4.0 * flux / total_energy)
}

/// Q_rough = h²/(2nσ²); σ = 0 means no limit.
pub fn roughness_q(order: usize, sigma: f64, height: f64) -> Result<QFactor> {
    if sigma < 0.0 || !(height > 0.0) || order == 0 {
        return Err(Error::invalid(format!("roughness needs σ ≥ 0, h > 0, n ≥ 1 (got {sigma}, {height}, {order})")));
    }
    if sigma == 0.0 {
        return Ok(QFactor::NO_LIMIT);
    }
    Ok(QFactor(height * height / (2.0 * order as f64 * sigma * sigma)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diffraction {
    /// Fraction of the envelope's power outside the aperture, lost per round trip.
    pub escaping_fraction: f64,
    pub q: QFactor,
}

/// Q = ω𝓔/P with P = F·𝓔·FSR: the clipped tail F escapes once per round trip.
pub fn diffraction_q(envelope: &Envelope, frequency: f64, free_spectral_range: f64, radius: f64) -> Result<Diffraction> {
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("aperture radius must be positive, got {radius}")));
    }
    if !(frequency > 0.0) || !(free_spectral_range > 0.0) {
        return Err(Error::invalid("diffraction needs positive frequency and free spectral range"));
    }
    let f = envelope.power_outside(radius).max(0.0);
    let q = if f <= 1e-300 { QFactor::NO_LIMIT } else { QFactor(TWO_PI * frequency / (f * free_spectral_range)) };
    Ok(Diffraction { escaping_fraction: f, q })
}

/// One lossy element: participation and its intrinsic Q.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossyElement {
    pub name: String,
    pub participation: f64,
    pub q: QFactor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mechanism {
    pub name: String,
    pub elements: Vec<LossyElement>,
    /// 1/Q = Σ p/Q over elements.
    pub q: QFactor,
}

impl Mechanism {
    pub fn new(name: impl Into<String>, elements: Vec<LossyElement>) -> Result<Self> {
        let mut inv = 0.0;
        for e in &elements {
            if !(e.q.0 > 0.0) {
                return Err(Error::invalid(format!("partial Q of '{}' must be positive", e.name)));
            }
            if e.participation < 0.0 || !e.participation.is_finite() {
                return Err(Error::invalid(format!("participation of '{}' must be non-negative", e.name)));
            }
            inv += e.participation / e.q.0;
        }
        Ok(Self { name: name.into(), elements, q: inverse(inv) })
    }
}

fn inverse(inv: f64) -> QFactor {
    if inv > 0.0 { QFactor(1.0 / inv) } else { QFactor::NO_LIMIT }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossBudget {
    pub mode: String,
    pub mechanisms: Vec<Mechanism>,
    pub combined: QFactor,
}

/// 1/Q_k = Σ_mech 1/Q_mech.
pub fn combine(mode: impl Into<String>, mechanisms: Vec<Mechanism>) -> LossBudget {
    let inv = mechanisms.iter().map(|m| if m.q.is_limited() { 1.0 / m.q.0 } else { 0.0 }).sum();
    LossBudget { mode: mode.into(), mechanisms, combined: inverse(inv) }
}
