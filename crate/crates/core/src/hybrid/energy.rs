use nalgebra::{Matrix3, Vector3};

use super::HybridMode;
use crate::emmodes::JunctionSpec;
use crate::error::{Error, Result};

/// Field values at one quadrature point with weight dV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub weight: f64,
    pub e_field: Vector3<f64>,
    pub displacement: Vector3<f64>,
    pub stress: Matrix3<f64>,
    pub strain: Matrix3<f64>,
}

/// (Ē_elec, Ē_strain) = (¼∫E·D dV, ¼∫S:ε dV) for real amplitudes.
pub fn field_energies(samples: &[FieldSample]) -> (f64, f64) {
    samples.iter().fold((0.0, 0.0), |(e, s), p| {
        (e + 0.25 * p.weight * p.e_field.dot(&p.displacement), s + 0.25 * p.weight * p.stress.dot(&p.strain))
    })
}

/// p_j = W_j/(Ē_elec + Ē_strain) with W_j = ½L_j I_j².
pub fn epr(mode: &HybridMode, junctions: &[JunctionSpec]) -> Result<Vec<f64>> {
    let total = mode.electric_energy + mode.strain_energy;
    if !(total > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    if junctions.len() != mode.junction_current.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} junctions but {} currents",
            junctions.len(),
            mode.junction_current.len()
        )));
    }
    Ok(junctions
        .iter()
        .zip(&mode.junction_current)
        .map(|(j, i)| 0.5 * j.inductance * i * i / total)
        .collect())
}

/// ¼vᵀKv: time-averaged strain energy of a real FEM amplitude vector.
pub fn fem_strain_energy(k: &crate::linalg::SkylineMatrix, v: &[f64]) -> f64 {
    0.25 * k.bilinear(v, v)
}
