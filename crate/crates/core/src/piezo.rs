//! Piezoelectric coupling between electromagnetic and acoustic modes.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::acoustics::mode::strain_from_gradient;
use crate::acoustics::{AcousticMode, LayerStack};
use crate::constants::{EPSILON_0, TWO_PI};
use crate::emmodes::EmMode;
use crate::error::{Error, Result};
use crate::materials::{strain_to_voigt, voigt_to_stress, MaterialLibrary, MaterialTensors};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementContribution {
    pub z_bottom: f64,
    pub z_top: f64,
    /// Share of g/2π from this element (Hz).
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingResult {
    pub em_label: String,
    pub acoustic_label: String,
    pub acoustic_frequency: f64,
    /// g/2π (Hz), signed.
    pub g: f64,
    pub elements: Vec<ElementContribution>,
}

impl CouplingResult {
    pub fn angular(&self) -> f64 {
        TWO_PI * self.g
    }
}

/// g/2π from the normalized overlap ½√(ω/ρε₀Ω)·∫f·eᵀ:∇h dV.
///
/// The transverse integral factorizes against the envelope, the longitudinal
/// one is exact on the linear mesh. ρ is the mode's effective density.
pub fn coupling_rate(em: &EmMode, ac: &AcousticMode, stack: &LayerStack, lib: &MaterialLibrary) -> Result<CouplingResult> {
    let profile = em
        .profile
        .ok_or_else(|| Error::UnnormalizedMode(format!("mode '{}' has no field profile", em.label)))?;
    let long = &ac.longitudinal;
    let norm_u = crate::acoustics::mode::integrate_sq(&long.z, &long.profile, None).sqrt();
    if !(norm_u > 0.0) || !(profile.effective_volume > 0.0) {
        return Err(Error::UnnormalizedMode(format!("{} / {}", em.label, ac.label)));
    }
    let weight = profile.radial_weight();
    let t0 = ac.envelope.weighted_integral(&weight);
    let (tx, ty) = ac.envelope.weighted_gradient_integral(&weight);
    let prefactor = 0.5
        * (em.angular_frequency() / (long.effective_density * EPSILON_0 * ac.angular_frequency())).sqrt()
        / (profile.effective_volume.sqrt() * norm_u)
        / TWO_PI;

    let mut elements = Vec::new();
    let interfaces = stack.interfaces();
    for (li, layer) in stack.layers.iter().enumerate() {
        let mat = lib.get(&layer.material)?;
        if mat.piezo_e.iter().all(|&e| e == 0.0) {
            continue;
        }
        let lo = interfaces[li].max(profile.piezo_bottom);
        let hi = interfaces[li + 1].min(profile.piezo_top);
        if hi <= lo {
            continue;
        }
        let mut cuts = vec![lo];
        cuts.extend(long.z.iter().copied().filter(|&z| z > lo && z < hi));
        cuts.push(hi);
        for w in cuts.windows(2) {
            let (h0, h1) = long.integrals(w[0], w[1]);
            let strain = strain_from_gradient(ac.polarization.axis(), [tx * h0, ty * h0, t0 * h1]);
            let e_dot = (mat.piezo_e * strain_to_voigt(&strain))[2];
            elements.push(ElementContribution { z_bottom: w[0], z_top: w[1], value: prefactor * e_dot });
        }
    }
    Ok(CouplingResult {
        em_label: em.label.clone(),
        acoustic_label: ac.label.clone(),
        acoustic_frequency: ac.frequency,
        g: elements.iter().map(|e| e.value).sum(),
        elements,
    })
}

pub fn coupling_spectrum(
    em: &EmMode,
    modes: &[AcousticMode],
    stack: &LayerStack,
    lib: &MaterialLibrary,
) -> Result<Vec<CouplingResult>> {
    if modes.is_empty() {
        return Err(Error::invalid("coupling spectrum needs at least one acoustic mode"));
    }
    modes.iter().map(|m| coupling_rate(em, m, stack, lib)).collect()
}

/// Source fields that couple the elastic and electric equations.
#[derive(Debug, Clone, PartialEq)]
pub struct PiezoSourceTerms {
    /// S_ext = −eᵀ·E per element (Pa).
    pub external_stress: Vec<Matrix3<f64>>,
    /// J_ext = iω e:ε; stored as the amplitude of the quadrature (i) part (A/m²).
    pub external_current: Vec<Vector3<f64>>,
    /// Permittivity entering the electric equation (stress-charge form: ε_S).
    pub permittivity: Matrix3<f64>,
}

pub fn source_terms(
    mat: &MaterialTensors,
    e_field: &[Vector3<f64>],
    strain: &[Matrix3<f64>],
    omega: f64,
) -> Result<PiezoSourceTerms> {
    if e_field.len() != strain.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} field samples but {} strain samples",
            e_field.len(),
            strain.len()
        )));
    }
    Ok(PiezoSourceTerms {
        external_stress: e_field.iter().map(|e| voigt_to_stress(&(-(mat.piezo_e.transpose() * e)))).collect(),
        external_current: strain.iter().map(|s| omega * (mat.piezo_e * strain_to_voigt(s))).collect(),
        permittivity: mat.permittivity_s,
    })
}

/// Permittivity of the effective-medium rewrite, ε̃ = ε_T − d·c_E·dᵀ, built
/// from the constant-stress permittivity ε_T = ε_S + e·dᵀ of strain-charge data.
pub fn effective_medium_permittivity(mat: &MaterialTensors) -> Matrix3<f64> {
    let eps_t = mat.permittivity_s + mat.piezo_e * mat.piezo_d.transpose();
    eps_t - mat.piezo_d * mat.stiffness_e * mat.piezo_d.transpose()
}

/// Angular frequency of a z-propagating longitudinal plane wave e^{ikz}
/// in an unbounded piezoelectric medium, found by applying the source terms
/// to unit trial fields and solving the 2×2 coupled system in closed form.
pub fn plane_wave_frequency(mat: &MaterialTensors, k: f64, permittivity: &Matrix3<f64>) -> Result<f64> {
    let omega = 1.0;
    let unit_e = [Vector3::new(0.0, 0.0, 1.0)];
    let mut unit_strain = Matrix3::zeros();
    unit_strain[(2, 2)] = 1.0;
    let src = source_terms(mat, &unit_e, &[unit_strain], omega)?;
    // Elastic: −c k² U + ik S_ext,33(E) + ρω² U = 0.
    let s_per_e = src.external_stress[0][(2, 2)];
    // Gauss: ε E + J_ext,z(ikU)/(iω) = 0.
    let d_per_strain = src.external_current[0][2] / omega;
    let eps = permittivity[(2, 2)];
    if eps <= 0.0 {
        return Err(Error::DegeneratePermittivity(mat.name.clone()));
    }
    let c_eff = mat.stiffness_e[(2, 2)] - s_per_e * d_per_strain / eps;
    Ok(k * (c_eff / mat.density).sqrt())
}
