use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::envelope::{Envelope, TransverseFamily};
use super::fem::{mode_number, FemMode, FemSystem};
use super::mesh::Mesh1D;
use crate::constants::{HBAR, TWO_PI};
use crate::error::{Error, Result};
use crate::materials::MaterialLibrary;

/// A 1-D eigenmode h(z) normalized to ∫h² dz = 1 (units m^-1/2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongitudinalMode {
    pub frequency: f64,
    /// Node coordinates (m).
    pub z: Vec<f64>,
    pub profile: Vec<f64>,
    pub order: usize,
    /// ∫ρh² dz / ∫h² dz (kg/m³).
    pub effective_density: f64,
    /// Density of each element (kg/m³).
    pub element_density: Vec<f64>,
}

impl LongitudinalMode {
    pub fn from_fem(mesh: &Mesh1D, sys: &FemSystem, lib: &MaterialLibrary, mode: &FemMode) -> Result<Self> {
        let full = sys.expand(&mode.vector);
        let element_density = (0..mesh.element_count())
            .map(|e| lib.get(mesh.element_material(e)).map(|m| m.density))
            .collect::<Result<Vec<_>>>()?;
        Self::from_nodal(mode.corrected_frequency, mesh, full, element_density)
    }

    /// Normalizes arbitrary nodal values. The sign is fixed so the top node
    /// (or the last nonzero one) is positive.
    pub fn from_nodal(frequency: f64, mesh: &Mesh1D, mut profile: Vec<f64>, element_density: Vec<f64>) -> Result<Self> {
        let z = mesh.nodes.clone();
        let norm = integrate_sq(&z, &profile, None).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::UnnormalizedMode("longitudinal profile has zero norm".into()));
        }
        let sign = profile.iter().rev().find(|v| v.abs() > 1e-9 * norm).map_or(1.0, |v| v.signum());
        for v in &mut profile {
            *v *= sign / norm;
        }
        let order = mode_number(&profile, mesh);
        let effective_density = integrate_sq(&z, &profile, Some(&element_density));
        Ok(Self { frequency, z, profile, order, effective_density, element_density })
    }

    pub fn element_of(&self, z: f64) -> Option<usize> {
        let n = self.z.len();
        if z < self.z[0] || z > self.z[n - 1] {
            return None;
        }
        Some(match self.z.partition_point(|&zi| zi <= z) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        })
    }

    /// (h(z), dh/dz) by linear interpolation.
    pub fn eval(&self, z: f64) -> Option<(f64, f64)> {
        let e = self.element_of(z)?;
        let (z0, z1) = (self.z[e], self.z[e + 1]);
        let (h0, h1) = (self.profile[e], self.profile[e + 1]);
        let t = (z - z0) / (z1 - z0);
        Some((h0 + t * (h1 - h0), (h1 - h0) / (z1 - z0)))
    }

    /// ∫ h dz and ∫ dh/dz dz over [za, zb], exact for linear elements.
    pub fn integrals(&self, za: f64, zb: f64) -> (f64, f64) {
        let (ha, _) = self.eval(za).unwrap_or((0.0, 0.0));
        let (hb, _) = self.eval(zb).unwrap_or((0.0, 0.0));
        let mut pts: Vec<f64> = vec![za];
        pts.extend(self.z.iter().copied().filter(|&z| z > za && z < zb));
        pts.push(zb);
        let int_h = pts
            .windows(2)
            .map(|w| 0.5 * (w[1] - w[0]) * (self.eval(w[0]).unwrap().0 + self.eval(w[1]).unwrap().0))
            .sum();
        (int_h, hb - ha)
    }
}

/// ∫ w·h² dz with exact linear-element quadrature.
pub fn integrate_sq(z: &[f64], h: &[f64], weight: Option<&[f64]>) -> f64 {
    (0..z.len() - 1)
        .map(|e| {
            let l = z[e + 1] - z[e];
            let w = weight.map_or(1.0, |w| w[e]);
            w * l / 3.0 * (h[e] * h[e] + h[e] * h[e + 1] + h[e + 1] * h[e + 1])
        })
        .sum::<f64>()
}

/// Displacement direction of a separable mode, tagged by its dominant
/// strain component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    /// u along z, strain ε33.
    #[serde(rename = "33")]
    Longitudinal,
    /// u along x, strain ε13.
    #[serde(rename = "13")]
    ShearX,
    /// u along y, strain ε23.
    #[serde(rename = "23")]
    ShearY,
}

impl Polarization {
    /// Cartesian index of the displacement direction.
    pub fn axis(&self) -> usize {
        match self {
            Polarization::ShearX => 0,
            Polarization::ShearY => 1,
            Polarization::Longitudinal => 2,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Polarization::Longitudinal => "33",
            Polarization::ShearX => "13",
            Polarization::ShearY => "23",
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "33" => Ok(Polarization::Longitudinal),
            "13" | "31" => Ok(Polarization::ShearX),
            "23" | "32" => Ok(Polarization::ShearY),
            other => Err(Error::invalid(format!("unsupported polarization '{other}'"))),
        }
    }
}

/// Separable acoustic mode u = ψ(x,y)·h(z)·ê.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcousticMode {
    pub label: String,
    pub frequency: f64,
    pub longitudinal: LongitudinalMode,
    pub envelope: Envelope,
    pub polarization: Polarization,
    pub order: usize,
    /// √(ħ/2ρ_eff Ω) (m).
    pub zpf_amplitude: f64,
}

pub fn synthesize_mode(long: &LongitudinalMode, envelope: &Envelope, polarization: Polarization) -> AcousticMode {
    let w1d = TWO_PI * long.frequency;
    let omega = (w1d * w1d + envelope.transverse_omega_sq()).max(0.0).sqrt();
    AcousticMode {
        label: format!("{}_q{}", envelope.family, long.order),
        frequency: omega / TWO_PI,
        longitudinal: long.clone(),
        envelope: *envelope,
        polarization,
        order: long.order,
        zpf_amplitude: (HBAR / (2.0 * long.effective_density * omega)).sqrt(),
    }
}

impl AcousticMode {
    pub fn family(&self) -> TransverseFamily {
        self.envelope.family
    }

    pub fn angular_frequency(&self) -> f64 {
        TWO_PI * self.frequency
    }

    /// Displacement vector of the normalized field.
    pub fn displacement(&self, x: f64, y: f64, z: f64) -> [f64; 3] {
        let mut u = [0.0; 3];
        if let Some((h, _)) = self.longitudinal.eval(z) {
            u[self.polarization.axis()] = self.envelope.value(x, y) * h;
        }
        u
    }

    /// Symmetric strain tensor of the normalized field.
    pub fn strain(&self, x: f64, y: f64, z: f64) -> Matrix3<f64> {
        let Some((h, dh)) = self.longitudinal.eval(z) else {
            return Matrix3::zeros();
        };
        let psi = self.envelope.value(x, y);
        let (gx, gy) = self.envelope.gradient(x, y);
        strain_from_gradient(self.polarization.axis(), [gx * h, gy * h, psi * dh])
    }
}

/// ε_ab = ½(δ_bd g_a + δ_ad g_b) for u = f·ê_d with ∇f = g.
pub fn strain_from_gradient(d: usize, g: [f64; 3]) -> Matrix3<f64> {
    let mut s = Matrix3::zeros();
    for a in 0..3 {
        s[(a, d)] += 0.5 * g[a];
        s[(d, a)] += 0.5 * g[a];
    }
    s
}
