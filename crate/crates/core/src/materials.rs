//! Material tensors and the stress-charge piezoelectric constitutive law.
//!
//! Voigt ordering is fixed to (11, 22, 33, 23, 13, 12). Strains are carried
//! with engineering shear components (γ₂₃ = 2ε₂₃ etc.), so the Voigt forms of
//! `c`, `e` and `d` contract with plain matrix products.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{Matrix3, Matrix3x6, Matrix6, SymmetricEigen, Vector3, Vector6};

use crate::constants::{EPSILON_0, MU_0};
use crate::error::{Error, Result};

/// Voigt index (0-based) of the symmetric tensor component `(i, j)`.
pub fn voigt_index(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (1, 2) => 3,
        (0, 2) => 4,
        (0, 1) => 5,
        _ => panic!("tensor index out of range: ({i}, {j})"),
    }
}

/// Tensor index pair for a Voigt index.
pub fn voigt_pair(k: usize) -> (usize, usize) {
    [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)][k]
}

/// Symmetric strain tensor to Voigt vector with engineering shears.
pub fn strain_to_voigt(strain: &Matrix3<f64>) -> Vector6<f64> {
    Vector6::new(
        strain[(0, 0)],
        strain[(1, 1)],
        strain[(2, 2)],
        strain[(1, 2)] + strain[(2, 1)],
        strain[(0, 2)] + strain[(2, 0)],
        strain[(0, 1)] + strain[(1, 0)],
    )
}

/// Voigt vector with engineering shears back to a symmetric strain tensor.
pub fn voigt_to_strain(v: &Vector6<f64>) -> Matrix3<f64> {
    Matrix3::new(
        v[0],
        0.5 * v[5],
        0.5 * v[4],
        0.5 * v[5],
        v[1],
        0.5 * v[3],
        0.5 * v[4],
        0.5 * v[3],
        v[2],
    )
}

/// Stress Voigt vector (no shear factors) to a symmetric tensor.
pub fn voigt_to_stress(v: &Vector6<f64>) -> Matrix3<f64> {
    Matrix3::new(
        v[0], v[5], v[4], //
        v[5], v[1], v[3], //
        v[4], v[3], v[2],
    )
}

pub fn stress_to_voigt(s: &Matrix3<f64>) -> Vector6<f64> {
    Vector6::new(s[(0, 0)], s[(1, 1)], s[(2, 2)], s[(1, 2)], s[(0, 2)], s[(0, 1)])
}

/// Density, elastic, piezoelectric and dielectric tensors of one medium (SI).
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialTensors {
    pub name: String,
    /// kg/m³
    pub density: f64,
    /// Stiffness at constant electric field, Pa.
    pub stiffness_e: Matrix6<f64>,
    /// Compliance at constant electric field, 1/Pa.
    pub compliance_e: Matrix6<f64>,
    /// Stress-charge piezoelectric tensor, C/m².
    pub piezo_e: Matrix3x6<f64>,
    /// Strain-charge piezoelectric tensor, C/N.
    pub piezo_d: Matrix3x6<f64>,
    /// Permittivity at constant strain, F/m.
    pub permittivity_s: Matrix3<f64>,
    /// Permeability, H/m.
    pub permeability: Matrix3<f64>,
}

/// Stress and electric displacement produced by a strain and field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstitutiveState {
    pub strain: Matrix3<f64>,
    pub electric_field: Vector3<f64>,
    pub stress: Matrix3<f64>,
    pub displacement: Vector3<f64>,
}

fn is_symmetric_positive_definite<const N: usize>(
    m: &nalgebra::SMatrix<f64, N, N>,
) -> bool {
    let scale = m.abs().max().max(f64::MIN_POSITIVE);
    if (m - m.transpose()).abs().max() > 1e-12 * scale {
        return false;
    }
    let dyn_m = nalgebra::DMatrix::from_column_slice(N, N, m.as_slice());
    let eig = SymmetricEigen::new(dyn_m);
    eig.eigenvalues.iter().all(|&l| l > 1e-14 * scale)
}

impl MaterialTensors {
    /// Builds a material and checks its invariants. `d` is derived as `e·s_E`.
    pub fn new(
        name: impl Into<String>,
        density: f64,
        stiffness_e: Matrix6<f64>,
        piezo_e: Matrix3x6<f64>,
        permittivity_s: Matrix3<f64>,
        permeability: Matrix3<f64>,
    ) -> Result<Self> {
        let name = name.into();
        if !(density > 0.0) || !density.is_finite() {
            return Err(Error::invalid(format!(
                "material '{name}': density must be positive"
            )));
        }
        if !is_symmetric_positive_definite(&stiffness_e) {
            return Err(Error::invalid(format!(
                "material '{name}': stiffness is not symmetric positive-definite"
            )));
        }
        if !is_symmetric_positive_definite(&permittivity_s) {
            return Err(Error::DegeneratePermittivity(name));
        }
        let compliance_e = stiffness_e.try_inverse().ok_or_else(|| {
            Error::invalid(format!("material '{name}': singular stiffness"))
        })?;
        let piezo_d = piezo_e * compliance_e;
        Ok(Self {
            name,
            density,
            stiffness_e,
            compliance_e,
            piezo_e,
            piezo_d,
            permittivity_s,
            permeability,
        })
    }

    /// Transversely isotropic (hexagonal 6mm, c-axis along z) material.
    #[allow(clippy::too_many_arguments)]
    pub fn hexagonal(
        name: impl Into<String>,
        density: f64,
        c11: f64,
        c12: f64,
        c13: f64,
        c33: f64,
        c44: f64,
        e31: f64,
        e33: f64,
        e15: f64,
        eps11_rel: f64,
        eps33_rel: f64,
    ) -> Result<Self> {
        let c66 = 0.5 * (c11 - c12);
        let mut c = Matrix6::zeros();
        c[(0, 0)] = c11;
        c[(1, 1)] = c11;
        c[(2, 2)] = c33;
        c[(0, 1)] = c12;
        c[(1, 0)] = c12;
        c[(0, 2)] = c13;
        c[(2, 0)] = c13;
        c[(1, 2)] = c13;
        c[(2, 1)] = c13;
        c[(3, 3)] = c44;
        c[(4, 4)] = c44;
        c[(5, 5)] = c66;
        let mut e = Matrix3x6::zeros();
        e[(2, 0)] = e31;
        e[(2, 1)] = e31;
        e[(2, 2)] = e33;
        e[(0, 4)] = e15;
        e[(1, 3)] = e15;
        let eps = Matrix3::from_diagonal(&Vector3::new(eps11_rel, eps11_rel, eps33_rel))
            * EPSILON_0;
        Self::new(name, density, c, e, eps, Matrix3::identity() * MU_0)
    }

    /// Longitudinal (33) sound velocity at constant field, m/s.
    pub fn longitudinal_velocity(&self) -> f64 {
        (self.stiffness_e[(2, 2)] / self.density).sqrt()
    }

    /// Stress-charge constitutive map: `S = c_E:ε − eᵀ·E`, `D = e:ε + ε_S·E`.
    pub fn constitutive(&self, strain: &Matrix3<f64>, e_field: &Vector3<f64>) -> ConstitutiveState {
        let sv = strain_to_voigt(strain);
        let stress_v = self.stiffness_e * sv - self.piezo_e.transpose() * e_field;
        let displacement = self.piezo_e * sv + self.permittivity_s * e_field;
        ConstitutiveState {
            strain: *strain,
            electric_field: *e_field,
            stress: voigt_to_stress(&stress_v),
            displacement,
        }
    }

    /// Stiffness at constant electric displacement, `c_D = c_E + eᵀ ε_S⁻¹ e`.
    pub fn stiffened_stiffness(&self) -> Result<Matrix6<f64>> {
        let inv = self
            .permittivity_s
            .try_inverse()
            .ok_or_else(|| Error::DegeneratePermittivity(self.name.clone()))?;
        let cd = self.stiffness_e + self.piezo_e.transpose() * inv * self.piezo_e;
        Ok(0.5 * (cd + cd.transpose()))
    }

    /// Diagnostic electromechanical coupling `K² = e_aa² / (c_aa ε_aa)` for a
    /// field and normal strain along `axis` (1, 2 or 3).
    pub fn coupling_coefficient_k2(&self, axis: usize) -> Result<f64> {
        if !(1..=3).contains(&axis) {
            return Err(Error::invalid(format!("axis must be 1, 2 or 3, got {axis}")));
        }
        let a = axis - 1;
        let e = self.piezo_e[(a, a)];
        Ok(e * e / (self.stiffness_e[(a, a)] * self.permittivity_s[(a, a)]))
    }

    /// Piezoelectric energy density `−E·eᵀ:ε`.
    pub fn piezo_energy_density(&self, strain: &Matrix3<f64>, e_field: &Vector3<f64>) -> f64 {
        -(e_field.transpose() * self.piezo_e * strain_to_voigt(strain))[(0, 0)]
    }
}

/// Named collection of materials loaded from a material data file.
#[derive(Debug, Clone, Default)]
pub struct MaterialLibrary {
    pub version: Option<String>,
    materials: BTreeMap<String, MaterialTensors>,
}

fn get_f64(table: &toml::Table, key: &str, path: &str) -> Result<f64> {
    match table.get(key) {
        Some(toml::Value::Float(f)) => Ok(*f),
        Some(toml::Value::Integer(i)) => Ok(*i as f64),
        Some(_) => Err(Error::config(format!("{path}.{key}"), "expected a number")),
        None => Err(Error::config(format!("{path}.{key}"), "missing key")),
    }
}

fn get_matrix<const R: usize, const C: usize>(
    table: &toml::Table,
    key: &str,
    path: &str,
) -> Result<Option<nalgebra::SMatrix<f64, R, C>>> {
    let full = format!("{path}.{key}");
    let Some(value) = table.get(key) else {
        return Ok(None);
    };
    let rows = value
        .as_array()
        .ok_or_else(|| Error::config(&full, format!("expected a {R}x{C} array")))?;
    if rows.len() != R {
        return Err(Error::config(&full, format!("expected {R} rows, got {}", rows.len())));
    }
    let mut m = nalgebra::SMatrix::<f64, R, C>::zeros();
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::config(&full, format!("row {i} is not an array")))?;
        if row.len() != C {
            return Err(Error::config(
                &full,
                format!("row {i}: expected {C} entries, got {}", row.len()),
            ));
        }
        for (j, v) in row.iter().enumerate() {
            m[(i, j)] = match v {
                toml::Value::Float(f) => *f,
                toml::Value::Integer(n) => *n as f64,
                _ => return Err(Error::config(&full, format!("entry ({i},{j}) is not a number"))),
            };
        }
    }
    Ok(Some(m))
}

impl MaterialLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, material: MaterialTensors) {
        self.materials.insert(material.name.clone(), material);
    }

    pub fn get(&self, name: &str) -> Result<&MaterialTensors> {
        self.materials
            .get(name)
            .ok_or_else(|| Error::config(format!("material.{name}"), "unknown material"))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.materials.keys().map(String::as_str)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml_str(&text)
    }

    /// Parses a material data file. Each `[[material]]` record carries
    /// `name`, `density` (kg/m³), `stiffness_gpa` (6×6), `piezo_e` (3×6, C/m²,
    /// optional), `permittivity_rel` (3×3) and `permeability_rel` (3×3,
    /// optional). An optional `piezo_d` (3×6, C/N) is checked against `e·s_E`.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let root: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<materials>", e.to_string()))?;
        let version = root.get("version").map(|v| match v {
            toml::Value::String(s) => s.clone(),
            other => other.to_string(),
        });
        let records = root
            .get("material")
            .and_then(|v| v.as_array())
            .ok_or_else(|| Error::config("material", "missing [[material]] records"))?;
        let mut lib = MaterialLibrary {
            version,
            materials: BTreeMap::new(),
        };
        for (idx, rec) in records.iter().enumerate() {
            let path = format!("material[{idx}]");
            let table = rec
                .as_table()
                .ok_or_else(|| Error::config(&path, "record is not a table"))?;
            let name = table
                .get("name")
                .and_then(|v| v.as_str())
                .ok_or_else(|| Error::config(format!("{path}.name"), "missing key"))?
                .to_string();
            let path = format!("material.{name}");
            let density = get_f64(table, "density", &path)?;
            let c = get_matrix::<6, 6>(table, "stiffness_gpa", &path)?
                .ok_or_else(|| Error::config(format!("{path}.stiffness_gpa"), "missing key"))?
                * 1e9;
            let e = get_matrix::<3, 6>(table, "piezo_e", &path)?.unwrap_or_else(Matrix3x6::zeros);
            let eps = get_matrix::<3, 3>(table, "permittivity_rel", &path)?
                .ok_or_else(|| Error::config(format!("{path}.permittivity_rel"), "missing key"))?
                * EPSILON_0;
            let mu = get_matrix::<3, 3>(table, "permeability_rel", &path)?
                .unwrap_or_else(Matrix3::identity)
                * MU_0;
            let mat = MaterialTensors::new(name.clone(), density, c, e, eps, mu).map_err(|err| {
                match err {
                    Error::DegeneratePermittivity(_) => Error::config(
                        format!("{path}.permittivity_rel"),
                        "degenerate permittivity",
                    ),
                    other => Error::config(&path, other.to_string()),
                }
            })?;
            if let Some(d) = get_matrix::<3, 6>(table, "piezo_d", &path)? {
                let scale = mat.piezo_d.abs().max().max(f64::MIN_POSITIVE);
                if (d - mat.piezo_d).abs().max() > 1e-10 * scale {
                    return Err(Error::config(
                        format!("{path}.piezo_d"),
                        "inconsistent with piezo_e and the compliance",
                    ));
                }
            }
            lib.insert(mat);
        }
        Ok(lib)
    }
}
