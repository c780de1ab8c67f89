//! Mode identification: matching top-surface u_z profiles against analytic
//! LG/HG references, strain-energy polarization, and point-defect fields.

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acoustics::{AcousticMode, Envelope, TransverseFamily};
use crate::error::{Error, Result};
use crate::materials::{strain_to_voigt, voigt_to_stress, MaterialTensors};

pub const DEFAULT_THRESHOLD: f64 = 0.8;

/// Uniform tensor-product grid on [−a, a]².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub half_width: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width > 0.0) || points < 3 {
            return Err(Error::invalid(format!("grid needs a positive width and at least 3 points, got {half_width}, {points}")));
        }
        Ok(Self { half_width, points })
    }

    /// ±5 waists with 81 points per side.
    pub fn for_waist(waist: f64) -> Result<Self> {
        Self::new(5.0 * waist, 81)
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.step()
    }

    pub fn len(&self) -> usize {
        self.points * self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points == 0
    }

    /// (x, y) of flat index `k` (row-major in y).
    pub fn point(&self, k: usize) -> (f64, f64) {
        (self.coordinate(k % self.points), self.coordinate(k / self.points))
    }

    pub fn sample<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|k| {
            let (x, y) = self.point(k);
            f(x, y)
        }).collect()
    }

    /// Σ a·b·dA.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let da = self.step() * self.step();
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * da
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelFamily {
    LG,
    HG,
    Qubit,
    Spurious,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeLabel {
    pub family: LabelFamily,
    /// Matched transverse mode; for spurious labels, the best rejected one.
    pub transverse: Option<TransverseFamily>,
    /// Voigt-pair polarization such as "33", when known.
    pub polarization: Option<String>,
    pub score: f64,
}

impl ModeLabel {
    pub fn qubit() -> Self {
        Self { family: LabelFamily::Qubit, transverse: None, polarization: None, score: 1.0 }
    }

    pub fn is_physical(&self) -> bool {
        matches!(self.family, LabelFamily::LG | LabelFamily::HG)
    }
}

impl std::fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.family, self.transverse) {
            (LabelFamily::Qubit, _) => write!(f, "qubit"),
            (LabelFamily::Spurious, _) => write!(f, "spurious"),
            (_, Some(t)) => write!(f, "{t}"),
            (_, None) => write!(f, "unlabeled"),
        }
    }
}

/// Grid-normalized analytic references.
#[derive(Debug, Clone)]
pub struct ReferenceLibrary {
    pub grid: Grid,
    pub entries: Vec<(TransverseFamily, Vec<f64>)>,
}

impl ReferenceLibrary {
    pub fn from_families(grid: Grid, families: &[TransverseFamily], waist_x: f64, waist_y: f64) -> Self {
        let entries = families
            .iter()
            .map(|&fam| {
                let env = Envelope::with_waists(fam, waist_x, waist_y);
                let mut v = grid.sample(|x, y| env.value(x, y));
                let n = grid.inner(&v, &v).sqrt();
                v.iter_mut().for_each(|a| *a /= n);
                (fam, v)
            })
            .collect();
        Self { grid, entries }
    }

    /// LG(p, ±l) with 2p + |l| ≤ `max_order`.
    pub fn laguerre_gauss(grid: Grid, waist: f64, max_order: u32) -> Self {
        let mut fams = Vec::new();
        for order in 0..=max_order {
            for p in 0..=order / 2 {
                let l = (order - 2 * p) as i32;
                fams.push(TransverseFamily::LG { p, l });
                if l > 0 {
                    fams.push(TransverseFamily::LG { p, l: -l });
                }
            }
        }
        Self::from_families(grid, &fams, waist, waist)
    }

    /// HG(m, n) with m + n ≤ `max_order`.
    pub fn hermite_gauss(grid: Grid, waist_x: f64, waist_y: f64, max_order: u32) -> Self {
        let mut fams = Vec::new();
        for order in 0..=max_order {
            for m in 0..=order {
                fams.push(TransverseFamily::HG { m, n: order - m });
            }
        }
        Self::from_families(grid, &fams, waist_x, waist_y)
    }

    /// Largest |⟨r_a, r_b⟩ − δ_ab| over the library.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, (_, a)) in self.entries.iter().enumerate() {
            for (j, (_, b)) in self.entries.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self.grid.inner(a, b) - target).abs());
            }
        }
        worst
    }
}

/// Best reference by |cos| between the profile and each reference; the score
/// equals √(1 − d²) where d is the L2 distance after optimal amplitude and
/// sign alignment of the normalized profile.
pub fn classify(profile: &[f64], library: &ReferenceLibrary, threshold: f64) -> Result<ModeLabel> {
    if library.entries.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    if profile.len() != library.grid.len() {
        return Err(Error::DimensionMismatch(format!(
            "profile has {} samples, grid has {}",
            profile.len(),
            library.grid.len()
        )));
    }
    let norm = library.grid.inner(profile, profile).sqrt();
    let (fam, score) = library
        .entries
        .iter()
        .map(|(f, r)| (*f, if norm > 0.0 { (library.grid.inner(profile, r) / norm).abs().min(1.0) } else { 0.0 }))
        .fold((library.entries[0].0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    let family = if score < threshold {
        LabelFamily::Spurious
    } else {
        match fam {
            TransverseFamily::LG { .. } => LabelFamily::LG,
            TransverseFamily::HG { .. } => LabelFamily::HG,
        }
    };
    Ok(ModeLabel { family, transverse: Some(fam), polarization: None, score })
}

/// u_z on the top surface of a synthesized acoustic mode.
pub fn top_surface_uz(mode: &AcousticMode, grid: &Grid) -> Vec<f64> {
    let z_top = *mode.longitudinal.z.last().unwrap_or(&0.0);
    grid.sample(|x, y| mode.displacement(x, y, z_top)[2])
}

/// Classifies an acoustic mode by its top-surface u_z and attaches its
/// polarization label.
pub fn classify_mode(mode: &AcousticMode, library: &ReferenceLibrary, threshold: f64) -> Result<ModeLabel> {
    let mut label = classify(&top_surface_uz(mode, &library.grid), library, threshold)?;
    label.polarization = Some(mode.polarization.label().to_string());
    Ok(label)
}

/// Voigt-pair labels in tie-break order.
pub const COMPONENTS: [&str; 9] = ["11", "12", "13", "21", "22", "23", "31", "32", "33"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarizationResult {
    pub component: String,
    /// Share of Ē_strain in the winning component.
    pub fraction: f64,
    /// Another component (other than the transpose partner) ties the winner.
    pub degenerate: bool,
    pub fractions: [f64; 9],
}

/// argmax_c ¼Σ w S_c ε_c / Ē_strain over the nine tensor components.
pub fn polarization(stress: &[Matrix3<f64>], strain: &[Matrix3<f64>], weights: &[f64]) -> Result<PolarizationResult> {
    if stress.len() != strain.len() || strain.len() != weights.len() {
        return Err(Error::DimensionMismatch("stress, strain and weight samples differ in length".into()));
    }
    let mut parts = [0.0; 9];
    for ((s, e), w) in stress.iter().zip(strain).zip(weights) {
        for (c, part) in parts.iter_mut().enumerate() {
            let (i, j) = (c / 3, c % 3);
            *part += 0.25 * w * s[(i, j)] * e[(i, j)];
        }
    }
    let total: f64 = parts.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroStrainEnergy);
    }
    let fractions = parts.map(|p| p / total);
    let best = (0..9).fold(0, |b, c| if fractions[c] > fractions[b] { c } else { b });
    let partner = (best % 3) * 3 + best / 3;
    let tol = 1e-9 * fractions[best].abs();
    let degenerate = (0..9).any(|c| c != best && c != partner && (fractions[c] - fractions[best]).abs() <= tol);
    Ok(PolarizationResult { component: COMPONENTS[best].to_string(), fraction: fractions[best], degenerate, fractions })
}

/// Polarization of a synthesized mode from strain samples through the
/// stack's uppermost layer material `mat` on a grid at height `z`.
pub fn mode_polarization(mode: &AcousticMode, mat: &MaterialTensors, grid: &Grid, z: f64) -> Result<PolarizationResult> {
    let weight = grid.step() * grid.step();
    let strains: Vec<Matrix3<f64>> = (0..grid.len()).map(|k| {
        let (x, y) = grid.point(k);
        mode.strain(x, y, z)
    }).collect();
    let stresses: Vec<Matrix3<f64>> =
        strains.iter().map(|e| voigt_to_stress(&(mat.stiffness_e * strain_to_voigt(e)))).collect();
    polarization(&stresses, &strains, &vec![weight; strains.len()])
}

/// Isolated random spikes on the grid, with unit grid energy.
pub fn synthesize_spurious(grid: &Grid, defect_count: usize, seed: u64) -> Result<Vec<f64>> {
    if defect_count == 0 || defect_count > grid.len() {
        return Err(Error::invalid(format!("defect count must be in 1..={}, got {defect_count}", grid.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = vec![0.0; grid.len()];
    for k in rand::seq::index::sample(&mut rng, grid.len(), defect_count).into_vec() {
        let amp: f64 = rng.random_range(0.5..1.0);
        field[k] = if rng.random::<bool>() { amp } else { -amp };
    }
    let n = grid.inner(&field, &field).sqrt();
    field.iter_mut().for_each(|v| *v /= n);
    Ok(field)
}

/// Adds N(0, σ²) noise with σ = `level`·max|ψ|.
pub fn add_noise(field: &[f64], level: f64, seed: u64) -> Vec<f64> {
    use rand_distr::{Distribution, Normal};
    let peak = field.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    let normal = Normal::new(0.0, (level * peak).max(f64::MIN_POSITIVE)).expect("finite sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    field.iter().map(|v| v + normal.sample(&mut rng)).collect()
}
