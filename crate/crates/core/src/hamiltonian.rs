//! Fourth-order Kerr parameters from energy participation ratios.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::constants::PLANCK;
use crate::emmodes::JunctionSpec;
use crate::error::{Error, Result};
use crate::hybrid::HybridMode;

/// Default dispersive threshold |Δ| ≥ 10|g| (a tool choice).
pub const DEFAULT_DISPERSIVE_RATIO: f64 = 10.0;
/// Correction applies to modes with φ_l² below this fraction of φ_q².
pub const SMALL_FLUX_FRACTION: f64 = 0.1;
/// Below this |α/Δ| the correction is the identity.
pub const NEGLIGIBLE_RATIO: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDiagnostic {
    pub k: usize,
    pub l: usize,
    /// Δ/2π (Hz) of the pair.
    pub detuning: f64,
    /// g/2π (Hz) of the pair.
    pub coupling: f64,
    /// |Δ/g| (infinite when g = 0).
    pub dispersive_ratio: f64,
    pub dispersive: bool,
    /// E_jφ_k⁴/h (Hz) for the first mode of the pair.
    pub perturbative_scale: f64,
    pub perturbative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KerrReport {
    pub labels: Vec<String>,
    /// ξ_k/2π (Hz).
    pub frequencies: Vec<f64>,
    /// Participation per mode and junction.
    pub participation: Vec<Vec<f64>>,
    /// φ_kj² per mode and junction.
    pub flux_sq: Vec<Vec<f64>>,
    /// χ_kl/2π (Hz), symmetric.
    pub chi: Vec<Vec<f64>>,
    /// α_k = ½χ_kk (Hz).
    pub anharmonicity: Vec<f64>,
    /// Δ_k = ½Σ_l χ_kl (Hz).
    pub lamb_shift: Vec<f64>,
    /// Whether the χ entry carries the beyond-dispersive correction.
    pub corrected: Vec<Vec<bool>>,
    /// E_j/h per junction (Hz).
    pub josephson_frequency: Vec<f64>,
    pub diagnostics: Vec<PairDiagnostic>,
}

impl KerrReport {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn chi_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| self.chi[i][j])
    }

    fn refresh_derived(&mut self) {
        let n = self.len();
        self.anharmonicity = (0..n).map(|k| 0.5 * self.chi[k][k]).collect();
        self.lamb_shift = (0..n).map(|k| 0.5 * self.chi[k].iter().sum::<f64>()).collect();
    }

    /// E_jφ_k⁴/h summed over junctions (Hz).
    pub fn perturbative_scale(&self, k: usize) -> f64 {
        self.flux_sq[k].iter().zip(&self.josephson_frequency).map(|(p, e)| e * p * p).sum()
    }
}

/// χ_kl/2π = Σ_j p_kj p_lj f_k f_l/(4E_j/h), with φ² = p·½ħξ/E_j.
pub fn kerr_from_participations(
    labels: &[String],
    frequencies: &[f64],
    participation: &[Vec<f64>],
    junctions: &[JunctionSpec],
) -> Result<KerrReport> {
    let n = labels.len();
    if frequencies.len() != n || participation.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} labels, {} frequencies, {} participation rows",
            frequencies.len(),
            participation.len()
        )));
    }
    let ej: Vec<f64> = junctions.iter().map(|j| j.josephson_energy() / PLANCK).collect();
    if ej.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::invalid("Josephson energies must be positive"));
    }
    if participation.iter().any(|row| row.len() != ej.len()) {
        return Err(Error::DimensionMismatch(format!("participation rows must have {} entries", ej.len())));
    }
    let flux_sq: Vec<Vec<f64>> = (0..n)
        .map(|k| participation[k].iter().zip(&ej).map(|(p, e)| p * 0.5 * frequencies[k] / e).collect())
        .collect();
    let mut chi = vec![vec![0.0; n]; n];
    for k in 0..n {
        for l in k..n {
            let v: f64 = (0..ej.len())
                .map(|j| participation[k][j] * participation[l][j] * frequencies[k] * frequencies[l] / (4.0 * ej[j]))
                .sum();
            chi[k][l] = v;
            chi[l][k] = v;
        }
    }
    let mut report = KerrReport {
        labels: labels.to_vec(),
        frequencies: frequencies.to_vec(),
        participation: participation.to_vec(),
        flux_sq,
        chi,
        anharmonicity: Vec::new(),
        lamb_shift: Vec::new(),
        corrected: vec![vec![false; n]; n],
        josephson_frequency: ej,
        diagnostics: Vec::new(),
    };
    report.refresh_derived();
    Ok(report)
}

pub fn kerr_from_epr(modes: &[HybridMode], junctions: &[JunctionSpec]) -> Result<KerrReport> {
    let labels: Vec<String> = modes.iter().map(|m| m.label.clone()).collect();
    let freqs: Vec<f64> = modes.iter().map(|m| m.frequency).collect();
    let parts: Vec<Vec<f64>> = modes.iter().map(|m| m.participation.clone()).collect();
    kerr_from_participations(&labels, &freqs, &parts, junctions)
}

/// Beyond-dispersive correction χ_ql ← χ_ql/(1 + α_q/Δ^H_ql) for modes with
/// φ_l ≪ φ_q. `detunings[l]` is (ξ_l − ξ_q)/2π in Hz; entry `q` is ignored.
pub fn sw_correction(report: &KerrReport, q: usize, detunings: &[f64]) -> Result<KerrReport> {
    let n = report.len();
    if q >= n || detunings.len() != n {
        return Err(Error::DimensionMismatch(format!("qubit {q} with {} detunings for {n} modes", detunings.len())));
    }
    if report.josephson_frequency.len() != 1 {
        return Err(Error::invalid("the beyond-dispersive correction is implemented for a single junction only"));
    }
    let alpha = report.anharmonicity[q];
    let phi_q = report.flux_sq[q][0];
    let mut out = report.clone();
    for l in (0..n).filter(|&l| l != q) {
        if report.flux_sq[l][0] >= SMALL_FLUX_FRACTION * phi_q {
            continue;
        }
        let d = detunings[l];
        let ratio = alpha / d;
        if ratio.abs() < NEGLIGIBLE_RATIO {
            continue;
        }
        let denom = 1.0 + ratio;
        if !d.is_finite() || denom.abs() < 1e-12 {
            return Err(Error::CorrectionSingular { detuning: d });
        }
        out.chi[q][l] = report.chi[q][l] / denom;
        out.chi[l][q] = out.chi[q][l];
        out.corrected[q][l] = true;
        out.corrected[l][q] = true;
    }
    out.refresh_derived();
    Ok(out)
}

/// g² = Δχ(Δ + α)/(2α), from the dispersive cross-Kerr of a pair.
pub fn g_from_chi(chi: f64, detuning: f64, alpha: f64) -> Result<f64> {
    if chi == 0.0 {
        return Ok(0.0);
    }
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!("anharmonicity must be positive, got {alpha}")));
    }
    let g2 = detuning * chi * (detuning + alpha) / (2.0 * alpha);
    if g2 < 0.0 || !g2.is_finite() {
        return Err(Error::RegimeViolation(g2));
    }
    Ok(g2.sqrt())
}

/// Flags every pair (k, l): dispersive when |Δ| ≥ ratio·|g|, perturbative
/// when Δ ≥ E_jφ_k⁴/h.
pub fn validity_check(report: &KerrReport, couplings: &[(usize, usize, f64)], dispersive_ratio: f64) -> Vec<PairDiagnostic> {
    couplings
        .iter()
        .map(|&(k, l, g)| {
            let detuning = report.frequencies[l] - report.frequencies[k];
            let ratio = if g == 0.0 { f64::INFINITY } else { (detuning / g).abs() };
            let scale = report.perturbative_scale(k);
            PairDiagnostic {
                k,
                l,
                detuning,
                coupling: g,
                dispersive_ratio: ratio,
                dispersive: ratio >= dispersive_ratio,
                perturbative_scale: scale,
                perturbative: detuning.abs() >= scale,
            }
        })
        .collect()
}

impl fmt::Display for KerrReport {
    /// Upper-triangular χ/2π table.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.labels.iter().map(String::len).max().unwrap_or(4).max(10);
        write!(f, "{:>w$}", "chi/2pi [Hz]")?;
        for l in &self.labels {
            write!(f, " {l:>w$}")?;
        }
        writeln!(f)?;
        for (k, lk) in self.labels.iter().enumerate() {
            write!(f, "{lk:>w$}")?;
            for l in 0..self.len() {
                if l < k {
                    write!(f, " {:>w$}", "-")?;
                } else {
                    let mark = if self.corrected[k][l] { "*" } else { "" };
                    write!(f, " {:>w$}", format!("{:.3e}{mark}", self.chi[k][l]))?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
