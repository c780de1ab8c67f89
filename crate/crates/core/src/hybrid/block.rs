//! Rotating-wave block model [[diag ω, G], [Gᵀ, diag Ω]] in GHz.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{check_count, junction_quantities, sort_by_shift, HybridMode, ModeCharacter, SweepTemplate};
use crate::acoustics::AcousticMode;
use crate::constants::{HBAR, TWO_PI};
use crate::emmodes::{qubit_mode, EmMode, JunctionSpec};
use crate::error::{Error, Result};
use crate::piezo::CouplingResult;

const GHZ: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    Acoustic,
    Spurious,
}

/// One acoustic basis state of the block model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisEntry {
    pub label: String,
    /// Ω/2π (Hz).
    pub frequency: f64,
    pub kind: BasisKind,
}

impl BasisEntry {
    pub fn acoustic(mode: &AcousticMode) -> Self {
        Self { label: mode.label.clone(), frequency: mode.frequency, kind: BasisKind::Acoustic }
    }

    pub fn spurious(label: impl Into<String>, frequency: f64) -> Self {
        Self { label: label.into(), frequency, kind: BasisKind::Spurious }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockProblem {
    pub em: Vec<EmMode>,
    pub acoustic: Vec<BasisEntry>,
    /// g_nm/2π (Hz), N×M.
    pub coupling: DMatrix<f64>,
    pub junctions: Vec<JunctionSpec>,
}

/// Assembles the block problem from `(n, m, g/2π)` triples.
pub fn build_block(
    em_modes: &[EmMode],
    acoustic: &[BasisEntry],
    couplings: &[(usize, usize, f64)],
    junctions: &[JunctionSpec],
) -> Result<BlockProblem> {
    let (n, m) = (em_modes.len(), acoustic.len());
    if n == 0 {
        return Err(Error::DimensionMismatch("block model needs at least one electromagnetic mode".into()));
    }
    for em in em_modes {
        if em.junction_zpf.len() != junctions.len() {
            return Err(Error::DimensionMismatch(format!(
                "mode '{}' carries {} flux values for {} junctions",
                em.label,
                em.junction_zpf.len(),
                junctions.len()
            )));
        }
    }
    let mut g = DMatrix::zeros(n, m);
    for &(i, j, value) in couplings {
        if i >= n || j >= m {
            return Err(Error::DimensionMismatch(format!("coupling ({i}, {j}) outside a {n}x{m} block")));
        }
        if !value.is_finite() {
            return Err(Error::invalid(format!("coupling ({i}, {j}) is not finite")));
        }
        g[(i, j)] = value;
    }
    Ok(BlockProblem { em: em_modes.to_vec(), acoustic: acoustic.to_vec(), coupling: g, junctions: junctions.to_vec() })
}

/// Matches coupling results to mode indices by label.
pub fn couplings_by_label(em: &[EmMode], acoustic: &[BasisEntry], results: &[CouplingResult]) -> Result<Vec<(usize, usize, f64)>> {
    results
        .iter()
        .map(|r| {
            let i = em.iter().position(|e| e.label == r.em_label);
            let j = acoustic.iter().position(|a| a.label == r.acoustic_label);
            match (i, j) {
                (Some(i), Some(j)) => Ok((i, j, r.g)),
                _ => Err(Error::DimensionMismatch(format!(
                    "coupling {} / {} refers to a mode not in the lists",
                    r.em_label, r.acoustic_label
                ))),
            }
        })
        .collect()
}

impl BlockProblem {
    pub fn dim(&self) -> usize {
        self.em.len() + self.acoustic.len()
    }

    pub fn basis_labels(&self) -> Vec<String> {
        self.em.iter().map(|e| e.label.clone()).chain(self.acoustic.iter().map(|a| a.label.clone())).collect()
    }

    /// The block matrix in Hz.
    pub fn matrix(&self) -> DMatrix<f64> {
        self.matrix_scaled(1.0, 0.0)
    }

    fn matrix_scaled(&self, unit: f64, center: f64) -> DMatrix<f64> {
        let n = self.em.len();
        let mut h = DMatrix::zeros(self.dim(), self.dim());
        for (i, e) in self.em.iter().enumerate() {
            h[(i, i)] = (e.frequency - center) / unit;
        }
        for (j, a) in self.acoustic.iter().enumerate() {
            h[(n + j, n + j)] = (a.frequency - center) / unit;
        }
        for i in 0..n {
            for j in 0..self.acoustic.len() {
                h[(i, n + j)] = self.coupling[(i, j)] / unit;
                h[(n + j, i)] = self.coupling[(i, j)] / unit;
            }
        }
        h
    }

    /// Ascending eigenvalues of H − `reference`·I (Hz). Splittings read from
    /// these keep full precision, which absolute frequencies near 10 GHz lose
    /// to rounding at the 1e-6 Hz level.
    pub fn spectrum_about(&self, reference: f64) -> Result<Vec<f64>> {
        let dim = self.dim();
        let eig = SymmetricEigen::try_new(self.matrix_scaled(GHZ, reference), f64::EPSILON, 10_000).ok_or(
            Error::NonConvergence { iterations: 10_000, residual: f64::NAN, converged: 0, requested: dim },
        )?;
        let mut out: Vec<f64> = eig.eigenvalues.iter().map(|e| e * GHZ).collect();
        out.sort_by(f64::total_cmp);
        Ok(out)
    }

    /// `count` hybrid modes nearest `shift` (Hz).
    ///
    /// The junction flux of mode k is carried over from the bare modes as
    /// φ_kj = √ξ_k Σ_n v_kn φ_nj/√ω_n, which keeps p_kj = Σ-weighted bare
    /// participations and makes Σ_k p_kj = p_bare exact.
    pub fn solve(&self, shift: f64, count: usize) -> Result<Vec<HybridMode>> {
        check_count(count, self.dim())?;
        let n = self.em.len();
        let center = {
            let d = self.dim() as f64;
            self.em.iter().map(|e| e.frequency).chain(self.acoustic.iter().map(|a| a.frequency)).sum::<f64>() / d
        };
        let eig = SymmetricEigen::try_new(self.matrix_scaled(GHZ, center), f64::EPSILON, 10_000).ok_or(
            Error::NonConvergence { iterations: 10_000, residual: f64::NAN, converged: 0, requested: count },
        )?;
        let labels = self.basis_labels();
        let mut modes = Vec::with_capacity(self.dim());
        for k in 0..self.dim() {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            let dom = (0..v.len()).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap_or(0);
            if v[dom] < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            let frequency = eig.eigenvalues[k] * GHZ + center;
            let xi = TWO_PI * frequency;
            let participation: Vec<f64> = self
                .junctions
                .iter()
                .enumerate()
                .map(|(j, junction)| {
                    let phi = xi.sqrt()
                        * (0..n).map(|i| v[i] * self.em[i].junction_zpf[j] / self.em[i].angular_frequency().sqrt()).sum::<f64>();
                    junction.josephson_energy() * phi * phi / (0.5 * HBAR * xi)
                })
                .collect();
            let (junction_current, flux_zpf) = junction_quantities(xi, &participation, &self.junctions);
            let em_weight: f64 = v[..n].iter().map(|x| x * x).sum();
            let ac_weight: f64 = v[n..].iter().map(|x| x * x).sum();
            let character = if dom < n {
                if self.em[dom].inductance.is_some() { ModeCharacter::QubitLike } else { ModeCharacter::EmLike }
            } else if self.acoustic[dom - n].kind == BasisKind::Spurious {
                ModeCharacter::Spurious
            } else {
                ModeCharacter::AcousticLike
            };
            modes.push(HybridMode {
                frequency,
                label: labels[dom].clone(),
                character,
                junction_current,
                electric_energy: 0.5 * HBAR * xi * em_weight,
                strain_energy: 0.5 * HBAR * xi * ac_weight,
                participation,
                flux_zpf,
                state: v.clone(),
                dual: v.clone(),
                components: v,
            });
        }
        sort_by_shift(&mut modes, shift);
        modes.truncate(count);
        Ok(modes)
    }
}

/// Block problem whose qubit inductance is swept; the qubit row of G scales
/// as √(ω(L)/ω_ref) with the overlap prefactor.
#[derive(Debug, Clone)]
pub struct BlockTemplate {
    pub problem: BlockProblem,
    /// Index of the qubit in the electromagnetic list.
    pub qubit: usize,
    /// Qubit frequency at which the couplings were evaluated (Hz).
    pub reference_frequency: f64,
}

impl BlockTemplate {
    pub fn new(problem: BlockProblem, qubit: usize) -> Result<Self> {
        let q = problem
            .em
            .get(qubit)
            .ok_or_else(|| Error::DimensionMismatch(format!("qubit index {qubit} out of range")))?;
        if q.capacitance.is_none() || q.inductance.is_none() {
            return Err(Error::invalid(format!("mode '{}' is not a lumped qubit", q.label)));
        }
        let reference_frequency = q.frequency;
        Ok(Self { problem, qubit, reference_frequency })
    }

    pub fn at(&self, inductance: f64) -> Result<BlockProblem> {
        let mut p = self.problem.clone();
        let base = &p.em[self.qubit];
        let c = base.capacitance.unwrap_or_default();
        let width = p.junctions.first().map_or(0.0, |j| j.width);
        let junction = JunctionSpec::new(inductance, width)?;
        let mut q = qubit_mode(&junction, c, base.profile)?;
        q.label = base.label.clone();
        let scale = (q.frequency / self.reference_frequency).sqrt();
        for j in 0..p.acoustic.len() {
            p.coupling[(self.qubit, j)] *= scale;
        }
        if let Some(first) = p.junctions.first_mut() {
            *first = junction;
        }
        p.em[self.qubit] = q;
        Ok(p)
    }
}

impl SweepTemplate for BlockTemplate {
    fn solve_at(&self, inductance: f64) -> Result<Vec<HybridMode>> {
        let p = self.at(inductance)?;
        p.solve(0.0, p.dim())
    }

    fn basis_labels(&self) -> Vec<String> {
        self.problem.basis_labels()
    }
}
