//! Hybridized electromechanical eigenmodes: a block backend built from
//! precomputed frequencies and couplings, and a monolithic 1-D backend.

pub mod block;
pub mod energy;
pub mod monolithic;
pub mod sweep;

use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, TWO_PI};
use crate::emmodes::JunctionSpec;
use crate::error::{Error, Result};

pub use block::{build_block, couplings_by_label, BasisEntry, BasisKind, BlockProblem, BlockTemplate};
pub use energy::{epr, fem_strain_energy, field_energies, FieldSample};
pub use monolithic::{MonolithicProblem, MonolithicTemplate, QubitCircuit};
pub use sweep::{min_gap, refine_min_gap, sweep, track_branches, GapPoint, SweepTable, SweepTemplate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeCharacter {
    QubitLike,
    EmLike,
    AcousticLike,
    Spurious,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridMode {
    /// ξ/2π (Hz).
    pub frequency: f64,
    /// Signed amplitudes over the subsystem basis; squares sum to one.
    pub components: Vec<f64>,
    /// Label of the dominant basis entry.
    pub label: String,
    pub character: ModeCharacter,
    /// RMS junction current per junction for one quantum (A).
    pub junction_current: Vec<f64>,
    /// Time-averaged electric and strain energies for one quantum (J).
    pub electric_energy: f64,
    pub strain_energy: f64,
    pub participation: Vec<f64>,
    pub flux_zpf: Vec<f64>,
    /// Full state vector and its mass-weighted dual, for overlap tracking.
    #[serde(skip)]
    pub state: Vec<f64>,
    #[serde(skip)]
    pub dual: Vec<f64>,
}

impl HybridMode {
    pub fn angular_frequency(&self) -> f64 {
        TWO_PI * self.frequency
    }

    /// |⟨a|b⟩| using the mass-weighted inner product.
    pub fn overlap(&self, other: &HybridMode) -> f64 {
        self.state.iter().zip(&other.dual).map(|(a, b)| a * b).sum::<f64>().abs()
    }

    /// Index of the largest |component|.
    pub fn dominant(&self) -> usize {
        (0..self.components.len())
            .max_by(|&a, &b| self.components[a].abs().total_cmp(&self.components[b].abs()))
            .unwrap_or(0)
    }
}

/// Fills currents, energies and flux from participations, given the
/// total junction energy split W_j = p_j·½ħξ.
pub(crate) fn junction_quantities(xi: f64, participation: &[f64], junctions: &[JunctionSpec]) -> (Vec<f64>, Vec<f64>) {
    let half = 0.5 * HBAR * xi;
    let current = participation
        .iter()
        .zip(junctions)
        .map(|(p, j)| (2.0 * p * half / j.inductance).sqrt())
        .collect();
    let flux = participation
        .iter()
        .zip(junctions)
        .map(|(p, j)| (p * half / j.josephson_energy()).sqrt())
        .collect();
    (current, flux)
}

/// Sorts modes by |ξ − shift|; near-ties go to larger participation, then
/// lower frequency.
pub(crate) fn sort_by_shift(modes: &mut [HybridMode], shift: f64) {
    let scale = shift.abs().max(1.0);
    modes.sort_by(|a, b| {
        let (da, db) = ((a.frequency - shift).abs(), (b.frequency - shift).abs());
        if (da - db).abs() > 1e-12 * scale {
            return da.total_cmp(&db);
        }
        let pa = a.participation.first().copied().unwrap_or(0.0);
        let pb = b.participation.first().copied().unwrap_or(0.0);
        pb.total_cmp(&pa).then(a.frequency.total_cmp(&b.frequency))
    });
}

pub(crate) fn check_count(count: usize, available: usize) -> Result<()> {
    if count == 0 || count > available {
        return Err(Error::invalid(format!("requested {count} modes from a problem with {available}")));
    }
    Ok(())
}

/// Either backend behind one solve call.
#[derive(Debug, Clone)]
pub enum HybridProblem {
    Block(BlockProblem),
    Monolithic(MonolithicProblem),
}

impl HybridProblem {
    pub fn solve(&self, shift: f64, count: usize) -> Result<Vec<HybridMode>> {
        match self {
            HybridProblem::Block(p) => p.solve(shift, count),
            HybridProblem::Monolithic(p) => p.solve(shift, count),
        }
    }
}
