//! Inductance sweeps, branch tracking and avoided-crossing gaps.

use rayon::prelude::*;
use serde::Serialize;

use super::HybridMode;
use crate::error::{Error, Result};

/// Anything that can be re-solved at a new junction inductance.
pub trait SweepTemplate: Sync {
    fn solve_at(&self, inductance: f64) -> Result<Vec<HybridMode>>;
    fn basis_labels(&self) -> Vec<String>;
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub inductances: Vec<f64>,
    pub basis_labels: Vec<String>,
    /// Modes per sweep point, in the solver's order.
    pub points: Vec<Vec<HybridMode>>,
}

/// Solves every point (in parallel) and keeps the sweep order.
pub fn sweep<T: SweepTemplate>(template: &T, inductances: &[f64]) -> Result<SweepTable> {
    if inductances.is_empty() {
        return Err(Error::invalid("sweep needs at least one inductance"));
    }
    let points = inductances.par_iter().map(|&l| template.solve_at(l)).collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { inductances: inductances.to_vec(), basis_labels: template.basis_labels(), points })
}

/// Branch assignment: `result[b][i]` is the mode index of branch `b` at point
/// `i`. Each step greedily pairs the largest overlaps with the previous point.
pub fn track_branches(table: &SweepTable) -> Result<Vec<Vec<usize>>> {
    let n = table.points.first().map_or(0, Vec::len);
    if table.points.iter().any(|p| p.len() != n) {
        return Err(Error::DimensionMismatch("sweep points report different mode counts".into()));
    }
    let mut branches: Vec<Vec<usize>> = (0..n).map(|b| vec![b]).collect();
    for i in 1..table.points.len() {
        let (prev, next) = (&table.points[i - 1], &table.points[i]);
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
        for (b, br) in branches.iter().enumerate() {
            let a = &prev[br[i - 1]];
            for (k, m) in next.iter().enumerate() {
                pairs.push((a.overlap(m), b, k));
            }
        }
        pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut taken_b = vec![false; n];
        let mut taken_k = vec![false; n];
        let mut assign = vec![0; n];
        for (_, b, k) in pairs {
            if !taken_b[b] && !taken_k[k] {
                taken_b[b] = true;
                taken_k[k] = true;
                assign[b] = k;
            }
        }
        for (b, k) in assign.into_iter().enumerate() {
            branches[b].push(k);
        }
    }
    Ok(branches)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapPoint {
    pub inductance: f64,
    /// |ξ₁ − ξ₂|/2π (Hz).
    pub gap: f64,
    /// Index in the sweep table, when taken from one.
    pub index: Option<usize>,
}

/// Gap between the two modes with the largest product of weights on basis
/// entries `a` and `b`: the pair hybridizing those two subsystems.
pub fn pair_gap(modes: &[HybridMode], a: usize, b: usize) -> Result<f64> {
    let weight = |m: &HybridMode| -> Result<f64> {
        match (m.components.get(a), m.components.get(b)) {
            (Some(x), Some(y)) => Ok(x * x * y * y),
            _ => Err(Error::DimensionMismatch(format!("basis entries {a}, {b} exceed {}", m.components.len()))),
        }
    };
    if modes.len() < 2 {
        return Err(Error::invalid("a gap needs at least two modes"));
    }
    let mut ranked: Vec<(f64, f64)> = modes.iter().map(|m| Ok((weight(m)?, m.frequency))).collect::<Result<_>>()?;
    ranked.sort_by(|x, y| y.0.total_cmp(&x.0));
    Ok((ranked[0].1 - ranked[1].1).abs())
}

/// Smallest pair gap over the sweep grid.
pub fn min_gap(table: &SweepTable, a: usize, b: usize) -> Result<GapPoint> {
    let mut best: Option<GapPoint> = None;
    for (i, modes) in table.points.iter().enumerate() {
        let gap = pair_gap(modes, a, b)?;
        if best.is_none_or(|g| gap < g.gap) {
            best = Some(GapPoint { inductance: table.inductances[i], gap, index: Some(i) });
        }
    }
    best.ok_or_else(|| Error::invalid("empty sweep"))
}

/// Golden-section minimization of the pair gap on [lo, hi].
pub fn refine_min_gap<T: SweepTemplate>(template: &T, a: usize, b: usize, lo: f64, hi: f64, rel_tol: f64) -> Result<GapPoint> {
    if !(lo < hi) {
        return Err(Error::invalid(format!("empty bracket [{lo}, {hi}]")));
    }
    let gap_at = |l: f64| -> Result<f64> { pair_gap(&template.solve_at(l)?, a, b) };
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut x0, mut x3) = (lo, hi);
    let mut x1 = x3 - r * (x3 - x0);
    let mut x2 = x0 + r * (x3 - x0);
    let (mut f1, mut f2) = (gap_at(x1)?, gap_at(x2)?);
    for _ in 0..200 {
        if (x3 - x0) <= rel_tol * x1.abs() {
            break;
        }
        if f1 < f2 {
            x3 = x2;
            x2 = x1;
            f2 = f1;
            x1 = x3 - r * (x3 - x0);
            f1 = gap_at(x1)?;
        } else {
            x0 = x1;
            x1 = x2;
            f1 = f2;
            x2 = x0 + r * (x3 - x0);
            f2 = gap_at(x2)?;
        }
    }
    let (inductance, gap) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    Ok(GapPoint { inductance, gap, index: None })
}
