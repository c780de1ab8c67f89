//! End-to-end device pipelines shared by the command line and the bindings.

use serde::Serialize;

use crate::acoustics::fem::{assemble, solve_eigen};
use crate::acoustics::{
    build_mesh, synthesize_mode, AcousticMode, Envelope, GaussianCavity, LayerStack, LongitudinalMode, Mesh1D, Polarization,
    StiffnessChoice, TransverseFamily,
};
use crate::config::{DeviceConfig, LoadedConfig};
use crate::emmodes::{cavity_mode, inductance_for, qubit_mode, AntennaFieldProfile, EmMode, JunctionSpec};
use crate::error::{Error, Result};
use crate::hamiltonian::{g_from_chi, kerr_from_epr, sw_correction, validity_check, KerrReport};
use crate::hybrid::monolithic::MonolithicTemplate;
use crate::hybrid::{
    build_block, min_gap, refine_min_gap, sweep, track_branches, BasisEntry, BasisKind, BlockProblem, BlockTemplate, HybridMode,
    ModeCharacter, MonolithicProblem, QubitCircuit, SweepTable,
};
use crate::loss::{self, combine, LossBudget, LossyElement, Mechanism, QFactor, SurfaceFieldModel};
use crate::materials::MaterialLibrary;
use crate::modeid::{self, Grid, ModeLabel, ReferenceLibrary};
use crate::piezo::{coupling_rate, CouplingResult};

/// A device resolved from its config: materials, mesh, cavity and circuit.
#[derive(Debug, Clone)]
pub struct Device {
    pub config: DeviceConfig,
    pub lib: MaterialLibrary,
    pub stack: LayerStack,
    pub mesh: Mesh1D,
    pub cavity: GaussianCavity,
    pub families: Vec<TransverseFamily>,
    pub polarization: Polarization,
    pub profile: AntennaFieldProfile,
    pub junction: JunctionSpec,
}

impl Device {
    pub fn from_loaded(loaded: &LoadedConfig) -> Result<Self> {
        Self::new(loaded.config.clone(), loaded.library()?)
    }

    pub fn new(config: DeviceConfig, lib: MaterialLibrary) -> Result<Self> {
        if let Some(v) = config.validate(Some(&lib)).into_iter().next() {
            return Err(Error::config(v.key, v.message));
        }
        let stack = LayerStack::new(config.stack.layers.clone(), config.stack.bottom, config.stack.top)?;
        let target = config.solver.target_frequency;
        let mesh = build_mesh(&stack, &lib, target, config.solver.elements_per_wavelength)?;

        // Time-of-flight velocity through the stack sets the acoustic wavelength.
        let height = stack.height();
        let mut flight = 0.0;
        for l in &stack.layers {
            flight += l.thickness / lib.get(&l.material)?.longitudinal_velocity();
        }
        let wavelength = height / flight / target;
        let rc = config
            .dome
            .radius_of_curvature
            .unwrap_or_else(|| GaussianCavity::cap_radius_of_curvature(config.dome.radius, config.dome.height));
        let rcy = config.dome.radius_of_curvature_y.unwrap_or(rc);
        let cavity = GaussianCavity::astigmatic(rc, rcy, config.dome.radius, height, wavelength, target)?;

        let interfaces = stack.interfaces();
        let mut piezo_range: Option<(f64, f64)> = None;
        for (i, l) in stack.layers.iter().enumerate() {
            if lib.get(&l.material)?.piezo_e.iter().any(|e| *e != 0.0) {
                let (a, b) = (interfaces[i], interfaces[i + 1]);
                piezo_range = Some(piezo_range.map_or((a, b), |(lo, hi)| (lo.min(a), hi.max(b))));
            }
        }
        // Without any piezoelectric layer the field still fills the film facing
        // the antenna; every coupling then vanishes identically.
        let top = stack.layers.len() - 1;
        let (piezo_bottom, piezo_top) = piezo_range.unwrap_or((interfaces[top], interfaces[top + 1]));
        let profile = AntennaFieldProfile {
            shape: config.antenna.shape,
            radius: config.antenna.radius,
            gap: config.antenna.gap,
            effective_volume: config.antenna.effective_volume,
            piezo_bottom,
            piezo_top,
            region_radius: config.antenna.region_radius.unwrap_or(config.dome.radius),
        };
        profile.validate()?;
        let junction = JunctionSpec::new(config.qubit.inductance, config.qubit.width)?;
        Ok(Self {
            families: config.families()?,
            polarization: config.polarization()?,
            config,
            lib,
            stack,
            mesh,
            cavity,
            profile,
            junction,
        })
    }

    pub fn capacitance(&self) -> f64 {
        self.config.qubit.capacitance
    }

    pub fn qubit_at(&self, inductance: f64) -> Result<EmMode> {
        qubit_mode(&JunctionSpec::new(inductance, self.junction.width)?, self.capacitance(), Some(self.profile))
    }

    pub fn qubit(&self) -> Result<EmMode> {
        self.qubit_at(self.junction.inductance)
    }

    /// Qubit followed by the extra modes of the config.
    pub fn em_modes_at(&self, inductance: f64) -> Result<Vec<EmMode>> {
        let mut modes = vec![self.qubit_at(inductance)?];
        for (i, m) in self.config.em_modes.iter().enumerate() {
            modes.push(cavity_mode(i, m.frequency, m.junction_zpf.clone(), None));
        }
        Ok(modes)
    }

    pub fn envelopes(&self) -> Result<Vec<Envelope>> {
        self.families.iter().map(|f| self.cavity.envelope(*f)).collect()
    }

    /// The `count` 1-D thickness modes nearest the target (c_E stiffness).
    pub fn longitudinal_modes(&self) -> Result<Vec<LongitudinalMode>> {
        let sys = assemble(&self.mesh, &self.lib, StiffnessChoice::ConstantField)?;
        let mut out = solve_eigen(&sys, self.config.solver.target_frequency, self.config.solver.count)?
            .iter()
            .map(|m| LongitudinalMode::from_fem(&self.mesh, &sys, &self.lib, m))
            .collect::<Result<Vec<_>>>()?;
        out.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
        Ok(out)
    }

    /// Every (longitudinal, family) mode, sorted by frequency.
    pub fn acoustic_modes(&self) -> Result<Vec<AcousticMode>> {
        let envs = self.envelopes()?;
        let mut modes: Vec<AcousticMode> = self
            .longitudinal_modes()?
            .iter()
            .flat_map(|l| envs.iter().map(move |e| synthesize_mode(l, e, self.polarization)))
            .collect();
        modes.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
        Ok(modes)
    }

    /// Acoustic mode of `family` nearest the target frequency.
    pub fn fundamental(&self, modes: &[AcousticMode], family: TransverseFamily) -> Result<usize> {
        let target = self.config.solver.target_frequency;
        modes
            .iter()
            .enumerate()
            .filter(|(_, m)| m.family() == family)
            .min_by(|a, b| (a.1.frequency - target).abs().total_cmp(&(b.1.frequency - target).abs()))
            .map(|(i, _)| i)
            .ok_or_else(|| Error::invalid(format!("no acoustic mode of family {family}")))
    }

    pub fn unhybridized(&self) -> Result<UnhybridizedReport> {
        let qubit = self.qubit()?;
        let modes = self.acoustic_modes()?;
        let couplings = modes.iter().map(|m| coupling_rate(&qubit, m, &self.stack, &self.lib)).collect::<Result<Vec<_>>>()?;
        Ok(UnhybridizedReport { qubit, effective_volume: self.profile.effective_volume, modes, couplings })
    }

    /// Block problem at the configured inductance, with spurious states appended.
    pub fn block_problem(&self, report: &UnhybridizedReport) -> Result<BlockProblem> {
        let em = self.em_modes_at(self.junction.inductance)?;
        let mut basis: Vec<BasisEntry> = report.modes.iter().map(BasisEntry::acoustic).collect();
        let mut couplings: Vec<(usize, usize, f64)> = report.couplings.iter().enumerate().map(|(j, c)| (0, j, c.g)).collect();
        for (i, s) in self.config.spurious.iter().enumerate() {
            couplings.push((0, basis.len(), s.coupling));
            basis.push(BasisEntry::spurious(format!("spurious-{i}"), s.frequency));
        }
        build_block(&em, &basis, &couplings, &[self.junction])
    }

    pub fn monolithic(&self, with_qubit: bool, piezo: bool) -> Result<MonolithicProblem> {
        let qubit = with_qubit.then_some(QubitCircuit { junction: self.junction, capacitance: self.capacitance(), profile: self.profile });
        MonolithicProblem::new(&self.mesh, &self.lib, self.envelopes()?, qubit, piezo)
    }

    /// Minimum avoided-crossing gap of the monolithic sweep through the
    /// fundamental of `family`, against 2× the overlap coupling.
    pub fn cross_check(&self, family: TransverseFamily) -> Result<CrossCheck> {
        let fi = self
            .families
            .iter()
            .position(|f| *f == family)
            .ok_or_else(|| Error::invalid(format!("family {family} is not part of the device")))?;
        let target = self.config.solver.target_frequency;

        let modes = self.acoustic_modes()?;
        let ac = &modes[self.fundamental(&modes, family)?];
        // Overlap coupling at resonance, ω = Ω.
        let resonant = self.qubit_at(inductance_for(ac.frequency, self.capacitance()))?;
        let g = coupling_rate(&resonant, ac, &self.stack, &self.lib)?.g.abs();

        let bare = self.monolithic(false, true)?;
        let nf = self.families.len();
        let label = ac.label.clone();
        let bare_modes = bare.solve(target, (4 * nf).min(bare.dim()))?;
        let stiffened = bare_modes
            .iter()
            .find(|m| m.label == label)
            .ok_or_else(|| Error::invalid(format!("monolithic spectrum near {target:.4e} Hz lacks {label}")))?
            .frequency;

        let l0 = inductance_for(stiffened, self.capacitance());
        let template = MonolithicTemplate {
            problem: self.monolithic(true, true)?.with_inductance(l0)?,
            shift: stiffened,
            count: (2 * nf + 2).min(bare.dim()),
        };
        let span = 6.0 * g / stiffened;
        let grid: Vec<f64> = (0..9)
            .map(|i| {
                let d = -span + 2.0 * span * i as f64 / 8.0;
                l0 / (1.0 + d).powi(2)
            })
            .collect();
        let table = sweep(&template, &grid)?;
        let coarse = min_gap(&table, 0, 1 + fi)?;
        let i = coarse.index.unwrap_or(0);
        let (lo, hi) = (grid[i.saturating_sub(1).min(grid.len() - 1)], grid[(i + 1).min(grid.len() - 1)]);
        let (lo, hi) = if lo < hi { (lo, hi) } else { (hi, lo) };
        // The gap is quadratic about its minimum, so 1e-7 in L is ample.
        let fine = refine_min_gap(&template, 0, 1 + fi, lo, hi, 1e-7)?;
        Ok(CrossCheck {
            family: family.to_string(),
            acoustic_label: label,
            acoustic_frequency: ac.frequency,
            stiffened_frequency: stiffened,
            overlap_g: g,
            min_gap: fine.gap,
            crossing_inductance: fine.inductance,
            ratio: fine.gap / (2.0 * g),
        })
    }

    /// Sweep, EPRs, Kerr table and loss budgets.
    pub fn hybridized(&self, cross_check: bool) -> Result<HybridizedReport> {
        let unhyb = self.unhybridized()?;
        let problem = self.block_problem(&unhyb)?;
        let template = BlockTemplate::new(problem.clone(), 0)?;
        let inductances = match &self.config.sweep {
            Some(s) => s.values()?,
            None => vec![self.junction.inductance],
        };
        let table = sweep(&template, &inductances)?;
        let branches = track_branches(&table)?;
        let n_em = problem.em.len();

        let mut gaps = Vec::new();
        for fam in &self.families {
            let j = self.fundamental(&unhyb.modes, *fam)?;
            let g = unhyb.couplings[j].g;
            let grid_gap = min_gap(&table, 0, n_em + j)?;
            let refined = match grid_gap.index {
                Some(i) if table.inductances.len() >= 3 => {
                    let (a, b) = (table.inductances[i.saturating_sub(1)], table.inductances[(i + 1).min(table.inductances.len() - 1)]);
                    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                    if lo < hi { refine_min_gap(&template, 0, n_em + j, lo, hi, 1e-10)? } else { grid_gap }
                }
                _ => grid_gap,
            };
            let monolithic = if cross_check { Some(self.cross_check(*fam)?) } else { None };
            gaps.push(GapReport {
                family: fam.to_string(),
                acoustic_label: unhyb.modes[j].label.clone(),
                overlap_g: g.abs(),
                block_min_gap: refined.gap,
                block_crossing_inductance: refined.inductance,
                monolithic,
            });
        }

        let kerr = self.kerr_point(&unhyb, &template)?;
        let losses = kerr.modes.iter().map(|m| self.loss_budget(m, &kerr.problem)).collect::<Result<Vec<_>>>()?;
        Ok(HybridizedReport { table, branches, gaps, kerr, losses, effective_volume: self.profile.effective_volume })
    }

    /// Kerr analysis with the qubit `kerr_detuning` below the first family's
    /// fundamental.
    pub fn kerr_point(&self, unhyb: &UnhybridizedReport, template: &BlockTemplate) -> Result<KerrPoint> {
        let j0 = self.fundamental(&unhyb.modes, self.families[0])?;
        let f_qubit = unhyb.modes[j0].frequency - self.config.solver.kerr_detuning;
        let inductance = inductance_for(f_qubit, self.capacitance());
        let problem = template.at(inductance)?;
        let n_em = problem.em.len();
        let all = problem.solve(f_qubit, problem.dim())?;
        let q = all
            .iter()
            .position(|m| m.character == ModeCharacter::QubitLike)
            .ok_or_else(|| Error::invalid("no qubit-like mode at the dispersive point"))?;
        let mut acoustic: Vec<&HybridMode> = all.iter().filter(|m| m.character == ModeCharacter::AcousticLike).collect();
        acoustic.sort_by(|a, b| b.participation[0].total_cmp(&a.participation[0]));
        let mut modes = vec![all[q].clone()];
        modes.extend(acoustic.into_iter().take(2).cloned());

        let uncorrected = kerr_from_epr(&modes, &problem.junctions)?;
        let detunings: Vec<f64> = modes.iter().map(|m| m.frequency - modes[0].frequency).collect();
        let mut corrected = sw_correction(&uncorrected, 0, &detunings)?;

        let mut pairs = Vec::new();
        let mut estimates = Vec::new();
        for (l, m) in modes.iter().enumerate().skip(1) {
            let basis = m.dominant() - n_em;
            let g = problem.coupling[(0, basis)];
            let bare_detuning = problem.acoustic[basis].frequency - problem.em[0].frequency;
            pairs.push((0, l, g));
            estimates.push(CouplingEstimate {
                label: m.label.clone(),
                overlap_g: g.abs(),
                bare_detuning,
                g_from_chi: g_from_chi(corrected.chi[0][l], bare_detuning, corrected.anharmonicity[0]).ok(),
            });
        }
        corrected.diagnostics = validity_check(&corrected, &pairs, self.config.solver.dispersive_ratio);
        Ok(KerrPoint { inductance, qubit_frequency: f_qubit, modes, problem, uncorrected, corrected, estimates })
    }

    /// Loss budget of one block-model hybrid mode.
    pub fn loss_budget(&self, mode: &HybridMode, problem: &BlockProblem) -> Result<LossBudget> {
        let n_em = problem.em.len();
        let total = loss::mode_energy(mode);
        let vq2 = mode.components[0].powi(2);
        let mut mechs = Vec::new();

        let diel = self
            .config
            .loss
            .dielectric
            .iter()
            .map(|d| LossyElement {
                name: d.name.clone(),
                participation: d.filling * mode.electric_energy / total * vq2 / mode.components[..n_em].iter().map(|c| c * c).sum::<f64>().max(f64::MIN_POSITIVE),
                q: if d.tan_delta > 0.0 { QFactor(1.0 / d.tan_delta) } else { QFactor::NO_LIMIT },
            })
            .collect();
        mechs.push(Mechanism::new("dielectric", diel)?);

        let mut surf = Vec::new();
        for s in &self.config.loss.surface {
            // |H|² scales with the qubit weight and with ξ/ω_q at fixed quantum number.
            let h = s.h_field * (vq2 * mode.frequency / problem.em[0].frequency).sqrt();
            let model = SurfaceFieldModel::uniform(&s.name, s.area, h);
            let p = loss::surface_inductive_participation(Some(&model), &s.name, s.skin_depth, s.permeability, total)?;
            surf.push(LossyElement { name: s.name.clone(), participation: p, q: QFactor(s.q) });
        }
        mechs.push(Mechanism::new("surface-inductive", surf)?);

        let envs = self.envelopes()?;
        let radius = self.config.loss.aperture_radius.unwrap_or(self.config.dome.radius);
        let fsr = self.cavity.free_spectral_range();
        let mut rough = Vec::new();
        let mut diffraction = Vec::new();
        for (j, entry) in problem.acoustic.iter().enumerate() {
            if entry.kind != BasisKind::Acoustic {
                continue;
            }
            let w = mode.components[n_em + j].powi(2);
            let (fam, order) = parse_mode_label(&entry.label)?;
            rough.push(LossyElement {
                name: entry.label.clone(),
                participation: w,
                q: loss::roughness_q(order, self.config.loss.roughness, self.stack.height())?,
            });
            let env = envs
                .iter()
                .find(|e| e.family == fam)
                .ok_or_else(|| Error::invalid(format!("no envelope for {fam}")))?;
            diffraction.push(LossyElement {
                name: entry.label.clone(),
                participation: w,
                q: loss::diffraction_q(env, entry.frequency, fsr, radius)?.q,
            });
        }
        mechs.push(Mechanism::new("roughness", rough)?);
        mechs.push(Mechanism::new("diffraction", diffraction)?);
        Ok(combine(mode.label.clone(), mechs))
    }

    /// Labels the block-model hybrid modes at the configured inductance from
    /// their composite top-surface u_z; spurious basis states contribute
    /// point-defect fields.
    pub fn classify(&self) -> Result<Vec<ClassifiedMode>> {
        let unhyb = self.unhybridized()?;
        let problem = self.block_problem(&unhyb)?;
        let n_em = problem.em.len();
        let modes = problem.solve(self.config.solver.target_frequency, problem.dim())?;
        let grid = Grid::for_waist(self.cavity.waist_x().max(self.cavity.waist_y()))?;
        let max_order = self.families.iter().map(|f| f.order()).max().unwrap_or(0) + 2;
        let library = if self.cavity.is_circular() {
            ReferenceLibrary::laguerre_gauss(grid.clone(), self.cavity.waist(), max_order)
        } else {
            ReferenceLibrary::hermite_gauss(grid.clone(), self.cavity.waist_x(), self.cavity.waist_y(), max_order)
        };
        let fields: Vec<Vec<f64>> = problem
            .acoustic
            .iter()
            .enumerate()
            .map(|(j, entry)| match entry.kind {
                BasisKind::Acoustic => Ok(modeid::top_surface_uz(&unhyb.modes[j], &grid)),
                BasisKind::Spurious => {
                    let mut f = modeid::synthesize_spurious(&grid, 5, self.config.seed.wrapping_add(j as u64))?;
                    // Same top-surface scale as a physical mode.
                    let s = unhyb.modes.first().map_or(1.0, |m| *m.longitudinal.profile.last().unwrap_or(&1.0));
                    f.iter_mut().for_each(|v| *v *= s);
                    Ok(f)
                }
            })
            .collect::<Result<_>>()?;
        let mut out = Vec::new();
        for (k, m) in modes.iter().enumerate() {
            let label = if m.character == ModeCharacter::QubitLike || m.character == ModeCharacter::EmLike {
                ModeLabel::qubit()
            } else {
                let mut uz = vec![0.0; grid.len()];
                for (j, f) in fields.iter().enumerate() {
                    let c = m.components[n_em + j];
                    uz.iter_mut().zip(f).for_each(|(u, v)| *u += c * v);
                }
                let mut l = modeid::classify(&uz, &library, self.config.solver.match_threshold)?;
                l.polarization = Some(self.polarization.label().to_string());
                l
            };
            out.push(ClassifiedMode { id: k, frequency: m.frequency, basis_label: m.label.clone(), label });
        }
        out.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
        Ok(out)
    }
}

/// Splits "LG(0,0)_q46" into family and longitudinal order.
pub fn parse_mode_label(label: &str) -> Result<(TransverseFamily, usize)> {
    let (fam, q) = label.rsplit_once("_q").ok_or_else(|| Error::invalid(format!("malformed mode label '{label}'")))?;
    let fam: TransverseFamily = fam.parse().map_err(|_| Error::invalid(format!("malformed mode label '{label}'")))?;
    let q: usize = q.parse().map_err(|_| Error::invalid(format!("malformed mode label '{label}'")))?;
    Ok((fam, q))
}

#[derive(Debug, Clone, Serialize)]
pub struct UnhybridizedReport {
    pub qubit: EmMode,
    pub effective_volume: f64,
    pub modes: Vec<AcousticMode>,
    pub couplings: Vec<CouplingResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossCheck {
    pub family: String,
    pub acoustic_label: String,
    /// Frequency of the c_E mode used for the overlap (Hz).
    pub acoustic_frequency: f64,
    /// Same mode in the stiffened monolithic system (Hz).
    pub stiffened_frequency: f64,
    pub overlap_g: f64,
    pub min_gap: f64,
    pub crossing_inductance: f64,
    /// min_gap / 2g.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub family: String,
    pub acoustic_label: String,
    pub overlap_g: f64,
    pub block_min_gap: f64,
    pub block_crossing_inductance: f64,
    pub monolithic: Option<CrossCheck>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CouplingEstimate {
    pub label: String,
    pub overlap_g: f64,
    /// Δ^UH = Ω − ω_q of the bare modes (Hz).
    pub bare_detuning: f64,
    pub g_from_chi: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KerrPoint {
    pub inductance: f64,
    pub qubit_frequency: f64,
    pub modes: Vec<HybridMode>,
    #[serde(skip)]
    pub problem: BlockProblem,
    pub uncorrected: KerrReport,
    pub corrected: KerrReport,
    pub estimates: Vec<CouplingEstimate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HybridizedReport {
    pub table: SweepTable,
    pub branches: Vec<Vec<usize>>,
    pub gaps: Vec<GapReport>,
    pub kerr: KerrPoint,
    pub losses: Vec<LossBudget>,
    pub effective_volume: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifiedMode {
    pub id: usize,
    pub frequency: f64,
    pub basis_label: String,
    pub label: ModeLabel,
}
