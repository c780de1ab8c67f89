//! Monolithic 1-D coupled system: one FEM copy of the stack per transverse
//! family plus the qubit charge.
//!
//! With D eliminated in the piezo layers (no free charge, E along z) the
//! stress-charge equations give a c_D stiffness there and an energy term
//! −(s/C)·Q·e33·∫f ψ dA·∫∂z u dz that couples the charge to each family.
//! Mechanical rows keep the μm/GPa scaling of the acoustic solver; the charge
//! row is scaled by √L so its mass entry is one.

use super::{check_count, junction_quantities, sort_by_shift, HybridMode, ModeCharacter, SweepTemplate};
use crate::acoustics::fem::{element_props, fixed_nodes, ElementProps, MASS_TO_SI, OMEGA_UNIT};
use crate::acoustics::{mode_number, Envelope, Mesh1D, StiffnessChoice};
use crate::constants::{HBAR, TWO_PI};
use crate::emmodes::{AntennaFieldProfile, JunctionSpec};
use crate::error::{Error, Result};
use crate::linalg::{eigs_near, EigenOptions, SkylineMatrix};
use crate::materials::MaterialLibrary;

/// Lumped qubit driving the antenna field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitCircuit {
    pub junction: JunctionSpec,
    pub capacitance: f64,
    pub profile: AntennaFieldProfile,
}

impl QubitCircuit {
    pub fn frequency(&self) -> f64 {
        1.0 / (TWO_PI * (self.junction.inductance * self.capacitance).sqrt())
    }
}

#[derive(Debug, Clone)]
pub struct MonolithicProblem {
    pub mesh: Mesh1D,
    pub families: Vec<Envelope>,
    pub qubit: Option<QubitCircuit>,
    /// Whether piezo layers are stiffened and coupled.
    pub piezo: bool,
    /// Scaled mechanical stiffness including the transverse term.
    k_mech: SkylineMatrix,
    m: SkylineMatrix,
    /// Mesh node of each retained mechanical DOF, per family block.
    dofs: Vec<usize>,
    /// SI charge coupling per retained DOF: (s/C)·e33·∫fψ dA·(overlap fraction).
    coupling: Vec<(usize, f64)>,
}

impl MonolithicProblem {
    pub fn new(
        mesh: &Mesh1D,
        lib: &MaterialLibrary,
        families: Vec<Envelope>,
        qubit: Option<QubitCircuit>,
        piezo: bool,
    ) -> Result<Self> {
        if families.is_empty() {
            return Err(Error::invalid("monolithic problem needs at least one transverse family"));
        }
        let choice = if piezo { StiffnessChoice::ConstantDisplacement } else { StiffnessChoice::ConstantField };
        let props = element_props(mesh, lib, choice)?;
        let fixed = fixed_nodes(mesh);
        let nodes = mesh.nodes.len();
        let retained: Vec<usize> = (0..nodes).filter(|i| !fixed.contains(i)).collect();
        let index_of = |node: usize| retained.iter().position(|&r| r == node);
        let per = retained.len();
        let dim = families.len() * per + usize::from(qubit.is_some());

        let mut k_mech = SkylineMatrix::zeros(dim);
        let mut m = SkylineMatrix::zeros(dim);
        let mut dofs = Vec::with_capacity(families.len() * per);
        for (f, env) in families.iter().enumerate() {
            let nu2 = env.transverse_omega_sq() / (OMEGA_UNIT * OMEGA_UNIT);
            let off = f * per;
            add_family(&mut k_mech, &mut m, &props, nu2, off, &index_of);
            dofs.extend(retained.iter().copied());
        }

        let mut coupling = Vec::new();
        if let (Some(q), true) = (qubit, piezo) {
            q.profile.validate()?;
            let s_per_c = field_per_coulomb(&q);
            let weight = q.profile.radial_weight();
            for (f, env) in families.iter().enumerate() {
                let t = env.weighted_integral(&weight);
                for e in 0..mesh.element_count() {
                    let mat = lib.get(mesh.element_material(e))?;
                    let e33 = mat.piezo_e[(2, 2)];
                    if e33 == 0.0 {
                        continue;
                    }
                    let (z0, z1) = (mesh.nodes[e], mesh.nodes[e + 1]);
                    let lo = z0.max(q.profile.piezo_bottom);
                    let hi = z1.min(q.profile.piezo_top);
                    if hi <= lo {
                        continue;
                    }
                    let c = s_per_c * e33 * t * (hi - lo) / (z1 - z0);
                    if let Some(i) = index_of(e) {
                        coupling.push((f * per + i, c));
                    }
                    if let Some(i) = index_of(e + 1) {
                        coupling.push((f * per + i, -c));
                    }
                }
            }
        }
        if qubit.is_some() {
            m.add(dim - 1, dim - 1, 1.0);
        }
        Ok(Self { mesh: mesh.clone(), families, qubit, piezo, k_mech, m, dofs, coupling })
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    fn per_family(&self) -> usize {
        self.dofs.len() / self.families.len()
    }

    /// Same problem with a different junction inductance.
    pub fn with_inductance(&self, inductance: f64) -> Result<Self> {
        let mut out = self.clone();
        let q = out
            .qubit
            .as_mut()
            .ok_or_else(|| Error::invalid("problem has no qubit to sweep"))?;
        q.junction = JunctionSpec::new(inductance, q.junction.width)?;
        Ok(out)
    }

    /// Full scaled stiffness for the current qubit.
    pub fn stiffness(&self) -> SkylineMatrix {
        let mut k = self.k_mech.clone();
        if let Some(q) = &self.qubit {
            let qi = self.dim() - 1;
            let (l, c) = (q.junction.inductance, q.capacitance);
            k.add(qi, qi, 1.0 / (l * c * OMEGA_UNIT * OMEGA_UNIT));
            let scale = 1.0 / (l.sqrt() * MASS_TO_SI.sqrt() * OMEGA_UNIT * OMEGA_UNIT);
            for &(i, v) in &self.coupling {
                k.add(qi, i, v * scale);
            }
        }
        k
    }

    pub fn mass(&self) -> &SkylineMatrix {
        &self.m
    }

    pub fn basis_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = Vec::new();
        if self.qubit.is_some() {
            labels.push("qubit".into());
        }
        labels.extend(self.families.iter().map(|f| f.family.to_string()));
        labels
    }

    /// `count` modes nearest `shift` (Hz).
    pub fn solve(&self, shift: f64, count: usize) -> Result<Vec<HybridMode>> {
        check_count(count, self.dim())?;
        let k = self.stiffness();
        let shift_ev = (TWO_PI * shift / OMEGA_UNIT).powi(2);
        let pairs = eigs_near(&k, &self.m, shift_ev, count, &EigenOptions::default())?;
        let per = self.per_family();
        let nf = self.families.len();
        let junctions: Vec<JunctionSpec> = self.qubit.iter().map(|q| q.junction).collect();
        let labels = self.families.iter().map(|f| f.family.to_string()).collect::<Vec<_>>();

        let mut modes = Vec::with_capacity(pairs.len());
        for pair in pairs {
            let mut x = pair.vector;
            let xi = pair.value.max(0.0).sqrt() * OMEGA_UNIT;
            let mx = self.m.mul_vec(&x);

            let mut blocks = Vec::with_capacity(nf);
            for f in 0..nf {
                let r = f * per..(f + 1) * per;
                let w: f64 = x[r.clone()].iter().zip(&mx[r.clone()]).map(|(a, b)| a * b).sum();
                let peak = x[r].iter().copied().fold(0.0_f64, |a, b| if b.abs() > a.abs() { b } else { a });
                blocks.push(w.max(0.0).sqrt().copysign(peak));
            }
            let charge = self.qubit.map(|_| x[self.dim() - 1]);

            let mut components = Vec::with_capacity(nf + 1);
            components.extend(charge);
            components.extend(blocks.iter().copied());
            let dom = (0..components.len())
                .max_by(|&a, &b| components[a].abs().total_cmp(&components[b].abs()))
                .unwrap_or(0);
            if components[dom] < 0.0 {
                components.iter_mut().for_each(|c| *c = -*c);
                x.iter_mut().for_each(|c| *c = -*c);
            }
            let kx = k.mul_vec(&x);

            // Energy split: the charge-strain cross term is shared equally.
            let to_joule = 0.5 * HBAR * OMEGA_UNIT * OMEGA_UNIT / xi;
            let (elec, strain, participation) = match charge {
                Some(_) => {
                    let qi = self.dim() - 1;
                    let qc = x[qi];
                    let own = qc * qc * k.get(qi, qi);
                    let cross = qc * (kx[qi] - k.get(qi, qi) * qc);
                    let mech: f64 = (0..qi).map(|i| x[i] * kx[i]).sum::<f64>() - cross;
                    (to_joule * (own + cross), to_joule * (mech + cross), vec![qc * qc])
                }
                None => (0.0, to_joule * (0..x.len()).map(|i| x[i] * kx[i]).sum::<f64>(), Vec::new()),
            };
            let (junction_current, flux_zpf) = junction_quantities(xi, &participation, &junctions);

            let offset = usize::from(charge.is_some());
            let (label, character) = if charge.is_some() && dom == 0 {
                ("qubit".to_string(), ModeCharacter::QubitLike)
            } else {
                let f = dom - offset;
                let nodal = self.expand(&x[f * per..(f + 1) * per]);
                (format!("{}_q{}", labels[f], mode_number(&nodal, &self.mesh)), ModeCharacter::AcousticLike)
            };
            modes.push(HybridMode {
                frequency: xi / TWO_PI,
                components,
                label,
                character,
                junction_current,
                electric_energy: elec,
                strain_energy: strain,
                participation,
                flux_zpf,
                dual: self.m.mul_vec(&x),
                state: x,
            });
        }
        sort_by_shift(&mut modes, shift);
        Ok(modes)
    }

    /// Expands one family block to all mesh nodes.
    pub fn expand(&self, block: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.mesh.nodes.len()];
        for (v, &n) in block.iter().zip(&self.dofs) {
            full[n] = *v;
        }
        full
    }
}

/// s/C: antenna field per coulomb on the qubit capacitor.
fn field_per_coulomb(q: &QubitCircuit) -> f64 {
    (q.capacitance / (crate::constants::EPSILON_0 * q.profile.effective_volume)).sqrt() / q.capacitance
}

fn add_family(
    k: &mut SkylineMatrix,
    m: &mut SkylineMatrix,
    props: &[ElementProps],
    nu2: f64,
    off: usize,
    index_of: &dyn Fn(usize) -> Option<usize>,
) {
    for (e, p) in props.iter().enumerate() {
        let ke = p.stiffness / p.length;
        let me = p.density * p.length / 6.0;
        let ends = [index_of(e), index_of(e + 1)];
        for (a, ia) in ends.iter().enumerate() {
            for (b, ib) in ends.iter().enumerate() {
                let (Some(ia), Some(ib)) = (ia, ib) else { continue };
                if ib < ia {
                    continue;
                }
                let same = a == b;
                let kk = if same { ke } else { -ke };
                let mm = if same { 2.0 * me } else { me };
                k.add(off + ia, off + ib, kk + nu2 * mm);
                m.add(off + ia, off + ib, mm);
            }
        }
    }
}

/// Sweep template over the qubit inductance; every point reports `count`
/// modes nearest `shift`.
#[derive(Debug, Clone)]
pub struct MonolithicTemplate {
    pub problem: MonolithicProblem,
    pub shift: f64,
    pub count: usize,
}

impl SweepTemplate for MonolithicTemplate {
    fn solve_at(&self, inductance: f64) -> Result<Vec<HybridMode>> {
        self.problem.with_inductance(inductance)?.solve(self.shift, self.count)
    }

    fn basis_labels(&self) -> Vec<String> {
        self.problem.basis_labels()
    }
}
