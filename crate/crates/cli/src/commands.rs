use std::path::{Path, PathBuf};

use cqad_core::config::LoadedConfig;
use cqad_core::hybrid::BlockTemplate;
use cqad_core::loss::LossBudget;
use cqad_core::pipeline::Device;

use crate::error::{CliError, StageExt};
use crate::output::{num, opt, q, Meta, Output};

pub fn validate(path: &Path) -> Result<(), CliError> {
    let loaded = LoadedConfig::load(path).map_err(|source| CliError::Load { path: path.to_path_buf(), source })?;
    let lib = loaded.library();
    let mut violations = loaded.config.validate(lib.as_ref().ok());
    if let Err(e) = lib {
        violations.insert(0, cqad_core::config::Violation { key: "materials.path".into(), message: e.to_string() });
    }
    if violations.is_empty() {
        println!("{}: valid (config_hash={})", path.display(), loaded.hash);
        return Ok(());
    }
    for v in &violations {
        println!("{v}");
    }
    Err(CliError::Invalid(violations.len()))
}

/// Loads the device, runs `body`, and always leaves a manifest behind once
/// the output directory exists.
pub fn run<F>(path: &Path, out: Option<PathBuf>, command: &'static str, body: F) -> Result<(), CliError>
where
    F: FnOnce(&Device, &mut Output) -> Result<(), CliError>,
{
    let loaded = LoadedConfig::load(path).map_err(|source| CliError::Load { path: path.to_path_buf(), source })?;
    let lib = loaded.library().map_err(|source| CliError::Load { path: loaded.materials_path(), source })?;
    let device = Device::new(loaded.config.clone(), lib).stage("device")?;
    let dir = out.unwrap_or_else(|| PathBuf::from("cqad-out"));
    let mut output = Output::create(&dir, Meta::new(loaded.hash.clone(), command))?;
    match body(&device, &mut output) {
        Ok(()) => {
            output.finish(None)?;
            println!("wrote {}", dir.display());
            Ok(())
        }
        Err(e) => {
            let stage = match &e {
                CliError::Stage { stage, .. } => *stage,
                _ => "output",
            };
            // Best effort: the original error matters more than the manifest.
            let _ = output.finish(Some((stage, &e)));
            Err(e)
        }
    }
}

pub fn unhybridized(device: &Device, out: &mut Output) -> Result<(), CliError> {
    let report = device.unhybridized().stage("unhybridized")?;
    let rows: Vec<Vec<String>> = report
        .modes
        .iter()
        .map(|m| {
            vec![
                m.label.clone(),
                m.family().to_string(),
                m.order.to_string(),
                m.polarization.label().to_string(),
                num(m.frequency),
                num(m.longitudinal.frequency),
                num(m.longitudinal.effective_density),
                num(m.zpf_amplitude),
            ]
        })
        .collect();
    out.csv(
        "acoustic_modes.csv",
        &["label", "family", "order", "polarization", "frequency_hz", "longitudinal_frequency_hz", "effective_density_kg_m3", "zpf_amplitude_m"],
        &rows,
    )?;
    let rows: Vec<Vec<String>> = report
        .couplings
        .iter()
        .map(|c| vec![c.acoustic_label.clone(), num(c.acoustic_frequency), num(c.acoustic_frequency - report.qubit.frequency), num(c.g)])
        .collect();
    out.csv("couplings.csv", &["acoustic_label", "acoustic_frequency_hz", "detuning_hz", "g_hz"], &rows)?;
    out.json("unhybridized.json", &report)?;

    println!("qubit {:.6} GHz, {} acoustic modes", report.qubit.frequency / 1e9, report.modes.len());
    if let Some(best) = report.couplings.iter().max_by(|a, b| a.g.abs().total_cmp(&b.g.abs())) {
        println!("strongest coupling {} g/2pi = {:.4} MHz", best.acoustic_label, best.g / 1e6);
    }
    Ok(())
}

fn loss_rows(budgets: &[LossBudget]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for b in budgets {
        for m in &b.mechanisms {
            for e in &m.elements {
                rows.push(vec![
                    b.mode.clone(),
                    m.name.clone(),
                    e.name.clone(),
                    num(e.participation),
                    q(e.q),
                    q(m.q),
                    q(b.combined),
                ]);
            }
        }
    }
    rows
}

const LOSS_HEADERS: [&str; 7] = ["mode", "mechanism", "element", "participation", "q_element", "q_mechanism", "q_combined"];

pub fn hybridized(device: &Device, out: &mut Output, cross_check: bool) -> Result<(), CliError> {
    let report = device.hybridized(cross_check).stage("hybridized")?;
    let table = &report.table;
    let nb = report.branches.len();

    let mut spectrum = Vec::new();
    let mut epr = Vec::new();
    for (i, &l) in table.inductances.iter().enumerate() {
        let bare = device.qubit_at(l).stage("sweep")?.frequency;
        let modes = &table.points[i];
        let mut s = vec![num(l), num(bare)];
        let mut e = vec![num(l)];
        let mut total = 0.0;
        for b in &report.branches {
            let m = &modes[b[i]];
            s.push(num(m.frequency));
            let p = m.participation.first().copied().unwrap_or(0.0);
            total += p;
            e.push(num(p));
        }
        e.push(num(total));
        spectrum.push(s);
        epr.push(e);
    }
    let branch_cols: Vec<String> = (0..nb).map(|b| format!("branch{b}")).collect();
    let mut headers: Vec<String> = vec!["inductance_h".into(), "bare_qubit_hz".into()];
    headers.extend(branch_cols.iter().map(|c| format!("{c}_hz")));
    out.csv("spectrum_vs_inductance.csv", &headers.iter().map(String::as_str).collect::<Vec<_>>(), &spectrum)?;
    let mut headers: Vec<String> = vec!["inductance_h".into()];
    headers.extend(branch_cols.iter().map(|c| format!("{c}_epr")));
    headers.push("total_epr".into());
    out.csv("epr_vs_inductance.csv", &headers.iter().map(String::as_str).collect::<Vec<_>>(), &epr)?;

    let first = &table.points[0];
    let last = table.points.last().unwrap_or(first);
    let rows: Vec<Vec<String>> = report
        .branches
        .iter()
        .enumerate()
        .map(|(b, idx)| vec![branch_cols[b].clone(), first[idx[0]].label.clone(), last[*idx.last().unwrap_or(&idx[0])].label.clone()])
        .collect();
    out.csv("branches.csv", &["branch", "label_at_first_point", "label_at_last_point"], &rows)?;

    let rows: Vec<Vec<String>> = report
        .gaps
        .iter()
        .map(|g| {
            vec![
                g.family.clone(),
                g.acoustic_label.clone(),
                num(g.overlap_g),
                num(g.block_min_gap),
                num(g.block_min_gap / (2.0 * g.overlap_g)),
                num(g.block_crossing_inductance),
                opt(g.monolithic.as_ref().map(|m| m.min_gap)),
                opt(g.monolithic.as_ref().map(|m| m.ratio)),
                opt(g.monolithic.as_ref().map(|m| m.crossing_inductance)),
            ]
        })
        .collect();
    out.csv(
        "gaps.csv",
        &[
            "family",
            "acoustic_label",
            "overlap_g_hz",
            "block_min_gap_hz",
            "block_gap_over_2g",
            "block_crossing_inductance_h",
            "monolithic_min_gap_hz",
            "monolithic_gap_over_2g",
            "monolithic_crossing_inductance_h",
        ],
        &rows,
    )?;

    let k = &report.kerr;
    let mut rows = Vec::new();
    for a in 0..k.corrected.len() {
        for b in a..k.corrected.len() {
            rows.push(vec![
                k.corrected.labels[a].clone(),
                k.corrected.labels[b].clone(),
                num(k.corrected.frequencies[a]),
                num(k.corrected.frequencies[b]),
                num(k.uncorrected.chi[a][b]),
                num(k.corrected.chi[a][b]),
                k.corrected.corrected[a][b].to_string(),
            ]);
        }
    }
    out.csv(
        "kerr.csv",
        &["mode_k", "mode_l", "frequency_k_hz", "frequency_l_hz", "chi_uncorrected_hz", "chi_hz", "corrected"],
        &rows,
    )?;
    out.csv("loss.csv", &LOSS_HEADERS, &loss_rows(&report.losses))?;
    out.json("hybridized.json", &report)?;

    println!("{} sweep points, {} branches", table.inductances.len(), nb);
    for g in &report.gaps {
        print!("{}: g/2pi {:.4} MHz, block gap/2g {:.4}", g.family, g.overlap_g / 1e6, g.block_min_gap / (2.0 * g.overlap_g));
        match &g.monolithic {
            Some(m) => println!(", monolithic gap/2g {:.4}", m.ratio),
            None => println!(),
        }
    }
    println!("Kerr at L = {:.4} nH (qubit {:.6} GHz), * = corrected:", k.inductance * 1e9, k.qubit_frequency / 1e9);
    print!("{}", k.corrected);
    Ok(())
}

pub fn classify(device: &Device, out: &mut Output) -> Result<(), CliError> {
    let modes = device.classify().stage("classify")?;
    let rows: Vec<Vec<String>> = modes
        .iter()
        .map(|m| {
            vec![
                m.id.to_string(),
                num(m.frequency),
                m.basis_label.clone(),
                m.label.to_string(),
                format!("{:?}", m.label.family).to_lowercase(),
                num(m.label.score),
                m.label.polarization.clone().unwrap_or_default(),
            ]
        })
        .collect();
    out.csv("classification.csv", &["mode_id", "frequency_hz", "basis_label", "label", "family", "score", "polarization"], &rows)?;
    out.json("classification.json", &modes)?;
    let physical = modes.iter().filter(|m| m.label.is_physical()).count();
    println!("{} modes: {physical} physical, {} other", modes.len(), modes.len() - physical);
    Ok(())
}

pub fn loss(device: &Device, out: &mut Output) -> Result<(), CliError> {
    let unhyb = device.unhybridized().stage("unhybridized")?;
    let template = BlockTemplate::new(device.block_problem(&unhyb).stage("block")?, 0).stage("block")?;
    let point = device.kerr_point(&unhyb, &template).stage("dispersive point")?;
    let budgets: Vec<LossBudget> =
        point.modes.iter().map(|m| device.loss_budget(m, &point.problem)).collect::<cqad_core::Result<_>>().stage("loss")?;
    out.csv("loss.csv", &LOSS_HEADERS, &loss_rows(&budgets))?;
    out.json("loss.json", &budgets)?;
    for b in &budgets {
        println!("{}: Q = {}", b.mode, b.combined);
    }
    Ok(())
}
