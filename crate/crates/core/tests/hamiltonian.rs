use cqad_core::constants::{PLANCK, REDUCED_FLUX_QUANTUM};
use cqad_core::emmodes::{inductance_for, qubit_mode, JunctionSpec};
use cqad_core::hamiltonian::*;
use cqad_core::hybrid::{build_block, BasisEntry, BasisKind, ModeCharacter};
use cqad_core::Error;
use proptest::prelude::*;

const C: f64 = 67e-15;

/// Junction whose LC resonance with C sits at the tabulated qubit frequency.
fn table_junction() -> JunctionSpec {
    JunctionSpec::new(inductance_for(6.424e9, C), 1e-6).unwrap()
}

fn table_report() -> KerrReport {
    let labels: Vec<String> = ["qubit", "LG(0,0)", "HG(2,0)"].iter().map(|s| s.to_string()).collect();
    kerr_from_participations(&labels, &[6.424e9, 6.445e9, 6.451e9], &[vec![0.95], vec![1.4e-3], vec![5.4e-5]], &[table_junction()]).unwrap()
}

#[test]
fn table_inputs_reproduce_self_kerr_and_anharmonicity() {
    let r = table_report();
    let ej = REDUCED_FLUX_QUANTUM.powi(2) / table_junction().inductance / PLANCK;
    assert!((r.josephson_frequency[0] / ej - 1.0).abs() < 1e-12);
    let chi_qq = 0.95 * 0.95 * 6.424e9 * 6.424e9 / (4.0 * ej);
    assert!((r.chi[0][0] / chi_qq - 1.0).abs() < 1e-12);
    assert!((r.chi[0][0] / 5.2e8 - 1.0).abs() < 0.05, "{}", r.chi[0][0]);
    assert!((255e6..=270e6).contains(&r.anharmonicity[0]), "{}", r.anharmonicity[0]);
}

#[test]
fn derived_quantities_are_definitional() {
    let r = table_report();
    for k in 0..3 {
        assert_eq!(r.anharmonicity[k], 0.5 * r.chi[k][k]);
        assert_eq!(r.lamb_shift[k], 0.5 * r.chi[k].iter().sum::<f64>());
        for l in 0..3 {
            assert_eq!(r.chi[k][l], r.chi[l][k]);
            assert!(r.chi[k][l] >= 0.0);
        }
    }
}

#[test]
fn zero_participation_clears_row() {
    let labels: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let r = kerr_from_participations(&labels, &[6e9, 6.1e9, 6.2e9], &[vec![0.9], vec![0.0], vec![0.01]], &[table_junction()]).unwrap();
    assert!(r.chi[1].iter().all(|&x| x == 0.0));
    assert!(r.chi.iter().all(|row| row[1] == 0.0));
    assert!(kerr_from_participations(&labels, &[6e9], &[vec![0.9]], &[table_junction()]).is_err());
}

#[test]
fn table_cross_kerr_after_correction() {
    let r = table_report();
    let detunings = [0.0, 21e6, 27e6];
    let corrected = sw_correction(&r, 0, &detunings).unwrap();
    let factor = corrected.chi[0][1] / r.chi[0][1];
    assert!((factor - 1.0 / (1.0 + r.anharmonicity[0] / 21e6)).abs() < 1e-12);
    assert!((0.06..=0.09).contains(&factor), "{factor}");
    assert!((r.chi[0][1] / 7.7e5 - 1.0).abs() < 0.02, "{}", r.chi[0][1]);
    let ratio = corrected.chi[0][1] / 4.4e4;
    assert!((0.5..=2.0).contains(&ratio), "{}", corrected.chi[0][1]);
    // The qubit anharmonicity is untouched, flags set on the pair only.
    assert_eq!(corrected.anharmonicity[0], r.anharmonicity[0]);
    assert!(corrected.corrected[0][1] && corrected.corrected[1][0]);
    assert!(!corrected.corrected[1][2] && !corrected.corrected[0][0]);
    assert_eq!(corrected.chi[1][2], r.chi[1][2]);
    assert!(corrected.lamb_shift[0] < r.lamb_shift[0]);
    assert!(corrected.to_string().contains('*'));
    assert!(!r.to_string().contains('*'));
}

#[test]
fn correction_limits() {
    let r = table_report();
    let alpha = r.anharmonicity[0];
    // Dispersive limit: the factor tends to one.
    let far = sw_correction(&r, 0, &[0.0, 1e6 * alpha, 1e6 * alpha]).unwrap();
    assert!((far.chi[0][1] / r.chi[0][1] - 1.0).abs() < 1e-5);
    // Below the negligible ratio the map is the identity.
    let identity = sw_correction(&r, 0, &[0.0, 2e6 * alpha, -2e6 * alpha]).unwrap();
    assert_eq!(identity.chi, r.chi);
    assert!(identity.corrected.iter().flatten().all(|c| !c));
    // Large negative detuning: the factor tends to one; it sits above one,
    // since 1/(1 − α/|Δ|) > 1.
    let neg = sw_correction(&r, 0, &[0.0, -1e3 * alpha, -1e3 * alpha]).unwrap();
    let f = neg.chi[0][1] / r.chi[0][1];
    assert!((f - 1.0).abs() < 2e-3 && f > 1.0, "{f}");
    // The pole.
    let err = sw_correction(&r, 0, &[0.0, -alpha, 1e9]).unwrap_err();
    assert!(matches!(err, Error::CorrectionSingular { .. }));
    assert!(err.to_string().contains("correction singular"));
}

#[test]
fn correction_needs_single_junction_and_matching_lengths() {
    let r = table_report();
    assert!(sw_correction(&r, 0, &[0.0, 1e6]).is_err());
    assert!(sw_correction(&r, 5, &[0.0, 1e6, 1e6]).is_err());
    let labels: Vec<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
    let two = kerr_from_participations(&labels, &[6e9, 6.1e9], &[vec![0.5, 0.4], vec![0.01, 0.0]], &[table_junction(), table_junction()]).unwrap();
    assert!(sw_correction(&two, 0, &[0.0, 1e7]).is_err());
}

#[test]
fn g_from_chi_limits_and_errors() {
    assert_eq!(g_from_chi(0.0, 20e6, 260e6).unwrap(), 0.0);
    let (chi, d) = (1e4, 30e6);
    let big = g_from_chi(chi, d, 1e15).unwrap();
    assert!((big * big / (d * chi / 2.0) - 1.0).abs() < 1e-6);
    let g = g_from_chi(chi, d, 260e6).unwrap();
    assert!((g * g - d * chi * (d + 260e6) / (2.0 * 260e6)).abs() < 1e-9 * g * g);
    assert!(matches!(g_from_chi(chi, -30e6, 260e6), Err(Error::RegimeViolation(_))));
    assert!(g_from_chi(chi, d, 0.0).is_err());
}

#[test]
fn coupling_round_trip_through_block_model() {
    let j = JunctionSpec::new(9.2e-9, 1e-6).unwrap();
    let q = qubit_mode(&j, C, None).unwrap();
    let g = 1e6;
    for ratio in [5.0, 10.0, 20.0, 50.0] {
        let delta = ratio * g;
        let ac = [BasisEntry { label: "a".into(), frequency: q.frequency + delta, kind: BasisKind::Acoustic }];
        let p = build_block(&[q.clone()], &ac, &[(0, 0, g)], &[j]).unwrap();
        let modes = p.solve(q.frequency, 2).unwrap();
        let report = kerr_from_epr(&modes, &[j]).unwrap();
        let iq = modes.iter().position(|m| m.character == ModeCharacter::QubitLike).unwrap();
        let il = 1 - iq;
        let mut detunings = vec![0.0; 2];
        detunings[il] = modes[il].frequency - modes[iq].frequency;
        let corrected = sw_correction(&report, iq, &detunings).unwrap();
        let back = g_from_chi(corrected.chi[iq][il], delta, corrected.anharmonicity[iq]).unwrap();
        assert!((back / g - 1.0).abs() < 0.1, "Δ/g={ratio}: {back}");
    }
}

#[test]
fn validity_flags() {
    let r = table_report();
    let d = validity_check(&r, &[(0, 1, 0.0), (0, 2, 13.5e6), (0, 1, 1.05e6)], DEFAULT_DISPERSIVE_RATIO);
    assert!(d[0].dispersive && d[0].dispersive_ratio.is_infinite());
    // Δ/g = 2 fails the default threshold.
    assert!(!d[1].dispersive && (d[1].dispersive_ratio - 2.0).abs() < 1e-6);
    assert!(d[2].dispersive);
    // Table-like regime: 21 MHz sits far below E_jφ_q⁴/h.
    assert!(!d[0].perturbative);
    assert!((d[0].detuning - 21e6).abs() < 1.0);
    assert!((d[0].perturbative_scale / r.chi[0][0] - 1.0).abs() < 1e-12);
    assert!(d[0].perturbative_scale > 310e6);
}

proptest! {
    #[test]
    fn chi_is_quadratic_in_participations(
        p in prop::collection::vec(0.0..1.0f64, 2..6),
        s in 0.1..3.0f64,
    ) {
        let n = p.len();
        let labels: Vec<String> = (0..n).map(|i| format!("m{i}")).collect();
        let f: Vec<f64> = (0..n).map(|i| 6e9 + 1e7 * i as f64).collect();
        let rows: Vec<Vec<f64>> = p.iter().map(|x| vec![*x]).collect();
        let scaled: Vec<Vec<f64>> = p.iter().map(|x| vec![s * x]).collect();
        let a = kerr_from_participations(&labels, &f, &rows, &[table_junction()]).unwrap();
        let b = kerr_from_participations(&labels, &f, &scaled, &[table_junction()]).unwrap();
        for k in 0..n {
            for l in 0..n {
                prop_assert!((b.chi[k][l] - s * s * a.chi[k][l]).abs() <= 1e-12 * b.chi[k][l].abs().max(1e-300));
            }
        }
    }

    #[test]
    fn chi_is_permutation_equivariant(
        p in prop::collection::vec(0.0..1.0f64, 3..6),
        seed in 0usize..100,
    ) {
        let n = p.len();
        let labels: Vec<String> = (0..n).map(|i| format!("m{i}")).collect();
        let f: Vec<f64> = (0..n).map(|i| 6e9 + 1e7 * i as f64).collect();
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + seed) % n).collect();
        let distinct = { let mut s = perm.clone(); s.sort(); s.dedup(); s.len() == n };
        prop_assume!(distinct);
        let rows: Vec<Vec<f64>> = p.iter().map(|x| vec![*x]).collect();
        let a = kerr_from_participations(&labels, &f, &rows, &[table_junction()]).unwrap();
        let pl: Vec<String> = perm.iter().map(|&i| labels[i].clone()).collect();
        let pf: Vec<f64> = perm.iter().map(|&i| f[i]).collect();
        let pr: Vec<Vec<f64>> = perm.iter().map(|&i| rows[i].clone()).collect();
        let b = kerr_from_participations(&pl, &pf, &pr, &[table_junction()]).unwrap();
        for k in 0..n {
            for l in 0..n {
                prop_assert!((b.chi[k][l] - a.chi[perm[k]][perm[l]]).abs() <= 1e-14 * b.chi[k][l].abs());
            }
        }
    }
}
