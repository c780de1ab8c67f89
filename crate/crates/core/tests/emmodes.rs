mod common;

use common::trapezoid;
use cqad_core::constants::{EPSILON_0, HBAR, PLANCK, TWO_PI};
use cqad_core::emmodes::*;
use cqad_core::Error;

const C: f64 = 67e-15;

fn disk(shape: FieldShape) -> AntennaFieldProfile {
    AntennaFieldProfile {
        shape,
        radius: 20e-6,
        gap: 3e-6,
        effective_volume: 1e-10,
        piezo_bottom: 0.0,
        piezo_top: 0.9e-6,
        region_radius: 100e-6,
    }
}

fn qubit(l: f64) -> EmMode {
    qubit_mode(&JunctionSpec::new(l, 1e-6).unwrap(), C, Some(disk(FieldShape::UniformDisk))).unwrap()
}

#[test]
fn capacitance_and_table_frequency_give_expected_inductance() {
    let l = inductance_for(6.424e9, C);
    let w = TWO_PI * 6.424e9;
    assert!((l - 1.0 / (C * w * w)).abs() < 1e-24);
    assert!((l - 9.16e-9).abs() < 0.05e-9, "{l}");
    let q = qubit(l);
    assert!((q.frequency - 6.424e9).abs() < 1e-10 * 6.424e9);
}

#[test]
fn quadrupling_inductance_halves_frequency() {
    let a = qubit(9.2e-9);
    let b = qubit(4.0 * 9.2e-9);
    assert!((b.frequency / a.frequency - 0.5).abs() < 1e-14);
}

#[test]
fn josephson_energy_at_nominal_inductance() {
    let j = JunctionSpec::new(9.2e-9, 1e-6).unwrap();
    let phi0 = PLANCK / (2.0 * 1.602_176_634e-19);
    let ej = (phi0 / TWO_PI).powi(2) / 9.2e-9;
    assert!((j.josephson_energy() - ej).abs() < 1e-12 * ej);
    let ghz = j.josephson_energy() / PLANCK / 1e9;
    assert!((ghz - 17.8).abs() < 0.1, "{ghz}");
    assert!(matches!(JunctionSpec::new(0.0, 1e-6), Err(Error::InvalidInput(_))));
}

#[test]
fn bare_qubit_participation_is_one() {
    for l in [5e-9, 9.2e-9, 20e-9] {
        let q = qubit(l);
        let p = q.participation(&[JunctionSpec::new(l, 1e-6).unwrap()]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-9, "{}", p[0]);
    }
}

#[test]
fn frequency_derivative_follows_square_root_law() {
    let l = 9.2e-9;
    let h = 1e-6 * l;
    let d = (qubit(l + h).frequency - qubit(l - h).frequency) / (2.0 * h);
    let expected = -qubit(l).frequency / (2.0 * l);
    assert!((d / expected - 1.0).abs() < 1e-6);
}

#[test]
fn sweep_keeps_capacitance_and_orders_frequencies() {
    let base = qubit(9.2e-9);
    let one = sweep_inductance(&base, &[9.2e-9]).unwrap();
    assert_eq!(one[0].frequency, base.frequency);
    assert_eq!(one[0].junction_zpf, base.junction_zpf);
    assert_eq!(one[0].capacitance, base.capacitance);

    let ls: Vec<f64> = (0..11).map(|i| 8.8e-9 + 0.1e-9 * i as f64).collect();
    let modes = sweep_inductance(&base, &ls).unwrap();
    assert!(modes.windows(2).all(|w| w[1].frequency < w[0].frequency));
    // An acoustic frequency inside the range is bracketed by the end points.
    let omega = 6.42e9;
    assert!(modes[0].frequency > omega && modes[10].frequency < omega);
    assert!(sweep_inductance(&base, &[-1e-9]).is_err());
}

#[test]
fn uniform_disk_field_is_flat_and_confined() {
    let q = qubit(9.2e-9);
    let z = 0.45e-6;
    let f = field_in_piezo(&q, &[[0.0, 0.0, z], [19.9e-6, 0.0, z], [0.0, 20.1e-6, z]]).unwrap();
    assert_eq!(f[0], f[1]);
    assert!(f[0].z > 0.0 && f[0].x == 0.0 && f[0].y == 0.0);
    assert_eq!(f[2].z, 0.0);
    let err = field_in_piezo(&q, &[[0.0, 0.0, 2e-6]]).unwrap_err();
    assert!(matches!(err, Error::OutsideRegion(..)));
}

#[test]
fn single_photon_field_carries_half_quantum() {
    // ½ε₀∫|E|²dV over the declared effective volume equals ħω/2.
    let q = qubit(9.2e-9);
    let e1 = field_in_piezo(&q, &[[0.0, 0.0, 0.0]]).unwrap()[0].z;
    let area = trapezoid(|r| TWO_PI * r * (if r <= 20e-6 { 1.0 } else { 0.0 }), 0.0, 20e-6, 20_000);
    let depth = 1e-10 / area;
    let energy = 0.5 * EPSILON_0 * e1 * e1 * area * depth;
    let half_quantum = 0.5 * HBAR * q.angular_frequency();
    assert!((energy / half_quantum - 1.0).abs() < 1e-6);
}

#[test]
fn annular_dipole_changes_sign_at_equal_area_radius() {
    let mut q = qubit(9.2e-9);
    q.profile = Some(disk(FieldShape::AnnularDipole));
    let f = field_in_piezo(&q, &[[5e-6, 0.0, 0.1e-6], [18e-6, 0.0, 0.1e-6], [30e-6, 0.0, 0.1e-6]]).unwrap();
    assert!(f[0].z > 0.0);
    assert_eq!(f[1].z, -f[0].z);
    assert_eq!(f[2].z, 0.0);
    // Zero net flux: inner disk and outer ring have equal area.
    let w = disk(FieldShape::AnnularDipole).radial_weight();
    let net: f64 = w.segments().map(|(a, b, v)| v * (b * b - a * a)).sum();
    assert!(net.abs() < 1e-24);
    assert!((w.area_weighted() - std::f64::consts::PI * 400e-12).abs() < 1e-20);
}

#[test]
fn cavity_modes_carry_given_flux() {
    let m = cavity_mode(1, 9.1e9, vec![0.0], None);
    assert_eq!(m.label, "cavity-1");
    assert_eq!(m.participation(&[JunctionSpec::new(9.2e-9, 0.0).unwrap()]).unwrap(), vec![0.0]);
    assert!(sweep_inductance(&m, &[9e-9]).is_err());
    assert!(field_in_piezo(&m, &[[0.0; 3]]).is_err());
}
