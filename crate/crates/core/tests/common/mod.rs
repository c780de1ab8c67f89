//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use cqad_core::materials::MaterialLibrary;

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn library() -> MaterialLibrary {
    MaterialLibrary::load(repo_root().join("configs/materials.toml")).unwrap()
}

/// Homogeneous layer for the transfer-matrix oracle: (c33 Pa, ρ kg/m³, t m).
#[derive(Clone, Copy, Debug)]
pub struct TmLayer {
    pub c: f64,
    pub rho: f64,
    pub thickness: f64,
}

/// Propagates the state (u, T = c·du/dz) through all layers at angular
/// frequency `w`, starting from `start`.
pub fn propagate(layers: &[TmLayer], w: f64, start: (f64, f64)) -> (f64, f64) {
    let (mut u, mut t) = start;
    for l in layers {
        let k = w * (l.rho / l.c).sqrt();
        let (s, c) = (k * l.thickness).sin_cos();
        let ck = l.c * k;
        let nu = c * u + s / ck * t;
        let nt = -ck * s * u + c * t;
        u = nu;
        t = nt;
    }
    (u, t)
}

/// Characteristic function whose zeros are the eigenfrequencies.
pub fn characteristic(layers: &[TmLayer], f: f64, bottom_fixed: bool, top_fixed: bool) -> f64 {
    let w = 2.0 * std::f64::consts::PI * f;
    let start = if bottom_fixed { (0.0, 1.0) } else { (1.0, 0.0) };
    let (u, t) = propagate(layers, w, start);
    if top_fixed {
        u
    } else {
        t
    }
}

/// All eigenfrequencies in [f_lo, f_hi] by sign-change scan and bisection.
pub fn transfer_matrix_roots(layers: &[TmLayer], f_lo: f64, f_hi: f64, bottom_fixed: bool, top_fixed: bool) -> Vec<f64> {
    let steps = 20_000;
    let df = (f_hi - f_lo) / steps as f64;
    let g = |f: f64| characteristic(layers, f, bottom_fixed, top_fixed);
    let mut roots = Vec::new();
    let mut a = f_lo;
    let mut ga = g(a);
    for i in 1..=steps {
        let b = f_lo + i as f64 * df;
        let gb = g(b);
        if ga == 0.0 {
            roots.push(a);
        } else if ga.signum() != gb.signum() && gb != 0.0 {
            let (mut lo, mut hi, mut glo) = (a, b, ga);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid);
                if gm.signum() == glo.signum() {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        a = b;
        ga = gb;
    }
    roots
}

/// Brute-force trapezoid rule on `n` intervals.
pub fn trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = 0.5 * (f(a) + f(b));
    for i in 1..n {
        s += f(a + i as f64 * h);
    }
    s * h
}

/// Brute-force 2-D trapezoid rule over a square [-l, l]².
pub fn trapezoid_2d<F: Fn(f64, f64) -> f64>(f: F, l: f64, n: usize) -> f64 {
    trapezoid(|x| trapezoid(|y| f(x, y), -l, l, n), -l, l, n)
}

/// Device built from a shipped config under configs/.
pub fn shipped_device(name: &str) -> cqad_core::pipeline::Device {
    let loaded = cqad_core::config::LoadedConfig::load(repo_root().join("configs").join(name)).unwrap();
    cqad_core::pipeline::Device::from_loaded(&loaded).unwrap()
}

/// Brute-force trapezoid evaluation of the normalized overlap for a circular
/// envelope under a uniform disk field, using only sampled mode fields.
pub fn trapezoid_oracle(d: &cqad_core::pipeline::Device, em: &cqad_core::emmodes::EmMode, ac: &cqad_core::acoustics::AcousticMode) -> f64 {
    let profile = em.profile.unwrap();
    let psi0 = ac.envelope.value(0.0, 0.0);
    let z = &ac.longitudinal.z;
    let h = |zz: f64| ac.displacement(0.0, 0.0, zz)[2] / psi0;
    let density = |zz: f64| if zz < 0.9e-6 { 3260.0 } else { 3986.0 };
    let sub = 512;
    let (mut hh, mut rho_hh, mut dh) = (0.0, 0.0, 0.0);
    for w in z.windows(2) {
        let (a, b) = (w[0], w[1]);
        let eps = 1e-9 * (b - a);
        hh += trapezoid(|x| h(x).powi(2), a, b, sub);
        rho_hh += trapezoid(|x| density(0.5 * (a + b)) * h(x).powi(2), a, b, sub);
        let (lo, hi) = (a.max(profile.piezo_bottom), b.min(profile.piezo_top));
        if hi > lo {
            dh += trapezoid(|x| ac.strain(0.0, 0.0, x)[(2, 2)] / psi0, lo + eps, hi - eps, 4) * (hi - lo) / (hi - lo - 2.0 * eps);
        }
    }
    let transverse = trapezoid(|r| cqad_core::constants::TWO_PI * r * ac.envelope.value(r, 0.0), 0.0, profile.radius, 40_000);
    let rho = rho_hh / hh;
    let e33 = d.lib.get("AlN").unwrap().piezo_e[(2, 2)];
    let pref = 0.5 * (em.angular_frequency() / (rho * cqad_core::constants::EPSILON_0 * ac.angular_frequency())).sqrt()
        / (profile.effective_volume.sqrt() * hh.sqrt());
    pref * e33 * transverse * dh / cqad_core::constants::TWO_PI
}
