//! Laguerre- and Hermite-Gaussian transverse envelopes of a plano-convex
//! phonon cavity.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constants::TWO_PI;
use crate::error::{Error, Result};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianCavity {
    /// Radius of curvature along x (m).
    pub radius_of_curvature_x: f64,
    /// Radius of curvature along y (m); equal to x for a spherical dome.
    pub radius_of_curvature_y: f64,
    pub dome_radius: f64,
    pub height: f64,
    /// Acoustic wavelength at the design frequency (m).
    pub wavelength: f64,
    /// Design frequency (Hz).
    pub frequency: f64,
}

impl GaussianCavity {
    pub fn new(radius_of_curvature: f64, dome_radius: f64, height: f64, wavelength: f64, frequency: f64) -> Result<Self> {
        Self::astigmatic(radius_of_curvature, radius_of_curvature, dome_radius, height, wavelength, frequency)
    }

    pub fn astigmatic(
        rcx: f64,
        rcy: f64,
        dome_radius: f64,
        height: f64,
        wavelength: f64,
        frequency: f64,
    ) -> Result<Self> {
        let c = Self {
            radius_of_curvature_x: rcx,
            radius_of_curvature_y: rcy,
            dome_radius,
            height,
            wavelength,
            frequency,
        };
        c.validate()?;
        Ok(c)
    }

    /// Radius of curvature of a spherical cap with base radius `r` and sag `s`.
    pub fn cap_radius_of_curvature(r: f64, s: f64) -> f64 {
        (r * r + s * s) / (2.0 * s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dome_radius", self.dome_radius),
            ("height", self.height),
            ("wavelength", self.wavelength),
            ("frequency", self.frequency),
            ("radius_of_curvature_x", self.radius_of_curvature_x),
            ("radius_of_curvature_y", self.radius_of_curvature_y),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("cavity {name} must be positive, got {v}")));
            }
        }
        let r = self.radius_of_curvature_x.min(self.radius_of_curvature_y);
        if self.height >= r {
            return Err(Error::UnstableCavity { height: self.height, radius: r });
        }
        let w = self.waist_x().max(self.waist_y());
        if w >= self.dome_radius {
            return Err(Error::invalid(format!(
                "waist {w:.3e} m does not fit inside dome radius {:.3e} m",
                self.dome_radius
            )));
        }
        Ok(())
    }

    pub fn is_circular(&self) -> bool {
        self.radius_of_curvature_x == self.radius_of_curvature_y
    }

    fn waist_for(&self, r: f64) -> f64 {
        (self.wavelength / PI).sqrt() * (self.height * (r - self.height)).powf(0.25)
    }

    pub fn waist_x(&self) -> f64 {
        self.waist_for(self.radius_of_curvature_x)
    }

    pub fn waist_y(&self) -> f64 {
        self.waist_for(self.radius_of_curvature_y)
    }

    pub fn waist(&self) -> f64 {
        self.waist_x()
    }

    /// One-way Gouy phase acos√(1 − h/R) along x and y.
    pub fn gouy_phases(&self) -> (f64, f64) {
        let g = |r: f64| (1.0 - self.height / r).sqrt().acos();
        (g(self.radius_of_curvature_x), g(self.radius_of_curvature_y))
    }

    pub fn velocity(&self) -> f64 {
        self.wavelength * self.frequency
    }

    pub fn free_spectral_range(&self) -> f64 {
        self.velocity() / (2.0 * self.height)
    }

    /// Frequency offset of a transverse family relative to the bare
    /// longitudinal resonance, from the round-trip Gouy phase.
    pub fn transverse_offset(&self, family: TransverseFamily) -> Result<f64> {
        let (zx, zy) = self.gouy_phases();
        let fsr = self.free_spectral_range();
        match family {
            TransverseFamily::LG { p, l } => {
                if !self.is_circular() {
                    return Err(Error::invalid(format!("{family} requires a circular cavity")));
                }
                Ok(fsr / PI * (2 * p + l.unsigned_abs() + 1) as f64 * zx)
            }
            TransverseFamily::HG { m, n } => Ok(fsr / PI * ((m as f64 + 0.5) * zx + (n as f64 + 0.5) * zy)),
        }
    }

    pub fn envelope(&self, family: TransverseFamily) -> Result<Envelope> {
        gaussian_envelope(self, family)
    }
}

/// Transverse mode family. Negative `l` selects the sin(|l|φ) partner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TransverseFamily {
    LG { p: u32, l: i32 },
    HG { m: u32, n: u32 },
}

impl TransverseFamily {
    pub fn order(&self) -> u32 {
        match *self {
            TransverseFamily::LG { p, l } => 2 * p + l.unsigned_abs(),
            TransverseFamily::HG { m, n } => m + n,
        }
    }

    pub fn is_fundamental(&self) -> bool {
        self.order() == 0
    }
}

impl fmt::Display for TransverseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransverseFamily::LG { p, l } => write!(f, "LG({p},{l})"),
            TransverseFamily::HG { m, n } => write!(f, "HG({m},{n})"),
        }
    }
}

impl FromStr for TransverseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::invalid(format!("cannot parse transverse family '{s}', expected LG(p,l) or HG(m,n)"));
        let (kind, rest) = t.split_at(t.find('(').ok_or_else(bad)?);
        let inner = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
        let mut parts = inner.split(',').map(str::trim);
        let a = parts.next().ok_or_else(bad)?;
        let b = parts.next().ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        match kind.to_ascii_uppercase().as_str() {
            "LG" => Ok(TransverseFamily::LG { p: a.parse().map_err(|_| bad())?, l: b.parse().map_err(|_| bad())? }),
            "HG" => Ok(TransverseFamily::HG { m: a.parse().map_err(|_| bad())?, n: b.parse().map_err(|_| bad())? }),
            _ => Err(bad()),
        }
    }
}

/// Physicists' Hermite polynomial H_n(x).
pub fn hermite(n: u32, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Generalized Laguerre polynomial L_p^a(x).
pub fn laguerre(p: u32, a: u32, x: f64) -> f64 {
    let a = a as f64;
    let (mut l0, mut l1) = (1.0, 1.0 + a - x);
    if p == 0 {
        return l0;
    }
    for k in 1..p {
        let k = k as f64;
        let l2 = ((2.0 * k + 1.0 + a - x) * l1 - (k + a) * l0) / (k + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Normalized 1-D Hermite-Gauss factor and its derivative.
fn hg_factor(m: u32, x: f64, w: f64) -> (f64, f64) {
    let c = (2.0 / PI).powf(0.25) / (2f64.powi(m as i32) * factorial(m) * w).sqrt();
    let xi = std::f64::consts::SQRT_2 * x / w;
    let g = (-x * x / (w * w)).exp();
    let h = hermite(m, xi);
    let dh = if m == 0 { 0.0 } else { 2.0 * m as f64 * hermite(m - 1, xi) };
    (c * h * g, c * g * (std::f64::consts::SQRT_2 / w * dh - 2.0 * x / (w * w) * h))
}

/// Normalized transverse profile ψ(x, y) with ∫ψ² dA = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub family: TransverseFamily,
    pub waist_x: f64,
    pub waist_y: f64,
    /// Gouy frequency offset (Hz) relative to the bare longitudinal mode.
    pub frequency_offset: f64,
    /// Frequency at which the offset is exact (Hz).
    pub reference_frequency: f64,
}

pub fn gaussian_envelope(cavity: &GaussianCavity, family: TransverseFamily) -> Result<Envelope> {
    cavity.validate()?;
    let frequency_offset = cavity.transverse_offset(family)?;
    Ok(Envelope {
        family,
        waist_x: cavity.waist_x(),
        waist_y: cavity.waist_y(),
        frequency_offset,
        reference_frequency: cavity.frequency,
    })
}

impl Envelope {
    /// Bare Gaussian envelope with no frequency bookkeeping.
    pub fn with_waists(family: TransverseFamily, waist_x: f64, waist_y: f64) -> Self {
        Self { family, waist_x, waist_y, frequency_offset: 0.0, reference_frequency: 0.0 }
    }

    pub fn is_circular(&self) -> bool {
        self.waist_x == self.waist_y
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        match self.family {
            TransverseFamily::HG { m, n } => hg_factor(m, x, self.waist_x).0 * hg_factor(n, y, self.waist_y).0,
            TransverseFamily::LG { p, l } => {
                let w = self.waist_x;
                let la = l.unsigned_abs();
                let r2 = x * x + y * y;
                let rho2 = 2.0 * r2 / (w * w);
                let mut norm = (2.0 * factorial(p) / (PI * factorial(p + la))).sqrt() / w;
                let angular = if l == 0 {
                    1.0
                } else {
                    norm *= std::f64::consts::SQRT_2;
                    let phi = y.atan2(x);
                    if l > 0 {
                        (la as f64 * phi).cos()
                    } else {
                        (la as f64 * phi).sin()
                    }
                };
                norm * rho2.powf(la as f64 / 2.0) * laguerre(p, la, rho2) * (-r2 / (w * w)).exp() * angular
            }
        }
    }

    /// (∂ψ/∂x, ∂ψ/∂y).
    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        match self.family {
            TransverseFamily::HG { m, n } => {
                let (fx, dfx) = hg_factor(m, x, self.waist_x);
                let (fy, dfy) = hg_factor(n, y, self.waist_y);
                (dfx * fy, fx * dfy)
            }
            TransverseFamily::LG { .. } => {
                let d = 1e-5 * self.waist_x;
                (
                    (self.value(x + d, y) - self.value(x - d, y)) / (2.0 * d),
                    (self.value(x, y + d) - self.value(x, y - d)) / (2.0 * d),
                )
            }
        }
    }

    fn extent(&self) -> f64 {
        self.waist_x.max(self.waist_y) * (8.0 + 2.0 * (self.family.order() as f64).sqrt())
    }

    fn angular_points(&self) -> usize {
        64 + 8 * self.family.order() as usize
    }

    /// ∫∫ f(r, θ) r dr dθ over the annulus r0 < r < r1 with trapezoid in θ.
    fn polar_integral<F: Fn(f64, f64) -> f64>(&self, f: F, r0: f64, r1: f64) -> f64 {
        let nt = self.angular_points();
        let dt = TWO_PI / nt as f64;
        let (sins, coss): (Vec<f64>, Vec<f64>) = (0..nt).map(|k| (k as f64 * dt).sin_cos()).unzip();
        let ring = |r: f64| -> f64 {
            let s: f64 = sins.iter().zip(&coss).map(|(s, c)| f(r * c, r * s)).sum();
            s * dt * r
        };
        // Integrals that vanish by symmetry need an absolute floor.
        let scale = quad::composite(&|r: f64| ring(r).abs(), r0, r1, 8, &quad::gauss_legendre(8));
        quad::adaptive(ring, r0, r1, 1e-12, 1e-14 * scale)
    }

    /// ∫ w(r) ψ dA for a piecewise-constant radial weight.
    pub fn weighted_integral(&self, weight: &RadialWeight) -> f64 {
        if self.family.is_fundamental() && self.is_circular() {
            let w = self.waist_x;
            return weight.segments().map(|(a, b, v)| {
                v * (2.0 * PI).sqrt() * w * ((-a * a / (w * w)).exp() - (-b * b / (w * w)).exp())
            }).sum();
        }
        weight
            .segments()
            .map(|(a, b, v)| v * self.polar_integral(|x, y| self.value(x, y), a, b))
            .sum()
    }

    /// (∫ w ∂ψ/∂x dA, ∫ w ∂ψ/∂y dA) for a piecewise-constant radial weight,
    /// reduced to boundary integrals ∮ ψ n ds on each ring edge.
    pub fn weighted_gradient_integral(&self, weight: &RadialWeight) -> (f64, f64) {
        if self.family.is_fundamental() {
            // Even in x and y, so the odd derivatives integrate to zero.
            return (0.0, 0.0);
        }
        let nt = 4 * self.angular_points();
        let dt = TWO_PI / nt as f64;
        let edge = |r: f64| -> (f64, f64) {
            if r == 0.0 {
                return (0.0, 0.0);
            }
            (0..nt).fold((0.0, 0.0), |acc, k| {
                let (s, c) = (k as f64 * dt).sin_cos();
                let v = self.value(r * c, r * s) * r * dt;
                (acc.0 + v * c, acc.1 + v * s)
            })
        };
        weight.segments().fold((0.0, 0.0), |acc, (a, b, v)| {
            let (outer, inner) = (edge(b), edge(a));
            (acc.0 + v * (outer.0 - inner.0), acc.1 + v * (outer.1 - inner.1))
        })
    }

    /// ∫ ψ² dA over the disk r < R.
    pub fn power_inside(&self, radius: f64) -> f64 {
        1.0 - self.power_outside(radius)
    }

    /// ∫ ψ² dA over r > R (the clipped tail).
    pub fn power_outside(&self, radius: f64) -> f64 {
        if self.family.is_fundamental() && self.is_circular() {
            let w = self.waist_x;
            return (-2.0 * radius * radius / (w * w)).exp();
        }
        let r_max = radius.max(0.0) + self.extent();
        self.polar_integral(|x, y| self.value(x, y).powi(2), radius.max(0.0), r_max)
    }

    /// ⟨ψ, φ⟩ over the plane.
    pub fn overlap(&self, other: &Envelope) -> f64 {
        let r_max = self.extent().max(other.extent());
        self.polar_integral(|x, y| self.value(x, y) * other.value(x, y), 0.0, r_max)
    }

    /// Transverse angular-frequency stiffness ν² (rad²/s²) such that
    /// √(Ω² + ν²) sits `frequency_offset` above Ω at the reference frequency.
    pub fn transverse_omega_sq(&self) -> f64 {
        let w0 = TWO_PI * self.reference_frequency;
        let w1 = w0 + TWO_PI * self.frequency_offset;
        w1 * w1 - w0 * w0
    }
}

/// Piecewise-constant radial weight: value `v_k` on r_{k-1} ≤ r < r_k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialWeight {
    /// `(outer radius, value)` pairs with increasing radii; zero beyond the last.
    pub rings: Vec<(f64, f64)>,
}

impl RadialWeight {
    pub fn disk(radius: f64) -> Self {
        Self { rings: vec![(radius, 1.0)] }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.rings.iter().find(|(ro, _)| r < *ro).map_or(0.0, |(_, v)| *v)
    }

    /// `(inner, outer, value)` triples.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let mut inner = 0.0;
        self.rings.iter().map(move |&(outer, v)| {
            let s = (inner, outer, v);
            inner = outer;
            s
        })
    }

    /// ∫ w² dA.
    pub fn area_weighted(&self) -> f64 {
        self.segments().map(|(a, b, v)| v * v * PI * (b * b - a * a)).sum()
    }
}
