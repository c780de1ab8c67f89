//! Physical constants (CODATA 2018, exact where SI defines them).

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);
pub const EPSILON_0: f64 = 8.854_187_8128e-12;
pub const MU_0: f64 = 1.256_637_062_12e-6;

/// Reduced flux quantum Φ₀/2π.
pub const REDUCED_FLUX_QUANTUM: f64 = FLUX_QUANTUM / (2.0 * std::f64::consts::PI);

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
