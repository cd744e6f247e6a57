//! Unit conversion at the input/output boundary.
//!
//! Energies and rates are carried in µeV everywhere. Internally times are in
//! natural units (ħ = 1), i.e. µeV⁻¹; files and configs use picoseconds.

/// ħ in µeV·ps.
pub const HBAR_UEV_PS: f64 = 658.211_956_9;

/// Picoseconds to natural time units (µeV⁻¹).
#[inline]
pub fn ps_to_natural(t_ps: f64) -> f64 {
    t_ps / HBAR_UEV_PS
}

/// Natural time units (µeV⁻¹) to picoseconds.
#[inline]
pub fn natural_to_ps(t: f64) -> f64 {
    t * HBAR_UEV_PS
}

/// Period in ps of an oscillation with angular frequency `omega` (µeV).
#[inline]
pub fn period_ps(omega: f64) -> f64 {
    natural_to_ps(2.0 * std::f64::consts::PI / omega)
}
