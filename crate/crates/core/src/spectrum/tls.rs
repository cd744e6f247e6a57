//! Closed forms for the emitter alone (no cavity coupling, no Fano overlap).

use num_complex::Complex64 as C64;

use super::kernels::{phi1, psi};
use super::{ChannelSelection, SpectrometerParams, Spectrogram};
use crate::error::Result;
use crate::grid::UniformGrid;
use crate::model::SystemParams;

/// Below this |w·t| the divided difference switches to its derivative limit.
const DIVIDED_DIFFERENCE_SEAM: f64 = 1e-6;

/// S₂₁(ν, t, Γs) for t ≥ 0:
///
/// (γ/π) Re[ Γs e^{−γt}/w · { (1 − e^{yt})/(−y) + (1 − e^{ct})/c } ]
///
/// with w = i(ν−ω21) − γ/2 − γ_ph + Γs/2, y = i(ν−ω21) + γ/2 − γ_ph − Γs/2
/// and c = γ − Γs. Both fractions are read as their limits where the
/// denominators vanish, and the bracket over w as a divided difference.
pub fn tls_trps_value(params: &SystemParams, gamma_s: f64, nu: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let g = params.gamma;
    let det = nu - params.omega_21;
    let w = C64::new(-0.5 * g - params.gamma_ph + 0.5 * gamma_s, det);
    let y = C64::new(0.5 * g - params.gamma_ph - 0.5 * gamma_s, det);
    let c = C64::new(g - gamma_s, 0.0);
    // E(x) = (e^{xt} − 1)/x, so the bracket is E(y) − E(c) and y − c = w.
    let ratio = if (w * t).norm() < DIVIDED_DIFFERENCE_SEAM {
        (psi(y * t) + psi(c * t)) * (0.5 * t * t)
    } else {
        (phi1(y * t) - phi1(c * t)) * t / w
    };
    g / std::f64::consts::PI * (ratio * gamma_s * (-g * t).exp()).re
}

/// Closed-form emitter spectrogram on `nu` × `t`.
pub fn tls_trps(
    params: &SystemParams,
    spectrometer: &SpectrometerParams,
    nu: &UniformGrid,
    t: &UniformGrid,
) -> Result<Spectrogram> {
    let gs = spectrometer.gamma_s;
    super::kernels::check_gamma_s(gs)?;
    let mut values = Vec::with_capacity(nu.len() * t.len());
    for tp in t.points() {
        for v in nu.points() {
            values.push(tls_trps_value(params, gs, v, tp));
        }
    }
    Ok(Spectrogram {
        nu: *nu,
        t: *t,
        values,
        params: *params,
        gamma_s: gs,
        channel: ChannelSelection::Tls,
        tail: None,
    })
}

/// ∫₀^∞ S₂₁ dt: a Lorentzian of half-width (γ + Γs)/2 + γ_ph centred at ω21.
pub fn tls_time_integrated(params: &SystemParams, gamma_s: f64, nu: f64) -> f64 {
    let h = 0.5 * (params.gamma + gamma_s) + params.gamma_ph;
    h / (std::f64::consts::PI * ((nu - params.omega_21).powi(2) + h * h))
}

/// ∫ S₂₁ dν = γΓs ∫₀ᵗ e^{−γs} e^{−Γs(t−s)} ds, independent of γ_ph.
pub fn tls_energy_integrated(params: &SystemParams, gamma_s: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let g = params.gamma;
    let rise = phi1(C64::new((gamma_s - g) * t, 0.0)).re;
    g * gamma_s * t * (-gamma_s * t).exp() * rise
}
