//! One-sided Fourier probe F_φ(ν) = ∫₀^∞ cos(|g|τ + φ) e^{iντ − Γsτ/2} dτ.

use num_complex::Complex64 as C64;

use crate::grid::UniformGrid;
use crate::quad::{integrate_panels, QuadOptions};

/// F_φ over a ν grid and its intensity |F_φ|².
#[derive(Debug, Clone, PartialEq)]
pub struct FanoProbe {
    pub nu: UniformGrid,
    pub phi: f64,
    pub values: Vec<C64>,
    pub intensity: Vec<f64>,
}

impl FanoProbe {
    fn from_values(nu: &UniformGrid, phi: f64, values: Vec<C64>) -> Self {
        let intensity = values.iter().map(|v| v.norm_sqr()).collect();
        Self {
            nu: *nu,
            phi,
            values,
            intensity,
        }
    }
}

/// Adaptive quadrature of the definition, truncated where e^{−Γsτ/2} < 1e−18.
pub fn fano_probe(g_mag: f64, gamma_s: f64, phi: f64, nu: &UniformGrid) -> FanoProbe {
    let tau_max = 2.0 * 18.0 * std::f64::consts::LN_10 / gamma_s;
    let opts = QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_intervals: 2_000,
    };
    let values = nu
        .points()
        .iter()
        .map(|&v| {
            let periods = (v.abs() + g_mag) * tau_max / std::f64::consts::TAU;
            let panels = periods.ceil() as usize + 1;
            let f = |tau: f64| C64::new(-0.5 * gamma_s * tau, v * tau).exp() * (g_mag * tau + phi).cos();
            integrate_panels(f, 0.0, tau_max, panels, opts).value
        })
        .collect();
    FanoProbe::from_values(nu, phi, values)
}

/// ½[e^{iφ}/(Γs/2 − i(ν + |g|)) + e^{−iφ}/(Γs/2 − i(ν − |g|))], the integral
/// of the definition in closed form.
pub fn fano_probe_closed_form(g_mag: f64, gamma_s: f64, phi: f64, nu: &UniformGrid) -> FanoProbe {
    let values = nu
        .points()
        .iter()
        .map(|&v| {
            let up = C64::from_polar(0.5, phi) / C64::new(0.5 * gamma_s, -(v + g_mag));
            let down = C64::from_polar(0.5, -phi) / C64::new(0.5 * gamma_s, -(v - g_mag));
            up + down
        })
        .collect();
    FanoProbe::from_values(nu, phi, values)
}

/// The printed two-Lorentzian form e^{iφ}Γs/((ν+|g|)² + Γs²) + e^{−iφ}Γs/((ν−|g|)² + Γs²),
/// kept for comparison with the definition.
pub fn fano_probe_printed(g_mag: f64, gamma_s: f64, phi: f64, nu: &UniformGrid) -> FanoProbe {
    let values = nu
        .points()
        .iter()
        .map(|&v| {
            let l = |x: f64| gamma_s / (x * x + gamma_s * gamma_s);
            C64::from_polar(l(v + g_mag), phi) + C64::from_polar(l(v - g_mag), -phi)
        })
        .collect();
    FanoProbe::from_values(nu, phi, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_matches_closed_form() {
        let nu = UniformGrid::linspace(-400.0, 400.0, 41).unwrap();
        for (gs, phi) in [(5.0, 0.0), (150.0, -0.7), (500.0, 2.0)] {
            let a = fano_probe(100.0, gs, phi, &nu);
            let b = fano_probe_closed_form(100.0, gs, phi, &nu);
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).norm() < 1e-10, "{gs} {phi}: {x} {y}");
            }
        }
    }

    #[test]
    fn printed_form_differs() {
        let nu = UniformGrid::linspace(-400.0, 400.0, 41).unwrap();
        let a = fano_probe_closed_form(100.0, 150.0, 0.0, &nu);
        let b = fano_probe_printed(100.0, 150.0, 0.0, &nu);
        let worst = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(worst > 1e-3);
    }
}
