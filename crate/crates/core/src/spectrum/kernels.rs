//! Spectral kernels 𝒞_{μ′,i}(ν, s″, Γs): the regression coefficients
//! integrated against the spectrometer filter.

use num_complex::Complex64 as C64;

use crate::correlations::{CoefficientSet, PoleTerm};
use crate::error::{Error, Result};
use crate::model::{Channel, SystemParams};
use crate::quad::{integrate, QuadOptions};

const SERIES_RADIUS: f64 = 0.5;

/// φ₁(z) = (e^z − 1)/z.
pub fn phi1(z: C64) -> C64 {
    if z.norm() < SERIES_RADIUS {
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for n in 1..20 {
            term *= z / (n as f64 + 1.0);
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

/// ψ(z) = ∫₀¹ x e^{zx} dx = (e^z(z − 1) + 1)/z².
pub fn psi(z: C64) -> C64 {
    if z.norm() < SERIES_RADIUS {
        // Σ zⁿ / (n!(n + 2))
        let mut fact = C64::new(1.0, 0.0);
        let mut sum = C64::new(0.5, 0.0);
        for n in 1..20 {
            fact *= z / n as f64;
            sum += fact / (n as f64 + 2.0);
        }
        sum
    } else {
        (z.exp() * (z - 1.0) + 1.0) / (z * z)
    }
}

/// E₁(ix) for real x > 0, i.e. −Ci(x) + i(Si(x) − π/2).
pub fn e1_imaginary(x: f64) -> C64 {
    const EULER: f64 = 0.577_215_664_901_532_9;
    if x < 2.0 {
        // Power series of Si and Ci.
        let (mut si, mut ci) = (0.0, 0.0);
        let mut term = 1.0;
        for k in 1..40 {
            term *= x / k as f64;
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if k % 2 == 1 {
                si += sign * term / k as f64;
            } else {
                ci += sign * term / k as f64;
            }
            if term < 1e-17 {
                break;
            }
        }
        ci += EULER + x.ln();
        C64::new(-ci, si - std::f64::consts::FRAC_PI_2)
    } else {
        // Continued fraction of e^{z}E₁(z), z = ix, by the modified Lentz method.
        let tiny = 1e-300;
        let mut b = C64::new(1.0, x);
        let mut c = C64::new(1.0 / tiny, 0.0);
        let mut d = b.inv();
        let mut h = d;
        for i in 1..200 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = (d * a + b).inv();
            c = b + c.inv() * a;
            let del = c * d;
            h *= del;
            if (del - 1.0).norm() < 1e-16 {
                break;
            }
        }
        h * C64::new(0.0, -x).exp()
    }
}

/// ∫_N^∞ e^{iνt}/ν² dν for N > 0 and t ≥ 0.
pub fn inverse_square_tail(n: f64, t: f64) -> C64 {
    let lead = C64::new(0.0, n * t).exp() / n;
    if t == 0.0 {
        return lead;
    }
    lead + C64::new(0.0, t) * e1_imaginary(n * t).conj()
}

/// ∫_N^∞ e^{iνt}/ν³ dν for N > 0 and t ≥ 0.
pub fn inverse_cube_tail(n: f64, t: f64) -> C64 {
    C64::new(0.0, n * t).exp() / (2.0 * n * n) + C64::new(0.0, 0.5 * t) * inverse_square_tail(n, t)
}

/// Γs·∫₀^{s″} τ^power e^{pτ} e^{(iν+Γs/2)τ − Γs s″} dτ for one pole term.
///
/// For power 0 this is the primitive 𝒞_p = Γs(e^{(iν+p−Γs/2)s″} − e^{−Γs s″})/(iν + p + Γs/2),
/// evaluated without cancellation when the denominator is small.
pub fn pole_kernel(pole: C64, power: u8, nu: f64, s: f64, gamma_s: f64) -> C64 {
    let alpha = C64::new(0.5 * gamma_s, nu) + pole;
    let lambda = alpha - gamma_s;
    let z = alpha * s;
    let small = z.norm() < SERIES_RADIUS;
    match power {
        0 if small => gamma_s * s * (-gamma_s * s).exp() * phi1(z),
        0 => gamma_s * ((lambda * s).exp() - (-gamma_s * s).exp()) / alpha,
        _ if small => gamma_s * s * s * (-gamma_s * s).exp() * psi(z),
        _ => gamma_s * ((lambda * s).exp() * (z - 1.0) + (-gamma_s * s).exp()) / (alpha * alpha),
    }
}

/// The four kernels built from the closed-form coefficient set.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralKernelSet {
    pub coefficients: CoefficientSet,
    pub gamma_s: f64,
}

impl SpectralKernelSet {
    /// Rejects degenerate rates, like [`CoefficientSet::strict`].
    pub fn strict(params: &SystemParams, gamma_s: f64) -> Result<Self> {
        check_gamma_s(gamma_s)?;
        Ok(Self {
            coefficients: CoefficientSet::strict(params)?,
            gamma_s,
        })
    }

    /// Uses the degenerate limit where needed.
    pub fn new(params: &SystemParams, gamma_s: f64) -> Result<Self> {
        check_gamma_s(gamma_s)?;
        Ok(Self {
            coefficients: CoefficientSet::new(params),
            gamma_s,
        })
    }

    /// 𝒞_{μ′,i}(ν, s″, Γs).
    pub fn eval(&self, mu_prime: Channel, i: Channel, nu: f64, s: f64) -> C64 {
        self.coefficients.series[mu_prime.index()][i.index()]
            .terms
            .iter()
            .map(|t: &PoleTerm| t.amp * pole_kernel(t.pole, t.power, nu, s, self.gamma_s))
            .sum()
    }

    /// 𝒞_± for the two rate eigenvalues, in that order.
    pub fn primitives(&self, nu: f64, s: f64) -> [C64; 2] {
        let r = self.coefficients.rates;
        [r.gamma_plus, r.gamma_minus].map(|p| pole_kernel(p, 0, nu, s, self.gamma_s))
    }
}

pub(crate) fn check_gamma_s(gamma_s: f64) -> Result<()> {
    if !(gamma_s.is_finite() && gamma_s > 0.0) {
        return Err(Error::InvalidParameter {
            name: "gamma_s",
            value: gamma_s,
            reason: "spectral resolution must be positive",
        });
    }
    Ok(())
}

/// 𝒞_{μ′,i}(ν, s″, Γs) by adaptive quadrature of its defining integral over
/// the closed-form coefficient, for cross-checking [`SpectralKernelSet`].
pub fn kernel_by_quadrature(
    coefficients: &CoefficientSet,
    mu_prime: Channel,
    i: Channel,
    nu: f64,
    s: f64,
    gamma_s: f64,
) -> C64 {
    let rate = C64::new(0.5 * gamma_s, nu);
    let f = |tau: f64| coefficients.eval(mu_prime, i, tau) * (rate * tau - gamma_s * s).exp();
    let opts = QuadOptions {
        abs_tol: 1e-300,
        rel_tol: 1e-13,
        max_intervals: 50_000,
    };
    integrate(f, 0.0, s, opts).value * gamma_s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_series_matches_closed_form_at_the_seam() {
        for z in [C64::new(0.49, 0.0), C64::new(0.0, 0.49), C64::new(-0.3, 0.39)] {
            let direct = (z.exp() - 1.0) / z;
            assert!((phi1(z) - direct).norm() < 1e-15);
            let direct = (z.exp() * (z - 1.0) + 1.0) / (z * z);
            assert!((psi(z) - direct).norm() < 1e-13);
        }
        assert_eq!(phi1(C64::new(0.0, 0.0)), C64::new(1.0, 0.0));
        assert_eq!(psi(C64::new(0.0, 0.0)), C64::new(0.5, 0.0));
    }

    #[test]
    fn sine_and_cosine_integrals() {
        // Reference values of Si and Ci.
        for (x, si, ci) in [
            (0.5, 0.493_107_418_043_066_7, -0.177_784_078_806_612_3),
            (1.0, 0.946_083_070_367_183_0, 0.337_403_922_900_968_1),
            (2.0, 1.605_412_976_802_694_8, 0.422_980_828_774_864_9),
            (10.0, 1.658_347_594_218_874, -0.045_456_433_004_455_37),
        ] {
            let e = e1_imaginary(x);
            assert!((e1_imaginary(2.0 - 1e-12) - e1_imaginary(2.0)).norm() < 1e-11);
            assert!((e.re + ci).abs() < 1e-12, "{x} {}", e.re);
            assert!((e.im - si + std::f64::consts::FRAC_PI_2).abs() < 1e-12, "{x} {}", e.im);
        }
    }

    #[test]
    fn inverse_square_tail_matches_quadrature() {
        for (n, t) in [(50.0, 0.0), (50.0, 0.001), (300.0, 0.05), (1000.0, 0.2)] {
            // ν = n/x maps the tail onto (0, 1]; the quadrature of the
            // oscillation piling up at x → 0 limits the agreement.
            let q = crate::quad::integrate_panels(
                |x: f64| if x == 0.0 { C64::new(0.0, 0.0) } else { C64::new(0.0, n * t / x).exp() / n },
                0.0,
                1.0,
                64,
                QuadOptions { abs_tol: 1e-13, rel_tol: 1e-11, max_intervals: 4000 },
            );
            let exact = inverse_square_tail(n, t);
            assert!((q.value - exact).norm() < 1e-4 / n, "{n} {t} {} {}", q.value, exact);
        }
    }

    #[test]
    fn cube_tail_is_consistent() {
        // d/dN of the tail is −e^{iNt}/N³.
        let (n, t, h) = (80.0, 0.03, 1e-4);
        let fd = (inverse_cube_tail(n + h, t) - inverse_cube_tail(n - h, t)) / (2.0 * h);
        let expect = -C64::new(0.0, n * t).exp() / (n * n * n);
        assert!((fd - expect).norm() < 1e-6 * expect.norm());
        assert!((inverse_cube_tail(n, 0.0) - 0.5 / (n * n)).norm() < 1e-18);
    }

    #[test]
    fn zero_window_vanishes() {
        let p = SystemParams {
            g_mag: 100.0,
            kappa: 50.0,
            gamma: 0.05,
            ..Default::default()
        };
        let k = SpectralKernelSet::strict(&p, 5.0).unwrap();
        for nu in [-300.0, 0.0, 99.0] {
            for c in k.primitives(nu, 0.0) {
                assert_eq!(c, C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn primitives_decay() {
        let p = SystemParams {
            g_mag: 100.0,
            kappa: 50.0,
            gamma: 0.05,
            ..Default::default()
        };
        let k = SpectralKernelSet::strict(&p, 5.0).unwrap();
        for c in k.primitives(10.0, 20.0) {
            assert!(c.norm() < 1e-40);
        }
    }

    #[test]
    fn vanishing_denominator_is_finite() {
        // Re p = −Γs/2 and ν = −Im p make iν + p + Γs/2 vanish.
        let pole = C64::new(-25.0, -3.0);
        let k = pole_kernel(pole, 0, 3.0, 0.1, 50.0);
        let expect = 50.0 * 0.1 * (-5.0f64).exp();
        assert!((k - expect).norm() < 1e-15);
    }

    #[test]
    fn power_one_matches_quadrature() {
        let pole = C64::new(-7.0, 40.0);
        for (nu, s) in [(-40.0, 0.3), (-39.99, 0.01), (100.0, 1.0)] {
            let q = integrate(
                |t| t * ((pole + C64::new(2.5, nu)) * t - 5.0 * s).exp() * 5.0,
                0.0,
                s,
                QuadOptions::default(),
            );
            let k = pole_kernel(pole, 1, nu, s, 5.0);
            assert!((k - q.value).norm() < 1e-12 * q.value.norm().max(1e-12));
        }
    }
}
