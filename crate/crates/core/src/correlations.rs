//! Regression coefficients C_{μ′,i}(τ) and causal two-time correlations.
//!
//! With O_σ = σ−, O_a = a and the basis A₁ = σ−, A₂ = a, the Heisenberg
//! evolution of O_{μ′} stays in span{A₁, A₂}:
//! O_{μ′}(τ) = Σ_i C_{μ′,i}(τ) A_i. Every coefficient is a sum of terms
//! amp·τ^power·e^{pole·τ} over the two rate eigenvalues γ±.

use std::io::{self, Write};

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::export::sci;
use crate::grid::UniformGrid;
use crate::model::{
    build_liouvillian, vectorize, Channel, ExpectationTrajectory, ModelOptions, Operators,
    SystemParams,
};
use crate::units::natural_to_ps;

/// Gap |γ+ − γ−| (µeV) below which the closed forms switch to their limit.
pub const DEGENERACY_GAP: f64 = 1e-12;

/// Decay poles γ± of the single-excitation coherences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEigenvalues {
    pub gamma_plus: C64,
    pub gamma_minus: C64,
}

impl RateEigenvalues {
    pub fn gap(&self) -> C64 {
        self.gamma_plus - self.gamma_minus
    }

    pub fn is_degenerate(&self) -> bool {
        self.gap().norm() < DEGENERACY_GAP
    }

    /// |Im(γ+ − γ−)|, the doublet splitting.
    pub fn splitting(&self) -> f64 {
        self.gap().im.abs()
    }
}

/// γ± = −½(Γ_tot + i(ω21 + ωc)) ± ½√(((κ−γ)/2 − γ_ph + iω_{c,21})² − 4g₊*g₋),
/// principal branch of the square root.
pub fn rate_eigenvalues(params: &SystemParams) -> RateEigenvalues {
    let centre = -0.5 * C64::new(params.gamma_tot(), params.omega_21 + params.omega_c);
    let d = C64::new(
        0.5 * (params.kappa - params.gamma) - params.gamma_ph,
        params.omega_c21(),
    );
    let root = 0.5 * (d * d - 4.0 * params.g_plus().conj() * params.g_minus()).sqrt();
    RateEigenvalues {
        gamma_plus: centre + root,
        gamma_minus: centre - root,
    }
}

/// One term amp·τ^power·e^{pole·τ}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleTerm {
    pub pole: C64,
    pub amp: C64,
    pub power: u8,
}

/// A finite sum of [`PoleTerm`]s.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PoleSeries {
    pub terms: Vec<PoleTerm>,
}

impl PoleSeries {
    pub fn eval(&self, tau: f64) -> C64 {
        self.terms
            .iter()
            .map(|t| {
                let e = (t.pole * tau).exp() * t.amp;
                if t.power == 0 {
                    e
                } else {
                    e * tau
                }
            })
            .sum()
    }

    /// ((γ+ + c)e^{γ+τ} − (γ− + c)e^{γ−τ})/(γ+ − γ−), or its limit
    /// (1 + (γ + c)τ)e^{γτ} when γ+ = γ−.
    fn diagonal(rates: &RateEigenvalues, c: C64) -> Self {
        let (gp, gm) = (rates.gamma_plus, rates.gamma_minus);
        if rates.is_degenerate() {
            let g0 = 0.5 * (gp + gm);
            return Self {
                terms: vec![
                    PoleTerm { pole: g0, amp: C64::new(1.0, 0.0), power: 0 },
                    PoleTerm { pole: g0, amp: g0 + c, power: 1 },
                ],
            };
        }
        let inv = 1.0 / (gp - gm);
        Self {
            terms: vec![
                PoleTerm { pole: gp, amp: (gp + c) * inv, power: 0 },
                PoleTerm { pole: gm, amp: -(gm + c) * inv, power: 0 },
            ],
        }
    }

    /// x(e^{γ+τ} − e^{γ−τ})/(γ+ − γ−), or its limit xτe^{γτ} when γ+ = γ−.
    fn off_diagonal(rates: &RateEigenvalues, x: C64) -> Self {
        let (gp, gm) = (rates.gamma_plus, rates.gamma_minus);
        if rates.is_degenerate() {
            let g0 = 0.5 * (gp + gm);
            return Self {
                terms: vec![PoleTerm { pole: g0, amp: x, power: 1 }],
            };
        }
        let inv = 1.0 / (gp - gm);
        Self {
            terms: vec![
                PoleTerm { pole: gp, amp: x * inv, power: 0 },
                PoleTerm { pole: gm, amp: -x * inv, power: 0 },
            ],
        }
    }
}

/// The four closed-form coefficients, indexed `[μ′][i]` by [`Channel`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub rates: RateEigenvalues,
    pub series: [[PoleSeries; 2]; 2],
}

impl CoefficientSet {
    /// Closed forms; rejects degenerate rates.
    pub fn strict(params: &SystemParams) -> Result<Self> {
        let rates = rate_eigenvalues(params);
        if rates.is_degenerate() {
            return Err(Error::DegenerateRates {
                gap: rates.gap().norm(),
            });
        }
        Ok(Self::build(params, rates))
    }

    /// Closed forms, falling back to the analytic limit at γ+ = γ−.
    pub fn new(params: &SystemParams) -> Self {
        Self::build(params, rate_eigenvalues(params))
    }

    fn build(params: &SystemParams, rates: RateEigenvalues) -> Self {
        let cav = C64::new(0.5 * params.kappa, params.omega_c);
        let tls = C64::new(0.5 * params.gamma + params.gamma_ph, params.omega_21);
        let mi = C64::new(0.0, -1.0);
        let c_s1 = PoleSeries::diagonal(&rates, cav);
        let c_a2 = PoleSeries::diagonal(&rates, tls);
        let c_s2 = PoleSeries::off_diagonal(&rates, mi * params.g_minus());
        let c_a1 = PoleSeries::off_diagonal(&rates, mi * params.g_plus().conj());
        Self {
            rates,
            series: [[c_s1, c_s2], [c_a1, c_a2]],
        }
    }

    /// C_{μ′,i}(τ).
    pub fn eval(&self, mu_prime: Channel, i: Channel, tau: f64) -> C64 {
        self.series[mu_prime.index()][i.index()].eval(tau)
    }

    /// (C_{σ,1}, C_{a,2}, C_{σ,2}, C_{a,1}) at τ.
    pub fn sample(&self, tau: f64) -> CoefficientSample {
        CoefficientSample {
            sigma_1: self.eval(Channel::Sigma, Channel::Sigma, tau),
            a_2: self.eval(Channel::Cavity, Channel::Cavity, tau),
            sigma_2: self.eval(Channel::Sigma, Channel::Cavity, tau),
            a_1: self.eval(Channel::Cavity, Channel::Sigma, tau),
        }
    }
}

/// The four coefficients at one lag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSample {
    pub sigma_1: C64,
    pub a_2: C64,
    pub sigma_2: C64,
    pub a_1: C64,
}

impl CoefficientSample {
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            self.sigma_1 - other.sigma_1,
            self.a_2 - other.a_2,
            self.sigma_2 - other.sigma_2,
            self.a_1 - other.a_1,
        ]
        .iter()
        .map(|d| d.norm())
        .fold(0.0, f64::max)
    }
}

/// Coefficients read off the superoperator exponential e^{L†τ} applied to σ+
/// and a†: the σ+ weight is ⟨e,0|X|g,0⟩, the a† weight ⟨g,1|X|g,0⟩, and
/// C is their complex conjugate since X = (e^{L†τ}O_{μ′})†.
pub fn coefficient_oracle(
    params: &SystemParams,
    options: ModelOptions,
    taus: &UniformGrid,
) -> Result<Vec<CoefficientSample>> {
    let lv = build_liouvillian(params, options)?;
    let ops = Operators::new(options.truncation);
    let t = options.truncation;
    let d = t.dim();
    let g0 = t.index(false, 0).unwrap();
    let e0 = t.index(true, 0).unwrap();
    let g1 = t.index(false, 1).unwrap();
    let at = |v: &DVector<C64>, row: usize, col: usize| v[row + col * d];

    let step = lv.adjoint_step_propagator(taus.step());
    let first = lv.adjoint_step_propagator(taus.start());
    let mut xs = first.clone() * vectorize(&ops.sigma_plus);
    let mut xa = first * vectorize(&ops.a_dag);
    let mut out = Vec::with_capacity(taus.len());
    for k in 0..taus.len() {
        if k > 0 {
            xs = &step * &xs;
            xa = &step * &xa;
        }
        out.push(CoefficientSample {
            sigma_1: at(&xs, e0, g0).conj(),
            sigma_2: at(&xs, g1, g0).conj(),
            a_1: at(&xa, e0, g0).conj(),
            a_2: at(&xa, g1, g0).conj(),
        });
    }
    Ok(out)
}

/// Eigenvalues of the generator restricted to the coherences
/// {|e,0⟩⟨g,0|, |g,1⟩⟨g,0|}, read off the Liouvillian matrix.
///
/// For a generator that keeps this block closed they coincide with γ±.
pub fn coherence_block_eigenvalues(params: &SystemParams, options: ModelOptions) -> Result<[C64; 2]> {
    let lv = build_liouvillian(params, options)?;
    let t = options.truncation;
    let d = t.dim();
    let g0 = t.index(false, 0).unwrap();
    let idx = [
        t.index(true, 0).unwrap() + g0 * d,
        t.index(false, 1).unwrap() + g0 * d,
    ];
    let m = |r: usize, c: usize| lv.l[(idx[r], idx[c])];
    let tr = m(0, 0) + m(1, 1);
    let det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    let root = (tr * tr * 0.25 - det).sqrt();
    Ok([tr * 0.5 + root, tr * 0.5 - root])
}

/// Signed-lag correlation ⟨O†_μ(s+τ′) O_{μ′}(s)⟩ at fixed s.
///
/// τ′ ≥ 0 looks into the future of the emission time s; −s ≤ τ′ < 0 is the
/// causal window seen by a spectrometer at time s; earlier lags vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTrace {
    pub mu: Channel,
    pub mu_prime: Channel,
    /// Natural units (µeV⁻¹).
    pub s: f64,
    /// Natural units (µeV⁻¹).
    pub tau_prime: Vec<f64>,
    pub values: Vec<C64>,
    pub window_mask: Vec<bool>,
}

impl CorrelationTrace {
    /// CSV with columns `tau_prime_ps, re, im, in_causal_window`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "tau_prime_ps,re,im,in_causal_window")?;
        for ((tp, v), m) in self.tau_prime.iter().zip(&self.values).zip(&self.window_mask) {
            writeln!(
                w,
                "{},{},{},{}",
                sci(natural_to_ps(*tp)),
                sci(v.re),
                sci(v.im),
                u8::from(*m)
            )?;
        }
        Ok(())
    }
}

fn check_s(traj: &ExpectationTrajectory, s: f64) -> Result<()> {
    let end = traj.grid.end();
    if !(s >= 0.0) || s > end * (1.0 + 1e-12) {
        return Err(Error::OutOfTrajectory { t: s, end });
    }
    Ok(())
}

/// ⟨O†_μ(s−τ) O_{μ′}(s)⟩ = Σ_i C_{μ′,i}(τ)⟨O†_μ A_i⟩_{s−τ} for τ ≥ 0, zero for τ > s.
///
/// Off-grid trajectory times are interpolated linearly.
pub fn past_value(
    coeffs: &CoefficientSet,
    traj: &ExpectationTrajectory,
    mu: Channel,
    mu_prime: Channel,
    s: f64,
    tau: f64,
) -> Result<C64> {
    if tau > s {
        return Ok(C64::new(0.0, 0.0));
    }
    let at = (s - tau).max(0.0);
    let mut acc = C64::new(0.0, 0.0);
    for i in Channel::BOTH {
        acc += coeffs.eval(mu_prime, i, tau) * traj.pair_at(mu, i, at)?;
    }
    Ok(acc)
}

/// ⟨O†_μ(s+τ) O_{μ′}(s)⟩ = conj(Σ_i C_{μ,i}(τ)⟨O†_{μ′} A_i⟩_s) for τ ≥ 0.
pub fn future_value(
    coeffs: &CoefficientSet,
    traj: &ExpectationTrajectory,
    mu: Channel,
    mu_prime: Channel,
    s: f64,
    tau: f64,
) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for i in Channel::BOTH {
        acc += coeffs.eval(mu, i, tau) * traj.pair_at(mu_prime, i, s)?;
    }
    Ok(acc.conj())
}

/// Trace over the lags τ′ = −τ for τ in `taus` (each ≥ 0).
pub fn correlation_past(
    coeffs: &CoefficientSet,
    traj: &ExpectationTrajectory,
    mu: Channel,
    mu_prime: Channel,
    s: f64,
    taus: &[f64],
) -> Result<CorrelationTrace> {
    let signed: Vec<f64> = taus.iter().map(|t| -t).collect();
    correlation_trace(coeffs, traj, mu, mu_prime, s, &signed)
}

/// Trace over the lags τ′ = τ for τ in `taus` (each ≥ 0).
pub fn correlation_future(
    coeffs: &CoefficientSet,
    traj: &ExpectationTrajectory,
    mu: Channel,
    mu_prime: Channel,
    s: f64,
    taus: &[f64],
) -> Result<CorrelationTrace> {
    if let Some(t) = taus.iter().find(|t| **t < 0.0) {
        return Err(Error::InvalidGrid(format!("negative future lag {t}")));
    }
    correlation_trace(coeffs, traj, mu, mu_prime, s, taus)
}

/// Trace over arbitrary signed lags.
pub fn correlation_trace(
    coeffs: &CoefficientSet,
    traj: &ExpectationTrajectory,
    mu: Channel,
    mu_prime: Channel,
    s: f64,
    tau_prime: &[f64],
) -> Result<CorrelationTrace> {
    check_s(traj, s)?;
    let mut values = Vec::with_capacity(tau_prime.len());
    let mut window_mask = Vec::with_capacity(tau_prime.len());
    for &tp in tau_prime {
        let v = if tp >= 0.0 {
            future_value(coeffs, traj, mu, mu_prime, s, tp)?
        } else {
            past_value(coeffs, traj, mu, mu_prime, s, -tp)?
        };
        values.push(v);
        window_mask.push(-s < tp && tp < 0.0);
    }
    Ok(CorrelationTrace {
        mu,
        mu_prime,
        s,
        tau_prime: tau_prime.to_vec(),
        values,
        window_mask,
    })
}

/// Largest lag step that still resolves both the oscillation and the decay:
/// min(0.02·2π/|Im(γ+−γ−)|, 0.1/max(Γ_tot, Γs)); a zero splitting imposes
/// no oscillation bound.
pub fn max_lag_step(params: &SystemParams, gamma_s: f64) -> f64 {
    let rates = rate_eigenvalues(params);
    let decay = 0.1 / params.gamma_tot().max(gamma_s);
    let split = rates.splitting();
    if split > 0.0 {
        decay.min(0.02 * std::f64::consts::TAU / split)
    } else {
        decay
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FanoOrdering, Truncation};
    use proptest::prelude::*;

    fn fig1() -> SystemParams {
        SystemParams {
            g_mag: 100.0,
            kappa: 50.0,
            gamma: 0.05,
            ..Default::default()
        }
    }

    fn fig3() -> SystemParams {
        SystemParams {
            g_mag: 1.0,
            kappa: 50.0,
            gamma: 0.05,
            gamma_ph: 30.0,
            eta: 1.0,
            theta: std::f64::consts::FRAC_PI_2,
            omega_21: -70.0,
            ..Default::default()
        }
    }

    fn close_set(a: [C64; 2], b: [C64; 2], tol: f64) -> bool {
        let direct = (a[0] - b[0]).norm().max((a[1] - b[1]).norm());
        let swapped = (a[0] - b[1]).norm().max((a[1] - b[0]).norm());
        direct.min(swapped) < tol
    }

    #[test]
    fn fig1_rates() {
        let r = rate_eigenvalues(&fig1());
        let half = (100.0f64.powi(2) - (24.975f64 / 2.0).powi(2)).sqrt();
        assert!((r.gamma_plus - C64::new(-12.5125, half)).norm() < 1e-9);
        assert!((r.gamma_minus - C64::new(-12.5125, -half)).norm() < 1e-9);
        assert!((half - 99.217_25).abs() < 1e-4);
    }

    #[test]
    fn decoupled_rates_are_bare_poles() {
        let p = SystemParams {
            kappa: 30.0,
            gamma: 4.0,
            gamma_ph: 2.0,
            omega_21: 7.0,
            omega_c: -3.0,
            ..Default::default()
        };
        let r = rate_eigenvalues(&p);
        let bare = [C64::new(-15.0, 3.0), C64::new(-4.0, -7.0)];
        assert!(close_set([r.gamma_plus, r.gamma_minus], bare, 1e-12));
    }

    #[test]
    fn block_eigenvalues_match_for_default_ordering() {
        for p in [fig1(), fig3()] {
            let r = rate_eigenvalues(&p);
            let b = coherence_block_eigenvalues(&p, ModelOptions::default()).unwrap();
            let scale = r.gamma_plus.norm().max(r.gamma_minus.norm());
            assert!(close_set([r.gamma_plus, r.gamma_minus], b, 1e-9 * scale));
        }
    }

    #[test]
    fn literal_fano_ordering_misses_the_closed_form() {
        let p = fig3();
        let opts = ModelOptions {
            fano_ordering: FanoOrdering::AsWritten,
            ..Default::default()
        };
        let taus = UniformGrid::linspace(0.0, 0.2, 50).unwrap();
        let oracle = coefficient_oracle(&p, opts, &taus).unwrap();
        let c = CoefficientSet::new(&p);
        let worst = taus
            .points()
            .iter()
            .zip(&oracle)
            .map(|(t, o)| c.sample(*t).max_abs_diff(o))
            .fold(0.0, f64::max);
        assert!(worst > 1e-3, "literal ordering unexpectedly matches: {worst}");
    }

    #[test]
    fn closed_form_matches_oracle() {
        for p in [fig1(), fig3()] {
            let c = CoefficientSet::strict(&p).unwrap();
            let taus = UniformGrid::linspace(0.0, 0.4, 200).unwrap();
            for trunc in [Truncation::OnePhoton, Truncation::TwoPhoton] {
                let opts = ModelOptions {
                    truncation: trunc,
                    ..Default::default()
                };
                let oracle = coefficient_oracle(&p, opts, &taus).unwrap();
                for (t, o) in taus.points().iter().zip(&oracle) {
                    let d = c.sample(*t).max_abs_diff(o);
                    assert!(d < 1e-8, "τ = {t}: {d}");
                }
            }
        }
    }

    #[test]
    fn initial_values() {
        let s = CoefficientSet::new(&fig3()).sample(0.0);
        assert!((s.sigma_1 - 1.0).norm() < 1e-12);
        assert!((s.a_2 - 1.0).norm() < 1e-12);
        assert!(s.sigma_2.norm() < 1e-12 && s.a_1.norm() < 1e-12);
    }

    #[test]
    fn strict_rejects_degenerate() {
        // g = 0, γ = κ, resonance: both poles at −γ/2.
        let p = SystemParams {
            kappa: 10.0,
            gamma: 10.0,
            ..Default::default()
        };
        assert!(matches!(
            CoefficientSet::strict(&p),
            Err(Error::DegenerateRates { .. })
        ));
    }

    #[test]
    fn degenerate_limit_matches_oracle() {
        // Exceptional point: ((κ−γ)/2)² = 4|g|² on resonance.
        let p = SystemParams {
            g_mag: 5.0,
            kappa: 20.0,
            gamma: 0.0,
            ..Default::default()
        };
        let c = CoefficientSet::new(&p);
        assert!(c.rates.is_degenerate());
        let taus = UniformGrid::linspace(0.0, 0.5, 60).unwrap();
        let oracle = coefficient_oracle(&p, ModelOptions::default(), &taus).unwrap();
        for (t, o) in taus.points().iter().zip(&oracle) {
            assert!(c.sample(*t).max_abs_diff(o) < 1e-9);
        }
    }

    #[test]
    fn near_degenerate_is_continuous() {
        let p = SystemParams {
            g_mag: 5.0,
            kappa: 20.0,
            ..Default::default()
        };
        let q = SystemParams { g_mag: 5.0 + 1e-7, ..p };
        let (a, b) = (CoefficientSet::new(&p), CoefficientSet::new(&q));
        for t in [0.01, 0.1, 0.3] {
            assert!(a.sample(t).max_abs_diff(&b.sample(t)) < 1e-5);
        }
    }

    #[test]
    fn decoupled_cross_terms_vanish() {
        let p = SystemParams {
            kappa: 30.0,
            gamma: 4.0,
            gamma_ph: 1.0,
            ..Default::default()
        };
        let c = CoefficientSet::new(&p);
        for t in [0.0, 0.05, 0.5] {
            let s = c.sample(t);
            assert_eq!(s.sigma_2, C64::new(0.0, 0.0));
            assert_eq!(s.a_1, C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn single_pole_limit() {
        let p = SystemParams {
            gamma: 50.0,
            gamma_ph: 30.0,
            omega_21: 12.0,
            ..Default::default()
        };
        let c = CoefficientSet::new(&p);
        let tau = 1.0 / 55.0;
        let expect = (C64::new(-25.0 - 30.0, -12.0) * tau).exp();
        assert!((c.eval(Channel::Sigma, Channel::Sigma, tau) - expect).norm() < 1e-14);
    }

    #[test]
    fn lag_step_rule() {
        let dt = max_lag_step(&fig1(), 5.0);
        let rates = rate_eigenvalues(&fig1());
        assert!((dt - 0.02 * std::f64::consts::TAU / rates.splitting()).abs() < 1e-15);
        let tls = SystemParams {
            gamma: 50.0,
            ..Default::default()
        };
        assert!((max_lag_step(&tls, 500.0) - 0.1 / 500.0).abs() < 1e-18);
    }

    fn arb_params() -> impl Strategy<Value = SystemParams> {
        (
            0.0..200.0f64,
            0.0..100.0f64,
            0.0..100.0f64,
            0.0..50.0f64,
            0.0..=1.0f64,
            -3.2..3.2f64,
            -100.0..100.0f64,
            -100.0..100.0f64,
        )
            .prop_map(|(g, k, ga, ph, eta, th, w21, wc)| SystemParams {
                g_mag: g,
                kappa: k,
                gamma: ga,
                gamma_ph: ph,
                eta,
                theta: th,
                omega_21: w21,
                omega_c: wc,
                ..Default::default()
            })
    }

    proptest! {
        #[test]
        fn sum_rule(p in arb_params()) {
            let r = rate_eigenvalues(&p);
            let expect = -C64::new(p.gamma_tot(), p.omega_21 + p.omega_c);
            let sum = r.gamma_plus + r.gamma_minus;
            prop_assert!((sum - expect).norm() <= 1e-10 * expect.norm().max(1.0));
        }

        #[test]
        fn modes_never_grow(p in arb_params()) {
            let r = rate_eigenvalues(&p);
            let tol = 1e-9 * r.gamma_plus.norm().max(1.0);
            prop_assert!(r.gamma_plus.re <= tol && r.gamma_minus.re <= tol);
        }

        // Both channels lossy and only partially overlapping: no dark mode.
        #[test]
        fn decaying_modes(p in arb_params()) {
            prop_assume!(p.kappa > 0.1 && p.gamma + 2.0 * p.gamma_ph > 0.1 && p.eta < 0.99);
            let r = rate_eigenvalues(&p);
            prop_assert!(r.gamma_plus.re < 0.0 && r.gamma_minus.re < 0.0);
        }

        #[test]
        fn coefficients_start_at_identity(p in arb_params()) {
            let s = CoefficientSet::new(&p).sample(0.0);
            prop_assert!((s.sigma_1 - 1.0).norm() < 1e-9);
            prop_assert!((s.a_2 - 1.0).norm() < 1e-9);
            prop_assert!(s.sigma_2.norm() < 1e-9 && s.a_1.norm() < 1e-9);
        }
    }
}
