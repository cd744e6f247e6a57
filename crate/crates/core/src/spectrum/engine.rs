//! Spectrogram assembly.
//!
//! Per pole term p of the coefficients, the channel weights and amplitudes
//! fold the four expectation series into one source F_p(s′). Its
//! contribution Γs ∫₀ᵗ F_p(s′) k_p(t − s′) ds′ is the output of a small
//! linear system driven by F_p:
//!
//! K′ = −Γs K + F,  D′ = λD + K,  D₁′ = λD₁ + D,  λ = iν + p − Γs/2,
//!
//! with k = (e^{λu} − e^{−Γs u})/(λ + Γs) read from D and the τ·e^{pτ}
//! terms of the degenerate limit read from D₁. F is interpolated by cubic
//! Hermite polynomials from the exact values and derivatives on the
//! trajectory grid and each step is propagated exactly by the exponential
//! of the system augmented with a polynomial generator. No division by
//! λ + Γs occurs, so the kernel stays exact where it vanishes.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::kernels::{inverse_cube_tail, inverse_square_tail, SpectralKernelSet};
use super::{ChannelSelection, ChannelWeights, SpectrometerParams, Spectrogram};
use crate::correlations::{max_lag_step, CoefficientSet};
use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use crate::model::{Channel, ExpectationTrajectory, SystemParams};

/// Relative level below which the emitted intensity counts as decayed.
pub const HORIZON_THRESHOLD: f64 = 1e-6;

/// Minimum ν half-span, in units of the widest spectral scale, for the
/// energy-integration identity.
pub const ENERGY_SPAN_FACTOR: f64 = 6.0;

/// Refinement of the trajectory step below the sampling limit. The Hermite
/// interpolation error of a source decaying at rate r is about (rΔ)⁴/720,
/// 2e-6 at the limit itself.
pub const TRAJECTORY_REFINEMENT: f64 = 4.0;

/// Trajectory step used by default for a spectrometer of resolution Γs.
pub fn trajectory_step(params: &SystemParams, gamma_s: f64) -> f64 {
    max_lag_step(params, gamma_s) / TRAJECTORY_REFINEMENT
}

/// Interpolation of the sources between trajectory points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    /// Cubic Hermite from values and exact derivatives.
    #[default]
    Hermite,
    /// Piecewise linear; used when the trajectory carries no derivatives.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrpsOptions {
    pub channel: ChannelSelection,
    pub interpolation: Interpolation,
}

// State layout of the augmented step system.
const P: usize = 0;
const Q: usize = 1;
const R: usize = 2;
const XI: usize = 3;
const DIM: usize = 7;

/// exp of the scaled step generator for z = λΔ and z₂ = −ΓsΔ.
///
/// Scaled variables: R = K/Δ, Q = D/Δ², P = D₁/Δ³; the forcing enters R
/// through ξ₀ = a₀ + a₁u + a₂u²/2 + a₃u³/6 on u ∈ [0, 1].
fn step_exponential(z: C64, z2: f64) -> [[C64; DIM]; DIM] {
    let mut b = DMatrix::<C64>::zeros(DIM, DIM);
    let one = C64::new(1.0, 0.0);
    b[(P, P)] = z;
    b[(P, Q)] = one;
    b[(Q, Q)] = z;
    b[(Q, R)] = one;
    b[(R, R)] = C64::new(z2, 0.0);
    b[(R, XI)] = one;
    for j in 0..3 {
        b[(XI + j, XI + j + 1)] = one;
    }
    let e = b.exp();
    let mut out = [[C64::new(0.0, 0.0); DIM]; DIM];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = e[(r, c)];
        }
    }
    out
}

/// Forcing coefficients (a₀, a₁, a₂, a₃) of one step.
fn forcing(f0: C64, f1: C64, d0: C64, d1: C64) -> [C64; 4] {
    // f(u) = c₀ + c₁u + c₂u² + c₃u³ with d = Δ·f′
    let c2 = (f1 - f0) * 3.0 - d0 * 2.0 - d1;
    let c3 = (f0 - f1) * 2.0 + d0 + d1;
    [f0, d0, c2 * 2.0, c3 * 6.0]
}

/// One weighted source series F(s′) for a pole term.
struct SourceTerm {
    pole: C64,
    power: u8,
    /// F at each trajectory point.
    values: Vec<C64>,
    /// F′ at each trajectory point, empty under linear interpolation.
    rates: Vec<C64>,
    /// Per-step forcing coefficients.
    forcing: Vec<[C64; 4]>,
    /// ∫₀^{t_k} F ds′ at the last step, for the time-integrated spectrum.
    integral: C64,
}

fn step_forcings(values: &[C64], rates: Option<&[C64]>, dt: f64) -> Vec<[C64; 4]> {
    (0..values.len().saturating_sub(1))
        .map(|k| match rates {
            Some(r) => forcing(values[k], values[k + 1], r[k] * dt, r[k + 1] * dt),
            None => [values[k], values[k + 1] - values[k], C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
        })
        .collect()
}

/// Exact integral of the interpolant over the whole series.
fn series_integral(forcings: &[[C64; 4]], dt: f64) -> C64 {
    forcings
        .iter()
        .map(|a| (a[0] + a[1] / 2.0 + a[2] / 6.0 + a[3] / 24.0) * dt)
        .sum()
}

fn use_rates(traj: &ExpectationTrajectory, interpolation: Interpolation) -> bool {
    interpolation == Interpolation::Hermite && traj.has_rates()
}

fn source_terms(
    params: &SystemParams,
    coeffs: &CoefficientSet,
    traj: &ExpectationTrajectory,
    channel: ChannelSelection,
    len: usize,
    interpolation: Interpolation,
) -> Vec<SourceTerm> {
    let weights = ChannelWeights::new(params);
    let rates = use_rates(traj, interpolation);
    let mut keys: Vec<(C64, u8)> = Vec::new();
    let mut values: Vec<Vec<C64>> = Vec::new();
    let mut derivs: Vec<Vec<C64>> = Vec::new();
    for &(mu, mu_prime) in channel.pairs() {
        let chi = weights.get(mu, mu_prime);
        if chi == C64::new(0.0, 0.0) {
            continue;
        }
        for i in Channel::BOTH {
            for term in &coeffs.series[mu_prime.index()][i.index()].terms {
                let w = chi * term.amp;
                if w == C64::new(0.0, 0.0) {
                    continue;
                }
                let slot = match keys.iter().position(|k| *k == (term.pole, term.power)) {
                    Some(s) => s,
                    None => {
                        keys.push((term.pole, term.power));
                        values.push(vec![C64::new(0.0, 0.0); len]);
                        derivs.push(vec![C64::new(0.0, 0.0); if rates { len } else { 0 }]);
                        keys.len() - 1
                    }
                };
                for k in 0..len {
                    values[slot][k] += w * traj.pair(mu, i, k);
                }
                if rates {
                    for k in 0..len {
                        derivs[slot][k] += w * traj.pair_rate(mu, i, k).unwrap();
                    }
                }
            }
        }
    }
    let dt = traj.grid.step();
    keys.into_iter()
        .zip(values)
        .zip(derivs)
        .map(|(((pole, power), v), d)| {
            let forcing = step_forcings(&v, rates.then_some(&d[..]), dt);
            let integral = series_integral(&forcing, dt);
            SourceTerm {
                pole,
                power,
                values: v,
                rates: d,
                forcing,
                integral,
            }
        })
        .collect()
}

/// The filter state R = K/Δ along the whole series, K(0) = 0.
fn filter_chain(forcings: &[[C64; 4]], e: &[[C64; DIM]; DIM]) -> Vec<C64> {
    let mut r = Vec::with_capacity(forcings.len() + 1);
    let mut cur = C64::new(0.0, 0.0);
    r.push(cur);
    for a in forcings {
        cur = e[R][R] * cur + (0..4).map(|j| e[R][XI + j] * a[j]).sum::<C64>();
        r.push(cur);
    }
    r
}

fn check_sampling(params: &SystemParams, gamma_s: f64, dt: f64) -> Result<()> {
    let limit = max_lag_step(params, gamma_s);
    if dt > limit * (1.0 + 1e-9) {
        return Err(Error::TrajectoryTooCoarse { step: dt, limit });
    }
    Ok(())
}

fn t_indices(traj: &ExpectationTrajectory, t: &UniformGrid) -> Result<Vec<usize>> {
    t.points()
        .into_iter()
        .map(|tp| {
            if tp > traj.grid.end() + 1e-9 * traj.grid.step() {
                return Err(Error::OutOfTrajectory {
                    t: tp,
                    end: traj.grid.end(),
                });
            }
            traj.grid.index_of(tp).ok_or(Error::OffGrid {
                t: tp,
                step: traj.grid.step(),
            })
        })
        .collect()
}

/// True when the emitted intensity at index `k` is below the horizon threshold.
fn decayed_at(params: &SystemParams, traj: &ExpectationTrajectory, k: usize) -> bool {
    let src = traj.emission_source(params);
    let peak = src.iter().copied().fold(0.0, f64::max);
    params.max_emission_rate() * (traj.n_cav[k] + traj.n_tls[k]) <= HORIZON_THRESHOLD * peak
}

/// S(ν, t, Γs) on `nu` × `t`. Every t must be a point of the trajectory grid.
pub fn trps(
    params: &SystemParams,
    spectrometer: &SpectrometerParams,
    traj: &ExpectationTrajectory,
    nu: &UniformGrid,
    t: &UniformGrid,
    options: TrpsOptions,
) -> Result<Spectrogram> {
    let gs = spectrometer.gamma_s;
    super::kernels::check_gamma_s(gs)?;
    let dt = traj.grid.step();
    check_sampling(params, gs, dt)?;
    if traj.grid.start() != 0.0 {
        return Err(Error::InvalidGrid("trajectory must start at t = 0".into()));
    }
    let idx = t_indices(traj, t)?;
    let last = idx.iter().copied().max().unwrap_or(0);
    let coeffs = CoefficientSet::new(params);
    let terms = source_terms(params, &coeffs, traj, options.channel, last + 1, options.interpolation);
    let base = step_exponential(C64::new(0.0, 0.0), -gs * dt);
    let chains: Vec<Vec<C64>> = terms.iter().map(|s| filter_chain(&s.forcing, &base)).collect();
    let mut poles: Vec<C64> = Vec::new();
    for s in &terms {
        if !poles.contains(&s.pole) {
            poles.push(s.pole);
        }
    }
    let closed_tail = decayed_at(params, traj, last);

    let columns: Vec<(Vec<f64>, f64)> = nu
        .points()
        .par_iter()
        .map(|&v| {
            let exps: Vec<(C64, [[C64; DIM]; DIM])> = poles
                .iter()
                .map(|&p| (p, step_exponential((C64::new(-0.5 * gs, v) + p) * dt, -gs * dt)))
                .collect();
            let mut column = vec![0.0; idx.len()];
            let mut tail = 0.0;
            for (term, chain) in terms.iter().zip(&chains) {
                let e = &exps.iter().find(|(p, _)| *p == term.pole).unwrap().1;
                let lambda = C64::new(-0.5 * gs, v) + term.pole;
                let (mut q, mut p) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
                let mut history = vec![C64::new(0.0, 0.0); last + 1];
                for k in 0..last {
                    let a = &term.forcing[k];
                    let r = chain[k];
                    let fq: C64 = (0..4).map(|j| e[Q][XI + j] * a[j]).sum();
                    let q_next = e[Q][Q] * q + e[Q][R] * r + fq;
                    if term.power > 0 {
                        let fp: C64 = (0..4).map(|j| e[P][XI + j] * a[j]).sum();
                        p = e[P][P] * p + e[P][Q] * q + e[P][R] * r + fp;
                        history[k + 1] = p * dt.powi(3);
                    } else {
                        history[k + 1] = q_next * dt * dt;
                    }
                    q = q_next;
                }
                for (slot, &k) in column.iter_mut().zip(&idx) {
                    *slot += (history[k] * gs).re;
                }
                // ∫ D dt = −(D + K/Γs)/λ and ∫ D₁ dt = −(D₁ + ∫D)/λ with no
                // further emission.
                let d = q * dt * dt;
                let k_end = chain[last] * dt;
                let int_d = -(d + k_end / gs) / lambda;
                let int = if term.power > 0 {
                    -(p * dt.powi(3) + int_d) / lambda
                } else {
                    int_d
                };
                tail += (int * gs).re;
            }
            (column, tail)
        })
        .collect();

    let n_nu = nu.len();
    let mut values = vec![0.0; n_nu * idx.len()];
    for (inu, (column, _)) in columns.iter().enumerate() {
        for (it, v) in column.iter().enumerate() {
            values[it * n_nu + inu] = *v;
        }
    }
    let tail = closed_tail.then(|| columns.iter().map(|c| c.1).collect());
    Ok(Spectrogram {
        nu: *nu,
        t: *t,
        values,
        params: *params,
        gamma_s: gs,
        channel: options.channel,
        tail,
    })
}

/// S(ν, t, Γs) by the trapezoidal rule in s′ over the closed-form kernels.
///
/// Quadratic in the number of time steps; meant as a cross-check of [`trps`].
pub fn trps_direct(
    params: &SystemParams,
    spectrometer: &SpectrometerParams,
    traj: &ExpectationTrajectory,
    nu: &UniformGrid,
    t: &UniformGrid,
    channel: ChannelSelection,
) -> Result<Spectrogram> {
    let gs = spectrometer.gamma_s;
    let dt = traj.grid.step();
    check_sampling(params, gs, dt)?;
    let idx = t_indices(traj, t)?;
    let kernels = SpectralKernelSet::new(params, gs)?;
    let weights = ChannelWeights::new(params);
    let n_nu = nu.len();
    let columns: Vec<Vec<f64>> = nu
        .points()
        .par_iter()
        .map(|&v| {
            idx.iter()
                .map(|&n| {
                    let tn = n as f64 * dt;
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..=n {
                        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                        let s = tn - k as f64 * dt;
                        for &(mu, mu_prime) in channel.pairs() {
                            let chi = weights.get(mu, mu_prime);
                            for i in Channel::BOTH {
                                acc += chi
                                    * traj.pair(mu, i, k)
                                    * kernels.eval(mu_prime, i, v, s)
                                    * w;
                            }
                        }
                    }
                    (acc * dt).re
                })
                .collect()
        })
        .collect();
    let mut values = vec![0.0; n_nu * idx.len()];
    for (inu, column) in columns.iter().enumerate() {
        for (it, v) in column.iter().enumerate() {
            values[it * n_nu + inu] = *v;
        }
    }
    Ok(Spectrogram {
        nu: *nu,
        t: *t,
        values,
        params: *params,
        gamma_s: gs,
        channel,
        tail: None,
    })
}

fn require_decayed(params: &SystemParams, traj: &ExpectationTrajectory) -> Result<()> {
    let last = traj.len() - 1;
    if !decayed_at(params, traj, last) {
        let src = traj.emission_source(params);
        let peak = src.iter().copied().fold(0.0, f64::max);
        let bound = params.max_emission_rate() * (traj.n_cav[last] + traj.n_tls[last]);
        return Err(Error::NotConverged {
            tail: bound / peak.max(f64::MIN_POSITIVE),
            limit: HORIZON_THRESHOLD,
        });
    }
    Ok(())
}

/// ∫₀^∞ S(ν, t, Γs) dt from the trajectory: each pole term contributes
/// (∫F_p ds′)·(−1/λ) (or 1/λ² for τe^{pτ} terms) with λ = iν + p − Γs/2.
///
/// The trajectory must reach the decay horizon.
pub fn time_integrated_spectrum(
    params: &SystemParams,
    spectrometer: &SpectrometerParams,
    traj: &ExpectationTrajectory,
    nu: &UniformGrid,
    channel: ChannelSelection,
) -> Result<Vec<f64>> {
    let gs = spectrometer.gamma_s;
    super::kernels::check_gamma_s(gs)?;
    require_decayed(params, traj)?;
    let coeffs = CoefficientSet::new(params);
    let terms = source_terms(params, &coeffs, traj, channel, traj.len(), Interpolation::Hermite);
    Ok(nu
        .points()
        .iter()
        .map(|&v| {
            terms
                .iter()
                .map(|s| {
                    let lambda = C64::new(-0.5 * gs, v) + s.pole;
                    let factor = if s.power > 0 {
                        1.0 / (lambda * lambda)
                    } else {
                        -1.0 / lambda
                    };
                    (s.integral * factor).re
                })
                .sum()
        })
        .collect())
}

/// ∫ S dt from a spectrogram: trapezoidal over its t grid plus the closed
/// tail after the last t when the engine provided one.
pub fn time_integrated_from_spectrogram(sg: &Spectrogram) -> Result<Vec<f64>> {
    let n_nu = sg.nu.len();
    let nt = sg.t.len();
    if sg.tail.is_none() {
        let last_max = sg.at_time(nt - 1).iter().copied().fold(0.0, f64::max);
        let limit = HORIZON_THRESHOLD * sg.max().max(f64::MIN_POSITIVE);
        if last_max > limit {
            return Err(Error::NotConverged {
                tail: last_max / sg.max(),
                limit: HORIZON_THRESHOLD,
            });
        }
    }
    let h = sg.t.step();
    Ok((0..n_nu)
        .map(|inu| {
            let mut acc = 0.0;
            for it in 0..nt {
                let w = if it == 0 || it + 1 == nt { 0.5 } else { 1.0 };
                acc += w * sg.get(inu, it);
            }
            acc * h + sg.tail.as_ref().map_or(0.0, |t| t[inu])
        })
        .collect())
}

/// Γs ∫₀ᵗ source(s″) e^{−Γs(t−s″)} ds″ at each trajectory index in `idx`,
/// with source = κ⟨a†a⟩ + γ⟨σ+σ−⟩ + 2Re[γF⟨σ+a⟩] restricted to `channel`.
pub fn filtered_source(
    params: &SystemParams,
    gamma_s: f64,
    traj: &ExpectationTrajectory,
    idx: &[usize],
    channel: ChannelSelection,
) -> Vec<f64> {
    let last = idx.iter().copied().max().unwrap_or(0);
    let weights = ChannelWeights::new(params);
    let pi = std::f64::consts::PI;
    let combine = |get: &dyn Fn(Channel, Channel) -> C64| -> C64 {
        channel
            .pairs()
            .iter()
            .map(|&(mu, mp)| weights.get(mu, mp) * pi * get(mu, mp))
            .sum()
    };
    let values: Vec<C64> = (0..=last)
        .map(|k| combine(&|mu, mp| traj.pair(mu, mp, k)))
        .collect();
    let rates: Option<Vec<C64>> = traj.has_rates().then(|| {
        (0..=last)
            .map(|k| combine(&|mu, mp| traj.pair_rate(mu, mp, k).unwrap()))
            .collect()
    });
    let dt = traj.grid.step();
    let forcings = step_forcings(&values, rates.as_deref(), dt);
    let e = step_exponential(C64::new(0.0, 0.0), -gamma_s * dt);
    let chain = filter_chain(&forcings, &e);
    idx.iter().map(|&k| (chain[k] * dt * gamma_s).re).collect()
}

/// ∫ S dν outside [lo, hi] at each trajectory index in `idx`, from the
/// large-|ν| expansion of every pole term about `centre`.
///
/// With x = ν − centre, a = p + Γs/2 + i·centre and b = a − Γs, a term is
/// Γs Re[−G/(ix) + C₂/(ix)² + C₃/(ix)³] + O(x⁻⁴), where G is the source
/// filtered by Γs e^{−Γs u} and, by parts in s′,
///
/// C₂ = aG + F(0)e^{bt}e^{ixt} − F(t),
/// C₃ = −a²G − (a + b)(F(0)e^{bt}e^{ixt} − F(t)) + F′(0)e^{bt}e^{ixt} − F′(t).
///
/// The τe^{pτ} terms are the a-derivatives. The 1/x parts sum to an
/// imaginary number and drop out.
pub fn band_tails(
    params: &SystemParams,
    gamma_s: f64,
    traj: &ExpectationTrajectory,
    idx: &[usize],
    channel: ChannelSelection,
    (lo, hi): (f64, f64),
    centre: f64,
) -> Vec<f64> {
    let last = idx.iter().copied().max().unwrap_or(0);
    let coeffs = CoefficientSet::new(params);
    let terms = source_terms(params, &coeffs, traj, channel, last + 1, Interpolation::Hermite);
    let dt = traj.grid.step();
    let base = step_exponential(C64::new(0.0, 0.0), -gamma_s * dt);
    let (upper, lower) = (hi - centre, centre - lo);
    let square = 1.0 / upper + 1.0 / lower;
    let cube = 0.5 / (upper * upper) - 0.5 / (lower * lower);
    let i = C64::new(0.0, 1.0);
    let mut out = vec![0.0; idx.len()];
    for term in &terms {
        let chain = filter_chain(&term.forcing, &base);
        let deriv = |k: usize| match term.rates.get(k) {
            Some(r) => *r,
            None if k == 0 => (term.values[1] - term.values[0]) / dt,
            None => (term.values[k] - term.values[k - 1]) / dt,
        };
        let a = term.pole + C64::new(0.5 * gamma_s, centre);
        let b = a - gamma_s;
        let (f0, df0) = (term.values[0], deriv(0));
        for (slot, &k) in out.iter_mut().zip(idx) {
            let t = k as f64 * dt;
            let (f, df, g) = (term.values[k], deriv(k), chain[k] * dt);
            let e = (b * t).exp();
            // Smooth and e^{ixt} parts of C₂ and C₃.
            let (s2, r2, s3, r3) = if term.power > 0 {
                (
                    g,
                    f0 * t * e,
                    -2.0 * a * g + 2.0 * f,
                    (t * (-(a + b) * f0 + df0) - 2.0 * f0) * e,
                )
            } else {
                (
                    a * g - f,
                    f0 * e,
                    -a * a * g + (a + b) * f - df,
                    (-(a + b) * f0 + df0) * e,
                )
            };
            let edges2 = inverse_square_tail(upper, t) + inverse_square_tail(lower, t).conj();
            let edges3 = inverse_cube_tail(upper, t) - inverse_cube_tail(lower, t).conj();
            // 1/(ix)² = −1/x², 1/(ix)³ = i/x³.
            let v = -(s2 * square + r2 * edges2) + i * (s3 * cube + r3 * edges3);
            *slot += gamma_s * v.re;
        }
    }
    out
}

/// Energy-integrated intensity from a spectrogram next to its reference.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyIntegrated {
    /// ν-quadrature of the spectrogram at each of its times, tails included.
    pub quadrature: Vec<f64>,
    /// The part of `quadrature` from outside the ν grid.
    pub tails: Vec<f64>,
    /// Source convolved with the spectrometer response at the same times.
    pub reference: Vec<f64>,
}

impl EnergyIntegrated {
    /// Largest |quadrature − reference| relative to the reference peak.
    pub fn max_relative_deviation(&self) -> f64 {
        let peak = self.reference.iter().copied().fold(0.0, f64::max);
        self.quadrature
            .iter()
            .zip(&self.reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / peak.max(f64::MIN_POSITIVE)
    }
}

/// Centre (ω21 + ωc)/2 and the smallest half-span for which the tail
/// expansion of [`band_tails`] is trusted: 6·max(Γs, Γ_tot, |g|, |ω_{c,21}|/2).
pub fn required_band(params: &SystemParams, gamma_s: f64) -> (f64, f64) {
    let band = [gamma_s, params.gamma_tot(), params.g_mag, 0.5 * params.omega_c21().abs()]
        .into_iter()
        .fold(0.0, f64::max);
    (0.5 * (params.omega_21 + params.omega_c), ENERGY_SPAN_FACTOR * band)
}

/// ∫ S dν: trapezoidal over the spectrogram's ν grid plus [`band_tails`]
/// beyond its edges, alongside the convolution reference.
pub fn energy_integrated_intensity(
    sg: &Spectrogram,
    traj: &ExpectationTrajectory,
) -> Result<EnergyIntegrated> {
    let (centre, half) = required_band(&sg.params, sg.gamma_s);
    let (lo, hi) = (sg.nu.start(), sg.nu.end());
    if lo > centre - half || hi < centre + half {
        return Err(Error::GridTooNarrow {
            lo,
            hi,
            need_lo: centre - half,
            need_hi: centre + half,
        });
    }
    let idx = t_indices(traj, &sg.t)?;
    let tails = band_tails(&sg.params, sg.gamma_s, traj, &idx, sg.channel, (lo, hi), centre);
    let h = sg.nu.step();
    let n = sg.nu.len();
    let quadrature = (0..sg.t.len())
        .map(|it| {
            let row = sg.at_time(it);
            let body: f64 = row.iter().sum::<f64>() - 0.5 * (row[0] + row[n - 1]);
            body * h + tails[it]
        })
        .collect();
    let reference = filtered_source(&sg.params, sg.gamma_s, traj, &idx, sg.channel);
    Ok(EnergyIntegrated {
        quadrature,
        tails,
        reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_liouvillian, trajectory, ModelOptions, QuantumState, Truncation};
    use crate::spectrum::{kernel_by_quadrature, tls_energy_integrated, tls_trps_value};

    fn run(params: &SystemParams, dt: f64, len: usize) -> ExpectationTrajectory {
        let lv = build_liouvillian(params, ModelOptions::default()).unwrap();
        let grid = UniformGrid::new(0.0, dt, len).unwrap();
        trajectory(&lv, &QuantumState::excited(Truncation::OnePhoton), &grid, 64).unwrap()
    }

    fn tls(gamma_ph: f64) -> SystemParams {
        SystemParams {
            gamma: 50.0,
            gamma_ph,
            ..Default::default()
        }
    }

    fn fig1() -> SystemParams {
        SystemParams {
            g_mag: 100.0,
            kappa: 50.0,
            gamma: 0.05,
            ..Default::default()
        }
    }

    #[test]
    fn emitter_only_matches_closed_form() {
        for gph in [0.0, 30.0] {
            for gs in [5.0, 50.0, 500.0] {
                let p = tls(gph);
                let dt = trajectory_step(&p, gs);
                let traj = run(&p, dt, (0.12 / dt).ceil() as usize + 1);
                let nu = UniformGrid::linspace(-300.0, 300.0, 25).unwrap();
                let t = UniformGrid::new(0.0, 8.0 * dt, (traj.len() - 1) / 8 + 1).unwrap();
                let opts = TrpsOptions {
                    channel: ChannelSelection::Tls,
                    ..Default::default()
                };
                let sg = trps(&p, &SpectrometerParams::new(gs).unwrap(), &traj, &nu, &t, opts).unwrap();
                let mut worst: f64 = 0.0;
                for it in 0..t.len() {
                    for inu in 0..nu.len() {
                        let exact = tls_trps_value(&p, gs, nu.point(inu), t.point(it));
                        worst = worst.max((sg.get(inu, it) - exact).abs());
                    }
                }
                assert!(worst < 1e-7 * sg.max(), "γph {gph} Γs {gs}: {:e}", worst / sg.max());
            }
        }
    }

    #[test]
    fn fast_engine_agrees_with_trapezoid() {
        let p = fig1();
        let gs = 150.0;
        let dt = max_lag_step(&p, gs) / 8.0;
        let traj = run(&p, dt, 801);
        let nu = UniformGrid::linspace(-250.0, 250.0, 11).unwrap();
        let t = UniformGrid::new(0.0, 100.0 * dt, 9).unwrap();
        let spec = SpectrometerParams::new(gs).unwrap();
        let fast = trps(&p, &spec, &traj, &nu, &t, TrpsOptions::default()).unwrap();
        let slow = trps_direct(&p, &spec, &traj, &nu, &t, ChannelSelection::Total).unwrap();
        for (a, b) in fast.values.iter().zip(&slow.values) {
            // The trapezoid error is O(Δ²) relative to the peak.
            assert!((a - b).abs() < 1e-3 * fast.max(), "{a} {b}");
        }
        assert!(fast.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn vanishes_at_t_zero() {
        let p = fig1();
        let dt = max_lag_step(&p, 5.0);
        let traj = run(&p, dt, 11);
        let nu = UniformGrid::linspace(-250.0, 250.0, 7).unwrap();
        let t = UniformGrid::new(0.0, dt, 3).unwrap();
        let sg = trps(&p, &SpectrometerParams::new(5.0).unwrap(), &traj, &nu, &t, TrpsOptions::default()).unwrap();
        assert!(sg.at_time(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_interpolation_is_close() {
        let p = tls(0.0);
        let gs = 50.0;
        let dt = max_lag_step(&p, gs) / 4.0;
        let traj = run(&p, dt, 401);
        let nu = UniformGrid::linspace(-100.0, 100.0, 9).unwrap();
        let t = UniformGrid::new(0.0, 50.0 * dt, 9).unwrap();
        let spec = SpectrometerParams::new(gs).unwrap();
        let opts = TrpsOptions {
            channel: ChannelSelection::Tls,
            interpolation: Interpolation::Linear,
        };
        let lin = trps(&p, &spec, &traj, &nu, &t, opts).unwrap();
        for it in 0..t.len() {
            for inu in 0..nu.len() {
                let exact = tls_trps_value(&p, gs, nu.point(inu), t.point(it));
                assert!((lin.get(inu, it) - exact).abs() < 1e-3 * lin.max());
            }
        }
    }

    #[test]
    fn off_grid_and_coarse_trajectories_are_rejected() {
        let p = fig1();
        let spec = SpectrometerParams::new(5.0).unwrap();
        let dt = max_lag_step(&p, 5.0);
        let nu = UniformGrid::linspace(-10.0, 10.0, 3).unwrap();
        let traj = run(&p, dt, 21);
        let t = UniformGrid::new(0.0, 1.5 * dt, 3).unwrap();
        assert!(matches!(
            trps(&p, &spec, &traj, &nu, &t, TrpsOptions::default()),
            Err(Error::OffGrid { .. })
        ));
        let t = UniformGrid::new(0.0, dt, 40).unwrap();
        assert!(matches!(
            trps(&p, &spec, &traj, &nu, &t, TrpsOptions::default()),
            Err(Error::OutOfTrajectory { .. })
        ));
        let coarse = run(&p, 2.0 * dt, 5);
        let t = UniformGrid::new(0.0, 2.0 * dt, 3).unwrap();
        assert!(matches!(
            trps(&p, &spec, &coarse, &nu, &t, TrpsOptions::default()),
            Err(Error::TrajectoryTooCoarse { .. })
        ));
    }

    #[test]
    fn time_integral_routes_agree() {
        let p = tls(30.0);
        let gs = 50.0;
        let dt = max_lag_step(&p, gs);
        // e^{−γt} < 1e-7 by t = 0.33.
        let traj = run(&p, dt, (0.36 / dt) as usize);
        let nu = UniformGrid::linspace(-200.0, 200.0, 21).unwrap();
        let spec = SpectrometerParams::new(gs).unwrap();
        let direct = time_integrated_spectrum(&p, &spec, &traj, &nu, ChannelSelection::Tls).unwrap();
        let t = UniformGrid::new(0.0, dt, traj.len()).unwrap();
        let opts = TrpsOptions {
            channel: ChannelSelection::Tls,
            ..Default::default()
        };
        let sg = trps(&p, &spec, &traj, &nu, &t, opts).unwrap();
        assert!(sg.tail.is_some());
        let summed = time_integrated_from_spectrogram(&sg).unwrap();
        let peak = direct.iter().copied().fold(0.0, f64::max);
        for (inu, (a, b)) in direct.iter().zip(&summed).enumerate() {
            let exact = super::super::tls_time_integrated(&p, gs, nu.point(inu));
            assert!((a - exact).abs() < 1e-6 * peak, "{a} {exact}");
            assert!((a - b).abs() < 1e-4 * peak, "{a} {b}");
        }
    }

    #[test]
    fn undecayed_trajectory_is_refused() {
        let p = fig1();
        let dt = max_lag_step(&p, 5.0);
        let traj = run(&p, dt, 50);
        let nu = UniformGrid::linspace(-10.0, 10.0, 3).unwrap();
        let spec = SpectrometerParams::new(5.0).unwrap();
        assert!(matches!(
            time_integrated_spectrum(&p, &spec, &traj, &nu, ChannelSelection::Total),
            Err(Error::NotConverged { .. })
        ));
    }

    #[test]
    fn filtered_source_matches_emitter_closed_form() {
        let p = tls(0.0);
        let gs = 5.0;
        let dt = trajectory_step(&p, gs);
        let traj = run(&p, dt, 200);
        let idx: Vec<usize> = (0..200).step_by(13).collect();
        let f = filtered_source(&p, gs, &traj, &idx, ChannelSelection::Tls);
        for (k, v) in idx.iter().zip(f) {
            let exact = tls_energy_integrated(&p, gs, *k as f64 * dt);
            assert!((v - exact).abs() < 1e-8 * exact.max(1e-3), "{v} {exact}");
        }
    }

    #[test]
    fn energy_integral_of_a_doublet() {
        let p = fig1();
        let gs = 150.0;
        let dt = max_lag_step(&p, gs);
        let traj = run(&p, dt, 601);
        let (centre, half) = required_band(&p, gs);
        let nu = UniformGrid::linspace(centre - half, centre + half, 601).unwrap();
        let t = UniformGrid::new(0.0, 50.0 * dt, 13).unwrap();
        let sg = trps(&p, &SpectrometerParams::new(gs).unwrap(), &traj, &nu, &t, TrpsOptions::default()).unwrap();
        let e = energy_integrated_intensity(&sg, &traj).unwrap();
        assert!(e.max_relative_deviation() < 2e-3, "{}", e.max_relative_deviation());

        let narrow = UniformGrid::linspace(-300.0, 300.0, 11).unwrap();
        let sg = trps(&p, &SpectrometerParams::new(gs).unwrap(), &traj, &narrow, &t, TrpsOptions::default()).unwrap();
        assert!(matches!(
            energy_integrated_intensity(&sg, &traj),
            Err(Error::GridTooNarrow { .. })
        ));
    }

    #[test]
    fn band_tails_close_the_emitter_energy_integral() {
        // Closed-form spectrum on a narrow grid, tails from the expansion,
        // against the closed-form energy integral.
        let p = tls(30.0);
        let gs = 50.0;
        let dt = trajectory_step(&p, gs);
        let traj = run(&p, dt, 801);
        let nu = UniformGrid::linspace(-500.0, 500.0, 2001).unwrap();
        let idx: Vec<usize> = (1..801).step_by(40).collect();
        let tails = band_tails(&p, gs, &traj, &idx, ChannelSelection::Tls, (nu.start(), nu.end()), 0.0);
        let peak = (0..800)
            .map(|k| tls_energy_integrated(&p, gs, k as f64 * dt))
            .fold(0.0, f64::max);
        let mut missing: f64 = 0.0;
        for (&k, tail) in idx.iter().zip(tails) {
            let t = k as f64 * dt;
            let row: Vec<f64> = nu.points().iter().map(|&v| tls_trps_value(&p, gs, v, t)).collect();
            let body = (row.iter().sum::<f64>() - 0.5 * (row[0] + row[2000])) * nu.step();
            let exact = tls_energy_integrated(&p, gs, t);
            missing = missing.max((exact - body).abs());
            assert!((body + tail - exact).abs() < 1e-3 * peak, "t {t}: {} {tail} {exact}", body);
        }
        assert!(missing > 5e-2 * peak);
    }

    #[test]
    fn kernels_match_quadrature() {
        let p = SystemParams {
            g_mag: 1.0,
            kappa: 50.0,
            gamma: 0.05,
            gamma_ph: 30.0,
            eta: 1.0,
            theta: std::f64::consts::FRAC_PI_2,
            omega_21: -70.0,
            ..Default::default()
        };
        let k = SpectralKernelSet::new(&p, 50.0).unwrap();
        for (nu, s) in [(-70.0, 0.01), (0.0, 0.05), (35.0, 0.2)] {
            for mp in Channel::BOTH {
                for i in Channel::BOTH {
                    let a = k.eval(mp, i, nu, s);
                    let b = kernel_by_quadrature(&k.coefficients, mp, i, nu, s, 50.0);
                    assert!((a - b).norm() <= 1e-8 * b.norm().max(1e-12), "{a} {b}");
                }
            }
        }
    }
}
