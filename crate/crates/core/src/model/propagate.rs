use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::basis::{Operator, Operators, Truncation};
use super::liouvillian::{unvectorize, vectorize, LiouvillianMatrix};
use crate::error::{Error, Result};
use crate::grid::UniformGrid;

/// Largest accepted Γ_max·Δt for a propagation step.
pub const MAX_STEP_PRODUCT: f64 = 0.5;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-9;

/// A density matrix on a truncated basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub rho: Operator,
    pub truncation: Truncation,
}

impl QuantumState {
    /// |e,0⟩⟨e,0|, the initial condition of every scenario.
    pub fn excited(truncation: Truncation) -> Self {
        let i = truncation.index(true, 0).unwrap();
        Self::basis_projector(truncation, i)
    }

    /// |g,0⟩⟨g,0|.
    pub fn vacuum(truncation: Truncation) -> Self {
        let i = truncation.index(false, 0).unwrap();
        Self::basis_projector(truncation, i)
    }

    fn basis_projector(truncation: Truncation, i: usize) -> Self {
        let d = truncation.dim();
        let mut rho = Operator::zeros(d, d);
        rho[(i, i)] = C64::new(1.0, 0.0);
        Self { rho, truncation }
    }

    /// Diagonal state from populations in basis order. Entries beyond the
    /// truncation must be absent; missing trailing entries are zero.
    pub fn from_populations(truncation: Truncation, populations: &[f64]) -> Result<Self> {
        let d = truncation.dim();
        if populations.len() > d {
            return Err(Error::InvalidGrid(format!(
                "{} populations given for a {d}-state basis",
                populations.len()
            )));
        }
        let total: f64 = populations.iter().sum();
        if populations.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (total - 1.0).abs() > TRACE_TOL
        {
            return Err(Error::StateInvariant {
                step: 0,
                what: format!("populations must be non-negative and sum to 1 (sum {total})"),
            });
        }
        let mut rho = Operator::zeros(d, d);
        for (i, p) in populations.iter().enumerate() {
            rho[(i, i)] = C64::new(*p, 0.0);
        }
        Ok(Self { rho, truncation })
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn expect(&self, op: &Operator) -> C64 {
        (op * &self.rho).trace()
    }

    /// Checks Hermiticity, unit trace and positivity.
    pub fn validate(&self, step: usize) -> Result<()> {
        let d = self.rho.nrows();
        for i in 0..d {
            for j in i..d {
                let diff = (self.rho[(i, j)] - self.rho[(j, i)].conj()).norm();
                if diff > HERMITIAN_TOL {
                    return Err(Error::StateInvariant {
                        step,
                        what: format!("not Hermitian: |ρ_{i}{j} − ρ_{j}{i}*| = {diff:.3e}"),
                    });
                }
            }
        }
        let tr = self.trace();
        if (tr - 1.0).norm() > TRACE_TOL {
            return Err(Error::StateInvariant {
                step,
                what: format!("trace {tr} differs from 1"),
            });
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::StateInvariant {
                step,
                what: format!("negative eigenvalue {min_eig:.3e}"),
            });
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Single-time expectations on a uniform grid of natural time units.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationTrajectory {
    pub grid: UniformGrid,
    /// ⟨a†a⟩
    pub n_cav: Vec<f64>,
    /// ⟨σ+σ−⟩
    pub n_tls: Vec<f64>,
    /// ⟨σ+a⟩
    pub coh: Vec<C64>,
    /// ⟨a†σ−⟩
    pub coh_conj_pair: Vec<C64>,
    /// Exact time derivatives of the four series, in the same order. Empty
    /// when the trajectory was assembled from bare states.
    pub rates: Vec<[C64; 4]>,
}

/// Channel operators O_σ = σ−, O_a = a. They double as the basis A₁, A₂.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Sigma = 0,
    Cavity = 1,
}

impl Channel {
    pub const BOTH: [Channel; 2] = [Channel::Sigma, Channel::Cavity];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Sigma => "sigma",
            Self::Cavity => "a",
        }
    }
}

impl ExpectationTrajectory {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.points()
    }

    pub fn times_ps(&self) -> Vec<f64> {
        self.grid
            .points()
            .into_iter()
            .map(crate::units::natural_to_ps)
            .collect()
    }

    /// ⟨O†_μ A_i⟩ at grid index `k`.
    pub fn pair(&self, mu: Channel, i: Channel, k: usize) -> C64 {
        match (mu, i) {
            (Channel::Sigma, Channel::Sigma) => C64::new(self.n_tls[k], 0.0),
            (Channel::Sigma, Channel::Cavity) => self.coh[k],
            (Channel::Cavity, Channel::Sigma) => self.coh_conj_pair[k],
            (Channel::Cavity, Channel::Cavity) => C64::new(self.n_cav[k], 0.0),
        }
    }

    pub fn has_rates(&self) -> bool {
        self.rates.len() == self.len()
    }

    /// d/dt⟨O†_μ A_i⟩ at grid index `k`, if derivatives were recorded.
    pub fn pair_rate(&self, mu: Channel, i: Channel, k: usize) -> Option<C64> {
        let r = self.rates.get(k)?;
        Some(match (mu, i) {
            (Channel::Cavity, Channel::Cavity) => r[0],
            (Channel::Sigma, Channel::Sigma) => r[1],
            (Channel::Sigma, Channel::Cavity) => r[2],
            (Channel::Cavity, Channel::Sigma) => r[3],
        })
    }

    /// ⟨O†_μ A_i⟩ at time `t`, linear between grid points and exact on them.
    pub fn pair_at(&self, mu: Channel, i: Channel, t: f64) -> Result<C64> {
        let (k, frac) = self.locate(t)?;
        if frac == 0.0 {
            return Ok(self.pair(mu, i, k));
        }
        Ok(self.pair(mu, i, k) * (1.0 - frac) + self.pair(mu, i, k + 1) * frac)
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let end = self.grid.end();
        let out = || Error::OutOfTrajectory { t, end };
        if let Some(k) = self.grid.index_of(t) {
            return Ok((k, 0.0));
        }
        if self.len() < 2 || t < self.grid.start() || t > end {
            return Err(out());
        }
        let x = (t - self.grid.start()) / self.grid.step();
        let k = (x.floor() as usize).min(self.len() - 2);
        Ok((k, x - k as f64))
    }

    /// N(t) = ⟨a†a⟩ + ⟨σ+σ−⟩.
    pub fn total_excitation(&self) -> Vec<f64> {
        self.n_cav.iter().zip(&self.n_tls).map(|(a, b)| a + b).collect()
    }

    /// κ⟨a†a⟩ + γ⟨σ+σ−⟩ + 2Re[γF⟨σ+a⟩], the total emitted intensity.
    pub fn emission_source(&self, params: &crate::model::SystemParams) -> Vec<f64> {
        let gf = params.gamma_f();
        (0..self.len())
            .map(|k| {
                params.kappa * self.n_cav[k]
                    + params.gamma * self.n_tls[k]
                    + 2.0 * (gf * self.coh[k]).re
            })
            .collect()
    }

    /// The sub-trajectory on grid indices `0..len`.
    pub fn truncated(&self, len: usize) -> Self {
        let len = len.min(self.len()).max(1);
        Self {
            grid: UniformGrid::new(self.grid.start(), self.grid.step(), len).unwrap(),
            n_cav: self.n_cav[..len].to_vec(),
            n_tls: self.n_tls[..len].to_vec(),
            coh: self.coh[..len].to_vec(),
            coh_conj_pair: self.coh_conj_pair[..len].to_vec(),
            rates: self.rates[..len.min(self.rates.len())].to_vec(),
        }
    }
}

/// Rejects grids whose step is too large for the step-size guard.
pub fn check_step(lv: &LiouvillianMatrix, dt: f64) -> Result<()> {
    let product = lv.params.max_rate() * dt;
    if product > MAX_STEP_PRODUCT {
        return Err(Error::StepTooLarge {
            dt,
            product,
            limit: MAX_STEP_PRODUCT,
        });
    }
    Ok(())
}

/// Fixed-step propagator reusing one exp(L·Δt) across a uniform grid.
pub struct Propagator {
    step: DMatrix<C64>,
    state: DVector<C64>,
    dim: usize,
    truncation: Truncation,
    probes: [DVector<C64>; 4],
    rate_probes: [DVector<C64>; 4],
}

impl Propagator {
    pub fn new(lv: &LiouvillianMatrix, rho0: &QuantumState, dt: f64) -> Result<Self> {
        check_step(lv, dt)?;
        if rho0.truncation != lv.options.truncation {
            return Err(Error::StateInvariant {
                step: 0,
                what: "initial state truncation differs from the generator's".into(),
            });
        }
        rho0.validate(0)?;
        let ops = Operators::new(rho0.truncation);
        // ⟨X⟩ = Tr[Xρ] = vec(Xᵀ)·vec(ρ)
        let probe = |x: Operator| vectorize(&x.transpose());
        let probes = [
            probe(ops.number()),
            probe(ops.excited_projector()),
            probe(&ops.sigma_plus * &ops.a),
            probe(&ops.a_dag * &ops.sigma_minus),
        ];
        // d⟨X⟩/dt = vec(Xᵀ)·(L vec ρ) = (Lᵀ vec(Xᵀ))·vec ρ
        let lt = lv.l.transpose();
        let rate_probes = probes.clone().map(|p| &lt * p);
        Ok(Self {
            step: lv.step_propagator(dt),
            rate_probes,
            state: vectorize(&rho0.rho),
            dim: rho0.truncation.dim(),
            truncation: rho0.truncation,
            probes,
        })
    }

    pub fn advance(&mut self) {
        self.state = &self.step * &self.state;
    }

    pub fn current(&self) -> QuantumState {
        QuantumState {
            rho: unvectorize(&self.state, self.dim),
            truncation: self.truncation,
        }
    }

    fn dot(&self, p: &DVector<C64>) -> C64 {
        p.iter().zip(self.state.iter()).map(|(a, b)| a * b).sum()
    }

    /// (⟨a†a⟩, ⟨σ+σ−⟩, ⟨σ+a⟩, ⟨a†σ−⟩) of the current state.
    pub fn observe(&self) -> (f64, f64, C64, C64) {
        (
            self.dot(&self.probes[0]).re,
            self.dot(&self.probes[1]).re,
            self.dot(&self.probes[2]),
            self.dot(&self.probes[3]),
        )
    }

    /// Time derivatives of the four observed expectations.
    pub fn observe_rates(&self) -> [C64; 4] {
        [0, 1, 2, 3].map(|k| self.dot(&self.rate_probes[k]))
    }
}

/// ρ(t_k) = exp(L·t_k)ρ₀ on every grid point, with invariants checked per step.
pub fn propagate(
    lv: &LiouvillianMatrix,
    rho0: &QuantumState,
    grid: &UniformGrid,
) -> Result<Vec<QuantumState>> {
    let mut prop = start_at(lv, rho0, grid)?;
    let mut out = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        if k > 0 {
            prop.advance();
        }
        let s = prop.current();
        s.validate(k)?;
        out.push(s);
    }
    Ok(out)
}

fn start_at(lv: &LiouvillianMatrix, rho0: &QuantumState, grid: &UniformGrid) -> Result<Propagator> {
    let dt = if grid.len() > 1 { grid.step() } else { 0.0 };
    let mut prop = Propagator::new(lv, rho0, dt)?;
    if grid.start() != 0.0 {
        let jump = (&lv.l * C64::new(grid.start(), 0.0)).exp();
        prop.state = jump * &prop.state;
    }
    Ok(prop)
}

/// The four expectation series of a state sequence.
pub fn expectations(states: &[QuantumState], grid: &UniformGrid) -> Result<ExpectationTrajectory> {
    if states.is_empty() {
        return Err(Error::InvalidGrid("no states given".into()));
    }
    if states.len() != grid.len() {
        return Err(Error::InvalidGrid(format!(
            "{} states for a {}-point grid",
            states.len(),
            grid.len()
        )));
    }
    let ops = Operators::new(states[0].truncation);
    let n = ops.number();
    let p = ops.excited_projector();
    let sp_a = &ops.sigma_plus * &ops.a;
    let ad_sm = &ops.a_dag * &ops.sigma_minus;
    let mut traj = ExpectationTrajectory {
        grid: *grid,
        n_cav: Vec::with_capacity(states.len()),
        n_tls: Vec::with_capacity(states.len()),
        coh: Vec::with_capacity(states.len()),
        coh_conj_pair: Vec::with_capacity(states.len()),
        rates: Vec::new(),
    };
    for s in states {
        traj.n_cav.push(s.expect(&n).re);
        traj.n_tls.push(s.expect(&p).re);
        traj.coh.push(s.expect(&sp_a));
        traj.coh_conj_pair.push(s.expect(&ad_sm));
    }
    Ok(traj)
}

/// Streams the propagation straight into expectation series, checking the
/// state invariants every `check_every` steps (and always at the last one).
pub fn trajectory(
    lv: &LiouvillianMatrix,
    rho0: &QuantumState,
    grid: &UniformGrid,
    check_every: usize,
) -> Result<ExpectationTrajectory> {
    let mut prop = start_at(lv, rho0, grid)?;
    let n = grid.len();
    let mut traj = ExpectationTrajectory {
        grid: *grid,
        n_cav: Vec::with_capacity(n),
        n_tls: Vec::with_capacity(n),
        coh: Vec::with_capacity(n),
        coh_conj_pair: Vec::with_capacity(n),
        rates: Vec::with_capacity(n),
    };
    let every = check_every.max(1);
    for k in 0..n {
        if k > 0 {
            prop.advance();
        }
        if k % every == 0 || k + 1 == n {
            prop.current().validate(k)?;
        }
        let (nc, nt, c, cc) = prop.observe();
        traj.n_cav.push(nc);
        traj.n_tls.push(nt);
        traj.coh.push(c);
        traj.coh_conj_pair.push(cc);
        traj.rates.push(prop.observe_rates());
    }
    Ok(traj)
}

/// Propagates on a grid of step `dt` from t = 0 until the emitted intensity is
/// guaranteed to stay below `rel_threshold` of its running maximum, then
/// continues for `extra` more time. Returns the trajectory.
///
/// The guarantee uses source(t') ≤ λ_max·N(t') ≤ λ_max·N(t) for t' ≥ t, with
/// λ_max the top eigenvalue of the emission matrix and N non-increasing.
pub fn trajectory_until_decayed(
    lv: &LiouvillianMatrix,
    rho0: &QuantumState,
    dt: f64,
    rel_threshold: f64,
    min_time: f64,
    extra: f64,
    max_steps: usize,
) -> Result<ExpectationTrajectory> {
    let params = lv.params;
    let bound_rate = params.max_emission_rate();
    let mut prop = Propagator::new(lv, rho0, dt)?;
    let gf = params.gamma_f();
    let mut series: (Vec<f64>, Vec<f64>, Vec<C64>, Vec<C64>) = Default::default();
    let mut rates = Vec::new();
    let mut peak: f64 = 0.0;
    let mut stop_at: Option<usize> = None;
    let mut k = 0usize;
    loop {
        if k > 0 {
            prop.advance();
        }
        let (nc, nt, c, cc) = prop.observe();
        series.0.push(nc);
        series.1.push(nt);
        series.2.push(c);
        series.3.push(cc);
        rates.push(prop.observe_rates());
        let source = params.kappa * nc + params.gamma * nt + 2.0 * (gf * c).re;
        peak = peak.max(source);
        let t = k as f64 * dt;
        if stop_at.is_none() && t >= min_time && bound_rate * (nc + nt) <= rel_threshold * peak {
            stop_at = Some(k + (extra / dt).ceil() as usize);
        }
        if let Some(end) = stop_at {
            if k >= end {
                break;
            }
        }
        if k % 256 == 0 {
            prop.current().validate(k)?;
        }
        k += 1;
        if k >= max_steps {
            return Err(Error::NotConverged {
                tail: bound_rate * (nc + nt) / peak.max(f64::MIN_POSITIVE),
                limit: rel_threshold,
            });
        }
    }
    prop.current().validate(k)?;
    Ok(ExpectationTrajectory {
        grid: UniformGrid::new(0.0, dt, series.0.len())?,
        n_cav: series.0,
        n_tls: series.1,
        coh: series.2,
        coh_conj_pair: series.3,
        rates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_liouvillian, ModelOptions, SystemParams};
    use crate::units::natural_to_ps;

    fn fig1() -> SystemParams {
        SystemParams {
            g_mag: 100.0,
            kappa: 50.0,
            gamma: 0.05,
            ..Default::default()
        }
    }

    fn fig1_traj(dt: f64, n: usize) -> ExpectationTrajectory {
        let lv = build_liouvillian(&fig1(), ModelOptions::default()).unwrap();
        let grid = UniformGrid::new(0.0, dt, n).unwrap();
        trajectory(&lv, &QuantumState::excited(Truncation::OnePhoton), &grid, 1).unwrap()
    }

    #[test]
    fn zero_generator_is_identity() {
        let lv = build_liouvillian(&SystemParams::default(), ModelOptions::default()).unwrap();
        let rho0 = QuantumState::from_populations(Truncation::OnePhoton, &[0.25, 0.25, 0.5]).unwrap();
        let grid = UniformGrid::new(0.0, 0.1, 20).unwrap();
        for s in propagate(&lv, &rho0, &grid).unwrap() {
            assert!((&s.rho - &rho0.rho).norm() < 1e-15);
        }
    }

    #[test]
    fn vacuum_is_dark() {
        let lv = build_liouvillian(&fig1(), ModelOptions::default()).unwrap();
        let grid = UniformGrid::new(0.0, 1e-3, 200).unwrap();
        let states = propagate(&lv, &QuantumState::vacuum(Truncation::OnePhoton), &grid).unwrap();
        let e = expectations(&states, &grid).unwrap();
        assert!(e.n_cav.iter().chain(&e.n_tls).all(|x| x.abs() < 1e-15));
        assert!(e.coh.iter().all(|x| x.norm() < 1e-15));
    }

    #[test]
    fn initial_condition() {
        let t = fig1_traj(1e-3, 2);
        assert_eq!(t.n_tls[0], 1.0);
        assert_eq!(t.n_cav[0], 0.0);
        assert_eq!(t.coh[0], C64::new(0.0, 0.0));
    }

    #[test]
    fn rabi_period() {
        let dt = 2e-5;
        let t = fig1_traj(dt, 4000);
        let maxima: Vec<usize> = (1..t.len() - 1)
            .filter(|&k| t.n_cav[k] > t.n_cav[k - 1] && t.n_cav[k] >= t.n_cav[k + 1])
            .collect();
        let period = natural_to_ps((maxima[1] - maxima[0]) as f64 * dt);
        let nominal = crate::units::period_ps(200.0);
        assert!((period - nominal).abs() / nominal < 0.01, "{period} vs {nominal}");
    }

    #[test]
    fn rabi_exchange_is_anti_phase() {
        let dt = 1e-4;
        let t = fig1_traj(dt, 320); // one period ≈ 0.0317 µeV⁻¹
        let argmax = (0..t.len()).max_by(|&a, &b| t.n_cav[a].total_cmp(&t.n_cav[b])).unwrap();
        let argmin = (0..t.len()).min_by(|&a, &b| t.n_tls[a].total_cmp(&t.n_tls[b])).unwrap();
        // Cavity loss pulls the cavity maximum ahead of the emitter minimum by
        // δ = atan(κ/4Ω)/Ω each side of the undamped quarter-period π/2Ω.
        let omega = (100.0f64.powi(2) - 12.5f64.powi(2)).sqrt();
        let quarter = std::f64::consts::FRAC_PI_2 / omega;
        let shift = (50.0 / (4.0 * omega)).atan() / omega;
        assert!((argmax as f64 * dt - (quarter - shift)).abs() <= dt);
        assert!((argmin as f64 * dt - (quarter + shift)).abs() <= dt);
    }

    #[test]
    fn series_invariants() {
        let t = fig1_traj(5e-4, 2000);
        for k in 0..t.len() {
            assert!((-1e-9..=1.0 + 1e-9).contains(&t.n_cav[k]));
            assert!((-1e-9..=1.0 + 1e-9).contains(&t.n_tls[k]));
            assert!((t.coh[k].conj() - t.coh_conj_pair[k]).norm() < 1e-12);
        }
        let n = t.total_excitation();
        assert!(n.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }

    #[test]
    fn rates_are_derivatives() {
        let dt = 1e-5;
        let t = fig1_traj(dt, 400);
        for k in [50, 200, 350] {
            let fd = (t.n_cav[k + 1] - t.n_cav[k - 1]) / (2.0 * dt);
            assert!((t.rates[k][0].re - fd).abs() < 1e-4 * fd.abs().max(1.0));
            let fd = (t.coh[k + 1] - t.coh[k - 1]) / (2.0 * dt);
            assert!((t.rates[k][2] - fd).norm() < 1e-4 * fd.norm().max(1.0));
        }
    }

    #[test]
    fn step_guard() {
        let lv = build_liouvillian(&fig1(), ModelOptions::default()).unwrap();
        let grid = UniformGrid::new(0.0, 0.01, 10).unwrap();
        let err = propagate(&lv, &QuantumState::excited(Truncation::OnePhoton), &grid);
        assert!(matches!(err, Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn interpolation_is_exact_on_grid() {
        let t = fig1_traj(1e-3, 50);
        let k = 17;
        let v = t.pair_at(Channel::Cavity, Channel::Cavity, t.grid.point(k)).unwrap();
        assert_eq!(v.re, t.n_cav[k]);
        assert!(t.pair_at(Channel::Sigma, Channel::Sigma, 1.0).is_err());
    }

    #[test]
    fn decay_horizon() {
        let lv = build_liouvillian(&fig1(), ModelOptions::default()).unwrap();
        let rho0 = QuantumState::excited(Truncation::OnePhoton);
        let t = trajectory_until_decayed(&lv, &rho0, 5e-4, 1e-6, 0.0, 0.0, 1_000_000).unwrap();
        let src = t.emission_source(&lv.params);
        let peak = src.iter().copied().fold(0.0, f64::max);
        assert!(*src.last().unwrap() <= 1e-6 * peak);
        // N(t) ≈ e^{−Γ_tot t}, so the horizon sits near ln(1e6)/25.
        assert!(t.grid.end() > 0.4 && t.grid.end() < 0.8);
    }

    #[test]
    fn rejects_bad_populations() {
        assert!(QuantumState::from_populations(Truncation::OnePhoton, &[0.5, 0.6]).is_err());
        assert!(QuantumState::from_populations(Truncation::OnePhoton, &[1.0, 0.0, 0.0, 0.0, 0.0]).is_err());
    }
}
