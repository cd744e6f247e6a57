use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Physical constants of the emitter–cavity model. All energies and rates in µeV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Coupling magnitude |g|.
    pub g_mag: f64,
    /// Phase of g in radians.
    pub g_phase: f64,
    /// Cavity emission rate κ.
    pub kappa: f64,
    /// Emitter emission rate γ.
    pub gamma: f64,
    /// Pure dephasing rate γ_ph.
    pub gamma_ph: f64,
    /// Overlap of the two radiation patterns, in [0, 1].
    pub eta: f64,
    /// Phase difference between the two emission channels.
    pub theta: f64,
    /// Emitter transition energy ω21.
    pub omega_21: f64,
    /// Cavity energy ωc.
    pub omega_c: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            g_mag: 0.0,
            g_phase: FRAC_PI_2,
            kappa: 0.0,
            gamma: 0.0,
            gamma_ph: 0.0,
            eta: 0.0,
            theta: 0.0,
            omega_21: 0.0,
            omega_c: 0.0,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("g_mag", self.g_mag),
            ("g_phase", self.g_phase),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("gamma_ph", self.gamma_ph),
            ("eta", self.eta),
            ("theta", self.theta),
            ("omega_21", self.omega_21),
            ("omega_c", self.omega_c),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite",
                });
            }
        }
        for (name, value) in [
            ("g_mag", self.g_mag),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("gamma_ph", self.gamma_ph),
        ] {
            if value < 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be ≥ 0",
                });
            }
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidParameter {
                name: "eta",
                value: self.eta,
                reason: "must lie in [0, 1]",
            });
        }
        Ok(())
    }

    /// g = |g| e^{i·phase}.
    pub fn g(&self) -> C64 {
        C64::from_polar(self.g_mag, self.g_phase)
    }

    /// γF = e^{iθ} √(ηγκ).
    pub fn gamma_f(&self) -> C64 {
        C64::from_polar((self.eta * self.gamma * self.kappa).sqrt(), self.theta)
    }

    /// g₊ = g + iγF/2.
    pub fn g_plus(&self) -> C64 {
        self.g() + C64::i() * self.gamma_f() * 0.5
    }

    /// g₋ = g − iγF/2.
    pub fn g_minus(&self) -> C64 {
        self.g() - C64::i() * self.gamma_f() * 0.5
    }

    /// Γ_tot = (γ + κ)/2 + γ_ph.
    pub fn gamma_tot(&self) -> f64 {
        0.5 * (self.gamma + self.kappa) + self.gamma_ph
    }

    /// ω_{c,21} = ωc − ω21.
    pub fn omega_c21(&self) -> f64 {
        self.omega_c - self.omega_21
    }

    /// Ω_R = √((ω21 − ωc)² + 4|g|²).
    pub fn rabi_frequency(&self) -> f64 {
        (self.omega_c21().powi(2) + 4.0 * self.g_mag * self.g_mag).sqrt()
    }

    /// Largest rate entering the step-size guard of the propagator.
    pub fn max_rate(&self) -> f64 {
        [
            self.kappa,
            self.gamma,
            self.gamma_ph,
            2.0 * self.g_mag,
            self.omega_c21().abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Largest eigenvalue of the emission matrix [[γ, γF], [γF*, κ]].
    ///
    /// The total emitted intensity is bounded by this times the number of
    /// excitations in the system.
    pub fn max_emission_rate(&self) -> f64 {
        let mean = 0.5 * (self.gamma + self.kappa);
        let half_diff = 0.5 * (self.gamma - self.kappa);
        mean + (half_diff * half_diff + self.gamma_f().norm_sqr()).sqrt()
    }

    /// Emitter alone: coupling, cavity loss and Fano overlap switched off.
    pub fn is_emitter_only(&self) -> bool {
        self.g_mag == 0.0 && self.eta == 0.0
    }
}
