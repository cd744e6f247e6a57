//! The time-resolved physical spectrum S(ν, t, Γs) and its reductions.
//!
//! S(ν, t, Γs) = Re Σ χ_{μ,μ′} ∫₀ᵗ ds′ ⟨O†_μ A_i⟩_{s′} 𝒞_{μ′,i}(ν, t − s′, Γs)

mod engine;
mod fano;
mod kernels;
mod peaks;
mod tls;

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::export::sci;
use crate::grid::UniformGrid;
use crate::model::{Channel, SystemParams};
use crate::units::natural_to_ps;

pub use engine::{
    band_tails, energy_integrated_intensity, filtered_source, required_band, time_integrated_from_spectrogram,
    time_integrated_spectrum, trps, trps_direct, EnergyIntegrated, Interpolation, TrpsOptions,
    trajectory_step, ENERGY_SPAN_FACTOR, HORIZON_THRESHOLD, TRAJECTORY_REFINEMENT,
};
pub use fano::{fano_probe, fano_probe_closed_form, fano_probe_printed, FanoProbe};
pub use kernels::{
    e1_imaginary, inverse_cube_tail, inverse_square_tail, kernel_by_quadrature, phi1, pole_kernel, psi, SpectralKernelSet,
};
pub use peaks::{analyze_peaks, Peak, PeakOptions, PeakReport};
pub use tls::{tls_energy_integrated, tls_time_integrated, tls_trps, tls_trps_value};

/// Spectrometer with a single-pole response Γs e^{−Γs t}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrometerParams {
    /// Spectral resolution Γs, µeV.
    pub gamma_s: f64,
}

impl SpectrometerParams {
    pub fn new(gamma_s: f64) -> Result<Self> {
        kernels::check_gamma_s(gamma_s)?;
        Ok(Self { gamma_s })
    }
}

/// χ_{μ,μ′} = {γ, κ, γF, γF*}/π over (σ,σ), (a,a), (σ,a), (a,σ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelWeights {
    /// Indexed `[μ][μ′]` by [`Channel`].
    pub chi: [[C64; 2]; 2],
}

impl ChannelWeights {
    pub fn new(params: &SystemParams) -> Self {
        let pi = std::f64::consts::PI;
        let gf = params.gamma_f() / pi;
        Self {
            chi: [
                [C64::new(params.gamma / pi, 0.0), gf],
                [gf.conj(), C64::new(params.kappa / pi, 0.0)],
            ],
        }
    }

    pub fn get(&self, mu: Channel, mu_prime: Channel) -> C64 {
        self.chi[mu.index()][mu_prime.index()]
    }
}

/// Which emission channels contribute to a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ChannelSelection {
    /// All four channel pairs, including the Fano cross terms.
    #[default]
    Total,
    /// The (a, a) term only.
    Cavity,
    /// The (σ, σ) term only.
    Tls,
}

impl ChannelSelection {
    pub fn pairs(self) -> &'static [(Channel, Channel)] {
        use Channel::{Cavity as A, Sigma as S};
        match self {
            Self::Total => &[(S, S), (S, A), (A, S), (A, A)],
            Self::Cavity => &[(A, A)],
            Self::Tls => &[(S, S)],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Total => "total",
            Self::Cavity => "cavity",
            Self::Tls => "tls",
        }
    }
}

impl fmt::Display for ChannelSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ChannelSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "total" => Ok(Self::Total),
            "cavity" => Ok(Self::Cavity),
            "tls" => Ok(Self::Tls),
            other => Err(Error::InvalidGrid(format!("unknown channel selection {other:?}"))),
        }
    }
}

/// S(ν, t, Γs) on a rectangular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    /// µeV.
    pub nu: UniformGrid,
    /// Natural units (µeV⁻¹).
    pub t: UniformGrid,
    /// Row-major over t: `values[it * nu.len() + inu]`.
    pub values: Vec<f64>,
    pub params: SystemParams,
    pub gamma_s: f64,
    pub channel: ChannelSelection,
    /// ∫ S dt from the last t to infinity, per ν, assuming no emission after
    /// the last t. Filled by the fast engine.
    pub tail: Option<Vec<f64>>,
}

impl Spectrogram {
    pub fn get(&self, inu: usize, it: usize) -> f64 {
        self.values[it * self.nu.len() + inu]
    }

    /// The spectrum over ν at time index `it`.
    pub fn at_time(&self, it: usize) -> &[f64] {
        let n = self.nu.len();
        &self.values[it * n..(it + 1) * n]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Fails if any value is below −`rel_tol`·max.
    pub fn check_non_negative(&self, rel_tol: f64) -> Result<()> {
        let tol = rel_tol * self.max().max(0.0);
        for it in 0..self.t.len() {
            for (inu, v) in self.at_time(it).iter().enumerate() {
                if *v < -tol {
                    return Err(Error::NegativeSpectrum {
                        value: *v,
                        tol,
                        nu: self.nu.point(inu),
                        t: self.t.point(it),
                    });
                }
            }
        }
        Ok(())
    }

    /// Long form, columns `nu_ueV, t_ps, S`.
    pub fn write_long_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "nu_ueV,t_ps,S")?;
        for it in 0..self.t.len() {
            let t = sci(natural_to_ps(self.t.point(it)));
            for (inu, v) in self.at_time(it).iter().enumerate() {
                writeln!(w, "{},{},{}", sci(self.nu.point(inu)), t, sci(*v))?;
            }
        }
        Ok(())
    }

    /// Matrix form: first row holds ν (µeV), first column t (ps).
    pub fn write_matrix_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "t_ps\\nu_ueV")?;
        for nu in self.nu.points() {
            write!(w, ",{}", sci(nu))?;
        }
        writeln!(w)?;
        for it in 0..self.t.len() {
            write!(w, "{}", sci(natural_to_ps(self.t.point(it))))?;
            for v in self.at_time(it) {
                write!(w, ",{}", sci(*v))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Key–value parameter snapshot for the sidecar file.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let p = &self.params;
        let mut m = params_metadata(p);
        m.extend([
            ("gamma_s_ueV".into(), sci(self.gamma_s)),
            ("channel".into(), self.channel.to_string()),
            ("nu_start_ueV".into(), sci(self.nu.start())),
            ("nu_step_ueV".into(), sci(self.nu.step())),
            ("nu_len".into(), self.nu.len().to_string()),
            ("t_start_ps".into(), sci(natural_to_ps(self.t.start()))),
            ("t_step_ps".into(), sci(natural_to_ps(self.t.step()))),
            ("t_len".into(), self.t.len().to_string()),
        ]);
        m
    }
}

/// The physical constants as sidecar key–value pairs (energies in µeV).
pub fn params_metadata(p: &SystemParams) -> Vec<(String, String)> {
    vec![
        ("g_mag_ueV".into(), sci(p.g_mag)),
        ("g_phase_rad".into(), sci(p.g_phase)),
        ("kappa_ueV".into(), sci(p.kappa)),
        ("gamma_ueV".into(), sci(p.gamma)),
        ("gamma_ph_ueV".into(), sci(p.gamma_ph)),
        ("eta".into(), sci(p.eta)),
        ("theta_rad".into(), sci(p.theta)),
        ("omega_21_ueV".into(), sci(p.omega_21)),
        ("omega_c_ueV".into(), sci(p.omega_c)),
    ]
}
