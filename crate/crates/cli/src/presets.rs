//! Named scenario presets.

use std::f64::consts::{FRAC_PI_2, PI};

use cavity_trps::model::SystemParams;
use toml::Table;

use crate::config::{OutputsConfig, ParamsConfig, ScenarioConfig, TimeGrid};

const NAMES: [&str; 7] = [
    "fig1_res5",
    "fig1_res150",
    "fig1_res500",
    "fig2_correlations",
    "fig3_fano",
    "figS4_tls",
    "figS5_fphi",
];

pub fn names() -> &'static [&'static str] {
    &NAMES
}

/// One-line description for `list-presets`.
pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig1_res5" => "resonant strong coupling, |g| = 100, κ = 50, γ = 0.05 µeV; Γs = 5 µeV",
        "fig1_res150" => "as fig1_res5 with Γs = 150 µeV",
        "fig1_res500" => "as fig1_res5 with Γs = 500 µeV",
        "fig2_correlations" => "fig1 parameters, Γs = 5 µeV; cavity correlation traces and spectra at s = 10, 20, 60, 100 ps",
        "fig3_fano" => "Fano interference, |g| = 1, γ_ph = 30, η = 1, θ = π/2, ω21 − ωc = −70 µeV; Γs = 5, 50, 500 µeV",
        "figS4_tls" => "emitter alone, γ = 50 µeV; Γs = 5, 50, 500 µeV; spectra at early times for the satellite series",
        "figS5_fphi" => "one-sided Fourier probe F_φ for |g| = 100 µeV; Γs = 5, 150, 500 µeV; φ over [−π, π]",
        _ => return None,
    })
}

fn fig1_params() -> SystemParams {
    SystemParams {
        g_mag: 100.0,
        kappa: 50.0,
        gamma: 0.05,
        ..Default::default()
    }
}

fn base(name: &str, params: SystemParams, gamma_s: &[f64]) -> ScenarioConfig {
    let mut cfg = ScenarioConfig {
        preset: Some(name.into()),
        name: name.into(),
        params: ParamsConfig::from(params),
        model: Default::default(),
        spectrometer: Default::default(),
        grid: Default::default(),
        outputs: OutputsConfig::default(),
    };
    cfg.spectrometer.gamma_s = gamma_s.to_vec();
    cfg
}

fn t_grid(max: f64, points: usize) -> TimeGrid {
    TimeGrid {
        max,
        points,
        ..Default::default()
    }
}

/// The preset as an unresolved config.
pub fn preset(name: &str) -> Option<ScenarioConfig> {
    let cfg = match name {
        "fig1_res5" | "fig1_res150" | "fig1_res500" => {
            let gs: f64 = name.trim_start_matches("fig1_res").parse().expect("numeric suffix");
            let mut c = base(name, fig1_params(), &[gs]);
            c.grid.t = t_grid(200.0, 401);
            c.outputs.channels = vec!["cavity".into(), "tls".into(), "total".into()];
            c
        }
        "fig2_correlations" => {
            let mut c = base(name, fig1_params(), &[5.0]);
            c.grid.t = t_grid(100.0, 201);
            c.grid.tau = t_grid(120.0, 1201);
            let marks = vec![10.0, 20.0, 60.0, 100.0];
            c.outputs.channels = vec!["cavity".into()];
            c.outputs.slice_times_ps = marks.clone();
            c.outputs.correlation_times_ps = marks;
            c.outputs.correlation_pairs = vec!["cavity-cavity".into()];
            c
        }
        "fig3_fano" => {
            let p = SystemParams {
                g_mag: 1.0,
                kappa: 50.0,
                gamma: 0.05,
                gamma_ph: 30.0,
                eta: 1.0,
                theta: FRAC_PI_2,
                omega_21: -70.0,
                omega_c: 0.0,
                ..Default::default()
            };
            let mut c = base(name, p, &[5.0, 50.0, 500.0]);
            c.grid.t = t_grid(300.0, 601);
            c
        }
        "figS4_tls" => {
            let p = SystemParams {
                gamma: 50.0,
                ..Default::default()
            };
            let mut c = base(name, p, &[5.0, 50.0, 500.0]);
            c.grid.nu.half_width = vec![600.0, 600.0, 3000.0];
            c.grid.t = t_grid(100.0, 401);
            c.outputs.channels = vec!["tls".into()];
            c.outputs.slice_times_ps = vec![19.75, 39.5, 65.75];
            c
        }
        "figS5_fphi" => {
            let mut c = base(name, fig1_params(), &[5.0, 150.0, 500.0]);
            c.grid.t = t_grid(100.0, 201);
            c.outputs.spectrogram = false;
            c.outputs.time_integrated = false;
            c.outputs.energy_integrated = false;
            c.outputs.peaks = false;
            c.outputs.fano_phi = (-4..=4).map(|k| k as f64 * PI / 4.0).collect();
            c
        }
        _ => return None,
    };
    Some(cfg)
}

/// The preset as a TOML table, the bottom layer of a config.
pub fn table(name: &str) -> Option<Table> {
    let cfg = preset(name)?;
    Some(Table::try_from(cfg).expect("preset serializes"))
}
