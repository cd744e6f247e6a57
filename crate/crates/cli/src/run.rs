//! Scenario orchestration: trajectory, spectra, reductions, correlations and
//! file emission.

use std::io::Write;
use std::path::Path;

use cavity_trps::correlations::{correlation_trace, rate_eigenvalues, CoefficientSet};
use cavity_trps::export::sci;
use cavity_trps::grid::UniformGrid;
use cavity_trps::model::{
    build_liouvillian, trajectory, trajectory_until_decayed, ExpectationTrajectory, ModelOptions, QuantumState,
    Truncation,
};
use cavity_trps::spectrum::{
    analyze_peaks, energy_integrated_intensity, fano_probe, fano_probe_closed_form, fano_probe_printed,
    params_metadata, time_integrated_spectrum, tls_trps, trajectory_step, trps, ChannelSelection, PeakOptions,
    PeakReport, SpectrometerParams, Spectrogram, TrpsOptions, HORIZON_THRESHOLD,
};
use cavity_trps::units::{natural_to_ps, period_ps, ps_to_natural};

use crate::config::{emit, parse_pair, ScenarioConfig};
use crate::error::CliError;
use crate::output::{emit_plot_scripts, FileKind, Manifest, Staging};

pub const NON_NEGATIVITY_TOL: f64 = 1e-6;
pub const ENERGY_IDENTITY_TOL: f64 = 1e-2;
pub const TRUNCATION_TOL: f64 = 1e-8;
pub const TLS_CLOSED_FORM_TOL: f64 = 1e-6;
pub const FANO_CLOSED_FORM_TOL: f64 = 1e-10;

/// Relative prominence for reported peaks.
pub const PEAK_PROMINENCE: f64 = 1e-6;

const MAX_HORIZON_STEPS: usize = 20_000_000;

/// A numerical check: passes when `value ≤ limit`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub limit: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.value <= self.limit
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    /// Every emitted file, relative to the output root.
    pub manifest: Manifest,
    pub checks: Vec<CheckResult>,
    pub warnings: Vec<String>,
    /// Derived scalars, also written to `scenario.meta`.
    pub summary: Vec<(String, String)>,
}

impl RunReport {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), sci)
}

/// Γs as a file-name tag: 5 → `gs5`, 0.5 → `gs0.5`.
pub fn gs_tag(gamma_s: f64) -> String {
    format!("gs{gamma_s}")
}

/// Mean spacing between adjacent maxima of a series, if it has two.
pub fn mean_peak_spacing(values: &[f64], grid: &UniformGrid) -> Option<f64> {
    let options = PeakOptions {
        min_prominence: 1e-9,
        band: None,
    };
    let report = analyze_peaks(values, grid, options).ok()?;
    let n = report.count();
    (n >= 2).then(|| (report.peaks[n - 1].position - report.peaks[0].position) / (n - 1) as f64)
}

fn initial_state(cfg: &ScenarioConfig, truncation: Truncation) -> cavity_trps::Result<QuantumState> {
    if cfg.model.initial_populations.is_empty() {
        Ok(QuantumState::excited(truncation))
    } else {
        QuantumState::from_populations(truncation, &cfg.model.initial_populations)
    }
}

struct Runner<'a> {
    cfg: &'a ScenarioConfig,
    stage: Staging,
    checks: Vec<CheckResult>,
    summary: Vec<(String, String)>,
}

impl Runner<'_> {
    fn num(&self) -> impl Fn(cavity_trps::Error) -> CliError + '_ {
        move |source| CliError::Numerical {
            scenario: self.cfg.name.clone(),
            source,
        }
    }

    fn check(&mut self, name: String, value: f64, limit: f64) {
        self.checks.push(CheckResult { name, value, limit });
    }

    fn note(&mut self, key: impl Into<String>, value: String) {
        self.summary.push((key.into(), value));
    }

    /// Sidecar pairs common to every product of the scenario.
    fn base_meta(&self) -> Vec<(String, String)> {
        let mut m = vec![
            ("scenario".into(), self.cfg.name.clone()),
            ("truncation".into(), self.cfg.model.truncation.clone()),
            ("fano_ordering".into(), self.cfg.model.fano_ordering.clone()),
        ];
        m.extend(params_metadata(&self.cfg.system()));
        m
    }
}

/// Runs `cfg` and writes `<out>/<name>/…` plus the root manifest.
///
/// Any error or failed check removes the partial output.
pub fn run_scenario(cfg: &ScenarioConfig, out: &Path) -> Result<RunReport, CliError> {
    let stage = Staging::new(out, &cfg.name)?;
    let mut r = Runner {
        cfg,
        stage,
        checks: Vec::new(),
        summary: Vec::new(),
    };
    let p = cfg.system();
    let gs_list = cfg.spectrometer.gamma_s.clone();
    let outputs = &cfg.outputs;
    let truncation = cfg.truncation();
    let options = ModelOptions {
        truncation,
        fano_ordering: cfg.fano_ordering(),
    };
    let lv = build_liouvillian(&p, options).map_err(r.num())?;
    let rho0 = initial_state(cfg, truncation).map_err(r.num())?;

    let t_out = UniformGrid::linspace(0.0, ps_to_natural(cfg.grid.t.max), cfg.grid.t.points).map_err(r.num())?;
    let dt_out = t_out.step();

    // One trajectory per Γs, on a step that divides the output step. State
    // invariants are checked at every output point.
    let mut runs: Vec<(ExpectationTrajectory, usize)> = Vec::with_capacity(gs_list.len());
    for &g in &gs_list {
        let stride = (dt_out / trajectory_step(&p, g)).ceil().max(1.0) as usize;
        let grid = UniformGrid::new(0.0, dt_out / stride as f64, (t_out.len() - 1) * stride + 1).map_err(r.num())?;
        let traj = trajectory(&lv, &rho0, &grid, stride).map_err(r.num())?;
        runs.push((traj, stride));
    }
    let finest = (0..runs.len()).max_by_key(|&k| runs[k].1).expect("at least one Γs");
    let (fine, fine_stride) = (&runs[finest].0, runs[finest].1);

    let rates = rate_eigenvalues(&p);
    r.note("gamma_plus_re_ueV", sci(rates.gamma_plus.re));
    r.note("gamma_plus_im_ueV", sci(rates.gamma_plus.im));
    r.note("gamma_minus_re_ueV", sci(rates.gamma_minus.re));
    r.note("gamma_minus_im_ueV", sci(rates.gamma_minus.im));
    r.note("doublet_splitting_ueV", sci(rates.splitting()));
    r.note("rabi_frequency_ueV", sci(p.rabi_frequency()));
    r.note("rabi_period_ps", sci(period_ps(p.rabi_frequency())));
    r.note("state_invariants_checked_every_ps", sci(natural_to_ps(dt_out)));

    let sample = |v: &[f64]| -> Vec<f64> { (0..t_out.len()).map(|k| v[k * fine_stride]).collect() };
    let n_cav = sample(&fine.n_cav);
    let t_ps_grid = UniformGrid::linspace(0.0, cfg.grid.t.max, t_out.len()).map_err(r.num())?;
    r.note("n_cav_period_ps", fmt_opt(mean_peak_spacing(&n_cav, &t_ps_grid)));

    if outputs.expectations {
        let n_tls = sample(&fine.n_tls);
        let coh: Vec<_> = (0..t_out.len()).map(|k| fine.coh[k * fine_stride]).collect();
        r.stage.write("expectations.csv", FileKind::Series, |w| {
            writeln!(w, "t_ps,n_cav,n_tls,re_sigma_plus_a,im_sigma_plus_a")?;
            for k in 0..t_out.len() {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    sci(natural_to_ps(t_out.point(k))),
                    sci(n_cav[k]),
                    sci(n_tls[k]),
                    sci(coh[k].re),
                    sci(coh[k].im)
                )?;
            }
            Ok(())
        })?;
    }

    if outputs.checks && truncation == Truncation::OnePhoton {
        let lv2 = build_liouvillian(
            &p,
            ModelOptions {
                truncation: Truncation::TwoPhoton,
                ..options
            },
        )
        .map_err(r.num())?;
        let rho2 = initial_state(cfg, Truncation::TwoPhoton).map_err(r.num())?;
        let wide = trajectory(&lv2, &rho2, &fine.grid, fine_stride).map_err(r.num())?;
        r.check("truncation_n2_vs_n1".into(), truncation_delta(fine, &wide), TRUNCATION_TOL);
    }

    let mut horizon: Option<ExpectationTrajectory> = None;
    for (k, &g) in gs_list.iter().enumerate() {
        let sp = SpectrometerParams::new(g).map_err(r.num())?;
        let (c, h) = cfg.nu_span(k);
        let nu = UniformGrid::linspace(c - h, c + h, cfg.grid.nu.points).map_err(r.num())?;
        let traj = &runs[k].0;
        for ch in cfg.channels() {
            let label = format!("{ch}_{}", gs_tag(g));
            let mut peak_series: Vec<(String, Option<f64>, Vec<f64>)> = Vec::new();
            if outputs.spectrogram {
                let opts = TrpsOptions {
                    channel: ch,
                    ..Default::default()
                };
                let sg = trps(&p, &sp, traj, &nu, &t_out, opts).map_err(r.num())?;
                emit_spectrogram(&mut r, &sg, &label, traj)?;
                for &s in &outputs.slice_times_ps {
                    let it = t_out.index_of(ps_to_natural(s)).expect("validated slice time");
                    let row = sg.at_time(it).to_vec();
                    r.stage.write(&format!("slice_{label}_t{s}.csv"), FileKind::Series, |w| {
                        writeln!(w, "nu_ueV,S")?;
                        for (i, v) in row.iter().enumerate() {
                            writeln!(w, "{},{}", sci(nu.point(i)), sci(*v))?;
                        }
                        Ok(())
                    })?;
                    peak_series.push((format!("slice_t{s}"), Some(s), row));
                }
            }
            if outputs.time_integrated {
                if horizon.is_none() {
                    horizon = Some(horizon_trajectory(&r, &lv, &rho0, &gs_list)?);
                }
                let hz = horizon.as_ref().expect("just built");
                let ti = time_integrated_spectrum(&p, &sp, hz, &nu, ch).map_err(r.num())?;
                r.stage.write(&format!("time_integrated_{label}.csv"), FileKind::Series, |w| {
                    writeln!(w, "nu_ueV,S_time_integrated")?;
                    for (i, v) in ti.iter().enumerate() {
                        writeln!(w, "{},{}", sci(nu.point(i)), sci(*v))?;
                    }
                    Ok(())
                })?;
                peak_series.push(("time_integrated".into(), None, ti));
            }
            if outputs.peaks && !peak_series.is_empty() {
                emit_peaks(&mut r, &label, &nu, &peak_series)?;
            }
        }
    }

    if !outputs.correlation_times_ps.is_empty() {
        emit_correlations(&mut r, fine)?;
    }
    if !outputs.fano_phi.is_empty() {
        emit_fano(&mut r)?;
    }

    for c in &r.checks {
        r.summary.push((
            format!("check.{}", c.name),
            format!("{} (limit {}, {})", sci(c.value), sci(c.limit), if c.passed() { "pass" } else { "FAIL" }),
        ));
    }
    let mut meta = r.base_meta();
    if let Some(preset) = &cfg.preset {
        meta.insert(1, ("preset".into(), preset.clone()));
    }
    meta.extend(r.summary.iter().cloned());
    r.stage.write_meta("scenario.meta", &meta)?;
    let text = emit(cfg);
    r.stage.write("config.toml", FileKind::Table, |w| w.write_all(text.as_bytes()))?;

    let scripts = emit_plot_scripts(r.stage.dir(), r.stage.manifest())?;
    r.stage.record(scripts.entries);

    if let Some(bad) = r.checks.iter().find(|c| !c.passed()) {
        return Err(CliError::CheckFailed {
            scenario: cfg.name.clone(),
            check: bad.name.clone(),
            detail: format!("{} exceeds {}", sci(bad.value), sci(bad.limit)),
        });
    }
    let Runner {
        stage, checks, summary, ..
    } = r;
    let manifest = stage.commit()?;
    Ok(RunReport {
        manifest,
        checks,
        warnings: scripts.warnings,
        summary,
    })
}

fn truncation_delta(a: &ExpectationTrajectory, b: &ExpectationTrajectory) -> f64 {
    let mut d: f64 = 0.0;
    for k in 0..a.len() {
        d = d
            .max((a.n_cav[k] - b.n_cav[k]).abs())
            .max((a.n_tls[k] - b.n_tls[k]).abs())
            .max((a.coh[k] - b.coh[k]).norm())
            .max((a.coh_conj_pair[k] - b.coh_conj_pair[k]).norm());
    }
    d
}

/// Long trajectory for the time-integrated spectrum. Its accuracy does not
/// depend on Γs, so one is shared by all resolutions.
fn horizon_trajectory(
    r: &Runner<'_>,
    lv: &cavity_trps::model::LiouvillianMatrix,
    rho0: &QuantumState,
    gs_list: &[f64],
) -> Result<ExpectationTrajectory, CliError> {
    let p = r.cfg.system();
    let gs_min = gs_list.iter().copied().fold(f64::INFINITY, f64::min);
    let dt = trajectory_step(&p, gs_min);
    trajectory_until_decayed(lv, rho0, dt, HORIZON_THRESHOLD, 0.0, 0.0, MAX_HORIZON_STEPS).map_err(r.num())
}

fn emit_spectrogram(
    r: &mut Runner<'_>,
    sg: &Spectrogram,
    label: &str,
    traj: &ExpectationTrajectory,
) -> Result<(), CliError> {
    let cfg = r.cfg;
    r.stage
        .write(&format!("spectrogram_{label}.csv"), FileKind::LongForm, |w| sg.write_long_csv(w))?;
    r.stage
        .write(&format!("spectrogram_{label}_matrix.csv"), FileKind::Matrix, |w| sg.write_matrix_csv(w))?;
    let mut meta = r.base_meta();
    let extra: Vec<_> = sg
        .metadata()
        .into_iter()
        .filter(|(k, _)| !meta.iter().any(|(b, _)| b == k))
        .collect();
    meta.extend(extra);
    r.stage.write_meta(&format!("spectrogram_{label}.meta"), &meta)?;

    if cfg.outputs.checks {
        let max = sg.max();
        let min = sg.values.iter().copied().fold(f64::INFINITY, f64::min);
        let negative = (-min).max(0.0) / max.max(f64::MIN_POSITIVE);
        r.check(format!("non_negativity_{label}"), negative, NON_NEGATIVITY_TOL);
        if sg.params.is_emitter_only() && sg.channel == ChannelSelection::Tls {
            let sp = SpectrometerParams::new(sg.gamma_s).map_err(r.num())?;
            let closed = tls_trps(&sg.params, &sp, &sg.nu, &sg.t).map_err(r.num())?;
            let dev = sg
                .values
                .iter()
                .zip(&closed.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                / closed.max().max(f64::MIN_POSITIVE);
            r.check(format!("tls_closed_form_{label}"), dev, TLS_CLOSED_FORM_TOL);
        }
    }

    if cfg.outputs.energy_integrated {
        let ei = energy_integrated_intensity(sg, traj).map_err(r.num())?;
        r.stage
            .write(&format!("energy_integrated_{label}.csv"), FileKind::Series, |w| {
                writeln!(w, "t_ps,quadrature,reference,out_of_band")?;
                for it in 0..sg.t.len() {
                    writeln!(
                        w,
                        "{},{},{},{}",
                        sci(natural_to_ps(sg.t.point(it))),
                        sci(ei.quadrature[it]),
                        sci(ei.reference[it]),
                        sci(ei.tails[it])
                    )?;
                }
                Ok(())
            })?;
        let t_ps = UniformGrid::linspace(0.0, cfg.grid.t.max, sg.t.len()).map_err(r.num())?;
        let mut meta = r.base_meta();
        meta.extend([
            ("gamma_s_ueV".into(), sci(sg.gamma_s)),
            ("channel".into(), sg.channel.to_string()),
            ("max_relative_deviation".into(), sci(ei.max_relative_deviation())),
            ("oscillation_period_ps".into(), fmt_opt(mean_peak_spacing(&ei.quadrature, &t_ps))),
        ]);
        r.stage.write_meta(&format!("energy_integrated_{label}.meta"), &meta)?;
        if cfg.outputs.checks {
            r.check(
                format!("energy_identity_{label}"),
                ei.max_relative_deviation(),
                ENERGY_IDENTITY_TOL,
            );
        }
    }
    Ok(())
}

fn emit_peaks(
    r: &mut Runner<'_>,
    label: &str,
    nu: &UniformGrid,
    series: &[(String, Option<f64>, Vec<f64>)],
) -> Result<(), CliError> {
    let options = PeakOptions {
        min_prominence: PEAK_PROMINENCE,
        band: None,
    };
    let reports: Vec<Option<PeakReport>> = series
        .iter()
        .map(|(_, _, v)| analyze_peaks(v, nu, options).ok())
        .collect();
    r.stage.write(&format!("peaks_{label}.csv"), FileKind::Table, |w| {
        writeln!(w, "series,position_ueV,height,prominence")?;
        for ((name, _, _), rep) in series.iter().zip(&reports) {
            for pk in rep.iter().flat_map(|r| &r.peaks) {
                writeln!(w, "{name},{},{},{}", sci(pk.position), sci(pk.height), sci(pk.prominence))?;
            }
        }
        Ok(())
    })?;
    let mut meta = r.base_meta();
    meta.push(("min_relative_prominence".into(), sci(PEAK_PROMINENCE)));
    for ((name, t, _), rep) in series.iter().zip(&reports) {
        let Some(rep) = rep else {
            meta.push((format!("{name}.peak_count"), "0".into()));
            continue;
        };
        meta.extend([
            (format!("{name}.peak_count"), rep.count().to_string()),
            (format!("{name}.main_position_ueV"), sci(rep.main().position)),
            (format!("{name}.doublet_separation_ueV"), fmt_opt(rep.doublet_separation())),
            (
                format!("{name}.satellite_spacing_upper_ueV"),
                fmt_opt(rep.satellite_spacing(true, 3)),
            ),
            (
                format!("{name}.satellite_spacing_lower_ueV"),
                fmt_opt(rep.satellite_spacing(false, 3)),
            ),
        ]);
        if let Some(t) = t {
            meta.push((
                format!("{name}.two_pi_over_t_ueV"),
                sci(std::f64::consts::TAU / ps_to_natural(*t)),
            ));
        }
    }
    r.stage.write_meta(&format!("peaks_{label}.meta"), &meta)
}

fn emit_correlations(r: &mut Runner<'_>, traj: &ExpectationTrajectory) -> Result<(), CliError> {
    let cfg = r.cfg;
    let coeffs = CoefficientSet::new(&cfg.system());
    let tau_max = ps_to_natural(cfg.grid.tau.max);
    let lags = UniformGrid::linspace(-tau_max, tau_max, cfg.grid.tau.points)
        .map_err(r.num())?
        .points();
    let mut meta = r.base_meta();
    meta.extend([
        ("quantity".into(), "<O_mu^dag(s + tau') O_mu'(s)>".into()),
        ("causal_window".into(), "-s < tau' < 0".into()),
        ("lag_interpolation".into(), "linear between trajectory points".into()),
    ]);
    for pair in &cfg.outputs.correlation_pairs {
        let (mu, mu_prime) = parse_pair(pair).expect("validated pair");
        for &s in &cfg.outputs.correlation_times_ps {
            let trace = correlation_trace(&coeffs, traj, mu, mu_prime, ps_to_natural(s), &lags).map_err(r.num())?;
            r.stage.write(
                &format!("correlation_{pair}_s{s}.csv"),
                FileKind::Correlation,
                |w| trace.write_csv(w),
            )?;
        }
    }
    r.stage.write_meta("correlations.meta", &meta)
}

fn emit_fano(r: &mut Runner<'_>) -> Result<(), CliError> {
    let cfg = r.cfg;
    let g = cfg.params.g_mag;
    let phis = cfg.outputs.fano_phi.clone();
    let options = PeakOptions {
        min_prominence: PEAK_PROMINENCE,
        band: None,
    };
    let mut rows: Vec<String> = Vec::new();
    let mut meta = vec![
        ("g_mag_ueV".into(), sci(g)),
        (
            "printed_form".into(),
            "real Lorentzians of half-width gamma_s with phase factors".into(),
        ),
        (
            "definition".into(),
            "one-sided Fourier integral; single complex poles of half-width gamma_s/2".into(),
        ),
    ];
    for (k, &gs) in cfg.spectrometer.gamma_s.iter().enumerate() {
        let (c, h) = cfg.nu_span(k);
        let nu = UniformGrid::linspace(c - h, c + h, cfg.grid.nu.points).map_err(r.num())?;
        let tag = gs_tag(gs);
        let mut quad_dev: f64 = 0.0;
        let mut printed_dev: f64 = 0.0;
        let mut probes = Vec::new();
        for &phi in &phis {
            let quad = fano_probe(g, gs, phi, &nu);
            let closed = fano_probe_closed_form(g, gs, phi, &nu);
            let printed = fano_probe_printed(g, gs, phi, &nu);
            let scale = closed.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
            quad_dev = quad_dev.max(
                quad.values
                    .iter()
                    .zip(&closed.values)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max)
                    / scale,
            );
            // Shapes compared after normalising each intensity to its maximum.
            let norm = |v: &[f64]| {
                let m = v.iter().copied().fold(0.0, f64::max);
                v.iter().map(|x| x / m).collect::<Vec<_>>()
            };
            let (a, b) = (norm(&closed.intensity), norm(&printed.intensity));
            printed_dev = printed_dev.max(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
            let sep = |v: &[f64]| analyze_peaks(v, &nu, options).ok().and_then(|r| r.doublet_separation());
            rows.push(format!(
                "{},{},{},{}",
                sci(gs),
                sci(phi),
                fmt_opt(sep(&quad.intensity)),
                fmt_opt(sep(&printed.intensity))
            ));
            probes.push((quad, closed, printed));
        }
        r.stage.write(&format!("fano_{tag}.csv"), FileKind::Table, |w| {
            writeln!(w, "phi,nu_ueV,re,im,intensity,intensity_closed_form,intensity_printed")?;
            for (quad, closed, printed) in &probes {
                for i in 0..nu.len() {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{}",
                        sci(quad.phi),
                        sci(nu.point(i)),
                        sci(quad.values[i].re),
                        sci(quad.values[i].im),
                        sci(quad.intensity[i]),
                        sci(closed.intensity[i]),
                        sci(printed.intensity[i])
                    )?;
                }
            }
            Ok(())
        })?;
        meta.push((format!("{tag}.quadrature_vs_closed_form"), sci(quad_dev)));
        meta.push((format!("{tag}.printed_vs_closed_form_normalized"), sci(printed_dev)));
        if cfg.outputs.checks {
            r.check(format!("fano_closed_form_{tag}"), quad_dev, FANO_CLOSED_FORM_TOL);
        }
    }
    r.stage.write("fano_separation.csv", FileKind::Table, |w| {
        writeln!(w, "gamma_s_ueV,phi,separation_ueV,separation_printed_ueV")?;
        for row in &rows {
            writeln!(w, "{row}")?;
        }
        Ok(())
    })?;
    r.stage.write_meta("fano_discrepancy.meta", &meta)
}
