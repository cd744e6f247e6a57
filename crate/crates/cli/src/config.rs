//! Scenario configuration: schema, layering, resolution and validation.
//!
//! A config is sectioned TOML. Values are layered as preset, then file, then
//! `--set key=value` overrides, and the result is resolved so that every
//! default is explicit. [`emit`] writes the resolved form back out;
//! loading that text again yields the same config.

use std::fmt;
use std::path::Path;

use cavity_trps::model::{FanoOrdering, SystemParams, Truncation};
use cavity_trps::spectrum::{required_band, ChannelSelection};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::presets;

pub const ENERGY_UNIT: &str = "µeV";
pub const TIME_UNIT: &str = "ps";

/// Points of the default ν grid.
pub const DEFAULT_NU_POINTS: usize = 601;

/// A schema violation, reported with the key path it concerns.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub spectrometer: SpectrometerConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

fn default_name() -> String {
    "scenario".into()
}

/// Physical constants, µeV and radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub g_mag: f64,
    pub g_phase: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub gamma_ph: f64,
    pub eta: f64,
    pub theta: f64,
    pub omega_21: f64,
    pub omega_c: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self::from(SystemParams::default())
    }
}

impl From<SystemParams> for ParamsConfig {
    fn from(p: SystemParams) -> Self {
        Self {
            g_mag: p.g_mag,
            g_phase: p.g_phase,
            kappa: p.kappa,
            gamma: p.gamma,
            gamma_ph: p.gamma_ph,
            eta: p.eta,
            theta: p.theta,
            omega_21: p.omega_21,
            omega_c: p.omega_c,
        }
    }
}

impl ParamsConfig {
    pub fn system(&self) -> SystemParams {
        SystemParams {
            g_mag: self.g_mag,
            g_phase: self.g_phase,
            kappa: self.kappa,
            gamma: self.gamma,
            gamma_ph: self.gamma_ph,
            eta: self.eta,
            theta: self.theta,
            omega_21: self.omega_21,
            omega_c: self.omega_c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// `n1` or `n2`.
    pub truncation: String,
    /// `excitation_conserving` or `as_written`.
    pub fano_ordering: String,
    /// Diagonal of the initial density matrix in basis order; empty means |e,0⟩.
    pub initial_populations: Vec<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            truncation: Truncation::default().label().into(),
            fano_ordering: FanoOrdering::default().label().into(),
            initial_populations: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrometerConfig {
    /// Resolutions Γs, µeV; one run per value.
    pub gamma_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub nu: NuGrid,
    pub t: TimeGrid,
    pub tau: TimeGrid,
}

/// ν grid, one half-width per Γs (a single value is shared).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NuGrid {
    pub unit: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    pub half_width: Vec<f64>,
    pub points: usize,
}

impl Default for NuGrid {
    fn default() -> Self {
        Self {
            unit: ENERGY_UNIT.into(),
            center: None,
            half_width: Vec::new(),
            points: DEFAULT_NU_POINTS,
        }
    }
}

/// Uniform time grid from 0 (or −max for lags) to `max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeGrid {
    pub unit: String,
    pub max: f64,
    pub points: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            unit: TIME_UNIT.into(),
            max: 100.0,
            points: 201,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputsConfig {
    pub expectations: bool,
    pub spectrogram: bool,
    /// Any of `total`, `cavity`, `tls`.
    pub channels: Vec<String>,
    /// Spectrum slices at these times (ps), each on the t grid.
    pub slice_times_ps: Vec<f64>,
    pub time_integrated: bool,
    pub energy_integrated: bool,
    pub peaks: bool,
    /// Emission times s (ps) of the correlation traces.
    pub correlation_times_ps: Vec<f64>,
    /// `mu-mu_prime` pairs over {tls, cavity}.
    pub correlation_pairs: Vec<String>,
    /// Phases φ of the one-sided Fourier probe; empty disables it.
    pub fano_phi: Vec<f64>,
    pub checks: bool,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        Self {
            expectations: true,
            spectrogram: true,
            channels: vec!["total".into()],
            slice_times_ps: Vec::new(),
            time_integrated: true,
            energy_integrated: true,
            peaks: true,
            correlation_times_ps: Vec::new(),
            correlation_pairs: vec!["cavity-cavity".into()],
            fano_phi: Vec::new(),
            checks: true,
        }
    }
}

impl ScenarioConfig {
    pub fn system(&self) -> SystemParams {
        self.params.system()
    }

    pub fn truncation(&self) -> Truncation {
        self.model.truncation.parse().expect("validated")
    }

    pub fn fano_ordering(&self) -> FanoOrdering {
        self.model.fano_ordering.parse().expect("validated")
    }

    pub fn channels(&self) -> Vec<ChannelSelection> {
        self.outputs
            .channels
            .iter()
            .map(|c| c.parse().expect("validated"))
            .collect()
    }

    /// ν centre and half-width for the `k`-th Γs.
    pub fn nu_span(&self, k: usize) -> (f64, f64) {
        (self.grid.nu.center.expect("resolved"), self.grid.nu.half_width[k])
    }
}

/// Half-width of the default ν grid: 3·max(2|g|, |ω_{c,21}| + Γ_tot, 2Γs).
pub fn default_half_width(p: &SystemParams, gamma_s: f64) -> f64 {
    let band = [2.0 * p.g_mag, p.omega_c21().abs() + p.gamma_tot(), 2.0 * gamma_s]
        .into_iter()
        .fold(0.0, f64::max);
    3.0 * band
}

/// Loads a preset by name or a config file by path, applies the overrides,
/// then resolves and validates.
pub fn load_config(source: &str, overrides: &[String]) -> Result<ScenarioConfig> {
    let mut table = if let Some(preset) = presets::table(source) {
        preset
    } else {
        let path = Path::new(source);
        let text = std::fs::read_to_string(path).map_err(|e| {
            let known = presets::names().join(", ");
            ConfigError::new("", format!("{source} is neither a preset ({known}) nor a readable file: {e}"))
        })?;
        layer_on_preset(parse_table(&text)?)?
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    from_table(table)
}

/// Parses config text on its own, with no file or override layering.
pub fn load_config_str(text: &str) -> Result<ScenarioConfig> {
    from_table(layer_on_preset(parse_table(text)?)?)
}

/// The resolved config as TOML.
pub fn emit(config: &ScenarioConfig) -> String {
    toml::to_string(config).expect("config serializes")
}

fn parse_table(text: &str) -> Result<Table> {
    text.parse::<Table>()
        .map_err(|e| ConfigError::new("", format!("not a valid config: {}", e.message())))
}

/// If the file names a preset, the file's keys are layered over it.
fn layer_on_preset(file: Table) -> Result<Table> {
    let Some(name) = file.get("preset") else {
        return Ok(file);
    };
    let name = name
        .as_str()
        .ok_or_else(|| ConfigError::new("preset", "expected a preset name"))?;
    let mut base = presets::table(name).ok_or_else(|| {
        ConfigError::new("preset", format!("unknown preset {name:?}; accepted: {}", presets::names().join(", ")))
    })?;
    merge(&mut base, file);
    Ok(base)
}

fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Applies `a.b.c=value`. The value is read as a TOML value, falling back to
/// a bare string.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::new(assignment, "override must look like key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::new(key, "malformed key path"));
    }
    let mut node = table;
    for p in &parts[..parts.len() - 1] {
        let entry = node
            .entry(p.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::new(key, format!("{p} is not a section")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn from_table(table: Table) -> Result<ScenarioConfig> {
    let mut cfg: ScenarioConfig = ScenarioConfig::deserialize(Value::Table(table))
        .map_err(|e| ConfigError::new("", e.message().to_string()))?;
    resolve(&mut cfg)?;
    validate(&cfg)?;
    Ok(cfg)
}

fn resolve(cfg: &mut ScenarioConfig) -> Result<()> {
    let p = cfg.system();
    let gs = &cfg.spectrometer.gamma_s;
    let nu = &mut cfg.grid.nu;
    if nu.center.is_none() {
        nu.center = Some(0.5 * (p.omega_21 + p.omega_c));
    }
    match nu.half_width.len() {
        0 => {
            let energy = cfg.outputs.energy_integrated;
            nu.half_width = gs
                .iter()
                .map(|&g| {
                    let w = default_half_width(&p, g);
                    if energy {
                        w.max(required_band(&p, g).1)
                    } else {
                        w
                    }
                })
                .collect()
        }
        1 if gs.len() > 1 => nu.half_width = vec![nu.half_width[0]; gs.len()],
        n if n != gs.len() => {
            return Err(ConfigError::new(
                "grid.nu.half_width",
                format!("{n} values for {} spectrometer resolutions; give one or one per gamma_s", gs.len()),
            ))
        }
        _ => {}
    }
    if cfg.outputs.correlation_times_ps.is_empty() {
        cfg.outputs.correlation_pairs.clear();
    }
    Ok(())
}

fn finite(key: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(key, format!("{v} is not a finite number")))
    }
}

fn in_range(key: &str, v: f64, lo: f64, hi: f64, range: &str) -> Result<()> {
    finite(key, v)?;
    if v < lo || v > hi {
        return Err(ConfigError::new(key, format!("{v} is outside the accepted range {range}")));
    }
    Ok(())
}

fn positive(key: &str, v: f64) -> Result<()> {
    finite(key, v)?;
    if v <= 0.0 {
        return Err(ConfigError::new(key, format!("{v} is outside the accepted range (0, ∞)")));
    }
    Ok(())
}

fn non_negative(key: &str, v: f64) -> Result<()> {
    in_range(key, v, 0.0, f64::INFINITY, "[0, ∞)")
}

fn validate(cfg: &ScenarioConfig) -> Result<()> {
    if cfg.name.is_empty()
        || !cfg
            .name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return Err(ConfigError::new(
            "name",
            format!("{:?} must be non-empty and use only [A-Za-z0-9_-]", cfg.name),
        ));
    }
    let p = &cfg.params;
    for (k, v) in [
        ("params.g_mag", p.g_mag),
        ("params.kappa", p.kappa),
        ("params.gamma", p.gamma),
        ("params.gamma_ph", p.gamma_ph),
    ] {
        non_negative(k, v)?;
    }
    in_range("params.eta", p.eta, 0.0, 1.0, "[0, 1]")?;
    for (k, v) in [
        ("params.g_phase", p.g_phase),
        ("params.theta", p.theta),
        ("params.omega_21", p.omega_21),
        ("params.omega_c", p.omega_c),
    ] {
        finite(k, v)?;
    }

    let truncation: Truncation = cfg
        .model
        .truncation
        .parse()
        .map_err(|_| ConfigError::new("model.truncation", format!("{:?}; accepted: n1, n2", cfg.model.truncation)))?;
    cfg.model.fano_ordering.parse::<FanoOrdering>().map_err(|_| {
        ConfigError::new(
            "model.fano_ordering",
            format!("{:?}; accepted: excitation_conserving, as_written", cfg.model.fano_ordering),
        )
    })?;
    let pops = &cfg.model.initial_populations;
    if !pops.is_empty() {
        if pops.len() > truncation.dim() {
            return Err(ConfigError::new(
                "model.initial_populations",
                format!("{} values for a {}-state basis", pops.len(), truncation.dim()),
            ));
        }
        for (i, v) in pops.iter().enumerate() {
            in_range(&format!("model.initial_populations[{i}]"), *v, 0.0, 1.0, "[0, 1]")?;
        }
        let sum: f64 = pops.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(ConfigError::new("model.initial_populations", format!("sum {sum} must be 1")));
        }
    }

    let gs = &cfg.spectrometer.gamma_s;
    if gs.is_empty() {
        return Err(ConfigError::new("spectrometer.gamma_s", "give at least one resolution (µeV)"));
    }
    for (i, g) in gs.iter().enumerate() {
        positive(&format!("spectrometer.gamma_s[{i}]"), *g)?;
    }

    let nu = &cfg.grid.nu;
    if nu.unit != ENERGY_UNIT {
        return Err(ConfigError::new("grid.nu.unit", format!("{:?}; accepted: {ENERGY_UNIT}", nu.unit)));
    }
    finite("grid.nu.center", nu.center.expect("resolved"))?;
    for (i, h) in nu.half_width.iter().enumerate() {
        positive(&format!("grid.nu.half_width[{i}]"), *h)?;
    }
    if nu.points < 3 {
        return Err(ConfigError::new("grid.nu.points", format!("{} is outside the accepted range [3, ∞)", nu.points)));
    }
    for (key, g, min) in [("grid.t", &cfg.grid.t, 2), ("grid.tau", &cfg.grid.tau, 3)] {
        if g.unit != TIME_UNIT {
            return Err(ConfigError::new(format!("{key}.unit"), format!("{:?}; accepted: {TIME_UNIT}", g.unit)));
        }
        positive(&format!("{key}.max"), g.max)?;
        if g.points < min {
            return Err(ConfigError::new(
                format!("{key}.points"),
                format!("{} is outside the accepted range [{min}, ∞)", g.points),
            ));
        }
    }

    let o = &cfg.outputs;
    if o.channels.is_empty() && (o.spectrogram || o.time_integrated) {
        return Err(ConfigError::new("outputs.channels", "list at least one of total, cavity, tls"));
    }
    for (i, c) in o.channels.iter().enumerate() {
        c.parse::<ChannelSelection>().map_err(|_| {
            ConfigError::new(format!("outputs.channels[{i}]"), format!("{c:?}; accepted: total, cavity, tls"))
        })?;
    }
    if o.energy_integrated && !o.spectrogram {
        return Err(ConfigError::new("outputs.energy_integrated", "requires outputs.spectrogram = true"));
    }
    if !o.slice_times_ps.is_empty() && !o.spectrogram {
        return Err(ConfigError::new("outputs.slice_times_ps", "requires outputs.spectrogram = true"));
    }
    if o.peaks && !(o.time_integrated || !o.slice_times_ps.is_empty()) {
        return Err(ConfigError::new(
            "outputs.peaks",
            "needs a series to analyse: enable time_integrated or list slice_times_ps",
        ));
    }
    let t = &cfg.grid.t;
    let dt = t.max / (t.points - 1) as f64;
    for (i, s) in o.slice_times_ps.iter().enumerate() {
        let key = format!("outputs.slice_times_ps[{i}]");
        in_range(&key, *s, 0.0, t.max, &format!("[0, {}] on the t grid", t.max))?;
        let k = s / dt;
        if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
            return Err(ConfigError::new(key, format!("{s} ps is not a point of the t grid (step {dt} ps)")));
        }
    }
    for (i, s) in o.correlation_times_ps.iter().enumerate() {
        in_range(
            &format!("outputs.correlation_times_ps[{i}]"),
            *s,
            0.0,
            t.max,
            &format!("[0, {}]", t.max),
        )?;
    }
    for (i, pair) in o.correlation_pairs.iter().enumerate() {
        parse_pair(pair).ok_or_else(|| {
            ConfigError::new(
                format!("outputs.correlation_pairs[{i}]"),
                format!("{pair:?}; accepted: mu-mu_prime with mu, mu_prime in {{tls, cavity}}"),
            )
        })?;
    }
    for (i, phi) in o.fano_phi.iter().enumerate() {
        finite(&format!("outputs.fano_phi[{i}]"), *phi)?;
    }

    if o.energy_integrated {
        let sp = cfg.system();
        for (k, g) in gs.iter().enumerate() {
            let (centre, need) = required_band(&sp, *g);
            let (c, h) = cfg.nu_span(k);
            let slack = 1e-9 * need;
            if c - h > centre - need + slack || c + h < centre + need - slack {
                return Err(ConfigError::new(
                    format!("grid.nu.half_width[{k}]"),
                    format!(
                        "the ν grid [{}, {}] must cover [{}, {}] for the energy-integrated intensity at gamma_s = {g}",
                        c - h,
                        c + h,
                        centre - need,
                        centre + need
                    ),
                ));
            }
        }
    }
    Ok(())
}

/// `tls-cavity` → (Sigma, Cavity).
pub fn parse_pair(s: &str) -> Option<(cavity_trps::model::Channel, cavity_trps::model::Channel)> {
    use cavity_trps::model::Channel;
    let one = |x: &str| match x {
        "tls" => Some(Channel::Sigma),
        "cavity" => Some(Channel::Cavity),
        _ => None,
    };
    let (a, b) = s.split_once('-')?;
    Some((one(a)?, one(b)?))
}
