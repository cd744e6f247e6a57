//! File emission: the staging directory, the manifest and plot scripts.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Name of the manifest at the output root.
pub const MANIFEST_FILE: &str = "manifest.sha256";

/// What a file holds; decides which plot script, if any, it gets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    /// Spectrogram in matrix form: heat map.
    Matrix,
    /// Spectrogram in long form; no script.
    LongForm,
    /// Columns over a shared first column: line plot.
    Series,
    /// Correlation trace: real/imaginary overlay.
    Correlation,
    /// Tabular report; no script.
    Table,
    Meta,
    Plot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Relative to the manifest root, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub kind: FileKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.path.as_str())
    }

    pub fn of_kind(&self, kind: FileKind) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.kind == kind)
    }

    /// `sha256sum`-compatible lines, sorted by path.
    pub fn to_text(&self) -> String {
        let mut lines: Vec<String> = self
            .entries
            .iter()
            .map(|e| format!("{}  {}", e.sha256, e.path))
            .collect();
        lines.sort_by(|a, b| a[66..].cmp(&b[66..]));
        lines.into_iter().map(|l| l + "\n").collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A scenario directory under construction. Files are written into a hidden
/// sibling and moved into place by [`Staging::commit`]; dropping an
/// uncommitted stage removes it.
pub struct Staging {
    root: PathBuf,
    name: String,
    dir: PathBuf,
    manifest: Manifest,
    committed: bool,
}

impl Staging {
    pub fn new(root: &Path, name: &str) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(io_err(root))?;
        let dir = root.join(format!(".{name}.partial"));
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(io_err(&dir))?;
        }
        fs::create_dir(&dir).map_err(io_err(&dir))?;
        Ok(Self {
            root: root.to_path_buf(),
            name: name.to_string(),
            dir,
            manifest: Manifest::default(),
            committed: false,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes `file` from whatever `fill` produces and records it.
    pub fn write<F>(&mut self, file: &str, kind: FileKind, fill: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> io::Result<()>,
    {
        let path = self.dir.join(file);
        let mut buf = Vec::new();
        fill(&mut buf).map_err(io_err(&path))?;
        fs::write(&path, &buf).map_err(io_err(&path))?;
        self.manifest.entries.push(ManifestEntry {
            path: file.to_string(),
            sha256: sha256_hex(&buf),
            kind,
        });
        Ok(())
    }

    /// Key = value sidecar.
    pub fn write_meta(&mut self, file: &str, pairs: &[(String, String)]) -> Result<(), CliError> {
        self.write(file, FileKind::Meta, |w| write_pairs(w, pairs))
    }

    /// Files written so far, relative to the scenario directory.
    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    /// Adds entries written by someone else into the stage.
    pub fn record(&mut self, entries: Vec<ManifestEntry>) {
        self.manifest.entries.extend(entries);
    }

    /// Moves the stage to `<root>/<name>` and updates the root manifest.
    /// Returns the scenario's entries relative to the root.
    pub fn commit(mut self) -> Result<Manifest, CliError> {
        let target = self.root.join(&self.name);
        if target.exists() {
            fs::remove_dir_all(&target).map_err(io_err(&target))?;
        }
        fs::rename(&self.dir, &target).map_err(io_err(&target))?;
        self.committed = true;
        let prefix = format!("{}/", self.name);
        let scenario = Manifest {
            entries: self
                .manifest
                .entries
                .iter()
                .map(|e| ManifestEntry {
                    path: format!("{prefix}{}", e.path),
                    ..e.clone()
                })
                .collect(),
        };
        update_root_manifest(&self.root, &prefix, &scenario)?;
        Ok(scenario)
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.dir);
        }
    }
}

/// Replaces the lines of one scenario in the root manifest, keeping others.
fn update_root_manifest(root: &Path, prefix: &str, scenario: &Manifest) -> Result<(), CliError> {
    let path = root.join(MANIFEST_FILE);
    let mut lines: Vec<String> = match fs::read_to_string(&path) {
        Ok(text) => text
            .lines()
            .filter(|l| l.get(66..).is_some_and(|p| !p.starts_with(prefix)))
            .map(str::to_string)
            .collect(),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(io_err(&path)(e)),
    };
    lines.extend(scenario.to_text().lines().map(str::to_string));
    lines.sort_by(|a, b| a[66..].cmp(&b[66..]));
    let mut text = lines.join("\n");
    text.push('\n');
    fs::write(&path, text).map_err(io_err(&path))
}

pub fn write_pairs(w: &mut impl Write, pairs: &[(String, String)]) -> io::Result<()> {
    for (k, v) in pairs {
        writeln!(w, "{k} = {v}")?;
    }
    Ok(())
}

/// Plot scripts written for a manifest.
#[derive(Debug, Clone, Default)]
pub struct PlotScripts {
    pub entries: Vec<ManifestEntry>,
    pub warnings: Vec<String>,
}

fn axis_label(column: &str) -> String {
    match column {
        "nu_ueV" => "ν (µeV)".into(),
        "t_ps" => "t (ps)".into(),
        "tau_prime_ps" => "τ′ (ps)".into(),
        "phi" => "φ (rad)".into(),
        "gamma_s_ueV" => "Γs (µeV)".into(),
        other => other.into(),
    }
}

fn header(path: &Path) -> Result<Vec<String>, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let first = text.lines().next().unwrap_or_default();
    Ok(first.split(',').map(str::to_string).collect())
}

/// Writes a `.plot` script next to every matrix, series and correlation file
/// in `manifest` (paths relative to `root`). Scripts hold file references and
/// axis labels only; normalisation is left to the plotter.
pub fn emit_plot_scripts(root: &Path, manifest: &Manifest) -> Result<PlotScripts, CliError> {
    let mut out = PlotScripts::default();
    if manifest.entries.is_empty() {
        out.warnings.push("empty manifest: no plot scripts written".into());
        return Ok(out);
    }
    for e in &manifest.entries {
        let data = root.join(&e.path);
        if !data.is_file() {
            return Err(CliError::DanglingReference(e.path.clone()));
        }
        let file_name = e.path.rsplit('/').next().unwrap_or(&e.path);
        let mut lines: Vec<(String, String)> = Vec::new();
        match e.kind {
            FileKind::Matrix => {
                lines.extend([
                    ("type".into(), "heatmap".into()),
                    ("data".into(), file_name.into()),
                    ("layout".into(), "first row x, first column y".into()),
                    ("x_label".into(), axis_label("nu_ueV")),
                    ("y_label".into(), axis_label("t_ps")),
                    ("z_label".into(), "S (arb. units)".into()),
                    ("normalize".into(), "max".into()),
                ]);
            }
            FileKind::Series => {
                let cols = header(&data)?;
                lines.extend([
                    ("type".into(), "line".into()),
                    ("data".into(), file_name.into()),
                    ("x".into(), cols[0].clone()),
                    ("y".into(), cols[1..].join(", ")),
                    ("x_label".into(), axis_label(&cols[0])),
                ]);
            }
            FileKind::Correlation => {
                let cols = header(&data)?;
                lines.extend([
                    ("type".into(), "overlay".into()),
                    ("data".into(), file_name.into()),
                    ("x".into(), cols[0].clone()),
                    ("y".into(), "re, im".into()),
                    ("shade".into(), "in_causal_window".into()),
                    ("x_label".into(), axis_label(&cols[0])),
                ]);
            }
            _ => continue,
        }
        let stem = e.path.rsplit_once('.').map_or(e.path.as_str(), |(s, _)| s);
        let script = format!("{stem}.plot");
        let mut buf = Vec::new();
        write_pairs(&mut buf, &lines).map_err(io_err(&data))?;
        let path = root.join(&script);
        fs::write(&path, &buf).map_err(io_err(&path))?;
        out.entries.push(ManifestEntry {
            path: script,
            sha256: sha256_hex(&buf),
            kind: FileKind::Plot,
        });
    }
    if out.entries.is_empty() {
        out.warnings.push("manifest has no plottable files".into());
    }
    Ok(out)
}
