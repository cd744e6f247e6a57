//! Local maxima, prominences and doublet/satellite spacings of a spectrum.

use crate::error::{Error, Result};
use crate::grid::UniformGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakOptions {
    /// Minimum prominence relative to the series maximum.
    pub min_prominence: f64,
    /// Only peaks whose grid point lies in [lo, hi] are reported.
    pub band: Option<(f64, f64)>,
}

impl Default for PeakOptions {
    fn default() -> Self {
        Self {
            min_prominence: 1e-3,
            band: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    /// Parabolic sub-grid estimate of the maximum.
    pub position: f64,
    pub height: f64,
    pub prominence: f64,
}

/// Peaks ordered by position.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakReport {
    pub peaks: Vec<Peak>,
}

impl PeakReport {
    pub fn count(&self) -> usize {
        self.peaks.len()
    }

    /// The highest peak.
    pub fn main(&self) -> &Peak {
        self.peaks
            .iter()
            .max_by(|a, b| a.height.total_cmp(&b.height))
            .expect("reports are never empty")
    }

    /// Distance between the two most prominent peaks, if there are two.
    pub fn doublet_separation(&self) -> Option<f64> {
        let mut by_prominence: Vec<&Peak> = self.peaks.iter().collect();
        by_prominence.sort_by(|a, b| b.prominence.total_cmp(&a.prominence));
        match by_prominence.as_slice() {
            [a, b, ..] => Some((a.position - b.position).abs()),
            _ => None,
        }
    }

    /// Positions of up to `count` peaks on one side of the main peak, nearest
    /// first. `upper` selects the side above the main peak.
    pub fn satellites(&self, upper: bool, count: usize) -> Vec<f64> {
        let main = self.main().position;
        let mut side: Vec<f64> = self
            .peaks
            .iter()
            .map(|p| p.position)
            .filter(|&x| if upper { x > main } else { x < main })
            .collect();
        side.sort_by(|a, b| (a - main).abs().total_cmp(&(b - main).abs()));
        side.truncate(count);
        side
    }

    /// Mean gap between adjacent satellites among the `count` nearest on one
    /// side of the main peak. Needs at least two satellites.
    pub fn satellite_spacing(&self, upper: bool, count: usize) -> Option<f64> {
        let side = self.satellites(upper, count);
        if side.len() < 2 {
            return None;
        }
        let span = (side[side.len() - 1] - side[0]).abs();
        Some(span / (side.len() - 1) as f64)
    }
}

fn prominence(values: &[f64], k: usize) -> f64 {
    let h = values[k];
    let mut left_min = h;
    for &v in values[..k].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &values[k + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Local maxima of `values` sampled on `grid`, filtered by prominence.
///
/// Plateaus count once, at their centre. Peaks on the grid edges are
/// excluded since their maximum is not bracketed.
pub fn analyze_peaks(values: &[f64], grid: &UniformGrid, options: PeakOptions) -> Result<PeakReport> {
    if values.len() != grid.len() {
        return Err(Error::InvalidGrid(format!(
            "{} values on a {}-point grid",
            values.len(),
            grid.len()
        )));
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = options.min_prominence * max.abs();
    let n = values.len();
    let mut peaks = Vec::new();
    let mut k = 1;
    while k + 1 < n {
        if values[k] > values[k - 1] {
            let mut end = k;
            while end + 1 < n && values[end + 1] == values[k] {
                end += 1;
            }
            if end + 1 < n && values[end + 1] < values[k] {
                let centre = (k + end) / 2;
                let prom = prominence(values, centre);
                let in_band = options.band.map_or(true, |(lo, hi)| {
                    let x = grid.point(centre);
                    lo <= x && x <= hi
                });
                if prom > threshold && prom > 0.0 && in_band {
                    peaks.push(Peak {
                        index: centre,
                        position: refine(values, grid, centre),
                        height: values[centre],
                        prominence: prom,
                    });
                }
            }
            k = end + 1;
        } else {
            k += 1;
        }
    }
    if peaks.is_empty() {
        return Err(Error::NoPeaks);
    }
    Ok(PeakReport { peaks })
}

fn refine(values: &[f64], grid: &UniformGrid, k: usize) -> f64 {
    let (a, b, c) = (values[k - 1], values[k], values[k + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom < 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    grid.point(k) + shift.clamp(-0.5, 0.5) * grid.step()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lorentz(x: f64, c: f64, w: f64) -> f64 {
        w / ((x - c).powi(2) + w * w)
    }

    #[test]
    fn single_lorentzian() {
        let g = UniformGrid::linspace(-100.0, 100.0, 401).unwrap();
        let v: Vec<f64> = g.points().iter().map(|&x| lorentz(x, 12.3, 5.0)).collect();
        let r = analyze_peaks(&v, &g, PeakOptions::default()).unwrap();
        assert_eq!(r.count(), 1);
        assert!((r.main().position - 12.3).abs() < g.step());
        assert_eq!(r.doublet_separation(), None);
    }

    #[test]
    fn symmetric_doublet() {
        let g = UniformGrid::linspace(-100.0, 100.0, 401).unwrap();
        let v: Vec<f64> = g
            .points()
            .iter()
            .map(|&x| lorentz(x, -40.0, 8.0) + lorentz(x, 40.0, 8.0))
            .collect();
        let r = analyze_peaks(&v, &g, PeakOptions::default()).unwrap();
        assert_eq!(r.count(), 2);
        let (a, b) = (r.peaks[0].height, r.peaks[1].height);
        assert!((a - b).abs() <= 1e-9 * a);
        assert!((r.doublet_separation().unwrap() - 80.0).abs() < g.step());
    }

    #[test]
    fn flat_input_has_no_peaks() {
        let g = UniformGrid::linspace(0.0, 1.0, 11).unwrap();
        assert!(matches!(
            analyze_peaks(&[1.0; 11], &g, PeakOptions::default()),
            Err(Error::NoPeaks)
        ));
    }

    #[test]
    fn satellites_are_found_outward() {
        let g = UniformGrid::linspace(-50.0, 50.0, 1001).unwrap();
        let v: Vec<f64> = g
            .points()
            .iter()
            .map(|&x| lorentz(x, 0.0, 1.0) + (1..4).map(|n| 0.1 * lorentz(x, 10.0 * n as f64, 1.0)).sum::<f64>())
            .collect();
        let r = analyze_peaks(&v, &g, PeakOptions::default()).unwrap();
        let spacing = r.satellite_spacing(true, 3).unwrap();
        assert!((spacing - 10.0).abs() < 0.2);
        assert!(r.satellites(false, 3).is_empty());
    }
}
