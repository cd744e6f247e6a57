use crate::error::{Error, Result};

/// Uniformly spaced sample points `start + k·step`, `k = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    start: f64,
    step: f64,
    len: usize,
}

impl UniformGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(start.is_finite() && step.is_finite()) {
            return Err(Error::InvalidGrid("non-finite start or step".into()));
        }
        if len == 0 {
            return Err(Error::InvalidGrid("empty grid".into()));
        }
        if len > 1 && step <= 0.0 {
            return Err(Error::InvalidGrid(format!("step must be positive, got {step}")));
        }
        Ok(Self { start, step, len })
    }

    /// `len` points covering `[lo, hi]` inclusive.
    pub fn linspace(lo: f64, hi: f64, len: usize) -> Result<Self> {
        if len < 2 {
            return Self::new(lo, 0.0, len);
        }
        if hi <= lo {
            return Err(Error::InvalidGrid(format!("empty interval [{lo}, {hi}]")));
        }
        Self::new(lo, (hi - lo) / (len - 1) as f64, len)
    }

    /// Validates an explicit list of points as a uniform grid.
    pub fn from_points(points: &[f64]) -> Result<Self> {
        match points {
            [] => Err(Error::InvalidGrid("empty grid".into())),
            [x] => Self::new(*x, 0.0, 1),
            _ => {
                let n = points.len();
                let step = (points[n - 1] - points[0]) / (n - 1) as f64;
                let tol = 1e-9 * step.abs().max(points[0].abs().max(points[n - 1].abs()) * 1e-6);
                for (k, &p) in points.iter().enumerate() {
                    if (p - (points[0] + k as f64 * step)).abs() > tol.max(1e-9 * step) {
                        return Err(Error::InvalidGrid(format!(
                            "point {k} = {p} breaks uniform spacing"
                        )));
                    }
                }
                Self::new(points[0], step, n)
            }
        }
    }

    #[inline]
    pub fn start(&self) -> f64 {
        self.start
    }

    #[inline]
    pub fn step(&self) -> f64 {
        self.step
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn point(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.point(k)).collect()
    }

    /// Index of the grid point equal to `t` up to a relative tolerance of the step.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        if self.len == 1 {
            return ((t - self.start).abs() <= 1e-12 * self.start.abs().max(1.0)).then_some(0);
        }
        let x = (t - self.start) / self.step;
        let k = x.round();
        if k < 0.0 || k > (self.len - 1) as f64 || (x - k).abs() > 1e-6 {
            return None;
        }
        Some(k as usize)
    }
}
