use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Density values on a uniform grid `y_i = lo + i dx`.
///
/// Between nodes the density is the linear interpolant and it is zero outside
/// `[lo, hi]`; `cdf` integrates that interpolant exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    lo: f64,
    dx: f64,
    values: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DensityGrid {
    pub fn new(lo: f64, dx: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Usage("density grid needs at least two nodes".into()));
        }
        if !(dx > 0.0 && dx.is_finite() && lo.is_finite()) {
            return Err(Error::Usage("density grid needs finite lo and dx > 0".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Usage(
                "density values must be finite and nonnegative".into(),
            ));
        }
        let mut cumulative = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in values.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * dx;
            cumulative.push(acc);
        }
        Ok(DensityGrid {
            lo,
            dx,
            values,
            cumulative,
        })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.lo + self.dx * (self.values.len() - 1) as f64
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lo + self.dx * i as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| self.node(i))
    }

    /// Riemann mass `sum p_i dx`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dx
    }

    fn locate(&self, y: f64) -> Option<(usize, f64)> {
        if !(y >= self.lo && y <= self.hi()) {
            return None;
        }
        let s = (y - self.lo) / self.dx;
        let i = (s as usize).min(self.values.len() - 2);
        Some((i, s - i as f64))
    }

    pub fn pdf(&self, y: f64) -> f64 {
        match self.locate(y) {
            Some((i, f)) => self.values[i] * (1.0 - f) + self.values[i + 1] * f,
            None => 0.0,
        }
    }

    /// Integral of the interpolant up to `y`, normalised by its total.
    pub fn cdf(&self, y: f64) -> f64 {
        let total = *self.cumulative.last().unwrap();
        if total <= 0.0 {
            return 0.0;
        }
        if y <= self.lo {
            return 0.0;
        }
        if y >= self.hi() {
            return 1.0;
        }
        let (i, f) = self.locate(y).unwrap();
        let (a, b) = (self.values[i], self.values[i + 1]);
        let partial = self.dx * (a * f + 0.5 * (b - a) * f * f);
        ((self.cumulative[i] + partial) / total).clamp(0.0, 1.0)
    }

    /// Whether two grids share node geometry to rounding.
    pub fn same_geometry(&self, other: &DensityGrid) -> bool {
        self.values.len() == other.values.len()
            && (self.lo - other.lo).abs() <= 1e-9 * self.dx
            && (self.dx - other.dx).abs() <= 1e-12 * self.dx
    }
}
