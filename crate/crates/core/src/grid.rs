//! Uniform sampling grids and time series.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Uniform, strictly positive wavenumber grid `k_j = k_min + j·spacing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavenumberGrid {
    k_min: f64,
    spacing: f64,
    n_points: usize,
}

impl WavenumberGrid {
    pub fn new(k_min: f64, k_max: f64, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(invalid("n_points", "wavenumber grid needs at least 2 points"));
        }
        if !(k_min.is_finite() && k_min > 0.0) {
            return Err(invalid("k_min", format!("must be > 0, got {k_min}")));
        }
        if !(k_max.is_finite() && k_max > k_min) {
            return Err(invalid("k_max", format!("must exceed k_min = {k_min}, got {k_max}")));
        }
        Ok(WavenumberGrid {
            k_min,
            spacing: (k_max - k_min) / (n_points - 1) as f64,
            n_points,
        })
    }

    /// Grid covering `[lo, hi]`; when `lo` is not positive the grid starts
    /// one spacing above zero instead.
    pub fn covering(lo: f64, hi: f64, n_points: usize) -> Result<Self> {
        if lo > 0.0 {
            Self::new(lo, hi, n_points)
        } else {
            Self::new(hi / n_points as f64, hi, n_points)
        }
    }

    pub fn k_min(&self) -> f64 {
        self.k_min
    }

    pub fn k_max(&self) -> f64 {
        self.k(self.n_points - 1)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn k(&self, j: usize) -> f64 {
        self.k_min + j as f64 * self.spacing
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.k(j)).collect()
    }

    /// Composite trapezoid weights.
    pub fn weights(&self) -> Vec<f64> {
        trapezoid_weights(self.n_points, self.spacing)
    }
}

/// Uniform time grid on `[t_min, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_min: f64,
    t_max: f64,
    n_points: usize,
}

impl TimeGrid {
    pub fn new(t_min: f64, t_max: f64, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(invalid("n_points", "time grid needs at least 2 points"));
        }
        if !(t_min.is_finite() && t_max.is_finite() && t_max > t_min) {
            return Err(invalid(
                "t_max",
                format!("need finite t_min < t_max, got [{t_min}, {t_max}]"),
            ));
        }
        Ok(TimeGrid {
            t_min,
            t_max,
            n_points,
        })
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.t_max - self.t_min) / (self.n_points - 1) as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.t_max
        } else {
            self.t_min + i as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.t(i)).collect()
    }

    /// Same grid with every coordinate multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> TimeGrid {
        TimeGrid {
            t_min: self.t_min * factor,
            t_max: self.t_max * factor,
            n_points: self.n_points,
        }
    }
}

/// Real samples on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(
                "values",
                format!("{} samples for a {}-point grid", values.len(), grid.len()),
            ));
        }
        Ok(TimeSeries { grid, values })
    }

    /// Samples `f` at every grid time.
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.points().into_iter().map(f).collect();
        TimeSeries { grid, values }
    }

    /// Builds a real series from complex samples, rejecting any sample whose
    /// imaginary part exceeds `1e-10` of the largest magnitude.
    pub fn from_complex(grid: TimeGrid, values: &[Complex64]) -> Result<Self> {
        let scale = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if let Some((index, z)) = values
            .iter()
            .enumerate()
            .find(|(_, z)| z.im.abs() > 1e-10 * scale)
        {
            return Err(invalid(
                "values",
                format!("sample {index} has imaginary part {:e} (scale {scale:e})", z.im),
            ));
        }
        Self::new(grid, values.iter().map(|z| z.re).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.points()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest absolute sample.
    pub fn peak(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    /// Time of the largest sample.
    pub fn argmax_time(&self) -> f64 {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });
        self.grid.t(i)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> TimeSeries {
        TimeSeries {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> TimeSeries {
        self.map(|v| v * factor)
    }

    /// `max |self - other| / peak(reference)`.
    pub fn sup_distance(&self, other: &TimeSeries, reference: &TimeSeries) -> f64 {
        let d = self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()));
        d / reference.peak()
    }
}

/// Composite trapezoid weights for `n` uniform samples with step `h`.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if let Some(first) = w.first_mut() {
        *first = 0.5 * h;
    }
    if let Some(last) = w.last_mut() {
        *last = 0.5 * h;
    }
    w
}

/// Composite trapezoid rule over the series.
pub fn trapezoid_integral(series: &TimeSeries) -> Result<f64> {
    if let Some((index, &value)) = series
        .values
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite())
    {
        return Err(Error::NonFinite { index, value });
    }
    Ok(trapezoid(&series.values, series.grid.step()))
}

pub(crate) fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => h * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn constant_integrand() {
        let g = TimeGrid::new(0.0, 2.0, 17).unwrap();
        let s = TimeSeries::from_fn(g, |_| 1.0);
        assert_relative_eq!(trapezoid_integral(&s).unwrap(), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn affine_is_exact() {
        for n in [2, 3, 10, 101] {
            let g = TimeGrid::new(0.0, 1.0, n).unwrap();
            let s = TimeSeries::from_fn(g, |t| t);
            assert_relative_eq!(trapezoid_integral(&s).unwrap(), 0.5, max_relative = 1e-14);
        }
    }

    #[test]
    fn gaussian_pulse_refinement() {
        let pulse = |t: f64| (-(t - 3.0).powi(2) / 0.5).exp();
        let coarse = TimeSeries::from_fn(TimeGrid::new(0.0, 6.0, 2001).unwrap(), pulse);
        let fine = TimeSeries::from_fn(TimeGrid::new(0.0, 6.0, 4001).unwrap(), pulse);
        let a = trapezoid_integral(&coarse).unwrap();
        let b = trapezoid_integral(&fine).unwrap();
        assert!((a - b).abs() / b < 1e-8);
    }

    #[test]
    fn non_finite_reports_index() {
        let g = TimeGrid::new(0.0, 1.0, 5).unwrap();
        let mut s = TimeSeries::from_fn(g, |t| t);
        s.values[3] = f64::NAN;
        match trapezoid_integral(&s) {
            Err(Error::NonFinite { index, .. }) => assert_eq!(index, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn grid_validation() {
        assert!(WavenumberGrid::new(0.0, 1.0, 10).is_err());
        assert!(WavenumberGrid::new(1.0, 0.5, 10).is_err());
        assert!(WavenumberGrid::new(1.0, 2.0, 1).is_err());
        assert!(TimeGrid::new(1.0, 1.0, 10).is_err());
        let g = WavenumberGrid::covering(-3.0, 10.0, 100).unwrap();
        assert!(g.k_min() > 0.0);
        assert_relative_eq!(g.k_max(), 10.0, max_relative = 1e-14);
    }

    #[test]
    fn complex_series_must_be_real() {
        let g = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let ok = [Complex64::new(1.0, 1e-12), Complex64::new(2.0, 0.0)];
        assert!(TimeSeries::from_complex(g, &ok).is_ok());
        let bad = [Complex64::new(1.0, 1e-3), Complex64::new(2.0, 0.0)];
        assert!(TimeSeries::from_complex(g, &bad).is_err());
    }

    proptest! {
        #[test]
        fn linearity(a in -10.0f64..10.0, b in -10.0f64..10.0, w in 0.1f64..5.0) {
            let g = TimeGrid::new(-1.0, 2.0, 301).unwrap();
            let f = TimeSeries::from_fn(g, |t| (w * t).sin());
            let h = TimeSeries::from_fn(g, |t| t * t - 1.0);
            let combo = TimeSeries::from_fn(g, |t| a * (w * t).sin() + b * (t * t - 1.0));
            let lhs = trapezoid_integral(&combo).unwrap();
            let rhs = a * trapezoid_integral(&f).unwrap() + b * trapezoid_integral(&h).unwrap();
            let scale = a.abs() * 3.0 + b.abs() * 6.0;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }
    }
}
