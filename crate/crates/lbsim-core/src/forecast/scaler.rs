//! Min-max scaling of a univariate series onto `[0, 1]`.

use super::ForecastError;

/// Captured min/max of a fitted series.
///
/// A degenerate scaler (`max == min`) maps every value to 0 and inverts to
/// `min`, so constant series stay well-defined end to end.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesScaler {
    pub min: f64,
    pub max: f64,
}

impl SeriesScaler {
    pub fn fit(series: &[f64]) -> Result<Self, ForecastError> {
        if series.is_empty() {
            return Err(ForecastError::EmptySeries);
        }
        if series.iter().any(|v| !v.is_finite()) {
            return Err(ForecastError::NonFiniteInput);
        }
        let mut min = series[0];
        let mut max = series[0];
        for &v in &series[1..] {
            if v < min {
                min = v;
            }
            if v > max {
                max = v;
            }
        }
        Ok(Self { min, max })
    }

    pub fn apply(&self, v: f64) -> f64 {
        if self.max > self.min {
            (v - self.min) / (self.max - self.min)
        } else {
            0.0
        }
    }

    pub fn invert(&self, v: f64) -> f64 {
        if self.max > self.min {
            self.min + v * (self.max - self.min)
        } else {
            self.min
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_captures_extremes() {
        let s = SeriesScaler::fit(&[0.0, 5.0, 10.0]).unwrap();
        assert_eq!(s.min, 0.0);
        assert_eq!(s.max, 10.0);
        let s = SeriesScaler::fit(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!((s.min, s.max), (1.0, 3.0));
    }

    #[test]
    fn degenerate_series_maps_to_zero() {
        let s = SeriesScaler::fit(&[7.0, 7.0, 7.0]).unwrap();
        assert_eq!((s.min, s.max), (7.0, 7.0));
        assert_eq!(s.apply(7.0), 0.0);
        assert_eq!(s.invert(0.3), 7.0);
    }

    #[test]
    fn midpoint_maps_to_half() {
        let s = SeriesScaler::fit(&[0.0, 10.0]).unwrap();
        assert_eq!(s.apply(5.0), 0.5);
    }

    #[test]
    fn empty_series_errors() {
        assert_eq!(SeriesScaler::fit(&[]), Err(ForecastError::EmptySeries));
    }

    #[test]
    fn non_finite_errors() {
        assert_eq!(
            SeriesScaler::fit(&[1.0, f64::NAN]),
            Err(ForecastError::NonFiniteInput)
        );
    }
}
