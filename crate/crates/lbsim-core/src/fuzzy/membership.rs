//! Triangular membership functions and the three-term input partition.

use super::FuzzyError;

/// Triangular membership with breakpoints `a <= b <= c`; degree peaks at 1
/// over `b` and is 0 outside `[a, c]`. Degenerate edges (`a == b` or
/// `b == c`) form left/right shoulders.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangularMf {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl TriangularMf {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        assert!(a <= b && b <= c, "triangular breakpoints must be ordered");
        Self { a, b, c }
    }

    pub fn degree(&self, v: f64) -> f64 {
        if v < self.a || v > self.c {
            0.0
        } else if v == self.b {
            1.0
        } else if v < self.b {
            (v - self.a) / (self.b - self.a)
        } else {
            (self.c - v) / (self.c - self.b)
        }
    }
}

/// The low/medium/high partition of one input's `[0, 1]` domain.
///
/// The default breakpoints form a partition of unity: the three degrees sum
/// to 1 everywhere, so at least one rule always fires downstream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InputPartition {
    pub low: TriangularMf,
    pub medium: TriangularMf,
    pub high: TriangularMf,
}

impl Default for InputPartition {
    fn default() -> Self {
        Self {
            low: TriangularMf::new(0.0, 0.0, 0.5),
            medium: TriangularMf::new(0.0, 0.5, 1.0),
            high: TriangularMf::new(0.5, 1.0, 1.0),
        }
    }
}

impl InputPartition {
    /// Degrees for (low, medium, high). The input must lie in `[0, 1]`.
    pub fn fuzzify(&self, v: f64) -> Result<[f64; 3], FuzzyError> {
        if !(0.0..=1.0).contains(&v) {
            return Err(FuzzyError::OutOfDomain { value: v });
        }
        Ok([
            self.low.degree(v),
            self.medium.degree(v),
            self.high.degree(v),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corners_belong_fully_to_their_term() {
        let p = InputPartition::default();
        assert_eq!(p.fuzzify(0.0).unwrap(), [1.0, 0.0, 0.0]);
        assert_eq!(p.fuzzify(0.5).unwrap(), [0.0, 1.0, 0.0]);
        assert_eq!(p.fuzzify(1.0).unwrap(), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn midpoint_of_upper_half_splits_evenly() {
        let p = InputPartition::default();
        let [low, medium, high] = p.fuzzify(0.75).unwrap();
        assert_eq!(low, 0.0);
        assert!((medium - 0.5).abs() < 1e-12);
        assert!((high - 0.5).abs() < 1e-12);
    }

    #[test]
    fn out_of_domain_is_rejected() {
        let p = InputPartition::default();
        assert!(matches!(
            p.fuzzify(-0.01),
            Err(FuzzyError::OutOfDomain { .. })
        ));
        assert!(matches!(p.fuzzify(1.01), Err(FuzzyError::OutOfDomain { .. })));
    }

    #[test]
    fn default_partition_sums_to_one_on_a_fine_grid() {
        let p = InputPartition::default();
        for k in 0..=1000 {
            let v = k as f64 / 1000.0;
            let degrees = p.fuzzify(v).unwrap();
            let sum: f64 = degrees.iter().sum();
            assert!(
                (sum - 1.0).abs() < 1e-9,
                "partition of unity broken at {v}: {sum}"
            );
            assert!(degrees.iter().all(|&d| (0.0..=1.0).contains(&d)));
        }
    }

    #[test]
    fn degenerate_shoulders_peak_at_their_edge() {
        let left = TriangularMf::new(0.0, 0.0, 1.0);
        assert_eq!(left.degree(0.0), 1.0);
        assert_eq!(left.degree(1.0), 0.0);
        let right = TriangularMf::new(0.0, 1.0, 1.0);
        assert_eq!(right.degree(1.0), 1.0);
        assert_eq!(right.degree(0.0), 0.0);
    }
}
