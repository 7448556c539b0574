//! Mamdani inference: min firing, max aggregation, centroid defuzzification.

use super::membership::{InputPartition, TriangularMf};
use super::rules::{build_rule_base, RuleBase};
use super::FuzzyError;
use crate::domain::{LoadLevel, ServerId, ServerState};
use crate::forecast::ForecastVector;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

/// Four output membership functions over the class domain, one per level,
/// with evenly spaced strictly increasing centers.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputPartition {
    pub domain: (f64, f64),
    functions: [TriangularMf; 4],
    centers: [f64; 4],
}

impl Default for OutputPartition {
    fn default() -> Self {
        Self::new(-0.6, 0.4)
    }
}

impl OutputPartition {
    /// Evenly spaced triangles across `[lo, hi]` with shoulders at both
    /// ends, covering the whole domain.
    ///
    /// A level's *center* is its function's centroid, not its peak: the two
    /// coincide for the interior triangles, while the shoulder centroids
    /// sit a third of the way in. Centroid defuzzification can never reach
    /// the domain edges, so peak-based centers would squeeze the outer
    /// levels into slivers; centroid centers keep a fully fired shoulder
    /// rule landing exactly on its own center.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(hi > lo, "output domain must be non-empty");
        let step = (hi - lo) / 3.0;
        let peaks = [lo, lo + step, lo + 2.0 * step, hi];
        let functions = [
            TriangularMf::new(peaks[0], peaks[0], peaks[1]),
            TriangularMf::new(peaks[0], peaks[1], peaks[2]),
            TriangularMf::new(peaks[1], peaks[2], peaks[3]),
            TriangularMf::new(peaks[2], peaks[3], peaks[3]),
        ];
        let centers = core::array::from_fn(|k| {
            let f = &functions[k];
            (f.a + f.b + f.c) / 3.0
        });
        Self {
            domain: (lo, hi),
            functions,
            centers,
        }
    }

    pub fn function_for(&self, level: LoadLevel) -> &TriangularMf {
        &self.functions[level_index(level)]
    }

    pub fn center_for(&self, level: LoadLevel) -> f64 {
        self.centers[level_index(level)]
    }

    /// The level whose center lies nearest the crisp value; ties resolve to
    /// the lower level.
    pub fn nearest_level(&self, crisp: f64) -> LoadLevel {
        let mut best = LoadLevel::UnderLoad;
        let mut best_distance = f64::INFINITY;
        for level in LoadLevel::ALL {
            let distance = libm::fabs(crisp - self.center_for(level));
            if distance < best_distance {
                best = level;
                best_distance = distance;
            }
        }
        best
    }
}

fn level_index(level: LoadLevel) -> usize {
    match level {
        LoadLevel::UnderLoad => 0,
        LoadLevel::NormalLoad => 1,
        LoadLevel::HighlyLoad => 2,
        LoadLevel::OverLoad => 3,
    }
}

/// Result of one inference: the defuzzified class value and its level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Inference {
    pub crisp: f64,
    pub level: LoadLevel,
}

/// The complete inference system. Immutable after construction; inference
/// is pure.
#[derive(Clone, Debug, PartialEq)]
pub struct FuzzySystem {
    pub input: InputPartition,
    pub output: OutputPartition,
    pub rules: RuleBase,
    pub grid_points: usize,
}

pub const DEFAULT_GRID_POINTS: usize = 1001;

impl Default for FuzzySystem {
    fn default() -> Self {
        Self {
            input: InputPartition::default(),
            output: OutputPartition::default(),
            rules: build_rule_base(),
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

impl FuzzySystem {
    /// Classifies one forecast vector.
    ///
    /// Rule firing strength is the min of the four antecedent degrees; each
    /// rule clips its consequent function at its strength; the max over all
    /// rules is defuzzified by centroid on a fixed grid.
    pub fn infer(&self, forecast: &ForecastVector) -> Result<Inference, FuzzyError> {
        let degrees = [
            self.input.fuzzify(forecast.cpu)?,
            self.input.fuzzify(forecast.mem)?,
            self.input.fuzzify(forecast.disk)?,
            self.input.fuzzify(forecast.bw)?,
        ];

        // Strength per firing rule; the partition of unity guarantees at
        // least one rule fires.
        let mut firing: Vec<(f64, LoadLevel)> = Vec::new();
        for rule in self.rules.rules() {
            let mut strength = f64::INFINITY;
            for (input, term) in degrees.iter().zip(&rule.antecedent) {
                strength = strength.min(input[term.index()]);
            }
            if strength > 0.0 {
                firing.push((strength, rule.consequent));
            }
        }
        debug_assert!(!firing.is_empty());

        let (lo, hi) = self.output.domain;
        let steps = self.grid_points.max(2);
        let dx = (hi - lo) / (steps - 1) as f64;
        let mut weight_sum = 0.0;
        let mut moment_sum = 0.0;
        for k in 0..steps {
            let x = lo + dx * k as f64;
            let mut aggregate: f64 = 0.0;
            for &(strength, consequent) in &firing {
                let clipped = strength.min(self.output.function_for(consequent).degree(x));
                aggregate = aggregate.max(clipped);
            }
            weight_sum += aggregate;
            moment_sum += aggregate * x;
        }
        assert!(weight_sum > 0.0, "aggregate output collapsed to zero");
        let crisp = moment_sum / weight_sum;
        Ok(Inference {
            crisp,
            level: self.output.nearest_level(crisp),
        })
    }

    /// Convenience: the level alone.
    pub fn classify(&self, forecast: &ForecastVector) -> Result<LoadLevel, FuzzyError> {
        Ok(self.infer(forecast)?.level)
    }
}

/// Classifies every powered-on server from its forecast. Powered-off
/// servers carry no level; a powered-on server without a forecast is an
/// error.
pub fn classify_servers(
    system: &FuzzySystem,
    servers: &[ServerState],
    forecasts: &BTreeMap<ServerId, ForecastVector>,
) -> Result<BTreeMap<ServerId, LoadLevel>, FuzzyError> {
    let mut levels = BTreeMap::new();
    for server in servers.iter().filter(|s| s.powered_on) {
        let forecast = forecasts
            .get(&server.id())
            .ok_or(FuzzyError::MissingForecast { server: server.id() })?;
        levels.insert(server.id(), system.classify(forecast)?);
    }
    Ok(levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ServerSpec;
    use crate::fuzzy::LinguisticTerm;

    fn corner_value(term: LinguisticTerm) -> f64 {
        match term {
            LinguisticTerm::Low => 0.0,
            LinguisticTerm::Medium => 0.5,
            LinguisticTerm::High => 1.0,
        }
    }

    #[test]
    fn idle_corner_is_under_loaded() {
        let system = FuzzySystem::default();
        let inference = system.infer(&ForecastVector::new(0.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(inference.level, LoadLevel::UnderLoad);
        assert!(inference.crisp < -0.4);
        // A fully fired shoulder rule lands on its own center.
        let center = system.output.center_for(LoadLevel::UnderLoad);
        assert!((inference.crisp - center).abs() < 1e-3);
    }

    #[test]
    fn lightly_loaded_servers_stay_under_loaded() {
        let system = FuzzySystem::default();
        let inference = system.infer(&ForecastVector::new(0.05, 0.05, 0.05, 0.05)).unwrap();
        assert_eq!(inference.level, LoadLevel::UnderLoad);
    }

    #[test]
    fn saturated_corner_is_over_loaded() {
        let system = FuzzySystem::default();
        let inference = system.infer(&ForecastVector::new(1.0, 1.0, 1.0, 1.0)).unwrap();
        assert_eq!(inference.level, LoadLevel::OverLoad);
        assert!(inference.crisp > 0.25);
    }

    #[test]
    fn midpoint_is_normal_loaded() {
        let system = FuzzySystem::default();
        let inference = system.infer(&ForecastVector::new(0.5, 0.5, 0.5, 0.5)).unwrap();
        assert_eq!(inference.level, LoadLevel::NormalLoad);
    }

    #[test]
    fn every_prototype_corner_returns_its_rule_consequent() {
        let system = FuzzySystem::default();
        for rule in system.rules.rules() {
            let [c, m, d, b] = rule.antecedent;
            let forecast = ForecastVector::new(
                corner_value(c),
                corner_value(m),
                corner_value(d),
                corner_value(b),
            );
            let inference = system.infer(&forecast).unwrap();
            assert_eq!(
                inference.level, rule.consequent,
                "corner {:?} produced {} (crisp {})",
                rule.antecedent, inference.level, inference.crisp
            );
        }
    }

    #[test]
    fn crisp_output_stays_in_class_domain() {
        let system = FuzzySystem::default();
        let mut rng = crate::rng::SeededRng::new(31);
        for _ in 0..500 {
            let forecast = ForecastVector::new(
                rng.next_unit_f64(),
                rng.next_unit_f64(),
                rng.next_unit_f64(),
                rng.next_unit_f64(),
            );
            let inference = system.infer(&forecast).unwrap();
            assert!(inference.crisp >= -0.6 && inference.crisp <= 0.4);
        }
    }

    #[test]
    fn nearest_level_ties_resolve_downward() {
        let output = OutputPartition::default();
        let midpoint = (output.center_for(LoadLevel::UnderLoad)
            + output.center_for(LoadLevel::NormalLoad))
            / 2.0;
        assert_eq!(output.nearest_level(midpoint), LoadLevel::UnderLoad);
    }

    fn test_server(id: u32, powered_on: bool) -> ServerState {
        let mut s = ServerState::new(ServerSpec::new(ServerId(id), 1.0, 1.0, 1.0, 1.0));
        if !powered_on {
            s.power_off();
        }
        s
    }

    #[test]
    fn classify_servers_delegates_and_skips_off_servers() {
        let system = FuzzySystem::default();
        let servers = [test_server(1, true), test_server(2, false)];
        let mut forecasts = BTreeMap::new();
        forecasts.insert(ServerId(1), ForecastVector::new(0.0, 0.0, 0.0, 0.0));
        let levels = classify_servers(&system, &servers, &forecasts).unwrap();
        assert_eq!(levels.len(), 1);
        assert_eq!(levels[&ServerId(1)], LoadLevel::UnderLoad);
    }

    #[test]
    fn classify_servers_reports_missing_forecast_by_name() {
        let system = FuzzySystem::default();
        let servers = [test_server(3, true)];
        let err = classify_servers(&system, &servers, &BTreeMap::new()).unwrap_err();
        assert_eq!(err, FuzzyError::MissingForecast { server: ServerId(3) });
    }

    #[test]
    fn classify_servers_on_empty_domain_is_empty() {
        let system = FuzzySystem::default();
        let levels = classify_servers(&system, &[], &BTreeMap::new()).unwrap();
        assert!(levels.is_empty());
    }

    #[test]
    fn four_servers_at_prototype_corners_get_four_distinct_levels() {
        let system = FuzzySystem::default();
        let servers = [
            test_server(1, true),
            test_server(2, true),
            test_server(3, true),
            test_server(4, true),
        ];
        let mut forecasts = BTreeMap::new();
        forecasts.insert(ServerId(1), ForecastVector::new(0.0, 0.5, 0.0, 0.5));
        forecasts.insert(ServerId(2), ForecastVector::new(0.5, 0.5, 0.5, 0.0));
        forecasts.insert(ServerId(3), ForecastVector::new(1.0, 1.0, 0.0, 0.0));
        forecasts.insert(ServerId(4), ForecastVector::new(1.0, 1.0, 1.0, 0.5));
        let levels = classify_servers(&system, &servers, &forecasts).unwrap();
        assert_eq!(levels[&ServerId(1)], LoadLevel::UnderLoad);
        assert_eq!(levels[&ServerId(2)], LoadLevel::NormalLoad);
        assert_eq!(levels[&ServerId(3)], LoadLevel::HighlyLoad);
        assert_eq!(levels[&ServerId(4)], LoadLevel::OverLoad);
    }

    #[test]
    fn count_policy_prototype_corners_span_all_levels() {
        let system = FuzzySystem::default();
        let cases = [
            (ForecastVector::new(0.0, 0.5, 0.0, 0.5), LoadLevel::UnderLoad),
            (ForecastVector::new(0.5, 0.5, 0.5, 0.0), LoadLevel::NormalLoad),
            (ForecastVector::new(1.0, 1.0, 0.0, 0.0), LoadLevel::HighlyLoad),
            (ForecastVector::new(1.0, 1.0, 1.0, 0.5), LoadLevel::OverLoad),
        ];
        for (forecast, expected) in cases {
            assert_eq!(system.classify(&forecast).unwrap(), expected);
        }
    }
}
