//! Adaptive crossover and mutation probabilities.
//!
//! Individuals at or above the population mean get a rate that shrinks as
//! their fitness approaches the population maximum, protecting good
//! solutions; below-mean individuals get the upper bound. Results are always
//! clamped into `[p2, p1]`.

use serde::{Deserialize, Serialize};

use super::evolve::GaParams;
use crate::error::{Error, Result};

/// Relative gap below which `f_max` and `f_mean` count as equal.
const DEGENERATE_SPREAD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateFormula {
    /// `((p1 - p2) / p1) * (f_max - f) / (f_max - f_mean)`, then clamped.
    #[default]
    Scaled,
    /// `p1 - (p1 - p2) * (f - f_mean) / (f_max - f_mean)`, the usual
    /// linear interpolation between the bounds.
    Interpolated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationStats {
    pub f_max: f64,
    pub f_mean: f64,
}

impl PopulationStats {
    pub fn new(f_max: f64, f_mean: f64) -> Result<Self> {
        if !(f_max.is_finite() && f_mean.is_finite() && f_mean > 0.0 && f_max >= f_mean) {
            return Err(Error::invalid(format!(
                "population stats need finite 0 < f_mean <= f_max, got max {f_max} mean {f_mean}"
            )));
        }
        Ok(PopulationStats { f_max, f_mean })
    }

    pub fn from_fitness(fitness: &[f64]) -> Result<Self> {
        if fitness.is_empty() {
            return Err(Error::invalid("empty population"));
        }
        let max = fitness.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = fitness.iter().sum::<f64>() / fitness.len() as f64;
        // Summation error can push the mean of a uniform population past its max.
        Self::new(max, mean.min(max))
    }

    fn is_degenerate(&self) -> bool {
        self.f_max - self.f_mean <= DEGENERATE_SPREAD * self.f_max.abs()
    }
}

/// Unclamped value of the scaled formula. Not meaningful when
/// `f_max == f_mean`.
pub fn raw_adaptive_rate(p1: f64, p2: f64, stats: &PopulationStats, f: f64) -> f64 {
    (p1 - p2) / p1 * (stats.f_max - f) / (stats.f_max - stats.f_mean)
}

fn adaptive_rate(
    p1: f64,
    p2: f64,
    stats: &PopulationStats,
    f: f64,
    formula: RateFormula,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&p1) || !(0.0..=p1).contains(&p2) {
        return Err(Error::InvalidParams(format!(
            "rate bounds must satisfy 0 <= p2 <= p1 <= 1, got p1 {p1} p2 {p2}"
        )));
    }
    if formula == RateFormula::Scaled && p1 == 0.0 {
        return Err(Error::InvalidParams(
            "upper rate bound p1 must be positive".into(),
        ));
    }
    if stats.is_degenerate() || f < stats.f_mean {
        return Ok(p1);
    }
    let raw = match formula {
        RateFormula::Scaled => raw_adaptive_rate(p1, p2, stats, f),
        RateFormula::Interpolated => {
            p1 - (p1 - p2) * (f - stats.f_mean) / (stats.f_max - stats.f_mean)
        }
    };
    Ok(raw.clamp(p2, p1))
}

/// Crossover probability for a pair whose fitter parent has fitness `f_prime`.
pub fn adaptive_crossover_rate(
    stats: &PopulationStats,
    f_prime: f64,
    params: &GaParams,
) -> Result<f64> {
    adaptive_rate(
        params.p_c1,
        params.p_c2,
        stats,
        f_prime,
        params.rate_formula,
    )
}

/// Mutation probability for an individual of fitness `f`.
pub fn adaptive_mutation_rate(stats: &PopulationStats, f: f64, params: &GaParams) -> Result<f64> {
    adaptive_rate(params.p_m1, params.p_m2, stats, f, params.rate_formula)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> GaParams {
        GaParams {
            p_c1: 0.9,
            p_c2: 0.6,
            p_m1: 0.1,
            p_m2: 0.01,
            ..GaParams::default()
        }
    }

    #[test]
    fn crossover_examples() {
        let p = params();
        let s = PopulationStats::new(2.0, 1.0).unwrap();
        assert_eq!(adaptive_crossover_rate(&s, 2.0, &p).unwrap(), 0.6);
        // raw 0.3 / 0.9 = 0.333 is below the floor
        assert!((raw_adaptive_rate(0.9, 0.6, &s, 1.0) - 0.3 / 0.9).abs() < 1e-12);
        assert_eq!(adaptive_crossover_rate(&s, 1.0, &p).unwrap(), 0.6);
        let flat = PopulationStats::new(1.5, 1.5).unwrap();
        assert_eq!(adaptive_crossover_rate(&flat, 1.5, &p).unwrap(), 0.9);
    }

    #[test]
    fn mutation_examples() {
        let p = params();
        let s = PopulationStats::new(2.0, 1.0).unwrap();
        assert_eq!(adaptive_mutation_rate(&s, 2.0, &p).unwrap(), 0.01);
        // raw 0.09 / 0.1 = 0.9 is above the ceiling
        assert!((raw_adaptive_rate(0.1, 0.01, &s, 1.0) - 0.9).abs() < 1e-12);
        assert_eq!(adaptive_mutation_rate(&s, 1.0, &p).unwrap(), 0.1);
        let flat = PopulationStats::new(1.5, 1.5).unwrap();
        assert_eq!(adaptive_mutation_rate(&flat, 1.5, &p).unwrap(), 0.1);
    }

    #[test]
    fn below_mean_gets_upper_bound() {
        let p = params();
        let s = PopulationStats::new(2.0, 1.0).unwrap();
        assert_eq!(adaptive_crossover_rate(&s, 0.5, &p).unwrap(), 0.9);
        assert_eq!(adaptive_mutation_rate(&s, 0.5, &p).unwrap(), 0.1);
    }

    #[test]
    fn zero_upper_bound_is_rejected() {
        let p = GaParams {
            p_c1: 0.0,
            p_c2: 0.0,
            ..params()
        };
        let s = PopulationStats::new(2.0, 1.0).unwrap();
        assert!(matches!(
            adaptive_crossover_rate(&s, 1.5, &p),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn interpolated_formula_spans_band() {
        let p = GaParams {
            rate_formula: RateFormula::Interpolated,
            ..params()
        };
        let s = PopulationStats::new(2.0, 1.0).unwrap();
        assert!((adaptive_crossover_rate(&s, 1.0, &p).unwrap() - 0.9).abs() < 1e-12);
        assert!((adaptive_crossover_rate(&s, 1.5, &p).unwrap() - 0.75).abs() < 1e-12);
        assert!((adaptive_crossover_rate(&s, 2.0, &p).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn stats_from_uniform_population_are_degenerate() {
        let f = vec![0.1; 30];
        let s = PopulationStats::from_fitness(&f).unwrap();
        assert!(s.f_mean <= s.f_max);
        assert_eq!(adaptive_crossover_rate(&s, 0.1, &params()).unwrap(), 0.9);
        assert!(PopulationStats::from_fitness(&[]).is_err());
        assert!(PopulationStats::new(1.0, 2.0).is_err());
    }

    proptest! {
        #[test]
        fn rates_stay_in_band(
            mean in 0.001..10.0f64,
            spread in 0.0..10.0f64,
            t in 0.0..=1.0f64,
            p1 in 0.001..=1.0f64,
            frac in 0.0..=1.0f64,
            interpolated in any::<bool>(),
        ) {
            let s = PopulationStats::new(mean + spread, mean).unwrap();
            let p = GaParams {
                p_c1: p1, p_c2: p1 * frac, p_m1: p1, p_m2: p1 * frac,
                rate_formula: if interpolated { RateFormula::Interpolated } else { RateFormula::Scaled },
                ..GaParams::default()
            };
            let f = (mean + spread) * t;
            let c = adaptive_crossover_rate(&s, f, &p).unwrap();
            let m = adaptive_mutation_rate(&s, f, &p).unwrap();
            prop_assert!(c >= p.p_c2 && c <= p.p_c1);
            prop_assert!(m >= p.p_m2 && m <= p.p_m1);
        }
    }
}
