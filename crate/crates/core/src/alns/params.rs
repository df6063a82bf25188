use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tuning constants of the search. Defaults are the published settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlnsParams {
    /// Temperature multiplier applied every iteration.
    pub cooling: f64,
    /// A solution this fraction worse than the initial one is accepted with
    /// probability one half at the start temperature.
    pub start_temperature: f64,
    pub min_removal: f64,
    pub max_removal: f64,
    /// Iterations between weight updates.
    pub segment_size: usize,
    /// Non-improving iterations before the current solution is reset to the best.
    pub reset_after: usize,
    pub reaction: f64,
    pub reward_best: f64,
    pub reward_better: f64,
    pub reward_new: f64,
    pub worst_randomness: f64,
    pub shaw_distance: f64,
    pub shaw_time: f64,
    pub shaw_demand: f64,
    pub shaw_route: f64,
    pub shaw_randomness: f64,
    /// Average number of customers removed by string removal.
    pub sisr_avg_removed: f64,
    pub sisr_max_string: f64,
    /// Probability of stopping the growth of the preserved substring.
    pub sisr_split_depth: f64,
    /// Not used by the insertion operators here; kept for completeness.
    pub sisr_blink: f64,
    /// Relative jitter on insertion costs when ranking candidates in a noisy
    /// repair; feasibility and the penalty test always use exact costs.
    pub repair_noise: f64,
    /// Share of repair calls that use the jitter.
    pub noisy_repair_share: f64,
    pub max_iterations: usize,
    /// Wall-clock cap per solve, seconds.
    pub time_limit_secs: Option<f64>,
}

impl Default for AlnsParams {
    fn default() -> Self {
        AlnsParams {
            cooling: 0.9999,
            start_temperature: 0.015,
            min_removal: 0.05,
            max_removal: 0.35,
            segment_size: 125,
            reset_after: 5000,
            reaction: 0.1,
            reward_best: 33.0,
            reward_better: 9.0,
            reward_new: 13.0,
            worst_randomness: 4.0,
            shaw_distance: 9.0,
            shaw_time: 3.0,
            shaw_demand: 2.0,
            shaw_route: 5.0,
            shaw_randomness: 4.0,
            sisr_avg_removed: 10.0,
            sisr_max_string: 10.0,
            sisr_split_depth: 0.01,
            sisr_blink: 0.0,
            repair_noise: 0.25,
            noisy_repair_share: 0.5,
            max_iterations: 25_000,
            time_limit_secs: Some(30.0),
        }
    }
}

impl AlnsParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("alns: {m}")));
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return bad("cooling must lie in (0, 1)");
        }
        if !(self.min_removal > 0.0 && self.min_removal <= self.max_removal && self.max_removal <= 1.0) {
            return bad("removal fractions must satisfy 0 < min <= max <= 1");
        }
        if !(self.repair_noise >= 0.0 && (0.0..=1.0).contains(&self.noisy_repair_share)) {
            return bad("repair noise must be >= 0 and its share in [0, 1]");
        }
        if [self.reward_best, self.reward_better, self.reward_new].iter().any(|r| *r < 0.0) {
            return bad("rewards must be >= 0");
        }
        if !(self.reaction > 0.0 && self.reaction <= 1.0) {
            return bad("reaction must lie in (0, 1]");
        }
        if self.segment_size == 0 || self.reset_after == 0 {
            return bad("segment size and reset threshold must be positive");
        }
        if self.start_temperature < 0.0 {
            return bad("start temperature parameter must be >= 0");
        }
        if self.worst_randomness < 1.0 || self.shaw_randomness < 1.0 {
            return bad("randomization exponents must be >= 1");
        }
        if self.sisr_avg_removed < 1.0 || self.sisr_max_string < 1.0 {
            return bad("string removal sizes must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.sisr_split_depth) || !(0.0..=1.0).contains(&self.sisr_blink) {
            return bad("string removal probabilities must lie in [0, 1]");
        }
        if self.time_limit_secs.is_some_and(|t| !(t > 0.0)) {
            return bad("time limit must be positive");
        }
        Ok(())
    }

    /// Removal count bounds for `n` customers.
    pub fn removal_range(&self, n: usize) -> (usize, usize) {
        let lo = (self.min_removal * n as f64).ceil() as usize;
        let hi = (self.max_removal * n as f64).ceil() as usize;
        (lo.max(1).min(hi.max(1)), hi.max(1))
    }
}

/// Start temperature at which a solution `s·f(x)` worse than `f(x)` is
/// accepted with probability one half.
pub fn start_temperature(initial_cost: f64, s: f64) -> Result<f64> {
    if !(initial_cost > 0.0) {
        return Err(Error::Domain(format!(
            "start temperature needs a positive initial cost, got {initial_cost}"
        )));
    }
    Ok(-s * initial_cost / 0.5_f64.ln())
}

/// Probability of accepting a move `delta` worse at temperature `t`.
pub fn acceptance_probability(delta: f64, t: f64) -> f64 {
    if delta <= 0.0 {
        1.0
    } else if t <= 0.0 {
        0.0
    } else {
        (-delta / t).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        AlnsParams::default().validate().unwrap();
    }

    #[test]
    fn start_temperature_closed_form() {
        let t = start_temperature(1000.0, 0.015).unwrap();
        assert!((t - 21.640).abs() < 1e-3, "{t}");
        assert!((acceptance_probability(15.0, t) - 0.5).abs() < 1e-12);
        assert_eq!(start_temperature(1000.0, 0.0).unwrap(), 0.0);
        assert!(start_temperature(0.0, 0.015).is_err());
    }

    #[test]
    fn removal_range_for_hundred() {
        assert_eq!(AlnsParams::default().removal_range(100), (5, 35));
    }

    #[test]
    fn rejects_bad_cooling() {
        let p = AlnsParams {
            cooling: 1.0,
            ..AlnsParams::default()
        };
        assert!(p.validate().is_err());
    }
}
