//! Sample average approximation over fleet mixes.
//!
//! Each mix is priced by solving sampled operational periods until the
//! confidence half-width of the mean cost is small enough, then ranked by
//! total cost of ownership. Sample `i` always uses the same scenario for every
//! mix (common random numbers) unless independent sampling is requested.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::alns::{self, AlnsParams};
use crate::energy::PowerContext;
use crate::eval::OperationalProblem;
use crate::model::{FleetMix, Instance, Powertrain, Scenario};
use crate::rng::{derive_seed, Stream};
use crate::scen::{Sampler, ScenarioSampler, TemperatureModel};
use crate::{Error, Result};

/// When to stop drawing samples for one mix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HalfWidthCriterion {
    Absolute { epsilon: f64 },
    /// Half-width at most `epsilon` times the running mean.
    Relative { epsilon: f64 },
    Fixed { n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationPolicy {
    pub confidence: f64,
    pub criterion: HalfWidthCriterion,
    pub min_samples: usize,
    pub max_samples: usize,
    /// Samples solved between criterion checks. Results do not depend on it.
    pub batch_size: usize,
    pub common_random_numbers: bool,
    /// Attempts per sample slot before the whole estimate fails.
    pub max_resamples: usize,
}

impl Default for EstimationPolicy {
    fn default() -> Self {
        EstimationPolicy {
            confidence: 0.95,
            criterion: HalfWidthCriterion::Relative { epsilon: 0.02 },
            min_samples: 30,
            max_samples: 1000,
            batch_size: 16,
            common_random_numbers: true,
            max_resamples: 10,
        }
    }
}

impl EstimationPolicy {
    pub fn fixed(n: usize) -> Self {
        EstimationPolicy {
            criterion: HalfWidthCriterion::Fixed { n },
            min_samples: n.min(2),
            max_samples: n,
            ..EstimationPolicy::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::Config(format!("confidence {} must lie in (0, 1)", self.confidence)));
        }
        match self.criterion {
            HalfWidthCriterion::Absolute { epsilon } | HalfWidthCriterion::Relative { epsilon } if !(epsilon > 0.0) => {
                return Err(Error::Config(format!("half-width epsilon {epsilon} must be positive")));
            }
            HalfWidthCriterion::Fixed { n } if n == 0 || n > self.max_samples => {
                return Err(Error::Config(format!("fixed sample size {n} must lie in 1..=max_samples")));
            }
            _ => {}
        }
        if self.min_samples > self.max_samples || self.max_samples == 0 {
            return Err(Error::Config(format!(
                "need 0 < max_samples and min_samples <= max_samples, got {} and {}",
                self.min_samples, self.max_samples
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        Ok(())
    }

    fn satisfied(&self, n: usize, mean: f64, half_width: f64) -> bool {
        match self.criterion {
            HalfWidthCriterion::Fixed { n: target } => n >= target,
            _ if n < self.min_samples.max(2) => false,
            HalfWidthCriterion::Absolute { epsilon } => half_width <= epsilon,
            HalfWidthCriterion::Relative { epsilon } => half_width <= epsilon * mean.abs(),
        }
    }
}

/// Number of operational periods in the strategic horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonSpec {
    /// Distinct kinds of period (for example shifts with different duty).
    pub varieties: f64,
    pub periods_per_variety: f64,
}

impl HorizonSpec {
    /// 10.6 years of 227 working days with two shifts each.
    pub fn region_h() -> Self {
        HorizonSpec {
            varieties: 1.0,
            periods_per_variety: 10.6 * 227.0 * 2.0,
        }
    }

    /// 10.6 years of 227 working days with one shift each.
    pub fn mth() -> Self {
        HorizonSpec {
            varieties: 1.0,
            periods_per_variety: 10.6 * 227.0,
        }
    }

    pub fn periods(&self) -> f64 {
        self.varieties * self.periods_per_variety
    }

    pub fn validate(&self) -> Result<()> {
        if self.varieties >= 1.0 && self.periods_per_variety >= 1.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("horizon counts must be >= 1, got {self:?}")))
        }
    }
}

pub fn tco(acquisition: f64, mean_operational: f64, horizon: &HorizonSpec) -> f64 {
    acquisition + horizon.periods() * mean_operational
}

/// Quantile of Student's t distribution.
pub fn t_quantile(p: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df)
        .expect("positive degrees of freedom")
        .inverse_cdf(p)
}

/// Sample mean and half-width of the two-sided `confidence` interval.
pub fn mean_half_width(values: &[f64], confidence: f64) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::INFINITY);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return (mean, 0.0);
    }
    let t = t_quantile(0.5 * (1.0 + confidence), (n - 1) as f64);
    (mean, t * var.sqrt() / (n as f64).sqrt())
}

/// Outcome of solving one sampled period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodOutcome {
    pub cost: f64,
    pub served_demand: f64,
    /// Total cargo capacity of the vehicles that served at least one customer.
    pub capacity_used: f64,
    pub unserved: usize,
}

impl PeriodOutcome {
    /// Served demand over the capacity of the vehicles used; zero when no
    /// vehicle left the depot.
    pub fn fill_rate(&self) -> f64 {
        if self.capacity_used > 0.0 {
            self.served_demand / self.capacity_used
        } else {
            0.0
        }
    }
}

/// Solves one operational period for a fixed fleet.
pub trait OperationalSolver: Sync {
    fn solve(&self, instance: &Instance, fleet: &FleetMix, scenario: &Scenario, seed: u64) -> Result<PeriodOutcome>;
}

/// The ALNS heuristic, with the solution re-checked by the evaluator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AlnsSolver {
    pub params: AlnsParams,
    pub power: PowerContext,
}

impl OperationalSolver for AlnsSolver {
    fn solve(&self, instance: &Instance, fleet: &FleetMix, scenario: &Scenario, seed: u64) -> Result<PeriodOutcome> {
        let problem = OperationalProblem::new(instance, scenario, &self.power)?;
        let out = alns::solve(&problem, fleet, &self.params, seed)?;
        let report = problem.evaluate_solution(fleet, &out.solution)?;
        if let Some(v) = report.violations.first() {
            return Err(Error::Validation(format!("solver produced an infeasible route: {v}")));
        }
        let capacity_used = out
            .solution
            .routes
            .iter()
            .filter(|r| r.serves_customers(instance))
            .map(|r| instance.vehicle_type(r.vehicle).cargo_capacity)
            .sum();
        Ok(PeriodOutcome {
            cost: report.costs.total,
            served_demand: report.served_demand,
            capacity_used,
            unserved: out.solution.unserved.len(),
        })
    }
}

/// One line of the audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample: usize,
    /// Index passed to the sampler; differs from `sample` after a resample.
    pub scenario_index: u64,
    pub temperature: f64,
    pub requested: usize,
    pub cost: f64,
    pub served_demand: f64,
    pub capacity_used: f64,
    pub unserved: usize,
    pub failures: usize,
}

impl SampleRecord {
    pub fn fill_rate(&self) -> f64 {
        PeriodOutcome {
            cost: self.cost,
            served_demand: self.served_demand,
            capacity_used: self.capacity_used,
            unserved: self.unserved,
        }
        .fill_rate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
    pub failures: usize,
    pub samples: Vec<SampleRecord>,
}

/// Everything a run needs besides the instance.
pub struct Estimator<'s> {
    pub sampler: &'s dyn ScenarioSampler,
    pub solver: &'s dyn OperationalSolver,
    pub policy: EstimationPolicy,
    pub seed: u64,
}

impl Estimator<'_> {
    fn scenario_seed(&self, mix_index: usize) -> u64 {
        if self.policy.common_random_numbers {
            self.seed
        } else {
            derive_seed(self.seed, Stream::Scenario, 1 + mix_index as u64)
        }
    }

    fn solve_slot(&self, instance: &Instance, fleet: &FleetMix, mix_index: usize, slot: usize) -> Result<SampleRecord> {
        let master = self.scenario_seed(mix_index);
        let mut last_err = None;
        for attempt in 0..=self.policy.max_resamples {
            // Retries live in a separate index range so other slots keep their scenarios.
            let index = slot as u64 | ((attempt as u64) << 32);
            let scenario = self.sampler.sample(master, index)?;
            let solver_seed = derive_seed(self.seed, Stream::Solver, index);
            match self.solver.solve(instance, fleet, &scenario, solver_seed) {
                Ok(out) => {
                    return Ok(SampleRecord {
                        sample: slot,
                        scenario_index: index,
                        temperature: scenario.temperature,
                        requested: scenario.requests.iter().filter(|&&r| r == 1).count(),
                        cost: out.cost,
                        served_demand: out.served_demand,
                        capacity_used: out.capacity_used,
                        unserved: out.unserved,
                        failures: attempt,
                    })
                }
                Err(e) => {
                    log::warn!("mix {mix_index}, sample {slot}: solver failed ({e}); resampling");
                    last_err = Some(e);
                }
            }
        }
        Err(last_err.expect("at least one attempt"))
    }

    fn solve_batch(&self, instance: &Instance, fleet: &FleetMix, mix_index: usize, slots: std::ops::Range<usize>) -> Result<Vec<SampleRecord>> {
        #[cfg(feature = "parallel")]
        let out = slots
            .into_par_iter()
            .map(|s| self.solve_slot(instance, fleet, mix_index, s))
            .collect();
        #[cfg(not(feature = "parallel"))]
        let out = slots.map(|s| self.solve_slot(instance, fleet, mix_index, s)).collect();
        out
    }

    /// Sample-average operational cost of `fleet`. Stops at the first sample
    /// count meeting the policy, independent of batch size.
    pub fn estimate(&self, instance: &Instance, fleet: &FleetMix, mix_index: usize) -> Result<Estimate> {
        self.policy.validate()?;
        fleet.validate(instance)?;
        let mut records: Vec<SampleRecord> = Vec::new();
        let mut costs: Vec<f64> = Vec::new();
        while records.len() < self.policy.max_samples {
            let start = records.len();
            let end = (start + self.policy.batch_size).min(self.policy.max_samples);
            for r in self.solve_batch(instance, fleet, mix_index, start..end)? {
                costs.push(r.cost);
                records.push(r);
            }
            for n in start + 1..=end {
                let (mean, hw) = mean_half_width(&costs[..n], self.policy.confidence);
                if self.policy.satisfied(n, mean, hw) {
                    records.truncate(n);
                    return Ok(finish(records, self.policy.confidence));
                }
            }
        }
        Ok(finish(records, self.policy.confidence))
    }
}

fn finish(samples: Vec<SampleRecord>, confidence: f64) -> Estimate {
    let costs: Vec<f64> = samples.iter().map(|s| s.cost).collect();
    let (mean, half_width) = mean_half_width(&costs, confidence);
    Estimate {
        mean,
        half_width,
        n: samples.len(),
        failures: samples.iter().map(|s| s.failures).sum(),
        samples,
    }
}

/// Per-type count range used when enumerating mixes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeRange {
    pub vehicle_type: String,
    #[serde(default)]
    pub min: usize,
    /// Defaults to the number of vehicles of this type in the master list.
    #[serde(default)]
    pub max: Option<usize>,
    #[serde(default = "one")]
    pub step: usize,
}

fn one() -> usize {
    1
}

/// Types whose counts must add up to `total`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SumGroup {
    pub types: Vec<String>,
    pub total: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixGrid {
    /// Types without an entry range over every count available.
    pub ranges: Vec<TypeRange>,
    pub total_cap: Option<usize>,
    pub sum_groups: Vec<SumGroup>,
}

impl MixGrid {
    pub fn region_h() -> Self {
        MixGrid {
            total_cap: Some(15),
            ..MixGrid::default()
        }
    }

    /// Electric vans in steps of five out of the small-vehicle drivers, the
    /// rest small combustion vans, large vans fixed.
    pub fn mth(small_drivers: usize, large: usize) -> Self {
        MixGrid {
            ranges: vec![
                TypeRange {
                    vehicle_type: "ev".into(),
                    min: 0,
                    max: Some(small_drivers),
                    step: 5,
                },
                TypeRange {
                    vehicle_type: "large_icev".into(),
                    min: large,
                    max: Some(large),
                    step: 1,
                },
            ],
            total_cap: None,
            sum_groups: vec![SumGroup {
                types: vec!["ev".into(), "small_icev".into()],
                total: small_drivers,
            }],
        }
    }
}

/// Every count vector allowed by `grid`, first type outermost and counts
/// ascending. A range also includes its maximum when the step skips it.
pub fn enumerate_mixes(instance: &Instance, grid: &MixGrid) -> Result<Vec<Vec<usize>>> {
    if instance.vehicles.is_empty() {
        return Ok(Vec::new());
    }
    let available = FleetMix::all(instance).counts(instance);
    let mut values: Vec<Vec<usize>> = available.iter().map(|&a| (0..=a).collect()).collect();
    for r in &grid.ranges {
        let t = instance
            .type_index(&r.vehicle_type)
            .ok_or_else(|| Error::Config(format!("unknown vehicle type {:?} in mix grid", r.vehicle_type)))?;
        if r.step == 0 {
            return Err(Error::Config(format!("step for {:?} must be positive", r.vehicle_type)));
        }
        let max = r.max.unwrap_or(available[t]);
        if max > available[t] || r.min > max {
            return Err(Error::Config(format!(
                "range {}..={} for {:?} does not fit the {} available",
                r.min, max, r.vehicle_type, available[t]
            )));
        }
        let mut v: Vec<usize> = (r.min..=max).step_by(r.step).collect();
        if v.last() != Some(&max) {
            v.push(max);
        }
        values[t] = v;
    }
    let groups = grid
        .sum_groups
        .iter()
        .map(|g| {
            let idx = g
                .types
                .iter()
                .map(|name| {
                    instance
                        .type_index(name)
                        .ok_or_else(|| Error::Config(format!("unknown vehicle type {name:?} in sum group")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((idx, g.total))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::new();
    let mut current = vec![0; values.len()];
    fn rec(t: usize, values: &[Vec<usize>], current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>, keep: &dyn Fn(&[usize]) -> bool) {
        if t == values.len() {
            if keep(current) {
                out.push(current.clone());
            }
            return;
        }
        for &c in &values[t] {
            current[t] = c;
            rec(t + 1, values, current, out, keep);
        }
    }
    let keep = |c: &[usize]| {
        grid.total_cap.is_none_or(|cap| c.iter().sum::<usize>() <= cap)
            && groups.iter().all(|(idx, total)| idx.iter().map(|&t| c[t]).sum::<usize>() == *total)
    };
    rec(0, &values, &mut current, &mut out, &keep);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixEvaluation {
    /// Position in the enumeration.
    pub index: usize,
    pub counts: Vec<usize>,
    pub acquisition: f64,
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
    pub periods: f64,
    pub tco: f64,
    pub fill_rate: f64,
    pub unserved_mean: f64,
    pub failures: usize,
}

impl MixEvaluation {
    pub fn tco_consistent(&self) -> bool {
        self.tco == self.acquisition + self.periods * self.mean
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixResult {
    pub evaluation: MixEvaluation,
    pub samples: Vec<SampleRecord>,
}

/// Prices every mix and ranks by TCO, ties broken by enumeration order.
pub fn optimize(
    instance: &Instance,
    mixes: &[Vec<usize>],
    estimator: &Estimator,
    horizon: &HorizonSpec,
) -> Result<Vec<MixResult>> {
    horizon.validate()?;
    estimator.policy.validate()?;
    let run = |(index, counts): (usize, &Vec<usize>)| -> Result<MixResult> {
        let fleet = FleetMix::from_counts(instance, counts)?;
        let est = estimator.estimate(instance, &fleet, index)?;
        let acquisition = fleet.acquisition_cost(instance);
        let n = est.n.max(1) as f64;
        let evaluation = MixEvaluation {
            index,
            counts: counts.clone(),
            acquisition,
            mean: est.mean,
            half_width: est.half_width,
            n: est.n,
            periods: horizon.periods(),
            tco: tco(acquisition, est.mean, horizon),
            fill_rate: est.samples.iter().map(SampleRecord::fill_rate).sum::<f64>() / n,
            unserved_mean: est.samples.iter().map(|s| s.unserved as f64).sum::<f64>() / n,
            failures: est.failures,
        };
        log::info!("mix {index} {counts:?}: mean {:.4} ± {:.4} (n = {})", est.mean, est.half_width, est.n);
        Ok(MixResult {
            evaluation,
            samples: est.samples,
        })
    };
    #[cfg(feature = "parallel")]
    let results: Result<Vec<MixResult>> = mixes.par_iter().enumerate().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Result<Vec<MixResult>> = mixes.iter().enumerate().map(run).collect();
    let mut results = results?;
    results.sort_by(|a, b| {
        a.evaluation
            .tco
            .total_cmp(&b.evaluation.tco)
            .then(a.evaluation.index.cmp(&b.evaluation.index))
    });
    Ok(results)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Multiplies every realized demand, rounding half up.
    DemandScale,
    /// Replaces sampled temperatures with a constant, °C.
    FixedTemperature,
    /// Multiplies the energy price of the selected powertrain (all by default).
    EnergyPrices,
    /// Sets the additional mass of every vehicle type, kg.
    AdditionalMass,
    /// Adds to the acquisition cost of every electric type, USD.
    EvPriceDelta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub grid: Vec<f64>,
    #[serde(default)]
    pub powertrain: Option<Powertrain>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        for &v in &self.grid {
            let ok = match self.kind {
                SweepKind::DemandScale | SweepKind::EnergyPrices | SweepKind::AdditionalMass => v.is_finite() && v >= 0.0,
                SweepKind::FixedTemperature | SweepKind::EvPriceDelta => v.is_finite(),
            };
            if !ok {
                return Err(Error::Config(format!("invalid {:?} grid value {v}", self.kind)));
            }
        }
        Ok(())
    }

    /// The master instance with this sweep's value applied.
    pub fn apply(&self, instance: &Instance, value: f64) -> Instance {
        let mut inst = instance.clone();
        for t in &mut inst.vehicle_types {
            match self.kind {
                SweepKind::EnergyPrices if self.powertrain.is_none_or(|p| p == t.powertrain) => t.energy_cost *= value,
                SweepKind::AdditionalMass => t.additional_mass = value,
                SweepKind::EvPriceDelta if t.is_electric() => t.acquisition_cost += value,
                _ => {}
            }
        }
        inst
    }

    pub fn sampler<'a>(&self, base: &Sampler<'a>, value: f64) -> Result<Sampler<'a>> {
        match self.kind {
            SweepKind::DemandScale => base.clone().with_demand_scale(value),
            SweepKind::FixedTemperature => Ok(base.clone().with_temperature(TemperatureModel::Fixed(value))),
            _ => Ok(base.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub results: Vec<MixResult>,
}

/// Re-runs [`optimize`] once per grid value with the swept parameter
/// overridden. The sampler is rebuilt against each modified instance.
pub fn sweep(
    instance: &Instance,
    mixes: &[Vec<usize>],
    spec: &SweepSpec,
    build_sampler: &dyn Fn(&Instance) -> Result<Sampler<'_>>,
    solver: &dyn OperationalSolver,
    policy: &EstimationPolicy,
    seed: u64,
    horizon: &HorizonSpec,
) -> Result<Vec<SweepPoint>> {
    spec.validate()?;
    spec.grid
        .iter()
        .map(|&value| {
            let inst = spec.apply(instance, value);
            let base = build_sampler(&inst)?;
            let sampler = spec.sampler(&base, value)?;
            let estimator = Estimator {
                sampler: &sampler,
                solver,
                policy: policy.clone(),
                seed,
            };
            Ok(SweepPoint {
                value,
                results: optimize(&inst, mixes, &estimator, horizon)?,
            })
        })
        .collect()
}
