//! Scenario samplers and synthetic instance generators.
//!
//! A scenario is drawn from `(master seed, scenario index)` alone, so the
//! same index yields the same period for every fleet mix and thread layout.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as NormalDist};

use crate::energy::ChargerKind;
use crate::model::{
    CoordinateSystem, Direction, Instance, InstanceFile, Node, NodeKind, Scenario, Vehicle, VehicleType,
};
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

/// Normal distribution truncated to `[low, high]` and rounded to the
/// nearest integer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedNormalSpec {
    pub mean: f64,
    pub stddev: f64,
    pub low: f64,
    pub high: f64,
}

impl TruncatedNormalSpec {
    pub const REGION_H_CLINICS: TruncatedNormalSpec = TruncatedNormalSpec {
        mean: 107.8946,
        stddev: 26.63986,
        low: 26.5,
        high: 145.5,
    };

    pub const MTH_CUSTOMERS: TruncatedNormalSpec = TruncatedNormalSpec {
        mean: 423.3636,
        stddev: 34.2547,
        low: 348.0,
        high: 476.0,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.low < self.high && self.stddev > 0.0 && self.mean.is_finite()) {
            return Err(Error::Config(format!(
                "truncated normal needs low < high and stddev > 0, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Rejection sampling while the window holds a fair share of the mass;
    /// inverse CDF on the nearer tail otherwise, where rejection would stall.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let n = NormalDist::new(self.mean, self.stddev).expect("validated stddev");
        if n.cdf(self.high) - n.cdf(self.low) >= 0.05 {
            let normal = Normal::new(self.mean, self.stddev).expect("validated stddev");
            loop {
                let x: f64 = normal.sample(rng);
                if (self.low..=self.high).contains(&x) {
                    return round_half_up(x) as i64;
                }
            }
        }
        // Work below the mean, where the CDF keeps its precision.
        let flip = self.low > self.mean;
        let (lo, hi) = if flip {
            (2.0 * self.mean - self.high, 2.0 * self.mean - self.low)
        } else {
            (self.low, self.high)
        };
        let (a, b) = (n.cdf(lo), n.cdf(hi));
        let u = a + (b - a) * rng.random::<f64>();
        let mut x = n.inverse_cdf(u).clamp(lo, hi);
        if flip {
            x = 2.0 * self.mean - x;
        }
        round_half_up(x) as i64
    }

    /// Exact expectation of the rounded draw.
    pub fn expected_value(&self) -> f64 {
        let n = NormalDist::new(self.mean, self.stddev).expect("validated stddev");
        let mass = n.cdf(self.high) - n.cdf(self.low);
        let first = round_half_up(self.low) as i64;
        let last = round_half_up(self.high) as i64;
        (first..=last)
            .map(|k| {
                let a = (k as f64 - 0.5).max(self.low);
                let b = (k as f64 + 0.5).min(self.high);
                k as f64 * (n.cdf(b) - n.cdf(a)).max(0.0) / mass
            })
            .sum()
    }
}

pub fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Draw from a triangular distribution given its bounds and mean; the mode
/// is `3·mean − min − max`, clamped into the bounds.
pub fn triangular_sample<R: Rng + ?Sized>(min: f64, max: f64, mean: f64, rng: &mut R) -> Result<f64> {
    if !(min <= mean && mean <= max) {
        return Err(Error::Config(format!(
            "triangular mean {mean} outside [{min}, {max}]"
        )));
    }
    if max == min {
        return Ok(min);
    }
    let mode = (3.0 * mean - min - max).clamp(min, max);
    let u: f64 = rng.random();
    let split = (mode - min) / (max - min);
    Ok(if u < split {
        min + (u * (max - min) * (mode - min)).sqrt()
    } else {
        max - ((1.0 - u) * (max - min) * (max - mode)).sqrt()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Season {
    Summer,
    Autumn,
    Winter,
    Spring,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangularSpec {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// One triangular temperature distribution per season, seasons equally likely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalTemperatureSpec {
    pub summer: TriangularSpec,
    pub autumn: TriangularSpec,
    pub winter: TriangularSpec,
    pub spring: TriangularSpec,
}

impl Default for SeasonalTemperatureSpec {
    fn default() -> Self {
        let t = |min, max, mean| TriangularSpec { min, max, mean };
        SeasonalTemperatureSpec {
            summer: t(13.4, 26.9, 19.5),
            autumn: t(1.2, 21.8, 10.7),
            winter: t(-7.3, 8.8, 2.3),
            spring: t(-4.0, 24.1, 8.2),
        }
    }
}

impl SeasonalTemperatureSpec {
    pub fn season(&self, season: Season) -> TriangularSpec {
        match season {
            Season::Summer => self.summer,
            Season::Autumn => self.autumn,
            Season::Winter => self.winter,
            Season::Spring => self.spring,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Season, f64)> {
        let season = [Season::Summer, Season::Autumn, Season::Winter, Season::Spring][rng.random_range(0..4)];
        let t = self.season(season);
        Ok((season, triangular_sample(t.min, t.max, t.mean, rng)?))
    }
}

/// Selects exactly `n` of the units with inclusion probability proportional
/// to `weights` (systematic sampling over a random ordering). Units whose
/// share would exceed one are taken with certainty.
pub fn pps_sample<R: Rng + ?Sized>(weights: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let n = n.min(weights.iter().filter(|w| **w > 0.0).count());
    let mut certain = vec![false; weights.len()];
    let mut remaining = n;
    loop {
        let total: f64 = weights
            .iter()
            .zip(&certain)
            .filter(|(_, c)| !**c)
            .map(|(w, _)| *w)
            .sum();
        let before = remaining;
        for (i, w) in weights.iter().enumerate() {
            if !certain[i] && *w > 0.0 && remaining > 0 && remaining as f64 * w / total >= 1.0 {
                certain[i] = true;
                remaining -= 1;
            }
        }
        if remaining == before || remaining == 0 {
            break;
        }
    }
    let mut picked: Vec<usize> = (0..weights.len()).filter(|&i| certain[i]).collect();
    if remaining > 0 {
        let mut order: Vec<usize> = (0..weights.len())
            .filter(|&i| !certain[i] && weights[i] > 0.0)
            .collect();
        order.shuffle(rng);
        let total: f64 = order.iter().map(|&i| weights[i]).sum();
        let start: f64 = rng.random();
        let mut cum = 0.0;
        let mut next = start;
        for &i in &order {
            cum += remaining as f64 * weights[i] / total;
            if cum > next && picked.len() < n {
                picked.push(i);
                next += 1.0;
            }
        }
        // Floating-point shortfall on the last unit.
        for &i in order.iter().rev() {
            if picked.len() >= n {
                break;
            }
            if !picked.contains(&i) {
                picked.push(i);
            }
        }
    }
    picked.sort_unstable();
    picked
}

/// Source of operational periods.
pub trait ScenarioSampler: Send + Sync {
    fn sample(&self, master_seed: u64, index: u64) -> Result<Scenario>;
}

/// Per-doctor demand by weekday (Monday first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoctorDemandTable {
    pub summer: [u32; 5],
    pub rest_of_year: [u32; 5],
}

impl Default for DoctorDemandTable {
    fn default() -> Self {
        DoctorDemandTable {
            summer: [6, 6, 4, 6, 5],
            rest_of_year: [9, 8, 6, 7, 6],
        }
    }
}

impl DoctorDemandTable {
    pub fn per_doctor(&self, season: Season, weekday: usize) -> u32 {
        if season == Season::Summer {
            self.summer[weekday]
        } else {
            self.rest_of_year[weekday]
        }
    }
}

/// How a sampler produces ambient temperatures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemperatureModel {
    Fixed(f64),
    Seasonal(SeasonalTemperatureSpec),
}

impl Default for TemperatureModel {
    fn default() -> Self {
        TemperatureModel::Seasonal(SeasonalTemperatureSpec::default())
    }
}

/// Serializable sampler description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerSpec {
    /// Customer count from a truncated normal, customers chosen with
    /// probability proportional to their request probability, per-doctor
    /// demand by season and weekday.
    RegionH {
        #[serde(default = "region_h_count")]
        count: TruncatedNormalSpec,
        #[serde(default)]
        temperature: TemperatureModel,
        #[serde(default)]
        demand: DoctorDemandTable,
    },
    /// Customer count from a truncated normal, nominal (zero) demands.
    Mth {
        #[serde(default = "mth_count")]
        count: TruncatedNormalSpec,
        #[serde(default)]
        temperature: TemperatureModel,
    },
    /// Each customer requested independently with its probability.
    Independent {
        #[serde(default)]
        temperature: TemperatureModel,
    },
}

fn region_h_count() -> TruncatedNormalSpec {
    TruncatedNormalSpec::REGION_H_CLINICS
}

fn mth_count() -> TruncatedNormalSpec {
    TruncatedNormalSpec::MTH_CUSTOMERS
}

impl SamplerSpec {
    pub fn region_h() -> Self {
        SamplerSpec::RegionH {
            count: region_h_count(),
            temperature: TemperatureModel::default(),
            demand: DoctorDemandTable::default(),
        }
    }

    pub fn mth() -> Self {
        SamplerSpec::Mth {
            count: mth_count(),
            temperature: TemperatureModel::default(),
        }
    }

    pub fn temperature_mut(&mut self) -> &mut TemperatureModel {
        match self {
            SamplerSpec::RegionH { temperature, .. }
            | SamplerSpec::Mth { temperature, .. }
            | SamplerSpec::Independent { temperature } => temperature,
        }
    }

    pub fn build<'a>(&self, instance: &'a Instance) -> Result<Sampler<'a>> {
        let (count, temperature, demand) = match self {
            SamplerSpec::RegionH {
                count,
                temperature,
                demand,
            } => (Some(*count), temperature.clone(), Some(demand.clone())),
            SamplerSpec::Mth { count, temperature } => (Some(*count), temperature.clone(), None),
            SamplerSpec::Independent { temperature } => (None, temperature.clone(), None),
        };
        if let Some(c) = &count {
            c.validate()?;
        }
        if let TemperatureModel::Seasonal(s) = &temperature {
            for t in [s.summer, s.autumn, s.winter, s.spring] {
                if !(t.min <= t.mean && t.mean <= t.max) {
                    return Err(Error::Config(format!("seasonal mean {} outside [{}, {}]", t.mean, t.min, t.max)));
                }
            }
        }
        if demand.is_some() && instance.clinic_doctors.is_empty() {
            return Err(Error::Config("per-doctor demand needs clinic_doctors in the instance".into()));
        }
        Ok(Sampler {
            instance,
            count,
            temperature,
            demand,
            demand_scale: 1.0,
        })
    }
}

/// A built sampler bound to its master instance.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    instance: &'a Instance,
    count: Option<TruncatedNormalSpec>,
    temperature: TemperatureModel,
    demand: Option<DoctorDemandTable>,
    demand_scale: f64,
}

impl Sampler<'_> {
    /// Multiplies every realized demand by `scale`, rounding half up.
    pub fn with_demand_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::Config(format!("demand scale {scale} must be >= 0")));
        }
        self.demand_scale = scale;
        Ok(self)
    }

    pub fn with_temperature(mut self, temperature: TemperatureModel) -> Self {
        self.temperature = temperature;
        self
    }
}

impl ScenarioSampler for Sampler<'_> {
    fn sample(&self, master_seed: u64, index: u64) -> Result<Scenario> {
        let inst = self.instance;
        let mut rng = stream_rng(master_seed, Stream::Scenario, index);
        let customers = inst.customers();
        let selected: Vec<usize> = match &self.count {
            Some(spec) => {
                let drawn = spec.sample(&mut rng).max(0) as usize;
                if drawn > customers.len() {
                    log::warn!(
                        "scenario {index}: drew {drawn} customers, master list has {}",
                        customers.len()
                    );
                }
                let weights: Vec<f64> = customers.iter().map(|&c| inst.request_probability(c)).collect();
                pps_sample(&weights, drawn, &mut rng)
            }
            None => (0..customers.len())
                .filter(|&i| rng.random::<f64>() < inst.request_probability(customers[i]))
                .collect(),
        };
        let (season, temperature) = match &self.temperature {
            TemperatureModel::Fixed(t) => (None, *t),
            TemperatureModel::Seasonal(s) => {
                let (season, t) = s.sample(&mut rng)?;
                (Some(season), t)
            }
        };
        let weekday = rng.random_range(0..5);

        let mut requests = vec![0u8; customers.len()];
        let mut demand_overrides = BTreeMap::new();
        for &i in &selected {
            requests[i] = 1;
            let c = customers[i];
            let base = match (&self.demand, inst.clinic_doctors.get(&c)) {
                (Some(table), Some(&doctors)) => {
                    // A fixed temperature has no season; use the rest-of-year row.
                    let season = season.unwrap_or(Season::Autumn);
                    Some(f64::from(doctors * table.per_doctor(season, weekday)))
                }
                _ => None,
            };
            let scaled = if self.demand_scale != 1.0 {
                let d = base.unwrap_or(inst.nodes[c].demand);
                Some(round_half_up(d * self.demand_scale))
            } else {
                base
            };
            if let Some(d) = scaled {
                demand_overrides.insert(c, d);
            }
        }
        let label = season.map(|s| {
            let day = ["mon", "tue", "wed", "thu", "fri"][weekday];
            format!("{}-{day}", serde_json::to_value(s).unwrap().as_str().unwrap())
        });
        Ok(Scenario {
            requests,
            temperature,
            demand_overrides,
            seed: index,
            label,
        })
    }
}

// ---------------------------------------------------------------------------
// Synthetic instances

fn planar_node(id: usize, kind: NodeKind, x: f64, y: f64, window: [f64; 2]) -> Node {
    Node {
        id,
        kind,
        location: [x, y],
        demand: 0.0,
        time_window: window,
        service_time: 0.0,
        penalty: 0.0,
        skill: None,
    }
}

fn euclid_km(a: &Node, b: &Node) -> f64 {
    let dx = a.location[0] - b.location[0];
    let dy = a.location[1] - b.location[1];
    (dx * dx + dy * dy).sqrt() / 1000.0
}

/// Minutes, rounded to thousandths so the matrix survives a JSON round trip.
fn minutes_matrix(nodes: &[Node], speed_kmh: f64, detour: f64, congestion: impl Fn(&Node) -> f64) -> Vec<Vec<f64>> {
    nodes
        .iter()
        .map(|a| {
            nodes
                .iter()
                .map(|b| {
                    let factor = 0.5 * (congestion(a) + congestion(b));
                    let m = euclid_km(a, b) * detour / speed_kmh * 60.0 * factor;
                    (m * 1000.0).round() / 1000.0
                })
                .collect()
        })
        .collect()
}

fn scale_probabilities(raw: &mut [f64], target_sum: f64) {
    let total: f64 = raw.iter().sum();
    for p in raw.iter_mut() {
        *p = (*p * target_sum / total).min(1.0);
        *p = (*p * 1e6).round() / 1e6;
    }
}

/// Parameters of the synthetic blood-sample collection network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegionHSpec {
    pub clinics: usize,
    /// Area width and height, metres.
    pub area: [f64; 2],
    pub stations: usize,
    pub vans: usize,
    pub bikes: usize,
    pub shift_minutes: f64,
    pub service_minutes: f64,
    pub penalty: f64,
    pub doctors: [u32; 2],
    pub unit_mass_kg: f64,
}

impl Default for RegionHSpec {
    fn default() -> Self {
        RegionHSpec {
            clinics: 200,
            area: [10_000.0, 8_000.0],
            stations: 3,
            vans: 15,
            bikes: 15,
            shift_minutes: 150.0,
            service_minutes: 3.0,
            penalty: 30.0,
            doctors: [1, 3],
            unit_mass_kg: 0.05,
        }
    }
}

/// Synthetic Region H style master instance: two hospitals 4 km apart, a
/// clinic field around them, fast chargers, and vans plus cargo bikes.
pub fn regionh_synthetic(spec: &RegionHSpec, seed: u64) -> Result<Instance> {
    let mut rng = stream_rng(seed, Stream::Generator, 1);
    let [w, h] = spec.area;
    let shift = [0.0, spec.shift_minutes];
    let mut nodes = vec![
        planar_node(0, NodeKind::DepotStart, 0.5 * w - 2000.0, 0.5 * h, shift),
        planar_node(1, NodeKind::DepotEnd, 0.5 * w + 2000.0, 0.5 * h, shift),
    ];
    let mut raw_p = Vec::with_capacity(spec.clinics);
    let mut doctors = BTreeMap::new();
    let rest_of_year_mean = 7.0;
    for _ in 0..spec.clinics {
        let id = nodes.len();
        let mut n = planar_node(id, NodeKind::Customer, rng.random_range(0.0..w), rng.random_range(0.0..h), shift);
        let d = rng.random_range(spec.doctors[0]..=spec.doctors[1]);
        doctors.insert(id, d);
        n.demand = f64::from(d) * rest_of_year_mean;
        n.service_time = spec.service_minutes;
        n.penalty = spec.penalty;
        nodes.push(n);
        raw_p.push(rng.random_range(0.3..0.68));
    }
    for s in 0..spec.stations {
        let id = nodes.len();
        let angle = s as f64 * std::f64::consts::TAU / spec.stations.max(1) as f64;
        let (x, y) = (0.5 * w + 0.3 * w * angle.cos(), 0.5 * h + 0.3 * h * angle.sin());
        nodes.push(planar_node(id, NodeKind::Station, x, y, shift));
    }
    scale_probabilities(&mut raw_p, TruncatedNormalSpec::REGION_H_CLINICS.expected_value());
    let request_probabilities = (0..spec.clinics).map(|i| (2 + i, raw_p[i])).collect();
    let chargers = (0..spec.stations)
        .map(|s| (2 + spec.clinics + s, ChargerKind::Fast30kWh))
        .collect();

    let van = VehicleType::electric_van();
    let bike = VehicleType::cargo_bike();
    let center = [0.5 * w, 0.5 * h];
    let diag = 0.5 * (w * w + h * h).sqrt();
    let congestion = |n: &Node| {
        let dx = n.location[0] - center[0];
        let dy = n.location[1] - center[1];
        1.4 - 0.3 * ((dx * dx + dy * dy).sqrt() / diag)
    };
    let mut travel_time = BTreeMap::new();
    travel_time.insert(van.name.clone(), minutes_matrix(&nodes, van.speed_kmh, 1.3, congestion));
    travel_time.insert(bike.name.clone(), minutes_matrix(&nodes, bike.speed_kmh, 1.2, |_| 1.0));

    let mut vehicles = Vec::new();
    for (count, t) in [(spec.vans, &van), (spec.bikes, &bike)] {
        for _ in 0..count {
            vehicles.push(Vehicle {
                id: vehicles.len(),
                vehicle_type: t.name.clone(),
                skills: None,
                home_start: None,
                home_end: None,
                charger_distance_km: None,
            });
        }
    }
    Instance::try_from(InstanceFile {
        name: "regionh_synthetic".into(),
        coordinates: CoordinateSystem::PlanarMeters,
        direction: Direction::Pickup,
        unit_mass_kg: spec.unit_mass_kg,
        triangle_inequality: false,
        nodes,
        vehicle_types: vec![van, bike],
        vehicles,
        travel_time,
        request_probabilities,
        chargers,
        clinic_doctors: doctors,
    })
}

/// Parameters of the synthetic technician-routing network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MthSpec {
    pub customers: usize,
    pub area: [f64; 2],
    pub stations: usize,
    /// Drivers whose vehicle may be electric or a small combustion van.
    pub small_drivers: usize,
    pub large_drivers: usize,
    pub shift_minutes: f64,
    pub service_mean: f64,
    pub service_stddev: f64,
    pub service_bounds: [f64; 2],
    pub penalty: f64,
}

impl Default for MthSpec {
    fn default() -> Self {
        MthSpec {
            customers: 520,
            area: [30_000.0, 20_000.0],
            stations: 10,
            small_drivers: 44,
            large_drivers: 30,
            shift_minutes: 600.0,
            service_mean: 90.0,
            service_stddev: 45.0,
            service_bounds: [15.0, 300.0],
            penalty: 30.0,
        }
    }
}

/// Task levels by share (1 to 4) and the driver skill sets by share.
const TASK_SHARES: [f64; 4] = [0.4, 0.3, 0.2, 0.1];
const DRIVER_SKILLS: [(&[u8], f64); 4] = [(&[1], 0.4), (&[2], 0.3), (&[2, 3], 0.2), (&[3, 4], 0.1)];

fn pick_share<R: Rng + ?Sized>(shares: impl Iterator<Item = f64>, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, s) in shares.enumerate() {
        acc += s;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Synthetic technician network. Drivers start and end at home. The master
/// vehicle list holds, in order: an electric van per small driver (nearest
/// charger first), a small combustion van per small driver (farthest first),
/// and a large combustion van per large driver. Taking the first `e` electric
/// and first `44 − e` small combustion vans therefore gives the `e` most
/// eligible drivers electric vehicles.
pub fn mth_synthetic(spec: &MthSpec, seed: u64) -> Result<Instance> {
    let mut rng = stream_rng(seed, Stream::Generator, 2);
    let [w, h] = spec.area;
    let shift = [0.0, spec.shift_minutes];
    let half = 0.5 * spec.shift_minutes;
    let mut nodes = vec![
        planar_node(0, NodeKind::DepotStart, 0.5 * w, 0.5 * h, shift),
        planar_node(1, NodeKind::DepotEnd, 0.5 * w, 0.5 * h, shift),
    ];
    let service = Normal::new(spec.service_mean, spec.service_stddev)
        .map_err(|e| Error::Config(format!("service time distribution: {e}")))?;
    let mut raw_p = Vec::with_capacity(spec.customers);
    for _ in 0..spec.customers {
        let id = nodes.len();
        let mut s: f64;
        loop {
            s = service.sample(&mut rng);
            if (spec.service_bounds[0]..=spec.service_bounds[1]).contains(&s) {
                break;
            }
        }
        s = s.round();
        let window = if s < 120.0 {
            if rng.random::<bool>() {
                [0.0, half - s]
            } else {
                [half, spec.shift_minutes - s]
            }
        } else {
            [0.0, spec.shift_minutes - s]
        };
        let mut n = planar_node(id, NodeKind::Customer, rng.random_range(0.0..w), rng.random_range(0.0..h), window);
        n.service_time = s;
        n.penalty = spec.penalty;
        n.skill = Some(pick_share(TASK_SHARES.iter().copied(), &mut rng) as u8 + 1);
        nodes.push(n);
        raw_p.push(rng.random_range(0.65..0.95));
    }
    let first_station = nodes.len();
    for _ in 0..spec.stations {
        let id = nodes.len();
        nodes.push(planar_node(id, NodeKind::Station, rng.random_range(0.0..w), rng.random_range(0.0..h), shift));
    }
    let drivers = spec.small_drivers + spec.large_drivers;
    let first_home = nodes.len();
    let mut skills = Vec::with_capacity(drivers);
    for _ in 0..drivers {
        let id = nodes.len();
        nodes.push(planar_node(id, NodeKind::Home, rng.random_range(0.0..w), rng.random_range(0.0..h), shift));
        skills.push(DRIVER_SKILLS[pick_share(DRIVER_SKILLS.iter().map(|d| d.1), &mut rng)].0.to_vec());
    }
    let charger_km = |home: usize| {
        (first_station..first_station + spec.stations)
            .map(|s| euclid_km(&nodes[home], &nodes[s]))
            .fold(f64::INFINITY, f64::min)
    };
    // Small drivers are those living closest to a charger.
    let mut by_distance: Vec<usize> = (0..drivers).collect();
    by_distance.sort_by(|&a, &b| charger_km(first_home + a).total_cmp(&charger_km(first_home + b)).then(a.cmp(&b)));
    let (small, large) = by_distance.split_at(spec.small_drivers.min(drivers));

    let ev = VehicleType::technician_ev();
    let small_icev = VehicleType::small_icev();
    let large_icev = VehicleType::large_icev();
    let mut vehicles = Vec::new();
    let add = |driver: usize, t: &VehicleType, vehicles: &mut Vec<Vehicle>| {
        let home = first_home + driver;
        vehicles.push(Vehicle {
            id: vehicles.len(),
            vehicle_type: t.name.clone(),
            skills: Some(skills[driver].clone()),
            home_start: Some(home),
            home_end: Some(home),
            charger_distance_km: Some((charger_km(home) * 1000.0).round() / 1000.0),
        });
    };
    for &d in small {
        add(d, &ev, &mut vehicles);
    }
    for &d in small.iter().rev() {
        add(d, &small_icev, &mut vehicles);
    }
    for &d in large {
        add(d, &large_icev, &mut vehicles);
    }

    scale_probabilities(&mut raw_p, TruncatedNormalSpec::MTH_CUSTOMERS.expected_value());
    let request_probabilities = (0..spec.customers).map(|i| (2 + i, raw_p[i])).collect();
    let chargers = (0..spec.stations)
        .map(|s| (first_station + s, ChargerKind::Standard30kWh))
        .collect();
    let mut travel_time = BTreeMap::new();
    travel_time.insert("default".to_string(), minutes_matrix(&nodes, ev.speed_kmh, 1.3, |_| 1.2));

    Instance::try_from(InstanceFile {
        name: "mth_synthetic".into(),
        coordinates: CoordinateSystem::PlanarMeters,
        direction: Direction::Pickup,
        unit_mass_kg: 0.0,
        triangle_inequality: false,
        nodes,
        vehicle_types: vec![ev, small_icev, large_icev],
        vehicles,
        travel_time,
        request_probabilities,
        chargers,
        clinic_doctors: BTreeMap::new(),
    })
}

/// Small random instances for exact-solver comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TinySpec {
    pub customers: usize,
    pub vehicles: usize,
    pub station: bool,
    /// Side of the square service area, metres.
    pub side: f64,
    pub horizon: f64,
}

impl Default for TinySpec {
    fn default() -> Self {
        TinySpec {
            customers: 6,
            vehicles: 2,
            station: true,
            side: 6000.0,
            horizon: 120.0,
        }
    }
}

/// Random tiny instance: one depot, random windows, demands and penalties,
/// a random mix of electric vans, bikes and combustion vans (electric
/// batteries small enough that charging sometimes matters), and Euclidean
/// travel times.
pub fn tiny_instance(spec: &TinySpec, seed: u64) -> Result<Instance> {
    let mut rng = stream_rng(seed, Stream::Generator, 3);
    let all = [0.0, spec.horizon];
    let c = [0.5 * spec.side, 0.5 * spec.side];
    let mut nodes = vec![
        planar_node(0, NodeKind::DepotStart, c[0], c[1], all),
        planar_node(1, NodeKind::DepotEnd, c[0], c[1], all),
    ];
    for _ in 0..spec.customers {
        let id = nodes.len();
        let (x, y) = (rng.random_range(0.0..spec.side), rng.random_range(0.0..spec.side));
        let start = rng.random_range(0.0..0.6 * spec.horizon);
        let width = rng.random_range(0.15..0.6) * spec.horizon;
        let mut n = planar_node(id, NodeKind::Customer, x, y, [start, (start + width).min(spec.horizon)]);
        n.demand = f64::from(rng.random_range(1u32..=8)) * 10.0;
        n.service_time = f64::from(rng.random_range(2u32..=10));
        n.penalty = (rng.random_range(0.05..2.0_f64) * 100.0).round() / 100.0;
        nodes.push(n);
    }
    if spec.station {
        let id = nodes.len();
        let (x, y) = (rng.random_range(0.0..spec.side), rng.random_range(0.0..spec.side));
        nodes.push(planar_node(id, NodeKind::Station, x, y, all));
    }
    let pool = [VehicleType::electric_van(), VehicleType::cargo_bike(), VehicleType::small_icev()];
    let mut types: Vec<VehicleType> = Vec::new();
    let mut vehicles = Vec::new();
    for id in 0..spec.vehicles {
        let mut t = pool[rng.random_range(0..pool.len())].clone();
        if t.is_electric() {
            t.battery_capacity = (rng.random_range(0.3..3.0_f64) * 100.0).round() / 100.0;
        }
        t.cargo_capacity = f64::from(rng.random_range(10u32..=25)) * 10.0;
        t.name = format!("{}_{id}", t.name);
        vehicles.push(Vehicle {
            id,
            vehicle_type: t.name.clone(),
            skills: None,
            home_start: None,
            home_end: None,
            charger_distance_km: None,
        });
        types.push(t);
    }
    let travel_time = types
        .iter()
        .map(|t| (t.name.clone(), minutes_matrix(&nodes, t.speed_kmh, 1.0, |_| 1.0)))
        .collect();
    let chargers = nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Station)
        .map(|n| (n.id, ChargerKind::Fast30kWh))
        .collect();
    Instance::try_from(InstanceFile {
        name: format!("tiny_{seed}"),
        coordinates: CoordinateSystem::PlanarMeters,
        direction: Direction::Pickup,
        unit_mass_kg: 0.5,
        triangle_inequality: false,
        nodes,
        vehicle_types: types,
        vehicles,
        travel_time,
        request_probabilities: BTreeMap::new(),
        chargers,
        clinic_doctors: BTreeMap::new(),
    })
}
