//! Route feasibility and cost.
//!
//! A route is scanned once, front to back. Load is cargo on board: pickup
//! tours start empty and accumulate, delivery tours start with all routed
//! demand and shed it. The traction power on arc (i, j) uses the load carried
//! while driving that arc. Batteries leave the tour start full; at a station
//! the vehicle charges just enough to finish the tour (plus the reserve).

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::energy::{PowerContext, PowerModel};
use crate::error::{Error, Result};
use crate::model::{CostBreakdown, Direction, FleetMix, Instance, NodeKind, Route, Scenario, Solution};

/// Tolerance for time, energy and cost comparisons.
pub const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    StationOnIcev,
    DepotOrder,
    MultipleStations,
    IncompatibleCustomer,
    Capacity,
    TimeWindow,
    SocNegative,
}

impl ViolationKind {
    pub fn code(self) -> &'static str {
        match self {
            ViolationKind::StationOnIcev => "station_on_icev",
            ViolationKind::DepotOrder => "depot_order",
            ViolationKind::MultipleStations => "multiple_stations",
            ViolationKind::IncompatibleCustomer => "incompatible_customer",
            ViolationKind::Capacity => "capacity",
            ViolationKind::TimeWindow => "time_window",
            ViolationKind::SocNegative => "soc_negative",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// First constraint broken by a route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub vehicle: usize,
    /// Offending node, when one can be singled out.
    pub node: Option<usize>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (vehicle {}", self.kind, self.vehicle)?;
        if let Some(n) = self.node {
            write!(f, ", node {n}")?;
        }
        write!(f, "): {}", self.detail)
    }
}

/// Per-route quantities of a feasible route.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RouteEval {
    pub cost: f64,
    pub fixed: f64,
    pub energy_cost: f64,
    pub maintenance_cost: f64,
    pub energy_kwh: f64,
    pub distance_km: f64,
    /// Minutes spent recharging.
    pub charge_minutes: f64,
    /// Arrival time at the tour end.
    pub end_time: f64,
    /// Demand routed.
    pub demand: f64,
}

/// Everything the evaluator needs for one scenario.
#[derive(Debug, Clone)]
pub struct OperationalProblem<'a> {
    pub instance: &'a Instance,
    pub temperature: f64,
    demand: Vec<f64>,
    realized: Vec<bool>,
    realized_list: Vec<usize>,
    power: Vec<PowerModel>,
    /// Per type, kW at zero load and kW per demand unit when power is affine.
    linear: Vec<Option<(f64, f64)>>,
    /// Fraction of battery capacity kept in reserve after charging.
    pub reserve_fraction: f64,
}

impl<'a> OperationalProblem<'a> {
    pub fn new(instance: &'a Instance, scenario: &Scenario, ctx: &PowerContext) -> Result<Self> {
        scenario.validate(instance)?;
        let n = instance.node_count();
        let demand = (0..n).map(|i| scenario.demand(instance, i)).collect();
        let realized_list = scenario.realized_customers(instance);
        let mut realized = vec![false; n];
        for &c in &realized_list {
            realized[c] = true;
        }
        let power = instance
            .vehicle_types
            .iter()
            .map(|vt| PowerModel::new(vt, scenario.temperature, ctx))
            .collect::<Result<Vec<PowerModel>>>()?;
        let linear = power
            .iter()
            .map(|m| m.affine().map(|(a, b)| (a, b * instance.cargo_mass(1.0))))
            .collect();
        Ok(OperationalProblem {
            instance,
            temperature: scenario.temperature,
            demand,
            realized,
            realized_list,
            power,
            linear,
            reserve_fraction: 0.0,
        })
    }

    pub fn demand(&self, node: usize) -> f64 {
        self.demand[node]
    }

    pub fn is_realized(&self, node: usize) -> bool {
        self.realized[node]
    }

    pub fn realized_customers(&self) -> &[usize] {
        &self.realized_list
    }

    pub fn penalty(&self, node: usize) -> f64 {
        self.instance.nodes[node].penalty
    }

    /// kWh used by `vehicle` on arc (i, j) with `load` demand units on board.
    pub fn arc_energy(&self, vehicle: usize, i: usize, j: usize, load: f64) -> f64 {
        let t = self.instance.vehicle_type_index(vehicle);
        let kw = self.power[t].power(self.instance.cargo_mass(load));
        kw * self.instance.travel_minutes(t, i, j) / 60.0
    }

    /// Cost of a path, 0 when it serves nobody, `None` when infeasible.
    pub fn path_cost(&self, vehicle: usize, nodes: &[usize]) -> Option<f64> {
        if !nodes.iter().any(|&n| self.instance.kind(n) == NodeKind::Customer) {
            return Some(0.0);
        }
        self.evaluate_path(vehicle, nodes).ok().map(|e| e.cost)
    }

    pub fn evaluate_route(&self, route: &Route) -> Result<RouteEval, Violation> {
        self.evaluate_path(route.vehicle, &route.nodes)
    }

    /// Checks a full node sequence and prices it.
    ///
    /// Structural checks run first in a fixed order (station on a combustion
    /// vehicle, tour ends, station count, compatibility, capacity), then one
    /// forward scan reports the first time-window or battery failure, time
    /// windows taking precedence.
    pub fn evaluate_path(&self, vehicle: usize, nodes: &[usize]) -> Result<RouteEval, Violation> {
        self.scan(vehicle, nodes, None, false)
    }

    /// Service start time at every position of a feasible path.
    pub fn service_starts(&self, vehicle: usize, nodes: &[usize]) -> Option<Vec<f64>> {
        let mut times = Vec::with_capacity(nodes.len());
        self.scan(vehicle, nodes, Some(&mut times), false).ok().map(|_| times)
    }

    /// With `trusted`, the caller vouches for the route structure (tour ends,
    /// no repeats, at most one station and only on an electric vehicle,
    /// compatible customers, capacity) and only the time, battery and cost
    /// scan runs.
    fn scan(
        &self,
        vehicle: usize,
        nodes: &[usize],
        mut times: Option<&mut Vec<f64>>,
        trusted: bool,
    ) -> Result<RouteEval, Violation> {
        let inst = self.instance;
        let vt = inst.vehicle_type(vehicle);
        let t_idx = inst.vehicle_type_index(vehicle);
        let fail = |kind, node: Option<usize>, detail: String| Violation {
            kind,
            vehicle,
            node,
            detail,
        };

        if !trusted {
            self.check_structure(vehicle, nodes)?;
        }
        let (start, _) = inst.tour_ends(vehicle);
        let total: f64 = nodes.iter().map(|&n| self.demand[n]).sum();

        let battery = vt.battery_capacity;
        let mut load = match inst.direction {
            Direction::Pickup => 0.0,
            Direction::Delivery => total,
        };
        let mut time = inst.nodes[start].earliest();
        let mut soc = battery;
        let mut energy = 0.0;
        let mut charge_minutes = 0.0;
        let mut drive_minutes = 0.0;
        let mut time_violation: Option<Violation> = None;
        let mut soc_violation: Option<Violation> = None;
        if let Some(t) = times.as_deref_mut() {
            t.push(time);
        }

        for w in 0..nodes.len() - 1 {
            let (i, j) = (nodes[w], nodes[w + 1]);
            let node_i = &inst.nodes[i];
            match inst.direction {
                Direction::Pickup => load += self.demand[i],
                Direction::Delivery => load -= self.demand[i],
            }
            let mut dwell = node_i.service_time;
            if inst.kind(i) == NodeKind::Station && vt.is_electric() {
                let need = self.energy_to_end(vehicle, &nodes[w..], load);
                let target = (need + self.reserve_fraction * battery).min(battery);
                if target > soc {
                    let kind = inst.charger(i).expect("station has charger");
                    let curve = kind.function();
                    let scale = curve.max_soc() / battery;
                    let minutes = curve
                        .time_to((target * scale).min(curve.max_soc()))
                        .and_then(|b| curve.time_to((soc * scale).max(0.0)).map(|a| b - a))
                        .unwrap_or(f64::INFINITY);
                    dwell += minutes;
                    charge_minutes += minutes;
                    soc = target;
                }
            }
            let travel = inst.travel_minutes(t_idx, i, j);
            let e = self.arc_energy(vehicle, i, j, load);
            energy += e;
            drive_minutes += travel;
            soc = (soc - e).min(battery);
            time = inst.nodes[j].earliest().max(time + dwell + travel);
            if let Some(t) = times.as_deref_mut() {
                t.push(time);
            }
            if time_violation.is_none() && time > inst.nodes[j].latest() + TOL {
                time_violation = Some(fail(
                    ViolationKind::TimeWindow,
                    Some(j),
                    format!("arrival {time:.3} after latest {}", inst.nodes[j].latest()),
                ));
            }
            if soc_violation.is_none() && soc < -TOL {
                soc_violation = Some(fail(
                    ViolationKind::SocNegative,
                    Some(j),
                    format!("battery at {soc:.4} kWh on reaching node {j}"),
                ));
            }
        }
        if let Some(v) = time_violation.or(soc_violation) {
            return Err(v);
        }

        let hours = drive_minutes / 60.0;
        let distance_km = vt.speed_kmh * hours;
        let energy_cost = vt.energy_cost * energy;
        let maintenance_cost = vt.maintenance_cost * distance_km;
        Ok(RouteEval {
            cost: vt.daily_cost + energy_cost + maintenance_cost,
            fixed: vt.daily_cost,
            energy_cost,
            maintenance_cost,
            energy_kwh: energy,
            distance_km,
            charge_minutes,
            end_time: time,
            demand: total,
        })
    }

    fn check_structure(&self, vehicle: usize, nodes: &[usize]) -> Result<(), Violation> {
        let inst = self.instance;
        let vt = inst.vehicle_type(vehicle);
        let fail = |kind, node: Option<usize>, detail: String| Violation {
            kind,
            vehicle,
            node,
            detail,
        };
        if !vt.is_electric() {
            if let Some(&s) = nodes.iter().find(|&&n| inst.kind(n) == NodeKind::Station) {
                return Err(fail(
                    ViolationKind::StationOnIcev,
                    Some(s),
                    format!("combustion vehicle routed through station {s}"),
                ));
            }
        }

        let (start, end) = inst.tour_ends(vehicle);
        if nodes.len() < 2 || nodes[0] != start || nodes[nodes.len() - 1] != end {
            return Err(fail(
                ViolationKind::DepotOrder,
                None,
                format!("route must run from node {start} to node {end}"),
            ));
        }
        let interior = &nodes[1..nodes.len() - 1];
        let mut stations = 0;
        for (pos, &n) in interior.iter().enumerate() {
            match inst.kind(n) {
                NodeKind::Customer => {
                    if interior[..pos].contains(&n) {
                        return Err(fail(
                            ViolationKind::DepotOrder,
                            Some(n),
                            format!("customer {n} visited twice"),
                        ));
                    }
                }
                NodeKind::Station => stations += 1,
                _ => {
                    return Err(fail(
                        ViolationKind::DepotOrder,
                        Some(n),
                        format!("node {n} may only start or end a tour"),
                    ))
                }
            }
        }
        if stations > 1 {
            return Err(fail(
                ViolationKind::MultipleStations,
                None,
                format!("{stations} station visits, at most one allowed"),
            ));
        }
        if let Some(&c) = interior
            .iter()
            .find(|&&n| inst.kind(n) == NodeKind::Customer && !inst.compatible(n, vehicle))
        {
            return Err(fail(
                ViolationKind::IncompatibleCustomer,
                Some(c),
                format!("driver lacks skill for customer {c}"),
            ));
        }
        let total: f64 = interior.iter().map(|&n| self.demand[n]).sum();
        if total > vt.cargo_capacity + TOL {
            return Err(fail(
                ViolationKind::Capacity,
                None,
                format!("routed demand {total} exceeds capacity {}", vt.cargo_capacity),
            ));
        }

        Ok(())
    }

    /// Largest cumulative draw from `tail[0]` onward; `load` is the cargo
    /// carried when leaving `tail[0]`.
    fn energy_to_end(&self, vehicle: usize, tail: &[usize], mut load: f64) -> f64 {
        let mut used = 0.0_f64;
        let mut peak = 0.0_f64;
        for w in 0..tail.len() - 1 {
            if w > 0 {
                match self.instance.direction {
                    Direction::Pickup => load += self.demand[tail[w]],
                    Direction::Delivery => load -= self.demand[tail[w]],
                }
            }
            used += self.arc_energy(vehicle, tail[w], tail[w + 1], load);
            peak = peak.max(used);
        }
        peak
    }

    /// Cheapest feasible way to add customer `u` to `vehicle`'s path. Ties go
    /// to the earliest position. An electric route also tries every single
    /// station placement when `u` fails on battery or a station is already
    /// on board.
    pub fn cheapest_insertion(&self, vehicle: usize, nodes: &[usize], u: usize) -> Option<Insertion> {
        self.cheapest_insertion_jittered(vehicle, nodes, u, &mut || 0.0)
    }

    /// Like [`cheapest_insertion`](Self::cheapest_insertion), but candidates
    /// are ranked by `delta + |delta|·jitter()`. The returned delta is exact.
    /// `nodes` must be a structurally valid route not containing `u`.
    pub fn cheapest_insertion_jittered(
        &self,
        vehicle: usize,
        nodes: &[usize],
        u: usize,
        jitter: &mut dyn FnMut() -> f64,
    ) -> Option<Insertion> {
        let inst = self.instance;
        if !inst.compatible(u, vehicle) {
            return None;
        }
        let vt = inst.vehicle_type(vehicle);
        let routed: f64 = nodes.iter().map(|&n| self.demand[n]).sum();
        if routed + self.demand[u] > vt.cargo_capacity + TOL {
            return None;
        }
        let t_idx = inst.vehicle_type_index(vehicle);
        let has_station = nodes.iter().any(|&n| inst.kind(n) == NodeKind::Station);
        if !has_station && nodes.len() > 2 {
            if let Some((a, b)) = self.linear[t_idx] {
                let profile = LinearProfile::new(self, vehicle, nodes, a, b)?;
                let (best, soc_only) = profile.best_insertion(self, u, jitter);
                if best.is_some() || !(soc_only && vt.is_electric()) {
                    return best;
                }
                let core = nodes.to_vec();
                return self
                    .insertion_with_station(vehicle, &core, u, profile.cost, jitter)
                    .map(|(_, ins)| ins);
            }
        }
        let base = self.path_cost(vehicle, nodes)?;
        let mut best: Option<(f64, Insertion)> = None;
        let mut soc_only = false;
        let mut buf = Vec::with_capacity(nodes.len() + 2);
        for p in 1..nodes.len() {
            // Arriving no earlier than the direct trip from the predecessor's
            // earliest start rules out hopeless positions cheaply.
            let prev = nodes[p - 1];
            let lb = inst.nodes[prev].earliest() + inst.travel_minutes(t_idx, prev, u);
            if lb > inst.nodes[u].latest() + TOL {
                continue;
            }
            buf.clear();
            buf.extend_from_slice(&nodes[..p]);
            buf.push(u);
            buf.extend_from_slice(&nodes[p..]);
            match self.scan(vehicle, &buf, None, true) {
                Ok(e) => {
                    let delta = e.cost - base;
                    let key = delta + delta.abs() * jitter();
                    if best.as_ref().is_none_or(|(k, _)| key < k - TOL) {
                        best = Some((
                            key,
                            Insertion {
                                delta,
                                nodes: buf.clone(),
                            },
                        ));
                    }
                }
                Err(v) if v.kind == ViolationKind::SocNegative => soc_only = true,
                Err(_) => {}
            }
        }
        if vt.is_electric() && (has_station || (best.is_none() && soc_only)) {
            // A station already on the route may sit in the wrong place for
            // `u`, so re-place it around the station-free core.
            let core: Vec<usize> = nodes.iter().copied().filter(|&n| inst.kind(n) != NodeKind::Station).collect();
            if let Some(alt) = self.insertion_with_station(vehicle, &core, u, base, jitter) {
                if best.as_ref().is_none_or(|(k, _)| alt.0 < k - TOL) {
                    best = Some(alt);
                }
            }
        }
        best.map(|(_, ins)| ins)
    }

    fn insertion_with_station(
        &self,
        vehicle: usize,
        nodes: &[usize],
        u: usize,
        base: f64,
        jitter: &mut dyn FnMut() -> f64,
    ) -> Option<(f64, Insertion)> {
        let mut best: Option<(f64, Insertion)> = None;
        let mut with_u = Vec::with_capacity(nodes.len() + 1);
        let mut buf = Vec::with_capacity(nodes.len() + 2);
        for p in 1..nodes.len() {
            with_u.clear();
            with_u.extend_from_slice(&nodes[..p]);
            with_u.push(u);
            with_u.extend_from_slice(&nodes[p..]);
            for &s in self.instance.stations() {
                for q in 1..with_u.len() {
                    buf.clear();
                    buf.extend_from_slice(&with_u[..q]);
                    buf.push(s);
                    buf.extend_from_slice(&with_u[q..]);
                    if let Ok(e) = self.scan(vehicle, &buf, None, true) {
                        let delta = e.cost - base;
                        let key = delta + delta.abs() * jitter();
                        if best.as_ref().is_none_or(|(k, _)| key < k - TOL) {
                            best = Some((
                                key,
                                Insertion {
                                    delta,
                                    nodes: buf.clone(),
                                },
                            ));
                        }
                    }
                }
            }
        }
        best
    }

    /// Removes a station whose visit is no longer needed.
    pub fn drop_unneeded_station(&self, vehicle: usize, nodes: &mut Vec<usize>) {
        let Some(pos) = nodes.iter().position(|&n| self.instance.kind(n) == NodeKind::Station) else {
            return;
        };
        let mut without = nodes.clone();
        without.remove(pos);
        let Some(after) = self.path_cost(vehicle, &without) else {
            return;
        };
        match self.path_cost(vehicle, nodes) {
            Some(before) if after > before + TOL => {}
            _ => *nodes = without,
        }
    }

    /// Checks a complete operating plan for `fleet`.
    ///
    /// Bookkeeping problems (a customer on two routes, a route for a vehicle
    /// outside the fleet, a customer neither served nor listed as unserved)
    /// are errors; route constraint failures are collected in the report.
    pub fn evaluate_solution(&self, fleet: &FleetMix, solution: &Solution) -> Result<SolutionReport> {
        fleet.validate(self.instance)?;
        let inst = self.instance;
        let mut served = BTreeSet::new();
        let mut vehicles = BTreeSet::new();
        for route in &solution.routes {
            if route.vehicle >= inst.vehicles.len() || !fleet.membership[route.vehicle] {
                return Err(Error::Consistency(format!(
                    "route for vehicle {} which is not in the fleet",
                    route.vehicle
                )));
            }
            if !vehicles.insert(route.vehicle) {
                return Err(Error::Consistency(format!(
                    "vehicle {} has more than one route",
                    route.vehicle
                )));
            }
            for &n in &route.nodes {
                if n >= inst.node_count() {
                    return Err(Error::Consistency(format!("unknown node {n}")));
                }
                if inst.kind(n) != NodeKind::Customer {
                    continue;
                }
                if !self.realized[n] {
                    return Err(Error::Consistency(format!("customer {n} served but not requested")));
                }
                if !served.insert(n) && !route_repeats(route, n) {
                    return Err(Error::Consistency(format!("customer {n} served twice")));
                }
            }
        }
        let mut unserved = BTreeSet::new();
        for &u in &solution.unserved {
            if served.contains(&u) {
                return Err(Error::Consistency(format!("customer {u} both served and unserved")));
            }
            if u >= inst.node_count() || !self.realized[u] {
                return Err(Error::Consistency(format!("unserved entry {u} is not a requested customer")));
            }
            unserved.insert(u);
        }
        if let Some(&c) = self
            .realized_list
            .iter()
            .find(|c| !served.contains(*c) && !unserved.contains(*c))
        {
            return Err(Error::Consistency(format!("customer {c} neither served nor unserved")));
        }

        let mut report = SolutionReport::default();
        for route in &solution.routes {
            if !route.serves_customers(inst) && route.nodes.len() <= 2 {
                report.routes.push(None);
                continue;
            }
            match self.evaluate_route(route) {
                Ok(e) => {
                    report.costs.fixed += e.fixed;
                    report.costs.energy += e.energy_cost;
                    report.costs.maintenance += e.maintenance_cost;
                    report.served_demand += e.demand;
                    report.routes.push(Some(e));
                }
                Err(v) => {
                    report.routes.push(None);
                    report.violations.push(v);
                }
            }
        }
        report.costs.penalty = unserved.iter().fold(0.0, |acc, &u| acc + self.penalty(u));
        report.costs.total =
            report.costs.fixed + report.costs.energy + report.costs.maintenance + report.costs.penalty;
        Ok(report)
    }
}

// A repeated visit inside one route is a route-level fault, reported by the
// evaluator rather than as a bookkeeping error.
fn route_repeats(route: &Route, n: usize) -> bool {
    route.nodes.iter().filter(|&&m| m == n).count() > 1
}

/// Prefix and suffix quantities of a station-free route under affine power,
/// from which the effect of one insertion follows in constant time.
struct LinearProfile<'n> {
    vehicle: usize,
    nodes: &'n [usize],
    t_idx: usize,
    /// kW at zero load and kW per demand unit.
    a: f64,
    b: f64,
    start: Vec<f64>,
    latest: Vec<f64>,
    /// Load on the arc leaving each node.
    load: Vec<f64>,
    /// Travel minutes before / after each node.
    before: Vec<f64>,
    after: Vec<f64>,
    energy: f64,
    cost: f64,
}

impl<'n> LinearProfile<'n> {
    /// `None` when the route itself is infeasible.
    fn new(p: &OperationalProblem, vehicle: usize, nodes: &'n [usize], a: f64, b: f64) -> Option<Self> {
        let inst = p.instance;
        let vt = inst.vehicle_type(vehicle);
        let t_idx = inst.vehicle_type_index(vehicle);
        let n = nodes.len();
        let total: f64 = nodes.iter().map(|&k| p.demand[k]).sum();
        let mut load = vec![0.0; n];
        let mut start = vec![0.0; n];
        let mut before = vec![0.0; n];
        let mut cur = match inst.direction {
            Direction::Pickup => 0.0,
            Direction::Delivery => total,
        };
        let mut energy = 0.0;
        start[0] = inst.nodes[nodes[0]].earliest();
        for w in 0..n - 1 {
            let (i, j) = (nodes[w], nodes[w + 1]);
            match inst.direction {
                Direction::Pickup => cur += p.demand[i],
                Direction::Delivery => cur -= p.demand[i],
            }
            load[w] = cur;
            let t = inst.travel_minutes(t_idx, i, j);
            energy += (a + b * cur) * t / 60.0;
            before[w + 1] = before[w] + t;
            start[w + 1] = inst.nodes[j].earliest().max(start[w] + inst.nodes[i].service_time + t);
            if start[w + 1] > inst.nodes[j].latest() + TOL {
                return None;
            }
        }
        if vt.is_electric() && energy > vt.battery_capacity + TOL {
            return None;
        }
        let mut latest = vec![0.0; n];
        latest[n - 1] = inst.nodes[nodes[n - 1]].latest();
        for w in (0..n - 1).rev() {
            let (i, j) = (nodes[w], nodes[w + 1]);
            let t = inst.travel_minutes(t_idx, i, j);
            latest[w] = inst.nodes[i].latest().min(latest[w + 1] - inst.nodes[i].service_time - t);
        }
        let drive = before[n - 1];
        let after = before.iter().map(|x| drive - x).collect();
        let cost = vt.daily_cost + vt.energy_cost * energy + vt.maintenance_cost * vt.speed_kmh * drive / 60.0;
        Some(LinearProfile {
            vehicle,
            nodes,
            t_idx,
            a,
            b,
            start,
            latest,
            load,
            before,
            after,
            energy,
            cost,
        })
    }

    /// Best insertion by jittered key, and whether some position failed on
    /// battery alone.
    fn best_insertion(&self, p: &OperationalProblem, u: usize, jitter: &mut dyn FnMut() -> f64) -> (Option<Insertion>, bool) {
        let inst = p.instance;
        let vt = inst.vehicle_type(self.vehicle);
        let nu = &inst.nodes[u];
        let d = p.demand[u];
        let e = |load: f64, t: f64| (self.a + self.b * load) * t / 60.0;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut soc_only = false;
        for q in 1..self.nodes.len() {
            let (i, j) = (self.nodes[q - 1], self.nodes[q]);
            let t_iu = inst.travel_minutes(self.t_idx, i, u);
            let arrive = nu.earliest().max(self.start[q - 1] + inst.nodes[i].service_time + t_iu);
            if arrive > nu.latest() + TOL {
                continue;
            }
            let t_uj = inst.travel_minutes(self.t_idx, u, j);
            let next = inst.nodes[j].earliest().max(arrive + nu.service_time + t_uj);
            if next > self.latest[q] + TOL {
                continue;
            }
            let t_ij = inst.travel_minutes(self.t_idx, i, j);
            let l = self.load[q - 1];
            let d_energy = match inst.direction {
                Direction::Pickup => {
                    e(l, t_iu) + e(l + d, t_uj) - e(l, t_ij) + self.b * d * self.after[q] / 60.0
                }
                Direction::Delivery => {
                    e(l + d, t_iu) + e(l, t_uj) - e(l, t_ij) + self.b * d * self.before[q - 1] / 60.0
                }
            };
            if vt.is_electric() && self.energy + d_energy > vt.battery_capacity + TOL {
                soc_only = true;
                continue;
            }
            let d_drive = t_iu + t_uj - t_ij;
            let delta = vt.energy_cost * d_energy + vt.maintenance_cost * vt.speed_kmh * d_drive / 60.0;
            let key = delta + delta.abs() * jitter();
            if best.is_none_or(|(k, _, _)| key < k - TOL) {
                best = Some((key, q, delta));
            }
        }
        let ins = best.map(|(_, q, delta)| {
            let mut nodes = Vec::with_capacity(self.nodes.len() + 1);
            nodes.extend_from_slice(&self.nodes[..q]);
            nodes.push(u);
            nodes.extend_from_slice(&self.nodes[q..]);
            Insertion { delta, nodes }
        });
        (ins, soc_only)
    }
}

/// A candidate path with `u` inserted.
#[derive(Debug, Clone, PartialEq)]
pub struct Insertion {
    pub delta: f64,
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SolutionReport {
    pub costs: CostBreakdown,
    pub served_demand: f64,
    pub routes: Vec<Option<RouteEval>>,
    pub violations: Vec<Violation>,
}

impl SolutionReport {
    pub fn feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Route given as an unordered arc list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcRoute {
    pub vehicle: usize,
    pub arcs: Vec<[usize; 2]>,
}

/// Chains an arc list into a path. A combustion vehicle touching a station is
/// reported before anything else, so that malformed station detours are
/// still classified by their root cause.
pub fn path_from_arcs(instance: &Instance, route: &ArcRoute) -> Result<Route, Violation> {
    let vehicle = route.vehicle;
    let fail = |kind, node, detail: String| Violation {
        kind,
        vehicle,
        node,
        detail,
    };
    if !instance.vehicle_type(vehicle).is_electric() {
        if let Some(s) = route
            .arcs
            .iter()
            .flatten()
            .copied()
            .find(|&n| instance.kind(n) == NodeKind::Station)
        {
            return Err(fail(
                ViolationKind::StationOnIcev,
                Some(s),
                format!("combustion vehicle uses an arc at station {s}"),
            ));
        }
    }
    let (start, end) = instance.tour_ends(vehicle);
    let mut nodes = vec![start];
    let mut used = vec![false; route.arcs.len()];
    let mut current = start;
    while current != end || nodes.len() == 1 {
        let next: Vec<usize> = (0..route.arcs.len())
            .filter(|&a| !used[a] && route.arcs[a][0] == current)
            .collect();
        match next.as_slice() {
            [a] => {
                used[*a] = true;
                current = route.arcs[*a][1];
                nodes.push(current);
            }
            _ => {
                return Err(fail(
                    ViolationKind::DepotOrder,
                    Some(current),
                    format!("arcs do not form a single path from {start} to {end}"),
                ))
            }
        }
        if nodes.len() > route.arcs.len() + 1 {
            break;
        }
    }
    if used.iter().any(|u| !u) || current != end {
        return Err(fail(
            ViolationKind::DepotOrder,
            None,
            format!("arcs do not form a single path from {start} to {end}"),
        ));
    }
    Ok(Route { vehicle, nodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::PowerContext;
    use crate::model::fixtures::line_instance;
    use crate::model::{InstanceFile, VehicleType};

    fn problem(inst: &Instance, t: f64) -> OperationalProblem<'_> {
        OperationalProblem::new(inst, &Scenario::all_requested(inst, t), &PowerContext::default()).unwrap()
    }

    #[test]
    fn empty_route_costs_nothing_in_solution() {
        let inst = line_instance(2, false, vec![VehicleType::electric_van()]);
        let p = problem(&inst, 20.0);
        assert_eq!(p.path_cost(0, &[0, 1]), Some(0.0));
    }

    #[test]
    fn route_cost_matches_arc_sum() {
        let inst = line_instance(2, false, vec![VehicleType::electric_van()]);
        let p = problem(&inst, 20.0);
        let e = p.evaluate_path(0, &[0, 2, 3, 1]).unwrap();
        // Loads while driving: 0, 10, 20 units; arcs 1, 1, 2 minutes.
        let vt = VehicleType::electric_van();
        let ctx = PowerContext::default();
        let kw = |units: f64| crate::energy::vehicle_power(&vt, units * 0.05, 20.0, &ctx).unwrap();
        let energy = (kw(0.0) + kw(10.0) + 2.0 * kw(20.0)) / 60.0;
        let km = 45.0 * 4.0 / 60.0;
        let expected = 0.1973 * energy + 0.080837 * km;
        assert!((e.cost - expected).abs() < 1e-12, "{} vs {expected}", e.cost);
        assert!((e.end_time - (4.0 + 6.0)).abs() < 1e-12);
    }

    #[test]
    fn violation_order_station_on_icev_first() {
        let inst = line_instance(3, true, vec![VehicleType::small_icev()]);
        let p = problem(&inst, 20.0);
        let station = inst.stations()[0];
        // Also breaks depot order and repeats a customer.
        let err = p.evaluate_path(0, &[0, 2, station, 2, 0]).unwrap_err();
        assert_eq!(err.kind, ViolationKind::StationOnIcev);
    }

    #[test]
    fn capacity_violation() {
        let mut small = VehicleType::electric_van();
        small.cargo_capacity = 15.0;
        let inst = line_instance(2, false, vec![small]);
        let p = problem(&inst, 20.0);
        assert_eq!(p.evaluate_path(0, &[0, 2, 3, 1]).unwrap_err().kind, ViolationKind::Capacity);
    }

    #[test]
    fn time_window_beats_soc() {
        let mut weak = VehicleType::electric_van();
        weak.battery_capacity = 0.01;
        let mut file = InstanceFile::from(&line_instance(2, false, vec![weak]));
        file.nodes[3].time_window = [0.0, 1.0];
        let inst = Instance::try_from(file).unwrap();
        let p = problem(&inst, 20.0);
        assert_eq!(p.evaluate_path(0, &[0, 2, 3, 1]).unwrap_err().kind, ViolationKind::TimeWindow);
        assert_eq!(p.evaluate_path(0, &[0, 2, 1]).unwrap_err().kind, ViolationKind::SocNegative);
    }

    #[test]
    fn station_restores_energy() {
        let plain = [0, 2, 3, 4, 5, 1];
        let roomy = line_instance(4, true, vec![VehicleType::electric_van()]);
        let needed = problem(&roomy, 20.0).evaluate_path(0, &plain).unwrap().energy_kwh;
        let mut weak = VehicleType::electric_van();
        weak.battery_capacity = 0.97 * needed;
        let inst = line_instance(4, true, vec![weak]);
        let p = problem(&inst, 20.0);
        let s = inst.stations()[0];
        assert_eq!(p.evaluate_path(0, &plain).unwrap_err().kind, ViolationKind::SocNegative);
        let e = p.evaluate_path(0, &[0, 2, 3, s, 4, 5, 1]).unwrap();
        assert!(e.charge_minutes > 0.0);
        let ins = p.cheapest_insertion(0, &[0, 2, 3, 4, 1], 5).unwrap();
        assert!(ins.nodes.contains(&s) && ins.nodes.contains(&5));
    }

    #[test]
    fn multiple_stations_rejected() {
        let inst = line_instance(1, true, vec![VehicleType::electric_van()]);
        let p = problem(&inst, 20.0);
        let s = inst.stations()[0];
        let err = p.evaluate_path(0, &[0, s, 2, s, 1]).unwrap_err();
        assert_eq!(err.kind, ViolationKind::MultipleStations);
    }

    #[test]
    fn insertion_matches_brute_force() {
        let inst = line_instance(4, false, vec![VehicleType::electric_van()]);
        let p = problem(&inst, -5.0);
        let route = [0, 2, 4, 1];
        let before = p.evaluate_path(0, &route).unwrap().cost;
        for u in [3, 5] {
            let mut best: Option<(f64, Vec<usize>)> = None;
            for pos in 1..route.len() {
                let mut cand = route.to_vec();
                cand.insert(pos, u);
                let c = p.evaluate_path(0, &cand).unwrap().cost - before;
                if best.as_ref().is_none_or(|b| c < b.0 - TOL) {
                    best = Some((c, cand));
                }
            }
            let (delta, nodes) = best.unwrap();
            let ins = p.cheapest_insertion(0, &route, u).unwrap();
            assert_eq!(ins.nodes, nodes);
            assert!((ins.delta - delta).abs() < 1e-12);
        }
    }

    #[test]
    fn solution_bookkeeping_errors() {
        let inst = line_instance(2, false, vec![VehicleType::electric_van()]);
        let p = problem(&inst, 20.0);
        let fleet = FleetMix::all(&inst);
        let both = Solution {
            routes: vec![Route { vehicle: 0, nodes: vec![0, 2, 1] }],
            unserved: vec![2, 3],
        };
        assert!(matches!(p.evaluate_solution(&fleet, &both), Err(Error::Consistency(_))));
        let ok = Solution {
            routes: vec![Route { vehicle: 0, nodes: vec![0, 2, 1] }],
            unserved: vec![3],
        };
        let r = p.evaluate_solution(&fleet, &ok).unwrap();
        assert!(r.feasible());
        assert!((r.costs.penalty - 30.0).abs() < 1e-12);
    }

    #[test]
    fn arcs_touching_station_on_icev() {
        let inst = line_instance(2, true, vec![VehicleType::small_icev()]);
        let s = inst.stations()[0];
        let r = ArcRoute {
            vehicle: 0,
            arcs: vec![[0, 2], [2, s], [s, 1]],
        };
        assert_eq!(path_from_arcs(&inst, &r).unwrap_err().kind, ViolationKind::StationOnIcev);
        let ok = ArcRoute {
            vehicle: 0,
            arcs: vec![[3, 1], [0, 2], [2, 3]],
        };
        assert_eq!(path_from_arcs(&inst, &ok).unwrap().nodes, vec![0, 2, 3, 1]);
        let broken = ArcRoute {
            vehicle: 0,
            arcs: vec![[0, 2], [3, 1]],
        };
        assert_eq!(path_from_arcs(&inst, &broken).unwrap_err().kind, ViolationKind::DepotOrder);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
        #[test]
        fn fast_insertion_matches_enumeration(seed in 0u64..10_000, temp in -15.0f64..35.0, keep in 1usize..5) {
            let spec = crate::scen::TinySpec { customers: 6, vehicles: 2, ..Default::default() };
            let inst = crate::scen::tiny_instance(&spec, seed).unwrap();
            let p = problem(&inst, temp);
            for v in 0..inst.vehicles.len() {
                let (start, end) = inst.tour_ends(v);
                let mut route = vec![start, end];
                for &c in inst.customers().iter().take(keep) {
                    if let Some(ins) = p.cheapest_insertion(v, &route, c) {
                        if !ins.nodes.iter().any(|&n| inst.kind(n) == NodeKind::Station) {
                            route = ins.nodes;
                        }
                    }
                }
                let Some(base) = p.path_cost(v, &route) else { continue };
                for &u in inst.customers().iter().filter(|c| !route.contains(c)) {
                    let plain = (1..route.len())
                        .filter_map(|q| {
                            let mut with = route.clone();
                            with.insert(q, u);
                            p.evaluate_path(v, &with).ok().map(|e| e.cost - base)
                        })
                        .fold(f64::INFINITY, f64::min);
                    let got = p.cheapest_insertion(v, &route, u);
                    if plain.is_finite() {
                        let got = got.expect("a plain insertion exists");
                        proptest::prop_assert!((got.delta - plain).abs() < 1e-9, "{} vs {}", got.delta, plain);
                    }
                    if let Some(ins) = p.cheapest_insertion(v, &route, u) {
                        let cost = p.evaluate_path(v, &ins.nodes).unwrap().cost;
                        proptest::prop_assert!((cost - base - ins.delta).abs() < 1e-9);
                    }
                }
            }
        }
    }
}
