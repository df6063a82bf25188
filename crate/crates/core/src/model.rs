//! Domain types for the operational network and the instance file schema.
//!
//! Node and vehicle ids are positional: node `i` must sit at index `i` of the
//! `nodes` array, likewise for vehicles. Travel times are minutes, stored as a
//! dense row-major matrix per vehicle type.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::ChargerKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    DepotStart,
    DepotEnd,
    Customer,
    Station,
    /// Driver home; start and end of tours for vehicles that declare one.
    Home,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateSystem {
    #[default]
    PlanarMeters,
    Degrees,
}

/// Whether cargo is collected along the tour (load starts empty) or
/// distributed (load starts with every routed demand on board).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    Pickup,
    Delivery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub kind: NodeKind,
    pub location: [f64; 2],
    #[serde(default)]
    pub demand: f64,
    /// Earliest and latest service start, minutes from shift start.
    pub time_window: [f64; 2],
    #[serde(default)]
    pub service_time: f64,
    /// Cost of leaving the customer unserved (USD).
    #[serde(default)]
    pub penalty: f64,
    /// Skill level a vehicle's driver must hold to serve this customer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skill: Option<u8>,
}

impl Node {
    pub fn earliest(&self) -> f64 {
        self.time_window[0]
    }

    pub fn latest(&self) -> f64 {
        self.time_window[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Powertrain {
    #[serde(alias = "EV")]
    Ev,
    #[serde(alias = "ICEV")]
    Icev,
}

/// Combustion engine constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineParams {
    /// kJ/rev/l
    pub friction_factor: f64,
    /// rev/s
    pub engine_speed: f64,
    /// l
    pub displacement: f64,
    pub engine_efficiency: f64,
    pub drivetrain_efficiency: f64,
}

impl Default for EngineParams {
    fn default() -> Self {
        EngineParams {
            friction_factor: 0.2,
            engine_speed: 33.0,
            displacement: 1.6,
            engine_efficiency: 0.9,
            drivetrain_efficiency: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleType {
    pub name: String,
    pub powertrain: Powertrain,
    /// kWh; the fuel energy range for combustion vehicles.
    pub battery_capacity: f64,
    /// Demand units.
    pub cargo_capacity: f64,
    pub speed_kmh: f64,
    /// kg
    pub kerb_mass: f64,
    /// kg of equipment always on board.
    #[serde(default)]
    pub additional_mass: f64,
    /// USD
    #[serde(default)]
    pub acquisition_cost: f64,
    /// USD per period the vehicle is used.
    #[serde(default)]
    pub daily_cost: f64,
    /// USD/kWh
    pub energy_cost: f64,
    /// USD/km
    pub maintenance_cost: f64,
    /// kW drawn by on-board equipment.
    #[serde(default)]
    pub auxiliary_power: f64,
    /// m²
    pub frontal_area: f64,
    pub drag_coefficient: f64,
    /// Whether climate-control power is drawn from the traction battery.
    #[serde(default = "default_true")]
    pub cabin_climate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine: Option<EngineParams>,
}

fn default_true() -> bool {
    true
}

impl VehicleType {
    pub fn is_electric(&self) -> bool {
        self.powertrain == Powertrain::Ev
    }

    /// Mid-sized electric pickup van.
    pub fn electric_van() -> Self {
        VehicleType {
            name: "van".into(),
            powertrain: Powertrain::Ev,
            battery_capacity: 33.0,
            cargo_capacity: 720.0,
            speed_kmh: 45.0,
            kerb_mass: 1426.0,
            additional_mass: 200.0,
            acquisition_cost: 28_223.0,
            daily_cost: 0.0,
            energy_cost: 0.1973,
            maintenance_cost: 0.080837,
            auxiliary_power: 0.0,
            frontal_area: 4.06,
            drag_coefficient: 0.34,
            cabin_climate: true,
            engine: None,
        }
    }

    /// Electric cargo bike carrying a powered climate box and no cabin.
    pub fn cargo_bike() -> Self {
        VehicleType {
            name: "bike".into(),
            powertrain: Powertrain::Ev,
            battery_capacity: 8.64,
            cargo_capacity: 288.0,
            speed_kmh: 40.0,
            kerb_mass: 322.0,
            additional_mass: 50.0,
            acquisition_cost: 17_900.0,
            daily_cost: 0.0,
            energy_cost: 0.1973,
            maintenance_cost: 0.017015,
            auxiliary_power: 0.1,
            frontal_area: 0.9,
            drag_coefficient: 1.0,
            cabin_climate: false,
            engine: None,
        }
    }

    /// Small combustion van; the battery field holds a generous fuel range.
    pub fn small_icev() -> Self {
        VehicleType {
            name: "small_icev".into(),
            powertrain: Powertrain::Icev,
            battery_capacity: 1000.0,
            cargo_capacity: 600.0,
            speed_kmh: 43.2,
            kerb_mass: 1623.0,
            additional_mass: 250.0,
            acquisition_cost: 21_000.0,
            daily_cost: 0.0,
            energy_cost: 0.2021,
            maintenance_cost: 0.115481,
            auxiliary_power: 0.0,
            frontal_area: 4.06,
            drag_coefficient: 0.34,
            cabin_climate: false,
            engine: Some(EngineParams::default()),
        }
    }

    pub fn large_icev() -> Self {
        VehicleType {
            name: "large_icev".into(),
            cargo_capacity: 1200.0,
            kerb_mass: 1800.0,
            additional_mass: 400.0,
            acquisition_cost: 28_000.0,
            ..VehicleType::small_icev()
        }
    }

    /// Electric van of the technician fleet.
    pub fn technician_ev() -> Self {
        VehicleType {
            name: "ev".into(),
            cargo_capacity: 600.0,
            speed_kmh: 43.2,
            kerb_mass: 1430.0,
            additional_mass: 250.0,
            acquisition_cost: 32_000.0,
            ..VehicleType::electric_van()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: usize,
    pub vehicle_type: String,
    /// Skill levels held by the driver; `None` means compatible with every task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skills: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub home_start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub home_end: Option<usize>,
    /// Distance from the driver's home to the nearest charger (km); used to
    /// order electric-vehicle eligibility.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charger_distance_km: Option<f64>,
}

/// On-disk representation of an [`Instance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub coordinates: CoordinateSystem,
    #[serde(default)]
    pub direction: Direction,
    /// kg per demand unit.
    #[serde(default)]
    pub unit_mass_kg: f64,
    #[serde(default)]
    pub triangle_inequality: bool,
    pub nodes: Vec<Node>,
    pub vehicle_types: Vec<VehicleType>,
    pub vehicles: Vec<Vehicle>,
    /// Vehicle type name (or `"default"`) to dense matrix, minutes.
    pub travel_time: BTreeMap<String, Vec<Vec<f64>>>,
    /// Customer id to request probability; missing customers default to 1.
    #[serde(default)]
    pub request_probabilities: BTreeMap<usize, f64>,
    /// Station id to charger technology; missing stations default to standard.
    #[serde(default)]
    pub chargers: BTreeMap<usize, ChargerKind>,
    /// Doctors per clinic for seasonal demand tables.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub clinic_doctors: BTreeMap<usize, u32>,
}

/// A validated operational network. Immutable once built except for the
/// vehicle type parameters, which sensitivity sweeps override.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub coordinates: CoordinateSystem,
    pub direction: Direction,
    pub unit_mass_kg: f64,
    pub triangle_inequality: bool,
    pub nodes: Vec<Node>,
    pub vehicle_types: Vec<VehicleType>,
    pub vehicles: Vec<Vehicle>,
    pub clinic_doctors: BTreeMap<usize, u32>,
    travel: Vec<Vec<f64>>,
    request_probabilities: Vec<f64>,
    chargers: Vec<Option<ChargerKind>>,
    depot_start: usize,
    depot_end: usize,
    customers: Vec<usize>,
    stations: Vec<usize>,
    vehicle_type_index: Vec<usize>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

impl TryFrom<InstanceFile> for Instance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        let n = file.nodes.len();
        let mut depot_start = None;
        let mut depot_end = None;
        let mut customers = Vec::new();
        let mut stations = Vec::new();
        for (idx, node) in file.nodes.iter().enumerate() {
            if node.id != idx {
                return Err(invalid(format!("node at position {idx} has id {}", node.id)));
            }
            let numbers = [
                node.location[0],
                node.location[1],
                node.demand,
                node.time_window[0],
                node.time_window[1],
                node.service_time,
                node.penalty,
            ];
            if numbers.iter().any(|x| !x.is_finite()) {
                return Err(invalid(format!("node {idx} has a non-finite field")));
            }
            if node.time_window[0] > node.time_window[1] {
                return Err(invalid(format!(
                    "node {idx}: time window start {} exceeds end {}",
                    node.time_window[0], node.time_window[1]
                )));
            }
            if node.demand < 0.0 {
                return Err(invalid(format!("node {idx}: negative demand")));
            }
            if node.service_time < 0.0 {
                return Err(invalid(format!("node {idx}: negative service time")));
            }
            if node.penalty < 0.0 {
                return Err(invalid(format!("node {idx}: negative penalty")));
            }
            match node.kind {
                NodeKind::DepotStart => {
                    if depot_start.replace(idx).is_some() {
                        return Err(invalid("more than one depot_start node"));
                    }
                }
                NodeKind::DepotEnd => {
                    if depot_end.replace(idx).is_some() {
                        return Err(invalid("more than one depot_end node"));
                    }
                }
                NodeKind::Customer => customers.push(idx),
                NodeKind::Station => stations.push(idx),
                NodeKind::Home => {}
            }
            if node.kind != NodeKind::Customer && node.demand != 0.0 {
                return Err(invalid(format!("non-customer node {idx} has demand")));
            }
        }
        let depot_start = depot_start.ok_or_else(|| invalid("missing depot_start node"))?;
        let depot_end = depot_end.ok_or_else(|| invalid("missing depot_end node"))?;

        if !(file.unit_mass_kg.is_finite() && file.unit_mass_kg >= 0.0) {
            return Err(invalid("unit_mass_kg must be finite and >= 0"));
        }

        for (i, vt) in file.vehicle_types.iter().enumerate() {
            if file.vehicle_types[..i].iter().any(|o| o.name == vt.name) {
                return Err(invalid(format!("duplicate vehicle type {}", vt.name)));
            }
            if !(vt.battery_capacity > 0.0 && vt.cargo_capacity > 0.0 && vt.speed_kmh > 0.0) {
                return Err(invalid(format!(
                    "vehicle type {}: battery, capacity and speed must be positive",
                    vt.name
                )));
            }
            let costs = [
                vt.acquisition_cost,
                vt.daily_cost,
                vt.energy_cost,
                vt.maintenance_cost,
                vt.kerb_mass,
                vt.additional_mass,
                vt.auxiliary_power,
            ];
            if costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                return Err(invalid(format!(
                    "vehicle type {}: costs, masses and auxiliary power must be >= 0",
                    vt.name
                )));
            }
            if !(vt.frontal_area > 0.0 && vt.drag_coefficient > 0.0) {
                return Err(invalid(format!(
                    "vehicle type {}: frontal area and drag coefficient must be positive",
                    vt.name
                )));
            }
        }

        let mut vehicle_type_index = Vec::with_capacity(file.vehicles.len());
        for (idx, v) in file.vehicles.iter().enumerate() {
            if v.id != idx {
                return Err(invalid(format!("vehicle at position {idx} has id {}", v.id)));
            }
            let t = file
                .vehicle_types
                .iter()
                .position(|t| t.name == v.vehicle_type)
                .ok_or_else(|| {
                    invalid(format!("vehicle {idx}: unknown type {}", v.vehicle_type))
                })?;
            vehicle_type_index.push(t);
            for home in [v.home_start, v.home_end].into_iter().flatten() {
                if file.nodes.get(home).map(|n| n.kind) != Some(NodeKind::Home) {
                    return Err(invalid(format!(
                        "vehicle {idx}: home node {home} is not a home node"
                    )));
                }
            }
        }

        let mut travel = Vec::with_capacity(file.vehicle_types.len());
        for vt in &file.vehicle_types {
            let matrix = file
                .travel_time
                .get(&vt.name)
                .or_else(|| file.travel_time.get("default"))
                .ok_or_else(|| invalid(format!("no travel-time matrix for type {}", vt.name)))?;
            if matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
                return Err(invalid(format!(
                    "travel-time matrix for type {} must be {n}x{n}",
                    vt.name
                )));
            }
            let mut flat = Vec::with_capacity(n * n);
            for (i, row) in matrix.iter().enumerate() {
                for (j, &t) in row.iter().enumerate() {
                    if !(t.is_finite() && t >= 0.0) {
                        return Err(invalid(format!(
                            "travel time {i}->{j} for type {} must be finite and >= 0",
                            vt.name
                        )));
                    }
                    if i == j && t != 0.0 {
                        return Err(invalid(format!("travel time {i}->{i} must be 0")));
                    }
                    flat.push(t);
                }
            }
            travel.push(flat);
        }

        let mut request_probabilities = vec![0.0; n];
        for &c in &customers {
            request_probabilities[c] = 1.0;
        }
        for (&id, &p) in &file.request_probabilities {
            if file.nodes.get(id).map(|n| n.kind) != Some(NodeKind::Customer) {
                return Err(invalid(format!("request probability for non-customer {id}")));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(format!("customer {id}: probability {p} outside [0, 1]")));
            }
            request_probabilities[id] = p;
        }

        let mut chargers = vec![None; n];
        for &s in &stations {
            chargers[s] = Some(ChargerKind::Standard30kWh);
        }
        for (&id, &kind) in &file.chargers {
            if file.nodes.get(id).map(|n| n.kind) != Some(NodeKind::Station) {
                return Err(invalid(format!("charger assigned to non-station {id}")));
            }
            chargers[id] = Some(kind);
        }
        for &id in file.clinic_doctors.keys() {
            if file.nodes.get(id).map(|n| n.kind) != Some(NodeKind::Customer) {
                return Err(invalid(format!("doctor count for non-customer {id}")));
            }
        }

        Ok(Instance {
            name: file.name,
            coordinates: file.coordinates,
            direction: file.direction,
            unit_mass_kg: file.unit_mass_kg,
            triangle_inequality: file.triangle_inequality,
            nodes: file.nodes,
            vehicle_types: file.vehicle_types,
            vehicles: file.vehicles,
            clinic_doctors: file.clinic_doctors,
            travel,
            request_probabilities,
            chargers,
            depot_start,
            depot_end,
            customers,
            stations,
            vehicle_type_index,
        })
    }
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        let n = inst.nodes.len();
        let travel_time = inst
            .vehicle_types
            .iter()
            .zip(&inst.travel)
            .map(|(vt, flat)| (vt.name.clone(), flat.chunks(n.max(1)).map(<[f64]>::to_vec).collect()))
            .collect();
        InstanceFile {
            name: inst.name.clone(),
            coordinates: inst.coordinates,
            direction: inst.direction,
            unit_mass_kg: inst.unit_mass_kg,
            triangle_inequality: inst.triangle_inequality,
            nodes: inst.nodes.clone(),
            vehicle_types: inst.vehicle_types.clone(),
            vehicles: inst.vehicles.clone(),
            travel_time,
            request_probabilities: inst
                .customers
                .iter()
                .map(|&c| (c, inst.request_probabilities[c]))
                .collect(),
            chargers: inst
                .stations
                .iter()
                .filter_map(|&s| inst.chargers[s].map(|k| (s, k)))
                .collect(),
            clinic_doctors: inst.clinic_doctors.clone(),
        }
    }
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        Instance::try_from(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&InstanceFile::from(self)).expect("instance serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn depot_start(&self) -> usize {
        self.depot_start
    }

    pub fn depot_end(&self) -> usize {
        self.depot_end
    }

    /// Master customer list in node order.
    pub fn customers(&self) -> &[usize] {
        &self.customers
    }

    pub fn stations(&self) -> &[usize] {
        &self.stations
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        self.nodes[node].kind
    }

    pub fn request_probability(&self, node: usize) -> f64 {
        self.request_probabilities[node]
    }

    pub fn charger(&self, node: usize) -> Option<ChargerKind> {
        self.chargers[node]
    }

    pub fn vehicle_type(&self, vehicle: usize) -> &VehicleType {
        &self.vehicle_types[self.vehicle_type_index[vehicle]]
    }

    pub fn vehicle_type_index(&self, vehicle: usize) -> usize {
        self.vehicle_type_index[vehicle]
    }

    pub fn type_index(&self, name: &str) -> Option<usize> {
        self.vehicle_types.iter().position(|t| t.name == name)
    }

    /// Travel time in minutes from `i` to `j` for vehicle type `type_idx`.
    #[inline]
    pub fn travel_minutes(&self, type_idx: usize, i: usize, j: usize) -> f64 {
        self.travel[type_idx][i * self.nodes.len() + j]
    }

    /// Start and end node of `vehicle`'s tours.
    pub fn tour_ends(&self, vehicle: usize) -> (usize, usize) {
        let v = &self.vehicles[vehicle];
        (
            v.home_start.unwrap_or(self.depot_start),
            v.home_end.unwrap_or(self.depot_end),
        )
    }

    /// Compatibility a_ik between a customer and a vehicle's driver.
    pub fn compatible(&self, node: usize, vehicle: usize) -> bool {
        match (self.nodes[node].skill, &self.vehicles[vehicle].skills) {
            (Some(level), Some(skills)) => skills.contains(&level),
            _ => true,
        }
    }

    /// Cargo mass in kg for `units` of demand.
    pub fn cargo_mass(&self, units: f64) -> f64 {
        units * self.unit_mass_kg
    }
}

/// Reads and validates an instance file.
pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    Instance::from_json(&text)
}

/// One realized operational period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Request indicators over the master customer list, in node order.
    pub requests: Vec<u8>,
    /// Ambient temperature, °C.
    pub temperature: f64,
    /// Customer id to demand, replacing the node's nominal demand.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub demand_overrides: BTreeMap<usize, f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Scenario {
    /// Every customer requested, nominal demands.
    pub fn all_requested(instance: &Instance, temperature: f64) -> Self {
        Scenario {
            requests: vec![1; instance.customers().len()],
            temperature,
            demand_overrides: BTreeMap::new(),
            seed: 0,
            label: None,
        }
    }

    pub fn validate(&self, instance: &Instance) -> Result<()> {
        if self.requests.len() != instance.customers().len() {
            return Err(invalid(format!(
                "scenario has {} request flags for {} customers",
                self.requests.len(),
                instance.customers().len()
            )));
        }
        if self.requests.iter().any(|&r| r > 1) {
            return Err(invalid("request flags must be 0 or 1"));
        }
        if !self.temperature.is_finite() {
            return Err(invalid("scenario temperature must be finite"));
        }
        for (&id, &d) in &self.demand_overrides {
            if instance.nodes.get(id).map(|n| n.kind) != Some(NodeKind::Customer) {
                return Err(invalid(format!("demand override for non-customer {id}")));
            }
            if !(d.is_finite() && d >= 0.0) {
                return Err(invalid(format!("customer {id}: demand override {d} < 0")));
            }
        }
        Ok(())
    }

    /// Node ids of the customers requested in this period.
    pub fn realized_customers(&self, instance: &Instance) -> Vec<usize> {
        instance
            .customers()
            .iter()
            .zip(&self.requests)
            .filter(|(_, &r)| r == 1)
            .map(|(&c, _)| c)
            .collect()
    }

    pub fn demand(&self, instance: &Instance, node: usize) -> f64 {
        self.demand_overrides
            .get(&node)
            .copied()
            .unwrap_or(instance.nodes[node].demand)
    }
}

/// Acquired subset of the master vehicle list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FleetMix {
    pub membership: Vec<bool>,
}

impl FleetMix {
    pub fn all(instance: &Instance) -> Self {
        FleetMix {
            membership: vec![true; instance.vehicles.len()],
        }
    }

    pub fn empty(instance: &Instance) -> Self {
        FleetMix {
            membership: vec![false; instance.vehicles.len()],
        }
    }

    /// Selects the first `counts[t]` vehicles of each type in master order.
    pub fn from_counts(instance: &Instance, counts: &[usize]) -> Result<Self> {
        if counts.len() != instance.vehicle_types.len() {
            return Err(Error::Config(format!(
                "expected {} type counts, got {}",
                instance.vehicle_types.len(),
                counts.len()
            )));
        }
        let mut remaining = counts.to_vec();
        let mut membership = vec![false; instance.vehicles.len()];
        for (v, slot) in membership.iter_mut().enumerate() {
            let t = instance.vehicle_type_index(v);
            if remaining[t] > 0 {
                remaining[t] -= 1;
                *slot = true;
            }
        }
        if let Some(t) = remaining.iter().position(|&r| r > 0) {
            return Err(Error::Config(format!(
                "master list holds fewer than {} vehicles of type {}",
                counts[t], instance.vehicle_types[t].name
            )));
        }
        Ok(FleetMix { membership })
    }

    pub fn selected(&self) -> Vec<usize> {
        self.membership
            .iter()
            .enumerate()
            .filter(|(_, &w)| w)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn electric(&self, instance: &Instance) -> Vec<usize> {
        self.selected()
            .into_iter()
            .filter(|&k| instance.vehicle_type(k).is_electric())
            .collect()
    }

    pub fn counts(&self, instance: &Instance) -> Vec<usize> {
        let mut counts = vec![0; instance.vehicle_types.len()];
        for k in self.selected() {
            counts[instance.vehicle_type_index(k)] += 1;
        }
        counts
    }

    pub fn acquisition_cost(&self, instance: &Instance) -> f64 {
        self.selected()
            .into_iter()
            .map(|k| instance.vehicle_type(k).acquisition_cost)
            .sum()
    }

    pub fn validate(&self, instance: &Instance) -> Result<()> {
        if self.membership.len() != instance.vehicles.len() {
            return Err(invalid(format!(
                "fleet membership has {} entries for {} vehicles",
                self.membership.len(),
                instance.vehicles.len()
            )));
        }
        Ok(())
    }
}

/// A vehicle tour as a full node sequence, tour start and end included.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Route {
    pub vehicle: usize,
    pub nodes: Vec<usize>,
}

impl Route {
    pub fn empty(instance: &Instance, vehicle: usize) -> Self {
        let (s, e) = instance.tour_ends(vehicle);
        Route {
            vehicle,
            nodes: vec![s, e],
        }
    }

    pub fn customers<'a>(&'a self, instance: &'a Instance) -> impl Iterator<Item = usize> + 'a {
        self.nodes
            .iter()
            .copied()
            .filter(move |&n| instance.kind(n) == NodeKind::Customer)
    }

    pub fn serves_customers(&self, instance: &Instance) -> bool {
        self.customers(instance).next().is_some()
    }
}

/// Routes plus customers left unserved.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Solution {
    pub routes: Vec<Route>,
    pub unserved: Vec<usize>,
}

/// Cost decomposition of an operating plan, USD.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub fixed: f64,
    pub energy: f64,
    pub maintenance: f64,
    pub penalty: f64,
    pub total: f64,
}

/// Arcs a vehicle may traverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArcSet {
    pub vehicle: usize,
    pub arcs: Vec<(usize, usize)>,
}

/// Builds the per-vehicle arc sets of the selected fleet. Combustion vehicles
/// never touch a station, incompatible customers are excluded, and no arc
/// enters the tour start or leaves the tour end.
pub fn build_arc_set(instance: &Instance, fleet: &FleetMix) -> Vec<ArcSet> {
    fleet
        .selected()
        .into_iter()
        .map(|k| {
            let (start, end) = instance.tour_ends(k);
            let electric = instance.vehicle_type(k).is_electric();
            let mut interior: Vec<usize> = instance
                .customers()
                .iter()
                .copied()
                .filter(|&c| instance.compatible(c, k))
                .collect();
            if electric {
                interior.extend_from_slice(instance.stations());
            }
            interior.sort_unstable();
            let mut arcs = Vec::new();
            let origins = std::iter::once(start).chain(interior.iter().copied());
            for i in origins {
                let targets = interior.iter().copied().chain(std::iter::once(end));
                for j in targets {
                    if i != j && !(i == start && j == end && start == end) {
                        arcs.push((i, j));
                    }
                }
            }
            if start != end {
                arcs.push((start, end));
                arcs.sort_unstable();
                arcs.dedup();
            }
            arcs.sort_unstable();
            ArcSet { vehicle: k, arcs }
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Depot pair, `customers` customers on a line, optional station, planar
    /// travel times at 1 minute per km.
    pub fn line_instance(customers: usize, station: bool, types: Vec<VehicleType>) -> Instance {
        let mut nodes = vec![
            node(0, NodeKind::DepotStart, 0.0),
            node(1, NodeKind::DepotEnd, 0.0),
        ];
        for c in 0..customers {
            let mut n = node(nodes.len(), NodeKind::Customer, (c + 1) as f64);
            n.demand = 10.0;
            n.penalty = 30.0;
            n.service_time = 3.0;
            nodes.push(n);
        }
        if station {
            nodes.push(node(nodes.len(), NodeKind::Station, 0.5));
        }
        let n = nodes.len();
        let matrix: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (nodes[i].location[0] - nodes[j].location[0]).abs())
                    .collect()
            })
            .collect();
        let vehicles = types
            .iter()
            .enumerate()
            .map(|(id, t)| Vehicle {
                id,
                vehicle_type: t.name.clone(),
                skills: None,
                home_start: None,
                home_end: None,
                charger_distance_km: None,
            })
            .collect();
        let file = InstanceFile {
            name: "line".into(),
            coordinates: CoordinateSystem::PlanarMeters,
            direction: Direction::Pickup,
            unit_mass_kg: 0.05,
            triangle_inequality: true,
            nodes,
            vehicle_types: types,
            vehicles,
            travel_time: [("default".to_string(), matrix)].into_iter().collect(),
            request_probabilities: BTreeMap::new(),
            chargers: BTreeMap::new(),
            clinic_doctors: BTreeMap::new(),
        };
        Instance::try_from(file).unwrap()
    }

    fn node(id: usize, kind: NodeKind, x: f64) -> Node {
        Node {
            id,
            kind,
            location: [x, 0.0],
            demand: 0.0,
            time_window: [0.0, 600.0],
            service_time: 0.0,
            penalty: 0.0,
            skill: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::line_instance;
    use super::*;

    fn minimal_json() -> String {
        r#"{
          "nodes": [
            {"id": 0, "kind": "depot_start", "location": [0, 0], "time_window": [0, 150]},
            {"id": 1, "kind": "depot_end", "location": [1, 0], "time_window": [0, 150]},
            {"id": 2, "kind": "customer", "location": [2, 0], "demand": 5, "time_window": [0, 150], "service_time": 3, "penalty": 30},
            {"id": 3, "kind": "customer", "location": [3, 0], "demand": 5, "time_window": [0, 150], "service_time": 3, "penalty": 30}
          ],
          "vehicle_types": [{"name": "van", "powertrain": "EV", "battery_capacity": 33, "cargo_capacity": 720,
                             "speed_kmh": 45, "kerb_mass": 1426, "energy_cost": 0.1973, "maintenance_cost": 0.08,
                             "frontal_area": 4.06, "drag_coefficient": 0.34}],
          "vehicles": [{"id": 0, "vehicle_type": "van"}],
          "travel_time": {"default": [[0,1,2,3],[1,0,1,2],[2,1,0,1],[3,2,1,0]]},
          "request_probabilities": {"2": 0.5, "3": 0.25}
        }"#
        .to_string()
    }

    #[test]
    fn loads_minimal_instance() {
        let inst = Instance::from_json(&minimal_json()).unwrap();
        assert_eq!(inst.customers().len(), 2);
        assert!(inst.stations().is_empty());
        assert_eq!(inst.request_probability(3), 0.25);
        assert_eq!(inst.travel_minutes(0, 0, 3), 3.0);
    }

    #[test]
    fn rejects_inverted_time_window() {
        let text = minimal_json().replace(
            r#""demand": 5, "time_window": [0, 150], "service_time": 3, "penalty": 30},
            {"id": 3"#,
            r#""demand": 5, "time_window": [90, 10], "service_time": 3, "penalty": 30},
            {"id": 3"#,
        );
        match Instance::from_json(&text) {
            Err(Error::Validation(msg)) => assert!(msg.contains("node 2"), "{msg}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(Instance::from_json("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn rejects_nonzero_diagonal() {
        let text = minimal_json().replace("[[0,1,2,3]", "[[1,1,2,3]");
        assert!(matches!(Instance::from_json(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn json_round_trip() {
        let inst = line_instance(3, true, vec![VehicleType::electric_van()]);
        let back = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn cargo_units_convert_to_mass() {
        let inst = line_instance(1, false, vec![VehicleType::electric_van()]);
        assert!((inst.cargo_mass(100.0) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn icev_arcs_avoid_stations() {
        let inst = line_instance(2, true, vec![VehicleType::small_icev(), VehicleType::electric_van()]);
        let station = inst.stations()[0];
        let sets = build_arc_set(&inst, &FleetMix::all(&inst));
        let icev = &sets[0];
        assert!(icev.arcs.iter().all(|&(i, j)| i != station && j != station));
        let ev = &sets[1];
        assert!(ev.arcs.iter().any(|&(i, j)| i == station || j == station));
        for set in &sets {
            assert!(set.arcs.iter().all(|&(i, j)| i != j));
            assert!(set.arcs.iter().all(|&(_, j)| j != inst.depot_start()));
            assert!(set.arcs.iter().all(|&(i, _)| i != inst.depot_end()));
        }
        assert_eq!(build_arc_set(&inst, &FleetMix::all(&inst)), sets);
    }

    #[test]
    fn incompatible_customers_have_no_arcs() {
        let mut file = InstanceFile::from(&line_instance(2, false, vec![VehicleType::electric_van()]));
        file.nodes[2].skill = Some(3);
        file.vehicles[0].skills = Some(vec![1, 2]);
        let inst = Instance::try_from(file).unwrap();
        let sets = build_arc_set(&inst, &FleetMix::all(&inst));
        assert!(sets[0].arcs.iter().all(|&(i, j)| i != 2 && j != 2));
        assert!(sets[0].arcs.iter().any(|&(_, j)| j == 3));
    }

    #[test]
    fn fleet_from_counts_takes_first_of_each_type() {
        let inst = line_instance(
            1,
            false,
            vec![VehicleType::electric_van(), VehicleType::cargo_bike()],
        );
        let mut file = InstanceFile::from(&inst);
        file.vehicles.push(Vehicle {
            id: 2,
            vehicle_type: "bike".into(),
            skills: None,
            home_start: None,
            home_end: None,
            charger_distance_km: None,
        });
        let inst = Instance::try_from(file).unwrap();
        let fleet = FleetMix::from_counts(&inst, &[0, 1]).unwrap();
        assert_eq!(fleet.selected(), vec![1]);
        assert_eq!(fleet.counts(&inst), vec![0, 1]);
        assert!(FleetMix::from_counts(&inst, &[2, 0]).is_err());
    }
}
