//! Browser bindings. Every export takes plain numbers and returns JSON text,
//! so the page needs nothing beyond `JSON.parse`.

use fleetmix_core::alns::{self, AlnsParams};
use fleetmix_core::energy::{climate_power, mechanical_power, ChargingFunction, PowerContext, PowerModel};
use fleetmix_core::eval::OperationalProblem;
use fleetmix_core::model::{FleetMix, Scenario, VehicleType};
use fleetmix_core::oracle::{exact_solve, OracleLimits};
use fleetmix_core::scen::{tiny_instance, TinySpec};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest instance the oracle is asked to solve in the browser.
const ORACLE_CUSTOMERS: usize = 6;

fn to_js<T: Serialize>(value: &T) -> Result<String, JsValue> {
    serde_json::to_string(value).map_err(|e| JsValue::from_str(&e.to_string()))
}

fn js_err(e: fleetmix_core::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

#[derive(Serialize)]
struct PowerRow {
    temperature: f64,
    climate_kw: f64,
    van_kw: f64,
    bike_kw: f64,
    van_climate_share: f64,
}

/// Power draw of the electric van and cargo bike over a temperature range,
/// at the given speed and load.
#[wasm_bindgen]
pub fn power_profile(t_min: f64, t_max: f64, speed_kmh: f64, load_kg: f64) -> Result<String, JsValue> {
    if !(t_min <= t_max) || !(speed_kmh > 0.0) || !(load_kg >= 0.0) {
        return Err(JsValue::from_str("need t_min <= t_max, a positive speed and a non-negative load"));
    }
    let ctx = PowerContext::default();
    let van = VehicleType {
        speed_kmh,
        ..VehicleType::electric_van()
    };
    let bike = VehicleType::cargo_bike();
    let steps = ((t_max - t_min).round() as usize).clamp(1, 200);
    let mut rows = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let t = t_min + (t_max - t_min) * i as f64 / steps as f64;
        let climate = climate_power(&ctx, t).map_err(js_err)?;
        let van_kw = PowerModel::new(&van, t, &ctx).map_err(js_err)?.power(load_kg);
        let bike_kw = PowerModel::new(&bike, t, &ctx).map_err(js_err)?.power(load_kg.min(bike.cargo_capacity));
        let mech = mechanical_power(&van, load_kg, &ctx);
        rows.push(PowerRow {
            temperature: t,
            climate_kw: climate,
            van_kw,
            bike_kw,
            van_climate_share: if climate + mech > 0.0 { climate / (climate + mech) } else { 0.0 },
        });
    }
    to_js(&rows)
}

#[derive(Serialize)]
struct Curve {
    name: &'static str,
    breakpoints: Vec<(f64, f64)>,
    full_minutes: f64,
    /// Minutes to go from `from_soc` to `to_soc`, if both are in range.
    charge_minutes: Option<f64>,
}

/// Both piecewise linear charging curves, plus the time each needs to move
/// a battery between two charge levels (kWh).
#[wasm_bindgen]
pub fn charging_curves(from_soc: f64, to_soc: f64) -> Result<String, JsValue> {
    let curves: Vec<Curve> = [
        ("standard", ChargingFunction::standard_30kwh()),
        ("fast", ChargingFunction::fast_30kwh()),
    ]
    .into_iter()
    .map(|(name, f)| {
        let charge_minutes = match (f.time_to(from_soc), f.time_to(to_soc)) {
            (Ok(a), Ok(b)) if b >= a => Some(b - a),
            _ => None,
        };
        Curve {
            name,
            breakpoints: f.breakpoints().to_vec(),
            full_minutes: f.full_time(),
            charge_minutes,
        }
    })
    .collect();
    to_js(&curves)
}

#[derive(Serialize)]
struct DemoNode {
    id: usize,
    kind: fleetmix_core::model::NodeKind,
    x: f64,
    y: f64,
    demand: f64,
}

#[derive(Serialize)]
struct DemoRoute {
    vehicle: usize,
    vehicle_type: String,
    nodes: Vec<usize>,
}

#[derive(Serialize)]
struct DemoResult {
    nodes: Vec<DemoNode>,
    routes: Vec<DemoRoute>,
    unserved: Vec<usize>,
    costs: fleetmix_core::model::CostBreakdown,
    initial_cost: f64,
    iterations: usize,
    /// Exact optimum, for instances small enough to enumerate.
    optimum: Option<f64>,
}

/// Generates a random planar instance, routes it with ALNS and, when small,
/// checks the result against the exact solver.
#[wasm_bindgen]
pub fn solve_demo(customers: u32, vehicles: u32, temperature: f64, iterations: u32, seed: u32) -> Result<String, JsValue> {
    let spec = TinySpec {
        customers: (customers as usize).clamp(1, 40),
        vehicles: (vehicles as usize).clamp(1, 6),
        horizon: 240.0,
        ..TinySpec::default()
    };
    let seed = u64::from(seed);
    let inst = tiny_instance(&spec, seed).map_err(js_err)?;
    let sc = Scenario::all_requested(&inst, temperature);
    let problem = OperationalProblem::new(&inst, &sc, &PowerContext::default()).map_err(js_err)?;
    let fleet = FleetMix::all(&inst);
    // No wall clock in the browser; the iteration cap is the only limit.
    let params = AlnsParams {
        max_iterations: (iterations as usize).clamp(1, 20_000),
        time_limit_secs: None,
        ..AlnsParams::default()
    };
    let out = alns::solve(&problem, &fleet, &params, seed).map_err(js_err)?;
    let report = problem.evaluate_solution(&fleet, &out.solution).map_err(js_err)?;
    let optimum = if spec.customers <= ORACLE_CUSTOMERS && spec.vehicles <= 2 {
        exact_solve(&problem, &fleet, &OracleLimits::default()).ok().map(|o| o.cost)
    } else {
        None
    };
    let result = DemoResult {
        nodes: inst
            .nodes
            .iter()
            .map(|n| DemoNode {
                id: n.id,
                kind: n.kind,
                x: n.location[0],
                y: n.location[1],
                demand: n.demand,
            })
            .collect(),
        routes: out
            .solution
            .routes
            .iter()
            .map(|r| DemoRoute {
                vehicle: r.vehicle,
                vehicle_type: inst.vehicles[r.vehicle].vehicle_type.clone(),
                nodes: r.nodes.clone(),
            })
            .collect(),
        unserved: out.solution.unserved.clone(),
        costs: report.costs,
        initial_cost: out.initial_cost,
        iterations: out.iterations,
        optimum,
    };
    to_js(&result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_profile_rows_cover_the_range() {
        let rows: serde_json::Value = serde_json::from_str(&power_profile(-10.0, 30.0, 43.2, 200.0).unwrap()).unwrap();
        let rows = rows.as_array().unwrap();
        assert_eq!(rows.len(), 41);
        assert_eq!(rows[0]["temperature"], -10.0);
        let share = rows[0]["van_climate_share"].as_f64().unwrap();
        assert!((0.5..0.56).contains(&share), "{share}");
    }

    #[test]
    fn charging_curves_report_full_times() {
        let v: serde_json::Value = serde_json::from_str(&charging_curves(0.0, 30.0).unwrap()).unwrap();
        assert!((v[0]["full_minutes"].as_f64().unwrap() - 227.25).abs() < 1e-9);
        assert!((v[1]["charge_minutes"].as_f64().unwrap() - 49.995).abs() < 1e-9);
        let v: serde_json::Value = serde_json::from_str(&charging_curves(20.0, 10.0).unwrap()).unwrap();
        assert!(v[0]["charge_minutes"].is_null());
    }

    #[test]
    fn demo_solution_is_bounded_by_the_optimum() {
        let v: serde_json::Value = serde_json::from_str(&solve_demo(5, 2, 5.0, 300, 4).unwrap()).unwrap();
        let total = v["costs"]["total"].as_f64().unwrap();
        let best = v["optimum"].as_f64().unwrap();
        assert!(best <= total + 1e-9);
        assert!(v["nodes"].as_array().unwrap().len() >= 7);
    }
}
