#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fleetmix_core::energy::ChargerKind;
use fleetmix_core::model::{Instance, InstanceFile, NodeKind, Scenario, VehicleType};
use fleetmix_core::scen::{tiny_instance, TinySpec};

pub fn fleetmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fleetmix"))
        .args(args)
        .env("FLEETMIX_LOG", "error")
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn bundled_region_h() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/regionh_synthetic/instance.json")
}

/// One combustion van serving customers 2 and 3, with stations at 4 and 5.
pub fn icev_two_stations() -> Instance {
    let spec = TinySpec {
        customers: 4,
        vehicles: 1,
        station: false,
        ..TinySpec::default()
    };
    let mut file = InstanceFile::from(&tiny_instance(&spec, 5).unwrap());
    for id in [4, 5] {
        let n = &mut file.nodes[id];
        n.kind = NodeKind::Station;
        n.demand = 0.0;
        n.penalty = 0.0;
        n.service_time = 0.0;
        n.skill = None;
        file.chargers.insert(id, ChargerKind::Standard30kWh);
        file.request_probabilities.remove(&id);
    }
    let name = file.vehicle_types[0].name.clone();
    file.vehicle_types[0] = VehicleType {
        name,
        ..VehicleType::small_icev()
    };
    Instance::try_from(file).unwrap()
}

/// Writes the counterexample instance, a scenario requesting everyone, and
/// the two rejected plans. Returns (instance, scenario, [time reset, cycle]).
pub fn write_counterexamples(dir: &Path) -> (PathBuf, PathBuf, [PathBuf; 2]) {
    let inst = icev_two_stations();
    let instance = dir.join("instance.json");
    std::fs::write(&instance, inst.to_json()).unwrap();
    let scenario = dir.join("scenario.json");
    let sc = Scenario::all_requested(&inst, 10.0);
    std::fs::write(&scenario, serde_json::to_string(&sc).unwrap()).unwrap();
    let reset = dir.join("time_reset.json");
    std::fs::write(&reset, r#"{"routes": [{"vehicle": 0, "nodes": [0, 2, 4, 3, 1]}]}"#).unwrap();
    let cycle = dir.join("station_cycle.json");
    std::fs::write(
        &cycle,
        r#"{"routes": [{"vehicle": 0, "arcs": [[0, 2], [2, 3], [3, 1], [4, 5], [5, 4]]}]}"#,
    )
    .unwrap();
    (instance, scenario, [reset, cycle])
}

pub fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// CSV body without the leading comment lines.
pub fn csv_body(p: &Path) -> String {
    std::fs::read_to_string(p)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}
