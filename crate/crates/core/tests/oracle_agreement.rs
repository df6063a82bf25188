use fleetmix_core::alns::{self, AlnsParams};
use fleetmix_core::energy::PowerContext;
use fleetmix_core::eval::OperationalProblem;
use fleetmix_core::model::{FleetMix, Scenario};
use fleetmix_core::oracle::{exact_solve, OracleLimits};
use fleetmix_core::scen::{tiny_instance, TinySpec};

#[test]
fn alns_reaches_the_exact_optimum_on_tiny_periods() {
    let params = AlnsParams {
        time_limit_secs: None,
        ..AlnsParams::default()
    };
    let mut exact = 0;
    let seeds = 200..212u64;
    for seed in seeds.clone() {
        let spec = TinySpec {
            customers: 3 + (seed % 4) as usize,
            vehicles: 1 + (seed % 2) as usize,
            ..TinySpec::default()
        };
        let inst = tiny_instance(&spec, seed).unwrap();
        let temperature = -10.0 + (seed % 5) as f64 * 10.0;
        let p = OperationalProblem::new(&inst, &Scenario::all_requested(&inst, temperature), &PowerContext::default()).unwrap();
        let fleet = FleetMix::all(&inst);
        let best = exact_solve(&p, &fleet, &OracleLimits::default()).unwrap();
        let found = alns::solve(&p, &fleet, &params, seed).unwrap();
        assert!(found.cost >= best.cost - 1e-9, "seed {seed}: heuristic beat the optimum");
        assert!(found.cost <= 1.02 * best.cost + 1e-9, "seed {seed}: {} vs {}", found.cost, best.cost);
        if found.cost <= best.cost + 1e-9 {
            exact += 1;
        }
    }
    assert!(exact * 10 >= 9 * seeds.count(), "only {exact} exact");
}

#[test]
fn oracle_is_deterministic() {
    let inst = tiny_instance(&TinySpec::default(), 17).unwrap();
    let p = OperationalProblem::new(&inst, &Scenario::all_requested(&inst, 0.0), &PowerContext::default()).unwrap();
    let fleet = FleetMix::all(&inst);
    let a = exact_solve(&p, &fleet, &OracleLimits::default()).unwrap();
    let b = exact_solve(&p, &fleet, &OracleLimits::default()).unwrap();
    assert_eq!(a, b);
}
