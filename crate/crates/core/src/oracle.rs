//! Exact solver for tiny operational periods, used as ground truth.
//!
//! For each vehicle every ordered customer sequence is priced, with every
//! single station placement for electric vehicles, and the cheapest path is
//! kept per customer subset. A subset DP over vehicles then assembles the
//! plan, with unserved customers paying their penalty. Ties are broken by
//! the lexicographically smallest route encoding.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::eval::{OperationalProblem, ViolationKind, TOL};
use crate::model::{FleetMix, Route, Solution};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleLimits {
    pub max_customers: usize,
    pub max_vehicles: usize,
    pub max_stations: usize,
    pub time_budget_secs: Option<f64>,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_customers: 8,
            max_vehicles: 3,
            max_stations: 1,
            time_budget_secs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub solution: Solution,
    pub cost: f64,
}

#[derive(Debug, Clone)]
struct Plan {
    cost: f64,
    paths: Vec<Vec<usize>>,
}

fn better(cost: f64, paths: &[Vec<usize>], incumbent: &Option<Plan>) -> bool {
    match incumbent {
        None => true,
        Some(p) => cost < p.cost - TOL || ((cost - p.cost).abs() <= TOL && paths < p.paths.as_slice()),
    }
}

struct Search<'p, 'a> {
    problem: &'p OperationalProblem<'a>,
    customers: Vec<usize>,
    deadline: Option<Instant>,
    evaluations: u64,
}

impl Search<'_, '_> {
    fn check_clock(&mut self) -> Result<()> {
        self.evaluations += 1;
        if self.evaluations % 4096 == 0 {
            if let Some(d) = self.deadline {
                if Instant::now() > d {
                    return Err(Error::OracleLimit("time budget exhausted".into()));
                }
            }
        }
        Ok(())
    }

    /// Cheapest path per customer subset for one vehicle.
    fn best_paths(&mut self, vehicle: usize) -> Result<Vec<Option<(f64, Vec<usize>)>>> {
        let (start, end) = self.problem.instance.tour_ends(vehicle);
        let mut best: Vec<Option<(f64, Vec<usize>)>> = vec![None; 1 << self.customers.len()];
        best[0] = Some((0.0, vec![start, end]));
        let mut seq = Vec::new();
        self.extend(vehicle, 0, &mut seq, &mut best)?;
        Ok(best)
    }

    fn extend(
        &mut self,
        vehicle: usize,
        mask: usize,
        seq: &mut Vec<usize>,
        best: &mut Vec<Option<(f64, Vec<usize>)>>,
    ) -> Result<()> {
        let inst = self.problem.instance;
        let electric = inst.vehicle_type(vehicle).is_electric();
        let prunable_time = inst.triangle_inequality || !electric || inst.stations().is_empty();
        for bit in 0..self.customers.len() {
            let c = self.customers[bit];
            if mask & (1 << bit) != 0 || !inst.compatible(c, vehicle) {
                continue;
            }
            seq.push(c);
            let (start, end) = inst.tour_ends(vehicle);
            let mut path = Vec::with_capacity(seq.len() + 3);
            path.push(start);
            path.extend_from_slice(seq);
            path.push(end);
            self.check_clock()?;
            let plain = self.problem.evaluate_path(vehicle, &path);
            let next = mask | (1 << bit);
            let mut descend = true;
            match &plain {
                Ok(e) => offer(best, next, e.cost, &path),
                Err(v) => match v.kind {
                    ViolationKind::Capacity => descend = false,
                    // Appending never moves earlier service times, so a late
                    // customer stays late; a station detour is only guaranteed
                    // not to help when detours cannot shortcut.
                    ViolationKind::TimeWindow if prunable_time && v.node != Some(end) => descend = false,
                    _ => {}
                },
            }
            if electric && !matches!(&plain, Err(v) if v.kind == ViolationKind::Capacity) {
                for &s in inst.stations() {
                    for q in 1..path.len() {
                        let mut with = path.clone();
                        with.insert(q, s);
                        self.check_clock()?;
                        if let Ok(e) = self.problem.evaluate_path(vehicle, &with) {
                            offer(best, next, e.cost, &with);
                        }
                    }
                }
            }
            if descend {
                self.extend(vehicle, next, seq, best)?;
            }
            seq.pop();
        }
        Ok(())
    }
}

fn offer(best: &mut [Option<(f64, Vec<usize>)>], mask: usize, cost: f64, path: &[usize]) {
    let replace = match &best[mask] {
        None => true,
        Some((c, p)) => cost < c - TOL || ((cost - c).abs() <= TOL && path < p.as_slice()),
    };
    if replace {
        best[mask] = Some((cost, path.to_vec()));
    }
}

/// Optimal plan for `fleet` in the period described by `problem`.
pub fn exact_solve(problem: &OperationalProblem, fleet: &FleetMix, limits: &OracleLimits) -> Result<OracleOutcome> {
    fleet.validate(problem.instance)?;
    let inst = problem.instance;
    let customers = problem.realized_customers().to_vec();
    let vehicles = fleet.selected();
    if customers.len() > limits.max_customers {
        return Err(Error::OracleLimit(format!(
            "{} requested customers exceed the limit of {}",
            customers.len(),
            limits.max_customers
        )));
    }
    if vehicles.len() > limits.max_vehicles {
        return Err(Error::OracleLimit(format!(
            "{} vehicles exceed the limit of {}",
            vehicles.len(),
            limits.max_vehicles
        )));
    }
    if inst.stations().len() > limits.max_stations {
        return Err(Error::OracleLimit(format!(
            "{} stations exceed the limit of {}",
            inst.stations().len(),
            limits.max_stations
        )));
    }
    let mut search = Search {
        problem,
        customers: customers.clone(),
        deadline: limits
            .time_budget_secs
            .map(|s| Instant::now() + Duration::from_secs_f64(s)),
        evaluations: 0,
    };
    let full = 1usize << customers.len();

    // dp[mask]: cheapest assignment of exactly `mask` to the vehicles seen so far.
    let mut dp: Vec<Option<Plan>> = vec![None; full];
    dp[0] = Some(Plan {
        cost: 0.0,
        paths: Vec::new(),
    });
    for &k in &vehicles {
        let paths = search.best_paths(k)?;
        let mut next: Vec<Option<Plan>> = vec![None; full];
        for mask in 0..full {
            let mut sub = mask;
            loop {
                if let (Some(prev), Some((c, path))) = (&dp[mask ^ sub], &paths[sub]) {
                    let cost = prev.cost + c;
                    let mut enc = prev.paths.clone();
                    enc.push(path.clone());
                    if better(cost, &enc, &next[mask]) {
                        next[mask] = Some(Plan { cost, paths: enc });
                    }
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & mask;
            }
        }
        dp = next;
    }

    let mut best: Option<(Plan, usize)> = None;
    for (mask, plan) in dp.into_iter().enumerate() {
        let Some(plan) = plan else { continue };
        let penalty: f64 = customers
            .iter()
            .enumerate()
            .filter(|(bit, _)| mask & (1 << bit) == 0)
            .map(|(_, &c)| problem.penalty(c))
            .sum();
        let total = plan.cost + penalty;
        let take = match &best {
            None => true,
            Some((b, _)) => {
                total < b.cost - TOL || ((total - b.cost).abs() <= TOL && plan.paths < b.paths)
            }
        };
        if take {
            best = Some((
                Plan {
                    cost: total,
                    paths: plan.paths,
                },
                mask,
            ));
        }
    }
    let (plan, mask) = best.expect("the empty plan is always available");
    let routes = vehicles
        .iter()
        .zip(plan.paths)
        .filter(|(_, p)| p.len() > 2)
        .map(|(&vehicle, nodes)| Route { vehicle, nodes })
        .collect();
    let unserved = customers
        .iter()
        .enumerate()
        .filter(|(bit, _)| mask & (1 << bit) == 0)
        .map(|(_, &c)| c)
        .collect();
    Ok(OracleOutcome {
        solution: Solution { routes, unserved },
        cost: plan.cost,
    })
}
