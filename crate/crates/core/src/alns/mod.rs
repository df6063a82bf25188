//! Adaptive large neighborhood search for one operational period.
//!
//! The state keeps one path per fleet vehicle (empty paths cost nothing) and
//! the list of unserved customers. Each iteration picks a destroy and a
//! repair operator by adaptive weights, rebuilds a candidate and accepts it
//! under simulated annealing.

mod bank;
mod destroy;
mod params;
mod repair;

use std::collections::hash_map::DefaultHasher;
use std::collections::HashSet;
use std::hash::{Hash, Hasher};

use rand::seq::SliceRandom;
use rand::Rng;

pub use bank::{DestroyOp, OperatorBank, RepairOp};
pub use params::{acceptance_probability, start_temperature, AlnsParams};

use crate::eval::{OperationalProblem, TOL};
use crate::model::{FleetMix, NodeKind, Route, Solution};
use crate::rng::{stream_rng, Stream};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RouteState {
    pub vehicle: usize,
    pub nodes: Vec<usize>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct State {
    pub routes: Vec<RouteState>,
    pub unserved: Vec<usize>,
    pub cost: f64,
}

impl State {
    fn empty(problem: &OperationalProblem, fleet: &FleetMix) -> Self {
        let routes = fleet
            .selected()
            .into_iter()
            .map(|k| RouteState {
                vehicle: k,
                nodes: Route::empty(problem.instance, k).nodes,
                cost: 0.0,
            })
            .collect();
        State {
            routes,
            unserved: Vec::new(),
            cost: 0.0,
        }
    }

    pub fn recompute_cost(&mut self, problem: &OperationalProblem) {
        self.cost = self.routes.iter().map(|r| r.cost).sum::<f64>()
            + self.unserved.iter().map(|&u| problem.penalty(u)).sum::<f64>();
    }

    /// (route index, customer) for every routed customer, in route order.
    pub fn routed(&self, problem: &OperationalProblem) -> Vec<(usize, usize)> {
        let inst = problem.instance;
        self.routes
            .iter()
            .enumerate()
            .flat_map(|(r, route)| {
                route
                    .nodes
                    .iter()
                    .filter(|&&n| inst.kind(n) == NodeKind::Customer)
                    .map(move |&n| (r, n))
            })
            .collect()
    }

    fn signature(&self) -> u64 {
        let mut paths: Vec<&[usize]> = self
            .routes
            .iter()
            .filter(|r| r.nodes.len() > 2)
            .map(|r| r.nodes.as_slice())
            .collect();
        paths.sort_unstable();
        let mut h = DefaultHasher::new();
        ((self.cost * 1e6).round() as i64).hash(&mut h);
        paths.hash(&mut h);
        h.finish()
    }

    pub fn to_solution(&self) -> Solution {
        let mut unserved = self.unserved.clone();
        unserved.sort_unstable();
        Solution {
            routes: self
                .routes
                .iter()
                .filter(|r| r.nodes.len() > 2)
                .map(|r| Route {
                    vehicle: r.vehicle,
                    nodes: r.nodes.clone(),
                })
                .collect(),
            unserved,
        }
    }
}

/// Result of one search.
#[derive(Debug, Clone, PartialEq)]
pub struct AlnsOutcome {
    pub solution: Solution,
    pub cost: f64,
    pub initial_cost: f64,
    pub iterations: usize,
}

/// Sequential cheapest insertion of every requested customer in a seeded
/// random order; customers that cannot be placed for less than their penalty
/// stay unserved.
pub fn initial_solution(problem: &OperationalProblem, fleet: &FleetMix, seed: u64) -> Solution {
    initial_state(problem, fleet, seed).to_solution()
}

fn initial_state(problem: &OperationalProblem, fleet: &FleetMix, seed: u64) -> State {
    let mut rng = stream_rng(seed, Stream::Solver, 0);
    let mut order = problem.realized_customers().to_vec();
    order.shuffle(&mut rng);
    let mut state = State::empty(problem, fleet);
    for u in order {
        let mut best: Option<(usize, crate::eval::Insertion)> = None;
        for (r, route) in state.routes.iter().enumerate() {
            if let Some(ins) = problem.cheapest_insertion(route.vehicle, &route.nodes, u) {
                if best.as_ref().is_none_or(|(_, b)| ins.delta < b.delta - TOL) {
                    best = Some((r, ins));
                }
            }
        }
        match best {
            Some((r, ins)) if ins.delta < problem.penalty(u) - TOL => {
                let route = &mut state.routes[r];
                route.cost += ins.delta;
                route.nodes = ins.nodes;
            }
            _ => state.unserved.push(u),
        }
    }
    state.recompute_cost(problem);
    state
}

pub fn solve(problem: &OperationalProblem, fleet: &FleetMix, params: &AlnsParams, seed: u64) -> Result<AlnsOutcome> {
    solve_observed(problem, fleet, params, seed, &mut |_, _| {})
}

/// Like [`solve`], calling `observer` with every accepted solution and its
/// objective value, the initial solution included.
pub fn solve_observed(
    problem: &OperationalProblem,
    fleet: &FleetMix,
    params: &AlnsParams,
    seed: u64,
    observer: &mut dyn FnMut(&Solution, f64),
) -> Result<AlnsOutcome> {
    params.validate()?;
    fleet.validate(problem.instance)?;
    let initial = initial_state(problem, fleet, seed);
    observer(&initial.to_solution(), initial.cost);
    let initial_cost = initial.cost;
    if initial.cost <= 0.0 || problem.realized_customers().is_empty() || initial.routes.is_empty() {
        return Ok(AlnsOutcome {
            solution: initial.to_solution(),
            cost: initial.cost,
            initial_cost,
            iterations: 0,
        });
    }

    let related = destroy::Relatedness::new(problem);
    let mut select_rng = stream_rng(seed, Stream::Solver, 1);
    let mut noise_rng = stream_rng(seed, Stream::Solver, 100);
    let mut op_rngs: Vec<_> = (0..DestroyOp::ALL.len())
        .map(|i| stream_rng(seed, Stream::Solver, 2 + i as u64))
        .collect();
    let mut destroy_bank = OperatorBank::new(DestroyOp::ALL.len());
    let mut repair_bank = OperatorBank::new(RepairOp::ALL.len());

    let mut temperature = start_temperature(initial.cost, params.start_temperature)?;
    let mut seen = HashSet::new();
    seen.insert(initial.signature());
    let mut best = initial.clone();
    let mut current = initial;
    let mut since_best = 0usize;
    let (lo, hi) = params.removal_range(problem.realized_customers().len());
    let clock = params.time_limit_secs.map(|t| (std::time::Instant::now(), t));

    let mut iterations = 0;
    while iterations < params.max_iterations {
        if let Some((start, limit)) = clock {
            if start.elapsed().as_secs_f64() >= limit {
                break;
            }
        }
        iterations += 1;
        let d = destroy_bank.select(&mut select_rng);
        let r = repair_bank.select(&mut select_rng);
        let q = select_rng.random_range(lo..=hi);

        let mut cand = current.clone();
        let removed = destroy::apply(
            DestroyOp::ALL[d],
            problem,
            params,
            &related,
            &mut cand,
            q,
            &mut op_rngs[d],
        );
        let noisy = select_rng.random::<f64>() < params.noisy_repair_share;
        let noise = noisy.then_some((params.repair_noise, &mut noise_rng));
        repair::apply(RepairOp::ALL[r], problem, &mut cand, removed, noise);
        cand.recompute_cost(problem);

        let fresh = seen.insert(cand.signature());
        let delta = cand.cost - current.cost;
        let mut score = 0.0;
        let improved = cand.cost < best.cost - TOL;
        let accepted = if improved {
            best = cand.clone();
            score = params.reward_best;
            true
        } else if delta < -TOL {
            if fresh {
                score = params.reward_better;
            }
            true
        } else if select_rng.random::<f64>() < acceptance_probability(delta, temperature) {
            if fresh {
                score = params.reward_new;
            }
            true
        } else {
            false
        };
        if score > 0.0 {
            destroy_bank.reward(d, score);
            repair_bank.reward(r, score);
        }
        if accepted {
            observer(&cand.to_solution(), cand.cost);
            current = cand;
        }
        since_best = if improved { 0 } else { since_best + 1 };
        if since_best >= params.reset_after {
            current = best.clone();
            since_best = 0;
        }
        temperature *= params.cooling;
        if iterations % params.segment_size == 0 {
            destroy_bank.adapt(params.reaction);
            repair_bank.adapt(params.reaction);
        }
    }
    log::debug!(
        "alns: {iterations} iterations, initial {initial_cost:.4}, best {:.4}",
        best.cost
    );
    Ok(AlnsOutcome {
        solution: best.to_solution(),
        cost: best.cost,
        initial_cost,
        iterations,
    })
}
