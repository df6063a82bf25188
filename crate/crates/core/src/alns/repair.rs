use rand::Rng;

use super::{RepairOp, State};
use crate::eval::{Insertion, OperationalProblem, TOL};
use crate::model::NodeKind;

/// Ranked candidate: the (possibly jittered) ranking key and the insertion.
type Candidate = Option<(f64, Insertion)>;

/// Reinserts `removed` together with the unserved pool. A customer is only
/// routed when its insertion costs less than leaving it unserved. With
/// `noise`, candidates are ranked by costs perturbed by up to that fraction.
pub(crate) fn apply<R: Rng + ?Sized>(
    op: RepairOp,
    problem: &OperationalProblem,
    state: &mut State,
    removed: Vec<usize>,
    noise: Option<(f64, &mut R)>,
) {
    let mut pool = removed;
    pool.append(&mut state.unserved);
    pool.sort_unstable();
    pool.dedup();

    let (amplitude, mut rng) = match noise {
        Some((a, rng)) if a > 0.0 => (a, Some(rng)),
        _ => (0.0, None),
    };
    let mut insert = |vehicle: usize, nodes: &[usize], u: usize| -> Candidate {
        let mut jitter = || match rng.as_mut() {
            Some(r) => amplitude * (2.0 * r.random::<f64>() - 1.0),
            None => 0.0,
        };
        let ins = problem.cheapest_insertion_jittered(vehicle, nodes, u, &mut jitter)?;
        let key = ins.delta + ins.delta.abs() * jitter();
        Some((key, ins))
    };

    // cache[i][r]: best insertion of pool[i] into route r.
    let mut cache: Vec<Vec<Candidate>> = pool
        .iter()
        .map(|&u| state.routes.iter().map(|rt| insert(rt.vehicle, &rt.nodes, u)).collect())
        .collect();

    while !pool.is_empty() {
        let pick = match op {
            RepairOp::Greedy => pick_greedy(problem, &pool, &cache),
            RepairOp::Regret2 => pick_regret(problem, &pool, &cache),
        };
        // Nothing pays for itself alone: tentatively take the cheapest
        // feasible insertion, since several customers together may cover a
        // route that none covers by itself. Pruning undoes bad guesses.
        let Some((i, r)) = pick.or_else(|| pick_cheapest(&cache)) else { break };
        let (_, ins) = cache[i][r].take().expect("picked insertion exists");
        let route = &mut state.routes[r];
        route.nodes = ins.nodes;
        route.cost += ins.delta;
        pool.remove(i);
        cache.remove(i);
        let route = &state.routes[r];
        for (j, &u) in pool.iter().enumerate() {
            cache[j][r] = insert(route.vehicle, &route.nodes, u);
        }
    }
    state.unserved = pool;
    prune(problem, state);
}

fn pick_cheapest(cache: &[Vec<Candidate>]) -> Option<(usize, usize)> {
    let mut pick: Option<(usize, usize, f64)> = None;
    for (i, row) in cache.iter().enumerate() {
        for (r, c) in row.iter().enumerate() {
            if let Some((key, _)) = c {
                if pick.is_none_or(|(_, _, k)| *key < k - TOL) {
                    pick = Some((i, r, *key));
                }
            }
        }
    }
    pick.map(|(i, r, _)| (i, r))
}

/// Drops customers whose removal saves more than their penalty, most
/// profitable first, then whole routes costing more than the penalties of
/// the customers on them.
pub(crate) fn prune(problem: &OperationalProblem, state: &mut State) {
    let inst = problem.instance;
    loop {
        let mut best: Option<(usize, usize, f64, f64)> = None;
        for (r, route) in state.routes.iter().enumerate() {
            for pos in 1..route.nodes.len().saturating_sub(1) {
                let u = route.nodes[pos];
                if inst.kind(u) != NodeKind::Customer {
                    continue;
                }
                let mut without = route.nodes.clone();
                without.remove(pos);
                problem.drop_unneeded_station(route.vehicle, &mut without);
                let Some(cost) = problem.path_cost(route.vehicle, &without) else {
                    continue;
                };
                let gain = route.cost - cost - problem.penalty(u);
                if gain > TOL && best.is_none_or(|(_, _, g, _)| gain > g + TOL) {
                    best = Some((r, pos, gain, cost));
                }
            }
        }
        let Some((r, pos, _, cost)) = best else { break };
        let route = &mut state.routes[r];
        let u = route.nodes.remove(pos);
        problem.drop_unneeded_station(route.vehicle, &mut route.nodes);
        route.cost = cost;
        state.unserved.push(u);
    }
    for route in &mut state.routes {
        let customers: Vec<usize> = route
            .nodes
            .iter()
            .copied()
            .filter(|&n| inst.kind(n) == NodeKind::Customer)
            .collect();
        if customers.is_empty() {
            continue;
        }
        let penalties: f64 = customers.iter().map(|&u| problem.penalty(u)).sum();
        if route.cost > penalties + TOL {
            state.unserved.extend(customers);
            let (start, end) = inst.tour_ends(route.vehicle);
            route.nodes = vec![start, end];
            route.cost = 0.0;
        }
    }
    state.unserved.sort_unstable();
}

/// Best route for a pooled customer by ranking key, kept only if its exact
/// cost beats the penalty.
fn best_route(problem: &OperationalProblem, u: usize, row: &[Candidate]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (r, c) in row.iter().enumerate() {
        if let Some((key, ins)) = c {
            if ins.delta < problem.penalty(u) - TOL && best.is_none_or(|(_, k, _)| *key < k - TOL) {
                best = Some((r, *key, ins.delta));
            }
        }
    }
    best.map(|(r, k, _)| (r, k))
}

fn pick_greedy(problem: &OperationalProblem, pool: &[usize], cache: &[Vec<Candidate>]) -> Option<(usize, usize)> {
    let mut pick: Option<(usize, usize, f64)> = None;
    for (i, &u) in pool.iter().enumerate() {
        if let Some((r, d)) = best_route(problem, u, &cache[i]) {
            if pick.is_none_or(|(_, _, pd)| d < pd - TOL) {
                pick = Some((i, r, d));
            }
        }
    }
    pick.map(|(i, r, _)| (i, r))
}

/// Largest gap between the best and second-best route; a customer with a
/// single feasible route has an infinite gap. Ties prefer the larger best
/// cost, then the earlier customer.
fn pick_regret(problem: &OperationalProblem, pool: &[usize], cache: &[Vec<Candidate>]) -> Option<(usize, usize)> {
    let mut pick: Option<(usize, usize, f64, f64)> = None;
    for (i, &u) in pool.iter().enumerate() {
        let Some((r, best)) = best_route(problem, u, &cache[i]) else {
            continue;
        };
        let second = cache[i]
            .iter()
            .enumerate()
            .filter(|&(q, _)| q != r)
            .filter_map(|(_, c)| c.as_ref().map(|x| x.0))
            .fold(f64::INFINITY, f64::min);
        let regret = second - best;
        let better = match pick {
            None => true,
            Some((_, _, pr, pb)) => {
                if regret.is_infinite() && pr.is_infinite() {
                    best > pb + TOL
                } else if regret > pr + TOL {
                    true
                } else {
                    (regret - pr).abs() <= TOL && best > pb + TOL
                }
            }
        };
        if better {
            pick = Some((i, r, regret, best));
        }
    }
    pick.map(|(i, r, _, _)| (i, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alns::State;
    use crate::energy::PowerContext;
    use crate::model::fixtures::line_instance;
    use crate::model::{FleetMix, Scenario, VehicleType};
    use proptest::prelude::*;
    use rand_chacha::ChaCha8Rng;

    const NONE: Option<(f64, &mut ChaCha8Rng)> = None;

    fn problem_for(inst: &crate::model::Instance) -> OperationalProblem<'_> {
        OperationalProblem::new(inst, &Scenario::all_requested(inst, 0.0), &PowerContext::default()).unwrap()
    }

    #[test]
    fn empty_pool_is_identity() {
        let inst = line_instance(3, false, vec![VehicleType::electric_van()]);
        let p = problem_for(&inst);
        let mut st = State::empty(&p, &FleetMix::all(&inst));
        apply(RepairOp::Greedy, &p, &mut st, vec![2], NONE);
        let before = st.clone();
        apply(RepairOp::Regret2, &p, &mut st, Vec::new(), NONE);
        assert_eq!(before.routes, st.routes);
    }

    #[test]
    fn single_customer_regret_equals_greedy() {
        let inst = line_instance(3, false, vec![VehicleType::electric_van(), VehicleType::cargo_bike()]);
        let p = problem_for(&inst);
        let mut a = State::empty(&p, &FleetMix::all(&inst));
        let mut b = a.clone();
        apply(RepairOp::Greedy, &p, &mut a, vec![3], NONE);
        apply(RepairOp::Regret2, &p, &mut b, vec![3], NONE);
        assert_eq!(a.routes, b.routes);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn repaired_routes_are_feasible(customers in 1usize..7, take in prop::collection::vec(any::<bool>(), 7), regret in any::<bool>()) {
            let inst = line_instance(customers, true, vec![VehicleType::electric_van(), VehicleType::small_icev()]);
            let p = problem_for(&inst);
            let mut st = State::empty(&p, &FleetMix::all(&inst));
            let removed: Vec<usize> = inst.customers().iter().copied().zip(&take).filter(|(_, t)| **t).map(|(c, _)| c).collect();
            let op = if regret { RepairOp::Regret2 } else { RepairOp::Greedy };
            let mut rng = crate::rng::stream_rng(customers as u64, crate::rng::Stream::Solver, 9);
            apply(op, &p, &mut st, removed, Some((0.05, &mut rng)));
            for r in &st.routes {
                if r.nodes.len() > 2 {
                    let e = p.evaluate_path(r.vehicle, &r.nodes);
                    prop_assert!(e.is_ok());
                    prop_assert!((e.unwrap().cost - r.cost).abs() < 1e-9);
                }
            }
        }
    }
}
