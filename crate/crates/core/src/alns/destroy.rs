use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use super::{AlnsParams, DestroyOp, State};
use crate::eval::OperationalProblem;
use crate::model::{NodeKind, Route};

/// Normalizers for Shaw relatedness and string removal adjacency.
pub(crate) struct Relatedness {
    max_distance: f64,
    horizon: f64,
    max_demand: f64,
}

impl Relatedness {
    pub fn new(problem: &OperationalProblem) -> Self {
        let inst = problem.instance;
        let cs = problem.realized_customers();
        let mut max_distance = 0.0_f64;
        for &a in cs {
            for &b in cs {
                max_distance = max_distance.max(distance(problem, a, b));
            }
        }
        let horizon = inst.nodes[inst.depot_end()].latest() - inst.nodes[inst.depot_start()].earliest();
        let max_demand = cs.iter().map(|&c| problem.demand(c)).fold(0.0, f64::max);
        Relatedness {
            max_distance: positive_or_one(max_distance),
            horizon: positive_or_one(horizon),
            max_demand: positive_or_one(max_demand),
        }
    }
}

fn positive_or_one(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        1.0
    }
}

/// Symmetrized travel time under the first vehicle type.
fn distance(problem: &OperationalProblem, a: usize, b: usize) -> f64 {
    let inst = problem.instance;
    0.5 * (inst.travel_minutes(0, a, b) + inst.travel_minutes(0, b, a))
}

/// Removes customers from `state` and returns them. Routes left infeasible by
/// a removal are emptied into the returned set; station visits that are no
/// longer needed are dropped.
pub(crate) fn apply<R: Rng>(
    op: DestroyOp,
    problem: &OperationalProblem,
    params: &AlnsParams,
    related: &Relatedness,
    state: &mut State,
    q: usize,
    rng: &mut R,
) -> Vec<usize> {
    let routed = state.routed(problem);
    if routed.is_empty() {
        return Vec::new();
    }
    let q = q.min(routed.len());
    let mut removed = Vec::new();
    match op {
        DestroyOp::Random => {
            let picks: Vec<usize> = routed.choose_multiple(rng, q).map(|&(_, c)| c).collect();
            for c in picks {
                detach(problem, state, c, &mut removed);
            }
        }
        DestroyOp::Worst => worst(problem, params, state, q, rng, &mut removed),
        DestroyOp::Shaw => shaw(problem, params, related, state, &routed, q, rng, &mut removed),
        DestroyOp::RandomRoute => {
            let mut used: Vec<usize> = (0..state.routes.len())
                .filter(|&r| state.routes[r].nodes.len() > 2)
                .collect();
            used.shuffle(rng);
            for r in used {
                if removed.len() >= q {
                    break;
                }
                let customers: Vec<usize> = customers_of(problem, &state.routes[r].nodes);
                removed.extend(customers);
                reset(problem, state, r);
            }
        }
        DestroyOp::Sisr => sisr(problem, params, state, &routed, rng, &mut removed),
    }
    for r in 0..state.routes.len() {
        if customers_of(problem, &state.routes[r].nodes).is_empty() {
            reset(problem, state, r);
            continue;
        }
        let route = &mut state.routes[r];
        problem.drop_unneeded_station(route.vehicle, &mut route.nodes);
        route.cost = problem
            .path_cost(route.vehicle, &route.nodes)
            .expect("route kept feasible during removal");
    }
    removed
}

fn customers_of(problem: &OperationalProblem, nodes: &[usize]) -> Vec<usize> {
    nodes
        .iter()
        .copied()
        .filter(|&n| problem.instance.kind(n) == NodeKind::Customer)
        .collect()
}

fn reset(problem: &OperationalProblem, state: &mut State, r: usize) {
    let route = &mut state.routes[r];
    route.nodes = Route::empty(problem.instance, route.vehicle).nodes;
    route.cost = 0.0;
}

/// Takes `c` off its route. When the shortened route is infeasible (possible
/// without the triangle inequality or across a station), all of its
/// customers are removed as well.
fn detach(problem: &OperationalProblem, state: &mut State, c: usize, removed: &mut Vec<usize>) {
    let Some(r) = state.routes.iter().position(|rt| rt.nodes.contains(&c)) else {
        return;
    };
    removed.push(c);
    let route = &mut state.routes[r];
    route.nodes.retain(|&n| n != c);
    match problem.path_cost(route.vehicle, &route.nodes) {
        Some(cost) => route.cost = cost,
        None => {
            removed.extend(customers_of(problem, &route.nodes));
            reset(problem, state, r);
        }
    }
}

/// Index `⌊y^p·len⌋` with `y` uniform on [0, 1): biased towards the front.
fn biased_index<R: Rng>(rng: &mut R, p: f64, len: usize) -> usize {
    let y: f64 = rng.random();
    ((y.powf(p) * len as f64) as usize).min(len - 1)
}

fn worst<R: Rng>(
    problem: &OperationalProblem,
    params: &AlnsParams,
    state: &mut State,
    q: usize,
    rng: &mut R,
    removed: &mut Vec<usize>,
) {
    while removed.len() < q {
        let mut savings: Vec<(f64, usize)> = Vec::new();
        for route in &state.routes {
            for (pos, &n) in route.nodes.iter().enumerate() {
                if problem.instance.kind(n) != NodeKind::Customer {
                    continue;
                }
                let mut without = route.nodes.clone();
                without.remove(pos);
                let saving = problem
                    .path_cost(route.vehicle, &without)
                    .map_or(f64::NEG_INFINITY, |c| route.cost - c);
                savings.push((saving, n));
            }
        }
        if savings.is_empty() {
            break;
        }
        savings.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let c = savings[biased_index(rng, params.worst_randomness, savings.len())].1;
        detach(problem, state, c, removed);
    }
}

#[allow(clippy::too_many_arguments)]
fn shaw<R: Rng>(
    problem: &OperationalProblem,
    params: &AlnsParams,
    related: &Relatedness,
    state: &mut State,
    routed: &[(usize, usize)],
    q: usize,
    rng: &mut R,
    removed: &mut Vec<usize>,
) {
    let inst = problem.instance;
    let n = inst.node_count();
    let mut arrival = vec![0.0; n];
    let mut route_of = vec![usize::MAX; n];
    for (r, route) in state.routes.iter().enumerate() {
        if let Some(times) = problem.service_starts(route.vehicle, &route.nodes) {
            for (&node, t) in route.nodes.iter().zip(times) {
                arrival[node] = t;
                route_of[node] = r;
            }
        }
    }
    let score = |a: usize, b: usize| {
        let (na, nb) = (&inst.nodes[a], &inst.nodes[b]);
        let d = distance(problem, a, b) / related.max_distance;
        let t_arr = (arrival[a] - arrival[b]).abs() / related.horizon;
        let t_win = 0.5 * ((na.earliest() - nb.earliest()).abs() + (na.latest() - nb.latest()).abs())
            / related.horizon;
        let dem = (problem.demand(a) - problem.demand(b)).abs() / related.max_demand;
        let other_route = if route_of[a] == route_of[b] { 0.0 } else { 1.0 };
        params.shaw_distance * d
            + params.shaw_time * 0.5 * (t_arr + t_win)
            + params.shaw_demand * dem
            + params.shaw_route * other_route
    };
    let mut chosen = vec![routed[rng.random_range(0..routed.len())].1];
    while chosen.len() < q {
        let anchor = chosen[rng.random_range(0..chosen.len())];
        let mut rest: Vec<(f64, usize)> = routed
            .iter()
            .map(|&(_, c)| c)
            .filter(|c| !chosen.contains(c))
            .map(|c| (score(anchor, c), c))
            .collect();
        if rest.is_empty() {
            break;
        }
        rest.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        chosen.push(rest[biased_index(rng, params.shaw_randomness, rest.len())].1);
    }
    for c in chosen {
        detach(problem, state, c, removed);
    }
}

/// Slack induction by string removal: strings of consecutive customers are
/// cut from routes near a random seed customer.
fn sisr<R: Rng>(
    problem: &OperationalProblem,
    params: &AlnsParams,
    state: &mut State,
    routed: &[(usize, usize)],
    rng: &mut R,
    removed: &mut Vec<usize>,
) {
    let used_routes = state.routes.iter().filter(|r| r.nodes.len() > 2).count().max(1);
    let avg_len = routed.len() as f64 / used_routes as f64;
    let ls_max = params.sisr_max_string.min(avg_len);
    let ks_max = 4.0 * params.sisr_avg_removed / (1.0 + ls_max) - 1.0;
    let ks = rng.random_range(1.0..ks_max.max(1.0) + 1.0).floor() as usize;

    let seed = routed[rng.random_range(0..routed.len())].1;
    let mut adjacency: Vec<usize> = routed.iter().map(|&(_, c)| c).collect();
    adjacency.sort_by(|&a, &b| distance(problem, seed, a).total_cmp(&distance(problem, seed, b)).then(a.cmp(&b)));

    let mut ruined: Vec<usize> = Vec::new();
    let mut cut: Vec<usize> = Vec::new();
    for c in adjacency {
        if ruined.len() >= ks {
            break;
        }
        if cut.contains(&c) {
            continue;
        }
        let Some(&(r, _)) = routed.iter().find(|&&(_, x)| x == c) else {
            continue;
        };
        if ruined.contains(&r) {
            continue;
        }
        let tour = customers_of(problem, &state.routes[r].nodes);
        let ic = tour.iter().position(|&x| x == c).expect("customer on its route");
        let lt_max = (tour.len() as f64).min(ls_max);
        let lt = (rng.random_range(1.0..lt_max.max(1.0) + 1.0).floor() as usize).clamp(1, tour.len());
        if tour.len() > lt && rng.random::<f64>() < 0.5 {
            // Split string: a window of lt + m customers keeps m of them.
            let mut m = 1;
            while m < tour.len() - lt && rng.random::<f64>() >= params.sisr_split_depth {
                m += 1;
            }
            let len = lt + m;
            let start = window_start(rng, ic, len, tour.len());
            let keep_from = start + rng.random_range(0..=lt);
            for (k, &x) in tour[start..start + len].iter().enumerate() {
                let kept = (keep_from..keep_from + m).contains(&(start + k));
                if !kept {
                    cut.push(x);
                }
            }
        } else {
            let start = window_start(rng, ic, lt, tour.len());
            cut.extend_from_slice(&tour[start..start + lt]);
        }
        ruined.push(r);
    }
    for c in cut {
        if !removed.contains(&c) {
            detach(problem, state, c, removed);
        }
    }
}

/// Uniform start of a window of `len` positions inside `0..total` covering `ic`.
fn window_start<R: Rng>(rng: &mut R, ic: usize, len: usize, total: usize) -> usize {
    let lo = (ic + 1).saturating_sub(len);
    let hi = ic.min(total - len);
    rng.random_range(lo..=hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alns::initial_state;
    use crate::energy::PowerContext;
    use crate::model::fixtures::line_instance;
    use crate::model::{FleetMix, InstanceFile, Instance, Scenario, VehicleType};
    use crate::rng::{stream_rng, Stream};

    fn setup(inst: &Instance) -> OperationalProblem<'_> {
        OperationalProblem::new(inst, &Scenario::all_requested(inst, 15.0), &PowerContext::default()).unwrap()
    }

    #[test]
    fn removing_everything_leaves_empty_routes() {
        let inst = line_instance(5, false, vec![VehicleType::electric_van(), VehicleType::small_icev()]);
        let p = setup(&inst);
        let related = Relatedness::new(&p);
        for op in DestroyOp::ALL {
            let mut st = initial_state(&p, &FleetMix::all(&inst), 4);
            let mut rng = stream_rng(1, Stream::Solver, 0);
            let removed = apply(op, &p, &AlnsParams::default(), &related, &mut st, 5, &mut rng);
            if op != DestroyOp::Sisr {
                assert_eq!(removed.len(), 5, "{op:?}");
                assert!(st.routes.iter().all(|r| r.nodes.len() == 2 && r.cost == 0.0));
            }
            let mut sorted = removed.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), removed.len(), "{op:?} removed a customer twice");
        }
    }

    #[test]
    fn worst_removal_takes_the_outlier_first() {
        let mut file = InstanceFile::from(&line_instance(4, false, vec![VehicleType::electric_van()]));
        // Move customer 5 far away in both directions of travel.
        let n = file.nodes.len();
        let m = file.travel_time.get_mut("van").unwrap();
        for i in 0..n {
            if i != 5 {
                m[i][5] += 40.0;
                m[5][i] += 40.0;
            }
        }
        let inst = Instance::try_from(file).unwrap();
        let p = setup(&inst);
        let params = AlnsParams {
            worst_randomness: 1e9,
            ..AlnsParams::default()
        };
        let mut st = initial_state(&p, &FleetMix::all(&inst), 4);
        assert!(st.unserved.is_empty());
        let mut rng = stream_rng(2, Stream::Solver, 0);
        let mut removed = Vec::new();
        worst(&p, &params, &mut st, 1, &mut rng, &mut removed);
        assert_eq!(removed, vec![5]);
    }

    #[test]
    fn window_always_covers_customer() {
        let mut rng = stream_rng(3, Stream::Solver, 0);
        for _ in 0..500 {
            let total = rng.random_range(1..12);
            let len = rng.random_range(1..=total);
            let ic = rng.random_range(0..total);
            let s = window_start(&mut rng, ic, len, total);
            assert!(s <= ic && ic < s + len && s + len <= total);
        }
    }
}
