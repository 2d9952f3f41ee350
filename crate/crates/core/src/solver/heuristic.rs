use crate::pricing::Objective;
use crate::problem::{Instance, Route};

fn value<O: Objective>(inst: &Instance, obj: &O, customers: &[usize]) -> f64 {
    let r = Route::try_from(customers.to_vec()).expect("heuristic builds elementary routes");
    r.cost(inst) + obj.route_penalty(&r)
}

/// Greedy cheapest insertion under the objective's route value. Routes are
/// seeded with the unrouted customer of earliest due time; a customer joins
/// the best route position while that is no dearer than serving it alone, or
/// whenever the fleet is already used up.
pub fn insertion_heuristic<O: Objective>(inst: &Instance, obj: &O) -> Vec<Route> {
    let mut unrouted: Vec<usize> = inst.customers().collect();
    let alone: Vec<f64> = (0..inst.n_nodes())
        .map(|c| if c == 0 { 0.0 } else { value(inst, obj, &[c]) })
        .collect();
    let mut routes: Vec<(Vec<usize>, u32, f64)> = Vec::new();
    while !unrouted.is_empty() {
        let mut best: Option<(f64, usize, usize, usize)> = None;
        for (ri, (r, load, v)) in routes.iter().enumerate() {
            for (ui, &c) in unrouted.iter().enumerate() {
                if load + inst.demand(c) > inst.capacity() {
                    continue;
                }
                for pos in 0..=r.len() {
                    let mut cand = r.clone();
                    cand.insert(pos, c);
                    let delta = value(inst, obj, &cand) - v;
                    if best.map_or(true, |b| delta < b.0) {
                        best = Some((delta, ri, ui, pos));
                    }
                }
            }
        }
        match best {
            Some((delta, ri, ui, pos)) if delta <= alone[unrouted[ui]] || routes.len() >= inst.fleet() => {
                let c = unrouted.remove(ui);
                let (r, load, v) = &mut routes[ri];
                r.insert(pos, c);
                *load += inst.demand(c);
                *v += delta;
            }
            _ => {
                let (ui, _) = unrouted
                    .iter()
                    .enumerate()
                    .min_by(|a, b| inst.due(*a.1).total_cmp(&inst.due(*b.1)).then(a.1.cmp(b.1)))
                    .expect("non-empty");
                let c = unrouted.remove(ui);
                routes.push((vec![c], inst.demand(c), alone[c]));
            }
        }
    }
    routes
        .into_iter()
        .map(|(r, _, _)| Route::try_from(r).expect("elementary"))
        .collect()
}
