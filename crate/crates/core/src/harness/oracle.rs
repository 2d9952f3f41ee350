use crate::error::{Error, Result};
use crate::pricing::Objective;
use crate::problem::{Instance, Route, Solution};

/// Largest instance the exhaustive search accepts.
pub const MAX_ORACLE_CUSTOMERS: usize = 8;

/// Exact optimum by exhaustive search: every elementary capacity-feasible
/// route is scored, the best ordering is kept per customer subset, and a DP
/// over subset partitions picks at most `K` routes.
pub fn brute_force_optimum<O: Objective>(inst: &Instance, obj: &O) -> Result<Solution> {
    brute_force_by(inst, &|r| r.cost(inst) + obj.route_penalty(r))
}

/// As [`brute_force_optimum`] for an arbitrary route value.
pub fn brute_force_by(inst: &Instance, value: &dyn Fn(&Route) -> f64) -> Result<Solution> {
    let n = inst.n_customers();
    if n > MAX_ORACLE_CUSTOMERS {
        return Err(Error::Config(format!(
            "brute force is limited to {MAX_ORACLE_CUSTOMERS} customers, instance has {n}"
        )));
    }
    let full = (1usize << n) - 1;
    let mut best: Vec<Option<(f64, Route)>> = vec![None; full + 1];
    let mut stack = Vec::with_capacity(n);
    extend(inst, value, &mut stack, 0, 0, &mut best);

    let k = inst.fleet().min(n);
    // dp[u][m]: cheapest cover of m with exactly u routes; choice[u][m] is the last block
    let mut dp = vec![vec![f64::INFINITY; full + 1]; k + 1];
    let mut choice = vec![vec![0usize; full + 1]; k + 1];
    dp[0][0] = 0.0;
    for u in 1..=k {
        for m in 1..=full {
            let low = m & m.wrapping_neg();
            let mut s = m;
            while s > 0 {
                if s & low != 0 {
                    if let Some((v, _)) = &best[s] {
                        let c = dp[u - 1][m ^ s] + v;
                        if c < dp[u][m] {
                            dp[u][m] = c;
                            choice[u][m] = s;
                        }
                    }
                }
                s = (s - 1) & m;
            }
        }
    }
    let Some(u) = (1..=k).filter(|&u| dp[u][full].is_finite()).min_by(|&a, &b| dp[a][full].total_cmp(&dp[b][full]))
    else {
        return Err(Error::Infeasible("no partition of the customers fits the fleet".into()));
    };
    let mut routes = Vec::with_capacity(u);
    let (mut m, mut left) = (full, u);
    while m != 0 {
        let s = choice[left][m];
        routes.push(best[s].as_ref().map(|(_, r)| r.clone()).unwrap());
        m ^= s;
        left -= 1;
    }
    let mut sol = Solution::new(routes);
    sol.first_stage = sol.transport_cost(inst);
    sol.second_stage = sol.routes.iter().map(|r| value(r) - r.cost(inst)).sum();
    sol.method = Some("oracle".into());
    Ok(sol)
}

fn extend(
    inst: &Instance,
    value: &dyn Fn(&Route) -> f64,
    stack: &mut Vec<usize>,
    mask: usize,
    load: u32,
    best: &mut [Option<(f64, Route)>],
) {
    for j in inst.customers() {
        let bit = 1usize << (j - 1);
        if mask & bit != 0 || load + inst.demand(j) > inst.capacity() {
            continue;
        }
        stack.push(j);
        let route = Route::try_from(stack.clone()).expect("nonempty elementary route");
        let v = value(&route);
        let slot = &mut best[mask | bit];
        if slot.as_ref().map_or(true, |(b, _)| v < *b) {
            *slot = Some((v, route));
        }
        extend(inst, value, stack, mask | bit, load + inst.demand(j), best);
        stack.pop();
    }
}
