use std::fmt;

use serde::{Deserialize, Serialize};

use super::instance::Instance;
use super::penalty::PenaltyFn;
use super::travel::TravelTimes;
use crate::error::{Error, Result};

/// A non-empty elementary customer sequence leaving from and returning to the depot.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Route {
    customers: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Route {
    type Error = Error;
    fn try_from(customers: Vec<usize>) -> Result<Self> {
        if customers.is_empty() {
            return Err(Error::Validation("route must visit at least one customer".into()));
        }
        let mut sorted = customers.clone();
        sorted.sort_unstable();
        if sorted[0] == 0 {
            return Err(Error::Validation("route must not contain the depot".into()));
        }
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Validation(format!("route {customers:?} repeats a customer")));
        }
        Ok(Route { customers })
    }
}

impl From<Route> for Vec<usize> {
    fn from(r: Route) -> Self {
        r.customers
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0")?;
        for c in &self.customers {
            write!(f, "-{c}")?;
        }
        write!(f, "-0")
    }
}

impl Route {
    /// Builds a route and checks it against the instance (ids and capacity).
    pub fn new(inst: &Instance, customers: Vec<usize>) -> Result<Self> {
        let route = Route::try_from(customers)?;
        route.check(inst)?;
        Ok(route)
    }

    pub fn check(&self, inst: &Instance) -> Result<()> {
        if let Some(&c) = self.customers.iter().find(|&&c| c > inst.n_customers()) {
            return Err(Error::Validation(format!("unknown customer {c}")));
        }
        let load = self.load(inst);
        if load > inst.capacity() {
            return Err(Error::Validation(format!(
                "route {self} load {load} exceeds capacity {}",
                inst.capacity()
            )));
        }
        Ok(())
    }

    pub fn customers(&self) -> &[usize] {
        &self.customers
    }

    pub fn len(&self) -> usize {
        self.customers.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, c: usize) -> bool {
        self.customers.contains(&c)
    }

    pub fn load(&self, inst: &Instance) -> u32 {
        self.customers.iter().map(|&c| inst.demand(c)).sum()
    }

    /// Transportation cost `c[0][v1] + sum c[v(k-1)][vk] + c[vL][0]`.
    pub fn cost(&self, inst: &Instance) -> f64 {
        self.arcs().map(|(i, j)| inst.cost(i, j)).sum()
    }

    /// All traversed arcs including the two depot legs.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.customers.len();
        (0..=n).map(move |k| {
            let from = if k == 0 { 0 } else { self.customers[k - 1] };
            let to = if k == n { 0 } else { self.customers[k] };
            (from, to)
        })
    }
}

/// Arrival and service start at one visited customer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Visit {
    pub customer: usize,
    pub arrival: f64,
    pub service_start: f64,
}

/// Propagates arrival and service-start times along a route.
///
/// The vehicle leaves the depot at time 0; arrival at `v1` is `t[0][v1]`, and
/// each later arrival is the previous service start plus the arc time. Early
/// arrivals wait until the window opens.
pub fn arrival_times(route: &Route, t: &TravelTimes, inst: &Instance) -> Vec<Visit> {
    let mut out = Vec::with_capacity(route.len());
    let mut prev = 0usize;
    let mut depart = 0.0;
    for &c in route.customers() {
        let arrival = depart + t.get(prev, c);
        let service_start = arrival.max(inst.ready(c));
        out.push(Visit {
            customer: c,
            arrival,
            service_start,
        });
        prev = c;
        depart = service_start;
    }
    out
}

/// Sum of late-arrival penalties `pi(a(i) - l_i)` over the customers of the route.
pub fn route_penalty(route: &Route, t: &TravelTimes, pen: &PenaltyFn, inst: &Instance) -> f64 {
    arrival_times(route, t, inst)
        .iter()
        .map(|v| pen.eval(v.arrival - inst.due(v.customer)))
        .sum()
}
