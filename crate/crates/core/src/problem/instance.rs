use serde::{Deserialize, Serialize};

use super::travel::{ArcIndex, TravelTimes};
use crate::error::{Error, Result};

/// A node record as it appears in a Solomon file. Node 0 is the depot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub demand: u32,
    pub ready: f64,
    pub due: f64,
    pub service: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct InstanceRecord {
    name: String,
    capacity: u32,
    fleet: usize,
    nodes: Vec<Node>,
}

/// A routing instance on the complete digraph over `{0, ..., N}`.
///
/// Costs are unrounded Euclidean distances. Nominal (free-flow) travel times
/// fold each customer's service time into its outgoing arcs:
/// `t_nom[i][j] = c[i][j] + service_i` for `i != j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRecord", into = "InstanceRecord")]
pub struct Instance {
    name: String,
    capacity: u32,
    fleet: usize,
    nodes: Vec<Node>,
    cost: Vec<f64>,
    nominal: TravelTimes,
    arcs: ArcIndex,
}

impl TryFrom<InstanceRecord> for Instance {
    type Error = Error;
    fn try_from(r: InstanceRecord) -> Result<Self> {
        Instance::new(r.name, r.nodes, r.capacity, r.fleet)
    }
}

impl From<Instance> for InstanceRecord {
    fn from(inst: Instance) -> Self {
        InstanceRecord {
            name: inst.name,
            capacity: inst.capacity,
            fleet: inst.fleet,
            nodes: inst.nodes,
        }
    }
}

impl Instance {
    pub fn new(name: impl Into<String>, nodes: Vec<Node>, capacity: u32, fleet: usize) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Validation("instance needs a depot and at least one customer".into()));
        }
        if capacity == 0 {
            return Err(Error::Validation("vehicle capacity must be positive".into()));
        }
        if fleet == 0 {
            return Err(Error::Validation("fleet size must be at least 1".into()));
        }
        let mut seen = vec![false; nodes.len()];
        for (pos, node) in nodes.iter().enumerate() {
            if node.id >= nodes.len() {
                return Err(Error::Validation(format!("node id {} out of range 0..{}", node.id, nodes.len())));
            }
            if seen[node.id] {
                return Err(Error::Validation(format!("duplicate node id {}", node.id)));
            }
            seen[node.id] = true;
            if node.id != pos {
                return Err(Error::Validation(format!("node ids must be listed in order, found {} at {}", node.id, pos)));
            }
            if !(node.x.is_finite() && node.y.is_finite() && node.ready.is_finite() && node.due.is_finite()) {
                return Err(Error::Validation(format!("non-finite data at node {}", node.id)));
            }
            if node.ready < 0.0 || node.ready > node.due {
                return Err(Error::Validation(format!(
                    "time window [{}, {}] of node {} violates 0 <= e <= l",
                    node.ready, node.due, node.id
                )));
            }
            if !(node.service >= 0.0) {
                return Err(Error::Validation(format!("negative service time at node {}", node.id)));
            }
        }
        if nodes[0].demand != 0 {
            return Err(Error::Validation("depot demand must be 0".into()));
        }
        let n = nodes.len();
        let mut cost = vec![0.0; n * n];
        let mut nominal = TravelTimes::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d = ((nodes[i].x - nodes[j].x).powi(2) + (nodes[i].y - nodes[j].y).powi(2)).sqrt();
                cost[i * n + j] = d;
                let service = if i == 0 { 0.0 } else { nodes[i].service };
                nominal.set(i, j, d + service);
            }
        }
        Ok(Self {
            name: name.into(),
            capacity,
            fleet,
            nodes,
            cost,
            nominal,
            arcs: ArcIndex::new(n),
        })
    }

    /// Keeps the depot and the first `n_customers` customers.
    pub fn truncate(&self, n_customers: usize) -> Result<Self> {
        if n_customers == 0 || n_customers > self.n_customers() {
            return Err(Error::Validation(format!(
                "cannot truncate {} customers to {}",
                self.n_customers(),
                n_customers
            )));
        }
        let nodes = self.nodes[..=n_customers].to_vec();
        Self::new(format!("{}-{}", self.name, n_customers), nodes, self.capacity, self.fleet)
    }

    pub fn with_fleet(&self, fleet: usize) -> Result<Self> {
        Self::new(self.name.clone(), self.nodes.clone(), self.capacity, fleet)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of customers `N`.
    pub fn n_customers(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn customers(&self) -> impl Iterator<Item = usize> + Clone {
        1..self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn fleet(&self) -> usize {
        self.fleet
    }

    #[inline]
    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.nodes.len() + j]
    }

    #[inline]
    pub fn demand(&self, i: usize) -> u32 {
        self.nodes[i].demand
    }

    #[inline]
    pub fn ready(&self, i: usize) -> f64 {
        self.nodes[i].ready
    }

    #[inline]
    pub fn due(&self, i: usize) -> f64 {
        self.nodes[i].due
    }

    /// Latest due date over customers.
    pub fn max_due(&self) -> f64 {
        self.customers().map(|i| self.due(i)).fold(0.0, f64::max)
    }

    pub fn nominal(&self) -> &TravelTimes {
        &self.nominal
    }

    pub fn arcs(&self) -> &ArcIndex {
        &self.arcs
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
