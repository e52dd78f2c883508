//! Directed capacitated graph with fixed latencies.

mod paths;
mod tntp;

pub use paths::{enumerate_paths, shortest_path, PathSet, ShortestPathTree};
pub(crate) use paths::validate_costs;
pub use tntp::{load_tntp, load_tntp_with, DemandTable, TntpOptions};

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: EdgeId,
    pub tail: NodeId,
    pub head: NodeId,
    /// Travel time in hours.
    pub latency: f64,
    /// Vehicles per period.
    pub capacity: f64,
}

#[derive(Debug, Clone)]
pub struct Network {
    node_count: usize,
    edges: Vec<Edge>,
    outgoing: Vec<Vec<EdgeId>>,
    /// Offset between external node labels and internal ids (1 for TNTP files).
    node_offset: usize,
}

impl Network {
    /// Builds a network from `(tail, head, latency, capacity)` tuples. Edge ids
    /// follow the input order.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId, f64, f64)>,
    {
        if node_count == 0 {
            return Err(Error::InvalidNetwork("node count must be positive".into()));
        }
        let mut out = Network {
            node_count,
            edges: Vec::new(),
            outgoing: vec![Vec::new(); node_count],
            node_offset: 0,
        };
        for (tail, head, latency, capacity) in edges {
            for node in [tail, head] {
                if node >= node_count {
                    return Err(Error::NodeOutOfRange { node, count: node_count });
                }
            }
            if !(latency >= 0.0) || !latency.is_finite() {
                return Err(Error::InvalidNetwork(format!("edge {tail}->{head}: latency {latency}")));
            }
            if !(capacity > 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "edge {tail}->{head}: capacity {capacity} must be positive"
                )));
            }
            let id = out.edges.len();
            out.edges.push(Edge { id, tail, head, latency, capacity });
            out.outgoing[tail].push(id);
        }
        Ok(out)
    }

    /// `k` parallel edges from node 0 to node 1.
    pub fn parallel(latencies: &[f64], capacities: &[f64]) -> Result<Self> {
        if latencies.len() != capacities.len() {
            return Err(Error::DimensionMismatch { expected: latencies.len(), got: capacities.len() });
        }
        Network::from_edges(2, latencies.iter().zip(capacities).map(|(&l, &c)| (0, 1, l, c)))
    }

    pub(crate) fn with_node_offset(mut self, offset: usize) -> Self {
        self.node_offset = offset;
        self
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn outgoing(&self, node: NodeId) -> &[EdgeId] {
        &self.outgoing[node]
    }

    pub fn node_offset(&self) -> usize {
        self.node_offset
    }

    pub fn latencies(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.latency).collect()
    }

    pub fn capacities(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.capacity).collect()
    }

    pub fn max_capacity(&self) -> f64 {
        self.edges.iter().map(|e| e.capacity).fold(0.0, f64::max)
    }

    /// Same topology with every capacity multiplied by `factor`.
    pub fn scale_capacities(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::InvalidArgument(format!("capacity scale {factor} must be positive")));
        }
        let mut out = self.clone();
        for e in &mut out.edges {
            e.capacity *= factor;
        }
        Ok(out)
    }

    pub fn check_node(&self, node: NodeId) -> Result<()> {
        if node >= self.node_count {
            return Err(Error::NodeOutOfRange { node, count: self.node_count });
        }
        Ok(())
    }

    /// Per-edge cost `vot * latency + toll`.
    pub fn generalized_costs(&self, vot: f64, tolls: &[f64]) -> Vec<f64> {
        self.edges.iter().zip(tolls).map(|(e, &t)| vot * e.latency + t).collect()
    }
}

/// A simple directed path, stored as its edge sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    edges: Vec<EdgeId>,
    origin: NodeId,
    destination: NodeId,
    latency: f64,
}

impl Path {
    /// Validates incidence and simplicity.
    pub fn new(net: &Network, edges: Vec<EdgeId>) -> Result<Self> {
        let first = *edges
            .first()
            .ok_or_else(|| Error::InvalidPath("empty edge sequence".into()))?;
        for &e in &edges {
            if e >= net.edge_count() {
                return Err(Error::InvalidPath(format!("edge {e} out of range")));
            }
        }
        let origin = net.edge(first).tail;
        let mut seen = vec![false; net.node_count()];
        seen[origin] = true;
        let mut at = origin;
        for &e in &edges {
            let edge = net.edge(e);
            if edge.tail != at {
                return Err(Error::InvalidPath(format!("edge {e} does not start at node {at}")));
            }
            if seen[edge.head] {
                return Err(Error::InvalidPath(format!("node {} repeated", edge.head)));
            }
            seen[edge.head] = true;
            at = edge.head;
        }
        Ok(Self::from_valid(net, edges))
    }

    pub(crate) fn from_valid(net: &Network, edges: Vec<EdgeId>) -> Self {
        let origin = net.edge(edges[0]).tail;
        let destination = net.edge(*edges.last().unwrap()).head;
        let latency = edges.iter().map(|&e| net.edge(e).latency).sum();
        Path { edges, origin, destination, latency }
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn origin(&self) -> NodeId {
        self.origin
    }

    pub fn destination(&self) -> NodeId {
        self.destination
    }

    /// l_P, summed left to right over the edge sequence.
    pub fn latency(&self) -> f64 {
        self.latency
    }

    pub fn toll(&self, tolls: &[f64]) -> f64 {
        self.edges.iter().map(|&e| tolls[e]).sum()
    }

    pub fn cost(&self, vot: f64, tolls: &[f64]) -> f64 {
        vot * self.latency + self.toll(tolls)
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.edges.contains(&e)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_edges() {
        assert!(Network::from_edges(2, [(0, 2, 1.0, 1.0)]).is_err());
        assert!(Network::from_edges(2, [(0, 1, -1.0, 1.0)]).is_err());
        assert!(Network::from_edges(2, [(0, 1, 1.0, 0.0)]).is_err());
        assert!(Network::from_edges(0, Vec::new()).is_err());
    }

    #[test]
    fn path_validation() {
        let net = Network::from_edges(3, [(0, 1, 1.0, 1.0), (1, 2, 2.0, 1.0), (2, 0, 1.0, 1.0)]).unwrap();
        let p = Path::new(&net, vec![0, 1]).unwrap();
        assert_eq!(p.latency(), 3.0);
        assert_eq!((p.origin(), p.destination()), (0, 2));
        assert!(Path::new(&net, vec![1, 0]).is_err());
        assert!(Path::new(&net, vec![0, 1, 2]).is_err());
        assert!(Path::new(&net, vec![]).is_err());
    }
}
