use std::borrow::Cow;
use std::cell::OnceCell;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use super::{EdgeId, Network, NodeId, Path};
use crate::error::{Error, Result};

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    node: NodeId,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Below this many nodes a linear scan beats the heap.
const SCAN_NODES: usize = 64;

/// Costs within this relative distance count as tied, so that sums which are
/// equal in exact arithmetic break the same way whatever the rounding.
fn tie_tol(d: f64) -> f64 {
    if d.is_finite() {
        1e-12 * d.abs().max(1.0)
    } else {
        0.0
    }
}

/// Single-source shortest-path labels under a fixed nonnegative edge cost.
///
/// Equal-cost alternatives resolve to the lexicographically smallest edge-id
/// sequence. Extraction from the predecessor tree is exact unless a node on
/// the path was reached by a tied relaxation, in which case
/// [`ShortestPathTree::path_to`] walks the tight subgraph greedily instead.
pub struct ShortestPathTree<'a> {
    net: &'a Network,
    costs: Cow<'a, [f64]>,
    banned_edges: Option<&'a [bool]>,
    banned_nodes: Option<&'a [bool]>,
    origin: NodeId,
    dist: Vec<f64>,
    pred: Vec<Option<EdgeId>>,
    /// A relaxation into this node tied with its final label.
    tie_at: Vec<bool>,
    /// Tight incoming edges per node, built on the first tied extraction.
    tight_in: OnceCell<Vec<Vec<EdgeId>>>,
}

impl<'a> ShortestPathTree<'a> {
    /// Costs are assumed validated by the caller.
    pub fn compute(net: &'a Network, origin: NodeId, costs: &'a [f64]) -> Self {
        Self::compute_masked(net, origin, Cow::Borrowed(costs), None, None)
    }

    /// As [`ShortestPathTree::compute`], keeping the cost vector.
    pub fn compute_owned(net: &'a Network, origin: NodeId, costs: Vec<f64>) -> Self {
        Self::compute_masked(net, origin, Cow::Owned(costs), None, None)
    }

    fn compute_masked(
        net: &'a Network,
        origin: NodeId,
        costs: Cow<'a, [f64]>,
        banned_edges: Option<&'a [bool]>,
        banned_nodes: Option<&'a [bool]>,
    ) -> Self {
        let scan = net.node_count() <= SCAN_NODES;
        Self::search(net, origin, costs, banned_edges, banned_nodes, scan)
    }

    fn search(
        net: &'a Network,
        origin: NodeId,
        costs: Cow<'a, [f64]>,
        banned_edges: Option<&'a [bool]>,
        banned_nodes: Option<&'a [bool]>,
        scan: bool,
    ) -> Self {
        let n = net.node_count();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred: Vec<Option<EdgeId>> = vec![None; n];
        let mut done = vec![false; n];
        let mut tie_at = vec![false; n];
        let mut relax = |u: NodeId, d: f64, dist: &mut [f64], pred: &mut [Option<EdgeId>], pushed: &mut dyn FnMut(NodeId, f64)| {
            for &e in net.outgoing(u) {
                if banned_edges.is_some_and(|b| b[e]) {
                    continue;
                }
                let v = net.edge(e).head;
                if v == origin || banned_nodes.is_some_and(|b| b[v]) {
                    continue;
                }
                let nd = d + costs[e];
                if nd < dist[v] - tie_tol(dist[v]) {
                    dist[v] = nd;
                    pred[v] = Some(e);
                    tie_at[v] = false;
                    pushed(v, nd);
                } else if nd <= dist[v] + tie_tol(dist[v]) {
                    tie_at[v] = true;
                }
            }
        };
        dist[origin] = 0.0;
        if scan {
            // Same settle order as the heap: least (distance, node) first.
            loop {
                let mut next: Option<NodeId> = None;
                for u in 0..n {
                    if !done[u] && dist[u].is_finite() && next.is_none_or(|b| dist[u] < dist[b]) {
                        next = Some(u);
                    }
                }
                let Some(u) = next else { break };
                done[u] = true;
                relax(u, dist[u], &mut dist, &mut pred, &mut |_, _| {});
            }
        } else {
            let mut heap = BinaryHeap::new();
            heap.push(HeapEntry { dist: 0.0, node: origin });
            while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
                if done[u] || d > dist[u] {
                    continue;
                }
                done[u] = true;
                relax(u, d, &mut dist, &mut pred, &mut |v, nd| heap.push(HeapEntry { dist: nd, node: v }));
            }
        }
        ShortestPathTree { net, costs, banned_edges, banned_nodes, origin, dist, pred, tie_at, tight_in: OnceCell::new() }
    }

    pub fn origin(&self) -> NodeId {
        self.origin
    }

    pub fn distance(&self, node: NodeId) -> f64 {
        self.dist[node]
    }

    /// The tie-broken shortest path to `dest`, or `None` when unreachable or
    /// when `dest` is the origin.
    pub fn path_to(&self, dest: NodeId) -> Option<Path> {
        if dest == self.origin || !self.dist[dest].is_finite() {
            return None;
        }
        let edges = self.pred_walk(dest);
        // The predecessor path is the only optimum unless some node on it was
        // reached by a tied relaxation.
        let tied = self.tie_at[dest] || edges.iter().any(|&e| self.tie_at[self.net.edge(e).tail]);
        let edges = if tied { self.lex_walk(dest) } else { edges };
        Some(Path::from_valid(self.net, edges))
    }

    fn pred_walk(&self, dest: NodeId) -> Vec<EdgeId> {
        let mut edges = Vec::new();
        let mut at = dest;
        while let Some(e) = self.pred[at] {
            edges.push(e);
            at = self.net.edge(e).tail;
        }
        edges.reverse();
        edges
    }

    fn is_tight(&self, e: EdgeId) -> bool {
        let edge = self.net.edge(e);
        if self.banned_edges.is_some_and(|b| b[e]) || self.banned_nodes.is_some_and(|b| b[edge.head]) {
            return false;
        }
        let du = self.dist[edge.tail];
        let dv = self.dist[edge.head];
        du.is_finite() && (du + self.costs[e] - dv).abs() <= tie_tol(dv)
    }

    fn lex_walk(&self, dest: NodeId) -> Vec<EdgeId> {
        let net = self.net;
        let n = net.node_count();
        let incoming = self.tight_in.get_or_init(|| {
            let mut incoming: Vec<Vec<EdgeId>> = vec![Vec::new(); n];
            for e in 0..net.edge_count() {
                if self.is_tight(e) {
                    incoming[net.edge(e).head].push(e);
                }
            }
            incoming
        });
        let mut reaches = vec![false; n];
        reaches[dest] = true;
        let mut stack = vec![dest];
        while let Some(v) = stack.pop() {
            for &e in &incoming[v] {
                let u = net.edge(e).tail;
                if !reaches[u] {
                    reaches[u] = true;
                    stack.push(u);
                }
            }
        }
        let mut on_path = vec![false; n];
        on_path[self.origin] = true;
        let mut at = self.origin;
        let mut edges = Vec::new();
        while at != dest {
            let next = net
                .outgoing(at)
                .iter()
                .copied()
                .filter(|&e| {
                    let h = net.edge(e).head;
                    self.is_tight(e) && reaches[h] && !on_path[h]
                })
                .min();
            match next {
                Some(e) => {
                    edges.push(e);
                    at = net.edge(e).head;
                    on_path[at] = true;
                }
                // Only reachable through zero-cost cycles; the predecessor
                // tree is still a valid minimum-cost path.
                None => return self.pred_walk(dest),
            }
        }
        edges
    }
}

pub(crate) fn validate_costs(net: &Network, costs: &[f64]) -> Result<()> {
    if costs.len() != net.edge_count() {
        return Err(Error::DimensionMismatch { expected: net.edge_count(), got: costs.len() });
    }
    for (index, &value) in costs.iter().enumerate() {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::Negative { index, value });
        }
    }
    Ok(())
}

/// Minimum-cost simple path under nonnegative `edge_cost`, or `Ok(None)` when
/// the destination is unreachable.
pub fn shortest_path(
    net: &Network,
    origin: NodeId,
    destination: NodeId,
    edge_cost: &[f64],
) -> Result<Option<(Path, f64)>> {
    net.check_node(origin)?;
    net.check_node(destination)?;
    if origin == destination {
        return Err(Error::SelfTrip(origin));
    }
    validate_costs(net, edge_cost)?;
    let tree = ShortestPathTree::compute(net, origin, edge_cost);
    Ok(tree.path_to(destination).map(|p| {
        let cost = p.edges().iter().map(|&e| edge_cost[e]).sum();
        (p, cost)
    }))
}

#[derive(Debug, Clone)]
pub struct PathSet {
    pub paths: Vec<Path>,
    /// True when `paths` holds every simple path between the pair.
    pub exhaustive: bool,
}

fn path_key(p: &Path) -> (f64, &[EdgeId]) {
    (p.latency(), p.edges())
}

fn cmp_paths(a: &Path, b: &Path) -> Ordering {
    let (la, ea) = path_key(a);
    let (lb, eb) = path_key(b);
    la.total_cmp(&lb).then_with(|| ea.cmp(eb))
}

/// Up to `limit` simple paths in nondecreasing latency order (Yen's
/// algorithm on latencies).
pub fn enumerate_paths(net: &Network, origin: NodeId, destination: NodeId, limit: usize) -> Result<PathSet> {
    net.check_node(origin)?;
    net.check_node(destination)?;
    if limit == 0 {
        return Err(Error::InvalidArgument("path limit must be at least 1".into()));
    }
    if origin == destination {
        return Ok(PathSet { paths: Vec::new(), exhaustive: true });
    }
    let latency = net.latencies();
    let first = ShortestPathTree::compute(net, origin, &latency).path_to(destination);
    let Some(first) = first else {
        return Ok(PathSet { paths: Vec::new(), exhaustive: true });
    };
    let mut found = vec![first];
    let mut seen: HashSet<Vec<EdgeId>> = HashSet::new();
    seen.insert(found[0].edges().to_vec());
    let mut candidates: Vec<Path> = Vec::new();
    let mut banned_edges = vec![false; net.edge_count()];
    let mut banned_nodes = vec![false; net.node_count()];
    loop {
        let prev = found.last().unwrap().clone();
        let mut spur = origin;
        for i in 0..prev.len() {
            let root = &prev.edges()[..i];
            banned_edges.iter_mut().for_each(|b| *b = false);
            banned_nodes.iter_mut().for_each(|b| *b = false);
            for p in &found {
                if p.len() > i && &p.edges()[..i] == root {
                    banned_edges[p.edges()[i]] = true;
                }
            }
            banned_nodes[origin] = true;
            for &e in root {
                banned_nodes[net.edge(e).head] = true;
            }
            banned_nodes[spur] = false;
            let tree = ShortestPathTree::compute_masked(net, spur, Cow::Borrowed(&latency), Some(&banned_edges), Some(&banned_nodes));
            if let Some(tail) = tree.path_to(destination) {
                let mut edges = root.to_vec();
                edges.extend_from_slice(tail.edges());
                if seen.insert(edges.clone()) {
                    candidates.push(Path::from_valid(net, edges));
                }
            }
            spur = net.edge(prev.edges()[i]).head;
        }
        if candidates.is_empty() {
            return Ok(PathSet { paths: found, exhaustive: true });
        }
        if found.len() == limit {
            return Ok(PathSet { paths: found, exhaustive: false });
        }
        let best = (0..candidates.len())
            .min_by(|&a, &b| cmp_paths(&candidates[a], &candidates[b]))
            .unwrap();
        found.push(candidates.swap_remove(best));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_simple_paths(net: &Network, o: NodeId, d: NodeId) -> Vec<Vec<EdgeId>> {
        fn rec(net: &Network, at: NodeId, d: NodeId, seen: &mut Vec<bool>, cur: &mut Vec<EdgeId>, out: &mut Vec<Vec<EdgeId>>) {
            if at == d {
                out.push(cur.clone());
                return;
            }
            for &e in net.outgoing(at) {
                let h = net.edge(e).head;
                if !seen[h] {
                    seen[h] = true;
                    cur.push(e);
                    rec(net, h, d, seen, cur, out);
                    cur.pop();
                    seen[h] = false;
                }
            }
        }
        let mut seen = vec![false; net.node_count()];
        seen[o] = true;
        let mut out = Vec::new();
        rec(net, o, d, &mut seen, &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn parallel_edges() {
        let net = Network::parallel(&[1.0, 2.0], &[1.0, 1.0]).unwrap();
        let (p, c) = shortest_path(&net, 0, 1, &[1.0, 2.0]).unwrap().unwrap();
        assert_eq!(p.edges(), &[0]);
        assert_eq!(c, 1.0);
    }

    #[test]
    fn chain() {
        let net = Network::from_edges(3, [(0, 1, 1.0, 1.0), (1, 2, 1.0, 1.0)]).unwrap();
        let (p, c) = shortest_path(&net, 0, 2, &[1.0, 1.0]).unwrap().unwrap();
        assert_eq!(p.edges(), &[0, 1]);
        assert_eq!(c, 2.0);
    }

    #[test]
    fn unreachable_and_self_trip() {
        let net = Network::from_edges(3, [(0, 1, 1.0, 1.0)]).unwrap();
        assert!(shortest_path(&net, 0, 2, &[1.0]).unwrap().is_none());
        assert!(matches!(shortest_path(&net, 1, 1, &[1.0]), Err(Error::SelfTrip(1))));
        assert!(shortest_path(&net, 0, 1, &[-1.0]).is_err());
        let set = enumerate_paths(&net, 0, 2, 3).unwrap();
        assert!(set.paths.is_empty() && set.exhaustive);
    }

    #[test]
    fn ties_go_to_smallest_edge_sequence() {
        // Two equal-cost routes 0->3: via edges [1, 3] and [0, 2]; the second
        // is discovered later by Dijkstra but is lexicographically smaller.
        let net = Network::from_edges(
            4,
            [(0, 2, 1.0, 1.0), (0, 1, 1.0, 1.0), (2, 3, 1.0, 1.0), (1, 3, 1.0, 1.0)],
        )
        .unwrap();
        let (p, _) = shortest_path(&net, 0, 3, &[1.0; 4]).unwrap().unwrap();
        assert_eq!(p.edges(), &[0, 2]);
        let (p, _) = shortest_path(&net, 0, 3, &[1.0, 0.5, 1.0, 1.0]).unwrap().unwrap();
        assert_eq!(p.edges(), &[1, 3]);
    }

    #[test]
    fn three_parallel_paths_are_exhaustive() {
        let net = Network::parallel(&[3.0, 1.0, 2.0], &[1.0; 3]).unwrap();
        let set = enumerate_paths(&net, 0, 1, 10).unwrap();
        assert!(set.exhaustive);
        let ids: Vec<_> = set.paths.iter().map(|p| p.edges()[0]).collect();
        assert_eq!(ids, vec![1, 2, 0]);
        let set = enumerate_paths(&net, 0, 1, 3).unwrap();
        assert!(set.exhaustive);
        let set = enumerate_paths(&net, 0, 1, 2).unwrap();
        assert!(!set.exhaustive);
        assert_eq!(set.paths.len(), 2);
    }

    fn grid(k: usize) -> Network {
        let id = |r: usize, c: usize| r * k + c;
        let mut edges = Vec::new();
        let mut w = 1.0;
        for r in 0..k {
            for c in 0..k {
                if c + 1 < k {
                    edges.push((id(r, c), id(r, c + 1), w, 1.0));
                    edges.push((id(r, c + 1), id(r, c), w + 0.5, 1.0));
                    w += 0.25;
                }
                if r + 1 < k {
                    edges.push((id(r, c), id(r + 1, c), w, 1.0));
                    edges.push((id(r + 1, c), id(r, c), w + 0.5, 1.0));
                    w += 0.125;
                }
            }
        }
        Network::from_edges(k * k, edges).unwrap()
    }

    #[test]
    fn grid_top_five_match_exhaustive_enumeration() {
        let net = grid(3);
        let mut all: Vec<Path> = all_simple_paths(&net, 0, 8)
            .into_iter()
            .map(|e| Path::from_valid(&net, e))
            .collect();
        all.sort_by(cmp_paths);
        let set = enumerate_paths(&net, 0, 8, 5).unwrap();
        assert!(!set.exhaustive);
        let got: Vec<f64> = set.paths.iter().map(|p| p.latency()).collect();
        let want: Vec<f64> = all[..5].iter().map(|p| p.latency()).collect();
        assert_eq!(got, want);
        let full = enumerate_paths(&net, 0, 8, 10_000).unwrap();
        assert!(full.exhaustive);
        assert_eq!(full.paths.len(), all.len());
    }

    #[test]
    fn scan_and_heap_settle_alike() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for trial in 0..200 {
            let n = rng.gen_range(2..12);
            let edges: Vec<_> = (0..rng.gen_range(1..30))
                .filter_map(|_| {
                    let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
                    (a != b).then_some((a, b, 1.0, 1.0))
                })
                .collect();
            if edges.is_empty() {
                continue;
            }
            let net = Network::from_edges(n, edges).unwrap();
            // Small integer costs make exact ties common.
            let costs: Vec<f64> = (0..net.edge_count()).map(|_| rng.gen_range(0..4) as f64).collect();
            let o = rng.gen_range(0..n);
            let a = ShortestPathTree::search(&net, o, Cow::Borrowed(&costs), None, None, true);
            let b = ShortestPathTree::search(&net, o, Cow::Borrowed(&costs), None, None, false);
            assert_eq!((&a.dist, &a.pred, &a.tie_at), (&b.dist, &b.pred, &b.tie_at), "trial {trial}");
            for d in 0..n {
                assert_eq!(a.path_to(d), b.path_to(d));
                // Skipping the greedy walk on untied paths changes nothing.
                if d != o && a.dist[d].is_finite() {
                    assert_eq!(a.path_to(d).unwrap().edges(), a.lex_walk(d), "trial {trial} dest {d}");
                }
            }
        }
    }
}
