//! Capacitated graphs, candidate path enumeration and path/edge incidence.
//!
//! Every edge is one capacity constraint. In undirected mode an edge carries
//! traffic in both directions against a single shared capacity, so constraint
//! indices and edge indices coincide in both modes.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("edge {edge}: node {node} out of range (graph has {node_count} nodes)")]
    NodeOutOfRange { edge: usize, node: NodeId, node_count: usize },
    #[error("edge {edge} ({src}->{dst}): capacity {capacity} is not strictly positive")]
    NonPositiveCapacity { edge: usize, src: NodeId, dst: NodeId, capacity: f64 },
    #[error("edge {edge}: self-loop on node {node}")]
    SelfLoop { edge: usize, node: NodeId },
    #[error("edge {edge} ({src}->{dst}) duplicates edge {first}")]
    DuplicateEdge { edge: usize, first: usize, src: NodeId, dst: NodeId },
    #[error("no route from {src} to {dst}")]
    NoRoute { src: NodeId, dst: NodeId },
    #[error("source and destination are both {0}")]
    SameEndpoints(NodeId),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("path {0:?} is not a simple path in the graph")]
    InvalidPath(Vec<NodeId>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub capacity: f64,
}

/// A validated capacitated graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    node_count: usize,
    directed: bool,
    edges: Vec<Edge>,
    /// Outgoing arcs per node as `(neighbor, edge index)`, sorted by neighbor.
    out_arcs: Vec<Vec<(NodeId, usize)>>,
    /// Incoming arcs per node as `(neighbor, edge index)`, sorted by neighbor.
    in_arcs: Vec<Vec<(NodeId, usize)>>,
}

impl Graph {
    pub fn new(node_count: usize, directed: bool, edges: Vec<Edge>) -> Result<Self, TopologyError> {
        let mut seen: BTreeSet<(NodeId, NodeId, usize)> = BTreeSet::new();
        let mut out_arcs = vec![Vec::new(); node_count];
        let mut in_arcs = vec![Vec::new(); node_count];
        for (i, e) in edges.iter().enumerate() {
            for node in [e.src, e.dst] {
                if node >= node_count {
                    return Err(TopologyError::NodeOutOfRange { edge: i, node, node_count });
                }
            }
            if e.src == e.dst {
                return Err(TopologyError::SelfLoop { edge: i, node: e.src });
            }
            if !(e.capacity > 0.0) || !e.capacity.is_finite() {
                return Err(TopologyError::NonPositiveCapacity {
                    edge: i,
                    src: e.src,
                    dst: e.dst,
                    capacity: e.capacity,
                });
            }
            let key = if directed { (e.src, e.dst) } else { (e.src.min(e.dst), e.src.max(e.dst)) };
            if let Some(&(_, _, first)) = seen.range((key.0, key.1, 0)..=(key.0, key.1, usize::MAX)).next() {
                return Err(TopologyError::DuplicateEdge { edge: i, first, src: e.src, dst: e.dst });
            }
            seen.insert((key.0, key.1, i));
            out_arcs[e.src].push((e.dst, i));
            in_arcs[e.dst].push((e.src, i));
            if !directed {
                out_arcs[e.dst].push((e.src, i));
                in_arcs[e.src].push((e.dst, i));
            }
        }
        for arcs in out_arcs.iter_mut().chain(in_arcs.iter_mut()) {
            arcs.sort_unstable();
        }
        Ok(Self { node_count, directed, edges, out_arcs, in_arcs })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Number of capacity constraints (one per edge).
    pub fn constraint_count(&self) -> usize {
        self.edges.len()
    }

    pub fn capacities(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.capacity).collect()
    }

    pub fn min_capacity(&self) -> Option<f64> {
        self.edges.iter().map(|e| e.capacity).reduce(f64::min)
    }

    /// Outgoing arcs of `node` as `(neighbor, edge index)` in neighbor order.
    pub fn out_arcs(&self, node: NodeId) -> &[(NodeId, usize)] {
        &self.out_arcs[node]
    }

    /// Edge index joining `u` to `v` in the traversal direction `u -> v`.
    pub fn arc(&self, u: NodeId, v: NodeId) -> Option<usize> {
        let arcs = &self.out_arcs[u];
        arcs.binary_search_by(|&(n, _)| n.cmp(&v)).ok().map(|i| arcs[i].1)
    }

    /// Builds a [`Path`] from a node sequence, checking that it is simple and connected.
    pub fn path_from_nodes(&self, nodes: Vec<NodeId>) -> Result<Path, TopologyError> {
        if nodes.len() < 2 || nodes.iter().any(|&n| n >= self.node_count) {
            return Err(TopologyError::InvalidPath(nodes));
        }
        let unique: BTreeSet<_> = nodes.iter().collect();
        if unique.len() != nodes.len() {
            return Err(TopologyError::InvalidPath(nodes));
        }
        let mut edges = Vec::with_capacity(nodes.len() - 1);
        for w in nodes.windows(2) {
            match self.arc(w[0], w[1]) {
                Some(e) => edges.push(e),
                None => return Err(TopologyError::InvalidPath(nodes)),
            }
        }
        let capacity = edges.iter().map(|&e| self.edges[e].capacity).fold(f64::INFINITY, f64::min);
        Ok(Path { nodes, edges, capacity })
    }
}

/// A simple path with its bottleneck capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<usize>,
    pub capacity: f64,
}

impl Path {
    pub fn hops(&self) -> usize {
        self.edges.len()
    }
}

/// Lexicographically smallest shortest (by hops) path from `s` to `d`
/// avoiding `banned_nodes` and the directed arcs in `banned_arcs`.
fn shortest_path(
    g: &Graph,
    s: NodeId,
    d: NodeId,
    banned_nodes: &[bool],
    banned_arcs: &[(NodeId, NodeId)],
) -> Option<Vec<NodeId>> {
    let n = g.node_count;
    let allowed = |u: NodeId, v: NodeId| !banned_nodes[u] && !banned_nodes[v] && !banned_arcs.contains(&(u, v));
    // Hop distance to d over reversed arcs.
    let mut dist = vec![usize::MAX; n];
    dist[d] = 0;
    let mut queue = alloc::collections::VecDeque::from([d]);
    while let Some(v) = queue.pop_front() {
        for &(u, _) in &g.in_arcs[v] {
            if dist[u] == usize::MAX && allowed(u, v) {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    if banned_nodes[s] || dist[s] == usize::MAX {
        return None;
    }
    // Greedy descent picks the smallest neighbor one hop closer at each step,
    // which yields the lexicographically smallest among shortest paths.
    let mut nodes = vec![s];
    let mut u = s;
    while u != d {
        let next = g.out_arcs[u]
            .iter()
            .map(|&(v, _)| v)
            .find(|&v| dist[v] != usize::MAX && dist[v] + 1 == dist[u] && allowed(u, v))?;
        nodes.push(next);
        u = next;
    }
    Some(nodes)
}

/// Yen's k-shortest simple paths by hop count, ties broken by lexicographic
/// order of the node sequence.
pub fn yen_k_shortest(g: &Graph, s: NodeId, d: NodeId, k: usize) -> Result<Vec<Path>, TopologyError> {
    if k == 0 {
        return Err(TopologyError::ZeroK);
    }
    if s == d {
        return Err(TopologyError::SameEndpoints(s));
    }
    let n = g.node_count;
    if s >= n || d >= n {
        return Err(TopologyError::NoRoute { src: s, dst: d });
    }
    let none = vec![false; n];
    let first = shortest_path(g, s, d, &none, &[]).ok_or(TopologyError::NoRoute { src: s, dst: d })?;

    let mut accepted: Vec<Vec<NodeId>> = vec![first];
    let mut candidates: BTreeSet<(usize, Vec<NodeId>)> = BTreeSet::new();
    while accepted.len() < k {
        let last = accepted.last().expect("nonempty").clone();
        for i in 0..last.len() - 1 {
            let spur = last[i];
            let root = &last[..=i];
            let banned_arcs: Vec<(NodeId, NodeId)> = accepted
                .iter()
                .filter(|p| p.len() > i + 1 && &p[..=i] == root)
                .map(|p| (p[i], p[i + 1]))
                .collect();
            let mut banned_nodes = vec![false; n];
            for &v in &root[..i] {
                banned_nodes[v] = true;
            }
            if let Some(spur_path) = shortest_path(g, spur, d, &banned_nodes, &banned_arcs) {
                let mut total = root[..i].to_vec();
                total.extend_from_slice(&spur_path);
                if !accepted.contains(&total) {
                    candidates.insert((total.len() - 1, total));
                }
            }
        }
        match candidates.pop_first() {
            Some((_, p)) => accepted.push(p),
            None => break,
        }
    }
    accepted
        .into_iter()
        .map(|nodes| g.path_from_nodes(nodes))
        .collect()
}

/// Candidate paths for every reachable ordered SD pair, flattened into one
/// global path index partitioned by SD group.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSets {
    num_nodes: usize,
    sd_pairs: Vec<(NodeId, NodeId)>,
    offsets: Vec<usize>,
    paths: Vec<Path>,
    path_sd: Vec<usize>,
    unreachable: Vec<(NodeId, NodeId)>,
    min_edge_capacity: f64,
}

impl PathSets {
    /// Assembles path sets from explicit groups. Groups must be nonempty and
    /// every path must run from its group's source to its destination.
    pub fn from_groups(
        g: &Graph,
        groups: Vec<((NodeId, NodeId), Vec<Path>)>,
        unreachable: Vec<(NodeId, NodeId)>,
    ) -> Result<Self, TopologyError> {
        let mut sd_pairs = Vec::with_capacity(groups.len());
        let mut offsets = vec![0];
        let mut paths = Vec::new();
        let mut path_sd = Vec::new();
        for (i, ((s, d), group)) in groups.into_iter().enumerate() {
            if s == d {
                return Err(TopologyError::SameEndpoints(s));
            }
            if group.is_empty() {
                return Err(TopologyError::NoRoute { src: s, dst: d });
            }
            for p in group {
                if p.nodes.first() != Some(&s) || p.nodes.last() != Some(&d) {
                    return Err(TopologyError::InvalidPath(p.nodes));
                }
                paths.push(p);
                path_sd.push(i);
            }
            sd_pairs.push((s, d));
            offsets.push(paths.len());
        }
        Ok(Self {
            num_nodes: g.node_count(),
            sd_pairs,
            offsets,
            paths,
            path_sd,
            unreachable,
            min_edge_capacity: g.min_capacity().unwrap_or(1.0),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn sd_pairs(&self) -> &[(NodeId, NodeId)] {
        &self.sd_pairs
    }

    pub fn num_sd(&self) -> usize {
        self.sd_pairs.len()
    }

    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    /// Global path index range of SD group `sd`.
    pub fn group(&self, sd: usize) -> Range<usize> {
        self.offsets[sd]..self.offsets[sd + 1]
    }

    pub fn groups(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        self.offsets.windows(2).map(|w| w[0]..w[1])
    }

    pub fn paths_of(&self, sd: usize) -> &[Path] {
        &self.paths[self.group(sd)]
    }

    /// SD group index served by global path `p`.
    pub fn sd_of_path(&self, p: usize) -> usize {
        self.path_sd[p]
    }

    pub fn sd_index(&self, s: NodeId, d: NodeId) -> Option<usize> {
        self.sd_pairs.iter().position(|&pair| pair == (s, d))
    }

    pub fn unreachable(&self) -> &[(NodeId, NodeId)] {
        &self.unreachable
    }

    /// Smallest edge capacity in the topology the paths were built from.
    pub fn min_edge_capacity(&self) -> f64 {
        self.min_edge_capacity
    }

    pub fn path_capacities(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.capacity).collect()
    }
}

/// Runs [`yen_k_shortest`] for every ordered SD pair in row-major order.
/// Unreachable pairs are recorded and skipped.
pub fn build_path_sets(g: &Graph, k: usize) -> Result<PathSets, TopologyError> {
    if k == 0 {
        return Err(TopologyError::ZeroK);
    }
    let n = g.node_count();
    let mut groups = Vec::new();
    let mut unreachable = Vec::new();
    for s in 0..n {
        for d in 0..n {
            if s == d {
                continue;
            }
            match yen_k_shortest(g, s, d, k) {
                Ok(paths) => groups.push(((s, d), paths)),
                Err(TopologyError::NoRoute { .. }) => unreachable.push((s, d)),
                Err(e) => return Err(e),
            }
        }
    }
    PathSets::from_groups(g, groups, unreachable)
}

/// Sparse form of the SD-to-path and path-to-constraint incidence matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Incidence {
    num_nodes: usize,
    /// Row-major demand-matrix index `s * n + d` of each SD group.
    sd_demand_index: Vec<usize>,
    path_sd: Vec<usize>,
    edge_offsets: Vec<usize>,
    edge_ids: Vec<usize>,
    capacity: Vec<f64>,
}

pub fn build_incidence(g: &Graph, ps: &PathSets) -> Incidence {
    let n = g.node_count();
    let mut edge_offsets = vec![0];
    let mut edge_ids = Vec::new();
    for p in ps.paths() {
        edge_ids.extend_from_slice(&p.edges);
        edge_offsets.push(edge_ids.len());
    }
    Incidence {
        num_nodes: n,
        sd_demand_index: ps.sd_pairs().iter().map(|&(s, d)| s * n + d).collect(),
        path_sd: (0..ps.num_paths()).map(|p| ps.sd_of_path(p)).collect(),
        edge_offsets,
        edge_ids,
        capacity: g.capacities(),
    }
}

impl Incidence {
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_sd(&self) -> usize {
        self.sd_demand_index.len()
    }

    pub fn num_paths(&self) -> usize {
        self.path_sd.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.capacity.len()
    }

    pub fn capacity(&self) -> &[f64] {
        &self.capacity
    }

    pub fn sd_demand_index(&self) -> &[usize] {
        &self.sd_demand_index
    }

    pub fn path_sd(&self) -> &[usize] {
        &self.path_sd
    }

    /// Constraints traversed by path `p`.
    pub fn path_constraints(&self, p: usize) -> &[usize] {
        &self.edge_ids[self.edge_offsets[p]..self.edge_offsets[p + 1]]
    }

    /// Dense `|SD| x |paths|` 0/1 matrix.
    pub fn sd_to_path(&self) -> Vec<Vec<u8>> {
        let mut m = vec![vec![0u8; self.num_paths()]; self.num_sd()];
        for (p, &sd) in self.path_sd.iter().enumerate() {
            m[sd][p] = 1;
        }
        m
    }

    /// Dense `|paths| x |constraints|` 0/1 matrix.
    pub fn path_to_edge(&self) -> Vec<Vec<u8>> {
        let mut m = vec![vec![0u8; self.num_constraints()]; self.num_paths()];
        for (p, row) in m.iter_mut().enumerate() {
            for &e in self.path_constraints(p) {
                row[e] = 1;
            }
        }
        m
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn nodes(paths: &[Path]) -> Vec<Vec<usize>> {
        paths.iter().map(|p| p.nodes.clone()).collect()
    }

    /// Every simple s-d path by DFS, sorted by (hops, node sequence).
    fn all_simple_paths(g: &Graph, s: usize, d: usize) -> Vec<Vec<usize>> {
        fn dfs(g: &Graph, u: usize, d: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if u == d {
                out.push(cur.clone());
                return;
            }
            for &(v, _) in g.out_arcs(u) {
                if !cur.contains(&v) {
                    cur.push(v);
                    dfs(g, v, d, cur, out);
                    cur.pop();
                }
            }
        }
        let mut out = Vec::new();
        dfs(g, s, d, &mut vec![s], &mut out);
        out.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
        out
    }

    fn random_graph(seed: u64, n: usize, p: f64, directed: bool) -> Graph {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in 0..n {
                if u == v || (!directed && v < u) {
                    continue;
                }
                if rng.random::<f64>() < p {
                    edges.push(Edge { src: u, dst: v, capacity: rng.random_range(1.0..10.0) });
                }
            }
        }
        Graph::new(n, directed, edges).unwrap()
    }

    #[test]
    fn rejects_invalid_edges() {
        let e = |src, dst, capacity| Edge { src, dst, capacity };
        assert!(matches!(
            Graph::new(2, false, vec![e(0, 1, 0.0)]),
            Err(TopologyError::NonPositiveCapacity { edge: 0, .. })
        ));
        assert!(matches!(Graph::new(2, false, vec![e(1, 1, 1.0)]), Err(TopologyError::SelfLoop { .. })));
        assert!(matches!(Graph::new(2, false, vec![e(0, 2, 1.0)]), Err(TopologyError::NodeOutOfRange { .. })));
        assert!(matches!(
            Graph::new(2, false, vec![e(0, 1, 1.0), e(1, 0, 1.0)]),
            Err(TopologyError::DuplicateEdge { edge: 1, first: 0, .. })
        ));
        let g = Graph::new(2, true, vec![e(0, 1, 10.0), e(1, 0, 5.0)]).unwrap();
        assert_eq!(g.constraint_count(), 2);
    }

    #[test]
    fn triangle_yen() {
        let g = triangle();
        assert_eq!(nodes(&yen_k_shortest(&g, 0, 1, 3).unwrap()), vec![vec![0, 1], vec![0, 2, 1]]);
        assert_eq!(nodes(&yen_k_shortest(&g, 0, 1, 1).unwrap()), vec![vec![0, 1]]);
        assert_eq!(yen_k_shortest(&g, 0, 0, 1), Err(TopologyError::SameEndpoints(0)));
        assert_eq!(yen_k_shortest(&g, 0, 1, 0), Err(TopologyError::ZeroK));
    }

    #[test]
    fn no_route_in_directed_graph() {
        let g = Graph::new(2, true, vec![Edge { src: 0, dst: 1, capacity: 1.0 }]).unwrap();
        assert_eq!(yen_k_shortest(&g, 1, 0, 2), Err(TopologyError::NoRoute { src: 1, dst: 0 }));
        let ps = build_path_sets(&g, 3).unwrap();
        assert_eq!(ps.sd_pairs(), &[(0, 1)]);
        assert_eq!(ps.unreachable(), &[(1, 0)]);
    }

    #[test]
    fn yen_matches_exhaustive_enumeration() {
        for seed in 0..12 {
            let directed = seed % 2 == 1;
            let g = random_graph(seed, 8, 0.35, directed);
            for s in 0..8 {
                for d in 0..8 {
                    if s == d {
                        continue;
                    }
                    let all = all_simple_paths(&g, s, d);
                    match yen_k_shortest(&g, s, d, 3) {
                        Ok(paths) => {
                            let expected: Vec<_> = all.into_iter().take(3).collect();
                            assert_eq!(nodes(&paths), expected, "seed {seed} {s}->{d}");
                        }
                        Err(TopologyError::NoRoute { .. }) => assert!(all.is_empty()),
                        Err(e) => panic!("{e}"),
                    }
                }
            }
        }
    }

    #[test]
    fn triangle_path_sets() {
        let ps = build_path_sets(&triangle(), 3).unwrap();
        assert_eq!(ps.num_sd(), 6);
        assert_eq!(ps.num_paths(), 12);
        assert!(ps.groups().all(|r| r.len() == 2));
    }

    #[test]
    fn ring_gets_both_directions() {
        let g = ring(5);
        let ps = build_path_sets(&g, 2).unwrap();
        assert_eq!(ps.num_sd(), 20);
        for (i, &(s, d)) in ps.sd_pairs().iter().enumerate() {
            let clockwise: Vec<usize> = {
                let mut v = vec![s];
                let mut u = s;
                while u != d {
                    u = (u + 1) % 5;
                    v.push(u);
                }
                v
            };
            let counter: Vec<usize> = {
                let mut v = vec![s];
                let mut u = s;
                while u != d {
                    u = (u + 4) % 5;
                    v.push(u);
                }
                v
            };
            let mut got = nodes(ps.paths_of(i));
            got.sort();
            let mut want = vec![clockwise, counter];
            want.sort();
            assert_eq!(got, want);
        }
        let inc = build_incidence(&g, &ps);
        for (p, row) in inc.path_to_edge().iter().enumerate() {
            let hops: usize = row.iter().map(|&x| x as usize).sum();
            assert_eq!(hops, ps.paths()[p].edges.len());
        }
    }

    #[test]
    fn triangle_incidence() {
        let g = triangle();
        let ps = build_path_sets(&g, 3).unwrap();
        let inc = build_incidence(&g, &ps);
        let ab = ps.sd_index(0, 1).unwrap();
        let via_c = ps.group(ab).start + 1;
        assert_eq!(ps.paths()[via_c].nodes, vec![0, 2, 1]);
        assert_eq!(inc.path_to_edge()[via_c], vec![0, 1, 1]);
        for col in 0..inc.num_paths() {
            let sum: u32 = inc.sd_to_path().iter().map(|r| r[col] as u32).sum();
            assert_eq!(sum, 1);
        }
    }

    #[test]
    fn empty_incidence() {
        let g = Graph::new(
            3,
            true,
            vec![Edge { src: 0, dst: 1, capacity: 1.0 }, Edge { src: 1, dst: 2, capacity: 1.0 }],
        )
        .unwrap();
        let ps = PathSets::from_groups(&g, Vec::new(), Vec::new()).unwrap();
        let inc = build_incidence(&g, &ps);
        assert_eq!(inc.num_paths(), 0);
        assert!(inc.sd_to_path().is_empty());
        assert!(inc.path_to_edge().is_empty());
        assert_eq!(inc.capacity().len(), 2);
    }

    proptest! {
        #[test]
        fn path_invariants(seed in 0u64..500, directed in any::<bool>(), k in 1usize..5) {
            let g = random_graph(seed, 6, 0.4, directed);
            let ps = build_path_sets(&g, k).unwrap();
            for r in ps.groups() {
                let group = &ps.paths()[r];
                prop_assert!(!group.is_empty() && group.len() <= k);
                for w in group.windows(2) {
                    prop_assert!(w[0].hops() <= w[1].hops());
                    prop_assert!(w[0].nodes != w[1].nodes);
                }
                for p in group {
                    let cap = p.edges.iter().map(|&e| g.edges()[e].capacity).fold(f64::INFINITY, f64::min);
                    prop_assert_eq!(cap, p.capacity);
                }
            }
            let again = build_incidence(&g, &build_path_sets(&g, k).unwrap());
            prop_assert_eq!(build_incidence(&g, &ps), again);
        }

        #[test]
        fn undirected_orientation_is_irrelevant(seed in 0u64..300, flips in any::<u64>()) {
            let g = random_graph(seed, 6, 0.4, false);
            let flipped: Vec<Edge> = g.edges().iter().enumerate().map(|(i, e)| {
                if flips >> (i % 64) & 1 == 1 { Edge { src: e.dst, dst: e.src, capacity: e.capacity } } else { *e }
            }).collect();
            let h = Graph::new(6, false, flipped).unwrap();
            prop_assert_eq!(build_path_sets(&g, 3).unwrap(), build_path_sets(&h, 3).unwrap());
        }
    }
}
