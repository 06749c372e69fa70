//! Interaction graphs and hypergraphs, their derived graphs, connected
//! components, neighborhoods and component elimination.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Largest neighborhood for which the complete hypergraph is materialized.
pub const DEFAULT_COMPLETE_HYPERGRAPH_CAP: usize = 24;

/// Simple undirected graph on an arbitrary set of `usize` node ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Graph {
    adj: BTreeMap<usize, BTreeSet<usize>>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Graph with nodes `0..n` and no edges.
    pub fn with_nodes(n: usize) -> Self {
        Self::from_nodes(0..n)
    }

    pub fn from_nodes<I: IntoIterator<Item = usize>>(nodes: I) -> Self {
        Graph {
            adj: nodes.into_iter().map(|v| (v, BTreeSet::new())).collect(),
        }
    }

    pub fn from_edges<I: IntoIterator<Item = (usize, usize)>>(n: usize, edges: I) -> Self {
        let mut g = Self::with_nodes(n);
        for (a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    pub fn add_node(&mut self, v: usize) {
        self.adj.entry(v).or_default();
    }

    /// Adds `{a, b}`, creating missing endpoints. Self-loops are ignored.
    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a == b {
            self.add_node(a);
            return;
        }
        self.adj.entry(a).or_default().insert(b);
        self.adj.entry(b).or_default().insert(a);
    }

    pub fn remove_node(&mut self, v: usize) {
        if let Some(nbrs) = self.adj.remove(&v) {
            for u in nbrs {
                if let Some(s) = self.adj.get_mut(&u) {
                    s.remove(&v);
                }
            }
        }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.adj.contains_key(&v)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj.get(&a).is_some_and(|s| s.contains(&b))
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.adj.keys().copied()
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adj.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj.get(&v).into_iter().flatten().copied()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj.get(&v).map_or(0, BTreeSet::len)
    }

    /// Edges as sorted pairs `(a, b)` with `a < b`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adj
            .iter()
            .flat_map(|(&a, s)| s.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect()
    }

    pub fn induced(&self, nodes: &BTreeSet<usize>) -> Graph {
        Graph {
            adj: nodes
                .iter()
                .filter(|v| self.contains(**v))
                .map(|&v| {
                    (
                        v,
                        self.adj[&v].intersection(nodes).copied().collect(),
                    )
                })
                .collect(),
        }
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<BTreeSet<usize>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for start in self.nodes() {
            if !seen.insert(start) {
                continue;
            }
            let mut comp = BTreeSet::from([start]);
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for u in self.neighbors(v) {
                    if seen.insert(u) {
                        comp.insert(u);
                        queue.push_back(u);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    pub fn is_connected_set(&self, c: &BTreeSet<usize>) -> bool {
        c.is_empty() || self.induced(c).components().len() == 1
    }

    /// `{u ∉ C : u adjacent to some node of C}`.
    pub fn neighborhood(&self, c: &BTreeSet<usize>) -> BTreeSet<usize> {
        c.iter()
            .flat_map(|&v| self.neighbors(v))
            .filter(|u| !c.contains(u))
            .collect()
    }
}

impl Serialize for Graph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GraphDoc {
            nodes: self.nodes().collect(),
            edges: self.edges(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Graph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = GraphDoc::deserialize(d)?;
        let mut g = Graph::from_nodes(doc.nodes);
        for (a, b) in doc.edges {
            g.add_edge(a, b);
        }
        Ok(g)
    }
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    nodes: Vec<usize>,
    edges: Vec<(usize, usize)>,
}

/// Hypergraph whose edges are sorted node lists of length at least two.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypergraph {
    nodes: BTreeSet<usize>,
    edges: BTreeSet<Vec<usize>>,
}

impl Hypergraph {
    pub fn from_nodes<I: IntoIterator<Item = usize>>(nodes: I) -> Self {
        Hypergraph {
            nodes: nodes.into_iter().collect(),
            edges: BTreeSet::new(),
        }
    }

    /// Builds a hypergraph, adding edge members as nodes. Edges with fewer
    /// than two distinct members are dropped.
    pub fn from_edges<N, E, I>(nodes: N, edges: E) -> Self
    where
        N: IntoIterator<Item = usize>,
        E: IntoIterator<Item = I>,
        I: IntoIterator<Item = usize>,
    {
        let mut h = Self::from_nodes(nodes);
        for e in edges {
            h.add_edge(e);
        }
        h
    }

    pub fn add_edge<I: IntoIterator<Item = usize>>(&mut self, e: I) {
        let e: BTreeSet<usize> = e.into_iter().collect();
        if e.len() < 2 {
            return;
        }
        self.nodes.extend(e.iter().copied());
        self.edges.insert(e.into_iter().collect());
    }

    pub fn nodes(&self) -> &BTreeSet<usize> {
        &self.nodes
    }

    /// Edges in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.edges.iter()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_edge(&self, e: &[usize]) -> bool {
        self.edges.contains(e)
    }
}

/// Interaction graph of a polynomial of degree at most two.
pub fn interaction_graph(p: &Polynomial) -> Result<Graph> {
    let d = p.degree();
    if d > 2 {
        return Err(Error::DegreeTooHigh { max: 2, got: d });
    }
    let mut g = Graph::with_nodes(p.nvars());
    for (m, _) in p.terms() {
        if let [(i, 1), (j, 1)] = m.exps() {
            g.add_edge(*i, *j);
        }
    }
    Ok(g)
}

/// One edge per distinct support of size at least two; nodes are all
/// variables.
pub fn interaction_hypergraph(p: &Polynomial) -> Hypergraph {
    let mut h = Hypergraph::from_nodes(0..p.nvars());
    for (m, _) in p.terms() {
        if m.support_len() >= 2 {
            h.add_edge(m.support());
        }
    }
    h
}

/// Primal graph: every hyperedge becomes a clique.
pub fn intersection_graph(h: &Hypergraph) -> Graph {
    let mut g = Graph::from_nodes(h.nodes.iter().copied());
    for e in &h.edges {
        for (k, &a) in e.iter().enumerate() {
            for &b in &e[k + 1..] {
                g.add_edge(a, b);
            }
        }
    }
    g
}

/// Bipartite node–edge incidence graph.
///
/// Hypergraph nodes keep their ids. Edge `k` (in lexicographic edge order) is
/// represented by node `edge_offset + k` where `edge_offset` is one more than
/// the largest hypergraph node id.
#[derive(Clone, Debug)]
pub struct IncidenceGraph {
    pub graph: Graph,
    pub edge_offset: usize,
    pub edges: Vec<Vec<usize>>,
}

impl IncidenceGraph {
    pub fn edge_node(&self, k: usize) -> usize {
        self.edge_offset + k
    }

    pub fn is_edge_node(&self, v: usize) -> bool {
        v >= self.edge_offset
    }
}

pub fn incidence_graph(h: &Hypergraph) -> IncidenceGraph {
    let edge_offset = h.nodes.iter().next_back().map_or(0, |&v| v + 1);
    let edges: Vec<Vec<usize>> = h.edges.iter().cloned().collect();
    let mut g = Graph::from_nodes(h.nodes.iter().copied());
    for (k, e) in edges.iter().enumerate() {
        g.add_node(edge_offset + k);
        for &v in e {
            g.add_edge(v, edge_offset + k);
        }
    }
    IncidenceGraph {
        graph: g,
        edge_offset,
        edges,
    }
}

/// `(C, {e ∩ C : e ∈ E, |e ∩ C| ≥ 2})`.
pub fn induced_subhypergraph(h: &Hypergraph, c: &BTreeSet<usize>) -> Hypergraph {
    let mut out = Hypergraph::from_nodes(c.iter().copied());
    for e in &h.edges {
        out.add_edge(e.iter().copied().filter(|v| c.contains(v)));
    }
    out
}

/// Maximal node sets linked by chains of intersecting edges, each sorted,
/// ordered by smallest member.
pub fn connected_components(h: &Hypergraph) -> Vec<BTreeSet<usize>> {
    let idx: BTreeMap<usize, usize> = h.nodes.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let nodes: Vec<usize> = h.nodes.iter().copied().collect();
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in &h.edges {
        let r0 = find(&mut parent, idx[&e[0]]);
        for v in &e[1..] {
            let r = find(&mut parent, idx[v]);
            if r != r0 {
                // keep the smaller root so components stay ordered
                let (lo, hi) = if r < r0 { (r, r0) } else { (r0, r) };
                parent[hi] = lo;
            }
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for k in 0..nodes.len() {
        let r = find(&mut parent, k);
        groups.entry(r).or_default().insert(nodes[k]);
    }
    let mut out: Vec<_> = groups.into_values().collect();
    out.sort_by_key(|c| *c.iter().next().unwrap());
    out
}

/// `{u ∉ C : ∃ e ∈ E with u ∈ e and e ∩ C ≠ ∅}`.
pub fn neighborhood(h: &Hypergraph, c: &BTreeSet<usize>) -> BTreeSet<usize> {
    h.edges
        .iter()
        .filter(|e| e.iter().any(|v| c.contains(v)))
        .flat_map(|e| e.iter().copied())
        .filter(|v| !c.contains(v))
        .collect()
}

fn is_connected_in(h: &Hypergraph, c: &BTreeSet<usize>) -> bool {
    c.is_empty() || connected_components(&induced_subhypergraph(h, c)).len() == 1
}

/// Removes the connected node set `c` and makes its neighborhood a clique.
pub fn eliminate_component_graph(g: &Graph, c: &BTreeSet<usize>) -> Result<Graph> {
    if let Some(&v) = c.iter().find(|v| !g.contains(**v)) {
        return Err(Error::UnknownNode(v));
    }
    if !g.is_connected_set(c) {
        return Err(Error::NotConnected(c.iter().copied().collect()));
    }
    let nbr: Vec<usize> = g.neighborhood(c).into_iter().collect();
    let mut out = g.clone();
    for &v in c {
        out.remove_node(v);
    }
    for (k, &a) in nbr.iter().enumerate() {
        for &b in &nbr[k + 1..] {
            out.add_edge(a, b);
        }
    }
    Ok(out)
}

/// Removes the connected node set `c` (`e ↦ e ∖ C`, dropping edges that fall
/// below two nodes) and adds every subset of `N(C)` of size at least two as an
/// edge.
pub fn eliminate_component_hypergraph(h: &Hypergraph, c: &BTreeSet<usize>) -> Result<Hypergraph> {
    eliminate_component_hypergraph_capped(h, c, DEFAULT_COMPLETE_HYPERGRAPH_CAP)
}

pub fn eliminate_component_hypergraph_capped(
    h: &Hypergraph,
    c: &BTreeSet<usize>,
    cap: usize,
) -> Result<Hypergraph> {
    if let Some(&v) = c.iter().find(|v| !h.nodes.contains(v)) {
        return Err(Error::UnknownNode(v));
    }
    if !is_connected_in(h, c) {
        return Err(Error::NotConnected(c.iter().copied().collect()));
    }
    let nbr: Vec<usize> = neighborhood(h, c).into_iter().collect();
    if nbr.len() > cap {
        return Err(Error::CapExceeded {
            what: "neighborhood size for complete hypergraph",
            actual: nbr.len(),
            cap,
        });
    }
    let mut out = Hypergraph::from_nodes(h.nodes.iter().copied().filter(|v| !c.contains(v)));
    for e in &h.edges {
        out.add_edge(e.iter().copied().filter(|v| !c.contains(v)));
    }
    for mask in 0u64..(1u64 << nbr.len()) {
        if mask.count_ones() >= 2 {
            out.add_edge((0..nbr.len()).filter(|j| mask >> j & 1 == 1).map(|j| nbr[j]));
        }
    }
    Ok(out)
}

/// Partition into hidden-binary and continuous variables together with the
/// connected components of the continuous part and their neighborhoods.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub vminus: BTreeSet<usize>,
    pub vplus: BTreeSet<usize>,
    pub components: Vec<BTreeSet<usize>>,
    pub neighborhoods: Vec<BTreeSet<usize>>,
    pub dmax: usize,
}

impl ComponentReport {
    /// Components of the subhypergraph induced by `vplus` and their
    /// neighborhoods in `h`.
    pub fn build(h: &Hypergraph, vplus: &BTreeSet<usize>) -> Self {
        let vminus = h.nodes.difference(vplus).copied().collect();
        let components = connected_components(&induced_subhypergraph(h, vplus));
        let neighborhoods: Vec<_> = components.iter().map(|c| neighborhood(h, c)).collect();
        let dmax = neighborhoods.iter().map(BTreeSet::len).max().unwrap_or(0);
        ComponentReport {
            vminus,
            vplus: vplus.clone(),
            components,
            neighborhoods,
            dmax,
        }
    }

    pub fn block_size_max(&self) -> usize {
        self.components.iter().map(BTreeSet::len).max().unwrap_or(0)
    }
}
