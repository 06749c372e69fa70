//! Tree decompositions: validation, a min-fill heuristic, an exact
//! branch-and-bound search for small graphs and a bounded-width check.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structure::Graph;

/// Default node cap for [`exact_treewidth`].
pub const DEFAULT_EXACT_BUDGET: usize = 14;

/// Hard limit of the bitset representation used by the exact search.
const MAX_EXACT_NODES: usize = 64;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDecomposition {
    pub bags: Vec<Vec<usize>>,
    pub tree_edges: Vec<(usize, usize)>,
}

impl TreeDecomposition {
    /// Largest bag size minus one; `-1` is reported as `0` for an empty
    /// decomposition.
    pub fn width(&self) -> usize {
        self.bags.iter().map(Vec::len).max().unwrap_or(1).saturating_sub(1)
    }

    /// Places the decompositions side by side, joining the first bag of each
    /// to the first bag of the previous one.
    pub fn disjoint_union(parts: Vec<TreeDecomposition>) -> TreeDecomposition {
        let mut out = TreeDecomposition::default();
        let mut prev_root: Option<usize> = None;
        for part in parts {
            if part.bags.is_empty() {
                continue;
            }
            let off = out.bags.len();
            out.bags.extend(part.bags);
            out.tree_edges
                .extend(part.tree_edges.into_iter().map(|(a, b)| (a + off, b + off)));
            if let Some(r) = prev_root {
                out.tree_edges.push((r, off));
            }
            prev_root = Some(off);
        }
        out
    }

    /// Adjacency lists of the bag tree.
    pub fn tree_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.bags.len()];
        for &(a, b) in &self.tree_edges {
            if a < adj.len() && b < adj.len() {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        adj
    }
}

/// The first condition a decomposition fails.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NotATree(String),
    UnknownNode { bag: usize, node: usize },
    UncoveredNode(usize),
    UncoveredEdge(usize, usize),
    DisconnectedOccurrence(usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotATree(why) => write!(f, "bag tree is not a tree: {why}"),
            Violation::UnknownNode { bag, node } => {
                write!(f, "bag {bag} contains node {node} which is not in the graph")
            }
            Violation::UncoveredNode(v) => write!(f, "node {v} is in no bag"),
            Violation::UncoveredEdge(a, b) => write!(f, "edge {{{a},{b}}} is in no bag"),
            Violation::DisconnectedOccurrence(v) => {
                write!(f, "bags containing node {v} do not form a connected subtree")
            }
        }
    }
}

/// Checks node coverage, edge coverage, connectivity of occurrences and that
/// the bag graph is a tree.
pub fn validate(td: &TreeDecomposition, g: &Graph) -> std::result::Result<(), Violation> {
    let m = td.bags.len();
    if m == 0 {
        return match g.nodes().next() {
            Some(v) => Err(Violation::UncoveredNode(v)),
            None if td.tree_edges.is_empty() => Ok(()),
            None => Err(Violation::NotATree("edges without bags".into())),
        };
    }
    if td.tree_edges.len() != m - 1 {
        return Err(Violation::NotATree(format!(
            "{} bags but {} tree edges",
            m,
            td.tree_edges.len()
        )));
    }
    if let Some(&(a, b)) = td.tree_edges.iter().find(|&&(a, b)| a >= m || b >= m || a == b) {
        return Err(Violation::NotATree(format!("bad tree edge ({a},{b})")));
    }
    let adj = td.tree_adjacency();
    let mut seen = vec![false; m];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(b) = queue.pop_front() {
        for &c in &adj[b] {
            if !seen[c] {
                seen[c] = true;
                queue.push_back(c);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Violation::NotATree("bag tree is disconnected".into()));
    }

    let mut occ: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (b, bag) in td.bags.iter().enumerate() {
        for &v in bag {
            if !g.contains(v) {
                return Err(Violation::UnknownNode { bag: b, node: v });
            }
            occ.entry(v).or_default().push(b);
        }
    }
    if let Some(v) = g.nodes().find(|v| !occ.contains_key(v)) {
        return Err(Violation::UncoveredNode(v));
    }
    let bag_sets: Vec<BTreeSet<usize>> = td.bags.iter().map(|b| b.iter().copied().collect()).collect();
    for (a, b) in g.edges() {
        if !occ[&a].iter().any(|&k| bag_sets[k].contains(&b)) {
            return Err(Violation::UncoveredEdge(a, b));
        }
    }
    for (&v, bags) in &occ {
        let inside: BTreeSet<usize> = bags.iter().copied().collect();
        let start = bags[0];
        let mut reached = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(b) = queue.pop_front() {
            for &c in &adj[b] {
                if inside.contains(&c) && reached.insert(c) {
                    queue.push_back(c);
                }
            }
        }
        if reached.len() != inside.len() {
            return Err(Violation::DisconnectedOccurrence(v));
        }
    }
    Ok(())
}

/// Builds the decomposition induced by eliminating nodes in `order`.
///
/// The bag of `v` is `v` plus its neighbors at elimination time; its parent is
/// the bag of the earliest-eliminated of those neighbors. Roots of different
/// components are chained.
pub fn decomposition_from_order(g: &Graph, order: &[usize]) -> TreeDecomposition {
    let pos: HashMap<usize, usize> = order.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let mut adj: HashMap<usize, BTreeSet<usize>> =
        g.nodes().map(|v| (v, g.neighbors(v).collect())).collect();
    let mut bags = Vec::with_capacity(order.len());
    let mut parent = Vec::with_capacity(order.len());
    for &v in order {
        let nbrs = adj.remove(&v).unwrap_or_default();
        let nv: Vec<usize> = nbrs.iter().copied().collect();
        for (k, &a) in nv.iter().enumerate() {
            let sa = adj.get_mut(&a).expect("live neighbor");
            sa.remove(&v);
            sa.extend(nv[k + 1..].iter().copied());
            for &b in &nv[k + 1..] {
                adj.get_mut(&b).expect("live neighbor").insert(a);
            }
        }
        parent.push(nv.iter().map(|u| pos[u]).min());
        let mut bag = nv;
        bag.push(v);
        bag.sort_unstable();
        bags.push(bag);
    }
    let mut tree_edges = Vec::new();
    let mut prev_root: Option<usize> = None;
    for (k, p) in parent.iter().enumerate() {
        match p {
            Some(p) => tree_edges.push((k, *p)),
            None => {
                if let Some(r) = prev_root {
                    tree_edges.push((r, k));
                }
                prev_root = Some(k);
            }
        }
    }
    TreeDecomposition { bags, tree_edges }
}

/// Min-fill elimination order; ties go to smaller degree, then lower node id.
pub fn min_fill_order(g: &Graph) -> Vec<usize> {
    let mut adj: HashMap<usize, BTreeSet<usize>> =
        g.nodes().map(|v| (v, g.neighbors(v).collect())).collect();
    let fill = |adj: &HashMap<usize, BTreeSet<usize>>, v: usize| -> usize {
        let nv: Vec<usize> = adj[&v].iter().copied().collect();
        let mut missing = 0;
        for (k, a) in nv.iter().enumerate() {
            let sa = &adj[a];
            missing += nv[k + 1..].iter().filter(|b| !sa.contains(b)).count();
        }
        missing
    };
    let mut key: HashMap<usize, (usize, usize, usize)> = HashMap::new();
    let mut queue: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
    for v in g.nodes() {
        let k = (fill(&adj, v), adj[&v].len(), v);
        key.insert(v, k);
        queue.insert(k);
    }
    let mut order = Vec::with_capacity(adj.len());
    while let Some(k) = queue.pop_first() {
        let v = k.2;
        key.remove(&v);
        order.push(v);
        let nbrs = adj.remove(&v).unwrap_or_default();
        let nv: Vec<usize> = nbrs.iter().copied().collect();
        for (i, &a) in nv.iter().enumerate() {
            adj.get_mut(&a).unwrap().remove(&v);
            for &b in &nv[i + 1..] {
                adj.get_mut(&a).unwrap().insert(b);
                adj.get_mut(&b).unwrap().insert(a);
            }
        }
        let mut touched: BTreeSet<usize> = nbrs.clone();
        for a in &nbrs {
            touched.extend(adj[a].iter().copied());
        }
        for u in touched {
            let nk = (fill(&adj, u), adj[&u].len(), u);
            if let Some(old) = key.insert(u, nk) {
                queue.remove(&old);
            }
            queue.insert(nk);
        }
    }
    order
}

/// Min-fill decomposition. Exact on chordal graphs.
pub fn heuristic_decomposition(g: &Graph) -> TreeDecomposition {
    decomposition_from_order(g, &min_fill_order(g))
}

/// Minor-min-width lower bound: repeatedly contract a minimum-degree node
/// into its minimum-degree neighbor, recording the largest minimum degree.
pub fn lower_bound(g: &Graph) -> usize {
    let mut adj: HashMap<usize, BTreeSet<usize>> =
        g.nodes().map(|v| (v, g.neighbors(v).collect())).collect();
    let mut by_deg: BTreeSet<(usize, usize)> = adj.iter().map(|(&v, s)| (s.len(), v)).collect();
    let mut lb = 0;
    while let Some((d, v)) = by_deg.pop_first() {
        lb = lb.max(d);
        let nbrs = adj.remove(&v).unwrap();
        let target = nbrs.iter().copied().min_by_key(|u| (adj[u].len(), *u));
        let mut changed: BTreeSet<usize> = nbrs.clone();
        for &u in &nbrs {
            by_deg.remove(&(adj[&u].len(), u));
        }
        if let Some(t) = target {
            let mut gained = Vec::new();
            for &u in &nbrs {
                adj.get_mut(&u).unwrap().remove(&v);
                if u != t && !adj[&t].contains(&u) {
                    gained.push(u);
                }
            }
            for u in gained {
                adj.get_mut(&t).unwrap().insert(u);
                adj.get_mut(&u).unwrap().insert(t);
            }
            changed.insert(t);
        }
        for u in changed {
            by_deg.insert((adj[&u].len(), u));
        }
    }
    lb
}

/// Exact treewidth by branch and bound over elimination orderings, with
/// states memoized by eliminated node set.
pub fn exact_treewidth(g: &Graph, budget: usize) -> Result<(usize, TreeDecomposition)> {
    let n = g.num_nodes();
    let cap = budget.min(MAX_EXACT_NODES);
    if n > cap {
        return Err(Error::CapExceeded {
            what: "nodes for exact treewidth",
            actual: n,
            cap,
        });
    }
    let nodes: Vec<usize> = g.nodes().collect();
    if n == 0 {
        return Ok((0, TreeDecomposition::default()));
    }
    let idx: HashMap<usize, usize> = nodes.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let mut adj = vec![0u64; n];
    for (a, b) in g.edges() {
        adj[idx[&a]] |= 1 << idx[&b];
        adj[idx[&b]] |= 1 << idx[&a];
    }

    let heuristic = min_fill_order(g);
    let hw = decomposition_from_order(g, &heuristic).width();
    let mut search = ExactSearch {
        n,
        best: hw,
        best_order: heuristic.iter().map(|v| idx[v]).collect(),
        memo: HashMap::new(),
    };
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut prefix = Vec::with_capacity(n);
    search.dfs(&adj, full, 0, &mut prefix);
    let order: Vec<usize> = search.best_order.iter().map(|&k| nodes[k]).collect();
    let td = decomposition_from_order(g, &order);
    debug_assert_eq!(td.width(), search.best);
    Ok((search.best, td))
}

struct ExactSearch {
    n: usize,
    best: usize,
    best_order: Vec<usize>,
    memo: HashMap<u64, usize>,
}

fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let k = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(k)
        }
    })
}

fn eliminate_bit(adj: &[u64], v: usize) -> Vec<u64> {
    let mut next = adj.to_vec();
    let nb = adj[v];
    for u in bits(nb) {
        next[u] = (next[u] | nb) & !(1 << u) & !(1 << v);
    }
    next[v] = 0;
    next
}

/// Minor-min-width on the live subgraph.
fn mmw_bits(adj: &[u64], alive: u64) -> usize {
    let mut adj = adj.to_vec();
    let mut alive = alive;
    let mut lb = 0;
    while alive != 0 {
        let v = bits(alive)
            .min_by_key(|&v| (adj[v] & alive).count_ones())
            .unwrap();
        let nb = adj[v] & alive;
        lb = lb.max(nb.count_ones() as usize);
        alive &= !(1 << v);
        if let Some(t) = bits(nb).min_by_key(|&u| (adj[u] & alive).count_ones()) {
            let rest = nb & !(1 << t);
            adj[t] |= rest;
            for u in bits(rest) {
                adj[u] |= 1 << t;
            }
        }
    }
    lb
}

impl ExactSearch {
    fn dfs(&mut self, adj: &[u64], alive: u64, width: usize, prefix: &mut Vec<usize>) {
        let remaining = alive.count_ones() as usize;
        if remaining == 0 || remaining <= width + 1 {
            if width < self.best {
                self.best = width;
                self.best_order = prefix.iter().copied().chain(bits(alive)).collect();
            }
            return;
        }
        let full = if self.n == 64 { u64::MAX } else { (1u64 << self.n) - 1 };
        let eliminated = full & !alive;
        if let Some(&w) = self.memo.get(&eliminated) {
            if w <= width {
                return;
            }
        }
        self.memo.insert(eliminated, width);
        if width.max(mmw_bits(adj, alive)) >= self.best {
            return;
        }
        // A simplicial node can always be eliminated first.
        let simplicial = bits(alive).find(|&v| {
            let nb = adj[v] & alive;
            bits(nb).all(|u| nb & !(adj[u] | 1 << u) == 0)
        });
        let mut candidates: Vec<usize> = match simplicial {
            Some(v) => vec![v],
            None => bits(alive).collect(),
        };
        candidates.sort_by_key(|&v| (adj[v] & alive).count_ones());
        for v in candidates {
            let d = (adj[v] & alive).count_ones() as usize;
            let w = width.max(d);
            if w >= self.best {
                continue;
            }
            let next = eliminate_bit(adj, v);
            prefix.push(v);
            self.dfs(&next, alive & !(1 << v), w, prefix);
            prefix.pop();
        }
    }
}

/// Answer of [`check_width_at_most`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum WidthVerdict {
    /// A decomposition of width at most the bound.
    Yes { width: usize, decomposition: TreeDecomposition },
    /// Treewidth certainly exceeds the bound.
    No { lower_bound: usize },
    /// Neither certificate could be produced.
    Unknown { lower_bound: usize, upper_bound: usize },
}

impl WidthVerdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, WidthVerdict::Yes { .. })
    }
}

/// Decides `tw(g) ≤ k` per connected component: exactly when a component has
/// at most `exact_budget` nodes, otherwise by the min-fill upper bound and
/// the minor-min-width lower bound.
pub fn check_width_at_most(g: &Graph, k: usize) -> WidthVerdict {
    check_width_at_most_with(g, k, DEFAULT_EXACT_BUDGET)
}

pub fn check_width_at_most_with(g: &Graph, k: usize, exact_budget: usize) -> WidthVerdict {
    let mut parts = Vec::new();
    let mut width = 0;
    let mut lower = 0;
    let mut upper = 0;
    let mut undecided = false;
    for comp in g.components() {
        let sub = g.induced(&comp);
        if comp.len() <= exact_budget.min(MAX_EXACT_NODES) {
            let (w, td) = exact_treewidth(&sub, exact_budget).expect("within budget");
            if w > k {
                return WidthVerdict::No { lower_bound: w };
            }
            width = width.max(w);
            lower = lower.max(w);
            upper = upper.max(w);
            parts.push(td);
            continue;
        }
        let td = heuristic_decomposition(&sub);
        let w = td.width();
        upper = upper.max(w);
        if w <= k {
            width = width.max(w);
            lower = lower.max(lower_bound(&sub).min(w));
            parts.push(td);
            continue;
        }
        let lb = lower_bound(&sub);
        if lb > k {
            return WidthVerdict::No { lower_bound: lb };
        }
        lower = lower.max(lb);
        undecided = true;
    }
    if undecided {
        WidthVerdict::Unknown {
            lower_bound: lower,
            upper_bound: upper,
        }
    } else {
        WidthVerdict::Yes {
            width,
            decomposition: TreeDecomposition::disjoint_union(parts),
        }
    }
}
