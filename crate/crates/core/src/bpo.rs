//! Binary polynomial optimization: minimize
//! `const + Σ_e c_e Π_{i∈e} z_i + Σ_i c_i z_i` over `z ∈ {0,1}^V`.
//!
//! [`solve_treedp`] runs a dynamic program over a tree decomposition of the
//! intersection graph; [`solve_brute`] enumerates all assignments and serves
//! as its reference.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{format_rational, parse_rational, Polynomial, Rational};
use crate::scalar::{zeta_transform, Scalar};
use crate::structure::{intersection_graph, Hypergraph};
use crate::treewidth::{validate, TreeDecomposition};

/// Node cap of [`solve_brute`].
pub const BRUTE_FORCE_CAP: usize = 22;
/// Bags larger than this are refused by the dynamic program.
pub const MAX_BAG_SIZE: usize = 30;

#[derive(Clone, Debug, PartialEq)]
pub struct BpoInstance<T> {
    /// Nodes are the variables; every costed edge must be an edge here.
    pub hypergraph: Hypergraph,
    pub edge_costs: BTreeMap<Vec<usize>, T>,
    pub node_costs: BTreeMap<usize, T>,
    pub constant: T,
}

/// Total assignment of the instance's nodes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryAssignment {
    pub bits: BTreeMap<usize, bool>,
}

impl BinaryAssignment {
    pub fn get(&self, v: usize) -> bool {
        self.bits.get(&v).copied().unwrap_or(false)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BpoSolution<T> {
    pub value: T,
    pub assignment: BinaryAssignment,
}

impl<T: Scalar> BpoInstance<T> {
    pub fn new(nodes: impl IntoIterator<Item = usize>) -> Self {
        BpoInstance {
            hypergraph: Hypergraph::from_nodes(nodes),
            edge_costs: BTreeMap::new(),
            node_costs: BTreeMap::new(),
            constant: T::zero(),
        }
    }

    /// Adds `cost` to the term on `support` (deduplicated, any size).
    pub fn add_term(&mut self, support: &[usize], cost: &T) {
        let s: BTreeSet<usize> = support.iter().copied().collect();
        let s: Vec<usize> = s.into_iter().collect();
        match s.len() {
            0 => self.constant.add_ref(cost),
            1 => {
                self.hypergraph = add_node(&self.hypergraph, s[0]);
                self.node_costs.entry(s[0]).or_insert_with(T::zero).add_ref(cost);
            }
            _ => {
                self.hypergraph.add_edge(s.iter().copied());
                self.edge_costs.entry(s).or_insert_with(T::zero).add_ref(cost);
            }
        }
    }

    pub fn nodes(&self) -> &BTreeSet<usize> {
        self.hypergraph.nodes()
    }

    /// Checks that costs reference existing nodes and edges.
    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.edge_costs.keys().find(|e| !self.hypergraph.contains_edge(e)) {
            return Err(Error::InvalidArgument(format!("cost on unknown edge {e:?}")));
        }
        if let Some(v) = self.node_costs.keys().find(|v| !self.nodes().contains(v)) {
            return Err(Error::UnknownNode(*v));
        }
        Ok(())
    }

    /// Nonconstant terms as `(support, cost)`, edges first.
    pub fn terms(&self) -> Vec<(Vec<usize>, &T)> {
        self.edge_costs
            .iter()
            .map(|(e, c)| (e.clone(), c))
            .chain(self.node_costs.iter().map(|(&v, c)| (vec![v], c)))
            .collect()
    }

    pub fn objective(&self, z: &BinaryAssignment) -> T {
        let mut v = self.constant.clone();
        for (s, c) in self.terms() {
            if s.iter().all(|&i| z.get(i)) {
                v.add_ref(c);
            }
        }
        v
    }

    pub fn map_costs<U: Scalar>(&self, f: impl Fn(&T) -> U) -> BpoInstance<U> {
        BpoInstance {
            hypergraph: self.hypergraph.clone(),
            edge_costs: self.edge_costs.iter().map(|(e, c)| (e.clone(), f(c))).collect(),
            node_costs: self.node_costs.iter().map(|(&v, c)| (v, f(c))).collect(),
            constant: f(&self.constant),
        }
    }
}

fn add_node(h: &Hypergraph, v: usize) -> Hypergraph {
    if h.nodes().contains(&v) {
        return h.clone();
    }
    Hypergraph::from_edges(
        h.nodes().iter().copied().chain([v]),
        h.edges().map(|e| e.iter().copied()),
    )
}

impl BpoInstance<Rational> {
    /// Reads a polynomial as a pseudo-Boolean function on `nodes`: exponents
    /// are dropped since `z^k = z` on `{0,1}`.
    pub fn from_polynomial(p: &Polynomial, nodes: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut inst = BpoInstance::new(nodes);
        for (m, c) in p.terms() {
            let s: Vec<usize> = m.support().collect();
            if let Some(&v) = s.iter().find(|v| !inst.nodes().contains(v)) {
                return Err(Error::UnknownNode(v));
            }
            inst.add_term(&s, c);
        }
        inst.edge_costs.retain(|_, c| !Scalar::is_zero(c));
        inst.node_costs.retain(|_, c| !Scalar::is_zero(c));
        Ok(inst)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: BpoDoc = serde_json::from_str(text)?;
        let mut inst = BpoInstance::new(doc.nodes.iter().copied());
        for e in &doc.edges {
            if e.vars.len() < 2 {
                return Err(Error::InvalidArgument(format!(
                    "edge {:?} needs at least two nodes",
                    e.vars
                )));
            }
            if let Some(&v) = e.vars.iter().find(|v| !doc.nodes.contains(v)) {
                return Err(Error::UnknownNode(v));
            }
            inst.add_term(&e.vars, &parse_rational(&e.cost)?);
        }
        for nc in &doc.node_costs {
            if !doc.nodes.contains(&nc.var) {
                return Err(Error::UnknownNode(nc.var));
            }
            inst.add_term(&[nc.var], &parse_rational(&nc.cost)?);
        }
        if let Some(c) = &doc.constant {
            inst.constant = parse_rational(c)?;
        }
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        let doc = BpoDoc {
            nodes: self.nodes().iter().copied().collect(),
            edges: self
                .edge_costs
                .iter()
                .map(|(e, c)| EdgeDoc {
                    vars: e.clone(),
                    cost: format_rational(c),
                })
                .collect(),
            node_costs: self
                .node_costs
                .iter()
                .map(|(&v, c)| NodeCostDoc {
                    var: v,
                    cost: format_rational(c),
                })
                .collect(),
            constant: Some(format_rational(&self.constant)),
        };
        serde_json::to_string(&doc).expect("serializable")
    }
}

/// JSON document for standalone BPO instances.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BpoDoc {
    nodes: BTreeSet<usize>,
    #[serde(default)]
    edges: Vec<EdgeDoc>,
    #[serde(default)]
    node_costs: Vec<NodeCostDoc>,
    #[serde(default)]
    constant: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    vars: Vec<usize>,
    cost: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeCostDoc {
    var: usize,
    cost: String,
}

/// Is assignment `a` lexicographically smaller than `b` (first node first)?
fn lex_less(a: u64, b: u64) -> bool {
    let d = a ^ b;
    d != 0 && a & (d & d.wrapping_neg()) == 0
}

/// Exhaustive minimum; among ties the lexicographically smallest assignment
/// in increasing node order.
pub fn solve_brute<T: Scalar>(inst: &BpoInstance<T>) -> Result<BpoSolution<T>> {
    inst.validate()?;
    let nodes: Vec<usize> = inst.nodes().iter().copied().collect();
    let n = nodes.len();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::CapExceeded {
            what: "nodes for brute force",
            actual: n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let idx: BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let terms = inst.terms();
    let mut by_node: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut missing: Vec<usize> = Vec::with_capacity(terms.len());
    for (t, (s, _)) in terms.iter().enumerate() {
        for v in s {
            by_node[idx[v]].push(t);
        }
        missing.push(s.len());
    }
    // Gray-code walk keeps, per term, the number of its variables at zero.
    let mut value = inst.constant.clone();
    let mut best = value.clone();
    let mut best_mask = 0u64;
    let mut mask = 0u64;
    for step in 1u64..(1u64 << n) {
        let bit = step.trailing_zeros() as usize;
        mask ^= 1 << bit;
        let on = mask >> bit & 1 == 1;
        for &t in &by_node[bit] {
            if on {
                missing[t] -= 1;
                if missing[t] == 0 {
                    value.add_ref(terms[t].1);
                }
            } else {
                if missing[t] == 0 {
                    value.sub_ref(terms[t].1);
                }
                missing[t] += 1;
            }
        }
        if value.better_than(&best) || (!best.better_than(&value) && lex_less(mask, best_mask)) {
            best = value.clone();
            best_mask = mask;
        }
    }
    let assignment = BinaryAssignment {
        bits: nodes
            .iter()
            .enumerate()
            .map(|(k, &v)| (v, best_mask >> k & 1 == 1))
            .collect(),
    };
    // recompute to shed any accumulated float drift
    let value = inst.objective(&assignment);
    Ok(BpoSolution { value, assignment })
}

/// Index of the bag each term is charged to: the smallest bag index whose
/// bag contains the term's support.
pub fn charge_terms<T: Scalar>(inst: &BpoInstance<T>, td: &TreeDecomposition) -> Result<Vec<usize>> {
    let bag_sets: Vec<BTreeSet<usize>> = td
        .bags
        .iter()
        .map(|b| b.iter().copied().collect())
        .collect();
    inst.terms()
        .iter()
        .map(|(s, _)| {
            bag_sets
                .iter()
                .position(|b| s.iter().all(|v| b.contains(v)))
                .ok_or_else(|| {
                    Error::InvalidDecomposition(format!("no bag contains term support {s:?}"))
                })
        })
        .collect()
}

/// Exact minimum by dynamic programming over `td`, which must be a tree
/// decomposition of the intersection graph of the instance.
///
/// Each bag holds a table over assignments of its nodes; a child passes up
/// the minimum over its nodes not shared with the parent. Among tied
/// choices the numerically smallest bag assignment wins, which sets
/// forgotten nodes to zero where possible.
pub fn solve_treedp<T: Scalar>(inst: &BpoInstance<T>, td: &TreeDecomposition) -> Result<BpoSolution<T>> {
    inst.validate()?;
    let g = intersection_graph(&inst.hypergraph);
    validate(td, &g).map_err(|v| Error::InvalidDecomposition(v.to_string()))?;
    if inst.nodes().is_empty() {
        return Ok(BpoSolution {
            value: inst.constant.clone(),
            assignment: BinaryAssignment {
                bits: BTreeMap::new(),
            },
        });
    }
    let m = td.bags.len();
    if let Some(b) = td.bags.iter().find(|b| b.len() > MAX_BAG_SIZE) {
        return Err(Error::CapExceeded {
            what: "bag size for dynamic program",
            actual: b.len(),
            cap: MAX_BAG_SIZE,
        });
    }
    let terms = inst.terms();
    let charge = charge_terms(inst, td)?;

    // root at bag 0; BFS order gives parents before children
    let adj = td.tree_adjacency();
    let mut parent = vec![usize::MAX; m];
    let mut order = Vec::with_capacity(m);
    let mut seen = vec![false; m];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(b) = queue.pop_front() {
        order.push(b);
        for &c in &adj[b] {
            if !seen[c] {
                seen[c] = true;
                parent[c] = b;
                queue.push_back(c);
            }
        }
    }

    let pos_in_bag = |b: usize, v: usize| td.bags[b].iter().position(|&u| u == v);

    // local charged costs: zeta transform of the term coefficients
    let mut tables: Vec<Vec<T>> = td
        .bags
        .iter()
        .map(|b| vec![T::zero(); 1usize << b.len()])
        .collect();
    for ((s, c), &b) in terms.iter().zip(&charge) {
        let mask = s
            .iter()
            .map(|&v| 1usize << pos_in_bag(b, v).expect("charged bag contains support"))
            .fold(0, |a, x| a | x);
        tables[b][mask].add_ref(c);
    }
    for t in tables.iter_mut() {
        zeta_transform(t);
    }

    // per child: positions of separator nodes in child and parent bags, and
    // the best child assignment for each separator assignment
    let mut sep_child: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut sep_parent: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut choice: Vec<Vec<u32>> = vec![Vec::new(); m];
    for &c in order.iter().rev() {
        let p = parent[c];
        if p == usize::MAX {
            continue;
        }
        for (k, &v) in td.bags[c].iter().enumerate() {
            if let Some(j) = pos_in_bag(p, v) {
                sep_child[c].push(k);
                sep_parent[c].push(j);
            }
        }
        let s = sep_child[c].len();
        let mut msg: Vec<Option<T>> = vec![None; 1 << s];
        let mut arg = vec![0u32; 1 << s];
        let table = std::mem::take(&mut tables[c]);
        for (mask, val) in table.iter().enumerate() {
            let sm = project(mask, &sep_child[c]);
            let better = match &msg[sm] {
                None => true,
                Some(cur) => val.better_than(cur),
            };
            if better {
                msg[sm] = Some(val.clone());
                arg[sm] = mask as u32;
            }
        }
        choice[c] = arg;
        let msg: Vec<T> = msg.into_iter().map(|x| x.expect("all separator states")).collect();
        for (mask, slot) in tables[p].iter_mut().enumerate() {
            slot.add_ref(&msg[project(mask, &sep_parent[c])]);
        }
        tables[c] = table;
    }

    let root = order[0];
    let mut best_mask = 0usize;
    for (mask, v) in tables[root].iter().enumerate() {
        if v.better_than(&tables[root][best_mask]) {
            best_mask = mask;
        }
    }
    let mut value = inst.constant.clone();
    value.add_ref(&tables[root][best_mask]);

    // traceback
    let mut chosen = vec![0usize; m];
    chosen[root] = best_mask;
    for &c in order.iter().skip(1) {
        let p = parent[c];
        // separator assignment read from the parent's choice
        let mut sm = 0usize;
        for (k, &j) in sep_parent[c].iter().enumerate() {
            sm |= (chosen[p] >> j & 1) << k;
        }
        chosen[c] = choice[c][sm] as usize;
    }
    let mut bits = BTreeMap::new();
    for (b, bag) in td.bags.iter().enumerate() {
        for (k, &v) in bag.iter().enumerate() {
            bits.entry(v).or_insert(chosen[b] >> k & 1 == 1);
        }
    }
    Ok(BpoSolution {
        value,
        assignment: BinaryAssignment { bits },
    })
}

/// Gathers the bits of `mask` at `positions` into a dense mask.
fn project(mask: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (k, &p)| acc | ((mask >> p & 1) << k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{int, rat};
    use crate::treewidth::heuristic_decomposition;

    fn solve_dp(inst: &BpoInstance<Rational>) -> BpoSolution<Rational> {
        let td = heuristic_decomposition(&intersection_graph(&inst.hypergraph));
        solve_treedp(inst, &td).unwrap()
    }

    #[test]
    fn single_edge() {
        let mut inst = BpoInstance::new([0, 1]);
        inst.add_term(&[0, 1], &int(-1));
        let b = solve_brute(&inst).unwrap();
        assert_eq!(b.value, int(-1));
        assert!(b.assignment.get(0) && b.assignment.get(1));
        assert_eq!(solve_dp(&inst), b);
    }

    #[test]
    fn nonnegative_costs_give_zero() {
        let mut inst = BpoInstance::new(0..4);
        inst.add_term(&[0, 1, 2], &int(3));
        inst.add_term(&[3], &rat(1, 2));
        let b = solve_brute(&inst).unwrap();
        assert_eq!(b.value, int(0));
        assert!(b.assignment.bits.values().all(|&x| !x));
        assert_eq!(solve_dp(&inst).value, int(0));
    }

    #[test]
    fn separable() {
        let mut inst = BpoInstance::new(0..3);
        inst.add_term(&[0], &int(-2));
        inst.add_term(&[1], &int(5));
        inst.add_term(&[2], &rat(-1, 3));
        let s = solve_dp(&inst);
        assert_eq!(s.value, int(-2) + rat(-1, 3));
        assert_eq!(inst.objective(&s.assignment), s.value);
    }

    #[test]
    fn path_of_blocks() {
        // -p_i z_i - z_i p_{i+1} with p_i = 2i, z_i = 2i + 1
        let m = 5;
        let mut inst = BpoInstance::new(0..2 * m - 1);
        for i in 0..m - 1 {
            inst.add_term(&[2 * i, 2 * i + 1], &int(-1));
            inst.add_term(&[2 * i + 1, 2 * i + 2], &int(-1));
            inst.add_term(&[2 * i + 1], &int(1));
        }
        let td = heuristic_decomposition(&intersection_graph(&inst.hypergraph));
        assert_eq!(td.width(), 1);
        let dp = solve_treedp(&inst, &td).unwrap();
        assert_eq!(dp.value, solve_brute(&inst).unwrap().value);
        assert_eq!(dp.value, int(-(m as i64 - 1)));
    }

    #[test]
    fn empty_instance_and_constant() {
        let mut inst: BpoInstance<Rational> = BpoInstance::new([]);
        inst.constant = int(7);
        assert_eq!(solve_brute(&inst).unwrap().value, int(7));
        let td = TreeDecomposition::default();
        assert_eq!(solve_treedp(&inst, &td).unwrap().value, int(7));
    }

    #[test]
    fn rejects_bad_decomposition() {
        let mut inst = BpoInstance::new(0..3);
        inst.add_term(&[0, 1, 2], &int(1));
        let td = TreeDecomposition {
            bags: vec![vec![0, 1], vec![1, 2]],
            tree_edges: vec![(0, 1)],
        };
        assert!(matches!(solve_treedp(&inst, &td), Err(Error::InvalidDecomposition(_))));
    }

    #[test]
    fn brute_cap() {
        let inst: BpoInstance<i64> = BpoInstance::new(0..23);
        assert!(matches!(solve_brute(&inst), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn lexicographic_tie_break() {
        // z0 + z1 - 2 z0 z1 is zero at 00 and 11
        let mut inst = BpoInstance::new([0, 1]);
        inst.add_term(&[0], &1i64);
        inst.add_term(&[1], &1i64);
        inst.add_term(&[0, 1], &-2i64);
        let b = solve_brute(&inst).unwrap();
        assert!(!b.assignment.get(0) && !b.assignment.get(1));
        // ties between 10 and 01: prefer first node at zero
        let mut inst = BpoInstance::new([0, 1]);
        inst.add_term(&[0], &-1i64);
        inst.add_term(&[1], &-1i64);
        inst.add_term(&[0, 1], &1i64);
        let b = solve_brute(&inst).unwrap();
        assert!(!b.assignment.get(0) && b.assignment.get(1));
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"nodes":[0,1,2],"edges":[{"vars":[0,1],"cost":"-3/2"}],"node_costs":[{"var":2,"cost":"1"}],"constant":"4"}"#;
        let inst = BpoInstance::from_json(text).unwrap();
        assert_eq!(BpoInstance::from_json(&inst.to_json()).unwrap(), inst);
        assert_eq!(solve_brute(&inst).unwrap().value, rat(5, 2));
        assert!(BpoInstance::from_json(r#"{"nodes":[0],"edges":[{"vars":[0,5],"cost":"1"}]}"#).is_err());
    }

    #[test]
    fn charging_reconstructs_objective() {
        let mut inst = BpoInstance::new(0..5);
        inst.add_term(&[0, 1, 2], &int(2));
        inst.add_term(&[2, 3], &int(-3));
        inst.add_term(&[3, 4], &int(1));
        inst.add_term(&[4], &int(-1));
        let td = heuristic_decomposition(&intersection_graph(&inst.hypergraph));
        let charge = charge_terms(&inst, &td).unwrap();
        let s = solve_treedp(&inst, &td).unwrap();
        let mut per_bag = vec![int(0); td.bags.len()];
        for ((supp, c), &b) in inst.terms().iter().zip(&charge) {
            if supp.iter().all(|&v| s.assignment.get(v)) {
                per_bag[b] += *c;
            }
        }
        assert_eq!(per_bag.iter().fold(int(0), |a, x| a + x), inst.objective(&s.assignment));
        assert_eq!(s.value, solve_brute(&inst).unwrap().value);
    }
}
