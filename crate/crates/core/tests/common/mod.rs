//! Reference implementations and random instance builders shared by the
//! integration tests. The oracles here deliberately avoid the library's own
//! algorithms.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use boxpoly::poly::{int, Monomial, Polynomial, Rational};
use boxpoly::rng::SplitMix64;
use boxpoly::structure::{Graph, Hypergraph};

pub fn poly(n: usize, terms: &[(&[(usize, u32)], i64)]) -> Polynomial {
    Polynomial::from_terms(
        n,
        terms
            .iter()
            .map(|(m, c)| (Monomial::from_pairs(m.iter().copied()), int(*c))),
    )
    .unwrap()
}

/// The cubic `x0 (1 - x0)(x0 + x1)` expanded.
pub fn remark_cubic() -> Polynomial {
    poly(
        2,
        &[
            (&[(0, 3)], -1),
            (&[(0, 2)], 1),
            (&[(0, 2), (1, 1)], -1),
            (&[(0, 1), (1, 1)], 1),
        ],
    )
}

fn nonzero(rng: &mut SplitMix64, r: i64) -> i64 {
    let c = rng.range(1, r);
    if rng.chance(1, 2) {
        -c
    } else {
        c
    }
}

/// Quadratic with diagonal coefficients of both signs, linear terms and each
/// bilinear term present with probability `num/den`.
pub fn random_quadratic(rng: &mut SplitMix64, n: usize, num: u64, den: u64) -> Polynomial {
    let mut terms = Vec::new();
    for i in 0..n {
        terms.push((Monomial::pow(i, 2), int(rng.range(-5, 5))));
        terms.push((Monomial::var(i), int(rng.range(-5, 5))));
        for j in i + 1..n {
            if rng.chance(num, den) {
                terms.push((Monomial::from_pairs([(i, 1), (j, 1)]), int(nonzero(rng, 5))));
            }
        }
    }
    terms.push((Monomial::one(), int(rng.range(-3, 3))));
    Polynomial::from_terms(n, terms).unwrap()
}

/// Random polynomial of degree at most `d` with `terms` monomials on `n`
/// variables and integer coefficients in `[-r, r]`.
pub fn random_poly(rng: &mut SplitMix64, n: usize, d: u32, terms: usize, r: i64) -> Polynomial {
    let mut out = Vec::new();
    for _ in 0..terms {
        let deg = rng.range(0, d as i64) as u32;
        let mut pairs = Vec::new();
        for _ in 0..deg {
            pairs.push((rng.below(n as u64) as usize, 1));
        }
        out.push((Monomial::from_pairs(pairs), int(rng.range(-r, r))));
    }
    Polynomial::from_terms(n, out).unwrap()
}

pub fn random_rational(rng: &mut SplitMix64) -> Rational {
    Rational::new(rng.range(-20, 20).into(), rng.range(1, 7).into())
}

pub fn random_graph(rng: &mut SplitMix64, n: usize, num: u64, den: u64) -> Graph {
    let mut g = Graph::with_nodes(n);
    for a in 0..n {
        for b in a + 1..n {
            if rng.chance(num, den) {
                g.add_edge(a, b);
            }
        }
    }
    g
}

pub fn random_hypergraph(rng: &mut SplitMix64, n: usize, edges: usize) -> Hypergraph {
    let mut h = Hypergraph::from_nodes(0..n);
    for _ in 0..edges {
        let size = rng.range(2, 4.min(n as i64)) as usize;
        let nodes: Vec<usize> = (0..n).collect();
        h.add_edge(rng.sample(&nodes, size));
    }
    h
}

/// Bitmask adjacency over the nodes of `g` (at most 32), with the node list.
pub fn bit_adjacency(g: &Graph) -> (Vec<usize>, Vec<u32>) {
    let nodes: Vec<usize> = g.nodes().collect();
    assert!(nodes.len() <= 32);
    let idx: BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let adj = nodes
        .iter()
        .map(|&v| g.neighbors(v).fold(0u32, |m, u| m | 1 << idx[&u]))
        .collect();
    (nodes, adj)
}

/// Exact treewidth by the subset recurrence
/// `TW(S) = min_{v∈S} max(TW(S∖v), |Q(S∖v, v)|)`, where `Q(S, v)` are the
/// nodes outside `S ∪ {v}` reachable from `v` through `S`.
pub fn treewidth_dp(adj: &[u32]) -> usize {
    let n = adj.len();
    if n == 0 {
        return 0;
    }
    assert!(n <= 24);
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let q = |s: u32, v: usize| -> u32 {
        let mut seen = 1u32 << v;
        let mut frontier = 1u32 << v;
        let mut out = 0u32;
        while frontier != 0 {
            let u = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let nb = adj[u] & !seen;
            seen |= nb;
            out |= nb & !s;
            frontier |= nb & s;
        }
        (out & !(1u32 << v)).count_ones()
    };
    let mut tw = vec![u8::MAX; 1usize << n];
    tw[0] = 0;
    for s in 1..=full {
        let mut best = u8::MAX;
        let mut rest = s;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let prev = s & !(1 << v);
            let w = tw[prev as usize].max(q(prev, v) as u8);
            best = best.min(w);
        }
        tw[s as usize] = best;
    }
    tw[full as usize] as usize
}

pub fn graph_treewidth(g: &Graph) -> usize {
    treewidth_dp(&bit_adjacency(g).1)
}

/// Incidence graph as bitmask adjacency: hypergraph nodes first, then one
/// node per edge.
pub fn incidence_bits(h: &Hypergraph) -> (Vec<u32>, usize) {
    let nodes: Vec<usize> = h.nodes().iter().copied().collect();
    let idx: BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let edges: Vec<&Vec<usize>> = h.edges().collect();
    let total = nodes.len() + edges.len();
    assert!(total <= 24, "incidence graph too large for the subset recurrence");
    let mut adj = vec![0u32; total];
    for (k, e) in edges.iter().enumerate() {
        let en = nodes.len() + k;
        for v in e.iter() {
            adj[idx[v]] |= 1 << en;
            adj[en] |= 1 << idx[v];
        }
    }
    (adj, nodes.len())
}

pub fn incidence_treewidth(h: &Hypergraph) -> usize {
    treewidth_dp(&incidence_bits(h).0)
}

/// Upper bound on the incidence treewidth: first eliminate every edge node
/// with at most `small` members (each costs its size, as its neighbors are
/// exactly its members), then solve the rest exactly.
pub fn incidence_treewidth_upper(h: &Hypergraph, small: usize) -> usize {
    let nodes: Vec<usize> = h.nodes().iter().copied().collect();
    let idx: BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let mut var_adj: Vec<u32> = vec![0; nodes.len()];
    let mut cost = 0;
    let mut large: Vec<Vec<usize>> = Vec::new();
    for e in h.edges() {
        let members: Vec<usize> = e.iter().map(|v| idx[v]).collect();
        if e.len() <= small {
            cost = cost.max(e.len());
            let mask = members.iter().fold(0u32, |m, &i| m | 1 << i);
            for &i in &members {
                var_adj[i] |= mask & !(1 << i);
            }
        } else {
            large.push(members);
        }
    }
    let total = nodes.len() + large.len();
    let mut adj = vec![0u32; total];
    adj[..nodes.len()].copy_from_slice(&var_adj);
    for (k, members) in large.iter().enumerate() {
        let en = nodes.len() + k;
        for &i in members {
            adj[i] |= 1 << en;
            adj[en] |= 1 << i;
        }
    }
    cost.max(treewidth_dp(&adj))
}

/// `∂p/∂x_i`.
pub fn derivative(p: &Polynomial, i: usize) -> Polynomial {
    let terms = p.terms().filter(|(m, _)| m.exponent(i) > 0).map(|(m, c)| {
        let e = m.exponent(i);
        let pairs: Vec<(usize, u32)> = m
            .exps()
            .iter()
            .map(|&(v, x)| if v == i { (v, x - 1) } else { (v, x) })
            .filter(|&(_, x)| x > 0)
            .collect();
        (Monomial::from_pairs(pairs), c * int(e as i64))
    });
    Polynomial::from_terms(p.nvars(), terms.collect::<Vec<_>>()).unwrap()
}

/// Whole-box reference minimum for small instances: a uniform grid with
/// `divisions` steps per axis, then projected gradient descent from the best
/// grid points and from every vertex. Returns the value, the point and the
/// grid gap bound `L·h·√n/2` with `L = Σ |c_α| |α|`.
pub fn grid_polish_oracle(p: &Polynomial, divisions: usize, starts: usize) -> (f64, Vec<f64>, f64) {
    let n = p.nvars();
    let grads: Vec<Polynomial> = (0..n).map(|i| derivative(p, i)).collect();
    let f = |x: &[f64]| p.evaluate_f64(x).unwrap();
    let grad = |x: &[f64]| -> Vec<f64> { grads.iter().map(|g| g.evaluate_f64(x).unwrap()).collect() };
    let h = 1.0 / divisions as f64;
    let per = divisions + 1;
    let mut pts: Vec<(f64, Vec<f64>)> = Vec::new();
    for mut idx in 0..per.pow(n as u32) {
        let x: Vec<f64> = (0..n)
            .map(|_| {
                let j = idx % per;
                idx /= per;
                j as f64 * h
            })
            .collect();
        pts.push((f(&x), x));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut seeds: Vec<Vec<f64>> = pts.iter().take(starts).map(|(_, x)| x.clone()).collect();
    for mask in 0..(1usize << n) {
        seeds.push((0..n).map(|j| (mask >> j & 1) as f64).collect());
    }
    let mut best = pts[0].clone();
    for s in seeds {
        let mut x = s;
        let mut fx = f(&x);
        for _ in 0..300 {
            let g = grad(&x);
            let mut step = 1.0;
            let mut moved = false;
            while step > 1e-14 {
                let y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| (a - step * b).clamp(0.0, 1.0)).collect();
                let fy = f(&y);
                if fy < fx - 1e-16 {
                    x = y;
                    fx = fy;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if fx < best.0 {
            best = (fx, x);
        }
    }
    let lip: f64 = p
        .terms()
        .map(|(m, c)| boxpoly::poly::rational_to_f64(c).abs() * m.degree() as f64)
        .sum();
    let gap = lip * h * (n as f64).sqrt() / 2.0;
    (best.0, best.1, gap)
}

/// Random `k`-tree on `n` nodes (`n > k`) with each edge kept with
/// probability `num/den`; returns the graph and the insertion order.
pub fn random_partial_ktree(rng: &mut SplitMix64, n: usize, k: usize, num: u64, den: u64) -> (Graph, Vec<usize>, Vec<BTreeSet<usize>>) {
    let mut cliques: Vec<BTreeSet<usize>> = vec![(0..=k.min(n - 1)).collect()];
    let mut full_edges: Vec<(usize, usize)> = Vec::new();
    for a in 0..=k.min(n - 1) {
        for b in a + 1..=k.min(n - 1) {
            full_edges.push((a, b));
        }
    }
    for v in k + 1..n {
        let base: Vec<usize> = cliques[rng.below(cliques.len() as u64) as usize].iter().copied().collect();
        let drop = base[rng.below(base.len() as u64) as usize];
        let mut c: BTreeSet<usize> = base.iter().copied().filter(|&u| u != drop).collect();
        for &u in &c {
            full_edges.push((u, v));
        }
        c.insert(v);
        cliques.push(c);
    }
    let mut g = Graph::with_nodes(n);
    for (a, b) in full_edges {
        if rng.chance(num, den) {
            g.add_edge(a, b);
        }
    }
    (g, (0..n).collect(), cliques)
}
