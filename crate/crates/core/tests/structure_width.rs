mod common;

use std::collections::BTreeSet;

use boxpoly::rng::SplitMix64;
use boxpoly::structure::{
    connected_components, eliminate_component_graph, eliminate_component_hypergraph, incidence_graph,
    induced_subhypergraph, interaction_graph, interaction_hypergraph, intersection_graph, neighborhood, Graph,
    Hypergraph,
};
use boxpoly::treewidth::{
    check_width_at_most, decomposition_from_order, exact_treewidth, heuristic_decomposition, lower_bound, validate,
    WidthVerdict,
};
use common::*;

#[test]
fn exact_treewidth_matches_subset_recurrence() {
    let mut rng = SplitMix64::new(17);
    for _ in 0..150 {
        let n = rng.range(1, 11) as usize;
        let den = rng.range(2, 6) as u64;
        let g = random_graph(&mut rng, n, 1, den);
        let (w, td) = exact_treewidth(&g, 14).unwrap();
        assert_eq!(w, graph_treewidth(&g));
        assert_eq!(td.width(), w);
        validate(&td, &g).unwrap();
    }
}

#[test]
fn heuristic_and_lower_bound_sandwich() {
    let mut rng = SplitMix64::new(23);
    for _ in 0..150 {
        let n = rng.range(1, 12) as usize;
        let g = random_graph(&mut rng, n, 1, 3);
        let exact = graph_treewidth(&g);
        let td = heuristic_decomposition(&g);
        validate(&td, &g).unwrap();
        assert!(lower_bound(&g) <= exact);
        assert!(td.width() >= exact);
    }
}

#[test]
fn width_verdicts_are_consistent_with_the_oracle() {
    let mut rng = SplitMix64::new(29);
    for _ in 0..100 {
        let n = rng.range(2, 12) as usize;
        let g = random_graph(&mut rng, n, 1, 2);
        let exact = graph_treewidth(&g);
        let k = rng.range(0, 6) as usize;
        match check_width_at_most(&g, k) {
            WidthVerdict::Yes { width, decomposition } => {
                assert!(width <= k && exact <= k);
                validate(&decomposition, &g).unwrap();
            }
            WidthVerdict::No { lower_bound } => assert!(exact >= lower_bound && lower_bound > k),
            WidthVerdict::Unknown { lower_bound, upper_bound } => {
                assert!(lower_bound <= exact && exact <= upper_bound)
            }
        }
    }
}

#[test]
fn partial_ktrees_have_width_at_most_k() {
    let mut rng = SplitMix64::new(31);
    for _ in 0..60 {
        let k = rng.range(1, 4) as usize;
        let n = rng.range(k as i64 + 1, 13) as usize;
        let (g, _, _) = random_partial_ktree(&mut rng, n, k, 3, 4);
        assert!(graph_treewidth(&g) <= k);
        // reverse insertion order is a perfect elimination order of the k-tree
        let order: Vec<usize> = (0..n).rev().collect();
        let td = decomposition_from_order(&g, &order);
        validate(&td, &g).unwrap();
        assert!(td.width() <= k);
    }
}

#[test]
fn elimination_with_clique_neighborhood_keeps_width() {
    // when N(C) is already a clique, elimination only deletes nodes
    let mut rng = SplitMix64::new(37);
    let mut checked = 0;
    for _ in 0..300 {
        let n = rng.range(3, 11) as usize;
        let g = random_graph(&mut rng, n, 1, 2);
        let s: BTreeSet<usize> = (0..n).filter(|_| rng.chance(1, 3)).collect();
        for c in g.induced(&s).components() {
            let nb: Vec<usize> = g.neighborhood(&c).into_iter().collect();
            let is_clique = nb.iter().all(|&a| nb.iter().all(|&b| a == b || g.has_edge(a, b)));
            if is_clique {
                let gp = eliminate_component_graph(&g, &c).unwrap();
                assert!(graph_treewidth(&gp) <= graph_treewidth(&g));
                checked += 1;
            }
        }
    }
    assert!(checked > 50);
}

#[test]
fn eliminating_a_vertex_of_k23_raises_width() {
    // K_{2,3} has treewidth 2; removing a vertex of the 2-side and completing
    // its three neighbors leaves K_4, so the width can exceed both tw(G) and
    // |N(C)| - 1.
    let g = Graph::from_edges(5, [(0, 1), (0, 3), (1, 2), (1, 4), (2, 3), (3, 4)]);
    let c = BTreeSet::from([1]);
    assert_eq!(g.neighborhood(&c).len(), 3);
    let gp = eliminate_component_graph(&g, &c).unwrap();
    assert_eq!(graph_treewidth(&g), 2);
    assert_eq!(graph_treewidth(&gp), 3);
    assert_eq!(gp.num_edges(), 6);
}

#[test]
fn elimination_requires_connected_set() {
    let g = Graph::from_edges(4, [(0, 1), (2, 3)]);
    assert!(eliminate_component_graph(&g, &BTreeSet::from([0, 2])).is_err());
    let h = Hypergraph::from_edges(0..4, [vec![0, 1], vec![2, 3]]);
    assert!(eliminate_component_hypergraph(&h, &BTreeSet::from([1, 3])).is_err());
}

#[test]
fn hypergraph_elimination_bound_and_neighborhoods() {
    let mut rng = SplitMix64::new(41);
    for _ in 0..60 {
        let n = rng.range(3, 7) as usize;
        let edges = rng.range(1, 7) as usize;
        let h = random_hypergraph(&mut rng, n, edges);
        let s: BTreeSet<usize> = (0..n).filter(|_| rng.chance(1, 2)).collect();
        let comps = connected_components(&induced_subhypergraph(&h, &s));
        let dmax = comps.iter().map(|c| neighborhood(&h, c).len()).max().unwrap_or(0);
        let mut hp = h.clone();
        for c in &comps {
            assert_eq!(neighborhood(&hp, c), neighborhood(&h, c));
            hp = eliminate_component_hypergraph(&hp, c).unwrap();
            assert!(c.iter().all(|v| !hp.nodes().contains(v)));
        }
        // adding N(C) to every bag of a decomposition of I(G) and hanging one
        // leaf bag per new edge always works
        if hp.nodes().len() + hp.num_edges() <= 20 {
            assert!(incidence_treewidth(&hp) <= incidence_treewidth(&h) + dmax);
        }
    }
}

#[test]
fn hypergraph_elimination_can_exceed_neighborhood_size() {
    // removing node 3 completes {1, 2, 4}; the incidence width goes from 3 to
    // 4 although |N(C)| = 3
    let h = Hypergraph::from_edges(0..6, [vec![0, 1, 2, 5], vec![1, 2, 3, 4], vec![1, 2, 4, 5], vec![4, 5]]);
    let c = BTreeSet::from([3]);
    assert_eq!(neighborhood(&h, &c), BTreeSet::from([1, 2, 4]));
    let hp = eliminate_component_hypergraph(&h, &c).unwrap();
    assert_eq!(incidence_treewidth(&h), 3);
    assert_eq!(incidence_treewidth(&hp), 4);
    let lib = |h: &Hypergraph| exact_treewidth(&incidence_graph(h).graph, 20).unwrap().0;
    assert_eq!((lib(&h), lib(&hp)), (3, 4));
}

#[test]
fn interaction_structures_of_a_cubic() {
    // x0 x1 x2 + x2 x3^2 + x4
    let p = poly(5, &[(&[(0, 1), (1, 1), (2, 1)], 1), (&[(2, 1), (3, 2)], 1), (&[(4, 1)], 1)]);
    let h = interaction_hypergraph(&p);
    // the single-variable term x4 is not an edge
    assert_eq!(h.num_edges(), 2);
    let primal = intersection_graph(&h);
    assert!(primal.has_edge(0, 1) && primal.has_edge(1, 2) && primal.has_edge(0, 2) && primal.has_edge(2, 3));
    assert_eq!(primal.num_edges(), 4);
    let ig = incidence_graph(&h);
    // bipartite: every edge joins a variable node and an edge node
    for (a, b) in ig.graph.edges() {
        assert_ne!(ig.is_edge_node(a), ig.is_edge_node(b));
    }
    assert_eq!(ig.graph.num_edges(), 3 + 2);
    // the interaction graph only exists for quadratics
    assert!(interaction_graph(&p).is_err());
}

#[test]
fn incidence_width_of_random_hypergraphs_is_at_most_primal_plus_one() {
    let mut rng = SplitMix64::new(43);
    for _ in 0..80 {
        let n = rng.range(2, 7) as usize;
        let edges = rng.range(1, 6) as usize;
        let h = random_hypergraph(&mut rng, n, edges);
        let primal = graph_treewidth(&intersection_graph(&h));
        assert!(incidence_treewidth(&h) <= primal + 1);
    }
}

#[test]
fn component_elimination_order_does_not_matter() {
    let mut rng = SplitMix64::new(47);
    for _ in 0..60 {
        let n = rng.range(3, 9) as usize;
        let edges = rng.range(1, 9) as usize;
        let h = random_hypergraph(&mut rng, n, edges);
        let s: BTreeSet<usize> = (0..n).filter(|_| rng.chance(1, 2)).collect();
        let comps = connected_components(&induced_subhypergraph(&h, &s));
        let forward = comps
            .iter()
            .fold(h.clone(), |acc, c| eliminate_component_hypergraph(&acc, c).unwrap());
        let backward = comps
            .iter()
            .rev()
            .fold(h.clone(), |acc, c| eliminate_component_hypergraph(&acc, c).unwrap());
        assert_eq!(forward, backward);
    }
}

#[test]
fn quadratic_interaction_graph_is_the_primal_graph() {
    let mut rng = SplitMix64::new(53);
    for _ in 0..50 {
        let n = rng.range(1, 9) as usize;
        let p = random_quadratic(&mut rng, n, 1, 3);
        assert_eq!(interaction_graph(&p).unwrap(), intersection_graph(&interaction_hypergraph(&p)));
    }
}
