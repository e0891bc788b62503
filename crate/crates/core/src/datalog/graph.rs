use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::program::Program;
use super::term::Pred;

/// One strongly connected component of the IDB dependency graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clique {
    /// Members in order of first appearance as a rule head.
    pub preds: Vec<Pred>,
    /// True if some rule of the clique uses a clique member in its body.
    pub recursive: bool,
}

#[derive(Debug, Clone)]
pub struct PredicateGraph {
    pub nodes: Vec<Pred>,
    /// `(from, to)`: `to` has a rule whose body uses `from`.
    pub edges: BTreeSet<(usize, usize)>,
    /// Cliques ordered so that every clique comes after the cliques it uses.
    pub cliques: Vec<Clique>,
    clique_of: BTreeMap<Pred, usize>,
}

impl PredicateGraph {
    pub fn clique_of(&self, pred: &Pred) -> Option<usize> {
        self.clique_of.get(pred).copied()
    }

    pub fn node(&self, pred: &Pred) -> Option<usize> {
        self.nodes.iter().position(|p| p == pred)
    }

    pub fn depends_on(&self, head: &Pred, body: &Pred) -> bool {
        match (self.node(body), self.node(head)) {
            (Some(f), Some(t)) => self.edges.contains(&(f, t)),
            _ => false,
        }
    }
}

/// Builds the IDB dependency graph and its cliques in dependency order.
///
/// Each clique follows the cliques it uses; otherwise cliques keep the order
/// of their first rule in the source, so the result is deterministic.
pub fn build_predicate_graph(p: &Program) -> PredicateGraph {
    let mut nodes: Vec<Pred> = Vec::new();
    let mut first_rule: Vec<usize> = Vec::new();
    let mut index: BTreeMap<Pred, usize> = BTreeMap::new();
    for (i, rule) in p.rules.iter().enumerate() {
        let pred = rule.head.pred();
        if !index.contains_key(&pred) {
            index.insert(pred.clone(), nodes.len());
            nodes.push(pred);
            first_rule.push(i);
        }
    }

    let mut g: DiGraph<usize, ()> = DiGraph::new();
    let ids: Vec<NodeIndex> = (0..nodes.len()).map(|i| g.add_node(i)).collect();
    let mut edges = BTreeSet::new();
    for rule in &p.rules {
        let to = index[&rule.head.pred()];
        for lit in &rule.body {
            if let Some(&from) = index.get(&lit.pred()) {
                if edges.insert((from, to)) {
                    g.add_edge(ids[from], ids[to], ());
                }
            }
        }
    }

    let sccs: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut members: Vec<usize> = c.into_iter().map(|n| g[n]).collect();
            members.sort_by_key(|&m| first_rule[m]);
            members
        })
        .collect();
    let mut comp = vec![0; nodes.len()];
    for (c, members) in sccs.iter().enumerate() {
        for &m in members {
            comp[m] = c;
        }
    }

    // Post-order DFS over the condensation: each clique is emitted right after
    // the cliques its rules use, visited in body order.
    let mut deps: Vec<Vec<usize>> = vec![Vec::new(); sccs.len()];
    for rule in &p.rules {
        let c = comp[index[&rule.head.pred()]];
        for lit in &rule.body {
            if let Some(&from) = index.get(&lit.pred()) {
                let d = comp[from];
                if d != c && !deps[c].contains(&d) {
                    deps[c].push(d);
                }
            }
        }
    }
    let mut roots: Vec<usize> = (0..sccs.len()).collect();
    roots.sort_by_key(|&c| first_rule[sccs[c][0]]);
    let mut order = Vec::with_capacity(sccs.len());
    let mut visited = vec![false; sccs.len()];
    for root in roots {
        let mut stack = vec![(root, 0usize)];
        while let Some((c, i)) = stack.pop() {
            if i == 0 {
                if visited[c] {
                    continue;
                }
                visited[c] = true;
            }
            match deps[c].get(i) {
                Some(&d) => {
                    stack.push((c, i + 1));
                    if !visited[d] {
                        stack.push((d, 0));
                    }
                }
                None => order.push(c),
            }
        }
    }

    let mut cliques = Vec::with_capacity(sccs.len());
    let mut clique_of = BTreeMap::new();
    for c in order {
        let members = &sccs[c];
        let recursive = members
            .iter()
            .any(|&a| members.iter().any(|&b| edges.contains(&(a, b))));
        for &m in members {
            clique_of.insert(nodes[m].clone(), cliques.len());
        }
        cliques.push(Clique {
            preds: members.iter().map(|&m| nodes[m].clone()).collect(),
            recursive,
        });
    }

    PredicateGraph {
        nodes,
        edges,
        cliques,
        clique_of,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_program;

    fn names(g: &PredicateGraph) -> Vec<Vec<String>> {
        g.cliques
            .iter()
            .map(|c| c.preds.iter().map(|p| p.name.clone()).collect())
            .collect()
    }

    #[test]
    fn tc_is_one_recursive_clique() {
        let p = parse_program("tc(X,Y) :- par(X,Y).\ntc(X,Y) :- par(X,Z), tc(Z,Y).").unwrap();
        let g = build_predicate_graph(&p);
        assert_eq!(names(&g), vec![vec!["tc"]]);
        assert!(g.cliques[0].recursive);
    }

    #[test]
    fn join1_cliques_in_dependency_order() {
        let p = parse_program(
            "a(X,Y) :- b1(X,Z), b2(Z,Y).\n\
             b1(X,Y) :- c1(X,Z), c2(Z,Y).\n\
             b2(X,Y) :- c3(X,Z), c4(Z,Y).\n\
             c1(X,Y) :- d1(X,Z), d2(Z,Y).",
        )
        .unwrap();
        let g = build_predicate_graph(&p);
        assert_eq!(names(&g), vec![vec!["c1"], vec!["b1"], vec!["b2"], vec!["a"]]);
        assert!(g.cliques.iter().all(|c| !c.recursive));
    }

    #[test]
    fn mutual_recursion() {
        let p = parse_program("p(X) :- q(X).\nq(X) :- p(X).\nq(X) :- e(X).\nr(X) :- p(X).").unwrap();
        let g = build_predicate_graph(&p);
        assert_eq!(names(&g), vec![vec!["p", "q"], vec!["r"]]);
        assert!(g.cliques[0].recursive);
        assert!(!g.cliques[1].recursive);
    }
}
