//! Constraint graph, triangulation and join forest.

use petgraph::unionfind::UnionFind;

use super::Constraint;

/// Edge of the join forest between cliques `a < b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JoinEdge {
    pub a: usize,
    pub b: usize,
    pub separator: Vec<usize>,
}

/// Interaction graph of a constraint set together with its triangulation.
///
/// Two variables are adjacent when some constraint mentions both. The
/// elimination order is the reverse of a maximum-cardinality search (ties
/// to the lowest index), which needs no fill-in on graphs that are already
/// chordal.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintGraph {
    n: usize,
    adjacency: Vec<u32>,
    filled: Vec<u32>,
    elimination_order: Vec<usize>,
    cliques: Vec<Vec<usize>>,
    clique_masks: Vec<u32>,
    tree_edges: Vec<JoinEdge>,
    induced_width: usize,
}

pub fn build_graph(constraints: &[Constraint], n: usize) -> ConstraintGraph {
    let mut adjacency = vec![0u32; n];
    for c in constraints {
        for &a in c.attrs() {
            adjacency[a] |= c.mask() & !(1 << a);
        }
    }
    ConstraintGraph::from_adjacency(adjacency)
}

fn bits(mask: u32) -> Vec<usize> {
    (0..32).filter(|&i| mask >> i & 1 == 1).collect()
}

impl ConstraintGraph {
    /// `adjacency[v]` is the neighbour bitmask of `v`; it must be symmetric
    /// and loop-free.
    pub fn from_adjacency(adjacency: Vec<u32>) -> Self {
        let n = adjacency.len();
        let elimination_order = Self::mcs_elimination_order(&adjacency);

        let mut filled = adjacency.clone();
        let mut eliminated = 0u32;
        let mut candidates = Vec::with_capacity(n);
        let mut induced_width = 0;
        for &v in &elimination_order {
            let later = filled[v] & !eliminated;
            induced_width = induced_width.max(later.count_ones() as usize);
            for u in bits(later) {
                filled[u] |= later & !(1 << u);
            }
            candidates.push(later | 1 << v);
            eliminated |= 1 << v;
        }

        let mut clique_masks: Vec<u32> = candidates
            .iter()
            .enumerate()
            .filter(|&(i, &m)| {
                !candidates
                    .iter()
                    .enumerate()
                    .any(|(j, &o)| j != i && m & o == m && (m != o || j < i))
            })
            .map(|(_, &m)| m)
            .collect();
        clique_masks.sort_by_key(|&m| bits(m));
        let cliques: Vec<Vec<usize>> = clique_masks.iter().map(|&m| bits(m)).collect();
        let tree_edges = Self::join_forest(&clique_masks);

        ConstraintGraph {
            n,
            adjacency,
            filled,
            elimination_order,
            cliques,
            clique_masks,
            tree_edges,
            induced_width,
        }
    }

    fn mcs_elimination_order(adjacency: &[u32]) -> Vec<usize> {
        let n = adjacency.len();
        let mut weight = vec![0usize; n];
        let mut visited = 0u32;
        let mut visit = Vec::with_capacity(n);
        for _ in 0..n {
            let v = (0..n)
                .filter(|&v| visited >> v & 1 == 0)
                .max_by(|&a, &b| weight[a].cmp(&weight[b]).then(b.cmp(&a)))
                .expect("unvisited vertex left");
            visited |= 1 << v;
            visit.push(v);
            for u in bits(adjacency[v] & !visited) {
                weight[u] += 1;
            }
        }
        visit.reverse();
        visit
    }

    /// Maximum-weight spanning forest over clique intersections; cliques
    /// that share nothing stay in separate trees.
    fn join_forest(masks: &[u32]) -> Vec<JoinEdge> {
        let mut candidates = Vec::new();
        for a in 0..masks.len() {
            for b in a + 1..masks.len() {
                let w = (masks[a] & masks[b]).count_ones();
                if w > 0 {
                    candidates.push((w, a, b));
                }
            }
        }
        candidates.sort_by(|x, y| y.0.cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let mut uf = UnionFind::<usize>::new(masks.len());
        candidates
            .into_iter()
            .filter(|&(_, a, b)| uf.union(a, b))
            .map(|(_, a, b)| JoinEdge {
                a,
                b,
                separator: bits(masks[a] & masks[b]),
            })
            .collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn adjacency(&self) -> &[u32] {
        &self.adjacency
    }

    /// Adjacency after fill-in; always chordal.
    pub fn filled(&self) -> &[u32] {
        &self.filled
    }

    pub fn elimination_order(&self) -> &[usize] {
        &self.elimination_order
    }

    /// Maximal cliques of the filled graph, each ascending, sorted
    /// lexicographically.
    pub fn cliques(&self) -> &[Vec<usize>] {
        &self.cliques
    }

    pub fn clique_masks(&self) -> &[u32] {
        &self.clique_masks
    }

    pub fn tree_edges(&self) -> &[JoinEdge] {
        &self.tree_edges
    }

    /// Largest number of later neighbours met during elimination.
    pub fn induced_width(&self) -> usize {
        self.induced_width
    }

    pub fn fill_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for v in 0..self.n {
            for u in bits(self.filled[v] & !self.adjacency[v]) {
                if v < u {
                    out.push((v, u));
                }
            }
        }
        out
    }

    /// For every variable, the cliques holding it form one connected
    /// subtree of the join forest.
    pub fn satisfies_running_intersection(&self) -> bool {
        (0..self.n).all(|v| {
            let holders: Vec<usize> = (0..self.cliques.len())
                .filter(|&c| self.clique_masks[c] >> v & 1 == 1)
                .collect();
            let mut uf = UnionFind::<usize>::new(self.cliques.len());
            let mut joined = 0;
            for e in &self.tree_edges {
                let both = self.clique_masks[e.a] >> v & 1 == 1 && self.clique_masks[e.b] >> v & 1 == 1;
                if both && uf.union(e.a, e.b) {
                    joined += 1;
                }
            }
            joined + 1 == holders.len()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::EXAMPLE_PAIRS;
    use proptest::prelude::*;

    fn graph_of(n: usize, edges: &[(usize, usize)]) -> ConstraintGraph {
        let mut adj = vec![0u32; n];
        for &(a, b) in edges {
            adj[a] |= 1 << b;
            adj[b] |= 1 << a;
        }
        ConstraintGraph::from_adjacency(adj)
    }

    /// Chordal iff no vertex subset of size >= 4 induces a cycle.
    fn chordal_by_enumeration(adj: &[u32]) -> bool {
        let n = adj.len();
        for s in 0u32..1 << n {
            if s.count_ones() < 4 {
                continue;
            }
            let members = bits(s);
            if members.iter().any(|&v| (adj[v] & s).count_ones() != 2) {
                continue;
            }
            // every degree is 2: a single cycle iff connected
            let mut seen = 1u32 << members[0];
            let mut frontier = seen;
            while frontier != 0 {
                let mut next = 0;
                for v in bits(frontier) {
                    next |= adj[v] & s;
                }
                frontier = next & !seen;
                seen |= next;
            }
            if seen == s {
                return false;
            }
        }
        true
    }

    fn is_clique(adj: &[u32], mask: u32) -> bool {
        bits(mask).iter().all(|&v| adj[v] & mask == mask & !(1 << v))
    }

    #[test]
    fn six_attr_example_graph() {
        let cons: Vec<Constraint> = (0..6)
            .map(|a| Constraint::new(vec![a], 0.3).unwrap())
            .chain(EXAMPLE_PAIRS.iter().map(|p| Constraint::new(p.to_vec(), 0.1).unwrap()))
            .collect();
        let g = build_graph(&cons, 6);
        assert_eq!(g.elimination_order(), &[5, 4, 3, 2, 1, 0]);
        assert_eq!(g.fill_edges(), vec![(3, 4)]);
        assert_eq!(g.cliques(), &[vec![0], vec![1, 2], vec![2, 3, 4], vec![3, 4, 5]]);
        assert_eq!(g.induced_width(), 2);
        assert_eq!(g.tree_edges().len(), 2);
        assert!(g.satisfies_running_intersection());
        assert!(chordal_by_enumeration(g.filled()));
        assert!(!chordal_by_enumeration(g.adjacency()));
    }

    #[test]
    fn singletons_only() {
        let cons: Vec<Constraint> = (0..4).map(|a| Constraint::new(vec![a], 0.2).unwrap()).collect();
        let g = build_graph(&cons, 4);
        assert_eq!(g.induced_width(), 0);
        assert_eq!(g.cliques().len(), 4);
        assert!(g.tree_edges().is_empty());
        assert!(g.satisfies_running_intersection());
    }

    #[test]
    fn chordless_cycle_gets_one_chord() {
        let g = graph_of(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        assert_eq!(g.fill_edges().len(), 2);
        assert_eq!(g.cliques().len(), 3);
        assert!(chordal_by_enumeration(g.filled()));
    }

    proptest! {
        #[test]
        fn triangulation_is_sound(n in 1usize..9, bits_in in prop::collection::vec(any::<bool>(), 36)) {
            let mut edges = Vec::new();
            let mut i = 0;
            for a in 0..n {
                for b in a + 1..n {
                    if bits_in[i] {
                        edges.push((a, b));
                    }
                    i += 1;
                }
            }
            let g = graph_of(n, &edges);
            prop_assert!(chordal_by_enumeration(g.filled()));
            for v in 0..n {
                prop_assert_eq!(g.filled()[v] & g.adjacency()[v], g.adjacency()[v]);
            }
            if chordal_by_enumeration(g.adjacency()) {
                prop_assert!(g.fill_edges().is_empty());
            }
            for (i, &m) in g.clique_masks().iter().enumerate() {
                prop_assert!(is_clique(g.filled(), m));
                for v in 0..n {
                    if m >> v & 1 == 0 {
                        prop_assert!(!is_clique(g.filled(), m | 1 << v), "clique {} not maximal", i);
                    }
                }
            }
            let covered = g.clique_masks().iter().fold(0u32, |a, m| a | m);
            prop_assert_eq!(covered, (1u32 << n) - 1);
            prop_assert!(g.satisfies_running_intersection());
            prop_assert!(g.induced_width() + 1 == g.cliques().iter().map(Vec::len).max().unwrap());
        }
    }
}
