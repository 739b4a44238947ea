//! Task-dependency and communication graphs.
//!
//! The task graph is derived from the constraint sets: a directed edge (i, j)
//! records that some atom of agent i references agent j's position, and a
//! self-edge (i, i) records an atom of i anchored at a fixed point. Maximal
//! dependency clusters are the connected components of the undirected closure
//! (self-edges ignored). The communication graph is an independent undirected
//! topology; validity requires each cluster's induced communication subgraph
//! to be connected — task neighbors need not be communication neighbors.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::constraints::AgentConstraintSet;

/// Disjoint-set forest with path compression and union by size.
struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut i: usize) -> usize {
        let mut root = i;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[i] != root {
            let next = self.parent[i];
            self.parent[i] = root;
            i = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] >= self.size[rb] {
            self.parent[rb] = ra;
            self.size[ra] += self.size[rb];
        } else {
            self.parent[ra] = rb;
            self.size[rb] += self.size[ra];
        }
    }
}

/// Directed dependency structure of the agents' constraints, self-edges
/// included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskGraph {
    agents: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl TaskGraph {
    /// Derives the graph from the constraint sets. Deterministic and
    /// order-independent: the edge set is fully determined by the atoms.
    pub fn from_constraint_sets(sets: &[AgentConstraintSet]) -> Self {
        let mut edges = BTreeSet::new();
        for set in sets {
            for atom in &set.atoms {
                match atom.referenced_agent() {
                    Some(j) => {
                        edges.insert((set.owner, j));
                    }
                    None => {
                        edges.insert((set.owner, set.owner));
                    }
                }
            }
        }
        TaskGraph { agents: sets.len(), edges }
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }

    /// Out-neighborhood of agent `i` (self included iff it has a self-edge).
    pub fn out_neighbors(&self, i: usize) -> Vec<usize> {
        self.edges.iter().filter(|(a, _)| *a == i).map(|(_, b)| *b).collect()
    }

    /// Maximal dependency clusters: connected components of the undirected
    /// closure, self-edges ignored. Clusters come out sorted by their
    /// smallest member.
    pub fn clusters(&self) -> ClusterPartition {
        let mut uf = UnionFind::new(self.agents);
        for &(a, b) in &self.edges {
            if a != b {
                uf.union(a, b);
            }
        }
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); self.agents];
        for i in 0..self.agents {
            let r = uf.find(i);
            groups[r].push(i);
        }
        let clusters: Vec<Vec<usize>> = groups.into_iter().filter(|g| !g.is_empty()).collect();
        ClusterPartition { clusters }
    }

    /// Edge list in DOT format for external visualization.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph task_dependencies {\n");
        for i in 0..self.agents {
            s.push_str(&format!("  a{i};\n"));
        }
        for &(a, b) in &self.edges {
            s.push_str(&format!("  a{a} -> a{b};\n"));
        }
        s.push_str("}\n");
        s
    }
}

/// Disjoint agent groups covering all agents; no constraint couples two
/// groups, so each can be coordinated independently.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterPartition {
    clusters: Vec<Vec<usize>>,
}

impl ClusterPartition {
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Partition with every agent in one cluster (the common validated case).
    pub fn single(agents: usize) -> Self {
        ClusterPartition { clusters: vec![(0..agents).collect()] }
    }
}

/// Errors constructing a communication graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    SelfLoop { agent: usize },
    EdgeOutOfRange { edge: (usize, usize), agents: usize },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::SelfLoop { agent } => {
                write!(f, "communication edge from agent {agent} to itself")
            }
            GraphError::EdgeOutOfRange { edge, agents } => write!(
                f,
                "communication edge ({}, {}) out of range (have {agents} agents)",
                edge.0, edge.1
            ),
        }
    }
}

impl core::error::Error for GraphError {}

/// Undirected communication topology with its Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct CommGraph {
    agents: usize,
    edges: BTreeSet<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl CommGraph {
    /// Builds the graph from unordered pairs; duplicates collapse.
    pub fn new(agents: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut normalized = BTreeSet::new();
        for &(a, b) in edges {
            if a == b {
                return Err(GraphError::SelfLoop { agent: a });
            }
            if a >= agents || b >= agents {
                return Err(GraphError::EdgeOutOfRange { edge: (a, b), agents });
            }
            normalized.insert((a.min(b), a.max(b)));
        }
        let mut neighbors = vec![Vec::new(); agents];
        for &(a, b) in &normalized {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(CommGraph { agents, edges: normalized, neighbors })
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    /// Dense Laplacian `D − A`, row-major. Entries are exact small integers,
    /// so the zero row/column sums hold exactly in f64.
    pub fn laplacian(&self) -> Vec<Vec<f64>> {
        let n = self.agents;
        let mut l = vec![vec![0.0; n]; n];
        for i in 0..n {
            l[i][i] = self.degree(i) as f64;
        }
        for &(a, b) in &self.edges {
            l[a][b] = -1.0;
            l[b][a] = -1.0;
        }
        l
    }

    /// Checks Assumption-1 connectivity: within each cluster, the induced
    /// communication subgraph must be connected.
    pub fn validate_cover(&self, partition: &ClusterPartition) -> Result<(), ConnectivityViolation> {
        let mut disconnected = Vec::new();
        for cluster in partition.groups() {
            let members: BTreeSet<usize> = cluster.iter().copied().collect();
            let mut uf = UnionFind::new(self.agents);
            for &(a, b) in &self.edges {
                if members.contains(&a) && members.contains(&b) {
                    uf.union(a, b);
                }
            }
            let mut components: Vec<Vec<usize>> = Vec::new();
            let mut roots: Vec<usize> = Vec::new();
            for &m in cluster {
                let r = uf.find(m);
                match roots.iter().position(|&q| q == r) {
                    Some(k) => components[k].push(m),
                    None => {
                        roots.push(r);
                        components.push(vec![m]);
                    }
                }
            }
            if components.len() > 1 {
                disconnected.push(DisconnectedCluster { cluster: cluster.clone(), components });
            }
        }
        if disconnected.is_empty() {
            Ok(())
        } else {
            Err(ConnectivityViolation { disconnected })
        }
    }

    /// Edge list in DOT format for external visualization.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph communication {\n");
        for i in 0..self.agents {
            s.push_str(&format!("  a{i};\n"));
        }
        for &(a, b) in &self.edges {
            s.push_str(&format!("  a{a} -- a{b};\n"));
        }
        s.push_str("}\n");
        s
    }
}

/// One cluster whose induced communication subgraph fell apart, with the
/// connected pieces it broke into.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisconnectedCluster {
    pub cluster: Vec<usize>,
    pub components: Vec<Vec<usize>>,
}

/// Assumption-1 violation report listing every disconnected cluster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityViolation {
    pub disconnected: Vec<DisconnectedCluster>,
}

impl fmt::Display for ConnectivityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, d) in self.disconnected.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "cluster {:?} has no connected communication subgraph; pieces:", d.cluster)?;
            for c in &d.components {
                write!(f, " {c:?}")?;
            }
        }
        Ok(())
    }
}

impl core::error::Error for ConnectivityViolation {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::ConstraintAtom;
    use alloc::vec;

    /// The seven-agent dependency structure used for graph-shape tests:
    /// agents 1, 2, 5, 6, 7 (1-based) own individual constraints, and the
    /// cross references are 1→2, 2→1, 3→1, 4→{1,2,3}, 5→{3,4}, 6→7.
    fn seven_agent_sets() -> Vec<AgentConstraintSet> {
        let fixed = |i: usize| ConstraintAtom::inside_point(i, vec![0.0, 0.0], 10.0);
        let coupled = |i: usize, j: usize| ConstraintAtom::inside_agent(i, j, 10.0);
        vec![
            AgentConstraintSet::new(0, vec![fixed(0), coupled(0, 1)]),
            AgentConstraintSet::new(1, vec![fixed(1), coupled(1, 0)]),
            AgentConstraintSet::new(2, vec![coupled(2, 0)]),
            AgentConstraintSet::new(3, vec![coupled(3, 0), coupled(3, 1), coupled(3, 2)]),
            AgentConstraintSet::new(4, vec![fixed(4), coupled(4, 2), coupled(4, 3)]),
            AgentConstraintSet::new(5, vec![fixed(5), coupled(5, 6)]),
            AgentConstraintSet::new(6, vec![fixed(6)]),
        ]
    }

    #[test]
    fn task_graph_edges_match_dependency_structure() {
        let g = TaskGraph::from_constraint_sets(&seven_agent_sets());
        let expected: BTreeSet<(usize, usize)> = [
            (0, 0),
            (0, 1),
            (1, 1),
            (1, 0),
            (2, 0),
            (3, 0),
            (3, 1),
            (3, 2),
            (4, 4),
            (4, 2),
            (4, 3),
            (5, 5),
            (5, 6),
            (6, 6),
        ]
        .into_iter()
        .collect();
        let got: BTreeSet<(usize, usize)> = g.edges().collect();
        assert_eq!(got, expected);
        // agent 3 (index 2) owns only coupled atoms: no self-edge
        assert!(!g.has_edge(2, 2));
    }

    #[test]
    fn single_fixed_atom_yields_self_edge() {
        let sets = vec![AgentConstraintSet::new(
            0,
            vec![ConstraintAtom::inside_point(0, vec![1.0], 1.0)],
        )];
        let g = TaskGraph::from_constraint_sets(&sets);
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(edges, vec![(0, 0)]);
    }

    #[test]
    fn mixed_atoms_yield_self_edge_and_cross_edge() {
        let sets = vec![
            AgentConstraintSet::new(
                0,
                vec![
                    ConstraintAtom::inside_point(0, vec![1.0], 1.0),
                    ConstraintAtom::inside_agent(0, 1, 2.0),
                ],
            ),
            AgentConstraintSet::new(1, vec![ConstraintAtom::inside_point(1, vec![0.0], 1.0)]),
        ];
        let g = TaskGraph::from_constraint_sets(&sets);
        assert!(g.has_edge(0, 0));
        assert!(g.has_edge(0, 1));
        assert!(!g.has_edge(1, 0));
    }

    #[test]
    fn clusters_of_the_seven_agent_example() {
        let g = TaskGraph::from_constraint_sets(&seven_agent_sets());
        let p = g.clusters();
        assert_eq!(p.groups(), &[vec![0, 1, 2, 3, 4], vec![5, 6]]);
    }

    #[test]
    fn isolated_agents_form_singleton_clusters() {
        let sets: Vec<_> = (0..4)
            .map(|i| {
                AgentConstraintSet::new(i, vec![ConstraintAtom::inside_point(i, vec![0.0], 1.0)])
            })
            .collect();
        let p = TaskGraph::from_constraint_sets(&sets).clusters();
        assert_eq!(p.len(), 4);
        assert!(p.groups().iter().all(|g| g.len() == 1));
    }

    #[test]
    fn chain_forms_one_cluster() {
        let sets: Vec<_> = (0..5)
            .map(|i| {
                let atom = if i + 1 < 5 {
                    ConstraintAtom::inside_agent(i, i + 1, 1.0)
                } else {
                    ConstraintAtom::inside_point(i, vec![0.0], 1.0)
                };
                AgentConstraintSet::new(i, vec![atom])
            })
            .collect();
        let p = TaskGraph::from_constraint_sets(&sets).clusters();
        assert_eq!(p.len(), 1);
        assert_eq!(p.groups()[0], (0..5).collect::<Vec<_>>());
    }

    #[test]
    fn line_graph_laplacian() {
        let g = CommGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let l = g.laplacian();
        assert_eq!(l[0], vec![1.0, -1.0, 0.0]);
        assert_eq!(l[1], vec![-1.0, 2.0, -1.0]);
        assert_eq!(l[2], vec![0.0, -1.0, 1.0]);
    }

    #[test]
    fn two_agent_laplacian() {
        let g = CommGraph::new(2, &[(0, 1)]).unwrap();
        assert_eq!(g.laplacian(), vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
    }

    #[test]
    fn laplacian_rows_and_columns_sum_to_zero_exactly() {
        let g = CommGraph::new(5, &[(0, 1), (0, 4), (1, 2), (2, 3), (3, 4), (1, 4)]).unwrap();
        let l = g.laplacian();
        for i in 0..5 {
            assert_eq!(l[i].iter().sum::<f64>(), 0.0);
            assert_eq!((0..5).map(|j| l[j][i]).sum::<f64>(), 0.0);
            for j in 0..5 {
                assert_eq!(l[i][j], l[j][i]);
            }
        }
    }

    #[test]
    fn validates_cover_of_seven_agent_clusters() {
        let g = TaskGraph::from_constraint_sets(&seven_agent_sets());
        let p = g.clusters();
        // a valid topology: line through the first cluster, one link in the
        // second; note agent 4 (index 3) talks only to indices 2 and 4
        let comm = CommGraph::new(7, &[(0, 1), (1, 2), (2, 3), (3, 4), (5, 6)]).unwrap();
        assert!(comm.validate_cover(&p).is_ok());
    }

    #[test]
    fn reports_disconnected_member() {
        let p = ClusterPartition { clusters: vec![vec![0, 1, 2]] };
        let comm = CommGraph::new(3, &[(0, 1)]).unwrap();
        let err = comm.validate_cover(&p).unwrap_err();
        assert_eq!(err.disconnected.len(), 1);
        let pieces = &err.disconnected[0].components;
        assert!(pieces.contains(&vec![0, 1]));
        assert!(pieces.contains(&vec![2]));
    }

    #[test]
    fn singleton_cluster_is_trivially_connected() {
        let p = ClusterPartition { clusters: vec![vec![0]] };
        let comm = CommGraph::new(1, &[]).unwrap();
        assert!(comm.validate_cover(&p).is_ok());
    }

    #[test]
    fn rejects_self_loops_and_bad_indices() {
        assert!(matches!(
            CommGraph::new(3, &[(1, 1)]),
            Err(GraphError::SelfLoop { agent: 1 })
        ));
        assert!(matches!(
            CommGraph::new(3, &[(0, 3)]),
            Err(GraphError::EdgeOutOfRange { .. })
        ));
    }

    #[test]
    fn connectivity_matches_algebraic_connectivity() {
        // single-cluster validation passes iff the second-smallest Laplacian
        // eigenvalue is positive
        let connected = CommGraph::new(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let disconnected = CommGraph::new(4, &[(0, 1), (2, 3)]).unwrap();
        for (g, expect_connected) in [(connected, true), (disconnected, false)] {
            let p = ClusterPartition::single(4);
            let ok = g.validate_cover(&p).is_ok();
            assert_eq!(ok, expect_connected);
            let l = g.laplacian();
            let m = nalgebra::DMatrix::from_fn(4, 4, |i, j| l[i][j]);
            let mut eig: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
            eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert!(eig[0].abs() < 1e-12);
            assert!(eig.iter().all(|&e| e > -1e-12));
            assert_eq!(eig[1] > 1e-9, expect_connected);
        }
    }

    #[test]
    fn task_graph_is_independent_of_atom_order() {
        let mut sets = seven_agent_sets();
        let reference = TaskGraph::from_constraint_sets(&sets);
        for set in &mut sets {
            set.atoms.reverse();
        }
        assert_eq!(TaskGraph::from_constraint_sets(&sets), reference);
    }

    #[test]
    fn dot_export_lists_nodes_and_edges() {
        let g = CommGraph::new(2, &[(0, 1)]).unwrap();
        let dot = g.to_dot();
        assert!(dot.contains("a0 -- a1"));
        let sets = vec![AgentConstraintSet::new(
            0,
            vec![ConstraintAtom::inside_point(0, vec![0.0], 1.0)],
        )];
        let t = TaskGraph::from_constraint_sets(&sets);
        assert!(t.to_dot().contains("a0 -> a0"));
    }
}
