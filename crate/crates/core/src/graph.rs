//! Cluster graphs over a set of factors.
//!
//! Two constructions share one [`ClusterGraph`] type:
//!
//! * [`build_bethe_graph`] gives the factor-graph view: one cluster per
//!   factor, one univariate cluster per variable, and a univariate sepset on
//!   every factor-variable edge.
//! * [`ltrip_compile`] builds one cluster per factor and, for every variable
//!   in turn, a maximum-weight spanning tree over the clusters that contain
//!   it. The variable is added to the sepset of each tree edge; sepsets are
//!   the union over all variable layers.
//!
//! Both satisfy the running intersection property, which [`verify_rip`]
//! checks for one variable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};

use thiserror::Error;

use crate::factor::{DiscreteFactor, VariableId};

/// Added to the weight of an edge already chosen by an earlier variable
/// layer. Larger than any possible overlap.
const REUSE_BONUS: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("cannot compile a cluster graph from zero factors")]
    NoFactors,
    #[error("factor {factor} uses variable {var}, which is not among the graph variables")]
    UnknownVariable { factor: usize, var: VariableId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraphKind {
    Bethe,
    Ltrip,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphKind::Bethe => "bethe",
            GraphKind::Ltrip => "ltrip",
        })
    }
}

/// What a cluster stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterRole {
    /// Holds the factor at this position of the input list.
    Factor(usize),
    /// A univariate placeholder cluster of the Bethé construction.
    Variable(VariableId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub id: usize,
    pub variables: Vec<VariableId>,
    pub initial_factor: DiscreteFactor,
    pub role: ClusterRole,
}

impl Cluster {
    pub fn cardinality(&self) -> usize {
        self.variables.len()
    }

    pub fn contains(&self, v: VariableId) -> bool {
        self.variables.binary_search(&v).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sepset {
    /// Cluster ids, lower first.
    pub endpoints: (usize, usize),
    pub variables: Vec<VariableId>,
}

impl Sepset {
    pub fn other(&self, cluster: usize) -> usize {
        if self.endpoints.0 == cluster {
            self.endpoints.1
        } else {
            self.endpoints.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterGraph {
    kind: GraphKind,
    clusters: Vec<Cluster>,
    sepsets: Vec<Sepset>,
    // per cluster: (neighbour, sepset index), ascending by neighbour
    adjacency: Vec<Vec<(usize, usize)>>,
    variables: Vec<VariableId>,
}

impl ClusterGraph {
    fn assemble(kind: GraphKind, clusters: Vec<Cluster>, sepsets: Vec<Sepset>) -> Self {
        let mut adjacency = vec![Vec::new(); clusters.len()];
        for (s, sep) in sepsets.iter().enumerate() {
            let (a, b) = sep.endpoints;
            adjacency[a].push((b, s));
            adjacency[b].push((a, s));
        }
        adjacency.iter_mut().for_each(|adj| adj.sort_unstable());
        let variables: BTreeSet<VariableId> = clusters.iter().flat_map(|c| c.variables.iter().copied()).collect();
        Self { kind, clusters, sepsets, adjacency, variables: variables.into_iter().collect() }
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn cluster(&self, id: usize) -> &Cluster {
        &self.clusters[id]
    }

    pub fn sepsets(&self) -> &[Sepset] {
        &self.sepsets
    }

    pub fn sepset(&self, idx: usize) -> &Sepset {
        &self.sepsets[idx]
    }

    /// `(neighbour, sepset index)` pairs of a cluster.
    pub fn neighbors(&self, cluster: usize) -> &[(usize, usize)] {
        &self.adjacency[cluster]
    }

    /// All variables that appear in some cluster, ascending.
    pub fn variables(&self) -> &[VariableId] {
        &self.variables
    }

    pub fn clusters_containing(&self, v: VariableId) -> impl Iterator<Item = &Cluster> + '_ {
        self.clusters.iter().filter(move |c| c.contains(v))
    }

    /// Text dump: a `kind` line, one `cluster <id>: <vars>` line per cluster
    /// and one `sepset <a> <b>: <vars>` line per sepset, variables ascending.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let vars = |vs: &[VariableId]| vs.iter().map(|v| v.0.to_string()).collect::<Vec<_>>().join(" ");
        writeln!(out, "kind {}", self.kind).unwrap();
        writeln!(out, "clusters {}", self.clusters.len()).unwrap();
        for c in &self.clusters {
            writeln!(out, "cluster {}: {}", c.id, vars(&c.variables)).unwrap();
        }
        writeln!(out, "sepsets {}", self.sepsets.len()).unwrap();
        for s in &self.sepsets {
            writeln!(out, "sepset {} {}: {}", s.endpoints.0, s.endpoints.1, vars(&s.variables)).unwrap();
        }
        out
    }
}

/// Factor-graph construction in cluster notation. Factor clusters come first
/// (in input order), followed by one uniform univariate cluster per variable
/// of `all_vars` in ascending order.
pub fn build_bethe_graph(factors: &[DiscreteFactor], all_vars: &[VariableId]) -> Result<ClusterGraph, GraphError> {
    let vars: Vec<VariableId> = all_vars.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut clusters: Vec<Cluster> = factors
        .iter()
        .enumerate()
        .map(|(i, f)| Cluster { id: i, variables: f.scope().to_vec(), initial_factor: f.clone(), role: ClusterRole::Factor(i) })
        .collect();
    let var_cluster: BTreeMap<VariableId, usize> = vars.iter().enumerate().map(|(i, &v)| (v, factors.len() + i)).collect();
    for &v in &vars {
        let card = factors
            .iter()
            .find_map(|f| f.scope().iter().position(|&x| x == v).map(|p| f.cardinalities()[p]))
            .unwrap_or(2);
        clusters.push(Cluster {
            id: clusters.len(),
            variables: vec![v],
            initial_factor: DiscreteFactor::uniform(&[v], &[card]).expect("univariate scope"),
            role: ClusterRole::Variable(v),
        });
    }
    let mut sepsets = Vec::new();
    for (i, f) in factors.iter().enumerate() {
        for &v in f.scope() {
            let &target = var_cluster.get(&v).ok_or(GraphError::UnknownVariable { factor: i, var: v })?;
            sepsets.push(Sepset { endpoints: (i, target), variables: vec![v] });
        }
    }
    Ok(ClusterGraph::assemble(GraphKind::Bethe, clusters, sepsets))
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Layered-trees cluster graph compilation.
///
/// Variable layers are processed in ascending id order. Within a layer the
/// candidate edges join every pair of clusters holding the variable, weighted
/// by the size of their variable overlap plus a reuse bonus for edges chosen
/// by earlier layers. Kruskal's algorithm picks the maximum spanning tree,
/// breaking ties by the lower endpoint pair.
pub fn ltrip_compile(factors: &[DiscreteFactor]) -> Result<ClusterGraph, GraphError> {
    if factors.is_empty() {
        return Err(GraphError::NoFactors);
    }
    let clusters: Vec<Cluster> = factors
        .iter()
        .enumerate()
        .map(|(i, f)| Cluster { id: i, variables: f.scope().to_vec(), initial_factor: f.clone(), role: ClusterRole::Factor(i) })
        .collect();

    let mut holders: BTreeMap<VariableId, Vec<usize>> = BTreeMap::new();
    for c in &clusters {
        for &v in &c.variables {
            holders.entry(v).or_default().push(c.id);
        }
    }

    // edge (a, b) with a < b -> sepset variables
    let mut edges: BTreeMap<(usize, usize), Vec<VariableId>> = BTreeMap::new();
    for (&v, members) in &holders {
        if members.len() < 2 {
            continue;
        }
        let mut candidates = Vec::with_capacity(members.len() * (members.len() - 1) / 2);
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                let overlap = clusters[a].variables.iter().filter(|&&x| clusters[b].contains(x)).count();
                let bonus = if edges.contains_key(&(a, b)) { REUSE_BONUS } else { 0 };
                candidates.push((overlap + bonus, a, b));
            }
        }
        candidates.sort_by(|x, y| y.0.cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let mut sets = DisjointSets::new(clusters.len());
        let mut picked = 0;
        for (_, a, b) in candidates {
            if sets.union(a, b) {
                edges.entry((a, b)).or_default().push(v);
                picked += 1;
                if picked == members.len() - 1 {
                    break;
                }
            }
        }
    }

    let sepsets = edges
        .into_iter()
        .map(|(endpoints, variables)| Sepset { endpoints, variables })
        .collect();
    Ok(ClusterGraph::assemble(GraphKind::Ltrip, clusters, sepsets))
}

/// True iff the edges carrying `v` form a tree spanning exactly the clusters
/// that contain `v`.
pub fn verify_rip(graph: &ClusterGraph, v: VariableId) -> bool {
    let holders: Vec<usize> = graph.clusters_containing(v).map(|c| c.id).collect();
    if holders.is_empty() {
        return true;
    }
    let carrying: Vec<&Sepset> = graph.sepsets().iter().filter(|s| s.variables.contains(&v)).collect();
    if carrying.len() != holders.len() - 1 {
        return false;
    }
    let mut sets = DisjointSets::new(graph.clusters().len());
    for s in carrying {
        let (a, b) = s.endpoints;
        if !graph.cluster(a).contains(v) || !graph.cluster(b).contains(v) || !sets.union(a, b) {
            return false;
        }
    }
    let root = sets.find(holders[0]);
    holders.iter().all(|&h| sets.find(h) == root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::make_parity_factor;

    fn vs(ids: &[u32]) -> Vec<VariableId> {
        ids.iter().map(|&i| VariableId(i)).collect()
    }

    fn hamming_factors() -> Vec<DiscreteFactor> {
        [[0, 1, 2, 4], [0, 1, 3, 5], [0, 2, 3, 6]]
            .iter()
            .map(|s| make_parity_factor(&vs(s)).unwrap())
            .collect()
    }

    #[test]
    fn bethe_hamming_shape() {
        let g = build_bethe_graph(&hamming_factors(), &vs(&[0, 1, 2, 3, 4, 5, 6])).unwrap();
        assert_eq!(g.clusters().len(), 10);
        assert_eq!(g.sepsets().len(), 12);
        assert!(g.sepsets().iter().all(|s| s.variables.len() == 1));
        assert!(g.sepsets().iter().all(|s| s.endpoints.0 < 3 && s.endpoints.1 >= 3));
        for v in 0..7 {
            assert!(verify_rip(&g, VariableId(v)));
        }
    }

    #[test]
    fn bethe_small_cases() {
        let f = make_parity_factor(&vs(&[4])).unwrap();
        let g = build_bethe_graph(&[f], &vs(&[4])).unwrap();
        assert_eq!((g.clusters().len(), g.sepsets().len()), (2, 1));
        assert_eq!(g.sepset(0).variables, vs(&[4]));

        let f = make_parity_factor(&vs(&[1, 2, 3, 5, 8])).unwrap();
        let g = build_bethe_graph(&[f.clone()], &vs(&[1, 2, 3, 5, 8])).unwrap();
        assert_eq!((g.clusters().len(), g.sepsets().len()), (6, 5));

        assert_eq!(
            build_bethe_graph(&[f], &vs(&[1, 2])).unwrap_err(),
            GraphError::UnknownVariable { factor: 0, var: VariableId(3) }
        );
    }

    #[test]
    fn ltrip_hamming_shape() {
        let g = ltrip_compile(&hamming_factors()).unwrap();
        assert_eq!(g.clusters().len(), 3);
        let seps: Vec<((usize, usize), Vec<VariableId>)> =
            g.sepsets().iter().map(|s| (s.endpoints, s.variables.clone())).collect();
        assert_eq!(
            seps,
            vec![((0, 1), vs(&[0, 1])), ((0, 2), vs(&[0, 2])), ((1, 2), vs(&[3]))]
        );
        for v in 0..7 {
            assert!(verify_rip(&g, VariableId(v)));
        }
    }

    #[test]
    fn ltrip_small_cases() {
        let f = make_parity_factor(&vs(&[0, 1, 2])).unwrap();
        let g = ltrip_compile(&[f]).unwrap();
        assert_eq!((g.clusters().len(), g.sepsets().len()), (1, 0));

        let a = make_parity_factor(&vs(&[0, 1, 2])).unwrap();
        let b = make_parity_factor(&vs(&[0, 1, 3])).unwrap();
        let g = ltrip_compile(&[a, b]).unwrap();
        assert_eq!(g.sepsets(), &[Sepset { endpoints: (0, 1), variables: vs(&[0, 1]) }]);

        assert_eq!(ltrip_compile(&[]), Err(GraphError::NoFactors));
    }

    #[test]
    fn ltrip_disconnected_components() {
        let fs: Vec<DiscreteFactor> = [[0u32, 1], [1, 2], [5, 6], [6, 7]]
            .iter()
            .map(|s| make_parity_factor(&vs(s)).unwrap())
            .collect();
        let g = ltrip_compile(&fs).unwrap();
        assert_eq!(g.sepsets().len(), 2);
        assert!(g.variables().iter().all(|&v| verify_rip(&g, v)));
    }

    #[test]
    fn rip_detects_cycle() {
        let fs: Vec<DiscreteFactor> = [[0u32, 1], [0, 2], [0, 3]]
            .iter()
            .map(|s| make_parity_factor(&vs(s)).unwrap())
            .collect();
        let clusters = fs
            .iter()
            .enumerate()
            .map(|(i, f)| Cluster { id: i, variables: f.scope().to_vec(), initial_factor: f.clone(), role: ClusterRole::Factor(i) })
            .collect();
        let sepsets = vec![
            Sepset { endpoints: (0, 1), variables: vs(&[0]) },
            Sepset { endpoints: (0, 2), variables: vs(&[0]) },
            Sepset { endpoints: (1, 2), variables: vs(&[0]) },
        ];
        let g = ClusterGraph::assemble(GraphKind::Ltrip, clusters, sepsets);
        assert!(!verify_rip(&g, VariableId(0)));
        assert!(verify_rip(&g, VariableId(1)));
    }

    #[test]
    fn dump_format() {
        let g = ltrip_compile(&hamming_factors()).unwrap();
        assert_eq!(
            g.dump(),
            "kind ltrip\nclusters 3\ncluster 0: 0 1 2 4\ncluster 1: 0 1 3 5\ncluster 2: 0 2 3 6\n\
             sepsets 3\nsepset 0 1: 0 1\nsepset 0 2: 0 2\nsepset 1 2: 3\n"
        );
    }
}
