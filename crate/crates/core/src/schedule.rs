//! Layered message schedules.
//!
//! Layer 0 holds the seed clusters (normally the largest parity clusters);
//! each following layer holds the not yet visited neighbours of the previous
//! one. The forward sweep moves messages from the farthest layer toward the
//! seeds and the backward sweep retraces it in reverse. Edges joining two
//! clusters of the same layer are sent once per sweep, after the messages
//! that reach that layer from the far side.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::graph::{ClusterGraph, ClusterRole, GraphKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("a schedule needs at least one seed cluster")]
    NoSeeds,
    #[error("seed {0} is not a cluster of the graph")]
    UnknownSeed(usize),
    #[error("cluster {0} cannot be reached from the seed clusters")]
    Unreachable(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// One message: marginalize `from` onto the sepset and absorb into `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectedEdge {
    pub from: usize,
    pub to: usize,
    pub sepset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageSchedule {
    layers: Vec<Vec<usize>>,
    layer_of: Vec<usize>,
    forward: Vec<DirectedEdge>,
    backward: Vec<DirectedEdge>,
}

impl MessageSchedule {
    pub fn layers(&self) -> &[Vec<usize>] {
        &self.layers
    }

    pub fn layer_of(&self, cluster: usize) -> usize {
        self.layer_of[cluster]
    }

    pub fn forward(&self) -> &[DirectedEdge] {
        &self.forward
    }

    pub fn backward(&self) -> &[DirectedEdge] {
        &self.backward
    }

    pub fn sweep(&self, direction: Direction) -> &[DirectedEdge] {
        match direction {
            Direction::Forward => &self.forward,
            Direction::Backward => &self.backward,
        }
    }
}

/// Seeds used when none are given explicitly.
///
/// For a Bethé graph every factor cluster is a seed, which leaves the
/// variable clusters as the single far layer. Otherwise the seeds are the
/// lowest-id clusters of the two largest distinct cluster cardinalities.
pub fn default_seeds(graph: &ClusterGraph) -> Vec<usize> {
    if graph.kind() == GraphKind::Bethe {
        return graph
            .clusters()
            .iter()
            .filter(|c| matches!(c.role, ClusterRole::Factor(_)))
            .map(|c| c.id)
            .collect();
    }
    let sizes: BTreeSet<usize> = graph.clusters().iter().map(|c| c.cardinality()).collect();
    sizes
        .iter()
        .rev()
        .take(2)
        .filter_map(|&size| graph.clusters().iter().find(|c| c.cardinality() == size).map(|c| c.id))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

pub fn build_layered_schedule(graph: &ClusterGraph, seeds: &[usize]) -> Result<MessageSchedule, ScheduleError> {
    let n = graph.clusters().len();
    if seeds.is_empty() {
        return Err(ScheduleError::NoSeeds);
    }
    if let Some(&bad) = seeds.iter().find(|&&s| s >= n) {
        return Err(ScheduleError::UnknownSeed(bad));
    }
    let mut layer_of = vec![usize::MAX; n];
    let mut current: Vec<usize> = seeds.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    current.iter().for_each(|&c| layer_of[c] = 0);
    let mut layers = Vec::new();
    while !current.is_empty() {
        let depth = layers.len();
        let next: BTreeSet<usize> = current
            .iter()
            .flat_map(|&c| graph.neighbors(c).iter().map(|&(nb, _)| nb))
            .filter(|&nb| layer_of[nb] == usize::MAX)
            .collect();
        next.iter().for_each(|&c| layer_of[c] = depth + 1);
        layers.push(current);
        current = next.into_iter().collect();
    }
    if let Some(lost) = layer_of.iter().position(|&l| l == usize::MAX) {
        return Err(ScheduleError::Unreachable(lost));
    }

    let mut intra = vec![Vec::new(); layers.len()];
    let mut inter = vec![Vec::new(); layers.len()];
    for (s, sep) in graph.sepsets().iter().enumerate() {
        let (a, b) = sep.endpoints;
        let (la, lb) = (layer_of[a], layer_of[b]);
        if la == lb {
            intra[la].push(DirectedEdge { from: a.min(b), to: a.max(b), sepset: s });
        } else {
            let (far, near) = if la > lb { (a, b) } else { (b, a) };
            inter[layer_of[far]].push(DirectedEdge { from: far, to: near, sepset: s });
        }
    }
    let mut forward = Vec::with_capacity(graph.sepsets().len());
    for depth in (0..layers.len()).rev() {
        intra[depth].sort_by_key(|e| (e.from, e.to));
        inter[depth].sort_by_key(|e| (e.from, e.to));
        forward.extend_from_slice(&intra[depth]);
        forward.extend_from_slice(&inter[depth]);
    }
    let backward = forward
        .iter()
        .rev()
        .map(|e| DirectedEdge { from: e.to, to: e.from, sepset: e.sepset })
        .collect();
    Ok(MessageSchedule { layers, layer_of, forward, backward })
}
