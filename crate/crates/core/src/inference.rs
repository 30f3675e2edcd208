//! Loopy belief update over a cluster graph.
//!
//! Every cluster keeps a belief and every sepset keeps a belief over its
//! variables. Sending a message over an edge `Ci -> Cj` with sepset `S`
//! marginalizes the belief of `Ci` onto `S`, divides it by the stored sepset
//! belief, multiplies the quotient into `Cj`, and stores the new marginal as
//! the sepset belief. All beliefs are renormalized after each update and zero
//! states are dropped for good.

use thiserror::Error;

use crate::factor::{DiscreteFactor, FactorError, OpCounter, VariableId};
use crate::graph::{ClusterGraph, ClusterRole};
use crate::schedule::{DirectedEdge, Direction, MessageSchedule};

/// Largest bit count the brute-force oracle will enumerate.
pub const MAX_EXACT_BITS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("evidence for {0} is not a univariate factor over a graph variable")]
    BadLikelihood(VariableId),
    #[error("{0} has more than one likelihood")]
    DuplicateLikelihood(VariableId),
    #[error("no likelihood was given for {0}")]
    MissingLikelihood(VariableId),
    #[error("{0} appears in no cluster")]
    UncoveredBit(VariableId),
    #[error("belief of cluster {cluster} has no support left (contradictory evidence)")]
    Contradiction { cluster: usize },
    #[error("message-match stopping needs the transmitted bits")]
    MissingTruth,
    #[error("max_iters must be at least 1")]
    ZeroIterations,
    #[error("{n} bits is too many to enumerate (limit {MAX_EXACT_BITS})")]
    TooManyBits { n: usize },
    #[error(transparent)]
    Factor(#[from] FactorError),
}

/// Where each bit's channel likelihood is absorbed.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceMap {
    /// `(bit, cluster id, likelihood)`, ascending by bit.
    attachments: Vec<(VariableId, usize, DiscreteFactor)>,
    /// Cluster id to `(position among graph variables, bit)` pairs.
    by_cluster: Vec<(usize, Vec<(usize, VariableId)>)>,
}

impl EvidenceMap {
    pub fn attachments(&self) -> impl Iterator<Item = (VariableId, usize)> + '_ {
        self.attachments.iter().map(|(v, c, _)| (*v, *c))
    }

    pub fn cluster_of(&self, v: VariableId) -> Option<usize> {
        self.attachments
            .binary_search_by_key(&v, |(x, _, _)| *x)
            .ok()
            .map(|i| self.attachments[i].1)
    }
}

/// Assigns each bit's likelihood to one cluster. Layers are scanned from the
/// farthest inward; within a layer, smaller clusters go first (then lower id)
/// and claim every bit they hold that is still unclaimed.
pub fn attach_evidence(
    graph: &ClusterGraph,
    schedule: &MessageSchedule,
    likelihoods: &[DiscreteFactor],
) -> Result<EvidenceMap, DecodeError> {
    let mut by_var: Vec<(VariableId, &DiscreteFactor)> = Vec::with_capacity(likelihoods.len());
    for l in likelihoods {
        match l.scope() {
            [v] => by_var.push((*v, l)),
            _ => return Err(DecodeError::BadLikelihood(l.scope().first().copied().unwrap_or(VariableId(0)))),
        }
    }
    by_var.sort_by_key(|(v, _)| *v);
    if let Some(w) = by_var.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(DecodeError::DuplicateLikelihood(w[0].0));
    }
    if let Some(&v) = graph.variables().iter().find(|&&v| by_var.binary_search_by_key(&v, |(x, _)| *x).is_err()) {
        return Err(DecodeError::MissingLikelihood(v));
    }

    let mut owner: Vec<Option<usize>> = vec![None; by_var.len()];
    for layer in schedule.layers().iter().rev() {
        let mut order: Vec<usize> = layer.clone();
        order.sort_by_key(|&c| (graph.cluster(c).cardinality(), c));
        for c in order {
            for v in &graph.cluster(c).variables {
                if let Ok(i) = by_var.binary_search_by_key(v, |(x, _)| *x) {
                    owner[i].get_or_insert(c);
                }
            }
        }
    }
    let attachments = by_var
        .into_iter()
        .zip(owner)
        .map(|((v, l), c)| c.map(|c| (v, c, l.clone())).ok_or(DecodeError::UncoveredBit(v)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut grouped: std::collections::BTreeMap<usize, Vec<(usize, VariableId)>> = Default::default();
    for (v, c, _) in &attachments {
        if let Ok(pos) = graph.variables().binary_search(v) {
            grouped.entry(*c).or_default().push((pos, *v));
        }
    }
    Ok(EvidenceMap { attachments, by_cluster: grouped.into_iter().collect() })
}

/// Cluster and sepset beliefs of one decode session.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    pub cluster_beliefs: Vec<DiscreteFactor>,
    pub sepset_beliefs: Vec<DiscreteFactor>,
}

impl BeliefState {
    /// Initial factors with the evidence multiplied in once; sepsets start as
    /// all-ones tables.
    pub fn initialize(graph: &ClusterGraph, evidence: &EvidenceMap) -> Result<Self, DecodeError> {
        let mut scratch = OpCounter::new();
        let mut cluster_beliefs: Vec<DiscreteFactor> = graph.clusters().iter().map(|c| c.initial_factor.clone()).collect();
        for (_, c, l) in &evidence.attachments {
            cluster_beliefs[*c] = cluster_beliefs[*c].product(l, &mut scratch)?;
        }
        let cluster_beliefs = cluster_beliefs
            .into_iter()
            .enumerate()
            .map(|(c, b)| b.normalize().map_err(|_| DecodeError::Contradiction { cluster: c }))
            .collect::<Result<Vec<_>, _>>()?;
        let sepset_beliefs = graph
            .sepsets()
            .iter()
            .map(|s| {
                let owner = &cluster_beliefs[s.endpoints.0];
                let cards: Vec<u32> = s
                    .variables
                    .iter()
                    .map(|v| owner.cardinalities()[owner.scope().binary_search(v).unwrap()])
                    .collect();
                DiscreteFactor::uniform(&s.variables, &cards)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { cluster_beliefs, sepset_beliefs })
    }
}

/// Sends one message: marginalize the sender onto the sepset, divide by the
/// stored sepset belief, absorb the quotient into the receiver and store the
/// new sepset belief.
pub fn send_message(state: &mut BeliefState, graph: &ClusterGraph, edge: DirectedEdge, ops: &mut OpCounter) -> Result<(), DecodeError> {
    let sepset = graph.sepset(edge.sepset);
    let mut message = state.cluster_beliefs[edge.from].marginalize(&sepset.variables, ops)?;
    let quotient = message.divide(&state.sepset_beliefs[edge.sepset], ops)?;
    state.cluster_beliefs[edge.to].absorb(&quotient, ops).map_err(|e| match e {
        FactorError::EmptyFactor => DecodeError::Contradiction { cluster: edge.to },
        e => e.into(),
    })?;
    message
        .normalize_in_place()
        .map_err(|_| DecodeError::Contradiction { cluster: edge.from })?;
    state.sepset_beliefs[edge.sepset] = message;
    Ok(())
}

/// Passes every message of one sweep in schedule order.
pub fn lbu_sweep(
    state: &mut BeliefState,
    graph: &ClusterGraph,
    schedule: &MessageSchedule,
    direction: Direction,
    ops: &mut OpCounter,
) -> Result<(), DecodeError> {
    for &edge in schedule.sweep(direction) {
        send_message(state, graph, edge, ops)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    /// Stop once the hard decisions equal the transmitted bits (genie aided).
    MessageMatch,
    /// Stop once the hard decisions satisfy every factor cluster.
    SyndromeZero,
    /// Always run `max_iters` iterations.
    FixedIters,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MessageMatch,
    SyndromeZero,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Normalized binary marginals, one per graph variable in ascending order.
    pub bit_marginals: Vec<DiscreteFactor>,
    pub iterations_used: usize,
    pub stopped_by: StopReason,
    /// Arithmetic of the message passing only; evidence absorption and
    /// marginal read-out are not charged.
    pub ops: OpCounter,
}

/// Bit 1 iff its probability exceeds one half; ties decide 0.
pub fn hard_decision(marginals: &[DiscreteFactor]) -> Vec<u8> {
    marginals.iter().map(|m| u8::from(m.value_at(1) > 0.5)).collect()
}

fn read_marginals(graph: &ClusterGraph, evidence: &EvidenceMap, state: &BeliefState) -> Result<Vec<DiscreteFactor>, DecodeError> {
    let mut out: Vec<Option<DiscreteFactor>> = vec![None; graph.variables().len()];
    for (c, group) in &evidence.by_cluster {
        let belief = &state.cluster_beliefs[*c];
        let sums = belief.variable_marginals();
        for &(pos, v) in group {
            let k = belief.scope().binary_search(&v).map_err(|_| DecodeError::UncoveredBit(v))?;
            let m = DiscreteFactor::binary_unary(v, sums[k][0], sums[k][1])?;
            out[pos] = Some(m.normalize().map_err(|_| DecodeError::Contradiction { cluster: *c })?);
        }
    }
    out.into_iter()
        .zip(graph.variables())
        .map(|(m, &v)| m.ok_or(DecodeError::UncoveredBit(v)))
        .collect()
}

/// Runs forward and backward sweeps until the stop rule fires or `max_iters`
/// iterations are spent. `truth` lists the transmitted value of the bits that
/// message-match stopping compares.
pub fn run_decoder(
    graph: &ClusterGraph,
    schedule: &MessageSchedule,
    likelihoods: &[DiscreteFactor],
    truth: Option<&[(VariableId, u8)]>,
    max_iters: usize,
    stop_rule: StopRule,
) -> Result<DecodeResult, DecodeError> {
    if max_iters == 0 {
        return Err(DecodeError::ZeroIterations);
    }
    if stop_rule == StopRule::MessageMatch && truth.is_none() {
        return Err(DecodeError::MissingTruth);
    }
    let evidence = attach_evidence(graph, schedule, likelihoods)?;
    let mut state = BeliefState::initialize(graph, &evidence)?;
    let vars = graph.variables();
    let position = |v: VariableId| vars.binary_search(&v).ok();
    let mut ops = OpCounter::new();
    let mut iterations = 0;
    loop {
        lbu_sweep(&mut state, graph, schedule, Direction::Forward, &mut ops)?;
        lbu_sweep(&mut state, graph, schedule, Direction::Backward, &mut ops)?;
        iterations += 1;
        let marginals = read_marginals(graph, &evidence, &state)?;
        let decided = hard_decision(&marginals);
        let stopped = match stop_rule {
            StopRule::MessageMatch => truth
                .unwrap_or_default()
                .iter()
                .all(|&(v, b)| position(v).is_some_and(|i| decided[i] == b))
                .then_some(StopReason::MessageMatch),
            StopRule::SyndromeZero => graph
                .clusters()
                .iter()
                .filter(|c| matches!(c.role, ClusterRole::Factor(_)))
                .all(|c| c.initial_factor.value_with(|v| position(v).map_or(0, |i| decided[i] as u32)) > 0.0)
                .then_some(StopReason::SyndromeZero),
            StopRule::FixedIters => None,
        };
        if stopped.is_some() || iterations == max_iters {
            return Ok(DecodeResult {
                bit_marginals: marginals,
                iterations_used: iterations,
                stopped_by: stopped.unwrap_or(StopReason::MaxIters),
                ops,
            });
        }
    }
}

/// Brute-force posterior marginals of bits `0..n`: every bit vector is
/// weighted by the product of all factors and all likelihoods.
pub fn exact_marginals(factors: &[DiscreteFactor], likelihoods: &[DiscreteFactor], n: usize) -> Result<Vec<DiscreteFactor>, DecodeError> {
    if n > MAX_EXACT_BITS {
        return Err(DecodeError::TooManyBits { n });
    }
    let mut lik = vec![[1.0f64; 2]; n];
    for l in likelihoods {
        match l.scope() {
            [v] if v.index() < n && l.cardinalities() == [2] => {
                lik[v.index()] = [l.value_at(0), l.value_at(1)];
            }
            _ => return Err(DecodeError::BadLikelihood(l.scope().first().copied().unwrap_or(VariableId(0)))),
        }
    }
    for f in factors {
        if let Some(&v) = f.scope().iter().find(|v| v.index() >= n) {
            return Err(DecodeError::UncoveredBit(v));
        }
    }
    let mut acc = vec![[0.0f64; 2]; n];
    for x in 0u64..(1u64 << n) {
        let bit = |v: VariableId| ((x >> v.index()) & 1) as u32;
        let mut w = 1.0;
        for f in factors {
            w *= f.value_with(bit);
            if w == 0.0 {
                break;
            }
        }
        if w == 0.0 {
            continue;
        }
        for (i, l) in lik.iter().enumerate() {
            w *= l[((x >> i) & 1) as usize];
        }
        for (i, a) in acc.iter_mut().enumerate() {
            a[((x >> i) & 1) as usize] += w;
        }
    }
    acc.iter()
        .enumerate()
        .map(|(i, a)| {
            DiscreteFactor::binary_unary(VariableId::from(i), a[0], a[1])?
                .normalize()
                .map_err(|_| DecodeError::Contradiction { cluster: usize::MAX })
        })
        .collect()
}
