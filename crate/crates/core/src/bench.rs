//! Monte-Carlo experiments: BER sweeps and the Hamming (7,4) comparison.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{likelihood_evidence, transmit, ChannelConfig, ChannelError};
use crate::codec::{parity_factors_from_h, CodecError, Encoder, ParityCheckMatrix};
use crate::codes::{hamming_74, load_code};
use crate::factor::{kl_divergence, DiscreteFactor, OpCounter, VariableId};
use crate::graph::{build_bethe_graph, ltrip_compile, ClusterGraph, GraphError, GraphKind};
use crate::inference::{exact_marginals, hard_decision, run_decoder, DecodeError, StopRule};
use crate::schedule::{build_layered_schedule, default_seeds, MessageSchedule, ScheduleError};

/// Iteration cap of the Hamming study.
pub const HAMMING_MAX_ITERS: usize = 25;
/// Iteration cap of the LDPC sweeps.
pub const SWEEP_MAX_ITERS: usize = 35;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot load code: {0}")]
    Load(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

/// Which graph representations an experiment decodes with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphChoice {
    Factor,
    Cluster,
    Both,
}

impl GraphChoice {
    pub fn kinds(self) -> Vec<GraphKind> {
        match self {
            Self::Factor => vec![GraphKind::Bethe],
            Self::Cluster => vec![GraphKind::Ltrip],
            Self::Both => vec![GraphKind::Bethe, GraphKind::Ltrip],
        }
    }
}

/// Name of a graph kind in CSV output and on the command line.
pub fn graph_label(kind: GraphKind) -> &'static str {
    match kind {
        GraphKind::Bethe => "factor",
        GraphKind::Ltrip => "cluster",
    }
}

/// Compiles `h` into the requested representation.
pub fn compile_graph(h: &ParityCheckMatrix, kind: GraphKind) -> Result<ClusterGraph, GraphError> {
    let factors = parity_factors_from_h(h);
    match kind {
        GraphKind::Bethe => {
            let vars: Vec<VariableId> = (0..h.n_cols()).map(VariableId::from).collect();
            build_bethe_graph(&factors, &vars)
        }
        GraphKind::Ltrip => ltrip_compile(&factors),
    }
}

/// A graph with its default layered schedule.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    pub kind: GraphKind,
    pub graph: ClusterGraph,
    pub schedule: MessageSchedule,
}

impl PreparedGraph {
    pub fn new(h: &ParityCheckMatrix, kind: GraphKind) -> Result<Self, BenchError> {
        let graph = compile_graph(h, kind)?;
        let schedule = build_layered_schedule(&graph, &default_seeds(&graph))?;
        Ok(Self { kind, graph, schedule })
    }
}

/// One simulated packet.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub message: Vec<u8>,
    pub codeword: Vec<u8>,
    pub likelihoods: Vec<DiscreteFactor>,
}

impl Packet {
    /// Draws a uniform message and channel noise, both fixed by `seed`.
    pub fn generate(encoder: &Encoder, cfg: &ChannelConfig, seed: u64) -> Result<Self, BenchError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let message: Vec<u8> = (0..encoder.parameters().k).map(|_| u8::from(rng.random::<bool>())).collect();
        let codeword = encoder.encode(&message)?;
        let received = transmit(&codeword, cfg, seed);
        Ok(Self { message, likelihoods: likelihood_evidence(&received, cfg), codeword: codeword.bits })
    }

    /// The transmitted value of every message position.
    pub fn truth(&self, encoder: &Encoder) -> Vec<(VariableId, u8)> {
        encoder.message_positions().iter().map(|&p| (VariableId::from(p), self.codeword[p])).collect()
    }

    /// Hard decisions straight from the channel, ignoring the code.
    pub fn channel_decision(&self) -> Vec<u8> {
        hard_decision(&self.likelihoods)
    }
}

/// Outcome of decoding one packet with one graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Tally {
    bit_errors: u64,
    iterations: u64,
    multi_iteration: u64,
    failures: u64,
}

impl std::ops::Add for Tally {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            bit_errors: self.bit_errors + o.bit_errors,
            iterations: self.iterations + o.iterations,
            multi_iteration: self.multi_iteration + o.multi_iteration,
            failures: self.failures + o.failures,
        }
    }
}

fn count_errors(encoder: &Encoder, decided: &[u8], message: &[u8]) -> u64 {
    encoder.extract_message(decided).iter().zip(message).filter(|(a, b)| a != b).count() as u64
}

/// Decodes one packet. A decoder error counts as a failed packet that used
/// every iteration and kept the channel's hard decisions.
fn decode_packet(
    g: &PreparedGraph,
    encoder: &Encoder,
    packet: &Packet,
    max_iters: usize,
    stop: StopRule,
) -> (Tally, Option<Vec<DiscreteFactor>>) {
    let truth = packet.truth(encoder);
    match run_decoder(&g.graph, &g.schedule, &packet.likelihoods, Some(&truth), max_iters, stop) {
        Ok(r) => {
            let errors = count_errors(encoder, &hard_decision(&r.bit_marginals), &packet.message);
            let tally = Tally {
                bit_errors: errors,
                iterations: r.iterations_used as u64,
                multi_iteration: u64::from(r.iterations_used > 1),
                failures: u64::from(errors > 0),
            };
            (tally, Some(r.bit_marginals))
        }
        Err(_) => {
            let tally = Tally {
                bit_errors: count_errors(encoder, &packet.channel_decision(), &packet.message),
                iterations: max_iters as u64,
                multi_iteration: u64::from(max_iters > 1),
                failures: 1,
            };
            (tally, None)
        }
    }
}

/// `points` equidistant values from `lo` to `hi` inclusive.
pub fn snr_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Built-in code name or alist path.
    pub code: String,
    pub graphs: GraphChoice,
    pub snr_lo: f64,
    pub snr_hi: f64,
    pub points: usize,
    pub packets: u64,
    pub max_iters: usize,
    pub base_seed: u64,
    pub stop: StopRule,
}

impl SweepConfig {
    /// Desk-scale defaults: 9 points over 0-8 dB with 20 000 packets each.
    pub fn desk(code: &str) -> Self {
        Self {
            code: code.to_string(),
            graphs: GraphChoice::Both,
            snr_lo: 0.0,
            snr_hi: 8.0,
            points: 9,
            packets: 20_000,
            max_iters: SWEEP_MAX_ITERS,
            base_seed: 1,
            stop: StopRule::MessageMatch,
        }
    }

    /// 36 points over 0-8 dB with a million packets each.
    pub fn full(code: &str) -> Self {
        Self { points: 36, packets: 1_000_000, ..Self::desk(code) }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if !(self.snr_lo.is_finite() && self.snr_hi.is_finite()) || self.snr_lo > self.snr_hi {
            return Err(BenchError::Config(format!("SNR range {}..{} is not ordered", self.snr_lo, self.snr_hi)));
        }
        if self.points == 0 {
            return Err(BenchError::Config("need at least one SNR point".into()));
        }
        if self.packets == 0 {
            return Err(BenchError::Config("need at least one packet per point".into()));
        }
        if self.max_iters == 0 {
            return Err(BenchError::Config("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub graph: &'static str,
    pub snr_db: f64,
    pub packets: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub avg_iterations: f64,
    #[serde(rename = "frac_multi_iter")]
    pub frac_multi_iteration: f64,
    pub failures: u64,
    #[serde(rename = "seed")]
    pub base_seed: u64,
}

/// Seed of packet `index` at SNR point `point`: the base seed plus the
/// packet's position in the whole sweep.
pub fn packet_seed(base_seed: u64, point: usize, packets: u64, index: u64) -> u64 {
    base_seed.wrapping_add((point as u64).wrapping_mul(packets)).wrapping_add(index)
}

/// Every requested graph decodes the same packets at every SNR point.
pub fn run_ber_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>, BenchError> {
    cfg.validate()?;
    let h = load_code(&cfg.code).map_err(|e| BenchError::Load(e.to_string()))?;
    run_ber_sweep_on(&h, cfg)
}

/// As [`run_ber_sweep`], for an already loaded code.
pub fn run_ber_sweep_on(h: &ParityCheckMatrix, cfg: &SweepConfig) -> Result<Vec<SweepRow>, BenchError> {
    cfg.validate()?;
    let encoder = Encoder::new(h)?;
    let k = encoder.parameters().k as u64;
    let rate = encoder.parameters().rate();
    let graphs = cfg
        .graphs
        .kinds()
        .into_iter()
        .map(|kind| PreparedGraph::new(h, kind))
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::new();
    for (point, snr) in snr_grid(cfg.snr_lo, cfg.snr_hi, cfg.points).into_iter().enumerate() {
        let channel = ChannelConfig::from_snr_db(snr, rate)?;
        let zero = vec![Tally::default(); graphs.len()];
        let totals = (0..cfg.packets)
            .into_par_iter()
            .map(|i| -> Result<Vec<Tally>, BenchError> {
                let packet = Packet::generate(&encoder, &channel, packet_seed(cfg.base_seed, point, cfg.packets, i))?;
                Ok(graphs
                    .iter()
                    .map(|g| decode_packet(g, &encoder, &packet, cfg.max_iters, cfg.stop).0)
                    .collect())
            })
            .try_reduce(|| zero.clone(), |a, b| Ok(a.into_iter().zip(b).map(|(x, y)| x + y).collect()))?;
        for (g, t) in graphs.iter().zip(totals) {
            rows.push(SweepRow {
                graph: graph_label(g.kind),
                snr_db: snr,
                packets: cfg.packets,
                bit_errors: t.bit_errors,
                ber: t.bit_errors as f64 / (cfg.packets * k) as f64,
                avg_iterations: t.iterations as f64 / cfg.packets as f64,
                frac_multi_iteration: t.multi_iteration as f64 / cfg.packets as f64,
                failures: t.failures,
                base_seed: cfg.base_seed,
            });
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Median and quartiles by linear interpolation between order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self { q1: quantile(&v, 0.25), median: quantile(&v, 0.5), q3: quantile(&v, 0.75) }
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        n => {
            let pos = q * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

/// Per-method results at one SNR of the Hamming study.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodStats {
    pub bit_errors: u64,
    pub ber: f64,
    /// Fraction of packets whose decode ran more than one iteration.
    pub frac_multi_iteration: f64,
    /// Per-packet total KL divergence of the exact marginals from these.
    pub kl: Quartiles,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HammingPoint {
    pub snr_db: f64,
    pub packets: u64,
    pub exact: MethodStats,
    pub factor: MethodStats,
    pub cluster: MethodStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// Cost of one forward and one backward sweep on each graph.
    pub factor_ops: OpCounter,
    pub cluster_ops: OpCounter,
    pub points: Vec<HammingPoint>,
}

/// Arithmetic of one decoding iteration on `g`, with uninformative evidence.
pub fn single_iteration_ops(g: &PreparedGraph) -> Result<OpCounter, BenchError> {
    let likelihoods = g
        .graph
        .variables()
        .iter()
        .map(|&v| DiscreteFactor::binary_unary(v, 0.5, 0.5))
        .collect::<Result<Vec<_>, _>>()
        .map_err(DecodeError::from)?;
    Ok(run_decoder(&g.graph, &g.schedule, &likelihoods, None, 1, StopRule::FixedIters)?.ops)
}

struct HammingSample {
    tallies: [Tally; 3],
    kl: [f64; 2],
}

/// Decodes random Hamming (7,4) packets with the factor graph, the cluster
/// graph and exact inference, at each SNR in turn.
pub fn run_hamming_study(packets: u64, snr_points: &[f64], base_seed: u64) -> Result<ComparisonReport, BenchError> {
    if packets == 0 {
        return Err(BenchError::Config("need at least one packet per point".into()));
    }
    let h = hamming_74();
    let encoder = Encoder::new(&h)?;
    let factors = parity_factors_from_h(&h);
    let n = h.n_cols();
    let k = encoder.parameters().k as u64;
    let factor = PreparedGraph::new(&h, GraphKind::Bethe)?;
    let cluster = PreparedGraph::new(&h, GraphKind::Ltrip)?;

    let mut points = Vec::with_capacity(snr_points.len());
    for (point, &snr) in snr_points.iter().enumerate() {
        let channel = ChannelConfig::from_snr_db(snr, encoder.parameters().rate())?;
        let samples = (0..packets)
            .into_par_iter()
            .map(|i| -> Result<HammingSample, BenchError> {
                let packet = Packet::generate(&encoder, &channel, packet_seed(base_seed, point, packets, i))?;
                let exact = exact_marginals(&factors, &packet.likelihoods, n)?;
                let exact_errors = count_errors(&encoder, &hard_decision(&exact), &packet.message);
                let exact_tally = Tally { bit_errors: exact_errors, failures: u64::from(exact_errors > 0), ..Tally::default() };
                let mut kl = [0.0; 2];
                let mut tallies = [exact_tally, Tally::default(), Tally::default()];
                for (j, g) in [&factor, &cluster].into_iter().enumerate() {
                    let (tally, marginals) = decode_packet(g, &encoder, &packet, HAMMING_MAX_ITERS, StopRule::MessageMatch);
                    tallies[j + 1] = tally;
                    kl[j] = match marginals {
                        Some(m) => exact.iter().zip(&m).map(|(p, q)| kl_divergence(p, q)).sum::<Result<f64, _>>().map_err(DecodeError::from)?,
                        None => f64::INFINITY,
                    };
                }
                Ok(HammingSample { tallies, kl })
            })
            .collect::<Result<Vec<_>, _>>()?;

        let stats = |j: usize| {
            let t = samples.iter().fold(Tally::default(), |acc, s| acc + s.tallies[j]);
            let kl = if j == 0 { Quartiles::default() } else { Quartiles::of(&samples.iter().map(|s| s.kl[j - 1]).collect::<Vec<_>>()) };
            MethodStats {
                bit_errors: t.bit_errors,
                ber: t.bit_errors as f64 / (packets * k) as f64,
                frac_multi_iteration: t.multi_iteration as f64 / packets as f64,
                kl,
            }
        };
        points.push(HammingPoint { snr_db: snr, packets, exact: stats(0), factor: stats(1), cluster: stats(2) });
    }
    Ok(ComparisonReport { factor_ops: single_iteration_ops(&factor)?, cluster_ops: single_iteration_ops(&cluster)?, points })
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "operations per iteration")?;
        writeln!(f, "  graph    additions  multiplications")?;
        for (name, ops) in [("factor", self.factor_ops), ("cluster", self.cluster_ops)] {
            writeln!(f, "  {name:<8} {:>9}  {:>15}", ops.additions, ops.multiplications)?;
        }
        writeln!(f)?;
        writeln!(f, "snr_db,method,packets,bit_errors,ber,frac_multi_iter,kl_q1,kl_median,kl_q3")?;
        for p in &self.points {
            for (name, s) in [("exact", &p.exact), ("factor", &p.factor), ("cluster", &p.cluster)] {
                writeln!(
                    f,
                    "{},{name},{},{},{},{},{},{},{}",
                    p.snr_db, p.packets, s.bit_errors, s.ber, s.frac_multi_iteration, s.kl.q1, s.kl.median, s.kl.q3
                )?;
            }
        }
        Ok(())
    }
}
