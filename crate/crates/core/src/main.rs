use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ltrip_ldpc::bench::{
    graph_label, run_ber_sweep, run_hamming_study, snr_grid, write_sweep_csv, GraphChoice, Packet, PreparedGraph,
    SweepConfig, HAMMING_MAX_ITERS, SWEEP_MAX_ITERS,
};
use ltrip_ldpc::channel::ChannelConfig;
use ltrip_ldpc::codec::{syndrome, Encoder};
use ltrip_ldpc::codes::load_code;
use ltrip_ldpc::inference::{hard_decision, run_decoder, StopRule};

#[derive(Parser)]
#[command(name = "ltrip-ldpc", version, about = "LDPC decoding on factor graphs and LTRIP cluster graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphArg {
    Factor,
    Cluster,
    Both,
}

impl From<GraphArg> for GraphChoice {
    fn from(g: GraphArg) -> Self {
        match g {
            GraphArg::Factor => GraphChoice::Factor,
            GraphArg::Cluster => GraphChoice::Cluster,
            GraphArg::Both => GraphChoice::Both,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StopArg {
    Message,
    Syndrome,
}

impl From<StopArg> for StopRule {
    fn from(s: StopArg) -> Self {
        match s {
            StopArg::Message => StopRule::MessageMatch,
            StopArg::Syndrome => StopRule::SyndromeZero,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct SnrRange {
    lo: f64,
    hi: f64,
    points: usize,
}

fn parse_snr_range(s: &str) -> Result<SnrRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, points] = parts.as_slice() else {
        return Err(format!("expected lo:hi:points, got '{s}'"));
    };
    let num = |t: &str| t.parse::<f64>().map_err(|_| format!("'{t}' is not a number"));
    let points = points.parse::<usize>().map_err(|_| format!("'{points}' is not a point count"))?;
    Ok(SnrRange { lo: num(lo)?, hi: num(hi)?, points })
}

#[derive(Subcommand)]
enum Command {
    /// Print the cluster graph of a code.
    CompileGraph {
        /// Built-in code (hamming74, ldpc40) or alist path.
        #[arg(long, default_value = "hamming74")]
        code: String,
        #[arg(long, value_enum, default_value = "cluster")]
        graph: GraphArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode a message, given as a bit string or drawn from the seed.
    Encode {
        #[arg(long, default_value = "hamming74")]
        code: String,
        #[arg(long)]
        message: Option<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Send one random packet over the channel and decode it verbosely.
    Decode {
        #[arg(long, default_value = "hamming74")]
        code: String,
        #[arg(long, value_enum, default_value = "both")]
        graph: GraphArg,
        /// Channel SNR in dB.
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        snr: f64,
        #[arg(long, default_value_t = SWEEP_MAX_ITERS)]
        max_iters: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value = "message")]
        stop: StopArg,
    },
    /// Compare factor graph, cluster graph and exact decoding of the (7,4) Hamming code.
    HammingStudy {
        #[arg(long, default_value = "0:4:3", value_parser = parse_snr_range, allow_hyphen_values = true)]
        snr: SnrRange,
        #[arg(long, default_value_t = 200_000)]
        packets: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo BER sweep, written as CSV.
    Sweep {
        #[arg(long, default_value = "ldpc40")]
        code: String,
        #[arg(long, value_enum, default_value = "both")]
        graph: GraphArg,
        /// Defaults to 0:8:9, or 0:8:36 with --full.
        #[arg(long, value_parser = parse_snr_range, allow_hyphen_values = true)]
        snr: Option<SnrRange>,
        /// Defaults to 20000, or 1000000 with --full.
        #[arg(long)]
        packets: Option<u64>,
        #[arg(long, default_value_t = SWEEP_MAX_ITERS)]
        max_iters: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value = "message")]
        stop: StopArg,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use the large grid and packet count.
        #[arg(long)]
        full: bool,
    },
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn parse_bits(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => bail!("message must consist of 0 and 1, found '{c}'"),
        })
        .collect()
}

fn bit_string(bits: &[u8]) -> String {
    bits.iter().map(|b| char::from(b'0' + b)).collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::CompileGraph { code, graph, out } => {
            let h = load_code(&code)?;
            let mut w = output(out.as_ref())?;
            for kind in GraphChoice::from(graph).kinds() {
                let g = PreparedGraph::new(&h, kind)?;
                write!(w, "{}", g.graph.dump())?;
            }
            w.flush()?;
        }
        Command::Encode { code, message, seed } => {
            let h = load_code(&code)?;
            let enc = Encoder::new(&h)?;
            let message = match message {
                Some(m) => parse_bits(&m)?,
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (0..enc.parameters().k).map(|_| u8::from(rng.random::<bool>())).collect()
                }
            };
            let c = enc.encode(&message)?;
            println!("message  {}", bit_string(&message));
            println!("codeword {}", bit_string(&c.bits));
            println!("syndrome {}", bit_string(&syndrome(&h, &c.bits)?));
        }
        Command::Decode { code, graph, snr, max_iters, seed, stop } => {
            let h = load_code(&code)?;
            let enc = Encoder::new(&h)?;
            let channel = ChannelConfig::from_snr_db(snr, enc.parameters().rate())?;
            let packet = Packet::generate(&enc, &channel, seed)?;
            let truth = packet.truth(&enc);
            let mut w = output(None)?;
            writeln!(w, "snr_db {snr} sigma2 {}", channel.sigma2())?;
            writeln!(w, "message  {}", bit_string(&packet.message))?;
            writeln!(w, "codeword {}", bit_string(&packet.codeword))?;
            writeln!(w, "channel  {}", bit_string(&packet.channel_decision()))?;
            for kind in GraphChoice::from(graph).kinds() {
                let g = PreparedGraph::new(&h, kind)?;
                let r = run_decoder(&g.graph, &g.schedule, &packet.likelihoods, Some(&truth), max_iters, stop.into())?;
                writeln!(w, "{}: iterations {} stopped_by {:?}", graph_label(kind), r.iterations_used, r.stopped_by)?;
                writeln!(w, "  decoded  {}", bit_string(&hard_decision(&r.bit_marginals)))?;
                for (bit, m) in r.bit_marginals.iter().enumerate() {
                    writeln!(w, "  b{bit} P(1) = {:.6}", m.value_at(1))?;
                }
            }
            w.flush()?;
        }
        Command::HammingStudy { snr, packets, seed, out } => {
            let report = run_hamming_study(packets, &snr_grid(snr.lo, snr.hi, snr.points), seed)?;
            let mut w = output(out.as_ref())?;
            writeln!(w, "max iterations {HAMMING_MAX_ITERS}")?;
            write!(w, "{report}")?;
            w.flush()?;
        }
        Command::Sweep { code, graph, snr, packets, max_iters, seed, stop, out, full } => {
            let base = if full { SweepConfig::full(&code) } else { SweepConfig::desk(&code) };
            let snr = snr.unwrap_or(SnrRange { lo: base.snr_lo, hi: base.snr_hi, points: base.points });
            let cfg = SweepConfig {
                graphs: graph.into(),
                snr_lo: snr.lo,
                snr_hi: snr.hi,
                points: snr.points,
                packets: packets.unwrap_or(base.packets),
                max_iters,
                base_seed: seed,
                stop: stop.into(),
                ..base
            };
            let rows = run_ber_sweep(&cfg)?;
            write_sweep_csv(&rows, output(out.as_ref())?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_ranges() {
        assert_eq!(parse_snr_range("0:8:9"), Ok(SnrRange { lo: 0.0, hi: 8.0, points: 9 }));
        assert_eq!(parse_snr_range("-1.5:2:4"), Ok(SnrRange { lo: -1.5, hi: 2.0, points: 4 }));
        assert!(parse_snr_range("0:8").is_err());
        assert!(parse_snr_range("a:8:9").is_err());
    }

    #[test]
    fn bits() {
        assert_eq!(parse_bits("1011").unwrap(), vec![1, 0, 1, 1]);
        assert!(parse_bits("10x").is_err());
        assert_eq!(bit_string(&[0, 1, 1]), "011");
    }
}
