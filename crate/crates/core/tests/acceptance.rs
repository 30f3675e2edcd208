//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with a
//! failure status if any criterion fails.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use common::{arb_factor, assignments, close, dense, union};
use ltrip_ldpc::bench::{run_ber_sweep, run_hamming_study, single_iteration_ops, PreparedGraph, SweepConfig, SweepRow};
use ltrip_ldpc::codec::{syndrome, Encoder};
use ltrip_ldpc::codes::{hamming_74, ldpc_40_20};
use ltrip_ldpc::factor::{make_parity_factor, DiscreteFactor, OpCounter, VariableId};
use ltrip_ldpc::graph::{ltrip_compile, verify_rip, GraphKind};
use ltrip_ldpc::inference::{attach_evidence, exact_marginals, lbu_sweep, run_decoder, BeliefState, StopRule};
use ltrip_ldpc::schedule::{build_layered_schedule, default_seeds, Direction};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// Binomial standard error of a bit error rate estimated from `bits` bits.
fn se(p: f64, bits: f64) -> f64 {
    (p * (1.0 - p) / bits).sqrt()
}

fn uniform(n: usize) -> Vec<DiscreteFactor> {
    (0..n).map(|i| DiscreteFactor::binary_unary(VariableId::from(i), 0.5, 0.5).unwrap()).collect()
}

fn criterion_1() -> Verdict {
    let h = hamming_74();
    let f = single_iteration_ops(&PreparedGraph::new(&h, GraphKind::Bethe).unwrap()).unwrap();
    let c = single_iteration_ops(&PreparedGraph::new(&h, GraphKind::Ltrip).unwrap()).unwrap();
    let got = (f.additions, f.multiplications, c.additions, c.multiplications);
    verdict(got == (168, 264, 76, 116), format!("factor {}+ {}x, cluster {}+ {}x", got.0, got.1, got.2, got.3))
}

fn criterion_2() -> Verdict {
    let h = hamming_74();
    let bethe = PreparedGraph::new(&h, GraphKind::Bethe).unwrap();
    let b = &bethe.graph;
    let bethe_ok = b.clusters().len() == 10 && b.sepsets().len() == 12 && b.sepsets().iter().all(|s| s.variables.len() == 1);
    let ltrip = PreparedGraph::new(&h, GraphKind::Ltrip).unwrap();
    let l = &ltrip.graph;
    let mut sizes: Vec<usize> = l.sepsets().iter().map(|s| s.variables.len()).collect();
    sizes.sort();
    let ev = attach_evidence(l, &ltrip.schedule, &uniform(7)).unwrap();
    let mut st = BeliefState::initialize(l, &ev).unwrap();
    let mut ops = OpCounter::new();
    lbu_sweep(&mut st, l, &ltrip.schedule, Direction::Forward, &mut ops).unwrap();
    let ltrip_ok = l.clusters().len() == 3 && l.sepsets().len() == 3 && sizes == [1, 2, 2] && ops.additions == 38;
    verdict(
        bethe_ok && ltrip_ok,
        format!(
            "bethe {} clusters / {} edges; ltrip {} clusters / {} edges, sepset sizes {:?}, {} additions per sweep",
            b.clusters().len(),
            b.sepsets().len(),
            l.clusters().len(),
            l.sepsets().len(),
            sizes,
            ops.additions
        ),
    )
}

fn criterion_3() -> Verdict {
    let h = hamming_74();
    let graphs = [
        ("hamming bethe", PreparedGraph::new(&h, GraphKind::Bethe).unwrap(), 7),
        ("hamming ltrip", PreparedGraph::new(&h, GraphKind::Ltrip).unwrap(), 7),
        ("(40,20) ltrip", PreparedGraph::new(&ldpc_40_20(), GraphKind::Ltrip).unwrap(), 40),
    ];
    let mut failed = Vec::new();
    for (name, g, n) in &graphs {
        for v in 0..*n {
            if !verify_rip(&g.graph, VariableId(v)) {
                failed.push(format!("{name} b{v}"));
            }
        }
    }
    verdict(failed.is_empty(), if failed.is_empty() { "all variables satisfy RIP".into() } else { failed.join(", ") })
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut bad = 0;
    for h in [hamming_74(), ldpc_40_20()] {
        let enc = Encoder::new(&h).unwrap();
        for _ in 0..1000 {
            let m: Vec<u8> = (0..enc.parameters().k).map(|_| rng.random_range(0..2)).collect();
            let c = enc.encode(&m).unwrap();
            if syndrome(&h, &c.bits).unwrap().iter().any(|&s| s != 0) {
                bad += 1;
            }
        }
    }
    verdict(bad == 0, format!("{bad} of 2000 codewords with nonzero syndrome"))
}

/// Random pairwise factors along a random tree over `n` variables; some
/// edges carry a parity constraint instead of positive random weights.
fn random_tree(rng: &mut ChaCha8Rng, n: usize) -> Vec<DiscreteFactor> {
    (1..n)
        .map(|child| {
            let parent = rng.random_range(0..child);
            let vars = [VariableId::from(parent), VariableId::from(child)];
            if rng.random_bool(0.25) {
                make_parity_factor(&vars).unwrap()
            } else {
                let rows: Vec<([u8; 2], f64)> = (0..4u8).map(|a| ([a & 1, a >> 1], rng.random_range(0.05..1.0))).collect();
                DiscreteFactor::from_binary(&vars, rows).unwrap()
            }
        })
        .collect()
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(2..=10);
        let factors = random_tree(&mut rng, n);
        let ev: Vec<DiscreteFactor> = (0..n)
            .map(|i| {
                let p = rng.random_range(0.02..0.98);
                DiscreteFactor::binary_unary(VariableId::from(i), 1.0 - p, p).unwrap()
            })
            .collect();
        let g = ltrip_compile(&factors).unwrap();
        let s = build_layered_schedule(&g, &default_seeds(&g)).unwrap();
        let r = run_decoder(&g, &s, &ev, None, 1, StopRule::FixedIters).unwrap();
        let exact = exact_marginals(&factors, &ev, n).unwrap();
        for (a, b) in r.bit_marginals.iter().zip(&exact) {
            for state in 0..2 {
                worst = worst.max((a.value_at(state) - b.value_at(state)).abs());
            }
        }
    }
    verdict(worst <= 1e-9, format!("max deviation {worst:.3e} over 50 trees"))
}

const HAMMING_SNRS: [f64; 3] = [0.0, 2.0, 4.0];

/// Criteria 6 and 8 share one 200 000-packet study.
fn criteria_6_and_8() -> [Verdict; 2] {
    let report = run_hamming_study(200_000, &HAMMING_SNRS, 6).unwrap();
    let mut ok6 = true;
    let mut ok8 = true;
    let mut d6 = Vec::new();
    let mut d8 = Vec::new();
    for p in &report.points {
        let bits = (p.packets * 4) as f64;
        let (e, f, c) = (p.exact.ber, p.factor.ber, p.cluster.ber);
        ok6 &= c <= f + 3.0 * se(f, bits) && f >= e - 3.0 * se(e, bits) && c >= e - 3.0 * se(e, bits);
        d6.push(format!("{} dB exact {e:.5} factor {f:.5} cluster {c:.5}", p.snr_db));
        ok8 &= p.factor.frac_multi_iteration >= p.cluster.frac_multi_iteration;
        d8.push(format!(
            "{} dB >1 iteration factor {:.4} cluster {:.4}",
            p.snr_db, p.factor.frac_multi_iteration, p.cluster.frac_multi_iteration
        ));
    }
    [verdict(ok6, d6.join("; ")), verdict(ok8, d8.join("; "))]
}

fn criterion_7() -> Verdict {
    let report = run_hamming_study(10_000, &HAMMING_SNRS, 7).unwrap();
    let ok = report.points.iter().all(|p| p.cluster.kl.median <= p.factor.kl.median);
    let detail: Vec<String> = report
        .points
        .iter()
        .map(|p| format!("{} dB median KL factor {:.3e} cluster {:.3e}", p.snr_db, p.factor.kl.median, p.cluster.kl.median))
        .collect();
    verdict(ok, detail.join("; "))
}

fn criterion_9() -> Verdict {
    let cfg = SweepConfig { base_seed: 9, ..SweepConfig::desk("ldpc40") };
    let rows = run_ber_sweep(&cfg).unwrap();
    let pick = |label: &str| -> Vec<&SweepRow> { rows.iter().filter(|r| r.graph == label).collect() };
    let (factor, cluster) = (pick("factor"), pick("cluster"));
    let bits = (cfg.packets * 20) as f64;
    let mut a = true;
    let mut b = true;
    let mut gains = Vec::new();
    let mut detail = Vec::new();
    for (f, c) in factor.iter().zip(&cluster) {
        a &= c.ber <= f.ber + 3.0 * se(f.ber, bits);
        if f.snr_db <= 3.0 {
            b &= c.avg_iterations <= f.avg_iterations;
            gains.push((f.avg_iterations - c.avg_iterations) / f.avg_iterations);
        }
        detail.push(format!(
            "{} dB ber {:.2e}/{:.2e} iters {:.3}/{:.3}",
            f.snr_db, f.ber, c.ber, f.avg_iterations, c.avg_iterations
        ));
    }
    let gain = gains.iter().sum::<f64>() / gains.len() as f64;
    let c = (0.04..=0.24).contains(&gain);
    verdict(
        a && b && c,
        format!(
            "(a) {} (b) {} (c) {} mean iteration gain {:.1}% [factor/cluster: {}]",
            if a { "ok" } else { "FAIL" },
            if b { "ok" } else { "FAIL" },
            if c { "ok" } else { "FAIL" },
            100.0 * gain,
            detail.join("; ")
        ),
    )
}

fn criterion_10() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_ltrip-ldpc");
    let runs: Vec<Vec<&str>> = vec![
        vec!["compile-graph", "--code", "ldpc40", "--graph", "both"],
        vec!["compile-graph", "--code", "hamming74", "--graph", "both"],
        vec!["encode", "--code", "ldpc40", "--seed", "3"],
        vec!["decode", "--code", "ldpc40", "--snr", "1", "--seed", "3"],
        vec!["hamming-study", "--packets", "2000", "--snr", "0:4:3", "--seed", "3"],
        vec!["sweep", "--code", "ldpc40", "--snr", "0:8:9", "--packets", "100", "--seed", "3"],
    ];
    let mut differing = Vec::new();
    for args in &runs {
        let outputs: Vec<Vec<u8>> = (0..2)
            .map(|i| {
                let path = dir.path().join(format!("{}-{i}.out", args[0]));
                let mut cmd = Command::new(bin);
                cmd.args(args);
                let takes_out = matches!(args[0], "compile-graph" | "hamming-study" | "sweep");
                if takes_out {
                    cmd.args(["--out", path.to_str().unwrap()]);
                }
                let out = cmd.output().expect("binary runs");
                assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
                if takes_out {
                    std::fs::read(&path).unwrap()
                } else {
                    out.stdout
                }
            })
            .collect();
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            differing.push(args.join(" "));
        }
    }
    verdict(
        differing.is_empty(),
        if differing.is_empty() { format!("{} subcommand runs byte-identical", runs.len()) } else { differing.join(", ") },
    )
}

fn criterion_11() -> Verdict {
    let config = Config { cases: 1000, failure_persistence: None, ..Config::default() };
    let mut failures = Vec::new();
    let mut check = |name: &str, result: Result<(), String>| {
        if let Err(e) = result {
            failures.push(format!("{name}: {e}"));
        }
    };

    let mut runner = TestRunner::new(config.clone());
    check(
        "product commutes",
        runner
            .run(&(arb_factor(), arb_factor()), |(f, g)| {
                let (vars, cards) = union(&[&f, &g]);
                let fg = f.product(&g, &mut OpCounter::new()).unwrap();
                let gf = g.product(&f, &mut OpCounter::new()).unwrap();
                let (df, dg) = (dense(&f, &vars, &cards), dense(&g, &vars, &cards));
                let oracle = df.iter().map(|(a, x)| (a.clone(), x * dg[a])).collect();
                prop_assert!(close(&dense(&fg, &vars, &cards), &oracle, 1e-12));
                prop_assert!(close(&dense(&fg, &vars, &cards), &dense(&gf, &vars, &cards), 1e-12));
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );

    let mut runner = TestRunner::new(config.clone());
    check(
        "product associates",
        runner
            .run(&(arb_factor(), arb_factor(), arb_factor()), |(f, g, h)| {
                let mut ops = OpCounter::new();
                let left = f.product(&g, &mut ops).unwrap().product(&h, &mut ops).unwrap();
                let right = f.product(&g.product(&h, &mut ops).unwrap(), &mut ops).unwrap();
                let (vars, cards) = union(&[&f, &g, &h]);
                prop_assert!(close(&dense(&left, &vars, &cards), &dense(&right, &vars, &cards), 1e-12));
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );

    let mut runner = TestRunner::new(config.clone());
    check(
        "divide undoes product",
        runner
            .run(&(arb_factor(), arb_factor()), |(f, g)| {
                let mut ops = OpCounter::new();
                let back = f.product(&g, &mut ops).unwrap().divide(&g, &mut ops).unwrap();
                let (vars, cards) = union(&[&f, &g]);
                let (df, dg, db) = (dense(&f, &vars, &cards), dense(&g, &vars, &cards), dense(&back, &vars, &cards));
                for a in assignments(&cards) {
                    let want = if dg[&a] > 0.0 { df[&a] } else { 0.0 };
                    prop_assert!((db[&a] - want).abs() <= 1e-12 * want.max(1.0));
                }
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );

    let mut runner = TestRunner::new(config.clone());
    check(
        "marginalization distributes",
        runner
            .run(&(arb_factor(), arb_factor(), proptest::collection::vec(any::<bool>(), 6)), |(f, g, extra)| {
                let (vars, cards) = union(&[&f, &g]);
                let keep: Vec<VariableId> = vars.iter().copied().filter(|v| g.contains(*v) || extra[v.index()]).collect();
                let kcards: Vec<u32> = keep.iter().map(|v| common::card_of(v.0)).collect();
                let mut ops = OpCounter::new();
                let fg = f.product(&g, &mut ops).unwrap();
                let lhs = fg.marginalize(&keep, &mut ops).unwrap();
                let f_keep: Vec<VariableId> = keep.iter().copied().filter(|v| f.contains(*v)).collect();
                let rhs = f.marginalize(&f_keep, &mut ops).unwrap().product(&g, &mut ops).unwrap();
                prop_assert!(close(&dense(&lhs, &keep, &kcards), &dense(&rhs, &keep, &kcards), 1e-10));
                let mut oracle = common::Dense::new();
                for (a, x) in dense(&fg, &vars, &cards) {
                    let key: Vec<u32> = vars.iter().zip(&a).filter(|(v, _)| keep.contains(v)).map(|(_, &s)| s).collect();
                    *oracle.entry(key).or_insert(0.0) += x;
                }
                prop_assert!(close(&dense(&lhs, &keep, &kcards), &oracle, 1e-10));
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );

    let mut runner = TestRunner::new(config);
    check(
        "parity support",
        runner
            .run(&proptest::sample::subsequence((0u32..12).collect::<Vec<_>>(), 1..=10), |ids| {
                let vars: Vec<VariableId> = ids.iter().map(|&i| VariableId(i)).collect();
                let p = make_parity_factor(&vars).unwrap();
                prop_assert_eq!(p.len() as u64, 1u64 << (vars.len() - 1));
                for (a, v) in p.iter() {
                    prop_assert!(v == 1.0 && a.iter().sum::<u32>() % 2 == 0);
                }
                Ok(())
            })
            .map_err(|e: proptest::test_runner::TestError<_>| e.to_string()),
    );

    verdict(failures.is_empty(), if failures.is_empty() { "5 properties x 1000 cases".into() } else { failures.join("; ") })
}

fn timed(id: u32, budget: Duration, f: impl FnOnce() -> Verdict) -> Verdict {
    let start = Instant::now();
    let mut v = f();
    let elapsed = start.elapsed();
    if elapsed > budget {
        v.pass = false;
        v.detail = format!("{} (over the {:?} budget)", v.detail, budget);
    }
    report(id, &v, elapsed);
    v
}

fn report(id: u32, v: &Verdict, elapsed: Duration) {
    println!("criterion {id:>2}: {} [{:.1}s] {}", if v.pass { "PASS" } else { "FAIL" }, elapsed.as_secs_f64(), v.detail);
}

fn main() {
    let secs = Duration::from_secs;
    let mut verdicts = vec![
        timed(1, secs(1), criterion_1),
        timed(2, secs(1), criterion_2),
        timed(3, secs(1), criterion_3),
        timed(4, secs(1), criterion_4),
        timed(5, secs(10), criterion_5),
    ];

    let start = Instant::now();
    let [mut v6, v8] = criteria_6_and_8();
    let elapsed = start.elapsed();
    if elapsed > secs(600) {
        v6.pass = false;
        v6.detail.push_str(" (over the 600s budget)");
    }
    report(6, &v6, elapsed);
    verdicts.push(v6);
    verdicts.push(timed(7, secs(120), criterion_7));
    report(8, &v8, elapsed);
    verdicts.push(v8);

    verdicts.push(timed(9, secs(1800), criterion_9));
    verdicts.push(timed(10, secs(1800), criterion_10));
    verdicts.push(timed(11, secs(30), criterion_11));

    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!("acceptance: {} passed, {failed} failed", verdicts.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
