//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::HashMap;
use std::fs;
use std::time::{Duration, Instant};

use common::oracle::exhaustive_feasible;
use common::{random_network, random_vnr, rng};
use devine_cli::{cmd_compare, cmd_run, CompareArgs, ConfigArgs, RunArgs};
use devine_core::baselines::{best_fit, first_fit, grc_embed, GrcParams};
use devine_core::embedding::{release, verify_solution, AllocationLedger, EmbeddingSolution};
use devine_core::generate::GeneratorConfig;
use devine_core::local::{embed, LocalEmbedOutcome, LocalEmbedParams};
use devine_core::network::{NodeId, RequestId};
use devine_core::protocol::{
    elect, run_election, select_leaders, CandidateSource, ElectionParams, FifoTransport, LeaderRing, SnapshotEmbedder,
};
use devine_core::sim::{compare_algorithms, run_simulation, Algorithm, SimConfig, SimReport};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::seq::SliceRandom;
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

struct Scripted(HashMap<(NodeId, RequestId), Option<f64>>);

impl CandidateSource for Scripted {
    fn evaluate(&mut self, node: NodeId, request_id: RequestId) -> Option<LocalEmbedOutcome> {
        let metric = *self.0.get(&(node, request_id))?;
        Some(LocalEmbedOutcome {
            feasible: metric.is_some(),
            solution: metric.map(|m| EmbeddingSolution {
                request_id,
                node_mapping: vec![node],
                path_mapping: vec![],
                revenue: 0.0,
                cost: 0.0,
                metric: m,
            }),
            inspected_count: 1,
            max_depth_reached: 0,
        })
    }
}

fn random_ring<R: Rng>(r: &mut R, l: usize, universe: usize) -> Vec<NodeId> {
    let mut ids: Vec<NodeId> = (0..universe).collect();
    ids.shuffle(r);
    ids.truncate(l);
    ids
}

fn message_bound() -> Verdict {
    let mut r = rng(1);
    for i in 0..1000u64 {
        let l = r.random_range(2..=10);
        let ring = random_ring(&mut r, l, 100);
        let feasible_p = r.random_range(0.0..1.0);
        let mut src = Scripted(
            ring.iter().map(|&n| ((n, i), r.random_bool(feasible_p).then(|| r.random_range(0..5) as f64))).collect(),
        );
        let out = match elect(&LeaderRing::new(ring).unwrap(), i, &mut src, &mut FifoTransport::new()) {
            Ok(o) => o,
            Err(e) => return verdict(false, format!("election {i} failed: {e}")),
        };
        let t = &out.trace;
        if t.embedding_messages > 2 * l - 1 || t.embedded_messages != l {
            return verdict(
                false,
                format!("election {i}, L={l}: {} EMBEDDING, {} EMBEDDED", t.embedding_messages, t.embedded_messages),
            );
        }
    }
    verdict(true, "1000 elections, L in 2..=10, EMBEDDING <= 2L-1 and EMBEDDED = L in all")
}

fn argmax_oracle() -> Verdict {
    let mut r = rng(2);
    let mut full_key = 0;
    for i in 0..500u64 {
        let n = r.random_range(10..=60);
        let net = random_network(&mut r, n, 0.1, (10, 70), (5, 50));
        let k = r.random_range(2..=7);
        let vnr = random_vnr(&mut r, i, k, (5, 35), (1, 25));
        let params =
            LocalEmbedParams { alpha: r.random_range(0.5..4.0), beta: r.random_range(1..=3), ..Default::default() };
        let l = r.random_range(1..=10.min(n));
        let ring = select_leaders(&net, r.random_range(0..n), l, &mut r).unwrap();
        let mut src = SnapshotEmbedder { net: &net, vnr: &vnr, params: &params };
        let out = elect(&ring, i, &mut src, &mut FifoTransport::new()).unwrap();
        let direct: Vec<(Option<f64>, NodeId)> =
            ring.members().iter().map(|&m| (embed(m, &net, &vnr, &params).metric(), m)).collect();
        let best = direct.iter().filter_map(|&(m, id)| m.map(|m| (m, id))).reduce(|a, b| {
            if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        });
        let got_metric = out.decision.solution.as_ref().map(|s| s.metric);
        match best {
            Some((m, id)) => {
                full_key += 1;
                if got_metric != Some(m) || out.decision.winner != id {
                    return verdict(
                        false,
                        format!("election {i}: got ({got_metric:?}, {}) want ({m}, {id})", out.decision.winner),
                    );
                }
            }
            None if got_metric.is_some() => return verdict(false, format!("election {i}: solution from nowhere")),
            None => {}
        }
    }
    verdict(true, format!("500 elections match direct local embeds ({full_key} with a feasible leader)"))
}

fn ties() -> Verdict {
    let mut r = rng(3);
    for l in 2..=50 {
        for round in 0..5u64 {
            let ring = random_ring(&mut r, l, 1000);
            let mut src = Scripted(ring.iter().map(|&n| ((n, round), Some(4.0))).collect());
            let out =
                elect(&LeaderRing::new(ring.clone()).unwrap(), round, &mut src, &mut FifoTransport::new()).unwrap();
            let lowest = *ring.iter().min().unwrap();
            let t = &out.trace;
            if out.decision.winner != lowest || t.embedding_messages > 2 * l - 1 || t.embedded_messages != l {
                return verdict(
                    false,
                    format!(
                        "L={l}: winner {} (want {lowest}), {} / {}",
                        out.decision.winner, t.embedding_messages, t.embedded_messages
                    ),
                );
            }
        }
    }
    verdict(true, "L = 2..=50, 5 rings each: lowest id wins within bounds")
}

fn conservation() -> Verdict {
    // every algorithm through the simulator
    for algorithm in Algorithm::ALL {
        for seed in 0..3 {
            let cfg = SimConfig {
                generator: GeneratorConfig { server_count: 30, seed, ..Default::default() },
                algorithm,
                duration: 200.0,
                ..Default::default()
            };
            match run_simulation(&cfg) {
                Ok(rep) if rep.summary.conservation_ok => {}
                Ok(_) => return verdict(false, format!("{algorithm} seed {seed}: residuals differ from capacity")),
                Err(e) => return verdict(false, format!("{algorithm} seed {seed}: {e}")),
            }
        }
    }
    // and an independent allocate/release schedule compared field by field
    let mut r = rng(4);
    let mut net = random_network(&mut r, 25, 0.2, (50, 150), (30, 90));
    let mut ledger = AllocationLedger::new();
    let params = ElectionParams { leaders: 4, ..Default::default() };
    let mut live = Vec::new();
    for id in 0..400u64 {
        let k = r.random_range(2..=6);
        let vnr = random_vnr(&mut r, id, k, (3, 30), (1, 20));
        let primary = r.random_range(0..25);
        let res =
            run_election(&mut net, &mut ledger, &vnr, primary, &params, &mut FifoTransport::new(), &mut r).unwrap();
        if res.accepted {
            live.push(id);
        }
        while !live.is_empty() && r.random_bool(0.45) {
            let i = r.random_range(0..live.len());
            release(&mut net, live.swap_remove(i), &mut ledger).unwrap();
        }
    }
    for id in live {
        release(&mut net, id, &mut ledger).unwrap();
    }
    let nodes_ok = net.nodes().iter().all(|n| n.residual == n.capacity);
    let links_ok = net.links().iter().all(|l| l.bandwidth_residual == l.bandwidth_capacity);
    verdict(nodes_ok && links_ok, "12 simulations + 400-request election schedule restore capacity exactly")
}

fn budgets() -> Verdict {
    let mut runner = TestRunner::new(PropConfig { cases: 1000, failure_persistence: None, ..PropConfig::default() });
    let strategy = (any::<u64>(), 0.1f64..5.0, 0u32..5);
    let result = runner.run(&strategy, |(seed, alpha, beta)| {
        let mut r = rng(seed);
        let n = r.random_range(2..=40);
        let net = random_network(&mut r, n, 0.12, (10, 80), (5, 60));
        let k = r.random_range(1..=10);
        let vnr = random_vnr(&mut r, 1, k, (5, 40), (1, 30));
        let params = LocalEmbedParams { alpha, beta, ..Default::default() };
        let out = embed(r.random_range(0..n), &net, &vnr, &params);
        prop_assert!(out.inspected_count <= (alpha * k as f64).ceil() as usize);
        prop_assert!(out.max_depth_reached <= beta);
        Ok(())
    });
    match result {
        Ok(()) => verdict(true, "1000 random instances: inspected <= ceil(alpha*|V_v|), depth <= beta"),
        Err(e) => verdict(false, e.to_string()),
    }
}

fn soundness() -> Verdict {
    let params = LocalEmbedParams::default();
    let grc = GrcParams::default();
    let (mut instances, mut infeasible) = (0, 0);
    for seed in 0..300u64 {
        let mut r = rng(10_000 + seed);
        let n = r.random_range(1..=5);
        let k = r.random_range(1..=3);
        let net = random_network(&mut r, n, 0.4, (10, 40), (5, 30));
        let vnr = random_vnr(&mut r, seed, k, (5, 30), (5, 30));
        let exists = exhaustive_feasible(&net, &vnr, false);
        instances += 1;
        infeasible += usize::from(!exists);
        let mut outs = vec![
            ("firstfit", first_fit(&net, &vnr, &params)),
            ("bestfit", best_fit(&net, &vnr, &params)),
            ("grc", grc_embed(&net, &vnr, &params, &grc).unwrap()),
        ];
        outs.extend((0..n).map(|root| ("local", embed(root, &net, &vnr, &params))));
        for (name, out) in &outs {
            if let Some(sol) = &out.solution {
                if let Err(e) = verify_solution(&net, &vnr, sol, false) {
                    return verdict(false, format!("instance {seed}: {name} produced an invalid solution: {e}"));
                }
            }
            if !exists && out.feasible {
                return verdict(false, format!("instance {seed}: {name} feasible where the oracle finds nothing"));
            }
        }
        let mut live = net.clone();
        let mut ledger = AllocationLedger::new();
        let ep = ElectionParams { leaders: n, local: params.clone() };
        let res = run_election(&mut live, &mut ledger, &vnr, 0, &ep, &mut FifoTransport::new(), &mut r).unwrap();
        if !exists && res.accepted {
            return verdict(false, format!("instance {seed}: election accepted an impossible request"));
        }
        if let Some(sol) = &res.solution {
            if let Err(e) = verify_solution(&net, &vnr, sol, false) {
                return verdict(false, format!("instance {seed}: election solution invalid: {e}"));
            }
        }
    }
    verdict(true, format!("{instances} instances ({infeasible} infeasible), every embedder and the election sound"))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len().is_multiple_of(2) {
        (xs[m - 1] + xs[m]) / 2.0
    } else {
        xs[m]
    }
}

/// Returns (a, b, c) verdicts.
fn desk_scale() -> [Verdict; 3] {
    let seeds: Vec<u64> = (0..10).collect();
    let mut cfgs = Vec::new();
    for &algorithm in &Algorithm::ALL {
        for &seed in &seeds {
            cfgs.push(SimConfig {
                generator: GeneratorConfig { server_count: 50, seed, ..Default::default() },
                algorithm,
                duration: 500.0,
                ..Default::default()
            });
        }
    }
    let reports = compare_algorithms(&cfgs).expect("desk-scale runs");
    let get = |a: Algorithm, s: u64| -> &SimReport {
        reports.iter().find(|r| r.summary.algorithm == a && r.summary.seed == s).unwrap()
    };
    let baselines = [Algorithm::FirstFit, Algorithm::BestFit, Algorithm::Grc];
    let (mut a, mut b, mut c) = (0, 0, 0);
    for &s in &seeds {
        let d = &get(Algorithm::Devine, s).summary;
        if baselines.iter().all(|&x| d.revenue_to_cost > get(x, s).summary.revenue_to_cost) {
            a += 1;
        }
        if [Algorithm::FirstFit, Algorithm::BestFit]
            .iter()
            .all(|&x| d.acceptance_ratio >= get(x, s).summary.acceptance_ratio + 0.05)
        {
            b += 1;
        }
        let top_link = baselines.iter().all(|&x| d.mean_link_utilization > get(x, s).summary.mean_link_utilization);
        if top_link && d.mean_cost <= get(Algorithm::FirstFit, s).summary.mean_cost {
            c += 1;
        }
    }
    let med = |alg: Algorithm, f: fn(&SimReport) -> f64| median(seeds.iter().map(|&s| f(get(alg, s))).collect());
    let show = |f: fn(&SimReport) -> f64| {
        Algorithm::ALL.iter().map(|&x| format!("{x} {:.3}", med(x, f))).collect::<Vec<_>>().join(", ")
    };
    let cost_ok = seeds
        .iter()
        .filter(|&&s| get(Algorithm::Devine, s).summary.mean_cost <= get(Algorithm::FirstFit, s).summary.mean_cost)
        .count();
    [
        verdict(a >= 8, format!("r/c highest in {a}/10 seeds; medians {}", show(|r| r.summary.revenue_to_cost))),
        verdict(b >= 8, format!("acceptance +5pp over firstfit and bestfit in {b}/10 seeds; medians {}", show(|r| r.summary.acceptance_ratio))),
        verdict(
            c >= 8,
            format!(
                "link utilization highest with mean cost <= firstfit in {c}/10 seeds (cost part alone {cost_ok}/10); link medians {}",
                show(|r| r.summary.mean_link_utilization)
            ),
        ),
    ]
}

fn full_scale() -> Verdict {
    let clock = Instant::now();
    let rep = match run_simulation(&SimConfig::default()) {
        Ok(r) => r,
        Err(e) => return verdict(false, e.to_string()),
    };
    let elapsed = clock.elapsed();
    let epochs = &rep.series.epochs;
    let tail = &epochs[epochs.len() * 3 / 4..];
    let lo = tail.iter().map(|e| e.acceptance_ratio).fold(f64::INFINITY, f64::min);
    let hi = tail.iter().map(|e| e.acceptance_ratio).fold(f64::NEG_INFINITY, f64::max);
    verdict(
        elapsed < Duration::from_secs(300) && hi - lo < 0.05,
        format!(
            "{} arrivals in {:.2} s, final acceptance {:.4}, last-quartile range {:.4}",
            rep.summary.arrivals,
            elapsed.as_secs_f64(),
            rep.summary.acceptance_ratio,
            hi - lo
        ),
    )
}

fn determinism() -> Verdict {
    let root = tempfile::tempdir().unwrap();
    let base = ConfigArgs { seed: Some(17), servers: Some(40), duration: Some(200.0), ..Default::default() };
    let first = RunArgs { config: base.clone(), out_dir: root.path().join("a") };
    if let Err(e) = cmd_run(&first) {
        return verdict(false, e.to_string());
    }
    let manifest = root.path().join("a/manifest.json");
    let again = |dir: &str| RunArgs {
        config: ConfigArgs { config: Some(manifest.clone()), ..Default::default() },
        out_dir: root.path().join(dir),
    };
    for dir in ["b", "c"] {
        if let Err(e) = cmd_run(&again(dir)) {
            return verdict(false, e.to_string());
        }
    }
    let series = |d: &str| fs::read(root.path().join(d).join("series.csv")).unwrap();
    if series("a") != series("b") || series("b") != series("c") {
        return verdict(false, "series.csv differs between identical manifests");
    }
    let cmp = CompareArgs { config: base, algorithms: vec![], seeds: vec![1, 2], out_dir: root.path().join("cmp") };
    if let Err(e) = cmd_compare(&cmp) {
        return verdict(false, e.to_string());
    }
    let mut rd = csv::Reader::from_path(root.path().join("cmp/arrivals.csv")).unwrap();
    let header = rd.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let (alg, seed, hash) = (col("algorithm"), col("seed"), col("vnr_hash"));
    let mut streams: HashMap<(String, String), Vec<String>> = HashMap::new();
    for row in rd.records() {
        let row = row.unwrap();
        streams.entry((row[seed].to_string(), row[alg].to_string())).or_default().push(row[hash].to_string());
    }
    for s in ["1", "2"] {
        let base = &streams[&(s.to_string(), "devine".to_string())];
        for a in ["firstfit", "bestfit", "grc"] {
            if &streams[&(s.to_string(), a.to_string())] != base {
                return verdict(false, format!("seed {s}: {a} saw a different request stream"));
            }
        }
    }
    verdict(
        true,
        "3 runs from one manifest byte-identical; compare request hashes identical across 4 algorithms x 2 seeds",
    )
}

fn main() {
    type Check = (&'static str, &'static str, Option<Duration>, fn() -> Verdict);
    let checks: [Check; 6] = [
        ("1", "message complexity", Some(Duration::from_secs(10)), message_bound),
        ("2", "election argmax", Some(Duration::from_secs(30)), argmax_oracle),
        ("3", "termination under ties", None, ties),
        ("4", "conservation", None, conservation),
        ("5", "local-embed budgets", None, budgets),
        ("6", "small-instance soundness", Some(Duration::from_secs(60)), soundness),
    ];
    let mut failed = 0;
    let mut report = |id: &str, name: &str, v: Verdict, took: Duration, limit: Option<Duration>| {
        let in_time = limit.is_none_or(|l| took < l);
        let pass = v.pass && in_time;
        failed += usize::from(!pass);
        let budget = limit.map(|l| format!(" (limit {} s)", l.as_secs())).unwrap_or_default();
        println!(
            "{} criterion {id} {name}: {} [{:.2} s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            took.as_secs_f64()
        );
    };
    for (id, name, limit, f) in checks {
        let clock = Instant::now();
        let v = f();
        report(id, name, v, clock.elapsed(), limit);
    }
    let clock = Instant::now();
    let [a, b, c] = desk_scale();
    let took = clock.elapsed();
    let limit = Some(Duration::from_secs(300));
    report("7a", "desk-scale revenue/cost", a, took, limit);
    report("7b", "desk-scale acceptance gap", b, took, limit);
    report("7c", "desk-scale link utilization and cost", c, took, limit);
    let clock = Instant::now();
    let v = full_scale();
    report("8", "full-scale run", v, clock.elapsed(), Some(Duration::from_secs(300)));
    let clock = Instant::now();
    let v = determinism();
    report("9", "determinism", v, clock.elapsed(), None);
    println!("{failed} criteria failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
