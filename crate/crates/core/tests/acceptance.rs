//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any failed.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::Instant;

use mcds_core::graph::{gen_cycle_center, gen_lower_bound, gen_random_connected, DisjointnessInstance};
use mcds_core::harness::{edge_prob_for_degree, median};
use mcds_core::oracle::{
    blue_satisfiable_components, brute_force_max_star, exact_mcds, is_cds, random_phase_colors,
    scratch_components, star_phi,
};
use mcds_core::phases::{s1_identify_and_count, s2_max_efficiency, Color, McdsError, Trace};
use mcds_core::runtime::{ceil_log2, Network};
use mcds_core::{run_mcds, Rational, RunConfig, RuntimeError, WeightedGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SEEDS: u64 = 3;

/// Everything later criteria need from one run.
struct RunRecord {
    instance: String,
    g: WeightedGraph,
    /// Exact optimum, oracle instances only.
    opt: Option<u64>,
    result: Result<Outcome, String>,
    budget_error: bool,
}

struct Outcome {
    cds: Vec<usize>,
    cost: u64,
    max_message_bits: u32,
    trace: Trace,
    findings: Findings,
}

/// Per-run audit failures, one list per criterion.
#[derive(Default)]
struct Findings {
    reduction: Vec<String>,
    cleanup: Vec<String>,
    monotone: Vec<String>,
    observation: Vec<String>,
}

fn snapshot_config(seed: u64) -> RunConfig {
    RunConfig {
        record_snapshots: true,
        ..RunConfig::with_seed(seed)
    }
}

fn execute(instance: String, g: WeightedGraph, opt: Option<u64>, seed: u64) -> RunRecord {
    let (result, budget_error) = match run_mcds(&g, &snapshot_config(seed)) {
        Ok(out) => {
            let findings = audit(&g, &out.trace);
            let outcome = Outcome {
                cds: out.cds,
                cost: out.cost,
                max_message_bits: out.metrics.max_message_bits,
                trace: strip(out.trace),
                findings,
            };
            (Ok(outcome), false)
        }
        Err(e) => {
            let budget = matches!(
                e,
                McdsError::Runtime(RuntimeError::BudgetViolation { .. } | RuntimeError::BudgetTooSmall { .. })
            );
            (Err(e.to_string()), budget)
        }
    };
    RunRecord {
        instance: format!("{instance} seed={seed}"),
        g,
        opt,
        result,
        budget_error,
    }
}

/// Drops snapshots once audited.
fn strip(mut trace: Trace) -> Trace {
    for it in &mut trace.iterations {
        it.audit = None;
    }
    trace
}

/// Rechecks criteria 3 to 6 on one trace from colors alone.
fn audit(g: &WeightedGraph, trace: &Trace) -> Findings {
    let mut f = Findings::default();
    for ph in &trace.phases {
        let bound = (3 * ph.frozen_count).div_ceil(4);
        let last = trace.iterations.iter().rfind(|it| it.phase == ph.phase);
        let recount = last
            .and_then(|it| it.audit.as_ref())
            .map(|a| {
                let scratch = scratch_components(g, a.after_s8.colors());
                scratch.current.iter().flatten().collect::<BTreeSet<_>>().len()
            })
            .unwrap_or(ph.components_after);
        if ph.components_after > bound || recount != ph.components_after {
            f.reduction.push(format!(
                "phase {}: N={} recorded {} recounted {} bound {bound}",
                ph.phase, ph.frozen_count, ph.components_after, recount
            ));
        }
    }

    for pair in trace.iterations.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.phase != b.phase || a.rho_tilde != b.rho_tilde {
            continue;
        }
        for (c, &d) in &b.per_component_active_degree {
            let prev = a.per_component_active_degree.get(c).copied().unwrap_or(0);
            if d > prev {
                f.monotone.push(format!(
                    "phase {} iteration {}: component {c} degree {prev} -> {d}",
                    b.phase, b.iteration
                ));
            }
        }
    }

    for it in &trace.iterations {
        let Some(a) = &it.audit else { continue };
        let rho_tilde = Rational::from(it.rho_tilde);
        let before = a.before.colors();

        let leftover = blue_satisfiable_components(g, &a.after_s8, rho_tilde.recip());
        if !leftover.is_empty() {
            f.cleanup.push(format!(
                "phase {} iteration {}: {leftover:?} still blue-satisfiable",
                it.phase, it.iteration
            ));
        }

        for (&center, star) in &a.stars {
            let members = star.members();
            let phi = star_phi(g, before, &members);
            let eff = Rational::new(phi.len() as u64, g.cost(&members));
            if phi != star.phi || eff * 2 < rho_tilde {
                f.observation.push(format!(
                    "phase {} iteration {}: star at {center} has oracle phi {phi:?} (claimed {:?}), efficiency {eff} vs rho~ {rho_tilde}",
                    it.phase, it.iteration, star.phi
                ));
            }
        }
        let before_scratch = scratch_components(g, before);
        let after = scratch_components(g, a.after_s7.colors());
        for &center in &a.commit.committed {
            for u in a.stars[&center].members() {
                for &x in g.neighbors(u) {
                    if let Some(c) = before_scratch.frozen[x] {
                        if !after.satisfied[&c] {
                            f.observation.push(format!(
                                "phase {} iteration {}: committed node {u} leaves component {c} unsatisfied",
                                it.phase, it.iteration
                            ));
                        }
                    }
                }
            }
        }
    }
    f
}

fn random_instances(count: usize, sizes: std::ops::RangeInclusive<usize>, stream: u64) -> Vec<(String, WeightedGraph)> {
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    (0..count)
        .map(|i| {
            let n = rng.gen_range(sizes.clone());
            let degree = rng.gen_range(2.0..8.0);
            let p = edge_prob_for_degree(n, degree);
            let wmax = match i % 3 {
                0 => 1,
                1 => 100,
                _ => (n as u64).pow(3),
            };
            let seed = rng.gen();
            let g = gen_random_connected(n, p, wmax, seed).expect("valid parameters");
            (format!("random(n={n},p={p:.3},wmax={wmax},seed={seed})"), g)
        })
        .collect()
}

fn lower_bound_pairs() -> Vec<(DisjointnessInstance, WeightedGraph, u64)> {
    let subsets: Vec<Vec<usize>> = (0u32..8).map(|m| (1..=3).filter(|i| m >> (i - 1) & 1 == 1).collect()).collect();
    let mut out = Vec::new();
    for x in &subsets {
        for y in &subsets {
            let inst = DisjointnessInstance::new(3, x.clone(), y.clone(), 2).unwrap();
            let (g, _) = gen_lower_bound(&inst, 3, 3).unwrap();
            let m = inst.alpha * g.node_count() as u64 + 1;
            out.push((inst, g, m));
        }
    }
    out
}

fn criterion_1(runs: &[RunRecord]) -> Result<String, String> {
    let bad: Vec<String> = runs
        .iter()
        .filter_map(|r| match &r.result {
            Ok(o) if is_cds(&r.g, &o.cds) && o.cost == r.g.cost(&o.cds) => None,
            Ok(_) => Some(format!("{}: output is not a CDS", r.instance)),
            Err(e) => Some(format!("{}: {e}", r.instance)),
        })
        .collect();
    verdict(bad, format!("{} runs produce a connected dominating set", runs.len()))
}

fn criterion_2(runs: &[RunRecord]) -> Result<String, String> {
    let mut ratios = Vec::new();
    let mut bad = Vec::new();
    for r in runs {
        let (Ok(o), Some(opt)) = (&r.result, r.opt) else {
            bad.push(format!("{}: no result", r.instance));
            continue;
        };
        let ratio = o.cost as f64 / opt as f64;
        let bound = 8.0 * (r.g.node_count() as f64).ln() + 8.0;
        if ratio > bound {
            bad.push(format!("{}: ratio {ratio:.3} > {bound:.3}", r.instance));
        }
        ratios.push(ratio);
    }
    let med = median(&ratios).unwrap_or(f64::INFINITY);
    let max = ratios.iter().copied().fold(0.0, f64::max);
    if med > 3.0 {
        bad.push(format!("median ratio {med:.3} > 3"));
    }
    verdict(bad, format!("{} oracle runs, median ratio {med:.3}, max {max:.3}", ratios.len()))
}

fn criterion_7() -> Result<String, String> {
    let mut bad = Vec::new();
    let mut compared = 0;
    for i in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7_000 + i);
        let n = rng.gen_range(3..=12);
        let g = gen_random_connected(n, rng.gen_range(0.2..0.7), 20, i).unwrap();
        let mut net = Network::new(&g, &RunConfig::with_seed(i)).unwrap();
        let mut state = mcds_core::phases::PhaseState::from_colors(&mut net, random_phase_colors(&g, i));
        let (views, _) = s1_identify_and_count(&mut net, &mut state).unwrap();
        let s2 = s2_max_efficiency(&mut net, &state, &views).unwrap();
        for v in (0..n).filter(|&v| state.color(v) == Color::White) {
            compared += 1;
            let exact = brute_force_max_star(&g, &state, v).unwrap();
            if s2.local_efficiency(v) != exact {
                bad.push(format!("state {i} node {v}: local {:?} brute force {exact:?}", s2.local_efficiency(v)));
            }
        }
    }
    verdict(bad, format!("{compared} white nodes over 200 states agree exactly"))
}

fn criterion_8(runs: &[RunRecord]) -> Result<String, String> {
    let mut bad = Vec::new();
    let mut checked = 0;
    for r in runs {
        let (Ok(o), Some(opt)) = (&r.result, r.opt) else { continue };
        for it in &o.trace.iterations {
            let n_frozen = o.trace.phases.iter().find(|p| p.phase == it.phase).map_or(0, |p| p.frozen_count);
            if it.unsatisfied_count < n_frozen.div_ceil(2) {
                continue;
            }
            checked += 1;
            let rho = Rational::from(it.rho_star);
            let floor = Rational::new(n_frozen as u64, 4 * opt);
            if rho < floor {
                bad.push(format!(
                    "{} phase {} iteration {}: rho* {rho} < N/(4 OPT) = {floor}",
                    r.instance, it.phase, it.iteration
                ));
            }
        }
    }
    verdict(bad, format!("{checked} iterations with half the components unsatisfied"))
}

struct ScalingRun {
    n: usize,
    max_phase_iterations: u64,
    record: RunRecord,
}

fn scaling_runs() -> Vec<ScalingRun> {
    let grid: Vec<(usize, u64)> = [25, 50, 100, 200, 400, 800]
        .iter()
        .flat_map(|&n| (0..5).map(move |s| (n, s)))
        .collect();
    grid.par_iter()
        .map(|&(n, seed)| {
            let g = gen_random_connected(n, edge_prob_for_degree(n, 6.0), 100, seed).unwrap();
            let (result, budget_error) = match run_mcds(&g, &RunConfig::with_seed(seed)) {
                Ok(out) => (
                    Ok(Outcome {
                        cds: out.cds,
                        cost: out.cost,
                        max_message_bits: out.metrics.max_message_bits,
                        trace: out.trace,
                        findings: Findings::default(),
                    }),
                    false,
                ),
                Err(e) => {
                    let budget = matches!(e, McdsError::Runtime(RuntimeError::BudgetViolation { .. }));
                    (Err(e.to_string()), budget)
                }
            };
            let max_phase_iterations = result
                .as_ref()
                .map(|o| o.trace.phases.iter().map(|p| p.iterations).max().unwrap_or(0))
                .unwrap_or(u64::MAX);
            ScalingRun {
                n,
                max_phase_iterations,
                record: RunRecord {
                    instance: format!("sweep(n={n}) seed={seed}"),
                    g,
                    opt: None,
                    result,
                    budget_error,
                },
            }
        })
        .collect()
}

fn criterion_9(runs: &[ScalingRun]) -> Result<String, String> {
    let mut bad = Vec::new();
    let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in runs {
        let log = (r.n as f64).log2();
        let bound = 2.0 * log.powi(3);
        if r.max_phase_iterations as f64 > bound {
            bad.push(format!("{}: {} iterations in a phase > {bound:.0}", r.record.instance, r.max_phase_iterations));
        }
        by_n.entry(r.n).or_default().push(r.max_phase_iterations as f64);
    }
    let points: Vec<(f64, f64)> = by_n
        .iter()
        .map(|(&n, v)| ((n as f64).log2().ln(), median(v).unwrap().max(1.0).ln()))
        .collect();
    let slope = regression_slope(&points);
    if slope > 3.5 {
        bad.push(format!("slope {slope:.3} > 3.5"));
    }
    let medians: Vec<String> = by_n.iter().map(|(n, v)| format!("{n}:{}", median(v).unwrap())).collect();
    verdict(bad, format!("median max iterations per phase {}, slope {slope:.3}", medians.join(" ")))
}

fn regression_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn criterion_10<'a>(runs: impl Iterator<Item = &'a RunRecord>) -> Result<String, String> {
    let mut bad = Vec::new();
    let mut count = 0;
    let mut widest = 0;
    for r in runs {
        count += 1;
        let budget = 8 * ceil_log2(r.g.node_count() as u64 + 1).max(1);
        if r.budget_error {
            bad.push(format!("{}: budget violation", r.instance));
        }
        if let Ok(o) = &r.result {
            if o.max_message_bits > budget {
                bad.push(format!("{}: {} bit message, B = {budget}", r.instance, o.max_message_bits));
            }
            widest = widest.max(o.max_message_bits);
        }
    }
    verdict(bad, format!("{count} runs within budget, widest message {widest} bits"))
}

fn criterion_11(pairs: &[(DisjointnessInstance, WeightedGraph, u64)]) -> Result<String, String> {
    let bad: Vec<String> = pairs
        .par_iter()
        .filter_map(|(inst, g, m)| {
            let opt = exact_mcds(g).unwrap().best_cost;
            (inst.intersects() != (opt >= *m)).then(|| {
                format!("X={:?} Y={:?}: OPT {opt}, M {m}", inst.set_x, inst.set_y)
            })
        })
        .collect();
    verdict(bad, format!("{} (X, Y) pairs", pairs.len()))
}

fn criterion_12(runs: &[RunRecord]) -> Result<String, String> {
    let mut iterations = 0;
    let (mut hits, mut trials) = (0u64, 0u64);
    'outer: for r in runs {
        let Ok(o) = &r.result else { continue };
        for it in o.trace.iterations.iter().filter(|it| it.delta_star >= 2) {
            if iterations == 200 {
                break 'outer;
            }
            iterations += 1;
            for (&c, &d) in &it.per_component_active_degree {
                if 2 * d >= it.delta_star {
                    trials += 1;
                    hits += u64::from(it.newly_satisfied.contains(&c));
                }
            }
        }
    }
    let rate = hits as f64 / trials.max(1) as f64;
    let detail = format!("{hits}/{trials} high-degree components satisfied over {iterations} iterations, rate {rate:.3}");
    if iterations < 200 {
        return Err(format!("only {iterations} iterations with delta* >= 2; {detail}"));
    }
    if rate < 0.05 {
        return Err(detail);
    }
    Ok(detail)
}

fn verdict(bad: Vec<String>, summary: String) -> Result<String, String> {
    if bad.is_empty() {
        Ok(summary)
    } else {
        let shown: Vec<&str> = bad.iter().take(5).map(String::as_str).collect();
        Err(format!("{} failures ({summary}); first: {}", bad.len(), shown.join(" | ")))
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Result<String, String>)> = Vec::new();
    let mut report = |id: u32, name: &'static str, r: Result<String, String>| {
        match &r {
            Ok(d) => println!("PASS  {id:>2}. {name}: {d}"),
            Err(d) => println!("FAIL  {id:>2}. {name}: {d}"),
        }
        results.push((id, name, r));
    };

    let validity_runs: Vec<RunRecord> = random_instances(1000, 2..=200, 1)
        .into_par_iter()
        .flat_map_iter(|(name, g)| (0..SEEDS).map(move |s| execute(name.clone(), g.clone(), None, s)).collect::<Vec<_>>())
        .collect();

    let mut oracle_instances = random_instances(300, 4..=18, 2);
    for k in 2..=8 {
        oracle_instances.push((format!("cycle-center(k={k})"), gen_cycle_center(k).unwrap()));
    }
    let pairs = lower_bound_pairs();
    for (inst, g, _) in &pairs {
        oracle_instances.push((format!("lower-bound(X={:?},Y={:?})", inst.set_x, inst.set_y), g.clone()));
    }
    let oracle_runs: Vec<RunRecord> = oracle_instances
        .into_par_iter()
        .flat_map_iter(|(name, g)| {
            let opt = exact_mcds(&g).unwrap().best_cost;
            (0..SEEDS).map(move |s| execute(name.clone(), g.clone(), Some(opt), s)).collect::<Vec<_>>()
        })
        .collect();
    let both: Vec<&RunRecord> = validity_runs.iter().chain(&oracle_runs).collect();
    let all_runs = || both.iter().copied();

    report(1, "CDS validity", criterion_1(&validity_runs));
    report(2, "approximation ratio", criterion_2(&oracle_runs));
    report(3, "per-phase component reduction", finding_criterion(all_runs(), |f| &f.reduction, "phase counts"));
    report(4, "cleanup completeness", finding_criterion(all_runs(), |f| &f.cleanup, "every S8"));
    report(5, "monotone active degrees", finding_criterion(all_runs(), |f| &f.monotone, "consecutive same-rho~ iterations"));
    report(6, "star efficiency and commit satisfaction", finding_criterion(all_runs(), |f| &f.observation, "every S3 star and commit"));
    report(7, "S2 equals brute force", criterion_7());
    report(8, "efficiency lower bound", criterion_8(&oracle_runs));
    let scaling = scaling_runs();
    report(9, "iterations per phase", criterion_9(&scaling));
    report(10, "bit budget", criterion_10(all_runs().chain(scaling.iter().map(|s| &s.record))));
    report(11, "lower-bound semantics", criterion_11(&pairs));
    report(12, "statistical progress", criterion_12(&validity_runs));

    let failed = results.iter().filter(|r| r.2.is_err()).count();
    println!(
        "{} of {} criteria passed in {:.1}s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn finding_criterion<'a>(
    runs: impl Iterator<Item = &'a RunRecord>,
    pick: fn(&Findings) -> &Vec<String>,
    what: &str,
) -> Result<String, String> {
    let mut bad = Vec::new();
    let mut checked = 0;
    for r in runs {
        if let Ok(o) = &r.result {
            checked += 1;
            bad.extend(pick(&o.findings).iter().map(|d| format!("{}: {d}", r.instance)));
        }
    }
    verdict(bad, format!("{what} over {checked} traces"))
}
