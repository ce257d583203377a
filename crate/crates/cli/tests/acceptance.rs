use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use wcheap::verify::{
    differential_fuzz, fit_log_envelope, generate, measure_costs, random_workload, summarize, FuzzConfig, Invariant,
    Mix, Verdict,
};
use wcheap::{BudgetAudit, Forest, Variant};

const SEEDS: u64 = 100;
const OPS: usize = 10_000;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { name, pass, detail }
}

#[derive(Default)]
struct VariantRuns {
    seeds: u64,
    mismatches: Vec<String>,
    bound_failures: [u64; 3],
    max_rank: u32,
    max_violation_ratio: f64,
    checks: u64,
    audit: BudgetAudit,
    elapsed: Duration,
}

fn classify(inv: Invariant) -> Option<usize> {
    match inv {
        Invariant::ViolationBound | Invariant::LossSum => Some(0),
        Invariant::RankBound => Some(1),
        Invariant::DegreeBound => Some(2),
        _ => None,
    }
}

fn fuzz_variant(variant: Variant) -> VariantRuns {
    let mix = match variant {
        Variant::Full => Mix::default(),
        Variant::Simplified => Mix::default().without_meld(),
    };
    let start = Instant::now();
    let next = AtomicUsize::new(0);
    let jobs = std::thread::available_parallelism().map_or(4, |n| n.get()).min(16);
    let verdicts: Vec<(u64, Verdict)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|_| {
                s.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed) as u64;
                        if i >= SEEDS {
                            break out;
                        }
                        let mut cfg = FuzzConfig::new(i + 1, OPS, variant);
                        cfg.mix = mix;
                        cfg.check_every = 16;
                        out.push((i + 1, differential_fuzz(&cfg)));
                    }
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    let mut runs = VariantRuns {
        seeds: verdicts.len() as u64,
        ..Default::default()
    };
    for (seed, v) in verdicts {
        match v {
            Verdict::Pass(r) => {
                runs.max_rank = runs.max_rank.max(r.max_rank);
                runs.max_violation_ratio = runs.max_violation_ratio.max(r.max_violation_ratio);
                runs.checks += r.checks;
                merge(&mut runs.audit, &r.audit);
            }
            Verdict::Fail(f) => {
                let mut bound = false;
                if let Some(rep) = &f.mismatch.report {
                    for fl in &rep.failures {
                        if let Some(k) = classify(fl.invariant) {
                            runs.bound_failures[k] += 1;
                            bound = true;
                        }
                    }
                }
                if !bound {
                    runs.mismatches.push(format!("seed {seed}: {}", f.mismatch));
                }
            }
        }
    }
    runs.elapsed = start.elapsed();
    runs
}

fn merge(into: &mut BudgetAudit, a: &BudgetAudit) {
    into.plans += a.plans;
    into.plan_overruns += a.plan_overruns;
    into.row_sum_overruns += a.row_sum_overruns;
    into.root_plans += a.root_plans;
    into.root_plan_overruns += a.root_plan_overruns;
    into.step_overruns += a.step_overruns;
    for i in 0..4 {
        into.steps_applied[i] += a.steps_applied[i];
        into.step_max_comparisons[i] = into.step_max_comparisons[i].max(a.step_max_comparisons[i]);
    }
    for s in &a.plan_overrun_samples {
        if into.plan_overrun_samples.len() < 8 {
            into.plan_overrun_samples.push(s.clone());
        }
    }
    for s in &a.step_overrun_samples {
        if into.step_overrun_samples.len() < 8 {
            into.step_overrun_samples.push(s.clone());
        }
    }
}

fn criteria_from_fuzz(full: &VariantRuns, simple: &VariantRuns, out: &mut Vec<Outcome>) {
    let total = full.elapsed + simple.elapsed;
    let mism = full.mismatches.len() + simple.mismatches.len();
    let mut detail = format!(
        "{} + {} seeds x {OPS} ops, {mism} mismatches, {:.1} s",
        full.seeds,
        simple.seeds,
        total.as_secs_f64()
    );
    for m in full.mismatches.iter().chain(&simple.mismatches).take(3) {
        detail += &format!("\n    {m}");
    }
    out.push(outcome(
        "differential correctness",
        mism == 0 && full.seeds == SEEDS && simple.seeds == SEEDS && total < Duration::from_secs(60),
        detail,
    ));

    let b = full.bound_failures[0] + simple.bound_failures[0];
    out.push(outcome(
        "violation bounds",
        b == 0 && mism == 0 && full.max_violation_ratio <= 1.0 && simple.max_violation_ratio <= 1.0,
        format!(
            "{b} violations over {} checkpoints, max |list|/(R(n)+1) full {:.3} simple {:.3}",
            full.checks + simple.checks,
            full.max_violation_ratio,
            simple.max_violation_ratio
        ),
    ));

    let r = full.bound_failures[1] + simple.bound_failures[1];
    out.push(outcome(
        "rank bound",
        r == 0 && mism == 0,
        format!("{r} violations, max rank full {} simple {}", full.max_rank, simple.max_rank),
    ));

    let d = full.bound_failures[2];
    out.push(outcome(
        "degree bound",
        d == 0 && full.mismatches.is_empty(),
        format!("{d} violations over {} full-variant checkpoints", full.checks),
    ));

    let (fa, sa) = (&full.audit, &simple.audit);
    let mut detail = format!(
        "full {}/{} plans over 9l+5a+3g+1, simple {}/{} plans over 2l+a; \
         full plans over row sum 9l+5a+6ceil(g/2): {}; find-min root plans over budget: full {} simple {}",
        fa.plan_overruns, fa.plans, sa.plan_overruns, sa.plans, fa.row_sum_overruns, fa.root_plan_overruns,
        sa.root_plan_overruns
    );
    for s in fa.plan_overrun_samples.iter().chain(&sa.plan_overrun_samples).take(4) {
        detail += &format!(
            "\n    (l,a,g)=({},{},{}) used {} comparisons, budget {}",
            s.loss, s.a, s.g, s.comparisons, s.budget
        );
    }
    out.push(outcome(
        "plan comparison budgets",
        fa.plan_overruns == 0 && sa.plan_overruns == 0 && mism == 0,
        detail,
    ));

    let mut detail = format!(
        "{} overruns; max comparisons per step full DR/A/G/L {:?} simple {:?}",
        fa.step_overruns + sa.step_overruns,
        fa.step_max_comparisons,
        sa.step_max_comparisons
    );
    for s in fa.step_overrun_samples.iter().chain(&sa.step_overrun_samples).take(4) {
        detail += &format!("\n    {:?} used {} > {}", s.kind, s.comparisons, s.limit);
    }
    out.push(outcome(
        "per-step budgets",
        fa.step_overruns == 0 && sa.step_overruns == 0 && mism == 0,
        detail,
    ));
}

fn envelopes(out: &mut Vec<Outcome>) {
    let start = Instant::now();
    let sizes = [1usize << 8, 1 << 12, 1 << 16];
    let steady = 1usize << 21;
    let mut pass = true;
    let mut detail = String::new();
    for variant in [Variant::Full, Variant::Simplified] {
        let mut per_size = Vec::new();
        let mut pooled = Vec::new();
        for &n in &sizes {
            let t = random_workload(1, n, steady, variant);
            let (rows, _) = measure_costs(&t).expect("generated workload replays");
            let rows: Vec<_> = rows.into_iter().filter(|r| r.op_index >= n).collect();
            pooled.extend(rows.iter().filter(|r| r.op == "delmin").map(|r| (r.n, r.steps)));
            per_size.push(summarize(&rows, &BudgetAudit::default()));
        }
        let max = |i: usize, op: &str| per_size[i].envelope(op).map_or(0, |e| e.max_steps);
        for op in ["ins", "deckey", "meld"] {
            if variant == Variant::Simplified && op == "meld" {
                continue;
            }
            let m: Vec<u64> = (0..3).map(|i| max(i, op)).collect();
            let ok = m.iter().all(|&x| x == m[0]);
            pass &= ok;
            detail += &format!("\n    {} {op:<6} max steps {:?} {}", variant.as_str(), m, if ok { "equal" } else { "differ" });
        }
        let c1 = fit_log_envelope(pooled).map_or(0.0, |f| f.c1);
        let (lo, hi) = (max(0, "delmin"), max(2, "delmin"));
        let ok = hi as f64 <= lo as f64 + 8.0 * c1;
        pass &= ok;
        detail += &format!(
            "\n    {} delmin max steps {lo} at 2^8, {hi} at 2^16, C1 {c1:.2}, limit {:.1}",
            variant.as_str(),
            lo as f64 + 8.0 * c1
        );
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(120);
    out.push(outcome(
        "worst-case envelopes",
        pass,
        format!("n in 2^8, 2^12, 2^16 with {steady} steady ops, {:.1} s{detail}", elapsed.as_secs_f64()),
    ));
}

fn sortedness(out: &mut Vec<Outcome>) {
    use rand::{Rng, SeedableRng};
    let n = 100_000;
    let mut pass = true;
    let mut detail = Vec::new();
    for variant in [Variant::Full, Variant::Simplified] {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let start = Instant::now();
        let mut f: Forest<i64> = Forest::new();
        let h = f.make_heap(variant);
        for _ in 0..n {
            f.insert(h, rng.gen_range(0..1_000_000_000)).unwrap();
        }
        let mut prev = i64::MIN;
        let mut sorted = true;
        let mut popped = 0;
        while let Ok((k, _)) = f.delete_min(h) {
            sorted &= k >= prev;
            prev = k;
            popped += 1;
        }
        let t = start.elapsed();
        let ok = sorted && popped == n && t < Duration::from_secs(5);
        pass &= ok;
        detail.push(format!("{} {popped} popped, sorted {sorted}, {:.2} s", variant.as_str(), t.as_secs_f64()));
    }
    out.push(outcome("sortedness at scale", pass, detail.join("; ")));
}

fn without_wall(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism(out: &mut Vec<Outcome>) {
    let dir = tempfile::tempdir().unwrap();
    let trace = generate(9, 5_000, &Mix::default(), Variant::Full);
    let tpath = dir.path().join("fixed.trace");
    std::fs::write(&tpath, trace.to_text()).unwrap();
    let mut csvs = Vec::new();
    let mut codes = Vec::new();
    for i in 0..2 {
        let cpath = dir.path().join(format!("costs{i}.csv"));
        let st = Command::new(env!("CARGO_BIN_EXE_wcheap"))
            .args(["replay", "--trace"])
            .arg(&tpath)
            .arg("--costs")
            .arg(&cpath)
            .output()
            .unwrap();
        codes.push(st.status.code());
        csvs.push(std::fs::read_to_string(&cpath).unwrap_or_default());
    }
    let (a, b) = (without_wall(&csvs[0]), without_wall(&csvs[1]));
    let ok = codes.iter().all(|c| *c == Some(0)) && !a.is_empty() && a == b;
    out.push(outcome(
        "determinism",
        ok,
        format!("{} cost rows, exit codes {:?}, identical {}", a.lines().count().saturating_sub(1), codes, a == b),
    ));
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut out = Vec::new();
    let full = fuzz_variant(Variant::Full);
    let simple = fuzz_variant(Variant::Simplified);
    criteria_from_fuzz(&full, &simple, &mut out);
    envelopes(&mut out);
    sortedness(&mut out);
    determinism(&mut out);

    let mut failed = 0;
    for (i, o) in out.iter().enumerate() {
        println!("criterion {}: {} {} ({})", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", out.len() - failed, out.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
