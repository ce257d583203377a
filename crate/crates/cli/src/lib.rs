//! `wcheap` command-line front end: differential fuzzing, trace replay and
//! benchmarks against baseline heaps.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use wcheap::bench::{run_workload, Impl, Workload, RESULT_HEADER};
use wcheap::verify::{
    differential_fuzz, effective_check_every, run_trace, summarize, FuzzConfig, Mix, OpTrace, RunOptions, Verdict,
    CSV_HEADER,
};
use wcheap::{Faults, Variant};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "wcheap", version, about = "Worst-case heap fuzzer, replayer and benchmark runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Differential fuzzing against a sorted-multiset oracle
    Fuzz(FuzzArgs),
    /// Replay a trace file against the oracle, optionally writing per-op costs
    Replay(ReplayArgs),
    /// Run a workload on one implementation and write per-op results
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct FuzzArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of consecutive seeds to run, starting at --seed
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, default_value_t = 10_000)]
    ops: usize,
    #[arg(long, default_value = "full", value_parser = parse_variant)]
    variant: Variant,
    /// Operation weights, e.g. ins:40,delmin:25,deckey:30,meld:5
    #[arg(long, value_parser = parse_mix)]
    mix: Option<Mix>,
    #[arg(long, default_value_t = 16)]
    check_every: usize,
    /// Summary JSON path; a failing seed's reproducer is written next to it
    #[arg(long, default_value = "wcheap-fuzz.json")]
    out: PathBuf,
    /// Worker threads for multi-seed runs
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, hide = true)]
    inject_fault: Option<String>,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, default_value_t = 0)]
    check_every: usize,
    /// Write per-op cost rows as CSV
    #[arg(long)]
    costs: Option<PathBuf>,
    #[arg(long, hide = true)]
    inject_fault: Option<String>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_parser = parse_workload)]
    workload: Workload,
    #[arg(long)]
    n: usize,
    #[arg(long = "impl", value_parser = parse_impl)]
    imp: Impl,
    /// CSV output path
    #[arg(long)]
    out: PathBuf,
    /// Also write rows and summary as JSON
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    match s {
        "full" => Ok(Variant::Full),
        "simple" => Ok(Variant::Simplified),
        _ => Err("expected full or simple".into()),
    }
}

fn parse_mix(s: &str) -> Result<Mix, String> {
    s.parse()
}

fn parse_workload(s: &str) -> Result<Workload, String> {
    s.parse()
}

fn parse_impl(s: &str) -> Result<Impl, String> {
    s.parse()
}

fn parse_fault(name: Option<&str>) -> Result<Faults, String> {
    match name {
        None => Ok(Faults::default()),
        Some("skip-rank-decrement") => Ok(Faults {
            skip_rank_decrement: true,
        }),
        Some(f) => Err(format!("unknown fault {f:?}")),
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let res = match cli.command {
        Command::Fuzz(a) => cmd_fuzz(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

#[derive(Serialize)]
struct SeedResult {
    seed: u64,
    passed: bool,
    checks: u64,
    plans: u64,
    plan_overruns: u64,
    step_overruns: u64,
    max_rank: u32,
    failure: Option<String>,
    reproducer: Option<String>,
}

#[derive(Serialize)]
struct FuzzSummary {
    variant: &'static str,
    ops: usize,
    mix: String,
    check_every: usize,
    seeds: Vec<SeedResult>,
}

fn reproducer_path(out: &Path, seed: u64) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.seed{seed}.trace"))
}

fn cmd_fuzz(a: FuzzArgs) -> Result<i32, String> {
    let mix = a.mix.unwrap_or_else(|| match a.variant {
        Variant::Full => Mix::default(),
        Variant::Simplified => Mix::default().without_meld(),
    });
    mix.validate(a.variant)?;
    let faults = parse_fault(a.inject_fault.as_deref())?;
    let check_every = effective_check_every(a.check_every);
    let seeds: Vec<u64> = (0..a.seeds.max(1)).map(|i| a.seed + i).collect();
    let jobs = a.jobs.max(1).min(seeds.len());
    let config = |seed| FuzzConfig {
        seed,
        ops: a.ops,
        mix,
        variant: a.variant,
        check_every,
        faults,
    };
    let mut verdicts: Vec<(u64, Verdict)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|j| {
                let mine: Vec<u64> = seeds.iter().copied().skip(j).step_by(jobs).collect();
                s.spawn(move || mine.into_iter().map(|seed| (seed, differential_fuzz(&config(seed)))).collect::<Vec<_>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    verdicts.sort_by_key(|v| v.0);

    let mut results = Vec::new();
    let mut failed = false;
    for (seed, v) in verdicts {
        match v {
            Verdict::Pass(r) => {
                println!(
                    "seed {seed}: PASS ({} ops, {} checks, {} plans, {} plan overruns)",
                    r.ops_run, r.checks, r.audit.plans, r.audit.plan_overruns
                );
                results.push(SeedResult {
                    seed,
                    passed: true,
                    checks: r.checks,
                    plans: r.audit.plans,
                    plan_overruns: r.audit.plan_overruns,
                    step_overruns: r.audit.step_overruns,
                    max_rank: r.max_rank,
                    failure: None,
                    reproducer: None,
                });
            }
            Verdict::Fail(f) => {
                failed = true;
                let path = reproducer_path(&a.out, seed);
                fs::write(&path, f.trace.to_text()).map_err(|e| format!("{}: {e}", path.display()))?;
                println!(
                    "seed {seed}: FAIL {}\n  reproducer ({} of {} ops): {}",
                    f.mismatch,
                    f.trace.ops.len(),
                    f.original_len,
                    path.display()
                );
                results.push(SeedResult {
                    seed,
                    passed: false,
                    checks: 0,
                    plans: 0,
                    plan_overruns: 0,
                    step_overruns: 0,
                    max_rank: 0,
                    failure: Some(f.mismatch.to_string()),
                    reproducer: Some(path.display().to_string()),
                });
            }
        }
    }
    let summary = FuzzSummary {
        variant: a.variant.as_str(),
        ops: a.ops,
        mix: mix.to_string(),
        check_every,
        seeds: results,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| e.to_string())?;
    fs::write(&a.out, json + "\n").map_err(|e| format!("{}: {e}", a.out.display()))?;
    Ok(if failed { EXIT_FAIL } else { EXIT_PASS })
}

fn cmd_replay(a: ReplayArgs) -> Result<i32, String> {
    let text = fs::read_to_string(&a.trace).map_err(|e| format!("{}: {e}", a.trace.display()))?;
    let trace = OpTrace::parse(&text).map_err(|e| format!("{}: {e}", a.trace.display()))?;
    let opts = RunOptions {
        check_every: effective_check_every(a.check_every),
        record_costs: a.costs.is_some(),
        faults: parse_fault(a.inject_fault.as_deref())?,
    };
    let res = run_trace(&trace, &opts).map_err(|e| format!("{}: {e}", a.trace.display()))?;
    if let Some(path) = &a.costs {
        let mut f = fs::File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut buf = String::with_capacity(res.rows.len() * 32);
        buf.push_str(CSV_HEADER);
        buf.push('\n');
        for r in &res.rows {
            buf.push_str(&r.csv_line());
            buf.push('\n');
        }
        f.write_all(buf.as_bytes()).map_err(|e| e.to_string())?;
    }
    let s = summarize(&res.rows, &res.audit);
    for e in &s.envelopes {
        println!(
            "{:<7} count {:>8}  max comparisons {:>5}  max steps {:>6}",
            e.op, e.count, e.max_comparisons, e.max_steps
        );
    }
    println!(
        "plans {}  plan overruns {}  step overruns {}",
        res.audit.plans, res.audit.plan_overruns, res.audit.step_overruns
    );
    match res.failure {
        None => {
            println!("PASS ({} ops, {} checks)", res.ops_run, res.checks);
            Ok(EXIT_PASS)
        }
        Some(m) => {
            println!("FAIL {m}");
            Ok(EXIT_FAIL)
        }
    }
}

#[derive(Serialize)]
struct JsonRow<'a> {
    op_index: usize,
    op: &'a str,
    n: usize,
    comparisons: u64,
    steps: u64,
    wall_ns: u64,
}

#[derive(Serialize)]
struct JsonBench<'a> {
    workload: &'a str,
    implementation: &'a str,
    n: usize,
    seed: u64,
    total_comparisons: u64,
    total_steps: u64,
    max_comparisons: &'a std::collections::BTreeMap<&'static str, u64>,
    max_steps: &'a std::collections::BTreeMap<&'static str, u64>,
    wall_ns: u64,
    distance_sum: Option<u64>,
    rows: Vec<JsonRow<'a>>,
}

fn cmd_bench(a: BenchArgs) -> Result<i32, String> {
    let run = run_workload(a.workload, a.n, a.imp, a.seed);
    let mut buf = String::from(RESULT_HEADER);
    buf.push('\n');
    for r in &run.rows {
        buf.push_str(&r.csv_line());
        buf.push('\n');
    }
    fs::write(&a.out, buf).map_err(|e| format!("{}: {e}", a.out.display()))?;
    let s = &run.summary;
    if let Some(path) = &a.json {
        let doc = JsonBench {
            workload: a.workload.name(),
            implementation: a.imp.name(),
            n: a.n,
            seed: a.seed,
            total_comparisons: s.total_comparisons,
            total_steps: s.total_steps,
            max_comparisons: &s.max_comparisons,
            max_steps: &s.max_steps,
            wall_ns: s.wall_ns,
            distance_sum: s.distance_sum,
            rows: run
                .rows
                .iter()
                .map(|r| JsonRow {
                    op_index: r.op_index,
                    op: r.op,
                    n: r.n,
                    comparisons: r.comparisons,
                    steps: r.steps,
                    wall_ns: r.wall_ns,
                })
                .collect(),
        };
        let json = serde_json::to_string(&doc).map_err(|e| e.to_string())?;
        fs::write(path, json + "\n").map_err(|e| format!("{}: {e}", path.display()))?;
    }
    println!("{} on {} n={}", a.imp, a.workload.name(), a.n);
    println!("total comparisons {}  total steps {}", s.total_comparisons, s.total_steps);
    for (op, c) in &s.max_comparisons {
        println!("{op:<7} max comparisons {c:>6}  max steps {:>6}", s.max_steps[op]);
    }
    if let Some(d) = s.distance_sum {
        println!("distance sum {d}");
    }
    println!("wall {:.3} ms", s.wall_ns as f64 / 1e6);
    Ok(EXIT_PASS)
}
