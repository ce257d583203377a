//! Random trace generation, lockstep replay against the oracle, and
//! failing-trace minimization.

use std::fmt;
use std::panic::{self, AssertUnwindSafe};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::check::InvariantReport;
use super::costs::CostRow;
use super::oracle::{Oracle, Output};
use super::trace::{Op, OpTrace, TraceError};
use crate::audit::{BudgetAudit, Faults};
use crate::heap::HeapError;
use crate::structure::{CostCounters, Forest, HeapId, NodeHandle, Variant};

/// Relative operation weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mix {
    pub ins: u32,
    pub delmin: u32,
    pub deckey: u32,
    pub meld: u32,
    pub peek: u32,
}

impl Default for Mix {
    fn default() -> Self {
        Mix {
            ins: 40,
            delmin: 25,
            deckey: 30,
            meld: 5,
            peek: 0,
        }
    }
}

impl Mix {
    pub fn without_meld(self) -> Self {
        Mix { meld: 0, ..self }
    }

    pub fn validate(&self, variant: Variant) -> Result<(), String> {
        if self.meld > 0 && variant == Variant::Simplified {
            return Err("the simple variant does not support meld".into());
        }
        if self.ins == 0 {
            return Err("mix needs a nonzero ins weight".into());
        }
        Ok(())
    }

    fn pick(&self, rng: &mut impl Rng) -> &'static str {
        let w = [
            (self.ins, "ins"),
            (self.delmin, "delmin"),
            (self.deckey, "deckey"),
            (self.meld, "meld"),
            (self.peek, "peek"),
        ];
        let total: u32 = w.iter().map(|x| x.0).sum();
        let mut r = rng.gen_range(0..total);
        for (weight, name) in w {
            if r < weight {
                return name;
            }
            r -= weight;
        }
        unreachable!()
    }
}

impl FromStr for Mix {
    type Err = String;

    /// Parses `ins:40,delmin:25,...`; omitted operations get weight 0.
    fn from_str(s: &str) -> Result<Self, String> {
        let mut m = Mix {
            ins: 0,
            delmin: 0,
            deckey: 0,
            meld: 0,
            peek: 0,
        };
        for part in s.split(',') {
            let (k, v) = part.split_once(':').ok_or_else(|| format!("bad mix entry {part:?}"))?;
            let v: u32 = v.parse().map_err(|_| format!("bad weight in {part:?}"))?;
            match k {
                "ins" => m.ins = v,
                "delmin" => m.delmin = v,
                "deckey" => m.deckey = v,
                "meld" => m.meld = v,
                "peek" => m.peek = v,
                _ => return Err(format!("unknown operation {k:?} in mix")),
            }
        }
        Ok(m)
    }
}

impl fmt::Display for Mix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ins:{},delmin:{},deckey:{},meld:{},peek:{}",
            self.ins, self.delmin, self.deckey, self.meld, self.peek
        )
    }
}

const MAX_SEGMENT: usize = 32;

/// Tracks live insertion indices so random picks are O(1).
#[derive(Default)]
struct LiveSet {
    live: Vec<usize>,
    pos: Vec<usize>,
}

impl LiveSet {
    fn add(&mut self, index: usize) {
        if self.pos.len() <= index {
            self.pos.resize(index + 1, usize::MAX);
        }
        self.pos[index] = self.live.len();
        self.live.push(index);
    }

    fn remove(&mut self, index: usize) {
        let p = self.pos[index];
        let last = *self.live.last().unwrap();
        self.live.swap_remove(p);
        if last != index {
            self.pos[last] = p;
        }
        self.pos[index] = usize::MAX;
    }
}

/// Generates a valid random trace. Meld is never generated for the
/// simplified variant.
pub fn generate(seed: u64, n_ops: usize, mix: &Mix, variant: Variant) -> OpTrace {
    generate_with(seed, n_ops, mix, variant, None, 0)
}

/// Like [`generate`], but the first `warmup` operations are inserts and, while
/// more than `cap` keys are live, every insert or meld becomes a delete-min.
pub(crate) fn generate_with(
    seed: u64,
    n_ops: usize,
    mix: &Mix,
    variant: Variant,
    cap: Option<usize>,
    warmup: usize,
) -> OpTrace {
    let mix = if variant == Variant::Simplified { mix.without_meld() } else { *mix };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut oracle = Oracle::new(variant);
    let mut live = LiveSet::default();
    let mut ops = Vec::with_capacity(n_ops);
    let mut segments = 0;
    while ops.len() < n_ops {
        let mut kind = if ops.len() < warmup { "ins" } else { mix.pick(&mut rng) };
        if kind == "deckey" && live.live.is_empty() {
            kind = "ins";
        }
        if matches!(kind, "ins" | "meld") && cap.is_some_and(|c| oracle.len() > c) {
            kind = "delmin";
        }
        let op = match kind {
            "ins" => Op::Insert(rng.gen_range(0..1 << 20)),
            "delmin" => Op::DeleteMin,
            "peek" => Op::FindMin,
            "deckey" => {
                let index = live.live[rng.gen_range(0..live.live.len())];
                let cur = oracle.value_of(index).unwrap();
                Op::DecreaseKey {
                    index,
                    value: cur - rng.gen_range(1..=1 << 12),
                }
            }
            _ => {
                let len = rng.gen_range(0..=MAX_SEGMENT);
                segments += 1;
                Op::Meld {
                    segment: segments - 1,
                    values: (0..len).map(|_| rng.gen_range(0..1 << 20)).collect(),
                }
            }
        };
        let first = oracle.inserted();
        let out = oracle.apply(ops.len(), &op).expect("generated op is valid");
        for index in first..oracle.inserted() {
            live.add(index);
        }
        if let Output::Deleted(Some((_, id))) = out {
            live.remove(id as usize);
        }
        ops.push(op);
    }
    OpTrace { seed, variant, ops }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Run the invariant checker after every `check_every` operations; 0
    /// checks only at the end. `WCHEAP_CHECK=1` forces 1.
    pub check_every: usize,
    pub record_costs: bool,
    pub faults: Faults,
}

/// Effective checkpoint interval after applying `WCHEAP_CHECK`.
pub fn effective_check_every(requested: usize) -> usize {
    match std::env::var("WCHEAP_CHECK") {
        Ok(v) if v == "1" => 1,
        _ => requested,
    }
}

/// First divergence between heap and oracle, or first invariant failure.
#[derive(Debug, Clone)]
pub struct Mismatch {
    /// Index of the operation after which the problem was seen.
    pub op_index: usize,
    pub message: String,
    pub report: Option<InvariantReport>,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "after op {}: {}", self.op_index, self.message)?;
        if let Some(r) = &self.report {
            write!(f, "\n{r}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunResult {
    pub failure: Option<Mismatch>,
    pub rows: Vec<CostRow>,
    pub audit: BudgetAudit,
    /// Invariant checks performed.
    pub checks: u64,
    /// Largest rank seen at any checkpoint.
    pub max_rank: u32,
    /// Largest |A|, |G| and total loss seen at any checkpoint, each relative
    /// to its bound R̂(n)+1.
    pub max_violation_ratio: f64,
    pub ops_run: usize,
}

struct Replay {
    forest: Forest<i64>,
    main: HeapId,
    handles: Vec<NodeHandle>,
    variant: Variant,
}

impl Replay {
    fn counters(&self, h: HeapId) -> CostCounters {
        self.forest.counters(h).unwrap_or_default()
    }

    /// Applies one op; returns the output and the counter delta.
    fn apply(&mut self, op: &Op) -> Result<(Output, CostCounters), String> {
        let f = &mut self.forest;
        let main = self.main;
        let err = |e: HeapError| format!("heap error {e}");
        Ok(match op {
            Op::Insert(v) => {
                let before = f.counters(main).map_err(err)?;
                self.handles.push(f.insert(main, *v).map_err(err)?);
                (Output::None, f.counters(main).map_err(err)? - before)
            }
            Op::DeleteMin => {
                let before = f.counters(main).map_err(err)?;
                let out = match f.delete_min(main) {
                    Ok(k) => Some(k),
                    Err(HeapError::EmptyHeap) => None,
                    Err(e) => return Err(err(e)),
                };
                (Output::Deleted(out), f.counters(main).map_err(err)? - before)
            }
            Op::DecreaseKey { index, value } => {
                let before = f.counters(main).map_err(err)?;
                let x = *self.handles.get(*index).ok_or("deckey of unknown index")?;
                f.decrease_key(main, x, *value).map_err(err)?;
                (Output::None, f.counters(main).map_err(err)? - before)
            }
            Op::Meld { values, .. } => {
                let seg = f.make_heap(self.variant);
                for &v in values {
                    self.handles.push(f.insert(seg, v).map_err(err)?);
                }
                let before = f.counters(main).map_err(err)? + f.counters(seg).map_err(err)?;
                self.main = f.meld(main, seg).map_err(err)?;
                (Output::None, self.counters(self.main) - before)
            }
            Op::FindMin => {
                let out = f.peek(main).map_err(err)?.map(|(k, id)| (*k, id));
                (Output::Min(out), CostCounters::default())
            }
        })
    }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "unknown panic".into()
    }
}

/// Replays `trace` on a fresh heap and the oracle in lockstep, comparing
/// every output and the current minimum after every operation.
pub fn run_trace(trace: &OpTrace, opts: &RunOptions) -> Result<RunResult, TraceError> {
    let check_every = effective_check_every(opts.check_every);
    let mut forest = Forest::new();
    forest.set_faults(opts.faults);
    let main = forest.make_heap(trace.variant);
    let mut rp = Replay {
        forest,
        main,
        handles: Vec::new(),
        variant: trace.variant,
    };
    let mut oracle = Oracle::new(trace.variant);
    let mut res = RunResult::default();
    for (i, op) in trace.ops.iter().enumerate() {
        let n = oracle.len();
        let want = oracle.apply(i, op)?;
        let audit_before = rp.forest.audit().clone();
        let start = opts.record_costs.then(Instant::now);
        let got = panic::catch_unwind(AssertUnwindSafe(|| rp.apply(op)));
        let wall_ns = start.map_or(0, |s| s.elapsed().as_nanos() as u64);
        res.ops_run = i + 1;
        let fail = |message: String| Mismatch {
            op_index: i,
            message,
            report: None,
        };
        let (out, cost) = match got {
            Err(p) => {
                res.failure = Some(fail(format!("panic: {}", panic_message(p))));
                break;
            }
            Ok(Err(e)) => {
                res.failure = Some(fail(e));
                break;
            }
            Ok(Ok(x)) => x,
        };
        if out != want {
            res.failure = Some(fail(format!("heap gave {out:?}, oracle {want:?}")));
            break;
        }
        let min = rp.forest.peek(rp.main).ok().flatten().map(|(k, id)| (*k, id));
        if min != oracle.min() || rp.forest.len(rp.main).ok() != Some(oracle.len()) {
            res.failure = Some(fail(format!(
                "heap min {min:?} size {:?}, oracle min {:?} size {}",
                rp.forest.len(rp.main).ok(),
                oracle.min(),
                oracle.len()
            )));
            break;
        }
        if opts.record_costs {
            let a = rp.forest.audit();
            res.rows.push(CostRow {
                op_index: i,
                op: op.name(),
                n,
                comparisons: cost.comparisons,
                steps: cost.structural_steps,
                loss: a.consumed_loss - audit_before.consumed_loss,
                a: a.consumed_a - audit_before.consumed_a,
                g: a.consumed_g - audit_before.consumed_g,
                wall_ns,
            });
        }
        let last = i + 1 == trace.ops.len();
        if last || (check_every > 0 && (i + 1) % check_every == 0) {
            if let Some(m) = checkpoint(&rp, i, &mut res) {
                res.failure = Some(m);
                break;
            }
        }
    }
    if trace.ops.is_empty() {
        if let Some(m) = checkpoint(&rp, 0, &mut res) {
            res.failure = Some(m);
        }
    }
    res.audit = rp.forest.audit().clone();
    Ok(res)
}

fn checkpoint(rp: &Replay, i: usize, res: &mut RunResult) -> Option<Mismatch> {
    res.checks += 1;
    let rep = match panic::catch_unwind(AssertUnwindSafe(|| rp.forest.check_invariants(rp.main))) {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => {
            return Some(Mismatch {
                op_index: i,
                message: format!("heap error {e}"),
                report: None,
            })
        }
        Err(p) => {
            return Some(Mismatch {
                op_index: i,
                message: format!("checker panic: {}", panic_message(p)),
                report: None,
            })
        }
    };
    res.max_rank = res.max_rank.max(rep.max_rank);
    let bound = rep.rank_bound + 1.0;
    let worst = rep.a_len.max(rep.g_len) as f64;
    res.max_violation_ratio = res.max_violation_ratio.max(worst / bound).max(rep.loss_sum as f64 / bound);
    if rep.passed() {
        None
    } else {
        Some(Mismatch {
            op_index: i,
            message: "invariant check failed".into(),
            report: Some(rep),
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FuzzConfig {
    pub seed: u64,
    pub ops: usize,
    pub mix: Mix,
    pub variant: Variant,
    pub check_every: usize,
    pub faults: Faults,
}

impl FuzzConfig {
    pub fn new(seed: u64, ops: usize, variant: Variant) -> Self {
        FuzzConfig {
            seed,
            ops,
            mix: Mix::default(),
            variant,
            check_every: 16,
            faults: Faults::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FuzzFailure {
    pub mismatch: Mismatch,
    /// Minimized reproducer.
    pub trace: OpTrace,
    pub original_len: usize,
}

#[derive(Debug, Clone)]
pub enum Verdict {
    Pass(RunResult),
    Fail(Box<FuzzFailure>),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass(_))
    }
}

pub fn differential_fuzz(cfg: &FuzzConfig) -> Verdict {
    let trace = generate(cfg.seed, cfg.ops, &cfg.mix, cfg.variant);
    let opts = RunOptions {
        check_every: cfg.check_every,
        record_costs: false,
        faults: cfg.faults,
    };
    let res = run_trace(&trace, &opts).expect("generated traces are valid");
    match res.failure {
        None => Verdict::Pass(res),
        Some(m) => {
            let original_len = trace.ops.len();
            let small = minimize(&trace, &opts);
            let mismatch = run_trace(&small, &opts)
                .ok()
                .and_then(|r| r.failure)
                .unwrap_or(m);
            Verdict::Fail(Box::new(FuzzFailure {
                mismatch,
                trace: small,
                original_len,
            }))
        }
    }
}

const MAX_ATTEMPTS: usize = 4000;

/// Shrinks a failing trace: truncates after the failing op, then greedily
/// deletes chunks of operations while the trace stays valid and failing.
pub fn minimize(trace: &OpTrace, opts: &RunOptions) -> OpTrace {
    let fails_at = |t: &OpTrace| -> Option<usize> { run_trace(t, opts).ok()?.failure.map(|m| m.op_index) };
    let Some(at) = fails_at(trace) else {
        return trace.clone();
    };
    let mut best = trace.clone();
    best.ops.truncate(at + 1);
    if fails_at(&best).is_none() {
        best = trace.clone();
    }
    let mut attempts = 0;
    let mut chunk = (best.ops.len() / 2).max(1);
    loop {
        let mut i = 0;
        while i < best.ops.len() && attempts < MAX_ATTEMPTS {
            attempts += 1;
            let mut cand = best.clone();
            let end = (i + chunk).min(cand.ops.len());
            cand.ops.drain(i..end);
            if let Some(at) = fails_at(&cand) {
                cand.ops.truncate(at + 1);
                best = cand;
            } else {
                i += chunk;
            }
        }
        if chunk == 1 || attempts >= MAX_ATTEMPTS {
            break;
        }
        chunk /= 2;
    }
    best
}
