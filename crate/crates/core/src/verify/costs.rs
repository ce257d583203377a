//! Per-operation cost rows and worst-case envelopes.

use std::collections::BTreeMap;

use super::fuzz::{generate_with, run_trace, Mix, RunOptions};
use super::trace::{OpTrace, TraceError};
use crate::audit::BudgetAudit;
use crate::structure::Variant;

pub const CSV_HEADER: &str = "op_index,op,n,comparisons,steps,wall_ns";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostRow {
    pub op_index: usize,
    pub op: &'static str,
    /// Live keys before the operation.
    pub n: usize,
    pub comparisons: u64,
    pub steps: u64,
    /// Violation increases (Σloss, |A|, |G|) consumed by reduction plans during the operation.
    pub loss: u64,
    pub a: u64,
    pub g: u64,
    pub wall_ns: u64,
}

impl CostRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.op_index, self.op, self.n, self.comparisons, self.steps, self.wall_ns
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpEnvelope {
    pub op: &'static str,
    pub count: u64,
    pub max_comparisons: u64,
    pub max_steps: u64,
}

/// Envelope `c1·log₂(n+2) + c2` lying on or above every fitted point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogFit {
    pub c1: f64,
    pub c2: f64,
}

impl LogFit {
    pub fn at(&self, n: usize) -> f64 {
        self.c1 * ((n + 2) as f64).log2() + self.c2
    }
}

#[derive(Debug, Clone, Default)]
pub struct CostSummary {
    pub envelopes: Vec<OpEnvelope>,
    pub delete_min_comparisons: Option<LogFit>,
    pub delete_min_steps: Option<LogFit>,
    pub plans: u64,
    pub plan_overruns: u64,
    pub root_plans: u64,
    pub root_plan_overruns: u64,
    pub step_overruns: u64,
}

impl CostSummary {
    pub fn envelope(&self, op: &str) -> Option<&OpEnvelope> {
        self.envelopes.iter().find(|e| e.op == op)
    }
}

/// Least-squares line through the per-bucket maxima of `y` against
/// log₂(n+2), buckets being powers of two of n+2, then lifted so that every
/// point lies on or below it. The slope is clamped at 0.
pub fn fit_log_envelope(points: impl IntoIterator<Item = (usize, u64)>) -> Option<LogFit> {
    let mut buckets: BTreeMap<u32, (f64, u64)> = BTreeMap::new();
    let mut all = Vec::new();
    for (n, y) in points {
        let x = ((n + 2) as f64).log2();
        all.push((x, y as f64));
        let b = buckets.entry(x.floor() as u32).or_insert((x, 0));
        if y >= b.1 {
            *b = (x, y);
        }
    }
    if all.is_empty() {
        return None;
    }
    let pts: Vec<(f64, f64)> = buckets.values().map(|&(x, y)| (x, y as f64)).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let c1 = if sxx > 0.0 { (sxy / sxx).max(0.0) } else { 0.0 };
    let c2 = all.iter().map(|&(x, y)| y - c1 * x).fold(f64::NEG_INFINITY, f64::max);
    Some(LogFit { c1, c2 })
}

pub fn summarize(rows: &[CostRow], audit: &BudgetAudit) -> CostSummary {
    let mut env: Vec<OpEnvelope> = Vec::new();
    for r in rows {
        let e = match env.iter_mut().find(|e| e.op == r.op) {
            Some(e) => e,
            None => {
                env.push(OpEnvelope {
                    op: r.op,
                    count: 0,
                    max_comparisons: 0,
                    max_steps: 0,
                });
                env.last_mut().unwrap()
            }
        };
        e.count += 1;
        e.max_comparisons = e.max_comparisons.max(r.comparisons);
        e.max_steps = e.max_steps.max(r.steps);
    }
    let dm = || rows.iter().filter(|r| r.op == "delmin" && r.n > 0);
    CostSummary {
        envelopes: env,
        delete_min_comparisons: fit_log_envelope(dm().map(|r| (r.n, r.comparisons))),
        delete_min_steps: fit_log_envelope(dm().map(|r| (r.n, r.steps))),
        plans: audit.plans,
        plan_overruns: audit.plan_overruns,
        root_plans: audit.root_plans,
        root_plan_overruns: audit.root_plan_overruns,
        step_overruns: audit.step_overruns,
    }
}

/// Replays `trace` and returns one cost row per operation plus the summary.
pub fn measure_costs(trace: &OpTrace) -> Result<(Vec<CostRow>, CostSummary), TraceError> {
    let opts = RunOptions {
        check_every: 0,
        record_costs: true,
        ..Default::default()
    };
    let res = run_trace(trace, &opts)?;
    let summary = summarize(&res.rows, &res.audit);
    Ok((res.rows, summary))
}

/// `n` random inserts followed by `steady_ops` mixed operations that keep
/// the heap near size `n`.
pub fn random_workload(seed: u64, n: usize, steady_ops: usize, variant: Variant) -> OpTrace {
    let mix = Mix {
        ins: 30,
        delmin: 30,
        deckey: 30,
        meld: 5,
        peek: 5,
    };
    generate_with(seed, n + steady_ops, &mix, variant, Some(n), n)
}
