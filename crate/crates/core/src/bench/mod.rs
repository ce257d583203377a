//! Workload runner comparing the heaps of this crate with binary and
//! pairing heap baselines under one counted comparator.

mod baseline;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use baseline::{BinaryHeap, PairingHeap};

use crate::structure::{CostCounters, Forest, HeapId, NodeHandle, Variant};

/// Minimal priority-queue interface shared by all benchmarked heaps.
/// Elements are named by insertion index.
pub trait DecreaseKeyQueue {
    fn push(&mut self, value: i64) -> usize;
    fn pop(&mut self) -> Option<(i64, u64)>;
    fn decrease(&mut self, index: usize, value: i64);
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn counters(&self) -> CostCounters;
}

/// A forest holding a single heap.
pub struct WcHeap {
    forest: Forest<i64>,
    heap: HeapId,
    handles: Vec<NodeHandle>,
}

impl WcHeap {
    pub fn new(variant: Variant) -> Self {
        let mut forest = Forest::new();
        let heap = forest.make_heap(variant);
        WcHeap {
            forest,
            heap,
            handles: Vec::new(),
        }
    }
}

impl DecreaseKeyQueue for WcHeap {
    fn push(&mut self, value: i64) -> usize {
        self.handles.push(self.forest.insert(self.heap, value).unwrap());
        self.handles.len() - 1
    }

    fn pop(&mut self) -> Option<(i64, u64)> {
        self.forest.delete_min(self.heap).ok()
    }

    fn decrease(&mut self, index: usize, value: i64) {
        self.forest.decrease_key(self.heap, self.handles[index], value).unwrap();
    }

    fn len(&self) -> usize {
        self.forest.len(self.heap).unwrap()
    }

    fn counters(&self) -> CostCounters {
        self.forest.counters(self.heap).unwrap()
    }
}

impl DecreaseKeyQueue for BinaryHeap {
    fn push(&mut self, value: i64) -> usize {
        BinaryHeap::push(self, value)
    }
    fn pop(&mut self) -> Option<(i64, u64)> {
        BinaryHeap::pop(self)
    }
    fn decrease(&mut self, index: usize, value: i64) {
        BinaryHeap::decrease(self, index, value)
    }
    fn len(&self) -> usize {
        BinaryHeap::len(self)
    }
    fn counters(&self) -> CostCounters {
        BinaryHeap::counters(self)
    }
}

impl DecreaseKeyQueue for PairingHeap {
    fn push(&mut self, value: i64) -> usize {
        PairingHeap::push(self, value)
    }
    fn pop(&mut self) -> Option<(i64, u64)> {
        PairingHeap::pop(self)
    }
    fn decrease(&mut self, index: usize, value: i64) {
        PairingHeap::decrease(self, index, value)
    }
    fn len(&self) -> usize {
        PairingHeap::len(self)
    }
    fn counters(&self) -> CostCounters {
        PairingHeap::counters(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Impl {
    WcheapFull,
    WcheapSimple,
    Binary,
    Pairing,
}

impl Impl {
    pub const ALL: [Impl; 4] = [Impl::WcheapFull, Impl::WcheapSimple, Impl::Binary, Impl::Pairing];

    pub fn name(self) -> &'static str {
        match self {
            Impl::WcheapFull => "wcheap-full",
            Impl::WcheapSimple => "wcheap-simple",
            Impl::Binary => "binary",
            Impl::Pairing => "pairing",
        }
    }

    pub fn build(self) -> Box<dyn DecreaseKeyQueue> {
        match self {
            Impl::WcheapFull => Box::new(WcHeap::new(Variant::Full)),
            Impl::WcheapSimple => Box::new(WcHeap::new(Variant::Simplified)),
            Impl::Binary => Box::new(BinaryHeap::new()),
            Impl::Pairing => Box::new(PairingHeap::new()),
        }
    }
}

impl FromStr for Impl {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Impl::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| format!("unknown implementation {s:?}"))
    }
}

impl fmt::Display for Impl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Workload {
    /// Ascending inserts, then pops until empty.
    Sorted,
    Reverse,
    Random,
    /// Shortest paths on a seeded random graph.
    Dijkstra,
}

impl Workload {
    pub const ALL: [Workload; 4] = [Workload::Sorted, Workload::Reverse, Workload::Random, Workload::Dijkstra];

    pub fn name(self) -> &'static str {
        match self {
            Workload::Sorted => "sorted",
            Workload::Reverse => "reverse",
            Workload::Random => "random",
            Workload::Dijkstra => "dijkstra",
        }
    }
}

impl FromStr for Workload {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Workload::ALL
            .into_iter()
            .find(|w| w.name() == s)
            .ok_or_else(|| format!("unknown workload {s:?}"))
    }
}

pub const RESULT_HEADER: &str = "op_index,op,n,comparisons,steps,wall_ns";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultRow {
    pub op_index: usize,
    pub op: &'static str,
    pub n: usize,
    pub comparisons: u64,
    pub steps: u64,
    pub wall_ns: u64,
}

impl ResultRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.op_index, self.op, self.n, self.comparisons, self.steps, self.wall_ns
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BenchSummary {
    pub total_comparisons: u64,
    pub total_steps: u64,
    pub max_comparisons: BTreeMap<&'static str, u64>,
    pub max_steps: BTreeMap<&'static str, u64>,
    pub wall_ns: u64,
    /// Sum of finite shortest-path distances (dijkstra workload only).
    pub distance_sum: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct BenchRun {
    pub rows: Vec<ResultRow>,
    pub summary: BenchSummary,
}

struct Recorder<'a> {
    q: &'a mut dyn DecreaseKeyQueue,
    rows: Vec<ResultRow>,
}

impl Recorder<'_> {
    fn run<T>(&mut self, op: &'static str, f: impl FnOnce(&mut dyn DecreaseKeyQueue) -> T) -> T {
        let n = self.q.len();
        let before = self.q.counters();
        let t = Instant::now();
        let out = f(self.q);
        let wall_ns = t.elapsed().as_nanos() as u64;
        let d = self.q.counters() - before;
        self.rows.push(ResultRow {
            op_index: self.rows.len(),
            op,
            n,
            comparisons: d.comparisons,
            steps: d.structural_steps,
            wall_ns,
        });
        out
    }
}

/// Directed graph with a Hamiltonian path 0→1→…→n-1 plus 3n random arcs.
pub fn random_graph(n: usize, seed: u64) -> Vec<Vec<(usize, u64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj = vec![Vec::new(); n];
    for (i, a) in adj.iter_mut().enumerate().take(n.saturating_sub(1)) {
        a.push((i + 1, rng.gen_range(1..=1000)));
    }
    if n > 0 {
        for _ in 0..3 * n {
            let u = rng.gen_range(0..n);
            let v = rng.gen_range(0..n);
            adj[u].push((v, rng.gen_range(1..=1000)));
        }
    }
    adj
}

pub fn run_workload(workload: Workload, n: usize, imp: Impl, seed: u64) -> BenchRun {
    let mut q = imp.build();
    let start = Instant::now();
    let mut rec = Recorder {
        q: q.as_mut(),
        rows: Vec::new(),
    };
    let mut distance_sum = None;
    match workload {
        Workload::Sorted | Workload::Reverse | Workload::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in 0..n {
                let v = match workload {
                    Workload::Sorted => i as i64,
                    Workload::Reverse => (n - i) as i64,
                    _ => rng.gen_range(0..1 << 30),
                };
                rec.run("ins", |q| q.push(v));
            }
            for _ in 0..n {
                rec.run("delmin", |q| q.pop());
            }
        }
        Workload::Dijkstra => {
            let adj = random_graph(n, seed);
            let mut dist = vec![u64::MAX; n];
            let mut index_of = vec![usize::MAX; n];
            let mut vertex_of = Vec::new();
            let mut done = vec![false; n];
            if n > 0 {
                dist[0] = 0;
                index_of[0] = rec.run("ins", |q| q.push(0));
                vertex_of.push(0);
            }
            while !rec.q.is_empty() {
                let (d, id) = rec.run("delmin", |q| q.pop()).expect("queue is nonempty");
                let u = vertex_of[id as usize];
                done[u] = true;
                for &(v, w) in &adj[u] {
                    let nd = d as u64 + w;
                    if done[v] || nd >= dist[v] {
                        continue;
                    }
                    dist[v] = nd;
                    if index_of[v] == usize::MAX {
                        index_of[v] = rec.run("ins", |q| q.push(nd as i64));
                        vertex_of.push(v);
                    } else {
                        let ix = index_of[v];
                        rec.run("deckey", |q| q.decrease(ix, nd as i64));
                    }
                }
            }
            distance_sum = Some(dist.iter().filter(|&&d| d != u64::MAX).sum());
        }
    }
    let rows = rec.rows;
    let wall_ns = start.elapsed().as_nanos() as u64;
    let mut summary = BenchSummary {
        wall_ns,
        distance_sum,
        ..Default::default()
    };
    for r in &rows {
        summary.total_comparisons += r.comparisons;
        summary.total_steps += r.steps;
        let c = summary.max_comparisons.entry(r.op).or_default();
        *c = (*c).max(r.comparisons);
        let s = summary.max_steps.entry(r.op).or_default();
        *s = (*s).max(r.steps);
    }
    BenchRun { rows, summary }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_impl_sorts() {
        for imp in Impl::ALL {
            for w in [Workload::Sorted, Workload::Reverse, Workload::Random] {
                let run = run_workload(w, 300, imp, 1);
                assert_eq!(run.rows.iter().filter(|r| r.op == "delmin").count(), 300, "{imp} {w:?}");
            }
            let mut q = imp.build();
            for v in [5, -2, 9, 5, 0, 7, 3] {
                q.push(v);
            }
            let out: Vec<i64> = std::iter::from_fn(|| q.pop().map(|p| p.0)).collect();
            assert_eq!(out, [-2, 0, 3, 5, 5, 7, 9], "{imp}");
        }
    }

    #[test]
    fn dijkstra_distances_agree() {
        let sums: Vec<_> = Impl::ALL
            .iter()
            .map(|&i| run_workload(Workload::Dijkstra, 2000, i, 7).summary.distance_sum)
            .collect();
        assert!(sums.iter().all(|s| *s == sums[0] && s.is_some()), "{sums:?}");
    }

    #[test]
    fn names_round_trip() {
        for i in Impl::ALL {
            assert_eq!(i.name().parse::<Impl>(), Ok(i));
        }
        assert!("fib".parse::<Impl>().is_err());
        assert_eq!("dijkstra".parse::<Workload>(), Ok(Workload::Dijkstra));
    }
}
