//! Reference priority queues with the same instrumented comparisons.

use crate::structure::CostCounters;

type Key = (i64, u64);

/// Indexed binary min-heap.
#[derive(Debug, Default)]
pub struct BinaryHeap {
    heap: Vec<usize>,
    keys: Vec<Key>,
    /// Position in `heap` per insertion index, `usize::MAX` once popped.
    pos: Vec<usize>,
    counters: CostCounters,
}

impl BinaryHeap {
    pub fn new() -> Self {
        Self::default()
    }

    fn less(&mut self, a: usize, b: usize) -> bool {
        self.counters.comparisons += 1;
        self.keys[a] < self.keys[b]
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.pos[self.heap[i]] = i;
        self.pos[self.heap[j]] = j;
        self.counters.structural_steps += 1;
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let p = (i - 1) / 2;
            if !self.less(self.heap[i], self.heap[p]) {
                break;
            }
            self.swap(i, p);
            i = p;
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        loop {
            let l = 2 * i + 1;
            if l >= self.heap.len() {
                break;
            }
            let r = l + 1;
            let c = if r < self.heap.len() && self.less(self.heap[r], self.heap[l]) { r } else { l };
            if !self.less(self.heap[c], self.heap[i]) {
                break;
            }
            self.swap(i, c);
            i = c;
        }
    }

    pub fn push(&mut self, value: i64) -> usize {
        let idx = self.keys.len();
        self.keys.push((value, idx as u64));
        self.pos.push(self.heap.len());
        self.heap.push(idx);
        self.counters.structural_steps += 1;
        self.sift_up(self.heap.len() - 1);
        idx
    }

    pub fn pop(&mut self) -> Option<Key> {
        let top = *self.heap.first()?;
        let last = self.heap.len() - 1;
        self.swap(0, last);
        self.heap.pop();
        self.pos[top] = usize::MAX;
        self.sift_down(0);
        Some(self.keys[top])
    }

    pub fn decrease(&mut self, index: usize, value: i64) {
        assert!(value <= self.keys[index].0, "key increase");
        self.keys[index].0 = value;
        self.sift_up(self.pos[index]);
    }

    pub fn contains(&self, index: usize) -> bool {
        self.pos.get(index).is_some_and(|&p| p != usize::MAX)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn counters(&self) -> CostCounters {
        self.counters
    }
}

const NIL: usize = usize::MAX;

#[derive(Debug, Clone)]
struct PNode {
    key: Key,
    child: usize,
    next: usize,
    /// Parent when leftmost child, otherwise left sibling.
    prev: usize,
    live: bool,
}

/// Pairing heap with two-pass pop and cut-and-meld decrease.
#[derive(Debug, Default)]
pub struct PairingHeap {
    nodes: Vec<PNode>,
    root: Option<usize>,
    len: usize,
    counters: CostCounters,
}

impl PairingHeap {
    pub fn new() -> Self {
        Self::default()
    }

    fn link(&mut self, a: usize, b: usize) -> usize {
        self.counters.comparisons += 1;
        self.counters.structural_steps += 1;
        let (s, h) = if self.nodes[a].key < self.nodes[b].key { (a, b) } else { (b, a) };
        let first = self.nodes[s].child;
        self.nodes[h].next = first;
        self.nodes[h].prev = s;
        if first != NIL {
            self.nodes[first].prev = h;
        }
        self.nodes[s].child = h;
        self.nodes[s].next = NIL;
        self.nodes[s].prev = NIL;
        s
    }

    fn meld_root(&mut self, x: usize) {
        self.root = Some(match self.root {
            None => x,
            Some(r) => self.link(r, x),
        });
    }

    pub fn push(&mut self, value: i64) -> usize {
        let idx = self.nodes.len();
        self.nodes.push(PNode {
            key: (value, idx as u64),
            child: NIL,
            next: NIL,
            prev: NIL,
            live: true,
        });
        self.len += 1;
        self.meld_root(idx);
        idx
    }

    pub fn pop(&mut self) -> Option<Key> {
        let r = self.root?;
        self.nodes[r].live = false;
        self.len -= 1;
        let mut pairs = Vec::new();
        let mut c = self.nodes[r].child;
        while c != NIL {
            let d = self.nodes[c].next;
            if d == NIL {
                pairs.push(c);
                break;
            }
            let e = self.nodes[d].next;
            pairs.push(self.link(c, d));
            c = e;
        }
        self.root = pairs.pop();
        while let Some(p) = pairs.pop() {
            let root = self.root.unwrap();
            self.root = Some(self.link(root, p));
        }
        if let Some(root) = self.root {
            self.nodes[root].next = NIL;
            self.nodes[root].prev = NIL;
        }
        Some(self.nodes[r].key)
    }

    pub fn decrease(&mut self, index: usize, value: i64) {
        assert!(value <= self.nodes[index].key.0, "key increase");
        self.nodes[index].key.0 = value;
        if self.root == Some(index) {
            return;
        }
        let (p, n) = (self.nodes[index].prev, self.nodes[index].next);
        if self.nodes[p].child == index {
            self.nodes[p].child = n;
        } else {
            self.nodes[p].next = n;
        }
        if n != NIL {
            self.nodes[n].prev = p;
        }
        self.nodes[index].next = NIL;
        self.nodes[index].prev = NIL;
        self.counters.structural_steps += 1;
        self.meld_root(index);
    }

    pub fn contains(&self, index: usize) -> bool {
        self.nodes.get(index).is_some_and(|n| n.live)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn counters(&self) -> CostCounters {
        self.counters
    }
}
