//! Structure-rewriting steps: deferral conversions, child removal, rank
//! increments and decrements with their violation bookkeeping, linking,
//! degree reduction and the A, G and L reduction steps.
//!
//! Every function here runs in the context of the active heap.

use crate::audit::StepKind;
use crate::list;
use crate::structure::{Edge, Forest, NodeList, NodeState, Siblings, VType, Variant};

/// Why a node loses one rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecrementCause {
    /// A rank child was cut away; the node's degree dropped too.
    ChildRemoval,
    /// A rank child was turned into a nonrank child; the degree is unchanged.
    ChildConversion,
}

/// Result of one attempted reduction step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepOutcome {
    pub applied: bool,
    pub comparisons: u64,
    /// Change of the active heap's total loss.
    pub delta_loss: i64,
    pub delta_a: i64,
    pub delta_g: i64,
}

#[derive(Clone, Copy)]
struct Snapshot {
    comparisons: u64,
    loss: u64,
    a: usize,
    g: usize,
}

impl<K: Ord> Forest<K> {
    fn snapshot(&self) -> Snapshot {
        let rec = &self.heaps[self.active];
        Snapshot {
            comparisons: rec.counters.comparisons,
            loss: rec.loss_sum,
            a: rec.lists[VType::A.slot()].len,
            g: rec.lists[VType::G.slot()].len,
        }
    }

    fn outcome(&mut self, before: Snapshot, applied: bool, kind: StepKind) -> StepOutcome {
        let after = self.snapshot();
        let out = StepOutcome {
            applied,
            comparisons: after.comparisons - before.comparisons,
            delta_loss: after.loss as i64 - before.loss as i64,
            delta_a: after.a as i64 - before.a as i64,
            delta_g: after.g as i64 - before.g as i64,
        };
        if applied {
            let full = self.variant() == Variant::Full;
            let limit = match kind {
                StepKind::DegreeReduction => 3,
                StepKind::A => if full { 4 } else { 1 },
                StepKind::G => 1,
                StepKind::L => if full { 3 } else { 1 },
            };
            self.audit.record_step(kind, out.comparisons, limit);
        }
        out
    }

    /// Turns an implicitly deferred node into an explicitly deferred node of
    /// rank 0 in the active heap.
    pub(crate) fn make_explicit_deferred(&mut self, x: u32) {
        assert!(self.is_implicit(x), "node is not implicitly deferred");
        if self.nodes[x].violation.is_some() {
            self.vl_remove(x);
        }
        let node = &mut self.nodes[x];
        node.state = NodeState::ExplicitDeferred;
        node.loss = 0;
        self.release_rank(x);
        let rank0 = self.heaps[self.active].rank_head;
        self.ranks[rank0].refcount += 1;
        let node = &mut self.nodes[x];
        node.rank = rank0;
        node.rank_value = 0;
        self.step();
    }

    /// Makes a deferred root solid and files it as a new rank root.
    pub(crate) fn make_solid_root(&mut self, x: u32) {
        if !self.is_deferred(x) {
            return;
        }
        if self.is_implicit(x) {
            self.make_explicit_deferred(x);
        }
        self.nodes[x].state = NodeState::SolidNonrankChild;
        let target = match self.variant() {
            Variant::Full => VType::G,
            Variant::Simplified => VType::A,
        };
        self.vl_insert(x, target);
    }

    /// Detaches `c` from its parent. A solid `c` becomes a rank root with loss
    /// 0. Returns the parent and whether the edge counted toward its rank.
    fn cut(&mut self, c: u32) -> (u32, bool) {
        let p = self.nodes[c].parent.expect("cut of a parentless node");
        let rank_edge = self.hangs_by_rank_edge(c);
        self.detach(c);
        if self.is_solid(c) {
            if self.vtype_of(c) == Some(VType::L) {
                self.vl_remove(c);
            }
            if self.nodes[c].loss > 0 {
                self.set_loss(c, 0);
            }
            self.nodes[c].state = NodeState::SolidNonrankChild;
        }
        (p, rank_edge)
    }

    /// Moves child `c` to the root list, decrementing the parent's rank if
    /// `c` hung by a rank edge.
    pub(crate) fn remove_child(&mut self, c: u32) {
        let (p, rank_edge) = self.cut(c);
        self.push_root(c);
        if rank_edge && !self.faults.skip_rank_decrement {
            self.rank_decrement(p, DecrementCause::ChildRemoval);
        }
    }

    pub(crate) fn rank_decrement(&mut self, p: u32, cause: DecrementCause) {
        debug_assert!(self.is_solid(p) && self.nodes[p].rank_value > 0);
        let full = self.variant() == Variant::Full;
        if self.is_rank_root(p) {
            let from = self.vtype_of(p);
            debug_assert!(matches!(from, Some(VType::A | VType::G)), "rank root outside A and G");
            if from.is_some() {
                self.vl_remove(p);
            }
            self.rank_shift(p, false);
            let to = match (full, cause, from) {
                (false, _, _) => VType::A,
                (true, DecrementCause::ChildRemoval, _) => VType::G,
                (true, DecrementCause::ChildConversion, Some(VType::G)) => VType::G,
                (true, DecrementCause::ChildConversion, _) => VType::A,
            };
            self.vl_insert(p, to);
        } else {
            let loss = self.nodes[p].loss;
            match loss {
                0 => {
                    self.rank_shift(p, false);
                    self.set_loss(p, 1);
                    self.vl_insert(p, VType::L);
                }
                1 => {
                    self.vl_remove(p);
                    self.rank_shift(p, false);
                    self.set_loss(p, 2);
                    self.vl_insert_loss2(p);
                }
                _ => {
                    self.rank_shift(p, false);
                    self.set_loss(p, loss + 1);
                }
            }
            self.note_increase(VType::L);
            // The degree limit just dropped by one while the degree did not.
            if loss == 0 && cause == DecrementCause::ChildConversion && full {
                self.degree_reduction_step(p);
            }
        }
    }

    /// Rank increment of a rank root: it swaps between A and G, and entering
    /// G costs a degree reduction.
    pub(crate) fn rank_increment_rank_root(&mut self, s: u32) {
        let from = self.vtype_of(s);
        debug_assert!(matches!(from, Some(VType::A | VType::G)), "rank root outside A and G");
        if from.is_some() {
            self.vl_remove(s);
        }
        self.rank_shift(s, true);
        match (self.variant(), from) {
            (Variant::Simplified, _) => self.vl_insert(s, VType::A),
            (Variant::Full, Some(VType::A)) => {
                self.vl_insert(s, VType::G);
                self.degree_reduction_step(s);
            }
            (Variant::Full, _) => self.vl_insert(s, VType::A),
        }
    }

    /// Compares two solid nodes and hangs the larger below the smaller.
    /// Returns the smaller.
    pub(crate) fn link(&mut self, a: u32, b: u32) -> u32 {
        debug_assert!(a != b && self.is_solid(a) && self.is_solid(b));
        let (s, h) = if self.less(a, b) { (a, b) } else { (b, a) };
        let rank_edge = self.nodes[s].rank_value == self.nodes[h].rank_value;
        if self.nodes[h].on_root_list {
            self.detach(h);
        } else {
            let (p, was_rank) = self.cut(h);
            if was_rank {
                self.rank_decrement(p, DecrementCause::ChildRemoval);
            }
        }
        if rank_edge {
            if matches!(self.vtype_of(h), Some(VType::A | VType::G)) {
                self.vl_remove(h);
            }
            self.attach_child(s, h, Edge::Rank);
            if self.is_rank_root(s) {
                self.rank_increment_rank_root(s);
            } else {
                // s may have just entered L through the cut of h; refile it
                // under the new rank.
                let listed = self.vtype_of(s).is_some();
                if listed {
                    self.vl_remove(s);
                }
                self.rank_shift(s, true);
                if listed {
                    match self.nodes[s].loss {
                        1 => self.vl_insert(s, VType::L),
                        _ => self.vl_insert_loss2(s),
                    }
                }
            }
        } else {
            // h stays on its A/G list as a rank root.
            self.attach_child(s, h, Edge::NonrankSolid);
        }
        s
    }

    /// Bundles the three rightmost deferred children of `x` into a small
    /// solid tree hung below `x`, lowering its degree by two.
    pub(crate) fn degree_reduction_step(&mut self, x: u32) -> StepOutcome {
        let before = self.snapshot();
        if self.variant() == Variant::Simplified {
            return self.outcome(before, false, StepKind::DegreeReduction);
        }
        if self.is_implicit(x) {
            self.make_explicit_deferred(x);
        }
        if self.nodes[x].degree < 3 {
            return self.outcome(before, false, StepKind::DegreeReduction);
        }
        let c3 = list::tail::<_, Siblings>(&self.nodes, self.nodes[x].first_child).unwrap();
        let c2 = self.nodes[c3].siblings.prev.unwrap();
        let c1 = self.nodes[c2].siblings.prev.unwrap();
        if !(self.is_deferred(c1) && self.is_deferred(c2) && self.is_deferred(c3)) {
            return self.outcome(before, false, StepKind::DegreeReduction);
        }
        for c in [c1, c2, c3] {
            self.detach(c);
            if self.is_implicit(c) {
                self.make_explicit_deferred(c);
            }
        }
        // Three-comparison sorting network.
        let (mut s, mut m, mut h) = (c1, c2, c3);
        if self.less(m, s) {
            std::mem::swap(&mut s, &mut m);
        }
        if self.less(h, m) {
            std::mem::swap(&mut m, &mut h);
        }
        if self.less(m, s) {
            std::mem::swap(&mut s, &mut m);
        }
        self.attach_child(s, m, Edge::Rank);
        self.rank_shift(s, true);
        self.attach_child(m, h, Edge::Deferred);
        self.attach_child(x, s, Edge::NonrankSolid);
        self.vl_insert(s, VType::A);
        self.outcome(before, true, StepKind::DegreeReduction)
    }

    pub(crate) fn reduction_step_a(&mut self) -> StepOutcome {
        let before = self.snapshot();
        let Some((x, y)) = self.vl_take_same_rank_pair(VType::A) else {
            return self.outcome(before, false, StepKind::A);
        };
        self.link(x, y);
        self.outcome(before, true, StepKind::A)
    }

    pub(crate) fn reduction_step_g(&mut self) -> StepOutcome {
        let before = self.snapshot();
        if self.variant() == Variant::Simplified {
            return self.outcome(before, false, StepKind::G);
        }
        let Some((x, y)) = self.vl_take_same_rank_pair(VType::G) else {
            return self.outcome(before, false, StepKind::G);
        };
        self.link(x, y);
        self.outcome(before, true, StepKind::G)
    }

    /// Loss reduction: first a node of loss >= 2 is turned into a rank root,
    /// otherwise two loss-1 nodes of equal rank are linked.
    pub(crate) fn reduction_step_l(&mut self) -> StepOutcome {
        let before = self.snapshot();
        if let Some(x) = self.vl_take_loss2() {
            let p = self.nodes[x].parent.expect("lossy node without parent");
            self.vl_remove(x);
            self.set_loss(x, 0);
            self.nodes[x].state = NodeState::SolidNonrankChild;
            let target = match self.variant() {
                Variant::Full => VType::G,
                Variant::Simplified => VType::A,
            };
            self.vl_insert(x, target);
            self.rank_decrement(p, DecrementCause::ChildConversion);
        } else if let Some((a, b)) = self.vl_take_same_rank_pair(VType::L) {
            for x in [a, b] {
                self.vl_remove(x);
                self.set_loss(x, 0);
            }
            let s = self.link(a, b);
            // When the larger node hung below the smaller one, its removal
            // charged a loss to the winner; relinking restored the rank.
            if self.vtype_of(s) == Some(VType::L) {
                self.vl_remove(s);
                self.set_loss(s, 0);
            }
        } else {
            return self.outcome(before, false, StepKind::L);
        }
        self.outcome(before, true, StepKind::L)
    }

    /// Runs two degree reductions on each of the first two nodes of the
    /// active heap's node list and rotates them to the end.
    pub(crate) fn node_list_maintenance(&mut self) {
        let h = self.active;
        for _ in 0..2 {
            let Some(f) = self.heaps[h].node_list else {
                break;
            };
            self.degree_reduction_step(f);
            self.degree_reduction_step(f);
            let head = list::unlink::<_, NodeList>(&mut self.nodes, self.heaps[h].node_list, f);
            self.heaps[h].node_list = list::push_back::<_, NodeList>(&mut self.nodes, head, f);
            self.step();
        }
    }
}
