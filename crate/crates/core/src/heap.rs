//! Public heap operations and the reduction planner.

use thiserror::Error;

use crate::list;
use crate::structure::{
    CostCounters, EffectiveState, Forest, HeapId, NodeHandle, NodeList, NodeState, PlanDelta, Siblings, VType,
    Variant, VariantConfig,
};
use crate::audit::{BudgetAudit, Faults};

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum HeapError {
    #[error("heap handle is stale or the heap was melded away")]
    InvalidHeap,
    #[error("heap is empty")]
    EmptyHeap,
    #[error("new key is larger than the current key")]
    KeyIncrease,
    #[error("node handle is stale or belongs to another heap")]
    InvalidHandle,
    #[error("meld is not supported by the simplified variant")]
    UnsupportedOperation,
}

/// Step counts fixed before any reduction runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReductionPlan {
    pub l_steps: u64,
    pub a_steps: u64,
    pub g_steps: u64,
}

impl ReductionPlan {
    /// Plan for the given increases of (Σloss, |A|, |G|).
    pub fn for_delta(variant: Variant, d: PlanDelta) -> Self {
        match variant {
            Variant::Full => {
                let half_g = d.g.div_ceil(2);
                ReductionPlan {
                    l_steps: d.loss,
                    a_steps: d.a + d.loss + half_g,
                    g_steps: d.a + 2 * d.loss + 2 * half_g,
                }
            }
            Variant::Simplified => ReductionPlan {
                l_steps: d.loss,
                a_steps: d.a + d.loss,
                g_steps: 0,
            },
        }
    }

    /// Comparison budget of the plan for the given increases.
    pub fn budget(variant: Variant, d: PlanDelta) -> u64 {
        match variant {
            Variant::Full => 9 * d.loss + 5 * d.a + 3 * d.g + 1,
            Variant::Simplified => 2 * d.loss + d.a,
        }
    }

    /// Sum of the per-group comparison maxima of the plan: 3 per L-step, 6
    /// per {A, G, G} group and 5 per {A, G} group.
    pub fn row_sum(variant: Variant, d: PlanDelta) -> u64 {
        match variant {
            Variant::Full => 9 * d.loss + 5 * d.a + 6 * d.g.div_ceil(2),
            Variant::Simplified => 2 * d.loss + d.a,
        }
    }
}

impl<K: Ord> Forest<K> {
    fn live_heap(&self, h: HeapId) -> Result<u32, HeapError> {
        if self.heaps.is_current(h.idx, h.generation) && self.heaps[h.idx].size >= 0 {
            Ok(h.idx)
        } else {
            Err(HeapError::InvalidHeap)
        }
    }

    fn live_node(&self, heap: u32, x: NodeHandle) -> Result<u32, HeapError> {
        if !self.nodes.is_current(x.idx, x.generation) {
            return Err(HeapError::InvalidHandle);
        }
        let owner = self.owner_heap(x.idx);
        // Nodes still pointing into a melded-away record belong to whoever absorbed it.
        if owner != heap && self.heaps[owner].size >= 0 {
            return Err(HeapError::InvalidHandle);
        }
        Ok(x.idx)
    }

    pub fn make_heap(&mut self, config: impl Into<VariantConfig>) -> HeapId {
        let idx = self.alloc_heap(config.into());
        self.heap_id(idx)
    }

    pub fn insert(&mut self, heap: HeapId, key: K) -> Result<NodeHandle, HeapError> {
        let h = self.live_heap(heap)?;
        self.activate(h);
        let x = self.new_node(h, key);
        self.push_root(x);
        if self.variant() == Variant::Full {
            let head = self.heaps[h].node_list;
            self.heaps[h].node_list = list::push_back::<_, NodeList>(&mut self.nodes, head, x);
        }
        self.heaps[h].size += 1;
        self.consolidate();
        Ok(self.node_handle(x))
    }

    /// Current minimum without modifying the heap.
    pub fn find_min(&self, heap: HeapId) -> Result<Option<NodeHandle>, HeapError> {
        let h = self.live_heap(heap)?;
        Ok(self.heaps[h].roots.map(|r| self.node_handle(r)))
    }

    /// Key and id of the current minimum.
    pub fn peek(&self, heap: HeapId) -> Result<Option<(&K, u64)>, HeapError> {
        let h = self.live_heap(heap)?;
        Ok(self.heaps[h].roots.map(|r| (&self.nodes[r].key, self.nodes[r].id)))
    }

    pub fn delete_min(&mut self, heap: HeapId) -> Result<(K, u64), HeapError> {
        let h = self.live_heap(heap)?;
        self.activate(h);
        let rho = self.heaps[h].roots.ok_or(HeapError::EmptyHeap)?;
        debug_assert_eq!(self.heaps[h].root_count, 1);
        self.detach(rho);
        let children = self.nodes[rho].first_child.take();
        let degree = std::mem::take(&mut self.nodes[rho].degree);
        let mut c = children;
        while let Some(x) = c {
            let n = &mut self.nodes[x];
            n.parent = None;
            n.on_root_list = true;
            c = n.siblings.next;
            self.step();
        }
        self.heaps[h].roots = children;
        self.heaps[h].root_count = degree as usize;
        if self.nodes[rho].violation.is_some() {
            self.vl_remove(rho);
        }
        self.release_rank(rho);
        let full = self.variant() == Variant::Full;
        if full {
            let head = self.heaps[h].node_list;
            self.heaps[h].node_list = list::unlink::<_, NodeList>(&mut self.nodes, head, rho);
        }
        let node = self.nodes.remove(rho);
        self.heaps[h].size -= 1;
        if full {
            self.node_list_maintenance();
        }
        self.consolidate();
        Ok((node.key, node.id))
    }

    pub fn decrease_key(&mut self, heap: HeapId, node: NodeHandle, key: K) -> Result<(), HeapError> {
        let h = self.live_heap(heap)?;
        let x = self.live_node(h, node)?;
        if key > self.nodes[x].key {
            return Err(HeapError::KeyIncrease);
        }
        self.activate(h);
        if self.nodes[x].parent.is_some() {
            self.remove_child(x);
        }
        self.nodes[x].key = key;
        self.consolidate();
        Ok(())
    }

    /// Melds two heaps. The smaller one is absorbed and its id becomes invalid.
    pub fn meld(&mut self, h1: HeapId, h2: HeapId) -> Result<HeapId, HeapError> {
        let a = self.live_heap(h1)?;
        let b = self.live_heap(h2)?;
        if a == b {
            return Err(HeapError::InvalidHeap);
        }
        if self.heaps[a].config.variant == Variant::Simplified || self.heaps[b].config.variant == Variant::Simplified
        {
            return Err(HeapError::UnsupportedOperation);
        }
        let (small, big) = if self.heaps[a].size < self.heaps[b].size { (a, b) } else { (b, a) };
        self.activate(big);
        let nl = list::append::<_, NodeList>(&mut self.nodes, self.heaps[small].node_list, self.heaps[big].node_list);
        self.heaps[big].node_list = nl;
        let roots = list::append::<_, Siblings>(&mut self.nodes, self.heaps[small].roots, self.heaps[big].roots);
        self.heaps[big].roots = roots;
        let (s_size, s_roots, s_counters) = {
            let s = &mut self.heaps[small];
            let out = (s.size, s.root_count, s.counters);
            s.node_list = None;
            s.roots = None;
            s.root_count = 0;
            s.size = -1;
            s.counters = CostCounters::default();
            out
        };
        let bg = &mut self.heaps[big];
        bg.size += s_size;
        bg.root_count += s_roots;
        bg.counters += s_counters;
        self.step();
        self.consolidate();
        if let Some(rec) = self.heaps.get(small) {
            if rec.size < 0 && self.ranks[rec.rank_head].refcount == 0 && self.ranks[rec.rank_head].next.is_none() {
                self.reclaim_heap(small);
            }
        }
        Ok(self.heap_id(big))
    }

    /// Turns the root list into a single tree and restores violation bounds.
    fn consolidate(&mut self) {
        let h = self.active;
        let full = self.variant() == Variant::Full;

        // Phase 1: normalize roots.
        self.suppress_pending = true;
        let mut k = 0u64;
        let mut cur = self.heaps[h].roots;
        while let Some(r) = cur {
            cur = self.nodes[r].siblings.next;
            self.normalize_root(r);
            k += 1;
        }
        let pending = std::mem::take(&mut self.heaps[h].pending);
        self.plan_and_reduce(pending);
        let before = self.heaps[h].counters.comparisons;
        let root_plan = ReductionPlan {
            l_steps: 0,
            a_steps: k,
            g_steps: if full { k + 1 } else { 0 },
        };
        self.execute(root_plan);
        let used = self.heaps[h].counters.comparisons - before;
        let budget = if full { 4 * k + k + 1 } else { k };
        self.audit.record_root_plan(used, budget);
        self.suppress_pending = false;

        // Phase 2: pair roots from the right, stepping left after each link.
        if let Some(head) = self.heaps[h].roots {
            let mut cur = list::tail::<_, Siblings>(&self.nodes, Some(head)).unwrap();
            while self.heaps[h].root_count > 1 {
                let left = self.nodes[cur].siblings.prev.unwrap();
                let w = self.link(cur, left);
                cur = self.nodes[w].siblings.prev.unwrap();
            }
        }
        let pending = std::mem::take(&mut self.heaps[h].pending);
        self.plan_and_reduce(pending);
    }

    fn normalize_root(&mut self, r: u32) {
        self.nodes[r].parent = None;
        self.step();
        if self.is_deferred(r) {
            self.make_solid_root(r);
            return;
        }
        if self.vtype_of(r) == Some(VType::L) {
            self.vl_remove(r);
        }
        if self.nodes[r].loss > 0 {
            self.set_loss(r, 0);
        }
        self.nodes[r].state = NodeState::SolidNonrankChild;
        if self.vtype_of(r).is_none() {
            self.vl_insert(r, VType::A);
        }
    }

    /// Executes the plan for the given violation increases and audits its cost.
    pub(crate) fn plan_and_reduce(&mut self, d: PlanDelta) {
        let variant = self.variant();
        let plan = ReductionPlan::for_delta(variant, d);
        let before = self.heaps[self.active].counters.comparisons;
        let saved = self.suppress_pending;
        self.suppress_pending = true;
        self.execute(plan);
        self.suppress_pending = saved;
        let used = self.heaps[self.active].counters.comparisons - before;
        self.audit
            .record_plan(d, used, ReductionPlan::budget(variant, d), ReductionPlan::row_sum(variant, d));
    }

    fn execute(&mut self, plan: ReductionPlan) {
        let mut l = plan.l_steps;
        let mut a = plan.a_steps;
        let mut g = plan.g_steps;
        while l > 0 {
            if !self.any_applicable(l, a, g) {
                return;
            }
            self.reduction_step_l();
            l -= 1;
        }
        while a > 0 || g > 0 {
            if !self.any_applicable(0, a, g) {
                return;
            }
            if a > 0 {
                self.reduction_step_a();
                a -= 1;
            }
            let group_g = if g >= a + 2 { 2 } else { 1 }.min(g);
            for _ in 0..group_g {
                self.reduction_step_g();
                g -= 1;
            }
        }
    }

    fn any_applicable(&self, l: u64, a: u64, g: u64) -> bool {
        let h = self.active;
        (l > 0
            && (self.heaps[h].lists[VType::L.slot()].boundary.is_some()
                || self.vl_take_same_rank_pair(VType::L).is_some()))
            || (a > 0 && self.vl_take_same_rank_pair(VType::A).is_some())
            || (g > 0 && self.vl_take_same_rank_pair(VType::G).is_some())
    }
}

impl<K> Forest<K> {
    fn heap_index(&self, h: HeapId) -> Result<u32, HeapError> {
        if self.heaps.is_current(h.idx, h.generation) && self.heaps[h.idx].size >= 0 {
            Ok(h.idx)
        } else {
            Err(HeapError::InvalidHeap)
        }
    }

    pub fn is_live(&self, heap: HeapId) -> bool {
        self.heap_index(heap).is_ok()
    }

    pub fn len(&self, heap: HeapId) -> Result<usize, HeapError> {
        Ok(self.heaps[self.heap_index(heap)?].size as usize)
    }

    pub fn is_empty(&self, heap: HeapId) -> Result<bool, HeapError> {
        Ok(self.len(heap)? == 0)
    }

    pub fn variant_of(&self, heap: HeapId) -> Result<Variant, HeapError> {
        Ok(self.heaps[self.heap_index(heap)?].config.variant)
    }

    /// Comparison and structural-step totals charged to the heap so far.
    pub fn counters(&self, heap: HeapId) -> Result<CostCounters, HeapError> {
        Ok(self.heaps[self.heap_index(heap)?].counters)
    }

    /// Budget accounting shared by all heaps of this forest.
    pub fn audit(&self) -> &BudgetAudit {
        &self.audit
    }

    pub fn key(&self, node: NodeHandle) -> Option<&K> {
        self.contains(node).then(|| &self.nodes[node.idx].key)
    }

    pub fn node_id(&self, node: NodeHandle) -> Option<u64> {
        self.contains(node).then(|| self.nodes[node.idx].id)
    }

    /// True while the handle refers to a node that has not been deleted.
    pub fn contains(&self, node: NodeHandle) -> bool {
        self.nodes.is_current(node.idx, node.generation)
    }

    pub fn node_state(&self, node: NodeHandle) -> Option<EffectiveState> {
        self.contains(node).then(|| self.effective_state(node.idx))
    }

    pub fn node_rank(&self, node: NodeHandle) -> Option<u32> {
        self.contains(node).then(|| self.nodes[node.idx].rank_value)
    }

    pub fn node_loss(&self, node: NodeHandle) -> Option<u32> {
        self.contains(node).then(|| self.nodes[node.idx].loss)
    }

    pub fn node_degree(&self, node: NodeHandle) -> Option<u32> {
        self.contains(node).then(|| self.nodes[node.idx].degree)
    }

    pub fn parent(&self, node: NodeHandle) -> Option<NodeHandle> {
        if !self.contains(node) {
            return None;
        }
        self.nodes[node.idx].parent.map(|p| self.node_handle(p))
    }

    /// Violation list currently holding the node, if any.
    pub fn violation_list(&self, node: NodeHandle) -> Option<VType> {
        if !self.contains(node) {
            return None;
        }
        self.nodes[node.idx]
            .violation
            .map(|e| self.entries[e].vtype)
    }

    /// Sizes of A and G and the total loss of a heap.
    pub fn violation_sizes(&self, heap: HeapId) -> Result<(usize, usize, u64), HeapError> {
        let rec = &self.heaps[self.heap_index(heap)?];
        Ok((rec.lists[0].len, rec.lists[1].len, rec.loss_sum))
    }

    /// Number of heap records still allocated, including dead ones awaiting reclamation.
    pub fn heap_records(&self) -> usize {
        self.heaps.len()
    }

    #[doc(hidden)]
    pub fn set_faults(&mut self, faults: Faults) {
        self.faults = faults;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full() -> (Forest<i64>, HeapId) {
        let mut f = Forest::new();
        let h = f.make_heap(Variant::Full);
        (f, h)
    }

    #[test]
    fn empty_heap_has_no_min() {
        let (f, h) = full();
        assert_eq!(f.len(h), Ok(0));
        assert_eq!(f.find_min(h), Ok(None));
    }

    #[test]
    fn simplified_heap_has_no_node_list() {
        let mut f = Forest::new();
        let h = f.make_heap(Variant::Simplified);
        f.insert(h, 3).unwrap();
        assert!(f.heaps[h.idx].node_list.is_none());
    }

    #[test]
    fn separate_heaps_have_separate_rank_lists() {
        let mut f: Forest<i64> = Forest::new();
        let a = f.make_heap(Variant::Full);
        let b = f.make_heap(Variant::Full);
        assert_ne!(f.heaps[a.idx].rank_head, f.heaps[b.idx].rank_head);
    }

    #[test]
    fn three_values_come_out_sorted() {
        let (mut f, h) = full();
        for v in [3, 1, 2] {
            f.insert(h, v).unwrap();
        }
        let out: Vec<i64> = (0..3).map(|_| f.delete_min(h).unwrap().0).collect();
        assert_eq!(out, vec![1, 2, 3]);
        assert_eq!(f.delete_min(h), Err(HeapError::EmptyHeap));
    }

    #[test]
    fn descending_inserts_keep_one_tree() {
        let (mut f, h) = full();
        for v in (0..100).rev() {
            f.insert(h, v).unwrap();
            assert_eq!(f.heaps[h.idx].root_count, 1);
            assert_eq!(f.peek(h).unwrap().map(|(k, _)| *k), Some(v));
        }
    }

    #[test]
    fn key_increase_is_rejected() {
        let (mut f, h) = full();
        let x = f.insert(h, 5).unwrap();
        assert_eq!(f.decrease_key(h, x, 6), Err(HeapError::KeyIncrease));
        assert_eq!(f.decrease_key(h, x, 5), Ok(()));
    }

    #[test]
    fn deleted_handle_is_invalid() {
        let (mut f, h) = full();
        let x = f.insert(h, 5).unwrap();
        f.delete_min(h).unwrap();
        assert_eq!(f.decrease_key(h, x, 1), Err(HeapError::InvalidHandle));
    }

    #[test]
    fn foreign_handle_is_invalid() {
        let (mut f, h) = full();
        let other = f.make_heap(Variant::Full);
        let x = f.insert(other, 5).unwrap();
        f.insert(h, 7).unwrap();
        assert_eq!(f.decrease_key(h, x, 1), Err(HeapError::InvalidHandle));
    }

    #[test]
    fn loss_after_rank_grandchild_removed() {
        let (mut f, h) = full();
        let handles: Vec<NodeHandle> = (0..64).map(|v| f.insert(h, v).unwrap()).collect();
        // Find a rank child whose parent is a loss-0 rank child.
        let target = handles.iter().copied().find(|&x| {
            let Some(p) = f.parent(x) else { return false };
            f.node_state(x) == Some(EffectiveState::SolidRankChild)
                && f.node_state(p) == Some(EffectiveState::SolidRankChild)
                && f.node_loss(p) == Some(0)
        });
        let x = target.expect("64 sequential inserts build nested rank children");
        let p = f.parent(x).unwrap();
        f.activate(h.idx);
        f.remove_child(x.idx);
        assert_eq!(f.node_loss(p), Some(1));
        assert_eq!(f.violation_list(p), Some(VType::L));
    }

    #[test]
    fn meld_rejects_bad_arguments() {
        let (mut f, h) = full();
        assert_eq!(f.meld(h, h), Err(HeapError::InvalidHeap));
        let s = f.make_heap(Variant::Full);
        let r = f.meld(h, s).unwrap();
        let gone = if r == h { s } else { h };
        assert_eq!(f.meld(gone, r), Err(HeapError::InvalidHeap));
        let a = f.make_heap(Variant::Simplified);
        let b = f.make_heap(Variant::Simplified);
        assert_eq!(f.meld(a, b), Err(HeapError::UnsupportedOperation));
    }

    #[test]
    fn meld_sizes_add_and_small_nodes_turn_implicit() {
        let mut f: Forest<i64> = Forest::new();
        let big = f.make_heap(Variant::Full);
        let small = f.make_heap(Variant::Full);
        for v in 0..10 {
            f.insert(big, v * 2).unwrap();
        }
        let xs: Vec<NodeHandle> = (0..3).map(|v| f.insert(small, v * 2 + 1).unwrap()).collect();
        let h = f.meld(small, big).unwrap();
        assert_eq!(h, big);
        assert_eq!(f.len(h), Ok(13));
        assert_eq!(f.peek(h).unwrap().map(|(k, _)| *k), Some(0));
        assert!(!f.is_live(small));
        // The old root was touched by the meld; its children were not.
        let untouched = xs
            .iter()
            .filter(|&&x| f.node_state(x) == Some(EffectiveState::ImplicitDeferred))
            .count();
        assert!(untouched >= 1);
        let out: Vec<i64> = (0..13).map(|_| f.delete_min(h).unwrap().0).collect();
        let mut want: Vec<i64> = (0..10).map(|v| v * 2).chain((0..3).map(|v| v * 2 + 1)).collect();
        want.sort();
        assert_eq!(out, want);
    }

    #[test]
    fn empty_plan_costs_nothing() {
        let (mut f, h) = full();
        f.insert(h, 1).unwrap();
        f.activate(h.idx);
        let before = f.heaps[h.idx].counters.comparisons;
        f.plan_and_reduce(PlanDelta::default());
        assert_eq!(f.heaps[h.idx].counters.comparisons, before);
    }

    #[test]
    fn plan_counts_follow_table() {
        let p = ReductionPlan::for_delta(Variant::Full, PlanDelta { loss: 2, a: 3, g: 5 });
        assert_eq!(p, ReductionPlan { l_steps: 2, a_steps: 8, g_steps: 13 });
        let p = ReductionPlan::for_delta(Variant::Simplified, PlanDelta { loss: 2, a: 3, g: 0 });
        assert_eq!(p, ReductionPlan { l_steps: 2, a_steps: 5, g_steps: 0 });
    }
}
