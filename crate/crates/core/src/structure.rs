//! Node, rank-list and heap records, plus the primitive splices everything
//! else is written in terms of.
//!
//! All records live in arenas owned by a [`Forest`]; a forest may hold many
//! heaps, which is what lets `meld` hand nodes from one heap to another
//! without touching them. A node's rank is a pointer into the rank list of
//! the heap that last assigned it a rank. If that heap has since been melded
//! away (its record carries a negative size) the node is *implicitly
//! deferred* until something touches it.

use std::ops::{Add, AddAssign, Sub};

use crate::arena::Arena;
use crate::audit::{BudgetAudit, Faults};
use crate::list::{self, Link, LinkField};

/// Opaque reference to a node, returned by insert for later `decrease_key` calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeHandle {
    pub(crate) idx: u32,
    pub(crate) generation: u32,
}

/// Opaque reference to a heap inside a [`Forest`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HeapId {
    pub(crate) idx: u32,
    pub(crate) generation: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Supports `meld`; keeps the global node list, deferred nodes and two root lists A and G.
    Full,
    /// No `meld`; one root violation list and no deferral machinery.
    Simplified,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::Simplified => "simple",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Variant::Full),
            "simple" | "simplified" => Ok(Variant::Simplified),
            other => Err(format!("unknown variant `{other}` (expected full|simple)")),
        }
    }
}

/// Upper bound on ranks used by the checker: `6 + 2·log2(max(n, 1))`.
pub fn default_rank_bound(n: usize) -> f64 {
    6.0 + 2.0 * (n.max(1) as f64).log2()
}

#[derive(Debug, Clone, Copy)]
pub struct VariantConfig {
    pub variant: Variant,
    /// Rank bound as a function of the heap size. Only the checker reads it;
    /// the heap itself is driven by reduction plans.
    pub rank_bound: fn(usize) -> f64,
}

impl VariantConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            rank_bound: default_rank_bound,
        }
    }
}

impl From<Variant> for VariantConfig {
    fn from(variant: Variant) -> Self {
        Self::new(variant)
    }
}

/// Comparison and structural-step counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CostCounters {
    pub comparisons: u64,
    /// One per link, cut, list splice, rank shift or violation-list edit.
    pub structural_steps: u64,
}

impl Add for CostCounters {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            comparisons: self.comparisons + o.comparisons,
            structural_steps: self.structural_steps + o.structural_steps,
        }
    }
}

impl AddAssign for CostCounters {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for CostCounters {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            comparisons: self.comparisons - o.comparisons,
            structural_steps: self.structural_steps - o.structural_steps,
        }
    }
}

/// Stored node state. Being a tree root or implicitly deferred overrides it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeState {
    SolidRankChild,
    SolidNonrankChild,
    ExplicitDeferred,
}

/// Node state after the root and implicit-deferral overrides are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectiveState {
    Root,
    SolidRankChild,
    SolidNonrankChild,
    ExplicitDeferred,
    ImplicitDeferred,
}

/// Kind of parent-child edge created by [`Forest::attach_child`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Edge {
    Rank,
    NonrankSolid,
    Deferred,
}

/// Violation list kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VType {
    /// Rank roots without a guaranteed degree reserve.
    A = 0,
    /// Rank roots with a reserve (full variant only).
    G = 1,
    /// Nodes with positive loss.
    L = 2,
}

impl VType {
    pub(crate) fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Debug)]
pub(crate) struct Node<K> {
    pub(crate) key: K,
    pub(crate) id: u64,
    pub(crate) state: NodeState,
    pub(crate) on_root_list: bool,
    /// Rank-list entry; the integer below mirrors its distance from rank 0.
    pub(crate) rank: u32,
    pub(crate) rank_value: u32,
    pub(crate) loss: u32,
    pub(crate) parent: Option<u32>,
    pub(crate) first_child: Option<u32>,
    pub(crate) degree: u32,
    pub(crate) siblings: Link,
    pub(crate) node_list: Link,
    pub(crate) violation: Option<u32>,
}

#[derive(Debug)]
pub(crate) struct RankEntry {
    /// Nodes pointing here, plus one if a next entry exists.
    pub(crate) refcount: u32,
    pub(crate) prev: Option<u32>,
    pub(crate) next: Option<u32>,
    pub(crate) heap: u32,
    /// Per-type anchors: leftmost violation entry of this rank.
    pub(crate) anchors: [Option<u32>; 3],
}

#[derive(Debug)]
pub(crate) struct ViolationEntry {
    pub(crate) vtype: VType,
    pub(crate) node: u32,
    pub(crate) link: Link,
    /// False for the unorganized loss >= 2 segment of L.
    pub(crate) ranked: bool,
}

#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct VList {
    pub(crate) head: Option<u32>,
    pub(crate) len: usize,
    /// L only: leftmost entry of the unorganized right segment.
    pub(crate) boundary: Option<u32>,
}

/// Increases of (Σloss, |A|, |G|) caused by a batch of mutations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PlanDelta {
    pub loss: u64,
    pub a: u64,
    pub g: u64,
}

#[derive(Debug)]
pub(crate) struct HeapRecord {
    /// Node count; negative once the heap has been melded into another.
    pub(crate) size: i64,
    pub(crate) config: VariantConfig,
    pub(crate) rank_head: u32,
    pub(crate) roots: Option<u32>,
    pub(crate) root_count: usize,
    pub(crate) node_list: Option<u32>,
    pub(crate) lists: [VList; 3],
    pub(crate) loss_sum: u64,
    pub(crate) counters: CostCounters,
    pub(crate) pending: PlanDelta,
}

pub(crate) struct Siblings;
impl<K> LinkField<Node<K>> for Siblings {
    fn link(t: &Node<K>) -> &Link {
        &t.siblings
    }
    fn link_mut(t: &mut Node<K>) -> &mut Link {
        &mut t.siblings
    }
}

pub(crate) struct NodeList;
impl<K> LinkField<Node<K>> for NodeList {
    fn link(t: &Node<K>) -> &Link {
        &t.node_list
    }
    fn link_mut(t: &mut Node<K>) -> &mut Link {
        &mut t.node_list
    }
}

pub(crate) struct VLink;
impl LinkField<ViolationEntry> for VLink {
    fn link(t: &ViolationEntry) -> &Link {
        &t.link
    }
    fn link_mut(t: &mut ViolationEntry) -> &mut Link {
        &mut t.link
    }
}

/// Owner of every heap, node and bookkeeping record.
///
/// Heaps that may be melded together must live in the same forest. Distinct
/// forests are fully independent and may be moved between threads.
#[derive(Debug)]
pub struct Forest<K = i64> {
    pub(crate) nodes: Arena<Node<K>>,
    pub(crate) ranks: Arena<RankEntry>,
    pub(crate) heaps: Arena<HeapRecord>,
    pub(crate) entries: Arena<ViolationEntry>,
    next_id: u64,
    /// Heap the running public operation works on.
    pub(crate) active: u32,
    /// Set while executing reductions or find-min phase 1: violation
    /// increases are not added to the pending plan.
    pub(crate) suppress_pending: bool,
    pub(crate) audit: BudgetAudit,
    pub(crate) faults: Faults,
}

impl<K> Default for Forest<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K> Forest<K> {
    pub fn new() -> Self {
        Self {
            nodes: Arena::default(),
            ranks: Arena::default(),
            heaps: Arena::default(),
            entries: Arena::default(),
            next_id: 0,
            active: u32::MAX,
            suppress_pending: false,
            audit: BudgetAudit::default(),
            faults: Faults::default(),
        }
    }

    pub(crate) fn alloc_heap(&mut self, config: VariantConfig) -> u32 {
        let (rank0, _) = self.ranks.insert(RankEntry {
            refcount: 0,
            prev: None,
            next: None,
            heap: u32::MAX,
            anchors: [None; 3],
        });
        let (idx, _) = self.heaps.insert(HeapRecord {
            size: 0,
            config,
            rank_head: rank0,
            roots: None,
            root_count: 0,
            node_list: None,
            lists: [VList::default(); 3],
            loss_sum: 0,
            counters: CostCounters::default(),
            pending: PlanDelta::default(),
        });
        self.ranks[rank0].heap = idx;
        idx
    }

    pub(crate) fn heap_id(&self, idx: u32) -> HeapId {
        HeapId {
            idx,
            generation: self.heaps.generation(idx),
        }
    }

    pub(crate) fn node_handle(&self, idx: u32) -> NodeHandle {
        NodeHandle {
            idx,
            generation: self.nodes.generation(idx),
        }
    }

    pub(crate) fn activate(&mut self, heap: u32) {
        self.active = heap;
    }

    pub(crate) fn variant(&self) -> Variant {
        self.heaps[self.active].config.variant
    }

    pub(crate) fn step(&mut self) {
        self.heaps[self.active].counters.structural_steps += 1;
    }

    // ---- state predicates ----

    pub(crate) fn owner_heap(&self, x: u32) -> u32 {
        self.ranks[self.nodes[x].rank].heap
    }

    pub(crate) fn is_implicit(&self, x: u32) -> bool {
        self.heaps[self.owner_heap(x)].size < 0
    }

    pub(crate) fn is_deferred(&self, x: u32) -> bool {
        self.nodes[x].state == NodeState::ExplicitDeferred || self.is_implicit(x)
    }

    pub(crate) fn is_solid(&self, x: u32) -> bool {
        !self.is_deferred(x)
    }

    /// Solid node not hanging below a rank edge.
    pub(crate) fn is_rank_root(&self, x: u32) -> bool {
        self.is_solid(x)
            && (self.nodes[x].parent.is_none() || self.nodes[x].state == NodeState::SolidNonrankChild)
    }

    /// True when the edge from `x` to its parent currently counts toward the parent's rank.
    pub(crate) fn hangs_by_rank_edge(&self, x: u32) -> bool {
        self.nodes[x].parent.is_some()
            && self.nodes[x].state == NodeState::SolidRankChild
            && !self.is_implicit(x)
    }

    pub(crate) fn effective_state(&self, x: u32) -> EffectiveState {
        if self.is_implicit(x) {
            EffectiveState::ImplicitDeferred
        } else if self.nodes[x].on_root_list {
            EffectiveState::Root
        } else {
            match self.nodes[x].state {
                NodeState::SolidRankChild => EffectiveState::SolidRankChild,
                NodeState::SolidNonrankChild => EffectiveState::SolidNonrankChild,
                NodeState::ExplicitDeferred => EffectiveState::ExplicitDeferred,
            }
        }
    }

    pub(crate) fn set_loss(&mut self, x: u32, loss: u32) {
        let old = self.nodes[x].loss;
        self.nodes[x].loss = loss;
        if !self.is_implicit(x) {
            let h = self.owner_heap(x);
            let rec = &mut self.heaps[h];
            rec.loss_sum = rec.loss_sum + u64::from(loss) - u64::from(old);
        }
    }

    pub(crate) fn note_increase(&mut self, vtype: VType) {
        if self.suppress_pending {
            return;
        }
        let p = &mut self.heaps[self.active].pending;
        match vtype {
            VType::A => p.a += 1,
            VType::G => p.g += 1,
            VType::L => p.loss += 1,
        }
    }
}

impl<K: Ord> Forest<K> {
    /// Instrumented strict order on (key, id).
    pub(crate) fn less(&mut self, a: u32, b: u32) -> bool {
        self.heaps[self.active].counters.comparisons += 1;
        let (na, nb) = (&self.nodes[a], &self.nodes[b]);
        (&na.key, na.id) < (&nb.key, nb.id)
    }
}

impl<K> Forest<K> {
    // ---- node records ----

    /// Creates a detached solid node of rank 0 in `heap`.
    pub(crate) fn new_node(&mut self, heap: u32, key: K) -> u32 {
        let rank0 = self.heaps[heap].rank_head;
        self.ranks[rank0].refcount += 1;
        let id = self.next_id;
        self.next_id += 1;
        let (idx, _) = self.nodes.insert(Node {
            key,
            id,
            state: NodeState::SolidNonrankChild,
            on_root_list: false,
            rank: rank0,
            rank_value: 0,
            loss: 0,
            parent: None,
            first_child: None,
            degree: 0,
            siblings: Link::default(),
            node_list: Link::default(),
            violation: None,
        });
        idx
    }

    /// Splices detached `child` under `parent`. Solid children go leftmost
    /// and deferred ones rightmost; the simplified variant instead puts
    /// nonrank children rightmost. Does not touch the parent's rank.
    pub(crate) fn attach_child(&mut self, parent: u32, child: u32, edge: Edge) {
        debug_assert!(self.nodes[child].parent.is_none() && !self.nodes[child].on_root_list);
        let leftmost = match edge {
            Edge::Rank => true,
            Edge::NonrankSolid => self.variant() == Variant::Full,
            Edge::Deferred => false,
        };
        let head = self.nodes[parent].first_child;
        let head = if leftmost {
            list::push_front::<_, Siblings>(&mut self.nodes, head, child)
        } else {
            list::push_back::<_, Siblings>(&mut self.nodes, head, child)
        };
        let p = &mut self.nodes[parent];
        p.first_child = head;
        p.degree += 1;
        let c = &mut self.nodes[child];
        c.parent = Some(parent);
        c.state = match edge {
            Edge::Rank => NodeState::SolidRankChild,
            Edge::NonrankSolid => NodeState::SolidNonrankChild,
            Edge::Deferred => NodeState::ExplicitDeferred,
        };
        self.step();
    }

    /// Removes `x` from its parent's child list or from the active root list.
    pub(crate) fn detach(&mut self, x: u32) {
        if let Some(p) = self.nodes[x].parent {
            let head = self.nodes[p].first_child;
            let head = list::unlink::<_, Siblings>(&mut self.nodes, head, x);
            let pn = &mut self.nodes[p];
            pn.first_child = head;
            pn.degree -= 1;
            self.nodes[x].parent = None;
        } else {
            debug_assert!(self.nodes[x].on_root_list, "detach of a free node");
            let h = self.active;
            let head = self.heaps[h].roots;
            self.heaps[h].roots = list::unlink::<_, Siblings>(&mut self.nodes, head, x);
            self.heaps[h].root_count -= 1;
            self.nodes[x].on_root_list = false;
        }
        self.step();
    }

    pub(crate) fn push_root(&mut self, x: u32) {
        debug_assert!(self.nodes[x].parent.is_none() && !self.nodes[x].on_root_list);
        let h = self.active;
        let head = self.heaps[h].roots;
        self.heaps[h].roots = list::push_back::<_, Siblings>(&mut self.nodes, head, x);
        self.heaps[h].root_count += 1;
        self.nodes[x].on_root_list = true;
        self.step();
    }

    /// Moves the node's rank pointer one entry up or down the rank list.
    pub(crate) fn rank_shift(&mut self, x: u32, up: bool) {
        let r = self.nodes[x].rank;
        let to = if up {
            match self.ranks[r].next {
                Some(n) => n,
                None => {
                    let heap = self.ranks[r].heap;
                    let (n, _) = self.ranks.insert(RankEntry {
                        refcount: 0,
                        prev: Some(r),
                        next: None,
                        heap,
                        anchors: [None; 3],
                    });
                    self.ranks[r].next = Some(n);
                    self.ranks[r].refcount += 1;
                    n
                }
            }
        } else {
            self.ranks[r].prev.expect("rank decrement at rank 0")
        };
        self.ranks[to].refcount += 1;
        self.ranks[r].refcount -= 1;
        let node = &mut self.nodes[x];
        node.rank = to;
        if up {
            node.rank_value += 1;
        } else {
            node.rank_value -= 1;
        }
        self.trim(r);
        self.step();
    }

    /// Drops the node's reference on its rank entry.
    pub(crate) fn release_rank(&mut self, x: u32) {
        let r = self.nodes[x].rank;
        self.ranks[r].refcount -= 1;
        self.trim(r);
    }

    /// Shortens the rank list while its last entry is unreferenced, then
    /// reclaims the owning record if it is dead and fully drained.
    fn trim(&mut self, mut r: u32) {
        while self.ranks[r].refcount == 0 && self.ranks[r].next.is_none() {
            let Some(p) = self.ranks[r].prev else {
                let heap = self.ranks[r].heap;
                if self.heaps[heap].size < 0 {
                    self.reclaim_heap(heap);
                }
                return;
            };
            debug_assert!(self.ranks[r].anchors.iter().all(Option::is_none) || self.heaps[self.ranks[r].heap].size < 0);
            self.ranks.remove(r);
            self.ranks[p].next = None;
            self.ranks[p].refcount -= 1;
            r = p;
        }
    }

    pub(crate) fn reclaim_heap(&mut self, heap: u32) {
        let rec = &self.heaps[heap];
        debug_assert!(rec.size < 0);
        debug_assert!(rec.lists.iter().all(|l| l.head.is_none()), "dead heap with live violation entries");
        let rank0 = rec.rank_head;
        debug_assert!(self.ranks[rank0].refcount == 0 && self.ranks[rank0].next.is_none());
        self.ranks.remove(rank0);
        self.heaps.remove(heap);
        self.audit.reclaimed_heaps += 1;
    }

    /// Integer rank recomputed by walking the rank list.
    #[cfg(test)]
    pub(crate) fn walked_rank(&self, x: u32) -> u32 {
        let mut r = self.nodes[x].rank;
        let mut n = 0;
        while let Some(p) = self.ranks[r].prev {
            r = p;
            n += 1;
        }
        n
    }

    pub(crate) fn children(&self, x: u32) -> list::Iter<'_, Node<K>, Siblings> {
        list::iter::<_, Siblings>(&self.nodes, self.nodes[x].first_child)
    }

    pub(crate) fn node_list_of(&self, heap: u32) -> list::Iter<'_, Node<K>, NodeList> {
        list::iter::<_, NodeList>(&self.nodes, self.heaps[heap].node_list)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forest() -> (Forest<i64>, u32) {
        let mut f = Forest::new();
        let h = f.alloc_heap(Variant::Full.into());
        f.activate(h);
        (f, h)
    }

    #[test]
    fn new_node_is_rank_zero_leaf() {
        let (mut f, h) = forest();
        let x = f.new_node(h, 5);
        let n = &f.nodes[x];
        assert_eq!((n.rank_value, n.loss, n.degree), (0, 0, 0));
        assert_eq!(n.rank, f.heaps[h].rank_head);
    }

    #[test]
    fn equal_values_get_distinct_ids() {
        let (mut f, h) = forest();
        let a = f.new_node(h, 5);
        let b = f.new_node(h, 5);
        assert_ne!(f.nodes[a].id, f.nodes[b].id);
        assert!(f.less(a, b) ^ f.less(b, a));
    }

    #[test]
    fn rank_zero_refcount_tracks_new_nodes() {
        let (mut f, h) = forest();
        let r0 = f.heaps[h].rank_head;
        let before = f.ranks[r0].refcount;
        for i in 0..1000 {
            f.new_node(h, i);
        }
        assert_eq!(f.ranks[r0].refcount, before + 1000);
    }

    #[test]
    fn deferred_goes_right_solid_goes_left() {
        let (mut f, h) = forest();
        let p = f.new_node(h, 0);
        let a = f.new_node(h, 1);
        let d = f.new_node(h, 2);
        let s = f.new_node(h, 3);
        f.attach_child(p, a, Edge::NonrankSolid);
        f.attach_child(p, d, Edge::Deferred);
        f.attach_child(p, s, Edge::NonrankSolid);
        assert_eq!(f.children(p).collect::<Vec<_>>(), vec![s, a, d]);
        assert_eq!(f.nodes[d].state, NodeState::ExplicitDeferred);
    }

    #[test]
    fn attach_then_detach_restores_children() {
        let (mut f, h) = forest();
        let p = f.new_node(h, 0);
        let kids: Vec<u32> = (1..4).map(|k| f.new_node(h, k)).collect();
        for &k in &kids {
            f.attach_child(p, k, Edge::NonrankSolid);
        }
        let before: Vec<u32> = f.children(p).collect();
        let c = f.new_node(h, 9);
        f.attach_child(p, c, Edge::Deferred);
        f.detach(c);
        assert_eq!(f.children(p).collect::<Vec<_>>(), before);
        assert_eq!(f.nodes[p].degree, 3);
    }

    #[test]
    fn detach_leftmost_keeps_cycle() {
        let (mut f, h) = forest();
        let p = f.new_node(h, 0);
        let kids: Vec<u32> = (1..4).map(|k| f.new_node(h, k)).collect();
        for &k in &kids {
            f.attach_child(p, k, Edge::Deferred);
        }
        f.detach(kids[0]);
        let head = f.nodes[p].first_child.unwrap();
        assert_eq!(head, kids[1]);
        assert_eq!(f.nodes[head].siblings.prev, Some(kids[2]));
        f.detach(kids[1]);
        f.detach(kids[2]);
        assert_eq!(f.nodes[p].first_child, None);
    }

    #[test]
    fn rank_shift_extends_and_trims() {
        let (mut f, h) = forest();
        let x = f.new_node(h, 0);
        let r0 = f.heaps[h].rank_head;
        f.rank_shift(x, true);
        assert_eq!(f.nodes[x].rank_value, 1);
        assert_eq!(f.walked_rank(x), 1);
        assert!(f.ranks[r0].next.is_some());
        assert_eq!(f.ranks[r0].refcount, 1);
        f.rank_shift(x, false);
        assert!(f.ranks[r0].next.is_none(), "tail entry must be trimmed");
        assert_eq!(f.ranks[r0].refcount, 1);
        assert_eq!(f.ranks.len(), 1);
    }

    #[test]
    fn trim_cascades_over_unreferenced_gap() {
        let (mut f, h) = forest();
        let x = f.new_node(h, 0);
        for _ in 0..5 {
            f.rank_shift(x, true);
        }
        let y = f.new_node(h, 1);
        assert_eq!(f.ranks.len(), 6);
        f.release_rank(x);
        f.nodes.remove(x);
        assert_eq!(f.ranks.len(), 1);
        assert_eq!(f.ranks[f.heaps[h].rank_head].refcount, 1);
        let _ = y;
    }

    #[test]
    fn release_on_live_heap_keeps_record() {
        let (mut f, h) = forest();
        let x = f.new_node(h, 0);
        f.release_rank(x);
        assert!(f.heaps.get(h).is_some());
    }

    #[test]
    fn release_of_last_node_reclaims_dead_record() {
        let (mut f, h) = forest();
        let other = f.alloc_heap(Variant::Full.into());
        let x = f.new_node(h, 0);
        f.heaps[h].size = -1;
        f.activate(other);
        f.release_rank(x);
        assert!(f.heaps.get(h).is_none());
        assert_eq!(f.audit.reclaimed_heaps, 1);
    }
}
