//! Full O(n) structural audit of one heap.

use std::collections::HashSet;
use std::fmt;

use crate::heap::HeapError;
use crate::list;
use crate::structure::{Forest, HeapId, VLink, VType, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Invariant {
    /// Parent, child and root-list pointers agree; no node is reached twice.
    Structure,
    HeapOrder,
    /// At most one tree between public operations.
    SingleTree,
    /// Reachable node count equals the recorded size.
    Size,
    /// Cached rank equals both the walked rank and the number of rank children.
    Rank,
    ChildLayout,
    /// Rank roots sit in A or G, lossy rank children in L, nothing else anywhere.
    Membership,
    /// Rank blocks, anchors and the loss-2 segment of each list.
    ListLayout,
    ViolationBound,
    RankBound,
    DegreeBound,
    Refcount,
    NodeList,
    LossSum,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub invariant: Invariant,
    /// Ids of the nodes involved.
    pub nodes: Vec<u64>,
    pub detail: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at nodes {:?}: {}", self.invariant, self.nodes, self.detail)
    }
}

#[derive(Debug, Clone, Default)]
pub struct InvariantReport {
    pub failures: Vec<Failure>,
    /// Failures beyond the stored ones.
    pub dropped: usize,
    pub size: usize,
    pub max_rank: u32,
    pub a_len: usize,
    pub g_len: usize,
    pub loss_sum: u64,
    /// Violation-size and rank bound R̂(n).
    pub rank_bound: f64,
}

const KEEP: usize = 64;

impl InvariantReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn failed(&self, inv: Invariant) -> bool {
        self.failures.iter().any(|f| f.invariant == inv)
    }

    pub fn first(&self, inv: Invariant) -> Option<&Failure> {
        self.failures.iter().find(|f| f.invariant == inv)
    }

    fn fail(&mut self, invariant: Invariant, nodes: Vec<u64>, detail: String) {
        if self.failures.len() < KEEP {
            self.failures.push(Failure {
                invariant,
                nodes,
                detail,
            });
        } else {
            self.dropped += 1;
        }
    }
}

impl fmt::Display for InvariantReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return write!(f, "all invariants hold (n={})", self.size);
        }
        for x in &self.failures {
            writeln!(f, "{x}")?;
        }
        if self.dropped > 0 {
            writeln!(f, "... and {} more", self.dropped)?;
        }
        Ok(())
    }
}

/// Membership flags indexed by arena slot.
struct Marks(Vec<bool>);

impl Marks {
    fn new(slots: usize) -> Self {
        Marks(vec![false; slots])
    }

    fn insert(&mut self, x: u32) -> bool {
        !std::mem::replace(&mut self.0[x as usize], true)
    }

    fn contains(&self, x: u32) -> bool {
        self.0.get(x as usize).copied().unwrap_or(false)
    }
}

/// Degree bound for a node at 1-based node-list position `p`.
pub fn degree_bound(n: usize, p: usize) -> f64 {
    let m = (2 * n).saturating_sub(p).max(2);
    24.0 + 4.0 * (m as f64).log2()
}

impl<K: Ord> Forest<K> {
    /// Audits every structural invariant of `heap`. Never mutates.
    pub fn check_invariants(&self, heap: HeapId) -> Result<InvariantReport, HeapError> {
        if !self.is_live(heap) {
            return Err(HeapError::InvalidHeap);
        }
        let h = heap.idx;
        let rec = &self.heaps[h];
        let variant = rec.config.variant;
        let full = variant == Variant::Full;
        let mut rep = InvariantReport {
            size: rec.size as usize,
            rank_bound: (rec.config.rank_bound)(rec.size as usize),
            ..Default::default()
        };
        let id = |x: u32| self.nodes[x].id;

        // Walk the forest.
        let mut seen = Marks::new(self.nodes.capacity());
        let mut order: Vec<u32> = Vec::new();
        let mut root_count = 0;
        let mut prev_root = None;
        let mut cur = rec.roots;
        while let Some(r) = cur {
            root_count += 1;
            if !self.nodes[r].on_root_list || self.nodes[r].parent.is_some() {
                rep.fail(Invariant::Structure, vec![id(r)], "root-list node not marked as root".into());
            }
            if self.nodes[r].siblings.prev != Some(prev_root.unwrap_or_else(|| {
                list::tail::<_, crate::structure::Siblings>(&self.nodes, rec.roots).unwrap()
            })) {
                rep.fail(Invariant::Structure, vec![id(r)], "broken root-list prev link".into());
            }
            if !seen.insert(r) {
                rep.fail(Invariant::Structure, vec![id(r)], "root reached twice".into());
                break;
            }
            order.push(r);
            prev_root = Some(r);
            cur = self.nodes[r].siblings.next;
        }
        if root_count != rec.root_count {
            rep.fail(
                Invariant::Structure,
                vec![],
                format!("root count {} cached as {}", root_count, rec.root_count),
            );
        }
        if root_count > 1 {
            rep.fail(Invariant::SingleTree, vec![], format!("{root_count} trees"));
        }
        let mut i = 0;
        while i < order.len() {
            let x = order[i];
            i += 1;
            let mut degree = 0;
            let mut prev = None;
            for c in self.children(x) {
                degree += 1;
                if self.nodes[c].parent != Some(x) || self.nodes[c].on_root_list {
                    rep.fail(Invariant::Structure, vec![id(x), id(c)], "child with wrong parent".into());
                }
                if let Some(p) = prev {
                    if self.nodes[c].siblings.prev != Some(p) {
                        rep.fail(Invariant::Structure, vec![id(c)], "broken sibling prev link".into());
                    }
                }
                prev = Some(c);
                let (nx, nc) = (&self.nodes[x], &self.nodes[c]);
                if (&nc.key, nc.id) < (&nx.key, nx.id) {
                    rep.fail(Invariant::HeapOrder, vec![id(x), id(c)], "child smaller than parent".into());
                }
                if !seen.insert(c) {
                    rep.fail(Invariant::Structure, vec![id(c)], "node reached twice".into());
                    continue;
                }
                order.push(c);
            }
            if degree != self.nodes[x].degree {
                rep.fail(
                    Invariant::Structure,
                    vec![id(x)],
                    format!("degree {} cached as {}", degree, self.nodes[x].degree),
                );
            }
        }
        if order.len() != rec.size as usize {
            rep.fail(
                Invariant::Size,
                vec![],
                format!("{} reachable nodes, size {}", order.len(), rec.size),
            );
        }

        // Per-node checks.
        let mut depth = vec![u32::MAX; self.ranks.capacity()];
        for (r, e) in self.ranks.iter() {
            if e.prev.is_none() {
                let (mut cur, mut k) = (Some(r), 0);
                while let Some(c) = cur {
                    depth[c as usize] = k;
                    k += 1;
                    cur = self.ranks[c].next;
                }
            }
        }
        let mut loss_sum = 0u64;
        for &x in &order {
            let n = &self.nodes[x];
            let implicit = self.is_implicit(x);
            if !implicit && self.owner_heap(x) != h {
                rep.fail(Invariant::Structure, vec![id(x)], "rank entry of a foreign live heap".into());
                continue;
            }
            let walked = depth[n.rank as usize];
            if walked != n.rank_value {
                rep.fail(
                    Invariant::Rank,
                    vec![id(x)],
                    format!("cached rank {} but rank list says {}", n.rank_value, walked),
                );
            }
            if implicit {
                continue;
            }
            let solid = self.is_solid(x);
            let mut rank_children = 0;
            let mut layout: Option<u32> = None;
            let mut prev_deferred = false;
            for c in self.children(x) {
                let deferred = self.is_deferred(c);
                if !deferred && self.hangs_by_rank_edge(c) {
                    rank_children += 1;
                }
                let bad = if full { prev_deferred && !deferred } else { deferred };
                if bad && layout.is_none() {
                    layout = Some(c);
                }
                prev_deferred = deferred;
            }
            if solid && rank_children != n.rank_value {
                rep.fail(
                    Invariant::Rank,
                    vec![id(x)],
                    format!("rank {} with {} rank children", n.rank_value, rank_children),
                );
            }
            if !solid && (n.rank_value != 0 || rank_children != 0) {
                rep.fail(Invariant::Rank, vec![id(x)], "deferred node with nonzero rank".into());
            }
            if solid {
                rep.max_rank = rep.max_rank.max(n.rank_value);
                if f64::from(n.rank_value) > rep.rank_bound {
                    rep.fail(
                        Invariant::RankBound,
                        vec![id(x)],
                        format!("rank {} above {:.2}", n.rank_value, rep.rank_bound),
                    );
                }
            }
            loss_sum += u64::from(n.loss);

            // Child-list layout.
            match layout {
                Some(k) if full => rep.fail(
                    Invariant::ChildLayout,
                    vec![id(x), id(k)],
                    "solid child right of a deferred child".into(),
                ),
                Some(k) => rep.fail(Invariant::ChildLayout, vec![id(k)], "deferred node in simplified heap".into()),
                None => {}
            }

            // Membership.
            let vt = self.vtype_of(x);
            let expect: Result<Option<VType>, &str> = if !solid {
                Ok(None)
            } else if self.is_rank_root(x) {
                if n.loss != 0 {
                    Err("rank root with loss")
                } else {
                    match vt {
                        Some(VType::A) => Ok(Some(VType::A)),
                        Some(VType::G) if full => Ok(Some(VType::G)),
                        _ => Err("rank root outside A and G"),
                    }
                }
            } else if n.loss > 0 {
                Ok(Some(VType::L))
            } else {
                Ok(None)
            };
            match expect {
                Err(msg) => rep.fail(Invariant::Membership, vec![id(x)], format!("{msg}, in {vt:?}")),
                Ok(e) if e != vt => rep.fail(
                    Invariant::Membership,
                    vec![id(x)],
                    format!("loss {} expects list {:?}, found {:?}", n.loss, e, vt),
                ),
                Ok(_) => {}
            }
            if !solid && n.loss != 0 {
                rep.fail(Invariant::Membership, vec![id(x)], "deferred node with loss".into());
            }
            if vt == Some(VType::L) {
                let ranked = self.entries[n.violation.unwrap()].ranked;
                if ranked != (n.loss == 1) {
                    rep.fail(
                        Invariant::Membership,
                        vec![id(x)],
                        format!("loss {} in the wrong L segment", n.loss),
                    );
                }
            }
        }
        if loss_sum != rec.loss_sum {
            rep.fail(
                Invariant::LossSum,
                vec![],
                format!("total loss {} cached as {}", loss_sum, rec.loss_sum),
            );
        }

        // Violation lists.
        let reachable = &seen;
        for vtype in [VType::A, VType::G, VType::L] {
            self.check_list(h, vtype, reachable, &mut rep);
        }
        rep.a_len = rec.lists[VType::A.slot()].len;
        rep.g_len = rec.lists[VType::G.slot()].len;
        rep.loss_sum = rec.loss_sum;
        let bound = rep.rank_bound + 1.0;
        for (name, v) in [("|A|", rep.a_len as f64), ("|G|", rep.g_len as f64), ("total loss", rep.loss_sum as f64)] {
            if v > bound {
                rep.fail(Invariant::ViolationBound, vec![], format!("{name} = {v} above {bound:.2}"));
            }
        }

        // Node list and degree bound.
        if full {
            let n = rec.size as usize;
            let mut listed = Marks::new(self.nodes.capacity());
            let mut listed_len = 0;
            for (p, x) in self.node_list_of(h).enumerate() {
                listed_len += 1;
                if !listed.insert(x) || !reachable.contains(x) {
                    rep.fail(Invariant::NodeList, vec![id(x)], "node list entry not in the heap".into());
                    break;
                }
                let b = degree_bound(n, p + 1);
                if f64::from(self.nodes[x].degree) > b {
                    rep.fail(
                        Invariant::DegreeBound,
                        vec![id(x)],
                        format!("degree {} above {:.2} at position {}", self.nodes[x].degree, b, p + 1),
                    );
                }
            }
            if listed_len != order.len() {
                rep.fail(
                    Invariant::NodeList,
                    vec![],
                    format!("node list holds {} of {} nodes", listed_len, order.len()),
                );
            }
        } else if rec.node_list.is_some() {
            rep.fail(Invariant::NodeList, vec![], "simplified heap with a node list".into());
        }

        self.check_refcounts(&mut rep);
        Ok(rep)
    }

    fn check_list(&self, h: u32, vtype: VType, reachable: &Marks, rep: &mut InvariantReport) {
        let l = &self.heaps[h].lists[vtype.slot()];
        let entries: Vec<u32> = list::iter::<_, VLink>(&self.entries, l.head).collect();
        if entries.len() != l.len {
            rep.fail(
                Invariant::ListLayout,
                vec![],
                format!("{vtype:?} holds {} entries, length cached as {}", entries.len(), l.len),
            );
        }
        let mut ranks: Vec<u32> = Vec::new();
        let mut unranked_seen = false;
        for (i, &e) in entries.iter().enumerate() {
            let ent = &self.entries[e];
            let x = ent.node;
            if ent.vtype != vtype || self.nodes.get(x).and_then(|n| n.violation) != Some(e) || !reachable.contains(x) {
                rep.fail(Invariant::ListLayout, vec![], format!("stray entry in {vtype:?}"));
                return;
            }
            if ent.ranked {
                if unranked_seen {
                    rep.fail(
                        Invariant::ListLayout,
                        vec![self.nodes[x].id],
                        "ranked entry right of the loss-2 segment".into(),
                    );
                }
                ranks.push(self.nodes[x].rank_value);
                let r = self.nodes[x].rank;
                let first_of_block = i == 0
                    || !self.entries[entries[i - 1]].ranked
                    || self.nodes[self.entries[entries[i - 1]].node].rank != r;
                if first_of_block && self.ranks[r].anchors[vtype.slot()] != Some(e) {
                    rep.fail(
                        Invariant::ListLayout,
                        vec![self.nodes[x].id],
                        format!("rank {} of {vtype:?} anchored elsewhere", self.nodes[x].rank_value),
                    );
                }
            } else {
                if vtype != VType::L {
                    rep.fail(Invariant::ListLayout, vec![self.nodes[x].id], "unranked entry outside L".into());
                }
                if !unranked_seen && l.boundary != Some(e) {
                    rep.fail(Invariant::ListLayout, vec![], "loss-2 boundary misplaced".into());
                }
                unranked_seen = true;
            }
        }
        if !unranked_seen && l.boundary.is_some() {
            rep.fail(Invariant::ListLayout, vec![], "boundary set on list without loss-2 entries".into());
        }
        // Blocks contiguous; singletons before multi-entry blocks.
        let mut blocks: Vec<(u32, usize)> = Vec::new();
        for r in ranks {
            match blocks.last_mut() {
                Some((br, c)) if *br == r => *c += 1,
                _ => blocks.push((r, 1)),
            }
        }
        let mut seen = HashSet::new();
        if blocks.iter().any(|(r, _)| !seen.insert(*r)) {
            rep.fail(Invariant::ListLayout, vec![], format!("{vtype:?} rank block split"));
        }
        if blocks.windows(2).any(|w| w[0].1 > 1 && w[1].1 == 1) {
            rep.fail(
                Invariant::ListLayout,
                vec![],
                format!("{vtype:?} singleton right of a same-rank block"),
            );
        }
        // Anchors of absent ranks must be clear.
        let mut r = Some(self.heaps[h].rank_head);
        let present: HashSet<u32> = blocks.iter().map(|b| b.0).collect();
        let mut k = 0;
        while let Some(e) = r {
            if !present.contains(&k) && self.ranks[e].anchors[vtype.slot()].is_some() {
                rep.fail(Invariant::ListLayout, vec![], format!("stale {vtype:?} anchor at rank {k}"));
            }
            r = self.ranks[e].next;
            k += 1;
        }
    }

    fn check_refcounts(&self, rep: &mut InvariantReport) {
        let mut refs = vec![0u32; self.ranks.capacity()];
        for (_, n) in self.nodes.iter() {
            refs[n.rank as usize] += 1;
        }
        for (r, e) in self.ranks.iter() {
            let want = refs[r as usize] + u32::from(e.next.is_some());
            if e.refcount != want {
                rep.fail(
                    Invariant::Refcount,
                    vec![],
                    format!("rank entry {r} counts {} references, has {want}", e.refcount),
                );
            }
            if e.next.is_none() && e.prev.is_some() && e.refcount == 0 {
                rep.fail(Invariant::Refcount, vec![], format!("untrimmed rank entry {r}"));
            }
        }
        for (hi, rec) in self.heaps.iter() {
            if rec.size < 0 && self.ranks[rec.rank_head].refcount == 0 {
                rep.fail(Invariant::Refcount, vec![], format!("drained heap record {hi} not reclaimed"));
            }
        }
    }

    #[doc(hidden)]
    pub fn corrupt_loss(&mut self, node: crate::NodeHandle, loss: u32) {
        self.nodes[node.idx].loss = loss;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::Variant;

    #[test]
    fn fresh_heap_passes() {
        let mut f: Forest<i64> = Forest::new();
        let h = f.make_heap(Variant::Full);
        assert!(f.check_invariants(h).unwrap().passed());
    }

    #[test]
    fn corrupted_loss_breaks_membership() {
        let mut f: Forest<i64> = Forest::new();
        let h = f.make_heap(Variant::Full);
        let xs: Vec<_> = (0..40).map(|v| f.insert(h, v).unwrap()).collect();
        assert!(f.check_invariants(h).unwrap().passed());
        let x = xs
            .iter()
            .copied()
            .find(|&x| f.node_state(x) == Some(crate::EffectiveState::SolidRankChild))
            .unwrap();
        f.corrupt_loss(x, 1);
        let rep = f.check_invariants(h).unwrap();
        assert!(rep.failed(Invariant::Membership), "{rep}");
    }

    #[test]
    fn degree_bound_uses_position() {
        assert_eq!(degree_bound(1, 1), 28.0);
        assert_eq!(degree_bound(8, 0), 40.0);
    }
}
