//! Violation lists A, G and L.
//!
//! Each list is kept so that, whenever two entries of the same rank exist in
//! its rank-organized part, a same-rank adjacent pair sits at the right end.
//! Every rank entry holds, per list type, an anchor: the leftmost entry of
//! that rank. Entries of one rank stay contiguous starting at the anchor;
//! singleton ranks live on the left, ranks with two or more entries on the
//! right.
//!
//! L additionally carries an unorganized right segment holding nodes of loss
//! at least 2, delimited by `boundary`.

use crate::list;
use crate::structure::{Forest, VType, ViolationEntry, VLink};

impl<K> Forest<K> {
    fn entry_node(&self, e: u32) -> u32 {
        self.entries[e].node
    }

    /// True when the right neighbour of `e` is a ranked entry of the same rank.
    pub(crate) fn same_rank_right(&self, e: u32) -> bool {
        match self.entries[e].link.next {
            Some(n) => {
                self.entries[n].ranked
                    && self.nodes[self.entry_node(n)].rank == self.nodes[self.entry_node(e)].rank
            }
            None => false,
        }
    }

    /// Rightmost entry of the rank-organized part.
    pub(crate) fn organized_tail(&self, heap: u32, vtype: VType) -> Option<u32> {
        let l = &self.heaps[heap].lists[vtype.slot()];
        match l.boundary {
            None => list::tail::<_, VLink>(&self.entries, l.head),
            Some(b) => list::left::<_, VLink>(&self.entries, l.head, b),
        }
    }

    fn vl_unlink(&mut self, heap: u32, vtype: VType, e: u32) {
        let l = &mut self.heaps[heap].lists[vtype.slot()];
        if l.boundary == Some(e) {
            l.boundary = self.entries[e].link.next;
        }
        l.head = list::unlink::<_, VLink>(&mut self.entries, l.head, e);
    }

    fn vl_push_organized_end(&mut self, heap: u32, vtype: VType, e: u32) {
        let l = &mut self.heaps[heap].lists[vtype.slot()];
        l.head = match l.boundary {
            Some(b) => list::insert_before::<_, VLink>(&mut self.entries, l.head, b, e),
            None => list::push_back::<_, VLink>(&mut self.entries, l.head, e),
        };
    }

    fn vl_push_left_end(&mut self, heap: u32, vtype: VType, e: u32) {
        let l = &mut self.heaps[heap].lists[vtype.slot()];
        l.head = list::push_front::<_, VLink>(&mut self.entries, l.head, e);
    }

    /// Adds solid node `x` to the ranked part of list `vtype` of its heap.
    pub(crate) fn vl_insert(&mut self, x: u32, vtype: VType) {
        assert!(self.nodes[x].violation.is_none(), "node already on a violation list");
        let heap = self.owner_heap(x);
        let r = self.nodes[x].rank;
        let (v, _) = self.entries.insert(ViolationEntry {
            vtype,
            node: x,
            link: Default::default(),
            ranked: true,
        });
        match self.ranks[r].anchors[vtype.slot()] {
            None => {
                self.ranks[r].anchors[vtype.slot()] = Some(v);
                self.vl_push_left_end(heap, vtype, v);
            }
            Some(a) => {
                if !self.same_rank_right(a) {
                    self.vl_unlink(heap, vtype, a);
                    self.vl_push_organized_end(heap, vtype, a);
                    self.step();
                }
                let l = &mut self.heaps[heap].lists[vtype.slot()];
                l.head = list::insert_after::<_, VLink>(&mut self.entries, l.head, a, v);
            }
        }
        self.heaps[heap].lists[vtype.slot()].len += 1;
        self.nodes[x].violation = Some(v);
        self.step();
        if vtype != VType::L {
            self.note_increase(vtype);
        }
    }

    /// Appends `x` (loss >= 2) to the unorganized segment of L.
    pub(crate) fn vl_insert_loss2(&mut self, x: u32) {
        assert!(self.nodes[x].violation.is_none(), "node already on a violation list");
        let heap = self.owner_heap(x);
        let (v, _) = self.entries.insert(ViolationEntry {
            vtype: VType::L,
            node: x,
            link: Default::default(),
            ranked: false,
        });
        let l = &mut self.heaps[heap].lists[VType::L.slot()];
        l.head = list::push_back::<_, VLink>(&mut self.entries, l.head, v);
        if l.boundary.is_none() {
            l.boundary = Some(v);
        }
        l.len += 1;
        self.nodes[x].violation = Some(v);
        self.step();
    }

    /// Removes `x` from whatever violation list holds it.
    pub(crate) fn vl_remove(&mut self, x: u32) {
        let v = self.nodes[x].violation.take().expect("node is not on a violation list");
        let heap = self.owner_heap(x);
        let ViolationEntry { vtype, ranked, .. } = self.entries[v];
        let r = self.nodes[x].rank;
        let slot = vtype.slot();
        if !ranked || self.is_implicit(x) {
            // Nothing to keep organized: unorganized L segment, or a list of a
            // heap that has been melded away.
            if ranked && self.ranks[r].anchors[slot] == Some(v) {
                self.ranks[r].anchors[slot] = None;
            }
            self.vl_unlink(heap, vtype, v);
        } else {
            let mut anchor = self.ranks[r].anchors[slot];
            if anchor == Some(v) {
                anchor = if self.same_rank_right(v) {
                    self.entries[v].link.next
                } else {
                    None
                };
                self.ranks[r].anchors[slot] = anchor;
            }
            self.vl_unlink(heap, vtype, v);
            if let Some(a) = anchor {
                if !self.same_rank_right(a) {
                    self.vl_unlink(heap, vtype, a);
                    self.vl_push_left_end(heap, vtype, a);
                    self.step();
                }
            }
        }
        self.entries.remove(v);
        self.heaps[heap].lists[slot].len -= 1;
        self.step();
    }

    /// A same-rank pair from the right end of the organized part of the
    /// active heap's list, if one exists. Removes nothing.
    pub(crate) fn vl_take_same_rank_pair(&self, vtype: VType) -> Option<(u32, u32)> {
        let heap = self.active;
        let t = self.organized_tail(heap, vtype)?;
        let head = self.heaps[heap].lists[vtype.slot()].head;
        let p = list::left::<_, VLink>(&self.entries, head, t)?;
        self.same_rank_right(p)
            .then(|| (self.entry_node(p), self.entry_node(t)))
    }

    /// A node from the unorganized (loss >= 2) segment of the active heap's L.
    pub(crate) fn vl_take_loss2(&self) -> Option<u32> {
        let b = self.heaps[self.active].lists[VType::L.slot()].boundary?;
        Some(self.entry_node(b))
    }

    pub(crate) fn vtype_of(&self, x: u32) -> Option<VType> {
        self.nodes[x].violation.map(|v| self.entries[v].vtype)
    }

    #[cfg(test)]
    pub(crate) fn list_len(&self, heap: u32, vtype: VType) -> usize {
        self.heaps[heap].lists[vtype.slot()].len
    }

    /// Nodes of a list in order, with a flag for the ranked part.
    #[cfg(test)]
    pub(crate) fn list_nodes(&self, heap: u32, vtype: VType) -> Vec<(u32, bool)> {
        list::iter::<_, VLink>(&self.entries, self.heaps[heap].lists[vtype.slot()].head)
            .map(|e| (self.entries[e].node, self.entries[e].ranked))
            .collect()
    }
}
