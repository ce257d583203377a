//! Intrusive doubly linked lists over arena indices.
//!
//! Every list in the forest (child lists, root lists, the global node list,
//! violation lists) uses the same layout: the head is the left end, `prev`
//! links are cyclic (left of the leftmost entry is the rightmost one) and the
//! rightmost entry has no `next`. Both ends are reachable in O(1) from the
//! head alone.
//!
//! Operations take the current head by value and return the new head, so the
//! head can live inside the same arena as the entries.

use crate::arena::Arena;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct Link {
    pub(crate) prev: Option<u32>,
    pub(crate) next: Option<u32>,
}

/// Selects which [`Link`] of a record a list threads through.
pub(crate) trait LinkField<T> {
    fn link(t: &T) -> &Link;
    fn link_mut(t: &mut T) -> &mut Link;
}

fn prev<T, F: LinkField<T>>(a: &Arena<T>, x: u32) -> u32 {
    F::link(&a[x]).prev.expect("list entry without prev link")
}

pub(crate) fn tail<T, F: LinkField<T>>(a: &Arena<T>, head: Option<u32>) -> Option<u32> {
    head.map(|h| prev::<T, F>(a, h))
}

pub(crate) fn next<T, F: LinkField<T>>(a: &Arena<T>, x: u32) -> Option<u32> {
    F::link(&a[x]).next
}

/// Left neighbour of `x`, or `None` when `x` is the head.
pub(crate) fn left<T, F: LinkField<T>>(a: &Arena<T>, head: Option<u32>, x: u32) -> Option<u32> {
    if head == Some(x) {
        None
    } else {
        Some(prev::<T, F>(a, x))
    }
}

pub(crate) fn push_back<T, F: LinkField<T>>(a: &mut Arena<T>, head: Option<u32>, x: u32) -> Option<u32> {
    match head {
        None => {
            *F::link_mut(&mut a[x]) = Link {
                prev: Some(x),
                next: None,
            };
            Some(x)
        }
        Some(h) => {
            let t = prev::<T, F>(a, h);
            F::link_mut(&mut a[t]).next = Some(x);
            *F::link_mut(&mut a[x]) = Link {
                prev: Some(t),
                next: None,
            };
            F::link_mut(&mut a[h]).prev = Some(x);
            Some(h)
        }
    }
}

pub(crate) fn push_front<T, F: LinkField<T>>(a: &mut Arena<T>, head: Option<u32>, x: u32) -> Option<u32> {
    match head {
        None => push_back::<T, F>(a, None, x),
        Some(h) => {
            let t = prev::<T, F>(a, h);
            *F::link_mut(&mut a[x]) = Link {
                prev: Some(t),
                next: Some(h),
            };
            F::link_mut(&mut a[h]).prev = Some(x);
            Some(x)
        }
    }
}

pub(crate) fn insert_after<T, F: LinkField<T>>(
    a: &mut Arena<T>,
    head: Option<u32>,
    anchor: u32,
    x: u32,
) -> Option<u32> {
    match next::<T, F>(a, anchor) {
        None => push_back::<T, F>(a, head, x),
        Some(n) => {
            *F::link_mut(&mut a[x]) = Link {
                prev: Some(anchor),
                next: Some(n),
            };
            F::link_mut(&mut a[anchor]).next = Some(x);
            F::link_mut(&mut a[n]).prev = Some(x);
            head
        }
    }
}

pub(crate) fn insert_before<T, F: LinkField<T>>(
    a: &mut Arena<T>,
    head: Option<u32>,
    anchor: u32,
    x: u32,
) -> Option<u32> {
    if head == Some(anchor) {
        push_front::<T, F>(a, head, x)
    } else {
        let p = prev::<T, F>(a, anchor);
        insert_after::<T, F>(a, head, p, x)
    }
}

/// Removes `x`, which must be an entry of the list starting at `head`.
pub(crate) fn unlink<T, F: LinkField<T>>(a: &mut Arena<T>, head: Option<u32>, x: u32) -> Option<u32> {
    let Link { prev: p, next: n } = *F::link(&a[x]);
    let p = p.expect("unlink of detached entry");
    *F::link_mut(&mut a[x]) = Link::default();
    if head == Some(x) {
        let n = n?;
        F::link_mut(&mut a[n]).prev = Some(p);
        Some(n)
    } else {
        let h = head.expect("unlink from empty list");
        F::link_mut(&mut a[p]).next = n;
        match n {
            Some(n) => F::link_mut(&mut a[n]).prev = Some(p),
            None => F::link_mut(&mut a[h]).prev = Some(p),
        }
        head
    }
}

/// Concatenates `second` after `first` in O(1).
pub(crate) fn append<T, F: LinkField<T>>(
    a: &mut Arena<T>,
    first: Option<u32>,
    second: Option<u32>,
) -> Option<u32> {
    let (Some(h1), Some(h2)) = (first, second) else {
        return first.or(second);
    };
    let t1 = prev::<T, F>(a, h1);
    let t2 = prev::<T, F>(a, h2);
    F::link_mut(&mut a[t1]).next = Some(h2);
    F::link_mut(&mut a[h2]).prev = Some(t1);
    F::link_mut(&mut a[h1]).prev = Some(t2);
    Some(h1)
}

pub(crate) struct Iter<'a, T, F> {
    arena: &'a Arena<T>,
    cur: Option<u32>,
    _field: std::marker::PhantomData<F>,
}

impl<T, F: LinkField<T>> Iterator for Iter<'_, T, F> {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        let x = self.cur?;
        self.cur = next::<T, F>(self.arena, x);
        Some(x)
    }
}

pub(crate) fn iter<T, F: LinkField<T>>(a: &Arena<T>, head: Option<u32>) -> Iter<'_, T, F> {
    Iter {
        arena: a,
        cur: head,
        _field: std::marker::PhantomData,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    struct L;
    impl LinkField<Link> for L {
        fn link(t: &Link) -> &Link {
            t
        }
        fn link_mut(t: &mut Link) -> &mut Link {
            t
        }
    }

    fn collect(a: &Arena<Link>, head: Option<u32>) -> Vec<u32> {
        iter::<Link, L>(a, head).collect()
    }

    fn cyclic_left_ok(a: &Arena<Link>, head: Option<u32>) -> bool {
        let items = collect(a, head);
        match (items.first(), items.last()) {
            (Some(&f), Some(&l)) => {
                a[f].prev == Some(l)
                    && items.windows(2).all(|w| a[w[1]].prev == Some(w[0]))
                    && a[l].next.is_none()
            }
            _ => true,
        }
    }

    #[test]
    fn unlink_head_keeps_left_cycle() {
        let mut a = Arena::default();
        let ids: Vec<u32> = (0..3).map(|_| a.insert(Link::default()).0).collect();
        let mut head = None;
        for &i in &ids {
            head = push_back::<Link, L>(&mut a, head, i);
        }
        head = unlink::<Link, L>(&mut a, head, ids[0]);
        assert_eq!(collect(&a, head), vec![ids[1], ids[2]]);
        assert_eq!(tail::<Link, L>(&a, head), Some(ids[2]));
        assert!(cyclic_left_ok(&a, head));
        head = unlink::<Link, L>(&mut a, head, ids[1]);
        head = unlink::<Link, L>(&mut a, head, ids[2]);
        assert_eq!(head, None);
    }

    #[test]
    fn append_joins_in_order() {
        let mut a = Arena::default();
        let ids: Vec<u32> = (0..5).map(|_| a.insert(Link::default()).0).collect();
        let mut h1 = None;
        let mut h2 = None;
        for &i in &ids[..2] {
            h1 = push_back::<Link, L>(&mut a, h1, i);
        }
        for &i in &ids[2..] {
            h2 = push_back::<Link, L>(&mut a, h2, i);
        }
        let h = append::<Link, L>(&mut a, h1, h2);
        assert_eq!(collect(&a, h), ids);
        assert!(cyclic_left_ok(&a, h));
    }

    #[derive(Debug, Clone)]
    enum Op {
        PushBack,
        PushFront,
        InsertAfter(usize),
        InsertBefore(usize),
        Remove(usize),
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            Just(Op::PushBack),
            Just(Op::PushFront),
            any::<usize>().prop_map(Op::InsertAfter),
            any::<usize>().prop_map(Op::InsertBefore),
            any::<usize>().prop_map(Op::Remove),
        ]
    }

    proptest! {
        // Shadow-model equivalence against a plain Vec.
        #[test]
        fn matches_vec_model(ops in proptest::collection::vec(op(), 0..400)) {
            let mut a = Arena::default();
            let mut head = None;
            let mut model: Vec<u32> = Vec::new();
            for op in ops {
                match op {
                    Op::PushBack => {
                        let x = a.insert(Link::default()).0;
                        head = push_back::<Link, L>(&mut a, head, x);
                        model.push(x);
                    }
                    Op::PushFront => {
                        let x = a.insert(Link::default()).0;
                        head = push_front::<Link, L>(&mut a, head, x);
                        model.insert(0, x);
                    }
                    Op::InsertAfter(i) if !model.is_empty() => {
                        let i = i % model.len();
                        let x = a.insert(Link::default()).0;
                        head = insert_after::<Link, L>(&mut a, head, model[i], x);
                        model.insert(i + 1, x);
                    }
                    Op::InsertBefore(i) if !model.is_empty() => {
                        let i = i % model.len();
                        let x = a.insert(Link::default()).0;
                        head = insert_before::<Link, L>(&mut a, head, model[i], x);
                        model.insert(i, x);
                    }
                    Op::Remove(i) if !model.is_empty() => {
                        let x = model.remove(i % model.len());
                        head = unlink::<Link, L>(&mut a, head, x);
                        a.remove(x);
                    }
                    _ => {}
                }
                prop_assert_eq!(collect(&a, head), model.clone());
                prop_assert!(cyclic_left_ok(&a, head));
            }
        }
    }
}
