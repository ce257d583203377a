//! Sorted-multiset reference model.

use std::collections::BTreeSet;

use super::trace::{Op, OpTrace, TraceError};
use crate::structure::Variant;

/// Observable result of one operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Output {
    None,
    /// Deleted (value, id), or `None` on an empty heap.
    Deleted(Option<(i64, u64)>),
    Min(Option<(i64, u64)>),
}

#[derive(Debug, Clone, Default)]
pub struct Oracle {
    set: BTreeSet<(i64, u64)>,
    /// Current (value, id) per insertion index; `None` once deleted.
    items: Vec<Option<(i64, u64)>>,
    next_id: u64,
    melds: bool,
}

impl Oracle {
    pub fn new(variant: Variant) -> Self {
        Oracle {
            melds: variant == Variant::Full,
            ..Default::default()
        }
    }

    fn push(&mut self, v: i64) {
        let k = (v, self.next_id);
        self.next_id += 1;
        self.set.insert(k);
        self.items.push(Some(k));
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn min(&self) -> Option<(i64, u64)> {
        self.set.first().copied()
    }

    /// Number of insertion indices handed out so far.
    pub fn inserted(&self) -> usize {
        self.items.len()
    }

    /// Current value of a live insertion index.
    pub fn value_of(&self, index: usize) -> Option<i64> {
        self.items.get(index).copied().flatten().map(|k| k.0)
    }

    /// Applies `op`, the `op_index`-th of its trace.
    pub fn apply(&mut self, op_index: usize, op: &Op) -> Result<Output, TraceError> {
        Ok(match op {
            Op::Insert(v) => {
                self.push(*v);
                Output::None
            }
            Op::DeleteMin => {
                let k = self.set.pop_first();
                if let Some(k) = k {
                    // Ids are handed out in insertion order, so an id is its index.
                    self.items[k.1 as usize] = None;
                }
                Output::Deleted(k)
            }
            Op::FindMin => Output::Min(self.min()),
            Op::DecreaseKey { index, value } => {
                let Some(slot) = self.items.get_mut(*index) else {
                    return Err(TraceError::at_op(op_index, format!("deckey of unknown index {index}")));
                };
                let Some((old, id)) = *slot else {
                    return Err(TraceError::at_op(op_index, format!("deckey of deleted index {index}")));
                };
                if *value >= old {
                    return Err(TraceError::at_op(op_index, format!("deckey {old} -> {value} does not decrease")));
                }
                self.set.remove(&(old, id));
                self.set.insert((*value, id));
                *slot = Some((*value, id));
                Output::None
            }
            Op::Meld { values, .. } => {
                if !self.melds {
                    return Err(TraceError::at_op(op_index, "meld in a simple-variant trace"));
                }
                for &v in values {
                    self.push(v);
                }
                Output::None
            }
        })
    }
}

/// Outputs of every operation of `trace`, computed by the reference model.
pub fn oracle_apply(trace: &OpTrace) -> Result<Vec<Output>, TraceError> {
    let mut o = Oracle::new(trace.variant);
    trace.ops.iter().enumerate().map(|(i, op)| o.apply(i, op)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(ops: Vec<Op>) -> OpTrace {
        OpTrace {
            seed: 0,
            variant: Variant::Full,
            ops,
        }
    }

    #[test]
    fn smallest_comes_out() {
        let out = oracle_apply(&t(vec![Op::Insert(5), Op::Insert(3), Op::DeleteMin])).unwrap();
        assert_eq!(out[2], Output::Deleted(Some((3, 1))));
    }

    #[test]
    fn ties_break_by_insertion() {
        let out = oracle_apply(&t(vec![Op::Insert(2), Op::Insert(2), Op::DeleteMin, Op::DeleteMin])).unwrap();
        assert_eq!(out[2], Output::Deleted(Some((2, 0))));
        assert_eq!(out[3], Output::Deleted(Some((2, 1))));
    }

    #[test]
    fn meld_values_take_insertion_indices() {
        let ops = vec![
            Op::Insert(10),
            Op::Meld {
                segment: 0,
                values: vec![20, 30],
            },
            Op::DecreaseKey { index: 2, value: 1 },
            Op::FindMin,
        ];
        assert_eq!(oracle_apply(&t(ops)).unwrap()[3], Output::Min(Some((1, 2))));
    }

    #[test]
    fn rejects_bad_decrease() {
        let ops = vec![Op::Insert(1), Op::DecreaseKey { index: 0, value: 1 }];
        assert_eq!(oracle_apply(&t(ops)).unwrap_err().line, 3);
        let ops = vec![Op::Insert(1), Op::DeleteMin, Op::DecreaseKey { index: 0, value: 0 }];
        assert!(oracle_apply(&t(ops)).is_err());
    }

    #[test]
    fn deletions_are_sorted() {
        let mut ops: Vec<Op> = (0..200).map(|i| Op::Insert((i * 7919) % 263)).collect();
        ops.extend((0..200).map(|_| Op::DeleteMin));
        let out = oracle_apply(&t(ops)).unwrap();
        let vals: Vec<(i64, u64)> = out
            .iter()
            .filter_map(|o| match o {
                Output::Deleted(Some(k)) => Some(*k),
                _ => None,
            })
            .collect();
        assert!(vals.windows(2).all(|w| w[0] < w[1]));
    }
}
