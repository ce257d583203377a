//! Worst-case efficient priority queues with constant-time insert,
//! decrease-key and meld and logarithmic delete-min.
//!
//! All heaps live in a [`Forest`]; handles returned by its methods stay
//! valid until the node is deleted or the heap is melded away.
//!
//! ```
//! use wcheap::{Forest, Variant};
//!
//! let mut f = Forest::new();
//! let h = f.make_heap(Variant::Full);
//! let x = f.insert(h, 10).unwrap();
//! f.insert(h, 4).unwrap();
//! f.decrease_key(h, x, 1).unwrap();
//! assert_eq!(f.delete_min(h).unwrap().0, 1);
//! ```

mod arena;
mod audit;
mod heap;
mod list;
mod structure;
mod transform;
mod violation;
pub mod verify;
pub mod bench;

pub use audit::{BudgetAudit, Faults, PlanOverrun, StepKind, StepOverrun};
pub use heap::{HeapError, ReductionPlan};
pub use structure::{
    default_rank_bound, CostCounters, EffectiveState, Forest, HeapId, NodeHandle, NodeState, PlanDelta, VType,
    Variant, VariantConfig,
};
