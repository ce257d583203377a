//! Always-on budget accounting for reduction steps and reduction plans.

use crate::structure::PlanDelta;

/// Kinds of reduction steps, for per-step comparison limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    DegreeReduction,
    A,
    G,
    L,
}

impl StepKind {
    pub const ALL: [StepKind; 4] = [StepKind::DegreeReduction, StepKind::A, StepKind::G, StepKind::L];

    pub(crate) fn slot(self) -> usize {
        self as usize
    }
}

/// One `plan_and_reduce` call that went over its comparison budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanOverrun {
    pub loss: u64,
    pub a: u64,
    pub g: u64,
    pub comparisons: u64,
    pub budget: u64,
}

/// One applied reduction step that went over its per-step limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOverrun {
    pub kind: StepKind,
    pub comparisons: u64,
    pub limit: u64,
}

const KEEP: usize = 16;

#[derive(Debug, Clone, Default)]
pub struct BudgetAudit {
    /// Number of `plan_and_reduce` calls.
    pub plans: u64,
    /// Total (Σloss, |A|, |G|) increases consumed by those calls.
    pub consumed_loss: u64,
    pub consumed_a: u64,
    pub consumed_g: u64,
    pub plan_overruns: u64,
    /// Plans over the sum of their per-group maxima, 9ℓ+5a+6⌈g/2⌉ (full) or
    /// 2ℓ+a (simplified).
    pub row_sum_overruns: u64,
    /// First few overruns, for diagnostics.
    pub plan_overrun_samples: Vec<PlanOverrun>,
    /// Find-min phase 1 plans (k A-steps, k+1 G-steps).
    pub root_plans: u64,
    pub root_plan_overruns: u64,
    pub steps_applied: [u64; 4],
    pub step_max_comparisons: [u64; 4],
    pub step_overruns: u64,
    pub step_overrun_samples: Vec<StepOverrun>,
    /// Dead heap records released after their last node moved out.
    pub reclaimed_heaps: u64,
}

impl BudgetAudit {
    pub(crate) fn record_plan(&mut self, d: PlanDelta, comparisons: u64, budget: u64, row_sum: u64) {
        let PlanDelta { loss, a, g } = d;
        self.plans += 1;
        if comparisons > row_sum {
            self.row_sum_overruns += 1;
        }
        self.consumed_loss += loss;
        self.consumed_a += a;
        self.consumed_g += g;
        if comparisons > budget {
            self.plan_overruns += 1;
            if self.plan_overrun_samples.len() < KEEP {
                self.plan_overrun_samples.push(PlanOverrun {
                    loss,
                    a,
                    g,
                    comparisons,
                    budget,
                });
            }
        }
    }

    pub(crate) fn record_root_plan(&mut self, comparisons: u64, budget: u64) {
        self.root_plans += 1;
        if comparisons > budget {
            self.root_plan_overruns += 1;
        }
    }

    pub(crate) fn record_step(&mut self, kind: StepKind, comparisons: u64, limit: u64) {
        let i = kind.slot();
        self.steps_applied[i] += 1;
        self.step_max_comparisons[i] = self.step_max_comparisons[i].max(comparisons);
        if comparisons > limit {
            self.step_overruns += 1;
            if self.step_overrun_samples.len() < KEEP {
                self.step_overrun_samples.push(StepOverrun {
                    kind,
                    comparisons,
                    limit,
                });
            }
        }
    }

    pub fn applied(&self, kind: StepKind) -> u64 {
        self.steps_applied[kind.slot()]
    }

    pub fn max_comparisons(&self, kind: StepKind) -> u64 {
        self.step_max_comparisons[kind.slot()]
    }
}

/// Deliberate defects for exercising the checker and fuzzer.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Faults {
    /// Skip the parent's rank decrement when a rank child is removed.
    pub skip_rank_decrement: bool,
}
