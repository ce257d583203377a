use wcheap::verify::{
    degree_bound, differential_fuzz, fit_log_envelope, generate, measure_costs, minimize, run_trace, FuzzConfig, Mix,
    Op, OpTrace, RunOptions, Verdict,
};
use wcheap::{default_rank_bound, Faults, PlanDelta, ReductionPlan, Variant};

#[test]
fn differential_fuzz_passes_both_variants() {
    for variant in [Variant::Full, Variant::Simplified] {
        for seed in 0..6 {
            let mut cfg = FuzzConfig::new(seed, 4000, variant);
            cfg.check_every = 4;
            match differential_fuzz(&cfg) {
                Verdict::Pass(r) => {
                    assert_eq!(r.ops_run, 4000);
                    assert_eq!(r.audit.step_overruns, 0, "{variant:?} seed {seed}");
                    assert!(r.max_violation_ratio <= 1.0);
                    assert!(r.checks >= 1000);
                }
                Verdict::Fail(f) => panic!("{variant:?} seed {seed}: {}\n{}", f.mismatch, f.trace.to_text()),
            }
        }
    }
}

#[test]
fn meld_heavy_mix_passes() {
    let mut cfg = FuzzConfig::new(11, 3000, Variant::Full);
    cfg.mix = "ins:20,delmin:20,deckey:20,meld:20,peek:5".parse().unwrap();
    cfg.check_every = 2;
    assert!(differential_fuzz(&cfg).passed());
}

#[test]
fn skipped_rank_decrement_is_caught_and_minimized() {
    let mut cfg = FuzzConfig::new(3, 3000, Variant::Full);
    cfg.check_every = 1;
    cfg.faults = Faults {
        skip_rank_decrement: true,
    };
    let Verdict::Fail(f) = differential_fuzz(&cfg) else {
        panic!("fault went unnoticed");
    };
    assert!(f.trace.ops.len() < f.original_len);
    assert!(f.trace.ops.len() <= f.mismatch.op_index + 1);

    let text = f.trace.to_text();
    let reparsed = OpTrace::parse(&text).unwrap();
    assert_eq!(reparsed, f.trace);
    let faulty = RunOptions {
        check_every: 1,
        faults: cfg.faults,
        ..Default::default()
    };
    assert!(run_trace(&reparsed, &faulty).unwrap().failure.is_some());
    let clean = RunOptions {
        check_every: 1,
        ..Default::default()
    };
    assert!(run_trace(&reparsed, &clean).unwrap().failure.is_none());
    assert_eq!(minimize(&reparsed, &faulty).ops.len(), reparsed.ops.len());
}

#[test]
fn generated_traces_are_canonical_and_reproducible() {
    for variant in [Variant::Full, Variant::Simplified] {
        let mix = match variant {
            Variant::Full => Mix::default(),
            Variant::Simplified => Mix::default().without_meld(),
        };
        let t = generate(21, 2000, &mix, variant);
        assert_eq!(t, generate(21, 2000, &mix, variant));
        let text = t.to_text();
        assert_eq!(OpTrace::parse(&text).unwrap().to_text(), text);
        if variant == Variant::Simplified {
            assert!(!t.ops.iter().any(|o| matches!(o, Op::Meld { .. })));
        }
    }
}

#[test]
fn reduction_plans_follow_the_combination_table() {
    let d = |loss, a, g| PlanDelta { loss, a, g };
    let plan = |l, a, g| ReductionPlan {
        l_steps: l,
        a_steps: a,
        g_steps: g,
    };
    // l L-steps, a+l+ceil(g/2) A-steps, a+2l+2ceil(g/2) G-steps.
    assert_eq!(ReductionPlan::for_delta(Variant::Full, d(1, 0, 0)), plan(1, 1, 2));
    assert_eq!(ReductionPlan::for_delta(Variant::Full, d(0, 0, 3)), plan(0, 2, 4));
    assert_eq!(ReductionPlan::for_delta(Variant::Full, d(2, 1, 1)), plan(2, 4, 7));
    assert_eq!(ReductionPlan::for_delta(Variant::Simplified, d(2, 3, 0)), plan(2, 5, 0));
    assert_eq!(ReductionPlan::budget(Variant::Full, d(1, 1, 1)), 18);
    assert_eq!(ReductionPlan::budget(Variant::Full, d(0, 0, 0)), 1);
    assert_eq!(ReductionPlan::budget(Variant::Simplified, d(3, 2, 0)), 8);
}

#[test]
fn bounds_match_their_closed_forms() {
    assert_eq!(default_rank_bound(0), 6.0);
    assert_eq!(default_rank_bound(1024), 26.0);
    assert_eq!(degree_bound(4, 0), 36.0);
    assert!((degree_bound(4, 1) - (24.0 + 4.0 * 7f64.log2())).abs() < 1e-12);
    assert_eq!(degree_bound(1, 2), 28.0);
}

#[test]
fn envelope_fit_recovers_a_logarithmic_line() {
    let pts: Vec<(usize, u64)> = (2..18)
        .map(|e| {
            let n = (1usize << e) - 2;
            (n, 3 * e as u64 + 5)
        })
        .collect();
    let fit = fit_log_envelope(pts.iter().copied()).unwrap();
    assert!((fit.c1 - 3.0).abs() < 1e-9, "{fit:?}");
    assert!((fit.c2 - 5.0).abs() < 1e-9, "{fit:?}");
    assert!(pts.iter().all(|&(n, y)| y as f64 <= fit.at(n) + 1e-9));
}

fn all_inserts(n: usize, variant: Variant) -> OpTrace {
    OpTrace {
        seed: 0,
        variant,
        ops: (0..n).map(|i| Op::Insert((i as i64 * 7919) % n as i64)).collect(),
    }
}

#[test]
fn insert_comparisons_do_not_grow_with_n() {
    for variant in [Variant::Full, Variant::Simplified] {
        let maxima: Vec<u64> = [1usize << 10, 1 << 13, 1 << 16]
            .iter()
            .map(|&n| {
                let (_, s) = measure_costs(&all_inserts(n, variant)).unwrap();
                s.envelope("ins").unwrap().max_comparisons
            })
            .collect();
        assert!(maxima.iter().all(|&m| m == maxima[0]), "{variant:?} {maxima:?}");
    }
}
