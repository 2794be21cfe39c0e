mod common;

use proptest::prelude::*;
use treeval::metrics::{evaluate_case, EvalOptions};
use treeval::phantom::{degrade, generate, Degradation, PhantomSpec, PhantomTruth};
use treeval::topology::{centerline, SkeletonGraph, Terminal};

use common::component_count;

fn spec_strategy() -> impl Strategy<Value = PhantomSpec> {
    (0u32..=4, 1.0f64..3.5, 0.6f64..1.0, 16u32..32, 0.0f64..0.3, any::<u64>()).prop_map(
        |(depth, r, decay, len, jitter, seed)| PhantomSpec {
            depth,
            root_radius_vox: r,
            radius_decay: decay,
            segment_length_vox: vec![len + 8, len, len * 3 / 4, len * 5 / 8, len / 2],
            length_jitter: jitter,
            rng_seed: seed,
            ..PhantomSpec::default()
        },
    )
}

fn build(spec: &PhantomSpec) -> PhantomTruth {
    generate(&spec.fitted(2).unwrap()).unwrap()
}

/// Truth branch nearest to a skeleton voxel.
fn nearest_branch(t: &PhantomTruth, sk: &SkeletonGraph, v: usize) -> usize {
    let p = sk.coords(v).map(|c| c as f64);
    let dist = |a: [f64; 3], e: [f64; 3]| {
        let ab: Vec<f64> = (0..3).map(|i| e[i] - a[i]).collect();
        let ap: Vec<f64> = (0..3).map(|i| p[i] - a[i]).collect();
        let l2: f64 = ab.iter().map(|x| x * x).sum();
        let s = ((0..3).map(|i| ab[i] * ap[i]).sum::<f64>() / l2).clamp(0.0, 1.0);
        (0..3).map(|i| (a[i] + s * ab[i] - p[i]).powi(2)).sum::<f64>()
    };
    t.branches
        .iter()
        .min_by(|a, b| dist(a.start, a.end).total_cmp(&dist(b.start, b.end)))
        .unwrap()
        .id
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn truth_is_consistent(spec in spec_strategy()) {
        let t = build(&spec);
        prop_assert_eq!(t.branches.len(), spec.branch_count());
        let sum: f64 = t.branches.iter().map(|b| b.length_mm).sum();
        prop_assert_eq!(sum, t.total_length_mm);
        for b in &t.branches {
            prop_assert!(b.centerline.iter().all(|&i| t.mask.data()[i]));
        }
        prop_assert_eq!(component_count(&t.mask), 1);
        let again = build(&spec);
        prop_assert_eq!(again.mask, t.mask);
    }

    #[test]
    fn self_evaluation_is_perfect(spec in spec_strategy()) {
        let t = build(&spec);
        let m = evaluate_case("self", &t.mask, &t.mask, &EvalOptions::default(), None).unwrap();
        prop_assert_eq!(m.values(), [100.0; 6]);
        prop_assert_eq!(m.coverage.b_ref, spec.branch_count());
    }

    #[test]
    fn parsed_lengths_follow_analytic_lengths(spec in spec_strategy()) {
        let t = build(&spec);
        let sk = centerline(&t.mask, 0.0);
        prop_assert_eq!(sk.branches.len(), t.branches.len());
        let diag = 3f64.sqrt();
        let mut matched = vec![0usize; t.branches.len()];
        for b in &sk.branches {
            let mut votes = vec![0usize; t.branches.len()];
            for &v in b.interior() {
                votes[nearest_branch(&t, &sk, v)] += 1;
            }
            let owner = (0..votes.len()).max_by_key(|&i| votes[i]).unwrap();
            matched[owner] += 1;
            // junctions and rounded tube tips each shift a branch end by at most one voxel
            let terminals = [b.start, b.end].iter().filter(|x| !matches!(x, Terminal::Cycle)).count();
            let err = (b.length_mm - t.branches[owner].length_mm).abs();
            prop_assert!(err <= diag * terminals as f64 + 1e-9,
                "branch {} parsed {:.3} analytic {:.3}", owner, b.length_mm, t.branches[owner].length_mm);
        }
        prop_assert!(matched.iter().all(|&m| m == 1));
    }

    #[test]
    fn small_blob_changes_nothing(spec in spec_strategy(), size in 1usize..40, seed in any::<u64>()) {
        let t = build(&spec);
        prop_assume!(size < t.mask.count());
        let Ok(noisy) = degrade(&t, &Degradation::NoiseBlob { size, seed }) else { return Ok(()) };
        let clean = evaluate_case("c", &t.mask, &t.mask, &EvalOptions::default(), None).unwrap();
        let dirty = evaluate_case("c", &noisy, &t.mask, &EvalOptions::default(), None).unwrap();
        prop_assert_eq!(clean, dirty);
    }
}

#[test]
fn dilation_keeps_topology_scores_and_costs_precision() {
    let t = generate(&PhantomSpec::default().fitted(3).unwrap()).unwrap();
    let grown = degrade(&t, &Degradation::Dilate).unwrap();
    let m = evaluate_case("d", &grown, &t.mask, &EvalOptions::default(), None).unwrap();
    assert_eq!((m.td, m.bd, m.sen), (100.0, 100.0, 100.0));
    assert!(m.precision < 100.0);
}

#[test]
fn breaking_a_branch_loses_at_least_its_distal_subtree() {
    let t = generate(&PhantomSpec::default().fitted(3).unwrap()).unwrap();
    for id in 1..t.branches.len() {
        let broken = degrade(&t, &Degradation::BreakBranch { branch: id, gap: 2 }).unwrap();
        assert_eq!(component_count(&broken), 2, "branch {id}");
        let m = evaluate_case("b", &broken, &t.mask, &EvalOptions::default(), None).unwrap();
        // the distal half of the broken branch plus everything below it
        let b = &t.branches[id];
        let below: f64 = t.subtree(id).unwrap().iter().skip(1).map(|&k| t.branches[k].length_mm).sum();
        let distal = (b.length_mm / 2.0 - 3f64.sqrt()).max(0.0) + below;
        let drop = 100.0 - m.td;
        assert!(
            drop + 1e-9 >= 100.0 * distal / t.total_length_mm - 100.0 * 2.0 * 3f64.sqrt() / t.total_length_mm,
            "branch {id}: drop {drop:.3} vs distal {:.3}",
            100.0 * distal / t.total_length_mm
        );
    }
}

