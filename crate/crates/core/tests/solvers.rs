use std::collections::BTreeMap;
use std::time::Duration;

use mcmu::covering3::LoSlot;
use mcmu::{
    bottom_up, brute_force_optimum, brute_force_optimum_with_cap, cmax, export_lp_mc2, export_lp_mc3, generate,
    level_sum_lower_bound, objective_mc2, objective_mc3, rebuild_schedule_mc3, restrict, restriction_lower_bounds,
    solve_mc2, solve_mc3, Certificate, GeneratorConfig, Instance, Mc2Covering, Mc3Covering, Permutation,
    RestrictionKind, SolveOptions, TaskId,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mc3(n: usize, seed: u64) -> Instance {
    generate(&GeneratorConfig::mc3(n, seed)).unwrap()
}

fn mc2(n: usize, seed: u64) -> Instance {
    generate(&GeneratorConfig::mc2(n, seed)).unwrap()
}

#[test]
fn mc3_matches_oracle_up_to_nine_tasks() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..60 {
        let n = rng.gen_range(8..=9);
        let inst = mc3(n, rng.gen());
        let opt = brute_force_optimum(&inst).unwrap().1;
        let cold = solve_mc3(&inst, &SolveOptions::default(), None).unwrap();
        assert_eq!(cold.makespan, opt);
        let warm = bottom_up(&inst, &SolveOptions::default()).unwrap();
        let hot = solve_mc3(&inst, &SolveOptions::default(), Some(&warm)).unwrap();
        assert_eq!(hot.makespan, opt);
        assert!(hot.makespan <= warm.makespan);
        assert!(warm.lb_minus <= warm.makespan && warm.makespan <= 3 * opt && warm.makespan >= opt);
    }
}

#[test]
fn mc3_with_uneven_splits() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let splits = [[0.6, 0.2, 0.2], [0.2, 0.2, 0.6], [0.2, 0.6, 0.2], [0.5, 0.0, 0.5]];
    for i in 0..120 {
        let cfg = GeneratorConfig {
            criticality_split: splits[i % splits.len()].to_vec(),
            prolongation_ranges: vec![(1, 7), (1, 14)],
            ..GeneratorConfig::mc3(rng.gen_range(2..=8), rng.gen())
        };
        let inst = generate(&cfg).unwrap();
        let opt = brute_force_optimum(&inst).unwrap().1;
        assert_eq!(solve_mc3(&inst, &SolveOptions::default(), None).unwrap().makespan, opt);
        let r = bottom_up(&inst, &SolveOptions::default()).unwrap();
        if r.certificate.is_some() {
            assert_eq!(r.makespan, opt);
        }
    }
}

#[test]
fn mc3_on_two_levels_equals_mc2() {
    for seed in 0..100 {
        let inst = mc2(12, seed);
        let a = solve_mc2(&inst, &SolveOptions::default()).unwrap();
        let b = solve_mc3(&inst, &SolveOptions::default(), None).unwrap();
        assert_eq!(a.makespan, b.makespan);
    }
}

#[test]
fn solvers_are_deterministic() {
    let inst = mc3(14, 5);
    let a = solve_mc3(&inst, &SolveOptions::default().with_seed(3), None).unwrap();
    let b = solve_mc3(&inst, &SolveOptions::default().with_seed(3), None).unwrap();
    assert_eq!(a.covering, b.covering);
    let inst = mc2(40, 5);
    let a = solve_mc2(&inst, &SolveOptions::default()).unwrap();
    let b = solve_mc2(&inst, &SolveOptions::default()).unwrap();
    assert_eq!(a.covering, b.covering);
}

#[test]
fn bounds_hold_on_small_instances() {
    for seed in 0..150 {
        let inst = mc3(7, seed);
        let opt = brute_force_optimum(&inst).unwrap().1;
        let b = restriction_lower_bounds(&inst, |i| Ok(solve_mc2(i, &SolveOptions::default())?.makespan)).unwrap();
        assert!(b.best() <= opt);
        let two = mc2(7, seed);
        let sol = solve_mc2(&two, &SolveOptions::default()).unwrap();
        assert!(sol.lower_bound <= brute_force_optimum(&two).unwrap().1);
        assert!(sol.makespan >= level_sum_lower_bound(&two));
    }
}

#[test]
fn time_limited_runs_keep_valid_bounds() {
    let zero = SolveOptions::default().with_time_limit(Duration::ZERO);
    for seed in 0..5 {
        let inst = mc2(150, seed);
        let sol = solve_mc2(&inst, &zero).unwrap();
        assert!(sol.lower_bound <= sol.makespan);
        assert!(sol.lower_bound >= level_sum_lower_bound(&inst));
        assert_eq!(objective_mc2(&inst, &sol.covering).unwrap(), sol.makespan);
        if !sol.optimal {
            assert!(sol.gap() >= 0.0);
        }

        let inst = mc3(60, seed);
        let sol = solve_mc3(&inst, &zero, None).unwrap();
        assert!(sol.lower_bound <= sol.makespan);
        assert_eq!(objective_mc3(&inst, &sol.covering).unwrap(), sol.makespan);
        let r = bottom_up(&inst, &zero).unwrap();
        let hot = solve_mc3(&inst, &zero, Some(&r)).unwrap();
        assert!(hot.makespan <= r.makespan);
    }
}

#[test]
fn adversarial_instances_exist() {
    // random search for instances where neither condition certifies
    let mut found = 0;
    for seed in 0..400 {
        let inst = mc3(7, 10_000 + seed);
        let r = bottom_up(&inst, &SolveOptions::default()).unwrap();
        if r.certificate == Certificate::None {
            found += 1;
            let opt = brute_force_optimum(&inst).unwrap().1;
            assert!(r.makespan >= r.lb_minus && r.makespan >= opt);
        }
    }
    assert!(found > 0);
}

#[test]
fn fully_covered_instance_is_certified() {
    let inst = Instance::from_shapes([
        (1u32, vec![2, 9, 12]),
        (2, vec![3, 10, 11]),
        (3, vec![4]),
        (4, vec![5]),
        (5, vec![1, 3]),
    ])
    .unwrap();
    let r = bottom_up(&inst, &SolveOptions::default()).unwrap();
    assert_eq!(r.certificate, Certificate::AllLoFullyCovered);
    assert_eq!(r.makespan, 23);
    assert_eq!(brute_force_optimum(&inst).unwrap().1, 23);
}

#[test]
fn spec_three_level_examples() {
    let inst = Instance::from_shapes([(1u32, vec![2, 5, 8]), (2, vec![4])]).unwrap();
    assert_eq!(solve_mc3(&inst, &SolveOptions::default(), None).unwrap().makespan, 8);
    assert_eq!(brute_force_optimum(&inst).unwrap().1, 8);

    let great = Instance::from_shapes([(1u32, vec![2, 5, 8])]).unwrap();
    let b = restriction_lower_bounds(&great, |i| Ok(solve_mc2(i, &SolveOptions::default())?.makespan)).unwrap();
    assert_eq!((b.minus, b.plus), (5, 8));
}

#[test]
fn greats_only_lb_plus_is_two_level_optimum() {
    for seed in 0..40 {
        let cfg = GeneratorConfig {
            criticality_split: vec![0.0, 0.0, 1.0],
            ..GeneratorConfig::mc3(6, seed)
        };
        let inst = generate(&cfg).unwrap();
        let plus = restrict(&inst, RestrictionKind::plus(2));
        let lb = solve_mc2(&plus, &SolveOptions::default()).unwrap().makespan;
        assert_eq!(lb, brute_force_optimum(&plus).unwrap().1);
        assert!(lb <= brute_force_optimum(&inst).unwrap().1);
    }
}

fn random_cover(rng: &mut ChaCha8Rng, inst: &Instance) -> Mc3Covering {
    let ids = |x: usize| -> Vec<TaskId> {
        inst.tasks().iter().filter(|t| t.criticality() == x).map(|t| t.id()).collect()
    };
    let (greats, his, los) = (ids(3), ids(2), ids(1));
    let hi_assign: BTreeMap<TaskId, Option<TaskId>> = his
        .iter()
        .map(|&h| (h, greats.get(rng.gen_range(0..=greats.len())).copied()))
        .collect();
    let lo_assign: BTreeMap<TaskId, LoSlot> = los
        .iter()
        .map(|&k| {
            let slot = if rng.gen_bool(0.5) {
                greats.choose(rng).map_or((None, None), |&g| (Some(g), None))
            } else {
                his.choose(rng).map_or((None, None), |&h| (hi_assign[&h], Some(h)))
            };
            (k, slot)
        })
        .collect();
    Mc3Covering::new(inst, lo_assign, hi_assign).unwrap()
}

#[test]
fn rebuild_matches_objective_for_random_coverings() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..1000 {
        let inst = mc3(rng.gen_range(1..=25), rng.gen());
        let cov = random_cover(&mut rng, &inst);
        let perm = rebuild_schedule_mc3(&inst, &cov).unwrap();
        assert_eq!(cmax(&inst, &perm).unwrap(), objective_mc3(&inst, &cov).unwrap());
        assert_eq!(Mc3Covering::from_permutation(&inst, &perm).unwrap(), cov);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn any_order_reads_as_a_covering(seed in any::<u64>(), n in 1usize..25, shuffle in any::<u64>()) {
        let inst = mc3(n, seed);
        let mut order: Vec<TaskId> = inst.ids().collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle));
        let perm = Permutation::new(order).unwrap();
        let cov = Mc3Covering::from_permutation(&inst, &perm).unwrap();
        prop_assert_eq!(objective_mc3(&inst, &cov).unwrap(), cmax(&inst, &perm).unwrap());

        let two = mc2(n, seed);
        let mut order: Vec<TaskId> = two.ids().collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle));
        let perm = Permutation::new(order).unwrap();
        let cov = Mc2Covering::from_permutation(&two, &perm).unwrap();
        prop_assert_eq!(objective_mc2(&two, &cov).unwrap(), cmax(&two, &perm).unwrap());
    }
}

#[test]
fn lp_exports_are_well_formed() {
    let inst = mc3(8, 4);
    let text = export_lp_mc3(&inst).unwrap();
    assert!(text.starts_with("\\ covering model"));
    assert!(text.contains("\nSubject To\n") && text.ends_with("End\n"));

    let two = mc2(8, 4);
    let a = export_lp_mc2(&two).unwrap();
    let b = export_lp_mc3(&two).unwrap();
    let his = two.tasks().iter().filter(|t| t.criticality() == 2).count();
    let los = two.len() - his;
    // with no Great-task every Hi-task is free and each Lo-task picks a Hi-task or nothing
    assert_eq!(b.matches("\n x_n_").count(), (his + 1) * los);
    assert_eq!(a.matches("\n x_").count(), his * los);
}

#[test]
fn oracle_cap_is_enforced() {
    let inst = mc3(10, 1);
    assert!(brute_force_optimum(&inst).is_err());
    assert!(brute_force_optimum_with_cap(&inst, 10).is_ok());
}
