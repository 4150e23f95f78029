//! Acceptance suite: one line per criterion, non-zero exit on any failure.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mcmu::covering3::LoSlot;
use mcmu::{
    bottom_up, brute_force_assignments_mc2, brute_force_optimum, brute_force_optimum_with_cap, cmax, critical_path,
    generate, lcf, left_shift, level_sum_lower_bound, objective_mc2, objective_mc3, rebuild_schedule_mc2,
    rebuild_schedule_mc3, restrict, sample_scenario, simulate, solve_mc2, solve_mc3, FShape, GeneratorConfig,
    Instance, Mc2Covering, Mc3Covering, Permutation, RestrictionKind, SolveOptions, TaskId, Time,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn unlimited() -> SolveOptions {
    SolveOptions::unlimited()
}

fn mc2_instance(rng: &mut ChaCha8Rng, n: usize) -> Instance {
    generate(&GeneratorConfig::mc2(n, rng.gen())).unwrap()
}

fn mc3_instance(rng: &mut ChaCha8Rng, n: usize) -> Instance {
    generate(&GeneratorConfig::mc3(n, rng.gen())).unwrap()
}

fn oracle(inst: &Instance) -> Time {
    brute_force_optimum(inst).unwrap().1
}

fn first_failures(fails: &[String]) -> String {
    fails.iter().take(3).cloned().collect::<Vec<_>>().join("; ")
}

fn verdict(checked: usize, fails: Vec<String>, what: &str) -> Outcome {
    if fails.is_empty() {
        Ok(format!("{checked} {what}, 0 mismatches"))
    } else {
        Err(format!("{} of {checked} {what} failed: {}", fails.len(), first_failures(&fails)))
    }
}

fn c1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut fails = Vec::new();
    for i in 0..500 {
        let n = rng.gen_range(2..=8);
        let inst = mc2_instance(&mut rng, n);
        let sol = solve_mc2(&inst, &unlimited()).unwrap();
        let opt = oracle(&inst);
        if sol.makespan != opt || !sol.optimal {
            fails.push(format!("#{i} n={n}: solver {} vs oracle {opt}", sol.makespan));
        }
    }
    verdict(500, fails, "instances")
}

fn c2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut fails = Vec::new();
    for i in 0..200 {
        let n = rng.gen_range(1..=7);
        let inst = mc2_instance(&mut rng, n);
        let by_assignment = brute_force_assignments_mc2(&inst).unwrap();
        let opt = oracle(&inst);
        if by_assignment != opt {
            fails.push(format!("#{i} n={n}: assignments {by_assignment} vs permutations {opt}"));
        }
    }
    verdict(200, fails, "instances")
}

fn c3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut fails = Vec::new();
    for i in 0..300 {
        let n = rng.gen_range(2..=7);
        let inst = mc3_instance(&mut rng, n);
        let sol = solve_mc3(&inst, &unlimited(), None).unwrap();
        let opt = oracle(&inst);
        if sol.makespan != opt || !sol.optimal {
            fails.push(format!("#{i} n={n}: solver {} vs oracle {opt}", sol.makespan));
        }
    }
    verdict(300, fails, "instances")
}

fn c4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut fails = Vec::new();
    for i in 0..1000 {
        let n = rng.gen_range(1..=8);
        let inst = if i % 2 == 0 {
            mc2_instance(&mut rng, n)
        } else {
            mc3_instance(&mut rng, n)
        };
        let l = inst.max_criticality() as Time;
        let lb = level_sum_lower_bound(&inst);
        let opt = oracle(&inst);
        let (_, worst) = lcf(&inst);
        if !(lb <= opt && opt <= worst && worst <= l * opt) {
            fails.push(format!("#{i}: lb {lb}, opt {opt}, lcf {worst}, L {l}"));
        }
    }
    verdict(1000, fails, "instances")
}

fn c5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut fails = Vec::new();
    for i in 0..300 {
        let n = rng.gen_range(1..=7);
        let inst = mc3_instance(&mut rng, n);
        let minus = solve_mc2(&restrict(&inst, RestrictionKind::minus(2)), &unlimited()).unwrap();
        let plus = solve_mc2(&restrict(&inst, RestrictionKind::plus(2)), &unlimited()).unwrap();
        let opt = oracle(&inst);
        if minus.makespan > opt || plus.makespan > opt {
            fails.push(format!("#{i}: lb- {}, lb+ {}, opt {opt}", minus.makespan, plus.makespan));
        }
    }
    verdict(300, fails, "instances")
}

fn c6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut fails = Vec::new();
    let mut certified = 0;
    for i in 0..300 {
        let n = rng.gen_range(1..=7);
        let inst = mc3_instance(&mut rng, n);
        let r = bottom_up(&inst, &unlimited()).unwrap();
        let opt = oracle(&inst);
        if r.makespan < opt || cmax(&inst, &r.permutation).unwrap() != r.makespan {
            fails.push(format!("#{i}: inconsistent makespan {} (opt {opt})", r.makespan));
        }
        if r.certificate.is_some() {
            certified += 1;
            if r.makespan != opt {
                fails.push(format!("#{i}: certified {} but opt {opt}", r.makespan));
            }
        }
    }
    if fails.is_empty() {
        Ok(format!("300 instances, {certified} certificates, 0 violations"))
    } else {
        verdict(300, fails, "instances")
    }
}

fn random_mc2_covering(rng: &mut ChaCha8Rng, inst: &Instance) -> Mc2Covering {
    let his: Vec<TaskId> = inst.tasks().iter().filter(|t| t.criticality() == 2).map(FShape::id).collect();
    let assign = inst
        .tasks()
        .iter()
        .filter(|t| t.criticality() == 1)
        .map(|t| {
            let k = rng.gen_range(0..=his.len());
            (t.id(), his.get(k).copied())
        })
        .collect();
    Mc2Covering::new(inst, assign).unwrap()
}

fn random_mc3_covering(rng: &mut ChaCha8Rng, inst: &Instance) -> Mc3Covering {
    let ids = |x: usize| -> Vec<TaskId> {
        inst.tasks().iter().filter(|t| t.criticality() == x).map(FShape::id).collect()
    };
    let (greats, his, los) = (ids(3), ids(2), ids(1));
    let hi_assign: BTreeMap<TaskId, Option<TaskId>> = his
        .iter()
        .map(|&h| (h, greats.get(rng.gen_range(0..=greats.len())).copied()))
        .collect();
    let lo_assign: BTreeMap<TaskId, LoSlot> = los
        .iter()
        .map(|&k| {
            let slot = match rng.gen_range(0..3) {
                0 => (None, None),
                1 => match greats.choose(rng) {
                    Some(&g) => (Some(g), None),
                    None => (None, None),
                },
                _ => match his.choose(rng) {
                    Some(&h) => (hi_assign[&h], Some(h)),
                    None => (None, None),
                },
            };
            (k, slot)
        })
        .collect();
    Mc3Covering::new(inst, lo_assign, hi_assign).unwrap()
}

/// Uncovered tasks lead so that no block absorbs them; blocks and the
/// Lo-tasks inside each block are shuffled.
fn shuffled_mc2(rng: &mut ChaCha8Rng, cov: &Mc2Covering, inst: &Instance) -> Permutation {
    let mut uncovered: Vec<TaskId> = cov.uncovered().collect();
    uncovered.shuffle(rng);
    let mut blocks: Vec<Vec<TaskId>> = cov
        .blocks(inst)
        .unwrap()
        .into_iter()
        .map(|b| {
            let mut lo: Vec<TaskId> = b.covered.into_iter().collect();
            lo.shuffle(rng);
            std::iter::once(b.hi_task).chain(lo).collect()
        })
        .collect();
    blocks.shuffle(rng);
    Permutation::new(uncovered.into_iter().chain(blocks.into_iter().flatten()).collect()).unwrap()
}

fn shuffled_mc3(rng: &mut ChaCha8Rng, cov: &Mc3Covering) -> Permutation {
    let mut uncovered: Vec<TaskId> = cov.uncovered().collect();
    uncovered.shuffle(rng);
    let hi_block = |rng: &mut ChaCha8Rng, h: TaskId| -> Vec<TaskId> {
        let mut lo: Vec<TaskId> = cov
            .lo_assign
            .iter()
            .filter(|(_, s)| s.1 == Some(h))
            .map(|(&k, _)| k)
            .collect();
        lo.shuffle(rng);
        std::iter::once(h).chain(lo).collect()
    };
    // free Hi-blocks stay ahead of the Great-blocks, which would cover them
    let mut free: Vec<Vec<TaskId>> = Vec::new();
    for (&h, g) in &cov.hi_assign {
        if g.is_none() {
            free.push(hi_block(rng, h));
        }
    }
    free.shuffle(rng);
    let mut blocks: Vec<Vec<TaskId>> = Vec::new();
    for &g in cov.great_lengths.keys() {
        let mut direct: Vec<TaskId> = cov
            .lo_assign
            .iter()
            .filter(|(_, s)| **s == (Some(g), None))
            .map(|(&k, _)| k)
            .collect();
        direct.shuffle(rng);
        let mut nested: Vec<Vec<TaskId>> = cov
            .hi_assign
            .iter()
            .filter(|(_, holder)| **holder == Some(g))
            .map(|(&h, _)| hi_block(rng, h))
            .collect();
        nested.shuffle(rng);
        let mut block = vec![g];
        block.extend(direct);
        block.extend(nested.into_iter().flatten());
        blocks.push(block);
    }
    blocks.shuffle(rng);
    let order = uncovered
        .into_iter()
        .chain(free.into_iter().flatten())
        .chain(blocks.into_iter().flatten());
    Permutation::new(order.collect()).unwrap()
}

fn c7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut fails = Vec::new();
    let mut orders = 0;
    for i in 0..50 {
        let n = rng.gen_range(4..=14);
        let inst2 = mc2_instance(&mut rng, n);
        let cov2 = random_mc2_covering(&mut rng, &inst2);
        let base2 = cmax(&inst2, &rebuild_schedule_mc2(&inst2, &cov2).unwrap()).unwrap();
        if base2 != objective_mc2(&inst2, &cov2).unwrap() {
            fails.push(format!("mc2 #{i}: rebuilt {base2} vs objective"));
        }
        let inst3 = mc3_instance(&mut rng, n);
        let cov3 = random_mc3_covering(&mut rng, &inst3);
        let base3 = cmax(&inst3, &rebuild_schedule_mc3(&inst3, &cov3).unwrap()).unwrap();
        if base3 != objective_mc3(&inst3, &cov3).unwrap() {
            fails.push(format!("mc3 #{i}: rebuilt {base3} vs objective"));
        }
        for _ in 0..100 {
            let c2 = cmax(&inst2, &shuffled_mc2(&mut rng, &cov2, &inst2)).unwrap();
            let c3 = cmax(&inst3, &shuffled_mc3(&mut rng, &cov3)).unwrap();
            orders += 2;
            if c2 != base2 {
                fails.push(format!("mc2 #{i}: shuffle gives {c2}, rebuilt {base2}"));
            }
            if c3 != base3 {
                fails.push(format!("mc3 #{i}: shuffle gives {c3}, rebuilt {base3}"));
            }
        }
    }
    verdict(orders, fails, "shuffled orders")
}

fn c8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut fails = Vec::new();
    let mut skipped_total = 0;
    for i in 0..10_000 {
        let n = rng.gen_range(1..=12);
        let inst = if i % 2 == 0 {
            mc2_instance(&mut rng, n)
        } else {
            mc3_instance(&mut rng, n)
        };
        let mut order: Vec<TaskId> = inst.ids().collect();
        order.shuffle(&mut rng);
        let perm = Permutation::new(order).unwrap();
        let sched = left_shift(&inst, &perm).unwrap();
        let probs = inst
            .tasks()
            .iter()
            .map(|t| {
                let w: Vec<f64> = (0..t.criticality()).map(|_| rng.gen_range(0.05..1.0)).collect();
                let s: f64 = w.iter().sum();
                (t.id(), w.into_iter().map(|x| x / s).collect())
            })
            .collect();
        let scen = sample_scenario(&inst, &probs, rng.gen()).unwrap();
        let trace = simulate(&inst, &sched, &scen).unwrap();
        let top = inst.max_criticality();
        for &j in &trace.skipped {
            skipped_total += 1;
            let xj = inst.task(j).unwrap().criticality();
            let sj = sched.start(j).unwrap();
            if xj == top {
                fails.push(format!("#{i}: maximal-criticality task {j} skipped"));
            }
            let blocked = trace.executed.iter().any(|e| {
                e.start <= sj && sj < e.end && scen.level(e.task).unwrap() > xj
            });
            if !blocked {
                fails.push(format!("#{i}: task {j} skipped without a blocker"));
            }
        }
    }
    if fails.is_empty() {
        Ok(format!("10000 triples, {skipped_total} skips, 0 violations"))
    } else {
        verdict(10_000, fails, "triples")
    }
}

fn c9() -> Outcome {
    let limit = Duration::from_secs(300);
    let opts = SolveOptions::unlimited().with_time_limit(limit);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut mc2_solved = 0;
    let mut mc2_worst = Duration::ZERO;
    for _ in 0..20 {
        let inst = mc2_instance(&mut rng, 100);
        let sol = solve_mc2(&inst, &opts).unwrap();
        mc2_worst = mc2_worst.max(sol.elapsed);
        if sol.optimal && sol.elapsed <= limit {
            mc2_solved += 1;
        }
    }
    let mut bu_done = 0;
    let mut bu_worst = Duration::ZERO;
    for _ in 0..20 {
        let inst = mc3_instance(&mut rng, 60);
        let r = bottom_up(&inst, &opts).unwrap();
        bu_worst = bu_worst.max(r.elapsed);
        if !r.timed_out && r.elapsed <= limit {
            bu_done += 1;
        }
    }
    let detail = format!(
        "mc2 n=100: {mc2_solved}/20 optimal (max {:.2}s); bottom-up n=60: {bu_done}/20 complete (max {:.2}s)",
        mc2_worst.as_secs_f64(),
        bu_worst.as_secs_f64()
    );
    if mc2_solved >= 18 && bu_done >= 18 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scaled(inst: &Instance, factor: Time) -> Instance {
    Instance::new(
        inst.tasks()
            .iter()
            .map(|t| FShape::new(t.id(), t.proc().iter().map(|p| p * factor).collect()).unwrap())
            .collect(),
    )
    .unwrap()
}

fn with_increment(inst: &Instance, id: TaskId, level: usize) -> Option<Instance> {
    let tasks = inst
        .tasks()
        .iter()
        .map(|t| {
            let mut proc = t.proc().to_vec();
            if t.id() == id {
                proc[level - 1] += 1;
            }
            FShape::new(t.id(), proc).ok()
        })
        .collect::<Option<Vec<_>>>()?;
    Some(Instance::new(tasks).unwrap())
}

/// Checks every critical-path entry; entries whose increment would break
/// strict increase are counted in the second component.
fn perturbation_check(inst: &Instance, perm: &Permutation) -> Result<(usize, usize), String> {
    let base = cmax(inst, perm).unwrap();
    let path = critical_path(inst, perm).unwrap();
    if path.length(inst).unwrap() != base {
        return Err(format!("path length {} vs makespan {base}", path.length(inst).unwrap()));
    }
    let (mut checked, mut invalid) = (0, 0);
    for &(id, level) in &path.entries {
        match with_increment(inst, id, level) {
            Some(bumped) => {
                checked += 1;
                let c = cmax(&bumped, perm).unwrap();
                if c != base + 1 {
                    return Err(format!("bumping ({id}, {level}) gives {c}, base {base}"));
                }
            }
            None => invalid += 1,
        }
    }
    Ok((checked, invalid))
}

fn c10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut fails = Vec::new();
    let (mut entries, mut invalid) = (0, 0);
    for i in 0..200 {
        let n = rng.gen_range(1..=10);
        let inst = if i % 2 == 0 {
            mc2_instance(&mut rng, n)
        } else {
            mc3_instance(&mut rng, n)
        };
        let mut order: Vec<TaskId> = inst.ids().collect();
        order.shuffle(&mut rng);
        let perm = Permutation::new(order).unwrap();
        // doubling keeps every increment inside the F-shape invariant
        for candidate in [inst.clone(), scaled(&inst, 2)] {
            match perturbation_check(&candidate, &perm) {
                Ok((c, s)) => {
                    entries += c;
                    invalid += s;
                }
                Err(e) => fails.push(format!("#{i}: {e}")),
            }
        }
    }
    if fails.is_empty() {
        Ok(format!(
            "400 schedules, {entries} entries perturbed ({invalid} skipped as invalid shapes), 0 violations"
        ))
    } else {
        verdict(400, fails, "schedules")
    }
}

type Criterion = fn() -> Outcome;

fn main() -> ExitCode {
    // keep the oracle cap visible here so a change to it is noticed
    assert!(brute_force_optimum_with_cap(&Instance::new(vec![]).unwrap(), 9).is_ok());
    let criteria: [(&str, Criterion); 10] = [
        ("C1 mc2 solver vs permutation oracle", c1),
        ("C2 assignment oracle vs permutation oracle", c2),
        ("C3 mc3 solver vs permutation oracle", c3),
        ("C4 level-sum <= OPT <= LCF <= L*OPT", c4),
        ("C5 lb- and lb+ never exceed OPT", c5),
        ("C6 bottom-up certificates are sound", c6),
        ("C7 block and in-block shuffles keep the makespan", c7),
        ("C8 skip policy safety", c8),
        ("C9 desk-scale throughput", c9),
        ("C10 critical-path perturbation", c10),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail} ({secs:.1}s)");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
