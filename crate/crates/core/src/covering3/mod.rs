//! Three criticality levels: nested covering blocks.
//!
//! A Great-task `i` forms a block together with the Lo-tasks placed directly
//! under it and the Hi-blocks nested in it. With `D` the direct Lo work and
//! `P_j` the Hi-block lengths, the block length is
//! `max(p_i(3), p_i(2) + sum P_j, p_i(1) + sum P_j + D)`. Hi-blocks that sit
//! in no Great-task and uncovered Lo-tasks are concatenated as in the
//! two-level model.

mod bottom_up;
mod search;

use std::collections::BTreeMap;

pub use bottom_up::{bottom_up, check_optimality_conditions, BottomUpResult, Certificate, OptimalityConditions};
pub use search::{solve_mc3, Mc3Solution};

use crate::error::{Error, Result};
use crate::lp::{LpModel, Row, Sense};
use crate::model::{FShape, Instance, Permutation, TaskId, Time};

/// Placement of a Lo-task: `(Great, Hi)`.
///
/// `(None, None)` is uncovered, `(Some(g), None)` sits directly under `g`,
/// `(g, Some(h))` is nested in the Hi-block of `h`, which itself lies in `g`.
pub type LoSlot = (Option<TaskId>, Option<TaskId>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mc3Covering {
    /// Every Lo-task id with its slot.
    pub lo_assign: BTreeMap<TaskId, LoSlot>,
    /// Every Hi-task id with the Great-task holding its block, if any.
    pub hi_assign: BTreeMap<TaskId, Option<TaskId>>,
    /// Hi-block lengths `P_j`; the context is `hi_assign[j]`.
    pub hi_block_lengths: BTreeMap<TaskId, Time>,
    /// Great-block lengths.
    pub great_lengths: BTreeMap<TaskId, Time>,
}

fn expect_criticality(instance: &Instance, id: TaskId, x: usize, role: &str) -> Result<()> {
    let got = instance.task(id)?.criticality();
    if got != x {
        return Err(Error::InvalidCovering(format!(
            "{id} used as {role} but has criticality {got}"
        )));
    }
    Ok(())
}

type Lengths = (BTreeMap<TaskId, Time>, BTreeMap<TaskId, Time>);

fn validate(
    instance: &Instance,
    lo_assign: &BTreeMap<TaskId, LoSlot>,
    hi_assign: &BTreeMap<TaskId, Option<TaskId>>,
) -> Result<Lengths> {
    instance.ensure_max_criticality(3)?;
    for (&h, &g) in hi_assign {
        expect_criticality(instance, h, 2, "Hi-task")?;
        if let Some(g) = g {
            expect_criticality(instance, g, 3, "Great-task")?;
        }
    }
    for (&k, &(g, h)) in lo_assign {
        expect_criticality(instance, k, 1, "Lo-task")?;
        if let Some(g) = g {
            expect_criticality(instance, g, 3, "Great-task")?;
        }
        if let Some(h) = h {
            expect_criticality(instance, h, 2, "Hi-task")?;
            let holder = hi_assign.get(&h).copied().flatten();
            if holder != g {
                return Err(Error::InvalidCovering(format!(
                    "dangling assignment: {k} nested in {h}, which is not placed in {}",
                    g.map_or("no Great-task".to_string(), |g| g.to_string())
                )));
            }
        }
    }
    for t in instance.tasks() {
        let present = match t.criticality() {
            1 => lo_assign.contains_key(&t.id()),
            2 => hi_assign.contains_key(&t.id()),
            _ => true,
        };
        if !present {
            return Err(Error::MissingTask(t.id()));
        }
    }

    let mut nested: BTreeMap<TaskId, Time> = BTreeMap::new();
    let mut direct: BTreeMap<TaskId, Time> = BTreeMap::new();
    for (&k, &slot) in lo_assign {
        let p = instance.task(k)?.p(1);
        match slot {
            (_, Some(h)) => *nested.entry(h).or_default() += p,
            (Some(g), None) => *direct.entry(g).or_default() += p,
            (None, None) => {}
        }
    }
    let mut hi_lengths = BTreeMap::new();
    let mut in_great: BTreeMap<TaskId, Time> = BTreeMap::new();
    for (&h, &g) in hi_assign {
        let t = instance.task(h)?;
        let len = t.p(2).max(t.p(1) + nested.get(&h).copied().unwrap_or(0));
        hi_lengths.insert(h, len);
        if let Some(g) = g {
            *in_great.entry(g).or_default() += len;
        }
    }
    let great_lengths = instance
        .tasks()
        .iter()
        .filter(|t| t.criticality() == 3)
        .map(|t| {
            let sp = in_great.get(&t.id()).copied().unwrap_or(0);
            let d = direct.get(&t.id()).copied().unwrap_or(0);
            (t.id(), great_block_length(t, sp, d))
        })
        .collect();
    Ok((hi_lengths, great_lengths))
}

/// `max(p(3), p(2) + nested, p(1) + nested + direct)`.
pub fn great_block_length(great: &FShape, nested: Time, direct: Time) -> Time {
    great
        .p(3)
        .max(great.p(2) + nested)
        .max(great.p(1) + nested + direct)
}

impl Mc3Covering {
    /// Validates the assignment and computes the block lengths. Lo- and
    /// Hi-tasks missing from the maps are treated as uncovered and free.
    pub fn new(
        instance: &Instance,
        mut lo_assign: BTreeMap<TaskId, LoSlot>,
        mut hi_assign: BTreeMap<TaskId, Option<TaskId>>,
    ) -> Result<Self> {
        for t in instance.tasks() {
            match t.criticality() {
                1 => {
                    lo_assign.entry(t.id()).or_insert((None, None));
                }
                2 => {
                    hi_assign.entry(t.id()).or_insert(None);
                }
                _ => {}
            }
        }
        let (hi_block_lengths, great_lengths) = validate(instance, &lo_assign, &hi_assign)?;
        Ok(Mc3Covering {
            lo_assign,
            hi_assign,
            hi_block_lengths,
            great_lengths,
        })
    }

    /// Reads the nested blocks off a left-shifted order.
    ///
    /// A Great-task opens a block that lasts until the next Great-task. Inside
    /// it, each Hi-task opens a Hi-block that collects the following Lo-tasks;
    /// Lo-tasks before the first Hi-task are direct. Before the first
    /// Great-task the two-level rules apply.
    pub fn from_permutation(instance: &Instance, perm: &Permutation) -> Result<Self> {
        instance.ensure_max_criticality(3)?;
        let order = perm.to_indices(instance)?;
        let mut great = None;
        let mut hi = None;
        let mut lo_assign = BTreeMap::new();
        let mut hi_assign = BTreeMap::new();
        for k in order {
            let t = &instance.tasks()[k];
            match t.criticality() {
                3 => {
                    great = Some(t.id());
                    hi = None;
                }
                2 => {
                    hi_assign.insert(t.id(), great);
                    hi = Some(t.id());
                }
                _ => {
                    lo_assign.insert(t.id(), (great, hi));
                }
            }
        }
        Mc3Covering::new(instance, lo_assign, hi_assign)
    }

    pub fn uncovered(&self) -> impl Iterator<Item = TaskId> + '_ {
        self.lo_assign
            .iter()
            .filter(|(_, slot)| **slot == (None, None))
            .map(|(&k, _)| k)
    }

    fn nested_in(&self, hi: TaskId) -> impl Iterator<Item = TaskId> + '_ {
        self.lo_assign
            .iter()
            .filter(move |(_, slot)| slot.1 == Some(hi))
            .map(|(&k, _)| k)
    }
}

/// Great-block lengths plus free Hi-block lengths plus uncovered Lo work,
/// recomputed from the assignment.
pub fn objective_mc3(instance: &Instance, cov: &Mc3Covering) -> Result<Time> {
    let (hi_lengths, great_lengths) = validate(instance, &cov.lo_assign, &cov.hi_assign)?;
    let greats: Time = great_lengths.values().sum();
    let free: Time = cov
        .hi_assign
        .iter()
        .filter(|(_, g)| g.is_none())
        .map(|(h, _)| hi_lengths[h])
        .sum();
    let uncovered = cov
        .uncovered()
        .map(|k| Ok(instance.task(k)?.p(1)))
        .sum::<Result<Time>>()?;
    Ok(greats + free + uncovered)
}

/// Task order realizing a covering.
///
/// Uncovered Lo-tasks come first, then the free Hi-blocks (each Hi-task
/// followed by its nested Lo-tasks), then every Great-task followed by its
/// direct Lo-tasks and its Hi-blocks. All groups are in ascending id.
/// Leading with the uncovered tasks keeps them out of every block.
pub fn rebuild_schedule_mc3(instance: &Instance, cov: &Mc3Covering) -> Result<Permutation> {
    validate(instance, &cov.lo_assign, &cov.hi_assign)?;
    let mut order: Vec<TaskId> = cov.uncovered().collect();
    let hi_block = |order: &mut Vec<TaskId>, h: TaskId| {
        order.push(h);
        order.extend(cov.nested_in(h));
    };
    for (&h, g) in &cov.hi_assign {
        if g.is_none() {
            hi_block(&mut order, h);
        }
    }
    for &g in cov.great_lengths.keys() {
        order.push(g);
        order.extend(
            cov.lo_assign
                .iter()
                .filter(|(_, slot)| **slot == (Some(g), None))
                .map(|(&k, _)| k),
        );
        for (&h, holder) in &cov.hi_assign {
            if *holder == Some(g) {
                hi_block(&mut order, h);
            }
        }
    }
    let perm = Permutation::new(order)?;
    perm.to_indices(instance)?;
    Ok(perm)
}

/// The nested covering model as an integer program in LP format.
///
/// `n` stands for the empty index: `y_n_j` leaves Hi-task `j` free,
/// `x_i_n_k` puts Lo-task `k` directly under Great-task `i` and `x_n_n_k`
/// leaves it uncovered. Every Lo-task and Hi-task is placed exactly once.
pub fn export_lp_mc3(instance: &Instance) -> Result<String> {
    Ok(lp_model_mc3(instance)?.to_lp_string())
}

pub(crate) fn lp_model_mc3(instance: &Instance) -> Result<LpModel> {
    instance.ensure_max_criticality(3)?;
    let of = |x: usize| -> Vec<&FShape> {
        instance
            .tasks()
            .iter()
            .filter(|t| t.criticality() == x)
            .collect()
    };
    let (greats, his, los) = (of(3), of(2), of(1));
    let name = |t: Option<&FShape>| t.map_or("n".to_string(), |t| t.id().to_string());
    let gi: Vec<Option<&FShape>> = greats.iter().copied().map(Some).chain([None]).collect();
    let hj: Vec<Option<&FShape>> = his.iter().copied().map(Some).chain([None]).collect();
    let len = |i: &FShape| format!("p_{}", i.id());
    let pp = |j: &FShape, i: Option<&FShape>| format!("P_{}_{}", j.id(), name(i));
    let y = |i: Option<&FShape>, j: &FShape| format!("y_{}_{}", name(i), j.id());
    let x = |i: Option<&FShape>, j: Option<&FShape>, k: &FShape| {
        format!("x_{}_{}_{}", name(i), name(j), k.id())
    };
    let big_m = los.len() as i64;
    let p1 = |t: &FShape| t.p(1) as i64;

    let mut m = LpModel {
        comment: vec![
            "covering model, three criticality levels".into(),
            format!(
                "{} Great-tasks, {} Hi-tasks, {} Lo-tasks, M = {big_m}",
                greats.len(),
                his.len(),
                los.len()
            ),
        ],
        ..Default::default()
    };
    m.objective.extend(greats.iter().map(|i| (1, len(i))));
    m.objective.extend(his.iter().map(|j| (1, pp(j, None))));
    m.objective.extend(los.iter().map(|k| (p1(k), x(None, None, k))));

    for i in &greats {
        m.rows.push(Row {
            name: format!("c6_{}", i.id()),
            terms: vec![(1, len(i))],
            sense: Sense::Ge,
            rhs: i.p(3) as i64,
        });
    }
    for &i in &gi {
        for j in &his {
            let mut terms = vec![(big_m, y(i, j))];
            terms.extend(los.iter().map(|k| (-1, x(i, Some(j), k))));
            m.rows.push(Row {
                name: format!("c7_{}_{}", name(i), j.id()),
                terms,
                sense: Sense::Ge,
                rhs: 0,
            });
        }
    }
    for &i in &gi {
        for j in &his {
            m.rows.push(Row {
                name: format!("c8_{}_{}", name(i), j.id()),
                terms: vec![(1, pp(j, i)), (-(j.p(2) as i64), y(i, j))],
                sense: Sense::Ge,
                rhs: 0,
            });
        }
    }
    for &i in &gi {
        for j in &his {
            let mut terms = vec![(1, pp(j, i)), (-p1(j), y(i, j))];
            terms.extend(los.iter().map(|k| (-p1(k), x(i, Some(j), k))));
            m.rows.push(Row {
                name: format!("c9_{}_{}", name(i), j.id()),
                terms,
                sense: Sense::Ge,
                rhs: 0,
            });
        }
    }
    for i in &greats {
        let mut terms = vec![(1, len(i))];
        terms.extend(his.iter().map(|j| (-1, pp(j, Some(i)))));
        m.rows.push(Row {
            name: format!("c10_{}", i.id()),
            terms,
            sense: Sense::Ge,
            rhs: i.p(2) as i64,
        });
    }
    for i in &greats {
        let mut terms = vec![(1, len(i))];
        terms.extend(his.iter().map(|j| (-1, pp(j, Some(i)))));
        terms.extend(los.iter().map(|k| (-p1(k), x(Some(i), None, k))));
        m.rows.push(Row {
            name: format!("c11_{}", i.id()),
            terms,
            sense: Sense::Ge,
            rhs: i.p(1) as i64,
        });
    }
    for k in &los {
        let terms = gi
            .iter()
            .flat_map(|&i| hj.iter().map(move |&j| (1, x(i, j, k))))
            .collect();
        m.rows.push(Row {
            name: format!("c12_{}", k.id()),
            terms,
            sense: Sense::Eq,
            rhs: 1,
        });
    }
    for j in &his {
        m.rows.push(Row {
            name: format!("c13_{}", j.id()),
            terms: gi.iter().map(|&i| (1, y(i, j))).collect(),
            sense: Sense::Eq,
            rhs: 1,
        });
    }

    m.generals.extend(greats.iter().map(|i| len(i)));
    for &i in &gi {
        m.generals.extend(his.iter().map(|j| pp(j, i)));
    }
    for &i in &gi {
        m.binaries.extend(his.iter().map(|j| y(i, j)));
    }
    for &i in &gi {
        for &j in &hj {
            m.binaries.extend(los.iter().map(|k| x(i, j, k)));
        }
    }
    Ok(m)
}
