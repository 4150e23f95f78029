//! Benchmark suites: generated instances, several solvers, one record per
//! (instance, solver) and a per-(n, solver) summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use mcmu::{generate, GeneratorConfig, SolveOptions};
use rayon::prelude::*;
use serde::Serialize;

use crate::io::BenchRecord;
use crate::solvers::{self, SolverKind};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Task counts; each gets `count` instances.
    pub sizes: Vec<usize>,
    pub count: usize,
    /// `n` and `seed` are overwritten per instance.
    pub generator: GeneratorConfig,
    pub solvers: Vec<SolverKind>,
    pub time_limit: Option<Duration>,
    pub seed: u64,
    /// Worker threads; 1 runs everything on the calling thread.
    pub threads: usize,
}

/// Instance name and generator seed of the `k`-th instance of size `n`.
pub fn instance_key(base_seed: u64, n: usize, k: usize) -> (String, u64) {
    let seed = base_seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((n as u64) << 20)
        .wrapping_add(k as u64);
    (format!("n{n:04}-{k:03}"), seed)
}

fn run_one(
    name: &str,
    cfg: &GeneratorConfig,
    solver: SolverKind,
    opts: &SolveOptions,
) -> BenchRecord {
    let mut rec = BenchRecord {
        instance: name.to_string(),
        n: cfg.n,
        solver: solver.name().to_string(),
        elapsed_s: 0.0,
        makespan: None,
        optimal: false,
        gap_pct: None,
        certificate: None,
        note: None,
    };
    let start = Instant::now();
    let result = panic::catch_unwind(AssertUnwindSafe(|| {
        let inst = generate(cfg)?;
        solvers::run(solver, &inst, opts)
    }));
    rec.elapsed_s = start.elapsed().as_secs_f64();
    match result {
        Ok(Ok(out)) => {
            rec.makespan = Some(out.makespan);
            rec.optimal = out.optimal;
            rec.gap_pct = out.gap_pct();
            rec.certificate = out.certificate.map(|c| c.as_str().to_string());
            if out.timed_out && !out.optimal {
                rec.note = Some("time limit".into());
            }
        }
        Ok(Err(e)) => rec.note = Some(format!("error: {e}")),
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            rec.note = Some(format!("crash: {msg}"));
        }
    }
    rec
}

/// Runs the suite. Records come back ordered by instance name, then by the
/// position of the solver in `config.solvers`, whatever the thread count.
pub fn run_bench(config: &BenchConfig) -> Result<Vec<BenchRecord>, String> {
    let opts = SolveOptions {
        time_limit: config.time_limit,
        seed: config.seed,
    };
    let mut jobs = Vec::new();
    for &n in &config.sizes {
        for k in 0..config.count {
            let (name, seed) = instance_key(config.seed, n, k);
            let cfg = GeneratorConfig {
                n,
                seed,
                ..config.generator.clone()
            };
            cfg.validate().map_err(|e| e.to_string())?;
            for (s, &solver) in config.solvers.iter().enumerate() {
                jobs.push((name.clone(), s, cfg.clone(), solver));
            }
        }
    }
    let exec = |(name, _, cfg, solver): &(String, usize, GeneratorConfig, SolverKind)| {
        run_one(name, cfg, *solver, &opts)
    };
    let mut records: Vec<(String, usize, BenchRecord)> = if config.threads <= 1 {
        jobs.iter().map(|j| (j.0.clone(), j.1, exec(j))).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| e.to_string())?;
        pool.install(|| jobs.par_iter().map(|j| (j.0.clone(), j.1, exec(j))).collect())
    };
    records.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));
    Ok(records.into_iter().map(|r| r.2).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub n: usize,
    pub solver: String,
    pub instances: usize,
    pub avg_t: f64,
    /// Sample standard deviation of the elapsed times.
    pub std_t: f64,
    pub max_t: f64,
    /// Share of records without a proven optimum.
    pub unsolved_pct: f64,
    /// Mean gap over the records that have one.
    pub avg_gap_pct: Option<f64>,
}

/// Aggregates records per (n, solver), sorted by n then solver name.
pub fn summarize(records: &[BenchRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(usize, &str), Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.n, r.solver.as_str())).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((n, solver), rs)| {
            let k = rs.len() as f64;
            let avg_t = rs.iter().map(|r| r.elapsed_s).sum::<f64>() / k;
            let var = if rs.len() > 1 {
                rs.iter().map(|r| (r.elapsed_s - avg_t).powi(2)).sum::<f64>() / (k - 1.0)
            } else {
                0.0
            };
            let gaps: Vec<f64> = rs.iter().filter_map(|r| r.gap_pct).collect();
            SummaryRow {
                n,
                solver: solver.to_string(),
                instances: rs.len(),
                avg_t,
                std_t: var.sqrt(),
                max_t: rs.iter().map(|r| r.elapsed_s).fold(0.0, f64::max),
                unsolved_pct: 100.0 * rs.iter().filter(|r| !r.optimal).count() as f64 / k,
                avg_gap_pct: (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64),
            }
        })
        .collect()
}

pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:>6} {:>9} {:>5} {:>20} {:>10} {:>8} {:>9}\n",
        "n", "solver", "inst", "avg t [s]", "max t [s]", "unsl [%]", "gap [%]"
    );
    for r in rows {
        let gap = r.avg_gap_pct.map_or("-".to_string(), |g| format!("{g:.2}"));
        let _ = writeln!(
            out,
            "{:>6} {:>9} {:>5} {:>20} {:>10.3} {:>8.1} {:>9}",
            r.n,
            r.solver,
            r.instances,
            format!("{:.3} ± {:.3}", r.avg_t, r.std_t),
            r.max_t,
            r.unsolved_pct,
            gap
        );
    }
    out
}

pub fn write_summary_csv<W: std::io::Write>(out: W, rows: &[SummaryRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "n",
            "solver",
            "instances",
            "avg_t",
            "std_t",
            "max_t",
            "unsolved_pct",
            "avg_gap_pct",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
