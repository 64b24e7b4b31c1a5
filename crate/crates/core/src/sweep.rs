//! Sensitivity sweeps over initial strategy shares, update rules, topologies
//! and `r_UT`, reduced to steady-state wealth per cell.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::steady_state_wealth;
use crate::engine::{run_ensemble, Fractions, SimConfig, TopologySpec};
use crate::error::{Error, Result};
use crate::game::GameParams;
use crate::rules::{RuleKind, UpdateRule};
use crate::seed::key_seed;

/// All `(f_I, f_T, f_U)` whose components are non-negative multiples of `step`
/// summing to 1, ordered by `f_I` then `f_T`.
pub fn initial_condition_grid(step: f64) -> Result<Vec<Fractions>> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(Error::invalid(format!("grid step must lie in (0, 0.5], got {step}")));
    }
    let n = (1.0 / step).round();
    if (n * step - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("grid step {step} does not divide 1")));
    }
    let n = n as usize;
    let mut grid = Vec::with_capacity((n + 1) * (n + 2) / 2);
    for i in 0..=n {
        for j in 0..=n - i {
            let k = n - i - j;
            grid.push(Fractions([i as f64 / n as f64, j as f64 / n as f64, k as f64 / n as f64]));
        }
    }
    Ok(grid)
}

/// One sweep cell: inputs plus wealth and final-count statistics over its runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub initial: Fractions,
    pub rule: RuleKind,
    pub topology: TopologySpec,
    pub r_ut: f64,
    pub mean_w: f64,
    /// Sample standard deviation over runs; 0 for a single run.
    pub std_w: f64,
    /// Mean final `[k_I, k_T, k_U]`.
    pub mean_k: [f64; 3],
}

impl SweepRow {
    /// Identifies the cell; also keys its seed.
    pub fn cell_key(&self) -> String {
        cell_key(&self.initial, self.rule, &self.topology, self.r_ut)
    }
}

fn cell_key(f: &Fractions, rule: RuleKind, topology: &TopologySpec, r_ut: f64) -> String {
    format!(
        "f_I={:?},f_T={:?},f_U={:?},rule={},topology={},r_UT={:?}",
        f.0[0],
        f.0[1],
        f.0[2],
        rule.token(),
        topology.token(),
        r_ut
    )
}

/// Canonical row order: `(f_I, f_T, f_U, rule, topology, r_UT)`.
fn row_order(a: &SweepRow, b: &SweepRow) -> Ordering {
    a.initial.0[0]
        .total_cmp(&b.initial.0[0])
        .then(a.initial.0[1].total_cmp(&b.initial.0[1]))
        .then(a.initial.0[2].total_cmp(&b.initial.0[2]))
        .then(a.rule.token().cmp(b.rule.token()))
        .then(a.topology.token().cmp(b.topology.token()))
        .then(a.r_ut.total_cmp(&b.r_ut))
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs `base.runs` realizations for every cell of the Cartesian product and
/// returns one row per cell in canonical order. Each cell is seeded from the
/// base master seed and its key, so rows do not depend on scheduling.
pub fn heatmap_sweep(
    base: &SimConfig,
    grid: &[Fractions],
    rules: &[RuleKind],
    topologies: &[TopologySpec],
    r_ut_values: &[f64],
    window: f64,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() || rules.is_empty() || topologies.is_empty() || r_ut_values.is_empty() {
        return Err(Error::invalid("sweep needs non-empty grid, rules, topologies and r_UT values"));
    }
    let mut cells = Vec::with_capacity(grid.len() * rules.len() * topologies.len() * r_ut_values.len());
    for f in grid {
        for &rule in rules {
            for topology in topologies {
                for &r_ut in r_ut_values {
                    cells.push((*f, rule, *topology, r_ut));
                }
            }
        }
    }
    let mut rows = cells
        .into_par_iter()
        .map(|(initial, rule, topology, r_ut)| {
            let key = cell_key(&initial, rule, &topology, r_ut);
            run_cell(base, initial, rule, topology, r_ut, window, &key).map_err(|e| Error::Cell {
                cell: key,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(row_order);
    Ok(rows)
}

fn run_cell(
    base: &SimConfig,
    initial: Fractions,
    rule: RuleKind,
    topology: TopologySpec,
    r_ut: f64,
    window: f64,
    key: &str,
) -> Result<SweepRow> {
    let mut cfg = base.clone();
    cfg.initial = initial;
    cfg.rule = UpdateRule::new(rule, base.rule.q)?;
    cfg.topology = topology;
    cfg.params = GameParams::new(base.params.r_t(), r_ut)?;
    cfg.master_seed = key_seed(base.master_seed, key);
    cfg.snapshot_every = None;
    cfg.record_nodes.clear();
    cfg.probe_distances.clear();
    let records = run_ensemble(&cfg)?;
    let wealth = records
        .iter()
        .map(|r| steady_state_wealth(r, window))
        .collect::<Result<Vec<_>>>()?;
    let (mean_w, std_w) = mean_std(&wealth);
    let mut mean_k = [0.0; 3];
    for r in &records {
        let last = r.counts.last().expect("series include t=0");
        for (acc, &k) in mean_k.iter_mut().zip(last) {
            *acc += k as f64;
        }
    }
    mean_k.iter_mut().for_each(|k| *k /= records.len() as f64);
    Ok(SweepRow {
        initial,
        rule,
        topology,
        r_ut,
        mean_w,
        std_w,
        mean_k,
    })
}
