//! Exhaustive reference optimizer for tiny instances.
//!
//! Regional dose totals are enumerated on a grid for every region and
//! period; everything else (which pool the doses come from, openings,
//! sub-regional split, routing) follows the same rules as the
//! decomposition heuristics, so the grid optimum is directly comparable.

use crate::epidemic::Trajectory;
use crate::optimizer::{engine_for, optimality_gap, Engine, OptimizerError};
use crate::scenario::{
    check_full_feasibility, evaluate_objectives, AllocationPlan, Formulation, ObjectiveError, ObjectiveValues,
    Scenario, Topology,
};
use thiserror::Error;

pub const MAX_REGIONS: usize = 3;
pub const MAX_SUBREGIONS: usize = 3;
pub const MAX_PERIODS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Grid step as a fraction of the period's total supply.
    pub steps_per_supply: usize,
    /// Largest number of leaf plans allowed.
    pub guard: u64,
    /// Feasibility tolerance applied to every leaf.
    pub tolerance: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { steps_per_supply: 10, guard: 10_000_000, tolerance: 1e-6 }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("oracle guard: instance too large ({regions} regions, {subregions} sub-regions in one region, {periods} periods; limits 3, 3, 4)")]
    TooLarge { regions: usize, subregions: usize, periods: usize },
    #[error("oracle guard: {projected} grid plans exceed the limit of {guard}")]
    Guard { projected: f64, guard: u64 },
    #[error("grid step must be positive")]
    Step,
    #[error("no feasible plan on the grid")]
    NoFeasiblePlan,
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub plan: AllocationPlan,
    pub trajectory: Trajectory,
    pub objective: ObjectiveValues,
    /// Best regional totals `[t][j]`.
    pub totals: Vec<Vec<f64>>,
    /// Grid points `[t][j][..]`.
    pub grid: Vec<Vec<Vec<f64>>>,
    /// Leaf plans accounted for, pruned subtrees included.
    pub enumerated: u64,
    /// Leaf plans simulated and checked.
    pub evaluated: u64,
    /// Product of the grid sizes.
    pub predicted: u64,
    /// Largest objective change from moving one grid cell by one step,
    /// summed over cells.
    pub slack: f64,
}

/// Largest regional total worth enumerating in `(j, t)`, from data alone.
fn upper_bound(s: &Scenario, topo: &Topology, j: usize, t: usize) -> f64 {
    let sp = &s.supply;
    let keep = 1.0 - sp.wastage;
    let lead_p = sp.pharmacy_lead();
    let pharmacy = if t >= lead_p { s.local_capacity_total(topo, j, t) } else { 0.0 };
    let center = if t >= sp.lead_center && t >= sp.lead_1 {
        keep * topo.region_centers[j].clone().map(|o| sp.center_capacity[o][t]).fold(0.0, f64::max)
    } else {
        0.0
    };
    let supply = [(t >= lead_p).then(|| t - lead_p), (t >= sp.lead_1).then(|| t - sp.lead_1)]
        .into_iter()
        .flatten()
        .map(|p| keep * s.supply_total(p))
        .fold(0.0, f64::max);
    sp.demand[j][t].min(pharmacy + center).min(supply).min(s.epidemic.pop.region[j]).max(0.0)
}

/// Grid points per period and region: multiples of the step below the
/// bound, then the bound itself.
pub fn grid_points(s: &Scenario, spec: &GridSpec) -> Result<Vec<Vec<Vec<f64>>>, OracleError> {
    if spec.steps_per_supply == 0 {
        return Err(OracleError::Step);
    }
    let topo = Topology::new(s);
    Ok((0..s.horizon)
        .map(|t| {
            let step = s.supply_total(t) / spec.steps_per_supply as f64;
            (0..topo.n_regions)
                .map(|j| {
                    let ub = upper_bound(s, &topo, j, t);
                    let mut pts = vec![0.0];
                    if step > 0.0 && ub > 0.0 {
                        let mut k = 1.0;
                        while k * step < ub * (1.0 - 1e-12) {
                            pts.push(k * step);
                            k += 1.0;
                        }
                        pts.push(ub);
                    }
                    pts
                })
                .collect()
        })
        .collect())
}

fn period_combos(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for pts in points {
        out = out.into_iter().flat_map(|c| pts.iter().map(move |&p| [c.clone(), vec![p]].concat())).collect();
    }
    out
}

struct Search<'a> {
    s: &'a Scenario,
    formulation: Formulation,
    tol: f64,
    combos: Vec<Vec<Vec<f64>>>,
    /// Leaves below a node at depth `t`.
    below: Vec<u64>,
    enumerated: u64,
    evaluated: u64,
    best: Option<(f64, Vec<Vec<f64>>)>,
    path: Vec<Vec<f64>>,
}

impl<'a> Search<'a> {
    fn visit(&mut self, t: usize, engine: &Engine<'a>) -> Result<(), OracleError> {
        let s = self.s;
        if t == s.horizon {
            self.enumerated += 1;
            self.evaluated += 1;
            let (plan, traj) = engine.clone().finish();
            if !check_full_feasibility(s, &plan, &traj, self.tol).map_err(OptimizerError::from)?.feasible {
                return Ok(());
            }
            let value = evaluate_objectives(s, &plan, &traj, self.formulation)?.scalarized;
            if self.best.as_ref().is_none_or(|(b, _)| value > *b) {
                self.best = Some((value, self.path.clone()));
            }
            return Ok(());
        }
        for c in 0..self.combos[t].len() {
            let totals = self.combos[t][c].clone();
            let mut next = engine.clone();
            let ok = match next.apply_totals(t, &totals)? {
                Some(_) if next.cost() <= s.costs.budget * (1.0 + self.tol) => next.step().is_ok(),
                _ => false,
            };
            if !ok {
                self.enumerated += self.below[t + 1];
                continue;
            }
            self.path.push(totals);
            self.visit(t + 1, &next)?;
            self.path.pop();
        }
        Ok(())
    }
}

/// Replays fixed totals; `None` if some period cannot take them.
fn replay(
    s: &Scenario,
    formulation: Formulation,
    totals: &[Vec<f64>],
) -> Result<Option<(AllocationPlan, Trajectory)>, OracleError> {
    let mut engine = engine_for(s, formulation)?;
    for (t, row) in totals.iter().enumerate() {
        if engine.apply_totals(t, row)?.is_none() || engine.step().is_err() {
            return Ok(None);
        }
    }
    Ok(Some(engine.finish()))
}

/// Exhaustive grid optimum of the scalarized objective (maximized) over
/// plans that pass the full feasibility check.
pub fn enumerate_optimum(s: &Scenario, spec: &GridSpec, formulation: Formulation) -> Result<OracleResult, OracleError> {
    let topo = Topology::new(s);
    let widest = topo.region_subregions.iter().map(|r| r.len()).max().unwrap_or(0);
    if topo.n_regions > MAX_REGIONS || widest > MAX_SUBREGIONS || s.horizon > MAX_PERIODS {
        return Err(OracleError::TooLarge { regions: topo.n_regions, subregions: widest, periods: s.horizon });
    }
    let grid = grid_points(s, spec)?;
    let projected: f64 = grid.iter().flatten().map(|p| p.len() as f64).product();
    if projected > spec.guard as f64 {
        return Err(OracleError::Guard { projected, guard: spec.guard });
    }
    let combos: Vec<Vec<Vec<f64>>> = grid.iter().map(|g| period_combos(g)).collect();
    let mut below = vec![1u64; s.horizon + 1];
    for t in (0..s.horizon).rev() {
        below[t] = below[t + 1] * combos[t].len() as u64;
    }
    let mut search = Search {
        s,
        formulation,
        tol: spec.tolerance,
        combos,
        below: below.clone(),
        enumerated: 0,
        evaluated: 0,
        best: None,
        path: Vec::new(),
    };
    search.visit(0, &engine_for(s, formulation)?)?;
    let (_, totals) = search.best.clone().ok_or(OracleError::NoFeasiblePlan)?;
    let (plan, trajectory) = replay(s, formulation, &totals)?.ok_or(OracleError::NoFeasiblePlan)?;
    let objective = evaluate_objectives(s, &plan, &trajectory, formulation)?;

    let mut slack = 0.0;
    for t in 0..s.horizon {
        let step = s.supply_total(t) / spec.steps_per_supply as f64;
        for j in 0..topo.n_regions {
            let ub = *grid[t][j].last().unwrap();
            let mut worst = 0.0_f64;
            for dir in [-1.0, 1.0] {
                let v = (totals[t][j] + dir * step).clamp(0.0, ub);
                if v == totals[t][j] {
                    continue;
                }
                let mut moved = totals.clone();
                moved[t][j] = v;
                if let Some((p, tr)) = replay(s, formulation, &moved)? {
                    let value = evaluate_objectives(s, &p, &tr, formulation)?.scalarized;
                    worst = worst.max((value - objective.scalarized).abs());
                }
            }
            slack += worst;
        }
    }
    Ok(OracleResult {
        plan,
        trajectory,
        objective,
        totals,
        grid,
        enumerated: search.enumerated,
        evaluated: search.evaluated,
        predicted: below[0],
        slack,
    })
}

/// Gap in percent between a plan's scalarized objective and the oracle's.
pub fn gap_against_oracle(
    s: &Scenario,
    plan: &AllocationPlan,
    spec: &GridSpec,
    formulation: Formulation,
) -> Result<f64, OracleError> {
    let traj = crate::epidemic::simulate(s, plan).map_err(OptimizerError::from)?;
    let value = evaluate_objectives(s, plan, &traj, formulation)?.scalarized;
    let best = enumerate_optimum(s, spec, formulation)?;
    Ok(optimality_gap(value, best.objective.scalarized)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combos_are_lexicographic() {
        let c = period_combos(&[vec![0.0, 1.0], vec![0.0, 2.0]]);
        assert_eq!(c, vec![vec![0.0, 0.0], vec![0.0, 2.0], vec![1.0, 0.0], vec![1.0, 2.0]]);
    }
}
