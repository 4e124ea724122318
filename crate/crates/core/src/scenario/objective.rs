use super::{AllocationPlan, Normalization, Scenario, ShapeError, Topology};
use crate::epidemic::Trajectory;
use crate::equity::{plan_equity_report, scenario_priority_weights, EquityError};
use thiserror::Error;

/// Which scalarization to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    /// `λ0·infections + λ11·Σζ − λ12·η`
    Gini,
    /// `λ0·infections + λ21·Σζ + λ22·knapsack value`
    Knapsack,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValues {
    /// Total new infections over the horizon (normalized if requested).
    pub infection_flux_total: f64,
    /// Sum over periods of the regional per-capita floor ζ.
    pub equity_floor_sum: f64,
    /// Largest regional Gini coefficient η.
    pub gini_max: f64,
    /// Priority-weighted administration plus center and floor terms
    /// (normalized if requested).
    pub knapsack_value: f64,
    /// Weighted sum, to be maximized.
    pub scalarized: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Equity(#[from] EquityError),
}

pub fn evaluate_objectives(
    s: &Scenario,
    plan: &AllocationPlan,
    traj: &Trajectory,
    formulation: Formulation,
) -> Result<ObjectiveValues, ObjectiveError> {
    let topo = Topology::new(s);
    plan.check_shape(&topo, s.horizon)?;
    let w = s.weights;
    let delta = scenario_priority_weights(s)?.delta;
    let equity = plan_equity_report(s, plan)?;

    let mut infections = traj.total_infections();
    let mut knapsack = 0.0;
    for t in 0..s.horizon {
        for (k, d) in delta.iter().enumerate() {
            knapsack += d * plan.local_doses(k, t);
        }
        for j in 0..topo.n_regions {
            let centers: f64 =
                topo.region_centers[j].clone().filter(|&o| plan.x[o][t]).map(|o| s.supply.center_capacity[o][t]).sum();
            knapsack += (1.0 - s.access[j]) * centers + w.lambda_reg * plan.nu[j][t];
        }
    }
    if w.normalization == Normalization::Population {
        let seeded: f64 = s.epidemic.init_i.iter().chain(&s.epidemic.init_r).sum();
        let pop: f64 = s.epidemic.pop.region.iter().sum();
        infections /= seeded.max(f64::MIN_POSITIVE);
        knapsack /= pop.max(f64::MIN_POSITIVE);
    }
    let zeta_sum: f64 = plan.zeta.iter().sum();
    let scalarized = match formulation {
        Formulation::Gini => w.lambda0 * infections + w.lambda11 * zeta_sum - w.lambda12 * equity.eta,
        Formulation::Knapsack => w.lambda0 * infections + w.lambda21 * zeta_sum + w.lambda22 * knapsack,
    };
    Ok(ObjectiveValues {
        infection_flux_total: infections,
        equity_floor_sum: zeta_sum,
        gini_max: equity.eta,
        knapsack_value: knapsack,
        scalarized,
    })
}
