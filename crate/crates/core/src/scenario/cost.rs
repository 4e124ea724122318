use super::{AllocationPlan, Scenario, ShapeError, Topology};

/// Cost components of one period.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PeriodCost {
    pub admin: f64,
    pub dose: f64,
    pub transport_1: f64,
    pub transport_2: f64,
    pub transport_3: f64,
    pub opening: f64,
    pub holding_1: f64,
    pub holding_2: f64,
    pub holding_3: f64,
}

impl PeriodCost {
    pub fn total(&self) -> f64 {
        self.admin
            + self.dose
            + self.transport_1
            + self.transport_2
            + self.transport_3
            + self.opening
            + self.holding_1
            + self.holding_2
            + self.holding_3
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostLedger {
    pub periods: Vec<PeriodCost>,
    pub total: f64,
    pub budget: f64,
    /// `budget - total`; negative when over budget.
    pub slack: f64,
}

impl CostLedger {
    /// Cost accumulated strictly before period `t`.
    pub fn cumulative_before(&self, t: usize) -> f64 {
        self.periods[..t.min(self.periods.len())].iter().map(PeriodCost::total).sum()
    }
}

/// Itemized plan cost. Opening a center is charged on every closed-to-open
/// transition, with every center closed before the first period.
pub fn compute_cost(s: &Scenario, plan: &AllocationPlan) -> Result<CostLedger, ShapeError> {
    let topo = Topology::new(s);
    plan.check_shape(&topo, s.horizon)?;
    let c = &s.costs;
    let mut periods = Vec::with_capacity(s.horizon);
    for t in 0..s.horizon {
        let mut p = PeriodCost::default();
        for j in 0..topo.n_regions {
            p.admin += c.admin_cost[j][t] * plan.regional_doses(j, t);
            p.holding_1 += c.holding_1[j] * plan.w1[j][t];
        }
        for i in 0..topo.n_suppliers {
            for j in 0..topo.n_regions {
                let q = plan.g1[i][j][t];
                p.dose += c.dose_cost[i][t] * q;
                p.transport_1 += c.transport_1[i][j] * q;
            }
        }
        for k in 0..topo.n_subregions {
            p.transport_2 += c.transport_2[k] * plan.g2[k][t];
            p.holding_2 += c.holding_2[k] * plan.w2[k][t];
        }
        for l in 0..topo.n_pharmacies {
            p.transport_3 += c.transport_3[l] * plan.g3[l][t];
            p.holding_3 += c.holding_3[l] * plan.w3[l][t];
        }
        for o in 0..topo.n_centers {
            let prev = t > 0 && plan.x[o][t - 1];
            if plan.x[o][t] && !prev {
                p.opening += c.open_cost[o];
            }
        }
        periods.push(p);
    }
    let total = periods.iter().map(PeriodCost::total).sum();
    Ok(CostLedger { periods, total, budget: c.budget, slack: c.budget - total })
}
