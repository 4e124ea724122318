use super::master::{solve_master_period, MasterContext, MasterDecision};
use super::routing::{solve_flow_subproblem, SplitRule};
use super::{DecompositionDiagnostics, OptimizerError, PeriodRecord};
use crate::epidemic::{infection_flux, threshold, Compartments, Simulator, Trajectory};
use crate::scenario::{AllocationPlan, Formulation, Normalization, Scenario, Topology};

/// Why the main loop of a decomposition run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Every period was planned within budget.
    Horizon,
    /// Cumulative cost reached 95% of the budget.
    BudgetBand,
    /// A period overshot the budget with and without the budget cap.
    DoubleInfeasible,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Horizon => "horizon",
            Termination::BudgetBand => "budget-band",
            Termination::DoubleInfeasible => "double-infeasible",
        }
    }
}

/// Total-dose cap applied to a master solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Cap {
    /// The budget-switch cap on supply.
    Switch,
    /// Only this much money may be spent, openings included.
    Money(f64),
}

#[derive(Clone)]
struct Snapshot {
    plan: AllocationPlan,
    residual: Vec<Vec<f64>>,
}

#[derive(Clone)]
pub(crate) struct Engine<'a> {
    s: &'a Scenario,
    topo: Topology,
    plan: AllocationPlan,
    sim: Simulator<'a>,
    residual: Vec<Vec<f64>>,
    rule: SplitRule,
    formulation: Formulation,
    /// `ĉ[j][t]`
    unit_costs: Vec<Vec<f64>>,
    /// `min_j` of the horizon-average `ĉ`.
    cheapest_dose: f64,
    cross_checks: usize,
    cost: f64,
}

/// [`super::unit_cost_estimate`], falling back to the plain average price
/// when no supplier had capacity in the previous period.
fn unit_cost_or_mean(s: &Scenario, topo: &Topology, j: usize, t: usize) -> f64 {
    super::unit_cost_estimate(s, topo, j, t).unwrap_or_else(|_| {
        let n = topo.n_suppliers.max(1) as f64;
        let price = s.costs.dose_cost.iter().map(|g| g[t]).sum::<f64>() / n;
        price + super::logistics_cost(s, topo, j)
    })
}

impl<'a> Engine<'a> {
    pub(crate) fn new(s: &'a Scenario, formulation: Formulation, rule: SplitRule) -> Self {
        let topo = Topology::new(s);
        let unit_costs: Vec<Vec<f64>> =
            (0..topo.n_regions).map(|j| (0..s.horizon).map(|t| unit_cost_or_mean(s, &topo, j, t)).collect()).collect();
        let cheapest_dose = unit_costs
            .iter()
            .map(|row| row.iter().sum::<f64>() / row.len().max(1) as f64)
            .fold(f64::INFINITY, f64::min);
        Engine {
            s,
            plan: AllocationPlan::zeros_for(&topo, s.horizon),
            sim: Simulator::new(s),
            residual: s.supply.supplier_capacity.clone(),
            topo,
            rule,
            formulation,
            unit_costs,
            cheapest_dose,
            cross_checks: 0,
            cost: 0.0,
        }
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot { plan: self.plan.clone(), residual: self.residual.clone() }
    }

    fn restore(&mut self, snap: Snapshot) {
        self.plan = snap.plan;
        self.residual = snap.residual;
    }

    /// Trigger values of every region at `t`, from the current state.
    fn triggers(&self, t: usize) -> Vec<(bool, bool)> {
        let s = self.s;
        let e = &s.epidemic;
        let state = self.sim.current();
        let traj = self.sim.trajectory();
        (0..self.topo.n_regions)
            .map(|j| {
                if t < s.supply.lead_center {
                    return (false, false);
                }
                let c = Compartments { s: state.s[j], v: state.v[j], i: state.i[j], r: state.r[j] };
                let flux = infection_flux(e, j, t, c);
                let tau = threshold(e, &traj.new_infections[j], j, t);
                let shortfall = s.local_capacity_total(&self.topo, j, t) < s.supply.demand[j][t];
                (flux > tau, shortfall)
            })
            .collect()
    }

    /// Center to open in each triggered region: the one already open, else
    /// the one with the most capacity once usable, lowest index on ties.
    fn openings(&self, t: usize, upsilon: &[(bool, bool)], money: Option<f64>) -> Vec<bool> {
        let s = self.s;
        let horizon = s.horizon;
        let usable = (t + s.supply.lead_center).min(horizon - 1);
        let mut x = vec![false; self.topo.n_centers];
        let mut budget = money.unwrap_or(f64::INFINITY);
        for (j, &(ui, ud)) in upsilon.iter().enumerate() {
            let centers = self.topo.region_centers[j].clone();
            if !(ui || ud) || centers.is_empty() || t < s.supply.lead_center {
                continue;
            }
            let kept = centers.clone().find(|&o| t > 0 && self.plan.x[o][t - 1]);
            let o = kept.unwrap_or_else(|| {
                centers
                    .clone()
                    .max_by(|&a, &b| {
                        let ka = s.supply.center_capacity[a][usable];
                        let kb = s.supply.center_capacity[b][usable];
                        ka.total_cmp(&kb).then(b.cmp(&a))
                    })
                    .expect("non-empty")
            });
            let charge = if kept.is_some() { 0.0 } else { s.costs.open_cost[o] };
            if charge <= budget {
                budget -= charge;
                x[o] = true;
            }
        }
        x
    }

    /// Worst-case cost of one dose administered in region `j` at `t`.
    fn unit_cost_bound(&self, j: usize, t: usize) -> f64 {
        let s = self.s;
        let sp = &s.supply;
        let keep = 1.0 - sp.wastage;
        let mut ships = Vec::new();
        if t >= sp.pharmacy_lead() {
            ships.push(t - sp.pharmacy_lead());
        }
        if t >= sp.lead_1 {
            ships.push(t - sp.lead_1);
        }
        let supply = ships
            .iter()
            .flat_map(|&p| (0..self.topo.n_suppliers).map(move |i| (i, p)))
            .map(|(i, p)| s.costs.dose_cost[i][p] + s.costs.transport_1[i][j])
            .fold(0.0, f64::max);
        let subs = self.topo.region_subregions[j].clone();
        let g2 = subs.clone().map(|k| s.costs.transport_2[k]).fold(0.0, f64::max);
        let g3 = subs
            .flat_map(|k| self.topo.subregion_pharmacies[k].clone())
            .map(|l| s.costs.transport_3[l])
            .fold(0.0, f64::max);
        s.costs.admin_cost[j][t] + (supply + g2 + g3) / keep
    }

    fn opening_charge(&self, t: usize, x: &[bool]) -> f64 {
        x.iter()
            .enumerate()
            .filter(|&(o, &open)| open && !(t > 0 && self.plan.x[o][t - 1]))
            .map(|(o, _)| self.s.costs.open_cost[o])
            .sum()
    }

    pub(crate) fn context(&self, t: usize, alpha: u8, cap: Cap) -> Result<MasterContext, OptimizerError> {
        let s = self.s;
        let e = &s.epidemic;
        let sp = &s.supply;
        let w = s.weights;
        let nj = self.topo.n_regions;
        let horizon = s.horizon;
        let keep = 1.0 - sp.wastage;
        let lag = e.dose_lag();
        let state = self.sim.current().clone();

        let upsilon = self.triggers(t);
        let money = match cap {
            Cap::Money(m) => Some(m),
            Cap::Switch => None,
        };
        let x = self.openings(t, &upsilon, money);

        // Project the untreated future to see where a dose given now lands.
        let mut proj = self.sim.clone();
        let target = (t + lag + 1).min(horizon);
        while proj.period() < target {
            proj.step(&self.plan)?;
        }
        let landed = proj.current();
        let scale = if w.normalization == Normalization::Population {
            let seeded: f64 = e.init_i.iter().chain(&e.init_r).sum();
            1.0 / seeded.max(f64::MIN_POSITIVE)
        } else {
            1.0
        };
        let mut marginal = vec![0.0; nj];
        let mut s_cap = vec![0.0; nj];
        for j in 0..nj {
            if t + lag < horizon {
                s_cap[j] = landed.s[j];
                let k = t + lag + 1;
                if k < horizon {
                    let averted = (e.beta[j][k] - e.beta_vax[j][k]) * landed.i[j];
                    marginal[j] = -w.lambda0 * averted * scale;
                }
            } else {
                let pending: f64 = (horizon.saturating_sub(lag)..t).map(|p| self.plan.psi[j][p]).sum();
                s_cap[j] = landed.s[j] - pending;
            }
            s_cap[j] = (s_cap[j] * (1.0 - 1e-12)).max(0.0);
        }
        let immune = if e.psi { e.gamma1 } else { 0.0 };
        let r_cap: Vec<f64> = (0..nj)
            .map(|j| ((1.0 - e.mu) * state.r[j] + immune * state.v[j] + e.gamma * state.i[j]) * (1.0 - 1e-12))
            .collect();
        let dose_limit: Vec<f64> = (0..nj)
            .map(|j| {
                let given: f64 = (0..t).map(|p| self.plan.regional_doses(j, p)).sum();
                sp.demand[j][t].min(e.pop.region[j] - given)
            })
            .collect();

        let lead_p = sp.pharmacy_lead();
        let pharmacy_cap: Vec<f64> =
            (0..nj).map(|j| if t >= lead_p { s.local_capacity_total(&self.topo, j, t) } else { 0.0 }).collect();
        let l0 = sp.lead_center;
        let center_cap: Vec<f64> = (0..nj)
            .map(|j| {
                if t < l0 || t < sp.lead_1 {
                    return 0.0;
                }
                let open = |o: usize| if l0 == 0 { x[o] } else { self.plan.x[o][t - l0] };
                keep * self.topo.region_centers[j]
                    .clone()
                    .filter(|&o| open(o))
                    .map(|o| sp.center_capacity[o][t])
                    .sum::<f64>()
            })
            .collect();
        let resid = |p: usize| self.residual.iter().map(|r| r[p].max(0.0)).sum::<f64>();
        let pharmacy_supply = if t >= lead_p { keep * resid(t - lead_p) } else { 0.0 };
        let center_supply = if t >= sp.lead_1 { keep * resid(t - sp.lead_1) } else { 0.0 };

        let remaining = s.costs.budget - self.cost;
        let (total_cap, cost_row) = match cap {
            Cap::Switch => {
                let factor = if alpha == 0 {
                    1.0
                } else if remaining > 0.0 {
                    self.cheapest_dose / remaining
                } else {
                    0.0
                };
                let pi: f64 = s.supply_total(t);
                let w1: f64 = if t > 0 { (0..nj).map(|j| self.plan.w1[j][t - 1]).sum() } else { 0.0 };
                (Some(factor * (pi + w1)), None)
            }
            Cap::Money(m) => {
                let bound: Vec<f64> = (0..nj).map(|j| self.unit_cost_bound(j, t)).collect();
                (None, Some((bound, m - self.opening_charge(t, &x))))
            }
        };

        Ok(MasterContext {
            period: t,
            alpha,
            population: e.pop.region.clone(),
            marginal,
            floor_weight: match self.formulation {
                Formulation::Gini => w.lambda11,
                Formulation::Knapsack => w.lambda21,
            },
            dose_limit,
            s_cap,
            r_cap,
            pharmacy_cap,
            center_cap,
            pharmacy_supply,
            center_supply,
            shared_supply: lead_p == sp.lead_1,
            total_cap,
            cost_row,
            upsilon,
            x,
        })
    }

    /// Plans period `t` into the working plan; returns the decision and its
    /// ledger cost.
    fn attempt(&mut self, t: usize, alpha: u8, cap: Cap) -> Result<(MasterDecision, f64), OptimizerError> {
        let ctx = self.context(t, alpha, cap)?;
        let decision = solve_master_period(&ctx)?;
        let out = solve_flow_subproblem(self.s, &self.topo, &mut self.plan, &decision, &mut self.residual, &self.rule)?;
        self.cross_checks += out.cross_checks;
        Ok((decision, out.cost_increment))
    }

    /// Plans period `t` with fixed regional totals instead of the master
    /// LP: susceptible doses first, pharmacies first, same openings and
    /// routing as the heuristic. `None` when the totals cannot be given.
    pub(crate) fn apply_totals(&mut self, t: usize, totals: &[f64]) -> Result<Option<f64>, OptimizerError> {
        let ctx = self.context(t, 0, Cap::Switch)?;
        let fits = |v: f64, cap: f64| v <= cap.max(0.0) * (1.0 + 1e-12) + 1e-9;
        let nj = totals.len();
        let mut psi = vec![0.0; nj];
        let mut xi = vec![0.0; nj];
        let mut pharmacy = vec![0.0; nj];
        let mut center = vec![0.0; nj];
        for (j, &a) in totals.iter().enumerate() {
            psi[j] = a.min(ctx.s_cap[j]);
            xi[j] = a - psi[j];
            pharmacy[j] = a.min(ctx.pharmacy_cap[j].max(0.0));
            center[j] = a - pharmacy[j];
            if !fits(a, ctx.dose_limit[j]) || !fits(xi[j], ctx.r_cap[j]) || !fits(center[j], ctx.center_cap[j]) {
                return Ok(None);
            }
        }
        let (sp, sc): (f64, f64) = (pharmacy.iter().sum(), center.iter().sum());
        let supplied = if ctx.shared_supply {
            fits(sp + sc, ctx.pharmacy_supply)
        } else {
            fits(sp, ctx.pharmacy_supply) && fits(sc, ctx.center_supply)
        };
        if !supplied {
            return Ok(None);
        }
        let zeta = (0..nj).map(|j| totals[j] / ctx.population[j]).fold(f64::INFINITY, f64::min);
        let decision = MasterDecision {
            period: t,
            psi,
            xi,
            pharmacy,
            center,
            x: ctx.x,
            upsilon: ctx.upsilon,
            zeta: if zeta.is_finite() { zeta } else { 0.0 },
            alpha: 0,
            objective: 0.0,
        };
        match solve_flow_subproblem(self.s, &self.topo, &mut self.plan, &decision, &mut self.residual, &self.rule) {
            Ok(out) => {
                self.cross_checks += out.cross_checks;
                self.cost += out.cost_increment;
                Ok(Some(out.cost_increment))
            }
            Err(OptimizerError::Routing { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub(crate) fn step(&mut self) -> Result<(), OptimizerError> {
        self.sim.step(&self.plan)?;
        Ok(())
    }

    pub(crate) fn cost(&self) -> f64 {
        self.cost
    }

    pub(crate) fn finish(self) -> (AllocationPlan, Trajectory) {
        (self.plan, self.sim.into_trajectory())
    }

    /// Runs the temporal loop to the horizon.
    pub(crate) fn run(mut self) -> Result<(AllocationPlan, Trajectory, DecompositionDiagnostics), OptimizerError> {
        let s = self.s;
        let budget = s.costs.budget;
        let mut periods = Vec::with_capacity(s.horizon);
        let mut backtracks = 0;
        let mut termination = Termination::Horizon;
        let mut stopped_at = None;
        let mut tail = false;
        for t in 0..s.horizon {
            let unit_costs: Vec<f64> = self.unit_costs.iter().map(|r| r[t]).collect();
            let mut accepted: Option<(u8, usize, f64)> = None;
            if !tail {
                let snap = self.snapshot();
                let (_, delta) = self.attempt(t, 0, Cap::Switch)?;
                if self.cost + delta <= budget {
                    accepted = Some((0, 1, delta));
                } else {
                    self.restore(snap.clone());
                    backtracks += 1;
                    let (_, delta) = self.attempt(t, 1, Cap::Switch)?;
                    if self.cost + delta <= budget {
                        accepted = Some((1, 2, delta));
                    } else {
                        self.restore(snap);
                        termination = Termination::DoubleInfeasible;
                        stopped_at = Some(t);
                        tail = true;
                    }
                }
            }
            let (alpha, attempts, delta) = match accepted {
                Some(a) => a,
                None => {
                    let (_, delta) = self.attempt(t, 0, Cap::Money(budget - self.cost))?;
                    (0, 1, delta)
                }
            };
            self.cost += delta;
            periods.push(PeriodRecord {
                period: t,
                alpha,
                attempts,
                cost_increment: delta,
                cumulative_cost: self.cost,
                unit_costs,
                tail: accepted.is_none(),
            });
            if !tail && self.cost >= 0.95 * budget {
                termination = Termination::BudgetBand;
                stopped_at = Some(t + 1);
                tail = true;
            }
            self.sim.step(&self.plan)?;
        }
        let diagnostics = DecompositionDiagnostics {
            alpha_history: periods.iter().map(|p| p.alpha).collect(),
            periods,
            backtracks,
            termination,
            stopped_at,
            final_cost: self.cost,
            budget,
            cross_checks: self.cross_checks,
            optimality_gap: None,
            infection_gap: None,
            optimality_residual: match self.formulation {
                Formulation::Gini if self.cheapest_dose > 0.0 => Some((budget - self.cost) / self.cheapest_dose),
                Formulation::Gini => None,
                Formulation::Knapsack => None,
            },
        };
        Ok((self.plan, self.sim.into_trajectory(), diagnostics))
    }
}
