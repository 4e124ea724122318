use super::{Echelon, MasterDecision, OptimizerError};
use crate::lp::{solve_greedy_knapsack, solve_lp, LinearProgram, LpError, LpStatus, RowSense, Sense};
use crate::scenario::{compute_cost, AllocationPlan, Scenario, Topology};

/// How a region's pharmacy doses are divided among its sub-regions.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitRule {
    /// Priority-weighted knapsack with a per-capita floor worth `lambda`.
    Priority { delta: Vec<f64>, lambda: f64 },
    /// Minimize pairwise gaps in cumulative per-capita doses.
    Gini,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrioritySplit {
    pub x: Vec<f64>,
    pub nu: f64,
    pub objective: f64,
}

/// Largest sub-region count for which the Gini split is solved exactly.
pub const GINI_LP_LIMIT: usize = 24;

fn tol(scale: f64) -> f64 {
    1e-9 * scale.abs().max(1.0)
}

/// Maximizes `δ·x + λ·ν` subject to `Σx = total` and `ν·N_k ≤ x_k ≤ cap_k`.
/// The optimal value is concave and piecewise linear in `ν`, so it is
/// enough to evaluate the greedy fill at `ν = 0`, at the largest feasible
/// `ν` and where the marginal sub-region changes.
pub fn priority_split(
    delta: &[f64],
    pop: &[f64],
    caps: &[f64],
    total: f64,
    lambda: f64,
) -> Result<PrioritySplit, LpError> {
    let n = delta.len();
    if pop.len() != n || caps.len() != n || n == 0 {
        return Err(LpError::Malformed("split vectors differ in length".into()));
    }
    let cap_sum: f64 = caps.iter().sum();
    if total > cap_sum + tol(cap_sum) || total < -tol(total) {
        return Err(LpError::KnapsackInfeasible { total, min: 0.0, max: cap_sum });
    }
    let total = total.clamp(0.0, cap_sum);
    let pop_sum: f64 = pop.iter().sum();
    let nu_max = caps.iter().zip(pop).map(|(c, p)| c / p).fold(total / pop_sum, f64::min).max(0.0);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| delta[b].total_cmp(&delta[a]).then(a.cmp(&b)));
    let mut candidates = vec![0.0, nu_max];
    let (mut cap_prefix, mut pop_prefix) = (0.0, 0.0);
    for &k in &order[..n - 1] {
        cap_prefix += caps[k];
        pop_prefix += pop[k];
        let nu = (total - cap_prefix) / (pop_sum - pop_prefix);
        if nu > 0.0 && nu < nu_max {
            candidates.push(nu);
        }
    }

    let evaluate = |nu: f64| -> Result<(Vec<f64>, f64), LpError> {
        let lower: Vec<f64> = pop.iter().zip(caps).map(|(p, c)| (nu * p).min(*c)).collect();
        let x = solve_greedy_knapsack(delta, &lower, caps, total)?;
        let value = delta.iter().zip(&x).map(|(d, v)| d * v).sum::<f64>() + lambda * nu;
        Ok((x, value))
    };
    let mut best: Option<PrioritySplit> = None;
    for nu in candidates {
        let (x, objective) = evaluate(nu)?;
        let better = match &best {
            None => true,
            Some(b) => {
                objective > b.objective + tol(b.objective) * 1e-3
                    || ((objective - b.objective).abs() <= tol(b.objective) * 1e-3 && nu > b.nu)
            }
        };
        if better {
            best = Some(PrioritySplit { x, nu, objective });
        }
    }
    Ok(best.expect("at least two candidates"))
}

/// The priority split as a linear program over `(x, ν)`.
pub fn priority_split_lp(delta: &[f64], pop: &[f64], caps: &[f64], total: f64, lambda: f64) -> LinearProgram {
    let n = delta.len();
    let nbar = pop.iter().sum::<f64>() / n.max(1) as f64;
    let mut obj = delta.to_vec();
    obj.push(lambda / nbar);
    let mut lp = LinearProgram::new(Sense::Maximize, obj);
    for (k, &c) in caps.iter().enumerate() {
        lp.set_bounds(k, 0.0, c.max(0.0));
        lp.add_row(vec![(n, pop[k] / nbar), (k, -1.0)], RowSense::Le, 0.0);
    }
    lp.add_row((0..n).map(|k| (k, 1.0)).collect(), RowSense::Eq, total);
    lp
}

/// Solves the split both ways and fails if the optimal values disagree.
pub fn checked_priority_split(
    delta: &[f64],
    pop: &[f64],
    caps: &[f64],
    total: f64,
    lambda: f64,
) -> Result<PrioritySplit, LpError> {
    let split = priority_split(delta, pop, caps, total, lambda)?;
    let cap_sum: f64 = caps.iter().sum();
    let sol = solve_lp(&priority_split_lp(delta, pop, caps, total.clamp(0.0, cap_sum), lambda))?;
    if sol.status != LpStatus::Optimal {
        return Err(LpError::CrossCheckStatus(sol.status));
    }
    let scale = split.objective.abs().max(sol.objective.abs()).max(1.0);
    if (split.objective - sol.objective).abs() > 1e-7 * scale {
        return Err(LpError::CrossCheckMismatch { greedy: split.objective, simplex: sol.objective });
    }
    Ok(split)
}

/// Divides `total` among sub-regions so that pairwise gaps in per-capita
/// doses, counting the `prior` per-capita doses already given, are as
/// small as possible. Exact LP up to [`GINI_LP_LIMIT`] sub-regions, level
/// filling beyond.
pub fn gini_split(prior: &[f64], pop: &[f64], caps: &[f64], total: f64) -> Result<Vec<f64>, OptimizerError> {
    let n = prior.len();
    let cap_sum: f64 = caps.iter().sum();
    if total > cap_sum + tol(cap_sum) {
        return Err(OptimizerError::Routing { echelon: Echelon::SubRegional, period: 0, deficit: total - cap_sum });
    }
    let total = total.clamp(0.0, cap_sum);
    if total == 0.0 {
        return Ok(vec![0.0; n]);
    }
    if n == 1 {
        return Ok(vec![total]);
    }
    let mut x =
        if n <= GINI_LP_LIMIT { gini_lp(prior, pop, caps, total)? } else { level_fill(prior, pop, caps, total) };
    rebalance(&mut x, caps, total);
    Ok(x)
}

fn gini_lp(prior: &[f64], pop: &[f64], caps: &[f64], total: f64) -> Result<Vec<f64>, OptimizerError> {
    let n = prior.len();
    let pop_sum: f64 = pop.iter().sum();
    // Per-capita variables in units of the average per-capita dose.
    let unit = total / pop_sum;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|m| (m + 1..n).map(move |k| (m, k))).collect();
    let mut obj = vec![0.0; n];
    obj.extend(std::iter::repeat_n(1.0, pairs.len()));
    let mut lp = LinearProgram::new(Sense::Minimize, obj);
    for k in 0..n {
        lp.set_bounds(k, 0.0, caps[k] / pop[k] / unit);
    }
    lp.add_row((0..n).map(|k| (k, pop[k] / pop_sum)).collect(), RowSense::Eq, 1.0);
    for (v, &(m, k)) in pairs.iter().enumerate() {
        let vi = n + v;
        let gap = (prior[m] - prior[k]) / unit;
        lp.add_row(vec![(vi, 1.0), (m, -1.0), (k, 1.0)], RowSense::Ge, gap);
        lp.add_row(vec![(vi, 1.0), (m, 1.0), (k, -1.0)], RowSense::Ge, -gap);
    }
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(OptimizerError::Lp(LpError::CrossCheckStatus(sol.status)));
    }
    Ok((0..n).map(|k| (sol.x[k] * unit * pop[k]).clamp(0.0, caps[k])).collect())
}

/// Raises the lowest per-capita levels first.
fn level_fill(prior: &[f64], pop: &[f64], caps: &[f64], total: f64) -> Vec<f64> {
    let alloc = |level: f64| -> Vec<f64> {
        (0..prior.len()).map(|k| ((level - prior[k]) * pop[k]).clamp(0.0, caps[k])).collect()
    };
    let mut lo = prior.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = (0..prior.len()).map(|k| prior[k] + caps[k] / pop[k]).fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if alloc(mid).iter().sum::<f64>() < total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    alloc(hi)
}

/// Makes `Σx` exactly `total` after rounding, staying within the caps.
fn rebalance(x: &mut [f64], caps: &[f64], total: f64) {
    for _ in 0..3 {
        let diff = total - x.iter().sum::<f64>();
        if diff == 0.0 {
            return;
        }
        for k in 0..x.len() {
            let room = if diff > 0.0 { caps[k] - x[k] } else { x[k] };
            if room > 0.0 {
                let step = if diff > 0.0 { diff.min(room) } else { diff.max(-room) };
                x[k] += step;
                break;
            }
        }
    }
}

/// Result of routing one period.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowOutcome {
    /// Ledger cost added by the period, openings included.
    pub cost_increment: f64,
    pub cross_checks: usize,
}

/// Writes the master decision for period `t` into the plan and routes its
/// doses: each region's pharmacy total is split over sub-regions, sent to
/// each sub-region's cheapest pharmacy and drawn from suppliers at least
/// cost, just in time for administration. `residual` holds the unused
/// supplier capacity `[supplier][period]` and is updated in place.
pub fn solve_flow_subproblem(
    s: &Scenario,
    topo: &Topology,
    plan: &mut AllocationPlan,
    master: &MasterDecision,
    residual: &mut [Vec<f64>],
    rule: &SplitRule,
) -> Result<FlowOutcome, OptimizerError> {
    let t = master.period;
    let sp = &s.supply;
    let keep = 1.0 - sp.wastage;
    let pop = &s.epidemic.pop;
    let before = compute_cost(s, plan)?.total;
    let mut cross_checks = 0;

    for (o, &open) in master.x.iter().enumerate() {
        plan.x[o][t] = open;
    }
    plan.zeta[t] = master.zeta;
    let mut hub_pharmacy = vec![0.0; topo.n_regions];
    let mut hub_center = vec![0.0; topo.n_regions];
    for j in 0..topo.n_regions {
        plan.upsilon_infection[j][t] = master.upsilon[j].0;
        plan.upsilon_demand[j][t] = master.upsilon[j].1;
        plan.psi[j][t] = master.psi[j];
        plan.xi[j][t] = master.xi[j];
        let total = master.total(j);
        let share = if total > 0.0 { master.psi[j] / total } else { 0.0 };
        let subs = topo.region_subregions[j].clone();
        let caps: Vec<f64> = subs.clone().map(|k| sp.local_capacity[k][t]).collect();
        let sub_pop: Vec<f64> = subs.clone().map(|k| pop.subregion[k]).collect();
        let pharmacy_total = master.pharmacy[j];
        let x = if pharmacy_total <= 0.0 || subs.is_empty() {
            vec![0.0; subs.len()]
        } else {
            match rule {
                SplitRule::Priority { delta, lambda } => {
                    cross_checks += 1;
                    checked_priority_split(&delta[subs.clone()], &sub_pop, &caps, pharmacy_total, *lambda)
                        .map_err(|e| match e {
                            LpError::KnapsackInfeasible { total, max, .. } => OptimizerError::Routing {
                                echelon: Echelon::SubRegional,
                                period: t,
                                deficit: total - max,
                            },
                            other => other.into(),
                        })?
                        .x
                }
                SplitRule::Gini => {
                    let prior: Vec<f64> = subs
                        .clone()
                        .map(|k| (0..t).map(|p| plan.local_doses(k, p)).sum::<f64>() / pop.subregion[k])
                        .collect();
                    gini_split(&prior, &sub_pop, &caps, pharmacy_total).map_err(|e| match e {
                        OptimizerError::Routing { echelon, deficit, .. } => {
                            OptimizerError::Routing { echelon, period: t, deficit }
                        }
                        other => other,
                    })?
                }
            }
        };
        let mut nu = f64::INFINITY;
        for (idx, k) in subs.enumerate() {
            let xk = x[idx];
            plan.phi[k][t] = xk * share;
            plan.omega[k][t] = xk - plan.phi[k][t];
            nu = nu.min(xk / pop.subregion[k]);
            if xk > 0.0 {
                let ship = xk / keep;
                let l = cheapest_pharmacy(s, topo, k);
                plan.g3[l][t - sp.lead_3] += ship;
                plan.g2[k][t - sp.lead_3 - sp.lead_2] += ship;
                hub_pharmacy[j] += ship;
            }
        }
        plan.nu[j][t] = if nu.is_finite() { nu } else { 0.0 };
        let at_centers = total - x.iter().sum::<f64>();
        if at_centers > 0.0 {
            hub_center[j] = at_centers / keep;
        }
    }

    let lead_p = sp.pharmacy_lead();
    let lead_c = sp.lead_1;
    if hub_pharmacy.iter().any(|&v| v > 0.0) {
        if t < lead_p {
            return Err(OptimizerError::Routing {
                echelon: Echelon::Supplier,
                period: t,
                deficit: hub_pharmacy.iter().sum(),
            });
        }
        if lead_p == lead_c {
            for (p, c) in hub_pharmacy.iter_mut().zip(&hub_center) {
                *p += c;
            }
            hub_center.iter_mut().for_each(|c| *c = 0.0);
        }
        assign_suppliers(s, topo, plan, residual, &hub_pharmacy, t - lead_p, t)?;
    }
    if hub_center.iter().any(|&v| v > 0.0) {
        if t < lead_c {
            return Err(OptimizerError::Routing {
                echelon: Echelon::Center,
                period: t,
                deficit: hub_center.iter().sum(),
            });
        }
        assign_suppliers(s, topo, plan, residual, &hub_center, t - lead_c, t)?;
    }
    let after = compute_cost(s, plan)?.total;
    Ok(FlowOutcome { cost_increment: after - before, cross_checks })
}

/// Cheapest pharmacy of sub-region `k`, lowest index on ties.
pub fn cheapest_pharmacy(s: &Scenario, topo: &Topology, k: usize) -> usize {
    topo.subregion_pharmacies[k]
        .clone()
        .min_by(|&a, &b| s.costs.transport_3[a].total_cmp(&s.costs.transport_3[b]).then(a.cmp(&b)))
        .expect("sub-region has a pharmacy")
}

/// Least-cost supplier shipments in period `ship` covering each region's
/// hub requirement.
fn assign_suppliers(
    s: &Scenario,
    topo: &Topology,
    plan: &mut AllocationPlan,
    residual: &mut [Vec<f64>],
    need: &[f64],
    ship: usize,
    period: usize,
) -> Result<(), OptimizerError> {
    let ni = topo.n_suppliers;
    let nj = topo.n_regions;
    let required: f64 = need.iter().sum();
    let available: f64 = residual.iter().map(|r| r[ship].max(0.0)).sum();
    if required > available + tol(available) {
        return Err(OptimizerError::Routing { echelon: Echelon::Supplier, period, deficit: required - available });
    }
    let unit = |i: usize, j: usize| s.costs.dose_cost[i][ship] + s.costs.transport_1[i][j];
    let flows: Vec<Vec<f64>> = if ni == 1 {
        vec![need.to_vec()]
    } else {
        let mut lp = LinearProgram::new(
            Sense::Minimize,
            (0..ni).flat_map(|i| (0..nj).map(move |j| (i, j))).map(|(i, j)| unit(i, j)).collect(),
        );
        for (i, r) in residual.iter().enumerate() {
            // Loosened by rounding slack so a requirement equal to the
            // residual stays feasible.
            let cap = r[ship].max(0.0);
            lp.add_row((0..nj).map(|j| (i * nj + j, 1.0)).collect(), RowSense::Le, cap + tol(cap) * 1e-3);
        }
        for (j, &d) in need.iter().enumerate() {
            lp.add_row((0..ni).map(|i| (i * nj + j, 1.0)).collect(), RowSense::Eq, d);
        }
        let sol = solve_lp(&lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(OptimizerError::Routing { echelon: Echelon::Supplier, period, deficit: required - available });
        }
        (0..ni).map(|i| (0..nj).map(|j| sol.x[i * nj + j].max(0.0)).collect()).collect()
    };
    for (i, row) in flows.iter().enumerate() {
        for (j, &q) in row.iter().enumerate() {
            if q > 0.0 {
                plan.g1[i][j][ship] += q;
                residual[i][ship] -= q;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn greedy_fill_without_floor() {
        let s = priority_split(&[0.7, 0.3], &[100.0, 100.0], &[60.0, 60.0], 80.0, 0.0).unwrap();
        assert_eq!(s.x, vec![60.0, 20.0]);
    }

    #[test]
    fn floor_weight_shifts_allocation() {
        let s = checked_priority_split(&[0.7, 0.3], &[100.0, 100.0], &[60.0, 60.0], 80.0, 1000.0).unwrap();
        assert!((s.nu - 0.4).abs() < 1e-12);
        assert!((s.x[0] - 40.0).abs() < 1e-9 && (s.x[1] - 40.0).abs() < 1e-9);
    }

    #[test]
    fn split_agrees_with_simplex() {
        let delta = [0.2, 0.5, 0.1, 0.2];
        let pop = [1000.0, 300.0, 2000.0, 700.0];
        let caps = [50.0, 10.0, 400.0, 90.0];
        for lambda in [0.0, 10.0, 100.0, 1000.0, 1e5] {
            checked_priority_split(&delta, &pop, &caps, 200.0, lambda).unwrap();
        }
    }

    #[test]
    fn gini_split_equalizes_uniform_counties() {
        let x = gini_split(&[0.0; 3], &[100.0; 3], &[50.0; 3], 60.0).unwrap();
        for v in x {
            assert!((v - 20.0).abs() < 1e-9);
        }
    }

    #[test]
    fn gini_split_tops_up_the_lagging_county() {
        let x = gini_split(&[0.1, 0.0], &[100.0, 100.0], &[50.0, 50.0], 10.0).unwrap();
        assert!(x[0].abs() < 1e-9 && (x[1] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn level_fill_matches_lp_on_equal_populations() {
        let prior = [0.05, 0.0, 0.02];
        let caps = [100.0, 3.0, 100.0];
        let lp = gini_lp(&prior, &[100.0; 3], &caps, 12.0).unwrap();
        let lf = level_fill(&prior, &[100.0; 3], &caps, 12.0);
        for (a, b) in lp.iter().zip(&lf) {
            assert!((a - b).abs() < 1e-6, "{lp:?} vs {lf:?}");
        }
    }
}
