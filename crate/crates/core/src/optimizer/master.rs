use super::OptimizerError;
use crate::lp::{solve_lp, LinearProgram, LpStatus, RowSense, Sense};

/// Inputs of one period's regional allocation LP. Built by the
/// decomposition engine from the accepted trajectory prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterContext {
    pub period: usize,
    pub alpha: u8,
    pub population: Vec<f64>,
    /// Objective coefficient of `Ψ_j`: weighted infections averted per dose.
    pub marginal: Vec<f64>,
    /// Objective coefficient of the per-capita floor `ζ`.
    pub floor_weight: f64,
    /// `min(D_j, N_j − doses so far)`.
    pub dose_limit: Vec<f64>,
    /// Susceptible people still reachable by a dose given now.
    pub s_cap: Vec<f64>,
    /// Removed people available for a dose now.
    pub r_cap: Vec<f64>,
    /// Sub-regional administration capacity.
    pub pharmacy_cap: Vec<f64>,
    /// Open-center administration capacity (after wastage).
    pub center_cap: Vec<f64>,
    /// Deliverable supply along the pharmacy path (after wastage).
    pub pharmacy_supply: f64,
    /// Deliverable supply along the center path (after wastage).
    pub center_supply: f64,
    /// Both paths ship in the same period and share one supply pool.
    pub shared_supply: bool,
    /// Cap on total regional doses from the budget switch.
    pub total_cap: Option<f64>,
    /// Per-dose cost bound and the money available for doses.
    pub cost_row: Option<(Vec<f64>, f64)>,
    pub upsilon: Vec<(bool, bool)>,
    /// Center open flags for this period.
    pub x: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterDecision {
    pub period: usize,
    pub psi: Vec<f64>,
    pub xi: Vec<f64>,
    /// Doses routed through pharmacies, per region.
    pub pharmacy: Vec<f64>,
    /// Doses given at centers, per region.
    pub center: Vec<f64>,
    pub x: Vec<bool>,
    pub upsilon: Vec<(bool, bool)>,
    pub zeta: f64,
    pub alpha: u8,
    pub objective: f64,
}

impl MasterDecision {
    pub fn total(&self, j: usize) -> f64 {
        self.psi[j] + self.xi[j]
    }
}

/// Solves the period's regional allocation LP, then moves doses from the
/// removed to the susceptible pool where reachable and routes as many as
/// possible through pharmacies.
pub fn solve_master_period(ctx: &MasterContext) -> Result<MasterDecision, OptimizerError> {
    let nj = ctx.population.len();
    let t = ctx.period;
    let nbar = ctx.population.iter().sum::<f64>() / nj.max(1) as f64;
    let nz = |v: f64| if v.is_finite() { v.max(0.0) } else { 0.0 };

    // Variables per region: ψ, ξ, pharmacy, center; then the scaled floor.
    let zi = 4 * nj;
    let mut obj = vec![0.0; zi + 1];
    for j in 0..nj {
        obj[4 * j] = ctx.marginal[j];
    }
    obj[zi] = ctx.floor_weight / nbar.max(1.0);
    let mut lp = LinearProgram::new(Sense::Maximize, obj);
    for j in 0..nj {
        let b = 4 * j;
        lp.set_bounds(b, 0.0, nz(ctx.s_cap[j]));
        lp.set_bounds(b + 1, 0.0, nz(ctx.r_cap[j]));
        lp.set_bounds(b + 2, 0.0, nz(ctx.pharmacy_cap[j]));
        lp.set_bounds(b + 3, 0.0, nz(ctx.center_cap[j]));
        lp.add_row(vec![(b, 1.0), (b + 1, 1.0), (b + 2, -1.0), (b + 3, -1.0)], RowSense::Eq, 0.0);
        lp.add_row(vec![(b, 1.0), (b + 1, 1.0)], RowSense::Le, nz(ctx.dose_limit[j]));
        lp.add_row(vec![(zi, ctx.population[j] / nbar), (b, -1.0), (b + 1, -1.0)], RowSense::Le, 0.0);
    }
    let ph: Vec<(usize, f64)> = (0..nj).map(|j| (4 * j + 2, 1.0)).collect();
    let ce: Vec<(usize, f64)> = (0..nj).map(|j| (4 * j + 3, 1.0)).collect();
    if ctx.shared_supply {
        lp.add_row(ph.iter().chain(&ce).copied().collect(), RowSense::Le, nz(ctx.pharmacy_supply));
    } else {
        lp.add_row(ph, RowSense::Le, nz(ctx.pharmacy_supply));
        lp.add_row(ce, RowSense::Le, nz(ctx.center_supply));
    }
    let doses: Vec<(usize, f64)> = (0..nj).flat_map(|j| [(4 * j, 1.0), (4 * j + 1, 1.0)]).collect();
    if let Some(cap) = ctx.total_cap {
        lp.add_row(doses.clone(), RowSense::Le, nz(cap));
    }
    if let Some((unit, money)) = &ctx.cost_row {
        let coefs = (0..nj).flat_map(|j| [(4 * j, unit[j]), (4 * j + 1, unit[j])]).collect();
        lp.add_row(coefs, RowSense::Le, nz(*money));
    }
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(OptimizerError::MasterInfeasible(t));
    }

    let total: Vec<f64> = (0..nj).map(|j| (sol.x[4 * j] + sol.x[4 * j + 1]).max(0.0)).collect();
    let psi: Vec<f64> = (0..nj).map(|j| total[j].min(nz(ctx.s_cap[j]))).collect();
    let xi: Vec<f64> = (0..nj).map(|j| (total[j] - psi[j]).max(0.0)).collect();
    let lp_split: Vec<(f64, f64)> = (0..nj).map(|j| (sol.x[4 * j + 2].max(0.0), sol.x[4 * j + 3].max(0.0))).collect();
    let (pharmacy, center) = pharmacy_first(ctx, &total).unwrap_or_else(|| {
        // Keep the LP split, re-anchored to the exact regional totals.
        lp_split
            .iter()
            .enumerate()
            .map(|(j, &(p, _))| {
                let p = p.min(total[j]);
                (p, total[j] - p)
            })
            .unzip()
    });
    let zeta = (0..nj).map(|j| total[j] / ctx.population[j]).fold(f64::INFINITY, f64::min);
    Ok(MasterDecision {
        period: t,
        psi,
        xi,
        pharmacy,
        center,
        x: ctx.x.clone(),
        upsilon: ctx.upsilon.clone(),
        zeta: if zeta.is_finite() { zeta } else { 0.0 },
        alpha: ctx.alpha,
        objective: sol.objective,
    })
}

/// Splits each regional total into pharmacy and center doses, filling
/// pharmacies first. `None` if that split breaks a supply row.
fn pharmacy_first(ctx: &MasterContext, total: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let slack = |cap: f64| cap.max(0.0) * (1.0 + 1e-12) + 1e-9;
    let mut pharmacy = Vec::with_capacity(total.len());
    let mut center = Vec::with_capacity(total.len());
    for (j, &a) in total.iter().enumerate() {
        let p = a.min(ctx.pharmacy_cap[j].max(0.0));
        let c = (a - p).max(0.0);
        if c > slack(ctx.center_cap[j]) {
            return None;
        }
        pharmacy.push(p);
        center.push(c);
    }
    let sp: f64 = pharmacy.iter().sum();
    let sc: f64 = center.iter().sum();
    let ok = if ctx.shared_supply {
        sp + sc <= slack(ctx.pharmacy_supply)
    } else {
        sp <= slack(ctx.pharmacy_supply) && sc <= slack(ctx.center_supply)
    };
    ok.then_some((pharmacy, center))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(nj: usize) -> MasterContext {
        MasterContext {
            period: 0,
            alpha: 0,
            population: vec![1000.0; nj],
            marginal: vec![1.0; nj],
            floor_weight: 1.0,
            dose_limit: vec![100.0; nj],
            s_cap: vec![900.0; nj],
            r_cap: vec![50.0; nj],
            pharmacy_cap: vec![500.0; nj],
            center_cap: vec![0.0; nj],
            pharmacy_supply: 150.0,
            center_supply: 150.0,
            shared_supply: true,
            total_cap: None,
            cost_row: None,
            upsilon: vec![(false, false); nj],
            x: Vec::new(),
        }
    }

    #[test]
    fn demand_binds_single_region() {
        let d = solve_master_period(&ctx(1)).unwrap();
        assert!((d.total(0) - 100.0).abs() < 1e-9);
        assert!((d.psi[0] - 100.0).abs() < 1e-9);
        assert!((d.zeta - 0.1).abs() < 1e-12);
    }

    #[test]
    fn no_supply_no_doses() {
        let mut c = ctx(2);
        c.pharmacy_supply = 0.0;
        c.center_supply = 0.0;
        let d = solve_master_period(&c).unwrap();
        assert_eq!(d.psi, vec![0.0, 0.0]);
        assert_eq!(d.xi, vec![0.0, 0.0]);
        assert_eq!(d.zeta, 0.0);
    }

    #[test]
    fn susceptible_doses_fill_before_removed() {
        let mut c = ctx(1);
        c.s_cap = vec![30.0];
        c.marginal = vec![0.0];
        let d = solve_master_period(&c).unwrap();
        assert!((d.psi[0] - 30.0).abs() < 1e-9);
        assert!((d.xi[0] - 50.0).abs() < 1e-9);
    }

    #[test]
    fn split_prefers_pharmacies() {
        let mut c = ctx(1);
        c.pharmacy_cap = vec![60.0];
        c.center_cap = vec![100.0];
        let d = solve_master_period(&c).unwrap();
        assert!((d.pharmacy[0] - 60.0).abs() < 1e-9);
        assert!((d.center[0] - 40.0).abs() < 1e-9);
    }

    #[test]
    fn total_cap_limits_doses() {
        let mut c = ctx(2);
        c.total_cap = Some(40.0);
        let d = solve_master_period(&c).unwrap();
        assert!((d.total(0) + d.total(1) - 40.0).abs() < 1e-9);
    }
}
