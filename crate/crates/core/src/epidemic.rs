//! Discrete-time SVIR dynamics with vaccination, reinfection and the
//! infection-growth and demand-shortfall triggers.

use crate::scenario::{AllocationPlan, EpidemicParams, Scenario, Topology};
use thiserror::Error;

/// Compartment sizes (person counts) per region at one time point.
#[derive(Debug, Clone, PartialEq)]
pub struct EpidemicState {
    pub s: Vec<f64>,
    pub v: Vec<f64>,
    pub i: Vec<f64>,
    pub r: Vec<f64>,
}

impl EpidemicState {
    pub fn total(&self, j: usize) -> f64 {
        self.s[j] + self.v[j] + self.i[j] + self.r[j]
    }
}

/// One region's compartments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compartments {
    pub s: f64,
    pub v: f64,
    pub i: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// States for `t = 0..=T`.
    pub states: Vec<EpidemicState>,
    /// New infections `[region][t]` for decision periods `t < T`.
    pub new_infections: Vec<Vec<f64>>,
    /// Reinfection inflow `[region][t]`.
    pub reinfection: Vec<Vec<f64>>,
    /// Trigger threshold `[region][t]`.
    pub tau: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn total_infections(&self) -> f64 {
        self.new_infections.iter().flatten().sum()
    }

    /// Number of completed periods.
    pub fn periods(&self) -> usize {
        self.states.len() - 1
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EpidemicError {
    #[error("state underflow: compartment {compartment} of region {region} is {value} at period {period}")]
    StateUnderflow { compartment: char, region: usize, period: usize, value: f64 },
    #[error("period {0} is outside the horizon")]
    OutOfHorizon(usize),
}

pub fn initial_state(e: &EpidemicParams) -> EpidemicState {
    let j = e.pop.region.len();
    EpidemicState {
        s: (0..j).map(|g| e.pop.region[g] - e.init_i[g] + e.init_itilde[g]).collect(),
        v: vec![0.0; j],
        i: e.init_i.clone(),
        r: e.init_r.clone(),
    }
}

/// New infections of region `j` in state `c` under period-`t` rates.
pub fn infection_flux(e: &EpidemicParams, j: usize, t: usize, c: Compartments) -> f64 {
    (e.beta[j][t] * c.s + e.beta_vax[j][t] * c.v) * c.i
}

/// One period of the recursion for one region. `psi_lagged` is the dose
/// count leaving the susceptible pool this period, `xi` the doses given to
/// removed people and `itilde` the reinfection inflow. Returns the next
/// state and this period's new infections. Any compartment falling below
/// `-tol` is an error; nothing is clamped.
#[allow(clippy::too_many_arguments)]
pub fn epidemic_step(
    e: &EpidemicParams,
    j: usize,
    t: usize,
    c: Compartments,
    psi_lagged: f64,
    xi: f64,
    itilde: f64,
    tol: f64,
) -> Result<(Compartments, f64), EpidemicError> {
    let n = e.pop.region[j];
    let mu = e.mu;
    let si = e.beta[j][t] * c.s * c.i;
    let vi = e.beta_vax[j][t] * c.v * c.i;
    let immune = if e.psi { e.gamma1 * c.v } else { 0.0 };
    let next = Compartments {
        s: c.s + mu * n - mu * c.s - si - psi_lagged + itilde,
        v: c.v - mu * c.v + psi_lagged - vi - immune,
        i: c.i - mu * c.i + si + vi - e.gamma * c.i,
        r: c.r - mu * c.r + immune + e.gamma * c.i - xi,
    };
    for (name, value) in [('S', next.s), ('V', next.v), ('I', next.i), ('R', next.r)] {
        if value < -tol || value.is_nan() {
            return Err(EpidemicError::StateUnderflow { compartment: name, region: j, period: t + 1, value });
        }
    }
    Ok((next, si + vi))
}

/// Absolute underflow tolerance for a region of population `n`.
pub fn underflow_tol(n: f64) -> f64 {
    1e-9 * n.max(1.0)
}

/// Reinfection inflow at `t`, from the state `t_r` periods earlier.
pub fn reinfection_inflow(e: &EpidemicParams, states: &[EpidemicState], j: usize, t: usize) -> f64 {
    if t < e.t_r {
        return 0.0;
    }
    let past = &states[t - e.t_r];
    e.sigma_at(t) * (e.beta[j][t] * past.s[j] + e.beta_vax[j][t] * past.v[j]) * past.i[j]
}

/// Trigger threshold: mean of the previous three periods' new infections,
/// or half the initial-state flux in the first three periods.
pub fn threshold(e: &EpidemicParams, fluxes: &[f64], j: usize, t: usize) -> f64 {
    if t >= 3 {
        (fluxes[t - 1] + fluxes[t - 2] + fluxes[t - 3]) / 3.0
    } else {
        let s0 = e.pop.region[j] - e.init_i[j] + e.init_itilde[j];
        0.5 * e.beta[j][t] * s0 * e.init_i[j]
    }
}

/// Infection-growth and demand-shortfall triggers of region `j` at `t`;
/// both are off before the center lead time has elapsed.
pub fn trigger_indicators(s: &Scenario, topo: &Topology, traj: &Trajectory, j: usize, t: usize) -> (bool, bool) {
    if t < s.supply.lead_center {
        return (false, false);
    }
    let growth = traj.new_infections[j][t] > traj.tau[j][t];
    let shortfall = s.local_capacity_total(topo, j, t) < s.supply.demand[j][t];
    (growth, shortfall)
}

/// Incremental simulator; the optimizers step it one period at a time.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    scenario: &'a Scenario,
    lag: usize,
    traj: Trajectory,
}

impl<'a> Simulator<'a> {
    pub fn new(scenario: &'a Scenario) -> Self {
        let j = scenario.num_regions();
        let t = scenario.horizon;
        let mk = || (0..j).map(|_| Vec::with_capacity(t)).collect::<Vec<Vec<f64>>>();
        let mut states = Vec::with_capacity(t + 1);
        states.push(initial_state(&scenario.epidemic));
        Simulator {
            scenario,
            lag: scenario.epidemic.dose_lag(),
            traj: Trajectory { states, new_infections: mk(), reinfection: mk(), tau: mk() },
        }
    }

    /// Index of the current (latest) state.
    pub fn period(&self) -> usize {
        self.traj.states.len() - 1
    }

    pub fn current(&self) -> &EpidemicState {
        self.traj.states.last().unwrap()
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.traj
    }

    pub fn into_trajectory(self) -> Trajectory {
        self.traj
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    /// Advances one period using the plan's doses.
    pub fn step(&mut self, plan: &AllocationPlan) -> Result<(), EpidemicError> {
        let t = self.period();
        let sc = self.scenario;
        if t >= sc.horizon {
            return Err(EpidemicError::OutOfHorizon(t));
        }
        let e = &sc.epidemic;
        let cur = self.current().clone();
        let j_count = sc.num_regions();
        let mut next = EpidemicState {
            s: vec![0.0; j_count],
            v: vec![0.0; j_count],
            i: vec![0.0; j_count],
            r: vec![0.0; j_count],
        };
        for j in 0..j_count {
            let itilde = reinfection_inflow(e, &self.traj.states, j, t);
            let psi_lag = if t >= self.lag { plan.psi[j][t - self.lag] } else { 0.0 };
            let c = Compartments { s: cur.s[j], v: cur.v[j], i: cur.i[j], r: cur.r[j] };
            let (n, flux) = epidemic_step(e, j, t, c, psi_lag, plan.xi[j][t], itilde, underflow_tol(e.pop.region[j]))?;
            next.s[j] = n.s;
            next.v[j] = n.v;
            next.i[j] = n.i;
            next.r[j] = n.r;
            self.traj.new_infections[j].push(flux);
            self.traj.reinfection[j].push(itilde);
            let tau = threshold(e, &self.traj.new_infections[j], j, t);
            self.traj.tau[j].push(tau);
        }
        self.traj.states.push(next);
        Ok(())
    }

    /// Drops everything after state `t`.
    pub fn truncate(&mut self, t: usize) {
        self.traj.states.truncate(t + 1);
        for j in 0..self.scenario.num_regions() {
            self.traj.new_infections[j].truncate(t);
            self.traj.reinfection[j].truncate(t);
            self.traj.tau[j].truncate(t);
        }
    }
}

/// Runs the plan over the whole horizon.
pub fn simulate(s: &Scenario, plan: &AllocationPlan) -> Result<Trajectory, EpidemicError> {
    let mut sim = Simulator::new(s);
    for _ in 0..s.horizon {
        sim.step(plan)?;
    }
    Ok(sim.into_trajectory())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synthetic::tiny;

    fn one_region(beta: f64, beta_vax: f64, gamma: f64, mu: f64) -> EpidemicParams {
        let mut e = tiny(101).epidemic;
        e.pop.region = vec![1000.0];
        e.beta = vec![vec![beta]];
        e.beta_vax = vec![vec![beta_vax]];
        e.gamma = gamma;
        e.mu = mu;
        e.psi = false;
        e
    }

    #[test]
    fn step_matches_hand_computation() {
        let e = one_region(1e-4, 2e-5, 0.25, 0.0);
        let c = Compartments { s: 900.0, v: 50.0, i: 40.0, r: 10.0 };
        let (n, flux) = epidemic_step(&e, 0, 0, c, 20.0, 0.0, 0.0, 0.0).unwrap();
        // si = 1e-4*900*40 = 3.6, vi = 2e-5*50*40 = 0.04
        assert!((flux - 3.64).abs() < 1e-12);
        assert!((n.s - (900.0 - 3.6 - 20.0)).abs() < 1e-12);
        assert!((n.v - (50.0 + 20.0 - 0.04)).abs() < 1e-12);
        assert!((n.i - (40.0 + 3.64 - 10.0)).abs() < 1e-12);
        assert!((n.r - 20.0).abs() < 1e-12);
    }

    #[test]
    fn births_and_deaths_keep_total_at_population() {
        let e = one_region(1e-4, 0.0, 0.2, 0.01);
        let c = Compartments { s: 700.0, v: 100.0, i: 150.0, r: 50.0 };
        let (n, _) = epidemic_step(&e, 0, 0, c, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert!((n.s + n.v + n.i + n.r - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn overdrawn_susceptibles_are_an_error() {
        let e = one_region(0.0, 0.0, 0.1, 0.0);
        let c = Compartments { s: 10.0, v: 0.0, i: 0.0, r: 0.0 };
        let err = epidemic_step(&e, 0, 0, c, 11.0, 0.0, 0.0, 1e-9).unwrap_err();
        assert!(matches!(err, EpidemicError::StateUnderflow { compartment: 'S', period: 1, .. }));
    }

    #[test]
    fn early_threshold_uses_initial_flux() {
        let mut e = one_region(1e-4, 0.0, 0.1, 0.0);
        e.init_i = vec![10.0];
        e.init_itilde = vec![0.0];
        assert!((threshold(&e, &[], 0, 0) - 0.5 * 1e-4 * 990.0 * 10.0).abs() < 1e-12);
        assert_eq!(threshold(&e, &[3.0, 6.0, 9.0], 0, 3), 6.0);
    }

    #[test]
    fn simulator_steps_match_simulate() {
        let s = tiny(102);
        let plan = AllocationPlan::zeros(&s);
        let whole = simulate(&s, &plan).unwrap();
        let mut sim = Simulator::new(&s);
        for _ in 0..s.horizon {
            sim.step(&plan).unwrap();
        }
        assert_eq!(sim.trajectory(), &whole);
        assert_eq!(sim.step(&plan), Err(EpidemicError::OutOfHorizon(s.horizon)));
        sim.truncate(1);
        assert_eq!(sim.period(), 1);
        assert_eq!(sim.trajectory().new_infections[0].len(), 1);
    }
}
