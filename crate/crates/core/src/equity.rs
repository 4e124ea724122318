//! Gini coefficients, knapsack priority weights and plan equity reports.

use crate::scenario::{AllocationPlan, Scenario, Topology};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquityError {
    #[error("negative entry {value} at position {index}")]
    NegativeEntry { index: usize, value: f64 },
    #[error("empty input")]
    Empty,
    #[error("region {0} has no sub-regions")]
    EmptyRegion(usize),
    #[error("region {0} has zero composite priority")]
    ZeroPriority(usize),
    #[error("sub-region {0} has zero population")]
    ZeroPopulation(usize),
    #[error("input lengths differ")]
    Length,
}

/// Mean absolute difference over twice the mean. An all-zero vector counts
/// as perfectly equal. Pairwise gaps within 1e-12 of the largest entry are
/// treated as rounding noise.
pub fn gini_coefficient(u: &[f64]) -> Result<f64, EquityError> {
    if u.is_empty() {
        return Err(EquityError::Empty);
    }
    for (index, &value) in u.iter().enumerate() {
        if value < 0.0 || value.is_nan() {
            return Err(EquityError::NegativeEntry { index, value });
        }
    }
    let n = u.len() as f64;
    let mean = u.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return Ok(0.0);
    }
    let top = u.iter().fold(0.0_f64, |a, &b| a.max(b));
    let noise = 1e-12 * top;
    let mut sum = 0.0;
    for a in u {
        for b in u {
            let d = (a - b).abs();
            if d > noise {
                sum += d;
            }
        }
    }
    Ok(sum / (2.0 * mean * n * n))
}

/// Per-sub-region priority components, each scaled to `[0, 1]` by its
/// regional maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorityComponents {
    pub d_svi: Vec<f64>,
    pub d_beta: Vec<f64>,
    pub d_pop: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackWeights {
    pub components: PriorityComponents,
    pub composite: Vec<f64>,
    pub rho: Vec<f64>,
    pub delta: Vec<f64>,
}

/// Quartile bin (1 to 4) of an SVI value.
pub fn svi_bin(svi: f64) -> u8 {
    1 + [0.25, 0.5, 0.75].iter().filter(|&&c| svi >= c).count() as u8
}

fn scale_by_group_max(values: &[f64], groups: &[std::ops::Range<usize>]) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for g in groups {
        let max = values[g.clone()].iter().fold(0.0_f64, |a, &b| a.max(b));
        for k in g.clone() {
            out[k] = if max > 0.0 { values[k] / max } else { 0.0 };
        }
    }
    out
}

pub fn county_priority_components(
    svi: &[f64],
    beta0: &[f64],
    pop: &[f64],
    groups: &[std::ops::Range<usize>],
) -> Result<PriorityComponents, EquityError> {
    if svi.len() != beta0.len() || svi.len() != pop.len() {
        return Err(EquityError::Length);
    }
    if let Some(j) = groups.iter().position(|g| g.is_empty()) {
        return Err(EquityError::EmptyRegion(j));
    }
    let bins: Vec<f64> = svi.iter().map(|&v| svi_bin(v) as f64).collect();
    Ok(PriorityComponents {
        d_svi: scale_by_group_max(&bins, groups),
        d_beta: scale_by_group_max(beta0, groups),
        d_pop: scale_by_group_max(pop, groups),
    })
}

pub fn priority_weights(
    c: PriorityComponents,
    access: &[f64],
    groups: &[std::ops::Range<usize>],
) -> Result<KnapsackWeights, EquityError> {
    let n = c.d_svi.len();
    let composite: Vec<f64> =
        (0..n).map(|k| (c.d_svi[k].powi(2) + c.d_beta[k].powi(2) + c.d_pop[k].powi(2)).sqrt()).collect();
    let mut rho = vec![0.0; n];
    let mut delta = vec![0.0; n];
    for (j, g) in groups.iter().enumerate() {
        let sum: f64 = composite[g.clone()].iter().sum();
        if sum <= 0.0 {
            return Err(EquityError::ZeroPriority(j));
        }
        for k in g.clone() {
            rho[k] = composite[k] / sum;
            delta[k] = (1.0 - access[j]) * rho[k];
        }
    }
    Ok(KnapsackWeights { components: c, composite, rho, delta })
}

/// Priority weights of every sub-region of a scenario.
pub fn scenario_priority_weights(s: &Scenario) -> Result<KnapsackWeights, EquityError> {
    let topo = Topology::new(s);
    let c = county_priority_components(&s.svi, &s.beta0, &s.epidemic.pop.subregion, &topo.region_subregions)?;
    priority_weights(c, &s.access, &topo.region_subregions)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionEquity {
    /// Per-capita doses over the horizon, one per sub-region of the region.
    pub u: Vec<f64>,
    pub mean: f64,
    pub gini: f64,
}

impl RegionEquity {
    /// Pairwise gaps `|u_m - u_n|`.
    pub fn pairwise(&self) -> Vec<Vec<f64>> {
        self.u.iter().map(|a| self.u.iter().map(|b| (a - b).abs()).collect()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GiniReport {
    pub regions: Vec<RegionEquity>,
    /// Largest regional Gini coefficient.
    pub eta: f64,
    /// Smallest regional per-capita allocation per period.
    pub zeta: Vec<f64>,
}

pub fn plan_equity_report(s: &Scenario, plan: &AllocationPlan) -> Result<GiniReport, EquityError> {
    let topo = Topology::new(s);
    let pop = &s.epidemic.pop;
    let mut regions = Vec::with_capacity(topo.n_regions);
    for g in &topo.region_subregions {
        let mut u = Vec::with_capacity(g.len());
        for k in g.clone() {
            if pop.subregion[k] <= 0.0 {
                return Err(EquityError::ZeroPopulation(k));
            }
            let total: f64 = (0..s.horizon).map(|t| plan.local_doses(k, t)).sum();
            u.push(total / pop.subregion[k]);
        }
        let mean = u.iter().sum::<f64>() / u.len().max(1) as f64;
        let gini = gini_coefficient(&u)?;
        regions.push(RegionEquity { u, mean, gini });
    }
    let eta = regions.iter().fold(0.0_f64, |a, r| a.max(r.gini));
    let zeta = (0..s.horizon)
        .map(|t| (0..topo.n_regions).map(|j| plan.regional_doses(j, t) / pop.region[j]).fold(f64::INFINITY, f64::min))
        .map(|z| if z.is_finite() { z } else { 0.0 })
        .collect();
    Ok(GiniReport { regions, eta, zeta })
}

#[cfg(test)]
#[allow(clippy::single_range_in_vec_init)]
mod tests {
    use super::*;

    #[test]
    fn gini_examples() {
        assert_eq!(gini_coefficient(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(gini_coefficient(&[0.0, 1.0]).unwrap(), 0.5);
        assert_eq!(gini_coefficient(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(gini_coefficient(&[1.0, -0.5]).is_err());
    }

    #[test]
    fn bins_and_components() {
        assert_eq!([0.1, 0.3, 0.6, 0.9].map(svi_bin), [1, 2, 3, 4]);
        let groups = vec![0..2];
        let c = county_priority_components(&[0.3, 0.9], &[1.0, 1.0], &[5.0, 5.0], &groups).unwrap();
        assert_eq!(c.d_svi, vec![0.5, 1.0]);
        let single = county_priority_components(&[0.1], &[0.2], &[7.0], &[0..1]).unwrap();
        assert_eq!((single.d_svi[0], single.d_beta[0], single.d_pop[0]), (1.0, 1.0, 1.0));
    }

    #[test]
    fn composite_and_access() {
        let groups = vec![0..2];
        let c = county_priority_components(&[0.9, 0.9], &[1.0, 1.0], &[5.0, 5.0], &groups).unwrap();
        let w = priority_weights(c.clone(), &[0.25], &groups).unwrap();
        assert!((w.composite[0] - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(w.rho, vec![0.5, 0.5]);
        assert_eq!(w.delta, vec![0.375, 0.375]);
        let full = priority_weights(c, &[1.0], &groups).unwrap();
        assert_eq!(full.delta, vec![0.0, 0.0]);
    }
}
