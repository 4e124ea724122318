//! Scenario data, allocation plans and the accounting that ties them
//! together: cost ledger, objective values and full feasibility checking.

mod cost;
mod feasibility;
mod objective;
mod plan;
mod validate;

pub use cost::{compute_cost, CostLedger, PeriodCost};
pub use feasibility::{check_full_feasibility, FamilyReport, FeasibilityReport};
pub use objective::{evaluate_objectives, Formulation, ObjectiveError, ObjectiveValues};
pub use plan::AllocationPlan;
pub use validate::{validate_scenario, ValidationIssue, ValidationReport};

use serde::{Deserialize, Serialize};
use std::ops::Range;
use thiserror::Error;

/// Default natural turnover per period: 14-day periods over a 75-year life.
pub const DEFAULT_MU: f64 = 14.0 / (75.0 * 365.0);
/// Default capacity of a mass vaccination center, doses per period.
pub const DEFAULT_CENTER_CAPACITY: f64 = 10_000.0;

fn default_mu() -> f64 {
    DEFAULT_MU
}
fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_period_length() -> f64 {
    14.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Population {
    /// Eligible population per region.
    pub region: Vec<f64>,
    /// Eligible population per sub-region (global sub-region index).
    pub subregion: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpidemicParams {
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub gamma1: f64,
    /// Whether vaccinated people who become immune move to the removed pool.
    #[serde(default)]
    pub psi: bool,
    /// Reinfection fraction per period; empty means zero.
    #[serde(default)]
    pub sigma: Vec<f64>,
    /// Reinfection delay in periods.
    #[serde(default)]
    pub t_r: usize,
    /// Infection rate `[region][period]`.
    pub beta: Vec<Vec<f64>>,
    /// Infection rate of vaccinated people `[region][period]`.
    pub beta_vax: Vec<Vec<f64>>,
    pub pop: Population,
    pub init_i: Vec<f64>,
    #[serde(default)]
    pub init_itilde: Vec<f64>,
    pub init_r: Vec<f64>,
}

impl EpidemicParams {
    /// Periods between a dose and the vaccinee leaving the susceptible pool.
    pub fn dose_lag(&self) -> usize {
        (1.0 / self.gamma1).ceil().max(1.0) as usize
    }

    pub fn sigma_at(&self, t: usize) -> f64 {
        self.sigma.get(t).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupplyParams {
    /// `[supplier][period]`
    pub supplier_capacity: Vec<Vec<f64>>,
    /// `[subregion][period]`
    pub local_capacity: Vec<Vec<f64>>,
    /// `[center][period]`; empty means the default capacity everywhere.
    #[serde(default)]
    pub center_capacity: Vec<Vec<f64>>,
    /// Periods between opening a center and its first doses.
    #[serde(default = "one_usize")]
    pub lead_center: usize,
    /// Supplier to regional hub transit, periods.
    #[serde(default)]
    pub lead_1: usize,
    /// Regional hub to sub-regional hub transit, periods.
    #[serde(default)]
    pub lead_2: usize,
    /// Sub-regional hub to pharmacy transit, periods.
    #[serde(default)]
    pub lead_3: usize,
    #[serde(default)]
    pub wastage: f64,
    /// `[region][period]`
    pub demand: Vec<Vec<f64>>,
}

impl SupplyParams {
    /// Transit time from supplier to pharmacy.
    pub fn pharmacy_lead(&self) -> usize {
        self.lead_1 + self.lead_2 + self.lead_3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostParams {
    pub budget: f64,
    /// `[supplier][period]`
    pub dose_cost: Vec<Vec<f64>>,
    /// `[supplier][region]`
    pub transport_1: Vec<Vec<f64>>,
    /// Per sub-region (arc from its region hub).
    pub transport_2: Vec<f64>,
    /// Per pharmacy (arc from its sub-region hub).
    pub transport_3: Vec<f64>,
    #[serde(default)]
    pub holding_1: Vec<f64>,
    #[serde(default)]
    pub holding_2: Vec<f64>,
    #[serde(default)]
    pub holding_3: Vec<f64>,
    /// Per center.
    #[serde(default)]
    pub open_cost: Vec<f64>,
    /// `[region][period]`
    pub admin_cost: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    Raw,
    /// Infection terms divided by initial infected plus removed, dose terms
    /// by the total population.
    Population,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveWeights {
    pub lambda0: f64,
    pub lambda11: f64,
    pub lambda12: f64,
    pub lambda21: f64,
    pub lambda22: f64,
    pub lambda_reg: f64,
    #[serde(default)]
    pub normalization: Normalization,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights {
            lambda0: -1.0,
            lambda11: 1.0,
            lambda12: 1.0,
            lambda21: 1.0,
            lambda22: 1.0,
            lambda_reg: 10.0,
            normalization: Normalization::Raw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub horizon: usize,
    #[serde(default = "default_period_length")]
    pub period_length_days: f64,
    pub suppliers: Vec<String>,
    pub regions: Vec<String>,
    /// Sub-region ids per region; global sub-region indices follow this order.
    pub subregions_of: Vec<Vec<String>>,
    /// Pharmacy ids per global sub-region.
    pub pharmacies_of: Vec<Vec<String>>,
    /// Mass vaccination center ids per region.
    #[serde(default)]
    pub centers_of: Vec<Vec<String>>,
    pub epidemic: EpidemicParams,
    pub supply: SupplyParams,
    pub costs: CostParams,
    #[serde(default)]
    pub weights: ObjectiveWeights,
    /// Social vulnerability index per sub-region.
    pub svi: Vec<f64>,
    /// Initial infection rate per sub-region; empty means the region's
    /// period-0 rate.
    #[serde(default)]
    pub beta0: Vec<f64>,
    /// Access factor per region.
    pub access: Vec<f64>,
}

/// Flattened index maps derived from the nested id lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub n_suppliers: usize,
    pub n_regions: usize,
    pub n_subregions: usize,
    pub n_pharmacies: usize,
    pub n_centers: usize,
    pub subregion_region: Vec<usize>,
    pub region_subregions: Vec<Range<usize>>,
    pub pharmacy_subregion: Vec<usize>,
    pub subregion_pharmacies: Vec<Range<usize>>,
    pub center_region: Vec<usize>,
    pub region_centers: Vec<Range<usize>>,
}

fn flatten(groups: &[Vec<String>]) -> (Vec<usize>, Vec<Range<usize>>) {
    let mut owner = Vec::new();
    let mut ranges = Vec::with_capacity(groups.len());
    for (g, ids) in groups.iter().enumerate() {
        let start = owner.len();
        owner.extend(std::iter::repeat_n(g, ids.len()));
        ranges.push(start..owner.len());
    }
    (owner, ranges)
}

impl Topology {
    pub fn new(s: &Scenario) -> Self {
        let (subregion_region, region_subregions) = flatten(&s.subregions_of);
        let (pharmacy_subregion, subregion_pharmacies) = flatten(&s.pharmacies_of);
        let (center_region, mut region_centers) = flatten(&s.centers_of);
        let n = center_region.len();
        region_centers.resize(s.regions.len(), n..n);
        Topology {
            n_suppliers: s.suppliers.len(),
            n_regions: s.regions.len(),
            n_subregions: subregion_region.len(),
            n_pharmacies: pharmacy_subregion.len(),
            n_centers: center_region.len(),
            subregion_region,
            region_subregions,
            pharmacy_subregion,
            subregion_pharmacies,
            center_region,
            region_centers,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShapeError {
    #[error("field `{field}` has length {found}, expected {expected}")]
    Length { field: String, found: usize, expected: usize },
}

impl Scenario {
    pub fn topology(&self) -> Topology {
        Topology::new(self)
    }

    pub fn num_regions(&self) -> usize {
        self.regions.len()
    }

    /// Fills optional collections left empty in the input: one (empty)
    /// center list per region, default center capacities, zero reinfection
    /// and zero holding costs.
    pub fn apply_defaults(&mut self) {
        let j = self.regions.len();
        let t = self.horizon;
        if self.centers_of.is_empty() {
            self.centers_of = vec![Vec::new(); j];
        }
        let n_centers: usize = self.centers_of.iter().map(Vec::len).sum();
        let n_sub: usize = self.subregions_of.iter().map(Vec::len).sum();
        let n_ph: usize = self.pharmacies_of.iter().map(Vec::len).sum();
        if self.supply.center_capacity.is_empty() && n_centers > 0 {
            self.supply.center_capacity = vec![vec![DEFAULT_CENTER_CAPACITY; t]; n_centers];
        }
        if self.costs.open_cost.is_empty() && n_centers > 0 {
            self.costs.open_cost = vec![0.0; n_centers];
        }
        if self.epidemic.sigma.is_empty() {
            self.epidemic.sigma = vec![0.0; t];
        }
        if self.epidemic.init_itilde.is_empty() {
            self.epidemic.init_itilde = vec![0.0; j];
        }
        if self.beta0.is_empty() && self.epidemic.beta.len() == j {
            let topo = Topology::new(self);
            self.beta0 =
                topo.subregion_region.iter().map(|&g| self.epidemic.beta[g].first().copied().unwrap_or(0.0)).collect();
        }
        if self.costs.holding_1.is_empty() {
            self.costs.holding_1 = vec![0.0; j];
        }
        if self.costs.holding_2.is_empty() {
            self.costs.holding_2 = vec![0.0; n_sub];
        }
        if self.costs.holding_3.is_empty() {
            self.costs.holding_3 = vec![0.0; n_ph];
        }
    }

    /// Total sub-regional capacity of region `j` in period `t`.
    pub fn local_capacity_total(&self, topo: &Topology, j: usize, t: usize) -> f64 {
        topo.region_subregions[j].clone().map(|k| self.supply.local_capacity[k][t]).sum()
    }

    /// Total supplier capacity in period `t`.
    pub fn supply_total(&self, t: usize) -> f64 {
        self.supply.supplier_capacity.iter().map(|c| c[t]).sum()
    }
}
