use super::{Scenario, ShapeError, Topology};
use serde::{Deserialize, Serialize};

/// Every decision of a vaccination and distribution plan, period-indexed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    /// Doses to susceptible people `[region][t]`.
    pub psi: Vec<Vec<f64>>,
    /// Doses to removed people `[region][t]`.
    pub xi: Vec<Vec<f64>>,
    /// Pharmacy doses to susceptible people `[subregion][t]`.
    pub phi: Vec<Vec<f64>>,
    /// Pharmacy doses to removed people `[subregion][t]`.
    pub omega: Vec<Vec<f64>>,
    /// Supplier to regional hub `[supplier][region][t]`.
    pub g1: Vec<Vec<Vec<f64>>>,
    /// Regional hub to sub-regional hub `[subregion][t]`.
    pub g2: Vec<Vec<f64>>,
    /// Sub-regional hub to pharmacy `[pharmacy][t]`.
    pub g3: Vec<Vec<f64>>,
    pub w1: Vec<Vec<f64>>,
    pub w2: Vec<Vec<f64>>,
    pub w3: Vec<Vec<f64>>,
    /// Center open flags `[center][t]`.
    pub x: Vec<Vec<bool>>,
    /// Infection-growth trigger `[region][t]`.
    pub upsilon_infection: Vec<Vec<bool>>,
    /// Demand-shortfall trigger `[region][t]`.
    pub upsilon_demand: Vec<Vec<bool>>,
    /// Smallest regional per-capita allocation per period.
    pub zeta: Vec<f64>,
    /// Smallest sub-regional per-capita allocation `[region][t]`.
    pub nu: Vec<Vec<f64>>,
}

impl AllocationPlan {
    pub fn zeros(scenario: &Scenario) -> Self {
        let topo = Topology::new(scenario);
        Self::zeros_for(&topo, scenario.horizon)
    }

    pub fn zeros_for(topo: &Topology, t: usize) -> Self {
        let m = |n: usize| vec![vec![0.0; t]; n];
        let b = |n: usize| vec![vec![false; t]; n];
        AllocationPlan {
            psi: m(topo.n_regions),
            xi: m(topo.n_regions),
            phi: m(topo.n_subregions),
            omega: m(topo.n_subregions),
            g1: vec![m(topo.n_regions); topo.n_suppliers],
            g2: m(topo.n_subregions),
            g3: m(topo.n_pharmacies),
            w1: m(topo.n_regions),
            w2: m(topo.n_subregions),
            w3: m(topo.n_pharmacies),
            x: b(topo.n_centers),
            upsilon_infection: b(topo.n_regions),
            upsilon_demand: b(topo.n_regions),
            zeta: vec![0.0; t],
            nu: m(topo.n_regions),
        }
    }

    pub fn horizon(&self) -> usize {
        self.zeta.len()
    }

    /// Total doses administered in region `j` at `t`.
    pub fn regional_doses(&self, j: usize, t: usize) -> f64 {
        self.psi[j][t] + self.xi[j][t]
    }

    /// Pharmacy doses in sub-region `k` at `t`.
    pub fn local_doses(&self, k: usize, t: usize) -> f64 {
        self.phi[k][t] + self.omega[k][t]
    }

    /// Doses given at mass vaccination centers in region `j` at `t`.
    pub fn center_doses(&self, topo: &Topology, j: usize, t: usize) -> f64 {
        let local: f64 = topo.region_subregions[j].clone().map(|k| self.local_doses(k, t)).sum();
        self.regional_doses(j, t) - local
    }

    pub fn total_doses(&self) -> f64 {
        self.psi.iter().chain(&self.xi).flatten().sum()
    }

    /// Number of closed-to-open transitions, counting an open first period.
    pub fn openings(&self) -> usize {
        self.x
            .iter()
            .map(|row| {
                let mut prev = false;
                row.iter()
                    .filter(|&&open| {
                        let opened = open && !prev;
                        prev = open;
                        opened
                    })
                    .count()
            })
            .sum()
    }

    /// Checks every array against the scenario's dimensions.
    pub fn check_shape(&self, topo: &Topology, t: usize) -> Result<(), ShapeError> {
        fn rows<T>(name: &str, v: &[Vec<T>], n: usize, t: usize) -> Result<(), ShapeError> {
            if v.len() != n {
                return Err(ShapeError::Length { field: name.into(), found: v.len(), expected: n });
            }
            for (i, row) in v.iter().enumerate() {
                if row.len() != t {
                    return Err(ShapeError::Length { field: format!("{name}[{i}]"), found: row.len(), expected: t });
                }
            }
            Ok(())
        }
        rows("psi", &self.psi, topo.n_regions, t)?;
        rows("xi", &self.xi, topo.n_regions, t)?;
        rows("phi", &self.phi, topo.n_subregions, t)?;
        rows("omega", &self.omega, topo.n_subregions, t)?;
        if self.g1.len() != topo.n_suppliers {
            return Err(ShapeError::Length { field: "g1".into(), found: self.g1.len(), expected: topo.n_suppliers });
        }
        for (i, g) in self.g1.iter().enumerate() {
            rows(&format!("g1[{i}]"), g, topo.n_regions, t)?;
        }
        rows("g2", &self.g2, topo.n_subregions, t)?;
        rows("g3", &self.g3, topo.n_pharmacies, t)?;
        rows("w1", &self.w1, topo.n_regions, t)?;
        rows("w2", &self.w2, topo.n_subregions, t)?;
        rows("w3", &self.w3, topo.n_pharmacies, t)?;
        rows("x", &self.x, topo.n_centers, t)?;
        rows("upsilon_infection", &self.upsilon_infection, topo.n_regions, t)?;
        rows("upsilon_demand", &self.upsilon_demand, topo.n_regions, t)?;
        rows("nu", &self.nu, topo.n_regions, t)?;
        if self.zeta.len() != t {
            return Err(ShapeError::Length { field: "zeta".into(), found: self.zeta.len(), expected: t });
        }
        Ok(())
    }
}
