use super::{Scenario, Topology};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationIssue {
    pub field: String,
    pub message: String,
    /// Size of the violation where one is meaningful, otherwise 0.
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, field: impl Into<String>, message: impl Into<String>, magnitude: f64) {
        self.issues.push(ValidationIssue { field: field.into(), message: message.into(), magnitude });
    }

    fn vector(&mut self, field: &str, v: &[f64], n: usize) -> bool {
        if v.len() != n {
            self.push(field, format!("has length {}, expected {n}", v.len()), 0.0);
            return false;
        }
        self.finite_nonneg(field, v);
        true
    }

    fn matrix(&mut self, field: &str, m: &[Vec<f64>], rows: usize, cols: usize) -> bool {
        if m.len() != rows {
            self.push(field, format!("has {} rows, expected {rows}", m.len()), 0.0);
            return false;
        }
        let mut ok = true;
        for (i, row) in m.iter().enumerate() {
            let f = format!("{field}[{i}]");
            ok &= self.vector(&f, row, cols);
        }
        ok
    }

    fn finite_nonneg(&mut self, field: &str, v: &[f64]) {
        for (i, &x) in v.iter().enumerate() {
            if !x.is_finite() {
                self.push(format!("{field}[{i}]"), "is not finite", 0.0);
            } else if x < 0.0 {
                self.push(format!("{field}[{i}]"), format!("is negative ({x})"), -x);
            }
        }
    }

    fn unit_interval(&mut self, field: &str, v: &[f64]) {
        for (i, &x) in v.iter().enumerate() {
            if x > 1.0 {
                self.push(format!("{field}[{i}]"), format!("exceeds 1 ({x})"), x - 1.0);
            }
        }
    }
}

fn unique_ids<'a>(report: &mut ValidationReport, field: &str, ids: impl Iterator<Item = &'a String>) {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            report.push(field, format!("duplicate id `{id}`"), 0.0);
        }
    }
}

/// Structural checks on a scenario. Every problem found is reported, with
/// the offending field path.
pub fn validate_scenario(s: &Scenario) -> ValidationReport {
    let mut r = ValidationReport::default();
    let t = s.horizon;
    let j = s.regions.len();
    if t == 0 {
        r.push("horizon", "must be at least 1", 0.0);
    }
    if j == 0 {
        r.push("regions", "must not be empty", 0.0);
    }
    if s.suppliers.is_empty() {
        r.push("suppliers", "must not be empty", 0.0);
    }
    if s.subregions_of.len() != j {
        r.push("subregions_of", format!("has {} entries, expected {j}", s.subregions_of.len()), 0.0);
        return r;
    }
    for (g, subs) in s.subregions_of.iter().enumerate() {
        if subs.is_empty() {
            r.push(format!("subregions_of[{g}]"), "region has no sub-regions", 0.0);
        }
    }
    let topo = Topology::new(s);
    let k = topo.n_subregions;
    if s.pharmacies_of.len() != k {
        r.push(
            "pharmacies_of",
            format!("has {} entries for {k} sub-regions (orphaned pharmacies or sub-regions)", s.pharmacies_of.len()),
            0.0,
        );
        return r;
    }
    if s.centers_of.len() != j {
        r.push("centers_of", format!("has {} entries, expected {j}", s.centers_of.len()), 0.0);
        return r;
    }
    let topo = Topology::new(s);
    let (l, o, m) = (topo.n_pharmacies, topo.n_centers, topo.n_suppliers);
    unique_ids(&mut r, "suppliers", s.suppliers.iter());
    unique_ids(&mut r, "regions", s.regions.iter());
    unique_ids(&mut r, "subregions_of", s.subregions_of.iter().flatten());
    unique_ids(&mut r, "pharmacies_of", s.pharmacies_of.iter().flatten());
    unique_ids(&mut r, "centers_of", s.centers_of.iter().flatten());

    let e = &s.epidemic;
    for (name, v) in [("epidemic.mu", e.mu), ("epidemic.gamma", e.gamma), ("epidemic.gamma1", e.gamma1)] {
        if !v.is_finite() || v < 0.0 {
            r.push(name, format!("must be a non-negative number, got {v}"), 0.0);
        }
    }
    if e.mu > 1.0 {
        r.push("epidemic.mu", "must not exceed 1", e.mu - 1.0);
    }
    if e.gamma1 <= 0.0 {
        r.push("epidemic.gamma1", "must be positive", 0.0);
    }
    if r.vector("epidemic.sigma", &e.sigma, t) {
        r.unit_interval("epidemic.sigma", &e.sigma);
    }
    r.matrix("epidemic.beta", &e.beta, j, t);
    r.matrix("epidemic.beta_vax", &e.beta_vax, j, t);
    let pop_ok =
        r.vector("epidemic.pop.region", &e.pop.region, j) & r.vector("epidemic.pop.subregion", &e.pop.subregion, k);
    if pop_ok {
        for g in 0..j {
            let nj = e.pop.region[g];
            let sum: f64 = topo.region_subregions[g].clone().map(|q| e.pop.subregion[q]).sum();
            let gap = (nj - sum).abs();
            if gap > 1e-9 * nj.abs().max(1.0) {
                r.push(
                    format!("epidemic.pop.subregion[{}]", s.regions[g]),
                    format!("sub-regional populations sum to {sum}, region has {nj}"),
                    gap,
                );
            }
        }
    }
    let init_ok = r.vector("epidemic.init_i", &e.init_i, j)
        & r.vector("epidemic.init_itilde", &e.init_itilde, j)
        & r.vector("epidemic.init_r", &e.init_r, j);
    if init_ok && pop_ok {
        for g in 0..j {
            let used = e.init_i[g] + e.init_r[g];
            if used > e.pop.region[g] {
                r.push(
                    format!("epidemic.init_i[{g}]"),
                    "initial infected plus removed exceed the population",
                    used - e.pop.region[g],
                );
            }
        }
    }

    let sp = &s.supply;
    r.matrix("supply.supplier_capacity", &sp.supplier_capacity, m, t);
    r.matrix("supply.local_capacity", &sp.local_capacity, k, t);
    r.matrix("supply.center_capacity", &sp.center_capacity, o, t);
    r.matrix("supply.demand", &sp.demand, j, t);
    if !(0.0..1.0).contains(&sp.wastage) {
        r.push("supply.wastage", format!("must lie in [0, 1), got {}", sp.wastage), 0.0);
    }

    let c = &s.costs;
    if !c.budget.is_finite() || c.budget < 0.0 {
        r.push("costs.budget", format!("must be a non-negative number, got {}", c.budget), 0.0);
    }
    r.matrix("costs.dose_cost", &c.dose_cost, m, t);
    r.matrix("costs.transport_1", &c.transport_1, m, j);
    r.vector("costs.transport_2", &c.transport_2, k);
    r.vector("costs.transport_3", &c.transport_3, l);
    r.vector("costs.holding_1", &c.holding_1, j);
    r.vector("costs.holding_2", &c.holding_2, k);
    r.vector("costs.holding_3", &c.holding_3, l);
    r.vector("costs.open_cost", &c.open_cost, o);
    r.matrix("costs.admin_cost", &c.admin_cost, j, t);

    if r.vector("svi", &s.svi, k) {
        r.unit_interval("svi", &s.svi);
    }
    r.vector("beta0", &s.beta0, k);
    if r.vector("access", &s.access, j) {
        r.unit_interval("access", &s.access);
    }
    for (name, v) in [
        ("weights.lambda0", s.weights.lambda0),
        ("weights.lambda11", s.weights.lambda11),
        ("weights.lambda12", s.weights.lambda12),
        ("weights.lambda21", s.weights.lambda21),
        ("weights.lambda22", s.weights.lambda22),
        ("weights.lambda_reg", s.weights.lambda_reg),
    ] {
        if !v.is_finite() {
            r.push(name, "is not finite", 0.0);
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synthetic::{mid_size, tiny};

    #[test]
    fn generated_scenarios_are_valid() {
        assert!(validate_scenario(&tiny(101)).is_valid());
        assert!(validate_scenario(&mid_size(7)).is_valid());
    }

    #[test]
    fn reports_every_problem_with_its_path() {
        let mut s = tiny(101);
        s.svi[0] = 1.5;
        s.epidemic.gamma = f64::NAN;
        s.suppliers.push(s.suppliers[0].clone());
        s.supply.demand[0][0] = -3.0;
        let r = validate_scenario(&s);
        let fields: Vec<&str> = r.issues.iter().map(|i| i.field.as_str()).collect();
        assert!(fields.contains(&"svi[0]"), "{fields:?}");
        assert!(fields.contains(&"suppliers"), "{fields:?}");
        assert!(fields.iter().any(|f| f.starts_with("supply.demand[0]")), "{fields:?}");
        assert!(fields.iter().any(|f| f.contains("gamma")), "{fields:?}");
        let neg = r.issues.iter().find(|i| i.field.starts_with("supply.demand[0]")).unwrap();
        assert_eq!(neg.magnitude, 3.0);
    }

    #[test]
    fn orphaned_pharmacies_stop_validation() {
        let mut s = tiny(101);
        s.pharmacies_of.pop();
        let r = validate_scenario(&s);
        assert_eq!(r.issues.len(), 1);
        assert_eq!(r.issues[0].field, "pharmacies_of");
    }
}
