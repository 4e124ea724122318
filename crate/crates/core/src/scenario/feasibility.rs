use super::{compute_cost, AllocationPlan, Scenario, ShapeError, Topology};
use crate::epidemic::{simulate, threshold, Trajectory};

/// Worst violation found within one constraint family.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyReport {
    pub family: &'static str,
    pub count: usize,
    pub worst_absolute: f64,
    pub worst_relative: f64,
    pub location: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub tolerance: f64,
    /// Every family, in a fixed order, including clean ones.
    pub families: Vec<FamilyReport>,
}

impl FeasibilityReport {
    pub fn family(&self, name: &str) -> Option<&FamilyReport> {
        self.families.iter().find(|f| f.family == name)
    }

    /// Families with at least one violation beyond tolerance.
    pub fn violated(&self) -> impl Iterator<Item = &FamilyReport> {
        self.families.iter().filter(|f| f.count > 0)
    }
}

pub const FAMILIES: [&str; 18] = [
    "nonnegativity",
    "trajectory",
    "state_nonnegativity",
    "triggers",
    "center_opening",
    "population",
    "local_capacity",
    "demand",
    "linking",
    "supplier",
    "hub_balance",
    "subhub_balance",
    "pharmacy_balance",
    "startup",
    "budget",
    "equity_floor",
    "subregion_floor",
    "epidemic_error",
];

struct Recorder {
    tol: f64,
    families: Vec<FamilyReport>,
}

impl Recorder {
    fn new(tol: f64) -> Self {
        Recorder {
            tol,
            families: FAMILIES
                .iter()
                .map(|&family| FamilyReport {
                    family,
                    count: 0,
                    worst_absolute: 0.0,
                    worst_relative: 0.0,
                    location: String::new(),
                })
                .collect(),
        }
    }

    /// Records `excess > 0` as a violation measured against `scale`.
    fn check(&mut self, family: &str, excess: f64, scale: f64, location: impl FnOnce() -> String) {
        if excess.is_nan() {
            self.hit(family, f64::INFINITY, f64::INFINITY, location());
            return;
        }
        if excess <= 0.0 {
            return;
        }
        let rel = excess / scale.abs().max(1.0);
        if rel > self.tol {
            self.hit(family, excess, rel, location());
        }
    }

    fn hit(&mut self, family: &str, abs: f64, rel: f64, location: String) {
        let f = self.families.iter_mut().find(|f| f.family == family).expect("known family");
        f.count += 1;
        if rel > f.worst_relative {
            f.worst_relative = rel;
            f.worst_absolute = abs;
            f.location = location;
        }
    }

    fn equal(&mut self, family: &str, lhs: f64, rhs: f64, scale: f64, location: impl FnOnce() -> String) {
        self.check(family, (lhs - rhs).abs(), scale, location);
    }
}

fn at_or_zero(row: &[f64], t: isize) -> f64 {
    if t < 0 {
        0.0
    } else {
        row.get(t as usize).copied().unwrap_or(0.0)
    }
}

/// Checks a plan and its trajectory against every constraint family of the
/// full model. Violations are measured relative to the magnitude of the
/// quantities involved; the plan is feasible when none exceeds `tol`.
pub fn check_full_feasibility(
    s: &Scenario,
    plan: &AllocationPlan,
    traj: &Trajectory,
    tol: f64,
) -> Result<FeasibilityReport, ShapeError> {
    let topo = Topology::new(s);
    let tt = s.horizon;
    plan.check_shape(&topo, tt)?;
    let mut rec = Recorder::new(tol);
    let e = &s.epidemic;
    let sp = &s.supply;
    let keep = 1.0 - sp.wastage;
    let l0 = sp.lead_center;

    // Sign constraints on every continuous decision.
    let nonneg: [(&str, &Vec<Vec<f64>>); 11] = [
        ("psi", &plan.psi),
        ("xi", &plan.xi),
        ("phi", &plan.phi),
        ("omega", &plan.omega),
        ("g2", &plan.g2),
        ("g3", &plan.g3),
        ("w1", &plan.w1),
        ("w2", &plan.w2),
        ("w3", &plan.w3),
        ("nu", &plan.nu),
        ("zeta", &vec![plan.zeta.clone()]),
    ];
    for (name, m) in nonneg {
        for (a, row) in m.iter().enumerate() {
            for (t, &v) in row.iter().enumerate() {
                rec.check("nonnegativity", -v, 1.0, || format!("{name}[{a}][{t}]"));
            }
        }
    }
    for (i, g) in plan.g1.iter().enumerate() {
        for (j, row) in g.iter().enumerate() {
            for (t, &v) in row.iter().enumerate() {
                rec.check("nonnegativity", -v, 1.0, || format!("g1[{i}][{j}][{t}]"));
            }
        }
    }

    // Epidemic recursion: the supplied trajectory must be the plan's.
    if traj.states.len() != tt + 1 || traj.new_infections.len() != topo.n_regions {
        rec.hit("trajectory", f64::INFINITY, f64::INFINITY, "trajectory length".into());
    } else {
        match simulate(s, plan) {
            Ok(sim) => {
                for t in 0..=tt {
                    for j in 0..topo.n_regions {
                        let n = e.pop.region[j];
                        let (a, b) = (&traj.states[t], &sim.states[t]);
                        for (c, x, y) in
                            [('S', a.s[j], b.s[j]), ('V', a.v[j], b.v[j]), ('I', a.i[j], b.i[j]), ('R', a.r[j], b.r[j])]
                        {
                            rec.equal("trajectory", x, y, n, || format!("{c}[{j}][{t}]"));
                            rec.check("state_nonnegativity", -x, n, || format!("{c}[{j}][{t}]"));
                        }
                        if t < tt {
                            rec.equal("trajectory", traj.new_infections[j][t], sim.new_infections[j][t], n, || {
                                format!("new_infections[{j}][{t}]")
                            });
                        }
                    }
                }
            }
            Err(err) => rec.hit("epidemic_error", f64::INFINITY, f64::INFINITY, err.to_string()),
        }
    }

    let ledger = compute_cost(s, plan)?;
    let budget = s.costs.budget;
    rec.check("budget", ledger.total - budget, budget, || "total cost".into());

    let lead = sp.pharmacy_lead();
    let startup = l0.min(lead);
    let mut cum = vec![0.0; topo.n_regions];
    for t in 0..tt {
        let cost_ratio = if budget > 0.0 { (ledger.cumulative_before(t) / budget).min(1.0) } else { 1.0 };
        for j in 0..topo.n_regions {
            let n = e.pop.region[j];
            let dose = plan.regional_doses(j, t);
            let (ui, ud) = (plan.upsilon_infection[j][t], plan.upsilon_demand[j][t]);

            // Triggers follow the trajectory.
            if t < l0 {
                if ui || ud {
                    rec.hit("triggers", 1.0, 1.0, format!("upsilon[{j}][{t}] before lead time"));
                }
            } else if traj.new_infections.len() == topo.n_regions && traj.new_infections[j].len() == tt {
                let flux = traj.new_infections[j][t];
                let tau = threshold(e, &traj.new_infections[j], j, t);
                let scale = flux.abs().max(tau.abs());
                if ui {
                    rec.check("triggers", tau - flux, scale, || format!("upsilon_infection[{j}][{t}] set"));
                } else {
                    rec.check("triggers", flux - tau, scale, || format!("upsilon_infection[{j}][{t}] clear"));
                }
                let cap = s.local_capacity_total(&topo, j, t);
                let d = sp.demand[j][t];
                if ud != (cap < d) {
                    rec.hit("triggers", (d - cap).abs(), 1.0, format!("upsilon_demand[{j}][{t}]"));
                }
            }

            // Center opening rules.
            let centers = topo.region_centers[j].clone();
            let open = centers.clone().filter(|&o| plan.x[o][t]).count();
            if open > 1 {
                rec.hit(
                    "center_opening",
                    (open - 1) as f64,
                    1.0,
                    format!("region {j} period {t}: {open} centers open"),
                );
            }
            if open > 0 && !(ui || ud) {
                rec.hit("center_opening", 1.0, 1.0, format!("region {j} period {t}: open without trigger"));
            }
            if open > 0 && t < l0 {
                rec.hit("center_opening", 1.0, 1.0, format!("region {j} period {t}: open before lead time"));
            }
            if !centers.is_empty() {
                let need = (ui as u8).max(ud as u8) as f64 - cost_ratio;
                rec.check("center_opening", need - open as f64, 1.0, || {
                    format!("region {j} period {t}: triggered but closed")
                });
            }

            // Population, demand and administration capacity.
            cum[j] += dose;
            rec.check("population", cum[j] - n, n, || format!("region {j} through period {t}"));
            rec.check("demand", dose - sp.demand[j][t], sp.demand[j][t], || format!("region {j} period {t}"));
            let center_cap: f64 = if t >= l0 {
                centers.clone().filter(|&o| plan.x[o][t - l0]).map(|o| sp.center_capacity[o][t]).sum::<f64>() * keep
            } else {
                0.0
            };
            let at_centers = plan.center_doses(&topo, j, t);
            rec.check("linking", -at_centers, dose, || format!("region {j} period {t}: pharmacies exceed total"));
            rec.check("linking", at_centers - center_cap, dose.max(center_cap), || {
                format!("region {j} period {t}: center doses exceed capacity")
            });
            if t < startup {
                rec.check("startup", dose.abs() + plan.w1[j][t].abs(), 1.0, || format!("region {j} period {t}"));
            }

            // Regional hub balance.
            let arrivals: f64 =
                (0..topo.n_suppliers).map(|i| at_or_zero(&plan.g1[i][j], t as isize - sp.lead_1 as isize)).sum();
            let outflow: f64 = topo.region_subregions[j].clone().map(|k| plan.g2[k][t]).sum();
            let prev = at_or_zero(&plan.w1[j], t as isize - 1);
            let lhs = prev + arrivals;
            let rhs = outflow + at_centers / keep + plan.w1[j][t];
            rec.equal("hub_balance", lhs, rhs, lhs.abs().max(rhs.abs()), || format!("region {j} period {t}"));

            // Equity floor.
            rec.check("equity_floor", plan.zeta[t] - dose / n, plan.zeta[t], || format!("region {j} period {t}"));
            for k in topo.region_subregions[j].clone() {
                let nk = e.pop.subregion[k];
                let local = plan.local_doses(k, t);
                rec.check("subregion_floor", plan.nu[j][t] - local / nk, plan.nu[j][t], || {
                    format!("sub-region {k} period {t}")
                });
            }
        }
        for k in 0..topo.n_subregions {
            let local = plan.local_doses(k, t);
            let cap = sp.local_capacity[k][t];
            rec.check("local_capacity", local - cap, cap, || format!("sub-region {k} period {t}"));

            let pharm = topo.subregion_pharmacies[k].clone();
            let lhs =
                at_or_zero(&plan.w2[k], t as isize - 1) + at_or_zero(&plan.g2[k], t as isize - sp.lead_2 as isize);
            let rhs = pharm.clone().map(|l| plan.g3[l][t]).sum::<f64>() + plan.w2[k][t];
            rec.equal("subhub_balance", lhs, rhs, lhs.abs().max(rhs.abs()), || format!("sub-region {k} period {t}"));

            let inflow: f64 = pharm
                .clone()
                .map(|l| {
                    at_or_zero(&plan.g3[l], t as isize - sp.lead_3 as isize) + at_or_zero(&plan.w3[l], t as isize - 1)
                })
                .sum();
            let lhs = keep * inflow;
            let rhs = local + pharm.map(|l| plan.w3[l][t]).sum::<f64>();
            rec.equal("pharmacy_balance", lhs, rhs, lhs.abs().max(rhs.abs()), || format!("sub-region {k} period {t}"));
        }
        for i in 0..topo.n_suppliers {
            let shipped: f64 = (0..topo.n_regions).map(|j| plan.g1[i][j][t]).sum();
            let cap = sp.supplier_capacity[i][t];
            rec.check("supplier", shipped - cap, cap, || format!("supplier {i} period {t}"));
        }
    }
    let feasible = rec.families.iter().all(|f| f.count == 0);
    Ok(FeasibilityReport { feasible, tolerance: tol, families: rec.families })
}
