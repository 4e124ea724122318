//! Output bundle: plan.tsv, trajectory.tsv, ledger.tsv, equity.tsv,
//! diagnostics.txt and summary.txt. Floats carry 17 significant digits so
//! every table parses back to the values written.

use super::io::{file_err, fmt_f64, IoError};
use crate::analysis::{Report, SensitivityRow};
use crate::epidemic::{EpidemicState, Trajectory};
use crate::forecast::{Forecast, SarimaFit};
use crate::scenario::{AllocationPlan, Scenario, Topology};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const BUNDLE_FILES: [&str; 6] =
    ["plan.tsv", "trajectory.tsv", "ledger.tsv", "diagnostics.txt", "equity.tsv", "summary.txt"];

fn write(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(file_err(path))
}

fn flag(b: bool) -> String {
    fmt_f64(if b { 1.0 } else { 0.0 })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), fmt_f64)
}

/// Long-format plan: one `variable, index, period, value` row per entry.
/// Supplier shipments use the index `supplier/region`; `zeta` uses `-`.
pub fn plan_table(plan: &AllocationPlan) -> String {
    let mut out = String::from("variable\tindex\tperiod\tvalue\n");
    let mut rows = |name: &str, m: &[Vec<f64>]| {
        for (i, row) in m.iter().enumerate() {
            for (t, v) in row.iter().enumerate() {
                let _ = writeln!(out, "{name}\t{i}\t{t}\t{}", fmt_f64(*v));
            }
        }
    };
    rows("psi", &plan.psi);
    rows("xi", &plan.xi);
    rows("phi", &plan.phi);
    rows("omega", &plan.omega);
    rows("g2", &plan.g2);
    rows("g3", &plan.g3);
    rows("w1", &plan.w1);
    rows("w2", &plan.w2);
    rows("w3", &plan.w3);
    rows("nu", &plan.nu);
    for (name, m) in
        [("x", &plan.x), ("upsilon_infection", &plan.upsilon_infection), ("upsilon_demand", &plan.upsilon_demand)]
    {
        for (i, row) in m.iter().enumerate() {
            for (t, v) in row.iter().enumerate() {
                let _ = writeln!(out, "{name}\t{i}\t{t}\t{}", flag(*v));
            }
        }
    }
    for (i, by_region) in plan.g1.iter().enumerate() {
        for (j, row) in by_region.iter().enumerate() {
            for (t, v) in row.iter().enumerate() {
                let _ = writeln!(out, "g1\t{i}/{j}\t{t}\t{}", fmt_f64(*v));
            }
        }
    }
    for (t, v) in plan.zeta.iter().enumerate() {
        let _ = writeln!(out, "zeta\t-\t{t}\t{}", fmt_f64(*v));
    }
    out
}

/// Header and rows of a tab-separated table.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), IoError> {
    let text = std::fs::read_to_string(path).map_err(file_err(path))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| IoError::NoRecords { path: path.to_path_buf() })?;
    let header: Vec<String> = header.split('\t').map(str::to_string).collect();
    let rows = lines.map(|l| l.split('\t').map(str::to_string).collect()).collect();
    Ok((header, rows))
}

fn record_err(path: &Path, line: usize, message: impl Into<String>) -> IoError {
    IoError::Record { path: path.to_path_buf(), line: line as u64, message: message.into() }
}

fn num<T: std::str::FromStr>(path: &Path, line: usize, field: &str) -> Result<T, IoError> {
    field.parse().map_err(|_| record_err(path, line, format!("bad number `{field}`")))
}

/// Reads a plan written by [`plan_table`] for the given topology.
pub fn read_plan(path: &Path, topo: &Topology, horizon: usize) -> Result<AllocationPlan, IoError> {
    let (header, rows) = read_table(path)?;
    if header != ["variable", "index", "period", "value"] {
        return Err(record_err(path, 1, "expected header variable, index, period, value"));
    }
    let mut plan = AllocationPlan::zeros_for(topo, horizon);
    for (n, row) in rows.iter().enumerate() {
        let line = n + 2;
        if row.len() != 4 {
            return Err(record_err(path, line, "expected 4 fields"));
        }
        let t: usize = num(path, line, &row[2])?;
        let v: f64 = num(path, line, &row[3])?;
        let out_of_range = || record_err(path, line, format!("{} index {} period {t} out of range", row[0], row[1]));
        if t >= horizon {
            return Err(out_of_range());
        }
        let set_f = |m: &mut Vec<Vec<f64>>| -> Result<(), IoError> {
            let i: usize = num(path, line, &row[1])?;
            *m.get_mut(i).ok_or_else(out_of_range)?.get_mut(t).ok_or_else(out_of_range)? = v;
            Ok(())
        };
        match row[0].as_str() {
            "psi" => set_f(&mut plan.psi)?,
            "xi" => set_f(&mut plan.xi)?,
            "phi" => set_f(&mut plan.phi)?,
            "omega" => set_f(&mut plan.omega)?,
            "g2" => set_f(&mut plan.g2)?,
            "g3" => set_f(&mut plan.g3)?,
            "w1" => set_f(&mut plan.w1)?,
            "w2" => set_f(&mut plan.w2)?,
            "w3" => set_f(&mut plan.w3)?,
            "nu" => set_f(&mut plan.nu)?,
            name @ ("x" | "upsilon_infection" | "upsilon_demand") => {
                let i: usize = num(path, line, &row[1])?;
                let m = match name {
                    "x" => &mut plan.x,
                    "upsilon_infection" => &mut plan.upsilon_infection,
                    _ => &mut plan.upsilon_demand,
                };
                *m.get_mut(i).ok_or_else(out_of_range)?.get_mut(t).ok_or_else(out_of_range)? = v != 0.0;
            }
            "g1" => {
                let (i, j) = row[1].split_once('/').ok_or_else(out_of_range)?;
                let (i, j): (usize, usize) = (num(path, line, i)?, num(path, line, j)?);
                *plan.g1.get_mut(i).and_then(|r| r.get_mut(j)).and_then(|r| r.get_mut(t)).ok_or_else(out_of_range)? = v;
            }
            "zeta" => plan.zeta[t] = v,
            other => return Err(record_err(path, line, format!("unknown variable `{other}`"))),
        }
    }
    Ok(plan)
}

/// One row per region and period `0..=T`; the flow columns are `NaN` in
/// the final period, which has no decision.
pub fn trajectory_table(s: &Scenario, traj: &Trajectory) -> String {
    let mut out = String::from("region\tperiod\tS\tV\tI\tR\tnew_infections\treinfection\ttau\n");
    for (j, name) in s.regions.iter().enumerate() {
        for (t, st) in traj.states.iter().enumerate() {
            let flow = |m: &Vec<Vec<f64>>| fmt_f64(m.get(j).and_then(|r| r.get(t)).copied().unwrap_or(f64::NAN));
            let _ = writeln!(
                out,
                "{name}\t{t}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                fmt_f64(st.s[j]),
                fmt_f64(st.v[j]),
                fmt_f64(st.i[j]),
                fmt_f64(st.r[j]),
                flow(&traj.new_infections),
                flow(&traj.reinfection),
                flow(&traj.tau),
            );
        }
    }
    out
}

/// Reads a trajectory written by [`trajectory_table`].
pub fn read_trajectory(path: &Path, regions: usize) -> Result<Trajectory, IoError> {
    let (_, rows) = read_table(path)?;
    if regions == 0 || rows.len() % regions != 0 {
        return Err(record_err(path, 0, "row count is not a multiple of the region count"));
    }
    let states_len = rows.len() / regions;
    let mut states = vec![
        EpidemicState {
            s: vec![0.0; regions],
            v: vec![0.0; regions],
            i: vec![0.0; regions],
            r: vec![0.0; regions]
        };
        states_len
    ];
    let periods = states_len.saturating_sub(1);
    let mut flows =
        [vec![vec![0.0; periods]; regions], vec![vec![0.0; periods]; regions], vec![vec![0.0; periods]; regions]];
    for (n, row) in rows.iter().enumerate() {
        let line = n + 2;
        if row.len() != 9 {
            return Err(record_err(path, line, "expected 9 fields"));
        }
        let (j, t) = (n / states_len, n % states_len);
        let v: Vec<f64> = row[2..].iter().map(|f| num(path, line, f)).collect::<Result<_, _>>()?;
        let st = &mut states[t];
        (st.s[j], st.v[j], st.i[j], st.r[j]) = (v[0], v[1], v[2], v[3]);
        if t < periods {
            for (k, f) in flows.iter_mut().enumerate() {
                f[j][t] = v[4 + k];
            }
        }
    }
    let [new_infections, reinfection, tau] = flows;
    Ok(Trajectory { states, new_infections, reinfection, tau })
}

fn ledger_table(report: &Report) -> String {
    let mut out = String::from(
        "period\tadmin\tdose\ttransport_1\ttransport_2\ttransport_3\topening\tholding_1\tholding_2\tholding_3\ttotal\tcumulative\talpha\tattempts\ttail\n",
    );
    let mut cumulative = 0.0;
    for (t, p) in report.cost.periods.iter().enumerate() {
        cumulative += p.total();
        let rec = report.diagnostics.as_ref().and_then(|d| d.periods.iter().find(|r| r.period == t));
        let (alpha, attempts, tail) = rec.map_or(("-".into(), "-".into(), "-".into()), |r| {
            (r.alpha.to_string(), r.attempts.to_string(), u8::from(r.tail).to_string())
        });
        let _ = writeln!(
            out,
            "{t}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{alpha}\t{attempts}\t{tail}",
            fmt_f64(p.admin),
            fmt_f64(p.dose),
            fmt_f64(p.transport_1),
            fmt_f64(p.transport_2),
            fmt_f64(p.transport_3),
            fmt_f64(p.opening),
            fmt_f64(p.holding_1),
            fmt_f64(p.holding_2),
            fmt_f64(p.holding_3),
            fmt_f64(p.total()),
            fmt_f64(cumulative),
        );
    }
    out
}

fn equity_table(s: &Scenario, report: &Report) -> String {
    let mut out = String::from("region\tsubregion\tper_capita\tregion_gini\n");
    if let Some(eq) = &report.equity {
        for (j, r) in eq.regions.iter().enumerate() {
            for (k, u) in r.u.iter().enumerate() {
                let _ =
                    writeln!(out, "{}\t{}\t{}\t{}", s.regions[j], s.subregions_of[j][k], fmt_f64(*u), fmt_f64(r.gini));
            }
        }
    }
    out
}

fn diagnostics_text(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "method = {}", report.method);
    let Some(d) = &report.diagnostics else {
        let _ = writeln!(out, "decomposition = none");
        return out;
    };
    let _ = writeln!(out, "termination = {}", d.termination.as_str());
    let _ = writeln!(out, "stopped_at = {}", d.stopped_at.map_or("-".to_string(), |t| t.to_string()));
    let _ = writeln!(out, "backtracks = {}", d.backtracks);
    let _ = writeln!(out, "cross_checks = {}", d.cross_checks);
    let alphas: Vec<String> = d.alpha_history.iter().map(u8::to_string).collect();
    let _ = writeln!(out, "alpha_history = {}", alphas.join(","));
    let _ = writeln!(out, "final_cost = {}", fmt_f64(d.final_cost));
    let _ = writeln!(out, "budget = {}", fmt_f64(d.budget));
    let _ = writeln!(out, "optimality_gap_pct = {}", opt(d.optimality_gap));
    let _ = writeln!(out, "infection_gap_pct = {}", opt(d.infection_gap));
    let _ = writeln!(out, "optimality_residual = {}", opt(d.optimality_residual));
    for r in &d.periods {
        let costs: Vec<String> = r.unit_costs.iter().map(|c| fmt_f64(*c)).collect();
        let _ = writeln!(out, "unit_costs[{}] = {}", r.period, costs.join(","));
    }
    out
}

fn summary_text(report: &Report) -> String {
    let o = &report.objectives;
    let mut out = String::new();
    let _ = writeln!(out, "method = {}", report.method);
    let _ = writeln!(out, "scalarized = {}", fmt_f64(o.scalarized));
    let _ = writeln!(out, "infection_flux_total = {}", fmt_f64(o.infection_flux_total));
    let _ = writeln!(out, "equity_floor_sum = {}", fmt_f64(o.equity_floor_sum));
    let _ = writeln!(out, "gini_max = {}", fmt_f64(o.gini_max));
    let _ = writeln!(out, "knapsack_value = {}", fmt_f64(o.knapsack_value));
    let _ = writeln!(out, "infections = {}", fmt_f64(report.infections));
    let _ = writeln!(out, "vaccinations = {}", fmt_f64(report.vaccinations));
    let _ = writeln!(out, "centers_opened = {}", report.centers_opened);
    let _ = writeln!(out, "total_cost = {}", fmt_f64(report.cost.total));
    let _ = writeln!(out, "budget = {}", fmt_f64(report.cost.budget));
    if let Some(f) = report.feasible {
        let _ = writeln!(out, "feasible = {f}");
    }
    if let Some(a) = report.infections_averted {
        let _ = writeln!(out, "infections_averted = {}", fmt_f64(a));
    }
    if let Some(g) = report.oracle_gap {
        let _ = writeln!(out, "oracle_gap_pct = {}", fmt_f64(g));
    }
    if let Some(eq) = &report.equity {
        let _ = writeln!(out, "eta = {}", fmt_f64(eq.eta));
    }
    let zeta: Vec<String> = report.zeta.iter().map(|z| fmt_f64(*z)).collect();
    let _ = writeln!(out, "zeta = {}", zeta.join(","));
    if let Some(d) = &report.diagnostics {
        let _ = writeln!(out, "termination = {}", d.termination.as_str());
    }
    out
}

/// Writes the six bundle files into `dir`, creating it if needed.
pub fn write_bundle(
    dir: &Path,
    s: &Scenario,
    plan: &AllocationPlan,
    traj: &Trajectory,
    report: &Report,
) -> Result<Vec<PathBuf>, IoError> {
    std::fs::create_dir_all(dir).map_err(file_err(dir))?;
    let texts = [
        plan_table(plan),
        trajectory_table(s, traj),
        ledger_table(report),
        diagnostics_text(report),
        equity_table(s, report),
        summary_text(report),
    ];
    let mut paths = Vec::new();
    for (name, text) in BUNDLE_FILES.iter().zip(texts) {
        let p = dir.join(name);
        write(&p, &text)?;
        paths.push(p);
    }
    Ok(paths)
}

pub fn write_sensitivity(path: &Path, rows: &[SensitivityRow]) -> Result<(), IoError> {
    let mut out = String::from(
        "parameter\tmultiplier\tinfections\tinfections_change_pct\tvaccinations\tvaccinations_change_pct\tcenters_opened\terror\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.parameter,
            fmt_f64(r.multiplier),
            fmt_f64(r.infections),
            fmt_f64(r.infections_change_pct),
            fmt_f64(r.vaccinations),
            fmt_f64(r.vaccinations_change_pct),
            r.centers_opened,
            r.error.as_deref().unwrap_or("-").replace(['\t', '\n'], " "),
        );
    }
    write(path, &out)
}

/// Forecast rows for one labelled series each.
pub fn write_forecasts(path: &Path, items: &[(String, SarimaFit, Forecast)]) -> Result<(), IoError> {
    let mut out = String::from("series\torder\taic\tstep\tpoint\tlower\tupper\n");
    for (name, fit, f) in items {
        for h in 0..f.horizon {
            let _ = writeln!(
                out,
                "{name}\t{}\t{}\t{}\t{}\t{}\t{}",
                fit.order,
                fmt_f64(fit.aic),
                h + 1,
                fmt_f64(f.point[h]),
                fmt_f64(f.lower[h]),
                fmt_f64(f.upper[h]),
            );
        }
    }
    write(path, &out)
}
