//! Run configuration and dispatch to the library entry points.

use super::bundle::{read_plan, read_table, write_bundle, write_forecasts, write_sensitivity};
use super::io::{file_err, fmt_f64, parse_scenario, parse_timeseries, write_scenario, IoError};
use super::synthetic;
use crate::analysis::{
    assemble_report, run_sensitivity, EffectivenessEncoding, InfectionReference, ReportExtras, SensitivityParameter,
};
use crate::calibration::calibrate_effective_rates;
use crate::epidemic::simulate;
use crate::equity::plan_equity_report;
use crate::forecast::{forecast_interval, select_by_aic};
use crate::optimizer::{run_gini_decomposition, run_knapsack_decomposition};
use crate::oracle::{enumerate_optimum, GridSpec};
use crate::scenario::{check_full_feasibility, AllocationPlan, Formulation, Scenario, Topology};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{0}")]
    Domain(String),
}

impl HarnessError {
    /// 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn domain(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Domain(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Knapsack,
    Gini,
    Oracle,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Knapsack => "knapsack",
            Method::Gini => "gini",
            Method::Oracle => "oracle",
        }
    }

    fn formulation(&self) -> Formulation {
        match self {
            Method::Gini => Formulation::Gini,
            _ => Formulation::Knapsack,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Tiny,
    UniformRegional,
    MidSize,
    Scale,
    RandomSmall,
}

impl Preset {
    pub fn build(&self, seed: u64) -> Scenario {
        match self {
            Preset::Tiny => synthetic::tiny(seed),
            Preset::UniformRegional => synthetic::uniform_regional(seed),
            Preset::MidSize => synthetic::mid_size(seed),
            Preset::Scale => synthetic::scale(seed),
            Preset::RandomSmall => synthetic::random_small(seed),
        }
    }
}

/// `λ0, λa, λb, λreg`: `λa, λb` are the floor and Gini weights under the
/// Gini formulation and the floor and knapsack weights otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightOverride(pub [f64; 4]);

impl WeightOverride {
    fn apply(&self, s: &mut Scenario, formulation: Formulation) {
        let [l0, la, lb, lreg] = self.0;
        let w = &mut s.weights;
        w.lambda0 = l0;
        w.lambda_reg = lreg;
        match formulation {
            Formulation::Gini => (w.lambda11, w.lambda12) = (la, lb),
            Formulation::Knapsack => (w.lambda21, w.lambda22) = (la, lb),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Calibrate {
        scenario: PathBuf,
        timeseries: PathBuf,
        reduction: f64,
        underreporting: f64,
        interpolate: bool,
    },
    Optimize {
        scenario: PathBuf,
        method: Method,
        weights: Option<WeightOverride>,
        timeseries: Option<PathBuf>,
    },
    Simulate {
        scenario: PathBuf,
        plan: Option<PathBuf>,
        timeseries: Option<PathBuf>,
    },
    Forecast {
        rates: PathBuf,
        m_max: usize,
        horizon: usize,
        level: f64,
    },
    Validate {
        scenario: PathBuf,
        plan: Option<PathBuf>,
    },
    Sensitivity {
        scenario: PathBuf,
        parameters: Vec<SensitivityParameter>,
        multipliers: Vec<f64>,
        encoding: EffectivenessEncoding,
    },
    Gen {
        preset: Preset,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    /// Output directory, or the scenario file for `gen`.
    pub out: Option<PathBuf>,
    pub tolerance: f64,
}

fn out_dir(cfg: &RunConfig) -> Result<&Path, HarnessError> {
    cfg.out.as_deref().ok_or_else(|| HarnessError::Usage("--out is required".into()))
}

fn observed_total(path: &Path) -> Result<f64, HarnessError> {
    Ok(parse_timeseries(path)?.cases.iter().flatten().sum())
}

fn report_and_write(
    cfg: &RunConfig,
    s: &Scenario,
    method: &str,
    formulation: Formulation,
    plan: &AllocationPlan,
    traj: &crate::epidemic::Trajectory,
    mut extras: ReportExtras,
) -> Result<String, HarnessError> {
    let feas = check_full_feasibility(s, plan, traj, cfg.tolerance).map_err(domain)?;
    extras.feasible = Some(feas.feasible);
    extras.equity = Some(match extras.equity.take() {
        Some(e) => e,
        None => plan_equity_report(s, plan).map_err(domain)?,
    });
    let report = assemble_report(s, method, formulation, plan, traj, extras).map_err(domain)?;
    let dir = out_dir(cfg)?;
    write_bundle(dir, s, plan, traj, &report)?;
    let mut msg = format!(
        "{method}: infections {:.3}, vaccinations {:.3}, cost {:.3} of {:.3}, feasible {}",
        report.infections, report.vaccinations, report.cost.total, report.cost.budget, feas.feasible
    );
    for fam in feas.violated() {
        let _ = write!(
            msg,
            "\n  violated {} ({} rows, worst {:.3e} at {})",
            fam.family, fam.count, fam.worst_absolute, fam.location
        );
    }
    let _ = write!(msg, "\nbundle written to {}", dir.display());
    Ok(msg)
}

/// Runs one command. Returns a short human-readable summary.
pub fn dispatch(cfg: &RunConfig) -> Result<String, HarnessError> {
    match &cfg.command {
        Command::Gen { preset } => {
            let path = cfg.out.as_deref().ok_or_else(|| HarnessError::Usage("--out is required".into()))?;
            let s = preset.build(cfg.seed);
            write_scenario(path, &s)?;
            Ok(format!("scenario written to {}", path.display()))
        }
        Command::Validate { scenario, plan } => {
            let s = parse_scenario(scenario)?;
            let mut msg = format!("{}: valid scenario", scenario.display());
            if let Some(p) = plan {
                let plan = read_plan(p, &Topology::new(&s), s.horizon)?;
                let traj = simulate(&s, &plan).map_err(domain)?;
                let feas = check_full_feasibility(&s, &plan, &traj, cfg.tolerance).map_err(domain)?;
                if !feas.feasible {
                    let names: Vec<&str> = feas.violated().map(|f| f.family).collect();
                    return Err(HarnessError::Domain(format!("plan infeasible: {}", names.join(", "))));
                }
                msg.push_str("; plan feasible");
            }
            Ok(msg)
        }
        Command::Simulate { scenario, plan, timeseries } => {
            let s = parse_scenario(scenario)?;
            let plan = match plan {
                Some(p) => read_plan(p, &Topology::new(&s), s.horizon)?,
                None => AllocationPlan::zeros(&s),
            };
            let traj = simulate(&s, &plan).map_err(domain)?;
            let extras = ReportExtras {
                reference_cases: timeseries.as_deref().map(observed_total).transpose()?,
                ..Default::default()
            };
            report_and_write(cfg, &s, "simulate", Formulation::Knapsack, &plan, &traj, extras)
        }
        Command::Optimize { scenario, method, weights, timeseries } => {
            let mut s = parse_scenario(scenario)?;
            let formulation = method.formulation();
            if let Some(w) = weights {
                w.apply(&mut s, formulation);
            }
            let (plan, traj, mut extras) = match method {
                Method::Knapsack => {
                    let (plan, traj, d) = run_knapsack_decomposition(&s).map_err(domain)?;
                    (plan, traj, ReportExtras { diagnostics: Some(d), ..Default::default() })
                }
                Method::Gini => {
                    let (plan, traj, d, g) = run_gini_decomposition(&s).map_err(domain)?;
                    (plan, traj, ReportExtras { diagnostics: Some(d), equity: Some(g), ..Default::default() })
                }
                Method::Oracle => {
                    let r = enumerate_optimum(&s, &GridSpec::default(), formulation).map_err(domain)?;
                    (r.plan, r.trajectory, ReportExtras { oracle_gap: Some(0.0), ..Default::default() })
                }
            };
            extras.reference_cases = timeseries.as_deref().map(observed_total).transpose()?;
            report_and_write(cfg, &s, method.as_str(), formulation, &plan, &traj, extras)
        }
        Command::Sensitivity { scenario, parameters, multipliers, encoding } => {
            let s = parse_scenario(scenario)?;
            let dir = out_dir(cfg)?;
            std::fs::create_dir_all(dir).map_err(file_err(dir))?;
            let mut rows = Vec::new();
            for p in parameters {
                rows.extend(
                    run_sensitivity(&s, *p, multipliers, *encoding, InfectionReference::Baseline).map_err(domain)?,
                );
            }
            let path = dir.join("sensitivity.tsv");
            write_sensitivity(&path, &rows)?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            Ok(format!("{} rows ({failed} failed) written to {}", rows.len(), path.display()))
        }
        Command::Calibrate { scenario, timeseries, reduction, underreporting, interpolate } => {
            let s = parse_scenario(scenario)?;
            let mut obs = parse_timeseries(timeseries)?;
            let mut population = Vec::with_capacity(obs.regions.len());
            for r in &obs.regions {
                let j = s
                    .regions
                    .iter()
                    .position(|x| x == r)
                    .ok_or_else(|| HarnessError::Domain(format!("region `{r}` is not in the scenario")))?;
                population.push(s.epidemic.pop.region[j]);
            }
            obs.population = population;
            obs.underreporting = *underreporting;
            let mut rates = calibrate_effective_rates(&obs, &s.epidemic, *reduction).map_err(domain)?;
            let issues = rates.issues.len();
            if *interpolate {
                rates.interpolate_gaps(s.epidemic.gamma, &obs.population);
            }
            let dir = out_dir(cfg)?;
            std::fs::create_dir_all(dir).map_err(file_err(dir))?;
            let mut out = String::from("region\tperiod\tbeta\tbeta_vax\tr_effective\n");
            for (j, r) in obs.regions.iter().enumerate() {
                for t in 0..rates.beta[j].len() {
                    let f = |v: Option<f64>| v.map_or_else(|| "-".to_string(), fmt_f64);
                    let _ = writeln!(
                        out,
                        "{r}\t{t}\t{}\t{}\t{}",
                        f(rates.beta[j][t]),
                        f(rates.beta_vax[j][t]),
                        f(rates.r_effective[j][t])
                    );
                }
            }
            let path = dir.join("rates.tsv");
            std::fs::write(&path, out).map_err(file_err(&path))?;
            Ok(format!("rates for {} regions written to {} ({issues} issues)", obs.regions.len(), path.display()))
        }
        Command::Forecast { rates, m_max, horizon, level } => {
            if *m_max == 0 {
                return Err(HarnessError::Usage("--m-max must be at least 1".into()));
            }
            let (header, rows) = read_table(rates)?;
            if header.first().map(String::as_str) != Some("region") || !header.iter().any(|h| h == "beta") {
                return Err(HarnessError::Domain(format!(
                    "{}: expected a rates table with region and beta columns",
                    rates.display()
                )));
            }
            let col = header.iter().position(|h| h == "beta").unwrap();
            let mut series: Vec<(String, Vec<f64>)> = Vec::new();
            for (n, row) in rows.iter().enumerate() {
                let v: f64 = row.get(col).and_then(|f| f.parse().ok()).ok_or_else(|| {
                    HarnessError::Domain(format!("{}: line {}: missing or bad beta", rates.display(), n + 2))
                })?;
                match series.last_mut() {
                    Some((name, s)) if *name == row[0] => s.push(v),
                    _ => series.push((row[0].clone(), vec![v])),
                }
            }
            let mut items = Vec::new();
            for (name, y) in series {
                let fit = select_by_aic(&y, 1..=*m_max).map_err(|e| domain(format!("{name}: {e}")))?;
                let f = forecast_interval(&fit, *horizon, *level).map_err(domain)?;
                items.push((name, fit, f));
            }
            let dir = out_dir(cfg)?;
            std::fs::create_dir_all(dir).map_err(file_err(dir))?;
            let path = dir.join("forecast.tsv");
            write_forecasts(&path, &items)?;
            Ok(format!("forecasts for {} series written to {}", items.len(), path.display()))
        }
    }
}
