//! Validation statistics, one-at-a-time sensitivity runs and run reports.

use crate::epidemic::Trajectory;
use crate::equity::GiniReport;
use crate::optimizer::{run_knapsack_decomposition, DecompositionDiagnostics};
use crate::scenario::{
    compute_cost, evaluate_objectives, AllocationPlan, CostLedger, Formulation, ObjectiveError, ObjectiveValues,
    Scenario, ShapeError,
};
use statrs::function::beta::beta_reg;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("paired series need equal lengths, found {0} and {1}")]
    Length(usize, usize),
    #[error("paired t-test needs at least 2 pairs, found {0}")]
    TooFew(usize),
    #[error("non-finite value in paired series")]
    NonFinite,
    #[error("multiplier {0} must be positive and finite")]
    Multiplier(f64),
    #[error("unknown sensitivity parameter `{0}`")]
    Parameter(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    pub t: f64,
    pub df: f64,
    /// Two-tailed.
    pub p: f64,
    /// Differences with zero spread but nonzero mean: `t` is infinite and
    /// `p` is reported as its limit 0.
    pub degenerate: bool,
}

/// Two-tailed paired t-test on `a − b`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::Length(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(AnalysisError::TooFew(n));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    let nf = n as f64;
    let df = nf - 1.0;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / df;
    if mean == 0.0 {
        return Ok(TTestResult { t: 0.0, df, p: 1.0, degenerate: false });
    }
    if var == 0.0 {
        return Ok(TTestResult { t: f64::INFINITY.copysign(mean), df, p: 0.0, degenerate: true });
    }
    let t = mean / (var / nf).sqrt();
    let p = beta_reg(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0);
    Ok(TTestResult { t, df, p, degenerate: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SensitivityParameter {
    Budget,
    Supply,
    InfectionRate,
    VaccineEffectiveness,
    Capacity,
    Demand,
}

impl SensitivityParameter {
    pub const ALL: [SensitivityParameter; 6] = [
        SensitivityParameter::Budget,
        SensitivityParameter::Supply,
        SensitivityParameter::InfectionRate,
        SensitivityParameter::VaccineEffectiveness,
        SensitivityParameter::Capacity,
        SensitivityParameter::Demand,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SensitivityParameter::Budget => "budget",
            SensitivityParameter::Supply => "supply",
            SensitivityParameter::InfectionRate => "infection_rate",
            SensitivityParameter::VaccineEffectiveness => "vaccine_effectiveness",
            SensitivityParameter::Capacity => "capacity",
            SensitivityParameter::Demand => "demand",
        }
    }
}

impl fmt::Display for SensitivityParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SensitivityParameter {
    type Err = AnalysisError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|p| p.as_str() == s).ok_or_else(|| AnalysisError::Parameter(s.to_string()))
    }
}

/// How a multiplier on vaccine effectiveness is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EffectivenessEncoding {
    /// Multiplies the vaccinated infection rate `β₁` directly, so a
    /// multiplier below 1 means a more effective vaccine.
    #[default]
    RatioScale,
    /// Multiplies the efficacy `1 − β₁/β`, so a multiplier above 1 means a
    /// more effective vaccine. Efficacy is capped at 1.
    EfficacyScale,
}

/// Scenario with one parameter scaled.
pub fn perturb(s: &Scenario, parameter: SensitivityParameter, m: f64, encoding: EffectivenessEncoding) -> Scenario {
    let mut out = s.clone();
    let scale = |rows: &mut Vec<Vec<f64>>| rows.iter_mut().flatten().for_each(|v| *v *= m);
    match parameter {
        SensitivityParameter::Budget => out.costs.budget *= m,
        SensitivityParameter::Supply => scale(&mut out.supply.supplier_capacity),
        SensitivityParameter::InfectionRate => {
            scale(&mut out.epidemic.beta);
            scale(&mut out.epidemic.beta_vax);
        }
        SensitivityParameter::VaccineEffectiveness => match encoding {
            EffectivenessEncoding::RatioScale => scale(&mut out.epidemic.beta_vax),
            EffectivenessEncoding::EfficacyScale => {
                for (bv, b) in out.epidemic.beta_vax.iter_mut().zip(&out.epidemic.beta) {
                    for (v, &base) in bv.iter_mut().zip(b) {
                        if base > 0.0 {
                            let efficacy = ((1.0 - *v / base) * m).min(1.0);
                            *v = base * (1.0 - efficacy);
                        }
                    }
                }
            }
        },
        SensitivityParameter::Capacity => {
            scale(&mut out.supply.local_capacity);
            scale(&mut out.supply.center_capacity);
        }
        SensitivityParameter::Demand => scale(&mut out.supply.demand),
    }
    out
}

/// Baseline for the infection change column.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InfectionReference {
    /// The unperturbed model run.
    #[default]
    Baseline,
    /// An externally observed total.
    Observed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRow {
    pub parameter: SensitivityParameter,
    pub multiplier: f64,
    pub infections: f64,
    pub vaccinations: f64,
    pub centers_opened: usize,
    pub infections_change_pct: f64,
    pub vaccinations_change_pct: f64,
    /// Optimizer failure for this row; the metrics are then NaN.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct RunMetrics {
    infections: f64,
    vaccinations: f64,
    centers: usize,
}

fn knapsack_metrics(s: &Scenario) -> Result<RunMetrics, String> {
    let (plan, traj, _) = run_knapsack_decomposition(s).map_err(|e| e.to_string())?;
    Ok(RunMetrics { infections: traj.total_infections(), vaccinations: plan.total_doses(), centers: plan.openings() })
}

fn pct(value: f64, base: f64) -> f64 {
    if base == 0.0 {
        if value == 0.0 {
            0.0
        } else {
            f64::NAN
        }
    } else {
        100.0 * (value - base) / base
    }
}

/// Reruns the knapsack decomposition once per multiplier with one
/// parameter scaled. Rows run on separate threads; the output order
/// follows `multipliers`. A failing run yields a flagged row.
pub fn run_sensitivity(
    s: &Scenario,
    parameter: SensitivityParameter,
    multipliers: &[f64],
    encoding: EffectivenessEncoding,
    reference: InfectionReference,
) -> Result<Vec<SensitivityRow>, AnalysisError> {
    if let Some(&m) = multipliers.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
        return Err(AnalysisError::Multiplier(m));
    }
    let runs: Vec<Result<RunMetrics, String>> = std::thread::scope(|scope| {
        let base = scope.spawn(|| knapsack_metrics(s));
        let handles: Vec<_> = multipliers
            .iter()
            .map(|&m| scope.spawn(move || knapsack_metrics(&perturb(s, parameter, m, encoding))))
            .collect();
        let mut out = vec![base.join().expect("sensitivity worker panicked")];
        out.extend(handles.into_iter().map(|h| h.join().expect("sensitivity worker panicked")));
        out
    });
    let base = runs[0].as_ref().ok().copied();
    let infection_ref = match reference {
        InfectionReference::Baseline => base.map_or(f64::NAN, |b| b.infections),
        InfectionReference::Observed(v) => v,
    };
    Ok(multipliers
        .iter()
        .zip(&runs[1..])
        .map(|(&multiplier, run)| match run {
            Ok(r) => SensitivityRow {
                parameter,
                multiplier,
                infections: r.infections,
                vaccinations: r.vaccinations,
                centers_opened: r.centers,
                infections_change_pct: pct(r.infections, infection_ref),
                vaccinations_change_pct: base.map_or(f64::NAN, |b| pct(r.vaccinations, b.vaccinations)),
                error: None,
            },
            Err(e) => SensitivityRow {
                parameter,
                multiplier,
                infections: f64::NAN,
                vaccinations: f64::NAN,
                centers_opened: 0,
                infections_change_pct: f64::NAN,
                vaccinations_change_pct: f64::NAN,
                error: Some(e.clone()),
            },
        })
        .collect())
}

/// Everything a run produced, ready to be written out.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub method: String,
    pub objectives: ObjectiveValues,
    pub infections: f64,
    pub vaccinations: f64,
    pub centers_opened: usize,
    /// Observed cases minus modelled infections, when observations exist.
    pub infections_averted: Option<f64>,
    pub cost: CostLedger,
    pub zeta: Vec<f64>,
    pub diagnostics: Option<DecompositionDiagnostics>,
    pub equity: Option<GiniReport>,
    pub oracle_gap: Option<f64>,
    /// Outcome of the full feasibility check, when run.
    pub feasible: Option<bool>,
}

/// Inputs to [`assemble_report`] beyond the plan itself.
#[derive(Debug, Clone, Default)]
pub struct ReportExtras {
    pub diagnostics: Option<DecompositionDiagnostics>,
    pub equity: Option<GiniReport>,
    pub oracle_gap: Option<f64>,
    pub feasible: Option<bool>,
    pub reference_cases: Option<f64>,
}

pub fn infections_averted(reference_cases: f64, model_cases: f64) -> f64 {
    reference_cases - model_cases
}

pub fn assemble_report(
    s: &Scenario,
    method: &str,
    formulation: Formulation,
    plan: &AllocationPlan,
    traj: &Trajectory,
    extras: ReportExtras,
) -> Result<Report, AnalysisError> {
    let objectives = evaluate_objectives(s, plan, traj, formulation)?;
    let infections = traj.total_infections();
    Ok(Report {
        method: method.to_string(),
        objectives,
        infections,
        vaccinations: plan.total_doses(),
        centers_opened: plan.openings(),
        infections_averted: extras.reference_cases.map(|r| infections_averted(r, infections)),
        cost: compute_cost(s, plan)?,
        zeta: plan.zeta.clone(),
        diagnostics: extras.diagnostics,
        equity: extras.equity,
        oracle_gap: extras.oracle_gap,
        feasible: extras.feasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_series() {
        let r = paired_t_test(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((r.t, r.p), (0.0, 1.0));
    }

    #[test]
    fn zero_mean_differences() {
        let a = [1.0, -1.0, 2.0, -2.0, 0.0];
        let r = paired_t_test(&a, &[0.0; 5]).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn constant_shift_is_degenerate() {
        let r = paired_t_test(&[2.0, 3.0, 4.0, 5.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(r.degenerate && r.p == 0.0 && r.t.is_infinite());
    }

    #[test]
    fn known_value() {
        // d = [1,2,3,4,5]: mean 3, sd √2.5, t = 3/√0.5 = 4.2426..., df 4.
        let r = paired_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5]).unwrap();
        assert!((r.t - 18.0_f64.sqrt()).abs() < 1e-12);
        // Two-sided Student t tail, 4 df, at 3√2 (scipy.stats.t.sf).
        assert!((r.p - 0.013235599563682695).abs() < 1e-10, "{}", r.p);
    }

    #[test]
    fn too_short() {
        assert_eq!(paired_t_test(&[1.0], &[2.0]), Err(AnalysisError::TooFew(1)));
    }

    #[test]
    fn parameter_names_round_trip() {
        for p in SensitivityParameter::ALL {
            assert_eq!(p.as_str().parse::<SensitivityParameter>().unwrap(), p);
        }
        assert!("beta".parse::<SensitivityParameter>().is_err());
    }
}
