//! Recovery of effective infection rates from reported cases and doses.

use crate::scenario::EpidemicParams;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("underreporting rate {0} must lie in [0, 1)")]
    Rate(f64),
    #[error("reduction {0} must lie in [0, 1]")]
    Reduction(f64),
    #[error("series shape mismatch: {0}")]
    Shape(String),
    #[error("negative observation {value} for region {region} period {period}")]
    Negative { region: usize, period: usize, value: f64 },
}

/// Reported cases and doses per region and period.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedSeries {
    pub regions: Vec<String>,
    /// `[region][period]`
    pub cases: Vec<Vec<f64>>,
    /// `[region][period]`
    pub doses: Vec<Vec<f64>>,
    pub population: Vec<f64>,
    pub underreporting: f64,
    /// Region and period pairs absent from the source data.
    pub gaps: Vec<(usize, usize)>,
}

impl ObservedSeries {
    pub fn periods(&self) -> usize {
        self.cases.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<(), CalibrationError> {
        let j = self.regions.len();
        if self.cases.len() != j || self.doses.len() != j || self.population.len() != j {
            return Err(CalibrationError::Shape(format!(
                "{j} regions, {} case rows, {} dose rows, {} populations",
                self.cases.len(),
                self.doses.len(),
                self.population.len()
            )));
        }
        let t = self.periods();
        for r in 0..j {
            if self.cases[r].len() != t || self.doses[r].len() != t {
                return Err(CalibrationError::Shape(format!("region {r} series length differs")));
            }
            for p in 0..t {
                for value in [self.cases[r][p], self.doses[r][p]] {
                    if !(value >= 0.0) {
                        return Err(CalibrationError::Negative { region: r, period: p, value });
                    }
                }
            }
        }
        if !(0.0..1.0).contains(&self.underreporting) {
            return Err(CalibrationError::Rate(self.underreporting));
        }
        Ok(())
    }
}

pub fn adjust_underreporting(cases: f64, rate: f64) -> Result<f64, CalibrationError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(CalibrationError::Rate(rate));
    }
    Ok(cases / (1.0 - rate))
}

/// Effective reproduction number as `β·γ·(1 − S/N)`.
pub fn effective_reproduction(beta: f64, gamma: f64, s: f64, n: f64) -> f64 {
    beta * gamma * (1.0 - s / n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueKind {
    /// No unique rate: the infection pressure vanished.
    Singular,
    /// The solved rate is negative; kept as is.
    NegativeRate,
    /// The period was missing from the input.
    Gap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CalibrationIssue {
    pub region: usize,
    pub period: usize,
    pub kind: IssueKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedRates {
    /// `[region][period]`; `None` where no rate could be recovered.
    pub beta: Vec<Vec<Option<f64>>>,
    pub beta_vax: Vec<Vec<Option<f64>>>,
    pub r_effective: Vec<Vec<Option<f64>>>,
    /// Reconstructed compartments `[region][0..=T]`.
    pub s: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub i: Vec<Vec<f64>>,
    pub issues: Vec<CalibrationIssue>,
    /// Vaccinated rate as a multiple of the unvaccinated rate.
    pub vax_multiplier: f64,
}

impl CalibratedRates {
    /// Fills missing rates by linear interpolation between the nearest
    /// recovered neighbours, holding the edge values outside them.
    pub fn interpolate_gaps(&mut self, gamma: f64, population: &[f64]) {
        for j in 0..self.beta.len() {
            let known: Vec<(usize, f64)> =
                self.beta[j].iter().enumerate().filter_map(|(t, b)| b.map(|b| (t, b))).collect();
            if known.is_empty() {
                continue;
            }
            for t in 0..self.beta[j].len() {
                if self.beta[j][t].is_some() {
                    continue;
                }
                let after = known.iter().position(|&(k, _)| k > t);
                let value = match after {
                    Some(0) => known[0].1,
                    None => known[known.len() - 1].1,
                    Some(p) => {
                        let (t0, b0) = known[p - 1];
                        let (t1, b1) = known[p];
                        b0 + (b1 - b0) * (t - t0) as f64 / (t1 - t0) as f64
                    }
                };
                self.beta[j][t] = Some(value);
                self.beta_vax[j][t] = Some(self.vax_multiplier * value);
                self.r_effective[j][t] = Some(effective_reproduction(value, gamma, self.s[j][t], population[j]));
            }
        }
    }

    /// Rates with missing entries replaced by zero.
    pub fn beta_filled(&self) -> Vec<Vec<f64>> {
        self.beta.iter().map(|r| r.iter().map(|b| b.unwrap_or(0.0)).collect()).collect()
    }

    pub fn beta_vax_filled(&self) -> Vec<Vec<f64>> {
        self.beta_vax.iter().map(|r| r.iter().map(|b| b.unwrap_or(0.0)).collect()).collect()
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting. Returns
/// `None` when a pivot falls below `1e-12` of the largest entry.
pub fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let eps = 1e-12 * scale;
    for c in 0..3 {
        let p = (c..3).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        if a[p][c].abs() < eps {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..3 {
            let f = a[r][c] / a[c][c];
            for k in c..3 {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = [0.0; 3];
    for c in (0..3).rev() {
        let mut v = b[c];
        for k in c + 1..3 {
            v -= a[c][k] * x[k];
        }
        x[c] = v / a[c][c];
    }
    Some(x)
}

/// Recovers `β` per region and period. Each period solves the 3×3 system
/// in `(β, S', V')` formed by the susceptible update, the case count and
/// the vaccinated update, seeded with one infected person. `reduction` is
/// the fractional protection of vaccinated people (`β₁ = (1 − reduction)·β`).
pub fn calibrate_effective_rates(
    obs: &ObservedSeries,
    params: &EpidemicParams,
    reduction: f64,
) -> Result<CalibratedRates, CalibrationError> {
    obs.validate()?;
    if !(0.0..=1.0).contains(&reduction) {
        return Err(CalibrationError::Reduction(reduction));
    }
    let m = 1.0 - reduction;
    let nj = obs.regions.len();
    let tt = obs.periods();
    let lag = params.dose_lag();
    let mu = params.mu;
    let gamma = params.gamma;
    let immune = if params.psi { params.gamma1 } else { 0.0 };
    let gaps: std::collections::BTreeSet<(usize, usize)> = obs.gaps.iter().copied().collect();

    let mut out = CalibratedRates {
        beta: vec![vec![None; tt]; nj],
        beta_vax: vec![vec![None; tt]; nj],
        r_effective: vec![vec![None; tt]; nj],
        s: vec![Vec::with_capacity(tt + 1); nj],
        v: vec![Vec::with_capacity(tt + 1); nj],
        i: vec![Vec::with_capacity(tt + 1); nj],
        issues: Vec::new(),
        vax_multiplier: m,
    };
    for j in 0..nj {
        let n = obs.population[j];
        let (mut s, mut v, mut i) = (n - 1.0, 0.0, 1.0);
        out.s[j].push(s);
        out.v[j].push(v);
        out.i[j].push(i);
        for t in 0..tt {
            let gap = gaps.contains(&(j, t));
            let cases = if gap { 0.0 } else { adjust_underreporting(obs.cases[j][t], obs.underreporting)? };
            let dose = if t >= lag { obs.doses[j][t - lag] } else { 0.0 };
            // Reinfection is linear in the unknown rate as well.
            let reinf = if t >= params.t_r {
                let p = t - params.t_r;
                params.sigma_at(t) * (out.s[j][p] + m * out.v[j][p]) * out.i[j][p]
            } else {
                0.0
            };
            let a = [[s * i - reinf, 1.0, 0.0], [s * i + m * v * i, 0.0, 0.0], [m * v * i, 0.0, 1.0]];
            let b = [(1.0 - mu) * s + mu * n - dose, cases, (1.0 - mu) * v + dose - immune * v];
            let (ns, nv) = match solve3(a, b) {
                Some([beta, ns, nv]) if !gap => {
                    if beta < 0.0 {
                        out.issues.push(CalibrationIssue { region: j, period: t, kind: IssueKind::NegativeRate });
                    }
                    out.beta[j][t] = Some(beta);
                    out.beta_vax[j][t] = Some(m * beta);
                    out.r_effective[j][t] = Some(effective_reproduction(beta, gamma, s, n));
                    (ns, nv)
                }
                _ => {
                    let kind = if gap { IssueKind::Gap } else { IssueKind::Singular };
                    out.issues.push(CalibrationIssue { region: j, period: t, kind });
                    (b[0], b[2])
                }
            };
            i = i - mu * i + cases - gamma * i;
            s = ns;
            v = nv;
            out.s[j].push(s);
            out.v[j].push(v);
            out.i[j].push(i);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn underreporting_examples() {
        assert_eq!(adjust_underreporting(100.0, 0.0).unwrap(), 100.0);
        assert_eq!(adjust_underreporting(100.0, 0.5).unwrap(), 200.0);
        assert!((adjust_underreporting(7.0, 0.3).unwrap() - 10.0).abs() < 1e-12);
        assert!(adjust_underreporting(1.0, 1.0).is_err());
    }

    #[test]
    fn reproduction_examples() {
        assert_eq!(effective_reproduction(3.0, 1.0, 10.0, 10.0), 0.0);
        assert_eq!(effective_reproduction(2.0, 1.0, 5.0, 10.0), 1.0);
    }

    #[test]
    fn solve3_matches_hand_solution() {
        let x = solve3([[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]], [3.0, 5.0, 5.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
        assert!(solve3([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]], [1.0, 0.0, 1.0]).is_none());
    }
}
