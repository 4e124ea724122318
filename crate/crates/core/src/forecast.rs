//! Seasonal ARIMA fitted by conditional sum of squares, AIC order search
//! and Gaussian forecast intervals.

use statrs::distribution::{ContinuousCDF, Normal};
use std::ops::RangeInclusive;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForecastError {
    #[error("series too short: need more than {needed} values, found {found}")]
    TooShort { needed: usize, found: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("seasonal period must be at least 1")]
    Period,
    #[error("forecast horizon must be at least 1")]
    Horizon,
    #[error("interval level {0} must lie in (0, 1)")]
    Level(f64),
    #[error("no candidate order could be fitted")]
    AllFailed,
    #[error("initial values: expected {expected}, found {found}")]
    InitialValues { expected: usize, found: usize },
}

/// `(p,d,q)×(P,D,Q)_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SarimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub sp: usize,
    pub sd: usize,
    pub sq: usize,
    pub m: usize,
}

impl SarimaOrder {
    pub fn new(p: usize, d: usize, q: usize, sp: usize, sd: usize, sq: usize, m: usize) -> Self {
        SarimaOrder { p, d, q, sp, sd, sq, m }
    }

    pub fn coefficient_count(&self) -> usize {
        self.p + self.q + self.sp + self.sq
    }

    /// Values consumed by differencing.
    pub fn differencing_loss(&self) -> usize {
        self.d + self.sd * self.m
    }
}

impl std::fmt::Display for SarimaOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})x({},{},{})_{}", self.p, self.d, self.q, self.sp, self.sd, self.sq, self.m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SarimaFit {
    pub order: SarimaOrder,
    /// `φ`, with `φ(B) = 1 − φ₁B − …`.
    pub ar: Vec<f64>,
    /// `θ`, with `θ(B) = 1 + θ₁B + …`.
    pub ma: Vec<f64>,
    pub seasonal_ar: Vec<f64>,
    pub seasonal_ma: Vec<f64>,
    pub sigma2: f64,
    pub sse: f64,
    /// Gaussian log-likelihood evaluated at the CSS estimate.
    pub log_likelihood: f64,
    pub aic: f64,
    /// AIC of the starting values before refinement.
    pub initial_aic: f64,
    pub residuals: Vec<f64>,
    pub converged: bool,
    /// The series the model was fitted to.
    pub series: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub horizon: usize,
    pub level: f64,
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

fn check_finite(series: &[f64]) -> Result<(), ForecastError> {
    match series.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(ForecastError::NonFinite(i)),
        None => Ok(()),
    }
}

/// Applies `(1−B)^d (1−B^m)^D`.
pub fn seasonal_difference(series: &[f64], d: usize, sd: usize, m: usize) -> Result<Vec<f64>, ForecastError> {
    if m == 0 {
        return Err(ForecastError::Period);
    }
    check_finite(series)?;
    let loss = d + sd * m;
    if series.len() <= loss {
        return Err(ForecastError::TooShort { needed: loss, found: series.len() });
    }
    let mut w = series.to_vec();
    for _ in 0..d {
        w = w.windows(2).map(|p| p[1] - p[0]).collect();
    }
    for _ in 0..sd {
        w = (m..w.len()).map(|i| w[i] - w[i - m]).collect();
    }
    Ok(w)
}

/// Initial values needed to undo [`seasonal_difference`]: the first value
/// of each intermediate series, outermost seasonal stage first.
pub fn difference_heads(series: &[f64], d: usize, sd: usize, m: usize) -> Result<Vec<Vec<f64>>, ForecastError> {
    seasonal_difference(series, d, sd, m)?;
    let mut heads = Vec::new();
    let mut w = series.to_vec();
    for _ in 0..d {
        heads.push(vec![w[0]]);
        w = w.windows(2).map(|p| p[1] - p[0]).collect();
    }
    for _ in 0..sd {
        heads.push(w[..m].to_vec());
        w = (m..w.len()).map(|i| w[i] - w[i - m]).collect();
    }
    heads.reverse();
    Ok(heads)
}

/// Inverse of [`seasonal_difference`] given [`difference_heads`].
pub fn undifference(
    diffed: &[f64],
    heads: &[Vec<f64>],
    d: usize,
    sd: usize,
    m: usize,
) -> Result<Vec<f64>, ForecastError> {
    if heads.len() != d + sd {
        return Err(ForecastError::InitialValues { expected: d + sd, found: heads.len() });
    }
    let mut w = diffed.to_vec();
    for (stage, head) in heads.iter().enumerate() {
        let lag = if stage < sd { m } else { 1 };
        if head.len() != lag {
            return Err(ForecastError::InitialValues { expected: lag, found: head.len() });
        }
        let mut out = head.clone();
        for (i, v) in w.iter().enumerate() {
            out.push(v + out[i]);
        }
        w = out;
    }
    Ok(w)
}

/// Multiplies two polynomials given by coefficient vectors (index = power).
fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `φ(B)Φ(B^m)` as `[1, −a₁, −a₂, …]`.
fn ar_poly(ar: &[f64], sar: &[f64], m: usize) -> Vec<f64> {
    let mut a = vec![1.0];
    a.extend(ar.iter().map(|c| -c));
    let mut s = vec![0.0; sar.len() * m + 1];
    s[0] = 1.0;
    for (i, c) in sar.iter().enumerate() {
        s[(i + 1) * m] = -c;
    }
    poly_mul(&a, &s)
}

/// `θ(B)Θ(B^m)` as `[1, c₁, c₂, …]`.
fn ma_poly(ma: &[f64], sma: &[f64], m: usize) -> Vec<f64> {
    let mut a = vec![1.0];
    a.extend_from_slice(ma);
    let mut s = vec![0.0; sma.len() * m + 1];
    s[0] = 1.0;
    for (i, c) in sma.iter().enumerate() {
        s[(i + 1) * m] = *c;
    }
    poly_mul(&a, &s)
}

/// Conditional residuals of the differenced series, starting once every
/// autoregressive lag is observed; earlier residuals are taken as zero.
fn css_residuals(w: &[f64], arp: &[f64], map: &[f64]) -> Vec<f64> {
    let start = arp.len() - 1;
    let mut e = vec![0.0; w.len()];
    for t in start..w.len() {
        let mut v = w[t];
        for (i, a) in arp.iter().enumerate().skip(1) {
            v += a * w[t - i];
        }
        for (i, c) in map.iter().enumerate().skip(1) {
            if t >= i + start {
                v -= c * e[t - i];
            }
        }
        e[t] = v;
    }
    e.split_off(start)
}

struct Params<'a> {
    order: &'a SarimaOrder,
}

impl Params<'_> {
    fn split<'b>(&self, x: &'b [f64]) -> (&'b [f64], &'b [f64], &'b [f64], &'b [f64]) {
        let o = self.order;
        let (ar, rest) = x.split_at(o.p);
        let (ma, rest) = rest.split_at(o.q);
        let (sar, sma) = rest.split_at(o.sp);
        (ar, ma, sar, sma)
    }

    fn sse(&self, w: &[f64], x: &[f64]) -> f64 {
        if x.iter().any(|c| !(c.abs() < 1.0)) {
            return f64::INFINITY;
        }
        let (ar, ma, sar, sma) = self.split(x);
        let e = css_residuals(w, &ar_poly(ar, sar, self.order.m), &ma_poly(ma, sma, self.order.m));
        e.iter().map(|v| v * v).sum()
    }
}

/// Least squares through the normal equations, with a tiny ridge so that
/// collinear regressors still give an answer.
fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let k = rows.first().map_or(0, Vec::len);
    let mut a = vec![vec![0.0; k + 1]; k];
    for (r, &yv) in rows.iter().zip(y) {
        for i in 0..k {
            for j in 0..k {
                a[i][j] += r[i] * r[j];
            }
            a[i][k] += r[i] * yv;
        }
    }
    let trace: f64 = (0..k).map(|i| a[i][i]).sum();
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += 1e-8 * trace.max(1e-300);
    }
    for c in 0..k {
        let p = (c..k).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, p);
        if a[c][c].abs() < 1e-300 {
            continue;
        }
        for r in 0..k {
            if r != c {
                let f = a[r][c] / a[c][c];
                for j in c..=k {
                    a[r][j] -= f * a[c][j];
                }
            }
        }
    }
    (0..k).map(|i| if a[i][i].abs() < 1e-300 { 0.0 } else { a[i][k] / a[i][i] }).collect()
}

/// Hannan–Rissanen start: residuals of a long autoregression stand in for
/// the innovations, then one regression on lagged values and residuals.
fn hannan_rissanen(w: &[f64], o: &SarimaOrder) -> Vec<f64> {
    let k = o.coefficient_count();
    if k == 0 {
        return Vec::new();
    }
    let n = w.len();
    let long = (o.p + o.sp * o.m + o.q + o.sq * o.m + 2).min(n / 3).max(1);
    let mut ehat = vec![0.0; n];
    if o.q + o.sq > 0 && n > 2 * long {
        let rows: Vec<Vec<f64>> = (long..n).map(|t| (1..=long).map(|i| w[t - i]).collect()).collect();
        let phi = least_squares(&rows, &w[long..]);
        for t in long..n {
            ehat[t] = w[t] - (1..=long).map(|i| phi[i - 1] * w[t - i]).sum::<f64>();
        }
    }
    let lags: Vec<(bool, usize)> = (1..=o.p)
        .map(|i| (false, i))
        .chain((1..=o.q).map(|i| (true, i)))
        .chain((1..=o.sp).map(|i| (false, i * o.m)))
        .chain((1..=o.sq).map(|i| (true, i * o.m)))
        .collect();
    let start = lags.iter().map(|&(_, l)| l).max().unwrap_or(0).max(if o.q + o.sq > 0 { long } else { 0 });
    if start + 2 >= n {
        return vec![0.0; k];
    }
    let rows: Vec<Vec<f64>> =
        (start..n).map(|t| lags.iter().map(|&(is_e, l)| if is_e { ehat[t - l] } else { w[t - l] }).collect()).collect();
    least_squares(&rows, &w[start..]).into_iter().map(|c| c.clamp(-0.95, 0.95)).collect()
}

/// Nelder–Mead minimization. Never returns a point worse than `x0`.
/// Returns the best point, its value and whether the simplex collapsed
/// within the iteration budget.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    step: f64,
    max_iter: usize,
    tol: f64,
) -> (Vec<f64>, f64, bool) {
    let n = x0.len();
    let f0 = f(x0);
    if n == 0 {
        return (Vec::new(), f0, true);
    }
    let mut pts: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), f0)];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += if x[i] + step < 1.0 { step } else { -step };
        let v = f(&x);
        pts.push((x, v));
    }
    let mut converged = false;
    for _ in 0..max_iter {
        pts.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (pts[0].1, pts[n].1);
        let spread = pts
            .iter()
            .skip(1)
            .flat_map(|(x, _)| x.iter().zip(&pts[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (worst - best).abs() <= tol * (best.abs() + tol) && spread < 1e-8 {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|i| pts[..n].iter().map(|(x, _)| x[i]).sum::<f64>() / n as f64).collect();
        let along =
            |coef: f64| -> Vec<f64> { (0..n).map(|i| centroid[i] + coef * (pts[n].0[i] - centroid[i])).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < pts[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            pts[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < pts[n - 1].1 {
            pts[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < pts[n].1 {
                let x = along(-0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = f(&x);
                (x, v)
            };
            if fc < pts[n].1.min(fr) {
                pts[n] = (xc, fc);
            } else {
                let x0 = pts[0].0.clone();
                for p in pts.iter_mut().skip(1) {
                    let x: Vec<f64> = p.0.iter().zip(&x0).map(|(a, b)| b + 0.5 * (a - b)).collect();
                    let v = f(&x);
                    *p = (x, v);
                }
            }
        }
    }
    pts.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, v) = pts.swap_remove(0);
    if v <= f0 {
        (x, v, converged)
    } else {
        (x0.to_vec(), f0, converged)
    }
}

/// `n·ln(SSE/n) + 2k`, with `k` the coefficient count plus one.
pub fn aic(sse: f64, n: usize, coefficients: usize) -> f64 {
    let k = (coefficients + 1) as f64;
    if sse <= 0.0 {
        return f64::NEG_INFINITY;
    }
    n as f64 * (sse / n as f64).ln() + 2.0 * k
}

pub fn fit_sarima(series: &[f64], order: SarimaOrder) -> Result<SarimaFit, ForecastError> {
    let w = seasonal_difference(series, order.d, order.sd, order.m)?;
    let k = order.coefficient_count();
    let lost = order.p + order.sp * order.m;
    let needed = (3 * k).max(lost + 1).max(2);
    if w.len() < needed || w.len() <= lost {
        return Err(ForecastError::TooShort { needed: needed + order.differencing_loss(), found: series.len() });
    }
    let params = Params { order: &order };
    let x0 = hannan_rissanen(&w, &order);
    let sse0 = params.sse(&w, &x0);
    let (x, sse, converged) = nelder_mead(|x| params.sse(&w, x), &x0, 0.1, 2000 * k.max(1), 1e-12);
    let (ar, ma, sar, sma) = params.split(&x);
    let residuals = css_residuals(&w, &ar_poly(ar, sar, order.m), &ma_poly(ma, sma, order.m));
    let n = residuals.len();
    let sigma2 = sse / n as f64;
    let log_likelihood =
        if sigma2 > 0.0 { -0.5 * n as f64 * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0) } else { f64::INFINITY };
    Ok(SarimaFit {
        order,
        ar: ar.to_vec(),
        ma: ma.to_vec(),
        seasonal_ar: sar.to_vec(),
        seasonal_ma: sma.to_vec(),
        sigma2,
        sse,
        log_likelihood,
        aic: aic(sse, n, k),
        initial_aic: aic(sse0, n, k),
        residuals,
        converged,
        series: series.to_vec(),
    })
}

/// Every order of the search: `(p,q,P,D,Q) ∈ {0,1}⁵`, `d = 1`, `m` in range.
pub fn grid_candidates(m_range: RangeInclusive<usize>) -> Vec<SarimaOrder> {
    let mut out = Vec::new();
    for m in m_range {
        for p in 0..2 {
            for q in 0..2 {
                for sp in 0..2 {
                    for sd in 0..2 {
                        for sq in 0..2 {
                            out.push(SarimaOrder::new(p, 1, q, sp, sd, sq, m));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Orders compared by AIC, then coefficient count, seasonal period,
/// seasonal differencing and the remaining orders.
fn rank(f: &SarimaFit) -> (f64, usize, usize, usize, [usize; 4]) {
    let o = f.order;
    (f.aic, o.coefficient_count(), o.m, o.sd, [o.p, o.q, o.sp, o.sq])
}

pub fn select_by_aic(series: &[f64], m_range: RangeInclusive<usize>) -> Result<SarimaFit, ForecastError> {
    if *m_range.start() == 0 {
        return Err(ForecastError::Period);
    }
    let mut best: Option<SarimaFit> = None;
    for order in grid_candidates(m_range) {
        let Ok(fit) = fit_sarima(series, order) else { continue };
        let better = match &best {
            None => true,
            Some(b) => {
                let (x, y) = (rank(&fit), rank(b));
                x.0.total_cmp(&y.0)
                    .then(x.1.cmp(&y.1))
                    .then(x.2.cmp(&y.2))
                    .then(x.3.cmp(&y.3))
                    .then(x.4.cmp(&y.4))
                    .is_lt()
            }
        };
        if better {
            best = Some(fit);
        }
    }
    best.ok_or(ForecastError::AllFailed)
}

/// Recursive point forecasts with `point ± z·σ_h` bounds, where `σ_h²`
/// accumulates the squared ψ-weights of the full model, differencing
/// included.
pub fn forecast_interval(fit: &SarimaFit, h: usize, level: f64) -> Result<Forecast, ForecastError> {
    if h == 0 {
        return Err(ForecastError::Horizon);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(ForecastError::Level(level));
    }
    let o = fit.order;
    let mut full = ar_poly(&fit.ar, &fit.seasonal_ar, o.m);
    for _ in 0..o.d {
        full = poly_mul(&full, &[1.0, -1.0]);
    }
    for _ in 0..o.sd {
        let mut s = vec![0.0; o.m + 1];
        s[0] = 1.0;
        s[o.m] = -1.0;
        full = poly_mul(&full, &s);
    }
    let ma = ma_poly(&fit.ma, &fit.seasonal_ma, o.m);

    let y = &fit.series;
    let n = y.len();
    // Residuals aligned with the original series; zero where unavailable.
    let mut e = vec![0.0; n + h];
    let offset = n - fit.residuals.len();
    e[offset..n].copy_from_slice(&fit.residuals);
    let mut ext = y.clone();
    for t in n..n + h {
        let mut v = 0.0;
        for (i, a) in full.iter().enumerate().skip(1) {
            if t >= i {
                v -= a * ext[t - i];
            }
        }
        for (i, c) in ma.iter().enumerate().skip(1) {
            if t >= i {
                v += c * e[t - i];
            }
        }
        ext.push(v);
    }

    let mut psi = vec![0.0; h];
    psi[0] = 1.0;
    for j in 1..h {
        let mut v = ma.get(j).copied().unwrap_or(0.0);
        for i in 1..=j.min(full.len() - 1) {
            v -= full[i] * psi[j - i];
        }
        psi[j] = v;
    }
    let z = Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(0.5 + level / 2.0);
    let mut acc = 0.0;
    let mut lower = Vec::with_capacity(h);
    let mut upper = Vec::with_capacity(h);
    for j in 0..h {
        acc += psi[j] * psi[j];
        let half = z * (fit.sigma2.max(0.0) * acc).sqrt();
        lower.push(ext[n + j] - half);
        upper.push(ext[n + j] + half);
    }
    Ok(Forecast { horizon: h, level, point: ext[n..].to_vec(), lower, upper })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn difference_examples() {
        assert_eq!(seasonal_difference(&[1.0, 2.0, 4.0, 7.0], 1, 0, 1).unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(seasonal_difference(&[3.0; 5], 1, 0, 1).unwrap().iter().all(|&v| v == 0.0));
        let rep = [1.0, 5.0, 2.0, 1.0, 5.0, 2.0, 1.0, 5.0];
        assert!(seasonal_difference(&rep, 0, 1, 3).unwrap().iter().all(|&v| v == 0.0));
        assert!(seasonal_difference(&[1.0], 1, 0, 1).is_err());
    }

    #[test]
    fn undifference_inverts() {
        let y = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0];
        let w = seasonal_difference(&y, 1, 1, 3).unwrap();
        let heads = difference_heads(&y, 1, 1, 3).unwrap();
        assert_eq!(undifference(&w, &heads, 1, 1, 3).unwrap(), y.to_vec());
    }

    #[test]
    fn z_for_95_percent() {
        let fit = fit_sarima(&[1.0, 2.0, 2.5, 4.0, 4.2, 6.0, 6.5, 8.0], SarimaOrder::new(0, 1, 0, 0, 0, 0, 1)).unwrap();
        let f = forecast_interval(&fit, 1, 0.95).unwrap();
        let z = (f.upper[0] - f.point[0]) / fit.sigma2.sqrt();
        assert!((z - 1.959964).abs() < 1e-6);
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let (x, v, ok) = nelder_mead(|x| (x[0] - 0.3).powi(2) + (x[1] + 0.2).powi(2), &[0.0, 0.0], 0.1, 5000, 1e-14);
        assert!(ok && v < 1e-12 && (x[0] - 0.3).abs() < 1e-6 && (x[1] + 0.2).abs() < 1e-6);
    }
}
