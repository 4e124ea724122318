use super::{LinearProgram, LpError, LpSolution, LpStatus, RowSense, Sense, SimplexOptions, VarStatus};

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_lp_with(lp, &SimplexOptions::default())
}

fn validate(lp: &LinearProgram) -> Result<(), LpError> {
    let n = lp.objective.len();
    if lp.lower.len() != n || lp.upper.len() != n {
        return Err(LpError::Malformed(format!(
            "bounds have lengths {}/{} for {} variables",
            lp.lower.len(),
            lp.upper.len(),
            n
        )));
    }
    for (j, (&lo, &hi)) in lp.lower.iter().zip(&lp.upper).enumerate() {
        if !lo.is_finite() {
            return Err(LpError::Malformed(format!("variable {j} has non-finite lower bound")));
        }
        if hi.is_nan() || hi < lo {
            return Err(LpError::Malformed(format!("variable {j} has bounds [{lo}, {hi}]")));
        }
        if !lp.objective[j].is_finite() {
            return Err(LpError::Malformed(format!("objective coefficient {j} is not finite")));
        }
    }
    for (i, row) in lp.rows.iter().enumerate() {
        if !row.rhs.is_finite() {
            return Err(LpError::Malformed(format!("row {i} has non-finite rhs")));
        }
        for &(j, a) in &row.coefs {
            if j >= n {
                return Err(LpError::Malformed(format!("row {i} references variable {j}")));
            }
            if !a.is_finite() {
                return Err(LpError::Malformed(format!("row {i} has non-finite coefficient")));
            }
        }
    }
    Ok(())
}

struct Tableau {
    m: usize,
    cols: usize,
    a: Vec<f64>,
    /// Current values of the basic variables (shifted space).
    beta: Vec<f64>,
    basis: Vec<usize>,
    upper: Vec<f64>,
    at_upper: Vec<bool>,
    is_basic: Vec<bool>,
    can_enter: Vec<bool>,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cols + j]
    }

    fn value(&self, j: usize) -> f64 {
        if self.is_basic[j] {
            let r = self.basis.iter().position(|&b| b == j).unwrap();
            self.beta[r]
        } else if self.at_upper[j] {
            self.upper[j]
        } else {
            0.0
        }
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.a[i * self.cols..(i + 1) * self.cols];
                for (dj, aij) in d.iter_mut().zip(row) {
                    *dj -= cb * aij;
                }
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, q: usize, d: &mut [f64]) {
        let cols = self.cols;
        let p = self.a[r * cols + q];
        for v in &mut self.a[r * cols..(r + 1) * cols] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.a[r * cols..(r + 1) * cols].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * cols + q];
            if f != 0.0 {
                let row = &mut self.a[i * cols..(i + 1) * cols];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[q] = 0.0;
            }
        }
        let f = d[q];
        if f != 0.0 {
            for (v, pv) in d.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            d[q] = 0.0;
        }
    }

    /// Maximizes `cost` from the current basic feasible point.
    fn run(&mut self, cost: &[f64], opts: &SimplexOptions, iterations: &mut usize) -> Result<Outcome, LpError> {
        let mut d = self.reduced_costs(cost);
        let dtol = opts.feasibility_tol;
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            if *iterations >= opts.max_iterations {
                return Err(LpError::IterationLimit(opts.max_iterations));
            }
            let mut entering: Option<usize> = None;
            let mut best = 0.0;
            for j in 0..self.cols {
                if self.is_basic[j] || !self.can_enter[j] {
                    continue;
                }
                let gain = if self.at_upper[j] { -d[j] } else { d[j] };
                if gain > dtol {
                    if bland {
                        entering = Some(j);
                        break;
                    }
                    if gain > best {
                        best = gain;
                        entering = Some(j);
                    }
                }
            }
            let q = match entering {
                Some(q) => q,
                None => return Ok(Outcome::Optimal),
            };
            *iterations += 1;
            let dir = if self.at_upper[q] { -1.0 } else { 1.0 };

            let mut theta = self.upper[q];
            let mut leave: Option<usize> = None;
            let mut leave_piv = 0.0;
            for i in 0..self.m {
                let t = self.at(i, q);
                if t.abs() <= opts.pivot_tol {
                    continue;
                }
                let delta = -dir * t;
                let b = self.basis[i];
                let limit = if delta < 0.0 {
                    self.beta[i].max(0.0) / -delta
                } else if self.upper[b].is_finite() {
                    (self.upper[b] - self.beta[i]).max(0.0) / delta
                } else {
                    continue;
                };
                if limit < theta - 1e-12 {
                    theta = limit;
                    leave = Some(i);
                    leave_piv = t.abs();
                } else if limit <= theta + 1e-12 {
                    if let Some(l) = leave {
                        let take = if bland { b < self.basis[l] } else { t.abs() > leave_piv };
                        if take {
                            theta = theta.min(limit);
                            leave = Some(i);
                            leave_piv = t.abs();
                        }
                    }
                }
            }
            if !theta.is_finite() {
                return Ok(Outcome::Unbounded);
            }
            if theta <= 1e-12 {
                degenerate += 1;
                if degenerate > opts.degenerate_limit {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            for i in 0..self.m {
                let t = self.at(i, q);
                if t != 0.0 {
                    self.beta[i] -= dir * theta * t;
                }
            }
            match leave {
                None => {
                    self.at_upper[q] = !self.at_upper[q];
                }
                Some(r) => {
                    let out = self.basis[r];
                    let t = self.at(r, q);
                    let delta = -dir * t;
                    self.at_upper[out] = delta > 0.0;
                    self.is_basic[out] = false;
                    let entering_value = if self.at_upper[q] { self.upper[q] - theta } else { theta };
                    self.beta[r] = entering_value;
                    self.basis[r] = q;
                    self.is_basic[q] = true;
                    self.at_upper[q] = false;
                    self.pivot(r, q, &mut d);
                }
            }
        }
    }
}

/// Dense two-phase bounded-variable primal simplex. Dantzig pricing with a
/// switch to Bland's rule after a run of degenerate pivots.
pub fn solve_lp_with(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpSolution, LpError> {
    validate(lp)?;
    let n = lp.objective.len();
    let m = lp.rows.len();
    let n_slack = lp.rows.iter().filter(|r| r.sense != RowSense::Eq).count();

    // Dense rows in the shifted space y = x - lower.
    let mut dense = vec![vec![0.0; n]; m];
    let mut rhs = vec![0.0; m];
    for (i, row) in lp.rows.iter().enumerate() {
        let mut b = row.rhs;
        for &(j, a) in &row.coefs {
            dense[i][j] += a;
            b -= a * lp.lower[j];
        }
        rhs[i] = b;
    }

    let mut slack_sign = vec![0.0; m];
    let mut slack_col = vec![usize::MAX; m];
    let mut next = n;
    for (i, row) in lp.rows.iter().enumerate() {
        match row.sense {
            RowSense::Le => slack_sign[i] = 1.0,
            RowSense::Ge => slack_sign[i] = -1.0,
            RowSense::Eq => continue,
        }
        slack_col[i] = next;
        next += 1;
    }
    let mut flip = vec![1.0; m];
    for i in 0..m {
        if rhs[i] < 0.0 {
            flip[i] = -1.0;
        }
    }
    let mut needs_art = vec![false; m];
    let mut n_art = 0;
    for i in 0..m {
        if slack_col[i] == usize::MAX || slack_sign[i] * flip[i] < 0.0 {
            needs_art[i] = true;
            n_art += 1;
        }
    }
    let cols = n + n_slack + n_art;
    let mut t = Tableau {
        m,
        cols,
        a: vec![0.0; m * cols],
        beta: vec![0.0; m],
        basis: vec![0; m],
        upper: vec![f64::INFINITY; cols],
        at_upper: vec![false; cols],
        is_basic: vec![false; cols],
        can_enter: vec![true; cols],
    };
    for j in 0..n {
        t.upper[j] = lp.upper[j] - lp.lower[j];
    }
    let mut art = n + n_slack;
    let mut art_cols = Vec::with_capacity(n_art);
    for i in 0..m {
        let f = flip[i];
        for j in 0..n {
            t.a[i * cols + j] = f * dense[i][j];
        }
        if slack_col[i] != usize::MAX {
            t.a[i * cols + slack_col[i]] = f * slack_sign[i];
        }
        t.beta[i] = f * rhs[i];
        if needs_art[i] {
            t.a[i * cols + art] = 1.0;
            t.basis[i] = art;
            art_cols.push(art);
            art += 1;
        } else {
            t.basis[i] = slack_col[i];
        }
        t.is_basic[t.basis[i]] = true;
    }

    let mut iterations = 0;
    let scale = rhs.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    if n_art > 0 {
        let mut cost1 = vec![0.0; cols];
        for &c in &art_cols {
            cost1[c] = -1.0;
        }
        t.run(&cost1, opts, &mut iterations)?;
        let infeas: f64 = art_cols.iter().map(|&c| t.value(c)).sum();
        if infeas > opts.feasibility_tol * scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                objective: f64::NAN,
                reduced_costs: vec![0.0; n],
                var_status: vec![VarStatus::AtLower; n],
                iterations,
            });
        }
        for &c in &art_cols {
            t.upper[c] = 0.0;
            t.can_enter[c] = false;
            t.at_upper[c] = false;
        }
    }

    let sign = match lp.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let mut cost2 = vec![0.0; cols];
    for j in 0..n {
        cost2[j] = sign * lp.objective[j];
    }
    let outcome = t.run(&cost2, opts, &mut iterations)?;
    let mut x = vec![0.0; n];
    for i in 0..m {
        let b = t.basis[i];
        if b < n {
            x[b] = t.beta[i];
        }
    }
    let mut var_status = vec![VarStatus::AtLower; n];
    for j in 0..n {
        if t.is_basic[j] {
            var_status[j] = VarStatus::Basic;
        } else if t.at_upper[j] {
            x[j] = t.upper[j];
            var_status[j] = VarStatus::AtUpper;
        }
        x[j] = (x[j] + lp.lower[j]).clamp(lp.lower[j], lp.upper[j]);
    }
    let d = t.reduced_costs(&cost2);
    let reduced_costs = (0..n).map(|j| sign * d[j]).collect();
    let status = match outcome {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => LpStatus::Unbounded,
    };
    let objective = if status == LpStatus::Optimal {
        lp.evaluate(&x)
    } else if lp.sense == Sense::Maximize {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    Ok(LpSolution { status, x, objective, reduced_costs, var_status, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::LinearProgram;

    #[test]
    fn textbook_max() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![3.0, 2.0]);
        lp.add_row(vec![(0, 1.0), (1, 1.0)], RowSense::Le, 4.0);
        lp.add_row(vec![(0, 1.0)], RowSense::Le, 2.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 2.0).abs() < 1e-12);
        assert!((s.objective - 10.0).abs() < 1e-12);
    }

    #[test]
    fn conflicting_rows_are_infeasible() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0]);
        lp.add_row(vec![(0, 1.0)], RowSense::Le, 1.0);
        lp.add_row(vec![(0, 1.0)], RowSense::Ge, 2.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn open_direction_is_unbounded() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 0.0]);
        lp.add_row(vec![(0, 1.0), (1, -1.0)], RowSense::Le, 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn bounds_and_equalities() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, 2.0, -1.0]);
        lp.set_bounds(0, 1.0, 3.0);
        lp.set_bounds(1, -2.0, 5.0);
        lp.set_bounds(2, 0.0, 4.0);
        lp.add_row(vec![(0, 1.0), (1, 1.0), (2, 1.0)], RowSense::Eq, 2.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        // x0 = 1, x2 = 3 and x1 = -2 gives 1 - 4 - 3 = -6; x2 capped at 4 needs x1 = -3.
        assert!((s.objective - -6.0).abs() < 1e-9, "{:?}", s);
    }

    #[test]
    fn rejects_infinite_lower_bound() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0]);
        lp.lower[0] = f64::NEG_INFINITY;
        assert!(matches!(solve_lp(&lp), Err(LpError::Malformed(_))));
    }

    #[test]
    fn degenerate_cycle_example_terminates() {
        // Beale's cycling example.
        let mut lp = LinearProgram::new(Sense::Maximize, vec![0.75, -150.0, 0.02, -6.0]);
        lp.add_row(vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], RowSense::Le, 0.0);
        lp.add_row(vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], RowSense::Le, 0.0);
        lp.add_row(vec![(2, 1.0)], RowSense::Le, 1.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 0.05).abs() < 1e-9);
    }
}
