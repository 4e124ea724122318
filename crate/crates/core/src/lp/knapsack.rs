use super::{LinearProgram, LpError, LpSolution, LpStatus, RowSense, Sense};

/// Maximizes `weights · x` subject to `lower <= x <= upper` and `sum(x) == total`.
///
/// Lower bounds are met first; the remainder goes to items in descending
/// weight order, ties broken by lower index.
pub fn solve_greedy_knapsack(weights: &[f64], lower: &[f64], upper: &[f64], total: f64) -> Result<Vec<f64>, LpError> {
    let n = weights.len();
    if lower.len() != n || upper.len() != n {
        return Err(LpError::Malformed("knapsack vectors differ in length".into()));
    }
    let min: f64 = lower.iter().sum();
    let max: f64 = upper.iter().sum();
    let tol = 1e-9 * min.abs().max(max.abs()).max(total.abs()).max(1.0);
    if total < min - tol || total > max + tol || lower.iter().zip(upper).any(|(l, u)| l > u) {
        return Err(LpError::KnapsackInfeasible { total, min, max });
    }
    let mut x = lower.to_vec();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut remaining = total - min;
    for &i in &order {
        if remaining <= 0.0 {
            break;
        }
        let room = upper[i] - lower[i];
        let add = room.min(remaining);
        x[i] += add;
        remaining -= add;
    }
    Ok(x)
}

/// The same knapsack written as a linear program, for cross-checking.
pub fn knapsack_lp(weights: &[f64], lower: &[f64], upper: &[f64], total: f64) -> LinearProgram {
    let mut lp = LinearProgram::new(Sense::Maximize, weights.to_vec());
    lp.lower = lower.to_vec();
    lp.upper = upper.to_vec();
    lp.add_row((0..weights.len()).map(|i| (i, 1.0)).collect(), RowSense::Eq, total);
    lp
}

/// Confirms a greedy solution attains the simplex optimum to 1e-9 relative.
pub fn cross_check(weights: &[f64], greedy: &[f64], simplex: &LpSolution) -> Result<(), LpError> {
    if simplex.status != LpStatus::Optimal {
        return Err(LpError::CrossCheckStatus(simplex.status));
    }
    let g: f64 = weights.iter().zip(greedy).map(|(w, x)| w * x).sum();
    let s = simplex.objective;
    if (g - s).abs() > 1e-9 * g.abs().max(s.abs()).max(1.0) {
        return Err(LpError::CrossCheckMismatch { greedy: g, simplex: s });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::solve_lp;

    #[test]
    fn heavier_item_first() {
        let x = solve_greedy_knapsack(&[3.0, 1.0], &[0.0, 0.0], &[10.0, 10.0], 10.0).unwrap();
        assert_eq!(x, vec![10.0, 0.0]);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let x = solve_greedy_knapsack(&[1.0, 1.0], &[0.0, 0.0], &[4.0, 4.0], 6.0).unwrap();
        assert_eq!(x, vec![4.0, 2.0]);
    }

    #[test]
    fn lower_bounds_are_honoured() {
        let x = solve_greedy_knapsack(&[5.0, 1.0], &[0.0, 3.0], &[10.0, 10.0], 5.0).unwrap();
        assert_eq!(x, vec![2.0, 3.0]);
    }

    #[test]
    fn total_out_of_range() {
        let e = solve_greedy_knapsack(&[1.0], &[2.0], &[3.0], 5.0).unwrap_err();
        assert!(matches!(e, LpError::KnapsackInfeasible { .. }));
    }

    #[test]
    fn agrees_with_simplex() {
        let w = [0.4, 0.9, 0.1, 0.9];
        let lo = [1.0, 0.0, 2.0, 0.5];
        let hi = [5.0, 3.0, 4.0, 2.0];
        let g = solve_greedy_knapsack(&w, &lo, &hi, 9.0).unwrap();
        let s = solve_lp(&knapsack_lp(&w, &lo, &hi, 9.0)).unwrap();
        cross_check(&w, &g, &s).unwrap();
    }
}
