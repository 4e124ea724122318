use epivax::analysis::paired_t_test;
use epivax::epidemic::{epidemic_step, simulate, Compartments};
use epivax::equity::gini_coefficient;
use epivax::forecast::{difference_heads, seasonal_difference, undifference};
use epivax::harness::synthetic::random_small;
use epivax::lp::{knapsack_lp, solve_greedy_knapsack, solve_lp, LinearProgram, LpStatus, RowSense, Sense};
use epivax::scenario::AllocationPlan;
use proptest::prelude::*;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn step_preserves_population_with_vital_dynamics(
        n in 1.0e3..1.0e5_f64,
        fracs in prop::array::uniform4(0.0..1.0_f64),
        beta in 0.0..1.0_f64,
        gamma in 0.05..1.0_f64,
        mu in 0.0..0.05_f64,
        dose_frac in 0.0..0.5_f64,
        waning in any::<bool>(),
    ) {
        let total: f64 = fracs.iter().sum::<f64>().max(1e-9);
        let [s, v, i, r] = fracs.map(|f| f / total * n);
        let mut e = random_small(0).epidemic;
        e.pop.region = vec![n];
        e.beta = vec![vec![beta / n]];
        e.beta_vax = vec![vec![0.3 * beta / n]];
        e.gamma = gamma;
        e.gamma1 = 0.5;
        e.mu = mu;
        e.psi = waning;
        let c = Compartments { s, v, i, r };
        if let Ok((next, flux)) = epidemic_step(&e, 0, 0, c, dose_frac * s, 0.0, 0.0, f64::INFINITY) {
            prop_assert!((next.s + next.v + next.i + next.r - n).abs() <= 1e-9 * n);
            prop_assert!(flux >= 0.0);
        }
    }

    #[test]
    fn zero_plan_never_vaccinates(seed in 0u64..200) {
        let s = random_small(seed);
        let traj = simulate(&s, &AllocationPlan::zeros(&s)).unwrap();
        for state in &traj.states {
            prop_assert!(state.v.iter().all(|&v| v == 0.0));
        }
        prop_assert!(traj.new_infections.iter().flatten().all(|&f| f >= 0.0));
    }

    #[test]
    fn gini_is_scale_and_permutation_invariant(
        u in prop::collection::vec(0.0..100.0_f64, 1..20),
        k in 0.01..100.0_f64,
        rot in 0usize..20,
    ) {
        let g = gini_coefficient(&u).unwrap();
        let n = u.len() as f64;
        prop_assert!(g >= 0.0 && g <= 1.0 - 1.0 / n + 1e-12);
        let scaled: Vec<f64> = u.iter().map(|x| k * x).collect();
        prop_assert!((gini_coefficient(&scaled).unwrap() - g).abs() < 1e-9);
        let mut rotated = u.clone();
        rotated.rotate_left(rot % u.len());
        prop_assert!((gini_coefficient(&rotated).unwrap() - g).abs() < 1e-12);
    }

    #[test]
    fn gini_of_equal_entries_is_zero(x in 0.0..1e6_f64, n in 1usize..30) {
        prop_assert_eq!(gini_coefficient(&vec![x; n]).unwrap(), 0.0);
    }

    #[test]
    fn greedy_knapsack_is_feasible_and_optimal(
        items in prop::collection::vec((-5.0..10.0_f64, 0.0..5.0_f64, 0.0..50.0_f64), 1..10),
        frac in 0.0..1.0_f64,
    ) {
        let w: Vec<f64> = items.iter().map(|x| x.0).collect();
        let lo: Vec<f64> = items.iter().map(|x| x.1).collect();
        let up: Vec<f64> = items.iter().map(|x| x.1 + x.2).collect();
        let (lsum, usum): (f64, f64) = (lo.iter().sum(), up.iter().sum());
        let total = lsum + frac * (usum - lsum);
        let x = solve_greedy_knapsack(&w, &lo, &up, total).unwrap();
        for k in 0..x.len() {
            prop_assert!(x[k] >= lo[k] - 1e-12 && x[k] <= up[k] + 1e-12);
        }
        prop_assert!((x.iter().sum::<f64>() - total).abs() <= 1e-9 * total.max(1.0));
        let greedy: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
        let lp = solve_lp(&knapsack_lp(&w, &lo, &up, total)).unwrap();
        prop_assert!(rel_close(greedy, lp.objective, 1e-9));
    }

    #[test]
    fn simplex_matches_vertex_enumeration(
        c in prop::array::uniform2(-10.0..10.0_f64),
        ub in prop::array::uniform2(1.0..20.0_f64),
        rows in prop::collection::vec((0.0..5.0_f64, 0.0..5.0_f64, 1.0..30.0_f64), 0..4),
    ) {
        let mut lp = LinearProgram::new(Sense::Maximize, c.to_vec());
        lp.set_bounds(0, 0.0, ub[0]);
        lp.set_bounds(1, 0.0, ub[1]);
        let mut lines: Vec<(f64, f64, f64)> = vec![(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (1.0, 0.0, ub[0]), (0.0, 1.0, ub[1])];
        for &(a, b, rhs) in &rows {
            lp.add_row(vec![(0, a), (1, b)], RowSense::Le, rhs);
            lines.push((a, b, rhs));
        }
        let feasible = |x: f64, y: f64| {
            x >= -1e-9 && y >= -1e-9 && x <= ub[0] + 1e-9 && y <= ub[1] + 1e-9
                && rows.iter().all(|&(a, b, r)| a * x + b * y <= r + 1e-9)
        };
        let mut best = f64::NEG_INFINITY;
        for p in 0..lines.len() {
            for q in p + 1..lines.len() {
                let (a1, b1, r1) = lines[p];
                let (a2, b2, r2) = lines[q];
                let det = a1 * b2 - a2 * b1;
                if det.abs() < 1e-12 {
                    continue;
                }
                let x = (r1 * b2 - r2 * b1) / det;
                let y = (a1 * r2 - a2 * r1) / det;
                if feasible(x, y) {
                    best = best.max(c[0] * x + c[1] * y);
                }
            }
        }
        let sol = solve_lp(&lp).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        prop_assert!(feasible(sol.x[0], sol.x[1]));
        prop_assert!(rel_close(sol.objective, best, 1e-9), "simplex {} vs vertices {}", sol.objective, best);
    }

    #[test]
    fn t_test_is_antisymmetric(
        pairs in prop::collection::vec((-100.0..100.0_f64, -100.0..100.0_f64), 2..30),
    ) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let ab = paired_t_test(&a, &b).unwrap();
        let ba = paired_t_test(&b, &a).unwrap();
        prop_assert!((ab.t + ba.t).abs() <= 1e-9 * ab.t.abs().max(1.0));
        prop_assert!((ab.p - ba.p).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.p));
    }

    #[test]
    fn differencing_round_trips(
        series in prop::collection::vec(-1e3..1e3_f64, 20..60),
        d in 0usize..=1,
        sd in 0usize..=1,
        m in 1usize..=6,
    ) {
        let diffed = seasonal_difference(&series, d, sd, m).unwrap();
        prop_assert_eq!(diffed.len(), series.len() - d - sd * m);
        let heads = difference_heads(&series, d, sd, m).unwrap();
        let back = undifference(&diffed, &heads, d, sd, m).unwrap();
        prop_assert_eq!(back.len(), series.len());
        for (x, y) in back.iter().zip(&series) {
            prop_assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0));
        }
    }
}
