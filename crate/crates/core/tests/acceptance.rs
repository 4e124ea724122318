//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without the libtest harness so the lines always
//! print.

use epivax::analysis::{run_sensitivity, EffectivenessEncoding, InfectionReference, SensitivityParameter};
use epivax::calibration::{calibrate_effective_rates, ObservedSeries};
use epivax::epidemic::{epidemic_step, simulate, Compartments};
use epivax::equity::plan_equity_report;
use epivax::forecast::{fit_sarima, forecast_interval, grid_candidates, select_by_aic, SarimaOrder};
use epivax::harness::synthetic::{random_small, scale, TINY_SUITE_SEEDS};
use epivax::harness::{dispatch, parse_scenario, Command, Method, RunConfig, BUNDLE_FILES};
use epivax::lp::{knapsack_lp, solve_greedy_knapsack, solve_lp};
use epivax::optimizer::{
    optimality_gap, priority_split, priority_split_lp, run_gini_decomposition, run_knapsack_decomposition,
};
use epivax::oracle::{enumerate_optimum, GridSpec};
use epivax::scenario::{check_full_feasibility, evaluate_objectives, AllocationPlan, Formulation, Scenario, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn load(name: &str) -> Scenario {
    parse_scenario(&data(name)).unwrap_or_else(|e| panic!("{e}"))
}

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    for step in 0..10_000 {
        let n: f64 = rng.random_range(1.0e3..1.0e5);
        let i = rng.random_range(0.0..0.2) * n;
        let r = rng.random_range(0.0..0.3) * n;
        let v = rng.random_range(0.0..0.3) * n;
        let s = n - i - r - v;
        let beta = rng.random_range(0.0..1.0) / n;
        let mut sc = random_small(0).epidemic;
        sc.mu = 0.0;
        sc.sigma.clear();
        sc.psi = rng.random_bool(0.5);
        sc.gamma = rng.random_range(0.1..1.0);
        sc.gamma1 = rng.random_range(0.1..1.0);
        sc.beta = vec![vec![beta]];
        sc.beta_vax = vec![vec![0.2 * beta]];
        sc.pop.region = vec![n];
        let c = Compartments { s, v, i, r };
        let psi_lagged = rng.random_range(0.0..0.5) * s;
        let before = s + v + i + r;
        let Ok((next, _)) = epidemic_step(&sc, 0, 0, c, psi_lagged, 0.0, 0.0, f64::INFINITY) else {
            return Err(format!("step {step} failed"));
        };
        worst = worst.max((next.s + next.v + next.i + next.r - before).abs());
    }
    check(worst <= 1e-9, format!("max |Δ(S+V+I+R)| = {worst:.3e}"))?;
    Ok(format!("10^4 steps, max |Δ(S+V+I+R)| = {worst:.2e}"))
}

fn calibration_round_trip() -> Outcome {
    let mut worst = 0.0_f64;
    for seed in 0..20 {
        let mut s = random_small(1000 + seed);
        let j = s.num_regions();
        s.epidemic.init_i = vec![1.0; j];
        s.epidemic.init_itilde = vec![0.0; j];
        s.epidemic.init_r = vec![0.0; j];
        s.epidemic.beta_vax = s.epidemic.beta.iter().map(|r| r.iter().map(|b| 0.2 * b).collect()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut plan = AllocationPlan::zeros(&s);
        for (g, row) in plan.psi.iter_mut().enumerate() {
            for v in row.iter_mut() {
                *v = rng.random_range(0.0..0.01) * s.epidemic.pop.region[g];
            }
        }
        let traj = simulate(&s, &plan).map_err(|e| format!("seed {seed}: {e}"))?;
        let obs = ObservedSeries {
            regions: s.regions.clone(),
            cases: traj.new_infections.clone(),
            doses: plan.psi.clone(),
            population: s.epidemic.pop.region.clone(),
            underreporting: 0.0,
            gaps: Vec::new(),
        };
        let rates = calibrate_effective_rates(&obs, &s.epidemic, 0.8).map_err(|e| format!("seed {seed}: {e}"))?;
        for g in 0..j {
            for t in 0..s.horizon {
                let truth = s.epidemic.beta[g][t];
                let got = rates.beta[g][t].ok_or(format!("seed {seed}: no rate at ({g},{t})"))?;
                worst = worst.max((got - truth).abs() / truth);
            }
        }
    }
    check(worst <= 1e-6, format!("max relative error {worst:.3e}"))?;
    Ok(format!("20 scenarios, max relative error {worst:.2e}"))
}

fn decomposition_feasibility() -> Outcome {
    let mut checked = 0;
    for seed in 0..100 {
        let s = random_small(seed);
        check(s.num_regions() <= 5 && s.horizon <= 8, format!("seed {seed} exceeds |J| ≤ 5, T ≤ 8"))?;
        let (plan, traj, _) = run_knapsack_decomposition(&s).map_err(|e| format!("seed {seed}: {e}"))?;
        let rep = check_full_feasibility(&s, &plan, &traj, 1e-6).map_err(|e| format!("seed {seed}: {e}"))?;
        if !rep.feasible {
            let names: Vec<&str> = rep.violated().map(|f| f.family).collect();
            return Err(format!("seed {seed} violates {}", names.join(", ")));
        }
        checked += 1;
    }
    Ok(format!("{checked} scenarios feasible at 1e-6"))
}

/// Gaps in percent between the knapsack decomposition and the grid
/// optimum on the tiny suite, computed by the oracle and locked here.
const LOCKED_GAPS: [f64; 5] =
    [18.86537078487911, 16.209653313601205, 0.7628764817423279, 0.5748749373373317, 5.183028224204969];

fn oracle_gaps() -> Outcome {
    let mut gaps = Vec::new();
    for (seed, locked) in TINY_SUITE_SEEDS.iter().zip(LOCKED_GAPS) {
        let s = load(&format!("tiny_{seed}.json"));
        let (plan, traj, _) = run_knapsack_decomposition(&s).map_err(|e| e.to_string())?;
        let h = evaluate_objectives(&s, &plan, &traj, Formulation::Knapsack).map_err(|e| e.to_string())?.scalarized;
        let r = enumerate_optimum(&s, &GridSpec::default(), Formulation::Knapsack).map_err(|e| e.to_string())?;
        let o = r.objective.scalarized;
        check(r.enumerated == r.predicted, format!("seed {seed}: enumerated {} of {}", r.enumerated, r.predicted))?;
        check((h - o).abs() <= r.slack, format!("seed {seed}: |{h:.3} − {o:.3}| exceeds slack {:.3}", r.slack))?;
        let gap = optimality_gap(h, o).map_err(|e| e.to_string())?;
        check((gap - locked).abs() <= 1e-6, format!("seed {seed}: gap {gap:.9}% drifted from locked {locked:.9}%"))?;
        gaps.push(format!("{gap:.2}%"));
    }
    Ok(format!("within slack; gaps {}", gaps.join(", ")))
}

fn equity() -> Outcome {
    let s = load("uniform_regional.json");
    let topo = Topology::new(&s);
    let mut plan = AllocationPlan::zeros(&s);
    for k in 0..topo.n_subregions {
        for t in 0..s.horizon {
            plan.phi[k][t] = 0.25 * s.epidemic.pop.subregion[k] / s.horizon as f64;
        }
    }
    let eta = plan_equity_report(&s, &plan).map_err(|e| e.to_string())?.eta;
    check(eta == 0.0, format!("proportional allocation η = {eta:e}"))?;
    let (_, _, _, report) = run_gini_decomposition(&s).map_err(|e| e.to_string())?;
    check(report.eta == 0.0, format!("Gini decomposition η = {:e}", report.eta))?;
    Ok("proportional η = 0, Gini decomposition η = 0".into())
}

fn greedy_simplex() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0_f64;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
    for i in 0..1000 {
        let n = rng.random_range(1..=12);
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..10.0)).collect();
        let lo: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
        let up: Vec<f64> = lo.iter().map(|l| l + rng.random_range(0.0..50.0)).collect();
        let (lsum, usum): (f64, f64) = (lo.iter().sum(), up.iter().sum());
        let total = lsum + rng.random_range(0.0..1.0) * (usum - lsum);
        let x = solve_greedy_knapsack(&w, &lo, &up, total).map_err(|e| format!("instance {i}: {e}"))?;
        let greedy: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
        let lp = solve_lp(&knapsack_lp(&w, &lo, &up, total)).map_err(|e| format!("instance {i}: {e}"))?;
        worst = worst.max(rel(greedy, lp.objective));

        let pop: Vec<f64> = (0..n).map(|_| rng.random_range(100.0..10_000.0)).collect();
        let caps: Vec<f64> = pop.iter().map(|p| p * rng.random_range(0.0..0.2)).collect();
        let t = caps.iter().sum::<f64>() * rng.random_range(0.0..1.0);
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let lam = rng.random_range(0.0..2000.0);
        let split = priority_split(&d, &pop, &caps, t, lam).map_err(|e| format!("instance {i}: {e}"))?;
        let lp = solve_lp(&priority_split_lp(&d, &pop, &caps, t, lam)).map_err(|e| format!("instance {i}: {e}"))?;
        worst = worst.max(rel(split.objective, lp.objective));
    }
    check(worst <= 1e-9, format!("max relative disagreement {worst:.3e}"))?;
    Ok(format!("1000 knapsacks + 1000 floor splits, max relative disagreement {worst:.2e}"))
}

fn sensitivity_directions() -> Outcome {
    let s = load("mid_size.json");
    let row = |p: SensitivityParameter, m: f64| -> Result<(f64, f64), String> {
        let rows = run_sensitivity(&s, p, &[m], EffectivenessEncoding::RatioScale, InfectionReference::Baseline)
            .map_err(|e| e.to_string())?;
        let r = &rows[0];
        if let Some(e) = &r.error {
            return Err(format!("{p} ×{m}: {e}"));
        }
        Ok((r.infections, r.infections_change_pct))
    };
    let (_, supply) = row(SensitivityParameter::Supply, 0.8)?;
    let (_, rate) = row(SensitivityParameter::InfectionRate, 1.2)?;
    let (_, demand) = row(SensitivityParameter::Demand, 0.8)?;
    // Under the ratio encoding a smaller multiplier on β₁ is a better vaccine.
    let (_, better_vaccine) = row(SensitivityParameter::VaccineEffectiveness, 0.8)?;
    check(supply > 0.0, format!("supply ×0.8: {supply:+.3}%"))?;
    check(rate > 0.0, format!("infection rate ×1.2: {rate:+.3}%"))?;
    check(demand > 0.0, format!("demand ×0.8: {demand:+.3}%"))?;
    check(better_vaccine < 0.0, format!("effectiveness up: {better_vaccine:+.3}%"))?;
    Ok(format!("supply↓ {supply:+.2}%, rate↑ {rate:+.2}%, demand↓ {demand:+.2}%, effectiveness↑ {better_vaccine:+.2}%"))
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn sarima() -> Outcome {
    // Exhaustive argmin on a seasonal series with noise.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let series: Vec<f64> =
        (0..60).map(|t| 10.0 + 0.1 * t as f64 + [2.0, -1.0, 0.5, -1.5][t % 4] + 0.3 * normal(&mut rng)).collect();
    let best = select_by_aic(&series, 1..=8).map_err(|e| e.to_string())?;
    let mut fitted = 0;
    for order in grid_candidates(1..=8) {
        if let Ok(f) = fit_sarima(&series, order) {
            fitted += 1;
            check(best.aic <= f.aic, format!("{} has AIC {} below selected {}", order, f.aic, best.aic))?;
        }
    }
    let again = fit_sarima(&series, best.order).map_err(|e| e.to_string())?;
    check(again.aic == best.aic, "selected fit does not reproduce")?;

    let flat = vec![5.0; 30];
    let fit = select_by_aic(&flat, 1..=8).map_err(|e| e.to_string())?;
    check(fit.order.coefficient_count() == 0, format!("constant series selected {}", fit.order))?;
    let f = forecast_interval(&fit, 6, 0.95).map_err(|e| e.to_string())?;
    check(f.point.iter().all(|&p| p == 5.0), format!("constant forecast {:?}", f.point))?;

    let mut worst = 0.0_f64;
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let (mut x, mut y) = (0.0, 0.0);
        let mut ys = Vec::with_capacity(201);
        ys.push(y);
        for _ in 0..200 {
            x = 0.6 * x + normal(&mut rng);
            y += x;
            ys.push(y);
        }
        let fit = fit_sarima(&ys[1..], SarimaOrder::new(1, 1, 0, 0, 0, 0, 1)).map_err(|e| e.to_string())?;
        worst = worst.max((fit.ar[0] - 0.6).abs());
    }
    check(worst <= 0.15, format!("AR(1) recovery off by {worst:.3}"))?;
    Ok(format!("argmin over {fitted} fits exact, constant forecast flat, AR(1) |φ̂−0.6| ≤ {worst:.3}"))
}

fn scale_run() -> Outcome {
    let s = scale(1);
    let topo = Topology::new(&s);
    let start = Instant::now();
    let (_, _, d) = run_knapsack_decomposition(&s).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    Ok(format!(
        "{} regions, {} sub-regions, {} periods in {:.2} s ({})",
        topo.n_regions,
        topo.n_subregions,
        s.horizon,
        elapsed.as_secs_f64(),
        d.termination.as_str()
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str, method: Method| -> Result<PathBuf, String> {
        let out = dir.path().join(name);
        let cfg = RunConfig {
            command: Command::Optimize { scenario: data("mid_size.json"), method, weights: None, timeseries: None },
            seed: 7,
            out: Some(out.clone()),
            tolerance: 1e-6,
        };
        dispatch(&cfg).map_err(|e| e.to_string())?;
        Ok(out)
    };
    for method in [Method::Knapsack, Method::Gini] {
        let a = run(&format!("{}_a", method.as_str()), method)?;
        let b = run(&format!("{}_b", method.as_str()), method)?;
        for f in BUNDLE_FILES {
            let x = std::fs::read(a.join(f)).map_err(|e| e.to_string())?;
            let y = std::fs::read(b.join(f)).map_err(|e| e.to_string())?;
            check(x == y, format!("{} {f} differs between runs", method.as_str()))?;
        }
    }
    Ok("knapsack and gini bundles byte-identical".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("conservation", conservation, Duration::from_secs(5)),
        ("calibration round-trip", calibration_round_trip, Duration::from_secs(10)),
        ("decomposition feasibility", decomposition_feasibility, Duration::from_secs(60)),
        ("oracle gaps", oracle_gaps, Duration::from_secs(300)),
        ("equity", equity, Duration::from_secs(30)),
        ("greedy/simplex agreement", greedy_simplex, Duration::from_secs(30)),
        ("sensitivity directions", sensitivity_directions, Duration::from_secs(300)),
        ("sarima", sarima, Duration::from_secs(60)),
        ("scale", scale_run, Duration::from_secs(60)),
        ("determinism", determinism, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > limit => {
                Err(format!("{msg}; took {:.2} s, limit {} s", elapsed.as_secs_f64(), limit.as_secs()))
            }
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} [{:.2} s]", i + 1, elapsed.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg} [{:.2} s]", i + 1, elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
