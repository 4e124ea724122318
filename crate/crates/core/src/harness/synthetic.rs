//! Seeded synthetic scenarios and the bundled presets.

use crate::scenario::{
    CostParams, EpidemicParams, ObjectiveWeights, Population, Scenario, SupplyParams, DEFAULT_CENTER_CAPACITY,
    DEFAULT_MU,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Counts: regions, sub-regions per region, pharmacies per sub-region,
/// suppliers, periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sizes {
    pub regions: usize,
    pub subregions: usize,
    pub pharmacies: usize,
    pub suppliers: usize,
    pub horizon: usize,
}

impl Sizes {
    pub const fn new(regions: usize, subregions: usize, pharmacies: usize, suppliers: usize, horizon: usize) -> Self {
        Sizes { regions, subregions, pharmacies, suppliers, horizon }
    }
}

/// Difficulty knobs of the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Knobs {
    /// Region population band.
    pub population: (f64, f64),
    /// Per-period infection growth factor band; `β = growth·γ/N`.
    pub growth: (f64, f64),
    /// Per-period demand as a share of population.
    pub demand_share: (f64, f64),
    /// Average supplier capacity per period over average total demand.
    pub supply_ratio: f64,
    /// Supply multiplier in the first and last period, linear in between.
    pub supply_ramp: (f64, f64),
    /// Sub-regional capacity over the sub-region's share of demand.
    pub capacity_ratio: (f64, f64),
    pub centers_per_region: usize,
    /// Budget over the cost of distributing all supply.
    pub budget_ratio: f64,
    /// Identical sub-regions within each region.
    pub uniform: bool,
    /// Reinfection fraction and delay.
    pub reinfection: Option<(f64, usize)>,
}

impl Default for Knobs {
    fn default() -> Self {
        Knobs {
            population: (2.0e5, 1.0e6),
            growth: (0.8, 1.3),
            demand_share: (0.02, 0.05),
            supply_ratio: 0.8,
            supply_ramp: (1.0, 1.0),
            capacity_ratio: (0.6, 1.2),
            centers_per_region: 1,
            budget_ratio: 1.5,
            uniform: false,
            reinfection: None,
        }
    }
}

fn band(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Draws a reproducible scenario. Populations are whole numbers so that
/// regional totals equal the sum of their sub-regions exactly.
pub fn generate_synthetic(seed: u64, sizes: Sizes, knobs: &Knobs) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Sizes { regions: nj, subregions: nk, pharmacies: nl, suppliers: ni, horizon: tt } = sizes;
    let (nj, nk, nl, ni, tt) = (nj.max(1), nk.max(1), nl.max(1), ni.max(1), tt.max(1));
    let gamma = 1.0;

    let suppliers: Vec<String> = (0..ni).map(|i| format!("S{i}")).collect();
    let regions: Vec<String> = (0..nj).map(|j| format!("R{j}")).collect();
    let subregions_of: Vec<Vec<String>> = (0..nj).map(|j| (0..nk).map(|k| format!("R{j}-C{k}")).collect()).collect();
    let pharmacies_of: Vec<Vec<String>> =
        subregions_of.iter().flatten().map(|c| (0..nl).map(|l| format!("{c}-P{l}")).collect()).collect();
    let centers_of: Vec<Vec<String>> =
        (0..nj).map(|j| (0..knobs.centers_per_region).map(|o| format!("R{j}-M{o}")).collect()).collect();

    let mut sub_pop = Vec::with_capacity(nj * nk);
    let mut region_pop = Vec::with_capacity(nj);
    for _ in 0..nj {
        let target = band(&mut rng, knobs.population);
        let shares: Vec<f64> = (0..nk).map(|_| if knobs.uniform { 1.0 } else { rng.random_range(0.5..1.5) }).collect();
        let total: f64 = shares.iter().sum();
        let pops: Vec<f64> = shares.iter().map(|s| (target * s / total).round().max(100.0)).collect();
        region_pop.push(pops.iter().sum::<f64>());
        sub_pop.extend(pops);
    }

    let mut beta = Vec::with_capacity(nj);
    let mut beta_vax = Vec::with_capacity(nj);
    let mut init_i = Vec::with_capacity(nj);
    let mut init_r = Vec::with_capacity(nj);
    for &n in &region_pop {
        let growth = band(&mut rng, knobs.growth);
        let row: Vec<f64> = (0..tt).map(|_| growth * rng.random_range(0.9..1.1) * gamma / n).collect();
        beta_vax.push(row.iter().map(|b| 0.2 * b).collect());
        beta.push(row);
        init_i.push((n * rng.random_range(0.005..0.02)).round());
        init_r.push((n * rng.random_range(0.05..0.15)).round());
    }

    let share = band(&mut rng, knobs.demand_share);
    let demand: Vec<Vec<f64>> = region_pop
        .iter()
        .map(|&n| (0..tt).map(|_| (n * share * rng.random_range(0.9..1.1)).round()).collect())
        .collect();
    let mut local_capacity = Vec::with_capacity(nj * nk);
    for j in 0..nj {
        for k in 0..nk {
            let frac = sub_pop[j * nk + k] / region_pop[j];
            let ratio = if knobs.uniform { knobs.capacity_ratio.1 } else { band(&mut rng, knobs.capacity_ratio) };
            local_capacity.push((0..tt).map(|t| (demand[j][t] * frac * ratio).round()).collect());
        }
    }
    let mean_demand: f64 = demand.iter().flatten().sum::<f64>() / tt as f64;
    let supplier_capacity: Vec<Vec<f64>> = (0..ni)
        .map(|_| {
            let w = rng.random_range(0.8..1.2);
            (0..tt)
                .map(|t| {
                    let f = if tt > 1 { t as f64 / (tt - 1) as f64 } else { 0.0 };
                    let ramp = knobs.supply_ramp.0 + (knobs.supply_ramp.1 - knobs.supply_ramp.0) * f;
                    (mean_demand * knobs.supply_ratio * ramp * w / ni as f64).round()
                })
                .collect()
        })
        .collect();
    let n_centers = nj * knobs.centers_per_region;
    let center_capacity = vec![vec![DEFAULT_CENTER_CAPACITY; tt]; n_centers];

    let dose_cost: Vec<Vec<f64>> = (0..ni).map(|_| (0..tt).map(|_| rng.random_range(10.0..24.0)).collect()).collect();
    let transport_1: Vec<Vec<f64>> = (0..ni).map(|_| (0..nj).map(|_| rng.random_range(0.5..2.0)).collect()).collect();
    let transport_2: Vec<f64> = (0..nj * nk).map(|_| rng.random_range(0.2..1.0)).collect();
    let transport_3: Vec<f64> = (0..nj * nk * nl).map(|_| rng.random_range(0.1..0.5)).collect();
    let admin_cost: Vec<Vec<f64>> = (0..nj).map(|_| (0..tt).map(|_| rng.random_range(0.5..2.0)).collect()).collect();
    let open_cost: Vec<f64> = (0..n_centers).map(|_| rng.random_range(5.0e3..2.0e4)).collect();
    let full_cost: f64 =
        (0..tt).map(|t| (0..ni).map(|i| supplier_capacity[i][t] * (dose_cost[i][t] + 3.5)).sum::<f64>()).sum();
    let budget = (knobs.budget_ratio * full_cost).round();

    let svi: Vec<f64> = (0..nj * nk).map(|_| if knobs.uniform { 0.5 } else { rng.random_range(0.0..1.0) }).collect();
    let beta0: Vec<f64> = (0..nj * nk)
        .map(|k| {
            let b = beta[k / nk][0];
            if knobs.uniform {
                b
            } else {
                b * rng.random_range(0.8..1.2)
            }
        })
        .collect();
    let access: Vec<f64> = (0..nj).map(|_| rng.random_range(0.2..0.8)).collect();
    let (sigma, t_r) = match knobs.reinfection {
        Some((s, tr)) => (vec![s; tt], tr),
        None => (vec![0.0; tt], 0),
    };

    Scenario {
        horizon: tt,
        period_length_days: 14.0,
        suppliers,
        regions,
        subregions_of,
        pharmacies_of,
        centers_of,
        epidemic: EpidemicParams {
            mu: DEFAULT_MU,
            gamma,
            gamma1: 1.0,
            psi: false,
            sigma,
            t_r,
            beta,
            beta_vax,
            pop: Population { region: region_pop, subregion: sub_pop },
            init_i,
            init_itilde: vec![0.0; nj],
            init_r,
        },
        supply: SupplyParams {
            supplier_capacity,
            local_capacity,
            center_capacity,
            lead_center: 1,
            lead_1: 0,
            lead_2: 0,
            lead_3: 0,
            wastage: 0.0,
            demand,
        },
        costs: CostParams {
            budget,
            dose_cost,
            transport_1,
            transport_2,
            transport_3,
            holding_1: vec![0.0; nj],
            holding_2: vec![0.0; nj * nk],
            holding_3: vec![0.0; nj * nk * nl],
            open_cost,
            admin_cost,
        },
        weights: ObjectiveWeights::default(),
        svi,
        beta0,
        access,
    }
}

/// Oracle-sized instance: two regions of two sub-regions, four periods.
pub const TINY: Sizes = Sizes::new(2, 2, 2, 1, 4);

pub fn tiny_knobs() -> Knobs {
    Knobs {
        population: (2.0e4, 6.0e4),
        demand_share: (0.03, 0.05),
        supply_ratio: 1.8,
        budget_ratio: 0.5,
        ..Knobs::default()
    }
}

pub fn tiny(seed: u64) -> Scenario {
    generate_synthetic(seed, TINY, &tiny_knobs())
}

/// Seeds of the bundled tiny suite.
pub const TINY_SUITE_SEEDS: [u64; 5] = [101, 102, 103, 104, 105];

pub fn tiny_suite() -> Vec<Scenario> {
    TINY_SUITE_SEEDS.iter().map(|&s| tiny(s)).collect()
}

/// Identical sub-regions with ample capacity.
pub fn uniform_regional(seed: u64) -> Scenario {
    let knobs = Knobs { uniform: true, capacity_ratio: (3.0, 3.0), budget_ratio: 3.0, ..Knobs::default() };
    generate_synthetic(seed, Sizes::new(3, 4, 1, 2, 6), &knobs)
}

/// Supply ramps up over the horizon so that supply binds early and
/// demand late.
pub fn mid_size(seed: u64) -> Scenario {
    let knobs = Knobs {
        supply_ratio: 1.0,
        supply_ramp: (0.3, 2.0),
        capacity_ratio: (1.5, 2.5),
        budget_ratio: 3.0,
        ..Knobs::default()
    };
    generate_synthetic(seed, Sizes::new(6, 4, 2, 2, 10), &knobs)
}

/// National-size instance: 51 regions, 3009 sub-regions, 12 periods.
pub fn scale(seed: u64) -> Scenario {
    generate_synthetic(seed, Sizes::new(51, 59, 1, 3, 12), &Knobs::default())
}

/// Small random scenario for property tests (`|J| ≤ 5`, `T ≤ 8`).
pub fn random_small(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let sizes = Sizes::new(
        rng.random_range(1..=5),
        rng.random_range(1..=4),
        rng.random_range(1..=2),
        rng.random_range(1..=3),
        rng.random_range(2..=8),
    );
    let knobs = Knobs {
        supply_ratio: rng.random_range(0.3..1.5),
        supply_ramp: (rng.random_range(0.3..1.0), rng.random_range(1.0..2.0)),
        centers_per_region: rng.random_range(0..=2),
        budget_ratio: rng.random_range(0.2..2.0),
        reinfection: if rng.random_bool(0.3) {
            Some((rng.random_range(0.0..0.1), rng.random_range(1..4)))
        } else {
            None
        },
        ..Knobs::default()
    };
    generate_synthetic(seed, sizes, &knobs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::validate_scenario;

    #[test]
    fn same_seed_same_scenario() {
        assert_eq!(tiny(7), tiny(7));
        assert_ne!(tiny(7), tiny(8));
    }

    #[test]
    fn presets_validate() {
        for s in [tiny(1), uniform_regional(1), mid_size(1), random_small(3)] {
            let r = validate_scenario(&s);
            assert!(r.is_valid(), "{:?}", r.issues);
        }
    }

    #[test]
    fn dose_costs_in_band() {
        let s = mid_size(4);
        assert!(s.costs.dose_cost.iter().flatten().all(|&c| (10.0..=24.0).contains(&c)));
    }
}
