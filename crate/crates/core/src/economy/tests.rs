use super::*;
use crate::gnep::{best_response, InnerOptions, Polytope};
use proptest::prelude::*;

fn grid(t: f64, m: usize) -> TimeGrid {
    TimeGrid::new(t, m).unwrap()
}

fn constant(g: TimeGrid, v: &[f64]) -> Trajectory {
    Trajectory::constant(g, v).unwrap()
}

fn one_by_one(g: TimeGrid, l: usize, lo: f64, up: f64, utility: Utility) -> EconomyModel {
    EconomyModel {
        grid: g,
        commodities: l,
        producers: vec![ProductionSet::boxed(constant(g, &vec![lo; l]), constant(g, &vec![up; l]))],
        consumers: vec![Consumer {
            set: ConsumptionSet {
                floor: Trajectory::zeros(g, l),
                upper: constant(g, &vec![50.0; l]),
                utility,
            },
            endowment: constant(g, &vec![1.0; l]),
        }],
        shares: vec![vec![1.0]],
        truncation: true,
    }
}

fn log_utility(l: usize) -> Utility {
    Utility::ShiftedLog { weights: vec![1.0; l], offset: 0.1 }
}

#[test]
fn well_formed_model_passes() {
    let m = one_by_one(grid(1.0, 4), 2, -1.0, 1.0, log_utility(2));
    let report = m.validate();
    assert!(report.passed(), "{:?}", report.violations);
}

#[test]
fn share_column_must_sum_to_one() {
    let mut m = one_by_one(grid(1.0, 2), 2, -1.0, 1.0, log_utility(2));
    m.shares = vec![vec![0.9]];
    let v = m.validate().violations;
    assert!(v.iter().any(|s| s == "shares of production unit 0 do not sum to 1"), "{v:?}");
}

#[test]
fn positive_lower_bound_excludes_zero() {
    let mut m = one_by_one(grid(1.0, 2), 2, -1.0, 1.0, log_utility(2));
    let mut lo = m.producers[0].lower.values().to_vec();
    lo[0] = 0.5;
    m.producers[0].lower = Trajectory::from_values(m.grid, 2, lo).unwrap();
    let v = m.validate().violations;
    assert!(v.iter().any(|s| s == "0 ∉ A_0"), "{v:?}");
}

#[test]
fn wrong_share_row_length() {
    let mut m = one_by_one(grid(1.0, 2), 2, -1.0, 1.0, log_utility(2));
    m.shares = vec![vec![0.5, 0.5]];
    assert!(m.validate().violations.iter().any(|s| s.contains("shares row length ≠ s")));
}

#[test]
fn convex_utility_is_rejected() {
    let g = grid(1.0, 2);
    let mut m = one_by_one(g, 1, -1.0, 1.0, log_utility(1));
    // a "quadratic" with negative curvature is convex
    m.consumers[0].set.utility = Utility::Quadratic { target: Trajectory::zeros(g, 1), curvature: -1.0 };
    assert!(!m.validate().passed());
}

#[test]
fn budget_examples() {
    let g = grid(1.0, 1);
    let mut m = one_by_one(g, 2, -5.0, 5.0, log_utility(2));
    m.consumers[0].endowment = constant(g, &[1.0, 0.0]);
    let p = constant(g, &[1.0, 1.0]);
    let zero = Trajectory::zeros(g, 2);
    assert_eq!(m.budget_rhs(0, &[zero], &p).unwrap(), 1.0);
    let loss = constant(g, &[-1.0, -1.0]);
    assert_eq!(m.budget_rhs(0, &[loss], &p).unwrap(), 1.0);
    let gain = constant(g, &[1.0, 1.0]);
    m.shares = vec![vec![0.5]];
    assert_eq!(m.budget_rhs(0, &[gain], &p).unwrap(), 2.0);
}

#[test]
fn project_prices_examples() {
    let g = grid(1.0, 1);
    let p = project_prices(&constant(g, &[3.0, 1.0]));
    assert_eq!(p.values(), &[1.0, 0.0]);
    let p = project_prices(&constant(g, &[-1.0, -1.0]));
    assert_eq!(p.values(), &[0.5, 0.5]);
    let g = grid(2.0, 5);
    let u = PriceSet::new(g, 3).uniform();
    let p = project_prices(&u);
    assert!(p.distance(&u).unwrap() < 1e-15);
}

#[test]
fn compute_r_examples() {
    let g = grid(1.0, 3);
    let m = one_by_one(g, 3, -1.0, 1.0, log_utility(3));
    assert!((m.compute_r() - 2.0).abs() < 1e-15);
    let mut two = m.clone();
    two.producers.push(ProductionSet::boxed(constant(g, &[-2.0; 3]), constant(g, &[2.0; 3])));
    two.shares = vec![vec![1.0, 1.0]];
    assert!((two.compute_r() - 4.0).abs() < 1e-14);

    // brute force over box vertices of the summed production
    let dt = g.dt();
    let mut worst = 0.0f64;
    for mask in 0u32..(1 << 6) {
        let total: f64 = (0..6)
            .map(|bit| {
                let bound = if bit < 3 { 1.0 } else { 2.0 };
                if mask >> bit & 1 == 1 { bound } else { -bound }
            })
            .sum();
        worst = worst.max((dt * total).abs());
    }
    assert!(worst < two.compute_r());
    assert!((two.compute_r() - 1.0 - worst).abs() < 1e-14);
}

#[test]
fn caps_and_autarky() {
    let g = grid(1.0, 4);
    let mut m = one_by_one(g, 2, -1.0, 1.0, log_utility(2));
    m.consumers[0].endowment = Trajectory::zeros(g, 2);
    assert_eq!(m.truncated_consumption_bound(2.0), vec![2.0, 2.0]);

    let m = one_by_one(g, 2, -1.0, 1.0, log_utility(2));
    let r = m.compute_r();
    let caps = m.truncated_consumption_bound(r);
    let inst = m.to_gnep(r).unwrap();
    let p = PriceSet::new(g, 2).uniform();
    let xi = m.consumers[0].endowment.clone();
    let zero = Trajectory::zeros(g, 2);
    let x = m
        .profile(&Allocation { production: vec![zero.clone()], consumption: vec![xi.clone()], prices: p.clone() })
        .unwrap();
    let set = inst.feasible_set(1, &x.rivals_of(1));
    assert!(set.contains(xi.values(), 0.0));
    for (h, cap) in caps.iter().enumerate() {
        assert!((cap - xi.integral(h) - r).abs() < 1e-14);
    }

    // push commodity 0 past its cap by 0.1
    let over = caps[0] + 0.1;
    let b = Trajectory::sample(g, 2, |_, h| if h == 0 { over } else { 0.0 }).unwrap();
    let free = Polytope::new(4, 2, vec![0.0; 8], vec![1e3; 8])
        .unwrap()
        .with_inequality("cap", (0..8).map(|i| if i % 2 == 0 { g.dt() } else { 0.0 }).collect(), caps[0]);
    assert!(!free.contains(b.values(), 1e-12));
}

#[test]
fn excess_demand_examples() {
    let g = grid(1.0, 3);
    let m = one_by_one(g, 2, -1.0, 1.0, log_utility(2));
    let xi = m.consumers[0].endowment.clone();
    let zero = Trajectory::zeros(g, 2);
    let z = m.excess_demand(std::slice::from_ref(&zero), std::slice::from_ref(&xi)).unwrap();
    assert!(z.values().iter().all(|v| *v == 0.0));
    let out = Trajectory::sample(g, 2, |_, h| if h == 0 { 1.0 } else { 0.0 }).unwrap();
    let z = m.excess_demand(&[out], &[xi]).unwrap();
    for k in 0..3 {
        assert_eq!(z.get(k, 0), -1.0);
        assert_eq!(z.get(k, 1), 0.0);
    }
    assert!(m.excess_demand(&[], &[zero]).is_err());
}

#[test]
fn game_layout() {
    let g = grid(1.0, 4);
    let m = one_by_one(g, 2, -1.0, 1.0, log_utility(2));
    let inst = m.to_gnep(m.compute_r()).unwrap();
    assert_eq!(inst.players(), 3);
    for nu in 0..3 {
        assert_eq!(inst.player(nu).dim, 2);
    }
    let mut bad = m.clone();
    bad.shares = vec![vec![0.5]];
    assert!(matches!(bad.to_gnep(1.0), Err(Error::Validation(_))));
    assert!(m.to_gnep(0.0).is_err());
}

#[test]
fn price_best_response_is_a_vertex() {
    let g = grid(1.0, 3);
    let m = one_by_one(g, 2, -1.0, 1.0, log_utility(2));
    let inst = m.to_gnep(m.compute_r()).unwrap();
    let a = Trajectory::zeros(g, 2);
    // z[k,h] = b − ξ; ties at the maximum on (k=2,h=0) and (k=0,h=1)
    let b = Trajectory::from_values(g, 2, vec![1.0, 3.0, 2.0, 1.5, 3.0, 1.0]).unwrap();
    let x = m
        .profile(&Allocation { production: vec![a], consumption: vec![b], prices: PriceSet::new(g, 2).uniform() })
        .unwrap();
    let br = best_response(&inst, 2, &x.rivals_of(2), &InnerOptions::default()).unwrap();

    // oracle: enumerate the m·l vertices, keep the first in (h, k) order
    let z = m.excess_demand(&[x.block(0).clone()], &[x.block(1).clone()]).unwrap();
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for h in 0..2 {
        for k in 0..3 {
            if z.get(k, h) > best.0 {
                best = (z.get(k, h), h, k);
            }
        }
    }
    assert_eq!((best.1, best.2), (0, 2));
    for k in 0..3 {
        for h in 0..2 {
            let expected = if (h, k) == (best.1, best.2) { 3.0 } else { 0.0 };
            assert_eq!(br.point.get(k, h), expected);
        }
    }
}

#[test]
fn producer_objective_is_the_pairing() {
    let g = grid(2.0, 4);
    let m = one_by_one(g, 2, -1.0, 1.0, log_utility(2));
    let inst = m.to_gnep(m.compute_r()).unwrap();
    let a = Trajectory::sample(g, 2, |t, h| (t - 1.0) * (h as f64 + 0.5)).unwrap();
    let p = project_prices(&Trajectory::sample(g, 2, |t, h| t + h as f64).unwrap());
    let x = m
        .profile(&Allocation { production: vec![a.clone()], consumption: vec![Trajectory::zeros(g, 2)], prices: p.clone() })
        .unwrap();
    assert_eq!(inst.objective_value(0, &x), p.inner_product(&a).unwrap());
}

fn random_model() -> impl Strategy<Value = (EconomyModel, Vec<f64>)> {
    (1usize..4, 1usize..3, prop::collection::vec(0.1f64..3.0, 64), 0.0f64..1.0).prop_map(|(m, l, raw, share)| {
        let g = grid(1.5, m);
        let n = m * l;
        let take = |offset: usize| Trajectory::from_values(g, l, raw[offset..offset + n].to_vec()).unwrap();
        let model = EconomyModel {
            grid: g,
            commodities: l,
            producers: vec![
                ProductionSet::boxed(take(0).scaled(-1.0), take(8)),
                ProductionSet::boxed(take(16).scaled(-1.0), take(24)),
            ],
            consumers: (0..2)
                .map(|i| Consumer {
                    set: ConsumptionSet {
                        floor: Trajectory::zeros(g, l),
                        upper: constant(g, &vec![40.0; l]),
                        utility: Utility::Linear { weights: take(32 + 8 * i) },
                    },
                    endowment: take(48 + 8 * i),
                })
                .collect(),
            shares: vec![vec![share, 1.0 - share], vec![1.0 - share, share]],
            truncation: true,
        };
        (model, raw)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn budget_is_homogeneous((model, raw) in random_model(), c in 0.01f64..100.0) {
        let g = model.grid;
        let l = model.commodities;
        let n = g.intervals() * l;
        let a: Vec<Trajectory> = (0..2)
            .map(|j| Trajectory::from_values(g, l, raw[j * 8..j * 8 + n].iter().map(|v| v - 1.5).collect()).unwrap())
            .collect();
        let p = project_prices(&Trajectory::from_values(g, l, raw[40..40 + n].to_vec()).unwrap());
        for i in 0..2 {
            let base = model.budget_rhs(i, &a, &p).unwrap();
            let scaled = model.budget_rhs(i, &a, &p.scaled(c)).unwrap();
            prop_assert!((scaled - c * base).abs() <= 1e-12 * (1.0 + (c * base).abs()));
            let b = Trajectory::from_values(g, l, raw[56..56 + n].to_vec()).unwrap();
            let cost = p.inner_product(&b).unwrap();
            let scaled_cost = p.scaled(c).inner_product(&b).unwrap();
            let inside = cost <= base;
            let inside_scaled = scaled_cost <= scaled;
            let margin = (cost - base).abs() / (1.0 + base.abs());
            prop_assert!(inside == inside_scaled || margin < 1e-12);
        }
    }

    #[test]
    fn price_projection_is_idempotent_and_nonexpansive(
        m in 1usize..5,
        l in 1usize..4,
        raw in prop::collection::vec(-5.0f64..5.0, 32),
    ) {
        let g = grid(3.0, m);
        let n = m * l;
        let q1 = Trajectory::from_values(g, l, raw[..n].to_vec()).unwrap();
        let q2 = Trajectory::from_values(g, l, raw[16..16 + n].to_vec()).unwrap();
        let (p1, p2) = (project_prices(&q1), project_prices(&q2));
        let set = PriceSet::new(g, l);
        prop_assert!(set.check(&p1, 1e-12).is_ok());
        prop_assert!(project_prices(&p1).distance(&p1).unwrap() <= 1e-12);
        prop_assert!(p1.distance(&p2).unwrap() <= q1.distance(&q2).unwrap() + 1e-12);
        // agrees with the generic polytope projection
        let generic = set.polytope().project(q1.values());
        let d = generic.iter().zip(p1.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(d < 1e-9);
    }

    #[test]
    fn feasible_production_stays_below_r((model, raw) in random_model(), pick in prop::collection::vec(0.0f64..1.0, 16)) {
        let _ = raw;
        let r = model.compute_r();
        let g = model.grid;
        let l = model.commodities;
        let n = g.intervals() * l;
        let mut total = vec![0.0; l];
        for (j, a) in model.producers.iter().enumerate() {
            for idx in 0..n {
                let t = pick[(j * n + idx) % pick.len()];
                let lo = a.lower.values()[idx];
                let up = a.upper.values()[idx];
                total[idx % l] += g.dt() * (lo + t * (up - lo));
            }
        }
        for v in total {
            prop_assert!(v.abs() < r);
        }
    }

    #[test]
    fn game_objectives_match_economy_formulas((model, raw) in random_model()) {
        let g = model.grid;
        let l = model.commodities;
        let n = g.intervals() * l;
        let inst = model.to_gnep(model.compute_r()).unwrap();
        let t = |o: usize| Trajectory::from_values(g, l, raw[o..o + n].to_vec()).unwrap();
        let alloc = Allocation {
            production: vec![t(0), t(8).scaled(-1.0)],
            consumption: vec![t(16), t(24)],
            prices: project_prices(&t(40)),
        };
        let x = model.profile(&alloc).unwrap();
        prop_assert_eq!(&model.allocation(&x).unwrap(), &alloc);
        let p = &alloc.prices;
        for j in 0..2 {
            let direct = p.inner_product(&alloc.production[j]).unwrap();
            prop_assert!((inst.objective_value(j, &x) - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
        }
        for i in 0..2 {
            let direct = model.utility(i, &alloc.consumption[i]);
            prop_assert!((inst.objective_value(2 + i, &x) - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
        }
        let z = model.excess_demand(&alloc.production, &alloc.consumption).unwrap();
        let direct = p.inner_product(&z).unwrap();
        prop_assert!((inst.objective_value(4, &x) - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
    }
}
