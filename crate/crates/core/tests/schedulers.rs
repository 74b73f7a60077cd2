mod common;

use common::{check_schedule, context, desk, desk_link, idd_reference, pbs_reference, random_eff, sinr_from_coefficients, staircase_rate};
use hbf_rrm::beams::{BeamAssignment, EffectiveChannels};
use hbf_rrm::config::Solution;
use hbf_rrm::link::{epa, sinr, PowerAllocation};
use hbf_rrm::sched::{idd, pbs_plus, run_slot, wsrb_beam_select, PbsParams, PfState};
use hbf_rrm::sim::{run_scenario, Scenario};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[test]
fn desk_slots_satisfy_structural_invariants() {
    for (seed, (u, k)) in [(3, 2), (8, 3), (12, 5), (16, 16)].into_iter().enumerate() {
        let cfg = desk(u, k);
        let scenario = Scenario::generate(&cfg, seed as u64, 77).unwrap();
        let ctx = scenario.context(&cfg);
        let mut failures = Vec::new();
        run_scenario(&cfg, &scenario, &Solution::ALL, |s| {
            if let Err(e) = check_schedule(s, &ctx) {
                failures.push(format!("{} slot {}: {e}", s.solution, s.slot));
            }
        })
        .unwrap();
        assert!(failures.is_empty(), "{failures:?}");
    }
}

#[test]
fn single_ue_single_chain_coincides_across_solutions() {
    let link = desk_link();
    let top = *link.mcs.thresholds().last().unwrap();
    // Equal gains well above the top level even at a 1/24 power share.
    let g = (100.0 * top * link.noise / link.ue_power).sqrt();
    let eff = EffectiveChannels::from_fn(4, 1, 6, |_, _, _| real(g));
    let assignment = BeamAssignment::from_preferred(vec![7], vec![1]);
    let ctx = context(&eff, &assignment, &link, 1);
    let pf = PfState::new(1, 2.0, 10);
    let reference = run_slot(Solution::B, 0, &pf, &ctx).unwrap();
    assert_eq!(reference.prb_users.iter().filter(|z| z == &&vec![0]).count(), 24);
    for s in Solution::ALL {
        let sched = run_slot(s, 0, &pf, &ctx).unwrap();
        assert_eq!(sched.selected_beams, vec![7], "{s}");
        assert_eq!(sched.prb_users, reference.prb_users, "{s}");
        assert_eq!(sched.throughput, reference.throughput, "{s}");
        for c in 0..24 {
            let (a, b) = (sched.powers.get(c, 0), reference.powers.get(c, 0));
            assert!((a - b).abs() <= 1e-12 * b, "{s} PRB {c}");
        }
    }
}

#[test]
fn full_beam_budget_makes_rr_and_wsrb_identical() {
    let mut slots = 0;
    for seed in 0..4u64 {
        let cfg = desk(6, 6);
        let scenario = Scenario::generate(&cfg, seed, 5).unwrap();
        assert!(scenario.assignment.num_preferred() <= cfg.num_rf_chains);
        let mut s0 = Vec::new();
        let mut s1 = Vec::new();
        run_scenario(&cfg, &scenario, &[Solution::S0, Solution::S1], |s| {
            let key = (s.selected_beams.clone(), s.prb_users.clone(), s.powers.clone(), s.throughput.clone());
            if s.solution == Solution::S0 { s0.push(key) } else { s1.push(key) }
        })
        .unwrap();
        assert_eq!(s0, s1);
        slots += s0.len();
    }
    assert_eq!(slots, 200);
}

#[test]
fn mutual_interferers_are_dropped_by_s2_only() {
    let link = desk_link();
    let t = link.mcs.thresholds()[10];
    let own = (t * 50.0 * link.noise / link.ue_power).sqrt();
    // Cross coupling 1.5x the own signal in power, both directions.
    let eff = EffectiveChannels::from_fn(1, 2, 1, |_, n, u| if n == u { real(own) } else { real(own * 1.5f64.sqrt()) });
    let assignment = BeamAssignment::from_preferred(vec![0, 1], vec![0, 0]);
    let ctx = context(&eff, &assignment, &link, 2);
    let pf = PfState::new(2, 2.0, 10);

    let s1 = run_slot(Solution::S1, 0, &pf, &ctx).unwrap();
    assert_eq!(s1.prb_users, vec![vec![0, 1]]);
    let expected = idd_reference(&eff, 0, &s1.prb_users[0], &s1.powers, 1.0);
    assert!(expected.is_empty());
    let s2 = run_slot(Solution::S2, 0, &pf, &ctx).unwrap();
    assert_eq!(s2.prb_users[0], expected);
    assert_eq!(s2.counters.idd_dropped, 2);
    assert_eq!(s2.throughput, vec![0.0, 0.0]);
}

#[test]
fn one_way_interferer_is_the_one_dropped() {
    let link = desk_link();
    let t = link.mcs.thresholds()[10];
    let own = (t * 50.0 * link.noise / link.ue_power).sqrt();
    // UE 1 leaks 1.5x into UE 0's beam; UE 0 leaks 0.2x into UE 1's.
    let eff = EffectiveChannels::from_fn(1, 2, 1, |_, n, u| match (n, u) {
        (0, 1) => real(own * 1.5f64.sqrt()),
        (1, 0) => real(own * 0.2f64.sqrt()),
        _ => real(own),
    });
    let assignment = BeamAssignment::from_preferred(vec![3, 9], vec![0, 2]);
    let ctx = context(&eff, &assignment, &link, 2);
    let pf = PfState::new(2, 2.0, 10);
    let s2 = run_slot(Solution::S2, 0, &pf, &ctx).unwrap();
    assert_eq!(s2.prb_users, vec![vec![0]]);
    assert_eq!(s2.powers.get(0, 1), 0.0);
    assert!(s2.throughput[0] > 0.0);
}

#[test]
fn dominant_ue_takes_prbs_until_saturation() {
    let link = desk_link();
    let th = link.mcs.thresholds().to_vec();
    let scale = link.noise / link.ue_power;
    // UE 0 sits at 2.5x the top threshold on every PRB, so its increments
    // shrink as the split deepens; UE 1 is weaker everywhere.
    let strong = (2.5 * th[14] * scale).sqrt();
    let weak = (1.2 * th[8] * scale).sqrt();
    let eff = EffectiveChannels::from_fn(1, 2, 6, |_, n, u| if n != u { real(0.0) } else if u == 0 { real(strong) } else { real(weak) });
    let out = pbs_plus(0, &[0, 1], &[1.0, 1.0], &eff, &link, PbsParams::BASELINE);
    let reference = pbs_reference(&[0, 1], &[1.0, 1.0], &eff, &link);
    assert_eq!(out.allocations[&0], reference[0].1);
    assert_eq!(out.allocations[&1], reference[1].1);
    // Frozen from the reference trace.
    assert_eq!(out.allocations[&0], vec![0, 1, 2, 3, 4]);
    assert_eq!(out.allocations[&1], vec![5]);
    assert_eq!(out.sum_rates[&1], link.rate(1.2 * th[8]));
}

#[test]
fn idd_matches_reference_on_random_four_ue_prbs() {
    let link = desk_link();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..500 {
        let eff = random_eff(&mut rng, 1, 4, 1, &link, (-10.0, 30.0));
        let mut powers = PowerAllocation::zeros(1, 4);
        for u in 0..4 {
            powers.set(0, u, rng.random_range(0.1..5.0));
        }
        let users = vec![0, 1, 2, 3];
        let threshold = rng.random_range(0.2..3.0);
        let out = idd(0, &users, &powers, &eff, threshold).unwrap();
        assert_eq!(out.kept, idd_reference(&eff, 0, &users, &powers, threshold));
        assert_eq!(out.pair_checks, 12);
    }
}

#[test]
fn sinr_matches_direct_evaluation() {
    let link = desk_link();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let eff = random_eff(&mut rng, 2, 5, 3, &link, (-20.0, 40.0));
        let mut powers = PowerAllocation::zeros(6, 5);
        for c in 0..6 {
            for u in 0..5 {
                powers.set(c, u, rng.random_range(0.0..5.0));
            }
        }
        let users: Vec<usize> = (0..5).filter(|_| rng.random_bool(0.7)).collect();
        let c = rng.random_range(0..6);
        for &u in &users {
            let got = sinr(c, u, &users, &powers, &eff, link.noise).unwrap();
            let want = sinr_from_coefficients(&eff, c, u, &users, &powers, link.noise);
            assert!((got - want).abs() <= 1e-12 * want.max(1e-300));
            assert_eq!(link.rate(got), staircase_rate(got, &link));
        }
    }
}

#[test]
fn slot_throughput_sums_staircase_rates() {
    let cfg = desk(8, 4);
    let scenario = Scenario::generate(&cfg, 1, 9).unwrap();
    let ctx = scenario.context(&cfg);
    let pf = PfState::new(8, 2.0, 10);
    for s in Solution::ALL {
        let sched = run_slot(s, 3, &pf, &ctx).unwrap();
        for u in 0..8 {
            let mut want = 0.0;
            for (c, users) in sched.prb_users.iter().enumerate() {
                if users.contains(&u) {
                    let g = sinr_from_coefficients(&scenario.eff, c, u, users, &sched.powers, scenario.link.noise);
                    want += staircase_rate(g, &scenario.link);
                }
            }
            assert!((sched.throughput[u] - want).abs() <= 1e-9 * want.max(1.0), "{s} UE {u}");
        }
    }
}

#[test]
fn b_uses_plain_pbs_and_s0_the_persistent_variant() {
    let cfg = desk(10, 1);
    let scenario = Scenario::generate(&cfg, 0, 3).unwrap();
    let ctx = scenario.context(&cfg);
    let pf = PfState::new(10, 2.0, 10);
    let weights = pf.weights();
    for slot in 0..scenario.assignment.num_preferred() {
        let b = run_slot(Solution::B, slot, &pf, &ctx).unwrap();
        let s0 = run_slot(Solution::S0, slot, &pf, &ctx).unwrap();
        assert_eq!(b.selected_beams, s0.selected_beams);
        let beam = b.selected_beams[0];
        let plain = pbs_plus(beam, scenario.assignment.users_of(beam), &weights, &scenario.eff, &scenario.link, PbsParams::BASELINE);
        let plus = pbs_plus(beam, scenario.assignment.users_of(beam), &weights, &scenario.eff, &scenario.link, ctx.pbs_plus);
        let owners = |z: &Vec<Vec<usize>>| z.iter().map(|u| u.first().copied()).collect::<Vec<_>>();
        assert_eq!(owners(&b.prb_users), plain.prb_owner);
        assert_eq!(owners(&s0.prb_users), plus.prb_owner);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plain_pbs_matches_greedy_trace(seed in any::<u64>(), num_ues in 1usize..=3, num_prbs in 1usize..=4) {
        let link = desk_link();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eff = random_eff(&mut rng, num_prbs, num_ues, 1, &link, (-12.0, 30.0));
        let weights: Vec<f64> = (0..num_ues).map(|_| rng.random_range(0.1..3.0)).collect();
        let candidates: Vec<usize> = (0..num_ues).collect();
        let out = pbs_plus(0, &candidates, &weights, &eff, &link, PbsParams::BASELINE);
        for (u, prbs) in pbs_reference(&candidates, &weights, &eff, &link) {
            prop_assert_eq!(&out.allocations[&u], &prbs);
        }
    }

    #[test]
    fn persistence_only_extends_single_ue_allocations(seed in any::<u64>(), patience in 0usize..8, step in 1usize..4) {
        let link = desk_link();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eff = random_eff(&mut rng, 4, 1, 3, &link, (-5.0, 35.0));
        let plain = pbs_plus(0, &[0], &[1.0], &eff, &link, PbsParams { patience: 0, step });
        let plus = pbs_plus(0, &[0], &[1.0], &eff, &link, PbsParams { patience, step });
        let (a, b) = (&plain.allocations[&0], &plus.allocations[&0]);
        prop_assert!(b.len() >= a.len());
        prop_assert_eq!(&b[..a.len()], &a[..]);
        prop_assert!(plus.sum_rates[&0] >= plain.sum_rates[&0]);
    }

    #[test]
    fn common_weight_scale_keeps_decisions(seed in any::<u64>(), scale in 1e-6f64..1e6) {
        let link = desk_link();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eff = random_eff(&mut rng, 4, 6, 6, &link, (-10.0, 35.0));
        let weights: Vec<f64> = (0..6).map(|_| rng.random_range(0.1..3.0)).collect();
        let scaled: Vec<f64> = weights.iter().map(|w| w * scale).collect();
        let beams = [vec![0, 1, 2], vec![3], vec![4, 5]];
        let params = PbsParams { patience: 6, step: 6 };
        let a: Vec<_> = beams.iter().enumerate().map(|(b, u)| pbs_plus(b, u, &weights, &eff, &link, params)).collect();
        let b: Vec<_> = beams.iter().enumerate().map(|(b, u)| pbs_plus(b, u, &scaled, &eff, &link, params)).collect();
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(&x.prb_owner, &y.prb_owner);
        }
        for l in 1..=3 {
            prop_assert_eq!(wsrb_beam_select(&a, l), wsrb_beam_select(&b, l));
        }
    }

    #[test]
    fn idd_never_grows_the_user_set(seed in any::<u64>(), m in 1usize..7, threshold in 0.05f64..5.0) {
        let link = desk_link();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eff = random_eff(&mut rng, 1, m, 1, &link, (-10.0, 30.0));
        let prbs: Vec<Vec<usize>> = vec![vec![0]; m];
        let powers = epa(&prbs, 1, link.ue_power);
        let users: Vec<usize> = (0..m).collect();
        let out = idd(0, &users, &powers, &eff, threshold).unwrap();
        prop_assert!(out.kept.len() <= users.len());
        prop_assert_eq!(out.kept.len() + out.dropped.len(), users.len());
        prop_assert!(out.kept.iter().all(|u| users.contains(u)));
        prop_assert!(out.pair_checks <= m * m);
    }

    #[test]
    fn random_slots_keep_invariants(seed in 0u64..1000, u in 1usize..14, k in 1usize..8, slot in 0usize..50) {
        let cfg = desk(u, k);
        let scenario = Scenario::generate(&cfg, seed, 123).unwrap();
        let ctx = scenario.context(&cfg);
        let mut pf = PfState::new(u, 2.0, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        pf.update(&(0..u).map(|_| rng.random_range(0.0..5e7)).collect::<Vec<_>>());
        for s in Solution::ALL {
            let sched = run_slot(s, slot, &pf, &ctx).unwrap();
            prop_assert!(check_schedule(&sched, &ctx).is_ok(), "{}: {:?}", s, check_schedule(&sched, &ctx));
        }
    }
}
