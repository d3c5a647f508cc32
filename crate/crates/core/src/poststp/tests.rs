use super::*;
use crate::error::StpError;
use crate::qstate::{OpTag, Outcome, PairOutcome, StateVector, Transcript};
use crate::rng::StreamRng;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

/// Test-side `1 + eps S_a.S_b` from explicit bit swaps.
fn heis_oracle(s: &StateVector, a: usize, b: usize, eps: f64) -> StateVector {
    let amps = s.amps();
    let out: Vec<C64> = (0..amps.len())
        .map(|idx| {
            let (xa, xb) = (idx >> a & 1, idx >> b & 1);
            let sw = if xa == xb { idx } else { idx ^ (1 << a) ^ (1 << b) };
            amps[idx] * (1.0 - eps / 4.0) + amps[sw] * (eps / 2.0)
        })
        .collect();
    StateVector::from_amps(out).unwrap()
}

fn triplet_oracle(s: &StateVector, a: usize, b: usize) -> StateVector {
    heis_oracle(s, a, b, 4.0 / 3.0)
}

fn infidelity(a: &StateVector, b: &StateVector) -> f64 {
    1.0 - a.fidelity(b)
}

#[test]
fn resource_zero_is_double_singlet() {
    let r = resource_state(0.0).unwrap();
    let ds = StateVector::singlet_pairs(4, &[(C, E), (D, F)]).unwrap();
    assert!(infidelity(&r, &ds) < 1e-14);
}

#[test]
fn resource_four_thirds_is_triplet_projection() {
    let ds = StateVector::singlet_pairs(4, &[(C, E), (D, F)]).unwrap();
    let want = triplet_oracle(&ds, E, F);
    assert!(infidelity(&resource_state(4.0 / 3.0).unwrap(), &want) < 1e-14);
    assert!(infidelity(&resource_by_projection().unwrap(), &want) < 1e-14);
}

#[test]
fn crossed_projection_gives_negative_base() {
    let r = negative_resource_by_projection().unwrap();
    assert!(infidelity(&r, &resource_state(-4.0 / 3.0).unwrap()) < 1e-14);
}

#[test]
fn resource_has_spin_zero() {
    for eps in [-4.0 / 3.0, -1.0, -0.5, 0.37, 0.5, 1.0, 4.0 / 3.0] {
        let r = resource_state(eps).unwrap();
        let s2 = r.total_spin_sq_expect(&[0, 1, 2, 3]).unwrap();
        assert!(s2.abs() < 1e-9, "eps {eps}: <S^2> = {s2}");
    }
}

#[test]
fn teleport_with_zero_eps_is_identity() {
    let mut rng = StreamRng::new(21, 0);
    let psi = StateVector::random(3, &mut rng).unwrap();
    let mut s = psi.clone();
    let t = apply_heis_via_resource(&mut s, 0, 2, 0.0, &mut rng, true).unwrap();
    assert_eq!(s.n_qubits(), 3);
    assert_eq!(t.len(), 2);
    assert!(infidelity(&s, &psi) < 1e-12);
}

#[test]
fn teleport_matches_oracle_on_random_environment() {
    let mut rng = StreamRng::new(22, 0);
    for trial in 0..10 {
        let psi = StateVector::random(6, &mut rng).unwrap();
        let (a, b) = rng.distinct_pair(6);
        let eps = if trial == 0 { 0.37 } else { 2.0 * rng.uniform() - 1.0 };
        let mut s = psi.clone();
        apply_heis_via_resource(&mut s, a, b, eps, &mut rng, true).unwrap();
        let want = heis_oracle(&psi, a, b, eps);
        assert!(infidelity(&s, &want) < 1e-10, "trial {trial}");
    }
}

#[test]
fn teleport_weight_is_norm_over_sixteen() {
    let mut rng = StreamRng::new(23, 0);
    let psi = StateVector::random(3, &mut rng).unwrap();
    let eps = 0.6;
    let mut s = psi.clone();
    let t = apply_heis_via_resource(&mut s, 0, 1, eps, &mut rng, true).unwrap();
    let res_norm = {
        let mut r = StateVector::singlet_pairs(4, &[(C, E), (D, F)]).unwrap();
        r.apply_heisenberg_raw(E, F, eps).unwrap();
        r.norm_sq()
    };
    let ratio = heis_oracle(&psi, 0, 1, eps).norm_sq() / psi.norm_sq();
    assert!((t.weight_product() - ratio / (16.0 * res_norm)).abs() < 1e-12);
}

#[test]
fn triplet_resource_on_singlet_is_zero_branch() {
    let mut rng = StreamRng::new(24, 0);
    let mut s = StateVector::singlet_pairs(2, &[(0, 1)]).unwrap();
    let err = apply_heis_via_resource(&mut s, 0, 1, 4.0 / 3.0, &mut rng, true).unwrap_err();
    assert!(matches!(err, StpError::ZeroBranch { .. }));
}

#[test]
fn unforced_teleport_reports_failure() {
    let mut rng = StreamRng::new(25, 0);
    let mut successes = 0;
    for _ in 0..200 {
        let mut s = StateVector::random(2, &mut rng).unwrap();
        let t = apply_heis_via_resource(&mut s, 0, 1, 0.0, &mut rng, false).unwrap();
        if s.n_qubits() == 2 {
            successes += 1;
            assert!(t.steps.iter().all(|st| st.out == Outcome::Singlet));
        } else {
            assert_eq!(s.n_qubits(), 6);
            assert_eq!(t.steps.last().unwrap().out, Outcome::Triplet);
        }
    }
    // both singlets with probability 1/16
    assert!((successes as f64 - 12.5).abs() <= 3.0 * (200.0f64 * 0.0625 * 0.9375).sqrt());
}

#[test]
fn reduce_epsilon_gives_minus_squared_quarter() {
    let mut rng = StreamRng::new(26, 0);
    for eps in [4.0 / 3.0, 1.0, 0.5, -0.5, -4.0 / 3.0] {
        for _ in 0..20 {
            let n = 2 + rng.below(3);
            let psi = StateVector::random(n, &mut rng).unwrap();
            let (a, b) = rng.distinct_pair(n);
            let mut s = psi.clone();
            reduce_epsilon_once(&mut s, a, b, eps, &mut rng).unwrap();
            let want = heis_oracle(&psi, a, b, -eps * eps / 4.0);
            assert!(infidelity(&s, &want) < 1e-12, "eps {eps}");
        }
    }
}

#[test]
fn reduce_epsilon_is_not_plus_squared_quarter() {
    let mut rng = StreamRng::new(38, 0);
    let psi = StateVector::singlet_pairs(4, &[(0, 2), (1, 3)]).unwrap();
    let mut s = psi.clone();
    reduce_epsilon_once(&mut s, 2, 3, 4.0 / 3.0, &mut rng).unwrap();
    assert!(infidelity(&s, &heis_oracle(&psi, 2, 3, 4.0 / 9.0)) > 1e-2);
    assert!(infidelity(&s, &resource_state(-4.0 / 9.0).unwrap()) < 1e-12);
}

#[test]
fn reduce_epsilon_zero_is_identity() {
    let mut rng = StreamRng::new(27, 0);
    let psi = StateVector::random(2, &mut rng).unwrap();
    let mut s = psi.clone();
    reduce_epsilon_once(&mut s, 0, 1, 0.0, &mut rng).unwrap();
    assert!(infidelity(&s, &psi) < 1e-12);
}

#[test]
fn mixing_with_negative_base() {
    let mut rng = StreamRng::new(28, 0);
    let e1 = EpsilonSchedule::new(4).eps[1];
    let neg = resource_state(-4.0 / 3.0).unwrap();
    for (e, want_eps) in [(e1, e1 / 3.0), (-e1, -e1 / 3.0)] {
        let psi = StateVector::random(3, &mut rng).unwrap();
        let mut s = psi.clone();
        reduce_epsilon_with(&mut s, 0, 2, &neg, &resource_state(e).unwrap(), &mut rng).unwrap();
        assert!(infidelity(&s, &heis_oracle(&psi, 0, 2, want_eps)) < 1e-12, "e {e}");
    }
}

#[test]
fn schedule_recursion_and_monotonicity() {
    let s = EpsilonSchedule::new(6);
    assert_eq!(s.eps[0], 4.0 / 3.0);
    assert!((s.eps[1] - 4.0 / 9.0).abs() < 1e-16);
    for w in s.eps.windows(2) {
        assert!(w[1] < w[0]);
        assert!((w[1] - w[0] * w[0] / 4.0).abs() <= 1e-15 * w[1]);
    }
    assert_eq!(s.neg_base, -4.0 / 3.0);
}

fn index_bound(x: f64) -> usize {
    let v = (1.0 / x).ln().log2().ceil();
    (if v.is_finite() && v > 0.0 { v as usize } else { 0 }) + 3
}

#[test]
fn schedule_interval_can_be_empty() {
    // eps_1 = 4/9 sits just above 4x/3 and eps_2 = 4/81 is below x^2
    let s = EpsilonSchedule::new(10);
    assert_eq!(s.first_in_interval(0.3325), None);
    assert_eq!(s.first_in_interval(1.0), Some(0));
    assert_eq!(s.first_in_interval(0.5), Some(1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn schedule_hit_index_is_small(x in 1e-12f64..=1.0) {
        let s = EpsilonSchedule::new(40);
        if let Some(i) = s.first_in_interval(x) {
            prop_assert!(i <= index_bound(x), "x {} index {}", x, i);
        }
    }

    #[test]
    fn plan_reaches_target(target in -1.0f64..=1.0, log_delta in -3.0f64..-1.0) {
        let delta = 10f64.powf(log_delta);
        let plan = approx_epsilon_plan(target, delta).unwrap();
        prop_assert!((plan.effective_eps - target).abs() <= delta);
        if plan.entry.is_some() {
            // eigenvalue bookkeeping: the singlet/triplet ratio composes as a power
            let r_base = (1.0 - 0.75 * plan.base_eps) / (1.0 + plan.base_eps / 4.0);
            let r_eff = (1.0 - 0.75 * plan.effective_eps) / (1.0 + plan.effective_eps / 4.0);
            prop_assert!((r_base.powf(plan.power as f64) - r_eff).abs() <= 1e-9 * r_eff.max(1e-300));
        }
        prop_assert!((plan.ops as f64) <= PLAN_OPS_C * (1.0 / delta).ln() / (delta * delta));
    }
}

/// Fitted constant for the plan cost bound.
const PLAN_OPS_C: f64 = 10.0;

#[test]
fn plan_examples() {
    let p = approx_epsilon_plan(4.0 / 9.0, 1e-6).unwrap();
    assert_eq!(p.entry, Some(EpsEntry::Pos(1)));
    assert_eq!(p.power, 1);
    assert_eq!(p.effective_eps, 4.0 / 9.0);

    let p = approx_epsilon_plan(0.0, 1e-3).unwrap();
    assert!(p.is_empty());
    assert_eq!(p.ops, 0);

    let p = approx_epsilon_plan(0.3, 1e-3).unwrap();
    assert!((p.effective_eps - 0.3).abs() <= 1e-3);

    assert!(matches!(approx_epsilon_plan(1.5, 1e-3), Err(StpError::Invalid(_))));
    assert!(matches!(approx_epsilon_plan(0.5, 0.0), Err(StpError::Invalid(_))));
}

#[test]
fn executed_plan_matches_effective_eps() {
    let mut rng = StreamRng::new(29, 0);
    for target in [0.3, -0.3, 0.9, -1.0, 0.05] {
        let plan = approx_epsilon_plan(target, 1e-2).unwrap();
        let psi = StateVector::random(3, &mut rng).unwrap();
        let want = heis_oracle(&psi, 1, 2, plan.effective_eps);
        let mut direct = psi.clone();
        execute_plan(&mut direct, 1, 2, &plan, None, &mut rng).unwrap();
        assert!(infidelity(&direct, &want) < 1e-10, "target {target}");
        let mut fac = ResourceFactory::new();
        let mut proto = psi.clone();
        execute_plan(&mut proto, 1, 2, &plan, Some(&mut fac), &mut rng).unwrap();
        assert!(infidelity(&proto, &want) < 1e-10, "target {target}");
    }
}

#[test]
fn factory_resources_match_closed_form() {
    let mut rng = StreamRng::new(30, 0);
    let sched = EpsilonSchedule::new(5);
    let mut fac = ResourceFactory::new();
    let entries =
        [EpsEntry::Pos(0), EpsEntry::Pos(1), EpsEntry::Pos(2), EpsEntry::Pos(4), EpsEntry::Neg(0), EpsEntry::Neg(1), EpsEntry::Neg(3)];
    for e in entries {
        let built = fac.resource(e, &mut rng).unwrap();
        let want = resource_state(sched.value(e)).unwrap();
        assert!(infidelity(&built, &want) < 1e-12, "{e:?}");
    }
    assert!(fac.post_selections > 0);
    assert_eq!(EpsEntry::Pos(1).build_ops(), 7);
}

// ---- Trotter ---------------------------------------------------------------

#[test]
fn schedule_json_round_trip() {
    let s = HeisenbergSchedule::ring(4, -1.0, 2.5);
    let js = s.to_json().unwrap();
    assert!(js.starts_with("[{\"dt\":2.5,\"J\":[[0,1,-1.0]"));
    assert_eq!(HeisenbergSchedule::from_json(&js).unwrap(), s);
    let parsed = HeisenbergSchedule::from_json(r#"[{"dt":1,"J":[[0,1,2]]}]"#).unwrap();
    assert_eq!(parsed.steps[0].couplings, vec![(0, 1, 2.0)]);
}

#[test]
fn dense_ring_spectrum() {
    // antiferromagnetic 4-ring: ground energy -2 for sum S_i.S_{i+1}
    let (top, gs) = dominant_eigenvector(4, &HeisenbergSchedule::ring(4, -1.0, 1.0).steps[0].couplings).unwrap();
    assert!((top - 2.0).abs() < 1e-12);
    assert!(gs.total_spin_sq_expect(&[0, 1, 2, 3]).unwrap().abs() < 1e-10);
}

#[test]
fn single_pair_converges_to_triplet_part() {
    let mut rng = StreamRng::new(31, 0);
    let psi = StateVector::random(2, &mut rng).unwrap();
    let sched = HeisenbergSchedule::constant(vec![(0, 1, 1.0)], 10.0);
    let ev = trotter_imaginary_evolve(&psi, &sched, 0.01, TrotterMode::Direct, &mut rng).unwrap();
    let want = triplet_oracle(&psi, 0, 1);
    assert!(infidelity(&ev.state, &want) < 1e-6);
    assert!(ev.report.fidelity_vs_oracle.unwrap() > 1.0 - 1e-6);
    assert_eq!(ev.report.steps, 1000);
}

#[test]
fn af_ring_reaches_ground_state() {
    let mut rng = StreamRng::new(32, 0);
    let psi = StateVector::singlet_pairs(4, &[(0, 1), (2, 3)]).unwrap();
    let sched = HeisenbergSchedule::ring(4, -1.0, 20.0);
    let ev = trotter_imaginary_evolve(&psi, &sched, 0.01, TrotterMode::Direct, &mut rng).unwrap();
    let (_, gs) = dominant_eigenvector(4, &sched.steps[0].couplings).unwrap();
    assert!(ev.state.fidelity(&gs) >= 0.999);
}

#[test]
fn trotter_error_is_first_order() {
    let mut rng = StreamRng::new(33, 0);
    let psi = StateVector::random(4, &mut rng).unwrap();
    let sched = HeisenbergSchedule::ring(4, -1.0, 1.0);
    let err = |dt: f64, rng: &mut StreamRng| {
        let f = trotter_imaginary_evolve(&psi, &sched, dt, TrotterMode::Direct, rng).unwrap().report.fidelity_vs_oracle;
        (1.0 - f.unwrap()).max(0.0).sqrt()
    };
    let ratio = err(0.02, &mut rng) / err(0.01, &mut rng);
    assert!((1.6..=2.4).contains(&ratio), "ratio {ratio}");
}

#[test]
fn protocol_trotter_equals_planned() {
    let mut rng = StreamRng::new(34, 0);
    let psi = StateVector::random(4, &mut rng).unwrap();
    let sched = HeisenbergSchedule::ring(4, -1.0, 0.5);
    let planned = trotter_imaginary_evolve(&psi, &sched, 0.05, TrotterMode::Planned { delta: 0.01 }, &mut rng).unwrap();
    let proto = trotter_imaginary_evolve(&psi, &sched, 0.05, TrotterMode::Protocol { delta: 0.01 }, &mut rng).unwrap();
    assert!(infidelity(&planned.state, &proto.state) < 1e-9);
    let direct = trotter_imaginary_evolve(&psi, &sched, 0.05, TrotterMode::Direct, &mut rng).unwrap();
    assert!(infidelity(&planned.state, &direct.state) < 1e-3);
}

#[test]
fn oversized_step_is_rejected() {
    let mut rng = StreamRng::new(35, 0);
    let psi = StateVector::random(2, &mut rng).unwrap();
    let sched = HeisenbergSchedule::constant(vec![(0, 1, 50.0)], 1.0);
    assert!(trotter_imaginary_evolve(&psi, &sched, 0.1, TrotterMode::Direct, &mut rng).is_err());
    assert!(trotter_imaginary_evolve(&psi, &sched, 0.0, TrotterMode::Direct, &mut rng).is_err());
    let bad = HeisenbergSchedule::constant(vec![(0, 1, 1e6)], 1.0);
    assert!(trotter_imaginary_evolve(&psi, &bad, 1e-9, TrotterMode::Direct, &mut rng).is_err());
}

#[test]
fn time_dependent_schedule_matches_oracle() {
    let mut rng = StreamRng::new(36, 0);
    let psi = StateVector::random(3, &mut rng).unwrap();
    let sched = HeisenbergSchedule {
        steps: vec![
            ScheduleStep { dt: 0.5, couplings: vec![(0, 1, 1.0), (1, 2, -0.5)] },
            ScheduleStep { dt: 0.3, couplings: vec![(0, 2, 2.0)] },
        ],
    };
    let ev = trotter_imaginary_evolve(&psi, &sched, 1e-4, TrotterMode::Direct, &mut rng).unwrap();
    assert!(ev.report.fidelity_vs_oracle.unwrap() > 1.0 - 1e-7);
}

// ---- amplitude bound ------------------------------------------------------

#[test]
fn single_singlet_postselection_passes() {
    let mut s = StateVector::singlet_dimerization(2).unwrap();
    s.postselect_pair(0, 1, PairOutcome::Singlet).unwrap();
    let c = verify_amplitude_bound(s.transcript(), 4);
    assert_eq!(c.j, 1);
    assert!((c.observed - 1.0).abs() < 1e-12);
    assert!(c.passed());
}

#[test]
fn exhaustive_three_step_sequences_on_six() {
    let pairs: Vec<(usize, usize)> = (0..6).flat_map(|a| (a + 1..6).map(move |b| (a, b))).collect();
    let outs = [PairOutcome::Singlet, PairOutcome::Triplet];
    let bound = 4f64.powi(-3) * 2f64.powi(-7);
    let mut min_seen = f64::INFINITY;
    let base = StateVector::singlet_dimerization(3).unwrap();
    for &p1 in &pairs {
        for o1 in outs {
            let mut s1 = base.clone();
            if s1.postselect_pair(p1.0, p1.1, o1).is_err() {
                continue;
            }
            for &p2 in &pairs {
                for o2 in outs {
                    let mut s2 = s1.clone();
                    if s2.postselect_pair(p2.0, p2.1, o2).is_err() {
                        continue;
                    }
                    for &p3 in &pairs {
                        for o3 in outs {
                            let mut s3 = s2.clone();
                            if s3.postselect_pair(p3.0, p3.1, o3).is_err() {
                                continue;
                            }
                            let c = verify_amplitude_bound(s3.transcript(), 6);
                            assert!(c.passed());
                            assert!((c.bound - bound).abs() < 1e-18);
                            min_seen = min_seen.min(c.observed);
                        }
                    }
                }
            }
        }
    }
    assert!(min_seen >= bound);
}

#[test]
fn zero_branch_is_excluded() {
    let mut t = Transcript::new();
    t.push(OpTag::S, [0, 1], Outcome::Singlet, 0.5, true);
    t.push(OpTag::T, [0, 1], Outcome::Triplet, 0.0, true);
    let c = verify_amplitude_bound(&t, 2);
    assert_eq!(c.observed, 0.0);
    assert!(c.passed());
    let mut bad = Transcript::new();
    bad.push(OpTag::S, [0, 1], Outcome::Singlet, 1e-6, true);
    assert_eq!(verify_amplitude_bound(&bad, 2).first_violation, Some(1));
}

#[test]
fn random_forced_transcripts_respect_bound() {
    let mut rng = StreamRng::new(37, 0);
    for k in 0..100 {
        let n = 2 * (1 + k % 5);
        let t = random_forced_transcript(n, 1 + rng.below(20), &mut rng).unwrap();
        let c = verify_amplitude_bound(&t, n);
        assert!(c.passed(), "{c:?}");
    }
}
