use super::*;
use crate::qstate::StateVector;
use proptest::prelude::*;

/// Dense replay of the random-pair process, drawing from the stream in
/// the same order as the sector simulator.
fn dense_random_measurements(n: usize, n_meas: usize, rng: &mut StreamRng) -> (StateVector, Vec<PairOutcome>) {
    let mut s = dimerization(n).unwrap();
    let mut out = Vec::new();
    for _ in 0..n_meas {
        let (a, b) = rng.distinct_pair(n);
        out.push(s.measure_pair(a.min(b), a.max(b), rng).unwrap());
    }
    (s, out)
}

/// Dense detangling by `factor_out`, same stream order as [`detangle_split`].
fn dense_detangle(state: &StateVector, pr: &mut StreamRng, or: &mut StreamRng) -> (Vec<usize>, StateVector) {
    let mut cur = state.clone();
    let mut labels: Vec<usize> = (0..cur.n_qubits()).collect();
    while labels.len() > 4 {
        let (a, b) = pr.distinct_pair(labels.len());
        let (a, b) = (a.min(b), a.max(b));
        if cur.measure_pair(a, b, or).unwrap().is_singlet() {
            let keep: Vec<usize> = (0..labels.len()).filter(|&q| q != a && q != b).collect();
            cur = cur.factor_out(&keep).unwrap().0;
            labels = keep.iter().map(|&q| labels[q]).collect();
        }
    }
    (labels, cur)
}

fn all(n: usize) -> Vec<usize> {
    (0..n).collect()
}

#[test]
fn profile_matches_dense_simulation() {
    for seed in 0..5 {
        let profile = random_sequence_profile(8, 40, &mut StreamRng::new(seed, 0)).unwrap();
        let (dense, outcomes) = dense_random_measurements(8, 40, &mut StreamRng::new(seed, 0));
        let got: Vec<PairOutcome> = profile.measurements.iter().map(|m| m.2).collect();
        assert_eq!(got, outcomes);
        for r in &profile.rows {
            let want = dense.pair_weight(r.i, r.j, PairOutcome::Triplet).unwrap();
            assert!((r.p_triplet - want).abs() < 1e-12);
        }
    }
}

#[test]
fn profile_without_measurements() {
    let p = random_sequence_profile(8, 0, &mut StreamRng::new(0, 0)).unwrap();
    assert_eq!(p.rows.len(), 28);
    for r in &p.rows {
        // partners of the dimerization are singlets; any other pair sees two halves of different singlets
        let want = if r.i / 2 == r.j / 2 { 0.0 } else { 0.75 };
        assert!((r.p_triplet - want).abs() < 1e-12, "{r:?}");
    }
}

#[test]
fn profile_two_spins_is_determined() {
    let p = random_sequence_profile(2, 1, &mut StreamRng::new(3, 0)).unwrap();
    assert_eq!(p.rows.len(), 1);
    assert_eq!(p.rows[0].p_triplet, 0.0);
}

#[test]
fn profile_rejects_bad_sizes() {
    let mut rng = StreamRng::new(0, 0);
    assert!(random_sequence_profile(7, 1, &mut rng).is_err());
    assert!(random_sequence_profile(22, 1, &mut rng).is_err());
}

#[test]
fn profile_csv_schema() {
    let p = random_sequence_profile(18, 1000, &mut StreamRng::new(1, 0)).unwrap();
    let csv = p.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "pair_i,pair_j,p_triplet");
    assert_eq!(lines.len(), 154);
    assert!(lines[1].starts_with("0,1,"));
}

#[test]
fn profile_centred_on_three_quarters_with_extremes() {
    for seed in 0..10 {
        let p = random_sequence_profile(18, 1000, &mut StreamRng::new(seed, 0)).unwrap();
        let mut v: Vec<f64> = p.rows.iter().map(|r| r.p_triplet).collect();
        v.sort_by(f64::total_cmp);
        assert!((v[76] - 0.75).abs() < 1e-9, "seed {seed}: median {}", v[76]);
        assert!(p.rows.iter().any(|r| r.p_triplet == 0.0 || r.p_triplet == 1.0), "seed {seed}");
    }
}

#[test]
fn sector_round_trip_and_rejection() {
    let (s, _) = dense_random_measurements(6, 10, &mut StreamRng::new(9, 0));
    let back = sector::SectorState::from_state(&s).unwrap().to_state().unwrap();
    assert!((back.fidelity(&s) - 1.0).abs() < 1e-12);
    let up = StateVector::basis(4, 0).unwrap();
    assert!(sector::SectorState::from_state(&up).is_err());
}

#[test]
fn detangle_matches_dense_factoring() {
    for seed in 0..5 {
        let (s, _) = dense_random_measurements(10, 60, &mut StreamRng::new(seed, 1));
        let r = detangle_split(&s, &mut StreamRng::new(seed, 2), &mut StreamRng::new(seed, 3), 10_000).unwrap();
        let (labels, dense) = dense_detangle(&s, &mut StreamRng::new(seed, 2), &mut StreamRng::new(seed, 3));
        assert_eq!(r.survivors, labels);
        assert!((r.state.fidelity(&dense) - 1.0).abs() < 1e-10);
    }
}

#[test]
fn detangle_survivors_have_spin_zero() {
    let mut rng = StreamRng::new(21, 0);
    for _ in 0..20 {
        let (s, _) = random_sequence_state(12, 100, &mut rng).unwrap();
        let r = detangle(&s, &mut rng, 100_000).unwrap();
        assert_eq!(r.survivors.len(), 4);
        assert!(r.state.total_spin_sq_expect(&all(4)).unwrap().abs() <= 1e-9);
        let removed = r.steps.iter().filter(|s| s.outcome.is_singlet()).count();
        assert_eq!(removed, 4);
    }
}

#[test]
fn detangle_four_spins_is_identity() {
    let (s, _) = dense_random_measurements(4, 5, &mut StreamRng::new(4, 0));
    let r = detangle(&s, &mut StreamRng::new(4, 1), 10).unwrap();
    assert!(r.steps.is_empty());
    assert_eq!(r.survivors, vec![0, 1, 2, 3]);
    assert!((r.state.fidelity(&s) - 1.0).abs() < 1e-12);
}

#[test]
fn detangle_gives_up_after_cap() {
    let s = dimerization(8).unwrap();
    let r = detangle(&s, &mut StreamRng::new(0, 0), 0);
    assert!(matches!(r, Err(crate::error::StpError::RetryExhausted { .. })));
}

#[test]
fn survivor_singlet_probability_from_s_t_split() {
    // |S> singlet on (0,1) and (2,3); |T> the spin-0 state orthogonal to it
    let s_state = dimerization(4).unwrap();
    let other = StateVector::singlet_pairs(4, &[(0, 3), (1, 2)]).unwrap();
    let mut amps: Vec<num_complex::Complex64> = other.amps().to_vec();
    let c = s_state.inner(&other);
    for (a, x) in amps.iter_mut().zip(s_state.amps()) {
        *a -= x * c;
    }
    let mut t_state = StateVector::from_amps(amps).unwrap();
    t_state.normalize().unwrap();
    assert!(t_state.pair_weight(0, 1, PairOutcome::Triplet).unwrap() > 1.0 - 1e-12);
    let mut rng = StreamRng::new(8, 0);
    for _ in 0..10 {
        let (s, _) = random_sequence_state(10, 80, &mut rng).unwrap();
        let r = detangle(&s, &mut rng, 100_000).unwrap();
        let ps = r.state.inner(&s_state).norm_sqr();
        let pt = r.state.inner(&t_state).norm_sqr();
        assert!((ps + pt - 1.0).abs() < 1e-10);
        assert!((r.p_singlet_12().unwrap() - ps).abs() < 1e-10);
    }
}

#[test]
fn histogram_basics() {
    let h = Histogram::from_samples(&[0.0, 0.25, 0.5, 0.75, 1.0, 0.999], 4).unwrap();
    assert_eq!(h.counts, vec![1, 1, 1, 3]);
    assert_eq!(h.total(), 6);
    assert!(h.edges.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(h.mirrored().counts, vec![3, 1, 1, 1]);
    assert_eq!(h.to_csv().lines().next(), Some("bin_lo,bin_hi,count"));
    assert_eq!(h.to_csv().lines().count(), 5);
    let one = Histogram::from_samples(&[0.1, 0.9, 0.5], 1).unwrap();
    assert_eq!(one.counts, vec![3]);
    assert!(h.to_svg("t").starts_with("<svg"));
}

#[test]
fn detangle_histogram_small_config() {
    let cfg = ExperimentConfig { n_spins: 8, n_meas: 50, n_sequences: 30, n_runs: 4, bins: 20, master_seed: 3 };
    let h = detangle_histogram(&cfg).unwrap();
    assert_eq!(h.samples.len(), 120);
    assert_eq!(h.s_view.total(), 120);
    let m = h.s_view.mirrored();
    assert_eq!(m.counts, h.t_view.counts);
    for k in 0..cfg.bins {
        assert_eq!(h.s_view.counts[k], h.t_view.counts[cfg.bins - 1 - k]);
    }
    assert_eq!(detangle_histogram(&cfg).unwrap(), h);
}

#[test]
fn detangle_histogram_single_sequence_is_atomic() {
    let cfg = ExperimentConfig { n_spins: 8, n_meas: 50, n_sequences: 1, n_runs: 10, bins: 100, master_seed: 3 };
    let h = detangle_histogram(&cfg).unwrap();
    assert!(h.s_view.counts.iter().filter(|&&c| c > 0).count() <= 10);
}

#[test]
fn detangle_histogram_spikes() {
    let cfg = ExperimentConfig { n_spins: 10, n_meas: 300, n_sequences: 200, n_runs: 10, bins: 100, master_seed: 1 };
    let h = detangle_histogram(&cfg).unwrap();
    let base = h.s_view.uniform_baseline();
    for x in [0.0, 0.75, 1.0] {
        assert!(h.s_view.count_at(x) as f64 > base, "bin at {x}: {}", h.s_view.count_at(x));
    }
}

#[test]
fn arcsine_cdf_values() {
    assert_eq!(arcsine_cdf(0.0), 0.0);
    assert!((arcsine_cdf(1.0) - 1.0).abs() < 1e-15);
    assert!((arcsine_cdf(0.5) - 0.5).abs() < 1e-15);
    assert!((arcsine_cdf(0.25) - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn ks_distance_of_exact_quantiles_is_small() {
    let n = 1000;
    // the k-th midpoint quantile of the arcsine law
    let xs: Vec<f64> = (0..n).map(|k| ((k as f64 + 0.5) / n as f64 * std::f64::consts::FRAC_PI_2).sin().powi(2)).collect();
    assert!((ks_distance(&xs, arcsine_cdf) - 0.5 / n as f64).abs() < 1e-12);
    let uniform: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) / n as f64).collect();
    assert!(ks_distance(&uniform, arcsine_cdf) > 0.1);
}

#[test]
fn cos2_reference_matches_arcsine() {
    let r = cos2_reference(10_000, 100, &mut StreamRng::new(13, 0)).unwrap();
    assert!(r.ks <= 0.02, "{}", r.ks);
    assert_eq!(r.histogram.total(), 10_000);
    let c = &r.histogram.counts;
    for b in 0..50 {
        let (x, y) = (c[b] as f64, c[99 - b] as f64);
        assert!((x - y).abs() <= 3.0 * (x + y).sqrt().max(1.0), "bin {b}: {x} vs {y}");
    }
    let one = cos2_reference(100, 1, &mut StreamRng::new(13, 1)).unwrap();
    assert_eq!(one.histogram.counts, vec![100]);
}

#[test]
fn stsample_instance_shape_and_replay() {
    for seed in 0..10 {
        let inst = stsample_generate(8, 20, seed).unwrap();
        assert_eq!(inst.pairs.len(), inst.bits.len());
        assert!(inst.bits.matches('0').count() >= 2);
        let c = stsample_conditional(&inst).unwrap();
        assert!(c.prefix_probability > 0.0 && c.p_recorded > 0.0);
        assert!((c.p_last_s + c.p_last_t - 1.0).abs() < 1e-12);
        let back = StInstance::from_json(&inst.to_json().unwrap()).unwrap();
        assert_eq!(back, inst);
        assert_eq!(stsample_generate(8, 20, seed).unwrap(), inst);
    }
}

#[test]
fn stsample_json_rejects_garbage() {
    assert!(StInstance::from_json(r#"{"n":6,"pairs":[[0,1]],"bits":"2"}"#).is_err());
    assert!(StInstance::from_json(r#"{"n":6,"pairs":[[0,6]],"bits":"0"}"#).is_err());
    assert!(StInstance::from_json(r#"{"n":6,"pairs":[[0,1],[1,2]],"bits":"0"}"#).is_err());
}

#[test]
fn stsample_conditional_matches_regeneration() {
    let n = 6;
    let pair_seed = 77;
    let target = stsample_generate_streams(n, 3, &mut StreamRng::new(pair_seed, 0), &mut StreamRng::new(0, 0)).unwrap();
    let oracle = stsample_conditional(&target).unwrap();
    let prefix = target.prefix().1.to_string();
    let (mut accepted, mut singlets) = (0u64, 0u64);
    let mut attempt = 1;
    while accepted < 10_000 && attempt < 2_000_000 {
        let inst = stsample_generate_streams(n, 3, &mut StreamRng::new(pair_seed, 0), &mut StreamRng::new(attempt, 0)).unwrap();
        attempt += 1;
        if inst.bits.len() == target.bits.len() && inst.bits.starts_with(&prefix) {
            assert_eq!(inst.pairs, target.pairs);
            accepted += 1;
            singlets += u64::from(inst.bits.ends_with('0'));
        }
    }
    assert_eq!(accepted, 10_000);
    let p = oracle.p_last_s;
    let sigma = (p * (1.0 - p) / accepted as f64).sqrt();
    let freq = singlets as f64 / accepted as f64;
    assert!((freq - p).abs() <= 3.0 * sigma.max(1e-12), "{freq} vs {p}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn profile_values_are_probabilities_and_last_singlet_is_zero(seed in any::<u64>(), m in 1usize..60) {
        let p = random_sequence_profile(8, m, &mut StreamRng::new(seed, 0)).unwrap();
        for r in &p.rows {
            prop_assert!((0.0..=1.0).contains(&r.p_triplet));
        }
        let &(a, b, o) = p.measurements.last().unwrap();
        if o.is_singlet() {
            prop_assert_eq!(p.get(a, b).unwrap(), 0.0);
        }
    }

    #[test]
    fn experiments_are_reproducible(seed in any::<u64>()) {
        let a = random_sequence_profile(6, 20, &mut StreamRng::new(seed, 0)).unwrap();
        let b = random_sequence_profile(6, 20, &mut StreamRng::new(seed, 0)).unwrap();
        prop_assert_eq!(a.to_csv(), b.to_csv());
    }
}
