use super::*;
use crate::angles::{min_multiple, CircleAngle};
use crate::rng::StreamRng;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use Site::{A, C};

fn id(d: usize) -> DMatrix<f64> {
    DMatrix::identity(d, d)
}

fn rotation(phi: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[phi.cos(), -phi.sin(), phi.sin(), phi.cos()])
}

fn line(theta: f64) -> DMatrix<f64> {
    let v = DVector::from_vec(vec![theta.cos(), theta.sin()]);
    &v * v.transpose()
}

#[test]
fn spin0_dimensions_and_orthonormality() {
    for (n, d) in [(2, 1), (4, 2), (6, 5), (8, 14)] {
        let b = spin0_basis(n).unwrap();
        assert_eq!(b.dim(), d, "2N = {n}");
        let all: Vec<usize> = (0..n).collect();
        for (i, u) in b.vectors.iter().enumerate() {
            assert!(u.total_spin_sq_expect(&all).unwrap().abs() < 1e-10);
            for (j, v) in b.vectors.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((u.inner(v).re - want).abs() < 1e-12 && u.inner(v).im.abs() < 1e-12);
            }
        }
    }
}

#[test]
fn spin0_two_spins_is_the_singlet() {
    let b = spin0_basis(2).unwrap();
    let s = crate::qstate::StateVector::singlet_dimerization(1).unwrap();
    assert!((b.vectors[0].fidelity(&s) - 1.0).abs() < 1e-12);
}

#[test]
fn spin0_rejects_odd_and_zero() {
    assert!(spin0_basis(3).is_err());
    assert!(spin0_basis(0).is_err());
}

#[test]
fn noncrossing_counts_are_catalan() {
    for (n, c) in [(2, 1), (4, 2), (6, 5), (8, 14), (10, 42)] {
        let pts: Vec<usize> = (0..n).collect();
        assert_eq!(noncrossing_matchings(&pts).len(), c);
    }
}

#[test]
fn site_and_spec_parsing() {
    assert_eq!("c3".parse::<Site>().unwrap(), C(3));
    assert_eq!("a12".parse::<Site>().unwrap(), A(12));
    for bad in ["", "c", "c0", "b1", "cx"] {
        assert!(bad.parse::<Site>().is_err(), "{bad}");
    }
    assert_eq!(ProjectorSpec::t(A(2), C(1)).to_string(), "t_a2,c1");
}

#[test]
fn sequence_json_interface() {
    let text = r#"{"n_comp":4,"n_anc":2,"items":[{"kind":"t","pair":["a2","c2"]},{"kind":"s","pair":["a1","c1"]}]}"#;
    let seq = ProjectorSequence::from_json(text).unwrap();
    assert_eq!(seq.items, vec![ProjectorSpec::t(A(2), C(2)), ProjectorSpec::s(A(1), C(1))]);
    assert!(seq.cap_first && seq.cap_last && !seq.reversed);
    let back = ProjectorSequence::from_json(&seq.to_json().unwrap()).unwrap();
    assert_eq!(back, seq);
    let bad = r#"{"n_comp":4,"n_anc":2,"items":[{"kind":"t","pair":["a3","c2"]}]}"#;
    assert!(ProjectorSequence::from_json(bad).is_err());
    let same = r#"{"n_comp":4,"n_anc":2,"items":[{"kind":"t","pair":["c2","c2"]}]}"#;
    assert!(ProjectorSequence::from_json(same).is_err());
}

#[test]
fn application_order_is_rightmost_first() {
    let seq = ProjectorSequence::new(4, 2, vec![ProjectorSpec::t(A(1), C(1)), ProjectorSpec::s(C(1), C(2))]).unwrap();
    let labels: Vec<String> = seq.labelled_steps().into_iter().map(|(l, _)| l).collect();
    assert_eq!(labels, ["cap", "s_c1,c2", "t_a1,c1", "cap"]);
    let mut rev = seq.clone();
    rev.reversed = true;
    let labels: Vec<String> = rev.labelled_steps().into_iter().map(|(l, _)| l).collect();
    assert_eq!(labels, ["cap", "t_a1,c1", "s_c1,c2", "cap"]);
}

#[test]
fn empty_and_cap_only_give_identity() {
    let basis = spin0_basis(4).unwrap();
    let empty = ProjectorSequence::new(4, 0, vec![]).unwrap();
    let op = sequence_to_operator(&empty, &basis, false).unwrap();
    assert!((op.matrix - id(2)).norm() < 1e-12);
    let caps = ProjectorSequence::new(4, 4, vec![]).unwrap();
    let op = sequence_to_operator(&caps, &basis, false).unwrap();
    assert!((op.matrix - id(2)).norm() < 1e-12);
}

#[test]
fn singular_operator_cannot_be_normalized() {
    let basis = spin0_basis(4).unwrap();
    let seq = ProjectorSequence::new(4, 2, vec![ProjectorSpec::s(C(1), C(2))]).unwrap();
    assert!(sequence_to_operator(&seq, &basis, true).is_err());
    assert!(sequence_to_operator(&seq, &basis, false).is_ok());
}

#[test]
fn det_normalized_has_unit_det() {
    let basis = spin0_basis(4).unwrap();
    for seq in [six_ancilla(), four_ancilla_order12(), relaxed_two_ancilla(), appendix_d_o1(), appendix_d_o2()] {
        let op = sequence_to_operator(&seq, &basis, true).unwrap();
        assert!((op.det() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn equiangular_pair_examples() {
    let p = line(0.3);
    let r = is_equiangular_pair(&p, &p, 1e-12);
    assert!(r.equiangular && (r.alpha.unwrap() - 1.0).abs() < 1e-12);
    assert!(r.complement_alpha.is_none());
    let r = is_equiangular_pair(&line(0.3 + std::f64::consts::FRAC_PI_2), &p, 1e-12);
    assert!(!r.equiangular);
    for theta in [0.2, 0.7, 1.1, 2.5] {
        let r = is_equiangular_pair(&line(theta), &line(0.0), 1e-12);
        assert!((r.alpha.unwrap() - theta.cos().abs()).abs() < 1e-12);
        assert!((r.complement_alpha.unwrap() - theta.sin().abs()).abs() < 1e-12);
    }
    // a plane against a line inside it is not a multiple of the plane
    let r = is_equiangular_pair(&line(0.0), &id(2), 1e-9);
    assert!(!r.equiangular);
}

#[test]
fn equiangular_sequence_examples() {
    let b2 = spin0_basis(2).unwrap();
    // one ancilla pair: a1 and c1 come from different singlets, so it is maximally mixed
    for (spec, a2) in [(ProjectorSpec::t(A(1), C(1)), 0.75f64), (ProjectorSpec::s(A(1), C(1)), 0.25)] {
        let seq = ProjectorSequence::new(2, 2, vec![spec]).unwrap();
        let r = is_equiangular_sequence(&seq, &b2, 1e-10).unwrap();
        assert!(r.equiangular);
        for a in &r.alphas {
            assert!((a.unwrap() - a2.sqrt()).abs() < 1e-12);
        }
    }
    let single = ProjectorSequence { cap_first: false, cap_last: false, ..ProjectorSequence::new(2, 0, vec![]).unwrap() };
    assert!(is_equiangular_sequence(&single, &b2, 1e-10).unwrap().equiangular);

    let b4 = spin0_basis(4).unwrap();
    let drop = ProjectorSequence::new(4, 2, vec![ProjectorSpec::s(C(1), C(2))]).unwrap();
    let r = is_equiangular_sequence(&drop, &b4, 1e-10).unwrap();
    assert_eq!(r.first_failure, Some(1));
    let leak = is_no_leakage(&drop, &b4, 1e-9).unwrap();
    assert_eq!(leak.first_leak_label.as_deref(), Some("s_c1,c2"));
}

#[test]
fn named_sequences_no_leakage() {
    let basis = spin0_basis(4).unwrap();
    assert!(is_no_leakage(&six_ancilla(), &basis, 1e-9).unwrap().no_leakage);
    assert!(is_no_leakage(&four_ancilla_order12(), &basis, 1e-9).unwrap().no_leakage);
    let r = is_no_leakage(&relaxed_two_ancilla(), &basis, 1e-9).unwrap();
    assert!(!r.no_leakage);
    assert_eq!(r.first_leak_label.as_deref(), Some("t_a2,c1"));
}

#[test]
fn named_operators_have_unit_modulus_spectrum() {
    let basis = spin0_basis(4).unwrap();
    for seq in [six_ancilla(), four_ancilla_order12()] {
        let op = sequence_to_operator(&seq, &basis, true).unwrap();
        for z in eigenvalues(&op.matrix) {
            assert!((z.norm() - 1.0).abs() < 1e-8);
        }
    }
}

#[test]
fn four_ancilla_has_order_twelve() {
    let basis = spin0_basis(4).unwrap();
    let op = sequence_to_operator(&four_ancilla_order12(), &basis, true).unwrap().matrix;
    assert_eq!(order_of(&op, 1e-9, 100), Some(12));
    let mut p = op.clone();
    for _ in 1..12 {
        assert!((&p - id(2)).norm() > 1e-3);
        p = &p * &op;
    }
    assert!((p - id(2)).norm() <= 1e-9);
    assert_eq!(order_of(&id(2), 1e-12, 10), Some(1));
}

#[test]
fn relaxed_operator_spectrum_and_infinite_order() {
    let basis = spin0_basis(4).unwrap();
    let op = sequence_to_operator(&relaxed_two_ancilla(), &basis, true).unwrap().matrix;
    let r7 = 7f64.sqrt();
    let want = [
        num_complex::Complex64::new(3.0 * 3f64.sqrt() / (2.0 * r7), 1.0 / (2.0 * r7)),
        num_complex::Complex64::new(3.0 * 3f64.sqrt() / (2.0 * r7), -1.0 / (2.0 * r7)),
    ];
    let ev = eigenvalues(&op);
    assert!(match_eigenvalues(&ev, &want) < 1e-9);
    for z in &ev {
        assert!((z.norm() - 1.0).abs() < 1e-9);
    }
    assert_eq!(order_of(&op, 1e-9, 1000), None);
    // the eigenphase has no multiple near 0 up to 1000 either
    let theta = CircleAngle::new(ev[0].arg());
    assert!(min_multiple(theta, CircleAngle::new(0.0), 1e-6, 1000).is_err());
    assert!(signed_permutation_test(&op, &basis, 1e-8).unwrap().is_none());
}

#[test]
fn signed_permutation_of_identity_and_swap() {
    let basis = spin0_basis(4).unwrap();
    let hit = signed_permutation_test(&id(2), &basis, 1e-10).unwrap().unwrap();
    assert_eq!(hit.sign, 1);
    assert!((permutation_rep(&basis, &hit.perm).unwrap() - id(2)).norm() < 1e-10);

    let seq = swap_by_teleport();
    assert!(is_no_leakage(&seq, &basis, 1e-9).unwrap().no_leakage);
    let op = sequence_to_operator(&seq, &basis, false).unwrap().matrix;
    let hit = signed_permutation_test(&op, &basis, 1e-8).unwrap().unwrap();
    let found = permutation_rep(&basis, &hit.perm).unwrap() * f64::from(hit.sign);
    let swap12 = permutation_rep(&basis, &[1, 0, 2, 3]).unwrap();
    let scaled = &op * (2f64.sqrt() / op.norm());
    assert!((&found - &scaled).norm() < 1e-8);
    assert!((scaled.abs() - swap12.abs()).norm() < 1e-8);
    assert!((&swap12 * &swap12 - id(2)).norm() < 1e-12);
}

#[test]
fn signed_permutation_budget() {
    let basis = spin0_basis(10).unwrap();
    assert!(signed_permutation_test(&id(42), &basis, 1e-8).is_err());
}

#[test]
fn operator_is_basis_covariant() {
    let basis = spin0_basis(4).unwrap();
    let mut rng = StreamRng::new(11, 0);
    for seq in [six_ancilla(), four_ancilla_order12(), relaxed_two_ancilla(), appendix_d_o1()] {
        let r = rotation(rng.uniform() * 6.0);
        let rb = basis.rotated(&r).unwrap();
        let op = sequence_to_operator(&seq, &basis, true).unwrap().matrix;
        let op_r = sequence_to_operator(&seq, &rb, true).unwrap().matrix;
        assert!(match_eigenvalues(&eigenvalues(&op), &eigenvalues(&op_r)) < 1e-9);
        assert!((r.transpose() * &op * &r - op_r).norm() < 1e-9);
    }
}

#[test]
fn logm_inverts_exp_and_rejects_negative_axis() {
    let a = DMatrix::from_row_slice(2, 2, &[0.1, 0.4, -0.3, -0.1]);
    let l = logm(&a.clone().exp()).unwrap();
    assert!((l - a).norm() < 1e-10);
    assert!(logm(&(-id(2))).is_err());
}

#[test]
fn commutator_is_group_commutator() {
    let a = printed_o1();
    let c = commutator(&a, &a).unwrap();
    assert!((c - id(2)).norm() < 1e-12);
    let b = printed_o2();
    let c = commutator(&a, &b).unwrap();
    let direct = a.clone().try_inverse().unwrap() * b.clone().try_inverse().unwrap() * &a * &b;
    assert!((c - direct).norm() < 1e-12);
}

#[test]
fn recovery_law_sums_to_one() {
    for a2 in [0.1, 0.5, 0.9] {
        let total: f64 = (1..2000).map(|k| recovery_round_law(a2, k)).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}

#[test]
fn recovery_round_distribution_matches_law() {
    let q = line(0.0);
    let p = line(std::f64::consts::FRAC_PI_4);
    let state = DVector::from_vec(vec![std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2]);
    let mut rng = StreamRng::new(5, 1);
    let trials = 20_000;
    let mut counts = [0u64; 8];
    for _ in 0..trials {
        let k = recovery_force(&state, &q, &p, &mut rng, 200).unwrap() as usize;
        counts[k.min(7)] += 1;
    }
    let n = trials as f64;
    for (k, &c) in counts.iter().enumerate().skip(1) {
        let pk = if k < 7 { recovery_round_law(0.5, k as u64) } else { 1.0 - (1..7).map(|j| recovery_round_law(0.5, j)).sum::<f64>() };
        let sigma = (n * pk * (1.0 - pk)).sqrt();
        assert!((c as f64 - n * pk).abs() <= 3.0 * sigma, "k = {k}: {c} vs {}", n * pk);
    }
}

#[test]
fn recovery_is_immediate_when_q_contains_p() {
    let mut rng = StreamRng::new(5, 2);
    let state = DVector::from_vec(vec![0.6, 0.8]);
    for _ in 0..100 {
        assert_eq!(recovery_force(&state, &id(2), &line(0.9273), &mut rng, 5).unwrap(), 1);
    }
    let r = recovery_force(&state, &DMatrix::zeros(2, 2), &id(2), &mut rng, 5);
    assert!(matches!(r, Err(crate::error::StpError::RetryExhausted { .. })));
}

#[test]
fn near_one_alpha_mostly_needs_one_round() {
    let theta: f64 = 0.05;
    let q = line(theta);
    let state = DVector::from_vec(vec![1.0, 0.0]);
    let mut rng = StreamRng::new(5, 3);
    let rounds: Vec<u64> = (0..4000).map(|_| recovery_force(&state, &q, &line(0.0), &mut rng, 100_000).unwrap()).collect();
    let ones = rounds.iter().filter(|&&k| k == 1).count() as f64 / 4000.0;
    assert!(ones > 0.99);
    // after a miss the per-round success is small, so the mean tends to 3/2
    let a2 = theta.cos().powi(2);
    let mean_law = 1.0 + 1.0 / (2.0 * a2);
    let mean = rounds.iter().sum::<u64>() as f64 / 4000.0;
    assert!((mean - mean_law).abs() < 0.5, "{mean} vs {mean_law}");
}

#[test]
fn appendix_d_printed_entry_and_report() {
    let o1 = printed_o1();
    assert!((o1[(0, 0)] - 15f64.sqrt() / (2.0 * 7f64.sqrt())).abs() < 1e-15);
    let rep = verify_appendix_d(8, MatrixNorm::Frobenius).unwrap();
    assert!(rep.o1.eigenvalue_error < 1e-6 && rep.o2.eigenvalue_error < 1e-6);
    assert!(rep.o1.sum_log_norm < 1e-9 && rep.o2.sum_log_norm < 1e-9);
    assert!((rep.o1.det - 1.0).abs() < 1e-10 && (rep.o2.det - 1.0).abs() < 1e-10);
    assert_eq!(rep.distances.len(), 8);
    assert!(rep.strictly_decreasing && rep.log_slope < 0.0);
    assert!(rep.passed);
    let op = verify_appendix_d(8, MatrixNorm::Operator).unwrap();
    assert!(op.strictly_decreasing);
}

#[test]
fn sum_of_conjugated_logs_is_trace_part() {
    // for any 2x2 X on spin_0(4), the S4 orbit sum of X is 12 tr(X) I
    let basis = spin0_basis(4).unwrap();
    let x = DMatrix::from_row_slice(2, 2, &[0.3, -1.2, 0.7, 0.5]);
    let mut sum = DMatrix::zeros(2, 2);
    let mut perm = vec![0, 1, 2, 3];
    let mut all = Vec::new();
    permutations(&mut perm, 0, &mut all);
    for p in &all {
        let r = permutation_rep(&basis, p).unwrap();
        sum += &r * &x * r.transpose();
    }
    assert!((sum - id(2) * (12.0 * x.trace())).norm() < 1e-12);
}

fn permutations(cur: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == cur.len() {
        out.push(cur.clone());
        return;
    }
    for i in k..cur.len() {
        cur.swap(k, i);
        permutations(cur, k + 1, out);
        cur.swap(k, i);
    }
}

#[test]
fn random_search_supports_signed_permutation_lemma() {
    let mut rng = StreamRng::new(2024, 7);
    let rep = search_lemma(10_000, 8, &mut rng).unwrap();
    assert_eq!(rep.sequences, 10_000);
    assert!(rep.no_leakage > 0);
    assert!(rep.counterexamples.is_empty(), "{:?}", rep.counterexamples.first());
    assert_eq!(rep.certified, rep.no_leakage);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn equiangular_implies_no_leakage(seed in any::<u64>()) {
        let mut rng = StreamRng::new(seed, 0);
        let basis = spin0_basis(4).unwrap();
        let seq = random_sequence(4, 2, 4, &mut rng).unwrap();
        if is_equiangular_sequence(&seq, &basis, 1e-10).unwrap().equiangular {
            prop_assert!(is_no_leakage(&seq, &basis, 1e-8).unwrap().no_leakage);
        }
    }

    #[test]
    fn rotated_basis_preserves_spectrum(seed in any::<u64>(), phi in 0.0f64..6.3) {
        let mut rng = StreamRng::new(seed, 1);
        let basis = spin0_basis(4).unwrap();
        let seq = random_sequence(4, 2, 6, &mut rng).unwrap();
        let a = sequence_to_operator(&seq, &basis, false).unwrap().matrix;
        let b = sequence_to_operator(&seq, &basis.rotated(&rotation(phi)).unwrap(), false).unwrap().matrix;
        // trace and determinant are the similarity invariants of a 2x2 matrix
        let scale = a.norm().max(1.0);
        prop_assert!((a.trace() - b.trace()).abs() < 1e-9 * scale);
        prop_assert!((a.determinant() - b.determinant()).abs() < 1e-9 * scale * scale);
    }
}
