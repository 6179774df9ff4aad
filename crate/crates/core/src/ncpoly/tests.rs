use super::*;
use crate::cones::{dnn_dual_margin, dnn_dual_membership, horn, VerdictKind};
use crate::graphs::{generate, Family};
use crate::linalg::Vector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn w(letters: &[u16]) -> NcWord {
    NcWord(letters.to_vec())
}

#[test]
fn canon_examples() {
    // X1 X2 X1 X1 rotates to X1 X1 X1 X2
    assert_eq!(canon_word(&w(&[0, 1, 0, 0])), w(&[0, 0, 0, 1]));
    // idempotent
    let c = canon_word(&w(&[2, 0, 1]));
    assert_eq!(canon_word(&c), c);
    assert_eq!(canon_word(&NcWord::empty()), NcWord::empty());
}

#[test]
fn canon_reversal_invariance_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..500 {
        let len = rng.random_range(0..8);
        let word = NcWord((0..len).map(|_| rng.random_range(0..4u16)).collect());
        assert_eq!(canon_word(&word), canon_word(&word.reversed()));
        // cyclic shifts share the class
        if len > 0 {
            let s = rng.random_range(0..len);
            let rot = NcWord(word.0[s..].iter().chain(&word.0[..s]).copied().collect());
            assert_eq!(canon_word(&word), canon_word(&rot));
        }
    }
}

#[test]
fn canon_trace_invariance_numeric() {
    // tr(w(X)) = tr(canon(w)(X)) on random symmetric tuples
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let xs: Vec<SymMatrix> =
            (0..3).map(|_| SymMatrix::from_fn(3, |_, _| rng.random_range(-1.0..1.0))).collect();
        let len = rng.random_range(1..7);
        let word = NcWord((0..len).map(|_| rng.random_range(0..3u16)).collect());
        let mut p1 = NcPoly::zero(3);
        p1.add_term(&word, 1.0);
        let mut p2 = NcPoly::zero(3);
        p2.add_term(&canon_word(&word), 1.0);
        assert!((p1.trace_eval(&xs) - p2.trace_eval(&xs)).abs() < 1e-10);
    }
}

#[test]
fn class_partition_is_exhaustive() {
    // every word of degree <= 4 lands in exactly one class; class sizes
    // sum to the total word count
    for n in [2usize, 3, 5] {
        let words = words_up_to(n, 4);
        let total = words.len();
        let mut by_class: std::collections::BTreeMap<NcWord, usize> = Default::default();
        for word in &words {
            let c = canon_word(word);
            assert_eq!(canon_word(&c), c, "canon not idempotent on {word:?}");
            *by_class.entry(c).or_insert(0) += 1;
        }
        let sum: usize = by_class.values().sum();
        assert_eq!(sum, total, "n = {n}");
        // expected total: sum n^d for d <= 4
        let expect: usize = (0..=4).map(|d| n.pow(d)).sum();
        assert_eq!(total, expect);
    }
}

#[test]
fn build_pm_examples() {
    let p = build_pm(&SymMatrix::identity(2));
    assert_eq!(p.coeff(&w(&[0, 0, 0, 0])), 1.0);
    assert_eq!(p.coeff(&w(&[1, 1, 1, 1])), 1.0);
    assert_eq!(p.terms().count(), 2);

    // M = e1 e2^T + e2 e1^T: coefficient 2 on the merged class
    let mut m = SymMatrix::zeros(2);
    m.set_sym(0, 1, 1.0);
    let p = build_pm(&m);
    assert_eq!(p.coeff(&w(&[0, 0, 1, 1])), 2.0);
    assert_eq!(p.terms().count(), 1);
}

#[test]
fn build_pm_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let a = SymMatrix::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        let b = SymMatrix::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        let lam = rng.random_range(0.0..1.0);
        let lhs = build_pm(&a.scale(lam).add(&b.scale(1.0 - lam)));
        let rhs = build_pm(&a).scale(lam).add(&build_pm(&b).scale(1.0 - lam));
        for (word, &c) in lhs.terms() {
            assert!((c - rhs.coeff(word)).abs() < 1e-12);
        }
        assert_eq!(lhs.terms().count(), rhs.terms().count());
    }
}

#[test]
fn hermitian_squares_are_members() {
    // X1^4 + X2^4 = sum of Hermitian squares
    let mut p = NcPoly::zero(2);
    p.add_term(&w(&[0, 0, 0, 0]), 1.0);
    p.add_term(&w(&[1, 1, 1, 1]), 1.0);
    let v = tracial_sos_membership(&p, 0.0, 2).unwrap();
    assert_eq!(v.kind, VerdictKind::Member, "reason {}", v.reason);
    match &v.certificate {
        Some(crate::cones::Certificate::TracialSos { g0, g1, .. }) => {
            assert!(revalidate_tracial_member(&p, g0, g1, 0.0, 2));
        }
        c => panic!("unexpected certificate {c:?}"),
    }
}

#[test]
fn horn_polynomial_is_refuted_at_level_two() {
    let h = horn();
    let v = knc_membership(&h, 0.0, 2).unwrap();
    assert_eq!(v.kind, VerdictKind::NotMember, "reason {}", v.reason);
    assert!(revalidate_tracial(&h, &v));
    // the shared certificate plumbing agrees
    assert!(v.revalidate(&h));
}

#[test]
fn psd_plus_nonneg_members() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for round in 0..5 {
        let vs: Vec<Vector> =
            (0..5).map(|_| Vector((0..5).map(|_| rng.random_range(-1.0..1.0)).collect())).collect();
        let psd = crate::linalg::gram_of_vectors(&vs).unwrap();
        let nn = SymMatrix::from_fn(5, |_, _| rng.random_range(0.0..1.0));
        let m = psd.add(&nn);
        let v = knc_membership(&m, 0.0, 2).unwrap();
        assert_eq!(v.kind, VerdictKind::Member, "round {round}: {}", v.reason);
        assert!(v.revalidate(&m), "round {round}");
    }
}

#[test]
fn identity_is_member() {
    let v = knc_membership(&SymMatrix::identity(5), 0.0, 2).unwrap();
    assert_eq!(v.kind, VerdictKind::Member);
}

#[test]
fn eps_monotonicity() {
    // member at eps stays member at larger eps (the constant gap is a
    // Hermitian square)
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let nn = SymMatrix::from_fn(4, |_, _| rng.random_range(0.0..1.0));
    for eps in [0.0, 0.3, 1.0] {
        let v = knc_membership(&nn, eps, 2).unwrap();
        assert_eq!(v.kind, VerdictKind::Member, "eps {eps}");
    }
    // a refuted matrix becomes a member once eps clears the gap
    let h = horn();
    let v0 = knc_membership(&h, 0.0, 2).unwrap();
    assert_eq!(v0.kind, VerdictKind::NotMember);
}

#[test]
fn member_set_is_convex_in_m() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let vs: Vec<Vector> =
            (0..5).map(|_| Vector((0..4).map(|_| rng.random_range(-1.0..1.0)).collect())).collect();
        let m1 = crate::linalg::gram_of_vectors(&vs).unwrap();
        let m2 = SymMatrix::from_fn(5, |_, _| rng.random_range(0.0..1.0));
        let a = knc_membership(&m1, 0.0, 2).unwrap();
        let b = knc_membership(&m2, 0.0, 2).unwrap();
        assert_eq!(a.kind, VerdictKind::Member);
        assert_eq!(b.kind, VerdictKind::Member);
        let mid = m1.scale(0.5).add(&m2.scale(0.5));
        let c = knc_membership(&mid, 0.0, 2).unwrap();
        assert_eq!(c.kind, VerdictKind::Member);
    }
}

#[test]
fn member_trace_positive_on_ball_samples() {
    // module membership implies nonnegative trace on the ball: check
    // the target polynomial at random tuples scaled into the ball
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let nn = SymMatrix::from_fn(3, |_, _| rng.random_range(0.0..1.0));
    let p = build_pm(&nn);
    let v = knc_membership(&nn, 0.0, 2).unwrap();
    assert_eq!(v.kind, VerdictKind::Member);
    for _ in 0..20 {
        let raw: Vec<SymMatrix> =
            (0..3).map(|_| SymMatrix::from_fn(2, |_, _| rng.random_range(-1.0..1.0))).collect();
        // scale so that sum X_i^2 <= I
        let sumsq = raw
            .iter()
            .fold(SymMatrix::zeros(2), |acc, x| acc.add(&x.congruence(&SymMatrix::identity(2))));
        let lam = crate::linalg::eig_sym(&sumsq).unwrap().lambda_max().max(1e-12);
        let xs: Vec<SymMatrix> = raw.iter().map(|x| x.scale(1.0 / (lam * 1.01).sqrt())).collect();
        assert!(p.trace_eval(&xs) >= -1e-6);
    }
}

#[test]
fn knc_agrees_with_dnn_dual_sample() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut tested = 0;
    let mut round = 0;
    while tested < 20 {
        round += 1;
        let m = SymMatrix::from_fn(5, |i, j| if i <= j { rng.random_range(-1.0..2.0) } else { 0.0 });
        let margin = dnn_dual_margin(&m).unwrap();
        if margin.abs() < 1e-6 {
            continue; // boundary, excluded
        }
        tested += 1;
        let a = knc_membership(&m, 0.0, 2).unwrap();
        let b = dnn_dual_membership(&m).unwrap();
        assert_eq!(a.kind, b.kind, "round {round} margin {margin}");
    }
}

#[test]
fn degree_and_parameter_errors() {
    let mut p = NcPoly::zero(2);
    p.add_term(&w(&[0, 0, 0, 0, 1, 1]), 1.0); // degree 6
    assert!(matches!(tracial_sos_membership(&p, 0.0, 2), Err(NcError::DegreeTooHigh { .. })));
    let q = NcPoly::zero(2);
    assert!(tracial_sos_membership(&q, -1.0, 2).is_err());
    assert!(tracial_sos_membership(&q, 0.0, 1).is_err());
}

#[test]
fn psi_single_vertex() {
    let k1 = generate(&Family::Complete(1)).unwrap();
    let out = psi_eps_k(&k1, 0.0, 2, &[1]).unwrap();
    assert!((out.value - 1.0).abs() < 1e-4, "got {}", out.value);
}

#[test]
fn psi_k2_matches_aggregated_dual() {
    let k2 = generate(&Family::Complete(2)).unwrap();
    let psi = psi_eps_k(&k2, 0.0, 2, &[1, 2]).unwrap();
    assert!((psi.value - 2.0).abs() < 1e-4, "psi {}", psi.value);
    let dual = crate::qrelax::aggregated_chrom_dual(&k2, &[1, 2]).unwrap();
    assert!((psi.value - dual.value).abs() < 1e-4, "psi {} dual {}", psi.value, dual.value);
}

#[test]
fn psi_eps_monotone_on_k2() {
    let k2 = generate(&Family::Complete(2)).unwrap();
    let base = psi_eps_k(&k2, 0.0, 2, &[1, 2]).unwrap();
    let relaxed = psi_eps_k(&k2, 0.5, 2, &[1, 2]).unwrap();
    assert!(relaxed.value >= base.value - 1e-6, "{} < {}", relaxed.value, base.value);
}

#[test]
fn psi_size_cap_refuses() {
    let c5 = generate(&Family::Cycle(5)).unwrap();
    // full range gives N = 80 variables and a basis beyond the cap
    match psi_eps_k(&c5, 0.0, 2, &[1, 2, 3, 4, 5]) {
        Err(NcError::SizeCapExceeded { needed, cap }) => {
            assert!(needed > cap);
        }
        r => panic!("expected size-cap refusal, got {r:?}"),
    }
}
