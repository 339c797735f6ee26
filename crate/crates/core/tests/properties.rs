//! Property tests: kernel algebra, census arithmetic, parser robustness
//! and the absorption pipeline against an independent capacity oracle.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use xtax_core::blocks::{canonicalize_mu, Block, BlockKind, BlockSum};
use xtax_core::dsl::{format_blocksum, parse_blocksum};
use xtax_core::invariants::{rank_identity_check, tau_upsilon};
use xtax_core::matrix::{eval_poly_at_matrix, Matrix};
use xtax_core::reduction::{reduce, CaseTag, ReductionContext};
use xtax_core::sample::{random_block_sum, SampleConfig};
use xtax_core::scalar::{GaussianRational, Rational, Scalar};

fn small_rational() -> impl Strategy<Value = Rational> {
    (-9i64..=9, 1i64..=4).prop_map(|(p, q)| Rational::new(p.into(), q.into()))
}

fn small_gaussian() -> impl Strategy<Value = GaussianRational> {
    (small_rational(), small_rational()).prop_map(|(re, im)| GaussianRational::new(re, im))
}

fn small_matrix(n: usize) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(small_gaussian(), n * n).prop_map(move |entries| {
        Matrix::new(n, n, entries.into_iter().map(Scalar::Exact).collect()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn inverse_and_rank_nullity(m in (2usize..=6).prop_flat_map(small_matrix)) {
        let n = m.rows();
        let rank = m.rank().unwrap();
        let nullity = m.nullspace().unwrap().len();
        prop_assert_eq!(rank + nullity, n);
        if rank == n {
            let inv = m.inverse().unwrap();
            prop_assert_eq!(m.mul(&inv).unwrap(), Matrix::identity(n));
        } else {
            prop_assert!(m.inverse().is_err());
        }
    }

    #[test]
    fn cayley_hamilton(m in (2usize..=5).prop_flat_map(small_matrix)) {
        let cp = m.char_poly().unwrap();
        let evaluated = eval_poly_at_matrix(&cp, &m).unwrap();
        prop_assert!(evaluated.is_zero());
    }

    #[test]
    fn transpose_antihomomorphism(
        a in small_matrix(4),
        b in small_matrix(4),
    ) {
        let lhs = a.mul(&b).unwrap().transpose();
        let rhs = b.transpose().mul(&a.transpose()).unwrap();
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn float_twin_agrees(
        a in small_matrix(4),
        b in small_matrix(4),
    ) {
        // Exact product converted to floats vs float-twin product.
        let exact = a.mul(&b).unwrap();
        let float = a.to_float().mul(&b.to_float()).unwrap();
        let diff = exact.sub(&float).unwrap().max_abs();
        let scale = exact.max_abs().max(1.0);
        prop_assert!(diff <= 1e-12 * scale, "diff {} scale {}", diff, scale);
    }

    #[test]
    fn canonicalize_mu_collapses_inverses(mu in small_gaussian()) {
        prop_assume!(!mu.is_zero());
        let c1 = canonicalize_mu(&mu).unwrap();
        let c2 = canonicalize_mu(&mu.inv().unwrap()).unwrap();
        prop_assert_eq!(c1.clone(), c2);
        // idempotent
        prop_assert_eq!(canonicalize_mu(&c1).unwrap(), c1);
    }

    #[test]
    fn parser_never_panics(input in "\\PC*") {
        let _ = parse_blocksum(&input);
    }

    #[test]
    fn parser_handles_structured_noise(input in "[JGH0-9()*+~i/ -]{0,40}") {
        let _ = parse_blocksum(&input);
    }
}

#[test]
fn tau_upsilon_additive_over_splits() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = SampleConfig::default();
    for _ in 0..100 {
        let s1 = random_block_sum(&mut rng, &cfg);
        let s2 = random_block_sum(&mut rng, &cfg);
        let mut joined = s1.clone();
        for (b, m) in s2.parts() {
            joined.push_with_multiplicity(b.clone(), *m);
        }
        let lhs = tau_upsilon(&joined).unwrap();
        let rhs = tau_upsilon(&s1).unwrap().add(&tau_upsilon(&s2).unwrap());
        assert_eq!(lhs, rhs);
    }
}

#[test]
fn tau_bounded_by_upsilon_without_h2_minus_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = SampleConfig {
        forbid_h2_minus_one: true,
        ..Default::default()
    };
    for _ in 0..200 {
        let s = random_block_sum(&mut rng, &cfg);
        let inv = tau_upsilon(&s).unwrap();
        assert!(inv.tau <= inv.upsilon, "{s}: tau {} > upsilon {}", inv.tau, inv.upsilon);
    }
}

#[test]
fn rank_identity_on_random_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = SampleConfig {
        max_total_size: 24,
        ..Default::default()
    };
    for _ in 0..100 {
        let s = random_block_sum(&mut rng, &cfg);
        let (lhs, rhs, equal) = rank_identity_check(&s).unwrap();
        assert!(equal, "{s}: lhs {lhs} != rhs {rhs}");
    }
}

#[test]
fn parse_format_roundtrip_on_random_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let cfg = SampleConfig::default();
    for _ in 0..100 {
        let s = random_block_sum(&mut rng, &cfg);
        let text = format_blocksum(&s);
        let (back, warnings) = parse_blocksum(&text).unwrap();
        assert!(warnings.is_empty(), "canonical text must not warn: {text}");
        assert!(back.congruence_eq(&s), "{text}");
        assert_eq!(format_blocksum(&back), text);
    }
}

/// Independent oracle for which case the absorption pipeline must reach:
/// every block has a fixed absorption capacity (how many H₂(−1) it can
/// consume, counting the Γ̃ blocks that case (ii)/(iii) absorptions
/// produce), and the pipeline ends in C0 exactly when the H₂(−1) supply
/// does not exceed the total capacity.
fn absorption_capacity(b: &Block) -> usize {
    let gamma_capacity = |k: usize| -> usize {
        if k % 2 == 1 {
            (k - 1) / 2
        } else if k >= 4 {
            (k - 2) / 2
        } else {
            0
        }
    };
    match b.kind() {
        BlockKind::J => {
            let k = b.size();
            if k == 1 || k == 3 {
                0
            } else if k % 2 == 0 {
                k / 2
            } else {
                (k - 3) / 2
            }
        }
        BlockKind::Gamma | BlockKind::GammaTilde => gamma_capacity(b.size()),
        BlockKind::H | BlockKind::HTilde => {
            if b.is_h2_minus_one() {
                0
            } else {
                let mu = b.mu().unwrap();
                let one = GaussianRational::one();
                let k = b.size() / 2;
                if mu != &one && mu != &(-&one) {
                    k
                } else {
                    // H̃_{4t+2}(−1) or H̃_{4t}(1): one direct absorption,
                    // then the two Γ̃ outputs keep absorbing.
                    let gamma_size = if mu == &(-&one) { k } else { k - 1 };
                    1 + 2 * gamma_capacity(gamma_size)
                }
            }
        }
    }
}

#[test]
fn reduce_case_matches_capacity_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let cfg = SampleConfig {
        max_total_size: 20,
        ..Default::default()
    };
    let mut ctx = ReductionContext::new(5);
    let mut c0_seen = 0;
    let mut c1_seen = 0;
    for round in 0..60 {
        let mut s = random_block_sum(&mut rng, &cfg);
        // Bias half the rounds towards surplus H₂(−1) blocks so both end
        // cases get exercised.
        if round % 2 == 0 {
            use rand::Rng;
            let extra = rng.random_range(1..=5usize);
            s.push_with_multiplicity(
                Block::h(2, -GaussianRational::one()).unwrap(),
                extra,
            );
        }
        let h2 = s.count_matching(Block::is_h2_minus_one);
        let h4 = s.count_matching(Block::is_h4_plus_one);
        if h4 > h2 {
            assert!(reduce(&s, &mut ctx).is_err());
            continue;
        }
        let capacity: usize = s
            .expanded()
            .filter(|b| !b.is_h2_minus_one())
            .map(absorption_capacity)
            .sum();
        // H̃₄(1) pairing is mandatory and consumes one H₂(−1) each.
        let (chain, end, tag) = reduce(&s, &mut ctx).unwrap();
        let expected = if h2 <= capacity { CaseTag::C0 } else { CaseTag::C1 };
        assert_eq!(tag, expected, "{s}: h2 = {h2}, capacity = {capacity}");
        chain.verify().unwrap();
        // (τ,υ) is preserved end to end.
        assert_eq!(tau_upsilon(&s).unwrap(), tau_upsilon(&end).unwrap(), "{s}");
        match tag {
            CaseTag::C0 => {
                assert_eq!(end.count_matching(Block::is_h2_minus_one), 0);
                c0_seen += 1;
            }
            CaseTag::C1 => {
                assert_eq!(
                    end.count_matching(Block::is_h2_minus_one),
                    h2 - capacity,
                    "{s}"
                );
                c1_seen += 1;
            }
        }
    }
    assert!(c0_seen > 5 && c1_seen > 5, "sampler should hit both cases: C0 {c0_seen}, C1 {c1_seen}");
}

#[test]
fn blocksum_equality_is_mu_inverse_stable() {
    let (a, _) = parse_blocksum("H6(2)").unwrap();
    let (b, _) = parse_blocksum("H6(1/2)").unwrap();
    assert!(a.congruence_eq(&b));
    let text_a = format_blocksum(&a);
    let text_b = format_blocksum(&b);
    assert_eq!(text_a, text_b);
}
