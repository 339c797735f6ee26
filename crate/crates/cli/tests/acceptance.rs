//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its measured runtime. Run with
//! `cargo test -p xtax-cli --release --test acceptance -- --nocapture`.
//! Runtime budgets are enforced in release builds only.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use xtax_core::blocks::{permutation_p2k, Block, BlockSum};
use xtax_core::dsl::{format_blocksum, parse_blocksum};
use xtax_core::engine::{CongruenceEngine, WitnessMode};
use xtax_core::invariants::{census, tau_upsilon};
use xtax_core::matrix::Matrix;
use xtax_core::reduction::{
    absorb_type0, absorb_type_i, absorb_type_ii_generic, absorb_type_ii_minus_stage1,
    absorb_type_ii_plus_stage1, lemma_j3, TransformationStep,
};
use xtax_core::sample::{random_block_sum, SampleConfig};
use xtax_core::scalar::{GaussianRational, Scalar};
use xtax_core::solver::{
    decide, solve, verify, DecisionStatus, SolveTarget, SolverContext, VerifyMode,
};

fn gr(re: i64, im: i64) -> GaussianRational {
    GaussianRational::from_ints(re, im)
}

fn check_budget(name: &str, elapsed: Duration, budget: Duration) {
    println!(
        "ACCEPTANCE {name}: PASS in {:.2?} (budget {:.0?})",
        elapsed, budget
    );
    if !cfg!(debug_assertions) {
        assert!(
            elapsed <= budget,
            "{name} exceeded its runtime budget: {elapsed:.2?} > {budget:.2?}"
        );
    }
}

/// Criterion 1: every Table-1 row, k = 1..8 and μ ∈ {2, 1/2, 3, 2i}.
#[test]
fn criterion_1_table_reproduction() {
    let start = Instant::now();
    let mus = [
        gr(2, 0),
        GaussianRational::from_ratio(1, 2),
        gr(3, 0),
        gr(0, 2),
    ];
    let expect = |sum: &BlockSum, tau: usize, upsilon: usize| {
        let inv = tau_upsilon(sum).unwrap();
        assert_eq!(
            (inv.tau, inv.upsilon),
            (tau, upsilon),
            "tau/upsilon of {sum}"
        );
    };
    // Rows with fixed blocks.
    expect(&BlockSum::single(Block::j(1).unwrap()), 0, 0);
    expect(&BlockSum::single(Block::j(3).unwrap()), 2, 2);
    expect(&BlockSum::single(Block::gamma(1).unwrap()), 1, 1);
    expect(&BlockSum::single(Block::gamma_tilde(2).unwrap()), 1, 1);
    expect(&BlockSum::single(Block::h(2, gr(-1, 0)).unwrap()), 1, 0);
    // Parametric rows, k = 1..8 intersected with each row's condition.
    for k in 1..=8usize {
        if k >= 2 {
            expect(
                &BlockSum::single(Block::j(2 * k + 1).unwrap()),
                k + 1,
                2 * k,
            );
        }
        expect(&BlockSum::single(Block::j(2 * k).unwrap()), k, 2 * k);
        expect(
            &BlockSum::single(Block::gamma_tilde(2 * k + 1).unwrap()),
            k + 1,
            2 * k + 1,
        );
        if k >= 2 {
            expect(
                &BlockSum::single(Block::gamma_tilde(2 * k).unwrap()),
                k,
                2 * k - 1,
            );
        }
        if k >= 2 {
            expect(
                &BlockSum::single(Block::h_tilde(4 * k - 2, gr(-1, 0)).unwrap()),
                2 * k - 1,
                4 * k - 4,
            );
        }
        expect(
            &BlockSum::single(Block::h_tilde(4 * k, gr(1, 0)).unwrap()),
            2 * k + 1,
            4 * k,
        );
        for mu in &mus {
            expect(
                &BlockSum::single(Block::h_tilde(2 * k, mu.clone()).unwrap()),
                k,
                2 * k,
            );
        }
    }
    check_budget("1 (Table-1 reproduction)", start.elapsed(), Duration::from_secs(1));
}

/// Criterion 2: every explicit absorption matrix verifies with residual
/// exactly zero and preserves (τ,υ), for k ≤ 8 and μ ∈ {2, 1/2, 2i}.
#[test]
fn criterion_2_lemma_matrices() {
    let start = Instant::now();
    let assert_step = |step: &TransformationStep| {
        assert_eq!(step.mode, WitnessMode::Exact, "{:?}", step.justification);
        assert_eq!(step.residual, 0.0);
        assert_eq!(
            tau_upsilon(&step.source).unwrap(),
            tau_upsilon(&step.target).unwrap(),
            "(τ,υ)-invariance of {:?}",
            step.justification
        );
    };
    assert_step(&lemma_j3().unwrap());
    for k in [2usize, 4, 5, 6, 7, 8] {
        assert_step(&absorb_type0(k).unwrap());
    }
    for k in 3..=8usize {
        assert_step(&absorb_type_i(k).unwrap());
    }
    let mus = [gr(2, 0), GaussianRational::from_ratio(1, 2), gr(0, 2)];
    for mu in &mus {
        for k in 1..=8usize {
            assert_step(&absorb_type_ii_generic(k, mu).unwrap());
        }
    }
    for k in 1..=8usize {
        assert_step(&absorb_type_ii_minus_stage1(k).unwrap());
        assert_step(&absorb_type_ii_plus_stage1(k).unwrap());
    }
    check_budget("2 (lemma matrices)", start.elapsed(), Duration::from_secs(10));
}

/// Criterion 3: rank identity on 200 seeded random block sums, n ≤ 40.
#[test]
fn criterion_3_rank_identity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let cfg = SampleConfig {
        max_total_size: 40,
        forbid_j1: true,
        ..Default::default()
    };
    for _ in 0..200 {
        let s = random_block_sum(&mut rng, &cfg);
        let m = s.materialize();
        let sym = m.add(&m.transpose()).unwrap();
        let lhs = s.total_size() - sym.rank().unwrap();
        let c = census(&s);
        let rhs = c.j_odd + c.gamma_even + 2 * c.h_minus;
        assert_eq!(lhs, rhs, "rank identity on {s}");
    }
    check_budget("3 (rank identity)", start.elapsed(), Duration::from_secs(20));
}

/// Criterion 4: the congruence engine on the in-scope block pairs.
#[test]
fn criterion_4_congruence_engine() {
    let start = Instant::now();
    let mut engine = CongruenceEngine::with_seed(xtax_core::engine::DEFAULT_SEED);
    let tol = 1e-9;
    let verify_witness = |a: &Matrix, b: &Matrix, w: &xtax_core::engine::CongruenceWitness| {
        match w.mode {
            WitnessMode::Exact => {
                assert_eq!(
                    w.p.transpose().mul(a).unwrap().mul(&w.p).unwrap(),
                    *b,
                    "exact witness must verify"
                );
                assert_eq!(w.residual, 0.0);
            }
            WitnessMode::Numeric => {
                assert!(w.residual <= tol, "residual {}", w.residual);
            }
        }
    };
    for k in 1..=5usize {
        let a = Block::h_tilde(4 * k, gr(-1, 0)).unwrap().materialize();
        let g = Block::gamma_tilde(2 * k).unwrap().materialize();
        let b = g.direct_sum(&g);
        let w = engine.find_congruence(&a, &b).unwrap();
        verify_witness(&a, &b, &w);

        let a = Block::h_tilde(4 * k - 2, gr(1, 0)).unwrap().materialize();
        let g = Block::gamma_tilde(2 * k - 1).unwrap().materialize();
        let b = g.direct_sum(&g);
        let w = engine.find_congruence(&a, &b).unwrap();
        verify_witness(&a, &b, &w);
    }
    for k in 1..=8usize {
        let a = Block::gamma(k).unwrap().materialize();
        let b = Block::gamma_tilde(k).unwrap().materialize();
        let w = engine.find_congruence(&a, &b).unwrap();
        verify_witness(&a, &b, &w);
    }
    // H_{2k}(μ) to H̃_{2k}(μ) must be exact via the explicit P_{2k}.
    for k in 1..=8usize {
        for mu in [gr(2, 0), gr(0, 2), gr(-1, 0)] {
            let h = Block::h(2 * k, mu.clone()).unwrap().materialize();
            let ht = Block::h_tilde(2 * k, mu).unwrap().materialize();
            let p = permutation_p2k(k);
            assert_eq!(p.transpose().mul(&h).unwrap().mul(&p).unwrap(), ht);
        }
    }
    check_budget("4 (congruence engine)", start.elapsed(), Duration::from_secs(30));
}

/// Criterion 5: for 100 seeded random H̃₄(1)-free sums (n ≤ 32), solve
/// at m = min(τ,υ) is Consistent with verified X and exact certificate;
/// decide at min+1 is Inconsistent.
#[test]
fn criterion_5_end_to_end_theorem() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let cfg = SampleConfig {
        max_total_size: 32,
        forbid_h4_plus_one: true,
        ..Default::default()
    };
    let mut ctx = SolverContext::new(xtax_core::engine::DEFAULT_SEED);
    for round in 0..100 {
        let s = random_block_sum(&mut rng, &cfg);
        let inv = tau_upsilon(&s).unwrap();
        let m = inv.min();
        let d = solve(&s, &SolveTarget::IdentityRank(m), &mut ctx)
            .unwrap_or_else(|e| panic!("round {round}, solve {s} at m = {m}: {e}"));
        assert_eq!(d.status, DecisionStatus::Consistent, "{s} at m = {m}");
        let x = d.x.as_ref().unwrap_or_else(|| panic!("{s}: X missing"));
        let report = verify(
            &s.materialize(),
            x,
            &Matrix::identity(m),
            VerifyMode::Tolerance(1e-9),
        )
        .unwrap();
        assert!(report.pass, "{s}: residual {}", report.residual);
        if m > 0 {
            let cert = d
                .certificate
                .as_ref()
                .unwrap_or_else(|| panic!("{s}: exact certificate missing"));
            let gram = cert
                .x0
                .transpose()
                .mul(&s.materialize())
                .unwrap()
                .mul(&cert.x0)
                .unwrap();
            let mut expected = Matrix::zeros(m, m);
            for (i, v) in cert.d.iter().enumerate() {
                assert!(!v.is_zero());
                expected[(i, i)] = Scalar::Exact(v.clone());
            }
            assert_eq!(gram, expected, "{s}: certificate must verify exactly");
        }
        let d_over = decide(&s, m + 1).unwrap();
        assert_eq!(
            d_over.status,
            DecisionStatus::Inconsistent,
            "{s} at m = {}",
            m + 1
        );
    }
    check_budget("5 (end-to-end theorem)", start.elapsed(), Duration::from_secs(60));
}

/// Criterion 6: the known singular cases.
#[test]
fn criterion_6_known_singular_cases() {
    let start = Instant::now();
    let h2m1 = BlockSum::single(Block::h(2, gr(-1, 0)).unwrap());
    let d = decide(&h2m1, 1).unwrap();
    assert_eq!(d.status, DecisionStatus::Inconsistent);

    let h41 = BlockSum::single(Block::h_tilde(4, gr(1, 0)).unwrap());
    let d = decide(&h41, 3).unwrap();
    assert_eq!(d.status, DecisionStatus::Undecided);
    assert!(
        d.notes.iter().any(|n| n.contains("H4(1)")),
        "undecided note must name the open region"
    );

    let paired = BlockSum::from_blocks([
        Block::h_tilde(4, gr(1, 0)).unwrap(),
        Block::h(2, gr(-1, 0)).unwrap(),
    ]);
    let mut ctx = SolverContext::new(xtax_core::engine::DEFAULT_SEED);
    let d = solve(&paired, &SolveTarget::IdentityRank(4), &mut ctx).unwrap();
    assert_eq!(d.status, DecisionStatus::Consistent);
    let x = d.x.unwrap();
    let report = verify(
        &paired.materialize(),
        &x,
        &Matrix::identity(4),
        VerifyMode::Tolerance(1e-9),
    )
    .unwrap();
    assert!(report.pass, "residual {}", report.residual);
    check_budget("6 (known singular cases)", start.elapsed(), Duration::from_secs(1));
}

/// Criterion 7: parse∘format identity on 100 random sums, and the three
/// golden CLI outputs are byte-stable under the default seed.
#[test]
fn criterion_7_parser_and_cli() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let cfg = SampleConfig::default();
    for _ in 0..100 {
        let s = random_block_sum(&mut rng, &cfg);
        let text = format_blocksum(&s);
        let (back, _) = parse_blocksum(&text).unwrap();
        assert!(back.congruence_eq(&s));
        assert_eq!(format_blocksum(&back), text);
    }

    let bin = env!("CARGO_BIN_EXE_xtax");
    let run = |args: &[&str]| -> (String, i32) {
        let out = Command::new(bin).args(args).output().expect("binary runs");
        (
            String::from_utf8(out.stdout).expect("utf8 output"),
            out.status.code().unwrap_or(-1),
        )
    };
    let cases: [(&[&str], i32, &str); 3] = [
        (
            &["analyze", "H2(-1)", "--format", "json"],
            0,
            "golden/analyze_h2m1.json",
        ),
        (
            &["decide", "H4(1)", "--m", "3", "--format", "json"],
            2,
            "golden/decide_h41_m3.json",
        ),
        (
            &["solve", "J2 + H2(-1)", "--m", "2", "--format", "json"],
            0,
            "golden/solve_j2_h2m1_m2.json",
        ),
    ];
    for (args, want_code, golden) in cases {
        let (out1, code1) = run(args);
        let (out2, code2) = run(args);
        assert_eq!(code1, want_code, "exit code of {args:?}");
        assert_eq!(code2, want_code);
        assert_eq!(out1, out2, "byte stability of {args:?}");
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("tests")
            .join(golden);
        let expected = std::fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("golden file {}: {e}", path.display()));
        assert_eq!(out1, expected, "golden output of {args:?}");
    }
    check_budget("7 (parser and CLI)", start.elapsed(), Duration::from_secs(5));
}
