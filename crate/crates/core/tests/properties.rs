use num_bigint::{BigInt, BigUint};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ratioshift_core::markov::{
    cylinder_measure, dp_frequency_event, dp_pair_event, golden_stationary, perturbed_matrix, sample_window,
    sample_window_with, stationary_distribution, ProbVector, StochasticMatrix,
};
use ratioshift_core::tms::{bridge_concat, enumerate_admissible, is_admissible};
use ratioshift_core::verify::{count_ones, rn_analytic, rn_direct, witness_tail, WitnessContext};
use ratioshift_core::{build_measure_spec, AdjacencyMatrix, BlockLevel, BlockSchedule, Cylinder, MeasureSpec, Profile, Word};

fn big(v: i64) -> BigInt {
    BigInt::from(v)
}

fn one_level(lambda: f64, n: i64, m: i64) -> MeasureSpec {
    let lv = BlockLevel { lambda, start: big(1), mid: big(1 + n), end: big(1 + n + m) };
    MeasureSpec::new(BlockSchedule::new(vec![lv]).unwrap()).unwrap()
}

fn forbidden_free(symbols: &[u8]) -> bool {
    let a = AdjacencyMatrix::golden_mean();
    symbols.windows(2).all(|p| a.allows(p[0], p[1]))
}

/// Brute-force occupation probabilities over X_0 … X_{n+1}.
fn brute(pi: &ProbVector, p: &StochasticMatrix, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut ones = vec![0.0; n + 1];
    let mut pairs = vec![0.0; n + 1];
    let total = 3usize.pow(n as u32 + 2);
    for code in 0..total {
        let mut c = code;
        let xs: Vec<usize> = (0..n + 2)
            .map(|_| {
                let s = c % 3;
                c /= 3;
                s
            })
            .collect();
        let mut mass = pi.get(xs[0]);
        for w in xs.windows(2) {
            mass *= p.get(w[0], w[1]);
        }
        if mass == 0.0 {
            continue;
        }
        let visits = (1..=n).filter(|&j| xs[j] == 0).count();
        let rising = (1..=n).filter(|&j| xs[j] == 1 && xs[j + 1] == 2).count();
        ones[visits] += mass;
        pairs[rising] += mass;
    }
    (ones, pairs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn admissibility_matches_forbidden_pairs(symbols in prop::collection::vec(0u8..3, 1..40), start in -50i64..50) {
        let w = Word::new(symbols.clone(), big(start)).unwrap();
        prop_assert_eq!(is_admissible(&w, &AdjacencyMatrix::golden_mean()).unwrap(), forbidden_free(&symbols));
    }

    #[test]
    fn sampled_words_are_admissible(seed in any::<u64>(), lambda in 1.0f64..4.0, from in -20i64..10, len in 1i64..60) {
        let spec = one_level(lambda, 3, 5);
        let w = sample_window(&spec, &big(from), &big(from + len - 1), seed).unwrap();
        prop_assert_eq!(w.len() as i64, len);
        prop_assert!(is_admissible(&w, &AdjacencyMatrix::golden_mean()).unwrap());
    }

    #[test]
    fn enumeration_counts_match_matrix_powers(len in 1usize..11, first in 0u8..3, last in 0u8..3) {
        let a = AdjacencyMatrix::golden_mean();
        let words = enumerate_admissible(&a, len, Some(first), Some(last)).unwrap();
        let counts = a.power_counts(len as u32 - 1);
        prop_assert_eq!(BigUint::from(words.len()), counts[first as usize][last as usize].clone());
        prop_assert!(words.iter().all(|w| forbidden_free(&w.symbols)));
    }

    #[test]
    fn bridge_keeps_the_prefix_and_joins(seed in any::<u64>(), left_len in 3i64..12, right_len in 1i64..6) {
        let spec = MeasureSpec::stationary();
        let left = sample_window(&spec, &big(0), &big(left_len - 1), seed).unwrap();
        let right = sample_window(&spec, &big(left_len), &big(left_len + right_len - 1), seed ^ 0x9e37).unwrap();
        let b = bridge_concat(&left, &right, &AdjacencyMatrix::golden_mean()).unwrap();
        prop_assert!(b.changed <= 2);
        let keep = left.len() - 2;
        prop_assert_eq!(&b.word.symbols[..keep], &left.symbols[..keep]);
        let differing = b.word.symbols.iter().zip(&left.symbols).filter(|(x, y)| x != y).count();
        prop_assert_eq!(differing, b.changed);
        let mut joined = b.word.symbols.clone();
        joined.extend(&right.symbols);
        prop_assert!(forbidden_free(&joined));
    }

    #[test]
    fn cylinder_mass_is_additive(seed in any::<u64>(), lambda in 1.0f64..4.0, start in -6i64..12, len in 1i64..6) {
        let spec = one_level(lambda, 3, 4);
        let w = sample_window(&spec, &big(start), &big(start + len - 1), seed).unwrap();
        let whole = cylinder_measure(&spec, &Cylinder::new(w.clone())).exp();
        let mut parts = 0.0;
        for s in 0..3u8 {
            let mut symbols = w.symbols.clone();
            symbols.push(s);
            parts += cylinder_measure(&spec, &Cylinder::new(Word::new(symbols, w.start.clone()).unwrap())).exp();
        }
        prop_assert!((whole - parts).abs() <= 1e-12 * whole.max(1e-300) + 1e-15);
        let prefixed: f64 = (0..3u8)
            .map(|s| {
                let mut symbols = vec![s];
                symbols.extend(&w.symbols);
                cylinder_measure(&spec, &Cylinder::new(Word::new(symbols, &w.start - 1).unwrap())).exp()
            })
            .sum();
        prop_assert!((whole - prefixed).abs() <= 1e-12 * whole + 1e-15);
    }

    #[test]
    fn occupation_dp_matches_enumeration(lambda in 1.0f64..3.0, n in 1u64..8, lo in 0.0f64..0.6, width in 0.05f64..0.5, thr in 0.0f64..0.4) {
        let p = perturbed_matrix(lambda).unwrap();
        let pi = stationary_distribution(&p).unwrap();
        let (ones, pairs) = brute(&pi, &p, n as usize);
        let hi = lo + width;
        let want: f64 = ones.iter().enumerate().filter(|(c, _)| {
            let f = *c as f64 / n as f64;
            f > lo && f < hi
        }).map(|(_, m)| m).sum();
        prop_assert!((dp_frequency_event(&pi, &p, n, lo, hi).unwrap() - want).abs() < 1e-12);
        let want: f64 = pairs.iter().enumerate().filter(|(c, _)| *c as f64 / n as f64 > thr).map(|(_, m)| m).sum();
        prop_assert!((dp_pair_event(&pi, &p, n, thr).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn stationary_vector_is_continuous_at_one(delta in 1e-9f64..1e-2) {
        let near = stationary_distribution(&perturbed_matrix(1.0 + delta).unwrap()).unwrap();
        let farther = stationary_distribution(&perturbed_matrix(1.0 + 2.0 * delta).unwrap()).unwrap();
        let d1 = near.sup_distance(&golden_stationary());
        let d2 = farther.sup_distance(&golden_stationary());
        prop_assert!(d1 <= delta);
        prop_assert!(d1 <= d2 + 1e-15);
    }

    #[test]
    fn witness_tail_realises_the_counts(prev in 0u8..3, ones in 16u64..30, extra in 0u64..30) {
        let ctx = WitnessContext { level: 2, target: 1, p: 3, start: 6, n: 60, lambda: 1.04, target_lambda: 1.5 };
        let doubles = ones.saturating_sub(extra);
        if let Ok(tail) = witness_tail(prev, ones, doubles, &ctx) {
            prop_assert_eq!(tail.len() as u64, ctx.n + 1);
            let mut s = vec![prev];
            s.extend(&tail);
            prop_assert!(forbidden_free(&s));
            prop_assert_eq!(count_ones(&tail, ctx.n as usize), (ones + ctx.p, doubles + ctx.p));
        }
    }

    #[test]
    fn analytic_and_direct_derivatives_agree(seed in any::<u64>(), offset in 0u64..1000) {
        let (spec, params) = build_measure_spec(2, &Profile::desk()).unwrap();
        let top = &params[1];
        let span: u64 = (&top.m - &top.big_n).min(BigInt::from(1000)).try_into().unwrap();
        let n = &top.big_n + offset % span;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = sample_window_with(&spec, &big(-1), &(&n + &top.big_n + 1), &mut rng).unwrap();
        let a = rn_analytic(&spec, &x, &n, 2).unwrap();
        let d = rn_direct(&spec, &x, &n, None).unwrap();
        prop_assert!(a.overlaps(&d), "{a:?} vs {d:?}");
    }
}
