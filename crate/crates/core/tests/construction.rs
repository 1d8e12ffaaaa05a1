use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use ratioshift_core::construction::{distortion_inverse, distortion_value, ConditionStatus};
use ratioshift_core::markov::PHI;
use ratioshift_core::{build_measure_spec, validate_params, Error, Profile};

/// Stationary vector of the λ-perturbed chain solved by hand: π_2 = π_3 and
/// π_1·Q(1,3) = π_2·Q(2,1).
fn stationary_by_hand(lambda: f64) -> [f64; 3] {
    let b = 1.0 / (1.0 + PHI * lambda);
    let c = PHI / (1.0 + PHI);
    let p2 = 1.0 / (c / b + 2.0);
    [p2 * c / b, p2, p2]
}

/// Smallest K with λ^(2·m_prev) < e^(1/4) and the stationary vector within 1/4 of π_Q.
fn oracle_k(lambda1: f64, m_prev: f64) -> (u64, f64) {
    let r = distortion_value(lambda1);
    let q = stationary_by_hand(1.0);
    (1..)
        .map(|k| (k, distortion_inverse(r.powf(1.0 / k as f64))))
        .find(|&(_, l)| {
            let p = stationary_by_hand(l);
            let d = (0..3).map(|i| (p[i] - q[i]).abs()).fold(0.0, f64::max);
            2.0 * m_prev * l.ln() < 0.25 && d < 0.25
        })
        .map(|(k, l)| (k as u64, l))
        .unwrap()
}

#[test]
fn level_two_matches_independent_oracles() {
    for profile in [Profile::desk(), Profile::full()] {
        let (_, params) = build_measure_spec(2, &profile).unwrap();
        let (k, lambda) = oracle_k(1.5, 3.0);
        let p = &params[1];
        assert_eq!(p.lattice_k, BigUint::from(k));
        assert!((p.lambda_f64() - lambda).abs() < 1e-12);
        assert_eq!(p.start, BigInt::from(6));
        assert_eq!(p.n, BigInt::from(20 * k));
        assert_eq!(p.big_n, &p.start + &p.n);
        // growth bound (m − N)·1.5^(−2N) ≥ 1 at its minimum
        let e = 2 * u32::try_from(&p.big_n).unwrap();
        let growth = BigUint::from(3u32).pow(e).div_ceil(&BigUint::from(2u32).pow(e));
        let growth = BigInt::from(growth);
        if profile == Profile::desk() {
            assert_eq!(&p.m - &p.big_n, growth);
        } else {
            // the failure bound with δ = 9^(−3N) dominates at full fidelity
            assert!(&p.m - &p.big_n > growth);
            assert!(validate_params(&params, &profile).unwrap().all_hold());
        }
        assert_eq!(p.big_m, &p.big_n + &p.m);
    }
}

#[test]
fn level_one_is_the_fixed_base_case() {
    let (_, params) = build_measure_spec(1, &Profile::full()).unwrap();
    let p = &params[0];
    let got = [&p.start, &p.n, &p.big_n, &p.m, &p.big_m].map(|v| v.to_string());
    assert_eq!(got, ["1", "2", "3", "3", "6"]);
    let report = validate_params(&params, &Profile::full()).unwrap();
    assert_eq!(report.levels[0].condition("growth").unwrap().status, ConditionStatus::Exempt);
    assert!(report.all_hold());
}

#[test]
fn level_three_is_infeasible() {
    assert!(matches!(build_measure_spec(3, &Profile::desk()), Err(Error::Infeasible { level: 3, .. })));
}

#[test]
fn distortion_round_trip() {
    for x in [1.0, 1.2, 1.5, 2.0, 5.0] {
        assert!((distortion_inverse(distortion_value(x)) - x).abs() < 1e-12);
    }
}
