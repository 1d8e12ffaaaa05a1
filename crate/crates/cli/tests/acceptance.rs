//! One line per acceptance criterion. Runs as a plain binary so the lines are
//! always visible; the process fails if any attainable check fails.

use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ratioshift_cli::{commands, RunConfig, SeedSource};
use ratioshift_core::construction::ConditionStatus;
use ratioshift_core::markov::{
    cylinder_measure, golden_matrix, golden_stationary, sample_window_with, stationary_distribution, PHI,
};
use ratioshift_core::tms::{enumerate_admissible, is_admissible};
use ratioshift_core::torus::{itinerary, markov_adjacency, phi_approx, pushforward_check, region_areas, TorusPoint, BOUNDARY_MARGIN};
use ratioshift_core::verify::{
    block_counts, conservativity_report, exactness_constant, good_cylinder, hellinger_criterion, marker_variant,
    ratio_set_experiment, rn_direct, visit_log_factor, witness_word, Evidence, Marker, RatioSetConfig, Verdict,
    WitnessContext,
};
use ratioshift_core::{
    build_measure_spec, validate_params, AdjacencyMatrix, BlockLevel, BlockSchedule, Cylinder, MeasureSpec, Mode,
    Profile, TailRule, Word,
};

enum Outcome {
    Pass(String),
    Fail(String),
    /// Unattainable as stated; the weaker statement that can hold was checked.
    Unattainable { reason: String, restatement: Result<String, String> },
}

type Check = fn() -> Outcome;

fn ensure(ok: bool, pass: String, fail: impl FnOnce() -> String) -> Outcome {
    if ok {
        Outcome::Pass(pass)
    } else {
        Outcome::Fail(fail())
    }
}

fn big(v: i64) -> BigInt {
    BigInt::from(v)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn stationary_vector() -> Outcome {
    let q = golden_matrix();
    let mut best = Duration::MAX;
    let mut pi = None;
    for _ in 0..20 {
        let (v, d) = timed(|| stationary_distribution(&q).expect("Q has a stationary vector"));
        best = best.min(d);
        pi = Some(v);
    }
    let pi = pi.expect("ran");
    let s5 = 5f64.sqrt();
    let want = [1.0 / s5, 1.0 / (PHI * s5), 1.0 / (PHI * s5)];
    let err = (0..3).map(|i| (pi.get(i) - want[i]).abs()).fold(0.0, f64::max);
    ensure(err <= 1e-12 && best < Duration::from_millis(1), format!("max error {err:.1e}, {best:?}"), || {
        format!("max error {err:.1e}, {best:?}")
    })
}

fn base_case() -> Outcome {
    let config = RunConfig { levels: 1, ..RunConfig::default() };
    let out = commands::construct(&config, SeedSource::Config).expect("base case builds");
    let p = &out.report.sections["parameters"][0];
    let got: Vec<&str> = ["start", "n", "big_n", "m", "big_m"].iter().map(|k| p[*k].as_str().unwrap_or("?")).collect();
    ensure(got == ["1", "2", "3", "3", "6"], format!("M_0, n_1, N_1, m_1, M_1 = {}", got.join(", ")), || {
        format!("got {got:?}")
    })
}

fn full_level_two() -> Outcome {
    let profile = Profile::full();
    let ((_, params), elapsed) = timed(|| build_measure_spec(2, &profile).expect("full level 2 builds"));
    let report = validate_params(&params, &profile).expect("validation runs");
    let level2 = &report.levels[1];
    // these three are non-strict inequalities and the construction takes the
    // smallest admissible value, so equality is a pass
    let non_strict = ["lattice_room", "failure_bound", "growth"];
    let mut bad = Vec::new();
    let mut tight = Vec::new();
    for c in &level2.conditions {
        let positive = match c.slack {
            None => true,
            Some(s) if non_strict.contains(&c.name.as_str()) => {
                if s == 0.0 {
                    tight.push(c.name.as_str());
                }
                s >= 0.0
            }
            Some(s) => s > 0.0,
        };
        let wanted = if c.name == "finite_approximation" || c.name == "lattice_room" || params[1].n <= big(100_000) {
            c.status == ConditionStatus::Pass
        } else {
            matches!(c.status, ConditionStatus::Pass | ConditionStatus::Symbolic)
        };
        if !(wanted && positive) {
            bad.push(format!("{} {:?} {:?}", c.name, c.status, c.slack));
        }
    }
    let base_ok = report.levels[0].conditions.iter().all(|c| c.status != ConditionStatus::Fail);
    ensure(
        bad.is_empty() && base_ok && elapsed < Duration::from_secs(300),
        format!(
            "{} level-2 conditions pass, strict ones with positive slack, tight at equality: [{}], n_2 = {}, {elapsed:.2?}",
            level2.conditions.len(),
            tight.join(", "),
            params[1].n
        ),
        || format!("failing: {bad:?}, base ok {base_ok}, {elapsed:.2?}"),
    )
}

fn pair_mass() -> Outcome {
    // π_Q(2)·Q_{2,3} = 1/(φ√5·φ²) = 1/(5 + 2√5) since φ³ = 2 + √5.
    // 5 + 2√5 < 15 ⇔ √5 < 5 ⇔ 5 < 25, decided in integers.
    let exact_gt = 5u64 < 25;
    let numeric = golden_stationary().get(1) * golden_matrix().get(1, 2);
    let closed = 1.0 / (5.0 + 2.0 * 5f64.sqrt());
    let also = 1.0 / (PHI * 5f64.sqrt() * (1.0 + PHI));
    ensure(
        exact_gt && (numeric - closed).abs() < 1e-15 && (also - closed).abs() < 1e-15,
        format!("π_Q(2)·Q_23 = 1/(5 + 2√5) = {closed:.15} > 1/15"),
        || format!("numeric {numeric}, closed {closed}"),
    )
}

fn rn_consistency() -> Outcome {
    let config = RunConfig { profile: Mode::Desk, samples: Some(100), ..RunConfig::default() };
    let profile = config.profile();
    let (_, params) = build_measure_spec(2, &profile).expect("desk level 2 builds");
    let spec_file = ratioshift_cli::SpecFile::new(profile.clone(), config.tail_rule(&profile), params);
    let (out, elapsed) = timed(|| commands::experiment_rn(&config, &spec_file, SeedSource::Config).expect("rn runs"));
    let s = &out.report.sections["rn-crosscheck"];
    ensure(
        s["overlaps"] == "100" && s["trials"] == "100" && elapsed < Duration::from_secs(60),
        format!("100/100 overlaps, max log gap {}, {elapsed:.2?}", s["max_log_gap"].as_str().unwrap_or("?")),
        || format!("{s}"),
    )
}

/// μ(T^m B) against Σ μ(C)·rn(C, m) over the admissible refinements C of B on
/// a window that covers every contributing factor.
fn change_of_variables_on(spec: &MeasureSpec, lo: i64, hi: i64, max_len: usize, max_shift: i64) -> Result<usize, String> {
    let adj = AdjacencyMatrix::golden_mean();
    let len = (hi - lo + 1) as usize;
    let words: Vec<Word> = enumerate_admissible(&adj, len, None, None)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|w| Word::new(w.symbols, big(lo)).expect("admissible"))
        .collect();
    let masses: Vec<f64> = words.iter().map(|w| cylinder_measure(spec, &Cylinder::new(w.clone())).exp()).collect();
    let mut checked = 0;
    for m in -max_shift..=max_shift {
        let mut terms = Vec::with_capacity(words.len());
        for w in &words {
            let r = rn_direct(spec, w, &big(m), None).map_err(|e| e.to_string())?;
            terms.push((r.value(), r.eta));
        }
        for blen in 1..=max_len {
            for b in enumerate_admissible(&adj, blen, None, None).map_err(|e| e.to_string())? {
                for start in lo..=hi + 1 - blen as i64 {
                    let off = (start - lo) as usize;
                    let (mut sum, mut err) = (0.0, 0.0);
                    for (i, w) in words.iter().enumerate() {
                        if w.symbols[off..off + blen] == b.symbols[..] {
                            sum += masses[i] * terms[i].0;
                            err += masses[i] * terms[i].0 * terms[i].1.exp_m1();
                        }
                    }
                    let moved = Cylinder::new(Word::new(b.symbols.clone(), big(start - m)).expect("admissible"));
                    let lhs = cylinder_measure(spec, &moved).exp();
                    if (lhs - sum).abs() > err + 1e-12 * (1.0 + lhs) {
                        return Err(format!("B = {} at {start}, m = {m}: {lhs} vs {sum}", b.digits()));
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(checked)
}

fn change_of_variables() -> Outcome {
    let (desk1, _) = build_measure_spec(1, &Profile::desk()).expect("level 1 builds");
    let steep = MeasureSpec::new(
        BlockSchedule::new(vec![BlockLevel { lambda: 3.0, start: big(1), mid: big(3), end: big(6) }]).expect("schedule"),
    )
    .expect("spec");
    let mut total = 0;
    for spec in [&desk1, &steep] {
        match change_of_variables_on(spec, -4, 7, 4, 4) {
            Ok(n) => total += n,
            Err(e) => return Outcome::Fail(e),
        }
    }
    Outcome::Pass(format!("{total} (B, n) pairs with |B| ≤ 4, |n| ≤ 4 on window [-4, 7]"))
}

fn witness_identity() -> Outcome {
    let (spec, params) = build_measure_spec(2, &Profile::desk()).expect("desk level 2 builds");
    let ctx = WitnessContext::new(&params, 2, 1).expect("context");
    let lattice_exact = params[1].log_distortion_coefficient() * num_rational::BigRational::from(big(ctx.p as i64))
        == params[0].log_distortion_coefficient();
    let target = (params[0].lambda_f64() * (1.0 + PHI) / (1.0 + PHI * params[0].lambda_f64())).ln();
    let adj = AdjacencyMatrix::golden_mean();
    let marker = Marker::new(vec![0, 2, 1]).expect("marker");
    let ln_l2 = params[1].lambda_f64().ln();
    let per_one = visit_log_factor(params[1].lambda_f64());
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut done, mut drift_max) = (0, 0.0f64);
    while done < 1000 {
        let x = sample_window_with(&spec, &big(-1), &big(ctx.end() as i64), &mut rng).expect("sample");
        let b = Cylinder::new(Word::new(x.symbols[..3].to_vec(), big(-1)).expect("admissible"));
        let c = Word::new(x.symbols[1..].to_vec(), big(0)).expect("admissible");
        if !good_cylinder(&c, &ctx).expect("counts").good {
            continue;
        }
        let d = match witness_word(&b, &c, &ctx) {
            Ok(d) => d,
            Err(e) => return Outcome::Fail(format!("witness failed on a good cylinder: {e}")),
        };
        let before = block_counts(&c, &spec, 2).expect("covered");
        let after = block_counts(&d, &spec, 2).expect("covered");
        let dl = after.ones as i64 - before.ones as i64;
        let dv = after.double_ones as i64 - before.double_ones as i64;
        if dl != ctx.p as i64 || dv != ctx.p as i64 || !is_admissible(&d, &adj).unwrap_or(false) {
            return Outcome::Fail(format!("ΔL = {dl}, ΔV = {dv}, p = {}", ctx.p));
        }
        let forced = dl as f64 * per_one + dv as f64 * ln_l2;
        if (forced - target).abs() > 1e-12 {
            return Outcome::Fail(format!("forced {forced} vs target {target}"));
        }
        let (marked, _) = marker_variant(&d, &marker).expect("marker joins");
        let m = block_counts(&marked, &spec, 2).expect("covered");
        let drift = (m.ones as f64 - after.ones as f64) * per_one + (m.double_ones as f64 - after.double_ones as f64) * ln_l2;
        drift_max = drift_max.max(drift.abs());
        done += 1;
    }
    ensure(
        lattice_exact && drift_max <= 4.0 * ln_l2,
        format!("1000 witnesses with ΔL = ΔV = {}, marker drift {drift_max:.3e} ≤ 4 ln λ_2 = {:.3e}", ctx.p, 4.0 * ln_l2),
        || format!("lattice exact {lattice_exact}, drift {drift_max} against {}", 4.0 * ln_l2),
    )
}

fn exactness() -> Outcome {
    let mut specs = vec![("Q".to_string(), MeasureSpec::stationary())];
    for (name, profile) in [("desk", Profile::desk()), ("full", Profile::full())] {
        for t in 1..=2 {
            specs.push((format!("{name} level {t}"), build_measure_spec(t, &profile).expect("builds").0));
        }
    }
    let mut worst = f64::INFINITY;
    for (name, spec) in &specs {
        let last = spec.schedule().boundaries().last().cloned().unwrap_or_default();
        let c = exactness_constant(spec, 3, &big(-3), &(last + 6));
        if c <= 0.0 {
            return Outcome::Fail(format!("{name}: C = {c}"));
        }
        worst = worst.min(c);
    }
    let one = exactness_constant(&MeasureSpec::stationary(), 1, &big(-3), &big(6));
    ensure(one == 0.0, format!("C(3) > 0 on {} specs (min {worst:.3e}); window-1 value 0 for Q", specs.len()), || {
        format!("window-1 value {one}")
    })
}

fn conservativity() -> Outcome {
    let mut lines = Vec::new();
    let mut restated = true;
    for profile in [Profile::desk(), Profile::full()] {
        let (_, params) = build_measure_spec(2, &profile).expect("builds");
        let r = conservativity_report(&params, &profile);
        // partial sums from level 2 on: every term is at least 1/2
        let later = r.levels.iter().skip(1).all(|g| g.holds && g.ln_term >= 0.5f64.ln());
        restated &= later;
        lines.push(format!("{:?}: levels ≥ 2 hold {later}", profile.mode));
    }
    Outcome::Unattainable {
        reason: "the fixed base case has m_1 = N_1 = 3, so (m_1 − N_1)·λ_1^(−2N_1) = 0 < 1 and the sum after one level is 0 < 1/2".into(),
        restatement: if restated {
            Ok(format!("every level ≥ 2 satisfies the growth bound, so the sums over levels 2..T are ≥ (T − 1)/2 ({})", lines.join(", ")))
        } else {
            Err(lines.join(", "))
        },
    }
}

fn hellinger() -> Outcome {
    let (desk, _) = build_measure_spec(2, &Profile::desk()).expect("builds");
    let r = hellinger_criterion(&desk, 3, 1e-8);
    let dominated = r.partial_sums.iter().zip(&r.dominating_sums).all(|(s, d)| s <= d);
    let inject = MeasureSpec::with_tail(
        BlockSchedule::new(vec![BlockLevel { lambda: 2.0, start: big(1), mid: big(3), end: big(6) }]).expect("schedule"),
        TailRule::Constant,
    )
    .expect("spec");
    let d = hellinger_criterion(&inject, 64, 1e-8);
    ensure(
        r.verdict == Verdict::Summable && r.tail_bound < 1e-8 && dominated && d.verdict == Verdict::Divergent,
        format!("desk tail bound {:.3e} < 1e-8, λ ≡ 2 divergent", r.tail_bound),
        || format!("desk {:?} tail {}, dominated {dominated}, inject {:?}", r.verdict, r.tail_bound, d.verdict),
    )
}

fn torus() -> Outcome {
    let start = Instant::now();
    let areas = region_areas();
    let pi = golden_stationary();
    let area_err = (0..3).map(|i| (areas[i] - pi.get(i)).abs()).fold(0.0, f64::max);
    let adjacency_ok = markov_adjacency().map(|a| a == AdjacencyMatrix::golden_mean()).unwrap_or(false);
    let push = match pushforward_check(2) {
        Ok(p) => p.max_residual,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut done, mut skipped, mut worst) = (0, 0, 0.0f64);
    while done < 1000 {
        let p = TorusPoint::new(rng.gen(), rng.gen());
        let Ok(w) = itinerary(p, 10, BOUNDARY_MARGIN) else {
            skipped += 1;
            continue;
        };
        let (q, bound) = match phi_approx(&w) {
            Ok(v) => v,
            Err(e) => return Outcome::Fail(e.to_string()),
        };
        let dist = p.distance(&q);
        if dist > bound {
            return Outcome::Fail(format!("round trip error {dist} above bound {bound}"));
        }
        worst = worst.max(dist / bound);
        done += 1;
    }
    let elapsed = start.elapsed();
    ensure(
        area_err <= 1e-9 && adjacency_ok && push <= 1e-9 && elapsed < Duration::from_secs(60),
        format!(
            "area error {area_err:.1e}, adjacency exact, depth-2 residual {push:.1e}, 1000 round trips ({skipped} near boundaries), worst error/bound {worst:.3}, {elapsed:.2?}"
        ),
        || format!("area {area_err}, adjacency {adjacency_ok}, residual {push}, {elapsed:?}"),
    )
}

fn ratio_set() -> Outcome {
    let (spec, params) = build_measure_spec(2, &Profile::desk()).expect("builds");
    let b = Cylinder::parse("132", -1).expect("admissible");
    let config = RatioSetConfig { samples: 100_000, ..RatioSetConfig::default() };
    let (r, elapsed) = timed(|| ratio_set_experiment(&spec, &params, &b, &config));
    let r = match r {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let Some(w) = r.log_witness_mass else { return Outcome::Fail("no witness mass".into()) };
    let lower = r.mass_interval.0;
    let want_ratio = params[0].lambda_f64() * (1.0 + PHI) / (1.0 + PHI * params[0].lambda_f64());
    ensure(
        lower.ln() > w + 0.9f64.ln() && r.verdict == Evidence::Positive && (r.ratio - want_ratio).abs() < 1e-12 && elapsed < Duration::from_secs(300),
        format!("lower bound {lower:.4e} > 0.9 × witness mass e^{w:.2}, {elapsed:.2?}"),
        || format!("lower {lower}, ln witness {w}, verdict {:?}, {elapsed:?}", r.verdict),
    )
}

fn determinism() -> Outcome {
    let runs: [&[&str]; 3] = [
        &["experiment", "ratio-set", "--profile", "desk", "--samples", "20000", "--seed", "5"],
        &["experiment", "rn", "--profile", "desk", "--seed", "5"],
        &["experiment", "torus", "--samples", "300", "--seed", "5"],
    ];
    for args in runs {
        let mut outputs = Vec::new();
        for threads in ["1", "4", "16", "4"] {
            let out = Command::new(env!("CARGO_BIN_EXE_ratioshift"))
                .args(args)
                .args(["--threads", threads])
                .env_remove("RATIOSHIFT_SEED")
                .output()
                .expect("binary runs");
            if !out.status.success() {
                return Outcome::Fail(format!("{args:?} exited {:?}", out.status.code()));
            }
            outputs.push(out.stdout);
        }
        if outputs.iter().any(|o| o != &outputs[0]) {
            return Outcome::Fail(format!("{args:?} differs across thread counts"));
        }
    }
    Outcome::Pass("ratio-set, rn and torus reports byte-identical under 1, 4, 16 threads and on repeat".into())
}

fn main() {
    let checks: [(&str, Check); 13] = [
        ("stationary vector", stationary_vector),
        ("base case", base_case),
        ("full level 2", full_level_two),
        ("pair mass", pair_mass),
        ("rn consistency", rn_consistency),
        ("change of variables", change_of_variables),
        ("witness identity", witness_identity),
        ("exactness", exactness),
        ("conservativity", conservativity),
        ("hellinger", hellinger),
        ("torus", torus),
        ("ratio-set evidence", ratio_set),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let line = match check() {
            Outcome::Pass(detail) => format!("PASS {:>2} {name}: {detail}", i + 1),
            Outcome::Fail(detail) => {
                failed += 1;
                format!("FAIL {:>2} {name}: {detail}", i + 1)
            }
            Outcome::Unattainable { reason, restatement } => match restatement {
                Ok(r) => format!("FAIL {:>2} {name}: {reason}; attainable restatement holds: {r}", i + 1),
                Err(r) => {
                    failed += 1;
                    format!("FAIL {:>2} {name}: {reason}; attainable restatement also fails: {r}", i + 1)
                }
            },
        };
        println!("{line}");
    }
    if failed > 0 {
        eprintln!("{failed} attainable criteria failed");
        std::process::exit(1);
    }
}
