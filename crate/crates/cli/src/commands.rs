//! One function per subcommand; each returns the report plus side files.

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use ratioshift_core::markov::{golden_stationary, sample_window_with, SUM_TOL};
use ratioshift_core::torus::{
    itinerary, markov_adjacency, phi_approx, pushforward_check, region_areas, region_geometry, TorusPoint, BOUNDARY_MARGIN,
};
use ratioshift_core::verify::{
    conservativity_report, exactness_constant, hellinger_criterion, ratio_set_experiment, rn_analytic, rn_direct, Evidence,
    RatioSetConfig, Verdict,
};
use ratioshift_core::{build_measure_spec, validate_params, AdjacencyMatrix, Cylinder, Error, Mode, TailRule, Word};

use crate::config::{RunConfig, SeedSource};
use crate::report::{csv_text, Report, SpecFile};
use crate::CliError;

/// A finished command: the report, extra files to write, and the verdict.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    /// File name and contents, written next to the report.
    pub files: Vec<(String, String)>,
    pub success: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        u8::from(!self.success)
    }
}

fn input_error(e: &Error) -> bool {
    matches!(e, Error::Input(_) | Error::StateOutOfRange { .. })
}

pub fn construct(config: &RunConfig, seed: SeedSource) -> Result<Outcome, CliError> {
    config.check()?;
    let profile = config.profile();
    let mut report = Report::new("construct", config, seed);
    let (spec, params) = match build_measure_spec(config.levels, &profile) {
        Ok(x) => x,
        Err(e) if input_error(&e) => return Err(e.into()),
        Err(e) => {
            report.section("diagnostic", &json!({ "error": e.to_string(), "levels_requested": config.levels }))?;
            return Ok(Outcome { report, files: Vec::new(), success: false });
        }
    };
    let validation = validate_params(&params, &profile)?;
    report.section("parameters", &params)?;
    report.section("validation", &validation)?;
    report.section("schedule", spec.schedule())?;
    let file = SpecFile::new(profile.clone(), config.tail_rule(&profile), params.clone());
    let rows = params.iter().map(|p| {
        vec![
            p.level.to_string(),
            p.lambda.clone(),
            p.lattice_k.to_string(),
            p.start.to_string(),
            p.n.to_string(),
            p.big_n.to_string(),
            p.k_mix.to_string(),
            p.m.to_string(),
            p.big_m.to_string(),
        ]
    });
    let csv = csv_text(&["level", "lambda", "lattice_k", "start", "n", "big_n", "k", "m", "big_m"], rows)?;
    Ok(Outcome {
        report,
        files: vec![("spec.json".into(), file.to_json()), ("parameters.csv".into(), csv)],
        success: validation.all_hold(),
    })
}

#[derive(Serialize)]
struct Section<T: Serialize> {
    verdict: &'static str,
    detail: T,
}

pub fn verify(config: &RunConfig, spec_file: &SpecFile, seed: SeedSource) -> Result<Outcome, CliError> {
    config.check()?;
    let spec = spec_file.measure()?;
    let mut report = Report::new("verify", config, seed);
    let built = spec_file.params.len();
    let horizon = config.horizon.unwrap_or(match spec_file.tail {
        TailRule::Constant if built > 0 => 64,
        _ => built,
    });
    let hell = hellinger_criterion(&spec, horizon, config.tolerance);
    let hell_ok = hell.verdict != Verdict::Divergent;
    let hell_verdict = match hell.verdict {
        Verdict::Summable => "summable",
        Verdict::Divergent => "divergent dominating series",
        Verdict::Inconclusive => "inconclusive",
    };
    let lo = BigInt::from(-3);
    let hi = spec.schedule().boundaries().last().cloned().unwrap_or_default() + 6;
    let c = exactness_constant(&spec, 3, &lo, &hi);
    let window_one = exactness_constant(&spec, 1, &lo, &hi);
    let (cons_ok, cons) = if built == 0 {
        (true, json!({ "stationary": true, "note": "no perturbed levels; the measure is shift-invariant" }))
    } else {
        let r = conservativity_report(&spec_file.params, &spec_file.profile);
        let ok = r.levels.iter().skip(1).all(|g| g.holds);
        let floor = (1..=built).map(|t| r.partial_sum_at_least(t, (t - 1) as f64 / 2.0)).collect::<Vec<_>>();
        (ok, json!({ "stationary": false, "levels": r.levels, "ln_partial_sums": r.ln_partial_sums, "sum_at_least_half_per_grown_level": floor, "base_case_exempt": true }))
    };
    report.section("nonsingularity", &Section { verdict: hell_verdict, detail: &hell })?;
    report.section("exactness", &json!({ "verdict": if c > 0.0 { "exact" } else { "not shown" }, "window": 3, "constant": c, "window_one_constant": window_one, "range": [lo.to_string(), hi.to_string()] }))?;
    report.section("conservativity", &Section { verdict: if cons_ok { "conservative" } else { "growth violated" }, detail: cons })?;
    let rows = hell.partial_sums.iter().enumerate().map(|(i, s)| {
        vec![(i + 1).to_string(), (2.0 * hell.boundary_terms[2 * i]).to_string(), s.to_string(), hell.dominating_sums[i].to_string()]
    });
    let csv = csv_text(&["level", "term", "partial_sum", "dominating_sum"], rows)?;
    Ok(Outcome { report, files: vec![("hellinger.csv".into(), csv)], success: hell_ok && c > 0.0 && cons_ok })
}

#[derive(Serialize)]
struct RnTrial {
    shift: String,
    analytic: f64,
    analytic_eta: f64,
    direct: f64,
    direct_eta: f64,
    overlap: bool,
}

/// Largest spread of shifts sampled above N_t.
const RN_SHIFT_SPAN: u64 = 1000;

pub fn experiment_rn(config: &RunConfig, spec_file: &SpecFile, seed: SeedSource) -> Result<Outcome, CliError> {
    config.check()?;
    let spec = spec_file.measure()?;
    let t = spec_file.params.len();
    let top = spec_file.params.last().ok_or_else(|| CliError::Input("rn cross-checks need at least one level".into()))?;
    let span = (&top.m - &top.big_n).min(BigInt::from(RN_SHIFT_SPAN));
    let span: u64 = span.try_into().unwrap_or(0);
    if span == 0 {
        return Err(CliError::Input(format!("no admissible shifts: [N_t, m_t) is empty at level {t}")));
    }
    let samples = config.samples.unwrap_or(100);
    let trials = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<RnTrial, CliError> {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i);
            let n = &top.big_n + rng.gen_range(0..span);
            let x: Word = sample_window_with(&spec, &BigInt::from(-1), &(&n + &top.big_n + 1), &mut rng)?;
            let a = rn_analytic(&spec, &x, &n, t)?;
            let d = rn_direct(&spec, &x, &n, None)?;
            Ok(RnTrial { shift: n.to_string(), analytic: a.log_value, analytic_eta: a.eta, direct: d.log_value, direct_eta: d.eta, overlap: a.overlaps(&d) })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let overlaps = trials.iter().filter(|r| r.overlap).count();
    let max_gap = trials.iter().map(|r| (r.analytic - r.direct).abs()).fold(0.0, f64::max);
    let mut report = Report::new("experiment rn", config, seed);
    report.section("rn-crosscheck", &json!({ "level": t, "trials": trials.len(), "overlaps": overlaps, "max_log_gap": max_gap, "verdict": if overlaps == trials.len() { "consistent" } else { "mismatch" } }))?;
    let rows = trials.iter().enumerate().map(|(i, r)| {
        vec![i.to_string(), r.shift.clone(), r.analytic.to_string(), r.direct.to_string(), r.analytic_eta.to_string(), r.direct_eta.to_string()]
    });
    let csv = csv_text(&["trial", "shift", "analytic", "direct", "analytic_eta", "direct_eta"], rows)?;
    Ok(Outcome { report, files: vec![("rn.csv".into(), csv)], success: overlaps == trials.len() })
}

pub fn experiment_ratio_set(config: &RunConfig, spec_file: &SpecFile, seed: SeedSource) -> Result<Outcome, CliError> {
    config.check()?;
    if spec_file.profile.mode != Mode::Desk {
        return Err(CliError::Input("ratio-set runs need a desk-profile spec; full-scale event masses cannot be sampled".into()));
    }
    let spec = spec_file.measure()?;
    let b = Cylinder::parse(&config.cylinder, config.cylinder_start)?;
    let rs = RatioSetConfig {
        target: config.target,
        eps: config.eps,
        samples: config.samples.unwrap_or(100_000),
        seed: config.seed,
        shift_count: config.shift_count,
    };
    let r = ratio_set_experiment(&spec, &spec_file.params, &b, &rs)?;
    let mut report = Report::new("experiment ratio-set", config, seed);
    let log_lower = r.mass_interval.0.ln();
    let witness = r.log_witness_mass.map(|w| json!({ "log_witness_mass": w, "log_lower_mass": log_lower, "lower_exceeds_0_9_witness": log_lower > w + 0.9f64.ln() }));
    report.section(
        "ratio-set",
        &json!({
            "verdict": match r.verdict { Evidence::Positive => "positive evidence", Evidence::Inconclusive => "inconclusive" },
            "inconclusive": r.verdict == Evidence::Inconclusive,
            "result": r,
            "witness_comparison": witness,
        }),
    )?;
    let rows = r.shifts.iter().enumerate().map(|(i, s)| vec![s.to_string(), r.returns[i].to_string(), r.hits[i].to_string()]);
    let csv = csv_text(&["shift", "returns", "hits"], rows)?;
    Ok(Outcome { report, files: vec![("ratio_set.csv".into(), csv)], success: true })
}

pub fn experiment_torus(config: &RunConfig, seed: SeedSource) -> Result<Outcome, CliError> {
    config.check()?;
    let areas = region_areas();
    let pi = golden_stationary();
    let area_gap = (0..3).map(|i| (areas[i] - pi.get(i)).abs()).fold(0.0, f64::max);
    let adjacency = markov_adjacency()?;
    let adjacency_ok = adjacency == AdjacencyMatrix::golden_mean();
    let push = pushforward_check(config.depth)?;
    let samples = config.samples.unwrap_or(1000);
    let n = config.itinerary;
    let trips = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64), CliError> {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i);
            loop {
                let p = TorusPoint::new(rng.gen(), rng.gen());
                // orbits grazing an edge are redrawn
                let Ok(w) = itinerary(p, n, BOUNDARY_MARGIN) else { continue };
                let (q, bound) = phi_approx(&w)?;
                return Ok((q.distance(&p), bound));
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let within = trips.iter().filter(|(d, b)| d <= b).count();
    let max_error = trips.iter().map(|t| t.0).fold(0.0, f64::max);
    let ok = area_gap < 1e-9 && adjacency_ok && push.max_residual <= 1e-9 && within == trips.len();
    let mut report = Report::new("experiment torus", config, seed);
    report.section(
        "torus",
        &json!({
            "verdict": if ok { "consistent" } else { "mismatch" },
            "areas": areas,
            "stationary": pi.entries(),
            "max_area_gap": area_gap,
            "area_sum_gap": (areas.iter().sum::<f64>() - 1.0).abs(),
            "area_sum_tolerance": SUM_TOL,
            "adjacency": adjacency.rows(),
            "adjacency_matches": adjacency_ok,
            "pushforward": push,
            "round_trip": { "points": trips.len(), "within_bound": within, "max_error": max_error, "itinerary_half_length": n },
        }),
    )?;
    let area_rows = (0..3).map(|i| vec![(i + 1).to_string(), areas[i].to_string(), pi.get(i).to_string()]);
    let cell_rows = push.cells.iter().map(|c| vec![c.word.clone(), c.area.to_string(), c.measure.to_string()]);
    let geometry = serde_json::to_string_pretty(&region_geometry()).map_err(|e| CliError::Internal(e.to_string()))? + "\n";
    Ok(Outcome {
        report,
        files: vec![
            ("torus_areas.csv".into(), csv_text(&["state", "area", "stationary"], area_rows)?),
            ("pushforward.csv".into(), csv_text(&["word", "area", "measure"], cell_rows)?),
            ("regions.json".into(), geometry),
        ],
        success: ok,
    })
}
