//! Acceptance gate: one line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rno_core::asymptotic::{cost_lower_bound, cost_upper_bound};
use rno_core::comms::{capacity_experiment, seesaw_success_probability, BoundVerdict, SeesawConfig};
use rno_core::conic::{start_recording, take_records, SdpStatus, SolverConfig};
use rno_core::dynamic_measures::{
    channel_rno_robustness, hadamard_channel, plus_replacement_channel, random_mio_channel, smoothed_channel_robustness_sweep,
    SmoothingConfig,
};
use rno_core::erasure::{
    binomial_pmf_bound_exact, exact_sum_bound, mixing_deviation_bound, sample_mixing_pair, threshold_n,
};
use rno_core::freesets::mio_violation;
use rno_core::qmath::{c64, max_abs, random_pure_state, rng_from_seed, CVector};
use rno_core::static_measures::{
    generalized_robustness, quantifier_axiom_suite, smoothed_log_robustness, standard_robustness, RobustnessKind,
    SmoothingVariant,
};
use rno_core::transform::{build_transform_channel, sample_feasible_plan, verify_transform};
use rno_core::{Channel, DensityMatrix, FreeSetModel};

type Outcome = Result<String, String>;

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn bell() -> DensityMatrix {
    let mut v = CVector::zeros(4);
    v[0] = c64(1.0, 0.0);
    v[3] = c64(1.0, 0.0);
    DensityMatrix::from_pure(&v, vec![2, 2]).unwrap()
}

fn plus() -> DensityMatrix {
    DensityMatrix::from_pure(&CVector::from_element(2, c64(1.0, 0.0)), vec![2]).unwrap()
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn axiom_suite() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let models = [FreeSetModel::incoherent(2).map_err(e)?, FreeSetModel::separable_ppt(2, 2).map_err(e)?];
    for (i, m) in models.iter().enumerate() {
        for (j, kind) in [RobustnessKind::Generalized, RobustnessKind::Standard].into_iter().enumerate() {
            let r = quantifier_axiom_suite(m, kind, 200, 100 + (2 * i + j) as u64, &cfg()).map_err(e)?;
            worst = worst.max(r.max_violation());
        }
    }
    let elapsed = start.elapsed();
    let msg = format!("max violation {worst:.2e} over 4×200 trials in {:.1}s", elapsed.as_secs_f64());
    if worst <= 1e-5 && elapsed <= Duration::from_secs(300) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn pure_state_equality() -> Outcome {
    let m = FreeSetModel::separable_ppt(2, 2).map_err(e)?;
    let mut rng = rng_from_seed(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let psi = random_pure_state(&mut rng, &[2, 2]);
        let g = generalized_robustness(&m, &psi, &cfg()).map_err(e)?.value;
        let s = standard_robustness(&m, &psi, &cfg()).map_err(e)?.value;
        worst = worst.max((g - s).abs());
    }
    let b = generalized_robustness(&m, &bell(), &cfg()).map_err(e)?.value;
    let msg = format!("max |R_G − 𝓡_G| {worst:.2e} on 50 states; Bell {b:.9}");
    if worst <= 1e-5 && (b - 1.0).abs() <= 1e-6 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn transform_certification() -> Outcome {
    let m = FreeSetModel::separable_ppt(2, 2).map_err(e)?;
    let mut rng = rng_from_seed(7);
    let (mut reproduce, mut cptp, mut min_pt): (f64, f64, f64) = (0.0, 0.0, f64::INFINITY);
    let mut plans = 0;
    let mut attempts = 0;
    while plans < 100 && attempts < 2000 {
        attempts += 1;
        let Some(plan) = sample_feasible_plan(&mut rng, &m, 10, &cfg()).map_err(e)? else {
            continue;
        };
        plans += 1;
        let ch = build_transform_channel(&plan).map_err(e)?;
        let out = ch.apply(plan.psi.matrix());
        reproduce = reproduce.max(max_abs(&(out - plan.sigma.matrix())));
        let (tp, cp) = ch.cptp_residuals();
        cptp = cptp.max(tp).max(cp);
        let v = verify_transform(&m, &ch, 500, plans as u64).map_err(e)?;
        min_pt = min_pt.min(v.min_pt_eigenvalue.unwrap_or(f64::NEG_INFINITY));
    }
    let msg = format!(
        "{plans} plans: |Λ(ψ) − σ| {reproduce:.2e}, CPTP residual {cptp:.2e}, min output PT eigenvalue {min_pt:.2e}"
    );
    if plans == 100 && reproduce <= 1e-9 && cptp <= 1e-9 && min_pt >= -1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn binomial_lemma() -> Outcome {
    let mut checked = 0;
    let mut violations = 0;
    for n in 1..=60u64 {
        for t in 1..=9i64 {
            let p = BigRational::new(BigInt::from(t), BigInt::from(10));
            // np(1−p) > 1  ⇔  n·t·(10 − t) > 100
            if (n as i64) * t * (10 - t) <= 100 {
                continue;
            }
            let kmax = (n as i64 * t / 10) as u64;
            for k in 0..=kmax {
                checked += 1;
                if !binomial_pmf_bound_exact(n, &p, k).map_err(e)?.certified {
                    violations += 1;
                }
            }
        }
    }
    let msg = format!("{checked} (n, p, k) cases, {violations} violations");
    if violations == 0 && checked > 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn erasure_chain() -> Outcome {
    let mut rng = rng_from_seed(11);
    let mut failures = Vec::new();
    let mut cells = 0;
    let mut worst_gap: f64 = f64::NEG_INFINITY;
    for p in [0.3, 0.5, 0.7] {
        for n in 2..=6usize {
            for _ in 0..5 {
                let (psi, phi) = sample_mixing_pair(&mut rng, 2, p).map_err(e)?;
                let r = mixing_deviation_bound(&psi, &phi, p, n, 0.1, n <= 2, &cfg()).map_err(e)?;
                cells += 1;
                let mut ok = r.measured_choi_trace_distance <= r.exact_sum_bound + 1e-6;
                worst_gap = worst_gap.max(r.measured_choi_trace_distance - r.exact_sum_bound);
                if let Some(c) = r.closed_form_bound {
                    ok &= r.exact_sum_bound <= c + 1e-6;
                }
                if let Some(d) = r.measured_diamond_distance {
                    ok &= d <= r.measured_choi_trace_distance + 1e-6;
                }
                if !ok {
                    failures.push(format!("p={p} n={n}"));
                }
            }
        }
    }
    let t = threshold_n(0.1, 0.5).map_err(e)?;
    let s81 = exact_sum_bound(81, 0.5).map_err(e)?;
    let msg = format!(
        "{cells} cells, {} chain failures, max(Choi − exact) {worst_gap:.3}; threshold {t}, exact sum at 81 = {s81:.4}",
        failures.len()
    );
    if failures.is_empty() && t == 81 && s81 <= 0.1 {
        Ok(msg)
    } else {
        Err(format!("{msg}; failing cells {failures:?}"))
    }
}

fn channel_robustness_goldens() -> Outcome {
    let mut rng = rng_from_seed(21);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let e_ch = random_mio_channel(&mut rng, 2 + i % 2);
        if mio_violation(&e_ch) > 1e-9 {
            return Err("sampled channel is not MIO".into());
        }
        let r = channel_rno_robustness(&e_ch, &cfg()).map_err(e)?;
        worst = worst.max((r.p_star - 1.0).abs()).max((r.sdp_value - 1.0).abs());
    }
    let h = channel_rno_robustness(&hadamard_channel(), &cfg()).map_err(e)?.p_star;
    let plus_rep = channel_rno_robustness(&plus_replacement_channel(2), &cfg()).map_err(e)?.p_star;
    let msg = format!("MIO channels: max |𝕃 − 1| {worst:.2e}; Hadamard {h:.6}; |+⟩-replacement {plus_rep:.6}");
    if worst <= 1e-6 && (h - 0.5).abs() <= 1e-4 && (plus_rep - 0.5).abs() <= 1e-4 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn smoothing_directions() -> Outcome {
    let grid = [0.0, 0.05, 0.1, 0.2];
    let mut worst_state_increase: f64 = f64::NEG_INFINITY;
    let m1 = FreeSetModel::incoherent(2).map_err(e)?;
    let m2 = FreeSetModel::separable_ppt(2, 2).map_err(e)?;
    let mut rng = rng_from_seed(5);
    let states = [(m1, plus()), (m2, bell()), (m2, random_pure_state(&mut rng, &[2, 2]))];
    for (m, rho) in &states {
        let mut last = f64::INFINITY;
        for &eps in &grid {
            // raw program values, no running minimum
            let v = smoothed_log_robustness(m, rho, eps, SmoothingVariant::R, &cfg()).map_err(e)?.value;
            worst_state_increase = worst_state_increase.max(v - last);
            last = v;
        }
    }
    let h = hadamard_channel();
    let sweep = smoothed_channel_robustness_sweep(&h, &grid, &SmoothingConfig::default(), &cfg()).map_err(e)?;
    let l0 = channel_rno_robustness(&h, &cfg()).map_err(e)?.p_star;
    let values: Vec<f64> = sweep.iter().map(|s| s.upper_estimate).collect();
    let channel_monotone = values.windows(2).all(|w| w[1] <= w[0]);
    let at_zero = (values[0] - l0).abs();
    let msg = format!(
        "state R^ε largest increase {worst_state_increase:.2e}; channel 𝕃^ε estimates {values:.4?}, |𝕃^0 − 𝕃| {at_zero:.2e}"
    );
    if worst_state_increase <= 1e-6 && channel_monotone && at_zero <= 1e-6 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn cost_sandwich() -> Outcome {
    let ppt = FreeSetModel::separable_ppt(2, 2).map_err(e)?;
    let mut parts = Vec::new();
    let mut ok = true;
    for n in [1, 2] {
        let lo = cost_lower_bound(&ppt, &bell(), n, 0.0, &cfg()).map_err(e)?;
        let up = cost_upper_bound(&ppt, &bell(), n, &cfg()).map_err(e)?;
        ok &= (lo - 1.0).abs() <= 1e-4 && (up.value - 1.0).abs() <= 1e-4;
        parts.push(format!("n={n}: {lo:.6} ≤ {:.6}", up.value));
    }
    let inc = FreeSetModel::incoherent(2).map_err(e)?;
    let up = cost_upper_bound(&inc, &plus(), 1, &cfg()).map_err(e)?;
    let lo = cost_lower_bound(&inc, &plus(), 1, 0.0, &cfg()).map_err(e)?;
    ok &= up.vacuous && (lo - 1.0).abs() <= 1e-4;
    parts.push(format!("|+⟩: lower {lo:.6}, upper vacuous {}", up.vacuous));
    let msg = format!("Bell {}", parts.join("; "));
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn capacity_experiment_check() -> Outcome {
    let sc = SeesawConfig::default();
    let smoothing = SmoothingConfig::default();
    let channels = [
        ("identity", Channel::identity(vec![2]), 1.0),
        ("dephasing", Channel::dephasing(2), 1.0),
        ("depolarizing", Channel::depolarizing(2, 1.0).map_err(e)?, 0.5),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    let mut persisted = Vec::new();
    for (name, ch, oracle) in &channels {
        let s = seesaw_success_probability(ch, 2, 1, &sc, &cfg()).map_err(e)?;
        let monotone = s.trajectories.iter().all(|t| t.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        ok &= (s.f_hat - oracle).abs() <= 1e-4 && monotone;
        let report = capacity_experiment(ch, 0.1, 0.05, 3, &sc, &smoothing, &cfg()).map_err(e)?;
        ok &= report.verdict != BoundVerdict::NotEvaluated;
        parts.push(format!("{name} f̂={:.6} verdict {:?}", s.f_hat, report.verdict));
        persisted.push(serde_json::json!({ "channel": name, "f_hat_m2": s.f_hat, "report": report }));
    }
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("capacity_verdicts.json");
    let text = serde_json::to_string_pretty(&persisted).map_err(e)?;
    std::fs::write(&path, text).map_err(e)?;
    ok &= path.exists();
    let msg = format!("{}; verdicts in {}", parts.join(", "), path.display());
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    start_recording();
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("robustness axioms", axiom_suite),
        ("pure-state robustness equality", pure_state_equality),
        ("transformation channel certification", transform_certification),
        ("binomial pmf bound", binomial_lemma),
        ("erasure bound chain", erasure_chain),
        ("channel robustness goldens", channel_robustness_goldens),
        ("smoothing directions", smoothing_directions),
        ("cost sandwich", cost_sandwich),
        ("capacity experiment", capacity_experiment_check),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(msg) => println!("PASS criterion {} ({name}): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {msg}", i + 1);
            }
        }
    }
    let records = take_records();
    let bad: Vec<_> = records
        .iter()
        .filter(|r| {
            !matches!(r.status, SdpStatus::Optimal | SdpStatus::Infeasible)
                || r.reported.max() > 1e-6
                || r.recomputed.max() > 1e-6
        })
        .collect();
    let worst = records.iter().map(|r| r.recomputed.max()).fold(0.0, f64::max);
    let msg = format!("{} solves audited, {} out of tolerance, worst recomputed residual {worst:.2e}", records.len(), bad.len());
    if bad.is_empty() && !records.is_empty() {
        println!("PASS criterion 10 (solver certification): {msg}");
    } else {
        failed += 1;
        println!("FAIL criterion 10 (solver certification): {msg}");
        for r in bad.iter().take(5) {
            println!("  {} {:?} {:?}", r.label, r.status, r.recomputed);
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
