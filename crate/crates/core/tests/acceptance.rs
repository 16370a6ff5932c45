//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, SQRT_2};
use std::process::ExitCode;
use std::time::Instant;

use chsh_commit::analysis::{
    azuma_tail, cheat_chsh, control_of_violation, k0, max_gain_objective, max_pr_control_objective,
    ns_vertices, phi_opt, q_epsilon, ControlCurve, ThresholdSchedule,
};
use chsh_commit::devices::DeviceSpec;
use chsh_commit::montecarlo::{
    azuma_grid, counter_cheat_demo, empirical_chsh, estimate_control, estimate_gain,
    honest_completeness, ExperimentSpec, Scenario,
};
use chsh_commit::protocol::Variant;
use chsh_commit::report::{bound_rows, curve_points};
use num_rational::Rational64;

const SEED: u64 = 1;

fn cos2_half(theta: f64) -> f64 {
    (theta / 2.0).cos().powi(2)
}

fn c_star() -> f64 {
    FRAC_PI_8.cos().powi(2)
}

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_1() -> Outcome {
    let c = control_of_violation(2.0 * SQRT_2).map_err(|e| e.to_string())?;
    let err = (c - 0.853_553_390_593_273_8).abs().max((c - c_star()).abs());
    check(err < 1e-9, format!("C(2*sqrt2) = {c:.12}, |error| = {err:.1e}"))
}

fn criterion_2() -> Outcome {
    let points = curve_points(200);
    let monotone = points.windows(2).all(|w| w[1].control <= w[0].control && w[1].violation > w[0].violation);
    let first = points[0];
    let last = points[points.len() - 1];
    let endpoints = (first.violation - 2.0).abs() < 1e-8
        && (first.control - 1.0).abs() < 1e-8
        && (last.violation - 2.0 * SQRT_2).abs() < 1e-8
        && (last.control - c_star()).abs() < 1e-8;
    let curve = ControlCurve::<f64>::sample(200);
    let mut worst = 0.0f64;
    for (row, p) in curve.rows().iter().zip(&points) {
        if row.violation != p.violation {
            return Err("table and curve samples disagree".into());
        }
        let back = control_of_violation(row.violation).map_err(|e| e.to_string())?;
        worst = worst.max((back - cos2_half(row.theta)).abs());
    }
    check(
        monotone && endpoints && worst < 1e-8,
        format!("200 rows, monotone = {monotone}, endpoints ok = {endpoints}, worst round-trip error = {worst:.1e}"),
    )
}

fn criterion_3() -> Outcome {
    let (exact, _, _) = max_gain_objective::<Rational64>();
    let vertices = ns_vertices::<Rational64>().len();
    let mut detail = format!("max over {vertices} vertices = {exact}");
    let mut ok = exact == Rational64::new(3, 4) && vertices == 24;
    for scenario in [Scenario::GainDeterministic, Scenario::GainDeviceDependent] {
        let r = estimate_gain(&ExperimentSpec::new(scenario, 1_000_000, SEED)).map_err(|e| e.to_string())?;
        let e = r.estimate();
        ok &= e.within_sigma(0.75, 3.0);
        detail += &format!("; {} = {:.5} +/- {:.5}", scenario.name(), e.mean, e.stderr);
    }
    check(ok, detail)
}

fn criterion_4() -> Outcome {
    let (exact, _, _) = max_pr_control_objective::<Rational64>();
    let mut ok = exact == Rational64::new(3, 4);
    let mut detail = format!("max PR control objective = {exact}");

    let mut honest = ExperimentSpec::new(Scenario::Completeness, 100_000, SEED);
    honest.variant = Variant::Pr;
    let c = honest_completeness(&honest).map_err(|e| e.to_string())?;
    ok &= c.abort_rate.mean == 0.0 && c.conditional_correctness.mean == 1.0;
    detail += &format!(
        "; honest acceptance = {} over {}",
        c.conditional_correctness.mean, c.conditional_correctness.trials
    );

    let gain = estimate_gain(&ExperimentSpec::new(Scenario::GainPr, 100_000, SEED)).map_err(|e| e.to_string())?;
    ok &= gain.estimate().within_sigma(0.75, 3.0);
    detail += &format!("; Bob gain = {:.5} +/- {:.5}", gain.mean, gain.stderr);

    let mut cheat = ExperimentSpec::new(Scenario::Control, 100_000, SEED);
    cheat.variant = Variant::Pr;
    let control = estimate_control(&cheat).map_err(|e| e.to_string())?;
    ok &= control.estimate().within_sigma(0.75, 3.0);
    detail += &format!("; Alice classical cheat = {:.5} +/- {:.5}", control.mean, control.stderr);
    check(ok, detail)
}

fn criterion_5() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for k in 0..=4 {
        let theta = FRAC_PI_4 * k as f64 / 4.0;
        let mut spec = ExperimentSpec::new(Scenario::Control, 100_000, SEED + k);
        spec.theta = theta;
        let control = estimate_control(&spec).map_err(|e| e.to_string())?.estimate();
        let expected_i = cheat_chsh(theta, phi_opt(theta).map_err(|e| e.to_string())?);
        let chsh = empirical_chsh(&DeviceSpec::AliceCheat { theta }, 1000, 100, SEED + k).map_err(|e| e.to_string())?;
        let pass = control.within_sigma(cos2_half(theta), 3.0) && chsh.within_sigma(expected_i, 3.0);
        ok &= pass;
        parts.push(format!(
            "theta={theta:.4}: control {:.4} vs {:.4}, CHSH {:.4} vs {:.4}",
            control.mean,
            cos2_half(theta),
            chsh.mean,
            expected_i
        ));
    }
    check(ok, parts.join("; "))
}

fn criterion_6() -> Outcome {
    let ns: Vec<u64> = (3..=8).map(|e| 10u64.pow(e)).collect();
    let rows = bound_rows(&ns, ThresholdSchedule::Caption).map_err(|e| e.to_string())?;
    let monotone = rows.windows(2).all(|w| w[1].bound <= w[0].bound);
    let above = rows.iter().all(|r| r.bound >= c_star());
    let gap = rows[rows.len() - 1].bound - c_star();
    let listing: Vec<String> = rows.iter().map(|r| format!("{:.5}", r.bound)).collect();
    check(
        monotone && above && gap < 0.05,
        format!("bounds for N=1e3..1e8: [{}], gap at 1e8 = {gap:.4}", listing.join(", ")),
    )
}

fn criterion_7() -> Outcome {
    let ks = [10, 100, 1000];
    let epsilons = [0.5, 1.0, 2.0];
    let mut ok = true;
    let mut worst_margin = f64::INFINITY;
    for (j, v) in [1.0, 0.9].into_iter().enumerate() {
        let cells = azuma_grid(&DeviceSpec::Honest { noise_v: v }, &ks, &epsilons, 100_000, SEED + j as u64)
            .map_err(|e| e.to_string())?;
        for c in cells {
            let margin = c.bound + 3.0 * c.tail.stderr - c.tail.mean;
            worst_margin = worst_margin.min(margin);
            ok &= margin >= 0.0;
        }
    }
    check(ok, format!("18 cells, 1e5 histories each, smallest slack under bound = {worst_margin:.3e}"))
}

fn criterion_8() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 2..=200u64 {
        let mut k0s = vec![1, n / 2, n - 1];
        for ith in [2.1, 2.5, 2.8, 2.0 * SQRT_2] {
            k0s.push(k0(n, ith).map_err(|e| e.to_string())?);
        }
        for k0 in k0s {
            let k0 = k0.max(1);
            for eps in [0.0, 1e-8, 1e-4, 0.01, 0.1, 0.5, 1.0, 2.0, 4.0] {
                let direct: f64 = (k0..n).map(|k| azuma_tail(k, eps)).sum();
                worst = worst.max((q_epsilon(n, k0, eps) - direct).abs());
                cases += 1;
            }
            if q_epsilon(n, k0, 0.0) != (n - k0) as f64 {
                return Err(format!("eps = 0 limit differs at N={n}, K0={k0}"));
            }
        }
    }
    check(worst < 1e-12, format!("{cases} cases with N <= 200, max |closed - direct| = {worst:.1e}"))
}

fn criterion_9() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (j, variant) in [Variant::Main, Variant::FreeReveal, Variant::LargeOffice].into_iter().enumerate() {
        let mut spec = ExperimentSpec::new(Scenario::Completeness, 100_000, SEED + j as u64);
        spec.variant = variant;
        let c = honest_completeness(&spec).map_err(|e| e.to_string())?;
        let cc = c.conditional_correctness;
        ok &= cc.trials > 0 && cc.mean == 1.0;
        parts.push(format!(
            "{variant}: {}/{} passing runs correct, abort rate {:.4}",
            (cc.mean * cc.trials as f64).round(),
            cc.trials,
            c.abort_rate.mean
        ));
    }
    check(ok, parts.join("; "))
}

fn criterion_10() -> Outcome {
    let n = 20;
    let c = counter_cheat_demo(n, 2.0, 100_000, SEED).map_err(|e| e.to_string())?;
    let floor = 1.0 / n as f64 - 3.0 * c.overall.stderr;
    let ok = c.overall.mean >= floor
        && c.conditional_on_last.trials > 0
        && c.conditional_on_last.mean == 1.0
        && c.drew_last.within_sigma(1.0 / n as f64, 3.0);
    check(
        ok,
        format!(
            "overall {:.4} (floor {:.4}); P(n=N) = {:.4}; success given n=N: {} of {} runs",
            c.overall.mean,
            floor,
            c.drew_last.mean,
            (c.conditional_on_last.mean * c.conditional_on_last.trials as f64).round(),
            c.conditional_on_last.trials
        ),
    )
}

fn criterion_11() -> Outcome {
    let mut spec = ExperimentSpec::new(Scenario::Control, 100_000, SEED);
    spec.variant = Variant::FreeReveal;
    spec.theta = FRAC_PI_4;
    let e = estimate_control(&spec).map_err(|e| e.to_string())?.estimate();
    let target = (c_star() + 1.0) / 2.0;
    check(
        e.within_sigma(target, 3.0),
        format!("free-reveal control {:.5} +/- {:.5} vs {target:.5}", e.mean, e.stderr),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("asymptotic control value", criterion_1),
        ("control curve table", criterion_2),
        ("information-gain bound", criterion_3),
        ("PR-box protocol bounds", criterion_4),
        ("optimal-cheat consistency", criterion_5),
        ("finite-N bound behaviour", criterion_6),
        ("Azuma tail verification", criterion_7),
        ("closed-form Q(epsilon)", criterion_8),
        ("honest completeness", criterion_9),
        ("counter-cheat demonstration", criterion_10),
        ("free-reveal control transform", criterion_11),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
