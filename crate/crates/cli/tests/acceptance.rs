//! Acceptance criteria. One PASS/FAIL line each; exits nonzero if any fail.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use modelforge_cli::{execute, Command, RunConfig};
use modelforge_core::classify::{classify, Case, DEFAULT_TOL};
use modelforge_core::geodesics::{hessian_along_geodesic, integrate_geodesic, oscillation_check};
use modelforge_core::geometry::{audit_radii, reconstruct_metric_coefficient, residuals_vector8};
use modelforge_core::integrate::Tolerances;
use modelforge_core::profile::{builtin_profiles, parse_profile, CurvatureProfile};
use modelforge_core::radial::{admissible_r_star, solve_third_order, verify_second_order, RadialSystem};
use modelforge_core::warping::{solve_warping, WarpingSolution};
use modelforge_oracles::{brute_root, linspace, oracle_h, SpaceFormKind, SpaceFormOracle};

type Outcome = Result<String, String>;

fn constant(k: f64, r_max: f64) -> WarpingSolution {
    solve_warping(&CurvatureProfile::constant(k), r_max, Tolerances::default()).expect("solve")
}

fn builtin(text: &str, r_max: f64) -> WarpingSolution {
    solve_warping(&parse_profile(text).expect("profile"), r_max, Tolerances::default()).expect("solve")
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn first_zero() -> Outcome {
    let mut worst = 0.0f64;
    for k in [0.25, 1.0, 4.0] {
        let z = constant(-k, 7.0).first_zero().ok_or(format!("k={k}: no zero"))?;
        worst = worst.max((z - PI / k.sqrt()).abs());
    }
    check(worst <= 1e-8, format!("max |z - pi/sqrt(k)| = {worst:.3e}"))
}

fn warping_oracle() -> Outcome {
    let mut worst = (0.0f64, 0.0);
    for k in [-4.0, -1.0, -0.25, 0.0, 1.0, 4.0] {
        let ws = constant(k, 5.0);
        let o = SpaceFormOracle::new(k);
        let upper = o.first_zero().unwrap_or(f64::INFINITY).min(5.0);
        for t in linspace(0.0, upper, 500) {
            let v = ws.values(t).map_err(|e| e.to_string())?;
            let d = (v.g - o.g(t)).abs().max((v.gp - o.gp(t)).abs()).max((v.integral - o.integral(t)).abs());
            if d > worst.0 {
                worst = (d, k);
            }
        }
    }
    check(worst.0 <= 1e-7, format!("max deviation {:.3e} (k = {})", worst.0, worst.1))
}

fn space_form_coefficients() -> Outcome {
    let cases = [
        (SpaceFormKind::Sphere, -1.0, vec![-1.0, -0.4, 1.0, 2.0]),
        (SpaceFormKind::Hyperbolic, 1.0, vec![0.5, 1.0, 3.0]),
        (SpaceFormKind::Euclidean, 0.0, vec![0.5, 1.0, 3.0]),
    ];
    let mut worst = 0.0f64;
    for (kind, k, a_values) in cases {
        let ws = constant(k, 4.0);
        for a in a_values {
            let sys = RadialSystem::normalized(&ws, a).map_err(|e| e.to_string())?;
            let mut radii = linspace(0.0, 0.999 * ws.chart_radius().min(3.5), 63);
            radii.push(FRAC_PI_2);
            for r in radii {
                let want = oracle_h(kind, a, r).map_err(|e| format!("{e:?}"))?;
                let got = sys.coefficient_h(r).map_err(|e| format!("{kind:?} A={a} r={r}: {e}"))?;
                worst = worst.max((got - want).abs());
            }
        }
    }
    check(worst <= 1e-8, format!("max |H - oracle| = {worst:.3e} over 64 radii per case"))
}

const MATRIX_A: [f64; 8] = [-2.0, -1.0, -0.6, -0.4, 0.5, 1.0, 2.0, 3.0];

fn second_order() -> Outcome {
    let (mut worst, mut entries) = (0.0f64, 0);
    for (name, text) in builtin_profiles() {
        let ws = builtin(text, 4.0);
        for a in MATRIX_A {
            let sys = RadialSystem::normalized(&ws, a).map_err(|e| e.to_string())?;
            if !sys.is_admissible() {
                continue;
            }
            let rep = verify_second_order(&sys, 200, 1e-6).map_err(|e| format!("{name} A={a}: {e}"))?;
            worst = worst.max(rep.max_residual);
            entries += 1;
        }
    }
    check(worst <= 1e-6, format!("max residual {worst:.3e} over {entries} admissible entries"))
}

fn third_order() -> Outcome {
    let (mut worst, mut entries) = (0.0f64, 0);
    for (name, text) in builtin_profiles() {
        let ws = builtin(text, 4.0);
        for a in MATRIX_A {
            for b in [1.0, -0.5] {
                let sol = solve_third_order(&ws, a, b, ws.chart_radius()).map_err(|e| format!("{name} A={a}: {e}"))?;
                worst = worst.max(sol.max_residual);
                entries += 1;
            }
        }
    }
    check(worst <= 1e-6, format!("max |y - (A I + B)| = {worst:.3e} over {entries} entries"))
}

fn vector8() -> Outcome {
    let mut worst = (0.0f64, "", 0.0, 0.0);
    for (name, text) in builtin_profiles() {
        let ws = builtin(text, 3.0);
        for a in [-1.0, 0.5, 1.0, 2.0] {
            for r in audit_radii(ws.chart_radius(), 64) {
                let res = residuals_vector8(&ws, a, r).map_err(|e| e.to_string())?;
                if res.max() > worst.0 {
                    worst = (res.max(), name, a, r);
                }
            }
        }
    }
    check(
        worst.0 <= 1e-7,
        format!("max residual {:.3e} ({} A={} r={:.3}), r_max = 3", worst.0, worst.1, worst.2, worst.3),
    )
}

fn metric_reconstruction() -> Outcome {
    let mut worst_ratio = 0.0f64;
    let mut ratios = (f64::INFINITY, 0.0f64);
    for (name, text) in builtin_profiles() {
        let ws = builtin(text, 4.0);
        let end = 0.9 * ws.chart_radius().min(3.0);
        let max_g = ws.profile().max_abs_on(0.0, end, 400).map_err(|e| e.to_string())?;
        let drift = |eps: f64| reconstruct_metric_coefficient(&ws, eps, end).map(|d| d.max_drift);
        for eps in [1e-2, 1e-3] {
            let d = drift(eps).map_err(|e| e.to_string())?;
            let bound = 2.0 * eps * eps * (1.0 + max_g);
            worst_ratio = worst_ratio.max(d / bound);
            if d > bound {
                return Err(format!("{name} eps={eps}: drift {d:.3e} > {bound:.3e}"));
            }
            if max_g == 0.0 {
                continue;
            }
            let halved = drift(0.5 * eps).map_err(|e| e.to_string())?;
            let ratio = d / halved;
            ratios = (ratios.0.min(ratio), ratios.1.max(ratio));
            if !(3.5..=4.5).contains(&ratio) {
                return Err(format!("{name} eps={eps}: halving ratio {ratio:.3}"));
            }
        }
    }
    check(
        true,
        format!("drift/bound <= {worst_ratio:.3}, halving ratios in [{:.3}, {:.3}]", ratios.0, ratios.1),
    )
}

fn geodesic_conservation() -> Outcome {
    let tol = Tolerances::default();
    let mut worst = (0.0f64, 0.0f64);
    for (k, r_max, r0) in [(-1.0, 4.0, 1.0), (1.0, 12.0, 1.0), (0.0, 12.0, 1.0)] {
        let ws = constant(k, r_max);
        for angle in [0.3, 1.0, FRAC_PI_2, 2.5] {
            let path = integrate_geodesic(&ws, r0, 0.0, angle, 10.0, tol).map_err(|e| e.to_string())?;
            if path.length() < 10.0 {
                return Err(format!("k={k} angle={angle}: clipped at {}", path.length()));
            }
            let (e, c) = path.max_drifts(&ws).map_err(|e| e.to_string())?;
            worst = (worst.0.max(e), worst.1.max(c));
        }
    }
    let ws = constant(-1.0, 4.0);
    let eq = integrate_geodesic(&ws, FRAC_PI_2, 0.0, FRAC_PI_2, 2.0 * PI, tol).map_err(|e| e.to_string())?;
    let end = eq.state(2.0 * PI).map_err(|e| e.to_string())?;
    let closure = (end.r - FRAC_PI_2).abs().max((end.phi - 2.0 * PI).abs());
    check(
        worst.0 <= 1e-8 && worst.1 <= 1e-8 && closure <= 1e-6,
        format!("energy drift {:.3e}, Clairaut drift {:.3e}, equator closure {closure:.3e}", worst.0, worst.1),
    )
}

fn along_geodesic() -> Outcome {
    let tol = Tolerances::default();
    let flat = constant(0.0, 6.0);
    let sys = RadialSystem::normalized(&flat, 1.0).map_err(|e| e.to_string())?;
    let path = integrate_geodesic(&flat, 1.0, 0.0, 2.0, 4.0, tol).map_err(|e| e.to_string())?;
    let closed = hessian_along_geodesic(&sys, &path, 1e-6).map_err(|e| e.to_string())?.max_residual;

    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut worst = (0.0f64, 0.0);
    for k in [-1.0, 1.0, 0.0] {
        let ws = constant(k, 4.0);
        for _ in 0..10 {
            let a = if k < 0.0 && rng.gen_bool(0.5) { rng.gen_range(-0.45..-0.05) } else { rng.gen_range(0.2..3.0) };
            let r0 = rng.gen_range(0.3..2.5);
            let angle = rng.gen_range(0.1..3.0);
            let length = rng.gen_range(1.0..5.0);
            let sys = RadialSystem::normalized(&ws, a).map_err(|e| e.to_string())?;
            let path = integrate_geodesic(&ws, r0, 0.0, angle, length, tol).map_err(|e| e.to_string())?;
            let rep = hessian_along_geodesic(&sys, &path, 1e-6).map_err(|e| format!("k={k} A={a}: {e}"))?;
            if rep.max_residual > worst.0 {
                worst = (rep.max_residual, k);
            }
        }
    }
    check(
        closed <= 1e-6 && worst.0 <= 1e-6,
        format!("flat line {closed:.3e}; 30 random paths max {:.3e} (k = {})", worst.0, worst.1),
    )
}

fn oscillation() -> Outcome {
    let mut worst = 0.0f64;
    let mut gaps = 0;
    for k in [0.25f64, 1.0, 4.0] {
        let s = k.sqrt();
        let ws = constant(-k, PI / s + 1.0);
        let path = integrate_geodesic(&ws, 0.6 * FRAC_PI_2 / s, 0.0, 0.8, 6.0 * PI / s, Tolerances::default())
            .map_err(|e| e.to_string())?;
        let rep = oscillation_check(&ws, 1.0, &path).map_err(|e| e.to_string())?;
        if rep.gaps.len() < 3 {
            return Err(format!("k={k}: only {} gaps", rep.gaps.len()));
        }
        gaps += rep.gaps.len();
        worst = worst.max(rep.max_gap_error());
    }
    check(worst <= 1e-3, format!("max |gap - pi/sqrt(k)| = {worst:.3e} over {gaps} gaps"))
}

fn classification() -> Outcome {
    let sphere = constant(-1.0, 4.0);
    let rep = classify(&sphere, -1.0, DEFAULT_TOL).map_err(|e| e.to_string())?;
    let gp = rep.gprime_at_boundary.ok_or("no g'")?;
    let g4 = *rep.even_derivative_residuals.get(&4).ok_or("no fourth derivative")?;
    if rep.case != Case::SmoothRoundExtension || (gp + 1.0).abs() > 1e-7 || g4 > 1e-6 {
        return Err(format!("sphere A=-1: {} g'+1 = {:.3e} g4 = {g4:.3e}", rep.case, gp + 1.0));
    }
    let rep = classify(&sphere, -0.6, DEFAULT_TOL).map_err(|e| e.to_string())?;
    let want = brute_root(|t| -0.6 * (1.0 - t.cos()) + 1.0, 2.0, 2.5, 1e-14).map_err(|e| format!("{e:?}"))?;
    let rs = rep.r_star.ok_or("no R*")?;
    if rep.case != Case::Inadmissible || (rs - want).abs() > 1e-8 {
        return Err(format!("sphere A=-0.6: {} R* = {rs}", rep.case));
    }
    let bump = builtin("-1 - 0.3*r^2", 4.0);
    let rep = classify(&bump, 1.0, DEFAULT_TOL).map_err(|e| e.to_string())?;
    check(
        rep.case == Case::TwistedSphereCandidate,
        format!(
            "sphere smooth (|g'+1| {:.1e}, |g''''| {g4:.1e}); A=-0.6 R* off by {:.1e}; bump {}",
            (gp + 1.0).abs(),
            (rs - want).abs(),
            rep.case
        ),
    )
}

fn admissible_range() -> Outcome {
    let ws = constant(-1.0, 4.0);
    let ok = |a: f64| admissible_r_star(&ws, a).admissible;
    let scan = linspace(-0.95, 0.95, 1000);
    let verdicts: Vec<bool> = scan.iter().map(|&a| ok(a)).collect();
    let flips: Vec<usize> = (0..scan.len() - 1).filter(|&i| verdicts[i] != verdicts[i + 1]).collect();
    let [i] = flips.as_slice() else {
        return Err(format!("{} flips in the scan", flips.len()));
    };
    let (mut lo, mut hi) = (scan[*i], scan[i + 1]);
    let lo_verdict = verdicts[*i];
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) == lo_verdict {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let flip = 0.5 * (lo + hi);
    check(
        (flip + 0.5).abs() < 1e-6 && !lo_verdict,
        format!("one flip in 1000 points, located at A = {flip:.12}"),
    )
}

fn reproducibility() -> Outcome {
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    let mut outputs = Vec::new();
    for dir in &dirs {
        let mut cfg = RunConfig::defaults(Command::Verify);
        cfg.a_spec = "-1".into();
        cfg.out = dir.path().to_path_buf();
        let code = execute(&cfg, &mut std::io::sink()).map_err(|e| e.to_string())?;
        if code != 0 {
            return Err(format!("verify exited {code}"));
        }
        outputs.push(std::fs::read(dir.path().join("verify.csv")).map_err(|e| e.to_string())?);
    }
    check(outputs[0] == outputs[1], format!("verify.csv identical ({} bytes)", outputs[0].len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("first zero of g for G = -k", first_zero),
        ("warping solution vs closed forms", warping_oracle),
        ("space-form H coefficients", space_form_coefficients),
        ("second-order Cauchy cross-check", second_order),
        ("third-order Cauchy cross-check", third_order),
        ("vector8 residuals", vector8),
        ("metric reconstruction drift", metric_reconstruction),
        ("geodesic conservation", geodesic_conservation),
        ("along-geodesic Hessian identity", along_geodesic),
        ("oscillation gaps", oscillation),
        ("classification", classification),
        ("admissible range boundary", admissible_range),
        ("reproducible verify output", reproducibility),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {:>2}: {name}: {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2}: {name}: {detail}", n + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
