use std::f64::consts::PI;

use modelforge_core::classify::{classify, Case, DEFAULT_TOL};
use modelforge_core::geometry::{audit, audit_radii, reconstruct_metric_coefficient};
use modelforge_core::integrate::Tolerances;
use modelforge_core::profile::{builtin_profiles, parse_profile, CurvatureProfile};
use modelforge_core::radial::{admissible_r_star, solve_third_order, verify_second_order, RadialSystem};
use modelforge_core::warping::{closed_form_warping, solve_warping, WarpingSolution};
use modelforge_oracles::{
    brute_first_nonpositive, brute_root, hyperbolic_seed_drift, linspace, oracle_h,
    sphere_seed_drift, SpaceFormKind, SpaceFormOracle,
};

const CONSTANTS: [f64; 6] = [-4.0, -1.0, -0.25, 0.0, 1.0, 4.0];

fn numeric(k: f64, r_max: f64) -> WarpingSolution {
    solve_warping(&CurvatureProfile::constant(k), r_max, Tolerances::default()).unwrap()
}

#[test]
fn warping_matches_closed_forms() {
    for k in CONSTANTS {
        let ws = numeric(k, 5.0);
        let oracle = SpaceFormOracle::new(k);
        let upper = oracle.first_zero().unwrap_or(f64::INFINITY).min(5.0);
        for t in linspace(0.0, upper, 400) {
            let v = ws.values(t).unwrap();
            let scale = 1.0 + oracle.g(t).abs().max(oracle.integral(t).abs());
            assert!((v.g - oracle.g(t)).abs() <= 1e-7 * scale, "k={k} t={t}");
            assert!((v.gp - oracle.gp(t)).abs() <= 1e-7 * scale, "k={k} t={t}");
            assert!((v.integral - oracle.integral(t)).abs() <= 1e-7 * scale, "k={k} t={t}");
        }
    }
}

#[test]
fn closed_form_warping_agrees_with_oracle() {
    for k in CONSTANTS {
        let cf = closed_form_warping(k, 5.0);
        let oracle = SpaceFormOracle::new(k);
        assert_eq!(cf.first_zero().is_some(), oracle.first_zero().is_some_and(|z| z <= 5.0));
        for t in linspace(0.0, cf.chart_radius(), 50) {
            let v = cf.values(t).unwrap();
            assert!((v.g - oracle.g(t)).abs() < 1e-12);
            assert!((v.integral - oracle.integral(t)).abs() < 1e-12);
        }
    }
}

#[test]
fn wronskian_is_conserved() {
    for k in CONSTANTS {
        let ws = numeric(k, 4.0);
        for t in linspace(0.0, ws.chart_radius(), 200) {
            let v = ws.values(t).unwrap();
            let w = v.gp * v.gp - k * v.g * v.g;
            assert!((w - 1.0).abs() < 1e-8 * (1.0 + k.abs() * v.g * v.g), "k={k} t={t} w={w}");
        }
    }
}

#[test]
fn first_zero_oracle_and_monotonicity() {
    let mut prev = 0.0;
    for k in [-9.0, -4.0, -2.0, -1.0, -0.5, -0.25] {
        let z = numeric(k, 7.0).first_zero().unwrap();
        assert!((z - PI / (-k).sqrt()).abs() < 1e-8, "k={k}");
        assert!(z > prev);
        prev = z;
    }
}

#[test]
fn first_zero_of_nonconstant_profiles_matches_bisection() {
    for text in ["-1 - 0.3*r^2", "-1 + 0.5*cos(r)"] {
        let p = parse_profile(text).unwrap();
        let ws = solve_warping(&p, 6.0, Tolerances::default()).unwrap();
        let half = solve_warping(&p, 6.0, Tolerances::new(1e-13, 1e-13)).unwrap();
        let z = ws.first_zero().unwrap();
        let zh = half.first_zero().unwrap();
        let g = |t: f64| half.values(t).unwrap().g;
        let zb = brute_root(g, 0.5 * zh, half.r_end(), 1e-13).unwrap();
        assert!((z - zb).abs() < 1e-8, "{text}: {z} vs {zb}");
    }
}

#[test]
fn space_form_coefficients() {
    let cases = [
        (SpaceFormKind::Sphere, -1.0, vec![-1.0, -0.4, 1.0, 2.0]),
        (SpaceFormKind::Hyperbolic, 1.0, vec![0.5, 1.0, 3.0]),
        (SpaceFormKind::Euclidean, 0.0, vec![0.5, 1.0, 3.0]),
    ];
    for (kind, k, a_values) in cases {
        let ws = numeric(k, 4.0);
        for a in a_values {
            let sys = RadialSystem::normalized(&ws, a).unwrap();
            assert!(sys.is_admissible(), "{kind:?} {a}");
            let upper = ws.chart_radius().min(3.5);
            let mut radii = linspace(0.0, upper * 0.999, 63);
            radii.push(PI / 2.0);
            for r in radii {
                let want = oracle_h(kind, a, r).unwrap();
                let got = sys.coefficient_h(r).unwrap();
                assert!((got - want).abs() < 1e-8, "{kind:?} A={a} r={r}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn scaled_space_forms_match_oracle() {
    for k in [-4.0, -0.25, 4.0] {
        let ws = numeric(k, 4.0);
        let oracle = SpaceFormOracle::new(k);
        for a in [0.5, 2.0] {
            let sys = RadialSystem::normalized(&ws, a).unwrap();
            for r in linspace(0.0, ws.chart_radius() * 0.99, 40) {
                let want = oracle.h(a, r).unwrap();
                assert!((sys.coefficient_h(r).unwrap() - want).abs() < 1e-8 * (1.0 + want.abs()));
                assert!((sys.alpha(r).unwrap() - oracle.alpha(a, 1.0, r)).abs() < 1e-8 * (1.0 + want.abs()));
            }
        }
    }
}

#[test]
fn r_star_matches_bisection() {
    let ws = numeric(-1.0, 4.0);
    for a in [-0.6, -0.8, -2.0, -5.0] {
        let adm = admissible_r_star(&ws, a);
        let want = brute_root(|t| a * (1.0 - t.cos()) + 1.0, 0.0, PI, 1e-14).unwrap();
        assert!(!adm.admissible);
        assert!((adm.r_star.unwrap() - want).abs() < 1e-8, "A={a}");
    }
}

#[test]
fn admissibility_agrees_with_brute_scan() {
    for (name, text) in builtin_profiles() {
        let ws = solve_warping(&parse_profile(text).unwrap(), 4.0, Tolerances::default()).unwrap();
        let z = ws.chart_radius();
        for a in linspace(-3.0, 1.0, 41) {
            if a == 0.0 {
                continue;
            }
            let adm = admissible_r_star(&ws, a);
            let den = |t: f64| a * ws.values(t).unwrap().integral + 1.0;
            let scan = brute_first_nonpositive(den, 0.0, z, 10_000);
            let removable = adm.removable.is_some();
            if !removable {
                assert_eq!(adm.admissible, scan.is_none(), "{name} A={a} {adm:?} {scan:?}");
            }
        }
    }
}

#[test]
fn cross_checks_over_matrix() {
    for (name, text) in builtin_profiles() {
        let ws = solve_warping(&parse_profile(text).unwrap(), 4.0, Tolerances::default()).unwrap();
        for a in [-1.0, -0.4, 0.5, 1.0, 2.0] {
            let sys = RadialSystem::normalized(&ws, a).unwrap();
            if !sys.is_admissible() {
                continue;
            }
            let rep = verify_second_order(&sys, 200, 1e-6).unwrap();
            assert!(rep.pass, "{name} A={a}: {rep:?}");
            let third = solve_third_order(&ws, a, 1.0, ws.chart_radius()).unwrap();
            assert!(third.max_residual < 1e-6, "{name} A={a}: {}", third.max_residual);
            let radii = audit_radii(ws.chart_radius(), 64);
            for rec in audit(&sys, &radii).unwrap() {
                assert!(rec.pass, "{name} A={a}: {rec:?}");
            }
        }
    }
}

#[test]
fn metric_drift_follows_seed_expansion() {
    let sphere = numeric(-1.0, 4.0);
    let hyp = numeric(1.0, 4.0);
    for eps in [1e-2, 1e-3] {
        let d = reconstruct_metric_coefficient(&sphere, eps, 3.0).unwrap();
        assert!((d.signed_drift / sphere_seed_drift(eps) - 1.0).abs() < 0.05, "{d:?}");
        let d = reconstruct_metric_coefficient(&hyp, eps, 3.0).unwrap();
        assert!((d.signed_drift / hyperbolic_seed_drift(eps) - 1.0).abs() < 0.05, "{d:?}");
    }
}

#[test]
fn metric_drift_is_quadratic_in_eps() {
    for k in [-1.0, 1.0, -4.0] {
        let ws = numeric(k, 4.0);
        let end = 0.9 * ws.chart_radius().min(3.0);
        let d1 = reconstruct_metric_coefficient(&ws, 2e-3, end).unwrap().max_drift;
        let d2 = reconstruct_metric_coefficient(&ws, 1e-3, end).unwrap().max_drift;
        let ratio = d1 / d2;
        assert!((3.5..=4.5).contains(&ratio), "k={k}: ratio {ratio}");
    }
}

#[test]
fn classification_matrix() {
    for k in [0.25, 1.0, 4.0] {
        let ws = numeric(-k, 7.0);
        assert_eq!(classify(&ws, -k, DEFAULT_TOL).unwrap().case, Case::SmoothRoundExtension);
        assert_eq!(classify(&ws, 1.0, DEFAULT_TOL).unwrap().case, Case::SmoothRoundExtension);
    }
    for (name, text) in builtin_profiles() {
        let p = parse_profile(text).unwrap();
        if p.as_constant().is_some() {
            continue;
        }
        let ws = solve_warping(&p, 6.0, Tolerances::default()).unwrap();
        for a in [-0.3, 0.5, 1.0] {
            let case = classify(&ws, a, DEFAULT_TOL).unwrap().case;
            assert_ne!(case, Case::SmoothRoundExtension, "{name} A={a}");
        }
    }
}
