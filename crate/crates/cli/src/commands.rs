//! The five subcommands.

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use modelforge_core::classify::classify;
use modelforge_core::geodesics::{hessian_along_geodesic, integrate_geodesic, ClipEdge};
use modelforge_core::geometry::{audit, audit_radii, reconstruct_metric_coefficient};
use modelforge_core::profile::{builtin_profiles, parse_profile, CurvatureProfile};
use modelforge_core::radial::{solve_third_order, verify_second_order, Admissibility, RadialSystem};
use modelforge_core::warping::{solve_warping, WarpingSolution};
use modelforge_core::Error;

use crate::config::{Command, RunConfig};
use crate::output::{ensure_dir, fmt_f64, write_file, write_record, write_table, Cell, Table};
use crate::CliError;

/// Files written by a command and whether every check passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub passed: bool,
}

pub fn run(cfg: &RunConfig, out: &mut dyn Write) -> Result<Outcome, CliError> {
    cfg.check()?;
    ensure_dir(&cfg.out)?;
    match cfg.command {
        Command::Solve => cmd_solve(cfg, out),
        Command::Family => cmd_family(cfg, out),
        Command::Verify => cmd_verify(cfg, out),
        Command::Classify => cmd_classify(cfg, out),
        Command::Geodesic => cmd_geodesic(cfg, out),
    }
}

fn numeric(e: Error) -> CliError {
    CliError::Numeric(e.to_string())
}

fn say(out: &mut dyn Write, line: String) -> Result<(), CliError> {
    writeln!(out, "{line}").map_err(|e| CliError::Io(e.to_string()))
}

/// The profile named by the config: a file (a two-column `r, G` table or
/// expression text), a built-in name, or expression text.
pub fn load_profile(cfg: &RunConfig) -> Result<CurvatureProfile, CliError> {
    let bad = |e: modelforge_core::profile::ProfileError| CliError::Config(format!("profile: {e}"));
    if let Some(path) = &cfg.profile_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        return match parse_table(&text) {
            Some(samples) => CurvatureProfile::tabulated(samples).map_err(bad),
            None => parse_profile(&text).map_err(bad),
        };
    }
    let text = builtin_profiles()
        .into_iter()
        .find(|(name, _)| *name == cfg.profile.trim())
        .map_or(cfg.profile.as_str(), |(_, t)| t);
    parse_profile(text).map_err(bad)
}

/// Rows of two numbers separated by a comma or whitespace. One non-numeric
/// header line is allowed.
fn parse_table(text: &str) -> Option<Vec<(f64, f64)>> {
    let lines: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let row = |l: &str| -> Option<(f64, f64)> {
        let parts: Vec<&str> = l.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        match parts.as_slice() {
            [a, b] => Some((a.parse().ok()?, b.parse().ok()?)),
            _ => None,
        }
    };
    let body = match lines.first().map(|l| row(l)) {
        Some(None) if lines.len() > 2 => &lines[1..],
        _ => &lines[..],
    };
    if body.len() < 2 {
        return None;
    }
    body.iter().map(|l| row(l)).collect()
}

fn solve(cfg: &RunConfig) -> Result<WarpingSolution, CliError> {
    let profile = load_profile(cfg)?;
    solve_warping(&profile, cfg.r_max, cfg.tolerances()).map_err(numeric)
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("MODELFORGE_THREADS") {
        let n = v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("MODELFORGE_THREADS: `{v}` is not a positive count")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Io(e.to_string()))
}

fn uniform(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
}

fn cmd_solve(cfg: &RunConfig, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let ws = solve(cfg)?;
    let mut table = Table::new("warping", &["r", "g", "gp", "I"]);
    for r in uniform(0.0, ws.chart_radius(), cfg.samples) {
        let v = ws.values(r).map_err(numeric)?;
        table.push(vec![Cell::Num(r), Cell::Num(v.g), Cell::Num(v.gp), Cell::Num(v.integral)]);
    }
    let mut files = vec![write_table(cfg, &table)?];
    let json = ws.to_json().map_err(numeric)?;
    let path = cfg.out.join("solution.json");
    write_file(&path, json.as_bytes())?;
    files.push(path);
    match ws.first_zero() {
        Some(z) => say(out, format!("r_-G = {}", fmt_f64(z)))?,
        None => say(out, format!("no zero up to r_max = {}", cfg.r_max))?,
    }
    Ok(Outcome { files, passed: true })
}

struct FamilyMember {
    a: f64,
    adm: Admissibility,
    rows: Vec<[f64; 3]>,
}

fn family_member(ws: &WarpingSolution, a: f64, b: f64, samples: usize) -> Result<FamilyMember, CliError> {
    let sys = RadialSystem::new(ws, a, b).map_err(|e| CliError::Config(e.to_string()))?;
    let adm = sys.admissibility();
    let times: Vec<f64> = match adm.r_star {
        // Stop short of R*, where H blows up.
        Some(rs) => (0..samples).map(|i| rs * i as f64 / samples as f64).collect(),
        None => uniform(0.0, ws.chart_radius(), samples).collect(),
    };
    let mut rows = Vec::with_capacity(times.len());
    for t in times {
        let h = match sys.coefficient_h(t) {
            Ok(h) => h,
            Err(Error::DomainExceeded { .. }) => f64::NAN,
            Err(e) => return Err(numeric(e)),
        };
        rows.push([t, h, sys.alpha(t).map_err(numeric)?]);
    }
    Ok(FamilyMember { a, adm, rows })
}

fn verdict(adm: &Admissibility) -> &'static str {
    if adm.admissible {
        "admissible"
    } else {
        "inadmissible"
    }
}

fn cmd_family(cfg: &RunConfig, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let a_values = cfg.a_values()?;
    let ws = solve(cfg)?;
    let pool = thread_pool()?;
    let members: Vec<FamilyMember> = pool.install(|| {
        a_values
            .par_iter()
            .map(|&a| family_member(&ws, a, cfg.b, cfg.samples))
            .collect::<Result<Vec<_>, _>>()
    })?;

    let mut table = Table::new("family", &["A", "t", "H", "alpha"]);
    let mut summary = Table::new("family_summary", &["A", "R_star", "removable_zero", "verdict"]);
    for m in &members {
        for row in &m.rows {
            table.push(vec![Cell::Num(m.a), Cell::Num(row[0]), Cell::Num(row[1]), Cell::Num(row[2])]);
        }
        summary.push(vec![
            Cell::Num(m.a),
            Cell::opt(m.adm.r_star),
            Cell::opt(m.adm.removable),
            Cell::Text(verdict(&m.adm).into()),
        ]);
        let rs = m.adm.r_star.map_or("none".to_string(), fmt_f64);
        say(out, format!("A = {}: {} (R* = {rs})", m.a, verdict(&m.adm)))?;
    }
    let files = vec![write_table(cfg, &table)?, write_table(cfg, &summary)?];
    Ok(Outcome { files, passed: true })
}

/// One line of the verification report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckLine {
    pub check: String,
    pub max_residual: f64,
    pub threshold: f64,
    pub at: f64,
    pub pass: bool,
    pub detail: String,
}

impl CheckLine {
    fn new(check: &str, max_residual: f64, threshold: f64, at: f64) -> Self {
        CheckLine {
            check: check.into(),
            max_residual,
            threshold,
            at,
            pass: max_residual <= threshold,
            detail: String::new(),
        }
    }

    fn failed(check: &str, threshold: f64, detail: String) -> Self {
        CheckLine {
            check: check.into(),
            max_residual: f64::INFINITY,
            threshold,
            at: f64::NAN,
            pass: false,
            detail,
        }
    }
}

/// Cross-check tolerance for the Cauchy problems and the along-path identity.
pub const VERIFY_TOL: f64 = 1e-6;

/// Every identity check for one `(profile, A, B)`.
pub fn verification_checks(ws: &WarpingSolution, cfg: &RunConfig) -> Result<Vec<CheckLine>, CliError> {
    let a = cfg.a_single()?;
    // H is defined for the normalization alpha(0) = 1; B only enters the
    // third-order problem.
    let sys = RadialSystem::normalized(ws, a).map_err(|e| CliError::Config(e.to_string()))?;
    let chart = ws.chart_radius();
    let mut lines = Vec::new();

    lines.push(match verify_second_order(&sys, cfg.grid, VERIFY_TOL) {
        Ok(rep) => CheckLine::new("second_order", rep.max_residual, VERIFY_TOL, rep.argmax_t),
        Err(e) => CheckLine::failed("second_order", VERIFY_TOL, e.to_string()),
    });

    let third = solve_third_order(ws, a, cfg.b, chart).map_err(numeric)?;
    lines.push(CheckLine::new("third_order", third.max_residual, VERIFY_TOL, third.argmax_t));

    let records = audit(&sys, &audit_radii(chart, 64)).map_err(numeric)?;
    let mut names: Vec<&str> = Vec::new();
    for r in &records {
        if !names.contains(&r.check_name.as_str()) {
            names.push(&r.check_name);
        }
    }
    for name in names {
        let group: Vec<_> = records.iter().filter(|r| r.check_name == name).collect();
        // Report the record closest to (or furthest past) its threshold.
        let worst = group
            .iter()
            .max_by(|x, y| (x.residual / x.threshold).total_cmp(&(y.residual / y.threshold)))
            .expect("non-empty group");
        let mut line = CheckLine::new(name, worst.residual, worst.threshold, worst.r);
        line.pass = group.iter().all(|r| r.pass);
        lines.push(line);
    }

    let drift = reconstruct_metric_coefficient(ws, cfg.eps, 0.9 * chart).map_err(numeric)?;
    let mut line = CheckLine::new("metric_reconstruction", drift.max_drift, drift.bound, drift.r_end_check);
    line.pass = drift.pass;
    lines.push(line);

    let along = integrate_geodesic(ws, 0.5 * chart, 0.0, std::f64::consts::FRAC_PI_4, chart, ws.working_tolerances())
        .and_then(|path| hessian_along_geodesic(&sys, &path, VERIFY_TOL));
    lines.push(match along {
        Ok(rep) => CheckLine::new("along_geodesic", rep.max_residual, VERIFY_TOL, rep.argmax_t),
        Err(e) => CheckLine::failed("along_geodesic", VERIFY_TOL, e.to_string()),
    });

    lines.push(CheckLine::new("mesh_replay", ws.replay_deviation(), 0.0, f64::NAN));
    Ok(lines)
}

fn cmd_verify(cfg: &RunConfig, out: &mut dyn Write) -> Result<Outcome, CliError> {
    cfg.a_single()?;
    let lines = match &cfg.solution {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            match WarpingSolution::from_json(&text) {
                Ok(ws) => verification_checks(&ws, cfg)?,
                // A file that no longer parses as a solution is corrupt.
                Err(e) => vec![CheckLine::failed("mesh_replay", 0.0, e.to_string())],
            }
        }
        None => verification_checks(&solve(cfg)?, cfg)?,
    };

    let mut table = Table::new("verify", &["check", "max_residual", "threshold", "at", "pass", "detail"]);
    for l in &lines {
        table.push(vec![
            Cell::Text(l.check.clone()),
            Cell::Num(l.max_residual),
            Cell::Num(l.threshold),
            Cell::Num(l.at),
            Cell::Bool(l.pass),
            Cell::Text(l.detail.clone()),
        ]);
        let status = if l.pass { "PASS" } else { "FAIL" };
        let mut text = format!("{status} {} max_residual={:.3e} threshold={:.3e}", l.check, l.max_residual, l.threshold);
        if !l.detail.is_empty() {
            text.push_str(&format!(" ({})", l.detail));
        }
        say(out, text)?;
    }
    let passed = lines.iter().all(|l| l.pass);
    Ok(Outcome {
        files: vec![write_table(cfg, &table)?],
        passed,
    })
}

fn cmd_classify(cfg: &RunConfig, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let a = cfg.a_single()?;
    let ws = solve(cfg)?;
    let rep = classify(&ws, a, cfg.tol).map_err(|e| match e {
        Error::InvalidArgument(_) if a == 0.0 => CliError::Config(e.to_string()),
        e => numeric(e),
    })?;
    let file = match cfg.format {
        crate::config::Format::Record => write_record(cfg, "classify", &rep)?,
        crate::config::Format::Csv => {
            let mut table = Table::new(
                "classify",
                &[
                    "profile", "A", "case", "r_minus_g", "R_star", "H_at_boundary", "gprime_at_boundary",
                    "g2_residual", "g4_residual", "gprime_nonzero", "criteria_disagree", "notes",
                ],
            );
            let even = |k: usize| Cell::opt(rep.even_derivative_residuals.get(&k).copied());
            table.push(vec![
                Cell::Text(rep.profile.clone()),
                Cell::Num(rep.a),
                Cell::Text(rep.case.to_string()),
                Cell::opt(rep.r_minus_g),
                Cell::opt(rep.r_star),
                Cell::opt(rep.h_at_boundary),
                Cell::opt(rep.gprime_at_boundary),
                even(2),
                even(4),
                Cell::Text(rep.gprime_nonzero.map_or("none".into(), |b| b.to_string())),
                Cell::Bool(rep.criteria_disagree),
                Cell::Text(rep.notes.join("; ")),
            ]);
            write_table(cfg, &table)?
        }
    };
    say(out, format!("{}", rep.case))?;
    for note in &rep.notes {
        say(out, format!("note: {note}"))?;
    }
    Ok(Outcome {
        files: vec![file],
        passed: true,
    })
}

fn cmd_geodesic(cfg: &RunConfig, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let ws = solve(cfg)?;
    let path = integrate_geodesic(&ws, cfg.r0, cfg.phi0, cfg.angle, cfg.length, cfg.tolerances()).map_err(
        |e| match e {
            Error::OutOfRange { .. } | Error::PoleSingularity { .. } => CliError::Config(format!("r0: {e}")),
            e => numeric(e),
        },
    )?;
    let mut table = Table::new(
        "geodesic",
        &["t", "r", "phi", "dr", "dphi", "energy_drift", "clairaut_drift"],
    );
    for row in path.rows(&ws).map_err(numeric)? {
        table.push(
            [row.t, row.r, row.phi, row.dr, row.dphi, row.energy_drift, row.clairaut_drift]
                .into_iter()
                .map(Cell::Num)
                .collect(),
        );
    }
    let (e_drift, c_drift) = path.max_drifts(&ws).map_err(numeric)?;
    let clipped = match path.clipped() {
        None => "none",
        Some(ClipEdge::Pole) => "pole",
        Some(ClipEdge::Outer) => "outer",
    };
    let mut summary = Table::new(
        "geodesic_summary",
        &["length", "clipped", "energy0", "clairaut0", "max_energy_drift", "max_clairaut_drift"],
    );
    summary.push(vec![
        Cell::Num(path.length()),
        Cell::Text(clipped.into()),
        Cell::Num(path.energy0()),
        Cell::Num(path.clairaut0()),
        Cell::Num(e_drift),
        Cell::Num(c_drift),
    ]);
    say(out, format!("length = {}, clipped = {clipped}", fmt_f64(path.length())))?;
    say(out, format!("max energy drift = {e_drift:.3e}, max Clairaut drift = {c_drift:.3e}"))?;
    let files = vec![write_table(cfg, &table)?, write_table(cfg, &summary)?];
    Ok(Outcome { files, passed: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_from_text() {
        assert_eq!(parse_table("0, -1\n1, -1\n"), Some(vec![(0.0, -1.0), (1.0, -1.0)]));
        assert_eq!(parse_table("r G\n0 1\n1 2\n2 3\n").unwrap().len(), 3);
        assert_eq!(parse_table("-1 - 0.3*r^2"), None);
        assert_eq!(parse_table("0 1\n"), None);
    }

    #[test]
    fn uniform_hits_both_ends() {
        let v: Vec<f64> = uniform(0.0, std::f64::consts::PI, 7).collect();
        assert_eq!(v[0], 0.0);
        assert_eq!(v[6], std::f64::consts::PI);
    }
}
