//! Run configuration: defaults, a flat `key = value` file with per-command
//! sections, and command-line overrides on top.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Family,
    Verify,
    Classify,
    Geodesic,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Family => "family",
            Command::Verify => "verify",
            Command::Classify => "classify",
            Command::Geodesic => "geodesic",
        }
    }

    fn from_section(name: &str) -> Option<Command> {
        Some(match name {
            "solve" => Command::Solve,
            "family" => Command::Family,
            "verify" => Command::Verify,
            "classify" => Command::Classify,
            "geodesic" => Command::Geodesic,
            _ => return None,
        })
    }

    /// Keys accepted inside this command's section.
    fn section_keys(self) -> &'static [&'static str] {
        match self {
            Command::Solve => &["samples"],
            Command::Family => &["A", "B", "samples"],
            Command::Verify => &["A", "B", "grid", "eps", "solution"],
            Command::Classify => &["A", "tol"],
            Command::Geodesic => &["r0", "phi0", "angle", "length"],
        }
    }
}

const COMMON_KEYS: &[&str] = &["profile", "profile_file", "rmax", "rtol", "atol", "out", "format"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Record,
}

impl Format {
    pub fn parse(s: &str) -> Result<Format, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "record" => Ok(Format::Record),
            _ => Err(CliError::Config(format!("format must be csv or record, got `{s}`"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Record => "record",
        })
    }
}

/// Fully resolved settings. Every field has a default.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub profile: String,
    pub profile_file: Option<PathBuf>,
    pub r_max: f64,
    pub rtol: f64,
    pub atol: f64,
    pub out: PathBuf,
    pub format: Format,
    /// `A` as written (a list or `start:stop:step` for `family`).
    pub a_spec: String,
    pub b: f64,
    pub samples: usize,
    pub grid: usize,
    pub eps: f64,
    pub solution: Option<PathBuf>,
    pub tol: f64,
    pub r0: f64,
    pub phi0: f64,
    pub angle: f64,
    pub length: f64,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        RunConfig {
            command,
            profile: "const:-1".into(),
            profile_file: None,
            r_max: 4.0,
            rtol: 1e-12,
            atol: 1e-12,
            out: PathBuf::from("out"),
            format: Format::Csv,
            a_spec: "1".into(),
            b: 1.0,
            samples: 201,
            grid: 200,
            eps: 1e-3,
            solution: None,
            tol: 1e-6,
            r0: 1.0,
            phi0: 0.0,
            angle: std::f64::consts::FRAC_PI_4,
            length: 10.0,
        }
    }

    /// Apply one `key = value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        match key {
            "profile" => self.profile = value.to_string(),
            "profile_file" => self.profile_file = Some(PathBuf::from(value)),
            "rmax" => self.r_max = parse_f64(key, value)?,
            "rtol" => self.rtol = parse_f64(key, value)?,
            "atol" => self.atol = parse_f64(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "format" => self.format = Format::parse(value)?,
            "A" => self.a_spec = value.to_string(),
            "B" => self.b = parse_f64(key, value)?,
            "samples" => self.samples = parse_usize(key, value)?,
            "grid" => self.grid = parse_usize(key, value)?,
            "eps" => self.eps = parse_f64(key, value)?,
            "solution" => self.solution = Some(PathBuf::from(value)),
            "tol" => self.tol = parse_f64(key, value)?,
            "r0" => self.r0 = parse_f64(key, value)?,
            "phi0" => self.phi0 = parse_f64(key, value)?,
            "angle" => self.angle = parse_f64(key, value)?,
            "length" => self.length = parse_f64(key, value)?,
            _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Read a config file. Top-level keys are common settings; `[name]`
    /// sections hold settings for one command. Sections of other commands
    /// are checked but not applied.
    pub fn load_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        self.load_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn load_str(&mut self, text: &str) -> Result<(), CliError> {
        let mut section: Option<Command> = None;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = |msg: String| CliError::Config(format!("line {}: {msg}", no + 1));
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let cmd = Command::from_section(name.trim())
                    .ok_or_else(|| at(format!("unknown section `{name}`")))?;
                section = Some(cmd);
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            let allowed = match section {
                None => COMMON_KEYS,
                Some(cmd) => cmd.section_keys(),
            };
            if !allowed.contains(&key) {
                let place = section.map_or("top level".to_string(), |c| format!("[{}]", c.name()));
                return Err(at(format!("unknown key `{key}` at {place}")));
            }
            if section.is_none() || section == Some(self.command) {
                self.set(key, value).map_err(|e| at(e.to_string()))?;
            } else {
                // Validate values of other sections without applying them.
                RunConfig::defaults(section.unwrap_or(self.command))
                    .set(key, value)
                    .map_err(|e| at(e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn tolerances(&self) -> modelforge_core::integrate::Tolerances {
        modelforge_core::integrate::Tolerances::new(self.rtol, self.atol)
    }

    pub fn check(&self) -> Result<(), CliError> {
        let bad = |msg: &str| Err(CliError::Config(msg.to_string()));
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return bad("rmax must be positive and finite");
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return bad("rtol and atol must be positive");
        }
        if self.samples < 2 || self.grid < 2 {
            return bad("samples and grid must be at least 2");
        }
        if !(self.eps > 0.0) {
            return bad("eps must be positive");
        }
        if !(self.length > 0.0) {
            return bad("length must be positive");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        Ok(())
    }

    /// `A` values for a sweep.
    pub fn a_values(&self) -> Result<Vec<f64>, CliError> {
        parse_a_spec(&self.a_spec)
    }

    /// A single `A` value.
    pub fn a_single(&self) -> Result<f64, CliError> {
        match self.a_values()?.as_slice() {
            [a] => Ok(*a),
            _ => Err(CliError::Config(format!(
                "{} takes a single A, got `{}`",
                self.command.name(),
                self.a_spec
            ))),
        }
    }

    /// The settings that affect this command's output, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![("command", self.command.name().to_string())];
        match &self.profile_file {
            Some(p) => out.push(("profile_file", p.display().to_string())),
            None => out.push(("profile", self.profile.clone())),
        }
        out.push(("rmax", num(self.r_max)));
        out.push(("rtol", num(self.rtol)));
        out.push(("atol", num(self.atol)));
        out.push(("format", self.format.to_string()));
        match self.command {
            Command::Solve => out.push(("samples", self.samples.to_string())),
            Command::Family => {
                out.push(("A", self.a_spec.clone()));
                out.push(("B", num(self.b)));
                out.push(("samples", self.samples.to_string()));
            }
            Command::Verify => {
                out.push(("A", self.a_spec.clone()));
                out.push(("B", num(self.b)));
                out.push(("grid", self.grid.to_string()));
                out.push(("eps", num(self.eps)));
                if let Some(p) = &self.solution {
                    out.push(("solution", p.display().to_string()));
                }
            }
            Command::Classify => {
                out.push(("A", self.a_spec.clone()));
                out.push(("tol", num(self.tol)));
            }
            Command::Geodesic => {
                out.push(("r0", num(self.r0)));
                out.push(("phi0", num(self.phi0)));
                out.push(("angle", num(self.angle)));
                out.push(("length", num(self.length)));
            }
        }
        out
    }
}

/// Shortest text that reads back as the same `f64`.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn parse_f64(key: &str, value: &str) -> Result<f64, CliError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::Config(format!("{key}: `{value}` is not a finite number")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize, CliError> {
    value
        .parse::<usize>()
        .map_err(|_| CliError::Config(format!("{key}: `{value}` is not a count")))
}

/// `a,b,c` or `start:stop:step` (stop included when hit to within half a
/// step). Zero is rejected.
pub fn parse_a_spec(spec: &str) -> Result<Vec<f64>, CliError> {
    let spec = spec.trim();
    let values = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, stop, step] = parts.as_slice() else {
            return Err(CliError::Config(format!("A range must be start:stop:step, got `{spec}`")));
        };
        let (start, stop, step) = (
            parse_f64("A", start.trim())?,
            parse_f64("A", stop.trim())?,
            parse_f64("A", step.trim())?,
        );
        if step <= 0.0 || stop < start {
            return Err(CliError::Config(format!("A range `{spec}` needs step > 0 and stop >= start")));
        }
        let n = ((stop - start) / step + 0.5).floor() as usize;
        if n > 1_000_000 {
            return Err(CliError::Config(format!("A range `{spec}` has too many values")));
        }
        (0..=n).map(|i| start + step * i as f64).collect()
    } else {
        spec.split(',')
            .map(|s| parse_f64("A", s.trim()))
            .collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err(CliError::Config("no A values".into()));
    }
    if values.iter().any(|&a| a == 0.0) {
        return Err(CliError::Config("A = 0 is not allowed".into()));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_specs() {
        assert_eq!(parse_a_spec("-1, -0.4,1").unwrap(), vec![-1.0, -0.4, 1.0]);
        assert_eq!(parse_a_spec("1:2:0.5").unwrap(), vec![1.0, 1.5, 2.0]);
        assert!(parse_a_spec("0").is_err());
        assert!(parse_a_spec("-1:1:0.5").is_err());
        assert!(parse_a_spec("1:0:1").is_err());
        assert!(parse_a_spec("x").is_err());
    }

    #[test]
    fn file_sections() {
        let mut c = RunConfig::defaults(Command::Family);
        c.load_str("profile = 0\nrmax = 3\n[family]\nA = 1,2\n[classify]\ntol = 1e-3\n")
            .unwrap();
        assert_eq!(c.profile, "0");
        assert_eq!(c.r_max, 3.0);
        assert_eq!(c.a_spec, "1,2");
        assert_eq!(c.tol, 1e-6);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let mut c = RunConfig::defaults(Command::Solve);
        assert!(c.load_str("bogus = 1\n").is_err());
        assert!(c.load_str("[solve]\nA = 1\n").is_err());
        assert!(c.load_str("[nope]\n").is_err());
        assert!(c.load_str("[classify]\ntol = abc\n").is_err());
        assert!(c.load_str("rmax 3\n").is_err());
    }
}
