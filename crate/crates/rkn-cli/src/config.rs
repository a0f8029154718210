//! Experiment configuration: a key = value file merged with command
//! line flags, flags winning.

use rkn_core::linalg::{Preconditioner, SolverConfig, SolverMethod};
use rkn_core::stepping::BcStrategy;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Converge,
    Energy,
    SolveStudy,
    Stability,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Experiment::Converge => "converge",
            Experiment::Energy => "energy",
            Experiment::SolveStudy => "solve_study",
            Experiment::Stability => "stability",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Formulation {
    Rkn,
    Rk,
    Central,
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Formulation::Rkn => "rkn",
            Formulation::Rk => "rk",
            Formulation::Central => "central",
        };
        write!(f, "{s}")
    }
}

/// Time step selection: a fixed value or proportional to the mesh size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DtRule {
    Fixed(f64),
    /// dt = factor * h
    HFactor(f64),
}

impl DtRule {
    pub fn dt_for(&self, h: f64) -> f64 {
        match self {
            DtRule::Fixed(v) => *v,
            DtRule::HFactor(f) => f * h,
        }
    }
}

impl fmt::Display for DtRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DtRule::Fixed(v) => write!(f, "{v}"),
            DtRule::HFactor(x) => write!(f, "hfactor:{x}"),
        }
    }
}

/// Fully resolved experiment description.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: String,
    pub tableau: String,
    pub formulation: Formulation,
    /// Boundary strategy; defaults (when unset) to ode for explicit
    /// formulations and ddae for implicit ones.
    pub bc: Option<BcStrategy>,
    pub n_list: Vec<usize>,
    pub dt_rule: DtRule,
    pub t_final: f64,
    pub solver: SolverConfig,
    pub out: PathBuf,
    pub include_setup_time: bool,
}

impl ExperimentConfig {
    pub fn bc_or_default(&self, explicit: bool) -> BcStrategy {
        self.bc.unwrap_or(if explicit { BcStrategy::Ode } else { BcStrategy::Ddae })
    }

    /// Echo of every field in config-file syntax (for the sidecar).
    pub fn echo(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("experiment = {}\n", self.experiment));
        s.push_str(&format!("model = {}\n", self.model));
        s.push_str(&format!("tableau = {}\n", self.tableau));
        s.push_str(&format!("formulation = {}\n", self.formulation));
        match self.bc {
            Some(bc) => s.push_str(&format!("bc = {bc}\n")),
            None => s.push_str("bc = (default)\n"),
        }
        let ns: Vec<String> = self.n_list.iter().map(|n| n.to_string()).collect();
        s.push_str(&format!("n = {}\n", ns.join(",")));
        s.push_str(&format!("dt = {}\n", self.dt_rule));
        s.push_str(&format!("tfinal = {}\n", self.t_final));
        let solver = match self.solver.method {
            SolverMethod::Direct => "direct",
            SolverMethod::Gmres => "gmres",
        };
        s.push_str(&format!("solver = {solver}\n"));
        let pc = match self.solver.preconditioner {
            Preconditioner::None => "none",
            Preconditioner::BlockDiagonal => "block-diagonal",
            Preconditioner::BlockLower => "block-lower",
            Preconditioner::ClinesLd => "clines-ld",
        };
        s.push_str(&format!("pc = {pc}\n"));
        s.push_str(&format!("rtol = {:e}\n", self.solver.rtol));
        s.push_str(&format!("restart = {}\n", self.solver.restart));
        s.push_str(&format!("out = {}\n", self.out.display()));
        s.push_str(&format!("include-setup-time = {}\n", self.include_setup_time));
        s
    }
}

/// Raw option set: every field optional so that file values and flag
/// values can be layered.
#[derive(Clone, Debug, Default)]
pub struct RawOptions {
    pub model: Option<String>,
    pub tableau: Option<String>,
    pub formulation: Option<String>,
    pub bc: Option<String>,
    pub n: Option<String>,
    pub dt: Option<String>,
    pub tfinal: Option<f64>,
    pub solver: Option<String>,
    pub pc: Option<String>,
    pub rtol: Option<f64>,
    pub restart: Option<usize>,
    pub out: Option<PathBuf>,
    pub include_setup_time: Option<bool>,
}

impl RawOptions {
    /// Layer `other` on top of self (other wins).
    pub fn overridden_by(mut self, other: RawOptions) -> RawOptions {
        macro_rules! take {
            ($f:ident) => {
                if other.$f.is_some() {
                    self.$f = other.$f;
                }
            };
        }
        take!(model);
        take!(tableau);
        take!(formulation);
        take!(bc);
        take!(n);
        take!(dt);
        take!(tfinal);
        take!(solver);
        take!(pc);
        take!(rtol);
        take!(restart);
        take!(out);
        take!(include_setup_time);
        self
    }
}

/// Parse a `key = value` config file; `#` starts a comment.
pub fn parse_config_file(path: &Path) -> Result<RawOptions, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return err(format!("{}:{}: expected key = value", path.display(), lineno + 1));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    let mut raw = RawOptions::default();
    for (key, value) in map {
        match key.as_str() {
            "model" => raw.model = Some(value),
            "tableau" => raw.tableau = Some(value),
            "formulation" => raw.formulation = Some(value),
            "bc" => raw.bc = Some(value),
            "n" => raw.n = Some(value),
            "dt" => raw.dt = Some(value),
            "tfinal" => {
                raw.tfinal = Some(value.parse().map_err(|_| ConfigError(format!("bad tfinal '{value}'")))?)
            }
            "solver" => raw.solver = Some(value),
            "pc" => raw.pc = Some(value),
            "rtol" => {
                raw.rtol = Some(value.parse().map_err(|_| ConfigError(format!("bad rtol '{value}'")))?)
            }
            "restart" => {
                raw.restart =
                    Some(value.parse().map_err(|_| ConfigError(format!("bad restart '{value}'")))?)
            }
            "out" => raw.out = Some(PathBuf::from(value)),
            "include-setup-time" => {
                raw.include_setup_time = Some(value.parse().map_err(|_| {
                    ConfigError(format!("bad include-setup-time '{value}' (true/false)"))
                })?)
            }
            other => return err(format!("unknown config key '{other}'")),
        }
    }
    Ok(raw)
}

pub fn parse_n_list(text: &str) -> Result<Vec<usize>, ConfigError> {
    let list: Result<Vec<usize>, _> = text
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect();
    let list = list.map_err(|_| ConfigError(format!("bad n list '{text}'")))?;
    if list.is_empty() || list.contains(&0) {
        return err("n list must contain positive integers");
    }
    if list.windows(2).any(|w| w[0] >= w[1]) {
        return err("n list must be strictly increasing");
    }
    Ok(list)
}

pub fn parse_dt_rule(text: &str) -> Result<DtRule, ConfigError> {
    let rule = if let Some(rest) = text.strip_prefix("hfactor:") {
        DtRule::HFactor(
            rest.parse().map_err(|_| ConfigError(format!("bad hfactor '{rest}'")))?,
        )
    } else {
        DtRule::Fixed(text.parse().map_err(|_| ConfigError(format!("bad dt '{text}'")))?)
    };
    let v = match rule {
        DtRule::Fixed(v) | DtRule::HFactor(v) => v,
    };
    if !(v > 0.0) {
        return err("dt rule must be positive");
    }
    Ok(rule)
}

pub fn parse_bc(text: &str) -> Result<BcStrategy, ConfigError> {
    match text {
        "ode" => Ok(BcStrategy::Ode),
        "dae" => Ok(BcStrategy::Dae),
        "ddae" => Ok(BcStrategy::Ddae),
        other => err(format!("unknown bc strategy '{other}' (ode|dae|ddae)")),
    }
}

/// Resolve layered options into a full config for one experiment.
pub fn resolve(experiment: Experiment, raw: RawOptions) -> Result<ExperimentConfig, ConfigError> {
    let model = raw.model.ok_or_else(|| ConfigError("--model is required".into()))?;
    let tableau = raw.tableau.unwrap_or_else(|| "gl2".into());
    let formulation = match raw.formulation.as_deref() {
        None | Some("rkn") => Formulation::Rkn,
        Some("rk") => Formulation::Rk,
        Some("central") => Formulation::Central,
        Some(other) => return err(format!("unknown formulation '{other}' (rkn|rk|central)")),
    };
    let bc = raw.bc.as_deref().map(parse_bc).transpose()?;
    let n_list = parse_n_list(raw.n.as_deref().unwrap_or("16,32,64"))?;
    let dt_rule = parse_dt_rule(raw.dt.as_deref().unwrap_or("hfactor:1.0"))?;
    let t_final = raw.tfinal.unwrap_or(1.0);
    if !(t_final > 0.0) {
        return err("tfinal must be positive");
    }
    let method = match raw.solver.as_deref() {
        None | Some("direct") => SolverMethod::Direct,
        Some("gmres") => SolverMethod::Gmres,
        Some(other) => return err(format!("unknown solver '{other}' (direct|gmres)")),
    };
    let preconditioner = match raw.pc.as_deref() {
        None | Some("none") => Preconditioner::None,
        Some("block-diagonal") => Preconditioner::BlockDiagonal,
        Some("block-lower") => Preconditioner::BlockLower,
        Some("clines-ld") => Preconditioner::ClinesLd,
        Some(other) => {
            return err(format!(
                "unknown preconditioner '{other}' (none|block-diagonal|block-lower|clines-ld)"
            ))
        }
    };
    let rtol = raw.rtol.unwrap_or(1e-7);
    let restart = raw.restart.unwrap_or(50);
    if !(rtol > 0.0) || restart < 1 {
        return err("rtol must be positive and restart >= 1");
    }
    let solver = SolverConfig {
        method,
        rtol,
        atol: 1e-14,
        max_iters: 20_000,
        restart,
        preconditioner,
    };
    let out = raw.out.ok_or_else(|| ConfigError("--out is required".into()))?;
    Ok(ExperimentConfig {
        experiment,
        model,
        tableau,
        formulation,
        bc,
        n_list,
        dt_rule,
        t_final,
        solver,
        out,
        include_setup_time: raw.include_setup_time.unwrap_or(false),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n_list_must_increase() {
        assert!(parse_n_list("16,32,64").is_ok());
        assert!(parse_n_list("32,16").is_err());
        assert!(parse_n_list("0,4").is_err());
        assert!(parse_n_list("").is_err());
    }

    #[test]
    fn dt_rule_forms() {
        assert_eq!(parse_dt_rule("0.125").unwrap(), DtRule::Fixed(0.125));
        assert_eq!(parse_dt_rule("hfactor:2.5").unwrap(), DtRule::HFactor(2.5));
        assert!(parse_dt_rule("-1").is_err());
        assert!(parse_dt_rule("hfactor:-1").is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let file = RawOptions { model: Some("wave1d".into()), tfinal: Some(1.0), ..Default::default() };
        let flags = RawOptions { tfinal: Some(2.0), ..Default::default() };
        let merged = file.overridden_by(flags);
        assert_eq!(merged.model.as_deref(), Some("wave1d"));
        assert_eq!(merged.tfinal, Some(2.0));
    }

    #[test]
    fn resolve_defaults() {
        let raw = RawOptions {
            model: Some("wave1d".into()),
            out: Some(PathBuf::from("/tmp/x.csv")),
            ..Default::default()
        };
        let cfg = resolve(Experiment::Converge, raw).unwrap();
        assert_eq!(cfg.tableau, "gl2");
        assert_eq!(cfg.formulation, Formulation::Rkn);
        assert_eq!(cfg.solver.rtol, 1e-7);
        assert_eq!(cfg.solver.restart, 50);
        assert!(cfg.bc.is_none());
    }

    #[test]
    fn config_file_round_trip() {
        let dir = std::env::temp_dir();
        let path = dir.join("rkn_test_cfg.txt");
        std::fs::write(
            &path,
            "# demo\nmodel = wave2d\nn = 4,8\ndt = hfactor:0.5\nrtol = 1e-9\n",
        )
        .unwrap();
        let raw = parse_config_file(&path).unwrap();
        assert_eq!(raw.model.as_deref(), Some("wave2d"));
        assert_eq!(raw.n.as_deref(), Some("4,8"));
        assert_eq!(raw.rtol, Some(1e-9));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn unknown_key_rejected() {
        let dir = std::env::temp_dir();
        let path = dir.join("rkn_bad_cfg.txt");
        std::fs::write(&path, "mesh = 4\n").unwrap();
        assert!(parse_config_file(&path).is_err());
        std::fs::remove_file(&path).ok();
    }
}
