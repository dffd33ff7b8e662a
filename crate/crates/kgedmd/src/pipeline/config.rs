//! Experiment configuration: a flat `key = value` text format with one
//! `[section]` per module. Every key is documented in the repository's
//! `docs/config.md`.

use crate::error::{KgError, Result};
use crate::kernels::KernelSpec;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemId {
    Ou,
    Quadwell,
    Qho,
    Hydrogen,
    Swissroll,
    Custom,
}

impl SystemId {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ou" => Ok(SystemId::Ou),
            "quadwell" => Ok(SystemId::Quadwell),
            "qho" => Ok(SystemId::Qho),
            "hydrogen" => Ok(SystemId::Hydrogen),
            "swissroll" => Ok(SystemId::Swissroll),
            "custom" => Ok(SystemId::Custom),
            other => Err(KgError::Config(format!("unknown system '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SystemId::Ou => "ou",
            SystemId::Quadwell => "quadwell",
            SystemId::Qho => "qho",
            SystemId::Hydrogen => "hydrogen",
            SystemId::Swissroll => "swissroll",
            SystemId::Custom => "custom",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    General,
    Symmetric,
    Schrodinger,
    SdeOfSchrodinger,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Mode::General),
            "symmetric" => Ok(Mode::Symmetric),
            "schrodinger" => Ok(Mode::Schrodinger),
            "sde-of-schrodinger" => Ok(Mode::SdeOfSchrodinger),
            other => Err(KgError::Config(format!("unknown mode '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::General => "general",
            Mode::Symmetric => "symmetric",
            Mode::Schrodinger => "schrodinger",
            Mode::SdeOfSchrodinger => "sde-of-schrodinger",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMethod {
    Box,
    Ball,
    Trajectory,
    Swissroll,
}

impl SamplingMethod {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "box" => Ok(SamplingMethod::Box),
            "ball" => Ok(SamplingMethod::Ball),
            "trajectory" => Ok(SamplingMethod::Trajectory),
            "swissroll" => Ok(SamplingMethod::Swissroll),
            other => Err(KgError::Config(format!("unknown sampling method '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SamplingMethod::Box => "box",
            SamplingMethod::Ball => "ball",
            SamplingMethod::Trajectory => "trajectory",
            SamplingMethod::Swissroll => "swissroll",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub method: SamplingMethod,
    /// Number of retained samples.
    pub m: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub radius: f64,
    pub noise: f64,
    pub dt: f64,
    pub burn_in: usize,
    pub stride: usize,
    pub x0: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemParams {
    pub beta_inv: f64,
    pub gamma1: f64,
    pub well1: f64,
    pub gamma2: f64,
    pub well2: f64,
    /// Declared reversibility for custom systems (symmetric-mode guard).
    pub reversible: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KdeConfig {
    pub bandwidth: f64,
    pub floor: f64,
    /// 0 means "use the ambient dimension".
    pub norm_dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    None,
    Samples,
    Uniform,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridConfig {
    pub kind: GridKind,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub points: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub system: SystemId,
    pub mode: Mode,
    pub n_eigenpairs: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub kernel_kind: String,
    pub bandwidth: f64,
    pub degree: u32,
    pub offset: f64,
    pub sampling: SamplingConfig,
    pub params: SystemParams,
    pub kde: KdeConfig,
    pub grid: GridConfig,
    pub cluster_k: usize,
    pub cluster_restarts: usize,
}

impl ExperimentConfig {
    /// Defaults for a named system; every field can be overridden by the
    /// config file.
    pub fn defaults(system: SystemId) -> Self {
        let mut cfg = ExperimentConfig {
            system,
            mode: Mode::General,
            n_eigenpairs: 6,
            epsilon: 1e-8,
            seed: 42,
            output_dir: None,
            kernel_kind: "gaussian".into(),
            bandwidth: 1.0,
            degree: 4,
            offset: 1.0,
            sampling: SamplingConfig {
                method: SamplingMethod::Box,
                m: 100,
                lo: vec![-5.0],
                hi: vec![5.0],
                radius: 20.0,
                noise: 0.0,
                dt: 1e-3,
                burn_in: 10_000,
                stride: 100,
                x0: vec![],
            },
            params: SystemParams {
                beta_inv: 0.5,
                gamma1: 0.62,
                well1: 1.0,
                gamma2: 1.3,
                well2: 0.6,
                reversible: false,
            },
            kde: KdeConfig {
                bandwidth: 1.5,
                floor: 1e-12,
                norm_dim: 0,
            },
            grid: GridConfig {
                kind: GridKind::Samples,
                lo: vec![-3.0],
                hi: vec![3.0],
                points: 121,
            },
            cluster_k: 4,
            cluster_restarts: 50,
        };
        match system {
            SystemId::Qho => {
                cfg.mode = Mode::Schrodinger;
                cfg.sampling.method = SamplingMethod::Box;
                cfg.sampling.m = 100;
                cfg.grid.kind = GridKind::Uniform;
            }
            SystemId::Hydrogen => {
                cfg.mode = Mode::Schrodinger;
                cfg.bandwidth = 2.0;
                cfg.sampling.method = SamplingMethod::Ball;
                cfg.sampling.m = 5000;
                cfg.sampling.radius = 20.0;
                cfg.n_eigenpairs = 8;
            }
            SystemId::Ou => {
                cfg.mode = Mode::Symmetric;
                cfg.sampling.method = SamplingMethod::Trajectory;
                cfg.sampling.m = 2000;
                cfg.sampling.stride = 500;
                cfg.sampling.x0 = vec![0.0];
                cfg.n_eigenpairs = 4;
            }
            SystemId::Quadwell => {
                cfg.mode = Mode::Symmetric;
                cfg.bandwidth = 0.5;
                cfg.sampling.method = SamplingMethod::Trajectory;
                cfg.sampling.m = 5000;
                cfg.sampling.stride = 200;
                cfg.sampling.x0 = vec![1.0, 0.6];
                cfg.n_eigenpairs = 6;
            }
            SystemId::Swissroll => {
                cfg.mode = Mode::General;
                cfg.bandwidth = 2.2;
                cfg.sampling.method = SamplingMethod::Swissroll;
                cfg.sampling.m = 2000;
                cfg.kde.bandwidth = 1.5;
                cfg.kde.norm_dim = 2;
                cfg.n_eigenpairs = 8;
            }
            SystemId::Custom => {}
        }
        cfg
    }

    pub fn kernel(&self, dim: usize) -> Result<KernelSpec> {
        match self.kernel_kind.as_str() {
            "gaussian" => KernelSpec::gaussian(self.bandwidth, dim),
            "polynomial" => KernelSpec::polynomial(self.degree, self.offset, dim),
            other => Err(KgError::Config(format!("unknown kernel kind '{other}'"))),
        }
    }

    /// Mode/system compatibility, checked before any assembly.
    pub fn validate(&self) -> Result<()> {
        if self.n_eigenpairs == 0 {
            return Err(KgError::Config("n_eigenpairs must be >= 1".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(KgError::Config("epsilon must be nonnegative".into()));
        }
        match (self.system, self.mode) {
            (SystemId::Custom, Mode::Symmetric) if !self.params.reversible => {
                Err(KgError::Config(
                    "symmetric mode requires a reversible system; the custom \
                     system declares reversible = false"
                        .into(),
                ))
            }
            (SystemId::Swissroll, Mode::SdeOfSchrodinger)
            | (SystemId::Ou, Mode::SdeOfSchrodinger)
            | (SystemId::Quadwell, Mode::SdeOfSchrodinger) => Err(KgError::Config(
                "sde-of-schrodinger mode needs a Schrödinger system (qho, hydrogen)".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Canonical `[section] key = value` text that reproduces this
    /// configuration exactly.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[experiment]");
        let _ = writeln!(s, "system = {}", self.system.name());
        let _ = writeln!(s, "mode = {}", self.mode.name());
        let _ = writeln!(s, "n_eigenpairs = {}", self.n_eigenpairs);
        let _ = writeln!(s, "epsilon = {:e}", self.epsilon);
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(dir) = &self.output_dir {
            let _ = writeln!(s, "output_dir = {}", dir.display());
        }
        let _ = writeln!(s, "\n[kernel]");
        let _ = writeln!(s, "kind = {}", self.kernel_kind);
        let _ = writeln!(s, "bandwidth = {}", self.bandwidth);
        let _ = writeln!(s, "degree = {}", self.degree);
        let _ = writeln!(s, "offset = {}", self.offset);
        let _ = writeln!(s, "\n[sampling]");
        let _ = writeln!(s, "method = {}", self.sampling.method.name());
        let _ = writeln!(s, "m = {}", self.sampling.m);
        let _ = writeln!(s, "lo = {}", join(&self.sampling.lo));
        let _ = writeln!(s, "hi = {}", join(&self.sampling.hi));
        let _ = writeln!(s, "radius = {}", self.sampling.radius);
        let _ = writeln!(s, "noise = {}", self.sampling.noise);
        let _ = writeln!(s, "dt = {}", self.sampling.dt);
        let _ = writeln!(s, "burn_in = {}", self.sampling.burn_in);
        let _ = writeln!(s, "stride = {}", self.sampling.stride);
        if !self.sampling.x0.is_empty() {
            let _ = writeln!(s, "x0 = {}", join(&self.sampling.x0));
        }
        let _ = writeln!(s, "\n[system]");
        let _ = writeln!(s, "beta_inv = {}", self.params.beta_inv);
        let _ = writeln!(s, "gamma1 = {}", self.params.gamma1);
        let _ = writeln!(s, "well1 = {}", self.params.well1);
        let _ = writeln!(s, "gamma2 = {}", self.params.gamma2);
        let _ = writeln!(s, "well2 = {}", self.params.well2);
        let _ = writeln!(s, "reversible = {}", self.params.reversible);
        let _ = writeln!(s, "\n[kde]");
        let _ = writeln!(s, "bandwidth = {}", self.kde.bandwidth);
        let _ = writeln!(s, "floor = {:e}", self.kde.floor);
        let _ = writeln!(s, "norm_dim = {}", self.kde.norm_dim);
        let _ = writeln!(s, "\n[grid]");
        let _ = writeln!(s, "kind = {}", match self.grid.kind {
            GridKind::None => "none",
            GridKind::Samples => "samples",
            GridKind::Uniform => "uniform",
        });
        let _ = writeln!(s, "lo = {}", join(&self.grid.lo));
        let _ = writeln!(s, "hi = {}", join(&self.grid.hi));
        let _ = writeln!(s, "points = {}", self.grid.points);
        let _ = writeln!(s, "\n[cluster]");
        let _ = writeln!(s, "k = {}", self.cluster_k);
        let _ = writeln!(s, "restarts = {}", self.cluster_restarts);
        s
    }

    /// Parses the `[section] key = value` format. `#` starts a comment.
    /// The `[experiment] system` key selects the defaults; any other key
    /// overrides them. Unknown keys are rejected.
    pub fn from_str(text: &str) -> Result<Self> {
        let raw = parse_sections(text)?;
        let system = match raw.get("experiment.system") {
            Some(v) => SystemId::parse(v)?,
            None => {
                return Err(KgError::Config(
                    "missing required key [experiment] system".into(),
                ))
            }
        };
        let mut cfg = ExperimentConfig::defaults(system);
        for (key, value) in &raw {
            cfg.apply(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str(&text)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment.system" => {} // already consumed
            "experiment.mode" => self.mode = Mode::parse(value)?,
            "experiment.n_eigenpairs" => self.n_eigenpairs = parse_num(key, value)?,
            "experiment.epsilon" => self.epsilon = parse_num(key, value)?,
            "experiment.seed" => self.seed = parse_num(key, value)?,
            "experiment.output_dir" => self.output_dir = Some(PathBuf::from(value)),
            "kernel.kind" => self.kernel_kind = value.to_string(),
            "kernel.bandwidth" => self.bandwidth = parse_num(key, value)?,
            "kernel.degree" => self.degree = parse_num(key, value)?,
            "kernel.offset" => self.offset = parse_num(key, value)?,
            "sampling.method" => self.sampling.method = SamplingMethod::parse(value)?,
            "sampling.m" => self.sampling.m = parse_num(key, value)?,
            "sampling.lo" => self.sampling.lo = parse_list(key, value)?,
            "sampling.hi" => self.sampling.hi = parse_list(key, value)?,
            "sampling.radius" => self.sampling.radius = parse_num(key, value)?,
            "sampling.noise" => self.sampling.noise = parse_num(key, value)?,
            "sampling.dt" => self.sampling.dt = parse_num(key, value)?,
            "sampling.burn_in" => self.sampling.burn_in = parse_num(key, value)?,
            "sampling.stride" => self.sampling.stride = parse_num(key, value)?,
            "sampling.x0" => self.sampling.x0 = parse_list(key, value)?,
            "system.beta_inv" => self.params.beta_inv = parse_num(key, value)?,
            "system.gamma1" => self.params.gamma1 = parse_num(key, value)?,
            "system.well1" => self.params.well1 = parse_num(key, value)?,
            "system.gamma2" => self.params.gamma2 = parse_num(key, value)?,
            "system.well2" => self.params.well2 = parse_num(key, value)?,
            "system.reversible" => {
                self.params.reversible = match value {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(KgError::Config(format!(
                            "system.reversible must be true or false, got '{other}'"
                        )))
                    }
                }
            }
            "kde.bandwidth" => self.kde.bandwidth = parse_num(key, value)?,
            "kde.floor" => self.kde.floor = parse_num(key, value)?,
            "kde.norm_dim" => self.kde.norm_dim = parse_num(key, value)?,
            "grid.kind" => {
                self.grid.kind = match value {
                    "none" => GridKind::None,
                    "samples" => GridKind::Samples,
                    "uniform" => GridKind::Uniform,
                    other => {
                        return Err(KgError::Config(format!("unknown grid kind '{other}'")))
                    }
                }
            }
            "grid.lo" => self.grid.lo = parse_list(key, value)?,
            "grid.hi" => self.grid.hi = parse_list(key, value)?,
            "grid.points" => self.grid.points = parse_num(key, value)?,
            "cluster.k" => self.cluster_k = parse_num(key, value)?,
            "cluster.restarts" => self.cluster_restarts = parse_num(key, value)?,
            other => return Err(KgError::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| KgError::Config(format!("bad value for {key}: '{value}' ({e})")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|tok| parse_num::<f64>(key, tok.trim()))
        .collect()
}

fn parse_sections(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut section = String::new();
    for (idx, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(KgError::Config(format!(
                    "line {}: malformed section header '{line}'",
                    idx + 1
                )));
            }
            section = line[1..line.len() - 1].trim().to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            KgError::Config(format!("line {}: expected 'key = value', got '{line}'", idx + 1))
        })?;
        let full = if section.is_empty() {
            key.trim().to_string()
        } else {
            format!("{section}.{}", key.trim())
        };
        out.insert(full, value.trim().to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_minimal_config() {
        let cfg = ExperimentConfig::from_str("[experiment]\nsystem = qho\n").unwrap();
        assert_eq!(cfg.system, SystemId::Qho);
        assert_eq!(cfg.mode, Mode::Schrodinger);
        assert_eq!(cfg.sampling.m, 100);
        assert_eq!(cfg.bandwidth, 1.0);
    }

    #[test]
    fn overrides_and_comments() {
        let text = "
# quadwell with a wider kernel
[experiment]
system = quadwell
n_eigenpairs = 5
[kernel]
bandwidth = 0.75  # overridden
[sampling]
m = 1234
";
        let cfg = ExperimentConfig::from_str(text).unwrap();
        assert_eq!(cfg.system, SystemId::Quadwell);
        assert_eq!(cfg.n_eigenpairs, 5);
        assert_eq!(cfg.bandwidth, 0.75);
        assert_eq!(cfg.sampling.m, 1234);
        assert_eq!(cfg.mode, Mode::Symmetric);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = ExperimentConfig::from_str("[experiment]\nsystem = qho\nfoo = 1\n");
        assert!(err.is_err());
    }

    #[test]
    fn missing_system_rejected() {
        assert!(ExperimentConfig::from_str("[kernel]\nbandwidth = 1\n").is_err());
    }

    #[test]
    fn echo_roundtrip() {
        let text = "[experiment]\nsystem = ou\nseed = 7\n[kernel]\nbandwidth = 0.9\n";
        let cfg = ExperimentConfig::from_str(text).unwrap();
        let echoed = ExperimentConfig::from_str(&cfg.echo()).unwrap();
        assert_eq!(cfg.seed, echoed.seed);
        assert_eq!(cfg.bandwidth, echoed.bandwidth);
        assert_eq!(cfg.echo(), echoed.echo());
    }

    #[test]
    fn mode_guard_custom_nonreversible() {
        let text = "
[experiment]
system = custom
mode = symmetric
[system]
reversible = false
";
        match ExperimentConfig::from_str(text) {
            Err(KgError::Config(msg)) => assert!(msg.contains("reversible"), "{msg}"),
            other => panic!("expected config error, got {:?}", other.map(|c| c.system)),
        }
        let ok = text.replace("reversible = false", "reversible = true");
        assert!(ExperimentConfig::from_str(&ok).is_ok());
    }
}
