//! Experiment configuration: a TOML file, optional `key=value` overrides on
//! dotted paths, and a content hash of the resolved result.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use esa_core::envs::EnvKind;
use esa_core::esa::{Decay, EsaConfig};
use esa_core::rl::RlConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    EscDemo,
    Train,
    Ablation,
    ScanQ,
}

fn mode_key(mode: Mode) -> &'static str {
    match mode {
        Mode::EscDemo => "esc_demo",
        Mode::Train => "train",
        Mode::Ablation => "ablation",
        Mode::ScanQ => "scan_q",
    }
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::EscDemo => "esc-demo",
            Mode::Train => "train",
            Mode::Ablation => "ablation",
            Mode::ScanQ => "scan-q",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub mode: Mode,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Not part of the hash: the same experiment may be written anywhere.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub env: Option<EnvKind>,
    #[serde(default)]
    pub rl: RlConfig,
    #[serde(default)]
    pub esa: Option<EsaSettings>,
    #[serde(default)]
    pub esc_demo: EscDemoSettings,
    #[serde(default)]
    pub ablation: Option<AblationSettings>,
    #[serde(default)]
    pub scan: Option<ScanSettings>,
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}

/// ESA hyperparameters in environment-independent form; frequencies are
/// spread as `omega * (1 + i/n)` across action dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EsaSettings {
    pub k: f64,
    pub omega: f64,
    pub alpha: f64,
    #[serde(default = "no_decay")]
    pub decay: Decay,
    /// Defaults to `0.5 * 0.25 * min(action span)`.
    #[serde(default)]
    pub v_clip: Option<f64>,
    /// High-pass cutoff as a fraction of `omega`; `1/5` when absent.
    #[serde(default)]
    pub hp_ratio: Option<f64>,
    #[serde(default = "yes")]
    pub normalize_q: bool,
}

fn no_decay() -> Decay {
    Decay::None
}

fn yes() -> bool {
    true
}

impl EsaSettings {
    pub fn resolve(&self, env: EnvKind) -> EsaConfig {
        let spec = env.make().spec().clone();
        let mut cfg = EsaConfig::uniform(&spec.action_span(), self.k, self.omega, self.alpha, spec.dt, self.decay);
        if let Some(c) = self.v_clip {
            cfg.v_clip = c;
        }
        if let Some(r) = self.hp_ratio {
            cfg.hp_cutoff = Some(cfg.omega.iter().map(|w| w * r).collect());
        }
        cfg.normalize_q = self.normalize_q;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EscDemoSettings {
    pub start: Vec<f64>,
    /// Static optimum; the moving optimum travels at `velocity` from the origin.
    pub center: Vec<f64>,
    pub velocity: Vec<f64>,
    pub k: f64,
    pub dt: f64,
    pub static_omega: f64,
    pub static_alpha: f64,
    pub static_steps: usize,
    pub dynamic_omega: f64,
    pub dynamic_alpha: f64,
    pub dynamic_horizon: f64,
    pub sg_batches: Vec<usize>,
    pub sg_sigma: f64,
    pub sg_lr: f64,
    pub sg_iterations: usize,
    pub gd_lr: f64,
    pub level: f64,
}

impl Default for EscDemoSettings {
    fn default() -> Self {
        Self {
            start: vec![2.0, 2.0],
            center: vec![0.1, 0.5],
            velocity: vec![0.1, 0.5],
            k: 0.2,
            dt: 0.01,
            static_omega: 10.0 * std::f64::consts::PI,
            static_alpha: 10.0,
            static_steps: 2000,
            dynamic_omega: 40.0 * std::f64::consts::PI,
            dynamic_alpha: 80.0,
            dynamic_horizon: 10.0,
            sg_batches: vec![1, 10, 100],
            sg_sigma: 0.1,
            sg_lr: 0.1,
            sg_iterations: 200,
            gd_lr: 0.1,
            level: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    K,
    Omega,
    Decay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationSettings {
    pub param: SweepParam,
    /// Values for `k` or `omega` sweeps.
    #[serde(default)]
    pub values: Vec<f64>,
    /// Schedules for a `decay` sweep.
    #[serde(default)]
    pub decays: Vec<Decay>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSettings {
    pub checkpoint: PathBuf,
    /// Observation to scan at; a reset observation of `env` for the first seed when absent.
    #[serde(default)]
    pub state: Option<Vec<f64>>,
    /// Center of the sweep; the policy mean at the state when absent.
    #[serde(default)]
    pub a_center: Option<Vec<f64>>,
    #[serde(default)]
    pub dim: usize,
    pub half_width: f64,
    pub steps: usize,
    /// In radians per sweep step.
    pub hp_cutoff: f64,
}

impl ExperimentConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text, overrides).with_context(|| format!("in config {}", path.display()))
    }

    /// Load for a given subcommand: the file's `mode` must agree with it or be absent.
    pub fn load_for(path: &Path, mode: Mode, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut all = vec![format!("mode=\"{}\"", mode_key(mode))];
        all.extend_from_slice(overrides);
        if let Some(found) = text.parse::<toml::Table>().ok().and_then(|t| t.get("mode").cloned()) {
            if found.as_str() != Some(mode_key(mode)) {
                bail!("config {} has mode {found}, not {}", path.display(), mode.name());
            }
        }
        Self::from_toml(&text, &all).with_context(|| format!("in config {}", path.display()))
    }

    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().context("config is not valid TOML")?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: ExperimentConfig = toml::Value::Table(table).try_into().context("config does not match the schema")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            bail!("seeds must be non-empty");
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            bail!("name must be a non-empty plain word");
        }
        self.rl.validate()?;
        let needs_env = matches!(self.mode, Mode::Train | Mode::Ablation | Mode::ScanQ);
        if needs_env && self.env.is_none() {
            bail!("mode {} needs an `env`", self.mode.name());
        }
        if let (Some(esa), Some(env)) = (&self.esa, self.env) {
            esa.resolve(env).validate()?;
        }
        match self.mode {
            Mode::EscDemo => {
                let d = &self.esc_demo;
                let n = d.start.len();
                if n == 0 || d.center.len() != n || d.velocity.len() != n {
                    bail!("esc_demo start, center and velocity must share a non-zero length");
                }
                if d.sg_batches.is_empty() || d.sg_batches.contains(&0) {
                    bail!("esc_demo.sg_batches must be non-empty and positive");
                }
                for (name, x) in [("k", d.k), ("dt", d.dt), ("sg_sigma", d.sg_sigma), ("level", d.level)] {
                    if !(x > 0.0 && x.is_finite()) {
                        bail!("esc_demo.{name} must be > 0");
                    }
                }
            }
            Mode::Train => {
                if self.esa.is_none() {
                    bail!("train mode compares against ESA and needs an [esa] table");
                }
            }
            Mode::Ablation => {
                let a = self.ablation.as_ref().context("ablation mode needs an [ablation] table")?;
                if self.esa.is_none() {
                    bail!("ablation mode needs an [esa] table for the fixed hyperparameters");
                }
                let empty = match a.param {
                    SweepParam::K | SweepParam::Omega => a.values.is_empty(),
                    SweepParam::Decay => a.decays.is_empty(),
                };
                if empty {
                    bail!("ablation sweep has no settings");
                }
            }
            Mode::ScanQ => {
                let s = self.scan.as_ref().context("scan-q mode needs a [scan] table")?;
                if s.steps < 2 || !(s.half_width > 0.0) || !(s.hp_cutoff > 0.0) {
                    bail!("scan needs steps >= 2, half_width > 0 and hp_cutoff > 0");
                }
            }
        }
        Ok(())
    }

    /// sha256 over the canonical JSON form of everything except `out_dir`.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = None;
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Set `a.b.c=value` inside `table`. The value is read as a TOML literal,
/// and as a bare string when that fails.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec.split_once('=').with_context(|| format!("override {spec:?} is not key=value"))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        bail!("override key {path:?} is malformed");
    }
    let value = parse_value(raw.trim());
    let mut cur = table;
    for k in &keys[..keys.len() - 1] {
        let entry = cur.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => bail!("override path {path:?} crosses a non-table value at {k:?}"),
        };
    }
    cur.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Parse `--seed-list 0,1,2` or ranges like `0-4`.
pub fn parse_seed_list(s: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once('-') {
            let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
            if b < a {
                bail!("seed range {part:?} is decreasing");
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().with_context(|| format!("bad seed {part:?}"))?);
        }
    }
    if out.is_empty() {
        bail!("seed list is empty");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRAIN: &str = r#"
name = "t"
mode = "train"
env = "pendulum"
seeds = [1, 2]

[rl]
total_steps = 4096

[esa]
k = 0.2
omega = 31.41592653589793
alpha = 1.0
"#;

    #[test]
    fn parses_and_hashes_stably() {
        let a = ExperimentConfig::from_toml(TRAIN, &[]).unwrap();
        let b = ExperimentConfig::from_toml(TRAIN, &[]).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        assert_eq!(a.rl.total_steps, 4096);
        assert_eq!(a.rl.minibatch, 64);
    }

    #[test]
    fn overrides_change_values_and_hash() {
        let base = ExperimentConfig::from_toml(TRAIN, &[]).unwrap();
        let o = ExperimentConfig::from_toml(TRAIN, &["rl.policy_lr=0.002".into(), "esa.decay={kind=\"linear\", end_iter=10}".into()]).unwrap();
        assert_eq!(o.rl.policy_lr, 0.002);
        assert_eq!(o.esa.as_ref().unwrap().decay, Decay::Linear { end_iter: 10 });
        assert_ne!(base.hash(), o.hash());
    }

    #[test]
    fn out_dir_is_not_hashed() {
        let a = ExperimentConfig::from_toml(TRAIN, &["out_dir=a".into()]).unwrap();
        let b = ExperimentConfig::from_toml(TRAIN, &["out_dir=b".into()]).unwrap();
        assert_eq!(a.hash(), b.hash());
    }

    #[test]
    fn malformed_configs_are_rejected() {
        assert!(ExperimentConfig::from_toml("name = ", &[]).is_err());
        assert!(ExperimentConfig::from_toml(&format!("{TRAIN}\nbogus = 1"), &[]).is_err());
        assert!(ExperimentConfig::from_toml(TRAIN, &["seeds=[]".into()]).is_err());
        assert!(ExperimentConfig::from_toml(TRAIN, &["rl.clip=2.0".into()]).is_err());
        assert!(ExperimentConfig::from_toml(TRAIN, &["noequals".into()]).is_err());
    }

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seed_list("0,3, 5").unwrap(), vec![0, 3, 5]);
        assert_eq!(parse_seed_list("2-4").unwrap(), vec![2, 3, 4]);
        assert!(parse_seed_list("").is_err());
        assert!(parse_seed_list("4-2").is_err());
    }
}
