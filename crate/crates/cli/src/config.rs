//! Harness configuration: TOML file plus dotted `--override` assignments.
//!
//! Errors keep their source position. Override values are appended below the
//! file contents in the text used for diagnostics, so a bad override is shown
//! on its own line.

use std::path::{Path, PathBuf};

use moweight_core::env::EnvConfig;
use moweight_core::trainer::TrainerConfig;
use moweight_core::weighting::WeightVector;
use serde::de::IgnoredAny;
use serde::Deserialize;
use toml::de::{DeTable, DeValue, Deserializer};
use toml::Spanned;

use crate::failure::Failure;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "MOWEIGHT_OUT";
/// Output root used when neither `--out` nor the environment variable is set.
pub const DEFAULT_OUT_ROOT: &str = "runs";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileLayout {
    #[serde(default)]
    out: Option<String>,
    #[serde(default = "one")]
    n_seeds: u64,
    #[serde(default)]
    seed: u64,
    env: EnvConfig,
    #[allow(dead_code)]
    trainer: IgnoredAny,
    #[serde(default)]
    arms: Vec<ArmLayout>,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArmLayout {
    name: String,
    #[allow(dead_code)]
    weighting: IgnoredAny,
    #[serde(default)]
    #[allow(dead_code)]
    w0: Option<IgnoredAny>,
}

#[derive(Deserialize)]
struct TrainerOnly {
    trainer: TrainerConfig,
}

/// One named training configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Arm {
    pub name: String,
    /// Trainer settings with `seed` holding the base seed.
    pub trainer: TrainerConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HarnessConfig {
    /// Output subdirectory below the output root, from the file.
    pub out: Option<String>,
    pub n_seeds: u64,
    pub base_seed: u64,
    pub env: EnvConfig,
    pub arms: Vec<Arm>,
}

impl HarnessConfig {
    /// Seeds run for every arm: `base_seed, base_seed + 1, ...`.
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.n_seeds).map(|i| self.base_seed + i).collect()
    }

    pub fn arm(&self, name: &str) -> Option<&Arm> {
        self.arms.iter().find(|a| a.name == name)
    }

    /// Loads `path`, applies `overrides` (`dotted.key=value`) and checks every
    /// arm against the environment.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, overrides).map_err(|f| match f {
            Failure::Config(msg) => Failure::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, Failure> {
        let mut full = text.to_string();
        if !full.ends_with('\n') {
            full.push('\n');
        }
        if !overrides.is_empty() {
            full.push_str("# --override\n");
        }
        // Each override is parsed from the full text with everything before it
        // blanked out, so its spans index into `full`.
        let mut padded = Vec::with_capacity(overrides.len());
        for ov in overrides {
            let (key, value) = ov
                .split_once('=')
                .ok_or_else(|| Failure::Config(format!("override `{ov}` is not of the form key=value")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || !key.split('.').all(valid_key) {
                return Err(Failure::Config(format!("override key `{key}` is not a dotted identifier")));
            }
            let literal = format!("{key} = {value}\n");
            let quoted = format!("{key} = {}\n", toml_string(value));
            let line = if DeTable::parse(&literal).is_ok() { literal } else { quoted };
            let mut p = blank(&full);
            p.push_str(&line);
            full.push_str(&line);
            padded.push(p);
        }

        let diag = |mut e: toml::de::Error| {
            e.set_input(Some(&full));
            Failure::Config(e.to_string().trim_end().to_string())
        };
        let root = DeTable::parse(text).map_err(diag)?;
        let span = root.span();
        let mut root = root.into_inner();
        for p in &padded {
            let table = DeTable::parse(p).map_err(diag)?.into_inner();
            merge(&mut root, table);
        }

        let layout = FileLayout::deserialize(Deserializer::from(Spanned::new(span.clone(), root.clone())))
            .map_err(diag)?;
        if layout.n_seeds == 0 {
            return Err(Failure::Config("n_seeds must be >= 1".into()));
        }
        let env = layout.env.build().map_err(|e| Failure::Config(format!("[env]: {e}")))?;
        let k = env.descriptor().num_objectives();

        let trainer_table = match root.get("trainer").map(|v| v.get_ref()) {
            Some(DeValue::Table(t)) => t.clone(),
            _ => return Err(Failure::Config("[trainer] must be a table".into())),
        };
        if trainer_table.get("seed").is_some() {
            return Err(Failure::Config("set the seed at top level (`seed = N`), not in [trainer]".into()));
        }

        let mut arms = Vec::new();
        let arm_tables: Vec<DeTable> = match root.get("arms").map(|v| v.get_ref()) {
            Some(DeValue::Array(items)) => items
                .iter()
                .filter_map(|v| match v.get_ref() {
                    DeValue::Table(t) => Some(t.clone()),
                    _ => None,
                })
                .collect(),
            _ => Vec::new(),
        };
        if arm_tables.is_empty() {
            let trainer = trainer_for(&root, span.clone(), trainer_table.clone()).map_err(diag)?;
            arms.push(Arm { name: trainer.weighting.to_string(), trainer });
        } else {
            for (spec, table) in layout.arms.iter().zip(&arm_tables) {
                if !valid_name(&spec.name) {
                    return Err(Failure::Config(format!(
                        "arm name `{}` must be non-empty and use only letters, digits, '-' and '_'",
                        spec.name
                    )));
                }
                let mut merged = trainer_table.clone();
                for key in ["weighting", "w0"] {
                    if let Some((k, v)) = table.get_key_value(key) {
                        merged.insert(k.clone(), v.clone());
                    }
                }
                let trainer = trainer_for(&root, span.clone(), merged).map_err(diag)?;
                arms.push(Arm { name: spec.name.clone(), trainer });
            }
        }

        for arm in &mut arms {
            if arms_named(&layout.arms, &arm.name) > 1 {
                return Err(Failure::Config(format!("arm name `{}` is used twice", arm.name)));
            }
            arm.trainer.seed = layout.seed;
            if let Some(w0) = arm.trainer.w0.take() {
                let w = WeightVector::normalized(w0)
                    .map_err(|e| Failure::Config(format!("arm `{}`: w0: {e}", arm.name)))?;
                arm.trainer.w0 = Some(w.as_slice().to_vec());
            }
            arm.trainer
                .validate(k)
                .map_err(|e| Failure::Config(format!("arm `{}`: {e}", arm.name)))?;
            if let Some(r) = &arm.trainer.reference {
                if r.len() != k {
                    return Err(Failure::Config(format!(
                        "arm `{}`: reference has {} entries for {k} objectives",
                        arm.name,
                        r.len()
                    )));
                }
            }
        }

        Ok(HarnessConfig { out: layout.out, n_seeds: layout.n_seeds, base_seed: layout.seed, env: layout.env, arms })
    }
}

fn trainer_for<'i>(
    root: &DeTable<'i>,
    span: std::ops::Range<usize>,
    trainer: DeTable<'i>,
) -> Result<TrainerConfig, toml::de::Error> {
    let mut doc = root.clone();
    let key = root
        .get_key_value("trainer")
        .map(|(k, _)| k.clone())
        .expect("trainer section checked above");
    let value_span = root.get("trainer").map(|v| v.span()).unwrap_or(span.clone());
    doc.insert(key, Spanned::new(value_span, DeValue::Table(trainer)));
    TrainerOnly::deserialize(Deserializer::from(Spanned::new(span, doc))).map(|t| t.trainer)
}

fn arms_named(arms: &[ArmLayout], name: &str) -> usize {
    arms.iter().filter(|a| a.name == name).count()
}

/// Recursively overlays `over` onto `base`; leaves in `over` win.
fn merge<'i>(base: &mut DeTable<'i>, over: DeTable<'i>) {
    for (k, v) in over {
        let both_tables = matches!(
            (base.get(k.get_ref().as_ref()).map(|b| b.get_ref()), v.get_ref()),
            (Some(DeValue::Table(_)), DeValue::Table(_))
        );
        if both_tables {
            let existing = base.get_mut(k.get_ref().as_ref()).expect("checked");
            if let (DeValue::Table(b), DeValue::Table(o)) = (existing.get_mut(), v.into_inner()) {
                merge(b, o);
            }
        } else {
            base.insert(k, v);
        }
    }
}

/// Same byte length as `s`, with newlines kept and everything else blanked.
fn blank(s: &str) -> String {
    s.bytes().map(|b| if b == b'\n' { '\n' } else { ' ' }).collect()
}

fn valid_key(part: &str) -> bool {
    !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn valid_name(name: &str) -> bool {
    valid_key(name)
}

fn toml_string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Output root: `--out` if given, else `$MOWEIGHT_OUT/<out>` or `runs/<out>`.
pub fn resolve_out(flag: Option<&Path>, config_out: Option<&str>) -> PathBuf {
    if let Some(dir) = flag {
        return dir.to_path_buf();
    }
    let root = std::env::var_os(OUT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT));
    match config_out {
        Some(sub) => root.join(sub),
        None => root,
    }
}
