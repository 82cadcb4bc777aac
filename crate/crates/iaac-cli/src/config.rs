//! Config files and overrides.
//!
//! Every experiment command reads one JSON file, applies `--set` overrides
//! onto the parsed tree, then deserializes into the command's config type.
//! Unknown keys are rejected during the final step, so a typo in the file
//! or in an override fails loudly instead of silently defaulting.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use iaac::actor_critic::HyperParams;
use iaac::envs::{CarFlag, Env, HeavenHell, Shopping, TabularEnv, WithStateAsInfo};
use iaac::pomdp::model_from_json;

use crate::error::CliError;

pub fn load_config<T: DeserializeOwned>(path: &Path, sets: &[String]) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut tree: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    for spec in sets {
        apply_set(&mut tree, spec)?;
    }
    serde_json::from_value(tree).map_err(|e| CliError::Config(e.to_string()))
}

/// Applies one `dotted.path=value` override. The value parses as JSON when
/// it can (numbers, bools, arrays, quoted strings) and falls back to a bare
/// string, so `--set env.name=shopping` works without inner quotes.
pub fn apply_set(root: &mut Value, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set {spec:?} is not of the form key=value")))?;
    if path.is_empty() {
        return Err(CliError::Config("--set key must not be empty".into()));
    }
    let parsed: Value =
        serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));

    let parts: Vec<&str> = path.split('.').collect();
    let mut cur = root;
    for part in &parts[..parts.len() - 1] {
        cur = match cur {
            Value::Object(map) => map
                .entry(part.to_string())
                .or_insert_with(|| Value::Object(Default::default())),
            Value::Array(items) => {
                let idx: usize = part.parse().map_err(|_| {
                    CliError::Config(format!("--set path segment {part:?} indexes into an array"))
                })?;
                items.get_mut(idx).ok_or_else(|| {
                    CliError::Config(format!("--set index {idx} is out of bounds"))
                })?
            }
            other => {
                return Err(CliError::Config(format!(
                    "--set path segment {part:?} descends into non-container value {other}"
                )))
            }
        };
    }
    let last = parts[parts.len() - 1];
    match cur {
        Value::Object(map) => {
            map.insert(last.to_string(), parsed);
        }
        Value::Array(items) => {
            let idx: usize = last.parse().map_err(|_| {
                CliError::Config(format!("--set path segment {last:?} indexes into an array"))
            })?;
            let slot = items
                .get_mut(idx)
                .ok_or_else(|| CliError::Config(format!("--set index {idx} is out of bounds")))?;
            *slot = parsed;
        }
        other => {
            return Err(CliError::Config(format!(
                "--set cannot assign into non-container value {other}"
            )))
        }
    }
    Ok(())
}

fn default_max_steps() -> usize {
    100
}

/// Which environment an experiment runs on. Named tasks carry their own
/// sizes; `instance` loads a generated model document and runs it through
/// the tabular adapter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", tag = "name")]
pub enum EnvSpec {
    HeavenHell {
        #[serde(default = "default_max_steps")]
        max_steps: usize,
    },
    Shopping {
        #[serde(default = "default_max_steps")]
        max_steps: usize,
    },
    CarFlag {
        #[serde(default = "default_max_steps")]
        max_steps: usize,
    },
    Instance {
        path: String,
        #[serde(default = "default_max_steps")]
        max_steps: usize,
    },
}

impl EnvSpec {
    pub fn build(&self) -> Result<Box<dyn Env>, CliError> {
        Ok(match self {
            EnvSpec::HeavenHell { max_steps } => Box::new(HeavenHell::new(*max_steps)),
            EnvSpec::Shopping { max_steps } => Box::new(Shopping::new(*max_steps)),
            EnvSpec::CarFlag { max_steps } => Box::new(CarFlag::new(*max_steps)),
            EnvSpec::Instance { path, max_steps } => {
                let model = load_instance(Path::new(path))?;
                Box::new(TabularEnv::new(model, *max_steps))
            }
        })
    }

    /// Short identifier used in output file names and report rows.
    pub fn id(&self) -> String {
        match self {
            EnvSpec::HeavenHell { .. } => "heaven-hell".into(),
            EnvSpec::Shopping { .. } => "shopping".into(),
            EnvSpec::CarFlag { .. } => "car-flag".into(),
            EnvSpec::Instance { path, .. } => Path::new(path)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "instance".into()),
        }
    }

    /// Benchmark-table hyperparameters for the named tasks; library
    /// defaults for generated instances.
    pub fn preset_hyper(&self) -> HyperParams {
        match self {
            EnvSpec::HeavenHell { .. } => HyperParams::heaven_hell(),
            EnvSpec::Shopping { .. } => HyperParams::shopping(),
            EnvSpec::CarFlag { .. } => HyperParams::car_flag(),
            EnvSpec::Instance { .. } => HyperParams::default(),
        }
    }

    /// The model's own discount for instance envs.
    pub fn instance_discount(&self) -> Result<Option<f64>, CliError> {
        match self {
            EnvSpec::Instance { path, .. } => {
                Ok(Some(load_instance(Path::new(path))?.discount()))
            }
            _ => Ok(None),
        }
    }
}

pub fn load_instance(path: &Path) -> Result<iaac::pomdp::InformedPomdp, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    model_from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Builds the env, optionally substituting the ground state for the
/// privileged signal.
pub fn build_env(spec: &EnvSpec, state_as_info: bool) -> Result<Box<dyn Env>, CliError> {
    let env = spec.build()?;
    if state_as_info {
        Ok(Box::new(WithStateAsInfo(BoxedEnv(env))))
    } else {
        Ok(env)
    }
}

/// Lets the wrapper own a boxed env (it is generic over `E: Env`).
pub struct BoxedEnv(pub Box<dyn Env>);

impl Env for BoxedEnv {
    fn name(&self) -> &'static str {
        self.0.name()
    }
    fn dims(&self) -> iaac::envs::EnvDims {
        self.0.dims()
    }
    fn max_steps(&self) -> usize {
        self.0.max_steps()
    }
    fn reset(&mut self, rng: &mut rand_chacha::ChaCha8Rng) -> iaac::envs::EnvPoint {
        self.0.reset(rng)
    }
    fn step(&mut self, action: usize, rng: &mut rand_chacha::ChaCha8Rng) -> iaac::envs::StepOutcome {
        self.0.step(action, rng)
    }
}

/// Merges a partial JSON object over a full default, field by field, then
/// deserializes. Lets configs override single hyperparameters while the
/// rest follow the per-environment preset.
pub fn overlay<T: Serialize + DeserializeOwned>(
    base: &T,
    patch: Option<&Value>,
) -> Result<T, CliError> {
    let mut tree = serde_json::to_value(base).map_err(|e| CliError::Runtime(e.to_string()))?;
    if let Some(Value::Object(fields)) = patch {
        let map = tree.as_object_mut().expect("base serializes to an object");
        for (k, v) in fields {
            map.insert(k.clone(), v.clone());
        }
    } else if let Some(other) = patch {
        return Err(CliError::Config(format!(
            "expected an object of overrides, got {other}"
        )));
    }
    serde_json::from_value(tree).map_err(|e| CliError::Config(e.to_string()))
}
