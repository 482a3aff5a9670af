//! Model files: either a full model or a gallery template with parameters.

use std::path::Path;

use quake_limit::gallery::{
    canonical_model, inchworm_params, make_crawler, make_planar, make_play, make_rheological, CrawlerParams, PlanarParams, PlayParams,
    RheologicalParams,
};
use quake_limit::ModelSpec64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default)]
    pub template: Option<String>,
    #[serde(default)]
    pub params: Option<Value>,
    #[serde(default)]
    pub model: Option<ModelSpec64>,
    #[serde(default)]
    pub initial_position: Option<Vec<f64>>,
    #[serde(default)]
    pub initial_velocity: Option<Vec<f64>>,
    /// Defaults for the numerical flags.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub eps: Option<Vec<f64>>,
}

/// A resolved model with its initial data.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub file: ModelFile,
    pub model: ModelSpec64,
    pub x0: Vec<f64>,
    pub x1: Vec<f64>,
    pub bytes: Vec<u8>,
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    let file: ModelFile =
        serde_json::from_slice(&bytes).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let model = resolve(&file)?;
    let n = model.dimension;
    let x0 = file.initial_position.clone().unwrap_or_else(|| default_position(&file, n));
    let x1 = file.initial_velocity.clone().unwrap_or_else(|| vec![0.0; n]);
    if x0.len() != n || x1.len() != n {
        return Err(CliError::Validation(format!("initial data must have {n} components")));
    }
    Ok(Loaded { file, model, x0, x1, bytes })
}

fn default_position(file: &ModelFile, n: usize) -> Vec<f64> {
    match file.template.as_deref() {
        Some("inchworm") => quake_limit::gallery::inchworm_start(),
        _ => vec![0.0; n],
    }
}

fn params<T: serde::de::DeserializeOwned>(file: &ModelFile, template: &str) -> Result<T, CliError> {
    let value = file.params.clone().unwrap_or(Value::Object(Default::default()));
    serde_json::from_value(value).map_err(|e| CliError::Parse(format!("parameters of template '{template}': {e}")))
}

pub fn resolve(file: &ModelFile) -> Result<ModelSpec64, CliError> {
    match (&file.template, &file.model) {
        (Some(_), Some(_)) => Err(CliError::Parse("give either 'template' or 'model', not both".into())),
        (None, None) => Err(CliError::Parse("model file needs a 'template' or a 'model' entry".into())),
        (None, Some(m)) => Ok(m.clone()),
        (Some(t), None) => {
            let spec = match t.as_str() {
                "play" => make_play(&params::<PlayParams<f64>>(file, t)?),
                "crawler" => make_crawler(&params::<CrawlerParams<f64>>(file, t)?),
                "inchworm" => make_crawler(&inchworm_params()),
                "rheological" => make_rheological(&params::<RheologicalParams<f64>>(file, t)?),
                "planar" => make_planar(&params::<PlanarParams<f64>>(file, t)?),
                "canonical" => {
                    #[derive(Deserialize)]
                    #[serde(deny_unknown_fields)]
                    struct Canonical {
                        #[serde(default = "one")]
                        horizon: f64,
                    }
                    fn one() -> f64 {
                        1.0
                    }
                    Ok(canonical_model(params::<Canonical>(file, t)?.horizon))
                }
                other => return Err(CliError::Parse(format!("unknown template '{other}'"))),
            };
            spec.map_err(CliError::from)
        }
    }
}
