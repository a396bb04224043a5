//! Named models built from `model.id` and `model.params.*`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::zoo::{
    cucker_smale, curie_weiss, dorsogna, model_bounded_sin, model_cubic, model_linear_meanfield,
};
use super::CoefficientModel;
use crate::error::{Error, Result};

/// Registry entry: model id, accepted keys and their defaults (`None` means
/// required).
const REGISTRY: &[(&str, &[(&str, Option<f64>)])] = &[
    ("cubic", &[("p", Some(2.0))]),
    ("linear_meanfield", &[("a", None), ("c", None), ("s", None)]),
    (
        "curie_weiss",
        &[("beta", Some(1.0)), ("k", Some(1.0)), ("noise_scale", Some(1.0))],
    ),
    (
        "cucker_smale",
        &[("beta", Some(0.5)), ("dim", Some(1.0)), ("confinement", Some(1.0))],
    ),
    (
        "dorsogna",
        &[
            ("c1", Some(1.0)),
            ("c2", Some(0.5)),
            ("l1", Some(1.0)),
            ("l2", Some(0.5)),
            ("dim", Some(1.0)),
        ],
    ),
    ("bounded_sin", &[("amplitude", Some(1.0))]),
];

/// Serializable model selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub id: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl ModelSpec {
    pub fn new(id: impl Into<String>) -> Self {
        ModelSpec {
            id: id.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    /// Known model ids.
    pub fn ids() -> impl Iterator<Item = &'static str> {
        REGISTRY.iter().map(|(id, _)| *id)
    }

    /// Builds the model. Unknown ids and unknown parameter keys are errors;
    /// `kappa` is accepted by every model and overrides its default.
    pub fn build(&self) -> Result<CoefficientModel> {
        let (_, keys) = REGISTRY
            .iter()
            .find(|(id, _)| *id == self.id)
            .ok_or_else(|| Error::UnknownModel(self.id.clone()))?;
        for key in self.params.keys() {
            if key != "kappa" && !keys.iter().any(|(k, _)| k == key) {
                return Err(Error::param(
                    format!("model.params.{key}"),
                    format!("unknown parameter for model '{}'", self.id),
                ));
            }
        }
        let get = |key: &str| -> Result<f64> {
            let default = keys.iter().find(|(k, _)| *k == key).and_then(|(_, d)| *d);
            self.params
                .get(key)
                .copied()
                .or(default)
                .ok_or_else(|| Error::param(format!("model.params.{key}"), "required"))
        };
        let dim = |key: &str| -> Result<usize> {
            let v = get(key)?;
            if v >= 1.0 && v.fract() == 0.0 && v <= 64.0 {
                Ok(v as usize)
            } else {
                Err(Error::param(key, "must be an integer in 1..=64"))
            }
        };
        let model = match self.id.as_str() {
            "cubic" => model_cubic(get("p")?)?,
            "linear_meanfield" => model_linear_meanfield(get("a")?, get("c")?, get("s")?),
            "curie_weiss" => curie_weiss(get("beta")?, get("k")?, get("noise_scale")?),
            "cucker_smale" => cucker_smale(get("beta")?, dim("dim")?, get("confinement")?)?,
            "dorsogna" => dorsogna(get("c1")?, get("c2")?, get("l1")?, get("l2")?, dim("dim")?)?,
            "bounded_sin" => {
                let amp = get("amplitude")?;
                model_bounded_sin(Arc::new(move |x, z| amp * (z - x).tanh()), amp.abs())?
                    .with_params([("amplitude", amp)])
            }
            _ => unreachable!("registry and builder disagree"),
        };
        match self.params.get("kappa") {
            Some(&k) if !(k >= 2.0) => Err(Error::param("kappa", "must be >= 2")),
            Some(&k) => Ok(model.with_kappa(k)),
            None => Ok(model),
        }
    }
}
