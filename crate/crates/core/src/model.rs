//! Model JSON: the fitted transform with every float written as a decimal
//! with 17 significant digits.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifting::{FittedTransform, LevelRecord, Predictor};
use crate::types::{IndexWindow, TransformConfig};

pub const MODEL_FORMAT: &str = "disclift-model";
pub const MODEL_VERSION: u32 = 1;

/// JSON formatter that prints `f64` as `d.dddddddddddddddde±x`.
#[derive(Debug, Default, Clone, Copy)]
pub struct SignificantDigits;

impl serde_json::ser::Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{:.16e}", f64::from(value))
    }
}

/// Serializes any value with [`SignificantDigits`] floats.
pub fn to_json_17<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SignificantDigits);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    signal_length: usize,
    config: TransformConfig,
    effective_levels: usize,
    /// Column names of the merged coefficient vector, in order.
    layout: Vec<String>,
    levels: Vec<LevelFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LevelFile {
    level: usize,
    predictors: Vec<PredictorFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PredictorFile {
    k: usize,
    /// 1-based coarse positions of the window.
    indices: Vec<usize>,
    weights: Vec<f64>,
    gamma: f64,
}

pub fn model_to_json(transform: &FittedTransform) -> Result<String> {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        signal_length: transform.signal_length,
        config: transform.config.clone(),
        effective_levels: transform.effective_levels(),
        layout: transform.layout().iter().map(|c| c.name()).collect(),
        levels: transform
            .levels
            .iter()
            .map(|l| LevelFile {
                level: l.level,
                predictors: l
                    .predictors
                    .iter()
                    .map(|p| PredictorFile {
                        k: p.k(),
                        indices: p.window.indices().collect(),
                        weights: p.weights.clone(),
                        gamma: p.gamma,
                    })
                    .collect(),
            })
            .collect(),
    };
    to_json_17(&file)
}

pub fn model_from_json(text: &str) -> Result<FittedTransform> {
    let file: ModelFile = serde_json::from_str(text)?;
    if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
        return Err(Error::data(format!(
            "unsupported model format {} v{}",
            file.format, file.version
        )));
    }
    if file.effective_levels != file.levels.len() {
        return Err(Error::data("effective_levels disagrees with the level list"));
    }
    let mut levels = Vec::with_capacity(file.levels.len());
    for l in file.levels {
        let mut predictors = Vec::with_capacity(l.predictors.len());
        for p in l.predictors {
            let contiguous = p.indices.windows(2).all(|w| w[1] == w[0] + 1);
            if p.indices.is_empty() || !contiguous || p.indices[0] == 0 {
                return Err(Error::data(format!(
                    "level {}, k = {}: window indices must be contiguous and 1-based",
                    l.level, p.k
                )));
            }
            predictors.push(Predictor {
                window: IndexWindow {
                    k: p.k,
                    start: p.indices[0],
                    len: p.indices.len(),
                },
                weights: p.weights,
                gamma: p.gamma,
            });
        }
        levels.push(LevelRecord {
            level: l.level,
            predictors,
        });
    }
    let transform = FittedTransform {
        config: file.config,
        signal_length: file.signal_length,
        levels,
    };
    transform.validate()?;
    Ok(transform)
}

pub fn save_model(transform: &FittedTransform, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, model_to_json(transform)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<FittedTransform> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Load {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    model_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{generate_waveform, WaveformSpec};
    use crate::lifting::fit;
    use crate::types::Variant;

    #[test]
    fn float_format() {
        assert_eq!(to_json_17(&0.1).unwrap(), "1.0000000000000001e-1");
        assert_eq!(to_json_17(&-2.0).unwrap(), "-2.0000000000000000e0");
        let back: f64 = serde_json::from_str(&to_json_17(&(1.0 / 3.0)).unwrap()).unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn model_round_trip_is_exact() {
        let ds = generate_waveform(&WaveformSpec {
            per_class_count: 15,
            seed: 4,
        })
        .unwrap()
        .pair(1, 2)
        .unwrap();
        for variant in [Variant::Regularised, Variant::NonRegularised] {
            let cfg = TransformConfig {
                variant,
                ..Default::default()
            };
            let (t, _) = fit(&ds, &cfg).unwrap();
            let json = model_to_json(&t).unwrap();
            assert_eq!(model_from_json(&json).unwrap(), t);
            let v: serde_json::Value = serde_json::from_str(&json).unwrap();
            assert_eq!(v["effective_levels"], 3);
            assert_eq!(
                v["levels"][0]["predictors"][3]["indices"],
                serde_json::json!([3, 4, 5, 6])
            );
            assert_eq!(v["layout"][0], "c3_1");
        }
    }

    #[test]
    fn malformed_models_rejected() {
        let ds = generate_waveform(&WaveformSpec {
            per_class_count: 5,
            seed: 4,
        })
        .unwrap()
        .pair(1, 3)
        .unwrap();
        let (t, _) = fit(
            &ds,
            &TransformConfig {
                levels: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&model_to_json(&t).unwrap()).unwrap();
        v["levels"][0]["predictors"].as_array_mut().unwrap().pop();
        assert!(model_from_json(&v.to_string()).is_err());
        assert!(model_from_json("{}").is_err());
    }
}
