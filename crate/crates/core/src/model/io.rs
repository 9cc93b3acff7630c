//! Model persistence: `model.json` (architecture, layer table, optional
//! detection threshold) next to `model.f32` (little-endian float32
//! parameters, per layer the `(out, in, k)` weights followed by the bias).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array3};
use serde::{Deserialize, Serialize};

use super::{Conv1d, LayerInfo, ModelConfig, Network};
use crate::dataset::io::check_version;
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

const DESCRIPTOR: &str = "model.json";
const PARAMS: &str = "model.f32";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub config: ModelConfig,
    pub layers: Vec<LayerInfo>,
    pub n_parameters: usize,
    /// Score threshold for multi-echo detection, when one was selected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_threshold: Option<f64>,
}

/// Writes the network into directory `dir`, creating it if needed.
pub fn save_model(dir: &Path, net: &Network<f32>, detection_threshold: Option<f64>) -> Result<ModelFile> {
    fs::create_dir_all(dir)?;
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        config: net.config().clone(),
        layers: net.layer_table(),
        n_parameters: net.count_parameters(),
        detection_threshold,
    };
    fs::write(dir.join(DESCRIPTOR), serde_json::to_string_pretty(&file)?)?;
    let mut w = BufWriter::new(fs::File::create(dir.join(PARAMS))?);
    for layer in net.layers() {
        let conv = layer.conv();
        for v in conv.weight().iter().chain(conv.bias().iter()) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(file)
}

/// Reads a model directory. The returned network has the configuration
/// stored in the file.
pub fn load_model(dir: &Path) -> Result<(Network<f32>, ModelFile)> {
    let raw: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join(DESCRIPTOR))?)?;
    check_version(&raw, MODEL_FORMAT_VERSION)?;
    let file: ModelFile = serde_json::from_value(raw)?;
    file.config.validate()?;
    let template = Network::<f32>::zeros(file.config.clone())?;
    let expected = template.count_parameters();
    if file.n_parameters != expected {
        return Err(Error::Format(format!(
            "{DESCRIPTOR}: n_parameters is {}, configuration implies {expected}",
            file.n_parameters
        )));
    }
    let bytes = fs::read(dir.join(PARAMS))?;
    if bytes.len() != expected * 4 {
        return Err(Error::Format(format!(
            "{PARAMS}: expected {} bytes, found {}",
            expected * 4,
            bytes.len()
        )));
    }
    let mut values = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]));
    let convs = template
        .layers()
        .iter()
        .map(|layer| {
            let c = layer.conv();
            let weight = Array3::from_shape_vec(
                c.weight().raw_dim(),
                values.by_ref().take(c.weight().len()).collect(),
            )
            .map_err(|e| Error::Format(e.to_string()))?;
            let bias = Array1::from_iter(values.by_ref().take(c.bias().len()));
            Ok(Conv1d {
                weight,
                bias,
                stride: c.stride(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let net = Network::from_layers(file.config.clone(), convs)?;
    Ok((net, file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Frame;

    fn small() -> ModelConfig {
        ModelConfig {
            features: 8,
            ..Default::default()
        }
    }

    #[test]
    fn round_trip_reproduces_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let net = Network::<f32>::new(small(), 11).unwrap();
        save_model(dir.path(), &net, Some(0.25)).unwrap();
        let (back, file) = load_model(dir.path()).unwrap();
        assert_eq!(back, net);
        assert_eq!(file.detection_threshold, Some(0.25));
        let frame = Frame::mono((0..64).map(|i| (i as f32 * 0.2).sin()).collect(), 1.0).unwrap();
        assert_eq!(back.forward(&frame).unwrap(), net.forward(&frame).unwrap());
    }

    #[test]
    fn stored_configuration_wins() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ModelConfig {
            features: 4,
            contraction: 8,
            ..Default::default()
        };
        save_model(dir.path(), &Network::<f32>::new(cfg, 1).unwrap(), None).unwrap();
        let (net, file) = load_model(dir.path()).unwrap();
        assert_eq!(net.config().contraction, 8);
        assert_eq!(file.detection_threshold, None);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        save_model(dir.path(), &Network::<f32>::new(small(), 1).unwrap(), None).unwrap();
        let blob = dir.path().join(PARAMS);
        let bytes = fs::read(&blob).unwrap();
        fs::write(&blob, &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(load_model(dir.path()), Err(Error::Format(_))));

        let desc = dir.path().join(DESCRIPTOR);
        let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&desc).unwrap()).unwrap();
        v["format_version"] = serde_json::json!(7);
        fs::write(&desc, v.to_string()).unwrap();
        assert!(matches!(load_model(dir.path()), Err(Error::Version { .. })));
    }
}
