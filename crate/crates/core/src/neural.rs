//! Feedforward ReLU policy networks with a softmax head.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("network schema error: {0}")]
    Schema(String),
    #[error("dimension mismatch in layer {layer}: {detail}")]
    DimensionMismatch { layer: usize, detail: String },
    #[error("non-finite weight in layer {layer}")]
    NonFiniteWeight { layer: usize },
    #[error("unsupported activation {activation:?} in layer {layer}")]
    UnsupportedActivation { layer: usize, activation: Activation },
    #[error("io error reading network: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// Row-major `out x in`.
    pub weights: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<Vec<f64>>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>, activation: Activation) -> Self {
        Self {
            weights,
            bias: Some(bias),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn outputs(&self) -> usize {
        self.weights.len()
    }

    pub fn bias(&self, i: usize) -> f64 {
        self.bias.as_ref().map_or(0.0, |b| b[i])
    }

    /// `W x + b`, without the activation.
    pub fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias(i))
            .collect()
    }
}

/// A state with the logits the exporter observed for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub input: Vec<f64>,
    pub logits: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub inputs: usize,
    pub actions: usize,
    pub layers: Vec<Layer>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<Probe>,
}

/// A validated policy network: ReLU hidden layers, linear logit layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    inputs: usize,
    actions: usize,
    layers: Vec<Layer>,
    probes: Vec<Probe>,
}

impl Network {
    pub fn from_document(doc: NetworkDocument) -> Result<Self, NetworkError> {
        if doc.layers.is_empty() {
            return Err(NetworkError::Schema("network has no layers".into()));
        }
        if doc.actions < 2 {
            return Err(NetworkError::Schema(format!(
                "need at least 2 actions, found {}",
                doc.actions
            )));
        }
        let mut width = doc.inputs;
        let last = doc.layers.len() - 1;
        for (idx, layer) in doc.layers.iter().enumerate() {
            let number = idx + 1;
            if layer.weights.is_empty() {
                return Err(NetworkError::DimensionMismatch {
                    layer: number,
                    detail: "empty weight matrix".into(),
                });
            }
            if let Some(row) = layer.weights.iter().position(|r| r.len() != width) {
                return Err(NetworkError::DimensionMismatch {
                    layer: number,
                    detail: format!(
                        "row {row} has {} columns, expected {width}",
                        layer.weights[row].len()
                    ),
                });
            }
            if let Some(b) = &layer.bias {
                if b.len() != layer.outputs() {
                    return Err(NetworkError::DimensionMismatch {
                        layer: number,
                        detail: format!("bias has {} entries, expected {}", b.len(), layer.outputs()),
                    });
                }
            }
            let finite = layer.weights.iter().flatten().all(|v| v.is_finite())
                && layer.bias.iter().flatten().all(|v| v.is_finite());
            if !finite {
                return Err(NetworkError::NonFiniteWeight { layer: number });
            }
            let expected = if idx == last {
                Activation::Linear
            } else {
                Activation::Relu
            };
            if layer.activation != expected {
                return Err(NetworkError::UnsupportedActivation {
                    layer: number,
                    activation: layer.activation,
                });
            }
            width = layer.outputs();
        }
        if width != doc.actions {
            return Err(NetworkError::DimensionMismatch {
                layer: doc.layers.len(),
                detail: format!("output width {width} differs from action count {}", doc.actions),
            });
        }
        Ok(Self {
            inputs: doc.inputs,
            actions: doc.actions,
            layers: doc.layers,
            probes: doc.probes,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        let doc: NetworkDocument =
            serde_json::from_str(text).map_err(|e| NetworkError::Schema(e.to_string()))?;
        Self::from_document(doc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NetworkError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_document(&self) -> NetworkDocument {
        NetworkDocument {
            inputs: self.inputs,
            actions: self.actions,
            layers: self.layers.clone(),
            probes: self.probes.clone(),
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn probes(&self) -> &[Probe] {
        &self.probes
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(Layer::outputs)
            .collect()
    }

    pub fn hidden_neurons(&self) -> usize {
        self.hidden_sizes().iter().sum()
    }

    pub fn forward_logits(&self, s: &[f64]) -> Vec<f64> {
        debug_assert_eq!(s.len(), self.inputs);
        let mut z = s.to_vec();
        for layer in &self.layers {
            z = layer.affine(&z);
            if layer.activation == Activation::Relu {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        z
    }

    pub fn action_distribution(&self, s: &[f64]) -> Vec<f64> {
        softmax(&self.forward_logits(s))
    }
}

/// Softmax with max-subtraction.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Softmax probability of entry `j` alone.
pub fn softmax_at(logits: &[f64], j: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = logits.iter().map(|v| (v - max).exp()).sum();
    (logits[j] - max).exp() / total
}
