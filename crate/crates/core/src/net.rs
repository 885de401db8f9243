//! The smoothness-multiplier network.
//!
//! A small 1-D CNN maps the split flux to one multiplier per grid node.
//! The first (fixed) stage turns the flux into first and second central
//! differences; the learned stage is a stack of stride-1 valid
//! cross-correlations with ELU activations and a final sigmoid, so every
//! output lies strictly in (0, 1). Context comes from the caller's ghost
//! extension, which keeps the convolution itself boundary-free and
//! translation-equivariant.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{extend_with_ghosts, BoundaryPolicy};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Elu,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp_m1()
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvLayerSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub activation: Activation,
}

impl ConvLayerSpec {
    fn weight_len(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel_size
    }
}

/// One convolutional network: layer specs plus parameters.
///
/// Weights are stored row-major as `[out][in][k]`, biases one per output
/// channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvNet {
    pub layers: Vec<ConvLayerSpec>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl ConvNet {
    /// Fan-in scaled uniform weights, zero biases.
    pub fn random_init(specs: &[ConvLayerSpec], rng: &mut impl Rng) -> Result<Self> {
        let mut weights = Vec::with_capacity(specs.len());
        let mut biases = Vec::with_capacity(specs.len());
        for spec in specs {
            let fan_in = (spec.in_channels * spec.kernel_size) as f64;
            let bound = 1.0 / fan_in.sqrt();
            let w = (0..spec.weight_len())
                .map(|_| rng.gen_range(-bound..bound))
                .collect();
            weights.push(w);
            biases.push(vec![0.0; spec.out_channels]);
        }
        let net = ConvNet {
            layers: specs.to_vec(),
            weights,
            biases,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::ModelFormat("network has no layers".into()));
        }
        if self.layers.len() != self.weights.len() || self.layers.len() != self.biases.len() {
            return Err(Error::ModelFormat(
                "layer count does not match parameter tensors".into(),
            ));
        }
        let mut channels = self.layers[0].in_channels;
        for (l, spec) in self.layers.iter().enumerate() {
            if spec.kernel_size % 2 == 0 || spec.kernel_size == 0 {
                return Err(Error::ModelFormat(format!(
                    "layer {l}: kernel size {} must be odd",
                    spec.kernel_size
                )));
            }
            if spec.in_channels != channels {
                return Err(Error::ModelFormat(format!(
                    "layer {l}: expects {} input channels, previous layer provides {channels}",
                    spec.in_channels
                )));
            }
            if self.weights[l].len() != spec.weight_len() {
                return Err(Error::ModelFormat(format!(
                    "layer {l}: weight tensor has {} entries, spec requires {}",
                    self.weights[l].len(),
                    spec.weight_len()
                )));
            }
            if self.biases[l].len() != spec.out_channels {
                return Err(Error::ModelFormat(format!(
                    "layer {l}: bias length {} does not match {} output channels",
                    self.biases[l].len(),
                    spec.out_channels
                )));
            }
            if self.weights[l].iter().chain(&self.biases[l]).any(|v| !v.is_finite()) {
                return Err(Error::ModelFormat(format!("layer {l}: non-finite parameter")));
            }
            channels = spec.out_channels;
        }
        if channels != 1 {
            return Err(Error::ModelFormat(format!(
                "final layer must emit one channel, emits {channels}"
            )));
        }
        if self.layers.last().unwrap().activation != Activation::Sigmoid {
            return Err(Error::ModelFormat("final activation must be sigmoid".into()));
        }
        Ok(())
    }

    /// Half-width of the receptive field: `k = sum (kernel - 1) / 2`.
    pub fn receptive_radius(&self) -> usize {
        self.layers.iter().map(|l| (l.kernel_size - 1) / 2).sum()
    }

    /// Valid cross-correlation through every layer.
    ///
    /// Input channels must share one length `L`; the output is the single
    /// final channel of length `L - 2k`.
    pub fn forward(&self, input: &[Vec<f64>]) -> Result<Vec<f64>> {
        if input.len() != self.layers[0].in_channels {
            return Err(Error::ModelFormat(format!(
                "forward: got {} input channels, spec requires {}",
                input.len(),
                self.layers[0].in_channels
            )));
        }
        let need = 2 * self.receptive_radius() + 1;
        if input[0].len() < need {
            return Err(Error::ModelFormat(format!(
                "forward: input length {} shorter than receptive field {need}",
                input[0].len()
            )));
        }
        let mut act: Vec<Vec<f64>> = input.to_vec();
        for (l, spec) in self.layers.iter().enumerate() {
            let l_in = act[0].len();
            let l_out = l_in - (spec.kernel_size - 1);
            let mut next = vec![vec![0.0; l_out]; spec.out_channels];
            let w = &self.weights[l];
            for (co, out) in next.iter_mut().enumerate() {
                let bias = self.biases[l][co];
                for (t, o) in out.iter_mut().enumerate() {
                    let mut acc = bias;
                    for (ci, chan) in act.iter().enumerate() {
                        let wbase = (co * spec.in_channels + ci) * spec.kernel_size;
                        for k in 0..spec.kernel_size {
                            acc += w[wbase + k] * chan[t + k];
                        }
                    }
                    *o = spec.activation.apply(acc);
                }
            }
            act = next;
        }
        Ok(act.pop().unwrap())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_json(path, &StoredNet::from(self))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let stored: StoredNet = load_json(path)?;
        stored.into_net()
    }

    /// Flat views used by the optimizer: weight and bias tensors interleaved
    /// `[w0, b0, w1, b1, ...]`.
    pub fn param_tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in 0..self.layers.len() {
            out.push(self.weights[l].as_slice());
            out.push(self.biases[l].as_slice());
        }
        out
    }

    pub fn param_tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            out.push(w);
            out.push(b);
        }
        out
    }
}

/// First and second central differences of the split flux.
///
/// For an input of length `M` the outputs have length `M - 2`; entry `j`
/// belongs to input position `j + 1`.
pub fn features(split_flux: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = split_flux.len();
    let mut d1 = Vec::with_capacity(m - 2);
    let mut d2 = Vec::with_capacity(m - 2);
    for j in 1..m - 1 {
        d1.push(split_flux[j + 1] - split_flux[j - 1]);
        d2.push(split_flux[j + 1] - 2.0 * split_flux[j] + split_flux[j - 1]);
    }
    (d1, d2)
}

/// Multiplier field over the grid nodes extended by `halo` on each side.
///
/// The returned vector has length `len + 2 * halo`; entry `j` is the
/// multiplier of node `j - halo`. The input is ghost-extended so the feature
/// stage and the receptive field of the network stay inside valid data.
pub fn multiplier_field(
    net: &ConvNet,
    split_flux: &[f64],
    boundary: BoundaryPolicy,
    halo: usize,
) -> Result<Vec<f64>> {
    let k = net.receptive_radius();
    let pad = k + halo + 1;
    let padded = extend_with_ghosts(split_flux, boundary, pad);
    let (d1, d2) = features(&padded);
    let delta = net.forward(&[d1, d2])?;
    debug_assert_eq!(delta.len(), split_flux.len() + 2 * halo);
    Ok(delta)
}

/// Per-node multiplier triples `(delta_{i-1}, delta_i, delta_{i+1})`.
///
/// `delta_ext` must carry a one-node halo (as produced by
/// [`multiplier_field`] with `halo = 1`).
pub fn shift_multipliers(delta_ext: &[f64]) -> Vec<[f64; 3]> {
    (0..delta_ext.len() - 2)
        .map(|i| [delta_ext[i], delta_ext[i + 1], delta_ext[i + 2]])
        .collect()
}

/// Default architecture for the scalar problems: 2 -> 16 -> 16 -> 1 with
/// kernel width 5 everywhere.
pub fn scalar_layer_specs() -> Vec<ConvLayerSpec> {
    vec![
        ConvLayerSpec {
            in_channels: 2,
            out_channels: 16,
            kernel_size: 5,
            activation: Activation::Elu,
        },
        ConvLayerSpec {
            in_channels: 16,
            out_channels: 16,
            kernel_size: 5,
            activation: Activation::Elu,
        },
        ConvLayerSpec {
            in_channels: 16,
            out_channels: 1,
            kernel_size: 5,
            activation: Activation::Sigmoid,
        },
    ]
}

/// Default architecture for the Euler system: 2 -> 32 -> 32 -> 1 with
/// kernels (5, 5, 3), applied per characteristic field.
pub fn euler_layer_specs() -> Vec<ConvLayerSpec> {
    vec![
        ConvLayerSpec {
            in_channels: 2,
            out_channels: 32,
            kernel_size: 5,
            activation: Activation::Elu,
        },
        ConvLayerSpec {
            in_channels: 32,
            out_channels: 32,
            kernel_size: 5,
            activation: Activation::Elu,
        },
        ConvLayerSpec {
            in_channels: 32,
            out_channels: 1,
            kernel_size: 3,
            activation: Activation::Sigmoid,
        },
    ]
}

/// A trained model: one network per flux sign plus the indicator offset.
#[derive(Debug, Clone, PartialEq)]
pub struct DsModel {
    pub c: f64,
    pub pos: ConvNet,
    pub neg: ConvNet,
}

impl DsModel {
    pub fn random_init(specs: &[ConvLayerSpec], c: f64, rng: &mut impl Rng) -> Result<Self> {
        Ok(DsModel {
            c,
            pos: ConvNet::random_init(specs, rng)?,
            neg: ConvNet::random_init(specs, rng)?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let stored = StoredModel {
            format_version: MODEL_FORMAT_VERSION,
            c: self.c,
            pos: StoredNet::from(&self.pos),
            neg: StoredNet::from(&self.neg),
        };
        save_json(path, &stored)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingModel(path.to_path_buf()));
        }
        let stored: StoredModel = load_json(path)?;
        if stored.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported model format version {}",
                stored.format_version
            )));
        }
        if !stored.c.is_finite() || stored.c <= 0.0 {
            return Err(Error::ModelFormat(format!("offset C must be positive, got {}", stored.c)));
        }
        Ok(DsModel {
            c: stored.c,
            pos: stored.pos.into_net()?,
            neg: stored.neg.into_net()?,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct StoredNet {
    layers: Vec<ConvLayerSpec>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl StoredNet {
    fn from(net: &ConvNet) -> Self {
        StoredNet {
            layers: net.layers.clone(),
            weights: net.weights.clone(),
            biases: net.biases.clone(),
        }
    }

    fn into_net(self) -> Result<ConvNet> {
        let net = ConvNet {
            layers: self.layers,
            weights: self.weights,
            biases: self.biases,
        };
        net.validate()?;
        Ok(net)
    }
}

#[derive(Serialize, Deserialize)]
struct StoredModel {
    format_version: u32,
    c: f64,
    pos: StoredNet,
    neg: StoredNet,
}

fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::ModelFormat(e.to_string()))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::ModelFormat(format!("{}: {e}", path.display())))
}
