//! Dense feed-forward network with a hand-written backward pass.
//!
//! Hidden layers apply an affine map, optional layer normalization with
//! learned gain and shift, then ReLU; the output layer is purely affine.
//! Batches are row-major `(batch, features)` arrays. The backward pass
//! returns gradients in a structure mirroring the parameters plus the
//! gradient with respect to the input batch, which lets an upstream encoder
//! train jointly.

use crate::scalar::Real;
use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const LAYER_NORM_EPS: f64 = 1.0e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerNorm<F> {
    pub gain: Array1<F>,
    pub shift: Array1<F>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer<F> {
    /// Weights, shape `(fan_in, fan_out)`.
    pub w: Array2<F>,
    pub b: Array1<F>,
    pub norm: Option<LayerNorm<F>>,
    pub act: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNet<F> {
    pub layers: Vec<Layer<F>>,
}

/// Per-layer values the backward pass needs.
struct LayerCache<F> {
    /// Layer input.
    x: Array2<F>,
    /// Normalized pre-gain activations, present when the layer normalizes.
    xhat: Option<Array2<F>>,
    /// Per-row reciprocal standard deviation, present when normalizing.
    inv_std: Option<Array1<F>>,
    /// Input to the activation function.
    pre_act: Array2<F>,
}

pub struct ForwardCache<F> {
    layers: Vec<LayerCache<F>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerGrad<F> {
    pub w: Array2<F>,
    pub b: Array1<F>,
    pub norm: Option<(Array1<F>, Array1<F>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetGrad<F> {
    pub layers: Vec<LayerGrad<F>>,
}

impl<F: Real> MlpNet<F> {
    /// Builds a network with the given layer widths. Weights and biases are
    /// drawn uniformly from `(-1/sqrt(fan_in), 1/sqrt(fan_in))`; hidden
    /// layers normalize when `norm_hidden` is set.
    pub fn new(dims: &[usize], norm_hidden: bool, rng: &mut ChaCha8Rng) -> Self {
        assert!(dims.len() >= 2, "need at least input and output widths");
        assert!(dims.iter().all(|&d| d > 0), "layer widths must be positive");
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for l in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            let last = l == dims.len() - 2;
            let bound = 1.0 / (fan_in as f64).sqrt();
            let draw = |rng: &mut ChaCha8Rng| F::of_f64(rng.gen_range(-bound..bound));
            let w = Array2::from_shape_fn((fan_in, fan_out), |_| draw(rng));
            let b = Array1::from_shape_fn(fan_out, |_| draw(rng));
            let norm = (!last && norm_hidden).then(|| LayerNorm {
                gain: Array1::ones(fan_out),
                shift: Array1::zeros(fan_out),
            });
            layers.push(Layer {
                w,
                b,
                norm,
                act: if last {
                    Activation::Identity
                } else {
                    Activation::Relu
                },
            });
        }
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().w.ncols()
    }

    pub fn forward(&self, x: ArrayView2<F>) -> Array2<F> {
        let mut h = x.to_owned();
        for layer in &self.layers {
            h = layer_forward(layer, &h, false).0;
        }
        h
    }

    pub fn forward_cached(&self, x: ArrayView2<F>) -> (Array2<F>, ForwardCache<F>) {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        for layer in &self.layers {
            let x_in = h;
            let (out, parts) = layer_forward(layer, &x_in, true);
            let parts = parts.expect("cache requested");
            caches.push(LayerCache {
                x: x_in,
                xhat: parts.0,
                inv_std: parts.1,
                pre_act: parts.2,
            });
            h = out;
        }
        (h, ForwardCache { layers: caches })
    }

    /// Backpropagates `d_out` (gradient of the loss in the network output)
    /// through the cached forward pass. Returns parameter gradients and the
    /// gradient in the network input.
    pub fn backward(&self, cache: &ForwardCache<F>, d_out: Array2<F>) -> (NetGrad<F>, Array2<F>) {
        assert_eq!(cache.layers.len(), self.layers.len(), "cache/net mismatch");
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut d = d_out;
        for (layer, lc) in self.layers.iter().zip(cache.layers.iter()).rev() {
            // Activation.
            let mut dh = d;
            if layer.act == Activation::Relu {
                Zip::from(&mut dh).and(&lc.pre_act).for_each(|g, &h| {
                    if h <= F::zero() {
                        *g = F::zero();
                    }
                });
            }
            // Normalization.
            let (dz, norm_grad) = match (&layer.norm, &lc.xhat, &lc.inv_std) {
                (Some(norm), Some(xhat), Some(inv_std)) => {
                    let dgain = (&dh * xhat).sum_axis(Axis(0));
                    let dshift = dh.sum_axis(Axis(0));
                    let mut dz = &dh * &norm.gain;
                    let inv_d = F::one() / F::of_usize(dz.ncols());
                    for (i, mut row) in dz.rows_mut().into_iter().enumerate() {
                        let xr = xhat.row(i);
                        let m1 = row.sum() * inv_d;
                        let m2 = row
                            .iter()
                            .zip(xr.iter())
                            .fold(F::zero(), |acc, (&g, &xh)| acc + g * xh)
                            * inv_d;
                        Zip::from(&mut row).and(&xr).for_each(|g, &xh| {
                            *g = (*g - m1 - xh * m2) * inv_std[i];
                        });
                    }
                    (dz, Some((dgain, dshift)))
                }
                _ => (dh, None),
            };
            let dw = lc.x.t().dot(&dz);
            let db = dz.sum_axis(Axis(0));
            d = dz.dot(&layer.w.t());
            grads.push(LayerGrad {
                w: dw,
                b: db,
                norm: norm_grad,
            });
        }
        grads.reverse();
        (NetGrad { layers: grads }, d)
    }

    /// Parameter tensors in a fixed walk order (per layer: weights, bias,
    /// then gain and shift when normalizing). Gradients use the same order.
    pub fn param_tensors(&self) -> Vec<&[F]> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(l.w.as_slice().expect("standard layout"));
            out.push(l.b.as_slice().expect("standard layout"));
            if let Some(n) = &l.norm {
                out.push(n.gain.as_slice().expect("standard layout"));
                out.push(n.shift.as_slice().expect("standard layout"));
            }
        }
        out
    }

    pub fn param_tensors_mut(&mut self) -> Vec<&mut [F]> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(l.w.as_slice_mut().expect("standard layout"));
            out.push(l.b.as_slice_mut().expect("standard layout"));
            if let Some(n) = &mut l.norm {
                out.push(n.gain.as_slice_mut().expect("standard layout"));
                out.push(n.shift.as_slice_mut().expect("standard layout"));
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.param_tensors().iter().map(|t| t.len()).sum()
    }

    pub fn get_flat(&self, idx: usize) -> F {
        let mut i = idx;
        for t in self.param_tensors() {
            if i < t.len() {
                return t[i];
            }
            i -= t.len();
        }
        panic!("parameter index {idx} out of range");
    }

    pub fn add_flat(&mut self, idx: usize, delta: F) {
        let mut i = idx;
        for t in self.param_tensors_mut() {
            if i < t.len() {
                t[i] += delta;
                return;
            }
            i -= t.len();
        }
        panic!("parameter index {idx} out of range");
    }

    pub fn all_finite(&self) -> bool {
        self.param_tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }
}

impl<F: Real> NetGrad<F> {
    pub fn tensors(&self) -> Vec<&[F]> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(l.w.as_slice().expect("standard layout"));
            out.push(l.b.as_slice().expect("standard layout"));
            if let Some((g, s)) = &l.norm {
                out.push(g.as_slice().expect("standard layout"));
                out.push(s.as_slice().expect("standard layout"));
            }
        }
        out
    }

    pub fn get_flat(&self, idx: usize) -> F {
        let mut i = idx;
        for t in self.tensors() {
            if i < t.len() {
                return t[i];
            }
            i -= t.len();
        }
        panic!("gradient index {idx} out of range");
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Elementwise accumulation; shapes must match.
    pub fn accumulate(&mut self, other: &NetGrad<F>) {
        assert_eq!(self.layers.len(), other.layers.len());
        for (a, b) in self.layers.iter_mut().zip(other.layers.iter()) {
            a.w += &b.w;
            a.b += &b.b;
            match (&mut a.norm, &b.norm) {
                (Some((ag, ash)), Some((bg, bsh))) => {
                    *ag += bg;
                    *ash += bsh;
                }
                (None, None) => {}
                _ => panic!("gradient structure mismatch"),
            }
        }
    }
}

type CacheParts<F> = (Option<Array2<F>>, Option<Array1<F>>, Array2<F>);

fn layer_forward<F: Real>(
    layer: &Layer<F>,
    x: &Array2<F>,
    want_cache: bool,
) -> (Array2<F>, Option<CacheParts<F>>) {
    let mut z = x.dot(&layer.w);
    z += &layer.b;
    let mut xhat = None;
    let mut inv_std_out = None;
    let pre_act = if let Some(norm) = &layer.norm {
        let inv_d = F::one() / F::of_usize(z.ncols());
        let eps = F::of_f64(LAYER_NORM_EPS);
        let mut inv_std = Array1::zeros(z.nrows());
        for (i, mut row) in z.rows_mut().into_iter().enumerate() {
            let mean = row.sum() * inv_d;
            let var = row
                .iter()
                .fold(F::zero(), |acc, &v| acc + (v - mean) * (v - mean))
                * inv_d;
            let is = F::one() / (var + eps).sqrt();
            inv_std[i] = is;
            row.map_inplace(|v| *v = (*v - mean) * is);
        }
        // z now holds xhat.
        let mut h = &z * &norm.gain;
        h += &norm.shift;
        if want_cache {
            xhat = Some(z);
            inv_std_out = Some(inv_std);
        }
        h
    } else {
        z
    };
    if !want_cache {
        let out = match layer.act {
            Activation::Relu => pre_act.mapv(|v| v.max(F::zero())),
            Activation::Identity => pre_act,
        };
        return (out, None);
    }
    // The backward pass reads pre_act only through the ReLU mask, so the
    // identity branch can hand the buffer over instead of cloning it.
    match layer.act {
        Activation::Relu => {
            let out = pre_act.mapv(|v| v.max(F::zero()));
            (out, Some((xhat, inv_std_out, pre_act)))
        }
        Activation::Identity => (pre_act, Some((xhat, inv_std_out, Array2::zeros((0, 0))))),
    }
}
