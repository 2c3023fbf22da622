use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Shape of a fully connected ReLU network with a sin/cos input encoding.
///
/// `depth` counts linear layers, the last of which is the identity-activated
/// output layer. With `residual`, consecutive pairs of hidden `width -> width`
/// layers form blocks `h' = relu(h + W2 relu(W1 h + b1) + b2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub freqs: usize,
    pub width: usize,
    pub depth: usize,
    pub output_dim: usize,
    pub residual: bool,
}

impl MlpSpec {
    /// Width of the encoded input: the raw values followed by
    /// `sin(2^k π x)` and `cos(2^k π x)` for `k < freqs`.
    pub fn encoded_dim(&self) -> usize {
        self.input_dim * (1 + 2 * self.freqs)
    }

    /// `(fan_in, fan_out)` per linear layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let enc = self.encoded_dim();
        if self.depth == 1 {
            return vec![(enc, self.output_dim)];
        }
        let mut dims = vec![(enc, self.width)];
        dims.extend(std::iter::repeat_n((self.width, self.width), self.depth - 2));
        dims.push((self.width, self.output_dim));
        dims
    }

    /// Index of the layer whose input is added before the activation of
    /// `layer`, if `layer` closes a residual block.
    pub fn skip_source(&self, layer: usize) -> Option<usize> {
        if !self.residual || layer < 2 || layer + 1 >= self.depth {
            return None;
        }
        // Hidden square layers are 1..depth-1; blocks are (1,2), (3,4), ...
        let hidden_pairs = (self.depth - 2) / 2;
        (layer.is_multiple_of(2) && layer / 2 <= hidden_pairs).then(|| layer - 1)
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.depth == 0 {
            return Err(Error::invalid(format!("degenerate network shape {self:?}")));
        }
        if self.depth > 1 && self.width == 0 {
            return Err(Error::invalid("hidden width must be positive"));
        }
        Ok(())
    }
}

/// Writes the encoding of `x` into `out` (length `input_dim * (1 + 2 freqs)`).
pub fn encode_into(x: &[f64], freqs: usize, out: &mut [f64]) {
    let n = x.len();
    out[..n].copy_from_slice(x);
    let mut scale = std::f64::consts::PI;
    for k in 0..freqs {
        let base = n * (1 + 2 * k);
        for (i, &xi) in x.iter().enumerate() {
            let (s, c) = (scale * xi).sin_cos();
            out[base + i] = s;
            out[base + n + i] = c;
        }
        scale *= 2.0;
    }
}

/// Network parameters stored flat: per layer the `fan_out x fan_in`
/// row-major weight matrix followed by the bias vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub params: Vec<f64>,
}

/// Activations kept from a forward pass for backpropagation.
pub struct Tape {
    /// `acts[0]` is the encoded input and `acts[l + 1]` the output of layer `l`.
    acts: Vec<Array2<f64>>,
}

impl Tape {
    pub fn output(&self) -> &Array2<f64> {
        self.acts.last().expect("tape always holds the input")
    }
}

impl Mlp {
    pub fn zeros(spec: MlpSpec) -> Result<Mlp> {
        spec.validate()?;
        Ok(Mlp {
            spec,
            params: vec![0.0; spec.param_count()],
        })
    }

    /// He-uniform weights scaled by `output_gain` on the last layer, zero biases.
    pub fn init(spec: MlpSpec, output_gain: f64, rng: &mut ChaCha8Rng) -> Result<Mlp> {
        let mut m = Mlp::zeros(spec)?;
        let dims = spec.layer_dims();
        let mut off = 0;
        for (l, &(fan_in, fan_out)) in dims.iter().enumerate() {
            let mut bound = (6.0 / fan_in as f64).sqrt();
            if l + 1 == dims.len() {
                bound *= output_gain;
            }
            for w in &mut m.params[off..off + fan_in * fan_out] {
                *w = rng.gen_range(-bound..=bound);
            }
            off += fan_in * fan_out + fan_out;
        }
        Ok(m)
    }

    /// Offsets of each layer's weights and biases in `params`.
    pub fn layer_offsets(&self) -> Vec<(usize, usize)> {
        let mut off = 0;
        self.spec
            .layer_dims()
            .iter()
            .map(|&(i, o)| {
                let w = off;
                off += i * o + o;
                (w, w + i * o)
            })
            .collect()
    }

    fn weight(
        &self,
        l: usize,
        dims: (usize, usize),
        off: (usize, usize),
    ) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let (fan_in, fan_out) = dims;
        let w = ArrayView2::from_shape((fan_out, fan_in), &self.params[off.0..off.1])
            .unwrap_or_else(|_| panic!("layer {l} weight shape"));
        let b = ArrayView1::from(&self.params[off.1..off.1 + fan_out]);
        (w, b)
    }

    /// Encodes a batch of raw inputs (`n x input_dim`).
    pub fn encode_batch(&self, raw: &Array2<f64>) -> Array2<f64> {
        let enc_dim = self.spec.encoded_dim();
        let mut enc = Array2::zeros((raw.nrows(), enc_dim));
        for (row, mut out) in raw.outer_iter().zip(enc.outer_iter_mut()) {
            let x: Vec<f64> = row.to_vec();
            encode_into(&x, self.spec.freqs, out.as_slice_mut().expect("standard layout"));
        }
        enc
    }

    /// Batched forward pass keeping every activation.
    pub fn forward_tape(&self, raw: &Array2<f64>) -> Tape {
        let dims = self.spec.layer_dims();
        let offs = self.layer_offsets();
        let mut acts = Vec::with_capacity(dims.len() + 1);
        acts.push(self.encode_batch(raw));
        for l in 0..dims.len() {
            let (w, b) = self.weight(l, dims[l], offs[l]);
            let mut z = acts[l].dot(&w.t());
            z += &b;
            if l + 1 < dims.len() {
                if let Some(src) = self.spec.skip_source(l) {
                    z += &acts[src];
                }
                z.mapv_inplace(|v| v.max(0.0));
            }
            acts.push(z);
        }
        Tape { acts }
    }

    pub fn forward(&self, raw: &Array2<f64>) -> Array2<f64> {
        let mut tape = self.forward_tape(raw);
        tape.acts.pop().expect("output layer")
    }

    /// Accumulates into `grads` (same layout as `params`) the gradient of a
    /// scalar whose derivative with respect to the network output is `d_out`.
    pub fn backward(&self, tape: &Tape, d_out: Array2<f64>, grads: &mut [f64]) {
        let dims = self.spec.layer_dims();
        let offs = self.layer_offsets();
        let n_layers = dims.len();
        let mut upstream: Vec<Option<Array2<f64>>> = vec![None; n_layers + 1];
        upstream[n_layers] = Some(d_out);
        for l in (0..n_layers).rev() {
            let Some(mut dz) = upstream[l + 1].take() else {
                continue;
            };
            if l + 1 < n_layers {
                let a = &tape.acts[l + 1];
                dz.zip_mut_with(a, |g, &v| {
                    if v <= 0.0 {
                        *g = 0.0;
                    }
                });
                if let Some(src) = self.spec.skip_source(l) {
                    add_into(&mut upstream[src], &dz);
                }
            }
            let (fan_in, fan_out) = dims[l];
            let (w_off, b_off) = offs[l];
            let dw = dz.t().dot(&tape.acts[l]);
            for (g, d) in grads[w_off..w_off + fan_in * fan_out].iter_mut().zip(dw.iter()) {
                *g += d;
            }
            for (g, d) in grads[b_off..b_off + fan_out]
                .iter_mut()
                .zip(dz.sum_axis(Axis(0)).iter())
            {
                *g += d;
            }
            if l > 0 {
                let (w, _) = self.weight(l, dims[l], offs[l]);
                let dh = dz.dot(&w);
                add_into(&mut upstream[l], &dh);
            }
        }
    }

    /// Single-input forward pass written with plain loops; used as an
    /// independent check of the batched path.
    pub fn forward_scalar(&self, x: &[f64]) -> Vec<f64> {
        let dims = self.spec.layer_dims();
        let offs = self.layer_offsets();
        let mut h = vec![0.0; self.spec.encoded_dim()];
        encode_into(x, self.spec.freqs, &mut h);
        let mut inputs: Vec<Vec<f64>> = Vec::new();
        for (l, &(fan_in, fan_out)) in dims.iter().enumerate() {
            let (w_off, b_off) = offs[l];
            let mut z = vec![0.0; fan_out];
            for (o, zo) in z.iter_mut().enumerate() {
                let mut acc = self.params[b_off + o];
                for i in 0..fan_in {
                    acc += self.params[w_off + o * fan_in + i] * h[i];
                }
                *zo = acc;
            }
            inputs.push(h);
            if l + 1 < dims.len() {
                if let Some(src) = self.spec.skip_source(l) {
                    for (zo, s) in z.iter_mut().zip(&inputs[src]) {
                        *zo += s;
                    }
                }
                for zo in z.iter_mut() {
                    *zo = zo.max(0.0);
                }
            }
            h = z;
        }
        h
    }
}

fn add_into(slot: &mut Option<Array2<f64>>, g: &Array2<f64>) {
    match slot {
        Some(acc) => *acc += g,
        None => *slot = Some(g.clone()),
    }
}
