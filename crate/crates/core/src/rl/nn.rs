//! Fully connected ReLU network with manual backpropagation and Adam.

use rand::Rng;
use sha2::{Digest, Sha256};

use super::RlError;

const MAGIC: &[u8; 8] = b"GARLQNET";
const FORMAT_VERSION: u32 = 1;

/// Multilayer perceptron; hidden layers use ReLU, the output is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    /// Row-major `[out][in]` weight matrices.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Gradient buffers shaped like an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Grads {
    pub fn scale(&mut self, k: f64) {
        for v in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            v.iter_mut().for_each(|x| *x *= k);
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

impl Mlp {
    /// Uniform init in ±1/sqrt(fan_in).
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need input and output layer");
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            weights.push((0..fan_in * fan_out).map(|_| rng.random_range(-bound..bound)).collect());
            biases.push((0..fan_out).map(|_| rng.random_range(-bound..bound)).collect());
        }
        Mlp {
            sizes: sizes.to_vec(),
            weights,
            biases,
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("non-empty")
    }

    pub fn zero_grads(&self) -> Grads {
        Grads {
            weights: self.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    fn layer(&self, l: usize, input: &[f64], relu: bool) -> Vec<f64> {
        let n_in = self.sizes[l];
        let w = &self.weights[l];
        self.biases[l]
            .iter()
            .enumerate()
            .map(|(o, b)| {
                let row = &w[o * n_in..(o + 1) * n_in];
                let z = b + row.iter().zip(input).map(|(a, x)| a * x).sum::<f64>();
                if relu {
                    z.max(0.0)
                } else {
                    z
                }
            })
            .collect()
    }

    /// Activations of every layer, input first.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n = self.weights.len();
        let mut acts = Vec::with_capacity(n + 1);
        acts.push(x.to_vec());
        for l in 0..n {
            let next = self.layer(l, &acts[l], l + 1 < n);
            acts.push(next);
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.activations(x).pop().expect("output layer")
    }

    /// Adds d(grad_out · output)/dθ at input `x` into `grads`.
    pub fn backward(&self, x: &[f64], grad_out: &[f64], grads: &mut Grads) {
        self.backward_with(x, |_| grad_out.to_vec(), grads);
    }

    /// Forward pass, then backpropagates the output gradient chosen by
    /// `grad_of` from the network output. Returns the output.
    pub fn backward_with(&self, x: &[f64], grad_of: impl FnOnce(&[f64]) -> Vec<f64>, grads: &mut Grads) -> Vec<f64> {
        let acts = self.activations(x);
        let output = acts.last().expect("output layer").clone();
        let mut delta = grad_of(&output);
        for l in (0..self.weights.len()).rev() {
            let n_in = self.sizes[l];
            let input = &acts[l];
            let gw = &mut grads.weights[l];
            for (o, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                grads.biases[l][o] += d;
                for (g, a) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(input) {
                    *g += d * a;
                }
            }
            if l > 0 {
                let w = &self.weights[l];
                let mut prev = vec![0.0; n_in];
                for (o, d) in delta.iter().enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    for (p, a) in prev.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                        *p += d * a;
                    }
                }
                for (p, a) in prev.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        output
    }

    /// Parameters flattened layer by layer (weights, then biases).
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        let mut it = flat.iter().copied();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            w.iter_mut().chain(b.iter_mut()).for_each(|x| *x = it.next().expect("parameter count"));
        }
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(Vec::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|x| x.is_finite())
    }

    /// Versioned binary form: magic, version, layer sizes, little-endian f64s.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 4 * self.sizes.len() + 8 * self.param_count());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.sizes.len() as u32).to_le_bytes());
        for s in &self.sizes {
            out.extend_from_slice(&(*s as u32).to_le_bytes());
        }
        for p in self.params() {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, RlError> {
        let bad = |m: &str| RlError::Weights(m.to_string());
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8], RlError> {
            let s = bytes.get(pos..pos + n).ok_or_else(|| bad("truncated weights file"))?;
            pos += n;
            Ok(s)
        };
        if take(8)? != MAGIC {
            return Err(bad("not a weights file"));
        }
        let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().expect("4 bytes"));
        let version = u32_at(take(4)?);
        if version != FORMAT_VERSION {
            return Err(RlError::Weights(format!("unsupported weights version {version}")));
        }
        let n = u32_at(take(4)?) as usize;
        if !(2..=16).contains(&n) {
            return Err(bad("bad layer count"));
        }
        let mut sizes = Vec::with_capacity(n);
        for _ in 0..n {
            let s = u32_at(take(4)?) as usize;
            if s == 0 || s > 1 << 16 {
                return Err(bad("bad layer size"));
            }
            sizes.push(s);
        }
        let count: usize = sizes.windows(2).map(|p| p[0] * p[1] + p[1]).sum();
        let mut flat = Vec::with_capacity(count);
        for _ in 0..count {
            flat.push(f64::from_le_bytes(take(8)?.try_into().expect("8 bytes")));
        }
        if pos != bytes.len() {
            return Err(bad("trailing bytes in weights file"));
        }
        let mut net = Mlp {
            weights: sizes.windows(2).map(|p| vec![0.0; p[0] * p[1]]).collect(),
            biases: sizes.windows(2).map(|p| vec![0.0; p[1]]).collect(),
            sizes,
        };
        net.set_params(&flat);
        if !net.is_finite() {
            return Err(bad("non-finite weights"));
        }
        Ok(net)
    }

    /// SHA-256 of the binary form.
    pub fn checksum(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        let n = net.param_count();
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    /// Gradient-descent step on `net`.
    pub fn step(&mut self, net: &mut Mlp, grads: &Grads) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let g = grads.flat();
        let mut p = net.params();
        for i in 0..p.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g[i] * g[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            p[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
        net.set_params(&p);
    }
}
