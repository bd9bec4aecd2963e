use rand::Rng as _;

use crate::error::{Error, Result};
use crate::Rng;

/// Feed-forward network: tanh hidden layers, identity output.
///
/// Parameters live in one flat vector, layer by layer, each layer stored as
/// its row-major weight matrix `[out][in]` followed by its bias vector. The
/// gradient buffers used by [`Mlp::accumulate_backward`] share that layout,
/// which keeps the optimizer and the checkpoint format trivial.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Activation buffers reused across forward/backward calls.
#[derive(Debug, Clone)]
pub struct Workspace {
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_next: Vec<f64>,
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

impl Workspace {
    /// Output of the most recent forward pass.
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("non-empty")
    }
}

impl Mlp {
    pub fn param_count_for(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidParam(format!("bad layer sizes {sizes:?}")));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            params: vec![0.0; Self::param_count_for(sizes)],
        })
    }

    /// Uniform fan-in initialization `U(-1/sqrt(in), 1/sqrt(in))` with zero
    /// biases; the output layer weights are further scaled by `output_scale`.
    pub fn init(sizes: &[usize], output_scale: f64, rng: &mut Rng) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        let n_layers = sizes.len() - 1;
        let mut off = 0;
        for l in 0..n_layers {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let bound = 1.0 / (n_in as f64).sqrt();
            let scale = if l + 1 == n_layers { output_scale } else { 1.0 };
            for w in &mut net.params[off..off + n_in * n_out] {
                *w = rng.random_range(-bound..bound) * scale;
            }
            off += n_in * n_out + n_out;
        }
        Ok(net)
    }

    pub fn from_parts(sizes: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        let net = Self::zeros(&sizes)?;
        if params.len() != net.params.len() {
            return Err(Error::Shape { context: "mlp params", expected: net.params.len(), got: params.len() });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParam("mlp params must be finite".into()));
        }
        Ok(Self { sizes, params })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two layers")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn workspace(&self) -> Workspace {
        let max = *self.sizes.iter().max().expect("non-empty");
        Workspace {
            acts: self.sizes.iter().map(|&n| vec![0.0; n]).collect(),
            delta: vec![0.0; max],
            delta_next: vec![0.0; max],
        }
    }

    /// Allocating forward pass.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut ws = self.workspace();
        Ok(self.forward_ws(x, &mut ws)?.to_vec())
    }

    /// Forward pass into `ws`; activations stay there for a following backward call.
    pub fn forward_ws<'w>(&self, x: &[f64], ws: &'w mut Workspace) -> Result<&'w [f64]> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape { context: "mlp input", expected: self.input_dim(), got: x.len() });
        }
        let n_layers = self.sizes.len() - 1;
        ws.acts[0].copy_from_slice(x);
        let mut off = 0;
        for l in 0..n_layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[off..off + n_in * n_out];
            let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            let (lo, hi) = ws.acts.split_at_mut(l + 1);
            let input = &lo[l];
            let out = &mut hi[0];
            let hidden = l + 1 < n_layers;
            for o in 0..n_out {
                let s = b[o] + dot(&w[o * n_in..(o + 1) * n_in], input);
                out[o] = if hidden { s.tanh() } else { s };
            }
            off += n_in * n_out + n_out;
        }
        Ok(&ws.acts[n_layers])
    }

    /// Adds the parameter gradient of `upstream . forward(x)` into `grad`, using
    /// the activations left in `ws` by the preceding [`Mlp::forward_ws`] call.
    /// Writes the input gradient into `input_grad` when given.
    pub fn accumulate_backward(
        &self,
        ws: &mut Workspace,
        upstream: &[f64],
        grad: &mut [f64],
        input_grad: Option<&mut [f64]>,
    ) -> Result<()> {
        if upstream.len() != self.output_dim() {
            return Err(Error::Shape { context: "mlp upstream", expected: self.output_dim(), got: upstream.len() });
        }
        if grad.len() != self.params.len() {
            return Err(Error::Shape { context: "mlp gradient", expected: self.params.len(), got: grad.len() });
        }
        let n_layers = self.sizes.len() - 1;
        ws.delta[..upstream.len()].copy_from_slice(upstream);
        let mut end = self.params.len();
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = end - (n_in * n_out + n_out);
            let a_in = &ws.acts[l];
            {
                let (gw, gb) = grad[off..end].split_at_mut(n_in * n_out);
                for o in 0..n_out {
                    let d = ws.delta[o];
                    gb[o] += d;
                    if d != 0.0 {
                        for (g, a) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(a_in) {
                            *g += d * a;
                        }
                    }
                }
            }
            let need_input = l > 0 || input_grad.is_some();
            if need_input {
                let w = &self.params[off..off + n_in * n_out];
                let dn = &mut ws.delta_next[..n_in];
                dn.iter_mut().for_each(|x| *x = 0.0);
                for o in 0..n_out {
                    let d = ws.delta[o];
                    if d != 0.0 {
                        for (x, wv) in dn.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                            *x += d * wv;
                        }
                    }
                }
                if l > 0 {
                    // tanh' = 1 - a^2 on the hidden activation feeding this layer
                    for (x, a) in dn.iter_mut().zip(a_in) {
                        *x *= 1.0 - a * a;
                    }
                }
                std::mem::swap(&mut ws.delta, &mut ws.delta_next);
            }
            end = off;
        }
        if let Some(ig) = input_grad {
            if ig.len() != self.input_dim() {
                return Err(Error::Shape { context: "mlp input gradient", expected: self.input_dim(), got: ig.len() });
            }
            ig.copy_from_slice(&ws.delta[..self.input_dim()]);
        }
        Ok(())
    }

    /// Gradients of `upstream . forward(x)` with respect to the parameters and to `x`.
    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut ws = self.workspace();
        self.forward_ws(x, &mut ws)?;
        let mut grad = vec![0.0; self.params.len()];
        let mut ig = vec![0.0; self.input_dim()];
        self.accumulate_backward(&mut ws, upstream, &mut grad, Some(&mut ig))?;
        Ok((grad, ig))
    }

    /// Row-major weight matrix of layer `l` (testing / inspection).
    pub fn layer_weights(&self, l: usize) -> &[f64] {
        let off: usize = self.sizes.windows(2).take(l).map(|w| w[0] * w[1] + w[1]).sum();
        &self.params[off..off + self.sizes[l] * self.sizes[l + 1]]
    }
}
