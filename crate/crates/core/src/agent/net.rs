//! Recurrent dueling Q-network in plain `f64`, with backpropagation through
//! time over short sequences.

use crate::env::{AgentObservation, CHANNELS};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AgentError;

pub const N_ACTIONS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkShape {
    pub image_size: usize,
    pub in_channels: usize,
    pub conv: Vec<ConvSpec>,
    pub fc: usize,
    pub pos_fc: usize,
    pub fusion: Vec<usize>,
    pub hidden: usize,
}

impl NetworkShape {
    pub fn full() -> Self {
        Self {
            image_size: 84,
            in_channels: CHANNELS,
            conv: vec![
                ConvSpec { out_channels: 32, kernel: 8, stride: 4 },
                ConvSpec { out_channels: 64, kernel: 4, stride: 2 },
                ConvSpec { out_channels: 64, kernel: 3, stride: 1 },
            ],
            fc: 512,
            pos_fc: 16,
            fusion: vec![512, 512],
            hidden: 512,
        }
    }

    /// Same layer structure with narrower layers. 36 is the smallest input
    /// the 8/4/3 kernel stack accepts.
    pub fn mini() -> Self {
        Self {
            image_size: 36,
            in_channels: CHANNELS,
            conv: vec![
                ConvSpec { out_channels: 8, kernel: 8, stride: 4 },
                ConvSpec { out_channels: 16, kernel: 4, stride: 2 },
                ConvSpec { out_channels: 16, kernel: 3, stride: 1 },
            ],
            fc: 128,
            pos_fc: 8,
            fusion: vec![128, 128],
            hidden: 64,
        }
    }

    /// Spatial side after each conv layer.
    pub fn conv_sizes(&self) -> Result<Vec<usize>, AgentError> {
        let mut size = self.image_size;
        let mut out = Vec::with_capacity(self.conv.len());
        for c in &self.conv {
            if c.kernel == 0 || c.stride == 0 || c.out_channels == 0 || size < c.kernel {
                return Err(AgentError::Shape(format!(
                    "conv kernel {} stride {} does not fit a {size}x{size} input",
                    c.kernel, c.stride
                )));
            }
            size = (size - c.kernel) / c.stride + 1;
            out.push(size);
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        self.conv_sizes()?;
        if self.in_channels == 0 || self.fc == 0 || self.pos_fc == 0 || self.hidden == 0 || self.fusion.contains(&0) {
            return Err(AgentError::Shape("layer widths must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Dense {
    w: usize,
    b: usize,
    n_in: usize,
    n_out: usize,
}

#[derive(Debug, Clone, Copy)]
struct Conv {
    w: usize,
    b: usize,
    in_c: usize,
    out_c: usize,
    k: usize,
    s: usize,
    in_size: usize,
    out_size: usize,
}

#[derive(Debug, Clone)]
struct Layout {
    conv: Vec<Conv>,
    fc: Dense,
    pos: Dense,
    fusion: Vec<Dense>,
    lstm_x: Dense,
    /// Recurrent weights only; the gate bias lives in `lstm_x`.
    lstm_h: Dense,
    value: Dense,
    adv: Dense,
    len: usize,
}

impl Layout {
    fn new(shape: &NetworkShape) -> Result<Self, AgentError> {
        shape.validate()?;
        let mut len = 0;
        let mut dense = |n_in: usize, n_out: usize, bias: bool| {
            let w = len;
            len += n_in * n_out;
            let b = len;
            if bias {
                len += n_out;
            }
            Dense { w, b, n_in, n_out }
        };
        let sizes = shape.conv_sizes()?;
        let mut conv = Vec::new();
        let (mut in_c, mut in_size) = (shape.in_channels, shape.image_size);
        for (spec, &out_size) in shape.conv.iter().zip(&sizes) {
            let d = dense(in_c * spec.kernel * spec.kernel, spec.out_channels, true);
            conv.push(Conv {
                w: d.w,
                b: d.b,
                in_c,
                out_c: spec.out_channels,
                k: spec.kernel,
                s: spec.stride,
                in_size,
                out_size,
            });
            in_c = spec.out_channels;
            in_size = out_size;
        }
        let flat = in_c * in_size * in_size;
        let fc = dense(flat, shape.fc, true);
        let pos = dense(2, shape.pos_fc, true);
        let mut fusion = Vec::new();
        let mut width = shape.fc + shape.pos_fc;
        for &f in &shape.fusion {
            fusion.push(dense(width, f, true));
            width = f;
        }
        let h = shape.hidden;
        let lstm_x = dense(width, 4 * h, true);
        let lstm_h = dense(h, 4 * h, false);
        let value = dense(h, 1, true);
        let adv = dense(h, N_ACTIONS, true);
        Ok(Self { conv, fc, pos, fusion, lstm_x, lstm_h, value, adv, len })
    }
}

/// Recurrent state carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self { h: vec![0.0; hidden], c: vec![0.0; hidden] }
    }
}

/// Network input for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct NetInput {
    pub planes: Vec<f64>,
    pub position: [f64; 2],
}

impl NetInput {
    pub fn from_observation(obs: &AgentObservation) -> Self {
        Self { planes: obs.to_planes(), position: [obs.position.0, obs.position.1] }
    }
}

/// Activations of one forward step, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct StepCache {
    conv: Vec<Vec<f64>>,
    /// im2col input of each conv layer.
    cols: Vec<Vec<f64>>,
    fc: Vec<f64>,
    pos: Vec<f64>,
    fusion: Vec<Vec<f64>>,
    prev: LstmState,
    /// Activated gates, `[i | f | g | o]`.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
    pub state: LstmState,
    pub q: [f64; N_ACTIONS],
}

/// Dot product with four independent accumulators so the loop vectorizes.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// `y += alpha * x`.
#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yv, xv) in y.iter_mut().zip(x) {
        *yv += alpha * xv;
    }
}

/// Receptive fields of every output position, one row per position.
fn im2col(c: &Conv, x: &[f64]) -> Vec<f64> {
    let (n_in, n_out, k) = (c.in_size, c.out_size, c.k);
    let width = c.in_c * k * k;
    let mut cols = vec![0.0; n_out * n_out * width];
    for oy in 0..n_out {
        for ox in 0..n_out {
            let dst = &mut cols[(oy * n_out + ox) * width..(oy * n_out + ox + 1) * width];
            for ch in 0..c.in_c {
                for ky in 0..k {
                    let row = ch * n_in * n_in + (oy * c.s + ky) * n_in + ox * c.s;
                    dst[(ch * k + ky) * k..(ch * k + ky + 1) * k].copy_from_slice(&x[row..row + k]);
                }
            }
        }
    }
    cols
}

fn relu_inplace(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    crate::trainee::sigmoid(x)
}

/// Combines dueling heads into Q-values.
pub fn dueling_q(value: f64, advantages: &[f64; N_ACTIONS]) -> [f64; N_ACTIONS] {
    let mean = advantages.iter().sum::<f64>() / N_ACTIONS as f64;
    advantages.map(|a| value + a - mean)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub shape: NetworkShape,
    pub params: Vec<f64>,
}

impl Network {
    /// He-uniform weights, ReLU-layer biases 0.01, forget-gate bias 1, other
    /// biases zero.
    pub fn new<R: Rng>(shape: NetworkShape, rng: &mut R) -> Result<Self, AgentError> {
        let layout = Layout::new(&shape)?;
        let mut params = vec![0.0; layout.len];
        let mut fill = |d: Dense, fan_in: usize, params: &mut [f64]| {
            let bound = (6.0 / fan_in as f64).sqrt();
            for p in &mut params[d.w..d.w + d.n_in * d.n_out] {
                *p = rng.gen_range(-bound..bound);
            }
            params[d.b..d.b + d.n_out].fill(0.01);
        };
        for c in &layout.conv {
            let d = Dense { w: c.w, b: c.b, n_in: c.in_c * c.k * c.k, n_out: c.out_c };
            fill(d, d.n_in, &mut params);
        }
        fill(layout.fc, layout.fc.n_in, &mut params);
        fill(layout.pos, 2, &mut params);
        for &d in &layout.fusion {
            fill(d, d.n_in, &mut params);
        }
        // Glorot-style bounds for the recurrent cell and heads.
        let h = shape.hidden;
        let mut glorot = |d: Dense, params: &mut [f64]| {
            let bound = (6.0 / (d.n_in + d.n_out) as f64).sqrt();
            for p in &mut params[d.w..d.w + d.n_in * d.n_out] {
                *p = rng.gen_range(-bound..bound);
            }
        };
        glorot(layout.lstm_x, &mut params);
        glorot(layout.lstm_h, &mut params);
        glorot(layout.value, &mut params);
        glorot(layout.adv, &mut params);
        for p in &mut params[layout.lstm_x.b + h..layout.lstm_x.b + 2 * h] {
            *p = 1.0;
        }
        Ok(Self { shape, params })
    }

    pub fn zeroed(shape: NetworkShape) -> Result<Self, AgentError> {
        let layout = Layout::new(&shape)?;
        Ok(Self { shape, params: vec![0.0; layout.len] })
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn initial_state(&self) -> LstmState {
        LstmState::zeros(self.shape.hidden)
    }

    fn layout(&self) -> Layout {
        Layout::new(&self.shape).expect("shape validated at construction")
    }

    /// Offsets of the value-head bias and the advantage-head biases.
    pub fn head_bias_offsets(&self) -> (usize, usize) {
        let l = self.layout();
        (l.value.b, l.adv.b)
    }

    /// Offset and length of the value and advantage head weights.
    pub fn head_weight_ranges(&self) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let l = self.layout();
        (l.value.w..l.value.w + l.value.n_in, l.adv.w..l.adv.w + l.adv.n_in * N_ACTIONS)
    }

    fn check_input(&self, input: &NetInput) -> Result<(), AgentError> {
        let n = self.shape.image_size;
        let want = self.shape.in_channels * n * n;
        if input.planes.len() != want {
            return Err(AgentError::Shape(format!("observation has {} values, network expects {want}", input.planes.len())));
        }
        Ok(())
    }

    /// One recurrent step. Returns the Q-values and the activations.
    pub fn forward(&self, input: &NetInput, state: &LstmState) -> Result<StepCache, AgentError> {
        self.check_input(input)?;
        if state.h.len() != self.shape.hidden {
            return Err(AgentError::Shape("hidden state width mismatch".into()));
        }
        Ok(self.forward_with(&self.layout(), input, state))
    }

    fn dense(&self, d: Dense, x: &[f64], out: &mut [f64]) {
        let p = &self.params;
        for (o, y) in out.iter_mut().enumerate() {
            let row = &p[d.w + o * d.n_in..d.w + (o + 1) * d.n_in];
            *y = p[d.b + o] + dot(row, x);
        }
    }

    fn conv_forward(&self, c: &Conv, cols: &[f64]) -> Vec<f64> {
        let p = &self.params;
        let width = c.in_c * c.k * c.k;
        let n = c.out_size * c.out_size;
        let mut out = vec![0.0; c.out_c * n];
        for o in 0..c.out_c {
            let w = &p[c.w + o * width..c.w + (o + 1) * width];
            for (pos, y) in out[o * n..(o + 1) * n].iter_mut().enumerate() {
                *y = (p[c.b + o] + dot(w, &cols[pos * width..(pos + 1) * width])).max(0.0);
            }
        }
        out
    }

    fn forward_with(&self, l: &Layout, input: &NetInput, state: &LstmState) -> StepCache {
        let mut conv: Vec<Vec<f64>> = Vec::with_capacity(l.conv.len());
        let mut cols = Vec::with_capacity(l.conv.len());
        for (i, c) in l.conv.iter().enumerate() {
            let x = if i == 0 { &input.planes } else { &conv[i - 1] };
            let col = im2col(c, x);
            conv.push(self.conv_forward(c, &col));
            cols.push(col);
        }
        let mut fc = vec![0.0; l.fc.n_out];
        self.dense(l.fc, conv.last().unwrap(), &mut fc);
        relu_inplace(&mut fc);
        let mut pos = vec![0.0; l.pos.n_out];
        self.dense(l.pos, &input.position, &mut pos);
        relu_inplace(&mut pos);

        let mut x: Vec<f64> = fc.iter().chain(&pos).copied().collect();
        let mut fusion = Vec::with_capacity(l.fusion.len());
        for &d in &l.fusion {
            let mut y = vec![0.0; d.n_out];
            self.dense(d, &x, &mut y);
            relu_inplace(&mut y);
            x = y.clone();
            fusion.push(y);
        }

        let h = self.shape.hidden;
        let mut gates = vec![0.0; 4 * h];
        self.dense(l.lstm_x, &x, &mut gates);
        let p = &self.params;
        for (r, g) in gates.iter_mut().enumerate() {
            let row = &p[l.lstm_h.w + r * h..l.lstm_h.w + (r + 1) * h];
            *g += dot(row, &state.h);
        }
        for j in 0..h {
            gates[j] = sigmoid(gates[j]);
            gates[h + j] = sigmoid(gates[h + j]);
            gates[2 * h + j] = gates[2 * h + j].tanh();
            gates[3 * h + j] = sigmoid(gates[3 * h + j]);
        }
        let mut next = LstmState::zeros(h);
        let mut tanh_c = vec![0.0; h];
        for j in 0..h {
            next.c[j] = gates[h + j] * state.c[j] + gates[j] * gates[2 * h + j];
            tanh_c[j] = next.c[j].tanh();
            next.h[j] = gates[3 * h + j] * tanh_c[j];
        }
        let mut v = [0.0];
        self.dense(l.value, &next.h, &mut v);
        let mut a = [0.0; N_ACTIONS];
        self.dense(l.adv, &next.h, &mut a);
        let q = dueling_q(v[0], &a);
        StepCache { conv, cols, fc, pos, fusion, prev: state.clone(), gates, tanh_c, state: next, q }
    }

    /// Runs a sequence from `state`, returning one cache per step.
    pub fn forward_sequence(&self, inputs: &[NetInput], state: &LstmState) -> Result<Vec<StepCache>, AgentError> {
        for i in inputs {
            self.check_input(i)?;
        }
        let l = self.layout();
        let mut s = state.clone();
        let mut out = Vec::with_capacity(inputs.len());
        for i in inputs {
            let c = self.forward_with(&l, i, &s);
            s = c.state.clone();
            out.push(c);
        }
        Ok(out)
    }

    /// Accumulates into `grad` the gradient of a loss whose derivative with
    /// respect to the Q-values of step `t` is `dq[t]`. `caches` must come
    /// from [`forward_sequence`](Self::forward_sequence) on `inputs`.
    pub fn backward_sequence(
        &self,
        inputs: &[NetInput],
        caches: &[StepCache],
        dq: &[[f64; N_ACTIONS]],
        grad: &mut [f64],
    ) {
        let l = self.layout();
        let p = &self.params;
        let h = self.shape.hidden;
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        for t in (0..dq.len()).rev() {
            let cache = &caches[t];
            let input = &inputs[t];
            let dqt = &dq[t];

            let dv: f64 = dqt.iter().sum();
            let mean = dv / N_ACTIONS as f64;
            let da: Vec<f64> = dqt.iter().map(|d| d - mean).collect();
            let mut dh = dh_next.clone();
            for j in 0..h {
                grad[l.value.w + j] += dv * cache.state.h[j];
                dh[j] += p[l.value.w + j] * dv;
            }
            grad[l.value.b] += dv;
            for (a, &daa) in da.iter().enumerate() {
                grad[l.adv.b + a] += daa;
                if daa == 0.0 {
                    continue;
                }
                let w = l.adv.w + a * h;
                for j in 0..h {
                    grad[w + j] += daa * cache.state.h[j];
                    dh[j] += p[w + j] * daa;
                }
            }

            // LSTM cell.
            let g = &cache.gates;
            let mut dpre = vec![0.0; 4 * h];
            for j in 0..h {
                let (i, f, gg, o) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                let tc = cache.tanh_c[j];
                let d_o = dh[j] * tc;
                let dc = dc_next[j] + dh[j] * o * (1.0 - tc * tc);
                dpre[j] = dc * gg * i * (1.0 - i);
                dpre[h + j] = dc * cache.prev.c[j] * f * (1.0 - f);
                dpre[2 * h + j] = dc * i * (1.0 - gg * gg);
                dpre[3 * h + j] = d_o * o * (1.0 - o);
                dc_next[j] = dc * f;
            }
            let z = cache.fusion.last().cloned().unwrap_or_else(|| cache.fc.iter().chain(&cache.pos).copied().collect());
            let mut dz = vec![0.0; z.len()];
            dense_backward(p, l.lstm_x, &z, &dpre, grad, Some(&mut dz));
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            for (r, &d) in dpre.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let w = l.lstm_h.w + r * h;
                for j in 0..h {
                    grad[w + j] += d * cache.prev.h[j];
                    dh_next[j] += p[w + j] * d;
                }
            }

            // Fusion stack, last layer first.
            let mut dy = dz;
            for k in (0..l.fusion.len()).rev() {
                let y = &cache.fusion[k];
                for (d, &yv) in dy.iter_mut().zip(y) {
                    if yv <= 0.0 {
                        *d = 0.0;
                    }
                }
                let x: Vec<f64> = if k == 0 {
                    cache.fc.iter().chain(&cache.pos).copied().collect()
                } else {
                    cache.fusion[k - 1].clone()
                };
                let mut dx = vec![0.0; x.len()];
                dense_backward(p, l.fusion[k], &x, &dy, grad, Some(&mut dx));
                dy = dx;
            }
            let (mut dfc, mut dpos) = (dy[..l.fc.n_out].to_vec(), dy[l.fc.n_out..].to_vec());
            mask_relu(&mut dpos, &cache.pos);
            dense_backward(p, l.pos, &input.position, &dpos, grad, None);
            mask_relu(&mut dfc, &cache.fc);
            let flat = cache.conv.last().unwrap();
            let mut dflat = vec![0.0; flat.len()];
            dense_backward(p, l.fc, flat, &dfc, grad, Some(&mut dflat));

            let mut dout = dflat;
            for k in (0..l.conv.len()).rev() {
                mask_relu(&mut dout, &cache.conv[k]);
                dout = conv_backward(p, &l.conv[k], &cache.cols[k], &dout, grad, k > 0);
            }
        }
    }
}

fn mask_relu(d: &mut [f64], y: &[f64]) {
    for (dv, &yv) in d.iter_mut().zip(y) {
        if yv <= 0.0 {
            *dv = 0.0;
        }
    }
}

fn dense_backward(p: &[f64], d: Dense, x: &[f64], dy: &[f64], grad: &mut [f64], mut dx: Option<&mut Vec<f64>>) {
    for (o, &g) in dy.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        grad[d.b + o] += g;
        let w = d.w + o * d.n_in;
        axpy(g, x, &mut grad[w..w + d.n_in]);
        if let Some(dx) = dx.as_deref_mut() {
            axpy(g, &p[w..w + d.n_in], dx);
        }
    }
}

/// Accumulates weight gradients; returns the input gradient when asked
/// (empty otherwise).
fn conv_backward(p: &[f64], c: &Conv, cols: &[f64], dy: &[f64], grad: &mut [f64], want_dx: bool) -> Vec<f64> {
    let (n_in, n_out, k) = (c.in_size, c.out_size, c.k);
    let width = c.in_c * k * k;
    let n = n_out * n_out;
    let mut dcols = if want_dx { vec![0.0; n * width] } else { Vec::new() };
    for o in 0..c.out_c {
        let wo = c.w + o * width;
        for pos in 0..n {
            let g = dy[o * n + pos];
            if g == 0.0 {
                continue;
            }
            grad[c.b + o] += g;
            axpy(g, &cols[pos * width..(pos + 1) * width], &mut grad[wo..wo + width]);
            if want_dx {
                axpy(g, &p[wo..wo + width], &mut dcols[pos * width..(pos + 1) * width]);
            }
        }
    }
    if !want_dx {
        return Vec::new();
    }
    let mut dx = vec![0.0; c.in_c * n_in * n_in];
    for oy in 0..n_out {
        for ox in 0..n_out {
            let src = &dcols[(oy * n_out + ox) * width..(oy * n_out + ox + 1) * width];
            for ch in 0..c.in_c {
                for ky in 0..k {
                    let row = ch * n_in * n_in + (oy * c.s + ky) * n_in + ox * c.s;
                    axpy(1.0, &src[(ch * k + ky) * k..(ch * k + ky + 1) * k], &mut dx[row..row + k]);
                }
            }
        }
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn tiny_shape() -> NetworkShape {
        NetworkShape {
            image_size: 8,
            in_channels: CHANNELS,
            conv: vec![ConvSpec { out_channels: 3, kernel: 3, stride: 2 }, ConvSpec { out_channels: 4, kernel: 2, stride: 1 }],
            fc: 6,
            pos_fc: 3,
            fusion: vec![7, 5],
            hidden: 16,
        }
    }

    fn random_input(rng: &mut ChaCha8Rng, shape: &NetworkShape) -> NetInput {
        let n = shape.in_channels * shape.image_size * shape.image_size;
        NetInput { planes: (0..n).map(|_| rng.gen::<f64>()).collect(), position: [rng.gen(), rng.gen()] }
    }

    #[test]
    fn mini_and_full_shapes_fit() {
        assert_eq!(NetworkShape::full().conv_sizes().unwrap(), vec![20, 9, 7]);
        assert_eq!(NetworkShape::mini().conv_sizes().unwrap(), vec![8, 3, 1]);
        let mut s = NetworkShape::mini();
        s.image_size = 32;
        assert!(s.conv_sizes().is_err());
    }

    #[test]
    fn value_only_head_gives_constant_q() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut net = Network::new(tiny_shape(), &mut rng).unwrap();
        let (vw, aw) = net.head_weight_ranges();
        let (vb, ab) = net.head_bias_offsets();
        for i in vw.chain(aw) {
            net.params[i] = 0.0;
        }
        net.params[vb] = 1.0;
        for a in 0..N_ACTIONS {
            net.params[ab + a] = 0.0;
        }
        let x = random_input(&mut rng, &net.shape);
        let q = net.forward(&x, &net.initial_state()).unwrap().q;
        assert_eq!(q, [1.0; N_ACTIONS]);
        for a in 0..N_ACTIONS {
            net.params[ab + a] = 3.5;
        }
        assert_eq!(net.forward(&x, &net.initial_state()).unwrap().q, [1.0; N_ACTIONS]);
    }

    #[test]
    fn advantage_shift_invariance() {
        let a = [0.1, -0.4, 2.0, 0.0, 0.3, 1.1];
        let shifted = a.map(|v| v + 7.25);
        let (q1, q2) = (dueling_q(0.5, &a), dueling_q(0.5, &shifted));
        for i in 0..N_ACTIONS {
            assert!((q1[i] - q2[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn recurrence_is_live() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Network::new(tiny_shape(), &mut rng).unwrap();
        let (x0, x1) = (random_input(&mut rng, &net.shape), random_input(&mut rng, &net.shape));
        let fresh = net.forward(&x1, &net.initial_state()).unwrap().q;
        let carried = net.forward(&x0, &net.initial_state()).unwrap().state;
        let after = net.forward(&x1, &carried).unwrap().q;
        assert_ne!(fresh, after);
    }

    #[test]
    fn rejects_wrong_input_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Network::new(tiny_shape(), &mut rng).unwrap();
        let x = NetInput { planes: vec![0.0; 10], position: [0.0, 0.0] };
        assert!(matches!(net.forward(&x, &net.initial_state()), Err(AgentError::Shape(_))));
    }
}
