//! Fully connected networks with hand-written first- and second-order
//! backpropagation.
//!
//! Batches are row-major: one sample per row. A layer computes
//! `pre = input · W + b` and `post = act(pre)`.
//!
//! Besides the usual backward pass, scalar-output networks support
//! [`Mlp::input_gradient`] (the gradient of the output with respect to the
//! input, per sample) and [`Mlp::input_gradient_backward`], which
//! backpropagates a loss defined on that input gradient into the weights.
//! The gradient penalty needs both.

use std::ops::Range;

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::StreamRng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    Identity,
    LeakyRelu { slope: f64 },
    Tanh,
}

impl Activation {
    pub fn value(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::LeakyRelu { slope } => {
                if x > 0.0 {
                    x
                } else {
                    slope * x
                }
            }
            Activation::Tanh => x.tanh(),
        }
    }

    /// First derivative at pre-activation `x` with output `y`.
    fn first(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::LeakyRelu { slope } => {
                if x > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }

    fn second(self, _x: f64, y: f64) -> f64 {
        match self {
            Activation::Identity | Activation::LeakyRelu { .. } => 0.0,
            Activation::Tanh => -2.0 * y * (1.0 - y * y),
        }
    }

    fn is_piecewise_linear(self) -> bool {
        !matches!(self, Activation::Tanh)
    }

    /// Init gain for a layer feeding this activation.
    fn gain(self) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::LeakyRelu { slope } => (2.0 / (1.0 + slope * slope)).sqrt(),
            Activation::Tanh => 5.0 / 3.0,
        }
    }

    fn derivative(self, pre: &Array2<f64>, post: &Array2<f64>) -> Array2<f64> {
        Zip::from(pre).and(post).map_collect(|&x, &y| self.first(x, y))
    }

    fn second_derivative(self, pre: &Array2<f64>, post: &Array2<f64>) -> Array2<f64> {
        Zip::from(pre).and(post).map_collect(|&x, &y| self.second(x, y))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    /// `fan_in x fan_out`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Dense {
    /// Uniform init with limit `gain * sqrt(3 / fan_in)`, zero bias.
    pub fn init(fan_in: usize, fan_out: usize, activation: Activation, rng: &mut StreamRng) -> Self {
        let limit = activation.gain() * (3.0 / fan_in as f64).sqrt();
        let weight = Array2::from_shape_simple_fn((fan_in, fan_out), || limit * (2.0 * rng.random::<f64>() - 1.0));
        Self {
            weight,
            bias: Array1::zeros(fan_out),
            activation,
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.ncols()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Forward intermediates of one batch.
#[derive(Clone, Debug)]
pub struct Trace {
    pub input: Array2<f64>,
    pub pre: Vec<Array2<f64>>,
    pub post: Vec<Array2<f64>>,
}

impl Trace {
    pub fn output(&self) -> &Array2<f64> {
        self.post.last().expect("network has layers")
    }

    fn layer_input(&self, l: usize) -> &Array2<f64> {
        if l == 0 {
            &self.input
        } else {
            &self.post[l - 1]
        }
    }
}

/// Parameter-shaped gradient accumulator.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads {
    pub weight: Vec<Array2<f64>>,
    pub bias: Vec<Array1<f64>>,
}

impl MlpGrads {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            weight: net.layers.iter().map(|l| Array2::zeros(l.weight.raw_dim())).collect(),
            bias: net.layers.iter().map(|l| Array1::zeros(l.bias.raw_dim())).collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        self.weight.iter_mut().for_each(|w| w.fill(0.0));
        self.bias.iter_mut().for_each(|b| b.fill(0.0));
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        self.weight
            .iter()
            .zip(&self.bias)
            .flat_map(|(w, b)| {
                [
                    w.as_slice().expect("standard layout"),
                    b.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }
}

/// Per-sample input gradient of a scalar-output network, plus what the
/// second-order pass needs.
#[derive(Clone, Debug)]
pub struct InputGradient {
    /// `batch x cols.len()`.
    pub grad: Array2<f64>,
    cols: Range<usize>,
    /// Output sensitivities to each layer's pre-activation.
    deltas: Vec<Array2<f64>>,
    /// Output sensitivities to each layer's post-activation.
    sens: Vec<Array2<f64>>,
}

fn accumulate_at_b(acc: &mut Array2<f64>, a: &Array2<f64>, b: &Array2<f64>) {
    general_mat_mul(1.0, &a.t(), b, 1.0, acc);
}

impl Mlp {
    /// Layers `dims[0] -> dims[1] -> ...`, with `activations[l]` after layer `l`.
    pub fn new(dims: &[usize], activations: &[Activation], rng: &mut StreamRng) -> Self {
        assert_eq!(dims.len(), activations.len() + 1, "one activation per layer");
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &act)| Dense::init(w[0], w[1], act, rng))
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("network has layers").fan_out()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| {
                [
                    l.weight.as_slice().expect("standard layout"),
                    l.bias.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [
                    l.weight.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn forward(&self, input: Array2<f64>) -> Trace {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let x = if l == 0 { &input } else { &post[l - 1] };
            let a = x.dot(&layer.weight) + &layer.bias;
            let act = layer.activation;
            post.push(a.mapv(|v| act.value(v)));
            pre.push(a);
        }
        Trace { input, pre, post }
    }

    pub fn predict(&self, input: ArrayView2<f64>) -> Array2<f64> {
        let mut x = input.to_owned();
        for layer in &self.layers {
            let act = layer.activation;
            x = (x.dot(&layer.weight) + &layer.bias).mapv(|v| act.value(v));
        }
        x
    }

    /// Backpropagates `grad_out` (gradient with respect to the output) and
    /// returns the gradient with respect to the first layer's
    /// pre-activation. Parameter gradients are added to `grads` when given.
    pub fn backward(&self, trace: &Trace, grad_out: &Array2<f64>, mut grads: Option<&mut MlpGrads>) -> Array2<f64> {
        let last = self.layers.len() - 1;
        let act = self.layers[last].activation;
        let mut abar = grad_out * &act.derivative(&trace.pre[last], &trace.post[last]);
        for l in (0..=last).rev() {
            if let Some(g) = grads.as_deref_mut() {
                accumulate_at_b(&mut g.weight[l], trace.layer_input(l), &abar);
                g.bias[l] += &abar.sum_axis(Axis(0));
            }
            if l == 0 {
                break;
            }
            let below = self.layers[l - 1].activation;
            abar = abar.dot(&self.layers[l].weight.t()) * below.derivative(&trace.pre[l - 1], &trace.post[l - 1]);
        }
        abar
    }

    /// Maps a first-layer pre-activation gradient onto input columns `cols`.
    pub fn project_to_input(&self, first_pre_grad: &Array2<f64>, cols: Range<usize>) -> Array2<f64> {
        first_pre_grad.dot(&self.layers[0].weight.slice(s![cols, ..]).t())
    }

    /// Gradient of the (scalar) output with respect to input columns `cols`,
    /// one row per sample.
    pub fn input_gradient(&self, trace: &Trace, cols: Range<usize>) -> InputGradient {
        assert_eq!(self.output_dim(), 1, "input gradients need a scalar output");
        let n = self.layers.len();
        let batch = trace.input.nrows();
        let mut deltas = vec![Array2::zeros((0, 0)); n];
        let mut sens = vec![Array2::zeros((0, 0)); n];
        sens[n - 1] = Array2::ones((batch, 1));
        for l in (0..n).rev() {
            let act = self.layers[l].activation;
            deltas[l] = &sens[l] * &act.derivative(&trace.pre[l], &trace.post[l]);
            if l > 0 {
                sens[l - 1] = deltas[l].dot(&self.layers[l].weight.t());
            }
        }
        let grad = self.project_to_input(&deltas[0], cols.clone());
        InputGradient {
            grad,
            cols,
            deltas,
            sens,
        }
    }

    /// Second-order pass. Given `upstream = dPhi/d(input gradient)` for a
    /// loss `Phi` of the input gradient, adds `dPhi/dparams` to `grads` and
    /// returns `dPhi/d(first pre-activation)` for chaining into whatever
    /// produced the input.
    pub fn input_gradient_backward(
        &self,
        trace: &Trace,
        ig: &InputGradient,
        upstream: &Array2<f64>,
        grads: &mut MlpGrads,
    ) -> Array2<f64> {
        let n = self.layers.len();
        let w0 = self.layers[0].weight.slice(s![ig.cols.clone(), ..]);
        // grad = deltas[0] · W0[cols]^T
        {
            let mut gw = grads.weight[0].slice_mut(s![ig.cols.clone(), ..]);
            general_mat_mul(1.0, &upstream.t(), &ig.deltas[0], 1.0, &mut gw);
        }
        let mut delta_bar = upstream.dot(&w0);
        let mut pre_bar: Vec<Option<Array2<f64>>> = vec![None; n];
        for l in 0..n {
            let act = self.layers[l].activation;
            let (pre, post) = (&trace.pre[l], &trace.post[l]);
            // deltas[l] = sens[l] * act'(pre[l])
            if !act.is_piecewise_linear() {
                pre_bar[l] = Some(&delta_bar * &ig.sens[l] * act.second_derivative(pre, post));
            }
            if l + 1 < n {
                // sens[l] = deltas[l + 1] · W[l + 1]^T
                let sens_bar = &delta_bar * &act.derivative(pre, post);
                accumulate_at_b(&mut grads.weight[l + 1], &sens_bar, &ig.deltas[l + 1]);
                delta_bar = sens_bar.dot(&self.layers[l + 1].weight);
            }
        }

        // Ordinary backward sweep of the pre-activation gradients.
        let mut abar: Option<Array2<f64>> = pre_bar[n - 1].take();
        for l in (0..n).rev() {
            if let Some(a) = &abar {
                accumulate_at_b(&mut grads.weight[l], trace.layer_input(l), a);
                grads.bias[l] += &a.sum_axis(Axis(0));
            }
            if l == 0 {
                break;
            }
            let below = self.layers[l - 1].activation;
            let carried = abar
                .map(|a| a.dot(&self.layers[l].weight.t()) * below.derivative(&trace.pre[l - 1], &trace.post[l - 1]));
            abar = match (carried, pre_bar[l - 1].take()) {
                (Some(a), Some(b)) => Some(a + b),
                (a, b) => a.or(b),
            };
        }
        abar.unwrap_or_else(|| Array2::zeros((trace.input.nrows(), self.layers[0].fan_out())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};
    use ndarray::Array;

    fn random_input(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = substream(seed, Stream::Training, 0);
        Array::from_shape_simple_fn((rows, cols), || 2.0 * rng.random::<f64>() - 1.0)
    }

    fn net(acts: &[Activation], dims: &[usize], seed: u64) -> Mlp {
        let mut rng = substream(seed, Stream::Init, 0);
        let mut net = Mlp::new(dims, acts, &mut rng);
        for l in &mut net.layers {
            l.bias.mapv_inplace(|_| 0.3 * (2.0 * rng.random::<f64>() - 1.0));
        }
        net
    }

    #[test]
    fn forward_matches_predict() {
        let m = net(
            &[
                Activation::Tanh,
                Activation::LeakyRelu { slope: 0.2 },
                Activation::Identity,
            ],
            &[4, 5, 3, 2],
            1,
        );
        let x = random_input(6, 4, 2);
        let t = m.forward(x.clone());
        assert_eq!(t.output(), &m.predict(x.view()));
    }

    /// Numerical gradient of `f` with respect to every parameter.
    fn numeric(m: &Mlp, f: impl Fn(&Mlp) -> f64) -> Vec<Vec<f64>> {
        let h = 1e-6;
        let mut probe = m.clone();
        let mut out = Vec::new();
        let count = m.tensors().len();
        for t in 0..count {
            let len = m.tensors()[t].len();
            let mut g = vec![0.0; len];
            for (i, gi) in g.iter_mut().enumerate() {
                let orig = probe.tensors()[t][i];
                probe.tensors_mut()[t][i] = orig + h;
                let up = f(&probe);
                probe.tensors_mut()[t][i] = orig - h;
                let down = f(&probe);
                probe.tensors_mut()[t][i] = orig;
                *gi = (up - down) / (2.0 * h);
            }
            out.push(g);
        }
        out
    }

    fn assert_close(analytic: &MlpGrads, numeric: &[Vec<f64>]) {
        for (a, n) in analytic.tensors().iter().zip(numeric) {
            for (x, y) in a.iter().zip(n) {
                let scale = x.abs().max(y.abs()).max(1e-4);
                assert!((x - y).abs() / scale < 1e-5, "analytic {x} vs numeric {y}");
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let acts = [Activation::Tanh, Activation::LeakyRelu { slope: 0.2 }, Activation::Tanh];
        let m = net(&acts, &[3, 4, 4, 2], 3);
        let x = random_input(5, 3, 4);
        let weights = random_input(5, 2, 5);
        let loss = |m: &Mlp| (m.predict(x.view()) * &weights).sum();
        let trace = m.forward(x.clone());
        let mut g = MlpGrads::zeros_like(&m);
        m.backward(&trace, &weights, Some(&mut g));
        assert_close(&g, &numeric(&m, loss));
    }

    fn penalty(m: &Mlp, x: &Array2<f64>, cols: Range<usize>) -> f64 {
        let t = m.forward(x.clone());
        let ig = m.input_gradient(&t, cols);
        ig.grad
            .rows()
            .into_iter()
            .map(|r| (r.dot(&r).sqrt() - 1.0).powi(2))
            .sum()
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let m = net(
            &[Activation::Tanh, Activation::Tanh, Activation::Identity],
            &[4, 3, 3, 1],
            6,
        );
        let x = random_input(3, 4, 7);
        let t = m.forward(x.clone());
        let ig = m.input_gradient(&t, 1..4);
        let h = 1e-6;
        for i in 0..3 {
            for (k, c) in (1..4).enumerate() {
                let mut up = x.clone();
                up[[i, c]] += h;
                let mut down = x.clone();
                down[[i, c]] -= h;
                let fd = (m.predict(up.view())[[i, 0]] - m.predict(down.view())[[i, 0]]) / (2.0 * h);
                assert!((fd - ig.grad[[i, k]]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn second_order_pass_matches_finite_differences() {
        for acts in [
            [Activation::Tanh, Activation::Tanh, Activation::Identity],
            [
                Activation::LeakyRelu { slope: 0.2 },
                Activation::Tanh,
                Activation::Identity,
            ],
            [
                Activation::Tanh,
                Activation::LeakyRelu { slope: 0.2 },
                Activation::Identity,
            ],
        ] {
            let m = net(&acts, &[5, 4, 3, 1], 8);
            let x = random_input(4, 5, 9);
            let cols = 0..3;
            let t = m.forward(x.clone());
            let ig = m.input_gradient(&t, cols.clone());
            let upstream = Zip::from(ig.grad.rows())
                .map_collect(|r| {
                    let n = r.dot(&r).sqrt();
                    2.0 * (n - 1.0) / n
                })
                .insert_axis(Axis(1))
                * &ig.grad;
            let mut g = MlpGrads::zeros_like(&m);
            m.input_gradient_backward(&t, &ig, &upstream, &mut g);
            assert_close(&g, &numeric(&m, |m| penalty(m, &x, cols.clone())));
        }
    }
}
