//! Conditional generator and critic, and the WGAN-GP losses with their
//! gradients.
//!
//! Both networks embed the normalized condition `(dist2d, height)` through
//! a small fully connected net and concatenate the embedding to their
//! input: noise for the generator, the flattened image for the critic.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::mlp::{Activation, InputGradient, Mlp, MlpGrads, Trace};
use crate::channel::ConditionVector;
use crate::error::{Error, Result};
use crate::rng::StreamRng;

pub const CONDITION_DIM: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Architecture {
    pub embed_hidden: usize,
    pub embed_dim: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            embed_hidden: 32,
            embed_dim: 32,
            hidden: vec![256, 256],
            activation: Activation::LeakyRelu { slope: 0.2 },
        }
    }
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.embed_hidden == 0 || self.embed_dim == 0 || self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::Config("network layer widths must be positive".into()));
        }
        Ok(())
    }

    fn embedding(&self, rng: &mut StreamRng) -> Mlp {
        Mlp::new(
            &[CONDITION_DIM, self.embed_hidden, self.embed_dim],
            &[self.activation, self.activation],
            rng,
        )
    }

    fn body(&self, input: usize, output: usize, head: Activation, rng: &mut StreamRng) -> Mlp {
        let mut dims = vec![input];
        dims.extend(&self.hidden);
        dims.push(output);
        let mut acts = vec![self.activation; self.hidden.len()];
        acts.push(head);
        Mlp::new(&dims, &acts, rng)
    }
}

/// Affine map of `(dist2d, height)` onto `[-1, 1]^2` from dataset extremes.
/// A feature that is constant in the data maps to 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionNormalizer {
    pub dist2d: [f64; 2],
    pub height: [f64; 2],
}

impl ConditionNormalizer {
    pub fn fit(conditions: &[ConditionVector]) -> Result<Self> {
        let first = conditions.first().ok_or(Error::EmptyDataset)?;
        let mut out = Self {
            dist2d: [first.dist2d; 2],
            height: [first.height; 2],
        };
        for c in conditions {
            out.dist2d = [out.dist2d[0].min(c.dist2d), out.dist2d[1].max(c.dist2d)];
            out.height = [out.height[0].min(c.height), out.height[1].max(c.height)];
        }
        Ok(out)
    }

    fn scale(v: f64, [lo, hi]: [f64; 2]) -> f64 {
        if hi > lo {
            2.0 * (v - lo) / (hi - lo) - 1.0
        } else {
            0.0
        }
    }

    pub fn normalize(&self, c: &ConditionVector) -> [f64; 2] {
        [Self::scale(c.dist2d, self.dist2d), Self::scale(c.height, self.height)]
    }

    pub fn normalize_all(&self, conditions: &[ConditionVector]) -> Array2<f64> {
        let mut out = Array2::zeros((conditions.len(), CONDITION_DIM));
        for (mut row, c) in out.rows_mut().into_iter().zip(conditions) {
            let n = self.normalize(c);
            row[0] = n[0];
            row[1] = n[1];
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub embed: Mlp,
    pub body: Mlp,
    pub noise_dim: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Critic {
    pub embed: Mlp,
    pub body: Mlp,
    pub pixels: usize,
}

/// Gradients for an embedding + body pair.
#[derive(Clone, Debug, PartialEq)]
pub struct NetGrads {
    pub embed: MlpGrads,
    pub body: MlpGrads,
}

impl NetGrads {
    pub fn fill_zero(&mut self) {
        self.embed.fill_zero();
        self.body.fill_zero();
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut t = self.embed.tensors();
        t.extend(self.body.tensors());
        t
    }
}

pub struct NetTrace {
    pub embed: Trace,
    pub body: Trace,
}

impl NetTrace {
    pub fn output(&self) -> &Array2<f64> {
        self.body.output()
    }
}

fn tensors_of<'a>(embed: &'a Mlp, body: &'a Mlp) -> Vec<&'a [f64]> {
    let mut t = embed.tensors();
    t.extend(body.tensors());
    t
}

fn tensors_mut_of<'a>(embed: &'a mut Mlp, body: &'a mut Mlp) -> Vec<&'a mut [f64]> {
    let mut t = embed.tensors_mut();
    t.extend(body.tensors_mut());
    t
}

/// Runs `embed` on the conditions and `body` on `[input, embedding]`.
fn forward_pair(embed: &Mlp, body: &Mlp, input: ArrayView2<f64>, cond: ArrayView2<f64>) -> NetTrace {
    let e = embed.forward(cond.to_owned());
    let joined = concatenate(Axis(1), &[input, e.output().view()]).expect("matching batch sizes");
    NetTrace {
        embed: e,
        body: body.forward(joined),
    }
}

/// Pushes a gradient with respect to the body's first pre-activation into
/// the embedding net, returning the gradient with respect to the body's
/// non-embedding input columns.
fn backward_through_embedding(
    embed: &Mlp,
    body: &Mlp,
    trace: &NetTrace,
    first_pre_grad: &Array2<f64>,
    input_cols: usize,
    grads: &mut NetGrads,
) -> Array2<f64> {
    let width = body.input_dim();
    let embed_grad = body.project_to_input(first_pre_grad, input_cols..width);
    embed.backward(&trace.embed, &embed_grad, Some(&mut grads.embed));
    body.project_to_input(first_pre_grad, 0..input_cols)
}

impl Generator {
    pub fn new(arch: &Architecture, noise_dim: usize, pixels: usize, rng: &mut StreamRng) -> Self {
        let embed = arch.embedding(rng);
        let body = arch.body(noise_dim + arch.embed_dim, pixels, Activation::Tanh, rng);
        Self { embed, body, noise_dim }
    }

    pub fn pixels(&self) -> usize {
        self.body.output_dim()
    }

    pub fn num_params(&self) -> usize {
        self.embed.num_params() + self.body.num_params()
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        tensors_of(&self.embed, &self.body)
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        tensors_mut_of(&mut self.embed, &mut self.body)
    }

    pub fn zero_grads(&self) -> NetGrads {
        NetGrads {
            embed: MlpGrads::zeros_like(&self.embed),
            body: MlpGrads::zeros_like(&self.body),
        }
    }

    pub fn forward(&self, noise: ArrayView2<f64>, cond: ArrayView2<f64>) -> NetTrace {
        forward_pair(&self.embed, &self.body, noise, cond)
    }

    pub fn generate(&self, noise: ArrayView2<f64>, cond: ArrayView2<f64>) -> Array2<f64> {
        let e = self.embed.predict(cond);
        let joined = concatenate(Axis(1), &[noise, e.view()]).expect("matching batch sizes");
        self.body.predict(joined.view())
    }

    fn backward(&self, trace: &NetTrace, grad_out: &Array2<f64>, grads: &mut NetGrads) {
        let first = self.body.backward(&trace.body, grad_out, Some(&mut grads.body));
        backward_through_embedding(&self.embed, &self.body, trace, &first, self.noise_dim, grads);
    }
}

impl Critic {
    pub fn new(arch: &Architecture, pixels: usize, rng: &mut StreamRng) -> Self {
        let embed = arch.embedding(rng);
        let body = arch.body(pixels + arch.embed_dim, 1, Activation::Identity, rng);
        Self { embed, body, pixels }
    }

    pub fn num_params(&self) -> usize {
        self.embed.num_params() + self.body.num_params()
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        tensors_of(&self.embed, &self.body)
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        tensors_mut_of(&mut self.embed, &mut self.body)
    }

    pub fn zero_grads(&self) -> NetGrads {
        NetGrads {
            embed: MlpGrads::zeros_like(&self.embed),
            body: MlpGrads::zeros_like(&self.body),
        }
    }

    pub fn forward(&self, images: ArrayView2<f64>, cond: ArrayView2<f64>) -> NetTrace {
        forward_pair(&self.embed, &self.body, images, cond)
    }

    pub fn score(&self, images: ArrayView2<f64>, cond: ArrayView2<f64>) -> Array1<f64> {
        self.forward(images, cond).output().column(0).to_owned()
    }

    /// Per-sample gradient of the score with respect to the image.
    pub fn image_gradient(&self, trace: &NetTrace) -> InputGradient {
        self.body.input_gradient(&trace.body, 0..self.pixels)
    }
}

/// Terms of one critic evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticLoss {
    pub total: f64,
    /// `mean f(fake) - mean f(real)`.
    pub wasserstein: f64,
    /// Mean squared deviation of the interpolate gradient norm from 1,
    /// before multiplying by lambda.
    pub gradient_penalty: f64,
}

/// Points on the segments between paired real and fake samples.
pub fn interpolates(real: ArrayView2<f64>, fake: ArrayView2<f64>, mix: &[f64]) -> Array2<f64> {
    let mut out = fake.to_owned();
    for ((mut o, r), &u) in out.rows_mut().into_iter().zip(real.rows()).zip(mix) {
        o.zip_mut_with(&r, |f, &r| *f = u * r + (1.0 - u) * *f);
    }
    out
}

fn diverged(reason: &str) -> Error {
    Error::Diverged {
        step: 0,
        reason: reason.into(),
    }
}

/// WGAN-GP critic loss. `mix[i]` is the interpolation weight of real sample
/// `i`. Adds parameter gradients to `grads` when given.
pub fn critic_loss(
    critic: &Critic,
    real: ArrayView2<f64>,
    fake: ArrayView2<f64>,
    cond: ArrayView2<f64>,
    mix: &[f64],
    lambda: f64,
    grads: Option<&mut NetGrads>,
) -> Result<CriticLoss> {
    let batch = real.nrows();
    if batch == 0 || fake.nrows() != batch || cond.nrows() != batch || mix.len() != batch {
        return Err(Error::Shape {
            expected: format!("{batch} rows everywhere"),
            actual: format!("fake {}, cond {}, mix {}", fake.nrows(), cond.nrows(), mix.len()),
        });
    }
    let b = batch as f64;

    let both = concatenate(Axis(0), &[real, fake]).expect("same width");
    let cond2 = concatenate(Axis(0), &[cond, cond]).expect("same width");
    let wt = critic.forward(both.view(), cond2.view());
    let scores = wt.output().column(0);
    let wasserstein = scores.slice(s![batch..]).sum() / b - scores.slice(s![..batch]).sum() / b;

    let x_hat = interpolates(real, fake, mix);
    let gt = critic.forward(x_hat.view(), cond);
    let ig = critic.image_gradient(&gt);
    let norms: Vec<f64> = ig.grad.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    let gradient_penalty = norms.iter().map(|n| (n - 1.0).powi(2)).sum::<f64>() / b;

    let total = wasserstein + lambda * gradient_penalty;
    if !total.is_finite() {
        return Err(diverged("non-finite critic loss"));
    }

    if let Some(g) = grads {
        let mut out_grad = Array2::from_elem((2 * batch, 1), 1.0 / b);
        out_grad.slice_mut(s![..batch, ..]).fill(-1.0 / b);
        let first = critic.body.backward(&wt.body, &out_grad, Some(&mut g.body));
        backward_through_embedding(&critic.embed, &critic.body, &wt, &first, critic.pixels, g);

        // d/dg of lambda/B * sum (|g| - 1)^2; the kink at |g| = 0 gets the
        // zero subgradient.
        let mut upstream = ig.grad.clone();
        for (mut row, &n) in upstream.rows_mut().into_iter().zip(&norms) {
            let k = if n > 0.0 { lambda / b * 2.0 * (n - 1.0) / n } else { 0.0 };
            row.mapv_inplace(|v| k * v);
        }
        let first = critic
            .body
            .input_gradient_backward(&gt.body, &ig, &upstream, &mut g.body);
        backward_through_embedding(&critic.embed, &critic.body, &gt, &first, critic.pixels, g);
    }

    Ok(CriticLoss {
        total,
        wasserstein,
        gradient_penalty,
    })
}

/// `-mean f(G(z, c), c)`. Adds generator gradients to `grads` when given.
pub fn generator_loss(
    generator: &Generator,
    critic: &Critic,
    noise: ArrayView2<f64>,
    cond: ArrayView2<f64>,
    grads: Option<&mut NetGrads>,
) -> Result<f64> {
    let batch = noise.nrows();
    let b = batch as f64;
    let gt = generator.forward(noise, cond);
    let ct = critic.forward(gt.output().view(), cond);
    let loss = -ct.output().sum() / b;
    if !loss.is_finite() {
        return Err(diverged("non-finite generator loss"));
    }
    if let Some(g) = grads {
        let out_grad = Array2::from_elem((batch, 1), -1.0 / b);
        let first = critic.body.backward(&ct.body, &out_grad, None);
        let image_grad = critic.body.project_to_input(&first, 0..critic.pixels);
        generator.backward(&gt, &image_grad, g);
    }
    Ok(loss)
}
