use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::networks::{critic_loss, generator_loss, Architecture, ConditionNormalizer, Critic, Generator};
use super::TrainingSet;
use crate::channel::ConditionVector;
use crate::codec::{IMAGE_COLS, IMAGE_ROWS};
use crate::error::{Error, Result};
use crate::rng::{substream, Stream, StreamRng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WganGpHyperparams {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Rows and columns of the (single-channel) image.
    pub image_shape: [usize; 2],
    pub gp_lambda: f64,
    pub critic_steps_per_gen_step: usize,
    pub noise_dim: usize,
    pub architecture: Architecture,
}

impl Default for WganGpHyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 5e-5,
            adam_beta1: 0.5,
            adam_beta2: 0.9,
            adam_epsilon: 1e-8,
            epochs: 10,
            batch_size: 256,
            image_shape: [IMAGE_ROWS, IMAGE_COLS],
            gp_lambda: 10.0,
            critic_steps_per_gen_step: 5,
            noise_dim: 64,
            architecture: Architecture::default(),
        }
    }
}

impl WganGpHyperparams {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.learning_rate, self.gp_lambda, self.adam_epsilon]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        let counts = [
            self.epochs,
            self.batch_size,
            self.image_shape[0],
            self.image_shape[1],
            self.critic_steps_per_gen_step,
            self.noise_dim,
        ];
        if !positive || counts.contains(&0) {
            return Err(Error::Config("WGAN-GP hyperparameters must be positive".into()));
        }
        for beta in [self.adam_beta1, self.adam_beta2] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::Config(format!("Adam beta {beta} outside [0, 1)")));
            }
        }
        self.architecture.validate()
    }

    pub fn pixels(&self) -> usize {
        self.image_shape[0] * self.image_shape[1]
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }
}

/// One row per generator step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub step: u64,
    pub epoch: usize,
    /// Mean over the critic updates preceding this generator step.
    pub critic_loss: f64,
    pub gen_loss: f64,
    /// Mean unweighted gradient penalty over the same critic updates.
    pub gp_term: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub generator_params: usize,
    pub critic_params: usize,
    pub entries: Vec<LogEntry>,
}

/// A trained conditional WGAN-GP.
#[derive(Clone, Debug, PartialEq)]
pub struct WganGp {
    pub hyper: WganGpHyperparams,
    pub normalizer: ConditionNormalizer,
    pub generator: Generator,
    pub critic: Critic,
}

fn normal_matrix(rows: usize, cols: usize, rng: &mut StreamRng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

/// Trains from scratch. The run is a pure function of the data, the
/// hyperparameters and the seed.
pub fn train_wgan_gp(data: &TrainingSet, hyper: &WganGpHyperparams, seed: u64) -> Result<(WganGp, TrainingLog)> {
    hyper.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.pixels() != hyper.pixels() {
        return Err(Error::Shape {
            expected: format!("{} pixels per image", hyper.pixels()),
            actual: format!("{} pixels", data.pixels()),
        });
    }
    let n = data.len();
    let batch = hyper.batch_size;
    if n < batch {
        return Err(Error::Config(format!(
            "{n} training images is fewer than one batch of {batch}"
        )));
    }

    let normalizer = ConditionNormalizer::fit(&data.conditions)?;
    let conds = normalizer.normalize_all(&data.conditions);

    let mut init = substream(seed, Stream::Init, 0);
    let mut generator = Generator::new(&hyper.architecture, hyper.noise_dim, hyper.pixels(), &mut init);
    let mut critic = Critic::new(&hyper.architecture, hyper.pixels(), &mut init);
    let mut gen_grads = generator.zero_grads();
    let mut critic_grads = critic.zero_grads();
    let sizes = |t: Vec<&[f64]>| t.iter().map(|x| x.len()).collect::<Vec<_>>();
    let mut gen_adam = AdamState::new(&sizes(generator.tensors()));
    let mut critic_adam = AdamState::new(&sizes(critic.tensors()));
    let adam = hyper.adam();

    let mut log = TrainingLog {
        generator_params: generator.num_params(),
        critic_params: critic.num_params(),
        entries: Vec::new(),
    };
    let mut shuffle = substream(seed, Stream::Batching, 0);
    let mut noise_rng = substream(seed, Stream::Training, 0);
    let mut order: Vec<usize> = (0..n).collect();
    let mut step = 0u64;
    let at_step = |e: Error, step: u64| match e {
        Error::Diverged { reason, .. } => Error::Diverged { step, reason },
        other => other,
    };

    for epoch in 0..hyper.epochs {
        order.shuffle(&mut shuffle);
        for chunk in order.chunks_exact(batch) {
            let real = data.images.select(Axis(0), chunk);
            let cond = conds.select(Axis(0), chunk);

            let (mut critic_sum, mut gp_sum) = (0.0, 0.0);
            for _ in 0..hyper.critic_steps_per_gen_step {
                let noise = normal_matrix(batch, hyper.noise_dim, &mut noise_rng);
                let mix: Vec<f64> = (0..batch).map(|_| noise_rng.random()).collect();
                let fake = generator.generate(noise.view(), cond.view());
                critic_grads.fill_zero();
                let loss = critic_loss(
                    &critic,
                    real.view(),
                    fake.view(),
                    cond.view(),
                    &mix,
                    hyper.gp_lambda,
                    Some(&mut critic_grads),
                )
                .map_err(|e| at_step(e, step))?;
                adam_step(
                    &mut critic.tensors_mut(),
                    &critic_grads.tensors(),
                    &mut critic_adam,
                    &adam,
                )
                .map_err(|e| at_step(e, step))?;
                critic_sum += loss.total;
                gp_sum += loss.gradient_penalty;
            }

            let noise = normal_matrix(batch, hyper.noise_dim, &mut noise_rng);
            gen_grads.fill_zero();
            let gen_loss = generator_loss(&generator, &critic, noise.view(), cond.view(), Some(&mut gen_grads))
                .map_err(|e| at_step(e, step))?;
            adam_step(&mut generator.tensors_mut(), &gen_grads.tensors(), &mut gen_adam, &adam)
                .map_err(|e| at_step(e, step))?;

            let k = hyper.critic_steps_per_gen_step as f64;
            log.entries.push(LogEntry {
                step,
                epoch,
                critic_loss: critic_sum / k,
                gen_loss,
                gp_term: gp_sum / k,
            });
            step += 1;
        }
    }

    Ok((
        WganGp {
            hyper: hyper.clone(),
            normalizer,
            generator,
            critic,
        },
        log,
    ))
}

const SAMPLE_CHUNK: usize = 256;

impl WganGp {
    /// Checks that the networks agree with the hyperparameters and hold only
    /// finite numbers.
    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        let g = &self.generator;
        let c = &self.critic;
        let consistent = g.noise_dim == self.hyper.noise_dim
            && g.pixels() == self.hyper.pixels()
            && c.pixels == self.hyper.pixels()
            && g.body.input_dim() == g.noise_dim + g.embed.output_dim()
            && c.body.input_dim() == c.pixels + c.embed.output_dim()
            && c.body.output_dim() == 1
            && [&g.embed, &g.body, &c.embed, &c.body]
                .iter()
                .all(|m| m.layers.windows(2).all(|w| w[0].fan_out() == w[1].fan_in()));
        if !consistent {
            return Err(Error::Shape {
                expected: "networks matching the hyperparameters".into(),
                actual: "inconsistent layer shapes".into(),
            });
        }
        let finite = g
            .tensors()
            .iter()
            .chain(c.tensors().iter())
            .all(|t| t.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::Domain("non-finite network parameter".into()));
        }
        Ok(())
    }

    /// `n` samples under one condition, one row each. Row `i` depends only
    /// on `(seed, i, cond)`.
    pub fn sample_pixels(&self, cond: &ConditionVector, n: usize, seed: u64) -> Array2<f64> {
        let c = self.normalizer.normalize(cond);
        let mut out = Array2::zeros((n, self.hyper.pixels()));
        for start in (0..n).step_by(SAMPLE_CHUNK) {
            let rows = SAMPLE_CHUNK.min(n - start);
            let mut noise = Array2::zeros((rows, self.hyper.noise_dim));
            for (k, mut row) in noise.rows_mut().into_iter().enumerate() {
                let mut rng = substream(seed, Stream::Sampling, (start + k) as u64);
                row.mapv_inplace(|_| rng.sample(StandardNormal));
            }
            let cond_rows = Array2::from_shape_fn((rows, 2), |(_, j)| c[j]);
            let images = self.generator.generate(noise.view(), cond_rows.view());
            out.slice_mut(ndarray::s![start..start + rows, ..]).assign(&images);
        }
        out
    }

    /// Critic scores, mostly useful for diagnostics.
    pub fn score(&self, images: ArrayView2<f64>, conds: &[ConditionVector]) -> Vec<f64> {
        let c = self.normalizer.normalize_all(conds);
        self.critic.score(images, c.view()).to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genmodel::mlp::Activation;
    use crate::genmodel::networks::NetGrads;

    fn toy_hyper(pixels: usize) -> WganGpHyperparams {
        WganGpHyperparams {
            learning_rate: 1e-3,
            epochs: 40,
            batch_size: 32,
            image_shape: [1, pixels],
            noise_dim: 4,
            architecture: Architecture {
                embed_hidden: 8,
                embed_dim: 4,
                hidden: vec![32, 32],
                activation: Activation::LeakyRelu { slope: 0.2 },
            },
            ..WganGpHyperparams::default()
        }
    }

    fn toy_set(n: usize, pixels: usize) -> TrainingSet {
        let images = Array2::from_shape_fn((n, pixels), |(i, _)| if i % 2 == 0 { 0.5 } else { -0.5 });
        let conditions = (0..n)
            .map(|i| ConditionVector::new(if i % 2 == 0 { 50.0 } else { 400.0 }, 1.6).unwrap())
            .collect();
        TrainingSet::new(images, conditions).unwrap()
    }

    #[test]
    fn same_seed_same_log() {
        let mut h = toy_hyper(4);
        h.epochs = 2;
        let data = toy_set(64, 4);
        let (a, la) = train_wgan_gp(&data, &h, 5).unwrap();
        let (b, lb) = train_wgan_gp(&data, &h, 5).unwrap();
        assert_eq!(la, lb);
        assert_eq!(a, b);
        assert_eq!(la.entries.len(), 4);
        let (_, lc) = train_wgan_gp(&data, &h, 6).unwrap();
        assert_ne!(la, lc);
    }

    #[test]
    fn learns_two_conditions() {
        let data = toy_set(256, 4);
        let (model, _) = train_wgan_gp(&data, &toy_hyper(4), 11).unwrap();
        for (d, target) in [(50.0, 0.5), (400.0, -0.5)] {
            let s = model.sample_pixels(&ConditionVector::new(d, 1.6).unwrap(), 500, 3);
            let mean = s.mean().unwrap();
            assert!((mean - target).abs() < 0.1, "condition {d}: mean {mean}");
        }
    }

    #[test]
    fn samples_are_per_index_deterministic_and_bounded() {
        let mut h = toy_hyper(6);
        h.epochs = 1;
        let (model, _) = train_wgan_gp(&toy_set(64, 6), &h, 1).unwrap();
        let c = ConditionVector::new(100.0, 1.6).unwrap();
        let many = model.sample_pixels(&c, 300, 4);
        let few = model.sample_pixels(&c, 2, 4);
        assert_eq!(many.slice(ndarray::s![..2, ..]), few);
        assert!(many.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert_eq!(model.sample_pixels(&c, 0, 4).nrows(), 0);
    }

    #[test]
    fn too_small_dataset_is_a_config_error() {
        let h = toy_hyper(4);
        assert!(matches!(train_wgan_gp(&toy_set(8, 4), &h, 0), Err(Error::Config(_))));
        let empty = TrainingSet::new(Array2::zeros((0, 4)), vec![]).unwrap();
        assert!(matches!(train_wgan_gp(&empty, &h, 0), Err(Error::EmptyDataset)));
    }

    #[test]
    fn divergence_reports_the_step() {
        let mut h = toy_hyper(4);
        h.epochs = 1;
        let mut data = toy_set(64, 4);
        data.images[[7, 1]] = f64::INFINITY;
        match train_wgan_gp(&data, &h, 0) {
            Err(Error::Diverged { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    fn numeric_check(
        tensors: usize,
        len: impl Fn(usize) -> usize,
        mut perturb: impl FnMut(usize, usize, f64) -> f64,
        analytic: &NetGrads,
    ) {
        let h = 1e-6;
        let a = analytic.tensors();
        for t in 0..tensors {
            for i in 0..len(t) {
                let up = perturb(t, i, h);
                let down = perturb(t, i, -h);
                let fd = (up - down) / (2.0 * h);
                let an = a[t][i];
                let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-4);
                assert!(rel < 1e-4, "tensor {t} entry {i}: analytic {an} numeric {fd}");
            }
        }
    }

    #[test]
    fn full_losses_match_finite_differences() {
        let arch = Architecture {
            embed_hidden: 3,
            embed_dim: 2,
            hidden: vec![3, 2],
            activation: Activation::Tanh,
        };
        let mut rng = substream(21, Stream::Init, 0);
        let gen = Generator::new(&arch, 3, 4, &mut rng);
        let critic = Critic::new(&arch, 4, &mut rng);
        let b = 3;
        let noise = normal_matrix(b, 3, &mut rng);
        let cond = Array2::from_shape_simple_fn((b, 2), || 2.0 * rng.random::<f64>() - 1.0);
        let real = Array2::from_shape_simple_fn((b, 4), || 2.0 * rng.random::<f64>() - 1.0);
        let fake = gen.generate(noise.view(), cond.view());
        let mix = [0.2, 0.7, 0.45];

        let mut cg = critic.zero_grads();
        critic_loss(
            &critic,
            real.view(),
            fake.view(),
            cond.view(),
            &mix,
            10.0,
            Some(&mut cg),
        )
        .unwrap();
        let mut probe = critic.clone();
        let n = critic.tensors().len();
        numeric_check(
            n,
            |t| critic.tensors()[t].len(),
            |t, i, h| {
                let orig = probe.tensors()[t][i];
                probe.tensors_mut()[t][i] = orig + h;
                let v = critic_loss(&probe, real.view(), fake.view(), cond.view(), &mix, 10.0, None)
                    .unwrap()
                    .total;
                probe.tensors_mut()[t][i] = orig;
                v
            },
            &cg,
        );

        let mut gg = gen.zero_grads();
        generator_loss(&gen, &critic, noise.view(), cond.view(), Some(&mut gg)).unwrap();
        let mut probe = gen.clone();
        let n = gen.tensors().len();
        numeric_check(
            n,
            |t| gen.tensors()[t].len(),
            |t, i, h| {
                let orig = probe.tensors()[t][i];
                probe.tensors_mut()[t][i] = orig + h;
                let v = generator_loss(&probe, &critic, noise.view(), cond.view(), None).unwrap();
                probe.tensors_mut()[t][i] = orig;
                v
            },
            &gg,
        );
    }
}
