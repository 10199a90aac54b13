use chanimg_core::genmodel::{train_wgan_gp, Activation, Architecture, ResamplerConfig};
use chanimg_core::rng::derive_seed;
use chanimg_core::stats::{feature_values, ks_statistic, LinkFeature};
use chanimg_core::{
    generate_dataset, Codec, CodecParams, ConditionVector, EmpiricalResampler, GenerativeBackend, SurrogateConfig,
    TrainingSet, WganGpHyperparams,
};
use ndarray::Array2;

fn small_hyper(pixels: [usize; 2]) -> WganGpHyperparams {
    WganGpHyperparams {
        learning_rate: 1e-3,
        batch_size: 64,
        image_shape: pixels,
        noise_dim: 8,
        architecture: Architecture {
            embed_hidden: 8,
            embed_dim: 4,
            hidden: vec![64, 64],
            activation: Activation::LeakyRelu { slope: 0.2 },
        },
        ..WganGpHyperparams::default()
    }
}

#[test]
fn identical_images_collapse_to_the_target() {
    let links = generate_dataset(&SurrogateConfig {
        num_tx: 2,
        num_rx_per_height: 2,
        ..Default::default()
    })
    .unwrap();
    let codec = Codec::fit(&links, CodecParams::default(), 0).unwrap();
    let (images, _) = codec.encode_dataset(&links, 0).unwrap();
    let target = &images[3];
    let cond = links[3].condition().unwrap();

    let n = 128;
    let rows = Array2::from_shape_fn((n, target.pixels().len()), |(_, j)| target.pixels()[j]);
    let set = TrainingSet::new(rows, vec![cond; n]).unwrap();
    let mut hyper = small_hyper([64, 50]);
    hyper.batch_size = 32;
    hyper.learning_rate = 2e-4;
    hyper.epochs = 600;
    let (model, _) = train_wgan_gp(&set, &hyper, 4).unwrap();

    let samples = model.sample_pixels(&cond, 200, 9);
    let mean = samples.mean_axis(ndarray::Axis(0)).unwrap();
    let worst = mean
        .iter()
        .zip(target.pixels())
        .map(|(m, t)| (m - t).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.05, "worst per-pixel gap {worst}");
}

#[test]
fn toy_model_samples_average_to_their_targets() {
    let n = 512;
    let pixels = 64 * 50;
    let a = ConditionVector::new(50.0, 1.6).unwrap();
    let b = ConditionVector::new(400.0, 120.0).unwrap();
    let images = Array2::from_shape_fn((n, pixels), |(i, _)| if i % 2 == 0 { 0.5 } else { -0.5 });
    let conds = (0..n).map(|i| if i % 2 == 0 { a } else { b }).collect();
    let set = TrainingSet::new(images, conds).unwrap();
    let mut hyper = small_hyper([64, 50]);
    hyper.epochs = 20;
    let (model, _) = train_wgan_gp(&set, &hyper, 8).unwrap();

    for (cond, target) in [(a, 0.5), (b, -0.5)] {
        let samples = model.sample(&cond, 1000, 17).unwrap();
        assert_eq!(samples.len(), 1000);
        let mean = samples.iter().flat_map(|s| s.pixels()).sum::<f64>() / (1000 * pixels) as f64;
        assert!((mean - target).abs() <= 0.1, "target {target}: mean {mean}");
    }
}

#[test]
fn resampled_pathloss_matches_held_out_data_at_street_level() {
    let train = generate_dataset(&SurrogateConfig {
        seed: 1,
        ..Default::default()
    })
    .unwrap();
    assert_eq!(train.len(), 5000);
    let held = generate_dataset(&SurrogateConfig {
        seed: 2,
        ..Default::default()
    })
    .unwrap();
    let codec = Codec::fit(&train, CodecParams::default(), 1).unwrap();
    let (images, _) = codec.encode_dataset(&train, 1).unwrap();
    let conds = train.iter().map(|l| l.condition().unwrap()).collect();
    let model = EmpiricalResampler::fit(
        TrainingSet::from_images(&images, conds).unwrap(),
        ResamplerConfig::default(),
    )
    .unwrap();

    let decoded: Vec<_> = held
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let img = model
                .sample(&l.condition().unwrap(), 1, derive_seed(5, i as u64))
                .unwrap()
                .remove(0);
            codec.decode(&img, &l.geometry()).unwrap()
        })
        .collect();
    let m = feature_values(&decoded, 1.6, LinkFeature::Pathloss).unwrap();
    let d = feature_values(&held, 1.6, LinkFeature::Pathloss).unwrap();
    let ks = ks_statistic(&m, &d).unwrap();
    assert!(ks <= 0.05, "ks = {ks}");
}
