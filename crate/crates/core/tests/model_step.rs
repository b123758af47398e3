//! One optimizer step on each side of the game, against a frozen opponent.

use condgan::dataset::one_hot;
use condgan::imaging::normal_tensor;
use condgan::model::{discriminator_forward, progressive_blend, wgan_g_loss, GeneratorConfig, ModelPair, NoiseSource};
use condgan::rng::stream;
use condgan_autograd::{grad, Adam, AdamConfig, Tensor};

fn config(classes: usize) -> GeneratorConfig {
    GeneratorConfig {
        latent_dim: 8,
        classes,
        mapping_depth: 2,
        max_resolution: 8,
        channels: [(4, 8), (8, 8)].into(),
        ..Default::default()
    }
}

fn mean_fake_score(m: &ModelPair, z: &Tensor, y: &Tensor, phase: usize, alpha: f64) -> f64 {
    let g = m.g_params.bind(false);
    let w = m.latents(&g, z, y).unwrap().w;
    let fake = m.generator.synthesize(&g, &w, NoiseSource::PerSample(4), phase, alpha).unwrap();
    discriminator_forward(m, &fake, y, phase, alpha).unwrap().mean().item()
}

#[test]
fn generator_step_raises_frozen_critic_score() {
    for (seed, classes, phase, alpha) in [(0, 2, 1, 1.0), (1, 0, 1, 0.5), (2, 3, 0, 1.0), (3, 2, 1, 0.25)] {
        let mut m = ModelPair::new(config(classes), seed).unwrap();
        let z = normal_tensor(&[6, 8], &mut stream(seed, &[100]));
        let y = one_hot(&[0, 1, 0, 1, 0, 1].map(|k| if classes == 0 { 0 } else { k % classes }), classes);
        let critic_before = m.d_params.clone();
        let before = mean_fake_score(&m, &z, &y, phase, alpha);

        let g = m.g_params.bind(true);
        let w = m.latents(&g, &z, &y).unwrap().w;
        let fake = m.generator.synthesize(&g, &w, NoiseSource::PerSample(4), phase, alpha).unwrap();
        let d = m.d_params.bind(false);
        let loss = wgan_g_loss(&m.discriminator.forward(&d, &fake, &y, phase, alpha).unwrap());
        let grads = grad(&loss, &g.tensors(), false);
        let mut opt = Adam::new(&m.g_params, AdamConfig { lr: 1e-4, beta1: 0.0, beta2: 0.99, eps: 1e-8 });
        opt.update(&mut m.g_params, &grads);

        assert_eq!(m.d_params, critic_before);
        let after = mean_fake_score(&m, &z, &y, phase, alpha);
        assert!(after > before, "seed {seed}: critic score {before} → {after}");
    }
}

#[test]
fn blend_is_affine_in_alpha() {
    let mut rng = stream(12, &[]);
    let low = normal_tensor(&[2, 3, 4, 4], &mut rng);
    let high = normal_tensor(&[2, 3, 4, 4], &mut rng);
    let at0 = progressive_blend(&low, &high, 0.0).unwrap();
    let at1 = progressive_blend(&low, &high, 1.0).unwrap();
    assert_eq!(at0.to_vec(), low.to_vec());
    assert_eq!(at1.to_vec(), high.to_vec());
    for alpha in [0.1, 0.25, 0.5, 0.9] {
        let mid = progressive_blend(&low, &high, alpha).unwrap();
        for ((m, a), b) in mid.data().iter().zip(at0.data()).zip(at1.data()) {
            assert!((m - ((1.0 - alpha) * a + alpha * b)).abs() < 1e-12);
        }
    }
    assert!(progressive_blend(&low, &high, 1.5).is_err());
}

#[test]
fn critic_depends_on_image_and_condition() {
    let m = ModelPair::new(config(2), 6).unwrap();
    let x = normal_tensor(&[2, 3, 8, 8], &mut stream(6, &[1]));
    let a = discriminator_forward(&m, &x, &one_hot(&[0, 0], 2), 1, 1.0).unwrap().to_vec();
    let b = discriminator_forward(&m, &x, &one_hot(&[1, 1], 2), 1, 1.0).unwrap().to_vec();
    assert_ne!(a, b);
    assert_ne!(a[0], a[1]);
}
