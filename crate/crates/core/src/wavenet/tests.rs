use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;

fn small() -> WaveNetConfig {
    WaveNetConfig {
        dilation_cycle: 2,
        ..WaveNetConfig::toy(3, 4, 3)
    }
}

fn random_cond(frames: usize, channels: usize, spf: usize, seed: u64) -> Conditioning<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = Array2::from_shape_fn((frames, channels), |_| rng.random_range(-1.0..1.0));
    Conditioning::new(data, (0..frames * spf).map(|t| t / spf).collect()).unwrap()
}

fn random_wave(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-0.5..0.5)).collect()
}

#[test]
fn softmax_rows_normalised() {
    let net = WaveNet::<f64>::init(small(), 1).unwrap();
    let cond = random_cond(4, 3, 8, 2);
    let logits = net.logits(&random_wave(32, 3), &cond).unwrap();
    assert_eq!(logits.dim(), (32, 256));
    for row in softmax_rows(&logits).rows() {
        assert!((row.sum() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn causal_at_random_positions() {
    let net = WaveNet::<f64>::init(small(), 4).unwrap();
    let cond = random_cond(8, 3, 8, 5);
    let x = random_wave(64, 6);
    let base = net.logits(&x, &cond).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3 {
        let t = rng.random_range(1..63);
        let mut y = x.clone();
        y[t] += 0.3;
        let out = net.logits(&y, &cond).unwrap();
        for p in 0..t {
            assert_eq!(out.row(p), base.row(p), "position {p} moved after perturbing {t}");
        }
        assert_ne!(out.row(t), base.row(t));
    }
}

fn influenced_outputs(net: &WaveNet<f64>, len: usize, at: usize) -> Vec<usize> {
    let cond = random_cond(1, net.config().cond_channels, len, 8);
    // Small amplitudes keep the gates away from saturation, where a
    // perturbation could vanish in rounding.
    let x: Vec<f64> = random_wave(len, 9).iter().map(|v| v * 0.01).collect();
    let base = net.logits(&x, &cond).unwrap();
    let mut y = x.clone();
    y[at] += 1e-3;
    let out = net.logits(&y, &cond).unwrap();
    (0..len).filter(|&p| out.row(p) != base.row(p)).collect()
}

#[test]
fn receptive_field_matches_probe() {
    let net = WaveNet::<f64>::init(small(), 10).unwrap();
    let rf = net.config().receptive_field();
    assert_eq!(rf, 1 + 2 + 2 * (1 + 2 + 1));
    let hit = influenced_outputs(&net, 40, 5);
    assert_eq!(hit, (5..5 + rf).collect::<Vec<_>>());
    assert_eq!(influenced_outputs(&net, 40, 0)[0], 0);
}

#[test]
fn conditioning_locality() {
    let net = WaveNet::<f64>::init(small(), 11).unwrap();
    let cond = random_cond(6, 3, 8, 12);
    let x = random_wave(48, 13);
    let base = net.logits(&x, &cond).unwrap();
    let mut frames = cond.frames().clone();
    frames.row_mut(3).mapv_inplace(|v| v + 1.0);
    let moved = Conditioning::new(frames, cond.frame_index().to_vec()).unwrap();
    let out = net.logits(&x, &moved).unwrap();
    for p in 0..48 {
        if p < 3 * 8 {
            assert_eq!(out.row(p), base.row(p));
        }
    }
    assert_ne!(out.row(24), base.row(24));
}

#[test]
fn input_validation() {
    let net = WaveNet::<f64>::init(small(), 1).unwrap();
    let cond = random_cond(2, 3, 4, 1);
    assert!(matches!(net.logits(&[0.0; 7], &cond), Err(Error::InvalidArgument(_))));
    let wide = random_cond(2, 5, 4, 1);
    assert!(matches!(net.logits(&[0.0; 8], &wide), Err(Error::ShapeMismatch(_))));
    let mut bad = net.clone();
    bad.out1_b[0] = f64::INFINITY;
    assert!(matches!(bad.logits(&[0.0; 8], &cond), Err(Error::InvalidWeights(_))));
}

/// Adds uniform noise to every parameter so biases are non-zero too.
fn jittered(mut net: WaveNet<f64>, seed: u64) -> WaveNet<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in net.tensors_mut() {
        for v in t {
            *v += rng.random_range(-0.2..0.2);
        }
    }
    net
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let cfg = WaveNetConfig::toy(2, 4, 3);
    let net = jittered(WaveNet::<f64>::init(cfg, 41).unwrap(), 41);
    let batch = vec![TrainExample {
        wave: random_wave(24, 42),
        cond: random_cond(3, 3, 8, 43),
    }];
    let (inputs, _) = teacher_forcing::<f64>(&batch[0].wave, &MuLawParams::default());
    // Finite differences are only valid away from ReLU kinks.
    assert!(net.relu_margin(&inputs, &batch[0].cond) > 1e-2);
    let (_, grad) = batch_loss_and_gradient(&net, &batch).unwrap();
    let h = 1e-4;
    let analytic: Vec<f64> = grad.tensors().concat();
    let mut worst = 0.0f64;
    let n = analytic.len();
    for i in 0..n {
        let shifted = |delta: f64| {
            let mut p = net.clone();
            let mut k = i;
            for t in p.tensors_mut() {
                if k < t.len() {
                    t[k] += delta;
                    break;
                }
                k -= t.len();
            }
            batch_loss_and_gradient(&p, &batch).unwrap().0
        };
        let numeric = (shifted(h) - shifted(-h)) / (2.0 * h);
        let a = analytic[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    assert!(worst < 1e-4, "max relative error {worst}");
}

#[test]
fn random_init_loss_near_uniform() {
    let cfg = WaveNetConfig::toy(4, 16, 8);
    let net = WaveNet::<f64>::init(cfg, 30).unwrap();
    let batch = vec![TrainExample {
        wave: random_wave(256, 31),
        cond: random_cond(4, 8, 64, 32),
    }];
    let (loss, _) = batch_loss_and_gradient(&net, &batch).unwrap();
    assert!((loss - 256f64.ln()).abs() < 0.2, "{loss}");
}

#[test]
fn stream_matches_teacher_forcing() {
    let net = WaveNet::<f64>::init(small(), 40).unwrap();
    let cond = random_cond(5, 3, 12, 41);
    let mut stream = GenerationStream::new(&net, &cond).unwrap();
    let mut codes = Vec::new();
    let mut wave = Vec::new();
    while stream.remaining() > 0 {
        let (x, c) = stream.step(SamplingMode::Greedy).unwrap();
        wave.push(x);
        codes.push(c);
    }
    let mut inputs = vec![0.0];
    inputs.extend_from_slice(&wave[..wave.len() - 1]);
    let logits = net.logits(&inputs, &cond).unwrap();
    for (t, row) in logits.rows().into_iter().enumerate() {
        assert_eq!(crate::tf::argmax(row.iter().copied()), codes[t] as usize);
    }
    let greedy = generate(&net, &cond, SamplingMode::Greedy, Direction::Forward).unwrap();
    assert_eq!(greedy, wave);
}

#[test]
fn sampling_is_deterministic_per_seed() {
    let net = WaveNet::<f32>::init(small(), 50).unwrap();
    let cond = random_cond(4, 3, 16, 51).cast::<f32>();
    let a = generate(&net, &cond, SamplingMode::Sample { seed: 7 }, Direction::Forward).unwrap();
    let b = generate(&net, &cond, SamplingMode::Sample { seed: 7 }, Direction::Forward).unwrap();
    let c = generate(&net, &cond, SamplingMode::Sample { seed: 8 }, Direction::Forward).unwrap();
    assert_eq!(a.len(), 64);
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn forked_stream_continues_identically() {
    let net = WaveNet::<f64>::init(small(), 55).unwrap();
    let cond = random_cond(4, 3, 16, 56);
    let mode = SamplingMode::Sample { seed: 3 };
    let mut s = GenerationStream::new(&net, &cond).unwrap();
    let head = s.advance(20, mode).unwrap();
    let mut fork = s.clone();
    let tail = s.advance(100, mode).unwrap();
    assert_eq!(tail.len(), 44);
    assert_eq!(fork.advance(44, mode).unwrap(), tail);
    let full = generate(&net, &cond, mode, Direction::Forward).unwrap();
    assert_eq!(full, [head, tail].concat());
}

#[test]
fn reverse_generation_flips() {
    let net = WaveNet::<f64>::init(small(), 60).unwrap();
    let cond = random_cond(4, 3, 10, 61);
    let mode = SamplingMode::Sample { seed: 1 };
    let mut fwd = generate(&net, &cond.reversed(), mode, Direction::Forward).unwrap();
    fwd.reverse();
    assert_eq!(generate(&net, &cond, mode, Direction::Reverse).unwrap(), fwd);
}

#[test]
fn overflowing_logits_reported_with_position() {
    let mut net = WaveNet::<f32>::init(small(), 70).unwrap();
    net.out1_w.fill(0.0);
    net.out1_b.fill(1.0);
    net.out2_b.fill(3e38);
    net.out2_w.fill(3e38);
    let cond = random_cond(2, 3, 4, 71).cast::<f32>();
    let err = generate(&net, &cond, SamplingMode::Greedy, Direction::Forward).unwrap_err();
    assert!(matches!(err, Error::NumericFailure { position: Some(0), .. }), "{err}");
}

#[test]
fn ema_arithmetic_and_convergence() {
    let cfg = WaveNetConfig::toy(1, 2, 2);
    let mut ema = WaveNet::<f64>::zeros(cfg).unwrap();
    ema.out2_b.fill(1.0);
    let w = WaveNet::<f64>::zeros(cfg).unwrap();
    ema_update(&mut ema, &w, 0.999);
    assert!((ema.out2_b[0] - 0.999).abs() < 1e-15);

    let target = WaveNet::<f64>::init(cfg, 1).unwrap();
    let mut shadow = WaveNet::<f64>::init(cfg, 2).unwrap();
    let gap = |s: &WaveNet<f64>| -> f64 {
        s.tensors()
            .iter()
            .zip(target.tensors())
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    };
    let start = gap(&shadow);
    for _ in 0..100 {
        ema_update(&mut shadow, &target, 0.999);
    }
    let expected = start * 0.999f64.powi(100);
    assert!((gap(&shadow) - expected).abs() < 1e-12 * start.max(1.0));
}

#[test]
fn trainer_reduces_loss() {
    let cfg = WaveNetConfig::toy(2, 8, 3);
    let net = WaveNet::<f32>::init(cfg, 80).unwrap();
    let tc = TrainConfig {
        learning_rate: 3e-3,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(net, tc).unwrap();
    let wave: Vec<f64> = (0..128).map(|t| 0.5 * (t as f64 * 0.3).sin()).collect();
    let batch = vec![TrainExample {
        wave,
        cond: random_cond(2, 3, 64, 81).cast::<f32>(),
    }];
    let first = trainer.step(&batch).unwrap();
    let mut last = first;
    for _ in 0..60 {
        last = trainer.step(&batch).unwrap();
    }
    assert!(last < 0.7 * first, "{first} -> {last}");
    assert_eq!(trainer.opt.step, 61);
    assert_ne!(trainer.ema, trainer.net);
}

#[test]
fn teacher_forcing_shifts_by_one() {
    let mulaw = MuLawParams::default();
    let (inputs, targets) = teacher_forcing::<f64>(&[0.5, -0.25, 1.0], &mulaw);
    assert_eq!(inputs.len(), 3);
    assert_eq!(inputs[0], 0.0);
    assert_eq!(inputs[1], mulaw.decode(targets[0]).unwrap());
    assert_eq!(inputs[2], mulaw.decode(targets[1]).unwrap());
    assert_eq!(targets[2], 255);
}

#[test]
fn clip_windows_and_gain() {
    let wave: Vec<f64> = (0..40).map(|t| t as f64 / 100.0).collect();
    let mag = Array2::from_shape_fn((5, 2), |(t, c)| (t + c + 1) as f64);
    let clip = TrainingClip::new(wave, mag, 10, 1e-5).unwrap();
    let ex = clip.example::<f64>(15, 10, 0.5, 2.0, false).unwrap();
    assert_eq!(ex.wave[0], 0.075);
    assert_eq!(ex.cond.len(), 10);
    assert_eq!(ex.cond.frame_of(0), 0);
    assert_eq!(ex.cond.frame_of(5), 1);
    assert!((ex.cond.row(0)[0] - ((0.5 * 2.0 + 1e-5f64).ln() + 2.0)).abs() < 1e-12);
    let rev = clip.example::<f64>(15, 10, 0.5, 2.0, true).unwrap();
    assert_eq!(rev.wave[0], ex.wave[9]);
    assert_eq!(rev.cond.row(0), ex.cond.row(9));
    assert!(clip.example::<f64>(35, 10, 1.0, 0.0, false).is_err());
}

#[test]
fn sampler_rescales_peaks() {
    let wave: Vec<f64> = (0..300).map(|t| 0.8 * (t as f64 * 0.1).sin()).collect();
    let mag = Array2::from_elem((3, 2), 1.0);
    let clip = TrainingClip::new(wave, mag, 100, 1e-5).unwrap();
    let cfg = TrainConfig {
        sample_length: 120,
        batch_size: 16,
        ..TrainConfig::default()
    };
    let batch = BatchSampler::new(1).batch::<f32>(&[clip], &cfg).unwrap();
    assert_eq!(batch.len(), 16);
    for ex in batch {
        assert_eq!(ex.wave.len(), 120);
        let peak = ex.wave.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!((0.1 - 1e-12..=1.0 + 1e-12).contains(&peak), "{peak}");
    }
}

#[test]
fn weight_file_round_trip() {
    let cfg = small();
    let net = WaveNet::<f32>::init(cfg, 90).unwrap();
    let ema = WaveNet::<f32>::init(cfg, 91).unwrap();
    let w = WaveNetWeights { net, ema: Some(ema) };
    let bytes = w.to_bytes();
    assert_eq!(&bytes[..4], b"TTWN");
    assert_eq!(WaveNetWeights::from_bytes(&bytes, Some(&cfg)).unwrap(), w);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.ttwn");
    save_weights(&path, &w).unwrap();
    assert_eq!(load_weights(&path, None).unwrap(), w);

    let bare = WaveNetWeights { net: w.net.clone(), ema: None };
    assert_eq!(WaveNetWeights::from_bytes(&bare.to_bytes(), None).unwrap(), bare);
}

#[test]
fn weight_file_errors() {
    let cfg = small();
    let w = WaveNetWeights {
        net: WaveNet::<f32>::init(cfg, 92).unwrap(),
        ema: None,
    };
    let bytes = w.to_bytes();
    let corrupt = |b: &[u8]| matches!(WaveNetWeights::from_bytes(b, None), Err(Error::CorruptFile(_)));
    assert!(corrupt(&bytes[..bytes.len() - 9]));
    assert!(corrupt(&bytes[..10]));
    let mut flipped = bytes.clone();
    flipped[60] ^= 1;
    assert!(corrupt(&flipped));
    let mut magic = bytes.clone();
    magic[0] = b'X';
    assert!(corrupt(&magic));
    let other = WaveNetConfig::toy(3, 8, 3);
    assert!(matches!(
        WaveNetWeights::from_bytes(&bytes, Some(&other)),
        Err(Error::ShapeMismatch(_))
    ));
}
