use candle_core::{DType, Device, IndexOp, Tensor, D};
use primasm_core::{PointCloud, TokenizedPrimitive};
use primasm_model::model::tokens_tensor;
use primasm_model::{Error, KnownAttributes, ModelConfig, PrimitiveTransformer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Seeded normal samples; candle's own `randn` is not seedable.
fn randn(rng: &mut ChaCha8Rng, std: f64, shape: &[usize], dtype: DType) -> Tensor {
    let n = shape.iter().product();
    let v: Vec<f64> = (0..n).map(|_| std * rng.sample::<f64, _>(StandardNormal)).collect();
    Tensor::from_vec(v, shape, &Device::Cpu).unwrap().to_dtype(dtype).unwrap()
}

fn small(seed: u64) -> ModelConfig {
    ModelConfig {
        layers: 2,
        hidden_size: 32,
        attention_heads: 4,
        condition_tokens: 8,
        condition_points: 64,
        init_seed: seed,
        ..Default::default()
    }
}

fn model(cfg: &ModelConfig) -> PrimitiveTransformer {
    PrimitiveTransformer::new(cfg, &Device::Cpu, DType::F32).unwrap()
}

fn cloud(rng: &mut ChaCha8Rng, n: usize) -> PointCloud {
    PointCloud::new(
        (0..n)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect(),
    )
    .unwrap()
}

fn random_token(rng: &mut ChaCha8Rng) -> TokenizedPrimitive {
    let mut three = |n: u32| [rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n)];
    let scale = three(128);
    let rotation = three(180);
    let translation = three(128);
    TokenizedPrimitive { class: rng.random_range(0..3), scale, rotation, translation }
}

fn max_abs_diff(a: &Tensor, b: &Tensor) -> f32 {
    (a - b).unwrap().abs().unwrap().flatten_all().unwrap().max(0).unwrap().to_scalar::<f32>().unwrap()
}

#[test]
fn condition_shape_is_fixed() {
    let cfg = small(0);
    let m = model(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [64, 100, 500] {
        let c = m.encode_cloud(&cloud(&mut rng, n)).unwrap();
        assert_eq!(c.dims(), &[8, 32]);
    }
    let few = PointCloud::new(vec![[0.0; 3]; 3]).unwrap();
    assert!(matches!(m.encode_cloud(&few), Err(Error::InsufficientInput(_))));
}

#[test]
fn condition_is_permutation_invariant() {
    let cfg = small(2);
    let m = model(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c = cloud(&mut rng, cfg.condition_points);
    let mut pts = c.points().to_vec();
    pts.reverse();
    pts.swap(3, 40);
    let a = m.encode_cloud(&c).unwrap();
    let b = m.encode_cloud(&PointCloud::new(pts).unwrap()).unwrap();
    assert!(max_abs_diff(&a, &b) < 1e-5);
}

#[test]
fn primitive_tokens() {
    let cfg = small(4);
    let m = model(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = random_token(&mut rng);
    let h = m.embed_primitive(&t).unwrap();
    assert_eq!(h.dims(), &[32]);
    assert_eq!(max_abs_diff(&h, &m.embed_primitive(&t).unwrap()), 0.0);
    let bad = TokenizedPrimitive { rotation: [180, 0, 0], ..t };
    assert!(matches!(m.embed_primitive(&bad), Err(Error::InvalidInput(_))));
}

#[test]
fn class_changes_primitive_token() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for seed in 0..1000 {
        let cfg = ModelConfig { layers: 1, hidden_size: 8, attention_heads: 1, condition_tokens: 1, condition_points: 4, max_sequence: 1, init_seed: seed, ..Default::default() };
        let m = model(&cfg);
        let t = random_token(&mut rng);
        let other = TokenizedPrimitive { class: (t.class + 1 + rng.random_range(0..2)) % 3, ..t };
        let d = max_abs_diff(&m.embed_primitive(&t).unwrap(), &m.embed_primitive(&other).unwrap());
        assert!(d > 0.0, "seed {seed}");
    }
}

#[test]
fn feature_count_follows_sequence_length() {
    let cfg = small(7);
    let m = model(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cond = m.encode_cloud(&cloud(&mut rng, 100)).unwrap().unsqueeze(0).unwrap();
    for len in [0, 1, 5, cfg.max_sequence] {
        let seq: Vec<_> = (0..len).map(|_| random_token(&mut rng)).collect();
        let h = m.embed_tokens(&tokens_tensor(&[seq], len, &Device::Cpu).unwrap()).unwrap();
        let f = m.forward_sequence(&cond, &h).unwrap();
        assert_eq!(f.dims(), &[1, len + 1, 32]);
    }
    let h = Tensor::zeros((1, cfg.max_sequence + 1, 32), DType::F32, &Device::Cpu).unwrap();
    assert!(matches!(m.forward_sequence(&cond, &h), Err(Error::Length { .. })));
}

#[test]
fn backbone_is_causal() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for seed in 0..5 {
        for bidirectional in [false, true] {
            let cfg = ModelConfig { bidirectional_condition: bidirectional, ..small(seed) };
            let m = model(&cfg);
            let cond = m.encode_cloud(&cloud(&mut rng, 80)).unwrap().unsqueeze(0).unwrap();
            let len = 6;
            let seq: Vec<_> = (0..len).map(|_| random_token(&mut rng)).collect();
            let h = m.embed_tokens(&tokens_tensor(&[seq], len, &Device::Cpu).unwrap()).unwrap();
            let base = m.forward_sequence(&cond, &h).unwrap();
            for j in 1..=len {
                let bump = randn(&mut rng, 1.0, &[1, 1, 32], DType::F32);
                let mut parts = vec![];
                if j > 1 {
                    parts.push(h.narrow(1, 0, j - 1).unwrap());
                }
                parts.push((h.narrow(1, j - 1, 1).unwrap() + bump).unwrap());
                if j < len {
                    parts.push(h.narrow(1, j, len - j).unwrap());
                }
                let perturbed = Tensor::cat(&parts, 1).unwrap();
                let f = m.forward_sequence(&cond, &perturbed).unwrap();
                assert!(max_abs_diff(&f.narrow(1, 0, j).unwrap(), &base.narrow(1, 0, j).unwrap()) < 1e-5);
                assert!(max_abs_diff(&f.narrow(1, j, len + 1 - j).unwrap(), &base.narrow(1, j, len + 1 - j).unwrap()) > 0.0);
            }
        }
    }
}

#[test]
fn decode_attributes_shapes_and_order() {
    let cfg = small(10);
    let m = model(&cfg);
    let f = randn(&mut ChaCha8Rng::seed_from_u64(10), 1.0, &[32], DType::F32);
    let all = KnownAttributes { class: Some(1), translation: Some([1, 2, 3]), rotation: Some([4, 5, 6]) };
    let l = m.decode_attributes(&f, &all).unwrap();
    assert_eq!(l.class.dims(), &[3]);
    assert_eq!(l.translation.as_ref().unwrap().dims(), &[3, 128]);
    assert_eq!(l.rotation.as_ref().unwrap().dims(), &[3, 180]);
    assert_eq!(l.scale.as_ref().unwrap().dims(), &[3, 128]);
    assert_eq!(l.eos.dims(), &[] as &[usize]);
    for t in [&l.class, l.translation.as_ref().unwrap(), l.rotation.as_ref().unwrap(), l.scale.as_ref().unwrap()] {
        let s = candle_nn::ops::softmax(t, D::Minus1).unwrap().sum(D::Minus1).unwrap();
        for v in s.flatten_all().unwrap().to_vec1::<f32>().unwrap() {
            assert!((v - 1.0).abs() < 1e-6);
        }
    }
    let none = m.decode_attributes(&f, &KnownAttributes::default()).unwrap();
    assert!(none.translation.is_none() && none.rotation.is_none() && none.scale.is_none());

    let skip = KnownAttributes { class: Some(0), translation: None, rotation: Some([0, 0, 0]) };
    assert!(matches!(m.decode_attributes(&f, &skip), Err(Error::ContractViolation(_))));
    let no_class = KnownAttributes { class: None, translation: Some([0, 0, 0]), rotation: None };
    assert!(matches!(m.decode_attributes(&f, &no_class), Err(Error::ContractViolation(_))));
}

#[test]
fn translation_head_depends_on_class() {
    for seed in 0..10 {
        let m = model(&small(seed));
        let f = randn(&mut ChaCha8Rng::seed_from_u64(seed), 1.0, &[32], DType::F32);
        let t = |c| {
            m.decode_attributes(&f, &KnownAttributes { class: Some(c), ..Default::default() })
                .unwrap()
                .translation
                .unwrap()
        };
        assert!(max_abs_diff(&t(0), &t(2)) > 0.0, "seed {seed}");
    }
    // Without the cascade the class is ignored.
    let m = model(&ModelConfig { cascade: false, ..small(0) });
    let f = randn(&mut ChaCha8Rng::seed_from_u64(11), 1.0, &[32], DType::F32);
    let t = |c| m.decode_attributes(&f, &KnownAttributes { class: Some(c), ..Default::default() }).unwrap().translation.unwrap();
    assert_eq!(max_abs_diff(&t(0), &t(2)), 0.0);
}

#[test]
fn forward_is_deterministic() {
    let cfg = small(11);
    let a = model(&cfg);
    let b = model(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let c = cloud(&mut rng, 200);
    let seq: Vec<_> = (0..4).map(|_| random_token(&mut rng)).collect();
    let run = |m: &PrimitiveTransformer| {
        let cond = m.encode_cloud(&c).unwrap().unsqueeze(0).unwrap();
        let h = m.embed_tokens(&tokens_tensor(std::slice::from_ref(&seq), 4, &Device::Cpu).unwrap()).unwrap();
        m.forward_sequence(&cond, &h).unwrap()
    };
    let (x, y, z) = (run(&a), run(&a), run(&b));
    assert_eq!(max_abs_diff(&x, &y), 0.0);
    assert_eq!(max_abs_diff(&x, &z), 0.0);
    assert!(a.parameter_count() > 0);
    let _ = x.i((0, 0)).unwrap();
}

#[test]
fn desk_parameter_count_is_reported() {
    let m = model(&ModelConfig::default());
    let n = m.parameter_count();
    assert!(n > 1_000_000 && n < 10_000_000, "{n}");
}
