use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semantic_turbo::nncore::{
    adam_step, conv2d_apply, gradient_check, tconv2d_apply, Activation, AdamConfig, ConvLayerSpec, LayerState,
    Sequential, Shape4, Tensor4,
};

fn random_tensor(shape: Shape4, rng: &mut ChaCha8Rng) -> Tensor4<f64> {
    let data = (0..shape.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Tensor4::from_vec(shape, data).unwrap()
}

fn random_layer(spec: ConvLayerSpec, in_c: usize, rng: &mut ChaCha8Rng) -> LayerState<f64> {
    let mut layer = LayerState::<f64>::init_uniform(spec, in_c, rng).unwrap();
    for b in &mut layer.bias {
        *b = rng.gen_range(-0.2..0.2);
    }
    layer
}

/// Finite differences are meaningless across a ReLU kink, so inputs are
/// redrawn until every pre-activation sits at least 1e-3 away from zero.
fn check_single(spec: ConvLayerSpec, in_c: usize, hw: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (layer, input) = loop {
        let layer = random_layer(spec, in_c, &mut rng);
        let input = random_tensor(Shape4::new(1, in_c, hw, hw), &mut rng);
        let pre = layer.forward_linear(&input).unwrap();
        if spec.activation != Activation::Relu || pre.data().iter().all(|v| v.abs() > 1e-3) {
            break (layer, input);
        }
    };
    let out_shape = layer.output_shape(input.shape()).unwrap();
    let target = random_tensor(out_shape, &mut rng).map(|v| 0.5 + 0.5 * v);
    let mut model = Sequential::new(vec![layer]).unwrap();
    gradient_check(&mut model, &input, &target).unwrap()
}

const TOL: f64 = 1e-3;

#[test]
fn conv_layers_match_finite_differences() {
    for act in [Activation::None, Activation::Relu, Activation::Sigmoid] {
        for (k, s) in [(3, 1), (4, 2), (3, 2)] {
            let err = check_single(ConvLayerSpec::conv(2, k, s, act), 3, 9, 11);
            assert!(err < TOL, "conv k={k} s={s} {act:?}: {err}");
        }
    }
}

#[test]
fn transposed_conv_layers_match_finite_differences() {
    for act in [Activation::None, Activation::Relu, Activation::Sigmoid] {
        for (k, s) in [(3, 1), (4, 2), (3, 2)] {
            let err = check_single(ConvLayerSpec::tconv(2, k, s, act), 3, 5, 12);
            assert!(err < TOL, "tconv k={k} s={s} {act:?}: {err}");
        }
    }
}

#[test]
fn scaled_down_codec_stack_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let layers = vec![
        random_layer(ConvLayerSpec::conv(3, 4, 2, Activation::Relu), 3, &mut rng),
        random_layer(ConvLayerSpec::conv(2, 3, 2, Activation::Relu), 3, &mut rng),
        random_layer(ConvLayerSpec::tconv(3, 3, 2, Activation::Relu), 2, &mut rng),
        random_layer(ConvLayerSpec::tconv(3, 4, 2, Activation::Sigmoid), 3, &mut rng),
    ];
    let mut model = Sequential::new(layers).unwrap();
    let input = random_tensor(Shape4::new(1, 3, 12, 12), &mut rng);
    let target = input.map(|v| 0.5 + 0.5 * v);
    assert_eq!(model.forward(&input).unwrap().shape(), input.shape());
    let err = gradient_check(&mut model, &input, &target).unwrap();
    assert!(err < TOL, "{err}");
}

#[test]
fn oversized_models_are_rejected() {
    let layer = LayerState::<f64>::new(ConvLayerSpec::conv(64, 4, 1, Activation::None), 32).unwrap();
    let mut model = Sequential::new(vec![layer]).unwrap();
    let x = Tensor4::zeros(Shape4::new(1, 32, 4, 4));
    let t = Tensor4::zeros(Shape4::new(1, 64, 1, 1));
    assert!(gradient_check(&mut model, &x, &t).is_err());
}

/// Shares the weight tensor of a conv `c_in -> c_out` with a tconv
/// `c_out -> c_in`; both store `[c_out, c_in, kh, kw]`.
fn adjoint_pair(k: usize, s: usize, c_in: usize, c_out: usize, seed: u64) -> (LayerState<f64>, LayerState<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let conv = random_layer(ConvLayerSpec::conv(c_out, k, s, Activation::None), c_in, &mut rng);
    let mut tconv = LayerState::<f64>::new(ConvLayerSpec::tconv(c_in, k, s, Activation::None), c_out).unwrap();
    // tconv weights are indexed [out = c_in, in = c_out, kh, kw]; transpose
    for o in 0..c_out {
        for i in 0..c_in {
            for t in 0..k * k {
                tconv.weights[(i * c_out + o) * k * k + t] = conv.weights[(o * c_in + i) * k * k + t];
            }
        }
    }
    let mut conv = conv;
    conv.bias.iter_mut().for_each(|b| *b = 0.0);
    (conv, tconv)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transposed_conv_is_the_adjoint_of_conv(
        k in 1usize..5, s in 1usize..4, c_in in 1usize..4, c_out in 1usize..4,
        extra in 0usize..6, seed in any::<u64>(),
    ) {
        let hw = k + s * extra;
        let (conv, tconv) = adjoint_pair(k, s, c_in, c_out, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let x = random_tensor(Shape4::new(2, c_in, hw, hw), &mut rng);
        let cx = conv2d_apply(&x, &conv).unwrap();
        let y = random_tensor(cx.shape(), &mut rng);
        let ty = tconv2d_apply(&y, &tconv).unwrap();
        prop_assert_eq!(ty.shape(), x.shape());
        let lhs = cx.dot(&y).unwrap();
        let rhs = x.dot(&ty).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-6 * lhs.abs().max(rhs.abs()).max(1.0), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn adam_with_zero_gradients_is_a_no_op(seed in any::<u64>(), steps in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = vec![random_layer(ConvLayerSpec::conv(2, 3, 1, Activation::Relu), 2, &mut rng)];
        let before = layers[0].weights.clone();
        let bias = layers[0].bias.clone();
        for _ in 0..steps {
            adam_step(&mut layers, &AdamConfig::default());
        }
        prop_assert_eq!(&layers[0].weights, &before);
        prop_assert_eq!(&layers[0].bias, &bias);
    }
}

