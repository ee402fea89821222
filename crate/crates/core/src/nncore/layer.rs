use rand::Rng;

use super::tensor::{Scalar, Shape4, Tensor4};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv,
    TransposedConv,
}

impl LayerKind {
    pub fn tag(self) -> u8 {
        match self {
            LayerKind::Conv => 0,
            LayerKind::TransposedConv => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(LayerKind::Conv),
            1 => Some(LayerKind::TransposedConv),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    None,
    Relu,
    Sigmoid,
}

impl Activation {
    pub fn tag(self) -> u8 {
        match self {
            Activation::None => 0,
            Activation::Relu => 1,
            Activation::Sigmoid => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::None),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Sigmoid),
            _ => None,
        }
    }

    fn forward<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::None => x,
            Activation::Relu => x.max(T::zero()),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative evaluated at the pre-activation `x`.
    fn derivative<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::None => T::one(),
            Activation::Relu => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (T::one() - s)
            }
        }
    }
}

fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub enum ActivationDirection<'a, T> {
    Forward,
    /// Multiply `upstream` by the derivative at the given pre-activation.
    Backward { upstream: &'a Tensor4<T> },
}

/// Elementwise activation, or its backward pass when given an upstream gradient.
pub fn activation_apply<T: Scalar>(
    x: &Tensor4<T>,
    kind: Activation,
    direction: ActivationDirection<'_, T>,
) -> Result<Tensor4<T>> {
    match direction {
        ActivationDirection::Forward => Ok(x.map(|v| kind.forward(v))),
        ActivationDirection::Backward { upstream } => {
            upstream.expect_shape(x.shape())?;
            let data = x
                .data()
                .iter()
                .zip(upstream.data())
                .map(|(&v, &g)| g * kind.derivative(v))
                .collect();
            Tensor4::from_vec(x.shape(), data)
        }
    }
}

/// `{n_F, (h_K, w_K), s}` plus layer kind and activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvLayerSpec {
    pub filters: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub stride: usize,
    pub kind: LayerKind,
    pub activation: Activation,
}

impl ConvLayerSpec {
    pub fn conv(filters: usize, kernel: usize, stride: usize, activation: Activation) -> Self {
        ConvLayerSpec {
            filters,
            kernel_h: kernel,
            kernel_w: kernel,
            stride,
            kind: LayerKind::Conv,
            activation,
        }
    }

    pub fn tconv(filters: usize, kernel: usize, stride: usize, activation: Activation) -> Self {
        ConvLayerSpec {
            kind: LayerKind::TransposedConv,
            ..Self::conv(filters, kernel, stride, activation)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.filters == 0 || self.kernel_h == 0 || self.kernel_w == 0 || self.stride == 0 {
            return Err(Error::config(format!(
                "layer dimensions must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    /// Spatial output size for an `h x w` input.
    pub fn output_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        self.validate()?;
        match self.kind {
            LayerKind::Conv => {
                if h < self.kernel_h || w < self.kernel_w {
                    return Err(Error::dim(format!(
                        "input {h}x{w} smaller than kernel {}x{}",
                        self.kernel_h, self.kernel_w
                    )));
                }
                Ok((
                    (h - self.kernel_h) / self.stride + 1,
                    (w - self.kernel_w) / self.stride + 1,
                ))
            }
            LayerKind::TransposedConv => {
                if h == 0 || w == 0 {
                    return Err(Error::dim("transposed conv input must be non-empty"));
                }
                Ok((
                    (h - 1) * self.stride + self.kernel_h,
                    (w - 1) * self.stride + self.kernel_w,
                ))
            }
        }
    }

    pub fn param_count(&self, in_channels: usize) -> usize {
        self.filters * in_channels * self.kernel_h * self.kernel_w + self.filters
    }
}

/// Parameters, gradients and Adam moments of one layer.
///
/// Weights are laid out `(out_c, in_c, h_K, w_K)` for both layer kinds, where
/// `out_c` is the number of filters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerState<T> {
    pub spec: ConvLayerSpec,
    pub in_channels: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    pub grad_weights: Vec<T>,
    pub grad_bias: Vec<T>,
    pub adam_m_weights: Vec<T>,
    pub adam_v_weights: Vec<T>,
    pub adam_m_bias: Vec<T>,
    pub adam_v_bias: Vec<T>,
    pub step_count: u64,
}

impl<T: Scalar> LayerState<T> {
    /// Zero-initialized layer.
    pub fn new(spec: ConvLayerSpec, in_channels: usize) -> Result<Self> {
        spec.validate()?;
        if in_channels == 0 {
            return Err(Error::config("layer needs at least one input channel"));
        }
        let nw = spec.filters * in_channels * spec.kernel_h * spec.kernel_w;
        let nb = spec.filters;
        let z = |n| vec![T::zero(); n];
        Ok(LayerState {
            spec,
            in_channels,
            weights: z(nw),
            bias: z(nb),
            grad_weights: z(nw),
            grad_bias: z(nb),
            adam_m_weights: z(nw),
            adam_v_weights: z(nw),
            adam_m_bias: z(nb),
            adam_v_bias: z(nb),
            step_count: 0,
        })
    }

    /// Weights uniform in `±sqrt(1 / fan_in)`, biases zero.
    pub fn init_uniform<R: Rng + ?Sized>(
        spec: ConvLayerSpec,
        in_channels: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut layer = Self::new(spec, in_channels)?;
        let bound = (1.0 / (in_channels * spec.kernel_h * spec.kernel_w) as f64).sqrt();
        for w in &mut layer.weights {
            *w = T::cast_from(rng.gen_range(-bound..bound));
        }
        Ok(layer)
    }

    pub fn with_params(
        spec: ConvLayerSpec,
        in_channels: usize,
        weights: Vec<T>,
        bias: Vec<T>,
    ) -> Result<Self> {
        let mut layer = Self::new(spec, in_channels)?;
        if weights.len() != layer.weights.len() || bias.len() != layer.bias.len() {
            return Err(Error::dim(format!(
                "layer expects {} weights and {} biases, got {} and {}",
                layer.weights.len(),
                layer.bias.len(),
                weights.len(),
                bias.len()
            )));
        }
        layer.weights = weights;
        layer.bias = bias;
        Ok(layer)
    }

    /// `[out_c, in_c, h_K, w_K]`
    pub fn weight_shape(&self) -> [usize; 4] {
        [
            self.spec.filters,
            self.in_channels,
            self.spec.kernel_h,
            self.spec.kernel_w,
        ]
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn output_shape(&self, input: Shape4) -> Result<Shape4> {
        if input.c != self.in_channels {
            return Err(Error::dim(format!(
                "layer expects {} input channels, got tensor {input}",
                self.in_channels
            )));
        }
        let (h, w) = self.spec.output_hw(input.h, input.w)?;
        Ok(Shape4::new(input.n, self.spec.filters, h, w))
    }

    pub fn zero_grad(&mut self) {
        self.grad_weights.iter_mut().for_each(|g| *g = T::zero());
        self.grad_bias.iter_mut().for_each(|g| *g = T::zero());
    }

    pub fn cast<U: Scalar>(&self) -> LayerState<U> {
        let c = |v: &[T]| v.iter().map(|x| U::cast_from(x.as_f64())).collect::<Vec<U>>();
        LayerState {
            spec: self.spec,
            in_channels: self.in_channels,
            weights: c(&self.weights),
            bias: c(&self.bias),
            grad_weights: c(&self.grad_weights),
            grad_bias: c(&self.grad_bias),
            adam_m_weights: c(&self.adam_m_weights),
            adam_v_weights: c(&self.adam_v_weights),
            adam_m_bias: c(&self.adam_m_bias),
            adam_v_bias: c(&self.adam_v_bias),
            step_count: self.step_count,
        }
    }

    /// Linear part of the layer (including bias), before the activation.
    pub fn forward_linear(&self, input: &Tensor4<T>) -> Result<Tensor4<T>> {
        let out_shape = self.output_shape(input.shape())?;
        let mut out = Tensor4::zeros(out_shape);
        let geo = Geometry::new(self, input.shape(), out_shape);
        let mut cols = vec![T::zero(); geo.cols_len()];
        for i in 0..input.shape().n {
            let x = input.sample(i);
            let y = out.sample_mut(i);
            match self.spec.kind {
                LayerKind::Conv => geo.conv_forward(self, x, y, &mut cols),
                LayerKind::TransposedConv => geo.tconv_forward(self, x, y, &mut cols),
            }
            let plane = out_shape.h * out_shape.w;
            for (o, chunk) in y.chunks_mut(plane).enumerate() {
                let b = self.bias[o];
                chunk.iter_mut().for_each(|v| *v = *v + b);
            }
        }
        Ok(out)
    }

    pub fn forward(&self, input: &Tensor4<T>) -> Result<Tensor4<T>> {
        let pre = self.forward_linear(input)?;
        activation_apply(&pre, self.spec.activation, ActivationDirection::Forward)
    }

    /// Backpropagates `upstream` (gradient w.r.t. the activated output).
    ///
    /// `pre` is the pre-activation produced by [`forward_linear`](Self::forward_linear)
    /// on `input`. Parameter gradients are accumulated; the input gradient is
    /// returned.
    pub fn backward(
        &mut self,
        input: &Tensor4<T>,
        pre: &Tensor4<T>,
        upstream: &Tensor4<T>,
    ) -> Result<Tensor4<T>> {
        let out_shape = self.output_shape(input.shape())?;
        pre.expect_shape(out_shape)?;
        upstream.expect_shape(out_shape)?;
        let g = activation_apply(
            pre,
            self.spec.activation,
            ActivationDirection::Backward { upstream },
        )?;
        let geo = Geometry::new(self, input.shape(), out_shape);
        let mut grad_in = Tensor4::zeros(input.shape());
        let mut cols = vec![T::zero(); geo.cols_len()];
        let plane = out_shape.h * out_shape.w;
        for i in 0..input.shape().n {
            let gs = g.sample(i);
            for (o, chunk) in gs.chunks(plane).enumerate() {
                let s = chunk.iter().fold(T::zero(), |a, &b| a + b);
                self.grad_bias[o] = self.grad_bias[o] + s;
            }
            let x = input.sample(i);
            let gx = grad_in.sample_mut(i);
            match self.spec.kind {
                LayerKind::Conv => geo.conv_backward(self, x, gs, gx, &mut cols),
                LayerKind::TransposedConv => geo.tconv_backward(self, x, gs, gx, &mut cols),
            }
        }
        Ok(grad_in)
    }
}

/// Sizes shared by the im2col based kernels of one call.
struct Geometry {
    in_c: usize,
    in_h: usize,
    in_w: usize,
    out_c: usize,
    out_h: usize,
    out_w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
}

impl Geometry {
    fn new<T>(layer: &LayerState<T>, input: Shape4, output: Shape4) -> Self {
        Geometry {
            in_c: input.c,
            in_h: input.h,
            in_w: input.w,
            out_c: output.c,
            out_h: output.h,
            out_w: output.w,
            kh: layer.spec.kernel_h,
            kw: layer.spec.kernel_w,
            stride: layer.spec.stride,
        }
    }

    fn kk(&self) -> usize {
        self.kh * self.kw
    }

    fn cols_len(&self) -> usize {
        // conv: (in_c*KK) x (out_h*out_w); tconv: (out_c*KK) x (in_h*in_w)
        (self.in_c * self.kk() * self.out_h * self.out_w)
            .max(self.out_c * self.kk() * self.in_h * self.in_w)
    }

    fn conv_forward<T: Scalar>(&self, layer: &LayerState<T>, x: &[T], y: &mut [T], cols: &mut [T]) {
        let ckk = self.in_c * self.kk();
        let hw = self.out_h * self.out_w;
        im2col(x, self.in_c, self.in_h, self.in_w, self, self.out_h, self.out_w, cols);
        T::gemm(
            self.out_c, ckk, hw, T::one(), &layer.weights, ckk, 1, cols, hw, 1, T::zero(), y, hw, 1,
        );
    }

    fn conv_backward<T: Scalar>(
        &self,
        layer: &mut LayerState<T>,
        x: &[T],
        g: &[T],
        gx: &mut [T],
        cols: &mut [T],
    ) {
        let ckk = self.in_c * self.kk();
        let hw = self.out_h * self.out_w;
        im2col(x, self.in_c, self.in_h, self.in_w, self, self.out_h, self.out_w, cols);
        // dW += g * cols^T
        T::gemm(
            self.out_c,
            hw,
            ckk,
            T::one(),
            g,
            hw,
            1,
            cols,
            1,
            hw,
            T::one(),
            &mut layer.grad_weights,
            ckk,
            1,
        );
        // dcols = W^T * g
        T::gemm(
            ckk,
            self.out_c,
            hw,
            T::one(),
            &layer.weights,
            1,
            ckk,
            g,
            hw,
            1,
            T::zero(),
            cols,
            hw,
            1,
        );
        col2im_add(cols, self.in_c, self.in_h, self.in_w, self, self.out_h, self.out_w, gx);
    }

    fn tconv_forward<T: Scalar>(&self, layer: &LayerState<T>, x: &[T], y: &mut [T], cols: &mut [T]) {
        let kk = self.kk();
        let hw = self.in_h * self.in_w;
        let per_filter = self.in_c * kk;
        for o in 0..self.out_c {
            let w_o = &layer.weights[o * per_filter..(o + 1) * per_filter];
            T::gemm(
                kk,
                self.in_c,
                hw,
                T::one(),
                w_o,
                1,
                kk,
                x,
                hw,
                1,
                T::zero(),
                &mut cols[o * kk * hw..(o + 1) * kk * hw],
                hw,
                1,
            );
        }
        y.iter_mut().for_each(|v| *v = T::zero());
        col2im_add(cols, self.out_c, self.out_h, self.out_w, self, self.in_h, self.in_w, y);
    }

    fn tconv_backward<T: Scalar>(
        &self,
        layer: &mut LayerState<T>,
        x: &[T],
        g: &[T],
        gx: &mut [T],
        cols: &mut [T],
    ) {
        let kk = self.kk();
        let hw = self.in_h * self.in_w;
        let per_filter = self.in_c * kk;
        im2col(g, self.out_c, self.out_h, self.out_w, self, self.in_h, self.in_w, cols);
        for o in 0..self.out_c {
            let g_o = &cols[o * kk * hw..(o + 1) * kk * hw];
            // dW_o += x * g_o^T
            T::gemm(
                self.in_c,
                hw,
                kk,
                T::one(),
                x,
                hw,
                1,
                g_o,
                1,
                hw,
                T::one(),
                &mut layer.grad_weights[o * per_filter..(o + 1) * per_filter],
                kk,
                1,
            );
            // dx += W_o * g_o
            T::gemm(
                self.in_c,
                kk,
                hw,
                T::one(),
                &layer.weights[o * per_filter..(o + 1) * per_filter],
                kk,
                1,
                g_o,
                hw,
                1,
                T::one(),
                gx,
                hw,
                1,
            );
        }
    }
}

/// Unfolds `img` (`c x h x w`) into `(c*kh*kw) x (gh*gw)` patch columns.
#[allow(clippy::too_many_arguments)]
fn im2col<T: Scalar>(
    img: &[T],
    c: usize,
    h: usize,
    w: usize,
    geo: &Geometry,
    gh: usize,
    gw: usize,
    cols: &mut [T],
) {
    let (kh, kw, s) = (geo.kh, geo.kw, geo.stride);
    let gl = gh * gw;
    for ch in 0..c {
        let plane = &img[ch * h * w..(ch + 1) * h * w];
        for ky in 0..kh {
            for kx in 0..kw {
                let row = (ch * kh + ky) * kw + kx;
                let dst = &mut cols[row * gl..(row + 1) * gl];
                for gy in 0..gh {
                    let src = &plane[(gy * s + ky) * w + kx..];
                    let d = &mut dst[gy * gw..(gy + 1) * gw];
                    for (gx, v) in d.iter_mut().enumerate() {
                        *v = src[gx * s];
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters columns back and adds them into `img`.
#[allow(clippy::too_many_arguments)]
fn col2im_add<T: Scalar>(
    cols: &[T],
    c: usize,
    h: usize,
    w: usize,
    geo: &Geometry,
    gh: usize,
    gw: usize,
    img: &mut [T],
) {
    let (kh, kw, s) = (geo.kh, geo.kw, geo.stride);
    let gl = gh * gw;
    for ch in 0..c {
        let plane = &mut img[ch * h * w..(ch + 1) * h * w];
        for ky in 0..kh {
            for kx in 0..kw {
                let row = (ch * kh + ky) * kw + kx;
                let src = &cols[row * gl..(row + 1) * gl];
                for gy in 0..gh {
                    let base = (gy * s + ky) * w + kx;
                    for (gx, &v) in src[gy * gw..(gy + 1) * gw].iter().enumerate() {
                        let p = &mut plane[base + gx * s];
                        *p = *p + v;
                    }
                }
            }
        }
    }
}

fn expect_kind<T>(state: &LayerState<T>, kind: LayerKind) -> Result<()> {
    if state.spec.kind != kind {
        return Err(Error::config(format!(
            "expected a {kind:?} layer, got {:?}",
            state.spec.kind
        )));
    }
    Ok(())
}

/// Strided, unpadded 2-D cross-correlation plus bias, then the activation.
pub fn conv2d_apply<T: Scalar>(input: &Tensor4<T>, state: &LayerState<T>) -> Result<Tensor4<T>> {
    expect_kind(state, LayerKind::Conv)?;
    state.forward(input)
}

/// Gradient of a conv layer w.r.t. its input; parameter gradients accumulate
/// into `state`.
pub fn conv2d_grad<T: Scalar>(
    input: &Tensor4<T>,
    upstream: &Tensor4<T>,
    state: &mut LayerState<T>,
) -> Result<Tensor4<T>> {
    expect_kind(state, LayerKind::Conv)?;
    let pre = state.forward_linear(input)?;
    state.backward(input, &pre, upstream)
}

/// Transposed convolution: the adjoint of [`conv2d_apply`]'s linear map, plus
/// bias and activation.
pub fn tconv2d_apply<T: Scalar>(input: &Tensor4<T>, state: &LayerState<T>) -> Result<Tensor4<T>> {
    expect_kind(state, LayerKind::TransposedConv)?;
    state.forward(input)
}

pub fn tconv2d_grad<T: Scalar>(
    input: &Tensor4<T>,
    upstream: &Tensor4<T>,
    state: &mut LayerState<T>,
) -> Result<Tensor4<T>> {
    expect_kind(state, LayerKind::TransposedConv)?;
    let pre = state.forward_linear(input)?;
    state.backward(input, &pre, upstream)
}
