//! Forward operations. Each records an [`Op`] for the backward pass.

use super::linalg::{gemm_nn, im2col, ConvGeom};
use super::{Op, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub(crate) fn sigmoid_scalar<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn same_shape<T: Scalar>(what: &str, a: &Tensor<T>, b: &Tensor<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!(
            "{what}: shapes {:?} and {:?} differ",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// (N, C, H, W) of a rank-4 tensor.
pub(crate) fn nchw<T: Scalar>(what: &str, t: &Tensor<T>) -> Result<(usize, usize, usize, usize)> {
    match *t.shape() {
        [n, c, h, w] => Ok((n, c, h, w)),
        ref s => Err(Error::Shape(format!("{what}: expected NCHW tensor, got {s:?}"))),
    }
}

impl<T: Scalar> Tensor<T> {
    fn zip_with(&self, other: &Self, what: &str, f: impl Fn(T, T) -> T) -> Result<Vec<T>> {
        same_shape(what, self, other)?;
        Ok(self
            .data()
            .iter()
            .zip(other.data())
            .map(|(&a, &b)| f(a, b))
            .collect())
    }

    fn map(&self, f: impl Fn(T) -> T) -> Vec<T> {
        self.data().iter().map(|&v| f(v)).collect()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let d = self.zip_with(other, "add", |a, b| a + b)?;
        Ok(Self::from_op(self.shape().to_vec(), d, Op::Add(self.clone(), other.clone())))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let d = self.zip_with(other, "sub", |a, b| a - b)?;
        Ok(Self::from_op(self.shape().to_vec(), d, Op::Sub(self.clone(), other.clone())))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let d = self.zip_with(other, "mul", |a, b| a * b)?;
        Ok(Self::from_op(self.shape().to_vec(), d, Op::Mul(self.clone(), other.clone())))
    }

    /// Elementwise quotient; the divisor must be nonzero everywhere.
    pub fn div(&self, other: &Self) -> Result<Self> {
        if other.data().iter().any(|v| *v == T::zero()) {
            return Err(Error::InvalidArgument("div: zero divisor".into()));
        }
        let d = self.zip_with(other, "div", |a, b| a / b)?;
        Ok(Self::from_op(self.shape().to_vec(), d, Op::Div(self.clone(), other.clone())))
    }

    pub fn add_scalar(&self, s: T) -> Self {
        Self::from_op(self.shape().to_vec(), self.map(|v| v + s), Op::AddScalar(self.clone()))
    }

    pub fn sub_scalar(&self, s: T) -> Self {
        self.add_scalar(-s)
    }

    pub fn mul_scalar(&self, s: T) -> Self {
        Self::from_op(self.shape().to_vec(), self.map(|v| v * s), Op::MulScalar(self.clone(), s))
    }

    pub fn neg(&self) -> Self {
        Self::from_op(self.shape().to_vec(), self.map(|v| -v), Op::Neg(self.clone()))
    }

    pub fn relu(&self) -> Self {
        // NaN passes through so divergence stays visible downstream
        let d = self.map(|v| if v > T::zero() || v.is_nan() { v } else { T::zero() });
        Self::from_op(self.shape().to_vec(), d, Op::Relu(self.clone()))
    }

    pub fn sigmoid(&self) -> Self {
        Self::from_op(self.shape().to_vec(), self.map(sigmoid_scalar), Op::Sigmoid(self.clone()))
    }

    pub fn exp(&self) -> Self {
        Self::from_op(self.shape().to_vec(), self.map(|v| v.exp()), Op::Exp(self.clone()))
    }

    /// Natural logarithm; every input must be positive. Clamp first when the
    /// input is a probability that may saturate.
    pub fn ln(&self) -> Result<Self> {
        if let Some(bad) = self.data().iter().find(|v| **v <= T::zero()) {
            return Err(Error::InvalidArgument(format!("ln of non-positive value {bad}")));
        }
        Ok(Self::from_op(self.shape().to_vec(), self.map(|v| v.ln()), Op::Ln(self.clone())))
    }

    /// Clamp into `[lo, hi]`; the gradient is zero where the bound is active.
    pub fn clamp(&self, lo: T, hi: T) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::InvalidArgument(format!("clamp bounds [{lo}, {hi}]")));
        }
        let d = self.map(|v| if v.is_nan() { v } else { v.max(lo).min(hi) });
        Ok(Self::from_op(
            self.shape().to_vec(),
            d,
            Op::Clamp {
                input: self.clone(),
                lo,
                hi,
            },
        ))
    }

    pub fn sum(&self) -> Self {
        let s = self.data().iter().copied().sum();
        Self::from_op(vec![1], vec![s], Op::Sum(self.clone()))
    }

    pub fn mean(&self) -> Self {
        let n = T::of(self.numel() as f64);
        let s: T = self.data().iter().copied().sum();
        Self::from_op(vec![1], vec![s / n], Op::Mean(self.clone()))
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        let n = super::check_shape(shape)?;
        if n != self.numel() {
            return Err(Error::Shape(format!(
                "reshape {:?} -> {shape:?} changes element count",
                self.shape()
            )));
        }
        Ok(Self::from_op(shape.to_vec(), self.data().to_vec(), Op::Reshape(self.clone())))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        let (m, k) = match *self.shape() {
            [m, k] => (m, k),
            ref s => return Err(Error::Shape(format!("matmul: lhs must be rank 2, got {s:?}"))),
        };
        let n = match *other.shape() {
            [k2, n] if k2 == k => n,
            ref s => {
                return Err(Error::Shape(format!(
                    "matmul: {:?} · {s:?} dimension mismatch",
                    self.shape()
                )))
            }
        };
        let mut out = vec![T::zero(); m * n];
        gemm_nn(m, k, n, self.data(), other.data(), &mut out);
        Ok(Self::from_op(vec![m, n], out, Op::MatMul(self.clone(), other.clone())))
    }

    /// Adds a length-M row vector to every row of an N×M matrix.
    pub fn add_row(&self, row: &Self) -> Result<Self> {
        let m = match (self.shape(), row.shape()) {
            ([_, m], [m2]) if m == m2 => *m,
            (a, b) => return Err(Error::Shape(format!("add_row: {a:?} + {b:?}"))),
        };
        let mut out = self.data().to_vec();
        for chunk in out.chunks_mut(m) {
            for (o, &b) in chunk.iter_mut().zip(row.data()) {
                *o += b;
            }
        }
        Ok(Self::from_op(self.shape().to_vec(), out, Op::AddRow(self.clone(), row.clone())))
    }

    /// 2-d cross-correlation with zero padding. `self` is N×C×H×W, `kernel`
    /// O×C×kh×kw, `bias` has length O.
    pub fn conv2d(&self, kernel: &Self, bias: &Self, stride: usize, pad: usize) -> Result<Self> {
        let (n, c, h, w) = nchw("conv2d input", self)?;
        let (o, kc, kh, kw) = match *kernel.shape() {
            [o, kc, kh, kw] => (o, kc, kh, kw),
            ref s => return Err(Error::Shape(format!("conv2d: kernel must be OIHW, got {s:?}"))),
        };
        if kc != c {
            return Err(Error::Shape(format!(
                "conv2d: input has {c} channels, kernel expects {kc}"
            )));
        }
        if bias.shape() != [o] {
            return Err(Error::Shape(format!(
                "conv2d: bias shape {:?}, expected [{o}]",
                bias.shape()
            )));
        }
        if stride == 0 {
            return Err(Error::InvalidArgument("conv2d: stride must be positive".into()));
        }
        if h + 2 * pad < kh || w + 2 * pad < kw {
            return Err(Error::Shape(format!(
                "conv2d: padded input {}x{} smaller than kernel {kh}x{kw}",
                h + 2 * pad,
                w + 2 * pad
            )));
        }
        let geom = ConvGeom {
            channels: c,
            height: h,
            width: w,
            kh,
            kw,
            stride,
            pad,
            out_h: (h + 2 * pad - kh) / stride + 1,
            out_w: (w + 2 * pad - kw) / stride + 1,
        };
        let (pl, ol) = (geom.patch_len(), geom.out_len());
        let mut cols = vec![T::zero(); pl * ol];
        let mut out = vec![T::zero(); n * o * ol];
        for (img, dst) in self.data().chunks(c * h * w).zip(out.chunks_mut(o * ol)) {
            im2col(&geom, img, &mut cols);
            for (plane, &b) in dst.chunks_mut(ol).zip(bias.data()) {
                plane.fill(b);
            }
            gemm_nn(o, pl, ol, kernel.data(), &cols, dst);
        }
        Ok(Self::from_op(
            vec![n, o, geom.out_h, geom.out_w],
            out,
            Op::Conv2d {
                input: self.clone(),
                kernel: kernel.clone(),
                bias: bias.clone(),
                geom,
            },
        ))
    }

    /// 2×2 max pooling with stride 2. Ties resolve to the first element in
    /// row-major order within the window.
    pub fn maxpool2d(&self) -> Result<Self> {
        let (n, c, h, w) = nchw("maxpool2d", self)?;
        if h % 2 != 0 || w % 2 != 0 {
            return Err(Error::Shape(format!("maxpool2d: odd spatial extent {h}x{w}")));
        }
        let (oh, ow) = (h / 2, w / 2);
        let src = self.data();
        let mut out = Vec::with_capacity(n * c * oh * ow);
        let mut argmax = Vec::with_capacity(n * c * oh * ow);
        for plane in 0..n * c {
            let base = plane * h * w;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = base + 2 * oy * w + 2 * ox;
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let idx = base + (2 * oy + dy) * w + 2 * ox + dx;
                        if src[idx] > src[best] {
                            best = idx;
                        }
                    }
                    out.push(src[best]);
                    argmax.push(best);
                }
            }
        }
        Ok(Self::from_op(
            vec![n, c, oh, ow],
            out,
            Op::MaxPool2d {
                input: self.clone(),
                argmax,
            },
        ))
    }

    /// Nearest-neighbour 2× upsampling (each pixel becomes a 2×2 block).
    pub fn upsample_nearest(&self) -> Result<Self> {
        let (n, c, h, w) = nchw("upsample_nearest", self)?;
        let (oh, ow) = (2 * h, 2 * w);
        let src = self.data();
        let mut out = vec![T::zero(); n * c * oh * ow];
        for plane in 0..n * c {
            let (s, d) = (plane * h * w, plane * oh * ow);
            for y in 0..oh {
                for x in 0..ow {
                    out[d + y * ow + x] = src[s + (y / 2) * w + x / 2];
                }
            }
        }
        Ok(Self::from_op(vec![n, c, oh, ow], out, Op::Upsample2x(self.clone())))
    }

    pub fn concat_channels(&self, other: &Self) -> Result<Self> {
        let (n, ca, h, w) = nchw("concat_channels", self)?;
        let (nb, cb, hb, wb) = nchw("concat_channels", other)?;
        if (n, h, w) != (nb, hb, wb) {
            return Err(Error::Shape(format!(
                "concat_channels: {:?} and {:?} differ outside the channel axis",
                self.shape(),
                other.shape()
            )));
        }
        let hw = h * w;
        let mut out = Vec::with_capacity(n * (ca + cb) * hw);
        for i in 0..n {
            out.extend_from_slice(&self.data()[i * ca * hw..(i + 1) * ca * hw]);
            out.extend_from_slice(&other.data()[i * cb * hw..(i + 1) * cb * hw]);
        }
        Ok(Self::from_op(
            vec![n, ca + cb, h, w],
            out,
            Op::ConcatChannels(self.clone(), other.clone()),
        ))
    }

    /// Softmax over the channel axis of an NCHW tensor, max-subtracted.
    pub fn softmax_channels(&self) -> Result<Self> {
        let (n, c, h, w) = nchw("softmax_channels", self)?;
        let hw = h * w;
        let src = self.data();
        let mut out = vec![T::zero(); src.len()];
        for i in 0..n {
            let base = i * c * hw;
            for p in 0..hw {
                let at = |ch: usize| base + ch * hw + p;
                let m = (0..c).map(|ch| src[at(ch)]).fold(T::neg_infinity(), T::max);
                let mut z = T::zero();
                for ch in 0..c {
                    let e = (src[at(ch)] - m).exp();
                    out[at(ch)] = e;
                    z += e;
                }
                for ch in 0..c {
                    out[at(ch)] /= z;
                }
            }
        }
        Ok(Self::from_op(self.shape().to_vec(), out, Op::SoftmaxChannels(self.clone())))
    }

    /// Sum over N, H and W of an NCHW tensor, giving a length-C vector.
    pub fn channel_sum(&self) -> Result<Self> {
        let (n, c, h, w) = nchw("channel_sum", self)?;
        let hw = h * w;
        let mut out = vec![T::zero(); c];
        for i in 0..n {
            for (ch, acc) in out.iter_mut().enumerate() {
                let s = (i * c + ch) * hw;
                *acc += self.data()[s..s + hw].iter().copied().sum::<T>();
            }
        }
        Ok(Self::from_op(vec![c], out, Op::ChannelSum(self.clone())))
    }

    /// Mean over H and W, giving an N×C matrix.
    pub fn global_avg_pool(&self) -> Result<Self> {
        let (n, c, h, w) = nchw("global_avg_pool", self)?;
        let hw = h * w;
        let scale = T::of(hw as f64);
        let out = self
            .data()
            .chunks(hw)
            .map(|plane| plane.iter().copied().sum::<T>() / scale)
            .collect();
        Ok(Self::from_op(vec![n, c], out, Op::GlobalAvgPool(self.clone())))
    }
}
