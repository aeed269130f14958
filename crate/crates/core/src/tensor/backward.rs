//! Backward rules and the reverse sweep.

use std::collections::{HashMap, HashSet};

use super::linalg::{col2im, gemm_nt, gemm_tn, im2col, ConvGeom};
use super::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Recorded operation of a non-leaf tensor.
pub(crate) enum Op<T: Scalar> {
    Add(Tensor<T>, Tensor<T>),
    Sub(Tensor<T>, Tensor<T>),
    Mul(Tensor<T>, Tensor<T>),
    Div(Tensor<T>, Tensor<T>),
    AddScalar(Tensor<T>),
    MulScalar(Tensor<T>, T),
    Neg(Tensor<T>),
    Relu(Tensor<T>),
    Sigmoid(Tensor<T>),
    Exp(Tensor<T>),
    Ln(Tensor<T>),
    Clamp {
        input: Tensor<T>,
        lo: T,
        hi: T,
    },
    Sum(Tensor<T>),
    Mean(Tensor<T>),
    Reshape(Tensor<T>),
    MatMul(Tensor<T>, Tensor<T>),
    AddRow(Tensor<T>, Tensor<T>),
    Conv2d {
        input: Tensor<T>,
        kernel: Tensor<T>,
        bias: Tensor<T>,
        geom: ConvGeom,
    },
    MaxPool2d {
        input: Tensor<T>,
        argmax: Vec<usize>,
    },
    Upsample2x(Tensor<T>),
    ConcatChannels(Tensor<T>, Tensor<T>),
    SoftmaxChannels(Tensor<T>),
    ChannelSum(Tensor<T>),
    GlobalAvgPool(Tensor<T>),
}

impl<T: Scalar> Op<T> {
    pub(crate) fn inputs(&self) -> Vec<&Tensor<T>> {
        use Op::*;
        match self {
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | MatMul(a, b) | AddRow(a, b)
            | ConcatChannels(a, b) => vec![a, b],
            AddScalar(a) | MulScalar(a, _) | Neg(a) | Relu(a) | Sigmoid(a) | Exp(a) | Ln(a)
            | Sum(a) | Mean(a) | Reshape(a) | Upsample2x(a) | SoftmaxChannels(a)
            | ChannelSum(a) | GlobalAvgPool(a) => vec![a],
            Clamp { input, .. } | MaxPool2d { input, .. } => vec![input],
            Conv2d {
                input,
                kernel,
                bias,
                ..
            } => vec![input, kernel, bias],
        }
    }

    /// Vector-Jacobian product: gradients for each input (aligned with
    /// [`Op::inputs`]), `None` for inputs that do not need one.
    fn vjp(&self, out: &Tensor<T>, g: &[T]) -> Vec<Option<Vec<T>>> {
        use Op::*;
        let need = |t: &Tensor<T>| t.requires_grad();
        let map_g = |f: &dyn Fn(usize, T) -> T| -> Vec<T> {
            g.iter().enumerate().map(|(i, &gi)| f(i, gi)).collect()
        };
        match self {
            Add(a, b) => vec![need(a).then(|| g.to_vec()), need(b).then(|| g.to_vec())],
            Sub(a, b) => vec![
                need(a).then(|| g.to_vec()),
                need(b).then(|| g.iter().map(|&v| -v).collect()),
            ],
            Mul(a, b) => vec![
                need(a).then(|| map_g(&|i, gi| gi * b.data()[i])),
                need(b).then(|| map_g(&|i, gi| gi * a.data()[i])),
            ],
            Div(a, b) => vec![
                need(a).then(|| map_g(&|i, gi| gi / b.data()[i])),
                need(b).then(|| {
                    map_g(&|i, gi| {
                        let bv = b.data()[i];
                        -gi * a.data()[i] / (bv * bv)
                    })
                }),
            ],
            AddScalar(_) | Reshape(_) => vec![Some(g.to_vec())],
            MulScalar(_, s) => vec![Some(g.iter().map(|&v| v * *s).collect())],
            Neg(_) => vec![Some(g.iter().map(|&v| -v).collect())],
            Relu(a) => vec![Some(map_g(&|i, gi| {
                if a.data()[i] > T::zero() {
                    gi
                } else {
                    T::zero()
                }
            }))],
            Sigmoid(_) => vec![Some(map_g(&|i, gi| {
                let y = out.data()[i];
                gi * y * (T::one() - y)
            }))],
            Exp(_) => vec![Some(map_g(&|i, gi| gi * out.data()[i]))],
            Ln(a) => vec![Some(map_g(&|i, gi| gi / a.data()[i]))],
            Clamp { input, lo, hi } => vec![Some(map_g(&|i, gi| {
                let x = input.data()[i];
                if x < *lo || x > *hi {
                    T::zero()
                } else {
                    gi
                }
            }))],
            Sum(a) => vec![Some(vec![g[0]; a.numel()])],
            Mean(a) => {
                let n = T::of(a.numel() as f64);
                vec![Some(vec![g[0] / n; a.numel()])]
            }
            MatMul(a, b) => {
                let (m, k, n) = (a.shape()[0], a.shape()[1], b.shape()[1]);
                vec![
                    need(a).then(|| {
                        let mut da = vec![T::zero(); m * k];
                        gemm_nt(m, n, k, g, b.data(), &mut da);
                        da
                    }),
                    need(b).then(|| {
                        let mut db = vec![T::zero(); k * n];
                        gemm_tn(k, m, n, a.data(), g, &mut db);
                        db
                    }),
                ]
            }
            AddRow(a, row) => {
                let m = row.numel();
                vec![
                    need(a).then(|| g.to_vec()),
                    need(row).then(|| {
                        let mut dr = vec![T::zero(); m];
                        for chunk in g.chunks(m) {
                            for (d, &v) in dr.iter_mut().zip(chunk) {
                                *d += v;
                            }
                        }
                        dr
                    }),
                ]
            }
            Conv2d {
                input,
                kernel,
                bias,
                geom,
            } => conv2d_vjp(input, kernel, bias, geom, g),
            MaxPool2d { input, argmax } => {
                let mut d = vec![T::zero(); input.numel()];
                for (&src, &gi) in argmax.iter().zip(g) {
                    d[src] += gi;
                }
                vec![Some(d)]
            }
            Upsample2x(a) => {
                let (h, w) = (a.shape()[2], a.shape()[3]);
                let (oh, ow) = (2 * h, 2 * w);
                let mut d = vec![T::zero(); a.numel()];
                for plane in 0..d.len() / (h * w) {
                    for y in 0..oh {
                        for x in 0..ow {
                            d[plane * h * w + (y / 2) * w + x / 2] += g[plane * oh * ow + y * ow + x];
                        }
                    }
                }
                vec![Some(d)]
            }
            ConcatChannels(a, b) => {
                let n = a.shape()[0];
                let (la, lb) = (a.numel() / n, b.numel() / n);
                let mut da = Vec::with_capacity(a.numel());
                let mut db = Vec::with_capacity(b.numel());
                for chunk in g.chunks(la + lb) {
                    da.extend_from_slice(&chunk[..la]);
                    db.extend_from_slice(&chunk[la..]);
                }
                vec![need(a).then_some(da), need(b).then_some(db)]
            }
            SoftmaxChannels(_) => {
                let (n, c) = (out.shape()[0], out.shape()[1]);
                let hw = out.shape()[2] * out.shape()[3];
                let y = out.data();
                let mut d = vec![T::zero(); y.len()];
                for i in 0..n {
                    let base = i * c * hw;
                    for p in 0..hw {
                        let dot: T = (0..c).map(|ch| g[base + ch * hw + p] * y[base + ch * hw + p]).sum();
                        for ch in 0..c {
                            let at = base + ch * hw + p;
                            d[at] = y[at] * (g[at] - dot);
                        }
                    }
                }
                vec![Some(d)]
            }
            ChannelSum(a) => {
                let c = a.shape()[1];
                let hw = a.shape()[2] * a.shape()[3];
                let d = (0..a.numel()).map(|i| g[(i / hw) % c]).collect();
                vec![Some(d)]
            }
            GlobalAvgPool(a) => {
                let hw = a.shape()[2] * a.shape()[3];
                let scale = T::of(hw as f64);
                let d = (0..a.numel()).map(|i| g[i / hw] / scale).collect();
                vec![Some(d)]
            }
        }
    }
}

fn conv2d_vjp<T: Scalar>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    bias: &Tensor<T>,
    geom: &ConvGeom,
    g: &[T],
) -> Vec<Option<Vec<T>>> {
    let o = kernel.shape()[0];
    let (pl, ol) = (geom.patch_len(), geom.out_len());
    let img_len = geom.channels * geom.height * geom.width;
    let mut d_input = input.requires_grad().then(|| vec![T::zero(); input.numel()]);
    let mut d_kernel = kernel.requires_grad().then(|| vec![T::zero(); kernel.numel()]);
    let mut cols = vec![T::zero(); pl * ol];
    let mut d_cols = vec![T::zero(); pl * ol];
    for (n, (img, g_n)) in input.data().chunks(img_len).zip(g.chunks(o * ol)).enumerate() {
        if let Some(dk) = d_kernel.as_mut() {
            im2col(geom, img, &mut cols);
            gemm_nt(o, ol, pl, g_n, &cols, dk);
        }
        if let Some(di) = d_input.as_mut() {
            d_cols.fill(T::zero());
            gemm_tn(pl, o, ol, kernel.data(), g_n, &mut d_cols);
            col2im(geom, &d_cols, &mut di[n * img_len..(n + 1) * img_len]);
        }
    }
    let d_bias = bias.requires_grad().then(|| {
        let mut db = vec![T::zero(); o];
        for g_n in g.chunks(o * ol) {
            for (d, plane) in db.iter_mut().zip(g_n.chunks(ol)) {
                *d += plane.iter().copied().sum::<T>();
            }
        }
        db
    });
    vec![d_input, d_kernel, d_bias]
}

/// Nodes reachable from `root` that require a gradient, in topological order
/// (inputs before outputs).
fn topo_order<T: Scalar>(root: &Tensor<T>) -> Vec<Tensor<T>> {
    let mut order = Vec::new();
    let mut visited = HashSet::new();
    // (node, children already pushed)
    let mut stack = vec![(root.clone(), false)];
    while let Some((t, expanded)) = stack.pop() {
        if expanded {
            order.push(t);
            continue;
        }
        if !visited.insert(t.id()) {
            continue;
        }
        stack.push((t.clone(), true));
        if let Some(op) = t.op() {
            for input in op.inputs() {
                if input.requires_grad() && !visited.contains(&input.id()) {
                    stack.push((input.clone(), false));
                }
            }
        }
    }
    order
}

impl<T: Scalar> Tensor<T> {
    /// Reverse-mode sweep from a one-element loss. Each reachable tensor that
    /// requires a gradient has its `grad` overwritten with d(loss)/d(tensor).
    pub fn backward(&self) -> Result<()> {
        if self.numel() != 1 {
            return Err(Error::NonScalarLoss(self.shape().to_vec()));
        }
        if !self.requires_grad() {
            return Ok(());
        }
        let order = topo_order(self);
        let mut grads: HashMap<u64, Vec<T>> = HashMap::with_capacity(order.len());
        grads.insert(self.id(), vec![T::one()]);
        for node in order.iter().rev() {
            let g = grads
                .remove(&node.id())
                .unwrap_or_else(|| vec![T::zero(); node.numel()]);
            if let Some(op) = node.op() {
                for (input, dg) in op.inputs().into_iter().zip(op.vjp(node, &g)) {
                    let Some(dg) = dg else { continue };
                    if !input.requires_grad() {
                        continue;
                    }
                    match grads.get_mut(&input.id()) {
                        Some(acc) => {
                            for (a, v) in acc.iter_mut().zip(dg) {
                                *a += v;
                            }
                        }
                        None => {
                            grads.insert(input.id(), dg);
                        }
                    }
                }
            }
            node.set_grad(g);
        }
        Ok(())
    }
}
