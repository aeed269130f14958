//! Dense row-major tensors with a reverse-mode differentiation record.
//!
//! Every forward operation returns a new immutable [`Tensor`]. When any input
//! requires a gradient (and recording is not suspended by [`no_grad`]), the
//! result keeps a reference to its inputs together with the values its
//! backward rule needs. [`Tensor::backward`] walks that graph once in reverse
//! topological order and overwrites the `grad` slot of every reachable tensor
//! that requires a gradient.

mod backward;
mod gradcheck;
mod linalg;
mod ops;
pub(crate) use ops::nchw;

use std::cell::Cell;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub(crate) use backward::Op;
pub use gradcheck::{check_gradient, finite_diff_grad, relative_error};

static NEXT_ID: AtomicU64 = AtomicU64::new(0);

thread_local! {
    static GRAD_ENABLED: Cell<bool> = const { Cell::new(true) };
}

struct GradModeGuard(bool);

impl Drop for GradModeGuard {
    fn drop(&mut self) {
        GRAD_ENABLED.with(|g| g.set(self.0));
    }
}

/// Runs `f` with graph recording disabled on the current thread.
pub fn no_grad<R>(f: impl FnOnce() -> R) -> R {
    let _guard = GradModeGuard(GRAD_ENABLED.with(|g| g.replace(false)));
    f()
}

pub fn is_grad_enabled() -> bool {
    GRAD_ENABLED.with(|g| g.get())
}

/// Initial contents for [`Tensor::create`].
#[derive(Debug, Clone)]
pub enum Init<T> {
    Fill(T),
    Data(Vec<T>),
    /// Uniform in `[lo, hi)` from a ChaCha8 stream seeded with `seed`.
    SeededUniform { lo: T, hi: T, seed: u64 },
}

pub(crate) struct Node<T: Scalar> {
    id: u64,
    shape: Vec<usize>,
    data: Vec<T>,
    requires_grad: bool,
    grad: Mutex<Option<Vec<T>>>,
    op: Option<Op<T>>,
}

#[derive(Clone)]
pub struct Tensor<T: Scalar> {
    node: Arc<Node<T>>,
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::Shape("shape must have at least one axis".into()));
    }
    if shape.contains(&0) {
        return Err(Error::Shape(format!("zero extent in shape {shape:?}")));
    }
    Ok(shape.iter().product())
}

impl<T: Scalar> Tensor<T> {
    fn leaf(shape: Vec<usize>, data: Vec<T>, requires_grad: bool) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Tensor {
            node: Arc::new(Node {
                id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
                shape,
                data,
                requires_grad,
                grad: Mutex::new(None),
                op: None,
            }),
        }
    }

    /// Result of a forward op. The op is kept only if some input needs a gradient.
    pub(crate) fn from_op(shape: Vec<usize>, data: Vec<T>, op: Op<T>) -> Self {
        let record = is_grad_enabled() && op.inputs().iter().any(|t| t.requires_grad());
        Tensor {
            node: Arc::new(Node {
                id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
                shape,
                data,
                requires_grad: record,
                grad: Mutex::new(None),
                op: if record { Some(op) } else { None },
            }),
        }
    }

    pub fn create(shape: &[usize], init: Init<T>) -> Result<Self> {
        let n = check_shape(shape)?;
        let data = match init {
            Init::Fill(v) => vec![v; n],
            Init::Data(d) => {
                if d.len() != n {
                    return Err(Error::Shape(format!(
                        "shape {shape:?} needs {n} values, got {}",
                        d.len()
                    )));
                }
                d
            }
            Init::SeededUniform { lo, hi, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                return Self::uniform(shape, lo, hi, &mut rng);
            }
        };
        Ok(Self::leaf(shape.to_vec(), data, false))
    }

    pub fn new(shape: &[usize], data: Vec<T>) -> Result<Self> {
        Self::create(shape, Init::Data(data))
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::create(shape, Init::Fill(T::zero()))
    }

    pub fn full(shape: &[usize], value: T) -> Result<Self> {
        Self::create(shape, Init::Fill(value))
    }

    pub fn scalar(value: T) -> Self {
        Self::leaf(vec![1], vec![value], false)
    }

    /// Uniform values in `[lo, hi)` drawn from `rng`.
    pub fn uniform<R: Rng>(shape: &[usize], lo: T, hi: T, rng: &mut R) -> Result<Self> {
        let n = check_shape(shape)?;
        if !(lo < hi) {
            return Err(Error::InvalidArgument(format!(
                "uniform bounds must satisfy lo < hi, got [{lo}, {hi})"
            )));
        }
        let (lo64, hi64) = (lo.as_f64(), hi.as_f64());
        let data = (0..n).map(|_| T::of(rng.gen_range(lo64..hi64))).collect();
        Ok(Self::leaf(shape.to_vec(), data, false))
    }

    /// A trainable leaf.
    pub fn parameter(shape: &[usize], data: Vec<T>) -> Result<Self> {
        Ok(Self::new(shape, data)?.with_requires_grad(true))
    }

    /// Fresh leaf with the same values and the given gradient flag.
    pub fn with_requires_grad(&self, requires_grad: bool) -> Self {
        Self::leaf(self.shape().to_vec(), self.data().to_vec(), requires_grad)
    }

    /// Same values, cut from the graph.
    pub fn detach(&self) -> Self {
        self.with_requires_grad(false)
    }

    pub fn shape(&self) -> &[usize] {
        &self.node.shape
    }

    pub fn data(&self) -> &[T] {
        &self.node.data
    }

    pub fn numel(&self) -> usize {
        self.node.data.len()
    }

    pub fn requires_grad(&self) -> bool {
        self.node.requires_grad
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> Result<T> {
        match self.data() {
            [v] => Ok(*v),
            _ => Err(Error::Shape(format!(
                "item() on tensor of shape {:?}",
                self.shape()
            ))),
        }
    }

    /// Gradient written by the most recent `backward` that reached this tensor.
    pub fn grad(&self) -> Option<Vec<T>> {
        self.node.grad.lock().expect("grad lock").clone()
    }

    pub fn zero_grad(&self) {
        *self.node.grad.lock().expect("grad lock") = None;
    }

    pub(crate) fn set_grad(&self, g: Vec<T>) {
        *self.node.grad.lock().expect("grad lock") = Some(g);
    }

    pub(crate) fn id(&self) -> u64 {
        self.node.id
    }

    pub(crate) fn op(&self) -> Option<&Op<T>> {
        self.node.op.as_ref()
    }

    /// Element at a multi-index; panics when out of range.
    pub fn at(&self, index: &[usize]) -> T {
        assert_eq!(index.len(), self.shape().len(), "index rank");
        let mut flat = 0;
        for (i, (&ix, &ext)) in index.iter().zip(self.shape()).enumerate() {
            assert!(ix < ext, "index {ix} out of range on axis {i}");
            flat = flat * ext + ix;
        }
        self.data()[flat]
    }

    pub fn is_finite(&self) -> bool {
        self.data().iter().all(|v| v.is_finite())
    }
}

impl<T: Scalar> fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("Tensor");
        s.field("shape", &self.shape());
        if self.numel() <= 16 {
            s.field("data", &self.data());
        }
        s.field("requires_grad", &self.requires_grad()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn create_fill_and_data() {
        let z = Tensor::<f64>::zeros(&[2, 2]).unwrap();
        assert_eq!(z.data(), &[0.0; 4]);
        assert!(!z.requires_grad());
        let v = Tensor::new(&[3], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(v.data(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn create_rejects_bad_shapes() {
        assert!(Tensor::new(&[2, 2], vec![1.0f64; 3]).is_err());
        assert!(Tensor::<f64>::zeros(&[2, 0]).is_err());
        assert!(Tensor::<f64>::zeros(&[]).is_err());
    }

    #[test]
    fn seeded_uniform_is_reproducible() {
        let init = || Init::SeededUniform {
            lo: -1.0,
            hi: 1.0,
            seed: 7,
        };
        let a = Tensor::<f64>::create(&[2], init()).unwrap();
        let b = Tensor::<f64>::create(&[2], init()).unwrap();
        assert_eq!(a.data()[0].to_bits(), b.data()[0].to_bits());
        assert_eq!(a.data()[1].to_bits(), b.data()[1].to_bits());
        assert!(a.data().iter().all(|v| (-1.0..1.0).contains(v)));
    }

    #[test]
    fn no_grad_suppresses_recording() {
        let x = Tensor::parameter(&[2], vec![1.0f64, 2.0]).unwrap();
        let y = no_grad(|| x.mul(&x).unwrap());
        assert!(!y.requires_grad());
        assert!(is_grad_enabled());
        let z = x.mul(&x).unwrap();
        assert!(z.requires_grad());
    }

    #[test]
    fn at_indexes_row_major() {
        let t = Tensor::new(&[2, 3], (0..6).map(f64::from).collect()).unwrap();
        assert_eq!(t.at(&[1, 2]), 5.0);
        assert_eq!(t.at(&[0, 1]), 1.0);
    }
}
