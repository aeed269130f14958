//! SGD with momentum, Adam, and the milestone step schedule.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            _ => Err(Error::InvalidArgument(format!("unknown optimizer `{s}`"))),
        }
    }
}

fn check_lr(lr: f64) -> Result<()> {
    if lr > 0.0 && lr.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("learning rate must be positive, got {lr}")))
    }
}

/// Lazily sized per-parameter buffers.
fn ensure_buffers<T: Scalar>(bufs: &mut Vec<Vec<T>>, params: &[Vec<T>]) -> Result<()> {
    if bufs.is_empty() {
        *bufs = params.iter().map(|p| vec![T::zero(); p.len()]).collect();
        return Ok(());
    }
    if bufs.len() != params.len() || bufs.iter().zip(params).any(|(b, p)| b.len() != p.len()) {
        return Err(Error::Shape("optimizer state does not match parameter list".into()));
    }
    Ok(())
}

fn check_grads<T: Scalar>(params: &[Vec<T>], grads: &[Vec<T>]) -> Result<()> {
    if params.len() != grads.len() || params.iter().zip(grads).any(|(p, g)| p.len() != g.len()) {
        return Err(Error::Shape("gradients do not match parameters".into()));
    }
    Ok(())
}

/// `v ← μ·v + g; p ← p − lr·v`
#[derive(Debug, Clone)]
pub struct Sgd<T: Scalar> {
    pub lr: T,
    pub momentum: T,
    velocity: Vec<Vec<T>>,
}

impl<T: Scalar> Sgd<T> {
    pub fn new(lr: f64, momentum: f64) -> Result<Self> {
        check_lr(lr)?;
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::InvalidArgument(format!("momentum must be in [0, 1), got {momentum}")));
        }
        Ok(Sgd {
            lr: T::of(lr),
            momentum: T::of(momentum),
            velocity: Vec::new(),
        })
    }

    pub fn update(&mut self, params: &mut [Vec<T>], grads: &[Vec<T>]) -> Result<()> {
        check_grads(params, grads)?;
        ensure_buffers(&mut self.velocity, params)?;
        for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.velocity) {
            for ((pi, &gi), vi) in p.iter_mut().zip(g).zip(v.iter_mut()) {
                *vi = self.momentum * *vi + gi;
                *pi -= self.lr * *vi;
            }
        }
        Ok(())
    }
}

/// Bias-corrected Adam.
#[derive(Debug, Clone)]
pub struct Adam<T: Scalar> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    step: i32,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(lr: f64) -> Result<Self> {
        Self::with_betas(lr, 0.9, 0.999, 1e-8)
    }

    pub fn with_betas(lr: f64, beta1: f64, beta2: f64, eps: f64) -> Result<Self> {
        check_lr(lr)?;
        for (name, b) in [("beta1", beta1), ("beta2", beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::InvalidArgument(format!("{name} must be in [0, 1), got {b}")));
            }
        }
        Ok(Adam {
            lr: T::of(lr),
            beta1: T::of(beta1),
            beta2: T::of(beta2),
            eps: T::of(eps),
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        })
    }

    pub fn steps_taken(&self) -> i32 {
        self.step
    }

    pub fn update(&mut self, params: &mut [Vec<T>], grads: &[Vec<T>]) -> Result<()> {
        check_grads(params, grads)?;
        ensure_buffers(&mut self.m, params)?;
        ensure_buffers(&mut self.v, params)?;
        self.step += 1;
        let one = T::one();
        let c1 = one - self.beta1.powi(self.step);
        let c2 = one - self.beta2.powi(self.step);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for (((pi, &gi), mi), vi) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = self.beta1 * *mi + (one - self.beta1) * gi;
                *vi = self.beta2 * *vi + (one - self.beta2) * gi * gi;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *pi -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum Optimizer<T: Scalar> {
    Sgd(Sgd<T>),
    Adam(Adam<T>),
}

impl<T: Scalar> Optimizer<T> {
    /// Fresh optimizer with empty state. SGD uses `momentum`; Adam ignores it.
    pub fn new(kind: OptimizerKind, lr: f64, momentum: f64) -> Result<Self> {
        Ok(match kind {
            OptimizerKind::Sgd => Optimizer::Sgd(Sgd::new(lr, momentum)?),
            OptimizerKind::Adam => Optimizer::Adam(Adam::new(lr)?),
        })
    }

    pub fn kind(&self) -> OptimizerKind {
        match self {
            Optimizer::Sgd(_) => OptimizerKind::Sgd,
            Optimizer::Adam(_) => OptimizerKind::Adam,
        }
    }

    pub fn lr(&self) -> f64 {
        match self {
            Optimizer::Sgd(o) => o.lr.as_f64(),
            Optimizer::Adam(o) => o.lr.as_f64(),
        }
    }

    pub fn set_lr(&mut self, lr: f64) -> Result<()> {
        check_lr(lr)?;
        match self {
            Optimizer::Sgd(o) => o.lr = T::of(lr),
            Optimizer::Adam(o) => o.lr = T::of(lr),
        }
        Ok(())
    }

    pub fn update(&mut self, params: &mut [Vec<T>], grads: &[Vec<T>]) -> Result<()> {
        match self {
            Optimizer::Sgd(o) => o.update(params, grads),
            Optimizer::Adam(o) => o.update(params, grads),
        }
    }

    /// One step over tensors holding gradients from the last `backward`.
    /// A parameter without a gradient is treated as having a zero gradient.
    /// Each tensor is replaced by a fresh trainable leaf.
    pub fn step(&mut self, params: Vec<&mut Tensor<T>>) -> Result<()> {
        let mut values: Vec<Vec<T>> = params.iter().map(|p| p.data().to_vec()).collect();
        let grads: Vec<Vec<T>> = params
            .iter()
            .map(|p| p.grad().unwrap_or_else(|| vec![T::zero(); p.numel()]))
            .collect();
        self.update(&mut values, &grads)?;
        for (p, v) in params.into_iter().zip(values) {
            *p = Tensor::parameter(p.shape(), v)?;
        }
        Ok(())
    }
}

/// `lr(epoch) = base_lr · γ^(number of milestones ≤ epoch)`
#[derive(Debug, Clone, PartialEq)]
pub struct StepLr {
    pub base_lr: f64,
    pub milestones: Vec<usize>,
    pub gamma: f64,
}

impl StepLr {
    pub fn new(base_lr: f64, milestones: Vec<usize>, gamma: f64) -> Result<Self> {
        check_lr(base_lr)?;
        if milestones.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "milestones must be strictly ascending, got {milestones:?}"
            )));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidArgument(format!("gamma must be in (0, 1], got {gamma}")));
        }
        Ok(StepLr {
            base_lr,
            milestones,
            gamma,
        })
    }

    pub fn constant(lr: f64) -> Result<Self> {
        Self::new(lr, Vec::new(), 1.0)
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        let passed = self.milestones.iter().filter(|&&m| m <= epoch).count();
        self.base_lr * self.gamma.powi(passed as i32)
    }
}
