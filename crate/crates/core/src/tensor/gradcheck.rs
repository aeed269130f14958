//! Central finite differences, used as an independent check of `backward`.

use super::{no_grad, Tensor};
use crate::error::Result;
use crate::scalar::Scalar;

/// Central-difference gradient of scalar-valued `f` at `x`:
/// `(f(x + eps·eᵢ) − f(x − eps·eᵢ)) / (2·eps)` for every coordinate.
pub fn finite_diff_grad<T, F>(f: F, x: &Tensor<T>, eps: T) -> Result<Vec<T>>
where
    T: Scalar,
    F: Fn(&Tensor<T>) -> Result<Tensor<T>>,
{
    no_grad(|| {
        let mut probe = x.data().to_vec();
        let mut grad = Vec::with_capacity(probe.len());
        for i in 0..probe.len() {
            let orig = probe[i];
            probe[i] = orig + eps;
            let up = f(&Tensor::new(x.shape(), probe.clone())?)?.item()?;
            probe[i] = orig - eps;
            let down = f(&Tensor::new(x.shape(), probe.clone())?)?.item()?;
            probe[i] = orig;
            grad.push((up - down) / (eps + eps));
        }
        Ok(grad)
    })
}

/// `‖a − b‖ / max(‖a‖ + ‖b‖, tiny)`; zero when both vectors vanish.
pub fn relative_error<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    assert_eq!(a.len(), b.len(), "relative_error: length mismatch");
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut a.iter().zip(b).map(|(x, y)| x.as_f64() - y.as_f64()));
    let scale = norm(&mut a.iter().map(|x| x.as_f64())) + norm(&mut b.iter().map(|x| x.as_f64()));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale.max(f64::MIN_POSITIVE)
    }
}

/// Relative error between the reverse-mode gradient of `f` at `x` and its
/// central-difference estimate.
pub fn check_gradient<T, F>(f: F, x: &Tensor<T>, eps: T) -> Result<f64>
where
    T: Scalar,
    F: Fn(&Tensor<T>) -> Result<Tensor<T>>,
{
    let leaf = x.with_requires_grad(true);
    f(&leaf)?.backward()?;
    let analytic = leaf
        .grad()
        .unwrap_or_else(|| vec![T::zero(); leaf.numel()]);
    let numeric = finite_diff_grad(&f, x, eps)?;
    Ok(relative_error(&analytic, &numeric))
}
