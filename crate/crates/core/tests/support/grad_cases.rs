//! Finite-difference cases for every differentiable operation. Shared by the
//! gradient tests and the acceptance runner.

use pseudolabel::losses::{bce, combined_seg_loss, dice_loss, semi_supervised_loss, LossWeights};
use pseudolabel::tensor::check_gradient;
use pseudolabel::{Result, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Loss = Box<dyn Fn(&Tensor) -> Result<Tensor>>;

pub struct GradCase {
    pub name: &'static str,
    /// Draws the point to differentiate at and the scalar function of it.
    pub build: fn(&mut ChaCha8Rng) -> (Tensor, Loss),
}

pub const EPS: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

fn x(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    rand_tensor(rng, shape, -2.0, 2.0)
}

/// Fixed non-uniform weighting so that outputs with a constant sum
/// (softmax, for one) still give an informative scalar.
fn probe(t: &Tensor) -> Result<Tensor> {
    let w = (0..t.numel()).map(|i| (0.37 * i as f64 + 0.1).sin()).collect();
    t.mul(&Tensor::new(t.shape(), w)?).map(|p| p.sum())
}

macro_rules! case {
    ($name:literal, |$rng:ident| $body:expr) => {
        GradCase {
            name: $name,
            build: |$rng| $body,
        }
    };
}

pub fn cases() -> Vec<GradCase> {
    vec![
        case!("add/lhs", |r| {
            let b = x(r, &[3, 4]);
            (x(r, &[3, 4]), Box::new(move |t| probe(&t.add(&b)?)))
        }),
        case!("add/rhs", |r| {
            let a = x(r, &[3, 4]);
            (x(r, &[3, 4]), Box::new(move |t| probe(&a.add(t)?)))
        }),
        case!("sub/lhs", |r| {
            let b = x(r, &[5]);
            (x(r, &[5]), Box::new(move |t| probe(&t.sub(&b)?)))
        }),
        case!("sub/rhs", |r| {
            let a = x(r, &[5]);
            (x(r, &[5]), Box::new(move |t| probe(&a.sub(t)?)))
        }),
        case!("mul/lhs", |r| {
            let b = x(r, &[2, 3]);
            (x(r, &[2, 3]), Box::new(move |t| probe(&t.mul(&b)?)))
        }),
        case!("mul/rhs", |r| {
            let a = x(r, &[2, 3]);
            (x(r, &[2, 3]), Box::new(move |t| probe(&a.mul(t)?)))
        }),
        case!("div/lhs", |r| {
            let b = rand_tensor(r, &[6], 0.5, 2.0);
            (x(r, &[6]), Box::new(move |t| probe(&t.div(&b)?)))
        }),
        case!("div/rhs", |r| {
            let a = x(r, &[6]);
            (rand_tensor(r, &[6], 0.5, 2.0), Box::new(move |t| probe(&a.div(t)?)))
        }),
        case!("scalar ops", |r| {
            let s = r.gen_range(-2.0..2.0);
            (x(r, &[4]), Box::new(move |t| probe(&t.add_scalar(s).mul_scalar(s).sub_scalar(1.0))))
        }),
        case!("neg", |r| (x(r, &[4]), Box::new(|t| probe(&t.neg())))),
        case!("relu", |r| (x(r, &[8]), Box::new(|t| probe(&t.relu())))),
        case!("sigmoid", |r| (x(r, &[8]), Box::new(|t| probe(&t.sigmoid())))),
        case!("exp", |r| (x(r, &[8]), Box::new(|t| probe(&t.exp())))),
        case!("ln", |r| (rand_tensor(r, &[8], 0.1, 2.0), Box::new(|t| probe(&t.ln()?)))),
        case!("clamp", |r| (x(r, &[8]), Box::new(|t| probe(&t.clamp(-1.0, 1.0)?)))),
        case!("sum", |r| (x(r, &[3, 3]), Box::new(|t| Ok(t.sum().mul_scalar(1.5))))),
        case!("mean", |r| (x(r, &[3, 3]), Box::new(|t| Ok(t.mean().mul_scalar(1.5))))),
        case!("reshape", |r| (x(r, &[2, 6]), Box::new(|t| probe(&t.reshape(&[3, 4])?)))),
        case!("matmul/lhs", |r| {
            let b = x(r, &[4, 2]);
            (x(r, &[3, 4]), Box::new(move |t| probe(&t.matmul(&b)?)))
        }),
        case!("matmul/rhs", |r| {
            let a = x(r, &[3, 4]);
            (x(r, &[4, 2]), Box::new(move |t| probe(&a.matmul(t)?)))
        }),
        case!("add_row/matrix", |r| {
            let row = x(r, &[3]);
            (x(r, &[2, 3]), Box::new(move |t| probe(&t.add_row(&row)?)))
        }),
        case!("add_row/row", |r| {
            let m = x(r, &[2, 3]);
            (x(r, &[3]), Box::new(move |t| probe(&m.add_row(t)?)))
        }),
        case!("conv2d/input", |r| {
            let (k, b) = (x(r, &[3, 2, 3, 3]), x(r, &[3]));
            (x(r, &[2, 2, 5, 4]), Box::new(move |t| probe(&t.conv2d(&k, &b, 1, 1)?)))
        }),
        case!("conv2d/kernel", |r| {
            let (input, b) = (x(r, &[2, 2, 4, 4]), x(r, &[3]));
            (x(r, &[3, 2, 3, 3]), Box::new(move |t| probe(&input.conv2d(t, &b, 1, 1)?)))
        }),
        case!("conv2d/bias", |r| {
            let (input, k) = (x(r, &[1, 2, 4, 4]), x(r, &[3, 2, 3, 3]));
            (x(r, &[3]), Box::new(move |t| probe(&input.conv2d(&k, t, 1, 1)?)))
        }),
        case!("conv2d/strided", |r| {
            let (k, b) = (x(r, &[2, 1, 3, 3]), x(r, &[2]));
            (x(r, &[1, 1, 6, 5]), Box::new(move |t| probe(&t.conv2d(&k, &b, 2, 0)?)))
        }),
        case!("conv2d/1x1", |r| {
            let (input, b) = (x(r, &[1, 3, 2, 2]), x(r, &[2]));
            (x(r, &[2, 3, 1, 1]), Box::new(move |t| probe(&input.conv2d(t, &b, 1, 0)?)))
        }),
        case!("maxpool2d", |r| (x(r, &[2, 2, 4, 4]), Box::new(|t| probe(&t.maxpool2d()?)))),
        case!("upsample_nearest", |r| (x(r, &[1, 2, 2, 3]), Box::new(|t| probe(&t.upsample_nearest()?)))),
        case!("concat/first", |r| {
            let b = x(r, &[2, 1, 2, 2]);
            (x(r, &[2, 2, 2, 2]), Box::new(move |t| probe(&t.concat_channels(&b)?)))
        }),
        case!("concat/second", |r| {
            let a = x(r, &[2, 2, 2, 2]);
            (x(r, &[2, 1, 2, 2]), Box::new(move |t| probe(&a.concat_channels(t)?)))
        }),
        case!("softmax_channels", |r| (x(r, &[2, 4, 2, 2]), Box::new(|t| probe(&t.softmax_channels()?)))),
        case!("channel_sum", |r| (x(r, &[2, 3, 2, 2]), Box::new(|t| probe(&t.channel_sum()?)))),
        case!("global_avg_pool", |r| (x(r, &[2, 3, 2, 2]), Box::new(|t| probe(&t.global_avg_pool()?)))),
        case!("bce", |r| {
            let target = rand_tensor(r, &[6], 0.0, 1.0);
            (rand_tensor(r, &[6], 0.05, 0.95), Box::new(move |p| bce(p, &target)))
        }),
        case!("bce/logits", |r| {
            let target = Tensor::new(&[4, 1], (0..4).map(|_| f64::from(r.gen_range(0u8..2))).collect()).unwrap();
            (x(r, &[4, 1]), Box::new(move |z| bce(&z.sigmoid(), &target)))
        }),
        case!("dice", |r| {
            let target = onehot(r, 2, 3, 2, 2);
            (rand_tensor(r, &[2, 3, 2, 2], 0.05, 0.95), Box::new(move |p| dice_loss(p, &target, 1e-6)))
        }),
        case!("combined_seg_loss", |r| {
            let target = onehot(r, 2, 4, 2, 2);
            let w = LossWeights::default();
            (x(r, &[2, 4, 2, 2]), Box::new(move |z| combined_seg_loss(z, &target, &w)))
        }),
        case!("semi_supervised_loss/sup", |r| {
            let (pseudo, alpha) = (x(r, &[1]), r.gen_range(0.0..1.0));
            (x(r, &[1]), Box::new(move |s| semi_supervised_loss(&s.mul(s)?, Some(&pseudo), alpha)))
        }),
        case!("semi_supervised_loss/pseudo", |r| {
            let (sup, alpha) = (x(r, &[1]), r.gen_range(0.1..1.0));
            (x(r, &[1]), Box::new(move |p| semi_supervised_loss(&sup, Some(&p.exp()), alpha)))
        }),
    ]
}

fn onehot(r: &mut ChaCha8Rng, n: usize, c: usize, h: usize, w: usize) -> Tensor {
    let mut data = vec![0.0; n * c * h * w];
    for i in 0..n {
        for p in 0..h * w {
            let k = r.gen_range(0..c);
            data[(i * c + k) * h * w + p] = 1.0;
        }
    }
    Tensor::new(&[n, c, h, w], data).unwrap()
}

/// Largest relative error over `trials` random points.
pub fn worst_error(case: &GradCase, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            let (x, f) = (case.build)(&mut rng);
            check_gradient(|t: &Tensor| f(t), &x, EPS).expect(case.name)
        })
        .fold(0.0, f64::max)
}
