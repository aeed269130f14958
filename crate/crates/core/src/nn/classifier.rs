use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_batch, he_uniform, Conv, Model, ModelConfig, ModelKind};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Two conv/relu/pool stages (in → w → 2w) with an additive residual skip
/// inside the second stage, global average pooling, and a dense layer to a
/// single logit.
#[derive(Debug, Clone)]
pub struct ClassifierModel<T: Scalar> {
    config: ModelConfig,
    stem: Conv<T>,
    expand: Conv<T>,
    residual: Conv<T>,
    head_weight: Tensor<T>,
    head_bias: Tensor<T>,
}

impl<T: Scalar> ClassifierModel<T> {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate(ModelKind::Classifier)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let w = config.base_width;
        let stem = Conv::init(&mut rng, config.in_channels, w, 3)?;
        let expand = Conv::init(&mut rng, w, 2 * w, 3)?;
        let residual = Conv::init(&mut rng, 2 * w, 2 * w, 3)?;
        let head_weight = he_uniform(&mut rng, &[2 * w, 1], 2 * w)?;
        let head_bias = Tensor::parameter(&[1], vec![T::zero()])?;
        Ok(ClassifierModel {
            config,
            stem,
            expand,
            residual,
            head_weight,
            head_bias,
        })
    }
}

impl<T: Scalar> Model<T> for ClassifierModel<T> {
    fn kind(&self) -> ModelKind {
        ModelKind::Classifier
    }

    fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn forward(&self, batch: &Tensor<T>) -> Result<Tensor<T>> {
        check_batch(batch, self.config.in_channels)?;
        let x = self.stem.forward(batch)?.relu().maxpool2d()?;
        let h = self.expand.forward(&x)?.relu();
        let x = self.residual.forward(&h)?.add(&h)?.relu().maxpool2d()?;
        x.global_avg_pool()?
            .matmul(&self.head_weight)?
            .add_row(&self.head_bias)
    }

    fn parameters(&self) -> Vec<&Tensor<T>> {
        vec![
            &self.stem.weight,
            &self.stem.bias,
            &self.expand.weight,
            &self.expand.bias,
            &self.residual.weight,
            &self.residual.bias,
            &self.head_weight,
            &self.head_bias,
        ]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![
            &mut self.stem.weight,
            &mut self.stem.bias,
            &mut self.expand.weight,
            &mut self.expand.bias,
            &mut self.residual.weight,
            &mut self.residual.bias,
            &mut self.head_weight,
            &mut self.head_bias,
        ]
    }
}
