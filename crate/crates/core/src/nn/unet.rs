use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_batch, Conv, Model, ModelConfig, ModelKind};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Two-level encoder/decoder. Encoder blocks in → w → 2w with max pooling,
/// a 4w bottleneck, then nearest upsampling, concatenation with the encoder
/// block of the same resolution and a conv block at each decoder level, and a
/// final 1×1 projection to `n_classes` channels.
#[derive(Debug, Clone)]
pub struct SegmenterModel<T: Scalar> {
    config: ModelConfig,
    enc1: Conv<T>,
    enc2: Conv<T>,
    bottleneck: Conv<T>,
    dec2: Conv<T>,
    dec1: Conv<T>,
    head: Conv<T>,
}

impl<T: Scalar> SegmenterModel<T> {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate(ModelKind::Segmenter)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let w = config.base_width;
        Ok(SegmenterModel {
            enc1: Conv::init(&mut rng, config.in_channels, w, 3)?,
            enc2: Conv::init(&mut rng, w, 2 * w, 3)?,
            bottleneck: Conv::init(&mut rng, 2 * w, 4 * w, 3)?,
            dec2: Conv::init(&mut rng, 4 * w + 2 * w, 2 * w, 3)?,
            dec1: Conv::init(&mut rng, 2 * w + w, w, 3)?,
            head: Conv::init(&mut rng, w, config.n_classes, 1)?,
            config,
        })
    }

    fn convs(&self) -> [&Conv<T>; 6] {
        [&self.enc1, &self.enc2, &self.bottleneck, &self.dec2, &self.dec1, &self.head]
    }
}

impl<T: Scalar> Model<T> for SegmenterModel<T> {
    fn kind(&self) -> ModelKind {
        ModelKind::Segmenter
    }

    fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn forward(&self, batch: &Tensor<T>) -> Result<Tensor<T>> {
        check_batch(batch, self.config.in_channels)?;
        let skip1 = self.enc1.forward(batch)?.relu();
        let skip2 = self.enc2.forward(&skip1.maxpool2d()?)?.relu();
        let bottom = self.bottleneck.forward(&skip2.maxpool2d()?)?.relu();
        let up2 = bottom.upsample_nearest()?.concat_channels(&skip2)?;
        let up2 = self.dec2.forward(&up2)?.relu();
        let up1 = up2.upsample_nearest()?.concat_channels(&skip1)?;
        let up1 = self.dec1.forward(&up1)?.relu();
        self.head.forward(&up1)
    }

    fn parameters(&self) -> Vec<&Tensor<T>> {
        self.convs()
            .into_iter()
            .flat_map(|c| [&c.weight, &c.bias])
            .collect()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor<T>> {
        [
            &mut self.enc1,
            &mut self.enc2,
            &mut self.bottleneck,
            &mut self.dec2,
            &mut self.dec1,
            &mut self.head,
        ]
        .into_iter()
        .flat_map(|c| [&mut c.weight, &mut c.bias])
        .collect()
    }
}
