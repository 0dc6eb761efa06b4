use log::{debug, warn};

use super::{adam_step, encode, gradients, AdamState, Embedding, EncoderParams, FeatureInput};
use super::{ModelError, Result, Variant};
use crate::graph::{diffusion, Graph};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// weight of the mean squared embedding norm
    pub lambda: f64,
    pub seed: u64,
    pub embedding_dim: usize,
    /// `None` picks `max(2d, 16)`
    pub hidden_dim: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            lambda: 1e-3,
            seed: 0,
            embedding_dim: 16,
            hidden_dim: None,
        }
    }
}

impl TrainConfig {
    pub fn hidden(&self) -> usize {
        self.hidden_dim.unwrap_or_else(|| (2 * self.embedding_dim).max(16))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("adam betas must lie in [0, 1)");
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad("epsilon must be positive");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be nonnegative");
        }
        if self.embedding_dim == 0 || self.hidden() == 0 {
            return bad("embedding and hidden dimensions must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: EncoderParams,
    /// embedding of the training graph under the final weights
    pub embedding: Embedding,
    /// loss before each update, one entry per epoch
    pub loss_history: Vec<f64>,
    pub input: FeatureInput,
}

impl TrainOutcome {
    pub fn final_loss(&self) -> f64 {
        *self.loss_history.last().expect("at least one epoch")
    }
}

/// Full-batch training for exactly `config.epochs` Adam steps. Without
/// `use_features` (or on a featureless graph) the input is the identity.
pub fn train(g: &Graph, config: &TrainConfig, variant: Variant, use_features: bool) -> Result<TrainOutcome> {
    config.validate()?;
    let input = FeatureInput::for_graph(g, use_features);
    let (gdim, h, d) = (input.cols(), config.hidden(), config.embedding_dim);
    if gdim <= h {
        warn!("input dimension {gdim} does not exceed hidden dimension {h}");
    }
    let diff = diffusion(g);
    let mut params = EncoderParams::init(variant, gdim, h, d, config.seed);
    let mut state = AdamState::new(&params);
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let grads = gradients(g.adjacency(), &diff, &input, &params, config.lambda)?;
        if !grads.loss.is_finite() || !grads.w0.is_finite() || !grads.w1.is_finite() {
            return Err(ModelError::Divergence { epoch });
        }
        history.push(grads.loss);
        adam_step(&mut params, &grads, &mut state, config);
        if epoch == 1 || epoch % 50 == 0 {
            debug!("epoch {epoch}: loss {:.6}", grads.loss);
        }
    }
    let embedding = encode(&params, &diff, &input).map_err(|e| match e {
        ModelError::Linalg(crate::linalg::LinalgError::NonFinite { .. }) => {
            ModelError::Divergence { epoch: config.epochs }
        }
        other => other,
    })?;
    Ok(TrainOutcome {
        params,
        embedding,
        loss_history: history,
        input,
    })
}
