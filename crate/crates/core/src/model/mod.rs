//! From-scratch multi-task classifier: a shared question/image encoder fused
//! by pointwise multiplication, two tanh layers, and softmax heads over
//! answers and frame elements, trained with rmsprop.
//!
//! All math is f64 and single-threaded; training is bit-reproducible from
//! `(seed, config, dataset)`.

mod checkpoint;
mod features;
mod net;
mod optim;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use features::{load_features, FeatureSource};
pub use net::{
    encode_image, encode_question, forward, gradients, gradients_with, loss, loss_with, Gradients,
    ModelInput,
};
pub use optim::{rmsprop_step, RmspropState};
pub use train::{
    constant_predictions, per_verb_prior, per_verb_prior_predictions, predict, prepare_inputs,
    prior_baseline, tokenize, train, EpochStats, TokenVocab, TrainOutcome,
};

use ndarray::{Array1, Array2};
use rand::rngs::StdRng;
use rand::Rng;

/// How the two head losses combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossMode {
    /// Cross-entropy of the two heads added per sample.
    #[default]
    Sum,
    /// Half the sum: the same objective at half the gradient scale.
    Average,
}

impl std::str::FromStr for LossMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sum" => Ok(LossMode::Sum),
            "average" => Ok(LossMode::Average),
            other => Err(format!("unknown loss mode {other:?}")),
        }
    }
}

/// Layer dimensions: word embedding, hidden/fusion, and image input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub d_w: usize,
    pub d_h: usize,
    pub d_img: usize,
}

impl Default for ModelDims {
    /// Desk-scale defaults; paper-scale (300/1024/4096) is accepted too.
    fn default() -> Self {
        ModelDims {
            d_w: 32,
            d_h: 64,
            d_img: 64,
        }
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub dims: ModelDims,
    pub loss_mode: LossMode,
    /// Disable the frame-element head and its loss term.
    pub single_task: bool,
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            epochs: 20,
            seed: 0,
            dims: ModelDims::default(),
            loss_mode: LossMode::Sum,
            single_task: false,
            learning_rate: 1e-3,
            decay: 0.9,
            epsilon: 1e-8,
        }
    }
}

/// All trainable tensors plus the token vocabulary binding embedding rows.
///
/// Embedding row 0 is the shared UNK row; word `i` of the vocabulary owns
/// row `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultitaskParams {
    pub dims: ModelDims,
    pub n_answers: usize,
    pub n_elements: usize,
    pub token_vocab: train::TokenVocab,
    pub word_embeddings: Array2<f64>,
    pub question_proj_w: Array2<f64>,
    pub question_proj_b: Array1<f64>,
    pub image_proj_w: Array2<f64>,
    pub image_proj_b: Array1<f64>,
    pub fusion1_w: Array2<f64>,
    pub fusion1_b: Array1<f64>,
    pub fusion2_w: Array2<f64>,
    pub fusion2_b: Array1<f64>,
    pub answer_w: Array2<f64>,
    pub answer_b: Array1<f64>,
    pub element_w: Array2<f64>,
    pub element_b: Array1<f64>,
}

/// Uniform init in ±sqrt(6 / (fan_in + fan_out)), filled row-major from the
/// shared rng so initialization is reproducible.
fn scaled_uniform(rng: &mut StdRng, rows: usize, cols: usize) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let mut m = Array2::zeros((rows, cols));
    for v in m.iter_mut() {
        *v = rng.gen_range(-limit..limit);
    }
    m
}

impl MultitaskParams {
    pub fn init(
        dims: ModelDims,
        n_answers: usize,
        n_elements: usize,
        token_vocab: train::TokenVocab,
        rng: &mut StdRng,
    ) -> Self {
        let vocab_rows = token_vocab.rows();
        MultitaskParams {
            dims,
            n_answers,
            n_elements,
            token_vocab,
            word_embeddings: scaled_uniform(rng, vocab_rows, dims.d_w),
            question_proj_w: scaled_uniform(rng, dims.d_h, dims.d_w),
            question_proj_b: Array1::zeros(dims.d_h),
            image_proj_w: scaled_uniform(rng, dims.d_h, dims.d_img),
            image_proj_b: Array1::zeros(dims.d_h),
            fusion1_w: scaled_uniform(rng, dims.d_h, dims.d_h),
            fusion1_b: Array1::zeros(dims.d_h),
            fusion2_w: scaled_uniform(rng, dims.d_h, dims.d_h),
            fusion2_b: Array1::zeros(dims.d_h),
            answer_w: scaled_uniform(rng, n_answers, dims.d_h),
            answer_b: Array1::zeros(n_answers),
            element_w: scaled_uniform(rng, n_elements, dims.d_h),
            element_b: Array1::zeros(n_elements),
        }
    }

    /// Tensor names in flat order; the same order is used by gradients, the
    /// optimizer state, and checkpoints.
    pub const TENSOR_NAMES: [&'static str; 13] = [
        "word_embeddings",
        "question_proj_w",
        "question_proj_b",
        "image_proj_w",
        "image_proj_b",
        "fusion1_w",
        "fusion1_b",
        "fusion2_w",
        "fusion2_b",
        "answer_w",
        "answer_b",
        "element_w",
        "element_b",
    ];

    pub fn flat(&self) -> Vec<&[f64]> {
        vec![
            self.word_embeddings.as_slice().unwrap(),
            self.question_proj_w.as_slice().unwrap(),
            self.question_proj_b.as_slice().unwrap(),
            self.image_proj_w.as_slice().unwrap(),
            self.image_proj_b.as_slice().unwrap(),
            self.fusion1_w.as_slice().unwrap(),
            self.fusion1_b.as_slice().unwrap(),
            self.fusion2_w.as_slice().unwrap(),
            self.fusion2_b.as_slice().unwrap(),
            self.answer_w.as_slice().unwrap(),
            self.answer_b.as_slice().unwrap(),
            self.element_w.as_slice().unwrap(),
            self.element_b.as_slice().unwrap(),
        ]
    }

    pub fn flat_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.word_embeddings.as_slice_mut().unwrap(),
            self.question_proj_w.as_slice_mut().unwrap(),
            self.question_proj_b.as_slice_mut().unwrap(),
            self.image_proj_w.as_slice_mut().unwrap(),
            self.image_proj_b.as_slice_mut().unwrap(),
            self.fusion1_w.as_slice_mut().unwrap(),
            self.fusion1_b.as_slice_mut().unwrap(),
            self.fusion2_w.as_slice_mut().unwrap(),
            self.fusion2_b.as_slice_mut().unwrap(),
            self.answer_w.as_slice_mut().unwrap(),
            self.answer_b.as_slice_mut().unwrap(),
            self.element_w.as_slice_mut().unwrap(),
            self.element_b.as_slice_mut().unwrap(),
        ]
    }

    pub fn parameter_count(&self) -> usize {
        self.flat().iter().map(|s| s.len()).sum()
    }
}
