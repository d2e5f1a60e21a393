//! Forward pass, losses, and exact analytic gradients.

use ndarray::{Array1, Array2};

use super::{LossMode, MultitaskParams};
use crate::error::Error;
use crate::Result;

/// One encoded training/prediction input.
#[derive(Debug, Clone)]
pub struct ModelInput {
    pub sample_id: u64,
    /// Embedding row ids (0 is UNK).
    pub token_ids: Vec<usize>,
    pub image: Array1<f64>,
    pub answer: Option<usize>,
    pub element: Option<usize>,
}

fn tanh(v: &Array1<f64>) -> Array1<f64> {
    v.mapv(f64::tanh)
}

/// Numerically stable log-softmax via max subtraction.
pub(crate) fn log_softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits.mapv(|v| (v - max).exp()).sum().ln();
    logits.mapv(|v| v - max - log_sum)
}

/// Mean of the token embedding rows: the bag-of-words question vector.
fn mean_embedding(token_ids: &[usize], params: &MultitaskParams) -> Result<Array1<f64>> {
    if token_ids.is_empty() {
        return Err(Error::EmptyQuestion);
    }
    let mut sum = Array1::zeros(params.dims.d_w);
    for &id in token_ids {
        sum += &params.word_embeddings.row(id);
    }
    Ok(sum / token_ids.len() as f64)
}

/// Mean token embedding passed through the tanh affine question projection.
pub fn encode_question(token_ids: &[usize], params: &MultitaskParams) -> Result<Array1<f64>> {
    let embedded = mean_embedding(token_ids, params)?;
    Ok(tanh(
        &(params.question_proj_w.dot(&embedded) + &params.question_proj_b),
    ))
}

/// Image features through the tanh affine image projection.
pub fn encode_image(raw: &Array1<f64>, params: &MultitaskParams) -> Result<Array1<f64>> {
    if raw.len() != params.dims.d_img {
        return Err(Error::DimMismatch {
            got: raw.len(),
            expected: params.dims.d_img,
        });
    }
    Ok(tanh(&(params.image_proj_w.dot(raw) + &params.image_proj_b)))
}

/// Every intermediate activation of one forward pass, kept for backprop.
struct Activations {
    embedded: Array1<f64>,
    q: Array1<f64>,
    v: Array1<f64>,
    fused: Array1<f64>,
    h1: Array1<f64>,
    h2: Array1<f64>,
    answer_logp: Array1<f64>,
    element_logp: Array1<f64>,
}

fn forward_full(input: &ModelInput, params: &MultitaskParams) -> Result<Activations> {
    let embedded = mean_embedding(&input.token_ids, params)?;
    let q = tanh(&(params.question_proj_w.dot(&embedded) + &params.question_proj_b));
    let v = encode_image(&input.image, params)?;
    let fused = &q * &v;
    let h1 = tanh(&(params.fusion1_w.dot(&fused) + &params.fusion1_b));
    let h2 = tanh(&(params.fusion2_w.dot(&h1) + &params.fusion2_b));
    let answer_logp = log_softmax(&(params.answer_w.dot(&h2) + &params.answer_b));
    let element_logp = log_softmax(&(params.element_w.dot(&h2) + &params.element_b));
    Ok(Activations {
        embedded,
        q,
        v,
        fused,
        h1,
        h2,
        answer_logp,
        element_logp,
    })
}

/// Probability distributions of the two heads; each sums to 1 within 1e-6.
pub fn forward(
    input: &ModelInput,
    params: &MultitaskParams,
) -> Result<(Array1<f64>, Array1<f64>)> {
    let acts = forward_full(input, params)?;
    Ok((
        acts.answer_logp.mapv(f64::exp),
        acts.element_logp.mapv(f64::exp),
    ))
}

fn mode_factor(mode: LossMode) -> f64 {
    match mode {
        LossMode::Sum => 1.0,
        LossMode::Average => 0.5,
    }
}

/// Mean over the batch of the summed (or averaged) head cross-entropies.
pub fn loss(batch: &[ModelInput], params: &MultitaskParams, mode: LossMode) -> Result<f64> {
    loss_with(batch, params, mode, false)
}

/// As [`loss`], with the element term dropped in single-task mode.
pub fn loss_with(
    batch: &[ModelInput],
    params: &MultitaskParams,
    mode: LossMode,
    single_task: bool,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::UnlabeledSample(0));
    }
    let mut total = 0.0;
    for input in batch {
        let answer = input
            .answer
            .ok_or(Error::UnlabeledSample(input.sample_id))?;
        let acts = forward_full(input, params)?;
        let mut sample_loss = -acts.answer_logp[answer];
        if !single_task {
            let element = input
                .element
                .ok_or(Error::UnlabeledSample(input.sample_id))?;
            sample_loss -= acts.element_logp[element];
        }
        total += sample_loss;
    }
    Ok(mode_factor(mode) * total / batch.len() as f64)
}

/// Parameter-shaped gradient collection, in the same tensor order as
/// [`MultitaskParams`].
#[derive(Debug, Clone)]
pub struct Gradients {
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

impl Gradients {
    pub fn zeros_like(params: &MultitaskParams) -> Self {
        Gradients {
            word_embeddings: Array2::zeros(params.word_embeddings.raw_dim()),
            question_proj_w: Array2::zeros(params.question_proj_w.raw_dim()),
            question_proj_b: Array1::zeros(params.question_proj_b.raw_dim()),
            image_proj_w: Array2::zeros(params.image_proj_w.raw_dim()),
            image_proj_b: Array1::zeros(params.image_proj_b.raw_dim()),
            fusion1_w: Array2::zeros(params.fusion1_w.raw_dim()),
            fusion1_b: Array1::zeros(params.fusion1_b.raw_dim()),
            fusion2_w: Array2::zeros(params.fusion2_w.raw_dim()),
            fusion2_b: Array1::zeros(params.fusion2_b.raw_dim()),
            answer_w: Array2::zeros(params.answer_w.raw_dim()),
            answer_b: Array1::zeros(params.answer_b.raw_dim()),
            element_w: Array2::zeros(params.element_w.raw_dim()),
            element_b: Array1::zeros(params.element_b.raw_dim()),
        }
    }

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

    /// Euclidean norm over every entry.
    pub fn norm(&self) -> f64 {
        self.flat()
            .iter()
            .flat_map(|s| s.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

fn add_outer(target: &mut Array2<f64>, u: &Array1<f64>, v: &Array1<f64>) {
    for (i, ui) in u.iter().enumerate() {
        if *ui == 0.0 {
            continue;
        }
        let mut row = target.row_mut(i);
        for (j, vj) in v.iter().enumerate() {
            row[j] += ui * vj;
        }
    }
}

/// Exact analytic gradients of [`loss`] over the batch.
pub fn gradients(
    batch: &[ModelInput],
    params: &MultitaskParams,
    mode: LossMode,
) -> Result<Gradients> {
    gradients_with(batch, params, mode, false).map(|(g, _)| g)
}

/// Gradients plus the batch statistics gathered on the same forward pass:
/// `(loss, answer hits, element hits)`.
pub fn gradients_with(
    batch: &[ModelInput],
    params: &MultitaskParams,
    mode: LossMode,
    single_task: bool,
) -> Result<(Gradients, BatchStats)> {
    if batch.is_empty() {
        return Err(Error::UnlabeledSample(0));
    }
    let mut grads = Gradients::zeros_like(params);
    let mut stats = BatchStats::default();
    let scale = mode_factor(mode) / batch.len() as f64;

    for input in batch {
        let answer = input
            .answer
            .ok_or(Error::UnlabeledSample(input.sample_id))?;
        let acts = forward_full(input, params)?;

        stats.loss += -acts.answer_logp[answer];
        if argmax(&acts.answer_logp) == answer {
            stats.answer_hits += 1;
        }

        // softmax + cross-entropy: d logits = p - onehot, times the scale
        let mut d_answer = acts.answer_logp.mapv(f64::exp);
        d_answer[answer] -= 1.0;
        d_answer *= scale;

        let mut d_h2 = params.answer_w.t().dot(&d_answer);
        add_outer(&mut grads.answer_w, &d_answer, &acts.h2);
        grads.answer_b += &d_answer;

        if let Some(element) = input.element {
            if argmax(&acts.element_logp) == element {
                stats.element_hits += 1;
            }
            if !single_task {
                stats.loss += -acts.element_logp[element];
                let mut d_element = acts.element_logp.mapv(f64::exp);
                d_element[element] -= 1.0;
                d_element *= scale;
                d_h2 += &params.element_w.t().dot(&d_element);
                add_outer(&mut grads.element_w, &d_element, &acts.h2);
                grads.element_b += &d_element;
            }
        } else if !single_task {
            return Err(Error::UnlabeledSample(input.sample_id));
        }

        let d_z2 = &d_h2 * &acts.h2.mapv(|h| 1.0 - h * h);
        add_outer(&mut grads.fusion2_w, &d_z2, &acts.h1);
        grads.fusion2_b += &d_z2;

        let d_h1 = params.fusion2_w.t().dot(&d_z2);
        let d_z1 = &d_h1 * &acts.h1.mapv(|h| 1.0 - h * h);
        add_outer(&mut grads.fusion1_w, &d_z1, &acts.fused);
        grads.fusion1_b += &d_z1;

        let d_fused = params.fusion1_w.t().dot(&d_z1);
        let d_q = &d_fused * &acts.v;
        let d_v = &d_fused * &acts.q;

        let d_zq = &d_q * &acts.q.mapv(|h| 1.0 - h * h);
        add_outer(&mut grads.question_proj_w, &d_zq, &acts.embedded);
        grads.question_proj_b += &d_zq;

        let d_zv = &d_v * &acts.v.mapv(|h| 1.0 - h * h);
        add_outer(&mut grads.image_proj_w, &d_zv, &input.image);
        grads.image_proj_b += &d_zv;

        let d_embedded = params.question_proj_w.t().dot(&d_zq) / input.token_ids.len() as f64;
        for &id in &input.token_ids {
            let mut row = grads.word_embeddings.row_mut(id);
            row += &d_embedded;
        }
    }

    stats.loss *= mode_factor(mode) / batch.len() as f64;
    stats.samples = batch.len();
    Ok((grads, stats))
}

/// Loss and head hit counts accumulated over a batch.
#[derive(Debug, Clone, Copy, Default)]
pub struct BatchStats {
    pub loss: f64,
    pub answer_hits: usize,
    pub element_hits: usize,
    pub samples: usize,
}

/// Argmax with ties broken toward the lower index.
pub(crate) fn argmax(values: &Array1<f64>) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
