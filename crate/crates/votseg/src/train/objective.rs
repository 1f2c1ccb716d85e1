use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::Utterance;
use crate::error::{Error, Result};
use crate::nn::{summary_backward, Model, ModelParams};
use crate::seg::{structural_hinge, FeatureSequence, Segmentation, TaskLossConfig, VotType};

/// Per-utterance terms of the joint objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBundle {
    pub struct_loss: f64,
    pub tagger_loss: f64,
    pub adversary_loss: f64,
    pub total: f64,
    pub lambda: f64,
}

impl LossBundle {
    pub fn new(struct_loss: f64, tagger_loss: f64, adversary_loss: f64, lambda: f64) -> Self {
        Self {
            struct_loss,
            tagger_loss,
            adversary_loss,
            total: struct_loss + tagger_loss + lambda * adversary_loss,
            lambda,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveOptions {
    pub tau: TaskLossConfig,
    pub lambda: f64,
    /// Negate the adversary gradient entering the encoder. Off only for
    /// gradient checks of the plain joint loss.
    pub reversal: bool,
}

impl ObjectiveOptions {
    pub fn new(tau_frames: usize, lambda: f64) -> Self {
        Self {
            tau: TaskLossConfig { tau_frames },
            lambda,
            reversal: true,
        }
    }
}

/// A normalized utterance with everything the objective needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub id: String,
    pub x: FeatureSequence,
    pub gold: Segmentation,
    pub kind: VotType,
    /// Index into the model's corpus list; `None` for corpora the model
    /// was not trained on.
    pub corpus: Option<usize>,
}

impl TrainingExample {
    pub fn from_utterance(u: &Utterance, model: &Model) -> Result<Self> {
        let annotation = u.annotation()?;
        Ok(Self {
            id: u.id.clone(),
            x: model.prepare(&u.features)?,
            gold: u.gold_segmentation()?,
            kind: annotation.vot_type(),
            corpus: model.corpus_index(&u.corpus_id),
        })
    }
}

/// Joint loss of one utterance. The structural term always uses the
/// gold-type head.
pub fn utterance_loss(model: &Model, ex: &TrainingExample, opts: &ObjectiveOptions) -> Result<LossBundle> {
    run(model, ex, opts, None)
}

/// Joint loss plus its gradient, accumulated into `grad`.
pub fn utterance_loss_and_grad(
    model: &Model,
    ex: &TrainingExample,
    opts: &ObjectiveOptions,
    grad: &mut ModelParams,
) -> Result<LossBundle> {
    run(model, ex, opts, Some(grad))
}

fn run(
    model: &Model,
    ex: &TrainingExample,
    opts: &ObjectiveOptions,
    mut grad: Option<&mut ModelParams>,
) -> Result<LossBundle> {
    let p = &model.params;
    let (h, cache) = p.encoder.forward(ex.x.frames().view())?;
    let head_kind = model.scoring_head(ex.kind);
    let head = p.heads.get(head_kind);
    let hinge = structural_hinge(&head.score(&h), ex.gold, opts.tau)?;

    let mut d_frames = grad
        .as_ref()
        .map(|_| Array2::<f64>::zeros(h.as_array().raw_dim()));
    if let (Some(g), Some(d)) = (grad.as_deref_mut(), d_frames.as_mut()) {
        if hinge.value > 0.0 {
            head.backward(&h, &hinge.score_gradient(ex.gold), g.heads.get_mut(head_kind), d);
        }
    }

    let summary = h.summarize();
    let mut d_summary = ndarray::Array1::<f64>::zeros(summary.len());

    let mut tagger_loss = 0.0;
    if model.config.use_tagger {
        let pass = p.tagger.forward(&summary);
        match grad.as_deref_mut() {
            Some(g) => {
                let (loss, ds) = p.tagger.nll_backward(&summary, &pass, ex.kind.index(), 1.0, &mut g.tagger);
                tagger_loss = loss;
                d_summary += &ds;
            }
            None => tagger_loss = -pass.probs[ex.kind.index()].ln(),
        }
    }

    let mut adversary_loss = 0.0;
    if let Some(adv) = &p.adversary {
        let corpus = ex.corpus.ok_or_else(|| {
            Error::Data(format!("{}: corpus unknown to the adversary", ex.id))
        })?;
        let pass = adv.net.forward(&summary);
        match grad.as_deref_mut() {
            Some(g) => {
                let g_adv = g.adversary.as_mut().expect("gradient mirrors the model");
                let (loss, ds) =
                    adv.nll_backward(&summary, &pass, corpus, opts.lambda, opts.reversal, g_adv);
                adversary_loss = loss;
                d_summary += &ds;
            }
            None => adversary_loss = -pass.probs[corpus].ln(),
        }
    }

    if let (Some(g), Some(mut d)) = (grad, d_frames) {
        summary_backward(&d_summary, h.hidden(), &mut d);
        p.encoder.backward(&cache, d, &mut g.encoder);
    }
    Ok(LossBundle::new(hinge.value, tagger_loss, adversary_loss, opts.lambda))
}
