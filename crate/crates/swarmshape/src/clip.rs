//! Contrastive text/image scorer running exported ONNX encoders.
//!
//! A model bundle is a directory holding
//!
//! - `textual.onnx`: `input_ids` (`int64 [1, 77]`, and optionally an
//!   `attention_mask` of the same shape) to a text embedding `[1, D]`;
//! - `visual.onnx`: `pixel_values` (`float32 [1, 3, 224, 224]`,
//!   normalized with the usual CLIP channel mean and deviation) to an image
//!   embedding `[1, D]`;
//! - `tokenizer.json`: a byte-pair-encoding tokenizer in the Hugging Face
//!   format whose post-processor adds the start and end tokens.
//!
//! Images are encoded one at a time, so a batch gives exactly the scores of
//! the per-image calls.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;

use swarmshape_core::raster::CANVAS_SIZE;
use swarmshape_core::similarity::cosine_score;
use swarmshape_core::{RasterImage, ScoreError, Scorer, SimilarityScore};
use tokenizers::Tokenizer;
use tract_onnx::prelude::*;

pub const CONTEXT_LENGTH: usize = 77;

const MEAN: [f32; 3] = [0.481_454_66, 0.457_827_5, 0.408_210_73];
const STD: [f32; 3] = [0.268_629_54, 0.261_302_58, 0.275_777_11];

type Plan = Arc<TypedRunnableModel>;

pub struct ClipScorer {
    textual: Plan,
    text_inputs: usize,
    visual: Plan,
    tokenizer: Tokenizer,
    /// Last text embedding, keyed by its prompt.
    text_cache: Mutex<Option<(String, Vec<f32>)>>,
}

fn load_err(path: &Path, e: impl std::fmt::Display) -> ScoreError {
    ScoreError::ModelLoad(format!("{}: {e}", path.display()))
}

fn infer_err(e: impl std::fmt::Display) -> ScoreError {
    ScoreError::Inference(e.to_string())
}

fn load_plan(path: &Path, facts: &[InferenceFact]) -> Result<(Plan, usize), ScoreError> {
    let mut model = tract_onnx::onnx().model_for_path(path).map_err(|e| load_err(path, e))?;
    let inputs = model.inputs.len();
    if inputs == 0 || inputs > facts.len() {
        return Err(load_err(path, format!("unexpected number of inputs ({inputs})")));
    }
    for (i, fact) in facts.iter().take(inputs).enumerate() {
        model = model.with_input_fact(i, fact.clone()).map_err(|e| load_err(path, e))?;
    }
    let plan = model
        .into_optimized()
        .and_then(|m| m.into_runnable())
        .map_err(|e| load_err(path, e))?;
    Ok((plan, inputs))
}

fn first_row(outputs: TVec<TValue>) -> Result<Vec<f32>, ScoreError> {
    let out = outputs.into_iter().next().ok_or_else(|| infer_err("model has no output"))?;
    let view = out.to_plain_array_view::<f32>().map_err(infer_err)?;
    Ok(view.iter().copied().collect())
}

impl ClipScorer {
    pub fn load(dir: &Path) -> Result<Self, ScoreError> {
        let file = |name: &str| -> PathBuf { dir.join(name) };
        let tok_path = file("tokenizer.json");
        let tokenizer = Tokenizer::from_file(&tok_path).map_err(|e| load_err(&tok_path, e))?;
        let ids = InferenceFact::dt_shape(i64::datum_type(), tvec!(1, CONTEXT_LENGTH));
        let (textual, text_inputs) = load_plan(&file("textual.onnx"), &[ids.clone(), ids])?;
        let pixels = InferenceFact::dt_shape(f32::datum_type(), tvec!(1, 3, CANVAS_SIZE, CANVAS_SIZE));
        let (visual, _) = load_plan(&file("visual.onnx"), &[pixels])?;
        Ok(ClipScorer {
            textual,
            text_inputs,
            visual,
            tokenizer,
            text_cache: Mutex::new(None),
        })
    }

    /// Token ids padded with zeros to the context length, and the matching
    /// attention mask. Over-long prompts keep their end token.
    pub fn tokenize(&self, text: &str) -> Result<(Vec<i64>, Vec<i64>), ScoreError> {
        let enc = self.tokenizer.encode(text, true).map_err(infer_err)?;
        let mut ids: Vec<i64> = enc.get_ids().iter().map(|&i| i as i64).collect();
        if ids.len() > CONTEXT_LENGTH {
            let end = *ids.last().expect("non-empty");
            ids.truncate(CONTEXT_LENGTH);
            ids[CONTEXT_LENGTH - 1] = end;
        }
        let mut mask = vec![1i64; ids.len()];
        ids.resize(CONTEXT_LENGTH, 0);
        mask.resize(CONTEXT_LENGTH, 0);
        Ok((ids, mask))
    }

    pub fn encode_text(&self, text: &str) -> Result<Vec<f32>, ScoreError> {
        let mut cache = self.text_cache.lock().unwrap_or_else(|p| p.into_inner());
        if let Some((cached, emb)) = cache.as_ref() {
            if cached == text {
                return Ok(emb.clone());
            }
        }
        let (ids, mask) = self.tokenize(text)?;
        let as_tensor = |v: Vec<i64>| -> Result<TValue, ScoreError> {
            Ok(tract_ndarray::Array2::from_shape_vec((1, CONTEXT_LENGTH), v)
                .map_err(infer_err)?
                .into_tensor()
                .into_tvalue())
        };
        let mut inputs = tvec![as_tensor(ids)?];
        if self.text_inputs == 2 {
            inputs.push(as_tensor(mask)?);
        }
        let emb = first_row(self.textual.run(inputs).map_err(infer_err)?)?;
        *cache = Some((text.to_owned(), emb.clone()));
        Ok(emb)
    }

    pub fn encode_image(&self, image: &RasterImage) -> Result<Vec<f32>, ScoreError> {
        let n = CANVAS_SIZE;
        let rgb = image.to_rgb8();
        let pixels = tract_ndarray::Array4::from_shape_fn((1, 3, n, n), |(_, c, y, x)| {
            (rgb[(y * n + x) * 3 + c] as f32 / 255.0 - MEAN[c]) / STD[c]
        });
        first_row(
            self.visual
                .run(tvec![pixels.into_tensor().into_tvalue()])
                .map_err(infer_err)?,
        )
    }
}

impl Scorer for ClipScorer {
    fn supports_text(&self) -> bool {
        true
    }

    fn score_batch(&self, text: &str, images: &[&RasterImage]) -> Result<Vec<SimilarityScore>, ScoreError> {
        if images.is_empty() {
            return Ok(Vec::new());
        }
        let text_emb = self.encode_text(text)?;
        images
            .par_iter()
            .map(|img| Ok(cosine_score(&text_emb, &self.encode_image(img)?)))
            .collect()
    }
}
