//! Text/image similarity scoring, color selection and prompt templating.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::raster::{solid_color_image, Mask, NamedColor, RasterImage};

/// A similarity value in `[0, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct SimilarityScore(f64);

impl SimilarityScore {
    pub const ZERO: SimilarityScore = SimilarityScore(0.0);

    /// Clamps into `[0, 1]`; NaN maps to zero.
    pub fn new(value: f64) -> Self {
        if value.is_nan() {
            SimilarityScore(0.0)
        } else {
            SimilarityScore(value.clamp(0.0, 1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("failed to load model: {0}")]
    ModelLoad(String),
    #[error("target mask is {width}x{height}, expected {expected}x{expected}")]
    MaskSizeMismatch {
        expected: usize,
        width: usize,
        height: usize,
    },
    #[error("this scorer backend has no text pathway")]
    BackendUnsupported,
    #[error("inference failed: {0}")]
    Inference(String),
}

/// A text/image similarity oracle.
///
/// Implementations must be deterministic for fixed inputs, and
/// `score_batch` must agree element-wise with `score`.
pub trait Scorer {
    /// Whether `text` influences the score (false for the template backend).
    fn supports_text(&self) -> bool;

    fn score_batch(
        &self,
        text: &str,
        images: &[&RasterImage],
    ) -> Result<Vec<SimilarityScore>, ScoreError>;

    fn score(&self, text: &str, image: &RasterImage) -> Result<SimilarityScore, ScoreError> {
        let scores = self.score_batch(text, &[image])?;
        scores
            .into_iter()
            .next()
            .ok_or_else(|| ScoreError::Inference("empty batch result".into()))
    }
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn supports_text(&self) -> bool {
        (**self).supports_text()
    }

    fn score_batch(
        &self,
        text: &str,
        images: &[&RasterImage],
    ) -> Result<Vec<SimilarityScore>, ScoreError> {
        (**self).score_batch(text, images)
    }
}

/// Scores images by intersection-over-union of their fill pixels against a
/// fixed target silhouette. Text is ignored.
#[derive(Clone, Debug)]
pub struct TemplateScorer {
    target: Mask,
}

impl TemplateScorer {
    pub fn new(target: Mask) -> Self {
        TemplateScorer { target }
    }

    /// Builds the target from single-channel pixels; nonzero is silhouette.
    pub fn from_luma(width: usize, height: usize, pixels: &[u8]) -> Result<Self, ScoreError> {
        let size = crate::raster::CANVAS_SIZE;
        if width != size || height != size || pixels.len() != size * size {
            return Err(ScoreError::MaskSizeMismatch {
                expected: size,
                width,
                height,
            });
        }
        Ok(TemplateScorer::new(Mask::from_fn(|x, y| pixels[y * size + x] != 0)))
    }

    pub fn target(&self) -> &Mask {
        &self.target
    }
}

impl Scorer for TemplateScorer {
    fn supports_text(&self) -> bool {
        false
    }

    fn score_batch(
        &self,
        _text: &str,
        images: &[&RasterImage],
    ) -> Result<Vec<SimilarityScore>, ScoreError> {
        Ok(images
            .iter()
            .map(|img| SimilarityScore::new(img.fill_mask().iou(&self.target)))
            .collect())
    }
}

/// Cosine similarity of two embeddings, clamped to `[0, 1]`.
pub fn cosine_score(a: &[f32], b: &[f32]) -> SimilarityScore {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return SimilarityScore::ZERO;
    }
    SimilarityScore::new(dot / (libm::sqrt(na) * libm::sqrt(nb)))
}

/// Index of the first maximum.
pub fn argmax(scores: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.map_or(true, |(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

/// The basic color whose solid image is most similar to `word`. Ties go to
/// the earlier color in table order.
pub fn select_color<S: Scorer + ?Sized>(word: &str, scorer: &S) -> Result<NamedColor, ScoreError> {
    if !scorer.supports_text() {
        return Err(ScoreError::BackendUnsupported);
    }
    let images: Vec<RasterImage> = NamedColor::ALL.iter().map(|&c| solid_color_image(c)).collect();
    let refs: Vec<&RasterImage> = images.iter().collect();
    let scores: Vec<f64> = scorer
        .score_batch(word, &refs)?
        .into_iter()
        .map(SimilarityScore::value)
        .collect();
    argmax(&scores)
        .map(|i| NamedColor::ALL[i])
        .ok_or_else(|| ScoreError::Inference("no color scores".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("the input word is empty")]
pub struct EmptyWord;

/// The enriched text prompt `"A {color} {word} shape"`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prompt {
    word: String,
    color: NamedColor,
    text: String,
}

impl Prompt {
    pub fn word(&self) -> &str {
        &self.word
    }

    pub fn color(&self) -> NamedColor {
        self.color
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

pub fn enrich_prompt(word: &str, color: NamedColor) -> Result<Prompt, EmptyWord> {
    if word.trim().is_empty() {
        return Err(EmptyWord);
    }
    Ok(Prompt {
        word: word.into(),
        color,
        text: format!("A {} {} shape", color.name(), word),
    })
}
