//! Exploration/exploitation search over pools of formations.
//!
//! A run keeps a pool of `N` scored formations. The initial pool holds the
//! five predefined outlines (rhombus, triangle, inverted triangle, hexagon,
//! square) with `p` noisy copies each, topped up with uniform-random
//! formations. Every update keeps the best `b` candidates, adds seven
//! variations of each and refills the pool with fresh random formations.
//!
//! All randomness comes from one seeded [`ChaCha8Rng`], consumed only in the
//! sequential parts of a run, in this order:
//!
//! 1. initialization: for each predefined outline, `p` noisy copies (x then
//!    y normal draw per robot); then one uniform x, y pair per robot for
//!    every random formation;
//! 2. each update, per elite in rank order: four half-plane variants
//!    (top, bottom, left, right; uniform x then y per affected robot), one
//!    single-robot move (index, then x and y normal draws), the contour
//!    variant (x then y normal draw per robot) and the alpha variant (no
//!    draws); then the random refill as in step 1.
//!
//! Rendering and scoring never touch the generator, so they may run in
//! parallel without affecting replays.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::{alpha_limit, resample_contour, ContourPolygon, Formation, Point2};
use crate::raster::{render_formation, NamedColor, RasterImage};
use crate::similarity::{enrich_prompt, select_color, EmptyWord, Prompt, ScoreError, Scorer, SimilarityScore};

/// Number of variations generated per elite.
pub const VARIANTS_PER_ELITE: usize = 7;
/// Width of the predefined outlines, in workspace units.
pub const PREDEFINED_WIDTH: f64 = 0.6;

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    /// Robots per formation (M).
    pub robots: usize,
    /// Pool size (N).
    pub pool_size: usize,
    pub iterations: usize,
    /// Elites kept per update (b).
    pub elites: usize,
    /// Noisy copies per predefined outline (p).
    pub shape_variants: usize,
    pub alpha_default: f64,
    pub sigma_shape: f64,
    pub sigma_subd: f64,
    pub sigma_one: f64,
    pub sigma_contour: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            robots: 30,
            pool_size: 500,
            iterations: 15,
            elites: 20,
            shape_variants: 5,
            alpha_default: 3.0,
            sigma_shape: 0.02,
            sigma_subd: 0.05,
            sigma_one: 0.05,
            sigma_contour: 0.01,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("formations need at least 3 robots, got {0}")]
    TooFewRobots(usize),
    #[error("at least one elite is required")]
    NoElites,
    #[error("pool size {pool} is smaller than the {needed} candidates it must hold")]
    PoolTooSmall { pool: usize, needed: usize },
    #[error("noise scale {0} must be positive and finite")]
    InvalidSigma(&'static str),
    #[error("default alpha must be finite and non-negative")]
    InvalidAlpha,
}

impl OptimizerConfig {
    /// Predefined outlines plus their noisy copies.
    pub fn predefined_count(&self) -> usize {
        ShapeKind::ALL.len() * (1 + self.shape_variants)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.robots < 3 {
            return Err(ConfigError::TooFewRobots(self.robots));
        }
        if self.elites == 0 {
            return Err(ConfigError::NoElites);
        }
        let needed = (self.elites * (1 + VARIANTS_PER_ELITE)).max(self.predefined_count());
        if self.pool_size < needed {
            return Err(ConfigError::PoolTooSmall {
                pool: self.pool_size,
                needed,
            });
        }
        for (name, sigma) in [
            ("sigma_shape", self.sigma_shape),
            ("sigma_subd", self.sigma_subd),
            ("sigma_one", self.sigma_one),
            ("sigma_contour", self.sigma_contour),
        ] {
            if !(sigma.is_finite() && sigma > 0.0) {
                return Err(ConfigError::InvalidSigma(name));
            }
        }
        if !(self.alpha_default.is_finite() && self.alpha_default >= 0.0) {
            return Err(ConfigError::InvalidAlpha);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptimizeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Prompt(#[from] EmptyWord),
    #[error("every candidate in the pool has degenerate geometry")]
    AllDegenerate,
}

/// A formation with its rendered silhouette and score.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredCandidate {
    pub formation: Formation,
    pub image: RasterImage,
    pub score: SimilarityScore,
}

impl ScoredCandidate {
    pub fn is_degenerate(&self) -> bool {
        self.image.is_degenerate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FormationPool {
    pub iteration: usize,
    pub candidates: Vec<ScoredCandidate>,
}

impl FormationPool {
    /// Highest-scoring candidate; the first one wins ties, and a
    /// non-degenerate candidate wins over a degenerate one of equal score.
    pub fn best(&self) -> Option<&ScoredCandidate> {
        let mut best: Option<&ScoredCandidate> = None;
        for c in &self.candidates {
            best = match best {
                None => Some(c),
                Some(b) if c.score > b.score => Some(c),
                Some(b) if c.score == b.score && b.is_degenerate() && !c.is_degenerate() => Some(c),
                keep => keep,
            };
        }
        best
    }

    pub fn mean_score(&self) -> f64 {
        if self.candidates.is_empty() {
            return 0.0;
        }
        let total: f64 = self.candidates.iter().map(|c| c.score.value()).sum();
        total / self.candidates.len() as f64
    }

    /// Top `count` non-degenerate candidates by score, ties in pool order.
    pub fn elites(&self, count: usize) -> Vec<&ScoredCandidate> {
        let mut ranked: Vec<&ScoredCandidate> =
            self.candidates.iter().filter(|c| !c.is_degenerate()).collect();
        ranked.sort_by(|a, b| b.score.value().total_cmp(&a.score.value()));
        ranked.truncate(count);
        ranked
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub best_score: f64,
    pub mean_score: f64,
}

/// Per-iteration statistics of one run. `snapshots` holds the best
/// formation of each iteration when the log comes from a live run; logs
/// read back from CSV carry only the records.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunLog {
    pub records: Vec<IterationRecord>,
    pub snapshots: Vec<Formation>,
}

impl RunLog {
    pub fn best_scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.best_score)
    }

    fn push(&mut self, pool: &FormationPool) {
        if let Some(best) = pool.best() {
            self.records.push(IterationRecord {
                iteration: pool.iteration,
                best_score: best.score.value(),
                mean_score: pool.mean_score(),
            });
            self.snapshots.push(best.formation.clone());
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShapeKind {
    Rhombus,
    Triangle,
    InvertedTriangle,
    Hexagon,
    Square,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 5] = [
        ShapeKind::Rhombus,
        ShapeKind::Triangle,
        ShapeKind::InvertedTriangle,
        ShapeKind::Hexagon,
        ShapeKind::Square,
    ];

    /// Outline centered in the workspace, [`PREDEFINED_WIDTH`] wide.
    /// Image rows grow downwards, so "up" is smaller `y`.
    pub fn outline(self) -> ContourPolygon {
        let h = PREDEFINED_WIDTH / 2.0;
        let (lo, hi) = (0.5 - h, 0.5 + h);
        let p = Point2::new;
        let vertices = match self {
            ShapeKind::Rhombus => alloc::vec![p(0.5, lo), p(hi, 0.5), p(0.5, hi), p(lo, 0.5)],
            ShapeKind::Triangle => alloc::vec![p(0.5, lo), p(hi, hi), p(lo, hi)],
            ShapeKind::InvertedTriangle => alloc::vec![p(lo, lo), p(hi, lo), p(0.5, hi)],
            ShapeKind::Hexagon => {
                let dy = h * libm::sqrt(3.0) / 2.0;
                alloc::vec![
                    p(hi, 0.5),
                    p(0.5 + h / 2.0, 0.5 + dy),
                    p(0.5 - h / 2.0, 0.5 + dy),
                    p(lo, 0.5),
                    p(0.5 - h / 2.0, 0.5 - dy),
                    p(0.5 + h / 2.0, 0.5 - dy),
                ]
            }
            ShapeKind::Square => alloc::vec![p(lo, lo), p(hi, lo), p(hi, hi), p(lo, hi)],
        };
        ContourPolygon::from_vertices(vertices).expect("predefined outlines are valid polygons")
    }

    /// `m` robots at equal arc length along the outline, no noise.
    pub fn positions(self, m: usize) -> Vec<Point2> {
        resample_contour(&self.outline(), m)
    }
}

/// Folds a coordinate back into `[0, 1]` by reflection at the borders.
fn reflect_unit(v: f64) -> f64 {
    let r = if v < 0.0 {
        -v
    } else if v > 1.0 {
        2.0 - v
    } else {
        v
    };
    r.clamp(0.0, 1.0)
}

fn jitter_normal<R: Rng + ?Sized>(p: Point2, noise: &Normal<f64>, rng: &mut R) -> Point2 {
    let dx = noise.sample(rng);
    let dy = noise.sample(rng);
    Point2::new(reflect_unit(p.x + dx), reflect_unit(p.y + dy))
}

fn formation(positions: Vec<Point2>, alpha: f64) -> Formation {
    Formation::new(positions, alpha).expect("generated formations have at least 3 finite robots")
}

fn normal(sigma: f64) -> Normal<f64> {
    Normal::new(0.0, sigma).expect("sigma validated positive")
}

/// Five predefined outlines, each followed by `p` noisy copies.
pub fn predefined_shapes<R: Rng + ?Sized>(config: &OptimizerConfig, rng: &mut R) -> Vec<Formation> {
    let noise = normal(config.sigma_shape);
    let mut out = Vec::with_capacity(config.predefined_count());
    for kind in ShapeKind::ALL {
        let base = kind.positions(config.robots);
        out.push(formation(base.clone(), config.alpha_default));
        for _ in 0..config.shape_variants {
            let noisy = base.iter().map(|&p| jitter_normal(p, &noise, rng)).collect();
            out.push(formation(noisy, config.alpha_default));
        }
    }
    out
}

/// Every robot i.i.d. uniform on the unit square.
pub fn random_formation<R: Rng + ?Sized>(robots: usize, alpha: f64, rng: &mut R) -> Formation {
    let positions = (0..robots)
        .map(|_| {
            let x = rng.random::<f64>();
            let y = rng.random::<f64>();
            Point2::new(x, y)
        })
        .collect();
    formation(positions, alpha)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Half {
    Top,
    Bottom,
    Left,
    Right,
}

impl Half {
    pub const ALL: [Half; 4] = [Half::Top, Half::Bottom, Half::Left, Half::Right];

    pub fn contains(self, p: Point2) -> bool {
        match self {
            Half::Top => p.y < 0.5,
            Half::Bottom => p.y >= 0.5,
            Half::Left => p.x < 0.5,
            Half::Right => p.x >= 0.5,
        }
    }
}

/// Uniform noise of half-width `sigma` on every robot inside `half`.
pub fn subdivision_variant<R: Rng + ?Sized>(
    source: &Formation,
    half: Half,
    sigma: f64,
    rng: &mut R,
) -> Formation {
    let positions = source
        .positions()
        .iter()
        .map(|&p| {
            if half.contains(p) {
                let dx = (2.0 * rng.random::<f64>() - 1.0) * sigma;
                let dy = (2.0 * rng.random::<f64>() - 1.0) * sigma;
                Point2::new(reflect_unit(p.x + dx), reflect_unit(p.y + dy))
            } else {
                p
            }
        })
        .collect();
    formation(positions, source.alpha())
}

/// One uniformly chosen robot moved by Gaussian noise.
pub fn single_robot_variant<R: Rng + ?Sized>(
    source: &Formation,
    sigma: f64,
    rng: &mut R,
) -> Formation {
    let mut positions = source.positions().to_vec();
    let i = rng.random_range(0..positions.len());
    positions[i] = jitter_normal(positions[i], &normal(sigma), rng);
    formation(positions, source.alpha())
}

/// Robots spread evenly along the source contour, then slightly perturbed.
/// `None` when the source contour cannot be built.
pub fn contour_variant<R: Rng + ?Sized>(
    source: &Formation,
    sigma: f64,
    rng: &mut R,
) -> Option<Formation> {
    let contour = source.contour().ok()?;
    let noise = normal(sigma);
    let positions = resample_contour(&contour, source.len())
        .into_iter()
        .map(|p| jitter_normal(p, &noise, rng))
        .collect();
    Some(formation(positions, source.alpha()))
}

/// Same positions with alpha raised to the formation's alpha limit.
pub fn alpha_variant(source: &Formation) -> Option<Formation> {
    let limit = alpha_limit(source.positions()).ok()?;
    source.with_alpha(limit).ok()
}

/// Seven variations per elite: four half-plane perturbations, one
/// single-robot move, one contour relocation and one alpha-limit copy.
/// Elites whose contour or alpha limit cannot be computed get extra
/// single-robot moves instead, so the count is always `7 * elites.len()`.
pub fn make_variations<R: Rng + ?Sized>(
    elites: &[&ScoredCandidate],
    config: &OptimizerConfig,
    rng: &mut R,
) -> Vec<Formation> {
    let mut out = Vec::with_capacity(elites.len() * VARIANTS_PER_ELITE);
    for elite in elites {
        let source = &elite.formation;
        for half in Half::ALL {
            out.push(subdivision_variant(source, half, config.sigma_subd, rng));
        }
        out.push(single_robot_variant(source, config.sigma_one, rng));
        let contour = contour_variant(source, config.sigma_contour, rng)
            .unwrap_or_else(|| single_robot_variant(source, config.sigma_one, rng));
        out.push(contour);
        let alpha = alpha_variant(source)
            .unwrap_or_else(|| single_robot_variant(source, config.sigma_one, rng));
        out.push(alpha);
    }
    out
}

/// Renders a batch of formations. Swappable so callers can parallelize.
pub type BatchRenderer = fn(&[Formation], NamedColor) -> Vec<RasterImage>;

pub fn render_sequential(formations: &[Formation], color: NamedColor) -> Vec<RasterImage> {
    formations.iter().map(|f| render_formation(f, color)).collect()
}

/// One optimization run: config, scorer, prompt and the run's generator.
pub struct Optimizer<'a, S: Scorer + ?Sized> {
    config: OptimizerConfig,
    scorer: &'a S,
    prompt: Prompt,
    rng: ChaCha8Rng,
    renderer: BatchRenderer,
}

impl<'a, S: Scorer + ?Sized> Optimizer<'a, S> {
    pub fn new(config: OptimizerConfig, scorer: &'a S, prompt: Prompt) -> Result<Self, ConfigError> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Optimizer {
            config,
            scorer,
            prompt,
            rng,
            renderer: render_sequential,
        })
    }

    pub fn with_renderer(mut self, renderer: BatchRenderer) -> Self {
        self.renderer = renderer;
        self
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn prompt(&self) -> &Prompt {
        &self.prompt
    }

    /// Renders and scores formations. Degenerate silhouettes score zero
    /// and are not sent to the scorer.
    pub fn evaluate(&self, formations: Vec<Formation>) -> Result<Vec<ScoredCandidate>, ScoreError> {
        let images = (self.renderer)(&formations, self.prompt.color());
        let live: Vec<&RasterImage> = images.iter().filter(|i| !i.is_degenerate()).collect();
        let mut scores = self.scorer.score_batch(self.prompt.text(), &live)?.into_iter();
        let mut out = Vec::with_capacity(formations.len());
        for (formation, image) in formations.into_iter().zip(images) {
            let score = if image.is_degenerate() {
                SimilarityScore::ZERO
            } else {
                scores
                    .next()
                    .ok_or_else(|| ScoreError::Inference("scorer returned too few scores".into()))?
            };
            out.push(ScoredCandidate {
                formation,
                image,
                score,
            });
        }
        Ok(out)
    }

    fn random_fill(&mut self, count: usize) -> Vec<Formation> {
        let (m, alpha) = (self.config.robots, self.config.alpha_default);
        (0..count)
            .map(|_| random_formation(m, alpha, &mut self.rng))
            .collect()
    }

    /// Predefined outlines and their copies, topped up with random
    /// formations to the pool size. Every formation uses the default alpha.
    pub fn initialize_pool(&mut self) -> Result<FormationPool, OptimizeError> {
        let mut formations = predefined_shapes(&self.config, &mut self.rng);
        let fill = self.config.pool_size - formations.len();
        formations.extend(self.random_fill(fill));
        Ok(FormationPool {
            iteration: 0,
            candidates: self.evaluate(formations)?,
        })
    }

    /// Elites, their variations and fresh random formations.
    pub fn update_pool(&mut self, pool: &FormationPool) -> Result<FormationPool, OptimizeError> {
        let elites = pool.elites(self.config.elites);
        if elites.is_empty() {
            return Err(OptimizeError::AllDegenerate);
        }
        let mut formations = make_variations(&elites, &self.config, &mut self.rng);
        let fill = self.config.pool_size - elites.len() - formations.len();
        formations.extend(self.random_fill(fill));

        let mut candidates: Vec<ScoredCandidate> = elites.into_iter().cloned().collect();
        candidates.extend(self.evaluate(formations)?);
        Ok(FormationPool {
            iteration: pool.iteration + 1,
            candidates,
        })
    }

    /// Initializes, runs the configured number of updates and returns the
    /// best candidate of the final pool with the run log.
    pub fn run(&mut self) -> Result<(ScoredCandidate, RunLog), OptimizeError> {
        let mut log = RunLog::default();
        let mut pool = self.initialize_pool()?;
        log.push(&pool);
        for _ in 0..self.config.iterations {
            pool = self.update_pool(&pool)?;
            log.push(&pool);
        }
        match pool.best() {
            Some(best) if !best.is_degenerate() => Ok((best.clone(), log)),
            _ => Err(OptimizeError::AllDegenerate),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OptimizationOutcome {
    pub prompt: Prompt,
    pub best: ScoredCandidate,
    pub log: RunLog,
}

/// Full run from a word. Without an explicit color the scorer picks one,
/// which needs a text-capable backend.
pub fn run_optimization<S: Scorer + ?Sized>(
    word: &str,
    config: &OptimizerConfig,
    scorer: &S,
    color: Option<NamedColor>,
    renderer: BatchRenderer,
) -> Result<OptimizationOutcome, OptimizeError> {
    config.validate()?;
    let color = match color {
        Some(c) => c,
        None => select_color(word, scorer)?,
    };
    let prompt = enrich_prompt(word, color)?;
    let mut optimizer = Optimizer::new(config.clone(), scorer, prompt.clone())?.with_renderer(renderer);
    let (best, log) = optimizer.run()?;
    Ok(OptimizationOutcome { prompt, best, log })
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("log {0} has no record for iteration 1")]
    MissingFirstIteration(usize),
    #[error("log {0} has a zero best score at iteration 1")]
    ZeroBaseline(usize),
    #[error("no logs given")]
    NoLogs,
}

/// Relative improvement of the best score from iteration 1 to the last
/// iteration, per log, and the mean over all logs.
pub fn improvement_metrics(logs: &[RunLog]) -> Result<(Vec<f64>, f64), MetricsError> {
    if logs.is_empty() {
        return Err(MetricsError::NoLogs);
    }
    let mut per_log = Vec::with_capacity(logs.len());
    for (i, log) in logs.iter().enumerate() {
        let first = log
            .records
            .iter()
            .find(|r| r.iteration == 1)
            .ok_or(MetricsError::MissingFirstIteration(i))?
            .best_score;
        if first == 0.0 {
            return Err(MetricsError::ZeroBaseline(i));
        }
        let last = log
            .records
            .iter()
            .max_by_key(|r| r.iteration)
            .map(|r| r.best_score)
            .unwrap_or(first);
        per_log.push((last - first) / first);
    }
    let mean = per_log.iter().sum::<f64>() / per_log.len() as f64;
    Ok((per_log, mean))
}
