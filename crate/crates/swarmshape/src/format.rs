//! JSON, CSV and PNG files.
//!
//! Every float written to JSON or CSV is first rounded to 9 significant
//! digits, so outputs do not depend on the last bits of a computation.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use swarmshape_core::geometry::alpha_shape;
use swarmshape_core::navsim::{Frame, Phase, Trajectory};
use swarmshape_core::optimizer::{IterationRecord, RunLog, ScoredCandidate};
use swarmshape_core::raster::CANVAS_SIZE;
use swarmshape_core::showplan::{PlanError, ShowPlan};
use swarmshape_core::{Formation, NamedColor, Point2, Point3, RasterImage, TemplateScorer};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: {source}")]
    Image { path: String, source: image::ImageError },
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
}

fn invalid(path: &Path, msg: impl Into<String>) -> FormatError {
    FormatError::Invalid {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Rounds to 9 significant digits.
pub fn sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn p2(p: Point2) -> [f64; 2] {
    [sig9(p.x), sig9(p.y)]
}

/// Alpha to store with rounded positions. Rounding can push a formation
/// sitting exactly at its alpha limit just past it; in that case step the
/// stored alpha down one 9-digit unit at a time until the rounded
/// formation has a contour again.
fn storable_alpha(formation: &Formation, rounded: &[Point2]) -> f64 {
    let alpha = sig9(formation.alpha());
    let valid = |a: f64| alpha_shape(rounded, a).is_ok();
    if alpha == 0.0 || valid(alpha) || alpha_shape(formation.positions(), formation.alpha()).is_err() {
        return alpha;
    }
    let unit = 10f64.powi(alpha.abs().log10().floor() as i32 - 8);
    let mut a = alpha;
    for _ in 0..10_000 {
        a = sig9(a - unit);
        if a <= 0.0 {
            return 0.0;
        }
        if valid(a) {
            return a;
        }
    }
    alpha
}

fn p3(p: Point3) -> [f64; 3] {
    [sig9(p.x), sig9(p.y), sig9(p.z)]
}

fn parse_color(path: &Path, name: &str) -> Result<NamedColor, FormatError> {
    name.parse()
        .map_err(|_| invalid(path, format!("unknown color {name:?}")))
}

fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<(), FormatError> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|source| FormatError::Json {
        path: path.display().to_string(),
        source,
    })?;
    text.push('\n');
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, FormatError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| FormatError::Json {
        path: path.display().to_string(),
        source,
    })
}

/// A formation as stored on disk, with the color, score and prompt of the
/// run that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct FormationRecord {
    pub formation: Formation,
    pub color: NamedColor,
    pub score: f64,
    pub prompt: String,
}

impl FormationRecord {
    pub fn from_candidate(candidate: &ScoredCandidate, color: NamedColor, prompt: &str) -> Self {
        FormationRecord {
            formation: candidate.formation.clone(),
            color,
            score: candidate.score.value(),
            prompt: prompt.to_owned(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FormationDoc {
    m: usize,
    alpha: f64,
    color: String,
    positions: Vec<[f64; 2]>,
    score: f64,
    prompt: String,
}

impl FormationDoc {
    fn new(r: &FormationRecord) -> Self {
        let positions: Vec<[f64; 2]> = r.formation.positions().iter().map(|&p| p2(p)).collect();
        let rounded: Vec<Point2> = positions.iter().map(|&[x, y]| Point2::new(x, y)).collect();
        FormationDoc {
            m: r.formation.len(),
            alpha: storable_alpha(&r.formation, &rounded),
            color: r.color.name().to_owned(),
            positions,
            score: sig9(r.score),
            prompt: r.prompt.clone(),
        }
    }

    fn into_record(self, path: &Path) -> Result<FormationRecord, FormatError> {
        if self.m != self.positions.len() {
            return Err(invalid(
                path,
                format!("m is {} but {} positions are listed", self.m, self.positions.len()),
            ));
        }
        let positions = self.positions.iter().map(|&[x, y]| Point2::new(x, y)).collect();
        let formation = Formation::new(positions, self.alpha).map_err(|e| invalid(path, e.to_string()))?;
        Ok(FormationRecord {
            formation,
            color: parse_color(path, &self.color)?,
            score: self.score,
            prompt: self.prompt,
        })
    }
}

pub fn save_formation(path: &Path, record: &FormationRecord) -> Result<(), FormatError> {
    write_json(path, &FormationDoc::new(record))
}

pub fn load_formation(path: &Path) -> Result<FormationRecord, FormatError> {
    read_json::<FormationDoc>(path)?.into_record(path)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanDoc {
    goals: Vec<[f64; 3]>,
    assignment: Vec<usize>,
    color: String,
    source: FormationDoc,
}

pub fn save_plan(path: &Path, plan: &ShowPlan, source: &FormationRecord) -> Result<(), FormatError> {
    let doc = PlanDoc {
        goals: plan.goals.iter().map(|&g| p3(g)).collect(),
        assignment: plan.assignment.clone(),
        color: plan.color.name().to_owned(),
        source: FormationDoc::new(source),
    };
    write_json(path, &doc)
}

/// Reads a plan and checks that the assignment is a permutation of the
/// goal indices.
pub fn load_plan(path: &Path) -> Result<(ShowPlan, FormationRecord), FormatError> {
    let doc: PlanDoc = read_json(path)?;
    let color = parse_color(path, &doc.color)?;
    let source = doc.source.into_record(path)?;
    let goals = doc.goals.iter().map(|&[x, y, z]| Point3::new(x, y, z)).collect();
    let plan = ShowPlan::new(goals, color, doc.assignment, source.formation.clone()).map_err(|e| match e {
        PlanError::InvalidAssignment => invalid(path, "assignment is not a permutation of the goal indices"),
        other => invalid(path, other.to_string()),
    })?;
    Ok((plan, source))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameDoc {
    t: f64,
    positions: Vec<[f64; 3]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhaseDoc {
    start_frame: usize,
    color: String,
    converged: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryDoc {
    timestep: f64,
    radius: f64,
    frames: Vec<FrameDoc>,
    color: String,
    phases: Vec<PhaseDoc>,
}

pub fn save_trajectory(path: &Path, t: &Trajectory) -> Result<(), FormatError> {
    let color = t.phases.first().map_or(NamedColor::Red, |p| p.color);
    let doc = TrajectoryDoc {
        timestep: sig9(t.timestep),
        radius: sig9(t.radius),
        frames: t
            .frames
            .iter()
            .map(|f| FrameDoc {
                t: sig9(f.t),
                positions: f.positions.iter().map(|&p| p3(p)).collect(),
            })
            .collect(),
        color: color.name().to_owned(),
        phases: t
            .phases
            .iter()
            .map(|p| PhaseDoc {
                start_frame: p.start_frame,
                color: p.color.name().to_owned(),
                converged: p.converged,
            })
            .collect(),
    };
    write_json(path, &doc)
}

pub fn load_trajectory(path: &Path) -> Result<Trajectory, FormatError> {
    let doc: TrajectoryDoc = read_json(path)?;
    let mut phases = Vec::with_capacity(doc.phases.len());
    for p in doc.phases {
        if p.start_frame >= doc.frames.len().max(1) {
            return Err(invalid(path, "phase starts after the last frame"));
        }
        phases.push(Phase {
            start_frame: p.start_frame,
            color: parse_color(path, &p.color)?,
            converged: p.converged,
        });
    }
    if phases.is_empty() {
        phases.push(Phase {
            start_frame: 0,
            color: parse_color(path, &doc.color)?,
            converged: true,
        });
    }
    let drones = doc.frames.first().map_or(0, |f| f.positions.len());
    if doc.frames.iter().any(|f| f.positions.len() != drones) {
        return Err(invalid(path, "frames list different numbers of drones"));
    }
    Ok(Trajectory {
        timestep: doc.timestep,
        radius: doc.radius,
        frames: doc
            .frames
            .into_iter()
            .map(|f| Frame {
                t: f.t,
                positions: f.positions.iter().map(|&[x, y, z]| Point3::new(x, y, z)).collect(),
            })
            .collect(),
        phases,
    })
}

#[derive(Serialize, Deserialize)]
struct LogRow {
    iteration: usize,
    best_score: f64,
    mean_score: f64,
}

pub fn save_log_csv(path: &Path, log: &RunLog) -> Result<(), FormatError> {
    let csv_err = |source| FormatError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in &log.records {
        w.serialize(LogRow {
            iteration: r.iteration,
            best_score: sig9(r.best_score),
            mean_score: sig9(r.mean_score),
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn load_log_csv(path: &Path) -> Result<RunLog, FormatError> {
    let csv_err = |source| FormatError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["iteration", "best_score", "mean_score"] {
        return Err(invalid(path, "expected header iteration,best_score,mean_score"));
    }
    let mut log = RunLog::default();
    for row in r.deserialize::<LogRow>() {
        let row = row.map_err(csv_err)?;
        log.records.push(IterationRecord {
            iteration: row.iteration,
            best_score: row.best_score,
            mean_score: row.mean_score,
        });
    }
    if log.records.is_empty() {
        return Err(invalid(path, "log has no rows"));
    }
    Ok(log)
}

pub fn save_png(path: &Path, image: &RasterImage) -> Result<(), FormatError> {
    let size = CANVAS_SIZE as u32;
    let buf = image::RgbImage::from_raw(size, size, image.to_rgb8()).expect("raster buffer has canvas size");
    save_rgb(path, &buf)
}

pub fn save_rgb(path: &Path, img: &image::RgbImage) -> Result<(), FormatError> {
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| FormatError::Image {
            path: path.display().to_string(),
            source,
        })
}

/// Loads a target silhouette: nonzero luma is inside.
pub fn load_mask(path: &Path) -> Result<TemplateScorer, FormatError> {
    let img = image::open(path).map_err(|source| FormatError::Image {
        path: path.display().to_string(),
        source,
    })?;
    let luma = img.to_luma8();
    TemplateScorer::from_luma(luma.width() as usize, luma.height() as usize, luma.as_raw())
        .map_err(|e| invalid(path, e.to_string()))
}

/// Writes a mask as a single-channel PNG (255 inside, 0 outside).
pub fn save_mask(path: &Path, mask: &swarmshape_core::Mask) -> Result<(), FormatError> {
    let size = CANVAS_SIZE as u32;
    let img = image::GrayImage::from_fn(size, size, |x, y| {
        image::Luma([if mask.get(x as usize, y as usize) { 255 } else { 0 }])
    });
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| FormatError::Image {
            path: path.display().to_string(),
            source,
        })
}
