//! From the winning formation to per-drone 3D goals.

use alloc::vec::Vec;

use crate::geometry::{resample_contour, Formation, GeometryError, Point2};
use crate::raster::NamedColor;
use crate::Point3;

/// Lowest allowed bottom edge of the show plane, in meters.
pub const SAFETY_FLOOR: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid show geometry: {0}")]
    InvalidGeometry(&'static str),
    #[error("{starts} start positions but {goals} goals")]
    SizeMismatch { starts: usize, goals: usize },
    #[error("assignment is not a permutation of the goal indices")]
    InvalidAssignment,
}

/// Vertical plane the unit-square workspace is projected onto. The
/// spectator stands at the origin looking along +y.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShowPlane {
    /// Distance from the spectator to the plane, meters.
    pub distance: f64,
    /// Height of the workspace's bottom edge, meters.
    pub base_height: f64,
    /// Side length of the projected workspace, meters.
    pub width: f64,
}

impl Default for ShowPlane {
    fn default() -> Self {
        ShowPlane {
            distance: 50.0,
            base_height: 10.0,
            width: 20.0,
        }
    }
}

impl ShowPlane {
    pub fn validate(&self) -> Result<(), PlanError> {
        if !(self.distance.is_finite() && self.distance > 0.0) {
            return Err(PlanError::InvalidGeometry("distance must be positive"));
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(PlanError::InvalidGeometry("width must be positive"));
        }
        if !(self.base_height.is_finite() && self.base_height >= SAFETY_FLOOR) {
            return Err(PlanError::InvalidGeometry("base height is below the safety floor"));
        }
        Ok(())
    }

    #[inline]
    pub fn project(&self, p: Point2) -> Point3 {
        Point3::new(
            (p.x - 0.5) * self.width,
            self.distance,
            self.base_height + (1.0 - p.y) * self.width,
        )
    }
}

/// `m` points spread at equal arc length along the formation's contour.
pub fn extract_show_positions(formation: &Formation, m: usize) -> Result<Vec<Point2>, GeometryError> {
    let contour = formation.contour()?;
    Ok(resample_contour(&contour, m))
}

/// Maps workspace points onto the show plane.
pub fn reproject_2d_3d(points: &[Point2], plane: &ShowPlane) -> Result<Vec<Point3>, PlanError> {
    plane.validate()?;
    Ok(points.iter().map(|&p| plane.project(p)).collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CostMetric {
    /// Total distance travelled.
    #[default]
    Euclidean,
    /// Sum of squared distances; straight-line paths never cross.
    SquaredEuclidean,
}

impl CostMetric {
    #[inline]
    pub fn cost(self, a: Point3, b: Point3) -> f64 {
        match self {
            CostMetric::Euclidean => a.distance(b),
            CostMetric::SquaredEuclidean => (a - b).length_squared(),
        }
    }
}

/// Minimum-cost assignment of rows to columns on a dense `n x n` cost
/// matrix (row-major). Returns the column assigned to every row.
///
/// Shortest augmenting paths with row/column potentials, `O(n^3)`. Rows
/// are inserted in index order and columns scanned in index order, and
/// only strictly smaller reduced costs replace a candidate, so ties are
/// resolved the same way on every run.
pub fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
    // Index 0 is a virtual column used as the root of each search.
    let mut row_pot = alloc::vec![0.0f64; n + 1];
    let mut col_pot = alloc::vec![0.0f64; n + 1];
    let mut col_row = alloc::vec![0usize; n + 1];
    let mut came_from = alloc::vec![0usize; n + 1];

    for row in 1..=n {
        col_row[0] = row;
        let mut col = 0usize;
        let mut min_slack = alloc::vec![f64::INFINITY; n + 1];
        let mut visited = alloc::vec![false; n + 1];
        loop {
            visited[col] = true;
            let r = col_row[col];
            let mut delta = f64::INFINITY;
            let mut next_col = 0usize;
            for j in 1..=n {
                if visited[j] {
                    continue;
                }
                let slack = cost[(r - 1) * n + (j - 1)] - row_pot[r] - col_pot[j];
                if slack < min_slack[j] {
                    min_slack[j] = slack;
                    came_from[j] = col;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    next_col = j;
                }
            }
            for j in 0..=n {
                if visited[j] {
                    row_pot[col_row[j]] += delta;
                    col_pot[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            col = next_col;
            if col_row[col] == 0 {
                break;
            }
        }
        // Flip the augmenting path.
        loop {
            let prev = came_from[col];
            col_row[col] = col_row[prev];
            col = prev;
            if col == 0 {
                break;
            }
        }
    }

    let mut assignment = alloc::vec![0usize; n];
    for j in 1..=n {
        assignment[col_row[j] - 1] = j - 1;
    }
    assignment
}

/// Drone `i` flies to `goals[result[i]]`, minimizing the summed cost.
pub fn assign(starts: &[Point3], goals: &[Point3], metric: CostMetric) -> Result<Vec<usize>, PlanError> {
    if starts.len() != goals.len() {
        return Err(PlanError::SizeMismatch {
            starts: starts.len(),
            goals: goals.len(),
        });
    }
    let n = starts.len();
    let mut cost = Vec::with_capacity(n * n);
    for &s in starts {
        cost.extend(goals.iter().map(|&g| metric.cost(s, g)));
    }
    Ok(hungarian(&cost, n))
}

pub fn assignment_cost(starts: &[Point3], goals: &[Point3], assignment: &[usize], metric: CostMetric) -> f64 {
    starts
        .iter()
        .zip(assignment)
        .map(|(&s, &g)| metric.cost(s, goals[g]))
        .sum()
}

pub fn is_permutation(assignment: &[usize]) -> bool {
    let mut seen = alloc::vec![false; assignment.len()];
    assignment.iter().all(|&g| g < seen.len() && !core::mem::replace(&mut seen[g], true))
}

/// Per-drone goals for one formation of the show.
#[derive(Clone, Debug, PartialEq)]
pub struct ShowPlan {
    pub goals: Vec<Point3>,
    pub color: NamedColor,
    /// Drone index to goal index.
    pub assignment: Vec<usize>,
    pub source: Formation,
}

impl ShowPlan {
    pub fn new(goals: Vec<Point3>, color: NamedColor, assignment: Vec<usize>, source: Formation) -> Result<Self, PlanError> {
        if goals.len() != assignment.len() || !is_permutation(&assignment) {
            return Err(PlanError::InvalidAssignment);
        }
        Ok(ShowPlan {
            goals,
            color,
            assignment,
            source,
        })
    }

    pub fn source_alpha(&self) -> f64 {
        self.source.alpha()
    }

    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }

    /// Goal of each drone, in drone order.
    pub fn drone_goals(&self) -> Vec<Point3> {
        self.assignment.iter().map(|&g| self.goals[g]).collect()
    }
}

/// Contour resampling, projection and assignment for one formation.
pub fn build_show_plan(
    formation: &Formation,
    color: NamedColor,
    starts: &[Point3],
    plane: &ShowPlane,
    metric: CostMetric,
) -> Result<ShowPlan, PlanError> {
    let positions = extract_show_positions(formation, starts.len())?;
    let goals = reproject_2d_3d(&positions, plane)?;
    let assignment = assign(starts, &goals, metric)?;
    ShowPlan::new(goals, color, assignment, formation.clone())
}
