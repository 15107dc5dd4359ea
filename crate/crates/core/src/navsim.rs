//! Synchronous 3D optimal reciprocal collision avoidance.
//!
//! Each agent turns every nearby neighbor into a half-space of admissible
//! velocities (the truncated velocity obstacle over the time horizon, with
//! the avoidance effort split evenly between the pair), then picks the
//! admissible velocity closest to its preferred one with an incremental
//! low-dimensional linear program. When the half-spaces have no common
//! point inside the speed ball, the agent instead minimizes the largest
//! constraint violation.
//!
//! The linear programs follow the RVO2-3D library (UNC Chapel Hill,
//! Apache-2.0).
//!
//! All velocities of a step are computed from the same snapshot, then
//! positions are integrated. The simulator has no random state.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::raster::NamedColor;
use crate::showplan::{assign, CostMetric, PlanError, ShowPlan};
use crate::{Point3, Vec3};

/// Hover height of drones waiting on the ground grid, meters.
pub const GROUND_HOVER: f64 = 0.5;

/// Lateral relative-velocity offset (m/s) applied when two agents approach
/// each other exactly along the line joining them.
pub const HEAD_ON_OFFSET: f64 = 1e-3;

/// Extra radius (meters) each agent claims when building its constraints.
/// In crowded steps the program can be infeasible and the fallback lets
/// agents overlap by a fraction of a millimeter; this margin keeps the
/// true radii apart.
pub const AVOIDANCE_MARGIN: f64 = 0.005;

const LP_EPSILON: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    /// Integration step, seconds.
    pub timestep: f64,
    /// Collision look-ahead, seconds.
    pub time_horizon: f64,
    /// Only agents closer than this are avoided, meters.
    pub neighbor_radius: f64,
    pub goal_tolerance: f64,
    pub max_sim_time: f64,
    pub agent_radius: f64,
    pub max_speed: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            timestep: 0.05,
            time_horizon: 2.0,
            neighbor_radius: 10.0,
            goal_tolerance: 0.1,
            max_sim_time: 120.0,
            agent_radius: 0.5,
            max_speed: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("simulation parameter {0} must be positive and finite")]
    InvalidParameter(&'static str),
    #[error("timestep must be shorter than the time horizon")]
    TimestepTooLong,
    #[error("grid spacing {spacing} is below four agent radii ({min})")]
    SpacingTooSmall { spacing: f64, min: f64 },
    #[error("{starts} start positions for a plan with {goals} goals")]
    SizeMismatch { starts: usize, goals: usize },
    #[error("no plans to simulate")]
    NoPlans,
    #[error(transparent)]
    Plan(#[from] PlanError),
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [
            ("timestep", self.timestep),
            ("time_horizon", self.time_horizon),
            ("neighbor_radius", self.neighbor_radius),
            ("goal_tolerance", self.goal_tolerance),
            ("max_sim_time", self.max_sim_time),
            ("agent_radius", self.agent_radius),
            ("max_speed", self.max_speed),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::InvalidParameter(name));
            }
        }
        if self.timestep >= self.time_horizon {
            return Err(SimError::TimestepTooLong);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgentState {
    pub position: Point3,
    pub velocity: Vec3,
    pub radius: f64,
    pub max_speed: f64,
    pub goal: Point3,
}

impl AgentState {
    pub fn at_rest(position: Point3, goal: Point3, config: &SimConfig) -> Self {
        AgentState {
            position,
            velocity: Vec3::ZERO,
            radius: config.agent_radius,
            max_speed: config.max_speed,
            goal,
        }
    }

    /// Velocity that reaches the goal in one step, capped at max speed.
    pub fn preferred_velocity(&self, timestep: f64) -> Vec3 {
        ((self.goal - self.position) / timestep).clamp_length(self.max_speed)
    }
}

#[derive(Clone, Copy, Debug)]
struct Plane {
    point: Vec3,
    normal: Vec3,
}

#[derive(Clone, Copy, Debug)]
struct Line {
    point: Vec3,
    direction: Vec3,
}

/// Fixed perpendicular used to break exact head-on symmetry. Prefers +x,
/// then +z, and flips with the direction of `rel_pos` so that the two
/// agents of a pair dodge in opposite directions.
fn head_on_dodge(rel_pos: Vec3) -> Vec3 {
    let axis_dir = rel_pos.normalized();
    let axis = [Vec3::X, Vec3::Z]
        .into_iter()
        .find(|a| a.cross(axis_dir).length_squared() > 0.01)
        .unwrap_or(Vec3::Y);
    let perp = (axis - axis_dir * axis.dot(axis_dir)).normalized();
    let positive = [rel_pos.x, rel_pos.y, rel_pos.z]
        .into_iter()
        .find(|&c| c != 0.0)
        .map_or(true, |c| c > 0.0);
    if positive {
        perp
    } else {
        -perp
    }
}

fn orca_plane(agent: &AgentState, other: &AgentState, config: &SimConfig) -> Plane {
    let inv_horizon = 1.0 / config.time_horizon;
    let rel_pos = other.position - agent.position;
    let mut rel_vel = agent.velocity - other.velocity;
    let dist_sq = rel_pos.length_squared();
    let combined_radius = agent.radius + other.radius + 2.0 * AVOIDANCE_MARGIN;
    let combined_radius_sq = combined_radius * combined_radius;

    // Exactly aligned approach: no lateral information, nudge sideways.
    let cross = rel_pos.cross(rel_vel);
    if rel_vel.dot(rel_pos) > 0.0 && cross.length_squared() <= 1e-24 * dist_sq * rel_vel.length_squared() {
        rel_vel += head_on_dodge(rel_pos) * HEAD_ON_OFFSET;
    }

    let (normal, u) = if dist_sq > combined_radius_sq {
        let w = rel_vel - rel_pos * inv_horizon;
        let w_len_sq = w.length_squared();
        let dot = w.dot(rel_pos);
        if dot < 0.0 && dot * dot > combined_radius_sq * w_len_sq {
            // Project on the cut-off sphere.
            let w_len = libm::sqrt(w_len_sq);
            let unit_w = w / w_len;
            (unit_w, unit_w * (combined_radius * inv_horizon - w_len))
        } else {
            // Project on the cone.
            let a = dist_sq;
            let b = rel_pos.dot(rel_vel);
            let c = rel_vel.length_squared()
                - rel_pos.cross(rel_vel).length_squared() / (dist_sq - combined_radius_sq);
            let t = (b + libm::sqrt((b * b - a * c).max(0.0))) / a;
            let w = rel_vel - rel_pos * t;
            let w_len = w.length();
            let unit_w = w / w_len;
            (unit_w, unit_w * (combined_radius * t - w_len))
        }
    } else {
        // Already overlapping: resolve within one step.
        let inv_step = 1.0 / config.timestep;
        let w = rel_vel - rel_pos * inv_step;
        let w_len = w.length();
        let unit_w = w / w_len;
        (unit_w, unit_w * (combined_radius * inv_step - w_len))
    };
    Plane {
        point: agent.velocity + u * 0.5,
        normal,
    }
}

fn linear_program1(
    planes: &[Plane],
    plane_no: usize,
    line: &Line,
    radius: f64,
    opt_velocity: Vec3,
    direction_opt: bool,
) -> Option<Vec3> {
    let dot = line.point.dot(line.direction);
    let discriminant = dot * dot + radius * radius - line.point.length_squared();
    if discriminant < 0.0 {
        return None;
    }
    let sqrt_disc = libm::sqrt(discriminant);
    let mut t_left = -dot - sqrt_disc;
    let mut t_right = -dot + sqrt_disc;

    for plane in &planes[..plane_no] {
        let numerator = (plane.point - line.point).dot(plane.normal);
        let denominator = line.direction.dot(plane.normal);
        if denominator * denominator <= LP_EPSILON {
            if numerator > 0.0 {
                return None;
            }
            continue;
        }
        let t = numerator / denominator;
        if denominator >= 0.0 {
            t_left = t_left.max(t);
        } else {
            t_right = t_right.min(t);
        }
        if t_left > t_right {
            return None;
        }
    }

    let t = if direction_opt {
        if opt_velocity.dot(line.direction) > 0.0 {
            t_right
        } else {
            t_left
        }
    } else {
        line.direction.dot(opt_velocity - line.point).clamp(t_left, t_right)
    };
    Some(line.point + line.direction * t)
}

fn linear_program2(
    planes: &[Plane],
    plane_no: usize,
    radius: f64,
    opt_velocity: Vec3,
    direction_opt: bool,
) -> Option<Vec3> {
    let plane = planes[plane_no];
    let plane_dist = plane.point.dot(plane.normal);
    let plane_dist_sq = plane_dist * plane_dist;
    let radius_sq = radius * radius;
    if plane_dist_sq > radius_sq {
        return None;
    }
    let plane_radius_sq = radius_sq - plane_dist_sq;
    let plane_center = plane.normal * plane_dist;

    let mut result = if direction_opt {
        let in_plane = opt_velocity - plane.normal * opt_velocity.dot(plane.normal);
        let len_sq = in_plane.length_squared();
        if len_sq <= LP_EPSILON {
            plane_center
        } else {
            plane_center + in_plane * libm::sqrt(plane_radius_sq / len_sq)
        }
    } else {
        let projected = opt_velocity + plane.normal * (plane.point - opt_velocity).dot(plane.normal);
        if projected.length_squared() > radius_sq {
            let offset = projected - plane_center;
            plane_center + offset * libm::sqrt(plane_radius_sq / offset.length_squared())
        } else {
            projected
        }
    };

    for i in 0..plane_no {
        if planes[i].normal.dot(planes[i].point - result) > 0.0 {
            let cross = planes[i].normal.cross(plane.normal);
            if cross.length_squared() <= LP_EPSILON {
                // Planes are (nearly) parallel and this one is violated.
                return None;
            }
            let direction = cross.normalized();
            let line_normal = direction.cross(plane.normal);
            let point = plane.point
                + line_normal
                    * ((planes[i].point - plane.point).dot(planes[i].normal)
                        / line_normal.dot(planes[i].normal));
            let line = Line { point, direction };
            result = linear_program1(planes, i, &line, radius, opt_velocity, direction_opt)?;
        }
    }
    Some(result)
}

/// Returns the index of the first plane that made the program infeasible
/// (or `planes.len()`) together with the best velocity found.
fn linear_program3(planes: &[Plane], radius: f64, opt_velocity: Vec3, direction_opt: bool) -> (usize, Vec3) {
    let mut result = if direction_opt {
        opt_velocity * radius
    } else if opt_velocity.length_squared() > radius * radius {
        opt_velocity.normalized() * radius
    } else {
        opt_velocity
    };
    for i in 0..planes.len() {
        if planes[i].normal.dot(planes[i].point - result) > 0.0 {
            match linear_program2(planes, i, radius, opt_velocity, direction_opt) {
                Some(v) => result = v,
                None => return (i, result),
            }
        }
    }
    (planes.len(), result)
}

/// Minimizes the maximum violation over planes `begin..`.
fn linear_program4(planes: &[Plane], begin: usize, radius: f64, mut result: Vec3) -> Vec3 {
    let mut distance = 0.0;
    for i in begin..planes.len() {
        if planes[i].normal.dot(planes[i].point - result) > distance {
            let mut projected = Vec::with_capacity(i);
            for j in 0..i {
                let cross = planes[j].normal.cross(planes[i].normal);
                let point = if cross.length_squared() <= LP_EPSILON {
                    if planes[i].normal.dot(planes[j].normal) > 0.0 {
                        // Same direction: plane j is implied.
                        continue;
                    }
                    (planes[i].point + planes[j].point) * 0.5
                } else {
                    let line_normal = cross.cross(planes[i].normal);
                    planes[i].point
                        + line_normal
                            * ((planes[j].point - planes[i].point).dot(planes[j].normal)
                                / line_normal.dot(planes[j].normal))
                };
                projected.push(Plane {
                    point,
                    normal: (planes[j].normal - planes[i].normal).normalized(),
                });
            }
            let (fail, candidate) = linear_program3(&projected, radius, planes[i].normal, true);
            if fail == projected.len() {
                result = candidate;
            }
            distance = planes[i].normal.dot(planes[i].point - result);
        }
    }
    result
}

fn neighbor_order(agent: &AgentState, a: &AgentState, b: &AgentState) -> Ordering {
    let da = (a.position - agent.position).length_squared();
    let db = (b.position - agent.position).length_squared();
    da.total_cmp(&db)
        .then_with(|| a.position.x.total_cmp(&b.position.x))
        .then_with(|| a.position.y.total_cmp(&b.position.y))
        .then_with(|| a.position.z.total_cmp(&b.position.z))
}

/// New velocity for `agent` given the other agents (which must not include
/// `agent` itself). Neighbors beyond the neighbor radius are ignored.
pub fn orca_velocity(agent: &AgentState, neighbors: &[AgentState], config: &SimConfig) -> Vec3 {
    let preferred = agent.preferred_velocity(config.timestep);
    let range_sq = config.neighbor_radius * config.neighbor_radius;
    let mut near: Vec<&AgentState> = neighbors
        .iter()
        .filter(|n| (n.position - agent.position).length_squared() < range_sq)
        .collect();
    near.sort_by(|a, b| neighbor_order(agent, a, b));
    let planes: Vec<Plane> = near.iter().map(|n| orca_plane(agent, n, config)).collect();

    let (fail, mut velocity) = linear_program3(&planes, agent.max_speed, preferred, false);
    if fail < planes.len() {
        velocity = linear_program4(&planes, fail, agent.max_speed, velocity);
    }
    velocity.clamp_length(agent.max_speed)
}

/// One synchronous step: all velocities from the same snapshot, then
/// positions advance by one timestep.
pub fn step(states: &[AgentState], config: &SimConfig) -> Vec<AgentState> {
    let mut others: Vec<AgentState> = Vec::with_capacity(states.len().saturating_sub(1));
    let mut next = Vec::with_capacity(states.len());
    for (i, agent) in states.iter().enumerate() {
        others.clear();
        others.extend(states[..i].iter().chain(&states[i + 1..]).copied());
        let velocity = orca_velocity(agent, &others, config);
        next.push(AgentState {
            position: agent.position + velocity * config.timestep,
            velocity,
            ..*agent
        });
    }
    next
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub positions: Vec<Point3>,
}

/// A run of consecutive frames flown towards one plan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Phase {
    pub start_frame: usize,
    pub color: NamedColor,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub timestep: f64,
    pub radius: f64,
    pub frames: Vec<Frame>,
    pub phases: Vec<Phase>,
}

impl Trajectory {
    pub fn converged(&self) -> bool {
        self.phases.iter().all(|p| p.converged)
    }

    pub fn final_positions(&self) -> Option<&[Point3]> {
        self.frames.last().map(|f| &f.positions[..])
    }

    /// Smallest center distance minus `2 * radius` over all frames and pairs.
    pub fn min_clearance(&self) -> f64 {
        let mut min = f64::INFINITY;
        for frame in &self.frames {
            let p = &frame.positions;
            for i in 0..p.len() {
                for j in i + 1..p.len() {
                    min = min.min(p[i].distance(p[j]) - 2.0 * self.radius);
                }
            }
        }
        min
    }
}

fn all_arrived(states: &[AgentState], tolerance: f64) -> bool {
    states.iter().all(|s| s.position.distance(s.goal) <= tolerance)
}

/// Steps agents towards their goals until all are within tolerance or the
/// time budget runs out. Frames are appended to `frames`, starting with the
/// state at `t0` unless `frames` already ends with it.
fn run_phase(mut states: Vec<AgentState>, config: &SimConfig, frames: &mut Vec<Frame>, first_step: usize) -> (Vec<AgentState>, bool) {
    let max_steps = libm::ceil(config.max_sim_time / config.timestep) as usize;
    let mut k = first_step;
    if frames.is_empty() {
        frames.push(Frame {
            t: 0.0,
            positions: states.iter().map(|s| s.position).collect(),
        });
    }
    let mut steps = 0;
    while !all_arrived(&states, config.goal_tolerance) {
        if steps == max_steps {
            return (states, false);
        }
        states = step(&states, config);
        steps += 1;
        k += 1;
        frames.push(Frame {
            t: k as f64 * config.timestep,
            positions: states.iter().map(|s| s.position).collect(),
        });
    }
    (states, true)
}

/// Flies drones from `starts` to the goals of `plan` using its assignment.
/// An unconverged run still returns its frames, flagged in the phase.
pub fn simulate_transition(starts: &[Point3], plan: &ShowPlan, config: &SimConfig) -> Result<Trajectory, SimError> {
    config.validate()?;
    if starts.len() != plan.goals.len() {
        return Err(SimError::SizeMismatch {
            starts: starts.len(),
            goals: plan.goals.len(),
        });
    }
    let states = starts
        .iter()
        .zip(plan.drone_goals())
        .map(|(&s, g)| AgentState::at_rest(s, g, config))
        .collect();
    let mut frames = Vec::new();
    let (_, converged) = run_phase(states, config, &mut frames, 0);
    Ok(Trajectory {
        timestep: config.timestep,
        radius: config.agent_radius,
        frames,
        phases: alloc::vec![Phase {
            start_frame: 0,
            color: plan.color,
            converged,
        }],
    })
}

/// Chains several plans. The first plan uses its own assignment; each
/// later plan is re-assigned from where the drones ended up.
pub fn simulate_show(starts: &[Point3], plans: &[ShowPlan], config: &SimConfig) -> Result<Trajectory, SimError> {
    config.validate()?;
    let first = plans.first().ok_or(SimError::NoPlans)?;
    let mut trajectory = simulate_transition(starts, first, config)?;
    let mut states: Vec<AgentState> = Vec::new();
    for plan in &plans[1..] {
        let current: Vec<Point3> = trajectory.final_positions().unwrap_or(starts).to_vec();
        if current.len() != plan.goals.len() {
            return Err(SimError::SizeMismatch {
                starts: current.len(),
                goals: plan.goals.len(),
            });
        }
        let assignment = assign(&current, &plan.goals, CostMetric::Euclidean)?;
        states.clear();
        states.extend(
            current
                .iter()
                .zip(&assignment)
                .map(|(&p, &g)| AgentState::at_rest(p, plan.goals[g], config)),
        );
        let start_frame = trajectory.frames.len() - 1;
        let (_, converged) = run_phase(states.clone(), config, &mut trajectory.frames, start_frame);
        trajectory.phases.push(Phase {
            start_frame,
            color: plan.color,
            converged,
        });
    }
    Ok(trajectory)
}

/// `m` hover positions on a square grid of side `ceil(sqrt(m))`, centered
/// at `center` (x, y), filled row by row.
pub fn ground_grid(m: usize, spacing: f64, radius: f64, center: (f64, f64)) -> Result<Vec<Point3>, SimError> {
    let min = 4.0 * radius;
    if !(spacing >= min) {
        return Err(SimError::SpacingTooSmall { spacing, min });
    }
    let mut side = 0usize;
    while side * side < m {
        side += 1;
    }
    let half = (side.max(1) - 1) as f64 / 2.0;
    Ok((0..m)
        .map(|i| {
            let (row, col) = (i / side, i % side);
            Point3::new(
                center.0 + (col as f64 - half) * spacing,
                center.1 + (row as f64 - half) * spacing,
                GROUND_HOVER,
            )
        })
        .collect())
}
