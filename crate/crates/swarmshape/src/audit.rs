//! Post-hoc safety checks on a recorded trajectory.

use swarmshape_core::navsim::Trajectory;
use swarmshape_core::Point3;

/// Allowed overlap when checking separation, meters.
pub const SEPARATION_SLACK: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditReport {
    pub drones: usize,
    pub frames: usize,
    /// Smallest center distance, including straight-line motion between
    /// frames.
    pub min_separation: f64,
    /// Frame index where the smallest separation occurs (or starts).
    pub min_frame: usize,
    /// Largest speed implied by consecutive frames.
    pub max_speed: f64,
    pub radius: f64,
    pub converged: bool,
}

impl AuditReport {
    pub fn is_safe(&self) -> bool {
        self.min_separation >= 2.0 * self.radius - SEPARATION_SLACK
    }
}

/// Closest approach of two points moving linearly from `a0, b0` to `a1, b1`.
fn closest_approach(a0: Point3, a1: Point3, b0: Point3, b1: Point3) -> f64 {
    let r0 = b0 - a0;
    let dr = (b1 - a1) - r0;
    let dd = dr.length_squared();
    let s = if dd > 0.0 { (-r0.dot(dr) / dd).clamp(0.0, 1.0) } else { 0.0 };
    (r0 + dr * s).length()
}

pub fn audit(t: &Trajectory) -> AuditReport {
    let drones = t.frames.first().map_or(0, |f| f.positions.len());
    let mut min_separation = f64::INFINITY;
    let mut min_frame = 0;
    let mut max_speed: f64 = 0.0;
    for (k, frame) in t.frames.iter().enumerate() {
        let next = t.frames.get(k + 1);
        let p = &frame.positions;
        for i in 0..p.len() {
            if let Some(n) = next {
                let dt = n.t - frame.t;
                if dt > 0.0 {
                    max_speed = max_speed.max(p[i].distance(n.positions[i]) / dt);
                }
            }
            for j in i + 1..p.len() {
                let d = match next {
                    Some(n) => closest_approach(p[i], n.positions[i], p[j], n.positions[j]),
                    None => p[i].distance(p[j]),
                };
                if d < min_separation {
                    min_separation = d;
                    min_frame = k;
                }
            }
        }
    }
    AuditReport {
        drones,
        frames: t.frames.len(),
        min_separation,
        min_frame,
        max_speed,
        radius: t.radius,
        converged: t.converged(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use swarmshape_core::navsim::{Frame, Phase};
    use swarmshape_core::NamedColor;

    #[test]
    fn crossing_between_frames_is_caught() {
        let t = Trajectory {
            timestep: 1.0,
            radius: 0.5,
            frames: vec![
                Frame {
                    t: 0.0,
                    positions: vec![Point3::new(-1.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)],
                },
                Frame {
                    t: 1.0,
                    positions: vec![Point3::new(1.0, 0.0, 0.0), Point3::new(-1.0, 0.0, 0.0)],
                },
            ],
            phases: vec![Phase {
                start_frame: 0,
                color: NamedColor::Red,
                converged: true,
            }],
        };
        let r = audit(&t);
        assert_eq!(r.min_separation, 0.0);
        assert!(!r.is_safe());
        assert_eq!(r.max_speed, 2.0);
    }
}
