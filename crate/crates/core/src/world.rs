//! Workspace, static obstacles and closed collision tests.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{is_convex_quad, rect_circle_overlap, rects_overlap, Aabb, OrientedRect, Vec2};
use crate::model::{footprint, footprint_inflated, interpolate, AgentSpec, AgentState, Pose};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("workspace dimensions must be positive and finite")]
    BadDimensions,
    #[error("obstacle {index}: {reason}")]
    BadObstacle { index: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Obstacle {
    Circle { center: Vec2, radius: f64 },
    Rectangle { corners: [Vec2; 4] },
}

impl Obstacle {
    fn aabb(&self) -> Aabb {
        match self {
            Obstacle::Circle { center, radius } => Aabb {
                min: Vec2::new(center.x - radius, center.y - radius),
                max: Vec2::new(center.x + radius, center.y + radius),
            },
            Obstacle::Rectangle { corners } => OrientedRect { corners: *corners }.aabb(),
        }
    }

    pub fn overlaps(&self, fp: &OrientedRect) -> bool {
        match self {
            Obstacle::Circle { center, radius } => rect_circle_overlap(fp, *center, *radius),
            Obstacle::Rectangle { corners } => rects_overlap(fp, &OrientedRect { corners: *corners }),
        }
    }

    /// Whether the point lies in the closed obstacle region.
    pub fn contains_point(&self, p: Vec2) -> bool {
        match self {
            Obstacle::Circle { center, radius } => p.distance(*center) <= *radius,
            Obstacle::Rectangle { corners } => OrientedRect { corners: *corners }.contains(p),
        }
    }

    /// Distance from `p` to the obstacle; zero inside.
    pub fn distance_to(&self, p: Vec2) -> f64 {
        match self {
            Obstacle::Circle { center, radius } => (p.distance(*center) - radius).max(0.0),
            Obstacle::Rectangle { corners } => OrientedRect { corners: *corners }.distance_to(p),
        }
    }
}

const INDEX_CELL: f64 = 4.0;

/// Uniform bucket grid over obstacle bounding boxes.
#[derive(Debug, Clone, PartialEq)]
struct ObstacleIndex {
    origin: Vec2,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<u32>>,
}

impl ObstacleIndex {
    fn build(bounds: &Aabb, obstacles: &[Obstacle]) -> Self {
        let cols = (((bounds.max.x - bounds.min.x) / INDEX_CELL).ceil() as usize).max(1);
        let rows = (((bounds.max.y - bounds.min.y) / INDEX_CELL).ceil() as usize).max(1);
        let mut idx = Self { origin: bounds.min, cols, rows, buckets: vec![Vec::new(); cols * rows] };
        for (i, o) in obstacles.iter().enumerate() {
            let (c0, r0, c1, r1) = idx.cell_range(&o.aabb());
            for r in r0..=r1 {
                for c in c0..=c1 {
                    idx.buckets[r * cols + c].push(i as u32);
                }
            }
        }
        idx
    }

    fn cell_range(&self, b: &Aabb) -> (usize, usize, usize, usize) {
        let clamp_c = |v: f64| ((v - self.origin.x) / INDEX_CELL).floor().clamp(0.0, (self.cols - 1) as f64) as usize;
        let clamp_r = |v: f64| ((v - self.origin.y) / INDEX_CELL).floor().clamp(0.0, (self.rows - 1) as f64) as usize;
        (clamp_c(b.min.x), clamp_r(b.min.y), clamp_c(b.max.x), clamp_r(b.max.y))
    }
}

/// Rectangular workspace `[0, width] x [-band, height + band]`; obstacles live
/// in the core `[0, width] x [0, height]`, the bands above and below are free.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    width: f64,
    height: f64,
    band: f64,
    obstacles: Vec<Obstacle>,
    index: ObstacleIndex,
}

impl World {
    pub fn new(width: f64, height: f64, band: f64, obstacles: Vec<Obstacle>) -> Result<Self, WorldError> {
        if !(width.is_finite() && height.is_finite() && band.is_finite()) || width <= 0.0 || height <= 0.0 || band < 0.0 {
            return Err(WorldError::BadDimensions);
        }
        for (index, o) in obstacles.iter().enumerate() {
            let bad = |reason: &str| Err(WorldError::BadObstacle { index, reason: reason.into() });
            match o {
                Obstacle::Circle { radius, .. } if !(*radius > 0.0 && radius.is_finite()) => {
                    return bad("radius must be positive");
                }
                Obstacle::Rectangle { corners } if !is_convex_quad(corners) => {
                    return bad("corners must form a convex quadrilateral");
                }
                _ => {}
            }
            let b = o.aabb();
            if b.min.x < 0.0 || b.min.y < 0.0 || b.max.x > width || b.max.y > height {
                return bad("obstacle must lie inside [0, width] x [0, height]");
            }
        }
        let obstacles = obstacles
            .into_iter()
            .map(|o| match o {
                Obstacle::Rectangle { corners } => Obstacle::Rectangle {
                    corners: OrientedRect::from_corners(corners).corners,
                },
                c => c,
            })
            .collect::<Vec<_>>();
        let bounds = Aabb { min: Vec2::new(0.0, -band), max: Vec2::new(width, height + band) };
        let index = ObstacleIndex::build(&bounds, &obstacles);
        Ok(Self { width, height, band, obstacles, index })
    }

    pub fn empty(width: f64, height: f64) -> Self {
        Self::new(width, height, 0.0, Vec::new()).expect("positive dimensions")
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn band(&self) -> f64 {
        self.band
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    /// Full workspace including the free bands.
    pub fn bounds(&self) -> Aabb {
        Aabb { min: Vec2::new(0.0, -self.band), max: Vec2::new(self.width, self.height + self.band) }
    }

    /// Whether `fp` leaves the workspace or touches any obstacle.
    pub fn collides_static(&self, fp: &OrientedRect) -> bool {
        let b = self.bounds();
        if fp
            .corners
            .iter()
            .any(|c| c.x < b.min.x || c.x > b.max.x || c.y < b.min.y || c.y > b.max.y)
        {
            return true;
        }
        if self.obstacles.is_empty() {
            return false;
        }
        let bb = fp.aabb();
        let (c0, r0, c1, r1) = self.index.cell_range(&bb);
        for r in r0..=r1 {
            for c in c0..=c1 {
                for &i in &self.index.buckets[r * self.index.cols + c] {
                    let o = &self.obstacles[i as usize];
                    if o.aabb().intersects(&bb) && o.overlaps(fp) {
                        return true;
                    }
                }
            }
        }
        false
    }

    pub fn pose_collides(&self, pose: &Pose, spec: &AgentSpec, inflation: f64) -> bool {
        self.collides_static(&footprint_inflated(pose, spec, inflation))
    }

    /// Checks the motion `a -> b` at `samples` evenly spaced fractions
    /// `1/samples ..= 1` (the start pose is assumed already checked).
    pub fn segment_collides(
        &self,
        a: &AgentState,
        b: &AgentState,
        spec: &AgentSpec,
        inflation: f64,
        samples: u32,
    ) -> bool {
        (1..=samples).any(|i| {
            let pose = interpolate(a, b, i as f64 / samples as f64);
            self.pose_collides(&pose, spec, inflation)
        })
    }
}

/// Whether two vehicle bodies intersect (closed separating-axis test).
pub fn bodies_overlap(s1: &Pose, spec1: &AgentSpec, s2: &Pose, spec2: &AgentSpec) -> bool {
    rects_overlap(&footprint(s1, spec1), &footprint(s2, spec2))
}

/// Interpolation samples per `T_s` interval used for continuous checks:
/// spacing `min(width / 2, v_max T_s / 5)`, rounded up to a multiple of five
/// so the set always contains the `T_s / 5` grid.
pub fn samples_per_tick(spec: &AgentSpec) -> u32 {
    let travel = spec.max_speed() * spec.sample_time;
    let spacing = (0.5 * spec.width).min(travel / 5.0);
    let raw = (travel / spacing).ceil().max(5.0) as u32;
    raw.div_ceil(5) * 5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::footprint;

    fn circle(x: f64, y: f64, r: f64) -> Obstacle {
        Obstacle::Circle { center: Vec2::new(x, y), radius: r }
    }

    #[test]
    fn empty_world_inside_is_free() {
        let w = World::empty(50.0, 50.0);
        let spec = AgentSpec::benchmark();
        assert!(!w.collides_static(&footprint(&Pose::new(25.0, 25.0, 0.3), &spec)));
    }

    #[test]
    fn leaving_bounds_collides() {
        let w = World::empty(50.0, 50.0);
        let spec = AgentSpec::benchmark();
        assert!(w.collides_static(&footprint(&Pose::new(0.5, 25.0, 0.0), &spec)));
        let banded = World::new(50.0, 50.0, 10.0, vec![]).unwrap();
        assert!(!banded.collides_static(&footprint(&Pose::new(25.0, -5.0, 0.0), &spec)));
    }

    #[test]
    fn centered_on_circle_collides() {
        let w = World::new(50.0, 50.0, 0.0, vec![circle(25.0, 25.0, 2.0)]).unwrap();
        let spec = AgentSpec::benchmark();
        assert!(w.collides_static(&footprint(&Pose::new(25.0, 25.0, 0.0), &spec)));
    }

    #[test]
    fn validation() {
        assert!(World::new(0.0, 10.0, 0.0, vec![]).is_err());
        assert!(World::new(10.0, 10.0, 0.0, vec![circle(1.0, 1.0, 2.0)]).is_err());
        assert!(World::new(10.0, 10.0, 0.0, vec![circle(5.0, 5.0, -1.0)]).is_err());
        let dart = Obstacle::Rectangle {
            corners: [Vec2::new(1.0, 1.0), Vec2::new(3.0, 1.0), Vec2::new(1.5, 1.5), Vec2::new(1.0, 3.0)],
        };
        assert!(World::new(10.0, 10.0, 0.0, vec![dart]).is_err());
    }

    #[test]
    fn rectangle_obstacle() {
        let bar = Obstacle::Rectangle {
            corners: [Vec2::new(20.0, 10.0), Vec2::new(20.0, 12.0), Vec2::new(30.0, 12.0), Vec2::new(30.0, 10.0)],
        };
        let w = World::new(50.0, 50.0, 0.0, vec![bar]).unwrap();
        let spec = AgentSpec::benchmark();
        assert!(w.collides_static(&footprint(&Pose::new(25.0, 9.5, 0.0), &spec)));
        assert!(!w.collides_static(&footprint(&Pose::new(25.0, 7.5, 0.0), &spec)));
    }

    #[test]
    fn resolution_is_multiple_of_five() {
        let spec = AgentSpec::benchmark();
        assert_eq!(samples_per_tick(&spec), 5);
        let coarse = AgentSpec::new(2.0, 2.0, 1.0, 0.2, 2.5, -2.5, 0.5, 1.0).unwrap();
        let k = samples_per_tick(&coarse);
        assert_eq!(k % 5, 0);
        assert!(2.5 / k as f64 <= 0.1 + 1e-12);
    }
}
