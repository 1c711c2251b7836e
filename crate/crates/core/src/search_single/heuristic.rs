//! Admissible cost-to-go: the larger of the obstacle-free Reeds-Shepp length
//! and a scaled-down 8-connected grid distance that sees obstacles.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex};

use ordered_float::OrderedFloat;

use crate::geometry::Vec2;
use crate::model::Pose;
use crate::reeds_shepp::shortest_length;
use crate::world::{Obstacle, World};

/// Worst-case ratio of octile to Euclidean distance.
const OCTILE_RATIO: f64 = 1.082_392_200_292_394;

/// Octile distances from every free cell to the goal cell.
#[derive(Debug)]
pub struct GridField {
    origin: Vec2,
    resolution: f64,
    cols: usize,
    rows: usize,
    dist: Vec<f64>,
}

impl GridField {
    pub fn build(world: &World, goal: Vec2, resolution: f64) -> Self {
        let b = world.bounds();
        let cols = ((b.max.x - b.min.x) / resolution).ceil().max(1.0) as usize;
        let rows = ((b.max.y - b.min.y) / resolution).ceil().max(1.0) as usize;
        let mut field = Self { origin: b.min, resolution, cols, rows, dist: vec![f64::INFINITY; cols * rows] };
        let blocked: Vec<bool> = (0..cols * rows)
            .map(|i| field.cell_blocked(world.obstacles(), i % cols, i / cols))
            .collect();

        let Some(goal_cell) = field.cell_of(goal) else {
            return field;
        };
        let mut heap = BinaryHeap::new();
        field.dist[goal_cell] = 0.0;
        heap.push(Reverse((OrderedFloat(0.0), goal_cell)));
        let diag = resolution * std::f64::consts::SQRT_2;
        while let Some(Reverse((OrderedFloat(d), i))) = heap.pop() {
            if d > field.dist[i] {
                continue;
            }
            let (c, r) = ((i % cols) as i64, (i / cols) as i64);
            for (dc, dr) in [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)] {
                let (nc, nr) = (c + dc, r + dr);
                if nc < 0 || nr < 0 || nc >= cols as i64 || nr >= rows as i64 {
                    continue;
                }
                let j = nr as usize * cols + nc as usize;
                if blocked[j] {
                    continue;
                }
                let nd = d + if dc != 0 && dr != 0 { diag } else { resolution };
                if nd < field.dist[j] {
                    field.dist[j] = nd;
                    heap.push(Reverse((OrderedFloat(nd), j)));
                }
            }
        }
        field
    }

    fn cell_center(&self, c: usize, r: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + (c as f64 + 0.5) * self.resolution,
            self.origin.y + (r as f64 + 0.5) * self.resolution,
        )
    }

    /// A cell is blocked only when it lies entirely inside one obstacle, so no
    /// vehicle reference point can ever be there.
    fn cell_blocked(&self, obstacles: &[Obstacle], c: usize, r: usize) -> bool {
        let center = self.cell_center(c, r);
        let h = 0.5 * self.resolution;
        obstacles.iter().any(|o| match o {
            Obstacle::Circle { center: oc, radius } => center.distance(*oc) + h * std::f64::consts::SQRT_2 <= *radius,
            Obstacle::Rectangle { .. } => [(-h, -h), (h, -h), (h, h), (-h, h)]
                .iter()
                .all(|&(dx, dy)| o.contains_point(center + Vec2::new(dx, dy))),
        })
    }

    fn cell_of(&self, p: Vec2) -> Option<usize> {
        let c = ((p.x - self.origin.x) / self.resolution).floor();
        let r = ((p.y - self.origin.y) / self.resolution).floor();
        if c < 0.0 || r < 0.0 {
            return None;
        }
        let (c, r) = ((c as usize).min(self.cols - 1), (r as usize).min(self.rows - 1));
        Some(r * self.cols + c)
    }

    /// Lower bound on the path length from `p` to the goal; infinite when the
    /// goal is unreachable through free cells.
    pub fn lower_bound(&self, p: Vec2) -> f64 {
        let Some(i) = self.cell_of(p) else {
            return f64::INFINITY;
        };
        let d = self.dist[i];
        if !d.is_finite() {
            return f64::INFINITY;
        }
        (d / OCTILE_RATIO - self.resolution * std::f64::consts::SQRT_2).max(0.0)
    }
}

/// Grid fields keyed by goal cell, shared between queries on one world.
#[derive(Debug, Default)]
pub struct HeuristicCache {
    fields: Mutex<HashMap<(i64, i64), Arc<GridField>>>,
}

impl HeuristicCache {
    pub fn field(&self, world: &World, goal: Vec2, resolution: f64) -> Arc<GridField> {
        let key = ((goal.x / resolution).floor() as i64, (goal.y / resolution).floor() as i64);
        if let Some(f) = self.fields.lock().expect("cache lock").get(&key) {
            return Arc::clone(f);
        }
        let field = Arc::new(GridField::build(world, goal, resolution));
        self.fields.lock().expect("cache lock").entry(key).or_insert(field).clone()
    }
}

pub fn heuristic(pose: &Pose, goal: &Pose, radius: f64, field: &GridField) -> f64 {
    shortest_length(pose, goal, radius).max(field.lower_bound(pose.position()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_field_is_below_euclidean() {
        let w = World::empty(30.0, 30.0);
        let goal = Vec2::new(25.3, 4.1);
        let f = GridField::build(&w, goal, 1.0);
        for p in [Vec2::new(1.2, 1.7), Vec2::new(12.0, 28.9), Vec2::new(25.0, 4.0)] {
            assert!(f.lower_bound(p) <= p.distance(goal) + 1e-9);
        }
    }

    #[test]
    fn wall_makes_field_exceed_euclidean() {
        let wall = Obstacle::Rectangle {
            corners: [Vec2::new(14.0, 0.0), Vec2::new(16.0, 0.0), Vec2::new(16.0, 25.0), Vec2::new(14.0, 25.0)],
        };
        let w = World::new(30.0, 30.0, 0.0, vec![wall]).unwrap();
        let goal = Vec2::new(25.0, 5.0);
        let f = GridField::build(&w, goal, 1.0);
        let p = Vec2::new(5.0, 5.0);
        // Must route over the wall's end at y = 25.
        let detour = p.distance(Vec2::new(15.0, 25.0)) * 2.0;
        assert!(f.lower_bound(p) > p.distance(goal) + 5.0);
        assert!(f.lower_bound(p) <= detour);
    }
}
