//! Shortest bounded-curvature paths with reversals (Reeds-Shepp curves).
//!
//! Formulas follow the classic 48-word family enumeration: every word is
//! evaluated on the normalized problem (unit turning radius, start at the
//! origin facing +x) together with its time-flip and reflection variants,
//! and the shortest valid word wins.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::model::Pose;

const ZERO: f64 = 10.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Steer {
    Left,
    Straight,
    Right,
}

impl Steer {
    /// Curvature sign for a unit-radius turn.
    pub fn sign(self) -> f64 {
        match self {
            Steer::Left => 1.0,
            Steer::Straight => 0.0,
            Steer::Right => -1.0,
        }
    }
}

/// One piece of a curve. `length` is signed (negative = reverse) and in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub steer: Steer,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReedsSheppPath {
    pub segments: Vec<Segment>,
    pub radius: f64,
}

impl ReedsSheppPath {
    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.length.abs()).sum()
    }

    /// Exact end pose when driven from `start`.
    pub fn end_pose(&self, start: &Pose) -> Pose {
        self.segments
            .iter()
            .fold(*start, |p, s| advance(&p, s.steer, s.length, self.radius))
    }
}

/// Exact constant-curvature motion by signed distance `ds`.
pub fn advance(p: &Pose, steer: Steer, ds: f64, radius: f64) -> Pose {
    let k = steer.sign() / radius;
    if k == 0.0 {
        let (s, c) = p.yaw.sin_cos();
        return Pose::new(p.x + ds * c, p.y + ds * s, p.yaw);
    }
    let yaw1 = p.yaw + k * ds;
    Pose::new(
        p.x + (yaw1.sin() - p.yaw.sin()) / k,
        p.y - (yaw1.cos() - p.yaw.cos()) / k,
        yaw1,
    )
}

fn mod2pi(x: f64) -> f64 {
    let v = x % TAU;
    if v < -PI {
        v + TAU
    } else if v > PI {
        v - TAU
    } else {
        v
    }
}

fn polar(x: f64, y: f64) -> (f64, f64) {
    (x.hypot(y), y.atan2(x))
}

fn tau_omega(u: f64, v: f64, xi: f64, eta: f64, phi: f64) -> (f64, f64) {
    let delta = mod2pi(u - v);
    let a = u.sin() - delta.sin();
    let b = u.cos() - delta.cos() - 1.0;
    let t1 = (eta * a - xi * b).atan2(xi * a + eta * b);
    let t2 = 2.0 * (delta.cos() - v.cos() - u.cos()) + 3.0;
    let tau = if t2 < 0.0 { mod2pi(t1 + PI) } else { mod2pi(t1) };
    (tau, mod2pi(tau - u + v - phi))
}

fn lp_sp_lp(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let (u, t) = polar(x - phi.sin(), y - 1.0 + phi.cos());
    if t >= -ZERO {
        let v = mod2pi(phi - t);
        if v >= -ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_sp_rp(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let (u1, t1) = polar(x + phi.sin(), y - 1.0 - phi.cos());
    let u1 = u1 * u1;
    if u1 >= 4.0 {
        let u = (u1 - 4.0).sqrt();
        let theta = 2.0f64.atan2(u);
        let t = mod2pi(t1 + theta);
        let v = mod2pi(t - phi);
        if t >= -ZERO && v >= -ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rm_l(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let (u1, theta) = polar(x - phi.sin(), y - 1.0 + phi.cos());
    if u1 <= 4.0 {
        let u = -2.0 * (0.25 * u1).asin();
        let t = mod2pi(theta + 0.5 * u + PI);
        let v = mod2pi(phi - t + u);
        if t >= -ZERO && u <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rup_lum_rm(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let rho = 0.25 * (2.0 + xi.hypot(eta));
    if rho <= 1.0 {
        let u = rho.acos();
        let (t, v) = tau_omega(u, -u, xi, eta, phi);
        if t >= -ZERO && v <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rum_lum_rp(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let rho = (20.0 - xi * xi - eta * eta) / 16.0;
    if (0.0..=1.0).contains(&rho) {
        let u = -rho.acos();
        if u >= -FRAC_PI_2 {
            let (t, v) = tau_omega(u, u, xi, eta, phi);
            if t >= -ZERO && v >= -ZERO {
                return Some((t, u, v));
            }
        }
    }
    None
}

fn lp_rm_sm_lm(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let (rho, theta) = polar(x - phi.sin(), y - 1.0 + phi.cos());
    if rho >= 2.0 {
        let r = (rho * rho - 4.0).sqrt();
        let u = 2.0 - r;
        let t = mod2pi(theta + r.atan2(-2.0));
        let v = mod2pi(phi - FRAC_PI_2 - t);
        if t >= -ZERO && u <= ZERO && v <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rm_sm_rm(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let (rho, theta) = polar(-eta, xi);
    if rho >= 2.0 {
        let t = theta;
        let u = 2.0 - rho;
        let v = mod2pi(t + FRAC_PI_2 - phi);
        if t >= -ZERO && u <= ZERO && v <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rm_s_lm_rp(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let (rho, _) = polar(xi, eta);
    if rho >= 2.0 {
        let u = 4.0 - (rho * rho - 4.0).sqrt();
        if u <= ZERO {
            let t = mod2pi(((4.0 - u) * xi - 2.0 * eta).atan2(-2.0 * xi + (u - 4.0) * eta));
            let v = mod2pi(t - phi);
            if t >= -ZERO && v >= -ZERO {
                return Some((t, u, v));
            }
        }
    }
    None
}

use Steer::{Left as L, Right as R, Straight as S};

const WORDS: [&[Steer]; 18] = [
    &[L, R, L],
    &[R, L, R],
    &[L, R, L, R],
    &[R, L, R, L],
    &[L, R, S, L],
    &[R, L, S, R],
    &[L, S, R, L],
    &[R, S, L, R],
    &[L, R, S, R],
    &[R, L, S, L],
    &[R, S, R, L],
    &[L, S, L, R],
    &[L, S, R],
    &[R, S, L],
    &[L, S, L],
    &[R, S, R],
    &[L, R, S, L, R],
    &[R, L, S, R, L],
];

struct Best {
    word: usize,
    lengths: Vec<f64>,
    total: f64,
}

impl Best {
    fn offer(&mut self, word: usize, lengths: &[f64]) {
        let total: f64 = lengths.iter().map(|l| l.abs()).sum();
        if total < self.total {
            self.word = word;
            self.lengths = lengths.to_vec();
            self.total = total;
        }
    }
}

type Formula = fn(f64, f64, f64) -> Option<(f64, f64, f64)>;

/// Tries a base formula under the four symmetries (identity, time-flip,
/// reflection, both); `words` holds the word index for the unreflected and
/// reflected variants, `shape` maps (t, u, v) to segment lengths.
fn try_symmetries(best: &mut Best, x: f64, y: f64, phi: f64, f: Formula, words: (usize, usize), shape: fn(f64, f64, f64) -> Vec<f64>) {
    let variants = [(x, y, phi, false, words.0), (-x, y, -phi, true, words.0), (x, -y, -phi, false, words.1), (-x, -y, phi, true, words.1)];
    for (vx, vy, vphi, flip, word) in variants {
        if let Some((t, u, v)) = f(vx, vy, vphi) {
            let mut lengths = shape(t, u, v);
            if flip {
                lengths.iter_mut().for_each(|l| *l = -*l);
            }
            best.offer(word, &lengths);
        }
    }
}

fn solve_normalized(x: f64, y: f64, phi: f64) -> Option<Best> {
    let mut best = Best { word: 0, lengths: Vec::new(), total: f64::INFINITY };
    let (sp, cp) = phi.sin_cos();
    let xb = x * cp + y * sp;
    let yb = x * sp - y * cp;

    // CSC
    try_symmetries(&mut best, x, y, phi, lp_sp_lp, (14, 15), |t, u, v| vec![t, u, v]);
    try_symmetries(&mut best, x, y, phi, lp_sp_rp, (12, 13), |t, u, v| vec![t, u, v]);
    // CCC
    try_symmetries(&mut best, x, y, phi, lp_rm_l, (0, 1), |t, u, v| vec![t, u, v]);
    try_symmetries(&mut best, xb, yb, phi, lp_rm_l, (0, 1), |t, u, v| vec![v, u, t]);
    // CCCC
    try_symmetries(&mut best, x, y, phi, lp_rup_lum_rm, (2, 3), |t, u, v| vec![t, u, -u, v]);
    try_symmetries(&mut best, x, y, phi, lp_rum_lum_rp, (2, 3), |t, u, v| vec![t, u, u, v]);
    // CCSC
    try_symmetries(&mut best, x, y, phi, lp_rm_sm_lm, (4, 5), |t, u, v| vec![t, -FRAC_PI_2, u, v]);
    try_symmetries(&mut best, x, y, phi, lp_rm_sm_rm, (8, 9), |t, u, v| vec![t, -FRAC_PI_2, u, v]);
    try_symmetries(&mut best, xb, yb, phi, lp_rm_sm_lm, (6, 7), |t, u, v| vec![v, u, -FRAC_PI_2, t]);
    try_symmetries(&mut best, xb, yb, phi, lp_rm_sm_rm, (10, 11), |t, u, v| vec![v, u, -FRAC_PI_2, t]);
    // CCSCC
    try_symmetries(&mut best, x, y, phi, lp_rm_s_lm_rp, (16, 17), |t, u, v| vec![t, -FRAC_PI_2, u, -FRAC_PI_2, v]);

    best.total.is_finite().then_some(best)
}

/// Shortest curve from `from` to `to` with minimum turning radius `radius`.
pub fn shortest_path(from: &Pose, to: &Pose, radius: f64) -> Option<ReedsSheppPath> {
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    let (s, c) = from.yaw.sin_cos();
    let x = (c * dx + s * dy) / radius;
    let y = (-s * dx + c * dy) / radius;
    let phi = to.yaw - from.yaw;
    let best = solve_normalized(x, y, phi)?;
    let segments = WORDS[best.word]
        .iter()
        .zip(&best.lengths)
        .filter(|(_, l)| l.abs() > 1e-10)
        .map(|(steer, l)| Segment { steer: *steer, length: l * radius })
        .collect();
    Some(ReedsSheppPath { segments, radius })
}

/// Length of the shortest curve; `f64::INFINITY` if none is found.
pub fn shortest_length(from: &Pose, to: &Pose, radius: f64) -> f64 {
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    let (s, c) = from.yaw.sin_cos();
    let x = (c * dx + s * dy) / radius;
    let y = (-s * dx + c * dy) / radius;
    solve_normalized(x, y, to.yaw - from.yaw)
        .map(|b| b.total * radius)
        .unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::angle_distance;
    use proptest::prelude::*;

    #[test]
    fn straight_ahead() {
        let p = shortest_path(&Pose::new(0.0, 0.0, 0.0), &Pose::new(5.0, 0.0, 0.0), 3.5).unwrap();
        assert!((p.length() - 5.0).abs() < 1e-9);
        assert_eq!(p.segments.len(), 1);
        assert_eq!(p.segments[0].steer, Steer::Straight);
    }

    #[test]
    fn straight_behind() {
        let p = shortest_path(&Pose::new(0.0, 0.0, 0.0), &Pose::new(-4.0, 0.0, 0.0), 3.5).unwrap();
        assert!((p.length() - 4.0).abs() < 1e-9);
        assert!(p.segments[0].length < 0.0);
    }

    #[test]
    fn identical_poses() {
        let a = Pose::new(3.0, 4.0, 1.0);
        assert!(shortest_length(&a, &a, 2.0) < 1e-9);
    }

    #[test]
    fn quarter_turn() {
        // A left quarter circle of radius r ends at (r, r) facing +y.
        let r = 3.5;
        let p = shortest_path(&Pose::new(0.0, 0.0, 0.0), &Pose::new(r, r, FRAC_PI_2), r).unwrap();
        assert!((p.length() - r * FRAC_PI_2).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn endpoint_is_reached(
            x in -30.0f64..30.0, y in -30.0f64..30.0, yaw0 in -3.1f64..3.1, yaw1 in -3.1f64..3.1,
            gx in -30.0f64..30.0, gy in -30.0f64..30.0, r in 0.5f64..6.0,
        ) {
            let a = Pose::new(x, y, yaw0);
            let b = Pose::new(gx, gy, yaw1);
            let p = shortest_path(&a, &b, r).expect("a Reeds-Shepp word always exists");
            let end = p.end_pose(&a);
            prop_assert!(end.distance(&b) < 1e-6, "end {:?} goal {:?}", end, b);
            prop_assert!(angle_distance(end.yaw, b.yaw) < 1e-6);
            prop_assert!(p.length() + 1e-9 >= a.distance(&b));
        }
    }
}
