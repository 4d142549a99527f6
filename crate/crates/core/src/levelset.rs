//! Polyline cracks, signed distance and Heaviside functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Open polyline crack. `tip_active[0]` refers to the first vertex,
/// `tip_active[1]` to the last. An inactive end is a crack mouth on (or
/// beyond) the domain boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrackGeometry {
    pub vertices: Vec<[f64; 2]>,
    pub tip_active: [bool; 2],
}

/// Signed distance sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSetSample {
    pub phi: f64,
    pub closest_segment: usize,
    /// Parameter of the closest point on that segment, in [0,1].
    pub t: f64,
    /// Normal used for the sign (segment normal or pseudo-normal).
    pub normal: [f64; 2],
}

pub fn heaviside(phi: f64) -> i32 {
    if phi >= 0.0 {
        1
    } else {
        -1
    }
}

/// ℍ(φ(x)) − ℍ(φ(x_I)).
pub fn shifted_heaviside(phi_x: f64, phi_node: f64) -> i32 {
    heaviside(phi_x) - heaviside(phi_node)
}

pub(crate) fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}
pub(crate) fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}
pub(crate) fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}
pub(crate) fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}
pub(crate) fn unit(a: [f64; 2]) -> [f64; 2] {
    let n = norm(a);
    [a[0] / n, a[1] / n]
}

impl CrackGeometry {
    pub fn new(vertices: Vec<[f64; 2]>, tip_active: [bool; 2]) -> Result<Self> {
        let c = CrackGeometry {
            vertices,
            tip_active,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let v = &self.vertices;
        if v.len() < 2 {
            return Err(Error::InvalidArgument("crack needs at least two vertices".into()));
        }
        if v.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidArgument("crack vertex not finite".into()));
        }
        for w in v.windows(2) {
            if norm(sub(w[1], w[0])) == 0.0 {
                return Err(Error::InvalidArgument("consecutive crack vertices coincide".into()));
            }
        }
        let ns = v.len() - 1;
        for i in 0..ns {
            for j in i + 2..ns {
                if segments_intersect(v[i], v[i + 1], v[j], v[j + 1]) {
                    return Err(Error::GeometryConflict(format!(
                        "crack polyline self-intersects (segments {i} and {j})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn num_segments(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| norm(sub(w[1], w[0]))).sum()
    }

    /// Left normal of segment `s` (direction rotated by +90°).
    pub fn segment_normal(&self, s: usize) -> [f64; 2] {
        let d = unit(sub(self.vertices[s + 1], self.vertices[s]));
        [-d[1], d[0]]
    }

    pub fn reversed(&self) -> CrackGeometry {
        let mut v = self.vertices.clone();
        v.reverse();
        CrackGeometry {
            vertices: v,
            tip_active: [self.tip_active[1], self.tip_active[0]],
        }
    }

    /// Tip position and unit direction pointing out of the crack.
    pub fn tip(&self, tip_index: usize) -> ([f64; 2], [f64; 2]) {
        let v = &self.vertices;
        let n = v.len();
        if tip_index == 0 {
            (v[0], unit(sub(v[0], v[1])))
        } else {
            (v[n - 1], unit(sub(v[n - 1], v[n - 2])))
        }
    }

    /// Translates every vertex along the pseudo-normal by `-delta` so nodes
    /// lying exactly on the crack end up on its positive side.
    pub(crate) fn offset(&self, delta: f64) -> CrackGeometry {
        let n = self.vertices.len();
        let mut out = self.clone();
        for i in 0..n {
            let nrm = if i == 0 {
                self.segment_normal(0)
            } else if i == n - 1 {
                self.segment_normal(n - 2)
            } else {
                let a = self.segment_normal(i - 1);
                let b = self.segment_normal(i);
                let s = [a[0] + b[0], a[1] + b[1]];
                let l = norm(s);
                if l < 1e-12 {
                    a
                } else {
                    let u = [s[0] / l, s[1] / l];
                    // keep the offset distance uniform on both segments
                    let c = dot(u, a).max(0.2);
                    [u[0] / c, u[1] / c]
                }
            };
            out.vertices[i] = [
                self.vertices[i][0] - delta * nrm[0],
                self.vertices[i][1] - delta * nrm[1],
            ];
        }
        out
    }
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    cross(sub(b, a), sub(c, a))
}

/// Proper or touching intersection of closed segments ab and cd.
pub(crate) fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| {
        r[0] >= p[0].min(q[0]) && r[0] <= p[0].max(q[0]) && r[1] >= p[1].min(q[1]) && r[1] <= p[1].max(q[1])
    };
    (d1 == 0.0 && on(c, d, a))
        || (d2 == 0.0 && on(c, d, b))
        || (d3 == 0.0 && on(a, b, c))
        || (d4 == 0.0 && on(a, b, d))
}

/// Signed distance from `x` to the polyline. The sign follows the left
/// normal of the nearest segment; at interior joints the angle-bisector
/// pseudo-normal decides, at end points the end segment's normal.
pub fn signed_distance(x: [f64; 2], crack: &CrackGeometry) -> LevelSetSample {
    let v = &crack.vertices;
    let ns = v.len() - 1;
    let mut best = (f64::INFINITY, 0usize, 0.0f64);
    for s in 0..ns {
        let d = sub(v[s + 1], v[s]);
        let l2 = dot(d, d);
        let t = (dot(sub(x, v[s]), d) / l2).clamp(0.0, 1.0);
        let p = [v[s][0] + t * d[0], v[s][1] + t * d[1]];
        let dist = norm(sub(x, p));
        if dist < best.0 - 1e-15 * (1.0 + dist) {
            best = (dist, s, t);
        }
    }
    let (dist, s, t) = best;
    let normal = if t <= 0.0 && s > 0 {
        pseudo_normal(crack, s)
    } else if t >= 1.0 && s + 1 < ns {
        pseudo_normal(crack, s + 1)
    } else {
        crack.segment_normal(s)
    };
    let d = sub(v[s + 1], v[s]);
    let p = [v[s][0] + t * d[0], v[s][1] + t * d[1]];
    let side = dot(sub(x, p), normal);
    let phi = if side >= 0.0 { dist } else { -dist };
    LevelSetSample {
        phi,
        closest_segment: s,
        t,
        normal,
    }
}

fn pseudo_normal(crack: &CrackGeometry, vertex: usize) -> [f64; 2] {
    let a = crack.segment_normal(vertex - 1);
    let b = crack.segment_normal(vertex);
    let s = [a[0] + b[0], a[1] + b[1]];
    if norm(s) < 1e-12 {
        a
    } else {
        unit(s)
    }
}

/// Extends the crack at an active tip by `increment` in the direction
/// rotated by `angle` from the current tip direction.
pub fn update_crack(
    crack: &CrackGeometry,
    tip_index: usize,
    angle: f64,
    increment: f64,
) -> Result<CrackGeometry> {
    if !(increment > 0.0) || !increment.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "crack increment must be positive (got {increment})"
        )));
    }
    if tip_index > 1 || !crack.tip_active[tip_index] {
        return Err(Error::InvalidArgument(format!("tip {tip_index} is not active")));
    }
    let (p, e1) = crack.tip(tip_index);
    let (c, s) = (angle.cos(), angle.sin());
    let dir = [c * e1[0] - s * e1[1], s * e1[0] + c * e1[1]];
    let q = [p[0] + increment * dir[0], p[1] + increment * dir[1]];
    let mut out = crack.clone();
    if tip_index == 0 {
        out.vertices.insert(0, q);
    } else {
        out.vertices.push(q);
    }
    // the new segment may touch only its neighbour at the shared vertex
    let v = &out.vertices;
    let ns = v.len() - 1;
    let (new_seg, neighbour) = if tip_index == 0 { (0, 1) } else { (ns - 1, ns - 2) };
    for s in 0..ns {
        if s == new_seg || s == neighbour {
            continue;
        }
        if segments_intersect(v[new_seg], v[new_seg + 1], v[s], v[s + 1]) {
            return Err(Error::GeometryConflict(
                "crack extension intersects the existing crack".into(),
            ));
        }
    }
    if angle.cos() < -1.0 + 1e-12 {
        return Err(Error::GeometryConflict("crack extension folds back onto itself".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn horizontal() -> CrackGeometry {
        CrackGeometry::new(vec![[0.0, 0.0], [1.0, 0.0]], [true, true]).unwrap()
    }

    #[test]
    fn distance_examples() {
        let c = horizontal();
        assert!((signed_distance([0.5, 0.2], &c).phi - 0.2).abs() < 1e-15);
        assert!((signed_distance([0.5, -0.2], &c).phi + 0.2).abs() < 1e-15);
        assert_eq!(signed_distance([0.5, 0.0], &c).phi, 0.0);
    }

    #[test]
    fn heaviside_examples() {
        assert_eq!(heaviside(0.3), 1);
        assert_eq!(heaviside(-1e-16), -1);
        assert_eq!(heaviside(0.0), 1);
        assert_eq!(shifted_heaviside(0.1, 0.2), 0);
        assert_eq!(shifted_heaviside(0.1, -0.2), 2);
        assert_eq!(shifted_heaviside(-0.1, 0.2), -2);
    }

    #[test]
    fn joint_pseudo_normal() {
        // V-shaped crack opening upward; point below the joint is negative
        let c = CrackGeometry::new(vec![[-1.0, 1.0], [0.0, 0.0], [1.0, 1.0]], [true, true]).unwrap();
        let s = signed_distance([0.0, -0.5], &c);
        assert!(s.phi < 0.0);
        let s = signed_distance([0.0, 0.5], &c);
        assert!(s.phi > 0.0);
        assert!((norm(s.normal) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn growth() {
        let c = horizontal();
        let g = update_crack(&c, 1, 0.0, 2.5e-3).unwrap();
        assert_eq!(g.vertices.len(), 3);
        assert!((g.vertices[2][0] - 1.0025).abs() < 1e-15 && g.vertices[2][1] == 0.0);
        let g = update_crack(&c, 1, std::f64::consts::FRAC_PI_2, 0.1).unwrap();
        assert!((g.vertices[2][0] - 1.0).abs() < 1e-15 && (g.vertices[2][1] - 0.1).abs() < 1e-15);
        let g = update_crack(&c, 0, std::f64::consts::FRAC_PI_2, 0.1).unwrap();
        // tip 0 points along -x; +90° rotates it to -y
        assert!((g.vertices[0][1] + 0.1).abs() < 1e-15);
        assert!(matches!(update_crack(&c, 1, 0.0, 0.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn self_intersection_rejected() {
        let c = CrackGeometry::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.5, 1.0]],
            [true, true],
        )
        .unwrap();
        assert!(matches!(
            update_crack(&c, 1, std::f64::consts::FRAC_PI_2, 2.0),
            Err(Error::GeometryConflict(_))
        ));
        assert!(CrackGeometry::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.5, -1.0]],
            [true, true]
        )
        .is_err());
    }
}
