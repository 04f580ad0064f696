use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scalar::Real;

/// Analytic surface with closed-form ray intersection and point distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Shape<T> {
    /// Axis-aligned box.
    Box {
        min: Vec3<T>,
        max: Vec3<T>,
    },
    Sphere {
        center: Vec3<T>,
        radius: T,
    },
    /// Infinite plane `normal · p = offset`, with a unit normal.
    Plane {
        normal: Vec3<T>,
        offset: T,
    },
}

impl<T: Real> Shape<T> {
    pub fn new_box(min: Vec3<T>, max: Vec3<T>) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min.x < max.x && min.y < max.y && min.z < max.z)
        {
            return Err(Error::Invariant(format!(
                "box needs finite min < max on every axis, got min {min:?} max {max:?}"
            )));
        }
        Ok(Shape::Box { min, max })
    }

    pub fn new_sphere(center: Vec3<T>, radius: T) -> Result<Self> {
        if !(center.is_finite() && radius.is_finite() && radius > T::zero()) {
            return Err(Error::Invariant(format!(
                "sphere needs a finite center and positive radius, got {radius}"
            )));
        }
        Ok(Shape::Sphere { center, radius })
    }

    /// Normalizes `normal`.
    pub fn new_plane(normal: Vec3<T>, offset: T) -> Result<Self> {
        let n = normal.norm();
        if !(normal.is_finite() && offset.is_finite() && n > T::zero()) {
            return Err(Error::Invariant(
                "plane needs a finite non-zero normal and finite offset".into(),
            ));
        }
        Ok(Shape::Plane {
            normal: normal * (T::one() / n),
            offset: offset / n,
        })
    }

    /// Smallest ray parameter `t > t_min` with `origin + t·dir` on the
    /// surface. `dir` need not be unit length.
    pub fn intersect(&self, origin: Vec3<T>, dir: Vec3<T>, t_min: T) -> Option<T> {
        match *self {
            Shape::Box { min, max } => {
                let (o, d) = (origin.to_array(), dir.to_array());
                let (lo, hi) = (min.to_array(), max.to_array());
                let mut t_near = T::neg_infinity();
                let mut t_far = T::infinity();
                for a in 0..3 {
                    if d[a] == T::zero() {
                        if o[a] < lo[a] || o[a] > hi[a] {
                            return None;
                        }
                        continue;
                    }
                    let t1 = (lo[a] - o[a]) / d[a];
                    let t2 = (hi[a] - o[a]) / d[a];
                    t_near = t_near.max(t1.min(t2));
                    t_far = t_far.min(t1.max(t2));
                }
                if t_near > t_far {
                    None
                } else if t_near > t_min {
                    Some(t_near)
                } else if t_far > t_min {
                    Some(t_far)
                } else {
                    None
                }
            }
            Shape::Sphere { center, radius } => {
                let oc = origin - center;
                let a = dir.norm_squared();
                let b = oc.dot(dir);
                let c = oc.norm_squared() - radius * radius;
                let disc = b * b - a * c;
                if disc < T::zero() {
                    return None;
                }
                let sq = disc.sqrt();
                [(-b - sq) / a, (-b + sq) / a]
                    .into_iter()
                    .find(|&t| t > t_min)
            }
            Shape::Plane { normal, offset } => {
                let denom = normal.dot(dir);
                if denom == T::zero() {
                    return None;
                }
                let t = (offset - normal.dot(origin)) / denom;
                (t > t_min).then_some(t)
            }
        }
    }

    /// Unsigned distance from `p` to the surface.
    pub fn distance(&self, p: Vec3<T>) -> T {
        match *self {
            Shape::Box { min, max } => {
                let half = T::lit(0.5);
                let c = (min + max) * half;
                let h = (max - min) * half;
                let d = p - c;
                let q = Vec3::new(d.x.abs() - h.x, d.y.abs() - h.y, d.z.abs() - h.z);
                let inside = q.x.max(q.y).max(q.z);
                if inside <= T::zero() {
                    -inside
                } else {
                    let z = T::zero();
                    Vec3::new(q.x.max(z), q.y.max(z), q.z.max(z)).norm()
                }
            }
            Shape::Sphere { center, radius } => ((p - center).norm() - radius).abs(),
            Shape::Plane { normal, offset } => (normal.dot(p) - offset).abs(),
        }
    }
}
