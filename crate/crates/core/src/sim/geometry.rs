//! Small vector helpers and segment geometry.

use crate::{Error, Result};

pub type Point3 = [f64; 3];

#[inline]
pub(crate) fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn add_scaled(a: Point3, b: Point3, t: f64) -> Point3 {
    [a[0] + t * b[0], a[1] + t * b[1], a[2] + t * b[2]]
}

#[inline]
pub(crate) fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn norm_sq(a: Point3) -> f64 {
    dot(a, a)
}

/// Squared distance from point `p` to the closed segment [a, b].
pub fn point_segment_distance_sq(p: Point3, a: Point3, b: Point3) -> f64 {
    let d = sub(b, a);
    let len_sq = norm_sq(d);
    let t = if len_sq > 0.0 {
        (dot(sub(p, a), d) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    norm_sq(sub(p, add_scaled(a, d, t)))
}

/// Squared minimal distance between closed segments, assuming both have
/// positive length.
pub fn segment_distance_sq(a0: Point3, a1: Point3, b0: Point3, b1: Point3) -> f64 {
    let d1 = sub(a1, a0);
    let d2 = sub(b1, b0);
    let r = sub(a0, b0);
    let a = norm_sq(d1);
    let e = norm_sq(d2);
    let f = dot(d2, r);
    let c = dot(d1, r);
    let b = dot(d1, d2);
    let denom = a * e - b * b;

    let mut s = if denom > 1e-14 * a * e {
        ((b * f - c * e) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    let pa = add_scaled(a0, d1, s);
    let pb = add_scaled(b0, d2, t);
    norm_sq(sub(pa, pb))
}

/// Minimal Euclidean distance between the closed segments [a0, a1] and
/// [b0, b1].
pub fn segment_distance(a0: Point3, a1: Point3, b0: Point3, b1: Point3) -> Result<f64> {
    if norm_sq(sub(a1, a0)) == 0.0 || norm_sq(sub(b1, b0)) == 0.0 {
        return Err(Error::invalid("segment has zero length"));
    }
    Ok(segment_distance_sq(a0, a1, b0, b1).sqrt())
}

/// Parameter interval [t0, t1] ⊆ [0, 1] of the segment p0 + t (p1 − p0) lying
/// inside the axis-aligned box [lo, hi], if non-empty.
pub(crate) fn clip_segment_to_box(
    p0: Point3,
    p1: Point3,
    lo: Point3,
    hi: Point3,
) -> Option<(f64, f64)> {
    let d = sub(p1, p0);
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for k in 0..3 {
        if d[k] == 0.0 {
            if p0[k] < lo[k] || p0[k] > hi[k] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d[k];
        let (mut a, mut b) = ((lo[k] - p0[k]) * inv, (hi[k] - p0[k]) * inv);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        t0 = t0.max(a);
        t1 = t1.min(b);
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_offset() {
        let d =
            segment_distance([0.0; 3], [1.0, 0.0, 0.0], [0.0, 0.0, 3.0], [1.0, 0.0, 3.0]).unwrap();
        assert!((d - 3.0).abs() < 1e-12);
    }

    #[test]
    fn crossing_at_midpoint() {
        let d = segment_distance(
            [-1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 1.0, 0.0],
        )
        .unwrap();
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn degenerate_segment_rejected() {
        assert!(segment_distance([0.0; 3], [0.0; 3], [1.0; 3], [2.0; 3]).is_err());
    }

    #[test]
    fn collinear_disjoint() {
        let d =
            segment_distance([0.0; 3], [1.0, 0.0, 0.0], [3.0, 0.0, 0.0], [5.0, 0.0, 0.0]).unwrap();
        assert!((d - 2.0).abs() < 1e-12);
    }

    #[test]
    fn clip_through_box() {
        let (t0, t1) =
            clip_segment_to_box([-1.0, 0.5, 0.5], [3.0, 0.5, 0.5], [0.0; 3], [1.0; 3]).unwrap();
        assert!((t0 - 0.25).abs() < 1e-12 && (t1 - 0.5).abs() < 1e-12);
        assert!(
            clip_segment_to_box([-1.0, 2.0, 0.5], [3.0, 2.0, 0.5], [0.0; 3], [1.0; 3]).is_none()
        );
    }
}
