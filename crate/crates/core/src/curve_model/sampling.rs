use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::points::PointSet;
use super::poly::TrigPolynomial;
use super::polyline::{wrap_point, Polyline, Segment};
use crate::error::{Error, Result};

/// Axis-aligned region `[lo1, hi1) × [lo2, hi2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Rect {
    pub fn new(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Rect { lo, hi }
    }

    /// The half of a curve's bounding box with smaller first coordinate.
    pub fn left_half_of(curve: &Polyline) -> Option<Rect> {
        let (lo, hi) = curve.bounds()?;
        Some(Rect::new(
            [lo[0], lo[1]],
            [0.5 * (lo[0] + hi[0]), hi[1] + f64::EPSILON],
        ))
    }

    /// The half of a curve's bounding box with larger first coordinate.
    pub fn right_half_of(curve: &Polyline) -> Option<Rect> {
        let (lo, hi) = curve.bounds()?;
        Some(Rect::new(
            [0.5 * (lo[0] + hi[0]), lo[1]],
            [hi[0] + f64::EPSILON, hi[1] + f64::EPSILON],
        ))
    }

    /// Parameter interval of `seg` inside the rectangle (Liang–Barsky).
    fn clip(&self, seg: &Segment) -> Option<(f64, f64)> {
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for d in 0..2 {
            let (p, q) = (seg.start[d], seg.delta[d]);
            if q == 0.0 {
                if p < self.lo[d] || p >= self.hi[d] {
                    return None;
                }
                continue;
            }
            let (mut a, mut b) = ((self.lo[d] - p) / q, (self.hi[d] - p) / q);
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            t0 = t0.max(a);
            t1 = t1.min(b);
        }
        (t1 > t0).then_some((t0, t1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingStrategy {
    /// Positions drawn uniformly with respect to total arc length.
    UniformArclength,
    /// Uniform arc length restricted to the part of the curve inside a region.
    Restricted(Rect),
}

/// Draws `n` points on the polyline segments; deterministic given `seed`.
pub fn sample_curve(
    curve: &Polyline,
    n: usize,
    strategy: SamplingStrategy,
    seed: u64,
) -> Result<PointSet> {
    if n == 0 {
        return Ok(PointSet::empty(2));
    }
    if curve.is_empty() {
        return Err(Error::contract("cannot sample an empty curve"));
    }
    let pieces: Vec<Segment> = match strategy {
        SamplingStrategy::UniformArclength => curve.segments(),
        SamplingStrategy::Restricted(rect) => curve
            .segments()
            .iter()
            .filter_map(|s| {
                rect.clip(s).map(|(t0, t1)| Segment {
                    start: s.at(t0),
                    delta: [(t1 - t0) * s.delta[0], (t1 - t0) * s.delta[1]],
                })
            })
            .collect(),
    };
    let mut cumulative = Vec::with_capacity(pieces.len());
    let mut total = 0.0;
    for p in &pieces {
        total += p.length();
        cumulative.push(total);
    }
    if total <= 0.0 {
        return Err(Error::NoSamplesAvailable);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u = rng.random_range(0.0..total);
        let k = cumulative.partition_point(|&c| c <= u).min(pieces.len() - 1);
        let before = if k == 0 { 0.0 } else { cumulative[k - 1] };
        let len = pieces[k].length();
        let t = if len > 0.0 { (u - before) / len } else { 0.0 };
        out.push(wrap_point(pieces[k].at(t.clamp(0.0, 1.0))));
    }
    Ok(PointSet::from_planar(&out))
}

/// Moves each point onto the zero set of `Re ψ` by Newton steps along the
/// gradient. Points where the gradient vanishes are left in place.
pub fn project_to_zero_set(poly: &TrigPolynomial, pts: &PointSet) -> Result<PointSet> {
    pts.require_planar()?;
    let scale = poly.norm().max(f64::MIN_POSITIVE);
    let out: Vec<[f64; 2]> = pts
        .iter()
        .map(|p| {
            let mut x = [p[0], p[1]];
            for _ in 0..20 {
                let f = poly.value_at(x).re;
                if f.abs() <= 1e-15 * scale {
                    break;
                }
                let g = poly.gradient_at(x).map(|c| c.re);
                let gg = g[0] * g[0] + g[1] * g[1];
                if gg <= f64::MIN_POSITIVE {
                    break;
                }
                x = [x[0] - f * g[0] / gg, x[1] - f * g[1] / gg];
            }
            wrap_point(x)
        })
        .collect();
    Ok(PointSet::from_planar(&out))
}
