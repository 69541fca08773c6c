//! Band-limited level-set curves: supports, trigonometric polynomials, zero
//! level set rasterization and sampling.

mod contour;
mod points;
mod poly;
mod polyline;
mod sampling;
mod support;

pub use contour::{contour_periodic, extract_zero_level_set, DEFAULT_GRID_RES, MIN_GRID_RES};
pub use points::PointSet;
pub use poly::{random_curve, GridValues, TrigPolynomial};
pub use polyline::{torus_delta, torus_distance, wrap_point, Component, Polyline, Segment};
pub use sampling::{project_to_zero_set, sample_curve, Rect, SamplingStrategy};
pub use support::{Freq, FrequencySupport};

use crate::error::Result;

/// Draws seeds starting at `seed` until the curve has a non-empty zero set
/// on a `grid_res` grid. Returns the seed used together with the curve.
pub fn random_nonempty_curve(
    support: FrequencySupport,
    seed: u64,
    grid_res: usize,
) -> Result<(u64, TrigPolynomial, Polyline)> {
    let mut s = seed;
    loop {
        let poly = random_curve(support, s)?;
        let line = extract_zero_level_set(&poly, grid_res)?;
        if !line.is_empty() {
            return Ok((s, poly, line));
        }
        s = s.wrapping_add(0x9E37_79B9_7F4A_7C15);
    }
}
