//! Curve recovery from point samples.
//!
//! With a known support the coefficients are the smallest right singular
//! vector of `Φ_Λ(X)ᵀ`. With an over-estimated support `Γ ⊃ Λ` the null space
//! is spanned by shifted copies of the minimal filter; the curve is the common
//! zero set of the null-space polynomials, located through their sum of
//! squares.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::curve_model::{
    contour_periodic, extract_zero_level_set, torus_distance, Freq, FrequencySupport, GridValues,
    PointSet, Polyline, TrigPolynomial,
};
use crate::error::{Error, Result};
use crate::lifting::feature_matrix;

/// Relative singular-value threshold for exactly sampled (analytic) curves.
pub const ANALYTIC_TOLERANCE: f64 = 1e-6;

/// Relative threshold for samples taken from a polyline rasterized at
/// [`crate::curve_model::DEFAULT_GRID_RES`].
pub const RASTERIZED_TOLERANCE: f64 = 2e-4;

/// Rank decision: singular values `σ_i < relative · σ_max` count as zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TolerancePolicy {
    pub relative: f64,
}

impl TolerancePolicy {
    pub fn analytic() -> Self {
        TolerancePolicy {
            relative: ANALYTIC_TOLERANCE,
        }
    }

    /// Threshold for points sampled from a contour traced at `grid_res`.
    ///
    /// Linear interpolation along cell edges leaves residuals that shrink like
    /// `grid_res⁻²`, so the threshold follows the same scale.
    pub fn rasterized(grid_res: usize) -> Self {
        let scale = (crate::curve_model::DEFAULT_GRID_RES as f64 / grid_res as f64).powi(2);
        TolerancePolicy {
            relative: RASTERIZED_TOLERANCE * scale,
        }
    }

    pub fn with_relative(relative: f64) -> Self {
        TolerancePolicy { relative }
    }

    /// Number of singular values at or above the threshold.
    pub fn rank(&self, singular_values: &[f64]) -> usize {
        let smax = singular_values.iter().copied().fold(0.0, f64::max);
        if smax == 0.0 {
            return 0;
        }
        singular_values
            .iter()
            .filter(|&&s| s >= self.relative * smax)
            .count()
    }
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self::rasterized(crate::curve_model::DEFAULT_GRID_RES)
    }
}

/// Singular values (descending, length `|Γ|`) and matching right singular
/// vectors (columns) of `Φ_Γ(X)ᵀ`.
///
/// When `N < |Γ|` the matrix is padded with zero rows so the full right
/// singular basis is available.
pub(crate) fn right_singular_system(
    pts: &PointSet,
    support: FrequencySupport,
) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let phi = feature_matrix(pts, support)?.data;
    let m = support.len();
    let n = pts.len();
    let rows = n.max(m);
    let mut a = DMatrix::<Complex64>::zeros(rows, m);
    a.view_mut((0, 0), (n, m)).copy_from(&phi.transpose());
    let svd = a.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::numerical("SVD did not return right singular vectors"))?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    // row i of Vᴴ is the conjugate of right singular vector i
    let mut v = DMatrix::<Complex64>::zeros(m, m);
    for (col, &i) in order.iter().enumerate() {
        for r in 0..m {
            v[(r, col)] = v_t[(i, r)].conj();
        }
    }
    Ok((values, v))
}

/// Least-squares coefficient estimate with the default analytic tolerance.
pub fn estimate_coefficients(pts: &PointSet, support: FrequencySupport) -> Result<TrigPolynomial> {
    estimate_coefficients_with(pts, support, TolerancePolicy::analytic())
}

/// Unit-norm `c` minimizing `Σ_i |ψ(x_i)|²`, phase normalized.
///
/// Fails with [`Error::AmbiguousSupport`] when more than one singular value
/// falls below the tolerance.
pub fn estimate_coefficients_with(
    pts: &PointSet,
    support: FrequencySupport,
    tol: TolerancePolicy,
) -> Result<TrigPolynomial> {
    if pts.is_empty() {
        return Err(Error::contract("estimate_coefficients needs at least one point"));
    }
    let (sv, v) = right_singular_system(pts, support)?;
    let null_dim = support.len() - tol.rank(&sv);
    if null_dim > 1 {
        return Err(Error::AmbiguousSupport { null_dim });
    }
    let c: Vec<Complex64> = v.column(support.len() - 1).iter().copied().collect();
    Ok(TrigPolynomial::new(support, c, false)?
        .normalized()
        .phase_normalized())
}

/// Shifts `l` with `l + Λ ⊆ Γ`, in row-major order.
pub fn shift_set(gamma: FrequencySupport, lambda: FrequencySupport) -> Result<Vec<Freq>> {
    if !lambda.fits_in(&gamma) {
        return Err(Error::contract(format!(
            "support {lambda} does not fit inside {gamma}"
        )));
    }
    let (glo, ghi) = (gamma.lower(), gamma.upper());
    let (llo, lhi) = (lambda.lower(), lambda.upper());
    let mut out = Vec::new();
    for a in (glo.0 - llo.0)..=(ghi.0 - lhi.0) {
        for b in (glo.1 - llo.1)..=(ghi.1 - lhi.1) {
            out.push((a, b));
        }
    }
    Ok(out)
}

/// `|Γ| − |Γ:Λ|`, the rank of `Φ_Γ(X)` under sufficient sampling.
pub fn rank_bound(gamma: FrequencySupport, lambda: FrequencySupport) -> Result<usize> {
    Ok(gamma.len() - shift_set(gamma, lambda)?.len())
}

/// Orthonormal basis of the approximate right null space of `Φ_Γ(X)ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NullspaceBasis {
    pub support: FrequencySupport,
    pub vectors: Vec<Vec<Complex64>>,
    /// Full spectrum, descending, padded with zeros to `|Γ|`.
    pub singular_values: Vec<f64>,
}

impl NullspaceBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn rank(&self) -> usize {
        self.support.len() - self.vectors.len()
    }

    pub fn polynomials(&self) -> Vec<TrigPolynomial> {
        self.vectors
            .iter()
            .map(|v| {
                TrigPolynomial::new(self.support, v.clone(), false)
                    .expect("basis vectors match their support")
            })
            .collect()
    }
}

pub fn nullspace_basis(
    pts: &PointSet,
    gamma: FrequencySupport,
    tol: TolerancePolicy,
) -> Result<NullspaceBasis> {
    if pts.is_empty() {
        return Err(Error::contract("nullspace_basis needs at least one point"));
    }
    let (sv, v) = right_singular_system(pts, gamma)?;
    let rank = tol.rank(&sv);
    let vectors = (rank..gamma.len())
        .map(|c| v.column(c).iter().copied().collect())
        .collect();
    Ok(NullspaceBasis {
        support: gamma,
        vectors,
        singular_values: sv,
    })
}

/// `γ(x) = Σ_i |μ_i(x)|²` over a null-space basis.
#[derive(Debug, Clone)]
pub struct SosPolynomial {
    terms: Vec<TrigPolynomial>,
}

pub fn sos_polynomial(basis: &NullspaceBasis) -> Result<SosPolynomial> {
    if basis.vectors.is_empty() {
        return Err(Error::contract("sum of squares needs a non-empty basis"));
    }
    Ok(SosPolynomial {
        terms: basis.polynomials(),
    })
}

impl SosPolynomial {
    pub fn from_terms(terms: Vec<TrigPolynomial>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::contract("sum of squares needs at least one term"));
        }
        Ok(SosPolynomial { terms })
    }

    pub fn terms(&self) -> &[TrigPolynomial] {
        &self.terms
    }

    pub fn value_at(&self, x: [f64; 2]) -> f64 {
        self.terms.iter().map(|t| t.value_at(x).norm_sqr()).sum()
    }

    pub fn evaluate(&self, pts: &PointSet) -> Result<Vec<f64>> {
        pts.require_planar()?;
        Ok(pts.iter().map(|p| self.value_at([p[0], p[1]])).collect())
    }

    pub fn evaluate_grid(&self, res: usize) -> GridValues<f64> {
        let mut values = vec![0.0; res * res];
        for t in &self.terms {
            let g = t.evaluate_grid(res);
            for (acc, v) in values.iter_mut().zip(&g.values) {
                *acc += v.norm_sqr();
            }
        }
        GridValues { res, values }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Contour level for the sum of squares: the larger of three times the
/// median of `γ` over the samples and the value `γ` reaches one grid spacing
/// away from the samples.
pub fn sos_contour_level(sos: &SosPolynomial, pts: &PointSet, grid_res: usize) -> Result<f64> {
    let mut on = sos.evaluate(pts)?;
    let data_level = 3.0 * median(&mut on);
    let h = 1.0 / grid_res as f64;
    // slope of √γ across the curve, probed along the axes
    let mut slopes: Vec<f64> = pts
        .iter()
        .map(|p| {
            let base = sos.value_at([p[0], p[1]]).sqrt();
            [[h, 0.0], [-h, 0.0], [0.0, h], [0.0, -h]]
                .iter()
                .map(|d| (sos.value_at([p[0] + d[0], p[1] + d[1]]).sqrt() - base).max(0.0) / h)
                .fold(0.0, f64::max)
        })
        .collect();
    let slope = median(&mut slopes);
    Ok(data_level.max((slope * h).powi(2)))
}

/// Zero contour of the single best-fitting polynomial on `support`, i.e. the
/// smallest right singular vector projected to a real-valued polynomial.
pub fn recover_known_support(
    pts: &PointSet,
    support: FrequencySupport,
    grid_res: usize,
) -> Result<Polyline> {
    if pts.is_empty() {
        return Err(Error::contract("recovery needs at least one point"));
    }
    let (_, v) = right_singular_system(pts, support)?;
    let c: Vec<Complex64> = v.column(support.len() - 1).iter().copied().collect();
    let poly = TrigPolynomial::new(support, c, false)?.to_real()?;
    extract_zero_level_set(&poly, grid_res)
}

/// Recovers the curve through the sampled points with support `gamma`.
///
/// A null space of dimension at most one yields the zero contour of the
/// recovered (real-projected) polynomial; larger null spaces yield a contour
/// of their sum of squares at [`sos_contour_level`].
pub fn recover_curve(
    pts: &PointSet,
    gamma: FrequencySupport,
    grid_res: usize,
    tol: TolerancePolicy,
) -> Result<Polyline> {
    let mut basis = nullspace_basis(pts, gamma, tol)?;
    if basis.dim() <= 1 {
        if gamma.is_odd() {
            return recover_known_support(pts, gamma, grid_res);
        }
        let (_, v) = right_singular_system(pts, gamma)?;
        basis.vectors = vec![v.column(gamma.len() - 1).iter().copied().collect()];
    }
    let sos = sos_polynomial(&basis)?;
    let level = sos_contour_level(&sos, pts, grid_res)?;
    Ok(contour_periodic(&sos.evaluate_grid(grid_res), level))
}

/// Nearest-neighbour queries on the unit torus using square buckets.
pub struct TorusIndex {
    buckets: Vec<Vec<[f64; 2]>>,
    side: usize,
}

impl TorusIndex {
    pub fn new(points: &[[f64; 2]]) -> Self {
        let side = ((points.len() as f64 / 2.0).sqrt().ceil() as usize).clamp(1, 256);
        let mut buckets = vec![Vec::new(); side * side];
        for &p in points {
            let (a, b) = Self::cell(side, p);
            buckets[a * side + b].push(p);
        }
        TorusIndex { buckets, side }
    }

    fn cell(side: usize, p: [f64; 2]) -> (usize, usize) {
        let c = |v: f64| ((v.rem_euclid(1.0) * side as f64) as usize).min(side - 1);
        (c(p[0]), c(p[1]))
    }

    /// Distance to the nearest indexed point (infinite when empty).
    pub fn nearest(&self, q: [f64; 2]) -> f64 {
        let side = self.side as i64;
        let (qa, qb) = Self::cell(self.side, q);
        let cell = 1.0 / self.side as f64;
        let mut best = f64::INFINITY;
        for r in 0..=(side / 2 + 1) {
            for da in -r..=r {
                for db in -r..=r {
                    if da.abs() != r && db.abs() != r {
                        continue;
                    }
                    let a = (qa as i64 + da).rem_euclid(side) as usize;
                    let b = (qb as i64 + db).rem_euclid(side) as usize;
                    for &p in &self.buckets[a * self.side + b] {
                        best = best.min(torus_distance(p, q));
                    }
                }
            }
            if best <= r as f64 * cell {
                break;
            }
        }
        best
    }
}

/// Symmetric mean nearest-vertex distance on the unit torus:
/// `½(mean_a d(a, B) + mean_b d(b, A))`.
pub fn chamfer_distance(a: &Polyline, b: &Polyline) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::contract("chamfer distance needs two non-empty polylines"));
    }
    let va: Vec<[f64; 2]> = a.vertices().collect();
    let vb: Vec<[f64; 2]> = b.vertices().collect();
    let directed = |from: &[[f64; 2]], to: &[[f64; 2]]| {
        let index = TorusIndex::new(to);
        from.iter().map(|&p| index.nearest(p)).sum::<f64>() / from.len() as f64
    };
    Ok(0.5 * (directed(&va, &vb) + directed(&vb, &va)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve_model::{
        random_nonempty_curve, sample_curve, Component, SamplingStrategy,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sq(k: usize) -> FrequencySupport {
        FrequencySupport::square(k).unwrap()
    }

    fn line_pair_points(n: usize) -> PointSet {
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|i| [if i % 2 == 0 { 0.25 } else { 0.75 }, (i as f64 * 0.137).fract()])
            .collect();
        PointSet::from_planar(&pts)
    }

    #[test]
    fn analytic_line_pair_coefficients() {
        let s = FrequencySupport::new(3, 1).unwrap();
        let est = estimate_coefficients(&line_pair_points(12), s).unwrap();
        let truth = [0.5, 0.0, 0.5];
        let norm = (0.5f64).sqrt();
        let corr: Complex64 = est.coeffs().iter().zip(truth).map(|(a, b)| a.conj() * b).sum();
        assert!(corr.norm() / norm >= 1.0 - 1e-10);
    }

    #[test]
    fn empty_points_rejected() {
        assert!(matches!(
            estimate_coefficients(&PointSet::empty(2), sq(3)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn undersampling_is_ambiguous() {
        let pts = line_pair_points(4);
        assert!(matches!(
            estimate_coefficients(&pts, sq(3)),
            Err(Error::AmbiguousSupport { .. })
        ));
    }

    #[test]
    fn shift_set_counts() {
        assert_eq!(shift_set(sq(3), sq(3)).unwrap(), vec![(0, 0)]);
        assert_eq!(shift_set(sq(11), sq(5)).unwrap().len(), 49);
        assert_eq!(shift_set(sq(5), sq(3)).unwrap().len(), 9);
        assert!(shift_set(sq(3), sq(5)).is_err());
    }

    #[test]
    fn shift_set_matches_enumeration() {
        // brute force: every integer shift keeping Λ inside Γ
        for (g, l) in [(sq(11), sq(5)), (sq(5), sq(3)), (FrequencySupport::new(6, 4).unwrap(), FrequencySupport::new(3, 2).unwrap())] {
            let mut brute = Vec::new();
            for a in -20..=20 {
                for b in -20..=20 {
                    if l.iter().all(|k| g.contains((k.0 + a, k.1 + b))) {
                        brute.push((a, b));
                    }
                }
            }
            assert_eq!(shift_set(g, l).unwrap(), brute);
        }
    }

    #[test]
    fn rank_bounds() {
        assert_eq!(rank_bound(sq(4), sq(4)).unwrap(), 15);
        assert_eq!(rank_bound(sq(11), sq(5)).unwrap(), 72);
        assert_eq!(rank_bound(sq(5), sq(3)).unwrap(), 16);
    }

    #[test]
    fn analytic_nullspace_is_single_filter() {
        let s = FrequencySupport::new(3, 1).unwrap();
        let pts = line_pair_points(12);
        let basis = nullspace_basis(&pts, s, TolerancePolicy::analytic()).unwrap();
        assert_eq!(basis.dim(), 1);
        let est = estimate_coefficients(&pts, s).unwrap();
        let b = TrigPolynomial::new(s, basis.vectors[0].clone(), false)
            .unwrap()
            .phase_normalized();
        for (x, y) in b.coeffs().iter().zip(est.coeffs()) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn sos_single_term_is_squared_modulus() {
        let s = FrequencySupport::new(3, 1).unwrap();
        let pts = line_pair_points(12);
        let basis = nullspace_basis(&pts, s, TolerancePolicy::analytic()).unwrap();
        let sos = sos_polynomial(&basis).unwrap();
        let est = estimate_coefficients(&pts, s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let x = [rng.random(), rng.random()];
            assert!((sos.value_at(x) - est.value_at(x).norm_sqr()).abs() < 1e-10);
        }
    }

    #[test]
    fn sos_nonnegative_and_empty_rejected() {
        let (_, _, line) = random_nonempty_curve(sq(3), 2, 256).unwrap();
        let pts = sample_curve(&line, 60, SamplingStrategy::UniformArclength, 1).unwrap();
        let basis = nullspace_basis(&pts, sq(5), TolerancePolicy::rasterized(256)).unwrap();
        let sos = sos_polynomial(&basis).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            assert!(sos.value_at([rng.random(), rng.random()]) >= 0.0);
        }
        let empty = NullspaceBasis {
            support: sq(3),
            vectors: vec![],
            singular_values: vec![],
        };
        assert!(sos_polynomial(&empty).is_err());
    }

    #[test]
    fn nullspace_vectors_orthonormal() {
        let (_, _, line) = random_nonempty_curve(sq(3), 5, 512).unwrap();
        let pts = sample_curve(&line, 80, SamplingStrategy::UniformArclength, 4).unwrap();
        let basis = nullspace_basis(&pts, sq(5), TolerancePolicy::default()).unwrap();
        assert_eq!(basis.dim(), 9);
        for (i, a) in basis.vectors.iter().enumerate() {
            for (j, b) in basis.vectors.iter().enumerate() {
                let ip: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - Complex64::new(want, 0.0)).norm() < 1e-10);
            }
        }
    }

    fn brute_chamfer(a: &Polyline, b: &Polyline) -> f64 {
        let va: Vec<_> = a.vertices().collect();
        let vb: Vec<_> = b.vertices().collect();
        let d = |from: &[[f64; 2]], to: &[[f64; 2]]| {
            from.iter()
                .map(|&p| to.iter().map(|&q| torus_distance(p, q)).fold(f64::INFINITY, f64::min))
                .sum::<f64>()
                / from.len() as f64
        };
        0.5 * (d(&va, &vb) + d(&vb, &va))
    }

    fn random_polyline(n: usize, seed: u64) -> Polyline {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Polyline::new(vec![Component {
            vertices: (0..n).map(|_| [rng.random(), rng.random()]).collect(),
            closed: false,
        }])
    }

    #[test]
    fn chamfer_identity_and_offset() {
        let a = random_polyline(50, 1);
        assert_eq!(chamfer_distance(&a, &a).unwrap(), 0.0);
        let line = |x: f64| {
            Polyline::new(vec![Component {
                vertices: (0..1000).map(|i| [x, i as f64 / 1000.0]).collect(),
                closed: true,
            }])
        };
        let d = 0.03;
        let c = chamfer_distance(&line(0.3), &line(0.3 + d)).unwrap();
        assert!((c - d).abs() <= 0.01 * d);
    }

    #[test]
    fn chamfer_matches_brute_force() {
        for seed in 0..5 {
            let a = random_polyline(50, seed);
            let b = random_polyline(50, seed + 100);
            let fast = chamfer_distance(&a, &b).unwrap();
            assert!((fast - brute_chamfer(&a, &b)).abs() < 1e-15);
        }
    }

    #[test]
    fn chamfer_rejects_empty() {
        assert!(chamfer_distance(&Polyline::default(), &random_polyline(3, 0)).is_err());
    }
}
