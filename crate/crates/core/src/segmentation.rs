//! Piecewise-constant image segmentation through a structured low-rank lift
//! of the image-gradient spectrum.
//!
//! Image axis 0 (rows, height) plays the role of `x1` and axis 1 (columns,
//! width) that of `x2`; pixel `(r, c)` sits at `(r/H, c/W)` on the torus.
//! Spectra are unnormalized 2-D DFTs stored in DFT order.
//!
//! For a filter `c` supported on `Γ`, the lift maps `c` to the valid part of
//! the 2-D convolution `Σ_k ĝ[l−k]·c[k]` for both gradient channels. Because
//! the valid outputs of a linear convolution coincide with those of a circular
//! one, the same quantity is the DFT of `g·μ_c` cropped to the valid region,
//! where `μ_c(x) = Σ_k c_k exp(j2π kᵀx)`; the image update uses that route.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::curve_model::{contour_periodic, FrequencySupport, GridValues, Polyline, TrigPolynomial};
use crate::error::{Error, Result};

pub const MIN_IMAGE_SIZE: usize = 16;
pub const DEFAULT_LAMBDA: f64 = 5e9;
/// Level of the normalized edge energy (mean 1) that delimits edges.
pub const EDGE_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width < MIN_IMAGE_SIZE || height < MIN_IMAGE_SIZE {
            return Err(Error::contract(format!(
                "image must be at least {MIN_IMAGE_SIZE}x{MIN_IMAGE_SIZE}, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::contract(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        if pixels.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("image pixels must be finite"));
        }
        Ok(GrayImage { width, height, pixels })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.pixels[r * self.width + c]
    }

    fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.height, self.width, &self.pixels)
    }

    fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let pixels = m.transpose().as_slice().to_vec();
        Self::new(m.ncols(), m.nrows(), pixels)
    }

    /// Rescales pixel values affinely onto `[0, 1]`; constant images map to 0.
    pub fn normalized(&self) -> GrayImage {
        let lo = self.pixels.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.pixels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let pixels = self
            .pixels
            .iter()
            .map(|v| if span > 0.0 { (v - lo) / span } else { 0.0 })
            .collect();
        GrayImage {
            width: self.width,
            height: self.height,
            pixels,
        }
    }
}

/// Indicator image of `{Re ψ > 0}`: pixel `(r, c)` is 1 when
/// `Re ψ(r/H, c/W) > 0` and 0 otherwise.
pub fn level_set_phantom(poly: &TrigPolynomial, width: usize, height: usize) -> Result<GrayImage> {
    GrayImage::from_fn(width, height, |r, c| {
        let v = poly.value_at([r as f64 / height as f64, c as f64 / width as f64]).re;
        if v > 0.0 {
            1.0
        } else {
            0.0
        }
    })
}

/// Row/column FFT plans for one image size.
struct Fft2 {
    height: usize,
    width: usize,
    rows_fwd: Arc<dyn Fft<f64>>,
    rows_inv: Arc<dyn Fft<f64>>,
    cols_fwd: Arc<dyn Fft<f64>>,
    cols_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            height,
            width,
            rows_fwd: planner.plan_fft_forward(width),
            rows_inv: planner.plan_fft_inverse(width),
            cols_fwd: planner.plan_fft_forward(height),
            cols_inv: planner.plan_fft_inverse(height),
        }
    }

    /// Unnormalized transform in place; `data` is `height × width`.
    fn run(&self, data: &mut DMatrix<Complex64>, forward: bool) {
        let (along_rows, along_cols) = if forward {
            (&self.rows_fwd, &self.cols_fwd)
        } else {
            (&self.rows_inv, &self.cols_inv)
        };
        // nalgebra is column-major: each column is contiguous
        for mut col in data.column_iter_mut() {
            along_cols.process(col.as_mut_slice());
        }
        let mut row = vec![Complex64::new(0.0, 0.0); self.width];
        for r in 0..self.height {
            for c in 0..self.width {
                row[c] = data[(r, c)];
            }
            along_rows.process(&mut row);
            for c in 0..self.width {
                data[(r, c)] = row[c];
            }
        }
    }

    fn forward_real(&self, m: &DMatrix<f64>) -> DMatrix<Complex64> {
        let mut data = m.map(|v| Complex64::new(v, 0.0));
        self.run(&mut data, true);
        data
    }
}

/// DFTs of the periodic forward differences along rows (`x1`) and columns (`x2`).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSpectra {
    pub height: usize,
    pub width: usize,
    pub channels: [DMatrix<Complex64>; 2],
}

/// Computed as the image spectrum times `exp(j2πu/n) − 1` along each axis.
pub fn gradient_spectrum(img: &GrayImage) -> GradientSpectra {
    let (h, w) = (img.height, img.width);
    let spec = Fft2::new(h, w).forward_real(&img.to_matrix());
    let mult = |u: usize, n: usize| Complex64::from_polar(1.0, 2.0 * PI * u as f64 / n as f64) - 1.0;
    let d1 = DMatrix::from_fn(h, w, |r, c| spec[(r, c)] * mult(r, h));
    let d2 = DMatrix::from_fn(h, w, |r, c| spec[(r, c)] * mult(c, w));
    GradientSpectra {
        height: h,
        width: w,
        channels: [d1, d2],
    }
}

/// Valid-region block-Toeplitz lift of the two gradient spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzLift {
    pub filter_support: FrequencySupport,
    pub spectra: GradientSpectra,
}

impl ToeplitzLift {
    pub fn new(spectra: GradientSpectra, filter_support: FrequencySupport) -> Result<Self> {
        if filter_support.k1() > spectra.height || filter_support.k2() > spectra.width {
            return Err(Error::contract(format!(
                "filter {filter_support} does not fit a {}x{} spectrum",
                spectra.height, spectra.width
            )));
        }
        Ok(ToeplitzLift {
            filter_support,
            spectra,
        })
    }

    /// Centered output frequencies `l` whose inputs `l − k` all lie in the spectrum.
    fn valid_range(&self) -> ([i64; 2], [i64; 2]) {
        let full = FrequencySupport::new(self.spectra.height, self.spectra.width)
            .expect("spectrum dimensions are non-zero");
        let (flo, fhi) = (full.lower(), full.upper());
        let (klo, khi) = (self.filter_support.lower(), self.filter_support.upper());
        ([flo.0 + khi.0, flo.1 + khi.1], [fhi.0 + klo.0, fhi.1 + klo.1])
    }

    pub fn valid_shape(&self) -> (usize, usize) {
        (
            self.spectra.height - self.filter_support.k1() + 1,
            self.spectra.width - self.filter_support.k2() + 1,
        )
    }

    pub fn rows(&self) -> usize {
        let (a, b) = self.valid_shape();
        2 * a * b
    }

    pub fn cols(&self) -> usize {
        self.filter_support.len()
    }

    fn spectrum_at(&self, ch: usize, u: (i64, i64)) -> Complex64 {
        let (h, w) = (self.spectra.height as i64, self.spectra.width as i64);
        self.spectra.channels[ch][(u.0.rem_euclid(h) as usize, u.1.rem_euclid(w) as usize)]
    }

    /// Output rows in channel-major, then row-major valid-position order.
    pub fn apply(&self, c: &[Complex64]) -> Result<Vec<Complex64>> {
        if c.len() != self.cols() {
            return Err(Error::contract(format!(
                "filter has {} taps, lift expects {}",
                c.len(),
                self.cols()
            )));
        }
        let (lo, hi) = self.valid_range();
        let mut out = Vec::with_capacity(self.rows());
        for ch in 0..2 {
            for l1 in lo[0]..=hi[0] {
                for l2 in lo[1]..=hi[1] {
                    let v: Complex64 = self
                        .filter_support
                        .iter()
                        .zip(c)
                        .map(|(k, ck)| self.spectrum_at(ch, (l1 - k.0, l2 - k.1)) * ck)
                        .sum();
                    out.push(v);
                }
            }
        }
        Ok(out)
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        let (lo, hi) = self.valid_range();
        let taps: Vec<_> = self.filter_support.iter().collect();
        let mut m = DMatrix::zeros(self.rows(), self.cols());
        let mut row = 0;
        for ch in 0..2 {
            for l1 in lo[0]..=hi[0] {
                for l2 in lo[1]..=hi[1] {
                    for (j, k) in taps.iter().enumerate() {
                        m[(row, j)] = self.spectrum_at(ch, (l1 - k.0, l2 - k.1));
                    }
                    row += 1;
                }
            }
        }
        m
    }

    /// Eigenvalues (ascending, i.e. squared singular values of the lift) and
    /// matching eigenvectors of `TᴴT`.
    pub fn gram_spectrum(&self) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
        let t = self.matrix();
        let gram = t.adjoint() * &t;
        let gram = (&gram + gram.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = gram
            .try_symmetric_eigen(f64::EPSILON, 0)
            .ok_or_else(|| Error::numerical("lift eigendecomposition failed"))?;
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let vectors = DMatrix::from_fn(self.cols(), order.len(), |r, j| eig.eigenvectors[(r, order[j])]);
        Ok((values, vectors))
    }

    /// Numerical rank of the lift: singular values above
    /// `relative · σ_max`.
    pub fn numerical_rank(&self, relative: f64) -> Result<usize> {
        let (values, _) = self.gram_spectrum()?;
        let smax = values.last().copied().unwrap_or(0.0).sqrt();
        Ok(values.iter().filter(|&&v| v.sqrt() > relative * smax).count())
    }
}

fn check_rank(support: FrequencySupport, rank: usize) -> Result<()> {
    if rank >= support.len() {
        return Err(Error::contract(format!(
            "rank {rank} must be below the number of filter taps {}",
            support.len()
        )));
    }
    Ok(())
}

/// `Σ_{i>r} σ_i²` of the lift of `img`.
pub fn trailing_energy(img: &GrayImage, support: FrequencySupport, rank: usize) -> Result<f64> {
    check_rank(support, rank)?;
    let lift = ToeplitzLift::new(gradient_spectrum(img), support)?;
    let (values, _) = lift.gram_spectrum()?;
    Ok(values[..support.len() - rank].iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentConfig {
    pub rank: usize,
    pub lambda: f64,
    pub filter_support: FrequencySupport,
    pub max_iters: usize,
    /// Stop when the relative change of `f` drops below this.
    pub rel_tol: f64,
    pub cg_iters: usize,
    pub cg_tol: f64,
}

impl SegmentConfig {
    pub fn new(rank: usize, filter_support: FrequencySupport) -> Self {
        SegmentConfig {
            rank,
            lambda: DEFAULT_LAMBDA,
            filter_support,
            max_iters: 10,
            rel_tol: 1e-4,
            cg_iters: 100,
            cg_tol: 1e-8,
        }
    }

    fn validate(&self) -> Result<()> {
        check_rank(self.filter_support, self.rank)?;
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::contract(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.max_iters == 0 {
            return Err(Error::contract("max_iters must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub image: GrayImage,
    /// `γ(x)/Q` sampled at the pixels: mean 1, small on edges.
    pub edge_map: GrayImage,
    pub filter_support: FrequencySupport,
    /// Trailing filters `μ_q` of the final lift, one column each.
    pub trailing: DMatrix<Complex64>,
    /// Trailing energy of the lift before the first and after every update.
    pub energies: Vec<f64>,
    pub iterations: usize,
    /// Set when `max_iters` was reached before the change fell below `rel_tol`.
    pub not_converged: bool,
}

impl Segmentation {
    /// Fraction of pixels whose edge energy lies below [`EDGE_LEVEL`].
    pub fn edge_fraction(&self) -> f64 {
        let px = self.edge_map.pixels();
        px.iter().filter(|&&v| v < EDGE_LEVEL).count() as f64 / px.len() as f64
    }

    /// [`EDGE_LEVEL`] contour of the edge energy, traced on a grid at least
    /// four times finer than the image (capped at 1024).
    pub fn edge_contour(&self) -> Polyline {
        let side = self.edge_map.width().max(self.edge_map.height());
        let res = (4 * side).min(1024).max(side);
        contour_periodic(&self.edge_grid(res), EDGE_LEVEL)
    }

    /// `γ(x)/Q` on an `res × res` grid over the torus.
    pub fn edge_grid(&self, res: usize) -> GridValues<f64> {
        let values = edge_energy(&self.trailing, self.filter_support, res, res);
        GridValues {
            res,
            values: values.transpose().as_slice().to_vec(),
        }
    }
}

/// `μ_q` sampled on an `h × w` pixel grid: `E₁ · V_q · E₂ᵀ` with `V_q` the
/// filter taps arranged as a `k1 × k2` matrix.
fn filter_on_grid(taps: &[Complex64], support: FrequencySupport, h: usize, w: usize) -> DMatrix<Complex64> {
    let (lo1, lo2) = support.lower();
    let e1 = DMatrix::from_fn(h, support.k1(), |r, a| {
        Complex64::from_polar(1.0, 2.0 * PI * (lo1 + a as i64) as f64 * r as f64 / h as f64)
    });
    let e2 = DMatrix::from_fn(w, support.k2(), |c, b| {
        Complex64::from_polar(1.0, 2.0 * PI * (lo2 + b as i64) as f64 * c as f64 / w as f64)
    });
    let v = DMatrix::from_row_slice(support.k1(), support.k2(), taps);
    e1 * v * e2.transpose()
}

fn edge_energy(trailing: &DMatrix<Complex64>, support: FrequencySupport, h: usize, w: usize) -> DMatrix<f64> {
    let q = trailing.ncols();
    let mut acc = DMatrix::zeros(h, w);
    for col in trailing.column_iter() {
        let taps: Vec<Complex64> = col.iter().copied().collect();
        acc += filter_on_grid(&taps, support, h, w).map(|v| v.norm_sqr());
    }
    acc / q.max(1) as f64
}

/// Periodic forward difference along `axis` (0 = rows, 1 = columns).
fn diff(m: &DMatrix<f64>, axis: usize) -> DMatrix<f64> {
    let (h, w) = m.shape();
    DMatrix::from_fn(h, w, |r, c| match axis {
        0 => m[((r + 1) % h, c)] - m[(r, c)],
        _ => m[(r, (c + 1) % w)] - m[(r, c)],
    })
}

/// Adjoint of [`diff`].
fn diff_adjoint(m: &DMatrix<f64>, axis: usize) -> DMatrix<f64> {
    let (h, w) = m.shape();
    DMatrix::from_fn(h, w, |r, c| match axis {
        0 => m[((r + h - 1) % h, c)] - m[(r, c)],
        _ => m[(r, (c + w - 1) % w)] - m[(r, c)],
    })
}

/// Normal operator of the image update,
/// `f ↦ f + λ Σ_{ch,q} Re Dᵀ(conj(μ_q)·F⁻¹[M·F(μ_q·D f)])`, where `F⁻¹` is the
/// unnormalized inverse DFT and `M` the valid-region mask.
struct UpdateOperator {
    fft: Fft2,
    filters: Vec<DMatrix<Complex64>>,
    mask: DMatrix<f64>,
    lambda: f64,
}

impl UpdateOperator {
    fn penalty_gradient(&self, f: &DMatrix<f64>) -> DMatrix<f64> {
        let (h, w) = f.shape();
        let mut out = DMatrix::zeros(h, w);
        for axis in 0..2 {
            let g = diff(f, axis);
            let mut back = DMatrix::<Complex64>::zeros(h, w);
            for m in &self.filters {
                let mut z = m.zip_map(&g, |a, b| a * b);
                self.fft.run(&mut z, true);
                z.zip_apply(&self.mask, |a, b| *a *= b);
                self.fft.run(&mut z, false);
                back += m.zip_map(&z, |a, b| a.conj() * b);
            }
            out += diff_adjoint(&back.map(|v| v.re), axis);
        }
        out
    }

    fn apply(&self, f: &DMatrix<f64>) -> DMatrix<f64> {
        f + self.penalty_gradient(f) * self.lambda
    }
}

fn valid_mask(lift: &ToeplitzLift) -> DMatrix<f64> {
    let (h, w) = (lift.spectra.height, lift.spectra.width);
    let (lo, hi) = lift.valid_range();
    let mut mask = DMatrix::zeros(h, w);
    for l1 in lo[0]..=hi[0] {
        for l2 in lo[1]..=hi[1] {
            mask[(l1.rem_euclid(h as i64) as usize, l2.rem_euclid(w as i64) as usize)] = 1.0;
        }
    }
    mask
}

/// Conjugate gradients on the symmetric positive definite update operator,
/// warm-started at `x`.
fn conjugate_gradient(op: &UpdateOperator, b: &DMatrix<f64>, mut x: DMatrix<f64>, iters: usize, tol: f64) -> DMatrix<f64> {
    let mut r = b - op.apply(&x);
    let mut p = r.clone();
    let mut rr = r.norm_squared();
    let stop = tol * tol * b.norm_squared();
    for _ in 0..iters {
        if rr <= stop {
            break;
        }
        let ap = op.apply(&p);
        let pap = p.dot(&ap);
        if pap <= 0.0 || !pap.is_finite() {
            break;
        }
        let alpha = rr / pap;
        x += &p * alpha;
        r -= &ap * alpha;
        let rr_next = r.norm_squared();
        p = &r + &p * (rr_next / rr);
        rr = rr_next;
    }
    x
}

/// Alternates between the trailing subspace of the lift of `f` and a
/// quadratic update of `f` that penalizes the lift's energy on that subspace,
/// starting from `f = h`.
pub fn segment(h: &GrayImage, cfg: &SegmentConfig) -> Result<Segmentation> {
    cfg.validate()?;
    let support = cfg.filter_support;
    let q = support.len() - cfg.rank;
    let (height, width) = (h.height, h.width);
    let hm = h.to_matrix();
    let mut f = hm.clone();
    let mut energies = Vec::new();
    let mut iterations = 0;
    let mut not_converged = true;
    for _ in 0..cfg.max_iters {
        iterations += 1;
        let lift = ToeplitzLift::new(gradient_spectrum(&GrayImage::from_matrix(&f)?), support)?;
        let (values, vectors) = lift.gram_spectrum()?;
        if energies.is_empty() {
            energies.push(values[..q].iter().sum());
        }
        let filters = vectors
            .columns(0, q)
            .column_iter()
            .map(|col| {
                let taps: Vec<Complex64> = col.iter().copied().collect();
                filter_on_grid(&taps, support, height, width)
            })
            .collect();
        let op = UpdateOperator {
            fft: Fft2::new(height, width),
            filters,
            mask: valid_mask(&lift),
            lambda: cfg.lambda,
        };
        let next = conjugate_gradient(&op, &hm, f.clone(), cfg.cg_iters, cfg.cg_tol);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("image update produced non-finite pixels"));
        }
        let change = (&next - &f).norm() / f.norm().max(f64::MIN_POSITIVE);
        f = next;
        energies.push(trailing_energy(&GrayImage::from_matrix(&f)?, support, cfg.rank)?);
        if change < cfg.rel_tol {
            not_converged = false;
            break;
        }
    }
    let lift = ToeplitzLift::new(gradient_spectrum(&GrayImage::from_matrix(&f)?), support)?;
    let (_, vectors) = lift.gram_spectrum()?;
    let trailing = vectors.columns(0, q).into_owned();
    let edge = edge_energy(&trailing, support, height, width);
    Ok(Segmentation {
        image: GrayImage::from_matrix(&f)?,
        edge_map: GrayImage::from_matrix(&edge)?,
        filter_support: support,
        trailing,
        energies,
        iterations,
        not_converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(h: usize, w: usize, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrayImage::new(w, h, (0..w * h).map(|_| rng.random()).collect()).unwrap()
    }

    fn naive_dft(m: &DMatrix<f64>) -> DMatrix<Complex64> {
        let (h, w) = m.shape();
        DMatrix::from_fn(h, w, |u1, u2| {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..h {
                for c in 0..w {
                    let phase = -2.0 * PI * ((u1 * r) as f64 / h as f64 + (u2 * c) as f64 / w as f64);
                    acc += Complex64::from_polar(m[(r, c)], phase);
                }
            }
            acc
        })
    }

    #[test]
    fn image_validation() {
        assert!(GrayImage::new(8, 32, vec![0.0; 256]).is_err());
        assert!(GrayImage::new(16, 16, vec![0.0; 255]).is_err());
        assert!(GrayImage::new(16, 16, vec![f64::NAN; 256]).is_err());
        let img = GrayImage::from_fn(16, 20, |r, c| (r * 16 + c) as f64).unwrap();
        assert_eq!(img.at(2, 3), 35.0);
        let n = img.normalized();
        assert_eq!(n.at(0, 0), 0.0);
        assert_eq!(n.at(19, 15), 1.0);
    }

    #[test]
    fn constant_image_has_zero_gradient() {
        let img = GrayImage::from_fn(16, 16, |_, _| 0.7).unwrap();
        let g = gradient_spectrum(&img);
        for ch in &g.channels {
            assert!(ch.iter().all(|v| v.norm() < 1e-12));
        }
    }

    #[test]
    fn vertical_edge_gradient() {
        let (h, w) = (16, 32);
        let img = GrayImage::from_fn(w, h, |_, c| if c < w / 2 { 0.0 } else { 1.0 }).unwrap();
        let g = gradient_spectrum(&img);
        assert!(g.channels[0].iter().all(|v| v.norm() < 1e-12));
        assert!(g.channels[1].iter().any(|v| v.norm() > 1.0));
        let fft = Fft2::new(h, w);
        let mut space = g.channels[1].clone();
        fft.run(&mut space, false);
        for r in 0..h {
            for c in 0..w {
                let v = space[(r, c)] / (h * w) as f64;
                let expected = if c == w / 2 - 1 { 1.0 } else if c == w - 1 { -1.0 } else { 0.0 };
                assert!((v - Complex64::new(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_routes_agree() {
        let img = random_image(32, 32, 4);
        let g = gradient_spectrum(&img);
        let m = img.to_matrix();
        for axis in 0..2 {
            let direct = naive_dft(&diff(&m, axis));
            let worst = (direct - &g.channels[axis]).iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(worst <= 1e-10, "axis {axis}: {worst}");
        }
    }

    #[test]
    fn impulse_filter_crops_spectra() {
        let img = random_image(16, 20, 1);
        let s = FrequencySupport::new(3, 5).unwrap();
        let lift = ToeplitzLift::new(gradient_spectrum(&img), s).unwrap();
        let mut c = vec![Complex64::new(0.0, 0.0); s.len()];
        c[s.position((0, 0)).unwrap()] = Complex64::new(1.0, 0.0);
        let out = lift.apply(&c).unwrap();
        let (vh, vw) = lift.valid_shape();
        assert_eq!(out.len(), 2 * vh * vw);
        // centered crop: drop one row of frequencies on each side, two columns
        let mut expected = Vec::new();
        for ch in 0..2 {
            for l1 in -8 + 1..=7 - 1 {
                for l2 in -10 + 2..=9 - 2 {
                    let u = ((l1 as i64).rem_euclid(16) as usize, (l2 as i64).rem_euclid(20) as usize);
                    expected.push(lift.spectra.channels[ch][u]);
                }
            }
        }
        assert_eq!(out, expected);
    }

    #[test]
    fn constant_image_lift_vanishes() {
        let img = GrayImage::from_fn(16, 16, |_, _| 0.3).unwrap();
        let s = FrequencySupport::square(3).unwrap();
        let lift = ToeplitzLift::new(gradient_spectrum(&img), s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c: Vec<Complex64> = (0..9).map(|_| Complex64::new(rng.random(), rng.random())).collect();
        assert!(lift.apply(&c).unwrap().iter().all(|v| v.norm() < 1e-10));
    }

    #[test]
    fn lift_matches_explicit_matrix() {
        let img = random_image(16, 16, 9);
        let s = FrequencySupport::square(3).unwrap();
        let spectra = gradient_spectrum(&img);
        let lift = ToeplitzLift::new(spectra.clone(), s).unwrap();
        // T[(ch, l), k] = ĝ_ch[l − k], l over centered frequencies −7..=6 shrunk by the filter radius
        let mut rows = Vec::new();
        for ch in 0..2 {
            for l1 in -7i64..=6 {
                for l2 in -7i64..=6 {
                    let row: Vec<Complex64> = s
                        .iter()
                        .map(|k| spectra.channels[ch][((l1 - k.0).rem_euclid(16) as usize, (l2 - k.1).rem_euclid(16) as usize)])
                        .collect();
                    rows.push(row);
                }
            }
        }
        assert_eq!(rows.len(), lift.rows());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c: Vec<Complex64> = (0..9).map(|_| Complex64::new(rng.random(), rng.random())).collect();
        let out = lift.apply(&c).unwrap();
        for (row, v) in rows.iter().zip(&out) {
            let direct: Complex64 = row.iter().zip(&c).map(|(a, b)| a * b).sum();
            assert!((direct - v).norm() <= 1e-10);
        }
        let m = lift.matrix();
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(m[(i, j)], *v);
            }
        }
    }

    #[test]
    fn lift_is_linear() {
        let img = random_image(20, 16, 3);
        let s = FrequencySupport::new(3, 4).unwrap();
        let lift = ToeplitzLift::new(gradient_spectrum(&img), s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut draw = || -> Vec<Complex64> { (0..s.len()).map(|_| Complex64::new(rng.random(), rng.random())).collect() };
        let (c1, c2) = (draw(), draw());
        let (a, b) = (Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.5));
        let mixed: Vec<Complex64> = c1.iter().zip(&c2).map(|(x, y)| a * x + b * y).collect();
        let lhs = lift.apply(&mixed).unwrap();
        let (o1, o2) = (lift.apply(&c1).unwrap(), lift.apply(&c2).unwrap());
        let scale = o1.iter().chain(&o2).map(|v| v.norm()).fold(1.0, f64::max);
        for i in 0..lhs.len() {
            assert!((lhs[i] - (a * o1[i] + b * o2[i])).norm() <= 1e-12 * scale);
        }
        assert!(lift.apply(&c1[1..]).is_err());
    }

    #[test]
    fn update_operator_matches_lift_energy() {
        // fᵀ(A f − f)/λ = Σ_q ‖T(∇f̂) v_q‖²
        let img = random_image(16, 16, 7);
        let s = FrequencySupport::square(3).unwrap();
        let lift = ToeplitzLift::new(gradient_spectrum(&img), s).unwrap();
        let (_, vectors) = lift.gram_spectrum().unwrap();
        let mut direct = 0.0;
        let mut filters = Vec::new();
        for j in 0..4 {
            let taps: Vec<Complex64> = vectors.column(j).iter().copied().collect();
            direct += lift.apply(&taps).unwrap().iter().map(|v| v.norm_sqr()).sum::<f64>();
            filters.push(filter_on_grid(&taps, s, 16, 16));
        }
        let op = UpdateOperator {
            fft: Fft2::new(16, 16),
            filters,
            mask: valid_mask(&lift),
            lambda: 1.0,
        };
        let f = img.to_matrix();
        let via_fft = f.dot(&op.penalty_gradient(&f));
        assert!((via_fft - direct).abs() <= 1e-9 * direct.max(1.0), "{via_fft} vs {direct}");
    }

    #[test]
    fn rank_must_leave_trailing_space() {
        let img = random_image(16, 16, 0);
        let s = FrequencySupport::square(3).unwrap();
        assert!(segment(&img, &SegmentConfig::new(9, s)).is_err());
        assert!(trailing_energy(&img, s, 9).is_err());
    }
}
