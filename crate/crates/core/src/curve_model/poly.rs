use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::points::PointSet;
use super::support::{Freq, FrequencySupport};
use crate::error::{Error, Result};

/// Tolerance for the hermitian-symmetry check, relative to the coefficient norm.
const HERMITIAN_TOL: f64 = 1e-12;

/// A trigonometric polynomial `ψ(x) = Σ_k c_k exp(j2π kᵀx)` on `[0,1)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    support: FrequencySupport,
    coeffs: Vec<Complex64>,
    hermitian: bool,
}

/// Values of a function sampled on the periodic grid `(i/res, j/res)`, stored
/// row-major with `i` (the first coordinate) as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct GridValues<T> {
    pub res: usize,
    pub values: Vec<T>,
}

impl<T: Copy> GridValues<T> {
    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[(i % self.res) * self.res + (j % self.res)]
    }
}

fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// `exp(j2π k x)` for `k` in `lo..lo+len`.
fn exponentials(lo: i64, len: usize, x: f64) -> Vec<Complex64> {
    (0..len)
        .map(|t| cis(2.0 * PI * (lo + t as i64) as f64 * x))
        .collect()
}

impl TrigPolynomial {
    /// Builds a polynomial; with `hermitian = true` the coefficients must
    /// satisfy `c[-k] = conj(c[k])` on an odd support.
    pub fn new(support: FrequencySupport, coeffs: Vec<Complex64>, hermitian: bool) -> Result<Self> {
        if coeffs.len() != support.len() {
            return Err(Error::contract(format!(
                "support {support} needs {} coefficients, got {}",
                support.len(),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::contract("non-finite coefficient"));
        }
        let poly = TrigPolynomial {
            support,
            coeffs,
            hermitian,
        };
        if hermitian {
            if !support.is_odd() {
                return Err(Error::contract(format!(
                    "hermitian polynomial needs an odd support, got {support}"
                )));
            }
            let asym = poly.hermitian_defect();
            if asym > HERMITIAN_TOL * poly.norm().max(f64::MIN_POSITIVE) {
                return Err(Error::contract(format!(
                    "coefficients are not hermitian symmetric (defect {asym:e})"
                )));
            }
        }
        Ok(poly)
    }

    /// The polynomial `ψ ≡ value` on a `1×1` support.
    pub fn constant(value: Complex64) -> Self {
        TrigPolynomial {
            support: FrequencySupport::square(1).expect("1x1 support"),
            coeffs: vec![value],
            hermitian: value.im == 0.0,
        }
    }

    pub fn support(&self) -> FrequencySupport {
        self.support
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn coeff(&self, k: Freq) -> Complex64 {
        self.support
            .position(k)
            .map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::new(0.0, 0.0))
    }

    /// `max_k |c[-k] - conj(c[k])|`; infinite when the support is not symmetric.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.support.is_odd() {
            return f64::INFINITY;
        }
        let n = self.coeffs.len();
        (0..n)
            .map(|i| (self.coeffs[n - 1 - i] - self.coeffs[i].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Evaluates `ψ` at a single point.
    pub fn value_at(&self, x: [f64; 2]) -> Complex64 {
        let (lo1, lo2) = self.support.lower();
        let (k1, k2) = (self.support.k1(), self.support.k2());
        let e1 = exponentials(lo1, k1, x[0]);
        let e2 = exponentials(lo2, k2, x[1]);
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, row) in self.coeffs.chunks_exact(k2).enumerate() {
            let inner: Complex64 = row.iter().zip(&e2).map(|(c, e)| c * e).sum();
            acc += e1[a] * inner;
        }
        acc
    }

    /// Gradient `∇ψ(x)` (complex-valued).
    pub fn gradient_at(&self, x: [f64; 2]) -> [Complex64; 2] {
        let mut g = [Complex64::new(0.0, 0.0); 2];
        for (i, k) in self.support.iter().enumerate() {
            let term = self.coeffs[i] * cis(2.0 * PI * (k.0 as f64 * x[0] + k.1 as f64 * x[1]));
            let jw = Complex64::new(0.0, 2.0 * PI);
            g[0] += jw * k.0 as f64 * term;
            g[1] += jw * k.1 as f64 * term;
        }
        g
    }

    /// Evaluates `ψ` at every point of a planar set.
    pub fn evaluate(&self, pts: &PointSet) -> Result<Vec<Complex64>> {
        pts.require_planar()?;
        Ok(pts.iter().map(|p| self.value_at([p[0], p[1]])).collect())
    }

    /// Evaluates `ψ` on the `res × res` periodic grid.
    pub fn evaluate_grid(&self, res: usize) -> GridValues<Complex64> {
        let (lo1, lo2) = self.support.lower();
        let (k1, k2) = (self.support.k1(), self.support.k2());
        // inner[a][j] = Σ_b c[a,b] exp(j2π b j/res)
        let e2: Vec<Vec<Complex64>> = (0..res)
            .map(|j| exponentials(lo2, k2, j as f64 / res as f64))
            .collect();
        let mut inner = vec![Complex64::new(0.0, 0.0); k1 * res];
        for (a, row) in self.coeffs.chunks_exact(k2).enumerate() {
            for j in 0..res {
                inner[a * res + j] = row.iter().zip(&e2[j]).map(|(c, e)| c * e).sum();
            }
        }
        let mut values = vec![Complex64::new(0.0, 0.0); res * res];
        for i in 0..res {
            let e1 = exponentials(lo1, k1, i as f64 / res as f64);
            let out = &mut values[i * res..(i + 1) * res];
            for (a, e) in e1.iter().enumerate() {
                let src = &inner[a * res..(a + 1) * res];
                for (o, s) in out.iter_mut().zip(src) {
                    *o += e * s;
                }
            }
        }
        GridValues { res, values }
    }

    /// Product polynomial; its coefficients are the full 2-D convolution.
    ///
    /// Two even sizes along the same dimension would produce an off-center
    /// support, which is rejected.
    pub fn multiply(&self, other: &TrigPolynomial) -> Result<TrigPolynomial> {
        if self.is_zero() || other.is_zero() {
            return Err(Error::contract("multiply needs nonzero factors"));
        }
        let (a, b) = (self.support, other.support);
        if (a.k1() % 2 == 0 && b.k1() % 2 == 0) || (a.k2() % 2 == 0 && b.k2() % 2 == 0) {
            return Err(Error::contract(format!(
                "product of {a} and {b} is not centered"
            )));
        }
        let out = FrequencySupport::new(a.k1() + b.k1() - 1, a.k2() + b.k2() - 1)?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); out.len()];
        for (i, ka) in a.iter().enumerate() {
            for (j, kb) in b.iter().enumerate() {
                let pos = out
                    .position((ka.0 + kb.0, ka.1 + kb.1))
                    .expect("product index inside the product support");
                coeffs[pos] += self.coeffs[i] * other.coeffs[j];
            }
        }
        Ok(TrigPolynomial {
            support: out,
            coeffs,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    /// Rescales to unit ℓ₂ norm.
    pub fn normalized(&self) -> TrigPolynomial {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        let mut p = self.clone();
        p.coeffs.iter_mut().for_each(|c| *c /= n);
        p
    }

    /// Multiplies by the unit-modulus scalar that makes the largest-magnitude
    /// coefficient real and positive (first such coefficient on ties).
    pub fn phase_normalized(&self) -> TrigPolynomial {
        let mut best = 0;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.norm() > self.coeffs[best].norm() * (1.0 + 1e-12) {
                best = i;
            }
        }
        let pivot = self.coeffs[best];
        if pivot.norm() == 0.0 {
            return self.clone();
        }
        let rot = pivot.conj() / pivot.norm();
        let mut p = self.clone();
        p.coeffs.iter_mut().for_each(|c| *c *= rot);
        p
    }

    /// Closest real-valued (hermitian) polynomial after removing a global
    /// phase: for `ĉ = e^{jθ}c` with hermitian `c`, recovers `±c`.
    pub fn to_real(&self) -> Result<TrigPolynomial> {
        if !self.support.is_odd() {
            return Err(Error::contract(format!(
                "real projection needs an odd support, got {}",
                self.support
            )));
        }
        let n = self.coeffs.len();
        // Σ ĉ_k ĉ_{-k} = e^{2jθ} Σ |c_k|²
        let s: Complex64 = (0..n).map(|i| self.coeffs[i] * self.coeffs[n - 1 - i]).sum();
        let rot = if s.norm() > 0.0 {
            cis(-0.5 * s.arg())
        } else {
            Complex64::new(1.0, 0.0)
        };
        let rotated: Vec<Complex64> = self.coeffs.iter().map(|c| c * rot).collect();
        let coeffs = (0..n)
            .map(|i| 0.5 * (rotated[i] + rotated[n - 1 - i].conj()))
            .collect();
        Ok(TrigPolynomial {
            support: self.support,
            coeffs,
            hermitian: true,
        })
    }
}

/// Random hermitian polynomial on an odd support, unit ℓ₂ norm.
///
/// Coefficients on the first half of the enumeration are i.i.d. standard
/// complex normal, the second half mirrors them by conjugation and the
/// center coefficient is real. The zero set may be empty.
pub fn random_curve(support: FrequencySupport, seed: u64) -> Result<TrigPolynomial> {
    if !support.is_odd() {
        return Err(Error::contract(format!(
            "random_curve needs odd support sizes, got {support}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = support.len();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n / 2 {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        coeffs[i] = Complex64::new(re, im);
        coeffs[n - 1 - i] = coeffs[i].conj();
    }
    let re: f64 = StandardNormal.sample(&mut rng);
    coeffs[n / 2] = Complex64::new(re, 0.0);
    let poly = TrigPolynomial {
        support,
        coeffs,
        hermitian: true,
    };
    Ok(poly.normalized())
}
