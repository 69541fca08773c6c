//! Exponential feature maps and their Gram / kernel matrices.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::curve_model::{FrequencySupport, PointSet};
use crate::error::{Error, Result};

/// Below this `|sin(πΔ)|` the 1-D Dirichlet kernel is summed directly.
const DIRICHLET_SERIES_CUTOFF: f64 = 1e-9;

/// `Φ_Γ(X)`: column `i` is the feature map of point `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub support: FrequencySupport,
    pub data: DMatrix<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    Dirichlet(FrequencySupport),
    Gaussian { sigma: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub kind: KernelKind,
    pub data: DMatrix<Complex64>,
}

/// `φ_Γ(x)`: entry for frequency `k` is `exp(j2π kᵀx)`, in support order.
pub fn feature_map(x: [f64; 2], support: FrequencySupport) -> Vec<Complex64> {
    support
        .iter()
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * (k.0 as f64 * x[0] + k.1 as f64 * x[1])))
        .collect()
}

pub fn feature_matrix(pts: &PointSet, support: FrequencySupport) -> Result<FeatureMatrix> {
    pts.require_planar()?;
    let mut data = DMatrix::zeros(support.len(), pts.len());
    for (i, p) in pts.iter().enumerate() {
        let col = feature_map([p[0], p[1]], support);
        data.column_mut(i).copy_from_slice(&col);
    }
    Ok(FeatureMatrix { support, data })
}

/// `Σ_{k=lo}^{lo+len-1} exp(j2π k Δ)`.
fn dirichlet_1d(lo: i64, len: usize, delta: f64) -> Complex64 {
    let s = (PI * delta).sin();
    if s.abs() < DIRICHLET_SERIES_CUTOFF {
        return (0..len)
            .map(|t| Complex64::from_polar(1.0, 2.0 * PI * (lo + t as i64) as f64 * delta))
            .sum();
    }
    let ratio = (PI * len as f64 * delta).sin() / s;
    // phase of the geometric sum's midpoint
    let mid = 2.0 * lo as f64 + len as f64 - 1.0;
    Complex64::from_polar(ratio, PI * mid * delta)
}

/// `κ_Γ(Δ) = Σ_{k∈Γ} exp(j2π kᵀΔ)` as a product of 1-D Dirichlet kernels.
pub fn dirichlet_kernel(delta: [f64; 2], support: FrequencySupport) -> Complex64 {
    let lo = support.lower();
    dirichlet_1d(lo.0, support.k1(), delta[0]) * dirichlet_1d(lo.1, support.k2(), delta[1])
}

/// `K_Γ = Φ_Γ(X)ᴴ Φ_Γ(X)` in closed form: entry `(i,j) = κ_Γ(x_j − x_i)`.
pub fn dirichlet_gram(pts: &PointSet, support: FrequencySupport) -> Result<KernelMatrix> {
    pts.require_planar()?;
    let n = pts.len();
    let mut data = DMatrix::zeros(n, n);
    for i in 0..n {
        let xi = pts.point(i);
        for j in i..n {
            let xj = pts.point(j);
            let v = dirichlet_kernel([xj[0] - xi[0], xj[1] - xi[1]], support);
            data[(i, j)] = v;
            data[(j, i)] = v.conj();
        }
    }
    Ok(KernelMatrix {
        kind: KernelKind::Dirichlet(support),
        data,
    })
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::contract(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

/// Real Gaussian kernel `exp(−‖x_i − x_j‖² / 2σ²)` in any dimension.
pub fn gaussian_kernel_real(pts: &PointSet, sigma: f64) -> Result<DMatrix<f64>> {
    check_sigma(sigma)?;
    let n = pts.len();
    let scale = 1.0 / (2.0 * sigma * sigma);
    let mut k = DMatrix::from_element(n, n, 1.0);
    for i in 0..n {
        let xi = pts.point(i);
        for j in (i + 1)..n {
            let d2: f64 = xi
                .iter()
                .zip(pts.point(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let v = (-d2 * scale).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

pub fn gaussian_kernel(pts: &PointSet, sigma: f64) -> Result<KernelMatrix> {
    let k = gaussian_kernel_real(pts, sigma)?;
    Ok(KernelMatrix {
        kind: KernelKind::Gaussian { sigma },
        data: k.map(|v| Complex64::new(v, 0.0)),
    })
}

/// Number of Fourier coefficients a Gaussian of width `sigma` effectively
/// occupies in `n` dimensions: `round((6/(πσ))ⁿ)`.
pub fn effective_bandwidth(sigma: f64, n: u32) -> Result<u64> {
    check_sigma(sigma)?;
    Ok((6.0 / (PI * sigma)).powi(n as i32).round() as u64)
}
