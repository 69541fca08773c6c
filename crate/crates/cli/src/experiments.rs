//! Figure-level experiments shared by the CLI and the test suites.

use std::fmt::Write as _;

use rayon::prelude::*;

use curveband::curve_model::{
    extract_zero_level_set, random_nonempty_curve, sample_curve, FrequencySupport, Polyline,
    SamplingStrategy, TrigPolynomial,
};
use curveband::recovery::{chamfer_distance, recover_known_support};
use curveband::Result;

/// Grid on which recovered and true curves are compared.
pub const COMPARISON_GRID: usize = 256;
/// Grid whose polyline the samples are drawn from.
pub const SAMPLING_GRID: usize = 512;

/// Chamfer distance at or below which a recovery counts as perfect.
pub fn success_threshold() -> f64 {
    3.0 / COMPARISON_GRID as f64
}

/// Mixes `parts` into `base` with the splitmix64 finalizer, giving
/// independent per-trial seeds that do not depend on scheduling.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut z = base;
    for &p in parts {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(p);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

/// A seeded random curve with its sampling and comparison polylines.
#[derive(Debug, Clone)]
pub struct TruthCurve {
    pub seed: u64,
    pub poly: TrigPolynomial,
    pub sampling_line: Polyline,
    pub comparison_line: Polyline,
}

impl TruthCurve {
    pub fn random(support: FrequencySupport, seed: u64) -> Result<Self> {
        let (seed, poly, sampling_line) = random_nonempty_curve(support, seed, SAMPLING_GRID)?;
        let comparison_line = extract_zero_level_set(&poly, COMPARISON_GRID)?;
        Ok(TruthCurve {
            seed,
            poly,
            sampling_line,
            comparison_line,
        })
    }

    /// Chamfer distance between the truth and the curve recovered with the
    /// true support from `n` samples; `+∞` when nothing is recovered.
    pub fn known_support_error(&self, n: usize, strategy: SamplingStrategy, seed: u64) -> Result<f64> {
        let pts = sample_curve(&self.sampling_line, n, strategy, seed)?;
        if pts.is_empty() {
            return Ok(f64::INFINITY);
        }
        let rec = recover_known_support(&pts, self.poly.support(), COMPARISON_GRID)?;
        if rec.is_empty() {
            return Ok(f64::INFINITY);
        }
        chamfer_distance(&self.comparison_line, &rec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCell {
    pub k: usize,
    pub n: usize,
    pub trials: usize,
    pub successes: usize,
    pub median_chamfer: f64,
}

impl PhaseCell {
    pub fn frequency(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Success frequency of known-support recovery of random `k×k` curves over
/// a grid of sample counts. Each `(k, trial)` draws one curve that is reused
/// for every `N`; samples are drawn independently per cell.
pub fn phase_transition(ks: &[usize], ns: &[usize], trials: usize, seed: u64) -> Result<Vec<PhaseCell>> {
    let jobs: Vec<(usize, usize)> = ks
        .iter()
        .flat_map(|&k| (0..trials).map(move |t| (k, t)))
        .collect();
    let errors: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(k, t)| -> Result<Vec<f64>> {
            let support = FrequencySupport::square(k)?;
            let truth = TruthCurve::random(support, derive_seed(seed, &[k as u64, t as u64]))?;
            ns.iter()
                .map(|&n| {
                    let s = derive_seed(seed, &[k as u64, t as u64, n as u64, 1]);
                    truth.known_support_error(n, SamplingStrategy::UniformArclength, s)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let threshold = success_threshold();
    let mut cells = Vec::new();
    for (ki, &k) in ks.iter().enumerate() {
        for (ni, &n) in ns.iter().enumerate() {
            let errs: Vec<f64> = (0..trials).map(|t| errors[ki * trials + t][ni]).collect();
            cells.push(PhaseCell {
                k,
                n,
                trials,
                successes: errs.iter().filter(|&&e| e <= threshold).count(),
                median_chamfer: if errs.is_empty() { f64::NAN } else { median(errs) },
            });
        }
    }
    Ok(cells)
}

pub fn phase_csv(cells: &[PhaseCell]) -> String {
    let mut out = String::from("k,N,trials,successes,frequency,median_chamfer\n");
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            c.k,
            c.n,
            c.trials,
            c.successes,
            c.frequency(),
            c.median_chamfer
        );
    }
    out
}

/// Heatmap of success frequency (white = 1) with guide curves at
/// `N = k²` (blue) and `N = (2k)²` (red).
pub fn phase_svg(cells: &[PhaseCell], ks: &[usize], ns: &[usize]) -> String {
    let (left, top, cw, ch) = (60.0, 20.0, 40.0, 40.0);
    let width = left + cw * ns.len() as f64 + 20.0;
    let height = top + ch * ks.len() as f64 + 50.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    for c in cells {
        let (Some(ki), Some(ni)) = (ks.iter().position(|&k| k == c.k), ns.iter().position(|&n| n == c.n)) else {
            continue;
        };
        let v = (255.0 * c.frequency()).round();
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{cw}" height="{ch}" fill="rgb({v},{v},{v})" stroke="gray" stroke-width="0.5"/>"#,
            left + cw * ni as f64,
            top + ch * ki as f64
        );
    }
    for (ki, k) in ks.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">k={k}</text>"#,
            left - 6.0,
            top + ch * (ki as f64 + 0.5) + 4.0
        );
    }
    for (ni, n) in ns.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{n}</text>"#,
            left + cw * (ni as f64 + 0.5),
            top + ch * ks.len() as f64 + 15.0
        );
    }
    // position of a sample count on the (piecewise linear) column axis
    let x_of = |n: f64| -> f64 {
        let centres: Vec<f64> = (0..ns.len()).map(|i| left + cw * (i as f64 + 0.5)).collect();
        if n <= ns[0] as f64 {
            return centres[0];
        }
        for i in 1..ns.len() {
            if n <= ns[i] as f64 {
                let t = (n - ns[i - 1] as f64) / (ns[i] - ns[i - 1]) as f64;
                return centres[i - 1] + t * (centres[i] - centres[i - 1]);
            }
        }
        centres[ns.len() - 1]
    };
    if !ns.is_empty() {
        for (colour, guide) in [("blue", 1usize), ("red", 4usize)] {
            let pts: Vec<String> = ks
                .iter()
                .enumerate()
                .map(|(ki, &k)| format!("{:.2},{:.2}", x_of((guide * k * k) as f64), top + ch * (ki as f64 + 0.5)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
                pts.join(" ")
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">N (blue: k1·k2, red: (k1+k2)²)</text>"#,
        width / 2.0,
        height - 10.0
    );
    out.push_str("</svg>\n");
    out
}
