//! File formats: coefficient JSON, point and polyline CSV, polyline SVG,
//! rank reports, IRLS traces and config files, and binary PGM images.
//!
//! Floating-point values are written with Rust's shortest round-trip
//! formatting, so reading a written file reproduces the values exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curve_model::{Component, FrequencySupport, PointSet, Polyline, TrigPolynomial};
use crate::denoise::{DenoiseTrace, IrlsConfig};
use crate::error::{Error, Result};
use crate::recovery::NullspaceBasis;
use crate::segmentation::GrayImage;

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_error(context: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        context: context.to_string(),
        line,
        message: message.into(),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CoefficientFile {
    k1: usize,
    k2: usize,
    hermitian: bool,
    coeffs: Vec<[f64; 2]>,
}

impl CoefficientFile {
    fn from_poly(p: &TrigPolynomial) -> Self {
        CoefficientFile {
            k1: p.support().k1(),
            k2: p.support().k2(),
            hermitian: p.is_hermitian(),
            coeffs: p.coeffs().iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    fn into_poly(self) -> Result<TrigPolynomial> {
        let support = FrequencySupport::new(self.k1, self.k2)?;
        let coeffs = self.coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect();
        TrigPolynomial::new(support, coeffs, self.hermitian)
    }
}

pub fn coefficients_to_json(p: &TrigPolynomial) -> Result<String> {
    Ok(serde_json::to_string_pretty(&CoefficientFile::from_poly(p))?)
}

pub fn coefficients_from_json(text: &str) -> Result<TrigPolynomial> {
    serde_json::from_str::<CoefficientFile>(text)?.into_poly()
}

/// The basis as a JSON list of coefficient objects.
pub fn nullspace_to_json(basis: &NullspaceBasis) -> Result<String> {
    let files: Vec<CoefficientFile> = basis.polynomials().iter().map(CoefficientFile::from_poly).collect();
    Ok(serde_json::to_string_pretty(&files)?)
}

pub fn polynomials_from_json(text: &str) -> Result<Vec<TrigPolynomial>> {
    serde_json::from_str::<Vec<CoefficientFile>>(text)?
        .into_iter()
        .map(CoefficientFile::into_poly)
        .collect()
}

pub fn points_to_csv(pts: &PointSet) -> String {
    let mut out = String::new();
    for p in pts.iter() {
        let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn parse_row(context: &str, line_no: usize, line: &str) -> Result<Vec<f64>> {
    line.split(',')
        .map(|field| {
            let field = field.trim();
            field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_error(context, line_no, format!("not a finite number: {field:?}")))
        })
        .collect()
}

/// Headerless CSV, one point per line; blank lines are skipped.
pub fn points_from_csv(text: &str) -> Result<PointSet> {
    let mut dim = None;
    let mut coords = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_row("points", i + 1, line)?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(parse_error("points", i + 1, format!("expected {d} columns, found {}", row.len())))
            }
            _ => {}
        }
        coords.extend(row);
    }
    PointSet::from_flat(dim.unwrap_or(2), coords)
}

pub fn read_points(path: &Path) -> Result<PointSet> {
    points_from_csv(&read_text(path)?).map_err(|e| with_path(e, path))
}

pub fn write_points(path: &Path, pts: &PointSet) -> Result<()> {
    write_text(path, &points_to_csv(pts))
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Parse { line, message, .. } => Error::Parse {
            context: path.display().to_string(),
            line,
            message,
        },
        other => other,
    }
}

/// Rows `component, x1, x2`; all components are written as closed.
pub fn polyline_to_csv(line: &Polyline) -> String {
    let mut out = String::new();
    for (id, c) in line.components.iter().enumerate() {
        for v in &c.vertices {
            let _ = writeln!(out, "{id},{},{}", v[0], v[1]);
        }
    }
    out
}

pub fn polyline_from_csv(text: &str) -> Result<Polyline> {
    let mut components: Vec<Component> = Vec::new();
    let mut last_id = None;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_row("polyline", i + 1, line)?;
        if row.len() != 3 || row[0] < 0.0 || row[0].fract() != 0.0 {
            return Err(parse_error("polyline", i + 1, "expected `component, x1, x2`"));
        }
        let id = row[0] as usize;
        if last_id != Some(id) {
            components.push(Component {
                vertices: Vec::new(),
                closed: true,
            });
            last_id = Some(id);
        }
        components.last_mut().expect("pushed above").vertices.push([row[1], row[2]]);
    }
    Ok(Polyline::new(components))
}

/// Splits components where consecutive vertices wrap around the torus.
fn drawable_runs(line: &Polyline) -> Vec<(Vec<[f64; 2]>, bool)> {
    let mut runs = Vec::new();
    for c in &line.components {
        let n = c.vertices.len();
        if n == 0 {
            continue;
        }
        let jumps = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).abs() > 0.5 || (a[1] - b[1]).abs() > 0.5;
        let breaks: Vec<usize> = (0..n)
            .filter(|&i| jumps(c.vertices[i], c.vertices[(i + 1) % n]) && (c.closed || i + 1 < n))
            .collect();
        if breaks.is_empty() {
            runs.push((c.vertices.clone(), c.closed));
            continue;
        }
        // start each run right after a wrap
        for (bi, &b) in breaks.iter().enumerate() {
            let end = breaks[(bi + 1) % breaks.len()];
            let mut run = Vec::new();
            let mut i = (b + 1) % n;
            loop {
                run.push(c.vertices[i]);
                if i == end {
                    break;
                }
                i = (i + 1) % n;
            }
            runs.push((run, false));
        }
    }
    runs
}

fn svg_document(line: &Polyline, width: f64, height: f64, map: impl Fn([f64; 2]) -> [f64; 2], stroke: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" width="512" height="{}">"#,
        (512.0 * height / width).round()
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#);
    for (run, closed) in drawable_runs(line) {
        let mut d = String::new();
        for (i, v) in run.iter().enumerate() {
            let p = map(*v);
            let _ = write!(d, "{}{:.6},{:.6} ", if i == 0 { "M" } else { "L" }, p[0], p[1]);
        }
        if closed {
            d.push('Z');
        }
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="black" stroke-width="{stroke}"/>"#,
            d.trim_end()
        );
    }
    out.push_str("</svg>\n");
    out
}

/// SVG with a `0 0 1 1` viewBox; `x1` runs left to right, `x2` top to bottom.
pub fn polyline_to_svg(line: &Polyline) -> String {
    svg_document(line, 1.0, 1.0, |v| v, 0.003)
}

/// SVG in pixel coordinates of a `width × height` image, where `x1` follows
/// image rows and `x2` image columns.
pub fn edges_to_svg(line: &Polyline, width: usize, height: usize) -> String {
    let (w, h) = (width as f64, height as f64);
    svg_document(line, w, h, |v| [v[1] * w, v[0] * h], 0.005 * w.max(h))
}

/// One row of a rank report; `lambda` and `bound` are left empty when the
/// true support is unknown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankRow {
    pub gamma: FrequencySupport,
    pub lambda: Option<FrequencySupport>,
    pub n: usize,
    pub measured_rank: usize,
    pub bound: Option<usize>,
}

pub fn rank_report_csv(rows: &[RankRow]) -> String {
    let mut out = String::from("gamma,lambda,N,measured_rank,bound\n");
    for r in rows {
        let lambda = r.lambda.map(|l| l.to_string()).unwrap_or_default();
        let bound = r.bound.map(|b| b.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{lambda},{},{},{bound}", r.gamma, r.n, r.measured_rank);
    }
    out
}

pub fn trace_to_csv(trace: &DenoiseTrace) -> String {
    let mut out = String::from("iter,cost,gamma,rel_change\n");
    for r in &trace.records {
        let _ = writeln!(out, "{},{},{},{}", r.iter, r.cost, r.gamma, r.rel_change);
    }
    out
}

pub fn config_to_text(cfg: &IrlsConfig) -> String {
    format!(
        "lambda = {}\nsigma = {}\ngamma0 = {}\neta = {}\nmax_iters = {}\nrel_tol = {}\n",
        cfg.lambda, cfg.sigma, cfg.gamma0, cfg.eta, cfg.max_iters, cfg.rel_tol
    )
}

/// `key = value` lines over the [`IrlsConfig`] fields; missing keys keep
/// their defaults, `#` starts a comment.
pub fn config_from_text(text: &str) -> Result<IrlsConfig> {
    let mut cfg = IrlsConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_error("config", line_no, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let real = || {
            value
                .parse::<f64>()
                .map_err(|_| parse_error("config", line_no, format!("{key}: not a number: {value:?}")))
        };
        match key {
            "lambda" => cfg.lambda = real()?,
            "sigma" => cfg.sigma = real()?,
            "gamma0" => cfg.gamma0 = real()?,
            "eta" => cfg.eta = real()?,
            "rel_tol" => cfg.rel_tol = real()?,
            "max_iters" => {
                cfg.max_iters = value
                    .parse()
                    .map_err(|_| parse_error("config", line_no, format!("max_iters: not an integer: {value:?}")))?
            }
            _ => return Err(parse_error("config", line_no, format!("unknown key {key:?}"))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<IrlsConfig> {
    config_from_text(&read_text(path)?).map_err(|e| with_path(e, path))
}

/// Decodes a binary 8-bit PGM, scaling samples by `1/maxval`.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0;
    let mut header = Vec::new();
    while header.len() < 4 {
        // skip whitespace and comments
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(parse_error("pgm", 1, "truncated header"));
        }
        header.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if header[0] != "P5" {
        return Err(parse_error("pgm", 1, format!("expected magic P5, found {:?}", header[0])));
    }
    let num = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| parse_error("pgm", 1, format!("bad {what}: {s:?}")))
    };
    let (width, height, maxval) = (num(&header[1], "width")?, num(&header[2], "height")?, num(&header[3], "maxval")?);
    if maxval == 0 || maxval > 255 {
        return Err(parse_error("pgm", 1, format!("only 8-bit images are supported, maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let raster = bytes.get(pos..pos + width * height).ok_or_else(|| {
        parse_error("pgm", 1, format!("raster too short for {width}x{height}"))
    })?;
    let pixels = raster.iter().map(|&b| b as f64 / maxval as f64).collect();
    GrayImage::new(width, height, pixels)
}

/// Encodes with values clamped to `[0, 1]` and quantized to 8 bits.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.pixels().iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes).map_err(|e| with_path(e, path))
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}
