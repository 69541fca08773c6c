//! Marching squares on a periodic grid.
//!
//! Grid node `(i, j)` sits at `(i/res, j/res)`. Every grid edge is shared by
//! exactly two cells, so each crossing vertex has exactly two neighbours and
//! the traced components are always closed loops.

use std::collections::HashMap;

use super::poly::{GridValues, TrigPolynomial};
use super::polyline::{wrap_point, Component, Polyline};
use crate::error::{Error, Result};

pub const DEFAULT_GRID_RES: usize = 512;
pub const MIN_GRID_RES: usize = 16;

/// Edge identifiers: `2·node` for the edge along the first axis starting at
/// `node`, `2·node + 1` for the edge along the second axis.
fn edge_x1(res: usize, i: usize, j: usize) -> usize {
    2 * ((i % res) * res + (j % res))
}

fn edge_x2(res: usize, i: usize, j: usize) -> usize {
    2 * ((i % res) * res + (j % res)) + 1
}

/// Traces the `level` isocontour of a periodic real grid.
///
/// Nodes with value `>= level` count as above; crossings are placed by
/// linear interpolation along cell edges; saddle cells are resolved with the
/// mean of the four corners.
pub fn contour_periodic(grid: &GridValues<f64>, level: f64) -> Polyline {
    let res = grid.res;
    let above = |i: usize, j: usize| grid.at(i, j) >= level;

    let mut crossings: HashMap<usize, [f64; 2]> = HashMap::new();
    let mut links: HashMap<usize, Vec<usize>> = HashMap::new();

    let mut crossing = |id: usize, a: (usize, usize), b: (usize, usize)| -> usize {
        crossings.entry(id).or_insert_with(|| {
            let va = grid.at(a.0, a.1);
            let vb = grid.at(b.0, b.1);
            let t = (level - va) / (vb - va);
            let p = [
                (a.0 as f64 + t * (b.0 as f64 - a.0 as f64)) / res as f64,
                (a.1 as f64 + t * (b.1 as f64 - a.1 as f64)) / res as f64,
            ];
            wrap_point(p)
        });
        id
    };

    for i in 0..res {
        for j in 0..res {
            let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let s = c.map(|(a, b)| above(a, b));
            let edges = [
                (s[0] != s[1], edge_x1(res, i, j), c[0], c[1]),
                (s[1] != s[2], edge_x2(res, i + 1, j), c[1], c[2]),
                (s[3] != s[2], edge_x1(res, i, j + 1), c[3], c[2]),
                (s[0] != s[3], edge_x2(res, i, j), c[0], c[3]),
            ];
            let active: Vec<usize> = (0..4).filter(|&e| edges[e].0).collect();
            let pairs: Vec<(usize, usize)> = match active.len() {
                0 => continue,
                2 => vec![(active[0], active[1])],
                4 => {
                    let centre = c.iter().map(|&(a, b)| grid.at(a, b)).sum::<f64>() / 4.0;
                    if (centre >= level) == s[0] {
                        vec![(0, 1), (2, 3)]
                    } else {
                        vec![(3, 0), (1, 2)]
                    }
                }
                _ => unreachable!("a cell has an even number of crossing edges"),
            };
            for (ea, eb) in pairs {
                let ida = crossing(edges[ea].1, edges[ea].2, edges[ea].3);
                let idb = crossing(edges[eb].1, edges[eb].2, edges[eb].3);
                links.entry(ida).or_default().push(idb);
                links.entry(idb).or_default().push(ida);
            }
        }
    }

    let mut starts: Vec<usize> = links.keys().copied().collect();
    starts.sort_unstable();
    let mut visited = std::collections::HashSet::new();
    let mut components = Vec::new();
    for start in starts {
        if visited.contains(&start) {
            continue;
        }
        let mut ids = vec![start];
        visited.insert(start);
        let mut prev = start;
        let mut cur = links[&start][0];
        while cur != start {
            visited.insert(cur);
            ids.push(cur);
            let next = links[&cur]
                .iter()
                .copied()
                .find(|&n| n != prev)
                .unwrap_or(prev);
            prev = cur;
            cur = next;
        }
        let mut vertices: Vec<[f64; 2]> = Vec::with_capacity(ids.len());
        for id in ids {
            let p = crossings[&id];
            if vertices.last() != Some(&p) {
                vertices.push(p);
            }
        }
        while vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if !vertices.is_empty() {
            components.push(Component {
                vertices,
                closed: true,
            });
        }
    }
    Polyline { components }
}

/// Zero level set of `Re ψ` on a `grid_res × grid_res` periodic grid.
pub fn extract_zero_level_set(poly: &TrigPolynomial, grid_res: usize) -> Result<Polyline> {
    if grid_res < MIN_GRID_RES {
        return Err(Error::contract(format!(
            "grid_res must be at least {MIN_GRID_RES}, got {grid_res}"
        )));
    }
    if !poly.is_hermitian() {
        return Err(Error::contract(
            "zero level set extraction needs a hermitian (real-valued) polynomial",
        ));
    }
    let g = poly.evaluate_grid(grid_res);
    let real = GridValues {
        res: grid_res,
        values: g.values.iter().map(|v| v.re).collect(),
    };
    Ok(contour_periodic(&real, 0.0))
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;
    use crate::curve_model::poly::random_curve;
    use crate::curve_model::support::FrequencySupport;

    fn cos_x1() -> TrigPolynomial {
        let s = FrequencySupport::new(3, 1).unwrap();
        let h = Complex64::new(0.5, 0.0);
        TrigPolynomial::new(s, vec![h, Complex64::new(0.0, 0.0), h], true).unwrap()
    }

    #[test]
    fn constant_has_no_zero_set() {
        let p = TrigPolynomial::constant(Complex64::new(1.0, 0.0));
        assert!(extract_zero_level_set(&p, 32).unwrap().is_empty());
    }

    #[test]
    fn coarse_grid_rejected() {
        assert!(extract_zero_level_set(&cos_x1(), 8).is_err());
    }

    #[test]
    fn cosine_gives_two_vertical_lines() {
        let res = 64;
        let line = extract_zero_level_set(&cos_x1(), res).unwrap();
        assert_eq!(line.components.len(), 2);
        for v in line.vertices() {
            let d = (v[0] - 0.25).abs().min((v[0] - 0.75).abs());
            assert!(d <= 1.0 / res as f64, "vertex {v:?}");
        }
    }

    #[test]
    fn components_are_closed_and_vertices_distinct() {
        let p = random_curve(FrequencySupport::square(5).unwrap(), 17).unwrap();
        let line = extract_zero_level_set(&p, 128).unwrap();
        assert!(!line.is_empty());
        for c in &line.components {
            assert!(c.closed);
            let n = c.vertices.len();
            for k in 0..n {
                assert_ne!(c.vertices[k], c.vertices[(k + 1) % n]);
            }
            // closed loop: every step is at most one cell diagonal
            for s in line.segments() {
                assert!(s.length() <= 2f64.sqrt() / 128.0 + 1e-12);
            }
        }
    }

    #[test]
    fn vertices_nearly_vanish() {
        let res = 128;
        let p = random_curve(FrequencySupport::square(3).unwrap(), 4).unwrap();
        let line = extract_zero_level_set(&p, res).unwrap();
        let grid = p.evaluate_grid(res);
        // max |∇ψ| over the grid, from the analytic gradient
        let mut gmax: f64 = 0.0;
        for i in 0..res {
            for j in 0..res {
                let g = p.gradient_at([i as f64 / res as f64, j as f64 / res as f64]);
                gmax = gmax.max(g[0].norm().hypot(g[1].norm()));
            }
        }
        assert!(!grid.values.is_empty());
        for v in line.vertices() {
            let r = p.value_at(v).norm();
            assert!(r < 10.0 * gmax / res as f64, "|psi| = {r}");
        }
    }

    #[test]
    fn saddle_cells_stay_consistent() {
        // ψ = cos(2πx1)·cos(2πx2) has crossing lines, i.e. saddle points
        let s = FrequencySupport::square(3).unwrap();
        let q = Complex64::new(0.25, 0.0);
        let z = Complex64::new(0.0, 0.0);
        let c = vec![q, z, q, z, z, z, q, z, q];
        let p = TrigPolynomial::new(s, c, true).unwrap();
        let line = extract_zero_level_set(&p, 33).unwrap();
        assert!(!line.is_empty());
        assert!(line.components.iter().all(|c| c.closed));
    }
}
