/// One connected piece of a discretized curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub vertices: Vec<[f64; 2]>,
    pub closed: bool,
}

/// Ordered vertex lists in the periodic domain `[0,1)²`.
///
/// Consecutive vertices are joined by the shortest segment on the torus, so a
/// component may leave through one side of the unit square and re-enter
/// through the opposite side.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polyline {
    pub components: Vec<Component>,
}

/// A straight piece `start → start + delta` (unwrapped coordinates).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: [f64; 2],
    pub delta: [f64; 2],
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.delta[0].hypot(self.delta[1])
    }

    pub fn at(&self, t: f64) -> [f64; 2] {
        [
            self.start[0] + t * self.delta[0],
            self.start[1] + t * self.delta[1],
        ]
    }
}

/// Minimal-image difference on the unit torus, each entry in `[-0.5, 0.5)`.
pub fn torus_delta(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let w = |d: f64| d - (d + 0.5).floor();
    [w(b[0] - a[0]), w(b[1] - a[1])]
}

pub fn torus_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = torus_delta(a, b);
    d[0].hypot(d[1])
}

/// Wraps a point into `[0,1)²`.
pub fn wrap_point(p: [f64; 2]) -> [f64; 2] {
    let w = |v: f64| {
        let r = v.rem_euclid(1.0);
        if r >= 1.0 {
            0.0
        } else {
            r
        }
    };
    [w(p[0]), w(p[1])]
}

impl Polyline {
    pub fn new(components: Vec<Component>) -> Self {
        Polyline { components }
    }

    pub fn is_empty(&self) -> bool {
        self.components.iter().all(|c| c.vertices.is_empty())
    }

    pub fn vertex_count(&self) -> usize {
        self.components.iter().map(|c| c.vertices.len()).sum()
    }

    pub fn vertices(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.components.iter().flat_map(|c| c.vertices.iter().copied())
    }

    pub fn segments(&self) -> Vec<Segment> {
        let mut out = Vec::new();
        for comp in &self.components {
            let v = &comp.vertices;
            let n = v.len();
            if n < 2 {
                continue;
            }
            let count = if comp.closed { n } else { n - 1 };
            for i in 0..count {
                let a = v[i];
                let b = v[(i + 1) % n];
                out.push(Segment {
                    start: a,
                    delta: torus_delta(a, b),
                });
            }
        }
        out
    }

    pub fn length(&self) -> f64 {
        self.segments().iter().map(Segment::length).sum()
    }

    /// Axis-aligned bounds of the vertices: `([min1, min2], [max1, max2])`.
    pub fn bounds(&self) -> Option<([f64; 2], [f64; 2])> {
        let mut it = self.vertices();
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| {
            (
                [lo[0].min(v[0]), lo[1].min(v[1])],
                [hi[0].max(v[0]), hi[1].max(v[1])],
            )
        }))
    }
}
