use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::structure::PlanarPoint;

/// A sampled planar curve with cumulative arclength.
///
/// Closed polylines repeat their first vertex at the end (bit-exactly).
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    vertices: Vec<PlanarPoint>,
    closed: bool,
    cum: Vec<f64>,
}

impl Polyline {
    pub fn open(vertices: Vec<PlanarPoint>) -> Result<Self> {
        Self::build(vertices, false)
    }

    /// A closed polyline; the last vertex must equal the first bit-exactly.
    pub fn closed(vertices: Vec<PlanarPoint>) -> Result<Self> {
        match (vertices.first(), vertices.last()) {
            (Some(a), Some(b)) if vertices.len() >= 4 && same_bits(a, b) => {}
            _ if vertices.len() < 4 => {
                return Err(Error::TooFewVertices {
                    min: 4,
                    got: vertices.len(),
                })
            }
            _ => return Err(Error::UnclosedCurve),
        }
        Self::build(vertices, true)
    }

    /// Closes `vertices` by appending a copy of the first one.
    pub fn closed_ring(mut vertices: Vec<PlanarPoint>) -> Result<Self> {
        if let Some(&first) = vertices.first() {
            if vertices.last().is_some_and(|l| !same_bits(l, &first)) {
                vertices.push(first);
            }
        }
        Self::closed(vertices)
    }

    /// Like [`Polyline::open`] but silently drops consecutive duplicates.
    pub fn open_dedup(mut vertices: Vec<PlanarPoint>) -> Result<Self> {
        vertices.dedup_by(|b, a| same_bits(a, b));
        Self::open(vertices)
    }

    fn build(vertices: Vec<PlanarPoint>, closed: bool) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::TooFewVertices {
                min: 2,
                got: vertices.len(),
            });
        }
        if let Some(index) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFiniteVertex { index });
        }
        let mut cum = Vec::with_capacity(vertices.len());
        cum.push(0.0);
        let mut acc = CompensatedSum::new();
        for (index, w) in vertices.windows(2).enumerate() {
            let d = w[0].dist(&w[1]);
            if d == 0.0 {
                return Err(Error::RepeatedVertex { index });
            }
            acc.add(d);
            cum.push(acc.value());
        }
        Ok(Self {
            vertices,
            closed,
            cum,
        })
    }

    pub fn vertices(&self) -> &[PlanarPoint] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<PlanarPoint> {
        self.vertices
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn cum_arclength(&self) -> &[f64] {
        &self.cum
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn segment_count(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn segment(&self, i: usize) -> (PlanarPoint, PlanarPoint) {
        (self.vertices[i], self.vertices[i + 1])
    }

    pub fn first(&self) -> PlanarPoint {
        self.vertices[0]
    }

    pub fn last(&self) -> PlanarPoint {
        self.vertices[self.vertices.len() - 1]
    }

    /// Euclidean length (compensated).
    pub fn length(&self) -> f64 {
        self.cum[self.cum.len() - 1]
    }

    /// `(min, max)` corners of the bounding box.
    pub fn bbox(&self) -> (PlanarPoint, PlanarPoint) {
        let mut lo = self.vertices[0];
        let mut hi = lo;
        for p in &self.vertices {
            lo.x1 = lo.x1.min(p.x1);
            lo.x2 = lo.x2.min(p.x2);
            hi.x1 = hi.x1.max(p.x1);
            hi.x2 = hi.x2.max(p.x2);
        }
        (lo, hi)
    }

    /// Point at arclength `s` (clamped to the curve).
    pub fn point_at(&self, s: f64) -> PlanarPoint {
        let (i, a) = self.locate(s);
        lerp(self.vertices[i], self.vertices[i + 1], a)
    }

    /// Segment index and fraction within it for arclength `s`.
    pub fn locate(&self, s: f64) -> (usize, f64) {
        let n = self.segment_count();
        let i = match self.cum.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        };
        let seg = self.cum[i + 1] - self.cum[i];
        ((i), ((s - self.cum[i]) / seg).clamp(0.0, 1.0))
    }

    /// Open sub-curve between arclengths `s0 < s1`, with interpolated ends.
    pub fn slice(&self, s0: f64, s1: f64) -> Result<Self> {
        let (i0, _) = self.locate(s0);
        let (i1, _) = self.locate(s1);
        let mut v = vec![self.point_at(s0)];
        for k in (i0 + 1)..=i1 {
            v.push(self.vertices[k]);
        }
        v.push(self.point_at(s1));
        Self::open_dedup(v)
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        Self::build(v, self.closed).expect("reversal preserves validity")
    }

    /// Concatenation `self * other`; requires `self.last() == other.first()`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if !same_bits(&self.last(), &other.first()) {
            return Err(Error::Format(
                "concatenated curves must share the junction vertex".into(),
            ));
        }
        let mut v = self.vertices.clone();
        v.extend_from_slice(&other.vertices[1..]);
        Self::open(v)
    }

    /// Closes an open curve with the straight segment back to its start.
    pub fn close(&self) -> Result<Self> {
        Self::closed_ring(self.vertices.clone())
    }

    /// Shoelace signed area (positive for counterclockwise curves).
    pub fn signed_area(&self) -> f64 {
        let o = self.vertices[0];
        let mut acc = CompensatedSum::new();
        for w in self.vertices.windows(2) {
            let (a, b) = (w[0], w[1]);
            acc.add(
                0.5 * ((a.x1 - o.x1) * (b.x2 - o.x2) - (a.x2 - o.x2) * (b.x1 - o.x1)),
            );
        }
        // Open curves are treated as closed by the chord back to `o`, which
        // contributes nothing to the fan sum.
        acc.value()
    }

    /// Uniform resampling into `n` segments by arclength.
    pub fn resample(&self, n: usize) -> Result<Self> {
        let n = n.max(1);
        let total = self.length();
        let mut v: Vec<PlanarPoint> = (0..n)
            .map(|i| self.point_at(total * i as f64 / n as f64))
            .collect();
        if self.closed {
            v.push(v[0]);
            Self::closed(v)
        } else {
            v.push(self.last());
            Self::open(v)
        }
    }
}

pub(crate) fn same_bits(a: &PlanarPoint, b: &PlanarPoint) -> bool {
    a.x1.to_bits() == b.x1.to_bits() && a.x2.to_bits() == b.x2.to_bits()
}

pub(crate) fn lerp(a: PlanarPoint, b: PlanarPoint, t: f64) -> PlanarPoint {
    PlanarPoint::new(a.x1 + t * (b.x1 - a.x1), a.x2 + t * (b.x2 - a.x2))
}
