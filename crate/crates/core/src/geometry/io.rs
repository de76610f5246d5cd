//! Polyline persistence: CSV `(s, x1, x2)` and a compact binary frame
//! (`"MLAB"`, u16 version, u64 count, little-endian f64 triples).

use super::polyline::Polyline;
use crate::error::{Error, Result};
use crate::structure::PlanarPoint;
use std::io::{Read, Write};

pub const FRAME_MAGIC: &[u8; 4] = b"MLAB";
pub const FRAME_VERSION: u16 = 1;

pub fn write_csv<W: Write>(c: &Polyline, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["s", "x1", "x2"])?;
    for (p, s) in c.vertices().iter().zip(c.cum_arclength()) {
        wr.serialize((s, p.x1, p.x2))?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads `(s, x1, x2)` rows; the curve is closed when first and last
/// vertices coincide. The `s` column is recomputed, not trusted.
pub fn read_csv<R: Read>(r: R) -> Result<Polyline> {
    let mut rd = csv::Reader::from_reader(r);
    let mut v = Vec::new();
    for rec in rd.deserialize() {
        let (_s, x1, x2): (f64, f64, f64) = rec?;
        v.push(PlanarPoint::new(x1, x2));
    }
    from_vertices(v)
}

fn from_vertices(v: Vec<PlanarPoint>) -> Result<Polyline> {
    let closed = v.len() >= 4
        && v.first().map(|p| (p.x1.to_bits(), p.x2.to_bits()))
            == v.last().map(|p| (p.x1.to_bits(), p.x2.to_bits()));
    if closed {
        Polyline::closed(v)
    } else {
        Polyline::open(v)
    }
}

pub fn write_frame<W: Write>(c: &Polyline, mut w: W) -> Result<()> {
    w.write_all(FRAME_MAGIC)?;
    w.write_all(&FRAME_VERSION.to_le_bytes())?;
    w.write_all(&(c.len() as u64).to_le_bytes())?;
    for (p, s) in c.vertices().iter().zip(c.cum_arclength()) {
        for x in [*s, p.x1, p.x2] {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_frame<R: Read>(mut r: R) -> Result<Polyline> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != FRAME_MAGIC {
        return Err(Error::Format("bad frame magic".into()));
    }
    let mut b2 = [0u8; 2];
    r.read_exact(&mut b2)?;
    let version = u16::from_le_bytes(b2);
    if version != FRAME_VERSION {
        return Err(Error::Format(format!("unsupported frame version {version}")));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let count = u64::from_le_bytes(b8);
    let count = usize::try_from(count).map_err(|_| Error::Format("frame too large".into()))?;
    let mut v = Vec::with_capacity(count.min(1 << 24));
    for _ in 0..count {
        let mut xs = [0.0; 3];
        for x in &mut xs {
            r.read_exact(&mut b8)?;
            *x = f64::from_le_bytes(b8);
        }
        v.push(PlanarPoint::new(xs[1], xs[2]));
    }
    from_vertices(v)
}
