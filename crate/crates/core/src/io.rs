//! The `G2F1` binary field container.
//!
//! Layout, all little-endian:
//!
//! | bytes        | content                                   |
//! |--------------|-------------------------------------------|
//! | 4            | magic `G2F1`                              |
//! | 4            | `u32` number of active axes `k`           |
//! | 4k           | `u32` active axis indices                 |
//! | 4k           | `u32` grid shape                          |
//! | 8k           | `f64` periods                             |
//! | 280 per point| 35 `f64` components `φ_ijk`, `i<j<k` lexicographic, row-major points |

use std::io::{Read, Write};

use crate::algebra::{three_form_components, three_form_from_components};
use crate::error::G2Error;
use crate::field::G2Field;
use crate::grid::Grid;

pub const MAGIC: &[u8; 4] = b"G2F1";

fn io_err(e: std::io::Error) -> G2Error {
    G2Error::Container(e.to_string())
}

pub fn write_field<W: Write>(mut w: W, field: &G2Field) -> Result<(), G2Error> {
    let g = &field.grid;
    let mut buf = Vec::with_capacity(16 + 16 * g.dims() + 280 * g.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(g.dims() as u32).to_le_bytes());
    for &a in &g.active_axes {
        buf.extend_from_slice(&(a as u32).to_le_bytes());
    }
    for &n in &g.shape {
        buf.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for &p in &g.periods {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    for phi in &field.phi_samples {
        for c in three_form_components(phi) {
            buf.extend_from_slice(&c.to_le_bytes());
        }
    }
    w.write_all(&buf).map_err(io_err)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take<const K: usize>(&mut self) -> Result<[u8; K], G2Error> {
        let end = self.pos + K;
        let s = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| G2Error::Container(format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(s.try_into().unwrap())
    }

    fn u32(&mut self) -> Result<usize, G2Error> {
        Ok(u32::from_le_bytes(self.take()?) as usize)
    }

    fn f64(&mut self) -> Result<f64, G2Error> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

/// Reads a container and validates every sample as a positive 3-form.
pub fn read_field<R: Read>(mut r: R) -> Result<G2Field, G2Error> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(io_err)?;
    let mut c = Cursor { bytes: &bytes, pos: 0 };
    if &c.take::<4>()? != MAGIC {
        return Err(G2Error::Container("bad magic".into()));
    }
    let k = c.u32()?;
    if k > 2 {
        return Err(G2Error::Container(format!("{k} active axes")));
    }
    let axes = (0..k).map(|_| c.u32()).collect::<Result<Vec<_>, _>>()?;
    let shape = (0..k).map(|_| c.u32()).collect::<Result<Vec<_>, _>>()?;
    let periods = (0..k).map(|_| c.f64()).collect::<Result<Vec<_>, _>>()?;
    let grid = Grid::new(axes, shape, periods)?;
    let expected = c.pos + 280 * grid.len();
    if bytes.len() != expected {
        return Err(G2Error::Container(format!(
            "expected {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let mut samples = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let comps = (0..35).map(|_| c.f64()).collect::<Result<Vec<_>, _>>()?;
        samples.push(three_form_from_components(&comps));
    }
    let field = G2Field {
        grid,
        phi_samples: samples,
        amplitude: 0.0,
    };
    field.validate()?;
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;

    #[test]
    fn round_trip_is_exact() {
        let spec = FieldSpec::new(vec![1, 4], vec![8, 6], vec![2.0, 3.0], 0.1, 5);
        let f = G2Field::random(&spec).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        assert_eq!(&buf[..4], MAGIC);
        assert_eq!(buf.len(), 4 + 4 + 8 + 8 + 16 + 280 * 48);
        let g = read_field(&buf[..]).unwrap();
        let mut again = Vec::new();
        write_field(&mut again, &g).unwrap();
        assert_eq!(again, buf);
        assert_eq!(g.grid, f.grid);
        for (a, b) in g.phi_samples.iter().zip(&f.phi_samples) {
            assert_eq!(three_form_components(a), three_form_components(b));
        }
    }

    #[test]
    fn rejects_truncation_and_bad_magic() {
        let spec = FieldSpec::new(vec![0], vec![6], vec![1.0], 0.1, 5);
        let mut buf = Vec::new();
        write_field(&mut buf, &G2Field::random(&spec).unwrap()).unwrap();
        assert!(read_field(&buf[..buf.len() - 1]).is_err());
        buf[0] = b'X';
        assert!(matches!(read_field(&buf[..]), Err(G2Error::Container(_))));
    }
}
