//! GFF1 field files: `"GFF1"`, `d: u32`, `d` sizes `u32`, `d` origins `i64`,
//! row-major `f64` values, then a JSON metadata block running to EOF. All
//! integers and floats are little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::lattice::{BoxRegion, Site};

use super::{Domain, FieldMeta, FieldSample};

pub const MAGIC: &[u8; 4] = b"GFF1";

/// Writes atomically: the file appears under `path` only once complete.
pub fn write_field(field: &FieldSample, path: &Path) -> Result<()> {
    let region = field
        .region()
        .ok_or_else(|| Error::Format("only box-shaped fields can be stored".into()))?;
    crate::io::atomic_write(path, |w| {
        let mut w = BufWriter::new(w);
        w.write_all(MAGIC)?;
        w.write_all(&(region.dim() as u32).to_le_bytes())?;
        for i in 0..region.dim() {
            w.write_all(&(region.side(i) as u32).to_le_bytes())?;
        }
        for &c in region.lower().coords() {
            w.write_all(&c.to_le_bytes())?;
        }
        for v in &field.values {
            w.write_all(&v.to_le_bytes())?;
        }
        serde_json::to_writer(&mut w, &field.meta)?;
        w.flush()?;
        Ok(())
    })
}

fn read_exact_or(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated file while reading {what}")),
        _ => Error::Io(e),
    })
}

fn read_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_or(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_field(path: &Path) -> Result<FieldSample> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact_or(&mut r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected \"GFF1\"")));
    }
    let d = read_u32(&mut r, "dimension")? as usize;
    if d == 0 || d > 16 {
        return Err(Error::Format(format!("implausible dimension {d}")));
    }
    let sizes = (0..d)
        .map(|_| read_u32(&mut r, "sizes").map(|s| s as i64))
        .collect::<Result<Vec<_>>>()?;
    if sizes.contains(&0) {
        return Err(Error::Format("zero-length axis".into()));
    }
    let mut origin = Vec::with_capacity(d);
    for _ in 0..d {
        let mut b = [0u8; 8];
        read_exact_or(&mut r, &mut b, "origins")?;
        origin.push(i64::from_le_bytes(b));
    }
    let lower = Site::new(origin.iter().copied());
    let upper = Site::new(origin.iter().zip(&sizes).map(|(o, s)| o + s - 1));
    let region = BoxRegion::new(lower, upper)?;
    let n = region.len();
    let mut values = Vec::with_capacity(n);
    let mut b = [0u8; 8];
    for _ in 0..n {
        read_exact_or(&mut r, &mut b, "values")?;
        values.push(f64::from_le_bytes(b));
    }
    let meta: FieldMeta = serde_json::from_reader(&mut r).map_err(|e| Error::Format(format!("metadata block: {e}")))?;
    FieldSample::new(Domain::Box(region), values, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::sample_dirichlet_spectral;

    #[test]
    fn round_trip_preserves_values_and_meta() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.gff");
        let mut f = sample_dirichlet_spectral(&BoxRegion::centered(3, 2), 4).unwrap();
        f.meta.kappa = Some(3);
        f.meta.note = Some("x".into());
        write_field(&f, &p).unwrap();
        assert_eq!(read_field(&p).unwrap(), f);
    }

    #[test]
    fn corrupt_and_truncated_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.gff");
        let f = sample_dirichlet_spectral(&BoxRegion::centered(3, 1), 4).unwrap();
        write_field(&f, &p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        std::fs::write(&p, &bad).unwrap();
        assert!(matches!(read_field(&p), Err(Error::Format(m)) if m.contains("magic")));
        std::fs::write(&p, &bytes[..40]).unwrap();
        assert!(matches!(read_field(&p), Err(Error::Format(m)) if m.contains("truncated")));
    }
}
