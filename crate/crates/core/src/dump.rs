//! Portable binary layout for polynomial test vectors.
//!
//! All fields little-endian:
//!
//! ```text
//! magic    4 bytes  "RNSP"
//! version  u32      1
//! n        u32      ring degree
//! limbs    u32      L
//! domain   u32      0 = coefficient, 1 = evaluation
//! moduli   L x u32
//! residues L x n x u32, row-major (limb 0 first)
//! ```
//!
//! A file may hold several records back to back.

use std::io::{Read, Write};

use crate::arith::Modulus;
use crate::error::{Error, Result};
use crate::poly::{Domain, Polynomial};

pub const MAGIC: &[u8; 4] = b"RNSP";
pub const VERSION: u32 = 1;

pub fn write_polynomial<W: Write>(w: &mut W, p: &Polynomial) -> Result<()> {
    w.write_all(MAGIC)?;
    let domain = match p.domain() {
        Domain::Coefficient => 0u32,
        Domain::Evaluation => 1,
    };
    for v in [VERSION, p.n() as u32, p.limbs() as u32, domain] {
        w.write_all(&v.to_le_bytes())?;
    }
    for m in p.basis() {
        w.write_all(&m.value().to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(p.data().len() * 4);
    for &x in p.data() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

/// Reads one record. Moduli come back as [`Modulus::plain`] values.
pub fn read_polynomial<R: Read>(r: &mut R) -> Result<Polynomial> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Config("not an RNSP record".into()));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Config(format!("unsupported RNSP version {version}")));
    }
    let n = read_u32(r)? as usize;
    let limbs = read_u32(r)? as usize;
    let domain = match read_u32(r)? {
        0 => Domain::Coefficient,
        1 => Domain::Evaluation,
        d => return Err(Error::Config(format!("unknown domain tag {d}"))),
    };
    let basis = (0..limbs)
        .map(|_| Modulus::plain(read_u32(r)?))
        .collect::<Result<Vec<_>>>()?;
    let mut raw = vec![0u8; limbs * n * 4];
    r.read_exact(&mut raw)?;
    let data = raw
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Polynomial::from_data(&basis, n, domain, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_layout() {
        let basis = vec![Modulus::new(17, 4).unwrap()];
        let p = Polynomial::from_data(&basis, 4, Domain::Evaluation, vec![1, 2, 3, 16]).unwrap();
        let mut out = Vec::new();
        write_polynomial(&mut out, &p).unwrap();
        assert_eq!(&out[..4], b"RNSP");
        assert_eq!(out.len(), 4 + 16 + 4 + 16);
        assert_eq!(&out[20..24], &17u32.to_le_bytes());
        assert_eq!(&out[36..40], &16u32.to_le_bytes());
        let back = read_polynomial(&mut out.as_slice()).unwrap();
        assert_eq!(back.data(), p.data());
        assert_eq!(back.domain(), Domain::Evaluation);
    }

    #[test]
    fn bad_magic() {
        assert!(read_polynomial(&mut &b"XXXX\x01\0\0\0"[..]).is_err());
    }
}
