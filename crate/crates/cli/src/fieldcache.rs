//! Binary dump of solved coefficient fields.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic      8 bytes  "QSDFLD01"
//! key       64 bytes  ASCII hex SHA-256 of the coefficient parameters
//! dt         f64
//! n_steps    u64
//! variant    u8       0 as_printed, 1 symmetrized, 2 corrected
//! kappa1     f64
//! kappa2     f64
//! then complex arrays as (re f64, im f64) pairs, T = n_steps + 1:
//!   N_j(t_i)             T × 4
//!   M_j(t_i)             T × 4
//!   n_j(t_i, s_k), k≤i   T(T+1)/2 × 4
//!   m_j(t_i, s_k), k≤i   T(T+1)/2 × 4
//!   N5, N6, M5, M6 (t_i, s'_l), l≤i   4 × T(T+1)/2
//!   final-time panels n5, n6, m5, m6 (k, l)   4 × T²
//! ```

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use num_complex::Complex64;
use qsd_core::coeffs::CoefficientFields;
use qsd_core::{EomVariant, TimeGrid};

const MAGIC: &[u8; 8] = b"QSDFLD01";

fn put_c(out: &mut Vec<u8>, z: &Complex64) {
    out.extend_from_slice(&z.re.to_le_bytes());
    out.extend_from_slice(&z.im.to_le_bytes());
}

pub fn encode(fields: &CoefficientFields, key: &str) -> Vec<u8> {
    let raw = fields.raw_parts();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    let mut k = [b'0'; 64];
    for (d, s) in k.iter_mut().zip(key.bytes()) {
        *d = s;
    }
    out.extend_from_slice(&k);
    out.extend_from_slice(&raw.grid.dt.to_le_bytes());
    out.extend_from_slice(&(raw.grid.n_steps as u64).to_le_bytes());
    out.push(EomVariant::ALL.iter().position(|v| *v == raw.variant).unwrap() as u8);
    out.extend_from_slice(&raw.kappa[0].to_le_bytes());
    out.extend_from_slice(&raw.kappa[1].to_le_bytes());
    for q in raw.big_n.iter().chain(raw.big_m).chain(raw.n_two).chain(raw.m_two) {
        q.iter().for_each(|z| put_c(&mut out, z));
    }
    for arr in raw.integrals.iter().chain(raw.final_panels.iter()) {
        arr.iter().for_each(|z| put_c(&mut out, z));
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        ensure!(self.pos + n <= self.buf.len(), "field file truncated at byte {}", self.pos);
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn c(&mut self) -> Result<Complex64> {
        Ok(Complex64::new(self.f64()?, self.f64()?))
    }
    fn quads(&mut self, n: usize) -> Result<Vec<[Complex64; 4]>> {
        (0..n).map(|_| Ok([self.c()?, self.c()?, self.c()?, self.c()?])).collect()
    }
    fn cs(&mut self, n: usize) -> Result<Vec<Complex64>> {
        (0..n).map(|_| self.c()).collect()
    }
}

/// Decodes a dump; returns the fields and the stored key.
pub fn decode(buf: &[u8]) -> Result<(CoefficientFields, String)> {
    let mut c = Cursor { buf, pos: 0 };
    ensure!(c.take(8)? == MAGIC, "not a coefficient field file");
    let key = String::from_utf8(c.take(64)?.to_vec()).context("bad key")?;
    let dt = c.f64()?;
    let n_steps = c.u64()? as usize;
    let variant = *EomVariant::ALL.get(c.take(1)?[0] as usize).context("bad variant tag")?;
    let kappa = [c.f64()?, c.f64()?];
    let grid = TimeGrid::new(dt, n_steps);
    let len = grid.len();
    let tri = len * (len + 1) / 2;
    let big_n = c.quads(len)?;
    let big_m = c.quads(len)?;
    let n_two = c.quads(tri)?;
    let m_two = c.quads(tri)?;
    let integrals = [c.cs(tri)?, c.cs(tri)?, c.cs(tri)?, c.cs(tri)?];
    let panels = [c.cs(len * len)?, c.cs(len * len)?, c.cs(len * len)?, c.cs(len * len)?];
    if c.pos != buf.len() {
        bail!("{} trailing bytes in field file", buf.len() - c.pos);
    }
    let fields = CoefficientFields::from_raw_parts(grid, variant, kappa, big_n, big_m, n_two, m_two, integrals, panels)
        .context("inconsistent array lengths")?;
    Ok((fields, key))
}

pub fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.qsdf"))
}

pub fn store(dir: &Path, key: &str, fields: &CoefficientFields) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let path = cache_path(dir, key);
    let tmp = path.with_extension("qsdf.tmp");
    std::fs::File::create(&tmp)?.write_all(&encode(fields, key))?;
    std::fs::rename(&tmp, &path)?;
    Ok(())
}

/// Cached fields for `key`, if present and intact.
pub fn load(dir: &Path, key: &str) -> Result<Option<CoefficientFields>> {
    let path = cache_path(dir, key);
    let mut buf = Vec::new();
    match std::fs::File::open(&path) {
        Ok(mut f) => f.read_to_end(&mut buf)?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let (fields, stored) = decode(&buf).with_context(|| format!("reading {}", path.display()))?;
    ensure!(stored == key, "{} holds fields for a different parameter set", path.display());
    Ok(Some(fields))
}
