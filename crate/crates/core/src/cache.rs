//! Disk cache for built process tensors.
//!
//! Building a PT is minutes of SVD work while loading one is milliseconds,
//! and the same environment is shared by every scenario at fixed (spectral
//! density, dt, t_mem, truncation). Files are versioned little-endian
//! binary with a trailing SHA-256 so a torn write is rejected, never
//! half-loaded.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{ByteOrder, LittleEndian};
use sha2::{Digest, Sha256};

use crate::error::{CoemitError, Result};
use crate::linalg::{C64, CMat, CVec};
use crate::pt::{ProcessTensor, PtBlock};

const MAGIC: &[u8; 8] = b"COEMITPT";
const VERSION: u32 = 1;

/// Cache file name for a PT keyed by everything that determines it.
pub fn cache_file(
    dir: &Path,
    sd_fingerprint: &str,
    dt: f64,
    t_mem: f64,
    svd_threshold: f64,
    max_bond: usize,
) -> PathBuf {
    let mut h = Sha256::new();
    h.update(
        format!("{sd_fingerprint}|dt={dt:.12e}|t_mem={t_mem:.12e}|thr={svd_threshold:.3e}|chi={max_bond}")
            .as_bytes(),
    );
    let digest = h.finalize();
    let hex: String = digest[..12].iter().map(|b| format!("{b:02x}")).collect();
    dir.join(format!("pt-{hex}.bin"))
}

struct Enc(Vec<u8>);

impl Enc {
    fn u64(&mut self, v: u64) {
        let mut b = [0u8; 8];
        LittleEndian::write_u64(&mut b, v);
        self.0.extend_from_slice(&b);
    }

    fn f64(&mut self, v: f64) {
        let mut b = [0u8; 8];
        LittleEndian::write_f64(&mut b, v);
        self.0.extend_from_slice(&b);
    }

    fn mat(&mut self, m: &CMat) {
        self.u64(m.nrows() as u64);
        self.u64(m.ncols() as u64);
        for x in m.iter() {
            self.f64(x.re);
            self.f64(x.im);
        }
    }

    fn vec(&mut self, v: &CVec) {
        self.u64(v.len() as u64);
        for x in v.iter() {
            self.f64(x.re);
            self.f64(x.im);
        }
    }
}

struct Dec<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Dec<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(CoemitError::Format("truncated PT cache file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(LittleEndian::read_u64(self.take(8)?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(LittleEndian::read_f64(self.take(8)?))
    }

    fn dim(&mut self) -> Result<usize> {
        let v = self.u64()?;
        if v > 1 << 32 {
            return Err(CoemitError::Format(format!("implausible dimension {v}")));
        }
        Ok(v as usize)
    }

    fn mat(&mut self) -> Result<CMat> {
        let (r, c) = (self.dim()?, self.dim()?);
        let mut m = CMat::zeros(r, c);
        for x in m.iter_mut() {
            *x = C64::new(self.f64()?, self.f64()?);
        }
        Ok(m)
    }

    fn vec(&mut self) -> Result<CVec> {
        let n = self.dim()?;
        let mut v = CVec::zeros(n);
        for x in v.iter_mut() {
            *x = C64::new(self.f64()?, self.f64()?);
        }
        Ok(v)
    }
}

pub fn save_pt(path: &Path, pt: &ProcessTensor) -> Result<()> {
    let mut e = Enc(Vec::new());
    e.f64(pt.dt);
    e.u64(pt.n_steps as u64);
    e.f64(pt.svd_threshold);
    e.u64(pt.max_bond as u64);
    e.u64(pt.max_bond_used as u64);
    e.u64(pt.converged as u64);
    e.u64(pt.period as u64);
    e.u64(pt.blocks.len() as u64);
    for b in &pt.blocks {
        for m in &b.m {
            e.mat(m);
        }
    }
    e.u64(pt.closures.len() as u64);
    for v in &pt.closures {
        e.vec(v);
    }
    e.u64(pt.closure_rep.len() as u64);
    for v in &pt.closure_rep {
        e.vec(v);
    }
    let payload = e.0;
    let mut h = Sha256::new();
    h.update(MAGIC);
    let mut ver = [0u8; 4];
    LittleEndian::write_u32(&mut ver, VERSION);
    h.update(ver);
    h.update(&payload);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    // write to a sibling then rename so readers never see a partial file
    let tmp = path.with_extension("bin.tmp");
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        f.write_all(MAGIC)?;
        f.write_all(&ver)?;
        f.write_all(&payload)?;
        f.write_all(&h.finalize())?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_pt(path: &Path) -> Result<ProcessTensor> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    if buf.len() < MAGIC.len() + 4 + 32 || &buf[..8] != MAGIC {
        return Err(CoemitError::Format("not a PT cache file".into()));
    }
    let version = LittleEndian::read_u32(&buf[8..12]);
    if version != VERSION {
        return Err(CoemitError::Format(format!(
            "PT cache version {version}, expected {VERSION}"
        )));
    }
    let (body, sum) = buf.split_at(buf.len() - 32);
    let mut h = Sha256::new();
    h.update(body);
    if h.finalize().as_slice() != sum {
        return Err(CoemitError::Format("PT cache checksum mismatch".into()));
    }
    let mut d = Dec {
        buf: &body[12..],
        pos: 0,
    };
    let dt = d.f64()?;
    let n_steps = d.dim()?;
    let svd_threshold = d.f64()?;
    let max_bond = d.dim()?;
    let max_bond_used = d.dim()?;
    let converged = d.u64()? != 0;
    let period = d.dim()?;
    let n_blocks = d.dim()?;
    let mut blocks = Vec::with_capacity(n_blocks);
    for _ in 0..n_blocks {
        let m: [CMat; 4] = [d.mat()?, d.mat()?, d.mat()?, d.mat()?];
        blocks.push(PtBlock { m });
    }
    let n_cl = d.dim()?;
    let mut closures = Vec::with_capacity(n_cl);
    for _ in 0..n_cl {
        closures.push(d.vec()?);
    }
    let n_rep = d.dim()?;
    let mut closure_rep = Vec::with_capacity(n_rep);
    for _ in 0..n_rep {
        closure_rep.push(d.vec()?);
    }
    if d.pos != d.buf.len() {
        return Err(CoemitError::Format("trailing bytes in PT cache file".into()));
    }
    Ok(ProcessTensor {
        blocks,
        closures,
        closure_rep,
        converged,
        period,
        dt,
        n_steps,
        svd_threshold,
        max_bond,
        max_bond_used,
    })
}

/// Load when present and matching, otherwise build with `build` and store.
pub fn load_or_build(
    path: &Path,
    build: impl FnOnce() -> Result<ProcessTensor>,
) -> Result<ProcessTensor> {
    if path.exists() {
        match load_pt(path) {
            Ok(pt) => return Ok(pt),
            // corrupt cache entries are rebuilt, not fatal
            Err(CoemitError::Format(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let pt = build()?;
    save_pt(path, &pt)?;
    Ok(pt)
}
