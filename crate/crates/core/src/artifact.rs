//! Binary persistence of a compiled tensor + basis.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic  b"MGPC"
//! u32    format version (1)
//! u8     k_M, u8 Γ, u8 m, u8 flags (bit 0: basis closed)
//! u32    generation depth
//! u32    dim_g
//! u32    dim_H
//! u64    entry count
//! f64    generation ℓ1 cutoff
//! [32]   model digest (generators + cutoff + orders)
//! [32]   payload checksum (SHA-256 of everything after the header)
//! ------ payload ------
//! u32×D      element depths
//! f64×D      ℓ1 norms
//! f64×D      a coefficients
//! f64×D      b coefficients
//! f64×2·D·N² basis matrices, row-major, re/im interleaved
//! records    (k u8, p u8, μ u32, len u8, γ bytes, value f64), key-sorted
//! ```
//!
//! Loading refuses on a wrong magic/version and on any checksum mismatch;
//! basis matrices additionally pass the Hermiticity check on the way in.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::coeffs::{CoeffTensor, TensorKey, TensorMeta};
use crate::error::{MagnusError, Result};
use crate::lie::LieBasis;
use crate::operator::HermitianOperator;
use crate::{C64, CMat, RVec};

const MAGIC: &[u8; 4] = b"MGPC";
const VERSION: u32 = 1;

/// Header summary, readable without the payload.
#[derive(Debug, Clone)]
pub struct ArtifactInfo {
    pub version: u32,
    pub k_max: u8,
    pub gamma: u8,
    pub m: u8,
    pub closed: bool,
    pub gen_max_depth: u32,
    pub dim_g: u32,
    pub dim_h: u32,
    pub n_entries: u64,
    pub gen_eps_l: f64,
    pub model_digest: [u8; 32],
}

fn push_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn serialize_payload(t: &CoeffTensor, basis: &LieBasis) -> Vec<u8> {
    let d = basis.dim_g();
    let n = basis.dim_h();
    let mut buf = Vec::with_capacity(16 * d * n * n);
    for &depth in basis.depths() {
        buf.extend_from_slice(&depth.to_le_bytes());
    }
    for &v in basis.l1_norms() {
        push_f64(&mut buf, v);
    }
    for &v in basis.a_coeffs().iter() {
        push_f64(&mut buf, v);
    }
    for &v in basis.b_coeffs().iter() {
        push_f64(&mut buf, v);
    }
    for el in basis.elements() {
        let m = el.matrix();
        for i in 0..n {
            for j in 0..n {
                push_f64(&mut buf, m[(i, j)].re);
                push_f64(&mut buf, m[(i, j)].im);
            }
        }
    }
    for (key, v) in t.entries() {
        buf.push(key.k);
        buf.push(key.p);
        buf.extend_from_slice(&key.mu.to_le_bytes());
        buf.push(key.gammas.len() as u8);
        buf.extend_from_slice(&key.gammas);
        push_f64(&mut buf, *v);
    }
    buf
}

/// Persist tensor and basis; the write is deterministic, so identical
/// inputs produce byte-identical files.
pub fn save_artifact(t: &CoeffTensor, basis: &LieBasis, path: &Path) -> Result<()> {
    if t.meta.dim_g as usize != basis.dim_g() {
        return Err(MagnusError::DimensionMismatch(
            "tensor and basis sizes disagree".into(),
        ));
    }
    let payload = serialize_payload(t, basis);
    let mut prefix = Vec::with_capacity(72);
    prefix.extend_from_slice(MAGIC);
    prefix.extend_from_slice(&VERSION.to_le_bytes());
    prefix.extend_from_slice(&[
        t.meta.k_max,
        t.meta.gamma,
        t.meta.m,
        u8::from(basis.is_closed()),
    ]);
    prefix.extend_from_slice(&basis.gen_max_depth().to_le_bytes());
    prefix.extend_from_slice(&t.meta.dim_g.to_le_bytes());
    prefix.extend_from_slice(&(basis.dim_h() as u32).to_le_bytes());
    prefix.extend_from_slice(&(t.n_entries() as u64).to_le_bytes());
    prefix.extend_from_slice(&basis.gen_eps_l().to_le_bytes());
    prefix.extend_from_slice(&t.model_digest);
    // The checksum covers the header prefix and the payload, so a tampered
    // digest or orders field is caught too.
    let mut hasher = Sha256::new();
    hasher.update(&prefix);
    hasher.update(&payload);
    let checksum: [u8; 32] = hasher.finalize().into();

    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&prefix)?;
    w.write_all(&checksum)?;
    w.write_all(&payload)?;
    w.flush()?;
    Ok(())
}

/// Byte length of the header fields covered by the checksum.
const PREFIX_LEN: usize = 72;

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(MagnusError::Artifact("truncated payload".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn read_header<R: Read>(r: &mut R) -> Result<ArtifactInfo> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(MagnusError::Artifact("not a coefficient artifact (bad magic)".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(MagnusError::Artifact(format!(
            "unsupported artifact version {version} (expected {VERSION})"
        )));
    }
    let mut orders = [0u8; 4];
    r.read_exact(&mut orders)?;
    r.read_exact(&mut b4)?;
    let gen_max_depth = u32::from_le_bytes(b4);
    r.read_exact(&mut b4)?;
    let dim_g = u32::from_le_bytes(b4);
    r.read_exact(&mut b4)?;
    let dim_h = u32::from_le_bytes(b4);
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let n_entries = u64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let gen_eps_l = f64::from_le_bytes(b8);
    let mut model_digest = [0u8; 32];
    r.read_exact(&mut model_digest)?;
    Ok(ArtifactInfo {
        version,
        k_max: orders[0],
        gamma: orders[1],
        m: orders[2],
        closed: orders[3] & 1 == 1,
        gen_max_depth,
        dim_g,
        dim_h,
        n_entries,
        gen_eps_l,
        model_digest,
    })
}

/// Read only the header.
pub fn artifact_info(path: &Path) -> Result<ArtifactInfo> {
    let mut r = BufReader::new(File::open(path)?);
    read_header(&mut r)
}

/// Load and verify an artifact.
pub fn load_artifact(path: &Path) -> Result<(CoeffTensor, LieBasis)> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < PREFIX_LEN + 32 {
        return Err(MagnusError::Artifact("file too short".into()));
    }
    let info = read_header(&mut &bytes[..PREFIX_LEN])?;
    let checksum: [u8; 32] = bytes[PREFIX_LEN..PREFIX_LEN + 32].try_into().unwrap();
    let payload = &bytes[PREFIX_LEN + 32..];
    let mut hasher = Sha256::new();
    hasher.update(&bytes[..PREFIX_LEN]);
    hasher.update(payload);
    let actual: [u8; 32] = hasher.finalize().into();
    if actual != checksum {
        return Err(MagnusError::Artifact(
            "checksum mismatch (file corrupt or tampered)".into(),
        ));
    }

    let d = info.dim_g as usize;
    let n = info.dim_h as usize;
    let mut c = Cursor { buf: payload, pos: 0 };
    let mut depths = Vec::with_capacity(d);
    for _ in 0..d {
        depths.push(c.u32()?);
    }
    let mut l1_norms = Vec::with_capacity(d);
    for _ in 0..d {
        l1_norms.push(c.f64()?);
    }
    let mut a_coeffs = RVec::zeros(d);
    for i in 0..d {
        a_coeffs[i] = c.f64()?;
    }
    let mut b_coeffs = RVec::zeros(d);
    for i in 0..d {
        b_coeffs[i] = c.f64()?;
    }
    let mut elements = Vec::with_capacity(d);
    for mu in 0..d {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let re = c.f64()?;
                let im = c.f64()?;
                m[(i, j)] = C64::new(re, im);
            }
        }
        elements.push(HermitianOperator::new(m).map_err(|e| {
            MagnusError::Artifact(format!("basis element {mu} failed validation: {e}"))
        })?);
    }
    let mut entries = Vec::with_capacity(info.n_entries as usize);
    for _ in 0..info.n_entries {
        let k = c.u8()?;
        let p = c.u8()?;
        let mu = c.u32()?;
        let len = c.u8()? as usize;
        let gammas = c.take(len)?.to_vec();
        let value = c.f64()?;
        entries.push((TensorKey { k, p, mu, gammas }, value));
    }
    if c.pos != payload.len() {
        return Err(MagnusError::Artifact("trailing bytes in payload".into()));
    }

    let basis = LieBasis::from_parts(
        elements,
        depths,
        l1_norms.clone(),
        a_coeffs,
        b_coeffs,
        info.gen_max_depth,
        info.closed,
        info.gen_eps_l,
    )?;
    let meta = TensorMeta {
        k_max: info.k_max,
        gamma: info.gamma,
        m: info.m,
        dim_g: info.dim_g,
    };
    let tensor = CoeffTensor::from_entries(meta, l1_norms, info.model_digest, entries)?;
    Ok((tensor, basis))
}

/// Human-readable dump of the same content, for debugging.
pub fn write_text_export<W: Write>(t: &CoeffTensor, basis: &LieBasis, mut w: W) -> Result<()> {
    writeln!(w, "# coefficient artifact (text export)")?;
    writeln!(
        w,
        "# k_M={} gamma={} m={} dim_g={} dim_H={} entries={}",
        t.meta.k_max,
        t.meta.gamma,
        t.meta.m,
        t.meta.dim_g,
        basis.dim_h(),
        t.n_entries()
    )?;
    writeln!(w, "# digest={}", hex(&t.model_digest))?;
    writeln!(w, "# columns: k p mu gammas value")?;
    for (key, v) in t.entries() {
        let gam: Vec<String> = key.gammas.iter().map(|g| g.to_string()).collect();
        writeln!(w, "{} {} {} [{}] {:.17e}", key.k, key.p, key.mu, gam.join(","), v)?;
    }
    Ok(())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Hex form of the model digest for display.
pub fn digest_hex(digest: &[u8; 32]) -> String {
    hex(digest)
}
