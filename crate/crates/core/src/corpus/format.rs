//! Bit-exact file formats.
//!
//! Corpus (`DMFC`, little-endian):
//!   magic "DMFC" (4) | version u16 = 1 | pad u16 = 0 | dim u32 | count u32 |
//!   reserved u64 = 0   -- 24-byte header
//!   then per record: id u32 | label u32 | role u8 | pad u8 | dim x f64
//!
//! Checkpoint (`DMCK`, little-endian):
//!   magic "DMCK" (4) | version u16 = 1 | input_dim u32 | bottleneck_dim u32 |
//!   activation u8, then the tensors enc_weight, enc_bias, dec_weight,
//!   dec_bias as row-major f64.
//!
//! Both readers validate length up front, so truncation errors carry the
//! exact expected and actual byte counts.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::codec::{Activation, CodecConfig, CodecParams};
use crate::error::{Error, Result};
use crate::numcore::Matrix;

use super::{FeatureCorpus, LabeledFeature, Role};

const CORPUS_MAGIC: &[u8; 4] = b"DMFC";
const CHECKPOINT_MAGIC: &[u8; 4] = b"DMCK";
const FORMAT_VERSION: u16 = 1;
const CORPUS_HEADER_LEN: u64 = 24;
const CHECKPOINT_HEADER_LEN: u64 = 15;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn offset(&self) -> u64 {
        self.pos as u64
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::format(
                self.pos as u64,
                format!("truncated while reading {what}: need {n} bytes, {} left", self.buf.len() - self.pos),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        let b = self.take(8, what)?;
        Ok(u64::from_le_bytes(b.try_into().unwrap()))
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        let b = self.take(8, what)?;
        Ok(f64::from_le_bytes(b.try_into().unwrap()))
    }
}

fn check_magic(r: &mut Reader, expected: &[u8; 4]) -> Result<()> {
    let at = r.offset();
    let m = r.take(4, "magic")?;
    if m != expected {
        return Err(Error::format(
            at,
            format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(m),
                String::from_utf8_lossy(expected)
            ),
        ));
    }
    Ok(())
}

fn check_version(r: &mut Reader) -> Result<()> {
    let at = r.offset();
    let v = r.u16("version")?;
    if v != FORMAT_VERSION {
        return Err(Error::format(
            at,
            format!("unsupported version {v}, this reader handles version {FORMAT_VERSION}"),
        ));
    }
    Ok(())
}

/// Serialize a corpus to the `DMFC` binary format.
pub fn write_corpus(corpus: &FeatureCorpus, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(
        CORPUS_HEADER_LEN as usize + corpus.len() * (10 + 8 * corpus.dim()),
    );
    buf.extend_from_slice(CORPUS_MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&0u16.to_le_bytes());
    buf.extend_from_slice(&(corpus.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(corpus.len() as u32).to_le_bytes());
    buf.extend_from_slice(&0u64.to_le_bytes());
    for f in corpus.features() {
        buf.extend_from_slice(&f.id.to_le_bytes());
        buf.extend_from_slice(&f.label.to_le_bytes());
        buf.push(f.role.to_byte());
        buf.push(0);
        for v in &f.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

/// Read a `DMFC` corpus, validating magic, version, and exact length.
pub fn read_corpus(path: &Path) -> Result<FeatureCorpus> {
    let buf = fs::read(path)?;
    let mut r = Reader::new(&buf);
    check_magic(&mut r, CORPUS_MAGIC)?;
    check_version(&mut r)?;
    r.u16("header padding")?;
    let dim_at = r.offset();
    let dim = r.u32("dim")? as usize;
    if dim == 0 {
        return Err(Error::format(dim_at, "corpus dimension must be >= 1"));
    }
    let count = r.u32("count")? as usize;
    r.u64("reserved")?;

    let record_len = 10 + 8 * dim as u64;
    let expected = CORPUS_HEADER_LEN + count as u64 * record_len;
    if buf.len() as u64 != expected {
        return Err(Error::format(
            buf.len().min(expected as usize) as u64,
            format!(
                "file length {} does not match header: expected {expected} bytes ({count} records of {record_len})",
                buf.len()
            ),
        ));
    }

    let mut features = Vec::with_capacity(count);
    for _ in 0..count {
        let id = r.u32("record id")?;
        let label = r.u32("record label")?;
        let role_at = r.offset();
        let role_byte = r.u8("record role")?;
        let role = Role::from_byte(role_byte)
            .ok_or_else(|| Error::format(role_at, format!("invalid role byte {role_byte}")))?;
        r.u8("record padding")?;
        let mut values = Vec::with_capacity(dim);
        for _ in 0..dim {
            let at = r.offset();
            let v = r.f64("feature value")?;
            if !v.is_finite() {
                return Err(Error::format(at, format!("non-finite feature value {v}")));
            }
            values.push(v);
        }
        features.push(LabeledFeature {
            id,
            label,
            role,
            values,
        });
    }
    FeatureCorpus::new(dim, features).map_err(|e| match e {
        Error::Data(msg) => Error::format(CORPUS_HEADER_LEN, msg),
        other => other,
    })
}

/// Plain-text corpus import for hand-written fixtures: one feature per line,
/// whitespace-separated `label role-letter v1 .. vd`. Ids are assigned in
/// line order.
pub fn read_corpus_text(path: &Path) -> Result<FeatureCorpus> {
    let text = fs::read_to_string(path)?;
    let mut features = Vec::new();
    let mut dim: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let label: u32 = parts
            .next()
            .ok_or_else(|| Error::data(format!("line {}: missing label", lineno + 1)))?
            .parse()
            .map_err(|_| Error::data(format!("line {}: label is not a u32", lineno + 1)))?;
        let role_str = parts
            .next()
            .ok_or_else(|| Error::data(format!("line {}: missing role letter", lineno + 1)))?;
        let role = role_str
            .chars()
            .next()
            .and_then(Role::from_letter)
            .filter(|_| role_str.len() == 1)
            .ok_or_else(|| {
                Error::data(format!("line {}: bad role '{role_str}', expected T, Q, or G", lineno + 1))
            })?;
        let values: Vec<f64> = parts
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::data(format!("line {}: bad float '{t}'", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        if values.is_empty() {
            return Err(Error::data(format!("line {}: feature has no values", lineno + 1)));
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::data(format!(
                    "line {}: dimension {} differs from first line's {d}",
                    lineno + 1,
                    values.len()
                )))
            }
            _ => {}
        }
        features.push(LabeledFeature {
            id: features.len() as u32,
            label,
            role,
            values,
        });
    }
    let dim = dim.ok_or_else(|| Error::data("text corpus has no features"))?;
    FeatureCorpus::new(dim, features)
}

fn write_tensor(buf: &mut Vec<u8>, data: &[f64]) {
    for v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

/// Serialize codec parameters and their config to the `DMCK` format.
pub fn write_checkpoint(params: &CodecParams, config: &CodecConfig, path: &Path) -> Result<()> {
    if params.input_dim() != config.input_dim || params.bottleneck_dim() != config.bottleneck_dim {
        return Err(Error::shape(format!(
            "params are {}x{}, config says {}x{}",
            params.bottleneck_dim(),
            params.input_dim(),
            config.bottleneck_dim,
            config.input_dim
        )));
    }
    let (d, b) = (config.input_dim, config.bottleneck_dim);
    let mut buf = Vec::with_capacity(CHECKPOINT_HEADER_LEN as usize + 8 * (2 * d * b + d + b));
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(d as u32).to_le_bytes());
    buf.extend_from_slice(&(b as u32).to_le_bytes());
    buf.push(config.activation.to_byte());
    write_tensor(&mut buf, params.enc_weight.data());
    write_tensor(&mut buf, &params.enc_bias);
    write_tensor(&mut buf, params.dec_weight.data());
    write_tensor(&mut buf, &params.dec_bias);
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

/// Read a `DMCK` checkpoint back into parameters and config.
pub fn read_checkpoint(path: &Path) -> Result<(CodecParams, CodecConfig)> {
    let buf = fs::read(path)?;
    let mut r = Reader::new(&buf);
    check_magic(&mut r, CHECKPOINT_MAGIC)?;
    check_version(&mut r)?;
    let d_at = r.offset();
    let d = r.u32("input_dim")? as usize;
    let b_at = r.offset();
    let b = r.u32("bottleneck_dim")? as usize;
    if d == 0 {
        return Err(Error::format(d_at, "input_dim must be >= 1"));
    }
    if b == 0 {
        return Err(Error::format(b_at, "bottleneck_dim must be >= 1"));
    }
    let act_at = r.offset();
    let act_byte = r.u8("activation")?;
    let activation = Activation::from_byte(act_byte)
        .ok_or_else(|| Error::format(act_at, format!("invalid activation byte {act_byte}")))?;

    let expected = CHECKPOINT_HEADER_LEN + 8 * (2 * d as u64 * b as u64 + d as u64 + b as u64);
    if buf.len() as u64 != expected {
        return Err(Error::format(
            buf.len().min(expected as usize) as u64,
            format!("file length {} does not match header: expected {expected} bytes", buf.len()),
        ));
    }

    let mut read_tensor = |n: usize, what: &str| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let at = r.offset();
            let v = r.f64(what)?;
            if !v.is_finite() {
                return Err(Error::format(at, format!("non-finite value {v} in {what}")));
            }
            out.push(v);
        }
        Ok(out)
    };
    let enc_weight = Matrix::from_vec(b, d, read_tensor(b * d, "enc_weight")?)?;
    let enc_bias = read_tensor(b, "enc_bias")?;
    let dec_weight = Matrix::from_vec(d, b, read_tensor(d * b, "dec_weight")?)?;
    let dec_bias = read_tensor(d, "dec_bias")?;

    let config = CodecConfig {
        input_dim: d,
        ic_bytes: b,
        bottleneck_dim: b,
        activation,
    };
    Ok((
        CodecParams {
            enc_weight,
            enc_bias,
            dec_weight,
            dec_bias,
        },
        config,
    ))
}

/// Write verification pairs as text lines `id_a,id_b,flag` (flag 0/1).
pub fn write_pairs(pairs: &[(u32, u32, bool)], path: &Path) -> Result<()> {
    let mut out = String::new();
    for (a, b, same) in pairs {
        out.push_str(&format!("{a},{b},{}\n", u8::from(*same)));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read a pairs file written by `write_pairs`.
pub fn read_pairs(path: &Path) -> Result<Vec<(u32, u32, bool)>> {
    let text = fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::data(format!(
                "pairs line {}: expected 'id,id,flag', got '{line}'",
                lineno + 1
            )));
        }
        let a: u32 = parts[0]
            .trim()
            .parse()
            .map_err(|_| Error::data(format!("pairs line {}: bad id '{}'", lineno + 1, parts[0])))?;
        let b: u32 = parts[1]
            .trim()
            .parse()
            .map_err(|_| Error::data(format!("pairs line {}: bad id '{}'", lineno + 1, parts[1])))?;
        let same = match parts[2].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::data(format!(
                    "pairs line {}: flag must be 0 or 1, got '{other}'",
                    lineno + 1
                )))
            }
        };
        pairs.push((a, b, same));
    }
    Ok(pairs)
}
