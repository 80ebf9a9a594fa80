//! Binary pattern-set (`QVP1`) and network snapshot (`QVN1`) files.
//!
//! All integers are little-endian.
//!
//! ```text
//! QVP1  "QVP1" q:u32 N:u32 M:u32 symbols[M*N]   (u8 when q <= 256, else u16)
//! QVN1  "QVN1" q:u32 N:u32 n:u32 M:u32 blocks[n*N*q*q]:u32 bias[n*q]:u32
//! ```
//!
//! Pattern files carry no keys: the pattern at position `μ` is keyed by
//! `encode_key(μ)`. Snapshot blocks are in `(i, j, a, b)` row-major order.
//! Whether diagonal blocks were excluded is not stored; it is read back from
//! the blocks themselves (all diagonal blocks zero means excluded).

use std::io::{self, Read, Write};

use crate::codec::{Dimensions, QPattern};
use crate::error::{QvamError, Result};
use crate::memory::HebbNetwork;

pub const PATTERN_MAGIC: &[u8; 4] = b"QVP1";
pub const NETWORK_MAGIC: &[u8; 4] = b"QVN1";

/// Largest alphabet a pattern file can hold.
pub const MAX_FILE_Q: u32 = 65_536;

fn malformed(format: &'static str, reason: impl Into<String>) -> QvamError {
    QvamError::Format {
        format,
        reason: reason.into(),
    }
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_magic<R: Read>(r: &mut R, magic: &[u8; 4], format: &'static str) -> Result<()> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|_| malformed(format, "truncated header"))?;
    if &buf != magic {
        return Err(malformed(format, format!("bad magic {buf:?}")));
    }
    Ok(())
}

fn expect_eof<R: Read>(r: &mut R, format: &'static str) -> Result<()> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => Ok(()),
        _ => Err(malformed(format, "trailing bytes after payload")),
    }
}

fn truncated(format: &'static str) -> impl Fn(io::Error) -> QvamError {
    move |e| match e.kind() {
        io::ErrorKind::UnexpectedEof => malformed(format, "truncated payload"),
        _ => QvamError::Io(e),
    }
}

/// Contents of a `QVP1` file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSet {
    pub q: u32,
    pub pattern_len: usize,
    pub patterns: Vec<QPattern>,
}

/// Writes `patterns` (all of length `pattern_len` over `q`) as `QVP1`.
pub fn write_patterns<W: Write>(
    mut w: W,
    q: u32,
    pattern_len: usize,
    patterns: &[QPattern],
) -> Result<()> {
    if !(2..=MAX_FILE_Q).contains(&q) {
        return Err(QvamError::InvalidAlphabet(q as u64));
    }
    let as_u32 = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| QvamError::Overflow(format!("{what} = {v} exceeds u32")))
    };
    w.write_all(PATTERN_MAGIC)?;
    w.write_all(&q.to_le_bytes())?;
    w.write_all(&as_u32(pattern_len, "N")?.to_le_bytes())?;
    w.write_all(&as_u32(patterns.len(), "M")?.to_le_bytes())?;
    let mut buf = Vec::with_capacity(pattern_len * if q <= 256 { 1 } else { 2 });
    for p in patterns {
        p.conforms(pattern_len, q)?;
        buf.clear();
        for &s in p.symbols() {
            if q <= 256 {
                buf.push(s as u8);
            } else {
                buf.extend_from_slice(&(s as u16).to_le_bytes());
            }
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_patterns<R: Read>(mut r: R) -> Result<PatternSet> {
    const F: &str = "QVP1";
    read_magic(&mut r, PATTERN_MAGIC, F)?;
    let header = |r: &mut R| read_u32(r).map_err(|_| malformed(F, "truncated header"));
    let q = header(&mut r)?;
    let pattern_len = header(&mut r)? as usize;
    let count = header(&mut r)? as usize;
    if !(2..=MAX_FILE_Q).contains(&q) {
        return Err(malformed(F, format!("alphabet q = {q} outside 2..=65536")));
    }
    if count > 0 && pattern_len == 0 {
        return Err(malformed(F, "patterns of length zero"));
    }
    let width = if q <= 256 { 1 } else { 2 };
    let mut raw = vec![0u8; pattern_len * width];
    let mut patterns = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        r.read_exact(&mut raw).map_err(truncated(F))?;
        let symbols = if width == 1 {
            raw.iter().map(|&b| b as u32).collect()
        } else {
            raw.chunks_exact(2)
                .map(|c| u16::from_le_bytes([c[0], c[1]]) as u32)
                .collect()
        };
        patterns.push(QPattern::new(symbols, q).map_err(|e| malformed(F, e.to_string()))?);
    }
    expect_eof(&mut r, F)?;
    Ok(PatternSet {
        q,
        pattern_len,
        patterns,
    })
}

/// Writes a trained network as `QVN1`.
pub fn write_network<W: Write>(mut w: W, net: &HebbNetwork) -> Result<()> {
    let d = net.dims();
    let fields = [
        d.q() as u64,
        d.pattern_len() as u64,
        d.key_len() as u64,
        d.pattern_count(),
    ];
    w.write_all(NETWORK_MAGIC)?;
    for v in fields {
        let v = u32::try_from(v)
            .map_err(|_| QvamError::Overflow(format!("dimension {v} exceeds u32")))?;
        w.write_all(&v.to_le_bytes())?;
    }
    let blocks = net.blocks_row_major();
    let bias = (0..d.key_len()).flat_map(|i| net.bias_counts(i).iter().copied());
    let mut buf = Vec::with_capacity(1 << 16);
    for c in blocks.into_iter().chain(bias) {
        buf.extend_from_slice(&c.to_le_bytes());
        if buf.len() >= 1 << 16 {
            w.write_all(&buf)?;
            buf.clear();
        }
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_network<R: Read>(mut r: R) -> Result<HebbNetwork> {
    const F: &str = "QVN1";
    read_magic(&mut r, NETWORK_MAGIC, F)?;
    let mut header = [0u32; 4];
    for h in &mut header {
        *h = read_u32(&mut r).map_err(|_| malformed(F, "truncated header"))?;
    }
    let [q, pattern_len, key_len, count] = header;
    let dims = Dimensions::with_key_len(pattern_len as usize, count as u64, q, key_len as usize)
        .map_err(|e| malformed(F, e.to_string()))?;
    let (q, big_n, n) = (q as usize, pattern_len as usize, key_len as usize);
    let cells = n
        .checked_mul(big_n)
        .and_then(|v| v.checked_mul(q))
        .and_then(|v| v.checked_mul(q))
        .ok_or_else(|| malformed(F, "block grid size overflows"))?;

    let read_counts = |r: &mut R, len: usize| -> Result<Vec<u32>> {
        let mut out = Vec::with_capacity(len.min(1 << 24));
        let mut buf = vec![0u8; 4 * len.clamp(1, 1 << 14)];
        let mut left = len;
        while left > 0 {
            let take = left.min(buf.len() / 4);
            r.read_exact(&mut buf[..4 * take]).map_err(truncated(F))?;
            out.extend(
                buf[..4 * take]
                    .chunks_exact(4)
                    .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])),
            );
            left -= take;
        }
        Ok(out)
    };
    let blocks = read_counts(&mut r, cells)?;
    let bias = read_counts(&mut r, n * q)?;
    expect_eof(&mut r, F)?;

    let diagonal_zero = (0..n.min(big_n)).all(|i| {
        let start = (i * big_n + i) * q * q;
        blocks[start..start + q * q].iter().all(|&c| c == 0)
    });
    HebbNetwork::from_parts(dims, diagonal_zero, &blocks, &bias)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::KeyScheme;
    use crate::memory::{Recall, TrainOptions};

    fn sample(q: u32) -> Vec<QPattern> {
        (0..3u32)
            .map(|m| QPattern::new((0..4).map(|j| (m * 5 + j * 3 + 1) % q).collect(), q).unwrap())
            .collect()
    }

    #[test]
    fn pattern_file_layout_small_alphabet() {
        let ps = vec![
            QPattern::new(vec![0, 1, 1, 0], 2).unwrap(),
            QPattern::new(vec![1, 1, 0, 0], 2).unwrap(),
        ];
        let mut buf = Vec::new();
        write_patterns(&mut buf, 2, 4, &ps).unwrap();
        let mut expect = b"QVP1".to_vec();
        for v in [2u32, 4, 2] {
            expect.extend_from_slice(&v.to_le_bytes());
        }
        expect.extend_from_slice(&[0, 1, 1, 0, 1, 1, 0, 0]);
        assert_eq!(buf, expect);
        assert_eq!(read_patterns(&buf[..]).unwrap().patterns, ps);
    }

    #[test]
    fn pattern_file_uses_u16_above_256() {
        let ps = vec![QPattern::new(vec![299, 2], 300).unwrap()];
        let mut buf = Vec::new();
        write_patterns(&mut buf, 300, 2, &ps).unwrap();
        assert_eq!(buf.len(), 16 + 4);
        assert_eq!(&buf[16..], &[0x2B, 0x01, 0x02, 0x00]);
        assert_eq!(read_patterns(&buf[..]).unwrap().patterns, ps);
    }

    #[test]
    fn corrupt_pattern_files_rejected() {
        let mut buf = Vec::new();
        write_patterns(&mut buf, 4, 4, &sample(4)).unwrap();
        assert!(read_patterns(&buf[..buf.len() - 1]).is_err());
        let mut extra = buf.clone();
        extra.push(0);
        assert!(read_patterns(&extra[..]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_patterns(&bad[..]).is_err());
        let mut out_of_range = buf.clone();
        out_of_range[16] = 9;
        assert!(read_patterns(&out_of_range[..]).is_err());
    }

    #[test]
    fn network_snapshot_round_trip() {
        for exclude_diagonal in [true, false] {
            let ps = sample(5);
            let dims = Dimensions::new(4, 3, 5).unwrap();
            let keys = KeyScheme::Index.assign(&dims).unwrap();
            let net =
                HebbNetwork::train_with(&ps, &keys, TrainOptions { exclude_diagonal }).unwrap();
            let mut buf = Vec::new();
            write_network(&mut buf, &net).unwrap();
            assert_eq!(buf.len(), 20 + 4 * (4 * 25 + 5));
            let back = read_network(&buf[..]).unwrap();
            assert_eq!(back, net);
            for p in &ps {
                assert_eq!(back.identify(p).unwrap(), net.identify(p).unwrap());
            }
        }
    }

    #[test]
    fn snapshot_with_broken_mass_rejected() {
        let net = HebbNetwork::train_indexed(&sample(5)).unwrap();
        let mut buf = Vec::new();
        write_network(&mut buf, &net).unwrap();
        // Bump a count inside block (0, 1).
        let off = 20 + 4 * 25;
        buf[off] = buf[off].wrapping_add(1);
        assert!(read_network(&buf[..]).is_err());
        assert!(read_network(&buf[..30]).is_err());
    }
}
