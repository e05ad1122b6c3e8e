//! Matrix Market coordinate reader and a small binary CSR cache.

use std::io::{Read, Write};
use std::path::Path;

use super::{CsrMatrix, FormatError, IndexWidth};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtxField {
    Real,
    Integer,
    Pattern,
}

const CACHE_MAGIC: &[u8; 8] = b"SSRCSR01";

pub fn load_matrix_market(path: &Path, width: IndexWidth) -> Result<(CsrMatrix, MtxField), FormatError> {
    let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_matrix_market(&text, &path.display().to_string(), width)
}

/// Parses coordinate-format text. `origin` labels errors.
pub fn parse_matrix_market(text: &str, origin: &str, width: IndexWidth) -> Result<(CsrMatrix, MtxField), FormatError> {
    let err = |line: usize, msg: String| FormatError::Parse { path: origin.to_string(), line, msg };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (hline, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let h: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if h.len() != 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" {
        return Err(err(hline, format!("bad header `{header}`")));
    }
    if h[2] != "coordinate" {
        return Err(err(hline, format!("only coordinate format is supported, got `{}`", h[2])));
    }
    let field = match h[3].as_str() {
        "real" | "double" => MtxField::Real,
        "integer" => MtxField::Integer,
        "pattern" => MtxField::Pattern,
        other => return Err(err(hline, format!("unsupported field `{other}`"))),
    };
    let symmetric = match h[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(err(hline, format!("unsupported symmetry `{other}`"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen = 0usize;
    for (ln, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        let Some((nrows, ncols, nnz)) = size else {
            if tok.len() != 3 {
                return Err(err(ln, format!("expected `rows cols nnz`, got `{line}`")));
            }
            let p = |s: &str| s.parse::<usize>().map_err(|_| err(ln, format!("bad size field `{s}`")));
            let dims = (p(tok[0])?, p(tok[1])?, p(tok[2])?);
            if dims.1 > 0 && !width.fits(dims.1 as u64 - 1) {
                return Err(FormatError::WidthOverflow { value: dims.1 as u64 - 1, width });
            }
            triplets.reserve(if symmetric { 2 * dims.2 } else { dims.2 });
            size = Some(dims);
            continue;
        };
        let want = if field == MtxField::Pattern { 2 } else { 3 };
        if tok.len() != want {
            return Err(err(ln, format!("expected {want} fields, got {}", tok.len())));
        }
        let idx = |s: &str, bound: usize| -> Result<usize, FormatError> {
            let v = s.parse::<usize>().map_err(|_| err(ln, format!("bad index `{s}`")))?;
            if v == 0 || v > bound {
                return Err(err(ln, format!("index {v} outside 1..={bound}")));
            }
            Ok(v - 1)
        };
        let r = idx(tok[0], nrows)?;
        let c = idx(tok[1], ncols)?;
        let v = if field == MtxField::Pattern {
            1.0
        } else {
            tok[2].parse::<f64>().map_err(|_| err(ln, format!("bad value `{}`", tok[2])))?
        };
        seen += 1;
        if seen > nnz {
            return Err(err(ln, format!("more than the declared {nnz} entries")));
        }
        triplets.push((r, c, v));
        if symmetric && r != c {
            triplets.push((c, r, v));
        }
    }
    let (nrows, ncols, nnz) = size.ok_or_else(|| err(text.lines().count().max(1), "missing size line".into()))?;
    if seen != nnz {
        return Err(err(text.lines().count(), format!("declared {nnz} entries, found {seen}")));
    }
    Ok((CsrMatrix::from_triplets(nrows, ncols, &triplets, width)?, field))
}

pub fn save_csr_cache(path: &Path, m: &CsrMatrix) -> Result<(), FormatError> {
    let io = |source| FormatError::Io { path: path.display().to_string(), source };
    let mut buf = Vec::with_capacity(32 + m.nrows() * 4 + m.nnz() * 16);
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    buf.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    buf.extend_from_slice(&(m.nnz() as u64).to_le_bytes());
    buf.push(m.width().bits() as u8);
    for p in m.row_ptrs() {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    for c in m.col_idcs() {
        buf.extend_from_slice(&c.to_le_bytes());
    }
    for v in m.vals() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::File::create(path).and_then(|mut f| f.write_all(&buf)).map_err(io)
}

pub fn load_csr_cache(path: &Path) -> Result<CsrMatrix, FormatError> {
    let name = path.display().to_string();
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|source| FormatError::Io { path: name.clone(), source })?;
    let bad = |msg: &str| FormatError::Parse { path: name.clone(), line: 0, msg: msg.to_string() };
    if buf.len() < 33 || &buf[..8] != CACHE_MAGIC {
        return Err(bad("not a CSR cache file (bad magic)"));
    }
    let u64_at = |o: usize| u64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
    let (nrows, ncols, nnz) = (u64_at(8) as usize, u64_at(16) as usize, u64_at(24) as usize);
    let width = IndexWidth::from_bits(buf[32] as u32).ok_or_else(|| bad("bad index width"))?;
    let need = 33 + (nrows + 1) * 4 + nnz * 16;
    if buf.len() != need {
        return Err(bad("truncated cache file"));
    }
    let mut o = 33;
    let row_ptrs = (0..=nrows)
        .map(|i| u32::from_le_bytes(buf[o + 4 * i..o + 4 * i + 4].try_into().unwrap()))
        .collect();
    o += (nrows + 1) * 4;
    let col_idcs = (0..nnz).map(|i| u64_at(o + 8 * i)).collect();
    o += nnz * 8;
    let vals = (0..nnz).map(|i| f64::from_le_bytes(buf[o + 8 * i..o + 8 * i + 8].try_into().unwrap())).collect();
    CsrMatrix::new(nrows, ncols, row_ptrs, col_idcs, vals, width)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<CsrMatrix, FormatError> {
        parse_matrix_market(text, "test.mtx", IndexWidth::W16).map(|(m, _)| m)
    }

    #[test]
    fn identity() {
        let m = parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n2 2 1\n").unwrap();
        assert_eq!(m.row_ptrs(), &[0, 1, 2]);
        assert_eq!(m.col_idcs(), &[0, 1]);
        assert_eq!(m.vals(), &[1.0, 1.0]);
    }

    #[test]
    fn duplicates_sum() {
        let text = "%%MatrixMarket matrix coordinate real general\n% comment\n4 6 2\n3 5 2.0\n3 5 2.0\n";
        let m = parse(text).unwrap();
        let mut naive = std::collections::BTreeMap::new();
        for (r, c, v) in [(2usize, 4usize, 2.0f64), (2, 4, 2.0)] {
            *naive.entry((r, c)).or_insert(0.0) += v;
        }
        let got: Vec<_> = m.triplets().into_iter().map(|(r, c, v)| ((r, c), v)).collect();
        assert_eq!(got, naive.into_iter().collect::<Vec<_>>());
        assert_eq!(m.vals(), &[4.0]);
    }

    #[test]
    fn symmetric_mirrors() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n3 3 2\n2 1 5.0\n3 3 1.0\n";
        let m = parse(text).unwrap();
        let d = m.to_dense();
        assert_eq!(d[1][0], 5.0);
        assert_eq!(d[0][1], 5.0);
        assert_eq!(d[2][2], 1.0);
        assert_eq!(m.nnz(), 3);
    }

    #[test]
    fn pattern_entries_are_one() {
        let (m, f) =
            parse_matrix_market("%%MatrixMarket matrix coordinate pattern general\n2 3 2\n1 3\n2 1\n", "p", IndexWidth::W8)
                .unwrap();
        assert_eq!(f, MtxField::Pattern);
        assert_eq!(m.vals(), &[1.0, 1.0]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n2 x 1\n").unwrap_err();
        assert!(matches!(e, FormatError::Parse { line: 4, .. }), "{e}");
        let e = parse("%%MatrixMarket matrix array real general\n2 2\n").unwrap_err();
        assert!(matches!(e, FormatError::Parse { line: 1, .. }));
        let e = parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n").unwrap_err();
        assert!(matches!(e, FormatError::Parse { line: 3, .. }));
        let e = parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 300 0\n", "w", IndexWidth::W8)
            .unwrap_err();
        assert!(matches!(e, FormatError::WidthOverflow { .. }));
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        let m = crate::formats::gen_csr(&crate::formats::SyntheticCsr {
            nrows: 20,
            ncols: 30,
            nnz: 90,
            seed: 1,
            width: IndexWidth::W16,
        })
        .unwrap();
        save_csr_cache(&p, &m).unwrap();
        assert_eq!(load_csr_cache(&p).unwrap(), m);
        std::fs::write(&p, b"garbage").unwrap();
        assert!(load_csr_cache(&p).is_err());
    }
}
