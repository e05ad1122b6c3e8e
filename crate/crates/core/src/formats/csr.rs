use super::{Fiber, FormatError, IndexWidth};

/// Compressed sparse row matrix with 32-bit row pointers.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptrs: Vec<u32>,
    col_idcs: Vec<u64>,
    vals: Vec<f64>,
    width: IndexWidth,
}

impl CsrMatrix {
    pub fn new(
        nrows: usize,
        ncols: usize,
        row_ptrs: Vec<u32>,
        col_idcs: Vec<u64>,
        vals: Vec<f64>,
        width: IndexWidth,
    ) -> Result<Self, FormatError> {
        if row_ptrs.len() != nrows + 1 {
            return Err(FormatError::Invariant(format!(
                "{} row pointers for {nrows} rows",
                row_ptrs.len()
            )));
        }
        if col_idcs.len() != vals.len() {
            return Err(FormatError::Invariant(format!(
                "{} column indices but {} values",
                col_idcs.len(),
                vals.len()
            )));
        }
        if row_ptrs[0] != 0 || row_ptrs[nrows] as usize != vals.len() {
            return Err(FormatError::Invariant("row pointers must span [0, nnz]".into()));
        }
        if ncols > 0 && !width.fits(ncols as u64 - 1) {
            return Err(FormatError::WidthOverflow { value: ncols as u64 - 1, width });
        }
        for r in 0..nrows {
            let (lo, hi) = (row_ptrs[r] as usize, row_ptrs[r + 1] as usize);
            if lo > hi || hi > col_idcs.len() {
                return Err(FormatError::Invariant(format!("row pointers decrease at row {r}")));
            }
            let row = &col_idcs[lo..hi];
            for (k, &c) in row.iter().enumerate() {
                if c as usize >= ncols {
                    return Err(FormatError::Invariant(format!("column {c} outside {ncols} columns in row {r}")));
                }
                if k > 0 && row[k - 1] >= c {
                    return Err(FormatError::Invariant(format!("columns not strictly increasing in row {r}")));
                }
            }
        }
        Ok(Self { nrows, ncols, row_ptrs, col_idcs, vals, width })
    }

    /// Builds from coordinate triplets, summing duplicates.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
        width: IndexWidth,
    ) -> Result<Self, FormatError> {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        for &(r, c, _) in &sorted {
            if r >= nrows || c >= ncols {
                return Err(FormatError::InvalidArgument(format!(
                    "entry ({r}, {c}) outside {nrows}x{ncols}"
                )));
            }
        }
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptrs = vec![0u32; nrows + 1];
        let mut col_idcs: Vec<u64> = Vec::with_capacity(sorted.len());
        let mut vals: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            col_idcs.push(c as u64);
            vals.push(v);
            row_ptrs[r + 1] += 1;
        }
        for r in 0..nrows {
            row_ptrs[r + 1] += row_ptrs[r];
        }
        Self::new(nrows, ncols, row_ptrs, col_idcs, vals, width)
    }

    pub fn identity(n: usize, width: IndexWidth) -> Result<Self, FormatError> {
        let trip: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &trip, width)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row_ptrs(&self) -> &[u32] {
        &self.row_ptrs
    }

    pub fn col_idcs(&self) -> &[u64] {
        &self.col_idcs
    }

    pub fn vals(&self) -> &[f64] {
        &self.vals
    }

    pub fn width(&self) -> IndexWidth {
        self.width
    }

    pub fn with_width(self, width: IndexWidth) -> Result<Self, FormatError> {
        Self::new(self.nrows, self.ncols, self.row_ptrs, self.col_idcs, self.vals, width)
    }

    pub fn avg_row_nnz(&self) -> f64 {
        if self.nrows == 0 {
            0.0
        } else {
            self.nnz() as f64 / self.nrows as f64
        }
    }

    pub fn row_len(&self, r: usize) -> usize {
        (self.row_ptrs[r + 1] - self.row_ptrs[r]) as usize
    }

    pub fn row(&self, r: usize) -> (&[u64], &[f64]) {
        let (lo, hi) = (self.row_ptrs[r] as usize, self.row_ptrs[r + 1] as usize);
        (&self.col_idcs[lo..hi], &self.vals[lo..hi])
    }

    pub fn row_fiber(&self, r: usize) -> Fiber {
        let (c, v) = self.row(r);
        Fiber::new(v.to_vec(), c.to_vec(), self.ncols as u64, self.width).expect("rows satisfy fiber invariants")
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows)
            .flat_map(|r| {
                let (c, v) = self.row(r);
                c.iter().zip(v).map(move |(&c, &v)| (r, c as usize, v))
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, c, v) in self.triplets() {
            out[r][c] = v;
        }
        out
    }
}

/// Transposed storage: iterating the result's rows walks the input's columns.
pub fn csr_to_csc(m: &CsrMatrix) -> Result<CsrMatrix, FormatError> {
    let mut counts = vec![0u32; m.ncols + 1];
    for &c in &m.col_idcs {
        counts[c as usize + 1] += 1;
    }
    for c in 0..m.ncols {
        counts[c + 1] += counts[c];
    }
    let row_ptrs = counts.clone();
    let mut next = counts;
    let mut col_idcs = vec![0u64; m.nnz()];
    let mut vals = vec![0.0; m.nnz()];
    // Visiting rows in order keeps each output fiber sorted.
    for r in 0..m.nrows {
        let (cs, vs) = m.row(r);
        for (&c, &v) in cs.iter().zip(vs) {
            let slot = next[c as usize] as usize;
            col_idcs[slot] = r as u64;
            vals[slot] = v;
            next[c as usize] += 1;
        }
    }
    CsrMatrix::new(m.ncols, m.nrows, row_ptrs, col_idcs, vals, m.width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_layout() {
        let m = CsrMatrix::identity(2, IndexWidth::W16).unwrap();
        assert_eq!(m.row_ptrs(), &[0, 1, 2]);
        assert_eq!(m.col_idcs(), &[0, 1]);
        assert_eq!(m.vals(), &[1.0, 1.0]);
        assert_eq!(csr_to_csc(&m).unwrap(), m);
    }

    #[test]
    fn row_transposes_to_column() {
        let m = CsrMatrix::from_triplets(1, 3, &[(0, 0, 1.0), (0, 1, 2.0), (0, 2, 3.0)], IndexWidth::W8).unwrap();
        let t = csr_to_csc(&m).unwrap();
        assert_eq!((t.nrows(), t.ncols()), (3, 1));
        assert_eq!(t.row_ptrs(), &[0, 1, 2, 3]);
        assert_eq!(t.col_idcs(), &[0, 0, 0]);
        assert_eq!(t.vals(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn duplicates_sum() {
        let m = CsrMatrix::from_triplets(4, 6, &[(2, 4, 2.0), (2, 4, 2.0)], IndexWidth::W8).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.vals(), &[4.0]);
    }

    #[test]
    fn rejects_bad_structure() {
        assert!(CsrMatrix::new(2, 2, vec![0, 2, 1], vec![0], vec![1.0], IndexWidth::W8).is_err());
        assert!(CsrMatrix::new(1, 2, vec![0, 2], vec![1, 0], vec![1.0, 1.0], IndexWidth::W8).is_err());
        assert!(CsrMatrix::new(1, 2, vec![0, 1], vec![2], vec![1.0], IndexWidth::W8).is_err());
        assert!(matches!(
            CsrMatrix::new(1, 300, vec![0, 0], vec![], vec![], IndexWidth::W8),
            Err(FormatError::WidthOverflow { .. })
        ));
    }

    fn dense_transpose_oracle(m: &CsrMatrix) -> CsrMatrix {
        let d = m.to_dense();
        let mut trip = Vec::new();
        for c in 0..m.ncols() {
            for (r, row) in d.iter().enumerate() {
                if row[c] != 0.0 {
                    trip.push((c, r, row[c]));
                }
            }
        }
        CsrMatrix::from_triplets(m.ncols(), m.nrows(), &trip, m.width()).unwrap()
    }

    #[test]
    fn random_8x8_matches_dense_transpose() {
        let m = crate::formats::gen_csr(&crate::formats::SyntheticCsr {
            nrows: 8,
            ncols: 8,
            nnz: 12,
            seed: 3,
            width: IndexWidth::W8,
        })
        .unwrap();
        assert_eq!(m.nnz(), 12);
        assert_eq!(csr_to_csc(&m).unwrap(), dense_transpose_oracle(&m));
    }

    proptest! {
        #[test]
        fn transpose_preserves_triplets(nrows in 1usize..12, ncols in 1usize..12, seed in 0u64..1000) {
            let nnz = (nrows * ncols) / 3;
            let m = crate::formats::gen_csr(&crate::formats::SyntheticCsr {
                nrows, ncols, nnz, seed, width: IndexWidth::W16,
            }).unwrap();
            let t = csr_to_csc(&m).unwrap();
            let mut a: Vec<_> = m.triplets().into_iter().map(|(r, c, v)| (r, c, v.to_bits())).collect();
            let mut b: Vec<_> = t.triplets().into_iter().map(|(c, r, v)| (r, c, v.to_bits())).collect();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
            prop_assert_eq!(csr_to_csc(&t).unwrap(), m);
        }
    }
}
