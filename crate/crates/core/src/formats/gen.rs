//! Seeded synthetic operands.
//!
//! Every generator draws from `ChaCha8Rng::seed_from_u64(seed)`, so a seed
//! names the same data on every platform.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{CsrMatrix, Fiber, FormatError, IndexWidth};

/// Uniformly random `nnz`-subset of `[0, dense_len)` with standard normal values.
pub fn gen_sparse_vector(dense_len: u64, nnz: u64, seed: u64, width: IndexWidth) -> Result<Fiber, FormatError> {
    if nnz > dense_len {
        return Err(FormatError::InvalidArgument(format!("nnz {nnz} exceeds dense length {dense_len}")));
    }
    if nnz > 0 && !width.fits(dense_len - 1) {
        return Err(FormatError::WidthOverflow { value: dense_len - 1, width });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<u64> = sample(&mut rng, dense_len as usize, nnz as usize)
        .into_iter()
        .map(|i| i as u64)
        .collect();
    indices.sort_unstable();
    let values = (0..nnz).map(|_| rng.sample(StandardNormal)).collect();
    Fiber::new(values, indices, dense_len, width)
}

pub fn gen_dense_vector(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

#[derive(Debug, Clone)]
pub struct SyntheticCsr {
    pub nrows: usize,
    pub ncols: usize,
    pub nnz: usize,
    pub seed: u64,
    pub width: IndexWidth,
}

/// Random CSR with exactly `nnz` entries.
///
/// Row lengths start uniform in `[avg/2, 3avg/2]` and are then nudged one at
/// a time until they sum to `nnz`; columns within a row are a uniform subset.
pub fn gen_csr(spec: &SyntheticCsr) -> Result<CsrMatrix, FormatError> {
    let SyntheticCsr { nrows, ncols, nnz, seed, width } = *spec;
    if nnz > nrows * ncols {
        return Err(FormatError::InvalidArgument(format!("{nnz} nonzeros do not fit {nrows}x{ncols}")));
    }
    if ncols > 0 && !width.fits(ncols as u64 - 1) {
        return Err(FormatError::WidthOverflow { value: ncols as u64 - 1, width });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lens = vec![0usize; nrows];
    if nrows > 0 {
        let avg = nnz as f64 / nrows as f64;
        let lo = (avg * 0.5).floor() as usize;
        let hi = ((avg * 1.5).ceil() as usize).min(ncols);
        for l in lens.iter_mut() {
            *l = rng.random_range(lo.min(hi)..=hi);
        }
        let mut total: usize = lens.iter().sum();
        while total != nnz {
            let r = rng.random_range(0..nrows);
            if total < nnz && lens[r] < ncols {
                lens[r] += 1;
                total += 1;
            } else if total > nnz && lens[r] > 0 {
                lens[r] -= 1;
                total -= 1;
            }
        }
    }
    let mut row_ptrs = Vec::with_capacity(nrows + 1);
    row_ptrs.push(0u32);
    let mut col_idcs = Vec::with_capacity(nnz);
    let mut vals = Vec::with_capacity(nnz);
    for &len in &lens {
        let mut cols: Vec<u64> = sample(&mut rng, ncols, len).into_iter().map(|c| c as u64).collect();
        cols.sort_unstable();
        col_idcs.extend(cols);
        vals.extend((0..len).map(|_| rng.sample::<f64, _>(StandardNormal)));
        row_ptrs.push(col_idcs.len() as u32);
    }
    CsrMatrix::new(nrows, ncols, row_ptrs, col_idcs, vals, width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_nnz_is_empty() {
        let f = gen_sparse_vector(60000, 0, 1, IndexWidth::W16).unwrap();
        assert!(f.is_empty());
        assert_eq!(f.dense_len(), 60000);
    }

    #[test]
    fn full_density_is_identity_set() {
        let f = gen_sparse_vector(256, 256, 7, IndexWidth::W8).unwrap();
        assert_eq!(f.indices(), (0..256).collect::<Vec<u64>>().as_slice());
    }

    #[test]
    fn sorted_distinct_in_range() {
        let f = gen_sparse_vector(100, 10, 42, IndexWidth::W8).unwrap();
        let idx = f.indices();
        assert_eq!(idx.len(), 10);
        for i in 0..idx.len() {
            assert!(idx[i] < 100);
            for j in 0..i {
                assert!(idx[j] < idx[i]);
            }
        }
    }

    #[test]
    fn argument_errors() {
        assert!(matches!(
            gen_sparse_vector(10, 11, 0, IndexWidth::W8),
            Err(FormatError::InvalidArgument(_))
        ));
        assert!(matches!(
            gen_sparse_vector(300, 5, 0, IndexWidth::W8),
            Err(FormatError::WidthOverflow { .. })
        ));
    }

    #[test]
    fn csr_row_lengths_sum() {
        let m = gen_csr(&SyntheticCsr { nrows: 100, ncols: 500, nnz: 5000, seed: 9, width: IndexWidth::W16 }).unwrap();
        assert_eq!(m.nnz(), 5000);
        assert!((0..100).all(|r| m.row_len(r) <= 500));
    }

    proptest! {
        #[test]
        fn generator_is_reproducible(len in 1u64..2000, frac in 0.0f64..1.0, seed: u64) {
            let nnz = (len as f64 * frac) as u64;
            let a = gen_sparse_vector(len, nnz, seed, IndexWidth::W16).unwrap();
            let b = gen_sparse_vector(len, nnz, seed, IndexWidth::W16).unwrap();
            prop_assert_eq!(a.indices(), b.indices());
            let bits = |f: &Fiber| f.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&a), bits(&b));
            let dense = a.densify();
            prop_assert_eq!(dense.len() as u64, len);
            prop_assert_eq!(a.nnz() as u64, nnz);
            // Standard normal draws are never exactly zero in practice.
            prop_assert_eq!(dense.iter().filter(|v| **v != 0.0).count() as u64, nnz);
        }
    }
}
