//! Dense brute-force reference results. Nothing here touches the streamer,
//! the assembler or the kernel programs.

use std::collections::BTreeSet;

use crate::formats::{CsrMatrix, DenseVector, Fiber};
use crate::kernels::{DenseMatrix, KernelId, KernelOutput, Operands};

/// Reference result and, per output element, the sum of absolute values of
/// the terms that produced it (the scale for rounding-error tolerances).
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub output: KernelOutput,
    pub magnitude: Vec<f64>,
}

fn dense_of(v: &DenseVector) -> Vec<f64> {
    v.values().to_vec()
}

fn sparse_to(a: &Fiber, vals: Vec<f64>, idx: Vec<u64>) -> Fiber {
    Fiber::new(vals, idx, a.dense_len(), a.width()).expect("indices come from a valid fiber")
}

fn dot(a: &[f64], b: &[f64]) -> (f64, f64) {
    a.iter().zip(b).fold((0.0, 0.0), |(s, m), (x, y)| (s + x * y, m + (x * y).abs()))
}

fn matvec(a: &CsrMatrix, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    a.to_dense().iter().map(|row| dot(row, x)).unzip()
}

fn matmat(a: &CsrMatrix, b: &DenseMatrix) -> (DenseMatrix, Vec<f64>) {
    let ad = a.to_dense();
    let mut c = DenseMatrix::zeros(a.nrows(), b.cols);
    let mut mag = vec![0.0; a.nrows() * b.cols];
    for (r, row) in ad.iter().enumerate() {
        for j in 0..b.cols {
            let (s, m) = dot(row, &b.column(j));
            c.data[r * b.cols + j] = s;
            mag[r * b.cols + j] = m;
        }
    }
    (c, mag)
}

/// The exact functional result of `kernel` on `ops`, computed over densified operands.
///
/// Panics if the operands do not belong to the kernel.
pub fn reference(kernel: KernelId, ops: &Operands) -> Reference {
    use KernelId::*;
    match (kernel, ops) {
        (SvXdV, Operands::SparseDense { a, b }) => {
            let (s, m) = dot(&a.densify(), &dense_of(b));
            Reference { output: KernelOutput::Scalar(s), magnitude: vec![m] }
        }
        (SvPdV, Operands::SparseDense { a, b }) => {
            let mut c = dense_of(b);
            let ad = a.densify();
            let mag = c.iter().zip(&ad).map(|(x, y)| x.abs() + y.abs()).collect();
            for (x, y) in c.iter_mut().zip(&ad) {
                *x += y;
            }
            Reference { output: KernelOutput::Dense(c), magnitude: mag }
        }
        (SvHdV, Operands::SparseDense { a, b }) => {
            let bd = dense_of(b);
            let ad = a.densify();
            let idx = a.indices().to_vec();
            let vals: Vec<f64> = idx.iter().map(|&i| ad[i as usize] * bd[i as usize]).collect();
            let mag = vals.iter().map(|v| v.abs()).collect();
            Reference { output: KernelOutput::Sparse(sparse_to(a, vals, idx)), magnitude: mag }
        }
        (SvXsV, Operands::SparseSparse { a, b }) => {
            let (s, m) = dot(&a.densify(), &b.densify());
            Reference { output: KernelOutput::Scalar(s), magnitude: vec![m] }
        }
        (SvPsV | SvHsV, Operands::SparseSparse { a, b }) => {
            let sa: BTreeSet<u64> = a.indices().iter().copied().collect();
            let sb: BTreeSet<u64> = b.indices().iter().copied().collect();
            let idx: Vec<u64> = if kernel == SvPsV {
                sa.union(&sb).copied().collect()
            } else {
                sa.intersection(&sb).copied().collect()
            };
            let (ad, bd) = (a.densify(), b.densify());
            let (vals, mag): (Vec<f64>, Vec<f64>) = idx
                .iter()
                .map(|&i| {
                    let (x, y) = (ad[i as usize], bd[i as usize]);
                    if kernel == SvPsV {
                        (x + y, x.abs() + y.abs())
                    } else {
                        (x * y, (x * y).abs())
                    }
                })
                .unzip();
            Reference { output: KernelOutput::Sparse(sparse_to(a, vals, idx)), magnitude: mag }
        }
        (SmXdV, Operands::MatVec { a, x, .. }) => {
            let (y, mag) = matvec(a, &dense_of(x));
            Reference { output: KernelOutput::Dense(y), magnitude: mag }
        }
        (SmXdM, Operands::MatMat { a, b }) => {
            let (c, mag) = matmat(a, b);
            Reference { output: KernelOutput::Matrix(c), magnitude: mag }
        }
        (SmXsV, Operands::MatSparseVec { a, b }) => {
            let (y, mag) = matvec(a, &b.densify());
            Reference { output: KernelOutput::Dense(y), magnitude: mag }
        }
        (SmXsM, Operands::MatSparseMat { a, b }) => {
            let bd = b.to_dense();
            let b = DenseMatrix::new(b.nrows(), b.ncols(), bd.concat()).expect("dense rows have equal length");
            let (c, mag) = matmat(a, &b);
            Reference { output: KernelOutput::Matrix(c), magnitude: mag }
        }
        (k, _) => panic!("{k} does not take these operands"),
    }
}

/// The oracle result alone.
pub fn oracle(kernel: KernelId, ops: &Operands) -> KernelOutput {
    reference(kernel, ops).output
}

fn values(out: &KernelOutput) -> Vec<f64> {
    match out {
        KernelOutput::Scalar(s) => vec![*s],
        KernelOutput::Dense(v) => v.clone(),
        KernelOutput::Sparse(f) => f.values().to_vec(),
        KernelOutput::Matrix(m) => m.data.clone(),
    }
}

/// Largest error relative to the term magnitudes, or a description of a
/// structural mismatch (shape, length or sparsity pattern).
pub fn relative_error(got: &KernelOutput, want: &Reference) -> Result<f64, String> {
    match (got, &want.output) {
        (KernelOutput::Scalar(_), KernelOutput::Scalar(_)) | (KernelOutput::Dense(_), KernelOutput::Dense(_)) => {}
        (KernelOutput::Sparse(g), KernelOutput::Sparse(w)) => {
            if g.indices() != w.indices() {
                return Err(format!("pattern {:?} != {:?}", g.indices(), w.indices()));
            }
        }
        (KernelOutput::Matrix(g), KernelOutput::Matrix(w)) => {
            if (g.rows, g.cols) != (w.rows, w.cols) {
                return Err(format!("shape {}x{} != {}x{}", g.rows, g.cols, w.rows, w.cols));
            }
        }
        (g, w) => return Err(format!("output kind {g:?} != {w:?}")),
    }
    let (g, w) = (values(got), values(&want.output));
    if g.len() != w.len() {
        return Err(format!("{} values, expected {}", g.len(), w.len()));
    }
    let mut worst: f64 = 0.0;
    for ((x, y), m) in g.iter().zip(&w).zip(&want.magnitude) {
        if x.is_nan() || y.is_nan() {
            return Err("NaN in result".into());
        }
        let e = (x - y).abs();
        worst = worst.max(if *m > 0.0 { e / m } else { e });
    }
    Ok(worst)
}

/// Accepts `got` if it is structurally equal to the reference and every
/// element is within `tol` relative error.
pub fn check(got: &KernelOutput, want: &Reference, tol: f64) -> Result<(), String> {
    let e = relative_error(got, want)?;
    if e <= tol {
        Ok(())
    } else {
        Err(format!("relative error {e:e} above {tol:e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::IndexWidth;

    #[test]
    fn single_match_dot() {
        let w = IndexWidth::W16;
        let a = Fiber::new(vec![3.0], vec![2], 8, w).unwrap();
        let b = Fiber::new(vec![4.0], vec![2], 8, w).unwrap();
        assert_eq!(oracle(KernelId::SvXsV, &Operands::SparseSparse { a, b }), KernelOutput::Scalar(12.0));
    }

    #[test]
    fn adding_empty_fiber_is_identity() {
        let w = IndexWidth::W16;
        let a = Fiber::new(vec![1.5, -2.0], vec![1, 6], 8, w).unwrap();
        let out = oracle(KernelId::SvPsV, &Operands::SparseSparse { a: a.clone(), b: Fiber::empty(8, w) });
        assert_eq!(out, KernelOutput::Sparse(a));
    }

    #[test]
    fn identity_matvec() {
        let a = CsrMatrix::identity(5, IndexWidth::W16).unwrap();
        let x = vec![1.0, -2.0, 3.5, 0.0, 9.0];
        let out = oracle(KernelId::SmXdV, &Operands::MatVec { a, x: DenseVector::unit(x.clone()), y_stride: 1 });
        assert_eq!(out, KernelOutput::Dense(x));
    }

    #[test]
    fn pattern_mismatch_is_structural() {
        let w = IndexWidth::W16;
        let a = Fiber::new(vec![1.0], vec![1], 8, w).unwrap();
        let b = Fiber::new(vec![1.0], vec![2], 8, w).unwrap();
        let want = reference(KernelId::SvPsV, &Operands::SparseSparse { a: a.clone(), b });
        assert!(relative_error(&KernelOutput::Sparse(a), &want).is_err());
    }
}
