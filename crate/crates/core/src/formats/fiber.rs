use super::{FormatError, IndexWidth};

/// One compressed tensor axis: nonzero values and their strictly increasing positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Fiber {
    values: Vec<f64>,
    indices: Vec<u64>,
    dense_len: u64,
    width: IndexWidth,
}

impl Fiber {
    pub fn new(values: Vec<f64>, indices: Vec<u64>, dense_len: u64, width: IndexWidth) -> Result<Self, FormatError> {
        if values.len() != indices.len() {
            return Err(FormatError::Invariant(format!(
                "{} values but {} indices",
                values.len(),
                indices.len()
            )));
        }
        for (k, &idx) in indices.iter().enumerate() {
            if !width.fits(idx) {
                return Err(FormatError::WidthOverflow { value: idx, width });
            }
            if idx >= dense_len {
                return Err(FormatError::Invariant(format!("index {idx} outside dense length {dense_len}")));
            }
            if k > 0 && indices[k - 1] >= idx {
                return Err(FormatError::Invariant(format!(
                    "indices not strictly increasing at position {k} ({} then {idx})",
                    indices[k - 1]
                )));
            }
        }
        Ok(Self { values, indices, dense_len, width })
    }

    pub fn empty(dense_len: u64, width: IndexWidth) -> Self {
        Self { values: Vec::new(), indices: Vec::new(), dense_len, width }
    }

    /// Compresses the nonzero entries of a dense slice. Stored zeros are dropped here.
    pub fn from_dense(dense: &[f64], width: IndexWidth) -> Result<Self, FormatError> {
        let (indices, values): (Vec<u64>, Vec<f64>) = dense
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i as u64, *v))
            .unzip();
        Self::new(values, indices, dense.len() as u64, width)
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn indices(&self) -> &[u64] {
        &self.indices
    }

    pub fn dense_len(&self) -> u64 {
        self.dense_len
    }

    pub fn width(&self) -> IndexWidth {
        self.width
    }

    pub fn with_width(self, width: IndexWidth) -> Result<Self, FormatError> {
        Self::new(self.values, self.indices, self.dense_len, width)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn densify(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dense_len as usize];
        for (i, v) in self.iter() {
            dense[i as usize] = v;
        }
        dense
    }
}

/// Dense operand with a power-of-two element stride.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    values: Vec<f64>,
    stride: u64,
}

impl DenseVector {
    pub fn new(values: Vec<f64>, stride: u64) -> Result<Self, FormatError> {
        if stride == 0 || !stride.is_power_of_two() {
            return Err(FormatError::InvalidArgument(format!("stride {stride} is not a power of two")));
        }
        Ok(Self { values, stride })
    }

    pub fn unit(values: Vec<f64>) -> Self {
        Self { values, stride: 1 }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn stride(&self) -> u64 {
        self.stride
    }

    /// Element layout in memory: element `i` sits at slot `i * stride`.
    pub fn strided_image(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.values.len().saturating_sub(1) * self.stride as usize + 1];
        if self.values.is_empty() {
            out.clear();
        }
        for (i, v) in self.values.iter().enumerate() {
            out[i * self.stride as usize] = *v;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsorted_and_duplicate_indices() {
        assert!(Fiber::new(vec![1.0, 2.0], vec![3, 1], 4, IndexWidth::W16).is_err());
        assert!(Fiber::new(vec![1.0, 2.0], vec![1, 1], 4, IndexWidth::W16).is_err());
    }

    #[test]
    fn rejects_out_of_range_and_overflow() {
        assert!(matches!(
            Fiber::new(vec![1.0], vec![4], 4, IndexWidth::W16),
            Err(FormatError::Invariant(_))
        ));
        assert!(matches!(
            Fiber::new(vec![1.0], vec![300], 400, IndexWidth::W8),
            Err(FormatError::WidthOverflow { value: 300, .. })
        ));
        assert!(Fiber::new(vec![1.0], vec![], 4, IndexWidth::W16).is_err());
    }

    #[test]
    fn explicit_zero_is_a_position() {
        let f = Fiber::new(vec![0.0, 2.0], vec![0, 3], 4, IndexWidth::W8).unwrap();
        assert_eq!(f.nnz(), 2);
        assert_eq!(f.densify(), vec![0.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn dense_round_trip() {
        let dense = vec![0.0, 1.5, 0.0, -2.0];
        let f = Fiber::from_dense(&dense, IndexWidth::W8).unwrap();
        assert_eq!(f.indices(), &[1, 3]);
        assert_eq!(f.densify(), dense);
    }

    #[test]
    fn strided_dense_vector() {
        assert!(DenseVector::new(vec![1.0], 3).is_err());
        let v = DenseVector::new(vec![1.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(v.strided_image(), vec![1.0, 0.0, 2.0, 0.0, 3.0]);
        assert!(DenseVector::unit(vec![]).strided_image().is_empty());
    }
}
