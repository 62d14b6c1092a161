//! Compressed sparse row matrices and the operator interface shared by the
//! eigensolvers.

use crate::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;

/// Anything that can act as a symmetric linear operator on ℝⁿ.
pub trait LinOp {
    fn dim(&self) -> usize;
    /// y ← A x.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Symmetric sparse matrix in CSR storage. Both triangles are stored; symmetry
/// is the assembler's responsibility and can be audited with
/// [`CsrMatrix::symmetry_defect`].
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Assemble from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= n || c >= n {
                return Err(Error::Grid("triplet index out of range"));
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut prev = None;
        for &(r, c, v) in &sorted {
            if prev == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            col_idx.push(c);
            values.push(v);
            row_ptr[r + 1] = col_idx.len();
            prev = Some((r, c));
        }
        // rows with no entries inherit the running pointer
        for r in 0..n {
            if row_ptr[r + 1] < row_ptr[r] {
                row_ptr[r + 1] = row_ptr[r];
            }
        }
        Ok(Self { n, row_ptr, col_idx, values })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self {
            n: d.len(),
            row_ptr: (0..=d.len()).collect(),
            col_idx: (0..d.len()).collect(),
            values: d.to_vec(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entry lookup by binary search inside the row (rows are column-sorted).
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.col_idx[lo..hi].binary_search(&c) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    /// max |A_ij − A_ji| over stored entries.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                let d = (self.values[k] - self.get(c, r)).abs();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// D A D for a diagonal scaling vector d (used for mass symmetrization
    /// A ↦ M^{-1/2} A M^{-1/2}).
    pub fn scale_sym(&self, d: &[f64]) -> Result<Self> {
        if d.len() != self.n {
            return Err(Error::Grid("scaling vector length mismatch"));
        }
        let mut out = self.clone();
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out.values[k] *= d[r] * d[self.col_idx[k]];
            }
        }
        Ok(out)
    }

    /// Principal submatrix on the given rows/columns. `keep` must be strictly
    /// increasing; entry (i, j) of the result is A(keep[i], keep[j]).
    pub fn principal_submatrix(&self, keep: &[usize]) -> Result<Self> {
        if keep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Grid("submatrix index list must be strictly increasing"));
        }
        if let Some(&last) = keep.last() {
            if last >= self.n {
                return Err(Error::Grid("submatrix index out of range"));
            }
        }
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut row_ptr = Vec::with_capacity(keep.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &old_r in keep {
            for k in self.row_ptr[old_r]..self.row_ptr[old_r + 1] {
                let new_c = map[self.col_idx[k]];
                if new_c != usize::MAX {
                    col_idx.push(new_c);
                    values.push(self.values[k]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self { n: keep.len(), row_ptr, col_idx, values })
    }

    /// A + diag(d).
    pub fn plus_diag(&self, d: &[f64]) -> Result<Self> {
        if d.len() != self.n {
            return Err(Error::Grid("diagonal length mismatch"));
        }
        let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(self.nnz() + self.n);
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                triplets.push((r, self.col_idx[k], self.values[k]));
            }
            triplets.push((r, r, d[r]));
        }
        Self::from_triplets(self.n, &triplets)
    }
}

impl LinOp for CsrMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }
}

/// A + shift·I as a lazy operator (no copy).
pub struct Shifted<'a, T: LinOp> {
    pub op: &'a T,
    pub shift: f64,
}

impl<'a, T: LinOp> LinOp for Shifted<'a, T> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.op.apply(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += self.shift * xi;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::SplitMix64;

    #[test]
    fn triplet_assembly_matches_dense_brute_force() {
        let n = 9;
        let mut rng = SplitMix64::new(11);
        let mut triplets = Vec::new();
        let mut dense = vec![vec![0.0f64; n]; n];
        for _ in 0..60 {
            let r = (rng.next_u64() % n as u64) as usize;
            let c = (rng.next_u64() % n as u64) as usize;
            let v = rng.next_f64() - 0.5;
            // keep it symmetric the way assemblers do: push both halves
            triplets.push((r, c, v));
            triplets.push((c, r, v));
            dense[r][c] += v;
            dense[c][r] += v;
        }
        let a = CsrMatrix::from_triplets(n, &triplets).unwrap();
        assert!(a.symmetry_defect() < 1e-15);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0).sin()).collect();
        let mut y = vec![0.0; n];
        a.apply(&x, &mut y);
        for r in 0..n {
            let want: f64 = (0..n).map(|c| dense[r][c] * x[c]).sum();
            assert!((y[r] - want).abs() < 1e-13, "row {r}: {} vs {want}", y[r]);
        }
        for r in 0..n {
            for c in 0..n {
                assert!((a.get(r, c) - dense[r][c]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn empty_rows_are_handled() {
        let a = CsrMatrix::from_triplets(4, &[(0, 0, 2.0), (3, 1, -1.0), (1, 3, -1.0)]).unwrap();
        let x = [1.0, 2.0, 3.0, 4.0];
        let mut y = [0.0; 4];
        a.apply(&x, &mut y);
        assert_eq!(y, [2.0, -4.0, 0.0, -2.0]);
    }

    #[test]
    fn scale_and_shift_helpers() {
        let a = CsrMatrix::from_triplets(3, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0), (2, 2, 5.0)])
            .unwrap();
        let s = a.scale_sym(&[2.0, 3.0, 1.0]).unwrap();
        assert_eq!(s.get(0, 1), 6.0);
        assert_eq!(s.get(0, 0), 8.0);
        assert_eq!(s.get(2, 2), 5.0);
        let p = a.plus_diag(&[1.0, 1.0, -5.0]).unwrap();
        assert_eq!(p.get(0, 0), 3.0);
        assert_eq!(p.get(2, 2), 0.0);
        let sh = Shifted { op: &a, shift: -1.0 };
        let mut y = [0.0; 3];
        sh.apply(&[1.0, 0.0, 0.0], &mut y);
        assert_eq!(y, [1.0, 1.0, 0.0]);
    }

    #[test]
    fn out_of_range_triplets_rejected() {
        assert!(CsrMatrix::from_triplets(2, &[(0, 2, 1.0)]).is_err());
    }

    #[test]
    fn principal_submatrix_matches_dense_restriction() {
        let n = 7;
        let mut rng = SplitMix64::new(23);
        let mut triplets = Vec::new();
        let mut dense = vec![vec![0.0f64; n]; n];
        for _ in 0..40 {
            let r = (rng.next_u64() % n as u64) as usize;
            let c = (rng.next_u64() % n as u64) as usize;
            let v = rng.next_f64() - 0.5;
            triplets.push((r, c, v));
            triplets.push((c, r, v));
            dense[r][c] += v;
            dense[c][r] += v;
        }
        let a = CsrMatrix::from_triplets(n, &triplets).unwrap();
        let keep = [1usize, 2, 5, 6];
        let sub = a.principal_submatrix(&keep).unwrap();
        assert_eq!(sub.n, keep.len());
        assert!(sub.symmetry_defect() < 1e-15);
        for (i, &r) in keep.iter().enumerate() {
            for (j, &c) in keep.iter().enumerate() {
                assert!((sub.get(i, j) - dense[r][c]).abs() < 1e-14);
            }
        }
        assert!(a.principal_submatrix(&[2, 1]).is_err());
        assert!(a.principal_submatrix(&[0, 9]).is_err());
    }
}
