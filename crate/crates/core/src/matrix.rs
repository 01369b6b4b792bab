//! Dense matrices over a prime field.

use std::fmt;

use crate::error::{Error, Result};
use crate::field::{FieldElement, PrimeField};

/// Row-major dense matrix over F_q. Entries are always reduced.
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<u32>,
    field: PrimeField,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize, field: PrimeField) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
            field,
        }
    }

    pub fn identity(size: usize, field: PrimeField) -> Self {
        let mut m = Self::zeros(size, size, field);
        for i in 0..size {
            m.data[i * size + i] = 1;
        }
        m
    }

    /// Builds a matrix from row-major values, reducing each one mod q.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<u32>, field: PrimeField) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        let q = field.modulus();
        let data = data.into_iter().map(|v| v % q).collect();
        Ok(Self {
            rows,
            cols,
            data,
            field,
        })
    }

    pub fn from_rows(rows: &[Vec<u32>], field: PrimeField) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::from_vec(rows.len(), cols, rows.concat(), field)
    }

    pub fn column(values: &[u32], field: PrimeField) -> Self {
        Self::from_vec(values.len(), 1, values.to_vec(), field).expect("length matches")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }

    pub fn element(&self, r: usize, c: usize) -> FieldElement {
        FieldElement::new(self.get(r, c) as u64, self.field)
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u32) {
        self.data[r * self.cols + c] = v % self.field.modulus();
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column_values(&self, c: usize) -> Vec<u32> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows, self.field);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && *self == self.transpose()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    /// Rows at `indices`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
            field: self.field,
        }
    }

    /// Columns `start..end`.
    pub fn column_range(&self, start: usize, end: usize) -> Self {
        assert!(start <= end && end <= self.cols);
        let mut data = Vec::with_capacity(self.rows * (end - start));
        for r in 0..self.rows {
            data.extend_from_slice(&self.row(r)[start..end]);
        }
        Self {
            rows: self.rows,
            cols: end - start,
            data,
            field: self.field,
        }
    }

    /// Places `right` beside `self`.
    pub fn hstack(&self, right: &Matrix) -> Result<Self> {
        self.check_field(right)?;
        if self.rows != right.rows {
            return Err(Error::DimensionMismatch(format!(
                "hstack of {} and {} rows",
                self.rows, right.rows
            )));
        }
        let mut data = Vec::with_capacity(self.rows * (self.cols + right.cols));
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(right.row(r));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols + right.cols,
            data,
            field: self.field,
        })
    }

    /// Places `below` under `self`.
    pub fn vstack(&self, below: &Matrix) -> Result<Self> {
        self.check_field(below)?;
        if self.cols != below.cols {
            return Err(Error::DimensionMismatch(format!(
                "vstack of {} and {} columns",
                self.cols, below.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&below.data);
        Ok(Self {
            rows: self.rows + below.rows,
            cols: self.cols,
            data,
            field: self.field,
        })
    }

    fn check_field(&self, other: &Matrix) -> Result<()> {
        if self.field != other.field {
            return Err(Error::FieldMismatch {
                left: self.field.modulus(),
                right: other.field.modulus(),
            });
        }
        Ok(())
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        self.check_field(other)?;
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let q = self.field.modulus() as u64;
        let mut out = Matrix::zeros(self.rows, other.cols, self.field);
        let mut acc = vec![0u64; other.cols];
        for r in 0..self.rows {
            acc.iter_mut().for_each(|a| *a = 0);
            for (i, &a) in self.row(r).iter().enumerate() {
                if a == 0 {
                    continue;
                }
                for (slot, &b) in acc.iter_mut().zip(other.row(i)) {
                    *slot = (*slot + a as u64 * b as u64) % q;
                }
            }
            for (c, v) in acc.iter().enumerate() {
                out.data[r * other.cols + c] = *v as u32;
            }
        }
        Ok(out)
    }

    /// `self · v` for a plain vector.
    pub fn mul_vec(&self, v: &[u32]) -> Result<Vec<u32>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.field.dot(self.row(r), v))
            .collect())
    }

    /// `v^t · self` for a plain vector.
    pub fn vec_mul(&self, v: &[u32]) -> Result<Vec<u32>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} times {}x{}",
                v.len(),
                self.rows,
                self.cols
            )));
        }
        let q = self.field.modulus() as u64;
        let mut acc = vec![0u64; self.cols];
        for (r, &a) in v.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (slot, &b) in acc.iter_mut().zip(self.row(r)) {
                *slot = (*slot + a as u64 * b as u64) % q;
            }
        }
        Ok(acc.into_iter().map(|x| x as u32).collect())
    }

    /// Reduces `[self | rhs]` to reduced row-echelon form in place and
    /// returns the pivot column of each pivot row. Pivot search takes the
    /// first row with a nonzero entry in the current column.
    fn eliminate(a: &mut Matrix, rhs: &mut Matrix) -> Vec<usize> {
        let f = a.field;
        let mut pivots = Vec::new();
        let mut pr = 0;
        for c in 0..a.cols {
            if pr == a.rows {
                break;
            }
            let Some(p) = (pr..a.rows).find(|&r| a.get(r, c) != 0) else {
                continue;
            };
            a.swap_rows(p, pr);
            rhs.swap_rows(p, pr);
            let inv = f.inv(a.get(pr, c)).expect("pivot is nonzero");
            a.scale_row(pr, inv);
            rhs.scale_row(pr, inv);
            for r in 0..a.rows {
                if r == pr {
                    continue;
                }
                let factor = a.get(r, c);
                if factor != 0 {
                    a.sub_scaled_row(r, pr, factor);
                    rhs.sub_scaled_row(r, pr, factor);
                }
            }
            pivots.push(c);
            pr += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    fn scale_row(&mut self, r: usize, k: u32) {
        let f = self.field;
        for v in &mut self.data[r * self.cols..(r + 1) * self.cols] {
            *v = f.mul(*v, k);
        }
    }

    /// row[dst] -= k · row[src]
    fn sub_scaled_row(&mut self, dst: usize, src: usize, k: u32) {
        let f = self.field;
        let cols = self.cols;
        for c in 0..cols {
            let s = self.data[src * cols + c];
            if s != 0 {
                let d = &mut self.data[dst * cols + c];
                *d = f.sub(*d, f.mul(k, s));
            }
        }
    }

    /// Solves `self · x = y` for the unique `x`.
    ///
    /// `self` must have full column rank; extra rows must be consistent.
    pub fn solve(&self, y: &Matrix) -> Result<Matrix> {
        self.check_field(y)?;
        if y.rows != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "system has {} rows but right-hand side has {}",
                self.rows, y.rows
            )));
        }
        let mut a = self.clone();
        let mut rhs = y.clone();
        let pivots = Self::eliminate(&mut a, &mut rhs);
        if pivots.len() < self.cols {
            return Err(Error::Singular);
        }
        if (self.cols..self.rows).any(|r| rhs.row(r).iter().any(|&v| v != 0)) {
            return Err(Error::NoSolution);
        }
        Ok(rhs.select_rows(&(0..self.cols).collect::<Vec<_>>()))
    }

    /// Solves `self · x = y` for some `x`, setting free variables to zero.
    /// Unlike [`Matrix::solve`] this accepts rank-deficient systems.
    pub fn solve_any(&self, y: &Matrix) -> Result<Matrix> {
        self.check_field(y)?;
        if y.rows != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "system has {} rows but right-hand side has {}",
                self.rows, y.rows
            )));
        }
        let mut a = self.clone();
        let mut rhs = y.clone();
        let pivots = Self::eliminate(&mut a, &mut rhs);
        if (pivots.len()..self.rows).any(|r| rhs.row(r).iter().any(|&v| v != 0)) {
            return Err(Error::NoSolution);
        }
        let mut x = Matrix::zeros(self.cols, y.cols, self.field);
        for (r, &c) in pivots.iter().enumerate() {
            x.data[c * y.cols..(c + 1) * y.cols].copy_from_slice(rhs.row(r));
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch(
                "inverse of a non-square matrix".into(),
            ));
        }
        self.solve(&Matrix::identity(self.rows, self.field))
    }

    /// A matrix `L` with `L · self = I`. Requires full column rank.
    pub fn left_inverse(&self) -> Result<Matrix> {
        // Pick the first maximal set of independent rows, invert that square
        // block, and scatter its columns back to the chosen row positions.
        let mut t = self.transpose();
        let mut dummy = Matrix::zeros(t.rows, 0, self.field);
        let chosen = Self::eliminate(&mut t, &mut dummy);
        if chosen.len() < self.cols {
            return Err(Error::Singular);
        }
        let inv = self.select_rows(&chosen).inverse()?;
        let mut left = Matrix::zeros(self.cols, self.rows, self.field);
        for r in 0..self.cols {
            for (j, &row) in chosen.iter().enumerate() {
                left.data[r * self.rows + row] = inv.get(r, j);
            }
        }
        Ok(left)
    }

    pub fn rank(&self) -> usize {
        let mut a = self.clone();
        let mut dummy = Matrix::zeros(self.rows, 0, self.field);
        Self::eliminate(&mut a, &mut dummy).len()
    }

    /// Row `i` is `[1, x_i, x_i^2, …, x_i^(width-1)]`.
    pub fn vandermonde(points: &[u32], width: usize, field: PrimeField) -> Result<Matrix> {
        let q = field.modulus();
        let mut seen = std::collections::HashSet::new();
        for &p in points {
            if !seen.insert(p % q) {
                return Err(Error::DuplicatePoint(p % q));
            }
        }
        let mut m = Matrix::zeros(points.len(), width, field);
        for (r, &x) in points.iter().enumerate() {
            let mut v = 1 % q;
            for c in 0..width {
                m.data[r * width + c] = v;
                v = field.mul(v, x % q);
            }
        }
        Ok(m)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix<{}>{}x{} [", self.field, self.rows, self.cols)?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

/// All `size`-element subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, size: usize) -> Combinations {
    Combinations {
        n,
        current: (0..size).collect(),
        done: size > n,
    }
}

pub struct Combinations {
    n: usize,
    current: Vec<usize>,
    done: bool,
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let k = self.current.len();
        // Advance to the next subset, or finish.
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.current[i] < self.n - k + i {
                self.current[i] += 1;
                for j in i + 1..k {
                    self.current[j] = self.current[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f(q: u32) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    fn m(rows: &[&[u32]], q: u32) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(), f(q)).unwrap()
    }

    #[test]
    fn multiply() {
        let a = m(&[&[1, 1], &[1, 2]], 13);
        let b = m(&[&[0], &[1]], 13);
        assert_eq!(a.mul(&b).unwrap(), m(&[&[1], &[2]], 13));
        assert_eq!(Matrix::identity(2, f(13)).mul(&a).unwrap(), a);
        assert!(matches!(
            a.mul(&m(&[&[1, 2, 3]], 13)),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            a.mul(&m(&[&[1], &[1]], 29)),
            Err(Error::FieldMismatch { .. })
        ));
    }

    #[test]
    fn solve_examples() {
        let a = m(&[&[1, 1], &[1, 2]], 13);
        let y = m(&[&[1], &[2]], 13);
        assert_eq!(a.solve(&y).unwrap(), m(&[&[0], &[1]], 13));

        let id = Matrix::identity(3, f(13));
        let y = m(&[&[4], &[5], &[6]], 13);
        assert_eq!(id.solve(&y).unwrap(), y);

        let singular = m(&[&[1, 2], &[2, 4]], 13);
        assert_eq!(singular.solve(&m(&[&[1], &[2]], 13)), Err(Error::Singular));

        let tall = m(&[&[1, 0], &[0, 1], &[1, 1]], 13);
        assert_eq!(
            tall.solve(&m(&[&[1], &[1], &[5]], 13)),
            Err(Error::NoSolution)
        );
        assert_eq!(
            tall.solve(&m(&[&[1], &[1], &[2]], 13)).unwrap(),
            m(&[&[1], &[1]], 13)
        );
    }

    #[test]
    fn vandermonde_examples() {
        let v = Matrix::vandermonde(&[1, 2], 3, f(29)).unwrap();
        assert_eq!(v, m(&[&[1, 1, 1], &[1, 2, 4]], 29));

        let ones = Matrix::vandermonde(&[3, 5, 7], 1, f(29)).unwrap();
        assert_eq!(ones, m(&[&[1], &[1], &[1]], 29));

        assert_eq!(
            Matrix::vandermonde(&[1, 2, 1], 2, f(29)),
            Err(Error::DuplicatePoint(1))
        );
        assert_eq!(
            Matrix::vandermonde(&[1, 30], 2, f(29)),
            Err(Error::DuplicatePoint(1))
        );

        // det = (2-1)(3-1)(3-2) = 2 over F_13
        let v3 = Matrix::vandermonde(&[1, 2, 3], 3, f(13)).unwrap();
        assert_eq!(v3.rank(), 3);
        let inv = v3.inverse().unwrap();
        assert_eq!(v3.mul(&inv).unwrap(), Matrix::identity(3, f(13)));
    }

    #[test]
    fn vandermonde_subsets_have_full_rank() {
        let pts: Vec<u32> = (1..=7).collect();
        for width in 1..=5 {
            let v = Matrix::vandermonde(&pts, width, f(29)).unwrap();
            assert_eq!(v.rank(), width.min(7));
            for rows in combinations(7, width) {
                assert_eq!(v.select_rows(&rows).rank(), width);
            }
        }
    }

    #[test]
    fn rank_basics() {
        assert_eq!(Matrix::zeros(3, 4, f(13)).rank(), 0);
        assert_eq!(m(&[&[1, 2], &[2, 4]], 13).rank(), 1);
        assert_eq!(Matrix::identity(4, f(13)).rank(), 4);
    }

    #[test]
    fn left_inverse_of_tall_matrix() {
        let a = m(&[&[1, 2], &[2, 4], &[0, 1], &[3, 3]], 13);
        let l = a.left_inverse().unwrap();
        assert_eq!(l.mul(&a).unwrap(), Matrix::identity(2, f(13)));
        assert_eq!(
            m(&[&[1, 2], &[2, 4]], 13).left_inverse(),
            Err(Error::Singular)
        );
    }

    #[test]
    fn combinations_enumerates_lexicographically() {
        let all: Vec<_> = combinations(4, 2).collect();
        assert_eq!(
            all,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(
            combinations(3, 0).collect::<Vec<_>>(),
            vec![Vec::<usize>::new()]
        );
        assert_eq!(combinations(2, 3).count(), 0);
        assert_eq!(combinations(7, 3).count(), 35);
    }

    proptest! {
        #[test]
        fn solve_round_trip(seed in any::<u64>(), extra in 0usize..3, width in 1usize..5) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let fq = f(29);
            // Vandermonde on distinct points guarantees full column rank.
            let mut pts: Vec<u32> = (1..29).collect();
            for i in 0..pts.len() {
                let j = rng.gen_range(i..pts.len());
                pts.swap(i, j);
            }
            let a = Matrix::vandermonde(&pts[..width + extra], width, fq).unwrap();
            let x = Matrix::from_vec(width, 2, (0..2 * width).map(|_| rng.gen_range(0..29)).collect(), fq).unwrap();
            let y = a.mul(&x).unwrap();
            prop_assert_eq!(a.solve(&y).unwrap(), x.clone());
            prop_assert_eq!(a.solve_any(&y).unwrap(), x);
        }

        #[test]
        fn solve_any_satisfies_system(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let fq = f(13);
            let a = Matrix::from_vec(3, 4, (0..12).map(|_| rng.gen_range(0..13)).collect(), fq).unwrap();
            let x = Matrix::from_vec(4, 1, (0..4).map(|_| rng.gen_range(0..13)).collect(), fq).unwrap();
            let y = a.mul(&x).unwrap();
            let sol = a.solve_any(&y).unwrap();
            prop_assert_eq!(a.mul(&sol).unwrap(), y);
        }
    }
}
