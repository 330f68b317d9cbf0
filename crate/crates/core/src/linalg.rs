//! Dense matrix helpers sized for the small systems in this crate.
//!
//! The matrices here are tiny: the ODE dimension n, the 2n x 2n blocks of
//! the kernel exponentials, and the (2n+1) x (2n+1) LMI blocks. The
//! algorithms favour robustness over speed: scaled-Taylor matrix
//! exponential, cyclic Jacobi for symmetric eigenvalues, Gaussian
//! elimination with partial pivoting.

use crate::error::{Error, Result};
use crate::num::{r64, rus, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Build from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::GridMismatch { expected: c, got: 0 });
        }
        Ok(Self::from_fn(r, c, |i, j| rows[i][j]))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = out.get(i, j) + aik * rhs.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) + rhs.get(i, j))
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) - rhs.get(i, j))
    }

    pub fn scale(&self, s: T) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) * s)
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> T {
        let mut best = T::zero();
        for j in 0..self.cols {
            let s = (0..self.rows).map(|i| self.get(i, j).abs()).sum::<T>();
            if s > best {
                best = s;
            }
        }
        best
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Largest |a_ij - a_ji|.
    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn row_dot(&self, i: usize, v: &[T]) -> T {
        (0..self.cols).map(|j| self.get(i, j) * v[j]).sum()
    }

    /// y = A x for a column vector x.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len());
        (0..self.rows).map(|i| self.row_dot(i, x)).collect()
    }

    /// Matrix exponential by scaling and squaring around a Taylor core.
    ///
    /// The scaled norm is kept below 1/2 and the series is summed to
    /// machine-level truncation, which is far tighter than the 1e-12 the
    /// kernel evaluations need.
    pub fn expm(&self) -> Result<Self> {
        assert_eq!(self.rows, self.cols, "expm needs a square matrix");
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix exponential input"));
        }
        let n = self.rows;
        let norm = self.one_norm();
        let mut squarings = 0u32;
        let mut scaled = self.clone();
        if norm > r64(0.5) {
            let ratio: f64 = (norm / r64(0.5)).to_f64().unwrap_or(f64::MAX);
            squarings = ratio.log2().ceil().max(0.0) as u32;
            let factor = r64::<T>(2.0).powi(squarings as i32);
            scaled = self.scale(T::one() / factor);
        }
        let mut result = Self::identity(n);
        let mut term = Self::identity(n);
        for k in 1..=48 {
            term = term.matmul(&scaled).scale(T::one() / rus(k));
            result = result.add(&term);
            if term.one_norm() <= T::epsilon() * result.one_norm() {
                break;
            }
        }
        for _ in 0..squarings {
            result = result.matmul(&result);
        }
        if result.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix exponential result"));
        }
        Ok(result)
    }

    /// Eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi.
    pub fn sym_eigenvalues(&self) -> Vec<T> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 1 {
            return vec![self.get(0, 0)];
        }
        let mut a = self.clone();
        let scale = a.max_abs().max(T::one());
        let tol = T::epsilon() * scale;
        for _sweep in 0..64 {
            let mut off = T::zero();
            for i in 0..n {
                for j in (i + 1)..n {
                    off = off.max(a.get(i, j).abs());
                }
            }
            if off <= tol {
                break;
            }
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    if apq.abs() <= tol * r64(1e-3) {
                        continue;
                    }
                    let theta = (a.get(q, q) - a.get(p, p)) / (r64::<T>(2.0) * apq);
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    let t = sign / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, c * akp - s * akq);
                        a.set(k, q, s * akp + c * akq);
                    }
                    for k in 0..n {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.set(p, k, c * apk - s * aqk);
                        a.set(q, k, s * apk + c * aqk);
                    }
                }
            }
        }
        let mut eigs: Vec<T> = (0..n).map(|i| a.get(i, i)).collect();
        eigs.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
        eigs
    }

    pub fn max_eigenvalue_sym(&self) -> T {
        *self.sym_eigenvalues().last().expect("non-empty matrix")
    }

    /// Solve A x = b by Gaussian elimination with partial pivoting.
    /// Returns `None` when the pivot collapses (singular system).
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(self.rows, b.len());
        let n = self.rows;
        let mut a = self.clone();
        let mut rhs = b.to_vec();
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if a.get(r, col).abs() > a.get(piv, col).abs() {
                    piv = r;
                }
            }
            if a.get(piv, col).abs() <= T::epsilon() * a.max_abs().max(T::one()) {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    let tmp = a.get(col, j);
                    a.set(col, j, a.get(piv, j));
                    a.set(piv, j, tmp);
                }
                rhs.swap(col, piv);
            }
            let d = a.get(col, col);
            for r in col + 1..n {
                let f = a.get(r, col) / d;
                if f == T::zero() {
                    continue;
                }
                for j in col..n {
                    let v = a.get(r, j) - f * a.get(col, j);
                    a.set(r, j, v);
                }
                rhs[r] = rhs[r] - f * rhs[col];
            }
        }
        let mut x = vec![T::zero(); n];
        for row in (0..n).rev() {
            let mut acc = rhs[row];
            for j in row + 1..n {
                acc -= a.get(row, j) * x[j];
            }
            x[row] = acc / a.get(row, row);
        }
        Some(x)
    }

    pub fn det(&self) -> T {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut det = T::one();
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if a.get(r, col).abs() > a.get(piv, col).abs() {
                    piv = r;
                }
            }
            if a.get(piv, col) == T::zero() {
                return T::zero();
            }
            if piv != col {
                for j in 0..n {
                    let tmp = a.get(col, j);
                    a.set(col, j, a.get(piv, j));
                    a.set(piv, j, tmp);
                }
                det = -det;
            }
            let d = a.get(col, col);
            det *= d;
            for r in col + 1..n {
                let f = a.get(r, col) / d;
                for j in col..n {
                    let v = a.get(r, j) - f * a.get(col, j);
                    a.set(r, j, v);
                }
            }
        }
        det
    }

    pub fn rank(&self, rel_tol: T) -> usize {
        let mut a = self.clone();
        let tol = rel_tol * a.max_abs().max(T::one());
        let (m, n) = (self.rows, self.cols);
        let mut rank = 0;
        let mut row = 0;
        for col in 0..n {
            if row >= m {
                break;
            }
            let mut piv = row;
            for r in row + 1..m {
                if a.get(r, col).abs() > a.get(piv, col).abs() {
                    piv = r;
                }
            }
            if a.get(piv, col).abs() <= tol {
                continue;
            }
            for j in 0..n {
                let tmp = a.get(row, j);
                a.set(row, j, a.get(piv, j));
                a.set(piv, j, tmp);
            }
            let d = a.get(row, col);
            for r in row + 1..m {
                let f = a.get(r, col) / d;
                for j in col..n {
                    let v = a.get(r, j) - f * a.get(row, j);
                    a.set(r, j, v);
                }
            }
            rank += 1;
            row += 1;
        }
        rank
    }

    /// 2x2 block matrix [[tl, tr], [bl, br]]; all blocks square of equal size.
    pub fn from_blocks(tl: &Self, tr: &Self, bl: &Self, br: &Self) -> Self {
        let n = tl.rows;
        Self::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
            (true, true) => tl.get(i, j),
            (true, false) => tr.get(i, j - n),
            (false, true) => bl.get(i - n, j),
            (false, false) => br.get(i - n, j - n),
        })
    }
}

/// Rank of the controllability matrix [B, AB, ..., A^{n-1}B].
pub fn controllability_rank<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> usize {
    let n = a.rows();
    let mut cols: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut col: Vec<T> = (0..n).map(|i| b.get(i, 0)).collect();
    cols.push(col.clone());
    for _ in 1..n {
        col = a.matvec(&col);
        cols.push(col.clone());
    }
    let ctrl = Matrix::from_fn(n, n, |i, j| cols[j][i]);
    ctrl.rank(r64(1e-10))
}

/// Hurwitz test via the Lyapunov equation A^T P + P A = -I.
///
/// The Kronecker system (I (x) A^T + A^T (x) I) vec(P) = -vec(I) is solved
/// directly; A is Hurwitz iff the solve succeeds and P is positive definite.
pub fn is_hurwitz<T: Real>(a: &Matrix<T>) -> bool {
    let n = a.rows();
    if n == 0 {
        return true;
    }
    let at = a.transpose();
    let nn = n * n;
    // M[(i,j),(k,l)] coefficient of P_{kl} in (A^T P + P A)_{ij}
    let m = Matrix::from_fn(nn, nn, |rc, kl| {
        let (i, j) = (rc / n, rc % n);
        let (k, l) = (kl / n, kl % n);
        let mut v = T::zero();
        if l == j {
            v += at.get(i, k); // (A^T P)_{ij} = sum_k A^T_{ik} P_{kj}
        }
        if k == i {
            v += a.get(l, j); // (P A)_{ij} = sum_l P_{il} A_{lj}
        }
        v
    });
    let rhs: Vec<T> = (0..nn)
        .map(|rc| if rc / n == rc % n { -T::one() } else { T::zero() })
        .collect();
    let Some(p_vec) = m.solve(&rhs) else {
        return false;
    };
    let p = Matrix::from_fn(n, n, |i, j| p_vec[i * n + j]);
    // Symmetrize against rounding before the eigenvalue test.
    let p_sym = p.add(&p.transpose()).scale(r64(0.5));
    p_sym.sym_eigenvalues()[0] > T::zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    #[test]
    fn expm_matches_scalar_exponential() {
        let a = mat(&[&[0.3]]);
        let e = a.expm().unwrap();
        assert!((e.get(0, 0) - 0.3f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn expm_rotation_block() {
        // exp([[0, -t],[t, 0]]) = [[cos t, -sin t],[sin t, cos t]]
        let t = 1.3;
        let a = mat(&[&[0.0, -t], &[t, 0.0]]);
        let e = a.expm().unwrap();
        assert!((e.get(0, 0) - t.cos()).abs() < 1e-13);
        assert!((e.get(1, 0) - t.sin()).abs() < 1e-13);
    }

    #[test]
    fn expm_large_norm_uses_squaring() {
        let a = mat(&[&[4.0, 1.0], &[0.0, 4.0]]);
        // exp = e^4 [[1, 1],[0, 1]]
        let e = a.expm().unwrap();
        let e4 = 4.0f64.exp();
        assert!((e.get(0, 0) - e4).abs() < 1e-9 * e4);
        assert!((e.get(0, 1) - e4).abs() < 1e-9 * e4);
        assert!((e.get(1, 0)).abs() < 1e-12);
    }

    #[test]
    fn jacobi_eigenvalues_on_known_matrix() {
        let a = mat(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let e = a.sym_eigenvalues();
        assert!((e[0] - 1.0).abs() < 1e-12);
        assert!((e[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn solve_and_det() {
        let a = mat(&[&[2.0, 1.0], &[1.0, 3.0]]);
        let x = a.solve(&[5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
        assert!((a.det() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn hurwitz_detection() {
        assert!(is_hurwitz(&mat(&[&[-1.0, 0.5], &[0.0, -0.2]])));
        assert!(!is_hurwitz(&mat(&[&[0.1]])));
        // stable complex pair
        assert!(is_hurwitz(&mat(&[&[-0.1, 1.0], &[-1.0, -0.1]])));
        // saddle: eigenvalues -1, +2
        assert!(!is_hurwitz(&mat(&[&[-1.0, 0.0], &[0.0, 2.0]])));
    }

    #[test]
    fn controllability_rank_cases() {
        let a = mat(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let b = mat(&[&[0.0], &[1.0]]);
        assert_eq!(controllability_rank(&a, &b), 2);
        let b_bad = mat(&[&[1.0], &[0.0]]);
        assert_eq!(controllability_rank(&a, &b_bad), 1);
    }

    #[test]
    fn generic_over_f32() {
        let a: Matrix<f32> = Matrix::identity(3);
        let e = a.expm().unwrap();
        assert!((e.get(0, 0) - std::f32::consts::E).abs() < 1e-5);
    }
}
