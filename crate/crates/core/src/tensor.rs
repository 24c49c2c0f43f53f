//! Dense vectors and matrices plus the handful of kernels the recurrent
//! cells need: matrix-vector products, element-wise maps and a strided GEMM
//! used by the minibatch engine.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, Index, IndexMut, MulAssign, SubAssign};

use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure, Result};

/// Floating point type the networks are computed in.
///
/// Training and inference default to `f32`; gradient checks run in `f64`.
pub trait Scalar:
    Float + Default + Debug + Send + Sync + Sum + AddAssign + SubAssign + MulAssign + 'static
{
    /// One standard normal draw at this precision (ziggurat).
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform in `[0, 1)` from one raw 64-bit word.
    fn unit(bits: u64) -> Self;

    /// `c = alpha * a @ b + beta * c` over raw strided storage.
    ///
    /// # Safety
    /// All index expressions implied by the dimensions and strides must fall
    /// inside the backing slices; [`gemm`] checks this before calling.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );

    fn from_f64(v: f64) -> Self {
        <Self as num_traits::NumCast>::from(v).expect("finite f64 converts to any float")
    }

    fn as_f64(self) -> f64 {
        <f64 as num_traits::NumCast>::from(self).expect("float converts to f64")
    }
}

impl Scalar for f32 {
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f32 {
        rng.sample(StandardNormal)
    }

    #[inline]
    fn unit(bits: u64) -> f32 {
        (bits >> 40) as f32 * (1.0 / 16_777_216.0)
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f32,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        beta: f32,
        c: *mut f32,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }
}

impl Scalar for f64 {
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        rng.sample(StandardNormal)
    }

    #[inline]
    fn unit(bits: u64) -> f64 {
        (bits >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f64,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Vector<T>(Vec<T>);

impl<T: Scalar> Vector<T> {
    pub fn zeros(len: usize) -> Self {
        Self(vec![T::zero(); len])
    }

    pub fn filled(len: usize, value: T) -> Self {
        Self(vec![value; len])
    }

    /// Builds a vector, rejecting non-finite entries.
    pub fn from_vec(data: Vec<T>) -> Result<Self> {
        ensure!(
            data.iter().all(|v| v.is_finite()),
            "vector entries must be finite"
        );
        Ok(Self(data))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }

    /// `[self ; other]`
    pub fn concat(&self, other: &Vector<T>) -> Vector<T> {
        let mut data = Vec::with_capacity(self.len() + other.len());
        data.extend_from_slice(&self.0);
        data.extend_from_slice(&other.0);
        Vector(data)
    }

    pub fn dot(&self, other: &Vector<T>) -> Result<T> {
        ensure!(
            self.len() == other.len(),
            "dot of lengths {} and {}",
            self.len(),
            other.len()
        );
        Ok(dot(&self.0, &other.0))
    }
}

impl<T> Index<usize> for Vector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for Vector<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

impl<T> From<Vec<T>> for Vector<T> {
    fn from(data: Vec<T>) -> Self {
        Self(data)
    }
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        ensure!(
            data.len() == rows * cols,
            "matrix data length {} != {rows} x {cols}",
            data.len()
        );
        ensure!(
            data.iter().all(|v| v.is_finite()),
            "matrix entries must be finite"
        );
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `self^T · y`
    pub fn matvec_transposed(&self, y: &Vector<T>) -> Result<Vector<T>> {
        ensure!(
            self.rows == y.len(),
            "transposed matvec: matrix has {} rows, vector has {} entries",
            self.rows,
            y.len()
        );
        let mut out = vec![T::zero(); self.cols];
        for (i, &yi) in y.iter().enumerate() {
            for (o, &w) in out.iter_mut().zip(self.row(i)) {
                *o += w * yi;
            }
        }
        Ok(Vector(out))
    }

    /// `self += u · v^T`
    pub fn add_outer(&mut self, u: &Vector<T>, v: &Vector<T>) -> Result<()> {
        ensure!(
            self.rows == u.len() && self.cols == v.len(),
            "outer product {}x{} into {}x{}",
            u.len(),
            v.len(),
            self.rows,
            self.cols
        );
        let cols = self.cols;
        for (i, &ui) in u.iter().enumerate() {
            for (w, &vj) in self.data[i * cols..(i + 1) * cols].iter_mut().zip(v.iter()) {
                *w += ui * vj;
            }
        }
        Ok(())
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = T::zero();
    for i in chunks * 4..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `W · x`
pub fn matvec<T: Scalar>(w: &Matrix<T>, x: &Vector<T>) -> Result<Vector<T>> {
    ensure!(
        w.cols == x.len(),
        "matvec: matrix is {}x{}, vector has {} entries",
        w.rows,
        w.cols,
        x.len()
    );
    Ok(Vector(
        (0..w.rows).map(|i| dot(w.row(i), x.as_slice())).collect(),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementwiseOp {
    Add,
    Mul,
    Tanh,
    Sigmoid,
}

#[inline]
pub fn sigmoid<T: Scalar>(t: T) -> T {
    T::one() / (T::one() + (-t).exp())
}

/// Applies `op` per element. Binary ops take `b`; unary ops must not.
pub fn elementwise<T: Scalar>(
    op: ElementwiseOp,
    a: &Vector<T>,
    b: Option<&Vector<T>>,
) -> Result<Vector<T>> {
    match (op, b) {
        (ElementwiseOp::Add | ElementwiseOp::Mul, Some(b)) => {
            ensure!(
                a.len() == b.len(),
                "element-wise {op:?} on lengths {} and {}",
                a.len(),
                b.len()
            );
            let f = if op == ElementwiseOp::Add {
                |x: T, y: T| x + y
            } else {
                |x: T, y: T| x * y
            };
            Ok(Vector(
                a.iter().zip(b.iter()).map(|(&x, &y)| f(x, y)).collect(),
            ))
        }
        (ElementwiseOp::Tanh, None) => Ok(Vector(a.iter().map(|v| v.tanh()).collect())),
        (ElementwiseOp::Sigmoid, None) => Ok(Vector(a.iter().map(|&v| sigmoid(v)).collect())),
        (ElementwiseOp::Add | ElementwiseOp::Mul, None) => Err(crate::error::contract(format!(
            "element-wise {op:?} needs a second operand"
        ))),
        (_, Some(_)) => Err(crate::error::contract(format!(
            "element-wise {op:?} is unary"
        ))),
    }
}

/// Borrowed strided 2-D view used by [`gemm`].
#[derive(Clone, Copy, Debug)]
pub struct View<'a, T> {
    pub data: &'a [T],
    pub rows: usize,
    pub cols: usize,
    pub row_stride: usize,
    pub col_stride: usize,
}

impl<'a, T> View<'a, T> {
    /// Row-major `rows × cols` block.
    pub fn row_major(data: &'a [T], rows: usize, cols: usize) -> Self {
        Self {
            data,
            rows,
            cols,
            row_stride: cols,
            col_stride: 1,
        }
    }

    pub fn t(self) -> Self {
        Self {
            data: self.data,
            rows: self.cols,
            cols: self.rows,
            row_stride: self.col_stride,
            col_stride: self.row_stride,
        }
    }

    fn fits(&self) -> bool {
        self.rows == 0
            || self.cols == 0
            || (self.rows - 1) * self.row_stride + (self.cols - 1) * self.col_stride
                < self.data.len()
    }
}

/// `c = alpha · a · b + beta · c` with `c` row-major `a.rows × b.cols`
/// laid out with row stride `ldc`.
pub fn gemm<T: Scalar>(alpha: T, a: View<'_, T>, b: View<'_, T>, beta: T, c: &mut [T], ldc: usize) {
    assert_eq!(a.cols, b.rows, "gemm inner dimensions");
    assert!(a.fits() && b.fits(), "gemm operand view out of bounds");
    let (m, k, n) = (a.rows, a.cols, b.cols);
    assert!(
        m == 0 || n == 0 || (m - 1) * ldc + n <= c.len(),
        "gemm output out of bounds"
    );
    // SAFETY: every operand index is bounded by the checks above.
    unsafe {
        T::gemm_raw(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            a.row_stride as isize,
            a.col_stride as isize,
            b.data.as_ptr(),
            b.row_stride as isize,
            b.col_stride as isize,
            beta,
            c.as_mut_ptr(),
            ldc as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive(w: &[f64], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; rows];
        for i in 0..rows {
            for j in 0..cols {
                out[i] += w[i * cols + j] * x[j];
            }
        }
        out
    }

    #[test]
    fn matvec_identity_and_small_case() {
        let x = Vector::from(vec![1.0, 2.0, 3.0]);
        assert_eq!(matvec(&Matrix::<f64>::identity(3), &x).unwrap(), x);
        let w = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = matvec(&w, &Vector::from(vec![1.0, 1.0])).unwrap();
        assert_eq!(y.as_slice(), &[3.0, 7.0]);
    }

    #[test]
    fn matvec_rejects_mismatch() {
        let w = Matrix::<f64>::zeros(2, 3);
        assert!(matvec(&w, &Vector::zeros(2)).is_err());
    }

    #[test]
    fn matrix_rejects_bad_data() {
        assert!(Matrix::from_vec(2, 2, vec![1.0f64; 3]).is_err());
        assert!(Matrix::from_vec(1, 2, vec![1.0f64, f64::NAN]).is_err());
        assert!(Vector::from_vec(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn elementwise_ops() {
        let z = Vector::from(vec![0.0f64, 0.0]);
        assert_eq!(
            elementwise(ElementwiseOp::Tanh, &z, None)
                .unwrap()
                .as_slice(),
            &[0.0, 0.0]
        );
        let s = elementwise(ElementwiseOp::Sigmoid, &Vector::from(vec![0.0f64]), None).unwrap();
        assert_eq!(s.as_slice(), &[0.5]);
        let a = Vector::from(vec![1.0f64, 2.0]);
        let b = Vector::from(vec![3.0f64, 4.0]);
        assert_eq!(
            elementwise(ElementwiseOp::Mul, &a, Some(&b))
                .unwrap()
                .as_slice(),
            &[3.0, 8.0]
        );
        assert_eq!(
            elementwise(ElementwiseOp::Add, &a, Some(&b))
                .unwrap()
                .as_slice(),
            &[4.0, 6.0]
        );
        assert!(elementwise(ElementwiseOp::Mul, &a, Some(&Vector::zeros(3))).is_err());
        assert!(elementwise(ElementwiseOp::Add, &a, None).is_err());
        assert!(elementwise(ElementwiseOp::Tanh, &a, Some(&b)).is_err());
    }

    #[test]
    fn gemm_matches_matvec_with_transposes() {
        let a = Matrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64 * 0.25 - 1.0);
        let b = Matrix::from_fn(2, 4, |i, j| (i + 2 * j) as f64 * 0.5);
        // c = a · b^T  (3 × 2)
        let mut c = vec![0.0; 6];
        gemm(
            1.0,
            View::row_major(a.as_slice(), 3, 4),
            View::row_major(b.as_slice(), 2, 4).t(),
            0.0,
            &mut c,
            2,
        );
        for j in 0..2 {
            let col = matvec(&a, &Vector::from(b.row(j).to_vec())).unwrap();
            for i in 0..3 {
                assert!((c[i * 2 + j] - col[i]).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn matvec_agrees_with_scalar_loop(
            rows in 1usize..=64,
            cols in 1usize..=64,
            seed in any::<u64>(),
        ) {
            let mut rng = crate::rng::NoiseRng::new(seed, 0);
            let w: Vec<f64> = (0..rows * cols).map(|_| rng.uniform::<f64>() * 2.0 - 1.0).collect();
            let x: Vec<f64> = (0..cols).map(|_| rng.uniform::<f64>() * 2.0 - 1.0).collect();
            let expect = naive(&w, rows, cols, &x);
            let abs_w: Vec<f64> = w.iter().map(|v| v.abs()).collect();
            let abs_x: Vec<f64> = x.iter().map(|v| v.abs()).collect();
            // relative to sum |w_ij x_j|, the conditioning of each dot product
            let magnitude = naive(&abs_w, rows, cols, &abs_x);
            let got = matvec(&Matrix::from_vec(rows, cols, w).unwrap(), &Vector::from(x)).unwrap();
            for ((g, e), m) in got.iter().zip(&expect).zip(&magnitude) {
                prop_assert!((g - e).abs() <= 1e-12 * m.max(f64::MIN_POSITIVE));
            }
        }
    }
}
