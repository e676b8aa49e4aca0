use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Float types the network can run in.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Default + Send + Sync + 'static
{
    /// `c = a * b + beta * c` for an `m x k` by `k x n` product with
    /// arbitrary row/column strides.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: &[Self],
        rsa: isize,
        csa: isize,
        b: &[Self],
        rsb: isize,
        csb: isize,
        beta: Self,
        c: &mut [Self],
        rsc: isize,
        csc: isize,
    );

    fn lit(v: f64) -> Self {
        Self::from_f64(v).unwrap()
    }
}

fn span(rows: usize, cols: usize, rs: isize, cs: isize) -> usize {
    if rows == 0 || cols == 0 {
        0
    } else {
        (rows - 1) * rs as usize + (cols - 1) * cs as usize + 1
    }
}

macro_rules! impl_scalar {
    ($t:ty, $kernel:path) => {
        impl Scalar for $t {
            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                a: &[Self],
                rsa: isize,
                csa: isize,
                b: &[Self],
                rsb: isize,
                csb: isize,
                beta: Self,
                c: &mut [Self],
                rsc: isize,
                csc: isize,
            ) {
                assert!(rsa >= 0 && csa >= 0 && rsb >= 0 && csb >= 0 && rsc >= 0 && csc >= 0);
                assert!(a.len() >= span(m, k, rsa, csa));
                assert!(b.len() >= span(k, n, rsb, csb));
                assert!(c.len() >= span(m, n, rsc, csc));
                // SAFETY: all accesses stay inside the spans asserted above.
                unsafe {
                    $kernel(
                        m,
                        k,
                        n,
                        1.0,
                        a.as_ptr(),
                        rsa,
                        csa,
                        b.as_ptr(),
                        rsb,
                        csb,
                        beta,
                        c.as_mut_ptr(),
                        rsc,
                        csc,
                    )
                }
            }
        }
    };
}

impl_scalar!(f32, matrixmultiply::sgemm);
impl_scalar!(f64, matrixmultiply::dgemm);

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
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

    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn from_f64(rows: usize, cols: usize, data: &[f64]) -> Self {
        Self::from_vec(rows, cols, data.iter().map(|&v| T::lit(v)).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }
}

/// `x * w^T + bias` for `x: n x in`, `w: out x in` (row-major).
pub(crate) fn affine<T: Scalar>(x: &Matrix<T>, w: &[T], bias: &[T]) -> Matrix<T> {
    let (n, inputs, outputs) = (x.rows, x.cols, bias.len());
    let mut out = Matrix::zeros(n, outputs);
    for r in 0..n {
        out.row_mut(r).copy_from_slice(bias);
    }
    T::gemm(
        n,
        inputs,
        outputs,
        &x.data,
        inputs as isize,
        1,
        w,
        1,
        inputs as isize,
        T::one(),
        &mut out.data,
        outputs as isize,
        1,
    );
    out
}

/// `dz^T * x` into an `out x in` buffer.
pub(crate) fn weight_grad<T: Scalar>(dz: &Matrix<T>, x: &Matrix<T>) -> Vec<T> {
    let (n, outputs, inputs) = (dz.rows, dz.cols, x.cols);
    let mut g = vec![T::zero(); outputs * inputs];
    T::gemm(
        outputs,
        n,
        inputs,
        &dz.data,
        1,
        outputs as isize,
        &x.data,
        inputs as isize,
        1,
        T::zero(),
        &mut g,
        inputs as isize,
        1,
    );
    g
}

/// `dz * w` for `dz: n x out`, `w: out x in`.
pub(crate) fn input_grad<T: Scalar>(dz: &Matrix<T>, w: &[T], inputs: usize) -> Matrix<T> {
    let (n, outputs) = (dz.rows, dz.cols);
    let mut dx = Matrix::zeros(n, inputs);
    T::gemm(
        n,
        outputs,
        inputs,
        &dz.data,
        outputs as isize,
        1,
        w,
        inputs as isize,
        1,
        T::zero(),
        &mut dx.data,
        inputs as isize,
        1,
    );
    dx
}

pub(crate) fn column_sums<T: Scalar>(m: &Matrix<T>) -> Vec<T> {
    let mut s = vec![T::zero(); m.cols];
    for r in 0..m.rows {
        for (acc, &v) in s.iter_mut().zip(m.row(r)) {
            *acc = *acc + v;
        }
    }
    s
}
