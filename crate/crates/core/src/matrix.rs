//! Dense row-major matrices and the lock-free shared view used by the
//! trainers.

use std::marker::PhantomData;

use num_traits::Float;
use rand::distributions::uniform::SampleUniform;
use rand::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Float> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix { rows, cols, data }
    }

    /// Entries drawn uniformly from `[-bound, bound)`, row by row.
    pub fn uniform<R: Rng>(rows: usize, cols: usize, bound: F, rng: &mut R) -> Self
    where
        F: SampleUniform,
    {
        let data = (0..rows * cols).map(|_| rng.gen_range(-bound..bound)).collect();
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [F] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn max_row_norm(&self) -> F {
        (0..self.rows)
            .map(|i| norm(self.row(i)))
            .fold(F::zero(), F::max)
    }

    pub fn hogwild(&mut self) -> Hogwild<'_, F> {
        Hogwild {
            ptr: self.data.as_mut_ptr(),
            rows: self.rows,
            cols: self.cols,
            _marker: PhantomData,
        }
    }
}

/// Shared mutable access to a matrix without mutual exclusion.
///
/// Threads holding copies of the same view may update overlapping rows
/// concurrently (Hogwild-style SGD). Updates are sparse, so lost writes are
/// rare and tolerated. Single-threaded use is fully deterministic.
pub struct Hogwild<'a, F> {
    ptr: *mut F,
    rows: usize,
    cols: usize,
    _marker: PhantomData<&'a mut [F]>,
}

impl<F> Clone for Hogwild<'_, F> {
    fn clone(&self) -> Self {
        Hogwild {
            ptr: self.ptr,
            rows: self.rows,
            cols: self.cols,
            _marker: PhantomData,
        }
    }
}

unsafe impl<F: Send> Send for Hogwild<'_, F> {}
unsafe impl<F: Sync> Sync for Hogwild<'_, F> {}

impl<'a, F> Hogwild<'a, F> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[F] {
        assert!(i < self.rows, "row {i} out of bounds ({})", self.rows);
        // SAFETY: in bounds; the borrowed matrix outlives 'a. Concurrent
        // writers may race with this read (Hogwild contract).
        unsafe { std::slice::from_raw_parts(self.ptr.add(i * self.cols), self.cols) }
    }

    /// Callers must not hold two slices of the same row at once.
    #[inline]
    #[allow(clippy::mut_from_ref)]
    pub fn row_mut(&self, i: usize) -> &mut [F] {
        assert!(i < self.rows, "row {i} out of bounds ({})", self.rows);
        // SAFETY: as in `row`.
        unsafe { std::slice::from_raw_parts_mut(self.ptr.add(i * self.cols), self.cols) }
    }
}

#[inline]
pub fn dot<F: Float>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `y += alpha * x`
#[inline]
pub fn axpy<F: Float>(alpha: F, x: &[F], y: &mut [F]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

pub fn norm<F: Float>(a: &[F]) -> F {
    dot(a, a).sqrt()
}
