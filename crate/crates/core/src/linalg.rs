//! Dense kernels for the small `N × N` systems that appear per time-step.

use nalgebra::SMatrix;

use crate::odes::Tangent;

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu<const N: usize> {
    lu: Tangent<N>,
    perm: [usize; N],
}

impl<const N: usize> Lu<N> {
    /// Returns `None` when a pivot is exactly zero or not finite.
    pub fn new(a: &Tangent<N>) -> Option<Self> {
        let mut lu = *a;
        let mut perm = [0usize; N];
        for (i, p) in perm.iter_mut().enumerate() {
            *p = i;
        }
        for k in 0..N {
            let (pivot_row, pivot) =
                (k..N)
                    .map(|i| (i, lu[(i, k)].abs()))
                    .fold(
                        (k, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if !(pivot > 0.0) || !pivot.is_finite() {
                return None;
            }
            if pivot_row != k {
                lu.swap_rows(k, pivot_row);
                perm.swap(k, pivot_row);
            }
            let d = lu[(k, k)];
            for i in k + 1..N {
                let factor = lu[(i, k)] / d;
                lu[(i, k)] = factor;
                for j in k + 1..N {
                    lu[(i, j)] -= factor * lu[(k, j)];
                }
            }
        }
        Some(Self { lu, perm })
    }

    pub fn solve<const K: usize>(&self, b: &SMatrix<f64, N, K>) -> SMatrix<f64, N, K> {
        let mut x = SMatrix::<f64, N, K>::zeros();
        for (i, &p) in self.perm.iter().enumerate() {
            x.set_row(i, &b.row(p));
        }
        for c in 0..K {
            for i in 0..N {
                let mut s = x[(i, c)];
                for j in 0..i {
                    s -= self.lu[(i, j)] * x[(j, c)];
                }
                x[(i, c)] = s;
            }
            for i in (0..N).rev() {
                let mut s = x[(i, c)];
                for j in i + 1..N {
                    s -= self.lu[(i, j)] * x[(j, c)];
                }
                x[(i, c)] = s / self.lu[(i, i)];
            }
        }
        x
    }
}

/// Maximum absolute column sum.
pub fn norm_1<const N: usize>(a: &Tangent<N>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// 1-norm condition number of `a`, computed from its factorization.
pub fn condition_1<const N: usize>(a: &Tangent<N>, lu: &Lu<N>) -> f64 {
    let inv = lu.solve(&Tangent::<N>::identity());
    let c = norm_1(a) * norm_1(&inv);
    if c.is_nan() {
        f64::INFINITY
    } else {
        c
    }
}

/// Thin QR by modified Gram–Schmidt with reorthogonalization: returns `Q` and
/// the diagonal of `R`.
pub fn qr_orthonormalize<const N: usize>(a: &Tangent<N>) -> (Tangent<N>, [f64; N]) {
    let mut q = *a;
    let mut diag = [0.0; N];
    for j in 0..N {
        for _pass in 0..2 {
            for i in 0..j {
                let proj = q.column(i).dot(&q.column(j));
                let qi = q.column(i).into_owned();
                q.column_mut(j).axpy(-proj, &qi, 1.0);
            }
        }
        let norm = q.column(j).norm();
        diag[j] = norm;
        q.column_mut(j).scale_mut(1.0 / norm);
    }
    (q, diag)
}
