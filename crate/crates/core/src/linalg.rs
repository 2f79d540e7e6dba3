//! Dense LU with partial pivoting for the small systems that appear in the
//! Newton and Taylor steps (dimension ≤ a few dozen).

use nalgebra::{DMatrix, DVector};

/// Outcome of [`lu_solve`].
#[derive(Debug, Clone, PartialEq)]
pub enum LuOutcome {
    Solved(DVector<f64>),
    /// A pivot fell below `pivot_tol × max row ∞-norm`.
    Singular,
}

impl LuOutcome {
    pub fn solution(self) -> Option<DVector<f64>> {
        match self {
            LuOutcome::Solved(x) => Some(x),
            LuOutcome::Singular => None,
        }
    }
}

/// Solve `M · sol = rhs` by Gaussian elimination with partial pivoting.
///
/// Singularity is reported, not raised: the Newton solver branches on it.
pub fn lu_solve(m: &DMatrix<f64>, rhs: &DVector<f64>, pivot_tol: f64) -> LuOutcome {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "lu_solve needs a square matrix");
    assert_eq!(n, rhs.len(), "rhs length must match matrix dimension");

    let scale = (0..n)
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if n == 0 {
        return LuOutcome::Solved(DVector::zeros(0));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return LuOutcome::Singular;
    }
    let threshold = pivot_tol * scale;

    let mut a = m.clone();
    let mut b = rhs.clone();
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, a[(i, k)].abs()))
            .max_by(|l, r| l.1.total_cmp(&r.1))
            .expect("nonempty");
        if !(pmax > threshold) {
            return LuOutcome::Singular;
        }
        if p != k {
            a.swap_rows(p, k);
            b.swap_rows(p, k);
        }
        let pivot = a[(k, k)];
        for i in (k + 1)..n {
            let f = a[(i, k)] / pivot;
            if f == 0.0 {
                continue;
            }
            a[(i, k)] = 0.0;
            for j in (k + 1)..n {
                a[(i, j)] -= f * a[(k, j)];
            }
            b[i] -= f * b[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in (k + 1)..n {
            s -= a[(k, j)] * b[j];
        }
        b[k] = s / a[(k, k)];
    }
    LuOutcome::Solved(b)
}
