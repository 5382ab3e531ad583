//! Dense solve for the small normal-equation systems.

pub(crate) struct Solution {
    pub x: Vec<f64>,
    pub min_pivot: f64,
    pub max_pivot: f64,
}

impl Solution {
    /// Smallest pivot below `rel_tol` times the largest counts as singular.
    pub fn is_well_conditioned(&self, rel_tol: f64) -> bool {
        self.max_pivot > 0.0
            && self.min_pivot >= rel_tol * self.max_pivot
            && self.x.iter().all(|v| v.is_finite())
    }
}

/// Gaussian elimination with partial pivoting on a row-major `n x n` matrix.
pub(crate) fn solve(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Solution {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let mut min_pivot = f64::INFINITY;
    let mut max_pivot = 0.0_f64;
    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, a[r * n + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        min_pivot = min_pivot.min(pivot_abs);
        max_pivot = max_pivot.max(pivot_abs);
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        let p = a[col * n + col];
        if p == 0.0 {
            continue;
        }
        for r in col + 1..n {
            let factor = a[r * n + col] / p;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[r * n + k] -= factor * a[col * n + k];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row * n + row];
    }
    Solution {
        x,
        min_pivot,
        max_pivot,
    }
}
