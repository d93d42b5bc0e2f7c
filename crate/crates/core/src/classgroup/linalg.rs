//! Exact integer linear algebra: fraction-free determinants, rational
//! elimination, and Smith normal form.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::arith::BigRational;

/// Determinant by Bareiss fraction-free elimination. Every intermediate
/// division is exact.
pub fn bareiss_det(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    assert!(m.iter().all(|r| r.len() == n), "matrix must be square");
    let mut negate = false;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(k, i);
                    negate = !negate;
                }
                None => return BigInt::zero(),
            }
        }
        let (top, bottom) = m.split_at_mut(k + 1);
        let pivot_row = &top[k];
        let pivot = &pivot_row[k];
        for row in bottom.iter_mut() {
            let lead = row[k].clone();
            for j in k + 1..n {
                let v = &row[j] * pivot - &lead * &pivot_row[j];
                row[j] = v / &prev;
            }
            row[k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    let det = m[n - 1][n - 1].clone();
    if negate {
        -det
    } else {
        det
    }
}

/// Determinant over Q by Gaussian elimination on rationals.
pub fn rational_det(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    let mut det = BigRational::one();
    for k in 0..n {
        let Some(piv) = (k..n).find(|&i| !m[i][k].is_zero()) else {
            return BigRational::zero();
        };
        if piv != k {
            m.swap(piv, k);
            det = -det;
        }
        let pivot = m[k][k].clone();
        det *= &pivot;
        let (top, bottom) = m.split_at_mut(k + 1);
        let pivot_row = &top[k];
        for row in bottom.iter_mut() {
            if row[k].is_zero() {
                continue;
            }
            let f = &row[k] / &pivot;
            for j in k..n {
                let v = &row[j] - &f * &pivot_row[j];
                row[j] = v;
            }
        }
    }
    det
}

fn min_nonzero(a: &[Vec<BigInt>], t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for (i, row) in a.iter().enumerate().skip(t) {
        for (j, x) in row.iter().enumerate().skip(t) {
            if x.is_zero() {
                continue;
            }
            match best {
                Some((bi, bj)) if a[bi][bj].magnitude() <= x.magnitude() => {}
                _ => best = Some((i, j)),
            }
        }
    }
    best
}

fn swap_cols(a: &mut [Vec<BigInt>], j1: usize, j2: usize) {
    if j1 != j2 {
        for row in a.iter_mut() {
            row.swap(j1, j2);
        }
    }
}

/// Smith normal form diagonal of an arbitrary integer matrix: the nonzero
/// invariant factors `d1 | d2 | ...`, all positive. Pivots are chosen by
/// smallest magnitude.
pub fn snf(matrix: &[Vec<BigInt>]) -> Vec<BigInt> {
    let mut a: Vec<Vec<BigInt>> = matrix.to_vec();
    let rows = a.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = a[0].len();
    assert!(a.iter().all(|r| r.len() == cols), "ragged matrix");
    let mut diag = Vec::new();

    for t in 0..rows.min(cols) {
        let Some((pi, pj)) = min_nonzero(&a, t) else {
            break;
        };
        a.swap(t, pi);
        swap_cols(&mut a, t, pj);

        loop {
            // clear column t
            let mut clean = true;
            for i in t + 1..rows {
                if a[i][t].is_zero() {
                    continue;
                }
                let q = a[i][t].div_floor(&a[t][t]);
                if !q.is_zero() {
                    let (top, bottom) = a.split_at_mut(i);
                    let pivot_row = &top[t];
                    for (x, y) in bottom[0].iter_mut().zip(pivot_row).skip(t) {
                        *x -= &q * y;
                    }
                }
                if !a[i][t].is_zero() {
                    clean = false;
                }
            }
            // clear row t
            for j in t + 1..cols {
                if a[t][j].is_zero() {
                    continue;
                }
                let q = a[t][j].div_floor(&a[t][t]);
                if !q.is_zero() {
                    for row in a.iter_mut().skip(t) {
                        let v = &q * &row[t];
                        row[j] -= v;
                    }
                }
                if !a[t][j].is_zero() {
                    clean = false;
                }
            }
            if !clean {
                // move the smallest remainder in row/column t into the pivot
                let mut best = (t, t);
                for i in t + 1..rows {
                    if !a[i][t].is_zero() && a[i][t].magnitude() < a[best.0][best.1].magnitude() {
                        best = (i, t);
                    }
                }
                for j in t + 1..cols {
                    if !a[t][j].is_zero() && a[t][j].magnitude() < a[best.0][best.1].magnitude() {
                        best = (t, j);
                    }
                }
                if best.0 != t {
                    a.swap(t, best.0);
                }
                if best.1 != t {
                    swap_cols(&mut a, t, best.1);
                }
                continue;
            }
            // pivot must divide the remaining block
            let pivot = a[t][t].clone();
            let offender =
                (t + 1..rows).find(|&i| a[i].iter().skip(t + 1).any(|x| !x.is_multiple_of(&pivot)));
            match offender {
                Some(i) => {
                    let (top, bottom) = a.split_at_mut(i);
                    let target = &mut top[t];
                    for (x, y) in target.iter_mut().zip(&bottom[0]).skip(t) {
                        *x += y;
                    }
                }
                None => break,
            }
        }
        diag.push(a[t][t].abs());
    }
    diag
}
