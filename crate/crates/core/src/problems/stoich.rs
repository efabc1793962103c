//! Row bases and left null spaces of (integer) stoichiometric matrices,
//! computed in floating point with a relative pivot tolerance.

use nalgebra::DMatrix;

/// Relative pivot tolerance; scaled by the largest absolute entry.
pub const PIVOT_TOL: f64 = 1e-10;

fn tolerance(n: &DMatrix<f64>) -> f64 {
    PIVOT_TOL * n.amax().max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowBasis {
    /// Indices of the rows of `N` kept, in increasing order.
    pub rows: Vec<usize>,
    /// The kept rows stacked, `rank x ncols`.
    pub nbar: DMatrix<f64>,
}

impl RowBasis {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }
}

/// Greedily selects rows of `n` that are linearly independent of the rows
/// already selected, scanning top to bottom.
pub fn reduce_rows(n: &DMatrix<f64>) -> RowBasis {
    let tol = tolerance(n);
    let ncols = n.ncols();
    // Echelon form of the kept rows: (pivot column, normalised row).
    let mut echelon: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut rows = Vec::new();
    for i in 0..n.nrows() {
        let mut v: Vec<f64> = n.row(i).iter().copied().collect();
        for (pc, e) in &echelon {
            let f = v[*pc];
            if f != 0.0 {
                for (vj, ej) in v.iter_mut().zip(e) {
                    *vj -= f * ej;
                }
            }
        }
        let (pc, pv) = v
            .iter()
            .enumerate()
            .map(|(j, x)| (j, x.abs()))
            .fold((0, 0.0), |acc, c| if c.1 > acc.1 { c } else { acc });
        if pv > tol {
            let p = v[pc];
            v.iter_mut().for_each(|x| *x /= p);
            echelon.push((pc, v));
            rows.push(i);
        }
        if rows.len() == ncols {
            break;
        }
    }
    let nbar = n.select_rows(rows.iter());
    RowBasis { rows, nbar }
}

/// Basis of `{ l : l^T N = 0 }`, one basis vector per row of the result
/// (`(m - rank) x m`). Empty when `N` has full row rank.
///
/// Built from the reduced row echelon form of `N^T`: each free column `f`
/// yields the vector with a one at `f` and minus the echelon coefficients at
/// the pivot columns, so integer matrices with unit pivots give integer rows.
pub fn left_nullspace(n: &DMatrix<f64>) -> DMatrix<f64> {
    let tol = tolerance(n);
    let mut a = n.transpose();
    let (rows, cols) = a.shape();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (pr, pv) = (r..rows)
            .map(|i| (i, a[(i, c)].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pv <= tol {
            continue;
        }
        a.swap_rows(r, pr);
        let p = a[(r, c)];
        for j in 0..cols {
            a[(r, j)] /= p;
        }
        for i in 0..rows {
            if i != r {
                let f = a[(i, c)];
                if f != 0.0 {
                    for j in 0..cols {
                        let v = a[(r, j)];
                        a[(i, j)] -= f * v;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let mut l = DMatrix::zeros(free.len(), cols);
    for (row, &f) in free.iter().enumerate() {
        l[(row, f)] = 1.0;
        for (i, &pc) in pivots.iter().enumerate() {
            l[(row, pc)] = -a[(i, f)];
        }
    }
    l
}

/// Looks for a strictly positive vector in the row space of `l` by
/// alternating projections between that subspace and `{ v : v >= 1 }`.
pub fn positive_conservation_vector(l: &DMatrix<f64>, max_iter: usize) -> Option<nalgebra::DVector<f64>> {
    use nalgebra::DVector;
    let m = l.ncols();
    if l.nrows() == 0 || m == 0 {
        return None;
    }
    let q = l.transpose().qr().q();
    let project = |v: &DVector<f64>| &q * q.tr_mul(v);
    let positive = |z: &DVector<f64>| z.min() > 1e-9 * z.amax();
    let mut z = project(&DVector::from_element(m, 1.0));
    for _ in 0..max_iter {
        if positive(&z) {
            let scale = z.min();
            return Some(z / scale);
        }
        let y = z.map(|v| v.max(1.0));
        let next = project(&y);
        if (&next - &z).amax() < 1e-14 {
            // Stalled away from the positive orthant.
            break;
        }
        z = next;
    }
    positive(&z).then(|| {
        let scale = z.min();
        z / scale
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_reversible_reaction() {
        let n = DMatrix::from_row_slice(2, 1, &[-1.0, 1.0]);
        let b = reduce_rows(&n);
        assert_eq!(b.rows, vec![0]);
        assert_eq!(b.nbar, DMatrix::from_row_slice(1, 1, &[-1.0]));
        let l = left_nullspace(&n);
        assert_eq!(l.nrows(), 1);
        assert!((&l * &n).amax() < 1e-12);
        assert_eq!(l.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 1.0]);
    }

    #[test]
    fn duplicated_row_is_dropped() {
        let n = DMatrix::from_row_slice(3, 2, &[1.0, -1.0, 1.0, -1.0, 0.0, 2.0]);
        let b = reduce_rows(&n);
        assert_eq!(b.rows, vec![0, 2]);
    }

    #[test]
    fn nonsingular_has_empty_left_nullspace() {
        let n = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        assert_eq!(left_nullspace(&n).nrows(), 0);
        assert_eq!(reduce_rows(&n).rank(), 2);
    }

    #[test]
    fn positive_certificate_for_chain() {
        let n = DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 1.0, -1.0, 0.0, 1.0]);
        let l = left_nullspace(&n);
        let c = positive_conservation_vector(&l, 1000).unwrap();
        assert!(c.min() > 0.0);
        assert!((n.tr_mul(&c)).amax() < 1e-10);
    }

    #[test]
    fn no_positive_certificate_when_mass_is_created() {
        // A -> 2A has no positive conserved quantity.
        let n = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let l = left_nullspace(&n);
        assert_eq!(l.nrows(), 1);
        assert!(positive_conservation_vector(&l, 1000).is_none());
    }
}
