//! Dense least-squares kernel: Householder QR with column pivoting.
//!
//! The fit path never forms the normal equations. Column pivoting makes the
//! factorization rank-revealing: after pivoting, the magnitude of the R
//! diagonal is non-increasing, so a collapsed diagonal entry identifies a
//! linearly dependent column.
//!
//! Matrices are stored column-major (`Vec<Vec<f64>>`, one inner vec per
//! column), which matches how design matrices are assembled and edited
//! during stepwise elimination.

/// Householder QR factorization of an n x p matrix with column pivoting,
/// X P = Q R.
pub(crate) struct ColPivQr {
    n: usize,
    p: usize,
    /// Column-major storage: above and on the diagonal R, below it the tail
    /// of each Householder vector (the head is in `vhead`).
    qr: Vec<Vec<f64>>,
    vhead: Vec<f64>,
    tau: Vec<f64>,
    /// perm[j] = original index of the column pivoted to position j.
    perm: Vec<usize>,
}

impl ColPivQr {
    /// Factor the matrix given as columns. Requires n >= p >= 1.
    pub fn factor(x_cols: &[Vec<f64>]) -> Self {
        let p = x_cols.len();
        assert!(p >= 1, "empty matrix");
        let n = x_cols[0].len();
        assert!(x_cols.iter().all(|c| c.len() == n), "ragged columns");
        assert!(n >= p, "need at least as many rows as columns");

        let mut qr: Vec<Vec<f64>> = x_cols.to_vec();
        let mut perm: Vec<usize> = (0..p).collect();
        let mut vhead = vec![0.0; p];
        let mut tau = vec![0.0; p];

        for j in 0..p {
            // Pivot: bring the column with the largest remaining norm to j.
            let mut best = j;
            let mut best_norm2 = 0.0;
            for c in j..p {
                let norm2: f64 = qr[c][j..].iter().map(|v| v * v).sum();
                if norm2 > best_norm2 {
                    best_norm2 = norm2;
                    best = c;
                }
            }
            if best != j {
                qr.swap(j, best);
                perm.swap(j, best);
            }

            let norm = best_norm2.sqrt();
            if norm == 0.0 {
                // Remaining block is exactly zero; diagonal stays 0.
                for c in j..p {
                    qr[c][j..].iter_mut().for_each(|v| *v = 0.0);
                }
                break;
            }

            let x0 = qr[j][j];
            let alpha = if x0 >= 0.0 { -norm } else { norm };
            let v0 = x0 - alpha;
            let vtv = v0 * v0 + qr[j][j + 1..].iter().map(|v| v * v).sum::<f64>();
            let t = if vtv == 0.0 { 0.0 } else { 2.0 / vtv };
            vhead[j] = v0;
            tau[j] = t;

            // Apply H_j = I - tau v v^T to the trailing columns.
            for c in j + 1..p {
                let mut dot = v0 * qr[c][j];
                for i in j + 1..n {
                    dot += qr[j][i] * qr[c][i];
                }
                let s = t * dot;
                qr[c][j] -= s * v0;
                for i in j + 1..n {
                    qr[c][i] -= s * qr[j][i];
                }
            }
            qr[j][j] = alpha;
            // qr[j][j+1..] keeps the Householder tail.
        }

        Self { n, p, qr, vhead, tau, perm }
    }

    /// |R_jj| in pivoted order.
    pub fn diag_abs(&self) -> Vec<f64> {
        (0..self.p).map(|j| self.qr[j][j].abs()).collect()
    }

    /// Original indices of columns whose rank-revealing diagonal falls below
    /// `tol_ratio` times the largest diagonal. Sorted ascending.
    pub fn dependent_columns(&self, tol_ratio: f64) -> Vec<usize> {
        let diag = self.diag_abs();
        let largest = diag.iter().cloned().fold(0.0, f64::max);
        let mut dep: Vec<usize> = diag
            .iter()
            .enumerate()
            .filter(|(_, &d)| d < tol_ratio * largest || largest == 0.0)
            .map(|(j, _)| self.perm[j])
            .collect();
        dep.sort_unstable();
        dep
    }

    fn apply_reflector(&self, j: usize, w: &mut [f64]) {
        let t = self.tau[j];
        if t == 0.0 {
            return;
        }
        let v0 = self.vhead[j];
        let mut dot = v0 * w[j];
        for i in j + 1..self.n {
            dot += self.qr[j][i] * w[i];
        }
        let s = t * dot;
        w[j] -= s * v0;
        for i in j + 1..self.n {
            w[i] -= s * self.qr[j][i];
        }
    }

    /// Least-squares solution of X b = y, returned in original column order.
    /// Assumes full rank (check `dependent_columns` first).
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.n);
        let mut z = y.to_vec();
        for j in 0..self.p {
            self.apply_reflector(j, &mut z);
        }
        // Back-substitution on R.
        let mut b = vec![0.0; self.p];
        for i in (0..self.p).rev() {
            let mut s = z[i];
            for j in i + 1..self.p {
                s -= self.qr[j][i] * b[j];
            }
            b[i] = s / self.qr[i][i];
        }
        let mut beta = vec![0.0; self.p];
        for (j, &orig) in self.perm.iter().enumerate() {
            beta[orig] = b[j];
        }
        beta
    }

    /// Diagonal of the hat matrix H = Q1 Q1^T, via the thin Q columns.
    pub fn hat_diagonal(&self) -> Vec<f64> {
        let mut h = vec![0.0; self.n];
        let mut col = vec![0.0; self.n];
        for k in 0..self.p {
            col.iter_mut().for_each(|v| *v = 0.0);
            col[k] = 1.0;
            for j in (0..self.p).rev() {
                self.apply_reflector(j, &mut col);
            }
            for i in 0..self.n {
                h[i] += col[i] * col[i];
            }
        }
        h
    }

    /// (X^T X)^{-1} in original column order, computed as P R^{-1} R^{-T} P^T.
    pub fn xtx_inverse(&self) -> Vec<Vec<f64>> {
        let p = self.p;
        // U = R^{-1}, column by column.
        let mut u = vec![vec![0.0; p]; p];
        for c in 0..p {
            for i in (0..=c).rev() {
                let mut s = if i == c { 1.0 } else { 0.0 };
                for j in i + 1..=c {
                    s -= self.qr[j][i] * u[j][c];
                }
                u[i][c] = s / self.qr[i][i];
            }
        }
        // G_piv = U U^T, then undo the pivoting.
        let mut g = vec![vec![0.0; p]; p];
        for a in 0..p {
            for b in a..p {
                let mut s = 0.0;
                for m in b..p {
                    // U is upper triangular: U[a][m] = 0 for m < a.
                    s += u[a][m] * u[b][m];
                }
                g[self.perm[a]][self.perm[b]] = s;
                g[self.perm[b]][self.perm[a]] = s;
            }
        }
        g
    }
}

/// Matrix-vector product for column-major X: returns X b.
pub(crate) fn mat_vec(x_cols: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = x_cols.first().map_or(0, |c| c.len());
    let mut out = vec![0.0; n];
    for (col, &bj) in x_cols.iter().zip(b) {
        for (o, &v) in out.iter_mut().zip(col) {
            *o += bj * v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn solves_exact_line() {
        // y = 1 + 2x on x = 0,1,2
        let cols = vec![vec![1.0, 1.0, 1.0], vec![0.0, 1.0, 2.0]];
        let qr = ColPivQr::factor(&cols);
        let beta = qr.solve(&[1.0, 3.0, 5.0]);
        assert!(close(beta[0], 1.0, 1e-12), "{beta:?}");
        assert!(close(beta[1], 2.0, 1e-12), "{beta:?}");
    }

    #[test]
    fn detects_duplicate_column() {
        let a = vec![1.0, 2.0, 3.0, 4.0];
        let cols = vec![vec![1.0; 4], a.clone(), a.clone()];
        let qr = ColPivQr::factor(&cols);
        let dep = qr.dependent_columns(1e-10);
        assert_eq!(dep.len(), 1);
        assert!(dep[0] == 1 || dep[0] == 2);
    }

    #[test]
    fn hat_diagonal_sums_to_p() {
        let cols = vec![
            vec![1.0; 6],
            vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
            vec![1.0, 4.0, 9.0, 16.0, 25.0, 36.0],
        ];
        let qr = ColPivQr::factor(&cols);
        let h = qr.hat_diagonal();
        let sum: f64 = h.iter().sum();
        assert!(close(sum, 3.0, 1e-12), "sum = {sum}");
        assert!(h.iter().all(|&v| v > 0.0 && v <= 1.0 + 1e-12));
    }

    #[test]
    fn xtx_inverse_matches_direct_inverse_on_2x2() {
        let cols = vec![vec![1.0, 1.0, 1.0, 1.0], vec![1.0, 2.0, 3.0, 5.0]];
        let qr = ColPivQr::factor(&cols);
        let g = qr.xtx_inverse();
        // X^T X = [[4, 11], [11, 39]]; det = 156 - 121 = 35.
        let det = 35.0;
        assert!(close(g[0][0], 39.0 / det, 1e-12));
        assert!(close(g[0][1], -11.0 / det, 1e-12));
        assert!(close(g[1][1], 4.0 / det, 1e-12));
    }
}
