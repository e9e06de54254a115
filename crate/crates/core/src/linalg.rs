//! Least-squares kernels for the coboundary solvers: a row-sequential Givens
//! QR for banded tall systems and a matrix-free LSQR.

use crate::repn::C64;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Complex Givens pair `(c, s)` with `c` real, mapping `(a, b)` to `(r, 0)`
/// via `[c, s; -conj(s), c]`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    if b == zero() {
        return (1.0, zero());
    }
    if a == zero() {
        return (0.0, b.conj() / b.norm());
    }
    let r = a.norm().hypot(b.norm());
    let c = a.norm() / r;
    let s = (a / a.norm()) * b.conj() / r;
    (c, s)
}

/// Incremental least squares `min ‖A x - b‖₂` for `A` with `ncols` columns and
/// at most `width` consecutive non-zeros per row. Rows are rotated into an
/// upper-triangular `R` with `width - 1` superdiagonals.
#[derive(Clone, Debug)]
pub struct BandedLeastSquares {
    ncols: usize,
    width: usize,
    r: Vec<C64>,
    qtb: Vec<C64>,
    residual_sq: f64,
}

impl BandedLeastSquares {
    pub fn new(ncols: usize, width: usize) -> Self {
        assert!(width >= 1);
        Self { ncols, width, r: vec![zero(); ncols * width], qtb: vec![zero(); ncols], residual_sq: 0.0 }
    }

    fn r_at(&mut self, row: usize, col: usize) -> &mut C64 {
        &mut self.r[row * self.width + (col - row)]
    }

    /// Adds the row with entries `vals` at columns `first..first + vals.len()`.
    pub fn add_row(&mut self, first: usize, vals: &[C64], rhs: C64) {
        assert!(vals.len() <= self.width && first + vals.len() <= self.ncols);
        let w = self.width;
        let mut row = vec![zero(); w + 1];
        row[..vals.len()].copy_from_slice(vals);
        let mut rhs = rhs;
        let mut col = first;
        // `row[j]` holds the entry at column `col + j`.
        while col < self.ncols {
            if row[0] != zero() {
                let a = *self.r_at(col, col);
                let (c, s) = givens(a, row[0]);
                let span = w.min(self.ncols - col);
                for j in 0..span {
                    let rv = *self.r_at(col, col + j);
                    let xv = row[j];
                    *self.r_at(col, col + j) = rv * c + s * xv;
                    row[j] = -s.conj() * rv + xv * c;
                }
                let qb = self.qtb[col];
                self.qtb[col] = qb * c + s * rhs;
                rhs = -s.conj() * qb + rhs * c;
            }
            row.rotate_left(1);
            row[w] = zero();
            col += 1;
            if row.iter().all(|v| *v == zero()) {
                break;
            }
        }
        self.residual_sq += rhs.norm_sqr();
    }

    /// Smallest `|R_ii|` relative to the largest; zero means rank deficient.
    pub fn pivot_ratio(&self) -> f64 {
        let diag: Vec<f64> = (0..self.ncols).map(|i| self.r[i * self.width].norm()).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        diag.iter().cloned().fold(f64::INFINITY, f64::min) / max
    }

    /// Back substitution; `None` when a pivot vanishes.
    pub fn solve(&self) -> Option<Vec<C64>> {
        let n = self.ncols;
        let w = self.width;
        let mut x = vec![zero(); n];
        for i in (0..n).rev() {
            let mut acc = self.qtb[i];
            for j in 1..w.min(n - i) {
                acc -= self.r[i * w + j] * x[i + j];
            }
            let d = self.r[i * w];
            if d == zero() {
                return None;
            }
            x[i] = acc / d;
        }
        Some(x)
    }

    /// `‖A x - b‖₂` at the least-squares solution.
    pub fn residual(&self) -> f64 {
        self.residual_sq.sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct LsqrResult {
    pub x: Vec<C64>,
    pub iterations: usize,
    pub residual: f64,
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// LSQR for `min ‖A x - b‖₂` started at `x = 0`, so for consistent or
/// rank-deficient systems it converges to the minimal-norm solution.
/// `apply(x)` computes `A x`, `apply_adj(y)` computes `Aᴴ y`.
pub fn lsqr(
    apply: impl Fn(&[C64]) -> Vec<C64>,
    apply_adj: impl Fn(&[C64]) -> Vec<C64>,
    b: &[C64],
    ncols: usize,
    tol: f64,
    max_iter: usize,
) -> LsqrResult {
    let mut x = vec![zero(); ncols];
    let mut beta = norm(b);
    if beta == 0.0 {
        return LsqrResult { x, iterations: 0, residual: 0.0 };
    }
    let mut u: Vec<C64> = b.iter().map(|v| v / beta).collect();
    let mut v = apply_adj(&u);
    let mut alpha = norm(&v);
    if alpha == 0.0 {
        return LsqrResult { x, iterations: 0, residual: beta };
    }
    v.iter_mut().for_each(|e| *e /= alpha);
    let mut w = v.clone();
    let mut phibar = beta;
    let mut rhobar = alpha;
    let mut anorm_sq = 0.0;
    let bnorm = beta;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let av = apply(&v);
        for (ui, ai) in u.iter_mut().zip(&av) {
            *ui = ai - *ui * alpha;
        }
        beta = norm(&u);
        if beta > 0.0 {
            u.iter_mut().for_each(|e| *e /= beta);
        }
        anorm_sq += alpha * alpha + beta * beta;
        let atu = apply_adj(&u);
        for (vi, ai) in v.iter_mut().zip(&atu) {
            *vi = ai - *vi * beta;
        }
        alpha = norm(&v);
        if alpha > 0.0 {
            v.iter_mut().for_each(|e| *e /= alpha);
        }
        let rho = rhobar.hypot(beta);
        let c = rhobar / rho;
        let s = beta / rho;
        let theta = s * alpha;
        rhobar = -c * alpha;
        let phi = c * phibar;
        phibar *= s;
        for (xi, wi) in x.iter_mut().zip(&w) {
            *xi += wi * (phi / rho);
        }
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi = vi - *wi * (theta / rho);
        }
        let arnorm = phibar * alpha * c.abs();
        if phibar <= tol * bnorm || arnorm <= tol * anorm_sq.sqrt() * phibar || alpha == 0.0 {
            break;
        }
    }
    LsqrResult { x, iterations, residual: phibar }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Deterministic banded test matrix: `m = n + 2` rows, row `i` touching
    /// columns `i-2 ..= i`.
    fn tall(n: usize) -> Vec<(usize, Vec<C64>)> {
        (0..n + 2)
            .map(|i| {
                let first = i.saturating_sub(2);
                let last = i.min(n - 1);
                let vals = (first..=last)
                    .map(|j| c(((i * 7 + j * 3) % 11) as f64 - 5.0, ((i + 2 * j) % 5) as f64 - 1.5))
                    .collect();
                (first, vals)
            })
            .collect()
    }

    fn dense_apply(rows: &[(usize, Vec<C64>)], x: &[C64]) -> Vec<C64> {
        rows.iter().map(|(f, vals)| vals.iter().enumerate().map(|(j, a)| a * x[f + j]).sum()).collect()
    }

    fn dense_adj(rows: &[(usize, Vec<C64>)], y: &[C64], n: usize) -> Vec<C64> {
        let mut out = vec![zero(); n];
        for ((f, vals), yi) in rows.iter().zip(y) {
            for (j, a) in vals.iter().enumerate() {
                out[f + j] += a.conj() * yi;
            }
        }
        out
    }

    #[test]
    fn banded_qr_matches_lsqr() {
        let n = 30;
        let rows = tall(n);
        let b: Vec<C64> = (0..n + 2).map(|i| c((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let mut ls = BandedLeastSquares::new(n, 3);
        for ((f, vals), bi) in rows.iter().zip(&b) {
            ls.add_row(*f, vals, *bi);
        }
        let x = ls.solve().unwrap();
        let oracle = lsqr(|v| dense_apply(&rows, v), |y| dense_adj(&rows, y, n), &b, n, 1e-15, 10_000);
        let diff: f64 = x.iter().zip(&oracle.x).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(diff <= 1e-8 * norm(&x), "diff {diff}");
        let r: Vec<C64> = dense_apply(&rows, &x).iter().zip(&b).map(|(a, b)| a - b).collect();
        assert!((norm(&r) - ls.residual()).abs() <= 1e-10 * norm(&b));
    }

    #[test]
    fn consistent_system_has_zero_residual() {
        let n = 20;
        let rows = tall(n);
        let x0: Vec<C64> = (0..n).map(|i| c(1.0 / (1.0 + i as f64), i as f64 * 0.1)).collect();
        let b = dense_apply(&rows, &x0);
        let mut ls = BandedLeastSquares::new(n, 3);
        for ((f, vals), bi) in rows.iter().zip(&b) {
            ls.add_row(*f, vals, *bi);
        }
        let x = ls.solve().unwrap();
        assert!(ls.residual() <= 1e-12 * norm(&b));
        for (a, b) in x.iter().zip(&x0) {
            assert!((a - b).norm() <= 1e-10);
        }
    }

    #[test]
    fn row_order_does_not_matter() {
        let n = 12;
        let rows = tall(n);
        let b: Vec<C64> = (0..n + 2).map(|i| c(i as f64, -1.0)).collect();
        let mut fwd = BandedLeastSquares::new(n, 3);
        let mut rev = BandedLeastSquares::new(n, 3);
        for ((f, vals), bi) in rows.iter().zip(&b) {
            fwd.add_row(*f, vals, *bi);
        }
        for ((f, vals), bi) in rows.iter().zip(&b).rev() {
            rev.add_row(*f, vals, *bi);
        }
        let (x, y) = (fwd.solve().unwrap(), rev.solve().unwrap());
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() <= 1e-10 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn zero_column_is_reported() {
        let mut ls = BandedLeastSquares::new(2, 2);
        ls.add_row(0, &[c(1.0, 0.0)], c(1.0, 0.0));
        assert!(ls.solve().is_none());
        assert_eq!(ls.pivot_ratio(), 0.0);
    }
}
