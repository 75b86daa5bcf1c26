//! Dense symmetric linear algebra for small Gram matrices (m <= 8).

/// Row-major symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }
}

/// Outcome of the pivoted Cholesky determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetResult {
    pub det: f64,
    /// True when a pivot fell below the tolerance and the determinant was
    /// clamped to zero.
    pub clamped: bool,
}

/// Determinant of a PSD matrix by Cholesky with a relative pivot tolerance.
///
/// A pivot below `tol_rel * trace` means the matrix is numerically singular;
/// the determinant is then reported as exactly 0 and flagged.
pub fn spd_determinant(a: &SymMatrix, tol_rel: f64) -> DetResult {
    let n = a.n;
    if n == 0 {
        return DetResult { det: 1.0, clamped: false };
    }
    let tol = tol_rel * a.trace().max(f64::MIN_POSITIVE);
    let mut l = vec![0.0f64; n * n];
    let mut det = 1.0f64;
    for j in 0..n {
        let mut p = a.get(j, j);
        for k in 0..j {
            p -= l[j * n + k] * l[j * n + k];
        }
        if p <= tol {
            return DetResult { det: 0.0, clamped: true };
        }
        det *= p;
        let s = p.sqrt();
        l[j * n + j] = s;
        for i in (j + 1)..n {
            let mut v = a.get(i, j);
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = v / s;
        }
    }
    DetResult { det, clamped: false }
}

/// Solve `A x = b` for symmetric positive definite `A`; `None` when a pivot
/// collapses.
pub fn spd_solve(a: &SymMatrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.n;
    assert_eq!(b.len(), n);
    let tol = 1e-14 * a.trace().max(f64::MIN_POSITIVE);
    let mut l = vec![0.0f64; n * n];
    for j in 0..n {
        let mut p = a.get(j, j);
        for k in 0..j {
            p -= l[j * n + k] * l[j * n + k];
        }
        if p <= tol {
            return None;
        }
        let s = p.sqrt();
        l[j * n + j] = s;
        for i in (j + 1)..n {
            let mut v = a.get(i, j);
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = v / s;
        }
    }
    // forward then backward substitution
    let mut y = vec![0.0f64; n];
    for i in 0..n {
        let mut v = b[i];
        for k in 0..i {
            v -= l[i * n + k] * y[k];
        }
        y[i] = v / l[i * n + i];
    }
    let mut x = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut v = y[i];
        for k in (i + 1)..n {
            v -= l[k * n + i] * x[k];
        }
        x[i] = v / l[i * n + i];
    }
    Some(x)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn sym_eigenvalues(a: &SymMatrix) -> Vec<f64> {
    let n = a.n;
    let mut m = a.data.clone();
    let idx = |i: usize, j: usize| i * n + j;
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[idx(i, j)] * m[idx(i, j)];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + a.trace().abs()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[idx(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[idx(p, p)];
                let aqq = m[idx(q, q)];
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[idx(k, p)];
                    let akq = m[idx(k, q)];
                    m[idx(k, p)] = c * akp - s * akq;
                    m[idx(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[idx(p, k)];
                    let aqk = m[idx(q, k)];
                    m[idx(p, k)] = c * apk - s * aqk;
                    m[idx(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[idx(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(n: usize, vals: &[f64]) -> SymMatrix {
        SymMatrix {
            n,
            data: vals.to_vec(),
        }
    }

    #[test]
    fn det_of_2x2() {
        let a = mat(2, &[4.0, 1.0, 1.0, 3.0]);
        let r = spd_determinant(&a, 1e-12);
        assert!(!r.clamped);
        assert!((r.det - 11.0).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_clamps_to_zero() {
        let a = mat(2, &[1.0, 1.0, 1.0, 1.0]);
        let r = spd_determinant(&a, 1e-12);
        assert!(r.clamped);
        assert_eq!(r.det, 0.0);
    }

    #[test]
    fn solve_recovers_known_solution() {
        let a = mat(3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a.get(i, j) * x_true[j]).sum())
            .collect();
        let x = spd_solve(&a, &b).unwrap();
        for (xi, ti) in x.iter().zip(x_true.iter()) {
            assert!((xi - ti).abs() < 1e-10);
        }
    }

    #[test]
    fn eigenvalues_of_diagonal_and_known_matrix() {
        let a = mat(2, &[2.0, 0.0, 0.0, 5.0]);
        let ev = sym_eigenvalues(&a);
        assert!((ev[0] - 2.0).abs() < 1e-12 && (ev[1] - 5.0).abs() < 1e-12);

        // eigenvalues of [[2,1],[1,2]] are 1 and 3
        let a = mat(2, &[2.0, 1.0, 1.0, 2.0]);
        let ev = sym_eigenvalues(&a);
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn det_equals_product_of_eigenvalues() {
        let a = mat(3, &[3.0, 0.4, 0.1, 0.4, 2.0, 0.3, 0.1, 0.3, 1.5]);
        let det = spd_determinant(&a, 1e-12).det;
        let ev = sym_eigenvalues(&a);
        let prod: f64 = ev.iter().product();
        assert!((det - prod).abs() < 1e-10 * det.abs());
    }
}
