//! Small dense helpers on row-major `n × n` matrices.

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` in place given the lower factor.
pub(crate) fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Lower factor `C` with `C Cᵀ = A Aᵀ` for a row-major `m × n` matrix `A`
/// of full row rank, via Householder QR of `Aᵀ`. Unlike forming `A Aᵀ`
/// first, this does not square the condition number.
pub(crate) fn gram_factor(a: &[f64], m: usize, n: usize) -> Option<Vec<f64>> {
    debug_assert!(m <= n);
    // t = Aᵀ, n × m.
    let mut t = vec![0.0; n * m];
    for i in 0..m {
        for k in 0..n {
            t[k * m + i] = a[i * n + k];
        }
    }
    let mut v = vec![0.0; n];
    for j in 0..m {
        let norm = (j..n).map(|r| t[r * m + j] * t[r * m + j]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let alpha = if t[j * m + j] > 0.0 { -norm } else { norm };
        for r in j..n {
            v[r] = t[r * m + j];
        }
        v[j] -= alpha;
        let vv: f64 = (j..n).map(|r| v[r] * v[r]).sum();
        if vv > 0.0 {
            for c in j..m {
                let dot: f64 = (j..n).map(|r| v[r] * t[r * m + c]).sum();
                let f = 2.0 * dot / vv;
                for r in j..n {
                    t[r * m + c] -= f * v[r];
                }
            }
        }
    }
    let mut c = vec![0.0; m * m];
    for j in 0..m {
        let sign = t[j * m + j].signum();
        for i in j..m {
            c[i * m + j] = sign * t[j * m + i];
        }
    }
    (0..m).all(|i| c[i * m + i] > 0.0 && c[i * m + i].is_finite()).then_some(c)
}

pub(crate) fn cholesky_inverse(l: &[f64], n: usize) -> Vec<f64> {
    let mut inv = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        col.iter_mut().for_each(|c| *c = 0.0);
        col[j] = 1.0;
        cholesky_solve(l, n, &mut col);
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    inv
}
