//! Fixed-capacity dense kernels for the `n × n` node blocks (n ≤ 8).

use crate::linalg::MAX_ORDER;

pub(crate) const CAP: usize = MAX_ORDER * MAX_ORDER;

pub(crate) type Block = [f64; CAP];

/// True when Gaussian elimination without pivoting on `a` meets only
/// positive pivots.
pub(crate) fn pivots_positive(a: &[f64], n: usize) -> bool {
    if n == 1 {
        return a[0] > 0.0;
    }
    let mut m: Block = [0.0; CAP];
    m[..n * n].copy_from_slice(&a[..n * n]);
    for k in 0..n {
        let p = m[k * n + k];
        if !(p > 0.0) {
            return false;
        }
        for i in (k + 1)..n {
            let f = m[i * n + k] / p;
            if f != 0.0 {
                for j in (k + 1)..n {
                    m[i * n + j] -= f * m[k * n + j];
                }
            }
        }
    }
    true
}

/// Gauss–Jordan inverse with partial pivoting. Returns false if singular.
pub(crate) fn invert(a: &[f64], n: usize, out: &mut [f64]) -> bool {
    if n == 1 {
        if a[0] == 0.0 || !a[0].is_finite() {
            return false;
        }
        out[0] = 1.0 / a[0];
        return true;
    }
    let mut m: Block = [0.0; CAP];
    m[..n * n].copy_from_slice(&a[..n * n]);
    out[..n * n].fill(0.0);
    for i in 0..n {
        out[i * n + i] = 1.0;
    }
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&p, &q| m[p * n + k].abs().total_cmp(&m[q * n + k].abs()))
            .unwrap_or(k);
        if m[piv * n + k] == 0.0 || !m[piv * n + k].is_finite() {
            return false;
        }
        if piv != k {
            for j in 0..n {
                m.swap(piv * n + j, k * n + j);
                out.swap(piv * n + j, k * n + j);
            }
        }
        let d = 1.0 / m[k * n + k];
        for j in 0..n {
            m[k * n + j] *= d;
            out[k * n + j] *= d;
        }
        for i in 0..n {
            if i == k {
                continue;
            }
            let f = m[i * n + k];
            if f != 0.0 {
                for j in 0..n {
                    m[i * n + j] -= f * m[k * n + j];
                    out[i * n + j] -= f * out[k * n + j];
                }
            }
        }
    }
    true
}

/// `out = a · b`
pub(crate) fn mul(a: &[f64], b: &[f64], n: usize, out: &mut [f64]) {
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += a[i * n + k] * b[k * n + j];
            }
            out[i * n + j] = s;
        }
    }
}

/// `out = a · v`
pub(crate) fn mul_vec(a: &[f64], v: &[f64], n: usize, out: &mut [f64]) {
    for i in 0..n {
        let mut s = 0.0;
        for k in 0..n {
            s += a[i * n + k] * v[k];
        }
        out[i] = s;
    }
}
