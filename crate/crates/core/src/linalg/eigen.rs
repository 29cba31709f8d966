use num_complex::Complex64;

use super::{check_order, LinalgError, Matrix};

/// Iteration cap for the Hessenberg QR sweep (orders 4..=8).
pub const QR_MAX_ITERATIONS: usize = 500;

/// Imaginary parts below this (relative to `1 + |N|`) count as real.
const REAL_TOL: f64 = 1e-10;

/// An eigenvalue with its eigenvector, normalized to unit Euclidean norm
/// with the first nonzero component positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

impl EigenPair {
    /// `|N v - λ v|`
    pub fn residual(&self, m: &Matrix) -> f64 {
        m.mul_vec(&self.vector)
            .iter()
            .zip(&self.vector)
            .map(|(nv, v)| (nv - self.value * v).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// All eigenvalues of `m`, in no particular order.
pub fn eigenvalues(m: &Matrix) -> Result<Vec<Complex64>, LinalgError> {
    check_order(m)?;
    match m.order() {
        1 => Ok(vec![Complex64::new(m[(0, 0)], 0.0)]),
        2 => Ok(eig2(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]).to_vec()),
        3 => Ok(eig3(m)),
        _ => hessenberg_qr(m),
    }
}

/// Largest real eigenvalue. For Metzler matrices (nonnegative off-diagonal)
/// this is the rightmost eigenvalue.
pub fn max_real_eigenvalue(m: &Matrix) -> Result<f64, LinalgError> {
    let tol = REAL_TOL * (1.0 + m.norm());
    eigenvalues(m)?
        .into_iter()
        .filter(|z| z.im.abs() <= tol)
        .map(|z| z.re)
        .max_by(f64::total_cmp)
        .ok_or(LinalgError::NoRealEigenvalue)
}

fn eig2(a: f64, b: f64, c: f64, d: f64) -> [Complex64; 2] {
    let half_tr = 0.5 * (a + d);
    // (a-d)^2/4 + bc avoids the cancellation in tr^2/4 - det
    let disc = 0.25 * (a - d) * (a - d) + b * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        // larger-magnitude root first, the other from the product
        let r1 = half_tr + s.copysign(half_tr);
        let det = a * d - b * c;
        let r2 = if r1 != 0.0 { det / r1 } else { half_tr - s.copysign(half_tr) };
        let (hi, lo) = if r1 >= r2 { (r1, r2) } else { (r2, r1) };
        [Complex64::new(hi, 0.0), Complex64::new(lo, 0.0)]
    } else {
        let s = (-disc).sqrt();
        [Complex64::new(half_tr, s), Complex64::new(half_tr, -s)]
    }
}

fn eig3(m: &Matrix) -> Vec<Complex64> {
    // λ³ + c2 λ² + c1 λ + c0
    let c2 = -m.trace();
    let c1 = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)] + m[(0, 0)] * m[(2, 2)]
        - m[(0, 2)] * m[(2, 0)]
        + m[(1, 1)] * m[(2, 2)]
        - m[(1, 2)] * m[(2, 1)];
    let c0 = -m.determinant();
    let poly = |x: f64| ((x + c2) * x + c1) * x + c0;
    let dpoly = |x: f64| (3.0 * x + 2.0 * c2) * x + c1;
    let polish = |mut x: f64| {
        for _ in 0..4 {
            let d = dpoly(x);
            if d == 0.0 {
                break;
            }
            let step = poly(x) / d;
            if !step.is_finite() {
                break;
            }
            x -= step;
        }
        x
    };

    // depressed cubic t³ + p t + q with λ = t - c2/3
    let shift = -c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let scale = 1.0 + m.max_abs();
    if disc <= 1e-14 * scale.powi(6) && p < 0.0 {
        let r = (-p / 3.0).sqrt();
        let arg = (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0);
        let phi = arg.acos();
        let tau = std::f64::consts::TAU;
        (0..3)
            .map(|k| Complex64::new(polish(2.0 * r * ((phi + tau * k as f64) / 3.0).cos() + shift), 0.0))
            .collect()
    } else {
        let sd = disc.max(0.0).sqrt();
        let u = (-q / 2.0 + sd).cbrt();
        let v = (-q / 2.0 - sd).cbrt();
        let real = polish(u + v + shift);
        // deflate: λ² + (c2 + real) λ + (c1 + real (c2 + real))
        let b1 = c2 + real;
        let b0 = c1 + real * b1;
        let [z1, z2] = eig2(0.0, 1.0, -b0, -b1);
        vec![Complex64::new(real, 0.0), z1, z2]
    }
}

/// Hessenberg reduction (Gaussian elimination with pivoting) followed by
/// the Francis double-shift QR iteration.
fn hessenberg_qr(m: &Matrix) -> Result<Vec<Complex64>, LinalgError> {
    let n = m.order();
    // 1-based storage; row/column 0 unused
    let w = n + 1;
    let mut a = vec![0.0; w * w];
    for i in 0..n {
        for j in 0..n {
            a[(i + 1) * w + (j + 1)] = m[(i, j)];
        }
    }
    let ix = |i: usize, j: usize| i * w + j;

    for mm in 2..n {
        let mut x = 0.0_f64;
        let mut i = mm;
        for j in mm..=n {
            if a[ix(j, mm - 1)].abs() > x.abs() {
                x = a[ix(j, mm - 1)];
                i = j;
            }
        }
        if i != mm {
            for j in (mm - 1)..=n {
                a.swap(ix(i, j), ix(mm, j));
            }
            for j in 1..=n {
                a.swap(ix(j, i), ix(j, mm));
            }
        }
        if x != 0.0 {
            for i in (mm + 1)..=n {
                let mut y = a[ix(i, mm - 1)];
                if y != 0.0 {
                    y /= x;
                    a[ix(i, mm - 1)] = y;
                    for j in mm..=n {
                        a[ix(i, j)] -= y * a[ix(mm, j)];
                    }
                    for j in 1..=n {
                        a[ix(j, mm)] += y * a[ix(j, i)];
                    }
                }
            }
        }
    }
    for i in 1..=n {
        for j in 1..i.saturating_sub(1) {
            a[ix(i, j)] = 0.0;
        }
    }

    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += a[ix(i, j)].abs();
        }
    }
    let mut nn = n;
    let mut t = 0.0;
    let mut total_its = 0usize;
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = a[ix(l - 1, l - 1)].abs() + a[ix(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[ix(l, l - 1)].abs() + s == s {
                    a[ix(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[ix(nn, nn)];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[ix(nn - 1, nn - 1)];
            let mut ww = a[ix(nn, nn - 1)] * a[ix(nn - 1, nn)];
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + ww;
                let z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != 0.0 {
                        wr[nn] = x - ww / z;
                    }
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                nn = nn.saturating_sub(2);
                break;
            }
            if total_its >= QR_MAX_ITERATIONS {
                return Err(LinalgError::NoConvergence {
                    iterations: total_its,
                });
            }
            if its == 10 || its == 20 {
                // exceptional shift
                t += x;
                for i in 1..=nn {
                    a[ix(i, i)] -= x;
                }
                let s = a[ix(nn, nn - 1)].abs() + a[ix(nn - 1, nn - 2)].abs();
                x = 0.75 * s;
                y = x;
                ww = -0.4375 * s * s;
            }
            its += 1;
            total_its += 1;
            let mut mm = nn - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[ix(mm, mm)];
                let r0 = x - z;
                let s0 = y - z;
                p = (r0 * s0 - ww) / a[ix(mm + 1, mm)] + a[ix(mm, mm + 1)];
                q = a[ix(mm + 1, mm + 1)] - z - r0 - s0;
                r = a[ix(mm + 2, mm + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if mm == l {
                    break;
                }
                let u = a[ix(mm, mm - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[ix(mm - 1, mm - 1)].abs() + z.abs() + a[ix(mm + 1, mm + 1)].abs());
                if u + v == v {
                    break;
                }
                mm -= 1;
            }
            for i in (mm + 2)..=nn {
                a[ix(i, i - 2)] = 0.0;
                if i != mm + 2 {
                    a[ix(i, i - 3)] = 0.0;
                }
            }
            let mut k = mm;
            while k < nn {
                if k != mm {
                    p = a[ix(k, k - 1)];
                    q = a[ix(k + 1, k - 1)];
                    r = 0.0;
                    if k != nn - 1 {
                        r = a[ix(k + 2, k - 1)];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == mm {
                        if l != mm {
                            a[ix(k, k - 1)] = -a[ix(k, k - 1)];
                        }
                    } else {
                        a[ix(k, k - 1)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        let mut pp = a[ix(k, j)] + q * a[ix(k + 1, j)];
                        if k != nn - 1 {
                            pp += r * a[ix(k + 2, j)];
                            a[ix(k + 2, j)] -= pp * z;
                        }
                        a[ix(k + 1, j)] -= pp * y;
                        a[ix(k, j)] -= pp * x;
                    }
                    let mmin = nn.min(k + 3);
                    for i in l..=mmin {
                        let mut pp = x * a[ix(i, k)] + y * a[ix(i, k + 1)];
                        if k != nn - 1 {
                            pp += z * a[ix(i, k + 2)];
                            a[ix(i, k + 2)] -= pp * r;
                        }
                        a[ix(i, k + 1)] -= pp * q;
                        a[ix(i, k)] -= pp;
                    }
                }
                k += 1;
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}

/// Eigenvector for a (real) eigenvalue `value` of `m`, by inverse iteration.
pub fn eigenpair_for(m: &Matrix, value: f64) -> Result<EigenPair, LinalgError> {
    check_order(m)?;
    let n = m.order();
    let scale = 1.0 + m.norm();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
    let mut shift = value + 1e-10 * scale;
    let mut best: Option<EigenPair> = None;
    for attempt in 0..3 {
        let shifted = m.shift(shift);
        for _ in 0..6 {
            let x = match shifted.solve(&v) {
                Ok(x) => x,
                Err(_) => break,
            };
            let norm = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 {
                break;
            }
            v = x.into_iter().map(|c| c / norm).collect();
        }
        let pair = normalized_pair(value, &v);
        let res = pair.residual(m);
        if res <= 1e-12 * scale {
            return Ok(pair);
        }
        if best.as_ref().map_or(true, |b| res < b.residual(m)) {
            best = Some(pair);
        }
        shift = value + 1e-7 * scale * (attempt + 1) as f64;
    }
    best.ok_or(LinalgError::Singular)
}

fn normalized_pair(value: f64, v: &[f64]) -> EigenPair {
    let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    let mut vector: Vec<f64> = v.iter().map(|c| c / norm).collect();
    if let Some(first) = vector.iter().find(|c| c.abs() > 1e-12) {
        if *first < 0.0 {
            vector.iter_mut().for_each(|c| *c = -*c);
        }
    }
    EigenPair { value, vector }
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors matching `values`.
    pub pairs: Vec<EigenPair>,
}

impl SymmetricEigen {
    /// `V Λ Vᵀ`
    pub fn reconstruct(&self) -> Matrix {
        let n = self.values.len();
        let mut out = Matrix::zeros(n);
        for p in &self.pairs {
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += p.value * p.vector[i] * p.vector[j];
                }
            }
        }
        out
    }
}

/// Cyclic Jacobi eigen-decomposition.
pub fn symmetric_eigen(s: &Matrix) -> Result<SymmetricEigen, LinalgError> {
    check_order(s)?;
    let asymmetry = s.relative_asymmetry();
    if asymmetry > 1e-12 {
        return Err(LinalgError::NotSymmetric { asymmetry });
    }
    let n = s.order();
    let mut a = s.symmetric_part();
    let mut v = Matrix::identity(n);
    let total = a.norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * total {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let pairs: Vec<EigenPair> = order
        .iter()
        .map(|&k| {
            let col: Vec<f64> = (0..n).map(|i| v[(i, k)]).collect();
            normalized_pair(a[(k, k)], &col)
        })
        .collect();
    Ok(SymmetricEigen {
        values: pairs.iter().map(|p| p.value).collect(),
        pairs,
    })
}

/// Eigen-basis of a 2×2 matrix normalized component-wise: the first
/// component of `v1` (larger eigenvalue) is 1 and the second component of
/// `v2` is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Basis2x2 {
    pub values: [f64; 2],
    pub v1: [f64; 2],
    pub v2: [f64; 2],
}

impl Basis2x2 {
    /// Columns `v1`, `v2`.
    pub fn as_columns(&self) -> Matrix {
        let mut m = Matrix::zeros(2);
        m[(0, 0)] = self.v1[0];
        m[(1, 0)] = self.v1[1];
        m[(0, 1)] = self.v2[0];
        m[(1, 1)] = self.v2[1];
        m
    }
}

pub fn eigen_basis_2x2(m: &Matrix) -> Result<Basis2x2, LinalgError> {
    if m.order() != 2 {
        return Err(LinalgError::UnsupportedOrder(m.order()));
    }
    check_order(m)?;
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let disc = (a - d) * (a - d) + 4.0 * b * c;
    let scale = (a.abs() + b.abs() + c.abs() + d.abs()).max(f64::MIN_POSITIVE);
    if disc <= 1e-24 * scale * scale {
        return Err(LinalgError::ComplexOrRepeatedEigenvalues);
    }
    let [l1, l2] = eig2(a, b, c, d);
    let (l1, l2) = (l1.re, l2.re);

    // v1 = (1, y): pick the better-conditioned row of (N - l1 I) v = 0
    let y1 = if b.abs() >= (d - l1).abs() {
        (l1 - a) / b
    } else if (d - l1).abs() > 0.0 {
        -c / (d - l1)
    } else {
        return Err(LinalgError::DegenerateNormalization);
    };
    // v2 = (x, 1)
    let x2 = if c.abs() >= (a - l2).abs() {
        (l2 - d) / c
    } else if (a - l2).abs() > 0.0 {
        -b / (a - l2)
    } else {
        return Err(LinalgError::DegenerateNormalization);
    };
    let basis = Basis2x2 {
        values: [l1, l2],
        v1: [1.0, y1],
        v2: [x2, 1.0],
    };
    // the unit component may be impossible (eigenvector orthogonal to it)
    for (val, v) in [(l1, basis.v1), (l2, basis.v2)] {
        let r0 = a * v[0] + b * v[1] - val * v[0];
        let r1 = c * v[0] + d * v[1] - val * v[1];
        let vn = (v[0] * v[0] + v[1] * v[1]).sqrt();
        if !vn.is_finite() || (r0 * r0 + r1 * r1).sqrt() > 1e-9 * scale * vn {
            return Err(LinalgError::DegenerateNormalization);
        }
    }
    Ok(basis)
}
