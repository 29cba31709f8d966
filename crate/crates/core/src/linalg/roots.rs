use super::LinalgError;

/// Default absolute tolerance on the independent variable.
pub const DEFAULT_ROOT_TOL: f64 = 1e-12;

/// Uniform samples per continuity interval when scanning for sign changes.
pub const DEFAULT_SCAN_SAMPLES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Bracket width target, relative to `max(1, |x|)`.
    pub tol: f64,
    /// Scan resolution used when the endpoints do not already bracket a root.
    pub samples: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_ROOT_TOL,
            samples: DEFAULT_SCAN_SAMPLES,
        }
    }
}

fn check_bracket(lo: f64, hi: f64) -> Result<(), LinalgError> {
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(LinalgError::InvalidBracket { lo, hi });
    }
    Ok(())
}

/// Finds a root of `f` on `[lo, hi]`.
///
/// If the endpoints already straddle zero the bracket is refined directly,
/// otherwise `[lo, hi]` is scanned at `opts.samples` points and the first
/// sign change (from `lo`) is refined.
pub fn bracketed_root<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    opts: RootOptions,
) -> Result<f64, LinalgError> {
    check_bracket(lo, hi)?;
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() != fhi.signum() {
        return brent(f, lo, hi, opts.tol);
    }
    let brackets = sign_change_brackets(&mut f, lo, hi, opts.samples)?;
    match brackets.first() {
        Some(&(a, b)) => brent(f, a, b, opts.tol),
        None => Err(LinalgError::NoRoot { lo, hi }),
    }
}

/// Sub-intervals of `[lo, hi]` (in increasing order) on whose endpoints `f`
/// changes sign, using `samples` uniform subdivisions. An exact zero at a
/// sample point yields a degenerate bracket `(x, x)`.
pub fn sign_change_brackets<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<Vec<(f64, f64)>, LinalgError> {
    check_bracket(lo, hi)?;
    let samples = samples.max(1);
    let step = (hi - lo) / samples as f64;
    let mut out = Vec::new();
    let mut x_prev = lo;
    let mut f_prev = f(lo);
    if f_prev == 0.0 {
        out.push((lo, lo));
    }
    for i in 1..=samples {
        let x = if i == samples { hi } else { lo + step * i as f64 };
        let fx = f(x);
        if fx == 0.0 {
            out.push((x, x));
        } else if f_prev != 0.0 && fx.is_finite() && f_prev.is_finite() && fx.signum() != f_prev.signum() {
            out.push((x_prev, x));
        }
        x_prev = x;
        f_prev = fx;
    }
    Ok(out)
}

/// Brent's method on a sign-changing bracket. Terminates once the bracket
/// is narrower than `tol · max(1, |x|)`.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<f64, LinalgError> {
    if lo == hi {
        return Ok(lo);
    }
    check_bracket(lo, hi)?;
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(LinalgError::NoRoot { lo, hi });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..300 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.25 * tol * b.abs().max(1.0);
        let m = 0.5 * (c - b);
        if m.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // interpolation
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(m) };
        fb = f(b);
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sqrt_two() {
        let x = bracketed_root(|x| x * x - 2.0, 0.0, 2.0, RootOptions::default()).unwrap();
        assert!((x - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn constant_has_no_root() {
        let err = bracketed_root(|_| 1.0, 0.0, 1.0, RootOptions::default()).unwrap_err();
        assert!(matches!(err, LinalgError::NoRoot { .. }));
    }

    #[test]
    fn inverted_bracket_rejected() {
        let err = bracketed_root(|x| x, 1.0, 0.0, RootOptions::default()).unwrap_err();
        assert!(matches!(err, LinalgError::InvalidBracket { .. }));
    }

    #[test]
    fn scan_finds_interior_root_without_endpoint_sign_change() {
        // (x - 0.3)(x - 0.7) is positive at both ends
        let f = |x: f64| (x - 0.3) * (x - 0.7);
        let x = bracketed_root(f, 0.0, 1.0, RootOptions::default()).unwrap();
        assert!((x - 0.3).abs() < 1e-12);
        let all = sign_change_brackets(f, 0.0, 1.0, 100).unwrap();
        assert_eq!(all.len(), 2);
    }

    proptest! {
        #[test]
        fn monotone_root_is_straddled(root in -0.9f64..0.9, slope in 0.01f64..100.0) {
            let f = |x: f64| slope * (x - root).powi(3) + 1e-3 * slope * (x - root);
            let tol = 1e-10;
            let x = bracketed_root(f, -1.0, 1.0, RootOptions { tol, samples: 64 }).unwrap();
            prop_assert!(f(x - tol) <= 0.0 && f(x + tol) >= 0.0);
        }
    }
}
