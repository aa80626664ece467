//! Small numerical kernels shared by the solvers: adaptive Simpson
//! quadrature, golden-section minimisation, cubic Hermite evaluation and
//! the empirical quantile used by the Monte Carlo summaries.

/// Inverse golden ratio, `(sqrt(5) - 1) / 2`.
pub const INV_PHI: f64 = 0.618_033_988_749_894_9;

const MAX_SIMPSON_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, MAX_SIMPSON_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Golden-section search for a minimum of a unimodal `f` on `[lo, hi]`.
///
/// Returns `(argmin, min, evaluations)`. The bracket is shrunk until its
/// width is below `tol`.
pub fn golden_section<F, E>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64, usize), E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut evals = 2;
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        evals += 1;
    }
    let (x, fx) = if fc <= fd { (c, fc) } else { (d, fd) };
    Ok((x, fx, evals))
}

/// Cubic Hermite interpolation on `[x0, x0 + h]` with values and slopes at
/// both ends, evaluated at local coordinate `s` in `[0, 1]`.
#[inline]
pub fn hermite(s: f64, h: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Derivative of [`hermite`] with respect to the global coordinate.
#[inline]
pub fn hermite_slope(s: f64, h: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let s2 = s * s;
    let dh00 = 6.0 * s2 - 6.0 * s;
    let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
    let dh01 = -6.0 * s2 + 6.0 * s;
    let dh11 = 3.0 * s2 - 2.0 * s;
    (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1
}

/// Empirical quantile of sorted data, linear interpolation between order
/// statistics (the "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let w = pos - lo as f64;
    sorted[lo] + w * (sorted[hi] - sorted[lo])
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_smooth_functions() {
        let v = adaptive_simpson(|t| (-0.3 * t).exp(), 0.0, 5.0, 1e-12);
        let exact = (1.0 - (-1.5f64).exp()) / 0.3;
        assert!((v - exact).abs() < 1e-11);
        let p = adaptive_simpson(|t| t.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((p - 2.0).abs() < 1e-11);
    }

    #[test]
    fn simpson_empty_interval() {
        assert_eq!(adaptive_simpson(|t| t, 1.0, 1.0, 1e-9), 0.0);
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, fx, _) =
            golden_section::<_, ()>(|t| Ok((t - 1.234).powi(2) + 0.5), 0.0, 4.0, 1e-9).unwrap();
        assert!((x - 1.234).abs() < 1e-8);
        assert!((fx - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let f = |x: f64| 2.0 * x.powi(3) - x + 0.5;
        let df = |x: f64| 6.0 * x * x - 1.0;
        let (a, h) = (0.3, 0.2);
        for k in 0..=10 {
            let s = k as f64 / 10.0;
            let x = a + s * h;
            let v = hermite(s, h, f(a), f(a + h), df(a), df(a + h));
            let d = hermite_slope(s, h, f(a), f(a + h), df(a), df(a + h));
            assert!((v - f(x)).abs() < 1e-14);
            assert!((d - df(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn quantile_interpolates() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 4.0);
        assert!((quantile_sorted(&xs, 0.5) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-12);
    }
}
