//! One-dimensional quadrature helpers: closed-form power integrals and
//! adaptive Simpson with a running error estimate.

/// Antiderivative of |x|^a, odd and continuous through 0 (requires a > -1):
/// F(x) = sign(x)·|x|^{a+1}/(a+1).
pub fn pow_antideriv(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    x.signum() * x.abs().powf(a + 1.0) / (a + 1.0)
}

/// Exact ∫_lo^hi |x|^a dx for a > -1 (splits at 0 implicitly via the odd
/// antiderivative).
pub fn integral_abs_pow(a: f64, lo: f64, hi: f64) -> f64 {
    pow_antideriv(a, hi) - pow_antideriv(a, lo)
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub err_bound: f64,
}

/// Adaptive Simpson on [a, b]. The error bound is the accumulated Richardson
/// estimate |S_fine - S_coarse|/15 over accepted panels, inflated by a small
/// safety factor.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, err_bound: 0.0 };
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let mut err_acc = 0.0;
    let value = rec(f, a, b, fa, fm, fb, whole, tol, 40, &mut err_acc);
    QuadResult { value, err_bound: 2.0 * err_acc + 1e-300 }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    err_acc: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        *err_acc += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1, err_acc)
        + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1, err_acc)
}

/// Adaptive Simpson with mandatory splits (piecewise-smooth integrands).
/// Breakpoints outside (a, b) are ignored.
pub fn adaptive_with_breaks(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> QuadResult {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let mut value = 0.0;
    let mut err = 0.0;
    let per_panel_tol = tol / pts.len().max(1) as f64;
    for w in pts.windows(2) {
        let r = adaptive_simpson(f, w[0], w[1], per_panel_tol);
        value += r.value;
        err += r.err_bound;
    }
    QuadResult { value, err_bound: err }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_antiderivative_matches_hand_integrals() {
        // ∫_0^1 x dx = 1/2
        assert!((integral_abs_pow(1.0, 0.0, 1.0) - 0.5).abs() < 1e-15);
        // ∫_-1^1 |x| dx = 1
        assert!((integral_abs_pow(1.0, -1.0, 1.0) - 1.0).abs() < 1e-15);
        // ∫_1^2 x dx = 3/2
        assert!((integral_abs_pow(1.0, 1.0, 2.0) - 1.5).abs() < 1e-15);
        // ∫_-1^1 |x|^{-1/2} dx = 4
        assert!((integral_abs_pow(-0.5, -1.0, 1.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_certifies_smooth_integrals() {
        let r = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-12);
        let exact = 1f64.exp() - 1.0;
        assert!((r.value - exact).abs() <= r.err_bound.max(1e-12));
        let r = adaptive_with_breaks(&|x: f64| x.abs(), -1.0, 2.0, &[0.0], 1e-12);
        assert!((r.value - 2.5).abs() < 1e-12);
    }
}
