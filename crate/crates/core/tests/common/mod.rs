//! Independent quadrature shared by the integration tests.

/// Adaptive Simpson on `[a, b]`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `E1(x) = ∫_{ln x}^{∞} exp(−e^s) ds` after `u = e^s`; the integrand is
/// negligible beyond `s = ln(x + 60)`.
pub fn e1_oracle(x: f64) -> f64 {
    let scale = (-x).exp() / (1.0 + x);
    simpson(&|s: f64| (-s.exp()).exp(), x.ln(), (x + 60.0).ln(), 1e-13 * scale)
}

/// Full-power eMBB rate `log2(1 + Γ/E1(−ln(1−ε)))` through the oracle.
pub fn orth_rate_oracle(gamma: f64, eps: f64) -> f64 {
    (1.0 + gamma / e1_oracle(-f64::ln_1p(-eps))).log2()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
