// Log-space power helpers. The exponents n − m can be large, so every power
// is formed as exp(p · ln x) or as a ratio (x / y)^p.

#[inline]
pub(crate) fn pow(x: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else {
        (p * x.ln()).exp()
    }
}

#[inline]
pub(crate) fn ratio_pow(x: f64, y: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else {
        (p * (x.ln() - y.ln())).exp()
    }
}
