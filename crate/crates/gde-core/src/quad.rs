//! Complex-valued quadrature over real intervals.

use crate::error::{GdeError, Result};
use num_complex::Complex64;

/// Adaptive Simpson with Richardson acceptance. `tol` is absolute.
pub fn adaptive_simpson(
    f: &mut dyn FnMut(f64) -> Complex64,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: usize,
) -> Result<Complex64> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson_step(a, b, fa, fm, fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &mut dyn FnMut(f64) -> Complex64,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    tol: f64,
    depth: usize,
) -> Result<Complex64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_step(a, m, fa, flm, fm);
    let right = simpson_step(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.norm() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(GdeError::QuadratureFailure(format!(
            "refinement exhausted on [{a}, {b}] with residual {:.3e}",
            delta.norm() / 15.0
        )));
    }
    let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

fn simpson_step(a: f64, b: f64, fa: Complex64, fm: Complex64, fb: Complex64) -> Complex64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Composite Simpson on a uniform grid; needs an odd sample count.
pub fn simpson_uniform(values: &[Complex64], step: f64) -> Complex64 {
    assert!(
        values.len() >= 3 && values.len() % 2 == 1,
        "composite Simpson needs an odd count >= 3, got {}",
        values.len()
    );
    let mut acc = values[0] + values[values.len() - 1];
    for (k, &v) in values.iter().enumerate().skip(1).take(values.len() - 2) {
        acc += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * (step / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn adaptive_matches_oscillatory_integral() {
        // int_0^pi e^{ix} dx = 2i
        let mut f = |x: f64| Complex64::new(0.0, x).exp();
        let got = adaptive_simpson(&mut f, 0.0, PI, 1e-12, 40).unwrap();
        assert!((got - Complex64::new(0.0, 2.0)).norm() < 1e-11);
    }

    #[test]
    fn cubic_is_exact() {
        let mut f = |x: f64| Complex64::new(x * x * x, 0.0);
        let got = adaptive_simpson(&mut f, 0.0, 1.0, 1e-14, 4).unwrap();
        assert!((got.re - 0.25).abs() < 1e-15);
        assert_eq!(got.im, 0.0);
    }

    #[test]
    fn depth_exhaustion_is_an_error() {
        let mut f = |x: f64| Complex64::new((40.0 * x).sin() / (x + 1e-6).sqrt(), 0.0);
        match adaptive_simpson(&mut f, 0.0, 1.0, 1e-14, 2) {
            Err(GdeError::QuadratureFailure(_)) => {}
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn composite_simpson_on_sine() {
        let n = 201;
        let step = PI / (n - 1) as f64;
        let values: Vec<Complex64> = (0..n)
            .map(|k| Complex64::new((k as f64 * step).sin(), 0.0))
            .collect();
        let got = simpson_uniform(&values, step);
        assert!((got.re - 2.0).abs() < 1e-9, "got {}", got.re);
    }
}
