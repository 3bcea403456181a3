//! Adaptive quadrature used for kernel and jump-moment integrals.

use crate::error::{Error, Result};

/// Adaptive Simpson integration of `f` on `[a, b]` to absolute tolerance `tol`.
///
/// Integrands are expected to be continuous after the caller's endpoint
/// substitutions. The per-node tolerance never drops below the float-noise
/// floor of the whole integral, where further refinement cannot help.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let floor = 1e-15 * whole.abs().max(1e-30);
    let mut evals = 0usize;
    let v = adaptive_rec(
        f,
        a,
        b,
        fa,
        fm,
        fb,
        whole,
        tol.max(floor),
        floor,
        52,
        &mut evals,
    )?;
    if !v.is_finite() {
        return Err(Error::DivergentMoment(format!(
            "non-finite integral on [{a}, {b}]"
        )));
    }
    Ok(v)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    floor: f64,
    depth: usize,
    evals: &mut usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    *evals += 2;
    if *evals > 4_000_000 {
        return Err(Error::DivergentMoment(format!(
            "quadrature did not converge on [{a}, {b}]"
        )));
    }
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        // tolerate residuals within a loose band of the request; genuine
        // divergence still errors out
        if delta.abs() > 1e6 * tol.max(1e-300) {
            return Err(Error::DivergentMoment(format!(
                "quadrature depth exhausted on [{a}, {b}], residual {delta:.3e}"
            )));
        }
        return Ok(left + right + delta / 15.0);
    }
    let child_tol = (0.5 * tol).max(floor);
    let lv = adaptive_rec(f, a, m, fa, flm, fm, left, child_tol, floor, depth - 1, evals)?;
    let rv = adaptive_rec(f, m, b, fm, frm, fb, right, child_tol, floor, depth - 1, evals)?;
    Ok(lv + rv)
}

/// Fixed 3-point Gauss-Legendre rule on `[a, b]`; used for the smooth cells
/// of incremental kernel-column construction.
pub fn gauss3<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    const X: f64 = 0.774_596_669_241_483_4; // sqrt(3/5)
    const W0: f64 = 8.0 / 9.0;
    const W1: f64 = 5.0 / 9.0;
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    h * (W0 * f(c) + W1 * (f(c - h * X) + f(c + h * X)))
}

/// Fixed 5-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss5<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    const X1: f64 = 0.538_469_310_105_683_1;
    const X2: f64 = 0.906_179_845_938_664;
    const W0: f64 = 0.568_888_888_888_888_9;
    const W1: f64 = 0.478_628_670_499_366_5;
    const W2: f64 = 0.236_926_885_056_189_08;
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    h * (W0 * f(c)
        + W1 * (f(c - h * X1) + f(c + h * X1))
        + W2 * (f(c - h * X2) + f(c + h * X2)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomial_exactly() {
        let v = adaptive(&|x: f64| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - (4.0 - 4.0 + 2.0)).abs() < 1e-10);
    }

    #[test]
    fn integrates_exp() {
        let v = adaptive(&|x: f64| (-x).exp(), 0.0, 50.0, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn integrates_sqrt_singularity() {
        // endpoint-singular derivative: int_0^1 sqrt(x) dx = 2/3
        let v = adaptive(&|x: f64| x.sqrt(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn gauss3_is_degree_five() {
        let v = gauss3(&|x: f64| x.powi(5), 0.0, 1.0);
        assert!((v - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn gauss5_is_degree_nine() {
        let v = gauss5(&|x: f64| x.powi(9), 0.0, 1.0);
        assert!((v - 0.1).abs() < 1e-14);
    }
}
