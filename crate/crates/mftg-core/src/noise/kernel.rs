//! Causal Volterra kernels and the effective-variance functional.
//!
//! The fractional-Brownian kernel is
//!
//!   K_H(t, t') = c_H (t - t')^{H-1/2}
//!              + c_H (1/2 - H) int_{t'}^{t} (z - t')^{H-3/2} (1 - (t'/z)^{1/2-H}) dz
//!
//! with c_H = sqrt(2H Gamma(3/2 - H) / (Gamma(1/2 + H) Gamma(2 - 2H))).
//! For H = 1/2 the kernel degenerates to 1 and the driven process is a
//! standard Brownian motion. The endpoint singularity (z - t')^{H-3/2} is
//! removed by the substitution z = t' + w^2 before quadrature.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quad;
use statrs::function::gamma::gamma;

const KERNEL_TOL: f64 = 1e-11;

/// K(t, t') evaluator: fractional-Brownian by Hurst parameter, or tabulated
/// node values on a grid (no multifractional constructor is provided).
#[derive(Debug, Clone, PartialEq)]
pub enum VolterraKernel {
    Fbm { hurst: f64, c_h: f64 },
    Tabulated { grid: TimeGrid, values: Vec<f64> },
}

/// Normalizer c_H of the fractional-Brownian kernel.
pub fn fbm_normalizer(hurst: f64) -> Result<f64> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::Domain(format!("Hurst parameter must be in (0,1), got {hurst}")));
    }
    Ok((2.0 * hurst * gamma(1.5 - hurst) / (gamma(0.5 + hurst) * gamma(2.0 - 2.0 * hurst)))
        .sqrt())
}

impl VolterraKernel {
    pub fn fbm(hurst: f64) -> Result<Self> {
        let c_h = fbm_normalizer(hurst)?;
        Ok(Self::Fbm { hurst, c_h })
    }

    /// Raw tabulated kernel: `values[n * (n+1)/2 + m]` holds K(t_n, u_m) at
    /// cell midpoints u_m = (t_m + t_{m+1})/2 for m < n.
    pub fn tabulated(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        let n = grid.steps();
        if values.len() != n * (n + 1) / 2 {
            return Err(Error::InvalidInput(format!(
                "tabulated kernel needs {} midpoint values",
                n * (n + 1) / 2
            )));
        }
        Ok(Self::Tabulated { grid, values })
    }

    pub fn hurst(&self) -> Option<f64> {
        match self {
            Self::Fbm { hurst, .. } => Some(*hurst),
            Self::Tabulated { .. } => None,
        }
    }

    pub fn c_h(&self) -> Option<f64> {
        match self {
            Self::Fbm { c_h, .. } => Some(*c_h),
            Self::Tabulated { .. } => None,
        }
    }

    /// Evaluate K(t, t'). Causality is a hard precondition: t' < t.
    ///
    /// For H != 1/2 the kernel is singular at t' = 0, so strictly positive
    /// t' is required there; internal consumers always query cell midpoints.
    pub fn eval(&self, t: f64, tp: f64) -> Result<f64> {
        if !(tp < t) {
            return Err(Error::Domain(format!(
                "kernel causality violated: t' = {tp} must be < t = {t}"
            )));
        }
        match self {
            Self::Fbm { hurst, c_h } => {
                let h = *hurst;
                if (h - 0.5).abs() < 1e-14 {
                    return Ok(1.0);
                }
                if tp <= 0.0 {
                    return Err(Error::Domain(
                        "fBm kernel is singular at t' = 0; query t' > 0".into(),
                    ));
                }
                let first = c_h * (t - tp).powf(h - 0.5);
                let inner = fbm_inner_integral(h, tp, tp, t)?;
                Ok(first + c_h * (0.5 - h) * inner)
            }
            Self::Tabulated { grid, values } => {
                // nearest midpoint row/column lookup
                let n = grid.cell_of(t - 0.5 * grid.dt()) + 1;
                let m = grid.cell_of(tp).min(n.saturating_sub(1));
                Ok(values[n * (n - 1) / 2 + m])
            }
        }
    }

    /// Derivative of K with respect to its first argument:
    /// c_H (H - 1/2) (t - t')^{H-3/2} (t'/t)^{1/2-H} for the fBm kernel.
    pub fn deriv_first(&self, t: f64, tp: f64) -> Result<f64> {
        match self {
            Self::Fbm { hurst, c_h } => {
                let h = *hurst;
                if (h - 0.5).abs() < 1e-14 {
                    return Ok(0.0);
                }
                Ok(c_h * (h - 0.5) * (t - tp).powf(h - 1.5) * (tp / t).powf(0.5 - h))
            }
            Self::Tabulated { grid, .. } => {
                let h = 0.5 * grid.dt();
                Ok((self.eval(t + h, tp)? - self.eval((t - h).max(tp * (1.0 + 1e-12)), tp)?)
                    / (t + h - (t - h).max(tp * (1.0 + 1e-12))))
            }
        }
    }
}


/// Numerically stable 1 - (s/z)^a for z >= s: the log1p/expm1 form avoids
/// cancellation when s/z ~ 1, the direct form is exact enough elsewhere.
#[inline]
fn one_minus_ratio_pow(s: f64, z: f64, a: f64) -> f64 {
    let ratio = s / z;
    if ratio < 0.5 {
        1.0 - ratio.powf(a)
    } else {
        -(a * ((s - z) / z).ln_1p()).exp_m1()
    }
}

/// inner integral int_{lo}^{hi} (z - s)^{H-3/2} (1 - (s/z)^{1/2-H}) dz with
/// the w-substitution z = s + w^2 (valid when lo >= s).
///
/// The integral grows like s^{-(|H-1/2|)} as s -> 0, so the quadrature
/// tolerance is scaled by that magnitude to stay effectively relative.
fn fbm_inner_integral(h: f64, s: f64, lo: f64, hi: f64) -> Result<f64> {
    let wa = (lo - s).max(0.0).sqrt();
    let wb = (hi - s).sqrt();
    let f = |w: f64| {
        if w == 0.0 {
            return 0.0;
        }
        let z = s + w * w;
        2.0 * w.powf(2.0 * h - 2.0) * one_minus_ratio_pow(s, z, 0.5 - h)
    };
    let scale = s.powf(-(h - 0.5).abs()).max(1.0);
    quad::adaptive(&f, wa, wb, KERNEL_TOL * scale)
}

/// Incremental builder of kernel columns K(t_n, u) for one fixed second
/// argument u (a cell midpoint); the correction integral accumulates cell by
/// cell so a full column costs O(N) quadrature cells.
pub struct KernelColumn<'a> {
    kernel: &'a VolterraKernel,
    s: f64,
    acc: f64,
    prev_t: f64,
    cells_done: usize,
}

impl<'a> KernelColumn<'a> {
    pub fn new(kernel: &'a VolterraKernel, s: f64) -> Self {
        Self {
            kernel,
            s,
            acc: 0.0,
            prev_t: s,
            cells_done: 0,
        }
    }

    /// Advance the accumulated correction integral to `t` (monotone calls)
    /// and return K(t, s).
    pub fn eval_at(&mut self, t: f64) -> Result<f64> {
        match self.kernel {
            VolterraKernel::Fbm { hurst, c_h } => {
                let h = *hurst;
                if (h - 0.5).abs() < 1e-14 {
                    return Ok(1.0);
                }
                let s = self.s;
                debug_assert!(t > self.prev_t);
                // the first cells after the diagonal carry the singularity;
                // integrate those adaptively, the rest with Gauss-Legendre
                if self.cells_done < 3 {
                    self.acc += fbm_inner_integral(h, s, self.prev_t, t)?;
                } else {
                    let g = |z: f64| (z - s).powf(h - 1.5) * one_minus_ratio_pow(s, z, 0.5 - h);
                    self.acc += quad::gauss3(&g, self.prev_t, t);
                }
                self.cells_done += 1;
                self.prev_t = t;
                Ok(c_h * (t - s).powf(h - 0.5) + c_h * (0.5 - h) * self.acc)
            }
            VolterraKernel::Tabulated { .. } => self.kernel.eval(t, self.s),
        }
    }
}

/// Cumulative variance V(t) of int_0^t sigma(u) dB_gv(u):
///
///   V(t) = int_0^t g(t; u)^2 du,
///   g(t; u) = sigma(u) K(t, u) + int_u^t (sigma(v) - sigma(u)) dK/dv (v, u) dv.
///
/// The correction integral vanishes identically for constant sigma; for
/// Lipschitz sigma the (v-u)^{H-3/2} derivative singularity is tamed by the
/// (sigma(v) - sigma(u)) factor and the v = u + w^2 substitution.
///
/// The outer integral uses a composite Gauss-Legendre rule on panels graded
/// geometrically into both endpoint singularities (u -> 0 and u -> t). The
/// panel layout scales with t, so the small discretization residual is a
/// smooth function of t and cancels in the finite-difference derivative.
pub fn gv_variance_integral(
    kernel: &VolterraKernel,
    sigma: &dyn Fn(f64) -> f64,
    sigma_constant: bool,
    t: f64,
) -> Result<f64> {
    if t <= 0.0 {
        return Ok(0.0);
    }
    let g = |u: f64| -> f64 {
        let base = sigma(u) * kernel.eval(t, u).unwrap_or(f64::NAN);
        if sigma_constant {
            return base;
        }
        let su = sigma(u);
        let f = |w: f64| {
            if w == 0.0 {
                return 0.0;
            }
            let v = u + w * w;
            let d = kernel.deriv_first(v, u).unwrap_or(0.0);
            (sigma(v) - su) * d * 2.0 * w
        };
        let corr = quad::adaptive(&f, 0.0, (t - u).sqrt(), 1e-9).unwrap_or(f64::NAN);
        base + corr
    };
    let g2 = |u: f64| {
        let v = g(u);
        v * v
    };

    // dyadic panels refined toward u = 0 and u = t; the dropped tails are
    // O((2^-LEVELS)^{2 min(H, 1-H)}). The upper mirror stops where t - d is
    // no longer representably below t.
    const LEVELS: i32 = 52;
    const UPPER_LEVELS: i32 = 44;
    const POINTS_PER_PANEL: usize = 2;
    let mut total = 0.0;
    for j in 0..LEVELS {
        let hi = 0.5 * t * 0.5f64.powi(j);
        let lo = 0.5 * hi;
        let step = (hi - lo) / POINTS_PER_PANEL as f64;
        for p in 0..POINTS_PER_PANEL {
            total += quad::gauss5(&g2, lo + p as f64 * step, lo + (p + 1) as f64 * step);
        }
        if j < UPPER_LEVELS {
            // mirrored panel at the upper end: u = t - d, d in [lo, hi]
            let f_up = |d: f64| g2(t - d);
            for p in 0..POINTS_PER_PANEL {
                total += quad::gauss5(&f_up, lo + p as f64 * step, lo + (p + 1) as f64 * step);
            }
        }
    }
    if !total.is_finite() {
        return Err(Error::Domain("variance integral non-finite".into()));
    }
    Ok(total)
}

/// Effective variance sigma^2_cogv(t): time derivative of the cumulative
/// variance, by central finite difference with step `h`.
pub fn effective_gv_variance_quadrature(
    kernel: &VolterraKernel,
    sigma: &dyn Fn(f64) -> f64,
    sigma_constant: bool,
    t: f64,
    h: f64,
) -> Result<f64> {
    if t <= 0.0 || h <= 0.0 || t - h <= 0.0 {
        return Err(Error::Domain(format!(
            "effective variance needs 0 < h < t, got t = {t}, h = {h}"
        )));
    }
    let vp = gv_variance_integral(kernel, sigma, sigma_constant, t + h)?;
    let vm = gv_variance_integral(kernel, sigma, sigma_constant, t - h)?;
    Ok((vp - vm) / (2.0 * h))
}

/// Fast path for constant sigma under the fBm kernel:
/// sigma^2 * 2H * t^{2H-1} (the variance t^{2H} differentiated).
pub fn effective_gv_variance_fast(hurst: f64, sigma: f64, t: f64) -> Result<f64> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::Domain(format!("Hurst parameter must be in (0,1), got {hurst}")));
    }
    if t < 0.0 {
        return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
    }
    if sigma == 0.0 {
        return Ok(0.0);
    }
    Ok(sigma * sigma * 2.0 * hurst * t.powf(2.0 * hurst - 1.0))
}
