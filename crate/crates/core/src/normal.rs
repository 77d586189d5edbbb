//! Standard normal distribution helpers.
//!
//! The CDF goes through `libm::erfc`, accurate to a few ulps. The quantile
//! starts from `statrs` and is polished with Newton steps against that CDF.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::distribution::{ContinuousCDF, Normal};

/// `Phi(x)`.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `1 - Phi(x)` without cancellation in the upper tail.
pub fn sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Density `phi(x)`.
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `Phi^{-1}(u)` for `u` in `(0, 1)`.
pub fn quantile(u: f64) -> f64 {
    if u <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if u >= 1.0 {
        return f64::INFINITY;
    }
    let mut x = Normal::standard().inverse_cdf(u);
    for _ in 0..2 {
        // work on the smaller tail to keep the residual accurate
        let (resid, dens) = if x > 0.0 {
            ((1.0 - u) - sf(x), -pdf(x))
        } else {
            (cdf(x) - u, pdf(x))
        };
        if dens == 0.0 {
            break;
        }
        x -= resid / dens;
    }
    x
}

/// `int_{-inf}^t Phi(s) ds = t Phi(t) + phi(t)`.
pub(crate) fn cdf_integral(t: f64) -> f64 {
    if t == f64::NEG_INFINITY {
        return 0.0;
    }
    t * cdf(t) + pdf(t)
}

/// `int_t^inf (1 - Phi(s)) ds = phi(t) - t (1 - Phi(t))`.
pub(crate) fn sf_integral(t: f64) -> f64 {
    if t == f64::INFINITY {
        return 0.0;
    }
    pdf(t) - t * sf(t)
}
