//! Monotone profiles `q` on `[0, ∞)` with `q(0) = 0`, the input of the
//! functional `Q(y) = ∫₀^y q + (1/α − y)·q(y)` and of the scaled recursion.

use crate::dist::Alpha;
use crate::error::{Error, Result};
use crate::numerics::{bisect, integrate_from_zero};

/// Absolute quadrature tolerance used for profile integrals.
pub const QUAD_TOL: f64 = 1e-11;
/// Tolerance in `y` for profile inversion.
pub const INVERSE_TOL: f64 = 1e-12;

pub trait Profile: Send + Sync {
    fn value(&self, y: f64) -> f64;

    /// Start of the constant tail, if the profile has one.
    fn plateau_start(&self) -> Option<f64> {
        None
    }

    /// Power `k` such that the profile behaves like `y^{1/k}` at the origin;
    /// quadrature substitutes `y = t^k` on `[0, 1]` when `k > 1`.
    fn cusp_power(&self) -> f64 {
        1.0
    }

    /// `∫₀^s q(y) dy`.
    fn integral(&self, s: f64) -> f64 {
        integrate_from_zero(|y| self.value(y), s, self.cusp_power(), QUAD_TOL)
    }

    /// `q⁻¹(t)` on the strictly increasing part `(0, upper)`, by bisection.
    ///
    /// Requires `0 < t < q(upper)`; anything else means the profile is not
    /// monotone where it should be.
    fn inverse(&self, t: f64, upper: f64) -> Result<f64> {
        let top = self.value(upper);
        if !(t > 0.0 && t < top) {
            return Err(Error::MalformedProfile(format!(
                "cannot invert at {t}: range on (0, {upper}) is (0, {top})"
            )));
        }
        bisect(|y| self.value(y) - t, 0.0, upper, INVERSE_TOL).ok_or_else(|| {
            Error::MalformedProfile(format!("inverse at {t} is not bracketed by (0, {upper})"))
        })
    }
}

impl<P: Profile + ?Sized> Profile for &P {
    fn value(&self, y: f64) -> f64 {
        (**self).value(y)
    }
    fn plateau_start(&self) -> Option<f64> {
        (**self).plateau_start()
    }
    fn cusp_power(&self) -> f64 {
        (**self).cusp_power()
    }
    fn integral(&self, s: f64) -> f64 {
        (**self).integral(s)
    }
    fn inverse(&self, t: f64, upper: f64) -> Result<f64> {
        (**self).inverse(t, upper)
    }
}

/// The limiting two-choice profile `h(y) = y^{1/α}·f(y)`.
#[derive(Clone, Copy, Debug)]
pub struct LimitProfile {
    pub alpha: Alpha,
}

impl Profile for LimitProfile {
    fn value(&self, y: f64) -> f64 {
        crate::limits::h_limit(self.alpha, y)
    }

    fn cusp_power(&self) -> f64 {
        self.alpha.get().max(1.0)
    }
}

/// `q(y) = y^{1/α}`, the profile of the one-choice recursion.
#[derive(Clone, Copy, Debug)]
pub struct PowerProfile {
    pub alpha: Alpha,
}

impl Profile for PowerProfile {
    fn value(&self, y: f64) -> f64 {
        if y <= 0.0 {
            0.0
        } else {
            y.powf(self.alpha.inv())
        }
    }

    fn integral(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let p = self.alpha.inv() + 1.0;
        s.powf(p) / p
    }

    fn inverse(&self, t: f64, _upper: f64) -> Result<f64> {
        if t > 0.0 {
            Ok(t.powf(self.alpha.get()))
        } else {
            Err(Error::MalformedProfile(format!("cannot invert y^(1/α) at {t}")))
        }
    }
}

/// Caches `∫₀^y q` on a uniform mesh so that repeated integrals only need a
/// short quadrature from the nearest mesh point.
pub struct Tabulated<P> {
    inner: P,
    step: f64,
    cumulative: Vec<f64>,
}

impl<P: Profile> Tabulated<P> {
    /// Tabulates on `[0, upper]` with `cells` equal cells.
    pub fn new(inner: P, upper: f64, cells: usize) -> Self {
        let cells = cells.max(1);
        let step = upper / cells as f64;
        let mut cumulative = Vec::with_capacity(cells + 1);
        cumulative.push(0.0);
        let head = inner.integral(step);
        cumulative.push(head);
        for i in 1..cells {
            let a = step * i as f64;
            let piece =
                crate::numerics::adaptive_simpson(|y| inner.value(y), a, a + step, QUAD_TOL / cells as f64);
            cumulative.push(cumulative[i] + piece);
        }
        Tabulated {
            inner,
            step,
            cumulative,
        }
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: Profile> Profile for Tabulated<P> {
    fn value(&self, y: f64) -> f64 {
        self.inner.value(y)
    }

    fn plateau_start(&self) -> Option<f64> {
        self.inner.plateau_start()
    }

    fn cusp_power(&self) -> f64 {
        self.inner.cusp_power()
    }

    fn integral(&self, s: f64) -> f64 {
        if s <= self.step {
            return self.inner.integral(s);
        }
        let last = self.cumulative.len() - 1;
        let k = ((s / self.step).floor() as usize).min(last);
        let a = self.step * k as f64;
        self.cumulative[k]
            + crate::numerics::adaptive_simpson(|y| self.inner.value(y), a, s, QUAD_TOL)
    }

    fn inverse(&self, t: f64, upper: f64) -> Result<f64> {
        self.inner.inverse(t, upper)
    }
}
