//! Exact finite-n dynamic programming for `F(x) = x^α` on `[0, 1]`.
//!
//! `g(x) = E[X ∧ x] = x − x^{α+1}/(α+1)` and `g_{n+1} = g ∘ g_n`, so `g_n`
//! is known exactly at any fixed abscissa by repeated application of `g`;
//! a grid of abscissae is advanced stage by stage without re-interpolation.
//! The two-choice values follow
//!
//! ```text
//! V_{n+1} = ∫₀^{b_n} g_n(x)·αx^{α−1} dx + (1 − b_n^α)·V_n,   g_n(b_n) = V_n,
//! ```
//!
//! started from `V_2 = E[X_2 ∧ X_1]`.

use serde::{Deserialize, Serialize};

use crate::dist::Alpha;
use crate::error::{Error, Result};
use crate::limits::f_limit;

pub const MIN_GRID_SIZE: usize = 512;

/// `g(x) = x − x^{α+1}/(α+1)`.
#[inline]
pub fn g1(alpha: Alpha, x: f64) -> f64 {
    x - g_decrement(alpha, x)
}

/// `x^{α+1}/(α+1)`, the amount one application of `g` removes.
#[inline]
fn g_decrement(alpha: Alpha, x: f64) -> f64 {
    let a1 = alpha.get() + 1.0;
    x.powf(a1) / a1
}

/// `g_n(x)`: the one-choice value with `n` variables and guarantee `x`.
pub fn iterate_g(alpha: Alpha, x: f64, n: usize) -> f64 {
    (0..n).fold(x, |v, _| g1(alpha, v))
}

/// `V_n¹ = g_n(1)` for `n = 0..=n_max` (with `V_0¹ = 1`).
pub fn one_choice_values(alpha: Alpha, n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut v = 1.0;
    out.push(v);
    for _ in 0..n_max {
        v = g1(alpha, v);
        out.push(v);
    }
    out
}

/// `V_2 = E[X_2 ∧ X_1] = ∫₀¹ (1 − x^α)² dx = 1 − 2/(α+1) + 1/(2α+1)`.
pub fn two_choice_start(alpha: Alpha) -> f64 {
    let a = alpha.get();
    1.0 - 2.0 / (a + 1.0) + 1.0 / (2.0 * a + 1.0)
}

/// `g_n` sampled on a fixed grid of `(0, 1]`.
///
/// Abscissae are `x_i = (i/G)^{max(1, 3/α)}`, `i = 0..=G`, which concentrates
/// points near the origin where the thresholds live for large `n`.
///
/// Alongside `g_n(x_i)` the grid accumulates two small quantities directly:
/// the deficit `x − g_n(x)`, so that `1 − f_n` keeps full relative
/// precision where `g_n(x) ≈ x`, and the curvature defect
/// `n·x^{α+1}/(α+1) − (x − g_n(x))`, the second-order part of the deficit,
/// which resolves `f − f_n ≈ y²/(2n(α+1))` near `y = 0`.
#[derive(Clone, Debug)]
pub struct GnGrid {
    alpha: Alpha,
    n: usize,
    xs: Vec<f64>,
    /// `x_i^α`, the quadrature variable.
    us: Vec<f64>,
    gvals: Vec<f64>,
    deficits: Vec<f64>,
    defects: Vec<f64>,
}

impl GnGrid {
    /// The grid at stage 1, holding `g_1 = g`.
    pub fn new(alpha: Alpha, grid_size: usize) -> Result<Self> {
        if grid_size < MIN_GRID_SIZE {
            return Err(Error::param(
                "grid_size",
                format!("at least {MIN_GRID_SIZE} points required, got {grid_size}"),
            ));
        }
        let power = (3.0 / alpha.get()).max(1.0);
        let g = grid_size as f64;
        let xs: Vec<f64> = (0..=grid_size)
            .map(|i| if i == grid_size { 1.0 } else { (i as f64 / g).powf(power) })
            .collect();
        let us = xs.iter().map(|x| x.powf(alpha.get())).collect();
        let deficits: Vec<f64> = xs.iter().map(|&x| g_decrement(alpha, x)).collect();
        let gvals = xs.iter().zip(&deficits).map(|(x, d)| x - d).collect();
        Ok(GnGrid {
            alpha,
            n: 1,
            defects: vec![0.0; xs.len()],
            xs,
            us,
            gvals,
            deficits,
        })
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn stage(&self) -> usize {
        self.n
    }

    /// Number of cells `G`; the grid holds `G + 1` points including 0.
    pub fn grid_size(&self) -> usize {
        self.xs.len() - 1
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn gvals(&self) -> &[f64] {
        &self.gvals
    }

    /// `x_i − g_n(x_i)`.
    pub fn deficits(&self) -> &[f64] {
        &self.deficits
    }

    /// `V_n¹ = g_n(1)`.
    pub fn one_choice_value(&self) -> f64 {
        *self.gvals.last().expect("grid is never empty")
    }

    /// `n·x^{α+1}/(α+1) − (x − g_n(x))`.
    pub fn defects(&self) -> &[f64] {
        &self.defects
    }

    /// `g_n → g_{n+1}` at every abscissa.
    pub fn advance(&mut self) {
        let a1 = self.alpha.get() + 1.0;
        for i in 1..self.xs.len() {
            let x = self.xs[i];
            let g = self.gvals[i];
            let step = g_decrement(self.alpha, g);
            // x^{α+1}/(α+1) − step = x^{α+1}(1 − f_n^{α+1})/(α+1)
            let ratio = self.deficits[i] / x;
            let curvature = -(a1 * (-ratio).ln_1p()).exp_m1() * x * self.us[i] / a1;
            self.gvals[i] = g - step;
            self.deficits[i] += step;
            self.defects[i] += curvature;
        }
        self.n += 1;
    }

    /// Piecewise-linear `g_n(x)` between grid points.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return self.one_choice_value();
        }
        let k = self.xs.partition_point(|&p| p <= x) - 1;
        let t = (x - self.xs[k]) / (self.xs[k + 1] - self.xs[k]);
        self.gvals[k] + t * (self.gvals[k + 1] - self.gvals[k])
    }

    /// Solves `g_n(b) = v` on the interpolant. Returns the cell index and `b`.
    ///
    /// A root inside the first cell `[0, x_1]` means the grid cannot resolve
    /// the threshold at this stage.
    fn solve(&self, v: f64) -> Result<(usize, f64)> {
        let top = self.one_choice_value();
        if !(v > 0.0 && v <= top) {
            return Err(self.resolution_error());
        }
        if v == top {
            let k = self.xs.len() - 2;
            return Ok((k, 1.0));
        }
        // First index with g > v; the root lies in [x_{k}, x_{k+1}].
        let k = self.gvals.partition_point(|&g| g <= v) - 1;
        if k == 0 {
            return Err(self.resolution_error());
        }
        let (g0, g1) = (self.gvals[k], self.gvals[k + 1]);
        let t = (v - g0) / (g1 - g0);
        Ok((k, self.xs[k] + t * (self.xs[k + 1] - self.xs[k])))
    }

    fn resolution_error(&self) -> Error {
        Error::Resolution {
            stage: self.n,
            grid_size: self.grid_size(),
        }
    }

    /// `∫₀^b g_n(x)·αx^{α−1} dx` by the trapezoid rule in `u = x^α`, with the
    /// last partial cell closed at `(b^α, v)` where `v = g_n(b)`.
    fn weighted_integral(&self, k: usize, b: f64, v: f64) -> f64 {
        let mut sum = 0.0;
        for i in 0..k {
            sum += (self.us[i + 1] - self.us[i]) * (self.gvals[i] + self.gvals[i + 1]);
        }
        sum += (b.powf(self.alpha.get()) - self.us[k]) * (self.gvals[k] + v);
        0.5 * sum
    }
}

/// One stage of the two-choice recursion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpTrace {
    pub n: usize,
    /// `V_n¹`.
    pub v1: f64,
    /// `V_n²`.
    pub v2: f64,
    /// First-choice threshold, `g_n(b_n) = V_n²`.
    pub b_n: f64,
    /// `W_n = n^{1/α}·V_n²`.
    pub w_n: f64,
    /// `B_n = n^{1/α}·b_n`.
    pub b_scaled: f64,
}

impl DpTrace {
    /// `n·F(V_n²) = W_n^α`.
    pub fn scaled_two_choice(&self, alpha: Alpha) -> f64 {
        self.w_n.powf(alpha.get())
    }
}

/// The two-choice sweep, one stage at a time.
#[derive(Clone, Debug)]
pub struct DpSweep {
    grid: GnGrid,
    value: f64,
}

impl DpSweep {
    /// Positioned at stage 2.
    pub fn new(alpha: Alpha, grid_size: usize) -> Result<Self> {
        let mut grid = GnGrid::new(alpha, grid_size)?;
        grid.advance();
        Ok(DpSweep {
            grid,
            value: two_choice_start(alpha),
        })
    }

    pub fn grid(&self) -> &GnGrid {
        &self.grid
    }

    pub fn stage(&self) -> usize {
        self.grid.stage()
    }

    /// The trace of the current stage.
    pub fn trace(&self) -> Result<DpTrace> {
        let (_, b) = self.grid.solve(self.value)?;
        Ok(self.make_trace(b))
    }

    fn make_trace(&self, b: f64) -> DpTrace {
        let n = self.grid.stage();
        let scale = self.grid.alpha().scale(n);
        DpTrace {
            n,
            v1: self.grid.one_choice_value(),
            v2: self.value,
            b_n: b,
            w_n: scale * self.value,
            b_scaled: scale * b,
        }
    }

    /// Emits the trace of the current stage and moves to the next one.
    pub fn step(&mut self) -> Result<DpTrace> {
        let (k, b) = self.grid.solve(self.value)?;
        let trace = self.make_trace(b);
        let integral = self.grid.weighted_integral(k, b, self.value);
        let tail = 1.0 - b.powf(self.grid.alpha().get());
        self.value = integral + tail * self.value;
        self.grid.advance();
        Ok(trace)
    }
}

/// Traces for `n = 2..=n_max`.
pub fn dp_sweep(alpha: Alpha, n_max: usize, grid_size: usize) -> Result<Vec<DpTrace>> {
    if n_max < 2 {
        return Err(Error::param("n_max", format!("must be at least 2, got {n_max}")));
    }
    let mut sweep = DpSweep::new(alpha, grid_size)?;
    let mut out = Vec::with_capacity(n_max - 1);
    for _ in 2..=n_max {
        out.push(sweep.step()?);
    }
    Ok(out)
}

/// `f_n` and `h_n` sampled at `y_i = n·x_i^α`.
#[derive(Clone, Debug)]
pub struct ScaledProfiles {
    pub n: usize,
    pub ys: Vec<f64>,
    pub f: Vec<f64>,
    pub h: Vec<f64>,
    /// `1 − f_n(y)`, which stays strictly increasing in floating point where
    /// `f_n` itself rounds to 1.
    pub one_minus_f: Vec<f64>,
    /// `ε_n(y) = f(y) − f_n(y)`.
    pub eps: Vec<f64>,
}

/// `f_n(y) = g_n(x)/x` and `h_n(y) = y^{1/α}·f_n(y) = n^{1/α}·g_n(x)` at each
/// grid abscissa, with `f_n(0) = 1`, `h_n(0) = 0`.
pub fn fn_hn(grid: &GnGrid) -> ScaledProfiles {
    let alpha = grid.alpha();
    let n = grid.stage();
    let scale = alpha.scale(n);
    let len = grid.xs.len();
    let mut out = ScaledProfiles {
        n,
        ys: Vec::with_capacity(len),
        f: Vec::with_capacity(len),
        h: Vec::with_capacity(len),
        one_minus_f: Vec::with_capacity(len),
        eps: Vec::with_capacity(len),
    };
    for i in 0..len {
        let x = grid.xs[i];
        let y = n as f64 * grid.us[i];
        out.ys.push(y);
        if x == 0.0 {
            out.f.push(1.0);
            out.h.push(0.0);
            out.one_minus_f.push(0.0);
            out.eps.push(0.0);
        } else {
            let r = grid.deficits[i] / x;
            out.one_minus_f.push(r);
            out.f.push(1.0 - r);
            out.h.push(scale * grid.gvals[i]);
            out.eps.push(f_curvature(alpha, y) - grid.defects[i] / x);
        }
    }
    out
}

/// `f(y) − 1 + y/(α+1)`, the part of `f` beyond its tangent at 0.
///
/// Near 0 this is `y²/(2(α+1)) + O(y³)` and is summed from the binomial
/// series to avoid cancellation.
pub fn f_curvature(alpha: Alpha, y: f64) -> f64 {
    let a = alpha.get();
    if a * y / (a + 1.0) < 0.1 {
        curvature_series(alpha, y)
    } else {
        f_limit(alpha, y) - 1.0 + y / (a + 1.0)
    }
}

/// `(1 + z)^{−1/α} = Σ C(−1/α, k) z^k` with `z = αy/(α+1)`, terms `k ≥ 2`.
fn curvature_series(alpha: Alpha, y: f64) -> f64 {
    let a = alpha.get();
    let z = a * y / (a + 1.0);
    let p = -1.0 / a;
    let mut coef = p * (p - 1.0) / 2.0;
    let mut zk = z * z;
    let mut sum = 0.0;
    for k in 2..80 {
        let term = coef * zk;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
        coef *= (p - k as f64) / (k as f64 + 1.0);
        zk *= z;
    }
    sum
}

/// Extremes of `ε_n` over the positive grid points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub n: usize,
    pub min_eps: f64,
    pub max_eps: f64,
    /// `max_y (ε_n(y) − y/(2n))`.
    pub max_excess: f64,
}

pub fn residual_summary(profiles: &ScaledProfiles) -> ResidualSummary {
    let n = profiles.n as f64;
    let mut s = ResidualSummary {
        n: profiles.n,
        min_eps: f64::INFINITY,
        max_eps: f64::NEG_INFINITY,
        max_excess: f64::NEG_INFINITY,
    };
    for (&y, &e) in profiles.ys.iter().zip(&profiles.eps).skip(1) {
        s.min_eps = s.min_eps.min(e);
        s.max_eps = s.max_eps.max(e);
        s.max_excess = s.max_excess.max(e - y / (2.0 * n));
    }
    s
}

/// `E[min(X_1, …, X_n)] = Γ(n+1)·Γ(1+1/α)/Γ(n+1+1/α)` for `F(x) = x^α`.
pub fn prophet_value(alpha: Alpha, n: usize) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let inv = alpha.inv();
    let m = n as f64;
    (ln_gamma(m + 1.0) + ln_gamma(1.0 + inv) - ln_gamma(m + 1.0 + inv)).exp()
}
