//! The scaled recursion
//!
//! ```text
//! Z_{n+1} = ((n+1)/n)^{1/α} · (1/n) ∫₀ⁿ (q(y) ∧ Z_n) dy,   Z_m = c,
//! ```
//!
//! for a non-decreasing profile `q` with `q(0) = 0`. Its limit is `q(b)`,
//! where `b` is the root of `Q(y) = ∫₀^y q + (1/α − y)·q(y)`. With `q = h`
//! it bounds the two-choice values `W_n` from above; with the perturbed
//! profiles `k_j` it bounds them from below; with `q(y) = y^{1/α}` it
//! reproduces the one-choice limit.
//!
//! The module also carries the stopped-moment recursion for threshold rules.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::dist::Alpha;
use crate::dp::{iterate_g, DpTrace};
use crate::error::{Error, Result};
use crate::limits::{f_limit, q_functional, q_root, solve_b_alpha};
use crate::numerics::{bisect, integrate_from_zero};
use crate::profile::{Profile, Tabulated, INVERSE_TOL, QUAD_TOL};

/// Input of the recursion: profile, starting index and starting value.
#[derive(Clone, Debug)]
pub struct RecursionSpec<P> {
    pub alpha: Alpha,
    pub q: P,
    pub m: usize,
    pub c: f64,
}

impl<P: Profile> RecursionSpec<P> {
    /// Checks `m ≥ 1`, `c > 0`, `q(0) = 0` and monotonicity of `q` on a
    /// logarithmic probe grid.
    pub fn new(alpha: Alpha, q: P, m: usize, c: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::param("m", "starting index must be at least 1"));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::param("c", format!("starting value must be positive, got {c}")));
        }
        if q.value(0.0) != 0.0 {
            return Err(Error::MalformedProfile(format!("q(0) = {}", q.value(0.0))));
        }
        let mut prev = 0.0;
        for k in -60..=80 {
            let y = 10f64.powf(k as f64 / 10.0);
            let v = q.value(y);
            if !(v >= prev) {
                return Err(Error::MalformedProfile(format!(
                    "q decreases near y = {y}: {v} < {prev}"
                )));
            }
            prev = v;
        }
        Ok(RecursionSpec { alpha, q, m, c })
    }

    pub fn start(&self) -> RecursionState {
        RecursionState {
            n: self.m,
            z: self.c,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecursionState {
    pub n: usize,
    pub z: f64,
}

/// `∫₀ⁿ (q ∧ z)`, split at `s = q⁻¹(z)` into `∫₀^s q + (n − s)·z`.
fn truncated_integral<P: Profile + ?Sized>(q: &P, n: f64, z: f64) -> Result<f64> {
    let top_at = match q.plateau_start() {
        Some(a) if a < n => a,
        _ => n,
    };
    if z >= q.value(top_at) {
        return Ok(q.integral(n));
    }
    let s = q.inverse(z, top_at)?;
    Ok(q.integral(s) + (n - s) * z)
}

/// One application of the recursion.
pub fn step<P: Profile>(spec: &RecursionSpec<P>, state: RecursionState) -> Result<RecursionState> {
    if state.n < spec.m {
        return Err(Error::param(
            "state.n",
            format!("{} precedes the starting index {}", state.n, spec.m),
        ));
    }
    let n = state.n as f64;
    let mean = truncated_integral(&spec.q, n, state.z)? / n;
    let factor = ((1.0 / n).ln_1p() * spec.alpha.inv()).exp();
    Ok(RecursionState {
        n: state.n + 1,
        z: factor * mean,
    })
}

/// `Z_m, …, Z_{n_max}`.
pub fn trajectory<P: Profile>(spec: &RecursionSpec<P>, n_max: usize) -> Result<Vec<RecursionState>> {
    let mut state = spec.start();
    let mut out = Vec::with_capacity(n_max.saturating_sub(spec.m) + 1);
    out.push(state);
    while state.n < n_max {
        state = step(spec, state)?;
        out.push(state);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub max_n: usize,
    /// Stop once `|Z_{n+1} − Z_n|·n` falls below this.
    pub stall_tol: f64,
    /// Band for the trap and drift diagnostics.
    pub delta: f64,
    /// Index from which the diagnostics are recorded.
    pub n0: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            max_n: 100_000,
            stall_tol: 1e-4,
            delta: 0.01,
            n0: 100,
        }
    }
}

const WINDOW: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub n: usize,
    pub z: f64,
    /// Root `b` of `Q`.
    pub root: f64,
    /// Predicted limit `q(b)`.
    pub limit: f64,
    /// First `n ≥ n0` with `|Z_n − q(b)| ≤ δ`.
    pub trap_entry: Option<usize>,
    /// Whether `Z` stayed in the band after entering it.
    pub trap_held: bool,
    /// Steps beyond `n0` that moved away from the band from outside it.
    pub drift_violations: usize,
    pub window: Vec<(usize, f64)>,
}

/// Runs the recursion until it stalls.
///
/// The root condition on `Q` is verified first, which also yields the
/// predicted limit. `q` is tabulated up to a few multiples of the root so
/// that each step costs one short quadrature.
pub fn run_to_convergence<P: Profile>(
    spec: &RecursionSpec<P>,
    stop: StopRule,
) -> Result<ConvergenceReport> {
    let root = q_root(&spec.q, spec.alpha)?;
    let limit = spec.q.value(root);
    let upper = spec.q.plateau_start().unwrap_or(4.0 * root).max(2.0 * root);
    let tab = RecursionSpec {
        alpha: spec.alpha,
        q: Tabulated::new(&spec.q, upper, 4096),
        m: spec.m,
        c: spec.c,
    };

    let mut state = tab.start();
    let mut window = VecDeque::with_capacity(WINDOW);
    let mut trap_entry = None;
    let mut trap_held = true;
    let mut drift_violations = 0;
    loop {
        if window.len() == WINDOW {
            window.pop_front();
        }
        window.push_back((state.n, state.z));
        if state.n >= stop.max_n {
            return Err(Error::NoConvergence {
                max_n: stop.max_n,
                window: window.into_iter().collect(),
            });
        }
        let next = step(&tab, state)?;
        if state.n >= stop.n0 {
            let gap = state.z - limit;
            if gap.abs() <= stop.delta {
                trap_entry.get_or_insert(state.n);
            } else if trap_entry.is_some() {
                trap_held = false;
            }
            if (gap < -stop.delta && next.z <= state.z) || (gap > stop.delta && next.z >= state.z) {
                drift_violations += 1;
            }
        }
        let stalled = (next.z - state.z).abs() * (state.n as f64) < stop.stall_tol;
        state = next;
        if stalled {
            window.push_back((state.n, state.z));
            return Ok(ConvergenceReport {
                n: state.n,
                z: state.z,
                root,
                limit,
                trap_entry,
                trap_held,
                drift_violations,
                window: window.into_iter().collect(),
            });
        }
    }
}

/// `k_j(y) = y^{1/α}(f(y) − y/(2j))` on `[0, A]`, constant beyond `A`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichFn {
    pub alpha: Alpha,
    pub j: usize,
    pub cap: f64,
}

/// Points used to check the sign of `k_j'` on `(0, A]`.
const MONOTONE_PROBES: usize = 4000;

impl SandwichFn {
    /// Builds `k_j` with cap `A`, requiring `A > b_α` and `k_j` strictly
    /// increasing on `(0, A]`.
    ///
    /// This is all the lower sandwich needs: `k_j ≤ h_n` for `n ≥ j` and the
    /// recursion is monotone in `q`. Whether `Z⁻_j` has the limit `d_{j,α}`
    /// is a separate question, see [`SandwichFn::root_condition`].
    pub fn new(alpha: Alpha, j: usize, cap: f64) -> Result<Self> {
        if j == 0 {
            return Err(Error::param("j", "must be positive"));
        }
        let b = solve_b_alpha(alpha).b_alpha;
        if !(cap > b && cap.is_finite()) {
            return Err(Error::param("cap", format!("must exceed b_α = {b}, got {cap}")));
        }
        let k = SandwichFn { alpha, j, cap };
        if let Some(y) = k.first_critical_point(cap) {
            return Err(Error::MalformedProfile(format!(
                "k_{j} is not increasing on (0, {cap}]: derivative vanishes near {y}"
            )));
        }
        Ok(k)
    }

    /// `k_j` capped just below the first zero of `k_j'`, the widest cap on
    /// which it is increasing.
    pub fn with_default_cap(alpha: Alpha, j: usize) -> Result<Self> {
        if j == 0 {
            return Err(Error::param("j", "must be positive"));
        }
        let probe = SandwichFn { alpha, j, cap: f64::INFINITY };
        let mut hi = 1.0;
        while probe.derivative_factor(hi) > 0.0 {
            hi *= 2.0;
        }
        let y = probe
            .first_critical_point(hi)
            .expect("derivative is non-positive at the probe end");
        Self::new(alpha, j, y * (1.0 - 1e-9))
    }

    /// `k_j'(y) / y^{1/α − 1} = f/α − y·f^{α+1}/(α+1) − y(1/α + 1)/(2j)`.
    pub fn derivative_factor(&self, y: f64) -> f64 {
        let a = self.alpha.get();
        let f = f_limit(self.alpha, y);
        f / a - y * f.powf(a + 1.0) / (a + 1.0) - y * (1.0 / a + 1.0) / (2.0 * self.j as f64)
    }

    /// First probe point in `(0, upper]` where `k_j'` is not positive,
    /// refined by bisection.
    fn first_critical_point(&self, upper: f64) -> Option<f64> {
        let mut prev = 0.0;
        for i in 1..=MONOTONE_PROBES {
            let y = upper * i as f64 / MONOTONE_PROBES as f64;
            if self.derivative_factor(y) <= 0.0 {
                return bisect(|t| self.derivative_factor(t), prev, y, 1e-12).or(Some(y));
            }
            prev = y;
        }
        None
    }

    /// `K_j(A) < 0`: the root of `Q` for `k_j` lies below the cap, so the
    /// recursion with `k_j` converges to `d_{j,α} = k_j(b_{j,α})`.
    pub fn root_condition(&self) -> Result<()> {
        let k_at_cap = q_functional(self, self.alpha, self.cap);
        if k_at_cap < 0.0 {
            Ok(())
        } else {
            Err(Error::MalformedProfile(format!(
                "K_{}({}) = {k_at_cap} is not negative",
                self.j, self.cap
            )))
        }
    }

    /// Increasing on `(0, A]` (checked at construction) and `K_j(A) < 0`.
    pub fn is_admissible(&self) -> bool {
        self.root_condition().is_ok()
    }

    fn raw(&self, y: f64) -> f64 {
        let a = self.alpha;
        y.powf(a.inv()) * (f_limit(a, y) - y / (2.0 * self.j as f64))
    }
}

impl Profile for SandwichFn {
    fn value(&self, y: f64) -> f64 {
        if y <= 0.0 {
            0.0
        } else {
            self.raw(y.min(self.cap))
        }
    }

    fn plateau_start(&self) -> Option<f64> {
        Some(self.cap)
    }

    fn cusp_power(&self) -> f64 {
        self.alpha.get().max(1.0)
    }

    fn integral(&self, s: f64) -> f64 {
        let head = integrate_from_zero(|y| self.raw(y), s.min(self.cap), self.cusp_power(), QUAD_TOL);
        head + (s - self.cap).max(0.0) * self.raw(self.cap)
    }

    fn inverse(&self, t: f64, upper: f64) -> Result<f64> {
        let upper = upper.min(self.cap);
        if t >= self.raw(upper) && upper == self.cap {
            return Ok(self.cap);
        }
        if !(t > 0.0) {
            return Err(Error::MalformedProfile(format!("cannot invert k_j at {t}")));
        }
        bisect(|y| self.raw(y) - t, 0.0, upper, INVERSE_TOL).ok_or_else(|| {
            Error::MalformedProfile(format!("inverse of k_{} at {t} not bracketed", self.j))
        })
    }
}

/// Smallest `j ≤ j_max` for which `k_j` with the default cap is admissible.
///
/// The default cap is the widest increasing one, which also minimises
/// `K_j(A)` because `K_j' = (1/α − A)·k_j' < 0` beyond `1/α`. Both
/// conditions weaken as `j` grows, so a doubling search followed by
/// bisection suffices.
pub fn smallest_admissible_j(alpha: Alpha, j_max: usize) -> Option<usize> {
    let ok = |j: usize| SandwichFn::with_default_cap(alpha, j).is_ok_and(|k| k.is_admissible());
    let mut hi = 1;
    while !ok(hi) {
        if hi >= j_max {
            return None;
        }
        hi = (hi * 2).min(j_max);
    }
    let mut lo = hi / 2;
    if lo == 0 {
        return Some(hi);
    }
    // ok(hi), !ok(lo)
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Final values of the lower recursion, the exact `W_N` and the upper
/// recursion for one `j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichTriple {
    pub j: usize,
    pub cap: f64,
    pub n: usize,
    pub lower: f64,
    pub w: f64,
    pub upper: f64,
    /// Number of indices at which the ordering was checked.
    pub checked: usize,
}

/// Runs `Z⁺` (profile `h`, from `W_2` at `n = 2`) and, for each `j`, `Z⁻_j`
/// (profile `k_j`, from `W_{m*}` at `m* = max(2, j)`), checking
/// `Z⁻_{j,n} ≤ W_n ≤ Z⁺_n` at every `n ≤ n_max`.
///
/// `traces` must hold the dp stages `2..=n_max` in order. Any violation is
/// returned as an error; there is no tolerance.
pub fn sandwich_bounds(
    alpha: Alpha,
    js: &[usize],
    traces: &[DpTrace],
    n_max: usize,
) -> Result<Vec<SandwichTriple>> {
    if traces.len() + 1 < n_max || traces.first().map(|t| t.n) != Some(2) {
        return Err(Error::HorizonMismatch {
            table: traces.len() + 1,
            requested: n_max,
        });
    }
    let w_at = |n: usize| traces[n - 2].w_n;

    let h = crate::profile::LimitProfile { alpha };
    let b = solve_b_alpha(alpha).b_alpha;
    let upper_spec = RecursionSpec::new(alpha, Tabulated::new(h, 4.0 * b, 4096), 2, w_at(2))?;
    let upper = trajectory(&upper_spec, n_max)?;
    for s in &upper {
        let w = w_at(s.n);
        if w > s.z {
            return Err(Error::OrderingViolation {
                n: s.n,
                j: 0,
                lower: f64::NAN,
                value: w,
                upper: s.z,
            });
        }
    }

    let mut out = Vec::with_capacity(js.len());
    for &j in js {
        let k = SandwichFn::with_default_cap(alpha, j)?;
        let m = j.max(2).min(n_max);
        let spec = RecursionSpec::new(alpha, Tabulated::new(k, k.cap, 4096), m, w_at(m))?;
        let lower = trajectory(&spec, n_max)?;
        for s in &lower {
            let w = w_at(s.n);
            if s.z > w {
                return Err(Error::OrderingViolation {
                    n: s.n,
                    j,
                    lower: s.z,
                    value: w,
                    upper: upper[s.n - 2].z,
                });
            }
        }
        out.push(SandwichTriple {
            j,
            cap: k.cap,
            n: n_max,
            lower: lower.last().expect("non-empty").z,
            w: w_at(n_max),
            upper: upper.last().expect("non-empty").z,
            checked: lower.len(),
        });
    }
    Ok(out)
}

/// `A_n = n^{1/α}·V_n¹` for `n = 1..=n_max`, index `n − 1`.
pub fn one_choice_scaled_thresholds(alpha: Alpha, n_max: usize) -> Vec<f64> {
    let mut v = 1.0;
    (1..=n_max)
        .map(|n| {
            v = iterate_g(alpha, v, 1);
            alpha.scale(n) * v
        })
        .collect()
}

/// `S_2(r) = 2^{r/α}·E[X_{T_2}^r]` for the optimal one-choice rule with two
/// variables: take `X_2` if it is below `V_1¹ = α/(α+1)`, otherwise `X_1`.
pub fn one_choice_moment_start(alpha: Alpha, r: f64) -> f64 {
    let a = alpha.get();
    let a1 = a / (a + 1.0);
    let m1 = a / (a + r);
    let m2 = a * a1.powf(a + r) / (a + r) + (1.0 - a1.powf(a)) * m1;
    2f64.powf(r / a) * m2
}

/// Iterates the stopped-moment recursion
///
/// ```text
/// (n/(n+1))^{r/α}·S_{n+1} = A_n^{α+r}/(n(1 + r/α)) + (1 − A_n^α/n)·S_n
/// ```
///
/// from `S_{n0} = s0`, where `a_seq[n − 1] = A_n`. Returns `(n, S_n)` for
/// `n = n0..=a_seq.len() + 1`.
pub fn moment_recursion(alpha: Alpha, r: f64, a_seq: &[f64], n0: usize, s0: f64) -> Result<Vec<(usize, f64)>> {
    if !(r > 0.0) {
        return Err(Error::param("r", format!("must be positive, got {r}")));
    }
    if n0 == 0 || n0 > a_seq.len() + 1 {
        return Err(Error::param("n0", format!("{n0} outside 1..={}", a_seq.len() + 1)));
    }
    let a = alpha.get();
    let ra = r / a;
    let mut s = s0;
    let mut out = Vec::with_capacity(a_seq.len() + 2 - n0);
    out.push((n0, s));
    for n in n0..=a_seq.len() {
        let big_a = a_seq[n - 1];
        let nf = n as f64;
        let rhs = big_a.powf(a + r) / (nf * (1.0 + ra)) + (1.0 - big_a.powf(a) / nf) * s;
        s = rhs * ((1.0 / nf).ln_1p() * ra).exp();
        out.push((n + 1, s));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentBehavior {
    Bounded,
    Divergent,
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentDiagnosis {
    pub behavior: MomentBehavior,
    pub lo: usize,
    pub hi: usize,
    pub growth: f64,
    pub window_min: f64,
    pub window_max: f64,
}

/// Classifies a trajectory on `[lo, hi]`: divergent when `S_hi ≥ 10·S_lo`,
/// bounded when the window maximum stays below twice the window minimum
/// plus one.
pub fn classify_moments(traj: &[(usize, f64)], lo: usize, hi: usize) -> Result<MomentDiagnosis> {
    let window: Vec<f64> = traj
        .iter()
        .filter(|(n, _)| (lo..=hi).contains(n))
        .map(|&(_, s)| s)
        .collect();
    let at = |k: usize| traj.iter().find(|(n, _)| *n == k).map(|&(_, s)| s);
    let (Some(s_lo), Some(s_hi)) = (at(lo), at(hi)) else {
        return Err(Error::param("window", format!("trajectory does not cover {lo}..={hi}")));
    };
    let window_min = window.iter().copied().fold(f64::INFINITY, f64::min);
    let window_max = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let growth = s_hi / s_lo;
    let behavior = if growth >= 10.0 {
        MomentBehavior::Divergent
    } else if window_max < 2.0 * window_min + 1.0 {
        MomentBehavior::Bounded
    } else {
        MomentBehavior::Undetermined
    };
    Ok(MomentDiagnosis {
        behavior,
        lo,
        hi,
        growth,
        window_min,
        window_max,
    })
}
