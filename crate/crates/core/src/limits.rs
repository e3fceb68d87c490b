//! Limiting scaled functions and asymptotic constants.
//!
//! `f(y) = (1 + αy/(α+1))^{−1/α}` solves `f' = −f^{α+1}/(α+1)`, `f(0) = 1`,
//! and `h(y) = y^{1/α}·f(y)`. The two-choice constant is `h^α(b_α)`, with
//! `b_α` the unique root of `H = Q_h` on `(1/α, ∞)`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::dist::Alpha;
use crate::error::{Error, Result};
use crate::numerics::bisect;
use crate::profile::{LimitProfile, Profile};

/// The α values of the published table, column (1).
pub const TABLE_ALPHAS: [f64; 19] = [
    0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0,
];

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Root tolerance in `y` for `b_α`.
pub const ROOT_TOL: f64 = 1e-10;

pub fn f_limit(alpha: Alpha, y: f64) -> f64 {
    let a = alpha.get();
    (1.0 + a * y / (a + 1.0)).powf(-1.0 / a)
}

pub fn h_limit(alpha: Alpha, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let a = alpha.get();
    (y / (1.0 + a * y / (a + 1.0))).powf(1.0 / a)
}

/// `Q(y) = ∫₀^y q + (1/α − y)·q(y)` for a monotone profile `q`.
pub fn q_functional<P: Profile + ?Sized>(q: &P, alpha: Alpha, y: f64) -> f64 {
    q.integral(y) + (alpha.inv() - y) * q.value(y)
}

/// `H(y) = ∫₀^y h + (1/α − y)·h(y)`.
pub fn h_functional(alpha: Alpha, y: f64) -> f64 {
    q_functional(&LimitProfile { alpha }, alpha, y)
}

/// The unique root of `Q` on `(1/α, ∞)`.
///
/// The bracket starts at `[1/α + 1e-6, max(2(1 + 1/α), 4)]` and the upper end
/// doubles until `Q < 0`. When the profile has a plateau at `A` the root must
/// fall below `A`, otherwise the profile does not satisfy the root condition.
pub fn q_root<P: Profile + ?Sized>(q: &P, alpha: Alpha) -> Result<f64> {
    let lo = alpha.inv() + 1e-6;
    if q_functional(q, alpha, lo) <= 0.0 {
        return Err(Error::MalformedProfile(format!(
            "Q is not positive just above 1/α = {}",
            alpha.inv()
        )));
    }
    let mut hi = (2.0 * (1.0 + alpha.inv())).max(4.0);
    let mut doublings = 0;
    while q_functional(q, alpha, hi) >= 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::MalformedProfile("Q never becomes negative".into()));
        }
    }
    let root = bisect(|y| q_functional(q, alpha, y), lo, hi, ROOT_TOL)
        .ok_or_else(|| Error::MalformedProfile("root of Q is not bracketed".into()))?;
    if let Some(a) = q.plateau_start() {
        if root >= a {
            return Err(Error::MalformedProfile(format!(
                "root {root} of Q lies on the plateau beyond A = {a}"
            )));
        }
    }
    Ok(root)
}

/// The asymptotic constants for one α.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitConstants {
    pub alpha: Alpha,
    pub b_alpha: f64,
    /// `d_α = h(b_α)`, the limit of `W_n = n^{1/α}·V_n²`.
    pub d_alpha: f64,
    /// `lim n·F(V_n²) = d_α^α`.
    pub two_choice_limit: f64,
    /// `lim n·F(V_n¹) = 1 + 1/α`.
    pub one_choice_limit: f64,
    /// `lim n·F(V_n^p) = Γ(1 + 1/α)^α`.
    pub prophet_limit: f64,
    /// one / two.
    pub ratio_31_42: f64,
    /// two / prophet.
    pub ratio_42_5: f64,
    /// one / prophet.
    pub ratio_3_5: f64,
    /// `lim (V¹ − V²)/(V¹ − V^p)`.
    pub rel_improvement: f64,
}

pub fn solve_b_alpha(alpha: Alpha) -> LimitConstants {
    let h = LimitProfile { alpha };
    // H > 0 just above 1/α and tends to −∞, so the bracket always closes.
    let b_alpha = q_root(&h, alpha).expect("H has a unique root for every α > 0");
    let d_alpha = h_limit(alpha, b_alpha);
    let a = alpha.get();
    let two = d_alpha.powf(a);
    let one = 1.0 + 1.0 / a;
    let prophet = gamma(1.0 + 1.0 / a).powf(a);

    // Values proper behave like n^{-1/α}·(limit)^{1/α}.
    let c1 = one.powf(1.0 / a);
    let c2 = d_alpha;
    let c5 = gamma(1.0 + 1.0 / a);
    LimitConstants {
        alpha,
        b_alpha,
        d_alpha,
        two_choice_limit: two,
        one_choice_limit: one,
        prophet_limit: prophet,
        ratio_31_42: one / two,
        ratio_42_5: two / prophet,
        ratio_3_5: one / prophet,
        rel_improvement: (c1 - c2) / (c1 - c5),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ToZero,
    ToInfinity,
}

/// One tracked quantity along an α sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteSeries {
    pub quantity: String,
    pub limit: f64,
    pub alphas: Vec<f64>,
    pub values: Vec<f64>,
    /// `|value − limit|` per α.
    pub gaps: Vec<f64>,
    /// Whether the gap shrinks monotonically along the sequence. Reported,
    /// not asserted.
    pub monotone_approach: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteReport {
    pub direction: Direction,
    pub series: Vec<AsymptoteSeries>,
}

impl AsymptoteReport {
    pub fn get(&self, quantity: &str) -> Option<&AsymptoteSeries> {
        self.series.iter().find(|s| s.quantity == quantity)
    }
}

/// The stated limits for `α → ∞`: one-choice 1, two-choice `1 − 1/e`,
/// prophet `e^{−γ}`, improvement `[1 − log(e − 1)]/γ`.
pub fn infinity_limits() -> [(&'static str, f64); 4] {
    let e = std::f64::consts::E;
    [
        ("one_choice", 1.0),
        ("two_choice", 1.0 - 1.0 / e),
        ("prophet", (-EULER_GAMMA).exp()),
        ("improvement", (1.0 - (e - 1.0).ln()) / EULER_GAMMA),
    ]
}

/// The stated limits for `α → 0`: ratios 2, `e/2`, `e`, improvement 1.
pub fn zero_limits() -> [(&'static str, f64); 4] {
    let e = std::f64::consts::E;
    [
        ("r34", 2.0),
        ("r45", e / 2.0),
        ("r35", e),
        ("improvement", 1.0),
    ]
}

fn pick(c: &LimitConstants, quantity: &str) -> f64 {
    match quantity {
        "one_choice" => c.one_choice_limit,
        "two_choice" => c.two_choice_limit,
        "prophet" => c.prophet_limit,
        "improvement" => c.rel_improvement,
        "r34" => c.ratio_31_42,
        "r45" => c.ratio_42_5,
        "r35" => c.ratio_3_5,
        _ => unreachable!("unknown quantity {quantity}"),
    }
}

/// Evaluates the tabulated quantities along `alphas` and reports the distance
/// to the limits for the given direction.
pub fn asymptote_check(direction: Direction, alphas: &[Alpha]) -> Result<AsymptoteReport> {
    if alphas.is_empty() {
        return Err(Error::param("alphas", "empty sequence"));
    }
    let monotone = alphas.windows(2).all(|w| match direction {
        Direction::ToZero => w[1] < w[0],
        Direction::ToInfinity => w[1] > w[0],
    });
    if !monotone {
        return Err(Error::param(
            "alphas",
            format!("sequence must move monotonically {direction:?}"),
        ));
    }
    let constants: Vec<LimitConstants> = alphas.iter().map(|&a| solve_b_alpha(a)).collect();
    let limits = match direction {
        Direction::ToZero => zero_limits(),
        Direction::ToInfinity => infinity_limits(),
    };
    let series = limits
        .iter()
        .map(|&(quantity, limit)| {
            let values: Vec<f64> = constants.iter().map(|c| pick(c, quantity)).collect();
            let gaps: Vec<f64> = values.iter().map(|v| (v - limit).abs()).collect();
            AsymptoteSeries {
                quantity: quantity.to_string(),
                limit,
                alphas: alphas.iter().map(|a| a.get()).collect(),
                monotone_approach: gaps.windows(2).all(|w| w[1] <= w[0]),
                values,
                gaps,
            }
        })
        .collect();
    Ok(AsymptoteReport { direction, series })
}
