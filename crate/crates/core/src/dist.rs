//! The power-law-at-zero family `F(x) = x^α·L(x)`.
//!
//! The pure member `L ≡ 1` on `[0, 1]` has the closed-form quantile
//! `u^{1/α}`. General members carry a bounded slowly varying factor and are
//! inverted by bisection on the CDF. Randomness only enters through a
//! [`UniformStream`]; [`StreamFactory`] hands out one independent, replayable
//! stream per trial.

use std::fmt;
use std::sync::Arc;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape parameter `α > 0`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Alpha(value))
        } else {
            Err(Error::InvalidAlpha(value))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `1/α`.
    #[inline]
    pub fn inv(self) -> f64 {
        1.0 / self.0
    }

    /// `n^{1/α}`, the scale that turns a stage-n value into an O(1) quantity.
    #[inline]
    pub fn scale(self, n: usize) -> f64 {
        (n as f64).powf(1.0 / self.0)
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Alpha::new(value)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A bounded slowly varying factor with `L(x) → 1` as `x ↓ 0`.
#[derive(Clone)]
pub struct SlowlyVarying {
    factor: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    bound: f64,
}

impl SlowlyVarying {
    /// Wraps `factor`, which must stay in `(0, bound]`.
    ///
    /// The bound is checked on a logarithmic probe grid, as is the limit at
    /// the origin (`|L(1e-9) − 1| < 1e-3`).
    pub fn new<F>(factor: F, bound: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::InvalidSlowlyVarying(format!(
                "declared bound must be positive and finite, got {bound}"
            )));
        }
        for k in -12..=6 {
            let x = 10f64.powi(k);
            for x in [x, 3.0 * x] {
                let v = factor(x);
                if !(v.is_finite() && v > 0.0 && v <= bound) {
                    return Err(Error::InvalidSlowlyVarying(format!(
                        "L({x}) = {v} is outside (0, {bound}]"
                    )));
                }
            }
        }
        let near_zero = factor(1e-9);
        if (near_zero - 1.0).abs() >= 1e-3 {
            return Err(Error::InvalidSlowlyVarying(format!(
                "L must tend to 1 at the origin, L(1e-9) = {near_zero}"
            )));
        }
        Ok(SlowlyVarying {
            factor: Arc::new(factor),
            bound,
        })
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.factor)(x)
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }
}

impl fmt::Debug for SlowlyVarying {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SlowlyVarying")
            .field("bound", &self.bound)
            .finish_non_exhaustive()
    }
}

/// A distribution `F(x) = min(1, x^α·L(x))`, equal to 1 from the support
/// cap on.
#[derive(Clone, Debug)]
pub struct PowerLawDist {
    alpha: Alpha,
    factor: Option<SlowlyVarying>,
    support_cap: Option<f64>,
}

impl PowerLawDist {
    /// `F(x) = x^α` on `[0, 1]`.
    pub fn pure(alpha: Alpha) -> Self {
        PowerLawDist {
            alpha,
            factor: None,
            support_cap: Some(1.0),
        }
    }

    /// A general member. `support_cap = None` means unbounded support.
    ///
    /// Fails if the cap is not positive or if the CDF is found decreasing on
    /// a probe grid.
    pub fn general(alpha: Alpha, factor: SlowlyVarying, support_cap: Option<f64>) -> Result<Self> {
        if let Some(cap) = support_cap {
            if !(cap.is_finite() && cap > 0.0) {
                return Err(Error::param("support_cap", format!("must be positive, got {cap}")));
            }
        }
        let dist = PowerLawDist {
            alpha,
            factor: Some(factor),
            support_cap,
        };
        let top = support_cap.unwrap_or(1e6);
        let mut prev = 0.0;
        for i in 1..=2000 {
            let x = top * (i as f64 / 2000.0).powi(3);
            let p = dist.cdf(x);
            if p < prev {
                return Err(Error::InvalidSlowlyVarying(format!(
                    "x^α·L(x) decreases near x = {x}"
                )));
            }
            prev = p;
        }
        Ok(dist)
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn is_pure(&self) -> bool {
        self.factor.is_none()
    }

    pub fn support_cap(&self) -> Option<f64> {
        self.support_cap
    }

    /// `F(x)`; zero for `x ≤ 0`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if let Some(cap) = self.support_cap {
            if x >= cap {
                return 1.0;
            }
        }
        let base = x.powf(self.alpha.get());
        match &self.factor {
            None => base.min(1.0),
            Some(l) => (base * l.eval(x)).min(1.0),
        }
    }

    /// The generalised inverse `F⁻¹(u) = sup{x : F(x) < u}`.
    ///
    /// The returned point satisfies `F(x) ≥ u ⟺ x ≥ F⁻¹(u)` in floating
    /// point: for general members the bisection is carried to adjacent
    /// doubles and the upper end of the bracket is returned.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::ProbabilityOutOfRange(u));
        }
        Ok(self.quantile_unchecked(u))
    }

    fn quantile_unchecked(&self, u: f64) -> f64 {
        if self.factor.is_none() {
            return u.powf(self.alpha.inv());
        }
        let mut lo = 0.0;
        let mut hi = match self.support_cap {
            Some(cap) => cap,
            None => {
                let mut hi = 1.0;
                while self.cdf(hi) < u && hi < f64::MAX / 2.0 {
                    hi *= 2.0;
                }
                hi
            }
        };
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// One draw `F⁻¹(U)` from the stream.
    pub fn sample<S: UniformStream + ?Sized>(&self, stream: &mut S) -> f64 {
        self.quantile_unchecked(stream.next_uniform())
    }
}

/// Anything that maps a uniform variate to a draw: the inverse-CDF
/// construction, possibly rescaled.
pub trait Sampler: Sync {
    fn alpha(&self) -> Alpha;

    /// The draw corresponding to `u ∈ (0, 1)`.
    fn from_uniform(&self, u: f64) -> f64;
}

impl Sampler for PowerLawDist {
    fn alpha(&self) -> Alpha {
        self.alpha
    }

    #[inline]
    fn from_uniform(&self, u: f64) -> f64 {
        self.quantile_unchecked(u)
    }
}

/// `c·X` for `X` drawn from the inner sampler.
#[derive(Clone, Debug)]
pub struct Scaled<S> {
    pub inner: S,
    pub factor: f64,
}

impl<S: Sampler> Sampler for Scaled<S> {
    fn alpha(&self) -> Alpha {
        self.inner.alpha()
    }

    #[inline]
    fn from_uniform(&self, u: f64) -> f64 {
        self.factor * self.inner.from_uniform(u)
    }
}

/// A deterministic source of uniforms on the open interval `(0, 1)`.
pub trait UniformStream {
    fn next_uniform(&mut self) -> f64;
}

/// Per-trial ChaCha8 stream: the seed picks the key, the trial index picks
/// the stream, so trial `t` sees the same numbers regardless of scheduling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamFactory {
    seed: u64,
}

impl StreamFactory {
    pub const DEFAULT_SEED: u64 = 42;

    pub fn new(seed: u64) -> Self {
        StreamFactory { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trial(&self, index: u64) -> TrialStream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        TrialStream { rng }
    }
}

impl Default for StreamFactory {
    fn default() -> Self {
        StreamFactory::new(Self::DEFAULT_SEED)
    }
}

#[derive(Clone, Debug)]
pub struct TrialStream {
    rng: ChaCha8Rng,
}

impl UniformStream for TrialStream {
    #[inline]
    fn next_uniform(&mut self) -> f64 {
        self.rng.sample(Open01)
    }
}

/// Replays a fixed list of uniforms; handy for pinning examples.
#[derive(Clone, Debug)]
pub struct FixedStream {
    values: Vec<f64>,
    pos: usize,
}

impl FixedStream {
    pub fn new(values: Vec<f64>) -> Self {
        FixedStream { values, pos: 0 }
    }
}

impl UniformStream for FixedStream {
    fn next_uniform(&mut self) -> f64 {
        let v = self.values[self.pos % self.values.len()];
        self.pos += 1;
        v
    }
}
