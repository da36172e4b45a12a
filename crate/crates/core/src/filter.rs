//! Online smoothing of liveness logits.
//!
//! The primary method treats the recent history of raw logits as a Gaussian
//! prior and fuses it with the incoming logit through a precision-weighted
//! convex combination. With the prior mean `mu` and prior variance `v` taken
//! from the window (or carried recursively), and the innovation
//! `d2 = (q_t - mu)^2`, the update is
//!
//! ```text
//! theta   = v / (d2 + v)
//! mu_t    = theta * q_t + (1 - theta) * mu
//! var_t   = theta * d2            (= d2 * v / (d2 + v))
//! p_t     = logistic(mu_t)
//! ```
//!
//! A far-off logit makes `d2` large, drives `theta` toward zero and is mostly
//! ignored; an in-distribution logit keeps `theta` near one and passes
//! through. Everything runs strictly online: the estimate at frame `t`
//! depends only on logits up to and including `t`.
//!
//! EMA and SMA baselines and an identity pass-through are provided for
//! comparison. Pinning `theta` to a constant reproduces the EMA exactly,
//! which the tests assert bit for bit.

use std::collections::VecDeque;

use crate::real::Real;
use crate::stream::{SmoothedFrame, Tracklet};

/// Smoothing method selector. `Fastco` recomputes the prior from a sliding
/// window of raw logits each step (the default); `FastcoRecursive` carries
/// the previous posterior instead. `Ema`, `Sma` and `None` are baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMethod {
    Fastco,
    FastcoRecursive,
    Ema,
    Sma,
    None,
}

impl FilterMethod {
    /// Stable lowercase name, matching the CLI `--method` values.
    pub fn name(self) -> &'static str {
        match self {
            FilterMethod::Fastco => "fastco",
            FilterMethod::FastcoRecursive => "fastco-recursive",
            FilterMethod::Ema => "ema",
            FilterMethod::Sma => "sma",
            FilterMethod::None => "none",
        }
    }
}

/// Filter parameters. The defaults (window 5, EMA alpha 0.1, initial
/// variance 1.0, degeneracy threshold 0) are the reference configuration
/// used throughout the tests.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig<R: Real = f64> {
    pub method: FilterMethod,
    /// Number of recent raw logits kept as filter history (>= 1).
    pub window: usize,
    /// Smoothing factor for the EMA baseline, in (0, 1].
    pub ema_alpha: R,
    /// Variance reported at the first frame of the uncertainty methods.
    pub init_var: R,
    /// When `d2 + v` falls at or below this bound the update would be 0/0;
    /// the filter then passes the raw logit through with zero variance. The
    /// default of 0 fires only for exactly constant history, which keeps
    /// constant streams fixed points of the filter.
    pub degenerate_eps: R,
}

impl<R: Real> Default for FilterConfig<R> {
    fn default() -> Self {
        FilterConfig {
            method: FilterMethod::Fastco,
            window: 5,
            ema_alpha: R::of(0.1),
            init_var: R::one(),
            degenerate_eps: R::zero(),
        }
    }
}

impl<R: Real> FilterConfig<R> {
    pub fn validate(&self) -> Result<(), FilterError> {
        if self.window == 0 {
            return Err(FilterError::InvalidConfig(
                "window must be at least 1".into(),
            ));
        }
        if !(self.ema_alpha > R::zero() && self.ema_alpha <= R::one()) {
            return Err(FilterError::InvalidConfig(
                "ema_alpha must lie in (0, 1]".into(),
            ));
        }
        if !self.init_var.is_finite() || self.init_var < R::zero() {
            return Err(FilterError::InvalidConfig(
                "init_var must be finite and non-negative".into(),
            ));
        }
        if !self.degenerate_eps.is_finite() || self.degenerate_eps < R::zero() {
            return Err(FilterError::InvalidConfig(
                "degenerate_eps must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FilterError {
    #[error("invalid filter config: {0}")]
    InvalidConfig(String),
    #[error("non-finite logit at frame {t}")]
    NonFiniteLogit { t: usize },
}

/// Convex blend `theta * q + (1 - theta) * mu_prev`.
///
/// Both the uncertainty update and the EMA baseline go through this one
/// expression, so fixing `theta = alpha` degenerates the filter to the EMA
/// with identical floating-point results.
#[inline]
pub fn blend<R: Real>(theta: R, q: R, mu_prev: R) -> R {
    theta * q + (R::one() - theta) * mu_prev
}

/// Mean and population variance of the filter history.
///
/// An exactly constant window short-circuits to variance 0 so that constant
/// streams stay fixed points even when `sum/n` would round away from the
/// common value.
fn window_stats<R: Real>(history: &VecDeque<R>) -> (R, R) {
    let n = history.len();
    debug_assert!(n >= 1);
    let first = *history.front().expect("non-empty history");
    if history.iter().all(|x| *x == first) {
        return (first, R::zero());
    }
    let count = R::of_usize(n);
    let mut sum = R::zero();
    for x in history {
        sum = sum + *x;
    }
    let mean = sum / count;
    let mut acc = R::zero();
    for x in history {
        let r = *x - mean;
        acc = acc + r * r;
    }
    (mean, acc / count)
}

/// Streaming filter state. Feed logits one at a time with [`step`]; the
/// state after `t` frames is a pure function of the config and the logits
/// seen so far.
///
/// [`step`]: ScoreFilter::step
#[derive(Debug, Clone)]
pub struct ScoreFilter<R: Real = f64> {
    config: FilterConfig<R>,
    history: VecDeque<R>,
    mu_prev: R,
    var_prev: R,
    next_t: usize,
}

impl<R: Real> ScoreFilter<R> {
    pub fn new(config: FilterConfig<R>) -> Result<Self, FilterError> {
        config.validate()?;
        let capacity = config.window;
        Ok(ScoreFilter {
            config,
            history: VecDeque::with_capacity(capacity + 1),
            mu_prev: R::zero(),
            var_prev: R::zero(),
            next_t: 0,
        })
    }

    pub fn config(&self) -> &FilterConfig<R> {
        &self.config
    }

    /// Index of the frame the next `step` call will produce.
    pub fn next_index(&self) -> usize {
        self.next_t
    }

    /// Clears all state, as if freshly constructed.
    pub fn reset(&mut self) {
        self.history.clear();
        self.mu_prev = R::zero();
        self.var_prev = R::zero();
        self.next_t = 0;
    }

    fn combine(&self, mu_prev: R, var_prev: R, q: R) -> (R, R) {
        let r = q - mu_prev;
        let d2 = r * r;
        let denom = d2 + var_prev;
        if denom <= self.config.degenerate_eps {
            (q, R::zero())
        } else {
            let theta = var_prev / denom;
            (blend(theta, q, mu_prev), theta * d2)
        }
    }

    /// Consumes the next raw logit and returns the smoothed frame.
    pub fn step(&mut self, q: R) -> Result<SmoothedFrame<R>, FilterError> {
        if !q.is_finite() {
            return Err(FilterError::NonFiniteLogit { t: self.next_t });
        }
        let t = self.next_t;
        let (mu, var) = if t == 0 {
            // First frame: trust the observation; the uncertainty methods
            // report the configured initial variance, the baselines none.
            match self.config.method {
                FilterMethod::Fastco | FilterMethod::FastcoRecursive => {
                    (q, self.config.init_var)
                }
                _ => (q, R::zero()),
            }
        } else {
            match self.config.method {
                FilterMethod::Fastco => {
                    if self.history.len() < 2 {
                        // A one-sample window carries no spread, so the
                        // update degenerates to the raw logit.
                        (q, R::zero())
                    } else {
                        let (m, v) = window_stats(&self.history);
                        self.combine(m, v, q)
                    }
                }
                FilterMethod::FastcoRecursive => self.combine(self.mu_prev, self.var_prev, q),
                FilterMethod::Ema => (blend(self.config.ema_alpha, q, self.mu_prev), R::zero()),
                FilterMethod::Sma => {
                    // Mean over the trailing `window` logits including q.
                    let take = self.config.window - 1;
                    let skip = self.history.len().saturating_sub(take);
                    let mut sum = R::zero();
                    let mut n = 1usize;
                    for x in self.history.iter().skip(skip) {
                        sum = sum + *x;
                        n += 1;
                    }
                    ((sum + q) / R::of_usize(n), R::zero())
                }
                FilterMethod::None => (q, R::zero()),
            }
        };

        self.history.push_back(q);
        if self.history.len() > self.config.window {
            self.history.pop_front();
        }
        self.mu_prev = mu;
        self.var_prev = var;
        self.next_t += 1;
        Ok(SmoothedFrame::new(t, q, mu, var))
    }
}

/// Runs a fresh filter over a whole tracklet, one output per frame.
pub fn run_filter<R: Real>(
    tracklet: &Tracklet<R>,
    config: &FilterConfig<R>,
) -> Result<Vec<SmoothedFrame<R>>, FilterError> {
    let mut filter = ScoreFilter::new(config.clone())?;
    tracklet
        .frames()
        .iter()
        .map(|frame| filter.step(frame.q))
        .collect()
}
