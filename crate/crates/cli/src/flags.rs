use std::fmt;

use clap::{Args, ValueEnum};
use tempco::{FilterConfig, FilterMethod, ThresholdPolicy};

/// `--method` values, spelled exactly like [`FilterMethod::name`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Fastco,
    FastcoRecursive,
    Ema,
    Sma,
    None,
}

impl From<MethodArg> for FilterMethod {
    fn from(arg: MethodArg) -> FilterMethod {
        match arg {
            MethodArg::Fastco => FilterMethod::Fastco,
            MethodArg::FastcoRecursive => FilterMethod::FastcoRecursive,
            MethodArg::Ema => FilterMethod::Ema,
            MethodArg::Sma => FilterMethod::Sma,
            MethodArg::None => FilterMethod::None,
        }
    }
}

/// Filter flags shared by the smooth and eval commands. Defaults mirror
/// [`FilterConfig::default`].
#[derive(Debug, Clone, Args)]
pub struct FilterFlags {
    /// Smoothing method
    #[arg(long, value_enum, default_value_t = MethodArg::Fastco)]
    pub method: MethodArg,

    /// Sliding-window length for the fastco and sma methods
    #[arg(long, default_value_t = 5)]
    pub window: usize,

    /// Smoothing factor for the ema method, in (0, 1]
    #[arg(long, default_value_t = 0.1)]
    pub ema_alpha: f64,

    /// Variance reported at the first frame of a tracklet
    #[arg(long, default_value_t = 1.0)]
    pub init_var: f64,

    /// Prior spread at or below which the update degenerates to the raw logit
    #[arg(long, default_value_t = 0.0)]
    pub degenerate_eps: f64,
}

impl FilterFlags {
    pub fn to_config(&self) -> FilterConfig<f64> {
        FilterConfig {
            method: self.method.into(),
            window: self.window,
            ema_alpha: self.ema_alpha,
            init_var: self.init_var,
            degenerate_eps: self.degenerate_eps,
        }
    }
}

/// Parsed `--threshold-policy` value: `eer`, `fpr:F` or `fixed:V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyArg {
    Eer,
    Fpr(f64),
    Fixed(f64),
}

impl PolicyArg {
    pub fn to_policy(self) -> ThresholdPolicy<f64> {
        match self {
            PolicyArg::Eer => ThresholdPolicy::EerPoint,
            PolicyArg::Fpr(f) => ThresholdPolicy::FprTarget(f),
            PolicyArg::Fixed(v) => ThresholdPolicy::Fixed(v),
        }
    }
}

impl fmt::Display for PolicyArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyArg::Eer => write!(f, "eer"),
            PolicyArg::Fpr(v) => write!(f, "fpr:{v}"),
            PolicyArg::Fixed(v) => write!(f, "fixed:{v}"),
        }
    }
}

pub fn parse_policy(s: &str) -> Result<PolicyArg, String> {
    if s == "eer" {
        return Ok(PolicyArg::Eer);
    }
    if let Some(rest) = s.strip_prefix("fpr:") {
        return rest
            .parse()
            .map(PolicyArg::Fpr)
            .map_err(|e| format!("bad FPR budget {rest:?}: {e}"));
    }
    if let Some(rest) = s.strip_prefix("fixed:") {
        return rest
            .parse()
            .map(PolicyArg::Fixed)
            .map_err(|e| format!("bad fixed threshold {rest:?}: {e}"));
    }
    Err(format!("expected eer, fpr:F or fixed:V, got {s:?}"))
}
