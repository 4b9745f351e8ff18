//! Per-task economics: sampling primitives, skill combination, output
//! curves, margin dynamics, error shock and utility.
//!
//! Everything here is a pure function of its arguments plus, for the two
//! sampling helpers, an explicit random stream.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::types::InteractionKind;

/// Clamp applied to the argument of `inverse_logistic` before taking logs.
pub const INVERSE_LOGISTIC_EPS: f64 = 1e-9;

/// Linear interpolation across `tot_steps` evenly spaced steps.
///
/// Returns `start` when `tot_steps <= 1`; otherwise step `0` maps to `start`
/// and step `tot_steps - 1` maps to `end` exactly.
pub fn interpolate(start: f64, end: f64, cur_step: usize, tot_steps: usize) -> f64 {
    if tot_steps <= 1 {
        return start;
    }
    let last = tot_steps - 1;
    if cur_step == last {
        return end;
    }
    start + (end - start) * cur_step as f64 / last as f64
}

/// Checks that `probs` is a usable probability vector for `n` items.
pub fn validate_probs(probs: &[f64], n: usize, path: &str) -> Result<()> {
    if probs.len() != n {
        return Err(SimError::config(
            path,
            format!("expected {n} probabilities, got {}", probs.len()),
        ));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(SimError::config(
            path,
            format!("probability {p} is negative or not finite"),
        ));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(SimError::config(path, format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// Index of the item drawn by inverse-CDF on a single uniform draw.
///
/// The caller is responsible for `probs` being valid; see [`random_choice`]
/// for the checked variant.
pub(crate) fn choose_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (j, p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return j;
        }
    }
    // Rounding left `cum` a hair below 1; fall back to the last item that can occur.
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// Draws one item with probability `probs[j]` for item `j`. Consumes exactly
/// one uniform from the stream.
pub fn random_choice<T: Copy, R: Rng + ?Sized>(items: &[T], probs: &[f64], rng: &mut R) -> Result<T> {
    validate_probs(probs, items.len(), "probs")?;
    Ok(items[choose_index(probs, rng)])
}

/// Shape parameters of a Beta distribution. Serialized as `[alpha, beta]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl From<[f64; 2]> for BetaParams {
    fn from([alpha, beta]: [f64; 2]) -> Self {
        BetaParams { alpha, beta }
    }
}

impl From<BetaParams> for [f64; 2] {
    fn from(p: BetaParams) -> Self {
        [p.alpha, p.beta]
    }
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Self {
        BetaParams { alpha, beta }
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn std_dev(&self) -> f64 {
        let s = self.alpha + self.beta;
        (self.alpha * self.beta / (s * s * (s + 1.0))).sqrt()
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::config(
                    format!("{path}.{name}"),
                    format!("shape must be positive and finite, got {v}"),
                ));
            }
        }
        Ok(())
    }

    pub fn sampler(&self) -> Result<BetaSampler> {
        self.validate("beta")?;
        let gamma = |shape: f64| Gamma::new(shape, 1.0).map_err(|e| SimError::config("beta", e.to_string()));
        Ok(BetaSampler {
            x: gamma(self.alpha)?,
            y: gamma(self.beta)?,
            p_one: self.mean(),
        })
    }
}

/// Beta(alpha, beta) drawn as `X / (X + Y)` with `X ~ Gamma(alpha)`,
/// `Y ~ Gamma(beta)`. Construct once and reuse inside hot loops.
#[derive(Debug, Clone, Copy)]
pub struct BetaSampler {
    x: Gamma<f64>,
    y: Gamma<f64>,
    p_one: f64,
}

impl BetaSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x = self.x.sample(rng);
        let y = self.y.sample(rng);
        let s = x + y;
        if s > 0.0 {
            (x / s).clamp(0.0, 1.0)
        } else {
            // Both gammas underflowed (tiny shapes): the limit law is Bernoulli(mean).
            if rng.random::<f64>() < self.p_one {
                1.0
            } else {
                0.0
            }
        }
    }
}

pub fn sample_beta<R: Rng + ?Sized>(p: BetaParams, rng: &mut R) -> Result<f64> {
    Ok(p.sampler()?.sample(rng))
}

/// Performance of the HM policy from the two constituent skills.
pub fn combine_skills(kind: InteractionKind, theta_h: f64, theta_m: f64, gamma: f64) -> Result<f64> {
    let mean = 0.5 * (theta_h + theta_m);
    let out = match kind {
        InteractionKind::Min => theta_h.min(theta_m),
        InteractionKind::Max => theta_h.max(theta_m),
        InteractionKind::Mean => mean,
        InteractionKind::Collaborate => (mean * gamma).min(1.0),
        InteractionKind::Superpower => (theta_h.max(theta_m) * gamma).min(1.0),
        InteractionKind::Individual => {
            return Err(SimError::usage(
                "`individual` labels H/M records and is not a combination function",
            ))
        }
    };
    Ok(out)
}

/// Map from skill level to quality-adjusted output.
///
/// JSON form: `{"kind": "logistic", "params": {"k": 5.0}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum OutputCurve {
    Linear { slope: f64, intercept: f64 },
    Logistic { k: f64 },
    InverseLogistic { k: f64 },
    Exponential { base: f64 },
    Power { exponent: f64 },
    Logarithmic { log_base: f64 },
}

impl OutputCurve {
    pub fn name(&self) -> &'static str {
        match self {
            OutputCurve::Linear { .. } => "linear",
            OutputCurve::Logistic { .. } => "logistic",
            OutputCurve::InverseLogistic { .. } => "inverse_logistic",
            OutputCurve::Exponential { .. } => "exponential",
            OutputCurve::Power { .. } => "power",
            OutputCurve::Logarithmic { .. } => "logarithmic",
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        let bad = |field: &str, msg: String| Err(SimError::config(format!("{path}.params.{field}"), msg));
        let finite = |field: &str, v: f64| -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                bad(field, format!("must be finite, got {v}"))
            }
        };
        match *self {
            OutputCurve::Linear { slope, intercept } => {
                finite("slope", slope)?;
                finite("intercept", intercept)
            }
            OutputCurve::Logistic { k } | OutputCurve::InverseLogistic { k } => {
                finite("k", k)?;
                if k == 0.0 {
                    return bad("k", "steepness must be nonzero".into());
                }
                Ok(())
            }
            OutputCurve::Exponential { base } => {
                finite("base", base)?;
                if base <= 0.0 || base == 1.0 {
                    return bad("base", format!("base must be positive and != 1, got {base}"));
                }
                Ok(())
            }
            OutputCurve::Power { exponent } => finite("exponent", exponent),
            OutputCurve::Logarithmic { log_base } => {
                finite("log_base", log_base)?;
                if log_base <= 1.0 {
                    return bad("log_base", format!("log_base must exceed 1, got {log_base}"));
                }
                Ok(())
            }
        }
    }

    /// Evaluates the curve at `theta` and clips the result to `[0, 1]`.
    /// Assumes `validate` passed.
    pub fn eval(&self, theta: f64) -> f64 {
        let y = match *self {
            OutputCurve::Linear { slope, intercept } => slope * theta + intercept,
            OutputCurve::Logistic { k } => 1.0 / (1.0 + (-k * (2.0 * theta - 1.0)).exp()),
            OutputCurve::InverseLogistic { k } => {
                let t = theta.clamp(INVERSE_LOGISTIC_EPS, 1.0 - INVERSE_LOGISTIC_EPS);
                (k + (t / (1.0 - t)).ln()) / (2.0 * k)
            }
            OutputCurve::Exponential { base } => (base.powf(theta) - 1.0) / (base - 1.0),
            OutputCurve::Power { exponent } => theta.powf(exponent),
            OutputCurve::Logarithmic { log_base } => (1.0 + theta * (log_base - 1.0)).ln() / log_base.ln(),
        };
        clip01(y)
    }
}

pub fn quality_output(curve: &OutputCurve, theta: f64) -> Result<f64> {
    curve.validate("curve")?;
    Ok(curve.eval(theta))
}

#[inline]
fn clip01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Multiplier on the contribution margin at epoch `e` of `n_epochs`:
/// 1 at the first epoch, `1 + delta_c` at the last.
pub fn margin_factor(delta_c: f64, e: usize, n_epochs: usize) -> f64 {
    interpolate(1.0, 1.0 + delta_c, e, n_epochs)
}

pub fn value(y: f64, mc: f64, delta_ce: f64) -> f64 {
    clip01(y * mc * delta_ce)
}

/// Penalty `(1 - theta) * c_err`, charged once the shortfall reaches `t_err`.
pub fn error_cost(theta: f64, t_err: f64, c_err: f64) -> f64 {
    let shortfall = 1.0 - theta;
    if shortfall >= t_err {
        shortfall * c_err
    } else {
        0.0
    }
}

pub fn utility(v: f64, err: f64) -> f64 {
    v - err
}

/// Min-max normalization of a loss onto `[0, 1]`.
pub fn normalize_loss(loss: f64, lo: f64, hi: f64) -> Result<f64> {
    // also rejects NaN bounds
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(SimError::config(
            "loss_range",
            format!("lower bound {lo} must be below upper bound {hi}"),
        ));
    }
    Ok((loss - lo) / (hi - lo))
}

pub fn theta_from_loss(normalized_loss: f64) -> f64 {
    1.0 - normalized_loss
}
