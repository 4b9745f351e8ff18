//! Descriptors of a value set: mean, standard deviation, range, IQR and
//! skewness.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mu: f64,
    /// Population standard deviation (divisor `n`).
    pub sigma: f64,
    /// Range, `max - min`.
    pub rho: f64,
    pub iqr: f64,
    /// Adjusted Fisher-Pearson skewness; `None` for `n < 3` or zero variance.
    pub sk: Option<f64>,
}

/// Selector for one field of [`SummaryStats`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Omega {
    Mu,
    Sigma,
    Rho,
    Iqr,
    Sk,
}

impl Omega {
    pub const ALL: [Omega; 5] = [Omega::Mu, Omega::Sigma, Omega::Rho, Omega::Iqr, Omega::Sk];

    pub fn as_str(self) -> &'static str {
        match self {
            Omega::Mu => "mu",
            Omega::Sigma => "sigma",
            Omega::Rho => "rho",
            Omega::Iqr => "iqr",
            Omega::Sk => "sk",
        }
    }
}

impl fmt::Display for Omega {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Omega {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        Omega::ALL
            .into_iter()
            .find(|o| o.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                SimError::usage(format!(
                    "unknown statistic `{s}`; expected one of mu, sigma, rho, iqr, sk"
                ))
            })
    }
}

impl SummaryStats {
    pub fn get(&self, omega: Omega) -> Option<f64> {
        match omega {
            Omega::Mu => Some(self.mu),
            Omega::Sigma => Some(self.sigma),
            Omega::Rho => Some(self.rho),
            Omega::Iqr => Some(self.iqr),
            Omega::Sk => self.sk,
        }
    }
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Quantile of sorted data by linear interpolation between order statistics
/// (position `(n - 1) * q`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of an empty sample");
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> Result<SummaryStats> {
    let n = values.len();
    if n == 0 {
        return Err(SimError::usage("cannot summarize an empty value set"));
    }
    let nf = n as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rho = sorted[n - 1] - sorted[0];

    let (mu, m2, m3) = if rho == 0.0 {
        // constant sample: skip the rounding residue of a computed mean
        (sorted[0], 0.0, 0.0)
    } else {
        let mu = compensated_sum(values.iter().copied()) / nf;
        let m2 = compensated_sum(values.iter().map(|x| (x - mu).powi(2))) / nf;
        let m3 = compensated_sum(values.iter().map(|x| (x - mu).powi(3))) / nf;
        (mu, m2, m3)
    };
    let iqr = (quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25)).max(0.0);

    let sk = (n >= 3 && m2 > 0.0).then(|| (nf * (nf - 1.0)).sqrt() / (nf - 2.0) * m3 / m2.powf(1.5));
    Ok(SummaryStats {
        mu,
        sigma: m2.sqrt(),
        rho,
        iqr,
        sk,
    })
}
