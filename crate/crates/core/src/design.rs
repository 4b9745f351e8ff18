//! Space-filling experiment design over scenario parameters.
//!
//! Numeric parameters are sampled with a Latin hypercube, optionally thinned
//! to a well-spread subset by greedy maximin selection, then crossed with
//! the categorical grid (interaction function × output curve).

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SimulationConfig;
use crate::error::{Result, SimError};
use crate::model::OutputCurve;
use crate::rng::derive_seed;
use crate::types::InteractionKind;

/// Numeric parameters a design may vary.
pub const KNOWN_PARAMETERS: [&str; 6] = ["gamma_hm", "mc_H", "mc_M", "delta_HM", "t_err", "c_err"];

/// Around 1,500 configs per experiment once crossed with the 3 × 2 grid.
pub const DEFAULT_N_NUMERIC: usize = 250;

/// Maximin candidate pool size as a multiple of the requested point count.
pub const DEFAULT_POOL_FACTOR: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericRange {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

impl NumericRange {
    pub fn new(name: &str, lo: f64, hi: f64) -> Self {
        NumericRange {
            name: name.into(),
            lo,
            hi,
        }
    }

    fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpace {
    pub numeric: Vec<NumericRange>,
    pub interactions: Vec<InteractionKind>,
    pub curves: Vec<OutputCurve>,
}

impl Default for DesignSpace {
    fn default() -> Self {
        DesignSpace {
            numeric: vec![
                NumericRange::new("gamma_hm", 1.0, 2.0),
                NumericRange::new("mc_H", 0.4, 0.6),
                NumericRange::new("mc_M", 0.7, 0.9),
                NumericRange::new("delta_HM", 0.1, 0.9),
                NumericRange::new("t_err", 0.0, 1.0),
                NumericRange::new("c_err", 0.0, 1.0),
            ],
            interactions: InteractionKind::AUGMENTING.to_vec(),
            curves: vec![
                OutputCurve::Logistic { k: 5.0 },
                OutputCurve::InverseLogistic { k: 5.0 },
            ],
        }
    }
}

impl DesignSpace {
    pub fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        for (j, r) in self.numeric.iter().enumerate() {
            let path = format!("numeric[{j}]");
            if !KNOWN_PARAMETERS.contains(&r.name.as_str()) {
                return Err(SimError::config(
                    format!("{path}.name"),
                    format!("unknown parameter `{}`; expected one of {KNOWN_PARAMETERS:?}", r.name),
                ));
            }
            if !names.insert(r.name.as_str()) {
                return Err(SimError::config(
                    format!("{path}.name"),
                    format!("duplicate parameter `{}`", r.name),
                ));
            }
            if !(r.lo.is_finite() && r.hi.is_finite() && r.lo < r.hi) {
                return Err(SimError::config(
                    path,
                    format!("need lo < hi, got [{}, {}]", r.lo, r.hi),
                ));
            }
        }
        if self.interactions.is_empty() {
            return Err(SimError::config("interactions", "at least one interaction is required"));
        }
        if let Some(j) = self.interactions.iter().position(|a| *a == InteractionKind::Individual) {
            return Err(SimError::config(
                format!("interactions[{j}]"),
                "`individual` is not a combination function",
            ));
        }
        if self.curves.is_empty() {
            return Err(SimError::config("curves", "at least one output curve is required"));
        }
        let mut curve_names = HashSet::new();
        for (j, c) in self.curves.iter().enumerate() {
            c.validate(&format!("curves[{j}]"))?;
            if !curve_names.insert(c.name()) {
                return Err(SimError::config(
                    format!("curves[{j}]"),
                    format!("duplicate curve kind `{}`", c.name()),
                ));
            }
        }
        Ok(())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.numeric.iter().position(|r| r.name == name)
    }

    fn normalized(&self, p: &DesignPoint) -> Vec<f64> {
        self.numeric
            .iter()
            .zip(&p.values)
            .map(|(r, v)| (v - r.lo) / r.width())
            .collect()
    }
}

/// Space file accepted by the `design` command: a [`DesignSpace`] plus an
/// optional base scenario supplying everything the design does not vary.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SpaceDocument {
    #[serde(flatten)]
    pub space: DesignSpace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<SimulationConfig>,
}

impl SpaceDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: SpaceDocument = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            SimError::config(path, e.into_inner().to_string())
        })?;
        doc.space.validate()?;
        if let Some(base) = &doc.base {
            base.validate().map_err(|e| match e {
                SimError::Config { path, message } => SimError::config(format!("base.{path}"), message),
                other => other,
            })?;
        }
        Ok(doc)
    }
}

/// Values for the numeric ranges of a space, in range order.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoint {
    pub values: Vec<f64>,
}

/// Latin hypercube sample of `n` points: along every dimension each of the
/// `n` equal-width strata holds exactly one point, jittered uniformly inside
/// it. Strata are matched across dimensions by independent permutations.
pub fn lhs_sample<R: Rng + ?Sized>(space: &DesignSpace, n: usize, rng: &mut R) -> Vec<DesignPoint> {
    let mut points = vec![
        DesignPoint {
            values: Vec::with_capacity(space.numeric.len())
        };
        n
    ];
    let mut strata: Vec<usize> = (0..n).collect();
    for range in &space.numeric {
        strata.shuffle(rng);
        for (point, &s) in points.iter_mut().zip(&strata) {
            let u: f64 = rng.random();
            let x = range.lo + (s as f64 + u) / n as f64 * range.width();
            point.values.push(x.min(range.hi));
        }
    }
    points
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Greedy maximin subset of `n` candidates, using Euclidean distance on
/// range-normalized coordinates.
///
/// Starts from the farthest-apart pair, then repeatedly adds the candidate
/// whose distance to its nearest selected point is largest. Ties go to the
/// lowest candidate index. Returned in selection order.
pub fn maximin_select(space: &DesignSpace, candidates: &[DesignPoint], n: usize) -> Result<Vec<DesignPoint>> {
    let m = candidates.len();
    if n > m {
        return Err(SimError::usage(format!(
            "cannot select {n} points from a pool of {m} candidates"
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![candidates[0].clone()]);
    }
    let coords: Vec<Vec<f64>> = candidates.iter().map(|p| space.normalized(p)).collect();

    let (mut best, mut pair) = (-1.0, (0, 1));
    for i in 0..m {
        for j in i + 1..m {
            let d = sq_dist(&coords[i], &coords[j]);
            if d > best {
                best = d;
                pair = (i, j);
            }
        }
    }

    let mut chosen = vec![pair.0, pair.1];
    let mut taken = vec![false; m];
    taken[pair.0] = true;
    taken[pair.1] = true;
    // nearest selected point, per candidate
    let mut nearest: Vec<f64> = coords
        .iter()
        .map(|c| sq_dist(c, &coords[pair.0]).min(sq_dist(c, &coords[pair.1])))
        .collect();

    while chosen.len() < n {
        let mut pick = None;
        let mut pick_d = -1.0;
        for (i, &d) in nearest.iter().enumerate() {
            if !taken[i] && d > pick_d {
                pick_d = d;
                pick = Some(i);
            }
        }
        let p = pick.expect("n <= m leaves a free candidate");
        taken[p] = true;
        chosen.push(p);
        for (i, c) in coords.iter().enumerate() {
            if !taken[i] {
                nearest[i] = nearest[i].min(sq_dist(c, &coords[p]));
            }
        }
    }
    Ok(chosen.into_iter().map(|i| candidates[i].clone()).collect())
}

/// Smallest pairwise normalized distance within a point set.
pub fn min_pairwise_distance(space: &DesignSpace, points: &[DesignPoint]) -> f64 {
    let coords: Vec<Vec<f64>> = points.iter().map(|p| space.normalized(p)).collect();
    let mut best = f64::INFINITY;
    for i in 0..coords.len() {
        for j in i + 1..coords.len() {
            best = best.min(sq_dist(&coords[i], &coords[j]));
        }
    }
    best.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignMethod {
    Lhs,
    /// Greedy maximin over an LHS pool of `pool` candidates.
    Maximin {
        pool: usize,
    },
}

impl DesignMethod {
    pub fn maximin_default(n: usize) -> Self {
        DesignMethod::Maximin {
            pool: n * DEFAULT_POOL_FACTOR,
        }
    }
}

/// Numeric design points by the requested method.
pub fn sample_points<R: Rng + ?Sized>(
    space: &DesignSpace,
    n: usize,
    method: DesignMethod,
    rng: &mut R,
) -> Result<Vec<DesignPoint>> {
    match method {
        DesignMethod::Lhs => Ok(lhs_sample(space, n, rng)),
        DesignMethod::Maximin { pool } => {
            if pool < n {
                return Err(SimError::usage(format!(
                    "maximin pool ({pool}) must be at least the number of points ({n})"
                )));
            }
            let candidates = lhs_sample(space, pool, rng);
            maximin_select(space, &candidates, n)
        }
    }
}

/// Writes a design point into a scenario. `mc_HM` is derived as
/// `mc_H + mc_M - 1` and the H and M margins are held flat.
pub fn apply_point(space: &DesignSpace, point: &DesignPoint, cfg: &mut SimulationConfig) -> Result<()> {
    for (range, &v) in space.numeric.iter().zip(&point.values) {
        match range.name.as_str() {
            "gamma_hm" => cfg.gamma_hm = v,
            "mc_H" => cfg.econ.mc.h = v,
            "mc_M" => cfg.econ.mc.m = v,
            "delta_HM" => cfg.econ.delta.hm = v,
            "t_err" => cfg.econ.t_err = v,
            "c_err" => cfg.econ.c_err = v,
            other => return Err(SimError::config("numeric", format!("unknown parameter `{other}`"))),
        }
    }
    cfg.econ.mc.hm = cfg.econ.mc.h + cfg.econ.mc.m - 1.0;
    cfg.econ.delta.h = 0.0;
    cfg.econ.delta.m = 0.0;
    Ok(())
}

/// Full experiment: `n_numeric` sampled points crossed with every
/// (interaction, curve) pair of the space. Each config inherits sizes,
/// distributions and schedule from `base`, and gets its own seed derived
/// from `(base.seed, design index)`.
pub fn build_designs<R: Rng + ?Sized>(
    space: &DesignSpace,
    n_numeric: usize,
    method: DesignMethod,
    base: &SimulationConfig,
    rng: &mut R,
) -> Result<Vec<SimulationConfig>> {
    space.validate()?;
    let points = sample_points(space, n_numeric, method, rng)?;
    let mut out = Vec::with_capacity(points.len() * space.interactions.len() * space.curves.len());
    for (p, point) in points.iter().enumerate() {
        for &a in &space.interactions {
            for &curve in &space.curves {
                let index = out.len() as u64;
                let mut cfg = base.clone();
                apply_point(space, point, &mut cfg)?;
                cfg.interaction = a;
                cfg.curve = curve;
                cfg.seed = derive_seed(base.seed, index);
                cfg.config_id = format!("p{p:04}-{a}-{}", curve.name());
                cfg.validate()?;
                out.push(cfg);
            }
        }
    }
    Ok(out)
}
