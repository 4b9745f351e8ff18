//! The Monte Carlo loop: `n_runs` replications of `n_epochs` epochs over
//! `n_firms` firms.
//!
//! Draw-order contract, per run `k` (its own stream, see [`crate::rng`]):
//!
//! 1. at epoch 0, one policy draw per firm, in firm order;
//! 2. for every `(e, i)`, in that order: difficulty, `theta_H`, `theta_M`.
//!
//! Both skill draws happen whatever the firm's policy, so the stream position
//! never depends on policy and scenarios that differ only in the interaction
//! function see identical skill draws.

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use crate::config::{SimulationConfig, SkillSchedule};
use crate::error::{Result, SimError};
use crate::model::{
    choose_index, combine_skills, error_cost, interpolate, margin_factor, value, BetaParams, BetaSampler,
};
use crate::rng::run_stream;
use crate::types::{Difficulty, InteractionKind, PolicyKind};

/// One task execution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRecord {
    pub firm: usize,
    pub policy: PolicyKind,
    pub interaction: InteractionKind,
    pub difficulty: Difficulty,
    pub epoch: usize,
    /// 1-based run index.
    pub run: usize,
    pub theta: f64,
    pub y: f64,
    pub v: f64,
    pub err: f64,
    pub u: f64,
    /// `(theta_H, theta_M)` behind this record; only filled in debug mode.
    pub draws: Option<(f64, f64)>,
}

/// All records of one scenario, ordered by `(run, epoch, firm)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricFrame {
    pub config_id: String,
    pub records: Vec<MetricRecord>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Keep the underlying `(theta_H, theta_M)` pair on every record.
    pub record_draws: bool,
}

/// One policy per firm.
pub fn assign_policies<R: Rng + ?Sized>(n: usize, p_policy: [f64; 3], rng: &mut R) -> Vec<PolicyKind> {
    (0..n).map(|_| PolicyKind::ALL[choose_index(&p_policy, rng)]).collect()
}

/// Beta parameters of policy `c` on difficulty `d` at epoch `e` of `n_epochs`.
pub fn epoch_beta(
    schedule: &SkillSchedule,
    c: PolicyKind,
    d: Difficulty,
    e: usize,
    n_epochs: usize,
) -> Result<BetaParams> {
    let cell = schedule
        .get(c, d)
        .ok_or_else(|| SimError::usage("HM has no performance schedule; it combines the H and M draws"))?;
    Ok(BetaParams {
        alpha: interpolate(cell.start.alpha, cell.end.alpha, e, n_epochs),
        beta: interpolate(cell.start.beta, cell.end.beta, e, n_epochs),
    })
}

/// Samplers for every `(epoch, difficulty)` of both scheduled policies.
struct EpochSamplers {
    // index: (e * 3 + d) * 2 + {0: H, 1: M}
    samplers: Vec<BetaSampler>,
}

impl EpochSamplers {
    fn build(schedule: &SkillSchedule, n_epochs: usize) -> Result<Self> {
        let mut samplers = Vec::with_capacity(n_epochs * 6);
        for e in 0..n_epochs {
            for d in Difficulty::ALL {
                for c in [PolicyKind::H, PolicyKind::M] {
                    samplers.push(epoch_beta(schedule, c, d, e, n_epochs)?.sampler()?);
                }
            }
        }
        Ok(EpochSamplers { samplers })
    }

    fn get(&self, e: usize, d: Difficulty) -> (&BetaSampler, &BetaSampler) {
        let base = (e * 3 + d as usize) * 2;
        (&self.samplers[base], &self.samplers[base + 1])
    }
}

pub fn run_simulation(config: &SimulationConfig) -> Result<MetricFrame> {
    run_simulation_with(config, RunOptions::default())
}

pub fn run_simulation_with(config: &SimulationConfig, opts: RunOptions) -> Result<MetricFrame> {
    config.validate()?;
    let samplers = EpochSamplers::build(&config.schedule, config.n_epochs)?;
    let margins: Vec<[f64; 3]> = (0..config.n_epochs)
        .map(|e| PolicyKind::ALL.map(|c| margin_factor(config.econ.delta.get(c), e, config.n_epochs)))
        .collect();

    let per_run = config.n_epochs * config.n_firms;
    let mut records = Vec::with_capacity(per_run * config.n_runs);
    for k in 1..=config.n_runs {
        simulate_run(config, &samplers, &margins, k, opts, &mut records);
    }
    Ok(MetricFrame {
        config_id: config.config_id.clone(),
        records,
    })
}

fn simulate_run(
    config: &SimulationConfig,
    samplers: &EpochSamplers,
    margins: &[[f64; 3]],
    k: usize,
    opts: RunOptions,
    out: &mut Vec<MetricRecord>,
) {
    let mut rng = run_stream(config.seed, k as u64);
    let p_difficulty = config.p_difficulty.to_array();
    let econ = &config.econ;
    let mut policies = Vec::new();

    for (e, margin) in margins.iter().enumerate() {
        if e == 0 {
            policies = assign_policies(config.n_firms, config.p_policy.to_array(), &mut rng);
        }
        for (i, &c) in policies.iter().enumerate() {
            let d = Difficulty::ALL[choose_index(&p_difficulty, &mut rng)];
            let (human, machine) = samplers.get(e, d);
            let theta_h = human.sample(&mut rng);
            let theta_m = machine.sample(&mut rng);

            let (theta, a) = match c {
                PolicyKind::H => (theta_h, InteractionKind::Individual),
                PolicyKind::M => (theta_m, InteractionKind::Individual),
                PolicyKind::HM => (
                    combine_skills(config.interaction, theta_h, theta_m, config.gamma_hm)
                        .expect("validated interaction"),
                    config.interaction,
                ),
            };
            let y = config.curve.eval(theta);
            let v = value(y, econ.mc.get(c), margin[c as usize]);
            let err = error_cost(theta, econ.t_err, econ.c_err);
            out.push(MetricRecord {
                firm: i,
                policy: c,
                interaction: a,
                difficulty: d,
                epoch: e,
                run: k,
                theta,
                y,
                v,
                err,
                u: v - err,
                draws: opts.record_draws.then_some((theta_h, theta_m)),
            });
        }
    }
}

/// Runs every config on a pool of `parallelism` threads. Output order follows
/// input order and each entry is independent: one bad config does not stop
/// the rest.
pub fn run_batch(configs: &[SimulationConfig], parallelism: usize) -> Result<Vec<Result<MetricFrame>>> {
    run_batch_with(configs, parallelism, RunOptions::default(), |_, frame, _| frame)
}

/// Streaming form of [`run_batch`]: `sink` receives each config's index,
/// result and wall time as soon as it finishes (possibly concurrently), and
/// its return values are collected in input order. Lets callers persist
/// frames without holding the whole batch in memory.
pub fn run_batch_with<T, F>(
    configs: &[SimulationConfig],
    parallelism: usize,
    opts: RunOptions,
    sink: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, Result<MetricFrame>, Duration) -> T + Sync,
{
    if parallelism == 0 {
        return Err(SimError::usage("parallelism must be at least 1"));
    }
    if configs.is_empty() {
        return Ok(Vec::new());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| SimError::usage(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(|| {
        configs
            .par_iter()
            .enumerate()
            .map(|(j, cfg)| {
                let start = Instant::now();
                let frame = run_simulation_with(cfg, opts);
                sink(j, frame, start.elapsed())
            })
            .collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::BetaEndpoints;
    use crate::types::{PerDifficulty, PerPolicy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small(n: usize, e: usize, k: usize) -> SimulationConfig {
        SimulationConfig {
            n_firms: n,
            n_epochs: e,
            n_runs: k,
            ..SimulationConfig::example()
        }
    }

    #[test]
    fn degenerate_assignment() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(assign_policies(5, [0.0, 1.0, 0.0], &mut rng), vec![PolicyKind::HM; 5]);
        assert_eq!(assign_policies(1, [1.0, 0.0, 0.0], &mut rng), vec![PolicyKind::H]);
    }

    #[test]
    fn uniform_assignment_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = 1.0 / 3.0;
        let ps = assign_policies(30_000, [p, p, 1.0 - 2.0 * p], &mut rng);
        // 3 sigma binomial bound at p = 1/3, n = 30000
        let bound = 3.0 * (p * (1.0 - p) / 30_000.0f64).sqrt();
        for c in PolicyKind::ALL {
            let f = ps.iter().filter(|x| **x == c).count() as f64 / 30_000.0;
            assert!((f - p).abs() <= bound, "{c}: {f}");
        }
    }

    #[test]
    fn epoch_beta_interpolates() {
        let mut schedule = SimulationConfig::example().schedule;
        schedule.human.low = BetaEndpoints {
            start: BetaParams::new(2.0, 5.0),
            end: BetaParams::new(6.0, 3.0),
        };
        let at = |e| epoch_beta(&schedule, PolicyKind::H, Difficulty::Low, e, 10).unwrap();
        assert_eq!(at(0), BetaParams::new(2.0, 5.0));
        assert_eq!(at(9), BetaParams::new(6.0, 3.0));
        let mid = at(3);
        assert!((mid.alpha - 10.0 / 3.0).abs() < 1e-12);
        assert!((mid.beta - 13.0 / 3.0).abs() < 1e-12);
        assert!(epoch_beta(&schedule, PolicyKind::HM, Difficulty::Low, 0, 10).is_err());
    }

    #[test]
    fn single_record_structure() {
        let cfg = SimulationConfig {
            p_policy: PerPolicy::new(1.0, 0.0, 0.0),
            p_difficulty: PerDifficulty::new(0.0, 1.0, 0.0),
            ..small(1, 1, 1)
        };
        let f = run_simulation(&cfg).unwrap();
        assert_eq!(f.records.len(), 1);
        let r = f.records[0];
        assert_eq!(
            (r.policy, r.difficulty, r.epoch, r.run),
            (PolicyKind::H, Difficulty::Med, 0, 1)
        );
        assert_eq!(r.interaction, InteractionKind::Individual);
        assert_eq!(r.u, r.v - r.err);
    }

    #[test]
    fn record_count_and_order() {
        let f = run_simulation(&small(3, 10, 1000)).unwrap();
        assert_eq!(f.records.len(), 30_000);
        let keys: Vec<_> = f.records.iter().map(|r| (r.run, r.epoch, r.firm)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(keys, sorted);
        assert_eq!(keys[0], (1, 0, 0));
        assert_eq!(*keys.last().unwrap(), (1000, 9, 2));
    }

    #[test]
    fn policy_fixed_within_run_and_labels_consistent() {
        let f = run_simulation(&small(4, 6, 50)).unwrap();
        for chunk in f.records.chunks(4 * 6) {
            for r in chunk {
                assert_eq!(r.policy, chunk[r.firm].policy);
                assert_eq!(r.interaction == InteractionKind::Individual, r.policy != PolicyKind::HM);
                assert_eq!(r.u, r.v - r.err);
            }
        }
    }

    #[test]
    fn mean_interaction_lies_between_draws() {
        let cfg = SimulationConfig {
            interaction: InteractionKind::Mean,
            ..small(3, 5, 200)
        };
        let f = run_simulation_with(&cfg, RunOptions { record_draws: true }).unwrap();
        let mut seen = 0;
        for r in f.records.iter().filter(|r| r.policy == PolicyKind::HM) {
            let (h, m) = r.draws.unwrap();
            assert!(r.theta >= h.min(m) && r.theta <= h.max(m));
            seen += 1;
        }
        assert!(seen > 0);
        for r in f.records.iter().filter(|r| r.policy != PolicyKind::HM) {
            let (h, m) = r.draws.unwrap();
            assert_eq!(r.theta, if r.policy == PolicyKind::H { h } else { m });
        }
    }

    #[test]
    fn debug_mode_does_not_change_results() {
        let cfg = small(2, 4, 30);
        let plain = run_simulation(&cfg).unwrap();
        let debug = run_simulation_with(&cfg, RunOptions { record_draws: true }).unwrap();
        for (a, b) in plain.records.iter().zip(&debug.records) {
            assert_eq!(MetricRecord { draws: None, ..*b }, *a);
        }
    }

    #[test]
    fn seeds_matter() {
        let a = run_simulation(&small(1, 10, 20)).unwrap();
        let b = run_simulation(&SimulationConfig {
            seed: 43,
            ..small(1, 10, 20)
        })
        .unwrap();
        let c = run_simulation(&small(1, 10, 20)).unwrap();
        assert_eq!(a, c);
        assert!(a.records.iter().zip(&b.records).any(|(x, y)| x.theta != y.theta));
    }

    #[test]
    fn invalid_config_fails_early() {
        let cfg = SimulationConfig {
            gamma_hm: 0.5,
            ..small(1, 1, 1)
        };
        assert!(matches!(run_simulation(&cfg), Err(SimError::Config { .. })));
    }

    #[test]
    fn machine_struggles_on_high() {
        // High-difficulty M Beta mean 0.286..0.375 vs H 0.5
        let cfg = SimulationConfig {
            p_difficulty: PerDifficulty::new(0.0, 0.0, 1.0),
            ..small(1, 10, 1000)
        };
        let f = run_simulation(&cfg).unwrap();
        let mean = |c| {
            let xs: Vec<f64> = f.records.iter().filter(|r| r.policy == c).map(|r| r.theta).collect();
            xs.iter().sum::<f64>() / xs.len() as f64
        };
        assert!(mean(PolicyKind::H) > mean(PolicyKind::M) + 0.1);
    }

    #[test]
    fn batch_matches_sequential() {
        let configs: Vec<_> = (0..6)
            .map(|s| SimulationConfig {
                seed: s,
                config_id: format!("c{s}"),
                ..small(2, 3, 40)
            })
            .collect();
        let one = run_batch(&configs, 1).unwrap();
        let many = run_batch(&configs, 8).unwrap();
        for ((a, b), cfg) in one.iter().zip(&many).zip(&configs) {
            let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
            assert_eq!(a, b);
            assert_eq!(a, &run_simulation(cfg).unwrap());
        }
        assert!(run_batch(&[], 4).unwrap().is_empty());
        assert!(run_batch(&configs, 0).is_err());
    }

    #[test]
    fn batch_reports_failures_per_config() {
        let mut configs = vec![small(1, 2, 3), small(1, 2, 3), small(1, 2, 3)];
        configs[1].gamma_hm = 0.0;
        let out = run_batch(&configs, 2).unwrap();
        assert!(out[0].is_ok() && out[1].is_err() && out[2].is_ok());
    }
}
