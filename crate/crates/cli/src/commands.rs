//! Subcommand bodies. Each returns the process exit code on completion;
//! errors are mapped to exit codes by `main`.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use skillsim_core::analytics::{
    aggregate_cells, expected_error_cost, frame_cells, hmg_by_delta_values, hmg_from_values, skill_cost_total,
    Grouping, HmgReport,
};
use skillsim_core::design::{build_designs, SpaceDocument};
use skillsim_core::engine::run_batch_with;
use skillsim_core::io::{
    format_gain, format_sig9, list_files, load_config, load_config_dir, read_runs_file, read_summary_file,
    write_config, write_hmg_file, write_runs_file, write_summary_file, HmgSection,
};
use skillsim_core::rng::design_stream;
use skillsim_core::{DesignMethod, Metric, Omega, RunOptions, SimError, SimulationConfig};

pub const EXIT_IO: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;

pub fn design(space: Option<&Path>, n: usize, method: DesignMethod, seed: Option<u64>, out: &Path) -> Result<ExitCode> {
    if n == 0 {
        return Err(SimError::usage("--n must be at least 1").into());
    }
    let doc = match space {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            SpaceDocument::from_json(&text).with_context(|| format!("invalid space file {}", path.display()))?
        }
        None => SpaceDocument::default(),
    };
    let mut base = doc.base.unwrap_or_else(SimulationConfig::example);
    if let Some(seed) = seed {
        base.seed = seed;
    }
    let configs = build_designs(&doc.space, n, method, &base, &mut design_stream(base.seed))?;

    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    for cfg in &configs {
        write_config(cfg, out)?;
    }
    println!("wrote {} configs to {}", configs.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

pub fn simulate(
    config: Option<&Path>,
    configs: Option<&Path>,
    out: &Path,
    parallel: usize,
    record_draws: bool,
) -> Result<ExitCode> {
    if parallel == 0 {
        return Err(SimError::usage("--parallel must be at least 1").into());
    }
    let loaded: Vec<(PathBuf, skillsim_core::Result<SimulationConfig>)> = match (config, configs) {
        (Some(path), _) => vec![(path.to_path_buf(), load_config(path))],
        (None, Some(dir)) => load_config_dir(dir)?,
        (None, None) => return Err(SimError::usage("one of --config or --configs is required").into()),
    };

    let mut valid = Vec::with_capacity(loaded.len());
    let mut invalid = 0usize;
    let mut io_failed = false;
    for (path, cfg) in loaded {
        match cfg.and_then(|c| c.validate().map(|()| c)) {
            Ok(c) => valid.push(c),
            Err(e) => {
                eprintln!("skipping {}: {e}", path.display());
                io_failed |= !e.is_validation();
                invalid += 1;
            }
        }
    }
    let mut ids = BTreeSet::new();
    for cfg in &valid {
        if !ids.insert(cfg.config_id.as_str()) {
            return Err(SimError::usage(format!("duplicate config_id `{}`", cfg.config_id)).into());
        }
    }

    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let opts = RunOptions { record_draws };
    let outcomes = run_batch_with(
        &valid,
        parallel,
        opts,
        |j, frame, elapsed| -> skillsim_core::Result<(usize, Duration)> {
            let frame = frame?;
            let cfg = &valid[j];
            write_runs_file(&frame, &out.join(format!("{}.csv", cfg.config_id)))?;
            write_config(cfg, out)?;
            Ok((frame.records.len(), elapsed))
        },
    )?;

    let mut written = 0usize;
    for (cfg, outcome) in valid.iter().zip(outcomes) {
        match outcome {
            Ok((rows, elapsed)) => {
                written += 1;
                println!("{}: {rows} rows in {:.3} s", cfg.config_id, elapsed.as_secs_f64());
            }
            Err(e) => {
                eprintln!("{}: {e}", cfg.config_id);
                io_failed |= !e.is_validation();
                invalid += usize::from(e.is_validation());
            }
        }
    }
    println!(
        "simulated {written} of {} configs into {}",
        written + invalid,
        out.display()
    );

    Ok(if io_failed {
        ExitCode::from(EXIT_IO)
    } else if invalid > 0 {
        ExitCode::from(EXIT_VALIDATION)
    } else {
        ExitCode::SUCCESS
    })
}

/// Comma list of labels, duplicates dropped, order kept.
fn parse_list<T: FromStr<Err = SimError> + PartialEq>(spec: &str, what: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let x = part.parse::<T>()?;
        if !out.contains(&x) {
            out.push(x);
        }
    }
    if out.is_empty() {
        return Err(SimError::usage(format!("no {what} given")).into());
    }
    Ok(out)
}

pub fn analyze(runs: &Path, group: &str, stats: &str, metrics: &str, out: &Path) -> Result<ExitCode> {
    let grouping = Grouping::parse(group)?;
    let omegas: Vec<Omega> = parse_list(stats, "statistics")?;
    let metrics: Vec<Metric> = parse_list(metrics, "metrics")?;
    let files = list_files(runs, "csv")?;
    if files.is_empty() {
        return Err(SimError::usage(format!("no runs files (*.csv) in {}", runs.display())).into());
    }

    let mut cells = Vec::new();
    for file in &files {
        let frame = read_runs_file(file)?;
        // the config copy written next to each runs file carries delta_HM
        let sibling = file.with_extension("json");
        let delta_hm = if sibling.is_file() {
            Some(load_config(&sibling)?.econ.delta.hm)
        } else {
            None
        };
        cells.extend(frame_cells(&frame, delta_hm, &metrics, grouping)?);
    }
    let aggregates = aggregate_cells(&cells, &omegas);
    write_summary_file(&cells, &omegas, &aggregates, out)?;
    println!(
        "summarized {} simulations: {} sim rows, {} aggregate rows -> {}",
        files.len(),
        cells.len() * omegas.len(),
        aggregates.len(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn print_report(bin: &str, report: &HmgReport) {
    for e in &report.entries {
        println!(
            "{bin} {} vs {} [{}] d={}: {}",
            e.interaction,
            e.baseline,
            e.omega,
            e.difficulty.map_or("all", |d| d.as_str()),
            format_gain(e.gain_pct)
        );
    }
}

pub fn hmg(summary: &Path, omega: &str, metric: &str, delta_bins: Option<&[f64]>, out: &Path) -> Result<ExitCode> {
    let omega: Omega = omega.parse()?;
    let metric: Metric = metric.parse()?;
    let summary = read_summary_file(summary)?;

    let Some(edges) = delta_bins else {
        let report = hmg_from_values(&summary.cells, omega, metric)?;
        let section = HmgSection {
            bin: None,
            report: Some(&report),
            note: None,
        };
        write_hmg_file(&[section], out)?;
        print_report("all", &report);
        return Ok(ExitCode::SUCCESS);
    };

    if !summary.cells.iter().any(|c| c.delta_hm.is_some()) {
        bail!(SimError::usage(
            "summary has no delta_hm values; analyze a runs directory that holds the config copies"
        ));
    }
    let reports = hmg_by_delta_values(&summary.cells, omega, metric, edges)?;
    if reports.iter().all(|r| r.report.is_none()) {
        let reasons: Vec<&str> = reports.iter().filter_map(|r| r.diagnostic.as_deref()).collect();
        bail!(SimError::usage(format!(
            "no bin yields an HMG table: {}",
            reasons.join("; ")
        )));
    }
    let sections: Vec<HmgSection<'_>> = reports
        .iter()
        .map(|r| HmgSection {
            bin: Some(r.bin),
            report: r.report.as_ref(),
            note: r.diagnostic.clone(),
        })
        .collect();
    write_hmg_file(&sections, out)?;
    for r in &reports {
        let label = r.bin.label();
        println!("{label}: {} simulations", r.simulations);
        match &r.report {
            Some(report) => print_report(&label, report),
            None => println!("{label}: {}", r.diagnostic.as_deref().unwrap_or("no table")),
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn costs(
    avg_price: f64,
    n_sales: f64,
    cost_fraction: f64,
    mape: f64,
    dev: f64,
    ops: f64,
    periods: f64,
) -> Result<ExitCode> {
    let inputs = [
        ("--avg-price", avg_price),
        ("--n-sales", n_sales),
        ("--cost-fraction", cost_fraction),
        ("--mape", mape),
        ("--dev", dev),
        ("--ops", ops),
        ("--periods", periods),
    ];
    for (flag, x) in inputs {
        if !x.is_finite() || x < 0.0 {
            bail!(SimError::usage(format!("{flag} must be a nonnegative number, got {x}")));
        }
    }
    let per_period = expected_error_cost(avg_price, n_sales, cost_fraction, mape);
    let total = skill_cost_total(per_period, dev, ops, periods);
    println!("error cost per period: {}", format_sig9(per_period));
    println!(
        "total cost over {} periods: {}",
        format_sig9(periods),
        format_sig9(total)
    );
    Ok(ExitCode::SUCCESS)
}
