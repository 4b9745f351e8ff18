//! File formats.
//!
//! * Config documents: pretty JSON, one scenario per `<config_id>.json`.
//! * Runs files: CSV with header `config_id,k,e,i,c,a,d,theta,y,v,err,u`
//!   (plus `theta_h,theta_m` in debug mode), rows in `(k, e, i)` order, reals
//!   rounded to 9 significant digits.
//! * Summary files: long-format CSV of per-simulation cell statistics
//!   (`row = sim`) followed by their cross-simulation means (`row = aggregate`).
//! * HMG files: one row per table cell; undefined gains are written `ND`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::analytics::{AggregateRow, CellKey, CellStats, CellValue, Central, DeltaBin, HmgReport, Metric};
use crate::config::SimulationConfig;
use crate::engine::{MetricFrame, MetricRecord};
use crate::error::{Result, SimError};
use crate::stats::Omega;
use crate::types::{Difficulty, InteractionKind, PolicyKind};

pub const RUNS_HEADER: [&str; 12] = ["config_id", "k", "e", "i", "c", "a", "d", "theta", "y", "v", "err", "u"];
pub const SUMMARY_HEADER: [&str; 12] = [
    "row",
    "config_id",
    "delta_hm",
    "metric",
    "policy",
    "interaction",
    "difficulty",
    "n",
    "stat",
    "value",
    "present",
    "total",
];
pub const HMG_HEADER: [&str; 10] = [
    "delta_bin",
    "omega",
    "metric",
    "baseline",
    "interaction",
    "difficulty",
    "hm_bar",
    "baseline_bar",
    "hmg",
    "note",
];

const ALL: &str = "all";

/// Shortest decimal string of `x` rounded to 9 significant digits.
/// Parsing the result and formatting again yields the same string.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("scientific notation parses");
    let mag = rounded.abs();
    if (1e-4..1e15).contains(&mag) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

fn csv_err(path: &Path, e: csv::Error) -> SimError {
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => SimError::io(path, io),
            _ => unreachable!(),
        },
        _ => SimError::parse(path, e.to_string()),
    }
}

fn field<'a>(rec: &'a csv::StringRecord, idx: usize, name: &str, path: &Path, line: u64) -> Result<&'a str> {
    rec.get(idx)
        .ok_or_else(|| SimError::parse(path, format!("line {line}: missing column `{name}`")))
}

fn parse_num<T: std::str::FromStr>(s: &str, name: &str, path: &Path, line: u64) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.parse()
        .map_err(|e| SimError::parse(path, format!("line {line}: column `{name}`: cannot parse `{s}`: {e}")))
}

fn parse_label<T: std::str::FromStr<Err = SimError>>(s: &str, path: &Path, line: u64) -> Result<T> {
    s.parse()
        .map_err(|e: SimError| SimError::parse(path, format!("line {line}: {e}")))
}

fn parse_opt<T: std::str::FromStr<Err = SimError>>(s: &str, path: &Path, line: u64) -> Result<Option<T>> {
    if s == ALL {
        Ok(None)
    } else {
        parse_label(s, path, line).map(Some)
    }
}

fn label<T: std::fmt::Display>(x: Option<T>) -> String {
    x.map_or_else(|| ALL.to_string(), |v| v.to_string())
}

// ---------------------------------------------------------------------------
// Runs files

pub fn write_runs<W: Write>(frame: &MetricFrame, out: W) -> std::result::Result<(), csv::Error> {
    let debug = frame.records.first().is_some_and(|r| r.draws.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = RUNS_HEADER.to_vec();
    if debug {
        header.extend(["theta_h", "theta_m"]);
    }
    w.write_record(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for r in &frame.records {
        row.clear();
        row.extend([
            frame.config_id.clone(),
            r.run.to_string(),
            r.epoch.to_string(),
            r.firm.to_string(),
            r.policy.to_string(),
            r.interaction.to_string(),
            r.difficulty.to_string(),
            format_sig9(r.theta),
            format_sig9(r.y),
            format_sig9(r.v),
            format_sig9(r.err),
            format_sig9(r.u),
        ]);
        if debug {
            let (h, m) = r.draws.unwrap_or((f64::NAN, f64::NAN));
            row.extend([format_sig9(h), format_sig9(m)]);
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn runs_to_bytes(frame: &MetricFrame) -> Vec<u8> {
    let mut buf = Vec::new();
    write_runs(frame, &mut buf).expect("writing to memory cannot fail");
    buf
}

pub fn write_runs_file(frame: &MetricFrame, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| SimError::io(path, e))?;
    write_runs(frame, BufWriter::new(file)).map_err(|e| csv_err(path, e))
}

/// Parses a runs file. `path` is only used in diagnostics.
pub fn read_runs<R: Read>(input: R, path: &Path) -> Result<MetricFrame> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let got: Vec<&str> = header.iter().collect();
    let debug = match got.len() {
        12 => false,
        14 if got[12..] == ["theta_h", "theta_m"] => true,
        _ => false,
    };
    if got[..got.len().min(12)] != RUNS_HEADER[..] || (got.len() != 12 && !debug) {
        return Err(SimError::parse(
            path,
            format!(
                "unexpected header `{}`; expected `{}`",
                got.join(","),
                RUNS_HEADER.join(",")
            ),
        ));
    }

    let mut config_id: Option<String> = None;
    let mut records = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = n as u64 + 2;
        let f = |i: usize| {
            field(
                &rec,
                i,
                RUNS_HEADER.get(i).copied().unwrap_or("theta_h/theta_m"),
                path,
                line,
            )
        };
        let id = f(0)?;
        match &config_id {
            None => config_id = Some(id.to_string()),
            Some(prev) if prev != id => {
                return Err(SimError::parse(
                    path,
                    format!("line {line}: config_id `{id}` differs from `{prev}`"),
                ))
            }
            _ => {}
        }
        let num = |i: usize| -> Result<f64> { parse_num(f(i)?, RUNS_HEADER[i], path, line) };
        records.push(MetricRecord {
            run: parse_num(f(1)?, "k", path, line)?,
            epoch: parse_num(f(2)?, "e", path, line)?,
            firm: parse_num(f(3)?, "i", path, line)?,
            policy: parse_label(f(4)?, path, line)?,
            interaction: parse_label(f(5)?, path, line)?,
            difficulty: parse_label(f(6)?, path, line)?,
            theta: num(7)?,
            y: num(8)?,
            v: num(9)?,
            err: num(10)?,
            u: num(11)?,
            draws: if debug {
                Some((
                    parse_num(f(12)?, "theta_h", path, line)?,
                    parse_num(f(13)?, "theta_m", path, line)?,
                ))
            } else {
                None
            },
        });
    }
    Ok(MetricFrame {
        config_id: config_id.unwrap_or_else(|| file_stem(path)),
        records,
    })
}

pub fn read_runs_file(path: &Path) -> Result<MetricFrame> {
    let file = File::open(path).map_err(|e| SimError::io(path, e))?;
    read_runs(BufReader::new(file), path)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

// ---------------------------------------------------------------------------
// Config documents

pub fn config_path(dir: &Path, cfg: &SimulationConfig) -> PathBuf {
    dir.join(format!("{}.json", cfg.config_id))
}

pub fn write_config(cfg: &SimulationConfig, dir: &Path) -> Result<PathBuf> {
    let path = config_path(dir, cfg);
    let mut text = cfg.to_json();
    text.push('\n');
    fs::write(&path, text).map_err(|e| SimError::io(&path, e))?;
    Ok(path)
}

/// `*.<ext>` files of a directory, sorted by name.
pub fn list_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| SimError::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| SimError::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|x| x == ext) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Loads every `*.json` config in `dir`. A document without a `config_id`
/// takes its file stem.
pub fn load_config_dir(dir: &Path) -> Result<Vec<(PathBuf, Result<SimulationConfig>)>> {
    Ok(list_files(dir, "json")?
        .into_iter()
        .map(|p| {
            let cfg = load_config(&p);
            (p, cfg)
        })
        .collect())
}

pub fn load_config(path: &Path) -> Result<SimulationConfig> {
    let mut cfg = SimulationConfig::load(path)?;
    if cfg.config_id.is_empty() {
        cfg.config_id = file_stem(path);
    }
    Ok(cfg)
}

// ---------------------------------------------------------------------------
// Summary files

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub cells: Vec<CellValue>,
    pub aggregates: Vec<AggregateRow>,
}

fn opt_num(x: Option<f64>) -> String {
    x.map(format_sig9).unwrap_or_default()
}

/// Writes sim rows (one per cell and statistic) and the aggregate rows.
pub fn write_summary<W: Write>(
    cells: &[CellStats],
    omegas: &[Omega],
    aggregates: &[AggregateRow],
    out: W,
) -> std::result::Result<(), csv::Error> {
    let values: Vec<(usize, CellValue)> = cells
        .iter()
        .flat_map(|c| omegas.iter().map(move |&o| (c.n, c.value(o))))
        .collect();
    write_summary_values(&values, aggregates, out)
}

fn key_fields(metric: Metric, key: &CellKey) -> [String; 4] {
    [
        metric.to_string(),
        label(key.policy),
        label(key.interaction),
        label(key.difficulty),
    ]
}

/// Like [`write_summary`] over already-flattened values paired with cell sizes.
pub fn write_summary_values<W: Write>(
    values: &[(usize, CellValue)],
    aggregates: &[AggregateRow],
    out: W,
) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for (n, v) in values {
        let [metric, policy, interaction, difficulty] = key_fields(v.metric, &v.key);
        w.write_record([
            "sim".to_string(),
            v.config_id.clone(),
            opt_num(v.delta_hm),
            metric,
            policy,
            interaction,
            difficulty,
            n.to_string(),
            v.omega.to_string(),
            opt_num(v.value),
            String::new(),
            String::new(),
        ])?;
    }
    for a in aggregates {
        let [metric, policy, interaction, difficulty] = key_fields(a.metric, &a.key);
        w.write_record([
            "aggregate".to_string(),
            String::new(),
            String::new(),
            metric,
            policy,
            interaction,
            difficulty,
            String::new(),
            a.omega.to_string(),
            format_sig9(a.central.value),
            a.central.present.to_string(),
            a.central.total.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_file(
    cells: &[CellStats],
    omegas: &[Omega],
    aggregates: &[AggregateRow],
    path: &Path,
) -> Result<()> {
    let file = File::create(path).map_err(|e| SimError::io(path, e))?;
    write_summary(cells, omegas, aggregates, BufWriter::new(file)).map_err(|e| csv_err(path, e))
}

pub fn read_summary<R: Read>(input: R, path: &Path) -> Result<Summary> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != SUMMARY_HEADER {
        return Err(SimError::parse(
            path,
            format!(
                "not a summary file (header `{}`)",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut out = Summary::default();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = n as u64 + 2;
        let f = |i: usize| field(&rec, i, SUMMARY_HEADER[i], path, line);
        let optf = |i: usize| -> Result<Option<f64>> {
            let s = f(i)?;
            if s.is_empty() {
                Ok(None)
            } else {
                parse_num(s, SUMMARY_HEADER[i], path, line).map(Some)
            }
        };
        let metric: Metric = parse_label(f(3)?, path, line)?;
        let key = CellKey {
            policy: parse_opt::<PolicyKind>(f(4)?, path, line)?,
            interaction: parse_opt::<InteractionKind>(f(5)?, path, line)?,
            difficulty: parse_opt::<Difficulty>(f(6)?, path, line)?,
        };
        let omega: Omega = parse_label(f(8)?, path, line)?;
        match f(0)? {
            "sim" => out.cells.push(CellValue {
                config_id: f(1)?.to_string(),
                delta_hm: optf(2)?,
                metric,
                key,
                omega,
                value: optf(9)?,
            }),
            "aggregate" => out.aggregates.push(AggregateRow {
                metric,
                key,
                omega,
                central: Central {
                    value: parse_num(f(9)?, "value", path, line)?,
                    present: parse_num(f(10)?, "present", path, line)?,
                    total: parse_num(f(11)?, "total", path, line)?,
                },
            }),
            other => {
                return Err(SimError::parse(
                    path,
                    format!("line {line}: unknown row kind `{other}`"),
                ))
            }
        }
    }
    Ok(out)
}

pub fn read_summary_file(path: &Path) -> Result<Summary> {
    let file = File::open(path).map_err(|e| SimError::io(path, e))?;
    read_summary(BufReader::new(file), path)
}

// ---------------------------------------------------------------------------
// HMG files

/// Percent gain as written to HMG files: one decimal with explicit sign, or `ND`.
pub fn format_gain(g: Option<f64>) -> String {
    match g {
        Some(g) => format!("{g:+.1}"),
        None => "ND".to_string(),
    }
}

/// One table of an HMG file; `bin` is `None` for the unbinned table.
#[derive(Debug, Clone)]
pub struct HmgSection<'a> {
    pub bin: Option<DeltaBin>,
    pub report: Option<&'a HmgReport>,
    pub note: Option<String>,
}

pub fn write_hmg<W: Write>(sections: &[HmgSection<'_>], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HMG_HEADER)?;
    for s in sections {
        let bin = s.bin.map_or_else(|| ALL.to_string(), |b| b.label());
        if let Some(note) = &s.note {
            w.write_record([bin.as_str(), "", "", "", "", "", "", "", "", note.as_str()])?;
        }
        let Some(report) = s.report else { continue };
        for e in &report.entries {
            w.write_record([
                bin.clone(),
                e.omega.to_string(),
                e.metric.to_string(),
                e.baseline.to_string(),
                e.interaction.to_string(),
                label(e.difficulty),
                format_sig9(e.hm_bar),
                format_sig9(e.baseline_bar),
                format_gain(e.gain_pct),
                String::new(),
            ])?;
        }
        for d in &report.diagnostics {
            w.write_record([bin.as_str(), "", "", "", "", "", "", "", "", d.as_str()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_hmg_file(sections: &[HmgSection<'_>], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| SimError::io(path, e))?;
    write_hmg(sections, BufWriter::new(file)).map_err(|e| csv_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{aggregate_cells, frame_cells, Grouping};
    use crate::engine::{run_simulation, run_simulation_with, RunOptions};
    use proptest::prelude::*;

    fn frame() -> MetricFrame {
        run_simulation(&SimulationConfig {
            n_firms: 2,
            n_epochs: 5,
            n_runs: 40,
            ..SimulationConfig::example()
        })
        .unwrap()
    }

    #[test]
    fn sig9_examples() {
        assert_eq!(format_sig9(0.5), "0.5");
        assert_eq!(format_sig9(0.123456789123), "0.123456789");
        assert_eq!(format_sig9(-0.62), "-0.62");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(2.0 / 3.0 * 1e-7), "6.66666667e-8");
    }

    proptest! {
        #[test]
        fn sig9_is_stable(x in -1e6f64..1e6) {
            let s = format_sig9(x);
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(format_sig9(back), s);
            prop_assert!((back - x).abs() <= 5e-9 * x.abs().max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn runs_round_trip() {
        let f = frame();
        let bytes = runs_to_bytes(&f);
        let text = std::str::from_utf8(&bytes).unwrap();
        assert!(text.starts_with("config_id,k,e,i,c,a,d,theta,y,v,err,u\n"));
        assert_eq!(text.lines().count(), 1 + 400);

        let back = read_runs(&bytes[..], Path::new("mem.csv")).unwrap();
        assert_eq!(back.config_id, f.config_id);
        assert_eq!(back.records.len(), f.records.len());
        for (a, b) in f.records.iter().zip(&back.records) {
            assert_eq!(
                (a.run, a.epoch, a.firm, a.policy, a.interaction, a.difficulty),
                (b.run, b.epoch, b.firm, b.policy, b.interaction, b.difficulty)
            );
            for (x, y) in [(a.theta, b.theta), (a.y, b.y), (a.v, b.v), (a.err, b.err), (a.u, b.u)] {
                assert!((x - y).abs() <= 5e-9 * x.abs().max(1e-300));
            }
        }
        assert_eq!(runs_to_bytes(&back), bytes);
    }

    #[test]
    fn debug_columns_round_trip() {
        let cfg = SimulationConfig {
            n_runs: 5,
            ..SimulationConfig::example()
        };
        let f = run_simulation_with(&cfg, RunOptions { record_draws: true }).unwrap();
        let bytes = runs_to_bytes(&f);
        assert!(bytes.starts_with(b"config_id,k,e,i,c,a,d,theta,y,v,err,u,theta_h,theta_m\n"));
        let back = read_runs(&bytes[..], Path::new("mem.csv")).unwrap();
        assert!(back.records.iter().all(|r| r.draws.is_some()));
        assert_eq!(runs_to_bytes(&back), bytes);
    }

    #[test]
    fn runs_rejects_bad_input() {
        let bad_header = "config_id,k,e\nx,1,0\n";
        assert!(read_runs(bad_header.as_bytes(), Path::new("a.csv")).is_err());
        let bad_label = "config_id,k,e,i,c,a,d,theta,y,v,err,u\nx,1,0,0,Q,individual,Low,0.5,0.5,0.5,0,0.5\n";
        let err = read_runs(bad_label.as_bytes(), Path::new("a.csv")).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let mixed = "config_id,k,e,i,c,a,d,theta,y,v,err,u\nx,1,0,0,H,individual,Low,0.5,0.5,0.5,0,0.5\ny,1,0,0,H,individual,Low,0.5,0.5,0.5,0,0.5\n";
        assert!(read_runs(mixed.as_bytes(), Path::new("a.csv")).is_err());
    }

    #[test]
    fn summary_round_trip() {
        let cells = frame_cells(&frame(), Some(0.3), &Metric::ALL, Grouping::full()).unwrap();
        let aggs = aggregate_cells(&cells, &Omega::ALL);
        let mut buf = Vec::new();
        write_summary(&cells, &Omega::ALL, &aggs, &mut buf).unwrap();
        let back = read_summary(&buf[..], Path::new("s.csv")).unwrap();
        assert_eq!(back.cells.len(), cells.len() * 5);
        assert_eq!(back.aggregates.len(), aggs.len());
        assert!(back.cells.iter().all(|c| c.delta_hm == Some(0.3)));
        for (a, b) in aggs.iter().zip(&back.aggregates) {
            assert_eq!((a.metric, a.key, a.omega), (b.metric, b.key, b.omega));
            assert!((a.central.value - b.central.value).abs() <= 5e-9 * a.central.value.abs().max(1e-12));
        }
    }

    #[test]
    fn gain_format() {
        assert_eq!(format_gain(Some(100.0)), "+100.0");
        assert_eq!(format_gain(Some(-12.34)), "-12.3");
        assert_eq!(format_gain(Some(0.0)), "+0.0");
        assert_eq!(format_gain(None), "ND");
    }

    #[test]
    fn config_dir_loading() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = SimulationConfig::example();
        cfg.config_id = "b".into();
        write_config(&cfg, dir.path()).unwrap();
        fs::write(dir.path().join("a.json"), "{\"n_firms\": 1}").unwrap();
        let mut anon = SimulationConfig::example();
        anon.config_id.clear();
        fs::write(dir.path().join("c.json"), anon.to_json()).unwrap();
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();

        let loaded = load_config_dir(dir.path()).unwrap();
        assert_eq!(loaded.len(), 3);
        assert!(loaded[0].1.is_err());
        assert_eq!(loaded[1].1.as_ref().unwrap(), &cfg);
        assert_eq!(loaded[2].1.as_ref().unwrap().config_id, "c");
    }
}
