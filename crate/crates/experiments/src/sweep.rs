//! Sweep specifications, parallel execution and the result CSV schema.

use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use swarm_mec::trainer::Mode;
use swarm_mec::SimConfig;
use thiserror::Error;

use crate::config_file::{apply_key, split_line};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("sweep spec: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {err}")]
    Io { path: String, err: String },
    #[error("malformed CSV line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

/// Parameter swept across cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Device count `K`.
    Devices,
    /// UAV speed `v`.
    Speed,
    /// Leader application slots `S_L`.
    LeaderAppSlots,
    /// Small grid side `q`.
    SmallGrid,
}

impl SweepParam {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParam::Devices => "K",
            SweepParam::Speed => "v",
            SweepParam::LeaderAppSlots => "S_L",
            SweepParam::SmallGrid => "q",
        }
    }

    pub fn apply(&self, cfg: &mut SimConfig, value: f64) {
        match self {
            SweepParam::Devices => cfg.devices = value.round() as usize,
            SweepParam::Speed => cfg.speed_mps = value,
            SweepParam::LeaderAppSlots => cfg.leader_app_slots = value.round() as u16,
            SweepParam::SmallGrid => cfg.small_grid_m = value,
        }
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "K" => Ok(SweepParam::Devices),
            "v" => Ok(SweepParam::Speed),
            "S_L" => Ok(SweepParam::LeaderAppSlots),
            "q" => Ok(SweepParam::SmallGrid),
            other => Err(format!("unknown sweep parameter '{other}' (one of K, v, S_L, q)")),
        }
    }
}

/// One experiment design: a swept parameter, the modes and seeds to run,
/// and base-config overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub modes: Vec<Mode>,
    pub seeds: Vec<u64>,
    pub overrides: Vec<(String, String)>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.values.is_empty() {
            return Err(SweepError::Invalid("value list is empty".into()));
        }
        if self.modes.is_empty() {
            return Err(SweepError::Invalid("mode list is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(SweepError::Invalid("seed list is empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for s in &self.seeds {
            if !seen.insert(s) {
                return Err(SweepError::Invalid(format!("duplicate seed {s}")));
            }
        }
        Ok(())
    }

    /// Materializes the config for one sweep cell.
    pub fn cell_config(
        &self,
        base: &SimConfig,
        value: f64,
        seed: u64,
    ) -> Result<SimConfig, String> {
        let mut cfg = base.clone();
        for (key, v) in &self.overrides {
            apply_key(&mut cfg, key, v)?;
        }
        self.param.apply(&mut cfg, value);
        cfg.seed = seed;
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

fn parse_list<T: FromStr>(value: &str, what: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(|item| {
            let item = item.trim();
            item.parse::<T>()
                .map_err(|e| format!("bad {what} '{item}': {e}"))
        })
        .collect()
}

/// Parses a sweep spec file: `param`, `values`, `modes`, `seeds` and
/// `override.<config key>` assignments.
pub fn parse_sweep_spec(text: &str) -> Result<SweepSpec, SweepError> {
    let mut param: Option<SweepParam> = None;
    let mut values = Vec::new();
    let mut modes = Vec::new();
    let mut seeds = Vec::new();
    let mut overrides = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let fail = |msg: String| SweepError::Parse {
            line: idx + 1,
            msg,
        };
        let Some((key, value)) = split_line(line).map_err(&fail)? else {
            continue;
        };
        match key {
            "param" => param = Some(value.parse().map_err(&fail)?),
            "values" => values = parse_list(value, "value").map_err(&fail)?,
            "modes" => modes = parse_list(value, "mode").map_err(&fail)?,
            "seeds" => seeds = parse_list(value, "seed").map_err(&fail)?,
            _ => match key.strip_prefix("override.") {
                Some(cfg_key) => overrides.push((cfg_key.to_string(), value.to_string())),
                None => return Err(fail(format!("unknown key '{key}'"))),
            },
        }
    }
    let spec = SweepSpec {
        param: param.ok_or_else(|| SweepError::Invalid("missing 'param'".into()))?,
        values,
        modes,
        seeds,
        overrides,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn load_sweep_spec(path: &Path) -> Result<SweepSpec, SweepError> {
    let text = fs::read_to_string(path).map_err(|e| SweepError::Io {
        path: path.display().to_string(),
        err: e.to_string(),
    })?;
    parse_sweep_spec(&text)
}

/// One sweep cell's results. Failed cells carry NaN metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub param: String,
    pub value: f64,
    pub mode: String,
    pub seed: u64,
    pub mean_effi: f64,
    pub sum_over_loop: f64,
    pub bits_served: f64,
    pub joules_total: f64,
    pub wall_s: f64,
}

pub const CSV_HEADER: &str =
    "sweep_param,value,mode,seed,mean_effi,sum_over_loop,bits_served,joules_total,wall_s";

impl ResultRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{:.3}",
            self.param,
            self.value,
            self.mode,
            self.seed,
            self.mean_effi,
            self.sum_over_loop,
            self.bits_served,
            self.joules_total,
            self.wall_s
        )
    }
}

/// Builds a result row by training one cell.
pub fn run_cell(cfg: &SimConfig, mode: Mode, param: &str, value: f64) -> ResultRow {
    let start = Instant::now();
    match swarm_mec::run_training(cfg, mode) {
        Ok(out) => ResultRow {
            param: param.to_string(),
            value,
            mode: mode.as_str().to_string(),
            seed: cfg.seed,
            mean_effi: out.mean_effi,
            sum_over_loop: out.sum_over_loop,
            bits_served: out.bits_served,
            joules_total: out.energy_j,
            wall_s: start.elapsed().as_secs_f64(),
        },
        Err(e) => {
            eprintln!(
                "cell {param}={value} mode={mode} seed={}: {e}",
                cfg.seed
            );
            ResultRow {
                param: param.to_string(),
                value,
                mode: mode.as_str().to_string(),
                seed: cfg.seed,
                mean_effi: f64::NAN,
                sum_over_loop: f64::NAN,
                bits_served: f64::NAN,
                joules_total: f64::NAN,
                wall_s: start.elapsed().as_secs_f64(),
            }
        }
    }
}

/// Runs every (value, mode, seed) cell, in parallel up to `jobs` threads
/// (0 = one thread per core). Row order is deterministic regardless of
/// scheduling; cell failures become NaN rows and the sweep continues.
pub fn run_sweep(spec: &SweepSpec, base: &SimConfig, jobs: usize) -> Result<Vec<ResultRow>, SweepError> {
    spec.validate()?;
    let mut cells = Vec::new();
    for &value in &spec.values {
        for &mode in &spec.modes {
            for &seed in &spec.seeds {
                cells.push((value, mode, seed));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| SweepError::Invalid(format!("thread pool: {e}")))?;
    let rows = pool.install(|| {
        use rayon::prelude::*;
        cells
            .par_iter()
            .map(|&(value, mode, seed)| match spec.cell_config(base, value, seed) {
                Ok(cfg) => run_cell(&cfg, mode, spec.param.as_str(), value),
                Err(msg) => {
                    eprintln!("cell {}={value} mode={mode} seed={seed}: {msg}", spec.param.as_str());
                    ResultRow {
                        param: spec.param.as_str().to_string(),
                        value,
                        mode: mode.as_str().to_string(),
                        seed,
                        mean_effi: f64::NAN,
                        sum_over_loop: f64::NAN,
                        bits_served: f64::NAN,
                        joules_total: f64::NAN,
                        wall_s: 0.0,
                    }
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(rows)
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

/// Parses a result CSV produced by [`rows_to_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>, SweepError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        Some((_, other)) => {
            return Err(SweepError::Csv {
                line: 1,
                msg: format!("unexpected header '{other}'"),
            })
        }
        None => {
            return Err(SweepError::Csv {
                line: 1,
                msg: "empty file".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(SweepError::Csv {
                line: idx + 1,
                msg: format!("expected 9 fields, got {}", fields.len()),
            });
        }
        let num = |i: usize| -> Result<f64, SweepError> {
            fields[i].parse().map_err(|_| SweepError::Csv {
                line: idx + 1,
                msg: format!("bad number '{}'", fields[i]),
            })
        };
        rows.push(ResultRow {
            param: fields[0].to_string(),
            value: num(1)?,
            mode: fields[2].to_string(),
            seed: fields[3].parse().map_err(|_| SweepError::Csv {
                line: idx + 1,
                msg: format!("bad seed '{}'", fields[3]),
            })?,
            mean_effi: num(4)?,
            sum_over_loop: num(5)?,
            bits_served: num(6)?,
            joules_total: num(7)?,
            wall_s: num(8)?,
        });
    }
    Ok(rows)
}
