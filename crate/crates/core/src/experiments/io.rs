//! CSV reports and mesh dumps.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mlmc::{LevelSummary, MlmcEstimate, SampleRecord};

pub const LEVELS_HEADER: [&str; 5] = ["level", "elems", "cost_per_sample", "n_samples", "variance"];
pub const SUMMARY_HEADER: [&str; 7] = [
    "total_variance",
    "squared_bias",
    "mse",
    "estimate",
    "total_cost",
    "n_levels",
    "converged",
];
pub const SAMPLES_HEADER: [&str; 9] = [
    "sample_id",
    "level",
    "index",
    "parameters",
    "q_fine",
    "q_coarse",
    "y",
    "error_estimate",
    "denominator",
];

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn levels_csv(est: &MlmcEstimate) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(LEVELS_HEADER)?;
    for l in &est.levels {
        w.write_record([
            l.level.to_string(),
            l.elems.to_string(),
            fmt_f64(l.cost_per_sample),
            l.n_samples.to_string(),
            fmt_f64(l.variance),
        ])?;
    }
    finish(w)
}

pub fn summary_csv(est: &MlmcEstimate) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER)?;
    w.write_record([
        fmt_f64(est.total_variance),
        fmt_f64(est.squared_bias),
        fmt_f64(est.mse),
        fmt_f64(est.value),
        fmt_f64(est.total_cost),
        est.n_levels().to_string(),
        est.converged.to_string(),
    ])?;
    finish(w)
}

pub fn samples_csv(samples: &[SampleRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SAMPLES_HEADER)?;
    for s in samples {
        let params: Vec<String> = s.parameters.iter().map(|&x| fmt_f64(x)).collect();
        w.write_record([
            format!("{}:{}", s.level, s.index),
            s.level.to_string(),
            s.index.to_string(),
            params.join(";"),
            fmt_f64(s.q_fine),
            fmt_f64(s.q_coarse),
            fmt_f64(s.y),
            fmt_opt(s.error_estimate),
            fmt_opt(s.denominator),
        ])?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Parses `levels.csv` back into per-level rows (`mean` is not stored and reads as NaN).
pub fn parse_levels_csv(text: &str) -> Result<Vec<LevelSummary>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != LEVELS_HEADER {
        return Err(Error::Io(format!("unexpected levels.csv header {header:?}")));
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let field = |k: usize| -> Result<&str> {
                rec.get(k).ok_or_else(|| Error::Io(format!("row {}: missing column {k}", i + 1)))
            };
            let bad = |k: usize| Error::Io(format!("row {}: bad value in column {}", i + 1, LEVELS_HEADER[k]));
            Ok(LevelSummary {
                level: field(0)?.parse().map_err(|_| bad(0))?,
                elems: field(1)?.parse().map_err(|_| bad(1))?,
                cost_per_sample: field(2)?.parse().map_err(|_| bad(2))?,
                n_samples: field(3)?.parse().map_err(|_| bad(3))?,
                variance: field(4)?.parse().map_err(|_| bad(4))?,
                mean: f64::NAN,
            })
        })
        .collect()
}

/// Writes `levels.csv`, `summary.csv`, `samples.csv` and, if requested, `grid_L<l>.txt`.
pub fn write_reports(dir: &Path, est: &MlmcEstimate, dump_grids: bool) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("levels.csv"), levels_csv(est)?)?;
    fs::write(dir.join("summary.csv"), summary_csv(est)?)?;
    fs::write(dir.join("samples.csv"), samples_csv(&est.samples)?)?;
    if dump_grids {
        for (l, mesh) in est.meshes.iter().enumerate() {
            fs::write(dir.join(format!("grid_L{l}.txt")), mesh.to_dump())?;
        }
    }
    Ok(())
}
