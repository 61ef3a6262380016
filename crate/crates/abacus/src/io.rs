//! CSV ingestion and report emission.
//!
//! All formats are plain text: numeric CSVs for matrices, `key=value`
//! lines for metadata and ground-truth sidecars. Indices in files are
//! 1-based. Numbers are written with 17 significant digits so files
//! round-trip exactly; infinite cutoffs serialize as the literal `inf`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::model::{ChangeKind, ChangeReport, ObservationMatrix};

/// Whether CSV rows are channels or sequential indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    #[default]
    ChannelsAsRows,
    ChannelsAsColumns,
}

/// Load a rectangular numeric CSV as an observation matrix.
///
/// An optional header row is skipped. With `standardize`, each channel is
/// centered to mean zero and scaled to unit standard deviation
/// (zero-variance channels are centered only).
pub fn load_csv(
    path: impl AsRef<Path>,
    orientation: Orientation,
    standardize: bool,
) -> Result<ObservationMatrix> {
    let text = fs::read_to_string(path.as_ref())?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    let mut header_skipped = false;
    for (line_no, line) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let cells: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, (usize, String)> = cells
            .iter()
            .enumerate()
            .map(|(col, cell)| {
                cell.parse::<f64>()
                    .map_err(|_| (col + 1, format!("cannot parse {cell:?} as a number")))
            })
            .collect();
        match parsed {
            Ok(values) => {
                if let Some(w) = width {
                    if values.len() != w {
                        return Err(Error::RaggedCsv {
                            line: line_no,
                            expected: w,
                            found: values.len(),
                        });
                    }
                } else {
                    width = Some(values.len());
                }
                rows.push(values);
            }
            Err((column, message)) => {
                // A non-numeric first row is a header; anything later is
                // a real parse failure.
                if rows.is_empty() && !header_skipped {
                    header_skipped = true;
                    continue;
                }
                return Err(Error::CsvParse {
                    line: line_no,
                    column,
                    message,
                });
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("no numeric rows in csv".into()));
    }
    let (nrows, ncols) = (rows.len(), rows[0].len());
    let mut values = Array2::zeros((nrows, ncols));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            values[(i, j)] = v;
        }
    }
    if orientation == Orientation::ChannelsAsColumns {
        values = values.t().to_owned();
    }
    if standardize {
        standardize_channels(&mut values);
    }
    ObservationMatrix::new(values)
}

/// Center each row to mean zero; scale rows with nonzero standard
/// deviation to unit standard deviation.
pub fn standardize_channels(values: &mut Array2<f64>) {
    let (p, n) = values.dim();
    for i in 0..p {
        let mean = values.row(i).sum() / n as f64;
        let mut max_abs = 0.0_f64;
        for j in 0..n {
            max_abs = max_abs.max(values[(i, j)].abs());
            values[(i, j)] -= mean;
        }
        let var = values.row(i).iter().map(|x| x * x).sum::<f64>() / (n as f64 - 1.0);
        let sd = var.sqrt();
        if sd > 1e-12 * max_abs.max(1e-300) {
            for j in 0..n {
                values[(i, j)] /= sd;
            }
        }
    }
}

/// 17 significant digits: enough to round-trip any f64 exactly.
pub fn format_number(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.16e}")
}

fn write_matrix_csv(path: &Path, m: &Array2<f64>) -> Result<()> {
    let mut out = String::new();
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|&x| format_number(x)).collect();
        writeln!(out, "{}", line.join(",")).expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_vector_csv(path: &Path, v: &Array1<f64>) -> Result<()> {
    let mut out = String::new();
    for &x in v.iter() {
        writeln!(out, "{}", format_number(x)).expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

/// File names produced by [`emit_report`].
pub const CHANGES_FILE: &str = "changes.csv";
pub const SOURCES_FILE: &str = "sources.csv";
pub const MIXING_FILE: &str = "mixing.csv";
pub const NOISE_FILE: &str = "noise.csv";
pub const META_FILE: &str = "run_meta.txt";

/// Metadata recorded alongside a report.
#[derive(Debug, Clone)]
pub struct RunMeta {
    pub seed: u64,
    pub k: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub delta: f64,
}

/// Write a change report into `out_dir`: the change list, the recovered
/// sources / mixing / noise, and a run-metadata file. Returns the paths
/// written.
pub fn emit_report(
    report: &ChangeReport,
    meta: &RunMeta,
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir)?;

    let mut changes: Vec<(usize, ChangeKind, f64)> = report
        .cpt0
        .iter()
        .map(|&i| (i, ChangeKind::AdditiveOutlier, report.g0_hat[i - 1]))
        .chain(
            report
                .cpt1
                .iter()
                .map(|&i| (i, ChangeKind::LevelShift, report.g1_hat[i - 1])),
        )
        .collect();
    changes.sort_by_key(|&(i, _, _)| i);
    let mut text = String::from("index,type,g_value\n");
    for (index, kind, g) in changes {
        writeln!(text, "{index},{},{}", kind.label(), format_number(g)).expect("string write");
    }
    let changes_path = dir.join(CHANGES_FILE);
    fs::write(&changes_path, text)?;

    let sources_path = dir.join(SOURCES_FILE);
    write_matrix_csv(&sources_path, &report.s_hat)?;
    let mixing_path = dir.join(MIXING_FILE);
    write_matrix_csv(&mixing_path, &report.m_hat)?;
    let noise_path = dir.join(NOISE_FILE);
    write_vector_csv(&noise_path, &report.psi_hat)?;

    let meta_path = dir.join(META_FILE);
    let meta_text = format!(
        "seed={}\nk={}\niterations={}\nburn_in={}\ndelta={}\ncutoff0={}\ncutoff1={}\n",
        meta.seed,
        meta.k,
        meta.iterations,
        meta.burn_in,
        format_number(meta.delta),
        format_number(report.cutoff0),
        format_number(report.cutoff1),
    );
    fs::write(&meta_path, meta_text)?;

    Ok(vec![
        changes_path,
        sources_path,
        mixing_path,
        noise_path,
        meta_path,
    ])
}

/// Write a simulated dataset: the observations as CSV plus a key=value
/// truth sidecar with the planted change locations.
pub fn emit_fixture(
    y: &ObservationMatrix,
    truth: &crate::simgen::GroundTruth,
    cfg: &crate::simgen::SimConfig,
    data_path: impl AsRef<Path>,
    truth_path: impl AsRef<Path>,
) -> Result<()> {
    write_matrix_csv(data_path.as_ref(), y.values())?;
    let join = |locs: &[usize]| {
        locs.iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    let text = format!(
        "p={}\nn={}\nr={}\nseed={}\nao_locs={}\nls_locs={}\n",
        cfg.p,
        cfg.n,
        cfg.r,
        cfg.seed,
        join(&truth.ao_locs),
        join(&truth.ls_locs),
    );
    fs::write(truth_path.as_ref(), text)?;
    Ok(())
}

/// Parse a key=value sidecar (or any key=value text) into pairs.
pub fn parse_key_values(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|line| {
            let line = line.trim();
            if line.is_empty() {
                return None;
            }
            line.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

/// Read the AO and LS location lists from a truth sidecar.
pub fn load_truth_locations(path: impl AsRef<Path>) -> Result<(Vec<usize>, Vec<usize>)> {
    let text = fs::read_to_string(path.as_ref())?;
    let pairs = parse_key_values(&text);
    let parse_list = |key: &str| -> Result<Vec<usize>> {
        let raw = pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| Error::InvalidArgument(format!("missing {key} in truth file")))?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("bad index {tok:?} in {key}")))
            })
            .collect()
    };
    Ok((parse_list("ao_locs")?, parse_list("ls_locs")?))
}

/// Read the AO and LS estimate lists from an emitted changes file.
pub fn load_changes_file(path: impl AsRef<Path>) -> Result<(Vec<usize>, Vec<usize>)> {
    let text = fs::read_to_string(path.as_ref())?;
    let mut ao = Vec::new();
    let mut ls = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line_no == 0 {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() < 2 {
            return Err(Error::CsvParse {
                line: line_no + 1,
                column: 1,
                message: "expected index,type,g_value".into(),
            });
        }
        let index: usize = cells[0].parse().map_err(|_| Error::CsvParse {
            line: line_no + 1,
            column: 1,
            message: format!("cannot parse index {:?}", cells[0]),
        })?;
        match cells[1] {
            "AO" => ao.push(index),
            "LS" => ls.push(index),
            other => {
                return Err(Error::CsvParse {
                    line: line_no + 1,
                    column: 2,
                    message: format!("unknown change type {other:?}"),
                })
            }
        }
    }
    ao.sort_unstable();
    ls.sort_unstable();
    Ok((ao, ls))
}
